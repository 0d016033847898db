use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ellnormal::pipeline::{run_pipeline, run_stage, PipelineConfig, RunReport, Stage, StageReport};

#[derive(Parser)]
#[command(name = "ellnormal", version, about = "Secant ideals, Klein matrices, Poisson brackets and Cremona maps of elliptic normal curves over F_p")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage for the given n and check all identities. Exits 0 iff everything passes.
    Verify {
        #[command(flatten)]
        params: Params,
        /// Artifact directory; receives report.json and manifest.json.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Run a single stage instead, reading its inputs from --from or --out.
        #[arg(long)]
        stage: Option<Stage>,
        /// Directory holding the inputs of --stage.
        #[arg(long, requires = "stage")]
        from: Option<PathBuf>,
    },
    /// Print the effective configuration as JSON.
    Config {
        #[command(flatten)]
        params: Params,
    },
    /// List the stages for the given n in execution order.
    Stages {
        #[arg(long, default_value_t = 5)]
        n: usize,
    },
}

#[derive(Args)]
struct Params {
    /// JSON config file; explicit flags take precedence over its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    prime: Option<u64>,
    /// Curve y^2 = x^3 + a x + b.
    #[arg(long)]
    a: Option<u64>,
    #[arg(long)]
    b: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Samples beyond the number of unknowns in each interpolation.
    #[arg(long)]
    margin: Option<usize>,
    /// Random trials for the pointwise, rank and Szegő checks.
    #[arg(long)]
    trials: Option<usize>,
}

impl Params {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => PipelineConfig::default(),
        };
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { cfg.$f = v; })* };
        }
        take!(n, prime, a, b, seed, margin, trials);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_stage(s: &StageReport) {
    let dim = s.dim.map(|d| format!(" dim={d}")).unwrap_or_default();
    let status = if s.pass { "PASS" } else { "FAIL" };
    println!("{status} {:<14} {:>8.2}s{dim}", s.stage.name(), s.seconds);
    if let Some(e) = &s.error {
        println!("     {e}");
    }
}

fn print_report(r: &RunReport, out: &Path) {
    r.stages.iter().for_each(print_stage);
    let dims: Vec<String> = r.dims.iter().map(|d| d.to_string()).collect();
    println!("dims ({})", dims.join(", "));
    if let Some(hint) = &r.hint {
        println!("hint: {hint}");
    }
    println!("{} report {}", if r.pass { "PASS" } else { "FAIL" }, out.join("report.json").display());
}

fn exit(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Verify {
            params,
            out,
            stage: None,
            ..
        } => {
            let cfg = params.resolve()?;
            let report = run_pipeline(&cfg, Some(&out))?;
            print_report(&report, &out);
            Ok(exit(report.pass))
        }
        Command::Verify {
            params,
            out,
            stage: Some(stage),
            from,
        } => {
            let cfg = params.resolve()?;
            if !cfg.stages().contains(&stage) {
                bail!("stage {stage} does not apply to n = {}", cfg.n);
            }
            let rec = run_stage(&cfg, stage, &out, from.as_deref())?;
            print_stage(&rec);
            Ok(exit(rec.pass))
        }
        Command::Config { params } => {
            println!("{}", serde_json::to_string_pretty(&params.resolve()?)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Stages { n } => {
            let cfg = PipelineConfig {
                n,
                ..PipelineConfig::default()
            };
            cfg.validate()?;
            for s in cfg.stages() {
                println!("{:<14} {}", s.name(), s.artifact());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
