//! Staged runs with persisted artifacts and a pass/fail report.
//!
//! Odd `n`: secant ideal and hypersurface, the Klein matrix `Φ`, its forward
//! and inverse Cremona maps, then `Ω` from `∇F` with its Poisson, pfaffian,
//! Szegő and rank checks. Even `n`: the pair `F1, F2`, then `Ω` and its checks.
//! Every stage reads its inputs from memory or, when run alone, from the
//! artifact directory.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use log::info;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::cremona::{
    composition_factor, forward_map, kernel_check, no_common_factor, rank_profile, sigma, sigma_residuals,
    KleinTensor, RankProfile,
};
use crate::curve::{embed, secant_sample, Curve};
use crate::error::{Error, Result};
use crate::field::{validate_prime, DynPrime, PrimeField, MERSENNE_61, PRIME_62};
use crate::interpolate::{secant_ci_pair, secant_hypersurface, secant_ideal_generators, VanishingSpace, DEFAULT_MARGIN};
use crate::json::{read_json, to_pretty, write_json, PointsDoc, PolyDoc, PolyMapDoc, SkewDoc, SzegoDoc, VanishingDoc};
use crate::linalg::Matrix;
use crate::pfaffian::sub_pfaffians;
use crate::poisson::{PoissonReport, QuadraticBracket};
use crate::poly::{echelon_span, euler_integrate, map_proportionality, monomials, proportionality, MultiPoly, PolyMap};
use crate::skew::{is_solution, skew_syzygy, SkewPolyMatrix, SyzygyProblem};
use crate::szego::{compare_brackets, SzegoReport};
use crate::{Fp61, Fp62, FpDyn};

/// Largest supported `n`; beyond it the monomial packing runs out of room.
pub const MAX_N: usize = 15;

mod decimal {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Text(String),
        Number(u64),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(s) => s.trim().parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Everything that determines a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub n: usize,
    #[serde(with = "decimal")]
    pub prime: u64,
    #[serde(with = "decimal")]
    pub a: u64,
    #[serde(with = "decimal")]
    pub b: u64,
    pub seed: u64,
    pub margin: usize,
    pub trials: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            n: 5,
            prime: MERSENNE_61,
            a: 1,
            b: 1,
            seed: 0,
            margin: DEFAULT_MARGIN,
            trials: 20,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(5..=MAX_N).contains(&self.n) {
            return Err(Error::InvalidInput(format!("n must lie in 5..={MAX_N}, got {}", self.n)));
        }
        validate_prime(self.prime)?;
        if self.a >= self.prime || self.b >= self.prime {
            return Err(Error::InvalidInput("curve coefficients must be residues below the prime".into()));
        }
        if self.margin == 0 {
            return Err(Error::InvalidInput("margin must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be positive".into()));
        }
        Ok(())
    }

    pub fn is_odd(&self) -> bool {
        self.n % 2 == 1
    }

    /// Hex SHA-256 of the pretty-printed config.
    pub fn digest(&self) -> String {
        hex(&Sha256::digest(to_pretty(self).as_bytes()))
    }

    pub fn stages(&self) -> &'static [Stage] {
        use Stage::*;
        if self.is_odd() {
            &[
                CurveSample,
                Ideal,
                SecantEq,
                Klein,
                Pfaffians,
                Sigma,
                CremonaCheck,
                Omega,
                PoissonCheck,
                SzegoCheck,
                RankProfile,
            ]
        } else {
            &[CurveSample, SecantEq, Omega, PoissonCheck, SzegoCheck]
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    CurveSample,
    Ideal,
    SecantEq,
    Klein,
    Pfaffians,
    Sigma,
    CremonaCheck,
    Omega,
    PoissonCheck,
    SzegoCheck,
    RankProfile,
}

impl Stage {
    pub const ALL: [Stage; 11] = [
        Stage::CurveSample,
        Stage::Ideal,
        Stage::SecantEq,
        Stage::Klein,
        Stage::Pfaffians,
        Stage::Sigma,
        Stage::CremonaCheck,
        Stage::Omega,
        Stage::PoissonCheck,
        Stage::SzegoCheck,
        Stage::RankProfile,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::CurveSample => "curve-sample",
            Stage::Ideal => "ideal",
            Stage::SecantEq => "secant-eq",
            Stage::Klein => "klein",
            Stage::Pfaffians => "pfaffians",
            Stage::Sigma => "sigma",
            Stage::CremonaCheck => "cremona-check",
            Stage::Omega => "omega",
            Stage::PoissonCheck => "poisson-check",
            Stage::SzegoCheck => "szego-check",
            Stage::RankProfile => "rank-profile",
        }
    }

    /// The file the stage writes.
    pub fn artifact(self) -> &'static str {
        match self {
            Stage::CurveSample => "samples.json",
            Stage::Ideal => "ideal.json",
            Stage::SecantEq => "secant.json",
            Stage::Klein => "phi.json",
            Stage::Pfaffians => "forward.json",
            Stage::Sigma => "inverse.json",
            Stage::CremonaCheck => "composition.json",
            Stage::Omega => "omega.json",
            Stage::PoissonCheck => "poisson.json",
            Stage::SzegoCheck => "szego.json",
            Stage::RankProfile => "ranks.json",
        }
    }

    /// Seed of the random stream private to this stage.
    pub fn seed(self, seed: u64) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(self as u64 + 1);
        rng.next_u64()
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown stage {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: Stage,
    pub pass: bool,
    pub seconds: f64,
    /// Dimension of the space the stage computes, if any.
    pub dim: Option<usize>,
    pub checks: Map<String, Value>,
    pub artifacts: Vec<String>,
    pub error: Option<String>,
}

impl StageReport {
    fn new(stage: Stage) -> Self {
        StageReport {
            stage,
            pass: false,
            seconds: 0.0,
            dim: None,
            checks: Map::new(),
            artifacts: Vec::new(),
            error: None,
        }
    }

    fn note(&mut self, key: &str, value: impl Serialize) {
        self.checks
            .insert(key.to_string(), serde_json::to_value(value).expect("plain data"));
    }

    /// Records a boolean check and fails the stage when it does not hold.
    fn require(&mut self, key: &str, ok: bool) -> Result<()> {
        self.note(key, ok);
        if ok {
            Ok(())
        } else {
            Err(Error::IdentityFailure(key.replace('_', " ")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub pass: bool,
    /// Odd `n`: quadrics, hypersurface, Klein space, `Ω` space. Even `n`:
    /// the pair, `Ω` space.
    pub dims: Vec<usize>,
    pub stages: Vec<StageReport>,
    pub failure: Option<String>,
    pub hint: Option<String>,
}

impl RunReport {
    pub fn stage(&self, stage: Stage) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.stage == stage)
    }

    pub fn seconds(&self, stages: &[Stage]) -> f64 {
        self.stages
            .iter()
            .filter(|s| stages.contains(&s.stage))
            .map(|s| s.seconds)
            .sum()
    }

    /// A copy with every timing zeroed, for comparing runs.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        r.stages.iter_mut().for_each(|s| s.seconds = 0.0);
        r
    }
}

/// Common factors of the two composites.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Composition<F> {
    /// `f ∘ p = c · x`.
    pub inverse_after_forward: MultiPoly<F>,
    /// `p ∘ f = c' · y`.
    pub forward_after_inverse: MultiPoly<F>,
}

/// Objects computed so far.
#[derive(Clone, Debug)]
pub struct Artifacts<F> {
    pub samples: Option<Vec<Vec<F>>>,
    pub ideal: Option<Vec<MultiPoly<F>>>,
    pub secant: Option<Vec<MultiPoly<F>>>,
    pub phi: Option<SkewPolyMatrix<F>>,
    pub forward: Option<PolyMap<F>>,
    pub inverse: Option<PolyMap<F>>,
    pub composition: Option<Composition<F>>,
    pub omega: Option<SkewPolyMatrix<F>>,
    pub poisson: Option<PoissonReport>,
    pub szego: Option<SzegoReport<F>>,
    pub ranks: Option<RankProfile>,
}

impl<F> Default for Artifacts<F> {
    fn default() -> Self {
        Artifacts {
            samples: None,
            ideal: None,
            secant: None,
            phi: None,
            forward: None,
            inverse: None,
            composition: None,
            omega: None,
            poisson: None,
            szego: None,
            ranks: None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CompositionDoc {
    degree: u32,
    inverse_after_forward: PolyDoc,
    forward_after_inverse: PolyDoc,
}

#[derive(Serialize, Deserialize)]
struct ManifestDoc {
    config: PipelineConfig,
    config_sha256: String,
    artifacts: Map<String, Value>,
}

/// A finished run.
pub struct Run<F> {
    pub report: RunReport,
    pub data: Artifacts<F>,
}

/// Executes stages over one field, keeping their outputs in memory.
pub struct Runner<F> {
    cfg: PipelineConfig,
    curve: Curve<F>,
    dir: Option<PathBuf>,
    input: Option<PathBuf>,
    pub data: Artifacts<F>,
}

fn load_slot<T: Clone>(
    slot: &mut Option<T>,
    dir: Option<&Path>,
    file: &str,
    decode: impl FnOnce(&Path) -> Result<T>,
) -> Result<T> {
    if let Some(v) = slot {
        return Ok(v.clone());
    }
    let dir = dir.ok_or_else(|| Error::InvalidInput(format!("{file} is needed but was neither computed nor supplied")))?;
    let v = decode(&dir.join(file))?;
    *slot = Some(v.clone());
    Ok(v)
}

impl<F: PrimeField> Runner<F> {
    /// `dir` receives artifacts; missing inputs are read from `input`, or
    /// from `dir` when no separate input directory is given.
    pub fn new(cfg: PipelineConfig, dir: Option<PathBuf>, input: Option<PathBuf>) -> Result<Self> {
        cfg.validate()?;
        if F::modulus() != cfg.prime {
            return Err(Error::InvalidInput(format!(
                "field modulus {} differs from configured prime {}",
                F::modulus(),
                cfg.prime
            )));
        }
        let curve = Curve::new(F::from_u64(cfg.a), F::from_u64(cfg.b))?;
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|source| Error::Io {
                path: d.display().to_string(),
                source,
            })?;
        }
        Ok(Runner {
            cfg,
            curve,
            input: input.or_else(|| dir.clone()),
            dir,
            data: Artifacts::default(),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn curve(&self) -> &Curve<F> {
        &self.curve
    }

    /// Runs every stage for the parity of `n`, halting at the first failure.
    pub fn run_all(mut self) -> Result<Run<F>> {
        let mut report = RunReport {
            config: self.cfg.clone(),
            pass: true,
            dims: Vec::new(),
            stages: Vec::new(),
            failure: None,
            hint: None,
        };
        for &stage in self.cfg.stages() {
            let rec = self.run(stage);
            let ok = rec.pass;
            if let Some(d) = rec.dim {
                report.dims.push(d);
            }
            if !ok {
                report.pass = false;
                report.failure = Some(format!("{stage}: {}", rec.error.clone().unwrap_or_default()));
                report.hint = Some(format!(
                    "reproduce with --n {} --prime {} --a {} --b {} --seed {}; a failure caused by an unlucky draw goes away with another --seed or --prime",
                    self.cfg.n, self.cfg.prime, self.cfg.a, self.cfg.b, self.cfg.seed
                ));
            }
            report.stages.push(rec);
            if !ok {
                break;
            }
        }
        if let Some(dir) = self.dir.clone() {
            write_json(&dir.join("report.json"), &report)?;
            self.write_manifest(&dir, &report)?;
        }
        Ok(Run {
            report,
            data: self.data,
        })
    }

    fn write_manifest(&self, dir: &Path, report: &RunReport) -> Result<()> {
        let mut artifacts = Map::new();
        for name in report.stages.iter().flat_map(|s| &s.artifacts) {
            let path = dir.join(name);
            let bytes = fs::read(&path).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            artifacts.insert(name.clone(), Value::String(hex(&Sha256::digest(&bytes))));
        }
        let doc = ManifestDoc {
            config: self.cfg.clone(),
            config_sha256: self.cfg.digest(),
            artifacts,
        };
        write_json(&dir.join("manifest.json"), &doc)
    }

    /// Runs one stage; failures are reported, not returned.
    pub fn run(&mut self, stage: Stage) -> StageReport {
        let mut rec = StageReport::new(stage);
        let start = Instant::now();
        let outcome = if self.cfg.stages().contains(&stage) {
            self.exec(stage, &mut rec)
        } else {
            Err(Error::InvalidInput(format!("stage {stage} does not apply to n = {}", self.cfg.n)))
        };
        rec.seconds = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => rec.pass = true,
            Err(e) => rec.error = Some(e.to_string()),
        }
        info!("{stage}: {} in {:.2}s", if rec.pass { "pass" } else { "FAIL" }, rec.seconds);
        rec
    }

    fn save<T: Serialize>(&self, rec: &mut StageReport, value: &T) -> Result<()> {
        if let Some(dir) = &self.dir {
            write_json(&dir.join(rec.stage.artifact()), value)?;
            rec.artifacts.push(rec.stage.artifact().to_string());
        }
        Ok(())
    }

    fn rng(&self, stage: Stage) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(stage.seed(self.cfg.seed))
    }

    fn exec(&mut self, stage: Stage, rec: &mut StageReport) -> Result<()> {
        match stage {
            Stage::CurveSample => self.curve_sample(rec),
            Stage::Ideal => self.ideal(rec),
            Stage::SecantEq => self.secant_eq(rec),
            Stage::Klein => self.klein(rec),
            Stage::Pfaffians => self.pfaffians(rec),
            Stage::Sigma => self.sigma(rec),
            Stage::CremonaCheck => self.cremona_check(rec),
            Stage::Omega => self.omega(rec),
            Stage::PoissonCheck => self.poisson_check(rec),
            Stage::SzegoCheck => self.szego_check(rec),
            Stage::RankProfile => self.rank_profile(rec),
        }
    }

    /// `r` with `Sec^{r-1} C` (odd) or `Sec^r C` (even) the sampled variety.
    fn sample_order(&self) -> usize {
        let n = self.cfg.n;
        if self.cfg.is_odd() {
            (n - 1) / 2 - 1
        } else {
            (n - 2) / 2
        }
    }

    fn check_vars(&self, what: &str, nvars: usize) -> Result<()> {
        if nvars != self.cfg.n {
            return Err(Error::InvalidInput(format!(
                "{what} lives in {nvars} variables, expected {}",
                self.cfg.n
            )));
        }
        Ok(())
    }

    pub fn samples(&mut self) -> Result<Vec<Vec<F>>> {
        let n = self.cfg.n;
        let input = self.input.clone();
        load_slot(&mut self.data.samples, input.as_deref(), Stage::CurveSample.artifact(), |p| {
            let doc: PointsDoc = read_json(p)?;
            if doc.n != n {
                return Err(Error::InvalidInput(format!("samples are in dimension {}, expected {n}", doc.n)));
            }
            doc.decode()
        })
    }

    fn load_space(&mut self, stage: Stage) -> Result<Vec<MultiPoly<F>>> {
        let input = self.input.clone();
        let slot = if stage == Stage::Ideal {
            &mut self.data.ideal
        } else {
            &mut self.data.secant
        };
        let basis = load_slot(slot, input.as_deref(), stage.artifact(), |p| {
            read_json::<VanishingDoc>(p)?.decode_basis()
        })?;
        if let Some(b) = basis.first() {
            self.check_vars(stage.artifact(), b.nvars())?;
        }
        Ok(basis)
    }

    pub fn ideal_basis(&mut self) -> Result<Vec<MultiPoly<F>>> {
        self.load_space(Stage::Ideal)
    }

    pub fn secant_basis(&mut self) -> Result<Vec<MultiPoly<F>>> {
        self.load_space(Stage::SecantEq)
    }

    fn load_skew(&mut self, stage: Stage) -> Result<SkewPolyMatrix<F>> {
        let input = self.input.clone();
        let slot = if stage == Stage::Klein {
            &mut self.data.phi
        } else {
            &mut self.data.omega
        };
        let m = load_slot(slot, input.as_deref(), stage.artifact(), |p| read_json::<SkewDoc>(p)?.decode())?;
        self.check_vars(stage.artifact(), m.nvars())?;
        if m.size() != self.cfg.n {
            return Err(Error::InvalidInput(format!("{} has size {}", stage.artifact(), m.size())));
        }
        Ok(m)
    }

    pub fn phi(&mut self) -> Result<SkewPolyMatrix<F>> {
        self.load_skew(Stage::Klein)
    }

    pub fn omega_matrix(&mut self) -> Result<SkewPolyMatrix<F>> {
        self.load_skew(Stage::Omega)
    }

    fn load_map(&mut self, stage: Stage) -> Result<PolyMap<F>> {
        let input = self.input.clone();
        let slot = if stage == Stage::Pfaffians {
            &mut self.data.forward
        } else {
            &mut self.data.inverse
        };
        let m = load_slot(slot, input.as_deref(), stage.artifact(), |p| read_json::<PolyMapDoc>(p)?.decode())?;
        self.check_vars(stage.artifact(), m.nvars())?;
        Ok(m)
    }

    pub fn forward(&mut self) -> Result<PolyMap<F>> {
        self.load_map(Stage::Pfaffians)
    }

    pub fn inverse(&mut self) -> Result<PolyMap<F>> {
        self.load_map(Stage::Sigma)
    }

    /// The secant hypersurface `F` (odd `n`).
    fn hypersurface(&mut self) -> Result<MultiPoly<F>> {
        let basis = self.secant_basis()?;
        match basis.as_slice() {
            [f] => Ok(f.clone()),
            _ => Err(Error::UnexpectedDimension {
                what: "secant hypersurface".into(),
                expected: 1,
                found: basis.len(),
            }),
        }
    }

    fn curve_sample(&mut self, rec: &mut StageReport) -> Result<()> {
        let n = self.cfg.n;
        let mut rng = self.rng(Stage::CurveSample);
        let on_curve: Vec<Vec<F>> = self
            .curve
            .distinct_points(2 * n, &mut rng)?
            .iter()
            .map(|q| embed(q, n))
            .collect::<Result<_>>()?;
        let rank = Matrix::from_rows(on_curve, n).rank();
        rec.note("embedding_rank", rank);
        rec.require("curve_spans_the_ambient_space", rank == n)?;
        let k = self.sample_order();
        let points = (0..self.cfg.trials)
            .map(|_| secant_sample(&self.curve, k, n, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        rec.note("secant_order", k);
        self.save(rec, &PointsDoc::encode(n, k, &points))?;
        self.data.samples = Some(points);
        Ok(())
    }

    fn record_space(&mut self, rec: &mut StageReport, space: &VanishingSpace<F>) -> Result<()> {
        rec.dim = Some(space.dim());
        rec.note("degree", space.degree);
        rec.note("samples", space.samples.len());
        rec.note("dims_per_round", &space.dims);
        rec.require("stabilized", space.stabilized)?;
        self.save(rec, &VanishingDoc::encode(space))
    }

    fn ideal(&mut self, rec: &mut StageReport) -> Result<()> {
        let space = secant_ideal_generators(&self.curve, self.cfg.n, self.cfg.margin, Stage::Ideal.seed(self.cfg.seed))?;
        self.record_space(rec, &space)?;
        let samples = self.samples()?;
        let vanish = samples
            .iter()
            .all(|x| space.basis.iter().all(|p| p.evaluate(x).is_ok_and(|v| v.is_zero())));
        rec.require("vanishes_on_fresh_samples", vanish)?;
        self.data.ideal = Some(space.basis);
        Ok(())
    }

    fn secant_eq(&mut self, rec: &mut StageReport) -> Result<()> {
        let (n, margin, seed) = (self.cfg.n, self.cfg.margin, Stage::SecantEq.seed(self.cfg.seed));
        let space = if self.cfg.is_odd() {
            secant_hypersurface(&self.curve, n, margin, seed)?
        } else {
            secant_ci_pair(&self.curve, n, margin, seed)?
        };
        self.record_space(rec, &space)?;
        let mut rng = self.rng(Stage::SecantEq);
        let x: Vec<F> = (0..n).map(|_| F::random(&mut rng)).collect();
        let generic_nonzero = space
            .basis
            .iter()
            .any(|p| p.evaluate(&x).is_ok_and(|v| !v.is_zero()));
        rec.require("nonzero_at_a_random_point", generic_nonzero)?;
        if !self.cfg.is_odd() {
            let samples = self.samples()?;
            let vanish = samples
                .iter()
                .all(|x| space.basis.iter().all(|p| p.evaluate(x).is_ok_and(|v| v.is_zero())));
            rec.require("vanishes_on_fresh_samples", vanish)?;
        }
        self.data.secant = Some(space.basis);
        Ok(())
    }

    fn klein(&mut self, rec: &mut StageReport) -> Result<()> {
        let p = PolyMap::new(self.ideal_basis()?)?;
        let problem = SyzygyProblem::new(vec![p], 1)?;
        let basis = skew_syzygy(&problem)?;
        rec.dim = Some(basis.len());
        rec.require("unique_klein_matrix", basis.len() == 1)?;
        let phi = basis.into_iter().next().expect("one element");
        rec.require("p_annihilates_phi", is_solution(&problem, &phi)?)?;
        self.save(rec, &SkewDoc::encode(&phi))?;
        self.data.phi = Some(phi);
        Ok(())
    }

    fn pfaffians(&mut self, rec: &mut StageReport) -> Result<()> {
        let phi = KleinTensor::from_matrix(&self.phi()?)?;
        let forward = forward_map(&phi)?;
        let r = (self.cfg.n as u32 - 1) / 2;
        rec.note("degree", forward.degree());
        rec.require("degree_is_r", forward.degree() == r)?;
        let ideal = self.ideal_basis()?;
        rec.require("same_span_as_ideal", echelon_span(forward.forms()) == ideal)?;
        let mut rng = self.rng(Stage::Pfaffians);
        rec.require("phi_kills_p_pointwise", kernel_check(&phi, &forward, self.cfg.trials, &mut rng)?)?;
        self.save(rec, &PolyMapDoc::encode(&forward))?;
        self.data.forward = Some(forward);
        Ok(())
    }

    fn sigma(&mut self, rec: &mut StageReport) -> Result<()> {
        let phi = KleinTensor::from_matrix(&self.phi()?)?;
        let inverse = sigma(&phi)?;
        rec.note("degree", inverse.degree());
        rec.require("degree_is_n_minus_2", inverse.degree() as usize == self.cfg.n - 2)?;
        rec.require(
            "sigma_kills_nu",
            sigma_residuals(&phi, &inverse).iter().all(|p| p.is_zero()),
        )?;
        self.save(rec, &PolyMapDoc::encode(&inverse))?;
        self.data.inverse = Some(inverse);
        Ok(())
    }

    fn cremona_check(&mut self, rec: &mut StageReport) -> Result<()> {
        let n = self.cfg.n;
        let (p, f) = (self.forward()?, self.inverse()?);
        let c = composition_factor(&f, &p)?;
        let c_rev = composition_factor(&p, &f)?;
        let expected = ((n - 1) / 2 * (n - 2) - 1) as u32;
        rec.note("factor_degree", c.homogeneous_degree());
        rec.require(
            "factor_degrees",
            c.homogeneous_degree() == Some(expected) && c_rev.homogeneous_degree() == Some(expected),
        )?;
        let mut rng = self.rng(Stage::CremonaCheck);
        let pointwise = (0..self.cfg.trials).all(|_| {
            let x: Vec<F> = (0..n).map(|_| F::random(&mut rng)).collect();
            let y = f.evaluate(&p.evaluate(&x).expect("arity")).expect("arity");
            let lambda = c.evaluate(&x).expect("arity");
            !lambda.is_zero() && y.iter().zip(&x).all(|(&yi, &xi)| yi == lambda * xi)
        });
        rec.require("inverse_after_forward_is_identity_pointwise", pointwise)?;
        rec.require("forward_has_no_common_factor", no_common_factor(p.forms(), &mut rng)?)?;
        rec.require("inverse_has_no_common_factor", no_common_factor(f.forms(), &mut rng)?)?;
        // recorded for inspection only
        if (expected as usize).is_multiple_of(n) {
            let power = expected / n as u32;
            let secant = self.hypersurface()?.pow(power);
            rec.note("secant_power", power);
            rec.note("factor_proportional_to_secant_power", proportionality(&c, &secant).is_some());
        }
        self.save(
            rec,
            &CompositionDoc {
                degree: expected,
                inverse_after_forward: PolyDoc::encode(&c),
                forward_after_inverse: PolyDoc::encode(&c_rev),
            },
        )?;
        self.data.composition = Some(Composition {
            inverse_after_forward: c,
            forward_after_inverse: c_rev,
        });
        Ok(())
    }

    fn casimirs(&mut self) -> Result<Vec<MultiPoly<F>>> {
        self.secant_basis()
    }

    fn omega(&mut self, rec: &mut StageReport) -> Result<()> {
        let n = self.cfg.n;
        let casimirs = self.casimirs()?;
        let rows = casimirs
            .iter()
            .map(|c| PolyMap::new(c.gradient()))
            .collect::<Result<Vec<_>>>()?;
        let problem = SyzygyProblem::new(rows, 2)?;
        let basis = skew_syzygy(&problem)?;
        rec.dim = Some(basis.len());
        rec.require("unique_omega", basis.len() == 1)?;
        let omega = basis.into_iter().next().expect("one element");
        rec.require("gradients_annihilate_omega", is_solution(&problem, &omega)?)?;
        if self.cfg.is_odd() {
            let f = &casimirs[0];
            let pf = sub_pfaffians(&omega)?;
            let ratio = map_proportionality(&pf, &f.gradient());
            rec.require("pfaffians_proportional_to_gradient", ratio.is_some_and(|c| !c.is_zero()))?;
            let integrated = euler_integrate(&PolyMap::new(pf)?, n as u32)?;
            rec.require(
                "pfaffians_integrate_to_secant_equation",
                proportionality(&integrated, f).is_some_and(|c| !c.is_zero()),
            )?;
        }
        self.save(rec, &SkewDoc::encode(&omega))?;
        self.data.omega = Some(omega);
        Ok(())
    }

    fn poisson_check(&mut self, rec: &mut StageReport) -> Result<()> {
        let n = self.cfg.n;
        let bracket = QuadraticBracket::new(self.omega_matrix()?)?;
        let report = bracket.check(&self.casimirs()?)?;
        rec.note("jacobiators", n * (n - 1) * (n - 2) / 6);
        rec.note("failures", &report.failures);
        let mut rng = self.rng(Stage::PoissonCheck);
        let lin = monomials(n, 1);
        let mut linear = || MultiPoly::from_terms(n, lin.iter().map(|&m| (m, F::random(&mut rng))));
        let mut engine = true;
        for d in 1..=2 {
            let (x, y, z) = (linear(), linear(), linear());
            engine &= bracket.caslem_identity(&x, &y, &z, d)?;
        }
        self.save(rec, &report)?;
        self.data.poisson = Some(report.clone());
        rec.require("bracket_engine_identity", engine)?;
        rec.require("jacobi_zero", report.jacobi_zero)?;
        rec.require("casimirs_zero", report.casimirs_zero)
    }

    fn szego_check(&mut self, rec: &mut StageReport) -> Result<()> {
        let omega = self.omega_matrix()?;
        let report = compare_brackets(
            &self.curve,
            &omega,
            self.cfg.trials,
            self.cfg.margin,
            Stage::SzegoCheck.seed(self.cfg.seed),
        )?;
        rec.note("ratio", report.ratio.map(|c| c.to_string()));
        rec.note("degenerate_trials", report.degenerate);
        self.save(rec, &SzegoDoc::encode(&report))?;
        self.data.szego = Some(report.clone());
        rec.require("constant_ratio", report.pass)
    }

    fn rank_profile(&mut self, rec: &mut StageReport) -> Result<()> {
        let phi = KleinTensor::from_matrix(&self.phi()?)?;
        let (p, f) = (self.forward()?, self.inverse()?);
        let samples = self.samples()?;
        let mut rng = self.rng(Stage::RankProfile);
        let profile = rank_profile(&phi, &p, &f, &samples, self.cfg.trials, &mut rng)?;
        rec.note("max_secant_rank", profile.secant_ranks.iter().max());
        rec.note("violations", &profile.violations);
        self.save(rec, &profile)?;
        self.data.ranks = Some(profile.clone());
        rec.require("rank_conditions", profile.ok())
    }
}

/// Runs the whole pipeline over the field matching `cfg.prime`.
pub fn run_pipeline(cfg: &PipelineConfig, dir: Option<&Path>) -> Result<RunReport> {
    with_field(cfg, RunAll { dir })
}

/// Runs one stage, reading missing inputs from `input` (default: `dir`).
pub fn run_stage(cfg: &PipelineConfig, stage: Stage, dir: &Path, input: Option<&Path>) -> Result<StageReport> {
    with_field(cfg, RunOne { stage, dir, input })
}

/// A computation generic over the field, dispatched on the configured prime.
trait FieldTask {
    type Output;
    fn call<F: PrimeField>(self, cfg: &PipelineConfig) -> Result<Self::Output>;
}

struct RunAll<'a> {
    dir: Option<&'a Path>,
}

impl FieldTask for RunAll<'_> {
    type Output = RunReport;
    fn call<F: PrimeField>(self, cfg: &PipelineConfig) -> Result<RunReport> {
        let runner = Runner::<F>::new(cfg.clone(), self.dir.map(Path::to_path_buf), None)?;
        Ok(runner.run_all()?.report)
    }
}

struct RunOne<'a> {
    stage: Stage,
    dir: &'a Path,
    input: Option<&'a Path>,
}

impl FieldTask for RunOne<'_> {
    type Output = StageReport;
    fn call<F: PrimeField>(self, cfg: &PipelineConfig) -> Result<StageReport> {
        let mut runner = Runner::<F>::new(
            cfg.clone(),
            Some(self.dir.to_path_buf()),
            self.input.map(Path::to_path_buf),
        )?;
        Ok(runner.run(self.stage))
    }
}

fn with_field<T: FieldTask>(cfg: &PipelineConfig, task: T) -> Result<T::Output> {
    cfg.validate()?;
    match cfg.prime {
        MERSENNE_61 => task.call::<Fp61>(cfg),
        PRIME_62 => task.call::<Fp62>(cfg),
        p => {
            DynPrime::install(p)?;
            task.call::<FpDyn>(cfg)
        }
    }
}
