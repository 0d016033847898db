use std::fs;

use ellnormal::cremona::KleinTensor;
use ellnormal::curve::Curve;
use ellnormal::field::PrimeField;
use ellnormal::pipeline::{run_stage, PipelineConfig, Run, Runner, Stage};
use ellnormal::poisson::QuadraticBracket;
use ellnormal::poly::{monomials, proportionality, MultiPoly, PolyMap};
use ellnormal::skew::{is_solution, skew_syzygy, SkewPolyMatrix, SyzygyProblem};
use ellnormal::szego::compare_brackets;
use ellnormal::{Fp61, Monomial};
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type P = MultiPoly<Fp61>;

fn run(n: usize, seed: u64) -> Run<Fp61> {
    let cfg = PipelineConfig {
        n,
        seed,
        ..PipelineConfig::default()
    };
    let run = Runner::<Fp61>::new(cfg, None, None).unwrap().run_all().unwrap();
    assert!(run.report.pass, "{:?}", run.report.failure);
    run
}

fn random_form(n: usize, d: u32, rng: &mut ChaCha8Rng) -> P {
    P::from_terms(n, monomials(n, d).into_iter().map(|m| (m, Fp61::random(rng))))
}

fn perturbed(m: &SkewPolyMatrix<Fp61>) -> SkewPolyMatrix<Fp61> {
    let mut out = m.clone();
    let n = m.nvars();
    let bump = P::var(n, 0).mul_term(Monomial::var(1), Fp61::one());
    out.set_upper(0, 1, m.upper_entry(0, 1) + &bump);
    out
}

fn point(n: usize, rng: &mut ChaCha8Rng) -> Vec<Fp61> {
    (0..n).map(|_| Fp61::random(rng)).collect()
}

#[test]
fn canonical_artifacts_do_not_depend_on_the_seed() {
    let (a, b) = (run(5, 11), run(5, 12));
    assert_eq!(a.data.ideal, b.data.ideal);
    assert_eq!(a.data.secant, b.data.secant);
    assert_eq!(a.data.phi, b.data.phi);
    assert_eq!(a.data.omega, b.data.omega);
    assert_eq!(a.data.inverse, b.data.inverse);
}

#[test]
fn quintic_case_details() {
    let r = run(5, 3);
    let f = r.data.secant.as_ref().unwrap()[0].clone();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    assert!(!f.evaluate(&point(5, &mut rng)).unwrap().is_zero());

    // composite has degree r(n - 2) = 6 and its factor is the quintic itself
    let (p, inv) = (r.data.forward.clone().unwrap(), r.data.inverse.clone().unwrap());
    assert!(inv.compose(&p).unwrap().forms().iter().all(|g| g.homogeneous_degree() == Some(6)));
    let c = &r.data.composition.as_ref().unwrap().inverse_after_forward;
    assert!(proportionality(c, &f).is_some());

    // Ω specialized at a point is skew and killed by ∇F there
    let omega = r.data.omega.clone().unwrap();
    let v = point(5, &mut rng);
    let w = omega.evaluate(&v).unwrap();
    assert!(w.is_skew());
    let grad: Vec<Fp61> = f.gradient().iter().map(|g| g.evaluate(&v).unwrap()).collect();
    assert!(w.transpose().mul_vec(&grad).iter().all(|x| x.is_zero()));

    // Jacobi holds, so both sides of the engine identity vanish
    let bracket = QuadraticBracket::new(omega.clone()).unwrap();
    let (x, y, z) = (
        random_form(5, 1, &mut rng),
        random_form(5, 1, &mut rng),
        random_form(5, 1, &mut rng),
    );
    assert!(bracket.jacobiator(&x, &y, &z).unwrap().is_zero());
    assert!(bracket.caslem_identity(&x, &y, &z, 3).unwrap());

    // f(p(b*)) ≠ 0 at random b*
    let ranks = r.data.ranks.as_ref().unwrap();
    assert!(ranks.inverse_nonzero.iter().all(|&b| b));
    assert!(ranks.nu_ranks.iter().all(|&k| k == 4));
}

#[test]
fn perturbations_are_detected() {
    let r = run(5, 4);
    let f = r.data.secant.as_ref().unwrap()[0].clone();
    let omega = r.data.omega.clone().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(102);

    let bad = QuadraticBracket::new(perturbed(&omega)).unwrap();
    assert!(!bad.jacobi_failures().unwrap().is_empty());
    let good = QuadraticBracket::new(omega.clone()).unwrap();
    let residuals = good.casimir_residuals(&[random_form(5, 5, &mut rng)]).unwrap();
    assert!(residuals[0].iter().any(|p| !p.is_zero()));

    let curve = Curve::new(Fp61::from_u64(1), Fp61::from_u64(1)).unwrap();
    assert!(compare_brackets(&curve, &omega, 20, 25, 9).unwrap().pass);
    assert!(!compare_brackets(&curve, &perturbed(&omega), 20, 25, 9).unwrap().pass);

    let p = PolyMap::new(r.data.ideal.clone().unwrap()).unwrap();
    let problem = SyzygyProblem::new(vec![p], 1).unwrap();
    let phi = r.data.phi.clone().unwrap();
    assert!(is_solution(&problem, &phi).unwrap());
    let mut bad_phi = phi.clone();
    bad_phi.set_upper(1, 3, phi.upper_entry(1, 3) + &P::var(5, 2));
    assert!(!is_solution(&problem, &bad_phi).unwrap());

    let grad = SyzygyProblem::new(vec![PolyMap::new(f.gradient()).unwrap()], 2).unwrap();
    assert!(!is_solution(&grad, &perturbed(&omega)).unwrap());
}

#[test]
fn even_case_is_independent_of_the_row_basis() {
    let r = run(6, 5);
    let pair = r.data.secant.clone().unwrap();
    let omega = r.data.omega.clone().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let (a, b, c, d) = (
        Fp61::random(&mut rng),
        Fp61::random(&mut rng),
        Fp61::random(&mut rng),
        Fp61::random(&mut rng),
    );
    let g1 = &pair[0].scale(a) + &pair[1].scale(b);
    let g2 = &pair[0].scale(c) + &pair[1].scale(d);
    let rows = [g1, g2].iter().map(|g| PolyMap::new(g.gradient()).unwrap()).collect();
    let basis = skew_syzygy(&SyzygyProblem::new(rows, 2).unwrap()).unwrap();
    assert_eq!(basis, vec![omega]);
}

#[test]
fn stages_rerun_from_disk_reproduce_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let full = tmp.path().join("full");
    let cfg = PipelineConfig {
        seed: 6,
        ..PipelineConfig::default()
    };
    let report = ellnormal::pipeline::run_pipeline(&cfg, Some(&full)).unwrap();
    assert!(report.pass);
    for &stage in cfg.stages() {
        let single = tmp.path().join(stage.name());
        let rec = run_stage(&cfg, stage, &single, Some(&full)).unwrap();
        assert!(rec.pass, "{stage}: {:?}", rec.error);
        assert_eq!(
            fs::read(full.join(stage.artifact())).unwrap(),
            fs::read(single.join(stage.artifact())).unwrap(),
            "{stage}"
        );
    }
    // a stage without its inputs fails cleanly
    let rec = run_stage(&cfg, Stage::Omega, &tmp.path().join("empty"), None).unwrap();
    assert!(!rec.pass && rec.error.unwrap().contains("secant.json"));
}

#[test]
fn klein_tensor_views_agree_on_the_pipeline_matrix() {
    let r = run(5, 7);
    let phi = KleinTensor::from_matrix(r.data.phi.as_ref().unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let (x, y) = (point(5, &mut rng), point(5, &mut rng));
    // yᵀ Φ(x) z equals the same pairing read through ν(y)
    let z = point(5, &mut rng);
    let lhs: Fp61 = (0..5)
        .flat_map(|i| (0..5).map(move |j| (i, j)))
        .fold(Fp61::zero(), |acc, (i, j)| acc + y[i] * phi.phi_at(&x)[(i, j)] * z[j]);
    let nu = phi.nu_at(&y);
    let rhs: Fp61 = (0..5)
        .flat_map(|k| (0..5).map(move |j| (k, j)))
        .fold(Fp61::zero(), |acc, (k, j)| acc + x[k] * nu[(k, j)] * z[j]);
    assert_eq!(lhs, rhs);
}
