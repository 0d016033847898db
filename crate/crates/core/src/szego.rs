//! The bracket recomputed from the Szegő kernel `S = (y1 + y2)/(x2 - x1)` of
//! the curve with base point `O` and differential `dx/2y`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curve::{rr_values, Curve, CurvePoint};
use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::linalg::{dot, solve_unique, Matrix};
use crate::skew::SkewPolyMatrix;

const RESIDUAL_PAIRS: usize = 10;

/// `S(Q1, Q2)`; undefined when the abscissae agree.
pub fn szego_value<F: PrimeField>(q1: &CurvePoint<F>, q2: &CurvePoint<F>) -> Result<F> {
    let (x1, y1) = q1.coords()?;
    let (x2, y2) = q2.coords()?;
    let inv = (x2 - x1).inv().ok_or(Error::EqualAbscissa)?;
    Ok((y1 + y2) * inv)
}

fn point_pair<F: PrimeField, R: Rng + ?Sized>(curve: &Curve<F>, rng: &mut R) -> Result<(CurvePoint<F>, CurvePoint<F>)> {
    let pts = curve.distinct_points(2, rng)?;
    Ok((pts[0], pts[1]))
}

/// `T(Q1, Q2) = S(Q1, Q2)·(s1(Q1) s2(Q2) - s2(Q1) s1(Q2))` for sections given
/// by coefficients on the degree-`n` Riemann–Roch basis.
fn kernel_value<F: PrimeField>(s1: &[F], s2: &[F], q1: &CurvePoint<F>, q2: &CurvePoint<F>) -> Result<F> {
    let n = s1.len();
    let (g1, g2) = (rr_values(q1, n)?, rr_values(q2, n)?);
    let anti = dot(s1, &g1) * dot(s2, &g2) - dot(s2, &g1) * dot(s1, &g2);
    Ok(szego_value(q1, q2)? * anti)
}

/// Coefficients `t` with `T(Q1, Q2) = Σ t_ab g_a(Q1) g_b(Q2)` on the degree
/// `n + 1` basis, fitted on `(n+1)^2 + margin` random pairs and confirmed on
/// fresh ones. Fails if `T` does not lie in that space.
pub fn expand_product<F: PrimeField, R: Rng + ?Sized>(
    curve: &Curve<F>,
    s1: &[F],
    s2: &[F],
    margin: usize,
    rng: &mut R,
) -> Result<Matrix<F>> {
    let n = s1.len();
    if s2.len() != n {
        return Err(Error::ArityMismatch {
            expected: n,
            found: s2.len(),
        });
    }
    let m = n + 1;
    let unknowns = m * m;
    let design_row = |q1: &CurvePoint<F>, q2: &CurvePoint<F>| -> Result<Vec<F>> {
        let (g1, g2) = (rr_values(q1, m)?, rr_values(q2, m)?);
        Ok(g1.iter().flat_map(|&a| g2.iter().map(move |&b| a * b)).collect())
    };
    let mut rows = Vec::with_capacity(unknowns + margin);
    let mut rhs = Vec::with_capacity(unknowns + margin);
    for _ in 0..unknowns + margin {
        let (q1, q2) = point_pair(curve, rng)?;
        rows.push(design_row(&q1, &q2)?);
        rhs.push(kernel_value(s1, s2, &q1, &q2)?);
    }
    let t = solve_unique(&Matrix::from_rows(rows, unknowns), &rhs)
        .ok_or_else(|| Error::Inconsistent("kernel product is not in the expected tensor space".into()))?;
    for _ in 0..RESIDUAL_PAIRS {
        let (q1, q2) = point_pair(curve, rng)?;
        if dot(&design_row(&q1, &q2)?, &t) != kernel_value(s1, s2, &q1, &q2)? {
            return Err(Error::Inconsistent("kernel expansion fails at a fresh pair".into()));
        }
    }
    Ok(Matrix::from_fn(m, m, |a, b| t[a * m + b]))
}

/// `⟨φ̃ ⊗ φ̃, t⟩` with `φ̃` extending `φ` by zero; the extension by one must give
/// the same value.
pub fn pi_phi<F: PrimeField>(t: &Matrix<F>, phi: &[F]) -> Result<F> {
    let pair = |ext: F| {
        let mut v = phi.to_vec();
        v.push(ext);
        dot(&v, &t.mul_vec(&v))
    };
    let value = pair(F::zero());
    if pair(F::one()) != value {
        return Err(Error::Inconsistent("bracket value depends on the extension of φ".into()));
    }
    Ok(value)
}

/// Outcome of the value-level comparison of the two brackets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SzegoReport<F> {
    /// The common ratio `Ω-value / kernel-value`, if one exists.
    pub ratio: Option<F>,
    pub trials: usize,
    /// Trials where both values vanished and no ratio is defined.
    pub degenerate: usize,
    pub pass: bool,
}

/// One random functional and two random sections in its kernel.
pub struct Trial<F> {
    pub phi: Vec<F>,
    pub s1: Vec<F>,
    pub s2: Vec<F>,
}

impl<F: PrimeField> Trial<F> {
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut phi: Vec<F> = (0..n).map(|_| F::random(rng)).collect();
        let lead = phi.iter().position(|v| !v.is_zero()).unwrap_or_else(|| {
            phi[0] = F::one();
            0
        });
        let inv = phi[lead].inv().expect("nonzero");
        phi.iter_mut().for_each(|v| *v *= inv);
        let mut kernel_vec = || {
            let mut s: Vec<F> = (0..n).map(|_| F::random(rng)).collect();
            s[lead] = F::zero();
            s[lead] = -dot(&s, &phi);
            s
        };
        let s1 = kernel_vec();
        let s2 = kernel_vec();
        Trial { phi, s1, s2 }
    }

    /// `Σ c1_i c2_j Ω_ij(φ)`.
    pub fn omega_value(&self, omega: &SkewPolyMatrix<F>) -> Result<F> {
        let w = omega.evaluate(&self.phi)?;
        Ok(dot(&self.s1, &w.mul_vec(&self.s2)))
    }

    pub fn kernel_value<R: Rng + ?Sized>(&self, curve: &Curve<F>, margin: usize, rng: &mut R) -> Result<F> {
        let t = expand_product(curve, &self.s1, &self.s2, margin, rng)?;
        pi_phi(&t, &self.phi)
    }
}

/// Compares `Ω` with the Szegő bracket on `trials` random functionals.
///
/// Trial `i` draws from stream `i` of a generator seeded with `seed`, so every
/// trial is reproducible on its own.
pub fn compare_brackets<F: PrimeField>(
    curve: &Curve<F>,
    omega: &SkewPolyMatrix<F>,
    trials: usize,
    margin: usize,
    seed: u64,
) -> Result<SzegoReport<F>> {
    let n = omega.size();
    let mut ratio: Option<F> = None;
    let mut degenerate = 0;
    let mut pass = trials > 0;
    for i in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let trial = Trial::random(n, &mut rng);
        let v1 = trial.omega_value(omega)?;
        let v2 = trial.kernel_value(curve, margin, &mut rng)?;
        match (v1.is_zero(), v2.is_zero()) {
            (true, true) => degenerate += 1,
            (false, false) => {
                let r = v1 * v2.inv().expect("nonzero");
                match ratio {
                    None => ratio = Some(r),
                    Some(c) if c != r => pass = false,
                    _ => {}
                }
            }
            _ => pass = false,
        }
    }
    Ok(SzegoReport {
        ratio,
        trials,
        degenerate,
        pass: pass && ratio.is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::Fp61;
    use num_traits::Zero;

    fn curve() -> Curve<Fp61> {
        Curve::new(Fp61::from_u64(1), Fp61::from_u64(1)).unwrap()
    }

    #[test]
    fn kernel_is_antisymmetric() {
        let e = curve();
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        for _ in 0..1000 {
            let (q1, q2) = point_pair(&e, &mut rng).unwrap();
            assert_eq!(szego_value(&q2, &q1).unwrap(), -szego_value(&q1, &q2).unwrap());
        }
        let q = e.random_point(&mut rng);
        assert!(matches!(szego_value(&q, &e.neg(&q)), Err(Error::EqualAbscissa)));
    }

    #[test]
    fn kernel_value_by_hand() {
        // (0, 1) and (72, 611) lie on y^2 = x^3 + x + 1 over the integers
        let e = curve();
        let f = |v: i64| Fp61::from_i64(v);
        let q1 = e.point(f(0), f(1)).unwrap();
        let q2 = e.point(f(72), f(611)).unwrap();
        // (1 + 611) / (72 - 0) = 612 / 72 = 17 / 2
        assert_eq!(szego_value(&q1, &q2).unwrap(), f(17) / f(2));
    }

    #[test]
    fn expansion_is_symmetric_and_exact() {
        let e = curve();
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for n in [5, 6] {
            let s1: Vec<Fp61> = (0..n).map(|_| Fp61::random(&mut rng)).collect();
            let s2: Vec<Fp61> = (0..n).map(|_| Fp61::random(&mut rng)).collect();
            let t = expand_product(&e, &s1, &s2, 25, &mut rng).unwrap();
            assert_eq!(t.nrows(), n + 1);
            assert_eq!(t, t.transpose());
            let zero = expand_product(&e, &s1, &s1, 25, &mut rng).unwrap();
            assert!((0..n + 1).all(|a| (0..n + 1).all(|b| zero[(a, b)].is_zero())));
        }
    }

    #[test]
    fn pi_phi_is_skew_and_extension_free() {
        let e = curve();
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let n = 5;
        for _ in 0..10 {
            let tr = Trial::<Fp61>::random(n, &mut rng);
            assert!(dot(&tr.s1, &tr.phi).is_zero());
            let v12 = tr.kernel_value(&e, 25, &mut rng).unwrap();
            let swapped = Trial {
                phi: tr.phi.clone(),
                s1: tr.s2.clone(),
                s2: tr.s1.clone(),
            };
            assert_eq!(swapped.kernel_value(&e, 25, &mut rng).unwrap(), -v12);
            let c = Fp61::random(&mut rng);
            let scaled = Trial {
                phi: tr.phi.clone(),
                s1: tr.s1.clone(),
                s2: tr.s1.iter().map(|&v| v * c).collect(),
            };
            assert!(scaled.kernel_value(&e, 25, &mut rng).unwrap().is_zero());
        }
    }

    #[test]
    fn extension_dependence_is_detected() {
        // sections outside the kernel of φ
        let e = curve();
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let s1: Vec<Fp61> = (0..5).map(|_| Fp61::random(&mut rng)).collect();
        let s2: Vec<Fp61> = (0..5).map(|_| Fp61::random(&mut rng)).collect();
        let t = expand_product(&e, &s1, &s2, 25, &mut rng).unwrap();
        let phi: Vec<Fp61> = (0..5).map(|_| Fp61::random(&mut rng)).collect();
        assert!(pi_phi(&t, &phi).is_err());
    }
}
