//! Spaces of forms vanishing on sampled points of secant varieties.

use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::curve::{Curve, PointSource, SecantSampler};
use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::linalg::{Matrix, RowEchelon};
use crate::poly::{echelon_span, monomials, Monomial, MultiPoly};

/// Default number of samples beyond the number of unknowns.
pub const DEFAULT_MARGIN: usize = 25;
const MAX_ROUNDS: usize = 5;

/// Degree-`d` forms vanishing on every sample drawn.
#[derive(Clone, Debug)]
pub struct VanishingSpace<F> {
    pub degree: u32,
    /// Reduced echelon basis under descending graded-lex order.
    pub basis: Vec<MultiPoly<F>>,
    /// Every sample the basis was tested against.
    pub samples: Vec<Vec<F>>,
    /// Dimension after each round.
    pub dims: Vec<usize>,
    pub stabilized: bool,
}

impl<F: PrimeField> VanishingSpace<F> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn expect_dim(self, what: &str, expected: usize) -> Result<Self> {
        if self.dim() != expected {
            return Err(Error::UnexpectedDimension {
                what: what.to_string(),
                expected,
                found: self.dim(),
            });
        }
        Ok(self)
    }
}

/// Values of every monomial in `mons` at `point`.
pub fn monomial_values<F: PrimeField>(mons: &[Monomial], point: &[F], degree: u32) -> Vec<F> {
    let powers: Vec<Vec<F>> = point
        .iter()
        .map(|&v| {
            std::iter::successors(Some(F::one()), |&acc| Some(acc * v))
                .take(degree as usize + 1)
                .collect()
        })
        .collect();
    mons.iter()
        .map(|m| {
            powers
                .iter()
                .enumerate()
                .fold(F::one(), |acc, (i, pw)| acc * pw[m.exponent(i) as usize])
        })
        .collect()
}

/// Interpolates the degree-`degree` forms vanishing on points from `source`.
///
/// The first round solves against `#monomials + margin` samples. Each later
/// round restricts the current space to a fresh batch of the same size; the
/// space is stable once a round leaves the dimension unchanged.
pub fn vanishing_forms<F: PrimeField>(
    degree: u32,
    source: &mut dyn PointSource<F>,
    margin: usize,
) -> Result<VanishingSpace<F>> {
    if margin == 0 {
        return Err(Error::InvalidInput("margin must be at least 1".into()));
    }
    let nvars = source.dim();
    let mons = monomials(nvars, degree);
    let batch = mons.len() + margin;
    let mut samples = Vec::with_capacity(2 * batch);

    let mut ech = RowEchelon::new(mons.len());
    for _ in 0..batch {
        let pt = source.sample()?;
        if !ech.is_full_rank() {
            ech.insert(monomial_values(&mons, &pt, degree));
        }
        samples.push(pt);
    }
    let mut basis: Vec<MultiPoly<F>> = ech
        .nullspace()
        .iter()
        .map(|v| MultiPoly::from_coefficients(nvars, &mons, v))
        .collect();
    let mut dims = vec![basis.len()];
    debug!("degree {degree}: round 1 dimension {}", basis.len());

    while dims.len() < MAX_ROUNDS {
        if basis.is_empty() {
            break;
        }
        let fresh: Vec<Vec<F>> = (0..batch).map(|_| source.sample()).collect::<Result<_>>()?;
        let values = Matrix::from_fn(fresh.len(), basis.len(), |i, j| {
            basis[j].evaluate(&fresh[i]).expect("sample arity")
        });
        samples.extend(fresh);
        let combos = values.nullspace();
        let prev = basis.len();
        if combos.len() < prev {
            basis = combos
                .iter()
                .map(|c| {
                    c.iter()
                        .zip(&basis)
                        .fold(MultiPoly::zero(nvars), |acc, (&k, b)| &acc + &b.scale(k))
                })
                .collect();
        }
        dims.push(basis.len());
        debug!("degree {degree}: round {} dimension {}", dims.len(), basis.len());
        if basis.len() == prev {
            break;
        }
    }
    let stabilized = dims.len() >= 2 && dims[dims.len() - 1] == dims[dims.len() - 2] || basis.is_empty();
    if !stabilized {
        return Err(Error::NotStabilized {
            rounds: dims.len(),
            dims,
        });
    }
    Ok(VanishingSpace {
        degree,
        basis: echelon_span(&basis),
        samples,
        dims,
        stabilized,
    })
}

fn sampler<F: PrimeField>(curve: &Curve<F>, k: usize, n: usize, seed: u64) -> SecantSampler<F, ChaCha8Rng> {
    SecantSampler::new(*curve, k, n, ChaCha8Rng::seed_from_u64(seed))
}

fn require_odd(n: usize) -> Result<()> {
    if n < 5 || n.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("expected odd n >= 5, got {n}")));
    }
    Ok(())
}

/// The `n` forms of degree `r = (n-1)/2` cutting out `Sec^{r-1} C` (odd `n`).
pub fn secant_ideal_generators<F: PrimeField>(
    curve: &Curve<F>,
    n: usize,
    margin: usize,
    seed: u64,
) -> Result<VanishingSpace<F>> {
    require_odd(n)?;
    let r = (n - 1) / 2;
    vanishing_forms(r as u32, &mut sampler(curve, r - 1, n, seed), margin)?.expect_dim("secant ideal generators", n)
}

/// The degree-`n` equation of the hypersurface `Sec^r C`, `r = (n-1)/2` (odd `n`),
/// scaled so its leading coefficient is one.
pub fn secant_hypersurface<F: PrimeField>(
    curve: &Curve<F>,
    n: usize,
    margin: usize,
    seed: u64,
) -> Result<VanishingSpace<F>> {
    require_odd(n)?;
    let r = (n - 1) / 2;
    vanishing_forms(n as u32, &mut sampler(curve, r, n, seed), margin)?.expect_dim("secant hypersurface", 1)
}

/// The two forms of degree `r + 1` cutting out `Sec^r C`, `r = (n-2)/2` (even `n`).
pub fn secant_ci_pair<F: PrimeField>(
    curve: &Curve<F>,
    n: usize,
    margin: usize,
    seed: u64,
) -> Result<VanishingSpace<F>> {
    if n < 6 || n % 2 == 1 {
        return Err(Error::InvalidInput(format!("expected even n >= 6, got {n}")));
    }
    let r = (n - 2) / 2;
    vanishing_forms(r as u32 + 1, &mut sampler(curve, r, n, seed), margin)?
        .expect_dim("secant complete intersection", 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{secant_sample, UniformSampler};
    use crate::Fp61;
    use num_traits::Zero;

    fn curve() -> Curve<Fp61> {
        Curve::new(Fp61::from_u64(1), Fp61::from_u64(1)).unwrap()
    }

    fn space(degree: u32, k: usize, n: usize, seed: u64) -> VanishingSpace<Fp61> {
        vanishing_forms(degree, &mut sampler(&curve(), k, n, seed), DEFAULT_MARGIN).unwrap()
    }

    #[test]
    fn no_linear_forms_vanish_on_the_curve() {
        let s = space(1, 1, 5, 1);
        assert_eq!(s.dim(), 0);
        assert!(s.stabilized);
    }

    #[test]
    fn quadrics_through_the_quintic_curve() {
        let s = space(2, 1, 5, 2);
        assert_eq!(s.dim(), 5);
        assert_eq!(s.dims, vec![5, 5]);
        assert_eq!(s.samples.len(), 2 * (15 + DEFAULT_MARGIN));
        for q in &s.basis {
            assert_eq!(q.homogeneous_degree(), Some(2));
            for pt in &s.samples {
                assert!(q.evaluate(pt).unwrap().is_zero());
            }
        }
        // a different seed gives the same canonical basis
        assert_eq!(space(2, 1, 5, 99).basis, s.basis);
    }

    #[test]
    fn quintic_through_the_chord_variety() {
        let e = curve();
        let f = secant_hypersurface(&e, 5, DEFAULT_MARGIN, 3).unwrap();
        let f = &f.basis[0];
        assert_eq!(f.leading_coefficient(), Some(Fp61::from_u64(1)));
        assert_eq!(f.homogeneous_degree(), Some(5));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let v = secant_sample(&e, 2, 5, &mut rng).unwrap();
            assert!(f.evaluate(&v).unwrap().is_zero());
        }
        let v: Vec<Fp61> = UniformSampler::new(5, &mut rng).sample().unwrap();
        assert!(!f.evaluate(&v).unwrap().is_zero());
    }

    #[test]
    fn chord_points_are_off_the_curve() {
        let e = curve();
        let quadrics = secant_ideal_generators(&e, 5, DEFAULT_MARGIN, 5).unwrap().basis;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let v = secant_sample(&e, 2, 5, &mut rng).unwrap();
        assert!(quadrics.iter().any(|q| !q.evaluate(&v).unwrap().is_zero()));
        for _ in 0..50 {
            let v = secant_sample(&e, 1, 5, &mut rng).unwrap();
            assert!(quadrics.iter().all(|q| q.evaluate(&v).unwrap().is_zero()));
        }
    }

    #[test]
    fn cubic_pair_for_the_sextic() {
        let e = curve();
        let pair = secant_ci_pair(&e, 6, DEFAULT_MARGIN, 7).unwrap();
        assert_eq!(pair.dim(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let v = secant_sample(&e, 2, 6, &mut rng).unwrap();
            assert!(pair.basis.iter().all(|f| f.evaluate(&v).unwrap().is_zero()));
        }
        let v: Vec<Fp61> = UniformSampler::new(6, &mut rng).sample().unwrap();
        assert!(pair.basis.iter().any(|f| !f.evaluate(&v).unwrap().is_zero()));
    }

    #[test]
    fn ideal_is_closed_under_linear_multiples() {
        let e = curve();
        let quadrics = secant_ideal_generators(&e, 5, DEFAULT_MARGIN, 9).unwrap().basis;
        let cubics = space(3, 1, 5, 10);
        let mons = monomials(5, 3);
        let mut m: Vec<Vec<Fp61>> = cubics.basis.iter().map(|c| c.coefficients_in(&mons)).collect();
        let rank = crate::linalg::canonical_basis(&m, mons.len()).len();
        for q in &quadrics {
            for i in 0..5 {
                m.push(q.mul_term(Monomial::var(i), Fp61::from_u64(1)).coefficients_in(&mons));
            }
        }
        assert_eq!(crate::linalg::canonical_basis(&m, mons.len()).len(), rank);
    }

    #[test]
    fn wrong_parity_is_rejected() {
        let e = curve();
        assert!(secant_ideal_generators(&e, 6, DEFAULT_MARGIN, 0).is_err());
        assert!(secant_ci_pair(&e, 5, DEFAULT_MARGIN, 0).is_err());
        assert!(vanishing_forms(2, &mut sampler(&e, 1, 5, 0), 0).is_err());
    }
}
