//! The Klein tensor of a skew matrix of linear forms and the pfaffian
//! Cremona transformation it defines, together with its inverse.
//!
//! Index conventions: the tensor has coefficients `c[i][j][k]`, skew in the
//! `A`-indices `i, j` and linear in the `B`-index `k`.
//!
//! * x-view: the skew matrix with `(i, j)` entry `Σ_k c_ijk x_k`, a matrix of
//!   linear forms on `B*`;
//! * y-view `ν`: the square matrix with `(k, j)` entry `Σ_i c_ijk y_i`, linear
//!   in coordinates `y` on `A`.

use rand::Rng;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::linalg::Matrix;
use crate::pfaffian::sub_pfaffians;
use crate::poly::{map_proportionality, Monomial, MultiPoly, PolyMap};
use crate::skew::{pair_index, pairs, SkewPolyMatrix};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KleinTensor<F> {
    n: usize,
    /// `c[pair_index(i, j) * n + k]` for `i < j`.
    c: Vec<F>,
}

impl<F: PrimeField> KleinTensor<F> {
    /// Reads the coefficients off a skew matrix of linear forms in `n` variables.
    pub fn from_matrix(phi: &SkewPolyMatrix<F>) -> Result<Self> {
        let n = phi.size();
        if phi.nvars() != n {
            return Err(Error::NvarsMismatch {
                left: n,
                right: phi.nvars(),
            });
        }
        if !phi.is_zero() && phi.degree() != 1 {
            return Err(Error::InvalidInput("Klein matrix entries must be linear".into()));
        }
        let mut c = Vec::with_capacity(n * n * (n - 1) / 2);
        for e in phi.upper() {
            c.extend((0..n).map(|k| e.coefficient(Monomial::var(k))));
        }
        Ok(KleinTensor { n, c })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// `c_ijk`, extended skew-symmetrically to all `i, j`.
    pub fn coeff(&self, i: usize, j: usize, k: usize) -> F {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Less => self.c[pair_index(self.n, i, j) * self.n + k],
            Greater => -self.c[pair_index(self.n, j, i) * self.n + k],
            Equal => F::zero(),
        }
    }

    pub fn x_view(&self) -> SkewPolyMatrix<F> {
        let n = self.n;
        let upper = pairs(n)
            .map(|(i, j)| MultiPoly::from_terms(n, (0..n).map(|k| (Monomial::var(k), self.coeff(i, j, k)))))
            .collect();
        SkewPolyMatrix::from_upper(n, n, 1, upper).expect("linear entries")
    }

    /// `ν` as rows indexed by `k ∈ B`, columns by `j ∈ A`.
    pub fn y_view(&self) -> Vec<Vec<MultiPoly<F>>> {
        let n = self.n;
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|j| MultiPoly::from_terms(n, (0..n).map(|i| (Monomial::var(i), self.coeff(i, j, k)))))
                    .collect()
            })
            .collect()
    }

    /// The skew form `Φ_ξ` at a point `ξ ∈ B*`.
    pub fn phi_at(&self, xi: &[F]) -> Matrix<F> {
        let n = self.n;
        Matrix::from_fn(n, n, |i, j| (0..n).fold(F::zero(), |acc, k| acc + self.coeff(i, j, k) * xi[k]))
    }

    /// `ν(a) : A → B` at a point `a ∈ A`.
    pub fn nu_at(&self, a: &[F]) -> Matrix<F> {
        let n = self.n;
        Matrix::from_fn(n, n, |k, j| (0..n).fold(F::zero(), |acc, i| acc + self.coeff(i, j, k) * a[i]))
    }
}

/// Determinants of the square submatrices on a prefix of `cols`, keyed by row mask.
struct Minors<'a, F> {
    m: &'a [Vec<MultiPoly<F>>],
    cols: &'a [usize],
    nvars: usize,
    table: FxHashMap<u32, MultiPoly<F>>,
}

impl<F: PrimeField> Minors<'_, F> {
    /// Determinant on the rows in `mask` and the first `popcount(mask)` columns,
    /// expanded along the last of those columns.
    fn det(&mut self, mask: u32) -> MultiPoly<F> {
        let size = mask.count_ones() as usize;
        if size == 0 {
            return MultiPoly::one(self.nvars);
        }
        if let Some(d) = self.table.get(&mask) {
            return d.clone();
        }
        let col = self.cols[size - 1];
        let mut acc = MultiPoly::zero(self.nvars);
        let mut rest = mask;
        let mut t = 0;
        while rest != 0 {
            let row = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let entry = &self.m[row][col];
            if !entry.is_zero() {
                let term = entry * &self.det(mask & !(1 << row));
                acc = if (t + size - 1).is_multiple_of(2) { &acc + &term } else { &acc - &term };
            }
            t += 1;
        }
        self.table.insert(mask, acc.clone());
        acc
    }
}

/// `σ_{n-2}(Φ)` computed with `ξ = y_xi`: the signed maximal minors of `ν`
/// restricted to `ξ^⊥`, each divided by `ξ`.
fn sigma_with<F: PrimeField>(nu: &[Vec<MultiPoly<F>>], xi: usize) -> Result<Vec<MultiPoly<F>>> {
    let n = nu.len();
    let cols: Vec<usize> = (0..n).filter(|&j| j != xi).collect();
    let mut minors = Minors {
        m: nu,
        cols: &cols,
        nvars: n,
        table: FxHashMap::default(),
    };
    let full = (1u32 << n) - 1;
    let y = MultiPoly::var(n, xi);
    (0..n)
        .map(|k| {
            let minor = minors.det(full & !(1 << k));
            let minor = if k % 2 == 0 { minor } else { -minor };
            minor.exact_divide(&y)
        })
        .collect()
}

/// The inverse Cremona map `f = σ_{n-2}(Φ)`, forms of degree `n - 2` in `y`.
///
/// Computed with `ξ = y_n` and again with `ξ = y_1`; the two must agree up to
/// one scalar. The result is normalized.
pub fn sigma<F: PrimeField>(phi: &KleinTensor<F>) -> Result<PolyMap<F>> {
    let n = phi.size();
    if n < 3 {
        return Err(Error::InvalidInput(format!("sigma needs n >= 3, got {n}")));
    }
    let nu = phi.y_view();
    let last = sigma_with(&nu, n - 1)?;
    let first = sigma_with(&nu, 0)?;
    if map_proportionality(&last, &first).is_none_or(|c| c.is_zero()) {
        return Err(Error::Inconsistent("sigma depends on the choice of ξ".into()));
    }
    Ok(PolyMap::new(last)?.normalized())
}

/// `(Σ_k f_k ν_kj)_j`, identically zero for `f = σ_{n-2}(Φ)`.
pub fn sigma_residuals<F: PrimeField>(phi: &KleinTensor<F>, f: &PolyMap<F>) -> Vec<MultiPoly<F>> {
    let n = phi.size();
    let nu = phi.y_view();
    (0..n)
        .map(|j| {
            (0..n).fold(MultiPoly::zero(n), |acc, k| &acc + &(&f.forms()[k] * &nu[k][j]))
        })
        .collect()
}

/// Forward map: signed submaximal pfaffians of the x-view, normalized.
pub fn forward_map<F: PrimeField>(phi: &KleinTensor<F>) -> Result<PolyMap<F>> {
    if phi.size().is_multiple_of(2) {
        return Err(Error::InvalidInput("forward map needs odd n".into()));
    }
    Ok(PolyMap::new(sub_pfaffians(&phi.x_view())?)?.normalized())
}

/// `c` with `outer ∘ inner = c · (x_1, …, x_n)`; fails unless the composite
/// is the identity up to this common factor.
pub fn composition_factor<F: PrimeField>(outer: &PolyMap<F>, inner: &PolyMap<F>) -> Result<MultiPoly<F>> {
    let n = inner.nvars();
    if outer.len() != n || outer.nvars() != inner.len() {
        return Err(Error::ArityMismatch {
            expected: n,
            found: outer.len(),
        });
    }
    let g = outer.compose(inner)?;
    let (i, gi) = g
        .forms()
        .iter()
        .enumerate()
        .find(|(_, p)| !p.is_zero())
        .ok_or_else(|| Error::IdentityFailure("composite map is zero".into()))?;
    let c = gi.exact_divide(&MultiPoly::var(n, i)).map_err(|_| {
        Error::IdentityFailure(format!("component {} of the composite is not divisible by x{}", i + 1, i + 1))
    })?;
    for (j, gj) in g.forms().iter().enumerate() {
        if *gj != c.mul_term(Monomial::var(j), F::one()) {
            return Err(Error::IdentityFailure(format!(
                "composite is not proportional to the identity at component {}",
                j + 1
            )));
        }
    }
    Ok(c)
}

/// Ranks observed at sampled points.
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RankProfile {
    /// `rank Φ_ξ` for `ξ` on `Sec^{r-1} C`; at most `n - 3`.
    pub secant_ranks: Vec<usize>,
    /// `rank Φ_ξ` for random `ξ`; `n - 1`.
    pub generic_ranks: Vec<usize>,
    /// `rank ν(a)` for random `a`; `n - 1`.
    pub nu_ranks: Vec<usize>,
    /// Whether `f(p(b*)) ≠ 0` at each random `b*`.
    pub inverse_nonzero: Vec<bool>,
    pub violations: Vec<String>,
}

impl RankProfile {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples the rank conditions satisfied by the Klein matrix.
///
/// `secant_points` are points of `Sec^{r-1} C`; the remaining checks use
/// `trials` uniform points drawn from `rng`.
pub fn rank_profile<F: PrimeField, R: Rng + ?Sized>(
    phi: &KleinTensor<F>,
    p: &PolyMap<F>,
    f: &PolyMap<F>,
    secant_points: &[Vec<F>],
    trials: usize,
    rng: &mut R,
) -> Result<RankProfile> {
    let n = phi.size();
    let mut out = RankProfile::default();
    for (s, xi) in secant_points.iter().enumerate() {
        let rank = phi.phi_at(xi).rank();
        if rank + 3 > n {
            out.violations.push(format!("secant sample {s}: rank {rank} exceeds {}", n - 3));
        }
        out.secant_ranks.push(rank);
    }
    let random_point = |rng: &mut R| -> Vec<F> { (0..n).map(|_| F::random(rng)).collect() };
    for t in 0..trials {
        let rank = phi.phi_at(&random_point(rng)).rank();
        if rank != n - 1 {
            out.violations.push(format!("generic sample {t}: rank Φ_ξ = {rank}"));
        }
        out.generic_ranks.push(rank);

        let rank = phi.nu_at(&random_point(rng)).rank();
        if rank != n - 1 {
            out.violations.push(format!("generic sample {t}: rank ν(a) = {rank}"));
        }
        out.nu_ranks.push(rank);

        let a = p.evaluate(&random_point(rng))?;
        let nonzero = f.evaluate(&a)?.iter().any(|v| !v.is_zero());
        if !nonzero {
            out.violations.push(format!("generic sample {t}: f(p(b*)) = 0"));
        }
        out.inverse_nonzero.push(nonzero);
    }
    Ok(out)
}

/// `Φ_{b*} · p(b*) = 0` at `trials` random points.
pub fn kernel_check<F: PrimeField, R: Rng + ?Sized>(
    phi: &KleinTensor<F>,
    p: &PolyMap<F>,
    trials: usize,
    rng: &mut R,
) -> Result<bool> {
    let n = phi.size();
    for _ in 0..trials {
        let b: Vec<F> = (0..n).map(|_| F::random(rng)).collect();
        let v = p.evaluate(&b)?;
        if phi.phi_at(&b).mul_vec(&v).iter().any(|x| !x.is_zero()) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn trim<F: PrimeField>(mut a: Vec<F>) -> Vec<F> {
    while a.last().is_some_and(|x| x.is_zero()) {
        a.pop();
    }
    a
}

/// Monic gcd of univariate polynomials, lowest degree first.
fn univariate_gcd<F: PrimeField>(a: Vec<F>, b: Vec<F>) -> Vec<F> {
    let (mut a, mut b) = (trim(a), trim(b));
    while !b.is_empty() {
        let lead_inv = b.last().unwrap().inv().expect("nonzero leading coefficient");
        while a.len() >= b.len() {
            let q = *a.last().unwrap() * lead_inv;
            let shift = a.len() - b.len();
            for (i, &bi) in b.iter().enumerate() {
                a[shift + i] -= q * bi;
            }
            a = trim(a);
            if a.is_empty() {
                break;
            }
        }
        std::mem::swap(&mut a, &mut b);
    }
    if let Some(&lead) = a.last() {
        let inv = lead.inv().expect("nonzero");
        a.iter_mut().for_each(|x| *x *= inv);
    }
    a
}

/// Restricts the forms to a random affine line and reports whether their
/// restrictions are coprime. A common factor of the forms survives on every
/// line, while a locus of codimension two is missed by a random one.
pub fn no_common_factor<F: PrimeField, R: Rng + ?Sized>(forms: &[MultiPoly<F>], rng: &mut R) -> Result<bool> {
    let n = forms
        .first()
        .ok_or_else(|| Error::InvalidInput("no forms".into()))?
        .nvars();
    let line: Vec<MultiPoly<F>> = (0..n)
        .map(|_| {
            MultiPoly::from_terms(
                2,
                [(Monomial::var(0), F::random(rng)), (Monomial::var(1), F::random(rng))],
            )
        })
        .collect();
    let mut g: Vec<F> = Vec::new();
    for form in forms {
        let restricted = form.compose(&line)?;
        let d = restricted.total_degree().unwrap_or(0) as usize;
        let mut coeffs = vec![F::zero(); d + 1];
        for &(m, c) in restricted.terms() {
            coeffs[m.exponent(1) as usize] += c;
        }
        g = univariate_gcd(g, coeffs);
        if g.len() == 1 {
            return Ok(true);
        }
    }
    Ok(g.len() <= 1 && !g.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::Fp61;
    use num_traits::Zero;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type P = MultiPoly<Fp61>;

    fn f(v: i64) -> Fp61 {
        Fp61::from_i64(v)
    }

    /// `c_12k = δ_k1`, `c_13k = δ_k2`, `c_23k = δ_k3`.
    fn toy() -> KleinTensor<Fp61> {
        let n = 3;
        let phi = SkewPolyMatrix::from_upper(n, n, 1, vec![P::var(n, 0), P::var(n, 1), P::var(n, 2)]).unwrap();
        KleinTensor::from_matrix(&phi).unwrap()
    }

    #[test]
    fn views_share_coefficients() {
        let t = toy();
        assert_eq!(t.coeff(0, 1, 0), f(1));
        assert_eq!(t.coeff(1, 0, 0), f(-1));
        assert_eq!(t.coeff(0, 2, 1), f(1));
        assert_eq!(t.coeff(0, 2, 0), f(0));
        let nu = t.y_view();
        // (k, j) = Σ_i c_ijk y_i; ν[0][1] = c_{0,1,0} y_0
        assert_eq!(nu[0][1], P::var(3, 0));
        assert_eq!(nu[0][0], -P::var(3, 1));
        assert_eq!(KleinTensor::from_matrix(&t.x_view()).unwrap(), t);
        // ν(a)·a = 0 by skew symmetry
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let a: Vec<Fp61> = (0..3).map(|_| Fp61::random(&mut rng)).collect();
        assert!(t.nu_at(&a).mul_vec(&a).iter().all(|x| x.is_zero()));
    }

    #[test]
    fn sigma_on_the_toy_tensor() {
        let t = toy();
        let nu = t.y_view();
        // brute force: 2x2 minors of the columns {0, 1}, divided by y_3
        let y = P::var(3, 2);
        let minor = |r0: usize, r1: usize| &(&nu[r0][0] * &nu[r1][1]) - &(&nu[r1][0] * &nu[r0][1]);
        let brute = vec![
            minor(1, 2).exact_divide(&y).unwrap(),
            (-minor(0, 2)).exact_divide(&y).unwrap(),
            minor(0, 1).exact_divide(&y).unwrap(),
        ];
        let s = sigma(&t).unwrap();
        assert_eq!(s.degree(), 1);
        assert!(map_proportionality(s.forms(), &brute).is_some());
        assert!(sigma_residuals(&t, &s).iter().all(|p| p.is_zero()));
    }

    #[test]
    fn sigma_on_a_random_tensor() {
        // any skew tensor works: divisibility comes from skew symmetry alone
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for n in [4, 5] {
            let lin = crate::poly::monomials(n, 1);
            let upper = (0..n * (n - 1) / 2)
                .map(|_| P::from_terms(n, lin.iter().map(|&m| (m, Fp61::random(&mut rng)))))
                .collect();
            let t = KleinTensor::from_matrix(&SkewPolyMatrix::from_upper(n, n, 1, upper).unwrap()).unwrap();
            let s = sigma(&t).unwrap();
            assert_eq!(s.degree(), n as u32 - 2);
            assert!(sigma_residuals(&t, &s).iter().all(|p| p.is_zero()));
            let a: Vec<Fp61> = (0..n).map(|_| Fp61::random(&mut rng)).collect();
            assert!(s.evaluate(&a).unwrap().iter().any(|v| !v.is_zero()));
        }
    }

    #[test]
    fn composition_factor_examples() {
        let n = 2;
        let x = |i| P::var(n, i);
        // (x1^2, x1 x2) ∘ id = x1 · (x1, x2)
        let sq = PolyMap::new(vec![x(0).pow(2), &x(0) * &x(1)]).unwrap();
        let id = PolyMap::identity(n);
        assert_eq!(composition_factor(&sq, &id).unwrap(), x(0));
        let swap = PolyMap::new(vec![x(1), x(0)]).unwrap();
        assert!(composition_factor(&swap, &id).is_err());
    }

    #[test]
    fn gcd_probe() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 3;
        let x = |i| P::var(n, i);
        let coprime = vec![x(0).pow(2), x(1).pow(2), x(2).pow(2)];
        assert!(no_common_factor(&coprime, &mut rng).unwrap());
        let shared = vec![&x(0) * &x(1), &x(0) * &x(2), x(0).pow(2)];
        assert!(!no_common_factor(&shared, &mut rng).unwrap());
        assert_eq!(univariate_gcd(vec![f(-1), f(0), f(1)], vec![f(1), f(1)]), vec![f(1), f(1)]);
    }
}
