//! Short Weierstrass curves `y^2 = x^3 + ax + b`, their Riemann–Roch spaces
//! `H^0(O(nO))` and the embedding into `P^{n-1}`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::PrimeField;

const RETRY_CAP: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Curve<F> {
    a: F,
    b: F,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CurvePoint<F> {
    Infinity,
    Affine { x: F, y: F },
}

impl<F: PrimeField> CurvePoint<F> {
    pub fn affine(x: F, y: F) -> Self {
        CurvePoint::Affine { x, y }
    }

    pub fn coords(&self) -> Result<(F, F)> {
        match *self {
            CurvePoint::Affine { x, y } => Ok((x, y)),
            CurvePoint::Infinity => Err(Error::PointAtInfinity),
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, CurvePoint::Infinity)
    }
}

impl<F: PrimeField> Curve<F> {
    pub fn new(a: F, b: F) -> Result<Self> {
        let disc = F::from_i64(4) * a * a * a + F::from_i64(27) * b * b;
        if disc.is_zero() {
            return Err(Error::SingularCurve);
        }
        Ok(Curve { a, b })
    }

    pub fn a(&self) -> F {
        self.a
    }

    pub fn b(&self) -> F {
        self.b
    }

    /// `x^3 + ax + b`
    pub fn rhs(&self, x: F) -> F {
        (x * x + self.a) * x + self.b
    }

    pub fn contains(&self, p: &CurvePoint<F>) -> bool {
        match *p {
            CurvePoint::Infinity => true,
            CurvePoint::Affine { x, y } => y * y == self.rhs(x),
        }
    }

    pub fn point(&self, x: F, y: F) -> Result<CurvePoint<F>> {
        let p = CurvePoint::affine(x, y);
        if !self.contains(&p) {
            return Err(Error::NotOnCurve);
        }
        Ok(p)
    }

    pub fn neg(&self, p: &CurvePoint<F>) -> CurvePoint<F> {
        match *p {
            CurvePoint::Infinity => CurvePoint::Infinity,
            CurvePoint::Affine { x, y } => CurvePoint::affine(x, -y),
        }
    }

    /// Chord-tangent addition.
    pub fn add(&self, p: &CurvePoint<F>, q: &CurvePoint<F>) -> CurvePoint<F> {
        let (x1, y1, x2, y2) = match (*p, *q) {
            (CurvePoint::Infinity, _) => return *q,
            (_, CurvePoint::Infinity) => return *p,
            (CurvePoint::Affine { x: x1, y: y1 }, CurvePoint::Affine { x: x2, y: y2 }) => (x1, y1, x2, y2),
        };
        let slope = if x1 != x2 {
            (y2 - y1) * (x2 - x1).inv().expect("distinct abscissae")
        } else if y1 == y2 && !y1.is_zero() {
            (F::from_i64(3) * x1 * x1 + self.a) * (y1 + y1).inv().expect("nonzero ordinate")
        } else {
            return CurvePoint::Infinity;
        };
        let x3 = slope * slope - x1 - x2;
        let y3 = slope * (x1 - x3) - y1;
        CurvePoint::affine(x3, y3)
    }

    /// Affine point with uniform abscissa; the ordinate is the smaller square root.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> CurvePoint<F> {
        loop {
            let x = F::random(rng);
            if let Some(y) = self.rhs(x).sqrt() {
                return CurvePoint::affine(x, y);
            }
        }
    }

    /// `k` random points with pairwise distinct abscissae.
    pub fn distinct_points<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<Vec<CurvePoint<F>>> {
        let mut pts: Vec<CurvePoint<F>> = Vec::with_capacity(k);
        let mut tries = 0;
        while pts.len() < k {
            let q = self.random_point(rng);
            let x = q.coords()?.0;
            if pts.iter().any(|p| p.coords().map(|c| c.0 == x).unwrap_or(true)) {
                tries += 1;
                if tries >= RETRY_CAP {
                    return Err(Error::SamplerExhausted("colliding curve points".into()));
                }
                continue;
            }
            pts.push(q);
        }
        Ok(pts)
    }
}

/// Function `u(x) + y·v(x)` on the curve, reduced modulo the curve equation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveFunction<F> {
    /// Coefficients of `u`, lowest degree first, without trailing zeros.
    u: Vec<F>,
    /// Coefficients of `v`, lowest degree first, without trailing zeros.
    v: Vec<F>,
}

fn trim<F: PrimeField>(mut c: Vec<F>) -> Vec<F> {
    while c.last().is_some_and(|x| x.is_zero()) {
        c.pop();
    }
    c
}

fn poly_mul<F: PrimeField>(a: &[F], b: &[F]) -> Vec<F> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![F::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add<F: PrimeField>(a: &[F], b: &[F]) -> Vec<F> {
    let mut out = vec![F::zero(); a.len().max(b.len())];
    for (i, &x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, &x) in b.iter().enumerate() {
        out[i] += x;
    }
    trim(out)
}

fn horner<F: PrimeField>(c: &[F], x: F) -> F {
    c.iter().rev().fold(F::zero(), |acc, &k| acc * x + k)
}

impl<F: PrimeField> CurveFunction<F> {
    pub fn new(u: Vec<F>, v: Vec<F>) -> Self {
        CurveFunction { u: trim(u), v: trim(v) }
    }

    /// `x^i` (pole order `2i`).
    pub fn x_power(i: usize) -> Self {
        let mut u = vec![F::zero(); i + 1];
        u[i] = F::one();
        CurveFunction { u, v: Vec::new() }
    }

    /// `x^i y` (pole order `2i + 3`).
    pub fn x_power_y(i: usize) -> Self {
        let mut v = vec![F::zero(); i + 1];
        v[i] = F::one();
        CurveFunction { u: Vec::new(), v }
    }

    pub fn x_part(&self) -> &[F] {
        &self.u
    }

    pub fn y_part(&self) -> &[F] {
        &self.v
    }

    /// Order of the pole at the point at infinity; `None` for the zero function.
    pub fn pole_order(&self) -> Option<usize> {
        let from_u = self.u.len().checked_sub(1).map(|d| 2 * d);
        let from_v = self.v.len().checked_sub(1).map(|d| 2 * d + 3);
        from_u.max(from_v)
    }

    pub fn eval(&self, q: &CurvePoint<F>) -> Result<F> {
        let (x, y) = q.coords()?;
        Ok(horner(&self.u, x) + y * horner(&self.v, x))
    }

    pub fn add(&self, other: &Self) -> Self {
        CurveFunction {
            u: poly_add(&self.u, &other.u),
            v: poly_add(&self.v, &other.v),
        }
    }

    /// Product, with `y^2` replaced by `x^3 + ax + b`.
    pub fn mul(&self, other: &Self, curve: &Curve<F>) -> Self {
        let cubic = [curve.b(), curve.a(), F::zero(), F::one()];
        let vv = poly_mul(&poly_mul(&self.v, &other.v), &cubic);
        CurveFunction {
            u: trim(poly_add(&poly_mul(&self.u, &other.u), &vv)),
            v: trim(poly_add(&poly_mul(&self.u, &other.v), &poly_mul(&self.v, &other.u))),
        }
    }
}

/// Basis of `H^0(O(nO))`: `1, x, y, x^2, xy, …` with pole orders `0, 2, 3, …, n`.
pub fn rr_basis<F: PrimeField>(n: usize) -> Vec<CurveFunction<F>> {
    assert!(n >= 1);
    std::iter::once(0)
        .chain(2..=n)
        .map(|k| {
            if k % 2 == 0 {
                CurveFunction::x_power(k / 2)
            } else {
                CurveFunction::x_power_y((k - 3) / 2)
            }
        })
        .collect()
}

/// Values of [`rr_basis`] at `q`, without building the functions.
pub fn rr_values<F: PrimeField>(q: &CurvePoint<F>, n: usize) -> Result<Vec<F>> {
    let (x, y) = q.coords()?;
    let mut out = Vec::with_capacity(n);
    out.push(F::one());
    let (mut even, mut odd) = (F::one(), y);
    for k in 2..=n {
        if k % 2 == 0 {
            even *= x;
            out.push(even);
        } else {
            out.push(odd);
            odd *= x;
        }
    }
    Ok(out)
}

/// The point of `P^{n-1}` cut out by `q`: `(g_1(q), …, g_n(q))`.
pub fn embed<F: PrimeField>(q: &CurvePoint<F>, n: usize) -> Result<Vec<F>> {
    rr_values(q, n)
}

/// Random point on the `k`-secant variety `Sec^k C ⊂ P^{n-1}`: a combination
/// with nonzero coefficients of the images of `k` points with distinct abscissae.
pub fn secant_sample<F: PrimeField, R: Rng + ?Sized>(
    curve: &Curve<F>,
    k: usize,
    n: usize,
    rng: &mut R,
) -> Result<Vec<F>> {
    if k == 0 {
        return Err(Error::InvalidInput("secant order must be positive".into()));
    }
    let pts = curve.distinct_points(k, rng)?;
    let mut v = vec![F::zero(); n];
    for q in &pts {
        let lambda = F::random_nonzero(rng);
        for (acc, g) in v.iter_mut().zip(embed(q, n)?) {
            *acc += lambda * g;
        }
    }
    Ok(v)
}

/// An endless source of points in `F_p^n`.
pub trait PointSource<F> {
    fn dim(&self) -> usize;
    fn sample(&mut self) -> Result<Vec<F>>;
}

/// Samples `Sec^k C`, seeded deterministically.
pub struct SecantSampler<F, R> {
    curve: Curve<F>,
    k: usize,
    n: usize,
    rng: R,
}

impl<F: PrimeField, R: Rng> SecantSampler<F, R> {
    pub fn new(curve: Curve<F>, k: usize, n: usize, rng: R) -> Self {
        SecantSampler { curve, k, n, rng }
    }
}

impl<F: PrimeField, R: Rng> PointSource<F> for SecantSampler<F, R> {
    fn dim(&self) -> usize {
        self.n
    }

    fn sample(&mut self) -> Result<Vec<F>> {
        secant_sample(&self.curve, self.k, self.n, &mut self.rng)
    }
}

/// Uniform points of `F_p^n`.
pub struct UniformSampler<R> {
    n: usize,
    rng: R,
}

impl<R: Rng> UniformSampler<R> {
    pub fn new(n: usize, rng: R) -> Self {
        UniformSampler { n, rng }
    }
}

impl<F: PrimeField, R: Rng> PointSource<F> for UniformSampler<R> {
    fn dim(&self) -> usize {
        self.n
    }

    fn sample(&mut self) -> Result<Vec<F>> {
        Ok((0..self.n).map(|_| F::random(&mut self.rng)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::linalg::Matrix;
    use crate::Fp61;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn curve() -> Curve<Fp61> {
        Curve::new(Fp61::from_u64(1), Fp61::from_u64(1)).unwrap()
    }

    fn f(v: i64) -> Fp61 {
        Fp61::from_i64(v)
    }

    #[test]
    fn singular_curves_are_rejected() {
        // y^2 = x^3 - 3x + 2 has a node at (1, 0)
        assert!(matches!(Curve::new(f(-3), f(2)), Err(Error::SingularCurve)));
        assert!(Curve::new(f(0), f(0)).is_err());
    }

    #[test]
    fn group_law() {
        let e = curve();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let p = e.random_point(&mut rng);
            let q = e.random_point(&mut rng);
            let r = e.random_point(&mut rng);
            assert_eq!(e.add(&p, &CurvePoint::Infinity), p);
            assert_eq!(e.add(&p, &e.neg(&p)), CurvePoint::Infinity);
            assert_eq!(e.add(&p, &q), e.add(&q, &p));
            let lhs = e.add(&e.add(&p, &q), &r);
            assert_eq!(lhs, e.add(&p, &e.add(&q, &r)));
            assert!(e.contains(&lhs));
            let d = e.add(&p, &p);
            assert!(e.contains(&d));
            assert_eq!(e.add(&d, &e.neg(&p)), p);
        }
    }

    #[test]
    fn random_points() {
        let e = curve();
        let draw = |seed| e.random_point(&mut ChaCha8Rng::seed_from_u64(seed));
        assert_eq!(draw(9), draw(9));
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut xs = HashSet::new();
        for _ in 0..1000 {
            let q = e.random_point(&mut rng);
            assert!(e.contains(&q));
            let (x, y) = q.coords().unwrap();
            assert!(y.value() <= (-y).value());
            xs.insert(x);
        }
        assert!(xs.len() >= 990);
    }

    #[test]
    fn riemann_roch_bases() {
        let pole_orders = |n| -> Vec<usize> {
            rr_basis::<Fp61>(n).iter().map(|g| g.pole_order().unwrap()).collect()
        };
        assert_eq!(pole_orders(5), vec![0, 2, 3, 4, 5]);
        assert_eq!(pole_orders(6), vec![0, 2, 3, 4, 5, 6]);
        assert_eq!(pole_orders(7), vec![0, 2, 3, 4, 5, 6, 7]);
        let b = rr_basis::<Fp61>(7);
        assert_eq!(b[2], CurveFunction::x_power_y(0));
        assert_eq!(b[6], CurveFunction::x_power_y(2));
        assert_eq!(b[5], CurveFunction::x_power(3));
    }

    #[test]
    fn embedding_and_evaluation() {
        let e = curve();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let q = e.random_point(&mut rng);
        let (x, y) = q.coords().unwrap();
        assert_eq!(embed(&q, 5).unwrap(), vec![f(1), x, y, x * x, x * y]);
        for n in 3..10 {
            let direct: Vec<Fp61> = rr_basis(n).iter().map(|g| g.eval(&q).unwrap()).collect();
            assert_eq!(embed(&q, n).unwrap(), direct);
        }
        assert!(embed(&CurvePoint::<Fp61>::Infinity, 5).is_err());

        let one = CurveFunction::<Fp61>::x_power(0);
        assert_eq!(one.eval(&q).unwrap(), f(1));
        let xy = CurveFunction::<Fp61>::x_power_y(1);
        assert_eq!(xy.eval(&q).unwrap(), x * y);
        let yy = CurveFunction::x_power_y(0).mul(&CurveFunction::x_power_y(0), &e);
        let cubic = CurveFunction::new(vec![e.b(), e.a(), f(0), f(1)], vec![]);
        assert_eq!(yy, cubic);
        assert_eq!(yy.eval(&q).unwrap(), y * y);
        assert_eq!(yy.pole_order(), Some(6));
    }

    #[test]
    fn basis_values_are_independent() {
        let e = curve();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for n in [3, 5, 6, 7] {
            let pts = e.distinct_points(n, &mut rng).unwrap();
            let m = Matrix::from_rows(pts.iter().map(|q| embed(q, n).unwrap()).collect(), n);
            assert_eq!(m.rank(), n);
            // no hyperplane contains 2n points of the curve
            let pts = e.distinct_points(2 * n, &mut rng).unwrap();
            let m = Matrix::from_rows(pts.iter().map(|q| embed(q, n).unwrap()).collect(), n);
            assert!(m.nullspace().is_empty());
        }
    }

    #[test]
    fn secant_samples() {
        let e = curve();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        assert!(secant_sample(&e, 0, 5, &mut rng).is_err());
        // a point of Sec^1 C is a multiple of an embedded curve point
        let v = secant_sample(&e, 1, 5, &mut rng).unwrap();
        let s = v[0].inv().unwrap();
        let v: Vec<Fp61> = v.iter().map(|&t| t * s).collect();
        let q = e.point(v[1], v[2]).unwrap();
        assert_eq!(embed(&q, 5).unwrap(), v);
    }
}
