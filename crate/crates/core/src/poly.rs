//! Sparse multivariate polynomials over a field.
//!
//! Terms are stored sorted in descending graded-lexicographic order (total
//! degree first, then exponent of `x1`, `x2`, ...). The same order is used for
//! every coefficient-vector embedding in the crate: [`monomials`] enumerates a
//! degree slice in exactly this order.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::linalg::canonical_basis;

/// Maximum number of variables a [`Monomial`] can carry.
pub const MAX_VARS: usize = 15;
const MAX_DEGREE: u32 = 255;
const DEGREE_SHIFT: u32 = 120;

/// Exponent vector packed into a `u128`: the total degree in the top byte,
/// then one byte per variable. Integer order on the packing is graded-lex
/// order, and multiplication is integer addition.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial(u128);

#[inline(always)]
fn var_shift(i: usize) -> u32 {
    112 - 8 * i as u32
}

impl Monomial {
    pub const ONE: Monomial = Monomial(0);

    pub fn from_exponents(exps: &[u32]) -> Result<Self> {
        if exps.len() > MAX_VARS {
            return Err(Error::TooManyVariables { found: exps.len() });
        }
        let degree: u32 = exps.iter().sum();
        if degree > MAX_DEGREE {
            return Err(Error::DegreeOverflow(degree));
        }
        let mut packed = (degree as u128) << DEGREE_SHIFT;
        for (i, &e) in exps.iter().enumerate() {
            packed |= (e as u128) << var_shift(i);
        }
        Ok(Monomial(packed))
    }

    /// The monomial `x_i` (0-based).
    pub fn var(i: usize) -> Self {
        assert!(i < MAX_VARS);
        Monomial((1u128 << DEGREE_SHIFT) | (1u128 << var_shift(i)))
    }

    #[inline(always)]
    pub fn degree(self) -> u32 {
        (self.0 >> DEGREE_SHIFT) as u32
    }

    #[inline(always)]
    pub fn exponent(self, i: usize) -> u32 {
        ((self.0 >> var_shift(i)) & 0xff) as u32
    }

    pub fn exponents(self, nvars: usize) -> Vec<u32> {
        (0..nvars).map(|i| self.exponent(i)).collect()
    }

    /// Product; the caller guarantees the total degree stays below 256.
    #[inline(always)]
    pub fn mul_unchecked(self, other: Self) -> Self {
        Monomial(self.0 + other.0)
    }

    pub fn checked_mul(self, other: Self) -> Option<Self> {
        (self.degree() + other.degree() <= MAX_DEGREE).then(|| self.mul_unchecked(other))
    }

    pub fn divides(self, other: Self) -> bool {
        (0..MAX_VARS).all(|i| self.exponent(i) <= other.exponent(i))
    }

    /// `self / other` when `other` divides `self`.
    pub fn checked_div(self, other: Self) -> Option<Self> {
        other.divides(self).then(|| Monomial(self.0 - other.0))
    }

    /// Index of the first variable with a positive exponent.
    pub fn first_var(self) -> Option<usize> {
        (0..MAX_VARS).find(|&i| self.exponent(i) > 0)
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let last = (0..MAX_VARS).rev().find(|&i| self.exponent(i) > 0).map_or(0, |i| i + 1);
        write!(f, "{:?}", self.exponents(last))
    }
}

/// All monomials of total degree `degree` in `nvars` variables, descending graded-lex.
pub fn monomials(nvars: usize, degree: u32) -> Vec<Monomial> {
    fn rec(i: usize, nvars: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if i + 1 == nvars {
            cur.push(left);
            out.push(Monomial::from_exponents(cur).expect("bounded degree"));
            cur.pop();
            return;
        }
        for e in (0..=left).rev() {
            cur.push(e);
            rec(i + 1, nvars, left - e, cur, out);
            cur.pop();
        }
    }
    assert!((1..=MAX_VARS).contains(&nvars) && degree <= MAX_DEGREE);
    let mut out = Vec::new();
    rec(0, nvars, degree, &mut Vec::with_capacity(nvars), &mut out);
    out
}

/// Number of monomials of degree `degree` in `nvars` variables.
pub fn monomial_count(nvars: usize, degree: u32) -> usize {
    // C(degree + nvars - 1, nvars - 1)
    let (n, k) = (degree as u128 + nvars as u128 - 1, nvars as u128 - 1);
    let mut c = 1u128;
    for i in 0..k {
        c = c * (n - i) / (i + 1);
    }
    c as usize
}

/// Polynomial in `nvars` variables with nonzero coefficients, terms sorted
/// in descending graded-lex order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiPoly<F> {
    nvars: usize,
    terms: Vec<(Monomial, F)>,
}

impl<F: Field> MultiPoly<F> {
    pub fn zero(nvars: usize) -> Self {
        assert!(nvars <= MAX_VARS, "too many variables");
        MultiPoly {
            nvars,
            terms: Vec::new(),
        }
    }

    pub fn constant(nvars: usize, c: F) -> Self {
        Self::monomial(nvars, Monomial::ONE, c)
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, F::one())
    }

    /// The coordinate `x_i` (0-based).
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars);
        Self::monomial(nvars, Monomial::var(i), F::one())
    }

    pub fn monomial(nvars: usize, m: Monomial, c: F) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.push((m, c));
        }
        p
    }

    /// Collects terms, merging duplicates and dropping zeros.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Monomial, F)>) -> Self {
        let mut acc: FxHashMap<Monomial, F> = FxHashMap::default();
        for (m, c) in terms {
            *acc.entry(m).or_insert_with(F::zero) += c;
        }
        Self::from_map(nvars, acc)
    }

    /// Builds from exponent vectors, validating their length.
    pub fn from_exponent_terms(nvars: usize, terms: &[(Vec<u32>, F)]) -> Result<Self> {
        let mut out = Vec::with_capacity(terms.len());
        for (exp, c) in terms {
            if exp.len() != nvars {
                return Err(Error::ArityMismatch {
                    expected: nvars,
                    found: exp.len(),
                });
            }
            out.push((Monomial::from_exponents(exp)?, *c));
        }
        Ok(Self::from_terms(nvars, out))
    }

    /// Like [`MultiPoly::from_exponent_terms`] but also checks that every term has degree `degree`.
    pub fn homogeneous(nvars: usize, degree: u32, terms: &[(Vec<u32>, F)]) -> Result<Self> {
        let p = Self::from_exponent_terms(nvars, terms)?;
        if p.terms.iter().any(|(m, _)| m.degree() != degree) {
            return Err(Error::NotHomogeneous);
        }
        Ok(p)
    }

    fn from_map(nvars: usize, acc: FxHashMap<Monomial, F>) -> Self {
        let mut terms: Vec<(Monomial, F)> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.sort_unstable_by_key(|t| std::cmp::Reverse(t.0));
        MultiPoly { nvars, terms }
    }

    /// From terms already sorted descending with nonzero coefficients.
    fn from_sorted(nvars: usize, terms: Vec<(Monomial, F)>) -> Self {
        debug_assert!(terms.windows(2).all(|w| w[0].0 > w[1].0));
        debug_assert!(terms.iter().all(|(_, c)| !c.is_zero()));
        MultiPoly { nvars, terms }
    }

    /// Linear combination of monomials with a coefficient vector in the given basis order.
    pub fn from_coefficients(nvars: usize, basis: &[Monomial], coeffs: &[F]) -> Self {
        assert_eq!(basis.len(), coeffs.len());
        Self::from_terms(nvars, basis.iter().copied().zip(coeffs.iter().copied()))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(Monomial, F)] {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn leading_term(&self) -> Option<(Monomial, F)> {
        self.terms.first().copied()
    }

    pub fn leading_coefficient(&self) -> Option<F> {
        self.terms.first().map(|t| t.1)
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.first().map(|t| t.0.degree())
    }

    /// The common degree of all terms; `None` for zero or mixed degrees.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let d = self.total_degree()?;
        self.terms.iter().all(|(m, _)| m.degree() == d).then_some(d)
    }

    /// The zero polynomial counts as homogeneous.
    pub fn is_homogeneous(&self) -> bool {
        self.is_zero() || self.homogeneous_degree().is_some()
    }

    pub fn coefficient(&self, m: Monomial) -> F {
        self.terms
            .binary_search_by(|t| m.cmp(&t.0))
            .map_or(F::zero(), |i| self.terms[i].1)
    }

    /// Coefficients against an explicit monomial list; terms outside the list are ignored.
    pub fn coefficients_in(&self, basis: &[Monomial]) -> Vec<F> {
        basis.iter().map(|&m| self.coefficient(m)).collect()
    }

    pub fn scale(&self, c: F) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Self::from_sorted(self.nvars, self.terms.iter().map(|&(m, v)| (m, v * c)).collect())
    }

    pub fn mul_term(&self, m: Monomial, c: F) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        self.check_degree(m.degree());
        Self::from_sorted(
            self.nvars,
            self.terms.iter().map(|&(t, v)| (t.mul_unchecked(m), v * c)).collect(),
        )
    }

    /// Rescales so the leading coefficient is one (zero stays zero).
    pub fn monic(&self) -> Self {
        match self.leading_coefficient() {
            Some(c) => self.scale(c.inv().expect("nonzero leading coefficient")),
            None => self.clone(),
        }
    }

    fn check_degree(&self, extra: u32) {
        let d = self.total_degree().unwrap_or(0) + extra;
        assert!(d <= MAX_DEGREE, "total degree {d} exceeds {MAX_DEGREE}");
    }

    fn check_ring(&self, other: &Self) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::NvarsMismatch {
                left: self.nvars,
                right: other.nvars,
            });
        }
        Ok(())
    }

    fn merge(&self, other: &Self, sign: F) -> Self {
        let (a, b) = (&self.terms, &other.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Greater => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Less => {
                    out.push((b[j].0, b[j].1 * sign));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = a[i].1 + b[j].1 * sign;
                    if !c.is_zero() {
                        out.push((a[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend(b[j..].iter().map(|&(m, c)| (m, c * sign)));
        Self::from_sorted(self.nvars, out)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_ring(other)?;
        Ok(self.merge(other, F::one()))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_ring(other)?;
        Ok(self.merge(other, -F::one()))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_ring(other)?;
        let d = self.total_degree().unwrap_or(0) + other.total_degree().unwrap_or(0);
        if d > MAX_DEGREE {
            return Err(Error::DegreeOverflow(d));
        }
        Ok(self.mul_impl(other))
    }

    fn mul_impl(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero(self.nvars);
        }
        let (small, large) = if self.terms.len() <= other.terms.len() {
            (self, other)
        } else {
            (other, self)
        };
        if small.terms.len() == 1 {
            let (m, c) = small.terms[0];
            return large.mul_term(m, c);
        }
        let mut acc: FxHashMap<Monomial, F> = FxHashMap::default();
        acc.reserve(large.terms.len() * small.terms.len().min(64));
        for &(ms, cs) in &small.terms {
            for &(ml, cl) in &large.terms {
                *acc.entry(ms.mul_unchecked(ml)).or_insert_with(F::zero) += cs * cl;
            }
        }
        Self::from_map(self.nvars, acc)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.nvars);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// `∂/∂x_i` with a 0-based index.
    pub fn partial_derivative(&self, i: usize) -> Result<Self> {
        if i >= self.nvars {
            return Err(Error::VariableIndex {
                index: i,
                nvars: self.nvars,
            });
        }
        let xi = Monomial::var(i);
        // descending order survives: dividing every term by x_i is order preserving
        let terms = self
            .terms
            .iter()
            .filter_map(|&(m, c)| {
                let e = m.exponent(i);
                if e == 0 {
                    return None;
                }
                let c = c * F::from_i64(e as i64);
                (!c.is_zero()).then(|| (m.checked_div(xi).expect("positive exponent"), c))
            })
            .collect();
        Ok(Self::from_sorted(self.nvars, terms))
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.nvars)
            .map(|i| self.partial_derivative(i).expect("index in range"))
            .collect()
    }

    pub fn evaluate(&self, point: &[F]) -> Result<F> {
        if point.len() != self.nvars {
            return Err(Error::ArityMismatch {
                expected: self.nvars,
                found: point.len(),
            });
        }
        let max_deg = self.total_degree().unwrap_or(0) as usize;
        let powers: Vec<Vec<F>> = point
            .iter()
            .map(|&v| {
                let mut row = Vec::with_capacity(max_deg + 1);
                let mut acc = F::one();
                for _ in 0..=max_deg {
                    row.push(acc);
                    acc *= v;
                }
                row
            })
            .collect();
        Ok(self.terms.iter().fold(F::zero(), |acc, &(m, c)| {
            let mut t = c;
            for (i, pw) in powers.iter().enumerate() {
                let e = m.exponent(i) as usize;
                if e > 0 {
                    t *= pw[e];
                }
            }
            acc + t
        }))
    }

    /// `Q` with `self = Q * divisor`, or [`Error::NotDivisible`].
    ///
    /// Monomial divisors shift exponents; general divisors use graded-lex
    /// division with a zero-remainder test.
    pub fn exact_divide(&self, divisor: &Self) -> Result<Self> {
        self.check_ring(divisor)?;
        let (lm, lc) = divisor.leading_term().ok_or(Error::DivisionByZero)?;
        let lc_inv = lc.inv().expect("nonzero leading coefficient");
        if divisor.terms.len() == 1 {
            let terms = self
                .terms
                .iter()
                .map(|&(m, c)| m.checked_div(lm).map(|q| (q, c * lc_inv)).ok_or(Error::NotDivisible))
                .collect::<Result<Vec<_>>>()?;
            return Ok(Self::from_sorted(self.nvars, terms));
        }
        let mut rem = self.clone();
        let mut quotient = Vec::new();
        while let Some((m, c)) = rem.leading_term() {
            let q = m.checked_div(lm).ok_or(Error::NotDivisible)?;
            let qc = c * lc_inv;
            quotient.push((q, qc));
            rem = rem.merge(&divisor.mul_term(q, qc), -F::one());
        }
        Ok(Self::from_sorted(self.nvars, quotient))
    }

    /// Substitutes `x_i -> maps[i]`.
    ///
    /// Uses a multivariate Horner scheme: `P = c + Σ_j x_j P_j` where `P_j`
    /// only involves `x_j, …, x_n`, so each trie node of the exponent set
    /// costs one multiplication.
    pub fn compose(&self, maps: &[Self]) -> Result<Self> {
        if maps.len() != self.nvars {
            return Err(Error::ArityMismatch {
                expected: self.nvars,
                found: maps.len(),
            });
        }
        let Some(out_nvars) = maps.first().map(|m| m.nvars) else {
            // zero variables: P is a constant
            return Ok(self.clone());
        };
        if let Some(bad) = maps.iter().find(|m| m.nvars != out_nvars) {
            return Err(Error::NvarsMismatch {
                left: out_nvars,
                right: bad.nvars,
            });
        }
        let map_deg = maps.iter().filter_map(|m| m.total_degree()).max().unwrap_or(0);
        let d = self.total_degree().unwrap_or(0) * map_deg;
        if d > MAX_DEGREE {
            return Err(Error::DegreeOverflow(d));
        }
        Ok(compose_rec(&self.terms, maps, out_nvars))
    }
}

fn compose_rec<F: Field>(terms: &[(Monomial, F)], maps: &[MultiPoly<F>], nvars: usize) -> MultiPoly<F> {
    let mut constant = F::zero();
    let mut groups: Vec<Vec<(Monomial, F)>> = vec![Vec::new(); maps.len()];
    for &(m, c) in terms {
        match m.first_var() {
            None => constant += c,
            Some(j) => groups[j].push((m.checked_div(Monomial::var(j)).expect("x_j divides"), c)),
        }
    }
    let mut acc = MultiPoly::constant(nvars, constant);
    for (j, group) in groups.iter().enumerate() {
        if group.is_empty() {
            continue;
        }
        let inner = compose_rec(group, maps, nvars);
        acc = &acc + &(&maps[j] * &inner);
    }
    acc
}

impl<F: Field> Add for &MultiPoly<F> {
    type Output = MultiPoly<F>;
    fn add(self, rhs: Self) -> MultiPoly<F> {
        self.checked_add(rhs).expect("ring mismatch in +")
    }
}

impl<F: Field> Sub for &MultiPoly<F> {
    type Output = MultiPoly<F>;
    fn sub(self, rhs: Self) -> MultiPoly<F> {
        self.checked_sub(rhs).expect("ring mismatch in -")
    }
}

impl<F: Field> Mul for &MultiPoly<F> {
    type Output = MultiPoly<F>;
    fn mul(self, rhs: Self) -> MultiPoly<F> {
        self.checked_mul(rhs).expect("ring mismatch or degree overflow in *")
    }
}

impl<F: Field> Neg for &MultiPoly<F> {
    type Output = MultiPoly<F>;
    fn neg(self) -> MultiPoly<F> {
        self.scale(-F::one())
    }
}

impl<F: Field> Add for MultiPoly<F> {
    type Output = MultiPoly<F>;
    fn add(self, rhs: Self) -> MultiPoly<F> {
        &self + &rhs
    }
}

impl<F: Field> Sub for MultiPoly<F> {
    type Output = MultiPoly<F>;
    fn sub(self, rhs: Self) -> MultiPoly<F> {
        &self - &rhs
    }
}

impl<F: Field> Mul for MultiPoly<F> {
    type Output = MultiPoly<F>;
    fn mul(self, rhs: Self) -> MultiPoly<F> {
        &self * &rhs
    }
}

impl<F: Field> Neg for MultiPoly<F> {
    type Output = MultiPoly<F>;
    fn neg(self) -> MultiPoly<F> {
        -&self
    }
}

impl<F: Field + fmt::Display> fmt::Display for MultiPoly<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for i in 0..self.nvars {
                match m.exponent(i) {
                    0 => {}
                    1 => write!(f, "*x{}", i + 1)?,
                    e => write!(f, "*x{}^{e}", i + 1)?,
                }
            }
        }
        Ok(())
    }
}

impl<F: fmt::Debug> fmt::Debug for MultiPoly<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiPoly")
            .field("nvars", &self.nvars)
            .field("terms", &self.terms)
            .finish()
    }
}

/// An ordered tuple of homogeneous forms of one common degree in a common
/// ring: a rational map `P^{n-1} ⇢ P^{m-1}` given by `m` forms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyMap<F> {
    nvars: usize,
    degree: u32,
    forms: Vec<MultiPoly<F>>,
}

impl<F: Field> PolyMap<F> {
    /// Rejects empty or all-zero tuples, ring mismatches and mixed degrees.
    pub fn new(forms: Vec<MultiPoly<F>>) -> Result<Self> {
        let nvars = forms
            .first()
            .ok_or_else(|| Error::InvalidInput("empty polynomial map".into()))?
            .nvars;
        let mut degree = None;
        for f in &forms {
            if f.nvars != nvars {
                return Err(Error::NvarsMismatch {
                    left: nvars,
                    right: f.nvars,
                });
            }
            if f.is_zero() {
                continue;
            }
            let d = f.homogeneous_degree().ok_or(Error::NotHomogeneous)?;
            match degree {
                None => degree = Some(d),
                Some(e) if e != d => return Err(Error::UnequalDegrees),
                _ => {}
            }
        }
        let degree = degree.ok_or_else(|| Error::InvalidInput("all forms are zero".into()))?;
        Ok(PolyMap { nvars, degree, forms })
    }

    /// `(x_1, …, x_n)`.
    pub fn identity(nvars: usize) -> Self {
        Self::new((0..nvars).map(|i| MultiPoly::var(nvars, i)).collect()).expect("identity map")
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn forms(&self) -> &[MultiPoly<F>] {
        &self.forms
    }

    pub fn into_forms(self) -> Vec<MultiPoly<F>> {
        self.forms
    }

    pub fn evaluate(&self, point: &[F]) -> Result<Vec<F>> {
        self.forms.iter().map(|f| f.evaluate(point)).collect()
    }

    /// `self ∘ inner`: each form of `self` with `x_i -> inner_i`.
    pub fn compose(&self, inner: &PolyMap<F>) -> Result<PolyMap<F>> {
        let forms = self
            .forms
            .iter()
            .map(|f| f.compose(&inner.forms))
            .collect::<Result<Vec<_>>>()?;
        PolyMap::new(forms)
    }

    pub fn scale(&self, c: F) -> Self {
        PolyMap {
            nvars: self.nvars,
            degree: self.degree,
            forms: self.forms.iter().map(|f| f.scale(c)).collect(),
        }
    }

    /// Canonical projective representative: the leading coefficient of the
    /// first nonzero form becomes one.
    pub fn normalized(&self) -> Self {
        let lead = self
            .forms
            .iter()
            .find_map(|f| f.leading_coefficient())
            .expect("not all forms zero");
        self.scale(lead.inv().expect("nonzero"))
    }
}

/// `F` homogeneous of degree `degree` with `∇F = g`, via `F = (1/d) Σ x_i g_i`.
///
/// Fails with the first index where `∂F/∂x_i ≠ g_i`.
pub fn euler_integrate<F: Field>(g: &PolyMap<F>, degree: u32) -> Result<MultiPoly<F>> {
    let n = g.nvars();
    if g.len() != n {
        return Err(Error::ArityMismatch {
            expected: n,
            found: g.len(),
        });
    }
    if degree == 0 || g.degree() + 1 != degree {
        return Err(Error::InvalidInput(format!(
            "gradient of degree {} cannot integrate to degree {degree}",
            g.degree()
        )));
    }
    let inv_d = F::from_i64(degree as i64)
        .inv()
        .ok_or(Error::DivisionByZero)?;
    let mut acc = MultiPoly::zero(n);
    for (i, gi) in g.forms().iter().enumerate() {
        acc = &acc + &gi.mul_term(Monomial::var(i), F::one());
    }
    let potential = acc.scale(inv_d);
    for (i, gi) in g.forms().iter().enumerate() {
        if &potential.partial_derivative(i)? != gi {
            return Err(Error::NotIntegrable { index: i });
        }
    }
    Ok(potential)
}

/// Reduced row echelon basis of the span of `polys` under descending
/// graded-lex column order: a canonical representative of the subspace.
pub fn echelon_span<F: Field>(polys: &[MultiPoly<F>]) -> Vec<MultiPoly<F>> {
    let Some(nvars) = polys.first().map(|p| p.nvars) else {
        return Vec::new();
    };
    let mut support: Vec<Monomial> = polys
        .iter()
        .flat_map(|p| p.terms.iter().map(|t| t.0))
        .collect();
    support.sort_unstable_by(|a, b| b.cmp(a));
    support.dedup();
    let vectors: Vec<Vec<F>> = polys.iter().map(|p| p.coefficients_in(&support)).collect();
    canonical_basis(&vectors, support.len())
        .into_iter()
        .map(|v| MultiPoly::from_coefficients(nvars, &support, &v))
        .collect()
}

/// `λ` with `a = λ·b`, if one exists. Both zero gives `Some(1)`.
pub fn proportionality<F: Field>(a: &MultiPoly<F>, b: &MultiPoly<F>) -> Option<F> {
    if a.terms.len() != b.terms.len() {
        return None;
    }
    let Some((_, cb)) = b.leading_term() else {
        return Some(F::one());
    };
    let lambda = a.terms[0].1 * cb.inv()?;
    a.terms
        .iter()
        .zip(&b.terms)
        .all(|(x, y)| x.0 == y.0 && x.1 == lambda * y.1)
        .then_some(lambda)
}

/// A single `λ` with `a_i = λ·b_i` for every component.
pub fn map_proportionality<F: Field>(a: &[MultiPoly<F>], b: &[MultiPoly<F>]) -> Option<F> {
    if a.len() != b.len() {
        return None;
    }
    let (k, _) = b.iter().enumerate().find(|(_, p)| !p.is_zero())?;
    let lambda = proportionality(&a[k], &b[k])?;
    a.iter()
        .zip(b)
        .all(|(x, y)| *x == y.scale(lambda))
        .then_some(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeField;
    use crate::Fp61;
    use num_traits::Zero;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type P = MultiPoly<Fp61>;

    fn x(n: usize, i: usize) -> P {
        P::var(n, i)
    }

    fn c(v: i64) -> Fp61 {
        Fp61::from_i64(v)
    }

    fn random_form(rng: &mut ChaCha8Rng, nvars: usize, degree: u32, density: usize) -> P {
        let mons = monomials(nvars, degree);
        P::from_terms(
            nvars,
            (0..density).map(|_| {
                let m = mons[rand::Rng::gen_range(rng, 0..mons.len())];
                (m, Fp61::random(rng))
            }),
        )
    }

    #[test]
    fn monomial_packing_orders_graded_lex() {
        let m = |e: &[u32]| Monomial::from_exponents(e).unwrap();
        assert!(m(&[0, 0, 2]) > m(&[1, 0, 0]));
        assert!(m(&[1, 1, 0]) > m(&[1, 0, 1]));
        assert!(m(&[2, 0, 0]) > m(&[1, 1, 0]));
        assert_eq!(m(&[1, 2]).mul_unchecked(m(&[3, 0])), m(&[4, 2]));
        assert_eq!(m(&[4, 2]).checked_div(m(&[1, 2])), Some(m(&[3, 0])));
        assert_eq!(m(&[4, 1]).checked_div(m(&[1, 2])), None);
        assert!(Monomial::from_exponents(&[200, 100]).is_err());
        assert!(Monomial::from_exponents(&[0; 16]).is_err());
    }

    #[test]
    fn monomial_enumeration() {
        let ms = monomials(3, 2);
        let exps: Vec<Vec<u32>> = ms.iter().map(|m| m.exponents(3)).collect();
        assert_eq!(
            exps,
            vec![
                vec![2, 0, 0],
                vec![1, 1, 0],
                vec![1, 0, 1],
                vec![0, 2, 0],
                vec![0, 1, 1],
                vec![0, 0, 2]
            ]
        );
        for (n, d) in [(5, 5), (7, 3), (7, 7), (6, 3)] {
            assert_eq!(monomials(n, d).len(), monomial_count(n, d));
        }
        assert_eq!(monomial_count(7, 7), 1716);
    }

    #[test]
    fn ring_examples() {
        let n = 3;
        assert_eq!(&x(n, 0) * &x(n, 1), P::monomial(n, Monomial::from_exponents(&[1, 1, 0]).unwrap(), c(1)));
        let p = &x(n, 0) + &x(n, 1);
        assert!((&p + &(-&p)).is_zero());
        let sq = &p * &p;
        let expected = P::from_exponent_terms(
            n,
            &[(vec![2, 0, 0], c(1)), (vec![1, 1, 0], c(2)), (vec![0, 2, 0], c(1))],
        )
        .unwrap();
        assert_eq!(sq, expected);
        assert!(matches!(
            P::zero(2).checked_add(&P::zero(3)),
            Err(Error::NvarsMismatch { .. })
        ));
    }

    #[test]
    fn derivative_examples() {
        let n = 2;
        let x1_cubed = x(n, 0).pow(3);
        assert_eq!(x1_cubed.partial_derivative(0).unwrap(), x(n, 0).pow(2).scale(c(3)));
        assert!(x(n, 1).partial_derivative(0).unwrap().is_zero());
        assert!(P::constant(n, c(5)).partial_derivative(1).unwrap().is_zero());
        assert!(x(n, 0).partial_derivative(2).is_err());
    }

    #[test]
    fn euler_identity_on_random_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in 1..6 {
            let f = random_form(&mut rng, 4, d, 12);
            let euler = (0..4).fold(P::zero(4), |acc, i| {
                &acc + &(&x(4, i) * &f.partial_derivative(i).unwrap())
            });
            assert_eq!(euler, f.scale(c(d as i64)));
        }
    }

    #[test]
    fn evaluate_examples() {
        let n = 3;
        let p = &x(n, 0) * &x(n, 1);
        assert_eq!(p.evaluate(&[c(2), c(3), c(9)]).unwrap(), c(6));
        assert!(p.evaluate(&[c(1)]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_form(&mut rng, n, 4, 10);
        let v: Vec<Fp61> = (0..n).map(|_| Fp61::random(&mut rng)).collect();
        let lambda = Fp61::random(&mut rng);
        let scaled: Vec<Fp61> = v.iter().map(|&t| t * lambda).collect();
        assert_eq!(f.evaluate(&scaled).unwrap(), lambda.pow(4) * f.evaluate(&v).unwrap());
        assert!(f.evaluate(&[Fp61::zero(); 3]).unwrap().is_zero());
    }

    #[test]
    fn exact_divide_examples() {
        let n = 2;
        let p = &x(n, 0).pow(2) * &x(n, 1);
        assert_eq!(p.exact_divide(&x(n, 0)).unwrap(), &x(n, 0) * &x(n, 1));
        let q = &x(n, 0) + &x(n, 1);
        assert!(matches!(q.exact_divide(&x(n, 0)), Err(Error::NotDivisible)));
        assert!(matches!(q.exact_divide(&P::zero(n)), Err(Error::DivisionByZero)));
        // general divisor
        let d = &x(n, 0) - &x(n, 1);
        let prod = &(&q * &q) * &d;
        assert_eq!(prod.exact_divide(&d).unwrap(), &q * &q);
        assert!(matches!((&prod + &P::one(n)).exact_divide(&d), Err(Error::NotDivisible)));
    }

    #[test]
    fn compose_examples() {
        let n = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let maps: Vec<P> = (0..n).map(|_| random_form(&mut rng, n, 2, 5)).collect();
        assert_eq!(x(n, 0).compose(&maps).unwrap(), maps[0]);
        let swap = vec![x(n, 1), x(n, 0), x(n, 2)];
        let s = &x(n, 0) + &x(n, 1);
        assert_eq!(s.compose(&swap).unwrap(), s);
        assert!(s.compose(&swap[..2]).is_err());
    }

    #[test]
    fn euler_integrate_examples() {
        let n = 2;
        let g = PolyMap::new(vec![x(n, 0).scale(c(2)), x(n, 1).scale(c(2))]).unwrap();
        assert_eq!(euler_integrate(&g, 2).unwrap(), &x(n, 0).pow(2) + &x(n, 1).pow(2));
        let g = PolyMap::new(vec![x(n, 1), P::zero(n)]).unwrap();
        assert!(matches!(euler_integrate(&g, 2), Err(Error::NotIntegrable { index: 0 })));
    }

    #[test]
    fn polymap_validation() {
        let n = 2;
        assert!(PolyMap::new(vec![x(n, 0), x(n, 0).pow(2)]).is_err());
        assert!(PolyMap::new(vec![P::zero(n), P::zero(n)]).is_err());
        assert!(PolyMap::new(vec![&x(n, 0) + &P::one(n)]).is_err());
        let m = PolyMap::new(vec![P::zero(n), x(n, 1).scale(c(3))]).unwrap();
        assert_eq!(m.normalized().forms()[1], x(n, 1));
    }

    #[test]
    fn span_and_proportionality() {
        let n = 2;
        let a = vec![&x(n, 0) + &x(n, 1), x(n, 1)];
        let b = vec![x(n, 0), &x(n, 0) - &x(n, 1).scale(c(5))];
        assert_eq!(echelon_span(&a), echelon_span(&b));
        assert_eq!(proportionality(&a[0].scale(c(7)), &a[0]), Some(c(7)));
        assert_eq!(proportionality(&a[0], &a[1]), None);
        assert_eq!(map_proportionality(&[a[0].scale(c(3)), a[1].scale(c(3))], &a), Some(c(3)));
    }

    fn arb_poly(nvars: usize) -> impl Strategy<Value = P> {
        proptest::collection::vec((proptest::collection::vec(0u32..3, nvars), 0u64..1000), 0..6)
            .prop_map(move |ts| {
                P::from_terms(
                    nvars,
                    ts.into_iter()
                        .map(|(e, v)| (Monomial::from_exponents(&e).unwrap(), Fp61::from_u64(v))),
                )
            })
    }

    proptest! {
        #[test]
        fn ring_axioms(a in arb_poly(3), b in arb_poly(3), cc in arb_poly(3)) {
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a * &b) * &cc, &a * &(&b * &cc));
            prop_assert_eq!(&a * &(&b + &cc), &(&a * &b) + &(&a * &cc));
            prop_assert_eq!(&(&a - &b) + &b, a.clone());
        }

        #[test]
        fn exact_divide_inverts_multiplication(a in arb_poly(3), d in arb_poly(3)) {
            prop_assume!(!d.is_zero());
            prop_assert_eq!((&a * &d).exact_divide(&d).unwrap(), a);
        }

        #[test]
        fn compose_commutes_with_evaluation(
            a in arb_poly(3),
            m0 in arb_poly(2), m1 in arb_poly(2), m2 in arb_poly(2),
            v in proptest::collection::vec(0u64..u64::MAX, 2),
        ) {
            let maps = vec![m0, m1, m2];
            let v: Vec<Fp61> = v.into_iter().map(Fp61::from_u64).collect();
            let inner: Vec<Fp61> = maps.iter().map(|m| m.evaluate(&v).unwrap()).collect();
            prop_assert_eq!(a.compose(&maps).unwrap().evaluate(&v).unwrap(), a.evaluate(&inner).unwrap());
        }
    }
}
