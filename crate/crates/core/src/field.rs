//! Prime fields and the scalar traits the rest of the crate is generic over.
//!
//! Elements of `F_p` are kept in Montgomery form internally; the residue is
//! always reduced into `[0, p)`. Moduli are type-level markers implementing
//! [`Modulus`], either fixed at compile time (see [`prime_modulus!`]) or
//! installed once per process through [`DynPrime`].

use std::fmt;
use std::hash::Hash;
use std::marker::PhantomData;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use num_rational::Ratio;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// Exact field arithmetic.
pub trait Field:
    Copy
    + fmt::Debug
    + PartialEq
    + Eq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    /// Multiplicative inverse, `None` for zero.
    fn inv(self) -> Option<Self>;

    /// Image of an integer under the canonical ring map.
    fn from_i64(v: i64) -> Self;

    fn checked_div(self, rhs: Self) -> Result<Self> {
        rhs.inv().map(|r| self * r).ok_or(Error::DivisionByZero)
    }

    fn pow(self, mut e: u64) -> Self {
        let mut base = self;
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        acc
    }
}

/// A prime field `F_p` with `p < 2^63`.
pub trait PrimeField: Field + Hash + Ord + fmt::Display {
    fn modulus() -> u64;

    /// Reduces `v` modulo `p`.
    fn from_u64(v: u64) -> Self;

    /// Canonical residue in `[0, p)`.
    fn value(self) -> u64;

    /// Uniform element; the stream is reproducible from the rng seed.
    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::from_u64(rng.gen_range(0..Self::modulus()))
    }

    /// Uniform nonzero element.
    fn random_nonzero<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::from_u64(rng.gen_range(1..Self::modulus()))
    }

    fn from_i128(v: i128) -> Self {
        let p = Self::modulus() as i128;
        Self::from_u64(v.rem_euclid(p) as u64)
    }

    /// Parses a decimal residue; values must already lie in `[0, p)`.
    fn parse_decimal(s: &str) -> Result<Self> {
        let v: u64 = s
            .trim()
            .parse()
            .map_err(|_| Error::ParseElement(s.to_string()))?;
        if v >= Self::modulus() {
            return Err(Error::ParseElement(s.to_string()));
        }
        Ok(Self::from_u64(v))
    }

    fn is_square(self) -> bool {
        self.is_zero() || self.pow((Self::modulus() - 1) / 2) == Self::one()
    }

    /// Square root with the smaller canonical residue, if one exists.
    fn sqrt(self) -> Option<Self> {
        if self.is_zero() {
            return Some(self);
        }
        if !self.is_square() {
            return None;
        }
        let p = Self::modulus();
        let root = if p % 4 == 3 {
            self.pow((p + 1) / 4)
        } else {
            tonelli_shanks(self)
        };
        debug_assert!(root * root == self);
        let other = -root;
        Some(if other.value() < root.value() { other } else { root })
    }
}

fn tonelli_shanks<F: PrimeField>(a: F) -> F {
    let p = F::modulus();
    let mut q = p - 1;
    let mut s = 0u32;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let mut z = F::from_u64(2);
    while z.is_square() {
        z += F::one();
    }
    let mut m = s;
    let mut c = z.pow(q);
    let mut t = a.pow(q);
    let mut r = a.pow(q.div_ceil(2));
    while t != F::one() {
        let mut i = 0;
        let mut t2 = t;
        while t2 != F::one() {
            t2 *= t2;
            i += 1;
        }
        let b = c.pow(1u64 << (m - i - 1));
        m = i;
        c = b * b;
        t *= c;
        r *= b;
    }
    r
}

/// Precomputed Montgomery constants for an odd modulus below `2^63`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MontParams {
    p: u64,
    /// `-p^{-1} mod 2^64`
    p_neg_inv: u64,
    /// `2^128 mod p`
    r2: u64,
    /// `2^64 mod p`, the Montgomery image of one
    one: u64,
}

impl MontParams {
    pub const fn new(p: u64) -> Self {
        assert!(p % 2 == 1 && p > 2 && p < (1u64 << 63));
        let mut inv = p;
        let mut i = 0;
        while i < 6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(inv)));
            i += 1;
        }
        let one = ((1u128 << 64) % p as u128) as u64;
        let r2 = ((one as u128 * one as u128) % p as u128) as u64;
        MontParams {
            p,
            p_neg_inv: inv.wrapping_neg(),
            r2,
            one,
        }
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    #[inline(always)]
    fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.p_neg_inv);
        let u = ((t + m as u128 * self.p as u128) >> 64) as u64;
        if u >= self.p {
            u - self.p
        } else {
            u
        }
    }
}

/// Type-level prime modulus.
pub trait Modulus:
    'static + Copy + fmt::Debug + Default + PartialEq + Eq + Hash + PartialOrd + Ord + Send + Sync
{
    fn params() -> &'static MontParams;
}

/// Declares a unit struct implementing [`Modulus`] for a compile-time prime.
#[macro_export]
macro_rules! prime_modulus {
    ($(#[$meta:meta])* $vis:vis $name:ident = $p:expr) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
        $vis struct $name;

        impl $crate::field::Modulus for $name {
            #[inline(always)]
            fn params() -> &'static $crate::field::MontParams {
                static PARAMS: $crate::field::MontParams = $crate::field::MontParams::new($p);
                &PARAMS
            }
        }
    };
}

/// The Mersenne prime `2^61 - 1`, the default modulus.
pub const MERSENNE_61: u64 = (1u64 << 61) - 1;
/// `2^62 - 57`, the largest prime below `2^62` that is `3 mod 4`.
pub const PRIME_62: u64 = (1u64 << 62) - 57;

prime_modulus!(
    /// `p = 2^61 - 1`.
    pub Mersenne61 = MERSENNE_61
);
prime_modulus!(
    /// `p = 2^62 - 57`.
    pub Prime62 = PRIME_62
);

static DYN_PARAMS: OnceLock<MontParams> = OnceLock::new();

/// A modulus chosen at run time. It can be installed once per process.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DynPrime;

impl DynPrime {
    /// Installs `p` after checking primality. Installing the same prime twice is a no-op.
    pub fn install(p: u64) -> Result<()> {
        validate_prime(p)?;
        let params = DYN_PARAMS.get_or_init(|| MontParams::new(p));
        if params.p != p {
            return Err(Error::ModulusMismatch {
                installed: params.p,
                requested: p,
            });
        }
        Ok(())
    }

    pub fn installed() -> Option<u64> {
        DYN_PARAMS.get().map(|p| p.p)
    }
}

impl Modulus for DynPrime {
    #[inline(always)]
    fn params() -> &'static MontParams {
        DYN_PARAMS
            .get()
            .expect("DynPrime used before DynPrime::install")
    }
}

/// Rejects composites, even numbers and anything at or above `2^63`.
pub fn validate_prime(p: u64) -> Result<()> {
    if !(3..(1u64 << 63)).contains(&p) || !is_prime_u64(p) {
        return Err(Error::InvalidPrime(p));
    }
    Ok(())
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &BASES {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Element of `F_p` for the modulus `M`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp<M: Modulus> {
    mont: u64,
    _modulus: PhantomData<M>,
}

impl<M: Modulus> Fp<M> {
    #[inline(always)]
    fn from_mont(mont: u64) -> Self {
        Fp {
            mont,
            _modulus: PhantomData,
        }
    }

    pub fn new(v: u64) -> Self {
        <Self as PrimeField>::from_u64(v)
    }
}

impl<M: Modulus> Zero for Fp<M> {
    #[inline(always)]
    fn zero() -> Self {
        Self::from_mont(0)
    }
    #[inline(always)]
    fn is_zero(&self) -> bool {
        self.mont == 0
    }
}

impl<M: Modulus> One for Fp<M> {
    #[inline(always)]
    fn one() -> Self {
        Self::from_mont(M::params().one)
    }
}

impl<M: Modulus> Add for Fp<M> {
    type Output = Self;
    #[inline(always)]
    fn add(self, rhs: Self) -> Self {
        let p = M::params().p;
        let s = self.mont + rhs.mont;
        Self::from_mont(if s >= p { s - p } else { s })
    }
}

impl<M: Modulus> Sub for Fp<M> {
    type Output = Self;
    #[inline(always)]
    fn sub(self, rhs: Self) -> Self {
        let p = M::params().p;
        Self::from_mont(if self.mont >= rhs.mont {
            self.mont - rhs.mont
        } else {
            self.mont + p - rhs.mont
        })
    }
}

impl<M: Modulus> Mul for Fp<M> {
    type Output = Self;
    #[inline(always)]
    fn mul(self, rhs: Self) -> Self {
        Self::from_mont(M::params().redc(self.mont as u128 * rhs.mont as u128))
    }
}

impl<M: Modulus> Neg for Fp<M> {
    type Output = Self;
    #[inline(always)]
    fn neg(self) -> Self {
        if self.mont == 0 {
            self
        } else {
            Self::from_mont(M::params().p - self.mont)
        }
    }
}

/// Panics on a zero divisor; use [`Field::checked_div`] for a fallible version.
impl<M: Modulus> Div for Fp<M> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self.checked_div(rhs).expect("division by zero in F_p")
    }
}

impl<M: Modulus> AddAssign for Fp<M> {
    #[inline(always)]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<M: Modulus> SubAssign for Fp<M> {
    #[inline(always)]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<M: Modulus> MulAssign for Fp<M> {
    #[inline(always)]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl<M: Modulus> Field for Fp<M> {
    fn inv(self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.pow(M::params().p - 2))
        }
    }

    fn from_i64(v: i64) -> Self {
        <Self as PrimeField>::from_i128(v as i128)
    }
}

impl<M: Modulus> PrimeField for Fp<M> {
    fn modulus() -> u64 {
        M::params().p
    }

    fn from_u64(v: u64) -> Self {
        let params = M::params();
        Self::from_mont(params.redc((v % params.p) as u128 * params.r2 as u128))
    }

    fn value(self) -> u64 {
        M::params().redc(self.mont as u128)
    }
}

impl<M: Modulus> PartialOrd for Fp<M> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<M: Modulus> Ord for Fp<M> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.value().cmp(&other.value())
    }
}

impl<M: Modulus> fmt::Display for Fp<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl<M: Modulus> fmt::Debug for Fp<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Exact rationals with machine-word numerator and denominator, for small oracles.
impl Field for Ratio<i128> {
    fn inv(self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.recip())
        }
    }

    fn from_i64(v: i64) -> Self {
        Ratio::from_integer(v as i128)
    }
}

/// Recovers `u/v` with `|u|, |v| <= sqrt(p/2)` from its image in `F_p`.
///
/// Returns `None` when no such fraction exists, which is the expected outcome
/// for a random residue.
pub fn rational_reconstruct<F: PrimeField>(a: F) -> Option<Ratio<i64>> {
    let p = F::modulus() as i128;
    let bound = ((p / 2) as f64).sqrt() as i128;
    // correct any floating point slop in the bound
    let bound = {
        let mut b = bound;
        while b * b > p / 2 {
            b -= 1;
        }
        while (b + 1) * (b + 1) <= p / 2 {
            b += 1;
        }
        b
    };
    let (mut r0, mut r1) = (p, a.value() as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 > bound {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if t1 == 0 || t1.abs() > bound || num_integer::gcd(r1, t1) != 1 {
        return None;
    }
    let (num, den) = if t1 < 0 { (-r1, -t1) } else { (r1, t1) };
    Some(Ratio::new(num as i64, den as i64))
}

/// Image of a fraction in `F_p`.
pub fn embed_rational<F: PrimeField>(q: Ratio<i64>) -> Result<F> {
    let num = F::from_i128(*q.numer() as i128);
    let den = F::from_i128(*q.denom() as i128);
    num.checked_div(den)
}
