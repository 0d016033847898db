//! Quadratic brackets `{x_i, x_j} = Ω_ij` extended as biderivations.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::poly::MultiPoly;
use crate::skew::{pairs, SkewPolyMatrix};

pub type JacobiFailure<F> = ((usize, usize, usize), MultiPoly<F>);

/// Biderivation `{g, h} = Σ_ij ∂_i g · Ω_ij · ∂_j h` for a skew matrix of quadrics.
///
/// Jacobi is not assumed, so non-Poisson matrices can be probed as well.
#[derive(Clone, Debug)]
pub struct QuadraticBracket<F> {
    omega: SkewPolyMatrix<F>,
}

/// Outcome of the Jacobi and Casimir checks.
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PoissonReport {
    pub jacobi_zero: bool,
    pub casimirs_zero: bool,
    pub failures: Vec<String>,
}

impl<F: Field> QuadraticBracket<F> {
    pub fn new(omega: SkewPolyMatrix<F>) -> Result<Self> {
        if omega.nvars() != omega.size() {
            return Err(Error::NvarsMismatch {
                left: omega.size(),
                right: omega.nvars(),
            });
        }
        if !omega.is_zero() && omega.degree() != 2 {
            return Err(Error::InvalidInput(format!(
                "bracket matrix must have quadratic entries, got degree {}",
                omega.degree()
            )));
        }
        Ok(QuadraticBracket { omega })
    }

    pub fn omega(&self) -> &SkewPolyMatrix<F> {
        &self.omega
    }

    pub fn size(&self) -> usize {
        self.omega.size()
    }

    fn check_ring(&self, p: &MultiPoly<F>) -> Result<()> {
        if p.nvars() != self.size() {
            return Err(Error::NvarsMismatch {
                left: self.size(),
                right: p.nvars(),
            });
        }
        Ok(())
    }

    pub fn bracket(&self, g: &MultiPoly<F>, h: &MultiPoly<F>) -> Result<MultiPoly<F>> {
        self.check_ring(g)?;
        self.check_ring(h)?;
        let (dg, dh) = (g.gradient(), h.gradient());
        let mut acc = MultiPoly::zero(self.size());
        for (i, j) in pairs(self.size()) {
            let w = self.omega.upper_entry(i, j);
            if w.is_zero() {
                continue;
            }
            let cross = &(&dg[i] * &dh[j]) - &(&dg[j] * &dh[i]);
            if !cross.is_zero() {
                acc = &acc + &(w * &cross);
            }
        }
        Ok(acc)
    }

    /// `{{a, b}, c} + {{b, c}, a} + {{c, a}, b}`.
    pub fn jacobiator(&self, a: &MultiPoly<F>, b: &MultiPoly<F>, c: &MultiPoly<F>) -> Result<MultiPoly<F>> {
        let t1 = self.bracket(&self.bracket(a, b)?, c)?;
        let t2 = self.bracket(&self.bracket(b, c)?, a)?;
        let t3 = self.bracket(&self.bracket(c, a)?, b)?;
        Ok(&(&t1 + &t2) + &t3)
    }

    /// `J(x_i, x_j, x_k)`.
    pub fn coordinate_jacobiator(&self, i: usize, j: usize, k: usize) -> Result<MultiPoly<F>> {
        let n = self.size();
        if i.max(j).max(k) >= n {
            return Err(Error::VariableIndex {
                index: i.max(j).max(k),
                nvars: n,
            });
        }
        let x = |t| MultiPoly::var(n, t);
        self.jacobiator(&x(i), &x(j), &x(k))
    }

    /// Nonzero coordinate jacobiators, keyed by 0-based index triple.
    pub fn jacobi_failures(&self) -> Result<Vec<JacobiFailure<F>>> {
        let n = self.size();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let jac = self.coordinate_jacobiator(i, j, k)?;
                    if !jac.is_zero() {
                        out.push(((i, j, k), jac));
                    }
                }
            }
        }
        Ok(out)
    }

    /// `{x_i, C}` for every coordinate and candidate Casimir.
    pub fn casimir_residuals(&self, casimirs: &[MultiPoly<F>]) -> Result<Vec<Vec<MultiPoly<F>>>> {
        let n = self.size();
        casimirs
            .iter()
            .map(|c| (0..n).map(|i| self.bracket(&MultiPoly::var(n, i), c)).collect())
            .collect()
    }

    pub fn check(&self, casimirs: &[MultiPoly<F>]) -> Result<PoissonReport> {
        let mut failures: Vec<String> = self
            .jacobi_failures()?
            .iter()
            .map(|((i, j, k), _)| format!("J(x{}, x{}, x{}) != 0", i + 1, j + 1, k + 1))
            .collect();
        let jacobi_zero = failures.is_empty();
        let mut casimirs_zero = true;
        for (a, res) in self.casimir_residuals(casimirs)?.iter().enumerate() {
            for (i, r) in res.iter().enumerate() {
                if !r.is_zero() {
                    casimirs_zero = false;
                    failures.push(format!("{{x{}, C{}}} != 0", i + 1, a + 1));
                }
            }
        }
        Ok(PoissonReport {
            jacobi_zero,
            casimirs_zero,
            failures,
        })
    }

    /// Checks `J(x^d, x^{d-1}y, x^{d-1}z) = d·x^{3d-3}·J(x, y, z)` for linear
    /// forms `x, y, z`, which holds for every skew biderivation.
    pub fn caslem_identity(&self, x: &MultiPoly<F>, y: &MultiPoly<F>, z: &MultiPoly<F>, d: u32) -> Result<bool> {
        if d == 0 {
            return Err(Error::InvalidInput("degree must be positive".into()));
        }
        let xd1 = x.pow(d - 1);
        let lhs = self.jacobiator(&x.pow(d), &(&xd1 * y), &(&xd1 * z))?;
        let rhs = &x.pow(3 * d - 3) * &self.jacobiator(x, y, z)?;
        Ok(lhs == rhs.scale(F::from_i64(d as i64)))
    }
}
