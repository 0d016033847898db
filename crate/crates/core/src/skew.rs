//! Skew-symmetric matrices of forms and the linear systems `row · M = 0`.

use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::linalg::{canonical_basis, Matrix, RowEchelon};
use crate::poly::{monomials, Monomial, MultiPoly, PolyMap};

/// Skew `n × n` matrix whose entries are forms of one degree; only the
/// entries above the diagonal are stored, in lexicographic order of `(i, j)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkewPolyMatrix<F> {
    n: usize,
    nvars: usize,
    degree: u32,
    upper: Vec<MultiPoly<F>>,
}

/// Position of `(i, j)`, `i < j`, in the lexicographic list of pairs.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// All pairs `(i, j)` with `i < j < n`, lexicographically.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

impl<F: Field> SkewPolyMatrix<F> {
    pub fn zero(n: usize, nvars: usize, degree: u32) -> Self {
        SkewPolyMatrix {
            n,
            nvars,
            degree,
            upper: vec![MultiPoly::zero(nvars); n * (n - 1) / 2],
        }
    }

    /// Validates that every entry is zero or homogeneous of degree `degree`.
    pub fn from_upper(n: usize, nvars: usize, degree: u32, upper: Vec<MultiPoly<F>>) -> Result<Self> {
        if upper.len() != n * (n - 1) / 2 {
            return Err(Error::ArityMismatch {
                expected: n * (n - 1) / 2,
                found: upper.len(),
            });
        }
        for e in &upper {
            if e.nvars() != nvars {
                return Err(Error::NvarsMismatch {
                    left: nvars,
                    right: e.nvars(),
                });
            }
            if !e.is_zero() && e.homogeneous_degree() != Some(degree) {
                return Err(Error::NotHomogeneous);
            }
        }
        Ok(SkewPolyMatrix { n, nvars, degree, upper })
    }

    /// Constant matrix read off the upper triangle of `m`.
    pub fn from_numeric(m: &Matrix<F>, nvars: usize) -> Self {
        let n = m.nrows();
        let upper = pairs(n).map(|(i, j)| MultiPoly::constant(nvars, m[(i, j)])).collect();
        SkewPolyMatrix {
            n,
            nvars,
            degree: 0,
            upper,
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn upper(&self) -> &[MultiPoly<F>] {
        &self.upper
    }

    pub fn is_zero(&self) -> bool {
        self.upper.iter().all(|e| e.is_zero())
    }

    /// The `(i, j)` entry of the full matrix.
    pub fn get(&self, i: usize, j: usize) -> MultiPoly<F> {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Less => self.upper[pair_index(self.n, i, j)].clone(),
            Greater => -&self.upper[pair_index(self.n, j, i)],
            Equal => MultiPoly::zero(self.nvars),
        }
    }

    /// Entry `(i, j)` for `i < j`.
    pub fn upper_entry(&self, i: usize, j: usize) -> &MultiPoly<F> {
        &self.upper[pair_index(self.n, i, j)]
    }

    pub fn set_upper(&mut self, i: usize, j: usize, value: MultiPoly<F>) {
        let k = pair_index(self.n, i, j);
        self.upper[k] = value;
    }

    pub fn scale(&self, c: F) -> Self {
        SkewPolyMatrix {
            upper: self.upper.iter().map(|e| e.scale(c)).collect(),
            ..self.clone()
        }
    }

    pub fn evaluate(&self, point: &[F]) -> Result<Matrix<F>> {
        let mut m = Matrix::zeros(self.n, self.n);
        for (k, (i, j)) in pairs(self.n).enumerate() {
            let v = self.upper[k].evaluate(point)?;
            m[(i, j)] = v;
            m[(j, i)] = -v;
        }
        Ok(m)
    }

    /// `(Σ_i row_i M_ij)_j`.
    pub fn left_mul(&self, row: &[MultiPoly<F>]) -> Result<Vec<MultiPoly<F>>> {
        if row.len() != self.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                found: row.len(),
            });
        }
        Ok((0..self.n)
            .map(|j| {
                (0..self.n)
                    .filter(|&i| i != j)
                    .fold(MultiPoly::zero(self.nvars), |acc, i| &acc + &(&row[i] * &self.get(i, j)))
            })
            .collect())
    }

    /// `(Σ_j M_ij v_j)_i`.
    pub fn right_mul(&self, v: &[MultiPoly<F>]) -> Result<Vec<MultiPoly<F>>> {
        Ok(self.left_mul(v)?.iter().map(|p| -p).collect())
    }

    /// Coordinates on the unknowns of [`skew_syzygy`] (pairs, then monomials).
    fn to_vector(&self, mons: &[Monomial]) -> Vec<F> {
        self.upper.iter().flat_map(|e| e.coefficients_in(mons)).collect()
    }

    fn from_vector(n: usize, nvars: usize, degree: u32, mons: &[Monomial], v: &[F]) -> Self {
        let upper = v
            .chunks(mons.len())
            .map(|c| MultiPoly::from_coefficients(nvars, mons, c))
            .collect();
        SkewPolyMatrix { n, nvars, degree, upper }
    }
}

/// Row vectors of forms that must annihilate a skew matrix of `degree`-forms.
#[derive(Clone, Debug)]
pub struct SyzygyProblem<F> {
    rows: Vec<PolyMap<F>>,
    degree: u32,
}

impl<F: Field> SyzygyProblem<F> {
    pub fn new(rows: Vec<PolyMap<F>>, degree: u32) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::InvalidInput("syzygy problem without rows".into()))?;
        for r in &rows {
            if r.len() != first.len() {
                return Err(Error::ArityMismatch {
                    expected: first.len(),
                    found: r.len(),
                });
            }
            if r.nvars() != first.nvars() {
                return Err(Error::NvarsMismatch {
                    left: first.nvars(),
                    right: r.nvars(),
                });
            }
            if r.degree() != first.degree() {
                return Err(Error::UnequalDegrees);
            }
        }
        Ok(SyzygyProblem { rows, degree })
    }

    pub fn rows(&self) -> &[PolyMap<F>] {
        &self.rows
    }

    pub fn size(&self) -> usize {
        self.rows[0].len()
    }

    pub fn nvars(&self) -> usize {
        self.rows[0].nvars()
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }
}

/// `row · M` for every row; all entries vanish exactly when `M` solves the problem.
pub fn verify_complex<F: Field>(problem: &SyzygyProblem<F>, m: &SkewPolyMatrix<F>) -> Result<Vec<Vec<MultiPoly<F>>>> {
    problem.rows.iter().map(|r| m.left_mul(r.forms())).collect()
}

pub fn is_solution<F: Field>(problem: &SyzygyProblem<F>, m: &SkewPolyMatrix<F>) -> Result<bool> {
    Ok(verify_complex(problem, m)?.iter().flatten().all(|p| p.is_zero()))
}

type SparseRow<F> = Vec<(usize, F)>;

/// One equation per coefficient of each component of each identity `row · M = 0`.
fn assemble<F: Field>(problem: &SyzygyProblem<F>, mons: &[Monomial]) -> Vec<SparseRow<F>> {
    let n = problem.size();
    let width = mons.len();
    let mut eqs: FxHashMap<(usize, usize, Monomial), SparseRow<F>> = FxHashMap::default();
    for (r, row) in problem.rows.iter().enumerate() {
        for (i, g) in row.forms().iter().enumerate() {
            for &(t, c) in g.terms() {
                for j in (0..n).filter(|&j| j != i) {
                    let (pair, coeff) = if i < j {
                        (pair_index(n, i, j), c)
                    } else {
                        (pair_index(n, j, i), -c)
                    };
                    for (mi, &m) in mons.iter().enumerate() {
                        eqs.entry((r, j, t.mul_unchecked(m)))
                            .or_default()
                            .push((pair * width + mi, coeff));
                    }
                }
            }
        }
    }
    let mut keyed: Vec<_> = eqs.into_iter().collect();
    keyed.sort_unstable_by_key(|a| a.0);
    keyed.into_iter().map(|(_, row)| row).collect()
}

fn satisfies<F: Field>(eq: &SparseRow<F>, v: &[F]) -> bool {
    eq.iter().fold(F::zero(), |acc, &(k, c)| acc + c * v[k]).is_zero()
}

/// Basis of all skew matrices of `degree`-forms annihilated by every row,
/// in reduced echelon form on the unknowns (pairs `(i, j)` lexicographically,
/// then monomials in descending graded-lex order).
///
/// Equations are fed to the eliminator in seeded random batches. Once a whole
/// batch adds no rank, the kernel found so far is tested against every
/// equation; if it passes it is the exact solution space and the remaining
/// equations are never eliminated.
pub fn skew_syzygy<F: Field>(problem: &SyzygyProblem<F>) -> Result<Vec<SkewPolyMatrix<F>>> {
    let (n, nvars, d) = (problem.size(), problem.nvars(), problem.degree());
    let mons = monomials(nvars, d);
    let width = n * (n - 1) / 2 * mons.len();
    let mut eqs = assemble(problem, &mons);
    eqs.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed));
    debug!("skew syzygy: {} unknowns, {} equations", width, eqs.len());

    let mut ech = RowEchelon::new(width);
    let mut kernel = None;
    for (b, batch) in eqs.chunks(width.max(1)).enumerate() {
        let mut grew = false;
        for eq in batch {
            let mut dense = vec![F::zero(); width];
            for &(k, c) in eq {
                dense[k] = c;
            }
            grew |= ech.insert(dense);
        }
        if ech.is_full_rank() {
            kernel = Some(Vec::new());
            break;
        }
        if !grew {
            let candidate = ech.nullspace();
            if candidate.iter().all(|v| eqs.iter().all(|eq| satisfies(eq, v))) {
                debug!("skew syzygy: kernel settled after {} batches", b + 1);
                kernel = Some(candidate);
                break;
            }
        }
    }
    let kernel = kernel.unwrap_or_else(|| ech.nullspace());
    let basis: Vec<SkewPolyMatrix<F>> = canonical_basis(&kernel, width)
        .iter()
        .map(|v| SkewPolyMatrix::from_vector(n, nvars, d, &mons, v))
        .collect();
    for m in &basis {
        if !is_solution(problem, m)? {
            return Err(Error::IdentityFailure("syzygy basis element does not annihilate the rows".into()));
        }
    }
    Ok(basis)
}

/// Coordinates of `m` in the unknown ordering of [`skew_syzygy`].
pub fn syzygy_coordinates<F: Field>(m: &SkewPolyMatrix<F>) -> Vec<F> {
    m.to_vector(&monomials(m.nvars, m.degree))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeField;
    use crate::Fp61;
    use num_traits::Zero;

    type P = MultiPoly<Fp61>;

    fn x(n: usize, i: usize) -> P {
        P::var(n, i)
    }

    #[test]
    fn pair_indexing() {
        let n = 5;
        for (k, (i, j)) in pairs(n).enumerate() {
            assert_eq!(pair_index(n, i, j), k);
        }
    }

    /// Brute force: build the full dense system and take its nullspace.
    fn brute_force_dim(problem: &SyzygyProblem<Fp61>) -> usize {
        let mons = monomials(problem.nvars(), problem.degree());
        let n = problem.size();
        let width = n * (n - 1) / 2 * mons.len();
        let mut rows = Vec::new();
        for k in 0..width {
            let mut e = vec![Fp61::zero(); width];
            e[k] = Fp61::from_u64(1);
            let m = SkewPolyMatrix::from_vector(n, problem.nvars(), problem.degree(), &mons, &e);
            let res: Vec<P> = verify_complex(problem, &m).unwrap().into_iter().flatten().collect();
            rows.push(res);
        }
        // columns of the equation matrix are the images of unit vectors
        let mut support: Vec<(usize, Monomial)> = Vec::new();
        for r in &rows {
            for (c, p) in r.iter().enumerate() {
                support.extend(p.terms().iter().map(|t| (c, t.0)));
            }
        }
        support.sort();
        support.dedup();
        let m = Matrix::from_fn(support.len(), width, |e, k| rows[k][support[e].0].coefficient(support[e].1));
        m.nullspace().len()
    }

    #[test]
    fn koszul_row_in_three_variables() {
        let n = 3;
        let row = PolyMap::new((0..n).map(|i| x(n, i)).collect()).unwrap();
        let problem = SyzygyProblem::new(vec![row], 1).unwrap();
        let basis = skew_syzygy(&problem).unwrap();
        assert_eq!(basis.len(), brute_force_dim(&problem));
        // the cross-product matrix [[0, x3, -x2], [-x3, 0, x1], [x2, -x1, 0]] is a solution
        let cross = SkewPolyMatrix::from_upper(n, n, 1, vec![x(n, 2), -x(n, 1), x(n, 0)]).unwrap();
        assert!(is_solution(&problem, &cross).unwrap());
        let span: Vec<Vec<Fp61>> = basis.iter().map(syzygy_coordinates).collect();
        let mut with = span.clone();
        with.push(syzygy_coordinates(&cross));
        let w = span[0].len();
        assert_eq!(canonical_basis(&with, w), canonical_basis(&span, w));
    }

    #[test]
    fn quadratic_rows_match_brute_force() {
        let n = 4;
        let row = PolyMap::new(vec![
            &x(n, 0) * &x(n, 1),
            &x(n, 1) * &x(n, 2),
            &x(n, 2) * &x(n, 3),
            &x(n, 3) * &x(n, 0),
        ])
        .unwrap();
        let problem = SyzygyProblem::new(vec![row], 1).unwrap();
        let basis = skew_syzygy(&problem).unwrap();
        assert_eq!(basis.len(), brute_force_dim(&problem));
        for m in &basis {
            assert!(is_solution(&problem, m).unwrap());
        }
    }

    #[test]
    fn perturbation_leaves_residuals() {
        let n = 3;
        let row = PolyMap::new((0..n).map(|i| x(n, i)).collect()).unwrap();
        let problem = SyzygyProblem::new(vec![row], 1).unwrap();
        let mut m = skew_syzygy(&problem).unwrap().remove(0);
        let e = m.upper_entry(0, 1) + &x(n, 0);
        m.set_upper(0, 1, e);
        let res = verify_complex(&problem, &m).unwrap();
        assert!(res.iter().flatten().any(|p| !p.is_zero()));
    }

    #[test]
    fn shape_validation() {
        let n = 3;
        assert!(SkewPolyMatrix::from_upper(n, n, 1, vec![x(n, 0)]).is_err());
        assert!(SkewPolyMatrix::from_upper(n, n, 1, vec![x(n, 0), x(n, 1).pow(2), P::zero(n)]).is_err());
        let r1 = PolyMap::new(vec![x(n, 0), x(n, 1), x(n, 2)]).unwrap();
        let r2 = PolyMap::new(vec![x(n, 0).pow(2), x(n, 1).pow(2), x(n, 2).pow(2)]).unwrap();
        assert!(SyzygyProblem::new(vec![r1, r2], 1).is_err());
    }
}
