//! Dense exact linear algebra: row reduction, rank, nullspaces, determinants.
//!
//! Pivot choice is always "first nonzero entry", so results are bit-identical
//! between runs.

use std::ops::{Index, IndexMut};

use rayon::prelude::*;

use crate::field::Field;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Field> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = F::one();
        }
        m
    }

    /// Builds a matrix from equal-length rows; `cols` is used when `rows` is empty.
    pub fn from_rows(rows: Vec<Vec<F>>, cols: usize) -> Self {
        let nrows = rows.len();
        let mut data = Vec::with_capacity(nrows * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend(r);
        }
        Matrix {
            rows: nrows,
            cols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).fold(F::zero(), |acc, k| acc + self[(i, k)] * other[(k, j)])
        })
    }

    pub fn mul_vec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| dot(self.row(i), v))
            .collect()
    }

    pub fn is_skew(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                self[(i, i)].is_zero() && (0..i).all(|j| self[(i, j)] == -self[(j, i)])
            })
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self[(i, c)].is_zero()) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = self[(r, c)].inv().expect("nonzero pivot");
            for x in &mut self.data[r * self.cols + c..(r + 1) * self.cols] {
                *x *= inv;
            }
            let pivot_row: Vec<F> = self.row(r).to_vec();
            let cols = self.cols;
            self.data
                .chunks_mut(cols)
                .enumerate()
                .filter(|(i, _)| *i != r)
                .for_each(|(_, row)| {
                    let f = row[c];
                    if !f.is_zero() {
                        axpy(row, -f, &pivot_row);
                    }
                });
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Basis of `{v : M v = 0}`, one vector per free column.
    pub fn nullspace(&self) -> Vec<Vec<F>> {
        let mut m = self.clone();
        let pivots = m.rref();
        kernel_from_reduced(self.cols, &pivots, |r| m.row(r))
    }

    pub fn determinant(&self) -> F {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let mut m = self.clone();
        let n = self.rows;
        let mut det = F::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m[(i, c)].is_zero()) else {
                return F::zero();
            };
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            let pivot = m[(c, c)];
            det *= pivot;
            let inv = pivot.inv().expect("nonzero pivot");
            for i in c + 1..n {
                let f = m[(i, c)] * inv;
                if !f.is_zero() {
                    for j in c..n {
                        let v = m[(c, j)];
                        m[(i, j)] -= f * v;
                    }
                }
            }
        }
        det
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl<F> Index<(usize, usize)> for Matrix<F> {
    type Output = F;
    fn index(&self, (i, j): (usize, usize)) -> &F {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<F> IndexMut<(usize, usize)> for Matrix<F> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut F {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<F: Field>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `dst += a * src`
#[inline]
pub fn axpy<F: Field>(dst: &mut [F], a: F, src: &[F]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += a * s;
    }
}

fn kernel_from_reduced<'a, F: Field + 'a>(
    width: usize,
    pivots: &[usize],
    row: impl Fn(usize) -> &'a [F],
) -> Vec<Vec<F>> {
    let mut is_pivot = vec![false; width];
    for &p in pivots {
        is_pivot[p] = true;
    }
    (0..width)
        .filter(|&c| !is_pivot[c])
        .map(|free| {
            let mut v = vec![F::zero(); width];
            v[free] = F::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -row(r)[free];
            }
            v
        })
        .collect()
}

/// Incrementally built row space kept in fully reduced form: every pivot
/// column is zero in all rows except its own.
///
/// Rows can be streamed in one at a time, so very tall systems never need to
/// be materialized.
#[derive(Clone, Debug)]
pub struct Echelon<F> {
    width: usize,
    rows: Vec<Vec<F>>,
    pivot_cols: Vec<usize>,
}

/// Above this many entries the back-elimination step runs on the rayon pool.
const PARALLEL_THRESHOLD: usize = 1 << 16;

impl<F: Field> Echelon<F> {
    pub fn new(width: usize) -> Self {
        Echelon {
            width,
            rows: Vec::new(),
            pivot_cols: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivot_cols(&self) -> &[usize] {
        &self.pivot_cols
    }

    /// Subtracts the row space from `row`, leaving zeros in every pivot column.
    pub fn reduce(&self, row: &mut [F]) {
        debug_assert_eq!(row.len(), self.width);
        for (r, &pc) in self.rows.iter().zip(&self.pivot_cols) {
            let f = row[pc];
            if !f.is_zero() {
                axpy(row, -f, r);
            }
        }
    }

    /// Adds a row; returns whether the rank grew.
    pub fn insert(&mut self, mut row: Vec<F>) -> bool {
        assert_eq!(row.len(), self.width, "row width mismatch");
        self.reduce(&mut row);
        let Some(pc) = row.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = row[pc].inv().expect("nonzero pivot");
        for x in &mut row[pc..] {
            *x *= inv;
        }
        let eliminate = |r: &mut Vec<F>| {
            let f = r[pc];
            if !f.is_zero() {
                axpy(r, -f, &row);
            }
        };
        if self.rows.len() * self.width >= PARALLEL_THRESHOLD {
            self.rows.par_iter_mut().for_each(eliminate);
        } else {
            self.rows.iter_mut().for_each(eliminate);
        }
        self.rows.push(row);
        self.pivot_cols.push(pc);
        true
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.width
    }

    pub fn contains(&self, v: &[F]) -> bool {
        let mut w = v.to_vec();
        self.reduce(&mut w);
        w.iter().all(|x| x.is_zero())
    }

    /// Basis of the solution space of the homogeneous system whose equations are the rows.
    pub fn nullspace(&self) -> Vec<Vec<F>> {
        kernel_from_reduced(self.width, &self.pivot_cols, |r| &self.rows[r])
    }
}

/// Row echelon form built by forward elimination only.
///
/// Cheaper than [`Echelon`] when only the rank and a kernel basis are needed:
/// each new row is reduced against the pivots to its right, never the other
/// way round.
#[derive(Clone, Debug)]
pub struct RowEchelon<F> {
    width: usize,
    /// Row with its (unit) pivot at column `c`, if any.
    pivots: Vec<Option<Vec<F>>>,
    rank: usize,
}

impl<F: Field> RowEchelon<F> {
    pub fn new(width: usize) -> Self {
        RowEchelon {
            width,
            pivots: vec![None; width],
            rank: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.width
    }

    /// Adds a row; returns whether the rank grew.
    pub fn insert(&mut self, mut row: Vec<F>) -> bool {
        assert_eq!(row.len(), self.width, "row width mismatch");
        for c in 0..self.width {
            let f = row[c];
            if f.is_zero() {
                continue;
            }
            match &self.pivots[c] {
                Some(p) => axpy(&mut row[c..], -f, &p[c..]),
                None => {
                    let inv = f.inv().expect("nonzero pivot");
                    for x in &mut row[c..] {
                        *x *= inv;
                    }
                    self.pivots[c] = Some(row);
                    self.rank += 1;
                    return true;
                }
            }
        }
        false
    }

    /// Kernel basis by back substitution, one vector per free column.
    pub fn nullspace(&self) -> Vec<Vec<F>> {
        (0..self.width)
            .filter(|&c| self.pivots[c].is_none())
            .map(|free| {
                let mut v = vec![F::zero(); self.width];
                v[free] = F::one();
                for c in (0..free).rev() {
                    if let Some(p) = &self.pivots[c] {
                        v[c] = -dot(&p[c + 1..=free], &v[c + 1..=free]);
                    }
                }
                v
            })
            .collect()
    }
}

/// Canonical basis of the span of `vectors`: the nonzero rows of the reduced row echelon form.
pub fn canonical_basis<F: Field>(vectors: &[Vec<F>], width: usize) -> Vec<Vec<F>> {
    let mut m = Matrix::from_rows(vectors.to_vec(), width);
    let rank = m.rref().len();
    (0..rank).map(|r| m.row(r).to_vec()).collect()
}

/// Solves `M x = b` when the solution is unique; `None` if inconsistent or underdetermined.
pub fn solve_unique<F: Field>(m: &Matrix<F>, b: &[F]) -> Option<Vec<F>> {
    assert_eq!(m.nrows(), b.len());
    let cols = m.ncols();
    let mut aug = Matrix::from_fn(m.nrows(), cols + 1, |i, j| if j < cols { m[(i, j)] } else { b[i] });
    let pivots = aug.rref();
    if pivots.last() == Some(&cols) || pivots.len() != cols {
        return None;
    }
    Some((0..cols).map(|r| aug[(r, cols)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Fp61;
    use num_rational::Ratio;
    use num_traits::{One, Zero};
    use proptest::prelude::*;

    type Q = Ratio<i128>;

    fn f(v: i64) -> Fp61 {
        Fp61::from_i64(v)
    }

    #[test]
    fn rref_and_nullspace_small() {
        let m = Matrix::from_rows(
            vec![vec![f(1), f(2), f(3)], vec![f(2), f(4), f(6)], vec![f(1), f(0), f(1)]],
            3,
        );
        assert_eq!(m.rank(), 2);
        let ns = m.nullspace();
        assert_eq!(ns.len(), 1);
        assert!(m.mul_vec(&ns[0]).iter().all(|x| x.is_zero()));
    }

    #[test]
    fn determinant_over_rationals() {
        let q = |n: i128| Q::from_integer(n);
        let m = Matrix::from_rows(
            vec![vec![q(2), q(0), q(1)], vec![q(1), q(3), q(2)], vec![q(1), q(1), q(1)]],
            3,
        );
        // 2(3-2) - 0 + 1(1-3) = 0
        assert_eq!(m.determinant(), Q::zero());
        let m = Matrix::from_rows(vec![vec![q(0), q(1)], vec![q(1), q(0)]], 2);
        assert_eq!(m.determinant(), -Q::one());
    }

    #[test]
    fn solve_unique_detects_inconsistency() {
        let m = Matrix::from_rows(vec![vec![f(1), f(1)], vec![f(1), f(1)]], 2);
        assert!(solve_unique(&m, &[f(1), f(2)]).is_none());
        let m = Matrix::from_rows(vec![vec![f(1), f(1)], vec![f(1), f(-1)], vec![f(2), f(0)]], 2);
        assert_eq!(solve_unique(&m, &[f(3), f(1), f(4)]).unwrap(), vec![f(2), f(1)]);
    }

    proptest! {
        #[test]
        fn echelon_agrees_with_batch_rref(entries in proptest::collection::vec(-3i64..4, 6 * 5)) {
            let rows: Vec<Vec<Fp61>> = entries.chunks(5).map(|c| c.iter().map(|&v| f(v)).collect()).collect();
            let m = Matrix::from_rows(rows.clone(), 5);
            let mut e = Echelon::new(5);
            for r in rows.iter().cloned() {
                e.insert(r);
            }
            prop_assert_eq!(e.rank(), m.rank());
            let ns = e.nullspace();
            prop_assert_eq!(ns.len(), 5 - m.rank());
            for v in &ns {
                prop_assert!(m.mul_vec(v).iter().all(|x| x.is_zero()));
            }
            // canonical bases of the same kernel coincide
            prop_assert_eq!(canonical_basis(&ns, 5), canonical_basis(&m.nullspace(), 5));
        }
    }

    #[test]
    fn row_echelon_kernel_matches_rref() {
        use crate::field::PrimeField;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for (rows, cols, rank) in [(6, 9, 4), (12, 10, 7), (5, 5, 5)] {
            let a = Matrix::from_fn(rows, rank, |_, _| Fp61::random(&mut rng));
            let b = Matrix::from_fn(rank, cols, |_, _| Fp61::random(&mut rng));
            let m = a.mul(&b);
            let mut e = RowEchelon::new(cols);
            for r in 0..rows {
                e.insert(m.row(r).to_vec());
            }
            assert_eq!(e.rank(), rank);
            let ns = e.nullspace();
            assert_eq!(ns.len(), cols - rank);
            for v in &ns {
                assert!(m.mul_vec(v).iter().all(|x| x.is_zero()));
            }
            assert_eq!(canonical_basis(&ns, cols), canonical_basis(&m.nullspace(), cols));
        }
    }
}
