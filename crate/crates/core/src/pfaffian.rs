//! Pfaffians and signed submaximal pfaffians of skew matrices of forms.

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::poly::MultiPoly;
use crate::skew::SkewPolyMatrix;

/// Pfaffians of principal submatrices, keyed by the bitmask of kept indices.
struct Memo<'a, F> {
    m: &'a SkewPolyMatrix<F>,
    table: FxHashMap<u32, MultiPoly<F>>,
}

impl<'a, F: Field> Memo<'a, F> {
    fn new(m: &'a SkewPolyMatrix<F>) -> Self {
        Memo {
            m,
            table: FxHashMap::default(),
        }
    }

    /// Expansion along the lowest kept index `i`: the partner `j` in position
    /// `t` (1-based among the kept indices) contributes `(-1)^t m_ij Pf(rest)`.
    fn pf(&mut self, mask: u32) -> MultiPoly<F> {
        if mask == 0 {
            return MultiPoly::one(self.m.nvars());
        }
        if let Some(p) = self.table.get(&mask) {
            return p.clone();
        }
        let i = mask.trailing_zeros() as usize;
        let mut acc = MultiPoly::zero(self.m.nvars());
        let mut position = 1;
        let mut rest = mask & !(1 << i);
        while rest != 0 {
            let j = rest.trailing_zeros() as usize;
            rest &= !(1 << j);
            position += 1;
            let entry = self.m.upper_entry(i, j);
            if !entry.is_zero() {
                let sub = self.pf(mask & !(1 << i) & !(1 << j));
                let term = entry * &sub;
                acc = if position % 2 == 0 { &acc + &term } else { &acc - &term };
            }
        }
        self.table.insert(mask, acc.clone());
        acc
    }
}

fn full_mask(n: usize) -> u32 {
    assert!(n < 32, "matrix too large for subset memoization");
    (1u32 << n) - 1
}

/// `Pf(M)` for even size.
pub fn pfaffian<F: Field>(m: &SkewPolyMatrix<F>) -> Result<MultiPoly<F>> {
    let n = m.size();
    if n % 2 == 1 {
        return Err(Error::InvalidInput(format!("pfaffian of odd size {n}")));
    }
    Ok(Memo::new(m).pf(full_mask(n)))
}

/// Component `i` (0-based) is `(-1)^i Pf(M with row and column i removed)`,
/// so that `M · v = 0`; this is checked before returning.
pub fn sub_pfaffians<F: Field>(m: &SkewPolyMatrix<F>) -> Result<Vec<MultiPoly<F>>> {
    let n = m.size();
    if n.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("submaximal pfaffians of even size {n}")));
    }
    let mut memo = Memo::new(m);
    let full = full_mask(n);
    let v: Vec<MultiPoly<F>> = (0..n)
        .map(|i| {
            let p = memo.pf(full & !(1 << i));
            if i % 2 == 0 {
                p
            } else {
                -p
            }
        })
        .collect();
    if m.right_mul(&v)?.iter().any(|p| !p.is_zero()) {
        return Err(Error::IdentityFailure("matrix does not annihilate its pfaffian vector".into()));
    }
    Ok(v)
}
