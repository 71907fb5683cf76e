use serde::{Deserialize, Serialize};

use super::matrix::{kron, ComplexMatrix};
use crate::{Error, Result};

/// One labelled tensor factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub label: String,
    pub dim: usize,
}

impl Slot {
    pub fn new(label: impl Into<String>, dim: usize) -> Self {
        Slot { label: label.into(), dim }
    }
}

/// Ordered list of tensor slots; slot 0 is the most significant index in the
/// row-major flattening.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpace {
    slots: Vec<Slot>,
}

impl TensorSpace {
    pub fn new(slots: Vec<Slot>) -> Result<Self> {
        if slots.iter().any(|s| s.dim == 0) {
            return Err(Error::InvalidInput("slot dimension must be positive".into()));
        }
        Ok(TensorSpace { slots })
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn n_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn slot_dim(&self, i: usize) -> usize {
        self.slots[i].dim
    }

    pub fn dims(&self) -> Vec<usize> {
        self.slots.iter().map(|s| s.dim).collect()
    }

    /// Total dimension, the product of all slot dimensions.
    pub fn dim(&self) -> usize {
        self.slots.iter().map(|s| s.dim).product()
    }

    pub fn slot_index_by_label(&self, label: &str) -> Option<usize> {
        self.slots.iter().position(|s| s.label == label)
    }

    /// Flatten a multi-index (one digit per slot, slot 0 most significant).
    pub fn ravel(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.slots.len());
        let mut flat = 0;
        for (slot, &i) in self.slots.iter().zip(idx) {
            debug_assert!(i < slot.dim);
            flat = flat * slot.dim + i;
        }
        flat
    }

    /// Inverse of [`ravel`](Self::ravel).
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.slots.len()];
        for (pos, slot) in self.slots.iter().enumerate().rev() {
            idx[pos] = flat % slot.dim;
            flat /= slot.dim;
        }
        idx
    }

    /// Tensor product of per-slot factors; `None` stands for the identity.
    /// Each factor must be square with the slot's dimension.
    pub fn factor_op(&self, factors: &[Option<&ComplexMatrix>]) -> Result<ComplexMatrix> {
        if factors.len() != self.slots.len() {
            return Err(Error::Dimension(format!(
                "expected {} factors, got {}",
                self.slots.len(),
                factors.len()
            )));
        }
        let mut out = ComplexMatrix::identity(1);
        for (slot, f) in self.slots.iter().zip(factors) {
            let next = match f {
                Some(m) => {
                    if m.nrows() != slot.dim || m.ncols() != slot.dim {
                        return Err(Error::Dimension(format!(
                            "factor for slot {} must be {}x{}",
                            slot.label, slot.dim, slot.dim
                        )));
                    }
                    kron(&out, m)
                }
                None => kron(&out, &ComplexMatrix::identity(slot.dim)),
            };
            out = next;
        }
        Ok(out)
    }

    /// Reorder slots; `perm[new_pos] = old_pos`. Returns the permuted matrix
    /// and the permuted space.
    pub fn permute(&self, m: &ComplexMatrix, perm: &[usize]) -> Result<(ComplexMatrix, TensorSpace)> {
        let n = self.slots.len();
        if perm.len() != n || {
            let mut seen = vec![false; n];
            perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        } {
            return Err(Error::InvalidInput(format!("invalid slot permutation {perm:?}")));
        }
        let d = self.dim();
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::Dimension(format!("matrix must be {d}x{d} for this space")));
        }
        let new_slots: Vec<Slot> = perm.iter().map(|&p| self.slots[p].clone()).collect();
        let new_space = TensorSpace::new(new_slots)?;
        // map each new flat index to the old flat index
        let mut index_map = vec![0usize; d];
        for (new_flat, slot_map) in index_map.iter_mut().enumerate() {
            let new_idx = new_space.unravel(new_flat);
            let mut old_idx = vec![0usize; n];
            for (new_pos, &old_pos) in perm.iter().enumerate() {
                old_idx[old_pos] = new_idx[new_pos];
            }
            *slot_map = self.ravel(&old_idx);
        }
        let mut out = ComplexMatrix::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                out[(r, c)] = m[(index_map[r], index_map[c])];
            }
        }
        Ok((out, new_space))
    }

    /// Partial trace over the listed slots; remaining slots keep their order.
    pub fn partial_trace(&self, m: &ComplexMatrix, traced: &[usize]) -> Result<(ComplexMatrix, TensorSpace)> {
        let n = self.slots.len();
        let d = self.dim();
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::Dimension(format!("matrix must be {d}x{d} for this space")));
        }
        let mut is_traced = vec![false; n];
        for &t in traced {
            if t >= n {
                return Err(Error::InvalidInput(format!("slot index {t} out of range")));
            }
            if std::mem::replace(&mut is_traced[t], true) {
                return Err(Error::InvalidInput(format!("slot index {t} listed twice")));
            }
        }
        let kept: Vec<usize> = (0..n).filter(|&i| !is_traced[i]).collect();
        let kept_space = TensorSpace::new(kept.iter().map(|&i| self.slots[i].clone()).collect())?;
        let traced_space = TensorSpace::new(traced.iter().map(|&i| self.slots[i].clone()).collect())?;
        let dk = kept_space.dim();
        let dt = traced_space.dim();
        let mut out = ComplexMatrix::zeros(dk, dk);
        let mut full_idx = vec![0usize; n];
        for rk in 0..dk {
            let rk_idx = kept_space.unravel(rk);
            for ck in 0..dk {
                let ck_idx = kept_space.unravel(ck);
                let mut acc = num_complex::Complex64::new(0.0, 0.0);
                for t in 0..dt {
                    let t_idx = traced_space.unravel(t);
                    for (pos, &slot) in kept.iter().enumerate() {
                        full_idx[slot] = rk_idx[pos];
                    }
                    for (pos, &slot) in traced.iter().enumerate() {
                        full_idx[slot] = t_idx[pos];
                    }
                    let r = self.ravel(&full_idx);
                    for (pos, &slot) in kept.iter().enumerate() {
                        full_idx[slot] = ck_idx[pos];
                    }
                    let c = self.ravel(&full_idx);
                    acc += m[(r, c)];
                }
                out[(rk, ck)] = acc;
            }
        }
        Ok((out, kept_space))
    }

    /// Embed an operator on an ordered subset of slots, identity elsewhere.
    /// `sub_slots[i]` names the slot of this space carrying the i-th factor
    /// of `m`'s space.
    pub fn embed(&self, m: &ComplexMatrix, sub_slots: &[usize]) -> Result<ComplexMatrix> {
        let n = self.slots.len();
        let sub_dim: usize = sub_slots.iter().map(|&i| self.slots[i].dim).product();
        if m.nrows() != sub_dim || m.ncols() != sub_dim {
            return Err(Error::Dimension(format!(
                "operator must be {sub_dim}x{sub_dim} for slots {sub_slots:?}"
            )));
        }
        let mut used = vec![false; n];
        for &s in sub_slots {
            if s >= n || std::mem::replace(&mut used[s], true) {
                return Err(Error::InvalidInput(format!("invalid subset {sub_slots:?}")));
            }
        }
        let rest: Vec<usize> = (0..n).filter(|&i| !used[i]).collect();
        // assemble on (subset, rest) ordering, then permute back
        let rest_dim: usize = rest.iter().map(|&i| self.slots[i].dim).product();
        let block = kron(m, &ComplexMatrix::identity(rest_dim));
        // permuted space ordering: sub_slots then rest; perm[new_pos] = old_pos
        let reordered: Vec<usize> = sub_slots.iter().chain(rest.iter()).copied().collect();
        let reordered_space = TensorSpace::new(reordered.iter().map(|&i| self.slots[i].clone()).collect())?;
        // invert: target slot order is self; find where each of self's slots
        // sits inside the reordered space
        let mut inv = vec![0usize; n];
        for (new_pos, &old_pos) in reordered.iter().enumerate() {
            inv[old_pos] = new_pos;
        }
        let (out, _) = reordered_space.permute(&block, &inv)?;
        Ok(out)
    }
}

/// Iterate all multi-indices for the given dimensions, row-major order.
pub fn multi_indices(dims: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = dims.iter().product();
    (0..total).map(move |mut flat| {
        let mut idx = vec![0usize; dims.len()];
        for (pos, &d) in dims.iter().enumerate().rev() {
            idx[pos] = flat % d;
            flat /= d;
        }
        idx
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn space2() -> TensorSpace {
        TensorSpace::new(vec![Slot::new("a", 2), Slot::new("b", 2)]).unwrap()
    }

    #[test]
    fn ravel_round_trip() {
        let sp = TensorSpace::new(vec![Slot::new("a", 2), Slot::new("b", 3), Slot::new("c", 2)]).unwrap();
        for flat in 0..sp.dim() {
            assert_eq!(sp.ravel(&sp.unravel(flat)), flat);
        }
        assert_eq!(sp.ravel(&[1, 2, 0]), 1 * 6 + 2 * 2);
    }

    #[test]
    fn partial_trace_of_product_factors() {
        let sp = space2();
        let a = ComplexMatrix::from_parts(2, 2, &[(1.0, 0.0), (0.5, 0.25), (0.5, -0.25), (2.0, 0.0)]).unwrap();
        let b = ComplexMatrix::from_parts(2, 2, &[(0.5, 0.0), (0.0, 0.5), (0.0, -0.5), (0.5, 0.0)]).unwrap();
        let ab = kron(&a, &b);
        let (ta, _) = sp.partial_trace(&ab, &[1]).unwrap();
        assert!(ta.max_abs_diff(&a.scale(b.trace())) < 1e-14);
        let (tb, _) = sp.partial_trace(&ab, &[0]).unwrap();
        assert!(tb.max_abs_diff(&b.scale(a.trace())) < 1e-14);
        let (full, esp) = sp.partial_trace(&ab, &[0, 1]).unwrap();
        assert_eq!(esp.dim(), 1);
        assert!((full[(0, 0)] - ab.trace()).norm() < 1e-14);
    }

    #[test]
    fn permute_swaps_factors() {
        let sp = space2();
        let a = ComplexMatrix::from_parts(2, 2, &[(1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (3.0, 0.0)]).unwrap();
        let b = ComplexMatrix::from_parts(2, 2, &[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (1.0, 0.0)]).unwrap();
        let ab = kron(&a, &b);
        let (ba, nsp) = sp.permute(&ab, &[1, 0]).unwrap();
        assert_eq!(nsp.slots()[0].label, "b");
        assert!(ba.max_abs_diff(&kron(&b, &a)) < 1e-14);
    }

    #[test]
    fn embed_matches_factor_op() {
        let sp = TensorSpace::new(vec![Slot::new("x", 2), Slot::new("y", 3), Slot::new("z", 2)]).unwrap();
        let m = ComplexMatrix::from_parts(2, 2, &[(0.0, 0.0), (0.0, -1.0), (0.0, 1.0), (0.0, 0.0)]).unwrap();
        let emb = sp.embed(&m, &[2]).unwrap();
        let direct = sp.factor_op(&[None, None, Some(&m)]).unwrap();
        assert!(emb.max_abs_diff(&direct) < 1e-14);
        // embedding on swapped pair (z, x)
        let mm = kron(&m, &m);
        let emb2 = sp.embed(&mm, &[2, 0]).unwrap();
        let (perm, psp) = TensorSpace::new(vec![Slot::new("z", 2), Slot::new("x", 2), Slot::new("y", 3)])
            .unwrap()
            .permute(&kron(&mm, &ComplexMatrix::identity(3)), &[1, 2, 0])
            .unwrap();
        assert_eq!(psp.slots()[0].label, "x");
        assert!(emb2.max_abs_diff(&perm) < 1e-14);
    }

    #[test]
    fn partial_trace_commutes_with_permutation() {
        let sp = TensorSpace::new(vec![Slot::new("a", 2), Slot::new("b", 3), Slot::new("c", 2)]).unwrap();
        let d = sp.dim();
        let mut state = 0xa076_1d64u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut m = ComplexMatrix::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                m[(r, c)] = Complex64::new(next(), next());
            }
        }
        // tracing slot b directly == permuting first, tracing its image,
        // and permuting the remainder back into (a, c) order
        let (direct, dsp) = sp.partial_trace(&m, &[1]).unwrap();
        assert_eq!(dsp.slots()[0].label, "a");
        let (rev, rsp) = sp.permute(&m, &[2, 1, 0]).unwrap();
        let (traced, tsp) = rsp.partial_trace(&rev, &[1]).unwrap();
        assert_eq!(tsp.slots()[0].label, "c");
        let (aligned, asp) = tsp.permute(&traced, &[1, 0]).unwrap();
        assert_eq!(asp.slots()[0].label, "a");
        assert!(aligned.max_abs_diff(&direct) < 1e-12);
    }
}
