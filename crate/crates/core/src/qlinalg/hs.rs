use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use super::tensor::TensorSpace;
use crate::{Error, Result};

/// Index into the Hilbert-Schmidt product basis: one basis index per slot,
/// `0` meaning the identity element of that slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HSIndex {
    pub per_slot: Vec<usize>,
}

impl HSIndex {
    pub fn identity(n_slots: usize) -> Self {
        HSIndex { per_slot: vec![0; n_slots] }
    }

    pub fn is_identity(&self) -> bool {
        self.per_slot.iter().all(|&m| m == 0)
    }

    /// Flat position in the coefficient vector produced by [`hs_expand`];
    /// slot 0 is most significant, each slot contributing `dim^2` indices.
    pub fn to_flat(&self, space: &TensorSpace) -> usize {
        debug_assert_eq!(self.per_slot.len(), space.n_slots());
        let mut flat = 0;
        for (s, &mu) in self.per_slot.iter().enumerate() {
            let a = space.slot_dim(s) * space.slot_dim(s);
            debug_assert!(mu < a);
            flat = flat * a + mu;
        }
        flat
    }

    pub fn from_flat(space: &TensorSpace, mut flat: usize) -> Self {
        let n = space.n_slots();
        let mut per_slot = vec![0usize; n];
        for s in (0..n).rev() {
            let a = space.slot_dim(s) * space.slot_dim(s);
            per_slot[s] = flat % a;
            flat /= a;
        }
        HSIndex { per_slot }
    }
}

/// Orthogonal Hermitian basis of d x d operators: the identity followed by
/// d^2 - 1 traceless elements, normalized to `Tr(s_mu s_nu) = d delta_mu_nu`.
///
/// For d = 2 this is exactly (id, sigma_x, sigma_y, sigma_z). For larger d it
/// is the generalized Gell-Mann family rescaled by sqrt(d/2), ordered as:
/// symmetric off-diagonal pairs (j < k, lexicographic), then antisymmetric
/// pairs, then the diagonal elements.
pub fn hs_basis(d: usize) -> Vec<ComplexMatrix> {
    assert!(d >= 1);
    let mut basis = Vec::with_capacity(d * d);
    basis.push(ComplexMatrix::identity(d));
    if d == 1 {
        return basis;
    }
    let scale = (d as f64 / 2.0).sqrt();
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = ComplexMatrix::zeros(d, d);
            m[(j, k)] = Complex64::new(scale, 0.0);
            m[(k, j)] = Complex64::new(scale, 0.0);
            basis.push(m);
        }
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = ComplexMatrix::zeros(d, d);
            m[(j, k)] = Complex64::new(0.0, -scale);
            m[(k, j)] = Complex64::new(0.0, scale);
            basis.push(m);
        }
    }
    for l in 1..d {
        let norm = scale * (2.0 / (l as f64 * (l + 1) as f64)).sqrt();
        let mut m = ComplexMatrix::zeros(d, d);
        for mm in 0..l {
            m[(mm, mm)] = Complex64::new(norm, 0.0);
        }
        m[(l, l)] = Complex64::new(-(l as f64) * norm, 0.0);
        basis.push(m);
    }
    basis
}

fn check_shape(m: &ComplexMatrix, space: &TensorSpace) -> Result<()> {
    let d = space.dim();
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::Dimension(format!(
            "matrix is {}x{} but the space has dimension {}",
            m.nrows(),
            m.ncols(),
            d
        )));
    }
    Ok(())
}

/// Rearrange a matrix on `space` into the per-slot pair tensor whose axis
/// for slot s enumerates (row digit, col digit) as `r*d + c`.
fn to_pair_tensor(m: &ComplexMatrix, space: &TensorSpace) -> Vec<Complex64> {
    let d = space.dim();
    let n = space.n_slots();
    let mut out = vec![Complex64::new(0.0, 0.0); d * d];
    for r in 0..d {
        let r_idx = space.unravel(r);
        for c in 0..d {
            let c_idx = space.unravel(c);
            let mut q = 0usize;
            for s in 0..n {
                let ds = space.slot_dim(s);
                q = q * (ds * ds) + r_idx[s] * ds + c_idx[s];
            }
            out[q] = m[(r, c)];
        }
    }
    out
}

fn from_pair_tensor(t: &[Complex64], space: &TensorSpace) -> ComplexMatrix {
    let d = space.dim();
    let n = space.n_slots();
    let mut m = ComplexMatrix::zeros(d, d);
    for r in 0..d {
        let r_idx = space.unravel(r);
        for c in 0..d {
            let c_idx = space.unravel(c);
            let mut q = 0usize;
            for s in 0..n {
                let ds = space.slot_dim(s);
                q = q * (ds * ds) + r_idx[s] * ds + c_idx[s];
            }
            m[(r, c)] = t[q];
        }
    }
    m
}

/// Apply `mat` (out_dim x in_dim) along one axis of a dense tensor.
fn mode_apply(t: &[Complex64], dims: &mut [usize], axis: usize, mat: &[Vec<Complex64>]) -> Vec<Complex64> {
    let in_dim = dims[axis];
    let out_dim = mat.len();
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let mut out = vec![Complex64::new(0.0, 0.0); outer * out_dim * inner];
    for o in 0..outer {
        for mu in 0..out_dim {
            let row = &mat[mu];
            let dst = &mut out[(o * out_dim + mu) * inner..(o * out_dim + mu + 1) * inner];
            for (q, &coef) in row.iter().enumerate().take(in_dim) {
                if coef.norm_sqr() == 0.0 {
                    continue;
                }
                let src = &t[(o * in_dim + q) * inner..(o * in_dim + q + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += coef * s;
                }
            }
        }
    }
    dims[axis] = out_dim;
    out
}

/// Hilbert-Schmidt coefficients `w_alpha = Tr(m s_alpha) / dim` in the flat
/// ordering of [`HSIndex::to_flat`]. Coefficients are real for Hermitian `m`.
pub fn hs_expand(m: &ComplexMatrix, space: &TensorSpace) -> Result<Vec<Complex64>> {
    check_shape(m, space)?;
    let n = space.n_slots();
    let mut t = to_pair_tensor(m, space);
    let mut dims: Vec<usize> = (0..n).map(|s| space.slot_dim(s) * space.slot_dim(s)).collect();
    for s in 0..n {
        let d = space.slot_dim(s);
        let basis = hs_basis(d);
        // U[mu][r*d + c] = s_mu[c, r] / d  so that the product over slots is
        // Tr(m s_alpha) / dim
        let mat: Vec<Vec<Complex64>> = basis
            .iter()
            .map(|b| {
                let mut row = vec![Complex64::new(0.0, 0.0); d * d];
                for r in 0..d {
                    for c in 0..d {
                        row[r * d + c] = b[(c, r)] / d as f64;
                    }
                }
                row
            })
            .collect();
        t = mode_apply(&t, &mut dims, s, &mat);
    }
    Ok(t)
}

/// Real coefficients for a Hermitian input.
pub fn hs_expand_hermitian(m: &ComplexMatrix, space: &TensorSpace) -> Result<Vec<f64>> {
    Ok(hs_expand(m, space)?.iter().map(|z| z.re).collect())
}

/// Rebuild the matrix `sum_alpha w_alpha s_alpha` from coefficients.
pub fn hs_reconstruct(w: &[Complex64], space: &TensorSpace) -> Result<ComplexMatrix> {
    let n = space.n_slots();
    let expected: usize = (0..n).map(|s| space.slot_dim(s) * space.slot_dim(s)).product();
    if w.len() != expected {
        return Err(Error::Dimension(format!(
            "expected {expected} coefficients, got {}",
            w.len()
        )));
    }
    let mut t = w.to_vec();
    let mut dims: Vec<usize> = (0..n).map(|s| space.slot_dim(s) * space.slot_dim(s)).collect();
    for s in 0..n {
        let d = space.slot_dim(s);
        let basis = hs_basis(d);
        // V[r*d + c][mu] = s_mu[r, c]
        let mat: Vec<Vec<Complex64>> = (0..d * d)
            .map(|rc| {
                let (r, c) = (rc / d, rc % d);
                basis.iter().map(|b| b[(r, c)]).collect()
            })
            .collect();
        t = mode_apply(&t, &mut dims, s, &mat);
    }
    Ok(from_pair_tensor(&t, space))
}

/// Reconstruct from real coefficients.
pub fn hs_reconstruct_real(w: &[f64], space: &TensorSpace) -> Result<ComplexMatrix> {
    let wc: Vec<Complex64> = w.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    hs_reconstruct(&wc, space)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlinalg::tensor::Slot;

    #[test]
    fn basis_gram_matrix() {
        for d in 1..=4 {
            let basis = hs_basis(d);
            assert_eq!(basis.len(), d * d);
            for (i, a) in basis.iter().enumerate() {
                assert!(a.hermiticity_defect() < 1e-15, "d={d} mu={i} not Hermitian");
                if i > 0 {
                    assert!(a.trace().norm() < 1e-14, "d={d} mu={i} not traceless");
                }
                for (j, b) in basis.iter().enumerate() {
                    let g = a.matmul(b).trace();
                    let expect = if i == j { d as f64 } else { 0.0 };
                    assert!(
                        (g.re - expect).abs() < 1e-12 && g.im.abs() < 1e-12,
                        "d={d} gram({i},{j}) = {g}"
                    );
                }
            }
        }
    }

    #[test]
    fn pauli_order_for_qubits() {
        let basis = hs_basis(2);
        assert_eq!(basis[1][(0, 1)], Complex64::new(1.0, 0.0)); // x
        assert_eq!(basis[2][(0, 1)], Complex64::new(0.0, -1.0)); // y
        assert_eq!(basis[3][(0, 0)], Complex64::new(1.0, 0.0)); // z
        assert_eq!(basis[3][(1, 1)], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn expand_bell_state() {
        // |phi+><phi+| (unnormalized, trace 2) on two qubits:
        // = (id id + xx - yy + zz) / 2
        let sp = TensorSpace::new(vec![Slot::new("a", 2), Slot::new("b", 2)]).unwrap();
        let v = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        let m = ComplexMatrix::outer(&v, &v);
        let w = hs_expand_hermitian(&m, &sp).unwrap();
        let idx = |a: usize, b: usize| HSIndex { per_slot: vec![a, b] }.to_flat(&sp);
        for (flat, coeff) in w.iter().enumerate() {
            let expect = match flat {
                f if f == idx(0, 0) => 0.5,
                f if f == idx(1, 1) => 0.5,
                f if f == idx(2, 2) => -0.5,
                f if f == idx(3, 3) => 0.5,
                _ => 0.0,
            };
            assert!((coeff - expect).abs() < 1e-13, "flat {flat}: {coeff} vs {expect}");
        }
        let back = hs_reconstruct_real(&w, &sp).unwrap();
        assert!(back.max_abs_diff(&m) < 1e-13);
    }

    #[test]
    fn parseval_identity() {
        // sum_alpha w_alpha^2 * dim == Tr(m^2) for Hermitian m
        let sp = TensorSpace::new(vec![Slot::new("a", 2), Slot::new("b", 3)]).unwrap();
        let d = sp.dim();
        let mut m = ComplexMatrix::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                let re = ((r * 7 + c * 3) % 5) as f64 - 2.0;
                let im = ((r + 2 * c) % 3) as f64 - 1.0;
                m[(r, c)] = Complex64::new(re, im);
            }
        }
        let m = m.hermitize();
        let w = hs_expand_hermitian(&m, &sp).unwrap();
        let lhs: f64 = w.iter().map(|x| x * x).sum::<f64>() * d as f64;
        let rhs = m.matmul(&m).trace().re;
        assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0));
    }

    #[test]
    fn random_round_trip_up_to_dim_64() {
        // expand/reconstruct is the identity on Hermitian inputs
        let shapes: [&[usize]; 4] = [&[2], &[3, 2], &[4, 4], &[4, 4, 2, 2]];
        for (i, dims) in shapes.iter().enumerate() {
            let slots: Vec<Slot> = dims
                .iter()
                .enumerate()
                .map(|(k, &d)| Slot::new(format!("s{k}"), d))
                .collect();
            let sp = TensorSpace::new(slots).unwrap();
            let d = sp.dim();
            let mut state = 0x5bd1e995u64.wrapping_mul(i as u64 + 1);
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
            let m = m.hermitize();
            let w = hs_expand_hermitian(&m, &sp).unwrap();
            let back = hs_reconstruct_real(&w, &sp).unwrap();
            assert!(back.max_abs_diff(&m) < 1e-10, "dim {d}");
        }
    }
}
