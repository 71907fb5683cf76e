use super::matrix::ComplexMatrix;
use crate::{Error, Result};
use num_complex::Complex64;

const MAX_QL_ITERATIONS: usize = 64;

/// Eigendecomposition of a Hermitian matrix: Householder reduction to real
/// tridiagonal form followed by implicit-shift QL. Returns eigenvalues in
/// ascending order and a unitary whose columns are the matching
/// eigenvectors, `m = V diag(w) V^dag`.
///
/// The Hermitian part of the input is decomposed; callers that need to
/// reject non-Hermitian inputs must check separately.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !m.is_square() {
        return Err(Error::Dimension("eig_hermitian needs a square matrix".into()));
    }
    let n = m.nrows();
    let mut a = m.hermitize();
    let mut q = ComplexMatrix::identity(n);
    if n <= 1 {
        let w = if n == 1 { vec![a[(0, 0)].re] } else { vec![] };
        return Ok((w, q));
    }

    let (mut diag, mut sub) = tridiagonalize(&mut a, &mut q);
    ql_implicit(&mut diag, &mut sub, &mut q)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, new_col)] = q[(r, old_col)];
        }
    }
    Ok((eigenvalues, vectors))
}

/// Reduce Hermitian `a` to real tridiagonal form by Householder reflections,
/// accumulating the unitary into `q`. Returns (diagonal, subdiagonal); the
/// subdiagonal entry `sub[k]` couples rows k and k+1 and `sub[n-1]` is zero.
fn tridiagonalize(a: &mut ComplexMatrix, q: &mut ComplexMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.nrows();
    for k in 0..n.saturating_sub(2) {
        // column below the diagonal: x = a[k+1.., k]
        let mut sigma2 = 0.0f64;
        for i in (k + 1)..n {
            sigma2 += a[(i, k)].norm_sqr();
        }
        let sigma = sigma2.sqrt();
        let tail2 = sigma2 - a[(k + 1, k)].norm_sqr();
        if sigma <= 1e-300 || tail2 <= (1e-30 * sigma) * sigma {
            continue; // already tridiagonal in this column
        }
        let alpha = a[(k + 1, k)];
        let phase = if alpha.norm() > 1e-300 { alpha / alpha.norm() } else { Complex64::new(1.0, 0.0) };
        let beta = -phase * sigma; // reflected value of the leading entry
        // Householder vector u = (x - beta e1) / norm, reflect H = I - 2 u u^dag
        let mut u = vec![Complex64::new(0.0, 0.0); n];
        u[k + 1] = alpha - beta;
        for i in (k + 2)..n {
            u[i] = a[(i, k)];
        }
        let unorm2: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        let unorm = unorm2.sqrt();
        for z in u.iter_mut() {
            *z /= unorm;
        }

        // two-sided update of the trailing block: A <- A - u w^dag - w u^dag
        // with p = 2 A u and w = p - (u^dag p) u
        let mut p = vec![Complex64::new(0.0, 0.0); n];
        for i in (k + 1)..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in (k + 1)..n {
                acc += a[(i, j)] * u[j];
            }
            p[i] = 2.0 * acc;
        }
        let updag_p: Complex64 = ((k + 1)..n).map(|i| u[i].conj() * p[i]).sum();
        let w: Vec<Complex64> = (0..n).map(|i| p[i] - updag_p * u[i]).collect();
        for i in (k + 1)..n {
            for j in (k + 1)..n {
                let delta = u[i] * w[j].conj() + w[i] * u[j].conj();
                a[(i, j)] -= delta;
            }
        }
        a[(k + 1, k)] = beta;
        a[(k, k + 1)] = beta.conj();
        for i in (k + 2)..n {
            a[(i, k)] = Complex64::new(0.0, 0.0);
            a[(k, i)] = Complex64::new(0.0, 0.0);
        }

        // accumulate Q <- Q H on columns k+1..
        for r in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in (k + 1)..n {
                acc += q[(r, c)] * u[c];
            }
            let acc2 = 2.0 * acc;
            for c in (k + 1)..n {
                q[(r, c)] -= acc2 * u[c].conj();
            }
        }
    }

    // phase-rotate columns so the subdiagonal becomes real nonnegative
    let mut d = Complex64::new(1.0, 0.0);
    let mut diag = vec![0.0f64; n];
    let mut sub = vec![0.0f64; n];
    diag[0] = a[(0, 0)].re;
    for k in 0..(n - 1) {
        // (D^dag A D)[k+1, k] = conj(d_{k+1}) a_{k+1,k} d_k, real for d_{k+1} = e/|e|
        let e = a[(k + 1, k)] * d;
        let mag = e.norm();
        let d_next = if mag > 1e-300 { e / mag } else { d };
        if (d_next - Complex64::new(1.0, 0.0)).norm() > 1e-300 {
            for r in 0..n {
                q[(r, k + 1)] *= d_next;
            }
        }
        d = d_next;
        sub[k] = mag;
        diag[k + 1] = a[(k + 1, k + 1)].re;
    }
    (diag, sub)
}

/// Implicit-shift QL on a real symmetric tridiagonal matrix, rotating the
/// columns of `q` alongside. `diag` holds the eigenvalues on return.
fn ql_implicit(diag: &mut [f64], sub: &mut [f64], q: &mut ComplexMatrix) -> Result<()> {
    let n = diag.len();
    let rows = q.nrows();
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if sub[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > MAX_QL_ITERATIONS {
                return Err(Error::Numerical("tridiagonal QL failed to converge".into()));
            }
            // Wilkinson shift from the leading 2x2
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * sub[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + sub[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * sub[i];
                let b = c * sub[i];
                r = f.hypot(g);
                sub[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    sub[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                for row in 0..rows {
                    let qi = q[(row, i)];
                    let qi1 = q[(row, i + 1)];
                    q[(row, i + 1)] = qi * s + qi1 * c;
                    q[(row, i)] = qi * c - qi1 * s;
                }
            }
            if underflow {
                continue;
            }
            diag[l] -= p;
            sub[l] = g;
            sub[m] = 0.0;
        }
    }
    Ok(())
}

/// Nearest positive semidefinite matrix in Frobenius norm: Hermitize, then
/// clamp negative eigenvalues to zero.
pub fn project_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (w, v) = eig_hermitian(m)?;
    let n = m.nrows();
    let mut out = ComplexMatrix::zeros(n, n);
    for (k, &lambda) in w.iter().enumerate() {
        if lambda <= 0.0 {
            continue;
        }
        for r in 0..n {
            let vr = v[(r, k)];
            if vr.norm_sqr() == 0.0 {
                continue;
            }
            for c in 0..n {
                out[(r, c)] += vr * lambda * v[(c, k)].conj();
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn reconstruct(w: &[f64], v: &ComplexMatrix) -> ComplexMatrix {
        let n = v.nrows();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lambda) in w.iter().enumerate() {
            for r in 0..n {
                for c in 0..n {
                    out[(r, c)] += v[(r, k)] * lambda * v[(c, k)].conj();
                }
            }
        }
        out
    }

    fn pseudo_random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
        // cheap deterministic fill, then Hermitize
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut m = ComplexMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                m[(r, c)] = Complex64::new(next(), next());
            }
        }
        m.hermitize()
    }

    #[test]
    fn known_two_by_two() {
        // eigenvalues of [[1, i], [-i, 1]] are 0 and 2
        let m = ComplexMatrix::from_parts(2, 2, &[(1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 0.0)]).unwrap();
        let (w, v) = eig_hermitian(&m).unwrap();
        assert!((w[0] - 0.0).abs() < 1e-12 && (w[1] - 2.0).abs() < 1e-12);
        assert!(reconstruct(&w, &v).max_abs_diff(&m) < 1e-12);
    }

    #[test]
    fn random_reconstruction_and_orthonormality() {
        for (i, n) in [1usize, 2, 3, 5, 8, 16, 33].iter().enumerate() {
            let m = pseudo_random_hermitian(*n, 40 + i as u64);
            let (w, v) = eig_hermitian(&m).unwrap();
            assert!(w.windows(2).all(|p| p[0] <= p[1] + 1e-14), "sorted");
            let err = reconstruct(&w, &v).max_abs_diff(&m);
            assert!(err < 1e-10 * m.frobenius_norm().max(1.0), "n={n} err={err}");
            let gram = v.dagger().matmul(&v);
            assert!(gram.max_abs_diff(&ComplexMatrix::identity(*n)) < 1e-11, "unitary");
        }
    }

    #[test]
    fn degenerate_and_low_rank_spectra() {
        // rank-1 projector scaled by 4 in dimension 6: eigenvalues {4, 0 x5}
        let n = 6;
        let mut vvec = vec![Complex64::new(0.0, 0.0); n];
        for (i, z) in vvec.iter_mut().enumerate() {
            *z = Complex64::new(1.0 + i as f64, (i as f64) - 2.0);
        }
        let norm: f64 = vvec.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut m = ComplexMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                m[(r, c)] = 4.0 * vvec[r] * vvec[c].conj() / (norm * norm);
            }
        }
        let (w, v) = eig_hermitian(&m).unwrap();
        assert!(w[..n - 1].iter().all(|&x| x.abs() < 1e-12));
        assert!((w[n - 1] - 4.0).abs() < 1e-12);
        assert!(reconstruct(&w, &v).max_abs_diff(&m) < 1e-12);
    }

    #[test]
    fn psd_projection_properties() {
        let m = pseudo_random_hermitian(6, 7);
        let p = project_psd(&m).unwrap();
        let (w, _) = eig_hermitian(&p).unwrap();
        assert!(w.iter().all(|&x| x >= -1e-12), "projection is PSD");
        // projecting a PSD matrix is the identity
        let p2 = project_psd(&p).unwrap();
        assert!(p2.max_abs_diff(&p) < 1e-10);
        // fixed point on diagonal example
        let d = ComplexMatrix::from_real(2, 2, &[3.0, 0.0, 0.0, -2.0]).unwrap();
        let pd = project_psd(&d).unwrap();
        let expect = ComplexMatrix::from_real(2, 2, &[3.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(pd.max_abs_diff(&expect) < 1e-13);
    }
}
