//! Eigen-solvers used by the exact backends.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{numerical, Result};

/// Eigenpairs of a real symmetric matrix, sorted ascending.
pub fn symmetric_eigen_sorted(h: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = h.nrows();
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// `exp(−i t H) v` for a dense matrix, by a scaled Taylor series.
///
/// Slow and dense; used as a reference for the structured kernels.
pub fn dense_expm_times(h: &DMatrix<Complex64>, t: f64, v: &[Complex64]) -> Vec<Complex64> {
    // ∞-norm bound so each substep has ‖t H / n‖ ≤ 1/4
    let bound = (0..h.nrows())
        .map(|r| h.row(r).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let steps = ((t.abs() * bound * 4.0).ceil() as usize).max(1);
    let dt = t / steps as f64;
    let mut x = DVector::from_column_slice(v);
    for _ in 0..steps {
        let mut term = x.clone();
        let mut acc = x.clone();
        for k in 1..40 {
            term = (h * term) * Complex64::new(0.0, -dt / k as f64);
            acc += &term;
            if term.iter().all(|z| z.norm() < 1e-18) {
                break;
            }
        }
        x = acc;
    }
    x.iter().copied().collect()
}

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            max_iter: 400,
            tol: 1e-12,
            seed: 0x5eed,
        }
    }
}

/// Lowest eigenpair of a real symmetric operator given as a mat-vec closure,
/// restricted to the orthogonal complement of `deflate`.
///
/// Full reorthogonalization; the Krylov basis is stored, so memory is
/// `dim × iterations`.
pub fn lanczos_lowest<F>(
    dim: usize,
    matvec: F,
    deflate: &[Vec<f64>],
    opts: &LanczosOptions,
) -> Result<(f64, Vec<f64>)>
where
    F: Fn(&[f64], &mut [f64]),
{
    // A fresh start per deflation level: reusing the same vector would leave
    // no component in a degenerate space it was already projected onto.
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(deflate.len() as u64));
    let mut q: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    project_out(&mut q, deflate);
    normalize(&mut q).ok_or_else(|| numerical("Lanczos start vector vanished after deflation"))?;

    let max_iter = opts.max_iter.min(dim.saturating_sub(deflate.len())).max(1);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];

    loop {
        let j = basis.len() - 1;
        matvec(&basis[j], &mut w);
        let a = dot(&w, &basis[j]);
        alpha.push(a);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                axpy(&mut w, -c, b);
            }
            project_out(&mut w, deflate);
        }
        let b_next = norm(&w);

        let m = alpha.len();
        let check = m == max_iter || b_next < 1e-14 || m % 8 == 0;
        if check {
            let (theta, s) = tridiagonal_lowest(&alpha, &beta);
            let residual = b_next * s[m - 1].abs();
            if residual < opts.tol * theta.abs().max(1.0) || m == max_iter || b_next < 1e-14 {
                if residual > 1e-8 * theta.abs().max(1.0) {
                    return Err(numerical(format!(
                        "Lanczos did not converge: residual {residual:e} after {m} iterations"
                    )));
                }
                let mut v = vec![0.0; dim];
                for (coef, b) in s.iter().zip(&basis) {
                    axpy(&mut v, *coef, b);
                }
                project_out(&mut v, deflate);
                normalize(&mut v).ok_or_else(|| numerical("degenerate Ritz vector"))?;
                return Ok((theta, v));
            }
        }
        beta.push(b_next);
        let next: Vec<f64> = w.iter().map(|x| x / b_next).collect();
        basis.push(next);
    }
}

fn tridiagonal_lowest(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let (vals, vecs) = symmetric_eigen_sorted(t);
    (vals[0], vecs.column(0).iter().copied().collect())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

fn project_out(v: &mut [f64], against: &[Vec<f64>]) {
    for u in against {
        let c = dot(v, u);
        axpy(v, -c, u);
    }
}

fn normalize(v: &mut [f64]) -> Option<()> {
    let n = norm(v);
    if n < 1e-300 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= n);
    Some(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lanczos_matches_dense_on_random_symmetric() {
        let n = 60;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let h = &a + a.transpose();
        let (vals, vecs) = symmetric_eigen_sorted(h.clone());
        let mv = |x: &[f64], y: &mut [f64]| {
            let r = &h * DVector::from_column_slice(x);
            y.copy_from_slice(r.as_slice());
        };
        let (e0, v0) = lanczos_lowest(n, mv, &[], &LanczosOptions::default()).unwrap();
        assert!((e0 - vals[0]).abs() < 1e-10);
        let ov = dot(&v0, vecs.column(0).as_slice()).abs();
        assert!((ov - 1.0).abs() < 1e-10);

        let (e1, _) = lanczos_lowest(n, mv, &[v0], &LanczosOptions::default()).unwrap();
        assert!((e1 - vals[1]).abs() < 1e-9);
    }

    #[test]
    fn expm_of_pauli_x() {
        // exp(−itX) = cos t − i sin t X
        let x = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        );
        let t = 2.7;
        let out = dense_expm_times(&x, t, &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        assert!((out[0] - Complex64::new(t.cos(), 0.0)).norm() < 1e-14);
        assert!((out[1] - Complex64::new(0.0, -t.sin())).norm() < 1e-14);
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let h = DMatrix::<Complex64>::zeros(4, 4);
        let v = vec![Complex64::new(0.5, 0.5); 4];
        let out = dense_expm_times(&h, 3.0, &v);
        for (a, b) in out.iter().zip(&v) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
