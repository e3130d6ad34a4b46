//! Dense linear-algebra primitives: Cholesky factorization, triangular
//! solves, a one-sided Jacobi SVD for small matrices, and power iteration.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Entrywise symmetry check: |a_ij - a_ji| <= tol for all i, j.
pub fn is_symmetric(a: &ArrayView2<f64>, tol: f64) -> bool {
    let n = a.nrows();
    if a.ncols() != n {
        return false;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[[i, j]] - a[[j, i]]).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// Lower-triangular Cholesky factor of a symmetric matrix.
///
/// Fails with [`Error::NotPositiveDefinite`] carrying the index of the
/// first non-positive pivot.
pub fn cholesky(a: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite(j));
        }
        let piv = d.sqrt();
        l[[j, j]] = piv;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / piv;
        }
    }
    Ok(l)
}

/// Solves L x = b by forward substitution (L lower triangular).
pub fn solve_lower(l: &ArrayView2<f64>, b: &ArrayView1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut x = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

/// Solves L' x = b by back substitution (L lower triangular).
pub fn solve_lower_transpose(l: &ArrayView2<f64>, b: &ArrayView1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

/// Full SVD of a small dense matrix via one-sided Jacobi rotations.
///
/// Returns (u, s, v) with a = u * diag(s) * v', singular values sorted in
/// descending order. Intended for the low-dimensional matrices arising in
/// classical CCA; cost is O(sweeps * m * n^2).
pub fn svd_small(a: &ArrayView2<f64>) -> (Array2<f64>, Array1<f64>, Array2<f64>) {
    let (rows, cols) = a.dim();
    if rows < cols {
        let (u, s, v) = svd_small(&a.t());
        return (v, s, u);
    }
    let mut w = a.to_owned();
    let mut v = Array2::<f64>::eye(cols);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..rows {
                    let wp = w[[i, p]];
                    let wq = w[[i, q]];
                    app += wp * wp;
                    aqq += wq * wq;
                    apq += wp * wq;
                }
                if apq.abs() <= 1e-15 * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let wp = w[[i, p]];
                    let wq = w[[i, q]];
                    w[[i, p]] = c * wp - s * wq;
                    w[[i, q]] = s * wp + c * wq;
                }
                for i in 0..cols {
                    let vp = v[[i, p]];
                    let vq = v[[i, q]];
                    v[[i, p]] = c * vp - s * vq;
                    v[[i, q]] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = (0..cols)
        .map(|j| w.column(j).dot(&w.column(j)).sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    let mut u = Array2::<f64>::zeros((rows, cols));
    let mut sigma = Array1::<f64>::zeros(cols);
    let mut vs = Array2::<f64>::zeros((cols, cols));
    for (dst, &src) in order.iter().enumerate() {
        sigma[dst] = norms[src];
        if norms[src] > 0.0 {
            for i in 0..rows {
                u[[i, dst]] = w[[i, src]] / norms[src];
            }
        }
        for i in 0..cols {
            vs[[i, dst]] = v[[i, src]];
        }
    }
    (u, sigma, vs)
}

/// Leading right singular vector of `m` by power iteration on m' m.
///
/// Deterministic: starts from the uniform unit vector. Converges to the
/// dominant right singular direction whenever the start is not orthogonal
/// to it; good enough as a solver initializer.
pub fn top_right_singular_vector(m: &ArrayView2<f64>, max_iters: usize, tol: f64) -> Array1<f64> {
    let cols = m.ncols();
    let mut b = Array1::<f64>::from_elem(cols, 1.0 / (cols as f64).sqrt());
    for _ in 0..max_iters {
        let mb = m.dot(&b);
        let mut next = m.t().dot(&mb);
        let norm = next.dot(&next).sqrt();
        if norm == 0.0 {
            return b;
        }
        next.mapv_inplace(|x| x / norm);
        let diff = next
            .iter()
            .zip(b.iter())
            .map(|(a, c)| (a - c).abs())
            .fold(0.0_f64, f64::max);
        b = next;
        if diff < tol {
            break;
        }
    }
    b
}
