//! Classical CCA and the l1-penalized sparse CCA solver, together with
//! the penalty-selection strategies it is commonly paired with: tuning to
//! a target support size, permutation-based selection, and k-fold
//! cross-validation.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::seed::mix_seed;
use crate::types::{center_columns, CanonicalPair, DataMatrixPair};

/// Penalty levels for the two canonical vectors, in the lambda
/// parametrization c1 = lambda_u * sqrt(p_x), c2 = lambda_v * sqrt(p_y).
///
/// Lambdas must lie in (0, 1]; whether the implied c is feasible against
/// the unit l2 ball (c >= 1) additionally depends on the data dimensions
/// and is checked by the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    pub lambda_u: f64,
    pub lambda_v: f64,
}

impl PenaltyParams {
    pub fn new(lambda_u: f64, lambda_v: f64) -> Result<Self> {
        for lambda in [lambda_u, lambda_v] {
            if !(lambda > 0.0 && lambda <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "lambda must be in (0, 1], got {lambda}"
                )));
            }
        }
        Ok(Self { lambda_u, lambda_v })
    }

    pub fn c1(&self, p_x: usize) -> f64 {
        self.lambda_u * (p_x as f64).sqrt()
    }

    pub fn c2(&self, p_y: usize) -> f64 {
        self.lambda_v * (p_y as f64).sqrt()
    }
}

/// Iteration controls for the alternating solver.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Cap on full (u, v) update rounds.
    pub max_iters: usize,
    /// Convergence threshold on the l-infinity change of the concatenated
    /// (u, v) iterate.
    pub tol: f64,
    /// Seed for randomized subroutines (row permutations, CV folds). The
    /// solver initialization itself is deterministic.
    pub rng_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-6,
            rng_seed: 0,
        }
    }
}

/// Componentwise soft threshold: sign(w_i) * max(|w_i| - delta, 0).
pub fn soft_threshold(w: &ArrayView1<f64>, delta: f64) -> Array1<f64> {
    debug_assert!(delta >= 0.0);
    w.mapv(|x| {
        let m = x.abs() - delta;
        if m > 0.0 {
            x.signum() * m
        } else {
            0.0
        }
    })
}

/// First canonical pair of the classical (Hotelling) CCA problem.
///
/// Valid in the low-dimensional regime; the returned objective is the
/// largest sample canonical correlation, and the vectors are scaled to
/// unit sample variance of the projections (divisor n - 1).
pub fn classical_cca(data: &DataMatrixPair) -> Result<CanonicalPair> {
    let (n, p_x, p_y) = (data.n(), data.p_x(), data.p_y());
    let p_max = p_x.max(p_y);
    if n <= p_max {
        return Err(Error::DimensionTooHigh { n, p: p_max });
    }
    let xc = center_columns(&data.x().view());
    let yc = center_columns(&data.y().view());
    let denom = (n - 1) as f64;
    let s_x = xc.t().dot(&xc) / denom;
    let s_y = yc.t().dot(&yc) / denom;
    let s_xy = xc.t().dot(&yc) / denom;
    let l_x = linalg::cholesky(&s_x.view()).map_err(|_| Error::SingularCovariance)?;
    let l_y = linalg::cholesky(&s_y.view()).map_err(|_| Error::SingularCovariance)?;

    // Whitened cross-covariance K = Lx^-1 Sxy Ly^-T; its top singular pair
    // maps back to the canonical vectors through the triangular factors.
    let mut z = Array2::<f64>::zeros((p_x, p_y));
    for j in 0..p_y {
        let col = linalg::solve_lower(&l_x.view(), &s_xy.column(j));
        z.column_mut(j).assign(&col);
    }
    let mut k = Array2::<f64>::zeros((p_x, p_y));
    for i in 0..p_x {
        let row = z.row(i).to_owned();
        let w = linalg::solve_lower(&l_y.view(), &row.view());
        k.row_mut(i).assign(&w);
    }
    let (a_mat, sigma, b_mat) = linalg::svd_small(&k.view());
    let a = a_mat.column(0).to_owned();
    let b = b_mat.column(0).to_owned();
    let mut u = linalg::solve_lower_transpose(&l_x.view(), &a.view());
    let mut v = linalg::solve_lower_transpose(&l_y.view(), &b.view());
    fix_signs(&mut u, &mut v);
    Ok(CanonicalPair::new(u, v, sigma[0]))
}

/// max w'u over ||u||_2 <= 1, ||u||_1 <= c, solved by soft thresholding
/// with the threshold found by bisection so the l1 constraint binds or is
/// slack at delta = 0. Requires c >= 1. Zeros in the result are exact.
fn l1_ball_argmax(w: &Array1<f64>, c: f64) -> Array1<f64> {
    let norm2 = w.dot(w).sqrt();
    if norm2 == 0.0 {
        return Array1::zeros(w.len());
    }
    let u0 = w.mapv(|x| x / norm2);
    if u0.iter().map(|x| x.abs()).sum::<f64>() <= c {
        return u0;
    }
    let w_max = w.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()));
    let mut lo = 0.0_f64;
    let mut hi = w_max;
    let mut best: Option<Array1<f64>> = None;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let s = soft_threshold(&w.view(), mid);
        let n2 = s.dot(&s).sqrt();
        if n2 == 0.0 {
            hi = mid;
            continue;
        }
        let l1 = s.iter().map(|x| x.abs()).sum::<f64>();
        let ratio = l1 / n2;
        if ratio > c {
            lo = mid;
        } else {
            let candidate = s.mapv(|x| x / n2);
            // keep only iterates from the feasible side so the returned
            // vector never exceeds the l1 budget
            if ratio >= c * (1.0 - 1e-4) {
                return candidate;
            }
            best = Some(candidate);
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    best.unwrap_or_else(|| {
        // degenerate bracket: fall back to the 1-sparse maximizer
        let k = w
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let mut e = Array1::zeros(w.len());
        e[k] = w[k].signum();
        e
    })
}

fn linf_diff(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0_f64, f64::max)
}

/// Flips the signs of (u, v) jointly so the largest-magnitude entry of u
/// is positive. The objective u' M v is invariant under the joint flip.
fn fix_signs(u: &mut Array1<f64>, v: &mut Array1<f64>) {
    let mut idx = 0;
    let mut best = -1.0_f64;
    for (i, x) in u.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            idx = i;
        }
    }
    if u[idx] < 0.0 {
        u.mapv_inplace(|x| if x == 0.0 { 0.0 } else { -x });
        v.mapv_inplace(|x| if x == 0.0 { 0.0 } else { -x });
    }
}

pub(crate) struct CrossSolve {
    pub u: Array1<f64>,
    pub v: Array1<f64>,
    pub trace: Vec<f64>,
    pub converged: bool,
}

/// Alternating maximization of u' M v on the cross-product matrix
/// M = (1/n) X'Y. Each half-step is an exact l1-ball argmax; the objective
/// is therefore nondecreasing across rounds.
pub(crate) fn solve_cross(m: &Array2<f64>, c1: f64, c2: f64, cfg: &SolverConfig) -> CrossSolve {
    let (p_x, _) = m.dim();
    let mut v = linalg::top_right_singular_vector(&m.view(), 200, 1e-9);
    let mut u = Array1::<f64>::zeros(p_x);
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        let u_new = l1_ball_argmax(&m.dot(&v), c1);
        let v_new = l1_ball_argmax(&m.t().dot(&u_new), c2);
        trace.push(u_new.dot(&m.dot(&v_new)));
        let diff = linf_diff(&u, &u_new).max(linf_diff(&v, &v_new));
        u = u_new;
        v = v_new;
        if diff < cfg.tol {
            converged = true;
            break;
        }
    }
    fix_signs(&mut u, &mut v);
    CrossSolve {
        u,
        v,
        trace,
        converged,
    }
}

fn cross_product(data: &DataMatrixPair) -> Array2<f64> {
    data.x().t().dot(data.y()) / data.n() as f64
}

fn check_feasible(c: f64) -> Result<()> {
    if c < 1.0 {
        return Err(Error::InfeasiblePenalty { c });
    }
    Ok(())
}

/// l1-penalized sparse CCA: maximizes (1/n) u' X'Y v subject to
/// ||u||_2 <= 1, ||v||_2 <= 1, ||u||_1 <= c1, ||v||_1 <= c2.
///
/// Expects standardized data. On hitting the iteration cap the last
/// iterate is attached to the [`Error::DidNotConverge`] variant so callers
/// may still use it.
pub fn l1_penalized_cca(
    data: &DataMatrixPair,
    params: &PenaltyParams,
    cfg: &SolverConfig,
) -> Result<CanonicalPair> {
    l1_penalized_cca_with_trace(data, params, cfg).map(|(pair, _)| pair)
}

/// Same as [`l1_penalized_cca`] but also returns the per-round objective
/// values, which are nondecreasing up to bisection tolerance.
pub fn l1_penalized_cca_with_trace(
    data: &DataMatrixPair,
    params: &PenaltyParams,
    cfg: &SolverConfig,
) -> Result<(CanonicalPair, Vec<f64>)> {
    let c1 = params.c1(data.p_x());
    let c2 = params.c2(data.p_y());
    check_feasible(c1)?;
    check_feasible(c2)?;
    let m = cross_product(data);
    let sol = solve_cross(&m, c1, c2, cfg);
    let objective = *sol.trace.last().unwrap_or(&0.0);
    let pair = CanonicalPair::new(sol.u, sol.v, objective);
    if sol.converged {
        Ok((pair, sol.trace))
    } else {
        Err(Error::DidNotConverge {
            iters: cfg.max_iters,
            last: Box::new(pair),
        })
    }
}

/// Unwraps a solver result, accepting the last iterate of a run that hit
/// the iteration cap.
pub fn pair_or_last_iterate(res: Result<CanonicalPair>) -> Result<CanonicalPair> {
    match res {
        Ok(pair) => Ok(pair),
        Err(Error::DidNotConverge { last, .. }) => Ok(*last),
        Err(e) => Err(e),
    }
}

/// Smallest lambda at which the penalty is feasible (c = 1).
fn lambda_floor(p: usize) -> f64 {
    1.0 / (p as f64).sqrt()
}

enum Side {
    U,
    V,
}

/// Tunes the penalties so each canonical vector has approximately the
/// requested number of nonzero entries.
///
/// Bisects lambda_u first (with the v penalty slack), then lambda_v, and
/// re-tunes lambda_u once if its support drifted out of the +-20% target
/// band. A bracket that collapses while straddling the band resolves to
/// the sparser side, which keeps the hard cap of 1.2 * target nonzeros; a
/// target that is unreachable even with slack constraints is an error.
pub fn tune_to_target_support(
    data: &DataMatrixPair,
    target_nnz_u: usize,
    target_nnz_v: usize,
    cfg: &SolverConfig,
) -> Result<(CanonicalPair, PenaltyParams)> {
    let (p_x, p_y) = (data.p_x(), data.p_y());
    for (target, p) in [(target_nnz_u, p_x), (target_nnz_v, p_y)] {
        if target == 0 || target > p {
            return Err(Error::InvalidConfig(format!(
                "target support {target} must lie in [1, {p}]"
            )));
        }
    }
    let m = cross_product(data);

    let mut lambda_u = bisect_support(&m, Side::U, 1.0, target_nnz_u, p_x, p_y, cfg)?;
    let lambda_v = bisect_support(&m, Side::V, lambda_u, target_nnz_v, p_x, p_y, cfg)?;
    let mut sol = solve_cross(
        &m,
        (lambda_u * (p_x as f64).sqrt()).max(1.0),
        (lambda_v * (p_y as f64).sqrt()).max(1.0),
        cfg,
    );
    let (lo_u, hi_u) = band(target_nnz_u);
    let nnz_u = sol.u.iter().filter(|&&x| x != 0.0).count();
    if nnz_u < lo_u || nnz_u > hi_u {
        lambda_u = bisect_support_fixed_v(&m, lambda_v, target_nnz_u, p_x, p_y, cfg)?;
        sol = solve_cross(
            &m,
            (lambda_u * (p_x as f64).sqrt()).max(1.0),
            (lambda_v * (p_y as f64).sqrt()).max(1.0),
            cfg,
        );
    }
    let objective = *sol.trace.last().unwrap_or(&0.0);
    let pair = CanonicalPair::new(sol.u, sol.v, objective);
    let params = PenaltyParams::new(lambda_u, lambda_v)?;
    Ok((pair, params))
}

fn band(target: usize) -> (usize, usize) {
    let lo = ((0.8 * target as f64).ceil() as usize).max(1);
    let hi = (1.2 * target as f64).floor() as usize;
    (lo, hi.max(lo))
}

fn bisect_support(
    m: &Array2<f64>,
    side: Side,
    other_lambda: f64,
    target: usize,
    p_x: usize,
    p_y: usize,
    cfg: &SolverConfig,
) -> Result<f64> {
    let p = match side {
        Side::U => p_x,
        Side::V => p_y,
    };
    let eval = |lambda: f64| -> usize {
        let (c1, c2) = match side {
            Side::U => (
                (lambda * (p_x as f64).sqrt()).max(1.0),
                (other_lambda * (p_y as f64).sqrt()).max(1.0),
            ),
            Side::V => (
                (other_lambda * (p_x as f64).sqrt()).max(1.0),
                (lambda * (p_y as f64).sqrt()).max(1.0),
            ),
        };
        let sol = solve_cross(m, c1, c2, cfg);
        let w = match side {
            Side::U => &sol.u,
            Side::V => &sol.v,
        };
        w.iter().filter(|&&x| x != 0.0).count()
    };
    bisect_common(eval, target, p)
}

fn bisect_support_fixed_v(
    m: &Array2<f64>,
    lambda_v: f64,
    target: usize,
    p_x: usize,
    p_y: usize,
    cfg: &SolverConfig,
) -> Result<f64> {
    let eval = |lambda: f64| -> usize {
        let sol = solve_cross(
            m,
            (lambda * (p_x as f64).sqrt()).max(1.0),
            (lambda_v * (p_y as f64).sqrt()).max(1.0),
            cfg,
        );
        sol.u.iter().filter(|&&x| x != 0.0).count()
    };
    bisect_common(eval, target, p_x)
}

fn bisect_common(eval: impl Fn(f64) -> usize, target: usize, p: usize) -> Result<f64> {
    let (band_lo, band_hi) = band(target);
    let mut hi = 1.0_f64;
    let nnz_hi = eval(hi);
    if nnz_hi < band_lo {
        return Err(Error::TargetUnreachable {
            target,
            achieved: nnz_hi,
        });
    }
    if nnz_hi <= band_hi {
        return Ok(hi);
    }
    let mut lo = lambda_floor(p);
    let nnz_lo = eval(lo);
    if nnz_lo >= band_lo && nnz_lo <= band_hi {
        return Ok(lo);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let nnz = eval(mid);
        if nnz >= band_lo && nnz <= band_hi {
            return Ok(mid);
        }
        if nnz > band_hi {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-4 {
            break;
        }
    }
    // straddled band: prefer the sparser side (hard cap over band floor)
    Ok(lo)
}

/// Ten equispaced lambdas between 0.1 and 0.7, the conventional default
/// grid for the permutation and cross-validation selectors.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..10).map(|i| 0.1 + i as f64 * (0.6 / 9.0)).collect()
}

fn clamp_lambda(lambda: f64, p_x: usize, p_y: usize) -> f64 {
    lambda.max(lambda_floor(p_x)).max(lambda_floor(p_y)).min(1.0)
}

/// Sample Pearson correlation; 0 when either input has no variance.
pub fn pearson(a: &ArrayView1<f64>, b: &ArrayView1<f64>) -> f64 {
    let n = a.len() as f64;
    let ma = a.sum() / n;
    let mb = b.sum() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va <= 0.0 || vb <= 0.0 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}

fn fisher_z(r: f64) -> f64 {
    let clamped = r.clamp(-(1.0 - 1e-12), 1.0 - 1e-12);
    clamped.atanh()
}

/// Selects a common lambda for both penalties by the permutation method:
/// the winner maximizes the gap between the Fisher-transformed canonical
/// correlation on the original data and its mean over datasets with the
/// rows of Y permuted.
///
/// Grid values below the feasibility floor 1/sqrt(p) evaluate at the
/// floor. Permutations are drawn from the solver config seed.
pub fn permutation_select_lambda(
    data: &DataMatrixPair,
    grid: &[f64],
    n_perms: usize,
    cfg: &SolverConfig,
) -> Result<PenaltyParams> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if n_perms == 0 {
        return Err(Error::InvalidConfig("n_perms must be >= 1".into()));
    }
    let (p_x, p_y) = (data.p_x(), data.p_y());
    let n = data.n();
    let m0 = cross_product(data);

    let score = |m: &Array2<f64>, x: &Array2<f64>, y: &Array2<f64>, lambda: f64| -> f64 {
        let le = clamp_lambda(lambda, p_x, p_y);
        let sol = solve_cross(
            m,
            (le * (p_x as f64).sqrt()).max(1.0),
            (le * (p_y as f64).sqrt()).max(1.0),
            cfg,
        );
        let xu = x.dot(&sol.u);
        let yv = y.dot(&sol.v);
        fisher_z(pearson(&xu.view(), &yv.view()))
    };

    let z_orig: Vec<f64> = grid
        .iter()
        .map(|&l| score(&m0, data.x(), data.y(), l))
        .collect();
    let mut z_perm_sum = vec![0.0_f64; grid.len()];
    for b in 0..n_perms {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.rng_seed, b as u64));
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let y_perm = data.y().select(Axis(0), &perm);
        let m_b = data.x().t().dot(&y_perm) / n as f64;
        for (i, &l) in grid.iter().enumerate() {
            z_perm_sum[i] += score(&m_b, data.x(), &y_perm, l);
        }
    }
    let mut best = 0;
    let mut best_gap = f64::NEG_INFINITY;
    for i in 0..grid.len() {
        let gap = z_orig[i] - z_perm_sum[i] / n_perms as f64;
        if gap > best_gap {
            best_gap = gap;
            best = i;
        }
    }
    PenaltyParams::new(grid[best], grid[best])
}

/// Selects a common lambda by k-fold cross-validation, maximizing the mean
/// held-out correlation of the canonical variates. Folds are contiguous
/// blocks of a seeded row shuffle.
pub fn cv_select_lambda(
    data: &DataMatrixPair,
    grid: &[f64],
    k_folds: usize,
    cfg: &SolverConfig,
) -> Result<PenaltyParams> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if k_folds < 2 {
        return Err(Error::InvalidConfig("k_folds must be >= 2".into()));
    }
    let n = data.n();
    let (p_x, p_y) = (data.p_x(), data.p_y());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let base = n / k_folds;
    let extra = n % k_folds;
    let mut folds: Vec<Vec<usize>> = Vec::with_capacity(k_folds);
    let mut start = 0;
    for f in 0..k_folds {
        let len = base + usize::from(f < extra);
        folds.push(order[start..start + len].to_vec());
        start += len;
    }
    for fold in &folds {
        if fold.len() < 3 {
            return Err(Error::FoldTooSmall(fold.len()));
        }
    }

    let mut sums = vec![0.0_f64; grid.len()];
    for fold in &folds {
        let test: Vec<usize> = fold.clone();
        let train: Vec<usize> = order
            .iter()
            .copied()
            .filter(|i| !test.contains(i))
            .collect();
        let train_pair = data.select_rows(&train);
        let m_train = cross_product(&train_pair);
        let x_test = data.x().select(Axis(0), &test);
        let y_test = data.y().select(Axis(0), &test);
        for (i, &l) in grid.iter().enumerate() {
            let le = clamp_lambda(l, p_x, p_y);
            let sol = solve_cross(
                &m_train,
                (le * (p_x as f64).sqrt()).max(1.0),
                (le * (p_y as f64).sqrt()).max(1.0),
                cfg,
            );
            let xu = x_test.dot(&sol.u);
            let yv = y_test.dot(&sol.v);
            sums[i] += pearson(&xu.view(), &yv.view());
        }
    }
    let mut best = 0;
    for i in 1..grid.len() {
        if sums[i] > sums[best] {
            best = i;
        }
    }
    PenaltyParams::new(grid[best], grid[best])
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian_matrix(n: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, p), |_| rng.sample(StandardNormal))
    }

    #[test]
    fn soft_threshold_componentwise() {
        let w = ndarray::array![3.0, -1.0, 0.5];
        let out = soft_threshold(&w.view(), 1.0);
        assert_eq!(out, ndarray::array![2.0, 0.0, 0.0]);
    }

    #[test]
    fn soft_threshold_zero_delta_is_identity() {
        let w = ndarray::array![0.3, -2.0, 0.0, 7.5];
        assert_eq!(soft_threshold(&w.view(), 0.0), w);
    }

    #[test]
    fn soft_threshold_full_shrinkage() {
        let w = ndarray::array![0.3, -2.0, 1.4];
        let out = soft_threshold(&w.view(), 2.0);
        assert!(out.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn classical_cca_perfect_dependence() {
        let x = gaussian_matrix(50, 2, 7);
        let data = DataMatrixPair::new(x.clone(), x).unwrap();
        let pair = classical_cca(&data).unwrap();
        assert!((pair.objective - 1.0).abs() < 1e-10, "rho = {}", pair.objective);
    }

    #[test]
    fn classical_cca_independent_noise_is_small() {
        let x = gaussian_matrix(10_000, 2, 11);
        let y = gaussian_matrix(10_000, 2, 12);
        let data = DataMatrixPair::new(x, y).unwrap();
        let pair = classical_cca(&data).unwrap();
        // permutation-null quantiles for n = 10000 sit far below 0.1
        assert!(pair.objective < 0.1, "rho = {}", pair.objective);
    }

    #[test]
    fn classical_cca_rejects_degenerate_dims() {
        let x = gaussian_matrix(5, 6, 1);
        let y = gaussian_matrix(5, 2, 2);
        let data = DataMatrixPair::new(x, y).unwrap();
        match classical_cca(&data) {
            Err(Error::DimensionTooHigh { n: 5, p: 6 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn penalized_rejects_infeasible_lambda() {
        let x = gaussian_matrix(40, 100, 3);
        let y = gaussian_matrix(40, 100, 4);
        let data = DataMatrixPair::new(x, y).unwrap().standardized().unwrap();
        let params = PenaltyParams::new(0.01, 0.01).unwrap();
        match l1_penalized_cca(&data, &params, &SolverConfig::default()) {
            Err(Error::InfeasiblePenalty { .. }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn penalized_constraints_hold_and_objective_monotone() {
        let x = gaussian_matrix(60, 12, 21);
        let y = gaussian_matrix(60, 9, 22);
        let data = DataMatrixPair::new(x, y).unwrap().standardized().unwrap();
        let params = PenaltyParams::new(0.45, 0.5).unwrap();
        let (pair, trace) =
            l1_penalized_cca_with_trace(&data, &params, &SolverConfig::default()).unwrap();
        let c1 = params.c1(12);
        let c2 = params.c2(9);
        let l1_u: f64 = pair.u.iter().map(|x| x.abs()).sum();
        let l1_v: f64 = pair.v.iter().map(|x| x.abs()).sum();
        assert!(pair.u.dot(&pair.u).sqrt() <= 1.0 + 1e-8);
        assert!(pair.v.dot(&pair.v).sqrt() <= 1.0 + 1e-8);
        assert!(l1_u <= c1 + 1e-6, "l1_u = {l1_u}, c1 = {c1}");
        assert!(l1_v <= c2 + 1e-6, "l1_v = {l1_v}, c2 = {c2}");
        for w in trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-10, "objective decreased: {w:?}");
        }
    }

    #[test]
    fn penalized_duplicate_columns_pair_up() {
        let x = gaussian_matrix(200, 2, 31);
        let data = DataMatrixPair::new(x.clone(), x).unwrap();
        // 1-sparse on both sides
        let p = data.p_x();
        let lambda = 1.0 / (p as f64).sqrt();
        let params = PenaltyParams::new(lambda, lambda).unwrap();
        let pair = pair_or_last_iterate(l1_penalized_cca(&data, &params, &SolverConfig::default()))
            .unwrap();
        assert_eq!(pair.support_u().len(), 1);
        assert_eq!(pair.support_u(), pair.support_v());
        let col = pair.support_u()[0];
        let col_var = data.x().column(col).dot(&data.x().column(col)) / data.n() as f64;
        assert!(
            (pair.objective - col_var).abs() < 0.1,
            "objective {} vs column variance {}",
            pair.objective,
            col_var
        );
    }

    #[test]
    fn slack_constraints_match_classical_direction() {
        // with slack l1 budgets and n > p_x + p_y, the penalized solution
        // spans the same direction as the unpenalized rank-1 maximizer
        let x = gaussian_matrix(300, 4, 41);
        let y = gaussian_matrix(300, 3, 42);
        let data = DataMatrixPair::new(x, y).unwrap().standardized().unwrap();
        let params = PenaltyParams::new(1.0, 1.0).unwrap();
        let pair =
            pair_or_last_iterate(l1_penalized_cca(&data, &params, &SolverConfig::default()))
                .unwrap();
        let m = data.x().t().dot(data.y()) / data.n() as f64;
        let (_, _, v_svd) = linalg::svd_small(&m.view());
        let cos = pair.v.dot(&v_svd.column(0)).abs() / pair.v.dot(&pair.v).sqrt();
        assert!(cos > 1.0 - 1e-6, "cos = {cos}");
    }

    #[test]
    fn tune_reaches_target_band() {
        let x = gaussian_matrix(120, 200, 51);
        let y = gaussian_matrix(120, 200, 52);
        let data = DataMatrixPair::new(x, y).unwrap().standardized().unwrap();
        let (pair, _) = tune_to_target_support(&data, 40, 40, &SolverConfig::default()).unwrap();
        let su = pair.support_u().len();
        let sv = pair.support_v().len();
        assert!((32..=48).contains(&su), "support_u = {su}");
        assert!((32..=48).contains(&sv), "support_v = {sv}");
    }

    #[test]
    fn tune_with_target_p_allows_dense() {
        let x = gaussian_matrix(100, 12, 61);
        let y = gaussian_matrix(100, 10, 62);
        let data = DataMatrixPair::new(x, y).unwrap().standardized().unwrap();
        let (pair, _) = tune_to_target_support(&data, 12, 10, &SolverConfig::default()).unwrap();
        assert!(pair.support_u().len() <= 12);
        assert!(pair.support_v().len() <= 10);
        assert!(pair.support_u().len() >= 10); // 0.8 * 12 rounded up
    }

    #[test]
    fn permutation_single_element_grid() {
        let x = gaussian_matrix(50, 6, 71);
        let y = gaussian_matrix(50, 6, 72);
        let data = DataMatrixPair::new(x, y).unwrap().standardized().unwrap();
        let params =
            permutation_select_lambda(&data, &[0.42], 5, &SolverConfig::default()).unwrap();
        assert_eq!(params.lambda_u, 0.42);
        assert_eq!(params.lambda_v, 0.42);
    }

    #[test]
    fn permutation_empty_grid_errors() {
        let x = gaussian_matrix(30, 4, 81);
        let y = gaussian_matrix(30, 4, 82);
        let data = DataMatrixPair::new(x, y).unwrap();
        match permutation_select_lambda(&data, &[], 5, &SolverConfig::default()) {
            Err(Error::EmptyGrid) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn default_grid_is_ten_values_from_0_1_to_0_7() {
        let grid = default_lambda_grid();
        assert_eq!(grid.len(), 10);
        assert!((grid[0] - 0.1).abs() < 1e-12);
        assert!((grid[9] - 0.7).abs() < 1e-12);
        let step = grid[1] - grid[0];
        for w in grid.windows(2) {
            assert!((w[1] - w[0] - step).abs() < 1e-12);
        }
    }

    #[test]
    fn cv_single_element_grid() {
        let x = gaussian_matrix(60, 5, 91);
        let y = gaussian_matrix(60, 5, 92);
        let data = DataMatrixPair::new(x, y).unwrap().standardized().unwrap();
        let params = cv_select_lambda(&data, &[0.3], 5, &SolverConfig::default()).unwrap();
        assert_eq!(params.lambda_u, 0.3);
    }

    #[test]
    fn cv_fold_too_small_errors() {
        let x = gaussian_matrix(8, 3, 93);
        let y = gaussian_matrix(8, 3, 94);
        let data = DataMatrixPair::new(x, y).unwrap();
        match cv_select_lambda(&data, &[0.3, 0.5], 4, &SolverConfig::default()) {
            Err(Error::FoldTooSmall(2)) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn cv_prefers_signal_over_extreme_sparsity() {
        // inject a strong shared factor into the first columns; held-out
        // correlation should favor a lambda dense enough to use it
        let n = 150;
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let z: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut x = gaussian_matrix(n, 8, 102);
        let mut y = gaussian_matrix(n, 8, 103);
        for i in 0..n {
            for j in 0..2 {
                x[[i, j]] = 0.3 * x[[i, j]] + 0.9 * z[i];
                y[[i, j]] = 0.3 * y[[i, j]] + 0.9 * z[i];
            }
        }
        let data = DataMatrixPair::new(x, y).unwrap().standardized().unwrap();
        let grid = default_lambda_grid();
        let cfg = SolverConfig::default();
        let params = cv_select_lambda(&data, &grid, 5, &cfg).unwrap();
        // evaluate the held-out correlation of the pick vs the sparsest grid point
        let held_out = |lambda: f64| -> f64 {
            let folds = 5;
            let mut order: Vec<usize> = (0..n).collect();
            let mut r = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
            order.shuffle(&mut r);
            let mut total = 0.0;
            for f in 0..folds {
                let test: Vec<usize> =
                    order.iter().copied().skip(f * n / folds).take(n / folds).collect();
                let train: Vec<usize> =
                    order.iter().copied().filter(|i| !test.contains(i)).collect();
                let tp = data.select_rows(&train);
                let pp = PenaltyParams::new(lambda, lambda).unwrap();
                let pair = pair_or_last_iterate(l1_penalized_cca(&tp, &pp, &cfg)).unwrap();
                let xt = data.x().select(Axis(0), &test);
                let yt = data.y().select(Axis(0), &test);
                total += pearson(&xt.dot(&pair.u).view(), &yt.dot(&pair.v).view());
            }
            total / folds as f64
        };
        let feasible_floor = 1.0 / (8.0_f64).sqrt();
        assert!(held_out(params.lambda_u) >= held_out(feasible_floor) - 1e-9);
    }
}
