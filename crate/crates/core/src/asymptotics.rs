//! Asymptotic null distribution of the cross-covariance statistic X'Yv:
//! its mean and covariance under the joint Gaussian model, the
//! standardized test statistic built from them, two-sided normal
//! p-values, and a Wishart trace-covariance identity usable as a
//! Monte-Carlo oracle.

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::seed::mix_seed;
use crate::types::CovarianceModel;

/// Gaussian limit of sqrt(n) ((1/n) X'Y v - mu): mean vector, diagonal of
/// the covariance, optionally the full covariance, and the sample count
/// the sqrt(n) scaling refers to.
#[derive(Debug, Clone)]
pub struct NullDistribution {
    pub mu: Array1<f64>,
    pub omega_diag: Array1<f64>,
    pub omega: Option<Array2<f64>>,
    pub n_eff: usize,
}

impl NullDistribution {
    /// Builds the limit law for a fixed projection vector v, keeping only
    /// the covariance diagonal.
    pub fn from_model(model: &CovarianceModel, v: &Array1<f64>, n_eff: usize) -> Result<Self> {
        let mu = asymptotic_mean(model, v)?;
        let quad = v.dot(&model.sigma_y.dot(v));
        let omega_diag = Array1::from_shape_fn(model.p_x(), |i| {
            mu[i] * mu[i] + model.sigma_x[[i, i]] * quad
        });
        Ok(Self {
            mu,
            omega_diag,
            omega: None,
            n_eff,
        })
    }
}

/// Mean of (1/n) X'Y v: entry i is sum_j v_j rho_xy[i, j], i.e. sigma_xy v.
pub fn asymptotic_mean(model: &CovarianceModel, v: &Array1<f64>) -> Result<Array1<f64>> {
    if v.len() != model.p_y() {
        return Err(Error::DimensionMismatch {
            expected: model.p_y(),
            got: v.len(),
        });
    }
    Ok(model.sigma_xy.dot(v))
}

/// Covariance of the Gaussian limit: omega_ij = mu_i mu_j +
/// rho_x[i, j] * v' sigma_y v, i.e. mu mu' + (v' sigma_y v) sigma_x.
pub fn asymptotic_covariance(model: &CovarianceModel, v: &Array1<f64>) -> Result<Array2<f64>> {
    let mu = asymptotic_mean(model, v)?;
    let quad = v.dot(&model.sigma_y.dot(v));
    let p = model.p_x();
    let mut omega = Array2::<f64>::zeros((p, p));
    for i in 0..p {
        for j in 0..p {
            omega[[i, j]] = mu[i] * mu[j] + model.sigma_x[[i, j]] * quad;
        }
    }
    Ok(omega)
}

/// Standardized entries of xi = X'Y v0 under the null, with the plug-in
/// variance omega_ii evaluated at (v0, model): z_i = xi_i /
/// (sqrt(n) sqrt(omega_ii)), n being the row count of the inputs.
///
/// Inputs are expected already column-restricted to the supports in play;
/// the symmetric statistic for the other canonical vector is obtained by
/// swapping the roles of the two matrices and passing the swapped model.
pub fn null_zscores(
    x2: &ArrayView2<f64>,
    y2: &ArrayView2<f64>,
    v0: &Array1<f64>,
    model_hat: &CovarianceModel,
) -> Result<Array1<f64>> {
    if x2.nrows() != y2.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x2.nrows(),
            got: y2.nrows(),
        });
    }
    if x2.ncols() != model_hat.p_x() {
        return Err(Error::DimensionMismatch {
            expected: model_hat.p_x(),
            got: x2.ncols(),
        });
    }
    if y2.ncols() != v0.len() {
        return Err(Error::DimensionMismatch {
            expected: y2.ncols(),
            got: v0.len(),
        });
    }
    let n_eff = x2.nrows();
    let dist = NullDistribution::from_model(model_hat, v0, n_eff)?;
    let xi = x2.t().dot(&y2.dot(v0));
    let scale = (n_eff as f64).sqrt();
    let mut z = Array1::<f64>::zeros(xi.len());
    for i in 0..xi.len() {
        let omega_ii = dist.omega_diag[i];
        if omega_ii <= 0.0 {
            // a zero statistic with zero variance is the trivial all-null
            // case (v0 = 0); anything else is a degenerate estimate
            if xi[i] == 0.0 {
                continue;
            }
            return Err(Error::NonPositiveVariance(i));
        }
        z[i] = xi[i] / (scale * omega_ii.sqrt());
    }
    Ok(z)
}

/// Two-sided standard-normal p-values: p_i = 2 (1 - Phi(|z_i|)),
/// evaluated through the complementary error function.
pub fn two_sided_pvalues(z: &Array1<f64>) -> Array1<f64> {
    z.mapv(|zi| libm::erfc(zi.abs() / std::f64::consts::SQRT_2))
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Compares the closed-form covariance of Wishart trace functionals,
/// cov(tr(AS), tr(BS)) = 2n tr(A Sigma B Sigma), against its Monte-Carlo
/// estimate over `reps` draws of S = Z'Z with the n rows of Z drawn from
/// N(0, Sigma). Returns (analytic, empirical).
pub fn wishart_trace_cov_oracle(
    a: &ArrayView2<f64>,
    b: &ArrayView2<f64>,
    model: &CovarianceModel,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    wishart_trace_cov_detail(a, b, model, n, reps, seed).map(|d| (d.analytic, d.empirical))
}

/// Detailed result of the trace-covariance comparison.
#[derive(Debug, Clone, Copy)]
pub struct TraceCovComparison {
    pub analytic: f64,
    pub empirical: f64,
    /// Monte-Carlo standard error of the empirical covariance.
    pub std_error: f64,
}

pub fn wishart_trace_cov_detail(
    a: &ArrayView2<f64>,
    b: &ArrayView2<f64>,
    model: &CovarianceModel,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<TraceCovComparison> {
    let d = model.p_x() + model.p_y();
    if !linalg::is_symmetric(a, 1e-10) || !linalg::is_symmetric(b, 1e-10) {
        return Err(Error::AsymmetricInput);
    }
    for m in [a, b] {
        if m.nrows() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: m.nrows(),
            });
        }
    }
    let sigma = model.joint();
    let chol = linalg::cholesky(&sigma.view())?;

    // analytic: 2n tr(A Sigma B Sigma)
    let asig = a.dot(&sigma);
    let bsig = b.dot(&sigma);
    let mut trace = 0.0;
    for i in 0..d {
        for k in 0..d {
            trace += asig[[i, k]] * bsig[[k, i]];
        }
    }
    let analytic = 2.0 * n as f64 * trace;

    // Monte Carlo: per draw, accumulate z' A z and z' B z over the n rows
    let chunk = 1024usize;
    let n_chunks = reps.div_ceil(chunk);
    let draws: Vec<(f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, c as u64));
            let count = chunk.min(reps - c * chunk);
            let mut out = Vec::with_capacity(count);
            let mut g = Array1::<f64>::zeros(d);
            for _ in 0..count {
                let mut ta = 0.0;
                let mut tb = 0.0;
                for _ in 0..n {
                    for gi in g.iter_mut() {
                        *gi = rng.sample(rand_distr::StandardNormal);
                    }
                    let z = chol.dot(&g);
                    ta += z.dot(&a.dot(&z));
                    tb += z.dot(&b.dot(&z));
                }
                out.push((ta, tb));
            }
            out
        })
        .collect();

    let r = draws.len() as f64;
    let mean_a = draws.iter().map(|d| d.0).sum::<f64>() / r;
    let mean_b = draws.iter().map(|d| d.1).sum::<f64>() / r;
    let products: Vec<f64> = draws
        .iter()
        .map(|d| (d.0 - mean_a) * (d.1 - mean_b))
        .collect();
    let empirical = products.iter().sum::<f64>() / (r - 1.0);
    let mean_p = products.iter().sum::<f64>() / r;
    let var_p = products.iter().map(|p| (p - mean_p) * (p - mean_p)).sum::<f64>() / (r - 1.0);
    let std_error = (var_p / r).sqrt();
    Ok(TraceCovComparison {
        analytic,
        empirical,
        std_error,
    })
}
