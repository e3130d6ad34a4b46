//! Domain types shared by the solver, the testing pipeline, and the
//! simulation harness, plus column standardization.

use ndarray::{Array1, Array2, ArrayView2, Axis, s};

use crate::error::{Error, Result};
use crate::linalg;

/// Two row-aligned observation matrices over the same samples.
///
/// `x` is n x p_x and `y` is n x p_y; constructors reject mismatched row
/// counts, empty feature sets, and non-finite entries.
#[derive(Debug, Clone)]
pub struct DataMatrixPair {
    x: Array2<f64>,
    y: Array2<f64>,
}

impl DataMatrixPair {
    pub fn new(x: Array2<f64>, y: Array2<f64>) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                got: y.nrows(),
            });
        }
        if x.nrows() < 2 {
            return Err(Error::TooFewRows {
                got: x.nrows(),
                need: 2,
            });
        }
        if x.ncols() == 0 || y.ncols() == 0 {
            return Err(Error::InvalidConfig(
                "both matrices need at least one column".into(),
            ));
        }
        for (m, name_cols) in [(&x, 0usize), (&y, x.ncols())] {
            let _ = name_cols;
            for ((i, j), value) in m.indexed_iter() {
                if !value.is_finite() {
                    return Err(Error::NonFiniteValue { row: i, col: j });
                }
            }
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array2<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p_x(&self) -> usize {
        self.x.ncols()
    }

    pub fn p_y(&self) -> usize {
        self.y.ncols()
    }

    /// New pair holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            x: self.x.select(Axis(0), rows),
            y: self.y.select(Axis(0), rows),
        }
    }

    /// Pair with both matrices column-standardized (mean 0, sd 1).
    pub fn standardized(&self) -> Result<Self> {
        Ok(Self {
            x: standardize_columns(&self.x.view())?,
            y: standardize_columns(&self.y.view())?,
        })
    }
}

/// Subtracts the column means.
pub(crate) fn center_columns(m: &ArrayView2<f64>) -> Array2<f64> {
    let n = m.nrows() as f64;
    let mut out = m.to_owned();
    for j in 0..m.ncols() {
        let mut col = out.slice_mut(s![.., j]);
        let mean = col.sum() / n;
        col.mapv_inplace(|v| v - mean);
    }
    out
}

/// Centers every column to sample mean 0 and scales to sample standard
/// deviation 1 (divisor n - 1). Constant columns are rejected.
pub fn standardize_columns(m: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = m.nrows();
    if n < 2 {
        return Err(Error::TooFewRows { got: n, need: 2 });
    }
    let mut out = m.to_owned();
    for j in 0..m.ncols() {
        let mut col = out.slice_mut(s![.., j]);
        let mean = col.sum() / n as f64;
        col.mapv_inplace(|v| v - mean);
        let var = col.dot(&col) / (n as f64 - 1.0);
        if var <= 0.0 {
            return Err(Error::ConstantColumn(j));
        }
        let sd = var.sqrt();
        col.mapv_inplace(|v| v / sd);
    }
    Ok(out)
}

/// Joint covariance model with blocks sigma_x (p_x x p_x), sigma_y
/// (p_y x p_y), and the cross block sigma_xy (p_x x p_y).
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    pub sigma_x: Array2<f64>,
    pub sigma_y: Array2<f64>,
    pub sigma_xy: Array2<f64>,
}

impl CovarianceModel {
    /// Builds the model, checking block shapes and symmetry (1e-12).
    pub fn new(sigma_x: Array2<f64>, sigma_y: Array2<f64>, sigma_xy: Array2<f64>) -> Result<Self> {
        if !linalg::is_symmetric(&sigma_x.view(), 1e-12) {
            return Err(Error::AsymmetricBlock("sigma_x"));
        }
        if !linalg::is_symmetric(&sigma_y.view(), 1e-12) {
            return Err(Error::AsymmetricBlock("sigma_y"));
        }
        if sigma_xy.nrows() != sigma_x.nrows() {
            return Err(Error::DimensionMismatch {
                expected: sigma_x.nrows(),
                got: sigma_xy.nrows(),
            });
        }
        if sigma_xy.ncols() != sigma_y.nrows() {
            return Err(Error::DimensionMismatch {
                expected: sigma_y.nrows(),
                got: sigma_xy.ncols(),
            });
        }
        Ok(Self {
            sigma_x,
            sigma_y,
            sigma_xy,
        })
    }

    pub fn p_x(&self) -> usize {
        self.sigma_x.nrows()
    }

    pub fn p_y(&self) -> usize {
        self.sigma_y.nrows()
    }

    /// Assembles the (p_x + p_y) x (p_x + p_y) block matrix
    /// [[sigma_x, sigma_xy], [sigma_xy', sigma_y]].
    pub fn joint(&self) -> Array2<f64> {
        let px = self.p_x();
        let py = self.p_y();
        let mut j = Array2::<f64>::zeros((px + py, px + py));
        j.slice_mut(s![..px, ..px]).assign(&self.sigma_x);
        j.slice_mut(s![px.., px..]).assign(&self.sigma_y);
        j.slice_mut(s![..px, px..]).assign(&self.sigma_xy);
        j.slice_mut(s![px.., ..px]).assign(&self.sigma_xy.t());
        j
    }

    /// Model restricted to the given feature subsets.
    pub fn restrict(&self, idx_x: &[usize], idx_y: &[usize]) -> Self {
        let sigma_x = select_square(&self.sigma_x, idx_x);
        let sigma_y = select_square(&self.sigma_y, idx_y);
        let mut sigma_xy = Array2::<f64>::zeros((idx_x.len(), idx_y.len()));
        for (a, &i) in idx_x.iter().enumerate() {
            for (b, &j) in idx_y.iter().enumerate() {
                sigma_xy[[a, b]] = self.sigma_xy[[i, j]];
            }
        }
        Self {
            sigma_x,
            sigma_y,
            sigma_xy,
        }
    }

    /// Same model with the roles of X and Y exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            sigma_x: self.sigma_y.clone(),
            sigma_y: self.sigma_x.clone(),
            sigma_xy: self.sigma_xy.t().to_owned(),
        }
    }
}

fn select_square(m: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    let k = idx.len();
    let mut out = Array2::<f64>::zeros((k, k));
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            out[[a, b]] = m[[i, j]];
        }
    }
    out
}

/// Checks that the joint covariance is a valid model: symmetric blocks and
/// a positive-definite joint matrix (Cholesky factorization succeeds).
pub fn validate_model(model: &CovarianceModel) -> Result<()> {
    if !linalg::is_symmetric(&model.sigma_x.view(), 1e-12) {
        return Err(Error::AsymmetricBlock("sigma_x"));
    }
    if !linalg::is_symmetric(&model.sigma_y.view(), 1e-12) {
        return Err(Error::AsymmetricBlock("sigma_y"));
    }
    linalg::cholesky(&model.joint().view()).map(|_| ())
}

/// A pair of canonical vectors together with the objective value achieved
/// on the data they were fitted to.
///
/// Support sets are derived from the stored coefficients, so they always
/// match the exact-zero pattern: the solvers write literal zeros.
#[derive(Debug, Clone)]
pub struct CanonicalPair {
    pub u: Array1<f64>,
    pub v: Array1<f64>,
    pub objective: f64,
}

impl CanonicalPair {
    pub fn new(u: Array1<f64>, v: Array1<f64>, objective: f64) -> Self {
        Self { u, v, objective }
    }

    pub fn support_u(&self) -> Vec<usize> {
        support_of(&self.u)
    }

    pub fn support_v(&self) -> Vec<usize> {
        support_of(&self.v)
    }
}

fn support_of(w: &Array1<f64>) -> Vec<usize> {
    w.iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// Row indices of the three disjoint subsets used by the testing pipeline,
/// plus the seed that generated them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub part0: Vec<usize>,
    pub part1: Vec<usize>,
    pub part2: Vec<usize>,
    pub seed: u64,
}

impl SplitIndices {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.part0.len(), self.part1.len(), self.part2.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn standardize_symmetric_column() {
        let m = array![[1.0], [2.0], [3.0]];
        let out = standardize_columns(&m.view()).unwrap();
        assert!((out[[0, 0]] + 1.0).abs() < 1e-12);
        assert!(out[[1, 0]].abs() < 1e-12);
        assert!((out[[2, 0]] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn standardize_is_idempotent() {
        let m = array![
            [0.3, -1.2, 4.0],
            [1.9, 0.4, -2.2],
            [-0.6, 2.8, 0.9],
            [2.4, -0.5, 1.3]
        ];
        let once = standardize_columns(&m.view()).unwrap();
        let twice = standardize_columns(&once.view()).unwrap();
        for (a, b) in once.iter().zip(twice.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        // and each column really is mean 0, sd 1
        for j in 0..3 {
            let col = once.column(j);
            let mean = col.sum() / 4.0;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 3.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn standardize_rejects_constant_column() {
        let m = array![[0.0, 1.0], [0.0, 2.0], [0.0, 3.0]];
        match standardize_columns(&m.view()) {
            Err(Error::ConstantColumn(0)) => {}
            other => panic!("expected ConstantColumn(0), got {other:?}"),
        }
    }

    #[test]
    fn identity_blocks_validate() {
        let model = CovarianceModel::new(
            Array2::eye(3),
            Array2::eye(2),
            Array2::zeros((3, 2)),
        )
        .unwrap();
        validate_model(&model).unwrap();
        assert_eq!(model.joint().dim(), (5, 5));
    }

    #[test]
    fn unit_cross_block_is_not_positive_definite() {
        // All-ones cross-covariance with unit diagonals makes [X Y]
        // perfectly collinear; an eigendecomposition oracle puts an
        // eigenvalue at 1 - p <= 0, so Cholesky must fail.
        let model = CovarianceModel::new(
            Array2::eye(2),
            Array2::eye(2),
            Array2::from_elem((2, 2), 1.0),
        )
        .unwrap();
        match validate_model(&model) {
            Err(Error::NotPositiveDefinite(_)) => {}
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn support_tracks_exact_zeros() {
        let pair = CanonicalPair::new(array![0.0, 1.5, 0.0, -0.2], array![0.0, 0.0, 3.0], 0.4);
        assert_eq!(pair.support_u(), vec![1, 3]);
        assert_eq!(pair.support_v(), vec![2]);
    }

    #[test]
    fn pair_rejects_row_mismatch() {
        let x = Array2::<f64>::zeros((4, 2));
        let y = Array2::<f64>::zeros((5, 2));
        assert!(DataMatrixPair::new(x, y).is_err());
    }

    #[test]
    fn pair_rejects_non_finite() {
        let mut x = Array2::<f64>::zeros((3, 2));
        x[[1, 1]] = f64::NAN;
        let y = Array2::<f64>::zeros((3, 2));
        match DataMatrixPair::new(x, y) {
            Err(Error::NonFiniteValue { row: 1, col: 1 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }
}
