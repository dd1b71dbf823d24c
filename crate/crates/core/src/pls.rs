//! NIPALS partial least squares regression and its discriminant-analysis
//! variant (dummy-coded class response).
//!
//! Only the predictor block is deflated. Each component's weight vector is
//! sign-fixed so that its largest-magnitude entry is positive.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{GemError, Result};
use crate::linalg::{dot, norm, Matrix};

/// Columns whose standard deviation falls below this are never scaled.
pub const MIN_SCALE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreprocessOptions {
    pub center: bool,
    pub unit_variance: bool,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            center: true,
            unit_variance: false,
        }
    }
}

/// Column-wise affine preprocessing learned from training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocess {
    pub options: PreprocessOptions,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// Columns left unscaled because their standard deviation is below [`MIN_SCALE`].
    pub flagged: Vec<usize>,
}

impl Preprocess {
    /// Learns parameters from `m` and returns them with the transformed matrix.
    pub fn fit(m: &Matrix, options: PreprocessOptions) -> Result<(Preprocess, Matrix)> {
        let (n, p) = m.shape();
        if n == 0 || p == 0 {
            return Err(GemError::Empty("matrix to preprocess"));
        }
        let mut means = vec![0.0; p];
        let mut scales = vec![1.0; p];
        let mut flagged = Vec::new();
        for j in 0..p {
            let col = m.column(j);
            let constant = col.windows(2).all(|w| w[0] == w[1]);
            let mean = if constant {
                col[0]
            } else {
                col.iter().sum::<f64>() / n as f64
            };
            if options.center {
                means[j] = mean;
            }
            if options.unit_variance {
                let sd = if n < 2 {
                    0.0
                } else {
                    libm::sqrt(col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64)
                };
                if sd < MIN_SCALE {
                    flagged.push(j);
                } else {
                    scales[j] = sd;
                }
            }
        }
        let pre = Preprocess {
            options,
            means,
            scales,
            flagged,
        };
        let transformed = pre.transform(m)?;
        Ok((pre, transformed))
    }

    pub fn transform(&self, m: &Matrix) -> Result<Matrix> {
        self.check_columns(m)?;
        Ok(Matrix::from_fn(m.nrows(), m.ncols(), |i, j| {
            (m[(i, j)] - self.means[j]) / self.scales[j]
        }))
    }

    pub fn inverse_transform(&self, m: &Matrix) -> Result<Matrix> {
        self.check_columns(m)?;
        Ok(Matrix::from_fn(m.nrows(), m.ncols(), |i, j| {
            m[(i, j)] * self.scales[j] + self.means[j]
        }))
    }

    fn check_columns(&self, m: &Matrix) -> Result<()> {
        if m.ncols() != self.means.len() {
            return Err(GemError::DimensionMismatch {
                context: "columns vs preprocessing parameters",
                expected: self.means.len(),
                found: m.ncols(),
            });
        }
        Ok(())
    }
}

/// Learns column preprocessing for `m`; see [`Preprocess::fit`].
pub fn preprocess_fit(m: &Matrix, options: PreprocessOptions) -> Result<(Preprocess, Matrix)> {
    Preprocess::fit(m, options)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlsOptions {
    pub x: PreprocessOptions,
    pub y: PreprocessOptions,
    /// Relative change in the score vector at which the inner loop stops.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PlsOptions {
    fn default() -> Self {
        Self {
            x: PreprocessOptions::default(),
            y: PreprocessOptions::default(),
            tolerance: 1e-12,
            max_iterations: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseKind {
    Continuous,
    /// One `{0, 1}` response column per class, in this order.
    DummyClass { classes: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComponentDiagnostics {
    pub iterations: usize,
    pub converged: bool,
}

/// A fitted PLS model. Weights, scores and loadings live in the preprocessed space.
#[derive(Debug, Clone, PartialEq)]
pub struct PlsModel {
    weights: Matrix,
    scores: Matrix,
    x_loadings: Matrix,
    y_loadings: Matrix,
    /// `coefficients[a - 1]` maps preprocessed X to preprocessed Y with `a` components.
    coefficients: Vec<Matrix>,
    x_residual: Matrix,
    x_pre: Preprocess,
    y_pre: Preprocess,
    x_total_ss: f64,
    y_total_ss: f64,
    response_kind: ResponseKind,
    diagnostics: Vec<ComponentDiagnostics>,
}

fn rank_bound(n: usize, m: usize) -> usize {
    n.saturating_sub(1).min(m)
}

/// Fits exactly `components` components; fails when the predictors run out of rank.
pub fn fit_pls(x: &Matrix, y: &Matrix, components: usize, options: &PlsOptions) -> Result<PlsModel> {
    let model = fit_pls_up_to(x, y, components, options)?;
    if model.n_components() < components {
        return Err(GemError::ComponentsExceedRank {
            requested: components,
            available: model.n_components(),
        });
    }
    Ok(model)
}

/// Like [`fit_pls`] but stops early, without error, once the deflated
/// predictors are exhausted. The returned model may have fewer components.
pub fn fit_pls_up_to(
    x: &Matrix,
    y: &Matrix,
    components: usize,
    options: &PlsOptions,
) -> Result<PlsModel> {
    nipals(x, y, components, options, ResponseKind::Continuous)
}

/// PLS discriminant analysis: `labels[i]` indexes into `classes`.
pub fn fit_pls_da(
    x: &Matrix,
    labels: &[usize],
    classes: Vec<String>,
    components: usize,
    options: &PlsOptions,
) -> Result<PlsModel> {
    let model = fit_pls_da_up_to(x, labels, classes, components, options)?;
    if model.n_components() < components {
        return Err(GemError::ComponentsExceedRank {
            requested: components,
            available: model.n_components(),
        });
    }
    Ok(model)
}

pub fn fit_pls_da_up_to(
    x: &Matrix,
    labels: &[usize],
    classes: Vec<String>,
    components: usize,
    options: &PlsOptions,
) -> Result<PlsModel> {
    let y = dummy_matrix(labels, classes.len())?;
    nipals(x, &y, components, options, ResponseKind::DummyClass { classes })
}

/// One `{0, 1}` column per class.
pub fn dummy_matrix(labels: &[usize], n_classes: usize) -> Result<Matrix> {
    let mut y = Matrix::zeros(labels.len(), n_classes);
    for (i, &l) in labels.iter().enumerate() {
        if l >= n_classes {
            return Err(GemError::InvalidParameter(alloc::format!(
                "class label {l} out of range for {n_classes} classes"
            )));
        }
        y[(i, l)] = 1.0;
    }
    Ok(y)
}

fn nipals(
    x: &Matrix,
    y: &Matrix,
    components: usize,
    options: &PlsOptions,
    response_kind: ResponseKind,
) -> Result<PlsModel> {
    let (n, m) = x.shape();
    if y.nrows() != n {
        return Err(GemError::DimensionMismatch {
            context: "response rows vs predictor rows",
            expected: n,
            found: y.nrows(),
        });
    }
    let bound = rank_bound(n, m);
    if components > bound {
        return Err(GemError::ComponentsExceedRank {
            requested: components,
            available: bound,
        });
    }
    let (x_pre, mut xa) = Preprocess::fit(x, options.x)?;
    let (y_pre, ys) = Preprocess::fit(y, options.y)?;
    let x_total_ss = sum_sq(&xa);
    let y_total_ss = sum_sq(&ys);
    if x_total_ss == 0.0 {
        return Err(GemError::ZeroPredictors);
    }
    let q = ys.ncols();
    let exhausted = 1e-20 * x_total_ss;

    let mut w_cols: Vec<Vec<f64>> = Vec::with_capacity(components);
    let mut t_cols: Vec<Vec<f64>> = Vec::with_capacity(components);
    let mut p_cols: Vec<Vec<f64>> = Vec::with_capacity(components);
    let mut q_cols: Vec<Vec<f64>> = Vec::with_capacity(components);
    let mut r_cols: Vec<Vec<f64>> = Vec::with_capacity(components);
    let mut diagnostics = Vec::with_capacity(components);

    // Start the inner loop from the response column with the largest sum of squares.
    let start = (0..q)
        .map(|j| (j, ys.column(j).iter().map(|v| v * v).sum::<f64>()))
        .fold((0, -1.0), |best, c| if c.1 > best.1 { c } else { best })
        .0;

    for _ in 0..components {
        if sum_sq(&xa) <= exhausted {
            break;
        }
        let mut u = ys.column(start);
        let mut t_old: Option<Vec<f64>> = None;
        let mut w = Vec::new();
        let mut t = Vec::new();
        let mut diag = ComponentDiagnostics {
            iterations: 0,
            converged: false,
        };
        for it in 1..=options.max_iterations {
            diag.iterations = it;
            w = xa.tr_mul_vec(&u);
            let wn = norm(&w);
            if wn == 0.0 || !wn.is_finite() {
                w.clear();
                break;
            }
            w.iter_mut().for_each(|v| *v /= wn);
            t = xa.mul_vec(&w);
            if q == 1 {
                diag.converged = true;
                break;
            }
            if let Some(prev) = &t_old {
                let change: f64 = libm::sqrt(t.iter().zip(prev).map(|(a, b)| (a - b) * (a - b)).sum());
                if change <= options.tolerance * norm(&t) {
                    diag.converged = true;
                    break;
                }
            }
            let tt = dot(&t, &t);
            let qv: Vec<f64> = ys.tr_mul_vec(&t).into_iter().map(|v| v / tt).collect();
            let qq = dot(&qv, &qv);
            if qq == 0.0 {
                diag.converged = true;
                break;
            }
            u = ys.mul_vec(&qv).into_iter().map(|v| v / qq).collect();
            t_old = Some(t.clone());
        }
        if w.is_empty() {
            // No covariance left between the deflated predictors and the response.
            break;
        }

        let lead = w
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (j, v)| if v.abs() > best.1 { (j, v.abs()) } else { best })
            .0;
        if w[lead] < 0.0 {
            w.iter_mut().for_each(|v| *v = -*v);
            t.iter_mut().for_each(|v| *v = -*v);
        }

        let tt = dot(&t, &t);
        if tt <= exhausted {
            break;
        }
        let p: Vec<f64> = xa.tr_mul_vec(&t).into_iter().map(|v| v / tt).collect();
        let qv: Vec<f64> = ys.tr_mul_vec(&t).into_iter().map(|v| v / tt).collect();
        for (i, &ti) in t.iter().enumerate() {
            for (xij, pj) in xa.row_mut(i).iter_mut().zip(&p) {
                *xij -= ti * pj;
            }
        }

        // r_a = w_a - Σ_{b<a} (p_bᵀ w_a) r_b, so that T = X̃ R.
        let mut r = w.clone();
        for (pb, rb) in p_cols.iter().zip(&r_cols) {
            let c = dot(pb, &w);
            for (ri, rbi) in r.iter_mut().zip(rb) {
                *ri -= c * rbi;
            }
        }

        w_cols.push(w);
        t_cols.push(t);
        p_cols.push(p);
        q_cols.push(qv);
        r_cols.push(r);
        diagnostics.push(diag);
    }

    let a = w_cols.len();
    let mut coefficients = Vec::with_capacity(a);
    let mut b = Matrix::zeros(m, q);
    for (r, qv) in r_cols.iter().zip(&q_cols) {
        for j in 0..m {
            for k in 0..q {
                b[(j, k)] += r[j] * qv[k];
            }
        }
        coefficients.push(b.clone());
    }

    Ok(PlsModel {
        weights: from_columns(m, &w_cols),
        scores: from_columns(n, &t_cols),
        x_loadings: from_columns(m, &p_cols),
        y_loadings: from_columns(q, &q_cols),
        coefficients,
        x_residual: xa,
        x_pre,
        y_pre,
        x_total_ss,
        y_total_ss,
        response_kind,
        diagnostics,
    })
}

fn from_columns(rows: usize, cols: &[Vec<f64>]) -> Matrix {
    Matrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

fn sum_sq(m: &Matrix) -> f64 {
    m.as_slice().iter().map(|v| v * v).sum()
}

/// Predicted responses (original scale) and, for classifiers, class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionResult {
    pub components: usize,
    pub yhat: Matrix,
    pub labels: Option<Vec<usize>>,
}

/// Per-component explained fractions of the preprocessed X and Y sums of squares.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplainedVariance {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x_cumulative: Vec<f64>,
    pub y_cumulative: Vec<f64>,
}

impl PlsModel {
    pub fn n_components(&self) -> usize {
        self.weights.ncols()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn scores(&self) -> &Matrix {
        &self.scores
    }

    pub fn x_loadings(&self) -> &Matrix {
        &self.x_loadings
    }

    pub fn y_loadings(&self) -> &Matrix {
        &self.y_loadings
    }

    /// Predictor block left after deflating all components.
    pub fn x_residual(&self) -> &Matrix {
        &self.x_residual
    }

    pub fn x_preprocess(&self) -> &Preprocess {
        &self.x_pre
    }

    pub fn y_preprocess(&self) -> &Preprocess {
        &self.y_pre
    }

    pub fn response_kind(&self) -> &ResponseKind {
        &self.response_kind
    }

    pub fn diagnostics(&self) -> &[ComponentDiagnostics] {
        &self.diagnostics
    }

    /// Regression coefficients in the preprocessed space for `a` components
    /// (`m × q`); all zeros for `a = 0`.
    pub fn coefficients(&self, a: usize) -> Result<Matrix> {
        self.check_components(a)?;
        Ok(match a {
            0 => Matrix::zeros(self.weights.nrows(), self.y_loadings.nrows()),
            _ => self.coefficients[a - 1].clone(),
        })
    }

    /// Coefficients mapping original-scale X to original-scale Y, `m × q`.
    pub fn original_scale_coefficients(&self, a: usize) -> Result<Matrix> {
        let mut b = self.coefficients(a)?;
        for j in 0..b.nrows() {
            for k in 0..b.ncols() {
                b[(j, k)] *= self.y_pre.scales[k] / self.x_pre.scales[j];
            }
        }
        Ok(b)
    }

    fn check_components(&self, a: usize) -> Result<()> {
        if a > self.n_components() {
            return Err(GemError::ComponentsExceedRank {
                requested: a,
                available: self.n_components(),
            });
        }
        Ok(())
    }

    /// Predicts with the first `a` components.
    pub fn predict(&self, x_new: &Matrix, a: usize) -> Result<PredictionResult> {
        self.check_components(a)?;
        let xt = self.x_pre.transform(x_new)?;
        let yt = match a {
            0 => Matrix::zeros(x_new.nrows(), self.y_loadings.nrows()),
            _ => xt.matmul(&self.coefficients[a - 1])?,
        };
        let yhat = self.y_pre.inverse_transform(&yt)?;
        let labels = match self.response_kind {
            ResponseKind::DummyClass { .. } => Some(argmax_rows(&yhat)),
            ResponseKind::Continuous => None,
        };
        Ok(PredictionResult {
            components: a,
            yhat,
            labels,
        })
    }

    /// Class index per row: argmax of the predicted dummy columns, ties to the
    /// earlier declared class.
    pub fn classify(&self, x_new: &Matrix, a: usize) -> Result<Vec<usize>> {
        if self.response_kind == ResponseKind::Continuous {
            return Err(GemError::NotAClassifier);
        }
        Ok(self.predict(x_new, a)?.labels.unwrap_or_default())
    }

    pub fn explained_variance(&self) -> ExplainedVariance {
        let a = self.n_components();
        let mut x = Vec::with_capacity(a);
        let mut y = Vec::with_capacity(a);
        for k in 0..a {
            let t = self.scores.column(k);
            let tt = dot(&t, &t);
            let pp = dot(&self.x_loadings.column(k), &self.x_loadings.column(k));
            let qq = dot(&self.y_loadings.column(k), &self.y_loadings.column(k));
            x.push((tt * pp / self.x_total_ss).clamp(0.0, 1.0));
            y.push(if self.y_total_ss > 0.0 {
                (tt * qq / self.y_total_ss).clamp(0.0, 1.0)
            } else {
                0.0
            });
        }
        let cumulative = |v: &[f64]| {
            v.iter()
                .scan(0.0, |acc, f| {
                    *acc += f;
                    Some(f64::min(*acc, 1.0))
                })
                .collect()
        };
        ExplainedVariance {
            x_cumulative: cumulative(&x),
            y_cumulative: cumulative(&y),
            x,
            y,
        }
    }
}

/// Relative tolerance for treating two predicted dummy values as tied.
const TIE_TOLERANCE: f64 = 1e-10;

fn argmax_rows(m: &Matrix) -> Vec<usize> {
    (0..m.nrows())
        .map(|i| {
            let row = m.row(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let scale = row.iter().fold(1.0f64, |s, v| s.max(v.abs()));
            row.iter()
                .position(|&v| v >= max - TIE_TOLERANCE * scale)
                .unwrap_or(0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centering_and_constant_columns() {
        let m = Matrix::from_rows(&[vec![1.0, 0.3], vec![2.0, 0.3], vec![3.0, 0.3]]).unwrap();
        let (pre, t) = preprocess_fit(
            &m,
            PreprocessOptions {
                center: true,
                unit_variance: true,
            },
        )
        .unwrap();
        assert_eq!(t.column(0), vec![-1.0, 0.0, 1.0]);
        assert_eq!(t.column(1), vec![0.0, 0.0, 0.0]);
        assert_eq!(pre.flagged, vec![1]);
        let back = pre.inverse_transform(&t).unwrap();
        assert!(back.sub(&m).unwrap().max_abs() < 1e-12);
        assert_eq!(pre.transform(&m).unwrap(), t);
    }

    #[test]
    fn empty_matrix_is_rejected() {
        assert!(preprocess_fit(&Matrix::zeros(0, 2), PreprocessOptions::default()).is_err());
    }

    #[test]
    fn rank_one_system_is_fully_explained() {
        let t = [1.0, -2.0, 0.5, 3.0, -2.5];
        let p = [0.2, -0.4, 0.8];
        let x = Matrix::from_fn(5, 3, |i, j| t[i] * p[j]);
        let y = Matrix::column_vector(&t);
        let model = fit_pls(&x, &y, 1, &PlsOptions::default()).unwrap();
        assert!(model.x_residual().frobenius_norm() < 1e-10);
        let pred = model.predict(&x, 1).unwrap();
        assert!(pred.yhat.sub(&y).unwrap().frobenius_norm() < 1e-10);
        let ev = model.explained_variance();
        assert!((ev.x[0] - 1.0).abs() < 1e-12);
        // The second component does not exist.
        assert_eq!(
            fit_pls(&x, &y, 2, &PlsOptions::default()).unwrap_err(),
            GemError::ComponentsExceedRank {
                requested: 2,
                available: 1
            }
        );
    }

    #[test]
    fn zero_predictors_and_rank_bound() {
        let x = Matrix::zeros(4, 2);
        let y = Matrix::column_vector(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(
            fit_pls(&x, &y, 1, &PlsOptions::default()).unwrap_err(),
            GemError::ZeroPredictors
        );
        let x = Matrix::from_fn(4, 2, |i, j| (i * i + j) as f64);
        assert!(matches!(
            fit_pls(&x, &y, 3, &PlsOptions::default()),
            Err(GemError::ComponentsExceedRank { requested: 3, available: 2 })
        ));
    }

    #[test]
    fn zero_components_predict_the_mean() {
        let x = Matrix::from_fn(4, 2, |i, j| (i * i + j) as f64);
        let y = Matrix::column_vector(&[1.0, 2.0, 3.0, 6.0]);
        let model = fit_pls(&x, &y, 1, &PlsOptions::default()).unwrap();
        let pred = model.predict(&x, 0).unwrap();
        assert!(pred.yhat.column(0).iter().all(|v| (*v - 3.0).abs() < 1e-15));
    }

    #[test]
    fn classify_requires_dummy_response() {
        let x = Matrix::from_fn(4, 2, |i, j| (i * i + j) as f64);
        let y = Matrix::column_vector(&[1.0, 2.0, 3.0, 6.0]);
        let model = fit_pls(&x, &y, 1, &PlsOptions::default()).unwrap();
        assert_eq!(model.classify(&x, 1).unwrap_err(), GemError::NotAClassifier);
    }

    #[test]
    fn midpoint_ties_go_to_first_class() {
        let x = Matrix::from_rows(&[vec![-1.0], vec![-2.0], vec![1.0], vec![2.0]]).unwrap();
        let model = fit_pls_da(
            &x,
            &[0, 0, 1, 1],
            alloc::vec!["a".into(), "b".into()],
            1,
            &PlsOptions::default(),
        )
        .unwrap();
        assert_eq!(model.classify(&x, 1).unwrap(), alloc::vec![0, 0, 1, 1]);
        let mid = Matrix::from_rows(&[vec![0.0]]).unwrap();
        assert_eq!(model.classify(&mid, 1).unwrap(), alloc::vec![0]);
    }

    #[test]
    fn weight_sign_is_canonical() {
        let x = Matrix::from_fn(6, 3, |i, j| libm::sin((i * 3 + j) as f64));
        let y = Matrix::column_vector(&[1.0, -1.0, 0.5, 2.0, 0.0, -0.7]);
        let neg_y = y.scale(-1.0);
        let a = fit_pls(&x, &y, 2, &PlsOptions::default()).unwrap();
        let b = fit_pls(&x, &neg_y, 2, &PlsOptions::default()).unwrap();
        for k in 0..2 {
            let w = a.weights().column(k);
            let lead = w.iter().fold(0.0f64, |m, v| if v.abs() > m.abs() { *v } else { m });
            assert!(lead > 0.0);
            let wb = b.weights().column(k);
            for (u, v) in w.iter().zip(&wb) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }
}
