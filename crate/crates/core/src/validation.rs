//! Cross-validated performance curves, jackknife significance of PLS
//! coefficients, confidence intervals for within-group differences, and
//! per-category means.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::datamodel::{cross_product, AlignedStudy, DesignVariable};
use crate::error::{GemError, Result};
use crate::glm::{encode_variables, fit_glm, Coding};
use crate::linalg::Matrix;
use crate::pls::{fit_pls_da_up_to, fit_pls_up_to, PlsModel, PlsOptions, ResponseKind};
use crate::rng::{streams, substream};
use crate::stats::{mean, sample_variance, student_t_quantile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvKind {
    LeaveOneOut,
    /// `k` folds over a seeded shuffle of the samples.
    KFold { k: usize, seed: u64 },
}

/// Which steps are refit inside each fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CvScope {
    /// Only preprocessing and PLS; ER values come from a GLM fit on all samples.
    #[default]
    StepTwoOnly,
    /// The GLM is refit on the training rows of every fold as well.
    FullPipeline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CvScheme {
    pub kind: CvKind,
    pub scope: CvScope,
}

impl Default for CvScheme {
    fn default() -> Self {
        Self {
            kind: CvKind::LeaveOneOut,
            scope: CvScope::StepTwoOnly,
        }
    }
}

impl CvScheme {
    pub fn leave_one_out() -> Self {
        Self::default()
    }

    pub fn k_fold(k: usize, seed: u64) -> Self {
        Self {
            kind: CvKind::KFold { k, seed },
            scope: CvScope::StepTwoOnly,
        }
    }

    pub fn with_scope(mut self, scope: CvScope) -> Self {
        self.scope = scope;
        self
    }

    /// Held-out index sets, each sorted; together they partition `0..n`.
    pub fn folds(&self, n: usize) -> Result<Vec<Vec<usize>>> {
        match self.kind {
            CvKind::LeaveOneOut => {
                if n < 2 {
                    return Err(GemError::TooFewFolds { needed: 2, found: n });
                }
                Ok((0..n).map(|i| vec![i]).collect())
            }
            CvKind::KFold { k, seed } => {
                if k < 2 {
                    return Err(GemError::TooFewFolds { needed: 2, found: k });
                }
                if k > n {
                    return Err(GemError::InvalidParameter(alloc::format!(
                        "{k} folds requested for {n} samples"
                    )));
                }
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut substream(seed, streams::CV_FOLDS));
                let mut folds = vec![Vec::new(); k];
                for (pos, &i) in order.iter().enumerate() {
                    folds[pos % k].push(i);
                }
                for f in &mut folds {
                    f.sort_unstable();
                }
                Ok(folds)
            }
        }
    }
}

/// What PLS is asked to predict.
#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    /// Class index per sample into `classes`.
    Classes { labels: Vec<usize>, classes: Vec<String> },
    Continuous(Vec<f64>),
}

impl Response {
    pub fn from_variable(v: &DesignVariable) -> Response {
        match v {
            DesignVariable::Categorical(c) => Response::Classes {
                labels: c.codes.clone(),
                classes: c.levels.clone(),
            },
            DesignVariable::Continuous(c) => Response::Continuous(c.values.clone()),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Response::Classes { labels, .. } => labels.len(),
            Response::Continuous(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, rows: &[usize]) -> Response {
        match self {
            Response::Classes { labels, classes } => Response::Classes {
                labels: rows.iter().map(|&r| labels[r]).collect(),
                classes: classes.clone(),
            },
            Response::Continuous(v) => Response::Continuous(rows.iter().map(|&r| v[r]).collect()),
        }
    }

    fn fit(&self, x: &Matrix, components: usize, options: &PlsOptions) -> Result<PlsModel> {
        match self {
            Response::Classes { labels, classes } => {
                fit_pls_da_up_to(x, labels, classes.clone(), components, options)
            }
            Response::Continuous(v) => fit_pls_up_to(x, &Matrix::column_vector(v), components, options),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationPoint {
    pub components: usize,
    pub accuracy: f64,
    /// Fraction of held-out samples of each class predicted correctly; `None`
    /// when no sample of the class was evaluated.
    pub sensitivity: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionPoint {
    pub components: usize,
    pub rmsep: f64,
    /// Squared Pearson correlation between predicted and observed values.
    pub r2: f64,
    /// `1 - PRESS / total sum of squares`.
    pub q2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CvMetrics {
    Classification {
        classes: Vec<String>,
        points: Vec<ClassificationPoint>,
    },
    Regression(Vec<RegressionPoint>),
}

/// Cross-validated performance for component counts `0..=max`.
#[derive(Debug, Clone, PartialEq)]
pub struct CvCurve {
    pub metrics: CvMetrics,
    pub n_folds: usize,
    pub skipped_folds: usize,
    pub evaluated_samples: usize,
    pub requested_components: usize,
    /// Set when some training fold supported fewer components than requested.
    pub truncated_to: Option<usize>,
    pub notices: Vec<String>,
}

impl CvCurve {
    pub fn max_components(&self) -> usize {
        match &self.metrics {
            CvMetrics::Classification { points, .. } => points.len().saturating_sub(1),
            CvMetrics::Regression(points) => points.len().saturating_sub(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    /// A class has no training sample in this fold.
    ClassMissing { class: usize },
    /// The training predictors are identically zero.
    ZeroPredictors,
    /// A categorical design variable has a single level among the training rows.
    DegenerateDesign,
}

/// Everything one fold produced.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub index: usize,
    pub test: Vec<usize>,
    pub model: Option<PlsModel>,
    /// `predictions[a]` holds held-out predictions with `a` components (original response scale).
    pub predictions: Vec<Matrix>,
    pub skipped: Option<SkipReason>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvRun {
    pub curve: CvCurve,
    pub folds: Vec<FoldOutcome>,
}

fn complement(n: usize, test: &[usize]) -> Vec<usize> {
    let mut mask = vec![true; n];
    for &t in test {
        mask[t] = false;
    }
    (0..n).filter(|&i| mask[i]).collect()
}

fn missing_class(response: &Response, train: &[usize]) -> Option<usize> {
    if let Response::Classes { labels, classes } = response {
        // Only classes that occur somewhere in the response can go missing.
        let mut present = vec![false; classes.len()];
        for &l in labels {
            present[l] = true;
        }
        let mut seen = vec![false; classes.len()];
        for &i in train {
            seen[labels[i]] = true;
        }
        return (0..classes.len()).find(|&c| present[c] && !seen[c]);
    }
    None
}

fn rank_bound(n: usize, m: usize) -> usize {
    n.saturating_sub(1).min(m)
}

/// Fits one fold and predicts its held-out rows.
fn run_fold(
    index: usize,
    test: Vec<usize>,
    x_train: &Matrix,
    x_test: &Matrix,
    train_response: &Response,
    max_components: usize,
    options: &PlsOptions,
) -> Result<FoldOutcome> {
    let a = max_components.min(rank_bound(x_train.nrows(), x_train.ncols()));
    let model = match train_response.fit(x_train, a, options) {
        Ok(m) => m,
        Err(GemError::ZeroPredictors) => {
            return Ok(FoldOutcome {
                index,
                test,
                model: None,
                predictions: Vec::new(),
                skipped: Some(SkipReason::ZeroPredictors),
            })
        }
        Err(e) => return Err(e),
    };
    let predictions = (0..=model.n_components())
        .map(|k| model.predict(x_test, k).map(|p| p.yhat))
        .collect::<Result<Vec<_>>>()?;
    Ok(FoldOutcome {
        index,
        test,
        model: Some(model),
        predictions,
        skipped: None,
    })
}

fn skipped(index: usize, test: Vec<usize>, reason: SkipReason) -> FoldOutcome {
    FoldOutcome {
        index,
        test,
        model: None,
        predictions: Vec::new(),
        skipped: Some(reason),
    }
}

/// Cross-validates PLS on a fixed predictor matrix (for example an ER matrix):
/// preprocessing and PLS are fit on the training rows of each fold only.
pub fn cross_validate(
    x: &Matrix,
    response: &Response,
    scheme: &CvScheme,
    max_components: usize,
    options: &PlsOptions,
) -> Result<CvRun> {
    if scheme.scope == CvScope::FullPipeline {
        return Err(GemError::InvalidParameter(
            "full-pipeline cross-validation needs the study; use cross_validate_gem".into(),
        ));
    }
    check_cv_inputs(x.nrows(), response, max_components)?;
    let n = x.nrows();
    let folds = scheme.folds(n)?;
    let mut outcomes = Vec::with_capacity(folds.len());
    for (index, test) in folds.into_iter().enumerate() {
        let train = complement(n, &test);
        if let Some(class) = missing_class(response, &train) {
            outcomes.push(skipped(index, test, SkipReason::ClassMissing { class }));
            continue;
        }
        let outcome = run_fold(
            index,
            test.clone(),
            &x.select_rows(&train),
            &x.select_rows(&test),
            &response.select(&train),
            max_components,
            options,
        )?;
        outcomes.push(outcome);
    }
    aggregate(response, outcomes, max_components)
}

/// Cross-validates GEM-PLS for design variable `target`, using the GLM over
/// `variables`. With [`CvScope::FullPipeline`] the GLM is refit on each
/// training fold and held-out ER values are formed from that fit.
pub fn cross_validate_gem(
    study: &AlignedStudy,
    variables: &[&str],
    target: &str,
    scheme: &CvScheme,
    max_components: usize,
    options: &PlsOptions,
) -> Result<CvRun> {
    if !variables.contains(&target) {
        return Err(GemError::UnknownVariable(target.to_string()));
    }
    let response = Response::from_variable(study.variable(target)?);
    match scheme.scope {
        CvScope::StepTwoOnly => {
            let model = encode_variables(study, variables, Coding::SumToZero)?;
            let fit = fit_glm(model, study.dataset().response())?;
            let er = fit.er_values(target)?;
            cross_validate(&er.values, &response, scheme, max_components, options)
        }
        CvScope::FullPipeline => {
            check_cv_inputs(study.n_samples(), &response, max_components)?;
            let n = study.n_samples();
            let folds = scheme.folds(n)?;
            let mut outcomes = Vec::with_capacity(folds.len());
            for (index, test) in folds.into_iter().enumerate() {
                let train = complement(n, &test);
                if let Some(class) = missing_class(&response, &train) {
                    outcomes.push(skipped(index, test, SkipReason::ClassMissing { class }));
                    continue;
                }
                let train_study = study.select_samples(&train);
                let test_study = study.select_samples(&test);
                let model = match encode_variables(&train_study, variables, Coding::SumToZero) {
                    Ok(m) => m,
                    Err(GemError::SingleObservedLevel(_)) => {
                        outcomes.push(skipped(index, test, SkipReason::DegenerateDesign));
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let fit = fit_glm(model, train_study.dataset().response())?;
                let er_train = fit.er_values(target)?.values;
                let er_test = fit.er_values_for(&test_study, target)?;
                outcomes.push(run_fold(
                    index,
                    test,
                    &er_train,
                    &er_test,
                    &response.select(&train),
                    max_components,
                    options,
                )?);
            }
            aggregate(&response, outcomes, max_components)
        }
    }
}

fn check_cv_inputs(n: usize, response: &Response, max_components: usize) -> Result<()> {
    if max_components == 0 {
        return Err(GemError::InvalidParameter("at least one component is required".into()));
    }
    if response.len() != n {
        return Err(GemError::DimensionMismatch {
            context: "response length vs samples",
            expected: n,
            found: response.len(),
        });
    }
    Ok(())
}

fn aggregate(response: &Response, folds: Vec<FoldOutcome>, requested: usize) -> Result<CvRun> {
    let used: Vec<&FoldOutcome> = folds.iter().filter(|f| f.model.is_some()).collect();
    if used.is_empty() {
        return Err(GemError::NoUsableFolds);
    }
    let available = used
        .iter()
        .map(|f| f.predictions.len() - 1)
        .min()
        .unwrap_or(0);
    let skipped_folds = folds.len() - used.len();
    let mut notices = Vec::new();
    if skipped_folds > 0 {
        notices.push(alloc::format!(
            "{skipped_folds} of {} folds skipped (a class or design level missing from training rows)",
            folds.len()
        ));
    }
    let truncated_to = (available < requested).then(|| {
        notices.push(alloc::format!(
            "curve truncated to {available} components (training-fold rank)"
        ));
        available
    });
    let evaluated: Vec<usize> = used.iter().flat_map(|f| f.test.iter().copied()).collect();

    let metrics = match response {
        Response::Classes { labels, classes } => {
            let points = (0..=available)
                .map(|a| {
                    let mut correct = 0usize;
                    let mut per_class = vec![(0usize, 0usize); classes.len()];
                    for f in &used {
                        let pred = &f.predictions[a];
                        for (row, &i) in f.test.iter().enumerate() {
                            let guess = argmax_first(pred.row(row));
                            let truth = labels[i];
                            per_class[truth].1 += 1;
                            if guess == truth {
                                correct += 1;
                                per_class[truth].0 += 1;
                            }
                        }
                    }
                    ClassificationPoint {
                        components: a,
                        accuracy: correct as f64 / evaluated.len() as f64,
                        sensitivity: per_class
                            .iter()
                            .map(|&(c, t)| (t > 0).then(|| c as f64 / t as f64))
                            .collect(),
                    }
                })
                .collect();
            CvMetrics::Classification {
                classes: classes.clone(),
                points,
            }
        }
        Response::Continuous(y) => {
            let observed: Vec<f64> = evaluated.iter().map(|&i| y[i]).collect();
            let points = (0..=available)
                .map(|a| {
                    let predicted: Vec<f64> = used
                        .iter()
                        .flat_map(|f| f.predictions[a].column(0))
                        .collect();
                    regression_point(a, &observed, &predicted)
                })
                .collect();
            CvMetrics::Regression(points)
        }
    };
    Ok(CvRun {
        curve: CvCurve {
            metrics,
            n_folds: folds.len(),
            skipped_folds,
            evaluated_samples: evaluated.len(),
            requested_components: requested,
            truncated_to,
            notices,
        },
        folds,
    })
}

/// Same decision rule as [`PlsModel::classify`].
fn argmax_first(row: &[f64]) -> usize {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = row.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    row.iter().position(|&v| v >= max - 1e-10 * scale).unwrap_or(0)
}

fn regression_point(components: usize, observed: &[f64], predicted: &[f64]) -> RegressionPoint {
    let n = observed.len() as f64;
    let press: f64 = observed
        .iter()
        .zip(predicted)
        .map(|(o, p)| (o - p) * (o - p))
        .sum();
    let mo = mean(observed);
    let mp = mean(predicted);
    let ss_obs: f64 = observed.iter().map(|o| (o - mo) * (o - mo)).sum();
    let ss_pred: f64 = predicted.iter().map(|p| (p - mp) * (p - mp)).sum();
    let cross: f64 = observed
        .iter()
        .zip(predicted)
        .map(|(o, p)| (o - mo) * (p - mp))
        .sum();
    let r2 = if ss_obs > 0.0 && ss_pred > 0.0 {
        cross * cross / (ss_obs * ss_pred)
    } else {
        0.0
    };
    RegressionPoint {
        components,
        rmsep: libm::sqrt(press / n),
        r2,
        q2: if ss_obs > 0.0 { 1.0 - press / ss_obs } else { 0.0 },
    }
}

/// Jackknife stability of one variable's regression coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct JackknifeVariable {
    /// Coefficient of the model fit on all samples.
    pub coefficient: f64,
    /// Mean of `|coefficient|` over the fold models.
    pub mean_abs_fold_coefficient: f64,
    pub std_error: f64,
    /// `coefficient / std_error`.
    pub statistic: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JackknifeResult {
    pub components: usize,
    pub alpha: f64,
    /// Folds whose models entered the variance estimate.
    pub n_folds: usize,
    /// Two-sided t quantile at `1 - alpha/2` with `n_folds - 1` degrees of freedom.
    pub t_threshold: f64,
    /// Response column the statistics refer to; `None` when chosen per variable.
    pub response_column: Option<usize>,
    pub variables: Vec<JackknifeVariable>,
}

/// Coefficient-stability significance test across cross-validation folds.
///
/// With `b` the full-data coefficient and `b_m` the coefficient from fold
/// model `m` of `M`, the variance estimate is `(M-1)/M · Σ (b_m - b)²` and a
/// variable is flagged when `|b|` exceeds the t quantile times its square root.
/// Two-class responses are reported for the second class's dummy column;
/// with more classes, the column with the largest `|t|` is used per variable.
pub fn jackknife_significance(
    x: &Matrix,
    response: &Response,
    components: usize,
    scheme: &CvScheme,
    alpha: f64,
    options: &PlsOptions,
) -> Result<JackknifeResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(GemError::InvalidParameter(alloc::format!("alpha {alpha} outside (0, 1)")));
    }
    let scheme = CvScheme {
        scope: CvScope::StepTwoOnly,
        ..*scheme
    };
    let run = cross_validate(x, response, &scheme, components, options)?;
    let fold_models: Vec<&PlsModel> = run.folds.iter().filter_map(|f| f.model.as_ref()).collect();
    let m_folds = fold_models.len();
    if m_folds < 3 {
        return Err(GemError::TooFewFolds {
            needed: 3,
            found: m_folds,
        });
    }
    let full = response.fit(x, components, options)?;
    if full.n_components() < components {
        return Err(GemError::ComponentsExceedRank {
            requested: components,
            available: full.n_components(),
        });
    }
    let b_full = full.original_scale_coefficients(components)?;
    let fold_b = fold_models
        .iter()
        .map(|m| {
            if m.n_components() < components {
                Err(GemError::ComponentsExceedRank {
                    requested: components,
                    available: m.n_components(),
                })
            } else {
                m.original_scale_coefficients(components)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let t_threshold = student_t_quantile(1.0 - alpha / 2.0, (m_folds - 1) as f64);
    let factor = (m_folds as f64 - 1.0) / m_folds as f64;
    let q = b_full.ncols();
    let fixed_column = (q == 2).then_some(1);
    let stats_for = |j: usize, k: usize| {
        let b = b_full[(j, k)];
        let ss: f64 = fold_b.iter().map(|bm| (bm[(j, k)] - b) * (bm[(j, k)] - b)).sum();
        let se = libm::sqrt(factor * ss);
        let t = if se > 0.0 {
            b / se
        } else if b == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(b)
        };
        (b, se, t)
    };
    let response_column = if q == 1 { Some(0) } else { fixed_column };
    let variables = (0..b_full.nrows())
        .map(|j| {
            let k = response_column.unwrap_or_else(|| {
                (0..q)
                    .fold((0, -1.0), |best, k| {
                        let t = stats_for(j, k).2.abs();
                        if t > best.1 {
                            (k, t)
                        } else {
                            best
                        }
                    })
                    .0
            });
            let (b, se, t) = stats_for(j, k);
            JackknifeVariable {
                coefficient: b,
                mean_abs_fold_coefficient: fold_b.iter().map(|bm| bm[(j, k)].abs()).sum::<f64>()
                    / m_folds as f64,
                std_error: se,
                statistic: t,
                significant: b != 0.0 && b.abs() > t_threshold * se,
            }
        })
        .collect();
    Ok(JackknifeResult {
        components,
        alpha,
        n_folds: m_folds,
        t_threshold,
        response_column,
        variables,
    })
}

/// Estimate with a symmetric interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Difference (second target level minus first) for one variable in one group.
#[derive(Debug, Clone, PartialEq)]
pub struct CiEntry {
    pub group: String,
    pub variable: String,
    pub n_first: usize,
    pub n_second: usize,
    pub mean_first: Option<f64>,
    pub mean_second: Option<f64>,
    /// `None` when either cell has fewer than two samples.
    pub difference: Option<Interval>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CiTable {
    pub group_factor: String,
    pub target_factor: String,
    pub first_level: String,
    pub second_level: String,
    pub gamma: f64,
    /// Group-major, variables in dataset order.
    pub entries: Vec<CiEntry>,
}

/// Within each level of `group_factor`, the difference between the two levels
/// of `target_factor` per response variable, with a pooled-variance t interval
/// at confidence `gamma`.
pub fn confidence_intervals(
    study: &AlignedStudy,
    group_factor: &str,
    target_factor: &str,
    gamma: f64,
) -> Result<CiTable> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(GemError::InvalidParameter(alloc::format!("gamma {gamma} outside (0, 1)")));
    }
    let group = study.categorical(group_factor)?;
    let target = study.categorical(target_factor)?;
    if target.levels.len() != 2 {
        return Err(GemError::InvalidParameter(alloc::format!(
            "target factor `{target_factor}` must have exactly two levels"
        )));
    }
    let y = study.dataset().response();
    let names = study.dataset().variable_names();
    let mut entries = Vec::with_capacity(group.levels.len() * names.len());
    for (g, gname) in group.levels.iter().enumerate() {
        let rows_of = |level: usize| -> Vec<usize> {
            (0..study.n_samples())
                .filter(|&i| group.codes[i] == g && target.codes[i] == level)
                .collect()
        };
        let first = rows_of(0);
        let second = rows_of(1);
        let dof = (first.len() + second.len()).saturating_sub(2) as f64;
        let estimable = first.len() >= 2 && second.len() >= 2;
        let t = if estimable {
            student_t_quantile(0.5 + gamma / 2.0, dof)
        } else {
            0.0
        };
        for (j, name) in names.iter().enumerate() {
            let a: Vec<f64> = first.iter().map(|&i| y[(i, j)]).collect();
            let b: Vec<f64> = second.iter().map(|&i| y[(i, j)]).collect();
            let mean_a = (!a.is_empty()).then(|| mean(&a));
            let mean_b = (!b.is_empty()).then(|| mean(&b));
            let difference = if estimable {
                let (na, nb) = (a.len() as f64, b.len() as f64);
                let pooled = ((na - 1.0) * sample_variance(&a) + (nb - 1.0) * sample_variance(&b)) / dof;
                let half = t * libm::sqrt(pooled * (1.0 / na + 1.0 / nb));
                let d = mean_b.unwrap_or(0.0) - mean_a.unwrap_or(0.0);
                Some(Interval {
                    estimate: d,
                    lower: d - half,
                    upper: d + half,
                })
            } else {
                None
            };
            entries.push(CiEntry {
                group: gname.clone(),
                variable: name.clone(),
                n_first: a.len(),
                n_second: b.len(),
                mean_first: mean_a,
                mean_second: mean_b,
                difference,
            });
        }
    }
    Ok(CiTable {
        group_factor: group_factor.to_string(),
        target_factor: target_factor.to_string(),
        first_level: target.levels[0].clone(),
        second_level: target.levels[1].clone(),
        gamma,
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeansCategory {
    pub levels: Vec<String>,
    pub n: usize,
}

/// Per-variable means over crossed categories.
#[derive(Debug, Clone, PartialEq)]
pub struct MeansTable {
    pub factors: Vec<String>,
    /// Every cross-category in declared order, last factor fastest.
    pub categories: Vec<MeansCategory>,
    pub variables: Vec<String>,
    /// `means[variable][category]`; `None` for categories without samples.
    pub means: Vec<Vec<Option<f64>>>,
}

impl MeansTable {
    /// Categories that contain at least one sample.
    pub fn present(&self) -> impl Iterator<Item = (usize, &MeansCategory)> {
        self.categories.iter().enumerate().filter(|(_, c)| c.n > 0)
    }
}

/// Means of `values` (rows aligned with the study's samples; the raw response
/// or an ER matrix) per cross-category of `factors`.
pub fn group_means(study: &AlignedStudy, values: &Matrix, factors: &[&str]) -> Result<MeansTable> {
    if factors.is_empty() {
        return Err(GemError::InvalidParameter("empty factor list".into()));
    }
    if values.nrows() != study.n_samples() || values.ncols() != study.dataset().n_variables() {
        return Err(GemError::DimensionMismatch {
            context: "value matrix vs study shape",
            expected: study.n_samples(),
            found: values.nrows(),
        });
    }
    let cats = factors
        .iter()
        .map(|f| study.categorical(f))
        .collect::<Result<Vec<_>>>()?;
    let sizes: Vec<usize> = cats.iter().map(|c| c.levels.len()).collect();
    let combos = cross_product(&sizes);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); combos.len()];
    for i in 0..study.n_samples() {
        let mut flat = 0;
        for (c, &size) in cats.iter().zip(&sizes) {
            flat = flat * size + c.codes[i];
        }
        members[flat].push(i);
    }
    let categories = combos
        .iter()
        .zip(&members)
        .map(|(combo, rows)| MeansCategory {
            levels: combo.iter().zip(&cats).map(|(&l, c)| c.levels[l].clone()).collect(),
            n: rows.len(),
        })
        .collect();
    let means = (0..values.ncols())
        .map(|j| {
            members
                .iter()
                .map(|rows| {
                    (!rows.is_empty())
                        .then(|| rows.iter().map(|&i| values[(i, j)]).sum::<f64>() / rows.len() as f64)
                })
                .collect()
        })
        .collect();
    Ok(MeansTable {
        factors: factors.iter().map(|f| f.to_string()).collect(),
        categories,
        variables: study.dataset().variable_names().to_vec(),
        means,
    })
}

/// Convenience: the class labels a PLS-DA model was trained on.
pub fn model_classes(model: &PlsModel) -> Option<&[String]> {
    match model.response_kind() {
        ResponseKind::DummyClass { classes } => Some(classes),
        ResponseKind::Continuous => None,
    }
}
