//! Model-matrix encoding, the multivariate general linear model, and the
//! per-variable effect and ER (effect plus residual) matrices derived from it.
//!
//! Categorical variables use sum-to-zero coding: with observed levels
//! `l_1..l_k`, column `j < k` is `+1` for `l_j`, `-1` for `l_k` and `0`
//! otherwise. A two-level factor therefore gives a single column that is `+1`
//! on its first level and `-1` on its second. Continuous variables are
//! mean-centered. Effects are deviations from the grand mean carried by the
//! intercept.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use crate::datamodel::{AlignedStudy, DesignVariable};
use crate::error::{GemError, Result};
use crate::linalg::{Matrix, Svd};

/// Condition number above which a fit carries a warning.
pub const CONDITION_WARNING: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coding {
    /// Effect coding; see the module docs.
    #[default]
    SumToZero,
}

/// Where a model-matrix column comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnSource {
    Intercept,
    /// Sum-coded contrast of `level` against the last observed level of `variable`.
    Contrast { variable: String, level: String },
    /// Mean-centered continuous covariate.
    Covariate { variable: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum VariableEncoding {
    Categorical {
        /// Declared level list of the variable.
        levels: Vec<String>,
        /// Indices into `levels` of the levels observed at encoding time.
        observed: Vec<usize>,
    },
    Continuous {
        center: f64,
    },
}

/// Encoding of one design variable and the model-matrix columns it owns.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableCoding {
    pub name: String,
    pub encoding: VariableEncoding,
    pub columns: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DesignWarning {
    /// A continuous variable with no spread; its centered column is all zero.
    ConstantCovariate(String),
}

/// Encoded design matrix with a leading intercept column.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMatrix {
    x: Matrix,
    columns: Vec<ColumnSource>,
    variables: Vec<VariableCoding>,
    coding: Coding,
    warnings: Vec<DesignWarning>,
}

impl ModelMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.x
    }

    pub fn columns(&self) -> &[ColumnSource] {
        &self.columns
    }

    pub fn variables(&self) -> &[VariableCoding] {
        &self.variables
    }

    pub fn coding(&self) -> Coding {
        self.coding
    }

    pub fn warnings(&self) -> &[DesignWarning] {
        &self.warnings
    }

    pub fn n_params(&self) -> usize {
        self.x.ncols()
    }

    pub fn variable(&self, name: &str) -> Result<&VariableCoding> {
        self.variables
            .iter()
            .find(|v| v.name == name)
            .ok_or_else(|| GemError::UnknownVariable(name.to_string()))
    }

    /// Encodes other samples with the stored coding (levels and centers from
    /// the encoding data). A level not seen at encoding time gets all-zero
    /// contrasts, i.e. the grand mean.
    pub fn encode_new(&self, study: &AlignedStudy) -> Result<Matrix> {
        let n = study.n_samples();
        let mut x = Matrix::zeros(n, self.n_params());
        for i in 0..n {
            x[(i, 0)] = 1.0;
        }
        for vc in &self.variables {
            let var = study.variable(&vc.name)?;
            fill_columns(&mut x, vc, var)?;
        }
        Ok(x)
    }
}

fn fill_columns(x: &mut Matrix, vc: &VariableCoding, var: &DesignVariable) -> Result<()> {
    match (&vc.encoding, var) {
        (VariableEncoding::Categorical { levels, observed }, DesignVariable::Categorical(c)) => {
            let last = *observed.last().expect("at least two observed levels");
            for (i, &code) in c.codes.iter().enumerate() {
                // Match by level name so a subset study with the same level list works.
                let name = &c.levels[code];
                let level = levels.iter().position(|l| l == name);
                for (k, col) in vc.columns.clone().enumerate() {
                    x[(i, col)] = match level {
                        Some(l) if l == observed[k] => 1.0,
                        Some(l) if l == last => -1.0,
                        _ => 0.0,
                    };
                }
            }
            Ok(())
        }
        (VariableEncoding::Continuous { center }, DesignVariable::Continuous(c)) => {
            for (i, v) in c.values.iter().enumerate() {
                x[(i, vc.columns.start)] = v - center;
            }
            Ok(())
        }
        (VariableEncoding::Categorical { .. }, _) => {
            Err(GemError::CategoricalResponse(vc.name.clone()))
        }
        (VariableEncoding::Continuous { .. }, _) => Err(GemError::ContinuousFactor(vc.name.clone())),
    }
}

/// Encodes every design variable of the study, in study order.
pub fn encode_design(study: &AlignedStudy, coding: Coding) -> Result<ModelMatrix> {
    let names: Vec<&str> = study.design().iter().map(|v| v.name()).collect();
    encode_variables(study, &names, coding)
}

/// Encodes the named design variables, in the order given.
pub fn encode_variables(study: &AlignedStudy, names: &[&str], coding: Coding) -> Result<ModelMatrix> {
    let n = study.n_samples();
    let mut columns = alloc::vec![ColumnSource::Intercept];
    let mut variables = Vec::with_capacity(names.len());
    let mut warnings = Vec::new();
    for (k, name) in names.iter().enumerate() {
        if names[..k].contains(name) {
            return Err(GemError::DuplicateVariableName(name.to_string()));
        }
        let var = study.variable(name)?;
        let start = columns.len();
        let encoding = match var {
            DesignVariable::Categorical(c) => {
                let observed = c.observed_levels();
                if observed.len() < 2 {
                    return Err(GemError::SingleObservedLevel(c.name.clone()));
                }
                for &l in &observed[..observed.len() - 1] {
                    columns.push(ColumnSource::Contrast {
                        variable: c.name.clone(),
                        level: c.levels[l].clone(),
                    });
                }
                VariableEncoding::Categorical {
                    levels: c.levels.clone(),
                    observed,
                }
            }
            DesignVariable::Continuous(c) => {
                let center = if n == 0 {
                    0.0
                } else {
                    c.values.iter().sum::<f64>() / n as f64
                };
                // Exactly constant columns center to exact zeros.
                let constant = c.values.windows(2).all(|w| w[0] == w[1]);
                let center = if constant { c.values.first().copied().unwrap_or(0.0) } else { center };
                if constant {
                    warnings.push(DesignWarning::ConstantCovariate(c.name.clone()));
                }
                columns.push(ColumnSource::Covariate {
                    variable: c.name.clone(),
                });
                VariableEncoding::Continuous { center }
            }
        };
        variables.push(VariableCoding {
            name: name.to_string(),
            encoding,
            columns: start..columns.len(),
        });
    }

    let mut x = Matrix::zeros(n, columns.len());
    for i in 0..n {
        x[(i, 0)] = 1.0;
    }
    for vc in &variables {
        fill_columns(&mut x, vc, study.variable(&vc.name)?)?;
    }
    Ok(ModelMatrix {
        x,
        columns,
        variables,
        coding,
        warnings,
    })
}

/// Columns consumed by one design variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableDof {
    pub name: String,
    pub columns: usize,
}

/// Degrees-of-freedom ledger of a fit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofReport {
    pub n: usize,
    /// Intercept plus all encoded columns.
    pub p: usize,
    pub residual_dof: usize,
    pub per_variable: Vec<VariableDof>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitWarning {
    IllConditioned { condition_number: f64 },
    ConstantCovariate(String),
}

/// Least-squares fit of the response on the model matrix, with the response
/// split into intercept, per-variable effects and residuals.
#[derive(Debug, Clone)]
pub struct GlmFit {
    model: ModelMatrix,
    beta: Matrix,
    intercept_effect: Matrix,
    effects: Vec<Matrix>,
    residuals: Matrix,
    dof: DofReport,
    condition_number: f64,
    rank: usize,
    warnings: Vec<FitWarning>,
}

fn check_aliasing(model: &ModelMatrix) -> Result<()> {
    let x = model.matrix();
    let owner = |col: usize| {
        model
            .variables
            .iter()
            .find(|v| v.columns.contains(&col))
            .map(|v| v.name.as_str())
    };
    let p = x.ncols();
    let cols: Vec<Vec<f64>> = (0..p).map(|j| x.column(j)).collect();
    for a in 1..p {
        for b in (a + 1)..p {
            let scale = cols[a]
                .iter()
                .chain(&cols[b])
                .fold(0.0f64, |m, v| m.max(v.abs()));
            if scale == 0.0 {
                continue;
            }
            let tol = 1e-12 * scale;
            let same = cols[a].iter().zip(&cols[b]).all(|(u, v)| (u - v).abs() <= tol);
            let flipped = cols[a].iter().zip(&cols[b]).all(|(u, v)| (u + v).abs() <= tol);
            if same || flipped {
                return Err(GemError::AliasedDesign {
                    first: owner(a).unwrap_or("?").to_string(),
                    second: owner(b).unwrap_or("?").to_string(),
                });
            }
        }
    }
    Ok(())
}

/// Fits `Y = X B + E` by minimum-norm least squares.
pub fn fit_glm(model: ModelMatrix, y: &Matrix) -> Result<GlmFit> {
    let x = model.matrix();
    let (n, p) = x.shape();
    if y.nrows() != n {
        return Err(GemError::DimensionMismatch {
            context: "response rows vs model matrix rows",
            expected: n,
            found: y.nrows(),
        });
    }
    if n <= p {
        return Err(GemError::NotEnoughSamples { n, p });
    }
    check_aliasing(&model)?;

    let svd = Svd::new(x);
    let beta = svd.solve(y)?;
    let condition_number = svd.condition_number();
    let mut warnings = Vec::new();
    if condition_number > CONDITION_WARNING {
        warnings.push(FitWarning::IllConditioned { condition_number });
    }
    for w in model.warnings() {
        let DesignWarning::ConstantCovariate(name) = w;
        warnings.push(FitWarning::ConstantCovariate(name.clone()));
    }

    let m = y.ncols();
    let mut intercept_effect = Matrix::zeros(n, m);
    for i in 0..n {
        intercept_effect.row_mut(i).copy_from_slice(beta.row(0));
    }
    let effects: Vec<Matrix> = model
        .variables
        .iter()
        .map(|v| partial_product(x, &beta, v.columns.clone()))
        .collect();
    let fitted = x.matmul(&beta)?;
    let residuals = y.sub(&fitted)?;

    let dof = DofReport {
        n,
        p,
        residual_dof: n - p,
        per_variable: model
            .variables
            .iter()
            .map(|v| VariableDof {
                name: v.name.clone(),
                columns: v.columns.len(),
            })
            .collect(),
    };
    Ok(GlmFit {
        rank: svd.rank(),
        model,
        beta,
        intercept_effect,
        effects,
        residuals,
        dof,
        condition_number,
        warnings,
    })
}

/// `X[:, cols] · B[cols, :]`.
fn partial_product(x: &Matrix, beta: &Matrix, cols: Range<usize>) -> Matrix {
    let n = x.nrows();
    let m = beta.ncols();
    let mut out = Matrix::zeros(n, m);
    for i in 0..n {
        let row = out.row_mut(i);
        for c in cols.clone() {
            let xic = x[(i, c)];
            if xic == 0.0 {
                continue;
            }
            for (o, b) in row.iter_mut().zip(beta.row(c)) {
                *o += xic * b;
            }
        }
    }
    out
}

/// Effect of one design variable plus the full-model residuals and the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct ErMatrix {
    pub design_variable: String,
    pub values: Matrix,
    /// Encoded columns of the other design variables, whose effects were removed.
    pub dof_consumed: usize,
}

impl GlmFit {
    pub fn model(&self) -> &ModelMatrix {
        &self.model
    }

    /// Coefficients, one row per model-matrix column.
    pub fn coefficients(&self) -> &Matrix {
        &self.beta
    }

    pub fn intercept_effect(&self) -> &Matrix {
        &self.intercept_effect
    }

    pub fn residuals(&self) -> &Matrix {
        &self.residuals
    }

    pub fn condition_number(&self) -> f64 {
        self.condition_number
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn warnings(&self) -> &[FitWarning] {
        &self.warnings
    }

    pub fn variable_names(&self) -> impl Iterator<Item = &str> {
        self.model.variables.iter().map(|v| v.name.as_str())
    }

    fn index_of(&self, name: &str) -> Result<usize> {
        self.model
            .variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| GemError::UnknownVariable(name.to_string()))
    }

    /// `X_d · B_d` for design variable `d`.
    pub fn effect_of(&self, name: &str) -> Result<&Matrix> {
        Ok(&self.effects[self.index_of(name)?])
    }

    /// Sum of all design-variable effects (fitted values without the intercept).
    pub fn total_effect(&self) -> Matrix {
        let mut total = Matrix::zeros(self.residuals.nrows(), self.residuals.ncols());
        for e in &self.effects {
            total.add_assign(e).expect("effects share the response shape");
        }
        total
    }

    /// Intercept + effect of `d` + residuals; every other design variable's
    /// effect is removed.
    pub fn er_values(&self, name: &str) -> Result<ErMatrix> {
        let k = self.index_of(name)?;
        let mut values = self.intercept_effect.add(&self.effects[k])?;
        values.add_assign(&self.residuals)?;
        let own = self.model.variables[k].columns.len();
        Ok(ErMatrix {
            design_variable: name.to_string(),
            values,
            dof_consumed: self.dof.p - 1 - own,
        })
    }

    /// ER values for samples outside the fit: the observed response minus the
    /// effects of every other design variable, predicted with the fitted
    /// coefficients.
    pub fn er_values_for(&self, study: &AlignedStudy, name: &str) -> Result<Matrix> {
        let k = self.index_of(name)?;
        let x = self.model.encode_new(study)?;
        let mut out = study.dataset().response().clone();
        if out.ncols() != self.beta.ncols() {
            return Err(GemError::DimensionMismatch {
                context: "response columns vs fitted coefficients",
                expected: self.beta.ncols(),
                found: out.ncols(),
            });
        }
        for (j, v) in self.model.variables.iter().enumerate() {
            if j != k {
                out = out.sub(&partial_product(&x, &self.beta, v.columns.clone()))?;
            }
        }
        Ok(out)
    }

    /// Intercept + Σ effects + residuals; equals the fitted response up to rounding.
    pub fn reconstruct(&self) -> Matrix {
        let mut out = self.intercept_effect.clone();
        out.add_assign(&self.total_effect()).expect("same shape");
        out.add_assign(&self.residuals).expect("same shape");
        out
    }

    pub fn dof_report(&self) -> &DofReport {
        &self.dof
    }
}
