//! Response matrices, typed design tables, sample alignment and design-cell
//! frequency summaries.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{GemError, Result};
use crate::linalg::Matrix;

/// Response matrix: one row per sample, one column per measured variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    sample_ids: Vec<String>,
    variable_names: Vec<String>,
    y: Matrix,
}

/// A parsed response cell before missing-value policy is applied.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Value(f64),
    /// Anything that is not a finite number; the original text is kept for errors.
    Missing(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    #[default]
    Reject,
    /// Replace each missing cell with the mean of the observed cells in its column.
    ColumnMean,
}

/// Cells filled in by [`MissingPolicy::ColumnMean`], as `(sample_id, variable)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImputationReport {
    pub imputed: Vec<(String, String)>,
}

impl Dataset {
    pub fn new(sample_ids: Vec<String>, variable_names: Vec<String>, y: Matrix) -> Result<Self> {
        if sample_ids.is_empty() || variable_names.is_empty() {
            return Err(GemError::Empty("dataset"));
        }
        check_unique(&sample_ids).map_err(GemError::DuplicateSampleId)?;
        check_unique(&variable_names).map_err(GemError::DuplicateVariableName)?;
        if y.nrows() != sample_ids.len() {
            return Err(GemError::DimensionMismatch {
                context: "response rows vs sample ids",
                expected: sample_ids.len(),
                found: y.nrows(),
            });
        }
        if y.ncols() != variable_names.len() {
            return Err(GemError::DimensionMismatch {
                context: "response columns vs variable names",
                expected: variable_names.len(),
                found: y.ncols(),
            });
        }
        for i in 0..y.nrows() {
            for j in 0..y.ncols() {
                if !y[(i, j)].is_finite() {
                    return Err(GemError::NonNumeric {
                        row: i,
                        column: variable_names[j].clone(),
                        value: y[(i, j)].to_string(),
                    });
                }
            }
        }
        Ok(Self {
            sample_ids,
            variable_names,
            y,
        })
    }

    /// Builds a dataset from parsed cells, applying the missing-value policy.
    pub fn from_cells(
        sample_ids: Vec<String>,
        variable_names: Vec<String>,
        cells: Vec<Vec<Cell>>,
        policy: MissingPolicy,
    ) -> Result<(Self, ImputationReport)> {
        if cells.is_empty() {
            return Err(GemError::Empty("dataset"));
        }
        let m = variable_names.len();
        let n = cells.len();
        let mut y = Matrix::zeros(n, m);
        let mut missing = Vec::new();
        for (i, row) in cells.iter().enumerate() {
            if row.len() != m {
                return Err(GemError::DimensionMismatch {
                    context: "cells in response row",
                    expected: m,
                    found: row.len(),
                });
            }
            for (j, cell) in row.iter().enumerate() {
                match cell {
                    Cell::Value(v) if v.is_finite() => y[(i, j)] = *v,
                    Cell::Value(v) => missing.push((i, j, v.to_string())),
                    Cell::Missing(raw) => missing.push((i, j, raw.clone())),
                }
            }
        }
        let mut report = ImputationReport::default();
        if let Some((i, j, raw)) = missing.first() {
            if policy == MissingPolicy::Reject {
                return Err(GemError::NonNumeric {
                    row: *i,
                    column: variable_names[*j].clone(),
                    value: raw.clone(),
                });
            }
            let holes: BTreeSet<(usize, usize)> = missing.iter().map(|(i, j, _)| (*i, *j)).collect();
            for j in 0..m {
                let observed: Vec<f64> = (0..n)
                    .filter(|i| !holes.contains(&(*i, j)))
                    .map(|i| y[(i, j)])
                    .collect();
                if observed.len() == n {
                    continue;
                }
                if observed.is_empty() {
                    return Err(GemError::NothingToImpute(variable_names[j].clone()));
                }
                let mean = observed.iter().sum::<f64>() / observed.len() as f64;
                for i in (0..n).filter(|i| holes.contains(&(*i, j))) {
                    y[(i, j)] = mean;
                    report
                        .imputed
                        .push((sample_ids[i].clone(), variable_names[j].clone()));
                }
            }
        }
        Ok((Self::new(sample_ids, variable_names, y)?, report))
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn response(&self) -> &Matrix {
        &self.y
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn n_variables(&self) -> usize {
        self.variable_names.len()
    }

    /// Subset of samples in the given order. Panics on out-of-range indices.
    pub fn select_samples(&self, rows: &[usize]) -> Dataset {
        Dataset {
            sample_ids: rows.iter().map(|&r| self.sample_ids[r].clone()).collect(),
            variable_names: self.variable_names.clone(),
            y: self.y.select_rows(rows),
        }
    }

    /// Same samples and variable names with a replacement response matrix.
    pub fn with_response(&self, y: Matrix) -> Result<Dataset> {
        Dataset::new(self.sample_ids.clone(), self.variable_names.clone(), y)
    }
}

fn check_unique(names: &[String]) -> core::result::Result<(), String> {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(n.clone());
        }
    }
    Ok(())
}

/// A categorical design variable with an ordered level list; values are level indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    pub name: String,
    pub levels: Vec<String>,
    pub codes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Continuous {
    pub name: String,
    pub values: Vec<f64>,
}

/// One experimental factor or covariate, with one value per sample.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignVariable {
    Categorical(Categorical),
    Continuous(Continuous),
}

impl DesignVariable {
    /// Categorical variable from textual values. Without `declared` levels, the
    /// level order is the order of first appearance.
    pub fn categorical<S: AsRef<str>>(
        name: &str,
        values: &[S],
        declared: Option<Vec<String>>,
    ) -> Result<Self> {
        let levels = match declared {
            Some(levels) => {
                check_unique(&levels).map_err(|level| GemError::DuplicateLevel {
                    variable: name.to_string(),
                    level,
                })?;
                levels
            }
            None => {
                let mut levels: Vec<String> = Vec::new();
                for v in values {
                    if !levels.iter().any(|l| l == v.as_ref()) {
                        levels.push(v.as_ref().to_string());
                    }
                }
                levels
            }
        };
        if levels.len() < 2 {
            return Err(GemError::TooFewLevels {
                variable: name.to_string(),
                found: levels.len(),
            });
        }
        let codes = values
            .iter()
            .map(|v| {
                levels
                    .iter()
                    .position(|l| l == v.as_ref())
                    .ok_or_else(|| GemError::UnknownLevel {
                        variable: name.to_string(),
                        value: v.as_ref().to_string(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DesignVariable::Categorical(Categorical {
            name: name.to_string(),
            levels,
            codes,
        }))
    }

    pub fn continuous(name: &str, values: Vec<f64>) -> Result<Self> {
        if let Some((row, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(GemError::NonNumeric {
                row,
                column: name.to_string(),
                value: v.to_string(),
            });
        }
        Ok(DesignVariable::Continuous(Continuous {
            name: name.to_string(),
            values,
        }))
    }

    /// Continuous variable parsed from text; `.` is the only decimal separator.
    pub fn continuous_from_text<S: AsRef<str>>(name: &str, values: &[S]) -> Result<Self> {
        let parsed = values
            .iter()
            .enumerate()
            .map(|(row, v)| {
                v.as_ref()
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| GemError::NonNumeric {
                        row,
                        column: name.to_string(),
                        value: v.as_ref().to_string(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::continuous(name, parsed)
    }

    pub fn name(&self) -> &str {
        match self {
            DesignVariable::Categorical(c) => &c.name,
            DesignVariable::Continuous(c) => &c.name,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            DesignVariable::Categorical(c) => c.codes.len(),
            DesignVariable::Continuous(c) => c.values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_categorical(&self) -> Option<&Categorical> {
        match self {
            DesignVariable::Categorical(c) => Some(c),
            DesignVariable::Continuous(_) => None,
        }
    }

    pub fn as_continuous(&self) -> Option<&Continuous> {
        match self {
            DesignVariable::Continuous(c) => Some(c),
            DesignVariable::Categorical(_) => None,
        }
    }

    /// Values restricted to the given sample rows. Categorical level lists are kept.
    pub fn select(&self, rows: &[usize]) -> DesignVariable {
        match self {
            DesignVariable::Categorical(c) => DesignVariable::Categorical(Categorical {
                name: c.name.clone(),
                levels: c.levels.clone(),
                codes: rows.iter().map(|&r| c.codes[r]).collect(),
            }),
            DesignVariable::Continuous(c) => DesignVariable::Continuous(Continuous {
                name: c.name.clone(),
                values: rows.iter().map(|&r| c.values[r]).collect(),
            }),
        }
    }

    /// Textual value of one sample, as it would appear in a design CSV.
    pub fn display_value(&self, row: usize) -> String {
        match self {
            DesignVariable::Categorical(c) => c.levels[c.codes[row]].clone(),
            DesignVariable::Continuous(c) => format_f64(c.values[row]),
        }
    }
}

impl Categorical {
    /// Level indices that actually occur, in declared order.
    pub fn observed_levels(&self) -> Vec<usize> {
        let mut seen = alloc::vec![false; self.levels.len()];
        for &c in &self.codes {
            seen[c] = true;
        }
        (0..self.levels.len()).filter(|&l| seen[l]).collect()
    }
}

/// Shortest decimal text that round-trips the value.
pub fn format_f64(v: f64) -> String {
    alloc::format!("{v}")
}

/// Design variables keyed by their own sample id column, before alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignTable {
    sample_ids: Vec<String>,
    variables: Vec<DesignVariable>,
}

impl DesignTable {
    pub fn new(sample_ids: Vec<String>, variables: Vec<DesignVariable>) -> Result<Self> {
        if sample_ids.is_empty() {
            return Err(GemError::Empty("design table"));
        }
        check_unique(&sample_ids).map_err(GemError::DuplicateSampleId)?;
        let names: Vec<String> = variables.iter().map(|v| v.name().to_string()).collect();
        check_unique(&names).map_err(GemError::DuplicateVariableName)?;
        for v in &variables {
            if v.len() != sample_ids.len() {
                return Err(GemError::DesignLength {
                    variable: v.name().to_string(),
                    expected: sample_ids.len(),
                    found: v.len(),
                });
            }
        }
        Ok(Self {
            sample_ids,
            variables,
        })
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn variables(&self) -> &[DesignVariable] {
        &self.variables
    }
}

/// Samples removed by an alignment run with dropping allowed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DropReport {
    pub only_in_dataset: Vec<String>,
    pub only_in_design: Vec<String>,
}

impl DropReport {
    pub fn is_empty(&self) -> bool {
        self.only_in_dataset.is_empty() && self.only_in_design.is_empty()
    }
}

/// A dataset joined with design variables in dataset sample order.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedStudy {
    dataset: Dataset,
    design: Vec<DesignVariable>,
}

impl AlignedStudy {
    /// Wraps already-aligned parts. Every design variable must have one value per sample.
    pub fn new(dataset: Dataset, design: Vec<DesignVariable>) -> Result<Self> {
        let names: Vec<String> = design.iter().map(|v| v.name().to_string()).collect();
        check_unique(&names).map_err(GemError::DuplicateVariableName)?;
        for v in &design {
            if v.len() != dataset.n_samples() {
                return Err(GemError::DesignLength {
                    variable: v.name().to_string(),
                    expected: dataset.n_samples(),
                    found: v.len(),
                });
            }
        }
        Ok(Self { dataset, design })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn design(&self) -> &[DesignVariable] {
        &self.design
    }

    pub fn n_samples(&self) -> usize {
        self.dataset.n_samples()
    }

    pub fn variable(&self, name: &str) -> Result<&DesignVariable> {
        self.design
            .iter()
            .find(|v| v.name() == name)
            .ok_or_else(|| GemError::UnknownVariable(name.to_string()))
    }

    pub fn categorical(&self, name: &str) -> Result<&Categorical> {
        self.variable(name)?
            .as_categorical()
            .ok_or_else(|| GemError::ContinuousFactor(name.to_string()))
    }

    /// The design as a standalone table keyed by this study's sample ids.
    pub fn design_table(&self) -> DesignTable {
        DesignTable {
            sample_ids: self.dataset.sample_ids.clone(),
            variables: self.design.clone(),
        }
    }

    pub fn select_samples(&self, rows: &[usize]) -> AlignedStudy {
        AlignedStudy {
            dataset: self.dataset.select_samples(rows),
            design: self.design.iter().map(|v| v.select(rows)).collect(),
        }
    }

    /// Same design, replacement response values (used for ER matrices).
    pub fn with_response(&self, y: Matrix) -> Result<AlignedStudy> {
        Ok(AlignedStudy {
            dataset: self.dataset.with_response(y)?,
            design: self.design.clone(),
        })
    }
}

/// Joins a dataset with a design table by sample id, in dataset order.
///
/// Samples present on only one side are an error unless `allow_drop` is set,
/// in which case they are removed and listed in the returned report.
pub fn align(
    dataset: &Dataset,
    design: &DesignTable,
    allow_drop: bool,
) -> Result<(AlignedStudy, DropReport)> {
    let index: BTreeMap<&str, usize> = design
        .sample_ids
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let dataset_ids: BTreeSet<&str> = dataset.sample_ids.iter().map(String::as_str).collect();

    let mut keep_rows = Vec::new();
    let mut design_rows = Vec::new();
    let mut report = DropReport::default();
    for (row, id) in dataset.sample_ids.iter().enumerate() {
        match index.get(id.as_str()) {
            Some(&d) => {
                keep_rows.push(row);
                design_rows.push(d);
            }
            None => report.only_in_dataset.push(id.clone()),
        }
    }
    report.only_in_design = design
        .sample_ids
        .iter()
        .filter(|id| !dataset_ids.contains(id.as_str()))
        .cloned()
        .collect();

    if keep_rows.is_empty() {
        return Err(GemError::NoOverlap);
    }
    if !report.is_empty() && !allow_drop {
        return Err(GemError::UnmatchedSamples {
            only_in_dataset: report.only_in_dataset,
            only_in_design: report.only_in_design,
        });
    }
    let study = AlignedStudy {
        dataset: dataset.select_samples(&keep_rows),
        design: design.variables.iter().map(|v| v.select(&design_rows)).collect(),
    };
    Ok((study, report))
}

/// One cross-classification cell of a frequency table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyCell {
    pub levels: Vec<String>,
    pub count: usize,
}

/// Counts of samples per combination of categorical factor levels. Cells are
/// ordered by the declared level order, last factor varying fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    pub factors: Vec<String>,
    pub cells: Vec<FrequencyCell>,
    pub total: usize,
}

impl FrequencyTable {
    pub fn count(&self, levels: &[&str]) -> Option<usize> {
        self.cells
            .iter()
            .find(|c| c.levels.iter().map(String::as_str).eq(levels.iter().copied()))
            .map(|c| c.count)
    }
}

/// Enumerates the full cross-product of level indices, last factor fastest.
pub(crate) fn cross_product(sizes: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = sizes.iter().product();
    let mut out = Vec::with_capacity(total);
    if sizes.is_empty() {
        return out;
    }
    let mut current = alloc::vec![0usize; sizes.len()];
    for _ in 0..total {
        out.push(current.clone());
        for k in (0..sizes.len()).rev() {
            current[k] += 1;
            if current[k] < sizes[k] {
                break;
            }
            current[k] = 0;
        }
    }
    out
}

/// Frequency of every cross-classification cell of `factors`, zero cells included.
/// A study without samples yields a table with no cells.
pub fn summarize_design(study: &AlignedStudy, factors: &[&str]) -> Result<FrequencyTable> {
    if factors.is_empty() {
        return Err(GemError::InvalidParameter("empty factor list".into()));
    }
    let cats = factors
        .iter()
        .map(|f| study.categorical(f))
        .collect::<Result<Vec<_>>>()?;
    let names = factors.iter().map(|f| f.to_string()).collect();
    if study.n_samples() == 0 {
        return Ok(FrequencyTable {
            factors: names,
            cells: Vec::new(),
            total: 0,
        });
    }
    let sizes: Vec<usize> = cats.iter().map(|c| c.levels.len()).collect();
    let combos = cross_product(&sizes);
    let mut counts = alloc::vec![0usize; combos.len()];
    for i in 0..study.n_samples() {
        let mut flat = 0;
        for (c, &size) in cats.iter().zip(&sizes) {
            flat = flat * size + c.codes[i];
        }
        counts[flat] += 1;
    }
    let cells = combos
        .into_iter()
        .zip(counts)
        .map(|(combo, count)| FrequencyCell {
            levels: combo
                .iter()
                .zip(&cats)
                .map(|(&l, c)| c.levels[l].clone())
                .collect(),
            count,
        })
        .collect();
    Ok(FrequencyTable {
        factors: names,
        cells,
        total: study.n_samples(),
    })
}
