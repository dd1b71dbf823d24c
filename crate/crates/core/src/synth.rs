//! Deterministic generator of confounded group × disease studies with known
//! ground truth.
//!
//! The response is assembled additively: a per-variable grand mean, a group
//! effect, a within-group disease effect, a slope on a continuous covariate
//! and Gaussian noise. Ground-truth effect matrices are stored in the same
//! sum-to-zero form the GLM estimates (`±shift/2` per level, centered
//! covariate), so a noiseless fit recovers them exactly.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::datamodel::{AlignedStudy, Dataset, DesignVariable};
use crate::error::{GemError, Result};
use crate::linalg::Matrix;
use crate::rng::{streams, substream};

/// Range of the uniformly drawn covariate.
pub const COVARIATE_RANGE: (f64, f64) = (18.0, 51.0);

pub const GROUP: &str = "group";
pub const DISEASE: &str = "disease";
pub const GENDER: &str = "gender";
pub const COVARIATE: &str = "age";

/// Sample counts of one group × disease cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub total: usize,
    /// Explicit number of females; `None` alternates F, M, F, ... within the cell.
    pub females: Option<usize>,
}

impl Cell {
    pub fn balanced(total: usize) -> Self {
        Self { total, females: None }
    }

    pub fn split(females: usize, males: usize) -> Self {
        Self {
            total: females + males,
            females: Some(females),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    pub m: usize,
    /// Cells in the order (first group, first disease level), (first group,
    /// second disease level), (second group, first), (second group, second).
    pub cells: [Cell; 4],
    pub grand_mean: Vec<f64>,
    /// Shift of the second group relative to the first, per variable.
    pub group_effect: Vec<f64>,
    /// Shift of the second disease level relative to the first, within group.
    pub disease_effect: Vec<f64>,
    /// Slope on the covariate, per variable.
    pub covariate_effect: Vec<f64>,
    pub noise_sd: f64,
    pub seed: u64,
    pub group_levels: [String; 2],
    pub disease_levels: [String; 2],
    pub gender_levels: [String; 2],
}

impl SynthSpec {
    /// All effects zero, balanced gender, `m` variables with grand mean 10.
    pub fn new(cells: [Cell; 4], m: usize, noise_sd: f64, seed: u64) -> Self {
        Self {
            n: cells.iter().map(|c| c.total).sum(),
            m,
            cells,
            grand_mean: alloc::vec![10.0; m],
            group_effect: alloc::vec![0.0; m],
            disease_effect: alloc::vec![0.0; m],
            covariate_effect: alloc::vec![0.0; m],
            noise_sd,
            seed,
            group_levels: ["grA".into(), "grB".into()],
            disease_levels: ["nonMS".into(), "MS".into()],
            gender_levels: ["F".into(), "M".into()],
        }
    }

    /// Group × disease × gender counts of the MS cohort layout (101 samples).
    pub fn ms_layout(m: usize, noise_sd: f64, seed: u64) -> Self {
        Self::new(
            [Cell::split(32, 23), Cell::split(6, 1), Cell::split(7, 2), Cell::split(22, 8)],
            m,
            noise_sd,
            seed,
        )
    }

    /// Counts of the CIS cohort layout (90 samples; no controls in the second group).
    pub fn cis_layout(m: usize, noise_sd: f64, seed: u64) -> Self {
        let mut spec = Self::new(
            [Cell::split(20, 25), Cell::split(11, 6), Cell::split(0, 0), Cell::split(22, 6)],
            m,
            noise_sd,
            seed,
        );
        spec.disease_levels = ["nonCIS".into(), "CIS".into()];
        spec
    }

    /// Sets the masking pattern on the first `count` variables: the second
    /// group is shifted by `group_shift` and the second disease level by
    /// `disease_shift` within each group.
    pub fn with_masked_variables(mut self, count: usize, group_shift: f64, disease_shift: f64) -> Self {
        for j in 0..count.min(self.m) {
            self.group_effect[j] = group_shift;
            self.disease_effect[j] = disease_shift;
        }
        self
    }

    fn validate(&self) -> Result<()> {
        let total: usize = self.cells.iter().map(|c| c.total).sum();
        if total != self.n {
            return Err(GemError::InvalidParameter(format!(
                "cell counts sum to {total}, expected n = {}",
                self.n
            )));
        }
        if self.cells.iter().any(|c| c.females.is_some_and(|f| f > c.total)) {
            return Err(GemError::InvalidParameter("more females than samples in a cell".into()));
        }
        for (name, v) in [
            ("grand_mean", &self.grand_mean),
            ("group_effect", &self.group_effect),
            ("disease_effect", &self.disease_effect),
            ("covariate_effect", &self.covariate_effect),
        ] {
            if v.len() != self.m {
                return Err(GemError::InvalidParameter(format!(
                    "{name} has {} entries, expected m = {}",
                    v.len(),
                    self.m
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(GemError::InvalidParameter(format!("{name} is not finite")));
            }
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(GemError::InvalidParameter("noise_sd must be finite and non-negative".into()));
        }
        if self.n == 0 || self.m == 0 {
            return Err(GemError::Empty("synthetic study"));
        }
        Ok(())
    }
}

/// Exact components the response was assembled from.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub grand_mean: Matrix,
    pub group: Matrix,
    pub disease: Matrix,
    pub gender: Matrix,
    pub covariate: Matrix,
    pub noise: Matrix,
}

impl GroundTruth {
    /// Sum of every component except the noise.
    pub fn signal(&self) -> Matrix {
        let mut s = self.grand_mean.clone();
        for part in [&self.group, &self.disease, &self.gender, &self.covariate] {
            s.add_assign(part).expect("same shape");
        }
        s
    }

    /// Ground-truth effect matrix of a generated design variable.
    pub fn effect(&self, variable: &str) -> Option<&Matrix> {
        match variable {
            GROUP => Some(&self.group),
            DISEASE => Some(&self.disease),
            GENDER => Some(&self.gender),
            COVARIATE => Some(&self.covariate),
            _ => None,
        }
    }
}

/// Generates a study and its ground truth; a pure function of `spec`.
pub fn generate_confounded_study(spec: &SynthSpec) -> Result<(AlignedStudy, GroundTruth)> {
    spec.validate()?;
    let (n, m) = (spec.n, spec.m);

    let mut group = Vec::with_capacity(n);
    let mut disease = Vec::with_capacity(n);
    let mut gender = Vec::with_capacity(n);
    for (k, cell) in spec.cells.iter().enumerate() {
        for i in 0..cell.total {
            group.push(k / 2);
            disease.push(k % 2);
            gender.push(match cell.females {
                Some(f) => usize::from(i >= f),
                None => i % 2,
            });
        }
    }

    let (lo, hi) = COVARIATE_RANGE;
    let mut cov_rng = substream(spec.seed, streams::SYNTH_COVARIATE);
    let covariate: Vec<f64> = (0..n).map(|_| cov_rng.random_range(lo..=hi)).collect();
    let cov_mean = covariate.iter().sum::<f64>() / n as f64;

    let noise = if spec.noise_sd == 0.0 {
        Matrix::zeros(n, m)
    } else {
        let normal = Normal::new(0.0, spec.noise_sd)
            .map_err(|_| GemError::InvalidParameter("noise_sd".into()))?;
        let mut rng = substream(spec.seed, streams::SYNTH_NOISE);
        Matrix::from_fn(n, m, |_, _| normal.sample(&mut rng))
    };

    let sign = |level: usize| if level == 0 { -0.5 } else { 0.5 };
    let truth = GroundTruth {
        grand_mean: Matrix::from_fn(n, m, |_, j| spec.grand_mean[j]),
        group: Matrix::from_fn(n, m, |i, j| sign(group[i]) * spec.group_effect[j]),
        disease: Matrix::from_fn(n, m, |i, j| sign(disease[i]) * spec.disease_effect[j]),
        gender: Matrix::zeros(n, m),
        covariate: Matrix::from_fn(n, m, |i, j| (covariate[i] - cov_mean) * spec.covariate_effect[j]),
        noise,
    };
    let mut y = truth.signal();
    y.add_assign(&truth.noise)?;

    let width = format!("{n}").len().max(3);
    let ids: Vec<String> = (1..=n).map(|i| format!("S{i:0width$}")).collect();
    let names: Vec<String> = (1..=m).map(|j| format!("V{j:0w$}", w = format!("{m}").len().max(3))).collect();
    let dataset = Dataset::new(ids, names, y)?;

    let categorical = |name: &str, levels: &[String; 2], codes: &[usize]| {
        let values: Vec<&str> = codes.iter().map(|&c| levels[c].as_str()).collect();
        DesignVariable::categorical(name, &values, Some(levels.to_vec()))
    };
    let design = alloc::vec![
        categorical(GROUP, &spec.group_levels, &group)?,
        categorical(DISEASE, &spec.disease_levels, &disease)?,
        categorical(GENDER, &spec.gender_levels, &gender)?,
        DesignVariable::continuous(COVARIATE, covariate)?,
    ];
    Ok((AlignedStudy::new(dataset, design)?, truth))
}

/// Correlation between the ±1 codes of two two-level factors.
pub fn code_correlation(study: &AlignedStudy, first: &str, second: &str) -> Result<f64> {
    let a = study.categorical(first)?;
    let b = study.categorical(second)?;
    let code = |c: usize| if c == 0 { 1.0 } else { -1.0 };
    let x: Vec<f64> = a.codes.iter().map(|&c| code(c)).collect();
    let y: Vec<f64> = b.codes.iter().map(|&c| code(c)).collect();
    let mx = crate::stats::mean(&x);
    let my = crate::stats::mean(&y);
    let sxy: f64 = x.iter().zip(&y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let sxx: f64 = x.iter().map(|u| (u - mx) * (u - mx)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(GemError::InvalidParameter(format!(
            "`{first}` or `{second}` has a single observed level"
        )));
    }
    Ok(sxy / libm::sqrt(sxx * syy))
}

impl core::fmt::Display for Cell {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self.females {
            Some(fem) => write!(f, "{}F+{}M", fem, self.total - fem),
            None => write!(f, "{}", self.total),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn inconsistent_counts_rejected() {
        let mut spec = SynthSpec::ms_layout(5, 0.1, 1);
        spec.n = 100;
        assert!(matches!(
            generate_confounded_study(&spec),
            Err(GemError::InvalidParameter(_))
        ));
        let mut spec = SynthSpec::ms_layout(5, 0.1, 1);
        spec.noise_sd = -1.0;
        assert!(generate_confounded_study(&spec).is_err());
        let mut spec = SynthSpec::ms_layout(5, 0.1, 1);
        spec.group_effect.pop();
        assert!(generate_confounded_study(&spec).is_err());
    }

    #[test]
    fn balanced_gender_alternates() {
        let spec = SynthSpec::new([Cell::balanced(3); 4], 2, 0.0, 0);
        let (study, _) = generate_confounded_study(&spec).unwrap();
        let g = study.categorical(GENDER).unwrap();
        assert_eq!(&g.codes[..3], &[0, 1, 0]);
    }

    #[test]
    fn covariate_in_range() {
        let (study, _) = generate_confounded_study(&SynthSpec::ms_layout(2, 0.0, 9)).unwrap();
        let age = &study.variable(COVARIATE).unwrap().as_continuous().unwrap().values;
        assert!(age.iter().all(|a| (18.0..=51.0).contains(a)));
        assert_eq!(age.len(), 101);
    }

    #[test]
    fn cell_display() {
        assert_eq!(Cell::split(3, 2).to_string(), "3F+2M");
        assert_eq!(Cell::balanced(4).to_string(), "4");
    }
}
