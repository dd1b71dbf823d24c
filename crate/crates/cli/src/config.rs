//! Run configuration: a JSON file, optionally overridden flag by flag.

use std::fs;
use std::path::{Path, PathBuf};

use gem_core::pls::{PlsOptions, PreprocessOptions};
use gem_core::validation::{CvScheme, CvScope};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io::{Kind, Schema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    #[default]
    Loo,
    Kfold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    /// Cross-validate PLS on ER values from one GLM fit to all samples.
    #[default]
    StepTwoOnly,
    /// Refit the GLM inside every training fold.
    FullPipeline,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvConfig {
    #[serde(default)]
    pub scheme: SchemeKind,
    /// Number of folds for `kfold`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default)]
    pub scope: Scope,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CiConfig {
    pub group: String,
    pub target: String,
}

fn default_components() -> usize {
    2
}

fn default_alpha() -> f64 {
    0.05
}

fn default_gamma() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub response: Option<PathBuf>,
    pub design: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    /// Design variables entering the GLM; each gets its own ER branch.
    #[serde(default)]
    pub variables: Vec<String>,
    #[serde(default = "default_components")]
    pub components: usize,
    #[serde(default)]
    pub cv: CvConfig,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub seed: u64,
    /// Never echoed into the manifest, so runs into different directories compare equal.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub allow_drop: bool,
    #[serde(default)]
    pub impute_missing: bool,
    #[serde(default)]
    pub unit_variance: bool,
    /// Factors crossed by `summarize`.
    #[serde(default)]
    pub summary_factors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci: Option<CiConfig>,
    #[serde(default)]
    pub means_factors: Vec<String>,
    /// Response variables to summarize as box plots over the means categories.
    #[serde(default)]
    pub box_variables: Vec<String>,
    /// Record wall-clock step timings in the manifest (makes it run-dependent).
    #[serde(default)]
    pub timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

/// Flag values that override the config file when present.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// JSON run configuration; relative paths inside it resolve against its directory.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Response CSV: sample id column, then one column per variable.
    #[arg(long)]
    pub response: Option<PathBuf>,
    /// Design CSV: sample id column, then one column per design variable.
    #[arg(long)]
    pub design: Option<PathBuf>,
    /// JSON declaring each design column as categorical (with levels) or continuous.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Comma-separated design variables for the GLM.
    #[arg(long, value_delimiter = ',')]
    pub variables: Option<Vec<String>>,
    /// PLS components (default 2).
    #[arg(long)]
    pub components: Option<usize>,
    #[arg(long, value_enum)]
    pub cv: Option<SchemeKind>,
    /// Number of folds for --cv kfold.
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long, value_enum)]
    pub scope: Option<Scope>,
    /// Jackknife significance level (default 0.05).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Confidence level of the difference intervals (default 0.95).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Seed for the k-fold shuffle.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Drop samples present in only one of the response and design files.
    #[arg(long)]
    pub allow_drop: bool,
    /// Replace non-numeric response cells by their column mean.
    #[arg(long)]
    pub impute_missing: bool,
    /// Scale ER columns to unit variance before PLS.
    #[arg(long)]
    pub unit_variance: bool,
    /// Factors to cross-tabulate (summarize).
    #[arg(long, value_delimiter = ',')]
    pub factors: Option<Vec<String>>,
    /// Factor whose levels each get their own intervals.
    #[arg(long)]
    pub ci_group: Option<String>,
    /// Two-level factor whose difference (second minus first level) is estimated.
    #[arg(long)]
    pub ci_target: Option<String>,
    /// Factors whose crossed categories get mean tables.
    #[arg(long, value_delimiter = ',')]
    pub means_factors: Option<Vec<String>>,
    /// Response variables to summarize as box plots.
    #[arg(long, value_delimiter = ',')]
    pub box_variables: Option<Vec<String>>,
    /// Record step timings in the manifest.
    #[arg(long)]
    pub timings: bool,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.response, &mut cfg.design, &mut cfg.schema, &mut cfg.out]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// The config file named by `o.config` (or defaults), with flags applied on top.
    pub fn resolve(o: &Overrides) -> Result<Self> {
        let mut cfg = match &o.config {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        macro_rules! take {
            ($field:ident) => {
                if let Some(v) = &o.$field {
                    cfg.$field = Some(v.clone());
                }
            };
        }
        take!(response);
        take!(design);
        take!(schema);
        take!(out);
        if let Some(v) = &o.variables {
            cfg.variables = non_empty(v);
        }
        if let Some(v) = o.components {
            cfg.components = v;
        }
        if let Some(v) = o.cv {
            cfg.cv.scheme = v;
        }
        if let Some(v) = o.folds {
            cfg.cv.k = Some(v);
        }
        if let Some(v) = o.scope {
            cfg.cv.scope = v;
        }
        if let Some(v) = o.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = o.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = o.seed {
            cfg.seed = v;
        }
        cfg.allow_drop |= o.allow_drop;
        cfg.impute_missing |= o.impute_missing;
        cfg.unit_variance |= o.unit_variance;
        cfg.timings |= o.timings;
        if let Some(v) = &o.factors {
            cfg.summary_factors = non_empty(v);
        }
        match (&o.ci_group, &o.ci_target) {
            (Some(group), Some(target)) => {
                cfg.ci = Some(CiConfig {
                    group: group.clone(),
                    target: target.clone(),
                })
            }
            (None, None) => {}
            _ => return Err(CliError::Config("--ci-group and --ci-target go together".into())),
        }
        if let Some(v) = &o.means_factors {
            cfg.means_factors = non_empty(v);
        }
        if let Some(v) = &o.box_variables {
            cfg.box_variables = non_empty(v);
        }
        Ok(cfg)
    }

    pub fn out_dir(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::Config("no output directory (`out` or --out)".into()))
    }

    pub fn input(&self, which: &str) -> Result<&Path> {
        let p = match which {
            "response" => &self.response,
            "design" => &self.design,
            _ => &self.schema,
        };
        p.as_deref()
            .ok_or_else(|| CliError::Config(format!("no {which} file given")))
    }

    pub fn scheme(&self) -> CvScheme {
        let base = match self.cv.scheme {
            SchemeKind::Loo => CvScheme::leave_one_out(),
            SchemeKind::Kfold => CvScheme::k_fold(self.cv.k.unwrap_or(0), self.seed),
        };
        base.with_scope(match self.cv.scope {
            Scope::StepTwoOnly => CvScope::StepTwoOnly,
            Scope::FullPipeline => CvScope::FullPipeline,
        })
    }

    pub fn pls_options(&self) -> PlsOptions {
        PlsOptions {
            x: PreprocessOptions {
                center: true,
                unit_variance: self.unit_variance,
            },
            ..PlsOptions::default()
        }
    }

    /// Checks everything that can be checked from the config and schema alone.
    pub fn validate_gem(&self, schema: &Schema) -> Result<()> {
        if self.variables.is_empty() {
            return Err(CliError::Config("no design variables listed".into()));
        }
        for (i, v) in self.variables.iter().enumerate() {
            if !schema.contains_key(v) {
                return Err(CliError::Config(format!("design variable `{v}` is not in the schema")));
            }
            if self.variables[..i].contains(v) {
                return Err(CliError::Config(format!("design variable `{v}` listed twice")));
            }
        }
        if self.components == 0 {
            return Err(CliError::Config("components must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Config(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(CliError::Config(format!("gamma {} outside (0, 1)", self.gamma)));
        }
        match (self.cv.scheme, self.cv.k) {
            (SchemeKind::Kfold, None) => return Err(CliError::Config("k-fold needs `k` (--folds)".into())),
            (SchemeKind::Kfold, Some(k)) if k < 3 => {
                return Err(CliError::Config("the jackknife needs at least 3 folds".into()))
            }
            _ => {}
        }
        if let Some(ci) = &self.ci {
            categorical(schema, &ci.group)?;
            categorical(schema, &ci.target)?;
            if ci.group == ci.target {
                return Err(CliError::Config("CI group and target factors must differ".into()));
            }
        }
        for f in &self.means_factors {
            categorical(schema, f)?;
        }
        if !self.box_variables.is_empty() && self.means_factors.is_empty() {
            return Err(CliError::Config("box plots are grouped by `means_factors`, which is empty".into()));
        }
        Ok(())
    }

    pub fn validate_summary(&self, schema: &Schema) -> Result<()> {
        if self.summary_factors.is_empty() {
            return Err(CliError::Config("EmptyFactorList: no factors to summarize".into()));
        }
        for f in &self.summary_factors {
            categorical(schema, f)?;
        }
        Ok(())
    }
}

/// Drops blank entries, so `--factors ''` means an empty list.
fn non_empty(list: &[String]) -> Vec<String> {
    list.iter().filter(|s| !s.trim().is_empty()).cloned().collect()
}

fn categorical(schema: &Schema, name: &str) -> Result<()> {
    match schema.get(name) {
        None => Err(CliError::Config(format!("factor `{name}` is not in the schema"))),
        Some(c) if c.kind != Kind::Categorical => {
            Err(CliError::Config(format!("factor `{name}` is continuous, not categorical")))
        }
        Some(_) => Ok(()),
    }
}
