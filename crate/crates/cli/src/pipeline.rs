//! The `summarize` and `gem` runs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use gem_core::datamodel::{align, format_f64, summarize_design, AlignedStudy, DesignVariable};
use gem_core::glm::{encode_variables, fit_glm, ColumnSource, FitWarning, GlmFit};
use gem_core::pls::{fit_pls, fit_pls_da, PlsModel, Preprocess};
use gem_core::stats::box_summary;
use gem_core::validation::{
    confidence_intervals, cross_validate_gem, group_means, jackknife_significance, CvCurve, CvMetrics,
    JackknifeResult, MeansTable, Response,
};
use gem_core::{Coding, Matrix};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::{fmt_opt, json_bytes, load_dataset, load_design, load_schema, matrix_bytes, table_bytes, Schema};
use crate::manifest::{clear_previous, digest_file, FileDigest, Manifest, Outputs, Status};

/// Turns a design or response variable name into a file-name fragment.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

struct Timer {
    enabled: bool,
    steps: BTreeMap<String, f64>,
}

impl Timer {
    fn time<T>(&mut self, step: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        if self.enabled {
            self.steps
                .insert(step.to_string(), start.elapsed().as_secs_f64() * 1e3);
        }
        out
    }
}

fn config_echo(cfg: &RunConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("serializable config")
}

struct Loaded {
    study: AlignedStudy,
    schema: Schema,
    inputs: Vec<FileDigest>,
    warnings: Vec<String>,
}

fn load_inputs(cfg: &RunConfig) -> Result<Loaded> {
    let response = cfg.input("response")?;
    let design = cfg.input("design")?;
    let schema_path = cfg.input("schema")?;
    let schema = load_schema(schema_path)?;
    let (dataset, imputed) = load_dataset(response, cfg.impute_missing)?;
    let table = load_design(design, &schema)?;
    let (study, dropped) =
        align(&dataset, &table, cfg.allow_drop).map_err(|e| CliError::gem("aligning response and design", e))?;
    let mut warnings = Vec::new();
    if !imputed.imputed.is_empty() {
        warnings.push(format!(
            "{} missing response cells replaced by column means",
            imputed.imputed.len()
        ));
    }
    if !dropped.is_empty() {
        warnings.push(format!(
            "dropped {} samples only in the response file {:?} and {} only in the design file {:?}",
            dropped.only_in_dataset.len(),
            dropped.only_in_dataset,
            dropped.only_in_design.len(),
            dropped.only_in_design
        ));
    }
    let inputs = [("response", response), ("design", design), ("schema", schema_path)]
        .into_iter()
        .map(|(label, p)| digest_file(p, label.to_string()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Loaded {
        study,
        schema,
        inputs,
        warnings,
    })
}

/// Writes `outputs` and the manifest; on failure writes a `failed` manifest
/// listing whatever reached the disk.
fn finish(dir: &Path, mut manifest: Manifest, outcome: Result<Outputs>) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    clear_previous(dir, &manifest.command)?;
    let mut written = Vec::new();
    let result = outcome.and_then(|outputs| outputs.commit(dir, &mut written));
    manifest.files = written;
    if let Err(e) = &result {
        manifest.status = Status::Failed;
        manifest.error = Some(e.to_string());
    }
    manifest.write(dir)?;
    result.map(|()| manifest)
}

/// Frequency table of `summary_factors`, written to `design_summary.csv`.
pub fn run_summarize(cfg: &RunConfig) -> Result<Manifest> {
    let dir = cfg.out_dir()?;
    let mut manifest = Manifest::new("summarize", config_echo(cfg));
    let outcome = (|| {
        let loaded = load_inputs(cfg)?;
        cfg.validate_summary(&loaded.schema)?;
        manifest.inputs = loaded.inputs;
        manifest.warnings = loaded.warnings;
        let factors: Vec<&str> = cfg.summary_factors.iter().map(String::as_str).collect();
        let table =
            summarize_design(&loaded.study, &factors).map_err(|e| CliError::gem("summarizing the design", e))?;
        let mut header: Vec<String> = table.factors.clone();
        header.push("count".into());
        let rows: Vec<Vec<String>> = table
            .cells
            .iter()
            .map(|c| c.levels.iter().cloned().chain([c.count.to_string()]).collect())
            .collect();
        let mut outputs = Outputs::default();
        outputs.add("design_summary.csv", table_bytes(&header, &rows));
        manifest.warnings.push(format!("total samples: {}", table.total));
        Ok(outputs)
    })();
    finish(dir, manifest, outcome)
}

fn column_label(c: &ColumnSource) -> String {
    match c {
        ColumnSource::Intercept => "(intercept)".into(),
        ColumnSource::Contrast { variable, level } => format!("{variable}:{level}"),
        ColumnSource::Covariate { variable } => variable.clone(),
    }
}

const STEP_TWO_CAVEAT: &str = "step-two-only cross-validation and the jackknife use ER values from a GLM fit \
to all samples, so held-out samples influenced the removed effects and the residuals; the GLM consumed the \
degrees of freedom listed under `dof`, and cross-validated figures are optimistic. Use scope full-pipeline \
to refit the GLM inside each fold.";

const FULL_PIPELINE_CAVEAT: &str = "cross-validation refits the GLM inside each fold; the jackknife still uses \
ER values from the GLM fit to all samples.";

/// One ER branch: everything computed for a single design variable.
struct Branch {
    name: String,
    er: Matrix,
    effect: Matrix,
    dof_consumed: usize,
    model: PlsModel,
    curve: CvCurve,
    jackknife: JackknifeResult,
}

fn fit_branch(
    cfg: &RunConfig,
    study: &AlignedStudy,
    fit: &GlmFit,
    vars: &[&str],
    name: &str,
    timer: &mut Timer,
) -> Result<Branch> {
    let ctx = |step: &str| format!("{step} for `{name}`");
    let er = fit.er_values(name).map_err(|e| CliError::gem(ctx("ER values"), e))?;
    let variable = study.variable(name).map_err(|e| CliError::gem(ctx("design lookup"), e))?;
    let response = Response::from_variable(variable);
    let options = cfg.pls_options();
    let model = timer
        .time(&format!("pls/{name}"), || match variable {
            DesignVariable::Categorical(c) => {
                fit_pls_da(&er.values, &c.codes, c.levels.clone(), cfg.components, &options)
            }
            DesignVariable::Continuous(c) => {
                fit_pls(&er.values, &Matrix::column_vector(&c.values), cfg.components, &options)
            }
        })
        .map_err(|e| CliError::gem(ctx("PLS"), e))?;
    let scheme = cfg.scheme();
    let curve = timer
        .time(&format!("cv/{name}"), || {
            cross_validate_gem(study, vars, name, &scheme, cfg.components, &options)
        })
        .map_err(|e| CliError::gem(ctx("cross-validation"), e))?
        .curve;
    let jackknife = timer
        .time(&format!("jackknife/{name}"), || {
            jackknife_significance(&er.values, &response, cfg.components, &scheme, cfg.alpha, &options)
        })
        .map_err(|e| CliError::gem(ctx("jackknife"), e))?;
    Ok(Branch {
        name: name.to_string(),
        effect: fit.effect_of(name).map_err(|e| CliError::gem(ctx("effects"), e))?.clone(),
        er: er.values,
        dof_consumed: er.dof_consumed,
        model,
        curve,
        jackknife,
    })
}

fn preprocess_json(p: &Preprocess) -> serde_json::Value {
    json!({
        "center": p.options.center,
        "unit_variance": p.options.unit_variance,
        "means": p.means,
        "scales": p.scales,
        "flagged_constant_columns": p.flagged,
    })
}

fn model_json(b: &Branch, cfg: &RunConfig) -> serde_json::Value {
    let m = &b.model;
    let ev = m.explained_variance();
    let (kind, classes) = match m.response_kind() {
        gem_core::pls::ResponseKind::Continuous => ("continuous", None),
        gem_core::pls::ResponseKind::DummyClass { classes } => ("classes", Some(classes.clone())),
    };
    let opts = cfg.pls_options();
    json!({
        "design_variable": b.name,
        "components": m.n_components(),
        "response_kind": kind,
        "classes": classes,
        "algorithm": "nipals",
        "tolerance": opts.tolerance,
        "max_iterations": opts.max_iterations,
        "x_preprocess": preprocess_json(m.x_preprocess()),
        "y_preprocess": preprocess_json(m.y_preprocess()),
        "diagnostics": m.diagnostics().iter().enumerate().map(|(a, d)| json!({
            "component": a + 1,
            "iterations": d.iterations,
            "converged": d.converged,
        })).collect::<Vec<_>>(),
        "explained_variance": {
            "x": ev.x,
            "y": ev.y,
            "x_cumulative": ev.x_cumulative,
            "y_cumulative": ev.y_cumulative,
        },
    })
}

fn comp_names(a: usize) -> Vec<String> {
    (1..=a).map(|k| format!("comp_{k}")).collect()
}

fn cv_table(curve: &CvCurve) -> Vec<u8> {
    let skipped = curve.skipped_folds.to_string();
    match &curve.metrics {
        CvMetrics::Classification { classes, points } => {
            let mut header: Vec<String> = vec!["components".into(), "accuracy".into()];
            header.extend(classes.iter().map(|c| format!("sensitivity_{c}")));
            header.push("skipped_folds".into());
            let rows: Vec<Vec<String>> = points
                .iter()
                .map(|p| {
                    let mut r = vec![p.components.to_string(), format_f64(p.accuracy)];
                    r.extend(p.sensitivity.iter().map(|s| fmt_opt(*s)));
                    r.push(skipped.clone());
                    r
                })
                .collect();
            table_bytes(&header, &rows)
        }
        CvMetrics::Regression(points) => {
            let header: Vec<String> = ["components", "rmsep", "r2", "q2", "skipped_folds"]
                .map(String::from)
                .to_vec();
            let rows: Vec<Vec<String>> = points
                .iter()
                .map(|p| {
                    vec![
                        p.components.to_string(),
                        format_f64(p.rmsep),
                        format_f64(p.r2),
                        format_f64(p.q2),
                        skipped.clone(),
                    ]
                })
                .collect();
            table_bytes(&header, &rows)
        }
    }
}

fn jackknife_table(j: &JackknifeResult, names: &[String]) -> Vec<u8> {
    let header: Vec<String> = [
        "variable",
        "coefficient",
        "mean_abs_fold_coefficient",
        "std_error",
        "statistic",
        "threshold",
        "significant",
    ]
    .map(String::from)
    .to_vec();
    let rows: Vec<Vec<String>> = j
        .variables
        .iter()
        .zip(names)
        .map(|(v, name)| {
            vec![
                name.clone(),
                format_f64(v.coefficient),
                format_f64(v.mean_abs_fold_coefficient),
                format_f64(v.std_error),
                format_f64(v.statistic),
                format_f64(j.t_threshold),
                v.significant.to_string(),
            ]
        })
        .collect();
    table_bytes(&header, &rows)
}

fn category_label(levels: &[String]) -> String {
    levels.join("-")
}

fn means_rows(source: &str, table: &MeansTable, rows: &mut Vec<Vec<String>>) {
    for (j, var) in table.variables.iter().enumerate() {
        let mut r = vec![source.to_string(), var.clone()];
        r.extend(table.means[j].iter().map(|m| fmt_opt(*m)));
        rows.push(r);
    }
}

/// Runs the full GEM pipeline and writes every output plus the manifest.
pub fn run_gem(cfg: &RunConfig) -> Result<Manifest> {
    let dir = cfg.out_dir()?;
    let mut manifest = Manifest::new("gem", config_echo(cfg));
    let outcome = compute_gem(cfg, &mut manifest);
    finish(dir, manifest, outcome)
}

fn compute_gem(cfg: &RunConfig, manifest: &mut Manifest) -> Result<Outputs> {
    let mut timer = Timer {
        enabled: cfg.timings,
        steps: BTreeMap::new(),
    };
    // Config-only checks run before the data is read.
    let schema = load_schema(cfg.input("schema")?)?;
    cfg.validate_gem(&schema)?;
    let loaded = timer.time("load", || load_inputs(cfg))?;
    manifest.inputs = loaded.inputs;
    manifest.warnings = loaded.warnings;
    let study = &loaded.study;
    let dataset = study.dataset();
    let sample_ids = dataset.sample_ids();
    let var_names = dataset.variable_names();
    for v in &cfg.box_variables {
        if !var_names.contains(v) {
            return Err(CliError::Config(format!("box variable `{v}` is not a response variable")));
        }
    }

    let vars: Vec<&str> = cfg.variables.iter().map(String::as_str).collect();
    let fit = timer.time("glm", || -> Result<GlmFit> {
        let model = encode_variables(study, &vars, Coding::SumToZero)
            .map_err(|e| CliError::gem("encoding the design", e))?;
        fit_glm(model, dataset.response()).map_err(|e| CliError::gem("fitting the GLM", e))
    })?;
    for w in fit.warnings() {
        manifest.warnings.push(match w {
            FitWarning::IllConditioned { condition_number } => {
                format!("model matrix is ill-conditioned (condition number {condition_number:e})")
            }
            FitWarning::ConstantCovariate(v) => format!("covariate `{v}` is constant; its column is all zero"),
        });
    }

    let branches = vars
        .iter()
        .map(|name| fit_branch(cfg, study, &fit, &vars, name, &mut timer))
        .collect::<Result<Vec<_>>>()?;

    let dof = fit.dof_report();
    let columns: Vec<String> = fit.model().columns().iter().map(column_label).collect();
    let dof_json = json!({
        "n": dof.n,
        "p": dof.p,
        "residual_dof": dof.residual_dof,
        "per_variable": dof.per_variable.iter().map(|v| json!({"name": v.name, "columns": v.columns})).collect::<Vec<_>>(),
        "er_dof_consumed": branches.iter().map(|b| (b.name.clone(), b.dof_consumed)).collect::<BTreeMap<_, _>>(),
        "rank": fit.rank(),
        "condition_number": fit.condition_number(),
        "coding": "sum-to-zero",
        "columns": columns,
    });
    manifest.dof = Some(dof_json.clone());
    manifest.caveats.push(
        match cfg.cv.scope {
            crate::config::Scope::StepTwoOnly => STEP_TWO_CAVEAT,
            crate::config::Scope::FullPipeline => FULL_PIPELINE_CAVEAT,
        }
        .to_string(),
    );

    let mut out = Outputs::default();
    out.add("dof.json", json_bytes(&dof_json));
    out.add("coefficients.csv", matrix_bytes("parameter", &columns, var_names, fit.coefficients()));
    out.add("residuals.csv", matrix_bytes("sample_id", sample_ids, var_names, fit.residuals()));

    for b in &branches {
        let stem = file_stem(&b.name);
        let a = b.model.n_components();
        for notice in &b.curve.notices {
            manifest.warnings.push(format!("cross-validation of `{}`: {notice}", b.name));
        }
        if !b.model.x_preprocess().flagged.is_empty() {
            manifest.warnings.push(format!(
                "ER(`{}`): {} constant columns left unscaled",
                b.name,
                b.model.x_preprocess().flagged.len()
            ));
        }
        out.add(format!("effect_{stem}.csv"), matrix_bytes("sample_id", sample_ids, var_names, &b.effect));
        out.add(format!("er_{stem}.csv"), matrix_bytes("sample_id", sample_ids, var_names, &b.er));

        let variable = study.variable(&b.name).expect("validated");
        let mut header = vec!["sample_id".to_string(), b.name.clone()];
        header.extend(comp_names(a));
        let rows: Vec<Vec<String>> = (0..sample_ids.len())
            .map(|i| {
                let mut r = vec![sample_ids[i].clone(), variable.display_value(i)];
                r.extend(b.model.scores().row(i).iter().map(|&v| format_f64(v)));
                r
            })
            .collect();
        out.add(format!("scores_{stem}.csv"), table_bytes(&header, &rows));
        out.add(
            format!("loadings_{stem}.csv"),
            matrix_bytes("variable", var_names, &comp_names(a), b.model.x_loadings()),
        );
        out.add(format!("pls_model_{stem}.json"), json_bytes(&model_json(b, cfg)));
        out.add(format!("cv_{stem}.csv"), cv_table(&b.curve));
        out.add(format!("jackknife_{stem}.csv"), jackknife_table(&b.jackknife, var_names));
    }

    if let Some(ci) = &cfg.ci {
        let table = confidence_intervals(study, &ci.group, &ci.target, cfg.gamma)
            .map_err(|e| CliError::gem("confidence intervals", e))?;
        let header: Vec<String> = [
            &*ci.group,
            "variable",
            "n_first",
            "n_second",
            "mean_first",
            "mean_second",
            "difference",
            "lower",
            "upper",
            "gamma",
            "first_level",
            "second_level",
        ]
        .map(String::from)
        .to_vec();
        let rows: Vec<Vec<String>> = table
            .entries
            .iter()
            .map(|e| {
                let d = e.difference;
                vec![
                    e.group.clone(),
                    e.variable.clone(),
                    e.n_first.to_string(),
                    e.n_second.to_string(),
                    fmt_opt(e.mean_first),
                    fmt_opt(e.mean_second),
                    fmt_opt(d.map(|d| d.estimate)),
                    fmt_opt(d.map(|d| d.lower)),
                    fmt_opt(d.map(|d| d.upper)),
                    format_f64(table.gamma),
                    table.first_level.clone(),
                    table.second_level.clone(),
                ]
            })
            .collect();
        let missing = table.entries.iter().filter(|e| e.difference.is_none()).count();
        if missing > 0 {
            manifest.warnings.push(format!(
                "confidence intervals: {missing} group/variable cells have fewer than two samples per level"
            ));
        }
        out.add(format!("ci_{}.csv", file_stem(&ci.target)), table_bytes(&header, &rows));
    }

    if !cfg.means_factors.is_empty() {
        let factors: Vec<&str> = cfg.means_factors.iter().map(String::as_str).collect();
        let stem = factors.iter().map(|f| file_stem(f)).collect::<Vec<_>>().join("_");
        let on_y = group_means(study, dataset.response(), &factors).map_err(|e| CliError::gem("group means", e))?;
        let mut header = vec!["source".to_string(), "variable".to_string()];
        header.extend(on_y.categories.iter().map(|c| category_label(&c.levels)));
        let mut rows = Vec::new();
        means_rows("response", &on_y, &mut rows);
        for b in &branches {
            let t = group_means(study, &b.er, &factors).map_err(|e| CliError::gem("group means", e))?;
            means_rows(&format!("er_{}", b.name), &t, &mut rows);
        }
        out.add(format!("means_{stem}.csv"), table_bytes(&header, &rows));

        for v in &cfg.box_variables {
            let j = var_names.iter().position(|n| n == v).expect("checked above");
            let header: Vec<String> = ["category", "n", "min", "q1", "median", "q3", "max", "mean"]
                .map(String::from)
                .to_vec();
            let codes: Vec<Vec<usize>> = factors
                .iter()
                .map(|f| study.categorical(f).map(|c| c.codes.clone()))
                .collect::<gem_core::Result<_>>()
                .map_err(|e| CliError::gem("box summaries", e))?;
            let mut rows = Vec::new();
            for (_, cat) in on_y.present() {
                let level_idx: Vec<usize> = cat
                    .levels
                    .iter()
                    .zip(&factors)
                    .map(|(l, f)| {
                        study.categorical(f).expect("checked").levels.iter().position(|x| x == l).expect("level")
                    })
                    .collect();
                let values: Vec<f64> = (0..sample_ids.len())
                    .filter(|&i| codes.iter().zip(&level_idx).all(|(cc, &l)| cc[i] == l))
                    .map(|i| dataset.response()[(i, j)])
                    .collect();
                if let Some(s) = box_summary(&values) {
                    rows.push(vec![
                        category_label(&cat.levels),
                        s.n.to_string(),
                        format_f64(s.min),
                        format_f64(s.q1),
                        format_f64(s.median),
                        format_f64(s.q3),
                        format_f64(s.max),
                        format_f64(s.mean),
                    ]);
                }
            }
            out.add(format!("box_{}.csv", file_stem(v)), table_bytes(&header, &rows));
        }
    }

    if cfg.timings {
        manifest.timings_ms = Some(timer.steps);
    }
    Ok(out)
}
