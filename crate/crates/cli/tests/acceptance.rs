//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the lines always show and timings are not skewed by
//! parallel tests.

mod common;

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use common::{gem_ok, p, synth};
use gem_core::datamodel::{summarize_design, AlignedStudy, Dataset, DesignVariable};
use gem_core::glm::{encode_design, fit_glm, Coding};
use gem_core::linalg::Matrix;
use gem_core::pls::{fit_pls, fit_pls_da, PlsOptions};
use gem_core::rng::substream;
use gem_core::synth::{generate_confounded_study, SynthSpec, COVARIATE, DISEASE, GENDER, GROUP};
use gem_core::validation::{
    confidence_intervals, cross_validate, cross_validate_gem, jackknife_significance, CvMetrics, CvScheme,
    CvScope, Response,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn normal(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

fn normal_matrix(r: &mut ChaCha8Rng, n: usize, m: usize) -> Matrix {
    Matrix::from_fn(n, m, |_, _| normal(r))
}

fn to_na(m: &Matrix) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn centered(m: &Matrix) -> Matrix {
    let means = m.column_means();
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] - means[j])
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Study with `vars` design variables cycling through two-level, continuous,
/// three-level and two-level kinds, with every level observed.
fn random_study(r: &mut ChaCha8Rng, n: usize, m: usize, vars: usize) -> AlignedStudy {
    let y = Matrix::from_fn(n, m, |_, _| 5.0 + 2.0 * normal(r));
    let ids = (0..n).map(|i| format!("S{i}")).collect();
    let names = (0..m).map(|j| format!("V{j}")).collect();
    let mut design = Vec::new();
    for k in 0..vars {
        let name = format!("d{}", k + 1);
        let v = match k % 4 {
            1 => DesignVariable::continuous(&name, (0..n).map(|_| r.random_range(18.0..51.0)).collect()),
            2 => {
                let mut labels: Vec<&str> = (0..n).map(|_| ["x", "y", "z"][r.random_range(0..3)]).collect();
                labels[..3].copy_from_slice(&["x", "y", "z"]);
                DesignVariable::categorical(&name, &labels, None)
            }
            _ => {
                let mut labels: Vec<&str> = (0..n).map(|_| if r.random_bool(0.5) { "a" } else { "b" }).collect();
                labels[k % n] = "a";
                labels[(k + 1) % n] = "b";
                DesignVariable::categorical(&name, &labels, None)
            }
        };
        design.push(v.unwrap());
    }
    AlignedStudy::new(Dataset::new(ids, names, y).unwrap(), design).unwrap()
}

fn random_studies() -> Vec<AlignedStudy> {
    (0..100)
        .map(|s| {
            let mut r = substream(s, "acceptance/studies");
            let n = r.random_range(10..=120);
            let m = r.random_range(5..=500);
            let vars = r.random_range(1..=4);
            random_study(&mut r, n, m, vars)
        })
        .collect()
}

fn decomposition_identity(studies: &[AlignedStudy]) -> Outcome {
    let start = Instant::now();
    let (mut worst_rec, mut worst_orth) = (0.0f64, 0.0f64);
    for study in studies {
        let y = study.dataset().response();
        let fit = fit_glm(encode_design(study, Coding::SumToZero).unwrap(), y).map_err(|e| e.to_string())?;
        let rec = fit.reconstruct().sub(y).unwrap().frobenius_norm() / y.frobenius_norm();
        let x = fit.model().matrix();
        let xte = x.tr_matmul(fit.residuals()).unwrap();
        let orth = xte.max_abs() / (x.frobenius_norm() * y.frobenius_norm());
        worst_rec = worst_rec.max(rec);
        worst_orth = worst_orth.max(orth);
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst_rec < 1e-10 && worst_orth < 1e-8 && secs < 30.0,
        format!("worst reconstruction {worst_rec:.2e}, worst orthogonality {worst_orth:.2e}, {secs:.1} s"),
    )
}

fn er_complement(studies: &[AlignedStudy]) -> Outcome {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for study in studies {
        let y = study.dataset().response();
        let fit = fit_glm(encode_design(study, Coding::SumToZero).unwrap(), y).unwrap();
        for d in fit.variable_names() {
            let er = fit.er_values(d).unwrap();
            let mut others = Matrix::zeros(y.nrows(), y.ncols());
            for o in fit.variable_names().filter(|o| *o != d) {
                others.add_assign(fit.effect_of(o).unwrap()).unwrap();
            }
            let gap = y.sub(&er.values).unwrap().sub(&others).unwrap().frobenius_norm() / y.frobenius_norm();
            worst = worst.max(gap);
            checked += 1;
        }
    }
    check(worst < 1e-10, format!("{checked} ER matrices, worst relative gap {worst:.2e}"))
}

fn pls_oracles() -> Outcome {
    let (mut worst_w, mut worst_ols) = (0.0f64, 0.0f64);
    for seed in 0..50 {
        let mut r = substream(seed, "acceptance/pls");
        let x = normal_matrix(&mut r, 12, 6);
        let y = normal_matrix(&mut r, 12, 3);
        let model = fit_pls(&x, &y, 1, &PlsOptions::default()).map_err(|e| e.to_string())?;
        let xty = to_na(&centered(&x)).transpose() * to_na(&centered(&y));
        let eig = (&xty * xty.transpose()).symmetric_eigen();
        let v = eig.eigenvectors.column(eig.eigenvalues.imax()).into_owned();
        let w = to_na(model.weights()).column(0).into_owned();
        worst_w = worst_w.max((&w - &v * w.dot(&v).signum()).amax());

        let y1 = y.select_columns(&[0]);
        let full = fit_pls(&x, &y1, 6, &PlsOptions::default()).map_err(|e| e.to_string())?;
        let pred = full.predict(&x, 6).unwrap().yhat;
        let xi = nalgebra::DMatrix::from_fn(12, 7, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
        let beta = (xi.transpose() * &xi).cholesky().unwrap().solve(&(xi.transpose() * to_na(&y1)));
        worst_ols = worst_ols.max((to_na(&pred) - &xi * beta).amax());
    }
    check(
        worst_w < 1e-8 && worst_ols < 1e-6,
        format!("50 problems, first-weight error {worst_w:.2e}, OLS prediction error {worst_ols:.2e}"),
    )
}

fn masking() -> Outcome {
    let start = Instant::now();
    let masked = 20;
    let spec = SynthSpec::ms_layout(200, 0.25, 2024).with_masked_variables(masked, 1.0, -0.5);
    let (study, _) = generate_confounded_study(&spec).map_err(|e| e.to_string())?;
    let y = study.dataset().response();
    let g = study.categorical(GROUP).unwrap();
    let d = study.categorical(DISEASE).unwrap();
    let mean = |gc: usize, dc: usize, j: usize| {
        let rows: Vec<usize> = (0..study.n_samples()).filter(|&i| g.codes[i] == gc && d.codes[i] == dc).collect();
        rows.iter().map(|&i| y[(i, j)]).sum::<f64>() / rows.len() as f64
    };
    // Majority cells: first group without disease against second group with it.
    let wrong_sign = (0..masked).filter(|&j| mean(1, 1, j) - mean(0, 0, j) > 0.0).count();

    let fit = fit_glm(encode_design(&study, Coding::SumToZero).unwrap(), y).unwrap();
    let er = fit.er_values(DISEASE).unwrap().values;
    let response = Response::from_variable(study.variable(DISEASE).unwrap());
    let run = cross_validate(&er, &response, &CvScheme::leave_one_out(), 2, &PlsOptions::default())
        .map_err(|e| e.to_string())?;
    let accuracy = match &run.curve.metrics {
        CvMetrics::Classification { points, .. } => points[2].accuracy,
        CvMetrics::Regression(_) => return Err("disease treated as continuous".into()),
    };
    let Response::Classes { labels, classes } = &response else {
        return Err("disease treated as continuous".into());
    };
    let model = fit_pls_da(&er, labels, classes.clone(), 2, &PlsOptions::default()).map_err(|e| e.to_string())?;
    // Orient component 1 so that it increases with disease, then read loadings.
    let t = model.scores().column(0);
    let t_mean = t.iter().sum::<f64>() / t.len() as f64;
    let orient: f64 = t.iter().zip(labels).map(|(ti, &l)| (ti - t_mean) * l as f64).sum::<f64>().signum();
    let loadings = model.x_loadings().column(0);
    let negative = (0..masked).filter(|&j| orient * loadings[j] < 0.0).count();
    let secs = start.elapsed().as_secs_f64();
    check(
        wrong_sign >= 18 && accuracy >= 0.90 && negative >= 18 && secs < 60.0,
        format!(
            "pooled wrong sign {wrong_sign}/20, LOO accuracy {accuracy:.3} at 2 components, \
             negative loadings {negative}/20, {secs:.1} s"
        ),
    )
}

fn two_cell_study(first: &[f64], second: &[f64]) -> AlignedStudy {
    let n = first.len() + second.len();
    let y = Matrix::from_fn(n, 1, |i, _| if i < first.len() { first[i] } else { second[i - first.len()] });
    let group = vec!["g"; n];
    let status: Vec<&str> = (0..n).map(|i| if i < first.len() { "ctrl" } else { "case" }).collect();
    let ids = (0..n).map(|i| format!("S{i}")).collect();
    AlignedStudy::new(
        Dataset::new(ids, vec!["V0".into()], y).unwrap(),
        vec![
            DesignVariable::categorical("group", &group, Some(vec!["g".into(), "h".into()])).unwrap(),
            DesignVariable::categorical("status", &status, None).unwrap(),
        ],
    )
    .unwrap()
}

fn ci_coverage() -> Outcome {
    let mut r = substream(7, "acceptance/ci");
    let (reps, truth) = (10_000, 0.7);
    let mut covered = 0;
    for _ in 0..reps {
        let a: Vec<f64> = (0..20).map(|_| 1.0 + 2.0 * normal(&mut r)).collect();
        let b: Vec<f64> = (0..25).map(|_| 1.0 + truth + 2.0 * normal(&mut r)).collect();
        let table = confidence_intervals(&two_cell_study(&a, &b), "group", "status", 0.95).map_err(|e| e.to_string())?;
        let diff = table.entries[0].difference.ok_or("no interval")?;
        covered += usize::from(diff.lower <= truth && truth <= diff.upper);
    }
    let coverage = covered as f64 / reps as f64;
    check((0.94..=0.96).contains(&coverage), format!("coverage {coverage:.4} over {reps} replicates"))
}

fn jackknife_calibration() -> Outcome {
    let (n, m, a, reps) = (40, 20, 2, 200u64);
    let scheme = CvScheme::leave_one_out();
    let options = PlsOptions::default();
    let (mut false_flags, mut planted) = (0, 0);
    for rep in 0..reps {
        let mut r = substream(rep, "acceptance/jackknife");
        let mut x = normal_matrix(&mut r, n, m);
        let y: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
        let response = Response::Continuous(y.clone());
        let null = jackknife_significance(&x, &response, a, &scheme, 0.05, &options).map_err(|e| e.to_string())?;
        false_flags += null.variables.iter().filter(|v| v.significant).count();
        for i in 0..n {
            x[(i, 0)] = y[i] + 0.01 * normal(&mut r);
        }
        let hit = jackknife_significance(&x, &response, a, &scheme, 0.05, &options).map_err(|e| e.to_string())?;
        planted += usize::from(hit.variables[0].significant);
    }
    let rate = false_flags as f64 / (reps as usize * m) as f64;
    check(
        (0.01..=0.12).contains(&rate) && planted as f64 >= 0.95 * reps as f64,
        format!("false-flag rate {rate:.4}, planted variable flagged {planted}/{reps}"),
    )
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = synth(tmp.path(), "data", &["--variables", "40", "--seed", "11"]);
    let config = data.join("config.json");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        gem_ok(&["gem", "--config", p(&config), "--out", p(out), "--plot"]);
    }
    let (ma, mb) = (fs::read(a.join("manifest.json")).unwrap(), fs::read(b.join("manifest.json")).unwrap());
    let files = common::files_under(&a).len();
    check(ma == mb, format!("manifests of two runs identical: {}, {files} files each", ma == mb))
}

fn no_leakage() -> Outcome {
    let spec = SynthSpec::ms_layout(12, 0.3, 5).with_masked_variables(6, 1.0, -0.5);
    let (study, _) = generate_confounded_study(&spec).map_err(|e| e.to_string())?;
    let vars = [GROUP, DISEASE, GENDER, COVARIATE];
    let options = PlsOptions::default();
    let mut compared = 0;
    for scope in [CvScope::StepTwoOnly, CvScope::FullPipeline] {
        let scheme = CvScheme::k_fold(5, 42).with_scope(scope);
        let base = cross_validate_gem(&study, &vars, DISEASE, &scheme, 2, &options).map_err(|e| e.to_string())?;
        let fit = fit_glm(encode_design(&study, Coding::SumToZero).unwrap(), study.dataset().response()).unwrap();
        for (k, test) in scheme.folds(study.n_samples()).unwrap().iter().enumerate() {
            let run = match scope {
                CvScope::FullPipeline => {
                    let mut y = study.dataset().response().clone();
                    for &i in test {
                        for j in 0..y.ncols() {
                            y[(i, j)] = 1e6 * (j as f64 + 1.0);
                        }
                    }
                    cross_validate_gem(&study.with_response(y).unwrap(), &vars, DISEASE, &scheme, 2, &options)
                }
                CvScope::StepTwoOnly => {
                    let mut er = fit.er_values(DISEASE).unwrap().values;
                    for &i in test {
                        for j in 0..er.ncols() {
                            er[(i, j)] = -1e6;
                        }
                    }
                    let response = Response::from_variable(study.variable(DISEASE).unwrap());
                    cross_validate(&er, &response, &scheme, 2, &options)
                }
            }
            .map_err(|e| e.to_string())?;
            if run.folds[k].model != base.folds[k].model {
                return Err(format!("{scope:?}: fold {k} model changed when its held-out rows were poisoned"));
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} fold models unchanged under held-out poisoning, both scopes"))
}

fn design_summaries() -> Outcome {
    let factors = [DISEASE, GENDER, GROUP];
    let mut details = Vec::new();
    for (spec, expected) in [
        (SynthSpec::ms_layout(3, 0.1, 1), [32, 7, 23, 2, 6, 22, 1, 8]),
        (SynthSpec::cis_layout(3, 0.1, 1), [20, 0, 25, 0, 11, 22, 6, 6]),
    ] {
        let (study, _) = generate_confounded_study(&spec).map_err(|e| e.to_string())?;
        let table = summarize_design(&study, &factors).map_err(|e| e.to_string())?;
        let counts: Vec<usize> = table.cells.iter().map(|c| c.count).collect();
        if counts != expected {
            return Err(format!("counts {counts:?}, expected {expected:?}"));
        }
        details.push(format!("total {}", counts.iter().sum::<usize>()));
    }
    Ok(format!("both cohort tables reproduced ({})", details.join(", ")))
}

fn main() -> ExitCode {
    let studies = random_studies();
    let criteria: [Criterion; 9] = [
        ("decomposition identity", Box::new(|| decomposition_identity(&studies))),
        ("ER complement identity", Box::new(|| er_complement(&studies))),
        ("PLS oracle equivalence", Box::new(pls_oracles)),
        ("masking reproduction", Box::new(masking)),
        ("CI coverage", Box::new(ci_coverage)),
        ("jackknife calibration", Box::new(jackknife_calibration)),
        ("determinism", Box::new(determinism)),
        ("CV no-leakage sentinel", Box::new(no_leakage)),
        ("design summary", Box::new(design_summaries)),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail})", k + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
