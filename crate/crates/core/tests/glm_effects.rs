mod common;

use common::*;
use gem_core::datamodel::DesignVariable;
use gem_core::glm::{encode_design, fit_glm, Coding, GlmFit};
use gem_core::linalg::Matrix;
use gem_core::synth::{self, generate_confounded_study, SynthSpec};
use proptest::prelude::*;

fn fit(study: &gem_core::AlignedStudy) -> GlmFit {
    fit_glm(encode_design(study, Coding::SumToZero).unwrap(), study.dataset().response()).unwrap()
}

fn check_identities(study: &gem_core::AlignedStudy) {
    let y = study.dataset().response();
    let fit = fit(study);
    assert!(rel_frobenius(&fit.reconstruct(), y) < 1e-10);

    let x = fit.model().matrix();
    let xte = x.tr_matmul(fit.residuals()).unwrap();
    assert!(xte.max_abs() / (x.frobenius_norm() * y.frobenius_norm()) < 1e-8);

    for d in fit.variable_names() {
        let er = fit.er_values(d).unwrap();
        let mut others = Matrix::zeros(y.nrows(), y.ncols());
        for o in fit.variable_names().filter(|o| *o != d) {
            others.add_assign(fit.effect_of(o).unwrap()).unwrap();
        }
        let removed = y.sub(&er.values).unwrap();
        assert!(removed.sub(&others).unwrap().frobenius_norm() <= 1e-10 * y.frobenius_norm());
    }
}

#[test]
fn exact_linear_system_is_recovered() {
    let mut r = rng(1);
    let study = random_study(&mut r, 30, 4, 3);
    let model = encode_design(&study, Coding::SumToZero).unwrap();
    let b = normal_matrix(&mut r, model.n_params(), 4);
    let y = model.matrix().matmul(&b).unwrap();
    let fit = fit_glm(model, &y).unwrap();
    assert!(fit.coefficients().sub(&b).unwrap().max_abs() < 1e-10);
    assert!(fit.residuals().max_abs() < 1e-10);
}

/// Cell means (1, 2, 3, 4) in a balanced 2 × 2 layout; the oracle works
/// directly from marginal means.
#[test]
fn balanced_two_by_two_matches_cell_means_oracle() {
    let group = ["grA", "grA", "grA", "grA", "grB", "grB", "grB", "grB"];
    let disease = ["nonMS", "nonMS", "MS", "MS", "nonMS", "nonMS", "MS", "MS"];
    let values = [1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0];
    let study = study_from(
        Matrix::column_vector(&values),
        vec![
            DesignVariable::categorical("group", &group, None).unwrap(),
            DesignVariable::categorical("disease", &disease, None).unwrap(),
        ],
    );
    let fit = fit(&study);

    let marginal = |labels: &[&str], level: &str| {
        let sel: Vec<f64> = labels
            .iter()
            .zip(&values)
            .filter(|(l, _)| **l == level)
            .map(|(_, v)| *v)
            .collect();
        sel.iter().sum::<f64>() / sel.len() as f64
    };
    let grand = values.iter().sum::<f64>() / 8.0;
    let b = fit.coefficients();
    assert!((b[(0, 0)] - 2.5).abs() < 1e-12);
    assert!((b[(0, 0)] - grand).abs() < 1e-12);
    assert!((b[(1, 0)] - (marginal(&group, "grA") - grand)).abs() < 1e-12);
    assert!((b[(2, 0)] - (marginal(&disease, "nonMS") - grand)).abs() < 1e-12);
}

#[test]
fn random_full_rank_matches_qr_oracle() {
    for seed in 0..10 {
        let mut r = rng(100 + seed);
        // Random 8×3 model matrix: intercept plus two continuous covariates.
        let c1: Vec<f64> = (0..8).map(|_| normal(&mut r)).collect();
        let c2: Vec<f64> = (0..8).map(|_| normal(&mut r)).collect();
        let y = normal_matrix(&mut r, 8, 3);
        let study = study_from(
            y.clone(),
            vec![
                DesignVariable::continuous("c1", c1).unwrap(),
                DesignVariable::continuous("c2", c2).unwrap(),
            ],
        );
        let fit = fit(&study);
        let x = to_na(fit.model().matrix());
        // Normal equations solved by Cholesky.
        let oracle = (x.transpose() * &x).cholesky().unwrap().solve(&(x.transpose() * to_na(&y)));
        let b = to_na(fit.coefficients());
        assert!((b - oracle).amax() < 1e-8, "seed {seed}");
    }
}

#[test]
fn random_fifty_by_twenty_reconstructs() {
    let mut r = rng(7);
    let study = random_study(&mut r, 50, 20, 3);
    let f = fit(&study);
    assert!(rel_frobenius(&f.reconstruct(), study.dataset().response()) < 1e-10);
    check_identities(&study);
}

#[test]
fn two_level_effect_rows_are_plus_minus_coefficient() {
    let mut r = rng(3);
    let study = random_study(&mut r, 20, 5, 2);
    let f = fit(&study);
    let c: Vec<f64> = f.coefficients().row(1).to_vec();
    let codes = &study.categorical("d1").unwrap().codes;
    let e = f.effect_of("d1").unwrap();
    for (i, &code) in codes.iter().enumerate() {
        let sign = if code == 0 { 1.0 } else { -1.0 };
        for j in 0..5 {
            assert_eq!(e[(i, j)], sign * c[j]);
        }
    }
    assert!(f.effect_of("unknown").is_err());
}

#[test]
fn zero_effect_gives_zero_matrix_and_constant_er() {
    let group = ["a", "b", "a", "b", "a", "b"];
    let y = Matrix::from_fn(6, 2, |_, j| 3.0 + j as f64);
    let study = study_from(y, vec![DesignVariable::categorical("g", &group, None).unwrap()]);
    let f = fit(&study);
    assert!(f.effect_of("g").unwrap().max_abs() < 1e-14);
    let er = f.er_values("g").unwrap();
    for j in 0..2 {
        let col = er.values.column(j);
        assert!(col.iter().all(|v| (v - col[0]).abs() < 1e-14));
    }
}

#[test]
fn ms_layout_model_matrix_and_dof() {
    let (study, _) = generate_confounded_study(&SynthSpec::ms_layout(6, 0.1, 1)).unwrap();
    let model = encode_design(&study, Coding::SumToZero).unwrap();
    assert_eq!(model.matrix().shape(), (101, 5));
    let f = fit_glm(model, study.dataset().response()).unwrap();
    let dof = f.dof_report();
    assert_eq!((dof.n, dof.p, dof.residual_dof), (101, 5, 96));
    assert!(dof.per_variable.iter().all(|v| v.columns == 1));
    assert_eq!(f.er_values("disease").unwrap().dof_consumed, 3);
}

#[test]
fn single_two_level_factor_dof() {
    let labels = ["a", "b", "a", "b", "a", "b", "a", "b", "a", "b"];
    let study = study_from(
        Matrix::from_fn(10, 1, |i, _| i as f64),
        vec![DesignVariable::categorical("f", &labels, None).unwrap()],
    );
    let dof = fit(&study).dof_report().clone();
    assert_eq!((dof.p, dof.residual_dof), (2, 8));
}

#[test]
fn noiseless_synthetic_effects_recovered_exactly() {
    for spec in [
        SynthSpec::ms_layout(12, 0.0, 5).with_masked_variables(6, 1.0, -0.5),
        SynthSpec::cis_layout(12, 0.0, 5).with_masked_variables(6, 1.0, -0.5),
    ] {
        let mut spec = spec;
        spec.covariate_effect[7] = 0.05;
        let (study, truth) = generate_confounded_study(&spec).unwrap();
        let f = fit(&study);
        let scale = study.dataset().response().frobenius_norm();
        for d in [synth::GROUP, synth::DISEASE, synth::GENDER, synth::COVARIATE] {
            let diff = f.effect_of(d).unwrap().sub(truth.effect(d).unwrap()).unwrap();
            assert!(diff.frobenius_norm() <= 1e-10 * scale, "{d}");
        }
        assert!(f.residuals().frobenius_norm() <= 1e-10 * scale);
    }
}

#[test]
fn tiny_noise_effects_converge_to_truth() {
    let spec = SynthSpec::ms_layout(8, 1e-6, 21).with_masked_variables(4, 1.0, -0.5);
    let (study, truth) = generate_confounded_study(&spec).unwrap();
    let f = fit(&study);
    for d in [synth::GROUP, synth::DISEASE, synth::GENDER, synth::COVARIATE] {
        let diff = f.effect_of(d).unwrap().sub(truth.effect(d).unwrap()).unwrap();
        assert!(diff.max_abs() < 1e-5, "{d}");
    }
}

/// Effect estimates are within a few noise standard deviations of the truth,
/// scaled by each sample's leverage (hat-matrix diagonal from an independent solve).
#[test]
fn noisy_synthetic_effects_within_leverage_tolerance() {
    let sd = 0.25;
    let mut spec = SynthSpec::ms_layout(30, sd, 8).with_masked_variables(20, 1.0, -0.5);
    spec.covariate_effect[25] = 0.04;
    let (study, truth) = generate_confounded_study(&spec).unwrap();
    let f = fit(&study);
    let x = to_na(f.model().matrix());
    let xtx_inv = (x.transpose() * &x).try_inverse().unwrap();
    let max_leverage = (0..x.nrows())
        .map(|i| (x.row(i) * &xtx_inv * x.row(i).transpose())[(0, 0)])
        .fold(0.0, f64::max);
    let tol = 6.0 * sd * max_leverage.sqrt();
    for d in [synth::GROUP, synth::DISEASE, synth::GENDER, synth::COVARIATE] {
        let diff = f.effect_of(d).unwrap().sub(truth.effect(d).unwrap()).unwrap();
        assert!(diff.max_abs() < tol, "{d}: {} vs {tol}", diff.max_abs());
    }
}

#[test]
fn disease_er_keeps_within_group_sign() {
    let spec = SynthSpec::ms_layout(40, 0.25, 2024).with_masked_variables(20, 1.0, -0.5);
    let (study, _) = generate_confounded_study(&spec).unwrap();
    let f = fit(&study);
    let er = f.er_values(synth::DISEASE).unwrap();
    let group = &study.categorical(synth::GROUP).unwrap().codes;
    let disease = &study.categorical(synth::DISEASE).unwrap().codes;
    for j in 0..20 {
        for g in 0..2 {
            let cell_mean = |d: usize| {
                let v: Vec<f64> = (0..study.n_samples())
                    .filter(|&i| group[i] == g && disease[i] == d)
                    .map(|i| er.values[(i, j)])
                    .collect();
                v.iter().sum::<f64>() / v.len() as f64
            };
            assert!(cell_mean(1) - cell_mean(0) < 0.0, "variable {j} group {g}");
        }
    }
}

#[test]
fn aliasing_is_reported_with_names() {
    let a = ["p", "q", "p", "q", "p", "q"];
    let study = study_from(
        Matrix::from_fn(6, 1, |i, _| i as f64),
        vec![
            DesignVariable::categorical("first", &a, None).unwrap(),
            DesignVariable::categorical("second", &a, None).unwrap(),
        ],
    );
    let err = fit_glm(encode_design(&study, Coding::SumToZero).unwrap(), study.dataset().response())
        .unwrap_err();
    assert_eq!(
        err,
        gem_core::GemError::AliasedDesign {
            first: "first".into(),
            second: "second".into()
        }
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decomposition_identities(seed in 0u64..10_000, n in 12usize..60, m in 1usize..30, vars in 1usize..5) {
        let mut r = rng(seed);
        let study = random_study(&mut r, n, m, vars);
        check_identities(&study);
    }

    #[test]
    fn label_swap_leaves_effects_unchanged(seed in 0u64..10_000, n in 10usize..40) {
        let mut r = rng(seed);
        let study = random_study(&mut r, n, 6, 3);
        let c = study.categorical("d1").unwrap().clone();
        let swapped_levels = vec![c.levels[1].clone(), c.levels[0].clone()];
        let values: Vec<&str> = c.codes.iter().map(|&k| c.levels[k].as_str()).collect();
        let swapped = DesignVariable::categorical("d1", &values, Some(swapped_levels)).unwrap();
        let mut design = study.design().to_vec();
        design[0] = swapped;
        let other = gem_core::AlignedStudy::new(study.dataset().clone(), design).unwrap();

        let (a, b) = (fit(&study), fit(&other));
        prop_assert_eq!(
            a.model().matrix().column(1),
            b.model().matrix().column(1).iter().map(|v| -v).collect::<Vec<_>>()
        );
        for j in 0..6 {
            prop_assert!((a.coefficients()[(1, j)] + b.coefficients()[(1, j)]).abs() < 1e-12);
        }
        let tol = 1e-12 * study.dataset().response().frobenius_norm();
        prop_assert!(a.effect_of("d1").unwrap().sub(b.effect_of("d1").unwrap()).unwrap().max_abs() < tol);
        prop_assert!(a.residuals().sub(b.residuals()).unwrap().max_abs() < tol);
        prop_assert!(a.er_values("d1").unwrap().values.sub(&b.er_values("d1").unwrap().values).unwrap().max_abs() < tol);
    }

    #[test]
    fn covariate_shift_changes_nothing_but_intercept(seed in 0u64..10_000, shift in -100.0f64..100.0) {
        let mut r = rng(seed);
        let study = random_study(&mut r, 25, 4, 2);
        let age = study.variable("d2").unwrap().as_continuous().unwrap();
        let moved = DesignVariable::continuous("d2", age.values.iter().map(|v| v + shift).collect()).unwrap();
        let other = gem_core::AlignedStudy::new(study.dataset().clone(), vec![study.design()[0].clone(), moved]).unwrap();
        let (a, b) = (fit(&study), fit(&other));
        let sum_a = a.effect_of("d2").unwrap().add(a.intercept_effect()).unwrap();
        let sum_b = b.effect_of("d2").unwrap().add(b.intercept_effect()).unwrap();
        let tol = 1e-10 * study.dataset().response().frobenius_norm();
        prop_assert!(sum_a.sub(&sum_b).unwrap().max_abs() < tol);
        prop_assert!(a.residuals().sub(b.residuals()).unwrap().max_abs() < tol);
    }

    /// Balanced full factorial: each effect equals the level's marginal mean
    /// minus the grand mean.
    #[test]
    fn balanced_design_matches_marginal_means(seed in 0u64..10_000, reps in 1usize..4) {
        let mut r = rng(seed);
        let mut f1 = Vec::new();
        let mut f2 = Vec::new();
        for a in ["a", "b"] {
            for b in ["x", "y", "z"] {
                for _ in 0..reps + 1 {
                    f1.push(a);
                    f2.push(b);
                }
            }
        }
        let n = f1.len();
        let y = normal_matrix(&mut r, n, 3);
        let study = study_from(y.clone(), vec![
            DesignVariable::categorical("f1", &f1, None).unwrap(),
            DesignVariable::categorical("f2", &f2, None).unwrap(),
        ]);
        let f = fit(&study);
        for (name, labels) in [("f1", &f1), ("f2", &f2)] {
            let e = f.effect_of(name).unwrap();
            for j in 0..3 {
                let grand = y.column(j).iter().sum::<f64>() / n as f64;
                for i in 0..n {
                    let same: Vec<f64> = (0..n).filter(|&k| labels[k] == labels[i]).map(|k| y[(k, j)]).collect();
                    let oracle = same.iter().sum::<f64>() / same.len() as f64 - grand;
                    prop_assert!((e[(i, j)] - oracle).abs() < 1e-10);
                }
            }
        }
    }
}
