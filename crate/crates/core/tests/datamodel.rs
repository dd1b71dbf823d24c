mod common;

use common::{random_study, rng};
use gem_core::datamodel::{align, summarize_design, DesignTable};
use gem_core::synth::{code_correlation, generate_confounded_study, SynthSpec, DISEASE, GENDER, GROUP};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn counts(study: &gem_core::AlignedStudy, factors: &[&str]) -> (Vec<usize>, usize) {
    let table = summarize_design(study, factors).unwrap();
    (table.cells.iter().map(|c| c.count).collect(), table.total)
}

#[test]
fn ms_layout_reproduces_its_frequency_table() {
    let (study, _) = generate_confounded_study(&SynthSpec::ms_layout(3, 1.0, 1)).unwrap();
    let (cells, total) = counts(&study, &[DISEASE, GENDER, GROUP]);
    assert_eq!(cells, [32, 7, 23, 2, 6, 22, 1, 8]);
    assert_eq!(total, 101);
}

#[test]
fn cis_layout_keeps_zero_cells() {
    let (study, _) = generate_confounded_study(&SynthSpec::cis_layout(3, 1.0, 1)).unwrap();
    let table = summarize_design(&study, &[DISEASE, GENDER, GROUP]).unwrap();
    assert_eq!(table.total, 90);
    assert_eq!(table.cells.len(), 8);
    assert_eq!(table.count(&["nonCIS", "F", "grA"]), Some(20));
    assert_eq!(table.count(&["nonCIS", "M", "grA"]), Some(25));
    assert_eq!(table.count(&["CIS", "F", "grA"]), Some(11));
    assert_eq!(table.count(&["CIS", "F", "grB"]), Some(22));
    assert_eq!(table.count(&["CIS", "M", "grA"]), Some(6));
    assert_eq!(table.count(&["CIS", "M", "grB"]), Some(6));
    assert_eq!(table.count(&["nonCIS", "F", "grB"]), Some(0));
    assert_eq!(table.count(&["nonCIS", "M", "grB"]), Some(0));
}

#[test]
fn group_and_disease_are_confounded() {
    let (study, _) = generate_confounded_study(&SynthSpec::ms_layout(2, 1.0, 4)).unwrap();
    let r = code_correlation(&study, GROUP, DISEASE).unwrap();
    // Closed form from the group × disease counts 55, 7, 9, 30.
    let (a, b, c, d) = (55.0f64, 7.0, 9.0, 30.0);
    let phi = (a * d - b * c) / ((a + b) * (c + d) * (a + c) * (b + d)).sqrt();
    assert!((r - phi).abs() < 1e-12);
    assert!(r > 0.5);
}

#[test]
fn realignment_after_shuffling_restores_the_study() {
    let mut r = rng(3);
    let study = random_study(&mut r, 30, 4, 3);
    let table = study.design_table();
    let mut order: Vec<usize> = (0..30).collect();
    order.shuffle(&mut r);
    let shuffled = DesignTable::new(
        order.iter().map(|&i| table.sample_ids()[i].clone()).collect(),
        table.variables().iter().map(|v| v.select(&order)).collect(),
    )
    .unwrap();
    let (aligned, report) = align(study.dataset(), &shuffled, false).unwrap();
    assert!(report.is_empty());
    assert_eq!(aligned, study);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn align_is_idempotent(seed in 0u64..10_000, n in 5usize..40, drop in 0usize..4) {
        let mut r = rng(seed);
        let study = random_study(&mut r, n, 3, 4);
        let table = study.design_table();
        let keep: Vec<usize> = (drop..n).collect();
        let partial = DesignTable::new(
            keep.iter().map(|&i| table.sample_ids()[i].clone()).collect(),
            table.variables().iter().map(|v| v.select(&keep)).collect(),
        )
        .unwrap();
        let (once, _) = align(study.dataset(), &partial, true).unwrap();
        let (twice, report) = align(once.dataset(), &once.design_table(), false).unwrap();
        prop_assert!(report.is_empty());
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn counts_sum_to_the_sample_count(seed in 0u64..10_000, n in 3usize..60) {
        let mut r = rng(seed);
        let study = random_study(&mut r, n, 2, 4);
        let categorical = ["d1", "d3", "d4"];
        for mask in 1u32..8 {
            let subset: Vec<&str> = (0..3).filter(|k| mask & (1 << k) != 0).map(|k| categorical[k]).collect();
            let table = summarize_design(&study, &subset).unwrap();
            prop_assert_eq!(table.total, n);
            prop_assert_eq!(table.cells.iter().map(|c| c.count).sum::<usize>(), n);
        }
    }
}
