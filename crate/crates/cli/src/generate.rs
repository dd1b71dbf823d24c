//! The `synth` subcommand: a confounded synthetic study written in the
//! toolkit's own input formats, with its ground truth.

use std::path::PathBuf;

use gem_core::synth::{generate_confounded_study, SynthSpec, COVARIATE, DISEASE, GENDER, GROUP};
use serde_json::json;

use crate::error::{CliError, Result};
use crate::io::{json_bytes, matrix_bytes, table_bytes, ColumnSchema, Kind, Schema};
use crate::manifest::{clear_previous, Manifest, Outputs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// 101 samples with the MS cohort cell counts.
    #[default]
    Ms,
    /// 90 samples with the CIS cohort cell counts (one empty cell).
    Cis,
}

#[derive(Debug, Clone, clap::Args, serde::Serialize)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "ms")]
    pub layout: Layout,
    /// Number of response variables.
    #[arg(long, default_value_t = 200)]
    pub variables: usize,
    /// Variables carrying the masking pattern (the first ones).
    #[arg(long, default_value_t = 20)]
    pub masked: usize,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub group_shift: f64,
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    pub disease_shift: f64,
    /// Variables with a slope on the covariate (the ones after the masked block).
    #[arg(long, default_value_t = 10)]
    pub covariate_variables: usize,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub covariate_slope: f64,
    #[arg(long, default_value_t = 0.25)]
    pub noise_sd: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

pub fn spec_from(args: &SynthArgs) -> SynthSpec {
    let base = match args.layout {
        Layout::Ms => SynthSpec::ms_layout(args.variables, args.noise_sd, args.seed),
        Layout::Cis => SynthSpec::cis_layout(args.variables, args.noise_sd, args.seed),
    };
    let mut spec = base.with_masked_variables(args.masked, args.group_shift, args.disease_shift);
    let start = args.masked.min(args.variables);
    let end = (start + args.covariate_variables).min(args.variables);
    for slope in &mut spec.covariate_effect[start..end] {
        *slope = args.covariate_slope;
    }
    spec
}

pub fn run_synth(args: &SynthArgs) -> Result<Manifest> {
    let spec = spec_from(args);
    let (study, truth) =
        generate_confounded_study(&spec).map_err(|e| CliError::gem("generating the synthetic study", e))?;
    let ds = study.dataset();
    let ids = ds.sample_ids();
    let names = ds.variable_names();

    let mut out = Outputs::default();
    out.add("response.csv", matrix_bytes("sample_id", ids, names, ds.response()));
    let mut header = vec!["sample_id".to_string()];
    header.extend(study.design().iter().map(|v| v.name().to_string()));
    let rows: Vec<Vec<String>> = (0..ids.len())
        .map(|i| {
            std::iter::once(ids[i].clone())
                .chain(study.design().iter().map(|v| v.display_value(i)))
                .collect()
        })
        .collect();
    out.add("design.csv", table_bytes(&header, &rows));
    let mut schema = Schema::new();
    for v in study.design() {
        let col = match v.as_categorical() {
            Some(c) => ColumnSchema {
                kind: Kind::Categorical,
                levels: Some(c.levels.clone()),
            },
            None => ColumnSchema {
                kind: Kind::Continuous,
                levels: None,
            },
        };
        schema.insert(v.name().to_string(), col);
    }
    out.add("schema.json", json_bytes(&schema));
    out.add(
        "config.json",
        json_bytes(&json!({
            "response": "response.csv",
            "design": "design.csv",
            "schema": "schema.json",
            "variables": [GROUP, DISEASE, GENDER, COVARIATE],
            "components": 2,
            "cv": {"scheme": "loo", "scope": "step-two-only"},
            "alpha": 0.05,
            "gamma": 0.95,
            "seed": args.seed,
            "summary_factors": [DISEASE, GENDER, GROUP],
            "ci": {"group": GROUP, "target": DISEASE},
            "means_factors": [GROUP, DISEASE],
            "box_variables": [names[0]],
        })),
    );
    for (part, m) in [
        ("grand_mean", &truth.grand_mean),
        (GROUP, &truth.group),
        (DISEASE, &truth.disease),
        (GENDER, &truth.gender),
        (COVARIATE, &truth.covariate),
        ("noise", &truth.noise),
    ] {
        out.add(format!("ground_truth/{part}.csv"), matrix_bytes("sample_id", ids, names, m));
    }

    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    clear_previous(&args.out, "synth")?;
    let mut manifest = Manifest::new("synth", serde_json::to_value(args).expect("serializable"));
    out.commit(&args.out, &mut manifest.files)?;
    manifest.write(&args.out)?;
    Ok(manifest)
}
