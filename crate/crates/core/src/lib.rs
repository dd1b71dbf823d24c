//! General effect modelling.
//!
//! A multivariate response is decomposed by a main-effects general linear
//! model over several design variables. For each design variable an ER
//! matrix (its effect plus the full-model residuals and the intercept) is
//! formed, with every other design variable's effect removed, and analysed
//! with NIPALS partial least squares, cross-validation and jackknife
//! significance.
//!
//! The crate is `no_std` and needs only `alloc`; file formats and the
//! command-line front end live in `gem-cli`.

#![no_std]

extern crate alloc;

pub mod datamodel;
pub mod error;
pub mod glm;
pub mod linalg;
pub mod pls;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod validation;

pub use datamodel::{
    align, summarize_design, AlignedStudy, Dataset, DesignTable, DesignVariable, FrequencyTable,
};
pub use error::{ErrorClass, GemError, Result};
pub use glm::{encode_design, encode_variables, fit_glm, Coding, DofReport, ErMatrix, GlmFit, ModelMatrix};
pub use linalg::Matrix;
pub use pls::{fit_pls, fit_pls_da, PlsModel, PlsOptions, PreprocessOptions};
pub use synth::{generate_confounded_study, GroundTruth, SynthSpec};
pub use validation::{
    confidence_intervals, cross_validate, cross_validate_gem, group_means, jackknife_significance,
    CiTable, CvCurve, CvScheme, CvScope, JackknifeResult, MeansTable, Response,
};
