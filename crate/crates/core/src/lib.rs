//! Envelope-material thermal-load classification.
//!
//! Monte Carlo samples of wall-material properties are turned into annual
//! thermal loads (built-in surrogate or external results), labeled low,
//! medium or high, and analysed with PCA, multi-class LDA and exhaustive
//! feature selection. Everything is deterministic for a fixed seed.

// `!(x > 0.0)` is used deliberately so that NaN fails validation too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dataset;
pub mod efs;
pub mod error;
pub mod lda;
pub mod numerics;
pub mod pca;
pub mod pipeline;
pub mod preprocess;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod surrogate;

pub use dataset::{
    builtin_material_library, builtin_system_constants, read_dataset, write_dataset, ConstantsFile,
    Dataset, FeatureId, FeatureVector, MaterialLibrary, MaterialSpec, PropertyDistribution, Row,
    SystemConstants, N_FEATURES,
};
pub use efs::{enumerate_subsets, run_efs, EfsReport, Metric, Schedule, SubsetResult};
pub use error::{Error, Result};
pub use lda::{decision_grid, fit_lda, DecisionGrid, LdaModel};
pub use numerics::{jacobi_eigen, spd_solve, EigenDecomposition, SymMatrix};
pub use pca::{fit_pca, PcaModel};
pub use pipeline::{run_all, RunConfig, RunSummary};
pub use preprocess::{
    apply_normalizer, fit_normalizer, label_dataset, label_load, split, ClassLabel, Normalizer,
    Split, SplitConfig, Thresholds,
};
pub use sampling::{generate_dataset, sample_material, SamplerConfig};
pub use surrogate::{
    annual_thermal_load, areal_heat_capacity, simulate_dataset, wall_u_value, SurrogateConfig,
};
