//! Movement-related cortical potential decoding with filter-bank
//! task-related component analysis.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod dataio;
pub mod error;
pub mod features;
pub mod filterbank;
pub mod numerics;
pub mod onset;
pub mod pipeline;
pub mod selection;
pub mod trca;

pub use classify::{Classifier, ClassifierKind};
pub use dataio::{load_manifest, EegTrial, Manifest, TrialSet};
pub use error::{Error, ErrorKind, Result};
pub use features::{FeatureTag, RhoKind, TemplateBank};
pub use numerics::Matrix;
pub use pipeline::{
    generate_synthetic, kfold_evaluate, EvaluationReport, PipelineConfig, SynthSpec, Variant,
};
pub use selection::{FeatureMatrix, FeatureRanking};
