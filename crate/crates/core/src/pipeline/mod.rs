//! End-to-end decoding: band preparation, per-fold fitting, cross-validated
//! evaluation and the analyses built on it.

mod config;
mod evaluate;
mod folds;
mod model;
pub mod synth;

pub use config::{
    default_k_grid, parse_k_grid, KValue, PipelineConfig, Variant, WindowAnchor, WindowSpec,
};
pub use evaluate::{
    apply_window, confusion, evaluate_with_folds, kfold_evaluate, kfold_evaluate_detailed, p_sweep,
    pairwise, template_corr_map, Evaluation, EvaluationReport, FoldReport, PairwiseRow, SweepPoint,
};
pub use folds::{split, stratified_folds, unit_rng, unit_seed};
pub use model::{
    band_filters, prepare, run_fold, run_split, BankFilterSummary, BankModel, FoldModel,
    FoldOutcome, ModelSummary, PreparedData,
};
pub use synth::{generate_synthetic, Bell, Blend, SynthSpec};
