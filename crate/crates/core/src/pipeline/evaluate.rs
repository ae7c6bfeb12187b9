use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{PipelineConfig, Variant, WindowAnchor, WindowSpec};
use super::folds::{split, stratified_folds, unit_seed};
use super::model::{prepare, run_split, FoldModel, PreparedData};
use crate::dataio::{extract_window, TrialSet};
use crate::error::{Error, Result};
use crate::features::{FeatureTag, TemplateBank, Training};
use crate::numerics::{corr2, Matrix};
use crate::selection::MI_BINS;
use crate::trca::{class_covariances, fit_multiclass_filter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: f64,
    pub k: usize,
    pub selected_features: Vec<String>,
    pub test_trials: Vec<usize>,
    pub predictions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset_id: String,
    pub class_names: Vec<String>,
    pub n_trials: usize,
    pub config: PipelineConfig,
    pub folds: Vec<FoldReport>,
    pub mean_accuracy: f64,
    /// Sample standard deviation across folds.
    pub std_accuracy: f64,
    /// Rows are true classes, columns predictions; each row sums to 1.
    pub confusion: Matrix,
    /// corr2 between spatially filtered 0.5–10 Hz grand averages, fitted on
    /// every trial.
    pub template_correlation: Matrix,
    pub design_notes: Vec<String>,
    pub wall_clock_s: f64,
}

/// Report plus the fitted per-fold models.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvaluationReport,
    pub models: Vec<FoldModel>,
}

pub fn kfold_evaluate(set: &TrialSet, cfg: &PipelineConfig) -> Result<EvaluationReport> {
    Ok(kfold_evaluate_detailed(set, cfg)?.report)
}

pub fn kfold_evaluate_detailed(set: &TrialSet, cfg: &PipelineConfig) -> Result<Evaluation> {
    cfg.validate()?;
    set.validate()?;
    let folds = stratified_folds(&set.labels(), cfg.folds, cfg.seed)?;
    evaluate_with_folds(set, cfg, &folds)
}

/// Cross-validation over a caller-supplied fold assignment.
pub fn evaluate_with_folds(
    set: &TrialSet,
    cfg: &PipelineConfig,
    folds: &[usize],
) -> Result<Evaluation> {
    let start = Instant::now();
    cfg.validate()?;
    set.validate()?;
    if folds.len() != set.trials.len() {
        return Err(Error::Shape(format!(
            "{} fold ids for {} trials",
            folds.len(),
            set.trials.len()
        )));
    }
    let n_folds = folds.iter().max().map_or(0, |m| m + 1);
    let data = prepare(set, cfg)?;
    let outcomes = (0..n_folds)
        .into_par_iter()
        .map(|f| {
            let (train, test) = split(folds, f);
            run_split(&data, &train, &test, cfg, unit_seed(cfg.seed, f as u64))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut pred = vec![0; data.len()];
    for o in &outcomes {
        for (&i, &p) in o.test.iter().zip(&o.predictions) {
            pred[i] = p;
        }
    }
    let accs: Vec<f64> = outcomes.iter().map(|o| o.accuracy).collect();
    let (mean, std) = mean_std(&accs);
    let confusion = confusion(&pred, &data.labels, data.n_classes)?;
    let template_correlation = full_data_correlation(&data, cfg.p)?;

    let fold_reports = outcomes
        .iter()
        .enumerate()
        .map(|(f, o)| FoldReport {
            fold: f,
            n_train: data.len() - o.test.len(),
            n_test: o.test.len(),
            accuracy: o.accuracy,
            k: o.model.k,
            selected_features: o.model.provenance.iter().map(FeatureTag::header).collect(),
            test_trials: o.test.clone(),
            predictions: o.predictions.clone(),
        })
        .collect();
    let report = EvaluationReport {
        dataset_id: set.dataset_id.clone(),
        class_names: set.class_names.clone(),
        n_trials: set.trials.len(),
        config: cfg.clone(),
        folds: fold_reports,
        mean_accuracy: mean,
        std_accuracy: std,
        confusion,
        template_correlation,
        design_notes: design_notes(cfg),
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    Ok(Evaluation {
        report,
        models: outcomes.into_iter().map(|o| o.model).collect(),
    })
}

fn design_notes(cfg: &PipelineConfig) -> Vec<String> {
    let mut notes = vec![
        "folds: stratified, seeded".to_string(),
        format!("classifier: {:?}, C = {}", cfg.classifier, cfg.c_reg).to_lowercase(),
    ];
    if cfg.selects_features() {
        notes.push(format!(
            "selection: mRMR difference form, {MI_BINS} equal-frequency bins"
        ));
        notes.push(format!(
            "k: inner {}-fold cross-validation over the grid, smallest on ties",
            cfg.inner_folds
        ));
    } else {
        notes.push("selection: none, single 0.5-10 Hz band".to_string());
    }
    notes
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Row-normalised confusion matrix; rows are the true classes.
///
/// A class with no trials keeps an all-zero row.
pub fn confusion(pred: &[usize], truth: &[usize], n_classes: usize) -> Result<Matrix> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    let mut m = Matrix::zeros(n_classes, n_classes);
    for (&p, &t) in pred.iter().zip(truth) {
        if p >= n_classes || t >= n_classes {
            return Err(Error::Data(format!("label outside 0..{n_classes}")));
        }
        m.row_mut(t)[p] += 1.0;
    }
    for r in 0..n_classes {
        let row = m.row_mut(r);
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row.iter_mut().for_each(|v| *v /= total);
        }
    }
    Ok(m)
}

/// corr2 between every pair of templates after projection by `w` (each
/// `T×P`); symmetric with a unit diagonal.
pub fn template_corr_map(templates: &TemplateBank, w: &Matrix) -> Result<Matrix> {
    let projected: Vec<Matrix> = templates.templates.iter().map(|t| t.tr_matmul(w)).collect();
    let k = projected.len();
    let mut m = Matrix::identity(k);
    for a in 0..k {
        for b in a + 1..k {
            let r = corr2(&projected[a], &projected[b])?;
            m.row_mut(a)[b] = r;
            m.row_mut(b)[a] = r;
        }
    }
    Ok(m)
}

fn full_data_correlation(data: &PreparedData, p: usize) -> Result<Matrix> {
    let band = data.bands.len() - 1;
    let all: Vec<usize> = (0..data.len()).collect();
    let training = Training::new(
        all.iter().map(|&i| &data.banked[band][i]).collect(),
        data.labels.clone(),
        all.clone(),
    );
    let templates = TemplateBank::fit(&training, data.n_classes, data.bands[band].index)?;
    let covs = (0..data.n_classes)
        .map(|k| class_covariances(&training.of_class(k), k))
        .collect::<Result<Vec<_>>>()?;
    let c = data.banked[band][0].rows();
    let filter = fit_multiclass_filter(&covs, p.min(c))?;
    template_corr_map(&templates, &filter.w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub p: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

/// mSTRCA cross-validated accuracy for each `P` in `ps`.
pub fn p_sweep(set: &TrialSet, cfg: &PipelineConfig, ps: &[usize]) -> Result<Vec<SweepPoint>> {
    let base = PipelineConfig {
        variant: Variant::Mstrca,
        ..cfg.clone()
    };
    base.validate()?;
    set.validate()?;
    let c = set.n_channels();
    if let Some(&bad) = ps.iter().find(|&&p| p == 0 || p > c) {
        return Err(Error::Config(format!("P = {bad} outside 1..={c}")));
    }
    let folds = stratified_folds(&set.labels(), base.folds, base.seed)?;
    let data = prepare(set, &base)?;
    let units: Vec<(usize, usize)> = ps
        .iter()
        .flat_map(|&p| (0..base.folds).map(move |f| (p, f)))
        .collect();
    let accs = units
        .par_iter()
        .map(|&(p, f)| {
            let cfg_p = PipelineConfig { p, ..base.clone() };
            let (train, test) = split(&folds, f);
            run_split(&data, &train, &test, &cfg_p, unit_seed(base.seed, f as u64))
                .map(|o| o.accuracy)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ps
        .iter()
        .zip(accs.chunks(base.folds))
        .map(|(&p, chunk)| {
            let (mean, std) = mean_std(chunk);
            SweepPoint {
                p,
                mean_accuracy: mean,
                std_accuracy: std,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRow {
    pub class_a: String,
    pub class_b: String,
    pub binary_accuracy: f64,
    pub multiclass_accuracy: f64,
}

/// bFBTRCA and two-class mFBTRCA accuracy for every unordered class pair.
pub fn pairwise(set: &TrialSet, cfg: &PipelineConfig) -> Result<Vec<PairwiseRow>> {
    cfg.validate()?;
    set.validate()?;
    let k = set.n_classes();
    if k < 2 {
        return Err(Error::Data(
            "pairwise analysis needs at least 2 classes".into(),
        ));
    }
    let mut rows = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            let sub = set.restrict_classes(&[a, b]);
            let run = |variant| {
                let c = PipelineConfig {
                    variant,
                    ..cfg.clone()
                };
                kfold_evaluate(&sub, &c).map(|r| r.mean_accuracy)
            };
            rows.push(PairwiseRow {
                class_a: set.class_names[a].clone(),
                class_b: set.class_names[b].clone(),
                binary_accuracy: run(Variant::Bfbtrca)?,
                multiclass_accuracy: run(Variant::Mfbtrca)?,
            });
        }
    }
    Ok(rows)
}

/// Crops every trial around its onset or the shared cue.
pub fn apply_window(
    set: &TrialSet,
    spec: &WindowSpec,
    cue_sample: Option<usize>,
) -> Result<TrialSet> {
    set.try_map(|t| {
        let centre = match spec.anchor {
            WindowAnchor::Onset => t.onset_sample.ok_or_else(|| {
                Error::Data("onset window requested but a trial has no onset".into())
            })?,
            WindowAnchor::Cue => cue_sample.ok_or_else(|| {
                Error::Data("cue window requested but the dataset has no cue sample".into())
            })?,
        };
        extract_window(t, centre, spec.pre_s, spec.post_s)
    })
}
