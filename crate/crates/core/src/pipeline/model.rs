use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{PipelineConfig, Variant};
use super::folds::{split, stratified_folds, unit_seed};
use crate::classify::{Classifier, SvmConfig};
use crate::dataio::{znormalize_rows, TrialSet};
use crate::error::{Error, Result};
use crate::features::{FeatureTag, ProjectedTemplates, TemplateBank, Training};
use crate::filterbank::{make_filter_banks, BandFilter, BandSpec};
use crate::numerics::Matrix;
use crate::selection::{mrmr_rank, select_top_k, FeatureMatrix, FeatureRanking};
use crate::trca::{class_covariances, fit_binary_filter, fit_multiclass_filter, SpatialFilter};

/// Every trial band-filtered and z-normalised once per band.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub bands: Vec<BandSpec>,
    /// `banked[band][trial]`, each `C×T`.
    pub banked: Vec<Vec<Matrix>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl PreparedData {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn training(&self, band: usize, idx: &[usize]) -> Training<'_> {
        Training::new(
            idx.iter().map(|&i| &self.banked[band][i]).collect(),
            idx.iter().map(|&i| self.labels[i]).collect(),
            idx.to_vec(),
        )
    }
}

/// The bands a configuration runs on: the ten-band bank, or 0.5–10 Hz.
pub fn band_filters(cfg: &PipelineConfig, fs: f64) -> Result<Vec<BandFilter>> {
    if cfg.uses_filter_bank() {
        Ok(make_filter_banks(fs)?.bands)
    } else {
        Ok(vec![BandFilter::design(BandSpec::broadband(), fs)?])
    }
}

pub fn prepare(set: &TrialSet, cfg: &PipelineConfig) -> Result<PreparedData> {
    set.validate()?;
    let filters = band_filters(cfg, set.sampling_rate())?;
    let n = set.trials.len();
    let units: Vec<(usize, usize)> = (0..filters.len())
        .flat_map(|b| (0..n).map(move |i| (b, i)))
        .collect();
    let flat: Vec<Matrix> = units
        .par_iter()
        .map(|&(b, i)| znormalize_rows(&filters[b].filtfilt_rows(&set.trials[i].data)?))
        .collect::<Result<_>>()?;
    let mut flat = flat.into_iter();
    let banked = (0..filters.len())
        .map(|_| flat.by_ref().take(n).collect())
        .collect();
    Ok(PreparedData {
        bands: filters.iter().map(|f| f.spec).collect(),
        banked,
        labels: set.labels(),
        n_classes: set.n_classes(),
    })
}

/// Templates and spatial filter fitted on one band.
#[derive(Debug, Clone, PartialEq)]
pub struct BankModel {
    pub band: BandSpec,
    pub templates: TemplateBank,
    pub filter: SpatialFilter,
}

impl BankModel {
    fn projected(&self, binary: bool) -> Result<ProjectedTemplates> {
        if binary {
            ProjectedTemplates::binary(
                &self.templates.templates[0],
                &self.templates.templates[1],
                &self.filter.w,
                self.band.index,
            )
        } else {
            ProjectedTemplates::multiclass(&self.templates, &self.filter.w)
        }
    }
}

/// Everything fitted on one training split.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldModel {
    pub variant: Variant,
    pub p: usize,
    pub n_classes: usize,
    pub banks: Vec<BankModel>,
    /// Present when features were ranked.
    pub ranking: Option<FeatureRanking>,
    pub k: usize,
    /// Columns of the pooled feature vector fed to the classifier.
    pub selected: Vec<usize>,
    pub provenance: Vec<FeatureTag>,
    pub classifier: Classifier,
}

/// Serialisable digest of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub variant: Variant,
    pub p: usize,
    pub filters: Vec<BankFilterSummary>,
    pub k: usize,
    pub selected_features: Vec<String>,
    pub classifier: Classifier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankFilterSummary {
    pub bank: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    pub w: Matrix,
    pub eigenvalues: Vec<f64>,
}

impl FoldModel {
    /// Fits templates, filters, ranking, `k` and the classifier on the
    /// `train` rows of `data` only.
    pub fn fit(
        data: &PreparedData,
        train: &[usize],
        cfg: &PipelineConfig,
        seed: u64,
    ) -> Result<FoldModel> {
        let k_classes = data.n_classes;
        let binary = cfg.variant.is_binary();
        if binary && k_classes != 2 {
            return Err(Error::Config(format!(
                "{} needs exactly 2 classes, dataset has {k_classes}",
                cfg.variant
            )));
        }
        let banks = (0..data.bands.len())
            .into_par_iter()
            .map(|b| fit_bank(data, b, train, cfg.p, binary))
            .collect::<Result<Vec<_>>>()?;

        let features = extract(data, &banks, binary, train)?;
        let svm = SvmConfig {
            c_reg: cfg.c_reg,
            seed,
            ..SvmConfig::default()
        };
        let (ranking, k, selected) = if cfg.selects_features() {
            let k = choose_k(&features, cfg, seed)?;
            let ranking = mrmr_rank(&features)?;
            let selected = ranking.order[..k].to_vec();
            (Some(ranking), k, selected)
        } else {
            let f = features.n_features();
            (None, f, (0..f).collect())
        };
        let chosen = features.select_columns(&selected);
        let classifier = Classifier::fit(
            cfg.classifier,
            &chosen.values,
            &chosen.labels,
            k_classes,
            &svm,
        )?;
        Ok(FoldModel {
            variant: cfg.variant,
            p: cfg.p,
            n_classes: k_classes,
            banks,
            ranking,
            k,
            selected,
            provenance: chosen.provenance,
            classifier,
        })
    }

    /// Pooled features of the `rows` trials against this model's templates.
    pub fn features(&self, data: &PreparedData, rows: &[usize]) -> Result<FeatureMatrix> {
        extract(data, &self.banks, self.variant.is_binary(), rows)
    }

    /// Predicts held-out rows; rows that shaped the templates are refused.
    pub fn predict(&self, data: &PreparedData, rows: &[usize]) -> Result<Vec<usize>> {
        for bank in &self.banks {
            bank.templates.ensure_excludes(rows)?;
        }
        self.predict_allowing_overlap(data, rows)
    }

    /// Predicts any rows, including training ones.
    pub fn predict_allowing_overlap(
        &self,
        data: &PreparedData,
        rows: &[usize],
    ) -> Result<Vec<usize>> {
        let features = self.features(data, rows)?.select_columns(&self.selected);
        self.classifier.predict(&features.values)
    }

    pub fn summary(&self) -> ModelSummary {
        ModelSummary {
            variant: self.variant,
            p: self.p,
            filters: self
                .banks
                .iter()
                .map(|b| BankFilterSummary {
                    bank: b.band.index,
                    low_hz: b.band.low_hz,
                    high_hz: b.band.high_hz,
                    w: b.filter.w.clone(),
                    eigenvalues: b.filter.eigenvalues.clone(),
                })
                .collect(),
            k: self.k,
            selected_features: self.provenance.iter().map(FeatureTag::header).collect(),
            classifier: self.classifier.clone(),
        }
    }
}

fn fit_bank(
    data: &PreparedData,
    band: usize,
    train: &[usize],
    p: usize,
    binary: bool,
) -> Result<BankModel> {
    let training = data.training(band, train);
    let spec = data.bands[band];
    let templates = TemplateBank::fit(&training, data.n_classes, spec.index)?;
    let covs = (0..data.n_classes)
        .map(|k| class_covariances(&training.of_class(k), k))
        .collect::<Result<Vec<_>>>()?;
    let filter = if binary {
        fit_binary_filter(&covs[0], &covs[1], p)?
    } else {
        fit_multiclass_filter(&covs, p)?
    };
    Ok(BankModel {
        band: spec,
        templates,
        filter,
    })
}

fn extract(
    data: &PreparedData,
    banks: &[BankModel],
    binary: bool,
    rows: &[usize],
) -> Result<FeatureMatrix> {
    let projected = banks
        .iter()
        .map(|b| b.projected(binary))
        .collect::<Result<Vec<_>>>()?;
    let provenance: Vec<FeatureTag> = projected.iter().flat_map(|p| p.provenance()).collect();
    let per_bank: Vec<usize> = projected.iter().map(|p| p.n_features()).collect();
    let width: usize = per_bank.iter().sum();

    let rows_out: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|&i| {
            let mut v = Vec::with_capacity(width);
            for (b, proj) in projected.iter().enumerate() {
                v.extend(proj.score(&data.banked[b][i])?);
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let values = Matrix::from_fn(rows.len(), width, |i, j| rows_out[i][j]);
    FeatureMatrix::new(
        values,
        provenance,
        rows.iter().map(|&i| data.labels[i]).collect(),
    )
}

/// Smallest grid value with the best inner cross-validated accuracy.
///
/// Ranking and classifier are refitted on each inner training split; the
/// features themselves come from the outer training templates.
fn choose_k(features: &FeatureMatrix, cfg: &PipelineConfig, seed: u64) -> Result<usize> {
    let f = features.n_features();
    let mut grid: Vec<usize> = cfg.k_grid.iter().map(|k| k.resolve(f)).collect();
    grid.sort_unstable();
    grid.dedup();
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    let inner = stratified_folds(&features.labels, cfg.inner_folds, unit_seed(seed, 1))?;
    let n_classes = cfg_classes(features);
    let correct_per_fold: Vec<Vec<usize>> = (0..cfg.inner_folds)
        .into_par_iter()
        .map(|fold| {
            let (tr, te) = split(&inner, fold);
            let train = features.select_rows(&tr);
            let test = features.select_rows(&te);
            let ranking = mrmr_rank(&train)?;
            grid.iter()
                .map(|&k| {
                    let tr_k = select_top_k(&train, &ranking, k)?;
                    let te_k = test.select_columns(&ranking.order[..k]);
                    let svm = SvmConfig {
                        c_reg: cfg.c_reg,
                        seed: unit_seed(seed, 2 + fold as u64),
                        ..SvmConfig::default()
                    };
                    let model = Classifier::fit(
                        cfg.classifier,
                        &tr_k.values,
                        &tr_k.labels,
                        n_classes,
                        &svm,
                    )?;
                    let pred = model.predict(&te_k.values)?;
                    Ok(pred
                        .iter()
                        .zip(&te_k.labels)
                        .filter(|(a, b)| a == b)
                        .count())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut best = (grid[0], 0);
    for (gi, &k) in grid.iter().enumerate() {
        let total: usize = correct_per_fold.iter().map(|c| c[gi]).sum();
        if total > best.1 || gi == 0 {
            best = (k, total);
        }
    }
    Ok(best.0)
}

fn cfg_classes(features: &FeatureMatrix) -> usize {
    features.labels.iter().max().map_or(0, |m| m + 1)
}

/// Outcome of one train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub model: FoldModel,
    pub test: Vec<usize>,
    pub predictions: Vec<usize>,
    pub accuracy: f64,
}

/// Fits on `train` rows of `data`, predicts the `test` rows.
pub fn run_split(
    data: &PreparedData,
    train: &[usize],
    test: &[usize],
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<FoldOutcome> {
    if test.is_empty() {
        return Err(Error::Data("empty test split".into()));
    }
    let model = FoldModel::fit(data, train, cfg, seed)?;
    let predictions = model.predict(data, test)?;
    let correct = predictions
        .iter()
        .zip(test)
        .filter(|(p, &i)| **p == data.labels[i])
        .count();
    Ok(FoldOutcome {
        model,
        test: test.to_vec(),
        accuracy: correct as f64 / test.len() as f64,
        predictions,
    })
}

/// Trains on `train` and evaluates on `test`, which must share channels,
/// rate, length and class list.
pub fn run_fold(train: &TrialSet, test: &TrialSet, cfg: &PipelineConfig) -> Result<FoldOutcome> {
    cfg.validate()?;
    if train.class_names != test.class_names
        || train.channel_names != test.channel_names
        || train.sampling_rate() != test.sampling_rate()
    {
        return Err(Error::Data("train and test sets are not compatible".into()));
    }
    let mut joined = train.clone();
    joined.trials.extend(test.trials.iter().cloned());
    let counts = train.class_counts();
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Data(format!(
            "class {} missing from the training set",
            train.class_names[missing]
        )));
    }
    let data = prepare(&joined, cfg)?;
    let n = train.trials.len();
    let tr: Vec<usize> = (0..n).collect();
    let te: Vec<usize> = (n..joined.trials.len()).collect();
    let mut outcome = run_split(&data, &tr, &te, cfg, unit_seed(cfg.seed, 0))?;
    outcome.test = (0..te.len()).collect();
    Ok(outcome)
}
