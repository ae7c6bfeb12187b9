//! Trials, datasets and the on-disk manifest format.
//!
//! A dataset is a directory holding `manifest.json` plus one raw payload
//! per trial: little-endian `f32`, row-major `C×T`. Trajectories (when
//! present) are single-channel `f32` series in the same encoding.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const MANIFEST_VERSION: u32 = 1;

/// One multichannel epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EegTrial {
    /// `C×T`
    pub data: Matrix,
    pub label: usize,
    pub subject: String,
    pub sampling_rate: f64,
    pub onset_sample: Option<usize>,
}

impl EegTrial {
    pub fn n_channels(&self) -> usize {
        self.data.rows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.cols()
    }

    fn with_data(&self, data: Matrix) -> EegTrial {
        EegTrial {
            data,
            label: self.label,
            subject: self.subject.clone(),
            sampling_rate: self.sampling_rate,
            onset_sample: self.onset_sample,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSet {
    pub trials: Vec<EegTrial>,
    pub channel_names: Vec<String>,
    pub class_names: Vec<String>,
    pub dataset_id: String,
}

impl TrialSet {
    /// Checks the shared-shape invariants.
    pub fn validate(&self) -> Result<()> {
        let first = self
            .trials
            .first()
            .ok_or_else(|| Error::Data("empty dataset".into()))?;
        let (c, t, fs) = (first.n_channels(), first.n_samples(), first.sampling_rate);
        if !(fs > 0.0) {
            return Err(Error::Data(format!("sampling rate {fs} must be positive")));
        }
        if !self.channel_names.is_empty() && self.channel_names.len() != c {
            return Err(Error::Data(format!(
                "{} channel names for {c}-channel trials",
                self.channel_names.len()
            )));
        }
        for (i, tr) in self.trials.iter().enumerate() {
            if tr.n_channels() != c || tr.n_samples() != t {
                return Err(Error::Data(format!(
                    "trial {i} is {}x{}, expected {c}x{t}",
                    tr.n_channels(),
                    tr.n_samples()
                )));
            }
            if tr.sampling_rate != fs {
                return Err(Error::Data(format!(
                    "trial {i} has a different sampling rate"
                )));
            }
            if tr.label >= self.class_names.len() {
                return Err(Error::Data(format!(
                    "trial {i} label {} out of range",
                    tr.label
                )));
            }
        }
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_channels(&self) -> usize {
        self.trials.first().map_or(0, EegTrial::n_channels)
    }

    pub fn n_samples(&self) -> usize {
        self.trials.first().map_or(0, EegTrial::n_samples)
    }

    pub fn sampling_rate(&self) -> f64 {
        self.trials.first().map_or(0.0, |t| t.sampling_rate)
    }

    pub fn labels(&self) -> Vec<usize> {
        self.trials.iter().map(|t| t.label).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for t in &self.trials {
            counts[t.label] += 1;
        }
        counts
    }

    /// Keeps only trials of `classes`, relabelled `0..classes.len()` in the
    /// given order.
    pub fn restrict_classes(&self, classes: &[usize]) -> TrialSet {
        let trials = self
            .trials
            .iter()
            .filter_map(|t| {
                classes.iter().position(|&c| c == t.label).map(|new| {
                    let mut t = t.clone();
                    t.label = new;
                    t
                })
            })
            .collect();
        TrialSet {
            trials,
            channel_names: self.channel_names.clone(),
            class_names: classes
                .iter()
                .map(|&c| self.class_names[c].clone())
                .collect(),
            dataset_id: self.dataset_id.clone(),
        }
    }

    /// Applies `f` to every trial.
    pub fn try_map(&self, f: impl Fn(&EegTrial) -> Result<EegTrial>) -> Result<TrialSet> {
        Ok(TrialSet {
            trials: self.trials.iter().map(f).collect::<Result<_>>()?,
            channel_names: self.channel_names.clone(),
            class_names: self.class_names.clone(),
            dataset_id: self.dataset_id.clone(),
        })
    }
}

/// Per-channel z-normalisation with the population standard deviation.
pub fn znormalize(trial: &EegTrial) -> Result<EegTrial> {
    Ok(trial.with_data(znormalize_rows(&trial.data)?))
}

/// Row-wise z-normalisation of a `C×T` matrix.
pub fn znormalize_rows(data: &Matrix) -> Result<Matrix> {
    let mut data = data.clone();
    let t = data.cols() as f64;
    for ch in 0..data.rows() {
        let row = data.row_mut(ch);
        let mean = row.iter().sum::<f64>() / t;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t;
        let sd = var.sqrt();
        if !(sd > 0.0) || !sd.is_finite() {
            return Err(Error::ZeroVariance { channel: ch });
        }
        for v in row.iter_mut() {
            *v = (*v - mean) / sd;
        }
    }
    Ok(data)
}

/// Crops `[center − round(pre·fs), center + round(post·fs))`.
pub fn extract_window(
    trial: &EegTrial,
    center_sample: usize,
    pre_seconds: f64,
    post_seconds: f64,
) -> Result<EegTrial> {
    let fs = trial.sampling_rate;
    if pre_seconds < 0.0 || post_seconds < 0.0 || pre_seconds + post_seconds <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "window ({pre_seconds}, {post_seconds}) s is empty or negative"
        )));
    }
    let pre = (pre_seconds * fs).round() as usize;
    let post = (post_seconds * fs).round() as usize;
    if pre > center_sample || center_sample + post > trial.n_samples() {
        return Err(Error::Data(format!(
            "window [{}{}, {}) outside recording of {} samples",
            if pre > center_sample { "-" } else { "" },
            center_sample.abs_diff(pre),
            center_sample + post,
            trial.n_samples()
        )));
    }
    let start = center_sample - pre;
    let len = pre + post;
    let data = Matrix::from_fn(trial.n_channels(), len, |c, j| trial.data[(c, start + j)]);
    let mut out = trial.with_data(data);
    out.onset_sample = Some(pre);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestTrial {
    pub file: String,
    pub label: String,
    #[serde(deserialize_with = "string_or_number")]
    pub subject: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub onset_sample: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub sampling_rate_hz: f64,
    pub channels: Vec<String>,
    pub classes: Vec<String>,
    pub trials: Vec<ManifestTrial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_id: Option<String>,
    /// Sample index of the visual cue inside every trial payload.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cue_sample: Option<usize>,
}

fn string_or_number<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Id {
        Text(String),
        Int(i64),
    }
    Ok(match Id::deserialize(d)? {
        Id::Text(s) => s,
        Id::Int(n) => n.to_string(),
    })
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Manifest> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Manifest {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Manifest {
                path: path.to_path_buf(),
                msg: format!("unsupported version {}", m.version),
            });
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serialises");
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }
}

/// A manifest together with the directory its relative paths resolve from.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: Manifest,
    pub root: PathBuf,
    pub manifest_path: PathBuf,
}

impl Dataset {
    pub fn open(path: &Path) -> Result<Dataset> {
        let manifest = Manifest::read(path)?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Dataset {
            manifest,
            root,
            manifest_path: path.to_path_buf(),
        })
    }

    pub fn resolve(&self, file: &str) -> PathBuf {
        self.root.join(file)
    }

    /// Materialises every trial.
    pub fn load_trials(&self) -> Result<TrialSet> {
        let m = &self.manifest;
        let bad = |msg: String| Error::Manifest {
            path: self.manifest_path.clone(),
            msg,
        };
        if m.trials.is_empty() {
            return Err(bad("dataset lists no trials".into()));
        }
        if m.channels.is_empty() {
            return Err(bad("empty channel list".into()));
        }
        if !(m.sampling_rate_hz > 0.0) {
            return Err(bad(format!(
                "sampling rate {} must be positive",
                m.sampling_rate_hz
            )));
        }
        let c = m.channels.len();
        let mut n_samples: Option<usize> = None;
        let mut trials = Vec::with_capacity(m.trials.len());
        for entry in &m.trials {
            let label = m.class_index(&entry.label).ok_or_else(|| {
                bad(format!(
                    "unknown label {:?} for {}",
                    entry.label, entry.file
                ))
            })?;
            let path = self.resolve(&entry.file);
            let values = read_f32_file(&path)?;
            if values.is_empty() || values.len() % c != 0 {
                return Err(Error::Data(format!(
                    "{}: {} bytes is not a whole number of {c}-channel frames",
                    path.display(),
                    values.len() * 4
                )));
            }
            let t = values.len() / c;
            match n_samples {
                None => n_samples = Some(t),
                Some(expected) if expected != t => {
                    return Err(Error::Data(format!(
                        "{}: byte length {} does not match C·T·4 = {}",
                        path.display(),
                        values.len() * 4,
                        c * expected * 4
                    )))
                }
                _ => {}
            }
            let data = Matrix::new(c, t, values.into_iter().map(f64::from).collect())?;
            trials.push(EegTrial {
                data,
                label,
                subject: entry.subject.clone(),
                sampling_rate: m.sampling_rate_hz,
                onset_sample: entry.onset_sample,
            });
        }
        let set = TrialSet {
            trials,
            channel_names: m.channels.clone(),
            class_names: m.classes.clone(),
            dataset_id: m.dataset_id.clone().unwrap_or_else(|| {
                self.manifest_path
                    .parent()
                    .and_then(|p| p.file_name())
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            }),
        };
        set.validate()?;
        Ok(set)
    }
}

/// Loads the dataset described by the manifest at `path`.
pub fn load_manifest(path: &Path) -> Result<TrialSet> {
    Dataset::open(path)?.load_trials()
}

/// Writes `set` as `dir/manifest.json` plus one payload per trial.
pub fn save_trial_set(set: &TrialSet, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let width = set.trials.len().to_string().len().max(4);
    let mut entries = Vec::with_capacity(set.trials.len());
    for (i, trial) in set.trials.iter().enumerate() {
        let file = format!("trial_{i:0width$}.f32");
        write_f32_file(&dir.join(&file), trial.data.as_slice())?;
        entries.push(ManifestTrial {
            file,
            label: set.class_names[trial.label].clone(),
            subject: trial.subject.clone(),
            onset_sample: trial.onset_sample,
            trajectory_file: None,
        });
    }
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        sampling_rate_hz: set.sampling_rate(),
        channels: set.channel_names.clone(),
        classes: set.class_names.clone(),
        trials: entries,
        dataset_id: Some(set.dataset_id.clone()),
        cue_sample: None,
    };
    let path = dir.join("manifest.json");
    manifest.write(&path)?;
    Ok(path)
}

pub fn read_f32_file(path: &Path) -> Result<Vec<f32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Data(format!(
            "{}: byte length {} is not a multiple of 4",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect())
}

/// Values are narrowed to `f32`.
pub fn write_f32_file(path: &Path, values: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(values.len() * 4);
    for &v in values {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Channel montage used for both public upper-limb datasets.
pub const STANDARD_MONTAGE: [&str; 11] = [
    "FCz", "C3", "Cz", "C4", "CPz", "F3", "Fz", "F4", "P3", "Pz", "P4",
];
