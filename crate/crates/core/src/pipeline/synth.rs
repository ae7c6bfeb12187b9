//! Synthetic MRCP-like datasets with planted class templates.
//!
//! Each class drives a few latent sources with negative bell deflections
//! around the movement onset; a seeded mixing matrix projects them to the
//! channels. Spatially mixed 1/f noise is scaled to the requested SNR
//! (class signal power over noise power). Optional extras: per-trial onset
//! jitter, class templates blended toward another class, and cue-locked
//! sources shared by every class.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::folds::unit_rng;
use crate::dataio::{EegTrial, TrialSet, STANDARD_MONTAGE};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// `−amplitude·exp(−((t − latency)/width)²)`, with `t` in seconds from the
/// onset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bell {
    pub amplitude: f64,
    pub latency_s: f64,
    pub width_s: f64,
}

impl Bell {
    fn at(&self, t: f64) -> f64 {
        let u = (t - self.latency_s) / self.width_s;
        -self.amplitude * (-u * u).exp()
    }
}

/// Replaces class `class`'s signal by `(1 − weight)·own + weight·toward`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blend {
    pub class: usize,
    pub toward: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_classes: usize,
    pub trials_per_class: usize,
    pub n_channels: usize,
    pub n_samples: usize,
    pub sampling_rate: f64,
    /// Onset position inside the epoch.
    pub onset_s: f64,
    /// `None` means noiseless.
    pub snr_db: Option<f64>,
    pub seed: u64,
    /// Latent sources per class.
    pub n_sources: usize,
    /// Per class, one bell per source; drawn from the seed when empty.
    pub templates: Vec<Vec<Bell>>,
    pub blends: Vec<Blend>,
    /// Onsets shift uniformly within `±jitter_s`.
    pub jitter_s: f64,
    pub cue_sources: usize,
    /// Cue-source peak amplitude.
    pub cue_amplitude: f64,
    /// Noise spectrum falls as `1/f^noise_exponent`.
    pub noise_exponent: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_classes: 4,
            trials_per_class: 60,
            n_channels: 11,
            n_samples: 768,
            sampling_rate: 256.0,
            onset_s: 2.0,
            snr_db: Some(0.0),
            seed: 0,
            n_sources: 3,
            templates: Vec::new(),
            blends: Vec::new(),
            jitter_s: 0.0,
            cue_sources: 0,
            cue_amplitude: 1.0,
            noise_exponent: 1.0,
        }
    }
}

const MIXING_STREAM: u64 = 1;
const TEMPLATE_STREAM: u64 = 2;
const CUE_STREAM: u64 = 3;
const NOISE_MIX_STREAM: u64 = 4;
const TRIAL_STREAM_BASE: u64 = 1000;

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_classes < 2 {
            return bad(format!("n_classes must be ≥ 2, got {}", self.n_classes));
        }
        if self.trials_per_class < 2 {
            return bad("trials_per_class must be ≥ 2".into());
        }
        if self.n_channels == 0 || self.n_sources == 0 {
            return bad("n_channels and n_sources must be positive".into());
        }
        if self.n_samples < 64 {
            return bad(format!("n_samples {} is too short", self.n_samples));
        }
        if !(self.sampling_rate > 0.0) || !self.sampling_rate.is_finite() {
            return bad("sampling_rate must be positive".into());
        }
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return bad("snr_db must be finite; omit it for noiseless data".into());
            }
        }
        if !self.templates.is_empty() {
            if self.templates.len() != self.n_classes
                || self.templates.iter().any(|t| t.len() != self.n_sources)
            {
                return bad("templates must list n_sources bells for each class".into());
            }
            if self
                .templates
                .iter()
                .flatten()
                .any(|b| !(b.width_s > 0.0) || !b.amplitude.is_finite() || !b.latency_s.is_finite())
            {
                return bad("template bells need finite parameters and positive width".into());
            }
        }
        for b in &self.blends {
            if b.class >= self.n_classes || b.toward >= self.n_classes || b.class == b.toward {
                return bad(format!("blend {} → {} is invalid", b.class, b.toward));
            }
            if !(0.0..=1.0).contains(&b.weight) {
                return bad(format!("blend weight {} outside [0, 1]", b.weight));
            }
        }
        if !(self.jitter_s >= 0.0) || !self.noise_exponent.is_finite() {
            return bad("jitter_s must be ≥ 0 and noise_exponent finite".into());
        }
        Ok(())
    }

    /// Bells per class per source, explicit or drawn from the seed.
    pub fn class_templates(&self) -> Vec<Vec<Bell>> {
        if !self.templates.is_empty() {
            return self.templates.clone();
        }
        let mut rng = unit_rng(self.seed, TEMPLATE_STREAM);
        (0..self.n_classes)
            .map(|_| {
                (0..self.n_sources)
                    .map(|_| Bell {
                        amplitude: rng.random_range(0.5..1.5),
                        latency_s: rng.random_range(-0.8..0.4),
                        width_s: rng.random_range(0.15..0.5),
                    })
                    .collect()
            })
            .collect()
    }

    fn channel_names(&self) -> Vec<String> {
        if self.n_channels == STANDARD_MONTAGE.len() {
            STANDARD_MONTAGE.iter().map(|s| s.to_string()).collect()
        } else {
            (0..self.n_channels).map(|c| format!("ch{c}")).collect()
        }
    }
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

struct Generator<'a> {
    spec: &'a SynthSpec,
    bells: Vec<Vec<Bell>>,
    mixing: Matrix,
    cue: Option<Matrix>,
    noise_mixing: Matrix,
    noise_scale: f64,
}

impl<'a> Generator<'a> {
    fn new(spec: &'a SynthSpec) -> Self {
        let c = spec.n_channels;
        let mixing = gaussian_matrix(c, spec.n_sources, &mut unit_rng(spec.seed, MIXING_STREAM));
        let cue = (spec.cue_sources > 0).then(|| cue_signal(spec));
        let mut noise_mixing = gaussian_matrix(c, c, &mut unit_rng(spec.seed, NOISE_MIX_STREAM));
        let mut nm_norm = 0.0;
        for v in noise_mixing.as_slice() {
            nm_norm += v * v;
        }
        noise_mixing.scale_assign((c as f64 / nm_norm).sqrt());
        let mut g = Generator {
            spec,
            bells: spec.class_templates(),
            mixing,
            cue,
            noise_mixing,
            noise_scale: 0.0,
        };
        if let Some(snr) = spec.snr_db {
            let power: f64 = (0..spec.n_classes)
                .map(|k| mean_square(&g.class_signal(k, 0.0)))
                .sum::<f64>()
                / spec.n_classes as f64;
            g.noise_scale = (power / 10f64.powf(snr / 10.0)).sqrt();
        }
        g
    }

    fn own_signal(&self, class: usize, shift_s: f64) -> Matrix {
        let s = self.spec;
        let sources = Matrix::from_fn(s.n_sources, s.n_samples, |l, j| {
            let t = j as f64 / s.sampling_rate - s.onset_s - shift_s;
            self.bells[class][l].at(t)
        });
        self.mixing.matmul(&sources)
    }

    fn class_signal(&self, class: usize, shift_s: f64) -> Matrix {
        let own = self.own_signal(class, shift_s);
        match self.spec.blends.iter().find(|b| b.class == class) {
            Some(b) => own
                .scale(1.0 - b.weight)
                .add(&self.own_signal(b.toward, shift_s).scale(b.weight)),
            None => own,
        }
    }

    fn trial(&self, index: usize, class: usize) -> Result<EegTrial> {
        let s = self.spec;
        let mut rng = unit_rng(s.seed, TRIAL_STREAM_BASE + index as u64);
        let shift = if s.jitter_s > 0.0 {
            rng.random_range(-s.jitter_s..=s.jitter_s)
        } else {
            0.0
        };
        let mut data = self.class_signal(class, shift);
        if let Some(cue) = &self.cue {
            data.add_assign(cue);
        }
        if self.noise_scale > 0.0 {
            let noise = pink_noise(s.n_channels, s.n_samples, s.noise_exponent, &mut rng);
            let mut mixed = self.noise_mixing.matmul(&noise);
            let ms = mean_square(&mixed);
            mixed.scale_assign(self.noise_scale / ms.sqrt());
            data.add_assign(&mixed);
        }
        let onset = ((s.onset_s + shift) * s.sampling_rate).round().max(0.0) as usize;
        Ok(EegTrial {
            data,
            label: class,
            subject: "synthetic".into(),
            sampling_rate: s.sampling_rate,
            onset_sample: Some(onset),
        })
    }
}

/// Cue-locked sources: fixed biphasic waveforms with their own spatial
/// patterns, identical in every trial.
fn cue_signal(spec: &SynthSpec) -> Matrix {
    let mut rng = unit_rng(spec.seed, CUE_STREAM);
    let patterns = gaussian_matrix(spec.n_channels, spec.cue_sources, &mut rng);
    let duration = spec.n_samples as f64 / spec.sampling_rate;
    let waves: Vec<(f64, f64, f64, f64)> = (0..spec.cue_sources)
        .map(|_| {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            (
                sign * spec.cue_amplitude,
                rng.random_range(0.1..0.9) * duration,
                rng.random_range(0.08..0.3),
                rng.random_range(0.1..0.4),
            )
        })
        .collect();
    let sources = Matrix::from_fn(spec.cue_sources, spec.n_samples, |l, j| {
        let t = j as f64 / spec.sampling_rate;
        let (a, centre, width, lag) = waves[l];
        let u = (t - centre) / width;
        let v = (t - centre - lag) / width;
        a * ((-u * u).exp() - 0.6 * (-v * v).exp())
    });
    patterns.matmul(&sources)
}

fn mean_square(m: &Matrix) -> f64 {
    m.as_slice().iter().map(|v| v * v).sum::<f64>() / m.as_slice().len() as f64
}

/// Rows of unit-variance noise with power spectrum `∝ 1/f^exponent`.
pub fn pink_noise(rows: usize, n: usize, exponent: f64, rng: &mut ChaCha8Rng) -> Matrix {
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let mut out = Matrix::zeros(rows, n);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for r in 0..rows {
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for f in 1..=n / 2 {
            let gain = (f as f64).powf(-exponent / 2.0);
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = if 2 * f == n {
                0.0
            } else {
                StandardNormal.sample(rng)
            };
            buf[f] = Complex64::new(re * gain, im * gain);
            buf[n - f] = buf[f].conj();
        }
        fft.process(&mut buf);
        let row = out.row_mut(r);
        for (o, c) in row.iter_mut().zip(&buf) {
            *o = c.re;
        }
        let mean = row.iter().sum::<f64>() / n as f64;
        let sd = (row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
        row.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    }
    out
}

/// Draws the dataset described by `spec`; trials are ordered by class.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<TrialSet> {
    spec.validate()?;
    let generator = Generator::new(spec);
    let trials = (0..spec.n_classes * spec.trials_per_class)
        .map(|i| generator.trial(i, i / spec.trials_per_class))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialSet {
        trials,
        channel_names: spec.channel_names(),
        class_names: (0..spec.n_classes).map(|k| format!("class{k}")).collect(),
        dataset_id: format!("synthetic-{}", spec.seed),
    })
}

/// Noise-free class signals at zero jitter, `C×T` each.
pub fn clean_templates(spec: &SynthSpec) -> Result<Vec<Matrix>> {
    spec.validate()?;
    let g = Generator::new(spec);
    Ok((0..spec.n_classes)
        .map(|k| g.class_signal(k, 0.0))
        .collect())
}

/// Spatial pattern of each latent class source, `C×n_sources`.
pub fn source_patterns(spec: &SynthSpec) -> Matrix {
    gaussian_matrix(
        spec.n_channels,
        spec.n_sources,
        &mut unit_rng(spec.seed, MIXING_STREAM),
    )
}
