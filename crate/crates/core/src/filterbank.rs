//! Low-frequency band-pass filter bank with zero-phase application.
//!
//! Every band is a 4th-order Butterworth band-pass (eight poles) built as a
//! cascade of biquads by the bilinear transform with frequency prewarping,
//! then run forward and backward.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dataio::EegTrial;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Butterworth prototype order per band.
pub const PROTOTYPE_ORDER: usize = 4;
pub const LOW_CUTOFF_HZ: f64 = 0.5;
pub const BANK_COUNT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub low_hz: f64,
    pub high_hz: f64,
    /// 1-based position in the bank.
    pub index: usize,
}

impl BandSpec {
    /// The broadest band, used when the filter bank is switched off.
    pub fn broadband() -> BandSpec {
        BandSpec {
            low_hz: LOW_CUTOFF_HZ,
            high_hz: BANK_COUNT as f64,
            index: BANK_COUNT,
        }
    }
}

/// Transposed direct-form II biquad, `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandFilter {
    pub spec: BandSpec,
    pub sampling_rate: f64,
    pub sections: Vec<Biquad>,
}

impl BandFilter {
    pub fn design(spec: BandSpec, fs: f64) -> Result<BandFilter> {
        let nyquist = fs / 2.0;
        if !(spec.low_hz > 0.0 && spec.low_hz < spec.high_hz) {
            return Err(Error::InvalidArgument(format!(
                "band ({}, {}) Hz is not ordered",
                spec.low_hz, spec.high_hz
            )));
        }
        // The upper edge must sit well below Nyquist for the bilinear design
        // to keep its shape.
        if spec.high_hz >= 0.8 * nyquist {
            return Err(Error::InvalidArgument(format!(
                "band edge {} Hz too close to Nyquist ({nyquist} Hz)",
                spec.high_hz
            )));
        }

        let warp = |f: f64| 2.0 * fs * (std::f64::consts::PI * f / fs).tan();
        let (w1, w2) = (warp(spec.low_hz), warp(spec.high_hz));
        let w0_sq = w1 * w2;
        let bw = w2 - w1;
        let n = PROTOTYPE_ORDER;
        let k = 2.0 * fs;

        let mut sections = Vec::with_capacity(n);
        for i in 0..n {
            let angle = std::f64::consts::PI * (2 * i + n + 1) as f64 / (2 * n) as f64;
            let proto = Complex64::from_polar(1.0, angle);
            if proto.im <= 0.0 {
                continue;
            }
            let half = proto * bw / 2.0;
            let disc = (half * half - w0_sq).sqrt();
            for s in [half + disc, half - disc] {
                let z = (k + s) / (k - s);
                sections.push(Biquad {
                    b: [1.0, 0.0, -1.0],
                    a: [-2.0 * z.re, z.norm_sqr()],
                });
            }
        }

        // Unit gain at the (digital) centre frequency, spread over sections.
        let omega0 = 2.0 * (w0_sq.sqrt() / k).atan();
        let gain = response(&sections, omega0).norm();
        let per = gain.powf(-1.0 / sections.len() as f64);
        for s in &mut sections {
            for b in &mut s.b {
                *b *= per;
            }
        }
        Ok(BandFilter {
            spec,
            sampling_rate: fs,
            sections,
        })
    }

    /// Filter order of the band-pass (twice the prototype order).
    pub fn order(&self) -> usize {
        2 * self.sections.len()
    }

    /// Samples of odd-symmetric extension added at each end.
    pub fn pad_len(&self) -> usize {
        3 * self.order()
    }

    /// Magnitude response at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        let omega = 2.0 * std::f64::consts::PI * freq_hz / self.sampling_rate;
        response(&self.sections, omega).norm()
    }

    /// Forward-backward filtering of one series.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let pad = self.pad_len();
        let n = x.len();
        if n <= pad {
            return Err(Error::Data(format!(
                "series of {n} samples too short for zero-phase filtering (needs > {pad})"
            )));
        }
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let zi = self.steady_state();
        self.run(&mut ext, &zi);
        ext.reverse();
        self.run(&mut ext, &zi);
        ext.reverse();
        Ok(ext[pad..pad + n].to_vec())
    }

    /// Filters every channel of `data` (rows are channels).
    pub fn filtfilt_rows(&self, data: &Matrix) -> Result<Matrix> {
        let mut out = Vec::with_capacity(data.rows() * data.cols());
        for ch in 0..data.rows() {
            out.extend(self.filtfilt(data.row(ch))?);
        }
        Matrix::new(data.rows(), data.cols(), out)
    }

    // Per-section state for a unit step in steady state.
    fn steady_state(&self) -> Vec<[f64; 2]> {
        let mut input = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let [b0, b1, b2] = s.b;
                let [a1, a2] = s.a;
                let y = input * (b0 + b1 + b2) / (1.0 + a1 + a2);
                let z2 = b2 * input - a2 * y;
                let z1 = b1 * input - a1 * y + z2;
                input = y;
                [z1, z2]
            })
            .collect()
    }

    fn run(&self, x: &mut [f64], zi: &[[f64; 2]]) {
        let x0 = x[0];
        for (s, z) in self.sections.iter().zip(zi) {
            let [b0, b1, b2] = s.b;
            let [a1, a2] = s.a;
            let (mut z1, mut z2) = (z[0] * x0, z[1] * x0);
            for v in x.iter_mut() {
                let input = *v;
                let y = b0 * input + z1;
                z1 = b1 * input - a1 * y + z2;
                z2 = b2 * input - a2 * y;
                *v = y;
            }
        }
    }
}

fn response(sections: &[Biquad], omega: f64) -> Complex64 {
    let zinv = Complex64::from_polar(1.0, -omega);
    let zinv2 = zinv * zinv;
    sections.iter().fold(Complex64::new(1.0, 0.0), |acc, s| {
        let num = s.b[0] + zinv * s.b[1] + zinv2 * s.b[2];
        let den = 1.0 + zinv * s.a[0] + zinv2 * s.a[1];
        acc * num / den
    })
}

/// The ten `(0.5, h)` Hz bands, `h = 1..=10`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterBankSet {
    pub sampling_rate: f64,
    pub bands: Vec<BandFilter>,
}

pub fn make_filter_banks(fs: f64) -> Result<FilterBankSet> {
    if !(fs > 20.0) {
        return Err(Error::InvalidArgument(format!(
            "sampling rate {fs} Hz too low for a 10 Hz filter bank"
        )));
    }
    let bands = (1..=BANK_COUNT)
        .map(|h| {
            BandFilter::design(
                BandSpec {
                    low_hz: LOW_CUTOFF_HZ,
                    high_hz: h as f64,
                    index: h,
                },
                fs,
            )
        })
        .collect::<Result<_>>()?;
    Ok(FilterBankSet {
        sampling_rate: fs,
        bands,
    })
}

/// Zero-phase filtering of every channel of `trial`.
pub fn apply_zero_phase(trial: &EegTrial, band: &BandFilter) -> Result<EegTrial> {
    if (trial.sampling_rate - band.sampling_rate).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "filter designed for {} Hz applied to {} Hz data",
            band.sampling_rate, trial.sampling_rate
        )));
    }
    let mut out = trial.clone();
    out.data = band.filtfilt_rows(&trial.data)?;
    Ok(out)
}
