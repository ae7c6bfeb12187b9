//! Movement-onset localisation from hand trajectories, with the trial
//! rejection rules used for the onset-aligned dataset.
//!
//! The trajectory is differenced, smoothed (order-1 Savitzky-Golay, frame
//! 31) and scaled to unit peak magnitude. Elbow motions take the first
//! crossing of a fixed threshold; the resting class gets a fixed delay after
//! the cue; every other motion is fitted with `a·exp(−((x−b)/c)²) + d`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SMOOTHING_FRAME: usize = 31;

/// Which localisation rule a motion class follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OnsetRule {
    Threshold,
    Rest,
    BellFit,
}

impl OnsetRule {
    /// Elbow flexion/extension threshold, resting gets the fixed delay,
    /// anything else is bell-fitted.
    pub fn for_class_name(name: &str) -> OnsetRule {
        let n = name.to_ascii_lowercase();
        if n.contains("elbow") || n == "ef" || n == "ee" {
            OnsetRule::Threshold
        } else if n.contains("rest") || n == "re" {
            OnsetRule::Rest
        } else {
            OnsetRule::BellFit
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub samples: Vec<f64>,
    pub sampling_rate: f64,
    pub rule: OnsetRule,
    /// Cue position in samples, used by the resting rule.
    pub cue_sample: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnsetConfig {
    pub threshold: f64,
    pub rest_delay_s: f64,
    pub rest_min_variance: f64,
    pub min_amplitude: f64,
    pub max_width: f64,
    pub max_offset: f64,
    pub bell_onset_level: f64,
    pub window_pre_s: f64,
    pub window_post_s: f64,
}

impl Default for OnsetConfig {
    fn default() -> Self {
        OnsetConfig {
            threshold: 0.05,
            rest_delay_s: 0.5,
            rest_min_variance: 0.02,
            min_amplitude: 0.05,
            max_width: 100.0,
            max_offset: 10.0,
            bell_onset_level: 0.1,
            window_pre_s: 2.0,
            window_post_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    NotLocatable,
    RestVariance,
    FitFailed,
    FitAmplitude,
    FitWidth,
    FitOffset,
    WindowOutOfBounds,
}

impl RejectReason {
    pub fn id(self) -> &'static str {
        match self {
            RejectReason::NotLocatable => "not-locatable",
            RejectReason::RestVariance => "rest-variance",
            RejectReason::FitFailed => "fit-failed",
            RejectReason::FitAmplitude => "fit-amplitude",
            RejectReason::FitWidth => "fit-width",
            RejectReason::FitOffset => "fit-offset",
            RejectReason::WindowOutOfBounds => "window-out-of-bounds",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OnsetStatus {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnsetDecision {
    pub status: OnsetStatus,
    pub onset_sample: Option<usize>,
    /// `(a, b, c, d)` when a bell was fitted.
    pub fit_params: Option<[f64; 4]>,
    pub reason: Option<RejectReason>,
}

impl OnsetDecision {
    fn accepted(onset: usize, fit: Option<[f64; 4]>) -> Self {
        OnsetDecision {
            status: OnsetStatus::Accepted,
            onset_sample: Some(onset),
            fit_params: fit,
            reason: None,
        }
    }

    fn rejected(reason: RejectReason, fit: Option<[f64; 4]>) -> Self {
        OnsetDecision {
            status: OnsetStatus::Rejected,
            onset_sample: None,
            fit_params: fit,
            reason: Some(reason),
        }
    }

    pub fn is_accepted(&self) -> bool {
        self.status == OnsetStatus::Accepted
    }
}

/// First difference followed by order-1 Savitzky-Golay smoothing.
///
/// Interior points are the frame mean; the first and last half-frames are
/// read off straight-line fits to the first and last full frames.
pub fn smooth_velocity(trajectory: &[f64]) -> Result<Vec<f64>> {
    if trajectory.len() < SMOOTHING_FRAME + 1 {
        return Err(Error::Data(format!(
            "trajectory of {} samples is shorter than the smoothing frame",
            trajectory.len()
        )));
    }
    if trajectory.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite trajectory sample".into()));
    }
    let diff: Vec<f64> = trajectory.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(savitzky_golay_linear(&diff, SMOOTHING_FRAME))
}

fn savitzky_golay_linear(x: &[f64], frame: usize) -> Vec<f64> {
    let n = x.len();
    let half = frame / 2;
    let mut out = vec![0.0; n];

    let mut window: f64 = x[..frame].iter().sum();
    out[half] = window / frame as f64;
    for i in half + 1..n - half {
        window += x[i + half] - x[i - half - 1];
        out[i] = window / frame as f64;
    }

    let fit = |seg: &[f64]| {
        let m = seg.len() as f64;
        let xm = (m - 1.0) / 2.0;
        let ym = seg.iter().sum::<f64>() / m;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (i, &y) in seg.iter().enumerate() {
            let dx = i as f64 - xm;
            sxy += dx * (y - ym);
            sxx += dx * dx;
        }
        let slope = sxy / sxx;
        move |pos: f64| ym + slope * (pos - xm)
    };
    let head = fit(&x[..frame]);
    for (i, o) in out.iter_mut().enumerate().take(half) {
        *o = head(i as f64);
    }
    let tail = fit(&x[n - frame..]);
    for (i, o) in out.iter_mut().enumerate().skip(n - half) {
        *o = tail((i + frame - n) as f64);
    }
    out
}

/// Divides by the largest absolute value.
pub fn normalize_abs(series: &[f64]) -> Result<Vec<f64>> {
    let max = series.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if !(max > 0.0) || !max.is_finite() {
        return Err(Error::Data("series is all zero".into()));
    }
    Ok(series.iter().map(|v| v / max).collect())
}

/// First point where `series` reaches `threshold`, linearly interpolated
/// between samples and rounded down.
pub fn locate_threshold_onset(series: &[f64], threshold: f64) -> Result<usize> {
    let first = series
        .iter()
        .position(|&v| v >= threshold)
        .ok_or_else(|| Error::Data(format!("threshold {threshold} never reached")))?;
    if first == 0 {
        return Ok(0);
    }
    let (lo, hi) = (series[first - 1], series[first]);
    let pos = (first - 1) as f64 + (threshold - lo) / (hi - lo);
    // Guard exact crossings against rounding just below the integer.
    Ok((pos + 1e-9).floor() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Root-mean-square residual.
    pub rms: f64,
}

impl BellFit {
    pub fn params(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn eval(&self, x: f64) -> f64 {
        bell(&self.params(), x)
    }
}

fn bell(p: &[f64; 4], x: f64) -> f64 {
    let u = (x - p[1]) / p[2];
    p[0] * (-u * u).exp() + p[3]
}

const FIT_MAX_ITER: usize = 200;

/// Least-squares fit of `a·exp(−((x−b)/c)²) + d` to `series` sampled at
/// `x = 0, 1, …`.
///
/// A grid over centre and width (with amplitude and offset solved exactly
/// at each node) seeds a damped Gauss-Newton refinement of all four
/// parameters.
pub fn fit_gaussian_bell(series: &[f64]) -> Result<BellFit> {
    let n = series.len();
    if n < 8 {
        return Err(Error::Data(format!(
            "{n} samples are too few for a bell fit"
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite sample in bell fit".into()));
    }

    let mut best = ([0.0; 4], f64::INFINITY);
    let b_step = (n / 50).max(1);
    let mut widths = Vec::new();
    let mut w = 1.0;
    while w <= 2.0 * n as f64 {
        widths.push(w);
        w *= 1.5;
    }
    for b in (0..n).step_by(b_step) {
        for &c in &widths {
            let (a, d) = linear_amp_offset(series, b as f64, c);
            let p = [a, b as f64, c, d];
            let sse = sse(series, &p);
            if sse < best.1 {
                best = (p, sse);
            }
        }
    }

    let (mut p, mut cost) = best;
    let mut lambda = 1e-3;
    let mut converged = cost <= 1e-28 * n as f64;
    let mut iter = 0;
    while !converged && iter < FIT_MAX_ITER {
        iter += 1;
        let (jtj, jtr) = normal_equations(series, &p);
        let mut improved = false;
        while lambda < 1e20 {
            let mut a = jtj;
            for i in 0..4 {
                a[i][i] += lambda * jtj[i][i].max(1e-12);
            }
            let Some(step) = solve4(a, jtr) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = p;
            for i in 0..4 {
                trial[i] += step[i];
            }
            trial[2] = trial[2].abs().max(1e-6);
            let trial_cost = sse(series, &trial);
            if trial_cost.is_finite() && trial_cost < cost {
                let rel = (cost - trial_cost) / cost.max(f64::MIN_POSITIVE);
                let small_step = step
                    .iter()
                    .zip(&p)
                    .all(|(s, v)| s.abs() <= 1e-10 * (v.abs() + 1e-10));
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if rel < 1e-14 || small_step {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        // No damping level reduces the cost: a (local) minimum.
        if !improved {
            converged = true;
        }
    }
    if !converged || p.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence(format!(
            "bell fit did not converge in {FIT_MAX_ITER} iterations"
        )));
    }
    Ok(BellFit {
        a: p[0],
        b: p[1],
        c: p[2],
        d: p[3],
        rms: (cost / n as f64).sqrt(),
    })
}

// Least-squares (a, d) for fixed centre and width.
fn linear_amp_offset(y: &[f64], b: f64, c: f64) -> (f64, f64) {
    let n = y.len() as f64;
    let (mut se, mut see, mut sy, mut sey) = (0.0, 0.0, 0.0, 0.0);
    for (i, &v) in y.iter().enumerate() {
        let u = (i as f64 - b) / c;
        let e = (-u * u).exp();
        se += e;
        see += e * e;
        sy += v;
        sey += e * v;
    }
    let det = n * see - se * se;
    if det.abs() < 1e-12 * n * see.max(1e-300) {
        return (0.0, sy / n);
    }
    ((n * sey - se * sy) / det, (see * sy - se * sey) / det)
}

fn sse(y: &[f64], p: &[f64; 4]) -> f64 {
    y.iter()
        .enumerate()
        .map(|(i, &v)| {
            let r = v - bell(p, i as f64);
            r * r
        })
        .sum()
}

fn normal_equations(y: &[f64], p: &[f64; 4]) -> ([[f64; 4]; 4], [f64; 4]) {
    let mut jtj = [[0.0; 4]; 4];
    let mut jtr = [0.0; 4];
    for (i, &v) in y.iter().enumerate() {
        let u = (i as f64 - p[1]) / p[2];
        let e = (-u * u).exp();
        let g = [
            e,
            p[0] * e * 2.0 * u / p[2],
            p[0] * e * 2.0 * u * u / p[2],
            1.0,
        ];
        let r = v - (p[0] * e + p[3]);
        for a in 0..4 {
            jtr[a] += g[a] * r;
            for b in 0..4 {
                jtj[a][b] += g[a] * g[b];
            }
        }
    }
    (jtj, jtr)
}

// Gaussian elimination with partial pivoting.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            let pivot = a[col];
            for (dst, src) in a[row][col..].iter_mut().zip(&pivot[col..]) {
                *dst -= f * src;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let mut s = b[row];
        for k in row + 1..4 {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Applies the localisation rule of `traj` and the rejection criteria.
pub fn decide_trial(traj: &TrajectoryRecord, cfg: &OnsetConfig) -> OnsetDecision {
    let normalized = match smooth_velocity(&traj.samples).and_then(|v| normalize_abs(&v)) {
        Ok(v) => v,
        // A motionless rest trial has zero variance, not a missing onset.
        Err(_) if traj.rule == OnsetRule::Rest && traj.samples.len() >= SMOOTHING_FRAME => {
            return OnsetDecision::rejected(RejectReason::RestVariance, None)
        }
        Err(_) => return OnsetDecision::rejected(RejectReason::NotLocatable, None),
    };
    let fs = traj.sampling_rate;

    let (onset, fit) = match traj.rule {
        OnsetRule::Threshold => {
            let magnitude: Vec<f64> = normalized.iter().map(|v| v.abs()).collect();
            match locate_threshold_onset(&magnitude, cfg.threshold) {
                Ok(i) => (i, None),
                Err(_) => return OnsetDecision::rejected(RejectReason::NotLocatable, None),
            }
        }
        OnsetRule::Rest => {
            let n = normalized.len() as f64;
            let mean = normalized.iter().sum::<f64>() / n;
            let var = normalized.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            if var < cfg.rest_min_variance {
                return OnsetDecision::rejected(RejectReason::RestVariance, None);
            }
            (
                traj.cue_sample + (cfg.rest_delay_s * fs).round() as usize,
                None,
            )
        }
        OnsetRule::BellFit => {
            let fit = match fit_gaussian_bell(&normalized) {
                Ok(f) => f,
                Err(_) => return OnsetDecision::rejected(RejectReason::FitFailed, None),
            };
            let params = Some(fit.params());
            if fit.a < cfg.min_amplitude {
                return OnsetDecision::rejected(RejectReason::FitAmplitude, params);
            }
            if fit.c > cfg.max_width {
                return OnsetDecision::rejected(RejectReason::FitWidth, params);
            }
            if fit.d > cfg.max_offset {
                return OnsetDecision::rejected(RejectReason::FitOffset, params);
            }
            match bell_onset(&fit, cfg.bell_onset_level) {
                Some(i) => (i, params),
                None => return OnsetDecision::rejected(RejectReason::NotLocatable, params),
            }
        }
    };

    let pre = (cfg.window_pre_s * fs).round() as usize;
    let post = (cfg.window_post_s * fs).round() as usize;
    if onset < pre || onset + post > traj.samples.len() {
        return OnsetDecision {
            status: OnsetStatus::Rejected,
            onset_sample: None,
            fit_params: fit,
            reason: Some(RejectReason::WindowOutOfBounds),
        };
    }
    OnsetDecision::accepted(onset, fit)
}

/// First sample on the rising flank where the fitted bell stands `level`
/// above its offset.
pub fn bell_onset(fit: &BellFit, level: f64) -> Option<usize> {
    if !(fit.a > level) {
        return None;
    }
    let x = fit.b - fit.c * (fit.a / level).ln().sqrt();
    if x < 0.0 {
        return Some(0);
    }
    Some((x - 1e-9).ceil() as usize)
}

/// Per-trial decisions plus rejection counts, serialisable as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnsetReport {
    pub trials: Vec<OnsetEntry>,
    pub accepted: usize,
    pub rejected: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnsetEntry {
    pub index: usize,
    pub label: usize,
    #[serde(flatten)]
    pub decision: OnsetDecision,
}

impl OnsetReport {
    pub fn from_decisions(entries: Vec<OnsetEntry>) -> Self {
        let mut rejected = BTreeMap::new();
        let mut accepted = 0;
        for e in &entries {
            match e.decision.reason {
                None => accepted += 1,
                Some(r) => *rejected.entry(r.id().to_string()).or_insert(0) += 1,
            }
        }
        OnsetReport {
            trials: entries,
            accepted,
            rejected,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn ramp_gives_constant_velocity() {
        let s = 0.37;
        let traj: Vec<f64> = (0..200).map(|i| s * i as f64).collect();
        let v = smooth_velocity(&traj).unwrap();
        assert_eq!(v.len(), 199);
        assert!(v.iter().all(|x| (x - s).abs() < 1e-12));
        let flat = smooth_velocity(&[3.0; 64]).unwrap();
        assert!(flat.iter().all(|&x| x == 0.0));
        assert!(smooth_velocity(&[0.0; 20]).is_err());
    }

    // Direct least-squares line fit per output point, the textbook
    // Savitzky-Golay definition.
    fn sg_oracle(x: &[f64], frame: usize) -> Vec<f64> {
        let n = x.len();
        let half = frame / 2;
        (0..n)
            .map(|i| {
                let start = i.saturating_sub(half).min(n - frame);
                let seg = &x[start..start + frame];
                let m = frame as f64;
                let xm = (m - 1.0) / 2.0;
                let ym = seg.iter().sum::<f64>() / m;
                let sxy: f64 = seg
                    .iter()
                    .enumerate()
                    .map(|(j, y)| (j as f64 - xm) * (y - ym))
                    .sum();
                let sxx: f64 = (0..frame).map(|j| (j as f64 - xm).powi(2)).sum();
                ym + sxy / sxx * ((i - start) as f64 - xm)
            })
            .collect()
    }

    #[test]
    fn noisy_ramp_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = 2.0;
        for _ in 0..20 {
            let traj: Vec<f64> = (0..300)
                .map(|i| s * i as f64 + rng.random_range(-0.01 * s..0.01 * s))
                .collect();
            let v = smooth_velocity(&traj).unwrap();
            let diff: Vec<f64> = traj.windows(2).map(|w| w[1] - w[0]).collect();
            let oracle = sg_oracle(&diff, 31);
            for (a, b) in v.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-10);
            }
            assert!(v[15..v.len() - 15].iter().all(|x| (x - s).abs() < 0.02 * s));
        }
    }

    #[test]
    fn normalize_cases() {
        assert_eq!(
            normalize_abs(&[0.0, 2.0, -4.0]).unwrap(),
            vec![0.0, 0.5, -1.0]
        );
        assert_eq!(normalize_abs(&[-3.0]).unwrap(), vec![-1.0]);
        assert_eq!(normalize_abs(&[0.5, -1.0]).unwrap(), vec![0.5, -1.0]);
        assert!(normalize_abs(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn threshold_cases() {
        let ramp: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        assert_eq!(locate_threshold_onset(&ramp, 0.05).unwrap(), 5);
        assert!(locate_threshold_onset(&[0.0; 10], 0.05).is_err());
        assert_eq!(locate_threshold_onset(&[0.2, 0.5, 1.0], 0.05).unwrap(), 0);
        assert_eq!(locate_threshold_onset(&[0.0, 0.04, 0.07], 0.05).unwrap(), 1);
    }

    #[test]
    fn exact_bell_recovered() {
        let y: Vec<f64> = (0..=100)
            .map(|x| bell(&[1.0, 50.0, 10.0, 0.0], x as f64))
            .collect();
        let f = fit_gaussian_bell(&y).unwrap();
        for (got, want) in f.params().iter().zip([1.0, 50.0, 10.0, 0.0]) {
            assert!((got - want).abs() < 1e-3, "{:?}", f);
        }
    }

    #[test]
    fn flat_series_has_no_amplitude() {
        let f = fit_gaussian_bell(&[0.3; 50]).unwrap();
        assert!(f.a.abs() < 0.05);
    }

    #[test]
    fn noisy_bell_centre_within_one_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let noise = Normal::new(0.0, 0.01).unwrap();
        for _ in 0..25 {
            let b = rng.random_range(30.0..70.0);
            let c = rng.random_range(6.0..20.0);
            let y: Vec<f64> = (0..=100)
                .map(|x| bell(&[0.9, b, c, 0.02], x as f64) + noise.sample(&mut rng))
                .collect();
            let f = fit_gaussian_bell(&y).unwrap();
            assert!((f.b - b).abs() <= 1.0, "b {} vs {b}", f.b);
        }
    }

    fn bell_trajectory(a: f64, b: f64, c: f64, n: usize) -> Vec<f64> {
        // Integrate the bell so the smoothed velocity reproduces it.
        let mut pos = vec![0.0];
        for i in 0..n {
            let v = bell(&[a, b, c, 0.0], i as f64);
            pos.push(pos[i] + v);
        }
        pos
    }

    #[test]
    fn supination_bell_accepted_at_analytic_crossing() {
        let fs = 256.0;
        let (a, b, c) = (0.8, 900.0, 30.0);
        let traj = TrajectoryRecord {
            samples: bell_trajectory(a, b, c, 1536),
            sampling_rate: fs,
            rule: OnsetRule::BellFit,
            cue_sample: 512,
        };
        let d = decide_trial(&traj, &OnsetConfig::default());
        assert!(d.is_accepted(), "{d:?}");
        let [fa, fb, fc, _] = d.fit_params.unwrap();
        assert!((fb - b).abs() < 0.5);
        let crossing = fb - fc * (fa / 0.1).ln().sqrt();
        let onset = d.onset_sample.unwrap();
        assert_eq!(onset, crossing.ceil() as usize);
        // Unit peak after normalisation; the frame-31 box widens the bell.
        let c_eff = (c * c + 2.0 * (31.0f64 * 31.0 - 1.0) / 12.0).sqrt();
        let analytic = b - c_eff * 10.0f64.ln().sqrt();
        assert!(
            (onset as f64 - analytic).abs() <= 1.5,
            "{onset} vs {analytic}"
        );
        assert!((fa - 1.0).abs() < 0.05);
    }

    #[test]
    fn rest_variance_rejection() {
        // Slow drift then a brief jerk: normalised velocity is mostly near 0.
        let mut samples = vec![0.0; 4096];
        for (i, s) in samples.iter_mut().enumerate() {
            *s = if i > 2000 { 1.0 } else { 0.0 };
        }
        let traj = TrajectoryRecord {
            samples,
            sampling_rate: 256.0,
            rule: OnsetRule::Rest,
            cue_sample: 512,
        };
        let d = decide_trial(&traj, &OnsetConfig::default());
        assert_eq!(d.reason, Some(RejectReason::RestVariance));

        let still = TrajectoryRecord {
            samples: vec![0.3; 1024],
            ..traj
        };
        let d = decide_trial(&still, &OnsetConfig::default());
        assert_eq!(d.reason, Some(RejectReason::RestVariance));
    }

    #[test]
    fn rest_gets_fixed_delay() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut acc = 0.0;
        let samples: Vec<f64> = (0..1024)
            .map(|_| {
                acc += rng.random_range(-1.0..1.0);
                acc
            })
            .collect();
        let traj = TrajectoryRecord {
            samples,
            sampling_rate: 256.0,
            rule: OnsetRule::Rest,
            cue_sample: 512,
        };
        let d = decide_trial(&traj, &OnsetConfig::default());
        assert!(d.is_accepted(), "{d:?}");
        assert_eq!(d.onset_sample, Some(512 + 128));
    }

    #[test]
    fn elbow_threshold_and_shift() {
        let base = bell_trajectory(1.0, 700.0, 40.0, 1200);
        let make = |samples: Vec<f64>| TrajectoryRecord {
            samples,
            sampling_rate: 256.0,
            rule: OnsetRule::Threshold,
            cue_sample: 0,
        };
        let d0 = decide_trial(&make(base.clone()), &OnsetConfig::default());
        assert!(d0.is_accepted());
        let mut shifted = vec![base[0]; 37];
        shifted.extend(&base);
        let d1 = decide_trial(&make(shifted), &OnsetConfig::default());
        assert_eq!(d1.onset_sample.unwrap(), d0.onset_sample.unwrap() + 37);
        assert_eq!(
            decide_trial(&make(base.clone()), &OnsetConfig::default()),
            d0
        );
    }

    #[test]
    fn onset_near_start_is_out_of_window() {
        let traj = TrajectoryRecord {
            samples: bell_trajectory(1.0, 200.0, 20.0, 1200),
            sampling_rate: 256.0,
            rule: OnsetRule::Threshold,
            cue_sample: 0,
        };
        let d = decide_trial(&traj, &OnsetConfig::default());
        assert_eq!(d.reason, Some(RejectReason::WindowOutOfBounds));
    }

    #[test]
    fn flat_bell_class_rejected_on_amplitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let samples: Vec<f64> = (0..1024).map(|_| rng.random_range(-1.0..1.0)).collect();
        let traj = TrajectoryRecord {
            samples,
            sampling_rate: 256.0,
            rule: OnsetRule::BellFit,
            cue_sample: 0,
        };
        let d = decide_trial(&traj, &OnsetConfig::default());
        assert_eq!(d.status, OnsetStatus::Rejected);
    }

    #[test]
    fn report_counts() {
        let entries = vec![
            OnsetEntry {
                index: 0,
                label: 0,
                decision: OnsetDecision::accepted(600, None),
            },
            OnsetEntry {
                index: 1,
                label: 1,
                decision: OnsetDecision::rejected(RejectReason::FitWidth, None),
            },
            OnsetEntry {
                index: 2,
                label: 1,
                decision: OnsetDecision::rejected(RejectReason::FitWidth, None),
            },
        ];
        let r = OnsetReport::from_decisions(entries);
        assert_eq!(r.accepted, 1);
        assert_eq!(r.rejected["fit-width"], 2);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"reason\":\"fit-width\""));
        let back: OnsetReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn class_name_rules() {
        assert_eq!(
            OnsetRule::for_class_name("elbow flexion"),
            OnsetRule::Threshold
        );
        assert_eq!(OnsetRule::for_class_name("EE"), OnsetRule::Threshold);
        assert_eq!(OnsetRule::for_class_name("resting"), OnsetRule::Rest);
        assert_eq!(OnsetRule::for_class_name("supination"), OnsetRule::BellFit);
    }
}
