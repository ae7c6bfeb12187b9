//! Acceptance suite. Runs every primary criterion at its stated tolerance
//! and prints one PASS/FAIL line each; exits non-zero if any fail.
//!
//! Pass substrings as arguments to run a subset, e.g.
//! `cargo test --test acceptance -- p-sweep`.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mrcp_core::dataio::{read_f32_file, Dataset};
use mrcp_core::numerics::{cca, corr2, pearson, sym_generalized_eig, Matrix};
use mrcp_core::onset::{decide_trial, OnsetConfig, OnsetRule, TrajectoryRecord};
use mrcp_core::pipeline::{
    apply_window, kfold_evaluate, p_sweep, prepare, Blend, FoldModel, KValue, WindowSpec,
};
use mrcp_core::selection::{discretize, mrmr_rank, MI_BINS};
use mrcp_core::trca::{class_covariances, fit_binary_filter, fit_multiclass_filter};
use mrcp_core::{
    generate_synthetic, ClassifierKind, FeatureMatrix, FeatureTag, PipelineConfig, RhoKind,
    SynthSpec, TrialSet, Variant,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64, what: &str) -> Result<(), String> {
    let s = elapsed.as_secs_f64();
    ensure(s < limit_s, || {
        format!("{what} took {s:.1} s, limit {limit_s} s")
    })
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rows: usize, cols: usize, r: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(r))
}

fn random_spd(n: usize, r: &mut ChaCha8Rng) -> Matrix {
    let a = gaussian(n, 2 * n, r);
    a.matmul_tr(&a).add(&Matrix::identity(n).scale(0.1))
}

fn max_abs(m: &Matrix) -> f64 {
    m.as_slice().iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Infinity norm: maximum absolute row sum.
fn inf_norm(m: &Matrix) -> f64 {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

// ---------------------------------------------------------------------------

fn covariance_identity() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let mut r = rng(seed);
        let n_trials = r.random_range(2..=10);
        let c = r.random_range(1..=8);
        let t = r.random_range(2..=64);
        let trials: Vec<Matrix> = (0..n_trials).map(|_| gaussian(c, t, &mut r)).collect();
        let refs: Vec<&Matrix> = trials.iter().collect();
        let fast = class_covariances(&refs, 0).map_err(|e| e.to_string())?;
        let mut naive = Matrix::zeros(c, c);
        for i in 0..n_trials {
            for j in i + 1..n_trials {
                naive.add_assign(&trials[i].matmul_tr(&trials[j]));
                naive.add_assign(&trials[j].matmul_tr(&trials[i]));
            }
        }
        let rel = max_abs(&fast.s.sub(&naive)) / max_abs(&naive);
        worst = worst.max(rel);
        ensure(rel < 1e-9, || {
            format!("seed {seed} (I={n_trials}, C={c}, T={t}): relative error {rel:e}")
        })?;
    }
    within(start.elapsed(), 1.0, "20 trial sets")?;
    Ok(format!("20 sets, worst relative error {worst:.1e}"))
}

fn gevd_cca_corr2_oracles() -> Check {
    let start = Instant::now();
    let err = |e: mrcp_core::Error| e.to_string();

    // Closed-form cases.
    let g = sym_generalized_eig(&Matrix::identity(3), &Matrix::identity(3), 3).map_err(err)?;
    ensure(
        g.eigenvalues.iter().all(|v| (v - 1.0).abs() < 1e-12),
        || format!("identity pencil eigenvalues {:?}", g.eigenvalues),
    )?;
    let gram = g.eigenvectors.tr_matmul(&g.eigenvectors);
    ensure(max_abs(&gram.sub(&Matrix::identity(3))) < 1e-10, || {
        "identity pencil eigenvectors not orthonormal".into()
    })?;
    let diag = Matrix::from_diag(&[2.0, 1.0]);
    let g = sym_generalized_eig(&diag, &Matrix::identity(2), 1).map_err(err)?;
    ensure(
        (g.eigenvalues[0] - 2.0).abs() < 1e-12
            && (g.eigenvectors[(0, 0)] - 1.0).abs() < 1e-12
            && g.eigenvectors[(1, 0)].abs() < 1e-12,
        || "diag(2,1) case".into(),
    )?;

    let mut worst_residual: f64 = 0.0;
    let mut worst_scale: f64 = 0.0;
    for seed in 0..20 {
        let mut r = rng(100 + seed);
        let s = {
            let a = gaussian(5, 5, &mut r);
            a.add(&a.transpose())
        };
        let q = random_spd(5, &mut r);
        let g = sym_generalized_eig(&s, &q, 5).map_err(err)?;
        // Residual by direct substitution.
        let lambda = Matrix::from_diag(&g.eigenvalues);
        let residual = max_abs(
            &s.matmul(&g.eigenvectors)
                .sub(&q.matmul(&g.eigenvectors).matmul(&lambda)),
        );
        let bound = 1e-8 * inf_norm(&s).max(inf_norm(&q));
        worst_residual = worst_residual.max(residual);
        ensure(residual < 1e-8 && residual <= bound, || {
            format!("seed {seed}: residual {residual:e} (bound {bound:e})")
        })?;
        ensure(g.eigenvalues.windows(2).all(|w| w[0] >= w[1]), || {
            format!("seed {seed}: eigenvalues not descending")
        })?;
        // Sign convention: largest-magnitude entry of every column positive.
        for j in 0..5 {
            let col = g.eigenvectors.column(j);
            let big = col
                .iter()
                .fold(0.0f64, |a, &v| if v.abs() > a.abs() { v } else { a });
            ensure(big > 0.0, || format!("seed {seed}: column {j} sign"))?;
        }
        let again = sym_generalized_eig(&s, &q, 5).map_err(err)?;
        ensure(again == g, || format!("seed {seed}: repeated call differs"))?;
        for c in [1e-3, 7.5, 1e4] {
            let gc = sym_generalized_eig(&s.scale(c), &q.scale(c), 5).map_err(err)?;
            let dv = g
                .eigenvalues
                .iter()
                .zip(&gc.eigenvalues)
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            let dw = max_abs(&g.eigenvectors.sub(&gc.eigenvectors));
            worst_scale = worst_scale.max(dv).max(dw);
            ensure(dv < 1e-10 && dw < 1e-10, || {
                format!("seed {seed}, c = {c}: eigenvalue drift {dv:e}, vector drift {dw:e}")
            })?;
        }
    }

    // CCA: invertible maps give unit correlations; projections reproduce
    // the reported correlations.
    let mut worst_proj: f64 = 0.0;
    for seed in 0..10 {
        let mut r = rng(200 + seed);
        let a = gaussian(200, 3, &mut r);
        let m = gaussian(3, 3, &mut r).add(&Matrix::identity(3).scale(2.0));
        let res = cca(&a, &a.matmul(&m)).map_err(err)?;
        ensure(
            res.correlations.iter().all(|v| (v - 1.0).abs() < 1e-10),
            || {
                format!(
                    "seed {seed}: invertible map correlations {:?}",
                    res.correlations
                )
            },
        )?;
        let b = a
            .matmul(&gaussian(3, 2, &mut r))
            .add(&gaussian(200, 2, &mut r));
        let res = cca(&a, &b).map_err(err)?;
        let pa = a.matmul(&res.coeffs_a);
        let pb = b.matmul(&res.coeffs_b);
        for (i, rho) in res.correlations.iter().enumerate() {
            let got = pearson(&pa.column(i), &pb.column(i)).map_err(err)?;
            worst_proj = worst_proj.max((got - rho).abs());
            ensure((got - rho).abs() < 1e-8, || {
                format!("seed {seed}: projection {i} gives {got}, reported {rho}")
            })?;
        }
    }
    let mut r = rng(300);
    let res = cca(&gaussian(10_000, 2, &mut r), &gaussian(10_000, 2, &mut r)).map_err(err)?;
    ensure(res.correlations.iter().all(|&v| v < 0.05), || {
        format!("independent noise correlations {:?}", res.correlations)
    })?;

    // corr2 hand example and invariances.
    let a = Matrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).map_err(err)?;
    let b = Matrix::new(2, 2, vec![1.0, 2.0, 4.0, 3.0]).map_err(err)?;
    let hand = corr2(&a, &b).map_err(err)?;
    ensure((hand - 0.8).abs() < 1e-12, || {
        format!("corr2 hand example {hand}")
    })?;
    ensure((corr2(&b, &a).map_err(err)? - hand).abs() < 1e-15, || {
        "corr2 symmetry".into()
    })?;
    let affine = corr2(&a.map(|v| 3.0 * v - 7.0), &b).map_err(err)?;
    ensure((affine - hand).abs() < 1e-12, || {
        "corr2 affine invariance".into()
    })?;
    ensure(
        (corr2(&a, &a.scale(-1.0)).map_err(err)? + 1.0).abs() < 1e-12,
        || "corr2(A, -A)".into(),
    )?;

    within(start.elapsed(), 5.0, "oracle suite")?;
    Ok(format!(
        "residual ≤ {worst_residual:.1e}, scale drift ≤ {worst_scale:.1e}, projection ≤ {worst_proj:.1e}, corr2 = {hand}"
    ))
}

/// Two classes share a planted spatial pattern `m` with spatially
/// correlated noise at 10 dB. The top generalized eigenvector `w` should
/// satisfy `Q·w ∝ m`, i.e. `w ∝ Q⁻¹m`.
fn planted_component_recovery() -> Check {
    let (c, t, per_class) = (8, 256, 30);
    let mut worst = f64::INFINITY;
    for seed in 0..10 {
        let mut r = rng(400 + seed);
        let m: Vec<f64> = (0..c).map(|_| StandardNormal.sample(&mut r)).collect();
        let phase: f64 = r.random_range(0.0..1.0);
        let s: Vec<f64> = (0..t)
            .map(|j| {
                let x = j as f64 / t as f64;
                (-((x - 0.5) / 0.12).powi(2)).exp()
                    + 0.5 * (2.0 * std::f64::consts::PI * (3.0 * x + phase)).sin()
            })
            .collect();
        let signal = Matrix::from_fn(c, t, |i, j| m[i] * s[j]);
        let p_signal = signal.as_slice().iter().map(|v| v * v).sum::<f64>() / (c * t) as f64;
        let mixing = gaussian(c, c, &mut r);
        let classes: Vec<Vec<Matrix>> = (0..2)
            .map(|_| {
                (0..per_class)
                    .map(|_| {
                        let noise = mixing.matmul(&gaussian(c, t, &mut r));
                        let p_noise =
                            noise.as_slice().iter().map(|v| v * v).sum::<f64>() / (c * t) as f64;
                        let x = signal.add(&noise.scale((p_signal / 10.0 / p_noise).sqrt()));
                        center_rows(&x)
                    })
                    .collect()
            })
            .collect();
        let covs: Vec<_> = classes
            .iter()
            .enumerate()
            .map(|(k, trials)| class_covariances(&trials.iter().collect::<Vec<_>>(), k))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let binary = fit_binary_filter(&covs[0], &covs[1], 1).map_err(|e| e.to_string())?;
        let pooled = fit_multiclass_filter(&covs, 1).map_err(|e| e.to_string())?;
        let q_pooled = covs[0].q.add(&covs[1].q);
        let cases = [
            (covs[0].q.clone(), binary.w.column(0)),
            (covs[1].q.clone(), binary.w.column(1)),
            (q_pooled, pooled.w.column(0)),
        ];
        for (q, w) in cases {
            let qw = q.matmul(&Matrix::new(c, 1, w).map_err(|e| e.to_string())?);
            let cos = cosine(qw.as_slice(), &m).abs();
            worst = worst.min(cos);
            ensure(cos > 0.95, || {
                format!("seed {seed}: |cos(Q·w, m)| = {cos:.4}")
            })?;
        }
    }
    Ok(format!("10 seeds, min |cos(Q·w, m)| = {worst:.4}"))
}

fn center_rows(x: &Matrix) -> Matrix {
    let means: Vec<f64> = (0..x.rows())
        .map(|i| x.row(i).iter().sum::<f64>() / x.cols() as f64)
        .collect();
    Matrix::from_fn(x.rows(), x.cols(), |i, j| x[(i, j)] - means[i])
}

fn small_spec(n_classes: usize, seed: u64) -> SynthSpec {
    SynthSpec {
        n_classes,
        trials_per_class: 10,
        n_channels: 6,
        n_samples: 384,
        sampling_rate: 128.0,
        seed,
        ..Default::default()
    }
}

fn feature_count_contract() -> Check {
    let mut found = Vec::new();
    for (variant, k, expected) in [
        (Variant::Bfbtrca, 2, 60),
        (Variant::Mfbtrca, 7, 210),
        (Variant::Mfbtrca, 5, 150),
    ] {
        let set = generate_synthetic(&small_spec(k, 7)).map_err(|e| e.to_string())?;
        let cfg = PipelineConfig {
            variant,
            k_grid: vec![KValue::All],
            ..Default::default()
        };
        let data = prepare(&set, &cfg).map_err(|e| e.to_string())?;
        let rows: Vec<usize> = (0..data.len()).collect();
        let model = FoldModel::fit(&data, &rows, &cfg, 0).map_err(|e| e.to_string())?;
        let features = model.features(&data, &rows).map_err(|e| e.to_string())?;
        let headers: BTreeSet<String> = features.headers().into_iter().collect();
        let mut want = BTreeSet::new();
        for bank in 1..=10 {
            for class in 0..k {
                for rho in ["rho1", "rho2", "rho3"] {
                    want.insert(format!("b{bank}_c{class}_{rho}"));
                }
            }
        }
        ensure(features.n_features() == expected, || {
            format!(
                "{variant} K={k}: {} features, expected {expected}",
                features.n_features()
            )
        })?;
        ensure(headers == want && headers.len() == expected, || {
            format!("{variant} K={k}: provenance headers differ from the bank×class×rho grid")
        })?;
        found.push(format!("{variant} K={k}: {expected}"));
    }
    Ok(found.join(", "))
}

/// Textbook plug-in MI from a joint count table.
fn oracle_mi(x: &[usize], y: &[usize]) -> f64 {
    let n = x.len() as f64;
    let mut joint: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut px: BTreeMap<usize, f64> = BTreeMap::new();
    let mut py: BTreeMap<usize, f64> = BTreeMap::new();
    for (&a, &b) in x.iter().zip(y) {
        *joint.entry((a, b)).or_default() += 1.0 / n;
        *px.entry(a).or_default() += 1.0 / n;
        *py.entry(b).or_default() += 1.0 / n;
    }
    joint
        .iter()
        .map(|(&(a, b), &p)| p * (p / (px[&a] * py[&b])).ln())
        .sum()
}

/// At every step, score every remaining column from scratch and take the
/// argmax; scores within 1e-12 count as tied and go to the lower index.
fn oracle_mrmr(columns: &[Vec<usize>], labels: &[usize]) -> Vec<usize> {
    let f = columns.len();
    let relevance: Vec<f64> = columns.iter().map(|c| oracle_mi(c, labels)).collect();
    let mut order: Vec<usize> = Vec::new();
    while order.len() < f {
        let scores: Vec<(usize, f64)> = (0..f)
            .filter(|j| !order.contains(j))
            .map(|j| {
                let redundancy = if order.is_empty() {
                    0.0
                } else {
                    order
                        .iter()
                        .map(|&s| oracle_mi(&columns[j], &columns[s]))
                        .sum::<f64>()
                        / order.len() as f64
                };
                (j, relevance[j] - redundancy)
            })
            .collect();
        let best = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        let pick = scores.iter().find(|s| s.1 >= best - 1e-12).unwrap().0;
        order.push(pick);
    }
    order
}

fn mrmr_oracle_equivalence() -> Check {
    let mut demoted_last = 0;
    for seed in 0..50 {
        let mut r = rng(500 + seed);
        let f0 = r.random_range(2..=7);
        let n = r.random_range(40..=120);
        let k = r.random_range(2..=4);
        let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
        let strength: Vec<f64> = (0..f0).map(|_| r.random_range(0.0..2.0)).collect();
        let mut values = Matrix::from_fn(n, f0 + 1, |i, j| {
            if j < f0 {
                strength[j] * labels[i] as f64 + {
                    let z: f64 = StandardNormal.sample(&mut r);
                    z
                }
            } else {
                0.0
            }
        });
        // Rank without the duplicate first to learn the top column.
        let tags = |w: usize| -> Vec<FeatureTag> {
            (0..w)
                .map(|j| FeatureTag {
                    bank: 1,
                    class: j,
                    kind: RhoKind::Direct,
                })
                .collect()
        };
        let base = FeatureMatrix::new(
            Matrix::from_fn(n, f0, |i, j| values[(i, j)]),
            tags(f0),
            labels.clone(),
        )
        .map_err(|e| e.to_string())?;
        let top = mrmr_rank(&base).map_err(|e| e.to_string())?.order[0];
        for i in 0..n {
            values[(i, f0)] = values[(i, top)];
        }
        let fm =
            FeatureMatrix::new(values, tags(f0 + 1), labels.clone()).map_err(|e| e.to_string())?;
        let got = mrmr_rank(&fm).map_err(|e| e.to_string())?.order;
        let columns: Vec<Vec<usize>> = (0..f0 + 1)
            .map(|j| discretize(&fm.values.column(j), MI_BINS))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let want = oracle_mrmr(&columns, &labels);
        ensure(got == want, || {
            format!("instance {seed}: greedy {got:?} vs oracle {want:?}")
        })?;
        // The copy is fully redundant with the original: it must come
        // after every column sharing its relevance, the original included.
        let rel_copy = oracle_mi(&columns[f0], &labels);
        let pos_dup = got.iter().position(|&j| j == f0).unwrap();
        let peers: Vec<usize> = (0..f0)
            .filter(|&j| (oracle_mi(&columns[j], &labels) - rel_copy).abs() < 1e-12)
            .collect();
        ensure(peers.contains(&top), || {
            format!("instance {seed}: copy relevance differs")
        })?;
        for &j in &peers {
            let pos = got.iter().position(|&x| x == j).unwrap();
            ensure(pos < pos_dup, || {
                format!("instance {seed}: copy at {pos_dup} precedes equal-relevance column {j} at {pos}")
            })?;
        }
        demoted_last += 1;
    }
    Ok(format!("50/50 rankings match the oracle; copy demoted behind its equal-relevance peers in {demoted_last}/50"))
}

fn end_to_end_decode() -> Check {
    let start = Instant::now();
    let set = generate_synthetic(&SynthSpec::default()).map_err(|e| e.to_string())?;
    let cfg = PipelineConfig::default();
    let report = kfold_evaluate(&set, &cfg).map_err(|e| e.to_string())?;
    within(start.elapsed(), 180.0, "distinct-template run")?;
    ensure(report.mean_accuracy >= 0.90, || {
        format!(
            "distinct templates: mean accuracy {:.4}",
            report.mean_accuracy
        )
    })?;
    let distinct_s = start.elapsed().as_secs_f64();

    // Class 1 takes class 0's template. Pooled over three fixed seeds; a
    // single 10-fold run has fold-correlated errors.
    let seeds = [0u64, 1, 2];
    let mut pooled = Matrix::zeros(4, 4);
    let mut per_seed = Vec::new();
    let mut slowest: f64 = 0.0;
    for &seed in &seeds {
        let t = Instant::now();
        let spec = SynthSpec {
            seed,
            blends: vec![Blend {
                class: 1,
                toward: 0,
                weight: 1.0,
            }],
            ..Default::default()
        };
        let set = generate_synthetic(&spec).map_err(|e| e.to_string())?;
        let r = kfold_evaluate(
            &set,
            &PipelineConfig {
                seed,
                ..cfg.clone()
            },
        )
        .map_err(|e| e.to_string())?;
        within(t.elapsed(), 180.0, "shared-template run")?;
        slowest = slowest.max(t.elapsed().as_secs_f64());
        per_seed.push(format!(
            "({:.2}, {:.2})",
            r.confusion[(0, 1)],
            r.confusion[(1, 0)]
        ));
        pooled.add_assign(&r.confusion.scale(1.0 / seeds.len() as f64));
    }
    let (c01, c10) = (pooled[(0, 1)], pooled[(1, 0)]);
    ensure(
        (0.3..=0.7).contains(&c01) && (0.3..=0.7).contains(&c10),
        || {
            format!(
                "shared pair confusion ({c01:.3}, {c10:.3}); per seed {}",
                per_seed.join(" ")
            )
        },
    )?;
    for k in 2..4 {
        ensure(pooled[(k, k)] >= 0.85, || {
            format!("class {k} accuracy {:.3}", pooled[(k, k)])
        })?;
    }
    Ok(format!(
        "distinct {:.4} ({distinct_s:.0} s); shared pair ({c01:.3}, {c10:.3}) pooled over seeds 0-2, per seed {}; others {:.3}, {:.3}; slowest run {slowest:.0} s",
        report.mean_accuracy,
        per_seed.join(" "),
        pooled[(2, 2)],
        pooled[(3, 3)]
    ))
}

fn desk_spec(n_classes: usize, seed: u64) -> SynthSpec {
    SynthSpec {
        n_classes,
        trials_per_class: 30,
        n_samples: 384,
        sampling_rate: 128.0,
        seed,
        ..Default::default()
    }
}

fn chance_level() -> Check {
    let mut parts = Vec::new();
    for (i, k) in [2usize, 5, 7].into_iter().enumerate() {
        let mut set =
            generate_synthetic(&desk_spec(k, 40 + i as u64)).map_err(|e| e.to_string())?;
        let mut labels = set.labels();
        labels.shuffle(&mut rng(900 + k as u64));
        for (t, l) in set.trials.iter_mut().zip(labels) {
            t.label = l;
        }
        let report = kfold_evaluate(&set, &PipelineConfig::default()).map_err(|e| e.to_string())?;
        let p = 1.0 / k as f64;
        let sigma = (p * (1.0 - p) / set.trials.len() as f64).sqrt();
        let z = (report.mean_accuracy - p) / sigma;
        ensure(z.abs() <= 3.0, || {
            format!(
                "K={k}: accuracy {:.4} vs chance {p:.4} ({z:+.2} σ)",
                report.mean_accuracy
            )
        })?;
        parts.push(format!("K={k}: {:.3} ({z:+.2} σ)", report.mean_accuracy));
    }
    Ok(parts.join(", "))
}

fn variant_equivalence() -> Check {
    let set = generate_synthetic(&desk_spec(4, 11)).map_err(|e| e.to_string())?;
    let single = |variant| PipelineConfig {
        variant,
        banks: false,
        ..Default::default()
    };
    let a = kfold_evaluate(&set, &single(Variant::Mstrca)).map_err(|e| e.to_string())?;
    let b = kfold_evaluate(&set, &single(Variant::Mfbtrca)).map_err(|e| e.to_string())?;
    ensure(
        a.folds
            .iter()
            .zip(&b.folds)
            .all(|(x, y)| x.predictions == y.predictions),
        || "mSTRCA and single-band mFBTRCA predictions differ".into(),
    )?;

    let mut worst: f64 = 0.0;
    let mut diffs = Vec::new();
    for seed in 0..10 {
        let spec = SynthSpec {
            snr_db: Some(-10.0),
            ..desk_spec(2, 60 + seed)
        };
        let set = generate_synthetic(&spec).map_err(|e| e.to_string())?;
        let run = |variant| {
            kfold_evaluate(
                &set,
                &PipelineConfig {
                    variant,
                    seed,
                    ..Default::default()
                },
            )
            .map(|r| r.mean_accuracy)
            .map_err(|e| e.to_string())
        };
        let (m, bin) = (run(Variant::Mfbtrca)?, run(Variant::Bfbtrca)?);
        worst = worst.max((m - bin).abs());
        diffs.push(format!("{m:.2}/{bin:.2}"));
    }
    // Inclusive bound; fold-mean arithmetic can land a hair above an
    // exact 0.05 trial-count difference.
    ensure(worst <= 0.05 + 1e-9, || {
        format!(
            "max |mFBTRCA − bFBTRCA| = {worst:.3}; per seed m/b {}",
            diffs.join(" ")
        )
    })?;
    Ok(format!(
        "single-band predictions identical; max |mFBTRCA − bFBTRCA| = {worst:.3} over 10 seeds ({})",
        diffs.join(" ")
    ))
}

fn p_sweep_trend() -> Check {
    let ps: Vec<usize> = (1..=11).collect();
    let curve = |jittered: bool| -> Result<(usize, Vec<f64>, Vec<usize>), String> {
        let mut mean = vec![0.0; ps.len()];
        let mut per_seed = Vec::new();
        for seed in 0..10 {
            let mut spec = SynthSpec {
                n_classes: 3,
                snr_db: Some(-10.0),
                ..desk_spec(3, 700 + seed)
            };
            if jittered {
                spec.jitter_s = 0.2;
                spec.cue_sources = 5;
                spec.cue_amplitude = 3.0;
            }
            let set = generate_synthetic(&spec).map_err(|e| e.to_string())?;
            let cfg = PipelineConfig {
                variant: Variant::Mstrca,
                seed,
                ..Default::default()
            };
            let pts = p_sweep(&set, &cfg, &ps).map_err(|e| e.to_string())?;
            per_seed.push(argmax(&pts.iter().map(|p| p.mean_accuracy).collect::<Vec<_>>()) + 1);
            for (m, p) in mean.iter_mut().zip(&pts) {
                *m += p.mean_accuracy / 10.0;
            }
        }
        Ok((argmax(&mean) + 1, mean, per_seed))
    };
    let (aligned_best, aligned, aligned_seeds) = curve(false)?;
    let (jit_best, jittered, jit_seeds) = curve(true)?;
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.3}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    ensure((2..=4).contains(&aligned_best) && jit_best >= 5, || {
        format!(
            "aligned peak P={aligned_best} [{}], jittered peak P={jit_best} [{}]",
            fmt(&aligned),
            fmt(&jittered)
        )
    })?;
    Ok(format!(
        "seed-averaged peaks: aligned P={aligned_best} [{}], jittered P={jit_best} [{}]; per-seed argmax aligned {aligned_seeds:?}, jittered {jit_seeds:?}",
        fmt(&aligned),
        fmt(&jittered)
    ))
}

/// First index of the maximum.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// At-scale reproduction, gated on converted public data.

const DATASET_I_ENV: &str = "MRCP_DATASET_I";
const DATASET_II_ENV: &str = "MRCP_DATASET_II";

fn subjects(set: &TrialSet) -> Vec<TrialSet> {
    let ids: BTreeSet<&str> = set.trials.iter().map(|t| t.subject.as_str()).collect();
    ids.into_iter()
        .map(|id| TrialSet {
            trials: set
                .trials
                .iter()
                .filter(|t| t.subject == id)
                .cloned()
                .collect(),
            ..set.clone()
        })
        .collect()
}

fn subject_mean_accuracy(path: &Path, p: usize, window: WindowSpec) -> Result<f64, String> {
    let ds = Dataset::open(path).map_err(|e| e.to_string())?;
    let set = ds.load_trials().map_err(|e| e.to_string())?;
    let set = apply_window(&set, &window, ds.manifest.cue_sample).map_err(|e| e.to_string())?;
    let cfg = PipelineConfig {
        p,
        classifier: ClassifierKind::Svm,
        ..Default::default()
    };
    let accs: Vec<f64> = subjects(&set)
        .iter()
        .map(|s| {
            kfold_evaluate(s, &cfg)
                .map(|r| r.mean_accuracy)
                .map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    Ok(accs.iter().sum::<f64>() / accs.len() as f64)
}

/// Mean accepted trials per class across subjects, from the trajectories.
fn onset_counts(path: &Path) -> Result<BTreeMap<String, f64>, String> {
    let ds = Dataset::open(path).map_err(|e| e.to_string())?;
    let m = &ds.manifest;
    let mut per: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut subjects: BTreeSet<String> = BTreeSet::new();
    for t in &m.trials {
        subjects.insert(t.subject.clone());
        let file = t
            .trajectory_file
            .as_ref()
            .ok_or("trial without trajectory_file")?;
        let samples = read_f32_file(&ds.resolve(file)).map_err(|e| e.to_string())?;
        let record = TrajectoryRecord {
            samples: samples.into_iter().map(f64::from).collect(),
            sampling_rate: m.sampling_rate_hz,
            rule: OnsetRule::for_class_name(&t.label),
            cue_sample: m.cue_sample.ok_or("manifest lacks cue_sample")?,
        };
        if decide_trial(&record, &OnsetConfig::default()).is_accepted() {
            *per.entry((t.label.clone(), t.subject.clone())).or_default() += 1;
        }
    }
    let n = subjects.len() as f64;
    let mut out = BTreeMap::new();
    for ((label, _), count) in per {
        *out.entry(label).or_insert(0.0) += count as f64 / n;
    }
    Ok(out)
}

fn at_scale() -> Option<Check> {
    let one = std::env::var_os(DATASET_I_ENV).map(PathBuf::from);
    let two = std::env::var_os(DATASET_II_ENV).map(PathBuf::from);
    if one.is_none() && two.is_none() {
        return None;
    }
    Some((|| {
        let mut parts = Vec::new();
        if let Some(path) = &one {
            // Table 1 means, keyed by the class-name convention the onset
            // rules use.
            let table: [(&str, f64); 7] = [
                ("elbow_flexion", 60.0),
                ("elbow_extension", 59.0),
                ("supination", 52.0),
                ("pronation", 51.0),
                ("hand_close", 56.0),
                ("hand_open", 55.0),
                ("rest", 59.0),
            ];
            let counts = onset_counts(path)?;
            for (name, want) in table {
                let got = counts.get(name).copied().unwrap_or(0.0);
                ensure((got - want).abs() <= 2.0, || {
                    format!("dataset I {name}: {got:.1} accepted per subject, table {want}")
                })?;
            }
            let acc = subject_mean_accuracy(path, 3, WindowSpec::onset())?;
            ensure((acc - 0.4022).abs() <= 0.05, || {
                format!("dataset I accuracy {acc:.4}")
            })?;
            parts.push(format!("dataset I {acc:.4}"));
        }
        if let Some(path) = &two {
            let acc = subject_mean_accuracy(path, 6, WindowSpec::cue())?;
            ensure((acc - 0.4032).abs() <= 0.05, || {
                format!("dataset II accuracy {acc:.4}")
            })?;
            parts.push(format!("dataset II {acc:.4}"));
        }
        Ok(parts.join(", "))
    })())
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let selected =
        |name: &str| filters.is_empty() || filters.iter().any(|f| name.contains(f.as_str()));
    let checks: [Criterion; 9] = [
        ("covariance-fast-identity", covariance_identity),
        ("gevd-cca-corr2-oracles", gevd_cca_corr2_oracles),
        ("planted-component-recovery", planted_component_recovery),
        ("feature-count-contract", feature_count_contract),
        ("mrmr-oracle-equivalence", mrmr_oracle_equivalence),
        ("end-to-end-synthetic-decode", end_to_end_decode),
        ("chance-level-control", chance_level),
        ("variant-equivalence", variant_equivalence),
        ("p-sweep-trend", p_sweep_trend),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        if !selected(name) {
            continue;
        }
        let start = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.1} s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why} [{secs:.1} s]");
            }
        }
    }
    let name = "paper-number-reproduction";
    if selected(name) {
        match at_scale() {
            None => println!(
                "SKIP {name}: set {DATASET_I_ENV} and/or {DATASET_II_ENV} to converted manifests"
            ),
            Some(Ok(detail)) => println!("PASS {name}: {detail}"),
            Some(Err(why)) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
