use std::fs;
use std::path::{Path, PathBuf};

use mrcp_core::dataio::{read_f32_file, save_trial_set, Dataset, Manifest};
use mrcp_core::onset::{
    decide_trial, OnsetConfig, OnsetEntry, OnsetReport, OnsetRule, TrajectoryRecord,
};
use mrcp_core::pipeline::{
    apply_window, kfold_evaluate_detailed, p_sweep, pairwise, parse_k_grid, EvaluationReport,
    ModelSummary,
};
use mrcp_core::{ClassifierKind, Error, PipelineConfig, Result, SynthSpec, TrialSet, Variant};
use serde_json::Value;

use crate::args::{ClassifierArg, PipelineArgs, Switch, VariantArg};
use crate::render::{self, Scale};

pub const SEED_ENV: &str = "MRCP_DECODE_SEED";

/// Layers flags over the config file over the defaults. The seed comes
/// from `--seed`, then the config file, then the environment, then 0.
pub fn resolve_config(args: &PipelineArgs) -> Result<PipelineConfig> {
    let (mut cfg, file_has_seed) = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let cfg = PipelineConfig::from_json(&text)?;
            let has_seed = serde_json::from_str::<Value>(&text)
                .ok()
                .and_then(|v| v.get("seed").cloned())
                .is_some();
            (cfg, has_seed)
        }
        None => (PipelineConfig::default(), false),
    };
    if let Some(v) = args.variant {
        cfg.variant = match v {
            VariantArg::Bstrca => Variant::Bstrca,
            VariantArg::Bfbtrca => Variant::Bfbtrca,
            VariantArg::Mstrca => Variant::Mstrca,
            VariantArg::Mfbtrca => Variant::Mfbtrca,
        };
    }
    if let Some(p) = args.p {
        cfg.p = p;
    }
    if let Some(c) = args.classifier {
        cfg.classifier = match c {
            ClassifierArg::Svm => ClassifierKind::Svm,
            ClassifierArg::Lda => ClassifierKind::Lda,
        };
    }
    if let Some(c) = args.c_reg {
        cfg.c_reg = c;
    }
    if let Some(b) = args.banks {
        cfg.banks = b == Switch::On;
    }
    if let Some(g) = &args.k_grid {
        cfg.k_grid = parse_k_grid(g)?;
    }
    if let Some(f) = args.folds {
        cfg.folds = f;
    }
    match args.seed {
        Some(s) => cfg.seed = s,
        None if !file_has_seed => {
            if let Some(s) = env_seed()? {
                cfg.seed = s;
            }
        }
        None => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(text) => {
            text.trim().parse().map(Some).map_err(|_| {
                Error::Config(format!("{SEED_ENV}={text:?} is not an unsigned integer"))
            })
        }
        Err(_) => Ok(None),
    }
}

/// Loads the trials and applies the configured epoch window, if any.
fn load(manifest: &Path, cfg: &PipelineConfig) -> Result<TrialSet> {
    let ds = Dataset::open(manifest)?;
    let set = ds.load_trials()?;
    match &cfg.window {
        Some(w) => apply_window(&set, w, ds.manifest.cue_sample),
        None => Ok(set),
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| Error::Io { path, source })
}

fn write_json(dir: &Path, name: &str, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("outputs serialise");
    write(dir, name, &(text + "\n"))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn validate(manifest: &Path) -> Result<String> {
    let set = Dataset::open(manifest)?.load_trials()?;
    let counts = set
        .class_names
        .iter()
        .zip(set.class_counts())
        .map(|(n, c)| format!("{n}:{c}"))
        .collect::<Vec<_>>()
        .join(",");
    Ok(format!(
        "ok trials={} channels={} samples={} fs={} classes={counts}",
        set.trials.len(),
        set.n_channels(),
        set.n_samples(),
        set.sampling_rate()
    ))
}

pub fn eval(manifest: &Path, args: &PipelineArgs, out: &Path) -> Result<String> {
    let cfg = resolve_config(args)?;
    let set = load(manifest, &cfg)?;
    let run = kfold_evaluate_detailed(&set, &cfg)?;
    create_dir(out)?;
    write_json(out, "config.json", &cfg)?;
    write_report_files(&run.report, out)?;
    let models: Vec<ModelSummary> = run.models.iter().map(|m| m.summary()).collect();
    write_json(out, "models.json", &models)?;
    Ok(format!(
        "ok mean_accuracy={:.4} std_accuracy={:.4} folds={} out={}",
        run.report.mean_accuracy,
        run.report.std_accuracy,
        run.report.folds.len(),
        out.display()
    ))
}

fn write_report_files(report: &EvaluationReport, out: &Path) -> Result<()> {
    write_json(out, "report.json", report)?;
    let names = &report.class_names;
    write(
        out,
        "confusion.csv",
        &render::matrix_csv(&report.confusion, names),
    )?;
    write(
        out,
        "template_correlation.csv",
        &render::matrix_csv(&report.template_correlation, names),
    )?;
    write(
        out,
        "confusion.svg",
        &render::heatmap_svg(
            &report.confusion,
            names,
            "Confusion (row-normalised)",
            Scale::Unit,
        ),
    )?;
    write(
        out,
        "template_correlation.svg",
        &render::heatmap_svg(
            &report.template_correlation,
            names,
            "Template correlation",
            Scale::Signed,
        ),
    )
}

pub fn report(path: &Path, out: &Path) -> Result<String> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let report: EvaluationReport =
        serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let k = report.class_names.len();
    if report.confusion.shape() != (k, k) || report.template_correlation.shape() != (k, k) {
        return Err(Error::Data(format!(
            "{}: matrices do not match {k} classes",
            path.display()
        )));
    }
    create_dir(out)?;
    write_report_files(&report, out)?;
    Ok(format!("ok out={}", out.display()))
}

pub fn sweep(manifest: &Path, args: &PipelineArgs, ps: Option<&str>, out: &Path) -> Result<String> {
    let cfg = resolve_config(args)?;
    let set = load(manifest, &cfg)?;
    let ps = match ps {
        Some(text) => parse_ps(text)?,
        None => (1..=set.n_channels()).collect(),
    };
    let points = p_sweep(&set, &cfg, &ps)?;
    create_dir(out)?;
    write_json(out, "config.json", &cfg)?;
    write(out, "sweep_p.csv", &render::sweep_csv(&points))?;
    let best = points
        .iter()
        .fold(None::<&mrcp_core::pipeline::SweepPoint>, |b, pt| match b {
            Some(b) if b.mean_accuracy >= pt.mean_accuracy => Some(b),
            _ => Some(pt),
        })
        .expect("at least one P");
    Ok(format!(
        "ok best_p={} mean_accuracy={:.4} out={}",
        best.p,
        best.mean_accuracy,
        out.display()
    ))
}

/// `2,3,6` or `1..11` (inclusive).
pub fn parse_ps(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::Config(format!("invalid P list {text:?}"));
    let ps: Vec<usize> = if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        (lo..=hi).collect()
    } else {
        text.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if ps.is_empty() {
        return Err(bad());
    }
    Ok(ps)
}

pub fn pairwise_cmd(manifest: &Path, args: &PipelineArgs, out: &Path) -> Result<String> {
    let cfg = resolve_config(args)?;
    let set = load(manifest, &cfg)?;
    let rows = pairwise(&set, &cfg)?;
    create_dir(out)?;
    write_json(out, "config.json", &cfg)?;
    write(out, "pairwise.csv", &render::pairwise_csv(&rows))?;
    Ok(format!("ok pairs={} out={}", rows.len(), out.display()))
}

pub fn synth(spec: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<String> {
    let mut spec: SynthSpec = match spec {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("synthetic spec: {e}")))?
        }
        None => SynthSpec::default(),
    };
    match seed {
        Some(s) => spec.seed = s,
        None => {
            if let Some(s) = env_seed()? {
                spec.seed = s;
            }
        }
    }
    let set = mrcp_core::generate_synthetic(&spec)?;
    let manifest = save_trial_set(&set, out)?;
    write_json(out, "synth_spec.json", &spec)?;
    Ok(format!(
        "ok trials={} manifest={}",
        set.trials.len(),
        manifest.display()
    ))
}

pub fn onset(manifest_path: &Path, out: &Path, apply: bool) -> Result<String> {
    let ds = Dataset::open(manifest_path)?;
    let m = &ds.manifest;
    let cfg = OnsetConfig::default();
    let mut entries = Vec::with_capacity(m.trials.len());
    for (index, t) in m.trials.iter().enumerate() {
        let label = m.class_index(&t.label).ok_or_else(|| Error::Manifest {
            path: manifest_path.to_path_buf(),
            msg: format!("unknown label {:?} for {}", t.label, t.file),
        })?;
        let traj_file = t
            .trajectory_file
            .as_ref()
            .ok_or_else(|| Error::Data(format!("trial {} has no trajectory_file", t.file)))?;
        let rule = OnsetRule::for_class_name(&t.label);
        let cue_sample = match (rule, m.cue_sample) {
            (_, Some(c)) => c,
            (OnsetRule::Rest, None) => {
                return Err(Error::Data(
                    "resting trials need the manifest's cue_sample".into(),
                ))
            }
            (_, None) => 0,
        };
        let samples = read_f32_file(&ds.resolve(traj_file))?
            .into_iter()
            .map(f64::from)
            .collect();
        let record = TrajectoryRecord {
            samples,
            sampling_rate: m.sampling_rate_hz,
            rule,
            cue_sample,
        };
        entries.push(OnsetEntry {
            index,
            label,
            decision: decide_trial(&record, &cfg),
        });
    }
    let report = OnsetReport::from_decisions(entries);
    create_dir(out)?;
    write_json(out, "onset_report.json", &report)?;
    if apply {
        write_onset_manifest(&ds, &report, out)?;
    }
    Ok(format!(
        "ok accepted={} rejected={} out={}",
        report.accepted,
        report.trials.len() - report.accepted,
        out.display()
    ))
}

/// Accepted trials only, with onsets filled in and payload paths made
/// absolute so the manifest works from `out`.
fn write_onset_manifest(ds: &Dataset, report: &OnsetReport, out: &Path) -> Result<()> {
    let absolute = |file: &str| -> Result<String> {
        let p: PathBuf = std::path::absolute(ds.resolve(file)).map_err(|source| Error::Io {
            path: ds.resolve(file),
            source,
        })?;
        Ok(p.to_string_lossy().into_owned())
    };
    let mut trials = Vec::new();
    for e in &report.trials {
        if let Some(onset) = e.decision.onset_sample.filter(|_| e.decision.is_accepted()) {
            let mut t = ds.manifest.trials[e.index].clone();
            t.file = absolute(&t.file)?;
            t.trajectory_file = t.trajectory_file.as_deref().map(absolute).transpose()?;
            t.onset_sample = Some(onset);
            trials.push(t);
        }
    }
    let manifest = Manifest {
        trials,
        ..ds.manifest.clone()
    };
    manifest.write(&out.join("manifest.json"))
}
