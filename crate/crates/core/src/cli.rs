//! Subcommands behind the `shapecl` binary. Each `cmd_*` returns a process
//! exit code; the fallible work lives in the matching function without the
//! prefix so tests and other front ends can call it directly.
//!
//! Exit codes: 0 success, 2 configuration, 3 I/O, 4 numerical failure,
//! 5 corrupt model or checkpoint.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::RunConfig;
use crate::continual::{
    class_shape_model, run_protocol_with_state, split_tasks, MetricsReport, Mode,
};
use crate::data::{build_benchmark, load_dataset, write_benchmark};
use crate::error::{Error, Result};
use crate::network::save_checkpoint;
use crate::shapemodel::{load_model, save_model, Footprint, ModelManifest, ModelManifestEntry};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_CORRUPT: i32 = 5;

pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CHECKPOINT_FILE: &str = "model.mirn";
pub const LOG_FILE: &str = "run.log";
pub const MODELS_DIR: &str = "models";
pub const MODELS_MANIFEST: &str = "models.json";

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } | Error::Parse { .. } => EXIT_IO,
        Error::NonFinite(_) => EXIT_NUMERIC,
        Error::BadMagic { .. } | Error::VersionMismatch { .. } | Error::Truncated(_) => {
            EXIT_CORRUPT
        }
        _ => EXIT_CONFIG,
    }
}

fn report(result: Result<()>) -> i32 {
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Generate the synthetic benchmark under `out/`; returns the manifest path.
pub fn bench(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let b = &cfg.bench;
    let benchmark = build_benchmark(
        b.classes,
        b.train_per_class,
        b.test_per_class,
        b.points,
        cfg.seed,
    )?;
    let manifest = cfg.manifest_path();
    let dir = manifest.parent().unwrap_or(Path::new("."));
    create_dir(dir)?;
    let written = write_benchmark(&benchmark, dir)?;
    if written != manifest {
        fs::rename(&written, &manifest).map_err(|e| Error::io(&manifest, e))?;
    }
    Ok(manifest)
}

pub fn cmd_bench(cfg: &RunConfig) -> i32 {
    report(bench(cfg).map(|p| println!("{}", p.display())))
}

/// Build one shape model per class of the dataset and index them in
/// `out/models/models.json`.
pub fn models(cfg: &RunConfig) -> Result<ModelManifest> {
    cfg.validate()?;
    let dataset = load_dataset(cfg.manifest_path())?;
    let dir = cfg.out_dir().join(MODELS_DIR);
    create_dir(&dir)?;
    let mut entries = Vec::with_capacity(dataset.classes.len());
    for class in &dataset.classes {
        let model = class_shape_model(class, cfg.k)?;
        let file = format!("{}.mir3", class.class_id);
        save_model(&model, dir.join(&file))?;
        let fp = model.footprint();
        entries.push(ModelManifestEntry {
            class_id: class.class_id.clone(),
            path: file,
            units: fp.units,
            floats: fp.floats,
        });
    }
    let manifest = ModelManifest::from_entries(entries);
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    write_file(&dir.join(MODELS_MANIFEST), json)?;
    Ok(manifest)
}

pub fn cmd_models(cfg: &RunConfig) -> i32 {
    report(models(cfg).map(|m| {
        println!(
            "{} models, {} units, {} floats",
            m.models.len(),
            m.total.units,
            m.total.floats
        )
    }))
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    mode: Mode,
    a_avg: f64,
    a_last: f64,
    forgetting_rate: Option<f64>,
    memory_units: usize,
    per_session_acc: &'a [f64],
    seen_classes: &'a [usize],
    config: &'a RunConfig,
}

pub fn summary_json(cfg: &RunConfig, report: &MetricsReport) -> String {
    let summary = Summary {
        mode: cfg.mode,
        a_avg: report.a_avg,
        a_last: report.a_last,
        forgetting_rate: report.forgetting_rate,
        memory_units: report.memory_units,
        per_session_acc: &report.per_session_acc,
        seen_classes: &report.seen_classes,
        config: cfg,
    };
    let mut s = serde_json::to_string_pretty(&summary).expect("summary serializes");
    s.push('\n');
    s
}

/// Run the configured protocol. Writes `metrics.csv`, `summary.json` and the
/// final checkpoint; wall-clock timings go to `run.log` only.
pub fn train(cfg: &RunConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let started = Instant::now();
    let mut log = String::new();
    let dataset = load_dataset(cfg.manifest_path())?;
    let ids = dataset.class_ids();
    let take = cfg.bench.classes.min(ids.len());
    let schedule = split_tasks(&ids[..take], cfg.bench.per_session)?;
    let tc = cfg.train_config();

    let (mut report, state) = run_protocol_with_state(&dataset, &schedule, &tc, cfg.mode)?;
    let _ = writeln!(
        log,
        "{} finished in {:.3} s",
        cfg.mode.name(),
        started.elapsed().as_secs_f64()
    );
    if cfg.mode == Mode::Joint {
        report = report.clone().with_joint_reference(report.a_last);
    } else if cfg.joint_reference {
        let t = Instant::now();
        let (joint, _) = run_protocol_with_state(&dataset, &schedule, &tc, Mode::Joint)?;
        report = report.with_joint_reference(joint.a_last);
        let _ = writeln!(
            log,
            "joint reference finished in {:.3} s",
            t.elapsed().as_secs_f64()
        );
    }

    let out = cfg.out_dir();
    create_dir(&out)?;
    write_file(&out.join(METRICS_FILE), report.to_csv())?;
    write_file(&out.join(SUMMARY_FILE), summary_json(cfg, &report))?;
    save_checkpoint(&state.params, out.join(CHECKPOINT_FILE))?;
    write_file(&out.join(LOG_FILE), log)?;
    Ok(report)
}

pub fn cmd_train(cfg: &RunConfig) -> i32 {
    report(train(cfg).map(|r| {
        println!(
            "a_avg {:.4}  a_last {:.4}  memory_units {}",
            r.a_avg, r.a_last, r.memory_units
        );
    }))
}

#[derive(Debug, Serialize)]
pub struct ModelInfo {
    pub class_id: String,
    pub n: usize,
    pub k: usize,
    pub sigmas: Vec<f64>,
    pub orthonormality_residual: f64,
    pub footprint: Footprint,
}

pub fn inspect(path: impl AsRef<Path>) -> Result<ModelInfo> {
    let model = load_model(path)?;
    Ok(ModelInfo {
        class_id: model.class_id.clone(),
        n: model.n(),
        k: model.k(),
        sigmas: model.sigmas.clone(),
        orthonormality_residual: model.orthonormality_residual(),
        footprint: model.footprint(),
    })
}

pub fn cmd_inspect(path: impl AsRef<Path>) -> i32 {
    report(inspect(path).map(|info| {
        println!(
            "{}",
            serde_json::to_string_pretty(&info).expect("info serializes")
        )
    }))
}
