//! Sweep execution: one output directory per sweep point (named by config
//! hash), a manifest listing every artifact, and deterministic bytes for
//! everything outside the manifest's metadata block.

use crate::config::{ConfigError, ExperimentConfig, SweepPoint};
use pgpp_core::aka::{simulate_mass_attach, AttachOutcome, MassAttachConfig};
use pgpp_core::anonymity::{area_anonymity, metrics_row, MetricsRow};
use pgpp_core::mobility::{attach_timeline, read_traces_csv, synth_traces, AttachmentTimeline};
use pgpp_core::paging::{run_sim, SimConfig, SimReport, TrafficConfig};
use pgpp_core::topology::{load_topology, synth_sites, SynthTopologyConfig, Topology};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("topology: {0}")]
    Topology(#[from] pgpp_core::topology::TopologyError),
    #[error("mobility: {0}")]
    Mobility(#[from] pgpp_core::mobility::MobilityError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: String,
    pub mode: String,
    pub tal_length: usize,
    /// TA count actually in effect for the run.
    pub ta_count: usize,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AkaRunRecord {
    pub id: String,
    pub shared_imsi: bool,
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub meta: ManifestMeta,
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    #[serde(default)]
    pub aka_runs: Vec<AkaRunRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestMeta {
    /// Wall-clock stamp; the only non-deterministic output byte range.
    pub created_at_epoch_s: u64,
    pub tool: String,
}

impl Manifest {
    pub fn failed_runs(&self) -> usize {
        self.runs.iter().filter(|r| r.status != "ok").count()
    }
}

/// Run every sweep point (in parallel up to `workers`) and write the
/// manifest. A failing point is recorded and skipped; the rest continue.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<Manifest, ExperimentError> {
    fs::create_dir_all(out_dir)?;

    let base_topo = build_topology(cfg)?;
    let timelines = build_timelines(cfg, &base_topo)?;

    // topology variants per distinct ta_count, built once each
    let points = cfg.sweep_points();
    let mut variants: BTreeMap<Option<usize>, Topology> = BTreeMap::new();
    for p in &points {
        if let std::collections::btree_map::Entry::Vacant(e) = variants.entry(p.ta_count) {
            let topo = match p.ta_count {
                None => base_topo.clone(),
                Some(k) => base_topo.with_kmeans_tas(k, cfg.seed)?,
            };
            e.insert(topo);
        }
    }
    // timelines resolve eNBs identically across variants; only TA labels move
    let variant_timelines: BTreeMap<Option<usize>, Vec<AttachmentTimeline>> = variants
        .iter()
        .map(|(k, topo)| (*k, remap_tas(&timelines, topo)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    let mut runs: Vec<RunRecord> = pool.install(|| {
        points
            .par_iter()
            .map(|point| {
                let topo = &variants[&point.ta_count];
                let tls = &variant_timelines[&point.ta_count];
                execute_point(cfg, point, topo, tls, out_dir)
            })
            .collect()
    });
    runs.sort_by(|a, b| a.id.cmp(&b.id));

    let aka_runs = match &cfg.aka {
        Some(aka) => run_aka_points(cfg, aka, out_dir)?,
        None => Vec::new(),
    };

    let manifest = Manifest {
        meta: ManifestMeta {
            created_at_epoch_s: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            tool: format!("pgpp {}", env!("CARGO_PKG_VERSION")),
        },
        config: cfg.clone(),
        runs,
        aka_runs,
    };
    fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_vec_pretty(&manifest)?,
    )?;
    Ok(manifest)
}

pub fn build_topology(cfg: &ExperimentConfig) -> Result<Topology, ExperimentError> {
    match cfg.topology.source.as_str() {
        "csv" => {
            let path = cfg.topology.csv_path.as_ref().expect("validated");
            let file = fs::File::open(path)?;
            Ok(load_topology(file)?)
        }
        _ => {
            let sites = synth_sites(&SynthTopologyConfig {
                n_sites: cfg.topology.n_sites,
                n_clusters: cfg.topology.n_clusters,
                extent_km: cfg.topology.extent_km,
                center_lat: cfg.topology.center_lat,
                center_lon: cfg.topology.center_lon,
                seed: cfg.seed,
            });
            Ok(Topology::from_sites(sites)?)
        }
    }
}

fn build_timelines(
    cfg: &ExperimentConfig,
    topo: &Topology,
) -> Result<Vec<AttachmentTimeline>, ExperimentError> {
    let traces = match &cfg.mobility.trace_csv {
        Some(path) => read_traces_csv(fs::File::open(path)?)?,
        None => synth_traces(
            topo.region,
            cfg.mobility.n_cars,
            cfg.mobility.n_pedestrians,
            cfg.mobility.duration_ticks,
            cfg.seed,
        ),
    };
    traces
        .iter()
        .map(|t| attach_timeline(t, topo).map_err(ExperimentError::from))
        .collect()
}

fn remap_tas(timelines: &[AttachmentTimeline], topo: &Topology) -> Vec<AttachmentTimeline> {
    timelines
        .iter()
        .map(|t| AttachmentTimeline {
            ue_id: t.ue_id.clone(),
            attachments: t
                .attachments
                .iter()
                .map(|&(enb, _)| (enb, topo.ta_of(enb)))
                .collect(),
        })
        .collect()
}

fn execute_point(
    cfg: &ExperimentConfig,
    point: &SweepPoint,
    topo: &Topology,
    timelines: &[AttachmentTimeline],
    out_dir: &Path,
) -> RunRecord {
    let id = cfg.point_id(point);
    let dir = out_dir.join(&id);
    let mut record = RunRecord {
        id: id.clone(),
        mode: match point.mode {
            pgpp_core::paging::SimMode::Conventional => "conventional".into(),
            pgpp_core::paging::SimMode::Tal(_) => "tal".into(),
        },
        tal_length: point.mode.tal_length(),
        ta_count: topo.ta_map.ta_count(),
        status: "ok".into(),
        error: None,
        artifacts: BTreeMap::new(),
    };
    match run_point(cfg, point, topo, timelines, &dir) {
        Ok(artifacts) => {
            record.artifacts = artifacts;
        }
        Err(e) => {
            record.status = "error".into();
            record.error = Some(e.to_string());
            // a failing point must not leave partial outputs behind
            let _ = fs::remove_dir_all(&dir);
        }
    }
    record
}

fn run_point(
    cfg: &ExperimentConfig,
    point: &SweepPoint,
    topo: &Topology,
    timelines: &[AttachmentTimeline],
    dir: &Path,
) -> Result<BTreeMap<String, String>, String> {
    let sim_cfg = SimConfig {
        mode: point.mode,
        traffic: TrafficConfig {
            call_fraction: cfg.traffic.call_fraction,
            call_duration_ticks: cfg.traffic.call_duration_ticks,
        },
        seed: cfg.seed,
        tal_growth: cfg.sweep.tal_growth,
        user_count_mode: cfg.sweep.user_count_mode,
        tick_seconds: pgpp_core::mobility::TICK_SECONDS,
    };
    let report = run_sim(timelines, topo, &sim_cfg).map_err(|e| e.to_string())?;
    let metrics = metrics_row(
        &report,
        &topo.positions,
        cfg.traffic.page_budget_per_sec * 3600,
    )
    .map_err(|e| e.to_string())?;

    fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    let mut artifacts = BTreeMap::new();
    write_artifact(dir, "report.json", &report, &mut artifacts)?;
    write_artifact(dir, "metrics.json", &metrics, &mut artifacts)?;
    write_artifact(dir, "topology.json", &topo.snapshot(), &mut artifacts)?;

    let pages_path = dir.join("pages.csv");
    let file = fs::File::create(&pages_path).map_err(|e| e.to_string())?;
    report.write_pages_csv(file).map_err(|e| e.to_string())?;
    artifacts.insert("pages_csv".into(), pages_path.to_string_lossy().into_owned());

    // per-page broadcast areas for the CDF figures
    let areas = area_anonymity(&report, &topo.positions);
    let areas_path = dir.join("areas.csv");
    let mut w = csv::Writer::from_path(&areas_path).map_err(|e| e.to_string())?;
    w.write_record(["area_km2"]).map_err(|e| e.to_string())?;
    for a in &areas.areas_km2 {
        w.write_record([format!("{a:.6}")]).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())?;
    artifacts.insert("areas_csv".into(), areas_path.to_string_lossy().into_owned());
    Ok(artifacts)
}

fn write_artifact<T: Serialize>(
    dir: &Path,
    name: &str,
    value: &T,
    artifacts: &mut BTreeMap<String, String>,
) -> Result<(), String> {
    let path = dir.join(name);
    let bytes = serde_json::to_vec_pretty(value).map_err(|e| e.to_string())?;
    fs::write(&path, bytes).map_err(|e| e.to_string())?;
    let key = name.trim_end_matches(".json").replace('.', "_");
    artifacts.insert(key, path.to_string_lossy().into_owned());
    Ok(())
}

fn run_aka_points(
    cfg: &ExperimentConfig,
    aka: &crate::config::AkaSection,
    out_dir: &Path,
) -> Result<Vec<AkaRunRecord>, ExperimentError> {
    let mut records = Vec::new();
    for shared in [true, false] {
        let outcomes = simulate_mass_attach(&MassAttachConfig {
            n_ues: aka.n_ues,
            shared_imsi: shared,
            round_latency_ms: aka.round_latency_ms,
            sqn_window: 0,
            seed: cfg.seed,
        });
        let id = format!("aka-{}", if shared { "shared" } else { "unique" });
        let dir = out_dir.join(&id);
        fs::create_dir_all(&dir)?;
        let mut artifacts = BTreeMap::new();

        let jsonl_path = dir.join("outcomes.jsonl");
        let mut lines = String::new();
        for o in &outcomes {
            lines.push_str(&serde_json::to_string(o)?);
            lines.push('\n');
        }
        fs::write(&jsonl_path, lines)?;
        artifacts.insert("outcomes_jsonl".into(), jsonl_path.to_string_lossy().into_owned());

        let hist_path = dir.join("delay_hist.csv");
        write_delay_histogram(&outcomes, &hist_path)?;
        artifacts.insert("delay_hist_csv".into(), hist_path.to_string_lossy().into_owned());

        records.push(AkaRunRecord {
            id,
            shared_imsi: shared,
            artifacts,
        });
    }
    Ok(records)
}

/// Histogram of completion delays (100 ms bins), the data behind the
/// connection-delay density plot.
pub fn write_delay_histogram(outcomes: &[AttachOutcome], path: &Path) -> Result<(), ExperimentError> {
    let mut bins: BTreeMap<u64, u64> = BTreeMap::new();
    for o in outcomes {
        *bins.entry((o.total_delay_ms / 100.0) as u64).or_insert(0) += 1;
    }
    let mut w = csv::Writer::from_path(path).map_err(std::io::Error::other)?;
    w.write_record(["bin_start_ms", "count"])
        .map_err(std::io::Error::other)?;
    for (bin, count) in bins {
        w.write_record([(bin * 100).to_string(), count.to_string()])
            .map_err(std::io::Error::other)?;
    }
    w.flush()?;
    Ok(())
}

/// Load a manifest back from disk.
pub fn load_manifest(path: &Path) -> Result<Manifest, ExperimentError> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

/// Recompute the metrics row for a finished run directory.
pub fn recompute_metrics(run_dir: &Path, budget_per_hour: u64) -> Result<MetricsRow, ExperimentError> {
    let report: SimReport = serde_json::from_slice(&fs::read(run_dir.join("report.json"))?)?;
    let snapshot: pgpp_core::topology::TopologySnapshot =
        serde_json::from_slice(&fs::read(run_dir.join("topology.json"))?)?;
    metrics_row(&report, &snapshot.positions_m, budget_per_hour)
        .map_err(|e| ExperimentError::Io(std::io::Error::other(e.to_string())))
}

/// Paths of the non-manifest artifacts of a manifest, for determinism checks.
pub fn artifact_paths(manifest: &Manifest) -> Vec<PathBuf> {
    let mut paths: Vec<PathBuf> = manifest
        .runs
        .iter()
        .flat_map(|r| r.artifacts.values())
        .chain(manifest.aka_runs.iter().flat_map(|r| r.artifacts.values()))
        .map(PathBuf::from)
        .collect();
    paths.sort();
    paths
}
