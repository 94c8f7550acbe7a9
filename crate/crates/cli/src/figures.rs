//! Plot-ready CSV emission from a finished experiment manifest. Data only,
//! no rendering; column schemas are documented in the README.

use crate::experiment::{ExperimentError, Manifest};
use pgpp_core::anonymity::MetricsRow;
use pgpp_core::paging::{Capacity, SimReport};
use std::fs;
use std::path::Path;

/// Emit every figure file; returns warnings for runs that had to be skipped.
pub fn emit_figures_data(manifest: &Manifest, out_dir: &Path) -> Result<Vec<String>, ExperimentError> {
    fs::create_dir_all(out_dir)?;
    let mut warnings = Vec::new();

    let mut control = csv::Writer::from_path(out_dir.join("control_cdf.csv"))
        .map_err(std::io::Error::other)?;
    control
        .write_record(["run_id", "mode", "tal_length", "ta_count", "enb_id", "pages"])
        .map_err(std::io::Error::other)?;

    let mut capacity = csv::Writer::from_path(out_dir.join("capacity.csv"))
        .map_err(std::io::Error::other)?;
    capacity
        .write_record(["run_id", "mode", "tal_length", "ta_count", "percentile", "supportable_users"])
        .map_err(std::io::Error::other)?;

    let mut anonymity = csv::Writer::from_path(out_dir.join("anonymity.csv"))
        .map_err(std::io::Error::other)?;
    anonymity
        .write_record(["run_id", "mode", "tal_length", "ta_count", "d_global", "d_local", "median_area_km2"])
        .map_err(std::io::Error::other)?;

    let mut area = csv::Writer::from_path(out_dir.join("area_cdf.csv"))
        .map_err(std::io::Error::other)?;
    area.write_record(["run_id", "mode", "tal_length", "ta_count", "area_km2"])
        .map_err(std::io::Error::other)?;

    for run in &manifest.runs {
        if run.status != "ok" {
            warnings.push(format!("run {} skipped: {}", run.id, run.status));
            continue;
        }
        let report: SimReport = match read_json(run.artifacts.get("report")) {
            Ok(r) => r,
            Err(e) => {
                warnings.push(format!("run {}: {e}", run.id));
                continue;
            }
        };
        let metrics: MetricsRow = match read_json(run.artifacts.get("metrics")) {
            Ok(m) => m,
            Err(e) => {
                warnings.push(format!("run {}: {e}", run.id));
                continue;
            }
        };
        let tag = [
            run.id.clone(),
            run.mode.clone(),
            run.tal_length.to_string(),
            run.ta_count.to_string(),
        ];

        for (i, &pages) in report.per_enb_pages.iter().enumerate() {
            let mut row = tag.to_vec();
            row.push(report.enb_labels[i].clone());
            row.push(pages.to_string());
            control.write_record(&row).map_err(std::io::Error::other)?;
        }

        for (name, cap) in [
            ("max", metrics.capacity.max),
            ("p95", metrics.capacity.p95),
            ("median", metrics.capacity.median),
        ] {
            let mut row = tag.to_vec();
            row.push(name.to_string());
            row.push(match cap {
                Capacity::Unbounded => "unbounded".to_string(),
                Capacity::Users(u) => format!("{u:.1}"),
            });
            capacity.write_record(&row).map_err(std::io::Error::other)?;
        }

        let mut row = tag.to_vec();
        row.extend([
            format!("{:.6}", metrics.d_global),
            format!("{:.6}", metrics.d_local),
            format!("{:.3}", metrics.median_area_km2),
        ]);
        anonymity.write_record(&row).map_err(std::io::Error::other)?;

        if let Some(path) = run.artifacts.get("areas_csv") {
            let mut rdr = csv::Reader::from_path(path).map_err(std::io::Error::other)?;
            for rec in rdr.records() {
                let rec = rec.map_err(std::io::Error::other)?;
                let mut row = tag.to_vec();
                row.push(rec[0].to_string());
                area.write_record(&row).map_err(std::io::Error::other)?;
            }
        }
    }
    control.flush()?;
    capacity.flush()?;
    anonymity.flush()?;
    area.flush()?;

    // attach-delay density data from the AKA runs
    let mut delay = csv::Writer::from_path(out_dir.join("attach_delay.csv"))
        .map_err(std::io::Error::other)?;
    delay
        .write_record(["run_id", "shared_imsi", "bin_start_ms", "count"])
        .map_err(std::io::Error::other)?;
    for run in &manifest.aka_runs {
        let Some(path) = run.artifacts.get("delay_hist_csv") else {
            warnings.push(format!("aka run {} has no histogram", run.id));
            continue;
        };
        let mut rdr = csv::Reader::from_path(path).map_err(std::io::Error::other)?;
        for rec in rdr.records() {
            let rec = rec.map_err(std::io::Error::other)?;
            delay
                .write_record([
                    run.id.as_str(),
                    &run.shared_imsi.to_string(),
                    &rec[0],
                    &rec[1],
                ])
                .map_err(std::io::Error::other)?;
        }
    }
    delay.flush()?;
    Ok(warnings)
}

fn read_json<T: serde::de::DeserializeOwned>(path: Option<&String>) -> Result<T, String> {
    let path = path.ok_or("missing artifact path")?;
    let bytes = fs::read(path).map_err(|e| e.to_string())?;
    serde_json::from_slice(&bytes).map_err(|e| e.to_string())
}
