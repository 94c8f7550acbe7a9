//! Privacy metrics over simulation reports: degree of anonymity for
//! global-bulk and local-bulk attackers, and broadcast-area anonymity for
//! local-targeted attackers.
//!
//! Degree of anonymity is the normalized entropy of the attacker's candidate
//! set: `d = log2(S) / log2(N)` for a candidate set of size S out of N users.
//! S is the median per-page count of occupied eNBs for the global-bulk view
//! and the mean per-eNB user count (over occupied eNBs) for the local-bulk
//! view; both reductions are deliberately different and fixed.

use crate::geo::Point;
use crate::paging::{CapacityEstimate, SimMode, SimReport};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnonymityError {
    #[error("candidate set size {s} outside [1, {n}]")]
    BadCandidateSet { s: f64, n: f64 },
    #[error("population must be at least 2, got {0}")]
    PopulationTooSmall(f64),
    #[error("report has no page records")]
    EmptyReport,
    #[error("report has no attachments")]
    NoAttachments,
}

/// `d = log2(S) / log2(N)`. S may be real-valued (a mean plugs in directly).
pub fn degree_of_anonymity(s: f64, n: f64) -> Result<f64, AnonymityError> {
    if n < 2.0 {
        return Err(AnonymityError::PopulationTooSmall(n));
    }
    if !(1.0..=n).contains(&s) {
        return Err(AnonymityError::BadCandidateSet { s, n });
    }
    Ok(s.log2() / n.log2())
}

/// Anonymity against an attacker with global network visibility: the victim
/// could be behind any paged eNB that has at least one user. S is the median
/// of `enbs_with_users` over page records. A conventional network has unique
/// IMSIs, so its degree is 0 by definition.
pub fn global_bulk_anonymity(report: &SimReport, population: u64) -> Result<f64, AnonymityError> {
    if report.page_records.is_empty() {
        return Err(AnonymityError::EmptyReport);
    }
    if report.config.mode == SimMode::Conventional {
        return Ok(0.0);
    }
    let mut counts: Vec<u32> = report
        .page_records
        .iter()
        .map(|r| r.enbs_with_users)
        .collect();
    counts.sort_unstable();
    let s = median_u32(&counts);
    degree_of_anonymity(s, population as f64)
}

/// Anonymity against a local observer (IMSI catcher, SDR): S is the mean
/// number of users connected to each eNB that has users.
pub fn local_bulk_anonymity(report: &SimReport, population: u64) -> Result<f64, AnonymityError> {
    let s = report
        .occupancy
        .mean_users_per_occupied_enb()
        .ok_or(AnonymityError::NoAttachments)?;
    degree_of_anonymity(s, population as f64)
}

fn median_u32(sorted: &[u32]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0
    }
}

fn median_f64(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Geographic broadcast areas, one entry per page record (km²).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AreaReport {
    pub areas_km2: Vec<f64>,
    pub median_km2: f64,
    pub p5_km2: f64,
    pub p95_km2: f64,
}

/// Bounding-box area of the paged eNBs' coordinates per page record. A page
/// reaching a single eNB has area 0 and is kept.
pub fn area_anonymity(report: &SimReport, positions: &[Point]) -> AreaReport {
    let areas_km2: Vec<f64> = report
        .page_records
        .iter()
        .map(|r| {
            let pts: Vec<Point> = r.enbs_paged.iter().map(|&e| positions[e as usize]).collect();
            if pts.len() < 2 {
                return 0.0;
            }
            let bb = crate::geo::Rect::bounding(&pts);
            bb.width() * bb.height() / 1e6
        })
        .collect();
    let mut sorted = areas_km2.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pick = |q: f64| -> f64 {
        if sorted.is_empty() {
            0.0
        } else {
            let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
            sorted[rank - 1]
        }
    };
    AreaReport {
        median_km2: median_f64(&sorted),
        p5_km2: pick(0.05),
        p95_km2: pick(0.95),
        areas_km2,
    }
}

/// The per-run metrics row behind every figure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRow {
    pub mode: SimMode,
    pub tal_length: usize,
    pub ta_count: usize,
    pub n_ues: usize,
    pub seed: u64,
    pub total_pages: u64,
    pub d_global: f64,
    pub d_local: f64,
    pub median_area_km2: f64,
    pub capacity: CapacityEstimate,
}

/// Compute the full metrics row for one run.
pub fn metrics_row(
    report: &SimReport,
    positions: &[Point],
    page_budget_per_hour: u64,
) -> Result<MetricsRow, MetricsError> {
    let population = report.config.n_ues as u64;
    let d_global = global_bulk_anonymity(report, population)?;
    let d_local = local_bulk_anonymity(report, population)?;
    let areas = area_anonymity(report, positions);
    let capacity = crate::paging::capacity_estimate(report, page_budget_per_hour)?;
    Ok(MetricsRow {
        mode: report.config.mode,
        tal_length: report.config.mode.tal_length(),
        ta_count: report.config.ta_count,
        n_ues: report.config.n_ues,
        seed: report.config.seed,
        total_pages: report.total_pages(),
        d_global,
        d_local,
        median_area_km2: areas.median_km2,
        capacity,
    })
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Anonymity(#[from] AnonymityError),
    #[error(transparent)]
    Sim(#[from] crate::paging::SimError),
}
