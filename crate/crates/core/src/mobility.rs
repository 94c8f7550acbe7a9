//! Per-UE position timelines at fixed 5-second ticks and their resolution to
//! eNB attachments.
//!
//! Traces are either synthesized (seeded random waypoints with car/pedestrian
//! speed profiles) or replayed from a CSV (`ue_id,profile,tick,x_m,y_m`), so
//! externally generated traces can be substituted.

use crate::geo::{Point, Rect};
use crate::rng::derive_rng_lane;
use crate::topology::{EnbIdx, TaIdx, Topology, TopologyError};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use thiserror::Error;

/// Seconds per simulation tick.
pub const TICK_SECONDS: f64 = 5.0;

#[derive(Debug, Error)]
pub enum MobilityError {
    #[error("trace row {row}: {message}")]
    ParseError { row: usize, message: String },
    #[error("ue '{ue_id}' tick {tick}: position outside the bounding region")]
    OutOfRegion { ue_id: String, tick: usize },
    #[error("trace for '{ue_id}' violates the {profile:?} speed cap at tick {tick}")]
    SpeedCap {
        ue_id: String,
        profile: Profile,
        tick: usize,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Car,
    Pedestrian,
}

impl Profile {
    /// Hard cap on speed (m/s); trace validation enforces it per tick.
    pub fn speed_cap_mps(self) -> f64 {
        match self {
            Profile::Car => 40.0,
            Profile::Pedestrian => 2.5,
        }
    }

    /// Mean travel speed (m/s) for synthetic traces.
    pub fn mean_speed_mps(self) -> f64 {
        match self {
            Profile::Car => 13.0,
            Profile::Pedestrian => 1.4,
        }
    }
}

/// One UE's position per tick (tick index = vector index).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MobilityTrace {
    pub ue_id: String,
    pub profile: Profile,
    pub samples: Vec<Point>,
}

impl MobilityTrace {
    pub fn duration_ticks(&self) -> usize {
        self.samples.len()
    }

    /// Check the per-tick displacement against the profile cap.
    pub fn validate_speed(&self) -> Result<(), MobilityError> {
        let cap = self.profile.speed_cap_mps() * TICK_SECONDS;
        for (t, w) in self.samples.windows(2).enumerate() {
            if w[0].dist(&w[1]) > cap + 1e-9 {
                return Err(MobilityError::SpeedCap {
                    ue_id: self.ue_id.clone(),
                    profile: self.profile,
                    tick: t + 1,
                });
            }
        }
        Ok(())
    }
}

/// One UE's per-tick eNB/TA attachment (tick index = vector index).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttachmentTimeline {
    pub ue_id: String,
    pub attachments: Vec<(EnbIdx, TaIdx)>,
}

impl AttachmentTimeline {
    pub fn enb_at(&self, tick: usize) -> EnbIdx {
        self.attachments[tick].0
    }

    pub fn ta_at(&self, tick: usize) -> TaIdx {
        self.attachments[tick].1
    }

    pub fn distinct_enbs(&self) -> usize {
        let mut enbs: Vec<EnbIdx> = self.attachments.iter().map(|a| a.0).collect();
        enbs.sort_unstable();
        enbs.dedup();
        enbs.len()
    }
}

/// Generate `n_cars + n_pedestrians` random-waypoint traces inside `bounds`.
///
/// Each UE picks a random start and end point and walks toward the end at its
/// profile's mean speed with ±20% per-tick jitter; UEs that arrive early hold
/// position. Deterministic under `seed` with one RNG lane per UE.
pub fn synth_traces(
    bounds: Rect,
    n_cars: usize,
    n_pedestrians: usize,
    duration_ticks: usize,
    seed: u64,
) -> Vec<MobilityTrace> {
    assert!(duration_ticks >= 1, "duration_ticks must be >= 1");
    let total = n_cars + n_pedestrians;
    let width = (total.max(2) as f64).log10().ceil() as usize;
    (0..total)
        .map(|i| {
            let profile = if i < n_cars { Profile::Car } else { Profile::Pedestrian };
            let prefix = match profile {
                Profile::Car => "car",
                Profile::Pedestrian => "ped",
            };
            let ue_id = format!("{prefix}{:0width$}", i, width = width);
            synth_one(ue_id, profile, bounds, duration_ticks, seed, i as u64)
        })
        .collect()
}

fn synth_one(
    ue_id: String,
    profile: Profile,
    bounds: Rect,
    duration_ticks: usize,
    seed: u64,
    lane: u64,
) -> MobilityTrace {
    let mut rng = derive_rng_lane(seed, "mobility", lane);
    // keep endpoints strictly interior so attachment never falls off-region
    let margin_x = bounds.width() * 0.01;
    let margin_y = bounds.height() * 0.01;
    let rand_point = |rng: &mut rand_chacha::ChaCha20Rng| {
        Point::new(
            rng.gen_range(bounds.min_x + margin_x..bounds.max_x - margin_x),
            rng.gen_range(bounds.min_y + margin_y..bounds.max_y - margin_y),
        )
    };
    let start = rand_point(&mut rng);
    let goal = rand_point(&mut rng);

    let mut samples = Vec::with_capacity(duration_ticks);
    let mut pos = start;
    samples.push(pos);
    for _ in 1..duration_ticks {
        let remaining = pos.dist(&goal);
        if remaining > 1e-9 {
            let jitter = rng.gen_range(0.8..1.2);
            let step = (profile.mean_speed_mps() * jitter * TICK_SECONDS).min(remaining);
            let dir_x = (goal.x - pos.x) / remaining;
            let dir_y = (goal.y - pos.y) / remaining;
            pos = Point::new(pos.x + dir_x * step, pos.y + dir_y * step);
        }
        samples.push(pos);
    }
    MobilityTrace { ue_id, profile, samples }
}

/// Resolve a trace to its per-tick (eNB, TA) attachment via the topology's
/// coverage cells.
pub fn attach_timeline(
    trace: &MobilityTrace,
    topo: &Topology,
) -> Result<AttachmentTimeline, MobilityError> {
    let mut attachments = Vec::with_capacity(trace.samples.len());
    for (tick, p) in trace.samples.iter().enumerate() {
        let enb = topo.assign_enb(*p).map_err(|e| match e {
            TopologyError::OutOfRegion { .. } => MobilityError::OutOfRegion {
                ue_id: trace.ue_id.clone(),
                tick,
            },
            other => MobilityError::ParseError {
                row: tick,
                message: other.to_string(),
            },
        })?;
        attachments.push((enb, topo.ta_of(enb)));
    }
    Ok(AttachmentTimeline {
        ue_id: trace.ue_id.clone(),
        attachments,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    ue_id: String,
    profile: Profile,
    tick: usize,
    x_m: f64,
    y_m: f64,
}

/// Write traces as CSV `ue_id,profile,tick,x_m,y_m`, one row per tick.
pub fn write_traces_csv<W: Write>(traces: &[MobilityTrace], writer: W) -> Result<(), MobilityError> {
    let mut w = csv::Writer::from_writer(writer);
    for trace in traces {
        for (tick, p) in trace.samples.iter().enumerate() {
            w.serialize(TraceRow {
                ue_id: trace.ue_id.clone(),
                profile: trace.profile,
                tick,
                x_m: p.x,
                y_m: p.y,
            })
            .map_err(|e| MobilityError::ParseError { row: tick, message: e.to_string() })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read traces from CSV. Rows must be grouped per UE with consecutive ticks
/// starting at 0; speed caps are validated.
pub fn read_traces_csv<R: Read>(reader: R) -> Result<Vec<MobilityTrace>, MobilityError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut traces: Vec<MobilityTrace> = Vec::new();
    for (i, rec) in rdr.deserialize::<TraceRow>().enumerate() {
        let row = i + 2;
        let r = rec.map_err(|e| MobilityError::ParseError { row, message: e.to_string() })?;
        match traces.last_mut() {
            Some(t) if t.ue_id == r.ue_id => {
                if r.tick != t.samples.len() || r.profile != t.profile {
                    return Err(MobilityError::ParseError {
                        row,
                        message: format!(
                            "expected tick {} for ue '{}', got {}",
                            t.samples.len(),
                            t.ue_id,
                            r.tick
                        ),
                    });
                }
                t.samples.push(Point::new(r.x_m, r.y_m));
            }
            _ => {
                if r.tick != 0 {
                    return Err(MobilityError::ParseError {
                        row,
                        message: format!("trace for '{}' must start at tick 0", r.ue_id),
                    });
                }
                traces.push(MobilityTrace {
                    ue_id: r.ue_id,
                    profile: r.profile,
                    samples: vec![Point::new(r.x_m, r.y_m)],
                });
            }
        }
    }
    for t in &traces {
        t.validate_speed()?;
    }
    Ok(traces)
}
