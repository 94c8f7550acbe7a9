//! Experiment configuration: one TOML file describing topology, mobility,
//! traffic, and the sweep grid. The full config echoes into every output for
//! provenance, and sweep-point directories are named by config hash.

use pgpp_core::paging::{SimMode, TalGrowth, UserCountMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config: {0}")]
    Invalid(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub topology: TopologySection,
    pub mobility: MobilitySection,
    #[serde(default)]
    pub traffic: TrafficSection,
    pub sweep: SweepSection,
    #[serde(default)]
    pub aka: Option<AkaSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    /// "synthetic" or "csv".
    pub source: String,
    #[serde(default)]
    pub csv_path: Option<String>,
    #[serde(default = "default_n_sites")]
    pub n_sites: usize,
    #[serde(default = "default_n_clusters")]
    pub n_clusters: usize,
    #[serde(default = "default_extent_km")]
    pub extent_km: f64,
    #[serde(default = "default_center_lat")]
    pub center_lat: f64,
    #[serde(default = "default_center_lon")]
    pub center_lon: f64,
}

fn default_n_sites() -> usize {
    500
}
fn default_n_clusters() -> usize {
    50
}
fn default_extent_km() -> f64 {
    40.0
}
fn default_center_lat() -> f64 {
    34.05
}
fn default_center_lon() -> f64 {
    -118.25
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MobilitySection {
    #[serde(default)]
    pub trace_csv: Option<String>,
    #[serde(default = "default_n_cars")]
    pub n_cars: usize,
    #[serde(default = "default_n_cars")]
    pub n_pedestrians: usize,
    #[serde(default = "default_duration")]
    pub duration_ticks: usize,
}

fn default_n_cars() -> usize {
    500
}
fn default_duration() -> usize {
    720
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrafficSection {
    #[serde(default = "default_call_fraction")]
    pub call_fraction: f64,
    #[serde(default = "default_call_duration")]
    pub call_duration_ticks: u32,
    #[serde(default = "default_budget")]
    pub page_budget_per_sec: u64,
}

fn default_call_fraction() -> f64 {
    0.05
}
fn default_call_duration() -> u32 {
    36
}
fn default_budget() -> u64 {
    525
}

impl Default for TrafficSection {
    fn default() -> Self {
        TrafficSection {
            call_fraction: default_call_fraction(),
            call_duration_ticks: default_call_duration(),
            page_budget_per_sec: default_budget(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Any of "conventional", "tal".
    pub modes: Vec<String>,
    #[serde(default)]
    pub tal_lengths: Vec<usize>,
    /// Custom-TA map sizes; empty keeps the topology's native TAs.
    #[serde(default)]
    pub ta_counts: Vec<usize>,
    #[serde(default)]
    pub tal_growth: TalGrowth,
    #[serde(default)]
    pub user_count_mode: UserCountMode,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AkaSection {
    pub n_ues: usize,
    #[serde(default = "default_latency")]
    pub round_latency_ms: f64,
}

fn default_latency() -> f64 {
    200.0
}

/// One resolved sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub mode: SimMode,
    /// `None` keeps the topology's native TA labels.
    pub ta_count: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    fn validate(&self) -> Result<(), ConfigError> {
        match self.topology.source.as_str() {
            "synthetic" => {}
            "csv" => {
                if self.topology.csv_path.is_none() {
                    return Err(ConfigError::Invalid(
                        "topology.source = \"csv\" requires topology.csv_path".into(),
                    ));
                }
            }
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown topology.source '{other}'"
                )))
            }
        }
        if self.mobility.duration_ticks == 0 {
            return Err(ConfigError::Invalid("mobility.duration_ticks must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.traffic.call_fraction) {
            return Err(ConfigError::Invalid("traffic.call_fraction must be in [0, 1]".into()));
        }
        if self.sweep.modes.is_empty() {
            return Err(ConfigError::Invalid("sweep.modes must not be empty".into()));
        }
        for m in &self.sweep.modes {
            match m.as_str() {
                "conventional" => {}
                "tal" => {
                    if self.sweep.tal_lengths.is_empty() {
                        return Err(ConfigError::Invalid(
                            "sweep.tal_lengths must not be empty when sweeping tal mode".into(),
                        ));
                    }
                }
                other => {
                    return Err(ConfigError::Invalid(format!("unknown sweep mode '{other}'")))
                }
            }
        }
        for &l in &self.sweep.tal_lengths {
            if !(1..=16).contains(&l) {
                return Err(ConfigError::Invalid(format!(
                    "tal_length {l} outside 1..=16"
                )));
            }
        }
        for &k in &self.sweep.ta_counts {
            let n = if self.topology.source == "synthetic" {
                self.topology.n_sites
            } else {
                usize::MAX // checked against the real site count at run time
            };
            if k == 0 || k > n {
                return Err(ConfigError::Invalid(format!(
                    "ta_count {k} invalid for {n} sites"
                )));
            }
        }
        if let Some(aka) = &self.aka {
            if aka.n_ues == 0 {
                return Err(ConfigError::Invalid("aka.n_ues must be >= 1".into()));
            }
        }
        Ok(())
    }

    /// The resolved sweep grid: conventional points ignore TAL lengths.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let ta_counts: Vec<Option<usize>> = if self.sweep.ta_counts.is_empty() {
            vec![None]
        } else {
            self.sweep.ta_counts.iter().map(|&k| Some(k)).collect()
        };
        let mut points = Vec::new();
        for ta_count in &ta_counts {
            for mode in &self.sweep.modes {
                match mode.as_str() {
                    "conventional" => points.push(SweepPoint {
                        mode: SimMode::Conventional,
                        ta_count: *ta_count,
                    }),
                    "tal" => {
                        for &l in &self.sweep.tal_lengths {
                            points.push(SweepPoint {
                                mode: SimMode::Tal(l),
                                ta_count: *ta_count,
                            });
                        }
                    }
                    _ => unreachable!("validated"),
                }
            }
        }
        points
    }

    /// Stable hash naming a sweep point's output directory.
    pub fn point_id(&self, point: &SweepPoint) -> String {
        let canonical = serde_json::json!({
            "config": self,
            "point": point,
        });
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&canonical).expect("canonical json"));
        hex::encode(&h.finalize()[..8])
    }
}

// hex is tiny; re-implement to avoid a direct dependency here
mod hex {
    pub fn encode(bytes: &[u8]) -> String {
        bytes.iter().map(|b| format!("{b:02x}")).collect()
    }
}
