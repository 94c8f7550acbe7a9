//! Cell topology: eNB sites, Voronoi coverage cells, tracking-area maps and
//! their adjacency graph.
//!
//! Sites come from a CSV (`enb_id,lat,lon,ta_id`) or the synthetic generator.
//! All geometry is computed in a local projection centered on the site
//! centroid; the bounding region is the site bounding box inflated by 10%.

use crate::geo::{LocalProjection, Point, Rect};
use crate::kmeans::{kmeans, KmeansError};
use crate::rng::derive_rng;
use crate::voronoi::{voronoi_cells, GeometryError, VoronoiCell};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Read;
use thiserror::Error;

/// Index of an eNB in a topology's site table.
pub type EnbIdx = u32;
/// Index of a tracking area in a topology's TA table.
pub type TaIdx = u32;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("row {row}: {message}")]
    ParseError { row: usize, message: String },
    #[error("topology too small: {0}")]
    TooSmall(#[from] GeometryError),
    #[error("site '{enb_id}': latitude {lat} out of range [-90, 90]")]
    BadLatitude { enb_id: String, lat: f64 },
    #[error("site '{enb_id}': longitude {lon} out of range [-180, 180]")]
    BadLongitude { enb_id: String, lon: f64 },
    #[error("duplicate enb_id '{0}'")]
    DuplicateEnbId(String),
    #[error(transparent)]
    InvalidK(#[from] KmeansError),
    #[error("point ({x}, {y}) is outside the bounding region")]
    OutOfRegion { x: f64, y: f64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One eNB site record as ingested.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnbSite {
    pub enb_id: String,
    pub lat: f64,
    pub lon: f64,
    pub ta_id: String,
}

/// Coverage cell of one eNB: its clipped Voronoi polygon and edge-neighbors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageCell {
    pub enb: EnbIdx,
    pub polygon: Vec<Point>,
    pub neighbors: Vec<EnbIdx>,
}

/// Tracking-area membership and adjacency over a fixed site table.
///
/// Two TAs are adjacent iff some eNB in one has a Voronoi edge-neighbor in
/// the other.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrackingAreaMap {
    pub ta_labels: Vec<String>,
    /// TA index per eNB index.
    pub enb_ta: Vec<TaIdx>,
    /// eNB indices per TA index; sorted.
    pub ta_enbs: Vec<Vec<EnbIdx>>,
    /// adjacent TA indices per TA index; sorted, irreflexive.
    pub adjacency: Vec<Vec<TaIdx>>,
}

impl TrackingAreaMap {
    pub fn ta_count(&self) -> usize {
        self.ta_labels.len()
    }

    fn build(labels_per_enb: &[String], cells: &[CoverageCell]) -> TrackingAreaMap {
        let mut ta_index: BTreeMap<&str, TaIdx> = BTreeMap::new();
        for label in labels_per_enb {
            let next = ta_index.len() as TaIdx;
            ta_index.entry(label.as_str()).or_insert(next);
        }
        let ta_labels: Vec<String> = {
            let mut v: Vec<(&str, TaIdx)> = ta_index.iter().map(|(k, v)| (*k, *v)).collect();
            v.sort_by_key(|&(_, idx)| idx);
            v.into_iter().map(|(k, _)| k.to_string()).collect()
        };
        let enb_ta: Vec<TaIdx> = labels_per_enb
            .iter()
            .map(|l| ta_index[l.as_str()])
            .collect();
        let mut ta_enbs: Vec<Vec<EnbIdx>> = vec![Vec::new(); ta_labels.len()];
        for (e, &t) in enb_ta.iter().enumerate() {
            ta_enbs[t as usize].push(e as EnbIdx);
        }
        let mut adjacency: Vec<Vec<TaIdx>> = vec![Vec::new(); ta_labels.len()];
        for cell in cells {
            let ta = enb_ta[cell.enb as usize];
            for &nb in &cell.neighbors {
                let nta = enb_ta[nb as usize];
                if nta != ta {
                    adjacency[ta as usize].push(nta);
                }
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        TrackingAreaMap {
            ta_labels,
            enb_ta,
            ta_enbs,
            adjacency,
        }
    }
}

/// A complete topology: deduplicated sites (sorted by `enb_id`), projected
/// positions, coverage cells, TA map, and a point-location grid.
#[derive(Debug, Clone)]
pub struct Topology {
    pub sites: Vec<EnbSite>,
    pub positions: Vec<Point>,
    pub cells: Vec<CoverageCell>,
    pub ta_map: TrackingAreaMap,
    pub region: Rect,
    pub projection: LocalProjection,
    locator: CellLocator,
}

impl Topology {
    /// Build a topology from raw site records: validate, dedup on (lat, lon)
    /// keeping the lowest `enb_id`, project, partition, and derive TAs.
    pub fn from_sites(mut sites: Vec<EnbSite>) -> Result<Topology, TopologyError> {
        for s in &sites {
            if !(-90.0..=90.0).contains(&s.lat) {
                return Err(TopologyError::BadLatitude {
                    enb_id: s.enb_id.clone(),
                    lat: s.lat,
                });
            }
            if !(-180.0..=180.0).contains(&s.lon) {
                return Err(TopologyError::BadLongitude {
                    enb_id: s.enb_id.clone(),
                    lon: s.lon,
                });
            }
        }
        sites.sort_by(|a, b| a.enb_id.cmp(&b.enb_id));
        for w in sites.windows(2) {
            if w[0].enb_id == w[1].enb_id {
                return Err(TopologyError::DuplicateEnbId(w[0].enb_id.clone()));
            }
        }
        // dedup exact coordinate duplicates, keeping the lowest enb_id
        let mut seen: BTreeMap<(u64, u64), ()> = BTreeMap::new();
        sites.retain(|s| {
            seen.insert((s.lat.to_bits(), s.lon.to_bits()), ())
                .is_none()
        });

        let coords: Vec<(f64, f64)> = sites.iter().map(|s| (s.lat, s.lon)).collect();
        let projection = LocalProjection::centered_on(&coords);
        let positions: Vec<Point> = sites
            .iter()
            .map(|s| projection.project(s.lat, s.lon))
            .collect();
        let region = Rect::bounding(&positions).inflated(0.1);

        let vcells = voronoi_cells(&positions, region)?;
        let cells: Vec<CoverageCell> = vcells
            .iter()
            .map(|c: &VoronoiCell| CoverageCell {
                enb: c.site as EnbIdx,
                polygon: c.polygon.clone(),
                neighbors: c.neighbors.iter().map(|&n| n as EnbIdx).collect(),
            })
            .collect();

        let labels: Vec<String> = sites.iter().map(|s| s.ta_id.clone()).collect();
        let ta_map = TrackingAreaMap::build(&labels, &cells);
        let locator = CellLocator::build(&cells, region);
        Ok(Topology {
            sites,
            positions,
            cells,
            ta_map,
            region,
            projection,
            locator,
        })
    }

    pub fn n_enbs(&self) -> usize {
        self.sites.len()
    }

    pub fn enb_label(&self, idx: EnbIdx) -> &str {
        &self.sites[idx as usize].enb_id
    }

    pub fn ta_of(&self, enb: EnbIdx) -> TaIdx {
        self.ta_map.enb_ta[enb as usize]
    }

    /// Resolve a projected point to the eNB whose coverage cell contains it.
    /// Boundary points go to the lowest `enb_id` among the touching cells.
    pub fn assign_enb(&self, p: Point) -> Result<EnbIdx, TopologyError> {
        if !self.region.contains(&p) {
            return Err(TopologyError::OutOfRegion { x: p.x, y: p.y });
        }
        let eps = self.region.diagonal() * 1e-12;
        let mut best: Option<EnbIdx> = None;
        for &ci in self.locator.candidates(&p) {
            let cell = &self.cells[ci as usize];
            let vc = VoronoiCell {
                site: cell.enb as usize,
                polygon: cell.polygon.clone(),
                neighbors: Vec::new(),
            };
            if vc.contains(&p, eps) {
                // sites are sorted by enb_id, so index order is id order
                best = Some(match best {
                    Some(b) => b.min(cell.enb),
                    None => cell.enb,
                });
            }
        }
        best.ok_or(TopologyError::OutOfRegion { x: p.x, y: p.y })
    }

    /// Replace the TA map with `k` k-means clusters over site coordinates.
    /// Labels are `k###`. Deterministic under `seed`.
    pub fn with_kmeans_tas(&self, k: usize, seed: u64) -> Result<Topology, TopologyError> {
        let ta_map = kmeans_tas(&self.positions, &self.cells, k, seed)?;
        let mut topo = self.clone();
        for (i, site) in topo.sites.iter_mut().enumerate() {
            site.ta_id = ta_map.ta_labels[ta_map.enb_ta[i] as usize].clone();
        }
        topo.ta_map = ta_map;
        Ok(topo)
    }

    /// Serializable snapshot for downstream tooling.
    pub fn snapshot(&self) -> TopologySnapshot {
        let tas: BTreeMap<String, Vec<String>> = self
            .ta_map
            .ta_enbs
            .iter()
            .enumerate()
            .map(|(t, enbs)| {
                (
                    self.ta_map.ta_labels[t].clone(),
                    enbs.iter().map(|&e| self.enb_label(e).to_string()).collect(),
                )
            })
            .collect();
        let adjacency: BTreeMap<String, Vec<String>> = self
            .ta_map
            .adjacency
            .iter()
            .enumerate()
            .map(|(t, adj)| {
                (
                    self.ta_map.ta_labels[t].clone(),
                    adj.iter()
                        .map(|&a| self.ta_map.ta_labels[a as usize].clone())
                        .collect(),
                )
            })
            .collect();
        TopologySnapshot {
            sites: self.sites.clone(),
            positions_m: self.positions.clone(),
            tas,
            adjacency,
            region: self.region,
            projection: self.projection,
        }
    }
}

/// JSON-facing topology snapshot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopologySnapshot {
    pub sites: Vec<EnbSite>,
    pub positions_m: Vec<Point>,
    pub tas: BTreeMap<String, Vec<String>>,
    pub adjacency: BTreeMap<String, Vec<String>>,
    pub region: Rect,
    pub projection: LocalProjection,
}

impl TopologySnapshot {
    /// Rebuild the full topology from the site list (geometry is recomputed).
    pub fn restore(&self) -> Result<Topology, TopologyError> {
        Topology::from_sites(self.sites.clone())
    }
}

/// Standalone k-means TA construction over projected positions.
pub fn kmeans_tas(
    positions: &[Point],
    cells: &[CoverageCell],
    k: usize,
    seed: u64,
) -> Result<TrackingAreaMap, TopologyError> {
    let mut rng = derive_rng(seed, "kmeans");
    let assignment = kmeans(positions, k, &mut rng)?;
    let width = (k.max(2) as f64).log10().ceil() as usize;
    let labels: Vec<String> = assignment
        .iter()
        .map(|&c| format!("k{:0width$}", c, width = width))
        .collect();
    Ok(TrackingAreaMap::build(&labels, cells))
}

/// Parse site records from CSV with header `enb_id,lat,lon,ta_id`.
pub fn load_sites_csv<R: Read>(reader: R) -> Result<Vec<EnbSite>, TopologyError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<EnbSite>().enumerate() {
        let row = i + 2; // header is row 1
        let site = rec.map_err(|e| TopologyError::ParseError {
            row,
            message: e.to_string(),
        })?;
        out.push(site);
    }
    Ok(out)
}

/// Load a topology from CSV site records.
pub fn load_topology<R: Read>(reader: R) -> Result<Topology, TopologyError> {
    Topology::from_sites(load_sites_csv(reader)?)
}

/// Synthetic topology generator configuration.
///
/// Sites are scattered around `n_clusters` cluster centers inside a square of
/// `extent_km`; the cluster index doubles as the TA label, giving spatially
/// coherent tracking areas.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthTopologyConfig {
    pub n_sites: usize,
    pub n_clusters: usize,
    pub extent_km: f64,
    pub center_lat: f64,
    pub center_lon: f64,
    pub seed: u64,
}

impl Default for SynthTopologyConfig {
    fn default() -> Self {
        SynthTopologyConfig {
            n_sites: 500,
            n_clusters: 50,
            extent_km: 40.0,
            center_lat: 34.05,
            center_lon: -118.25,
            seed: 0,
        }
    }
}

/// Generate synthetic site records. Deterministic under the config seed.
pub fn synth_sites(cfg: &SynthTopologyConfig) -> Vec<EnbSite> {
    use rand::Rng;
    let mut rng = derive_rng(cfg.seed, "topology");
    let half_deg_lat = cfg.extent_km / 2.0 / 111.195;
    let half_deg_lon = half_deg_lat / cfg.center_lat.to_radians().cos().max(0.1);
    let n_clusters = cfg.n_clusters.max(1);
    let centers: Vec<(f64, f64)> = (0..n_clusters)
        .map(|_| {
            (
                cfg.center_lat + rng.gen_range(-half_deg_lat..half_deg_lat),
                cfg.center_lon + rng.gen_range(-half_deg_lon..half_deg_lon),
            )
        })
        .collect();
    let spread_lat = half_deg_lat / (n_clusters as f64).sqrt();
    let width = (cfg.n_sites.max(2) as f64).log10().ceil() as usize;
    let ta_width = (n_clusters.max(2) as f64).log10().ceil() as usize;
    (0..cfg.n_sites)
        .map(|i| {
            let c = i % n_clusters;
            let (clat, clon) = centers[c];
            let lat = (clat + rng.gen_range(-spread_lat..spread_lat)).clamp(-89.0, 89.0);
            let lon = clon + rng.gen_range(-spread_lat..spread_lat);
            EnbSite {
                enb_id: format!("enb{:0width$}", i, width = width),
                lat,
                lon,
                ta_id: format!("ta{:0w$}", c, w = ta_width),
            }
        })
        .collect()
}

/// Uniform grid over cell bounding boxes for fast point location.
#[derive(Debug, Clone)]
struct CellLocator {
    region: Rect,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<EnbIdx>>,
}

impl CellLocator {
    fn build(cells: &[CoverageCell], region: Rect) -> CellLocator {
        let n = cells.len().max(1);
        let nx = ((n as f64).sqrt().ceil() as usize).max(1);
        let ny = nx;
        let mut buckets = vec![Vec::new(); nx * ny];
        for cell in cells {
            let bb = Rect::bounding(&cell.polygon);
            let (i0, j0) = grid_pos(&region, nx, ny, bb.min_x, bb.min_y);
            let (i1, j1) = grid_pos(&region, nx, ny, bb.max_x, bb.max_y);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(cell.enb);
                }
            }
        }
        CellLocator {
            region,
            nx,
            ny,
            buckets,
        }
    }

    fn candidates(&self, p: &Point) -> &[EnbIdx] {
        let (i, j) = grid_pos(&self.region, self.nx, self.ny, p.x, p.y);
        &self.buckets[j * self.nx + i]
    }
}

fn grid_pos(region: &Rect, nx: usize, ny: usize, x: f64, y: f64) -> (usize, usize) {
    let fx = ((x - region.min_x) / region.width()).clamp(0.0, 1.0);
    let fy = ((y - region.min_y) / region.height()).clamp(0.0, 1.0);
    let i = ((fx * nx as f64) as usize).min(nx - 1);
    let j = ((fy * ny as f64) as usize).min(ny - 1);
    (i, j)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_sites_one_ta() -> Vec<EnbSite> {
        vec![
            EnbSite { enb_id: "a".into(), lat: 34.00, lon: -118.00, ta_id: "A".into() },
            EnbSite { enb_id: "b".into(), lat: 34.02, lon: -118.05, ta_id: "A".into() },
            EnbSite { enb_id: "c".into(), lat: 34.05, lon: -118.01, ta_id: "A".into() },
        ]
    }

    #[test]
    fn single_ta_has_empty_adjacency() {
        let topo = Topology::from_sites(three_sites_one_ta()).unwrap();
        assert_eq!(topo.ta_map.ta_count(), 1);
        assert!(topo.ta_map.adjacency[0].is_empty());
    }

    #[test]
    fn every_enb_in_exactly_one_ta() {
        let cfg = SynthTopologyConfig { n_sites: 120, n_clusters: 8, seed: 3, ..Default::default() };
        let topo = Topology::from_sites(synth_sites(&cfg)).unwrap();
        let total: usize = topo.ta_map.ta_enbs.iter().map(|v| v.len()).sum();
        assert_eq!(total, topo.n_enbs());
        for (t, enbs) in topo.ta_map.ta_enbs.iter().enumerate() {
            assert!(!enbs.is_empty(), "empty TA {t}");
            for &e in enbs {
                assert_eq!(topo.ta_map.enb_ta[e as usize] as usize, t);
            }
        }
    }

    #[test]
    fn ta_adjacency_is_symmetric_and_irreflexive() {
        let cfg = SynthTopologyConfig { n_sites: 150, n_clusters: 10, seed: 4, ..Default::default() };
        let topo = Topology::from_sites(synth_sites(&cfg)).unwrap();
        for (t, adj) in topo.ta_map.adjacency.iter().enumerate() {
            for &o in adj {
                assert_ne!(o as usize, t);
                assert!(topo.ta_map.adjacency[o as usize].contains(&(t as TaIdx)));
            }
        }
    }

    #[test]
    fn csv_parse_error_names_the_row() {
        let csv = "enb_id,lat,lon,ta_id\na,34.0,-118.0,A\nb,not_a_number,-118.1,A\n";
        let err = load_topology(csv.as_bytes()).unwrap_err();
        match err {
            TopologyError::ParseError { row, .. } => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_coordinates_keep_lowest_enb_id() {
        let mut sites = three_sites_one_ta();
        sites.push(EnbSite { enb_id: "zz".into(), lat: 34.00, lon: -118.00, ta_id: "A".into() });
        let topo = Topology::from_sites(sites).unwrap();
        assert_eq!(topo.n_enbs(), 3);
        assert!(topo.sites.iter().all(|s| s.enb_id != "zz"));
    }

    #[test]
    fn out_of_range_latitude_rejected() {
        let mut sites = three_sites_one_ta();
        sites[0].lat = 91.0;
        assert!(matches!(
            Topology::from_sites(sites),
            Err(TopologyError::BadLatitude { .. })
        ));
    }

    #[test]
    fn assign_enb_at_site_returns_that_site() {
        let cfg = SynthTopologyConfig { n_sites: 80, n_clusters: 5, seed: 9, ..Default::default() };
        let topo = Topology::from_sites(synth_sites(&cfg)).unwrap();
        for (i, p) in topo.positions.iter().enumerate() {
            assert_eq!(topo.assign_enb(*p).unwrap(), i as EnbIdx);
        }
    }

    #[test]
    fn assign_enb_out_of_region_errors() {
        let topo = Topology::from_sites(three_sites_one_ta()).unwrap();
        let far = Point::new(topo.region.max_x + 1000.0, 0.0);
        assert!(matches!(
            topo.assign_enb(far),
            Err(TopologyError::OutOfRegion { .. })
        ));
    }

    #[test]
    fn assign_enb_midpoint_tie_breaks_to_lower_id() {
        // two close sites plus a distant third; the midpoint of the pair is a
        // boundary point between their cells
        let sites = vec![
            EnbSite { enb_id: "a".into(), lat: 34.0, lon: -118.0, ta_id: "A".into() },
            EnbSite { enb_id: "b".into(), lat: 34.0, lon: -117.9, ta_id: "A".into() },
            EnbSite { enb_id: "c".into(), lat: 34.3, lon: -117.95, ta_id: "A".into() },
        ];
        let topo = Topology::from_sites(sites).unwrap();
        let pa = topo.positions[0];
        let pb = topo.positions[1];
        let mid = Point::new((pa.x + pb.x) / 2.0, (pa.y + pb.y) / 2.0);
        let got = topo.assign_enb(mid).unwrap();
        assert_eq!(topo.enb_label(got), "a");
    }

    #[test]
    fn kmeans_tas_count_and_partition() {
        let cfg = SynthTopologyConfig { n_sites: 200, n_clusters: 4, seed: 6, ..Default::default() };
        let topo = Topology::from_sites(synth_sites(&cfg)).unwrap();
        for k in [1usize, 10, 200] {
            let t2 = topo.with_kmeans_tas(k, 42).unwrap();
            assert_eq!(t2.ta_map.ta_count(), k);
            let total: usize = t2.ta_map.ta_enbs.iter().map(|v| v.len()).sum();
            assert_eq!(total, t2.n_enbs());
        }
    }

    #[test]
    fn kmeans_tas_deterministic() {
        let cfg = SynthTopologyConfig { n_sites: 100, n_clusters: 4, seed: 6, ..Default::default() };
        let topo = Topology::from_sites(synth_sites(&cfg)).unwrap();
        let a = topo.with_kmeans_tas(9, 7).unwrap();
        let b = topo.with_kmeans_tas(9, 7).unwrap();
        assert_eq!(a.ta_map.enb_ta, b.ta_map.enb_ta);
    }

    #[test]
    fn snapshot_round_trip() {
        let cfg = SynthTopologyConfig { n_sites: 60, n_clusters: 4, seed: 1, ..Default::default() };
        let topo = Topology::from_sites(synth_sites(&cfg)).unwrap();
        let snap = topo.snapshot();
        let json = serde_json::to_string(&snap).unwrap();
        let back: TopologySnapshot = serde_json::from_str(&json).unwrap();
        let restored = back.restore().unwrap();
        assert_eq!(restored.n_enbs(), topo.n_enbs());
        assert_eq!(restored.ta_map.enb_ta, topo.ta_map.enb_ta);
    }
}
