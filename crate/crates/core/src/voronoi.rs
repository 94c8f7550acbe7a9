//! Clipped planar Voronoi partition via per-cell half-plane intersection.
//!
//! Each cell starts as the bounding rectangle and is cut by the perpendicular
//! bisector against every other site, nearest first, stopping once no further
//! bisector can reach the cell. Edges keep a tag recording which bisector
//! produced them, which gives the shared-edge neighbor relation directly.

use crate::geo::{Point, Rect};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("need at least 3 sites for a Voronoi partition, got {0}")]
    TooFewSites(usize),
    #[error("degenerate geometry: all sites are collinear")]
    Collinear,
    #[error("degenerate geometry: duplicate site coordinates at index {0}")]
    DuplicateSite(usize),
    #[error("site {0} lies outside the bounding region")]
    SiteOutsideRegion(usize),
}

/// One Voronoi cell: a convex polygon (CCW) clipped to the region, plus the
/// indices of sites whose cells share an edge with it.
#[derive(Debug, Clone)]
pub struct VoronoiCell {
    pub site: usize,
    pub polygon: Vec<Point>,
    pub neighbors: Vec<usize>,
}

impl VoronoiCell {
    /// Polygon area via the shoelace formula (m²).
    pub fn area(&self) -> f64 {
        shoelace(&self.polygon)
    }

    /// Inclusive containment test for a convex CCW polygon: points on the
    /// boundary count as inside.
    pub fn contains(&self, p: &Point, eps: f64) -> bool {
        let n = self.polygon.len();
        if n < 3 {
            return false;
        }
        for i in 0..n {
            let a = self.polygon[i];
            let b = self.polygon[(i + 1) % n];
            let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
            if cross < -eps {
                return false;
            }
        }
        true
    }
}

fn shoelace(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    acc / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EdgeTag {
    Region,
    Bisector(usize),
}

/// Compute the clipped Voronoi partition of `sites` within `region`.
///
/// Sites must be distinct, not all collinear, and inside the region.
pub fn voronoi_cells(sites: &[Point], region: Rect) -> Result<Vec<VoronoiCell>, GeometryError> {
    if sites.len() < 3 {
        return Err(GeometryError::TooFewSites(sites.len()));
    }
    for (i, s) in sites.iter().enumerate() {
        if !region.contains(s) {
            return Err(GeometryError::SiteOutsideRegion(i));
        }
    }
    check_distinct(sites)?;
    check_not_collinear(sites, region.diagonal())?;

    let edge_eps = region.diagonal() * 1e-9;
    let grid = SiteGrid::build(sites, region);
    let mut cells: Vec<VoronoiCell> = Vec::with_capacity(sites.len());
    let mut batch: Vec<(f64, usize)> = Vec::new();

    for (i, &si) in sites.iter().enumerate() {
        let corners = region.corners_ccw();
        let mut poly: Vec<(Point, EdgeTag)> =
            corners.iter().map(|&p| (p, EdgeTag::Region)).collect();
        let mut r_max = poly
            .iter()
            .map(|(p, _)| si.dist(p))
            .fold(0.0f64, f64::max);

        // Visit candidate sites in expanding grid rings, nearest ring first.
        // Once a ring's minimum possible distance exceeds twice the cell's
        // current radius, no remaining bisector can cut the cell.
        let (ci, cj) = grid.cell_of(&si);
        for ring in 0..grid.max_ring(ci, cj) + 1 {
            if grid.ring_min_dist(ring) * 0.5 > r_max {
                break;
            }
            batch.clear();
            grid.ring_sites(ci, cj, ring, &mut |j| {
                if j != i {
                    batch.push((si.dist_sq(&sites[j]), j));
                }
            });
            batch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for &(dsq, j) in batch.iter() {
                if dsq.sqrt() * 0.5 > r_max {
                    break; // rest of this ring is farther still
                }
                poly = clip_halfplane(&poly, si, sites[j], EdgeTag::Bisector(j));
                if poly.len() < 3 {
                    break; // cell vanished (cannot happen for in-region sites)
                }
                r_max = poly
                    .iter()
                    .map(|(p, _)| si.dist(p))
                    .fold(0.0f64, f64::max);
            }
            if poly.len() < 3 {
                break;
            }
        }

        let polygon: Vec<Point> = poly.iter().map(|(p, _)| *p).collect();
        let mut neighbors = Vec::new();
        let n = poly.len();
        for k in 0..n {
            if let EdgeTag::Bisector(j) = poly[k].1 {
                let a = poly[k].0;
                let b = poly[(k + 1) % n].0;
                if a.dist(&b) > edge_eps {
                    neighbors.push(j);
                }
            }
        }
        neighbors.sort_unstable();
        neighbors.dedup();
        cells.push(VoronoiCell {
            site: i,
            polygon,
            neighbors,
        });
    }

    symmetrize_neighbors(&mut cells);
    Ok(cells)
}

/// Keep the side of the bisector of (si, sj) closer to si.
/// Vertices carry the tag of the edge that starts at them.
fn clip_halfplane(
    poly: &[(Point, EdgeTag)],
    si: Point,
    sj: Point,
    tag: EdgeTag,
) -> Vec<(Point, EdgeTag)> {
    let mid = Point::new((si.x + sj.x) / 2.0, (si.y + sj.y) / 2.0);
    let (dx, dy) = (sj.x - si.x, sj.y - si.y);
    // f(p) <= 0 keeps points closer to si
    let f = |p: &Point| (p.x - mid.x) * dx + (p.y - mid.y) * dy;

    let n = poly.len();
    let mut out: Vec<(Point, EdgeTag)> = Vec::with_capacity(n + 2);
    for k in 0..n {
        let (a, ta) = poly[k];
        let (b, _) = poly[(k + 1) % n];
        let fa = f(&a);
        let fb = f(&b);
        let a_in = fa <= 0.0;
        let b_in = fb <= 0.0;
        if a_in {
            out.push((a, ta));
        }
        if a_in != b_in {
            let t = fa / (fa - fb);
            let x = Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
            // exiting: clip edge continues along the bisector; entering: the
            // remainder of the original edge follows.
            out.push((x, if a_in { tag } else { ta }));
        }
    }
    out
}

/// Uniform bucket grid over the sites, used to enumerate candidate bisector
/// sites in roughly-nearest-first order.
struct SiteGrid {
    nx: usize,
    ny: usize,
    cell_w: f64,
    cell_h: f64,
    min_x: f64,
    min_y: f64,
    buckets: Vec<Vec<usize>>,
}

impl SiteGrid {
    fn build(sites: &[Point], region: Rect) -> SiteGrid {
        let n = sites.len();
        let aspect = region.width() / region.height().max(1e-12);
        let target = (n as f64 / 2.0).max(1.0);
        let nx = ((target * aspect).sqrt().ceil() as usize).max(1);
        let ny = ((target / aspect).sqrt().ceil() as usize).max(1);
        let mut grid = SiteGrid {
            nx,
            ny,
            cell_w: region.width() / nx as f64,
            cell_h: region.height() / ny as f64,
            min_x: region.min_x,
            min_y: region.min_y,
            buckets: vec![Vec::new(); nx * ny],
        };
        for (i, p) in sites.iter().enumerate() {
            let (ci, cj) = grid.cell_of(p);
            grid.buckets[cj * grid.nx + ci].push(i);
        }
        grid
    }

    fn cell_of(&self, p: &Point) -> (usize, usize) {
        let ci = (((p.x - self.min_x) / self.cell_w) as usize).min(self.nx - 1);
        let cj = (((p.y - self.min_y) / self.cell_h) as usize).min(self.ny - 1);
        (ci, cj)
    }

    /// Any point in a cell at Chebyshev ring `r` is at least this far away.
    fn ring_min_dist(&self, ring: usize) -> f64 {
        ring.saturating_sub(1) as f64 * self.cell_w.min(self.cell_h)
    }

    fn max_ring(&self, ci: usize, cj: usize) -> usize {
        let dx = ci.max(self.nx - 1 - ci);
        let dy = cj.max(self.ny - 1 - cj);
        dx.max(dy)
    }

    fn ring_sites(&self, ci: usize, cj: usize, ring: usize, visit: &mut impl FnMut(usize)) {
        let lo_i = ci as isize - ring as isize;
        let hi_i = ci as isize + ring as isize;
        let lo_j = cj as isize - ring as isize;
        let hi_j = cj as isize + ring as isize;
        for j in lo_j..=hi_j {
            if j < 0 || j >= self.ny as isize {
                continue;
            }
            for i in lo_i..=hi_i {
                if i < 0 || i >= self.nx as isize {
                    continue;
                }
                let on_ring = i == lo_i || i == hi_i || j == lo_j || j == hi_j;
                if !on_ring {
                    continue;
                }
                for &s in &self.buckets[j as usize * self.nx + i as usize] {
                    visit(s);
                }
            }
        }
    }
}

fn symmetrize_neighbors(cells: &mut [VoronoiCell]) {
    let pairs: Vec<(usize, usize)> = cells
        .iter()
        .flat_map(|c| c.neighbors.iter().map(move |&j| (c.site, j)))
        .collect();
    for (i, j) in pairs {
        if !cells[j].neighbors.contains(&i) {
            cells[j].neighbors.push(i);
            cells[j].neighbors.sort_unstable();
        }
    }
}

fn check_distinct(sites: &[Point]) -> Result<(), GeometryError> {
    let mut sorted: Vec<(u64, u64, usize)> = sites
        .iter()
        .enumerate()
        .map(|(i, p)| (p.x.to_bits(), p.y.to_bits(), i))
        .collect();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
            return Err(GeometryError::DuplicateSite(w[1].2.max(w[0].2)));
        }
    }
    Ok(())
}

fn check_not_collinear(sites: &[Point], scale: f64) -> Result<(), GeometryError> {
    let a = sites[0];
    let b = match sites.iter().find(|p| p.dist(&a) > scale * 1e-12) {
        Some(p) => *p,
        None => return Err(GeometryError::Collinear),
    };
    let eps = scale * scale * 1e-12;
    let non_collinear = sites
        .iter()
        .any(|c| ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)).abs() > eps);
    if non_collinear {
        Ok(())
    } else {
        Err(GeometryError::Collinear)
    }
}
