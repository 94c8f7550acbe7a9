//! Planar geometry primitives and the local map projection.
//!
//! All simulation geometry runs in a local azimuthal equidistant projection
//! centered on the site centroid, so Euclidean distances in meters are
//! meaningful at metro scale.

use serde::{Deserialize, Serialize};

/// Mean Earth radius in meters (IUGG).
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// A point in projected planar coordinates (meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.dist_sq(other).sqrt()
    }

    pub fn dist_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Axis-aligned rectangle in projected meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Rect {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    /// Smallest rectangle containing all points. Empty input yields a unit
    /// rectangle at the origin.
    pub fn bounding(points: &[Point]) -> Rect {
        if points.is_empty() {
            return Rect::new(0.0, 0.0, 1.0, 1.0);
        }
        let mut r = Rect::new(
            points[0].x,
            points[0].y,
            points[0].x,
            points[0].y,
        );
        for p in points {
            r.min_x = r.min_x.min(p.x);
            r.min_y = r.min_y.min(p.y);
            r.max_x = r.max_x.max(p.x);
            r.max_y = r.max_y.max(p.y);
        }
        r
    }

    /// Grow the rectangle by `frac` of its extent on every side. Degenerate
    /// extents (all points collinear with an axis) get a minimum 1 m margin
    /// so the region always has interior.
    pub fn inflated(&self, frac: f64) -> Rect {
        let mx = ((self.max_x - self.min_x) * frac).max(1.0);
        let my = ((self.max_y - self.min_y) * frac).max(1.0);
        Rect::new(
            self.min_x - mx,
            self.min_y - my,
            self.max_x + mx,
            self.max_y + my,
        )
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn diagonal(&self) -> f64 {
        (self.width() * self.width() + self.height() * self.height()).sqrt()
    }

    pub fn corners_ccw(&self) -> [Point; 4] {
        [
            Point::new(self.min_x, self.min_y),
            Point::new(self.max_x, self.min_y),
            Point::new(self.max_x, self.max_y),
            Point::new(self.min_x, self.max_y),
        ]
    }
}

/// Azimuthal equidistant projection centered on a reference coordinate.
///
/// Distances from the center are exact; distortion elsewhere is negligible
/// at the tens-of-kilometers scale this crate works at.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LocalProjection {
    pub center_lat_deg: f64,
    pub center_lon_deg: f64,
}

impl LocalProjection {
    pub fn new(center_lat_deg: f64, center_lon_deg: f64) -> Self {
        LocalProjection {
            center_lat_deg,
            center_lon_deg,
        }
    }

    /// Center the projection on the arithmetic centroid of the given
    /// lat/lon pairs.
    pub fn centered_on(coords: &[(f64, f64)]) -> Self {
        let n = coords.len().max(1) as f64;
        let (mut lat, mut lon) = (0.0, 0.0);
        for (la, lo) in coords {
            lat += la;
            lon += lo;
        }
        LocalProjection::new(lat / n, lon / n)
    }

    pub fn project(&self, lat_deg: f64, lon_deg: f64) -> Point {
        let phi0 = self.center_lat_deg.to_radians();
        let lam0 = self.center_lon_deg.to_radians();
        let phi = lat_deg.to_radians();
        let dlam = lon_deg.to_radians() - lam0;

        let cos_c = phi0.sin() * phi.sin() + phi0.cos() * phi.cos() * dlam.cos();
        let c = cos_c.clamp(-1.0, 1.0).acos();
        // k = c / sin(c), with the removable singularity at c = 0.
        let k = if c.abs() < 1e-12 { 1.0 } else { c / c.sin() };

        let x = EARTH_RADIUS_M * k * phi.cos() * dlam.sin();
        let y = EARTH_RADIUS_M * k * (phi0.cos() * phi.sin() - phi0.sin() * phi.cos() * dlam.cos());
        Point::new(x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_center_maps_to_origin() {
        let proj = LocalProjection::new(34.05, -118.25);
        let p = proj.project(34.05, -118.25);
        assert!(p.x.abs() < 1e-6 && p.y.abs() < 1e-6);
    }

    #[test]
    fn projection_one_degree_latitude_is_about_111km() {
        let proj = LocalProjection::new(34.0, -118.0);
        let p = proj.project(35.0, -118.0);
        assert!((p.y - 111_195.0).abs() < 100.0, "y = {}", p.y);
        assert!(p.x.abs() < 1.0);
    }

    #[test]
    fn bounding_rect_and_inflation() {
        let pts = [Point::new(0.0, 0.0), Point::new(10.0, 20.0)];
        let r = Rect::bounding(&pts).inflated(0.1);
        assert_eq!(r.min_x, -1.0);
        assert_eq!(r.max_y, 22.0);
        assert!(r.contains(&Point::new(5.0, 5.0)));
        assert!(!r.contains(&Point::new(12.0, 5.0)));
    }
}
