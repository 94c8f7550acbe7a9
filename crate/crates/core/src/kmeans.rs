//! Deterministic k-means over projected site coordinates.
//!
//! Farthest-point initialization seeded by the caller's RNG, Lloyd iterations
//! capped at 100, convergence when no assignment changes. Empty clusters are
//! repaired by reseeding the empty center at the point farthest from its
//! assigned center (lowest point index on ties).

use crate::geo::Point;
use rand::Rng;
use thiserror::Error;

const MAX_ITERS: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum KmeansError {
    #[error("k = {k} exceeds the number of distinct point locations ({distinct})")]
    InvalidK { k: usize, distinct: usize },
    #[error("k must be at least 1")]
    ZeroK,
}

/// Cluster `points` into `k` groups; returns the cluster index per point.
pub fn kmeans(points: &[Point], k: usize, rng: &mut impl Rng) -> Result<Vec<usize>, KmeansError> {
    if k == 0 {
        return Err(KmeansError::ZeroK);
    }
    let distinct = count_distinct(points);
    if k > distinct {
        return Err(KmeansError::InvalidK { k, distinct });
    }

    let mut centers = init_farthest_point(points, k, rng);
    let mut assignment = vec![0usize; points.len()];
    assign(points, &centers, &mut assignment);

    for _ in 0..MAX_ITERS {
        update_centers(points, &assignment, &mut centers);
        repair_empty_clusters(points, &mut assignment, &mut centers);

        let mut next = vec![0usize; points.len()];
        assign(points, &centers, &mut next);
        if next == assignment {
            break;
        }
        assignment = next;
    }
    Ok(assignment)
}

fn count_distinct(points: &[Point]) -> usize {
    let mut keys: Vec<(u64, u64)> = points
        .iter()
        .map(|p| (p.x.to_bits(), p.y.to_bits()))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

fn init_farthest_point(points: &[Point], k: usize, rng: &mut impl Rng) -> Vec<Point> {
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.gen_range(0..points.len())]);
    let mut min_d: Vec<f64> = points.iter().map(|p| p.dist_sq(&centers[0])).collect();
    while centers.len() < k {
        let mut best = 0usize;
        for i in 1..points.len() {
            if min_d[i] > min_d[best] {
                best = i;
            }
        }
        let c = points[best];
        centers.push(c);
        for (i, p) in points.iter().enumerate() {
            min_d[i] = min_d[i].min(p.dist_sq(&c));
        }
    }
    centers
}

fn assign(points: &[Point], centers: &[Point], out: &mut [usize]) {
    for (i, p) in points.iter().enumerate() {
        let mut best = 0usize;
        let mut best_d = p.dist_sq(&centers[0]);
        for (c, center) in centers.iter().enumerate().skip(1) {
            let d = p.dist_sq(center);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        out[i] = best;
    }
}

fn update_centers(points: &[Point], assignment: &[usize], centers: &mut [Point]) {
    let k = centers.len();
    let mut sums = vec![(0.0f64, 0.0f64, 0usize); k];
    for (p, &c) in points.iter().zip(assignment) {
        sums[c].0 += p.x;
        sums[c].1 += p.y;
        sums[c].2 += 1;
    }
    for (c, (sx, sy, n)) in sums.into_iter().enumerate() {
        if n > 0 {
            centers[c] = Point::new(sx / n as f64, sy / n as f64);
        }
    }
}

fn repair_empty_clusters(points: &[Point], assignment: &mut [usize], centers: &mut [Point]) {
    let k = centers.len();
    let mut counts = vec![0usize; k];
    for &c in assignment.iter() {
        counts[c] += 1;
    }
    let mut taken = vec![false; points.len()];
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        // farthest point from its own assigned center, not already used
        let mut best: Option<usize> = None;
        let mut best_d = -1.0;
        for (i, p) in points.iter().enumerate() {
            if taken[i] || counts[assignment[i]] <= 1 {
                continue;
            }
            let d = p.dist_sq(&centers[assignment[i]]);
            if d > best_d {
                best_d = d;
                best = Some(i);
            }
        }
        if let Some(i) = best {
            taken[i] = true;
            counts[assignment[i]] -= 1;
            assignment[i] = c;
            counts[c] = 1;
            centers[c] = points[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn grid_points(n: usize) -> Vec<Point> {
        (0..n)
            .map(|i| Point::new((i % 10) as f64 * 10.0, (i / 10) as f64 * 10.0))
            .collect()
    }

    #[test]
    fn k_equals_one_groups_everything() {
        let pts = grid_points(30);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let a = kmeans(&pts, 1, &mut rng).unwrap();
        assert!(a.iter().all(|&c| c == 0));
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let pts = grid_points(12);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let a = kmeans(&pts, 12, &mut rng).unwrap();
        let mut counts = vec![0; 12];
        for &c in &a {
            counts[c] += 1;
        }
        assert!(counts.iter().all(|&n| n == 1));
    }

    #[test]
    fn k_too_large_is_invalid() {
        let pts = grid_points(5);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        assert!(matches!(
            kmeans(&pts, 6, &mut rng),
            Err(KmeansError::InvalidK { .. })
        ));
    }

    #[test]
    fn same_seed_same_assignment() {
        let pts = grid_points(100);
        let a = kmeans(&pts, 7, &mut ChaCha20Rng::seed_from_u64(99)).unwrap();
        let b = kmeans(&pts, 7, &mut ChaCha20Rng::seed_from_u64(99)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn two_obvious_clusters_are_separated() {
        let mut pts: Vec<Point> = (0..20).map(|i| Point::new(i as f64, 0.0)).collect();
        pts.extend((0..20).map(|i| Point::new(1000.0 + i as f64, 0.0)));
        let a = kmeans(&pts, 2, &mut ChaCha20Rng::seed_from_u64(5)).unwrap();
        assert!(a[..20].iter().all(|&c| c == a[0]));
        assert!(a[20..].iter().all(|&c| c == a[20]));
        assert_ne!(a[0], a[20]);
    }
}
