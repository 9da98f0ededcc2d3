//! Emergent-behaviour metrics.

use alloc::vec::Vec;

/// Size of the largest group of robots connected by centre distances
/// `<= threshold`, as a fraction of the swarm. 1.0 for an empty swarm.
pub fn cluster_fraction(positions: &[(f64, f64)], threshold: f64) -> f64 {
    let n = positions.len();
    if n == 0 {
        return 1.0;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (positions[i], positions[j]);
            if libm::hypot(a.0 - b.0, a.1 - b.1) <= threshold {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut size = alloc::vec![0usize; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        size[r] += 1;
    }
    *size.iter().max().unwrap_or(&0) as f64 / n as f64
}

/// Centroid of a point set; the origin for an empty set.
pub fn centroid(positions: &[(f64, f64)]) -> (f64, f64) {
    if positions.is_empty() {
        return (0.0, 0.0);
    }
    let n = positions.len() as f64;
    let (sx, sy) = positions
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.0, sy + p.1));
    (sx / n, sy / n)
}

/// Distance from the swarm centroid to the beacon, and the largest
/// distance of any robot from the centroid.
pub fn taxis_metrics(positions: &[(f64, f64)], beacon: (f64, f64)) -> (f64, f64) {
    let (cx, cy) = centroid(positions);
    let dist = libm::hypot(cx - beacon.0, cy - beacon.1);
    let spread = positions
        .iter()
        .map(|p| libm::hypot(p.0 - cx, p.1 - cy))
        .fold(0.0, f64::max);
    (dist, spread)
}
