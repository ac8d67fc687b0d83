//! Lloyd's k-means with deterministic farthest-point seeding.

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 300;

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Farthest-point ("maximin") initialization: the first center is point
/// `start`, each next center is the point farthest from its nearest chosen
/// center (lowest index on ties).
pub fn maximin_centers(points: &[Vec<f64>], k: usize, start: usize) -> Vec<Vec<f64>> {
    let mut centers = vec![points[start].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| dist2(p, &points[start])).collect();
    while centers.len() < k {
        let mut pick = 0;
        for (i, &d) in nearest.iter().enumerate() {
            if d > nearest[pick] {
                pick = i;
            }
        }
        let c = points[pick].clone();
        for (p, d) in points.iter().zip(nearest.iter_mut()) {
            *d = d.min(dist2(p, &c));
        }
        centers.push(c);
    }
    centers
}

/// Returns a 0-based cluster index per point. Stops when assignments no
/// longer change or after 300 iterations. Empty clusters keep their center.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} must be in 1..={n}")));
    }
    let mut centers = maximin_centers(points, k, (seed % n as u64) as usize);
    let assign = |centers: &[Vec<f64>]| -> Vec<usize> {
        points
            .iter()
            .map(|p| {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (c, center) in centers.iter().enumerate() {
                    let d = dist2(p, center);
                    if d < best_d {
                        best = c;
                        best_d = d;
                    }
                }
                best
            })
            .collect()
    };
    let mut labels = assign(&centers);
    for _ in 0..MAX_ITERATIONS {
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&labels) {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let next = assign(&centers);
        if next == labels {
            break;
        }
        labels = next;
    }
    Ok(labels)
}
