use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::em::{kmeanspp, nearest};
use crate::{Error, Result};

/// Lloyd's algorithm result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centres: Vec<Vec<f64>>,
    /// Sum of squared distances to the assigned centre.
    pub inertia: f64,
}

/// k-means with k-means++ seeding, best of `restarts` runs.
pub fn kmeans(points: &[Vec<f64>], k: usize, restarts: usize, seed: u64) -> Result<KMeansResult> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidParams(format!(
            "cannot form {k} clusters from {} points",
            points.len()
        )));
    }
    let dim = points[0].len();
    let mut best: Option<KMeansResult> = None;
    for r in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let mut centres = kmeanspp(points, k, &mut rng);
        let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centres)).collect();
        for _ in 0..300 {
            let mut sums = vec![vec![0.0; dim]; k];
            let mut counts = vec![0usize; k];
            for (p, &l) in points.iter().zip(&labels) {
                counts[l] += 1;
                for i in 0..dim {
                    sums[l][i] += p[i];
                }
            }
            for a in 0..k {
                if counts[a] > 0 {
                    centres[a] = sums[a].iter().map(|s| s / counts[a] as f64).collect();
                }
            }
            let next: Vec<usize> = points.iter().map(|p| nearest(p, &centres)).collect();
            if next == labels {
                break;
            }
            labels = next;
        }
        let inertia = points
            .iter()
            .zip(&labels)
            .map(|(p, &l)| {
                p.iter()
                    .zip(&centres[l])
                    .map(|(x, c)| (x - c).powi(2))
                    .sum::<f64>()
            })
            .sum();
        if best.as_ref().is_none_or(|b| inertia < b.inertia) {
            best = Some(KMeansResult {
                labels,
                centres,
                inertia,
            });
        }
    }
    Ok(best.expect("at least one restart"))
}
