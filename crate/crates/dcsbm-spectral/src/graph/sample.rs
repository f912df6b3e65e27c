use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DcsbmParams, Graph, PackedAdjacency};
use crate::{Error, Result};

/// Ground truth behind a sampled graph, restricted to the nodes kept in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentModel {
    pub params: DcsbmParams,
    pub seed: u64,
    /// Original index of each kept node.
    pub nodes: Vec<usize>,
    pub q: Vec<f64>,
    pub labels: Vec<usize>,
}

impl LatentModel {
    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(f, self)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Ok(serde_json::from_reader(f)?)
    }

    /// Empirical class proportions `n_a / n` over the kept nodes.
    pub fn class_fractions(&self) -> Vec<f64> {
        let k = self.params.k();
        let mut counts = vec![0.0; k];
        for &g in &self.labels {
            counts[g] += 1.0;
        }
        let n = self.labels.len() as f64;
        counts.iter().map(|c| c / n).collect()
    }
}

/// Samples a DCSBM graph.
///
/// Classes are contiguous blocks of sizes from largest-remainder rounding.
/// Weights come from stream 0 of a ChaCha8 generator seeded with `seed`, and
/// row `i` of the adjacency from stream `i + 1`, so output does not depend on
/// evaluation order.
pub fn sample_dcsbm(params: &DcsbmParams, seed: u64) -> Result<(Graph, LatentModel)> {
    params.validate()?;
    let n = params.n;
    let sizes = params.class_sizes();
    let labels: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(a, &s)| std::iter::repeat_n(a, s))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let q: Vec<f64> = (0..n).map(|_| params.weight_law.sample(&mut rng)).collect();

    let k = params.k();
    let root_n = (n as f64).sqrt();
    let scale: Vec<Vec<f64>> = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| 1.0 + params.affinity[a][b] / root_n)
                .collect()
        })
        .collect();

    let mut adj = PackedAdjacency::new(n);
    for i in 0..n {
        let mut row = ChaCha8Rng::seed_from_u64(seed);
        row.set_stream(i as u64 + 1);
        for j in i + 1..n {
            let p = q[i] * q[j] * scale[labels[i]][labels[j]];
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidProbability { i, j, p });
            }
            if row.random::<f64>() < p {
                adj.insert(i, j);
            }
        }
    }
    let names = (0..n).map(|i| i.to_string()).collect();
    let (graph, kept) = Graph::from_packed(adj, Some(labels.clone()), names)?;
    if kept.len() < n {
        log::warn!("dropped {} isolated nodes", n - kept.len());
    }
    let latent = LatentModel {
        params: params.clone(),
        seed,
        q: kept.iter().map(|&i| q[i]).collect(),
        labels: kept.iter().map(|&i| labels[i]).collect(),
        nodes: kept,
    };
    Ok((graph, latent))
}
