use serde::{Deserialize, Serialize};

use super::Graph;
use crate::{Error, Result};

/// Default histogram size for the empirical weight measure.
pub const MU_HAT_BINS: usize = 200;

/// Discrete probability measure on `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMeasure {
    atoms: Vec<(f64, f64)>,
}

impl WeightMeasure {
    /// Builds a measure from `(support point, mass)` pairs.
    ///
    /// Masses are renormalized; atoms at equal points are merged.
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        atoms.retain(|a| a.1 > 0.0);
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms with positive mass".into()));
        }
        for &(q, p) in &atoms {
            if !(q > 0.0 && q < 1.0) || !p.is_finite() {
                return Err(Error::InvalidMeasure(format!(
                    "atom {q}@{p} outside (0, 1)"
                )));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (q, p) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == q => last.1 += p,
                _ => merged.push((q, p)),
            }
        }
        let total: f64 = merged.iter().map(|a| a.1).sum();
        for a in &mut merged {
            a.1 /= total;
        }
        Ok(WeightMeasure { atoms: merged })
    }

    pub fn point(q: f64) -> Result<Self> {
        WeightMeasure::new(vec![(q, 1.0)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// `∫ q^p dμ`.
    pub fn moment(&self, p: f64) -> f64 {
        self.atoms.iter().map(|&(q, w)| w * q.powf(p)).sum()
    }

    /// `∫ q dμ`.
    pub fn mean(&self) -> f64 {
        self.moment(1.0)
    }

    /// The support point if the measure is a single atom.
    pub fn single_atom(&self) -> Option<f64> {
        (self.atoms.len() == 1).then(|| self.atoms[0].0)
    }
}

/// Degree-based weight estimates `d_i / sqrt(d^T 1)` and their histogram
/// measure with [`MU_HAT_BINS`] bins.
pub fn estimate_weights(graph: &Graph) -> Result<(Vec<f64>, WeightMeasure)> {
    estimate_weights_binned(graph, Some(MU_HAT_BINS))
}

/// As [`estimate_weights`]; `None` keeps one atom per distinct degree.
pub fn estimate_weights_binned(
    graph: &Graph,
    bins: Option<usize>,
) -> Result<(Vec<f64>, WeightMeasure)> {
    if graph.n() == 0 {
        return Err(Error::EmptyGraph);
    }
    let scale = (graph.twice_edges() as f64).sqrt();
    let q_hat: Vec<f64> = graph.degrees().iter().map(|&d| d as f64 / scale).collect();
    let clip = |q: f64| q.clamp(1e-9, 1.0 - 1e-9);
    let n = q_hat.len() as f64;
    let atoms = match bins {
        None => q_hat.iter().map(|&q| (clip(q), 1.0 / n)).collect(),
        Some(b) => {
            let b = b.max(1);
            let lo = q_hat.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = q_hat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo <= 0.0 {
                vec![(clip(lo), 1.0)]
            } else {
                let width = (hi - lo) / b as f64;
                let mut counts = vec![0usize; b];
                for &q in &q_hat {
                    let k = (((q - lo) / width) as usize).min(b - 1);
                    counts[k] += 1;
                }
                counts
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(k, &c)| (clip(lo + (k as f64 + 0.5) * width), c as f64 / n))
                    .collect()
            }
        }
    };
    Ok((q_hat, WeightMeasure::new(atoms)?))
}
