use rand::Rng;
use serde::{Deserialize, Serialize};

use super::WeightMeasure;
use crate::{Error, Result};

/// Number of quadrature bins used to discretize continuous weight laws.
pub const LAW_BINS: usize = 400;

/// Distribution of the intrinsic node weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightLaw {
    /// Point masses `(q, mass)`.
    Discrete { atoms: Vec<(f64, f64)> },
    /// Density proportional to `q^(-exponent)` on `[lo, hi]`. Exponent 0 is uniform.
    PowerLaw { exponent: f64, lo: f64, hi: f64 },
}

impl WeightLaw {
    pub fn point(q: f64) -> Self {
        WeightLaw::Discrete {
            atoms: vec![(q, 1.0)],
        }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        WeightLaw::PowerLaw {
            exponent: 0.0,
            lo,
            hi,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WeightLaw::Discrete { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::InvalidParams("weight law has no atoms".into()));
                }
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                for &(q, p) in atoms {
                    if !(q > 0.0 && q < 1.0) || !(p > 0.0) {
                        return Err(Error::InvalidParams(format!("bad weight atom {q}@{p}")));
                    }
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParams(format!(
                        "weight masses sum to {total}"
                    )));
                }
            }
            WeightLaw::PowerLaw { exponent, lo, hi } => {
                if !(0.0 < *lo && lo < hi && *hi < 1.0) || !exponent.is_finite() {
                    return Err(Error::InvalidParams(format!(
                        "bad power law {exponent} on [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Largest weight in the support.
    pub fn max_weight(&self) -> f64 {
        match self {
            WeightLaw::Discrete { atoms } => atoms.iter().map(|a| a.0).fold(0.0, f64::max),
            WeightLaw::PowerLaw { hi, .. } => *hi,
        }
    }

    /// Draws one weight.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match self {
            WeightLaw::Discrete { atoms } => {
                let mut acc = 0.0;
                for &(q, p) in atoms {
                    acc += p;
                    if u < acc {
                        return q;
                    }
                }
                atoms[atoms.len() - 1].0
            }
            WeightLaw::PowerLaw { exponent, lo, hi } => power_law_quantile(*exponent, *lo, *hi, u),
        }
    }

    /// Measure used by the fixed-point integrals. Continuous laws are binned
    /// into [`LAW_BINS`] equal-width cells carrying their exact mass at the midpoint.
    pub fn measure(&self) -> Result<WeightMeasure> {
        self.validate()?;
        match self {
            WeightLaw::Discrete { atoms } => WeightMeasure::new(atoms.clone()),
            WeightLaw::PowerLaw { exponent, lo, hi } => {
                let width = (hi - lo) / LAW_BINS as f64;
                let atoms = (0..LAW_BINS)
                    .map(|b| {
                        let a = lo + width * b as f64;
                        let mass = power_law_cdf(*exponent, *lo, *hi, a + width)
                            - power_law_cdf(*exponent, *lo, *hi, a);
                        (a + 0.5 * width, mass)
                    })
                    .collect();
                WeightMeasure::new(atoms)
            }
        }
    }
}

fn power_law_cdf(exponent: f64, lo: f64, hi: f64, x: f64) -> f64 {
    if (exponent - 1.0).abs() < 1e-12 {
        (x / lo).ln() / (hi / lo).ln()
    } else {
        let s = 1.0 - exponent;
        (x.powf(s) - lo.powf(s)) / (hi.powf(s) - lo.powf(s))
    }
}

fn power_law_quantile(exponent: f64, lo: f64, hi: f64, u: f64) -> f64 {
    if (exponent - 1.0).abs() < 1e-12 {
        lo * (hi / lo).powf(u)
    } else {
        let s = 1.0 - exponent;
        (lo.powf(s) + u * (hi.powf(s) - lo.powf(s))).powf(1.0 / s)
    }
}

/// Shape of the class-affinity matrix before scaling by the amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AffinityPattern {
    /// `M = scale * I`.
    Identity,
    /// `M_aa = scale`, `M_ab = -scale`.
    Contrast,
    /// `M = scale * B` for an explicit symmetric `B`.
    Explicit { matrix: Vec<Vec<f64>> },
}

impl AffinityPattern {
    pub fn matrix(&self, k: usize, scale: f64) -> Vec<Vec<f64>> {
        match self {
            AffinityPattern::Identity => (0..k)
                .map(|a| (0..k).map(|b| if a == b { scale } else { 0.0 }).collect())
                .collect(),
            AffinityPattern::Contrast => (0..k)
                .map(|a| {
                    (0..k)
                        .map(|b| if a == b { scale } else { -scale })
                        .collect()
                })
                .collect(),
            AffinityPattern::Explicit { matrix } => matrix
                .iter()
                .map(|row| row.iter().map(|x| x * scale).collect())
                .collect(),
        }
    }
}

/// Parameters of the degree-corrected stochastic block model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcsbmParams {
    pub n: usize,
    pub proportions: Vec<f64>,
    /// Symmetric `K x K` deltas; `C_ab = 1 + M_ab / sqrt(n)`.
    pub affinity: Vec<Vec<f64>>,
    pub weight_law: WeightLaw,
}

impl DcsbmParams {
    pub fn k(&self) -> usize {
        self.proportions.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 {
            return Err(Error::InvalidParams("no classes".into()));
        }
        validate_proportions(&self.proportions)?;
        validate_symmetric(&self.affinity, k)?;
        self.weight_law.validate()?;
        let sizes = class_sizes(self.n, &self.proportions);
        if sizes.iter().any(|&s| s < 2) {
            return Err(Error::InvalidParams(format!(
                "class sizes {sizes:?} too small"
            )));
        }
        Ok(())
    }

    /// Class sizes by largest-remainder rounding of `n * c`.
    pub fn class_sizes(&self) -> Vec<usize> {
        class_sizes(self.n, &self.proportions)
    }
}

pub(crate) fn validate_proportions(c: &[f64]) -> Result<()> {
    if c.iter().any(|&x| !(x > 0.0)) || (c.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParams(format!(
            "proportions {c:?} are not a probability vector"
        )));
    }
    Ok(())
}

pub(crate) fn validate_symmetric(m: &[Vec<f64>], k: usize) -> Result<()> {
    if m.len() != k || m.iter().any(|r| r.len() != k) {
        return Err(Error::InvalidParams(format!("affinity must be {k}x{k}")));
    }
    for a in 0..k {
        for b in 0..k {
            if !m[a][b].is_finite() || (m[a][b] - m[b][a]).abs() > 1e-12 * (1.0 + m[a][b].abs()) {
                return Err(Error::InvalidParams("affinity is not symmetric".into()));
            }
        }
    }
    Ok(())
}

/// Largest-remainder rounding of `n * c` to integers summing to `n`.
pub fn class_sizes(n: usize, c: &[f64]) -> Vec<usize> {
    let raw: Vec<f64> = c.iter().map(|x| x * n as f64).collect();
    let mut sizes: Vec<usize> = raw.iter().map(|x| x.floor() as usize).collect();
    let mut rest = n.saturating_sub(sizes.iter().sum());
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = raw[a] - raw[a].floor();
        let rb = raw[b] - raw[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &a in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        sizes[a] += 1;
        rest -= 1;
    }
    sizes
}
