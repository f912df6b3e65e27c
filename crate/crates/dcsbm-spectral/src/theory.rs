//! Limiting class statistics of the isolated eigenvectors and the
//! misclassification rate they imply for two classes.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::graph::WeightMeasure;
use crate::rmt::{
    e_moment, e_moment2, e_moment3, predict_spikes_with_edge, support_edge, Spike, SpikeReport,
    StieltjesSolution, SupportEstimate, INFORMATIVE_TOL,
};
use crate::{Error, Result};

/// Fluctuation correction `χ(ρ)` entering the limiting means and variances.
pub fn chi(measure: &WeightMeasure, alpha: f64, sol: &StieltjesSolution) -> Result<f64> {
    let e = |a, b| e_moment(measure, alpha, a, b, sol);
    let e2 = |a, b| e_moment2(measure, alpha, a, b, sol, sol);
    let e3 = |a, b| e_moment3(measure, alpha, a, b, sol, sol);
    let (em10, e00) = (e(-1, 0)?, e(0, 0)?);
    let (e22, e32, e42) = (e2(2, 2)?, e2(3, 2)?, e2(4, 2)?);
    let (e32c, e42c) = (e3(3, 2)?, e3(4, 2)?);
    let den = (1.0 + e42) * (1.0 - e22) + e32 * e32;
    if den.abs() < 1e-12 {
        return Err(Error::DegenerateDenominator);
    }
    let num = ((1.0 + e42) * em10 - e32 * e00) * e32c - (e32 * em10 + (1.0 - e22) * e00) * e42c;
    Ok(num / den)
}

fn require_informative(spike: &Spike) -> Result<()> {
    if spike.informative {
        Ok(())
    } else {
        Err(Error::NotInformative(spike.theta))
    }
}

/// Per-class limiting mean of the regularized eigenvector for one spike.
///
/// `class_sizes` are the class counts `n_a`; signs follow the spike's
/// symmetrized eigenvector.
pub fn limiting_means(
    measure: &WeightMeasure,
    alpha: f64,
    spike: &Spike,
    class_sizes: &[f64],
) -> Result<Vec<f64>> {
    require_informative(spike)?;
    if spike.vector.len() != class_sizes.len() {
        return Err(Error::KMismatch(format!(
            "{} classes, {} sizes",
            spike.vector.len(),
            class_sizes.len()
        )));
    }
    let sol = &spike.solution;
    let e00 = e_moment(measure, alpha, 0, 0, sol)?;
    let e002 = e_moment2(measure, alpha, 0, 0, sol, sol)?;
    let x = chi(measure, alpha, sol)?;
    Ok(class_sizes
        .iter()
        .zip(&spike.vector)
        .map(|(na, va)| va * e00.abs() / (na * (e002 + x)).sqrt())
        .collect())
}

/// Per-class limiting covariance between the entries of two regularized eigenvectors.
///
/// `same` selects the diagonal term, present only when both arguments are the same spike.
pub fn limiting_covariances(
    measure: &WeightMeasure,
    alpha: f64,
    first: &Spike,
    second: &Spike,
    same: bool,
    class_sizes: &[f64],
) -> Result<Vec<f64>> {
    require_informative(first)?;
    require_informative(second)?;
    let k = class_sizes.len();
    if first.vector.len() != k || second.vector.len() != k {
        return Err(Error::KMismatch(format!(
            "{k} class sizes for {}-class spikes",
            first.vector.len()
        )));
    }
    let n: f64 = class_sizes.iter().sum();
    let (s1, s2) = (&first.solution, &second.solution);
    let cross = e_moment2(measure, alpha, 0, 0, s1, s2)?
        - e_moment(measure, alpha, 0, 0, s1)? * e_moment(measure, alpha, 0, 0, s2)?;
    let (chi1, chi2) = (chi(measure, alpha, s1)?, chi(measure, alpha, s2)?);
    let norm = ((e_moment2(measure, alpha, 0, 0, s1, s1)? + chi1)
        * (e_moment2(measure, alpha, 0, 0, s2, s2)? + chi2))
        .sqrt();
    Ok((0..k)
        .map(|a| {
            let na = class_sizes[a];
            let diag = if same { na / n * chi1 } else { 0.0 };
            (cross * first.vector[a] * second.vector[a] + diag) / (na * norm)
        })
        .collect())
}

/// Limiting means and covariances for every informative spike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryStats {
    /// Informative spikes in decreasing `|λ|` order.
    pub spikes: Vec<Spike>,
    /// `means[i][a]`: class `a` mean of eigenvector `i`.
    pub means: Vec<Vec<f64>>,
    /// `covariances[i][j][a]`: class `a` covariance between eigenvectors `i` and `j`.
    pub covariances: Vec<Vec<Vec<f64>>>,
    pub chi: Vec<f64>,
}

/// Collects [`limiting_means`] and [`limiting_covariances`] over the informative spikes.
pub fn theory_stats(
    measure: &WeightMeasure,
    alpha: f64,
    report: &SpikeReport,
    class_sizes: &[f64],
) -> Result<TheoryStats> {
    let spikes: Vec<Spike> = report.informative().cloned().collect();
    let means = spikes
        .iter()
        .map(|s| limiting_means(measure, alpha, s, class_sizes))
        .collect::<Result<Vec<_>>>()?;
    let chi = spikes
        .iter()
        .map(|s| chi(measure, alpha, &s.solution))
        .collect::<Result<Vec<_>>>()?;
    let covariances = (0..spikes.len())
        .map(|i| {
            (0..spikes.len())
                .map(|j| {
                    limiting_covariances(
                        measure,
                        alpha,
                        &spikes[i],
                        &spikes[j],
                        i == j,
                        class_sizes,
                    )
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TheoryStats {
        spikes,
        means,
        covariances,
        chi,
    })
}

/// Lower-tail standard normal probability.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Bayes rule for a one-dimensional two-class Gaussian mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRule {
    /// Sorted cut points; empty when one class wins everywhere.
    pub thresholds: Vec<f64>,
    pub error_prob: f64,
    pub correct_rate: f64,
}

/// Thresholds and error probability for classes `N(ν₁, σ₁)`, `N(ν₂, σ₂)` with
/// priors `c₁`, `c₂` (variances, not standard deviations).
pub fn decision_rule(
    nu1: f64,
    nu2: f64,
    sigma1: f64,
    sigma2: f64,
    c1: f64,
    c2: f64,
) -> Result<DecisionRule> {
    if !(sigma1 > 0.0 && sigma2 > 0.0 && sigma1.is_finite() && sigma2.is_finite()) {
        return Err(Error::DegenerateVariance);
    }
    if !(c1 > 0.0 && c2 > 0.0) {
        return Err(Error::InvalidParams(format!(
            "class weights ({c1}, {c2}) must be positive"
        )));
    }
    let (nu1, nu2, s1, s2, c1, c2) = if nu1 <= nu2 {
        (nu1, nu2, sigma1, sigma2, c1, c2)
    } else {
        (nu2, nu1, sigma2, sigma1, c2, c1)
    };
    let trivial = DecisionRule {
        thresholds: Vec::new(),
        error_prob: c1.min(c2),
        correct_rate: c1.max(c2),
    };
    let p1 = |x: f64| normal_cdf((x - nu1) / s1.sqrt());
    let p2 = |x: f64| normal_cdf((x - nu2) / s2.sqrt());
    let finish = |thresholds: Vec<f64>, error: f64| {
        let error_prob = error.clamp(0.0, 1.0);
        DecisionRule {
            thresholds,
            error_prob,
            correct_rate: 1.0 - error_prob,
        }
    };

    if (s1 - s2).abs() <= 1e-12 * s1.max(s2) {
        if nu2 - nu1 <= 0.0 {
            return Ok(trivial);
        }
        let s = 0.5 * (s1 + s2);
        let xt = 0.5 * (nu1 + nu2) + s * (c1 / c2).ln() / (nu2 - nu1);
        return Ok(finish(vec![xt], c1 * (1.0 - p1(xt)) + c2 * p2(xt)));
    }

    // log(c₁N₁(x)) - log(c₂N₂(x)) = a x² + b x + c.
    let a = -0.5 / s1 + 0.5 / s2;
    let b = nu1 / s1 - nu2 / s2;
    let c =
        -nu1 * nu1 / (2.0 * s1) + nu2 * nu2 / (2.0 * s2) + (c1 / c2).ln() - 0.5 * (s1 / s2).ln();
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Ok(trivial);
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (mut x1, mut x2) = (q / a, if q != 0.0 { c / q } else { q / a });
    if x1 > x2 {
        std::mem::swap(&mut x1, &mut x2);
    }
    let in1 = p1(x2) - p1(x1);
    let in2 = p2(x2) - p2(x1);
    // The narrower class wins between the roots.
    let error = if s1 < s2 {
        c1 * (1.0 - in1) + c2 * in2
    } else {
        c1 * in1 + c2 * (1.0 - in2)
    };
    Ok(finish(vec![x1, x2], error))
}

/// Class weights used by the Bayes rule when computing the theoretical rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ClassWeighting {
    /// Equal weights, so the rate averages the two per-class accuracies.
    #[default]
    Balanced,
    /// Weights equal to the class proportions.
    Proportional,
}

/// Theoretical two-class recovery at one affinity matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryPoint {
    pub alpha: f64,
    pub correct_rate: f64,
    /// Limiting class means, class order.
    pub nu: Option<[f64; 2]>,
    /// Limiting class variances, class order.
    pub sigma: Option<[f64; 2]>,
    pub rho: Option<f64>,
    pub chi: Option<f64>,
}

/// Theoretical correct-classification rate for two classes.
///
/// `n` sets the class sizes `n c_a`; without an informative spike the rate is
/// that of assigning every node to the heavier class.
pub fn theory_point(
    measure: &WeightMeasure,
    alpha: f64,
    affinity: &[Vec<f64>],
    c: &[f64],
    n: usize,
    weighting: ClassWeighting,
    edge: Option<&SupportEstimate>,
) -> Result<TheoryPoint> {
    if c.len() != 2 {
        return Err(Error::KMismatch(format!(
            "theoretical rates need 2 classes, got {}",
            c.len()
        )));
    }
    let edge = match edge {
        Some(e) => *e,
        None => support_edge(measure, alpha)?,
    };
    let weights = match weighting {
        ClassWeighting::Balanced => [0.5, 0.5],
        ClassWeighting::Proportional => [c[0], c[1]],
    };
    let report = predict_spikes_with_edge(measure, alpha, affinity, c, &edge, INFORMATIVE_TOL)?;
    let Some(spike) = report.informative().next() else {
        return Ok(TheoryPoint {
            alpha,
            correct_rate: weights[0].max(weights[1]),
            nu: None,
            sigma: None,
            rho: None,
            chi: None,
        });
    };
    let sizes: Vec<f64> = c.iter().map(|x| x * n as f64).collect();
    let nu = limiting_means(measure, alpha, spike, &sizes)?;
    let sigma = limiting_covariances(measure, alpha, spike, spike, true, &sizes)?;
    let rule = decision_rule(nu[0], nu[1], sigma[0], sigma[1], weights[0], weights[1])?;
    Ok(TheoryPoint {
        alpha,
        correct_rate: rule.correct_rate,
        nu: Some([nu[0], nu[1]]),
        sigma: Some([sigma[0], sigma[1]]),
        rho: Some(spike.rho),
        chi: Some(chi(measure, alpha, &spike.solution)?),
    })
}

/// [`theory_point`] over a sweep of affinity scales `M = Δ·pattern`.
pub fn theory_curve(
    measure: &WeightMeasure,
    alpha: f64,
    pattern: &[Vec<f64>],
    deltas: &[f64],
    c: &[f64],
    n: usize,
    weighting: ClassWeighting,
) -> Result<Vec<(f64, TheoryPoint)>> {
    let edge = support_edge(measure, alpha)?;
    deltas
        .iter()
        .map(|&d| {
            let m: Vec<Vec<f64>> = pattern
                .iter()
                .map(|r| r.iter().map(|x| x * d).collect())
                .collect();
            theory_point(measure, alpha, &m, c, n, weighting, Some(&edge)).map(|p| (d, p))
        })
        .collect()
}
