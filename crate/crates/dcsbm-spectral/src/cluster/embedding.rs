use serde::{Deserialize, Serialize};

use crate::graph::WeightMeasure;
use crate::operators::SymmetricOperator;
use crate::rmt::{orient, solve_fixed_point, theta, SupportEstimate, INFORMATIVE_TOL};
use crate::{Error, Result};

/// Default relative margin above the bulk edge for an eigenvalue to count as isolated.
pub const ISOLATION_MARGIN: f64 = 0.02;

/// Isolated eigenvectors and their degree-corrected versions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEmbedding {
    pub alpha: f64,
    /// Selected isolated eigenvalues, decreasing magnitude.
    pub eigenvalues: Vec<f64>,
    /// `θ` at each selected eigenvalue.
    pub thetas: Vec<f64>,
    /// Unit eigenvectors.
    pub raw_vectors: Vec<Vec<f64>>,
    /// `D^{α-1}u / ‖D^{α-1}u‖`; empty until [`regularize`] runs.
    pub regularized: Vec<Vec<f64>>,
}

impl SpectralEmbedding {
    /// Number of selected eigenvectors.
    pub fn dim(&self) -> usize {
        self.raw_vectors.len()
    }

    /// Node feature rows built from the regularized vectors, or the raw ones
    /// if regularization has not run.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        let cols = if self.regularized.is_empty() {
            &self.raw_vectors
        } else {
            &self.regularized
        };
        rows_of(cols)
    }
}

pub(crate) fn rows_of(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = cols.first().map_or(0, |c| c.len());
    (0..n)
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect()
}

/// Selection settings for [`isolated_eigenvectors`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsolationConfig {
    /// Eigenvalues must exceed `S(1 + kappa)` in magnitude.
    pub kappa: f64,
    /// Eigenvalues with `|1 + θ| <` this are spurious.
    pub informative_tol: f64,
    /// Extra eigenpairs computed beyond `K - 1` to look past spurious ones.
    pub extra: usize,
}

impl Default for IsolationConfig {
    fn default() -> Self {
        IsolationConfig {
            kappa: ISOLATION_MARGIN,
            informative_tol: INFORMATIVE_TOL,
            extra: 5,
        }
    }
}

/// Eigenvectors of eigenvalues outside the bulk that pass the `θ` test,
/// at most `k - 1` of them.
///
/// Each vector is oriented so its largest-magnitude entry is positive.
pub fn isolated_eigenvectors(
    op: &SymmetricOperator,
    edge: &SupportEstimate,
    measure: &WeightMeasure,
    k: usize,
    cfg: &IsolationConfig,
) -> Result<SpectralEmbedding> {
    if k < 2 {
        return Err(Error::InvalidParams(format!("need K >= 2, got {k}")));
    }
    let alpha = edge.alpha;
    let cut = edge.s_plus * (1.0 + cfg.kappa);
    let mut emb = SpectralEmbedding {
        alpha,
        eigenvalues: Vec::new(),
        thetas: Vec::new(),
        raw_vectors: Vec::new(),
        regularized: Vec::new(),
    };
    for pair in op.top_eigenpairs(k - 1 + cfg.extra)? {
        if pair.value.abs() <= cut || emb.dim() == k - 1 {
            break;
        }
        let sol = solve_fixed_point(measure, alpha, pair.value)?;
        let th = match theta(measure, alpha, &sol) {
            Ok(t) => t,
            Err(e) => {
                log::warn!(
                    "keeping eigenvalue {} without a spurious check: {e}",
                    pair.value
                );
                f64::NAN
            }
        };
        if (1.0 + th).abs() < cfg.informative_tol {
            log::info!(
                "dropping spurious eigenvalue {} (1 + theta = {})",
                pair.value,
                1.0 + th
            );
            continue;
        }
        let mut v = pair.vector;
        orient(&mut v);
        emb.eigenvalues.push(pair.value);
        emb.thetas.push(th);
        emb.raw_vectors.push(v);
    }
    if emb.dim() == 0 {
        return Err(Error::NoIsolatedEigenvalue);
    }
    Ok(emb)
}

/// Orients `v` so that its largest-magnitude class mean is positive.
pub fn orient_by_classes(v: &mut [f64], labels: &[usize]) {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (x, &l) in v.iter().zip(labels) {
        sums[l] += x;
        counts[l] += 1;
    }
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    orient_by(v, &means);
}

fn orient_by(v: &mut [f64], reference: &[f64]) {
    let mut best = 0;
    for i in 1..reference.len() {
        if reference[i].abs() > reference[best].abs() {
            best = i;
        }
    }
    if reference.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Fills `regularized` with `D^{α-1}u` normalized to unit length.
///
/// With labels, each regularized vector is reoriented by its class means.
pub fn regularize(emb: &mut SpectralEmbedding, degrees: &[usize], labels: Option<&[usize]>) {
    let scale: Vec<f64> = degrees
        .iter()
        .map(|&d| (d as f64).powf(emb.alpha - 1.0))
        .collect();
    emb.regularized = emb
        .raw_vectors
        .iter()
        .map(|u| {
            let mut v: Vec<f64> = u.iter().zip(&scale).map(|(x, s)| x * s).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            match labels {
                Some(l) => orient_by_classes(&mut v, l),
                None => orient(&mut v),
            }
            v
        })
        .collect();
}

/// Per-class means and covariances of embedding rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    /// `means[a][i]`: mean of coordinate `i` over class `a`.
    pub means: Vec<Vec<f64>>,
    /// `covariances[a][i][j]`, normalized by the class size.
    pub covariances: Vec<Vec<Vec<f64>>>,
    pub counts: Vec<usize>,
}

/// Empirical class means and covariances of the rows of `points`.
pub fn empirical_class_stats(
    points: &[Vec<f64>],
    labels: &[usize],
    k: usize,
) -> Result<ClassStats> {
    if points.len() != labels.len() {
        return Err(Error::LabelMismatch(format!(
            "{} points, {} labels",
            points.len(),
            labels.len()
        )));
    }
    let dim = points.first().map_or(0, |p| p.len());
    let mut counts = vec![0usize; k];
    let mut means = vec![vec![0.0; dim]; k];
    for (p, &l) in points.iter().zip(labels) {
        if l >= k {
            return Err(Error::KMismatch(format!("label {l} with K = {k}")));
        }
        counts[l] += 1;
        for i in 0..dim {
            means[l][i] += p[i];
        }
    }
    if let Some(a) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass(a));
    }
    for a in 0..k {
        means[a].iter_mut().for_each(|x| *x /= counts[a] as f64);
    }
    let mut covariances = vec![vec![vec![0.0; dim]; dim]; k];
    for (p, &l) in points.iter().zip(labels) {
        for i in 0..dim {
            for j in 0..dim {
                covariances[l][i][j] += (p[i] - means[l][i]) * (p[j] - means[l][j]);
            }
        }
    }
    for a in 0..k {
        covariances[a]
            .iter_mut()
            .flatten()
            .for_each(|x| *x /= counts[a] as f64);
    }
    Ok(ClassStats {
        means,
        covariances,
        counts,
    })
}
