use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Starting point for [`em_fit`].
#[derive(Debug, Clone, PartialEq)]
pub enum EmInit {
    /// k-means++ seeding, best of several restarts.
    Random,
    /// Given component parameters.
    Theory {
        means: Vec<Vec<f64>>,
        covariances: Vec<Vec<Vec<f64>>>,
        weights: Vec<f64>,
    },
    /// Parameters estimated from known labels.
    Oracle(Vec<usize>),
}

/// EM iteration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Relative change of the log-likelihood declaring convergence.
    pub tol: f64,
    /// Random restarts for [`EmInit::Random`].
    pub restarts: usize,
    /// Diagonal loading as a fraction of `tr(Σ)/ℓ`.
    pub floor: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iter: 1000,
            tol: 1e-9,
            restarts: 10,
            floor: 1e-10,
        }
    }
}

/// Fitted Gaussian mixture with full covariances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
    /// `responsibilities[i][a]`.
    pub responsibilities: Vec<Vec<f64>>,
    /// Most responsible component per point.
    pub labels: Vec<usize>,
    /// Final mean log-likelihood per point.
    pub log_likelihood: f64,
    /// Mean log-likelihood after each E-step.
    pub history: Vec<f64>,
    pub converged: bool,
}

struct Component {
    log_weight: f64,
    mean: Vec<f64>,
    /// Lower Cholesky factor of the covariance, row-major.
    chol: Vec<Vec<f64>>,
    log_det: f64,
}

fn data_scale(points: &[Vec<f64>]) -> f64 {
    let dim = points[0].len();
    let n = points.len() as f64;
    let mut total = 0.0;
    for i in 0..dim {
        let mean = points.iter().map(|p| p[i]).sum::<f64>() / n;
        total += points.iter().map(|p| (p[i] - mean).powi(2)).sum::<f64>() / n;
    }
    (total / dim as f64).max(f64::MIN_POSITIVE)
}

fn component(
    weight: f64,
    mean: &[f64],
    cov: &[Vec<f64>],
    floor: f64,
    scale: f64,
) -> Result<Component> {
    let dim = mean.len();
    let trace: f64 = (0..dim).map(|i| cov[i][i]).sum();
    let load = floor * (trace / dim as f64) + 1e-14 * scale;
    let m = Mat::from_fn(dim, dim, |i, j| cov[i][j] + if i == j { load } else { 0.0 });
    let llt = m
        .llt(Side::Lower)
        .map_err(|e| Error::EmDegenerate(format!("covariance not positive definite: {e:?}")))?;
    let l = llt.L();
    let chol: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| if j <= i { l[(i, j)] } else { 0.0 })
                .collect()
        })
        .collect();
    let log_det = 2.0 * (0..dim).map(|i| chol[i][i].ln()).sum::<f64>();
    Ok(Component {
        log_weight: weight.ln(),
        mean: mean.to_vec(),
        chol,
        log_det,
    })
}

impl Component {
    fn log_density(&self, x: &[f64]) -> f64 {
        let dim = x.len();
        // Forward substitution L y = x - μ.
        let mut y = vec![0.0; dim];
        let mut quad = 0.0;
        for i in 0..dim {
            let mut s = x[i] - self.mean[i];
            for j in 0..i {
                s -= self.chol[i][j] * y[j];
            }
            y[i] = s / self.chol[i][i];
            quad += y[i] * y[i];
        }
        self.log_weight
            - 0.5 * (quad + self.log_det + dim as f64 * (2.0 * std::f64::consts::PI).ln())
    }
}

/// Responsibilities and mean log-likelihood.
fn e_step(points: &[Vec<f64>], comps: &[Component], resp: &mut [Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (x, r) in points.iter().zip(resp.iter_mut()) {
        for (a, c) in comps.iter().enumerate() {
            r[a] = c.log_density(x);
        }
        let max = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = r.iter().map(|v| (v - max).exp()).sum();
        let lse = max + sum.ln();
        r.iter_mut().for_each(|v| *v = (*v - lse).exp());
        total += lse;
    }
    total / points.len() as f64
}

type Params = (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>);

fn m_step(points: &[Vec<f64>], resp: &[Vec<f64>], k: usize) -> Params {
    let dim = points[0].len();
    let n = points.len() as f64;
    let mut mass = vec![0.0; k];
    let mut means = vec![vec![0.0; dim]; k];
    for (x, r) in points.iter().zip(resp) {
        for a in 0..k {
            mass[a] += r[a];
            for i in 0..dim {
                means[a][i] += r[a] * x[i];
            }
        }
    }
    for a in 0..k {
        if mass[a] > 0.0 {
            means[a].iter_mut().for_each(|v| *v /= mass[a]);
        }
    }
    let mut covs = vec![vec![vec![0.0; dim]; dim]; k];
    for (x, r) in points.iter().zip(resp) {
        for a in 0..k {
            for i in 0..dim {
                let di = x[i] - means[a][i];
                for j in 0..=i {
                    covs[a][i][j] += r[a] * di * (x[j] - means[a][j]);
                }
            }
        }
    }
    for a in 0..k {
        for i in 0..dim {
            for j in 0..=i {
                let v = if mass[a] > 0.0 {
                    covs[a][i][j] / mass[a]
                } else {
                    0.0
                };
                covs[a][i][j] = v;
                covs[a][j][i] = v;
            }
        }
    }
    (mass.iter().map(|m| m / n).collect(), means, covs)
}

fn hard_resp(labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    labels
        .iter()
        .map(|&l| (0..k).map(|a| if a == l { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn argmax(r: &[f64]) -> usize {
    let mut best = 0;
    for a in 1..r.len() {
        if r[a] > r[best] {
            best = a;
        }
    }
    best
}

fn run(
    points: &[Vec<f64>],
    k: usize,
    start: Params,
    cfg: &EmConfig,
    scale: f64,
) -> Result<MixtureModel> {
    let n = points.len();
    let min_weight = 1.0 / (10.0 * n as f64);
    let (mut weights, mut means, mut covs) = start;
    let mut resp = vec![vec![0.0; k]; n];
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        if let Some(a) = weights.iter().position(|&w| w < min_weight) {
            return Err(Error::EmDegenerate(format!(
                "component {a} weight {:e}",
                weights[a]
            )));
        }
        let comps = (0..k)
            .map(|a| component(weights[a], &means[a], &covs[a], cfg.floor, scale))
            .collect::<Result<Vec<_>>>()?;
        let ll = e_step(points, &comps, &mut resp);
        if !ll.is_finite() {
            return Err(Error::EmDegenerate("non-finite likelihood".into()));
        }
        let done = history
            .last()
            .is_some_and(|&prev: &f64| (ll - prev).abs() <= cfg.tol * ll.abs().max(1e-300));
        history.push(ll);
        if done {
            converged = true;
            break;
        }
        (weights, means, covs) = m_step(points, &resp, k);
    }
    let labels = resp.iter().map(|r| argmax(r)).collect();
    Ok(MixtureModel {
        weights,
        means,
        covariances: covs,
        responsibilities: resp,
        labels,
        log_likelihood: *history.last().unwrap_or(&f64::NEG_INFINITY),
        history,
        converged,
    })
}

/// k-means++ seeding: `k` starting centres drawn by squared-distance sampling.
pub(crate) fn kmeanspp<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let mut centres = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| dist(p, &centres[0])).collect();
    while centres.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut t = rng.random::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if t < *d {
                    pick = i;
                    break;
                }
                t -= d;
            }
            pick
        } else {
            rng.random_range(0..points.len())
        };
        centres.push(points[idx].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist(p, &centres[centres.len() - 1]));
        }
    }
    centres
}

pub(crate) fn nearest(p: &[f64], centres: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (a, c) in centres.iter().enumerate() {
        let d: f64 = p.iter().zip(c).map(|(x, y)| (x - y).powi(2)).sum();
        if d < best_d {
            best_d = d;
            best = a;
        }
    }
    best
}

fn validate(points: &[Vec<f64>], k: usize) -> Result<usize> {
    let dim = points.first().map_or(0, |p| p.len());
    if dim == 0 {
        return Err(Error::InvalidParams("no features to cluster".into()));
    }
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidParams("ragged feature rows".into()));
    }
    if k == 0 || k > points.len() {
        return Err(Error::InvalidParams(format!(
            "cannot fit {k} components to {} points",
            points.len()
        )));
    }
    Ok(dim)
}

/// Mean log-likelihood per point under a mixture, with the same covariance
/// loading as [`em_fit`].
pub fn mixture_log_likelihood(
    points: &[Vec<f64>],
    weights: &[f64],
    means: &[Vec<f64>],
    covariances: &[Vec<Vec<f64>>],
    floor: f64,
) -> Result<f64> {
    let k = weights.len();
    validate(points, k)?;
    if means.len() != k || covariances.len() != k {
        return Err(Error::KMismatch(format!(
            "{k} weights, {} means, {} covariances",
            means.len(),
            covariances.len()
        )));
    }
    let scale = data_scale(points);
    let comps = (0..k)
        .map(|a| component(weights[a], &means[a], &covariances[a], floor, scale))
        .collect::<Result<Vec<_>>>()?;
    let mut resp = vec![vec![0.0; k]; points.len()];
    Ok(e_step(points, &comps, &mut resp))
}

/// Full-covariance Gaussian mixture EM on the rows of `points`.
pub fn em_fit(
    points: &[Vec<f64>],
    k: usize,
    init: &EmInit,
    cfg: &EmConfig,
    seed: u64,
) -> Result<MixtureModel> {
    let dim = validate(points, k)?;
    let scale = data_scale(points);
    match init {
        EmInit::Oracle(labels) => {
            if labels.len() != points.len() {
                return Err(Error::LabelMismatch(format!(
                    "{} labels for {} points",
                    labels.len(),
                    points.len()
                )));
            }
            if let Some(&l) = labels.iter().find(|&&l| l >= k) {
                return Err(Error::KMismatch(format!("label {l} with K = {k}")));
            }
            run(
                points,
                k,
                m_step(points, &hard_resp(labels, k), k),
                cfg,
                scale,
            )
        }
        EmInit::Theory {
            means,
            covariances,
            weights,
        } => {
            let shapes_ok = means.len() == k
                && covariances.len() == k
                && weights.len() == k
                && means.iter().all(|m| m.len() == dim)
                && covariances
                    .iter()
                    .all(|c| c.len() == dim && c.iter().all(|r| r.len() == dim));
            if !shapes_ok {
                return Err(Error::KMismatch(format!(
                    "theory init does not match K = {k}, dim = {dim}"
                )));
            }
            run(
                points,
                k,
                (weights.clone(), means.clone(), covariances.clone()),
                cfg,
                scale,
            )
        }
        EmInit::Random => {
            let mut best: Option<MixtureModel> = None;
            let mut last_err = None;
            for r in 0..cfg.restarts.max(1) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(r as u64);
                let centres = kmeanspp(points, k, &mut rng);
                let labels: Vec<usize> = points.iter().map(|p| nearest(p, &centres)).collect();
                let start = m_step(points, &hard_resp(&labels, k), k);
                match run(points, k, start, cfg, scale) {
                    Ok(m) => {
                        if best
                            .as_ref()
                            .is_none_or(|b| m.log_likelihood > b.log_likelihood)
                        {
                            best = Some(m);
                        }
                    }
                    Err(e) => {
                        log::debug!("EM restart {r} failed: {e}");
                        last_err = Some(e);
                    }
                }
            }
            best.ok_or_else(|| {
                last_err.unwrap_or_else(|| Error::EmDegenerate("no restart succeeded".into()))
            })
        }
    }
}
