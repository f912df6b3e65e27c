use faer::Mat;
use serde::{Deserialize, Serialize};

use super::em::{em_fit, mixture_log_likelihood, EmConfig, EmInit};
use super::embedding::{
    isolated_eigenvectors, regularize, rows_of, IsolationConfig, SpectralEmbedding,
};
use super::kmeans::kmeans;
use super::overlap::overlap;
use crate::graph::{estimate_weights, Graph, WeightMeasure};
use crate::linalg::top_eigenpairs;
use crate::operators::{bethe_hessian, bh_r_c, build_l_alpha};
use crate::rmt::{
    alpha_opt, mbar_spectrum, orient, solve_fixed_point, support_edge, theta, AlphaGrid, AlphaOpt,
    Spike, SupportEstimate,
};
use crate::theory::{limiting_covariances, limiting_means};
use crate::{Error, Result};

/// How the normalization exponent is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AlphaMode {
    Fixed(f64),
    /// Minimize the detectability threshold of the estimated weight measure.
    Opt,
}

/// Operator whose eigenvectors are clustered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    LAlpha,
    BetheHessian,
}

/// Starting point of the mixture fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitMode {
    Random,
    /// Limiting means and covariances at the observed eigenvalues.
    ///
    /// `proportions` default to uniform. For `K > 2`, `vectors` must give one
    /// `K`-vector of the symmetrized effective affinity per isolated eigenvector.
    Theory {
        proportions: Option<Vec<f64>>,
        vectors: Option<Vec<Vec<f64>>>,
    },
    /// Parameters estimated from the graph's ground-truth labels.
    Oracle,
}

/// Final clustering step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Clusterer {
    Em,
    KMeans,
}

/// Settings for [`detect`].
#[derive(Debug, Clone, PartialEq)]
pub struct DetectConfig {
    pub k: usize,
    pub alpha: AlphaMode,
    pub method: Method,
    pub init: InitMode,
    pub clusterer: Clusterer,
    /// Multiply eigenvectors by `D^{α-1}` before clustering.
    pub regularize: bool,
    pub seed: u64,
    pub isolation: IsolationConfig,
    pub em: EmConfig,
    pub alpha_grid: AlphaGrid,
}

impl DetectConfig {
    pub fn new(k: usize) -> Self {
        DetectConfig {
            k,
            alpha: AlphaMode::Opt,
            method: Method::LAlpha,
            init: InitMode::Random,
            clusterer: Clusterer::Em,
            regularize: true,
            seed: 0,
            isolation: IsolationConfig::default(),
            em: EmConfig::default(),
            alpha_grid: AlphaGrid::default(),
        }
    }
}

/// What the pipeline saw on the way to the labels.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub alpha_opt: Option<AlphaOpt>,
    pub edge: Option<SupportEstimate>,
    /// Eigenvalues whose eigenvectors were clustered.
    pub eigenvalues: Vec<f64>,
    pub thetas: Vec<f64>,
    pub log_likelihood: Option<f64>,
    /// Bethe Hessian parameter.
    pub r_c: Option<f64>,
}

/// Labels and diagnostics of one detection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub labels: Vec<usize>,
    pub method: Method,
    pub alpha: Option<f64>,
    /// Against the graph's labels, when present.
    pub overlap: Option<f64>,
    pub class_counts: Vec<usize>,
    /// No isolated eigenvector: every node was put in one class.
    pub below_transition: bool,
    pub diagnostics: Diagnostics,
    pub embedding: Option<SpectralEmbedding>,
}

impl ClusterResult {
    pub fn dim(&self) -> usize {
        self.diagnostics.eigenvalues.len()
    }
}

fn counts(labels: &[usize], k: usize) -> Vec<usize> {
    let mut c = vec![0; k];
    for &l in labels {
        c[l] += 1;
    }
    c
}

/// Runs the spectral pipeline on a graph.
///
/// With no eigenvalue outside the bulk, all nodes get label 0 and
/// `below_transition` is set.
pub fn detect(graph: &Graph, cfg: &DetectConfig) -> Result<ClusterResult> {
    if cfg.k < 2 {
        return Err(Error::InvalidParams(format!("need K >= 2, got {}", cfg.k)));
    }
    if let Some(truth) = graph.labels() {
        if let Some(&l) = truth.iter().find(|&&l| l >= cfg.k) {
            return Err(Error::KMismatch(format!(
                "graph label {l} with K = {}",
                cfg.k
            )));
        }
    }
    match cfg.method {
        Method::LAlpha => detect_l_alpha(graph, cfg),
        Method::BetheHessian => detect_bethe(graph, cfg),
    }
}

fn finish(
    graph: &Graph,
    cfg: &DetectConfig,
    labels: Vec<usize>,
    below_transition: bool,
    alpha: Option<f64>,
    diagnostics: Diagnostics,
    embedding: Option<SpectralEmbedding>,
) -> Result<ClusterResult> {
    let overlap = graph
        .labels()
        .map(|t| overlap(t, &labels, cfg.k))
        .transpose()?;
    Ok(ClusterResult {
        class_counts: counts(&labels, cfg.k),
        labels,
        method: cfg.method,
        alpha,
        overlap,
        below_transition,
        diagnostics,
        embedding,
    })
}

fn fallback(
    graph: &Graph,
    cfg: &DetectConfig,
    alpha: Option<f64>,
    diagnostics: Diagnostics,
) -> Result<ClusterResult> {
    log::warn!("no isolated eigenvalue; assigning every node to one class");
    finish(
        graph,
        cfg,
        vec![0; graph.n()],
        true,
        alpha,
        diagnostics,
        None,
    )
}

fn detect_l_alpha(graph: &Graph, cfg: &DetectConfig) -> Result<ClusterResult> {
    let (_, measure) = estimate_weights(graph)?;
    let mut diag = Diagnostics::default();
    let alpha = match cfg.alpha {
        AlphaMode::Fixed(a) => a,
        AlphaMode::Opt => {
            let opt = alpha_opt(&measure, &cfg.alpha_grid)?;
            let a = opt.alpha;
            diag.alpha_opt = Some(opt);
            a
        }
    };
    let edge = support_edge(&measure, alpha)?;
    diag.edge = Some(edge);
    let op = build_l_alpha(graph, alpha)?;
    let mut emb = match isolated_eigenvectors(&op, &edge, &measure, cfg.k, &cfg.isolation) {
        Ok(e) => e,
        Err(Error::NoIsolatedEigenvalue) => return fallback(graph, cfg, Some(alpha), diag),
        Err(e) => return Err(e),
    };
    if cfg.regularize {
        regularize(&mut emb, graph.degrees(), None);
    }
    diag.eigenvalues = emb.eigenvalues.clone();
    diag.thetas = emb.thetas.clone();
    let points = emb.rows();
    let init = match &cfg.init {
        InitMode::Random => EmInit::Random,
        InitMode::Oracle => oracle_init(graph)?,
        InitMode::Theory {
            proportions,
            vectors,
        } => theory_init(
            &measure,
            &emb,
            &points,
            graph.n(),
            cfg,
            proportions.as_deref(),
            vectors.as_deref(),
        )?,
    };
    let (labels, ll) = cluster_points(&points, cfg, &init)?;
    diag.log_likelihood = ll;
    finish(graph, cfg, labels, false, Some(alpha), diag, Some(emb))
}

fn oracle_init(graph: &Graph) -> Result<EmInit> {
    graph
        .labels()
        .map(|l| EmInit::Oracle(l.to_vec()))
        .ok_or_else(|| {
            Error::InvalidParams("oracle initialization needs ground-truth labels".into())
        })
}

fn cluster_points(
    points: &[Vec<f64>],
    cfg: &DetectConfig,
    init: &EmInit,
) -> Result<(Vec<usize>, Option<f64>)> {
    match cfg.clusterer {
        Clusterer::KMeans => Ok((
            kmeans(points, cfg.k, cfg.em.restarts, cfg.seed)?.labels,
            None,
        )),
        Clusterer::Em => {
            let m = em_fit(points, cfg.k, init, &cfg.em, cfg.seed)?;
            Ok((m.labels, Some(m.log_likelihood)))
        }
    }
}

/// Mixture parameters from the limiting statistics, evaluated at the
/// observed eigenvalues and the estimated weight measure.
///
/// Eigenvector signs are not identifiable from the graph alone, so every sign
/// pattern is tried and the one with the largest initial likelihood kept.
fn theory_init(
    measure: &WeightMeasure,
    emb: &SpectralEmbedding,
    points: &[Vec<f64>],
    n: usize,
    cfg: &DetectConfig,
    proportions: Option<&[f64]>,
    vectors: Option<&[Vec<f64>]>,
) -> Result<EmInit> {
    let k = cfg.k;
    let c: Vec<f64> = proportions
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| vec![1.0 / k as f64; k]);
    if c.len() != k {
        return Err(Error::KMismatch(format!(
            "{} proportions for K = {k}",
            c.len()
        )));
    }
    let dim = emb.dim();
    let vecs: Vec<Vec<f64>> = match vectors {
        Some(v) => v.to_vec(),
        None if k == 2 => {
            let m = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
            mbar_spectrum(&m, &c)?.vectors
        }
        None => {
            return Err(Error::InvalidParams(format!(
                "theory initialization with K = {k} needs the effective-affinity eigenvectors"
            )))
        }
    };
    if vecs.len() < dim || vecs.iter().any(|v| v.len() != k) {
        return Err(Error::KMismatch(format!(
            "need {dim} vectors of length {k}"
        )));
    }
    let sizes: Vec<f64> = c.iter().map(|x| x * n as f64).collect();
    let spikes = (0..dim)
        .map(|i| {
            let rho = emb.eigenvalues[i];
            let sol = solve_fixed_point(measure, emb.alpha, rho)?;
            let th = theta(measure, emb.alpha, &sol)?;
            let mut v = vecs[i].clone();
            orient(&mut v);
            Ok(Spike {
                lambda: f64::NAN,
                rho,
                theta: th,
                informative: true,
                vector: v,
                solution: sol,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let per_spike = spikes
        .iter()
        .map(|s| limiting_means(measure, emb.alpha, s, &sizes))
        .collect::<Result<Vec<_>>>()?;
    let mut covs = vec![vec![vec![0.0; dim]; dim]; k];
    for i in 0..dim {
        for j in 0..dim {
            let cov =
                limiting_covariances(measure, emb.alpha, &spikes[i], &spikes[j], i == j, &sizes)?;
            for a in 0..k {
                covs[a][i][j] = cov[a];
            }
        }
    }
    let mut best: Option<(f64, EmInit)> = None;
    for pattern in 0..(1u32 << dim) {
        let sign = |i: usize| if pattern >> i & 1 == 1 { -1.0 } else { 1.0 };
        let means: Vec<Vec<f64>> = (0..k)
            .map(|a| (0..dim).map(|i| sign(i) * per_spike[i][a]).collect())
            .collect();
        let covariances: Vec<Vec<Vec<f64>>> = covs
            .iter()
            .map(|m| {
                (0..dim)
                    .map(|i| (0..dim).map(|j| sign(i) * sign(j) * m[i][j]).collect())
                    .collect()
            })
            .collect();
        let ll = mixture_log_likelihood(points, &c, &means, &covariances, cfg.em.floor)?;
        if best.as_ref().is_none_or(|b| ll > b.0) {
            best = Some((
                ll,
                EmInit::Theory {
                    means,
                    covariances,
                    weights: c.clone(),
                },
            ));
        }
    }
    Ok(best.expect("at least one sign pattern").1)
}

/// Eigenvectors of the negative eigenvalues of `H(r_c)` and `H(-r_c)`.
///
/// The most negative one tracks the degrees alone and is dropped; the next
/// `K - 1` are clustered.
fn detect_bethe(graph: &Graph, cfg: &DetectConfig) -> Result<ClusterResult> {
    let r = bh_r_c(graph)?;
    let mut diag = Diagnostics {
        r_c: Some(r),
        ..Diagnostics::default()
    };
    let mut found: Vec<(f64, Vec<f64>)> = Vec::new();
    for rr in [r, -r] {
        let h = bethe_hessian(graph, rr)?;
        let bound = graph
            .degrees()
            .iter()
            .map(|&d| (rr * rr - 1.0 + d as f64).abs() + rr.abs() * d as f64)
            .fold(0.0, f64::max);
        let shifted = Mat::from_fn(graph.n(), graph.n(), |i, j| {
            let diag = if i == j { bound } else { 0.0 };
            diag - h.matrix()[(i, j)]
        });
        for p in top_eigenpairs(&shifted, cfg.k + 2)? {
            let value = bound - p.value;
            if value < 0.0 {
                found.push((value, p.vector));
            }
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    if !found.is_empty() {
        found.remove(0);
    }
    found.truncate(cfg.k - 1);
    if found.is_empty() {
        return fallback(graph, cfg, None, diag);
    }
    let cols: Vec<Vec<f64>> = found
        .iter()
        .map(|(_, v)| {
            let mut v = v.clone();
            orient(&mut v);
            v
        })
        .collect();
    diag.eigenvalues = found.iter().map(|p| p.0).collect();
    let points = rows_of(&cols);
    let init = match cfg.init {
        InitMode::Oracle => oracle_init(graph)?,
        _ => EmInit::Random,
    };
    let (labels, ll) = cluster_points(&points, cfg, &init)?;
    diag.log_likelihood = ll;
    finish(graph, cfg, labels, false, None, diag, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{sample_dcsbm, AffinityPattern, DcsbmParams, WeightLaw};

    fn graph(n: usize, delta: f64, law: WeightLaw, seed: u64) -> Graph {
        let p = DcsbmParams {
            n,
            proportions: vec![0.5, 0.5],
            affinity: AffinityPattern::Identity.matrix(2, delta),
            weight_law: law,
        };
        sample_dcsbm(&p, seed).unwrap().0
    }

    #[test]
    fn strong_signal_is_recovered() {
        let g = graph(
            600,
            25.0,
            WeightLaw::Discrete {
                atoms: vec![(0.3, 0.5), (0.7, 0.5)],
            },
            1,
        );
        let r = detect(&g, &DetectConfig::new(2)).unwrap();
        assert!(!r.below_transition);
        assert_eq!(r.dim(), 1);
        assert!(r.overlap.unwrap() > 0.9, "{:?}", r.overlap);
    }

    #[test]
    fn null_model_falls_back() {
        let g = graph(500, 0.0, WeightLaw::point(0.5), 2);
        let mut cfg = DetectConfig::new(2);
        cfg.alpha = AlphaMode::Fixed(0.5);
        let r = detect(&g, &cfg).unwrap();
        assert!(r.below_transition);
        assert!(r.labels.iter().all(|&l| l == 0));
        assert_eq!(r.class_counts, vec![g.n(), 0]);
    }

    #[test]
    fn deterministic_given_seed() {
        let g = graph(400, 8.0, WeightLaw::uniform(0.2, 0.8), 3);
        let mut cfg = DetectConfig::new(2);
        cfg.alpha = AlphaMode::Fixed(0.25);
        assert_eq!(detect(&g, &cfg).unwrap(), detect(&g, &cfg).unwrap());
    }

    #[test]
    fn theory_and_oracle_inits_run() {
        let g = graph(
            1000,
            12.0,
            WeightLaw::Discrete {
                atoms: vec![(0.2, 0.75), (0.8, 0.25)],
            },
            4,
        );
        let mut cfg = DetectConfig::new(2);
        cfg.alpha = AlphaMode::Fixed(0.5);
        cfg.init = InitMode::Theory {
            proportions: None,
            vectors: None,
        };
        let t = detect(&g, &cfg).unwrap();
        cfg.init = InitMode::Oracle;
        let o = detect(&g, &cfg).unwrap();
        assert!(t.overlap.unwrap() > 0.5 && o.overlap.unwrap() > 0.5);
    }

    #[test]
    fn theory_init_needs_vectors_beyond_two_classes() {
        let p = DcsbmParams {
            n: 450,
            proportions: vec![1.0 / 3.0; 3],
            affinity: AffinityPattern::Identity.matrix(3, 40.0),
            weight_law: WeightLaw::point(0.5),
        };
        let g = sample_dcsbm(&p, 5).unwrap().0;
        let mut cfg = DetectConfig::new(3);
        cfg.alpha = AlphaMode::Fixed(0.5);
        cfg.init = InitMode::Theory {
            proportions: None,
            vectors: None,
        };
        assert!(matches!(detect(&g, &cfg), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn bethe_hessian_runs() {
        let g = graph(500, 30.0, WeightLaw::point(0.3), 6);
        let mut cfg = DetectConfig::new(2);
        cfg.method = Method::BetheHessian;
        let r = detect(&g, &cfg).unwrap();
        assert!(r.diagnostics.r_c.unwrap() > 1.0);
        assert!(r.overlap.is_some());
    }

    #[test]
    fn kmeans_alternative() {
        let g = graph(600, 25.0, WeightLaw::point(0.5), 7);
        let mut cfg = DetectConfig::new(2);
        cfg.alpha = AlphaMode::Fixed(0.5);
        cfg.clusterer = Clusterer::KMeans;
        let r = detect(&g, &cfg).unwrap();
        assert!(r.overlap.unwrap() > 0.8);
        assert!(r.diagnostics.log_likelihood.is_none());
    }
}
