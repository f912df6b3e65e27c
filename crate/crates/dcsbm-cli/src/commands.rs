//! Single-run subcommands.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use dcsbm_spectral::cluster::{
    detect as run_detect, AlphaMode, Clusterer, DetectConfig, InitMode, IsolationConfig, Method,
};
use dcsbm_spectral::graph::{
    estimate_weights, load_edge_list, sample_dcsbm, save_edge_list, save_labels, AffinityPattern,
    DcsbmParams, Graph, WeightLaw, WeightMeasure,
};
use dcsbm_spectral::operators::build_l_alpha;
use dcsbm_spectral::presets::preset;
use dcsbm_spectral::rmt::{
    alpha_opt as find_alpha_opt, mbar_spectrum, phase_ratio, predict_spikes_with_edge,
    solve_fixed_point, support_edge, theta, AlphaGrid, INFORMATIVE_TOL,
};
use dcsbm_spectral::theory::{theory_curve, ClassWeighting};

use crate::output::{csv_writer, opt};
use crate::{
    parse, ClustererArg, InitArg, MethodArg, ModelArgs, WeightingArg, EXIT_BELOW_TRANSITION,
};
use crate::{AlphaOptArgs, DetectArgs, GenerateArgs, PhaseArgs, SpectrumArgs, TheoryArgs};

/// Model parameters after merging a preset with explicit flags.
pub struct Model {
    pub n: Option<usize>,
    pub proportions: Vec<f64>,
    pub pattern: AffinityPattern,
    pub scale: f64,
    pub law: WeightLaw,
}

impl Model {
    pub fn k(&self) -> usize {
        self.proportions.len()
    }

    pub fn affinity(&self, scale: f64) -> Vec<Vec<f64>> {
        self.pattern.matrix(self.k(), scale)
    }

    pub fn params(&self) -> Result<DcsbmParams> {
        let n = self
            .n
            .ok_or_else(|| anyhow!("--n (or --preset) is required"))?;
        let p = DcsbmParams {
            n,
            proportions: self.proportions.clone(),
            affinity: self.affinity(self.scale),
            weight_law: self.law.clone(),
        };
        p.validate()?;
        Ok(p)
    }
}

/// Resolves [`ModelArgs`], falling back to the preset for anything not given.
pub fn resolve_model(args: &ModelArgs) -> Result<Model> {
    let base = args.preset.as_deref().map(preset).transpose()?;
    let affinity = args.m.as_deref().map(parse::affinity_pattern).transpose()?;
    let k = args
        .k
        .or_else(|| {
            args.c
                .as_deref()
                .filter(|c| c.trim() != "uniform")
                .map(|c| c.split(',').count())
        })
        .or(match &affinity {
            Some((AffinityPattern::Explicit { matrix }, _)) => Some(matrix.len()),
            _ => None,
        })
        .or_else(|| base.as_ref().map(|p| p.k()))
        .ok_or_else(|| anyhow!("cannot infer the number of classes; pass --k"))?;
    let proportions = match (&args.c, &base) {
        (Some(c), _) => parse::proportions(c, Some(k))?,
        (None, Some(p)) if p.k() == k => p.proportions.clone(),
        _ => vec![1.0 / k as f64; k],
    };
    let (pattern, scale) = match (affinity, &base) {
        (Some(a), _) => a,
        (None, Some(p)) => (p.pattern.clone(), p.delta),
        (None, None) => bail!("--m (or --preset) is required"),
    };
    let law = match (&args.mu, &base) {
        (Some(mu), _) => parse::weight_law(mu)?,
        (None, Some(p)) => p.params().weight_law,
        (None, None) => bail!("--mu (or --preset) is required"),
    };
    Ok(Model {
        n: args.n.or(base.as_ref().map(|p| p.n)),
        proportions,
        pattern,
        scale,
        law,
    })
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Labels as written to disk: `1..=K`.
fn one_based(labels: &[usize]) -> Vec<usize> {
    labels.iter().map(|l| l + 1).collect()
}

pub fn generate(args: GenerateArgs) -> Result<u8> {
    let params = resolve_model(&args.model)?.params()?;
    let (graph, latent) = sample_dcsbm(&params, args.seed)?;
    let edges = with_suffix(&args.out, "edges");
    let labels = with_suffix(&args.out, "labels");
    let json = with_suffix(&args.out, "json");
    save_edge_list(&graph, &edges).with_context(|| format!("writing {}", edges.display()))?;
    let truth = graph
        .labels()
        .ok_or_else(|| anyhow!("sampled graph has no labels"))?;
    save_labels(graph.names(), &one_based(truth), &labels)
        .with_context(|| format!("writing {}", labels.display()))?;
    latent
        .save_json(&json)
        .with_context(|| format!("writing {}", json.display()))?;
    log::info!("{} nodes, {} edges", graph.n(), graph.twice_edges() / 2);
    Ok(0)
}

fn load(graph: &Path, labels: Option<&Path>) -> Result<Graph> {
    let loaded =
        load_edge_list(graph, labels).with_context(|| format!("reading {}", graph.display()))?;
    let r = &loaded.report;
    if r.self_loops + r.duplicate_edges + r.dropped_nodes.len() > 0 {
        log::warn!(
            "dropped {} self-loops, {} duplicate edges, {} isolated nodes",
            r.self_loops,
            r.duplicate_edges,
            r.dropped_nodes.len()
        );
    }
    Ok(loaded.graph)
}

fn parse_vectors(spec: &str) -> Result<Vec<Vec<f64>>> {
    spec.split(';')
        .map(|v| {
            v.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .with_context(|| format!("not a number: {x:?}"))
                })
                .collect()
        })
        .collect()
}

pub fn detect(args: DetectArgs) -> Result<u8> {
    let graph = load(&args.graph, args.labels.as_deref())?;
    let init = match args.init {
        InitArg::Random => InitMode::Random,
        InitArg::Oracle => {
            if graph.labels().is_none() {
                bail!("--init oracle needs --labels");
            }
            InitMode::Oracle
        }
        InitArg::Theory => InitMode::Theory {
            proportions: args
                .c
                .as_deref()
                .map(|c| parse::proportions(c, Some(args.k)))
                .transpose()?,
            vectors: args.vectors.as_deref().map(parse_vectors).transpose()?,
        },
    };
    let mut cfg = DetectConfig {
        alpha: parse::alpha(&args.alpha)?,
        method: match args.method {
            MethodArg::LAlpha => Method::LAlpha,
            MethodArg::BetheHessian => Method::BetheHessian,
        },
        init,
        clusterer: match args.clusterer {
            ClustererArg::Em => Clusterer::Em,
            ClustererArg::Kmeans => Clusterer::KMeans,
        },
        regularize: !args.no_regularize,
        seed: args.seed,
        isolation: IsolationConfig {
            kappa: args.kappa,
            informative_tol: args.informative_tol,
            ..IsolationConfig::default()
        },
        ..DetectConfig::new(args.k)
    };
    cfg.em.restarts = args.restarts;
    let result = run_detect(&graph, &cfg)?;

    let labels = one_based(&result.labels);
    match &args.out {
        Some(path) => save_labels(graph.names(), &labels, path)
            .with_context(|| format!("writing {}", path.display()))?,
        None => {
            let mut out = std::io::stdout().lock();
            for (name, l) in graph.names().iter().zip(&labels) {
                writeln!(out, "{name} {l}")?;
            }
        }
    }

    if let Some(path) = &args.diagnostics {
        let mut w = csv_writer(Some(path))?;
        let d = &result.diagnostics;
        let mut row = |field: &str, value: String| w.write_record([field, value.as_str()]);
        row("field", "value".into())?;
        row("nodes", graph.n().to_string())?;
        row("edges", (graph.twice_edges() / 2).to_string())?;
        row("k", args.k.to_string())?;
        row("method", format!("{:?}", result.method))?;
        row("alpha", opt(result.alpha))?;
        row(
            "tau",
            opt(d
                .alpha_opt
                .as_ref()
                .map(|a| a.tau)
                .or(d.edge.map(|e| e.tau))),
        )?;
        row("edge", opt(d.edge.map(|e| e.s_plus)))?;
        row("r_c", opt(d.r_c))?;
        row("below_transition", result.below_transition.to_string())?;
        row("dim", result.dim().to_string())?;
        for (i, ev) in d.eigenvalues.iter().enumerate() {
            row(&format!("eigenvalue_{}", i + 1), ev.to_string())?;
        }
        for (i, th) in d.thetas.iter().enumerate() {
            row(&format!("theta_{}", i + 1), th.to_string())?;
        }
        row("log_likelihood", opt(d.log_likelihood))?;
        row("overlap", opt(result.overlap))?;
        for (a, count) in result.class_counts.iter().enumerate() {
            row(&format!("class_{}", a + 1), count.to_string())?;
        }
        w.flush()?;
    }

    if result.below_transition {
        log::warn!("no isolated eigenvalue outside the bulk; all nodes assigned to one class");
        return Ok(EXIT_BELOW_TRANSITION);
    }
    Ok(0)
}

fn graph_measure(path: &Path) -> Result<WeightMeasure> {
    let graph = load(path, None)?;
    Ok(estimate_weights(&graph)?.1)
}

fn resolve_alpha(mode: AlphaMode, measure: &WeightMeasure) -> Result<f64> {
    Ok(match mode {
        AlphaMode::Fixed(a) => a,
        AlphaMode::Opt => find_alpha_opt(measure, &AlphaGrid::default())?.alpha,
    })
}

pub fn alpha_opt(args: AlphaOptArgs) -> Result<u8> {
    let measure = match (&args.graph, &args.mu) {
        (Some(g), None) => graph_measure(g)?,
        (None, Some(mu)) => parse::weight_law(mu)?.measure()?,
        _ => bail!("pass exactly one of --graph or --mu"),
    };
    if !(args.step > 0.0 && args.step <= 1.0) {
        bail!("--step must lie in (0, 1]");
    }
    let opt = find_alpha_opt(
        &measure,
        &AlphaGrid {
            step: args.step,
            ..AlphaGrid::default()
        },
    )?;
    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record(["alpha", "tau", "optimal"])?;
    for (a, tau) in &opt.curve {
        w.write_record([a.to_string(), tau.to_string(), "false".into()])?;
    }
    w.write_record([opt.alpha.to_string(), opt.tau.to_string(), "true".into()])?;
    w.flush()?;
    if opt.degenerate {
        log::warn!("threshold is flat in alpha; every alpha is optimal");
    }
    Ok(0)
}

pub fn spectrum(args: SpectrumArgs) -> Result<u8> {
    let graph = load(&args.graph, None)?;
    let measure = match &args.mu {
        Some(mu) => parse::weight_law(mu)?.measure()?,
        None => estimate_weights(&graph)?.1,
    };
    let alpha = resolve_alpha(parse::alpha(&args.alpha)?, &measure)?;
    let edge = support_edge(&measure, alpha)?;
    let mut eigenvalues = build_l_alpha(&graph, alpha)?.eigenvalues()?;
    eigenvalues.sort_by(|a, b| b.total_cmp(a));

    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record(["kind", "value", "isolated", "informative"])?;
    w.write_record([
        "alpha".to_string(),
        alpha.to_string(),
        String::new(),
        String::new(),
    ])?;
    w.write_record([
        "edge".to_string(),
        edge.s_plus.to_string(),
        String::new(),
        String::new(),
    ])?;
    if let (Some(m), Some(c)) = (&args.m, &args.c) {
        let c = parse::proportions(c, args.k)?;
        let m = parse::affinity(m, c.len())?;
        let report = predict_spikes_with_edge(&measure, alpha, &m, &c, &edge, INFORMATIVE_TOL)?;
        for s in &report.spikes {
            w.write_record([
                "predicted".to_string(),
                s.rho.to_string(),
                "true".into(),
                s.informative.to_string(),
            ])?;
        }
    }
    let cutoff = edge.s_plus * (1.0 + args.kappa);
    for ev in eigenvalues {
        let isolated = ev.abs() > cutoff;
        let informative = if isolated {
            match solve_fixed_point(&measure, alpha, ev)
                .and_then(|sol| theta(&measure, alpha, &sol))
            {
                Ok(th) => ((1.0 + th).abs() >= INFORMATIVE_TOL).to_string(),
                Err(e) => {
                    log::warn!("eigenvalue {ev}: {e}");
                    String::new()
                }
            }
        } else {
            String::new()
        };
        w.write_record([
            "eigenvalue".to_string(),
            ev.to_string(),
            isolated.to_string(),
            informative,
        ])?;
    }
    w.flush()?;
    Ok(0)
}

/// Swept affinity at amplitude `delta`: the pattern scaled by `delta`, explicit
/// matrices multiplied by it.
fn swept_affinity(model: &Model, delta: f64) -> Vec<Vec<f64>> {
    match model.pattern {
        AffinityPattern::Explicit { .. } => model.affinity(model.scale * delta),
        _ => model.affinity(delta),
    }
}

pub fn phase(args: PhaseArgs) -> Result<u8> {
    let model = resolve_model(&args.model)?;
    let measure = model.law.measure()?;
    let deltas = parse::grid(&args.deltas)?;
    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record(["delta", "alpha", "lambda", "rho", "edge", "ratio"])?;
    for mode in parse::alphas(&args.alphas)? {
        let alpha = resolve_alpha(mode, &measure)?;
        let edge = support_edge(&measure, alpha)?;
        for &delta in &deltas {
            let m = swept_affinity(&model, delta);
            let lambda = mbar_spectrum(&m, &model.proportions)?
                .values
                .iter()
                .fold(0.0_f64, |a, &v| a.max(v));
            let ratio = phase_ratio(&measure, alpha, lambda, &edge)?;
            let rho = (ratio > 1.0).then_some(ratio * edge.s_plus);
            w.write_record([
                delta.to_string(),
                alpha.to_string(),
                lambda.to_string(),
                opt(rho),
                edge.s_plus.to_string(),
                ratio.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(0)
}

pub fn theory(args: TheoryArgs) -> Result<u8> {
    let model = resolve_model(&args.model)?;
    if model.k() != 2 {
        bail!("theoretical rates need 2 classes, got {}", model.k());
    }
    let n = model
        .n
        .ok_or_else(|| anyhow!("--n (or --preset) is required"))?;
    let measure = model.law.measure()?;
    let deltas = parse::grid(&args.deltas)?;
    let unit = swept_affinity(&model, 1.0);
    let weighting = match args.weighting {
        WeightingArg::Balanced => ClassWeighting::Balanced,
        WeightingArg::Proportional => ClassWeighting::Proportional,
    };
    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record([
        "delta",
        "alpha",
        "correct_rate",
        "nu1",
        "nu2",
        "sigma1",
        "sigma2",
    ])?;
    for mode in parse::alphas(&args.alphas)? {
        let alpha = resolve_alpha(mode, &measure)?;
        for (delta, p) in theory_curve(
            &measure,
            alpha,
            &unit,
            &deltas,
            &model.proportions,
            n,
            weighting,
        )? {
            w.write_record([
                delta.to_string(),
                alpha.to_string(),
                p.correct_rate.to_string(),
                opt(p.nu.map(|v| v[0])),
                opt(p.nu.map(|v| v[1])),
                opt(p.sigma.map(|v| v[0])),
                opt(p.sigma.map(|v| v[1])),
            ])?;
        }
    }
    w.flush()?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(preset: Option<&str>) -> ModelArgs {
        ModelArgs {
            preset: preset.map(String::from),
            n: None,
            k: None,
            c: None,
            m: None,
            mu: None,
        }
    }

    #[test]
    fn preset_fills_every_field() {
        let m = resolve_model(&args(Some("fig8"))).unwrap();
        assert_eq!(m.n, Some(4000));
        assert_eq!(m.proportions, vec![0.8, 0.2]);
        assert_eq!(m.scale, 15.0);
    }

    #[test]
    fn explicit_flags_override_the_preset() {
        let mut a = args(Some("fig5"));
        a.m = Some("delta:12".into());
        a.k = Some(2);
        let m = resolve_model(&a).unwrap();
        assert_eq!(m.proportions, vec![0.5, 0.5]);
        assert_eq!(
            m.params().unwrap().affinity,
            vec![vec![12.0, 0.0], vec![0.0, 12.0]]
        );
    }

    #[test]
    fn missing_model_is_an_error() {
        assert!(resolve_model(&args(None)).is_err());
        let mut a = args(None);
        a.k = Some(2);
        a.m = Some("delta:5".into());
        assert!(resolve_model(&a).is_err());
    }

    #[test]
    fn explicit_matrix_sets_k() {
        let mut a = args(None);
        a.m = Some("matrix:3,-1,-1;-1,3,-1;-1,-1,3".into());
        a.mu = Some("point:0.5".into());
        assert_eq!(resolve_model(&a).unwrap().k(), 3);
    }

    #[test]
    fn suffixes_append_to_the_prefix() {
        assert_eq!(
            with_suffix(Path::new("out/g"), "edges"),
            PathBuf::from("out/g.edges")
        );
    }
}
