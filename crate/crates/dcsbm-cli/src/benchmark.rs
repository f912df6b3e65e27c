//! Preset sweeps over grid points, methods and seeds.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Result};
use dcsbm_spectral::cluster::{detect, matching_fraction, AlphaMode};
use dcsbm_spectral::graph::sample_dcsbm;
use dcsbm_spectral::presets::{preset, MethodSpec, Metric, Preset};
use dcsbm_spectral::rmt::{alpha_opt, mbar_spectrum, phase_ratio, support_edge, AlphaGrid};
use dcsbm_spectral::theory::{theory_point, ClassWeighting};
use rayon::prelude::*;

use crate::output::csv_writer;
use crate::{parse, BenchmarkArgs, EXIT_NUMERICAL};

/// One output row before serialization.
struct Row {
    x: f64,
    method: String,
    seed: String,
    value: f64,
}

fn score(p: &Preset, spec: &MethodSpec, x: f64, seed: u64) -> Result<f64> {
    let (graph, _) = sample_dcsbm(&p.params_at(x), seed)?;
    let result = detect(&graph, &spec.config(p.k(), seed))?;
    let truth = graph
        .labels()
        .ok_or_else(|| anyhow!("sampled graph has no labels"))?;
    Ok(match p.metric {
        Metric::Overlap => result
            .overlap
            .ok_or_else(|| anyhow!("no overlap computed"))?,
        Metric::CorrectRate => matching_fraction(truth, &result.labels, p.k())?,
    })
}

fn alpha_label(mode: AlphaMode) -> String {
    match mode {
        AlphaMode::Fixed(a) => format!("alpha={a}"),
        AlphaMode::Opt => "alpha=opt".into(),
    }
}

/// Theoretical rate for two classes, predicted phase ratio otherwise.
fn theory_rows(p: &Preset, grid: &[f64]) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &mode in &p.theory_alphas {
        let kind = if p.k() == 2 { "theory" } else { "ratio" };
        let method = format!("{kind} {}", alpha_label(mode));
        for &x in grid {
            let params = p.params_at(x);
            let measure = params.weight_law.measure()?;
            let alpha = match mode {
                AlphaMode::Fixed(a) => a,
                AlphaMode::Opt => alpha_opt(&measure, &AlphaGrid::default())?.alpha,
            };
            let edge = support_edge(&measure, alpha)?;
            let value = if p.k() == 2 {
                theory_point(
                    &measure,
                    alpha,
                    &params.affinity,
                    &p.proportions,
                    p.n,
                    ClassWeighting::Balanced,
                    Some(&edge),
                )?
                .correct_rate
            } else {
                let lambda = mbar_spectrum(&params.affinity, &p.proportions)?
                    .values
                    .iter()
                    .fold(0.0_f64, |a, &v| a.max(v));
                phase_ratio(&measure, alpha, lambda, &edge)?
            };
            rows.push(Row {
                x,
                method: method.clone(),
                seed: "theory".into(),
                value,
            });
        }
    }
    Ok(rows)
}

pub fn run(args: BenchmarkArgs) -> Result<u8> {
    let mut p = preset(&args.preset)?;
    if let Some(n) = args.n {
        p.n = n;
    }
    let grid = match &args.grid {
        Some(g) => parse::grid(g)?,
        None => p.grid.clone(),
    };
    if let Some(filter) = &args.methods {
        let wanted: Vec<&str> = filter.split(',').map(str::trim).collect();
        if let Some(unknown) = wanted
            .iter()
            .find(|w| !p.methods.iter().any(|m| m.label == **w))
        {
            let known: Vec<&str> = p.methods.iter().map(|m| m.label.as_str()).collect();
            bail!(
                "preset {} has no method {unknown:?}; available: {}",
                p.name,
                known.join(", ")
            );
        }
        p.methods.retain(|m| wanted.contains(&m.label.as_str()));
    }
    if args.seeds == 0 && !p.methods.is_empty() {
        bail!("--seeds must be positive");
    }

    let tasks: Vec<(f64, u64)> = grid
        .iter()
        .flat_map(|&x| (args.seed..args.seed + args.seeds).map(move |s| (x, s)))
        .collect();
    let mut rows: Vec<Row> = tasks
        .par_iter()
        .flat_map_iter(|&(x, seed)| {
            let p = &p;
            p.methods.iter().map(move |spec| {
                let value = score(p, spec, x, seed).unwrap_or_else(|e| {
                    log::warn!("{}={x} seed {seed} {}: {e:#}", p.sweep.label(), spec.label);
                    f64::NAN
                });
                log::info!(
                    "{}={x} seed {seed} {}: {value}",
                    p.sweep.label(),
                    spec.label
                );
                Row {
                    x,
                    method: spec.label.clone(),
                    seed: seed.to_string(),
                    value,
                }
            })
        })
        .collect();
    let failures = rows.iter().filter(|r| r.value.is_nan()).count();

    let mut sums: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    for r in &rows {
        if r.value.is_finite() {
            let xi = grid.iter().position(|&g| g == r.x).unwrap_or(0);
            let mi = p
                .methods
                .iter()
                .position(|m| m.label == r.method)
                .unwrap_or(0);
            let e = sums.entry((xi, mi)).or_insert((0.0, 0));
            e.0 += r.value;
            e.1 += 1;
        }
    }
    rows.extend(sums.into_iter().map(|((xi, mi), (sum, count))| Row {
        x: grid[xi],
        method: p.methods[mi].label.clone(),
        seed: "mean".into(),
        value: sum / count as f64,
    }));
    rows.extend(theory_rows(&p, &grid)?);

    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record([p.sweep.label(), "method", "seed", "value"])?;
    for r in &rows {
        w.write_record([
            r.x.to_string(),
            r.method.clone(),
            r.seed.clone(),
            r.value.to_string(),
        ])?;
    }
    w.flush()?;
    if failures > 0 {
        log::warn!("{failures} runs failed");
        return Ok(EXIT_NUMERICAL);
    }
    Ok(0)
}
