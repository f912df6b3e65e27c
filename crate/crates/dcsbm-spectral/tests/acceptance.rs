//! Acceptance checks, one line per criterion.
//!
//! Prints `PASS` or `FAIL` with the measured value and tolerance. Exits
//! nonzero on a failure only when `DCSBM_ACCEPTANCE_STRICT` is set.
//! `DCSBM_DATA` may point at a directory holding `polblogs.edges`,
//! `polblogs.labels`, `karate.edges` and `karate.labels`.

use std::path::Path;
use std::time::Instant;

use dcsbm_spectral::cluster::{
    detect, empirical_class_stats, isolated_eigenvectors, matching_fraction, overlap, regularize,
    AlphaMode, Clusterer, DetectConfig, IsolationConfig, ISOLATION_MARGIN,
};
use dcsbm_spectral::graph::{
    estimate_weights, load_edge_list, sample_dcsbm, AffinityPattern, DcsbmParams, Graph, WeightLaw,
    WeightMeasure,
};
use dcsbm_spectral::operators::{build_l_alpha, build_l_tilde, null_vector};
use dcsbm_spectral::presets::preset;
use dcsbm_spectral::rmt::{
    alpha_opt, e_moment, predict_spikes, solve_fixed_point, support_edge, AlphaGrid,
};
use dcsbm_spectral::theory::{chi, theory_point, ClassWeighting};

type Section = (&'static str, fn(&mut Report));

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, id: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("{} [{id}] {detail}", if pass { "PASS" } else { "FAIL" });
    }

    fn info(&self, id: &str, detail: String) {
        println!("INFO [{id}] {detail}");
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn three_classes(n: usize, delta: f64) -> DcsbmParams {
    let mut p = preset("fig5").unwrap().params_at(delta);
    p.n = n;
    p
}

fn unbalanced_pair(n: usize, delta: f64) -> DcsbmParams {
    let mut p = preset("fig8").unwrap().params_at(delta);
    p.n = n;
    p
}

fn two_atom_measure() -> WeightMeasure {
    WeightMeasure::new(vec![(0.1, 0.75), (0.5, 0.25)]).unwrap()
}

fn estimated(graph: &Graph) -> WeightMeasure {
    estimate_weights(graph).unwrap().1
}

fn top_abs(graph: &Graph, alpha: f64, count: usize) -> Vec<f64> {
    build_l_alpha(graph, alpha)
        .unwrap()
        .top_eigenpairs(count)
        .unwrap()
        .iter()
        .map(|p| p.value)
        .collect()
}

fn homogeneous_support(r: &mut Report) {
    let q0 = 0.5;
    let params = DcsbmParams {
        n: 4000,
        proportions: vec![0.5, 0.5],
        affinity: AffinityPattern::Identity.matrix(2, 0.0),
        weight_law: WeightLaw::point(q0),
    };
    let (graph, _) = sample_dcsbm(&params, 1).unwrap();
    let s_hat = support_edge(&estimated(&graph), 0.5).unwrap().s_plus;
    let top = top_abs(&graph, 0.5, 1)[0].abs();
    r.check(
        "1a",
        (s_hat - top).abs() <= 0.05 * s_hat,
        format!("max|lambda| = {top:.4}, S_hat = {s_hat:.4}, tol 5%"),
    );
    let s = support_edge(&WeightMeasure::point(q0).unwrap(), 0.5)
        .unwrap()
        .s_plus;
    let closed = 2.0 * q0.powf(0.0) * (1.0 - q0 * q0).sqrt();
    r.check(
        "1b",
        (s - closed).abs() <= 1e-3,
        format!("edge = {s:.6}, closed form = {closed:.6}, tol 1e-3"),
    );
}

fn overlap_sweep(r: &mut Report) {
    let seeds: Vec<u64> = (1..=5).collect();
    let at = |delta: f64| -> Vec<f64> {
        seeds
            .iter()
            .map(|&s| {
                let (g, _) = sample_dcsbm(&three_classes(3000, delta), s).unwrap();
                alpha_opt(&estimated(&g), &AlphaGrid::default())
                    .unwrap()
                    .alpha
            })
            .collect()
    };
    let a11 = median(at(11.0));
    r.check(
        "2a",
        (a11 - 0.07).abs() <= 0.02,
        format!("alpha_opt_hat (delta 11, median of 5) = {a11:.4}, target 0.07 +- 0.02"),
    );
    r.info(
        "2a",
        format!(
            "alpha_opt_hat at delta 30 = {:.4}; alpha_opt of the true measure = {:.4}",
            median(at(30.0)),
            {
                alpha_opt(&two_atom_measure(), &AlphaGrid::default())
                    .unwrap()
                    .alpha
            }
        ),
    );

    let scores: Vec<f64> = seeds
        .iter()
        .map(|&s| {
            let (g, _) = sample_dcsbm(&three_classes(3000, 30.0), s).unwrap();
            let cfg = DetectConfig {
                alpha: AlphaMode::Fixed(0.0),
                seed: s,
                ..DetectConfig::new(3)
            };
            detect(&g, &cfg).unwrap().overlap.unwrap()
        })
        .collect();
    let m = mean(&scores);
    r.check(
        "2b",
        (m - 0.818).abs() <= 0.05,
        format!("overlap(alpha 0, delta 30, 5 seeds) = {m:.4}, target 0.818 +- 0.05"),
    );

    // The clusterer is left open; k-means does not collapse to one class near the threshold.
    let first_above = |clusterer: Clusterer, r: &mut Report| -> Option<f64> {
        for delta in (6..=16).map(f64::from) {
            let scores: Vec<f64> = seeds
                .iter()
                .map(|&s| {
                    let (g, _) = sample_dcsbm(&three_classes(3000, delta), s).unwrap();
                    let cfg = DetectConfig {
                        alpha: AlphaMode::Opt,
                        seed: s,
                        clusterer,
                        ..DetectConfig::new(3)
                    };
                    detect(&g, &cfg).unwrap().overlap.unwrap()
                })
                .collect();
            r.info(
                "2c",
                format!(
                    "{clusterer:?} delta {delta}: mean overlap {:.4}",
                    mean(&scores)
                ),
            );
            if mean(&scores) > 0.1 {
                return Some(delta);
            }
        }
        None
    };
    let transition = first_above(Clusterer::KMeans, r);
    r.check(
        "2c",
        transition.is_some_and(|d| (9.0..=13.0).contains(&d)),
        format!("first delta with mean overlap > 0.1 (alpha opt, k-means) = {transition:?}, target [9, 13]"),
    );
    let em = first_above(Clusterer::Em, r);
    r.info(
        "2c",
        format!("first delta with mean overlap > 0.1 (alpha opt, EM) = {em:?}"),
    );
}

fn spike_location(r: &mut Report) {
    let mu = two_atom_measure();
    let alpha = alpha_opt(&mu, &AlphaGrid::default()).unwrap().alpha;
    let p = three_classes(4000, 30.0);
    let rho = predict_spikes(&mu, alpha, &p.affinity, &p.proportions)
        .unwrap()
        .spikes[0]
        .rho;
    let mut tops = Vec::new();
    let mut pairs = Vec::new();
    for s in 1..=3 {
        let (g, _) = sample_dcsbm(&p, s).unwrap();
        let ev = top_abs(&g, alpha, 2);
        tops.push(ev[0]);
        pairs.push(0.5 * (ev[0] + ev[1]));
    }
    let top = median(tops);
    let err = (top - rho).abs() / rho;
    r.check(
        "3",
        err <= 0.03,
        format!(
            "top eigenvalue (median of 3) = {top:.4}, rho = {rho:.4}, rel err {err:.4}, tol 0.03"
        ),
    );
    let pair = median(pairs);
    r.info(
        "3",
        format!(
            "mean of the split double spike = {pair:.4}, rel err {:.4}",
            (pair - rho).abs() / rho
        ),
    );
}

fn class_statistics(r: &mut Report) {
    let alpha = 0.5;
    let p = unbalanced_pair(4000, 15.0);
    let mu = p.weight_law.measure().unwrap();
    let th = theory_point(
        &mu,
        alpha,
        &p.affinity,
        &p.proportions,
        p.n,
        ClassWeighting::Balanced,
        None,
    )
    .unwrap();
    let (nu, sigma) = (th.nu.unwrap(), th.sigma.unwrap());
    let mut means = [Vec::new(), Vec::new()];
    let mut vars = [Vec::new(), Vec::new()];
    for s in 1..=10 {
        let (g, _) = sample_dcsbm(&p, s).unwrap();
        let mu_hat = estimated(&g);
        let edge = support_edge(&mu_hat, alpha).unwrap();
        let op = build_l_alpha(&g, alpha).unwrap();
        let mut emb =
            isolated_eigenvectors(&op, &edge, &mu_hat, 2, &IsolationConfig::default()).unwrap();
        let labels = g.labels().unwrap();
        regularize(&mut emb, g.degrees(), Some(labels));
        let stats = empirical_class_stats(&emb.rows(), labels, 2).unwrap();
        for a in 0..2 {
            means[a].push(stats.means[a][0]);
            vars[a].push(stats.covariances[a][0][0]);
        }
    }
    for a in 0..2 {
        let m = median(means[a].clone());
        let v = median(vars[a].clone());
        let em = (m - nu[a]).abs() / nu[a].abs();
        let ev = (v - sigma[a]).abs() / sigma[a];
        r.check(
            &format!("4 class {}", a + 1),
            em <= 0.10 && ev <= 0.20,
            format!(
                "mean {m:.6} vs {:.6} (rel {em:.3}, tol 0.10); variance {v:.4e} vs {:.4e} (rel {ev:.3}, tol 0.20)",
                nu[a], sigma[a]
            ),
        );
    }
}

fn initialization_ordering(r: &mut Report) {
    let pr = preset("fig8").unwrap();
    let mut rates = vec![Vec::new(); pr.methods.len()];
    for s in 1..=5 {
        let (g, _) = sample_dcsbm(&pr.params_at(15.5), s).unwrap();
        for (i, m) in pr.methods.iter().enumerate() {
            let res = detect(&g, &m.config(2, s)).unwrap();
            rates[i].push(matching_fraction(g.labels().unwrap(), &res.labels, 2).unwrap());
        }
    }
    let rate =
        |label: &str| mean(&rates[pr.methods.iter().position(|m| m.label == label).unwrap()]);
    let (theory, oracle, random) = (
        rate("theory_init"),
        rate("oracle_init"),
        rate("random_init"),
    );
    r.check(
        "5",
        (theory - oracle).abs() <= 0.03 && theory.min(oracle) - random >= 0.03,
        format!("correct rate theory {theory:.4}, oracle {oracle:.4}, random {random:.4} (5 seeds); reference 0.945 vs 0.891"),
    );
}

fn theory_rate(r: &mut Report) {
    let p = unbalanced_pair(4000, 15.0);
    let mu = p.weight_law.measure().unwrap();
    let rate = theory_point(
        &mu,
        0.5,
        &p.affinity,
        &p.proportions,
        p.n,
        ClassWeighting::Balanced,
        None,
    )
    .unwrap()
    .correct_rate;
    r.check(
        "6",
        (rate - 0.9385).abs() <= 0.005,
        format!("theoretical correct rate = {rate:.5}, target 0.9385 +- 0.005"),
    );
}

fn properties(r: &mut Report) {
    let (g, _) = sample_dcsbm(&three_classes(1000, 20.0), 3).unwrap();
    let l = build_l_alpha(&g, 0.3).unwrap();
    let resid = l
        .apply(&null_vector(&g, 0.3))
        .iter()
        .fold(0.0_f64, |a, x| a.max(x.abs()));
    r.check(
        "7 null vector",
        resid <= 1e-10,
        format!("max |L D^alpha 1| = {resid:.2e}, tol 1e-10"),
    );

    let truth = g.labels().unwrap();
    let pred: Vec<usize> = truth
        .iter()
        .enumerate()
        .map(|(i, &l)| if i % 5 == 0 { (l + 1) % 3 } else { l })
        .collect();
    let perm: Vec<usize> = pred.iter().map(|&l| [2, 0, 1][l]).collect();
    let (a, b) = (
        overlap(truth, &pred, 3).unwrap(),
        overlap(truth, &perm, 3).unwrap(),
    );
    r.check(
        "7 overlap invariance",
        a == b,
        format!("overlap {a:.6} vs permuted {b:.6}"),
    );

    let (strong, _) = sample_dcsbm(&three_classes(1000, 60.0), 3).unwrap();
    let res = detect(
        &strong,
        &DetectConfig {
            alpha: AlphaMode::Fixed(0.5),
            ..DetectConfig::new(3)
        },
    )
    .unwrap();
    r.check(
        "7 dimension",
        (1..=2).contains(&res.dim()),
        format!("clustered dimension {} <= K - 1 = 2", res.dim()),
    );

    let mu = two_atom_measure();
    let edge = support_edge(&mu, 0.5).unwrap().s_plus;
    let zs: Vec<f64> = (1..=20).map(|i| edge * (1.0 + 0.1 * i as f64)).collect();
    let mut monotone = true;
    let mut antisym: f64 = 0.0;
    let mut fp_resid: f64 = 0.0;
    let mut prev = f64::NEG_INFINITY;
    for &z in &zs {
        let sol = solve_fixed_point(&mu, 0.5, z).unwrap();
        let neg = solve_fixed_point(&mu, 0.5, -z).unwrap();
        monotone &= sol.e2 > prev;
        prev = sol.e2;
        antisym = antisym.max((sol.e2 + neg.e2).abs());
        let e1 = e_moment(&mu, 0.5, 1, 1, &sol).unwrap();
        let e2 = e_moment(&mu, 0.5, 2, 1, &sol).unwrap();
        fp_resid = fp_resid.max((e1 - sol.e1).abs()).max((e2 - sol.e2).abs());
    }
    r.check(
        "7 E2 shape",
        monotone && antisym < 1e-9,
        format!("E2 increasing above the edge: {monotone}; max |E2(z) + E2(-z)| = {antisym:.2e}"),
    );
    r.check(
        "7 fixed point",
        fp_resid < 1e-9,
        format!("max residual = {fp_resid:.2e}, tol 1e-9"),
    );

    let q0: f64 = 0.5;
    let alpha = 0.5;
    let point = WeightMeasure::point(q0).unwrap();
    let s2 = q0.powf(2.0 - 4.0 * alpha) * (1.0 - q0 * q0);
    let z = 3.0 * s2.sqrt();
    let gz = (-z + (z * z - 4.0 * s2).sqrt()) / (2.0 * s2);
    let closed = s2 * gz.powi(4) / (1.0 - s2 * gz * gz);
    let got = chi(&point, alpha, &solve_fixed_point(&point, alpha, z).unwrap()).unwrap();
    let rel = (got - closed).abs() / closed.abs();
    r.check(
        "7 chi",
        rel < 1e-8,
        format!("chi = {got:.10}, homogeneous closed form = {closed:.10}, rel {rel:.1e}"),
    );

    let mut ok = 0;
    let mut counts = Vec::new();
    for s in 1..=10 {
        let (g, _) = sample_dcsbm(&three_classes(4000, 0.0), s).unwrap();
        let cut = support_edge(&estimated(&g), 0.5).unwrap().s_plus * (1.0 + ISOLATION_MARGIN);
        let outliers = top_abs(&g, 0.5, 6).iter().filter(|v| v.abs() > cut).count();
        counts.push(outliers);
        ok += usize::from(outliers <= 2);
    }
    r.check(
        "7 null model",
        ok >= 9,
        format!("seeds with <= 2 outliers: {ok}/10 (counts {counts:?})"),
    );
}

fn operator_convergence(r: &mut Report) {
    let mut medians = Vec::new();
    for n in [1000, 2000, 4000] {
        let ratios: Vec<f64> = (1..=3)
            .map(|s| {
                let (g, latent) = sample_dcsbm(&three_classes(n, 30.0), s).unwrap();
                let l = build_l_alpha(&g, 0.5).unwrap();
                let lt = build_l_tilde(&latent, &g, 0.5).unwrap();
                l.distance(&lt).unwrap() / support_edge(&estimated(&g), 0.5).unwrap().s_plus
            })
            .collect();
        medians.push(median(ratios));
    }
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    r.check(
        "8",
        decreasing,
        format!("median ||L - L_tilde|| / S_hat at n = 1000, 2000, 4000: {medians:.4?}"),
    );
}

fn real_data(r: &mut Report) {
    let Some(dir) = std::env::var_os("DCSBM_DATA") else {
        println!("SKIP [9] DCSBM_DATA not set");
        return;
    };
    let dir = Path::new(&dir);
    for (name, alpha) in [("polblogs", 0.0), ("karate", 0.5)] {
        let edges = dir.join(format!("{name}.edges"));
        let labels = dir.join(format!("{name}.labels"));
        if !edges.exists() || !labels.exists() {
            println!("SKIP [9 {name}] missing {}", edges.display());
            continue;
        }
        let g = load_edge_list(&edges, Some(&labels)).unwrap().graph;
        let k = g.label_count().unwrap();
        let cfg = DetectConfig {
            alpha: AlphaMode::Fixed(alpha),
            ..DetectConfig::new(k)
        };
        let o = detect(&g, &cfg).unwrap().overlap.unwrap();
        r.check(
            &format!("9 {name}"),
            o >= 0.85,
            format!("overlap at alpha {alpha} = {o:.4}, target >= 0.85"),
        );
    }
}

fn extra_spot_values(r: &mut Report) {
    let fig2 = WeightMeasure::new(vec![(0.4, 0.5), (0.9, 0.5)]).unwrap();
    let s = support_edge(&fig2, 1.0).unwrap().s_plus;
    r.check(
        "extra edge",
        (s - 3.568).abs() <= 0.01 * 3.568,
        format!("alpha 1 edge = {s:.4}, reference marker 3.568, tol 1%"),
    );
    let law = WeightLaw::PowerLaw {
        exponent: 3.0,
        lo: 0.05,
        hi: 0.3,
    };
    let a = alpha_opt(&law.measure().unwrap(), &AlphaGrid::default())
        .unwrap()
        .alpha;
    r.info("extra power law", format!("alpha_opt = {a:.4}"));
}

fn main() {
    let mut r = Report { failures: 0 };
    let sections: [Section; 10] = [
        ("1", homogeneous_support),
        ("6", theory_rate),
        ("extra", extra_spot_values),
        ("7", properties),
        ("3", spike_location),
        ("8", operator_convergence),
        ("4", class_statistics),
        ("5", initialization_ordering),
        ("2", overlap_sweep),
        ("9", real_data),
    ];
    for (id, f) in sections {
        let t = Instant::now();
        f(&mut r);
        eprintln!("criterion {id}: {:.1}s", t.elapsed().as_secs_f64());
    }
    println!("{} failing criteria", r.failures);
    if r.failures > 0 && std::env::var_os("DCSBM_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
