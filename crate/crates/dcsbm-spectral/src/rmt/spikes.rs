use faer::Mat;
use serde::{Deserialize, Serialize};

use super::edge::{support_edge, SupportEstimate};
use super::fixed_point::{FixedPointConfig, Kernel, StieltjesSolution};
use crate::graph::{validate_proportions, validate_symmetric, WeightMeasure};
use crate::linalg::sym_eigen;
use crate::{Error, Result};

/// Default band around `1 + θ = 0` within which a spike is declared spurious.
pub const INFORMATIVE_TOL: f64 = 0.1;

/// Nonzero eigenvalues of the effective affinity `(D(c) - ccᵀ)M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MbarSpectrum {
    /// Sorted by decreasing magnitude.
    pub values: Vec<f64>,
    /// Unit eigenvectors of `D(c)^{1/2}(I - 1cᵀ)M(I - c1ᵀ)D(c)^{1/2}`,
    /// each with its largest-magnitude entry positive.
    pub vectors: Vec<Vec<f64>>,
}

/// Flips `v` so that its largest-magnitude entry (first on ties) is positive.
pub fn orient(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Eigenvalues and symmetrized eigenvectors of the effective affinity.
pub fn mbar_spectrum(m: &[Vec<f64>], c: &[f64]) -> Result<MbarSpectrum> {
    let k = c.len();
    validate_proportions(c)?;
    validate_symmetric(m, k)?;
    // B = (I - 1cᵀ) M (I - c1ᵀ), S = D^{1/2} B D^{1/2}.
    let mc: Vec<f64> = (0..k)
        .map(|a| (0..k).map(|b| m[a][b] * c[b]).sum())
        .collect();
    let cmc: f64 = (0..k).map(|a| c[a] * mc[a]).sum();
    let s = Mat::from_fn(k, k, |a, b| {
        let bab = m[a][b] - mc[a] - mc[b] + cmc;
        c[a].sqrt() * bab * c[b].sqrt()
    });
    let scale = m.iter().flatten().fold(1.0f64, |x, y| x.max(y.abs()));
    let mut pairs: Vec<_> = sym_eigen(&s)?
        .into_iter()
        .filter(|p| p.value.abs() > 1e-10 * scale)
        .collect();
    pairs.sort_by(|x, y| y.value.abs().total_cmp(&x.value.abs()));
    for p in &mut pairs {
        orient(&mut p.vector);
    }
    Ok(MbarSpectrum {
        values: pairs.iter().map(|p| p.value).collect(),
        vectors: pairs.into_iter().map(|p| p.vector).collect(),
    })
}

/// Predicted isolated eigenvalue for one eigenvalue of the effective affinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    /// Eigenvalue of `M̄` producing the spike.
    pub lambda: f64,
    /// Limiting location of the isolated eigenvalue.
    pub rho: f64,
    pub theta: f64,
    pub informative: bool,
    /// Symmetrized eigenvector of `M̄` for `lambda`.
    pub vector: Vec<f64>,
    /// Fixed point at `rho`.
    pub solution: StieltjesSolution,
}

/// All spikes predicted for a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeReport {
    pub alpha: f64,
    pub edge: SupportEstimate,
    pub mbar: MbarSpectrum,
    pub spikes: Vec<Spike>,
    /// Eigenvalues of `M̄` at or below the threshold.
    pub subcritical: Vec<f64>,
}

impl SpikeReport {
    pub fn informative(&self) -> impl Iterator<Item = &Spike> {
        self.spikes.iter().filter(|s| s.informative)
    }
}

/// `θ(z) = -1 - z e₁₀/m + e₂₁/(m e₁₀) (v + z e₀,₋₁)` with `m = ∫q dμ`,
/// `v = ∫q^{2α} dμ`. A spike is informative when `1 + θ` is away from zero.
pub fn theta(measure: &WeightMeasure, alpha: f64, sol: &StieltjesSolution) -> Result<f64> {
    if !sol.converged {
        return Err(Error::NotConverged(sol.z));
    }
    let k = Kernel::new(measure, alpha);
    theta_kernel(&k, measure, sol)
}

fn theta_kernel(k: &Kernel, measure: &WeightMeasure, sol: &StieltjesSolution) -> Result<f64> {
    let (z, e1, e2) = (sol.z, sol.e1, sol.e2);
    let e10 = k.moment(1.0, 0.0, e1, e2, z);
    if e10.abs() < 1e-12 {
        return Err(Error::DegenerateMoment(format!("e10 = {e10:e} at z = {z}")));
    }
    let e21 = k.moment(2.0, 1.0, e1, e2, z);
    let e0m1 = k.moment(0.0, -1.0, e1, e2, z);
    let m = measure.mean();
    let v = measure.moment(2.0 * k.alpha);
    Ok(-1.0 - z * e10 / m + e21 / (m * e10) * (v + z * e0m1))
}

/// Solves `E₂(ρ) = -1/λ` for `|λ| > τ`; `ρ` carries the sign of `λ`.
pub fn spike_location(
    measure: &WeightMeasure,
    alpha: f64,
    lambda: f64,
    edge: &SupportEstimate,
) -> Result<Option<StieltjesSolution>> {
    let k = Kernel::new(measure, alpha);
    spike_location_kernel(&k, lambda, edge, &FixedPointConfig::default())
}

fn spike_location_kernel(
    k: &Kernel,
    lambda: f64,
    edge: &SupportEstimate,
    cfg: &FixedPointConfig,
) -> Result<Option<StieltjesSolution>> {
    let mag = lambda.abs();
    if mag <= edge.tau {
        return Ok(None);
    }
    let target = -1.0 / mag;
    let s = edge.s_plus;
    // E₂ increases from -1/τ at the edge to 0 at infinity.
    let mut delta = 1e-3;
    let mut lo = loop {
        let sol = k.solve(s * (1.0 + delta), cfg);
        if sol.converged && sol.e2 < target {
            break s * (1.0 + delta);
        }
        delta /= 10.0;
        if delta < 1e-14 {
            return Err(Error::RootNotBracketed(lambda));
        }
    };
    let mut hi = s + 10.0 * mag.max(1.0);
    loop {
        let sol = k.solve(hi, cfg);
        if !sol.converged {
            return Err(Error::RootNotBracketed(lambda));
        }
        if sol.e2 > target {
            break;
        }
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::RootNotBracketed(lambda));
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let sol = k.solve(mid, cfg);
        if !sol.converged {
            return Err(Error::NotConverged(mid));
        }
        if sol.e2 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let rho = 0.5 * (lo + hi) * lambda.signum();
    let sol = k.solve(rho, cfg);
    if !sol.converged {
        return Err(Error::NotConverged(rho));
    }
    Ok(Some(sol))
}

/// Predicted spikes with the default edge search.
pub fn predict_spikes(
    measure: &WeightMeasure,
    alpha: f64,
    m: &[Vec<f64>],
    c: &[f64],
) -> Result<SpikeReport> {
    let edge = support_edge(measure, alpha)?;
    predict_spikes_with_edge(measure, alpha, m, c, &edge, INFORMATIVE_TOL)
}

/// Predicted spikes given a precomputed edge and informativeness band.
pub fn predict_spikes_with_edge(
    measure: &WeightMeasure,
    alpha: f64,
    m: &[Vec<f64>],
    c: &[f64],
    edge: &SupportEstimate,
    informative_tol: f64,
) -> Result<SpikeReport> {
    let mbar = mbar_spectrum(m, c)?;
    let k = Kernel::new(measure, alpha);
    let cfg = FixedPointConfig::default();
    let mut spikes = Vec::new();
    let mut subcritical = Vec::new();
    for (lambda, v) in mbar.values.iter().zip(&mbar.vectors) {
        match spike_location_kernel(&k, *lambda, edge, &cfg)? {
            None => subcritical.push(*lambda),
            Some(sol) => {
                let th = theta_kernel(&k, measure, &sol)?;
                spikes.push(Spike {
                    lambda: *lambda,
                    rho: sol.z,
                    theta: th,
                    informative: (1.0 + th).abs() >= informative_tol,
                    vector: v.clone(),
                    solution: sol,
                });
            }
        }
    }
    Ok(SpikeReport {
        alpha,
        edge: *edge,
        mbar,
        spikes,
        subcritical,
    })
}

/// `ρ / S` for the isolated eigenvalue produced by `lambda`, or `1` below the threshold.
pub fn phase_ratio(
    measure: &WeightMeasure,
    alpha: f64,
    lambda: f64,
    edge: &SupportEstimate,
) -> Result<f64> {
    Ok(match spike_location(measure, alpha, lambda, edge)? {
        Some(sol) => sol.z.abs() / edge.s_plus,
        None => 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::AffinityPattern;
    use crate::rmt::solve_fixed_point;

    #[test]
    fn mbar_identity_uniform() {
        let m = AffinityPattern::Identity.matrix(3, 12.0);
        let spec = mbar_spectrum(&m, &[1.0 / 3.0; 3]).unwrap();
        assert_eq!(spec.values.len(), 2);
        for v in &spec.values {
            assert!((v - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mbar_two_class_vector() {
        let c = [0.8, 0.2];
        let spec = mbar_spectrum(&AffinityPattern::Identity.matrix(2, 10.0), &c).unwrap();
        assert_eq!(spec.values.len(), 1);
        assert!((spec.values[0] - 2.0 * 0.8 * 0.2 * 10.0).abs() < 1e-12);
        let raw = [1.0 / c[0].sqrt(), -1.0 / c[1].sqrt()];
        let norm = (raw[0] * raw[0] + raw[1] * raw[1]).sqrt();
        // Largest entry of the normalized vector is the second one, so the sign flips.
        let expected = [-raw[0] / norm, -raw[1] / norm];
        for (a, b) in spec.vectors[0].iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mbar_matches_brute_force_nonsymmetric() {
        let m = vec![
            vec![5.0, -1.0, 2.0],
            vec![-1.0, 3.0, 0.5],
            vec![2.0, 0.5, -4.0],
        ];
        let c = [0.5, 0.3, 0.2];
        let spec = mbar_spectrum(&m, &c).unwrap();
        // Column sums of (D(c) - ccᵀ)M vanish, and its eigenvalues solve the same
        // characteristic polynomial: check trace and the 2×2 principal-minor sum.
        let mbar: Vec<Vec<f64>> = (0..3)
            .map(|a| {
                (0..3)
                    .map(|b| {
                        (0..3)
                            .map(|d| ((a == d) as u8 as f64 * c[a] - c[a] * c[d]) * m[d][b])
                            .sum()
                    })
                    .collect()
            })
            .collect();
        for b in 0..3 {
            assert!((0..3).map(|a| mbar[a][b]).sum::<f64>().abs() < 1e-12);
        }
        let trace: f64 = (0..3).map(|a| mbar[a][a]).sum();
        let minors: f64 = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .map(|&(i, j)| mbar[i][i] * mbar[j][j] - mbar[i][j] * mbar[j][i])
            .sum();
        assert_eq!(spec.values.len(), 2);
        assert!((spec.values.iter().sum::<f64>() - trace).abs() < 1e-10);
        assert!((spec.values[0] * spec.values[1] - minors).abs() < 1e-10);
    }

    #[test]
    fn below_threshold_emits_nothing() {
        let mu = WeightMeasure::new(vec![(0.1, 0.75), (0.5, 0.25)]).unwrap();
        let m = AffinityPattern::Identity.matrix(3, 6.0);
        let r = predict_spikes(&mu, 0.07, &m, &[1.0 / 3.0; 3]).unwrap();
        assert!(r.spikes.is_empty());
        assert_eq!(r.subcritical.len(), 2);
    }

    #[test]
    fn spike_solves_its_equation() {
        let mu = WeightMeasure::new(vec![(0.1, 0.75), (0.5, 0.25)]).unwrap();
        let m = AffinityPattern::Identity.matrix(3, 30.0);
        let r = predict_spikes(&mu, 0.07, &m, &[1.0 / 3.0; 3]).unwrap();
        assert_eq!(r.spikes.len(), 2);
        for s in &r.spikes {
            let sol = solve_fixed_point(&mu, 0.07, s.rho).unwrap();
            assert!((sol.e2 + 1.0 / s.lambda).abs() < 1e-10);
            assert!(s.rho > r.edge.s_plus);
            assert!(s.informative);
        }
    }

    #[test]
    fn negative_eigenvalue_gives_negative_spike() {
        let mu = WeightMeasure::new(vec![(0.3, 0.5), (0.6, 0.5)]).unwrap();
        let m = AffinityPattern::Identity.matrix(2, -40.0);
        let r = predict_spikes(&mu, 0.5, &m, &[0.5, 0.5]).unwrap();
        assert_eq!(r.spikes.len(), 1);
        let s = &r.spikes[0];
        assert!(s.lambda < 0.0 && s.rho < -r.edge.s_plus);
        let pos = predict_spikes(
            &mu,
            0.5,
            &AffinityPattern::Identity.matrix(2, 40.0),
            &[0.5, 0.5],
        )
        .unwrap();
        assert!((pos.spikes[0].rho + s.rho).abs() < 1e-9);
    }

    #[test]
    fn single_atom_theta_is_informative() {
        let mu = WeightMeasure::point(0.5).unwrap();
        let r = predict_spikes(
            &mu,
            0.5,
            &AffinityPattern::Identity.matrix(2, 20.0),
            &[0.5, 0.5],
        )
        .unwrap();
        assert!(r.spikes[0].informative);
    }

    #[test]
    fn phase_ratio_exceeds_one_above_threshold() {
        let mu = WeightMeasure::new(vec![(0.1, 0.75), (0.5, 0.25)]).unwrap();
        let edge = support_edge(&mu, 0.25).unwrap();
        assert_eq!(phase_ratio(&mu, 0.25, edge.tau * 0.9, &edge).unwrap(), 1.0);
        assert!(phase_ratio(&mu, 0.25, edge.tau * 1.5, &edge).unwrap() > 1.0);
    }
}
