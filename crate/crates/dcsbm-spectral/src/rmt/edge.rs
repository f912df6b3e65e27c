use serde::{Deserialize, Serialize};

use super::fixed_point::{FixedPointConfig, Kernel};
use crate::graph::WeightMeasure;
use crate::{Error, Result};

/// Settings for locating the bulk edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeConfig {
    pub fixed_point: FixedPointConfig,
    /// Smallest point probed while marching down towards the bulk.
    pub floor: f64,
    /// Absolute width of the final bisection bracket.
    pub tol: f64,
    /// Ratio between successive probes while marching down.
    pub march: f64,
    /// Relative offset from the edge used when the fold refinement fails.
    pub probe_offset: f64,
    /// Polish the edge with Newton on the fold equations.
    pub refine: bool,
    /// Upper limit of the doubling search for a convergent point.
    pub cap: f64,
}

impl Default for EdgeConfig {
    fn default() -> Self {
        EdgeConfig {
            fixed_point: FixedPointConfig::default(),
            floor: 1e-3,
            tol: 1e-4,
            march: 0.9,
            probe_offset: 1e-3,
            refine: true,
            cap: 1e8,
        }
    }
}

/// Right edge of the limiting spectrum and the detectability threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportEstimate {
    pub alpha: f64,
    /// The bulk is `[-s_plus, s_plus]`.
    pub s_plus: f64,
    /// Smallest `|λ(M̄)|` that produces an isolated eigenvalue.
    pub tau: f64,
    /// `(E₁, E₂)` at the edge.
    pub e1: f64,
    pub e2: f64,
    /// Whether the edge was polished on the fold equations rather than extrapolated.
    pub refined: bool,
}

impl SupportEstimate {
    pub fn support(&self) -> (f64, f64) {
        (-self.s_plus, self.s_plus)
    }
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&a);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut x = [0.0; 3];
    for (c, xc) in x.iter_mut().enumerate() {
        let mut m = a;
        for r in 0..3 {
            m[r][c] = b[r];
        }
        *xc = det(&m) / d;
    }
    Some(x)
}

/// Newton on `E = F(E, z)`, `det(∂F/∂E - I) = 0` for `(E₁, E₂, z)`.
fn fold_newton(k: &Kernel, mut x: [f64; 3]) -> Option<[f64; 3]> {
    for _ in 0..100 {
        let (f1, f2) = k.map(x[0], x[1], x[2]);
        let lin = k.linearize(x[0], x[1], x[2]);
        let j = lin.jac;
        let r = [f1 - x[0], f2 - x[1], j[0][0] * j[1][1] - j[0][1] * j[1][0]];
        if r.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let a = [
            [j[0][0], j[0][1], lin.dz[0]],
            [j[1][0], j[1][1], lin.dz[1]],
            [lin.ddet[0], lin.ddet[1], lin.ddet[2]],
        ];
        let step = solve3(a, r)?;
        for i in 0..3 {
            x[i] -= step[i];
        }
        let size = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if step.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= 1e-14 * size {
            return Some(x);
        }
    }
    None
}

/// Locates the bulk edge for a weight measure and normalization exponent.
pub fn support_edge(measure: &WeightMeasure, alpha: f64) -> Result<SupportEstimate> {
    support_edge_with(measure, alpha, &EdgeConfig::default())
}

/// As [`support_edge`] with explicit settings.
///
/// Doubles from `z = 1` until the fixed point converges, marches down by a
/// constant ratio to the first non-convergent point, then bisects. Marching
/// from the right keeps the search on the outermost edge when the bulk has gaps.
pub fn support_edge_with(
    measure: &WeightMeasure,
    alpha: f64,
    cfg: &EdgeConfig,
) -> Result<SupportEstimate> {
    if measure.atoms().is_empty() {
        return Err(Error::InvalidMeasure("no atoms".into()));
    }
    let k = Kernel::new(measure, alpha);
    let defined = |z: f64| k.solve(z, &cfg.fixed_point);

    let mut hi = 1.0;
    let mut at_hi = defined(hi);
    while !at_hi.converged {
        hi *= 2.0;
        if hi > cfg.cap {
            return Err(Error::BracketFailure(alpha));
        }
        at_hi = defined(hi);
    }
    let mut lo = 0.0;
    loop {
        let m = hi * cfg.march;
        if m < cfg.floor {
            break;
        }
        let s = defined(m);
        if !s.converged {
            lo = m;
            break;
        }
        hi = m;
        at_hi = s;
    }
    while hi - lo > cfg.tol {
        let m = 0.5 * (lo + hi);
        let s = defined(m);
        if s.converged {
            hi = m;
            at_hi = s;
        } else {
            lo = m;
        }
    }

    if cfg.refine {
        if let Some(x) = fold_newton(&k, [at_hi.e1, at_hi.e2, hi]) {
            let close = (x[2] - hi).abs() <= 0.01 * hi.max(cfg.tol);
            if close && x[1] < 0.0 {
                return Ok(SupportEstimate {
                    alpha,
                    s_plus: x[2],
                    tau: -1.0 / x[1],
                    e1: x[0],
                    e2: x[1],
                    refined: true,
                });
            }
        }
        log::warn!("fold refinement failed at alpha = {alpha}; extrapolating the threshold");
    }

    // E₂ has a square-root singularity at the edge: extrapolate in √δ.
    let d = cfg.probe_offset;
    let far = defined(hi * (1.0 + d));
    let near = defined(hi * (1.0 + d / 2.0));
    if !(far.converged && near.converged) {
        return Err(Error::NotConverged(hi * (1.0 + d / 2.0)));
    }
    let r = std::f64::consts::SQRT_2;
    let e2 = (r * near.e2 - far.e2) / (r - 1.0);
    if !(e2 < 0.0) {
        return Err(Error::NotConverged(hi));
    }
    Ok(SupportEstimate {
        alpha,
        s_plus: hi,
        tau: -1.0 / e2,
        e1: at_hi.e1,
        e2,
        refined: false,
    })
}

/// Grid over the normalization exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    /// Width at which golden-section refinement stops.
    pub refine_tol: f64,
}

impl Default for AlphaGrid {
    fn default() -> Self {
        AlphaGrid {
            lo: 0.0,
            hi: 1.0,
            step: 0.02,
            refine_tol: 1e-3,
        }
    }
}

impl AlphaGrid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| self.lo + i as f64 * self.step)
            .collect()
    }
}

/// Minimizer of the detectability threshold over α.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaOpt {
    pub alpha: f64,
    pub tau: f64,
    /// `(α, τ)` at every grid point that succeeded.
    pub curve: Vec<(f64, f64)>,
    /// The curve is flat, so any α is optimal.
    pub degenerate: bool,
}

/// Grid search for the α minimizing τ, refined by golden section.
///
/// Grid points whose edge search fails are skipped with a warning.
pub fn alpha_opt(measure: &WeightMeasure, grid: &AlphaGrid) -> Result<AlphaOpt> {
    if !(grid.step > 0.0 && grid.hi >= grid.lo) {
        return Err(Error::InvalidParams(format!("bad alpha grid {grid:?}")));
    }
    let tau_at = |a: f64| match support_edge(measure, a) {
        Ok(s) => Some(s.tau),
        Err(e) => {
            log::warn!("skipping alpha = {a}: {e}");
            None
        }
    };
    let curve: Vec<(f64, f64)> = grid
        .points()
        .into_iter()
        .filter_map(|a| tau_at(a).map(|t| (a, t)))
        .collect();
    let (best_idx, &(mut alpha, mut tau)) = curve
        .iter()
        .enumerate()
        .min_by(|x, y| x.1 .1.total_cmp(&y.1 .1))
        .ok_or(Error::BracketFailure(grid.lo))?;
    let max = curve.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let degenerate = max - tau <= 1e-6 * tau;
    if degenerate {
        log::warn!("threshold is flat in alpha; optimum is not identifiable");
        return Ok(AlphaOpt {
            alpha,
            tau,
            curve,
            degenerate,
        });
    }

    let mut a = curve[best_idx.saturating_sub(1)].0;
    let mut b = curve[(best_idx + 1).min(curve.len() - 1)].0;
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let f = |x: f64| tau_at(x).unwrap_or(f64::INFINITY);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > grid.refine_tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let (x, fx) = if fc < fd { (c, fc) } else { (d, fd) };
    if fx < tau {
        alpha = x;
        tau = fx;
    }
    Ok(AlphaOpt {
        alpha,
        tau,
        curve,
        degenerate,
    })
}
