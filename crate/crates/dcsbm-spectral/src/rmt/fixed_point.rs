use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::graph::WeightMeasure;
use crate::{Error, Result};

/// Damped fixed-point iteration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointConfig {
    /// Weight of the new iterate, `E ← (1-γ) E + γ F(E)`.
    pub damping: f64,
    /// Relative step size declaring convergence.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            damping: 0.5,
            tol: 1e-10,
            max_iter: 2000,
        }
    }
}

/// `(E₁, E₂, E₀)` at a real point, with convergence status.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StieltjesSolution {
    pub z: f64,
    pub e1: f64,
    pub e2: f64,
    pub e0: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Atom data with the α-dependent powers `q^{1-2α}`, `q^{2-2α}` precomputed.
#[derive(Debug, Clone)]
pub(crate) struct Kernel {
    pub(crate) q: Vec<f64>,
    pub(crate) p: Vec<f64>,
    pub(crate) a1: Vec<f64>,
    pub(crate) a2: Vec<f64>,
    pub(crate) alpha: f64,
}

/// Partial derivatives of the fixed-point residual at `(E₁, E₂, z)`.
pub(crate) struct Linearization {
    /// `∂F/∂E - I`.
    pub(crate) jac: [[f64; 2]; 2],
    /// `∂F/∂z`.
    pub(crate) dz: [f64; 2],
    /// Gradient of `det(∂F/∂E - I)` with respect to `(E₁, E₂, z)`.
    pub(crate) ddet: [f64; 3],
}

impl Kernel {
    pub(crate) fn new(measure: &WeightMeasure, alpha: f64) -> Self {
        let atoms = measure.atoms();
        Kernel {
            q: atoms.iter().map(|a| a.0).collect(),
            p: atoms.iter().map(|a| a.1).collect(),
            a1: atoms.iter().map(|a| a.0.powf(1.0 - 2.0 * alpha)).collect(),
            a2: atoms.iter().map(|a| a.0.powf(2.0 - 2.0 * alpha)).collect(),
            alpha,
        }
    }

    #[inline]
    pub(crate) fn g(&self, j: usize, e1: f64, e2: f64, z: f64) -> f64 {
        1.0 / (-z - e1 * self.a1[j] + e2 * self.a2[j])
    }

    /// `(∫ q^{1-2α} g dμ, ∫ q^{2-2α} g dμ)`.
    pub(crate) fn map(&self, e1: f64, e2: f64, z: f64) -> (f64, f64) {
        let mut f1 = 0.0;
        let mut f2 = 0.0;
        for j in 0..self.p.len() {
            let g = self.g(j, e1, e2, z);
            f1 += self.p[j] * self.a1[j] * g;
            f2 += self.p[j] * self.a2[j] * g;
        }
        (f1, f2)
    }

    /// `∫ q^{a - 2bα} g dμ` at a solution.
    pub(crate) fn moment(&self, a: f64, b: f64, e1: f64, e2: f64, z: f64) -> f64 {
        let ex = a - 2.0 * b * self.alpha;
        (0..self.p.len())
            .map(|j| self.p[j] * self.q[j].powf(ex) * self.g(j, e1, e2, z))
            .sum()
    }

    pub(crate) fn linearize(&self, e1: f64, e2: f64, z: f64) -> Linearization {
        // s_kl = Σ p a_k a_l g², t_kl^x = Σ p a_k a_l g³ (∂g/∂x)/g².
        let mut s = [0.0; 3];
        let mut dz = [0.0; 2];
        let mut t = [[0.0; 3]; 3];
        for j in 0..self.p.len() {
            let g = self.g(j, e1, e2, z);
            let (a1, a2, p) = (self.a1[j], self.a2[j], self.p[j]);
            let g2 = g * g;
            let g3 = g2 * g;
            let prods = [a1 * a1, a1 * a2, a2 * a2];
            let dirs = [a1, -a2, 1.0];
            for (k, pr) in prods.iter().enumerate() {
                s[k] += p * pr * g2;
                for (x, d) in dirs.iter().enumerate() {
                    t[k][x] += 2.0 * p * pr * d * g3;
                }
            }
            dz[0] += p * a1 * g2;
            dz[1] += p * a2 * g2;
        }
        let jac = [[s[0] - 1.0, -s[1]], [s[1], -s[2] - 1.0]];
        let mut ddet = [0.0; 3];
        for x in 0..3 {
            ddet[x] = t[0][x] * (-s[2] - 1.0) + (s[0] - 1.0) * (-t[2][x]) + 2.0 * s[1] * t[1][x];
        }
        Linearization { jac, dz, ddet }
    }

    /// Whether a real solution lies on the Stieltjes branch: every `g_j` has
    /// the sign of `-z` and the linearization has not crossed a fold.
    pub(crate) fn on_branch(&self, e1: f64, e2: f64, z: f64) -> bool {
        let lin = self.linearize(e1, e2, z);
        let det = lin.jac[0][0] * lin.jac[1][1] - lin.jac[0][1] * lin.jac[1][0];
        det > 0.0 && (0..self.p.len()).all(|j| self.g(j, e1, e2, z) * z < 0.0)
    }

    /// Newton refinement of `E = F(E)` at fixed `z`.
    pub(crate) fn newton(
        &self,
        mut e1: f64,
        mut e2: f64,
        z: f64,
        steps: usize,
    ) -> Option<(f64, f64)> {
        for _ in 0..steps {
            let (f1, f2) = self.map(e1, e2, z);
            let (r1, r2) = (f1 - e1, f2 - e2);
            if !(r1.is_finite() && r2.is_finite()) {
                return None;
            }
            let scale = e1.abs().max(e2.abs()).max(1e-300);
            if r1.abs().max(r2.abs()) <= 1e-15 * scale {
                return Some((e1, e2));
            }
            let j = self.linearize(e1, e2, z).jac;
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            e1 -= (j[1][1] * r1 - j[0][1] * r2) / det;
            e2 -= (-j[1][0] * r1 + j[0][0] * r2) / det;
        }
        let (f1, f2) = self.map(e1, e2, z);
        let scale = e1.abs().max(e2.abs()).max(1e-300);
        ((f1 - e1).abs().max((f2 - e2).abs()) <= 1e-12 * scale).then_some((e1, e2))
    }

    pub(crate) fn solve(&self, z: f64, cfg: &FixedPointConfig) -> StieltjesSolution {
        let start = if z < 0.0 { 1.0 } else { -1.0 };
        let (mut e1, mut e2) = (start, start);
        let mut iterations = 0;
        let mut finite = true;
        for it in 1..=cfg.max_iter {
            iterations = it;
            let (f1, f2) = self.map(e1, e2, z);
            let n1 = (1.0 - cfg.damping) * e1 + cfg.damping * f1;
            let n2 = (1.0 - cfg.damping) * e2 + cfg.damping * f2;
            if !(n1.is_finite() && n2.is_finite()) {
                finite = false;
                break;
            }
            let step = (n1 - e1).abs().max((n2 - e2).abs());
            let size = n1.abs().max(n2.abs()).max(1e-300);
            e1 = n1;
            e2 = n2;
            if step < cfg.tol * size {
                break;
            }
        }
        // Newton either polishes a converged iterate or rescues a slow one near the edge.
        let mut result = None;
        if finite {
            if let Some((a, b)) = self.newton(e1, e2, z, 50) {
                if self.on_branch(a, b, z) {
                    result = Some((a, b));
                }
            }
        }
        match result {
            Some((a, b)) => StieltjesSolution {
                z,
                e1: a,
                e2: b,
                e0: self.moment(0.0, 0.0, a, b, z),
                converged: true,
                iterations,
            },
            None => StieltjesSolution {
                z,
                e1,
                e2,
                e0: f64::NAN,
                converged: false,
                iterations,
            },
        }
    }
}

/// Solves `E₁ = e₁₁(z)`, `E₂ = e₂₁(z)` at a real point with default settings.
///
/// `converged = false` marks `z` as inside the bulk.
pub fn solve_fixed_point(measure: &WeightMeasure, alpha: f64, z: f64) -> Result<StieltjesSolution> {
    solve_fixed_point_with(measure, alpha, z, &FixedPointConfig::default())
}

/// As [`solve_fixed_point`] with explicit iteration settings.
pub fn solve_fixed_point_with(
    measure: &WeightMeasure,
    alpha: f64,
    z: f64,
    cfg: &FixedPointConfig,
) -> Result<StieltjesSolution> {
    if measure.atoms().is_empty() {
        return Err(Error::InvalidMeasure("no atoms".into()));
    }
    Ok(Kernel::new(measure, alpha).solve(z, cfg))
}

fn require(sol: &StieltjesSolution) -> Result<()> {
    if sol.converged {
        Ok(())
    } else {
        Err(Error::NotConverged(sol.z))
    }
}

/// `e_ab(z) = ∫ q^{a-2bα} / (-z - E₁ q^{1-2α} + E₂ q^{2-2α}) dμ`.
pub fn e_moment(
    measure: &WeightMeasure,
    alpha: f64,
    a: i32,
    b: i32,
    sol: &StieltjesSolution,
) -> Result<f64> {
    require(sol)?;
    Ok(Kernel::new(measure, alpha).moment(a as f64, b as f64, sol.e1, sol.e2, sol.z))
}

fn product_moment(
    measure: &WeightMeasure,
    alpha: f64,
    a: i32,
    b: i32,
    sol1: &StieltjesSolution,
    sol2: &StieltjesSolution,
    first_power: i32,
) -> Result<f64> {
    require(sol1)?;
    require(sol2)?;
    let k = Kernel::new(measure, alpha);
    let ex = a as f64 - 2.0 * b as f64 * alpha;
    Ok((0..k.p.len())
        .map(|j| {
            let g1 = k.g(j, sol1.e1, sol1.e2, sol1.z);
            let g2 = k.g(j, sol2.e1, sol2.e2, sol2.z);
            k.p[j] * k.q[j].powf(ex) * g1.powi(first_power) * g2
        })
        .sum())
}

/// `e_{ab;2}(z, z̃)`: one denominator per argument.
pub fn e_moment2(
    measure: &WeightMeasure,
    alpha: f64,
    a: i32,
    b: i32,
    sol1: &StieltjesSolution,
    sol2: &StieltjesSolution,
) -> Result<f64> {
    product_moment(measure, alpha, a, b, sol1, sol2, 1)
}

/// `e_{ab;3}(z, z̃)`: the first denominator squared.
pub fn e_moment3(
    measure: &WeightMeasure,
    alpha: f64,
    a: i32,
    b: i32,
    sol1: &StieltjesSolution,
    sol2: &StieltjesSolution,
) -> Result<f64> {
    product_moment(measure, alpha, a, b, sol1, sol2, 2)
}

/// `(E₁, E₂, E₀)` at a point of the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexSolution {
    pub z: Complex64,
    pub e1: Complex64,
    pub e2: Complex64,
    pub e0: Complex64,
    pub converged: bool,
    pub iterations: usize,
}

/// Damped fixed point for `Im z > 0`.
pub fn solve_fixed_point_complex(
    measure: &WeightMeasure,
    alpha: f64,
    z: Complex64,
    cfg: &FixedPointConfig,
) -> Result<ComplexSolution> {
    if !(z.im > 0.0) {
        return Err(Error::InvalidParams(format!(
            "complex query {z} must have Im z > 0"
        )));
    }
    let k = Kernel::new(measure, alpha);
    let g = |e1: Complex64, e2: Complex64, j: usize| 1.0 / (-z - e1 * k.a1[j] + e2 * k.a2[j]);
    let mut e1 = Complex64::new(0.0, 1.0);
    let mut e2 = Complex64::new(0.0, 1.0);
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=cfg.max_iter * 10 {
        iterations = it;
        let mut f1 = Complex64::new(0.0, 0.0);
        let mut f2 = Complex64::new(0.0, 0.0);
        for j in 0..k.p.len() {
            let gj = g(e1, e2, j);
            f1 += k.p[j] * k.a1[j] * gj;
            f2 += k.p[j] * k.a2[j] * gj;
        }
        let n1 = e1 * (1.0 - cfg.damping) + f1 * cfg.damping;
        let n2 = e2 * (1.0 - cfg.damping) + f2 * cfg.damping;
        let step = (n1 - e1).norm().max((n2 - e2).norm());
        let size = n1.norm().max(n2.norm()).max(1e-300);
        e1 = n1;
        e2 = n2;
        if step < cfg.tol * size {
            converged = true;
            break;
        }
    }
    let e0 = (0..k.p.len()).map(|j| k.p[j] * g(e1, e2, j)).sum();
    Ok(ComplexSolution {
        z,
        e1,
        e2,
        e0,
        converged,
        iterations,
    })
}

/// Limiting eigenvalue density at `x`, `Im E₀(x + iη) / π`.
pub fn spectral_density(measure: &WeightMeasure, alpha: f64, x: f64, eta: f64) -> Result<f64> {
    let sol = solve_fixed_point_complex(
        measure,
        alpha,
        Complex64::new(x, eta),
        &FixedPointConfig::default(),
    )?;
    Ok(sol.e0.im / std::f64::consts::PI)
}
