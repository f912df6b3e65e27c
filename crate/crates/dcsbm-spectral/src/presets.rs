//! Named experiment settings: model parameters, the swept variable, and the
//! methods compared at each grid point.

use serde::{Deserialize, Serialize};

use crate::cluster::{AlphaMode, DetectConfig, InitMode, Method};
use crate::graph::{AffinityPattern, DcsbmParams, WeightLaw};
use crate::{Error, Result};

/// Names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 9] = [
    "fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9",
];

/// Variable on the x-axis of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sweep {
    /// Affinity amplitude `Δ`.
    Delta,
    /// Location of the second weight atom, with the affinity amplitude fixed.
    SecondAtom { delta: f64 },
}

impl Sweep {
    pub fn label(&self) -> &'static str {
        match self {
            Sweep::Delta => "delta",
            Sweep::SecondAtom { .. } => "q2",
        }
    }
}

/// Quality score recorded per run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    /// Chance-corrected agreement.
    Overlap,
    /// Best matching fraction of correctly labeled nodes.
    CorrectRate,
}

/// One compared method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    /// CSV column name.
    pub label: String,
    pub method: Method,
    pub alpha: AlphaMode,
    pub init: InitMode,
}

impl MethodSpec {
    pub fn l_alpha(alpha: AlphaMode) -> Self {
        let label = match alpha {
            AlphaMode::Fixed(a) => format!("alpha={a}"),
            AlphaMode::Opt => "alpha=opt".to_string(),
        };
        MethodSpec {
            label,
            method: Method::LAlpha,
            alpha,
            init: InitMode::Random,
        }
    }

    pub fn bethe_hessian() -> Self {
        MethodSpec {
            label: "bethe_hessian".to_string(),
            method: Method::BetheHessian,
            alpha: AlphaMode::Fixed(0.0),
            init: InitMode::Random,
        }
    }

    fn with_init(alpha: f64, label: &str, init: InitMode) -> Self {
        MethodSpec {
            label: label.to_string(),
            method: Method::LAlpha,
            alpha: AlphaMode::Fixed(alpha),
            init,
        }
    }

    /// Detection settings for this method.
    pub fn config(&self, k: usize, seed: u64) -> DetectConfig {
        DetectConfig {
            alpha: self.alpha,
            method: self.method,
            init: self.init.clone(),
            regularize: self.method == Method::LAlpha,
            seed,
            ..DetectConfig::new(k)
        }
    }
}

/// A reproducible experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub n: usize,
    pub proportions: Vec<f64>,
    pub weight_law: WeightLaw,
    pub pattern: AffinityPattern,
    /// Amplitude used by single-point presets.
    pub delta: f64,
    pub sweep: Sweep,
    pub grid: Vec<f64>,
    pub methods: Vec<MethodSpec>,
    pub metric: Metric,
    /// Exponents of theoretical curves.
    pub theory_alphas: Vec<AlphaMode>,
}

fn range(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step).round() as usize;
    (0..=count).map(|i| lo + step * i as f64).collect()
}

fn standard_methods() -> Vec<MethodSpec> {
    let mut m: Vec<MethodSpec> = [0.0, 0.5, 1.0]
        .iter()
        .map(|&a| MethodSpec::l_alpha(AlphaMode::Fixed(a)))
        .collect();
    m.push(MethodSpec::l_alpha(AlphaMode::Opt));
    m.push(MethodSpec::bethe_hessian());
    m
}

fn standard_alphas() -> Vec<AlphaMode> {
    let mut a: Vec<AlphaMode> = [0.0, 0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|&x| AlphaMode::Fixed(x))
        .collect();
    a.push(AlphaMode::Opt);
    a
}

fn two_atoms(q1: f64, q2: f64) -> WeightLaw {
    WeightLaw::Discrete {
        atoms: vec![(q1, 0.75), (q2, 0.25)],
    }
}

impl Preset {
    pub fn k(&self) -> usize {
        self.proportions.len()
    }

    /// Model parameters at grid value `x`.
    pub fn params_at(&self, x: f64) -> DcsbmParams {
        let (delta, law) = match self.sweep {
            Sweep::Delta => (x, self.weight_law.clone()),
            Sweep::SecondAtom { delta } => {
                let q1 = match &self.weight_law {
                    WeightLaw::Discrete { atoms } => atoms[0].0,
                    WeightLaw::PowerLaw { lo, .. } => *lo,
                };
                let law = if x == q1 {
                    WeightLaw::point(q1)
                } else {
                    two_atoms(q1, x)
                };
                (delta, law)
            }
        };
        DcsbmParams {
            n: self.n,
            proportions: self.proportions.clone(),
            affinity: self.pattern.matrix(self.k(), delta),
            weight_law: law,
        }
    }

    /// Model parameters at the preset's single-point amplitude.
    pub fn params(&self) -> DcsbmParams {
        match self.sweep {
            Sweep::Delta => self.params_at(self.delta),
            Sweep::SecondAtom { .. } => {
                let mut p = self.params_at(0.0);
                p.weight_law = self.weight_law.clone();
                p
            }
        }
    }
}

/// Looks up a named preset.
pub fn preset(name: &str) -> Result<Preset> {
    let third = vec![1.0 / 3.0; 3];
    let fig5_law = two_atoms(0.1, 0.5);
    let p = match name {
        "fig1" | "fig3" => Preset {
            name: if name == "fig1" { "fig1" } else { "fig3" },
            description: "three unequal classes, strong affinity; 2-D eigenvector scatter",
            n: 2000,
            proportions: vec![0.25, 0.25, 0.5],
            weight_law: fig5_law,
            pattern: AffinityPattern::Identity,
            delta: 100.0,
            sweep: Sweep::Delta,
            grid: vec![100.0],
            methods: if name == "fig1" {
                vec![MethodSpec::l_alpha(AlphaMode::Fixed(0.0))]
            } else {
                vec![MethodSpec::l_alpha(AlphaMode::Opt)]
            },
            metric: Metric::Overlap,
            theory_alphas: vec![],
        },
        "fig2" => Preset {
            name: "fig2",
            description: "eigenvalue histogram of the fully normalized operator",
            n: 2000,
            proportions: vec![0.3, 0.3, 0.4],
            weight_law: WeightLaw::Discrete {
                atoms: vec![(0.4, 0.5), (0.9, 0.5)],
            },
            pattern: AffinityPattern::Explicit {
                matrix: vec![
                    vec![3.0, -1.0, -1.0],
                    vec![-1.0, 3.0, -1.0],
                    vec![-1.0, -1.0, 3.0],
                ],
            },
            delta: 4.0,
            sweep: Sweep::Delta,
            grid: vec![4.0],
            methods: vec![MethodSpec::l_alpha(AlphaMode::Fixed(1.0))],
            metric: Metric::Overlap,
            theory_alphas: vec![AlphaMode::Fixed(1.0)],
        },
        "fig4" => Preset {
            name: "fig4",
            description: "predicted top eigenvalue over bulk edge against the effective affinity",
            n: 3000,
            proportions: third,
            weight_law: fig5_law,
            pattern: AffinityPattern::Identity,
            delta: 30.0,
            sweep: Sweep::Delta,
            grid: range(10.0, 150.0, 2.0),
            methods: vec![],
            metric: Metric::Overlap,
            theory_alphas: standard_alphas(),
        },
        "fig5" => Preset {
            name: "fig5",
            description: "overlap against affinity amplitude, two-atom weights",
            n: 3000,
            proportions: third,
            weight_law: fig5_law,
            pattern: AffinityPattern::Identity,
            delta: 30.0,
            sweep: Sweep::Delta,
            grid: range(5.0, 50.0, 2.5),
            methods: standard_methods(),
            metric: Metric::Overlap,
            theory_alphas: vec![],
        },
        "fig6" => Preset {
            name: "fig6",
            description: "overlap against the high weight, contrast affinity",
            n: 3000,
            proportions: third,
            weight_law: fig5_law,
            pattern: AffinityPattern::Contrast,
            delta: 10.0,
            sweep: Sweep::SecondAtom { delta: 10.0 },
            grid: range(0.1, 0.9, 0.05),
            methods: standard_methods(),
            metric: Metric::Overlap,
            theory_alphas: vec![],
        },
        "fig7" => Preset {
            name: "fig7",
            description: "overlap against affinity amplitude, power-law weights",
            n: 3000,
            proportions: third,
            weight_law: WeightLaw::PowerLaw {
                exponent: 3.0,
                lo: 0.05,
                hi: 0.3,
            },
            pattern: AffinityPattern::Identity,
            delta: 80.0,
            sweep: Sweep::Delta,
            grid: range(10.0, 150.0, 10.0),
            methods: standard_methods(),
            metric: Metric::Overlap,
            theory_alphas: vec![],
        },
        "fig8" => Preset {
            name: "fig8",
            description: "correct rate of EM under theory, oracle and random starts",
            n: 4000,
            proportions: vec![0.8, 0.2],
            weight_law: two_atoms(0.2, 0.8),
            pattern: AffinityPattern::Identity,
            delta: 15.0,
            sweep: Sweep::Delta,
            grid: range(0.5, 19.5, 1.0),
            methods: vec![
                MethodSpec::with_init(
                    0.5,
                    "theory_init",
                    InitMode::Theory {
                        proportions: Some(vec![0.8, 0.2]),
                        vectors: None,
                    },
                ),
                MethodSpec::with_init(0.5, "oracle_init", InitMode::Oracle),
                MethodSpec::with_init(0.5, "random_init", InitMode::Random),
            ],
            metric: Metric::CorrectRate,
            theory_alphas: vec![AlphaMode::Fixed(0.5)],
        },
        "fig9" => Preset {
            name: "fig9",
            description: "theoretical correct rate against affinity amplitude, uniform weights",
            n: 4000,
            proportions: vec![0.8, 0.2],
            weight_law: WeightLaw::uniform(0.2, 0.8),
            pattern: AffinityPattern::Identity,
            delta: 10.0,
            sweep: Sweep::Delta,
            grid: range(0.5, 20.0, 0.5),
            methods: vec![],
            metric: Metric::CorrectRate,
            theory_alphas: standard_alphas(),
        },
        other => {
            return Err(Error::InvalidParams(format!(
                "unknown preset {other:?}; expected one of {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(p)
}
