//! Parsers for the compact model specifications accepted on the command line.

use anyhow::{anyhow, bail, Context, Result};
use dcsbm_spectral::cluster::AlphaMode;
use dcsbm_spectral::graph::{AffinityPattern, WeightLaw};

fn number(s: &str) -> Result<f64> {
    let s = s.trim();
    s.parse::<f64>()
        .with_context(|| format!("not a number: {s:?}"))
}

fn numbers(s: &str, sep: char) -> Result<Vec<f64>> {
    s.split(sep).map(number).collect()
}

/// Class proportions: `uniform` (needs `k`) or a comma list such as `0.8,0.2`.
pub fn proportions(spec: &str, k: Option<usize>) -> Result<Vec<f64>> {
    if spec.trim() == "uniform" {
        let k = k.ok_or_else(|| anyhow!("--c uniform needs --k"))?;
        if k == 0 {
            bail!("--k must be positive");
        }
        return Ok(vec![1.0 / k as f64; k]);
    }
    let c = numbers(spec, ',')?;
    if let Some(k) = k {
        if c.len() != k {
            bail!("--c has {} entries but --k is {k}", c.len());
        }
    }
    Ok(c)
}

/// Affinity matrix: `delta:Δ` for `ΔI`, `contrast:Δ` for `Δ` on the diagonal and
/// `-Δ` off it, or `matrix:r1;r2;...` with comma-separated rows.
pub fn affinity(spec: &str, k: usize) -> Result<Vec<Vec<f64>>> {
    let (pattern, scale) = affinity_pattern(spec)?;
    Ok(pattern.matrix(k, scale))
}

/// Affinity pattern and scale from the same syntax as [`affinity`].
pub fn affinity_pattern(spec: &str) -> Result<(AffinityPattern, f64)> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| anyhow!("affinity {spec:?}: expected kind:value"))?;
    match kind.trim() {
        "delta" => Ok((AffinityPattern::Identity, number(rest)?)),
        "contrast" => Ok((AffinityPattern::Contrast, number(rest)?)),
        "matrix" => {
            let matrix = rest
                .split(';')
                .map(|row| numbers(row, ','))
                .collect::<Result<Vec<_>>>()?;
            Ok((AffinityPattern::Explicit { matrix }, 1.0))
        }
        other => bail!("unknown affinity kind {other:?}; expected delta, contrast or matrix"),
    }
}

/// Weight law: `mass@q` pairs (`0.75@0.1,0.25@0.5`), `point:q`,
/// `uniform:lo:hi` or `powerlaw:exponent:lo:hi`.
pub fn weight_law(spec: &str) -> Result<WeightLaw> {
    let spec = spec.trim();
    let law = if let Some(rest) = spec.strip_prefix("powerlaw:") {
        let v = numbers(rest, ':')?;
        let [exponent, lo, hi] = v[..] else {
            bail!("powerlaw needs exponent:lo:hi, got {rest:?}")
        };
        WeightLaw::PowerLaw { exponent, lo, hi }
    } else if let Some(rest) = spec.strip_prefix("uniform:") {
        let v = numbers(rest, ':')?;
        let [lo, hi] = v[..] else {
            bail!("uniform needs lo:hi, got {rest:?}")
        };
        WeightLaw::uniform(lo, hi)
    } else if let Some(rest) = spec.strip_prefix("point:") {
        WeightLaw::point(number(rest)?)
    } else {
        let atoms = spec
            .split(',')
            .map(|atom| {
                let (mass, q) = atom
                    .split_once('@')
                    .ok_or_else(|| anyhow!("weight atom {atom:?}: expected mass@q"))?;
                Ok((number(q)?, number(mass)?))
            })
            .collect::<Result<Vec<_>>>()?;
        WeightLaw::Discrete { atoms }
    };
    law.validate()?;
    Ok(law)
}

/// `opt` or a number in `[0, 1]`.
pub fn alpha(spec: &str) -> Result<AlphaMode> {
    if spec.trim() == "opt" {
        return Ok(AlphaMode::Opt);
    }
    let a = number(spec)?;
    if !(0.0..=1.0).contains(&a) {
        bail!("alpha {a} outside [0, 1]");
    }
    Ok(AlphaMode::Fixed(a))
}

/// Comma list of [`alpha`] values.
pub fn alphas(spec: &str) -> Result<Vec<AlphaMode>> {
    spec.split(',').map(alpha).collect()
}

/// `lo:hi:step` inclusive grid, or a comma list.
pub fn grid(spec: &str) -> Result<Vec<f64>> {
    if spec.contains(':') {
        let v = numbers(spec, ':')?;
        let [lo, hi, step] = v[..] else {
            bail!("grid needs lo:hi:step, got {spec:?}")
        };
        if !(step > 0.0) || hi < lo {
            bail!("grid {spec:?} is empty");
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize;
        return Ok((0..=count).map(|i| lo + step * i as f64).collect());
    }
    numbers(spec, ',')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_proportions() {
        assert_eq!(proportions("uniform", Some(4)).unwrap(), vec![0.25; 4]);
        assert!(proportions("uniform", None).is_err());
        assert_eq!(proportions("0.8,0.2", Some(2)).unwrap(), vec![0.8, 0.2]);
        assert!(proportions("0.8,0.2", Some(3)).is_err());
    }

    #[test]
    fn affinity_kinds() {
        assert_eq!(
            affinity("delta:30", 2).unwrap(),
            vec![vec![30.0, 0.0], vec![0.0, 30.0]]
        );
        assert_eq!(
            affinity("contrast:10", 2).unwrap(),
            vec![vec![10.0, -10.0], vec![-10.0, 10.0]]
        );
        assert_eq!(
            affinity("matrix:12,-4;-4,12", 2).unwrap(),
            vec![vec![12.0, -4.0], vec![-4.0, 12.0]]
        );
        assert!(affinity("diag:3", 2).is_err());
    }

    #[test]
    fn weight_laws() {
        assert_eq!(
            weight_law("0.75@0.1,0.25@0.5").unwrap(),
            WeightLaw::Discrete {
                atoms: vec![(0.1, 0.75), (0.5, 0.25)]
            }
        );
        assert_eq!(
            weight_law("powerlaw:3:0.05:0.3").unwrap(),
            WeightLaw::PowerLaw {
                exponent: 3.0,
                lo: 0.05,
                hi: 0.3
            }
        );
        assert_eq!(
            weight_law("uniform:0.2:0.8").unwrap(),
            WeightLaw::uniform(0.2, 0.8)
        );
        assert_eq!(weight_law("point:0.5").unwrap(), WeightLaw::point(0.5));
        assert!(weight_law("0.5@0.1").is_err());
        assert!(weight_law("powerlaw:3:0.05").is_err());
    }

    #[test]
    fn alpha_values() {
        assert_eq!(alpha("opt").unwrap(), AlphaMode::Opt);
        assert_eq!(alpha("0.25").unwrap(), AlphaMode::Fixed(0.25));
        assert!(alpha("1.5").is_err());
        assert_eq!(
            alphas("0,opt").unwrap(),
            vec![AlphaMode::Fixed(0.0), AlphaMode::Opt]
        );
    }

    #[test]
    fn grids() {
        assert_eq!(grid("5:15:5").unwrap(), vec![5.0, 10.0, 15.0]);
        assert_eq!(grid("1,2.5").unwrap(), vec![1.0, 2.5]);
        assert!(grid("5:1:1").is_err());
        assert_eq!(grid("0.1:0.9:0.05").unwrap().len(), 17);
    }
}
