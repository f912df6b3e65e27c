//! Dense symmetric eigensolvers.

use faer::{Col, Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Below this size the Krylov solver is replaced by a full decomposition.
const DENSE_CUTOFF: usize = 400;
/// Krylov dimension cap, unless `10 * count` is larger.
const MAX_KRYLOV_DIM: usize = 600;
/// Lanczos steps between Ritz convergence checks.
const CHECK_EVERY: usize = 20;
/// Ritz residual bound relative to the matrix norm.
const KRYLOV_TOL: f64 = 1e-10;

/// Eigenpair with the eigenvector stored as a plain vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// All eigenvalues in nondecreasing order.
pub fn sym_eigenvalues(a: &Mat<f64>) -> Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))
}

/// Full eigendecomposition, eigenvalues in nondecreasing order.
pub fn sym_eigen(a: &Mat<f64>) -> Result<Vec<EigenPair>> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    Ok((0..a.nrows())
        .map(|k| EigenPair {
            value: s[k],
            vector: (0..a.nrows()).map(|i| u[(i, k)]).collect(),
        })
        .collect())
}

/// The `count` eigenpairs of largest magnitude, sorted by decreasing `|λ|`.
///
/// Large matrices go through Lanczos with full reorthogonalization, growing
/// the Krylov space until the wanted Ritz pairs converge or the dimension cap
/// is hit. Ritz pairs that duplicate an earlier one or fail the residual check
/// are discarded, so fewer than `count` pairs may be returned; eigenvalues
/// packed at a bulk edge are the ones that get dropped.
pub fn top_eigenpairs(a: &Mat<f64>, count: usize) -> Result<Vec<EigenPair>> {
    let n = a.nrows();
    let count = count.min(n);
    if count == 0 {
        return Ok(Vec::new());
    }
    if n <= DENSE_CUTOFF {
        let mut all = sym_eigen(a)?;
        all.sort_by(|x, y| y.value.abs().total_cmp(&x.value.abs()));
        all.truncate(count);
        return Ok(all);
    }
    let scale = norm_estimate(a);
    let (values, vectors) = lanczos(a, count, scale)?;
    let mut out: Vec<EigenPair> = Vec::with_capacity(count);
    for (_, mut v) in values.into_iter().zip(vectors) {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        let av = matvec(a, &v);
        let value = dot(&v, &av);
        let resid = av
            .iter()
            .zip(&v)
            .map(|(x, y)| (x - value * y).powi(2))
            .sum::<f64>()
            .sqrt();
        if resid > 1e-6 * scale {
            continue;
        }
        if out.iter().any(|p| dot(&p.vector, &v).abs() > 0.5) {
            continue;
        }
        out.push(EigenPair { value, vector: v });
    }
    out.sort_by(|x, y| y.value.abs().total_cmp(&x.value.abs()));
    Ok(out)
}

/// Unit vector orthogonal to the first `dim` columns of `basis`, or `None`
/// when they already span the space.
fn fresh_direction(basis: &Mat<f64>, dim: usize, rng: &mut ChaCha8Rng) -> Option<Col<f64>> {
    let n = basis.nrows();
    let mut w = Col::<f64>::from_fn(n, |_| rng.random::<f64>() - 0.5);
    for _ in 0..2 {
        let v = basis.get(.., 0..dim);
        let h: Col<f64> = v.transpose() * &w;
        w -= v * &h;
    }
    let norm = w.norm_l2();
    (norm > 1e-8).then(|| w / norm)
}

/// Top-`count` Ritz pairs by magnitude from a Lanczos run.
fn lanczos(a: &Mat<f64>, count: usize, scale: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.nrows();
    let max_dim = n.min(MAX_KRYLOV_DIM.max(10 * count));
    let first_check = max_dim.min(2 * count + 40);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut basis = Mat::<f64>::zeros(n, max_dim + 1);
    let start = fresh_direction(&basis, 0, &mut rng)
        .ok_or_else(|| Error::Eigen("empty start vector".into()))?;
    basis.col_mut(0).copy_from(&start);
    let mut diag = Vec::with_capacity(max_dim);
    let mut off = Vec::with_capacity(max_dim);
    for j in 0..max_dim {
        let mut w: Col<f64> = a * basis.col(j);
        let mut alpha = 0.0;
        for _ in 0..2 {
            let v = basis.get(.., 0..j + 1);
            let h: Col<f64> = v.transpose() * &w;
            alpha += h[j];
            w -= v * &h;
        }
        diag.push(alpha);
        let dim = j + 1;
        let beta = w.norm_l2();
        let next = if beta > 1e-12 * scale {
            off.push(beta);
            Some(w / beta)
        } else {
            off.push(0.0);
            fresh_direction(&basis, dim, &mut rng)
        };
        let exhausted = next.is_none();
        if let Some(v) = next {
            basis.col_mut(dim).copy_from(&v);
        }
        let check = dim == max_dim
            || exhausted
            || (dim >= first_check && (dim - first_check) % CHECK_EVERY == 0);
        if !check {
            continue;
        }
        let t = Mat::<f64>::from_fn(dim, dim, |r, c| {
            if r == c {
                diag[r]
            } else if r + 1 == c {
                off[r]
            } else if c + 1 == r {
                off[c]
            } else {
                0.0
            }
        });
        let mut ritz = sym_eigen(&t)?;
        ritz.sort_by(|x, y| y.value.abs().total_cmp(&x.value.abs()));
        ritz.truncate(count);
        let coupling = off[dim - 1];
        let converged = ritz
            .iter()
            .all(|p| (coupling * p.vector[dim - 1]).abs() <= KRYLOV_TOL * scale);
        if converged || dim == max_dim || exhausted {
            let v = basis.get(.., 0..dim);
            let vectors = ritz
                .iter()
                .map(|p| {
                    let s = Col::<f64>::from_fn(dim, |r| p.vector[r]);
                    let x: Col<f64> = v * &s;
                    x.iter().copied().collect()
                })
                .collect();
            return Ok((ritz.iter().map(|p| p.value).collect(), vectors));
        }
    }
    unreachable!("the loop returns at the dimension cap")
}

/// Largest `|λ|` of a symmetric matrix.
pub fn spectral_norm(a: &Mat<f64>) -> Result<f64> {
    top_eigenpairs(a, 1)?
        .first()
        .map(|p| p.value.abs())
        .ok_or_else(|| Error::Eigen("no converged eigenpair".into()))
}

pub(crate) fn matvec(a: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let mut y = vec![0.0; n];
    for (j, &xj) in x.iter().enumerate() {
        let col = a.col(j);
        for i in 0..n {
            y[i] += col[i] * xj;
        }
    }
    y
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn norm_estimate(a: &Mat<f64>) -> f64 {
    let n = a.nrows();
    let mut best: f64 = 0.0;
    for j in 0..n {
        let s: f64 = a.col(j).iter().map(|x| x.abs()).sum();
        best = best.max(s);
    }
    best.max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_plus_rank_one(n: usize) -> Mat<f64> {
        Mat::from_fn(
            n,
            n,
            |i, j| if i == j { (i % 7) as f64 * 0.1 } else { 0.0 } + 3.0 / n as f64,
        )
    }

    #[test]
    fn dense_and_krylov_agree() {
        let a = diag_plus_rank_one(600);
        let full = sym_eigenvalues(&a).unwrap();
        let top = top_eigenpairs(&a, 2).unwrap();
        assert!((top[0].value - full[full.len() - 1]).abs() < 1e-9);
        let av = matvec(&a, &top[0].vector);
        for (x, y) in av.iter().zip(&top[0].vector) {
            assert!((x - top[0].value * y).abs() < 1e-8);
        }
    }

    #[test]
    fn spikes_above_a_packed_bulk_match_dense() {
        let n = 1200;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut a = Mat::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let x = if rng.random::<bool>() { 1.0 } else { -1.0 } / (n as f64).sqrt();
                a[(i, j)] = x;
                a[(j, i)] = x;
            }
        }
        let u: Vec<f64> = (0..n)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } / (n as f64).sqrt())
            .collect();
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] += 3.0 * u[i] * u[j];
            }
        }
        let mut full = sym_eigenvalues(&a).unwrap();
        full.sort_by(|x, y| y.abs().total_cmp(&x.abs()));
        let top = top_eigenpairs(&a, 6).unwrap();
        assert!((top[0].value - full[0]).abs() < 1e-9);
        for p in &top {
            assert!(full.iter().any(|f| (f - p.value).abs() < 1e-8));
        }
    }

    #[test]
    fn small_matrices_use_dense_path() {
        let a = Mat::from_fn(3, 3, |i, j| {
            [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, -5.0]][i][j]
        });
        let top = top_eigenpairs(&a, 2).unwrap();
        assert!((top[0].value + 5.0).abs() < 1e-12);
        assert!((top[1].value - 3.0).abs() < 1e-12);
        assert!((spectral_norm(&a).unwrap() - 5.0).abs() < 1e-12);
    }
}
