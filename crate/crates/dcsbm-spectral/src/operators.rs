//! Matrices whose spectra drive detection.

use faer::Mat;

use crate::graph::{Graph, LatentModel};
use crate::linalg::{self, EigenPair};
use crate::{Error, Result};

/// Size above which dense construction logs a memory warning.
const DENSE_WARN: usize = 20_000;

/// Which operator a matrix represents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    LAlpha { alpha: f64 },
    LTilde { alpha: f64 },
    BetheHessian { r: f64 },
}

/// Dense symmetric matrix tagged with its construction.
#[derive(Debug, Clone)]
pub struct SymmetricOperator {
    kind: OperatorKind,
    matrix: Mat<f64>,
}

impl SymmetricOperator {
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        linalg::matvec(&self.matrix, x)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::sym_eigenvalues(&self.matrix)
    }

    pub fn eigen(&self) -> Result<Vec<EigenPair>> {
        linalg::sym_eigen(&self.matrix)
    }

    /// The `count` eigenpairs of largest magnitude.
    pub fn top_eigenpairs(&self, count: usize) -> Result<Vec<EigenPair>> {
        linalg::top_eigenpairs(&self.matrix, count)
    }

    /// Largest absolute asymmetry `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..j {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)]).abs());
            }
        }
        worst
    }

    /// Operator norm of `self - other`.
    pub fn distance(&self, other: &SymmetricOperator) -> Result<f64> {
        if self.n() != other.n() {
            return Err(Error::InvalidParams("operator sizes differ".into()));
        }
        let diff = &self.matrix - &other.matrix;
        linalg::spectral_norm(&diff)
    }
}

fn check_degrees(graph: &Graph) -> Result<()> {
    if graph.n() == 0 {
        return Err(Error::EmptyGraph);
    }
    if let Some(i) = graph.degrees().iter().position(|&d| d == 0) {
        return Err(Error::ZeroDegree(i));
    }
    if graph.n() > DENSE_WARN {
        log::warn!("building a dense {0}x{0} operator", graph.n());
    }
    Ok(())
}

/// `L_α = (2m)^α n^{-1/2} D^{-α} (A - d d^T / 2m) D^{-α}`.
pub fn build_l_alpha(graph: &Graph, alpha: f64) -> Result<SymmetricOperator> {
    check_degrees(graph)?;
    let n = graph.n();
    let two_m = graph.twice_edges() as f64;
    let d: Vec<f64> = graph.degrees().iter().map(|&x| x as f64).collect();
    let w: Vec<f64> = d.iter().map(|x| x.powf(-alpha)).collect();
    let s = two_m.powf(alpha) / (n as f64).sqrt();
    let mut m = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = -s * w[i] * w[i] * d[i] * d[i] / two_m;
        for j in i + 1..n {
            let a = if graph.has_edge(i, j) { 1.0 } else { 0.0 };
            let v = s * w[i] * w[j] * (a - d[i] * d[j] / two_m);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(SymmetricOperator {
        kind: OperatorKind::LAlpha { alpha },
        matrix: m,
    })
}

/// The exact null vector `D^α 1` of `L_α`.
pub fn null_vector(graph: &Graph, alpha: f64) -> Vec<f64> {
    graph
        .degrees()
        .iter()
        .map(|&d| (d as f64).powf(alpha))
        .collect()
}

/// Random equivalent of `L_α` built from the latent weights and labels:
/// `n^{-1/2} D_q^{-α} X D_q^{-α} + U Λ U^T`.
///
/// `X = A - P` off the diagonal (zero on it), `U = [n^{-1/2} D_q^{1-α} J, D_q^{-α} X 1 / q^T 1]`
/// and `Λ = [[(I - 1c^T) M (I - c 1^T), -1], [-1^T, 0]]` with `c` the class fractions.
pub fn build_l_tilde(latent: &LatentModel, graph: &Graph, alpha: f64) -> Result<SymmetricOperator> {
    let n = graph.n();
    if latent.q.len() != n || latent.labels.len() != n {
        return Err(Error::MissingLatent);
    }
    let k = latent.params.k();
    let mm = &latent.params.affinity;
    let q = &latent.q;
    let g = &latent.labels;
    let root_n = (latent.params.n as f64).sqrt();
    let inv_root = 1.0 / (n as f64).sqrt();
    let c = latent.class_fractions();

    let mut x = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let a = if graph.has_edge(i, j) { 1.0 } else { 0.0 };
            let v = a - q[i] * q[j] * (1.0 + mm[g[i]][g[j]] / root_n);
            x[(i, j)] = v;
            x[(j, i)] = v;
        }
    }
    let row_sums: Vec<f64> = (0..n).map(|j| x.col(j).iter().sum()).collect();
    let q_sum: f64 = q.iter().sum();
    let qa: Vec<f64> = q.iter().map(|v| v.powf(-alpha)).collect();

    // B = (I - 1c^T) M (I - c1^T): B_ab = M_ab - (Mc)_a - (Mc)_b + c^T M c.
    let mc: Vec<f64> = (0..k)
        .map(|a| (0..k).map(|b| mm[a][b] * c[b]).sum())
        .collect();
    let cmc: f64 = (0..k).map(|a| c[a] * mc[a]).sum();
    let mut lam = vec![vec![0.0; k + 1]; k + 1];
    for a in 0..k {
        for b in 0..k {
            lam[a][b] = mm[a][b] - mc[a] - mc[b] + cmc;
        }
        lam[a][k] = -1.0;
        lam[k][a] = -1.0;
    }

    // Row i of U: class column g_i carries n^{-1/2} q_i^{1-α}; column k carries the X-term.
    let u_class: Vec<f64> = (0..n).map(|i| inv_root * q[i] * qa[i]).collect();
    let u_last: Vec<f64> = (0..n).map(|i| qa[i] * row_sums[i] / q_sum).collect();

    let mut m = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let noise = inv_root * qa[i] * qa[j] * x[(i, j)];
            let low_rank = u_class[i] * u_class[j] * lam[g[i]][g[j]]
                + u_class[i] * u_last[j] * lam[g[i]][k]
                + u_last[i] * u_class[j] * lam[k][g[j]];
            let v = noise + low_rank;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(SymmetricOperator {
        kind: OperatorKind::LTilde { alpha },
        matrix: m,
    })
}

/// `H(r) = (r^2 - 1) I - r A + D`.
pub fn bethe_hessian(graph: &Graph, r: f64) -> Result<SymmetricOperator> {
    if graph.n() == 0 {
        return Err(Error::EmptyGraph);
    }
    let n = graph.n();
    let mut m = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = r * r - 1.0 + graph.degrees()[i] as f64;
        for j in graph.upper_neighbors(i) {
            m[(i, j)] = -r;
            m[(j, i)] = -r;
        }
    }
    Ok(SymmetricOperator {
        kind: OperatorKind::BetheHessian { r },
        matrix: m,
    })
}

/// `r_c = sqrt(Σ d_i^2 / Σ d_i - 1)`, the square root of the
/// non-backtracking spectral radius estimate.
pub fn bh_r_c(graph: &Graph) -> Result<f64> {
    if graph.n() == 0 {
        return Err(Error::EmptyGraph);
    }
    let s1: f64 = graph.degrees().iter().map(|&d| d as f64).sum();
    let s2: f64 = graph.degrees().iter().map(|&d| (d * d) as f64).sum();
    Ok((s2 / s1 - 1.0).max(0.0).sqrt())
}
