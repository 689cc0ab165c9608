//! Dense ground-truth computations.
//!
//! Everything here factors an `n x n` (or `(n - |S|) x (n - |S|)`) matrix and
//! is therefore limited to graphs of at most [`DEFAULT_DENSE_CAP`] vertices;
//! larger graphs go through the sketch estimators in [`crate::sketch`].

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{stationary, GroundedSystem, WeightedGraph};

pub const DEFAULT_DENSE_CAP: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CentralityMethod {
    DensePseudoinverse,
    Spectral,
    Sketch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityReport {
    /// `H_j` per vertex: mean hitting time into `j` from a stationary start.
    pub walk_centrality: Vec<f64>,
    pub kemeny: f64,
    pub method: CentralityMethod,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HittingStructure {
    /// `H_ij`, with `H_ii = 0`.
    pub hitting: DMatrix<f64>,
    /// `(I - P + 1 pi^T)^{-1} Pi^{-1}`.
    pub fundamental_star: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwcValue {
    /// Sorted absorbing set.
    pub set: Vec<usize>,
    pub value: f64,
}

pub(crate) fn check_dense_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::CapExceeded {
            what: "vertices for the dense exact engine",
            requested: n as u128,
            limit: cap as u128,
            hint: "; use the sketch-based estimators instead",
        })
    } else {
        Ok(())
    }
}

fn prepare(graph: &WeightedGraph) -> Result<()> {
    graph.require_connected()?;
    check_dense_cap(graph.n(), DEFAULT_DENSE_CAP)
}

/// Inverse of a symmetric positive-definite matrix, symmetrized.
pub(crate) fn spd_inverse(a: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let inv = a
        .cholesky()
        .ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))?
        .inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

/// `L^+ = (L + J/n)^{-1} - J/n`.
pub fn pseudoinverse_dense(graph: &WeightedGraph) -> Result<DMatrix<f64>> {
    pseudoinverse_dense_capped(graph, DEFAULT_DENSE_CAP)
}

pub fn pseudoinverse_dense_capped(graph: &WeightedGraph, cap: usize) -> Result<DMatrix<f64>> {
    graph.require_connected()?;
    check_dense_cap(graph.n(), cap)?;
    let n = graph.n() as f64;
    let mut a = graph.laplacian_dense();
    a.add_scalar_mut(1.0 / n);
    let mut inv = spd_inverse(a)?;
    inv.add_scalar_mut(-1.0 / n);
    Ok(inv)
}

/// Walk centrality from `H_j = d (e_j - pi)^T L^+ (e_j - pi)` and
/// `K = sum_j pi_j H_j`.
pub fn walk_centrality_exact(graph: &WeightedGraph) -> Result<CentralityReport> {
    prepare(graph)?;
    let lp = pseudoinverse_dense(graph)?;
    let pi = DVector::from_vec(stationary(graph)?.pi);
    let d = graph.total_degree();
    let lpi = &lp * &pi;
    let pi_lp_pi = pi.dot(&lpi);
    let h: Vec<f64> = (0..graph.n())
        .map(|j| {
            if graph.n() == 1 {
                0.0
            } else {
                d * (lp[(j, j)] - 2.0 * lpi[j] + pi_lp_pi)
            }
        })
        .collect();
    let kemeny = h.iter().zip(pi.iter()).map(|(hj, pj)| hj * pj).sum();
    Ok(CentralityReport {
        walk_centrality: h,
        kemeny,
        method: CentralityMethod::DensePseudoinverse,
    })
}

/// Walk centrality and Kemeny constant from the eigenpairs
/// `(sigma_k, psi_k)` of the normalized Laplacian `D^{-1/2} L D^{-1/2}`:
/// `H_j = (d / d_j) sum_{k>=2} psi_kj^2 / sigma_k`, `K = sum_{k>=2} 1/sigma_k`.
pub fn walk_centrality_spectral(graph: &WeightedGraph) -> Result<CentralityReport> {
    prepare(graph)?;
    let n = graph.n();
    if n == 1 {
        return Ok(CentralityReport {
            walk_centrality: vec![0.0],
            kemeny: 0.0,
            method: CentralityMethod::Spectral,
        });
    }
    let inv_sqrt: Vec<f64> = graph.degrees().iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut norm_lap = graph.laplacian_dense();
    for i in 0..n {
        for j in 0..n {
            norm_lap[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let eig = polished_symmetric_eigen(norm_lap);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let zero_tol = 1e-9 * n as f64;
    let zero_modes = order
        .iter()
        .filter(|&&k| eig.eigenvalues[k] < zero_tol)
        .count();
    if zero_modes != 1 {
        return Err(Error::Numerical(format!(
            "expected exactly one zero eigenvalue of the normalized Laplacian, found {zero_modes}"
        )));
    }
    let d = graph.total_degree();
    let mut h = vec![0.0; n];
    let mut kemeny = 0.0;
    for &k in &order[1..] {
        let sigma = eig.eigenvalues[k];
        kemeny += 1.0 / sigma;
        for (j, hj) in h.iter_mut().enumerate() {
            let psi = eig.eigenvectors[(j, k)];
            *hj += psi * psi / sigma;
        }
    }
    for (j, hj) in h.iter_mut().enumerate() {
        *hj *= d / graph.degree(j);
    }
    Ok(CentralityReport {
        walk_centrality: h,
        kemeny,
        method: CentralityMethod::Spectral,
    })
}

/// Symmetric eigendecomposition with a Rayleigh-Ritz polish.
///
/// The QR-based decomposition can stop with residuals around `1e-8` on
/// matrices with clustered spectra. Projecting onto the computed basis gives a
/// nearly diagonal matrix, which cyclic Jacobi rotations then diagonalize to
/// full working precision in a few sweeps.
fn polished_symmetric_eigen(a: DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let n = a.nrows();
    let first = SymmetricEigen::new(a.clone());
    let mut v = first.eigenvectors;
    let mut b = v.transpose() * (&a * &v);
    let mut q = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..12 {
        let mut rotated = false;
        for p in 0..n {
            for r in p + 1..n {
                let bpr = b[(p, r)];
                let scale = b[(p, p)].abs() + b[(r, r)].abs();
                if bpr.abs() <= 1e-18 * scale || bpr == 0.0 {
                    continue;
                }
                rotated = true;
                let theta = (b[(r, r)] - b[(p, p)]) / (2.0 * bpr);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (bkp, bkr) = (b[(k, p)], b[(k, r)]);
                    b[(k, p)] = c * bkp - s * bkr;
                    b[(k, r)] = s * bkp + c * bkr;
                }
                for k in 0..n {
                    let (bpk, brk) = (b[(p, k)], b[(r, k)]);
                    b[(p, k)] = c * bpk - s * brk;
                    b[(r, k)] = s * bpk + c * brk;
                }
                for k in 0..n {
                    let (qkp, qkr) = (q[(k, p)], q[(k, r)]);
                    q[(k, p)] = c * qkp - s * qkr;
                    q[(k, r)] = s * qkp + c * qkr;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    v = v * q;
    SymmetricEigen {
        eigenvalues: b.diagonal(),
        eigenvectors: v,
    }
}

/// All pairwise hitting times via `F* = (I - P + 1 pi^T)^{-1} Pi^{-1}` and
/// `H_ij = F*_jj - F*_ij`.
pub fn hitting_times(graph: &WeightedGraph) -> Result<HittingStructure> {
    prepare(graph)?;
    let n = graph.n();
    let pi = stationary(graph)?.pi;
    let mut a = DMatrix::identity(n, n) - graph.transition_dense();
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] += pi[j];
        }
    }
    let inv = a
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("I - P + 1 pi^T is singular".into()))?;
    let mut fstar = inv;
    for j in 0..n {
        let s = 1.0 / pi[j];
        for i in 0..n {
            fstar[(i, j)] *= s;
        }
    }
    let hitting = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            fstar[(j, j)] - fstar[(i, j)]
        }
    });
    Ok(HittingStructure {
        hitting,
        fundamental_star: fstar,
    })
}

/// All pairwise effective resistances `R_ij = L+_ii + L+_jj - 2 L+_ij`.
pub fn resistance_matrix(graph: &WeightedGraph) -> Result<DMatrix<f64>> {
    let lp = pseudoinverse_dense(graph)?;
    Ok(resistance_from_pinv(&lp))
}

fn resistance_from_pinv(lp: &DMatrix<f64>) -> DMatrix<f64> {
    let n = lp.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            (lp[(i, i)] + lp[(j, j)] - 2.0 * lp[(i, j)]).max(0.0)
        }
    })
}

pub fn resistance_distance(graph: &WeightedGraph, i: usize, j: usize) -> Result<f64> {
    graph.check_vertex(i)?;
    graph.check_vertex(j)?;
    Ok(resistance_matrix(graph)?[(i, j)])
}

/// `sum_{(i,j) in E} w_ij R_ij`, which equals `n - 1` on a connected graph.
pub fn foster_sum(graph: &WeightedGraph) -> Result<f64> {
    let r = resistance_matrix(graph)?;
    Ok(graph.edges().iter().map(|&(u, v, w)| w * r[(u, v)]).sum())
}

/// Pairwise hitting times from effective resistances:
/// `H_ij = (1/2) sum_z d_z (R_ij + R_jz - R_iz)`.
pub fn hitting_times_resistance(graph: &WeightedGraph) -> Result<DMatrix<f64>> {
    let r = resistance_matrix(graph)?;
    let n = graph.n();
    let d = graph.total_degree();
    let dv = DVector::from_column_slice(graph.degrees());
    let rd = &r * &dv;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            0.5 * (d * r[(i, j)] + rd[j] - rd[i])
        }
    }))
}

/// Dense inverse of `L_{-S}` with the system it came from.
pub(crate) struct GroundedInverse<'g> {
    pub system: GroundedSystem<'g>,
    pub inverse: DMatrix<f64>,
}

impl<'g> GroundedInverse<'g> {
    pub fn new(graph: &'g WeightedGraph, set: &[usize]) -> Result<Self> {
        prepare(graph)?;
        let system = GroundedSystem::new(graph, set)?;
        let inverse = spd_inverse(system.to_dense())?;
        Ok(Self { system, inverse })
    }

    /// `L_{-S}^{-1} d_{-S}`: absorption times `H_iS` of the free vertices.
    pub fn absorption_times(&self) -> DVector<f64> {
        &self.inverse * DVector::from_column_slice(self.system.degrees())
    }

    /// `H(S) = pi_{-S}^T L_{-S}^{-1} d_{-S}`.
    pub fn gwc(&self) -> f64 {
        let pi = DVector::from_vec(self.system.stationary_free());
        pi.dot(&self.absorption_times())
    }

    /// `Delta(u, S)` for every free vertex, in free-index order.
    pub fn gains(&self) -> Vec<f64> {
        let x = self.absorption_times();
        let d = self.system.graph().total_degree();
        (0..self.system.dim())
            .map(|i| x[i] * x[i] / (d * self.inverse[(i, i)]))
            .collect()
    }
}

pub fn gwc_exact(graph: &WeightedGraph, set: &[usize]) -> Result<GwcValue> {
    let g = GroundedInverse::new(graph, set)?;
    Ok(GwcValue {
        set: g.system.absorbed().to_vec(),
        value: g.gwc(),
    })
}

/// `H_iS` for every vertex (0 on `S`).
pub fn group_hitting_times(graph: &WeightedGraph, set: &[usize]) -> Result<Vec<f64>> {
    let g = GroundedInverse::new(graph, set)?;
    let x = g.absorption_times();
    let mut out = vec![0.0; graph.n()];
    for (i, &v) in g.system.free_vertices().iter().enumerate() {
        out[v] = x[i];
    }
    Ok(out)
}

/// `Delta(u, S) = (e_u^T L_{-S}^{-1} d_{-S})^2 / (d e_u^T L_{-S}^{-1} e_u)`,
/// the decrease `H(S) - H(S + u)`. `S` must be nonempty and exclude `u`.
pub fn marginal_gain_exact(graph: &WeightedGraph, set: &[usize], u: usize) -> Result<f64> {
    graph.check_vertex(u)?;
    if set.contains(&u) {
        return Err(Error::InvalidSet(format!("vertex {u} is already in the set")));
    }
    let g = GroundedInverse::new(graph, set)?;
    let i = g.system.free_index(u).expect("u is free");
    Ok(g.gains()[i])
}

/// `Delta(u, S)` for all `u` outside `S`, from one factorization.
pub fn marginal_gains_exact(graph: &WeightedGraph, set: &[usize]) -> Result<Vec<(usize, f64)>> {
    let g = GroundedInverse::new(graph, set)?;
    Ok(g.system
        .free_vertices()
        .iter()
        .copied()
        .zip(g.gains())
        .collect())
}

/// Absorption probabilities `P'`: row `i` is the distribution of the first
/// vertex of `S` a walk from `i` reaches; columns follow sorted `S`. Free rows
/// are `F P_{-S,S}` with `F = (I - P)_{-S}^{-1}`; absorbed rows are
/// indicators.
pub fn absorption_probabilities(graph: &WeightedGraph, set: &[usize]) -> Result<DMatrix<f64>> {
    prepare(graph)?;
    let system = GroundedSystem::new(graph, set)?;
    let free = system.free_vertices();
    let absorbed = system.absorbed();
    let k = free.len();
    let p = graph.transition_dense();
    let mut i_minus_p = DMatrix::zeros(k, k);
    let mut cross = DMatrix::zeros(k, absorbed.len());
    for (a, &u) in free.iter().enumerate() {
        for (b, &v) in free.iter().enumerate() {
            i_minus_p[(a, b)] = if a == b { 1.0 } else { 0.0 } - p[(u, v)];
        }
        for (c, &s) in absorbed.iter().enumerate() {
            cross[(a, c)] = p[(u, s)];
        }
    }
    let f = i_minus_p
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("(I - P)_{-S} is singular".into()))?;
    let free_rows = f * cross;
    let mut out = DMatrix::zeros(graph.n(), absorbed.len());
    for (a, &u) in free.iter().enumerate() {
        out.row_mut(u).copy_from(&free_rows.row(a));
    }
    for (c, &s) in absorbed.iter().enumerate() {
        out[(s, c)] = 1.0;
    }
    Ok(out)
}

/// All detour times `D_ij(S) = H_iS + sum_{k in S} P'_ik H_kj`.
pub fn detour_matrix(graph: &WeightedGraph, set: &[usize]) -> Result<DMatrix<f64>> {
    let h_set = group_hitting_times(graph, set)?;
    let pprime = absorption_probabilities(graph, set)?;
    let hit = hitting_times(graph)?.hitting;
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    let n = graph.n();
    let mut rows_s = DMatrix::zeros(sorted.len(), n);
    for (c, &s) in sorted.iter().enumerate() {
        rows_s.row_mut(c).copy_from(&hit.row(s));
    }
    let mut d = pprime * rows_s;
    for i in 0..n {
        for j in 0..n {
            d[(i, j)] += h_set[i];
        }
    }
    Ok(d)
}

pub fn group_detour_time(graph: &WeightedGraph, set: &[usize], i: usize, j: usize) -> Result<f64> {
    graph.check_vertex(i)?;
    graph.check_vertex(j)?;
    Ok(detour_matrix(graph, set)?[(i, j)])
}
