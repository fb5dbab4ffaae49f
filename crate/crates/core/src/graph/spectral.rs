use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::Graph;
use crate::{Error, Result};

/// Largest graph accepted by the dense eigensolver.
pub const SPECTRAL_CAP: usize = 4096;

/// Second eigenpairs of the lazy walk matrix `P` and of the Laplacian `L`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectralSummary {
    pub lambda2_p: f64,
    pub lambda2_l: f64,
    /// `pi[u] = d_u / 2m`.
    pub pi: Vec<f64>,
    /// Right eigenvector of `P` for `lambda2_p`, with `sum pi_u f_u^2 = 1`.
    pub f2_p: Vec<f64>,
    /// Eigenvector of `L` for `lambda2_l`, Euclidean unit length.
    pub f2_l: Vec<f64>,
    /// Spectrum of `P`, descending.
    pub p_eigenvalues: Vec<f64>,
    /// Spectrum of `L`, ascending.
    pub l_eigenvalues: Vec<f64>,
}

/// The lazy walk matrix: `1/2` on the diagonal, `1/(2 d_i)` to each neighbour.
pub fn lazy_walk_matrix(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        p[(i, i)] = 0.5;
        let w = 0.5 / g.degree(i) as f64;
        for &j in g.neighbors(i) {
            p[(i, j)] = w;
        }
    }
    p
}

/// `L = D - A`.
pub fn laplacian_matrix(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        l[(i, i)] = g.degree(i) as f64;
        for &j in g.neighbors(i) {
            l[(i, j)] = -1.0;
        }
    }
    l
}

/// Eigenpairs sorted by eigenvalue; `descending` picks the order.
fn sorted_eigen(m: DMatrix<f64>, descending: bool) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        let ord = eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]);
        if descending { ord.reverse() } else { ord }
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(
        &order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>(),
    );
    (values, vectors)
}

/// Flips `v` so that its entry of largest magnitude (first one on ties) is positive.
fn fix_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Dense spectral decomposition of `P` (through the symmetric similarity
/// `D^{1/2} P D^{-1/2}`) and of `L`.
pub fn spectral(g: &Graph) -> Result<SpectralSummary> {
    let n = g.n();
    if n > SPECTRAL_CAP {
        return Err(Error::SizeCap { what: "spectral decomposition", n, cap: SPECTRAL_CAP });
    }
    let two_m = 2.0 * g.m() as f64;
    let sqrt_deg: Vec<f64> = g.degrees().map(|d| libm::sqrt(d as f64)).collect();

    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        s[(i, i)] = 0.5;
        for &j in g.neighbors(i) {
            s[(i, j)] = 0.5 / (sqrt_deg[i] * sqrt_deg[j]);
        }
    }
    let (p_eigenvalues, psi) = sorted_eigen(s, true);
    let mut f2_p: DVector<f64> =
        DVector::from_fn(n, |i, _| libm::sqrt(two_m) * psi[(i, 1)] / sqrt_deg[i]);
    fix_sign(&mut f2_p);

    let (l_eigenvalues, phi) = sorted_eigen(laplacian_matrix(g), false);
    let mut f2_l = phi.column(1).into_owned();
    fix_sign(&mut f2_l);

    Ok(SpectralSummary {
        lambda2_p: p_eigenvalues[1],
        lambda2_l: l_eigenvalues[1],
        pi: (0..n).map(|u| g.stationary(u)).collect(),
        f2_p: f2_p.iter().copied().collect(),
        f2_l: f2_l.iter().copied().collect(),
        p_eigenvalues,
        l_eigenvalues,
    })
}
