//! Whitened effective channel between the Tx phase-shifter networks and the
//! Rx RF chains.
//!
//! Each of the `N_s` strongest paths gets a Tx beam and an Rx beam. The Rx beams
//! colour the noise (`C = A_r A_rᴴ`), so the RF-chain outputs are whitened with
//! the inverse Hermitian Cholesky factor before detection:
//!
//! ```text
//! C = BᴴB,   G = N_t^{-1/2} (Bᴴ)⁻¹ A_r H A_tᴴ,   GᴴG = U Λ Uᴴ
//! ```

use nalgebra::linalg::{Cholesky, SymmetricEigen};
use serde::Serialize;

use crate::channel::{build_channel_matrix, steering_vector, ChannelScenario};
use crate::{CMatrix, CVector, Complex64, Error, Result};

/// Relative floor on the smallest noise-covariance eigenvalue before a ridge is added.
pub const RIDGE_FACTOR: f64 = 1e-10;
/// Eigenvalues in `(-EIG_CLAMP, 0)` are rounding noise and are clamped to zero.
pub const EIG_CLAMP: f64 = 1e-9;

/// Steering matrices whose rows are the per-path Tx (`N_ts × N_t`) and Rx
/// (`N_ts × N_r`) steering vectors.
pub fn steering_matrices(scenario: &ChannelScenario) -> (CMatrix, CMatrix) {
    let arr = &scenario.array;
    let n = scenario.n_paths();
    let mut a_t = CMatrix::zeros(n, arr.n_tx);
    let mut a_r = CMatrix::zeros(n, arr.n_rx);
    for (i, c) in scenario.components.iter().enumerate() {
        a_t.set_row(i, &steering_vector(arr.n_tx, arr.d_tx, c.aod).transpose());
        a_r.set_row(i, &steering_vector(arr.n_rx, arr.d_rx, c.aoa).transpose());
    }
    (a_t, a_r)
}

/// Covariance of the RF-chain noise when the first `n_s` Rx beams are applied.
pub fn noise_covariance(a_r: &CMatrix, n_s: usize) -> Result<CMatrix> {
    if n_s == 0 || n_s > a_r.nrows() {
        return Err(Error::invalid(format!(
            "n_s = {n_s} but only {} components are available",
            a_r.nrows()
        )));
    }
    let rows = a_r.rows(0, n_s);
    Ok(&rows * rows.adjoint())
}

/// Upper-triangular whitening factor and whether a ridge had to be added.
#[derive(Debug, Clone)]
pub struct Whitener {
    /// `B` with `C = BᴴB`.
    pub factor: CMatrix,
    pub regularized: bool,
}

/// Cholesky factor `B` (upper triangular, `C = BᴴB`).
///
/// A singular but positive semi-definite covariance (paths with coincident AoAs)
/// gets a ridge of `1e-10 · mean(diag C)` and a warning instead of an error.
pub fn whitener(c_noise: &CMatrix) -> Result<Whitener> {
    let n = c_noise.nrows();
    if n == 0 || c_noise.ncols() != n {
        return Err(Error::invalid("noise covariance must be a nonempty square matrix"));
    }
    let scale = (0..n).map(|i| c_noise[(i, i)].re).sum::<f64>() / n as f64;
    let herm_err = (c_noise - c_noise.adjoint()).norm();
    if !(scale > 0.0) || herm_err > 1e-9 * c_noise.norm().max(1.0) {
        return Err(Error::NotPositiveDefinite("matrix is not Hermitian with a positive diagonal".into()));
    }
    let floor = RIDGE_FACTOR * scale;
    let min_eig = SymmetricEigen::new(c_noise.clone()).eigenvalues.min();
    let mut c = c_noise.clone();
    let mut regularized = false;
    if min_eig < floor {
        if min_eig < -floor.max(1e-9 * scale) {
            return Err(Error::NotPositiveDefinite(format!("smallest eigenvalue {min_eig:.3e}")));
        }
        log::warn!(
            "noise covariance is near singular (min eigenvalue {min_eig:.3e}); adding ridge {floor:.3e}; consider a smaller N_s"
        );
        for i in 0..n {
            c[(i, i)] += Complex64::new(floor, 0.0);
        }
        regularized = true;
    }
    let chol = Cholesky::new(c).ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
    Ok(Whitener {
        factor: chol.l().adjoint(),
        regularized,
    })
}

/// Whitened `N_s × N_s` effective channel with the eigendecomposition of `GᴴG`.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    pub g: CMatrix,
    /// Upper-triangular `B`, `C_noise = BᴴB`.
    pub whitener_factor: CMatrix,
    /// Eigenvalues of `GᴴG`, descending.
    pub eigvals: Vec<f64>,
    /// Unitary basis; column `κ` pairs with `eigvals[κ]`.
    pub eigvecs: CMatrix,
    pub n_s: usize,
    pub regularized: bool,
}

impl EffectiveChannel {
    /// Builds the effective channel from an arbitrary `G` and whitener.
    pub fn from_parts(g: CMatrix, whitener_factor: CMatrix, regularized: bool) -> Result<Self> {
        let n_s = g.nrows();
        if g.ncols() != n_s || whitener_factor.shape() != (n_s, n_s) {
            return Err(Error::invalid("G and B must be square of equal size"));
        }
        let (eigvals, eigvecs) = hermitian_eigen_desc(&(g.adjoint() * &g))?;
        Ok(EffectiveChannel {
            g,
            whitener_factor,
            eigvals,
            eigvecs,
            n_s,
            regularized,
        })
    }

    /// Eigenvector column `κ` (0-based).
    pub fn eigvec(&self, kappa: usize) -> CVector {
        self.eigvecs.column(kappa).into_owned()
    }

    /// Left singular vectors `p_κ = G q_κ / √λ_κ` for the first `n` eigen-subchannels.
    /// These span the directions the receiver sees the active subchannels in.
    pub fn left_basis(&self, n: usize) -> Result<CMatrix> {
        let mut p = CMatrix::zeros(self.n_s, n);
        for k in 0..n {
            let lam = self.eigvals[k];
            if !(lam > 0.0) {
                return Err(Error::DegenerateChannel(format!("eigen-subchannel {} has zero gain", k + 1)));
            }
            let col = &self.g * self.eigvecs.column(k) / Complex64::new(lam.sqrt(), 0.0);
            p.set_column(k, &col);
        }
        Ok(p)
    }

    /// Applies `(Bᴴ)⁻¹` to an RF-chain output vector.
    pub fn whiten(&self, z0: &CVector) -> CVector {
        let lower = self.whitener_factor.adjoint();
        lower
            .solve_lower_triangular(z0)
            .expect("whitener factor has a nonzero diagonal")
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Dump {
            n_s: usize,
            eigvals: Vec<f64>,
            g: Vec<Vec<[f64; 2]>>,
            whitener_factor: Vec<Vec<[f64; 2]>>,
            eigvecs: Vec<Vec<[f64; 2]>>,
            regularized: bool,
        }
        serde_json::to_value(Dump {
            n_s: self.n_s,
            eigvals: self.eigvals.clone(),
            g: matrix_pairs(&self.g),
            whitener_factor: matrix_pairs(&self.whitener_factor),
            eigvecs: matrix_pairs(&self.eigvecs),
            regularized: self.regularized,
        })
        .expect("plain data serializes")
    }
}

/// Row-major `[re, im]` pairs.
pub fn matrix_pairs(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// Hermitian eigendecomposition with descending eigenvalues, tiny negative values
/// clamped, and each eigenvector scaled so its largest-magnitude entry is real positive.
pub fn hermitian_eigen_desc(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = m.nrows();
    // symmetrize away rounding so the solver sees an exactly Hermitian input
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut vals = Vec::with_capacity(n);
    let mut vecs = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut lam = eig.eigenvalues[src];
        if lam < 0.0 {
            if lam < -EIG_CLAMP {
                return Err(Error::Numerical(format!("eigenvalue {lam:.3e} of a Gram matrix is negative")));
            }
            lam = 0.0;
        }
        vals.push(lam);
        let mut col = eig.eigenvectors.column(src).into_owned();
        let pivot = col
            .iter()
            .enumerate()
            .fold((0usize, -1.0f64), |best, (i, z)| if z.norm() > best.1 + 1e-12 { (i, z.norm()) } else { best })
            .0;
        let phase = col[pivot] / Complex64::new(col[pivot].norm(), 0.0);
        col *= phase.conj();
        vecs.set_column(dst, &col);
    }
    Ok((vals, vecs))
}

/// Whitened effective channel using the `n_s` strongest paths.
pub fn effective_channel(scenario: &ChannelScenario, n_s: usize) -> Result<EffectiveChannel> {
    if n_s == 0 || n_s > scenario.n_paths() {
        return Err(Error::invalid(format!(
            "n_s must be in 1..={}, got {n_s}",
            scenario.n_paths()
        )));
    }
    let (a_t, a_r) = steering_matrices(scenario);
    let h = build_channel_matrix(scenario);
    let c = noise_covariance(&a_r, n_s)?;
    let w = whitener(&c)?;
    let a_r_s = a_r.rows(0, n_s);
    let a_t_s = a_t.rows(0, n_s);
    let unwhitened = (&a_r_s * &h * a_t_s.adjoint()) / Complex64::new((scenario.array.n_tx as f64).sqrt(), 0.0);
    let lower = w.factor.adjoint();
    let g = lower
        .solve_lower_triangular(&unwhitened)
        .ok_or_else(|| Error::Numerical("singular whitening factor".into()))?;
    EffectiveChannel::from_parts(g, w.factor, w.regularized)
}
