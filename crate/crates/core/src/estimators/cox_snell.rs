//! Second-order (Cox–Snell) bias of the ML estimator of L and the
//! log-likelihood cumulants it is assembled from.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::special::{multivariate_polygamma, PolyOrder};

/// Closed-form cumulants of the Wishart log-likelihood derivatives in L.
/// L and Σ are orthogonal, so the Σ block enters only through the
/// contraction Σ_ij (Σ⊗Σ)_ij conj((Σ⊗Σ)⁻¹_ij) = m².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CumulantSet {
    /// κ^{L,L} = N⁻¹ [ψ_m^(1)(L) − m/L]⁻¹.
    pub kappa_ll_inv: f64,
    /// κ_LLL = −N [m/L² + ψ_m^(2)(L)].
    pub kappa_lll: f64,
    /// κ_LL^(L) = ∂κ_LL/∂L, equal to κ_LLL.
    pub kappa_ll_dl: f64,
    /// m².
    pub kappa_sigma_block_trace: f64,
    /// U_LL = N m/L − N ψ_m^(1)(L).
    pub u_ll: f64,
}

impl CumulantSet {
    /// B = (κ^{L,L})² (κ_LL^(L) − κ_LLL/2) + κ^{L,L} · contraction / (2L).
    ///
    /// The second term is Σ_ij κ^{L,L} κ^{σi,σj} (κ_{Lσi}^{(σj)} − κ_{Lσiσj}/2)
    /// with κ^{σi,σj} = (Σ⊗Σ)_ij/(NL), κ_{σiσjL} = −N(Σ⁻¹⊗Σ⁻¹)_ij and the
    /// derivative term zero.
    pub fn bias(&self, looks: f64) -> f64 {
        self.kappa_ll_inv * self.kappa_ll_inv * (self.kappa_ll_dl - 0.5 * self.kappa_lll)
            + self.kappa_ll_inv * self.kappa_sigma_block_trace / (2.0 * looks)
    }
}

fn trigamma_gap(looks: f64, dim: usize) -> Result<f64> {
    let gap = multivariate_polygamma(PolyOrder::TRIGAMMA, looks, dim)? - dim as f64 / looks;
    if !(gap > 0.0) {
        return Err(Error::domain(format!(
            "ψ_m'(L) − m/L = {gap:e} is not positive at L = {looks}"
        )));
    }
    Ok(gap)
}

pub fn cumulants(looks: f64, dim: usize, n: usize) -> Result<CumulantSet> {
    if n == 0 {
        return Err(Error::domain("N must be at least 1"));
    }
    let nf = n as f64;
    let md = dim as f64;
    let gap = trigamma_gap(looks, dim)?;
    let third = -nf * (md / (looks * looks) + multivariate_polygamma(PolyOrder::TETRAGAMMA, looks, dim)?);
    Ok(CumulantSet {
        kappa_ll_inv: 1.0 / (nf * gap),
        kappa_lll: third,
        kappa_ll_dl: third,
        kappa_sigma_block_trace: md * md,
        u_ll: -nf * gap,
    })
}

/// B(L) = m² / (2NL·g₁) − (m/L² + ψ_m^(2)(L)) / (2N·g₁²), g₁ = ψ_m^(1)(L) − m/L.
pub fn cox_snell_bias(looks: f64, dim: usize, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("N must be at least 1"));
    }
    let nf = n as f64;
    let md = dim as f64;
    let gap = trigamma_gap(looks, dim)?;
    let tetra = multivariate_polygamma(PolyOrder::TETRAGAMMA, looks, dim)?;
    Ok(md * md / (2.0 * nf * looks * gap) - (md / (looks * looks) + tetra) / (2.0 * nf * gap * gap))
}

/// Σ_ij (Σ⊗Σ)_ij conj((Σ⊗Σ)⁻¹_ij), evaluated numerically.
pub fn kronecker_contraction(sigma: &HermitianMatrix) -> Result<f64> {
    let k = sigma.kron(sigma);
    k.trace_product(&k.inverse()?)
}
