//! The scaled complex Wishart distribution W(Σ, L): density, likelihoods
//! in (Σ, L), the profile and modified-profile likelihoods in L, and a
//! seeded sampler.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::hermitian::{CholeskyFactor, ComplexMatrix, HermitianMatrix, MatrixSample};
use crate::special::ln_multivariate_gamma;

/// The 3×3 covariance used by the synthetic-data benchmark (E-SAR, urban
/// area over Weßling).
pub fn sigma0() -> HermitianMatrix {
    let c = Complex64::new;
    let upper = [
        [c(962892.0, 0.0), c(19171.0, -3579.0), c(-154638.0, 191388.0)],
        [c(0.0, 0.0), c(56707.0, 0.0), c(-5798.0, 16812.0)],
        [c(0.0, 0.0), c(0.0, 0.0), c(472251.0, 0.0)],
    ];
    HermitianMatrix::from_upper_fn(3, |i, j| upper[i][j])
}

/// Parameters (Σ, L) of a scaled complex Wishart law. The dimension m is
/// taken from Σ.
#[derive(Debug, Clone)]
pub struct WishartParams {
    sigma: HermitianMatrix,
    looks: f64,
}

impl WishartParams {
    /// Requires Σ positive definite and L > m − 1.
    pub fn new(sigma: HermitianMatrix, looks: f64) -> Result<Self> {
        let m = sigma.dim();
        if !looks.is_finite() || looks <= m as f64 - 1.0 {
            return Err(Error::domain(format!(
                "L = {looks} must exceed m - 1 = {}",
                m - 1
            )));
        }
        sigma.cholesky()?;
        Ok(WishartParams { sigma, looks })
    }

    pub fn sigma(&self) -> &HermitianMatrix {
        &self.sigma
    }

    pub fn looks(&self) -> f64 {
        self.looks
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }
}

fn check_dim(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Shape(format!("dimension {got}, expected {want}")));
    }
    Ok(())
}

fn check_looks(looks: f64, dim: usize) -> Result<()> {
    if !looks.is_finite() || looks <= dim as f64 - 1.0 {
        return Err(Error::domain(format!("L = {looks} must exceed m - 1 = {}", dim - 1)));
    }
    Ok(())
}

/// log f(Z'; Σ, L) = mL log L + (L−m) log|Z'| − L log|Σ| − log Γ_m(L) − L tr(Σ⁻¹Z').
pub fn log_density(z: &HermitianMatrix, params: &WishartParams) -> Result<f64> {
    let m = params.dim();
    check_dim(z.dim(), m)?;
    let l = params.looks;
    let sigma_inv = params.sigma.inverse()?;
    let md = m as f64;
    Ok(md * l * l.ln() + (l - md) * z.log_det()? - l * params.sigma.log_det()?
        - ln_multivariate_gamma(l, m)?
        - l * sigma_inv.trace_product(z)?)
}

/// Full log-likelihood ℓ(Σ, L) of an i.i.d. sample, including the
/// −N·m(m−1)/2·log π constant so it equals Σ_k log f(Z_k).
pub fn log_likelihood(sample: &MatrixSample, params: &WishartParams) -> Result<f64> {
    let m = params.dim();
    check_dim(sample.dim(), m)?;
    let n = sample.len() as f64;
    let l = params.looks;
    let md = m as f64;
    let sigma_inv = params.sigma.inverse()?;
    Ok(md * n * l * l.ln() + (l - md) * n * sample.mean_log_det()
        - l * n * params.sigma.log_det()?
        - n * ln_multivariate_gamma(l, m)?
        - n * l * sigma_inv.trace_product(sample.mean())?)
}

/// Profile log-likelihood in L with Σ replaced by its ML estimate Z̄.
pub fn profile_log_likelihood(sample: &MatrixSample, looks: f64) -> Result<f64> {
    let m = sample.dim();
    check_looks(looks, m)?;
    let n = sample.len() as f64;
    let md = m as f64;
    let l = looks;
    Ok(md * n * l * (l.ln() - 1.0) + (l - md) * n * sample.mean_log_det()
        - n * l * sample.log_det_of_mean()
        - n * ln_multivariate_gamma(l, m)?)
}

/// Barndorff-Nielsen modified profile log-likelihood: the profile
/// log-likelihood minus half the log-determinant of the observed
/// information of the Σ block, −(m²/2)(log N + log L) − m log|Z̄⁻¹|.
pub fn bn_profile_log_likelihood(sample: &MatrixSample, looks: f64) -> Result<f64> {
    let profile = profile_log_likelihood(sample, looks)?;
    Ok(profile + bn_adjustment(sample.dim(), sample.len(), looks, sample.log_det_of_mean()))
}

/// −(m²/2)(log N + log L) − m log|Z̄⁻¹|, written with log|Z̄⁻¹| = −log|Z̄|.
fn bn_adjustment(dim: usize, n: usize, looks: f64, log_det_mean: f64) -> f64 {
    let md = dim as f64;
    -0.5 * md * md * ((n as f64).ln() + looks.ln()) + md * log_det_mean
}

/// Observed information of the Σ block at Σ = Z̄.
#[derive(Debug, Clone)]
pub struct ObservedInfo {
    /// N·L·(Z̄⁻¹ ⊗ Z̄⁻¹), of dimension m².
    pub matrix: HermitianMatrix,
    /// log|J| from a Cholesky factorization of the m²×m² matrix.
    pub log_det_explicit: f64,
    /// m²(log N + log L) + 2m·log|Z̄⁻¹|.
    pub log_det_shortcut: f64,
}

pub fn observed_info_sigma(mean: &HermitianMatrix, looks: f64, n: usize) -> Result<ObservedInfo> {
    if !(looks > 0.0) || n == 0 {
        return Err(Error::domain("observed information needs L > 0 and N ≥ 1"));
    }
    let inv = mean.inverse()?;
    let nl = n as f64 * looks;
    let matrix = inv.kron(&inv).scale(nl);
    let log_det_explicit = matrix.log_det()?;
    let md = mean.dim() as f64;
    let log_det_shortcut = md * md * nl.ln() + 2.0 * md * inv.log_det()?;
    Ok(ObservedInfo {
        matrix,
        log_det_explicit,
        log_det_shortcut,
    })
}

/// How a Wishart draw is constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMethod {
    /// Z = L⁻¹ Σ_{i=1}^{L} s_i s_i^H with s_i ~ CN(0, Σ); integer L ≥ m.
    OuterProduct,
    /// Complex Bartlett decomposition; any real L > m − 1.
    Bartlett,
}

/// Draws scaled complex Wishart matrices. Holds the Cholesky factor of Σ so
/// repeated draws do not refactor.
#[derive(Debug, Clone)]
pub struct WishartSampler {
    params: WishartParams,
    factor: CholeskyFactor,
    method: SamplingMethod,
    shape_gammas: Vec<Gamma<f64>>,
}

impl WishartSampler {
    /// Outer-product sampling for integer L ≥ m, Bartlett otherwise.
    pub fn new(params: WishartParams) -> Result<Self> {
        let l = params.looks;
        let method = if l.fract() == 0.0 && l >= params.dim() as f64 {
            SamplingMethod::OuterProduct
        } else {
            SamplingMethod::Bartlett
        };
        Self::with_method(params, method)
    }

    pub fn with_method(params: WishartParams, method: SamplingMethod) -> Result<Self> {
        let m = params.dim();
        let l = params.looks;
        if method == SamplingMethod::OuterProduct && (l.fract() != 0.0 || l < m as f64) {
            return Err(Error::domain(format!(
                "outer-product sampling needs an integer L ≥ m = {m}, got {l}"
            )));
        }
        let shape_gammas = (0..m)
            .map(|i| {
                Gamma::new(l - i as f64, 1.0)
                    .map_err(|e| Error::domain(format!("gamma shape {}: {e}", l - i as f64)))
            })
            .collect::<Result<Vec<_>>>()?;
        let factor = params.sigma.cholesky()?;
        Ok(WishartSampler {
            params,
            factor,
            method,
            shape_gammas,
        })
    }

    pub fn params(&self) -> &WishartParams {
        &self.params
    }

    pub fn method(&self) -> SamplingMethod {
        self.method
    }

    /// One draw Z ~ W(Σ, L).
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> HermitianMatrix {
        let m = self.params.dim();
        // Unscaled W with A·W·A^H/L the draw, W ~ W(I, L)·L.
        let w = match self.method {
            SamplingMethod::OuterProduct => {
                let looks = self.params.looks as usize;
                let mut acc = vec![Complex64::new(0.0, 0.0); m * m];
                let mut v = vec![Complex64::new(0.0, 0.0); m];
                for _ in 0..looks {
                    for x in v.iter_mut() {
                        *x = standard_complex_normal(rng);
                    }
                    for i in 0..m {
                        for j in i..m {
                            acc[i * m + j] += v[i] * v[j].conj();
                        }
                    }
                }
                HermitianMatrix::from_upper_fn(m, |i, j| acc[i * m + j])
            }
            SamplingMethod::Bartlett => {
                let t = ComplexMatrix::from_fn(m, |i, j| {
                    if i == j {
                        self.shape_gammas[i].sample(rng).sqrt().into()
                    } else if i > j {
                        standard_complex_normal(rng)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                });
                HermitianMatrix::from_upper_fn(m, |i, j| {
                    (0..=i.min(j)).map(|k| t.get(i, k) * t.get(j, k).conj()).sum()
                })
            }
        };
        let a = self.factor.lower();
        // A·W·A^H, exploiting the lower-triangular A.
        let aw = ComplexMatrix::from_fn(m, |i, j| (0..=i).map(|k| a.get(i, k) * w.get(k, j)).sum());
        let scale = 1.0 / self.params.looks;
        HermitianMatrix::from_upper_fn(m, |i, j| {
            (0..=j).map(|k| aw.get(i, k) * a.get(j, k).conj()).sum::<Complex64>() * scale
        })
    }

    pub fn draw_many<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<HermitianMatrix> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    /// n independent draws as a [`MatrixSample`].
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<MatrixSample> {
        MatrixSample::new(self.draw_many(n, rng))
    }
}

/// n independent draws from W(Σ, L).
pub fn sample<R: Rng + ?Sized>(params: &WishartParams, n: usize, rng: &mut R) -> Result<MatrixSample> {
    WishartSampler::new(params.clone())?.sample(n, rng)
}

/// Real and imaginary parts independent N(0, 1/2), so E|w|² = 1.
#[inline]
fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
