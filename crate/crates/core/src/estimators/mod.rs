//! Estimators of the equivalent number of looks L.
//!
//! | id  | estimator                                                   |
//! |-----|-------------------------------------------------------------|
//! | ML  | root of the profile score                                   |
//! | MM1 | tr(Z̄Z̄) / (⟨tr(Z)²⟩ − tr(Z̄)²)                              |
//! | MM2 | tr(Z̄)² / (⟨tr(ZZ)⟩ − tr(Z̄Z̄))                              |
//! | IML | ML minus its Cox–Snell bias evaluated at the ML estimate     |
//! | BN  | root of the Barndorff-Nielsen modified profile score        |

mod cox_snell;
mod solver;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{HermitianMatrix, MatrixSample};
use crate::special::{multivariate_polygamma, PolyOrder};

pub use cox_snell::{cox_snell_bias, cumulants, kronecker_contraction, CumulantSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimatorId {
    #[serde(rename = "ML")]
    Ml,
    #[serde(rename = "MM1")]
    Mm1,
    #[serde(rename = "MM2")]
    Mm2,
    #[serde(rename = "IML")]
    Iml,
    #[serde(rename = "BN")]
    Bn,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 5] = [
        EstimatorId::Ml,
        EstimatorId::Mm1,
        EstimatorId::Mm2,
        EstimatorId::Iml,
        EstimatorId::Bn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorId::Ml => "ML",
            EstimatorId::Mm1 => "MM1",
            EstimatorId::Mm2 => "MM2",
            EstimatorId::Iml => "IML",
            EstimatorId::Bn => "BN",
        }
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown estimator '{s}' (expected ML, MM1, MM2, IML or BN)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub abs_tolerance: f64,
    pub max_iterations: usize,
    pub bracket_floor_epsilon: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            abs_tolerance: 1e-10,
            max_iterations: 100,
            bracket_floor_epsilon: 1e-6,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tolerance > 0.0) || self.max_iterations == 0 || !(self.bracket_floor_epsilon > 0.0) {
            return Err(Error::Config("solver options must all be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateResult {
    pub estimator: EstimatorId,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Cox–Snell bias subtracted from the ML estimate; zero except for IML.
    pub bias_applied: f64,
    /// Residual of the defining equation at `value` (per observation).
    pub residual: f64,
    /// IML only: the corrected value fell at or below m − 1.
    pub below_support: bool,
}

impl EstimateResult {
    fn closed_form(estimator: EstimatorId, value: f64) -> Self {
        EstimateResult {
            estimator,
            value,
            converged: true,
            iterations: 0,
            bias_applied: 0.0,
            residual: 0.0,
            below_support: false,
        }
    }
}

/// a below this (times m) is treated as zero: the ML estimate diverges.
const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// Σ̂_ML = Z̄.
pub fn estimate_sigma_ml(sample: &MatrixSample) -> HermitianMatrix {
    sample.mean().clone()
}

/// g(L) = m log L + N⁻¹ Σ log|Z_k| − log|Z̄| − ψ_m(L), the profile score
/// divided by N.
pub fn score_ml(sample: &MatrixSample, looks: f64) -> Result<f64> {
    let m = sample.dim();
    Ok(m as f64 * looks.ln() - sample.log_det_deficiency()
        - multivariate_polygamma(PolyOrder::DIGAMMA, looks, m)?)
}

/// g'(L) = m/L − ψ_m'(L).
pub fn score_ml_derivative(sample: &MatrixSample, looks: f64) -> Result<f64> {
    let m = sample.dim();
    Ok(m as f64 / looks - multivariate_polygamma(PolyOrder::TRIGAMMA, looks, m)?)
}

/// Modified profile score divided by N: g(L) − m²/(2NL).
pub fn score_bn(sample: &MatrixSample, looks: f64) -> Result<f64> {
    let md = sample.dim() as f64;
    Ok(score_ml(sample, looks)? - md * md / (2.0 * sample.len() as f64 * looks))
}

pub fn score_bn_derivative(sample: &MatrixSample, looks: f64) -> Result<f64> {
    let md = sample.dim() as f64;
    Ok(score_ml_derivative(sample, looks)? + md * md / (2.0 * sample.len() as f64 * looks * looks))
}

fn check_nondegenerate(sample: &MatrixSample) -> Result<()> {
    let a = sample.log_det_deficiency();
    if !(a >= DEGENERACY_THRESHOLD * sample.dim() as f64) {
        return Err(Error::DegenerateSample(format!(
            "log|Z̄| − mean log|Z_k| = {a:e}; observations are (numerically) identical"
        )));
    }
    Ok(())
}

fn solve_score(
    sample: &MatrixSample,
    estimator: EstimatorId,
    opts: &SolverOptions,
    score: fn(&MatrixSample, f64) -> Result<f64>,
    derivative: fn(&MatrixSample, f64) -> Result<f64>,
) -> Result<EstimateResult> {
    opts.validate()?;
    check_nondegenerate(sample)?;
    let m = sample.dim();
    let hint = mm2_value(sample).ok();
    let root = solver::solve_decreasing(
        |l| score(sample, l),
        |l| derivative(sample, l),
        m as f64 - 1.0,
        m,
        hint,
        opts,
    )?;
    Ok(EstimateResult {
        estimator,
        value: root.value,
        converged: true,
        iterations: root.iterations,
        bias_applied: 0.0,
        residual: root.residual,
        below_support: false,
    })
}

pub fn estimate_l_ml(sample: &MatrixSample, opts: &SolverOptions) -> Result<EstimateResult> {
    solve_score(sample, EstimatorId::Ml, opts, score_ml, score_ml_derivative)
}

pub fn estimate_l_bn(sample: &MatrixSample, opts: &SolverOptions) -> Result<EstimateResult> {
    solve_score(sample, EstimatorId::Bn, opts, score_bn, score_bn_derivative)
}

/// L̂_ML − B(L̂_ML).
pub fn estimate_l_iml(sample: &MatrixSample, opts: &SolverOptions) -> Result<EstimateResult> {
    let ml = estimate_l_ml(sample, opts)?;
    correct_ml(sample, &ml)
}

fn correct_ml(sample: &MatrixSample, ml: &EstimateResult) -> Result<EstimateResult> {
    let m = sample.dim();
    let bias = cox_snell_bias(ml.value, m, sample.len())?;
    let value = ml.value - bias;
    Ok(EstimateResult {
        estimator: EstimatorId::Iml,
        value,
        bias_applied: bias,
        below_support: value <= m as f64 - 1.0,
        ..*ml
    })
}

/// Per-observation trace moments used by both trace-moment estimators.
struct TraceMoments {
    /// tr(Z̄)
    trace_mean: f64,
    /// tr(Z̄Z̄)
    trace_mean_sq: f64,
    /// N⁻¹ Σ tr(Z_i)²
    mean_trace_squared: f64,
    /// N⁻¹ Σ tr(Z_i Z_i)
    mean_trace_of_square: f64,
}

fn trace_moments(sample: &MatrixSample) -> Result<TraceMoments> {
    let n = sample.len() as f64;
    let mean = sample.mean();
    let mut mean_trace_squared = 0.0;
    let mut mean_trace_of_square = 0.0;
    for z in sample.observations() {
        mean_trace_squared += z.trace().powi(2);
        mean_trace_of_square += z.trace_product(z)?;
    }
    Ok(TraceMoments {
        trace_mean: mean.trace(),
        trace_mean_sq: mean.trace_product(mean)?,
        mean_trace_squared: mean_trace_squared / n,
        mean_trace_of_square: mean_trace_of_square / n,
    })
}

fn ratio(numerator: f64, denominator: f64, which: EstimatorId) -> Result<f64> {
    if !(denominator > 0.0) {
        return Err(Error::DegenerateSample(format!(
            "{which} denominator is {denominator:e}; sample has no dispersion"
        )));
    }
    Ok(numerator / denominator)
}

fn mm2_value(sample: &MatrixSample) -> Result<f64> {
    let t = trace_moments(sample)?;
    ratio(t.trace_mean.powi(2), t.mean_trace_of_square - t.trace_mean_sq, EstimatorId::Mm2)
}

/// tr(Z̄Z̄) / (N⁻¹ Σ tr(Z_i)² − tr(Z̄)²).
pub fn estimate_l_mm1(sample: &MatrixSample) -> Result<EstimateResult> {
    let t = trace_moments(sample)?;
    let value = ratio(t.trace_mean_sq, t.mean_trace_squared - t.trace_mean.powi(2), EstimatorId::Mm1)?;
    Ok(EstimateResult::closed_form(EstimatorId::Mm1, value))
}

/// tr(Z̄)² / (N⁻¹ Σ tr(Z_i Z_i) − tr(Z̄Z̄)).
pub fn estimate_l_mm2(sample: &MatrixSample) -> Result<EstimateResult> {
    Ok(EstimateResult::closed_form(EstimatorId::Mm2, mm2_value(sample)?))
}

pub fn estimate(id: EstimatorId, sample: &MatrixSample, opts: &SolverOptions) -> Result<EstimateResult> {
    match id {
        EstimatorId::Ml => estimate_l_ml(sample, opts),
        EstimatorId::Mm1 => estimate_l_mm1(sample),
        EstimatorId::Mm2 => estimate_l_mm2(sample),
        EstimatorId::Iml => estimate_l_iml(sample, opts),
        EstimatorId::Bn => estimate_l_bn(sample, opts),
    }
}

/// Runs several estimators on one sample, solving the ML equation once
/// when both ML and IML are requested.
pub fn estimate_many(
    sample: &MatrixSample,
    ids: &[EstimatorId],
    opts: &SolverOptions,
) -> Vec<(EstimatorId, Result<EstimateResult>)> {
    let needs_ml = ids.iter().any(|id| matches!(id, EstimatorId::Ml | EstimatorId::Iml));
    let ml = needs_ml.then(|| estimate_l_ml(sample, opts));
    ids.iter()
        .map(|&id| {
            let r = match (id, &ml) {
                (EstimatorId::Ml, Some(r)) => clone_result(r),
                (EstimatorId::Iml, Some(r)) => clone_result(r).and_then(|ml| correct_ml(sample, &ml)),
                _ => estimate(id, sample, opts),
            };
            (id, r)
        })
        .collect()
}

fn clone_result(r: &Result<EstimateResult>) -> Result<EstimateResult> {
    match r {
        Ok(v) => Ok(*v),
        Err(Error::DegenerateSample(msg)) => Err(Error::DegenerateSample(msg.clone())),
        Err(Error::SolverFailure {
            iterations,
            last_value,
            residual,
        }) => Err(Error::SolverFailure {
            iterations: *iterations,
            last_value: *last_value,
            residual: *residual,
        }),
        Err(e) => Err(Error::Domain(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_stream;
    use crate::wishart::{profile_log_likelihood, sigma0, WishartParams, WishartSampler};
    use approx::assert_relative_eq;

    fn scalar(x: f64) -> HermitianMatrix {
        HermitianMatrix::diagonal(&[x])
    }

    fn draw(looks: f64, n: usize, seed: u64) -> MatrixSample {
        let s = WishartSampler::new(WishartParams::new(sigma0(), looks).unwrap()).unwrap();
        s.sample(n, &mut seeded_stream(seed)).unwrap()
    }

    #[test]
    fn estimator_ids_parse() {
        assert_eq!("iml".parse::<EstimatorId>().unwrap(), EstimatorId::Iml);
        assert_eq!(" MM2 ".parse::<EstimatorId>().unwrap(), EstimatorId::Mm2);
        assert!("mm3".parse::<EstimatorId>().is_err());
        assert_eq!(EstimatorId::Bn.to_string(), "BN");
    }

    #[test]
    fn sigma_ml_is_sample_mean() {
        let h = sigma0();
        let s = MatrixSample::new(vec![h.clone()]).unwrap();
        assert_eq!(estimate_sigma_ml(&s), h);
        let s = MatrixSample::new(vec![HermitianMatrix::diagonal(&[1.0, 2.0]), HermitianMatrix::diagonal(&[3.0, 6.0])]).unwrap();
        assert_eq!(estimate_sigma_ml(&s), HermitianMatrix::diagonal(&[2.0, 4.0]));
    }

    #[test]
    fn score_for_constant_scalar_sample() {
        let s = MatrixSample::new(vec![scalar(1.0), scalar(1.0)]).unwrap();
        for &l in &[0.3, 1.0, 5.0, 100.0] {
            let g = score_ml(&s, l).unwrap();
            let want = l.ln() - multivariate_polygamma(PolyOrder::DIGAMMA, l, 1).unwrap();
            assert_relative_eq!(g, want, max_relative = 1e-14);
            assert!(g > 0.0);
        }
        assert!(matches!(estimate_l_ml(&s, &SolverOptions::default()), Err(Error::DegenerateSample(_))));
        assert!(matches!(estimate_l_bn(&s, &SolverOptions::default()), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn score_is_profile_derivative() {
        let s = draw(4.0, 49, 1);
        let n = s.len() as f64;
        for &l in &[2.5, 4.0, 9.0, 30.0] {
            let h = 1e-5 * l;
            let fd = (profile_log_likelihood(&s, l + h).unwrap() - profile_log_likelihood(&s, l - h).unwrap()) / (2.0 * h);
            assert_relative_eq!(fd / n, score_ml(&s, l).unwrap(), max_relative = 1e-6);
            let fd = (crate::wishart::bn_profile_log_likelihood(&s, l + h).unwrap()
                - crate::wishart::bn_profile_log_likelihood(&s, l - h).unwrap())
                / (2.0 * h);
            assert_relative_eq!(fd / n, score_bn(&s, l).unwrap(), max_relative = 1e-6);
            let fd = (score_ml(&s, l + h).unwrap() - score_ml(&s, l - h).unwrap()) / (2.0 * h);
            assert_relative_eq!(fd, score_ml_derivative(&s, l).unwrap(), max_relative = 1e-6);
        }
    }

    #[test]
    fn score_derivative_negative_on_grid() {
        for seed in 0..5 {
            let s = draw(6.0, 9, seed);
            let mut l = 2.1;
            while l < 100.0 {
                assert!(score_ml_derivative(&s, l).unwrap() < 0.0);
                l += 0.25;
            }
        }
    }

    #[test]
    fn ml_root_brackets() {
        let opts = SolverOptions::default();
        for seed in 0..10 {
            let s = draw(4.0, 9, seed);
            let r = estimate_l_ml(&s, &opts).unwrap();
            assert!(r.converged);
            assert!(score_ml(&s, r.value).unwrap().abs() < 1e-10);
            assert!(score_ml(&s, r.value - 0.01).unwrap() > 0.0);
            assert!(score_ml(&s, r.value + 0.01).unwrap() < 0.0);
            assert!(r.value > 2.0);

            let b = estimate_l_bn(&s, &opts).unwrap();
            assert!(score_bn(&s, b.value).unwrap().abs() < 1e-10);
            assert!(score_bn(&s, b.value - 0.01).unwrap() > 0.0);
            assert!(score_bn(&s, b.value + 0.01).unwrap() < 0.0);
            assert!(b.value < r.value);

            let i = estimate_l_iml(&s, &opts).unwrap();
            assert!(i.bias_applied > 0.0);
            assert!(i.value < r.value);
            assert_relative_eq!(i.value, r.value - cox_snell_bias(r.value, 3, 9).unwrap(), max_relative = 1e-14);
        }
    }

    #[test]
    fn trace_moment_scalar_example() {
        let s = MatrixSample::new(vec![scalar(1.0), scalar(3.0)]).unwrap();
        assert_relative_eq!(estimate_l_mm1(&s).unwrap().value, 4.0, max_relative = 1e-14);
        assert_relative_eq!(estimate_l_mm2(&s).unwrap().value, 4.0, max_relative = 1e-14);
        let c = MatrixSample::new(vec![sigma0(), sigma0(), sigma0()]).unwrap();
        assert!(matches!(estimate_l_mm1(&c), Err(Error::DegenerateSample(_))));
        assert!(matches!(estimate_l_mm2(&c), Err(Error::DegenerateSample(_))));
        let one = MatrixSample::new(vec![sigma0()]).unwrap();
        assert!(matches!(estimate_l_mm2(&one), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn iml_vanishes_at_large_n() {
        let s = draw(4.0, 10_000, 8);
        let opts = SolverOptions::default();
        let ml = estimate_l_ml(&s, &opts).unwrap();
        let iml = estimate_l_iml(&s, &opts).unwrap();
        assert!((ml.value - iml.value).abs() < 0.01);
    }

    #[test]
    fn estimate_many_shares_ml() {
        let s = draw(8.0, 49, 4);
        let opts = SolverOptions::default();
        let out = estimate_many(&s, &EstimatorId::ALL, &opts);
        assert_eq!(out.len(), 5);
        for (id, r) in out {
            let direct = estimate(id, &s, &opts).unwrap();
            assert_eq!(r.unwrap(), direct);
        }
        let c = MatrixSample::new(vec![sigma0(), sigma0()]).unwrap();
        let out = estimate_many(&c, &[EstimatorId::Iml, EstimatorId::Ml], &opts);
        assert!(out.iter().all(|(_, r)| matches!(r, Err(Error::DegenerateSample(_)))));
    }
}
