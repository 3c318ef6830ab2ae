//! Reproducible Monte Carlo benchmarking of the ENL estimators.
//!
//! Each replication of each (L, N) cell draws one Wishart sample from its
//! own RNG stream keyed by (seed, L index, N index, replication), runs every
//! requested estimator on that same sample and stores the estimates at the
//! replication's index. Aggregation happens afterwards, in index order, so
//! reports are bit-identical for any number of worker threads.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{cox_snell_bias, estimate_many, EstimatorId, SolverOptions};
use crate::hermitian::HermitianMatrix;
use crate::rng::replication_stream;
use crate::wishart::{sigma0, WishartParams, WishartSampler};

pub const DEFAULT_LOOKS: [f64; 4] = [4.0, 6.0, 8.0, 12.0];
pub const DEFAULT_SIZES: [usize; 3] = [9, 49, 121];
pub const DEFAULT_REPLICATIONS: usize = 5500;

pub const CV_DEFINITION: &str = "sample standard deviation (n-1 denominator) divided by the mean";

/// Header of the per-cell CSV report (format version 1).
pub const REPORT_CSV_HEADER: [&str; 8] = ["estimator", "L", "N", "mean", "mse", "cv", "bias", "failures"];

/// Header of the bias-curve CSV (format version 1).
pub const BIAS_CSV_HEADER: [&str; 6] = ["estimator", "L", "N", "bias", "closed_form_ml_bias", "ordering_holds"];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub sigma: HermitianMatrix,
    pub looks_grid: Vec<f64>,
    pub sample_size_grid: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorId>,
    pub solver: SolverOptions,
}

impl ExperimentConfig {
    /// The synthetic-data protocol: Σ₀, L ∈ {4,6,8,12}, N ∈ {9,49,121},
    /// 5500 replications, all five estimators.
    pub fn reference_defaults(seed: u64) -> Self {
        ExperimentConfig {
            sigma: sigma0(),
            looks_grid: DEFAULT_LOOKS.to_vec(),
            sample_size_grid: DEFAULT_SIZES.to_vec(),
            replications: DEFAULT_REPLICATIONS,
            seed,
            estimators: EstimatorId::ALL.to_vec(),
            solver: SolverOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.sigma.dim() as f64;
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.looks_grid.is_empty() || self.sample_size_grid.is_empty() || self.estimators.is_empty() {
            return Err(Error::Config("looks, sample-size and estimator lists must be nonempty".into()));
        }
        if let Some(l) = self.looks_grid.iter().find(|&&l| !(l >= m) || !l.is_finite()) {
            return Err(Error::Config(format!("L = {l} must be at least m = {m}")));
        }
        if self.sample_size_grid.contains(&0) {
            return Err(Error::Config("sample sizes must be positive".into()));
        }
        self.solver.validate()?;
        self.sigma.cholesky().map_err(|_| Error::Config("Σ must be positive definite".into()))?;
        Ok(())
    }
}

/// Raw paired estimates of one cell: `estimates[r][k]` is estimator
/// `estimators[k]` on replication `r`, `None` on failure.
#[derive(Debug, Clone)]
pub struct CellRun {
    pub looks: f64,
    pub sample_size: usize,
    pub estimators: Vec<EstimatorId>,
    pub estimates: Vec<Vec<Option<f64>>>,
}

impl CellRun {
    pub fn column(&self, id: EstimatorId) -> Option<Vec<Option<f64>>> {
        let k = self.estimators.iter().position(|&e| e == id)?;
        Some(self.estimates.iter().map(|row| row[k]).collect())
    }
}

/// Runs the replications of one (L, N) cell on the current rayon pool.
pub fn run_cell(config: &ExperimentConfig, looks_index: usize, size_index: usize) -> Result<CellRun> {
    let looks = config.looks_grid[looks_index];
    let n = config.sample_size_grid[size_index];
    let sampler = WishartSampler::new(WishartParams::new(config.sigma.clone(), looks)?)?;
    let estimates = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_stream(config.seed, looks_index, size_index, r);
            match sampler.sample(n, &mut rng) {
                Ok(sample) => estimate_many(&sample, &config.estimators, &config.solver)
                    .into_iter()
                    .map(|(_, res)| res.ok().map(|e| e.value).filter(|v| v.is_finite()))
                    .collect(),
                Err(_) => vec![None; config.estimators.len()],
            }
        })
        .collect();
    Ok(CellRun {
        looks,
        sample_size: n,
        estimators: config.estimators.clone(),
        estimates,
    })
}

/// Summary statistics of a list of estimates about a true value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub mse: f64,
    pub cv: f64,
    pub bias: f64,
    pub count: usize,
}

/// Mean, MSE about `true_looks`, CV (n−1 standard deviation over mean) and
/// bias. CV is 0 for a single estimate.
pub fn metrics(estimates: &[f64], true_looks: f64) -> Result<MetricSummary> {
    if estimates.is_empty() {
        return Err(Error::EmptyCell);
    }
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let mse = estimates.iter().map(|e| (e - true_looks).powi(2)).sum::<f64>() / n;
    let cv = if estimates.len() > 1 {
        let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
        var.sqrt() / mean
    } else {
        0.0
    };
    Ok(MetricSummary {
        mean,
        mse,
        cv,
        bias: mean - true_looks,
        count: estimates.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub estimator: EstimatorId,
    pub true_looks: f64,
    pub sample_size: usize,
    pub mean: f64,
    pub mse: f64,
    pub cv: f64,
    pub bias: f64,
    pub successes: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub cells: Vec<CellMetrics>,
    pub wall_time_seconds: f64,
    pub software_version: String,
    pub cv_definition: String,
}

impl ExperimentReport {
    pub fn cell(&self, estimator: EstimatorId, looks: f64, sample_size: usize) -> Option<&CellMetrics> {
        self.cells
            .iter()
            .find(|c| c.estimator == estimator && c.true_looks == looks && c.sample_size == sample_size)
    }

    /// One row per cell: estimator,L,N,mean,mse,cv,bias,failures.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(REPORT_CSV_HEADER).map_err(csv_error)?;
        for c in &self.cells {
            w.write_record([
                c.estimator.to_string(),
                c.true_looks.to_string(),
                c.sample_size.to_string(),
                c.mean.to_string(),
                c.mse.to_string(),
                c.cv.to_string(),
                c.bias.to_string(),
                c.failures.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self).map_err(|e| Error::Format(e.to_string()))
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Runs every cell of the configuration. Parallelism comes from the
/// enclosing rayon pool; results do not depend on it.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let mut cells = Vec::new();
    for li in 0..config.looks_grid.len() {
        for ni in 0..config.sample_size_grid.len() {
            let run = run_cell(config, li, ni)?;
            cells.extend(summarize_cell(&run));
        }
    }
    Ok(ExperimentReport {
        config: config.clone(),
        cells,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        cv_definition: CV_DEFINITION.to_string(),
    })
}

pub fn summarize_cell(run: &CellRun) -> Vec<CellMetrics> {
    run.estimators
        .iter()
        .enumerate()
        .map(|(k, &id)| {
            let values: Vec<f64> = run.estimates.iter().filter_map(|row| row[k]).collect();
            let failures = run.estimates.len() - values.len();
            let summary = metrics(&values, run.looks).unwrap_or(MetricSummary {
                mean: f64::NAN,
                mse: f64::NAN,
                cv: f64::NAN,
                bias: f64::NAN,
                count: 0,
            });
            CellMetrics {
                estimator: id,
                true_looks: run.looks,
                sample_size: run.sample_size,
                mean: summary.mean,
                mse: summary.mse,
                cv: summary.cv,
                bias: summary.bias,
                successes: values.len(),
                failures,
            }
        })
        .collect()
}

/// Estimator order of the bias inequality, largest bias first.
pub const BIAS_ORDER: [EstimatorId; 5] = [
    EstimatorId::Mm1,
    EstimatorId::Mm2,
    EstimatorId::Ml,
    EstimatorId::Bn,
    EstimatorId::Iml,
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasPoint {
    pub sample_size: usize,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasSeries {
    pub estimator: EstimatorId,
    pub looks: f64,
    /// Ordered by increasing N.
    pub points: Vec<BiasPoint>,
}

/// Verdict on B̂(MM1) ≥ B̂(MM2) ≥ B̂(ML) ≥ B̂(BN) ≥ B̂(IML) for one cell.
/// `holds` is `None` when the report lacks one of the five estimators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingVerdict {
    pub looks: f64,
    pub sample_size: usize,
    pub holds: Option<bool>,
    /// Closed-form Cox–Snell bias of the ML estimator at the true L.
    pub closed_form_ml_bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasTable {
    pub dim: usize,
    pub series: Vec<BiasSeries>,
    pub verdicts: Vec<OrderingVerdict>,
}

impl BiasTable {
    pub fn verdict(&self, looks: f64, sample_size: usize) -> Option<&OrderingVerdict> {
        self.verdicts
            .iter()
            .find(|v| v.looks == looks && v.sample_size == sample_size)
    }

    /// estimator,L,N,bias,closed_form_ml_bias,ordering_holds
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(BIAS_CSV_HEADER).map_err(csv_error)?;
        for s in &self.series {
            for p in &s.points {
                let v = self.verdict(s.looks, p.sample_size);
                w.write_record([
                    s.estimator.to_string(),
                    s.looks.to_string(),
                    p.sample_size.to_string(),
                    p.bias.to_string(),
                    v.map(|v| v.closed_form_ml_bias.to_string()).unwrap_or_default(),
                    match v.and_then(|v| v.holds) {
                        Some(true) => "true".into(),
                        Some(false) => "false".into(),
                        None => "NA".into(),
                    },
                ])
                .map_err(csv_error)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Bias-versus-N series per (estimator, L) plus the per-cell ordering check.
pub fn bias_table(report: &ExperimentReport) -> BiasTable {
    let config = &report.config;
    let dim = config.sigma.dim();
    let mut sizes = config.sample_size_grid.clone();
    sizes.sort_unstable();
    sizes.dedup();

    let mut series = Vec::new();
    for &id in &config.estimators {
        for &looks in &config.looks_grid {
            let points = sizes
                .iter()
                .filter_map(|&n| {
                    report.cell(id, looks, n).map(|c| BiasPoint {
                        sample_size: n,
                        bias: c.bias,
                    })
                })
                .collect();
            series.push(BiasSeries {
                estimator: id,
                looks,
                points,
            });
        }
    }

    let mut verdicts = Vec::new();
    for &looks in &config.looks_grid {
        for &n in &sizes {
            let biases: Option<Vec<f64>> = BIAS_ORDER
                .iter()
                .map(|&id| report.cell(id, looks, n).map(|c| c.bias))
                .collect();
            let holds = biases.map(|b| b.windows(2).all(|w| w[0] >= w[1]));
            verdicts.push(OrderingVerdict {
                looks,
                sample_size: n,
                holds,
                closed_form_ml_bias: cox_snell_bias(looks, dim, n).unwrap_or(f64::NAN),
            });
        }
    }
    BiasTable { dim, series, verdicts }
}
