//! Dense complex Hermitian matrices and the handful of operations the
//! Wishart model needs: Cholesky, log-determinant, inverse, traces,
//! Kronecker products and sample means.
//!
//! Matrices are small (m ≤ 4 in practice) and are stored as a full
//! row-major m×m grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for accepting user-supplied entries as Hermitian.
const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Pivot threshold factor for the positive-definite test.
const PD_PIVOT_FACTOR: f64 = 1e-14;

/// General dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        ComplexMatrix {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { 1.0.into() } else { 0.0.into() })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        ComplexMatrix { dim, entries }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Shape("rows must form a square matrix".into()));
        }
        Ok(ComplexMatrix {
            dim,
            entries: rows.concat(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.entries[i * self.dim + j] = v;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.dim != other.dim {
            return Err(Error::Shape(format!("{} vs {}", self.dim, other.dim)));
        }
        let n = self.dim;
        Ok(Self::from_fn(n, |i, j| {
            (0..n).map(|k| self.get(i, k) * other.get(k, j)).sum()
        }))
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|k| self.get(i, k) * v[k]).sum())
            .collect()
    }
}

/// Complex Hermitian matrix. Construction enforces exact Hermitian symmetry
/// (the lower triangle is the conjugate mirror of the upper, the diagonal
/// is real).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl HermitianMatrix {
    /// Builds from a full row-major grid. Entries must be Hermitian to a
    /// relative tolerance of 1e-12; the upper triangle is then mirrored.
    pub fn from_entries(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("dimension must be positive".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::Shape(format!(
                "expected {} entries for dimension {dim}, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::domain("matrix entries must be finite"));
        }
        let scale = entries.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for i in 0..dim {
            for j in i..dim {
                let a = entries[i * dim + j];
                let b = entries[j * dim + i].conj();
                if (a - b).norm() > HERMITIAN_TOLERANCE * scale {
                    return Err(Error::domain(format!(
                        "matrix is not Hermitian at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::from_upper_fn(dim, |i, j| entries[i * dim + j]))
    }

    /// Builds from a function evaluated on the upper triangle (j ≥ i).
    /// Imaginary parts on the diagonal are dropped.
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Complex64::new(f(i, i).re, 0.0);
            for j in (i + 1)..dim {
                let v = f(i, j);
                entries[i * dim + j] = v;
                entries[j * dim + i] = v.conj();
            }
        }
        HermitianMatrix { dim, entries }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Shape("rows must form a square matrix".into()));
        }
        Self::from_entries(dim, rows.concat())
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_upper_fn(values.len(), |i, j| {
            if i == j {
                values[i].into()
            } else {
                0.0.into()
            }
        })
    }

    /// M · H · M^H for a square M of matching dimension.
    pub fn congruence(&self, transform: &ComplexMatrix) -> Result<HermitianMatrix> {
        if transform.dim() != self.dim {
            return Err(Error::Shape(format!("{} vs {}", transform.dim(), self.dim)));
        }
        let product = transform
            .matmul(&self.to_complex())?
            .matmul(&transform.adjoint())?;
        Ok(Self::from_upper_fn(self.dim, |i, j| product.get(i, j)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    /// Row-major entries, full grid.
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix {
            dim: self.dim,
            entries: self.entries.clone(),
        }
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, factor: f64) -> HermitianMatrix {
        HermitianMatrix {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    /// Lower-triangular A with A·A^H = self. Fails unless every pivot
    /// exceeds m·1e-14·max|entry|.
    pub fn cholesky(&self) -> Result<CholeskyFactor> {
        let n = self.dim;
        let floor = n as f64 * PD_PIVOT_FACTOR * self.max_abs_entry();
        let mut lower = ComplexMatrix::zeros(n);
        for j in 0..n {
            let mut pivot = self.get(j, j).re;
            for k in 0..j {
                pivot -= lower.get(j, k).norm_sqr();
            }
            if !(pivot > floor) {
                return Err(Error::NotPositiveDefinite);
            }
            let d = pivot.sqrt();
            lower.set(j, j, d.into());
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= lower.get(i, k) * lower.get(j, k).conj();
                }
                lower.set(i, j, s / d);
            }
        }
        Ok(CholeskyFactor { lower })
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_ok()
    }

    pub fn log_det(&self) -> Result<f64> {
        Ok(self.cholesky()?.log_det())
    }

    pub fn inverse(&self) -> Result<HermitianMatrix> {
        self.cholesky()?.inverse()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i).re).sum()
    }

    /// Re Σ_ij A_ij conj(B_ij), which is tr(A·B) for Hermitian A and B.
    pub fn trace_product(&self, other: &HermitianMatrix) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::Shape(format!("{} vs {}", self.dim, other.dim)));
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum())
    }

    /// Kronecker product; Hermitian because both factors are.
    pub fn kron(&self, other: &HermitianMatrix) -> HermitianMatrix {
        let (p, q) = (self.dim, other.dim);
        let n = p * q;
        let mut entries = Vec::with_capacity(n * n);
        for row in 0..n {
            let (i, k) = (row / q, row % q);
            for col in 0..n {
                let (j, l) = (col / q, col % q);
                entries.push(self.get(i, j) * other.get(k, l));
            }
        }
        HermitianMatrix { dim: n, entries }
    }

    fn add_assign(&mut self, other: &HermitianMatrix) {
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += b;
        }
    }
}

/// Lower-triangular Cholesky factor with a real positive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    lower: ComplexMatrix,
}

impl CholeskyFactor {
    pub fn lower(&self) -> &ComplexMatrix {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.dim
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.lower.get(i, i).re.ln()).sum::<f64>()
    }

    /// A·A^H.
    pub fn reconstruct(&self) -> HermitianMatrix {
        let n = self.dim();
        HermitianMatrix::from_upper_fn(n, |i, j| {
            (0..=i.min(j))
                .map(|k| self.lower.get(i, k) * self.lower.get(j, k).conj())
                .sum()
        })
    }

    /// Solves A·A^H x = b.
    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        let l = &self.lower;
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l.get(i, k) * y[k];
            }
            y[i] = s / l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l.get(k, i).conj() * y[k];
            }
            y[i] = s / l.get(i, i);
        }
        y
    }

    pub fn inverse(&self) -> Result<HermitianMatrix> {
        let n = self.dim();
        let mut columns = Vec::with_capacity(n);
        for j in 0..n {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[j] = 1.0.into();
            columns.push(self.solve(&e));
        }
        Ok(HermitianMatrix::from_upper_fn(n, |i, j| columns[j][i]))
    }
}

/// Elementwise arithmetic mean of a nonempty list of equal-dimension
/// Hermitian matrices.
pub fn sample_mean(matrices: &[HermitianMatrix]) -> Result<HermitianMatrix> {
    let first = matrices.first().ok_or(Error::EmptySample)?;
    let mut acc = HermitianMatrix {
        dim: first.dim,
        entries: vec![Complex64::new(0.0, 0.0); first.dim * first.dim],
    };
    for (idx, h) in matrices.iter().enumerate() {
        if h.dim != first.dim {
            return Err(Error::Shape(format!(
                "observation {idx} has dimension {}, expected {}",
                h.dim, first.dim
            )));
        }
        acc.add_assign(h);
    }
    Ok(acc.scale(1.0 / matrices.len() as f64))
}

/// A sample of N positive-definite observations with cached sufficient
/// statistics: the mean Z̄, each log|Z_k| and their average.
#[derive(Debug, Clone)]
pub struct MatrixSample {
    observations: Vec<HermitianMatrix>,
    log_dets: Vec<f64>,
    mean: HermitianMatrix,
    mean_log_det: f64,
    log_det_of_mean: f64,
}

impl MatrixSample {
    pub fn new(observations: Vec<HermitianMatrix>) -> Result<Self> {
        let mean = sample_mean(&observations)?;
        let log_dets = observations
            .iter()
            .map(HermitianMatrix::log_det)
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(observations, log_dets, mean)
    }

    fn assemble(
        observations: Vec<HermitianMatrix>,
        log_dets: Vec<f64>,
        mean: HermitianMatrix,
    ) -> Result<Self> {
        let mean_log_det = log_dets.iter().sum::<f64>() / log_dets.len() as f64;
        let log_det_of_mean = mean.log_det()?;
        Ok(MatrixSample {
            observations,
            log_dets,
            mean,
            mean_log_det,
            log_det_of_mean,
        })
    }

    /// Sub-sample at the given indices, reusing the cached log-determinants.
    pub fn subset(&self, indices: &[usize]) -> Result<MatrixSample> {
        let observations: Vec<_> = indices.iter().map(|&i| self.observations[i].clone()).collect();
        let log_dets = indices.iter().map(|&i| self.log_dets[i]).collect();
        let mean = sample_mean(&observations)?;
        Self::assemble(observations, log_dets, mean)
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.mean.dim
    }

    pub fn observations(&self) -> &[HermitianMatrix] {
        &self.observations
    }

    pub fn log_dets(&self) -> &[f64] {
        &self.log_dets
    }

    /// Z̄ = N⁻¹ Σ Z_k.
    pub fn mean(&self) -> &HermitianMatrix {
        &self.mean
    }

    /// N⁻¹ Σ log|Z_k|.
    pub fn mean_log_det(&self) -> f64 {
        self.mean_log_det
    }

    /// log|Z̄|.
    pub fn log_det_of_mean(&self) -> f64 {
        self.log_det_of_mean
    }

    /// a = log|Z̄| − N⁻¹ Σ log|Z_k| ≥ 0.
    pub fn log_det_deficiency(&self) -> f64 {
        self.log_det_of_mean - self.mean_log_det
    }
}
