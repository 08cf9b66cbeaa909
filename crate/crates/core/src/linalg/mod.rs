//! Dense complex linear algebra for finite-dimensional quantum states.
//!
//! Matrices are stored densely as [`faer::Mat`]. Multipartite indices follow a
//! single convention everywhere: the first subsystem of a [`SubsystemLayout`]
//! is the slowest (most significant) digit of the flat index.

mod eigen;
mod ops;

pub use eigen::{connected_blocks, EigenbasisState, HermitianEigen, Propagator};
pub use ops::{
    evolve, fidelity_b, kron, matrix_sqrt, overlap_l, partial_trace, shannon_entropy,
    sqrt_with_tolerance, tensor, trace_norm, von_neumann_entropy, ReduceSpec, TensorProduct,
};

use faer::Mat;
pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Tolerance for the Hermitian check of states and operators.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance for `|Tr ρ − 1|`.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues in `[−PSD_TOL, 0)` are clamped to zero; anything below is rejected.
pub const PSD_TOL: f64 = 1e-10;

pub(crate) fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Largest `|m[a][b] − conj(m[b][a])|`.
pub fn hermitian_deviation(m: &Mat<C64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for a in 0..n {
        for b in a..n {
            dev = dev.max((m[(a, b)] - m[(b, a)].conj()).norm());
        }
    }
    dev
}

/// `(m + m†)/2`, used to remove rounding asymmetry from constructed operators.
pub fn hermitize(m: &Mat<C64>) -> Mat<C64> {
    let n = m.nrows();
    Mat::from_fn(n, n, |a, b| (m[(a, b)] + m[(b, a)].conj()) * 0.5)
}

pub fn trace(m: &Mat<C64>) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|k| m[(k, k)]).sum()
}

fn check_square(m: &Mat<C64>) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "expected a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    mat: Mat<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(mat: Mat<C64>) -> Result<Self> {
        check_square(&mat)?;
        let dev = hermitian_deviation(&mat);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = trace(&mat);
        if (tr - 1.0).norm() > TRACE_TOL {
            return Err(Error::Trace(tr.re));
        }
        let lowest = HermitianEigen::eigenvalues_of(&mat)?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if lowest < -PSD_TOL {
            return Err(Error::NotPositive(lowest));
        }
        Ok(DensityMatrix { mat })
    }

    /// Wraps a matrix produced by a structure-preserving map (unitary
    /// conjugation, permutation, partial trace of a valid state) without
    /// re-running the O(n³) positivity check.
    pub fn from_trusted(mat: Mat<C64>) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        DensityMatrix { mat }
    }

    /// Normalizes a positive matrix to unit trace.
    pub fn normalized(mat: Mat<C64>) -> Result<Self> {
        check_square(&mat)?;
        let tr = trace(&mat).re;
        if tr.is_nan() || tr <= 0.0 {
            return Err(Error::Trace(tr));
        }
        DensityMatrix::new(Mat::from_fn(mat.nrows(), mat.ncols(), |a, b| {
            mat[(a, b)] / tr
        }))
    }

    /// `|ψ⟩⟨ψ|` for a vector normalized here.
    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if amplitudes.is_empty() || norm2 <= 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        let s = 1.0 / norm2;
        let n = amplitudes.len();
        Ok(DensityMatrix {
            mat: Mat::from_fn(n, n, |a, b| amplitudes[a] * amplitudes[b].conj() * s),
        })
    }

    /// `Σ p_k |k⟩⟨k|`; the weights must sum to one.
    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|&w| w < -PSD_TOL || !w.is_finite()) {
            return Err(Error::NotPositive(
                weights.iter().copied().fold(f64::INFINITY, f64::min),
            ));
        }
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::Trace(total));
        }
        let n = weights.len();
        Ok(DensityMatrix {
            mat: Mat::from_fn(n, n, |a, b| {
                if a == b {
                    C64::new(weights[a], 0.0)
                } else {
                    zero()
                }
            }),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix::diagonal(&vec![1.0 / dim as f64; dim]).expect("uniform weights")
    }

    pub fn basis_state(dim: usize, k: usize) -> Self {
        let mut w = vec![0.0; dim];
        w[k] = 1.0;
        DensityMatrix::diagonal(&w).expect("basis weights")
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Mat<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Mat<C64> {
        self.mat
    }

    pub fn get(&self, a: usize, b: usize) -> C64 {
        self.mat[(a, b)]
    }

    pub fn trace(&self) -> f64 {
        trace(&self.mat).re
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += self.mat[(a, b)].norm_sqr();
            }
        }
        s
    }

    /// Eigenvalues in nondecreasing order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        HermitianEigen::eigenvalues_of(&self.mat)
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix::from_trusted(kron(&self.mat, &other.mat))
    }

    /// Largest entrywise distance to another matrix of the same size.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        max_abs_diff(&self.mat, &other.mat)
    }
}

pub fn max_abs_diff(a: &Mat<C64>, b: &Mat<C64>) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(a.ncols(), b.ncols());
    let mut d = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            d = d.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    d
}

/// Hermitian matrix used as a Hamiltonian (ħ = 1).
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    mat: Mat<C64>,
}

impl HermitianOperator {
    pub fn new(mat: Mat<C64>) -> Result<Self> {
        check_square(&mat)?;
        let dev = hermitian_deviation(&mat);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(HermitianOperator { mat })
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianOperator {
            mat: Mat::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOperator {
            mat: Mat::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Mat<C64> {
        &self.mat
    }

    pub fn get(&self, a: usize, b: usize) -> C64 {
        self.mat[(a, b)]
    }

    pub fn tensor(&self, other: &HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            mat: kron(&self.mat, &other.mat),
        }
    }

    pub fn scaled(&self, factor: f64) -> HermitianOperator {
        let n = self.dim();
        HermitianOperator {
            mat: Mat::from_fn(n, n, |a, b| self.mat[(a, b)] * factor),
        }
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<HermitianOperator> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "cannot add operators of dim {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        let n = self.dim();
        Ok(HermitianOperator {
            mat: Mat::from_fn(n, n, |a, b| self.mat[(a, b)] + other.mat[(a, b)]),
        })
    }

    pub fn sub(&self, other: &HermitianOperator) -> Result<HermitianOperator> {
        self.add(&other.scaled(-1.0))
    }

    /// Maximum absolute row sum, an upper bound on the spectral radius.
    pub fn gershgorin_bound(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|a| (0..n).map(|b| self.mat[(a, b)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> Result<f64> {
        Ok(HermitianEigen::eigenvalues_of(&self.mat)?
            .into_iter()
            .fold(0.0, |m, e| m.max(e.abs())))
    }
}

/// Ordered subsystem labels with their local dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsystemLayout {
    labels: Vec<String>,
    dims: Vec<usize>,
}

impl SubsystemLayout {
    pub fn new<S: Into<String>>(parts: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let (labels, dims): (Vec<String>, Vec<usize>) =
            parts.into_iter().map(|(l, d)| (l.into(), d)).unzip();
        if labels.is_empty() {
            return Err(Error::Layout("no subsystems".into()));
        }
        if let Some(d) = dims.iter().position(|&d| d == 0) {
            return Err(Error::Layout(format!(
                "subsystem `{}` has dimension 0",
                labels[d]
            )));
        }
        for (k, l) in labels.iter().enumerate() {
            if l.is_empty() {
                return Err(Error::Layout("empty label".into()));
            }
            if labels[..k].contains(l) {
                return Err(Error::Layout(format!("duplicate label `{l}`")));
            }
        }
        Ok(SubsystemLayout { labels, dims })
    }

    /// All subsystems share dimension `d`.
    pub fn uniform(labels: &[&str], d: usize) -> Result<Self> {
        SubsystemLayout::new(labels.iter().map(|l| (*l, d)))
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.dims[self.index_of(label)?])
    }

    /// Place value of each subsystem's digit in the flat index.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.dims[k + 1];
        }
        s
    }

    pub fn flat_index(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.dims.len());
        digits.iter().zip(self.strides()).map(|(d, s)| d * s).sum()
    }

    pub fn digits(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            out[k] = flat % self.dims[k];
            flat /= self.dims[k];
        }
        out
    }

    /// Copy of the layout with one label replaced.
    pub fn relabeled(&self, slot: usize, label: &str) -> Result<Self> {
        let mut parts: Vec<(String, usize)> = self
            .labels
            .iter()
            .cloned()
            .zip(self.dims.iter().copied())
            .collect();
        parts[slot].0 = label.to_string();
        SubsystemLayout::new(parts)
    }

    /// Layout restricted to the given labels, in layout order.
    pub fn restricted(&self, keep: &[&str]) -> Result<Self> {
        for k in keep {
            self.index_of(k)?;
        }
        SubsystemLayout::new(
            self.labels
                .iter()
                .zip(&self.dims)
                .filter(|(l, _)| keep.contains(&l.as_str()))
                .map(|(l, d)| (l.clone(), *d)),
        )
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.total_dim() != dim {
            return Err(Error::Dimension(format!(
                "layout {:?} has dimension {} but the state has dimension {}",
                self.labels,
                self.total_dim(),
                dim
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for SubsystemLayout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .labels
            .iter()
            .zip(&self.dims)
            .map(|(l, d)| format!("{l}={d}"))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

impl std::str::FromStr for SubsystemLayout {
    type Err = Error;

    /// Parses `S=12,E1=12,E2=12`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = Vec::new();
        for item in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (label, dim) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected LABEL=DIM, got `{item}`")))?;
            let dim: usize = dim
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad dimension in `{item}`")))?;
            parts.push((label.trim().to_string(), dim));
        }
        SubsystemLayout::new(parts)
    }
}

/// Runs dense kernels on the calling thread; parallelism then comes only from
/// the rayon loops of the callers.
pub fn use_sequential_kernels() {
    faer::set_global_parallelism(faer::Par::Seq);
}
