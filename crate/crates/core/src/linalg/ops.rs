use faer::Mat;

use super::{
    hermitian_deviation, zero, DensityMatrix, HermitianEigen, HermitianOperator, Propagator,
    SubsystemLayout, C64, HERMITIAN_TOL, PSD_TOL,
};
use crate::error::{Error, Result};

/// Kronecker product; the left factor is the slow index.
pub fn kron(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

pub trait TensorProduct {
    fn tensor_with(&self, other: &Self) -> Self;
}

impl TensorProduct for DensityMatrix {
    fn tensor_with(&self, other: &Self) -> Self {
        self.tensor(other)
    }
}

impl TensorProduct for HermitianOperator {
    fn tensor_with(&self, other: &Self) -> Self {
        self.tensor(other)
    }
}

/// `a ⊗ b` for states or operators.
pub fn tensor<T: TensorProduct>(a: &T, b: &T) -> T {
    a.tensor_with(b)
}

/// Precomputed index bookkeeping for tracing out part of a layout.
#[derive(Clone, Debug)]
pub struct ReduceSpec {
    layout: SubsystemLayout,
    kept: Vec<usize>,
    traced: Vec<usize>,
    full_dim: usize,
    /// Stride and dimension of a subsystem sandwiched between basis states
    /// rather than traced.
    pin: Option<(usize, usize)>,
}

/// Flat offsets of every digit combination of the selected subsystems, with
/// the first selected subsystem varying slowest.
fn offsets(layout: &SubsystemLayout, selected: &[usize]) -> Vec<usize> {
    let strides = layout.strides();
    let mut out = vec![0usize];
    for &k in selected {
        let (d, stride) = (layout.dims()[k], strides[k]);
        out = out
            .iter()
            .flat_map(|&base| (0..d).map(move |x| base + x * stride))
            .collect();
    }
    out
}

impl ReduceSpec {
    pub fn new(layout: &SubsystemLayout, keep: &[&str]) -> Result<Self> {
        Self::build(layout, None, keep)
    }

    /// Reduction computing `⟨i|_P Tr_rest(m) |j⟩_P` on `keep`, where `P` is
    /// the pinned subsystem.
    pub fn pinned(layout: &SubsystemLayout, pinned: &str, keep: &[&str]) -> Result<Self> {
        if keep.contains(&pinned) {
            return Err(Error::InvalidParameter(format!(
                "subsystem {pinned} cannot be both pinned and kept"
            )));
        }
        Self::build(layout, Some(pinned), keep)
    }

    fn build(layout: &SubsystemLayout, pinned: Option<&str>, keep: &[&str]) -> Result<Self> {
        let pin_slot = pinned.map(|p| layout.index_of(p)).transpose()?;
        if keep.is_empty() {
            return Err(Error::InvalidParameter(
                "partial trace must keep at least one subsystem".into(),
            ));
        }
        let mut kept_slots = Vec::new();
        for label in keep {
            let slot = layout.index_of(label)?;
            if !kept_slots.contains(&slot) {
                kept_slots.push(slot);
            }
        }
        kept_slots.sort_unstable();
        let traced_slots: Vec<usize> = (0..layout.len())
            .filter(|k| !kept_slots.contains(k) && Some(*k) != pin_slot)
            .collect();
        let strides = layout.strides();
        let reduced = SubsystemLayout::new(
            kept_slots
                .iter()
                .map(|&k| (layout.labels()[k].clone(), layout.dims()[k])),
        )?;
        Ok(ReduceSpec {
            layout: reduced,
            kept: offsets(layout, &kept_slots),
            traced: offsets(layout, &traced_slots),
            full_dim: layout.total_dim(),
            pin: pin_slot.map(|k| (strides[k], layout.dims()[k])),
        })
    }

    /// Layout of the reduced state.
    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    /// Dimension of the pinned subsystem, if any.
    pub fn pinned_dim(&self) -> Option<usize> {
        self.pin.map(|(_, d)| d)
    }

    pub fn apply(&self, m: &Mat<C64>) -> Mat<C64> {
        assert!(self.pin.is_none(), "pinned reduction needs basis indices");
        self.contract(m, 0, 0)
    }

    /// `⟨i|_P Tr_rest(m) |j⟩_P`.
    pub fn apply_pinned(&self, m: &Mat<C64>, i: usize, j: usize) -> Mat<C64> {
        let (stride, d) = self.pin.expect("reduction has no pinned subsystem");
        assert!(i < d && j < d, "pinned index out of range");
        self.contract(m, i * stride, j * stride)
    }

    fn contract(&self, m: &Mat<C64>, row0: usize, col0: usize) -> Mat<C64> {
        assert_eq!(
            m.nrows(),
            self.full_dim,
            "reduce spec applied to wrong dimension"
        );
        let n = self.kept.len();
        let mut out = Mat::<C64>::zeros(n, n);
        for (b, &kb) in self.kept.iter().enumerate() {
            for (a, &ka) in self.kept.iter().enumerate() {
                let mut acc = zero();
                for &t in &self.traced {
                    acc += m[(row0 + ka + t, col0 + kb + t)];
                }
                out[(a, b)] = acc;
            }
        }
        out
    }
}

/// Reduced state on `keep`, subsystems in layout order.
pub fn partial_trace(
    rho: &DensityMatrix,
    layout: &SubsystemLayout,
    keep: &[&str],
) -> Result<DensityMatrix> {
    layout.check_dim(rho.dim())?;
    let spec = ReduceSpec::new(layout, keep)?;
    Ok(DensityMatrix::from_trusted(spec.apply(rho.matrix())))
}

fn scale_of(m: &Mat<C64>) -> f64 {
    let mut s = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s = s.max(m[(i, j)].norm());
        }
    }
    s.max(1.0)
}

/// Principal square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues in `[−1e−10, 0)` are treated as zero; lower ones are an error.
pub fn matrix_sqrt(m: &Mat<C64>) -> Result<Mat<C64>> {
    sqrt_with_tolerance(m, PSD_TOL)
}

/// [`matrix_sqrt`] with a caller-chosen clamping tolerance, for matrices whose
/// rounding noise is known to be larger (e.g. conditional states of small weight).
pub fn sqrt_with_tolerance(m: &Mat<C64>, psd_tol: f64) -> Result<Mat<C64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension("matrix_sqrt needs a square matrix".into()));
    }
    let dev = hermitian_deviation(m);
    if dev > HERMITIAN_TOL * scale_of(m) {
        return Err(Error::NotHermitian(dev));
    }
    let eigen = HermitianEigen::new(m)?;
    let values = eigen.eigenvalues();
    if let Some(&lowest) = values.first() {
        if lowest < -psd_tol {
            return Err(Error::NotPositive(lowest));
        }
    }
    // Eigenvalues at rounding level are zeros in disguise; their square roots
    // (~1e−8) would otherwise dominate the error of fidelities.
    let top = values.last().copied().unwrap_or(0.0).max(0.0);
    let cutoff = m.nrows() as f64 * f64::EPSILON * top;
    Ok(eigen.apply_function(|e| C64::new(if e > cutoff { e.sqrt() } else { 0.0 }, 0.0)))
}

/// Sum of singular values.
pub fn trace_norm(m: &Mat<C64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].norm();
    }
    m.as_ref()
        .singular_values()
        .expect("svd did not converge")
        .into_iter()
        .sum()
}

fn same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!(
            "states have dims {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Fidelity `B(ρ, σ) = ‖√ρ √σ‖₁`, clamped to `[0, 1]`.
pub fn fidelity_b(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dim(rho, sigma)?;
    let a = matrix_sqrt(rho.matrix())?;
    let b = matrix_sqrt(sigma.matrix())?;
    let prod = a.as_ref() * b.as_ref();
    Ok(trace_norm(&prod).clamp(0.0, 1.0))
}

/// Overlap `L(ρ, σ) = Tr[ρσ]`.
pub fn overlap_l(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dim(rho, sigma)?;
    let n = rho.dim();
    let mut acc = zero();
    for a in 0..n {
        for b in 0..n {
            acc += rho.get(a, b) * sigma.get(b, a);
        }
    }
    Ok(acc.re.max(0.0))
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    Ok(shannon_entropy(&rho.eigenvalues()?))
}

/// `U ρ U†` with `U = exp(−iHt)`. Use [`Propagator`] directly to reuse the
/// factorization across many times.
pub fn evolve(rho: &DensityMatrix, h: &HermitianOperator, t: f64) -> Result<DensityMatrix> {
    if rho.dim() != h.dim() {
        return Err(Error::Dimension(format!(
            "state has dim {}, Hamiltonian has dim {}",
            rho.dim(),
            h.dim()
        )));
    }
    Propagator::new(h)?.evolve(rho, t)
}
