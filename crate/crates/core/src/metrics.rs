//! Objectivity diagnostics of a multipartite state relative to a system
//! subsystem and a pointer basis.

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::{
    kron, sqrt_with_tolerance, trace_norm, von_neumann_entropy, DensityMatrix, ReduceSpec,
    SubsystemLayout, C64, PSD_TOL,
};
use crate::ring::FramedState;

/// Branches with `p_i` below this are skipped; their conditional states are undefined.
pub const CONDITIONAL_THRESHOLD: f64 = 1e-12;

/// Basis in which the system is read out.
#[derive(Clone, Debug, Default)]
pub enum PointerBasis {
    /// Computational (position) basis.
    #[default]
    Position,
    /// Columns are the basis vectors.
    Custom(Mat<C64>),
}

impl PointerBasis {
    /// Checks orthonormality to 1e−10.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let PointerBasis::Custom(v) = self else {
            return Ok(());
        };
        if v.nrows() != dim || v.ncols() != dim {
            return Err(Error::Dimension(format!(
                "pointer basis is {}x{}, system has dim {dim}",
                v.nrows(),
                v.ncols()
            )));
        }
        let gram = v.as_ref().adjoint() * v.as_ref();
        let mut dev = 0.0f64;
        for a in 0..dim {
            for b in 0..dim {
                let expect = if a == b { 1.0 } else { 0.0 };
                dev = dev.max((gram[(a, b)] - C64::new(expect, 0.0)).norm());
            }
        }
        if dev > 1e-10 {
            return Err(Error::Basis(dev));
        }
        Ok(())
    }
}

/// State rewritten so that the pointer basis is the computational basis of `system`.
fn in_pointer_basis(
    rho: &DensityMatrix,
    layout: &SubsystemLayout,
    system: &str,
    basis: &PointerBasis,
) -> Result<DensityMatrix> {
    layout.check_dim(rho.dim())?;
    let slot = layout.index_of(system)?;
    basis.validate(layout.dims()[slot])?;
    let PointerBasis::Custom(v) = basis else {
        return Ok(rho.clone());
    };
    let mut w = Mat::<C64>::identity(1, 1);
    for (k, &d) in layout.dims().iter().enumerate() {
        let factor = if k == slot {
            v.adjoint().to_owned()
        } else {
            Mat::<C64>::identity(d, d)
        };
        w = kron(&w, &factor);
    }
    let left = w.as_ref() * rho.matrix().as_ref();
    Ok(DensityMatrix::from_trusted(
        left.as_ref() * w.as_ref().adjoint(),
    ))
}

fn reduced(rho: &DensityMatrix, layout: &SubsystemLayout, keep: &[&str]) -> Result<Mat<C64>> {
    Ok(ReduceSpec::new(layout, keep)?.apply(rho.matrix()))
}

/// `p_i = ⟨i| Tr_rest ρ |i⟩`, clamped at zero.
pub fn system_spectrum(
    rho: &DensityMatrix,
    layout: &SubsystemLayout,
    system: &str,
    basis: &PointerBasis,
) -> Result<Vec<f64>> {
    let rho = in_pointer_basis(rho, layout, system, basis)?;
    let rs = reduced(&rho, layout, &[system])?;
    Ok((0..rs.nrows()).map(|k| rs[(k, k)].re.max(0.0)).collect())
}

fn conditional_blocks(
    rho: &DensityMatrix,
    layout: &SubsystemLayout,
    system: &str,
    observers: &[&str],
) -> Result<Vec<Mat<C64>>> {
    let spec = ReduceSpec::pinned(layout, system, observers)?;
    let d = spec.pinned_dim().expect("pinned");
    Ok((0..d)
        .map(|i| spec.apply_pinned(rho.matrix(), i, i))
        .collect())
}

fn normalize_block(block: &Mat<C64>, index: usize) -> Result<(f64, DensityMatrix)> {
    let p: f64 = (0..block.nrows()).map(|k| block[(k, k)].re).sum();
    if p < CONDITIONAL_THRESHOLD {
        return Err(Error::UndefinedConditional { index, p });
    }
    let n = block.nrows();
    let m = Mat::from_fn(n, n, |a, b| {
        if a == b {
            C64::new(block[(a, a)].re / p, 0.0)
        } else {
            (block[(a, b)] + block[(b, a)].conj()) * (0.5 / p)
        }
    });
    Ok((p, DensityMatrix::from_trusted(m)))
}

/// `ρ_{obs|i} = ⟨i|_S Tr_rest ρ |i⟩_S / p_i`.
pub fn conditional_state(
    rho: &DensityMatrix,
    layout: &SubsystemLayout,
    system: &str,
    observers: &[&str],
    i: usize,
    basis: &PointerBasis,
) -> Result<DensityMatrix> {
    let rho = in_pointer_basis(rho, layout, system, basis)?;
    let spec = ReduceSpec::pinned(layout, system, observers)?;
    let d = spec.pinned_dim().expect("pinned");
    if i >= d {
        return Err(Error::InvalidParameter(format!("branch index {i} >= {d}")));
    }
    normalize_block(&spec.apply_pinned(rho.matrix(), i, i), i).map(|(_, s)| s)
}

/// Conditional states for every branch; `None` where `p_i` is below threshold.
fn conditional_states(
    rho: &DensityMatrix,
    layout: &SubsystemLayout,
    system: &str,
    observers: &[&str],
) -> Result<Vec<Option<DensityMatrix>>> {
    conditional_blocks(rho, layout, system, observers)?
        .iter()
        .enumerate()
        .map(|(i, b)| match normalize_block(b, i) {
            Ok((_, s)) => Ok(Some(s)),
            Err(Error::UndefinedConditional { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// Fidelity `B` between two states given their square roots.
fn fidelity_from_roots(a: &Mat<C64>, b: &Mat<C64>) -> f64 {
    let prod = a.as_ref() * b.as_ref();
    trace_norm(&prod).clamp(0.0, 1.0)
}

/// Table `B(ρ_{X|i}, ρ_{X|j})`. Rows and columns of undefined branches hold
/// NaN off the diagonal.
pub fn fidelity_table(p: &[f64], states: &[Option<DensityMatrix>]) -> Result<Vec<Vec<f64>>> {
    let n = states.len();
    let roots = states
        .iter()
        .zip(p)
        .map(|(s, &pi)| {
            s.as_ref()
                .map(|s| sqrt_with_tolerance(s.matrix(), PSD_TOL.max(PSD_TOL / pi.max(1e-300))))
                .transpose()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = vec![vec![f64::NAN; n]; n];
    for i in 0..n {
        table[i][i] = 1.0;
        for j in i + 1..n {
            if let (Some(a), Some(b)) = (&roots[i], &roots[j]) {
                let f = fidelity_from_roots(a, b);
                table[i][j] = f;
                table[j][i] = f;
            }
        }
    }
    Ok(table)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorBounds {
    pub lower: f64,
    pub upper: f64,
}

impl ErrorBounds {
    /// The upper bound carries no information once it reaches 1.
    pub fn trivial(&self) -> bool {
        self.upper >= 1.0
    }
}

/// Sandwich on the minimum error of identifying `i` from the conditional
/// states: `Σ_{i<j} p_i p_j B² ≤ P_err ≤ Σ_{i≠j} √(p_i p_j) B`.
/// Pairs with a NaN entry or a weight below threshold are skipped.
pub fn error_bounds(p: &[f64], fid: &[Vec<f64>]) -> ErrorBounds {
    let mut lower = 0.0;
    let mut upper = 0.0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            let b = fid[i][j];
            if b.is_nan() || p[i] < CONDITIONAL_THRESHOLD || p[j] < CONDITIONAL_THRESHOLD {
                continue;
            }
            lower += p[i] * p[j] * b * b;
            upper += 2.0 * (p[i] * p[j]).sqrt() * b;
        }
    }
    ErrorBounds { lower, upper }
}

/// `Σ_{i≠j} |⟨i|ρ_S|j⟩|` of the reduced system state.
pub fn decoherence_gamma(
    rho: &DensityMatrix,
    layout: &SubsystemLayout,
    system: &str,
    basis: &PointerBasis,
) -> Result<f64> {
    let rho = in_pointer_basis(rho, layout, system, basis)?;
    let rs = reduced(&rho, layout, &[system])?;
    Ok(off_diagonal_sum(&rs))
}

fn off_diagonal_sum(m: &Mat<C64>) -> f64 {
    let n = m.nrows();
    let mut s = 0.0;
    for a in 0..n {
        for b in 0..n {
            if a != b {
                s += m[(a, b)].norm();
            }
        }
    }
    s
}

/// `Σ_{i≠j} ‖⟨i|_S ρ |j⟩_S‖₁` over the full state. Unlike
/// [`decoherence_gamma`] this sees coherence hidden in correlations, e.g. in GHZ states.
pub fn block_coherence(
    rho: &DensityMatrix,
    layout: &SubsystemLayout,
    system: &str,
    basis: &PointerBasis,
) -> Result<f64> {
    let rho = in_pointer_basis(rho, layout, system, basis)?;
    let others: Vec<&str> = layout
        .labels()
        .iter()
        .map(String::as_str)
        .filter(|l| *l != system)
        .collect();
    let d = layout.dim_of(system)?;
    if others.is_empty() {
        return decoherence_gamma(&rho, layout, system, &PointerBasis::Position);
    }
    let spec = ReduceSpec::pinned(layout, system, &others)?;
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                s += trace_norm(&spec.apply_pinned(rho.matrix(), i, j));
            }
        }
    }
    Ok(s)
}

fn other_labels<'a>(layout: &'a SubsystemLayout, system: &str) -> Vec<&'a str> {
    layout
        .labels()
        .iter()
        .map(String::as_str)
        .filter(|l| *l != system)
        .collect()
}

/// `η = Γ + Σ_{i≠j} √(p_i p_j) Σ_k B(ρ_{E_k|i}, ρ_{E_k|j})` over every
/// non-system subsystem.
pub fn eta_bound(
    rho: &DensityMatrix,
    layout: &SubsystemLayout,
    system: &str,
    basis: &PointerBasis,
) -> Result<f64> {
    let rho = in_pointer_basis(rho, layout, system, basis)?;
    let p = system_spectrum(&rho, layout, system, &PointerBasis::Position)?;
    let mut eta = decoherence_gamma(&rho, layout, system, &PointerBasis::Position)?;
    for obs in other_labels(layout, system) {
        let states = conditional_states(&rho, layout, system, &[obs])?;
        eta += error_bounds(&p, &fidelity_table(&p, &states)?).upper;
    }
    Ok(eta)
}

fn entropy_of(m: &Mat<C64>) -> Result<f64> {
    von_neumann_entropy(&DensityMatrix::from_trusted(m.clone()))
}

/// `Σ_i p_i [H(A|i) + H(B|i) − H(AB|i)]`, skipping branches below threshold.
pub fn conditional_mutual_information(
    rho: &DensityMatrix,
    layout: &SubsystemLayout,
    system: &str,
    basis: &PointerBasis,
    observers: (&str, &str),
) -> Result<f64> {
    let (a, b) = observers;
    if a == b || a == system || b == system {
        return Err(Error::InvalidParameter(format!(
            "observers {a}, {b} must be distinct and differ from {system}"
        )));
    }
    let rho = in_pointer_basis(rho, layout, system, basis)?;
    cmi_position(&rho, layout, system, a, b)
}

fn cmi_position(
    rho: &DensityMatrix,
    layout: &SubsystemLayout,
    system: &str,
    a: &str,
    b: &str,
) -> Result<f64> {
    let joint_layout = layout.restricted(&[a, b])?;
    let to_a = ReduceSpec::new(&joint_layout, &[a])?;
    let to_b = ReduceSpec::new(&joint_layout, &[b])?;
    let mut total = 0.0;
    for (i, block) in conditional_blocks(rho, layout, system, &[a, b])?
        .iter()
        .enumerate()
    {
        let Ok((p, joint)) = normalize_block(block, i) else {
            continue;
        };
        let ha = entropy_of(&to_a.apply(joint.matrix()))?;
        let hb = entropy_of(&to_b.apply(joint.matrix()))?;
        let hab = von_neumann_entropy(&joint)?;
        total += p * (ha + hb - hab);
    }
    Ok(total)
}

/// `H(Σ p_i ρ_i) − Σ p_i H(ρ_i)`; branches below threshold are ignored.
pub fn holevo_information(p: &[f64], states: &[DensityMatrix]) -> Result<f64> {
    if p.len() != states.len() || states.is_empty() {
        return Err(Error::Dimension(format!(
            "{} weights for {} states",
            p.len(),
            states.len()
        )));
    }
    let dim = states[0].dim();
    let mut avg = Mat::<C64>::zeros(dim, dim);
    let mut inner = 0.0;
    for (&pi, s) in p.iter().zip(states) {
        if s.dim() != dim {
            return Err(Error::Dimension(
                "ensemble states differ in dimension".into(),
            ));
        }
        if pi < CONDITIONAL_THRESHOLD {
            continue;
        }
        for b in 0..dim {
            for a in 0..dim {
                avg[(a, b)] += s.get(a, b) * pi;
            }
        }
        inner += pi * von_neumann_entropy(s)?;
    }
    Ok(entropy_of(&avg)? - inner)
}

/// `H(A) + H(B) − H(AB)`.
pub fn quantum_mutual_information(
    rho: &DensityMatrix,
    layout: &SubsystemLayout,
    a: &str,
    b: &str,
) -> Result<f64> {
    if a == b {
        return Err(Error::InvalidParameter(format!(
            "labels {a} and {b} coincide"
        )));
    }
    layout.check_dim(rho.dim())?;
    let joint_layout = layout.restricted(&[a, b])?;
    let joint = reduced(rho, layout, &[a, b])?;
    let ha = entropy_of(&ReduceSpec::new(&joint_layout, &[a])?.apply(&joint))?;
    let hb = entropy_of(&ReduceSpec::new(&joint_layout, &[b])?.apply(&joint))?;
    Ok(ha + hb - entropy_of(&joint)?)
}

/// Diagnostics for one observer subsystem.
#[derive(Clone, Debug)]
pub struct ObserverReport {
    pub label: String,
    /// `B(ρ_{X|i}, ρ_{X|j})`, NaN where a branch is undefined.
    pub fidelity: Vec<Vec<f64>>,
    pub bounds: ErrorBounds,
    pub holevo: f64,
    /// Mutual information between the system and this observer.
    pub qmi: f64,
}

/// Every diagnostic of one state in one frame.
#[derive(Clone, Debug)]
pub struct SbsReport {
    pub frame: String,
    pub system: String,
    pub spectrum: Vec<f64>,
    pub observers: Vec<ObserverReport>,
    pub gamma: f64,
    pub eta: f64,
    /// Conditional mutual information between the observers, when there are exactly two.
    pub i_mean: Option<f64>,
}

impl SbsReport {
    pub fn compute(state: &FramedState, system: &str, basis: &PointerBasis) -> Result<SbsReport> {
        let layout = &state.layout;
        let rho = in_pointer_basis(&state.rho, layout, system, basis)?;
        let rs = reduced(&rho, layout, &[system])?;
        let spectrum: Vec<f64> = (0..rs.nrows()).map(|k| rs[(k, k)].re.max(0.0)).collect();
        let gamma = off_diagonal_sum(&rs);
        let labels = other_labels(layout, system);
        let mut observers = Vec::with_capacity(labels.len());
        let mut eta = gamma;
        for &obs in &labels {
            let states = conditional_states(&rho, layout, system, &[obs])?;
            let fidelity = fidelity_table(&spectrum, &states)?;
            let bounds = error_bounds(&spectrum, &fidelity);
            eta += bounds.upper;
            let h_avg = entropy_of(&reduced(&rho, layout, &[obs])?)?;
            let mut inner = 0.0;
            for (s, &p) in states.iter().zip(&spectrum) {
                if let Some(s) = s {
                    inner += p * von_neumann_entropy(s)?;
                }
            }
            observers.push(ObserverReport {
                label: obs.to_string(),
                fidelity,
                bounds,
                holevo: h_avg - inner,
                qmi: quantum_mutual_information(&rho, layout, system, obs)?,
            });
        }
        let i_mean = match labels.as_slice() {
            [a, b] => Some(cmi_position(&rho, layout, system, a, b)?),
            _ => None,
        };
        Ok(SbsReport {
            frame: state.frame.clone(),
            system: system.to_string(),
            spectrum,
            observers,
            gamma,
            eta,
            i_mean,
        })
    }

    pub fn observer(&self, label: &str) -> Option<&ObserverReport> {
        self.observers.iter().find(|o| o.label == label)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SaturationStats {
    pub i_sat: f64,
    pub sigma_i: f64,
    pub t_sat: f64,
    /// Samples inside the window.
    pub n_window: usize,
}

/// Plateau statistics of a time series: mean and RMS deviation over the
/// window, and the first time the series comes within one deviation of the mean.
pub fn saturation_stats(series: &[(f64, f64)], window: (f64, f64)) -> Result<SaturationStats> {
    let inside: Vec<f64> = series
        .iter()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .map(|&(_, i)| i)
        .collect();
    if inside.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no samples in window [{}, {}]",
            window.0, window.1
        )));
    }
    let n = inside.len() as f64;
    let i_sat = inside.iter().sum::<f64>() / n;
    let sigma_i = (inside.iter().map(|i| (i - i_sat).powi(2)).sum::<f64>() / n).sqrt();
    let t_sat = series
        .iter()
        .find(|(_, i)| *i >= i_sat - sigma_i)
        .map(|&(t, _)| t)
        .expect("window samples satisfy the threshold");
    Ok(SaturationStats {
        i_sat,
        sigma_i,
        t_sat,
        n_window: inside.len(),
    })
}
