//! Structural verifiers for exact objectivity across reference frames.
//!
//! Branch specifications describe discrete SBS states
//! `Σ_i p_i |ψ_i⟩⟨ψ_i|_S ⊗ ⨂_j ρ_{E_j|i}` over explicit real position
//! alphabets. The checkers test the distinguishability conditions that keep
//! such states objective after a change to an environment frame.

use std::fmt;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron, DensityMatrix, ReduceSpec, SubsystemLayout, C64};
use crate::metrics::{
    conditional_mutual_information, conditional_state, fidelity_table, PointerBasis,
};
use crate::ring::{FramedState, LAB_FRAME};

/// Default absolute tolerance for comparing positions and overlaps.
pub const DEFAULT_TOL: f64 = 1e-9;

const SPEC_TOL: f64 = 1e-9;

/// System wavefunction `ψ(x|i)` on a finite set of positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wavefunction {
    pub sites: Vec<f64>,
    /// `[re, im]` per site.
    pub amplitudes: Vec<[f64; 2]>,
}

/// Conditional environment state `t(x, x′|i, j)` on a finite set of positions,
/// given either as a full matrix or as diagonal weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConditional {
    pub sites: Vec<f64>,
    /// Rows of `[re, im]` entries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub system: Wavefunction,
    #[serde(default)]
    pub env: Vec<EnvConditional>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    pub p: Vec<f64>,
    #[serde(rename = "branch")]
    pub branches: Vec<Branch>,
}

fn c(v: [f64; 2]) -> C64 {
    C64::new(v[0], v[1])
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn check_sites(sites: &[f64], what: &str) -> Result<()> {
    if sites.iter().any(|x| !x.is_finite()) {
        return Err(bad(format!("{what}: non-finite site")));
    }
    let mut sorted = sites.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[1] - w[0] <= SPEC_TOL) {
        return Err(bad(format!("{what}: repeated site")));
    }
    Ok(())
}

impl Wavefunction {
    pub fn amplitude(&self, k: usize) -> C64 {
        c(self.amplitudes[k])
    }

    fn validate(&self, what: &str) -> Result<()> {
        check_sites(&self.sites, what)?;
        if self.sites.len() != self.amplitudes.len() || self.sites.is_empty() {
            return Err(bad(format!(
                "{what}: {} sites but {} amplitudes",
                self.sites.len(),
                self.amplitudes.len()
            )));
        }
        let norm: f64 = self.amplitudes.iter().map(|&a| c(a).norm_sqr()).sum();
        if (norm - 1.0).abs() > SPEC_TOL {
            return Err(bad(format!("{what}: norm² = {norm}, expected 1")));
        }
        Ok(())
    }

    /// `⟨self|other⟩` with `other` displaced by `shift`.
    fn overlap(&self, shift_self: f64, other: &Wavefunction, shift_other: f64, tol: f64) -> C64 {
        let mut sum = C64::new(0.0, 0.0);
        for (k, &x) in self.sites.iter().enumerate() {
            for (l, &y) in other.sites.iter().enumerate() {
                if ((x + shift_self) - (y + shift_other)).abs() <= tol {
                    sum += self.amplitude(k).conj() * other.amplitude(l);
                }
            }
        }
        sum
    }
}

impl EnvConditional {
    /// Dense matrix over `sites`.
    pub fn to_matrix(&self) -> Result<Vec<Vec<C64>>> {
        let n = self.sites.len();
        match (&self.matrix, &self.weights) {
            (Some(m), None) => {
                if m.len() != n || m.iter().any(|r| r.len() != n) {
                    return Err(bad(format!("environment matrix must be {n}×{n}")));
                }
                Ok(m.iter()
                    .map(|r| r.iter().map(|&v| c(v)).collect())
                    .collect())
            }
            (None, Some(w)) => {
                if w.len() != n {
                    return Err(bad(format!("{} weights for {n} sites", w.len())));
                }
                Ok((0..n)
                    .map(|a| {
                        (0..n)
                            .map(|b| C64::new(if a == b { w[a] } else { 0.0 }, 0.0))
                            .collect()
                    })
                    .collect())
            }
            _ => Err(bad(
                "environment needs exactly one of `matrix` or `weights`",
            )),
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        check_sites(&self.sites, what)?;
        if self.sites.is_empty() {
            return Err(bad(format!("{what}: no sites")));
        }
        let m = self.to_matrix()?;
        let n = m.len();
        let mat = Mat::from_fn(n, n, |a, b| m[a][b]);
        DensityMatrix::new(mat).map_err(|e| bad(format!("{what}: {e}")))?;
        Ok(())
    }

    fn diagonal(&self) -> Result<Vec<f64>> {
        let m = self.to_matrix()?;
        Ok((0..m.len()).map(|k| m[k][k].re).collect())
    }

    fn max_coherence(&self) -> Result<f64> {
        let m = self.to_matrix()?;
        let mut worst: f64 = 0.0;
        for (a, row) in m.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                if a != b {
                    worst = worst.max(v.norm());
                }
            }
        }
        Ok(worst)
    }

    /// Sites carrying weight above `tol`, with their weights.
    fn support(&self, tol: f64) -> Result<Vec<(f64, f64)>> {
        Ok(self
            .sites
            .iter()
            .zip(self.diagonal()?)
            .filter(|(_, w)| *w > tol)
            .map(|(&x, w)| (x, w))
            .collect())
    }

    /// The single site of a pure localized state, if it is one.
    fn localized_site(&self, tol: f64) -> Result<Option<f64>> {
        let support = self.support(tol)?;
        Ok(match support.as_slice() {
            [(x, w)] if (w - 1.0).abs() <= tol && self.max_coherence()? <= tol => Some(*x),
            _ => None,
        })
    }
}

impl BranchSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: BranchSpec = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    /// Number of environments.
    pub fn n_env(&self) -> usize {
        self.branches.first().map_or(0, |b| b.env.len())
    }

    pub fn validate(&self) -> Result<()> {
        if self.p.is_empty() || self.p.len() != self.branches.len() {
            return Err(bad(format!(
                "{} probabilities for {} branches",
                self.p.len(),
                self.branches.len()
            )));
        }
        if self.p.iter().any(|&p| !(p >= 0.0))
            || (self.p.iter().sum::<f64>() - 1.0).abs() > SPEC_TOL
        {
            return Err(bad("probabilities must be nonnegative and sum to 1"));
        }
        let n = self.n_env();
        if n == 0 {
            return Err(bad("at least one environment is required"));
        }
        for (i, b) in self.branches.iter().enumerate() {
            b.system.validate(&format!("branch {i} system"))?;
            if b.env.len() != n {
                return Err(bad(format!(
                    "branch {i} has {} environments, expected {n}",
                    b.env.len()
                )));
            }
            for (j, e) in b.env.iter().enumerate() {
                e.validate(&format!("branch {i} environment E{}", j + 1))?;
            }
        }
        Ok(())
    }

    /// Localized GHZ-type spec: branch `i` has the system at `positions[i][0]`
    /// and environment `j` at `positions[i][j]`.
    pub fn localized(p: &[f64], positions: &[Vec<f64>]) -> Result<Self> {
        let branches = positions
            .iter()
            .map(|tuple| {
                let (s, envs) = tuple
                    .split_first()
                    .ok_or_else(|| bad("empty position tuple"))?;
                Ok(Branch {
                    system: Wavefunction {
                        sites: vec![*s],
                        amplitudes: vec![[1.0, 0.0]],
                    },
                    env: envs
                        .iter()
                        .map(|&x| EnvConditional {
                            sites: vec![x],
                            matrix: None,
                            weights: Some(vec![1.0]),
                        })
                        .collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = BranchSpec {
            p: p.to_vec(),
            branches,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// One failed condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub condition: String,
    /// Branch and environment indices involved.
    pub indices: Vec<usize>,
    pub magnitude: f64,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "condition ({}): {} [indices {:?}, magnitude {:e}]",
            self.condition, self.detail, self.indices, self.magnitude
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub passed: bool,
    pub violations: Vec<Violation>,
    pub notes: Vec<String>,
}

impl CheckReport {
    fn new(check: &str) -> Self {
        CheckReport {
            check: check.to_string(),
            passed: true,
            violations: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn violate(&mut self, condition: &str, indices: Vec<usize>, magnitude: f64, detail: String) {
        self.passed = false;
        self.violations.push(Violation {
            condition: condition.to_string(),
            indices,
            magnitude,
            detail,
        });
    }

    /// True when some violation names `condition`.
    pub fn cites(&self, condition: &str) -> bool {
        self.violations.iter().any(|v| v.condition == condition)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}: {}",
            self.check,
            if self.passed { "PASS" } else { "FAIL" }
        )?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        Ok(())
    }
}

/// Pairs `(a, b)`, `a < b`, whose values coincide within `tol`.
fn coincident(values: &[f64], tol: f64) -> Vec<(usize, usize, f64)> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = Vec::new();
    for (k, &a) in order.iter().enumerate() {
        for &b in &order[k + 1..] {
            let gap = values[b] - values[a];
            if gap > tol {
                break;
            }
            out.push((a.min(b), a.max(b), gap));
        }
    }
    out.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    out
}

/// Result of moving a localized GHZ-type state to an environment frame.
#[derive(Clone, Debug, PartialEq)]
pub struct GhzTransform {
    /// Slot labels of the transformed tuples: `S`, `C`, then the remaining environments.
    pub labels: Vec<String>,
    /// Per-branch transformed positions.
    pub tuples: Vec<Vec<f64>>,
    pub p: Vec<f64>,
    /// Whether each slot still holds pairwise distinct values.
    pub slot_distinct: Vec<bool>,
    /// Slots whose values all coincide: trivially objective and uncorrelated.
    pub degenerate_slots: Vec<String>,
    /// Every slot distinct, so the same information `{p_i}` is objective.
    pub objective: bool,
}

/// Moves the localized state `Σ p_i |x_i^S, x_i^{E₁}, …⟩⟨…|` to the frame of
/// environment `target` (1-based).
pub fn ghz_frame_transform(
    positions: &[Vec<f64>],
    p: &[f64],
    target: usize,
    tol: f64,
) -> Result<GhzTransform> {
    let arity = positions.first().map_or(0, Vec::len);
    if positions.is_empty() || positions.len() != p.len() {
        return Err(Error::InvalidParameter(format!(
            "{} position tuples for {} probabilities",
            positions.len(),
            p.len()
        )));
    }
    if arity < 2 || positions.iter().any(|t| t.len() != arity) {
        return Err(Error::InvalidParameter(
            "tuples need equal arity ≥ 2".into(),
        ));
    }
    if target == 0 || target >= arity {
        return Err(Error::InvalidParameter(format!(
            "target environment {target} out of range"
        )));
    }
    let mut labels = vec!["S".to_string(), LAB_FRAME.to_string()];
    labels.extend((1..arity).filter(|&j| j != target).map(|j| format!("E{j}")));
    let tuples: Vec<Vec<f64>> = positions
        .iter()
        .map(|t| {
            let anchor = t[target];
            let mut out = vec![t[0] - anchor, -anchor];
            out.extend((1..arity).filter(|&j| j != target).map(|j| t[j] - anchor));
            out
        })
        .collect();
    let slots = labels.len();
    let mut slot_distinct = Vec::with_capacity(slots);
    let mut degenerate_slots = Vec::new();
    for s in 0..slots {
        let values: Vec<f64> = tuples.iter().map(|t| t[s]).collect();
        slot_distinct.push(coincident(&values, tol).is_empty());
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        if values.len() > 1 && hi - lo <= tol {
            degenerate_slots.push(labels[s].clone());
        }
    }
    Ok(GhzTransform {
        objective: slot_distinct.iter().all(|&d| d),
        labels,
        tuples,
        p: p.to_vec(),
        slot_distinct,
        degenerate_slots,
    })
}

/// Conditions for the same objective information in every frame:
/// (a) pure localized environment conditionals, (b) orthogonal system
/// states, (c) distinct environment positions, (d) distinct relative
/// positions between environments, (e) orthogonal shifted system states.
pub fn check_theorem1(spec: &BranchSpec, tol: f64) -> Result<CheckReport> {
    spec.validate()?;
    let mut report = CheckReport::new("theorem1");
    let n_branch = spec.branches.len();
    let n_env = spec.n_env();

    let mut positions = vec![vec![0.0; n_env]; n_branch];
    let mut localized = true;
    for (i, b) in spec.branches.iter().enumerate() {
        for (j, e) in b.env.iter().enumerate() {
            match e.localized_site(tol)? {
                Some(x) => positions[i][j] = x,
                None => {
                    localized = false;
                    let support = e.support(tol)?.len();
                    let purity_gap =
                        (1.0 - e.support(tol)?.iter().map(|(_, w)| *w).fold(0.0, f64::max)).abs();
                    report.violate(
                        "a",
                        vec![i, j + 1],
                        purity_gap.max(e.max_coherence()?),
                        format!("E{} conditional on branch {i} is not a pure localized state ({support} sites)", j + 1),
                    );
                }
            }
        }
    }

    for i in 0..n_branch {
        for ip in i + 1..n_branch {
            let ov = spec.branches[i]
                .system
                .overlap(0.0, &spec.branches[ip].system, 0.0, tol)
                .norm();
            if ov > tol {
                report.violate(
                    "b",
                    vec![i, ip],
                    ov,
                    format!("system states of branches {i} and {ip} overlap"),
                );
            }
        }
    }

    if !localized {
        report
            .notes
            .push("conditions (c)-(e) need localized environments and were not evaluated".into());
        return Ok(report);
    }

    for j in 0..n_env {
        let column: Vec<f64> = positions.iter().map(|t| t[j]).collect();
        for (i, ip, gap) in coincident(&column, tol) {
            report.violate(
                "c",
                vec![i, ip, j + 1],
                gap,
                format!("E{} at the same position in branches {i} and {ip}", j + 1),
            );
        }
    }
    for j in 0..n_env {
        for k in j + 1..n_env {
            let rel: Vec<f64> = positions.iter().map(|t| t[j] - t[k]).collect();
            for (i, ip, gap) in coincident(&rel, tol) {
                report.violate(
                    "d",
                    vec![i, ip, j + 1, k + 1],
                    gap,
                    format!(
                        "E{} − E{} separation repeats in branches {i} and {ip}",
                        j + 1,
                        k + 1
                    ),
                );
            }
        }
    }
    for j in 0..n_env {
        for i in 0..n_branch {
            for ip in i + 1..n_branch {
                let (a, b) = (&spec.branches[i].system, &spec.branches[ip].system);
                let ov = a
                    .overlap(-positions[i][j], b, -positions[ip][j], tol)
                    .norm();
                if ov > tol {
                    report.violate(
                        "e",
                        vec![i, ip, j + 1],
                        ov,
                        format!(
                            "system states of branches {i} and {ip} overlap in the frame of E{}",
                            j + 1
                        ),
                    );
                }
            }
        }
    }
    Ok(report)
}

/// Objective information in one environment frame: weight `p_i t(x|i, j)`
/// for each branch `i` and each position `x` of the frame environment.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSpectrum {
    pub frame: String,
    /// `(i, x, p_i t(x|i, j))`.
    pub branches: Vec<(usize, f64, f64)>,
}

impl FrameSpectrum {
    pub fn weights(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.2).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropositionOutcome {
    pub report: CheckReport,
    /// One entry per environment frame, present when the preconditions hold.
    pub spectra: Vec<FrameSpectrum>,
}

fn supports_overlap(
    a: &[(f64, f64)],
    shift_a: f64,
    b: &[(f64, f64)],
    shift_b: f64,
    tol: f64,
) -> Option<f64> {
    a.iter()
        .flat_map(|&(x, wa)| {
            b.iter()
                .map(move |&(y, wb)| (x + shift_a - (y + shift_b), wa.min(wb)))
        })
        .find(|(gap, _)| gap.abs() <= tol)
        .map(|(_, w)| w)
}

/// Conditions for objectivity in every frame with new objective information,
/// for environment conditionals that are incoherent in position.
pub fn check_proposition1(spec: &BranchSpec, tol: f64) -> Result<PropositionOutcome> {
    spec.validate()?;
    let mut report = CheckReport::new("proposition1");
    let n_branch = spec.branches.len();
    let n_env = spec.n_env();

    for (i, b) in spec.branches.iter().enumerate() {
        for (j, e) in b.env.iter().enumerate() {
            let coh = e.max_coherence()?;
            if coh > tol {
                report.violate(
                    "incoherent",
                    vec![i, j + 1],
                    coh,
                    format!(
                        "E{} conditional on branch {i} has position coherences",
                        j + 1
                    ),
                );
            }
        }
    }
    if !report.passed {
        report
            .notes
            .push("precondition failed; frame conditions were not evaluated".into());
        return Ok(PropositionOutcome {
            report,
            spectra: Vec::new(),
        });
    }

    let supports: Vec<Vec<Vec<(f64, f64)>>> = spec
        .branches
        .iter()
        .map(|b| {
            b.env
                .iter()
                .map(|e| e.support(tol))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    for i in 0..n_branch {
        for ip in i + 1..n_branch {
            let ov = spec.branches[i]
                .system
                .overlap(0.0, &spec.branches[ip].system, 0.0, tol)
                .norm();
            if ov > tol {
                report.violate(
                    "lab-system",
                    vec![i, ip],
                    ov,
                    format!("system states of branches {i} and {ip} overlap"),
                );
            }
            for j in 0..n_env {
                if let Some(w) = supports_overlap(&supports[i][j], 0.0, &supports[ip][j], 0.0, tol)
                {
                    report.violate(
                        "lab-env",
                        vec![i, ip, j + 1],
                        w,
                        format!("E{} supports of branches {i} and {ip} intersect", j + 1),
                    );
                }
            }
        }
    }

    let mut spectra = Vec::with_capacity(n_env);
    for j in 0..n_env {
        // New branches (i, x): E_j found at x, so the laboratory sits at −x.
        let keys: Vec<(usize, f64, f64)> = (0..n_branch)
            .flat_map(|i| supports[i][j].iter().map(move |&(x, w)| (i, x, w)))
            .map(|(i, x, w)| (i, x, spec.p[i] * w))
            .collect();
        for (a, &(i, x, _)) in keys.iter().enumerate() {
            for &(ip, xp, _) in &keys[a + 1..] {
                let (s, sp) = (&spec.branches[i].system, &spec.branches[ip].system);
                let ov = s.overlap(-x, sp, -xp, tol).norm();
                if ov > tol {
                    report.violate(
                        "shifted-system",
                        vec![i, ip, j + 1],
                        ov,
                        format!("in the frame of E{}, system states of branches ({i}, {x}) and ({ip}, {xp}) overlap", j + 1),
                    );
                }
                for k in (0..n_env).filter(|&k| k != j) {
                    if let Some(w) =
                        supports_overlap(&supports[i][k], -x, &supports[ip][k], -xp, tol)
                    {
                        report.violate(
                            "shifted-env",
                            vec![i, ip, j + 1, k + 1],
                            w,
                            format!(
                                "in the frame of E{}, E{} supports of branches ({i}, {x}) and ({ip}, {xp}) intersect",
                                j + 1,
                                k + 1
                            ),
                        );
                    }
                }
            }
        }
        spectra.push(FrameSpectrum {
            frame: format!("E{}", j + 1),
            branches: keys,
        });
    }
    Ok(PropositionOutcome { report, spectra })
}

/// Moves `state` to `target_frame`, traces out `traced`, and tests the SBS
/// form of what remains with system `S`: (a) system coherences, (b) pairwise
/// conditional fidelities per observer, (c) conditional mutual information
/// per observer pair.
pub fn check_reduced_objectivity(
    state: &FramedState,
    target_frame: &str,
    traced: &[&str],
    tol: f64,
) -> Result<CheckReport> {
    let system = "S";
    let moved = state.to_frame(target_frame)?;
    let keep: Vec<&str> = moved
        .layout
        .labels()
        .iter()
        .map(String::as_str)
        .filter(|l| !traced.contains(l))
        .collect();
    for t in traced {
        moved.layout.index_of(t)?;
    }
    if !keep.contains(&system) {
        return Err(Error::InvalidParameter(
            "the system cannot be traced out".into(),
        ));
    }
    let layout = moved.layout.restricted(&keep)?;
    let rho = DensityMatrix::from_trusted(
        ReduceSpec::new(&moved.layout, &keep)?.apply(moved.rho.matrix()),
    );
    let observers: Vec<&str> = keep.iter().copied().filter(|&l| l != system).collect();
    reduced_sbs_report(&rho, &layout, system, &observers, tol)
}

fn reduced_sbs_report(
    rho: &DensityMatrix,
    layout: &SubsystemLayout,
    system: &str,
    observers: &[&str],
    tol: f64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("reduced");
    let basis = PointerBasis::Position;
    let d = layout.dim_of(system)?;

    if observers.is_empty() {
        let spec = ReduceSpec::new(layout, &[system])?;
        let rs = spec.apply(rho.matrix());
        for i in 0..d {
            for j in i + 1..d {
                if rs[(i, j)].norm() > tol {
                    report.violate(
                        "a",
                        vec![i, j],
                        rs[(i, j)].norm(),
                        format!("system coherence ⟨{i}|ρ|{j}⟩"),
                    );
                }
            }
        }
        return Ok(report);
    }

    let pinned = ReduceSpec::pinned(layout, system, observers)?;
    let p: Vec<f64> = (0..d)
        .map(|i| {
            let b = pinned.apply_pinned(rho.matrix(), i, i);
            (0..b.nrows()).map(|k| b[(k, k)].re).sum::<f64>().max(0.0)
        })
        .collect();
    for i in 0..d {
        for j in i + 1..d {
            let block = pinned.apply_pinned(rho.matrix(), i, j);
            let worst = (0..block.nrows())
                .flat_map(|a| (0..block.ncols()).map(move |b| (a, b)))
                .map(|(a, b)| block[(a, b)].norm())
                .fold(0.0, f64::max);
            if worst > tol {
                report.violate(
                    "a",
                    vec![i, j],
                    worst,
                    format!("coherence between system positions {i} and {j}"),
                );
            }
        }
    }

    let live: Vec<usize> = (0..d).filter(|&i| p[i] > tol).collect();
    if live.len() <= 1 {
        report
            .notes
            .push("single branch: trivially objective and uncorrelated".into());
        return Ok(report);
    }

    for (k, obs) in observers.iter().enumerate() {
        let states = (0..d)
            .map(|i| {
                if p[i] > tol {
                    conditional_state(rho, layout, system, &[obs], i, &basis).map(Some)
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let table = fidelity_table(&p, &states)?;
        for (a, &i) in live.iter().enumerate() {
            for &j in &live[a + 1..] {
                if table[i][j] > tol {
                    report.violate(
                        "b",
                        vec![i, j, k],
                        table[i][j],
                        format!("{obs} cannot distinguish branches {i} and {j}"),
                    );
                }
            }
        }
    }

    for (a, x) in observers.iter().enumerate() {
        for y in &observers[a + 1..] {
            let cmi = conditional_mutual_information(rho, layout, system, &basis, (x, y))?;
            if cmi > tol {
                report.violate(
                    "c",
                    vec![a],
                    cmi,
                    format!("{x} and {y} are correlated given the system"),
                );
            }
        }
    }
    Ok(report)
}

/// Derivative criterion for one composed map, evaluated by finite differences.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeCriterion {
    pub map: String,
    /// Minimum and maximum slope over the samples.
    pub slope_range: (f64, f64),
    /// Slopes stay on one side of 1 (system: of 0), which guarantees injectivity.
    pub sufficient: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InjectivityOutcome {
    pub report: CheckReport,
    pub derivative: Vec<DerivativeCriterion>,
}

fn slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .collect()
}

/// Injectivity of the maps that give the new positions in the frame of `E₁`.
///
/// `maps[j][k] = φ_{j+1}(xs[k])` with `xs` strictly increasing. With
/// `q_C = −φ₁(x)` the system sits at `x − φ₁(x)` and environment `j` at
/// `φ_j(x) − φ₁(x)`; each must stay one-to-one over the samples.
pub fn check_injectivity(xs: &[f64], maps: &[Vec<f64>], tol: f64) -> Result<InjectivityOutcome> {
    if xs.len() < 2 || xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter(
            "sample grid must be strictly increasing with ≥ 2 points".into(),
        ));
    }
    if maps.is_empty() || maps.iter().any(|m| m.len() != xs.len()) {
        return Err(Error::InvalidParameter(
            "every map needs one value per sample".into(),
        ));
    }
    for (j, m) in maps.iter().enumerate() {
        if let Some((a, b, _)) = coincident(m, tol).first() {
            return Err(Error::InvalidParameter(format!(
                "φ_{} is not one-to-one: samples {a} and {b} coincide",
                j + 1
            )));
        }
    }

    let mut report = CheckReport::new("injectivity");
    let phi1 = &maps[0];
    let mut composed: Vec<(String, Vec<f64>)> = vec![(
        "S".into(),
        xs.iter().zip(phi1).map(|(x, f)| x - f).collect(),
    )];
    for (j, m) in maps.iter().enumerate().skip(1) {
        composed.push((
            format!("E{}", j + 1),
            m.iter().zip(phi1).map(|(f, g)| f - g).collect(),
        ));
    }
    for (name, values) in &composed {
        for (a, b, gap) in coincident(values, tol) {
            report.violate(
                "one-to-one",
                vec![a, b],
                gap,
                format!("{name} positions coincide for samples {a} and {b}"),
            );
        }
    }

    // Slopes of y ↦ φ_j(φ₁⁻¹(y)) and of y ↦ φ₁⁻¹(y).
    let d1 = slopes(xs, phi1);
    let mut derivative = Vec::new();
    let range = |v: &[f64]| {
        v.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| {
                (a.min(s), b.max(s))
            })
    };
    let inv: Vec<f64> = d1.iter().map(|s| 1.0 / s).collect();
    let (lo, hi) = range(&inv);
    derivative.push(DerivativeCriterion {
        map: "S".into(),
        slope_range: (lo, hi),
        sufficient: lo > 1.0 || hi < 1.0,
    });
    for (j, m) in maps.iter().enumerate().skip(1) {
        let ratio: Vec<f64> = slopes(xs, m).iter().zip(&d1).map(|(a, b)| a / b).collect();
        let (lo, hi) = range(&ratio);
        derivative.push(DerivativeCriterion {
            map: format!("E{}", j + 1),
            slope_range: (lo, hi),
            sufficient: lo > 1.0 || hi < 1.0,
        });
    }
    Ok(InjectivityOutcome { report, derivative })
}

/// A branch spec placed on a ring `ℤ_D` with labels `S, E1, …`.
#[derive(Clone, Debug)]
pub struct RingInstance {
    pub d: usize,
    /// Positions were multiplied by this before rounding.
    pub scale: f64,
    pub state: FramedState,
}

fn all_positions(spec: &BranchSpec) -> Vec<f64> {
    spec.branches
        .iter()
        .flat_map(|b| {
            b.system
                .sites
                .iter()
                .chain(b.env.iter().flat_map(|e| e.sites.iter()))
        })
        .copied()
        .collect()
}

/// Smallest scale in `1, 2, 4, …` that makes every position an integer
/// while keeping distinct positions and distinct separations apart.
fn integer_scale(values: &[f64]) -> Result<f64> {
    let mut scale = 1.0;
    for _ in 0..=30 {
        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
        if scaled
            .iter()
            .all(|v| (v - v.round()).abs() <= 1e-9 * v.abs().max(1.0))
        {
            return Ok(scale);
        }
        scale *= 2.0;
    }
    Err(Error::InvalidParameter(
        "positions are not representable on a ring grid".into(),
    ))
}

/// Places `spec` on the smallest ring on which no two distinct positions or
/// separations collide, refusing joint dimensions above `max_dim`.
pub fn instantiate_on_ring(spec: &BranchSpec, max_dim: usize) -> Result<RingInstance> {
    spec.validate()?;
    let values = all_positions(spec);
    let scale = integer_scale(&values)?;
    let ints: Vec<i64> = values.iter().map(|v| (v * scale).round() as i64).collect();
    let (lo, hi) = ints
        .iter()
        .fold((i64::MAX, i64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    // Separations span [−2·span, 2·span]; they stay distinct modulo 4·span + 1.
    let d = (4 * (hi - lo) + 1).max(2) as usize;
    let n = spec.n_env() + 1;
    let total = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(d));
    match total {
        Some(t) if t <= max_dim => {}
        _ => {
            return Err(Error::InvalidParameter(format!(
                "ring of size {d} with {n} subsystems exceeds dimension {max_dim}"
            )))
        }
    }
    let site = |x: f64| ((x * scale).round() as i64).rem_euclid(d as i64) as usize;

    let mut labels = vec!["S".to_string()];
    labels.extend((1..n).map(|j| format!("E{j}")));
    let layout = SubsystemLayout::new(labels.iter().map(|l| (l.as_str(), d)))?;
    let dim = layout.total_dim();
    let mut m = Mat::<C64>::zeros(dim, dim);
    for (b, &p) in spec.branches.iter().zip(&spec.p) {
        let psi: Vec<C64> = {
            let mut v = vec![C64::new(0.0, 0.0); d];
            for (k, &x) in b.system.sites.iter().enumerate() {
                v[site(x)] += b.system.amplitude(k);
            }
            v
        };
        let mut factors: Vec<Mat<C64>> = vec![Mat::from_fn(d, d, |a, c| psi[a] * psi[c].conj())];
        for e in &b.env {
            let t = e.to_matrix()?;
            let mut f = Mat::<C64>::zeros(d, d);
            for (a, &x) in e.sites.iter().enumerate() {
                for (c, &y) in e.sites.iter().enumerate() {
                    f[(site(x), site(y))] += t[a][c];
                }
            }
            factors.push(f);
        }
        let joint = factors[1..]
            .iter()
            .fold(factors[0].clone(), |acc, f| kron(&acc, f));
        for b in 0..dim {
            for a in 0..dim {
                m[(a, b)] += joint[(a, b)] * p;
            }
        }
    }
    Ok(RingInstance {
        d,
        scale,
        state: FramedState::lab(DensityMatrix::new(m)?, layout)?,
    })
}

/// Groups sorted weights so spectra can be compared irrespective of order.
pub fn sorted_weights(weights: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = weights.into_iter().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}
