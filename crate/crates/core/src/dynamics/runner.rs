//! Two-phase evolution and the case runner.

use rayon::prelude::*;

use super::cases::{ring_layout, CaseConfig, TermKind};
use super::hamiltonians::{
    build_central_hamiltonian, build_env_interaction, build_env_random, build_global_random,
    build_self_hamiltonian, build_self_random, on_environment, on_environment_pair,
};
use crate::error::{Error, Result};
use crate::linalg::{
    DensityMatrix, EigenbasisState, HermitianOperator, Propagator, SubsystemLayout,
};
use crate::metrics::{saturation_stats, PointerBasis, SaturationStats, SbsReport};
use crate::ring::{FramePermutation, FramedState, LAB_FRAME};

/// Frames in which every time point is reported.
pub const REPORT_FRAMES: [&str; 2] = [LAB_FRAME, "E1"];

/// The extra (non-central) Hamiltonian of a case, or `None` when it vanishes.
pub fn extra_hamiltonian(cfg: &CaseConfig) -> Result<Option<HermitianOperator>> {
    let d = cfg.d;
    let c = cfg.couplings;
    let terms = cfg.case_id.terms();
    let mut parts: Vec<HermitianOperator> = Vec::new();
    match terms.self_term {
        Some(TermKind::Structured) => {
            let h = build_self_hamiltonian(d, c.local)?;
            parts.push(on_environment(&h, 1));
            parts.push(on_environment(&h, 2));
        }
        Some(TermKind::Random) => {
            parts.push(on_environment(
                &build_self_random(d, cfg.seed, c.local, "E1")?,
                1,
            ));
            parts.push(on_environment(
                &build_self_random(d, cfg.seed, c.local, "E2")?,
                2,
            ));
        }
        None => {}
    }
    match terms.env_interaction {
        Some(TermKind::Structured) => {
            parts.push(on_environment_pair(&build_env_interaction(d, c.local)?, d));
        }
        Some(TermKind::Random) => {
            parts.push(on_environment_pair(
                &build_env_random(d, cfg.seed, c.local)?,
                d,
            ));
        }
        None => {}
    }
    if terms.global {
        parts.push(build_global_random(d, cfg.seed, c.global)?);
    }
    let mut iter = parts.into_iter();
    let Some(first) = iter.next() else {
        return Ok(None);
    };
    iter.try_fold(first, |acc, h| acc.add(&h)).map(Some)
}

/// Cached propagators for the measurement phase `t ≤ 1` and the free phase `t > 1`.
#[derive(Clone, Debug)]
pub struct EvolutionPlan {
    layout: SubsystemLayout,
    h_phase1: HermitianOperator,
    h_phase2: HermitianOperator,
    phase1: Propagator,
    phase2: Propagator,
    rotated1: EigenbasisState,
    rotated2: EigenbasisState,
    rho1: DensityMatrix,
}

impl EvolutionPlan {
    pub fn new(cfg: &CaseConfig) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.d;
        let layout = ring_layout(d)?;
        let rho0 = cfg.case_id.initial().build(d)?;
        let central = build_central_hamiltonian(d)?.scaled(cfg.couplings.central);
        let extra = extra_hamiltonian(cfg)?;
        let h_phase2 = extra.unwrap_or_else(|| HermitianOperator::zeros(layout.total_dim()));
        let h_phase1 = central.add(&h_phase2)?;
        let phase1 = Propagator::new(&h_phase1)?;
        let phase2 = Propagator::new(&h_phase2)?;
        let rotated1 = phase1.rotate(&rho0)?;
        let rho1 = phase1.state_at(&rotated1, 1.0);
        let rotated2 = phase2.rotate(&rho1)?;
        Ok(EvolutionPlan {
            layout,
            h_phase1,
            h_phase2,
            phase1,
            phase2,
            rotated1,
            rotated2,
            rho1,
        })
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn h_phase1(&self) -> &HermitianOperator {
        &self.h_phase1
    }

    pub fn h_phase2(&self) -> &HermitianOperator {
        &self.h_phase2
    }

    /// Lab-frame state at time `t ≥ 0`.
    pub fn state_at(&self, t: f64) -> Result<DensityMatrix> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time {t} must be finite and nonnegative"
            )));
        }
        Ok(if t <= 1.0 {
            if t == 1.0 {
                self.rho1.clone()
            } else {
                self.phase1.state_at(&self.rotated1, t)
            }
        } else {
            self.phase2.state_at(&self.rotated2, t - 1.0)
        })
    }

    pub fn framed_state_at(&self, t: f64) -> Result<FramedState> {
        FramedState::lab(self.state_at(t)?, self.layout.clone())
    }
}

/// Reports at one grid time, one per entry of [`REPORT_FRAMES`].
#[derive(Clone, Debug)]
pub struct TimePoint {
    pub t: f64,
    pub reports: Vec<SbsReport>,
}

impl TimePoint {
    pub fn report(&self, frame: &str) -> Option<&SbsReport> {
        self.reports.iter().find(|r| r.frame == frame)
    }
}

#[derive(Clone, Debug)]
pub struct FrameSaturation {
    pub frame: String,
    pub stats: SaturationStats,
}

#[derive(Clone, Debug)]
pub struct CaseRun {
    pub config: CaseConfig,
    pub points: Vec<TimePoint>,
    pub saturation: Vec<FrameSaturation>,
}

impl CaseRun {
    /// `(t, I_mean)` in one frame.
    pub fn i_mean_series(&self, frame: &str) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| Some((p.t, p.report(frame)?.i_mean?)))
            .collect()
    }

    pub fn point_at(&self, t: f64) -> Option<&TimePoint> {
        self.points.iter().find(|p| p.t == t)
    }

    pub fn saturation(&self, frame: &str) -> Option<&SaturationStats> {
        self.saturation
            .iter()
            .find(|s| s.frame == frame)
            .map(|s| &s.stats)
    }
}

fn time_point(plan: &EvolutionPlan, to_e1: &FramePermutation, t: f64) -> Result<TimePoint> {
    let lab = plan.framed_state_at(t)?;
    let e1 = lab.apply(to_e1)?;
    let basis = PointerBasis::Position;
    Ok(TimePoint {
        t,
        reports: vec![
            SbsReport::compute(&lab, "S", &basis)?,
            SbsReport::compute(&e1, "S", &basis)?,
        ],
    })
}

/// Evolves a case over its grid and reports every metric in both frames.
pub fn run_case(cfg: &CaseConfig) -> Result<CaseRun> {
    let plan = EvolutionPlan::new(cfg)?;
    run_plan(cfg, &plan)
}

/// As [`run_case`] with a prebuilt plan.
pub fn run_plan(cfg: &CaseConfig, plan: &EvolutionPlan) -> Result<CaseRun> {
    let to_e1 = FramePermutation::new(cfg.d, plan.layout(), LAB_FRAME, "E1")?;
    let points = cfg
        .times()
        .par_iter()
        .map(|&t| time_point(plan, &to_e1, t))
        .collect::<Result<Vec<_>>>()?;
    let mut run = CaseRun {
        config: cfg.clone(),
        points,
        saturation: Vec::new(),
    };
    for frame in REPORT_FRAMES {
        let stats = saturation_stats(&run.i_mean_series(frame), cfg.saturation_window)?;
        run.saturation.push(FrameSaturation {
            frame: frame.to_string(),
            stats,
        });
    }
    Ok(run)
}
