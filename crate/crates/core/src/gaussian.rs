//! Closed-form distinguishability of Gaussian branches and the Monte-Carlo
//! macrofraction sweep.
//!
//! All fidelities here are Bhattacharyya coefficients of normal densities,
//! `√(2σ₁σ₂/(σ₁²+σ₂²)) · exp[−(μ₁−μ₂)²/(4(σ₁²+σ₂²))]`, evaluated for the
//! position distributions the conditional states induce.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianBranch {
    pub mu: f64,
    pub sigma: f64,
}

impl GaussianBranch {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        let b = GaussianBranch { mu, sigma };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() || !self.mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Gaussian branch needs finite mu and sigma > 0, got mu = {}, sigma = {}",
                self.mu, self.sigma
            )));
        }
        Ok(())
    }

    pub fn density(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * std::f64::consts::PI).sqrt())
    }
}

/// Bhattacharyya coefficient of N(m1, v1) and N(m2, v2) given variances.
fn bhattacharyya(m1: f64, v1: f64, m2: f64, v2: f64) -> f64 {
    let v = v1 + v2;
    (2.0 * (v1 * v2).sqrt() / v).sqrt() * (-(m1 - m2).powi(2) / (4.0 * v)).exp()
}

/// Fidelity of two incoherent Gaussian environment branches.
pub fn fidelity_incoherent_pair(b1: GaussianBranch, b2: GaussianBranch) -> Result<f64> {
    b1.validate()?;
    b2.validate()?;
    Ok(bhattacharyya(
        b1.mu,
        b1.sigma.powi(2),
        b2.mu,
        b2.sigma.powi(2),
    ))
}

/// Fidelity of the conditional states of environment `E_j` seen from the
/// frame of environment `E₁`.
///
/// In that frame `E_j` sits at `q_{E_j} − q_C ~ N(μ_{E_j}, σ²_{E_j})` with
/// `−q_C ~ N(μ_{E₁}, σ²_{E₁})`, so its position is normal with mean
/// `μ_{E_j} − μ_{E₁}` and variance `σ²_{E₁} + σ²_{E_j}` for each branch.
pub fn fidelity_transformed_env(
    e1_i: GaussianBranch,
    e1_ip: GaussianBranch,
    ej_i: GaussianBranch,
    ej_ip: GaussianBranch,
) -> Result<f64> {
    for b in [e1_i, e1_ip, ej_i, ej_ip] {
        b.validate()?;
    }
    Ok(bhattacharyya(
        ej_i.mu - e1_i.mu,
        e1_i.sigma.powi(2) + ej_i.sigma.powi(2),
        ej_ip.mu - e1_ip.mu,
        e1_ip.sigma.powi(2) + ej_ip.sigma.powi(2),
    ))
}

/// Fidelity of the conditional system states in the frame of `E₁` for a
/// system localized at `x_i` (resp. `x_{i′}`).
pub fn fidelity_transformed_system(
    x_i: f64,
    x_ip: f64,
    e1_i: GaussianBranch,
    e1_ip: GaussianBranch,
) -> Result<f64> {
    e1_i.validate()?;
    e1_ip.validate()?;
    Ok(bhattacharyya(
        x_i - e1_i.mu,
        e1_i.sigma.powi(2),
        x_ip - e1_ip.mu,
        e1_ip.sigma.powi(2),
    ))
}

/// Overlap `Tr[ρ_{S|i,k} ρ_{S|i′,k′}]` of the conditional system states of a
/// coherent Gaussian wave packet seen from the frame of `E₁`.
pub fn linear_fidelity_coherent_system(
    s_i: GaussianBranch,
    s_ip: GaussianBranch,
    e1_i: GaussianBranch,
    e1_ip: GaussianBranch,
) -> Result<f64> {
    for b in [s_i, s_ip, e1_i, e1_ip] {
        b.validate()?;
    }
    let vs = s_i.sigma.powi(2) + s_ip.sigma.powi(2);
    let total = vs + e1_i.sigma.powi(2) + e1_ip.sigma.powi(2);
    let shift = e1_i.mu - s_i.mu - e1_ip.mu + s_ip.mu;
    Ok(2.0 * s_i.sigma * s_ip.sigma * (-shift * shift / (2.0 * total)).exp() / (vs * total).sqrt())
}

/// Branch pair `(i, i′)` of one environment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPair {
    pub i: GaussianBranch,
    pub ip: GaussianBranch,
}

/// A macrofraction of environments seen from the frame of `E₁`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacrofractionSpec {
    pub frame: BranchPair,
    pub environments: Vec<BranchPair>,
}

/// Product of the per-environment fidelities.
pub fn macrofraction_fidelity(spec: &MacrofractionSpec) -> Result<f64> {
    if spec.environments.is_empty() {
        return Err(Error::InvalidParameter("macrofraction is empty".into()));
    }
    spec.environments.iter().try_fold(1.0, |acc, env| {
        Ok(acc * fidelity_transformed_env(spec.frame.i, spec.frame.ip, env.i, env.ip)?)
    })
}

/// How the frame environment's own branch means are chosen in the sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrameMeans {
    /// Drawn from the same uniform law as the observed environments.
    Random,
    Fixed {
        mu_0: f64,
        mu_1: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub sigmas: Vec<f64>,
    pub fraction_sizes: Vec<usize>,
    pub n_samples: usize,
    pub interval: (f64, f64),
    pub seed: u64,
    pub frame_means: FrameMeans,
}

impl SweepConfig {
    /// Default grid with 400 samples per cell.
    pub fn paper(seed: u64) -> Self {
        SweepConfig {
            sigmas: vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0],
            fraction_sizes: (1..=10).collect(),
            n_samples: 400,
            interval: (-1.0, 1.0),
            seed,
            frame_means: FrameMeans::Random,
        }
    }

    /// Same grid with 100 samples.
    pub fn desk(seed: u64) -> Self {
        SweepConfig {
            n_samples: 100,
            ..Self::paper(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigmas.is_empty() || self.fraction_sizes.is_empty() {
            return Err(Error::InvalidParameter(
                "sweep grids must be nonempty".into(),
            ));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidParameter(
                "sweep needs at least one sample".into(),
            ));
        }
        if let Some(s) = self.sigmas.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive, got {s}"
            )));
        }
        if self.fraction_sizes.contains(&0) {
            return Err(Error::InvalidParameter(
                "fraction sizes must be positive".into(),
            ));
        }
        let (lo, hi) = self.interval;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "bad interval [{lo}, {hi}]"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepCell {
    pub sigma: f64,
    pub fraction_size: usize,
    pub mean_fidelity: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Means drawn for one sample: frame pair and one pair per environment.
struct SampleMeans {
    frame: (f64, f64),
    envs: Vec<(f64, f64)>,
}

fn draw_sample(cfg: &SweepConfig, k: usize, n_envs: usize) -> SampleMeans {
    let mut rng = stream(cfg.seed, &format!("sweep/sample-{k}"));
    let (lo, hi) = cfg.interval;
    let mut draw = || rng.gen_range(lo..=hi);
    let frame_draw = (draw(), draw());
    let envs = (0..n_envs).map(|_| (draw(), draw())).collect();
    let frame = match cfg.frame_means {
        FrameMeans::Random => frame_draw,
        FrameMeans::Fixed { mu_0, mu_1 } => (mu_0, mu_1),
    };
    SampleMeans { frame, envs }
}

/// Mean macrofraction fidelity over random peak positions for every
/// `(σ, |F|)` cell, all spreads equal to `σ`.
///
/// Each sample draws its means once and reuses them across the whole grid,
/// with `|F|` taking the first `|F|` environments, so the estimate is
/// monotone in `|F|` sample by sample. Samples use independent streams and
/// the result does not depend on thread scheduling.
pub fn sweep_localisation_vs_fraction(cfg: &SweepConfig) -> Result<Vec<SweepCell>> {
    cfg.validate()?;
    let n_envs = *cfg.fraction_sizes.iter().max().expect("nonempty");
    let samples: Vec<SampleMeans> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|k| draw_sample(cfg, k, n_envs))
        .collect();
    let mut cells = Vec::with_capacity(cfg.sigmas.len() * cfg.fraction_sizes.len());
    for &sigma in &cfg.sigmas {
        // Per sample, cumulative products over environments.
        let prefix: Vec<Vec<f64>> = samples
            .par_iter()
            .map(|s| {
                let b = |mu| GaussianBranch { mu, sigma };
                let mut acc = 1.0;
                let mut out = Vec::with_capacity(n_envs);
                for &(m0, m1) in &s.envs {
                    acc *= fidelity_transformed_env(b(s.frame.0), b(s.frame.1), b(m0), b(m1))
                        .expect("sigma validated");
                    out.push(acc);
                }
                out
            })
            .collect();
        for &f in &cfg.fraction_sizes {
            let sum: f64 = prefix.iter().map(|p| p[f - 1]).sum();
            cells.push(SweepCell {
                sigma,
                fraction_size: f,
                mean_fidelity: sum / cfg.n_samples as f64,
                n_samples: cfg.n_samples,
                seed: cfg.seed,
            });
        }
    }
    Ok(cells)
}

/// Sweep grid as CSV: `sigma, fraction_size, mean_fidelity, n_samples, seed`.
pub fn write_sweep_csv(cells: &[SweepCell], out: &mut impl std::io::Write) -> Result<()> {
    writeln!(out, "sigma,fraction_size,mean_fidelity,n_samples,seed")?;
    for c in cells {
        writeln!(
            out,
            "{},{},{},{},{}",
            c.sigma, c.fraction_size, c.mean_fidelity, c.n_samples, c.seed
        )?;
    }
    Ok(())
}
