//! The ten dynamical scenarios and their configuration.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, SubsystemLayout, C64};

/// Slack on the coupling-hierarchy comparisons.
const ORDER_SLACK: f64 = 1.0 + 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseId {
    C1_1,
    C1_2,
    C1_3,
    C1_4,
    C1_5,
    C2_1,
    C2_2,
    C3_1,
    C3_2,
    C4,
}

impl CaseId {
    pub const ALL: [CaseId; 10] = [
        CaseId::C1_1,
        CaseId::C1_2,
        CaseId::C1_3,
        CaseId::C1_4,
        CaseId::C1_5,
        CaseId::C2_1,
        CaseId::C2_2,
        CaseId::C3_1,
        CaseId::C3_2,
        CaseId::C4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::C1_1 => "1.1",
            CaseId::C1_2 => "1.2",
            CaseId::C1_3 => "1.3",
            CaseId::C1_4 => "1.4",
            CaseId::C1_5 => "1.5",
            CaseId::C2_1 => "2.1",
            CaseId::C2_2 => "2.2",
            CaseId::C3_1 => "3.1",
            CaseId::C3_2 => "3.2",
            CaseId::C4 => "4",
        }
    }

    pub fn initial(self) -> InitialState {
        match self {
            CaseId::C1_2 => InitialState::Mbb,
            CaseId::C1_3 => InitialState::Mee,
            CaseId::C1_4 => InitialState::Mmp,
            CaseId::C1_5 => InitialState::Mpm,
            _ => InitialState::Mpp,
        }
    }

    pub fn terms(self) -> CaseTerms {
        let none = CaseTerms::default();
        match self {
            CaseId::C2_1 => CaseTerms {
                self_term: Some(TermKind::Structured),
                ..none
            },
            CaseId::C2_2 => CaseTerms {
                self_term: Some(TermKind::Random),
                ..none
            },
            CaseId::C3_1 => CaseTerms {
                env_interaction: Some(TermKind::Structured),
                ..none
            },
            CaseId::C3_2 => CaseTerms {
                env_interaction: Some(TermKind::Random),
                ..none
            },
            CaseId::C4 => CaseTerms {
                self_term: Some(TermKind::Structured),
                env_interaction: Some(TermKind::Structured),
                global: true,
            },
            _ => none,
        }
    }

    /// True when the Hamiltonian involves random draws.
    pub fn is_random(self) -> bool {
        let t = self.terms();
        t.global
            || t.self_term == Some(TermKind::Random)
            || t.env_interaction == Some(TermKind::Random)
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let s = if s == "4.0" { "4" } else { s };
        CaseId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownCase(s.to_string()))
    }
}

impl Serialize for CaseId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CaseId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
            Int(i64),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Text(s) => s,
            Raw::Number(x) => x.to_string(),
            Raw::Int(i) => i.to_string(),
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermKind {
    /// Hopping for the self term, distance law for the interaction.
    Structured,
    Random,
}

/// Hamiltonian terms that act besides the central interaction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CaseTerms {
    pub self_term: Option<TermKind>,
    pub env_interaction: Option<TermKind>,
    pub global: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialState {
    /// Mixed system, both environments at site 0.
    Mpp,
    /// Mixed system, both environments blurred around site 0.
    Mbb,
    /// Mixed system and first environment, second at site 0.
    Mmp,
    /// Mixed system and second environment, first at site 0.
    Mpm,
    /// Mixed system, environments maximally entangled.
    Mee,
}

impl InitialState {
    pub fn tag(self) -> &'static str {
        match self {
            InitialState::Mpp => "mpp",
            InitialState::Mbb => "mbb",
            InitialState::Mmp => "mmp",
            InitialState::Mpm => "mpm",
            InitialState::Mee => "mEE",
        }
    }

    pub fn build(self, d: usize) -> Result<DensityMatrix> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!("ring dimension {d} < 2")));
        }
        let mix = DensityMatrix::maximally_mixed(d);
        let point = DensityMatrix::basis_state(d, 0);
        Ok(match self {
            InitialState::Mpp => mix.tensor(&point).tensor(&point),
            InitialState::Mbb => {
                let mut w = vec![0.0; d];
                w[0] += 0.8;
                w[1] += 0.1;
                w[d - 1] += 0.1;
                let blur = DensityMatrix::diagonal(&w)?;
                mix.tensor(&blur).tensor(&blur)
            }
            InitialState::Mmp => mix.tensor(&mix).tensor(&point),
            InitialState::Mpm => mix.tensor(&point).tensor(&mix),
            InitialState::Mee => {
                let amp = 1.0 / (d as f64).sqrt();
                let phi: Vec<C64> = (0..d * d)
                    .map(|k| {
                        if k / d == k % d {
                            Complex64::new(amp, 0.0)
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    })
                    .collect();
                mix.tensor(&DensityMatrix::pure(&phi)?)
            }
        })
    }
}

/// The tripartite layout `S ⊗ E₁ ⊗ E₂` on a ring of size `d`.
pub fn ring_layout(d: usize) -> Result<SubsystemLayout> {
    SubsystemLayout::uniform(&["S", "E1", "E2"], d)
}

/// Initial state of a case on a ring of size `d`.
pub fn initial_state(case: CaseId, d: usize) -> Result<DensityMatrix> {
    case.initial().build(d)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Couplings {
    pub central: f64,
    /// Self evolution and environment interaction, structured or random.
    pub local: f64,
    pub global: f64,
}

impl Default for Couplings {
    fn default() -> Self {
        Couplings {
            central: 1.0,
            local: 0.01,
            global: 0.001,
        }
    }
}

impl Couplings {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("central", self.central),
            ("local", self.local),
            ("global", self.global),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "coupling {name} = {v} must be positive"
                )));
            }
        }
        if self.central * ORDER_SLACK < 100.0 * self.local {
            return Err(Error::InvalidParameter(format!(
                "central coupling {} must be at least 100 × local {}",
                self.central, self.local
            )));
        }
        if self.local * ORDER_SLACK < 10.0 * self.global {
            return Err(Error::InvalidParameter(format!(
                "local coupling {} must be at least 10 × global {}",
                self.local, self.global
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Long grid up to 10⁶.
    Paper,
    /// Long grid up to 10⁴.
    Desk,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            other => Err(Error::InvalidParameter(format!(
                "unknown preset `{other}` (paper|desk)"
            ))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Paper => "paper",
            Preset::Desk => "desk",
        })
    }
}

/// `0, 0.05, …, 1`.
pub fn short_grid() -> Vec<f64> {
    (0..=20).map(|k| k as f64 / 20.0).collect()
}

fn stepped(start: u32, stop: u32, step: u32) -> Vec<f64> {
    (start..=stop)
        .step_by(step as usize)
        .map(f64::from)
        .collect()
}

impl Preset {
    pub fn long_grid(self) -> Vec<f64> {
        match self {
            Preset::Paper => {
                let mut g = vec![
                    2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1e3, 2e3, 5e3, 1e4, 2e4,
                ];
                g.extend(stepped(50_000, 1_000_000, 50_000));
                g
            }
            Preset::Desk => stepped(500, 10_000, 500),
        }
    }

    pub fn saturation_window(self) -> (f64, f64) {
        match self {
            Preset::Paper => (5e4, 1e6),
            Preset::Desk => (500.0, 1e4),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub case_id: CaseId,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default)]
    pub seed: u64,
    pub time_grid_short: Vec<f64>,
    pub time_grid_long: Vec<f64>,
    /// Inclusive window for plateau statistics.
    pub saturation_window: (f64, f64),
    #[serde(default)]
    pub couplings: Couplings,
}

fn default_d() -> usize {
    12
}

impl CaseConfig {
    pub fn preset(case_id: CaseId, preset: Preset, seed: u64) -> Self {
        CaseConfig {
            case_id,
            d: default_d(),
            seed,
            time_grid_short: short_grid(),
            time_grid_long: preset.long_grid(),
            saturation_window: preset.saturation_window(),
            couplings: Couplings::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: CaseConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// All grid times in order.
    pub fn times(&self) -> Vec<f64> {
        self.time_grid_short
            .iter()
            .chain(&self.time_grid_long)
            .copied()
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidParameter(format!(
                "ring dimension {} < 2",
                self.d
            )));
        }
        self.couplings.validate()?;
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.time_grid_short.is_empty() && self.time_grid_long.is_empty() {
            return bad("time grid is empty".into());
        }
        if let Some(t) = self
            .time_grid_short
            .iter()
            .find(|t| !(0.0..=1.0).contains(*t))
        {
            return bad(format!("short-grid time {t} outside [0, 1]"));
        }
        if let Some(t) = self
            .time_grid_long
            .iter()
            .find(|t| !(t.is_finite() && **t > 1.0))
        {
            return bad(format!("long-grid time {t} must exceed 1"));
        }
        let times = self.times();
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return bad("time grid must be strictly increasing".into());
        }
        let (a, b) = self.saturation_window;
        if !(a <= b) || !times.iter().any(|t| (a..=b).contains(t)) {
            return bad(format!(
                "saturation window [{a}, {b}] contains no grid time"
            ));
        }
        Ok(())
    }
}
