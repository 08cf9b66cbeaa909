//! Subcommand implementations.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use serde::Deserialize;

use sbs_core::checkers::{
    check_injectivity, check_proposition1, check_reduced_objectivity, check_theorem1, BranchSpec,
    CheckReport,
};
use sbs_core::dynamics::output::{
    fidelity_file_name, saturation_file_name, series_file_name, write_fidelities, write_saturation,
    write_series,
};
use sbs_core::dynamics::{run_case as run_dynamics, CaseConfig, CaseId, Preset, REPORT_FRAMES};
use sbs_core::gaussian::{sweep_localisation_vs_fraction, write_sweep_csv, SweepConfig};
use sbs_core::linalg::{DensityMatrix, SubsystemLayout};
use sbs_core::ring::{FramedState, LAB_FRAME};
use sbs_core::statefile::StateFile;
use sbs_core::Error;

use crate::manifest::RunManifest;
use crate::{CheckKind, PresetArg};

/// Input the user can fix, as opposed to a failure of the numerics.
#[derive(Debug)]
struct InvalidInput(String);

impl std::fmt::Display for InvalidInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InvalidInput {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    InvalidInput(msg.into()).into()
}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(core) = cause.downcast_ref::<Error>() {
            return if core.is_numerical() { 3 } else { 2 };
        }
        if cause.downcast_ref::<InvalidInput>().is_some() {
            return 2;
        }
    }
    2
}

fn preset_of(arg: PresetArg) -> Preset {
    match arg {
        PresetArg::Paper => Preset::Paper,
        PresetArg::Desk => Preset::Desk,
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("cannot create {}", path.display())
    })?))
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> sbs_core::Result<()>,
) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn run_case(
    argv: &[String],
    case: &str,
    config: Option<&Path>,
    preset: Option<PresetArg>,
    seed: Option<u64>,
    out: &Path,
) -> Result<u8> {
    let start = Instant::now();
    let case_id: CaseId = case.parse()?;
    let mut cfg = match config {
        Some(path) => {
            let cfg = CaseConfig::from_toml(&read(path)?)?;
            if cfg.case_id != case_id {
                return Err(invalid(format!(
                    "config is for case {} but case {case_id} was requested",
                    cfg.case_id
                )));
            }
            cfg
        }
        None => CaseConfig::preset(case_id, Preset::Desk, 0),
    };
    if let Some(p) = preset {
        let p = preset_of(p);
        cfg.time_grid_long = p.long_grid();
        cfg.saturation_window = p.saturation_window();
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;

    let run = run_dynamics(&cfg)?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let name = case_id.as_str();
    let mut outputs = Vec::new();
    for frame in REPORT_FRAMES {
        let path = out.join(series_file_name(name, frame));
        write_file(&path, |w| write_series(&run, frame, w))?;
        outputs.push(path);
    }
    let path = out.join(fidelity_file_name(name));
    write_file(&path, |w| write_fidelities(&run, w))?;
    outputs.push(path);
    let path = out.join(saturation_file_name(name));
    write_file(&path, |w| write_saturation(&run, w))?;
    outputs.push(path);

    let manifest = RunManifest::new(argv, &cfg.to_toml(), cfg.seed, &outputs, start.elapsed());
    manifest.write(&out.join(format!("case-{name}_manifest.json")))?;
    for s in &run.saturation {
        println!(
            "case {name} frame {}: I_sat = {:.4}, sigma = {:.4}, t_sat = {}",
            s.frame, s.stats.i_sat, s.stats.sigma_i, s.stats.t_sat
        );
    }
    for p in &outputs {
        println!("wrote {}", p.display());
    }
    Ok(0)
}

pub fn gaussian_sweep(
    argv: &[String],
    sigmas: Option<Vec<f64>>,
    fractions: Option<Vec<usize>>,
    samples: Option<usize>,
    seed: u64,
    out: &Path,
) -> Result<u8> {
    let start = Instant::now();
    let mut cfg = SweepConfig::paper(seed);
    if let Some(s) = sigmas {
        cfg.sigmas = s;
    }
    if let Some(f) = fractions {
        cfg.fraction_sizes = f;
    }
    if let Some(n) = samples {
        cfg.n_samples = n;
    }
    cfg.validate()?;
    let cells = sweep_localisation_vs_fraction(&cfg)?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let path = out.join("gaussian_sweep.csv");
    write_file(&path, |w| write_sweep_csv(&cells, w))?;
    let canonical = toml::to_string(&cfg)?;
    RunManifest::new(argv, &canonical, seed, &[path.clone()], start.elapsed())
        .write(&out.join("gaussian_sweep_manifest.json"))?;
    println!("wrote {}", path.display());
    Ok(0)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InjectivitySpec {
    xs: Vec<f64>,
    #[serde(rename = "map")]
    maps: Vec<SampledMap>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SampledMap {
    values: Vec<f64>,
}

fn load_state(path: &Path, layout: Option<&str>) -> Result<FramedState> {
    let file = StateFile::parse(&read(path)?)?;
    let layout: SubsystemLayout = match (layout, file.layout) {
        (Some(text), _) => text.parse()?,
        (None, Some(l)) => l,
        (None, None) => return Err(invalid("state file has no layout; pass --layout")),
    };
    let rho = DensityMatrix::new(file.matrix)?;
    Ok(FramedState::new(rho, layout, file.frame)?)
}

/// Violations shown on the terminal; the TOML report keeps all of them.
const SHOWN_VIOLATIONS: usize = 20;

fn print_report(report: &CheckReport, path: Option<&Path>) -> Result<u8> {
    println!(
        "{}: {}",
        report.check,
        if report.passed { "PASS" } else { "FAIL" }
    );
    for v in report.violations.iter().take(SHOWN_VIOLATIONS) {
        println!("  {v}");
    }
    if report.violations.len() > SHOWN_VIOLATIONS {
        println!(
            "  ... and {} more violations",
            report.violations.len() - SHOWN_VIOLATIONS
        );
    }
    for n in &report.notes {
        println!("  note: {n}");
    }
    if let Some(p) = path {
        fs::write(p, report.to_toml()).with_context(|| format!("cannot write {}", p.display()))?;
    }
    Ok(if report.passed { 0 } else { 1 })
}

pub fn check(
    spec: &Path,
    which: CheckKind,
    tol: f64,
    target: &str,
    trace: Option<Vec<String>>,
    report_path: Option<&Path>,
) -> Result<u8> {
    if !(tol >= 0.0) {
        return Err(invalid(format!("tolerance {tol} must be nonnegative")));
    }
    match which {
        CheckKind::Theorem1 => {
            let spec = BranchSpec::from_toml(&read(spec)?)?;
            print_report(&check_theorem1(&spec, tol)?, report_path)
        }
        CheckKind::Prop1 => {
            let spec = BranchSpec::from_toml(&read(spec)?)?;
            let outcome = check_proposition1(&spec, tol)?;
            for s in &outcome.spectra {
                let cells: Vec<String> = s
                    .branches
                    .iter()
                    .map(|(i, x, w)| format!("({i}, {x}): {w}"))
                    .collect();
                println!(
                    "objective information in frame {}: {}",
                    s.frame,
                    cells.join(", ")
                );
            }
            print_report(&outcome.report, report_path)
        }
        CheckKind::Reduced => {
            let state = load_state(spec, None)?;
            let traced: Vec<String> = trace.unwrap_or_else(|| {
                if target == state.frame {
                    Vec::new()
                } else {
                    vec![LAB_FRAME.to_string()]
                }
            });
            let traced: Vec<&str> = traced.iter().map(String::as_str).collect();
            print_report(
                &check_reduced_objectivity(&state, target, &traced, tol)?,
                report_path,
            )
        }
        CheckKind::Injectivity => {
            let spec: InjectivitySpec = toml::from_str(&read(spec)?)
                .map_err(|e| invalid(format!("malformed injectivity spec: {e}")))?;
            let maps: Vec<Vec<f64>> = spec.maps.into_iter().map(|m| m.values).collect();
            let outcome = check_injectivity(&spec.xs, &maps, tol)?;
            for d in &outcome.derivative {
                println!(
                    "derivative criterion {}: slopes in [{}, {}], sufficient = {}",
                    d.map, d.slope_range.0, d.slope_range.1, d.sufficient
                );
            }
            print_report(&outcome.report, report_path)
        }
    }
}

pub fn transform(state: &Path, layout: Option<&str>, target: &str, out: &Path) -> Result<u8> {
    let framed = load_state(state, layout)?;
    let moved = framed.to_frame(target)?;
    let before = framed.rho.eigenvalues()?;
    let after = moved.rho.eigenvalues()?;
    let drift = before
        .iter()
        .zip(&after)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("spectrum drift after transform: {drift:e}");
    if drift > 1e-10 {
        return Err(
            anyhow!(Error::NotPositive(drift)).context("frame transform changed the spectrum")
        );
    }
    let file = StateFile {
        matrix: moved.rho.into_matrix(),
        layout: Some(moved.layout),
        frame: moved.frame,
    };
    let out: PathBuf = out.to_path_buf();
    fs::write(&out, file.to_text()).with_context(|| format!("cannot write {}", out.display()))?;
    println!("wrote {}", out.display());
    Ok(0)
}
