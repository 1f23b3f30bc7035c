use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use jpm_core::analytic::{self, AnalyticError};
use jpm_core::meanfield::{self, IntegratorConfig, Method, SampleGrid};
use jpm_core::params::{alpha_sq_for_photons, DetectorParams, DriveKind, DriveSpec};
use jpm_core::pulses::read_table_csv;
use jpm_core::rate::{self, EfficiencyReport};
use jpm_core::sweep::{self, OptimizeOptions, SweepSpec};
use serde_json::json;

use crate::config::{
    read_toml, DetectorFile, DriveArg, DriveFile, FileConfig, Format, IntegratorFile, MethodArg,
    OutputFile, SweepFile,
};
use crate::error::CliError;
use crate::{
    AnalyticCommand, Cli, Command, DetectorArgs, DriveArgs, IntegratorArgs, OutputArgs,
};

const DEFAULT_OMEGA0_GHZ: f64 = 5.0;
/// Reset rate used by the rate-model commands when none is given.
const DEFAULT_RESET_RATIO: f64 = 100.0;

/// Rate-model parameters of a realistic device.
const REFERENCE_GAMMA_1: f64 = 1.0;
const REFERENCE_GAMMA_0: f64 = 0.01;
const REFERENCE_GAMMA_REL: f64 = 33e-6;

pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => read_toml::<FileConfig>(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Simulate {
            detector,
            drive,
            integrator,
            output,
        } => simulate(&file, &detector, &drive, &integrator, &output),
        Command::Sweep {
            spec,
            serial,
            output,
        } => run_sweep(&file, &spec, serial, &output),
        Command::Optimize {
            detector,
            drive,
            integrator,
            t_m,
            photons,
            grid_points,
            output,
        } => optimize(&file, &detector, &drive, &integrator, t_m, photons, grid_points, output),
        Command::Efficiency {
            detector,
            flux,
            output,
        } => {
            let params = rate_params(&detector, &file.detector)?;
            let report = EfficiencyReport::evaluate(&params, 2.0 * PI * flux)?;
            write_json(&serde_json::to_value(report)?, json_path(output, &file.output))
        }
        Command::Nep {
            detector,
            reference,
            output,
        } => nep(&file, &detector, reference, output),
        Command::Match { detector, output } => {
            let params = rate_params(&detector, &file.detector)?;
            let g = rate::matching_gamma_tl(&params);
            let eta = rate::efficiency(&params.with_gamma_tl(g))?;
            let value = json!({
                "gamma_tl_max": {"value": g, "unit": "GHz"},
                "eta_at_match": {"value": eta, "unit": "1"},
                "eta_det": {"value": rate::eta_max(&params), "unit": "1"},
            });
            write_json(&value, json_path(output, &file.output))
        }
        Command::Analytic { which } => analytic_cmd(&file, which),
        Command::Compare {
            detector,
            alpha_sq,
            integrator,
            output,
        } => compare(&file, &detector, alpha_sq, &integrator, &output),
    }
}

fn simulate(
    file: &FileConfig,
    detector: &DetectorArgs,
    drive: &DriveArgs,
    integrator: &IntegratorArgs,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let params = detector_params(detector, &file.detector, 0.0)?;
    let drive = drive_spec(drive, &file.drive, params.omega_0)?;
    let cfg = integrator_config(integrator, &file.integrator)?;
    let traj = meanfield::integrate(&params, &drive, &cfg)?;
    let (path, format) = resolve_output(output, &file.output);
    {
        let mut w = open_output(path.as_deref())?;
        match format {
            Format::Csv => traj.write_csv(&mut w)?,
            Format::Json => {
                serde_json::to_writer_pretty(&mut w, &traj)?;
                writeln!(w)?;
            }
        }
        w.flush()?;
    }
    let t_end = traj.times.last().copied().unwrap_or(0.0);
    let pm = traj.final_state().map_or(0.0, |s| s.pm);
    summary(path.as_deref(), &format!("pm(t_end = {t_end} ns) = {pm:.9}"));
    Ok(())
}

fn run_sweep(
    file: &FileConfig,
    spec_path: &Path,
    serial: bool,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let sf: SweepFile = read_toml(spec_path)?;
    let det = merge_detector(&sf.detector, &file.detector);
    let drv = merge_drive(&sf.drive, &file.drive);
    let int = merge_integrator(&sf.integrator, &file.integrator);
    let params = detector_params(&DetectorArgs::default(), &det, 0.0)?;
    let drive = drive_spec(&DriveArgs::default(), &drv, params.omega_0)?;
    let integrator = integrator_config(&IntegratorArgs::default(), &int)?;
    let spec = SweepSpec {
        axis1: sf.axis1,
        axis2: sf.axis2,
        objective: sf.objective,
        params,
        drive,
        integrator,
    };
    let grid = if serial {
        sweep::run_sweep_serial(&spec)?
    } else {
        sweep::run_sweep(&spec)?
    };
    let (path, format) = resolve_output(output, &file.output);
    {
        let mut w = open_output(path.as_deref())?;
        match format {
            Format::Csv => grid.write_csv(&mut w)?,
            Format::Json => {
                serde_json::to_writer_pretty(&mut w, &grid.to_json())?;
                writeln!(w)?;
            }
        }
        w.flush()?;
    }
    let best = grid
        .argmax()
        .and_then(|(i, j)| grid.get(i, j).map(|v| (i, j, v)));
    let line = match best {
        Some((i, j, v)) => {
            let mut s = format!(
                "{} cells, {} failed; max {} = {v:.9} at {} = {}",
                grid.values.iter().map(Vec::len).sum::<usize>(),
                grid.failures(),
                grid.objective,
                grid.axis1,
                grid.axis1_values[i]
            );
            if let Some(p) = grid.axis2 {
                s.push_str(&format!(", {p} = {}", grid.axis2_values[j]));
            }
            s
        }
        None => format!("all {} cells failed", grid.failures()),
    };
    summary(path.as_deref(), &line);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn optimize(
    file: &FileConfig,
    detector: &DetectorArgs,
    drive: &DriveArgs,
    integrator: &IntegratorArgs,
    t_m: f64,
    photons: Option<f64>,
    grid_points: usize,
    output: Option<PathBuf>,
) -> Result<(), CliError> {
    if !(t_m.is_finite() && t_m > 0.0) {
        return Err(CliError::Usage(format!("--t-m must be positive, got {t_m}")));
    }
    if grid_points < 3 {
        return Err(CliError::Usage("--grid-points must be at least 3".into()));
    }
    let params = detector_params(detector, &file.detector, 0.0)?;
    let mut drive = drive_spec(drive, &file.drive, params.omega_0)?;
    if let Some(n) = photons {
        if !drive.kind.is_continuous() {
            return Err(CliError::Usage("--photons applies to the continuous drive only".into()));
        }
        if !(n.is_finite() && n >= 0.0) {
            return Err(CliError::Usage(format!("--photons must be non-negative, got {n}")));
        }
        drive.alpha_sq = alpha_sq_for_photons(n, params.omega_0, t_m);
    }
    let cfg = integrator_config(integrator, &file.integrator)?;
    let opts = OptimizeOptions {
        grid_points,
        ..OptimizeOptions::default()
    };
    let m = sweep::optimize_gamma_tl(&params, &drive, t_m, &cfg, &opts)?;
    let value = json!({
        "gamma_tl_max": {"value": m.x, "unit": "GHz"},
        "ratio_to_gamma_1": m.x / params.gamma_1,
        "pm_max": m.value,
        "grid_gamma_tl": {"value": m.grid_x, "unit": "GHz"},
        "grid_spacing": {"value": m.grid_spacing, "unit": "GHz"},
        "at_boundary": m.at_boundary,
        "t_m": {"value": t_m, "unit": "ns"},
        "alpha_sq": drive.alpha_sq,
        "photons": jpm_core::params::photon_number(&drive, t_m),
    });
    write_json(&value, json_path(output, &file.output))
}

fn nep(
    file: &FileConfig,
    detector: &DetectorArgs,
    reference: bool,
    output: Option<PathBuf>,
) -> Result<(), CliError> {
    let params = if reference {
        let omega_0 = 2.0 * PI * DEFAULT_OMEGA0_GHZ;
        let p = DetectorParams::new(
            0.0,
            REFERENCE_GAMMA_0,
            REFERENCE_GAMMA_1,
            REFERENCE_GAMMA_REL,
            DEFAULT_RESET_RATIO * REFERENCE_GAMMA_1,
            omega_0,
        )?;
        p.with_gamma_tl(rate::matching_gamma_tl(&p))
    } else {
        rate_params(detector, &file.detector)?
    };
    let eta = rate::efficiency(&params)?;
    let nep = rate::nep_with_efficiency(&params, eta)?;
    let value = json!({
        "nep": {"value": nep, "unit": "W/sqrt(Hz)"},
        "eta": {"value": eta, "unit": "1"},
        "gamma_tl": {"value": params.gamma_tl, "unit": "GHz"},
        "gamma_0": {"value": params.gamma_0, "unit": "GHz"},
        "gamma_1": {"value": params.gamma_1, "unit": "GHz"},
        "gamma_rel": {"value": params.gamma_rel, "unit": "GHz"},
        "gamma_res": {"value": params.gamma_res, "unit": "GHz"},
        "omega0_ghz": {"value": params.omega_0 / (2.0 * PI), "unit": "GHz"},
    });
    write_json(&value, json_path(output, &file.output))
}

fn analytic_cmd(file: &FileConfig, which: AnalyticCommand) -> Result<(), CliError> {
    match which {
        AnalyticCommand::Poles {
            detector,
            alpha_sq,
            times,
        } => {
            let params = detector_params(&detector, &file.detector, 0.0)?;
            let alpha_sq = required(alpha_sq.or(file.drive.alpha_sq), "--alpha-sq")?;
            let set = analytic::continuous_pm_poles(&params, alpha_sq)?;
            let pairs: Vec<_> = set
                .poles
                .iter()
                .zip(&set.residues)
                .map(|(p, r)| json!({"pole": [p.re, p.im], "residue": [r.re, r.im]}))
                .collect();
            let samples: Vec<_> = times
                .iter()
                .map(|&t| json!({"t": t, "pm": set.pm(t)}))
                .collect();
            let value = json!({
                "poles": pairs,
                "stationary_limit": if set.poles.is_empty() { 0.0 } else { set.stationary_limit() },
                "pm": samples,
            });
            write_json(&value, None)
        }
        AnalyticCommand::ExpSteady {
            detector,
            alpha_sq,
            kappa,
            order,
        } => {
            let params = detector_params(&detector, &file.detector, 0.0)?;
            let alpha_sq = required(alpha_sq.or(file.drive.alpha_sq), "--alpha-sq")?;
            let kappa = required(kappa.or(file.drive.kappa), "--kappa")?;
            let r = match analytic::exp_pulse_steady_state(&params, alpha_sq, kappa, order) {
                Err(e @ AnalyticError::SeriesDiverged { .. }) => {
                    return Err(CliError::Integration(e.to_string()))
                }
                other => other?,
            };
            let value = json!({
                "pm_steady": r.value,
                "leading": r.leading,
                "corrections": r.terms,
                "order": r.order,
                "omega_tilde": analytic::exp_pulse_omega_tilde(&params, alpha_sq, kappa),
            });
            write_json(&value, None)
        }
    }
}

fn compare(
    file: &FileConfig,
    detector: &DetectorArgs,
    alpha_sq: Option<f64>,
    integrator: &IntegratorArgs,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let params = detector_params(detector, &file.detector, 0.0)?;
    let alpha_sq = required(alpha_sq.or(file.drive.alpha_sq), "--alpha-sq")?;
    let cfg = integrator_config(integrator, &file.integrator)?;
    let t_end = match cfg.t_end {
        Some(t) => t,
        None => meanfield::default_t_end(&params, &DriveSpec::continuous(alpha_sq, params.omega_0))?,
    };
    let samples = match cfg.samples {
        SampleGrid::Uniform(n) => n,
        SampleGrid::Times(_) => unreachable!("the CLI only builds uniform grids"),
    };
    let c = jpm_core::compare(&params, alpha_sq, t_end, samples, &cfg)?;
    let (path, format) = resolve_output(output, &file.output);
    {
        let mut w = open_output(path.as_deref())?;
        match format {
            Format::Csv => {
                let mut csv = csv::Writer::from_writer(&mut w);
                csv.write_record(["t", "pm_mean_field", "pm_rate"])?;
                for ((t, a), b) in c.times.iter().zip(&c.mean_field).zip(&c.rate) {
                    csv.write_record([t, a, b].iter().map(|x| format!("{x:e}")))?;
                }
                csv.flush()?;
            }
            Format::Json => {
                serde_json::to_writer_pretty(&mut w, &c)?;
                writeln!(w)?;
            }
        }
        w.flush()?;
    }
    summary(
        path.as_deref(),
        &format!(
            "max gap {:.6e}, mean gap {:.6e}, crossings {}",
            c.max_gap, c.mean_gap, c.crossings
        ),
    );
    Ok(())
}

fn required(v: Option<f64>, flag: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("{flag} is required")))
}

/// Detector for the rate-model commands: reset defaults to 100·γ_1.
fn rate_params(args: &DetectorArgs, file: &DetectorFile) -> Result<DetectorParams, CliError> {
    let g1 = args.gamma_1.or(file.gamma_1).unwrap_or(1.0);
    detector_params(args, file, DEFAULT_RESET_RATIO * g1)
}

fn detector_params(
    args: &DetectorArgs,
    file: &DetectorFile,
    default_res: f64,
) -> Result<DetectorParams, CliError> {
    let omega0_ghz = args
        .omega0_ghz
        .or(file.omega0_ghz)
        .unwrap_or(DEFAULT_OMEGA0_GHZ);
    let (gamma_0, gamma_rel) = if args.ideal {
        (0.0, 0.0)
    } else {
        (
            args.gamma_0.or(file.gamma_0).unwrap_or(0.0),
            args.gamma_rel.or(file.gamma_rel).unwrap_or(0.0),
        )
    };
    let params = DetectorParams::new(
        args.gamma_tl.or(file.gamma_tl).unwrap_or(1.0),
        gamma_0,
        args.gamma_1.or(file.gamma_1).unwrap_or(1.0),
        gamma_rel,
        args.gamma_res.or(file.gamma_res).unwrap_or(default_res),
        2.0 * PI * omega0_ghz,
    )?;
    Ok(if args.matched {
        params.with_gamma_tl(rate::matching_gamma_tl(&params))
    } else {
        params
    })
}

fn drive_spec(args: &DriveArgs, file: &DriveFile, omega_0: f64) -> Result<DriveSpec, CliError> {
    let alpha_sq = args.alpha_sq.or(file.alpha_sq).unwrap_or(0.0);
    let kind = args.drive.or(file.kind).unwrap_or(DriveArg::Continuous);
    let need = |v: Option<f64>, flag: &str| {
        v.ok_or_else(|| CliError::Usage(format!("--drive {kind:?} requires {flag}").to_lowercase()))
    };
    let spec = match kind {
        DriveArg::Continuous => DriveSpec::continuous(alpha_sq, omega_0),
        DriveArg::Exp => {
            DriveSpec::exponential(alpha_sq, need(args.kappa.or(file.kappa), "--kappa")?, omega_0)
        }
        DriveArg::Gaussian => {
            let sigma = need(args.sigma.or(file.sigma), "--sigma")?;
            let mut spec = DriveSpec::gaussian(alpha_sq, sigma, args.t0.or(file.t0), omega_0);
            if args.paper_literal || file.paper_literal.unwrap_or(false) {
                if let DriveKind::Gaussian {
                    literal_prefactor, ..
                } = &mut spec.kind
                {
                    *literal_prefactor = true;
                }
            }
            spec
        }
        DriveArg::Table => {
            let path = args
                .table
                .as_ref()
                .or(file.table.as_ref())
                .ok_or_else(|| CliError::Usage("--drive table requires --table".into()))?;
            let f = File::open(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            DriveSpec {
                kind: DriveKind::Tabulated(read_table_csv(f)?),
                alpha_sq,
                omega_s: omega_0,
            }
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn integrator_config(
    args: &IntegratorArgs,
    file: &IntegratorFile,
) -> Result<IntegratorConfig, CliError> {
    let defaults = IntegratorConfig::default();
    let method = match args.method.or(file.method).unwrap_or(MethodArg::Rk45) {
        MethodArg::Rk45 => Method::Rk45,
        MethodArg::Rk4 => Method::Rk4 {
            step: args
                .rk4_step
                .or(file.rk4_step)
                .ok_or_else(|| CliError::Usage("--method rk4 requires --rk4-step".into()))?,
        },
    };
    let samples = args.samples.or(file.samples);
    let cfg = IntegratorConfig {
        method,
        rel_tol: args.rel_tol.or(file.rel_tol).unwrap_or(defaults.rel_tol),
        abs_tol: args.abs_tol.or(file.abs_tol).unwrap_or(defaults.abs_tol),
        max_step: args.max_step.or(file.max_step),
        t_end: args.t_end.or(file.t_end),
        samples: samples.map_or(defaults.samples, SampleGrid::Uniform),
        initial: None,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn merge_detector(primary: &DetectorFile, fallback: &DetectorFile) -> DetectorFile {
    DetectorFile {
        gamma_tl: primary.gamma_tl.or(fallback.gamma_tl),
        gamma_1: primary.gamma_1.or(fallback.gamma_1),
        gamma_0: primary.gamma_0.or(fallback.gamma_0),
        gamma_rel: primary.gamma_rel.or(fallback.gamma_rel),
        gamma_res: primary.gamma_res.or(fallback.gamma_res),
        omega0_ghz: primary.omega0_ghz.or(fallback.omega0_ghz),
    }
}

fn merge_drive(primary: &DriveFile, fallback: &DriveFile) -> DriveFile {
    DriveFile {
        kind: primary.kind.or(fallback.kind),
        alpha_sq: primary.alpha_sq.or(fallback.alpha_sq),
        kappa: primary.kappa.or(fallback.kappa),
        sigma: primary.sigma.or(fallback.sigma),
        t0: primary.t0.or(fallback.t0),
        table: primary.table.clone().or_else(|| fallback.table.clone()),
        paper_literal: primary.paper_literal.or(fallback.paper_literal),
    }
}

fn merge_integrator(primary: &IntegratorFile, fallback: &IntegratorFile) -> IntegratorFile {
    IntegratorFile {
        method: primary.method.or(fallback.method),
        rk4_step: primary.rk4_step.or(fallback.rk4_step),
        rel_tol: primary.rel_tol.or(fallback.rel_tol),
        abs_tol: primary.abs_tol.or(fallback.abs_tol),
        max_step: primary.max_step.or(fallback.max_step),
        t_end: primary.t_end.or(fallback.t_end),
        samples: primary.samples.or(fallback.samples),
    }
}

fn resolve_output(args: &OutputArgs, file: &OutputFile) -> (Option<PathBuf>, Format) {
    (
        args.output.clone().or_else(|| file.path.clone()),
        args.format.or(file.format).unwrap_or(Format::Csv),
    )
}

fn json_path(arg: Option<PathBuf>, file: &OutputFile) -> Option<PathBuf> {
    arg.or_else(|| file.path.clone())
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(value: &serde_json::Value, path: Option<PathBuf>) -> Result<(), CliError> {
    let mut w = open_output(path.as_deref())?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Human-readable summary: on stdout when the data went to a file, on
/// stderr when stdout carries the data.
fn summary(path: Option<&Path>, line: &str) {
    if path.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}
