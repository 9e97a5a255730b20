//! `magnomech`: steady-state entanglement points, sweeps, critical-temperature
//! searches, time-domain cross-checks and validity audits from a flat config.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use magnomech::model::{LinearModel, ModeKind, SemiclassicalState};
use magnomech::oracle::{integrate_pre_rwa, steady_by_integration, write_trace_csv};
use magnomech::steadystate::{log_negativity, reduce_pair, steady_covariance};
use magnomech::sweep::{
    find_critical_temperature, run_point, run_sweep, to_json_pretty, write_csv, write_json, write_outputs, Config,
    OutputFormat, ResultRow,
};
use magnomech::validity::{audit_operating_point, ValidityReport};
use magnomech::Error;

#[derive(Parser)]
#[command(name = "magnomech", version, about = "Phonon entanglement of two driven YIG spheres")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines; defaults to the built-in operating point.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set squeeze_r=0.8`. Repeatable; applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Directory for output files. Without it, results go to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (0 = one per core).
    #[arg(long, default_value_t = 0, global = true)]
    threads: usize,
    /// csv, json or both.
    #[arg(long, default_value = "csv", global = true)]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Entanglement and validity at a single parameter point.
    Steady,
    /// Evaluate the grid given by `sweep.axis1` (and optionally `sweep.axis2`).
    Sweep,
    /// Bisect on bath temperature for the end of phonon entanglement.
    CriticalTemp {
        /// Lower bracket end in mK (overrides `critical.t_low_mk`).
        #[arg(long)]
        t_low_mk: Option<f64>,
        /// Upper bracket end in mK (overrides `critical.t_high_mk`).
        #[arg(long)]
        t_high_mk: Option<f64>,
    },
    /// Time-domain cross-check of the steady state and of the rotating-wave model.
    Oracle {
        /// Keep the configured phonon damping instead of `γ = oracle.damping_ratio · κ_a`.
        #[arg(long)]
        long_run: bool,
        /// Only relax the rotating-wave model; skip the pre-RWA integration.
        #[arg(long)]
        skip_pre_rwa: bool,
    },
    /// Approximation audit of the semiclassical operating point.
    Validity,
}

fn load_config(common: &Common) -> Result<Config, Error> {
    let mut cfg = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    for item in &common.overrides {
        let (k, v) =
            item.split_once('=').ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {item:?}")))?;
        cfg.set(k.trim(), v.trim()).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("--set {item}: {msg}")),
            other => other,
        })?;
    }
    Ok(cfg)
}

fn emit_rows(common: &Common, stem: &str, cfg: &Config, rows: &[ResultRow]) -> Result<(), Error> {
    let format: OutputFormat = common.format.parse()?;
    match &common.out {
        Some(dir) => {
            for path in write_outputs(dir, stem, format, cfg, rows)? {
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            let mut out = io::stdout().lock();
            match format {
                OutputFormat::Csv => write_csv(&mut out, cfg, rows)?,
                OutputFormat::Json => write_json(&mut out, cfg, rows)?,
                OutputFormat::Both => {
                    return Err(Error::Config("--format both needs --out".into()));
                }
            }
        }
    }
    Ok(())
}

fn steady(common: &Common, cfg: &Config) -> Result<u8, Error> {
    let row = run_point(cfg);
    if let Some(e) = row.entanglement {
        eprintln!(
            "E_cavity = {:.6}  E_magnon = {:.6}  E_phonon = {:.6}  rwa_suspect = {}  validity_pass = {}",
            e.cavity,
            e.magnon,
            e.phonon,
            row.rwa_suspect.unwrap_or(false),
            row.validity_pass.map_or("n/a".to_string(), |b| b.to_string()),
        );
    }
    emit_rows(common, "steady", cfg, std::slice::from_ref(&row))?;
    Ok(match (row.error_code, &row.error) {
        (Some(code), Some(msg)) => {
            eprintln!("error: {msg}");
            if matches!(code, "invalid_params" | "config") {
                2
            } else {
                3
            }
        }
        _ => 0,
    })
}

fn sweep(common: &Common, cfg: &Config) -> Result<(), Error> {
    let rows = run_sweep(cfg, common.threads)?;
    let failed = rows.iter().filter(|r| r.error_code.is_some()).count();
    eprintln!("{} points, {failed} with errors", rows.len());
    emit_rows(common, "sweep", cfg, &rows)
}

fn critical_temp(common: &Common, cfg: &Config, t_low_mk: Option<f64>, t_high_mk: Option<f64>) -> Result<(), Error> {
    let p = cfg.resolved_params()?;
    let lo = t_low_mk.map_or(cfg.critical_bracket.0, |t| t * 1e-3);
    let hi = t_high_mk.map_or(cfg.critical_bracket.1, |t| t * 1e-3);
    let tc = find_critical_temperature(&p, lo, hi)?;
    let text = format!(
        "critical_temperature_mk = {:.6}\nbracket_mk = [{:.6}, {:.6}]\niterations = {}\n",
        tc.temperature * 1e3,
        tc.bracket.0 * 1e3,
        tc.bracket.1 * 1e3,
        tc.iterations
    );
    write_text(common, "critical-temp.txt", &text)
}

fn write_text(common: &Common, name: &str, text: &str) -> Result<(), Error> {
    match &common.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(name);
            std::fs::write(&path, text)?;
            eprintln!("wrote {}", path.display());
        }
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn write_trace(dir: &Path, name: &str, trace: &[magnomech::oracle::TraceSample]) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut f = io::BufWriter::new(std::fs::File::create(&path)?);
    write_trace_csv(&mut f, trace)?;
    f.flush()?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn oracle(common: &Common, cfg: &Config, long_run: bool, skip_pre_rwa: bool) -> Result<(), Error> {
    let mut p = cfg.resolved_params()?;
    if !long_run {
        p = p.with_rescaled_damping(cfg.oracle_damping_ratio);
    }
    let model = LinearModel::from_params(&p)?;
    let exact = steady_covariance(&model)?;
    let run = steady_by_integration(&model, &cfg.oracle)?;
    let diff =
        (run.covariance.matrix().as_dmatrix() - exact.matrix().as_dmatrix()).norm() / exact.matrix().frobenius_norm();
    let mut text = format!(
        "damping = {}\nintegration_time_s = {:.6e}\nintegration_steps = {}\nlyapunov_relative_difference = {:.6e}\n",
        if long_run { "configured" } else { "rescaled" },
        run.time,
        run.steps,
        diff
    );
    if let Some(dir) = &common.out {
        write_trace(dir, "oracle-steady-trace.csv", &run.trace)?;
    }
    if !skip_pre_rwa {
        let pre = integrate_pre_rwa(&p, &cfg.oracle)?;
        let e_pre = log_negativity(&reduce_pair(&pre.covariance, ModeKind::Phonon))?;
        let e_rwa = log_negativity(&reduce_pair(&pre.reference, ModeKind::Phonon))?;
        text.push_str(&format!(
            "pre_rwa_steps = {}\nrwa_error = {:.6e}\nE_phonon_pre_rwa = {:.6}\nE_phonon_rwa = {:.6}\n",
            pre.steps, pre.rwa_error, e_pre, e_rwa
        ));
        if let Some(dir) = &common.out {
            write_trace(dir, "oracle-pre-rwa-trace.csv", &pre.trace)?;
        }
    }
    write_text(common, "oracle.txt", &text)
}

fn validity(common: &Common, cfg: &Config) -> Result<(), Error> {
    let p = cfg.resolved_params()?;
    let (sc, report) = audit_operating_point(&p, cfg.thresholds)?;
    let format: OutputFormat = common.format.parse()?;
    if format != OutputFormat::Csv {
        let doc = to_json_pretty(&AuditDoc { operating_point: &sc, audit: &report })?;
        write_text(common, "validity.json", &doc)?;
        if format == OutputFormat::Json {
            return Ok(());
        }
    }
    let mut text = String::new();
    for (j, s) in report.sites.iter().enumerate() {
        let site = j + 1;
        text.push_str(&format!(
            "site{site}.magnon_amplitude = {:.6e}\n\
             site{site}.phonon_amplitude = {:.6e}\n\
             site{site}.drive_rabi_rad_s = {:.6e}\n\
             site{site}.drive_field_t = {:.6e}\n\
             site{site}.spin_count = {:.6e}\n\
             site{site}.magnon_number = {:.6e}  ratio {:.3e}  pass {}\n\
             site{site}.frequency_shift_rad_s = {:.6e}  ratio {:.3e}  pass {}\n\
             site{site}.kerr_term_rad_s = {:.6e}  ratio {:.3e}  pass {}  warning {}\n\
             site{site}.max_rate_rad_s = {:.6e}  ratio {:.3e}  pass {}\n",
            sc.avg_m[j].norm(),
            sc.avg_b[j].norm(),
            sc.rabi[j],
            sc.drive_field_b0[j],
            report.spin_count[j],
            s.magnon_number,
            s.excitation_ratio,
            s.excitation_pass,
            s.frequency_shift,
            s.shift_ratio,
            s.shift_pass,
            s.kerr_term,
            s.kerr_ratio,
            s.kerr_pass,
            s.kerr_warning,
            s.max_rate,
            s.rwa_ratio,
            s.rwa_pass,
        ));
    }
    text.push_str(&format!("validity_pass = {}\n", report.pass()));
    write_text(common, "validity.txt", &text)
}

#[derive(serde::Serialize)]
struct AuditDoc<'a> {
    operating_point: &'a SemiclassicalState,
    audit: &'a ValidityReport,
}

fn run(cli: &Cli) -> Result<u8, Error> {
    let cfg = load_config(&cli.common)?;
    cfg.resolved_params()?;
    let common = &cli.common;
    match &cli.command {
        Command::Steady => return steady(common, &cfg),
        Command::Sweep => sweep(common, &cfg),
        Command::CriticalTemp { t_low_mk, t_high_mk } => critical_temp(common, &cfg, *t_low_mk, *t_high_mk),
        Command::Oracle { long_run, skip_pre_rwa } => oracle(common, &cfg, *long_run, *skip_pre_rwa),
        Command::Validity => validity(common, &cfg),
    }?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
