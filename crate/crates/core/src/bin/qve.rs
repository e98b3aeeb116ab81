use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qve::config::{
    parse_config, row_spectrum_path, series_path, Command, RunConfig, DENSITY_FILE, ORACLE_FILE,
    SPECTRUM_FILE, SWEEP_FILE,
};
use qve::grid::MomentumGrid;
use qve::io::{series_csv, spectrum_csv, sweep_csv, write_atomic};
use qve::oracle::{oracle_solve_mode, OracleOptions};
use qve::solver::{solve_mode, solve_spectrum_with_results, ModeParams, SolveError};
use qve::sweeps::{measure, run_sweep, with_threads, RunError};

const EXIT_INVALID: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

#[derive(Parser)]
#[command(name = "qve", version, about = "Pair production in chirped laser pulses")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Momentum spectrum at one transverse momentum.
    Spectrum(Common),
    /// Pair number density.
    Density(Common),
    /// Parameter scan of densities.
    Sweep(Common),
    /// Compare the ODE solver against the integro-differential reference.
    OracleCheck(Common),
    /// Check a configuration without solving anything.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, env = "QVE_THREADS", default_value_t = 0)]
    threads: usize,
    /// Suppress progress messages.
    #[arg(long)]
    quiet: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self { code: EXIT_INVALID, message: message.into() }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Self { code: EXIT_NUMERICAL, message: message.into() }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        if e.is_numerical() {
            Failure::numerical(e.to_string())
        } else {
            Failure::invalid(e.to_string())
        }
    }
}

fn solve_failure(e: &SolveError) -> u8 {
    match e {
        SolveError::InvalidField(_) | SolveError::InvalidOptions(_) => EXIT_INVALID,
        _ => EXIT_NUMERICAL,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (sub, common) = match &cli.command {
        Sub::Spectrum(c) => (Some(Command::Spectrum), c),
        Sub::Density(c) => (Some(Command::Density), c),
        Sub::Sweep(c) => (Some(Command::Sweep), c),
        Sub::OracleCheck(c) => (Some(Command::OracleCheck), c),
        Sub::Validate(c) => (None, c),
    };
    match run(sub, common) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err((paths, failure)) => {
            for p in paths {
                println!("{}", p.display());
            }
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

type Outcome = Result<Vec<PathBuf>, (Vec<PathBuf>, Failure)>;

fn load(common: &Common) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| Failure::invalid(format!("cannot read {}: {e}", common.config.display())))?;
    let mut config = parse_config(&text).map_err(|errs| {
        let lines: Vec<String> = errs.iter().map(ToString::to_string).collect();
        Failure::invalid(format!(
            "{} has {} problem(s):\n  {}",
            common.config.display(),
            errs.len(),
            lines.join("\n  ")
        ))
    })?;
    if let Some(out) = &common.out {
        config.output.directory = out.clone();
    }
    let conflicts = config.output_conflicts();
    if !conflicts.is_empty() {
        let lines: Vec<String> = conflicts.iter().map(ToString::to_string).collect();
        return Err(Failure::invalid(lines.join("\n  ")));
    }
    Ok(config)
}

fn prepare_output(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::invalid(format!("cannot create {}: {e}", dir.display())))?;
    tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| Failure::invalid(format!("{} is not writable: {e}", dir.display())))?;
    Ok(())
}

fn write(path: PathBuf, contents: &[u8], written: &mut Vec<PathBuf>) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| Failure::invalid(format!("cannot create {}: {e}", parent.display())))?;
    }
    write_atomic(&path, contents)
        .map_err(|e| Failure::invalid(format!("cannot write {}: {e}", path.display())))?;
    written.push(path);
    Ok(())
}

fn run(sub: Option<Command>, common: &Common) -> Outcome {
    let config = load(common).map_err(|f| (Vec::new(), f))?;
    let Some(command) = sub else {
        if !common.quiet {
            eprintln!("{}: valid {} configuration", common.config.display(), config.command.name());
        }
        return Ok(Vec::new());
    };
    if command != config.command {
        return Err((
            Vec::new(),
            Failure::invalid(format!(
                "configuration is for `{}`, not `{}`",
                config.command.name(),
                command.name()
            )),
        ));
    }
    prepare_output(&config.output.directory).map_err(|f| (Vec::new(), f))?;
    let mut written = Vec::new();
    let result = with_threads(common.threads, || match command {
        Command::Spectrum => spectrum(&config, common.quiet, &mut written),
        Command::Density => density(&config, common.quiet, &mut written),
        Command::Sweep => sweep(&config, common.quiet, &mut written),
        Command::OracleCheck => oracle_check(&config, common.quiet, &mut written),
    });
    match result {
        Ok(()) => Ok(written),
        Err(f) => Err((written, f)),
    }
}

fn spectrum(config: &RunConfig, quiet: bool, written: &mut Vec<PathBuf>) -> Result<(), Failure> {
    let opts = config.solver.options();
    let grid = MomentumGrid::with_range(
        config.grid.range,
        config.grid.n_par,
        config.grid.p_perp,
        &config.field,
        (opts.t_start, opts.t_end),
    )
    .map_err(|e| Failure::invalid(e.to_string()))?;
    if !quiet {
        let (lo, hi) = grid.range();
        eprintln!("solving {} modes on P3 in [{lo:.6}, {hi:.6}]", grid.len());
    }
    let (spec, results) = solve_spectrum_with_results(&grid, &config.field, &opts)
        .map_err(|e| Failure { code: solve_failure(&e.source), message: e.to_string() })?;
    let dir = &config.output.directory;
    write(dir.join(SPECTRUM_FILE), spectrum_csv(&spec).as_bytes(), written)?;
    if config.solver.record_series {
        for (i, r) in results.iter().enumerate() {
            if let Some(series) = &r.series {
                write(series_path(dir, i), series_csv(series).as_bytes(), written)?;
            }
        }
    }
    if !quiet {
        eprintln!(
            "max f = {:e}, max conservation residual = {:e}",
            spec.max_f(),
            spec.diagnostics.max_residual
        );
    }
    Ok(())
}

fn density(config: &RunConfig, quiet: bool, written: &mut Vec<PathBuf>) -> Result<(), Failure> {
    let m = measure(
        &config.field,
        &config.grid.policy(),
        &config.solver.settings(),
        config.density_mode,
        config.chirp_limit,
    )?;
    if !quiet {
        eprintln!("{} density = {:e}", m.density.mode, m.density.value);
    }
    let text = serde_json::to_string_pretty(&m.density.to_json()).expect("density serializes");
    write(config.output.directory.join(DENSITY_FILE), text.as_bytes(), written)
}

fn sweep(config: &RunConfig, quiet: bool, written: &mut Vec<PathBuf>) -> Result<(), Failure> {
    let sc = config.sweep.as_ref().ok_or_else(|| Failure::invalid("missing sweep section"))?;
    if !quiet {
        eprintln!("running {} sweep rows", sc.spec.row_count());
    }
    let result = run_sweep(&sc.spec);
    let dir = &config.output.directory;
    write(dir.join(SWEEP_FILE), sweep_csv(&result).as_bytes(), written)?;
    if sc.write_spectra {
        for (i, row) in result.rows.iter().enumerate() {
            if let Some(spectra) = &row.spectra {
                write(row_spectrum_path(dir, i), spectrum_csv(&spectra[0]).as_bytes(), written)?;
            }
        }
    }
    let failures: Vec<String> = result
        .failures()
        .map(|r| {
            let e = r.outcome.as_ref().unwrap_err();
            format!("{} at {}: {e}", r.variant, r.axis_value)
        })
        .collect();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::numerical(format!(
            "{} of {} rows failed:\n  {}",
            failures.len(),
            result.rows.len(),
            failures.join("\n  ")
        )))
    }
}

fn oracle_check(config: &RunConfig, quiet: bool, written: &mut Vec<PathBuf>) -> Result<(), Failure> {
    use rayon::prelude::*;

    let oc = config.oracle.as_ref().ok_or_else(|| Failure::invalid("missing oracle section"))?;
    let opts = config.solver.options();
    let field = &config.field;
    let rows: Vec<Result<serde_json::Value, Failure>> = oc
        .p3
        .par_iter()
        .map(|&p3| {
            let params = ModeParams::new(p3, oc.p_perp);
            let ode = solve_mode(&params, field, &opts)
                .map_err(|e| Failure { code: solve_failure(&e), message: format!("P3 = {p3}: {e}") })?
                .final_f;
            let o_opts =
                OracleOptions::admissible(&params, field, opts.t_start, opts.t_end, oc.refinement);
            let reference = oracle_solve_mode(&params, field, &o_opts)
                .map_err(|e| Failure::numerical(format!("P3 = {p3}: {e}")))?;
            let compared = reference > oc.threshold;
            let deviation = (ode - reference).abs() / reference.max(1e-30);
            Ok(json!({
                "p3": p3,
                "f_ode": ode,
                "f_oracle": reference,
                "relative_deviation": deviation,
                "compared": compared,
                "oracle_step": o_opts.step,
            }))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let max_dev = rows
        .iter()
        .filter(|r| r["compared"] == true)
        .filter_map(|r| r["relative_deviation"].as_f64())
        .fold(0.0, f64::max);
    let pass = max_dev <= oc.tolerance;
    let report = json!({
        "field_fingerprint": field.fingerprint(),
        "tolerance": oc.tolerance,
        "threshold": oc.threshold,
        "max_relative_deviation": max_dev,
        "pass": pass,
        "modes": rows,
    });
    if !quiet {
        eprintln!("max relative deviation {max_dev:e} (tolerance {:e})", oc.tolerance);
    }
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    write(config.output.directory.join(ORACLE_FILE), text.as_bytes(), written)?;
    if pass {
        Ok(())
    } else {
        Err(Failure::numerical(format!(
            "oracle deviation {max_dev:e} exceeds {:e}",
            oc.tolerance
        )))
    }
}
