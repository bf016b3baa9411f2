//! `abab`: compile, simulate and search exchange-pulse schedules.
//!
//! Reports are `key=value` lines on stdout. Exit codes: 0 success, 1 usage
//! or parse error, 2 when a gate misses its tolerance or does not fit the
//! coupling bound.

mod target;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use abab_core::chain::{chain_unitary, logical_block, logical_extract, ChainSchedule};
use abab_core::compiler::{compile_swap, logical_report, pair_leakage};
use abab_core::io::{default_omega_large, write_trajectory_csv};
use abab_core::linalg::{diag, fidelity_up_to_phase, ONE};
use abab_core::nnor::{nnor_semantics, nnor_target, DEFAULT_SEARCH_TOLERANCE, DEFAULT_SEEDS};
use abab_core::propagator::{pair_trajectory, propagate_schedule_with_steps, DEFAULT_SAMPLES, DEFAULT_WAVEFORM_STEPS};
use abab_core::{
    compile_gate, search_nnor, ChainParams, CompileOptions, FidelityReport, GateSpec, PairParams, Schedule,
    ScheduleFile, SearchConfig, Subspace,
};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use target::Target;

#[derive(Parser, Debug)]
#[command(
    name = "abab",
    version,
    about = "Exchange-pulse compiler and simulator for ABAB spin chains"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Pair half-difference ω = (A − B)/2.
    #[arg(long, global = true, default_value_t = 1.0, allow_negative_numbers = true)]
    omega: f64,
    /// Pair half-sum Ω = (A + B)/2 [default: 2|ω|].
    #[arg(long, global = true, allow_negative_numbers = true)]
    omega_large: Option<f64>,
    /// Coupling bound [default: (√3/2)·ω].
    #[arg(long, global = true)]
    j_max: Option<f64>,
    /// Allowed infidelity [default: 1e-9, or 1e-6 for nNOR].
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Output file (schedule JSON, or CSV for `trajectory`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    rng_seed: u64,
    /// Pad single-qubit gates so that ωτ is a multiple of 2π.
    #[arg(long, global = true, overrides_with = "no_frame_sync")]
    frame_sync: bool,
    #[arg(long, global = true, overrides_with = "frame_sync")]
    no_frame_sync: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compile a gate: h, rz:ANGLE, ry:ANGLE, u:MATRIX.json, swap, nnor.
    Compile {
        gate: String,
        /// Coupling for `swap`.
        #[arg(long)]
        j: Option<f64>,
    },
    /// Propagate a schedule file and report its fidelity.
    Simulate {
        path: PathBuf,
        /// Also run the schedule on an N-spin chain.
        #[arg(long)]
        chain: Option<usize>,
        /// Chain bond that carries the pulses.
        #[arg(long, default_value_t = 0)]
        bond: usize,
        /// Integrator steps per shaped pulse.
        #[arg(long, default_value_t = DEFAULT_WAVEFORM_STEPS)]
        steps: usize,
        /// Write the pair trajectory CSV here.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        /// Gate label to compare against [default: the file's target].
        #[arg(long)]
        target: Option<String>,
        /// Initial logical state: 0, 1, +, -, +i, -i.
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        initial: String,
    },
    /// Search for an nNOR pulse sequence on the central pair.
    SearchNnor {
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
        pulses: u64,
        #[arg(long, default_value_t = DEFAULT_SEEDS as u64, value_parser = clap::value_parser!(u64).range(1..))]
        seeds: u64,
    },
    /// Write the Bloch trajectory of a schedule as CSV (to --out or stdout).
    Trajectory {
        path: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_WAVEFORM_STEPS)]
        steps: usize,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        initial: String,
    },
}

/// Key=value report, printed in insertion order.
#[derive(Default)]
struct Lines(Vec<(String, String)>);

impl Lines {
    fn put(&mut self, key: impl Into<String>, value: impl std::fmt::Display) {
        self.0.push((key.into(), value.to_string()));
    }

    fn num(&mut self, key: impl Into<String>, value: f64) {
        self.put(key, format!("{value:?}"));
    }

    fn report(&mut self, r: &FidelityReport, omega: f64) {
        self.num("fidelity", r.fidelity);
        self.num("infidelity", 1.0 - r.fidelity);
        self.num("total_duration", r.total_duration);
        if omega != 0.0 {
            self.num("total_duration_omega", r.total_duration * omega.abs());
        }
        self.put("pulse_count", r.pulse_count);
        self.num("leakage", r.leakage);
        self.num("frame_residual", r.frame_residual);
        self.put("converged", r.converged);
    }

    fn pulses(&mut self, s: &Schedule) {
        for (k, p) in s.pulses.iter().enumerate() {
            self.num(format!("pulse.{k}.j"), p.j);
            self.num(format!("pulse.{k}.t"), p.duration);
            match p.shape {
                abab_core::PulseShape::Square => self.put(format!("pulse.{k}.shape"), "square"),
                abab_core::PulseShape::Gaussian { fwhm } => {
                    self.put(format!("pulse.{k}.shape"), "gaussian");
                    self.num(format!("pulse.{k}.fwhm"), fwhm);
                }
            }
        }
    }

    fn print(&self) -> io::Result<()> {
        let mut out = io::stdout().lock();
        for (k, v) in &self.0 {
            writeln!(out, "{k}={v}")?;
        }
        Ok(())
    }
}

fn check_tolerance(tol: f64) -> Result<f64> {
    if !(tol.is_finite() && tol > 0.0 && tol < 1.0) {
        bail!("--tolerance must lie in (0, 1), got {tol}");
    }
    Ok(tol)
}

fn pair_params(g: &Global, fallback_j_max: Option<f64>) -> Result<PairParams> {
    if !g.omega.is_finite() {
        bail!("--omega must be finite");
    }
    let j_max = match (g.j_max, fallback_j_max) {
        (Some(j), _) => j,
        (None, _) if g.omega != 0.0 => PairParams::default_j_max(g.omega),
        (None, Some(j)) => j,
        (None, None) => bail!("--omega 0 needs an explicit --j-max"),
    };
    let big = g.omega_large.unwrap_or_else(|| default_omega_large(g.omega));
    Ok(PairParams::from_omegas(g.omega, big, j_max)?)
}

fn write_schedule(path: &Path, file: &ScheduleFile) -> Result<()> {
    fs::write(path, file.to_json()).with_context(|| format!("writing {}", path.display()))
}

fn read_schedule(path: &Path) -> Result<ScheduleFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ScheduleFile::from_json(&text).with_context(|| format!("{}", path.display()))
}

fn status(report: &FidelityReport, tol: f64) -> u8 {
    if report.converged && report.fidelity >= 1.0 - tol {
        0
    } else {
        2
    }
}

fn cmd_compile(g: &Global, gate: &str, j: Option<f64>) -> Result<u8> {
    let target = Target::parse(gate)?;
    let nnor = matches!(target, Target::Nnor);
    let tol = check_tolerance(
        g.tolerance
            .unwrap_or(if nnor { DEFAULT_SEARCH_TOLERANCE } else { 1e-9 }),
    )?;
    if nnor {
        return run_search(g, 2, DEFAULT_SEEDS, tol);
    }

    let (schedule, report, synced) = if let Target::Swap = target {
        let params = pair_params(g, Some(j.unwrap_or(1.0)))?;
        let j = j.unwrap_or(params.j_max);
        let swap = compile_swap(&params, j)?;
        let report = logical_report(&swap.schedule, &target.logical().unwrap(), tol)?;
        (swap.schedule, report, false)
    } else {
        if j.is_some() {
            bail!("--j only applies to `swap`");
        }
        let params = pair_params(g, None)?;
        let options = CompileOptions {
            tolerance: tol,
            ..CompileOptions::for_pair(&params).with_frame_sync(g.frame_sync)
        };
        let compiled = compile_gate(&GateSpec::new(target.gate_kind(), options), &params)?;
        (compiled.schedule, compiled.report, g.frame_sync)
    };

    if let Some(out) = &g.out {
        write_schedule(out, &ScheduleFile::from_schedule(&schedule, gate, synced))?;
    }
    let mut lines = Lines::default();
    lines.put("command", "compile");
    lines.put("gate", gate);
    lines.num("omega", schedule.params.omega());
    lines.num("j_max", schedule.params.j_max);
    lines.put("frame_synced", synced);
    lines.report(&report, schedule.params.omega());
    lines.pulses(&schedule);
    lines.print()?;
    Ok(status(&report, tol))
}

fn run_search(g: &Global, pulses: usize, seeds: usize, tol: f64) -> Result<u8> {
    let params = pair_params(g, None)?;
    let config = SearchConfig {
        n_pulses: pulses,
        seeds,
        rng_seed: g.rng_seed,
        tolerance: tol,
        // the soft ωτ ≡ 0 (mod 2π) penalty; it competes with the gate itself
        frame_sync_weight: if g.frame_sync { 10.0 } else { 0.0 },
        ..SearchConfig::for_pair(&params)
    };
    let outcome = search_nnor(&params, &config)?;
    if let Some(out) = &g.out {
        write_schedule(out, &ScheduleFile::from_schedule(&outcome.schedule, "nnor", false))?;
    }
    let mut lines = Lines::default();
    lines.put("command", "search-nnor");
    lines.num("omega", params.omega());
    lines.num("j_max", params.j_max);
    lines.put("rng_seed", g.rng_seed);
    lines.put("seeds", seeds);
    lines.put(
        "best_seed",
        outcome
            .best_seed
            .map_or_else(|| "nested".to_string(), |s| s.to_string()),
    );
    lines.put("evaluations", outcome.evaluations);
    lines.report(&outcome.report, params.omega());
    if outcome.converged {
        let sem = nnor_semantics(&outcome.schedule, &params)?;
        lines.num("chain_fidelity", sem.fidelity);
        lines.num("chain_off_diagonal", sem.off_diagonal_mass);
        lines.num("chain_leakage", sem.leakage);
        for (k, ph) in sem.phases.iter().enumerate() {
            lines.num(format!("chain_phase.{k}"), *ph);
        }
    }
    lines.pulses(&outcome.schedule);
    lines.print()?;
    Ok(status(&outcome.report, tol))
}

fn initial_state(label: &str) -> Result<[Complex64; 2]> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    Ok(match label {
        "0" => [c(1.0, 0.0), c(0.0, 0.0)],
        "1" => [c(0.0, 0.0), c(1.0, 0.0)],
        "+" => [c(h, 0.0), c(h, 0.0)],
        "-" => [c(h, 0.0), c(-h, 0.0)],
        "+i" => [c(h, 0.0), c(0.0, h)],
        "-i" => [c(h, 0.0), c(0.0, -h)],
        _ => bail!("unknown initial state `{label}` (expected 0, 1, +, -, +i, -i)"),
    })
}

fn trajectory_csv(
    schedule: &Schedule,
    initial: &str,
    samples: usize,
    steps: usize,
    out: &mut dyn Write,
) -> Result<[f64; 3]> {
    if samples == 0 {
        bail!("--samples must be >= 1");
    }
    let [c0, c1] = initial_state(initial)?;
    let zero = Complex64::new(0.0, 0.0);
    let points = pair_trajectory(schedule, [zero, c0, c1, zero], samples, steps)?;
    write_trajectory_csv(out, &points, schedule.params.omega())?;
    Ok(points.last().map(|p| p.bloch).unwrap_or([0.0; 3]))
}

/// Pair report at a given integrator resolution.
fn pair_report(schedule: &Schedule, target: &Target, steps: usize, tol: f64) -> Result<FidelityReport> {
    let full = propagate_schedule_with_steps(schedule, Subspace::Full, steps)?;
    let tau = schedule.total_duration();
    let fidelity = match target.logical() {
        Some(u) => fidelity_up_to_phase(&full.view((1, 1), (2, 2)).into_owned(), &u)?,
        None if tau > 0.0 => fidelity_up_to_phase(&full, &nnor_target(&schedule.params, tau)?.target_unitary)?,
        None => 0.5,
    };
    Ok(FidelityReport {
        fidelity,
        total_duration: tau,
        pulse_count: schedule.len(),
        leakage: pair_leakage(&full),
        frame_residual: schedule.frame_residual(),
        converged: 1.0 - fidelity <= tol,
    })
}

/// Run on an `n`-spin chain with the pulses on `bond`; returns the chain
/// fidelity when the target can be read off the chain.
fn chain_check(schedule: &Schedule, target: &Target, n: usize, bond: usize, lines: &mut Lines) -> Result<Option<f64>> {
    if n < 2 || bond + 1 >= n {
        bail!("--bond {bond} does not exist in a {n}-spin chain");
    }
    let p = &schedule.params;
    // the driven bond sees (A, B) in that order, the chain alternates from there
    let energies = (0..n)
        .map(|i| if (i + bond).is_multiple_of(2) { p.a() } else { p.b() })
        .collect();
    let chain = ChainParams::new(energies, vec![0.0; n - 1])?;
    let u = chain_unitary(&ChainSchedule::from_pair_schedule(chain.clone(), bond, schedule)?)?;
    lines.put("chain_spins", n);
    lines.put("chain_bond", bond);

    if bond.is_multiple_of(2) {
        let block = logical_extract(&u, bond / 2)?;
        lines.num("chain_leakage", block.leakage);
        return match target.logical() {
            Some(t) => {
                let f = fidelity_up_to_phase(&block.matrix, &t)?;
                lines.num("chain_fidelity", f);
                Ok(Some(f))
            }
            None => Ok(None),
        };
    }

    // inter-pair bond: compare against free evolution on the two pairs it joins
    if bond + 2 >= n {
        return Ok(None);
    }
    let tau = schedule.total_duration();
    let w = if tau > 0.0 {
        u * chain_unitary(&ChainSchedule::free(chain, tau)?)?.adjoint()
    } else {
        u
    };
    let block = logical_block(&w, &[(bond - 1) / 2, bond.div_ceil(2)])?;
    lines.num("chain_leakage", block.leakage);
    if let Target::Nnor = target {
        let f = fidelity_up_to_phase(&block.matrix, &diag(&[-ONE, ONE, ONE, ONE]))?;
        lines.num("chain_fidelity", f);
        return Ok(Some(f));
    }
    Ok(None)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    g: &Global,
    path: &Path,
    chain: Option<usize>,
    bond: usize,
    steps: usize,
    trajectory: Option<&Path>,
    samples: usize,
    target: Option<&str>,
    initial: &str,
) -> Result<u8> {
    if steps == 0 {
        bail!("--steps must be >= 1");
    }
    let file = read_schedule(path)?;
    let schedule = file.to_schedule().with_context(|| format!("{}", path.display()))?;
    let label = target.unwrap_or(&file.target);
    let target = Target::parse(label)?;
    let nnor = matches!(target, Target::Nnor);
    let tol = check_tolerance(
        g.tolerance
            .unwrap_or(if nnor { DEFAULT_SEARCH_TOLERANCE } else { 1e-9 }),
    )?;

    let report = pair_report(&schedule, &target, steps, tol)?;
    let mut lines = Lines::default();
    lines.put("command", "simulate");
    lines.put("target", label);
    lines.num("omega", schedule.params.omega());
    lines.put("steps", steps);
    lines.report(&report, schedule.params.omega());

    let mut ok = status(&report, tol) == 0;
    if let Some(n) = chain {
        // nNOR is judged on the chain at ten times the pair tolerance
        let chain_tol = if nnor { 10.0 * tol } else { tol };
        if let Some(f) = chain_check(&schedule, &target, n, bond, &mut lines)? {
            ok &= f >= 1.0 - chain_tol;
        }
    }
    if let Some(csv) = trajectory {
        let mut buf = Vec::new();
        let end = trajectory_csv(&schedule, initial, samples, steps, &mut buf)?;
        fs::write(csv, buf).with_context(|| format!("writing {}", csv.display()))?;
        lines.put("trajectory", csv.display());
        lines.put("samples", samples);
        lines.num("final_bx", end[0]);
        lines.num("final_by", end[1]);
        lines.num("final_bz", end[2]);
    }
    lines.print()?;
    Ok(if ok { 0 } else { 2 })
}

fn cmd_trajectory(g: &Global, path: &Path, samples: usize, steps: usize, initial: &str) -> Result<u8> {
    if steps == 0 {
        bail!("--steps must be >= 1");
    }
    let schedule = read_schedule(path)?
        .to_schedule()
        .with_context(|| format!("{}", path.display()))?;
    let mut buf = Vec::new();
    trajectory_csv(&schedule, initial, samples, steps, &mut buf)?;
    match &g.out {
        Some(out) => fs::write(out, buf).with_context(|| format!("writing {}", out.display()))?,
        None => io::stdout().lock().write_all(&buf)?,
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    let g = &cli.global;
    match &cli.command {
        Command::Compile { gate, j } => cmd_compile(g, gate, *j),
        Command::Simulate {
            path,
            chain,
            bond,
            steps,
            trajectory,
            samples,
            target,
            initial,
        } => cmd_simulate(
            g,
            path,
            *chain,
            *bond,
            *steps,
            trajectory.as_deref(),
            *samples,
            target.as_deref(),
            initial,
        ),
        Command::SearchNnor { pulses, seeds } => {
            let tol = check_tolerance(g.tolerance.unwrap_or(DEFAULT_SEARCH_TOLERANCE))?;
            run_search(g, *pulses as usize, *seeds as usize, tol)
        }
        Command::Trajectory {
            path,
            samples,
            steps,
            initial,
        } => cmd_trajectory(g, path, *samples, *steps, initial),
    }
}

/// Failures that mean "no good schedule", as opposed to bad input.
fn is_not_converged(err: &anyhow::Error) -> bool {
    use abab_core::Error as E;
    err.chain().any(|e| {
        matches!(
            e.downcast_ref::<E>(),
            Some(E::NotConverged { .. } | E::VerificationFailed { .. } | E::CapacityExceeded { .. })
        )
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if is_not_converged(&err) { 2 } else { 1 })
        }
    }
}
