//! Batch commands: each reads a JSON config, validates everything it can
//! (including that every output location is writable) and only then computes.
//! Outputs are written atomically.
//!
//! Exit codes: 0 success, 1 bad config or input, 2 numerical failure.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

pub use config::{
    apply_override, load, BlowupJob, BoundarySpec, ContinueJob, DiagnoseJob, DomainSpec, GuessSpec, RuptureJob, SolveJob,
};
use config::{check_h, check_p, in_section};

use crate::blowup::blowup_analyze;
use crate::diagnostics::{run_sweep, Verdict};
use crate::error::{Error, Result};
use crate::field::io::{fmt_f64, read_field, write_atomic, write_field};
use crate::field::{Grid, Point, ScalarField};
use crate::profiles::radial_exact;
use crate::rupture::{box_dimension, components_csv, discreteness_check, sweep_dimension, POINT_DIMENSION_TOL};
use crate::solver::{continue_pullin, harmonic_extension, solve_dirichlet, SnapshotTrigger};

pub const THREADS_ENV: &str = "RUPTURE_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "rupture-lab", version, about = "Solvers and diagnostics for rupture solutions of Δu = u^{-p}")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the Dirichlet problem and write the field.
    Solve(JobArgs),
    /// Continue the pull-in branch, writing the branch CSV and snapshots.
    Continue(JobArgs),
    /// Run the diagnostics sweep on a field file.
    Diagnose(JobArgs),
    /// Blow-up analysis at a point of a field file.
    Blowup(JobArgs),
    /// Sublevel components, discreteness and dimension of the rupture set.
    Rupture(JobArgs),
}

#[derive(Debug, Args)]
pub struct JobArgs {
    /// JSON configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Override a config entry; the key is a dotted path, the value JSON or a bare string.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

/// Caps the global thread pool at `RUPTURE_LAB_THREADS` when it is set.
pub fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n = raw
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidInput(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidInput(format!("{THREADS_ENV}: {e}")))
}

/// Runs one command, printing a short summary to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(&load(&a.config, &a.set)?, out),
        Command::Continue(a) => cmd_continue(&load(&a.config, &a.set)?, out),
        Command::Diagnose(a) => cmd_diagnose(&load(&a.config, &a.set)?, out),
        Command::Blowup(a) => cmd_blowup(&load(&a.config, &a.set)?, out),
        Command::Rupture(a) => cmd_rupture(&load(&a.config, &a.set)?, out),
    }
}

fn check_writable(paths: &[(&str, &Path)]) -> Result<()> {
    for (name, path) in paths {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        if !dir.is_dir() {
            return Err(Error::InvalidInput(format!("{name}: directory {} does not exist", dir.display())));
        }
        tempfile::NamedTempFile::new_in(dir)
            .map_err(|e| Error::InvalidInput(format!("{name}: cannot write in {}: {e}", dir.display())))?;
        if path.is_dir() {
            return Err(Error::InvalidInput(format!("{name}: {} is a directory", path.display())));
        }
    }
    Ok(())
}

fn say(out: &mut dyn Write, line: std::fmt::Arguments) -> Result<()> {
    out.write_fmt(line)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn field_on(path: &Path, grid: &Arc<Grid>, p: f64, what: &str) -> Result<ScalarField> {
    let f = read_field(path)?;
    if f.grid() != &**grid {
        return Err(Error::InvalidInput(format!("{what}: {} lives on a different grid than the configured domain", path.display())));
    }
    f.with_p(p)
}

fn default_last_iterate(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".last.json");
    output.with_file_name(name)
}

pub fn cmd_solve(job: &SolveJob, out: &mut dyn Write) -> Result<()> {
    check_p(job.p)?;
    check_h(job.h)?;
    in_section("solver", job.solver.validate())?;
    let grid = in_section("domain", job.domain.build(job.h))?;
    let last = job.last_iterate.clone().unwrap_or_else(|| default_last_iterate(&job.output));
    check_writable(&[("output", &job.output), ("last_iterate", &last)])?;

    let bc = in_section(
        "boundary",
        match &job.boundary {
            BoundarySpec::RadialExact { center } => radial_exact(2, job.p)?.sample(grid.clone(), *center),
            BoundarySpec::Constant { value } => ScalarField::constant(grid.clone(), job.p, *value),
            BoundarySpec::File { path } => field_on(path, &grid, job.p, "boundary"),
        },
    )?;
    in_section("boundary", bc.check_nonneg())?;
    let guess = in_section(
        "guess",
        match &job.guess {
            GuessSpec::Harmonic => harmonic_extension(&bc),
            GuessSpec::Constant { value } => ScalarField::constant(grid.clone(), job.p, *value),
            GuessSpec::File { path } => field_on(path, &grid, job.p, "guess"),
        },
    )?;

    match solve_dirichlet(&bc, &guess, &job.solver) {
        Ok(sol) => {
            write_field(&job.output, &sol.field)?;
            say(
                out,
                format_args!(
                    "solve: converged in {} iterations, residual {:.3e}, floored fraction {:.3e}",
                    sol.iterations, sol.residual, sol.floored_fraction
                ),
            )?;
            if sol.regularization_dominated {
                say(out, format_args!("solve: warning: most interior nodes sit on the regularization floor"))?;
            }
            say(out, format_args!("wrote {}", job.output.display()))
        }
        Err(e @ Error::Diverged { .. }) => {
            if let Error::Diverged { last: Some(f), .. } = &e {
                write_field(&last, f)?;
                say(out, format_args!("solve: last iterate written to {}", last.display()))?;
            }
            Err(e)
        }
        Err(e) => Err(e),
    }
}

fn snapshot_stem(t: SnapshotTrigger) -> String {
    match t {
        SnapshotTrigger::Lambda(l) => format!("snapshot_lambda_{l}"),
        SnapshotTrigger::MinGap(g) => format!("snapshot_min_gap_{g}"),
    }
}

pub fn cmd_continue(job: &ContinueJob, out: &mut dyn Write) -> Result<()> {
    check_p(job.p)?;
    check_h(job.h)?;
    in_section("solver", job.solver.validate())?;
    in_section("continuation", job.continuation.validate())?;
    let grid = in_section("domain", job.domain.build(job.h))?;
    let mut targets: Vec<(&str, PathBuf)> = vec![("branch_csv", job.branch_csv.clone())];
    if let Some(s) = &job.summary_json {
        targets.push(("summary_json", s.clone()));
    }
    if let Some(dir) = &job.snapshot_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::InvalidInput(format!("snapshot_dir: cannot create {}: {e}", dir.display())))?;
        targets.push(("snapshot_dir", dir.join("probe")));
    }
    check_writable(&targets.iter().map(|(n, p)| (*n, p.as_path())).collect::<Vec<_>>())?;

    let branch = continue_pullin(grid, job.p, &job.solver, &job.continuation)?;
    write_atomic(&job.branch_csv, branch.to_csv().as_bytes())?;
    if let Some(dir) = &job.snapshot_dir {
        for s in &branch.snapshots {
            let stem = snapshot_stem(s.trigger);
            write_field(&dir.join(format!("{stem}_u.json")), &s.u)?;
            write_field(&dir.join(format!("{stem}_v.json")), &s.v)?;
        }
    }
    let folds: Vec<_> = branch
        .folds
        .iter()
        .map(|f| {
            json!({
                "lambda": f.lambda,
                "arc_s": f.arc_s,
                "error_bound": f.error_bound,
                "row": f.index,
                "is_maximum": f.is_maximum,
            })
        })
        .collect();
    let last = branch.points.last();
    if let Some(path) = &job.summary_json {
        let summary = json!({
            "p": job.p,
            "h": job.h,
            "points": branch.points.len(),
            "final_lambda": last.map(|pt| pt.lambda),
            "final_min_gap": last.map(|pt| pt.min_gap),
            "lambda_star": branch.lambda_star().map(|f| f.lambda),
            "lambda_star_error_bound": branch.lambda_star().map(|f| f.error_bound),
            "folds": folds,
            "snapshots": branch.snapshots.iter().map(|s| snapshot_stem(s.trigger)).collect::<Vec<_>>(),
        });
        write_atomic(path, serde_json::to_string_pretty(&summary)?.as_bytes())?;
    }
    if let Some(pt) = last {
        say(
            out,
            format_args!("continue: {} points, final lambda {:.8}, min gap {:.6}", branch.points.len(), pt.lambda, pt.min_gap),
        )?;
    }
    match branch.lambda_star() {
        Some(f) => say(
            out,
            format_args!("lambda_star {} error_bound {} fold_row {}", fmt_f64(f.lambda), fmt_f64(f.error_bound), f.index),
        ),
        None => say(out, format_args!("lambda_star none (no fold before the stopping gap)")),
    }
}

fn verdict_tally(verdicts: &[Verdict]) -> (usize, usize, usize) {
    let pass = verdicts.iter().filter(|v| v.pass == Some(true)).count();
    let fail = verdicts.iter().filter(|v| v.pass == Some(false)).count();
    (pass, fail, verdicts.len() - pass - fail)
}

pub fn cmd_diagnose(job: &DiagnoseJob, out: &mut dyn Write) -> Result<()> {
    in_section("sweep", job.sweep.validate())?;
    check_writable(&[("report_csv", &job.report_csv), ("verdicts_json", &job.verdicts_json)])?;
    let u = read_field(&job.field)?;
    let report = run_sweep(&u, &job.sweep)?;
    write_atomic(&job.report_csv, report.to_csv().as_bytes())?;
    write_atomic(&job.verdicts_json, report.verdicts_json().as_bytes())?;
    let (pass, fail, withheld) = verdict_tally(&report.verdicts);
    say(
        out,
        format_args!("diagnose: {} rows; verdicts: {pass} pass, {fail} fail, {withheld} withheld", report.rows.len()),
    )?;
    for (c, class) in job.sweep.centers.iter().zip(&report.classifications) {
        if let Some(class) = class {
            let note = if class.ambiguous { " (ambiguous: disagrees with the direct value test)" } else { "" };
            say(out, format_args!("classify ({}, {}): {:?}{note}", c[0], c[1], class.kind))?;
        }
    }
    Ok(())
}

fn check_center(u: &ScalarField, x: Point) -> Result<()> {
    let g = u.grid();
    if !(x[0].is_finite() && x[1].is_finite()) || g.distance_to_hull(x) <= 0.0 || !g.is_interior(g.nearest_node(x)) {
        return Err(Error::InvalidInput(format!("center: ({}, {}) lies outside the domain", x[0], x[1])));
    }
    Ok(())
}

pub fn cmd_blowup(job: &BlowupJob, out: &mut dyn Write) -> Result<()> {
    check_writable(&[("output_json", &job.output_json), ("profile_json", &job.profile_json)])?;
    let u = read_field(&job.field)?;
    if u.grid().dim() != 2 {
        return Err(Error::InvalidInput("field: blow-up analysis needs a planar field".into()));
    }
    check_center(&u, job.center)?;
    let seq = in_section("blowup", blowup_analyze(&u, job.center, &job.blowup))?;
    write_atomic(&job.output_json, seq.to_json().as_bytes())?;
    write_atomic(&job.profile_json, seq.profile.to_json().as_bytes())?;
    say(
        out,
        format_args!(
            "blowup: {} (worst {:.3e}, tol {:.3e}); profile residual {:.3e}",
            seq.verdict, seq.check.worst_violation, seq.check.tolerance, seq.profile_residual
        ),
    )
}

pub fn cmd_rupture(job: &RuptureJob, out: &mut dyn Write) -> Result<()> {
    if job.taus.len() < 3 {
        return Err(Error::InvalidInput(format!("taus: need at least 3 thresholds, got {}", job.taus.len())));
    }
    if job.taus.iter().any(|t| !(t.is_finite() && *t > 0.0)) || job.taus.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("taus: thresholds must be positive and strictly decreasing".into()));
    }
    check_writable(&[("components_csv", &job.components_csv), ("verdict_json", &job.verdict_json)])?;
    let u = read_field(&job.field)?;
    if u.grid().dim() != 2 {
        return Err(Error::InvalidInput("field: rupture analysis needs a planar field".into()));
    }
    let disc = discreteness_check(&u, &job.taus)?;
    let sweep = sweep_dimension(&u, &job.taus)?;
    let fixed = match &job.scales {
        Some(s) => Some(in_section("scales", box_dimension(disc.masks.last().unwrap(), s))?),
        None => None,
    };
    let dimension = match sweep.slope {
        Some(s) => Verdict::new("dimension", s <= POINT_DIMENSION_TOL, s, POINT_DIMENSION_TOL),
        None => Verdict::withheld("dimension", 0.0, POINT_DIMENSION_TOL, "every sublevel set is empty"),
    };
    write_atomic(&job.components_csv, components_csv(&disc.masks).as_bytes())?;
    let report = json!({
        "verdicts": [&disc.verdict, &dimension],
        "counts": disc.counts,
        "scaled_diameters": disc.scaled_diameters,
        "sweep_dimension": sweep,
        "box_dimension": fixed,
    });
    write_atomic(&job.verdict_json, serde_json::to_string_pretty(&report)?.as_bytes())?;
    let fmt_pass = |v: &Verdict| match v.pass {
        Some(true) => "pass",
        Some(false) => "fail",
        None => "withheld",
    };
    say(
        out,
        format_args!(
            "rupture: {} components at tau {}; discreteness {}; dimension {} (slope {})",
            disc.counts.last().unwrap(),
            job.taus.last().unwrap(),
            fmt_pass(&disc.verdict),
            fmt_pass(&dimension),
            sweep.slope.map_or("undefined".to_string(), |s| format!("{s:.3}"))
        ),
    )
}
