//! Command execution.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use halfspace_heat::lorentz::{norm, quasi_norm_star, LorentzIndex};
use halfspace_heat::operators::Operators;
use halfspace_heat::solver::{
    check_admissibility, contraction_report, fixed_point_residual, picard_solve, AdmissibilityReport,
    Solution, SolverConfig,
};
use halfspace_heat::verify::{
    check_negativity, check_positivity, check_self_similarity, check_symmetry, check_yamazaki_integrals,
    fit_g1_decay, fit_trace_decay, ExponentFit, Ladder, LadderStatus, Parity, SignReport, SymmetryTransform,
    YamazakiEstimate, YamazakiInput,
};
use halfspace_heat::{BoundaryFunction, Grid, GridFunction};
use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;
use crate::error::{io_err, CliError};
use crate::output::{num, sha256_hex, OutputDir, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Check {
    TraceDecay,
    G1Decay,
    Yamazaki,
    SelfSimilarity,
    Positivity,
    Negativity,
    Symmetry,
    Contraction,
}

impl Check {
    pub fn name(&self) -> &'static str {
        match self {
            Check::TraceDecay => "trace_decay",
            Check::G1Decay => "g1_decay",
            Check::Yamazaki => "yamazaki",
            Check::SelfSimilarity => "self_similarity",
            Check::Positivity => "positivity",
            Check::Negativity => "negativity",
            Check::Symmetry => "symmetry",
            Check::Contraction => "contraction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Norm,
    Evolve,
    Solve,
    Verify(Check),
    Calibrate,
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Command::Norm => "norm".into(),
            Command::Evolve => "evolve".into(),
            Command::Solve => "solve".into(),
            Command::Verify(c) => format!("verify {}", c.name()),
            Command::Calibrate => "calibrate".into(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the configured output directory.
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub summary: String,
    pub output_dir: PathBuf,
}

struct Context {
    cfg: ExperimentConfig,
    grid: Arc<Grid>,
    solver: SolverConfig,
}

/// Result of one command before the manifest is written.
struct Report {
    passed: bool,
    summary: String,
    details: Map<String, Value>,
    admissibility: Option<AdmissibilityReport>,
}

impl Report {
    fn new(passed: bool, summary: String) -> Self {
        Report {
            passed,
            summary,
            details: Map::new(),
            admissibility: None,
        }
    }

    fn detail(mut self, key: &str, value: Value) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }
}

pub fn run(command: Command, config_path: &Path, options: &RunOptions) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let text = fs::read_to_string(config_path).map_err(io_err(config_path))?;
    let cfg = ExperimentConfig::parse(&text)?;
    let solver = cfg.solver_config()?;
    solver.check_hypothesis(cfg.grid.n)?;
    let grid = cfg.build_grid()?;
    let dir = match &options.output_dir {
        Some(d) => d.clone(),
        None => {
            let d = PathBuf::from(&cfg.output.directory);
            if d.is_absolute() {
                d
            } else {
                config_path.parent().unwrap_or(Path::new(".")).join(d)
            }
        }
    };
    let mut out = OutputDir::create(&dir)?;
    let ctx = Context { cfg, grid, solver };

    let report = match command {
        Command::Norm => norm_command(&ctx, &mut out)?,
        Command::Evolve => evolve_command(&ctx, &mut out)?,
        Command::Solve => solve_command(&ctx, &mut out)?,
        Command::Calibrate => calibrate_command(&ctx, &mut out)?,
        Command::Verify(check) => verify_command(&ctx, check, &mut out)?,
    };

    let canonical = ctx.cfg.render();
    let calibration = report.admissibility.as_ref().map(|a| {
        json!({
            "delta1": a.calibration.delta1,
            "delta2": a.calibration.delta2,
            "k": a.calibration.k,
            "probes": a.calibration.probes,
            "gamma": a.gamma,
            "epsilon": a.epsilon,
            "data_bound": a.data_bound,
            "potential_norm": a.potential_norm,
            "data_norm": a.data_norm,
            "admissible": a.admissible,
        })
    });
    let outputs: Vec<Value> = out
        .written()
        .iter()
        .map(|(f, h)| json!({ "file": f, "sha256": h }))
        .collect();
    let manifest = json!({
        "tool": "hsheat",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": halfspace_heat::VERSION,
        "command": command.name(),
        "config_sha256": sha256_hex(canonical.as_bytes()),
        "config": canonical,
        "seed": ctx.cfg.output.seed,
        "grid": {
            "n": ctx.grid.n(),
            "radius": ctx.grid.radius(),
            "cells_per_axis": ctx.cfg.grid.cells_per_axis,
            "interior_cells": ctx.grid.interior_len(),
            "boundary_cells": ctx.grid.boundary_len(),
        },
        "rho": ctx.cfg.rho(),
        "p": ctx.cfg.p(),
        "q": ctx.cfg.q(),
        "calibration": calibration,
        "passed": report.passed,
        "summary": report.summary,
        "details": Value::Object(report.details),
        "wall_time_seconds": start.elapsed().as_secs_f64(),
        "threads": rayon::current_num_threads(),
        "outputs": outputs,
    });
    out.write_manifest(&manifest)?;
    Ok(Outcome {
        passed: report.passed,
        summary: report.summary,
        output_dir: dir,
    })
}

fn interior_data(ctx: &Context) -> Result<GridFunction, CliError> {
    ctx.cfg.initial_data(&ctx.grid)?.ok_or_else(|| {
        CliError::Usage("this command needs interior data; the data profile is boundary-only".into())
    })
}

fn boundary_data(ctx: &Context) -> Result<BoundaryFunction, CliError> {
    ctx.cfg.boundary_data(&ctx.grid)?.ok_or_else(|| {
        CliError::Usage("this command needs boundary data (profile = boundary_homogeneous)".into())
    })
}

fn norm_command(ctx: &Context, out: &mut OutputDir) -> Result<Report, CliError> {
    let v = &ctx.cfg.verify;
    let idx = LorentzIndex::new(v.norm_p, v.norm_r)?;
    let (region, star, full) = match ctx.cfg.boundary_data(&ctx.grid)? {
        Some(b) => ("boundary", quasi_norm_star(&b, idx), norm(&b, idx)),
        None => {
            let f = interior_data(ctx)?;
            ("interior", quasi_norm_star(&f, idx), norm(&f, idx))
        }
    };
    let mut t = Table::new(&["region", "p", "r", "quasi_norm_star", "norm"]);
    t.push(vec![region.into(), num(v.norm_p), num(v.norm_r), num(star), num(full)]);
    out.write_table("norm.csv", &t)?;
    Ok(Report::new(
        true,
        format!("{region} L({}, {}) quasi-norm-star {star:.6e}, norm {full:.6e}", v.norm_p, v.norm_r),
    ))
}

fn evolve_command(ctx: &Context, out: &mut OutputDir) -> Result<Report, CliError> {
    let u0 = interior_data(ctx)?;
    let ops = Operators::new(&ctx.grid);
    let ip = LorentzIndex::weak(ctx.cfg.p())?;
    let iq = LorentzIndex::weak(ctx.cfg.q())?;
    let mut t = Table::new(&["t", "interior_weak_p", "boundary_weak_q", "xpq"]);
    let mut fields = Vec::new();
    let mut peak: f64 = 0.0;
    for time in ctx.solver.time_levels.report_times() {
        let u = ops.semigroup(&u0, time)?;
        let b = ops.trace(&u0, time)?;
        let (a, c) = (norm(&u, ip), norm(&b, iq));
        peak = peak.max(a + c);
        t.push(vec![num(time), num(a), num(c), num(a + c)]);
        fields.push((time, u, b));
    }
    out.write_table("evolve.csv", &t)?;
    if ctx.cfg.output.write_fields {
        let mut f = fields_table();
        for (time, u, b) in &fields {
            append_fields(&mut f, *time, u, b);
        }
        out.write_table("fields.csv", &f)?;
    }
    Ok(Report::new(true, format!("free evolution, sup X(p,q) norm {peak:.6e}")))
}

fn fields_table() -> Table {
    Table::new(&["t", "region", "cell", "value"])
}

fn append_fields(table: &mut Table, t: f64, interior: &GridFunction, boundary: &BoundaryFunction) {
    for (i, v) in interior.values().iter().enumerate() {
        table.push(vec![num(t), "interior".into(), i.to_string(), num(*v)]);
    }
    for (i, v) in boundary.values().iter().enumerate() {
        table.push(vec![num(t), "boundary".into(), i.to_string(), num(*v)]);
    }
}

fn solve(ctx: &Context) -> Result<(GridFunction, Solution), CliError> {
    let u0 = interior_data(ctx)?;
    let solution = picard_solve(&u0, &ctx.cfg.potential, &ctx.cfg.nonlinearity, &ctx.solver)?;
    Ok((u0, solution))
}

fn write_solution(ctx: &Context, solution: &Solution, out: &mut OutputDir) -> Result<(), CliError> {
    let mut levels = Table::new(&["t", "interior_weak_p", "boundary_weak_q", "xpq"]);
    for l in solution.level_norms()? {
        levels.push(vec![num(l.t), num(l.interior_weak_p), num(l.boundary_weak_q), num(l.xpq)]);
    }
    out.write_table("levels.csv", &levels)?;
    let mut history = Table::new(&["iteration", "difference", "ratio"]);
    for r in solution.history() {
        history.push(vec![r.iteration.to_string(), num(r.difference), num(r.ratio)]);
    }
    out.write_table("history.csv", &history)?;
    if ctx.cfg.output.write_fields {
        let mut f = fields_table();
        for ((t, u), b) in solution.times().iter().zip(solution.interior()).zip(solution.boundary()) {
            append_fields(&mut f, *t, u, b);
        }
        out.write_table("fields.csv", &f)?;
    }
    Ok(())
}

fn solve_command(ctx: &Context, out: &mut OutputDir) -> Result<Report, CliError> {
    let (_, solution) = solve(ctx)?;
    write_solution(ctx, &solution, out)?;
    let passed = solution.converged();
    let summary = format!(
        "{} after {} correction step(s), E-norm {:.6e}",
        if passed { "converged" } else { "diverged" },
        solution.iterations(),
        solution.e_norm()?
    );
    let mut r = Report::new(passed, summary).detail("iterations", json!(solution.iterations()));
    r.admissibility = Some(solution.admissibility().clone());
    Ok(r)
}

fn calibrate_command(ctx: &Context, out: &mut OutputDir) -> Result<Report, CliError> {
    let u0 = interior_data(ctx)?;
    let a = check_admissibility(&u0, &ctx.cfg.potential, &ctx.cfg.nonlinearity, &ctx.solver)?;
    let mut t = Table::new(&[
        "delta1",
        "delta2",
        "k",
        "probes",
        "potential_norm",
        "data_norm",
        "gamma",
        "epsilon",
        "data_bound",
        "admissible",
    ]);
    t.push(vec![
        num(a.calibration.delta1),
        num(a.calibration.delta2),
        num(a.calibration.k),
        a.calibration.probes.to_string(),
        num(a.potential_norm),
        num(a.data_norm),
        num(a.gamma),
        num(a.epsilon),
        num(a.data_bound),
        a.admissible.to_string(),
    ]);
    out.write_table("calibration.csv", &t)?;
    let mut r = Report::new(a.admissible, a.summary());
    r.admissibility = Some(a);
    Ok(r)
}

fn fit_report(fit: &ExponentFit, tol: f64, out: &mut OutputDir, file: &str) -> Result<Report, CliError> {
    let mut t = Table::new(&["t", "norm"]);
    for (a, b) in fit.times.iter().zip(&fit.norms) {
        t.push(vec![num(*a), num(*b)]);
    }
    out.write_table(file, &t)?;
    Ok(Report::new(
        fit.passes(tol),
        format!(
            "slope {:.6} vs theory {:.6}, relative deviation {:.3e} (tolerance {tol})",
            fit.slope, fit.theory, fit.deviation
        ),
    )
    .detail("slope", json!(fit.slope))
    .detail("theory", json!(fit.theory))
    .detail("deviation", json!(fit.deviation)))
}

fn sign_report(rep: SignReport, label: &str) -> Report {
    let zero = if rep.zero_solution { " (solution is identically zero)" } else { "" };
    Report::new(rep.pass, format!("{label}: min {:.6e}, max {:.6e}{zero}", rep.min, rep.max))
        .detail("min", json!(rep.min))
        .detail("max", json!(rep.max))
}

fn solved(ctx: &Context, out: &mut OutputDir) -> Result<(GridFunction, Solution), CliError> {
    let (u0, solution) = solve(ctx)?;
    write_solution(ctx, &solution, out)?;
    Ok((u0, solution))
}

fn verify_command(ctx: &Context, check: Check, out: &mut OutputDir) -> Result<Report, CliError> {
    let v = &ctx.cfg.verify;
    let mut admissibility = None;
    let mut report = match check {
        Check::TraceDecay => {
            let u0 = interior_data(ctx)?;
            let fit = fit_trace_decay(&u0, v.d1, v.d2, v.r, &v.times)?;
            fit_report(&fit, v.tolerance.unwrap_or(0.05), out, "decay.csv")?
        }
        Check::G1Decay => {
            let psi = boundary_data(ctx)?;
            let fit = fit_g1_decay(&psi, v.d1, v.d2, v.r, v.target, &v.times)?;
            fit_report(&fit, v.tolerance.unwrap_or(0.05), out, "decay.csv")?
        }
        Check::Yamazaki => {
            let input = match v.estimate {
                YamazakiEstimate::Key1Est1 => YamazakiInput::Interior(interior_data(ctx)?),
                _ => YamazakiInput::Boundary(boundary_data(ctx)?),
            };
            let ladder = Ladder {
                center: v.ladder_center,
                start_octaves: v.ladder_start,
                max_steps: v.ladder_steps,
                tolerance: v.tolerance.unwrap_or(Ladder::default().tolerance),
                ..Ladder::default()
            };
            let rep = check_yamazaki_integrals(&input, v.d1, v.d2, v.estimate, ladder)?;
            let mut t = Table::new(&["t_min", "t_max", "integral", "relative_change"]);
            for s in &rep.steps {
                t.push(vec![
                    num(s.t_min),
                    num(s.t_max),
                    num(s.integral),
                    s.relative_change.map(num).unwrap_or_default(),
                ]);
            }
            out.write_table("ladder.csv", &t)?;
            let converged = rep.status == LadderStatus::Converged;
            Report::new(
                converged && rep.constant.is_finite(),
                format!(
                    "{}: ladder {} after {} steps, integral {:.6e}, constant {:.6e}",
                    rep.estimate.name(),
                    if converged { "converged" } else { "inconclusive" },
                    rep.steps.len(),
                    rep.integral,
                    rep.constant
                ),
            )
            .detail("constant", json!(rep.constant))
        }
        Check::SelfSimilarity => {
            let (_, solution) = solved(ctx, out)?;
            admissibility = Some(solution.admissibility().clone());
            let tol = v.tolerance.unwrap_or(0.05);
            let rep = check_self_similarity(&solution, ctx.cfg.rho(), &v.lambdas)?;
            let mut t = Table::new(&["max_defect", "compared", "excluded", "floor", "core_radius"]);
            t.push(vec![
                num(rep.max_defect),
                rep.compared.to_string(),
                rep.excluded.to_string(),
                num(rep.floor),
                num(rep.core_radius),
            ]);
            out.write_table("self_similarity.csv", &t)?;
            Report::new(
                solution.converged() && rep.max_defect <= tol,
                format!(
                    "max scaling defect {:.6e} over {} comparisons in |x| < {:.3} (tolerance {tol})",
                    rep.max_defect, rep.compared, rep.core_radius
                ),
            )
            .detail("max_defect", json!(rep.max_defect))
        }
        Check::Positivity => {
            let (_, solution) = solved(ctx, out)?;
            admissibility = Some(solution.admissibility().clone());
            sign_report(check_positivity(&solution), "positivity")
        }
        Check::Negativity => {
            let (_, solution) = solved(ctx, out)?;
            admissibility = Some(solution.admissibility().clone());
            sign_report(check_negativity(&solution), "negativity")
        }
        Check::Symmetry => {
            let (_, solution) = solved(ctx, out)?;
            admissibility = Some(solution.admissibility().clone());
            let tol = v.tolerance.unwrap_or(1e-10);
            let defect = check_symmetry(&solution, v.transform, v.parity)?;
            let what = match (v.transform, v.parity) {
                (SymmetryTransform::Rotation, Parity::Symmetric) => "rotation symmetry",
                (SymmetryTransform::Rotation, Parity::Antisymmetric) => "rotation antisymmetry",
                (SymmetryTransform::Reflection, Parity::Symmetric) => "reflection symmetry",
                (SymmetryTransform::Reflection, Parity::Antisymmetric) => "reflection antisymmetry",
            };
            Report::new(defect <= tol, format!("{what} defect {defect:.3e} (tolerance {tol:e})"))
                .detail("defect", json!(defect))
        }
        Check::Contraction => {
            let (u0, solution) = solved(ctx, out)?;
            admissibility = Some(solution.admissibility().clone());
            let rep = contraction_report(&solution)?;
            let residual =
                fixed_point_residual(&solution, &u0, &ctx.cfg.potential, &ctx.cfg.nonlinearity, &ctx.solver)?;
            let tol = v.tolerance.unwrap_or(ctx.solver.residual_tolerance);
            Report::new(
                solution.converged() && !rep.flagged && residual < tol,
                format!(
                    "{} correction step(s), max ratio {:.4}, monotone {}, residual {residual:.3e} (tolerance {tol:e})",
                    solution.iterations(),
                    rep.max_ratio,
                    rep.monotone
                ),
            )
            .detail("max_ratio", json!(rep.max_ratio))
            .detail("residual", json!(residual))
        }
    };
    report.admissibility = admissibility;
    Ok(report)
}
