//! Subcommand implementations. All outputs are deterministic for a fixed
//! config: sweep points are enumerated in (t, z, eps) lexicographic order and
//! results are collected back in input order regardless of thread count.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use cmdnls_core::diagnostics::InvariantReport;
use cmdnls_core::evolve;
use cmdnls_core::formula::FormulaWorkspace;
use cmdnls_core::grid::{Field, GridSpec, HardyField, UpperHalfPoint};
use cmdnls_core::ops;
use cmdnls_core::snapshot::write_snapshot;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::datum::build_datum;

/// Exit code when cmd_compare exceeds its error gate (1 is operational failure).
pub const EXIT_GATE_EXCEEDED: i32 = 2;

pub struct RunContext {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub threads: usize,
    pub seed: u64,
}

impl RunContext {
    pub fn new(config: RunConfig, out_dir: Option<PathBuf>, threads: usize, seed: u64) -> Self {
        let out_dir = out_dir.unwrap_or_else(|| config.out_dir.clone());
        Self {
            config,
            out_dir,
            threads: threads.max(1),
            seed,
        }
    }
}

#[derive(Serialize)]
struct RunMeta<'a> {
    command: &'a str,
    seed: u64,
    threads: usize,
    config: &'a RunConfig,
}

fn prepare(ctx: &RunContext, command: &str) -> Result<(GridSpec, Field)> {
    ctx.config.validate()?;
    fs::create_dir_all(&ctx.out_dir)
        .with_context(|| format!("cannot create output directory {:?}", ctx.out_dir))?;
    let meta = RunMeta {
        command,
        seed: ctx.seed,
        threads: ctx.threads,
        config: &ctx.config,
    };
    fs::write(
        ctx.out_dir.join("run_meta.json"),
        serde_json::to_string_pretty(&meta)?,
    )?;
    let grid = ctx.config.grid.build()?;
    let built = build_datum(&ctx.config.datum, grid)?;
    for warning in &built.warnings {
        eprintln!("warning: {warning}");
    }
    Ok((grid, built.field))
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("cannot build thread pool")
}

fn ensure_finite(what: &str, values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        bail!("non-finite value in {what}: {values:?}");
    }
    Ok(())
}

/// Complex scalar as re+imi / re-imi, shortest round-trip digits.
fn fmt_complex(z: Complex64) -> String {
    if z.im >= 0.0 {
        format!("{}+{}i", z.re, z.im)
    } else {
        format!("{}{}i", z.re, z.im)
    }
}

fn workspace_for(config: &RunConfig, datum: &Field) -> Result<FormulaWorkspace> {
    let mut ws = FormulaWorkspace::new(datum, config.formula.to_core())?;
    ws.configure_refinement(
        config.formula.resolvent_refinement.clone(),
        config.formula.trace_refinement.clone(),
    )?;
    ws.set_z_min(config.formula.z_min);
    Ok(ws)
}

fn sweep_points(config: &RunConfig) -> Result<Vec<(f64, UpperHalfPoint)>> {
    let mut points = Vec::new();
    for &t in &config.sweep.t {
        for &z in &config.sweep.z {
            let point = UpperHalfPoint::with_floor(Complex64::new(z[0], z[1]), config.formula.z_min)?;
            points.push((t, point));
        }
    }
    Ok(points)
}

pub fn cmd_evolve(ctx: &RunContext) -> Result<i32> {
    let (_, datum) = prepare(ctx, "evolve")?;
    let traj = evolve::evolve(&datum, &ctx.config.solver.to_core())?;

    let snap_dir = ctx.out_dir.join("snapshots");
    fs::create_dir_all(&snap_dir)?;
    for (idx, (t, u)) in traj.snapshots().iter().enumerate() {
        write_snapshot(&snap_dir.join(format!("snap_{idx:05}.cmdn")), *t, u)?;
    }

    let mut diag = csv::Writer::from_path(ctx.out_dir.join("diagnostics.csv"))?;
    diag.write_record(["t", "rhs_norm", "leak", "i1", "i2", "mass_defect"])?;
    let mut inv = csv::Writer::from_path(ctx.out_dir.join("invariants.csv"))?;
    inv.write_record(["t", "i1", "i2", "mass_defect", "x2_norm", "leak", "lb_slack"])?;
    for (t, u) in traj.snapshots() {
        let report = InvariantReport::compute(*t, u);
        let rhs_norm = evolve::rhs(u).l2_norm();
        let row = [*t, rhs_norm, report.chirality_leak, report.i1, report.i2, report.mass_defect];
        ensure_finite("diagnostics.csv", &row)?;
        diag.serialize(row)?;
        let row = [
            *t,
            report.i1,
            report.i2,
            report.mass_defect,
            report.x2_norm,
            report.chirality_leak,
            report.lower_bound_slack,
        ];
        ensure_finite("invariants.csv", &row)?;
        inv.serialize(row)?;
    }
    diag.flush()?;
    inv.flush()?;

    println!(
        "evolve: {} steps to t = {}, {} snapshots, max leak {:.3e}",
        traj.steps().len(),
        traj.final_time(),
        traj.snapshots().len(),
        traj.max_leak()
    );
    Ok(0)
}

pub fn cmd_formula(ctx: &RunContext) -> Result<i32> {
    let (_, datum) = prepare(ctx, "formula")?;
    let ws = workspace_for(&ctx.config, &datum)?;
    let points = sweep_points(&ctx.config)?;

    let rows: Vec<(f64, Complex64, Complex64, usize, f64)> = pool(ctx.threads)?.install(|| {
        points
            .par_iter()
            .map(|&(t, z)| {
                let detail = ws.eval_detail(t, z, 1.0)?;
                Ok((t, z.get(), detail.value, detail.iterations, detail.residual))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut sweep = csv::Writer::from_path(ctx.out_dir.join("sweep.csv"))?;
    sweep.write_record(["t", "re_z", "im_z", "eps", "re_u", "im_u", "solver_iters", "residual"])?;
    for (t, z, u, iters, residual) in &rows {
        ensure_finite("sweep.csv", &[*t, z.re, z.im, u.re, u.im, *residual])?;
        sweep.serialize((t, z.re, z.im, 1.0, u.re, u.im, iters, residual))?;
    }
    sweep.flush()?;
    println!("formula: {} evaluations written to sweep.csv", rows.len());
    Ok(0)
}

pub fn cmd_compare(ctx: &RunContext) -> Result<i32> {
    let (_, datum) = prepare(ctx, "compare")?;

    for &t in &ctx.config.sweep.t {
        let steps = t / ctx.config.solver.dt;
        if (steps - steps.round()).abs() > 1e-9 || t > ctx.config.solver.t_final + 1e-12 {
            bail!("sweep t = {t} is not reachable with dt = {} up to t_final = {}",
                ctx.config.solver.dt, ctx.config.solver.t_final);
        }
    }

    let traj = evolve::evolve(&datum, &ctx.config.solver.to_core())?;
    let ws = workspace_for(&ctx.config, &datum)?;
    let points = sweep_points(&ctx.config)?;
    for &(t, _) in &points {
        if traj.at(t).is_none() {
            bail!("no snapshot at sweep t = {t}; adjust snapshot_stride so sweep times land on the lattice");
        }
    }

    let rows: Vec<(f64, Complex64, Complex64, Complex64)> = pool(ctx.threads)?.install(|| {
        points
            .par_iter()
            .map(|&(t, z)| {
                let formula = ws.explicit_eval(t, z)?;
                let state = traj.at(t).expect("checked above");
                let solver = ops::poisson_eval(&HardyField::project(state), z);
                Ok((t, z.get(), formula, solver))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut table = csv::Writer::from_path(ctx.out_dir.join("compare.csv"))?;
    table.write_record([
        "t", "re_z", "im_z", "re_formula", "im_formula", "re_solver", "im_solver", "abs_err",
    ])?;
    let mut worst: Option<(f64, f64, Complex64)> = None;
    for (t, z, formula, solver) in &rows {
        let err = (formula - solver).norm();
        ensure_finite(
            "compare.csv",
            &[*t, z.re, z.im, formula.re, formula.im, solver.re, solver.im, err],
        )?;
        table.serialize((t, z.re, z.im, formula.re, formula.im, solver.re, solver.im, err))?;
        if worst.map_or(true, |(max, _, _)| err > max) {
            worst = Some((err, *t, *z));
        }
    }
    table.flush()?;

    let (max_abs_err, argmax_t, argmax_z) = worst.expect("sweep is nonempty");
    let mut summary = csv::Writer::from_path(ctx.out_dir.join("summary.csv"))?;
    summary.write_record(["max_abs_err", "argmax_t", "argmax_z"])?;
    summary.serialize((max_abs_err, argmax_t, fmt_complex(argmax_z)))?;
    summary.flush()?;

    println!(
        "compare: max_abs_err = {max_abs_err:.6e} at t = {argmax_t}, z = {} (gate {:.1e})",
        fmt_complex(argmax_z),
        ctx.config.compare_gate
    );
    if max_abs_err > ctx.config.compare_gate {
        return Ok(EXIT_GATE_EXCEEDED);
    }
    Ok(0)
}

pub fn cmd_zd(ctx: &RunContext) -> Result<i32> {
    let (_, datum) = prepare(ctx, "zd")?;
    let ws = workspace_for(&ctx.config, &datum)?;
    let points = sweep_points(&ctx.config)?;
    let eps_grid = ctx.config.sweep.eps.clone();

    type ZdRow = (f64, Complex64, f64, Complex64, f64);
    let blocks: Vec<Vec<ZdRow>> = pool(ctx.threads)?.install(|| {
        points
            .par_iter()
            .map(|&(t, z)| {
                let limit = ws.zd_limit_eval(t, z)?;
                let mut block = Vec::with_capacity(eps_grid.len() + 1);
                for &eps in &eps_grid {
                    let value = ws.zd_eps_eval(t, z, eps)?;
                    block.push((t, z.get(), eps, value, (value - limit).norm()));
                }
                block.push((t, z.get(), 0.0, limit, 0.0));
                Ok(block)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut table = csv::Writer::from_path(ctx.out_dir.join("zd.csv"))?;
    table.write_record(["t", "re_z", "im_z", "eps", "re_u", "im_u", "abs_gap_to_limit"])?;
    let mut rows = 0usize;
    for block in &blocks {
        for (t, z, eps, u, gap) in block {
            ensure_finite("zd.csv", &[*t, z.re, z.im, *eps, u.re, u.im, *gap])?;
            table.serialize((t, z.re, z.im, eps, u.re, u.im, gap))?;
            rows += 1;
        }
    }
    table.flush()?;
    println!("zd: {rows} rows written to zd.csv (eps = 0 rows are the dispersionless limit)");
    Ok(0)
}

pub fn cmd_datum_dump(ctx: &RunContext) -> Result<i32> {
    let (grid, datum) = prepare(ctx, "datum-dump")?;
    let samples = datum.samples();
    let mut table = csv::Writer::from_path(ctx.out_dir.join("datum.csv"))?;
    table.write_record(["x", "re_u", "im_u"])?;
    for (j, s) in samples.iter().enumerate() {
        let row = [grid.x(j), s.re, s.im];
        ensure_finite("datum.csv", &row)?;
        table.serialize(row)?;
    }
    table.flush()?;
    write_snapshot(&ctx.out_dir.join("datum.cmdn"), 0.0, &datum)?;

    let report = InvariantReport::compute(0.0, &datum);
    println!(
        "datum {}: leak {:.3e}, i1 {:.6e}, i2 {:.6e}, mass defect {:.6e}, sup |u| {:.6}",
        ctx.config.datum.kind(),
        report.chirality_leak,
        report.i1,
        report.i2,
        report.mass_defect,
        datum.linf_norm()
    );
    Ok(0)
}

