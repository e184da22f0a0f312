//! Run orchestration behind the command-line subcommands: single solves,
//! parameter scans, basis-size sweeps, fermionized-limit oracles and the
//! coupling-strength table. All files are written under one output
//! directory; every CSV starts with a `# config_hash=...` line.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Artifact, RunConfig, ScanAxis};
use crate::csv::Num;
use crate::error::{validation, Error, Result};
use crate::grid1p::{trap_basis, Grid, TrapSpec};
use crate::interaction::InteractionSpec;
use crate::model::Model;
use crate::observables::{
    count_humps, displacement, one_body_density, tg_oracle, two_body_density,
};
use crate::solver::{ground_state_krylov, relax_imaginary_time, Method, SolveReport};
use crate::units::{coupling_strength_1d, PhysicalParams};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Half-width used when counting density maxima in oracle output.
const HUMP_HALF_WIDTH: usize = 5;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Worker threads for scan points; `None` uses all cores.
    pub jobs: Option<usize>,
    pub quiet: bool,
}

/// Process exit status for an error: 1 invalid input, 2 solver failure, 3 I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 3,
        Error::NotConverged { .. } | Error::Stagnation { .. } | Error::Eigensolver(_) => 2,
        _ => 1,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PointResult {
    pub axis_value: Option<f64>,
    pub n_orbitals: usize,
    pub dimension: usize,
    pub energy: f64,
    pub n0: f64,
    pub mean_x: f64,
    pub residual: f64,
    pub iterations: usize,
    pub method: Method,
    pub gap: Option<f64>,
    pub degenerate: bool,
    pub natural_occupations: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub axis_value: Option<f64>,
    pub error: String,
    pub iterations: Option<usize>,
    pub best_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
    pub config: RunConfig,
    pub axis: Option<&'static str>,
    pub results: Vec<PointResult>,
    pub failures: Vec<Failure>,
}

impl Summary {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Ground state plus the quantities reported for every point.
pub struct Solved {
    pub report: SolveReport,
    pub result: PointResult,
}

pub fn solve_model(model: &Model, cfg: &RunConfig, axis_value: Option<f64>) -> Result<Solved> {
    let h = model.hamiltonian(cfg.n_particles)?;
    let report = match cfg.solver.method {
        Method::Krylov => ground_state_krylov(&h, &cfg.solver.krylov())?,
        Method::ImaginaryTime => relax_imaginary_time(&h, &cfg.solver.relax())?,
    };
    let (dm, _) = one_body_density(&report.state, &model.orbitals)?;
    let result = PointResult {
        axis_value,
        n_orbitals: model.n_orbitals(),
        dimension: h.dim(),
        energy: report.energy,
        n0: dm.n0(),
        mean_x: displacement(&dm, &model.orbitals),
        residual: report.residual_norm,
        iterations: report.iterations,
        method: report.method,
        gap: report.gap,
        degenerate: report.degenerate,
        natural_occupations: dm.natural_occupations.clone(),
    };
    Ok(Solved { report, result })
}

fn failure(axis_value: Option<f64>, e: &Error) -> Failure {
    let (iterations, best_residual) = match e {
        Error::NotConverged {
            iterations,
            residual,
        } => (Some(*iterations), Some(*residual)),
        _ => (None, None),
    };
    Failure {
        axis_value,
        error: e.to_string(),
        iterations,
        best_residual,
    }
}

struct Output<'a> {
    dir: &'a Path,
    hash: String,
}

impl Output<'_> {
    fn csv(
        &self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<()> {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        writeln!(w, "# config_hash={}", self.hash)?;
        body(&mut w)?;
        w.flush()?;
        Ok(())
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        fs::write(self.dir.join(name), text + "\n")?;
        Ok(())
    }
}

fn prepare(cfg: &RunConfig, opts: &RunOptions) -> Result<(Grid, String)> {
    let grid = cfg.make_grid()?;
    fs::create_dir_all(&opts.out_dir)?;
    Ok((grid, cfg.hash()))
}

fn write_state_artifacts(
    out: &Output,
    cfg: &RunConfig,
    model: &Model,
    solved: &Solved,
    suffix: &str,
) -> Result<()> {
    let (dm, profile) = one_body_density(&solved.report.state, &model.orbitals)?;
    if cfg.output.wants(Artifact::Rho1) {
        out.csv(&format!("rho1{suffix}.csv"), |w| profile.write_csv(w))?;
    }
    if cfg.output.wants(Artifact::Occupations) {
        out.csv(&format!("occupations{suffix}.csv"), |w| {
            dm.write_occupations(w)
        })?;
    }
    if cfg.output.wants(Artifact::Rho2) && cfg.n_particles >= 2 {
        let pair = two_body_density(&solved.report.state, &model.orbitals, None)?;
        out.csv(&format!("rho2{suffix}.csv"), |w| pair.write_csv(w))?;
    }
    Ok(())
}

fn write_model_artifacts(out: &Output, cfg: &RunConfig, model: &Model) -> Result<()> {
    if cfg.output.wants(Artifact::Orbitals) {
        out.csv("orbitals.csv", |w| {
            model.orbitals.write_csv(&model.potential, w)
        })?;
    }
    if cfg.output.wants(Artifact::Tensor) {
        out.csv("tensor.csv", |w| model.tensor.write_csv(w))?;
    }
    Ok(())
}

fn log(opts: &RunOptions, line: impl FnOnce() -> String) {
    if !opts.quiet {
        eprintln!("{}", line());
    }
}

fn describe(r: &PointResult) -> String {
    format!(
        "E = {:.12}  n0 = {:.6}  <x> = {:.3e}  residual = {:.2e}  iterations = {}",
        r.energy, r.n0, r.mean_x, r.residual, r.iterations
    )
}

/// One ground state for the configured point.
pub fn run_solve(cfg: &RunConfig, opts: &RunOptions) -> Result<Summary> {
    let (grid, hash) = prepare(cfg, opts)?;
    let out = Output {
        dir: &opts.out_dir,
        hash: hash.clone(),
    };
    let model = Model::build(&grid, cfg.trap, cfg.interaction, cfg.n_orbitals)?;
    write_model_artifacts(&out, cfg, &model)?;
    let mut summary = Summary {
        version: VERSION,
        command: "solve",
        config_hash: hash,
        config: cfg.clone(),
        axis: None,
        results: Vec::new(),
        failures: Vec::new(),
    };
    match solve_model(&model, cfg, None) {
        Ok(solved) => {
            log(opts, || describe(&solved.result));
            write_state_artifacts(&out, cfg, &model, &solved, "")?;
            summary.results.push(solved.result);
        }
        Err(e) if exit_code(&e) == 2 => summary.failures.push(failure(None, &e)),
        Err(e) => return Err(e),
    }
    finish(&out, &summary)?;
    Ok(summary)
}

fn finish(out: &Output, summary: &Summary) -> Result<()> {
    out.json("summary.json", summary)?;
    if !summary.failures.is_empty() {
        out.json("failures.json", &summary.failures)?;
    }
    Ok(())
}

enum Prepared {
    Shared(Model),
    PerTrap,
}

/// Points along one axis, solved on a worker pool and written in axis order.
pub fn run_scan(cfg: &RunConfig, opts: &RunOptions) -> Result<Summary> {
    let scan = cfg
        .scan
        .as_ref()
        .ok_or_else(|| validation("scan: needs scan.axis"))?;
    scan_points(cfg, opts, scan.axis, &scan.values, "scan")
}

/// Ground energy over nested orbital bases: `scan.values` when the scan axis
/// is `n`, otherwise `1..=n`.
pub fn run_converge(cfg: &RunConfig, opts: &RunOptions) -> Result<Summary> {
    let values: Vec<f64> = match &cfg.scan {
        Some(s) if s.axis == ScanAxis::N => s.values.clone(),
        _ => (1..=cfg.n_orbitals).map(|k| k as f64).collect(),
    };
    scan_points(cfg, opts, ScanAxis::N, &values, "converge")
}

fn scan_points(
    cfg: &RunConfig,
    opts: &RunOptions,
    axis: ScanAxis,
    values: &[f64],
    command: &'static str,
) -> Result<Summary> {
    let (grid, hash) = prepare(cfg, opts)?;
    let out = Output {
        dir: &opts.out_dir,
        hash: hash.clone(),
    };

    let prepared = match axis {
        ScanAxis::H => Prepared::PerTrap,
        ScanAxis::N => {
            let largest = values.iter().copied().fold(1.0f64, f64::max) as usize;
            Prepared::Shared(Model::build(&grid, cfg.trap, cfg.interaction, largest)?)
        }
        ScanAxis::G0 | ScanAxis::Alpha => Prepared::Shared(Model::build(
            &grid,
            cfg.trap,
            InteractionSpec::homogeneous(0.0),
            cfg.n_orbitals,
        )?),
    };
    if let Prepared::Shared(model) = &prepared {
        if axis != ScanAxis::N {
            write_model_artifacts(&out, cfg, &model.with_interaction(cfg.interaction)?)?;
        } else {
            write_model_artifacts(&out, cfg, model)?;
        }
    }

    let point = |&v: &f64| -> Result<(Model, Solved)> {
        let model = match (&prepared, axis) {
            (Prepared::Shared(m), ScanAxis::N) => m.truncated(v as usize)?,
            (Prepared::Shared(m), ScanAxis::G0) => m.with_interaction(InteractionSpec {
                g0: v,
                ..cfg.interaction
            })?,
            (Prepared::Shared(m), ScanAxis::Alpha) => m.with_interaction(InteractionSpec {
                alpha: v,
                ..cfg.interaction
            })?,
            _ => Model::build(
                &grid,
                TrapSpec { h: v, ..cfg.trap },
                cfg.interaction,
                cfg.n_orbitals,
            )?,
        };
        let solved = solve_model(&model, cfg, Some(v))?;
        log(opts, || {
            format!("{} = {v}: {}", axis.name(), describe(&solved.result))
        });
        Ok((model, solved))
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = opts.jobs {
        builder = builder.num_threads(jobs.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| validation(format!("--jobs: {e}")))?;
    let outcomes: Vec<Result<(Model, Solved)>> =
        pool.install(|| values.par_iter().map(point).collect());

    let mut summary = Summary {
        version: VERSION,
        command,
        config_hash: hash,
        config: cfg.clone(),
        axis: Some(axis.name()),
        results: Vec::new(),
        failures: Vec::new(),
    };
    let mut rows = Vec::with_capacity(values.len());
    for (k, (&v, outcome)) in values.iter().zip(outcomes).enumerate() {
        match outcome {
            Ok((model, solved)) => {
                write_state_artifacts(&out, cfg, &model, &solved, &format!("_{k:03}"))?;
                let r = &solved.result;
                rows.push(format!(
                    "{},{},{},{},{},{}",
                    Num(v),
                    Num(r.energy),
                    Num(r.n0),
                    Num(r.mean_x),
                    Num(r.residual),
                    r.iterations
                ));
                summary.results.push(solved.result);
            }
            Err(e) if exit_code(&e) == 2 => {
                log(opts, || format!("{} = {v}: {e}", axis.name()));
                let f = failure(Some(v), &e);
                let residual = f.best_residual.unwrap_or(f64::NAN);
                let iterations = f.iterations.map_or(String::new(), |i| i.to_string());
                rows.push(format!(
                    "{},NaN,NaN,NaN,{},{iterations}",
                    Num(v),
                    Num(residual)
                ));
                summary.failures.push(f);
            }
            Err(e) => return Err(e),
        }
    }
    out.csv(&format!("{command}.csv"), |w| {
        writeln!(w, "{},E,n0,mean_x,residual,iterations", axis.name())?;
        rows.iter().try_for_each(|r| writeln!(w, "{r}"))
    })?;
    finish(&out, &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
    pub config: RunConfig,
    pub energy_tg: f64,
    pub humps: usize,
    pub single_particle_energies: Vec<f64>,
}

/// Fermionized-limit energy and density for the configured trap and `N`.
pub fn run_oracle(cfg: &RunConfig, opts: &RunOptions) -> Result<OracleSummary> {
    let (grid, hash) = prepare(cfg, opts)?;
    let out = Output {
        dir: &opts.out_dir,
        hash: hash.clone(),
    };
    let basis = trap_basis(&grid, &cfg.trap, cfg.n_particles)?;
    let (energy_tg, profile) = tg_oracle(&basis, cfg.n_particles)?;
    out.csv("tg_rho1.csv", |w| profile.write_csv(w))?;
    let summary = OracleSummary {
        version: VERSION,
        command: "oracle",
        config_hash: hash,
        config: cfg.clone(),
        energy_tg,
        humps: count_humps(&profile.values, HUMP_HALF_WIDTH),
        single_particle_energies: basis.energies().to_vec(),
    };
    log(opts, || {
        format!("E_TG = {energy_tg:.12}  humps = {}", summary.humps)
    });
    out.json("summary.json", &summary)?;
    Ok(summary)
}

/// One row of the coupling-strength table at `aperp = 0.1`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CouplingRow {
    pub frequency_hz: f64,
    pub species: &'static str,
    pub a0_scaled: f64,
    pub tabulated: f64,
}

pub const TABLE_APERP: f64 = 0.1;

pub const COUPLING_TABLE: [CouplingRow; 8] = [
    CouplingRow {
        frequency_hz: 1e2,
        species: "Na",
        a0_scaled: 1.9e-3,
        tabulated: 0.78,
    },
    CouplingRow {
        frequency_hz: 1e2,
        species: "Rb",
        a0_scaled: 5e-3,
        tabulated: 2.2,
    },
    CouplingRow {
        frequency_hz: 1e3,
        species: "Na",
        a0_scaled: 6e-3,
        tabulated: 2.6,
    },
    CouplingRow {
        frequency_hz: 1e3,
        species: "Rb",
        a0_scaled: 1.6e-2,
        tabulated: 8.3,
    },
    CouplingRow {
        frequency_hz: 1e4,
        species: "Na",
        a0_scaled: 1.9e-2,
        tabulated: 105.0,
    },
    CouplingRow {
        frequency_hz: 1e4,
        species: "Rb",
        a0_scaled: 5e-2,
        tabulated: 77.0,
    },
    CouplingRow {
        frequency_hz: 1e5,
        species: "Na",
        a0_scaled: 6e-2,
        tabulated: 189.0,
    },
    CouplingRow {
        frequency_hz: 1e5,
        species: "Rb",
        a0_scaled: 0.16,
        tabulated: -48.0,
    },
];

impl CouplingRow {
    pub fn computed(&self) -> Result<f64> {
        coupling_strength_1d(PhysicalParams::new(self.a0_scaled, TABLE_APERP)?)
    }
}

/// The coupling table as aligned text, with computed and tabulated values.
pub fn format_table1() -> Result<String> {
    let mut s = format!(
        "{:>10} {:>7} {:>10} {:>12} {:>10} {:>9}\n",
        "omega/2pi", "species", "a0'", "g' computed", "tabulated", "rel.dev"
    );
    for row in &COUPLING_TABLE {
        let g = row.computed()?;
        s += &format!(
            "{:>10.0e} {:>7} {:>10.2e} {:>12.4} {:>10} {:>8.1}%\n",
            row.frequency_hz,
            row.species,
            row.a0_scaled,
            g,
            row.tabulated,
            100.0 * (g - row.tabulated) / row.tabulated.abs()
        );
    }
    Ok(s)
}
