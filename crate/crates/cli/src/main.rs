//! `phosdyn`: batch front end for the phosphorylation / nuclear import model.
//!
//! Every run writes its outputs plus `metadata.json` into `--out`. The
//! metadata holds the fully resolved config, so
//! `phosdyn <cmd> --config out/metadata.json --out again` repeats the run.

mod commands;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use commands::*;
use output::OutDir;
use phosdyn::{ModelParams, Param};
use settings::{resolved_text, Grid, Interval, Numbers, Sources, Start};

#[derive(Parser)]
#[command(name = "phosdyn", version, about = "Phosphorylation / nuclear import dynamics")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// `key = value` config file, or a metadata.json of an earlier run.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override one entry: `key=value` (model) or `section.key=value`.
    #[arg(long = "set", short = 's', global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory; not part of the recorded config [default: out].
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Base seed of all random streams [default: 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses one per core [default: 0].
    #[arg(long, short, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the reduced or full system (stochastic if sigma > 0).
    Simulate {
        #[arg(long)]
        system: Option<System>,
        /// `auto`, `c_no,c_nop`, or all seven full-system components.
        #[arg(long)]
        x0: Option<Start>,
        /// Uniform output step; 0 records every step.
        #[arg(long)]
        sample: Option<f64>,
    },
    /// Trace both nullclines and locate the equilibria.
    Nullclines {
        /// Totals to trace, `lo,hi`.
        #[arg(long)]
        total: Option<Interval>,
        #[arg(long)]
        n_total: Option<usize>,
        /// Totals searched for equilibria, `lo,hi`.
        #[arg(long)]
        eq_total: Option<Interval>,
    },
    /// Bifurcation diagram: `eq1d`, `hopf2d` or `cyclefold2d`.
    Diagram {
        #[arg(long)]
        kind: Option<DiagramKind>,
        #[arg(long)]
        free: Option<Param>,
        #[arg(long)]
        range: Option<Interval>,
        /// Second parameter of two-parameter curves.
        #[arg(long)]
        free2: Option<Param>,
        #[arg(long)]
        range2: Option<Interval>,
        #[arg(long)]
        max_points: Option<usize>,
        #[arg(long)]
        h_max: Option<f64>,
    },
    /// Regime label on a rectangular grid of two parameters.
    RegimeGrid {
        #[arg(long)]
        p1: Option<Param>,
        /// `a,b,c`, `lin:lo:hi:n` or `log:lo:hi:n`.
        #[arg(long)]
        p1_values: Option<Grid>,
        #[arg(long)]
        p2: Option<Param>,
        #[arg(long)]
        p2_values: Option<Grid>,
        #[arg(long)]
        t_transient: Option<f64>,
        #[arg(long)]
        t_observe: Option<f64>,
    },
    /// Peak Fourier amplitude against noise level.
    Sr {
        #[arg(long)]
        sigmas: Option<Grid>,
        #[arg(long)]
        seeds: Option<usize>,
        #[command(flatten)]
        run: NoiseFlags,
    },
    /// Period mean and CV under noise, along one parameter.
    Periods {
        #[arg(long)]
        free: Option<Param>,
        #[arg(long)]
        values: Option<Grid>,
        #[arg(long)]
        n_traj: Option<usize>,
        /// `fixed` (up/down) or `cycle` (width share of the noise-free range).
        #[arg(long)]
        band: Option<Band>,
        #[arg(long)]
        up: Option<f64>,
        #[arg(long)]
        down: Option<f64>,
        #[arg(long)]
        width: Option<f64>,
        #[command(flatten)]
        run: NoiseFlags,
    },
    /// Scan exponents and rate constants; write the calibrated config.
    Calibrate {
        #[arg(long)]
        m: Option<Grid>,
        #[arg(long)]
        k_vn: Option<Numbers>,
        #[arg(long)]
        k_vcy: Option<Numbers>,
        #[arg(long)]
        a_cyto: Option<Numbers>,
        #[arg(long)]
        a_n: Option<Numbers>,
        #[arg(long)]
        min_ratio: Option<f64>,
    },
}

#[derive(Args)]
struct NoiseFlags {
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    stride: Option<usize>,
    /// Share of each trajectory dropped before analysis.
    #[arg(long)]
    transient: Option<f64>,
    #[arg(long)]
    x0: Option<Start>,
}

impl From<NoiseFlags> for NoiseArgs {
    fn from(f: NoiseFlags) -> Self {
        NoiseArgs { t_end: f.t_end, dt: f.dt, stride: f.stride, transient: f.transient, x0: f.x0 }
    }
}

impl Cmd {
    /// Keys of the command's config section.
    fn keys(&self) -> &'static [&'static str] {
        match self {
            Cmd::Simulate { .. } => &["system", "x0", "sample"],
            Cmd::Nullclines { .. } => &["total", "n_total", "eq_total"],
            Cmd::Diagram { .. } => &["kind", "free", "range", "free2", "range2", "max_points", "h_max"],
            Cmd::RegimeGrid { .. } => &["p1", "p1_values", "p2", "p2_values", "t_transient", "t_observe"],
            Cmd::Sr { .. } => &["sigmas", "seeds", "t_end", "dt", "stride", "transient", "x0"],
            Cmd::Periods { .. } => &[
                "free", "values", "n_traj", "band", "up", "down", "width", "t_end", "dt", "stride", "transient", "x0",
            ],
            Cmd::Calibrate { .. } => &["m", "k_vn", "k_vcy", "A_cyto", "A_n", "min_ratio"],
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Cmd::Simulate { .. } => "simulate",
            Cmd::Nullclines { .. } => "nullclines",
            Cmd::Diagram { .. } => "diagram",
            Cmd::RegimeGrid { .. } => "regime-grid",
            Cmd::Sr { .. } => "sr",
            Cmd::Periods { .. } => "periods",
            Cmd::Calibrate { .. } => "calibrate",
        }
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    command: &'a str,
    version: &'a str,
    config: String,
    model: ModelParams,
    solver: phosdyn::integrate::SolverConfig,
    seed: u64,
    outputs: Vec<String>,
    stats: Stats,
}

fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    let src = Sources::load(g.config.as_deref(), &g.set)?;
    let model = src.model()?;
    let solver = src.solver()?;
    let mut run_sec = src.section("run");
    let seed = run_sec.get("seed", g.seed, 0u64)?;
    let jobs = run_sec.get("jobs", g.jobs, 0usize)?;
    let run_kv = run_sec.finish()?;
    if jobs > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().context("starting worker pool")?;
    }

    let name = cli.cmd.name();
    let ctx = Ctx { model, solver: solver.clone(), seed };
    src.check_keys(name, cli.cmd.keys())?;
    let mut sec = src.section(name);
    let mut out = OutDir::create(&g.out.unwrap_or_else(|| PathBuf::from("out")))?;
    let stats = match cli.cmd {
        Cmd::Simulate { system, x0, sample } => simulate(&ctx, &mut sec, SimulateArgs { system, x0, sample }, &mut out),
        Cmd::Nullclines { total, n_total, eq_total } => {
            nullclines(&ctx, &mut sec, NullclineArgs { total, n_total, eq_total }, &mut out)
        }
        Cmd::Diagram { kind, free, range, free2, range2, max_points, h_max } => {
            diagram(&ctx, &mut sec, DiagramArgs { kind, free, range, free2, range2, max_points, h_max }, &mut out)
        }
        Cmd::RegimeGrid { p1, p1_values, p2, p2_values, t_transient, t_observe } => regime_grid(
            &ctx,
            &mut sec,
            RegimeArgs { p1, p1_values, p2, p2_values, t_transient, t_observe },
            &mut out,
        ),
        Cmd::Sr { sigmas, seeds, run } => sr(&ctx, &mut sec, SrArgs { sigmas, seeds, run: run.into() }, &mut out),
        Cmd::Periods { free, values, n_traj, band, up, down, width, run } => periods(
            &ctx,
            &mut sec,
            PeriodArgs { free, values, n_traj, band, up, down, width, run: run.into() },
            &mut out,
        ),
        Cmd::Calibrate { m, k_vn, k_vcy, a_cyto, a_n, min_ratio } => calibrate_cmd(
            &ctx,
            &mut sec,
            CalibrateArgs { m, k_vn, k_vcy, a_cyto, a_n, min_ratio },
            &mut out,
        ),
    }?;
    let cmd_kv = sec.finish()?;
    let config = resolved_text(name, &ctx.model, &solver, &[("run", run_kv), (name, cmd_kv)]);
    let meta = Metadata {
        command: name,
        version: env!("CARGO_PKG_VERSION"),
        config,
        model: ctx.model,
        solver,
        seed,
        outputs: out.written().to_vec(),
        stats,
    };
    out.write_json("metadata.json", &meta)?;
    eprintln!("{name}: wrote {} files to {}", out.written().len(), out.path().display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
