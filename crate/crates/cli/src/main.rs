//! `minsurf`: reproducible batch runs over the minsurf library.
//!
//! A run is a subcommand plus an optional TOML config; flags override the
//! config, and the merged config is echoed into every output.

mod commands;
mod config;
mod report;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use config::{Format, IndexOutputs, RunConfig, SurfaceSpec};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

/// Worker threads for the parallel parts (mesh integrals, quadrature).
const THREADS_ENV: &str = "MINSURF_THREADS";

#[derive(Parser)]
#[command(name = "minsurf", version, about = "Index bounds, spectral index and L²* forms for minimal surfaces")]
struct Cli {
    /// TOML run configuration; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// output path, default stdout
    #[arg(long, global = true)]
    out: Option<String>,
    /// tolerance override, e.g. --tol total_curvature=5e-3 (repeatable)
    #[arg(long, global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct SurfaceArgs {
    /// plane, catenoid, enneper, costa, or rational (config only)
    name: Option<String>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct TopologyArgs {
    #[arg(long)]
    g: Option<u32>,
    /// end multiplicities, comma separated
    #[arg(long, value_delimiter = ',')]
    d: Vec<u32>,
    #[arg(long)]
    one_sided: bool,
    #[command(flatten)]
    surface: SurfaceArgs,
}

#[derive(Subcommand)]
enum Cmd {
    /// End data, curvature decay and total curvature of a surface
    Surface(SurfaceArgs),
    /// Exact index bounds for a topology
    Bound(TopologyArgs),
    /// Total-curvature sandwich for a topology
    Sandwich(TopologyArgs),
    /// Topologies compatible with an index budget
    Enumerate {
        #[arg(long)]
        budget: Option<u32>,
        #[arg(long)]
        one_sided: bool,
        #[arg(long)]
        embedded: bool,
        /// require Σ(dⱼ+1) ≥ 4
        #[arg(long)]
        nonflat: bool,
        #[arg(long)]
        min_ends: Option<u32>,
        #[arg(long)]
        min_genus: Option<u32>,
        /// literature preset id (repeatable)
        #[arg(long)]
        preset: Vec<String>,
        /// literature exclusion id (repeatable)
        #[arg(long)]
        exclude: Vec<String>,
    },
    /// Morse index by exhaustion
    Index {
        #[command(flatten)]
        surface: SurfaceArgs,
        /// extrinsic radii, comma separated
        #[arg(long, value_delimiter = ',')]
        schedule: Vec<f64>,
        #[arg(long)]
        h0: Option<f64>,
        #[arg(long)]
        h_min: Option<f64>,
        /// eigenvalues reported per stage
        #[arg(long)]
        eigs: Option<usize>,
        /// write weighted eigenfunctions of the last stage as CSV
        #[arg(long)]
        eigenfunctions: Option<String>,
        #[arg(long)]
        eigenfunction_count: Option<usize>,
        /// write the last-stage mesh as JSON
        #[arg(long)]
        mesh: Option<String>,
    },
    /// Holomorphic basis, L²* Gram matrix and parity data
    Forms(SurfaceArgs),
    /// Parity dimensions, restricted counts, nodal domains and the
    /// feasibility replay on the Costa family
    CostaAudit {
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        zero_tol: Option<f64>,
    },
}

fn merge_surface(cfg: &mut RunConfig, s: &SurfaceArgs) {
    if let Some(name) = &s.name {
        cfg.surface = Some(SurfaceSpec::catalog(name, None, None));
    }
    if let Some(spec) = cfg.surface.as_mut() {
        spec.k = s.k.or(spec.k);
        spec.t = s.t.or(spec.t);
    }
}

fn merge_topology(cfg: &mut RunConfig, a: &TopologyArgs) {
    merge_surface(cfg, &a.surface);
    if let Some(t) = commands::topology_spec(a.g, &a.d, a.one_sided) {
        cfg.topology = Some(t);
    } else if let Some(t) = cfg.topology.as_mut() {
        t.genus = a.g.unwrap_or(t.genus);
        t.one_sided |= a.one_sided;
    }
}

fn run(cli: Cli) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    for kv in &cli.tol {
        cfg.tolerances.set(kv)?;
    }
    let name = match &cli.cmd {
        Cmd::Surface(_) => "surface",
        Cmd::Bound(_) => "bound",
        Cmd::Sandwich(_) => "sandwich",
        Cmd::Enumerate { .. } => "enumerate",
        Cmd::Index { .. } => "index",
        Cmd::Forms(_) => "forms",
        Cmd::CostaAudit { .. } => "costa-audit",
    };
    match &cli.cmd {
        Cmd::Surface(s) | Cmd::Forms(s) => merge_surface(&mut cfg, s),
        Cmd::Bound(a) | Cmd::Sandwich(a) => merge_topology(&mut cfg, a),
        Cmd::Enumerate { budget, one_sided, embedded, nonflat, min_ends, min_genus, preset, exclude } => {
            let mut e = cfg.enumerate.take().unwrap_or_default();
            e.budget = budget.unwrap_or(e.budget);
            e.one_sided |= one_sided;
            e.embedded |= embedded;
            e.nonflat |= nonflat;
            e.min_ends = min_ends.unwrap_or(e.min_ends);
            e.min_genus = min_genus.unwrap_or(e.min_genus);
            e.presets.extend(preset.iter().cloned());
            e.exclude.extend(exclude.iter().cloned());
            cfg.enumerate = Some(e);
        }
        Cmd::Index { surface, schedule, h0, h_min, eigs, eigenfunctions, eigenfunction_count, mesh } => {
            merge_surface(&mut cfg, surface);
            let mut s = cfg.schedule.take().unwrap_or_else(commands::default_schedule);
            if !schedule.is_empty() {
                s.radii = schedule.clone();
            }
            s.h0 = h0.unwrap_or(s.h0);
            s.h_min = h_min.unwrap_or(s.h_min);
            s.eigs_per_stage = eigs.unwrap_or(s.eigs_per_stage);
            cfg.schedule = Some(s);
            if eigenfunctions.is_some() || mesh.is_some() || eigenfunction_count.is_some() {
                let mut o = cfg.index.take().unwrap_or(IndexOutputs { eigenfunction_count: 3, ..Default::default() });
                o.eigenfunctions = eigenfunctions.clone().or(o.eigenfunctions);
                o.mesh = mesh.clone().or(o.mesh);
                o.eigenfunction_count = eigenfunction_count.unwrap_or(o.eigenfunction_count);
                cfg.index = Some(o);
            }
        }
        Cmd::CostaAudit { t, r, h, zero_tol } => {
            let mut a = cfg.audit.take().unwrap_or_default();
            a.t = t.unwrap_or(a.t);
            a.r = r.unwrap_or(a.r);
            a.h = h.unwrap_or(a.h);
            a.zero_tol = zero_tol.unwrap_or(a.zero_tol);
            cfg.audit = Some(a);
        }
    }

    let start = Instant::now();
    let result = match name {
        "surface" => commands::surface(&cfg),
        "bound" => commands::bound(&cfg),
        "sandwich" => commands::sandwich_cmd(&cfg),
        "enumerate" => commands::enumerate(&cfg),
        "index" => commands::index(&cfg),
        "forms" => commands::forms(&cfg),
        _ => commands::costa_audit(&cfg),
    };
    let outcome = result?;
    let text = report::render(name, &cfg, &outcome)?;
    report::emit(&text, cfg.out.as_deref())?;
    eprintln!("minsurf {name}: {:?} in {:.1} s", outcome.status(), start.elapsed().as_secs_f64());
    for c in outcome.checks.iter().filter(|c| !c.pass) {
        eprintln!("  failed: {} ({})", c.name, c.detail);
    }
    Ok(outcome.status().exit_code())
}

/// Exit status for a library failure: 3 for non-convergence, 2 for a
/// violated invariant, 1 for bad input.
fn error_code(e: &anyhow::Error) -> u8 {
    use minsurf::Error as E;
    match e.downcast_ref::<E>() {
        Some(me) if me.is_nonconvergence() => 3,
        Some(
            E::PeriodViolation { .. }
            | E::InconsistentMultiplicity { .. }
            | E::DegenerateBasis { .. }
            | E::NotEigenform(_)
            | E::SingularPivot { .. },
        ) => 2,
        _ => 1,
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().with_context(|| format!("{THREADS_ENV}={v}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}
