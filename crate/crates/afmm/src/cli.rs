//! Command-line interface: `generate`, `tree-stats`, `run`, `verify`,
//! `sweep`, and `model` subcommands with file-based input and output.
//!
//! Every subcommand is deterministic given its flags and seed; rerunning
//! writes byte-identical artifacts except for the reported wall time.
//! Process exit codes: 0 on success, 2 for parameter or input problems,
//! 3 when `verify` finds a violated bound or accuracy check, 1 for other
//! failures.

use crate::costmodel::{
    count_operations, cycle_breakdown, default_table, verify_complexity_bounds, CycleBreakdown,
};
use crate::engine::{direct_sum, relative_error, run_fmm, OperationCounts, RunOptions};
use crate::io;
use crate::kernel::Laplace;
use crate::optimizer::{
    self, fit_alpha_beta_from_samples, heuristic_cost, heuristic_optimum, heuristic_terms,
    HeuristicParams,
};
use crate::pointgen::{
    gamma_for_dimension, generate_cantor, generate_cantor_sampled, generate_singleton_stress,
    generate_standard, FractalKind, FractalSpec, IntensityRule, Placement, PointSet, StandardKind,
};
use crate::tree::{
    build_tree, classify_structure, max_points_at_depth, occupancy_profile, tree_stats, Tree,
    TreeConfig,
};
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "afmm",
    version,
    about = "Adaptive fast multipole benchmarks on fractal and standard point sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a point set and write it as x,y,z,sigma CSV.
    Generate(GenerateArgs),
    /// Build a tree and report its structural statistics as JSON.
    TreeStats(TreeStatsArgs),
    /// Evaluate potentials and report counts, modeled cycles, and timing.
    Run(RunArgs),
    /// Check structural bounds (and optionally accuracy) on a build.
    Verify(VerifyArgs),
    /// Evaluate modeled cycles over a (depth cap, threshold) grid.
    Sweep(SweepArgs),
    /// Evaluate or fit the uniform-grid cost model.
    Model(ModelArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Cantor,
    Uniform,
    Spiral,
    SingletonStress,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlacementArg {
    Center,
    RandomInLeaf,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntensityArg {
    ConstantOne,
    RandomUniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Laplace,
}

#[derive(Args)]
struct GenerateArgs {
    /// Point-set family.
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Removed middle fraction for Cantor sets, in (0, 1).
    #[arg(long, conflicts_with = "dimension")]
    gamma: Option<f64>,
    /// Target dimension for Cantor sets (resolved to the matching gamma).
    #[arg(long)]
    dimension: Option<f64>,
    /// Construction steps (Cantor level, or singleton-stress steps).
    #[arg(long)]
    level: Option<u32>,
    /// Subdivision dimension for Cantor sets (1, 2 or 3).
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Point count: required for uniform/spiral, switches Cantor sets to
    /// box sampling.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = PlacementArg::Center)]
    placement: PlacementArg,
    #[arg(long, value_enum, default_value_t = IntensityArg::ConstantOne)]
    intensity: IntensityArg,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    /// Input points CSV (x,y,z,sigma).
    #[arg(long)]
    points: PathBuf,
    /// Subdivision threshold: split cells holding more points than this.
    #[arg(long, default_value_t = 1)]
    t: usize,
    /// Depth cap; omit for a pure-threshold build.
    #[arg(long)]
    lmax: Option<u32>,
    /// Disable W/X lists (extended-tree mode: leaves are pushed to the cap).
    #[arg(long)]
    no_wx: bool,
}

#[derive(Args)]
struct TreeStatsArgs {
    #[command(flatten)]
    build: BuildArgs,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    build: BuildArgs,
    /// Expansion order per axis.
    #[arg(long, default_value_t = 4)]
    r: usize,
    #[arg(long, value_enum, default_value_t = KernelArg::Laplace)]
    kernel: KernelArg,
    /// Use the textbook per-level pipeline instead of singleton skipping.
    #[arg(long)]
    unmodified: bool,
    /// Share one cross-transfer matrix per offset across levels.
    #[arg(long)]
    fast_scaling: bool,
    /// Also evaluate the quadratic reference sum and report the error.
    #[arg(long)]
    oracle: bool,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    build: BuildArgs,
    #[arg(long, default_value_t = 4)]
    r: usize,
    /// Also compare against the quadratic reference sum.
    #[arg(long)]
    oracle: bool,
    /// Largest acceptable relative error for the oracle check (defaults by
    /// order: 3e-2 below order 4, 2e-3 below order 6, 1e-4 from order 6).
    #[arg(long)]
    max_error: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    /// Input points CSV (x,y,z,sigma).
    #[arg(long)]
    points: PathBuf,
    /// Depth caps, as `lo..hi[:step]` or a comma list.
    #[arg(long)]
    lmax: String,
    /// Thresholds, as `lo..hi[:step]` or a comma list.
    #[arg(long)]
    t: String,
    #[arg(long, default_value_t = 4)]
    r: usize,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ModelArgs {
    /// Direct-interaction unit cost (fitted from --fit-from when omitted).
    #[arg(long, conflicts_with = "fit_from")]
    alpha: Option<f64>,
    /// Cross-transfer unit cost (fitted from --fit-from when omitted).
    #[arg(long, conflicts_with = "fit_from")]
    beta: Option<f64>,
    /// Set dimension.
    #[arg(long)]
    d_h: f64,
    /// Point count.
    #[arg(long)]
    n: f64,
    /// Also evaluate the model cost at this depth.
    #[arg(long)]
    l: Option<u32>,
    /// Fit alpha and beta from a sweep CSV's t=1 column.
    #[arg(long)]
    fit_from: Option<PathBuf>,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse `lo..hi[:step]` (inclusive) or a comma-separated list.
fn parse_range(text: &str) -> Result<Vec<u64>> {
    let bad = |t: &str| Error::Parameter(format!("cannot parse range {t:?}"));
    let text = text.trim();
    if let Some((range, step)) = text
        .split_once("..")
        .map(|(lo, rest)| match rest.split_once(':') {
            Some((hi, step)) => ((lo, hi), Some(step)),
            None => ((lo, rest), None),
        })
    {
        let lo: u64 = range.0.trim().parse().map_err(|_| bad(text))?;
        let hi: u64 = range.1.trim().parse().map_err(|_| bad(text))?;
        let step: u64 = match step {
            Some(s) => s.trim().parse().map_err(|_| bad(text))?,
            None => 1,
        };
        if step == 0 || hi < lo {
            return Err(bad(text));
        }
        Ok((lo..=hi).step_by(step as usize).collect())
    } else {
        text.split(',')
            .map(|part| part.trim().parse::<u64>().map_err(|_| bad(text)))
            .collect()
    }
}

fn build_from(args: &BuildArgs) -> Result<(PointSet, Tree)> {
    let points = io::read_points_csv(&args.points)?;
    let config = TreeConfig {
        threshold: args.t,
        max_depth: args.lmax,
        dim: points.dim,
        enable_wx: !args.no_wx,
    };
    let tree = build_tree(&points, config)?;
    Ok((points, tree))
}

fn emit<T: serde::Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    match out {
        Some(path) => io::write_json(path, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let placement = match args.placement {
        PlacementArg::Center => Placement::Center,
        PlacementArg::RandomInLeaf => Placement::RandomInLeaf,
    };
    let intensity = match args.intensity {
        IntensityArg::ConstantOne => IntensityRule::ConstantOne,
        IntensityArg::RandomUniform => IntensityRule::RandomUniform,
    };
    let points = match args.kind {
        KindArg::Cantor => {
            let gamma = match (args.gamma, args.dimension) {
                (Some(g), None) => g,
                (None, Some(d)) => gamma_for_dimension(d, args.dim)?,
                _ => {
                    return Err(Error::Parameter(
                        "cantor needs exactly one of --gamma or --dimension".into(),
                    ))
                }
            };
            match args.n {
                Some(n) => {
                    generate_cantor_sampled(gamma, args.dim, n, args.seed, placement, intensity)?
                }
                None => {
                    let level = args.level.ok_or_else(|| {
                        Error::Parameter("cantor needs --level or --n".into())
                    })?;
                    let spec = FractalSpec {
                        kind: FractalKind::Cantor,
                        gamma,
                        level,
                        dim: args.dim,
                        seed: args.seed,
                        placement,
                        intensity,
                    };
                    generate_cantor(&spec)?
                }
            }
        }
        KindArg::Uniform | KindArg::Spiral => {
            let n = args
                .n
                .ok_or_else(|| Error::Parameter("uniform/spiral need --n".into()))?;
            let kind = if matches!(args.kind, KindArg::Uniform) {
                StandardKind::Uniform
            } else {
                StandardKind::Spiral
            };
            generate_standard(kind, n, args.seed)?
        }
        KindArg::SingletonStress => {
            let steps = args
                .level
                .ok_or_else(|| Error::Parameter("singleton-stress needs --level".into()))?;
            generate_singleton_stress(steps, args.seed)?
        }
    };
    io::write_points_csv(&args.out, &points)?;
    println!("wrote {} points to {}", points.len(), args.out.display());
    Ok(())
}

#[derive(serde::Serialize)]
struct TreeStatsOut {
    depth: u32,
    n_leaves: usize,
    s_lmax: u64,
    n_divided: usize,
    n_singletons: usize,
    occupancy: Vec<u64>,
    c_l: Vec<f64>,
}

fn cmd_tree_stats(args: &TreeStatsArgs) -> Result<()> {
    let (_, tree) = build_from(&args.build)?;
    let stats = tree_stats(&tree);
    let structure = classify_structure(&tree);
    let profile = occupancy_profile(&tree);
    let cap = args.build.lmax.unwrap_or_else(|| tree.depth());
    let out = TreeStatsOut {
        depth: stats.depth,
        n_leaves: stats.leaves,
        s_lmax: max_points_at_depth(&tree, cap),
        n_divided: structure.divided,
        n_singletons: structure.singletons,
        occupancy: profile.occupied,
        c_l: profile.c,
    };
    emit(&args.out, &out)
}

#[derive(serde::Serialize)]
struct RunOut {
    n: usize,
    r: usize,
    modified: bool,
    error_vs_oracle: Option<f64>,
    counts: OperationCounts,
    cycles: CycleBreakdown,
    cycles_total: f64,
    wall_time: f64,
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let (points, tree) = build_from(&args.build)?;
    let KernelArg::Laplace = args.kernel;
    let options = RunOptions {
        order: args.r,
        modified: !args.unmodified,
        fast_scaling: args.fast_scaling,
    };
    let result = run_fmm(&tree, &Laplace, &options)?;
    let error_vs_oracle = if args.oracle {
        let exact = direct_sum(&points.positions, &points.intensities, &Laplace)?;
        Some(relative_error(&result.potentials, &exact))
    } else {
        None
    };
    let table = default_table()?;
    let cycles = cycle_breakdown(&result.counts, &table, args.r, points.dim);
    let out = RunOut {
        n: points.len(),
        r: args.r,
        modified: result.modified,
        error_vs_oracle,
        counts: result.counts,
        cycles,
        cycles_total: cycles.total(),
        wall_time: result.wall_seconds,
    };
    emit(&args.out, &out)
}

fn default_error_bound(r: usize) -> f64 {
    if r >= 6 {
        1e-4
    } else if r >= 4 {
        2e-3
    } else {
        3e-2
    }
}

fn cmd_verify(args: &VerifyArgs) -> Result<()> {
    let (points, tree) = build_from(&args.build)?;
    let mut failures = Vec::new();

    let report = verify_complexity_bounds(&tree);
    if report.all_hold() {
        println!("ok: structural bounds (split identity, translation, charge, degree)");
    } else {
        failures.push(format!("structural bounds violated: {report:?}"));
    }

    let options = RunOptions { order: args.r, modified: true, fast_scaling: false };
    let result = run_fmm(&tree, &Laplace, &options)?;
    let predicted = count_operations(&tree, true);
    if predicted == result.counts {
        println!("ok: static operation counts match the engine");
    } else {
        failures.push(format!(
            "count mismatch: predicted {predicted:?}, measured {:?}",
            result.counts
        ));
    }

    if args.oracle {
        let exact = direct_sum(&points.positions, &points.intensities, &Laplace)?;
        let err = relative_error(&result.potentials, &exact);
        let bound = args.max_error.unwrap_or_else(|| default_error_bound(args.r));
        if err <= bound {
            println!("ok: relative error {err:.3e} within {bound:.1e}");
        } else {
            failures.push(format!("relative error {err:.3e} exceeds {bound:.1e}"));
        }
    }

    if failures.is_empty() {
        println!("all checks passed");
        Ok(())
    } else {
        Err(Error::Verification(failures.join("; ")))
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let points = io::read_points_csv(&args.points)?;
    let caps: Vec<u32> = parse_range(&args.lmax)?.into_iter().map(|v| v as u32).collect();
    let thresholds: Vec<usize> =
        parse_range(&args.t)?.into_iter().map(|v| v as usize).collect();
    let table = default_table()?;
    let sweep = optimizer::sweep(&points, &caps, &thresholds, args.r, &table)?;
    io::write_sweep_csv(&args.out, &sweep)?;
    let best = sweep.best();
    println!(
        "wrote {} cells to {}; best lmax={:?} t={} cycles={:.3e}",
        sweep.cells.len(),
        args.out.display(),
        best.lmax,
        best.t,
        best.total_cycles
    );
    Ok(())
}

#[derive(serde::Serialize)]
struct ModelOut {
    alpha: f64,
    beta: f64,
    d_h: f64,
    n: f64,
    fitted: bool,
    l_opt: f64,
    cost_opt: f64,
    evaluated_l: Option<u32>,
    cost_at_l: Option<f64>,
    near_term_at_l: Option<f64>,
    far_term_at_l: Option<f64>,
}

fn cmd_model(args: &ModelArgs) -> Result<()> {
    let (params, fitted) = match &args.fit_from {
        Some(path) => {
            let rows = io::read_sweep_csv(path)?;
            let mut samples: Vec<(u32, f64)> = rows
                .iter()
                .filter(|row| row.t == 1 && row.lmax.is_some())
                .map(|row| (row.lmax.unwrap(), row.cycles_p2p + row.cycles_m2l))
                .collect();
            samples.sort_unstable_by_key(|&(l, _)| l);
            samples.dedup_by_key(|&mut (l, _)| l);
            (fit_alpha_beta_from_samples(&samples, args.d_h, args.n)?, true)
        }
        None => {
            let (alpha, beta) = match (args.alpha, args.beta) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(Error::Parameter(
                        "model needs --alpha and --beta, or --fit-from".into(),
                    ))
                }
            };
            (HeuristicParams::new(alpha, beta, args.d_h, args.n)?, false)
        }
    };
    let (l_opt, cost_opt) = heuristic_optimum(&params);
    let (cost_at_l, terms) = match args.l {
        Some(l) => (
            Some(heuristic_cost(&params, l)),
            Some(heuristic_terms(&params, l as f64)),
        ),
        None => (None, None),
    };
    let out = ModelOut {
        alpha: params.alpha,
        beta: params.beta,
        d_h: params.d_h,
        n: params.n,
        fitted,
        l_opt,
        cost_opt,
        evaluated_l: args.l,
        cost_at_l,
        near_term_at_l: terms.map(|t| t.0),
        far_term_at_l: terms.map(|t| t.1),
    };
    emit(&args.out, &out)
}

fn dispatch(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(args) => generate(args),
        Command::TreeStats(args) => cmd_tree_stats(args),
        Command::Run(args) => cmd_run(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Model(args) => cmd_model(args),
    }
}

/// Parse arguments, run, and map errors to process exit codes.
pub fn run_cli() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
