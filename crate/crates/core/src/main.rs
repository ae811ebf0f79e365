//! Command-line front end: dispatches estimator runs from a configuration
//! file (with per-subcommand flag overrides), writes one CSV per estimator
//! into the output directory, and — for `run` — a `summary.txt` with one
//! `NAME value threshold PASS|FAIL` line per check.
//!
//! Exit codes: 0 success (FAIL summary lines are still results), 1 on an
//! estimator hard failure or a failed `verify` assertion, 2 on a
//! configuration error. Partial results are flushed before a nonzero exit.

use clap::{Args, Parser, Subcommand};
use phlab::config::{parse_config, ExperimentConfig, Task};
use phlab::dynamics::MapFamily;
use phlab::gluing::{specification_harness, SpecParams};
use phlab::leafwise::{bounded_expansion_fraction, unstable_entropy, GrowthParams};
use phlab::pressure::{nonexpansive_fraction, pressure, PressureParams, Region};
use phlab::reduce::line_fit;
use phlab::report::{num, render_summary, SummaryLine, Table};
use phlab::sampling::indexed_rng;
use phlab::thermo::{
    bind_potential, bowen_oscillation, central_exponent, central_partials, classify_from_sums,
    decompose_from_sums, equilibrium_measure, gap_check, EquilibriumParams, OscillationParams,
    Potential, SegmentClass, TrigTerm, CENTRAL_DEPTH,
};
use phlab::verify::run_verify;
use rand::Rng as _;
use rayon::prelude::*;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "phlab",
    version,
    about = "Numerical laboratory for entropy, pressure, and orbit gluing on torus maps"
)]
struct Cli {
    /// Configuration file: plain-text `key = value` with [section] headers.
    #[arg(long, value_name = "PATH", global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the configured one).
    #[arg(long, value_name = "U64", global = true)]
    seed: Option<u64>,
    /// Worker-thread count; defaults to all cores. Output is byte-identical
    /// at any setting.
    #[arg(long, value_name = "N", global = true)]
    workers: Option<usize>,
    /// Directory for CSV reports and summary.txt.
    #[arg(long, value_name = "DIR", global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Growth rate of (n,δ)-separated sets, zero weighting (topological entropy)
    Entropy(PressureArgs),
    /// Growth rate of weighted (n,δ)-separated sums (topological pressure)
    Pressure(PressureArgs),
    /// Volume growth along expanding leaves, both time directions
    Uentropy(UentropyArgs),
    /// Finite-time center exponents at random points
    Lyapunov(LyapunovArgs),
    /// Head/tail splits of orbit segments against the center growth threshold
    Decompose(DecomposeArgs),
    /// Glue tuples of orbit blocks into single shadowing orbits
    Spec(SpecArgs),
    /// Entropy gap between the two time directions vs. potential oscillation
    Gapcheck(GapcheckArgs),
    /// Weighted empirical measure on a separated set
    Equilibrium(EquilibriumArgs),
    /// Fraction of points whose center-unstable area growth stays bounded
    Bset(BsetArgs),
    /// Exact self-check suite; exits 1 listing any failed assertion
    Verify(VerifyArgs),
    /// Execute the configured task list and write summary.txt
    Run,
}

#[derive(Args)]
struct PressureArgs {
    /// Separation scale of the orbit-segment metric.
    #[arg(long)]
    delta: Option<f64>,
    /// Probe scale for the within-ball potential supremum (0 disables).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Shortest segment length in the fit.
    #[arg(long)]
    n_min: Option<usize>,
    /// Longest segment length in the fit.
    #[arg(long)]
    n_max: Option<usize>,
    /// Candidate budget per segment length.
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Args)]
struct UentropyArgs {
    /// Initial leaf radius.
    #[arg(long)]
    radius: Option<f64>,
    /// Polyline mesh width.
    #[arg(long)]
    h_mesh: Option<f64>,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    /// Vertex budget before truncation.
    #[arg(long)]
    max_points: Option<usize>,
}

#[derive(Args)]
struct LyapunovArgs {
    /// Segment length of each exponent estimate.
    #[arg(long)]
    n: Option<usize>,
    /// Number of random base points.
    #[arg(long)]
    samples: Option<usize>,
    /// Splitting-estimate depth.
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Args)]
struct DecomposeArgs {
    /// Center growth threshold.
    #[arg(long)]
    r: Option<f64>,
    /// Segment length.
    #[arg(long)]
    n: Option<usize>,
    /// Number of random segments per direction.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct SpecArgs {
    /// Shadowing scale.
    #[arg(long)]
    delta: Option<f64>,
    /// Number of seeded tuples.
    #[arg(long)]
    tuples: Option<usize>,
    #[arg(long)]
    blocks_min: Option<usize>,
    #[arg(long)]
    blocks_max: Option<usize>,
    /// Length of every block.
    #[arg(long)]
    block_len: Option<usize>,
    /// Glue on the inverse of the configured map.
    #[arg(long)]
    on_inverse: Option<bool>,
}

#[derive(Args)]
struct GapcheckArgs {
    /// Grid resolution per axis for the potential range scan.
    #[arg(long)]
    grid: Option<usize>,
    /// Splitting-estimate depth.
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Args)]
struct EquilibriumArgs {
    /// Segment length.
    #[arg(long)]
    n: Option<usize>,
    /// Separation scale.
    #[arg(long)]
    delta: Option<f64>,
    /// Candidate budget.
    #[arg(long)]
    budget: Option<usize>,
    /// Cube-partition resolution per axis.
    #[arg(long)]
    bins: Option<usize>,
    /// Restrict candidates to prefix-class segments at this threshold.
    #[arg(long)]
    restrict: Option<f64>,
    /// Constant added to the potential for the pressure shift check.
    #[arg(long)]
    shift: Option<f64>,
}

#[derive(Args)]
struct BsetArgs {
    /// Area-growth bound along the center-unstable plane.
    #[arg(long)]
    bound: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Perturb the first spectral fixture (negative control).
    #[arg(long, hide = true)]
    tamper: bool,
}

/// A failure with its process exit code: 1 estimator, 2 configuration.
struct Failure {
    code: u8,
    msg: String,
}

fn config_failure(msg: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        msg: msg.into(),
    }
}

fn hard_failure(msg: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        msg: msg.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| config_failure(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text).map_err(|e| config_failure(e.to_string()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(config_failure("--workers must be at least 1"));
        }
        // ignore the error if a pool already exists (only possible in-process)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    fs::create_dir_all(&cli.out)
        .map_err(|e| hard_failure(format!("cannot create {}: {e}", cli.out.display())))?;

    match &cli.command {
        Command::Entropy(a) => {
            apply_pressure_args(&mut cfg, a);
            finish_single(&cli.out, task_pressure(&cfg, true))
        }
        Command::Pressure(a) => {
            apply_pressure_args(&mut cfg, a);
            finish_single(&cli.out, task_pressure(&cfg, false))
        }
        Command::Uentropy(a) => {
            let u = &mut cfg.uentropy;
            set(&mut u.radius, a.radius);
            set(&mut u.h_mesh, a.h_mesh);
            set(&mut u.n_min, a.n_min);
            set(&mut u.n_max, a.n_max);
            set(&mut u.max_points, a.max_points);
            finish_single(&cli.out, task_uentropy(&cfg))
        }
        Command::Lyapunov(a) => {
            let l = &mut cfg.lyapunov;
            set(&mut l.n, a.n);
            set(&mut l.samples, a.samples);
            set(&mut l.depth, a.depth);
            finish_single(&cli.out, task_lyapunov(&cfg))
        }
        Command::Decompose(a) => {
            let d = &mut cfg.decompose;
            set(&mut d.r, a.r);
            set(&mut d.n, a.n);
            set(&mut d.samples, a.samples);
            finish_single(&cli.out, task_decompose(&cfg))
        }
        Command::Spec(a) => {
            let s = &mut cfg.spec;
            set(&mut s.delta, a.delta);
            set(&mut s.tuples, a.tuples);
            set(&mut s.blocks_min, a.blocks_min);
            set(&mut s.blocks_max, a.blocks_max);
            set(&mut s.block_len, a.block_len);
            set(&mut s.on_inverse, a.on_inverse);
            finish_single(&cli.out, task_spec(&cfg))
        }
        Command::Gapcheck(a) => {
            let g = &mut cfg.gapcheck;
            set(&mut g.grid, a.grid);
            set(&mut g.depth, a.depth);
            finish_single(&cli.out, task_gapcheck(&cfg))
        }
        Command::Equilibrium(a) => {
            let q = &mut cfg.equilibrium;
            set(&mut q.n, a.n);
            set(&mut q.delta, a.delta);
            set(&mut q.budget, a.budget);
            set(&mut q.bins, a.bins);
            if a.restrict.is_some() {
                q.restrict = a.restrict;
            }
            set(&mut q.shift, a.shift);
            finish_single(&cli.out, task_equilibrium(&cfg))
        }
        Command::Bset(a) => {
            let b = &mut cfg.bset;
            set(&mut b.bound, a.bound);
            set(&mut b.samples, a.samples);
            finish_single(&cli.out, task_bset(&cfg))
        }
        Command::Verify(a) => cmd_verify(&cli.out, &cfg, a.tamper),
        Command::Run => cmd_run(&cli.out, &cfg),
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn apply_pressure_args(cfg: &mut ExperimentConfig, a: &PressureArgs) {
    let p = &mut cfg.pressure;
    set(&mut p.delta, a.delta);
    set(&mut p.epsilon, a.epsilon);
    set(&mut p.n_min, a.n_min);
    set(&mut p.n_max, a.n_max);
    set(&mut p.budget, a.budget);
}

fn write_report(dir: &Path, name: &str, content: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, content)
        .map_err(|e| hard_failure(format!("cannot write {}: {e}", path.display())))
}

/// What one task produces: summary lines and named CSV files.
struct TaskOutput {
    lines: Vec<SummaryLine>,
    files: Vec<(&'static str, String)>,
}

/// Standalone subcommand epilogue: write the CSVs, print the lines.
fn finish_single(out: &Path, result: Result<TaskOutput, String>) -> Result<(), Failure> {
    let output = result.map_err(hard_failure)?;
    for (name, content) in &output.files {
        write_report(out, name, content)?;
    }
    for line in &output.lines {
        println!("{line}");
    }
    Ok(())
}

fn cmd_verify(out: &Path, cfg: &ExperimentConfig, tamper: bool) -> Result<(), Failure> {
    let result = run_verify(cfg.seed, tamper);
    for (name, content) in &result.tables {
        write_report(out, name, content)?;
    }
    let failed: Vec<_> = result.checks.iter().filter(|c| !c.pass()).collect();
    for c in &failed {
        println!("FAIL {} expected {} actual {}", c.name, c.expected, c.actual);
    }
    if failed.is_empty() {
        println!("ok {} checks", result.checks.len());
        Ok(())
    } else {
        Err(hard_failure(format!(
            "{} of {} assertions failed",
            failed.len(),
            result.checks.len()
        )))
    }
}

fn cmd_run(out: &Path, cfg: &ExperimentConfig) -> Result<(), Failure> {
    let mut lines: Vec<SummaryLine> = Vec::new();
    for task in &cfg.tasks {
        let result = match task {
            Task::Entropy => task_pressure(cfg, true),
            Task::Pressure => task_pressure(cfg, false),
            Task::Uentropy => task_uentropy(cfg),
            Task::Lyapunov => task_lyapunov(cfg),
            Task::Decompose => task_decompose(cfg),
            Task::Spec => task_spec(cfg),
            Task::Gapcheck => task_gapcheck(cfg),
            Task::Equilibrium => task_equilibrium(cfg),
            Task::Expansivity => task_expansivity(cfg),
            Task::Oscillation => task_oscillation(cfg),
            Task::Bset => task_bset(cfg),
            Task::Sweep => task_sweep(cfg),
        };
        match result {
            Ok(output) => {
                for (name, content) in &output.files {
                    write_report(out, name, content)?;
                }
                lines.extend(output.lines);
            }
            Err(msg) => {
                // flush what we have before reporting the hard failure
                write_report(out, "summary.txt", &render_summary(&lines))?;
                return Err(hard_failure(format!("task {}: {msg}", task.as_str())));
            }
        }
    }
    write_report(out, "summary.txt", &render_summary(&lines))?;
    for line in &lines {
        println!("{line}");
    }
    Ok(())
}

// --- tasks ------------------------------------------------------------------

fn task_pressure(cfg: &ExperimentConfig, zero_potential: bool) -> Result<TaskOutput, String> {
    let map = cfg.map.build().map_err(|e| e.to_string())?;
    let p = &cfg.pressure;
    let params = PressureParams {
        delta: p.delta,
        epsilon: p.epsilon,
        n_min: p.n_min,
        n_max: p.n_max,
        budget: p.budget,
        seed: cfg.seed,
    };
    let est = if zero_potential {
        pressure(&map, &Region::FullTorus, &|_x: [f64; 3]| 0.0, &params)
    } else {
        let pot = cfg.potential.build();
        let field = bind_potential(&map, &pot, CENTRAL_DEPTH).map_err(|e| e.to_string())?;
        pressure(&map, &Region::FullTorus, &|x| field.eval(x), &params)
    }
    .map_err(|e| e.to_string())?;
    let mut t = Table::new(&["n", "log_lambda", "set_size"]);
    for row in &est.rows {
        t.push(vec![
            row.n.to_string(),
            num(row.log_lambda),
            row.set_size.to_string(),
        ]);
    }
    let (value_name, resid_name, file, thr) = if zero_potential {
        ("h_top", "h_top_residual", "entropy.csv", cfg.thresholds.h_top)
    } else {
        (
            "pressure",
            "pressure_residual",
            "pressure.csv",
            cfg.thresholds.pressure,
        )
    };
    Ok(TaskOutput {
        lines: vec![
            SummaryLine::new(value_name, est.slope, thr),
            SummaryLine::new(resid_name, est.max_residual, cfg.thresholds.residual),
        ],
        files: vec![(file, t.render())],
    })
}

fn task_uentropy(cfg: &ExperimentConfig) -> Result<TaskOutput, String> {
    let map = cfg.map.build().map_err(|e| e.to_string())?;
    let u = &cfg.uentropy;
    let gp = GrowthParams {
        radius: u.radius,
        h_mesh: u.h_mesh,
        n_min: u.n_min,
        n_max: u.n_max,
        max_points: u.max_points,
    };
    let forward = unstable_entropy(&map, u.center, &gp).map_err(|e| e.to_string())?;
    let inverse = unstable_entropy(&map.reversed(), u.center, &gp).map_err(|e| e.to_string())?;
    let mut t = Table::new(&["direction", "n", "log_length"]);
    for (dir, growth) in [("forward", &forward), ("inverse", &inverse)] {
        for row in &growth.rows {
            t.push(vec![dir.to_string(), row.n.to_string(), num(row.log_length)]);
        }
    }
    Ok(TaskOutput {
        lines: vec![
            SummaryLine::new("h_unstable", forward.slope, cfg.thresholds.h_unstable),
            SummaryLine::new("h_stable", inverse.slope, cfg.thresholds.h_stable),
        ],
        files: vec![("uentropy.csv", t.render())],
    })
}

fn task_lyapunov(cfg: &ExperimentConfig) -> Result<TaskOutput, String> {
    let map = cfg.map.build().map_err(|e| e.to_string())?;
    let l = &cfg.lyapunov;
    if l.samples == 0 {
        return Err("need at least one sample".to_string());
    }
    let exps: Vec<f64> = (0..l.samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = indexed_rng(cfg.seed, "lyapunov-samples", i);
            let x: [f64; 3] = std::array::from_fn(|_| rng.gen::<f64>());
            central_exponent(&map, x, l.n, l.depth)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let mut t = Table::new(&["sample", "exponent"]);
    for (i, e) in exps.iter().enumerate() {
        t.push(vec![i.to_string(), num(*e)]);
    }
    let mean = exps.iter().sum::<f64>() / exps.len() as f64;
    Ok(TaskOutput {
        lines: vec![SummaryLine::new(
            "central_exponent",
            mean,
            cfg.thresholds.central_exponent,
        )],
        files: vec![("lyapunov.csv", t.render())],
    })
}

fn class_name(c: SegmentClass) -> &'static str {
    match c {
        SegmentClass::Prefix => "prefix",
        SegmentClass::Core => "core",
        SegmentClass::Both => "both",
        SegmentClass::Neither => "neither",
    }
}

fn task_decompose(cfg: &ExperimentConfig) -> Result<TaskOutput, String> {
    let map = cfg.map.build().map_err(|e| e.to_string())?;
    let d = &cfg.decompose;
    if d.samples == 0 {
        return Err("need at least one segment".to_string());
    }
    let mut t = Table::new(&["direction", "sample", "n", "p_hat", "g_hat", "class"]);
    let mut fractions = [0.0f64; 2];
    for (which, dir) in ["forward", "inverse"].into_iter().enumerate() {
        let m = if which == 0 { map.clone() } else { map.reversed() };
        let splits: Vec<(usize, usize, SegmentClass)> = (0..d.samples as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = indexed_rng(cfg.seed, "decompose-samples", i);
                let x: [f64; 3] = std::array::from_fn(|_| rng.gen::<f64>());
                let partials = central_partials(&m, x, d.n, CENTRAL_DEPTH)?;
                let split = decompose_from_sums(&partials, d.r);
                Ok((split.p_hat, split.g_hat, classify_from_sums(&partials, d.r)))
            })
            .collect::<Result<Vec<_>, phlab::dynamics::DynError>>()
            .map_err(|e| e.to_string())?;
        let hit = splits
            .iter()
            .filter(|(p, g, _)| if which == 0 { *g == 0 } else { *p == 0 })
            .count();
        fractions[which] = hit as f64 / d.samples as f64;
        for (i, (p, g, c)) in splits.iter().enumerate() {
            t.push(vec![
                dir.to_string(),
                i.to_string(),
                d.n.to_string(),
                p.to_string(),
                g.to_string(),
                class_name(*c).to_string(),
            ]);
        }
    }
    Ok(TaskOutput {
        lines: vec![
            SummaryLine::new(
                "prefix_fraction_forward",
                fractions[0],
                cfg.thresholds.prefix_fraction,
            ),
            SummaryLine::new(
                "core_fraction_inverse",
                fractions[1],
                cfg.thresholds.core_fraction,
            ),
        ],
        files: vec![("decompose.csv", t.render())],
    })
}

fn task_spec(cfg: &ExperimentConfig) -> Result<TaskOutput, String> {
    let base = cfg.map.build().map_err(|e| e.to_string())?;
    let s = &cfg.spec;
    let map = if s.on_inverse { base.reversed() } else { base };
    let report = specification_harness(
        &map,
        &SpecParams {
            delta: s.delta,
            tuples: s.tuples,
            blocks_min: s.blocks_min,
            blocks_max: s.blocks_max,
            block_len: s.block_len,
            seed: cfg.seed,
        },
    )
    .map_err(|e| e.to_string())?;
    let mut t = Table::new(&["tuple_id", "blocks", "success", "max_block_distance", "M_u"]);
    for row in &report.rows {
        t.push(vec![
            row.tuple_id.to_string(),
            row.blocks.to_string(),
            row.verified.to_string(),
            num(row.max_block_distance),
            row.transition.to_string(),
        ]);
    }
    let rate = report.successes as f64 / report.rows.len().max(1) as f64;
    Ok(TaskOutput {
        lines: vec![
            SummaryLine::new("spec_success", rate, cfg.thresholds.spec_success),
            SummaryLine::new("spec_transition", report.constants.transition as f64, None),
        ],
        files: vec![("spec.csv", t.render())],
    })
}

fn task_gapcheck(cfg: &ExperimentConfig) -> Result<TaskOutput, String> {
    let map = cfg.map.build().map_err(|e| e.to_string())?;
    let u = &cfg.uentropy;
    let g = &cfg.gapcheck;
    let pot = cfg.potential.build();
    let gp = GrowthParams {
        radius: u.radius,
        h_mesh: u.h_mesh,
        n_min: u.n_min,
        n_max: u.n_max,
        max_points: u.max_points,
    };
    let h_u = unstable_entropy(&map, u.center, &gp)
        .map_err(|e| e.to_string())?
        .slope;
    let h_s = unstable_entropy(&map.reversed(), u.center, &gp)
        .map_err(|e| e.to_string())?
        .slope;
    let forward = gap_check(&map, &pot, h_u, h_s, g.grid, g.depth).map_err(|e| e.to_string())?;
    let inverse =
        gap_check(&map.reversed(), &pot, h_s, h_u, g.grid, g.depth).map_err(|e| e.to_string())?;
    let mut t = Table::new(&["quantity", "value"]);
    for (name, v) in [
        ("h_unstable", h_u),
        ("h_stable", h_s),
        ("oscillation", forward.oscillation),
        ("margin_forward", forward.margin),
        ("margin_inverse", inverse.margin),
    ] {
        t.push(vec![name.to_string(), num(v)]);
    }
    Ok(TaskOutput {
        lines: vec![
            SummaryLine::new("gap_margin_forward", forward.margin, cfg.thresholds.gap_forward),
            SummaryLine::new("gap_margin_inverse", inverse.margin, cfg.thresholds.gap_inverse),
        ],
        files: vec![("gapcheck.csv", t.render())],
    })
}

fn task_equilibrium(cfg: &ExperimentConfig) -> Result<TaskOutput, String> {
    let map = cfg.map.build().map_err(|e| e.to_string())?;
    let q = &cfg.equilibrium;
    if q.bins == 0 {
        return Err("need at least one bin per axis".to_string());
    }
    let pot = cfg.potential.build();
    let measure = equilibrium_measure(
        &map,
        &pot,
        &EquilibriumParams {
            n: q.n,
            delta: q.delta,
            restrict_r: q.restrict,
            budget: q.budget,
            seed: cfg.seed,
        },
    )
    .map_err(|e| e.to_string())?;
    let masses = measure.bin_masses(q.bins);
    let mut t = Table::new(&["i", "j", "k", "mass"]);
    for (idx, mass) in masses.iter().enumerate() {
        let k = idx % q.bins;
        let j = (idx / q.bins) % q.bins;
        let i = idx / (q.bins * q.bins);
        t.push(vec![i.to_string(), j.to_string(), k.to_string(), num(*mass)]);
    }
    // the pressure estimator shares its separated set between potentials,
    // so adding a constant must shift the fitted slope by exactly that
    // constant up to fit round-off
    let field = bind_potential(&map, &pot, CENTRAL_DEPTH).map_err(|e| e.to_string())?;
    let sp = PressureParams {
        delta: 0.3,
        epsilon: 0.0,
        n_min: 2,
        n_max: 4,
        budget: 2000,
        seed: cfg.seed,
    };
    let base = pressure(&map, &Region::FullTorus, &|x| field.eval(x), &sp)
        .map_err(|e| e.to_string())?;
    let lifted = pressure(&map, &Region::FullTorus, &|x| field.eval(x) + q.shift, &sp)
        .map_err(|e| e.to_string())?;
    let shift_err = (lifted.slope - base.slope - q.shift).abs();
    Ok(TaskOutput {
        lines: vec![
            SummaryLine::new(
                "equilibrium_discrepancy",
                measure.max_bin_discrepancy(q.bins),
                cfg.thresholds.discrepancy,
            ),
            SummaryLine::new("pressure_shift_error", shift_err, cfg.thresholds.shift_law),
        ],
        files: vec![("equilibrium.csv", t.render())],
    })
}

fn task_expansivity(cfg: &ExperimentConfig) -> Result<TaskOutput, String> {
    let map = cfg.map.build().map_err(|e| e.to_string())?;
    let x = &cfg.expansivity;
    let fraction = nonexpansive_fraction(&map, x.epsilon, x.horizon, x.samples, cfg.seed);
    let mut t = Table::new(&["epsilon", "horizon", "samples", "fraction"]);
    t.push(vec![
        num(x.epsilon),
        x.horizon.to_string(),
        x.samples.to_string(),
        num(fraction),
    ]);
    Ok(TaskOutput {
        lines: vec![SummaryLine::new(
            "nonexpansive_fraction",
            fraction,
            cfg.thresholds.nonexpansive,
        )],
        files: vec![("expansivity.csv", t.render())],
    })
}

fn task_oscillation(cfg: &ExperimentConfig) -> Result<TaskOutput, String> {
    let base = cfg.map.build().map_err(|e| e.to_string())?;
    let o = &cfg.oscillation;
    if o.segments == 0 || o.lengths.is_empty() {
        return Err("need at least one segment and one length".to_string());
    }
    let map = if o.on_inverse { base.reversed() } else { base };
    let pot = if o.amp != 0.0 {
        Potential::trig(vec![TrigTerm {
            amp: o.amp,
            freq: o.freq,
            phase: o.phase,
        }])
    } else {
        cfg.potential.build()
    };
    let params = OscillationParams {
        epsilon: o.epsilon,
        probes: o.probes,
        r: o.r,
        big_c: o.contraction,
        seed: cfg.seed,
    };
    let mut t = Table::new(&["segment", "n", "oscillation", "bound", "precision_limited"]);
    let mut ns = Vec::new();
    let mut peaks = Vec::new();
    let mut worst_ratio = 0.0f64;
    for &n in &o.lengths {
        let reports = (0..o.segments as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = indexed_rng(cfg.seed, "oscillation-starts", i);
                let x: [f64; 3] = std::array::from_fn(|_| rng.gen::<f64>());
                bowen_oscillation(&map, &pot, x, n, &params)
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let mut peak = 0.0f64;
        for (i, r) in reports.iter().enumerate() {
            t.push(vec![
                i.to_string(),
                n.to_string(),
                num(r.max_oscillation),
                num(r.bound),
                r.precision_limited.to_string(),
            ]);
            peak = peak.max(r.max_oscillation);
            if r.bound > 0.0 {
                worst_ratio = worst_ratio.max(r.max_oscillation / r.bound);
            }
        }
        ns.push(n as f64);
        peaks.push(peak);
    }
    let growth = line_fit(&ns, &peaks).map_or(0.0, |fit| fit.slope);
    Ok(TaskOutput {
        lines: vec![
            SummaryLine::new(
                "oscillation_ratio",
                worst_ratio,
                cfg.thresholds.oscillation_ratio,
            ),
            SummaryLine::new(
                "oscillation_growth",
                growth,
                cfg.thresholds.oscillation_growth,
            ),
        ],
        files: vec![("oscillation.csv", t.render())],
    })
}

fn task_bset(cfg: &ExperimentConfig) -> Result<TaskOutput, String> {
    let map = cfg.map.build().map_err(|e| e.to_string())?;
    let b = &cfg.bset;
    let fraction =
        bounded_expansion_fraction(&map, b.bound, b.samples, cfg.seed).map_err(|e| e.to_string())?;
    let mut t = Table::new(&["bound", "samples", "fraction"]);
    t.push(vec![num(b.bound), b.samples.to_string(), num(fraction)]);
    Ok(TaskOutput {
        lines: vec![SummaryLine::new(
            "bset_fraction",
            fraction,
            cfg.thresholds.bset_fraction,
        )],
        files: vec![("bset.csv", t.render())],
    })
}

fn task_sweep(cfg: &ExperimentConfig) -> Result<TaskOutput, String> {
    let sw = &cfg.sweep;
    let u = &cfg.uentropy;
    let g = &cfg.gapcheck;
    let pot = cfg.potential.build();
    let gp = GrowthParams {
        radius: u.radius,
        h_mesh: u.h_mesh,
        n_min: u.n_min,
        n_max: u.n_max,
        max_points: u.max_points,
    };
    let mut t = Table::new(&["theta", "h_unstable", "h_stable", "b_fraction", "gap_margin"]);
    let mut lines = Vec::new();
    for &theta in &sw.thetas {
        let mut spec = cfg.map.clone();
        spec.family = MapFamily::Mane;
        spec.theta = theta;
        let map = spec
            .build()
            .map_err(|e| format!("theta = {theta}: {e}"))?;
        let h_u = unstable_entropy(&map, u.center, &gp)
            .map_err(|e| e.to_string())?
            .slope;
        let h_s = unstable_entropy(&map.reversed(), u.center, &gp)
            .map_err(|e| e.to_string())?
            .slope;
        let b_fraction = bounded_expansion_fraction(&map, sw.bound, cfg.bset.samples, cfg.seed)
            .map_err(|e| e.to_string())?;
        let margin = gap_check(&map, &pot, h_u, h_s, g.grid, g.depth)
            .map_err(|e| e.to_string())?
            .margin;
        t.push(vec![num(theta), num(h_u), num(h_s), num(b_fraction), num(margin)]);
        lines.push(SummaryLine::new(
            format!("sweep_margin_{}", num(theta)),
            margin,
            None,
        ));
        lines.push(SummaryLine::new(
            format!("sweep_bset_{}", num(theta)),
            b_fraction,
            None,
        ));
    }
    Ok(TaskOutput {
        lines,
        files: vec![("sweep.csv", t.render())],
    })
}
