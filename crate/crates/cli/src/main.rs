use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use bqpcut::bounds::{projected_upper_bound, shor_bounds, strengthened_bounds, ProjectedBound};
use bqpcut::io::generate::{build_k_cluster, gen_rgi, gen_rgi_unchecked, random_cbqp, random_graph};
use bqpcut::io::{bench_run, export_maxcut, read_instance, write_instance, Format, RgiFamily, RgiSpec, SuiteSpec};
use bqpcut::maxcut::{build_q, to_maxcut};
use bqpcut::par::{self, Exec};
use bqpcut::pipeline::{compare_penalties, solve, ModeChoice, Outcome, PipelineConfig};
use bqpcut::{Bqp01Instance, SolutionStatus};
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_TIME_LIMIT: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_SOFTWARE: u8 = 70;

/// Binary quadratic programs with linear equality constraints, solved as
/// max-cut.
///
/// Worker threads default to the number of cores; set BQPCUT_WORKERS to
/// override.
#[derive(Parser)]
#[command(name = "bqpcut", version)]
struct Cli {
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance file (native text, or JSON by extension).
    Solve(SolveArgs),
    /// Write the penalized max-cut graph of an instance as an edge list.
    Transform(TransformArgs),
    /// Print the bounds the penalty parameters are derived from.
    Bounds {
        file: PathBuf,
    },
    /// Generate an instance.
    #[command(subcommand)]
    Generate(GenerateCommand),
    /// Run a benchmark suite and write CSV tables.
    Bench {
        suite: PathBuf,
        /// Output directory [default: <suite stem>-results next to the suite].
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Las,
    Cli,
    Gw,
    Auto,
}

impl From<Mode> for ModeChoice {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Las => ModeChoice::Las,
            Mode::Cli => ModeChoice::Cli,
            Mode::Gw => ModeChoice::Gw,
            Mode::Auto => ModeChoice::Auto,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    mode: Mode,
    /// Penalty margin ε [default: 1 for integer objectives].
    #[arg(long)]
    epsilon: Option<f64>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Return a point of least constraint violation instead of declaring
    /// infeasibility.
    #[arg(long)]
    least_violation: bool,
    /// Verify the result by enumeration (small n only).
    #[arg(long)]
    crosscheck: bool,
    /// Print the full outcome as JSON.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TransformArgs {
    file: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Scale weights by a power of two so that they are integers.
    #[arg(long)]
    scale_int: bool,
    /// Which (ρ, σ) construction to use; `auto` means `gw`.
    #[arg(long, value_enum, default_value = "gw")]
    mode: Mode,
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    One,
    Two,
}

#[derive(Args)]
struct Output {
    /// Destination file; `.json` selects JSON. Prints to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenerateCommand {
    /// Random integer instance.
    Rgi {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Interval for Â entries, as LO:HI.
        #[arg(long, value_parser = parse_interval)]
        a: (i64, i64),
        /// Interval for F̂ entries, as LO:HI.
        #[arg(long, value_parser = parse_interval)]
        f: (i64, i64),
        /// Right-hand side value (0 for family one).
        #[arg(long, default_value_t = 0)]
        b_v: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Accept intervals outside the family's recipe.
        #[arg(long)]
        unchecked: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Densest k-subgraph of a random graph.
    Kcluster {
        #[arg(long)]
        n: usize,
        /// Edge probability in percent.
        #[arg(long)]
        percent: u8,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Random cardinality-constrained quadratic problem.
    Cbqp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Entries are drawn from [−range, range].
        #[arg(long, default_value_t = 100)]
        range: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

fn parse_interval(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let num = |t: &str| t.trim().parse::<i64>().map_err(|e| format!("{t:?}: {e}"));
    Ok((num(lo)?, num(hi)?))
}

/// Marks errors that are the caller's fault rather than the data's.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn exit_code_for(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return EXIT_USAGE;
    }
    match e.downcast_ref::<bqpcut::Error>() {
        Some(bqpcut::Error::Sdp(_) | bqpcut::Error::ParameterInvalid(_)) => EXIT_SOFTWARE,
        _ => EXIT_DATA,
    }
}

fn load(path: &Path) -> anyhow::Result<Bqp01Instance> {
    read_instance(path, Format::from_path(path)).with_context(|| format!("reading {}", path.display()))
}

fn exec_of(cli: &Cli) -> Exec {
    if cli.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

fn cmd_solve(a: &SolveArgs, exec: Exec) -> anyhow::Result<u8> {
    let p = load(&a.file)?;
    let mut cfg = PipelineConfig {
        penalty_mode: a.mode.into(),
        epsilon: a.epsilon,
        least_violation: a.least_violation,
        brute_force_crosscheck: a.crosscheck,
        ..Default::default()
    }
    .with_exec(exec);
    if let Some(t) = a.time_limit {
        if t.is_nan() || t < 0.0 {
            return Err(Usage(format!("--time-limit must be nonnegative, got {t}")).into());
        }
        cfg.solver.time_limit = Some(t);
    }
    if let Some(s) = a.seed {
        cfg.solver.seed = s;
    }
    if matches!(a.epsilon, Some(e) if !(e > 0.0 && e.is_finite())) {
        return Err(Usage(format!("--epsilon must be positive, got {}", a.epsilon.unwrap())).into());
    }
    let out = solve(&p, &cfg)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        print_outcome(&out);
    }
    Ok(match out.solution.status {
        SolutionStatus::Optimal => 0,
        SolutionStatus::Infeasible | SolutionStatus::LeastViolated => EXIT_INFEASIBLE,
        SolutionStatus::TimeLimit => EXIT_TIME_LIMIT,
    })
}

fn print_outcome(o: &Outcome) {
    let s = &o.solution;
    println!("status     {:?}", s.status);
    if let Some(f) = s.objective {
        println!("objective  {f}");
    }
    if let Some(y) = &s.x01 {
        let y: String = y.iter().map(|v| char::from(b'0' + v)).collect();
        println!("y          {y}");
    }
    if let Some(r) = s.residual {
        println!("residual   {r}");
    }
    if let Some(pp) = &o.parameters_used {
        match pp.rho {
            Some(rho) => println!("penalty    {:?}: σ = {}, ρ = {rho}", pp.mode, pp.sigma),
            None => println!("penalty    {:?}: σ = {}", pp.mode, pp.sigma),
        }
    }
    if let Some(ev) = &o.infeasibility {
        println!("evidence   {ev:?}");
    }
    println!("nodes      {}", s.stats.nodes);
    println!("seconds    {:.3}", s.stats.seconds);
}

fn cmd_transform(a: &TransformArgs, exec: Exec) -> anyhow::Result<u8> {
    let p01 = load(&a.file)?;
    let cfg = PipelineConfig {
        epsilon: a.epsilon,
        ..Default::default()
    }
    .with_exec(exec);
    let cmp = compare_penalties(&p01, &cfg)?;
    let pp = match a.mode {
        Mode::Las => cmp.las,
        Mode::Cli => cmp.cli,
        Mode::Gw | Mode::Auto => match cmp.gw {
            Some(g) => g,
            None => {
                eprintln!("projected bound is unavailable (infeasible or constraints redundant); using cli parameters");
                cmp.cli
            }
        },
    };
    let p = p01.to_plus_minus_one();
    let g = to_maxcut(&build_q(&p, pp.sigma)?, pp.rho);
    let info = export_maxcut(&g, &a.out, a.scale_int).with_context(|| format!("writing {}", a.out.display()))?;
    if info.unscaled_warning {
        eprintln!("warning: weights could not be scaled to integers; written unscaled");
    }
    println!("vertices   {}", g.n_vertices());
    println!("edges      {}", info.edges);
    println!("scale      {}", info.scale);
    println!("sigma      {}", pp.sigma);
    if let Some(rho) = pp.rho {
        println!("rho        {rho}");
    }
    println!("eTQe       {}", g.constant);
    Ok(0)
}

fn cmd_bounds(file: &Path, exec: Exec) -> anyhow::Result<u8> {
    let p = load(file)?.to_plus_minus_one();
    let budget = PipelineConfig::default().bound_budget;
    let start = Instant::now();
    let shor = shor_bounds(&p, exec);
    let strong = strengthened_bounds(&p, &budget, exec);
    let proj = projected_upper_bound(&p, &budget, exec);
    println!("{:<6} {:>16} {:>10}", "bound", "value", "seconds");
    let row = |name: &str, v: f64, secs: f64| println!("{name:<6} {v:>16.6} {secs:>10.3}");
    row("ℓ̂", shor.ell, shor.stats.seconds);
    row("û", shor.u, shor.stats.seconds);
    row("ℓ̃", strong.ell, strong.stats.seconds);
    row("ũ", strong.u, strong.stats.seconds);
    match &proj {
        ProjectedBound::Bound(b) => row("u_Δ", b.u, b.stats.seconds),
        ProjectedBound::Infeasible(c) => println!("{:<6} {:>16} ({})", "u_Δ", "infeasible", c.reason),
    }
    for w in [&shor.warning, &strong.warning].into_iter().flatten() {
        eprintln!("warning: {w}");
    }
    println!("total  {:.3}s", start.elapsed().as_secs_f64());
    Ok(0)
}

fn emit(p: &Bqp01Instance, out: &Output) -> anyhow::Result<u8> {
    match &out.out {
        Some(path) => write_instance(path, p, Format::from_path(path))
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{}", bqpcut::io::format::to_native_string(p)),
    }
    Ok(0)
}

fn cmd_generate(g: &GenerateCommand) -> anyhow::Result<u8> {
    let usage = |e: bqpcut::Error| anyhow!(Usage(e.to_string()));
    match g {
        GenerateCommand::Rgi {
            family,
            n,
            m,
            a,
            f,
            b_v,
            seed,
            unchecked,
            output,
        } => {
            let spec = RgiSpec {
                family: match family {
                    Family::One => RgiFamily::One,
                    Family::Two => RgiFamily::Two,
                },
                n: *n,
                m: *m,
                a_interval: *a,
                f_interval: *f,
                b_v: *b_v,
                seed: *seed,
            };
            let p = if *unchecked { gen_rgi_unchecked(&spec) } else { gen_rgi(&spec) }.map_err(usage)?;
            emit(&p, output)
        }
        GenerateCommand::Kcluster {
            n,
            percent,
            k,
            seed,
            output,
        } => {
            if *percent > 100 {
                return Err(Usage(format!("--percent must be at most 100, got {percent}")).into());
            }
            let p = build_k_cluster(&random_graph(*n, *percent, *seed), *k).map_err(usage)?;
            emit(&p, output)
        }
        GenerateCommand::Cbqp {
            n,
            k,
            range,
            seed,
            output,
        } => {
            if *range < 0 {
                return Err(Usage(format!("--range must be nonnegative, got {range}")).into());
            }
            let p = random_cbqp(*n, *k, *range, *seed).map_err(usage)?;
            emit(&p, output)
        }
    }
}

fn cmd_bench(suite_path: &Path, out: Option<&Path>, exec: Exec) -> anyhow::Result<u8> {
    let text = std::fs::read_to_string(suite_path).with_context(|| format!("reading {}", suite_path.display()))?;
    let suite = SuiteSpec::from_json(&text).with_context(|| format!("parsing {}", suite_path.display()))?;
    let base = suite_path.parent().unwrap_or(Path::new("."));
    let out = match out {
        Some(o) => o.to_path_buf(),
        None => {
            let stem = suite_path.file_stem().and_then(|s| s.to_str()).unwrap_or("suite");
            base.join(format!("{stem}-results"))
        }
    };
    let summary = bench_run(&suite, base, &PipelineConfig::default().with_exec(exec), &out)?;
    println!("{} records written to {}", summary.records.len(), out.display());
    for r in &summary.records {
        println!(
            "{:<16} {:<5} {:<12} {:>14} {:>8} {:>9.3}s",
            r.instance_id,
            r.mode,
            r.status,
            r.objective.map_or("-".to_string(), |v| v.to_string()),
            r.nodes,
            r.wall_time
        );
    }
    if let Some(c) = summary.mean_cli_percent {
        println!("mean σ_CLI/σ_Las  {c:.2}%");
    }
    if let Some(g) = summary.mean_gw_percent {
        println!("mean σ_GW/σ_Las   {g:.2}%");
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    par::init_workers_from_env();
    let exec = exec_of(&cli);
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a, exec),
        Command::Transform(a) => cmd_transform(a, exec),
        Command::Bounds { file } => cmd_bounds(file, exec),
        Command::Generate(g) => cmd_generate(g),
        Command::Bench { suite, out } => cmd_bench(suite, out.as_deref(), exec),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
