//! Benchmark harness.
//!
//! A suite is a JSON file listing instances and penalty modes. Every
//! (instance, mode) pair is solved and recorded. Outputs in `out_dir`:
//!
//! * `records.csv`: one row per pair, without timings, so reruns compare equal;
//! * `timings.csv`: wall time per pair;
//! * `profile_<mode>.csv`: `(time, percent solved)` steps per mode;
//! * `sigma_ratios.csv`: `σ_CLI/σ_Las` and `σ_GW/σ_Las` per instance.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::format::{read_instance, Format};
use crate::io::generate::{build_k_cluster, gen_rgi_unchecked, random_cbqp, random_graph, RgiSpec};
use crate::model::{Bqp01Instance, SolutionStatus};
use crate::par;
use crate::pipeline::{compare_penalties, solve, ModeChoice, PipelineConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSource {
    Rgi(RgiSpec),
    /// Path relative to the suite file.
    File(PathBuf),
    KCluster { n: usize, percent: u8, k: usize, seed: u64 },
    Cbqp { n: usize, k: usize, range: i64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteInstance {
    pub id: String,
    #[serde(flatten)]
    pub source: InstanceSource,
}

fn all_modes() -> Vec<ModeChoice> {
    vec![ModeChoice::Las, ModeChoice::Cli, ModeChoice::Gw, ModeChoice::Auto]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub name: String,
    #[serde(default = "all_modes")]
    pub modes: Vec<ModeChoice>,
    #[serde(default)]
    pub instances: Vec<SuiteInstance>,
    /// Per-solve limit in seconds.
    #[serde(default)]
    pub time_limit: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl SuiteSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub instance_id: String,
    pub n: usize,
    pub m: usize,
    pub mode: String,
    pub sigma: Option<f64>,
    pub rho: Option<f64>,
    pub status: String,
    pub objective: Option<f64>,
    pub nodes: u64,
    #[serde(skip)]
    pub wall_time: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaRatio {
    pub instance_id: String,
    pub sigma_las: f64,
    pub sigma_cli: f64,
    pub sigma_gw: Option<f64>,
    pub cli_over_las: f64,
    pub gw_over_las: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSummary {
    pub records: Vec<ResultRecord>,
    pub ratios: Vec<SigmaRatio>,
    /// Mean `σ_CLI/σ_Las` in percent.
    pub mean_cli_percent: Option<f64>,
    /// Mean `σ_GW/σ_Las` in percent.
    pub mean_gw_percent: Option<f64>,
}

fn mode_name(m: ModeChoice) -> &'static str {
    match m {
        ModeChoice::Las => "las",
        ModeChoice::Cli => "cli",
        ModeChoice::Gw => "gw",
        ModeChoice::Auto => "auto",
    }
}

pub fn load_instance(src: &InstanceSource, base_dir: &Path) -> Result<Bqp01Instance> {
    match src {
        InstanceSource::Rgi(spec) => gen_rgi_unchecked(spec),
        InstanceSource::File(p) => {
            let path = base_dir.join(p);
            read_instance(&path, Format::from_path(&path))
        }
        InstanceSource::KCluster { n, percent, k, seed } => build_k_cluster(&random_graph(*n, *percent, *seed), *k),
        InstanceSource::Cbqp { n, k, range, seed } => random_cbqp(*n, *k, *range, *seed),
    }
}

fn run_one(id: &str, p: &Bqp01Instance, mode: ModeChoice, cfg: &PipelineConfig, seed: u64) -> ResultRecord {
    let mut c = cfg.clone();
    c.penalty_mode = mode;
    let start = Instant::now();
    let out = solve(p, &c);
    let wall_time = start.elapsed().as_secs_f64();
    let base = ResultRecord {
        instance_id: id.to_string(),
        n: p.n(),
        m: p.m(),
        mode: mode_name(mode).to_string(),
        sigma: None,
        rho: None,
        status: String::new(),
        objective: None,
        nodes: 0,
        wall_time,
        seed,
    };
    match out {
        Ok(o) => ResultRecord {
            sigma: o.parameters_used.as_ref().map(|pp| pp.sigma),
            rho: o.parameters_used.as_ref().and_then(|pp| pp.rho),
            status: format!("{:?}", o.solution.status),
            objective: o.solution.objective,
            nodes: o.solution.stats.nodes,
            ..base
        },
        Err(e) => ResultRecord {
            status: format!("error: {e}"),
            ..base
        },
    }
}

fn is_solved(status: &str) -> bool {
    status == format!("{:?}", SolutionStatus::Optimal) || status == format!("{:?}", SolutionStatus::Infeasible)
}

/// `(t, percent of instances solved within t)` at each solve time.
pub fn profile(records: &[&ResultRecord]) -> Vec<(f64, f64)> {
    let total = records.len();
    let mut times: Vec<f64> = records.iter().filter(|r| is_solved(&r.status)).map(|r| r.wall_time).collect();
    times.sort_by(f64::total_cmp);
    times
        .iter()
        .enumerate()
        .map(|(k, &t)| (t, 100.0 * (k + 1) as f64 / total as f64))
        .collect()
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, c) = v.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (c > 0).then(|| s / c as f64)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Runs the suite; see the module docs for the files written.
pub fn bench_run(suite: &SuiteSpec, base_dir: &Path, cfg: &PipelineConfig, out_dir: &Path) -> Result<BenchSummary> {
    std::fs::create_dir_all(out_dir)?;
    let mut cfg = cfg.clone();
    cfg.solver.seed = suite.seed;
    if suite.time_limit.is_some() {
        cfg.solver.time_limit = suite.time_limit;
    }

    let loaded: Vec<(String, Result<Bqp01Instance>)> = suite
        .instances
        .iter()
        .map(|i| (i.id.clone(), load_instance(&i.source, base_dir)))
        .collect();
    let jobs: Vec<(usize, ModeChoice)> = (0..loaded.len())
        .flat_map(|i| suite.modes.iter().map(move |&m| (i, m)))
        .collect();
    let records: Vec<ResultRecord> = par::map(cfg.exec, &jobs, |&(i, mode)| {
        let (id, inst) = &loaded[i];
        match inst {
            Ok(p) => run_one(id, p, mode, &cfg, suite.seed),
            Err(e) => ResultRecord {
                instance_id: id.clone(),
                n: 0,
                m: 0,
                mode: mode_name(mode).to_string(),
                sigma: None,
                rho: None,
                status: format!("error: {e}"),
                objective: None,
                nodes: 0,
                wall_time: 0.0,
                seed: suite.seed,
            },
        }
    });
    let ratios: Vec<SigmaRatio> = par::map(cfg.exec, &loaded, |(id, inst)| {
        let p = inst.as_ref().ok()?;
        let cmp = compare_penalties(p, &cfg).ok()?;
        let gw = cmp.gw.as_ref().map(|g| g.sigma);
        Some(SigmaRatio {
            instance_id: id.clone(),
            sigma_las: cmp.las.sigma,
            sigma_cli: cmp.cli.sigma,
            sigma_gw: gw,
            cli_over_las: cmp.cli.sigma / cmp.las.sigma,
            gw_over_las: gw.map(|g| g / cmp.las.sigma),
        })
    })
    .into_iter()
    .flatten()
    .collect();

    write_csv(
        &out_dir.join("records.csv"),
        &records,
        &["instance_id", "n", "m", "mode", "sigma", "rho", "status", "objective", "nodes", "seed"],
    )?;
    #[derive(Serialize)]
    struct Timing<'a> {
        instance_id: &'a str,
        mode: &'a str,
        wall_time: f64,
    }
    let timings: Vec<Timing> = records
        .iter()
        .map(|r| Timing {
            instance_id: &r.instance_id,
            mode: &r.mode,
            wall_time: r.wall_time,
        })
        .collect();
    write_csv(&out_dir.join("timings.csv"), &timings, &["instance_id", "mode", "wall_time"])?;
    for &mode in &suite.modes {
        let rows: Vec<&ResultRecord> = records.iter().filter(|r| r.mode == mode_name(mode)).collect();
        #[derive(Serialize)]
        struct Step {
            time: f64,
            percent_solved: f64,
        }
        let steps: Vec<Step> = profile(&rows)
            .into_iter()
            .map(|(time, percent_solved)| Step { time, percent_solved })
            .collect();
        write_csv(
            &out_dir.join(format!("profile_{}.csv", mode_name(mode))),
            &steps,
            &["time", "percent_solved"],
        )?;
    }
    write_csv(
        &out_dir.join("sigma_ratios.csv"),
        &ratios,
        &["instance_id", "sigma_las", "sigma_cli", "sigma_gw", "cli_over_las", "gw_over_las"],
    )?;

    let summary = BenchSummary {
        mean_cli_percent: mean(ratios.iter().map(|r| 100.0 * r.cli_over_las)),
        mean_gw_percent: mean(ratios.iter().filter_map(|r| r.gw_over_las.map(|g| 100.0 * g))),
        records,
        ratios,
    };
    log::info!(
        "suite {}: {} records, mean σ ratios CLI {:?}% GW {:?}%",
        suite.name,
        summary.records.len(),
        summary.mean_cli_percent,
        summary.mean_gw_percent
    );
    Ok(summary)
}

/// Dense 0/1 adjacency from an edge list, for suites that name graphs.
pub fn adjacency_from_edges(n: usize, edges: &[(usize, usize)]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for &(i, j) in edges {
        a[(i, j)] = 1.0;
        a[(j, i)] = 1.0;
    }
    a
}
