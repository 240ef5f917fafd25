//! Instance generators, file formats, max-cut export and the benchmark
//! harness.

pub mod bench;
pub mod export;
pub mod format;
pub mod generate;

pub use bench::{bench_run, BenchSummary, ResultRecord, SuiteSpec};
pub use export::{export_maxcut, maxcut_to_string, parse_maxcut, ExportInfo};
pub use format::{read_instance, write_instance, Format};
pub use generate::{build_cbqp, build_k_cluster, gen_rgi, RgiFamily, RgiSpec};
