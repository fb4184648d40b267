//! Conformance and benchmarking harness.

pub mod bench;
pub mod conformance;
pub mod report;

pub use bench::{bench_launcher, bench_local, bench_qstat_latency, to_csv, BenchmarkRecord, CSV_HEADER};
pub use conformance::run_conformance;
pub use report::{ConformanceReport, TestRecord};
