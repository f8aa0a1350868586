//! Job files, the invariant cache, report emission, and the verification suites
//! behind the `toruscl` command line.

pub mod cache;
pub mod job;
pub mod report;
pub mod run;

pub use cache::{Cache, CacheEntry, CacheKey, CACHE_ENV, DEFAULT_CACHE_DIR};
pub use job::{load_job, parse_job, Budgets, Format, JobSpec, LoadError, OnoKind, OutputSpec, Suite, Task};
pub use report::{emit_report, exit_code, render, Report, Status, Verdict};
pub use run::run_job;

/// Version stamped on job files, cache entries, and reports.
pub const FORMAT_VERSION: u32 = 1;
