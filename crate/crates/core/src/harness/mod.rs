//! Study orchestration: scenario files, refinement / convergence studies,
//! the built-in verification suite and file outputs.

pub mod checks;
pub mod output;
pub mod scenario;
pub mod study;

pub use checks::{run_all_checks, CheckResult};
pub use scenario::{InitSpec, Scenario, SmoothField, SourceConfig};
pub use study::{
    gamma_recovery_check, minimizer_convergence_study, refinement_study, weak_strong_check,
    GammaTable, MinimizerStudy, StudyResult, WeakStrongTable,
};

use std::sync::Once;

static THREAD_POOL: Once = Once::new();

/// Cap the worker count from NETFORM_THREADS (default: available
/// parallelism). Safe to call more than once; only the first call builds the
/// global pool.
pub fn init_thread_pool() {
    THREAD_POOL.call_once(|| {
        if let Ok(value) = std::env::var("NETFORM_THREADS") {
            if let Ok(threads) = value.parse::<usize>() {
                if threads > 0 {
                    let _ = rayon::ThreadPoolBuilder::new()
                        .num_threads(threads)
                        .build_global();
                }
            }
        }
    });
}
