//! Thread-local counters for privacy-accounting checks.
//!
//! Every noise calibration and every raw-moment query bumps a counter, so
//! tests can assert that an estimator spends exactly the number of queries
//! its budget accounting claims. Counters are per-thread: concurrent test
//! threads never observe each other's activity.

use std::cell::Cell;

thread_local! {
    static CALIBRATIONS: Cell<u64> = const { Cell::new(0) };
    static MOMENT_QUERIES: Cell<u64> = const { Cell::new(0) };
}

/// Number of noise calibrations performed on this thread since the last reset.
pub fn calibration_calls() -> u64 {
    CALIBRATIONS.with(|c| c.get())
}

/// Number of raw-moment queries performed on this thread since the last reset.
pub fn moment_queries() -> u64 {
    MOMENT_QUERIES.with(|c| c.get())
}

/// Zero both counters on the calling thread.
pub fn reset() {
    CALIBRATIONS.with(|c| c.set(0));
    MOMENT_QUERIES.with(|c| c.set(0));
}

pub(crate) fn record_calibration() {
    CALIBRATIONS.with(|c| c.set(c.get() + 1));
}

pub(crate) fn record_moment_query() {
    MOMENT_QUERIES.with(|c| c.set(c.get() + 1));
}
