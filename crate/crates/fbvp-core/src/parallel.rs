//! Data-parallel helpers with a sequential fallback.
//!
//! Everything the library parallelizes is an index-wise map whose elements
//! are pure functions of the index, so the result is bitwise identical
//! however many threads run it — parallelism here changes wall time, never
//! values. The `parallel` cargo feature compiles the rayon path in; the
//! process-wide [`set_force_serial`] switch (driven by the `FBVP_THREADS`
//! environment variable, `0` or `1` meaning serial) turns it off at runtime
//! without recompiling.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SERIAL: AtomicBool = AtomicBool::new(false);

/// Environment variable read by [`init_from_env`]: `0` or `1` forces serial
/// execution, `n ≥ 2` caps the global thread pool at `n`, unset or invalid
/// leaves the library default (all cores when the `parallel` feature is on).
pub const THREADS_ENV_VAR: &str = "FBVP_THREADS";

/// Force all [`map_indexed`] calls onto the calling thread.
pub fn set_force_serial(serial: bool) {
    FORCE_SERIAL.store(serial, Ordering::SeqCst);
}

/// Current state of the serial override.
pub fn force_serial() -> bool {
    FORCE_SERIAL.load(Ordering::SeqCst)
}

/// Configure parallelism from `FBVP_THREADS` (see [`THREADS_ENV_VAR`]).
/// Intended to be called once at process start; safe to call again (a
/// thread-pool size can only be applied before rayon's global pool exists,
/// so later calls can still flip the serial switch but not resize the pool).
pub fn init_from_env() {
    match std::env::var(THREADS_ENV_VAR) {
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(0) | Ok(1) => set_force_serial(true),
            Ok(_n) => {
                set_force_serial(false);
                #[cfg(feature = "parallel")]
                {
                    // Ignore the error: the global pool may already exist.
                    let _ = rayon::ThreadPoolBuilder::new()
                        .num_threads(_n)
                        .build_global();
                }
            }
            Err(_) => set_force_serial(false),
        },
        Err(_) => set_force_serial(false),
    }
}

/// `(0..n).map(f)` collected in index order, evaluated in parallel when the
/// `parallel` feature is enabled and the serial override is off. `f` must be
/// pure for the bitwise-determinism guarantee to hold.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    {
        if !force_serial() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(&f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Fallible variant of [`map_indexed`]. All indices are evaluated; the
/// error reported is the one at the smallest failing index, so the error
/// path is as deterministic as the success path.
pub fn try_map_indexed<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync,
{
    let results = map_indexed(n, f);
    let mut out = Vec::with_capacity(n);
    for r in results {
        out.push(r?);
    }
    Ok(out)
}
