//! Worker-pool helpers.
//!
//! All parallel kernels in this crate are written so their results do not
//! depend on the worker count; this module only controls how many threads do
//! the work.

/// Run `f` inside a dedicated rayon pool of `n` threads.
pub fn with_worker_threads<R: Send>(n: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .expect("building rayon pool")
        .install(f)
}

/// Rows are processed in fixed-size chunks so partition boundaries never
/// depend on the worker count.
pub(crate) const PAR_CHUNK: usize = 1024;
