//! Ordered parallel map; falls back to a sequential loop without the
//! `parallel` feature (e.g. in the wasm build).

#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}

/// Sizes the global worker pool; a no-op without the `parallel` feature.
#[cfg(feature = "parallel")]
pub fn set_threads(threads: usize) -> crate::Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| crate::Error::Config(format!("thread pool: {e}")))
}

#[cfg(not(feature = "parallel"))]
pub fn set_threads(_threads: usize) -> crate::Result<()> {
    Ok(())
}
