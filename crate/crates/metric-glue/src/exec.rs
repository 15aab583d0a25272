//! Replica fan-out: rayon when the `parallel` feature is on, plain loop
//! otherwise. Results are always collected in replica order, so the output
//! is byte-identical whichever path runs and however many threads exist.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over replica indices `0..n`, in parallel when available.
pub fn map_replicas<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential reference path. The bench suite compares this against
/// `map_replicas`; they must produce identical output.
pub fn map_replicas_seq<T, F>(n: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..n).map(f).collect()
}
