use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Whether independent work items run on the rayon pool or in order on the
/// calling thread. Results are identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parallelism {
    Serial,
    #[default]
    Parallel,
}

/// `(0..n).map(f)` collected in index order.
pub fn map_indexed<T, F>(n: usize, par: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match par {
        Parallelism::Serial => (0..n).map(f).collect(),
        Parallelism::Parallel => (0..n).into_par_iter().map(f).collect(),
    }
}
