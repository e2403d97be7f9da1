//! Execution policy for the data-parallel parts of the library.

use serde::{Deserialize, Serialize};

/// Whether independent work items run on the rayon pool or in order on the
/// calling thread. Without the `parallel` feature both variants run
/// sequentially.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// Maps `f` over `0..n`, preserving order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Like [`Execution::map`] but stops at the first error.
    pub fn try_map<T, E, F>(self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_policies_agree() {
        let a = Execution::Parallel.map(100, |i| i * i);
        let b = Execution::Sequential.map(100, |i| i * i);
        assert_eq!(a, b);
    }

    #[test]
    fn try_map_reports_error() {
        let r: Result<Vec<usize>, usize> =
            Execution::Sequential.try_map(10, |i| if i == 7 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(7));
    }
}
