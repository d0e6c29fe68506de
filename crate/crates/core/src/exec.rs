//! Execution mode for the data-parallel parts of the pipeline: independent
//! (T, parity) blocks, the dense eigensolves inside a block, and (I, Δ) scans.
//!
//! With the `parallel` feature off everything runs on the calling thread and
//! `Parallel` silently degrades to `Sequential`. The rayon pool size follows
//! `RAYON_NUM_THREADS`.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

impl std::str::FromStr for ExecMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sequential" | "seq" => Ok(ExecMode::Sequential),
            "parallel" | "par" => Ok(ExecMode::Parallel),
            _ => Err(format!("unknown execution mode '{s}' (sequential|parallel)")),
        }
    }
}

impl ExecMode {
    /// The mode actually used, given how the crate was built.
    pub fn effective(self) -> Self {
        if cfg!(feature = "parallel") {
            self
        } else {
            ExecMode::Sequential
        }
    }

    /// Point the dense linear algebra at the matching thread policy.
    pub fn install(self) {
        let par = match self.effective() {
            ExecMode::Sequential => faer::Par::Seq,
            #[cfg(feature = "parallel")]
            ExecMode::Parallel => faer::Par::rayon(0),
            #[cfg(not(feature = "parallel"))]
            ExecMode::Parallel => faer::Par::Seq,
        };
        faer::set_global_parallelism(par);
    }

    /// Order-preserving map.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self.effective() {
            #[cfg(feature = "parallel")]
            ExecMode::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            _ => items.iter().map(f).collect(),
        }
    }

    /// Order-preserving map that stops at the first error (in order).
    pub fn try_map<T, R, E, F>(self, items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(&T) -> Result<R, E> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = ExecMode::Sequential.map(&xs, |x| x * x);
        let b = ExecMode::Parallel.map(&xs, |x| x * x);
        assert_eq!(a, b);
    }

    #[test]
    fn parse_modes() {
        assert_eq!("seq".parse::<ExecMode>().unwrap(), ExecMode::Sequential);
        assert!("fast".parse::<ExecMode>().is_err());
    }
}
