//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature, [`Exec::Parallel`] runs on the rayon global
//! pool; without it, every execution mode is sequential. Results are always
//! returned in input order and each element is computed independently, so
//! output is bit-identical across modes and thread counts.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

pub fn map<T, U, F>(exec: Exec, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_keep_order() {
        let xs: Vec<f64> = (0..1000).map(|k| k as f64 * 0.37).collect();
        let f = |x: &f64| (x.sin() * 1e3).exp2();
        let a = map(Exec::Sequential, &xs, f);
        let b = map(Exec::Parallel, &xs, f);
        assert_eq!(a, b);
        assert_eq!(a[5], f(&xs[5]));
    }
}
