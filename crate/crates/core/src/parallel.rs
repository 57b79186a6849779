//! Order-preserving map over independent work items.
//!
//! With the `parallel` feature (default) [`ExecMode::Parallel`] fans out over
//! the rayon pool; without it every mode runs sequentially. Each item is
//! computed by the same code path in both modes, so results are bit-identical.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Serial,
    #[default]
    Parallel,
}

pub fn map<T, R, F>(items: &[T], mode: ExecMode, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match mode {
        ExecMode::Serial => items.iter().map(f).collect(),
        ExecMode::Parallel => par_map(items, f),
    }
}

/// Like [`map`] for fallible work; the first error by index wins.
pub fn try_map<T, R, E, F>(items: &[T], mode: ExecMode, f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    map(items, mode, f).into_iter().collect()
}

#[cfg(feature = "parallel")]
fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let par = map(&xs, ExecMode::Parallel, |x| x * x);
        let ser = map(&xs, ExecMode::Serial, |x| x * x);
        assert_eq!(par, ser);
    }

    #[test]
    fn first_error_by_index() {
        let xs: Vec<i32> = (0..100).collect();
        let r: Result<Vec<i32>, i32> = try_map(&xs, ExecMode::Parallel, |&x| if x % 30 == 29 { Err(x) } else { Ok(x) });
        assert_eq!(r, Err(29));
    }
}
