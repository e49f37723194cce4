//! Run scheduling. Runs are independent tasks keyed by run index; results are
//! always combined in run order, so serial and parallel execution agree bit
//! for bit.

/// How independent Monte Carlo runs are scheduled.
///
/// `Parallel` uses the ambient rayon pool when the `parallel` feature is on
/// and silently degrades to `Serial` when it is off.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Runs handed to the scheduler at once; bounds memory of per-run results.
const CHUNK: usize = 256;

/// Evaluates `task(i)` for `i in 0..n` and feeds the results to `sink` in
/// increasing `i`.
pub fn for_each_run_ordered<T, F, S>(n: usize, exec: Execution, task: F, mut sink: S)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
    S: FnMut(usize, T),
{
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        for (offset, item) in map_range(start..end, exec, &task).into_iter().enumerate() {
            sink(start + offset, item);
        }
        start = end;
    }
}

/// `task(i)` for every `i`, collected in order.
pub fn map_runs<T, F>(n: usize, exec: Execution, task: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_range(0..n, exec, &task)
}

fn map_range<T, F>(range: std::ops::Range<usize>, exec: Execution, task: &F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            range.into_par_iter().map(task).collect()
        }
        _ => range.map(task).collect(),
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if !t.is_finite() {
            // overflow or non-finite input: the compensation would turn inf
            // into NaN
            self.sum = t;
            return;
        }
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        if self.sum.is_finite() {
            self.sum + self.compensation
        } else {
            self.sum
        }
    }
}
