//! Execution policy and deterministic reductions.
//!
//! Every data-parallel loop in the crate goes through the helpers here. Work is
//! split into fixed-size chunks of [`CHUNK_SIZE`] items regardless of the
//! number of worker threads, and per-chunk results are combined in chunk order.
//! Floating-point sums use [`ExactSum`], whose result is the correctly rounded
//! exact sum and therefore does not depend on summation order at all. Together
//! these make every result independent of the thread count and of whether the
//! `parallel` feature is compiled in.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Default number of items per work chunk.
pub const CHUNK_SIZE: usize = 1 << 16;

/// How data-parallel loops are executed.
///
/// `Parallel` uses the current rayon thread pool when the `parallel` feature
/// is enabled and degrades to `Sequential` when it is not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Applies `f` to every index in `0..n`, returning results in index order.
pub fn map_indices<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Applies `f(chunk_index, chunk)` to consecutive `chunk`-sized pieces of
/// `data`, returning results in chunk order.
pub fn map_chunks<T, R, F>(exec: Execution, data: &[T], chunk: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &[T]) -> R + Sync + Send,
{
    assert!(chunk > 0, "chunk size must be positive");
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return data
            .par_chunks(chunk)
            .enumerate()
            .map(|(i, c)| f(i, c))
            .collect();
    }
    let _ = exec;
    data.chunks(chunk)
        .enumerate()
        .map(|(i, c)| f(i, c))
        .collect()
}

/// Element-wise map preserving order.
pub fn map_slice<T, R, F>(exec: Execution, data: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return data.par_iter().map(f).collect();
    }
    let _ = exec;
    data.iter().map(f).collect()
}

/// Sum of `f(item)` over `data`, exact up to a single final rounding.
pub fn sum_by<T, F>(exec: Execution, data: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync + Send,
{
    let partials = map_chunks(exec, data, CHUNK_SIZE, |_, c| {
        let mut acc = ExactSum::new();
        for item in c {
            acc.add(f(item));
        }
        acc
    });
    partials
        .into_iter()
        .fold(ExactSum::new(), |mut acc, p| {
            acc.merge(&p);
            acc
        })
        .value()
}

/// Sum of `f(i)` for `i` in `0..n`, exact up to a single final rounding.
pub fn sum_indexed<F>(exec: Execution, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK_SIZE);
    let partials = map_indices(exec, chunks, |c| {
        let mut acc = ExactSum::new();
        for i in c * CHUNK_SIZE..((c + 1) * CHUNK_SIZE).min(n) {
            acc.add(f(i));
        }
        acc
    });
    partials
        .iter()
        .fold(ExactSum::new(), |mut acc, p| {
            acc.merge(p);
            acc
        })
        .value()
}

/// Like [`sum_by`] for two accumulated quantities at once.
pub fn sum2_by<T, F>(exec: Execution, data: &[T], f: F) -> (f64, f64)
where
    T: Sync,
    F: Fn(&T) -> (f64, f64) + Sync + Send,
{
    let partials = map_chunks(exec, data, CHUNK_SIZE, |_, c| {
        let mut a = ExactSum::new();
        let mut b = ExactSum::new();
        for item in c {
            let (x, y) = f(item);
            a.add(x);
            b.add(y);
        }
        (a, b)
    });
    let mut a = ExactSum::new();
    let mut b = ExactSum::new();
    for (pa, pb) in &partials {
        a.merge(pa);
        b.merge(pb);
    }
    (a.value(), b.value())
}

/// Sum of `f(item)` with Neumaier compensation inside each fixed-size chunk
/// and exact merging of the chunk results.
///
/// Faster than [`sum_by`] and still independent of thread count, because
/// chunk boundaries do not move. Unlike [`sum_by`] it depends on item order.
pub fn compensated_sum_by<T, F>(exec: Execution, data: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync + Send,
{
    compensated_sum2_by(exec, data, |x| (f(x), 0.0)).0
}

/// Like [`compensated_sum_by`] for two accumulated quantities at once.
pub fn compensated_sum2_by<T, F>(exec: Execution, data: &[T], f: F) -> (f64, f64)
where
    T: Sync,
    F: Fn(&T) -> (f64, f64) + Sync + Send,
{
    let partials = map_chunks(exec, data, CHUNK_SIZE, |_, c| {
        let (mut a, mut b) = (NeumaierSum::default(), NeumaierSum::default());
        for item in c {
            let (x, y) = f(item);
            a.add(x);
            b.add(y);
        }
        (a, b)
    });
    let (mut a, mut b) = (ExactSum::new(), ExactSum::new());
    for (pa, pb) in &partials {
        a.add(pa.sum);
        a.add(pa.comp);
        b.add(pb.sum);
        b.add(pb.comp);
    }
    (a.value(), b.value())
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Exact floating-point accumulator (Shewchuk's non-overlapping partials).
///
/// The running sum is held exactly as a short expansion; [`ExactSum::value`]
/// returns it correctly rounded, so the result is independent of the order in
/// which terms were added or accumulators merged. Non-finite terms poison the
/// sum in the usual IEEE way.
#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
    special: f64,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, mut x: f64) {
        if !x.is_finite() {
            self.special += x;
            return;
        }
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    pub fn merge(&mut self, other: &ExactSum) {
        for &p in &other.partials {
            self.add(p);
        }
        self.special += other.special;
    }

    pub fn value(&self) -> f64 {
        if self.special != 0.0 {
            return self.special;
        }
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            let y = p[n - 1];
            n -= 1;
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // Round-half-even correction when the remaining partials push the
        // discarded part exactly past a halfway point.
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }
}

impl Extend<f64> for ExactSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

impl FromIterator<f64> for ExactSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = ExactSum::new();
        s.extend(iter);
        s
    }
}
