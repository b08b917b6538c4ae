//! Running-moment accumulators for the Monte Carlo checks.
//!
//! Welford updates and exact pairwise merging; merges are always performed
//! in a fixed order so parallel reductions stay bit-stable.

/// Streaming mean / variance accumulator.
#[derive(Debug, Clone, Default)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn new() -> Self {
        Moments::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Chan et al. merge; `other` is absorbed on the right.
    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.m2 / (self.n - 1) as f64
    }

    /// Standard error of the mean.
    pub fn se_mean(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }

    /// Standard error of the sample variance under approximate normality:
    /// `s^2 sqrt(2 / (n - 1))`.
    pub fn se_variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.variance() * (2.0 / (self.n - 1) as f64).sqrt()
    }
}

/// Sample mean of a slice.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Accumulate a slice into fresh moments.
pub fn moments_of(xs: &[f64]) -> Moments {
    let mut m = Moments::new();
    for &x in xs {
        m.push(x);
    }
    m
}
