//! Confidence intervals and streaming moment accumulators.

use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF, Normal};

use crate::rng::Absorb;

pub const DEFAULT_CONFIDENCE: f64 = 0.99;

/// Exact (Clopper–Pearson) two-sided interval for a binomial proportion.
pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(trials > 0, "need at least one trial");
    assert!(successes <= trials);
    let alpha = 1.0 - confidence;
    let (x, n) = (successes as f64, trials as f64);
    let lo = if successes == 0 {
        0.0
    } else {
        Beta::new(x, n - x + 1.0).unwrap().inverse_cdf(alpha / 2.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        Beta::new(x + 1.0, n - x)
            .unwrap()
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

/// Two-sided standard normal quantile for `confidence`.
pub fn z_value(confidence: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + confidence / 2.0)
}

/// Running count, mean and centred second moment (Welford / Chan).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count.max(1) as f64).sqrt()
    }

    /// Normal-approximation interval for the mean.
    pub fn mean_ci(&self, confidence: f64) -> (f64, f64) {
        let h = z_value(confidence) * self.std_error();
        (self.mean - h, self.mean + h)
    }

    /// Standard error of the sample variance, from the fourth moment of a
    /// second pass; here approximated by `σ²·√(2/(n−1))`, exact for normal
    /// data and conservative enough for bounded summands.
    pub fn variance_std_error_normal(&self) -> f64 {
        self.variance() * (2.0 / (self.count.max(2) - 1) as f64).sqrt()
    }
}

impl Absorb for Moments {
    fn absorb(&mut self, other: Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }
}

/// Sample moments up to order four, for the standard error of a variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PowerSums {
    pub n: u64,
    s1: f64,
    s2: f64,
    s3: f64,
    s4: f64,
}

impl PowerSums {
    pub fn push(&mut self, x: f64) {
        let x2 = x * x;
        self.n += 1;
        self.s1 += x;
        self.s2 += x2;
        self.s3 += x2 * x;
        self.s4 += x2 * x2;
    }

    pub fn mean(&self) -> f64 {
        self.s1 / self.n as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.n as f64;
        let m = self.mean();
        (self.s2 - n * m * m) / (n - 1.0)
    }

    /// Fourth central moment (plug-in).
    fn mu4(&self) -> f64 {
        let n = self.n as f64;
        let m = self.mean();
        (self.s4 - 4.0 * m * self.s3 + 6.0 * m * m * self.s2 - 3.0 * n * m.powi(4)) / n
    }

    /// Standard error of the sample variance, `√((μ₄ − σ⁴)/n)`.
    pub fn variance_std_error(&self) -> f64 {
        let v = self.variance();
        ((self.mu4() - v * v).max(0.0) / self.n as f64).sqrt()
    }

    pub fn std_error_of_mean(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

impl Absorb for PowerSums {
    fn absorb(&mut self, o: Self) {
        self.n += o.n;
        self.s1 += o.s1;
        self.s2 += o.s2;
        self.s3 += o.s3;
        self.s4 += o.s4;
    }
}

impl Absorb for u64 {
    fn absorb(&mut self, other: Self) {
        *self += other;
    }
}

impl<T: Absorb> Absorb for Vec<T> {
    fn absorb(&mut self, other: Self) {
        assert_eq!(self.len(), other.len());
        for (a, b) in self.iter_mut().zip(other) {
            a.absorb(b);
        }
    }
}

impl Absorb for f64 {
    fn absorb(&mut self, other: Self) {
        *self += other;
    }
}
