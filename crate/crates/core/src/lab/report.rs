use serde::Serialize;

use crate::stats::clopper_pearson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Vacuous,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

/// A probability (exact or estimated) checked against an upper bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub quantity: String,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Zero for exact values.
    pub trials: u64,
    pub paper_bound: f64,
    pub verdict: Verdict,
    pub method: Method,
}

fn verdict(ci_low: f64, bound: f64) -> Verdict {
    if !(bound < 1.0) {
        Verdict::Vacuous
    } else if ci_low > bound {
        Verdict::Fail
    } else {
        Verdict::Pass
    }
}

impl EstimateReport {
    pub fn exact(quantity: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            quantity: quantity.into(),
            estimate: value,
            ci_low: value,
            ci_high: value,
            trials: 0,
            paper_bound: bound,
            verdict: verdict(value, bound),
            method: Method::Exact,
        }
    }

    pub fn from_count(
        quantity: impl Into<String>,
        hits: u64,
        trials: u64,
        bound: f64,
        confidence: f64,
    ) -> Self {
        let (lo, hi) = clopper_pearson(hits, trials, confidence);
        Self {
            quantity: quantity.into(),
            estimate: hits as f64 / trials as f64,
            ci_low: lo,
            ci_high: hi,
            trials,
            paper_bound: bound,
            verdict: verdict(lo, bound),
            method: Method::MonteCarlo,
        }
    }

    pub fn half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }

    /// `estimate ≤ bound + k · half-width`, or the bound is vacuous.
    pub fn within_slack(&self, k: f64) -> bool {
        self.verdict == Verdict::Vacuous
            || self.estimate <= self.paper_bound + k * self.half_width()
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts() {
        assert_eq!(
            EstimateReport::exact("q", 0.5, 1.7).verdict,
            Verdict::Vacuous
        );
        assert_eq!(
            EstimateReport::exact("q", 0.5, 1.0).verdict,
            Verdict::Vacuous
        );
        assert_eq!(EstimateReport::exact("q", 0.5, 0.4).verdict, Verdict::Fail);
        assert_eq!(EstimateReport::exact("q", 0.3, 0.4).verdict, Verdict::Pass);
        // ci_low of 30/100 at 99% is about 0.19, below 0.25
        let r = EstimateReport::from_count("q", 30, 100, 0.25, 0.99);
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.ci_low <= r.estimate && r.estimate <= r.ci_high);
        assert_eq!(
            EstimateReport::from_count("q", 90, 100, 0.25, 0.99).verdict,
            Verdict::Fail
        );
    }
}
