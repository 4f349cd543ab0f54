use rand::Rng;

use super::{precondition, EstimateReport, LabError, McConfig};
use crate::rng::{run_trials, Streams};

/// `2 exp(−2t² / Σ(b_i − a_i)²)`.
pub fn chernoff_bound(intervals: &[(f64, f64)], t: f64) -> f64 {
    let spread: f64 = intervals.iter().map(|(a, b)| (b - a) * (b - a)).sum();
    2.0 * (-2.0 * t * t / spread).exp()
}

/// Two-sided tail `P[|X − E X| ≥ t]` for `X` a sum of independent uniforms
/// on the intervals, one report per `t`, all from the same samples.
pub fn check_chernoff(
    intervals: &[(f64, f64)],
    ts: &[f64],
    cfg: &McConfig,
) -> Result<Vec<EstimateReport>, LabError> {
    cfg.check()?;
    if intervals.is_empty() {
        return Err(precondition("no summands"));
    }
    if let Some(i) = intervals
        .iter()
        .position(|&(a, b)| !(a.is_finite() && b.is_finite() && a < b))
    {
        return Err(precondition(format!("interval {i} is empty or not finite")));
    }
    if ts.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(precondition("t must be finite and non-negative"));
    }
    let mean: f64 = intervals.iter().map(|(a, b)| (a + b) / 2.0).sum();
    let streams = Streams::for_purpose(cfg.seed, "lab/chernoff");
    let hits = run_trials(
        &streams,
        cfg.trials,
        vec![0u64; ts.len()],
        |rng, _| {
            let x: f64 = intervals.iter().map(|&(a, b)| rng.random_range(a..b)).sum();
            (x - mean).abs()
        },
        |acc: &mut Vec<u64>, dev| {
            for (h, &t) in acc.iter_mut().zip(ts) {
                if dev >= t {
                    *h += 1;
                }
            }
        },
    );
    Ok(ts
        .iter()
        .zip(hits)
        .map(|(&t, h)| {
            EstimateReport::from_count(
                format!("chernoff k={} t={t}", intervals.len()),
                h,
                cfg.trials,
                chernoff_bound(intervals, t),
                cfg.confidence,
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::Verdict;

    #[test]
    fn hundred_uniforms() {
        let iv = vec![(0.0, 1.0); 100];
        let r = check_chernoff(&iv, &[0.0, 20.0], &McConfig::new(20_000, 9)).unwrap();
        assert_eq!(r[0].paper_bound, 2.0);
        assert_eq!(r[0].verdict, Verdict::Vacuous);
        assert_eq!(r[0].estimate, 1.0);
        assert!((r[1].paper_bound - 2.0 * (-8.0f64).exp()).abs() < 1e-15);
        assert_eq!(r[1].estimate, 0.0);
        assert_eq!(r[1].verdict, Verdict::Pass);
    }

    #[test]
    fn single_summand_cannot_deviate_past_half() {
        let r = check_chernoff(&[(0.0, 1.0)], &[0.6, 0.25], &McConfig::new(10_000, 1)).unwrap();
        assert_eq!(r[0].estimate, 0.0);
        // P[|U − 1/2| ≥ 1/4] = 1/2
        assert!(r[1].contains(0.5));
    }

    #[test]
    fn errors() {
        assert!(check_chernoff(&[], &[1.0], &McConfig::default()).is_err());
        assert!(check_chernoff(&[(1.0, 0.0)], &[1.0], &McConfig::default()).is_err());
        assert!(check_chernoff(&[(0.0, 1.0)], &[-1.0], &McConfig::default()).is_err());
    }
}
