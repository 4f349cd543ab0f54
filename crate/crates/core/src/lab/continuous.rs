use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use super::{precondition, EstimateReport, LabError, McConfig};
use crate::rational::{from_f64, to_f64};
use crate::rng::{count_events, Streams};

/// Most summands evaluated in closed form.
pub const EXACT_INTERVAL_CAP: usize = 4;

fn validate(intervals: &[(f64, f64)], b: f64, t: f64) -> Result<(), LabError> {
    if intervals.is_empty() {
        return Err(precondition("no intervals"));
    }
    for (i, &(lo, hi)) in intervals.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(precondition(format!("interval {i} is empty or not finite")));
        }
    }
    if !b.is_finite() || !(t > 0.0 && t.is_finite()) {
        return Err(precondition("b must be finite and t positive"));
    }
    Ok(())
}

/// `2t / √Var(X)` for `X` a sum of independent uniforms on the intervals.
pub fn continuous_lo_bound(intervals: &[(f64, f64)], t: f64) -> f64 {
    let var: f64 = intervals
        .iter()
        .map(|(a, b)| (b - a) * (b - a) / 12.0)
        .sum();
    2.0 * t / var.sqrt()
}

/// `P[Σ W_j ≤ y]` for `W_j ∼ U[0, w_j]`:
/// `(1/(n! Π w)) Σ_J (−1)^{|J|} (y − Σ_{j∈J} w_j)₊ⁿ`.
fn sum_cdf(widths: &[BigRational], y: &BigRational) -> BigRational {
    let n = widths.len();
    let mut acc = BigRational::zero();
    for mask in 0u32..1 << n {
        let shift = (0..n)
            .filter(|&j| mask >> j & 1 == 1)
            .fold(BigRational::zero(), |a, j| a + &widths[j]);
        let d = y - shift;
        if d.is_positive() {
            let term = num_traits::pow(d, n);
            if mask.count_ones() % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
    }
    let fact: BigInt = (1..=n as u64).map(BigInt::from).product();
    let norm = widths
        .iter()
        .fold(BigRational::from_integer(fact), |a, w| a * w);
    let p = acc / norm;
    p.clamp(BigRational::zero(), BigRational::one())
}

/// Exact `P[|X − b| < t]` for `X` a sum of at most
/// [`EXACT_INTERVAL_CAP`] independent uniforms, in rational arithmetic on
/// the (exactly represented) inputs.
pub fn continuous_lo_exact(
    intervals: &[(f64, f64)],
    b: f64,
    t: f64,
) -> Result<BigRational, LabError> {
    validate(intervals, b, t)?;
    if intervals.len() > EXACT_INTERVAL_CAP {
        return Err(LabError::OverCap {
            got: intervals.len(),
            cap: EXACT_INTERVAL_CAP,
        });
    }
    let r = |x: f64| from_f64(x).expect("finite");
    let base = intervals
        .iter()
        .fold(BigRational::zero(), |a, &(lo, _)| a + r(lo));
    let widths: Vec<BigRational> = intervals.iter().map(|&(lo, hi)| r(hi) - r(lo)).collect();
    let (b, t) = (r(b), r(t));
    let upper = sum_cdf(&widths, &(&b + &t - &base));
    let lower = sum_cdf(&widths, &(&b - &t - &base));
    Ok(upper - lower)
}

pub fn continuous_lo_monte_carlo(
    intervals: &[(f64, f64)],
    b: f64,
    t: f64,
    cfg: &McConfig,
) -> Result<EstimateReport, LabError> {
    validate(intervals, b, t)?;
    cfg.check()?;
    let streams = Streams::for_purpose(cfg.seed, "lab/continuous");
    let hits = count_events(&streams, cfg.trials, |rng| {
        let x: f64 = intervals
            .iter()
            .map(|&(lo, hi)| rng.random_range(lo..hi))
            .sum();
        (x - b).abs() < t
    });
    Ok(EstimateReport::from_count(
        label(intervals, b, t),
        hits,
        cfg.trials,
        continuous_lo_bound(intervals, t),
        cfg.confidence,
    ))
}

fn label(intervals: &[(f64, f64)], b: f64, t: f64) -> String {
    format!("continuous-lo k={} b={b} t={t}", intervals.len())
}

/// Exact for up to [`EXACT_INTERVAL_CAP`] summands, Monte Carlo above.
pub fn check_continuous_lo(
    intervals: &[(f64, f64)],
    b: f64,
    t: f64,
    cfg: &McConfig,
) -> Result<EstimateReport, LabError> {
    if intervals.len() <= EXACT_INTERVAL_CAP {
        let p = to_f64(&continuous_lo_exact(intervals, b, t)?);
        Ok(EstimateReport::exact(
            label(intervals, b, t),
            p,
            continuous_lo_bound(intervals, t),
        ))
    } else {
        continuous_lo_monte_carlo(intervals, b, t, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::Verdict;

    #[test]
    fn two_uniforms() {
        let iv = [(-1.0, 1.0); 2];
        let p = to_f64(&continuous_lo_exact(&iv, 0.0, 0.1).unwrap());
        // ∫_{−0.1}^{0.1} (2 − |s|)/4 ds = 0.1 − 0.0025
        assert!((p - 0.0975).abs() < 1e-15);
        let p = continuous_lo_exact(&iv, 0.0, 0.125).unwrap();
        // t − t²/4 at the dyadic t = 1/8
        assert_eq!(p, BigRational::new(31.into(), 256.into()));
        let r = check_continuous_lo(&iv, 0.0, 0.1, &McConfig::default()).unwrap();
        assert!((r.paper_bound - 0.2 / (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn single_uniform_and_tails() {
        let p = continuous_lo_exact(&[(-1.0, 1.0)], 0.0, 0.5).unwrap();
        assert_eq!(p, BigRational::new(1.into(), 2.into()));
        let r = check_continuous_lo(&[(-1.0, 1.0)], 0.0, 0.5, &McConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Vacuous);
        // window beyond the support
        assert!(continuous_lo_exact(&[(0.0, 1.0); 3], 5.0, 1.0)
            .unwrap()
            .is_zero());
        assert!(continuous_lo_exact(&[(0.0, 1.0); 3], 1.5, 2.0)
            .unwrap()
            .is_one());
    }

    #[test]
    fn irwin_hall_density_at_centre() {
        // four U[0,1]: P[|X − 2| < t] ≈ 2t · 2/3 for small t
        let t = 1e-3;
        let p = to_f64(&continuous_lo_exact(&[(0.0, 1.0); 4], 2.0, t).unwrap());
        assert!((p / (2.0 * t) - 2.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn errors() {
        assert!(continuous_lo_exact(&[], 0.0, 1.0).is_err());
        assert!(continuous_lo_exact(&[(1.0, 1.0)], 0.0, 1.0).is_err());
        assert!(continuous_lo_exact(&[(0.0, 1.0)], 0.0, 0.0).is_err());
        assert!(matches!(
            continuous_lo_exact(&[(0.0, 1.0); 5], 0.0, 1.0),
            Err(LabError::OverCap { .. })
        ));
    }
}
