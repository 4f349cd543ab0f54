use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;

use super::{precondition, EstimateReport, LabError, McConfig};
use crate::rational::{common_denominator, scaled_integers, to_f64};
use crate::rng::{count_events, random_signs, Streams};
use crate::scales::{greedy_scales, verify_certificate_exact};

/// Fewest scales for which the bound is checked.
pub const MIN_SCALES: usize = 100;

pub fn many_scales_bound(s: usize) -> f64 {
    (-(s as f64) / 100.0).exp()
}

/// `v_i = 10δ · 100^{s−i}` for `i = 1..=s`: one coordinate per scale.
pub fn geometric_vector(s: usize, delta: &BigRational) -> Vec<BigRational> {
    let hundred = BigInt::from(100);
    (1..=s)
        .map(|i| {
            delta
                * BigRational::from_integer(
                    BigInt::from(10) * num_traits::pow(hundred.clone(), s - i),
                )
        })
        .collect()
}

/// Estimates `P[|⟨x, v⟩ − b| ≤ δ]` for uniform `x ∈ {±1}^m` and compares it
/// with `e^{−s/100}`, where `s` is the number of groups in a certificate of
/// scales of size at least `10δ`. Without `groups` a certificate is found
/// greedily from the f64 magnitudes.
pub fn check_many_scales(
    v: &[BigRational],
    b: &BigRational,
    delta: &BigRational,
    groups: Option<Vec<Vec<usize>>>,
    cfg: &McConfig,
) -> Result<EstimateReport, LabError> {
    cfg.check()?;
    if !delta.is_positive() {
        return Err(precondition("delta must be positive"));
    }
    let size = delta * BigRational::from_integer(10.into());
    let groups = match groups {
        Some(g) => g,
        None => {
            let f: Vec<f64> = v.iter().map(to_f64).collect();
            if f.iter().any(|x| !x.is_finite()) {
                return Err(precondition(
                    "entries exceed f64 range; supply a certificate",
                ));
            }
            greedy_scales(&f, to_f64(&size))?.1.groups
        }
    };
    if !verify_certificate_exact(v, &groups, &size)? {
        return Err(precondition("certificate does not verify"));
    }
    let s = groups.len();
    if s < MIN_SCALES {
        return Err(precondition(format!(
            "{s} scales certified, need at least {MIN_SCALES}"
        )));
    }

    let scale = common_denominator(v.iter().chain([b, delta]));
    let ints = scaled_integers(v.iter().chain([b, delta]), &scale);
    let m = v.len();
    let (coef, bb, dd) = (&ints[..m], &ints[m], &ints[m + 1]);
    let streams = Streams::for_purpose(cfg.seed, "lab/many-scales");
    let hits = count_events(&streams, cfg.trials, |rng| {
        let signs = random_signs(rng, m);
        let mut sum = -bb.clone();
        for (c, &x) in coef.iter().zip(&signs) {
            if x > 0 {
                sum += c;
            } else {
                sum -= c;
            }
        }
        sum.abs() <= *dd
    });
    Ok(EstimateReport::from_count(
        format!("many-scales s={s} m={m}"),
        hits,
        cfg.trials,
        many_scales_bound(s),
        cfg.confidence,
    ))
}
