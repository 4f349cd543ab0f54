//! Scale certificates: disjoint coordinate groups `I_1, …, I_s` with
//! `‖v|I_s‖ ≥ δ` and `‖v|I_i‖ ≥ 100·‖v|I_{i+1}‖`.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Ratio between consecutive group norms.
pub const SCALE_RATIO: f64 = 100.0;
/// Relative slack used when verifying float certificates.
pub const NORM_TOLERANCE: f64 = 1e-9;
/// Longest vector accepted by [`brute_max_scales`].
pub const BRUTE_FORCE_CAP: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalesError {
    #[error("malformed certificate: {0}")]
    Malformed(String),
    #[error("vector length {len} exceeds the exhaustive-search cap {cap}")]
    TooLong { len: usize, cap: usize },
    #[error("delta must be positive and finite, got {0}")]
    InvalidDelta(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleCertificate {
    pub delta: f64,
    /// `I_1, …, I_s`, largest scale first.
    pub groups: Vec<Vec<usize>>,
    pub group_norms: Vec<f64>,
}

impl ScaleCertificate {
    /// Certificate for `groups` over `v`, caching the group norms.
    pub fn new(v: &[f64], delta: f64, groups: Vec<Vec<usize>>) -> Self {
        let group_norms = groups.iter().map(|g| norm_of(v, g)).collect();
        Self {
            delta,
            groups,
            group_norms,
        }
    }

    pub fn empty(delta: f64) -> Self {
        Self {
            delta,
            groups: Vec::new(),
            group_norms: Vec::new(),
        }
    }

    pub fn scales(&self) -> usize {
        self.groups.len()
    }

    /// Drops the `⌈log_100(δ′/δ)⌉` smallest groups, yielding a certificate
    /// for scales of size at least `δ′ ≥ δ`.
    pub fn truncated_for(&self, delta_prime: f64) -> Self {
        assert!(delta_prime >= self.delta, "δ′ must be at least δ");
        let drop = (delta_prime / self.delta).log(SCALE_RATIO).ceil().max(0.0) as usize;
        let keep = self.groups.len().saturating_sub(drop);
        Self {
            delta: delta_prime,
            groups: self.groups[..keep].to_vec(),
            group_norms: self.group_norms[..keep].to_vec(),
        }
    }
}

/// Euclidean norm of `v` restricted to `idx`, without overflow.
fn norm_of(v: &[f64], idx: &[usize]) -> f64 {
    idx.iter().fold(0.0f64, |acc, &i| acc.hypot(v[i]))
}

fn check_groups(len: usize, groups: &[Vec<usize>]) -> Result<(), ScalesError> {
    let mut seen = vec![false; len];
    for (g, group) in groups.iter().enumerate() {
        for &i in group {
            if i >= len {
                return Err(ScalesError::Malformed(format!(
                    "index {i} in group {g} out of range for length {len}"
                )));
            }
            if seen[i] {
                return Err(ScalesError::Malformed(format!(
                    "index {i} appears in more than one group"
                )));
            }
            seen[i] = true;
        }
    }
    Ok(())
}

/// Checks the three certificate conditions with relative slack
/// [`NORM_TOLERANCE`]. Structural problems are errors, not `false`.
pub fn verify_certificate(v: &[f64], cert: &ScaleCertificate) -> Result<bool, ScalesError> {
    check_groups(v.len(), &cert.groups)?;
    let norms: Vec<f64> = cert.groups.iter().map(|g| norm_of(v, g)).collect();
    let slack = 1.0 - NORM_TOLERANCE;
    let Some(last) = norms.last() else {
        return Ok(true);
    };
    if *last < cert.delta * slack {
        return Ok(false);
    }
    Ok(norms.windows(2).all(|w| w[0] >= SCALE_RATIO * w[1] * slack))
}

/// Exact version of [`verify_certificate`] on rational entries, comparing
/// squared norms.
pub fn verify_certificate_exact(
    v: &[BigRational],
    groups: &[Vec<usize>],
    delta: &BigRational,
) -> Result<bool, ScalesError> {
    check_groups(v.len(), groups)?;
    let sq: Vec<BigRational> = groups
        .iter()
        .map(|g| {
            g.iter()
                .map(|&i| &v[i] * &v[i])
                .fold(BigRational::zero(), |a, b| a + b)
        })
        .collect();
    let Some(last) = sq.last() else {
        return Ok(true);
    };
    if *last < delta * delta {
        return Ok(false);
    }
    let ratio2 = BigRational::from_integer(10_000.into());
    Ok(sq.windows(2).all(|w| w[0] >= &ratio2 * &w[1]))
}

fn check_delta(delta: f64) -> Result<(), ScalesError> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(ScalesError::InvalidDelta(delta))
    }
}

/// Greedy chain over magnitudes sorted in decreasing order, starting with
/// the base group `order[start..end]` and growing leftwards.
fn chain_from(mags: &[f64], order: &[usize], start: usize, end: usize) -> Vec<(usize, usize)> {
    let mut groups = vec![(start, end)];
    let mut prev = order[start..end]
        .iter()
        .fold(0.0f64, |a, &i| a.hypot(mags[i]));
    let mut right = start;
    'outer: while right > 0 {
        let mut norm = 0.0f64;
        let mut left = right;
        while left > 0 {
            left -= 1;
            norm = norm.hypot(mags[order[left]]);
            if norm >= SCALE_RATIO * prev {
                groups.push((left, right));
                prev = norm;
                right = left;
                continue 'outer;
            }
        }
        break;
    }
    groups.reverse();
    groups
}

/// Certifying lower bound on the number of scales of size at least `delta`.
///
/// Coordinates are sorted by decreasing magnitude. For each suffix with norm
/// at least `delta` (taken as the last group), earlier groups are the
/// shortest blocks to the left reaching 100 times the following group's
/// norm; the longest resulting chain is returned. Every suffix admissible for
/// `delta′ ≥ delta` is admissible for `delta`, so the count is monotone.
pub fn greedy_scales(v: &[f64], delta: f64) -> Result<(usize, ScaleCertificate), ScalesError> {
    check_delta(delta)?;
    let mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| mags[j].total_cmp(&mags[i]).then(i.cmp(&j)));
    let m = order.len();

    let mut best: Vec<(usize, usize)> = Vec::new();
    let mut suffix = 0.0f64;
    let mut start = m;
    while start > 0 {
        start -= 1;
        suffix = suffix.hypot(mags[order[start]]);
        if suffix < delta {
            continue;
        }
        let chain = chain_from(&mags, &order, start, m);
        if chain.len() > best.len() {
            best = chain;
        }
        // a chain from an earlier start has at most `start` groups
        if best.len() >= start {
            break;
        }
    }
    let groups: Vec<Vec<usize>> = best
        .iter()
        .map(|&(a, b)| {
            let mut g = order[a..b].to_vec();
            g.sort_unstable();
            g
        })
        .collect();
    let cert = ScaleCertificate::new(v, delta, groups);
    Ok((cert.scales(), cert))
}

/// Exact maximum number of scales of size at least `delta`, by dynamic
/// programming over used-coordinate sets (`len ≤ 12`).
pub fn brute_max_scales(v: &[f64], delta: f64) -> Result<usize, ScalesError> {
    check_delta(delta)?;
    let n = v.len();
    if n > BRUTE_FORCE_CAP {
        return Err(ScalesError::TooLong {
            len: n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let exact: Vec<BigRational> = v
        .iter()
        .map(|&x| BigRational::from_float(x).expect("finite entries"))
        .collect();
    let full = 1usize << n;
    let mut sq = vec![BigRational::zero(); full];
    for mask in 1..full {
        let low = mask.trailing_zeros() as usize;
        sq[mask] = &sq[mask & (mask - 1)] + &exact[low] * &exact[low];
    }
    let delta2 = {
        let d = BigRational::from_float(delta).expect("finite delta");
        &d * &d
    };
    let ratio2 = BigRational::from_integer(10_000.into());

    // best[used][c]: smallest squared norm of the latest (smallest-scale
    // so far) group over chains of c groups using exactly `used`; groups
    // are added from I_s towards I_1
    let mut best: Vec<Vec<Option<BigRational>>> = vec![vec![None; n + 1]; full];
    let mut answer = 0;
    for g in 1..full {
        if sq[g] >= delta2 {
            best[g][1] = Some(sq[g].clone());
            answer = 1;
        }
    }
    let mut masks: Vec<usize> = (1..full).collect();
    masks.sort_by_key(|m| m.count_ones());
    for used in masks {
        for c in 1..=n {
            let Some(last) = best[used][c].clone() else {
                continue;
            };
            answer = answer.max(c);
            let need = &ratio2 * &last;
            let free = (full - 1) & !used;
            let mut g = free;
            while g != 0 {
                if sq[g] >= need {
                    let slot = &mut best[used | g][c + 1];
                    if slot.as_ref().is_none_or(|cur| sq[g] < *cur) {
                        *slot = Some(sq[g].clone());
                    }
                }
                g = (g - 1) & free;
            }
        }
    }
    Ok(answer)
}

/// `⌈log_100(ratio)⌉` for `ratio ≥ 1`, in exact arithmetic.
pub fn groups_to_drop(ratio: &BigRational) -> usize {
    assert!(!ratio.is_negative() && !ratio.is_zero());
    let hundred = BigRational::from_integer(100.into());
    let mut k = 0;
    let mut p = BigRational::one();
    while p < *ratio {
        p *= &hundred;
        k += 1;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn verify_examples() {
        let v = [10000.0, 100.0, 1.0];
        let cert = ScaleCertificate::new(&v, 1.0, vec![vec![0], vec![1], vec![2]]);
        assert!(verify_certificate(&v, &cert).unwrap());
        let cert = ScaleCertificate::new(&[1.0, 1.0], 1.0, vec![vec![0], vec![1]]);
        assert!(!verify_certificate(&[1.0, 1.0], &cert).unwrap());
        let cert = ScaleCertificate::new(&[1.0, 1.0], 1.0, vec![vec![0], vec![0]]);
        assert!(matches!(
            verify_certificate(&[1.0, 1.0], &cert),
            Err(ScalesError::Malformed(_))
        ));
        let cert = ScaleCertificate {
            delta: 1.0,
            groups: vec![vec![5]],
            group_norms: vec![1.0],
        };
        assert!(matches!(
            verify_certificate(&[1.0], &cert),
            Err(ScalesError::Malformed(_))
        ));
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_scales(&[10000.0, 100.0, 1.0], 1.0).unwrap().0, 3);
        assert_eq!(greedy_scales(&[1.0; 4], 1.0).unwrap().0, 1);
        assert_eq!(greedy_scales(&[], 1.0).unwrap().0, 0);
        assert_eq!(greedy_scales(&[0.5], 1.0).unwrap().0, 0);
        assert!(greedy_scales(&[1.0], 0.0).is_err());
    }

    #[test]
    fn brute_examples() {
        assert_eq!(brute_max_scales(&[10000.0, 100.0, 1.0], 1.0).unwrap(), 3);
        assert_eq!(brute_max_scales(&[5.0], 1.0).unwrap(), 1);
        assert_eq!(brute_max_scales(&[0.5], 1.0).unwrap(), 0);
        assert_eq!(brute_max_scales(&[1.0; 4], 1.0).unwrap(), 1);
        assert!(matches!(
            brute_max_scales(&[1.0; 13], 1.0),
            Err(ScalesError::TooLong { .. })
        ));
    }

    #[test]
    fn shortest_suffix_overshoot_is_avoided() {
        // the shortest suffix for δ = 1 is {1.5}, which forces the group
        // {6000, 50} and leaves 600010 just short of a third scale
        let v = [600010.0, 6000.0, 50.0, 1.5];
        assert_eq!(greedy_scales(&v, 1.6).unwrap().0, 3);
        assert_eq!(greedy_scales(&v, 1.0).unwrap().0, 3);
        assert_eq!(brute_max_scales(&v, 1.0).unwrap(), 3);
    }

    #[test]
    fn exact_verification_handles_huge_scales() {
        let s = 200;
        let hundred = BigRational::from_integer(100.into());
        let v: Vec<BigRational> = (0..s)
            .map(|i| num_traits::pow(hundred.clone(), s - 1 - i))
            .collect();
        let groups: Vec<Vec<usize>> = (0..s).map(|i| vec![i]).collect();
        assert!(verify_certificate_exact(&v, &groups, &BigRational::one()).unwrap());
        let mut bad = v.clone();
        bad[0] = bad[1].clone();
        assert!(!verify_certificate_exact(&bad, &groups, &BigRational::one()).unwrap());
    }

    #[test]
    fn drop_counts() {
        let r = |p: i64, q: i64| BigRational::new(p.into(), q.into());
        assert_eq!(groups_to_drop(&r(1, 1)), 0);
        assert_eq!(groups_to_drop(&r(100, 1)), 1);
        assert_eq!(groups_to_drop(&r(101, 1)), 2);
        assert_eq!(groups_to_drop(&r(3, 2)), 1);
    }

    fn entries() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(
            (-4i32..=6, 1.0f64..10.0, any::<bool>())
                .prop_map(|(e, m, neg)| if neg { -m } else { m } * 10f64.powi(e)),
            0..=9,
        )
    }

    proptest! {
        #[test]
        fn greedy_is_sound_and_dominated(v in entries(), d in prop::sample::select(vec![0.1, 1.0, 10.0])) {
            let (s, cert) = greedy_scales(&v, d).unwrap();
            prop_assert!(verify_certificate(&v, &cert).unwrap());
            prop_assert_eq!(s, cert.scales());
            prop_assert!(s <= brute_max_scales(&v, d).unwrap());
        }

        #[test]
        fn greedy_is_monotone_in_delta(v in entries(), d in 0.01f64..100.0, f in 1.0f64..1000.0) {
            let s = greedy_scales(&v, d).unwrap().0;
            let s2 = greedy_scales(&v, d * f).unwrap().0;
            prop_assert!(s2 <= s);
        }

        #[test]
        fn truncation_keeps_validity(v in entries(), d in 0.01f64..10.0, f in 1.0f64..1e6) {
            let (_, cert) = greedy_scales(&v, d).unwrap();
            let t = cert.truncated_for(d * f);
            prop_assert!(verify_certificate(&v, &t).unwrap());
        }
    }
}
