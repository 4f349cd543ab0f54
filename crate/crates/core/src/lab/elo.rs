use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use super::{precondition, EstimateReport, LabError, McConfig};
use crate::rational::{common_denominator, scaled_integers, to_f64};
use crate::rng::{count_events, Streams};

/// Largest dimension enumerated exactly.
pub const EXACT_DIMENSION_CAP: usize = 20;

/// One anticoncentration case: `P[|⟨x, v⟩ − b| < t]` for `x ∼ μ_p`, where
/// `x_i = 1` with probability `(1 + p_i)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoCase {
    pub v: Vec<BigRational>,
    pub b: BigRational,
    pub t: BigRational,
    pub p: Vec<BigRational>,
}

impl LoCase {
    /// Converts exactly; panics on non-finite input.
    pub fn from_f64(v: &[f64], b: f64, t: f64, p: &[f64]) -> Self {
        let r = |x: f64| crate::rational::from_f64(x).expect("finite value");
        Self {
            v: v.iter().map(|&x| r(x)).collect(),
            b: r(b),
            t: r(t),
            p: p.iter().map(|&x| r(x)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// Number of entries with `|v_i| ≥ t`.
    pub fn large_entries(&self) -> usize {
        self.v.iter().filter(|x| x.abs() >= self.t).count()
    }

    pub fn bias_sup(&self) -> BigRational {
        self.p
            .iter()
            .map(Signed::abs)
            .max()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn bound(&self) -> Option<f64> {
        match self.large_entries() {
            0 => None,
            m => Some(10.0 / (m as f64).sqrt()),
        }
    }

    fn validate(&self) -> Result<(), LabError> {
        if self.p.len() != self.v.len() {
            return Err(precondition(format!(
                "bias vector has length {}, expected {}",
                self.p.len(),
                self.v.len()
            )));
        }
        if !self.t.is_positive() {
            return Err(precondition("t must be positive"));
        }
        if self.bias_sup() > BigRational::one() {
            return Err(precondition("bias entries must satisfy |p_i| ≤ 1"));
        }
        Ok(())
    }
}

fn to_i128(x: &BigInt) -> Result<i128, LabError> {
    x.to_i128()
        .ok_or_else(|| precondition("scaled coefficients too large for exact enumeration"))
}

struct Enumeration {
    values: Vec<i128>,
    plus: Vec<BigInt>,
    minus: Vec<BigInt>,
    /// Σ_{j ≥ k} |values[j]|.
    reach: Vec<i128>,
    /// Π_{j ≥ k} (plus[j] + minus[j]).
    mass: Vec<BigInt>,
    lo: i128,
    hi: i128,
    total: BigInt,
}

impl Enumeration {
    fn walk(&mut self, k: usize, s: i128, w: BigInt) {
        let r = self.reach[k];
        if s + r <= self.lo || s - r >= self.hi {
            return;
        }
        if s - r > self.lo && s + r < self.hi {
            self.total += w * &self.mass[k];
            return;
        }
        // r > 0 here, so k < len
        let v = self.values[k];
        if !self.plus[k].is_zero() {
            let w1 = &w * &self.plus[k];
            self.walk(k + 1, s + v, w1);
        }
        if !self.minus[k].is_zero() {
            let w2 = w * &self.minus[k];
            self.walk(k + 1, s - v, w2);
        }
    }
}

/// Exact `P[|⟨x, v⟩ − b| < t]` by enumerating sign vectors, with subtrees
/// whose partial sums are already decided summed in closed form.
pub fn exact_lo_probability(case: &LoCase) -> Result<BigRational, LabError> {
    case.validate()?;
    let m = case.dim();
    if m > EXACT_DIMENSION_CAP {
        return Err(LabError::OverCap {
            got: m,
            cap: EXACT_DIMENSION_CAP,
        });
    }
    let scale = common_denominator(case.v.iter().chain([&case.b, &case.t]));
    let ints = scaled_integers(case.v.iter().chain([&case.b, &case.t]), &scale);
    let ints = ints.iter().map(to_i128).collect::<Result<Vec<_>, _>>()?;
    let (b, t) = (ints[m], ints[m + 1]);

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(ints[i].unsigned_abs()));
    let values: Vec<i128> = order.iter().map(|&i| ints[i]).collect();
    // x_i = ±1 with weights (s ± r)/(2s) for p_i = r/s
    let plus: Vec<BigInt> = order
        .iter()
        .map(|&i| case.p[i].denom() + case.p[i].numer())
        .collect();
    let minus: Vec<BigInt> = order
        .iter()
        .map(|&i| case.p[i].denom() - case.p[i].numer())
        .collect();
    let mut reach = vec![0i128; m + 1];
    let mut mass = vec![BigInt::one(); m + 1];
    for k in (0..m).rev() {
        reach[k] = reach[k + 1]
            .checked_add(values[k].abs())
            .ok_or_else(|| precondition("coefficient sum overflows exact enumeration"))?;
        mass[k] = &mass[k + 1] * (&plus[k] + &minus[k]);
    }
    let denominator = mass[0].clone();
    let mut e = Enumeration {
        values,
        plus,
        minus,
        reach,
        mass,
        lo: b - t,
        hi: b + t,
        total: BigInt::zero(),
    };
    e.walk(0, 0, BigInt::one());
    Ok(BigRational::new(e.total, denominator))
}

/// Monte Carlo estimate of the same probability, reported against the
/// `10/√m̃` bound (`m̃` = number of entries with `|v_i| ≥ t`).
pub fn lo_monte_carlo(
    case: &LoCase,
    cfg: &McConfig,
    label: &str,
) -> Result<EstimateReport, LabError> {
    case.validate()?;
    cfg.check()?;
    let v: Vec<f64> = case.v.iter().map(to_f64).collect();
    let up: Vec<f64> = case.p.iter().map(|p| (1.0 + to_f64(p)) / 2.0).collect();
    let (b, t) = (to_f64(&case.b), to_f64(&case.t));
    let streams = Streams::for_purpose(cfg.seed, "lab/elo");
    let hits = count_events(&streams, cfg.trials, |rng| {
        let s: f64 = v
            .iter()
            .zip(&up)
            .map(|(&vi, &q)| if rng.random::<f64>() < q { vi } else { -vi })
            .sum();
        (s - b).abs() < t
    });
    Ok(EstimateReport::from_count(
        label,
        hits,
        cfg.trials,
        case.bound().unwrap_or(f64::INFINITY),
        cfg.confidence,
    ))
}

/// Evaluates every case against `10/√m̃`: exactly up to
/// [`EXACT_DIMENSION_CAP`] coordinates, by Monte Carlo above.
pub fn check_lo_bound(cases: &[LoCase], cfg: &McConfig) -> Result<Vec<EstimateReport>, LabError> {
    let half = BigRational::new(1.into(), 2.into());
    cases
        .iter()
        .enumerate()
        .map(|(idx, case)| {
            case.validate()?;
            if case.bias_sup() > half {
                return Err(precondition(format!(
                    "case {idx}: bias entries must satisfy |p_i| ≤ 1/2"
                )));
            }
            let Some(bound) = case.bound() else {
                return Err(precondition(format!("case {idx}: no entry has |v_i| ≥ t")));
            };
            let label = format!(
                "elo m={} m~={} b={} t={}",
                case.dim(),
                case.large_entries(),
                crate::rational::format_rational(&case.b),
                crate::rational::format_rational(&case.t)
            );
            if case.dim() <= EXACT_DIMENSION_CAP {
                let exact = to_f64(&exact_lo_probability(case)?);
                Ok(EstimateReport::exact(label, exact, bound))
            } else {
                let cfg = McConfig {
                    seed: crate::rng::derive_seed(cfg.seed, &idx.to_string()),
                    ..*cfg
                };
                lo_monte_carlo(case, &cfg, &label)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::Verdict;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    /// Plain enumeration of all 2^m outcomes in rationals.
    fn brute(case: &LoCase) -> BigRational {
        let m = case.dim();
        let mut total = BigRational::zero();
        for mask in 0u32..1 << m {
            let mut s = BigRational::zero();
            let mut w = BigRational::one();
            for i in 0..m {
                let half = (BigRational::one() + &case.p[i]) / q(2, 1);
                if mask >> i & 1 == 1 {
                    s += &case.v[i];
                    w *= half;
                } else {
                    s -= &case.v[i];
                    w *= BigRational::one() - half;
                }
            }
            if (s - &case.b).abs() < case.t {
                total += w;
            }
        }
        total
    }

    #[test]
    fn all_ones() {
        let c = LoCase::from_f64(&[1.0; 4], 0.0, 1.0, &[0.0; 4]);
        assert_eq!(exact_lo_probability(&c).unwrap(), q(6, 16));
        let c = LoCase::from_f64(&[1.0; 16], 0.0, 0.5, &[0.0; 16]);
        assert_eq!(exact_lo_probability(&c).unwrap(), q(12870, 65536));
        let c = LoCase::from_f64(&[1.0], 0.0, 0.5, &[0.0]);
        assert!(exact_lo_probability(&c).unwrap().is_zero());
        let c = LoCase::from_f64(&[1.0, -2.5, 3.0], 0.5, 7.5, &[0.2, -0.3, 0.0]);
        assert!(exact_lo_probability(&c).unwrap().is_one());
    }

    #[test]
    fn matches_brute_force_with_bias() {
        let cases = [
            LoCase {
                v: vec![q(1, 3), q(-2, 5), q(1, 1), q(3, 7), q(1, 3)],
                b: q(1, 5),
                t: q(1, 2),
                p: vec![q(1, 2), q(-1, 3), q(0, 1), q(1, 1), q(-1, 1)],
            },
            LoCase::from_f64(
                &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
                3.0,
                2.0,
                &[0.25, -0.5, 0.0, 0.1, 0.3, -0.2],
            ),
            LoCase::from_f64(&[1.0; 7], 1.0, 1.0, &[0.5; 7]),
        ];
        for c in &cases {
            assert_eq!(exact_lo_probability(c).unwrap(), brute(c));
        }
    }

    #[test]
    fn errors() {
        let c = LoCase::from_f64(&[1.0; 21], 0.0, 1.0, &[0.0; 21]);
        assert!(matches!(
            exact_lo_probability(&c),
            Err(LabError::OverCap { .. })
        ));
        let c = LoCase::from_f64(&[1.0; 3], 0.0, 1.0, &[0.6, 0.0, 0.0]);
        assert!(check_lo_bound(&[c], &McConfig::default()).is_err());
        let c = LoCase::from_f64(&[0.1; 3], 0.0, 1.0, &[0.0; 3]);
        assert!(check_lo_bound(&[c], &McConfig::default()).is_err());
        let c = LoCase::from_f64(&[1.0; 3], 0.0, 0.0, &[0.0; 3]);
        assert!(exact_lo_probability(&c).is_err());
    }

    #[test]
    fn bound_report_flags_vacuous() {
        let c = LoCase::from_f64(&[1.0; 16], 0.0, 1.0, &[0.0; 16]);
        let r = &check_lo_bound(&[c], &McConfig::default()).unwrap()[0];
        assert_eq!(r.verdict, Verdict::Vacuous);
        assert_eq!(r.paper_bound, 2.5);
        assert!((r.estimate - 12870.0 / 65536.0).abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_path_above_cap() {
        let c = LoCase::from_f64(&[1.0; 400], 0.0, 1.0, &[0.0; 400]);
        let r = &check_lo_bound(&[c], &McConfig::new(20_000, 3)).unwrap()[0];
        assert_eq!(r.paper_bound, 0.5);
        assert_eq!(r.verdict, Verdict::Pass);
        let central = (1..=200u32).fold(BigRational::one(), |acc, k| {
            acc * q(200 + k as i64, 4 * k as i64)
        });
        assert!(r.contains(to_f64(&central)));
    }
}
