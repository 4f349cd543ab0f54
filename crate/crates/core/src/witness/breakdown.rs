//! Monte Carlo estimates of the per-index event probabilities and the
//! expected number of close indices by type, each paired with its
//! analytic bound at the run's parameters.
//!
//! With `β` the bad threshold, `γ` the close threshold and `H + 1` levels,
//! the bounds used are
//!
//! | quantity | bound |
//! |---|---|
//! | `P[i bad]` | `4β / (ρ₀√S_i)` |
//! | `P[E1(j,t)]` | `4tβ / (ρ₀√S_j)` |
//! | `P[j close ∧ activated]` | `16βγ(H+1) / (ρ₀√S_j)` |
//! | `P[j bad ∧ close]` | `16βγ / (ρ₀ρ₁√S_j‖v_j‖²)` |
//! | `P[i bad ∧ E1(j,t)]` | `400tβ² / (ρ₀²√S_j)` |
//! | `P[‖X‖∞ > 1/2]` | `Σ_c 2e^{−1/(18ρ₀²c²)} + 2e^{−1/(72ρ₁²c²)}` over column norms `c` |
//!
//! and for close counts by type: (1) sum of the bad-and-close bounds,
//! (2) `2e^{−(β−γ)²/6}` per index, (3) close-and-activated summed over heavy
//! indices, (4) `40βγδℓ / (ρ₀ρ₁)`, (5) per index the smaller of
//! `1200ρ₁²β²√S_j/ρ₀²` and the close-and-activated bound.

use serde::Serialize;

use super::{
    classify, gram_stats, sample_point, GramStats, SamplerParams, WitnessError, TYPE_COUNT,
};
use crate::matrix::Matrix;
use crate::rng::{run_trials, Absorb, Streams};
use crate::stats::{clopper_pearson, z_value, Moments, DEFAULT_CONFIDENCE};

const UNIT_TOLERANCE: f64 = 1e-6;
/// Largest `|⟨v_i, v_j⟩|` for which the two-index bound applies.
const PAIR_DOT_LIMIT: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct BreakdownConfig {
    pub trials: u64,
    pub seed: u64,
    pub confidence: f64,
    /// Number of `(i, j)` pairs reported for the two-index event.
    pub max_pairs: usize,
    /// Activation exponents `h` reported for `E1(j, 2^h)`.
    pub e1_levels: Vec<u32>,
    pub gram_cap: usize,
}

impl Default for BreakdownConfig {
    fn default() -> Self {
        Self {
            trials: 10_000,
            seed: 0,
            confidence: DEFAULT_CONFIDENCE,
            max_pairs: 8,
            e1_levels: vec![0, 1],
            gram_cap: super::DEFAULT_GRAM_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakdownRow {
    pub quantity: String,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub paper_bound: Option<f64>,
    pub vacuous: bool,
}

impl BreakdownRow {
    fn new(
        quantity: String,
        (estimate, ci_lo, ci_hi): (f64, f64, f64),
        bound: Option<f64>,
        ceiling: f64,
    ) -> Self {
        Self {
            quantity,
            estimate,
            ci_lo,
            ci_hi,
            paper_bound: bound,
            vacuous: bound.is_none_or(|b| !(b < ceiling)),
        }
    }

    /// Whether the whole confidence interval lies above a non-vacuous bound.
    pub fn fails(&self) -> bool {
        matches!(self.paper_bound, Some(b) if !self.vacuous && self.ci_lo > b)
    }

    /// Whether a non-vacuous bound is exceeded by more than `halfwidths`
    /// confidence half-widths.
    pub fn exceeds_bound(&self, halfwidths: f64) -> bool {
        match self.paper_bound {
            Some(b) if !self.vacuous => {
                let half = (self.ci_hi - self.ci_lo) / 2.0;
                self.estimate > b + halfwidths * half
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakdownReport {
    pub trials: u64,
    pub seed: u64,
    pub confidence: f64,
    pub params: SamplerParams,
    pub unit_rows: bool,
    pub rows: Vec<BreakdownRow>,
    /// Close indices with no type label, summed over trials.
    pub unlabeled_close: u64,
    /// Bad indices not flagged near-bad, summed over trials.
    pub bad_not_near_bad: u64,
}

impl BreakdownReport {
    pub fn row(&self, quantity: &str) -> Option<&BreakdownRow> {
        self.rows.iter().find(|r| r.quantity == quantity)
    }
}

#[derive(Clone)]
struct Acc {
    close: Moments,
    close_by_type: Vec<Moments>,
    bad: Vec<u64>,
    e1: Vec<u64>,
    unbounded: u64,
    close_activated: Vec<u64>,
    bad_close: Vec<u64>,
    pairs: Vec<u64>,
    unlabeled: u64,
    bad_not_near: u64,
}

impl Absorb for Acc {
    fn absorb(&mut self, o: Self) {
        self.close.absorb(o.close);
        self.close_by_type.absorb(o.close_by_type);
        self.bad.absorb(o.bad);
        self.e1.absorb(o.e1);
        self.unbounded.absorb(o.unbounded);
        self.close_activated.absorb(o.close_activated);
        self.bad_close.absorb(o.bad_close);
        self.pairs.absorb(o.pairs);
        self.unlabeled.absorb(o.unlabeled);
        self.bad_not_near.absorb(o.bad_not_near);
    }
}

fn select_pairs(v: &Matrix, stats: &GramStats, limit: usize) -> Vec<(usize, usize)> {
    let l = v.rows();
    let mut out = Vec::new();
    'outer: for j in 0..l {
        for i in 0..l {
            if i != j && stats.inner(v, i, j).abs() <= PAIR_DOT_LIMIT {
                out.push((i, j));
                if out.len() == limit {
                    break 'outer;
                }
            }
        }
    }
    out
}

pub fn close_type_breakdown(
    v: &Matrix,
    lambda: &[f64],
    params: &SamplerParams,
    config: &BreakdownConfig,
) -> Result<BreakdownReport, WitnessError> {
    if config.trials == 0 {
        return Err(WitnessError::Params("trials must be at least 1".into()));
    }
    let l = v.rows();
    if lambda.len() != l {
        return Err(WitnessError::Shape(format!(
            "{} offsets for {l} rows",
            lambda.len()
        )));
    }
    params.validate()?;
    let stats = gram_stats(v, config.gram_cap);
    let levels: Vec<u32> = config
        .e1_levels
        .iter()
        .copied()
        .filter(|&h| h <= params.levels)
        .collect();
    let pairs = select_pairs(v, &stats, config.max_pairs);
    let streams = Streams::for_purpose(config.seed, "breakdown");

    let init = Acc {
        close: Moments::default(),
        close_by_type: vec![Moments::default(); TYPE_COUNT],
        bad: vec![0; l],
        e1: vec![0; l * levels.len()],
        unbounded: 0,
        close_activated: vec![0; l],
        bad_close: vec![0; l],
        pairs: vec![0; pairs.len()],
        unlabeled: 0,
        bad_not_near: 0,
    };
    let acc = run_trials(
        &streams,
        config.trials,
        init,
        |rng, _| {
            let s = sample_point(v, lambda, params, rng).expect("shapes checked");
            let c = classify(&s, v, &stats, params);
            (s.sup_norm() > 0.5, c)
        },
        |acc: &mut Acc, (unbounded, c)| {
            acc.unbounded += unbounded as u64;
            let mut by_type = [0usize; TYPE_COUNT];
            for j in 0..l {
                if c.bad[j] {
                    acc.bad[j] += 1;
                    acc.bad_not_near += !c.near_bad[j] as u64;
                }
                for (k, &h) in levels.iter().enumerate() {
                    acc.e1[j * levels.len() + k] += c.e1[j] >> h & 1;
                }
                if c.close[j] {
                    if c.types[j] == 0 {
                        acc.unlabeled += 1;
                    }
                    for (t, count) in by_type.iter_mut().enumerate() {
                        *count += c.has_type(j, t + 1) as usize;
                    }
                    acc.close_activated[j] += c.activated[j] as u64;
                    acc.bad_close[j] += c.bad[j] as u64;
                }
            }
            for (p, &(i, j)) in pairs.iter().enumerate() {
                acc.pairs[p] += (c.bad[i] && c.e1[j] & 1 == 1) as u64;
            }
            acc.close.push(c.close_count() as f64);
            for (m, &count) in acc.close_by_type.iter_mut().zip(&by_type) {
                m.push(count as f64);
            }
        },
    );

    let n = config.trials;
    let conf = config.confidence;
    let z = z_value(conf);
    let prob = |hits: u64| {
        let (lo, hi) = clopper_pearson(hits, n, conf);
        (hits as f64 / n as f64, lo, hi)
    };
    let mean = |m: &Moments| {
        let h = z * m.std_error();
        (m.mean, (m.mean - h).max(0.0), m.mean + h)
    };

    let unit_rows = stats
        .row_norms
        .iter()
        .all(|r| (r - 1.0).abs() <= UNIT_TOLERANCE);
    let (beta, gamma, r0, r1) = (
        params.bad_threshold,
        params.close_threshold,
        params.rho0,
        params.rho1,
    );
    let lvl = params.level_count() as f64;
    let sq = |j: usize| stats.s[j].sqrt();
    let bad_bound = |i: usize| 4.0 * beta / (r0 * sq(i));
    let close_act_bound = |j: usize| 16.0 * beta * gamma * lvl / (r0 * sq(j));
    let bad_close_bound =
        |j: usize| 16.0 * beta * gamma / (r0 * r1 * sq(j) * stats.row_norms[j].powi(2));
    let pair_ok = unit_rows && params.near_bad_dot <= PAIR_DOT_LIMIT;
    let near_ok = unit_rows && params.near_bad_dot >= PAIR_DOT_LIMIT;

    // type 2: levels above H must be inactive for every index
    let cap = 4f64.powi(params.levels as i32);
    let type2_each = if beta > gamma {
        2.0 * (-(beta - gamma).powi(2) / 6.0).exp()
    } else {
        1.0
    };
    let type2: f64 = (0..l)
        .map(|j| {
            if r1 * r1 * stats.s[j] / 3.0 <= cap {
                type2_each.min(1.0)
            } else {
                1.0
            }
        })
        .sum();
    let type_bounds: [Option<f64>; TYPE_COUNT] = [
        Some((0..l).map(|j| bad_close_bound(j).min(1.0)).sum()),
        Some(type2),
        Some(
            (0..l)
                .filter(|&j| stats.s[j] >= params.delta_heavy.powi(2))
                .map(|j| close_act_bound(j).min(1.0))
                .sum(),
        ),
        near_ok.then(|| 40.0 * beta * gamma * params.delta_heavy * l as f64 / (r0 * r1)),
        pair_ok.then(|| {
            (0..l)
                .map(|j| {
                    (1200.0 * r1 * r1 * beta * beta * sq(j) / (r0 * r0))
                        .min(close_act_bound(j))
                        .min(1.0)
                })
                .sum()
        }),
    ];
    let total_bound = type_bounds.iter().try_fold(0.0, |s, b| b.map(|b| s + b));
    let lf = l as f64;

    let mut rows = vec![BreakdownRow::new(
        "E[close]".into(),
        mean(&acc.close),
        total_bound,
        lf,
    )];
    for (t, m) in acc.close_by_type.iter().enumerate() {
        rows.push(BreakdownRow::new(
            format!("E[close type {}]", t + 1),
            mean(m),
            type_bounds[t],
            lf,
        ));
    }
    let unbounded_bound: f64 = stats
        .column_norms
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            2.0 * (-1.0 / (18.0 * r0 * r0 * c * c)).exp()
                + 2.0 * (-1.0 / (72.0 * r1 * r1 * c * c)).exp()
        })
        .sum();
    rows.push(BreakdownRow::new(
        "P[sup|X|>1/2]".into(),
        prob(acc.unbounded),
        Some(unbounded_bound),
        1.0,
    ));
    for i in 0..l {
        rows.push(BreakdownRow::new(
            format!("P[bad {i}]"),
            prob(acc.bad[i]),
            Some(bad_bound(i)),
            1.0,
        ));
    }
    for j in 0..l {
        for (k, &h) in levels.iter().enumerate() {
            let t = params.level(h);
            rows.push(BreakdownRow::new(
                format!("P[E1 {j} t={t}]"),
                prob(acc.e1[j * levels.len() + k]),
                Some(4.0 * t * beta / (r0 * sq(j))),
                1.0,
            ));
        }
    }
    for j in 0..l {
        rows.push(BreakdownRow::new(
            format!("P[close&activated {j}]"),
            prob(acc.close_activated[j]),
            Some(close_act_bound(j)),
            1.0,
        ));
        rows.push(BreakdownRow::new(
            format!("P[bad&close {j}]"),
            prob(acc.bad_close[j]),
            Some(bad_close_bound(j)),
            1.0,
        ));
    }
    for (p, &(i, j)) in pairs.iter().enumerate() {
        rows.push(BreakdownRow::new(
            format!("P[bad {i}&E1 {j} t=1]"),
            prob(acc.pairs[p]),
            pair_ok.then(|| 400.0 * beta * beta / (r0 * r0 * sq(j))),
            1.0,
        ));
    }

    Ok(BreakdownReport {
        trials: n,
        seed: config.seed,
        confidence: conf,
        params: params.clone(),
        unit_rows,
        rows,
        unlabeled_close: acc.unlabeled,
        bad_not_near_bad: acc.bad_not_near,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::witness::ParamSpec;

    fn params(spec: &str, m: usize) -> SamplerParams {
        SamplerParams::resolve(&spec.parse::<ParamSpec>().unwrap(), m, false).unwrap()
    }

    #[test]
    fn single_uniform_bad_probability() {
        // P[|α| ≤ 0.1] = 0.1 exactly
        let v = Matrix::from_rows(vec![vec![1.0, 0.0, 0.0, 0.0]]).unwrap();
        let p = params("rho0=1,bad_threshold=0.1", 4);
        let cfg = BreakdownConfig {
            trials: 20_000,
            seed: 5,
            ..Default::default()
        };
        let r = close_type_breakdown(&v, &[0.0], &p, &cfg).unwrap();
        let row = r.row("P[bad 0]").unwrap();
        assert!(row.ci_lo <= 0.1 && 0.1 <= row.ci_hi, "{row:?}");
        assert_eq!(row.paper_bound, Some(0.4));
        assert!(!row.vacuous);
    }

    #[test]
    fn unreachable_offsets_leave_only_type_two() {
        let v = Matrix::from_rows(vec![vec![0.6, 0.8], vec![0.8, -0.6]]).unwrap();
        let p = params("rho0=1,bad_threshold=0.5,close_threshold=50", 2);
        let cfg = BreakdownConfig {
            trials: 3000,
            seed: 1,
            ..Default::default()
        };
        let r = close_type_breakdown(&v, &[10.0, -10.0], &p, &cfg).unwrap();
        for t in [1, 3, 4, 5] {
            assert_eq!(r.row(&format!("E[close type {t}]")).unwrap().estimate, 0.0);
        }
        assert_eq!(r.row("E[close type 2]").unwrap().estimate, 2.0);
        assert_eq!(r.unlabeled_close, 0);
    }

    #[test]
    fn zero_trials_rejected() {
        let v = Matrix::from_rows(vec![vec![1.0]]).unwrap();
        let p = params("rho0=1", 1);
        let cfg = BreakdownConfig {
            trials: 0,
            ..Default::default()
        };
        assert!(close_type_breakdown(&v, &[0.0], &p, &cfg).is_err());
    }
}
