//! Case files for the lab: a JSON object with a `checks` array.
//!
//! ```json
//! {"checks": [
//!   {"kind": "elo", "v": [1, 1, 1, 1], "b": 0, "t": 1, "p": [0, 0, 0, "1/4"]},
//!   {"kind": "elo", "ones": 400, "t": 1},
//!   {"kind": "many_scales", "geometric": 100, "delta": 1, "b": 0},
//!   {"kind": "many_scales", "v": ["1000", "10"], "delta": 1, "groups": [[0], [1]]},
//!   {"kind": "continuous", "intervals": [[-1, 1], [-1, 1]], "b": 0, "t": 0.1},
//!   {"kind": "chernoff", "intervals": [[0, 1]], "repeat": 100, "t": [10, 20]},
//!   {"kind": "hyperplane_claims", "n": 40000, "offsets": [0, 60], "seed": 1}
//! ]}
//! ```
//!
//! Exact-valued fields accept numbers or `"p/q"` strings. Any check may set
//! `trials` to override the run's default.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Deserialize;
use serde_json::Value;

use super::{
    check_chernoff, check_continuous_lo, check_hyperplane_claims, check_lo_bound,
    check_many_scales, geometric_vector, precondition, ClaimInstance, EstimateReport, LabError,
    LoCase, McConfig,
};
use crate::rational::parse_rational;
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "Value")]
struct Exact(BigRational);

impl TryFrom<Value> for Exact {
    type Error = String;

    fn try_from(v: Value) -> Result<Self, String> {
        let text = match v {
            Value::Number(n) => n.to_string(),
            Value::String(s) => s,
            other => return Err(format!("expected a number or \"p/q\" string, got {other}")),
        };
        parse_rational(&text).map(Exact).map_err(|e| e.to_string())
    }
}

fn exact(v: Vec<Exact>) -> Vec<BigRational> {
    v.into_iter().map(|e| e.0).collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Check {
    Elo {
        #[serde(default)]
        v: Option<Vec<Exact>>,
        /// Shorthand for `v` = all ones of this length.
        #[serde(default)]
        ones: Option<usize>,
        #[serde(default)]
        b: Option<Exact>,
        t: Exact,
        #[serde(default)]
        p: Option<Vec<Exact>>,
        #[serde(default)]
        trials: Option<u64>,
    },
    ManyScales {
        #[serde(default)]
        v: Option<Vec<Exact>>,
        /// Shorthand for the geometric vector with this many scales.
        #[serde(default)]
        geometric: Option<usize>,
        delta: Exact,
        #[serde(default)]
        b: Option<Exact>,
        #[serde(default)]
        groups: Option<Vec<Vec<usize>>>,
        #[serde(default)]
        trials: Option<u64>,
    },
    Continuous {
        intervals: Vec<(f64, f64)>,
        b: f64,
        t: f64,
        #[serde(default)]
        trials: Option<u64>,
    },
    Chernoff {
        intervals: Vec<(f64, f64)>,
        #[serde(default)]
        repeat: Option<usize>,
        t: Vec<f64>,
        #[serde(default)]
        trials: Option<u64>,
    },
    HyperplaneClaims {
        n: usize,
        offsets: Vec<f64>,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        trials: Option<u64>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseFile {
    checks: Vec<Check>,
}

/// Parses a case file and runs every check; check `i` draws from a seed
/// derived from `cfg.seed` and `i`.
pub fn run_case_file(text: &str, cfg: &McConfig) -> Result<Vec<EstimateReport>, LabError> {
    let file: CaseFile =
        serde_json::from_str(text).map_err(|e| precondition(format!("case file: {e}")))?;
    let mut out = Vec::new();
    for (idx, check) in file.checks.into_iter().enumerate() {
        let sub = |trials: Option<u64>| McConfig {
            trials: trials.unwrap_or(cfg.trials),
            seed: derive_seed(cfg.seed, &format!("case {idx}")),
            confidence: cfg.confidence,
        };
        let mut reports = run_check(check, sub).map_err(|e| match e {
            LabError::Precondition(msg) => precondition(format!("check {idx}: {msg}")),
            other => other,
        })?;
        for r in &mut reports {
            r.quantity = format!("#{idx} {}", r.quantity);
        }
        out.extend(reports);
    }
    Ok(out)
}

fn run_check(
    check: Check,
    sub: impl Fn(Option<u64>) -> McConfig,
) -> Result<Vec<EstimateReport>, LabError> {
    Ok(match check {
        Check::Elo {
            v,
            ones,
            b,
            t,
            p,
            trials,
        } => {
            let v = match (v, ones) {
                (Some(v), None) => exact(v),
                (None, Some(m)) => vec![BigRational::one(); m],
                _ => return Err(precondition("give exactly one of `v`, `ones`")),
            };
            let p = p
                .map(exact)
                .unwrap_or_else(|| vec![BigRational::zero(); v.len()]);
            let case = LoCase {
                v,
                b: b.map_or_else(BigRational::zero, |b| b.0),
                t: t.0,
                p,
            };
            check_lo_bound(&[case], &sub(trials))?
        }
        Check::ManyScales {
            v,
            geometric,
            delta,
            b,
            groups,
            trials,
        } => {
            let (v, groups) = match (v, geometric) {
                (Some(v), None) => (exact(v), groups),
                (None, Some(s)) => (
                    geometric_vector(s, &delta.0),
                    groups.or_else(|| Some((0..s).map(|i| vec![i]).collect())),
                ),
                _ => return Err(precondition("give exactly one of `v`, `geometric`")),
            };
            let b = b.map_or_else(BigRational::zero, |b| b.0);
            vec![check_many_scales(&v, &b, &delta.0, groups, &sub(trials))?]
        }
        Check::Continuous {
            intervals,
            b,
            t,
            trials,
        } => {
            vec![check_continuous_lo(&intervals, b, t, &sub(trials))?]
        }
        Check::Chernoff {
            intervals,
            repeat,
            t,
            trials,
        } => {
            let intervals: Vec<(f64, f64)> = match repeat {
                Some(r) => intervals
                    .iter()
                    .copied()
                    .cycle()
                    .take(intervals.len() * r)
                    .collect(),
                None => intervals,
            };
            check_chernoff(&intervals, &t, &sub(trials))?
        }
        Check::HyperplaneClaims {
            n,
            offsets,
            seed,
            trials,
        } => {
            let inst = ClaimInstance::synthetic(n, &offsets, seed);
            check_hyperplane_claims(&inst, &sub(trials))?
        }
    })
}
