//! Row rescaling and row/column partition of a matrix with nonzero entries.
//!
//! Produces `[k] = K1 ⊔ K2`, `[n] = N1 ⊔ N2` and a row rescaling `A′` such
//! that every row has unit norm on `N1`, every `N1` column has norm at most
//! `W` on `K1`, and every `K2` row restricted to `N2` contains at least `S`
//! scales of size at least 100.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::scales::{self, ScaleCertificate};

/// Relative tolerance of the verifier's norm comparisons.
pub const VERIFY_TOLERANCE: f64 = 1e-9;
/// Size of the scales certified for `K2` rows.
pub const CERTIFIED_SCALE: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecomposeError {
    #[error("matrix must have at least one row and two columns, got {rows}x{cols}")]
    Shape { rows: usize, cols: usize },
    #[error("entry ({row}, {col}) is zero")]
    ZeroEntry { row: usize, col: usize },
    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("rescaling row {row} left the floating-point range")]
    Numeric { row: usize },
    #[error("invalid constants: {0}")]
    Constants(String),
}

/// `S`, `W`, `τ` together with which of them deviate from the defaults
/// `S = ⌈250 ln n⌉`, `W = 10⁴·√(k ln n / n)`, `τ = 1/10001`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompConstants {
    pub s: usize,
    pub w: f64,
    pub tau: f64,
    /// Names of overridden constants (`S`, `W`, `tau`), empty for the defaults.
    pub overrides: Vec<String>,
}

impl DecompConstants {
    pub fn paper(k: usize, n: usize) -> Self {
        let ln_n = (n as f64).ln();
        Self {
            s: (250.0 * ln_n).ceil() as usize,
            w: 1e4 * (k as f64 * ln_n / n as f64).sqrt(),
            tau: 1.0 / 10001.0,
            overrides: Vec::new(),
        }
    }

    pub fn is_paper(&self) -> bool {
        self.overrides.is_empty()
    }

    pub fn validate(&self) -> Result<(), DecomposeError> {
        if self.s < 1 {
            return Err(DecomposeError::Constants("S must be at least 1".into()));
        }
        if !(self.w > 0.0 && self.w.is_finite()) {
            return Err(DecomposeError::Constants("W must be positive".into()));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(DecomposeError::Constants("tau must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Defaults for `(k, n)` with the overrides of `spec` applied.
    pub fn resolve(spec: &ConstantsSpec, k: usize, n: usize) -> Result<Self, DecomposeError> {
        let mut c = Self::paper(k, n);
        if let Some(s) = spec.s {
            c.s = s;
            c.overrides.push("S".into());
        }
        if let Some(w) = spec.w {
            c.w = w;
            c.overrides.push("W".into());
        }
        if let Some(t) = spec.tau {
            c.tau = t;
            c.overrides.push("tau".into());
        }
        c.validate()?;
        Ok(c)
    }
}

/// Parsed `paper` or `S=..,W=..,tau=..` constant selection.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstantsSpec {
    pub s: Option<usize>,
    pub w: Option<f64>,
    pub tau: Option<f64>,
}

impl FromStr for ConstantsSpec {
    type Err = DecomposeError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let text = text.trim();
        let mut spec = Self::default();
        if text.is_empty() || text == "paper" {
            return Ok(spec);
        }
        for part in text.split(',') {
            let (key, value) = part.split_once('=').ok_or_else(|| {
                DecomposeError::Constants(format!("expected key=value, got `{part}`"))
            })?;
            let bad = || DecomposeError::Constants(format!("bad value for {key}: `{value}`"));
            match key.trim() {
                "S" | "s" => spec.s = Some(value.trim().parse().map_err(|_| bad())?),
                "W" | "w" => spec.w = Some(value.trim().parse().map_err(|_| bad())?),
                "tau" => spec.tau = Some(parse_fraction(value).ok_or_else(bad)?),
                other => {
                    return Err(DecomposeError::Constants(format!(
                        "unknown constant `{other}`"
                    )))
                }
            }
        }
        Ok(spec)
    }
}

impl fmt::Display for ConstantsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(s) = self.s {
            parts.push(format!("S={s}"));
        }
        if let Some(w) = self.w {
            parts.push(format!("W={w}"));
        }
        if let Some(t) = self.tau {
            parts.push(format!("tau={t}"));
        }
        if parts.is_empty() {
            write!(f, "paper")
        } else {
            write!(f, "{}", parts.join(","))
        }
    }
}

/// Accepts `0.5` as well as `1/2`.
fn parse_fraction(text: &str) -> Option<f64> {
    let text = text.trim();
    match text.split_once('/') {
        Some((p, q)) => Some(p.trim().parse::<f64>().ok()? / q.trim().parse::<f64>().ok()?),
        None => text.parse().ok(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowCertificate {
    pub row: usize,
    pub certificate: ScaleCertificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub k1: Vec<usize>,
    pub k2: Vec<usize>,
    pub n1: Vec<usize>,
    /// Columns of `N2` in the order they were moved.
    pub n2: Vec<usize>,
    pub rescaled: Matrix,
    /// `φ_i` with `a′_i = φ_i·a_i`.
    pub row_scale_factors: Vec<f64>,
    pub certificates: Vec<RowCertificate>,
    /// Per row, the sets `N1(h−1) \ N1(h)` at its renormalizations.
    pub history: Vec<Vec<Vec<usize>>>,
    pub iterations: usize,
    pub renormalizations: usize,
    pub constants: DecompConstants,
}

impl DecompositionResult {
    pub fn renormalization_count(&self, row: usize) -> usize {
        self.history[row].len()
    }
}

fn check_input(a: &Matrix) -> Result<(), DecomposeError> {
    if a.rows() < 1 || a.cols() < 2 {
        return Err(DecomposeError::Shape {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    for i in 0..a.rows() {
        for (j, &x) in a.row(i).iter().enumerate() {
            if !x.is_finite() {
                return Err(DecomposeError::NonFinite { row: i, col: j });
            }
            if x == 0.0 {
                return Err(DecomposeError::ZeroEntry { row: i, col: j });
            }
        }
    }
    Ok(())
}

struct State<'a> {
    a: &'a Matrix,
    phi: Vec<f64>,
    in_n1: Vec<bool>,
    in_k1: Vec<bool>,
    moved: Vec<usize>,
    /// Position in `moved` at each row's latest renormalization.
    mark: Vec<usize>,
    history: Vec<Vec<Vec<usize>>>,
    renorms: usize,
}

impl State<'_> {
    /// `Σ_{j∈N1} a_ij²` for the original row.
    fn raw_mass(&self, i: usize) -> f64 {
        self.a
            .row(i)
            .iter()
            .zip(&self.in_n1)
            .filter(|(_, &keep)| keep)
            .map(|(x, _)| x * x)
            .sum()
    }

    fn normalize(&mut self, i: usize) -> Result<(), DecomposeError> {
        let mass = self.raw_mass(i);
        let phi = mass.sqrt().recip();
        if mass == 0.0 || !phi.is_finite() {
            return Err(DecomposeError::Numeric { row: i });
        }
        self.phi[i] = phi;
        Ok(())
    }

    fn potential(&self) -> f64 {
        (0..self.a.rows())
            .filter(|&i| self.in_k1[i])
            .map(|i| self.phi[i] * self.phi[i] * self.raw_mass(i))
            .sum()
    }
}

/// Runs the partition algorithm. Columns are moved smallest index first and
/// qualifying rows are renormalized in increasing order.
pub fn decompose(
    a: &Matrix,
    constants: &DecompConstants,
) -> Result<DecompositionResult, DecomposeError> {
    check_input(a)?;
    constants.validate()?;
    let (k, n) = (a.rows(), a.cols());
    let mut st = State {
        a,
        phi: vec![1.0; k],
        in_n1: vec![true; n],
        in_k1: vec![true; k],
        moved: Vec::new(),
        mark: vec![0; k],
        history: vec![Vec::new(); k],
        renorms: 0,
    };
    for i in 0..k {
        st.normalize(i)?;
    }
    let threshold = constants.tau * constants.w * constants.w;
    let potential_slack = 1.0 + VERIFY_TOLERANCE;
    let mut iterations = 0;
    loop {
        let mut col_mass = vec![0.0f64; n];
        for i in (0..k).filter(|&i| st.in_k1[i]) {
            let phi2 = st.phi[i] * st.phi[i];
            for (j, x) in a.row(i).iter().enumerate() {
                col_mass[j] += phi2 * x * x;
            }
        }
        let Some(j) = (0..n).find(|&j| st.in_n1[j] && col_mass[j] >= threshold) else {
            break;
        };
        iterations += 1;
        st.in_n1[j] = false;
        st.moved.push(j);
        for i in 0..k {
            if !st.in_k1[i] {
                continue;
            }
            let mass = st.phi[i] * st.phi[i] * st.raw_mass(i);
            if mass <= constants.tau {
                st.normalize(i)?;
                st.history[i].push(st.moved[st.mark[i]..].to_vec());
                st.mark[i] = st.moved.len();
                st.renorms += 1;
            }
        }
        for i in 0..k {
            if st.in_k1[i] && st.history[i].len() >= constants.s {
                st.in_k1[i] = false;
            }
        }
        let phi_now = st.potential();
        assert!(
            phi_now <= (k + st.renorms) as f64 * potential_slack,
            "potential {phi_now} exceeds k + renormalizations = {}",
            k + st.renorms
        );
        assert!(
            st.moved.len() as f64 * threshold <= (k * (constants.s + 1)) as f64 * potential_slack,
            "|N2|·τW² exceeds k(S+1)"
        );
    }
    for i in 0..k {
        st.normalize(i)?;
    }

    let mut rescaled = Matrix::zeros(k, n);
    for i in 0..k {
        let phi = st.phi[i];
        for (dst, x) in rescaled.row_mut(i).iter_mut().zip(a.row(i)) {
            *dst = phi * x;
        }
    }
    let k2: Vec<usize> = (0..k).filter(|&i| !st.in_k1[i]).collect();
    let certificates = k2
        .iter()
        .map(|&i| {
            let mut groups = st.history[i].clone();
            for g in &mut groups {
                g.sort_unstable();
            }
            RowCertificate {
                row: i,
                certificate: ScaleCertificate::new(rescaled.row(i), CERTIFIED_SCALE, groups),
            }
        })
        .collect();
    Ok(DecompositionResult {
        k1: (0..k).filter(|&i| st.in_k1[i]).collect(),
        k2,
        n1: (0..n).filter(|&j| st.in_n1[j]).collect(),
        n2: st.moved,
        rescaled,
        row_scale_factors: st.phi,
        certificates,
        history: st.history,
        iterations,
        renormalizations: st.renorms,
        constants: constants.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Offending row or column indices, when the condition is per index.
    pub failing: Vec<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<ConditionCheck>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn condition(name: &'static str, failing: Vec<usize>, detail: String) -> ConditionCheck {
    ConditionCheck {
        name,
        passed: failing.is_empty(),
        failing,
        detail,
    }
}

fn partition_ok(size: usize, a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut count = vec![0u32; size];
    let mut bad = Vec::new();
    for &x in a.iter().chain(b) {
        if x >= size {
            bad.push(x);
        } else {
            count[x] += 1;
        }
    }
    bad.extend((0..size).filter(|&x| count[x] != 1));
    bad.sort_unstable();
    bad.dedup();
    bad
}

/// Rechecks every output condition from scratch.
pub fn verify_decomposition(
    a: &Matrix,
    r: &DecompositionResult,
    constants: &DecompConstants,
) -> VerificationReport {
    let (k, n) = (a.rows(), a.cols());
    let tol = VERIFY_TOLERANCE;
    let mut checks = Vec::new();

    let shape_ok = r.rescaled.rows() == k && r.rescaled.cols() == n;
    checks.push(ConditionCheck {
        name: "shape",
        passed: shape_ok,
        failing: Vec::new(),
        detail: format!(
            "A is {k}x{n}, A′ is {}x{}",
            r.rescaled.rows(),
            r.rescaled.cols()
        ),
    });
    if !shape_ok {
        return VerificationReport { checks };
    }

    let rows_bad = partition_ok(k, &r.k1, &r.k2);
    checks.push(condition(
        "row_partition",
        rows_bad,
        "K1 and K2 partition the rows".into(),
    ));
    let cols_bad = partition_ok(n, &r.n1, &r.n2);
    checks.push(condition(
        "column_partition",
        cols_bad,
        "N1 and N2 partition the columns".into(),
    ));

    let half = r.n2.len() * 2 <= n;
    checks.push(ConditionCheck {
        name: "n2_at_most_half",
        passed: half,
        failing: Vec::new(),
        detail: format!("|N2| = {}, n/2 = {}", r.n2.len(), n as f64 / 2.0),
    });

    let not_parallel: Vec<usize> = (0..k)
        .filter(|&i| {
            let phi = r.rescaled.get(i, 0) / a.get(i, 0);
            !(phi.is_finite() && phi != 0.0)
                || (0..n).any(|j| {
                    let expected = phi * a.get(i, j);
                    (r.rescaled.get(i, j) - expected).abs() > tol * expected.abs()
                })
        })
        .collect();
    checks.push(condition(
        "row_rescaling",
        not_parallel,
        "each a′_i is a nonzero multiple of a_i".into(),
    ));

    let in_n1 = membership(n, &r.n1);
    let in_k1 = membership(k, &r.k1);
    let bad_rows: Vec<usize> = (0..k)
        .filter(|&i| {
            let norm = restricted_norm(r.rescaled.row(i), &in_n1);
            (norm - 1.0).abs() > tol
        })
        .collect();
    checks.push(condition("row_norms", bad_rows, "‖a′_i|N1‖ = 1".into()));

    let w = constants.w;
    let bad_cols: Vec<usize> =
        r.n1.iter()
            .copied()
            .filter(|&j| {
                let mass: f64 = (0..k)
                    .filter(|&i| in_k1[i])
                    .map(|i| r.rescaled.get(i, j).powi(2))
                    .sum();
                mass.sqrt() > w * (1.0 + tol)
            })
            .collect();
    checks.push(condition(
        "column_norms",
        bad_cols,
        format!("‖a′_*j|K1‖ ≤ W = {w}"),
    ));

    let in_n2 = membership(n, &r.n2);
    let mut bad_certs = Vec::new();
    for &i in &r.k2 {
        let Some(rc) = r.certificates.iter().find(|c| c.row == i) else {
            bad_certs.push(i);
            continue;
        };
        let cert = &rc.certificate;
        let inside = cert.groups.iter().flatten().all(|&j| j < n && in_n2[j]);
        let valid = cert.delta >= CERTIFIED_SCALE
            && cert.scales() >= constants.s
            && inside
            && scales::verify_certificate(r.rescaled.row(i), cert) == Ok(true);
        if !valid {
            bad_certs.push(i);
        }
    }
    checks.push(condition(
        "k2_certificates",
        bad_certs,
        format!(
            "each K2 row has ≥ {} scales of size ≥ 100 on N2",
            constants.s
        ),
    ));

    let lhs = r.n2.len() as f64 * constants.tau * w * w;
    let rhs = (k * (constants.s + 1)) as f64;
    checks.push(ConditionCheck {
        name: "potential_bound",
        passed: lhs <= rhs * (1.0 + tol),
        failing: Vec::new(),
        detail: format!("|N2|·τW² = {lhs} ≤ k(S+1) = {rhs}"),
    });
    VerificationReport { checks }
}

fn membership(size: usize, idx: &[usize]) -> Vec<bool> {
    let mut m = vec![false; size];
    for &x in idx {
        if x < size {
            m[x] = true;
        }
    }
    m
}

fn restricted_norm(row: &[f64], keep: &[bool]) -> f64 {
    row.iter()
        .zip(keep)
        .filter(|(_, &k)| k)
        .map(|(x, _)| x * x)
        .sum::<f64>()
        .sqrt()
}
