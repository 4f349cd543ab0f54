use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::WitnessError;

/// Smallest dimension at which the default formulas are used as is.
pub const MIN_PAPER_DIMENSION: usize = 16;

/// Parsed `paper` or `key=value,...` parameter overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSpec {
    pub rho0: Option<f64>,
    pub rho1: Option<f64>,
    pub delta_heavy: Option<f64>,
    pub bad_threshold: Option<f64>,
    pub close_threshold: Option<f64>,
    pub near_bad_dot: Option<f64>,
    pub levels: Option<u32>,
}

impl ParamSpec {
    pub fn is_paper(&self) -> bool {
        *self == Self::default()
    }
}

impl FromStr for ParamSpec {
    type Err = WitnessError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let text = text.trim();
        let mut spec = Self::default();
        if text.is_empty() || text == "paper" {
            return Ok(spec);
        }
        for part in text.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| WitnessError::Params(format!("expected key=value, got `{part}`")))?;
            let value = value.trim();
            let float = || {
                value
                    .parse::<f64>()
                    .map_err(|_| WitnessError::Params(format!("bad value for {key}: `{value}`")))
            };
            match key.trim() {
                "rho0" => spec.rho0 = Some(float()?),
                "rho1" => spec.rho1 = Some(float()?),
                "delta_heavy" | "deltaHeavy" | "delta" => spec.delta_heavy = Some(float()?),
                "bad_threshold" | "badThreshold" => spec.bad_threshold = Some(float()?),
                "close_threshold" | "closeThreshold" => spec.close_threshold = Some(float()?),
                "near_bad_dot" | "nearBadDot" => spec.near_bad_dot = Some(float()?),
                "levels" | "activationLevels" | "H" => {
                    spec.levels = Some(value.parse().map_err(|_| {
                        WitnessError::Params(format!("bad value for {key}: `{value}`"))
                    })?)
                }
                other => return Err(WitnessError::Params(format!("unknown parameter `{other}`"))),
            }
        }
        Ok(spec)
    }
}

impl fmt::Display for ParamSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                parts.push(format!("{k}={v}"));
            }
        };
        push("rho0", self.rho0.map(|x| x.to_string()));
        push("rho1", self.rho1.map(|x| x.to_string()));
        push("delta_heavy", self.delta_heavy.map(|x| x.to_string()));
        push("bad_threshold", self.bad_threshold.map(|x| x.to_string()));
        push(
            "close_threshold",
            self.close_threshold.map(|x| x.to_string()),
        );
        push("near_bad_dot", self.near_bad_dot.map(|x| x.to_string()));
        push("levels", self.levels.map(|x| x.to_string()));
        if parts.is_empty() {
            write!(f, "paper")
        } else {
            write!(f, "{}", parts.join(","))
        }
    }
}

/// Sampler and classification parameters for dimension `m`.
///
/// Defaults: `ρ₀ = m^{3/19}(ln m)^{−3/19}`, `ρ₁ = m^{1/19}(ln m)^{−1/19}`,
/// `δ = m^{1/38}(ln m)^{9/19}`, bad threshold `10√ln m`, close threshold
/// `5√ln m`, near-bad dot product `0.9`, activation levels `t = 2^h` for
/// `h = 0..=⌈log₂ m⌉`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplerParams {
    pub m: usize,
    /// Dimension at which the default formulas were evaluated.
    pub m_formula: usize,
    pub rho0: f64,
    pub rho1: f64,
    pub delta_heavy: f64,
    pub bad_threshold: f64,
    pub close_threshold: f64,
    pub near_bad_dot: f64,
    /// Highest activation exponent `H`; levels are `t = 2^h`, `h = 0..=H`.
    pub levels: u32,
    pub overrides: Vec<String>,
}

impl SamplerParams {
    /// Default formulas at `m` (requires `m ≥ 16`).
    pub fn paper(m: usize) -> Result<Self, WitnessError> {
        if m < MIN_PAPER_DIMENSION {
            return Err(WitnessError::Params(format!(
                "default parameters need m ≥ {MIN_PAPER_DIMENSION}, got {m}"
            )));
        }
        Ok(Self::formulas(m, m))
    }

    fn formulas(m: usize, at: usize) -> Self {
        let mf = at as f64;
        let l = mf.ln();
        Self {
            m,
            m_formula: at,
            rho0: mf.powf(3.0 / 19.0) * l.powf(-3.0 / 19.0),
            rho1: mf.powf(1.0 / 19.0) * l.powf(-1.0 / 19.0),
            delta_heavy: mf.powf(1.0 / 38.0) * l.powf(9.0 / 19.0),
            bad_threshold: 10.0 * l.sqrt(),
            close_threshold: 5.0 * l.sqrt(),
            near_bad_dot: 0.9,
            levels: mf.log2().ceil() as u32,
            overrides: Vec::new(),
        }
    }

    /// Defaults with `spec` applied. Below `m = 16` the defaults are
    /// evaluated at 16 when `floor_small` is set or any override is given;
    /// otherwise small `m` is an error.
    pub fn resolve(spec: &ParamSpec, m: usize, floor_small: bool) -> Result<Self, WitnessError> {
        let mut p = if m >= MIN_PAPER_DIMENSION {
            Self::formulas(m, m)
        } else if floor_small || !spec.is_paper() {
            Self::formulas(m, MIN_PAPER_DIMENSION)
        } else {
            return Self::paper(m);
        };
        let mut names = Vec::new();
        for (name, value) in [
            ("rho0", spec.rho0),
            ("rho1", spec.rho1),
            ("delta_heavy", spec.delta_heavy),
            ("bad_threshold", spec.bad_threshold),
            ("close_threshold", spec.close_threshold),
            ("near_bad_dot", spec.near_bad_dot),
        ] {
            if let Some(v) = value {
                match name {
                    "rho0" => p.rho0 = v,
                    "rho1" => p.rho1 = v,
                    "delta_heavy" => p.delta_heavy = v,
                    "bad_threshold" => p.bad_threshold = v,
                    "close_threshold" => p.close_threshold = v,
                    _ => p.near_bad_dot = v,
                }
                names.push(name.to_string());
            }
        }
        if let Some(h) = spec.levels {
            p.levels = h;
            names.push("levels".to_string());
        }
        p.overrides = names;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), WitnessError> {
        let positive = [
            ("rho0", self.rho0),
            ("rho1", self.rho1),
            ("delta_heavy", self.delta_heavy),
            ("bad_threshold", self.bad_threshold),
            ("close_threshold", self.close_threshold),
            ("near_bad_dot", self.near_bad_dot),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(WitnessError::Params(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.levels > 62 {
            return Err(WitnessError::Params("levels must be at most 62".into()));
        }
        Ok(())
    }

    pub fn is_paper(&self) -> bool {
        self.overrides.is_empty() && self.m_formula == self.m
    }

    /// Activation level `t = 2^h`.
    pub fn level(&self, h: u32) -> f64 {
        (1u64 << h) as f64
    }

    pub fn level_count(&self) -> usize {
        self.levels as usize + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn paper_formulas() {
        let p = SamplerParams::paper(1024).unwrap();
        let l = 1024f64.ln();
        assert_relative_eq!(p.rho0, 1024f64.powf(3.0 / 19.0) / l.powf(3.0 / 19.0));
        assert_relative_eq!(p.rho1, (1024.0 / l).powf(1.0 / 19.0));
        assert_relative_eq!(p.delta_heavy, 1024f64.powf(1.0 / 38.0) * l.powf(9.0 / 19.0));
        assert_relative_eq!(p.bad_threshold, 10.0 * l.sqrt());
        assert_relative_eq!(p.close_threshold, 5.0 * l.sqrt());
        assert_eq!(p.levels, 10);
        assert_eq!(SamplerParams::paper(17).unwrap().levels, 5);
        assert!(SamplerParams::paper(15).is_err());
        assert!(p.is_paper());
    }

    #[test]
    fn overrides_are_stamped() {
        let spec: ParamSpec = "rho0=1,badThreshold=0.1,levels=3".parse().unwrap();
        let p = SamplerParams::resolve(&spec, 8, false).unwrap();
        assert_eq!(p.rho0, 1.0);
        assert_eq!(p.bad_threshold, 0.1);
        assert_eq!(p.levels, 3);
        assert_eq!(p.m_formula, 16);
        assert_eq!(p.overrides, vec!["rho0", "bad_threshold", "levels"]);
        assert_eq!(spec.to_string(), "rho0=1,bad_threshold=0.1,levels=3");
        assert!("nope=1".parse::<ParamSpec>().is_err());
        assert!(SamplerParams::resolve(&"rho0=-1".parse().unwrap(), 32, false).is_err());
        assert!(SamplerParams::resolve(&ParamSpec::default(), 8, false).is_err());
        assert_eq!(
            SamplerParams::resolve(&ParamSpec::default(), 8, true)
                .unwrap()
                .m_formula,
            16
        );
    }
}
