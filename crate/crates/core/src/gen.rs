//! Instance generators.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::cube::{levels_construction, Collection, CubeError, Hyperplane, HyperplaneSet};
use crate::matrix::norm;
use crate::rng::Streams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenKind {
    /// The `n` parallel planes `⟨1, x⟩ = c` between consecutive levels.
    Levels,
    /// Gaussian normals scaled to unit length, offsets `N(0, 1)`.
    RandomGaussian,
    /// Gaussian normals scaled to unit length, offsets 0.
    RandomUnit,
}

impl FromStr for GenKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "levels" => Ok(Self::Levels),
            "random-gaussian" => Ok(Self::RandomGaussian),
            "random-unit" => Ok(Self::RandomUnit),
            other => Err(format!(
                "unknown kind `{other}` (expected levels, random-gaussian or random-unit)"
            )),
        }
    }
}

impl fmt::Display for GenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Levels => "levels",
            Self::RandomGaussian => "random-gaussian",
            Self::RandomUnit => "random-unit",
        })
    }
}

/// Levels are exact and ignore `k`; random kinds are float collections of
/// `k` planes drawn from `seed`.
pub fn generate(kind: GenKind, n: usize, k: usize, seed: u64) -> Result<Collection, CubeError> {
    if n < 2 {
        return Err(CubeError::EmptyDimension);
    }
    if kind == GenKind::Levels {
        return Ok(Collection::Exact(levels_construction(n)?));
    }
    let mut rng = Streams::for_purpose(seed, "gen").stream(0);
    let planes = (0..k)
        .map(|_| {
            let mut a: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let s = norm(&a);
            for x in &mut a {
                *x /= s;
            }
            let b = match kind {
                GenKind::RandomGaussian => rng.sample(StandardNormal),
                _ => 0.0,
            };
            Hyperplane::new(a, b)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Collection::Float(HyperplaneSet::new(n, planes)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::to_f64;

    #[test]
    fn levels_offsets() {
        let Collection::Exact(s) = generate(GenKind::Levels, 3, 0, 0).unwrap() else {
            panic!("levels are exact");
        };
        let b: Vec<f64> = s.planes().iter().map(|p| to_f64(p.offset())).collect();
        assert_eq!(b, [-2.0, 0.0, 2.0]);
        assert_eq!(generate(GenKind::Levels, 2, 9, 0).unwrap().len(), 2);
        assert!(generate(GenKind::Levels, 1, 0, 0).is_err());
    }

    #[test]
    fn random_rows_are_unit() {
        for kind in [GenKind::RandomUnit, GenKind::RandomGaussian] {
            let c = generate(kind, 8, 5, 42).unwrap();
            let (rows, b) = c.to_f64_rows();
            assert_eq!(rows.len(), 5);
            for r in &rows {
                assert!((norm(r) - 1.0).abs() <= 1e-12);
            }
            assert_eq!(b.iter().all(|&x| x == 0.0), kind == GenKind::RandomUnit);
            assert_eq!(generate(kind, 8, 5, 42).unwrap(), c);
            assert_ne!(generate(kind, 8, 5, 43).unwrap(), c);
        }
        assert!("diagonal".parse::<GenKind>().is_err());
        assert_eq!(
            "random-unit".parse::<GenKind>().unwrap().to_string(),
            "random-unit"
        );
    }
}
