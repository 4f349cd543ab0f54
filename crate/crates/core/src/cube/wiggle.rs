//! Perturbing coefficients so that every coefficient is nonzero and all
//! absolute values in a collection are pairwise distinct, without changing
//! which edges any hyperplane slices.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::scan::{compare_slicing, IntPlane};
use super::{Collection, CubeError, Hyperplane, HyperplaneSet, DEFAULT_ENUMERATION_CAP};

/// What a certified perturbation must preserve for each hyperplane.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Certification {
    /// The sliced-edge set is unchanged.
    #[default]
    SameSlices,
    /// Every edge sliced before is still sliced; degenerate edges may
    /// become sliced. An edge unsliced by the result is unsliced by the
    /// input.
    KeepSliced,
}

#[derive(Debug, Clone)]
pub struct WiggleOptions {
    /// Base perturbation size ε; individual perturbations are `ε·2^{−r}`.
    pub magnitude: BigRational,
    /// Certify each hyperplane by exact enumeration.
    pub verify: bool,
    pub cap: usize,
    /// How many times ε may be halved for one hyperplane before giving up.
    pub max_halvings: u32,
    pub certification: Certification,
}

impl Default for WiggleOptions {
    fn default() -> Self {
        Self {
            magnitude: BigRational::new(BigInt::one(), BigInt::from(1024)),
            verify: true,
            cap: DEFAULT_ENUMERATION_CAP,
            max_halvings: 32,
            certification: Certification::SameSlices,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WiggledCoefficient {
    pub hyperplane: usize,
    pub index: usize,
    pub original: BigRational,
    pub replacement: BigRational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WiggleOutcome {
    pub collection: HyperplaneSet<BigRational>,
    pub changed: Vec<WiggledCoefficient>,
    /// Whether every modified hyperplane was checked by enumeration.
    pub certified: bool,
    /// Degenerate incidences that became cleanly unsliced.
    pub resolved_degenerate: u64,
    /// Degenerate incidences still present after wiggling (modified planes).
    pub remaining_degenerate: u64,
}

/// Returns a generic copy of an exact collection. The offsets `b` are never
/// changed, so vertices lying on a hyperplane stay reported as degenerate
/// unless a coefficient perturbation moves them off it.
pub fn wiggle(collection: &Collection, opts: &WiggleOptions) -> Result<WiggleOutcome, CubeError> {
    let Collection::Exact(set) = collection else {
        return Err(CubeError::NotExact);
    };
    let n = set.dim();
    if opts.verify && n > opts.cap {
        return Err(CubeError::OverCap { n, cap: opts.cap });
    }
    assert!(
        opts.magnitude.is_positive(),
        "wiggle magnitude must be positive"
    );

    // first occurrence of each nonzero |value| is kept as is
    let mut taken: BTreeSet<BigRational> = BTreeSet::new();
    let mut needs: Vec<Vec<usize>> = vec![Vec::new(); set.len()];
    for (i, h) in set.planes().iter().enumerate() {
        for (j, c) in h.coefficients().iter().enumerate() {
            if c.is_zero() || !taken.insert(c.abs()) {
                needs[i].push(j);
            }
        }
    }

    let mut planes = Vec::with_capacity(set.len());
    let mut changed = Vec::new();
    let mut resolved = 0;
    let mut remaining = 0;
    let mut r: u32 = 0;
    for (i, h) in set.planes().iter().enumerate() {
        if needs[i].is_empty() {
            planes.push(h.clone());
            continue;
        }
        let original = IntPlane::new(h, 0.0).expect("exact coefficients");
        let mut eps = opts.magnitude.clone();
        let mut attempts = 0;
        let mut accepted = None;
        'search: for _ in 0..=opts.max_halvings {
            for direction in [1i32, -1] {
                attempts += 1;
                let (candidate, picks, next_r) = perturb(h, &needs[i], &eps, direction, r, &taken);
                if !opts.verify {
                    accepted = Some((candidate, picks, next_r, None));
                    break 'search;
                }
                let int = IntPlane::new(&candidate, 0.0).expect("exact coefficients");
                let cmp = compare_slicing(&original, &int, n);
                let ok = match opts.certification {
                    Certification::SameSlices => cmp.mismatches == 0,
                    Certification::KeepSliced => cmp.lost == 0,
                };
                if ok {
                    accepted = Some((candidate, picks, next_r, Some(cmp)));
                    break 'search;
                }
            }
            eps /= BigRational::from_integer(2.into());
        }
        let Some((candidate, picks, next_r, cmp)) = accepted else {
            return Err(CubeError::WiggleUncertified {
                hyperplane: i,
                attempts,
            });
        };
        r = next_r;
        if let Some(cmp) = cmp {
            resolved += cmp.resolved;
            remaining += cmp.still_degenerate;
        }
        for (j, value) in picks {
            taken.insert(value.abs());
            changed.push(WiggledCoefficient {
                hyperplane: i,
                index: j,
                original: h.coefficients()[j].clone(),
                replacement: value,
            });
        }
        planes.push(candidate);
    }
    Ok(WiggleOutcome {
        collection: HyperplaneSet::new(n, planes)?,
        changed,
        certified: opts.verify,
        resolved_degenerate: resolved,
        remaining_degenerate: remaining,
    })
}

/// Perturbs the listed coefficients of `h`. A zero becomes `±ε·2^{−r}`; a
/// nonzero `c` becomes `c ± sign(c)·ε·2^{−r}` with its sign kept. `r` is
/// advanced until each new absolute value is fresh.
fn perturb(
    h: &Hyperplane<BigRational>,
    indices: &[usize],
    eps: &BigRational,
    direction: i32,
    mut r: u32,
    taken: &BTreeSet<BigRational>,
) -> (Hyperplane<BigRational>, Vec<(usize, BigRational)>, u32) {
    let mut a = h.coefficients().to_vec();
    let mut local: BTreeSet<BigRational> = BTreeSet::new();
    let mut picks = Vec::with_capacity(indices.len());
    let dir = BigRational::from_integer(direction.into());
    for &j in indices {
        let c = &h.coefficients()[j];
        let value = loop {
            let step = eps / BigRational::from_integer(BigInt::one() << r);
            r += 1;
            let v = if c.is_zero() {
                &dir * &step
            } else {
                c + &dir * c.signum() * &step
            };
            let ok = !v.is_zero()
                && (c.is_zero() || v.signum() == c.signum())
                && !taken.contains(&v.abs())
                && !local.contains(&v.abs());
            if ok {
                break v;
            }
        };
        local.insert(value.abs());
        a[j] = value.clone();
        picks.push((j, value));
    }
    let plane = Hyperplane::new(a, h.offset().clone()).expect("same dimension");
    (plane, picks, r)
}
