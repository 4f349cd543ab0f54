//! Search for an unsliced edge: wiggle, decompose, fix the `N₂` signs,
//! sample a fractional point on `N₁`, round it and pick a flip coordinate.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{round_mu_p, sample_point, ParamSpec, SamplerParams, WitnessError};
use crate::cube::{wiggle, Certification, Collection, EdgeId, SliceOutcome, Vertex, WiggleOptions};
use crate::decompose::{decompose, ConstantsSpec, DecompConstants};
use crate::lab::ClaimInstance;
use crate::matrix::{dot, Matrix};
use crate::rng::{random_signs, StreamRng, Streams};

/// Attempts evaluated per parallel batch.
const BATCH: u64 = 256;

#[derive(Debug, Clone)]
pub struct WitnessConfig {
    pub seed: u64,
    pub budget: u64,
    pub params: ParamSpec,
    pub constants: ConstantsSpec,
    pub wiggle: WiggleOptions,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            budget: 10_000,
            params: ParamSpec::default(),
            constants: ConstantsSpec::default(),
            wiggle: WiggleOptions {
                certification: Certification::KeepSliced,
                ..WiggleOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessStatus {
    Found,
    Exhausted,
}

/// Where a failed attempt stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptStage {
    /// Some `K₂` row came within `2√n` of its offset on the `N₂` signs.
    WSearch,
    /// `‖X‖∞ > 1/2`.
    XBound,
    /// The rounded vertex was within `2|a_ih|` of some hyperplane.
    Rounding,
    /// The exact check against the input collection found a slicing plane.
    FinalCheck,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StageTally {
    pub w_search: u64,
    pub x_bound: u64,
    pub rounding: u64,
    pub final_check: u64,
}

impl StageTally {
    fn record(&mut self, stage: AttemptStage) {
        match stage {
            AttemptStage::WSearch => self.w_search += 1,
            AttemptStage::XBound => self.x_bound += 1,
            AttemptStage::Rounding => self.rounding += 1,
            AttemptStage::FinalCheck => self.final_check += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.w_search + self.x_bound + self.rounding + self.final_check
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessDiagnostics {
    pub k1: Vec<usize>,
    pub k2: Vec<usize>,
    pub n1: Vec<usize>,
    pub n2: Vec<usize>,
    pub params: Option<SamplerParams>,
    pub constants: Option<DecompConstants>,
    pub wiggled_coefficients: usize,
    pub wiggle_certified: bool,
    /// `K₁` rows within `5√ln m` of the accepted point (`m = |N₁|`).
    pub close_count: Option<usize>,
    /// `K₁` rows within `4√ln n` of the accepted point.
    pub near_count_n: Option<usize>,
    pub close_threshold_m: Option<f64>,
    pub threshold_n: f64,
    pub sup_norm: Option<f64>,
    /// Accepted attempts with some `K₂` row within 2 of the rounded vertex.
    pub k2_margin_violations: u64,
    /// Planes of the input collection through an endpoint of the edge.
    pub degenerate_planes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessResult {
    pub status: WitnessStatus,
    pub edge: Option<EdgeId>,
    /// Attempts consumed, including the successful one.
    pub attempts: u64,
    pub failures: StageTally,
    /// Signs on `N₂` (in `n2` order) of the successful attempt.
    pub w: Option<Vec<i8>>,
    /// Fractional point `X` on `N₁` (in `n1` order) of the successful attempt.
    pub point: Option<Vec<f64>>,
    pub diagnostics: WitnessDiagnostics,
}

struct Found {
    z: Vec<i8>,
    h: usize,
    w: Vec<i8>,
    x: Vec<f64>,
    close: usize,
    near_n: usize,
    sup: f64,
    k2_violation: bool,
    degenerate: usize,
}

/// The collection after wiggling and decomposition, ready for sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    /// Rescaled rows `a′_i = φ_i a_i` of the wiggled collection.
    pub a: Matrix,
    /// Rescaled offsets `b′_i = φ_i b_i`.
    pub b: Vec<f64>,
    pub k1: Vec<usize>,
    pub k2: Vec<usize>,
    /// Sorted.
    pub n1: Vec<usize>,
    /// Sorted.
    pub n2: Vec<usize>,
    /// `A′[K₁ × N₁]`.
    pub v: Matrix,
    pub params: SamplerParams,
    pub constants: DecompConstants,
    pub wiggled_coefficients: usize,
    pub wiggle_certified: bool,
}

impl Prepared {
    fn on_n2(&self, i: usize, w: &[i8]) -> f64 {
        let r = self.a.row(i);
        self.n2.iter().zip(w).map(|(&c, &s)| r[c] * s as f64).sum()
    }

    /// `λ_i = b′_i − ⟨a′_i|N₂, w⟩` for `i ∈ K₁`.
    pub fn lambda(&self, w: &[i8]) -> Vec<f64> {
        self.k1
            .iter()
            .map(|&i| self.b[i] - self.on_n2(i, w))
            .collect()
    }

    /// The `K₁` rows with a fractional point `x` on `N₁` and signs `w` on `N₂`.
    pub fn claim_instance(&self, x: &[f64], w: &[i8]) -> ClaimInstance {
        let all: Vec<usize> = (0..self.a.cols()).collect();
        ClaimInstance {
            a: self.a.select(&self.k1, &all),
            b: self.k1.iter().map(|&i| self.b[i]).collect(),
            n1: self.n1.clone(),
            n2: self.n2.clone(),
            x: x.to_vec(),
            w: w.to_vec(),
        }
    }
}

/// Wiggles, decomposes and resolves the sampler parameters at `m = |N₁|`.
pub fn prepare(collection: &Collection, config: &WitnessConfig) -> Result<Prepared, WitnessError> {
    if collection.is_empty() {
        return Err(WitnessError::Shape("empty collection".into()));
    }
    let n = collection.dim();
    let exact = Collection::Exact(collection.to_exact()?);
    let wiggled = wiggle(&exact, &config.wiggle)?;
    let (rows, offsets) = Collection::Exact(wiggled.collection).to_f64_rows();
    let raw = Matrix::from_rows(rows).map_err(|e| WitnessError::Shape(e.to_string()))?;
    let constants = DecompConstants::resolve(&config.constants, raw.rows(), n)?;
    let dec = decompose(&raw, &constants)?;
    let b = offsets
        .iter()
        .zip(&dec.row_scale_factors)
        .map(|(b, f)| b * f)
        .collect();
    let mut n1 = dec.n1;
    n1.sort_unstable();
    let mut n2 = dec.n2;
    n2.sort_unstable();
    let params = SamplerParams::resolve(&config.params, n1.len(), true)?;
    let v = dec.rescaled.select(&dec.k1, &n1);
    Ok(Prepared {
        a: dec.rescaled,
        b,
        k1: dec.k1,
        k2: dec.k2,
        n1,
        n2,
        v,
        params,
        constants,
        wiggled_coefficients: wiggled.changed.len(),
        wiggle_certified: wiggled.certified,
    })
}

struct Setup<'a> {
    original: &'a Collection,
    p: Prepared,
}

impl Setup<'_> {
    /// Exact re-check: no plane of the input collection slices the edge.
    fn final_check(&self, edge: &EdgeId) -> Result<Option<usize>, WitnessError> {
        let mut degenerate = 0;
        for i in 0..self.original.len() {
            match self.original.slices_edge(i, edge)? {
                SliceOutcome::Sliced => return Ok(None),
                SliceOutcome::Degenerate(_) => degenerate += 1,
                SliceOutcome::NotSliced => {}
            }
        }
        Ok(Some(degenerate))
    }

    fn attempt(&self, rng: &mut StreamRng) -> Result<Result<Found, AttemptStage>, WitnessError> {
        let p = &self.p;
        let n = p.a.cols();
        let two_root_n = 2.0 * (n as f64).sqrt();
        let w = random_signs(rng, p.n2.len());
        if p.k2
            .iter()
            .any(|&i| (p.on_n2(i, &w) - p.b[i]).abs() <= two_root_n)
        {
            return Ok(Err(AttemptStage::WSearch));
        }
        let lambda = p.lambda(&w);
        let sample = sample_point(&p.v, &lambda, &p.params, rng)?;
        let sup = sample.sup_norm();
        if sup > 0.5 {
            return Ok(Err(AttemptStage::XBound));
        }
        let y = round_mu_p(&sample.x, rng)?;
        let h = p.n1[rng.random_range(0..p.n1.len())];
        let mut z = vec![0i8; n];
        for (&c, &s) in p.n1.iter().zip(&y) {
            z[c] = s;
        }
        for (&c, &s) in p.n2.iter().zip(&w) {
            z[c] = s;
        }
        let zf: Vec<f64> = z.iter().map(|&s| s as f64).collect();
        let gap = |i: usize| (dot(p.a.row(i), &zf) - p.b[i]).abs();
        if (0..p.a.rows()).any(|i| gap(i) < 2.0 * p.a.get(i, h).abs()) {
            return Ok(Err(AttemptStage::Rounding));
        }
        let edge = EdgeId::new(&Vertex::from_signs(&z), h);
        let Some(degenerate) = self.final_check(&edge)? else {
            return Ok(Err(AttemptStage::FinalCheck));
        };
        let t_n = 4.0 * (n as f64).ln().sqrt();
        Ok(Ok(Found {
            close: sample
                .x_offsets
                .iter()
                .filter(|d| d.abs() <= p.params.close_threshold)
                .count(),
            near_n: sample.x_offsets.iter().filter(|d| d.abs() <= t_n).count(),
            k2_violation: p.k2.iter().any(|&i| gap(i) <= 2.0),
            x: sample.x,
            z,
            h,
            w,
            sup,
            degenerate,
        }))
    }
}

pub fn end_to_end_witness(
    collection: &Collection,
    config: &WitnessConfig,
) -> Result<WitnessResult, WitnessError> {
    let n = collection.dim();
    let streams = Streams::for_purpose(config.seed, "witness");
    let threshold_n = 4.0 * (n as f64).ln().sqrt();
    let mut diagnostics = WitnessDiagnostics {
        k1: Vec::new(),
        k2: Vec::new(),
        n1: (0..n).collect(),
        n2: Vec::new(),
        params: None,
        constants: None,
        wiggled_coefficients: 0,
        wiggle_certified: true,
        close_count: None,
        near_count_n: None,
        close_threshold_m: None,
        threshold_n,
        sup_norm: None,
        k2_margin_violations: 0,
        degenerate_planes: 0,
    };

    if collection.is_empty() {
        let mut rng = streams.stream(0);
        let z = random_signs(&mut rng, n);
        let h = rng.random_range(0..n);
        return Ok(WitnessResult {
            status: WitnessStatus::Found,
            edge: Some(EdgeId::new(&Vertex::from_signs(&z), h)),
            attempts: 1,
            failures: StageTally::default(),
            w: Some(Vec::new()),
            point: None,
            diagnostics,
        });
    }

    let p = prepare(collection, config)?;
    diagnostics.wiggled_coefficients = p.wiggled_coefficients;
    diagnostics.wiggle_certified = p.wiggle_certified;
    diagnostics.k1 = p.k1.clone();
    diagnostics.k2 = p.k2.clone();
    diagnostics.n1 = p.n1.clone();
    diagnostics.n2 = p.n2.clone();
    diagnostics.close_threshold_m = Some(p.params.close_threshold);
    diagnostics.params = Some(p.params.clone());
    diagnostics.constants = Some(p.constants.clone());
    let setup = Setup {
        original: collection,
        p,
    };

    let mut failures = StageTally::default();
    let mut start = 0;
    while start < config.budget {
        let end = (start + BATCH).min(config.budget);
        let outcomes: Vec<Result<Result<Found, AttemptStage>, WitnessError>> = (start..end)
            .into_par_iter()
            .map(|t| setup.attempt(&mut streams.stream(t)))
            .collect();
        for (offset, outcome) in outcomes.into_iter().enumerate() {
            match outcome? {
                Err(stage) => failures.record(stage),
                Ok(found) => {
                    diagnostics.close_count = Some(found.close);
                    diagnostics.near_count_n = Some(found.near_n);
                    diagnostics.sup_norm = Some(found.sup);
                    diagnostics.k2_margin_violations = found.k2_violation as u64;
                    diagnostics.degenerate_planes = found.degenerate;
                    return Ok(WitnessResult {
                        status: WitnessStatus::Found,
                        edge: Some(EdgeId::new(&Vertex::from_signs(&found.z), found.h)),
                        attempts: start + offset as u64 + 1,
                        failures,
                        w: Some(found.w),
                        point: Some(found.x),
                        diagnostics,
                    });
                }
            }
        }
        start = end;
    }
    Ok(WitnessResult {
        status: WitnessStatus::Exhausted,
        edge: None,
        attempts: config.budget,
        failures,
        w: None,
        point: None,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::{levels_construction, verify_cover, CoverOptions, Hyperplane, HyperplaneSet};
    use num_rational::BigRational;

    fn quarter_plane(n: usize) -> Collection {
        let a = vec![BigRational::new(1.into(), 4.into()); n];
        Collection::Exact(
            HyperplaneSet::new(
                n,
                vec![Hyperplane::new(a, BigRational::from_integer(0.into())).unwrap()],
            )
            .unwrap(),
        )
    }

    fn unsliced(c: &Collection, e: &EdgeId) -> bool {
        (0..c.len()).all(|i| !c.slices_edge(i, e).unwrap().is_sliced())
    }

    #[test]
    fn single_uniform_plane() {
        let c = quarter_plane(16);
        let cfg = WitnessConfig {
            seed: 2,
            budget: 1000,
            ..Default::default()
        };
        let r = end_to_end_witness(&c, &cfg).unwrap();
        assert_eq!(r.status, WitnessStatus::Found);
        assert!(unsliced(&c, r.edge.as_ref().unwrap()));
        assert_eq!(r.diagnostics.k2_margin_violations, 0);
        assert_eq!(r.failures.total() + 1, r.attempts);

        let p = prepare(&c, &cfg).unwrap();
        assert_eq!(p.n1, r.diagnostics.n1);
        let x = r.point.unwrap();
        assert!(x.iter().all(|x| x.abs() <= 0.5));
        let w = r.w.unwrap();
        let inst = p.claim_instance(&x, &w);
        let lambda = p.lambda(&w);
        for (i, l) in lambda.iter().enumerate() {
            let frac: f64 = inst
                .n1
                .iter()
                .zip(&x)
                .map(|(&j, x)| inst.a.get(i, j) * x)
                .sum();
            assert!((inst.deviation(i) - (frac - l)).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_collection_returns_first_edge() {
        let c = Collection::Exact(HyperplaneSet::new(8, Vec::new()).unwrap());
        let r = end_to_end_witness(&c, &WitnessConfig::default()).unwrap();
        assert_eq!(r.status, WitnessStatus::Found);
        assert_eq!(r.attempts, 1);
        assert_eq!(r.edge.unwrap().dim(), 8);
    }

    #[test]
    fn complete_cover_is_exhausted() {
        let set = levels_construction(6).unwrap();
        let c = Collection::Exact(set);
        assert!(verify_cover(&c, &CoverOptions::default())
            .unwrap()
            .is_cover());
        let cfg = WitnessConfig {
            seed: 1,
            budget: 600,
            ..Default::default()
        };
        let r = end_to_end_witness(&c, &cfg).unwrap();
        assert_eq!(r.status, WitnessStatus::Exhausted);
        assert_eq!(r.failures.total(), 600);
    }

    #[test]
    fn reproducible_across_thread_counts() {
        let c = quarter_plane(16);
        let cfg = WitnessConfig {
            seed: 7,
            budget: 2000,
            ..Default::default()
        };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| end_to_end_witness(&c, &cfg).unwrap())
        };
        assert_eq!(run(1), run(4));
    }
}
