//! Streaming edge enumeration over integer-scaled hyperplanes.
//!
//! Each hyperplane is multiplied by the common denominator of its
//! coefficients, offset and zero band, which turns every slicing decision
//! into an integer sign test. Values fit in `i128` for all practical inputs;
//! `BigInt` is the fallback.
//!
//! Vertices are split into chunks by their high bits. Inside a chunk the low
//! bits are visited in increasing order and each hyperplane's value is
//! updated by `±2a_j` per changed bit. The other endpoint of the edge along
//! `h` has value `val + 2a_h`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;

use super::{
    CoverOptions, CoverReport, CubeError, EdgeId, Hyperplane, HyperplaneSet, Scalar, Sign, Vertex,
};
use crate::rational;

const CHUNK_BITS: usize = 16;
/// Enumeration is limited to bases that fit a machine word.
const HARD_MAX_DIM: usize = 62;

/// A hyperplane scaled to integer coefficients plus an integer zero band.
#[derive(Debug, Clone)]
pub(crate) struct IntPlane {
    pub a: Vec<BigInt>,
    pub b: BigInt,
    pub band: BigInt,
}

impl IntPlane {
    pub fn new<T: Scalar>(h: &Hyperplane<T>, zero_tol: f64) -> Option<Self> {
        let a = h
            .coefficients()
            .iter()
            .map(|x| x.to_rational())
            .collect::<Option<Vec<_>>>()?;
        let b = h.offset().to_rational()?;
        let band = T::zero_band(h.coefficients(), h.offset(), zero_tol);
        let denom = rational::common_denominator(a.iter().chain([&b]));
        let scale = BigRational::from_integer(denom.clone());
        let a = rational::scaled_integers(a.iter(), &denom);
        let b = (b * &scale).to_integer();
        let band = (band * scale).floor().to_integer();
        Some(Self { a, b, band })
    }

    fn value_at(&self, v: &Vertex) -> BigInt {
        let mut acc = -self.b.clone();
        for (j, c) in self.a.iter().enumerate() {
            if v.bit(j) {
                acc += c;
            } else {
                acc -= c;
            }
        }
        acc
    }

    pub fn sign_at(&self, v: &Vertex) -> Sign {
        classify(&self.value_at(v), &self.band)
    }

    /// Upper bound on any intermediate magnitude reached by the scan.
    fn magnitude_bound(&self) -> BigInt {
        let sum: BigInt = self.a.iter().map(|x| x.abs()).sum();
        let max = self.a.iter().map(|x| x.abs()).max().unwrap_or_default();
        sum + self.b.abs() + 2 * max + self.band.abs()
    }
}

fn classify(value: &BigInt, band: &BigInt) -> Sign {
    if value.abs() <= *band {
        Sign::Zero
    } else if value.is_positive() {
        Sign::Positive
    } else {
        Sign::Negative
    }
}

/// Arithmetic used by the per-chunk scan.
trait Lane: Clone + Send + Sync {
    fn from_big(x: &BigInt) -> Self;
    fn plus(&self, d: &Self) -> Self;
    fn add_assign(&mut self, d: &Self);
    fn sub_assign(&mut self, d: &Self);
    fn sign(&self, band: &Self) -> Sign;
}

impl Lane for i128 {
    fn from_big(x: &BigInt) -> Self {
        x.to_i128().expect("value checked to fit in i128")
    }

    #[inline]
    fn plus(&self, d: &Self) -> Self {
        self + d
    }

    #[inline]
    fn add_assign(&mut self, d: &Self) {
        *self += d;
    }

    #[inline]
    fn sub_assign(&mut self, d: &Self) {
        *self -= d;
    }

    #[inline]
    fn sign(&self, band: &Self) -> Sign {
        if self.abs() <= *band {
            Sign::Zero
        } else if *self > 0 {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }
}

impl Lane for BigInt {
    fn from_big(x: &BigInt) -> Self {
        x.clone()
    }

    fn plus(&self, d: &Self) -> Self {
        self + d
    }

    fn add_assign(&mut self, d: &Self) {
        *self += d;
    }

    fn sub_assign(&mut self, d: &Self) {
        *self -= d;
    }

    fn sign(&self, band: &Self) -> Sign {
        classify(self, band)
    }
}

struct LanePlane<L> {
    band: L,
    two_a: Vec<L>,
}

impl<L: Lane> LanePlane<L> {
    fn from_int(p: &IntPlane) -> Self {
        Self {
            band: L::from_big(&p.band),
            two_a: p.a.iter().map(|x| L::from_big(&(x * 2))).collect(),
        }
    }
}

#[derive(Default)]
struct ChunkTally {
    sliced: u64,
    unsliced_count: u64,
    unsliced: Vec<EdgeId>,
    degenerate: u64,
    per_plane: Vec<u64>,
}

fn scan_chunk<L: Lane>(
    ints: &[IntPlane],
    planes: &[LanePlane<L>],
    n: usize,
    low_bits: usize,
    chunk: u64,
    limit: usize,
) -> ChunkTally {
    let mut tally = ChunkTally {
        per_plane: vec![0; planes.len()],
        ..Default::default()
    };
    let first = chunk << low_bits;
    let start = Vertex::from_bits(n, first);
    let mut vals: Vec<L> = ints
        .iter()
        .map(|p| L::from_big(&p.value_at(&start)))
        .collect();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let span = 1u64 << low_bits;
    for low in 0..span {
        let bits = first | low;
        if low > 0 {
            // bits of low−1 → low: trailing ones cleared, one bit set
            let prev = low - 1;
            let t = prev.trailing_ones() as usize;
            for (p, v) in planes.iter().zip(vals.iter_mut()) {
                for j in 0..t {
                    v.sub_assign(&p.two_a[j]);
                }
                v.add_assign(&p.two_a[t]);
            }
        }
        let free = !bits & full;
        let free_count = free.count_ones() as u64;
        let mut covered = 0u64;
        for (idx, (p, v)) in planes.iter().zip(vals.iter()).enumerate() {
            let sv = v.sign(&p.band);
            if sv == Sign::Zero {
                tally.degenerate += free_count;
                continue;
            }
            let mut rest = free;
            let mut mask = 0u64;
            while rest != 0 {
                let h = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                match v.plus(&p.two_a[h]).sign(&p.band) {
                    Sign::Zero => tally.degenerate += 1,
                    so if so != sv => mask |= 1 << h,
                    _ => {}
                }
            }
            tally.per_plane[idx] += mask.count_ones() as u64;
            covered |= mask;
        }
        tally.sliced += covered.count_ones() as u64;
        let mut missing = free & !covered;
        tally.unsliced_count += missing.count_ones() as u64;
        while missing != 0 && tally.unsliced.len() < limit {
            let h = missing.trailing_zeros() as usize;
            missing &= missing - 1;
            tally.unsliced.push(EdgeId::from_bits(n, bits, h));
        }
    }
    tally
}

fn run<L: Lane>(ints: &[IntPlane], n: usize, limit: usize) -> CoverReport {
    let planes: Vec<LanePlane<L>> = ints.iter().map(LanePlane::from_int).collect();
    let low_bits = n.min(CHUNK_BITS);
    let chunks = 1u64 << (n - low_bits);
    let tallies: Vec<ChunkTally> = (0..chunks)
        .into_par_iter()
        .map(|c| scan_chunk(ints, &planes, n, low_bits, c, limit))
        .collect();
    let mut report = CoverReport {
        n,
        total_edges: EdgeId::count(n) as u64,
        sliced_edges: 0,
        unsliced_count: 0,
        unsliced: Vec::new(),
        degenerate_incidences: 0,
        per_hyperplane_slice_counts: vec![0; ints.len()],
    };
    for t in tallies {
        report.sliced_edges += t.sliced;
        report.unsliced_count += t.unsliced_count;
        report.degenerate_incidences += t.degenerate;
        for (acc, x) in report
            .per_hyperplane_slice_counts
            .iter_mut()
            .zip(t.per_plane)
        {
            *acc += x;
        }
        let room = limit.saturating_sub(report.unsliced.len());
        report.unsliced.extend(t.unsliced.into_iter().take(room));
    }
    report
}

pub(crate) fn verify_set<T: Scalar>(
    set: &HyperplaneSet<T>,
    opts: &CoverOptions,
) -> Result<CoverReport, CubeError> {
    let n = set.dim();
    if n == 0 {
        return Err(CubeError::EmptyDimension);
    }
    let cap = opts.cap.min(HARD_MAX_DIM);
    if n > cap {
        return Err(CubeError::OverCap { n, cap: opts.cap });
    }
    let ints = set
        .planes()
        .iter()
        .enumerate()
        .map(|(i, h)| {
            IntPlane::new(h, opts.zero_tolerance).ok_or(CubeError::NonFinite { hyperplane: i })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let limit = BigInt::from(1u8) << 125;
    let fits = ints.iter().all(|p| p.magnitude_bound() < limit);
    Ok(if fits {
        run::<i128>(&ints, n, opts.unsliced_limit)
    } else {
        run::<BigInt>(&ints, n, opts.unsliced_limit)
    })
}

/// Enumerates every edge of the cube and reports which are sliced by some
/// hyperplane of the collection. Degenerate incidences never count as
/// slicing.
pub fn verify_cover(
    collection: &super::Collection,
    opts: &CoverOptions,
) -> Result<CoverReport, CubeError> {
    match collection {
        super::Collection::Exact(s) => verify_set(s, opts),
        super::Collection::Float(s) => verify_set(s, opts),
    }
}

/// Edge-by-edge comparison of two hyperplanes' slicing behaviour.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct Comparison {
    /// Edges sliced by exactly one of the two planes.
    pub mismatches: u64,
    /// Edges sliced by the first plane only.
    pub lost: u64,
    /// Edges degenerate for the first plane and cleanly unsliced by the second.
    pub resolved: u64,
    /// Degenerate incidences remaining for the second plane.
    pub still_degenerate: u64,
}

fn edge_outcome<L: Lane>(val: &L, two_a: &L, band: &L) -> (Sign, Sign) {
    (val.sign(band), val.plus(two_a).sign(band))
}

fn compare_chunk<L: Lane>(
    ints: [&IntPlane; 2],
    planes: &[LanePlane<L>; 2],
    n: usize,
    low_bits: usize,
    chunk: u64,
) -> Comparison {
    let mut out = Comparison::default();
    let first = chunk << low_bits;
    let start = Vertex::from_bits(n, first);
    let mut vals: [L; 2] = [
        L::from_big(&ints[0].value_at(&start)),
        L::from_big(&ints[1].value_at(&start)),
    ];
    for low in 0..1u64 << low_bits {
        let bits = first | low;
        if low > 0 {
            let t = (low - 1).trailing_ones() as usize;
            for (p, v) in planes.iter().zip(vals.iter_mut()) {
                for j in 0..t {
                    v.sub_assign(&p.two_a[j]);
                }
                v.add_assign(&p.two_a[t]);
            }
        }
        for h in 0..n {
            if bits >> h & 1 == 1 {
                continue;
            }
            let (a0, a1) = edge_outcome(&vals[0], &planes[0].two_a[h], &planes[0].band);
            let (b0, b1) = edge_outcome(&vals[1], &planes[1].two_a[h], &planes[1].band);
            let before = super::SliceOutcome::from_signs(a0, a1);
            let after = super::SliceOutcome::from_signs(b0, b1);
            if before.is_sliced() != after.is_sliced() {
                out.mismatches += 1;
                out.lost += before.is_sliced() as u64;
            }
            match (before, after) {
                (super::SliceOutcome::Degenerate(_), super::SliceOutcome::NotSliced) => {
                    out.resolved += 1
                }
                (_, super::SliceOutcome::Degenerate(_)) => out.still_degenerate += 1,
                _ => {}
            }
        }
    }
    out
}

fn compare_with<L: Lane>(first: &IntPlane, second: &IntPlane, n: usize) -> Comparison {
    let planes: [LanePlane<L>; 2] = [LanePlane::from_int(first), LanePlane::from_int(second)];
    let low_bits = n.min(CHUNK_BITS);
    (0..1u64 << (n - low_bits))
        .into_par_iter()
        .map(|c| compare_chunk([first, second], &planes, n, low_bits, c))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Comparison::default(), |acc, c| Comparison {
            mismatches: acc.mismatches + c.mismatches,
            lost: acc.lost + c.lost,
            resolved: acc.resolved + c.resolved,
            still_degenerate: acc.still_degenerate + c.still_degenerate,
        })
}

/// Compares the slicing behaviour of two hyperplanes over every edge.
pub(crate) fn compare_slicing(first: &IntPlane, second: &IntPlane, n: usize) -> Comparison {
    let limit = BigInt::from(1u8) << 125;
    if first.magnitude_bound() < limit && second.magnitude_bound() < limit {
        compare_with::<i128>(first, second, n)
    } else {
        compare_with::<BigInt>(first, second, n)
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;
    use proptest::prelude::*;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    fn brute(c: &Collection) -> (u64, Vec<EdgeId>) {
        let n = c.dim();
        let mut sliced = 0;
        let mut unsliced = Vec::new();
        for e in EdgeId::all(n) {
            if (0..c.len()).any(|i| c.slices_edge(i, &e).unwrap().is_sliced()) {
                sliced += 1;
            } else {
                unsliced.push(e);
            }
        }
        (sliced, unsliced)
    }

    #[test]
    fn levels_n3_is_a_cover() {
        let c = Collection::Exact(levels_construction(3).unwrap());
        let rep = verify_cover(&c, &CoverOptions::default()).unwrap();
        assert_eq!(
            (rep.total_edges, rep.sliced_edges, rep.unsliced_count),
            (12, 12, 0)
        );
        assert!(rep.unsliced.is_empty());
    }

    #[test]
    fn levels_n3_without_middle_leaves_six() {
        let c = Collection::Exact(levels_construction(3).unwrap().without(1));
        let rep = verify_cover(&c, &CoverOptions::default()).unwrap();
        assert_eq!(rep.unsliced_count, 6);
        for e in &rep.unsliced {
            let (u, w) = e.endpoints();
            let s = |v: &Vertex| v.signs().iter().map(|&x| x as i32).sum::<i32>();
            let mut sums = [s(&u), s(&w)];
            sums.sort();
            assert_eq!(sums, [-1, 1]);
        }
    }

    #[test]
    fn empty_collection_slices_nothing() {
        let c = Collection::Exact(HyperplaneSet::new(2, vec![]).unwrap());
        let rep = verify_cover(&c, &CoverOptions::default()).unwrap();
        assert_eq!((rep.sliced_edges, rep.unsliced_count), (0, 4));
    }

    #[test]
    fn over_cap_and_empty_dimension() {
        let c = Collection::Exact(HyperplaneSet::new(5, vec![]).unwrap());
        let opts = CoverOptions {
            cap: 4,
            ..Default::default()
        };
        assert_eq!(
            verify_cover(&c, &opts),
            Err(CubeError::OverCap { n: 5, cap: 4 })
        );
        assert_eq!(
            HyperplaneSet::<f64>::new(0, vec![]).unwrap_err(),
            CubeError::EmptyDimension
        );
    }

    #[test]
    fn levels_are_covers_and_minimal_small_n() {
        for n in 2..=8 {
            let set = levels_construction(n).unwrap();
            let rep =
                verify_cover(&Collection::Exact(set.clone()), &CoverOptions::default()).unwrap();
            assert!(rep.is_cover(), "n = {n}");
            for i in 0..n {
                let rep =
                    verify_cover(&Collection::Exact(set.without(i)), &CoverOptions::default())
                        .unwrap();
                assert!(rep.unsliced_count > 0);
            }
        }
    }

    #[test]
    fn bigint_lane_matches_i128_lane() {
        let huge: BigInt = BigInt::from(1u8) << 140usize;
        let a = vec![
            BigRational::from_integer(huge.clone()),
            BigRational::from_integer(huge.clone() * 3),
            r(1, 1),
        ];
        let b = BigRational::from_integer(huge.clone() * 2);
        let set = HyperplaneSet::new(3, vec![Hyperplane::new(a, b).unwrap()]).unwrap();
        let c = Collection::Exact(set);
        let rep = verify_cover(&c, &CoverOptions::default()).unwrap();
        let (sliced, unsliced) = brute(&c);
        assert_eq!(rep.sliced_edges, sliced);
        assert_eq!(rep.unsliced, unsliced);
    }

    #[test]
    fn chunked_scan_crosses_chunk_boundaries() {
        // n > CHUNK_BITS exercises flips across chunks
        let n = 18;
        let a: Vec<BigRational> = (0..n).map(|j| r(j as i64 + 1, 3)).collect();
        let set = HyperplaneSet::new(n, vec![Hyperplane::new(a, r(5, 7)).unwrap()]).unwrap();
        let c = Collection::Exact(set);
        let rep = verify_cover(
            &c,
            &CoverOptions {
                unsliced_limit: usize::MAX,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(rep.sliced_edges + rep.unsliced_count, rep.total_edges);
        for e in rep.unsliced.iter().step_by(997) {
            assert!(!c.slices_edge(0, e).unwrap().is_sliced());
        }
        assert_eq!(rep.per_hyperplane_slice_counts[0], rep.sliced_edges);
    }

    fn collection_strategy() -> impl Strategy<Value = Collection> {
        (2usize..=6).prop_flat_map(|n| {
            prop::collection::vec(
                (
                    prop::collection::vec((-5i64..=5, 1i64..=3), n),
                    (-6i64..=6, 1i64..=3),
                ),
                0..4,
            )
            .prop_map(move |planes| {
                let planes = planes
                    .into_iter()
                    .map(|(a, b)| {
                        Hyperplane::new(a.into_iter().map(|(p, q)| r(p, q)).collect(), r(b.0, b.1))
                            .unwrap()
                    })
                    .collect();
                Collection::Exact(HyperplaneSet::new(n, planes).unwrap())
            })
        })
    }

    proptest! {
        #[test]
        fn scan_matches_per_edge_predicate(c in collection_strategy()) {
            let rep = verify_cover(&c, &CoverOptions::default()).unwrap();
            let (sliced, unsliced) = brute(&c);
            prop_assert_eq!(rep.sliced_edges, sliced);
            prop_assert_eq!(&rep.unsliced, &unsliced);
            prop_assert_eq!(rep.sliced_edges + rep.unsliced_count, rep.total_edges);
            let mut degenerate = 0u64;
            for (i, count) in rep.per_hyperplane_slice_counts.iter().enumerate() {
                prop_assert!(*count <= rep.total_edges);
                let mut own = 0;
                for e in EdgeId::all(c.dim()) {
                    match c.slices_edge(i, &e).unwrap() {
                        SliceOutcome::Sliced => own += 1,
                        SliceOutcome::Degenerate(_) => degenerate += 1,
                        SliceOutcome::NotSliced => {}
                    }
                }
                prop_assert_eq!(*count, own);
            }
            prop_assert_eq!(rep.degenerate_incidences, degenerate);
        }

        #[test]
        fn float_scan_matches_per_edge_predicate(
            n in 2usize..=6,
            raw in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 7), 1..4),
        ) {
            let planes = raw
                .iter()
                .map(|v| Hyperplane::new(v[..n].to_vec(), v[6]).unwrap())
                .collect();
            let c = Collection::Float(HyperplaneSet::new(n, planes).unwrap());
            let rep = verify_cover(&c, &CoverOptions::default()).unwrap();
            let (sliced, unsliced) = brute(&c);
            prop_assert_eq!(rep.sliced_edges, sliced);
            prop_assert_eq!(rep.unsliced, unsliced);
        }
    }
}
