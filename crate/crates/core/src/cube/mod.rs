//! The hypercube `{±1}^n`, affine hyperplanes, and the edge-slicing
//! predicate.
//!
//! A hyperplane `⟨a,x⟩ = b` slices the edge `vv'` when `⟨a,v⟩ − b` and
//! `⟨a,v'⟩ − b` are both nonzero with opposite signs. Collections come in
//! one of two numeric modes: exact rationals, used wherever a slicing
//! decision is asserted, and `f64`, used for large sampled instances with an
//! explicit degeneracy band around zero.

mod scan;
mod wiggle;

use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::rational;

pub use scan::verify_cover;
pub use wiggle::{wiggle, Certification, WiggleOptions, WiggleOutcome, WiggledCoefficient};

/// Largest dimension for which full edge enumeration is attempted.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

/// Relative width of the float-mode zero band: a value is treated as zero
/// when `|value| ≤ rel · (1 + |b| + Σ|a_j|)`.
pub const DEFAULT_ZERO_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CubeError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension must be positive")]
    EmptyDimension,
    #[error("dimension {n} exceeds the enumeration cap {cap}")]
    OverCap { n: usize, cap: usize },
    #[error("operation requires an exact-mode collection")]
    NotExact,
    #[error("non-finite coefficient in hyperplane {hyperplane}")]
    NonFinite { hyperplane: usize },
    #[error(
        "could not certify wiggle of hyperplane {hyperplane} after {attempts} attempts; \
         retry with a smaller magnitude"
    )]
    WiggleUncertified { hyperplane: usize, attempts: u32 },
}

/// Sign of an affine value at a vertex, after the zero test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

/// A vertex of `{±1}^n` as a bit set: bit `j` set means coordinate `j` is +1.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    n: usize,
    words: Vec<u64>,
}

impl Vertex {
    /// The all −1 vertex.
    pub fn lowest(n: usize) -> Self {
        Self {
            n,
            words: vec![0; n.div_ceil(64).max(1)],
        }
    }

    /// Vertex from the low `n` bits of `bits` (`n ≤ 64`).
    pub fn from_bits(n: usize, bits: u64) -> Self {
        assert!(n <= 64, "from_bits supports n ≤ 64");
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        Self {
            n,
            words: vec![bits & mask],
        }
    }

    /// Vertex from a ±1 sign vector (any positive entry counts as +1).
    pub fn from_signs(signs: &[i8]) -> Self {
        let mut v = Self::lowest(signs.len());
        for (j, &s) in signs.iter().enumerate() {
            if s > 0 {
                v.set(j, true);
            }
        }
        v
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn bit(&self, j: usize) -> bool {
        debug_assert!(j < self.n);
        self.words[j / 64] >> (j % 64) & 1 == 1
    }

    /// Coordinate `j` as ±1.
    #[inline]
    pub fn sign(&self, j: usize) -> i8 {
        if self.bit(j) {
            1
        } else {
            -1
        }
    }

    pub fn set(&mut self, j: usize, plus: bool) {
        assert!(j < self.n, "coordinate {j} out of range for n = {}", self.n);
        if plus {
            self.words[j / 64] |= 1 << (j % 64);
        } else {
            self.words[j / 64] &= !(1 << (j % 64));
        }
    }

    /// Copy with coordinate `j` negated.
    pub fn flipped(&self, j: usize) -> Self {
        let mut v = self.clone();
        v.set(j, !self.bit(j));
        v
    }

    pub fn signs(&self) -> Vec<i8> {
        (0..self.n).map(|j| self.sign(j)).collect()
    }

    /// Low 64 bits, when the vertex fits in a word.
    pub fn as_u64(&self) -> Option<u64> {
        (self.n <= 64).then(|| self.words[0])
    }

    /// Hex digits of the bit set, most significant first, `⌈n/4⌉` wide.
    pub fn to_hex(&self) -> String {
        let width = self.n.div_ceil(4).max(1);
        let mut digits = String::with_capacity(width);
        for d in (0..width).rev() {
            let mut nibble = 0u8;
            for b in 0..4 {
                let j = 4 * d + b;
                if j < self.n && self.bit(j) {
                    nibble |= 1 << b;
                }
            }
            digits.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        digits
    }

    pub fn from_hex(n: usize, hex: &str) -> Option<Self> {
        let mut v = Self::lowest(n);
        for (d, c) in hex.trim().chars().rev().enumerate() {
            let nibble = c.to_digit(16)?;
            for b in 0..4 {
                if nibble >> b & 1 == 1 {
                    let j = 4 * d + b;
                    if j >= n {
                        return None;
                    }
                    v.set(j, true);
                }
            }
        }
        Some(v)
    }
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Vertex({}; 0x{})", self.n, self.to_hex())
    }
}

/// A hypercube edge in canonical form: `base` has −1 at coordinate `flip`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct EdgeId {
    base: Vertex,
    flip: usize,
}

impl EdgeId {
    /// Canonical edge through `endpoint` along coordinate `flip`.
    pub fn new(endpoint: &Vertex, flip: usize) -> Self {
        assert!(flip < endpoint.dim(), "flip coordinate out of range");
        let mut base = endpoint.clone();
        base.set(flip, false);
        Self { base, flip }
    }

    pub fn from_bits(n: usize, base: u64, flip: usize) -> Self {
        Self::new(&Vertex::from_bits(n, base), flip)
    }

    pub fn base(&self) -> &Vertex {
        &self.base
    }

    pub fn flip(&self) -> usize {
        self.flip
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// `(base, base with coordinate flip set to +1)`.
    pub fn endpoints(&self) -> (Vertex, Vertex) {
        (self.base.clone(), self.base.flipped(self.flip))
    }

    /// Number of edges of the `n`-cube, `n · 2^{n−1}`.
    pub fn count(n: usize) -> u128 {
        if n == 0 {
            0
        } else {
            n as u128 * (1u128 << (n - 1))
        }
    }

    /// All canonical edges of the `n`-cube in `(base, flip)` order (`n < 64`).
    pub fn all(n: usize) -> impl Iterator<Item = EdgeId> {
        assert!(n < 64);
        (0..(1u64 << n)).flat_map(move |base| {
            (0..n)
                .filter(move |&h| base >> h & 1 == 0)
                .map(move |h| EdgeId::from_bits(n, base, h))
        })
    }
}

impl Serialize for EdgeId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("EdgeId", 3)?;
        st.serialize_field("n", &self.dim())?;
        st.serialize_field("base_bits_hex", &self.base.to_hex())?;
        st.serialize_field("flip_index", &self.flip)?;
        st.end()
    }
}

/// Degenerate incidence: which endpoint(s) lie on the hyperplane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum OnHyperplane {
    Base,
    Other,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SliceOutcome {
    Sliced,
    NotSliced,
    Degenerate(OnHyperplane),
}

impl SliceOutcome {
    pub fn from_signs(base: Sign, other: Sign) -> Self {
        match (base, other) {
            (Sign::Zero, Sign::Zero) => Self::Degenerate(OnHyperplane::Both),
            (Sign::Zero, _) => Self::Degenerate(OnHyperplane::Base),
            (_, Sign::Zero) => Self::Degenerate(OnHyperplane::Other),
            (a, b) if a != b => Self::Sliced,
            _ => Self::NotSliced,
        }
    }

    pub fn is_sliced(self) -> bool {
        self == Self::Sliced
    }
}

/// Coefficient arithmetic needed by the slicing predicate.
///
/// Slicing decisions in both modes are made on the exact rational value of
/// the coefficients (floats are dyadic rationals); float mode additionally
/// treats values inside the zero band as zero.
pub trait Scalar: Clone + PartialEq + fmt::Debug + Send + Sync + 'static {
    /// `⟨a,v⟩ − b` in the scalar's own arithmetic.
    fn affine_value(a: &[Self], b: &Self, v: &Vertex) -> Self;
    fn to_rational(&self) -> Option<BigRational>;
    /// Half-width of the zero band for `(a, b)`.
    fn zero_band(a: &[Self], b: &Self, zero_tol: f64) -> BigRational;
    fn is_zero_coeff(&self) -> bool;
}

impl Scalar for BigRational {
    fn affine_value(a: &[Self], b: &Self, v: &Vertex) -> Self {
        // sum over a common denominator to avoid a gcd per term
        let denom = rational::common_denominator(a.iter().chain(std::iter::once(b)));
        let ints = rational::scaled_integers(a.iter(), &denom);
        let mut acc = -(b * BigRational::from_integer(denom.clone())).to_integer();
        for (j, c) in ints.into_iter().enumerate() {
            if v.bit(j) {
                acc += c;
            } else {
                acc -= c;
            }
        }
        BigRational::new(acc, denom)
    }

    fn to_rational(&self) -> Option<BigRational> {
        Some(self.clone())
    }

    fn zero_band(_a: &[Self], _b: &Self, _zero_tol: f64) -> BigRational {
        BigRational::zero()
    }

    fn is_zero_coeff(&self) -> bool {
        self.is_zero()
    }
}

impl Scalar for f64 {
    fn affine_value(a: &[Self], b: &Self, v: &Vertex) -> Self {
        let mut acc = 0.0;
        for (j, &c) in a.iter().enumerate() {
            if v.bit(j) {
                acc += c;
            } else {
                acc -= c;
            }
        }
        acc - b
    }

    fn to_rational(&self) -> Option<BigRational> {
        rational::from_f64(*self)
    }

    fn zero_band(a: &[Self], b: &Self, zero_tol: f64) -> BigRational {
        rational::from_f64(float_zero_band(a, *b, zero_tol)).unwrap_or_else(BigRational::zero)
    }

    fn is_zero_coeff(&self) -> bool {
        *self == 0.0
    }
}

/// `rel · (1 + |b| + Σ|a_j|)`.
pub fn float_zero_band(a: &[f64], b: f64, rel: f64) -> f64 {
    rel * (1.0 + b.abs() + a.iter().map(|x| x.abs()).sum::<f64>())
}

/// The hyperplane `{x : ⟨a,x⟩ = b}` in `R^n`, `n = a.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane<T> {
    a: Vec<T>,
    b: T,
}

impl<T: Scalar> Hyperplane<T> {
    pub fn new(a: Vec<T>, b: T) -> Result<Self, CubeError> {
        if a.is_empty() {
            return Err(CubeError::EmptyDimension);
        }
        Ok(Self { a, b })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn coefficients(&self) -> &[T] {
        &self.a
    }

    pub fn offset(&self) -> &T {
        &self.b
    }

    fn check_dim(&self, n: usize) -> Result<(), CubeError> {
        if n != self.dim() {
            return Err(CubeError::DimensionMismatch {
                expected: self.dim(),
                found: n,
            });
        }
        Ok(())
    }

    /// `⟨a,v⟩ − b` at a vertex.
    pub fn evaluate(&self, v: &Vertex) -> Result<T, CubeError> {
        self.check_dim(v.dim())?;
        Ok(T::affine_value(&self.a, &self.b, v))
    }

    /// Slicing outcome with the default float zero band.
    pub fn slices_edge(&self, e: &EdgeId) -> Result<SliceOutcome, CubeError> {
        self.slices_edge_with(e, DEFAULT_ZERO_TOLERANCE)
    }

    pub fn slices_edge_with(&self, e: &EdgeId, zero_tol: f64) -> Result<SliceOutcome, CubeError> {
        self.check_dim(e.dim())?;
        let int =
            scan::IntPlane::new(self, zero_tol).ok_or(CubeError::NonFinite { hyperplane: 0 })?;
        let (u, w) = e.endpoints();
        Ok(SliceOutcome::from_signs(int.sign_at(&u), int.sign_at(&w)))
    }
}

impl Hyperplane<BigRational> {
    /// Multiplies `(a, b)` by a nonzero rational.
    pub fn rescaled(&self, factor: &BigRational) -> Self {
        assert!(!factor.is_zero(), "rescaling factor must be nonzero");
        Self {
            a: self.a.iter().map(|x| x * factor).collect(),
            b: &self.b * factor,
        }
    }

    pub fn to_f64(&self) -> Hyperplane<f64> {
        Hyperplane {
            a: self.a.iter().map(rational::to_f64).collect(),
            b: rational::to_f64(&self.b),
        }
    }
}

impl Hyperplane<f64> {
    /// Exact rational image of the float hyperplane.
    pub fn to_exact(&self) -> Option<Hyperplane<BigRational>> {
        let a = self
            .a
            .iter()
            .map(|&x| rational::from_f64(x))
            .collect::<Option<Vec<_>>>()?;
        Some(Hyperplane {
            a,
            b: rational::from_f64(self.b)?,
        })
    }
}

/// Hyperplanes sharing a dimension and numeric representation.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperplaneSet<T> {
    n: usize,
    planes: Vec<Hyperplane<T>>,
}

impl<T: Scalar> HyperplaneSet<T> {
    pub fn new(n: usize, planes: Vec<Hyperplane<T>>) -> Result<Self, CubeError> {
        if n == 0 {
            return Err(CubeError::EmptyDimension);
        }
        for p in &planes {
            p.check_dim(n)?;
        }
        Ok(Self { n, planes })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn planes(&self) -> &[Hyperplane<T>] {
        &self.planes
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    pub fn without(&self, index: usize) -> Self {
        let mut planes = self.planes.clone();
        planes.remove(index);
        Self { n: self.n, planes }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericMode {
    Exact,
    Float,
}

/// A hyperplane collection in one numeric mode.
#[derive(Debug, Clone, PartialEq)]
pub enum Collection {
    Exact(HyperplaneSet<BigRational>),
    Float(HyperplaneSet<f64>),
}

impl Collection {
    pub fn dim(&self) -> usize {
        match self {
            Self::Exact(s) => s.dim(),
            Self::Float(s) => s.dim(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Exact(s) => s.len(),
            Self::Float(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mode(&self) -> NumericMode {
        match self {
            Self::Exact(_) => NumericMode::Exact,
            Self::Float(_) => NumericMode::Float,
        }
    }

    /// Exact image (float coefficients are converted without rounding).
    pub fn to_exact(&self) -> Result<HyperplaneSet<BigRational>, CubeError> {
        match self {
            Self::Exact(s) => Ok(s.clone()),
            Self::Float(s) => {
                let planes = s
                    .planes
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p.to_exact().ok_or(CubeError::NonFinite { hyperplane: i }))
                    .collect::<Result<Vec<_>, _>>()?;
                HyperplaneSet::new(s.n, planes)
            }
        }
    }

    /// Coefficient rows and offsets as floats.
    pub fn to_f64_rows(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        match self {
            Self::Exact(s) => s
                .planes
                .iter()
                .map(|p| {
                    let f = p.to_f64();
                    (f.a, f.b)
                })
                .unzip(),
            Self::Float(s) => s.planes.iter().map(|p| (p.a.clone(), p.b)).unzip(),
        }
    }

    /// Slicing outcome of hyperplane `index` on `e`.
    pub fn slices_edge(&self, index: usize, e: &EdgeId) -> Result<SliceOutcome, CubeError> {
        match self {
            Self::Exact(s) => s.planes[index].slices_edge(e),
            Self::Float(s) => s.planes[index].slices_edge(e),
        }
    }

    pub fn without(&self, index: usize) -> Self {
        match self {
            Self::Exact(s) => Self::Exact(s.without(index)),
            Self::Float(s) => Self::Float(s.without(index)),
        }
    }
}

/// The `n` hyperplanes `⟨1,x⟩ = c` with `c` strictly between consecutive
/// attainable coordinate sums `−n, −n+2, …, n`. Slices every edge.
pub fn levels_construction(n: usize) -> Result<HyperplaneSet<BigRational>, CubeError> {
    if n == 0 {
        return Err(CubeError::EmptyDimension);
    }
    let one = BigRational::from_integer(1.into());
    let planes = (0..n)
        .map(|i| {
            let c = -(n as i64) + 1 + 2 * i as i64;
            Hyperplane::new(vec![one.clone(); n], BigRational::from_integer(c.into()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    HyperplaneSet::new(n, planes)
}

/// Options for [`verify_cover`].
#[derive(Debug, Clone)]
pub struct CoverOptions {
    pub cap: usize,
    /// Maximum number of unsliced edges listed (the full count is kept).
    pub unsliced_limit: usize,
    pub zero_tolerance: f64,
}

impl Default for CoverOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_ENUMERATION_CAP,
            unsliced_limit: 1024,
            zero_tolerance: DEFAULT_ZERO_TOLERANCE,
        }
    }
}

/// Result of exhaustive cover verification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverReport {
    pub n: usize,
    pub total_edges: u64,
    pub sliced_edges: u64,
    pub unsliced_count: u64,
    /// First unsliced edges in `(base, flip)` order, truncated.
    pub unsliced: Vec<EdgeId>,
    /// `(hyperplane, edge)` pairs with an endpoint on the hyperplane.
    pub degenerate_incidences: u64,
    pub per_hyperplane_slice_counts: Vec<u64>,
}

impl CoverReport {
    pub fn is_cover(&self) -> bool {
        self.unsliced_count == 0
    }
}
