use serde::Serialize;

use super::{GramStats, PointSample, SamplerParams};
use crate::matrix::Matrix;

/// Number of index types in the case analysis.
pub const TYPE_COUNT: usize = 5;

/// Per-index flags for one sample. `e1[j]` and `e2[j]` hold one bit per
/// activation level `h`; `types[j]` has bit `k − 1` set when type `k` applies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexClassification {
    pub bad: Vec<bool>,
    pub close: Vec<bool>,
    pub near_bad: Vec<bool>,
    pub heavy: Vec<bool>,
    pub activated: Vec<bool>,
    pub e1: Vec<u64>,
    pub e2: Vec<u64>,
    /// `(1/3)ρ₁² Σ_{i bad} ⟨v_i, v_j⟩²`.
    pub x1_variance: Vec<f64>,
    /// Same sum restricted to bad `i` with `|⟨v_i, v_j⟩| ≤ near_bad_dot`.
    pub t: Vec<f64>,
    pub types: Vec<u8>,
}

impl IndexClassification {
    pub fn len(&self) -> usize {
        self.bad.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bad.is_empty()
    }

    pub fn light(&self, j: usize) -> bool {
        !self.heavy[j]
    }

    /// Whether index `j` has type `k ∈ 1..=5`.
    pub fn has_type(&self, j: usize, k: usize) -> bool {
        self.types[j] >> (k - 1) & 1 == 1
    }

    /// First applicable type in case order, if any.
    pub fn primary_type(&self, j: usize) -> Option<usize> {
        (1..=TYPE_COUNT).find(|&k| self.has_type(j, k))
    }

    pub fn close_count(&self) -> usize {
        self.close.iter().filter(|&&c| c).count()
    }
}

pub fn classify(
    sample: &PointSample,
    v: &Matrix,
    stats: &GramStats,
    params: &SamplerParams,
) -> IndexClassification {
    let l = v.rows();
    let mut bad = vec![false; l];
    for &i in &sample.bad {
        bad[i] = true;
    }
    let close: Vec<bool> = sample
        .x_offsets
        .iter()
        .map(|d| d.abs() <= params.close_threshold)
        .collect();
    let heavy: Vec<bool> = stats
        .s
        .iter()
        .map(|&s| s >= params.delta_heavy * params.delta_heavy)
        .collect();
    let third = params.rho1 * params.rho1 / 3.0;

    let mut c = IndexClassification {
        bad,
        close,
        near_bad: vec![false; l],
        heavy,
        activated: vec![false; l],
        e1: vec![0; l],
        e2: vec![0; l],
        x1_variance: vec![0.0; l],
        t: vec![0.0; l],
        types: vec![0; l],
    };
    for j in 0..l {
        let mut var = 0.0;
        let mut t = 0.0;
        for &i in &sample.bad {
            let a = stats.inner(v, i, j);
            let a2 = a * a;
            var += a2;
            if a.abs() > params.near_bad_dot {
                c.near_bad[j] = true;
            } else {
                t += a2;
            }
        }
        c.x1_variance[j] = third * var;
        c.t[j] = third * t;
        let dev = sample.x0_offsets[j].abs();
        for h in 0..=params.levels {
            let level = params.level(h);
            if dev <= level * params.bad_threshold {
                c.e1[j] |= 1 << h;
            }
            if c.x1_variance[j] > level * level / 4.0 {
                c.e2[j] |= 1 << h;
            }
        }
        c.activated[j] = c.e1[j] & c.e2[j] != 0;

        let (b, act, hv, nb) = (c.bad[j], c.activated[j], c.heavy[j], c.near_bad[j]);
        let mut ty = 0u8;
        if b {
            ty |= 1;
        }
        if !b && !act {
            ty |= 1 << 1;
        }
        if act && hv {
            ty |= 1 << 2;
        }
        if !hv && nb {
            ty |= 1 << 3;
        }
        if act && !nb {
            ty |= 1 << 4;
        }
        c.types[j] = ty;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Streams;
    use crate::witness::{gram_stats, sample_point, ParamSpec};

    fn params(spec: &str, m: usize) -> SamplerParams {
        SamplerParams::resolve(&spec.parse::<ParamSpec>().unwrap(), m, false).unwrap()
    }

    #[test]
    fn exact_hit_is_bad_and_self_pair_feeds_variance_only() {
        let v = Matrix::from_rows(vec![vec![1.0, 0.0]]).unwrap();
        let p = params("rho0=1,rho1=1,bad_threshold=0.5", 2);
        let stats = gram_stats(&v, 16);
        let mut rng = Streams::new(0).stream(0);
        let mut s = sample_point(&v, &[0.0], &p, &mut rng).unwrap();
        // force ⟨X₀, v⟩ = λ
        s.x0_offsets = vec![0.0];
        s.bad = vec![0];
        let c = classify(&s, &v, &stats, &p);
        assert!(c.bad[0] && c.near_bad[0]);
        assert_eq!(c.t[0], 0.0);
        assert!((c.x1_variance[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!(c.has_type(0, 1));
    }

    #[test]
    fn no_bad_means_type_two_only() {
        let v = Matrix::from_rows(vec![vec![0.6, 0.8], vec![1.0, 0.0]]).unwrap();
        let p = params("rho0=1,bad_threshold=0.1,close_threshold=100", 2);
        let stats = gram_stats(&v, 16);
        let lambda = [5.0, 5.0];
        for t in 0..200 {
            let mut rng = Streams::new(4).stream(t);
            let s = sample_point(&v, &lambda, &p, &mut rng).unwrap();
            assert!(s.bad.is_empty());
            assert!(s.x1.iter().all(|&x| x == 0.0));
            let c = classify(&s, &v, &stats, &p);
            for j in 0..2 {
                assert!(c.close[j]);
                assert_eq!(c.e2[j], 0);
                assert!(!c.activated[j]);
                assert_eq!(c.types[j], 0b10);
            }
        }
    }

    #[test]
    fn flags_are_consistent() {
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| {
                let r: Vec<f64> = (0..8).map(|j| ((i * 7 + j * 3) % 5) as f64 - 2.0).collect();
                let n = crate::matrix::norm(&r);
                r.into_iter().map(|x| x / n).collect()
            })
            .collect();
        let v = Matrix::from_rows(rows).unwrap();
        let p = params(
            "rho0=2,rho1=2,bad_threshold=1,close_threshold=0.5,delta_heavy=1.5",
            8,
        );
        let stats = gram_stats(&v, 16);
        let lambda = vec![0.3; 6];
        for t in 0..500 {
            let mut rng = Streams::new(8).stream(t);
            let s = sample_point(&v, &lambda, &p, &mut rng).unwrap();
            let c = classify(&s, &v, &stats, &p);
            for j in 0..6 {
                if c.bad[j] {
                    assert!(c.near_bad[j]);
                }
                assert!(c.types[j] != 0);
                assert!(c.t[j] <= c.x1_variance[j] + 1e-15);
                assert_eq!(c.activated[j], c.e1[j] & c.e2[j] != 0);
            }
        }
    }
}
