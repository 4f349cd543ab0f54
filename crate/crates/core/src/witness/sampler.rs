use rand::Rng;
use serde::Serialize;

use super::{SamplerParams, WitnessError};
use crate::matrix::{dot, Matrix};
use crate::rng::symmetric_unit;

/// One draw of the two-stage point `X = X₀ + X₁`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSample {
    pub alpha: Vec<f64>,
    pub x0: Vec<f64>,
    /// `⟨X₀, v_i⟩ − λ_i`.
    pub x0_offsets: Vec<f64>,
    /// Indices with `|⟨X₀, v_i⟩ − λ_i| ≤ bad_threshold`, increasing.
    pub bad: Vec<usize>,
    /// Second-stage weights, aligned with `bad`.
    pub beta: Vec<f64>,
    pub x1: Vec<f64>,
    pub x: Vec<f64>,
    /// `⟨X, v_i⟩ − λ_i`.
    pub x_offsets: Vec<f64>,
}

impl PointSample {
    pub fn sup_norm(&self) -> f64 {
        self.x.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn combine(v: &Matrix, rows: &[usize], weights: &[f64], scale: f64) -> Vec<f64> {
    let mut out = vec![0.0; v.cols()];
    for (&i, &w) in rows.iter().zip(weights) {
        for (o, a) in out.iter_mut().zip(v.row(i)) {
            *o += scale * w * a;
        }
    }
    out
}

/// Draws `α ∈ [−1,1]^ℓ`, forms `X₀ = ρ₀ Σ α_i v_i`, marks bad indices, then
/// draws `β_i` for bad `i` (in increasing index order) and adds
/// `X₁ = ρ₁ Σ_{bad} β_i v_i`.
pub fn sample_point<R: Rng + ?Sized>(
    v: &Matrix,
    lambda: &[f64],
    params: &SamplerParams,
    rng: &mut R,
) -> Result<PointSample, WitnessError> {
    let l = v.rows();
    if lambda.len() != l {
        return Err(WitnessError::Shape(format!(
            "{} offsets for {l} rows",
            lambda.len()
        )));
    }
    let all: Vec<usize> = (0..l).collect();
    let alpha: Vec<f64> = (0..l).map(|_| symmetric_unit(rng)).collect();
    let x0 = combine(v, &all, &alpha, params.rho0);
    let x0_offsets: Vec<f64> = (0..l).map(|i| dot(&x0, v.row(i)) - lambda[i]).collect();
    let bad: Vec<usize> = (0..l)
        .filter(|&i| x0_offsets[i].abs() <= params.bad_threshold)
        .collect();
    let beta: Vec<f64> = bad.iter().map(|_| symmetric_unit(rng)).collect();
    let x1 = combine(v, &bad, &beta, params.rho1);
    let x: Vec<f64> = x0.iter().zip(&x1).map(|(a, b)| a + b).collect();
    let x_offsets = (0..l).map(|i| dot(&x, v.row(i)) - lambda[i]).collect();
    Ok(PointSample {
        alpha,
        x0,
        x0_offsets,
        bad,
        beta,
        x1,
        x,
        x_offsets,
    })
}

/// Independent signs with `P[x_i = 1] = (1 + p_i)/2`.
pub fn round_mu_p<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> Result<Vec<i8>, WitnessError> {
    if let Some((index, &value)) = p.iter().enumerate().find(|(_, x)| !(x.abs() <= 1.0)) {
        return Err(WitnessError::Domain { index, value });
    }
    Ok(p.iter()
        .map(|&pi| {
            let u: f64 = rng.random();
            if u < (1.0 + pi) / 2.0 {
                1
            } else {
                -1
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Streams;

    fn params(m: usize) -> SamplerParams {
        SamplerParams::paper(m).unwrap()
    }

    #[test]
    fn point_is_sum_of_stages() {
        let v =
            Matrix::from_rows(vec![vec![0.5, 0.5, 0.5, 0.5], vec![0.5, -0.5, 0.5, -0.5]]).unwrap();
        let mut p = params(16);
        p.bad_threshold = 0.3;
        let mut rng = Streams::new(3).stream(0);
        let s = sample_point(&v, &[0.0, 10.0], &p, &mut rng).unwrap();
        for j in 0..4 {
            assert!((s.x[j] - s.x0[j] - s.x1[j]).abs() < 1e-15);
        }
        // index 1 is far from its offset and never bad
        assert!(!s.bad.contains(&1));
        assert_eq!(s.beta.len(), s.bad.len());
        assert!(sample_point(&v, &[0.0], &p, &mut rng).is_err());
    }

    #[test]
    fn rounding_extremes_and_domain() {
        let mut rng = Streams::new(1).stream(0);
        for _ in 0..100 {
            assert_eq!(round_mu_p(&[1.0, -1.0], &mut rng).unwrap(), vec![1, -1]);
        }
        assert_eq!(
            round_mu_p(&[0.0, 1.5], &mut rng),
            Err(WitnessError::Domain {
                index: 1,
                value: 1.5
            })
        );
        assert!(round_mu_p(&[f64::NAN], &mut rng).is_err());
    }

    #[test]
    fn rounding_mean_matches_bias() {
        let p = [0.3, -0.6, 0.0];
        let mut rng = Streams::new(9).stream(0);
        let n = 200_000;
        let mut sums = [0i64; 3];
        for _ in 0..n {
            let x = round_mu_p(&p, &mut rng).unwrap();
            for k in 0..3 {
                sums[k] += x[k] as i64;
            }
        }
        // sd of each coordinate mean ≤ 1/√n ≈ 0.0022
        for k in 0..3 {
            assert!((sums[k] as f64 / n as f64 - p[k]).abs() < 0.012);
        }
    }
}
