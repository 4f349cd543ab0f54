use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use super::{precondition, EstimateReport, LabError, McConfig};
use crate::matrix::{dot, norm, Matrix};
use crate::rng::{run_trials, StreamRng, Streams};

/// Hyperplanes `⟨a_i, x⟩ = b_i` with a fixed fractional point `X` on the
/// coordinates `n1` and fixed signs `w` on `n2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimInstance {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub n1: Vec<usize>,
    pub n2: Vec<usize>,
    pub x: Vec<f64>,
    pub w: Vec<i8>,
}

impl ClaimInstance {
    /// Random unit normals over `n` coordinates (all in `n1`), `X` uniform
    /// in `[−1/2, 1/2]^n`, and `b_i = ⟨a_i, X⟩ − offsets[i]`, so the
    /// deviation of hyperplane `i` is `offsets[i]`.
    pub fn synthetic(n: usize, offsets: &[f64], seed: u64) -> Self {
        let mut rng = StreamRng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
        let rows: Vec<Vec<f64>> = offsets
            .iter()
            .map(|_| {
                let r: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let s = norm(&r);
                r.into_iter().map(|v| v / s).collect()
            })
            .collect();
        let b = rows
            .iter()
            .zip(offsets)
            .map(|(r, o)| dot(r, &x) - o)
            .collect();
        Self {
            a: Matrix::from_rows(rows).expect("rectangular"),
            b,
            n1: (0..n).collect(),
            n2: Vec::new(),
            x,
            w: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    /// `⟨a_i|N1, X⟩ + ⟨a_i|N2, w⟩ − b_i`.
    pub fn deviation(&self, i: usize) -> f64 {
        let row = self.a.row(i);
        let fixed: f64 = self
            .n2
            .iter()
            .zip(&self.w)
            .map(|(&j, &s)| row[j] * s as f64)
            .sum();
        let frac: f64 = self.n1.iter().zip(&self.x).map(|(&j, &x)| row[j] * x).sum();
        frac + fixed - self.b[i]
    }

    /// `|deviation| ≤ 4√ln n`.
    pub fn is_near(&self, i: usize) -> bool {
        self.deviation(i).abs() <= 4.0 * (self.dim() as f64).ln().sqrt()
    }

    fn validate(&self) -> Result<(), LabError> {
        let n = self.dim();
        if self.b.len() != self.a.rows() {
            return Err(precondition("one offset per hyperplane required"));
        }
        if self.x.len() != self.n1.len() || self.w.len() != self.n2.len() {
            return Err(precondition("X must match N1 and w must match N2"));
        }
        let mut seen = vec![false; n];
        for &j in self.n1.iter().chain(&self.n2) {
            if j >= n || std::mem::replace(&mut seen[j], true) {
                return Err(precondition("N1 and N2 must partition the coordinates"));
            }
        }
        if seen.contains(&false) || self.n1.is_empty() {
            return Err(precondition(
                "N1 and N2 must partition the coordinates, N1 nonempty",
            ));
        }
        if 2 * self.n1.len() < n {
            return Err(precondition("|N1| must be at least n/2"));
        }
        if self.x.iter().any(|x| !(x.abs() <= 0.5)) {
            return Err(precondition("X must lie in [-1/2, 1/2]"));
        }
        if self.w.iter().any(|&s| s != 1 && s != -1) {
            return Err(precondition("w must be a sign vector"));
        }
        Ok(())
    }
}

/// For every hyperplane, the probability over `y ∼ μ_X` on `N1` and a
/// uniform `h ∈ N1` that `|⟨a_i, z⟩ − b_i| < 2|a_ih|`, where `z` is `y` on
/// `N1` and `w` on `N2`. Each is reported against `100/√n`; hyperplanes with
/// deviation above `4√ln n` and unit restriction to `N1` are also reported
/// against `2/n⁴` when `ln n > 4`.
pub fn check_hyperplane_claims(
    inst: &ClaimInstance,
    cfg: &McConfig,
) -> Result<Vec<EstimateReport>, LabError> {
    inst.validate()?;
    cfg.check()?;
    let k = inst.a.rows();
    let n = inst.dim();
    let restricted: Vec<Vec<f64>> = (0..k)
        .map(|i| inst.n1.iter().map(|&j| inst.a.get(i, j)).collect())
        .collect();
    // ⟨a_i|N2, w⟩ − b_i
    let shift: Vec<f64> = (0..k)
        .map(|i| {
            let row = inst.a.row(i);
            inst.n2
                .iter()
                .zip(&inst.w)
                .map(|(&j, &s)| row[j] * s as f64)
                .sum::<f64>()
                - inst.b[i]
        })
        .collect();
    let up: Vec<f64> = inst.x.iter().map(|x| (1.0 + x) / 2.0).collect();
    let m = inst.n1.len();

    let streams = Streams::for_purpose(cfg.seed, "lab/hyperplane-claims");
    let hits = run_trials(
        &streams,
        cfg.trials,
        vec![0u64; k],
        |rng, _| {
            let y: Vec<f64> = up
                .iter()
                .map(|&q| if rng.random::<f64>() < q { 1.0 } else { -1.0 })
                .collect();
            let h = rng.random_range(0..m);
            (0..k)
                .map(|i| {
                    let val = dot(&restricted[i], &y) + shift[i];
                    val.abs() < 2.0 * restricted[i][h].abs()
                })
                .collect::<Vec<bool>>()
        },
        |acc: &mut Vec<u64>, hit| {
            for (c, h) in acc.iter_mut().zip(hit) {
                *c += h as u64;
            }
        },
    );

    let nf = n as f64;
    let close_bound = 100.0 / nf.sqrt();
    let far_bound = 2.0 / nf.powi(4);
    let far_applies = nf.ln() > 4.0;
    let mut out = Vec::new();
    for (i, &h) in hits.iter().enumerate() {
        out.push(EstimateReport::from_count(
            format!("claim close i={i}"),
            h,
            cfg.trials,
            close_bound,
            cfg.confidence,
        ));
        let unit = (norm(&restricted[i]) - 1.0).abs() <= 1e-9;
        if far_applies && unit && !inst.is_near(i) {
            out.push(EstimateReport::from_count(
                format!("claim far i={i}"),
                h,
                cfg.trials,
                far_bound,
                cfg.confidence,
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::Verdict;

    #[test]
    fn synthetic_instance_rows() {
        let inst = ClaimInstance::synthetic(400, &[0.0, 0.3, 200.0], 11);
        assert!(inst.is_near(0) && inst.is_near(1) && !inst.is_near(2));
        assert!((inst.deviation(2) - 200.0).abs() < 1e-6);
        let r = check_hyperplane_claims(&inst, &McConfig::new(4000, 1)).unwrap();
        let names: Vec<&str> = r.iter().map(|r| r.quantity.as_str()).collect();
        assert_eq!(
            names,
            [
                "claim close i=0",
                "claim close i=1",
                "claim close i=2",
                "claim far i=2"
            ]
        );
        // 100/√400 = 5
        assert_eq!(r[0].verdict, Verdict::Vacuous);
        assert_eq!(r[2].estimate, 0.0);
        assert_eq!(r[3].verdict, Verdict::Pass);
        assert!(r[0].estimate > 0.0);
    }

    #[test]
    fn single_coordinate_is_always_close() {
        // a = (1), X = 0, b = 0: ⟨a, y⟩ = ±1 < 2 always
        let inst = ClaimInstance {
            a: Matrix::from_rows(vec![vec![1.0]]).unwrap(),
            b: vec![0.0],
            n1: vec![0],
            n2: vec![],
            x: vec![0.0],
            w: vec![],
        };
        let r = check_hyperplane_claims(&inst, &McConfig::new(100, 0)).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].estimate, 1.0);
    }

    #[test]
    fn fixed_signs_shift_the_hyperplane() {
        // a = (1, 1, 10), N2 = {2} with w = −1, b = −10: ⟨a, z⟩ − b = y0 + y1,
        // which is zero with probability 1/2 (then |·| < 2|a_h| for h ∈ N1)
        let inst = ClaimInstance {
            a: Matrix::from_rows(vec![vec![1.0, 1.0, 10.0]]).unwrap(),
            b: vec![-10.0],
            n1: vec![0, 1],
            n2: vec![2],
            x: vec![0.0, 0.0],
            w: vec![-1],
        };
        assert_eq!(inst.deviation(0), 0.0);
        let r = check_hyperplane_claims(&inst, &McConfig::new(20_000, 4)).unwrap();
        assert!(r[0].contains(0.5));
    }

    #[test]
    fn rejects_bad_instances() {
        let good = ClaimInstance::synthetic(8, &[0.0], 0);
        let mut bad = good.clone();
        bad.x[0] = 0.7;
        assert!(check_hyperplane_claims(&bad, &McConfig::new(10, 0)).is_err());
        let mut bad = good.clone();
        bad.n1.pop();
        bad.x.pop();
        assert!(check_hyperplane_claims(&bad, &McConfig::new(10, 0)).is_err());
        let mut bad = good;
        bad.n2 = bad.n1.split_off(2);
        bad.x.truncate(2);
        bad.w = vec![1; 6];
        assert!(check_hyperplane_claims(&bad, &McConfig::new(10, 0)).is_err());
    }
}
