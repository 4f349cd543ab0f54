use rayon::prelude::*;
use serde::Serialize;

use crate::matrix::{dot, norm, Matrix};

/// Largest row count for which the full Gram matrix is kept.
pub const DEFAULT_GRAM_CAP: usize = 4096;

/// Row norms, `S_i = Σ_j ⟨v_i, v_j⟩²` and (for small `ℓ`) the Gram matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GramStats {
    pub s: Vec<f64>,
    pub row_norms: Vec<f64>,
    /// Column norms `‖v_{*j}‖`.
    pub column_norms: Vec<f64>,
    #[serde(skip)]
    gram: Option<Matrix>,
}

impl GramStats {
    pub fn gram(&self) -> Option<&Matrix> {
        self.gram.as_ref()
    }

    /// `⟨v_i, v_j⟩`, from the stored Gram matrix when present.
    pub fn inner(&self, v: &Matrix, i: usize, j: usize) -> f64 {
        match &self.gram {
            Some(g) => g.get(i, j),
            None => dot(v.row(i), v.row(j)),
        }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

pub fn gram_stats(v: &Matrix, cap: usize) -> GramStats {
    let l = v.rows();
    let rows: Vec<Vec<f64>> = (0..l)
        .into_par_iter()
        .map(|i| (0..l).map(|j| dot(v.row(i), v.row(j))).collect())
        .collect();
    let s = rows.iter().map(|r| r.iter().map(|x| x * x).sum()).collect();
    let row_norms = v.iter_rows().map(norm).collect();
    let column_norms = (0..v.cols())
        .map(|j| (0..l).map(|i| v.get(i, j).powi(2)).sum::<f64>().sqrt())
        .collect();
    let gram = (l <= cap).then(|| Matrix::from_rows(rows).unwrap_or_else(|_| Matrix::zeros(0, 0)));
    GramStats {
        s,
        row_norms,
        column_norms,
        gram,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_rows_have_unit_s() {
        let v = Matrix::from_rows(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let g = gram_stats(&v, 10);
        assert_eq!(g.s, vec![1.0, 1.0]);
        assert_eq!(g.column_norms, vec![1.0, 1.0, 0.0]);
        assert_eq!(g.inner(&v, 0, 1), 0.0);
        let h = gram_stats(&v, 1);
        assert!(h.gram().is_none());
        assert_eq!(h.inner(&v, 1, 1), 1.0);
    }

    #[test]
    fn repeated_rows() {
        let r = vec![0.6, 0.8];
        let v = Matrix::from_rows(vec![r.clone(), r.clone(), r]).unwrap();
        let g = gram_stats(&v, 10);
        for s in g.s {
            assert!((s - 3.0).abs() < 1e-12);
        }
    }
}
