use serde::Serialize;

use crate::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-12;
/// Smallest squared pivot accepted when a factor is needed for sampling or
/// integration.
pub(crate) const MIN_PIVOT: f64 = 1e-10;

/// A validated correlation matrix: symmetric, unit diagonal, entries in
/// `[-1, 1]` and positive semi-definite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    dim: usize,
    /// Row-major entries.
    entries: Vec<f64>,
}

impl CorrelationMatrix {
    /// Build from row-major entries.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("correlation matrix must have dim >= 1"));
        }
        if entries.len() != dim * dim {
            return Err(Error::domain(format!(
                "correlation matrix of dim {dim} needs {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        for i in 0..dim {
            let d = entries[i * dim + i];
            if (d - 1.0).abs() > SYMMETRY_TOL {
                return Err(Error::domain(format!("diagonal entry {i} is {d}, not 1")));
            }
            for j in 0..dim {
                let a = entries[i * dim + j];
                if !a.is_finite() || a.abs() > 1.0 + SYMMETRY_TOL {
                    return Err(Error::domain(format!("entry ({i},{j}) = {a} outside [-1, 1]")));
                }
                if (a - entries[j * dim + i]).abs() > SYMMETRY_TOL {
                    return Err(Error::domain(format!("matrix is not symmetric at ({i},{j})")));
                }
            }
        }
        let m = CorrelationMatrix { dim, entries };
        m.factor(false)?;
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::domain("correlation matrix rows must be square"));
        }
        Self::new(dim, rows.concat())
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        CorrelationMatrix { dim, entries }
    }

    /// Equal correlation `rho` between every pair.
    pub fn exchangeable(dim: usize, rho: f64) -> Result<Self> {
        let mut entries = vec![rho; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Self::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn is_identity(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.get(i, j) == 0.0))
    }

    /// Lower-triangular Cholesky factor (row-major). Fails when any squared
    /// pivot falls below `1e-10`, i.e. the matrix is singular or nearly so.
    pub fn cholesky(&self) -> Result<Vec<f64>> {
        self.factor(true)
    }

    fn factor(&self, strict: bool) -> Result<Vec<f64>> {
        let n = self.dim;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d < -PSD_TOL {
                return Err(Error::domain("correlation matrix is not positive semi-definite"));
            }
            if strict && d < MIN_PIVOT {
                return Err(Error::numerical(format!(
                    "correlation matrix is singular or nearly so (pivot {d:.3e} at row {j})"
                )));
            }
            if d <= PSD_TOL {
                // Degenerate column: the remaining entries must vanish too.
                for i in j + 1..n {
                    let mut s = self.get(i, j);
                    for k in 0..j {
                        s -= l[i * n + k] * l[j * n + k];
                    }
                    if s.abs() > 1e-8 {
                        return Err(Error::domain("correlation matrix is not positive semi-definite"));
                    }
                }
                continue;
            }
            let ljj = d.sqrt();
            l[j * n + j] = ljj;
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / ljj;
            }
        }
        Ok(l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(CorrelationMatrix::new(2, vec![1.0, 0.3, 0.3, 1.0]).is_ok());
        assert!(CorrelationMatrix::new(2, vec![1.0, 0.3, 0.2, 1.0]).is_err());
        assert!(CorrelationMatrix::new(2, vec![0.9, 0.3, 0.3, 1.0]).is_err());
        assert!(CorrelationMatrix::new(2, vec![1.0, 1.3, 1.3, 1.0]).is_err());
        assert!(CorrelationMatrix::new(2, vec![1.0, 0.3, 0.3]).is_err());
        // Pairwise valid but jointly indefinite.
        assert!(CorrelationMatrix::exchangeable(3, -0.6).unwrap_err().is_domain());
        // Singular but PSD is a valid matrix, just not factorable.
        let ones = CorrelationMatrix::exchangeable(3, 1.0).unwrap();
        assert!(matches!(ones.cholesky(), Err(Error::Numerical { .. })));
    }

    #[test]
    fn cholesky_reproduces_matrix() {
        let m =
            CorrelationMatrix::from_rows(&[vec![1.0, 0.5, 0.2], vec![0.5, 1.0, -0.3], vec![0.2, -0.3, 1.0]])
                .unwrap();
        let l = m.cholesky().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| l[i * 3 + k] * l[j * 3 + k]).sum();
                assert!((s - m.get(i, j)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn near_singular_is_rejected_for_factoring() {
        let m = CorrelationMatrix::exchangeable(2, 0.999_999_999_99).unwrap();
        assert!(m.cholesky().is_err());
        assert!(CorrelationMatrix::exchangeable(2, 0.999).unwrap().cholesky().is_ok());
    }
}
