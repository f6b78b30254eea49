use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Observed sample `(Y, Q, X, Z)`. Treatment is derived as `S = 1{Q ≥ 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: DVector<f64>,
    pub q: DVector<f64>,
    pub x: DMatrix<f64>,
    pub z: DMatrix<f64>,
}

impl Dataset {
    /// Checks that all blocks have the same row count and contain only finite
    /// values. Minimum sample sizes are enforced by the estimators.
    pub fn new(y: DVector<f64>, q: DVector<f64>, x: DMatrix<f64>, z: DMatrix<f64>) -> Result<Self> {
        let n = y.len();
        if q.len() != n || x.nrows() != n || z.nrows() != n {
            return Err(Error::InvalidArgument(format!(
                "row counts disagree: y={}, q={}, x={}, z={}",
                n,
                q.len(),
                x.nrows(),
                z.nrows()
            )));
        }
        let finite = y.iter().chain(q.iter()).chain(x.iter()).chain(z.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("dataset contains non-finite values".into()));
        }
        Ok(Self { y, q, x, z })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p1(&self) -> usize {
        self.x.ncols()
    }

    pub fn p2(&self) -> usize {
        self.z.ncols()
    }

    /// Treatment indicator `1{Q ≥ 0}`; exact zeros count as treated.
    pub fn treatment(&self) -> DVector<f64> {
        self.q.map(|v| if v >= 0.0 { 1.0 } else { 0.0 })
    }

    /// Rows in the given order (repeats allowed).
    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            y: DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i])),
            q: DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.q[i])),
            x: self.x.select_rows(rows),
            z: self.z.select_rows(rows),
        }
    }

    /// Copy with X and Z columns mean-centered; the subtracted means are
    /// returned alongside.
    pub fn centered(&self) -> (Dataset, Centering) {
        let x_means: Vec<f64> = self.x.column_iter().map(|c| c.mean()).collect();
        let z_means: Vec<f64> = self.z.column_iter().map(|c| c.mean()).collect();
        let mut x = self.x.clone();
        let mut z = self.z.clone();
        for (j, m) in x_means.iter().enumerate() {
            x.column_mut(j).add_scalar_mut(-m);
        }
        for (j, m) in z_means.iter().enumerate() {
            z.column_mut(j).add_scalar_mut(-m);
        }
        (
            Dataset {
                y: self.y.clone(),
                q: self.q.clone(),
                x,
                z,
            },
            Centering { x_means, z_means },
        )
    }
}

/// Column means removed from a split part before estimation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Centering {
    pub x_means: Vec<f64>,
    pub z_means: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        Dataset::new(
            DVector::from_vec(vec![1.0, 2.0, 3.0]),
            DVector::from_vec(vec![-1.0, 0.0, 2.0]),
            DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]),
            DMatrix::from_row_slice(3, 1, &[0.5, 0.5, 2.0]),
        )
        .unwrap()
    }

    #[test]
    fn treatment_uses_weak_inequality() {
        let d = tiny();
        assert_eq!(d.treatment().as_slice(), &[0.0, 1.0, 1.0]);
    }

    #[test]
    fn rejects_mismatched_rows_and_nan() {
        let err = Dataset::new(
            DVector::from_vec(vec![1.0, 2.0]),
            DVector::from_vec(vec![1.0]),
            DMatrix::zeros(2, 1),
            DMatrix::zeros(2, 1),
        );
        assert!(err.is_err());
        let err = Dataset::new(
            DVector::from_vec(vec![f64::NAN]),
            DVector::from_vec(vec![1.0]),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
        );
        assert!(err.is_err());
    }

    #[test]
    fn centering_zeroes_column_means() {
        let (c, m) = tiny().centered();
        assert!(c.x.column(0).mean().abs() < 1e-15);
        assert!(c.z.column(0).mean().abs() < 1e-15);
        assert_eq!(m.x_means, vec![2.0]);
        assert_eq!(c.q, tiny().q);
    }
}
