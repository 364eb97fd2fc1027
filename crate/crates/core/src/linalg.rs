//! Dense symmetric matrices, cyclic Jacobi eigendecomposition, and the
//! eigenvalue-thresholded pseudo-inverse used by the covariance estimator.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not numerically symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),

    #[error("eigenvalue {0} below the negative tolerance; matrix is not PSD")]
    NotPositiveSemiDefinite(f64),

    #[error("Jacobi sweep failed to converge")]
    NoConvergence,
}

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n);
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// `M v` for a dense vector.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| {
                let row = &self.data[i * self.n..(i + 1) * self.n];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// Sum of `v[i]` columns: `M` applied to a sparse 0/1 vector.
    pub fn mul_indicator(&self, ones: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for &j in ones {
            for i in 0..self.n {
                out[i] += self[(i, j)];
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn frobenius_distance(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    fn check_symmetric(&self) -> Result<(), LinalgError> {
        let scale = self
            .data
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1.0);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if (self[(i, j)] - self[(j, i)]).abs() > 1e-9 * scale {
                    return Err(LinalgError::NotSymmetric(i, j));
                }
            }
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigendecomposition of a symmetric matrix: eigenvalues (unordered) and the
/// matrix whose columns are the matching eigenvectors.
pub fn symmetric_eigen(matrix: &Matrix) -> Result<(Vec<f64>, Matrix), LinalgError> {
    matrix.check_symmetric()?;
    let n = matrix.size();
    let mut a = matrix.clone();
    let mut v = Matrix::identity(n);
    if n == 1 {
        return Ok((vec![a[(0, 0)]], v));
    }

    let norm: f64 = a.data.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    for _sweep in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * norm {
            let vals = (0..n).map(|i| a[(i, i)]).collect();
            return Ok((vals, v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(LinalgError::NoConvergence)
}

/// Pseudo-inverse of a symmetric PSD matrix via eigendecomposition.
/// Eigenvalues below `rank_tolerance` times the largest are treated as zero;
/// eigenvalues below `-1e-10` (relative) are rejected as non-PSD.
pub fn psd_pseudo_inverse(matrix: &Matrix, rank_tolerance: f64) -> Result<Matrix, LinalgError> {
    let (vals, vecs) = symmetric_eigen(matrix)?;
    let n = matrix.size();
    let max_val = vals.iter().fold(0.0f64, |m, &v| m.max(v));
    let floor = -1e-10 * max_val.max(1.0);
    for &val in &vals {
        if val < floor {
            return Err(LinalgError::NotPositiveSemiDefinite(val));
        }
    }
    let cutoff = rank_tolerance * max_val;
    let inv_vals: Vec<f64> = vals
        .iter()
        .map(|&l| if l > cutoff { 1.0 / l } else { 0.0 })
        .collect();
    // V diag(1/l) V^T
    let mut out = Matrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for (k, &il) in inv_vals.iter().enumerate() {
                acc += vecs[(i, k)] * il * vecs[(j, k)];
            }
            out[(i, j)] = acc;
            out[(j, i)] = acc;
        }
    }
    Ok(out)
}
