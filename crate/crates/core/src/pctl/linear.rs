//! Solvers for the reachability equations `x = P x + b` over unknown states.

use crate::error::{Error, Result};

/// Sparse system `x_i = sum_j p_ij x_j + b_i`.
#[derive(Debug, Clone, Default)]
pub(crate) struct ReachSystem {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub rhs: Vec<f64>,
}

impl ReachSystem {
    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    /// Gaussian elimination with partial pivoting on `(I - P) x = b`.
    ///
    /// Returns `None` when the matrix is numerically singular, which happens
    /// when some unknown state cannot leave the unknown region.
    pub fn solve_dense(&self) -> Option<Vec<f64>> {
        let n = self.len();
        if n == 0 {
            return Some(Vec::new());
        }
        let w = n + 1;
        let mut a = vec![0.0; n * w];
        for (i, row) in self.rows.iter().enumerate() {
            a[i * w + i] += 1.0;
            for &(j, p) in row {
                a[i * w + j] -= p;
            }
            a[i * w + n] = self.rhs[i];
        }
        let mut nz = Vec::with_capacity(w);
        for k in 0..n {
            let pivot = (k..n)
                .max_by(|&x, &y| a[x * w + k].abs().total_cmp(&a[y * w + k].abs()))
                .unwrap();
            if a[pivot * w + k].abs() < 1e-13 {
                return None;
            }
            if pivot != k {
                for j in k..w {
                    a.swap(k * w + j, pivot * w + j);
                }
            }
            let d = a[k * w + k];
            nz.clear();
            nz.extend((k + 1..w).filter(|&j| a[k * w + j] != 0.0));
            let (head, tail) = a.split_at_mut((k + 1) * w);
            let prow = &head[k * w..];
            for row in tail.chunks_exact_mut(w) {
                let f = row[k];
                if f == 0.0 {
                    continue;
                }
                let f = f / d;
                row[k] = 0.0;
                for &j in &nz {
                    row[j] -= f * prow[j];
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = a[i * w + n];
            for j in i + 1..n {
                s -= a[i * w + j] * x[j];
            }
            x[i] = s / a[i * w + i];
        }
        Some(x)
    }

    /// Gauss–Seidel until the largest update is below `tolerance`.
    pub fn solve_iterative(&self, tolerance: f64, max_iterations: usize) -> Result<(Vec<f64>, usize, f64)> {
        let n = self.len();
        let mut x = vec![0.0; n];
        let mut residual = f64::INFINITY;
        for it in 1..=max_iterations {
            residual = 0.0;
            for i in 0..n {
                let mut s = self.rhs[i];
                let mut diag = 0.0;
                for &(j, p) in &self.rows[i] {
                    if j == i {
                        diag += p;
                    } else {
                        s += p * x[j];
                    }
                }
                let v = if diag < 1.0 { s / (1.0 - diag) } else { x[i] };
                residual = f64::max(residual, (v - x[i]).abs());
                x[i] = v;
            }
            if residual < tolerance {
                return Ok((x, it, residual));
            }
        }
        Err(Error::IterationLimit {
            iterations: max_iterations,
            residual,
        })
    }

    /// Largest violation of the equations by `x`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.rhs)
            .enumerate()
            .map(|(i, (row, b))| (row.iter().map(|&(j, p)| p * x[j]).sum::<f64>() + b - x[i]).abs())
            .fold(0.0, f64::max)
    }
}
