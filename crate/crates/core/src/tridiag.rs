//! Tridiagonal solves by the Thomas algorithm.

use crate::error::{BondError, Result};

/// Pivots smaller than this in magnitude are treated as zero.
const PIVOT_FLOOR: f64 = 1e-300;

/// Reusable work space for repeated solves of the same size.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    /// `lower[0]` is unused.
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    /// `upper[n-1]` is unused.
    pub upper: Vec<f64>,
    scratch: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Tridiagonal {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
            scratch: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Overwrites `rhs` with the solution of `M x = rhs`.
    pub fn solve_in_place(&mut self, rhs: &mut [f64]) -> Result<()> {
        let n = self.len();
        assert_eq!(rhs.len(), n, "right-hand side length");
        if n == 0 {
            return Ok(());
        }
        let c = &mut self.scratch;
        let mut pivot = self.diag[0];
        check_pivot(0, pivot)?;
        c[0] = self.upper[0] / pivot;
        rhs[0] /= pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.lower[i] * c[i - 1];
            check_pivot(i, pivot)?;
            c[i] = if i + 1 < n { self.upper[i] / pivot } else { 0.0 };
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= c[i] * rhs[i + 1];
        }
        Ok(())
    }

    /// `y = M x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.upper[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }
}

fn check_pivot(row: usize, pivot: f64) -> Result<()> {
    if !(pivot.abs() >= PIVOT_FLOOR) {
        return Err(BondError::TridiagonalSingular { row, pivot });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_diagonally_dominant_system() {
        let n = 50;
        let mut m = Tridiagonal::zeros(n);
        for i in 0..n {
            m.lower[i] = -1.0 + 0.01 * i as f64;
            m.diag[i] = 4.0;
            m.upper[i] = -1.5;
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut rhs = vec![0.0; n];
        m.apply(&x, &mut rhs);
        m.solve_in_place(&mut rhs).unwrap();
        for (a, b) in rhs.iter().zip(&x) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn reports_zero_pivot() {
        let mut m = Tridiagonal::zeros(3);
        m.diag = vec![1.0, 1.0, 1.0];
        m.lower = vec![0.0, 1.0, 0.0];
        m.upper = vec![1.0, 0.0, 0.0];
        let mut rhs = vec![1.0; 3];
        assert!(matches!(
            m.solve_in_place(&mut rhs),
            Err(BondError::TridiagonalSingular { row: 1, .. })
        ));
    }

    #[test]
    fn single_row() {
        let mut m = Tridiagonal::zeros(1);
        m.diag[0] = 2.0;
        let mut rhs = vec![3.0];
        m.solve_in_place(&mut rhs).unwrap();
        assert_eq!(rhs[0], 1.5);
    }
}
