//! Householder QR least squares for the small designs used by `econ`.

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_columns(columns: &[&[f64]]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, |c| c.len());
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for (i, &v) in c.iter().enumerate() {
                m.data[i * cols + j] = v;
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }
}

/// Result of a full-rank least-squares solve.
#[derive(Debug, Clone)]
pub(crate) struct LeastSquares {
    pub beta: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `(X'X)^{-1}`, obtained as `R^{-1} R^{-T}`.
    pub xtx_inv: Matrix,
    /// Diagonal of the hat matrix.
    pub leverage: Vec<f64>,
}

/// Columns whose Householder pivot is this small relative to their own norm
/// are treated as linear combinations of earlier columns.
const RANK_TOLERANCE: f64 = 1e-10;

/// Solves `min ||y - X b||` by Householder QR without pivoting. On rank
/// deficiency returns the indices of the columns that add no new direction
/// given the columns before them.
pub(crate) fn least_squares(x: &Matrix, y: &[f64]) -> Result<LeastSquares, Vec<usize>> {
    let (m, n) = (x.rows, x.cols);
    assert_eq!(y.len(), m);
    assert!(m >= n, "underdetermined system");

    // column-major working copy
    let mut a = vec![0.0; m * n];
    let mut col_norms = vec![0.0; n];
    for j in 0..n {
        for i in 0..m {
            a[j * m + i] = x.get(i, j);
        }
        col_norms[j] = a[j * m..(j + 1) * m]
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
    }
    let mut rdiag = vec![0.0; n];
    for k in 0..n {
        let mut nrm = 0.0f64;
        for i in k..m {
            nrm = nrm.hypot(a[k * m + i]);
        }
        if nrm != 0.0 {
            if a[k * m + k] < 0.0 {
                nrm = -nrm;
            }
            for i in k..m {
                a[k * m + i] /= nrm;
            }
            a[k * m + k] += 1.0;
            for j in k + 1..n {
                let mut s = 0.0;
                for i in k..m {
                    s += a[k * m + i] * a[j * m + i];
                }
                s = -s / a[k * m + k];
                for i in k..m {
                    a[j * m + i] += s * a[k * m + i];
                }
            }
        }
        rdiag[k] = -nrm;
    }

    let deficient: Vec<usize> = (0..n)
        .filter(|&k| col_norms[k] == 0.0 || rdiag[k].abs() <= RANK_TOLERANCE * col_norms[k])
        .collect();
    if !deficient.is_empty() {
        return Err(deficient);
    }

    let apply_qt = |v: &mut [f64]| {
        for k in 0..n {
            let mut s = 0.0;
            for i in k..m {
                s += a[k * m + i] * v[i];
            }
            s = -s / a[k * m + k];
            for i in k..m {
                v[i] += s * a[k * m + i];
            }
        }
    };
    let r = |i: usize, j: usize| if i == j { rdiag[i] } else { a[j * m + i] };

    let mut qty = y.to_vec();
    apply_qt(&mut qty);
    let mut beta = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = qty[i];
        for j in i + 1..n {
            s -= r(i, j) * beta[j];
        }
        beta[i] = s / rdiag[i];
    }

    let residuals: Vec<f64> = (0..m)
        .map(|i| y[i] - (0..n).map(|j| x.get(i, j) * beta[j]).sum::<f64>())
        .collect();

    // R^{-1}, upper triangular
    let mut rinv = Matrix::zeros(n, n);
    for j in 0..n {
        rinv.set(j, j, 1.0 / rdiag[j]);
        for i in (0..j).rev() {
            let mut s = 0.0;
            for l in i + 1..=j {
                s += r(i, l) * rinv.get(l, j);
            }
            rinv.set(i, j, -s / rdiag[i]);
        }
    }
    let mut xtx_inv = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let s: f64 = (i.max(j)..n).map(|l| rinv.get(i, l) * rinv.get(j, l)).sum();
            xtx_inv.set(i, j, s);
        }
    }

    // h_ii = ||row_i(X) R^{-1}||^2
    let leverage = (0..m)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let q: f64 = (0..=j).map(|l| x.get(i, l) * rinv.get(l, j)).sum();
                    q * q
                })
                .sum()
        })
        .collect();

    Ok(LeastSquares {
        beta,
        residuals,
        xtx_inv,
        leverage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let ones = [1.0; 4];
        let t = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = t.iter().map(|v| 2.0 + 3.0 * v).collect();
        let fit = least_squares(&Matrix::from_columns(&[&ones, &t]), &y).unwrap();
        assert!((fit.beta[0] - 2.0).abs() < 1e-12);
        assert!((fit.beta[1] - 3.0).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|e| e.abs() < 1e-12));
        // leverage sums to the number of columns
        assert!((fit.leverage.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn xtx_inverse_matches_closed_form() {
        let ones = [1.0; 3];
        let t = [1.0, 2.0, 4.0];
        let fit = least_squares(&Matrix::from_columns(&[&ones, &t]), &[1.0, 0.0, 2.0]).unwrap();
        // X'X = [[3, 7], [7, 21]], det = 14
        let expected = [[21.0 / 14.0, -7.0 / 14.0], [-7.0 / 14.0, 3.0 / 14.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((fit.xtx_inv.get(i, j) - expected[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn collinear_column_reported() {
        let ones = [1.0; 4];
        let t = [0.0, 1.0, 2.0, 5.0];
        let t2 = [0.0, 2.0, 4.0, 10.0];
        let err = least_squares(
            &Matrix::from_columns(&[&ones, &t, &t2]),
            &[1.0, 2.0, 3.0, 4.0],
        )
        .unwrap_err();
        assert_eq!(err, vec![2]);
        let zeros = [0.0; 4];
        let err = least_squares(
            &Matrix::from_columns(&[&ones, &zeros]),
            &[1.0, 2.0, 3.0, 4.0],
        )
        .unwrap_err();
        assert_eq!(err, vec![1]);
    }
}
