//! Small dense matrix and a column-pivoted Householder QR least-squares solver.

use serde::{Deserialize, Serialize};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Rows picked by index.
    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Matrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }
}

/// Least-squares solution of `a * beta ~= b` from a column-pivoted QR.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub beta: Vec<f64>,
    /// Numerical rank; pivoted-out columns get a zero coefficient.
    pub rank: usize,
}

/// Solves min ||a beta - b|| with Householder QR and column pivoting.
///
/// A column is treated as dependent once its remaining norm falls to
/// `rel_tol` times the largest diagonal of R.
pub fn lstsq_qr(a: &Matrix, b: &[f64], rel_tol: f64) -> LeastSquares {
    let m = a.rows();
    let n = a.cols();
    assert_eq!(b.len(), m, "rhs length");
    // column-major working copy
    let mut cols: Vec<Vec<f64>> = (0..n).map(|c| a.column(c)).collect();
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let steps = m.min(n);
    let mut rank = 0;
    let mut largest_diag = 0.0_f64;

    for k in 0..steps {
        let (pivot, norm) = (k..n)
            .map(|j| (j, cols[j][k..].iter().map(|v| v * v).sum::<f64>().sqrt()))
            .fold(
                (k, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if k == 0 {
            largest_diag = norm;
        }
        if norm <= rel_tol * largest_diag || norm == 0.0 {
            break;
        }
        cols.swap(k, pivot);
        perm.swap(k, pivot);

        // Householder vector for cols[k][k..]
        let alpha = if cols[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for col in cols.iter_mut().skip(k + 1) {
                let dot: f64 = v.iter().zip(&col[k..]).map(|(a, b)| a * b).sum();
                let s = 2.0 * dot / vnorm2;
                for (ci, vi) in col[k..].iter_mut().zip(&v) {
                    *ci -= s * vi;
                }
            }
            let dot: f64 = v.iter().zip(&rhs[k..]).map(|(a, b)| a * b).sum();
            let s = 2.0 * dot / vnorm2;
            for (ri, vi) in rhs[k..].iter_mut().zip(&v) {
                *ri -= s * vi;
            }
        }
        cols[k][k] = alpha;
        for x in cols[k][k + 1..].iter_mut() {
            *x = 0.0;
        }
        rank += 1;
    }

    // back substitution on the leading rank x rank block
    let mut z = vec![0.0; rank];
    for i in (0..rank).rev() {
        let mut acc = rhs[i];
        for (j, zj) in z.iter().enumerate().skip(i + 1) {
            acc -= cols[j][i] * zj;
        }
        z[i] = acc / cols[i][i];
    }
    let mut beta = vec![0.0; n];
    for (i, zi) in z.into_iter().enumerate() {
        beta[perm[i]] = zi;
    }
    LeastSquares { beta, rank }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_square_system() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let sol = lstsq_qr(&a, &[5.0, 10.0], 1e-10);
        assert_eq!(sol.rank, 2);
        assert!((sol.beta[0] - 1.0).abs() < 1e-12);
        assert!((sol.beta[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_column_gets_zero() {
        let a = Matrix::from_rows(&[
            vec![1.0, 1.0, 1.0],
            vec![1.0, 2.0, 2.0],
            vec![1.0, 3.0, 3.0],
            vec![1.0, 4.0, 4.0],
        ]);
        let sol = lstsq_qr(&a, &[3.0, 5.0, 7.0, 9.0], 1e-10);
        assert_eq!(sol.rank, 2);
        assert!(sol.beta.contains(&0.0));
        let fitted: Vec<f64> = (0..4)
            .map(|r| a.row(r).iter().zip(&sol.beta).map(|(x, b)| x * b).sum())
            .collect();
        for (f, y) in fitted.iter().zip([3.0, 5.0, 7.0, 9.0]) {
            assert!((f - y).abs() < 1e-12);
        }
    }

    #[test]
    fn overdetermined_matches_mean() {
        let a = Matrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]);
        let sol = lstsq_qr(&a, &[1.0, 2.0, 6.0], 1e-10);
        assert!((sol.beta[0] - 3.0).abs() < 1e-14);
    }
}
