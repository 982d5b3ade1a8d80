//! Small dense kernels: minimum-norm least squares, null spaces and LU,
//! all on top of `faer`.

use faer::prelude::*;
use faer::Mat;

/// Relative singular-value cutoff for rank decisions.
pub const RANK_RTOL: f64 = 1e-12;

/// Dense matrix from row-major rows.
pub fn from_rows(rows: &[Vec<f64>], ncols: usize) -> Mat<f64> {
    Mat::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

fn numerical_rank(s: &[f64]) -> usize {
    let smax = s.iter().fold(0.0f64, |m, &v| m.max(v));
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > RANK_RTOL * smax).count()
}

/// Minimum-norm least-squares solution of `A x = b`.
#[derive(Clone, Debug)]
pub struct MinNorm {
    pub x: Vec<f64>,
    pub rank: usize,
    /// `‖A x − b‖_∞`.
    pub residual: f64,
}

/// Solves `min ‖x‖` over the minimizers of `‖A x − b‖₂` through a thin
/// SVD, treating singular values below `1e-12·σ_max` as zero.
pub fn min_norm_solve(a: &Mat<f64>, b: &[f64]) -> MinNorm {
    let (m, n) = (a.nrows(), a.ncols());
    assert_eq!(b.len(), m);
    if m == 0 || n == 0 {
        let residual = b.iter().fold(0.0f64, |r, v| r.max(v.abs()));
        return MinNorm { x: vec![0.0; n], rank: 0, residual };
    }
    let svd = a.thin_svd().expect("svd converges");
    let s: Vec<f64> = (0..m.min(n)).map(|k| svd.S().column_vector()[k]).collect();
    let r = numerical_rank(&s);
    let u = svd.U();
    let v = svd.V();
    let mut x = vec![0.0; n];
    for k in 0..r {
        let mut coef = 0.0;
        for i in 0..m {
            coef += u[(i, k)] * b[i];
        }
        coef /= s[k];
        for j in 0..n {
            x[j] += v[(j, k)] * coef;
        }
    }
    let residual = residual_inf(a, &x, b);
    MinNorm { x, rank: r, residual }
}

/// `‖A x − b‖_∞`.
pub fn residual_inf(a: &Mat<f64>, x: &[f64], b: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        let mut s = -b[i];
        for j in 0..a.ncols() {
            s += a[(i, j)] * x[j];
        }
        worst = worst.max(s.abs());
    }
    worst
}

/// Numerical rank of `A`.
pub fn rank(a: &Mat<f64>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let s = a.singular_values().expect("svd converges");
    numerical_rank(&s)
}

/// Number of singular values of `A` above the absolute cutoff `atol`.
pub fn rank_abs(a: &Mat<f64>, atol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let s = a.singular_values().expect("svd converges");
    s.iter().filter(|&&v| v > atol).count()
}

/// Orthonormal basis of the null space of `A`, one basis vector per column.
pub fn null_space(a: &Mat<f64>) -> Mat<f64> {
    let (m, n) = (a.nrows(), a.ncols());
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    if m == 0 {
        return Mat::identity(n, n);
    }
    let svd = a.svd().expect("svd converges");
    let s: Vec<f64> = (0..m.min(n)).map(|k| svd.S().column_vector()[k]).collect();
    let r = numerical_rank(&s);
    let v = svd.V();
    Mat::from_fn(n, n - r, |i, j| v[(i, r + j)])
}

/// LU factorization with partial pivoting of a square matrix.
pub struct Lu {
    lu: faer::linalg::solvers::PartialPivLu<f64>,
    n: usize,
}

impl Lu {
    pub fn new(a: &Mat<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        Lu { lu: a.partial_piv_lu(), n: a.nrows() }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Solves for every column of `b` at once.
    pub fn solve_mat(&self, b: &Mat<f64>) -> Mat<f64> {
        self.lu.solve(b)
    }
}

/// `A x` for a dense matrix.
pub fn mat_vec(a: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_norm_underdetermined() {
        // x + y = 2 → min-norm (1, 1)
        let a = from_rows(&[vec![1.0, 1.0]], 2);
        let s = min_norm_solve(&a, &[2.0]);
        assert!((s.x[0] - 1.0).abs() < 1e-14 && (s.x[1] - 1.0).abs() < 1e-14);
        assert_eq!(s.rank, 1);
        assert!(s.residual < 1e-14);
    }

    #[test]
    fn least_squares_inconsistent() {
        // x = 1, x = 3 → x = 2 with residual 1
        let a = from_rows(&[vec![1.0], vec![1.0]], 1);
        let s = min_norm_solve(&a, &[1.0, 3.0]);
        assert!((s.x[0] - 2.0).abs() < 1e-14);
        assert!((s.residual - 1.0).abs() < 1e-14);
    }

    #[test]
    fn null_space_is_orthonormal() {
        let a = from_rows(&[vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]], 3);
        let k = null_space(&a);
        assert_eq!(k.ncols(), 1);
        let v: Vec<f64> = (0..3).map(|i| k[(i, 0)]).collect();
        assert!(mat_vec(&a, &v).iter().all(|x| x.abs() < 1e-14));
        assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-14);
        assert_eq!(rank(&a), 2);
        assert_eq!(null_space(&from_rows(&[vec![0.0, 0.0]], 2)).ncols(), 2);
    }

    #[test]
    fn lu_roundtrip() {
        let a = from_rows(&[vec![4.0, 1.0], vec![2.0, 3.0]], 2);
        let x = Lu::new(&a).solve(&[1.0, 2.0]);
        let r = residual_inf(&a, &x, &[1.0, 2.0]);
        assert!(r < 1e-14);
    }
}
