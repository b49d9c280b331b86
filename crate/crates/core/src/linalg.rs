//! Small dense-matrix helpers and Gauss-Legendre quadrature nodes.
//!
//! Everything here operates on column-major [`Mat`] values a handful of rows
//! and columns wide; no external linear-algebra crate is pulled in for that.

use crate::error::{Error, Result};

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Mat {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Mat {
        let mut m = Mat::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds from row-major slices, mostly for tests and fixed tables.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Mat> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::Dimension { expected: 1, got: 0 });
        }
        let c = rows[0].len();
        for row in rows {
            if row.len() != c {
                return Err(Error::Dimension { expected: c, got: row.len() });
            }
        }
        Ok(Mat::from_fn(r, c, |i, j| rows[i][j]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::Dimension { expected: self.cols, got: other.rows });
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            for k in 0..self.cols {
                let b = other[(k, j)];
                if b == 0.0 {
                    continue;
                }
                for i in 0..self.rows {
                    out[(i, j)] += self[(i, k)] * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Mat) -> Result<Mat> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension { expected: self.rows * self.cols, got: other.rows * other.cols });
        }
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Mat {
        let mut out = self.clone();
        for a in &mut out.data {
            *a *= s;
        }
        out
    }

    pub fn hadamard(&self, other: &Mat) -> Result<Mat> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension { expected: self.rows * self.cols, got: other.rows * other.cols });
        }
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a *= b;
        }
        Ok(out)
    }

    /// Places column i of an N x K matrix onto the block-diagonal of an
    /// (N*K) x K matrix: output rows i*N .. (i+1)*N of column i hold the
    /// column, all other entries are zero.
    pub fn blkdiag_columns(&self) -> Mat {
        let n = self.rows;
        let k = self.cols;
        let mut out = Mat::zeros(n * k, k);
        for j in 0..k {
            for i in 0..n {
                out[(j * n + i, j)] = self[(i, j)];
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Column-stacking of the matrix.
    pub fn vec(&self) -> Vec<f64> {
        self.data.clone()
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Mat> {
        if data.len() != rows * cols {
            return Err(Error::Dimension { expected: rows * cols, got: data.len() });
        }
        Ok(Mat { rows, cols, data })
    }

    /// Kronecker product `self (x) other`.
    pub fn kron(&self, other: &Mat) -> Mat {
        let mut out = Mat::zeros(self.rows * other.rows, self.cols * other.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                let a = self[(i, j)];
                if a == 0.0 {
                    continue;
                }
                for jj in 0..other.cols {
                    for ii in 0..other.rows {
                        out[(i * other.rows + ii, j * other.cols + jj)] = a * other[(ii, jj)];
                    }
                }
            }
        }
        out
    }

    /// Numerical rank via Gaussian elimination with partial pivoting.
    pub fn rank(&self, tol: f64) -> usize {
        let mut a = self.clone();
        let (m, n) = (a.rows, a.cols);
        let mut rank = 0usize;
        let mut row = 0usize;
        for col in 0..n {
            if row >= m {
                break;
            }
            // Pivot search in this column.
            let mut piv = row;
            for i in row + 1..m {
                if a[(i, col)].abs() > a[(piv, col)].abs() {
                    piv = i;
                }
            }
            if a[(piv, col)].abs() <= tol {
                continue;
            }
            if piv != row {
                for j in 0..n {
                    let tmp = a[(row, j)];
                    a[(row, j)] = a[(piv, j)];
                    a[(piv, j)] = tmp;
                }
            }
            let p = a[(row, col)];
            for i in row + 1..m {
                let f = a[(i, col)] / p;
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[(i, j)] -= f * a[(row, j)];
                }
            }
            row += 1;
            rank += 1;
        }
        rank
    }

    /// Solves `self * X = B` for symmetric positive-definite `self` via
    /// Cholesky factorization.
    pub fn solve_spd(&self, b: &Mat) -> Result<Mat> {
        if self.rows != self.cols {
            return Err(Error::Dimension { expected: self.rows, got: self.cols });
        }
        if b.rows != self.rows {
            return Err(Error::Dimension { expected: self.rows, got: b.rows });
        }
        let n = self.rows;
        // Lower-triangular factor, column-major.
        let mut l = vec![0.0f64; n * n];
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[j + k * n] * l[j + k * n];
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::Numeric(format!(
                    "matrix is not positive definite (pivot {d} at {j})"
                )));
            }
            let dj = d.sqrt();
            l[j + j * n] = dj;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[i + k * n] * l[j + k * n];
                }
                l[i + j * n] = s / dj;
            }
        }
        let mut x = b.clone();
        for c in 0..x.cols {
            // Forward substitution L y = b.
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= l[i + k * n] * x[(k, c)];
                }
                x[(i, c)] = s / l[i + i * n];
            }
            // Back substitution L^T x = y.
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s -= l[k + i * n] * x[(k, c)];
                }
                x[(i, c)] = s / l[i + i * n];
            }
        }
        Ok(x)
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i + j * self.rows]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i + j * self.rows]
    }
}

/// Symmetric 3x3 matrix with quadratic-form helpers, used by the coherence
/// expansions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym3 {
    // Row-major upper triangle mirrored: m[i][j].
    pub m: [[f64; 3]; 3],
}

impl Sym3 {
    pub fn zero() -> Sym3 {
        Sym3 { m: [[0.0; 3]; 3] }
    }

    pub fn identity() -> Sym3 {
        let mut s = Sym3::zero();
        for i in 0..3 {
            s.m[i][i] = 1.0;
        }
        s
    }

    /// `v v^T` outer product.
    pub fn outer(v: [f64; 3]) -> Sym3 {
        let mut s = Sym3::zero();
        for i in 0..3 {
            for j in 0..3 {
                s.m[i][j] = v[i] * v[j];
            }
        }
        s
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, o: Sym3) -> Sym3 {
        let mut s = self;
        for i in 0..3 {
            for j in 0..3 {
                s.m[i][j] += o.m[i][j];
            }
        }
        s
    }

    pub fn scale(self, k: f64) -> Sym3 {
        let mut s = self;
        for i in 0..3 {
            for j in 0..3 {
                s.m[i][j] *= k;
            }
        }
        s
    }

    pub fn quad_form(self, v: [f64; 3]) -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                acc += v[i] * self.m[i][j] * v[j];
            }
        }
        acc
    }

    pub fn apply(self, v: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (o, row) in out.iter_mut().zip(&self.m) {
            for (m, x) in row.iter().zip(&v) {
                *o += m * x;
            }
        }
        out
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre polynomial with the standard Chebyshev initial
/// guesses.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' by the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (pn1 - x * pn) / (1.0 - x * x);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Maps `[-1, 1]` nodes/weights to `[a, b]`.
pub fn scale_interval(nodes: &[f64], weights: &[f64], a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        nodes.iter().map(|x| mid + half * x).collect(),
        weights.iter().map(|w| w * half).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matmul_and_transpose() {
        let a = Mat::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]).unwrap();
        let b = Mat::from_rows(&[&[7.0, 8.0], &[9.0, 10.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        let expect =
            Mat::from_rows(&[&[25.0, 28.0], &[57.0, 64.0], &[89.0, 100.0]]).unwrap();
        assert_eq!(c, expect);
        assert_eq!(a.transpose().rows(), 2);
        assert_eq!(a.transpose()[(0, 2)], 5.0);
    }

    #[test]
    fn kron_identity_example() {
        let a = Mat::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let i2 = Mat::identity(2);
        let k = i2.kron(&a);
        assert_eq!(k.rows(), 4);
        assert_eq!(k[(0, 0)], 1.0);
        assert_eq!(k[(1, 1)], 4.0);
        assert_eq!(k[(2, 2)], 1.0);
        assert_eq!(k[(3, 2)], 3.0);
        assert_eq!(k[(0, 2)], 0.0);
    }

    #[test]
    fn rank_of_simple_matrices() {
        assert_eq!(Mat::identity(3).rank(1e-12), 3);
        assert_eq!(Mat::zeros(3, 4).rank(1e-12), 0);
        // Rank-1 outer product.
        let m = Mat::from_fn(3, 3, |i, j| ((i + 1) * (j + 1)) as f64);
        assert_eq!(m.rank(1e-9), 1);
    }

    #[test]
    fn rank_bound_of_masked_pilot_operator() {
        // For random pilot X (N_t x P, P >= N_t) and any binary alignment V,
        // rank of (X^T kron I_{N_r}) blkdiag(V)^T is at most N_t * N_r.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let (n_t, n_r, n, p) = (2usize, 2usize, 9usize, 5usize);
        let x = Mat::from_fn(n_t, p, |_, _| rng.gen_range(0.0..1.0f64));
        for _ in 0..5 {
            let v = Mat::from_fn(n, n_t * n_r, |_, _| f64::from(rng.gen_bool(0.3)));
            let op = x
                .transpose()
                .kron(&Mat::identity(n_r))
                .matmul(&v.blkdiag_columns().transpose())
                .unwrap();
            assert!(op.rank(1e-9) <= n_t * n_r);
        }
    }

    #[test]
    fn vec_stacks_columns() {
        // [[a,b],[c,d]] -> (a, c, b, d).
        let m = Mat::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        assert_eq!(m.vec(), vec![1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn hadamard_elementwise() {
        let a = Mat::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let b = Mat::from_rows(&[&[5.0, 6.0], &[7.0, 8.0]]).unwrap();
        let h = a.hadamard(&b).unwrap();
        assert_eq!(h, Mat::from_rows(&[&[5.0, 12.0], &[21.0, 32.0]]).unwrap());
        assert_eq!(h, b.hadamard(&a).unwrap());
    }

    #[test]
    fn blkdiag_columns_of_identity() {
        let d = Mat::identity(2).blkdiag_columns();
        assert_eq!(d.rows(), 4);
        assert_eq!(d.cols(), 2);
        assert_eq!(d[(0, 0)], 1.0);
        assert_eq!(d[(3, 1)], 1.0);
        assert_eq!(d[(1, 0)], 0.0);
        assert_eq!(d[(2, 1)], 0.0);
    }

    #[test]
    fn blkdiag_columns_single_column_is_itself() {
        let v = Mat::from_rows(&[&[1.5], &[-2.0], &[0.25]]).unwrap();
        let d = v.blkdiag_columns();
        assert_eq!(d, v);
    }

    #[test]
    fn blkdiag_transpose_gives_columnwise_dots() {
        // blkdiag(A)^T vec(M) stacks the per-column dot products
        // <A[:,j], M[:,j]>.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let a = Mat::from_fn(3, 2, |_, _| rng.gen_range(-1.0..1.0));
        let m = Mat::from_fn(3, 2, |_, _| rng.gen_range(-1.0..1.0));
        let got = a
            .blkdiag_columns()
            .transpose()
            .matmul(&Mat::from_vec(6, 1, m.vec()).unwrap())
            .unwrap();
        for j in 0..2 {
            let dot: f64 = (0..3).map(|i| a[(i, j)] * m[(i, j)]).sum();
            assert!((got[(j, 0)] - dot).abs() < 1e-12);
        }
    }

    #[test]
    fn kron_mixed_product_identity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut m = |r, c| Mat::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0f64));
        let a = m(2, 3);
        let c = m(3, 2);
        let b = m(2, 2);
        let d = m(2, 3);
        let lhs = a.kron(&b).matmul(&c.kron(&d)).unwrap();
        let rhs = a.matmul(&c).unwrap().kron(&b.matmul(&d).unwrap());
        let mut diff = lhs.clone();
        for i in 0..diff.rows() {
            for j in 0..diff.cols() {
                diff[(i, j)] -= rhs[(i, j)];
            }
        }
        assert!(diff.frobenius_norm() < 1e-10);
    }

    #[test]
    fn vec_of_triple_product_matches_kron_form() {
        // vec(A B C) = (C^T (x) A) vec(B) for random 3x3 factors.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        for _ in 0..10 {
            let mut m = || Mat::from_fn(3, 3, |_, _| rng.gen_range(-2.0..2.0f64));
            let a = m();
            let b = m();
            let c = m();
            let lhs = a.matmul(&b).unwrap().matmul(&c).unwrap().vec();
            let rhs = c
                .transpose()
                .kron(&a)
                .matmul(&Mat::from_vec(9, 1, b.vec()).unwrap())
                .unwrap()
                .vec();
            for (l, r) in lhs.iter().zip(&rhs) {
                assert!((l - r).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn solve_spd_recovers_known_solution() {
        let a = Mat::from_rows(&[&[4.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 2.0]]).unwrap();
        let x_true = Mat::from_rows(&[&[1.0], &[-2.0], &[3.0]]).unwrap();
        let b = a.matmul(&x_true).unwrap();
        let x = a.solve_spd(&b).unwrap();
        for i in 0..3 {
            assert!((x[(i, 0)] - x_true[(i, 0)]).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_spd_rejects_indefinite() {
        let a = Mat::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap();
        let b = Mat::from_rows(&[&[1.0], &[1.0]]).unwrap();
        assert!(a.solve_spd(&b).is_err());
    }

    #[test]
    fn gauss_legendre_low_orders_match_tables() {
        let (x, w) = gauss_legendre(2);
        let r = 1.0 / 3.0f64.sqrt();
        assert!((x[0] + r).abs() < 1e-14 && (x[1] - r).abs() < 1e-14);
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] - 1.0).abs() < 1e-14);

        let (x, w) = gauss_legendre(3);
        let r = (3.0f64 / 5.0).sqrt();
        assert!((x[0] + r).abs() < 1e-14);
        assert!(x[1].abs() < 1e-14);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-14);
        assert!((w[0] - 5.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        // Order-n rule is exact for degree 2n-1.
        for n in [1usize, 2, 4, 8, 16] {
            let (x, w) = gauss_legendre(n);
            let deg = 2 * n - 1;
            // integral of x^deg over [-1,1] is 0 for odd deg; use x^(deg-1).
            let d = deg - 1;
            let quad: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(d as i32)).sum();
            let exact = 2.0 / (d as f64 + 1.0);
            assert!((quad - exact).abs() < 1e-12, "n={n} deg={d}: {quad} vs {exact}");
        }
    }

    #[test]
    fn scale_interval_integrates_shifted_quadratic() {
        let (x, w) = gauss_legendre(4);
        let (x, w) = scale_interval(&x, &w, 1.0, 3.0);
        let quad: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi * xi).sum();
        assert!((quad - 26.0 / 3.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn vec_of_product_matches_kron_identity(
            a in proptest::collection::vec(-5.0..5.0f64, 6),
            b in proptest::collection::vec(-5.0..5.0f64, 6),
        ) {
            // vec(A B) = (I (x) A) vec(B) for A 2x3, B 3x2.
            let a = Mat::from_vec(2, 3, a).unwrap();
            let b = Mat::from_vec(3, 2, b).unwrap();
            let lhs = a.matmul(&b).unwrap().vec();
            let k = Mat::identity(2).kron(&a);
            let rhs = k
                .matmul(&Mat::from_vec(6, 1, b.vec()).unwrap())
                .unwrap()
                .vec();
            for (l, r) in lhs.iter().zip(&rhs) {
                prop_assert!((l - r).abs() < 1e-10);
            }
        }

        #[test]
        fn solve_spd_residual_small(entries in proptest::collection::vec(-2.0..2.0f64, 9),
                                    rhs in proptest::collection::vec(-2.0..2.0f64, 3)) {
            // A = M^T M + I is SPD.
            let m = Mat::from_vec(3, 3, entries).unwrap();
            let a = m.transpose().matmul(&m).unwrap().add(&Mat::identity(3)).unwrap();
            let b = Mat::from_vec(3, 1, rhs).unwrap();
            let x = a.solve_spd(&b).unwrap();
            let r = a.matmul(&x).unwrap();
            for i in 0..3 {
                prop_assert!((r[(i, 0)] - b[(i, 0)]).abs() < 1e-9);
            }
        }
    }
}
