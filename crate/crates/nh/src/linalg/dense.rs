//! Dense matrices and the cyclic-Jacobi symmetric eigensolver.

use crate::error::{invalid, Error, Result};

/// Absolute off-diagonal threshold for Jacobi rotations, relative to the
/// largest input entry.
const JACOBI_TOL: f64 = 1e-14;
/// Jacobi sweep cap; cyclic Jacobi on double-precision symmetric matrices
/// converges in far fewer sweeps at any order this crate uses.
const JACOBI_MAX_SWEEPS: usize = 50;

/// Dense rectangular matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds a matrix whose j-th column is `cols[j]`.
    pub fn from_cols(cols: &[Vec<f64>]) -> Self {
        let ncols = cols.len();
        let nrows = if ncols == 0 { 0 } else { cols[0].len() };
        Mat::from_fn(nrows, ncols, |i, j| cols[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[f64]) {
        assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            self.set(i, j, v[i]);
        }
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `self * other`.
    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * out.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// `self^T * other`.
    pub fn tr_mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows, "matrix product shape mismatch");
        let mut out = Mat::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self.get(k, i);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * out.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// `self^T * v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len());
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let a = v[i];
            for j in 0..self.cols {
                out[j] += self.get(i, j) * a;
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Mat {
        let mut m = self.clone();
        for v in &mut m.data {
            *v *= s;
        }
        m
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut m = self.clone();
        for (v, w) in m.data.iter_mut().zip(&other.data) {
            *v -= w;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Modified Gram-Schmidt orthonormalization of the columns.
    /// Fails if the columns are numerically rank-deficient.
    pub fn orthonormalized_columns(&self) -> Result<Mat> {
        let mut q = self.clone();
        for j in 0..q.cols {
            let mut col = q.col(j);
            for k in 0..j {
                let prev = q.col(k);
                let proj = dot(&col, &prev);
                for i in 0..q.rows {
                    col[i] -= proj * prev[i];
                }
            }
            let norm = dot(&col, &col).sqrt();
            if norm < 1e-12 {
                return Err(Error::DegenerateProjection(format!(
                    "column {j} is numerically dependent on earlier columns"
                )));
            }
            for v in &mut col {
                *v /= norm;
            }
            q.set_col(j, &col);
        }
        Ok(q)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense symmetric matrix with full storage; both triangles are kept equal.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseSymMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseSymMatrix { n, data: vec![0.0; n * n] }
    }

    /// Builds from `f` evaluated on the lower triangle and mirrored.
    pub fn from_fn_sym(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DenseSymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set_sym(i, j, f(i, j));
            }
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = DenseSymMatrix::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set_sym(i, i, v);
        }
        m
    }

    /// Interprets a square `Mat` as symmetric, averaging the two triangles;
    /// returns the matrix together with the largest asymmetry found.
    pub fn symmetrized_from(m: &Mat) -> (Self, f64) {
        assert_eq!(m.rows(), m.cols(), "symmetrized_from needs a square matrix");
        let n = m.rows();
        let mut defect: f64 = 0.0;
        let mut out = DenseSymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                defect = defect.max((m.get(i, j) - m.get(j, i)).abs());
                out.set_sym(i, j, 0.5 * (m.get(i, j) + m.get(j, i)));
            }
        }
        (out, defect)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets entry (i, j) and its mirror (j, i).
    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        let cur = self.get(i, j);
        self.set_sym(i, j, cur + v);
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn to_mat(&self) -> Mat {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn scaled(&self, s: f64) -> DenseSymMatrix {
        let mut m = self.clone();
        for v in &mut m.data {
            *v *= s;
        }
        m
    }

    /// Largest-magnitude eigenvalue (the spectral norm for symmetric input).
    pub fn spectral_norm(&self) -> Result<f64> {
        let eig = dense_sym_eigen(self)?;
        Ok(eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
    }
}

/// Eigenvalues ascending with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Eigenvalues are returned ascending; each eigenvector is normalized and
/// sign-fixed so its largest-magnitude component (first such index on ties)
/// is positive, making the output deterministic.
pub fn dense_sym_eigen(a: &DenseSymMatrix) -> Result<EigenPairs> {
    if !a.is_finite() {
        return Err(invalid("eigensolver input contains non-finite entries"));
    }
    let n = a.order();
    if n == 0 {
        return Err(invalid("eigensolver input has order zero"));
    }
    let mut w = a.clone();
    let mut v = Mat::identity(n);
    let tol = JACOBI_TOL * a.max_abs().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(w.get(p, q).abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w.get(p, q);
                if apq.abs() <= tol {
                    continue;
                }
                let theta = (w.get(q, q) - w.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                rotate(&mut w, &mut v, p, q, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w.get(i, i).partial_cmp(&w.get(j, j)).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| w.get(i, i)).collect();
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_col(dst, &v.col(src));
    }
    normalize_column_signs(&mut vectors);
    Ok(EigenPairs { values, vectors })
}

fn rotate(w: &mut DenseSymMatrix, v: &mut Mat, p: usize, q: usize, c: f64, s: f64) {
    let n = w.order();
    let app = w.get(p, p);
    let aqq = w.get(q, q);
    let apq = w.get(p, q);
    w.set_sym(p, p, c * c * app - 2.0 * s * c * apq + s * s * aqq);
    w.set_sym(q, q, s * s * app + 2.0 * s * c * apq + c * c * aqq);
    w.set_sym(p, q, 0.0);
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = w.get(r, p);
        let arq = w.get(r, q);
        w.set_sym(r, p, c * arp - s * arq);
        w.set_sym(r, q, s * arp + c * arq);
    }
    for r in 0..v.rows() {
        let vrp = v.get(r, p);
        let vrq = v.get(r, q);
        v.set(r, p, c * vrp - s * vrq);
        v.set(r, q, s * vrp + c * vrq);
    }
}

/// Flips column signs so the largest-magnitude component of each column
/// (first such index on exact ties) is positive.
pub fn normalize_column_signs(m: &mut Mat) {
    for j in 0..m.cols() {
        let mut best = 0usize;
        let mut best_abs = 0.0f64;
        for i in 0..m.rows() {
            let a = m.get(i, j).abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if m.get(best, j) < 0.0 {
            for i in 0..m.rows() {
                let v = m.get(i, j);
                m.set(i, j, -v);
            }
        }
    }
}

/// Dense Cholesky factorization `A = L L^T`; errors on a non-positive pivot.
pub fn dense_cholesky(a: &DenseSymMatrix) -> Result<Mat> {
    let n = a.order();
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::DegenerateProjection(format!(
                        "non-positive pivot {sum:.3e} at row {i} in Cholesky"
                    )));
                }
                l.set(i, j, sum.sqrt());
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    Ok(l)
}

/// Solves `L y = b` then `L^T x = y` for lower-triangular `L`.
pub fn cholesky_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l.get(i, k) * y[k];
        }
        y[i] /= l.get(i, i);
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] -= l.get(k, i) * y[k];
        }
        y[i] /= l.get(i, i);
    }
    y
}

/// Solves the symmetric-definite pencil `R x = tau G x` with `G` positive
/// definite, returning eigenvalues ascending and G-orthonormal vectors.
pub fn dense_generalized_eigen(r: &DenseSymMatrix, g: &DenseSymMatrix) -> Result<EigenPairs> {
    if r.order() != g.order() {
        return Err(invalid("pencil matrices must share an order"));
    }
    let n = r.order();
    let l = dense_cholesky(g)?;
    // C = L^{-1} R L^{-T}, assembled column by column via triangular solves.
    let mut c = Mat::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        // w = L^{-T} e_j
        let mut w = e;
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                w[i] -= l.get(k, i) * w[k];
            }
            w[i] /= l.get(i, i);
        }
        let rw = r.matvec(&w);
        // column_j = L^{-1} (R w)
        let mut col = rw;
        for i in 0..n {
            for k in 0..i {
                col[i] -= l.get(i, k) * col[k];
            }
            col[i] /= l.get(i, i);
        }
        c.set_col(j, &col);
    }
    let (c_sym, _) = DenseSymMatrix::symmetrized_from(&c);
    let inner = dense_sym_eigen(&c_sym)?;
    // Back-transform: x = L^{-T} y.
    let mut vectors = Mat::zeros(n, n);
    for j in 0..n {
        let mut x = inner.vectors.col(j);
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                x[i] -= l.get(k, i) * x[k];
            }
            x[i] /= l.get(i, i);
        }
        vectors.set_col(j, &x);
    }
    normalize_column_signs(&mut vectors);
    Ok(EigenPairs { values: inner.values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, seed: u64) -> DenseSymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vals = Vec::new();
        for _ in 0..n * n {
            vals.push(rng.gen_range(-1.0..1.0));
        }
        DenseSymMatrix::from_fn_sym(n, |i, j| vals[i * n + j])
    }

    /// Number of eigenvalues of `a` strictly below `x`, by Sylvester inertia
    /// of an LDL^T factorization of `a - x I`. Independent of the Jacobi path.
    fn eigs_below(a: &DenseSymMatrix, x: f64) -> usize {
        let n = a.order();
        let mut m = a.to_mat();
        for i in 0..n {
            let v = m.get(i, i) - x;
            m.set(i, i, v);
        }
        let mut negatives = 0;
        let mut d = vec![0.0; n];
        let mut l = Mat::identity(n);
        for j in 0..n {
            let mut dj = m.get(j, j);
            for k in 0..j {
                dj -= l.get(j, k) * l.get(j, k) * d[k];
            }
            d[j] = dj;
            if dj < 0.0 {
                negatives += 1;
            }
            for i in (j + 1)..n {
                let mut v = m.get(i, j);
                for k in 0..j {
                    v -= l.get(i, k) * l.get(j, k) * d[k];
                }
                l.set(i, j, v / dj);
            }
        }
        negatives
    }

    /// k-th smallest eigenvalue (0-based) via bisection on the inertia count.
    fn bisect_eigenvalue(a: &DenseSymMatrix, k: usize) -> f64 {
        let n = a.order();
        // Gershgorin bounds.
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let radius: f64 = (0..n).filter(|&j| j != i).map(|j| a.get(i, j).abs()).sum();
            lo = lo.min(a.get(i, i) - radius);
            hi = hi.max(a.get(i, i) + radius);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if eigs_below(a, mid) <= k {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn jacobi_matches_bisection_oracle_on_seeded_matrix() {
        let a = random_sym(8, 42);
        let eig = dense_sym_eigen(&a).unwrap();
        for k in 0..8 {
            let oracle = bisect_eigenvalue(&a, k);
            assert!(
                (eig.values[k] - oracle).abs() <= 1e-12,
                "eigenvalue {k}: jacobi {} vs bisection {oracle}",
                eig.values[k]
            );
        }
    }

    #[test]
    fn jacobi_residuals_and_trace() {
        let a = random_sym(12, 3);
        let eig = dense_sym_eigen(&a).unwrap();
        let scale = a.max_abs();
        for k in 0..12 {
            let v = eig.vectors.col(k);
            let av = a.matvec(&v);
            let mut res: f64 = 0.0;
            for i in 0..12 {
                res = res.max((av[i] - eig.values[k] * v[i]).abs());
            }
            assert!(res <= 1e-9 * scale, "residual {res} too large for pair {k}");
        }
        let trace: f64 = (0..12).map(|i| a.get(i, i)).sum();
        let sum: f64 = eig.values.iter().sum();
        assert!((trace - sum).abs() <= 1e-10 * scale.max(1.0));
    }

    #[test]
    fn jacobi_identity_and_diagonal() {
        let eig = dense_sym_eigen(&DenseSymMatrix::diag(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0, 1.0]);

        let eig = dense_sym_eigen(&DenseSymMatrix::diag(&[3.0, -1.0, 2.0])).unwrap();
        assert_eq!(eig.values, vec![-1.0, 2.0, 3.0]);
        // Eigenvectors of a diagonal matrix are signed unit vectors.
        for k in 0..3 {
            let v = eig.vectors.col(k);
            let ones: usize = v.iter().filter(|x| **x == 1.0).count();
            let zeros: usize = v.iter().filter(|x| **x == 0.0).count();
            assert_eq!((ones, zeros), (1, 2));
        }
    }

    #[test]
    fn jacobi_rejects_non_finite() {
        let mut a = DenseSymMatrix::zeros(2);
        a.set_sym(0, 1, f64::NAN);
        assert!(matches!(dense_sym_eigen(&a), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn jacobi_deterministic_bits() {
        let a = random_sym(10, 7);
        let e1 = dense_sym_eigen(&a).unwrap();
        let e2 = dense_sym_eigen(&a).unwrap();
        for k in 0..10 {
            assert_eq!(e1.values[k].to_bits(), e2.values[k].to_bits());
            for i in 0..10 {
                assert_eq!(
                    e1.vectors.get(i, k).to_bits(),
                    e2.vectors.get(i, k).to_bits()
                );
            }
        }
    }

    #[test]
    fn sign_convention_largest_component_positive() {
        let a = random_sym(9, 11);
        let eig = dense_sym_eigen(&a).unwrap();
        for k in 0..9 {
            let v = eig.vectors.col(k);
            let mut best = 0;
            for i in 0..9 {
                if v[i].abs() > v[best].abs() {
                    best = i;
                }
            }
            assert!(v[best] > 0.0);
        }
    }

    #[test]
    fn generalized_pencil_diagonal_example() {
        let r = DenseSymMatrix::diag(&[1.0, 2.0, 3.0]);
        let g = DenseSymMatrix::diag(&[1.0, 1.0, 0.5]);
        let eig = dense_generalized_eigen(&r, &g).unwrap();
        let expect = [1.0, 2.0, 6.0];
        for k in 0..3 {
            assert!((eig.values[k] - expect[k]).abs() <= 1e-12);
        }
        // G-orthonormality.
        for i in 0..3 {
            for j in 0..3 {
                let gi = eig.vectors.col(i);
                let gj = eig.vectors.col(j);
                let form: f64 = (0..3).map(|k| gi[k] * g.get(k, k) * gj[k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((form - want).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_round_trip() {
        let a = {
            let b = random_sym(6, 5).to_mat();
            let bt_b = b.tr_mul(&b);
            let (mut sym, _) = DenseSymMatrix::symmetrized_from(&bt_b);
            for i in 0..6 {
                sym.add_sym(i, i, 6.0);
            }
            sym
        };
        let l = dense_cholesky(&a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = cholesky_solve(&l, &b);
        let ax = a.matvec(&x);
        for i in 0..6 {
            assert!((ax[i] - b[i]).abs() <= 1e-10);
        }
    }

    #[test]
    fn gram_schmidt_produces_orthonormal_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let m = Mat::from_fn(10, 4, |_, _| rng.gen_range(-1.0..1.0));
        let q = m.orthonormalized_columns().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let d = dot(&q.col(i), &q.col(j));
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() <= 1e-12);
            }
        }
    }
}
