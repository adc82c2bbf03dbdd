//! Sparse symmetric matrices and SPD solvers: preconditioned conjugate
//! gradients, incomplete Cholesky, and a banded direct factorization with an
//! optional trailing border block for wrap-around couplings.

use crate::error::{invalid, Error, Result};
use crate::linalg::dense::{cholesky_solve, dense_cholesky, dot, DenseSymMatrix, Mat};

/// Relative residual contract for `spd_solve`.
pub const SPD_SOLVE_TOL: f64 = 1e-10;

/// Banded factor storage cap. Above this the auto solver falls back to
/// incomplete-Cholesky PCG rather than risk exhausting memory.
const BAND_MEMORY_CAP_BYTES: usize = 1_600_000_000;

/// Symmetric sparse matrix storing the lower triangle (j <= i) in CSR form.
#[derive(Debug, Clone)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Triplet accumulator for [`SparseSymMatrix`]. Entries may be added in any
/// order and in either triangle; duplicates accumulate.
pub struct SparseBuilder {
    n: usize,
    triplets: Vec<(usize, usize, f64)>,
}

impl SparseBuilder {
    pub fn new(n: usize) -> Self {
        SparseBuilder { n, triplets: Vec::new() }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.triplets.push((r, c, v));
    }

    pub fn build(mut self) -> SparseSymMatrix {
        // Diagonal entries always exist so preconditioners and band layouts
        // can assume them.
        for i in 0..self.n {
            self.triplets.push((i, i, 0.0));
        }
        self.triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_counts = vec![0usize; self.n + 1];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut prev: Option<(usize, usize)> = None;
        for (r, c, v) in self.triplets {
            if prev == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_counts[r + 1] += 1;
                prev = Some((r, c));
            }
        }
        for r in 0..self.n {
            row_counts[r + 1] += row_counts[r];
        }
        SparseSymMatrix { n: self.n, row_ptr: row_counts, cols, vals }
    }
}

impl SparseSymMatrix {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn nnz_lower(&self) -> usize {
        self.vals.len()
    }

    /// Stored lower-triangle entries of row `i` as (column, value) pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.cols[lo..hi].iter().copied().zip(self.vals[lo..hi].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        for (col, v) in self.row(r) {
            if col == c {
                return v;
            }
        }
        0.0
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                y[i] += v * x[j];
                if j != i {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if j == i {
                    d[i] = v;
                }
            }
        }
        d
    }

    pub fn to_dense(&self) -> DenseSymMatrix {
        let mut m = DenseSymMatrix::zeros(self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m.set_sym(i, j, v);
            }
        }
        m
    }

    /// x^T A y without forming A y separately.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                acc += v * x[i] * y[j];
                if j != i {
                    acc += v * x[j] * y[i];
                }
            }
        }
        acc
    }
}

fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

enum Preconditioner {
    Jacobi(Vec<f64>),
    Ic0(Ic0),
}

impl Preconditioner {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        match self {
            Preconditioner::Jacobi(inv_diag) => {
                r.iter().zip(inv_diag).map(|(x, d)| x * d).collect()
            }
            Preconditioner::Ic0(ic) => ic.solve(r),
        }
    }
}

/// Projects `v` onto the orthogonal complement of the all-ones vector.
fn deflate_constants(v: &mut [f64]) {
    let mean: f64 = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
}

fn pcg(
    a: &SparseSymMatrix,
    b: &[f64],
    precond: &Preconditioner,
    rel_tol: f64,
    deflate: bool,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = a.order();
    if b.len() != n {
        return Err(invalid("right-hand side length mismatch"));
    }
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let target = rel_tol * b_norm;
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    if deflate {
        deflate_constants(&mut r);
    }
    let mut z = precond.apply(&r);
    if deflate {
        deflate_constants(&mut z);
    }
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res_norm = norm2(&r);
    for _ in 0..max_iter {
        if res_norm <= target {
            // Confirm with the true residual before declaring victory.
            let ax = a.matvec(&x);
            let mut true_r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            if deflate {
                deflate_constants(&mut true_r);
            }
            let true_norm = norm2(&true_r);
            if true_norm <= target {
                return Ok(x);
            }
            r = true_r;
            z = precond.apply(&r);
            if deflate {
                deflate_constants(&mut z);
            }
            p = z.clone();
            rz = dot(&r, &z);
        }
        let ap = a.matvec(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(invalid(format!(
                "matrix is not positive definite on the iterate space (p^T A p = {pap:.3e})"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if deflate {
            deflate_constants(&mut r);
        }
        z = precond.apply(&r);
        if deflate {
            deflate_constants(&mut z);
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res_norm = norm2(&r);
    }
    // Final acceptance check at the cap.
    let ax = a.matvec(&x);
    let mut true_r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    if deflate {
        deflate_constants(&mut true_r);
    }
    let final_res = norm2(&true_r);
    if final_res <= target {
        return Ok(x);
    }
    Err(Error::Solver {
        message: "conjugate gradients hit the iteration cap".into(),
        residual: final_res / b_norm,
    })
}

/// Solves `A x = b` for symmetric positive definite `A` by Jacobi-
/// preconditioned conjugate gradients with relative residual
/// `||Ax - b|| <= 1e-10 ||b||`.
pub fn spd_solve(a: &SparseSymMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let diag = a.diagonal();
    if let Some((i, &d)) = diag.iter().enumerate().find(|(_, d)| **d <= 0.0) {
        return Err(invalid(format!(
            "diagonal entry {d:.3e} at row {i} is not positive; matrix cannot be SPD"
        )));
    }
    let inv: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let max_iter = 40 * a.order() + 200;
    pcg(a, b, &Preconditioner::Jacobi(inv), SPD_SOLVE_TOL, false, max_iter)
}

/// Solves the compatible singular system `K x = b` where `K` is symmetric
/// positive semi-definite with null space spanned by the constant vector
/// (pure-Neumann stiffness). Iterates are deflated against constants; the
/// returned solution has zero component along the constant vector.
pub fn neumann_singular_solve(k: &SparseSymMatrix, b: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
    let sum: f64 = b.iter().sum();
    let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
    if sum.abs() > 1e-10 * scale * b.len() as f64 {
        return Err(invalid(format!(
            "incompatible right-hand side for singular Neumann solve (component along constants {sum:.3e})"
        )));
    }
    let ic = Ic0::new(k)?;
    let max_iter = 40 * k.order() + 200;
    let mut x = pcg(k, b, &Preconditioner::Ic0(ic), rel_tol, true, max_iter)?;
    deflate_constants(&mut x);
    Ok(x)
}

/// Incomplete Cholesky factorization on the sparsity pattern of `A`'s lower
/// triangle. If a pivot collapses, the diagonal is shifted and the
/// factorization restarted, so construction succeeds for any symmetric matrix
/// with positive diagonal (including singular Neumann stiffness).
pub struct Ic0 {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Ic0 {
    pub fn new(a: &SparseSymMatrix) -> Result<Self> {
        let diag = a.diagonal();
        let max_diag = diag.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if max_diag == 0.0 {
            return Err(invalid("cannot precondition a zero matrix"));
        }
        let mut shift = 0.0;
        for _ in 0..40 {
            match Self::try_factor(a, shift) {
                Some(ic) => return Ok(ic),
                None => {
                    shift = if shift == 0.0 { 1e-8 * max_diag } else { shift * 8.0 };
                }
            }
        }
        Err(invalid("incomplete Cholesky failed even with diagonal shifts"))
    }

    fn try_factor(a: &SparseSymMatrix, shift: f64) -> Option<Self> {
        let n = a.order();
        let row_ptr = a.row_ptr.clone();
        let cols = a.cols.clone();
        let mut vals = a.vals.clone();
        // Position of the diagonal within each row (last stored entry).
        let mut diag_pos = vec![0usize; n];
        for i in 0..n {
            diag_pos[i] = row_ptr[i + 1] - 1;
            debug_assert_eq!(cols[diag_pos[i]], i);
            vals[diag_pos[i]] += shift;
        }
        for i in 0..n {
            for idx in row_ptr[i]..row_ptr[i + 1] {
                let j = cols[idx];
                // Sparse dot of rows i and j over columns < j.
                let mut sum = vals[idx];
                let (mut pi, mut pj) = (row_ptr[i], row_ptr[j]);
                let (ei, ej) = (diag_pos[i], diag_pos[j]);
                while pi < ei && pj < ej {
                    match cols[pi].cmp(&cols[pj]) {
                        std::cmp::Ordering::Less => pi += 1,
                        std::cmp::Ordering::Greater => pj += 1,
                        std::cmp::Ordering::Equal => {
                            if cols[pi] >= j {
                                break;
                            }
                            sum -= vals[pi] * vals[pj];
                            pi += 1;
                            pj += 1;
                        }
                    }
                }
                if j == i {
                    if sum <= 0.0 {
                        return None;
                    }
                    vals[idx] = sum.sqrt();
                } else {
                    vals[idx] = sum / vals[diag_pos[j]];
                }
            }
        }
        Some(Ic0 { n, row_ptr, cols, vals })
    }

    /// Applies (L L^T)^{-1}.
    pub fn solve(&self, r: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = r.to_vec();
        for i in 0..n {
            let lo = self.row_ptr[i];
            let hi = self.row_ptr[i + 1];
            let mut sum = y[i];
            for idx in lo..hi - 1 {
                sum -= self.vals[idx] * y[self.cols[idx]];
            }
            y[i] = sum / self.vals[hi - 1];
        }
        for i in (0..n).rev() {
            let lo = self.row_ptr[i];
            let hi = self.row_ptr[i + 1];
            y[i] /= self.vals[hi - 1];
            let yi = y[i];
            for idx in lo..hi - 1 {
                y[self.cols[idx]] -= self.vals[idx] * yi;
            }
        }
        y
    }
}

/// Banded Cholesky of the leading block plus a dense Schur complement for a
/// trailing border of rows (wrap-around couplings in periodic meshes).
pub struct BandCholesky {
    n: usize,
    interior: usize,
    bandwidth: usize,
    /// Row-major band storage: entry (i, i - d) at `band[i * (bw + 1) + d]`.
    band: Vec<f64>,
    /// Border coupling columns (interior index, value) per border dof.
    border_cols: Vec<Vec<(usize, f64)>>,
    /// Dense Cholesky factor of the border Schur complement.
    schur: Option<Mat>,
}

impl BandCholesky {
    /// Factors `A` with the trailing `border` rows handled densely.
    pub fn new(a: &SparseSymMatrix, border: usize) -> Result<Self> {
        let n = a.order();
        if border >= n {
            return Err(invalid("border must leave at least one interior row"));
        }
        let interior = n - border;
        let mut bandwidth = 0usize;
        for i in 0..interior {
            for (j, _) in a.row(i) {
                bandwidth = bandwidth.max(i - j);
            }
        }
        let width = bandwidth + 1;
        let mut band = vec![0.0; interior * width];
        for i in 0..interior {
            for (j, v) in a.row(i) {
                band[i * width + (i - j)] = v;
            }
        }
        // In-place banded Cholesky of the interior block.
        for j in 0..interior {
            let start = j.saturating_sub(bandwidth);
            let mut diag = band[j * width];
            for k in start..j {
                let l_jk = band[j * width + (j - k)];
                diag -= l_jk * l_jk;
            }
            if diag <= 0.0 {
                return Err(invalid(format!(
                    "non-positive pivot {diag:.3e} at row {j}; matrix is not positive definite"
                )));
            }
            let l_jj = diag.sqrt();
            band[j * width] = l_jj;
            let hi = (j + bandwidth + 1).min(interior);
            for i in (j + 1)..hi {
                let mut v = band[i * width + (i - j)];
                let k_start = start.max(i.saturating_sub(bandwidth));
                for k in k_start..j {
                    v -= band[i * width + (i - k)] * band[j * width + (j - k)];
                }
                band[i * width + (i - j)] = v / l_jj;
            }
        }

        let mut factor = BandCholesky {
            n,
            interior,
            bandwidth,
            band,
            border_cols: Vec::new(),
            schur: None,
        };

        if border > 0 {
            let mut border_cols = vec![Vec::new(); border];
            let mut d = DenseSymMatrix::zeros(border);
            for bi in 0..border {
                for (j, v) in a.row(interior + bi) {
                    if j < interior {
                        border_cols[bi].push((j, v));
                    } else {
                        d.set_sym(bi, j - interior, v);
                    }
                }
            }
            // Schur complement S = D - C^T B^{-1} C, one banded solve per
            // border column.
            let solved: Vec<Vec<f64>> = border_cols
                .iter()
                .map(|col| {
                    let mut rhs = vec![0.0; interior];
                    for &(j, v) in col {
                        rhs[j] = v;
                    }
                    factor.solve_interior(rhs)
                })
                .collect();
            for bi in 0..border {
                for bj in 0..=bi {
                    let mut dot_cb = 0.0;
                    for &(j, v) in &border_cols[bj] {
                        dot_cb += v * solved[bi][j];
                    }
                    d.add_sym(bi, bj, -dot_cb);
                }
            }
            let schur = dense_cholesky(&d).map_err(|_| {
                invalid("border Schur complement is not positive definite")
            })?;
            factor.border_cols = border_cols;
            factor.schur = Some(schur);
        }
        Ok(factor)
    }

    /// Estimated factor storage in bytes for the given order and bandwidth.
    pub fn storage_bytes(interior: usize, bandwidth: usize) -> usize {
        interior.saturating_mul(bandwidth + 1).saturating_mul(8)
    }

    fn solve_interior(&self, mut y: Vec<f64>) -> Vec<f64> {
        let width = self.bandwidth + 1;
        for i in 0..self.interior {
            let start = i.saturating_sub(self.bandwidth);
            let mut sum = y[i];
            for k in start..i {
                sum -= self.band[i * width + (i - k)] * y[k];
            }
            y[i] = sum / self.band[i * width];
        }
        for i in (0..self.interior).rev() {
            let hi = (i + self.bandwidth + 1).min(self.interior);
            let mut sum = y[i];
            for k in (i + 1)..hi {
                sum -= self.band[k * width + (k - i)] * y[k];
            }
            y[i] = sum / self.band[i * width];
        }
        y
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let border = self.n - self.interior;
        if border == 0 {
            return self.solve_interior(b.to_vec());
        }
        let schur = self.schur.as_ref().unwrap();
        let z = self.solve_interior(b[..self.interior].to_vec());
        let mut rhs2 = vec![0.0; border];
        for bi in 0..border {
            let mut acc = b[self.interior + bi];
            for &(j, v) in &self.border_cols[bi] {
                acc -= v * z[j];
            }
            rhs2[bi] = acc;
        }
        let x2 = cholesky_solve(schur, &rhs2);
        let mut rhs1 = b[..self.interior].to_vec();
        for bi in 0..border {
            for &(j, v) in &self.border_cols[bi] {
                rhs1[j] -= v * x2[bi];
            }
        }
        let x1 = self.solve_interior(rhs1);
        let mut x = x1;
        x.extend_from_slice(&x2);
        x
    }
}

/// Repeated-solve SPD solver: direct banded Cholesky when the factor fits in
/// memory, incomplete-Cholesky PCG otherwise. The choice is a deterministic
/// function of the sparsity pattern.
pub enum SpdSolver {
    Band(BandCholesky),
    Iterative { a: SparseSymMatrix, ic: Ic0, rel_tol: f64 },
}

impl SpdSolver {
    pub fn new(a: &SparseSymMatrix) -> Result<Self> {
        let (border, bandwidth) = plan_border(a);
        let bytes = BandCholesky::storage_bytes(a.order() - border, bandwidth);
        if bytes <= BAND_MEMORY_CAP_BYTES && border <= 8192 {
            if let Ok(f) = BandCholesky::new(a, border) {
                return Ok(SpdSolver::Band(f));
            }
        }
        let ic = Ic0::new(a)?;
        Ok(SpdSolver::Iterative { a: a.clone(), ic, rel_tol: 1e-11 })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            SpdSolver::Band(f) => Ok(f.solve(b)),
            SpdSolver::Iterative { a, ic, rel_tol } => {
                let max_iter = 40 * a.order() + 200;
                pcg(a, b, &Preconditioner::Ic0(ic_clone(ic)), *rel_tol, false, max_iter)
            }
        }
    }
}

fn ic_clone(ic: &Ic0) -> Ic0 {
    Ic0 {
        n: ic.n,
        row_ptr: ic.row_ptr.clone(),
        cols: ic.cols.clone(),
        vals: ic.vals.clone(),
    }
}

/// Chooses a trailing border that minimizes the estimated direct-solve cost.
/// Rows whose couplings reach far back (periodic wrap) end up in the border;
/// banded orderings without such rows get border 0.
fn plan_border(a: &SparseSymMatrix) -> (usize, usize) {
    let n = a.order();
    let mut reach = vec![0usize; n];
    for i in 0..n {
        for (j, _) in a.row(i) {
            reach[i] = reach[i].max(i - j);
        }
    }
    // prefix_max[t] = max reach among rows < t.
    let mut prefix_max = vec![0usize; n + 1];
    for i in 0..n {
        prefix_max[i + 1] = prefix_max[i].max(reach[i]);
    }
    let cost = |t: usize| -> f64 {
        let bw = prefix_max[t] as f64;
        let border = (n - t) as f64;
        let interior = t as f64;
        // Factor + border Schur solves + dense border factor.
        interior * bw * bw + 2.0 * border * interior * bw + border * border * border / 3.0
    };
    let mut best_t = n;
    let mut best_cost = cost(n);
    // Candidate cuts just below each strict increase of the prefix maximum.
    let mut t = n;
    while t > 1 {
        // Skip to the previous point where the prefix max drops.
        let cur = prefix_max[t];
        let mut s = t;
        while s > 1 && prefix_max[s - 1] == cur {
            s -= 1;
        }
        let candidate = s - 1;
        if n - candidate > 8192 {
            break;
        }
        if candidate >= 1 && cost(candidate) < best_cost {
            best_cost = cost(candidate);
            best_t = candidate;
        }
        t = candidate;
        if t == 0 {
            break;
        }
    }
    (n - best_t, prefix_max[best_t])
}
