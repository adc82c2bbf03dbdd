//! Blocked inverse subspace iteration for the lowest eigenpairs of the
//! generalized symmetric-definite problem `A v = mu M v`.

use crate::error::{invalid, Error, Result};
use crate::linalg::dense::{
    dense_sym_eigen, dot, normalize_column_signs, DenseSymMatrix, EigenPairs, Mat,
};
use crate::linalg::sparse::{SparseSymMatrix, SpdSolver};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Extra block vectors beyond the requested count; they absorb the slowly
/// converging directions so the requested modes lock in sooner.
const GUARD_MODES: usize = 4;
const MAX_OUTER: usize = 400;
/// Fixed seed for the initial block, making results reproducible bit for bit.
const INIT_SEED: u64 = 0x1f2e_3d4c;

/// Computes the `n_modes` lowest eigenpairs of `A v = mu M v` with `A`
/// symmetric positive definite and `M` symmetric positive definite.
///
/// Returns eigenvalues ascending with M-orthonormal, sign-normalized
/// eigenvectors. Convergence is declared when each requested pair satisfies
/// `||A v - mu M v|| <= tol` in the diag(M)^{-1/2}-weighted norm.
pub fn generalized_lowest_modes(
    a: &SparseSymMatrix,
    m: &SparseSymMatrix,
    n_modes: usize,
    tol: f64,
) -> Result<EigenPairs> {
    let n = a.order();
    if m.order() != n {
        return Err(invalid("pencil matrices must share an order"));
    }
    if n_modes == 0 || n_modes > n {
        return Err(invalid(format!(
            "requested {n_modes} modes from an order-{n} pencil"
        )));
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let m_diag = m.diagonal();
    if let Some((i, &d)) = m_diag.iter().enumerate().find(|(_, d)| **d <= 0.0) {
        return Err(invalid(format!(
            "mass diagonal entry {d:.3e} at row {i} is not positive"
        )));
    }
    let inv_sqrt_m: Vec<f64> = m_diag.iter().map(|d| 1.0 / d.sqrt()).collect();

    let block = (n_modes + GUARD_MODES).min(n);
    let solver = SpdSolver::new(a)?;

    let mut rng = ChaCha8Rng::seed_from_u64(INIT_SEED);
    let mut x: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    m_orthonormalize(&mut x, m)?;

    let mut theta = vec![0.0; block];
    let mut unconverged: Vec<usize> = (0..n_modes).collect();
    for _ in 0..MAX_OUTER {
        let mut z = Vec::with_capacity(block);
        for col in &x {
            z.push(solver.solve(&m.matvec(col))?);
        }
        m_orthonormalize(&mut z, m)?;

        let az: Vec<Vec<f64>> = z.iter().map(|col| a.matvec(col)).collect();
        let ar = DenseSymMatrix::from_fn_sym(block, |i, j| dot(&z[i], &az[j]));
        let ritz = dense_sym_eigen(&ar)?;
        for (k, t) in ritz.values.iter().enumerate() {
            theta[k] = *t;
        }
        for k in 0..block {
            let mut col = vec![0.0; n];
            for j in 0..block {
                let q = ritz.vectors.get(j, k);
                for i in 0..n {
                    col[i] += q * z[j][i];
                }
            }
            x[k] = col;
        }

        unconverged.clear();
        for (k, &mu) in theta.iter().enumerate().take(n_modes) {
            let av = a.matvec(&x[k]);
            let mv = m.matvec(&x[k]);
            let mut proxy = 0.0;
            for i in 0..n {
                let r = (av[i] - mu * mv[i]) * inv_sqrt_m[i];
                proxy += r * r;
            }
            if proxy.sqrt() > tol {
                unconverged.push(k);
            }
        }
        if unconverged.is_empty() {
            let mut vectors = Mat::zeros(n, n_modes);
            for k in 0..n_modes {
                vectors.set_col(k, &x[k]);
            }
            normalize_column_signs(&mut vectors);
            return Ok(EigenPairs { values: theta[..n_modes].to_vec(), vectors });
        }
    }
    Err(Error::Convergence(unconverged))
}

/// M-orthonormalizes the columns in place by modified Gram-Schmidt with a
/// reorthogonalization pass.
fn m_orthonormalize(cols: &mut [Vec<f64>], m: &SparseSymMatrix) -> Result<()> {
    let mut m_cols: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for j in 0..cols.len() {
        let mut col = std::mem::take(&mut cols[j]);
        for _pass in 0..2 {
            for k in 0..j {
                let proj = dot(&col, &m_cols[k]);
                for i in 0..col.len() {
                    col[i] -= proj * cols[k][i];
                }
            }
        }
        let mcol = m.matvec(&col);
        let norm_sq = dot(&col, &mcol);
        if !(norm_sq > 1e-28) {
            return Err(Error::DegenerateProjection(format!(
                "block column {j} collapsed during M-orthonormalization"
            )));
        }
        let inv = 1.0 / norm_sq.sqrt();
        for v in &mut col {
            *v *= inv;
        }
        m_cols.push(mcol.iter().map(|v| v * inv).collect());
        cols[j] = col;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense::dense_generalized_eigen;
    use crate::linalg::sparse::SparseBuilder;

    fn diag_sparse(values: &[f64]) -> SparseSymMatrix {
        let mut b = SparseBuilder::new(values.len());
        for (i, &v) in values.iter().enumerate() {
            b.add(i, i, v);
        }
        b.build()
    }

    #[test]
    fn diagonal_pencil_examples() {
        let a = diag_sparse(&[1.0, 2.0, 3.0]);
        let m = diag_sparse(&[1.0, 1.0, 1.0]);
        let eig = generalized_lowest_modes(&a, &m, 2, 1e-12).unwrap();
        assert!((eig.values[0] - 1.0).abs() <= 1e-10);
        assert!((eig.values[1] - 2.0).abs() <= 1e-10);

        let m2 = diag_sparse(&[1.0, 1.0, 0.5]);
        let eig = generalized_lowest_modes(&a, &m2, 3, 1e-12).unwrap();
        let expect = [1.0, 2.0, 6.0];
        for k in 0..3 {
            assert!(
                (eig.values[k] - expect[k]).abs() <= 1e-9,
                "mode {k}: {} vs {}",
                eig.values[k],
                expect[k]
            );
        }
    }

    fn random_spd_pair(n: usize, seed: u64) -> (SparseSymMatrix, SparseSymMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = SparseBuilder::new(n);
        let mut m = SparseBuilder::new(n);
        for i in 0..n {
            a.add(i, i, 5.0 + rng.gen_range(0.0..1.0));
            m.add(i, i, 1.0 + rng.gen_range(0.0..0.2));
            if i + 1 < n {
                a.add(i + 1, i, rng.gen_range(-1.0..1.0));
                m.add(i + 1, i, rng.gen_range(-0.1..0.1));
            }
            if i + 4 < n {
                a.add(i + 4, i, rng.gen_range(-0.5..0.5));
            }
        }
        (a.build(), m.build())
    }

    #[test]
    fn matches_dense_pencil_oracle() {
        let (a, m) = random_spd_pair(30, 17);
        let eig = generalized_lowest_modes(&a, &m, 5, 1e-11).unwrap();
        let oracle = dense_generalized_eigen(&a.to_dense(), &m.to_dense()).unwrap();
        for k in 0..5 {
            assert!(
                (eig.values[k] - oracle.values[k]).abs() <= 1e-8 * (1.0 + oracle.values[k].abs()),
                "mode {k}: {} vs {}",
                eig.values[k],
                oracle.values[k]
            );
        }
    }

    #[test]
    fn vectors_are_m_orthonormal() {
        let (a, m) = random_spd_pair(25, 4);
        let eig = generalized_lowest_modes(&a, &m, 4, 1e-11).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let form = m.bilinear(&eig.vectors.col(i), &eig.vectors.col(j));
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((form - want).abs() <= 1e-9, "gram({i},{j}) = {form}");
            }
        }
    }

    #[test]
    fn unattainable_tolerance_reports_unconverged_modes() {
        let (a, m) = random_spd_pair(12, 8);
        match generalized_lowest_modes(&a, &m, 3, 1e-300) {
            Err(Error::Convergence(modes)) => assert!(!modes.is_empty()),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn repeated_runs_are_bit_identical() {
        let (a, m) = random_spd_pair(20, 23);
        let e1 = generalized_lowest_modes(&a, &m, 3, 1e-10).unwrap();
        let e2 = generalized_lowest_modes(&a, &m, 3, 1e-10).unwrap();
        for k in 0..3 {
            assert_eq!(e1.values[k].to_bits(), e2.values[k].to_bits());
            for i in 0..20 {
                assert_eq!(
                    e1.vectors.get(i, k).to_bits(),
                    e2.vectors.get(i, k).to_bits()
                );
            }
        }
    }
}
