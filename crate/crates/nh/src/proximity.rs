//! Finite-dimensional model of two self-adjoint positive operators on nearby
//! subspaces: proximity constants, the bridge operator between them, and the
//! reduced eigenvalue-correction problem for one spectral cluster.

use crate::error::{invalid, Error, Result};
use crate::linalg::{dense_generalized_eigen, dense_sym_eigen, DenseSymMatrix, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative gap below which two eigenvalues of `k1` count as one cluster.
const CLUSTER_GAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct InstanceConfig {
    pub ambient_dim: usize,
    pub n1: usize,
    pub n2: usize,
    /// Eigenvalues of `k1`, descending, all positive.
    pub k1_spectrum: Vec<f64>,
    /// Magnitude `t` of the random symmetric perturbation added to `k2`.
    pub perturbation_scale: f64,
    /// Rotation angle mixing the second subspace into the orthogonal
    /// complement; zero keeps the canonical embedding.
    pub overlap_angle: f64,
}

/// Two subspaces of an ambient space, with a positive self-adjoint operator
/// on each, expressed in the given orthonormal bases.
#[derive(Debug, Clone)]
pub struct AbstractInstance {
    pub ambient_dim: usize,
    /// Orthonormal columns spanning the first subspace.
    pub basis1: Mat,
    /// Orthonormal columns spanning the second subspace.
    pub basis2: Mat,
    pub k1: DenseSymMatrix,
    pub k2: DenseSymMatrix,
    /// Matrix of the projection of the first subspace onto the second:
    /// `basis2^T basis1`.
    pub s: Mat,
    /// Diagonal shift added to keep `k2` positive definite (zero if none was
    /// needed).
    pub pd_shift: f64,
    pub seed: u64,
}

/// One cluster of eigenvalues of `k1`, counted from the top of the spectrum.
#[derive(Debug, Clone)]
pub struct SpectralCluster {
    /// 1-based index among distinct eigenvalues, descending.
    pub m: usize,
    /// Cluster eigenvalue of `k1`.
    pub lambda: f64,
    /// Orthonormal eigenbasis of the cluster (columns).
    pub basis: Mat,
    /// Orthonormal eigenbasis of clusters `1..=m` combined.
    pub cumulative_basis: Mat,
    /// Distinct eigenvalues of clusters `1..=m`, descending.
    pub kappa_chain: Vec<f64>,
    /// Eigenvalue of cluster `m - 1` (the next larger one), if `m > 1`.
    pub prev: Option<f64>,
    /// Eigenvalue of cluster `m + 1` (the next smaller one), if any.
    pub next: Option<f64>,
}

impl SpectralCluster {
    pub fn multiplicity(&self) -> usize {
        self.basis.cols()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ProximityConstants {
    /// Sharp constant of the two defining inequalities: operator-norm square
    /// of the operator mismatch, and worst subspace misalignment over the
    /// cumulative cluster span.
    pub epsilon: f64,
    /// Operator-norm square of the mismatch of the ambient extensions.
    pub sigma: f64,
    /// Upper bound for `epsilon` derived from `sigma` alone.
    pub epsilon_from_sigma: f64,
    /// Size of the second-order remainder forcing term on the cluster.
    pub rho: f64,
}

#[derive(Debug, Clone)]
pub struct TauSpectrum {
    /// Eigenvalue corrections, ascending.
    pub tau_values: Vec<f64>,
    /// Condition number of the projected Gram matrix.
    pub gram_condition: f64,
    /// Max-norm asymmetry of the raw correction matrix before
    /// symmetrization.
    pub asymmetry: f64,
}

#[derive(Debug, Clone)]
pub struct ClusterVerdict {
    /// Eigenvalues of `k2` paired with the cluster, ascending.
    pub mu_values: Vec<f64>,
    /// Corrections, ascending (same pairing order).
    pub tau_values: Vec<f64>,
    /// `|mu_k - lambda_m - tau_k|` per pair.
    pub remainders: Vec<f64>,
    /// `max_k remainder_k / (rho + |tau_k| epsilon)`; zero when both sides
    /// vanish.
    pub bound_ratio: f64,
    /// Whether the spectral window around the cluster holds exactly the
    /// cluster's multiplicity of `k2` eigenvalues.
    pub count_ok: bool,
    /// Distance of each paired `k2` eigenvector from the projected cluster
    /// span, relative to its norm.
    pub projector_residuals: Vec<f64>,
}

fn uniform_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DenseSymMatrix {
    let mut m = DenseSymMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            m.set_sym(i, j, rng.gen::<f64>() * 2.0 - 1.0);
        }
    }
    m
}

/// Deterministic instance generator. The first subspace is canonical; the
/// second is rotated into the orthogonal complement by `overlap_angle` on
/// disjoint coordinate planes; `k2` starts as the compression of the ambient
/// extension of `k1` and receives a scaled random symmetric perturbation.
pub fn build_instance(seed: u64, config: &InstanceConfig) -> Result<AbstractInstance> {
    let n = config.ambient_dim;
    let (n1, n2) = (config.n1, config.n2);
    if n1 == 0 || n2 == 0 || n1 > n || n2 > n {
        return Err(invalid("subspace dimensions must satisfy 1 <= n1, n2 <= N"));
    }
    if config.k1_spectrum.len() != n1 {
        return Err(invalid("k1_spectrum length must equal n1"));
    }
    if config.k1_spectrum.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(invalid("k1_spectrum must be positive"));
    }
    if config.k1_spectrum.windows(2).any(|w| w[1] > w[0]) {
        return Err(invalid("k1_spectrum must be descending"));
    }
    if !(config.perturbation_scale >= 0.0 && config.perturbation_scale.is_finite()) {
        return Err(invalid("perturbation scale must be non-negative"));
    }
    if !config.overlap_angle.is_finite() {
        return Err(invalid("overlap angle must be finite"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let basis1 = Mat::from_fn(n, n1, |i, j| if i == j { 1.0 } else { 0.0 });

    let mut basis2 = Mat::from_fn(n, n2, |i, j| if i == j { 1.0 } else { 0.0 });
    let (sin, cos) = config.overlap_angle.sin_cos();
    for j in 0..n2.min(n - n2) {
        let mut col = vec![0.0; n];
        col[j] = cos;
        col[n2 + j] = sin;
        basis2.set_col(j, &col);
    }

    let raw_v = Mat::from_fn(n1, n1, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
    let v = raw_v.orthonormalized_columns()?;
    let vd = Mat::from_fn(n1, n1, |i, j| v.get(i, j) * config.k1_spectrum[j]);
    let (k1, _) = DenseSymMatrix::symmetrized_from(&vd.mul(&v.transpose()));

    let s = basis2.tr_mul(&basis1);

    let compressed = s.mul(&k1.to_mat()).mul(&s.transpose());
    let (mut k2, _) = DenseSymMatrix::symmetrized_from(&compressed);
    if config.perturbation_scale > 0.0 {
        let raw_e = uniform_symmetric(&mut rng, n2);
        let norm = raw_e.spectral_norm()?;
        if norm > 0.0 {
            let scale = config.perturbation_scale / norm;
            k2 = DenseSymMatrix::from_fn_sym(n2, |i, j| k2.get(i, j) + scale * raw_e.get(i, j));
        }
    }

    let eigs = dense_sym_eigen(&k2)?;
    let min_eig = eigs.values[0];
    let mut pd_shift = 0.0;
    if min_eig <= 0.0 {
        pd_shift = -min_eig + 1e-12 * (1.0 + min_eig.abs());
        let shift = pd_shift;
        k2 = DenseSymMatrix::from_fn_sym(n2, |i, j| {
            k2.get(i, j) + if i == j { shift } else { 0.0 }
        });
    }

    Ok(AbstractInstance {
        ambient_dim: n,
        basis1,
        basis2,
        k1,
        k2,
        s,
        pd_shift,
        seed,
    })
}

impl AbstractInstance {
    /// Extracts the m-th eigenvalue cluster of `k1`, counted from the top of
    /// the spectrum (1-based), together with its spectral neighborhood.
    pub fn cluster(&self, m: usize) -> Result<SpectralCluster> {
        if m == 0 {
            return Err(invalid("cluster index is 1-based"));
        }
        let eig = dense_sym_eigen(&self.k1)?;
        let n = eig.values.len();
        // Descending order: k-th entry of `desc` maps to column n-1-k.
        let desc: Vec<f64> = eig.values.iter().rev().copied().collect();
        let mut groups: Vec<(usize, usize)> = Vec::new();
        let mut start = 0;
        for i in 1..n {
            if desc[i - 1] - desc[i] > CLUSTER_GAP_TOL * (1.0 + desc[i - 1].abs()) {
                groups.push((start, i));
                start = i;
            }
        }
        groups.push((start, n));
        if m > groups.len() {
            return Err(Error::ClusterResolution(format!(
                "operator has {} distinct eigenvalues; cluster {m} requested",
                groups.len()
            )));
        }
        let (lo, hi) = groups[m - 1];
        let col_of = |k: usize| n - 1 - k;
        let basis = Mat::from_cols(
            (lo..hi)
                .map(|k| eig.vectors.col(col_of(k)))
                .collect::<Vec<_>>()
                .as_slice(),
        );
        let cumulative_basis = Mat::from_cols(
            (0..hi)
                .map(|k| eig.vectors.col(col_of(k)))
                .collect::<Vec<_>>()
                .as_slice(),
        );
        let kappa_chain: Vec<f64> = (0..m).map(|g| desc[groups[g].0]).collect();
        Ok(SpectralCluster {
            m,
            lambda: desc[lo],
            basis,
            cumulative_basis,
            kappa_chain,
            prev: if m >= 2 { Some(desc[groups[m - 2].0]) } else { None },
            next: groups.get(m).map(|g| desc[g.0]),
        })
    }
}

/// Matrix of the bridge operator `k2 s - s k1` mapping the first subspace
/// into the second.
pub fn operator_b(inst: &AbstractInstance) -> Mat {
    inst.k2
        .to_mat()
        .mul(&inst.s)
        .sub(&inst.s.mul(&inst.k1.to_mat()))
}

fn max_eigenvalue(m: &DenseSymMatrix) -> Result<f64> {
    let eig = dense_sym_eigen(m)?;
    Ok(*eig.values.last().unwrap())
}

/// Sharp proximity constants of an instance relative to one cluster.
pub fn proximity_constants(
    inst: &AbstractInstance,
    cluster: &SpectralCluster,
) -> Result<ProximityConstants> {
    // Operator mismatch seen from the second subspace.
    let sk1st = inst.s.mul(&inst.k1.to_mat()).mul(&inst.s.transpose());
    let (mismatch, _) = DenseSymMatrix::symmetrized_from(&inst.k2.to_mat().sub(&sk1st));
    let term_op = mismatch.spectral_norm()?.powi(2);

    // Worst misalignment of the cumulative cluster span: for unit phi the
    // squared distance to the second subspace is phi^T (I - S^T S) phi.
    let sx = inst.s.mul(&cluster.cumulative_basis);
    let xtx = cluster.cumulative_basis.tr_mul(&cluster.cumulative_basis);
    let sxtsx = sx.tr_mul(&sx);
    let (align_form, _) = DenseSymMatrix::symmetrized_from(&xtx.sub(&sxtsx));
    let term_align = max_eigenvalue(&align_form)?.max(0.0);

    let epsilon = term_op.max(term_align);

    // Ambient extensions (zero off the subspaces).
    let amb1 = inst.basis1.mul(&inst.k1.to_mat()).mul(&inst.basis1.transpose());
    let amb2 = inst.basis2.mul(&inst.k2.to_mat()).mul(&inst.basis2.transpose());
    let (amb_diff, _) = DenseSymMatrix::symmetrized_from(&amb2.sub(&amb1));
    let sigma = amb_diff.spectral_norm()?.powi(2);

    let inv_sq_sum: f64 = cluster.kappa_chain.iter().map(|k| (1.0 / k).powi(2)).sum();
    let epsilon_from_sigma = sigma * 1.0f64.max(4.0 * inv_sq_sum);

    // Remainder forcing term over the unit sphere of the cluster eigenspace.
    let lambda_inv = 1.0 / cluster.lambda;
    let bx = operator_b(inst).mul(&cluster.basis);
    let k2bx = inst.k2.to_mat().mul(&bx);
    let quad = k2bx.tr_mul(&k2bx);
    let stab = bx.tr_mul(&bx);
    let j = cluster.multiplicity();
    let form = DenseSymMatrix::from_fn_sym(j, |i, l| {
        lambda_inv * (quad.get(i, l) + epsilon * stab.get(i, l))
    });
    let rho = max_eigenvalue(&form)?.max(0.0);

    Ok(ProximityConstants { epsilon, sigma, epsilon_from_sigma, rho })
}

/// Eigenvalues of the reduced correction problem on the cluster: the pencil
/// `(R, G)` with `G_ij = <S phi_i, S phi_j>` and
/// `R_ij = lambda^{-1} <B phi_i, K2 S phi_j>`, symmetrized.
pub fn reduced_tau_spectrum(
    inst: &AbstractInstance,
    cluster: &SpectralCluster,
) -> Result<TauSpectrum> {
    let sx = inst.s.mul(&cluster.basis);
    let bx = operator_b(inst).mul(&cluster.basis);
    let k2sx = inst.k2.to_mat().mul(&sx);

    let (g, _) = DenseSymMatrix::symmetrized_from(&sx.tr_mul(&sx));
    let g_eigs = dense_sym_eigen(&g)?;
    let g_min = g_eigs.values[0];
    let g_max = *g_eigs.values.last().unwrap();
    if g_min <= 0.0 {
        return Err(Error::DegenerateProjection(format!(
            "projected cluster Gram matrix is singular (min eigenvalue {g_min:.3e})"
        )));
    }
    let gram_condition = g_max / g_min;

    let raw_r = bx.tr_mul(&k2sx).scaled(1.0 / cluster.lambda);
    let (r, asymmetry) = DenseSymMatrix::symmetrized_from(&raw_r);

    let pencil = dense_generalized_eigen(&r, &g)?;
    Ok(TauSpectrum {
        tau_values: pencil.values,
        gram_condition,
        asymmetry,
    })
}

/// Checks the correction formula against the exact spectrum of `k2`: counts
/// the eigenvalues in the cluster's spectral window, pairs the nearest ones
/// with the corrections in ascending order, and measures the remainders
/// against `rho + |tau| epsilon`.
pub fn verify_cluster(
    inst: &AbstractInstance,
    cluster: &SpectralCluster,
) -> Result<ClusterVerdict> {
    let constants = proximity_constants(inst, cluster)?;
    let tau = reduced_tau_spectrum(inst, cluster)?;
    let j = cluster.multiplicity();

    let eig = dense_sym_eigen(&inst.k2)?;

    // Midpoint window between neighboring cluster eigenvalues; at the top of
    // the spectrum the window extends by the full gap to the next cluster,
    // and with no cluster below it extends to the midpoint toward zero.
    let lower = match cluster.next {
        Some(next) => 0.5 * (cluster.lambda + next),
        None => 0.5 * cluster.lambda,
    };
    let upper = match cluster.prev {
        Some(prev) => 0.5 * (cluster.lambda + prev),
        None => match cluster.next {
            Some(next) => cluster.lambda + (cluster.lambda - next),
            None => 1.5 * cluster.lambda,
        },
    };
    let in_window = eig
        .values
        .iter()
        .filter(|v| **v > lower && **v < upper)
        .count();
    let count_ok = in_window == j;
    if !count_ok {
        return Ok(ClusterVerdict {
            mu_values: Vec::new(),
            tau_values: Vec::new(),
            remainders: Vec::new(),
            bound_ratio: f64::NAN,
            count_ok: false,
            projector_residuals: Vec::new(),
        });
    }

    // The j eigenvalues nearest the cluster, then ascending.
    let mut by_distance: Vec<usize> = (0..eig.values.len()).collect();
    by_distance.sort_by(|a, b| {
        let da = (eig.values[*a] - cluster.lambda).abs();
        let db = (eig.values[*b] - cluster.lambda).abs();
        da.partial_cmp(&db).unwrap().then(a.cmp(b))
    });
    let mut selected: Vec<usize> = by_distance[..j].to_vec();
    selected.sort_by(|a, b| eig.values[*a].partial_cmp(&eig.values[*b]).unwrap());

    let mu_values: Vec<f64> = selected.iter().map(|i| eig.values[*i]).collect();
    let remainders: Vec<f64> = mu_values
        .iter()
        .zip(&tau.tau_values)
        .map(|(mu, t)| (mu - cluster.lambda - t).abs())
        .collect();

    let mut bound_ratio = 0.0f64;
    for (rem, t) in remainders.iter().zip(&tau.tau_values) {
        let denom = constants.rho + t.abs() * constants.epsilon;
        if denom > 0.0 {
            bound_ratio = bound_ratio.max(rem / denom);
        } else if *rem > 0.0 {
            bound_ratio = f64::INFINITY;
        }
    }

    let q = inst.s.mul(&cluster.basis).orthonormalized_columns()?;
    let projector_residuals: Vec<f64> = selected
        .iter()
        .map(|i| {
            let u = eig.vectors.col(*i);
            let coeffs = q.tr_mul_vec(&u);
            let proj = q.mul_vec(&coeffs);
            let mut acc = 0.0;
            let mut norm = 0.0;
            for k in 0..u.len() {
                acc += (u[k] - proj[k]).powi(2);
                norm += u[k] * u[k];
            }
            (acc / norm).sqrt()
        })
        .collect();

    Ok(ClusterVerdict {
        mu_values,
        tau_values: tau.tau_values,
        remainders,
        bound_ratio,
        count_ok,
        projector_residuals,
    })
}
