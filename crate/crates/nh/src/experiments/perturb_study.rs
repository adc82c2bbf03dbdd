//! Perturbed-rectangle sweep: measured eigenvalue shifts of a cluster
//! against the first-order boundary and volume corrections, with a
//! Richardson check flagging rows whose remainder is below the FEM floor.

use super::cluster_block;
use super::config::{PerturbConfig, ProfileFamily};
use super::emit::{fnum, write_csv, write_loglog_svg};
use super::fit::{fit_loglog_slope, SlopeFit};
use crate::error::{Error, Result};
use crate::fem::{assemble, build_mesh, eigen_lowest};
use crate::geometry::{
    cluster_at, reference_spectrum, ModeCluster, PerturbationProfile, RectangleSpec,
};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;

const GAP_TOL: f64 = 1e-9;

pub struct PerturbRow {
    pub d: f64,
    /// Global spectrum index of the mode (constant mode is 0).
    pub mode: usize,
    pub lambda_ref: f64,
    pub lambda_fem: f64,
    pub kappa_boundary: f64,
    pub kappa_volume: f64,
    pub remainder_boundary: f64,
    pub remainder_volume: f64,
    /// Measured shift against the flat mesh at the same resolution.
    pub shift: f64,
    /// Richardson estimate of the fine-grid error in the shift.
    pub est_err: f64,
    /// Set when a remainder sits within a factor ten of `est_err`: the row
    /// measures the mesh, not the asymptotics, and is excluded from fits.
    pub fem_limited: bool,
}

pub struct PerturbOutcome {
    pub family: ProfileFamily,
    pub cluster_lambda: f64,
    pub offset: usize,
    pub multiplicity: usize,
    pub rows: Vec<PerturbRow>,
    /// `(d_hat, max remainder over unflagged rows)` per surviving amplitude.
    pub boundary_points: Vec<(f64, f64)>,
    pub volume_points: Vec<(f64, f64)>,
    /// `(d_hat, max |shift|)` per amplitude, all rows.
    pub shift_points: Vec<(f64, f64)>,
    pub boundary_fit: SlopeFit,
    pub volume_fit: SlopeFit,
    pub shift_fit: SlopeFit,
    /// Largest `max |shift| / d_hat` across the sweep.
    pub max_shift_ratio: f64,
    /// Worst pre-symmetrization defect of the assembled volume forms.
    pub asymmetry_max: f64,
}

fn eigen_values(
    spec: &RectangleSpec,
    profile: Option<&PerturbationProfile>,
    n_x: usize,
    n_y: usize,
    n_modes: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    let mesh = build_mesh(spec, profile, n_x, n_y)?;
    let pair = assemble(&mesh)?;
    Ok(eigen_lowest(&pair, n_modes, tol)?.values)
}

struct SweepLevel {
    d_hat: f64,
    rows: Vec<PerturbRow>,
    max_shift: f64,
    asymmetry: f64,
}

fn sweep_level(
    cfg: &PerturbConfig,
    cluster: &ModeCluster,
    flat_fine: &[f64],
    flat_half: &[f64],
    n_modes: usize,
    d: f64,
) -> Result<SweepLevel> {
    use crate::hadamard::{boundary_correction, correction_spectrum, volume_correction};

    let profile = cfg.family.build(cfg.spec.width, d)?;
    let mesh = build_mesh(&cfg.spec, Some(&profile), cfg.n_x, cfg.n_y)?;
    let pair = assemble(&mesh)?;
    let eig = eigen_lowest(&pair, n_modes, cfg.tol)?;
    let pert_fine = cluster_block(cluster, &eig.values)?;
    let half = eigen_values(
        &cfg.spec,
        Some(&profile),
        cfg.n_x / 2,
        cfg.n_y / 2,
        n_modes,
        cfg.tol,
    )?;
    let pert_half = cluster_block(cluster, &half)?;

    let kappa_b = correction_spectrum(&boundary_correction(cluster, &profile)?)?;
    let volume = volume_correction(cluster, &mesh, &pair)?;
    let kappa_v = correction_spectrum(&volume)?;

    let mut rows = Vec::with_capacity(cluster.multiplicity());
    let mut max_shift = 0.0f64;
    for k in 0..cluster.multiplicity() {
        let shift = pert_fine[k] - flat_fine[cluster.offset + k];
        let shift_half = pert_half[k] - flat_half[cluster.offset + k];
        let est_err = (shift - shift_half).abs() / 3.0;
        let remainder_boundary = (shift - kappa_b[k]).abs();
        let remainder_volume = (shift - kappa_v[k]).abs();
        let fem_limited =
            remainder_boundary < 10.0 * est_err || remainder_volume < 10.0 * est_err;
        max_shift = max_shift.max(shift.abs());
        rows.push(PerturbRow {
            d,
            mode: cluster.offset + k,
            lambda_ref: cluster.lambda,
            lambda_fem: pert_fine[k],
            kappa_boundary: kappa_b[k],
            kappa_volume: kappa_v[k],
            remainder_boundary,
            remainder_volume,
            shift,
            est_err,
            fem_limited,
        });
    }
    Ok(SweepLevel {
        d_hat: profile.distance_proxy(),
        rows,
        max_shift,
        asymmetry: volume.asymmetry_defect,
    })
}

pub fn run_perturb(cfg: &PerturbConfig) -> Result<PerturbOutcome> {
    let modes_list = reference_spectrum(&cfg.spec, 8 + 4 * cfg.m);
    let cluster = cluster_at(&modes_list, cfg.m, GAP_TOL)?;
    let n_modes = cluster.offset + cluster.multiplicity() + 1;

    let flat_fine = eigen_values(&cfg.spec, None, cfg.n_x, cfg.n_y, n_modes, cfg.tol)?;
    let flat_half =
        eigen_values(&cfg.spec, None, cfg.n_x / 2, cfg.n_y / 2, n_modes, cfg.tol)?;

    let levels: Vec<SweepLevel> = cfg
        .d_values
        .par_iter()
        .map(|&d| sweep_level(cfg, &cluster, &flat_fine, &flat_half, n_modes, d))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut boundary_points = Vec::new();
    let mut volume_points = Vec::new();
    let mut shift_points = Vec::new();
    let mut max_shift_ratio = 0.0f64;
    let mut asymmetry_max = 0.0f64;
    for level in levels {
        let unflagged = |pick: fn(&PerturbRow) -> f64| {
            level
                .rows
                .iter()
                .filter(|r| !r.fem_limited)
                .map(pick)
                .fold(f64::MIN, f64::max)
        };
        if level.rows.iter().any(|r| !r.fem_limited) {
            boundary_points.push((level.d_hat, unflagged(|r| r.remainder_boundary)));
            volume_points.push((level.d_hat, unflagged(|r| r.remainder_volume)));
        }
        shift_points.push((level.d_hat, level.max_shift));
        max_shift_ratio = max_shift_ratio.max(level.max_shift / level.d_hat);
        asymmetry_max = asymmetry_max.max(level.asymmetry);
        rows.extend(level.rows);
    }

    if boundary_points.is_empty() {
        return Err(Error::Inconclusive(
            "every sweep row is FEM-limited; refine the mesh or enlarge the amplitudes".into(),
        ));
    }
    if boundary_points.len() < 3 {
        return Err(Error::Inconclusive(format!(
            "only {} of {} amplitudes survive the FEM-limited filter; need 3 for a slope fit",
            boundary_points.len(),
            cfg.d_values.len()
        )));
    }
    Ok(PerturbOutcome {
        family: cfg.family,
        cluster_lambda: cluster.lambda,
        offset: cluster.offset,
        multiplicity: cluster.multiplicity(),
        boundary_fit: fit_loglog_slope(&boundary_points)?,
        volume_fit: fit_loglog_slope(&volume_points)?,
        shift_fit: fit_loglog_slope(&shift_points)?,
        rows,
        boundary_points,
        volume_points,
        shift_points,
        max_shift_ratio,
        asymmetry_max,
    })
}

pub fn write_outputs(out: &Path, outcome: &PerturbOutcome) -> Result<String> {
    let csv_rows: Vec<String> = outcome
        .rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                fnum(r.d),
                r.mode,
                fnum(r.lambda_ref),
                fnum(r.lambda_fem),
                fnum(r.kappa_boundary),
                fnum(r.kappa_volume),
                fnum(r.remainder_boundary),
                fnum(r.remainder_volume),
                r.fem_limited
            )
        })
        .collect();
    write_csv(
        &out.join("perturb.csv"),
        "d,mode,Lambda_ref,Lambda_fem,kappa_boundary,kappa_volume,remainder_boundary,remainder_volume,fem_limited",
        &csv_rows,
    )?;
    let family = outcome.family.name();
    write_loglog_svg(
        &out.join("perturb_boundary.svg"),
        &format!("{family}: boundary-correction remainder"),
        "amplitude d",
        "max remainder",
        &outcome.boundary_fit,
    )?;
    write_loglog_svg(
        &out.join("perturb_volume.svg"),
        &format!("{family}: volume-correction remainder"),
        "amplitude d",
        "max remainder",
        &outcome.volume_fit,
    )?;
    write_loglog_svg(
        &out.join("perturb_shift.svg"),
        &format!("{family}: measured cluster shift"),
        "amplitude d",
        "max |shift|",
        &outcome.shift_fit,
    )?;

    let mut s = format!("perturbation sweep: {family}\n");
    let _ = writeln!(
        s,
        "  cluster Lambda = {} ({} modes from index {})",
        fnum(outcome.cluster_lambda),
        outcome.multiplicity,
        outcome.offset
    );
    for r in &outcome.rows {
        let _ = writeln!(
            s,
            "  d = {}  mode {}  shift = {}  est_err = {}  rem_b = {}  rem_v = {}{}",
            fnum(r.d),
            r.mode,
            fnum(r.shift),
            fnum(r.est_err),
            fnum(r.remainder_boundary),
            fnum(r.remainder_volume),
            if r.fem_limited { "  FEM-LIMITED" } else { "" }
        );
    }
    let _ = writeln!(
        s,
        "  boundary remainder slope {:.3} (r2 {:.4}) over {} amplitudes",
        outcome.boundary_fit.slope,
        outcome.boundary_fit.r2,
        outcome.boundary_points.len()
    );
    let _ = writeln!(
        s,
        "  volume remainder slope {:.3} (r2 {:.4})",
        outcome.volume_fit.slope, outcome.volume_fit.r2
    );
    let _ = writeln!(
        s,
        "  shift slope {:.3}, max |shift|/d = {}",
        outcome.shift_fit.slope,
        fnum(outcome.max_shift_ratio)
    );
    let _ = writeln!(s, "  volume-form asymmetry max = {}", fnum(outcome.asymmetry_max));
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BcX;
    use std::f64::consts::PI;

    #[test]
    fn uniform_shift_sweep_matches_first_order_theory() {
        let cfg = PerturbConfig {
            spec: RectangleSpec::new(1.0, 1.0, BcX::Neumann).unwrap(),
            m: 2,
            family: ProfileFamily::UniformShift,
            d_values: vec![0.04, 0.02, 0.01],
            n_x: 48,
            n_y: 48,
            tol: 1e-8,
        };
        let outcome = run_perturb(&cfg).unwrap();
        assert_eq!(outcome.rows.len(), 6);
        assert_eq!(outcome.offset, 1);
        for r in outcome.rows.iter().filter(|r| r.mode == 2) {
            let exact = 2.0 * r.d * PI * PI;
            assert!(
                (r.kappa_boundary - exact).abs() < 1e-11,
                "kappa_b {} vs {exact}",
                r.kappa_boundary
            );
            assert!(!r.fem_limited, "squeezed mode should outrun the mesh at d = {}", r.d);
            assert!((r.kappa_volume - exact).abs() < 0.05 * exact);
        }
        assert!(
            outcome.boundary_fit.slope > 1.5 && outcome.boundary_fit.slope < 2.5,
            "slope {}",
            outcome.boundary_fit.slope
        );
        assert!(outcome.shift_fit.slope > 0.9 && outcome.shift_fit.slope < 1.1);
        assert!(outcome.max_shift_ratio < 2.5 * PI * PI);
    }
}
