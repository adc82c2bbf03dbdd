//! Oscillating-boundary sweep: for profiles with period-scale slope the
//! first-order boundary form misses a layer-energy term. The sweep measures
//! both that form and its homogenized repair against FEM truth, tracking a
//! slope-free control cluster alongside.

use super::cluster_block;
use super::config::SharpnessConfig;
use super::emit::{fnum, write_csv, write_loglog_svg};
use super::fit::{fit_loglog_slope, SlopeFit};
use crate::error::Result;
use crate::fem::{assemble, build_mesh, eigen_lowest, solve_cell_problem, CellSolution};
use crate::geometry::{cluster_at, reference_spectrum, ModeCluster, PerturbationProfile};
use crate::hadamard::{boundary_correction, correction_spectrum, homogenized_correction};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;

const GAP_TOL: f64 = 1e-9;

pub struct SharpnessRow {
    pub delta: f64,
    /// Global spectrum index of the mode (constant mode is 0).
    pub mode: usize,
    pub lambda_fem: f64,
    pub kappa_boundary: f64,
    pub kappa_homogenized: f64,
    pub remainder_boundary: f64,
    pub remainder_homogenized: f64,
    /// Measured shift against the flat mesh at the same resolution.
    pub shift: f64,
}

pub struct ClusterTrack {
    pub lambda: f64,
    pub offset: usize,
    pub multiplicity: usize,
    pub boundary_points: Vec<(f64, f64)>,
    pub homogenized_points: Vec<(f64, f64)>,
    pub boundary_fit: SlopeFit,
    pub homogenized_fit: SlopeFit,
}

pub struct SharpnessOutcome {
    pub rows: Vec<SharpnessRow>,
    pub main: ClusterTrack,
    pub control: Option<ClusterTrack>,
    /// `(delta, max |kappa_homogenized - kappa_boundary| / delta)` over the
    /// main cluster: the per-period defect between the two first-order forms.
    pub defects: Vec<(f64, f64)>,
    /// Layer energy times the largest squared-trace-derivative integral of
    /// the main cluster: the defect the layer term predicts.
    pub defect_reference: f64,
    pub eta0: f64,
    pub eta1: f64,
    pub cell_truncation_warning: bool,
    pub shift_points: Vec<(f64, f64)>,
    pub shift_fit: SlopeFit,
    pub max_shift_ratio: f64,
}

fn simpson(width: f64, f: impl Fn(f64) -> f64) -> f64 {
    let n = 2048;
    let h = width / n as f64;
    let mut acc = f(0.0) + f(width);
    for i in 1..n {
        acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

struct ClusterLevel {
    rows: Vec<SharpnessRow>,
    max_rem_boundary: f64,
    max_rem_homogenized: f64,
    defect: f64,
}

fn cluster_level(
    cfg: &SharpnessConfig,
    cluster: &ModeCluster,
    cell: &CellSolution,
    profile: &PerturbationProfile,
    delta: f64,
    pert: &[f64],
    flat: &[f64],
) -> Result<ClusterLevel> {
    let block = cluster_block(cluster, pert)?;
    let flat_block = cluster_block(cluster, flat)?;
    let kappa_b = correction_spectrum(&boundary_correction(cluster, profile)?)?;
    let kappa_h =
        correction_spectrum(&homogenized_correction(&cfg.spec, cluster, cell, delta)?)?;
    let mut rows = Vec::with_capacity(cluster.multiplicity());
    let mut max_rb = 0.0f64;
    let mut max_rh = 0.0f64;
    let mut defect = 0.0f64;
    for k in 0..cluster.multiplicity() {
        let shift = block[k] - flat_block[k];
        let remainder_boundary = (shift - kappa_b[k]).abs();
        let remainder_homogenized = (shift - kappa_h[k]).abs();
        max_rb = max_rb.max(remainder_boundary);
        max_rh = max_rh.max(remainder_homogenized);
        defect = defect.max((kappa_h[k] - kappa_b[k]).abs());
        rows.push(SharpnessRow {
            delta,
            mode: cluster.offset + k,
            lambda_fem: block[k],
            kappa_boundary: kappa_b[k],
            kappa_homogenized: kappa_h[k],
            remainder_boundary,
            remainder_homogenized,
            shift,
        });
    }
    Ok(ClusterLevel {
        rows,
        max_rem_boundary: max_rb,
        max_rem_homogenized: max_rh,
        defect: defect / delta,
    })
}

struct TrackAccum {
    boundary_points: Vec<(f64, f64)>,
    homogenized_points: Vec<(f64, f64)>,
}

fn finish_track(cluster: &ModeCluster, acc: TrackAccum) -> Result<ClusterTrack> {
    Ok(ClusterTrack {
        lambda: cluster.lambda,
        offset: cluster.offset,
        multiplicity: cluster.multiplicity(),
        boundary_fit: fit_loglog_slope(&acc.boundary_points)?,
        homogenized_fit: fit_loglog_slope(&acc.homogenized_points)?,
        boundary_points: acc.boundary_points,
        homogenized_points: acc.homogenized_points,
    })
}

pub fn run_sharpness(cfg: &SharpnessConfig) -> Result<SharpnessOutcome> {
    let cell = solve_cell_problem(&cfg.eta, cfg.cell_height, cfg.per_x, cfg.cell_n_y)?;

    let top = cfg.m.max(cfg.control_m.unwrap_or(0));
    let modes_list = reference_spectrum(&cfg.spec, 8 + 4 * top);
    let main = cluster_at(&modes_list, cfg.m, GAP_TOL)?;
    let control = match cfg.control_m {
        Some(cm) => Some(cluster_at(&modes_list, cm, GAP_TOL)?),
        None => None,
    };
    let n_modes = std::iter::once(&main)
        .chain(control.iter())
        .map(|c| c.offset + c.multiplicity() + 1)
        .max()
        .unwrap();

    struct Level {
        delta: f64,
        main: ClusterLevel,
        control: Option<ClusterLevel>,
        max_shift: f64,
    }
    let levels: Vec<Level> = cfg
        .periods
        .par_iter()
        .map(|&n_periods| {
            let delta = cfg.spec.width / n_periods as f64;
            let profile =
                PerturbationProfile::oscillation(cfg.spec.width, &cfg.eta, delta)?;
            let n_x = cfg.per_x * n_periods;
            let n_y = cfg.per_y * n_periods;
            let pert = {
                let mesh = build_mesh(&cfg.spec, Some(&profile), n_x, n_y)?;
                eigen_lowest(&assemble(&mesh)?, n_modes, cfg.tol)?.values
            };
            let flat = {
                let mesh = build_mesh(&cfg.spec, None, n_x, n_y)?;
                eigen_lowest(&assemble(&mesh)?, n_modes, cfg.tol)?.values
            };
            let main_level =
                cluster_level(cfg, &main, &cell, &profile, delta, &pert, &flat)?;
            let control_level = match &control {
                Some(c) => {
                    Some(cluster_level(cfg, c, &cell, &profile, delta, &pert, &flat)?)
                }
                None => None,
            };
            let max_shift = main_level
                .rows
                .iter()
                .chain(control_level.iter().flat_map(|l| l.rows.iter()))
                .map(|r| r.shift.abs())
                .fold(0.0f64, f64::max);
            Ok(Level { delta, main: main_level, control: control_level, max_shift })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut main_acc =
        TrackAccum { boundary_points: Vec::new(), homogenized_points: Vec::new() };
    let mut control_acc =
        TrackAccum { boundary_points: Vec::new(), homogenized_points: Vec::new() };
    let mut defects = Vec::new();
    let mut shift_points = Vec::new();
    let mut max_shift_ratio = 0.0f64;
    for level in levels {
        let mut level_rows = level.main.rows;
        main_acc.boundary_points.push((level.delta, level.main.max_rem_boundary));
        main_acc
            .homogenized_points
            .push((level.delta, level.main.max_rem_homogenized));
        defects.push((level.delta, level.main.defect));
        if let Some(c) = level.control {
            control_acc.boundary_points.push((level.delta, c.max_rem_boundary));
            control_acc.homogenized_points.push((level.delta, c.max_rem_homogenized));
            level_rows.extend(c.rows);
        }
        level_rows.sort_by_key(|r| r.mode);
        rows.extend(level_rows);
        shift_points.push((level.delta, level.max_shift));
        max_shift_ratio = max_shift_ratio.max(level.max_shift / level.delta);
    }

    let defect_reference = cell.eta1
        * main
            .modes
            .iter()
            .map(|m| simpson(cfg.spec.width, |x| m.trace_dx(x).powi(2)))
            .fold(0.0f64, f64::max);

    Ok(SharpnessOutcome {
        rows,
        main: finish_track(&main, main_acc)?,
        control: match &control {
            Some(c) => Some(finish_track(c, control_acc)?),
            None => None,
        },
        defects,
        defect_reference,
        eta0: cell.eta0,
        eta1: cell.eta1,
        cell_truncation_warning: cell.truncation_warning,
        shift_fit: fit_loglog_slope(&shift_points)?,
        shift_points,
        max_shift_ratio,
    })
}

fn track_summary(s: &mut String, name: &str, t: &ClusterTrack) {
    let _ = writeln!(
        s,
        "  {name} cluster Lambda = {} ({} modes from index {}):",
        fnum(t.lambda),
        t.multiplicity,
        t.offset
    );
    let _ = writeln!(
        s,
        "    boundary remainder slope {:.3} (r2 {:.4}), homogenized slope {:.3} (r2 {:.4})",
        t.boundary_fit.slope, t.boundary_fit.r2, t.homogenized_fit.slope, t.homogenized_fit.r2
    );
}

pub fn write_outputs(out: &Path, outcome: &SharpnessOutcome) -> Result<String> {
    let csv_rows: Vec<String> = outcome
        .rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{}",
                fnum(r.delta),
                r.mode,
                fnum(r.lambda_fem),
                fnum(r.kappa_boundary),
                fnum(r.kappa_homogenized),
                fnum(r.remainder_boundary),
                fnum(r.remainder_homogenized)
            )
        })
        .collect();
    write_csv(
        &out.join("sharpness.csv"),
        "delta,mode,Lambda_fem,kappa_boundary,kappa_homogenized,remainder_boundary,remainder_homogenized",
        &csv_rows,
    )?;
    write_loglog_svg(
        &out.join("sharpness_boundary.svg"),
        "oscillation sweep: boundary-form remainder",
        "period delta",
        "max remainder",
        &outcome.main.boundary_fit,
    )?;
    write_loglog_svg(
        &out.join("sharpness_homogenized.svg"),
        "oscillation sweep: homogenized-form remainder",
        "period delta",
        "max remainder",
        &outcome.main.homogenized_fit,
    )?;
    if let Some(c) = &outcome.control {
        write_loglog_svg(
            &out.join("sharpness_control_boundary.svg"),
            "control cluster: boundary-form remainder",
            "period delta",
            "max remainder",
            &c.boundary_fit,
        )?;
        write_loglog_svg(
            &out.join("sharpness_control_homogenized.svg"),
            "control cluster: homogenized-form remainder",
            "period delta",
            "max remainder",
            &c.homogenized_fit,
        )?;
    }

    let mut s = String::from("oscillating-boundary sweep\n");
    let _ = writeln!(
        s,
        "  cell constants: eta0 = {}  eta1 = {}{}",
        fnum(outcome.eta0),
        fnum(outcome.eta1),
        if outcome.cell_truncation_warning { "  TRUNCATION WARNING" } else { "" }
    );
    track_summary(&mut s, "main", &outcome.main);
    if let Some(c) = &outcome.control {
        track_summary(&mut s, "control", c);
    }
    for r in &outcome.rows {
        let _ = writeln!(
            s,
            "  delta = {}  mode {}  shift = {}  rem_b = {}  rem_h = {}",
            fnum(r.delta),
            r.mode,
            fnum(r.shift),
            fnum(r.remainder_boundary),
            fnum(r.remainder_homogenized)
        );
    }
    let _ = writeln!(s, "  form defect per delta vs layer prediction {}:", fnum(outcome.defect_reference));
    for (delta, defect) in &outcome.defects {
        let _ = writeln!(s, "    delta = {}  defect = {}", fnum(*delta), fnum(*defect));
    }
    let _ = writeln!(
        s,
        "  shift slope {:.3}, max |shift|/delta = {}",
        outcome.shift_fit.slope,
        fnum(outcome.max_shift_ratio)
    );
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BcX, EtaProfile, RectangleSpec};
    use std::f64::consts::PI;

    #[test]
    fn coarse_sawtooth_sweep_separates_the_two_forms() {
        let cfg = SharpnessConfig {
            spec: RectangleSpec::new(1.0, 1.0, BcX::Periodic).unwrap(),
            m: 3,
            control_m: Some(2),
            eta: EtaProfile::sawtooth(),
            periods: vec![8, 16, 32],
            per_x: 16,
            per_y: 4,
            tol: 1e-7,
            cell_height: 4.5,
            cell_n_y: 18,
        };
        let outcome = run_sharpness(&cfg).unwrap();
        assert_eq!(outcome.rows.len(), 3 * 4);
        let first: Vec<usize> = outcome.rows[..4].iter().map(|r| r.mode).collect();
        assert_eq!(first, vec![1, 2, 3, 4]);

        for r in outcome.rows.iter().filter(|r| r.mode == 1) {
            let exact = PI * PI * r.delta;
            assert!((r.kappa_boundary - exact).abs() < 1e-9, "control kappa_b {}", r.kappa_boundary);
            assert!((r.kappa_homogenized - exact).abs() < 1e-9);
        }
        for (_, defect) in &outcome.defects {
            let rel = (defect - outcome.defect_reference).abs() / outcome.defect_reference;
            assert!(rel < 1e-6, "defect {} vs {}", defect, outcome.defect_reference);
        }
        assert!((outcome.defect_reference - 4.0 * PI * PI * outcome.eta1).abs() < 1e-6);
        assert!(outcome.eta1 > 0.2 && outcome.eta1 < 0.35);
        assert!(!outcome.cell_truncation_warning);

        let smallest = 1.0 / 32.0;
        let layer = 4.0 * PI * PI * outcome.eta1 * smallest;
        let (_, rem_b) = outcome.main.boundary_points.last().copied().unwrap();
        let (_, rem_h) = outcome.main.homogenized_points.last().copied().unwrap();
        assert!(
            rem_b > 0.5 * layer && rem_b < 2.0 * layer,
            "boundary remainder {rem_b} vs layer prediction {layer}"
        );
        assert!(
            rem_h < 0.6 * rem_b,
            "homogenized remainder {rem_h} should sit well below the boundary one {rem_b}"
        );
        assert!(outcome.max_shift_ratio < 3.0 * 4.0 * PI * PI);
    }
}
