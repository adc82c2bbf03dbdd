//! Cell-problem refinement study: solves the boundary-layer corrector on a
//! ladder of meshes and tracks the convergence of the layer energy.

use super::config::CellStudyConfig;
use super::emit::{fnum, write_csv, write_loglog_svg};
use super::fit::{fit_loglog_slope, SlopeFit};
use crate::error::Result;
use crate::fem::{gradient_energy, solve_cell_problem};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;

pub struct CellLevel {
    pub n_x: usize,
    pub n_y: usize,
    pub eta0: f64,
    pub eta1: f64,
    /// Layer energy recomputed from the nodal corrector, as a cross-check
    /// on the reported `eta1`.
    pub energy: f64,
    pub decay_ratio: f64,
    pub truncation_warning: bool,
}

pub struct CellOutcome {
    pub levels: Vec<CellLevel>,
    /// `|eta1_{k+1} - eta1_k|` between consecutive levels.
    pub diffs: Vec<f64>,
    /// `log2(diff_k / diff_{k+1})`, the observed self-convergence orders.
    pub orders: Vec<f64>,
    /// Fit of the level differences against the spacing `1/n_x`; present
    /// once there are at least three differences to fit.
    pub order_fit: Option<SlopeFit>,
}

pub fn run_cell(cfg: &CellStudyConfig) -> Result<CellOutcome> {
    let levels: Vec<CellLevel> = (0..cfg.refinements)
        .into_par_iter()
        .map(|k| {
            let n_x = cfg.n_x << k;
            let n_y = cfg.n_y << k;
            let sol = solve_cell_problem(&cfg.eta, cfg.height, n_x, n_y)?;
            let energy = gradient_energy(&sol.mesh, &sol.v);
            Ok(CellLevel {
                n_x,
                n_y,
                eta0: sol.eta0,
                eta1: sol.eta1,
                energy,
                decay_ratio: sol.decay_ratio,
                truncation_warning: sol.truncation_warning,
            })
        })
        .collect::<Result<_>>()?;

    let diffs: Vec<f64> = levels.windows(2).map(|w| (w[1].eta1 - w[0].eta1).abs()).collect();
    let orders: Vec<f64> =
        diffs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let points: Vec<(f64, f64)> = levels
        .iter()
        .zip(&diffs)
        .map(|(lvl, d)| (1.0 / lvl.n_x as f64, *d))
        .collect();
    let order_fit =
        if points.len() >= 3 { Some(fit_loglog_slope(&points)?) } else { None };
    Ok(CellOutcome { levels, diffs, orders, order_fit })
}

pub fn write_outputs(out: &Path, outcome: &CellOutcome) -> Result<String> {
    let csv_rows: Vec<String> = outcome
        .levels
        .iter()
        .map(|l| {
            format!(
                "{},{},{},{},{},{},{}",
                l.n_x,
                l.n_y,
                fnum(l.eta0),
                fnum(l.eta1),
                fnum(l.energy),
                fnum(l.decay_ratio),
                l.truncation_warning
            )
        })
        .collect();
    write_csv(
        &out.join("cell.csv"),
        "n_x,n_y,eta0,eta1,energy,decay_ratio,truncation_warning",
        &csv_rows,
    )?;
    if let Some(fit) = &outcome.order_fit {
        write_loglog_svg(
            &out.join("cell_convergence.svg"),
            "cell layer-energy self-convergence",
            "mesh spacing 1/n_x",
            "successive eta1 difference",
            fit,
        )?;
    }

    let mut s = String::from("cell problem refinement\n");
    s.push_str(
        "  corrector: harmonic in the half-strip above the graph, periodic in x,\n  \
         zero lid flux, graph flux = x-component of the outward unit normal\n  \
         (G = eta' / sqrt(1 + eta'^2))\n",
    );
    for l in &outcome.levels {
        let _ = writeln!(
            s,
            "  {:4} x {:4}  eta0 = {}  eta1 = {}  decay = {}{}",
            l.n_x,
            l.n_y,
            fnum(l.eta0),
            fnum(l.eta1),
            fnum(l.decay_ratio),
            if l.truncation_warning { "  TRUNCATION WARNING" } else { "" }
        );
    }
    if !outcome.orders.is_empty() {
        let list: Vec<String> = outcome.orders.iter().map(|o| format!("{o:.3}")).collect();
        let _ = writeln!(s, "  observed orders between levels: {}", list.join(", "));
    }
    if let Some(fit) = &outcome.order_fit {
        let _ = writeln!(s, "  fitted order {:.3} (r2 {:.4})", fit.slope, fit.r2);
    }
    Ok(s)
}
