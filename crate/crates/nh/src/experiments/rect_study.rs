//! Mesh-convergence study on the unperturbed rectangle: FEM eigenvalues
//! against the closed-form spectrum across a ladder of resolutions.

use super::config::RectConfig;
use super::emit::{fnum, write_csv, write_loglog_svg};
use super::fit::{fit_loglog_slope, SlopeFit};
use crate::error::Result;
use crate::fem::{assemble, build_mesh, eigen_lowest};
use crate::geometry::reference_spectrum;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;

pub struct RectRow {
    pub n: usize,
    /// Spectrum index, 1-based past the constant mode.
    pub mode: usize,
    pub lambda_ref: f64,
    pub lambda_fem: f64,
    pub rel_err: f64,
}

pub struct RectOutcome {
    pub rows: Vec<RectRow>,
    /// Worst relative error per resolution, in config order.
    pub max_rel_err: Vec<(usize, f64)>,
    /// Order fit of the worst error against the mesh spacing `1/n`.
    pub order_fit: SlopeFit,
}

pub fn run_rect(cfg: &RectConfig) -> Result<RectOutcome> {
    let reference = reference_spectrum(&cfg.spec, cfg.modes + 1);
    let per_level: Vec<(Vec<RectRow>, f64)> = cfg
        .resolutions
        .par_iter()
        .map(|&n| {
            let mesh = build_mesh(&cfg.spec, None, n, n)?;
            let pair = assemble(&mesh)?;
            let eig = eigen_lowest(&pair, cfg.modes + 1, cfg.tol)?;
            let mut rows = Vec::with_capacity(cfg.modes);
            let mut worst = 0.0f64;
            for k in 1..=cfg.modes {
                let lambda_ref = reference[k].lambda;
                let lambda_fem = eig.values[k];
                let rel_err = (lambda_fem - lambda_ref).abs() / lambda_ref;
                worst = worst.max(rel_err);
                rows.push(RectRow { n, mode: k, lambda_ref, lambda_fem, rel_err });
            }
            Ok((rows, worst))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut max_rel_err = Vec::new();
    let mut points = Vec::new();
    for (&n, (level_rows, worst)) in cfg.resolutions.iter().zip(per_level) {
        rows.extend(level_rows);
        max_rel_err.push((n, worst));
        points.push((1.0 / n as f64, worst));
    }
    let order_fit = fit_loglog_slope(&points)?;
    Ok(RectOutcome { rows, max_rel_err, order_fit })
}

pub fn write_outputs(out: &Path, outcome: &RectOutcome) -> Result<String> {
    let csv_rows: Vec<String> = outcome
        .rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{}",
                r.n,
                r.mode,
                fnum(r.lambda_ref),
                fnum(r.lambda_fem),
                fnum(r.rel_err)
            )
        })
        .collect();
    write_csv(&out.join("rect.csv"), "n,mode,lambda_ref,lambda_fem,rel_err", &csv_rows)?;
    write_loglog_svg(
        &out.join("rect_convergence.svg"),
        "rectangle spectrum convergence",
        "mesh spacing 1/n",
        "max relative eigenvalue error",
        &outcome.order_fit,
    )?;

    let mut s = String::from("rectangle spectrum convergence\n");
    for (n, err) in &outcome.max_rel_err {
        let _ = writeln!(s, "  n = {n:4}  max rel err = {}", fnum(*err));
    }
    let _ = writeln!(
        s,
        "  fitted order {:.3} (r2 {:.4}) across {} resolutions",
        outcome.order_fit.slope,
        outcome.order_fit.r2,
        outcome.max_rel_err.len()
    );
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BcX, RectangleSpec};
    use std::f64::consts::PI;

    #[test]
    fn unit_square_converges_at_second_order() {
        let cfg = RectConfig {
            spec: RectangleSpec::new(1.0, 1.0, BcX::Neumann).unwrap(),
            resolutions: vec![8, 16, 32],
            modes: 3,
            tol: 1e-9,
        };
        let outcome = run_rect(&cfg).unwrap();
        assert_eq!(outcome.rows.len(), 9);
        let finest: Vec<&RectRow> = outcome.rows.iter().filter(|r| r.n == 32).collect();
        assert!((finest[0].lambda_ref - PI * PI).abs() < 1e-12);
        for row in &finest {
            assert!(row.rel_err < 5e-3, "mode {} err {}", row.mode, row.rel_err);
        }
        assert!(
            (outcome.order_fit.slope - 2.0).abs() < 0.3,
            "order {}",
            outcome.order_fit.slope
        );
        assert!(outcome.order_fit.r2 > 0.99);
    }
}
