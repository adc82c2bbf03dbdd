//! Finite-dimensional operator study: a seeded family of two-subspace
//! instances, each checked against the cluster correction and its
//! second-order remainder bound, plus an optional perturbation-scale sweep.

use super::config::{AbstractConfig, FamilyConfig, TsweepConfig};
use super::emit::{fnum, write_csv, write_loglog_svg};
use super::fit::{fit_loglog_slope, SlopeFit};
use crate::error::Result;
use crate::proximity::{
    build_instance, proximity_constants, verify_cluster, InstanceConfig,
};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;

pub struct AbstractRow {
    /// Instance seed; `-1` marks the family-maximum row.
    pub seed: i64,
    pub epsilon: f64,
    pub sigma: f64,
    pub rho: f64,
    pub tau_max: f64,
    pub remainder_max: f64,
    pub bound_ratio: f64,
    pub count_ok: bool,
    /// Whether `epsilon` stayed within the bound derived from `sigma`.
    pub epsilon_bounded: bool,
}

pub struct TsweepRow {
    pub scale: f64,
    pub tau_max: f64,
    pub remainder_max: f64,
}

pub struct TsweepOutcome {
    pub rows: Vec<TsweepRow>,
    pub tau_fit: SlopeFit,
    pub remainder_fit: SlopeFit,
}

pub struct AbstractOutcome {
    pub rows: Vec<AbstractRow>,
    pub family: AbstractRow,
    pub count_ok_all: bool,
    pub epsilon_bounded_all: bool,
    pub bound_ratio_max: f64,
    pub bound_ratio_median: f64,
    pub tsweep: Option<TsweepOutcome>,
}

/// Cluster spectrum used for every instance: a top singleton, two doublets,
/// then halving singletons down to the requested size.
fn graded_spectrum(n: usize) -> Vec<f64> {
    let mut v = vec![1.0, 0.5, 0.5, 0.25, 0.25];
    let mut x = 0.25;
    while v.len() < n {
        x *= 0.5;
        v.push(x);
    }
    v.truncate(n);
    v
}

fn instance_row(seed: u64, dim: usize, scale: f64, angle: f64, m: usize) -> Result<AbstractRow> {
    let n = dim - 4;
    let config = InstanceConfig {
        ambient_dim: dim,
        n1: n,
        n2: n,
        k1_spectrum: graded_spectrum(n),
        perturbation_scale: scale,
        overlap_angle: angle,
    };
    let inst = build_instance(seed, &config)?;
    let cluster = inst.cluster(m)?;
    let constants = proximity_constants(&inst, &cluster)?;
    let verdict = verify_cluster(&inst, &cluster)?;
    let tau_max = verdict.tau_values.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    let remainder_max = if verdict.count_ok {
        verdict.remainders.iter().fold(0.0f64, |a, r| a.max(*r))
    } else {
        f64::NAN
    };
    let epsilon_bounded =
        constants.epsilon <= constants.epsilon_from_sigma * (1.0 + 1e-9) + 1e-15;
    Ok(AbstractRow {
        seed: seed as i64,
        epsilon: constants.epsilon,
        sigma: constants.sigma,
        rho: constants.rho,
        tau_max,
        remainder_max,
        bound_ratio: verdict.bound_ratio,
        count_ok: verdict.count_ok,
        epsilon_bounded,
    })
}

fn family_dim(seed: u64, family: &FamilyConfig) -> usize {
    let span = family.dim_max - family.dim_min + 1;
    family.dim_min + (seed as usize % span)
}

fn run_tsweep(m: usize, ts: &TsweepConfig) -> Result<TsweepOutcome> {
    let rows: Vec<TsweepRow> = ts
        .scales
        .par_iter()
        .map(|&scale| {
            let row = instance_row(ts.seed, ts.dim, scale, ts.angle, m)?;
            Ok(TsweepRow { scale, tau_max: row.tau_max, remainder_max: row.remainder_max })
        })
        .collect::<Result<_>>()?;
    let tau_points: Vec<(f64, f64)> = rows.iter().map(|r| (r.scale, r.tau_max)).collect();
    let rem_points: Vec<(f64, f64)> =
        rows.iter().map(|r| (r.scale, r.remainder_max)).collect();
    Ok(TsweepOutcome {
        rows,
        tau_fit: fit_loglog_slope(&tau_points)?,
        remainder_fit: fit_loglog_slope(&rem_points)?,
    })
}

pub fn run_abstract(cfg: &AbstractConfig) -> Result<AbstractOutcome> {
    let rows: Vec<AbstractRow> = (0..cfg.family.count as u64)
        .into_par_iter()
        .map(|seed| {
            instance_row(
                seed,
                family_dim(seed, &cfg.family),
                cfg.family.scale,
                cfg.family.angle,
                cfg.m,
            )
        })
        .collect::<Result<_>>()?;

    let count_ok_all = rows.iter().all(|r| r.count_ok);
    let epsilon_bounded_all = rows.iter().all(|r| r.epsilon_bounded);
    let max_of = |f: fn(&AbstractRow) -> f64| rows.iter().map(f).fold(f64::MIN, f64::max);
    let family = AbstractRow {
        seed: -1,
        epsilon: max_of(|r| r.epsilon),
        sigma: max_of(|r| r.sigma),
        rho: max_of(|r| r.rho),
        tau_max: max_of(|r| r.tau_max),
        remainder_max: max_of(|r| r.remainder_max),
        bound_ratio: max_of(|r| r.bound_ratio),
        count_ok: count_ok_all,
        epsilon_bounded: epsilon_bounded_all,
    };

    let mut ratios: Vec<f64> =
        rows.iter().map(|r| r.bound_ratio).filter(|b| b.is_finite()).collect();
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let bound_ratio_max = ratios.last().copied().unwrap_or(f64::NAN);
    let bound_ratio_median = if ratios.is_empty() {
        f64::NAN
    } else if ratios.len() % 2 == 1 {
        ratios[ratios.len() / 2]
    } else {
        0.5 * (ratios[ratios.len() / 2 - 1] + ratios[ratios.len() / 2])
    };

    let tsweep = match &cfg.tsweep {
        Some(ts) => Some(run_tsweep(cfg.m, ts)?),
        None => None,
    };
    Ok(AbstractOutcome {
        rows,
        family,
        count_ok_all,
        epsilon_bounded_all,
        bound_ratio_max,
        bound_ratio_median,
        tsweep,
    })
}

fn csv_row(r: &AbstractRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        r.seed,
        fnum(r.epsilon),
        fnum(r.sigma),
        fnum(r.rho),
        fnum(r.tau_max),
        fnum(r.remainder_max),
        fnum(r.bound_ratio),
        r.count_ok
    )
}

pub fn write_outputs(out: &Path, outcome: &AbstractOutcome) -> Result<String> {
    let mut csv_rows: Vec<String> = outcome.rows.iter().map(csv_row).collect();
    csv_rows.push(csv_row(&outcome.family));
    write_csv(
        &out.join("abstract.csv"),
        "seed,epsilon,sigma,rho,tau_max,remainder_max,bound_ratio,count_ok",
        &csv_rows,
    )?;

    let mut s = String::from("abstract cluster family\n");
    let _ = writeln!(
        s,
        "  {} instances, count_ok on all: {}",
        outcome.rows.len(),
        outcome.count_ok_all
    );
    let _ = writeln!(
        s,
        "  bound ratio median = {}  max = {}",
        fnum(outcome.bound_ratio_median),
        fnum(outcome.bound_ratio_max)
    );
    let _ = writeln!(
        s,
        "  epsilon within its sigma-derived bound on all: {}",
        outcome.epsilon_bounded_all
    );
    let _ = writeln!(
        s,
        "  family maxima: epsilon = {}  rho = {}  remainder = {}",
        fnum(outcome.family.epsilon),
        fnum(outcome.family.rho),
        fnum(outcome.family.remainder_max)
    );

    if let Some(ts) = &outcome.tsweep {
        let rows: Vec<String> = ts
            .rows
            .iter()
            .map(|r| format!("{},{},{}", fnum(r.scale), fnum(r.tau_max), fnum(r.remainder_max)))
            .collect();
        write_csv(&out.join("abstract_tsweep.csv"), "scale,tau_max,remainder_max", &rows)?;
        write_loglog_svg(
            &out.join("abstract_tau.svg"),
            "correction size vs perturbation scale",
            "perturbation scale t",
            "max |tau|",
            &ts.tau_fit,
        )?;
        write_loglog_svg(
            &out.join("abstract_remainder.svg"),
            "remainder vs perturbation scale",
            "perturbation scale t",
            "max remainder",
            &ts.remainder_fit,
        )?;
        let _ = writeln!(
            s,
            "  t-sweep: tau slope {:.3} (r2 {:.4}), remainder slope {:.3} (r2 {:.4})",
            ts.tau_fit.slope, ts.tau_fit.r2, ts.remainder_fit.slope, ts.remainder_fit.r2
        );
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_family_verifies_and_zero_scale_is_exact() {
        let cfg = AbstractConfig {
            m: 2,
            family: FamilyConfig { count: 3, scale: 1e-3, angle: 0.05, dim_min: 12, dim_max: 14 },
            tsweep: None,
        };
        let outcome = run_abstract(&cfg).unwrap();
        assert_eq!(outcome.rows.len(), 3);
        assert!(outcome.count_ok_all);
        assert!(outcome.epsilon_bounded_all);
        assert_eq!(outcome.family.seed, -1);
        assert!(outcome.family.remainder_max < 1e-4);

        let frozen = AbstractConfig {
            m: 2,
            family: FamilyConfig { count: 2, scale: 0.0, angle: 0.0, dim_min: 12, dim_max: 12 },
            tsweep: None,
        };
        let exact = run_abstract(&frozen).unwrap();
        assert!(exact.family.remainder_max <= 1e-9);
        assert!(exact.family.tau_max <= 1e-9);
    }

    #[test]
    fn scale_sweep_shows_first_order_tau_and_second_order_remainder() {
        let cfg = AbstractConfig {
            m: 2,
            family: FamilyConfig { count: 1, scale: 1e-3, angle: 0.0, dim_min: 12, dim_max: 12 },
            tsweep: Some(TsweepConfig {
                scales: vec![1e-3, 5e-4, 2.5e-4],
                seed: 7,
                dim: 12,
                angle: 0.0,
            }),
        };
        let outcome = run_abstract(&cfg).unwrap();
        let ts = outcome.tsweep.unwrap();
        assert!((ts.tau_fit.slope - 1.0).abs() < 0.1, "tau slope {}", ts.tau_fit.slope);
        assert!(ts.remainder_fit.slope > 1.8, "remainder slope {}", ts.remainder_fit.slope);
    }

    #[test]
    fn spectrum_ladder_has_the_advertised_shape() {
        let s = graded_spectrum(8);
        assert_eq!(s, vec![1.0, 0.5, 0.5, 0.25, 0.25, 0.125, 0.0625, 0.03125]);
        assert_eq!(graded_spectrum(3), vec![1.0, 0.5, 0.5]);
    }
}
