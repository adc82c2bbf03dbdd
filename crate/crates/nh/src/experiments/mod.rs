//! Numerical studies behind the `nh` binary: each submodule runs one
//! experiment family end to end; `run_study` dispatches on a parsed
//! configuration and writes CSV tables, SVG fit plots, and a text summary.

mod abstract_study;
mod cell_study;
mod config;
mod emit;
mod fit;
mod perturb_study;
mod rect_study;
mod sharpness_study;

pub use abstract_study::{
    run_abstract, write_outputs as write_abstract_outputs, AbstractOutcome, AbstractRow,
    TsweepOutcome, TsweepRow,
};
pub use cell_study::{run_cell, write_outputs as write_cell_outputs, CellLevel, CellOutcome};
pub use config::{
    AbstractConfig, CellStudyConfig, FamilyConfig, PerturbConfig, ProfileFamily, RectConfig,
    SharpnessConfig, StudyConfig, StudyKind, StudySpec, TsweepConfig,
};
pub use emit::write_loglog_svg;
pub use fit::{fit_loglog_slope, SlopeFit};
pub use perturb_study::{
    run_perturb, write_outputs as write_perturb_outputs, PerturbOutcome, PerturbRow,
};
pub use rect_study::{run_rect, write_outputs as write_rect_outputs, RectOutcome, RectRow};
pub use sharpness_study::{
    run_sharpness, write_outputs as write_sharpness_outputs, ClusterTrack, SharpnessOutcome,
    SharpnessRow,
};

use crate::error::{invalid, Error, Result};
use crate::geometry::ModeCluster;
use std::path::Path;

/// Fraction of a reference spectral gap that must survive the perturbation
/// for position-based cluster extraction to be trusted.
const GAP_KEEP: f64 = 0.2;

/// Extracts the FEM eigenvalues belonging to `cluster` by position: entries
/// `offset .. offset + multiplicity` of the ascending spectrum, to be paired
/// with correction eigenvalues in sorted order. The gaps separating the
/// block from its neighbors must retain at least [`GAP_KEEP`] of the
/// reference gaps, so a perturbation strong enough to migrate modes across
/// clusters is reported instead of silently mispaired.
pub(crate) fn cluster_block(cluster: &ModeCluster, eigenvalues: &[f64]) -> Result<Vec<f64>> {
    let j = cluster.multiplicity();
    let lo = cluster.offset;
    if eigenvalues.len() < lo + j + 1 {
        return Err(invalid(format!(
            "need {} eigenvalues to isolate the cluster block, got {}",
            lo + j + 1,
            eigenvalues.len()
        )));
    }
    if lo > 0 {
        let below = cluster
            .below
            .ok_or_else(|| invalid("cluster bookkeeping: offset without a lower neighbor"))?;
        let need = GAP_KEEP * (cluster.lambda - below);
        let gap = eigenvalues[lo] - eigenvalues[lo - 1];
        if gap < need {
            return Err(Error::ClusterResolution(format!(
                "gap {gap:.3e} below the cluster block fell under {need:.3e}; \
                 the perturbation no longer isolates the cluster"
            )));
        }
    }
    let need = GAP_KEEP * (cluster.above - cluster.lambda);
    let gap = eigenvalues[lo + j] - eigenvalues[lo + j - 1];
    if gap < need {
        return Err(Error::ClusterResolution(format!(
            "gap {gap:.3e} above the cluster block fell under {need:.3e}; \
             the perturbation no longer isolates the cluster"
        )));
    }
    Ok(eigenvalues[lo..lo + j].to_vec())
}

/// Runs the configured study, writes its outputs (tables, plots, and
/// `summary.txt`) under `out`, and returns the summary text.
pub fn run_study(cfg: &StudyConfig, out: &Path) -> Result<String> {
    std::fs::create_dir_all(out)?;
    let summary = match &cfg.study {
        StudySpec::Abstract(c) => abstract_study::write_outputs(out, &run_abstract(c)?)?,
        StudySpec::Rect(c) => rect_study::write_outputs(out, &run_rect(c)?)?,
        StudySpec::Perturb(c) => perturb_study::write_outputs(out, &run_perturb(c)?)?,
        StudySpec::Sharpness(c) => sharpness_study::write_outputs(out, &run_sharpness(c)?)?,
        StudySpec::Cell(c) => cell_study::write_outputs(out, &run_cell(c)?)?,
    };
    emit::write_file(&out.join("summary.txt"), &summary)?;
    Ok(summary)
}

/// Writes the study's most refined geometry to `path` in the mesh dump
/// format: the finest flat mesh (rect), the largest-amplitude perturbed mesh
/// (perturb, sharpness), or the base-resolution cell strip (cell).
pub fn dump_study_mesh(cfg: &StudyConfig, path: &Path) -> Result<()> {
    use crate::fem::{build_mesh, solve_cell_problem};
    use crate::geometry::PerturbationProfile;
    match &cfg.study {
        StudySpec::Abstract(_) => {
            Err(invalid("the abstract study is mesh-free; nothing to dump"))
        }
        StudySpec::Rect(c) => {
            let n = *c.resolutions.last().unwrap();
            build_mesh(&c.spec, None, n, n)?.dump(path)
        }
        StudySpec::Perturb(c) => {
            let profile = c.family.build(c.spec.width, c.d_values[0])?;
            build_mesh(&c.spec, Some(&profile), c.n_x, c.n_y)?.dump(path)
        }
        StudySpec::Sharpness(c) => {
            let n = c.periods[0];
            let delta = c.spec.width / n as f64;
            let profile = PerturbationProfile::oscillation(c.spec.width, &c.eta, delta)?;
            build_mesh(&c.spec, Some(&profile), c.per_x * n, c.per_y * n)?.dump(path)
        }
        StudySpec::Cell(c) => {
            solve_cell_problem(&c.eta, c.height, c.n_x, c.n_y)?.mesh.dump(path)
        }
    }
}
