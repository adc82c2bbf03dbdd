//! The naive boundary formula stalls at first order on an oscillating
//! boundary: across the sawtooth sweep its remainder shrinks like delta
//! while the homogenized formula's remainder shrinks at second order, and
//! the gap per delta matches the layer prediction eta1 * max \int phi_x^2.
//!
//! Runs three sweep levels (up to a 512 x 128 mesh); expect roughly half a
//! minute.

use nh::experiments::{run_sharpness, SharpnessConfig};
use nh::geometry::{BcX, EtaProfile, RectangleSpec};

fn main() -> nh::Result<()> {
    let cfg = SharpnessConfig {
        spec: RectangleSpec::new(1.0, 1.0, BcX::Periodic)?,
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
    let outcome = run_sharpness(&cfg)?;

    println!("sawtooth sweep of the 4 pi^2 cluster, delta = 1/N");
    println!(
        "{:>8} {:>6} {:>14} {:>14}",
        "delta", "mode", "rem_boundary", "rem_homog"
    );
    for row in &outcome.rows {
        println!(
            "{:>8.5} {:>6} {:>14.6e} {:>14.6e}",
            row.delta, row.mode, row.remainder_boundary, row.remainder_homogenized
        );
    }
    println!();
    println!(
        "main cluster:    boundary slope {:.3}, homogenized slope {:.3}",
        outcome.main.boundary_fit.slope, outcome.main.homogenized_fit.slope
    );
    if let Some(control) = &outcome.control {
        println!(
            "control cluster: boundary slope {:.3}, homogenized slope {:.3}",
            control.boundary_fit.slope, control.homogenized_fit.slope
        );
    }
    let (delta, defect) = *outcome.defects.last().unwrap();
    println!(
        "defect per delta at delta = {delta}: {defect:.6} vs layer prediction {:.6}",
        outcome.defect_reference
    );
    Ok(())
}
