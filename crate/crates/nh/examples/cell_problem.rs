//! Corrector cell problem on the half-strip above one period of eta: the
//! layer energy eta1 comes from the boundary flux functional and must equal
//! the corrector's gradient energy; a flat profile has no corrector at all.

use nh::fem::{gradient_energy, solve_cell_problem};
use nh::geometry::EtaProfile;

fn main() -> nh::Result<()> {
    let flat = solve_cell_problem(&EtaProfile::constant(0.3)?, 4.5, 16, 72)?;
    println!("flat profile:     eta1 = {:.3e} (no oscillation, no layer)", flat.eta1);

    println!("sawtooth profile: strip height 4.5");
    println!(
        "{:>6} {:>6} {:>16} {:>16} {:>12}",
        "n_x", "n_y", "eta1", "grad energy", "lid decay"
    );
    for k in 0..3 {
        let sol = solve_cell_problem(&EtaProfile::sawtooth(), 4.5, 16 << k, 72 << k)?;
        let energy = gradient_energy(&sol.mesh, &sol.v);
        println!(
            "{:>6} {:>6} {:>16.10} {:>16.10} {:>12.3e}",
            16 << k,
            72 << k,
            sol.eta1,
            energy,
            sol.decay_ratio
        );
    }
    Ok(())
}
