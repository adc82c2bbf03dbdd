//! One seeded instance of the finite-dimensional framework: build two
//! operators on nearby subspaces, measure the proximity constants, and
//! verify that the reduced-problem corrections track the second operator's
//! cluster eigenvalues within the certified bound.

use nh::proximity::{build_instance, proximity_constants, verify_cluster, InstanceConfig};

fn main() -> nh::Result<()> {
    let config = InstanceConfig {
        ambient_dim: 16,
        n1: 12,
        n2: 12,
        k1_spectrum: vec![
            1.0, 0.5, 0.5, 0.25, 0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625,
            0.001953125,
        ],
        perturbation_scale: 1e-3,
        overlap_angle: 0.05,
    };
    let inst = build_instance(42, &config)?;
    let cluster = inst.cluster(2)?;
    let constants = proximity_constants(&inst, &cluster)?;
    let verdict = verify_cluster(&inst, &cluster)?;

    println!("seed 42, ambient dim 16, cluster 2 (the 0.5 doublet)");
    println!("epsilon            = {:.6e}", constants.epsilon);
    println!("sigma              = {:.6e}", constants.sigma);
    println!("epsilon_from_sigma = {:.6e}", constants.epsilon_from_sigma);
    println!("rho                = {:.6e}", constants.rho);
    println!();
    println!("{:>18} {:>18} {:>14}", "mu - lambda", "tau", "remainder");
    for k in 0..verdict.tau_values.len() {
        println!(
            "{:>18.10e} {:>18.10e} {:>14.3e}",
            verdict.mu_values[k] - cluster.lambda,
            verdict.tau_values[k],
            verdict.remainders[k]
        );
    }
    println!();
    println!(
        "count_ok = {}, bound_ratio = {:.3}",
        verdict.count_ok, verdict.bound_ratio
    );
    Ok(())
}
