//! Multi-pair emission statistics of one downconversion source.
//!
//! Run with: cargo run --example pair_statistics

use steersim::fock::ArmId;
use steersim::spdc::{pair_sector_weights, spdc_state, SourceConfig};

fn main() {
    let arm_1 = ArmId::new("signal");
    let arm_2 = ArmId::new("idler");

    for xi in [0.032, 0.045, 0.1] {
        let weights = pair_sector_weights(xi, 3).unwrap();
        let state = spdc_state(&SourceConfig::ideal(xi), &arm_1, &arm_2, 8).unwrap();
        println!("squeezing ξ = {xi}");
        println!("  {:>6} {:>14} {:>14}", "pairs", "closed form", "simulated");
        for (n, &w) in weights.weights.iter().enumerate() {
            let (_, p) = state.project_with(|occ| occ.total() == 2 * n as u32);
            println!("  {n:>6} {w:>14.3e} {p:>14.3e}");
        }
        // contamination of heralded single photons by extra pairs
        let (_, p_multi) = state.project_with(|occ| occ.total() >= 4);
        let (_, p_any) = state.project_with(|occ| occ.total() >= 2);
        println!(
            "  P(≥2 pairs | ≥1 pair) = {:.4e}   (w₂/w₁ = {:.4e})",
            p_multi / p_any,
            weights.weights[2] / weights.weights[1]
        );
        println!("  truncated tail: {:.2e}", weights.tail);
        println!();
    }
}
