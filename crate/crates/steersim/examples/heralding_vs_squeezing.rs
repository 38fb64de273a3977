//! Heralding efficiency against source-2 squeezing: double pairs from the
//! channel-side source fake the trigger without delivering a photon to the
//! A analyzer, so ε falls as ξ₂ grows (and recovers as loss suppresses the
//! two-photon channel quadratically).
//!
//! Writes heralding_vs_squeezing.csv with one column per configuration.
//!
//! Run with: cargo run --example heralding_vs_squeezing

use steersim::circuit::{DetectorBank, Experiment, ExperimentConfig};
use steersim::steering::platonic_settings;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let settings = platonic_settings(6)?;
    let xi2_grid: Vec<f64> = (1..=16).map(|i| 0.005 * i as f64).collect();
    // (label, detector efficiencies (A, B, BSM), added loss)
    let panels = [
        ("ideal", (1.0, 1.0, 1.0), 0.0),
        ("apparatus", (0.5, 0.25, 0.25), 0.0),
        ("apparatus+14.8dB", (0.5, 0.25, 0.25), 14.8),
    ];

    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    for (label, eta, loss) in panels {
        for xi1 in [0.032, 0.045] {
            let mut eps = Vec::with_capacity(xi2_grid.len());
            for &xi2 in &xi2_grid {
                let mut cfg = ExperimentConfig::ideal(true, 0.0);
                cfg.source1.squeezing = xi1;
                cfg.source2.squeezing = xi2;
                cfg.channel_loss_db = loss;
                cfg.detectors = DetectorBank::with_efficiencies(eta.0, eta.1, eta.2)?;
                eps.push(Experiment::build(&cfg)?.heralding_efficiency(&settings)?);
            }
            columns.push((format!("{label}_xi1_{xi1}"), eps));
        }
    }

    let mut csv = String::from("xi2");
    for (name, _) in &columns {
        csv.push(',');
        csv.push_str(name);
    }
    csv.push('\n');
    for (i, xi2) in xi2_grid.iter().enumerate() {
        csv.push_str(&format!("{xi2}"));
        for (_, eps) in &columns {
            csv.push_str(&format!(",{}", eps[i]));
        }
        csv.push('\n');
    }
    std::fs::write("heralding_vs_squeezing.csv", csv)?;

    println!("ε at ξ2 = 0.005 / 0.04 / 0.08:");
    for (name, eps) in &columns {
        println!(
            "  {name:<24} {:.4} / {:.4} / {:.4}",
            eps[0],
            eps[7],
            eps[15]
        );
    }
    println!("full curves in heralding_vs_squeezing.csv");
    Ok(())
}
