//! Space-time ordering report for a symmetric two-station layout, plus the
//! degenerate cases that open loopholes.
//!
//! Run with: cargo run --example timing_check

use steersim::steering::{check_spacetime_ordering, symmetric_scenario, Event, EventGeometry};

fn print_report(label: &str, geometry: &EventGeometry) -> Result<(), steersim::Error> {
    let report = check_spacetime_ordering(geometry, 2.0 / 3.0)?;
    println!("{label}:");
    for c in &report.constraints {
        println!(
            "  {:<42} {}  margin {:>12.1} ns",
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            c.margin_ns
        );
    }
    println!();
    Ok(())
}

fn main() -> Result<(), steersim::Error> {
    let geometry = symmetric_scenario(30_000.0, 2.0 / 3.0);
    print_report("stations 30 km apart, fiber signals at 2c/3", &geometry)?;

    let mut late_report = geometry.clone();
    late_report.alice_report.time_ns += 1.0e6;
    print_report("outcome report held 1 ms too long", &late_report)?;

    let everything_at_once = Event::on_line(0.0, 0.0);
    print_report(
        "all parties co-located and simultaneous",
        &EventGeometry {
            pair_generation: everything_at_once,
            rng_choice: everything_at_once,
            bsm: everything_at_once,
            bob_detection: everything_at_once,
            alice_report: everything_at_once,
        },
    )
}
