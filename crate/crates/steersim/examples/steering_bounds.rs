//! Deterministic and loss-dependent local-hidden-state bounds.
//!
//! Prints C_n for every supported measurement set, then writes the C_6(ε)
//! curve (with a dense-set estimate of the many-settings limit) to
//! `bounds_n6.csv`.
//!
//! Run with: cargo run --example steering_bounds

use steersim::steering::{
    deterministic_bound, infinite_settings_bound_approx, loss_bound, platonic_settings,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("deterministic bounds C_n:");
    for n in [2, 3, 4, 6, 10, 16] {
        let set = platonic_settings(n)?;
        println!("  n = {n:>2}: C_n = {:.6}", deterministic_bound(&set));
    }

    let set = platonic_settings(6)?;
    let curve = loss_bound(&set, &[])?;
    println!();
    println!("subset maxima m(j) for the icosahedral set:");
    for (j, m) in curve.subset_values.iter().enumerate() {
        println!("  m({j}) = {m:.6}");
    }

    let mut csv = String::from("epsilon,c_6,c_inf_approx\n");
    println!();
    println!("{:>6} {:>10} {:>12}", "ε", "C_6(ε)", "C_inf(ε)~");
    for i in 1..=20 {
        let eps = i as f64 * 0.05;
        let c6 = curve.value_at(eps)?;
        let c_inf = infinite_settings_bound_approx(eps, 100)?;
        println!("{eps:>6.2} {c6:>10.6} {:>12.6}", c_inf.value);
        csv.push_str(&format!("{eps},{c6},{}\n", c_inf.value));
    }
    std::fs::write("bounds_n6.csv", csv)?;
    println!();
    println!("wrote bounds_n6.csv ({})", infinite_settings_bound_approx(0.5, 100)?.method);
    Ok(())
}
