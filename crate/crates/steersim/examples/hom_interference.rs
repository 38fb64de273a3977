//! Hong-Ou-Mandel interference of two single photons.
//!
//! Sweeps the splitter ratio (coincidence (T − R)²) and the spectral overlap
//! of one photon (dip visibility = overlap).
//!
//! Run with: cargo run --example hom_interference

use num_complex::Complex64;
use steersim::fock::{
    click_distribution, ArmId, DetectorGroup, ModeLayout, OccupationState, PhotonicState,
    Polarization, SpectralBin, ThresholdDetector,
};
use steersim::spdc::split_spectral_mode_pol;

fn one_photon_per_arm() -> PhotonicState {
    let layout = ModeLayout::for_arms(["a", "b"]);
    let mut occ = OccupationState(smallvec::smallvec![0; layout.len()]);
    occ.0[layout
        .optical_index(&ArmId::new("a"), Polarization::H, SpectralBin::Matched)
        .unwrap()] = 1;
    occ.0[layout
        .optical_index(&ArmId::new("b"), Polarization::H, SpectralBin::Matched)
        .unwrap()] = 1;
    PhotonicState::from_amplitudes(layout, [(occ, Complex64::new(1.0, 0.0))], 4, 0.0).unwrap()
}

fn coincidence(state: &PhotonicState) -> f64 {
    let groups = ["a", "b"].map(|arm| DetectorGroup {
        name: arm.into(),
        modes: state.layout().arm_modes(&ArmId::new(arm)).unwrap().to_vec(),
        detector: ThresholdDetector::ideal(),
    });
    click_distribution(state, &groups).unwrap().probabilities[0b11]
}

fn main() {
    let a = ArmId::new("a");
    let b = ArmId::new("b");

    println!("coincidence vs splitting ratio (matched photons):");
    println!("{:>6} {:>12} {:>12}", "T", "simulated", "(T-R)^2");
    for t in [0.40, 0.47, 0.50, 0.53, 0.60] {
        let out = one_photon_per_arm()
            .apply_beamsplitter(&a, &b, t, t, 0.0)
            .unwrap();
        let p = coincidence(&out);
        println!("{t:>6.2} {p:>12.6} {:>12.6}", (2.0 * t - 1.0) * (2.0 * t - 1.0));
    }

    println!();
    println!("dip visibility vs spectral overlap (balanced splitter):");
    println!("{:>8} {:>12} {:>12}", "overlap", "coincidence", "visibility");
    for v in [0.0, 0.5, 0.9, 0.99, 1.0] {
        let split = split_spectral_mode_pol(&one_photon_per_arm(), &b, Polarization::H, v).unwrap();
        let out = split.apply_beamsplitter(&a, &b, 0.5, 0.5, 0.0).unwrap();
        let dip = coincidence(&out);
        let visibility = (0.5 - dip) / 0.5;
        println!("{v:>8.2} {dip:>12.6} {visibility:>12.6}");
    }
}
