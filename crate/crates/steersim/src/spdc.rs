//! Polarization-entangled downconversion sources.
//!
//! A source pumps two pair-creation processes with opposite sign, producing
//!
//! ```text
//! |ψ⟩ = (1 − ξ²) Σ_{j,m} ξ^{j+m} (−1)^m |j⟩_{1H} |m⟩_{1V} |m⟩_{2H} |j⟩_{2V}
//! ```
//!
//! across its two arms, so the n-pair sector carries weight
//! (1 − ξ²)² (n + 1) ξ^{2n} and the one-pair sector is exactly the
//! polarization singlet (|HV⟩ − |VH⟩)/√2. Two calibration handles sit on
//! top of the ideal emission:
//!
//! - [`apply_pair_noise`] mixes the one-pair sector with isotropic (Werner)
//!   noise until its singlet fidelity matches a measured value, leaving the
//!   multi-pair sectors untouched;
//! - [`split_spectral_mode`] moves amplitude √(1−V) of every photon in one
//!   arm into the orthogonal spectral bin, which reproduces a Hong-Ou-Mandel
//!   visibility of exactly V against a matched reference photon.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::smallvec;

use crate::error::{Error, Result};
use crate::fock::{
    ArmId, ModeLayout, OccupationState, PhotonicState, Polarization, SpectralBin, TwoModeUnitary,
};

/// One downconversion source.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    /// Squeezing amplitude ξ ∈ [0, 1).
    pub squeezing: f64,
    /// Singlet fidelity of the one-pair sector after noise, in [0.25, 1].
    #[serde(default = "default_fidelity")]
    pub singlet_fidelity: f64,
    /// Amplitude-squared overlap of this source's measurement-bound photon
    /// with the reference spectral mode, per polarization.
    #[serde(default = "default_overlap")]
    pub overlap_h: f64,
    #[serde(default = "default_overlap")]
    pub overlap_v: f64,
    /// Pump power in mW. Recorded as metadata only; the physics interface is
    /// the squeezing amplitude.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump_power_mw: Option<f64>,
}

fn default_fidelity() -> f64 {
    1.0
}

fn default_overlap() -> f64 {
    1.0
}

impl SourceConfig {
    pub fn ideal(squeezing: f64) -> Self {
        SourceConfig {
            squeezing,
            singlet_fidelity: 1.0,
            overlap_h: 1.0,
            overlap_v: 1.0,
            pump_power_mw: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.squeezing) {
            return Err(Error::OutOfRange {
                name: "squeezing",
                value: self.squeezing,
                range: "[0, 1)",
            });
        }
        if !(0.25..=1.0).contains(&self.singlet_fidelity) {
            return Err(Error::OutOfRange {
                name: "singlet_fidelity",
                value: self.singlet_fidelity,
                range: "[0.25, 1]",
            });
        }
        for (name, v) in [("overlap_h", self.overlap_h), ("overlap_v", self.overlap_v)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange {
                    name,
                    value: v,
                    range: "[0, 1]",
                });
            }
        }
        Ok(())
    }
}

/// Probabilities of emitting 0, 1, 2, … photon pairs, w_n =
/// (1 − ξ²)² (n + 1) ξ^{2n}, truncated without renormalizing. The deficit
/// from 1 is the truncated tail.
#[derive(Debug, Clone)]
pub struct PairSectorWeights {
    pub weights: Vec<f64>,
    pub tail: f64,
}

pub fn pair_sector_weights(squeezing: f64, max_pairs: u32) -> Result<PairSectorWeights> {
    if !(0.0..1.0).contains(&squeezing) {
        return Err(Error::OutOfRange {
            name: "squeezing",
            value: squeezing,
            range: "[0, 1)",
        });
    }
    let xi2 = squeezing * squeezing;
    let norm = (1.0 - xi2) * (1.0 - xi2);
    let weights: Vec<f64> = (0..=max_pairs)
        .map(|n| norm * (n + 1) as f64 * xi2.powi(n as i32))
        .collect();
    let tail = (1.0 - weights.iter().sum::<f64>()).max(0.0);
    Ok(PairSectorWeights { weights, tail })
}

/// A classical mixture of pure photonic states. Werner noise on the one-pair
/// sector is exactly representable this way; downstream linear optics and
/// detection map over the members.
#[derive(Debug, Clone)]
pub struct StateEnsemble {
    pub members: Vec<(f64, PhotonicState)>,
}

impl StateEnsemble {
    pub fn pure(state: PhotonicState) -> Self {
        StateEnsemble {
            members: vec![(1.0, state)],
        }
    }

    pub fn try_map(&self, f: impl Fn(&PhotonicState) -> Result<PhotonicState>) -> Result<Self> {
        let members = self
            .members
            .iter()
            .map(|(w, s)| Ok((*w, f(s)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(StateEnsemble { members })
    }

    /// Member-wise tensor product with weight products.
    pub fn tensor(&self, other: &StateEnsemble) -> Result<Self> {
        let mut members = Vec::with_capacity(self.members.len() * other.members.len());
        for (wa, sa) in &self.members {
            for (wb, sb) in &other.members {
                members.push((wa * wb, sa.tensor(sb)?));
            }
        }
        Ok(StateEnsemble { members })
    }

    pub fn max_tail_weight(&self) -> f64 {
        self.members
            .iter()
            .map(|(_, s)| s.tail_weight())
            .fold(0.0, f64::max)
    }
}

/// Emission of one source into the four (pol × bin) modes of each of its two
/// arms, truncated at `n_max` total photons. All photons start in the matched
/// spectral bin.
pub fn spdc_state(config: &SourceConfig, arm_1: &ArmId, arm_2: &ArmId, n_max: u32) -> Result<PhotonicState> {
    config.validate()?;
    if n_max < 2 {
        return Err(Error::OutOfRange {
            name: "n_max",
            value: n_max as f64,
            range: "≥ 2",
        });
    }
    let layout = ModeLayout::for_arms([arm_1.clone(), arm_2.clone()]);
    let i_1h = layout
        .optical_index(arm_1, Polarization::H, SpectralBin::Matched)
        .unwrap();
    let i_1v = layout
        .optical_index(arm_1, Polarization::V, SpectralBin::Matched)
        .unwrap();
    let i_2h = layout
        .optical_index(arm_2, Polarization::H, SpectralBin::Matched)
        .unwrap();
    let i_2v = layout
        .optical_index(arm_2, Polarization::V, SpectralBin::Matched)
        .unwrap();

    let xi = config.squeezing;
    let max_pairs = n_max / 2;
    let mut terms = Vec::new();
    let mut kept = 0.0;
    for j in 0..=max_pairs {
        for m in 0..=(max_pairs - j) {
            let amp = (1.0 - xi * xi) * xi.powi((j + m) as i32) * if m % 2 == 0 { 1.0 } else { -1.0 };
            let mut occ = OccupationState(smallvec![0; layout.len()]);
            occ.0[i_1h] = j as u8;
            occ.0[i_1v] = m as u8;
            occ.0[i_2h] = m as u8;
            occ.0[i_2v] = j as u8;
            kept += amp * amp;
            terms.push((occ, Complex64::new(amp, 0.0)));
        }
    }
    PhotonicState::from_amplitudes(layout, terms, n_max, (1.0 - kept).max(0.0))
}

/// The four maximally-entangled two-photon amplitude patterns across a pair
/// of arms, used as the mixing basis for isotropic one-pair noise. Order:
/// singlet first.
fn bell_patterns() -> [[(Polarization, Polarization, f64); 2]; 4] {
    use Polarization::*;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        [(H, V, s), (V, H, -s)],  // (|HV⟩ − |VH⟩)/√2
        [(H, V, s), (V, H, s)],   // (|HV⟩ + |VH⟩)/√2
        [(H, H, s), (V, V, s)],   // (|HH⟩ + |VV⟩)/√2
        [(H, H, s), (V, V, -s)],  // (|HH⟩ − |VV⟩)/√2
    ]
}

/// Replaces the one-pair (two-photon) sector of a source state with a Werner
/// mixture of singlet fidelity `fidelity_target`, returned as a weighted
/// ensemble of pure states. Multi-pair sectors are carried unchanged by every
/// member, so their statistics are unaffected.
pub fn apply_pair_noise(
    state: &PhotonicState,
    arm_1: &ArmId,
    arm_2: &ArmId,
    fidelity_target: f64,
) -> Result<StateEnsemble> {
    if !(0.25..=1.0).contains(&fidelity_target) {
        return Err(Error::OutOfRange {
            name: "fidelity_target",
            value: fidelity_target,
            range: "[0.25, 1]",
        });
    }
    if fidelity_target == 1.0 {
        return Ok(StateEnsemble::pure(state.clone()));
    }

    let layout = state.layout();
    let idx = |arm: &ArmId, pol| {
        layout
            .optical_index(arm, pol, SpectralBin::Matched)
            .ok_or_else(|| Error::UnknownArm(arm.0.clone()))
    };
    let i_1h = idx(arm_1, Polarization::H)?;
    let i_1v = idx(arm_1, Polarization::V)?;
    let i_2h = idx(arm_2, Polarization::H)?;
    let i_2v = idx(arm_2, Polarization::V)?;
    let pol_index = |arm: usize, pol: Polarization| match (arm, pol) {
        (1, Polarization::H) => i_1h,
        (1, Polarization::V) => i_1v,
        (2, Polarization::H) => i_2h,
        _ => i_2v,
    };

    // Extract the singlet amplitude of the two-photon sector.
    let occ_for = |p1: Polarization, p2: Polarization| {
        let mut occ = OccupationState(smallvec![0; layout.len()]);
        occ.0[pol_index(1, p1)] += 1;
        occ.0[pol_index(2, p2)] += 1;
        occ
    };
    let a_hv = state.amplitude(&occ_for(Polarization::H, Polarization::V));
    let a_vh = state.amplitude(&occ_for(Polarization::V, Polarization::H));
    let singlet_amp = (a_hv - a_vh) / 2f64.sqrt();
    if singlet_amp.norm_sqr() == 0.0 {
        return Ok(StateEnsemble::pure(state.clone()));
    }

    let p = (4.0 * fidelity_target - 1.0) / 3.0;
    let weights = [p + (1.0 - p) / 4.0, (1.0 - p) / 4.0, (1.0 - p) / 4.0, (1.0 - p) / 4.0];

    let is_pair_sector = |occ: &OccupationState| {
        occ.total() == 2
            && occ.get(i_1h) as u32 + occ.get(i_1v) as u32 == 1
            && occ.get(i_2h) as u32 + occ.get(i_2v) as u32 == 1
    };

    let mut members = Vec::with_capacity(4);
    for (pattern, weight) in bell_patterns().iter().zip(weights) {
        let mut terms: Vec<(OccupationState, Complex64)> = state
            .amplitudes()
            .filter(|(occ, _)| !is_pair_sector(occ))
            .map(|(occ, &a)| (occ.clone(), a))
            .collect();
        for &(p1, p2, c) in pattern.iter() {
            terms.push((occ_for(p1, p2), singlet_amp * c));
        }
        let member =
            PhotonicState::from_amplitudes(layout.clone(), terms, state.n_max(), state.tail_weight())?;
        members.push((weight, member));
    }
    Ok(StateEnsemble { members })
}

/// Decomposes every photon in `arm` over the (matched, orthogonal) spectral
/// bins with amplitudes (√V, √(1−V)), per polarization. Against a matched
/// reference photon, the Hong-Ou-Mandel dip visibility becomes exactly V.
pub fn split_spectral_mode_pol(
    state: &PhotonicState,
    arm: &ArmId,
    pol: Polarization,
    overlap: f64,
) -> Result<PhotonicState> {
    if !(0.0..=1.0).contains(&overlap) {
        return Err(Error::OutOfRange {
            name: "overlap",
            value: overlap,
            range: "[0, 1]",
        });
    }
    let matched = state
        .layout()
        .optical_index(arm, pol, SpectralBin::Matched)
        .ok_or_else(|| Error::UnknownArm(arm.0.clone()))?;
    let orth = state
        .layout()
        .optical_index(arm, pol, SpectralBin::Orthogonal)
        .ok_or_else(|| Error::UnknownArm(arm.0.clone()))?;
    let v = overlap.sqrt();
    let w = (1.0 - overlap).sqrt();
    // Real rotation: matched† → √V matched† + √(1−V) orthogonal†.
    let u: TwoModeUnitary = [
        [Complex64::new(v, 0.0), Complex64::new(-w, 0.0)],
        [Complex64::new(w, 0.0), Complex64::new(v, 0.0)],
    ];
    Ok(state.apply_two_mode(matched, orth, &u))
}

/// [`split_spectral_mode_pol`] applied with the same overlap to both
/// polarizations of the arm.
pub fn split_spectral_mode(state: &PhotonicState, arm: &ArmId, overlap: f64) -> Result<PhotonicState> {
    let s = split_spectral_mode_pol(state, arm, Polarization::H, overlap)?;
    split_spectral_mode_pol(&s, arm, Polarization::V, overlap)
}
