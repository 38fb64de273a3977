//! The assembled experiment: two downconversion sources, a lossy channel on
//! the measurement-bound arm of the second source, an optional Bell-state
//! measurement (BSM) that heralds successful entanglement swaps, and one
//! polarization analyzer per side.
//!
//! Topology with the swap enabled:
//!
//! ```text
//!   source 1 ──┬── "alice"  → A analyzer (A+, A− detectors)
//!              └── "bsm1"  ─┐
//!                           ├─ 50:50 BSM splitter → BSM+, BSM− detectors
//!   source 2 ──┬── "bsm2"  ─┘   (channel + filter + gate loss upstream)
//!              └── "bob"    → B analyzer (B+, B− detectors)
//! ```
//!
//! A trigger is a coincidence of both BSM detectors (projecting the two
//! inner photons onto the polarization singlet) together with a click on
//! Bob's analyzer. With the swap disabled only source 2 exists, its lossy arm
//! feeds the A analyzer directly, and Bob's click alone is the trigger.
//!
//! Analyzers realize a measurement along a Bloch direction by rotating the
//! direction's +1 eigenstate onto H and splitting H/V onto two threshold
//! detectors. Double clicks are resolved by a fair coin.

use nalgebra::{Matrix4, Vector3};
use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fock::{
    click_distribution, ArmId, ClickDistribution, DetectorGroup, OccupationState,
    ThresholdDetector, TwoModeUnitary, DEFAULT_TAIL_TOLERANCE,
};
use crate::spdc::{apply_pair_noise, spdc_state, split_spectral_mode_pol, SourceConfig, StateEnsemble};
use crate::steering::MeasurementSet;

/// Converts a loss in dB to a linear intensity transmission.
pub fn db_to_transmission(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

/// The six threshold detectors of the apparatus.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorBank {
    pub bsm_plus: ThresholdDetector,
    pub bsm_minus: ThresholdDetector,
    pub a_plus: ThresholdDetector,
    pub a_minus: ThresholdDetector,
    pub b_plus: ThresholdDetector,
    pub b_minus: ThresholdDetector,
}

impl DetectorBank {
    pub fn ideal() -> Self {
        let d = ThresholdDetector::ideal();
        DetectorBank {
            bsm_plus: d,
            bsm_minus: d,
            a_plus: d,
            a_minus: d,
            b_plus: d,
            b_minus: d,
        }
    }

    /// Per-arm efficiencies with zero dark counts.
    pub fn with_efficiencies(eta_a: f64, eta_b: f64, eta_bsm: f64) -> Result<Self> {
        Ok(DetectorBank {
            bsm_plus: ThresholdDetector::new(eta_bsm, 0.0)?,
            bsm_minus: ThresholdDetector::new(eta_bsm, 0.0)?,
            a_plus: ThresholdDetector::new(eta_a, 0.0)?,
            a_minus: ThresholdDetector::new(eta_a, 0.0)?,
            b_plus: ThresholdDetector::new(eta_b, 0.0)?,
            b_minus: ThresholdDetector::new(eta_b, 0.0)?,
        })
    }
}

fn default_n_max() -> u32 {
    6
}

fn default_tail_tolerance() -> f64 {
    DEFAULT_TAIL_TOLERANCE
}

fn default_bsm_transmissivity() -> f64 {
    0.5
}

fn default_detectors() -> DetectorBank {
    DetectorBank::ideal()
}

/// Full apparatus description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_n_max")]
    pub n_max: u32,
    #[serde(default = "default_tail_tolerance")]
    pub tail_tolerance: f64,
    /// true: event-ready protocol via entanglement swapping;
    /// false: conventional protocol, source 2 connected straight to the
    /// A analyzer.
    pub swap_enabled: bool,
    /// Variable loss added to the channel, in dB.
    #[serde(default)]
    pub channel_loss_db: f64,
    /// Band-pass filtering loss on the same path, in dB.
    #[serde(default)]
    pub bp_filter_loss_db: f64,
    /// Optics and coupling loss of the BSM gate, in dB.
    #[serde(default)]
    pub bsm_loss_db: f64,
    #[serde(default = "default_bsm_transmissivity")]
    pub bsm_transmissivity_h: f64,
    #[serde(default = "default_bsm_transmissivity")]
    pub bsm_transmissivity_v: f64,
    /// Source feeding the A analyzer and one BSM input (swap mode only).
    pub source1: SourceConfig,
    /// Source feeding Bob and the lossy channel.
    pub source2: SourceConfig,
    #[serde(default = "default_detectors")]
    pub detectors: DetectorBank,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
}

impl ExperimentConfig {
    /// Ideal components at the given squeezing for both sources.
    pub fn ideal(swap_enabled: bool, squeezing: f64) -> Self {
        ExperimentConfig {
            n_max: 6,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            swap_enabled,
            channel_loss_db: 0.0,
            bp_filter_loss_db: 0.0,
            bsm_loss_db: 0.0,
            bsm_transmissivity_h: 0.5,
            bsm_transmissivity_v: 0.5,
            source1: SourceConfig::ideal(squeezing),
            source2: SourceConfig::ideal(squeezing),
            detectors: DetectorBank::ideal(),
            rng_seed: None,
        }
    }

    /// Heralded configuration with the independently measured apparatus
    /// parameters: source singlet fidelities 0.972 / 0.982, interference
    /// overlaps 0.99 (H) and 0.90 (V) on the channel photon, 3.5 dB
    /// band-pass and 1.7 dB gate loss, 50% efficiency on the A arm and 25%
    /// elsewhere.
    ///
    /// Squeezing amplitudes are free parameters of the model (the pump-power
    /// to squeezing map is not part of it). Both double-pair channels must
    /// stay small for a steering run to survive the full loss range at fixed
    /// squeezing: source-2 doubles fake the herald with no photon on the A
    /// side (fraction ∝ ξ₂²T/ξ₁², worst at low loss), source-1 doubles fire
    /// the BSM without any swapped photon (fraction ∝ ξ₁²/T, worst at high
    /// loss). These defaults hold both below ~2% everywhere up to 20 dB of
    /// total channel loss.
    pub fn calibrated_heralded() -> Self {
        let mut cfg = ExperimentConfig::ideal(true, 0.0);
        cfg.source1 = SourceConfig {
            squeezing: 0.006,
            singlet_fidelity: 0.972,
            overlap_h: 1.0,
            overlap_v: 1.0,
            pump_power_mw: None,
        };
        cfg.source2 = SourceConfig {
            squeezing: 0.001,
            singlet_fidelity: 0.982,
            overlap_h: 0.99,
            overlap_v: 0.90,
            pump_power_mw: None,
        };
        cfg.bp_filter_loss_db = 3.5;
        cfg.bsm_loss_db = 1.7;
        cfg.detectors = DetectorBank::with_efficiencies(0.5, 0.25, 0.25).unwrap();
        cfg
    }

    /// Conventional configuration with the measured source-2 fidelity and
    /// ideal detection.
    pub fn calibrated_conventional() -> Self {
        let mut cfg = ExperimentConfig::ideal(false, 0.0);
        cfg.source1 = SourceConfig {
            squeezing: 0.0,
            singlet_fidelity: 0.972,
            overlap_h: 1.0,
            overlap_v: 1.0,
            pump_power_mw: None,
        };
        cfg.source2 = SourceConfig {
            squeezing: 0.032,
            singlet_fidelity: 0.982,
            overlap_h: 1.0,
            overlap_v: 1.0,
            pump_power_mw: Some(50.0),
        };
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.source1.validate()?;
        self.source2.validate()?;
        if self.n_max < 2 {
            return Err(Error::OutOfRange {
                name: "n_max",
                value: self.n_max as f64,
                range: "≥ 2",
            });
        }
        for (name, db) in [
            ("channel_loss_db", self.channel_loss_db),
            ("bp_filter_loss_db", self.bp_filter_loss_db),
            ("bsm_loss_db", self.bsm_loss_db),
        ] {
            if db < 0.0 || !db.is_finite() {
                return Err(Error::OutOfRange {
                    name,
                    value: db,
                    range: "≥ 0",
                });
            }
        }
        for (name, t) in [
            ("bsm_transmissivity_h", self.bsm_transmissivity_h),
            ("bsm_transmissivity_v", self.bsm_transmissivity_v),
        ] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::OutOfRange {
                    name,
                    value: t,
                    range: "[0, 1]",
                });
            }
        }
        if !self.tail_tolerance.is_finite() || self.tail_tolerance <= 0.0 {
            return Err(Error::OutOfRange {
                name: "tail_tolerance",
                value: self.tail_tolerance,
                range: "> 0",
            });
        }
        Ok(())
    }
}

/// One protocol trial. `alice_outcome` is present exactly when the untrusted
/// side declared a result; `bob_outcome` is present when Bob's analyzer
/// clicked. In swap mode `herald` means both BSM detectors clicked; in
/// conventional mode it is Bob's pair trigger itself.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrialRecord {
    pub setting: usize,
    pub herald: bool,
    pub alice_outcome: Option<i8>,
    pub bob_outcome: Option<i8>,
}

/// Rotation sending the +1 eigenstate of σ·n̂ onto H (and −1 onto V).
pub fn measurement_rotation(direction: &Vector3<f64>) -> TwoModeUnitary {
    let norm = direction.norm();
    if (norm - 1.0).abs() > 1e-6 {
        log::warn!("measurement direction has norm {norm}; normalizing");
    }
    let n = direction / norm;
    let theta = n.z.clamp(-1.0, 1.0).acos();
    let phi = n.y.atan2(n.x);
    let c = (theta / 2.0).cos();
    let s = (theta / 2.0).sin();
    let e_m = Complex64::from_polar(1.0, -phi);
    let e_p = Complex64::from_polar(1.0, phi);
    [
        [Complex64::new(c, 0.0), e_m * s],
        [-e_p * s, Complex64::new(c, 0.0)],
    ]
}

/// Positions of the detector groups inside a click-pattern bitmask.
#[derive(Debug, Clone, Copy)]
struct GroupBits {
    bsm: Option<(usize, usize)>,
    a: (usize, usize),
    b: (usize, usize),
}

/// Joint outcome probabilities of one setting, with analyzer double clicks
/// already split by the fair coin. Cell indices: herald ∈ {0,1},
/// outcome ∈ {0: none, 1: +1, 2: −1}.
#[derive(Debug, Clone)]
pub struct OutcomeTable {
    pub cells: [[[f64; 3]; 3]; 2],
    pub tail_weight: f64,
}

impl OutcomeTable {
    fn zero() -> Self {
        OutcomeTable {
            cells: [[[0.0; 3]; 3]; 2],
            tail_weight: 0.0,
        }
    }

    /// P(herald ∧ Bob clicked).
    pub fn p_valid(&self) -> f64 {
        self.cells[1].iter().map(|row| row[1] + row[2]).sum()
    }

    /// P(herald ∧ Bob clicked ∧ declared).
    pub fn p_declared(&self) -> f64 {
        self.cells[1][1][1] + self.cells[1][1][2] + self.cells[1][2][1] + self.cells[1][2][2]
    }

    /// Raw correlation ⟨A·B⟩ over declared valid trials.
    pub fn raw_correlation(&self) -> Result<f64> {
        let d = self.p_declared();
        if d <= 0.0 {
            return Err(Error::ZeroProbabilityEvent("no declared heralded outcomes"));
        }
        let c = self.cells[1][1][1] + self.cells[1][2][2]
            - self.cells[1][1][2]
            - self.cells[1][2][1];
        Ok(c / d)
    }
}

/// Exact per-setting quantities of the analytic (non-sampled) path.
#[derive(Debug, Clone, Serialize)]
pub struct SettingAnalysis {
    pub correlation: f64,
    pub epsilon: f64,
    pub herald_rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyticSteering {
    pub s_n: f64,
    pub epsilon: f64,
    /// Probability per trial of a valid (heralded, Bob-clicked) event,
    /// averaged over settings.
    pub herald_rate: f64,
    pub per_setting: Vec<SettingAnalysis>,
}

fn build_groups(
    state: &StateEnsemble,
    detectors: &DetectorBank,
    with_bsm: bool,
) -> Result<(Vec<DetectorGroup>, GroupBits)> {
    let layout = state.members[0].1.layout();
    let alice = ArmId::new("alice");
    let bob = ArmId::new("bob");
    let mut groups = Vec::new();
    let mut bits = GroupBits {
        bsm: None,
        a: (0, 0),
        b: (0, 0),
    };
    if with_bsm {
        let m1 = layout.arm_modes(&ArmId::new("bsm1"))?;
        let m2 = layout.arm_modes(&ArmId::new("bsm2"))?;
        bits.bsm = Some((groups.len(), groups.len() + 1));
        groups.push(DetectorGroup {
            name: "bsm_plus".into(),
            modes: m1.to_vec(),
            detector: detectors.bsm_plus,
        });
        groups.push(DetectorGroup {
            name: "bsm_minus".into(),
            modes: m2.to_vec(),
            detector: detectors.bsm_minus,
        });
    }
    let am = layout.arm_modes(&alice)?;
    let bm = layout.arm_modes(&bob)?;
    bits.a = (groups.len(), groups.len() + 1);
    groups.push(DetectorGroup {
        name: "a_plus".into(),
        modes: vec![am[0], am[1]],
        detector: detectors.a_plus,
    });
    groups.push(DetectorGroup {
        name: "a_minus".into(),
        modes: vec![am[2], am[3]],
        detector: detectors.a_minus,
    });
    bits.b = (groups.len(), groups.len() + 1);
    groups.push(DetectorGroup {
        name: "b_plus".into(),
        modes: vec![bm[0], bm[1]],
        detector: detectors.b_plus,
    });
    groups.push(DetectorGroup {
        name: "b_minus".into(),
        modes: vec![bm[2], bm[3]],
        detector: detectors.b_minus,
    });
    Ok((groups, bits))
}

/// A built experiment: the pre-analyzer state ensemble plus bookkeeping.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    state: StateEnsemble,
    alice_arm: ArmId,
    bob_arm: ArmId,
    bits: GroupBits,
    groups: Vec<DetectorGroup>,
}

impl Experiment {
    /// Assembles the configured experiment. Sources are built, one-pair
    /// noise applied, the channel photon's spectral overlap split, losses
    /// applied as dB-composed transmissions, and (in swap mode) the BSM
    /// splitter mixed in. Environment modes stay in the states.
    pub fn build(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let n_max = config.n_max;
        let alice = ArmId::new("alice");
        let bob = ArmId::new("bob");

        let (state, bits_bsm) = if config.swap_enabled {
            let bsm1 = ArmId::new("bsm1");
            let bsm2 = ArmId::new("bsm2");

            let s1 = spdc_state(&config.source1, &alice, &bsm1, n_max)?;
            let ens1 = apply_pair_noise(&s1, &alice, &bsm1, config.source1.singlet_fidelity)?;
            let ens1 = ens1.try_map(|s| {
                let s = split_spectral_mode_pol(s, &bsm1, crate::fock::Polarization::H, config.source1.overlap_h)?;
                split_spectral_mode_pol(&s, &bsm1, crate::fock::Polarization::V, config.source1.overlap_v)
            })?;

            let s2 = spdc_state(&config.source2, &bsm2, &bob, n_max)?;
            let ens2 = apply_pair_noise(&s2, &bsm2, &bob, config.source2.singlet_fidelity)?;
            let ens2 = ens2.try_map(|s| {
                let s = split_spectral_mode_pol(s, &bsm2, crate::fock::Polarization::H, config.source2.overlap_h)?;
                split_spectral_mode_pol(&s, &bsm2, crate::fock::Polarization::V, config.source2.overlap_v)
            })?;

            let joint = ens1.tensor(&ens2)?;
            let total_db =
                config.channel_loss_db + config.bp_filter_loss_db + config.bsm_loss_db;
            let t = db_to_transmission(total_db);
            let joint = joint.try_map(|s| s.apply_loss(&bsm2, t))?;
            let joint = joint.try_map(|s| {
                s.apply_beamsplitter(
                    &bsm1,
                    &bsm2,
                    config.bsm_transmissivity_h,
                    config.bsm_transmissivity_v,
                    0.0,
                )
            })?;
            (joint, true)
        } else {
            // Conventional protocol: source 2 only, its channel arm measured
            // directly by the A analyzer. Filter and gate losses belong to
            // the bypassed swap path.
            let s2 = spdc_state(&config.source2, &alice, &bob, n_max)?;
            let ens = apply_pair_noise(&s2, &alice, &bob, config.source2.singlet_fidelity)?;
            let t = db_to_transmission(config.channel_loss_db);
            let ens = ens.try_map(|s| s.apply_loss(&alice, t))?;
            (ens, false)
        };

        let tail = state.max_tail_weight();
        if tail > config.tail_tolerance {
            log::warn!(
                "truncation tail {tail:.3e} exceeds tolerance {:.1e}; raise n_max",
                config.tail_tolerance
            );
        }

        let (groups, bits) = build_groups(&state, &config.detectors, bits_bsm)?;
        Ok(Experiment {
            config: config.clone(),
            state,
            alice_arm: alice,
            bob_arm: bob,
            bits,
            groups,
        })
    }

    /// Wraps a hand-built two-arm state ensemble (arms `alice` and `bob`) as
    /// a conventional-protocol experiment with the given detectors. Useful
    /// for feeding analytically known states — exact singlets, product
    /// states — through the analyzer and trigger logic.
    pub fn conventional_from_ensemble(
        state: StateEnsemble,
        detectors: DetectorBank,
    ) -> Result<Self> {
        let alice = ArmId::new("alice");
        let bob = ArmId::new("bob");
        let layout = state.members[0].1.layout();
        if !layout.has_arm(&alice) || !layout.has_arm(&bob) {
            return Err(Error::Config(
                "custom ensembles need arms named `alice` and `bob`".into(),
            ));
        }
        let mut config = ExperimentConfig::ideal(false, 0.0);
        config.detectors = detectors;
        config.n_max = state.members[0].1.n_max();
        let (groups, bits) = build_groups(&state, &config.detectors, false)?;
        Ok(Experiment {
            config,
            state,
            alice_arm: alice,
            bob_arm: bob,
            bits,
            groups,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn state(&self) -> &StateEnsemble {
        &self.state
    }

    /// Largest truncation tail across ensemble members.
    pub fn tail_weight(&self) -> f64 {
        self.state.max_tail_weight()
    }

    /// Exact joint click distribution with the analyzers set to the given
    /// Bloch directions (ensemble-averaged).
    pub fn outcome_distribution(
        &self,
        alice_direction: &Vector3<f64>,
        bob_direction: &Vector3<f64>,
    ) -> Result<ClickDistribution> {
        let u_a = measurement_rotation(alice_direction);
        let u_b = measurement_rotation(bob_direction);
        let mut total: Option<ClickDistribution> = None;
        for (w, member) in &self.state.members {
            let rotated = member
                .apply_polarization(&self.alice_arm, &u_a)?
                .apply_polarization(&self.bob_arm, &u_b)?;
            let dist = click_distribution(&rotated, &self.groups)?;
            match &mut total {
                None => {
                    let mut d = ClickDistribution::zero(dist.group_names.clone());
                    d.add_weighted(*w, &dist);
                    total = Some(d);
                }
                Some(d) => d.add_weighted(*w, &dist),
            }
        }
        Ok(total.expect("ensemble has at least one member"))
    }

    /// Collapses a click distribution to the (herald, A, B) outcome table,
    /// resolving analyzer double clicks by a fair coin.
    fn collapse_table(&self, dist: &ClickDistribution) -> OutcomeTable {
        let mut table = OutcomeTable::zero();
        table.tail_weight = dist.tail_weight;
        let (a0, a1) = self.bits.a;
        let (b0, b1) = self.bits.b;
        for (mask, &p) in dist.probabilities.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let bob_click = mask & (1 << b0) != 0 || mask & (1 << b1) != 0;
            let herald = match self.bits.bsm {
                Some((h0, h1)) => mask & (1 << h0) != 0 && mask & (1 << h1) != 0,
                None => bob_click,
            };
            let h = herald as usize;
            // (plus?, minus?) → list of (outcome index, weight)
            let split = |plus: bool, minus: bool| -> [(usize, f64); 2] {
                match (plus, minus) {
                    (false, false) => [(0, 1.0), (0, 0.0)],
                    (true, false) => [(1, 1.0), (1, 0.0)],
                    (false, true) => [(2, 1.0), (2, 0.0)],
                    (true, true) => [(1, 0.5), (2, 0.5)],
                }
            };
            let a_cases = split(mask & (1 << a0) != 0, mask & (1 << a1) != 0);
            let b_cases = split(mask & (1 << b0) != 0, mask & (1 << b1) != 0);
            for (ai, aw) in a_cases {
                if aw == 0.0 {
                    continue;
                }
                for (bi, bw) in b_cases {
                    if bw == 0.0 {
                        continue;
                    }
                    table.cells[h][ai][bi] += p * aw * bw;
                }
            }
        }
        table
    }

    /// Joint outcome table for arbitrary analyzer directions.
    pub fn outcome_table(
        &self,
        alice_direction: &Vector3<f64>,
        bob_direction: &Vector3<f64>,
    ) -> Result<OutcomeTable> {
        let dist = self.outcome_distribution(alice_direction, bob_direction)?;
        Ok(self.collapse_table(&dist))
    }

    /// Outcome table for setting k of a measurement set: the honest untrusted
    /// side measures along u_k, Bob along u_k.
    pub fn setting_table(&self, direction: &Vector3<f64>) -> Result<OutcomeTable> {
        self.outcome_table(direction, direction)
    }

    /// Exact steering parameter, heralding efficiency and herald rate over a
    /// measurement set (no sampling).
    pub fn steering_analysis(&self, settings: &MeasurementSet) -> Result<AnalyticSteering> {
        let mut per_setting = Vec::with_capacity(settings.len());
        for direction in settings.directions() {
            let table = self.setting_table(direction)?;
            let p_valid = table.p_valid();
            if p_valid <= 0.0 {
                return Err(Error::ZeroProbabilityEvent("trigger has zero probability"));
            }
            per_setting.push(SettingAnalysis {
                correlation: -table.raw_correlation()?,
                epsilon: (table.p_declared() / p_valid).min(1.0),
                herald_rate: p_valid,
            });
        }
        let n = settings.len() as f64;
        Ok(AnalyticSteering {
            s_n: per_setting.iter().map(|s| s.correlation).sum::<f64>() / n,
            epsilon: per_setting.iter().map(|s| s.epsilon).sum::<f64>() / n,
            herald_rate: per_setting.iter().map(|s| s.herald_rate).sum::<f64>() / n,
            per_setting,
        })
    }

    /// ε: probability that the A analyzer clicked given the trigger,
    /// averaged uniformly over the measurement directions.
    pub fn heralding_efficiency(&self, settings: &MeasurementSet) -> Result<f64> {
        Ok(self.steering_analysis(settings)?.epsilon)
    }

    /// Fraction of triggers with no photon in the A analyzer arm — the
    /// multi-pair false-herald contamination.
    pub fn false_herald_fraction(&self, settings: &MeasurementSet) -> Result<f64> {
        let mut ideal_a = self.clone();
        ideal_a.config.detectors.a_plus = ThresholdDetector::ideal();
        ideal_a.config.detectors.a_minus = ThresholdDetector::ideal();
        for g in &mut ideal_a.groups {
            if g.name.starts_with("a_") {
                g.detector = ThresholdDetector::ideal();
            }
        }
        let mut empty = 0.0;
        let mut trigger = 0.0;
        for direction in settings.directions() {
            let table = ideal_a.setting_table(direction)?;
            let p_valid = table.p_valid();
            trigger += p_valid;
            empty += p_valid - table.p_declared();
        }
        if trigger <= 0.0 {
            return Err(Error::ZeroProbabilityEvent("trigger has zero probability"));
        }
        Ok(empty / trigger)
    }

    /// Samples raw protocol trials. Deterministic for a given seed: each
    /// trial draws a uniform setting then one outcome cell from the exact
    /// distribution of that setting.
    pub fn sample_trials(
        &self,
        settings: &MeasurementSet,
        n_trials: u64,
        seed: u64,
    ) -> Result<Vec<TrialRecord>> {
        self.sample_impl(settings, n_trials, seed, false)
    }

    /// Samples trials conditioned on the trigger (heralded, Bob clicked) —
    /// the practical mode at high loss where raw trigger rates are tiny.
    /// Declared fractions remain unbiased estimates of ε.
    pub fn sample_conditional_trials(
        &self,
        settings: &MeasurementSet,
        n_trials: u64,
        seed: u64,
    ) -> Result<Vec<TrialRecord>> {
        self.sample_impl(settings, n_trials, seed, true)
    }

    fn sample_impl(
        &self,
        settings: &MeasurementSet,
        n_trials: u64,
        seed: u64,
        conditional: bool,
    ) -> Result<Vec<TrialRecord>> {
        if n_trials == 0 {
            return Err(Error::OutOfRange {
                name: "n_trials",
                value: 0.0,
                range: "≥ 1",
            });
        }
        struct CellSampler {
            dist: WeightedIndex<f64>,
            cells: Vec<(bool, Option<i8>, Option<i8>)>,
        }
        let outcome_of = |i: usize| -> Option<i8> {
            match i {
                1 => Some(1),
                2 => Some(-1),
                _ => None,
            }
        };
        let mut samplers = Vec::with_capacity(settings.len());
        for direction in settings.directions() {
            let table = self.setting_table(direction)?;
            let mut cells = Vec::with_capacity(18);
            let mut weights = Vec::with_capacity(18);
            for h in 0..2 {
                for ai in 0..3 {
                    for bi in 0..3 {
                        let mut p = table.cells[h][ai][bi];
                        if conditional && !(h == 1 && bi != 0) {
                            p = 0.0;
                        }
                        if p > 0.0 {
                            cells.push((h == 1, outcome_of(ai), outcome_of(bi)));
                            weights.push(p);
                        }
                    }
                }
            }
            if weights.is_empty() {
                return Err(Error::ZeroProbabilityEvent(
                    "conditional sampling with zero trigger probability",
                ));
            }
            samplers.push(CellSampler {
                dist: WeightedIndex::new(&weights).expect("positive weights"),
                cells,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let setting_dist = rand::distributions::Uniform::new(0, settings.len());
        let mut records = Vec::with_capacity(n_trials as usize);
        for _ in 0..n_trials {
            let k = setting_dist.sample(&mut rng);
            let cell = samplers[k].dist.sample(&mut rng);
            let (herald, a, b) = samplers[k].cells[cell];
            records.push(TrialRecord {
                setting: k,
                herald,
                alice_outcome: a,
                bob_outcome: b,
            });
        }
        Ok(records)
    }

    /// Two-qubit density matrix of the shared polarization state,
    /// conditioned on photon presence: at least one photon in each BSM arm
    /// (swap mode) and exactly one photon in each analyzer arm. Spectral
    /// bins, BSM photons and environment modes are traced out. Basis order:
    /// |HH⟩, |HV⟩, |VH⟩, |VV⟩ (A ⊗ B). Also returns the probability of the
    /// conditioning event.
    pub fn heralded_two_qubit(&self) -> Result<(Matrix4<Complex64>, f64)> {
        let layout = self.state.members[0].1.layout();
        let am = layout.arm_modes(&self.alice_arm)?;
        let bm = layout.arm_modes(&self.bob_arm)?;
        let bsm_modes: Option<([usize; 4], [usize; 4])> = if self.config.swap_enabled {
            Some((
                layout.arm_modes(&ArmId::new("bsm1"))?,
                layout.arm_modes(&ArmId::new("bsm2"))?,
            ))
        } else {
            None
        };

        let mut rho = Matrix4::<Complex64>::zeros();
        let mut kept = 0.0;
        for (w, member) in &self.state.members {
            // key: occupation with analyzer modes zeroed → 4-vector over
            // (A pol ⊗ B pol); spectral bin is part of the key (traced).
            // BTreeMap keeps the accumulation order deterministic.
            let mut blocks: BTreeMap<(OccupationState, usize, usize), [Complex64; 4]> =
                BTreeMap::new();
            for (occ, &amp) in member.amplitudes() {
                let a_count: u32 = am.iter().map(|&m| occ.get(m) as u32).sum();
                let b_count: u32 = bm.iter().map(|&m| occ.get(m) as u32).sum();
                if a_count != 1 || b_count != 1 {
                    continue;
                }
                if let Some((m1, m2)) = &bsm_modes {
                    let c1: u32 = m1.iter().map(|&m| occ.get(m) as u32).sum();
                    let c2: u32 = m2.iter().map(|&m| occ.get(m) as u32).sum();
                    if c1 == 0 || c2 == 0 {
                        continue;
                    }
                }
                let a_slot = am.iter().position(|&m| occ.get(m) == 1).unwrap();
                let b_slot = bm.iter().position(|&m| occ.get(m) == 1).unwrap();
                // slots 0,1 are H (matched, orthogonal); 2,3 are V
                let a_pol = a_slot / 2;
                let b_pol = b_slot / 2;
                let a_bin = a_slot % 2;
                let b_bin = b_slot % 2;
                let mut key_occ = occ.clone();
                for &m in am.iter().chain(bm.iter()) {
                    key_occ.0[m] = 0;
                }
                let entry = blocks
                    .entry((key_occ, a_bin, b_bin))
                    .or_insert([Complex64::new(0.0, 0.0); 4]);
                entry[a_pol * 2 + b_pol] += amp;
            }
            for vec4 in blocks.values() {
                for r in 0..4 {
                    for c in 0..4 {
                        rho[(r, c)] += Complex64::new(*w, 0.0) * vec4[r] * vec4[c].conj();
                    }
                }
                kept += w * vec4.iter().map(|a| a.norm_sqr()).sum::<f64>();
            }
        }
        if kept <= 0.0 {
            return Err(Error::ZeroProbabilityEvent("heralded two-qubit subspace is empty"));
        }
        let scale = Complex64::new(1.0 / kept, 0.0);
        Ok((rho * scale, kept))
    }
}
