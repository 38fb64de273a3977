//! Shared test oracles, kept independent of the library's implementation
//! paths they check.

#![allow(dead_code)]

use std::collections::HashMap;

use num_complex::Complex64;
use steersim::steering::MeasurementSet;

// ---------------------------------------------------------------------------
// Fractional-LP oracle for the loss-dependent steering bound.
//
// A deterministic cheating strategy declares a subset K of the n settings
// with signs A_k and holds the best-aligned qubit, worth v = ‖Σ_{k∈K} A_k u_k‖
// declared-correlation units. The bound at declared fraction ε is the LP
//
//     max Σ p_s v_s / (nε)   s.t.   Σ p_s = 1,  Σ p_s |K_s| = nε,  p ≥ 0
//
// whose optimum sits on a support of at most two strategies (two equality
// constraints), so enumerating singles and pairs over all 3^n strategies is
// an exact solver.
// ---------------------------------------------------------------------------

pub fn lp_bound_oracle(set: &MeasurementSet, epsilon: f64) -> f64 {
    let n = set.len();
    assert!(n <= 16, "strategy enumeration is 3^n");
    assert!(epsilon > 0.0 && epsilon <= 1.0);
    let dirs = set.directions();

    // (declared count, correlation value) per deterministic strategy
    let mut strategies: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    for mask in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|k| mask & (1 << k) != 0).collect();
        let j = members.len() as f64;
        // enumerate sign patterns as submasks of `mask`
        let mut signs = mask;
        loop {
            let mut sum = nalgebra::Vector3::zeros();
            for &k in &members {
                if signs & (1 << k) != 0 {
                    sum -= dirs[k];
                } else {
                    sum += dirs[k];
                }
            }
            strategies.push((j, sum.norm()));
            if signs == 0 {
                break;
            }
            signs = (signs - 1) & mask;
        }
    }

    let x = n as f64 * epsilon;
    let mut best = f64::NEG_INFINITY;
    for (i, &(ji, vi)) in strategies.iter().enumerate() {
        if (ji - x).abs() < 1e-12 && vi > best {
            best = vi;
        }
        for &(jj, vj) in strategies.iter().skip(i + 1) {
            let (lo, hi, vlo, vhi) = if ji < jj {
                (ji, jj, vi, vj)
            } else {
                (jj, ji, vj, vi)
            };
            if lo <= x && x <= hi && hi > lo {
                let p = (hi - x) / (hi - lo);
                let value = p * vlo + (1.0 - p) * vhi;
                if value > best {
                    best = value;
                }
            }
        }
    }
    best / x
}

// ---------------------------------------------------------------------------
// Independent dense simulator for heralding probabilities.
//
// Written against the closed-form emission amplitudes, with loss handled as
// a classical mixture over per-mode survival patterns (no environment
// modes) and its own beam-splitter expansion. Covers ideal-fidelity sources
// with arbitrary squeezing, per-polarization spectral overlap on the channel
// photon, channel loss and per-arm detector efficiencies.
// ---------------------------------------------------------------------------

/// Dense mode order:
/// 0 alice-H, 1 alice-V, 2..6 bsm1 (Hm, Ho, Vm, Vo), 6..10 bsm2 (Hm, Ho, Vm, Vo),
/// 10 bob-H, 11 bob-V.
const N_MODES: usize = 12;
const ALICE: [usize; 2] = [0, 1];
const BSM1: [usize; 4] = [2, 3, 4, 5];
const BSM2: [usize; 4] = [6, 7, 8, 9];
const BOB: [usize; 2] = [10, 11];

pub struct DenseOracleConfig {
    pub xi1: f64,
    pub xi2: f64,
    pub overlap_h: f64,
    pub overlap_v: f64,
    pub total_loss_db: f64,
    pub bsm_transmissivity_h: f64,
    pub bsm_transmissivity_v: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    pub eta_bsm: f64,
    pub n_max: u32,
}

type Dense = HashMap<Vec<u8>, Complex64>;

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn choose(n: u32, k: u32) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Joint emission of both ideal sources, truncated at `n_max` total photons,
/// with the channel photon of source 2 split over the (matched, orthogonal)
/// bins by the overlap amplitudes. Built directly from the closed-form
/// double series.
fn joint_emission(cfg: &DenseOracleConfig) -> Dense {
    let pairs_max = cfg.n_max / 2;
    let mut state = Dense::new();
    let norm1 = 1.0 - cfg.xi1 * cfg.xi1;
    let norm2 = 1.0 - cfg.xi2 * cfg.xi2;
    let vh = cfg.overlap_h.sqrt();
    let wh = (1.0 - cfg.overlap_h).sqrt();
    let vv = cfg.overlap_v.sqrt();
    let wv = (1.0 - cfg.overlap_v).sqrt();
    // source 1: |j1⟩_aliceH |m1⟩_aliceV |m1⟩_bsm1H |j1⟩_bsm1V
    for j1 in 0..=pairs_max {
        for m1 in 0..=(pairs_max - j1) {
            let a1 = norm1
                * cfg.xi1.powi((j1 + m1) as i32)
                * if m1 % 2 == 0 { 1.0 } else { -1.0 };
            // source 2: |j2⟩_bsm2H |m2⟩_bsm2V |m2⟩_bobH |j2⟩_bobV
            for j2 in 0..=pairs_max {
                for m2 in 0..=(pairs_max - j2) {
                    if j1 + m1 + j2 + m2 > pairs_max {
                        continue;
                    }
                    let a2 = norm2
                        * cfg.xi2.powi((j2 + m2) as i32)
                        * if m2 % 2 == 0 { 1.0 } else { -1.0 };
                    // split the j2 H photons and m2 V photons of the bsm2 arm
                    // over (matched, orthogonal): a†^n → Σ C(n,k)^{1/2}-free
                    // binomial expansion of (v a†_m + w a†_o)^n on number
                    // states: |n⟩ → Σ_k sqrt(C(n,k)) v^k w^{n−k} |k, n−k⟩.
                    for kh in 0..=j2 {
                        for kv in 0..=m2 {
                            let amp = a1
                                * a2
                                * choose(j2, kh).sqrt()
                                * vh.powi(kh as i32)
                                * wh.powi((j2 - kh) as i32)
                                * choose(m2, kv).sqrt()
                                * vv.powi(kv as i32)
                                * wv.powi((m2 - kv) as i32);
                            if amp == 0.0 {
                                continue;
                            }
                            let mut occ = vec![0u8; N_MODES];
                            occ[ALICE[0]] = j1 as u8;
                            occ[ALICE[1]] = m1 as u8;
                            occ[BSM1[0]] = m1 as u8; // bsm1 H matched
                            occ[BSM1[2]] = j1 as u8; // bsm1 V matched
                            occ[BSM2[0]] = kh as u8;
                            occ[BSM2[1]] = (j2 - kh) as u8;
                            occ[BSM2[2]] = kv as u8;
                            occ[BSM2[3]] = (m2 - kv) as u8;
                            occ[BOB[0]] = m2 as u8;
                            occ[BOB[1]] = j2 as u8;
                            *state.entry(occ).or_insert(Complex64::new(0.0, 0.0)) +=
                                Complex64::new(amp, 0.0);
                        }
                    }
                }
            }
        }
    }
    state
}

/// Classical mixture over loss outcomes on the bsm2 modes: each branch keeps
/// a coherent amplitude map, weighted by the per-mode binomial survival
/// amplitudes.
fn apply_loss_branches(state: &Dense, transmission: f64) -> Vec<Dense> {
    let t = transmission.sqrt();
    let r = (1.0 - transmission).sqrt();
    // branch key: photons lost per bsm2 mode
    let mut branches: HashMap<[u8; 4], Dense> = HashMap::new();
    for (occ, &amp) in state {
        let n: [u8; 4] = [occ[BSM2[0]], occ[BSM2[1]], occ[BSM2[2]], occ[BSM2[3]]];
        let mut stack: Vec<([u8; 4], f64, usize)> = vec![([0; 4], 1.0, 0)];
        while let Some((lost, weight, mode)) = stack.pop() {
            if mode == 4 {
                let mut kept_occ = occ.clone();
                for (i, &m) in BSM2.iter().enumerate() {
                    kept_occ[m] = n[i] - lost[i];
                }
                let branch = branches.entry(lost).or_default();
                *branch.entry(kept_occ).or_insert(Complex64::new(0.0, 0.0)) +=
                    amp * Complex64::new(weight, 0.0);
                continue;
            }
            let photons = n[mode] as u32;
            for lose in 0..=photons {
                let keep = photons - lose;
                let w = choose(photons, keep).sqrt()
                    * t.powi(keep as i32)
                    * r.powi(lose as i32);
                if w == 0.0 {
                    continue;
                }
                let mut l = lost;
                l[mode] = lose as u8;
                stack.push((l, weight * w, mode + 1));
            }
        }
    }
    branches.into_values().collect()
}

/// Fresh two-mode mixing; `u` columns are the images of the creation
/// operators.
fn mix_two_modes(state: &Dense, i: usize, j: usize, u: [[Complex64; 2]; 2]) -> Dense {
    let mut out = Dense::new();
    for (occ, &amp) in state {
        let n1 = occ[i] as u32;
        let n2 = occ[j] as u32;
        if n1 + n2 == 0 {
            *out.entry(occ.clone()).or_insert(Complex64::new(0.0, 0.0)) += amp;
            continue;
        }
        let base = amp / Complex64::new((factorial(n1) * factorial(n2)).sqrt(), 0.0);
        for k1 in 0..=n1 {
            for k2 in 0..=n2 {
                let coeff = choose(n1, k1)
                    * choose(n2, k2)
                    * u[0][0].powu(k1)
                    * u[1][0].powu(n1 - k1)
                    * u[0][1].powu(k2)
                    * u[1][1].powu(n2 - k2);
                let p = k1 + k2;
                let q = n1 + n2 - p;
                let term = base * coeff * Complex64::new((factorial(p) * factorial(q)).sqrt(), 0.0);
                if term == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let mut o = occ.clone();
                o[i] = p as u8;
                o[j] = q as u8;
                *out.entry(o).or_insert(Complex64::new(0.0, 0.0)) += term;
            }
        }
    }
    out
}

pub struct DenseHeraldResult {
    /// P(both BSM groups click ∧ Bob clicks)
    pub p_trigger: f64,
    /// P(trigger ∧ A clicks)
    pub p_fourfold: f64,
    pub epsilon: f64,
}

/// Brute-force heralding probabilities for the swap circuit.
pub fn dense_heralding(cfg: &DenseOracleConfig) -> DenseHeraldResult {
    let state = joint_emission(cfg);
    let t = 10f64.powf(-cfg.total_loss_db / 10.0);
    let branches = apply_loss_branches(&state, t);

    let bs = |transmissivity: f64| -> [[Complex64; 2]; 2] {
        let tt = transmissivity.sqrt();
        let rr = (1.0 - transmissivity).sqrt();
        [
            [Complex64::new(tt, 0.0), Complex64::new(0.0, rr)],
            [Complex64::new(0.0, rr), Complex64::new(tt, 0.0)],
        ]
    };

    let mut p_trigger = 0.0;
    let mut p_fourfold = 0.0;
    for branch in branches {
        // BSM splitter per (pol, bin) pair
        let mut s = branch;
        for (m1, m2, trans) in [
            (BSM1[0], BSM2[0], cfg.bsm_transmissivity_h),
            (BSM1[1], BSM2[1], cfg.bsm_transmissivity_h),
            (BSM1[2], BSM2[2], cfg.bsm_transmissivity_v),
            (BSM1[3], BSM2[3], cfg.bsm_transmissivity_v),
        ] {
            s = mix_two_modes(&s, m1, m2, bs(trans));
        }
        for (occ, amp) in s {
            let w = amp.norm_sqr();
            if w == 0.0 {
                continue;
            }
            let count = |modes: &[usize]| modes.iter().map(|&m| occ[m] as u32).sum::<u32>();
            let click = |eta: f64, n: u32| 1.0 - (1.0 - eta).powi(n as i32);
            let p1 = click(cfg.eta_bsm, count(&BSM1));
            let p2 = click(cfg.eta_bsm, count(&BSM2));
            let pb = click(cfg.eta_b, count(&BOB));
            let pa = click(cfg.eta_a, count(&ALICE));
            p_trigger += w * p1 * p2 * pb;
            p_fourfold += w * p1 * p2 * pb * pa;
        }
    }
    DenseHeraldResult {
        p_trigger,
        p_fourfold,
        epsilon: p_fourfold / p_trigger,
    }
}
