use std::collections::BTreeMap;

use num_complex::Complex64;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::fock::layout::{ArmId, ModeLayout, Polarization, SpectralBin};

/// Default cap on the truncated-tail probability an operation may accumulate
/// before diagnostics should flag it.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-4;

/// Photon counts, one entry per mode of the associated [`ModeLayout`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OccupationState(pub SmallVec<[u8; 24]>);

impl OccupationState {
    pub fn zeros(n_modes: usize) -> Self {
        OccupationState(smallvec::smallvec![0; n_modes])
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|&n| n as u32).sum()
    }

    pub fn get(&self, mode: usize) -> u8 {
        self.0[mode]
    }
}

type AmpMap = BTreeMap<OccupationState, Complex64>;

/// A pure multimode photonic state: a sparse superposition of occupation
/// states with a global truncation at `n_max` total photons.
///
/// The squared amplitudes sum to 1 − `tail_weight`, where `tail_weight` is
/// exactly the probability removed by truncation so far. Loss channels keep
/// their environment modes inside the state, so every operation here is an
/// exact (number-preserving) linear-optics transform below the truncation.
#[derive(Debug, Clone)]
pub struct PhotonicState {
    layout: ModeLayout,
    amplitudes: AmpMap,
    n_max: u32,
    tail_weight: f64,
}

fn sqrt_factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product::<f64>().sqrt()
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0_f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// 2×2 complex matrix acting on a pair of modes, column-convention:
/// a†_j → Σ_i u[i][j] a†_i.
pub type TwoModeUnitary = [[Complex64; 2]; 2];

/// Symmetric beam-splitter convention: amplitude transmissivity √T on the
/// diagonal, i√(1−T) on reflection, with an extra phase e^{iφ} applied to the
/// second input mode before the mix.
pub fn beamsplitter_unitary(transmissivity: f64, phase: f64) -> TwoModeUnitary {
    let t = transmissivity.sqrt();
    let r = (1.0 - transmissivity).sqrt();
    let i = Complex64::new(0.0, 1.0);
    let ph = Complex64::from_polar(1.0, phase);
    [
        [Complex64::new(t, 0.0), i * r * ph],
        [i * r, Complex64::new(t, 0.0) * ph],
    ]
}

impl PhotonicState {
    /// Vacuum of the given layout.
    pub fn vacuum(layout: ModeLayout, n_max: u32) -> Self {
        let mut amplitudes = AmpMap::new();
        amplitudes.insert(OccupationState::zeros(layout.len()), Complex64::new(1.0, 0.0));
        PhotonicState {
            layout,
            amplitudes,
            n_max,
            tail_weight: 0.0,
        }
    }

    /// Builds a state from explicit amplitudes. Terms above `n_max` total
    /// photons are rejected; `tail_weight` records probability already known
    /// to live outside the truncation (e.g. the dropped tail of a source
    /// expansion).
    pub fn from_amplitudes(
        layout: ModeLayout,
        terms: impl IntoIterator<Item = (OccupationState, Complex64)>,
        n_max: u32,
        tail_weight: f64,
    ) -> Result<Self> {
        let mut amplitudes = AmpMap::new();
        for (occ, amp) in terms {
            if occ.0.len() != layout.len() {
                return Err(Error::Config(format!(
                    "occupation length {} does not match layout size {}",
                    occ.0.len(),
                    layout.len()
                )));
            }
            if occ.total() > n_max {
                return Err(Error::OutOfRange {
                    name: "total photons",
                    value: occ.total() as f64,
                    range: "≤ n_max",
                });
            }
            if amp != Complex64::new(0.0, 0.0) {
                *amplitudes.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += amp;
            }
        }
        Ok(PhotonicState {
            layout,
            amplitudes,
            n_max,
            tail_weight,
        })
    }

    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn tail_weight(&self) -> f64 {
        self.tail_weight
    }

    pub fn amplitudes(&self) -> impl Iterator<Item = (&OccupationState, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn amplitude(&self, occ: &OccupationState) -> Complex64 {
        self.amplitudes
            .get(occ)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// √(Σ |amplitude|²).
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Applies a 2×2 transform on the creation operators of two modes,
    /// dropping (and accounting) anything pushed above the truncation.
    /// Number-preserving transforms on in-truncation states never drop.
    pub fn apply_two_mode(&self, mode_a: usize, mode_b: usize, u: &TwoModeUnitary) -> Self {
        assert_ne!(mode_a, mode_b, "two-mode transform needs distinct modes");
        let mut out = AmpMap::new();
        let mut dropped = 0.0;
        for (occ, &amp) in &self.amplitudes {
            let n1 = occ.get(mode_a) as u32;
            let n2 = occ.get(mode_b) as u32;
            if n1 + n2 == 0 {
                *out.entry(occ.clone()).or_insert(Complex64::new(0.0, 0.0)) += amp;
                continue;
            }
            let norm_in = sqrt_factorial(n1) * sqrt_factorial(n2);
            // (u00 a† + u10 b†)^{n1} (u01 a† + u11 b†)^{n2}
            for k1 in 0..=n1 {
                for k2 in 0..=n2 {
                    let p = k1 + k2;
                    let q = n1 + n2 - p;
                    let coeff = binomial(n1, k1)
                        * binomial(n2, k2)
                        * (sqrt_factorial(p) * sqrt_factorial(q) / norm_in);
                    let weight = u[0][0].powu(k1)
                        * u[1][0].powu(n1 - k1)
                        * u[0][1].powu(k2)
                        * u[1][1].powu(n2 - k2);
                    let term = amp * weight * coeff;
                    if term == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let mut occ_new = occ.clone();
                    occ_new.0[mode_a] = p as u8;
                    occ_new.0[mode_b] = q as u8;
                    if occ_new.total() > self.n_max {
                        dropped += term.norm_sqr();
                        continue;
                    }
                    *out.entry(occ_new).or_insert(Complex64::new(0.0, 0.0)) += term;
                }
            }
        }
        out.retain(|_, a| a.norm_sqr() > 0.0);
        PhotonicState {
            layout: self.layout.clone(),
            amplitudes: out,
            n_max: self.n_max,
            tail_weight: self.tail_weight + dropped,
        }
    }

    /// Two-arm beam splitter. The transform acts independently on each
    /// (polarization, spectral-bin) sub-mode pair, with possibly different
    /// intensity transmissivity for H and V.
    pub fn apply_beamsplitter(
        &self,
        arm_a: &ArmId,
        arm_b: &ArmId,
        transmissivity_h: f64,
        transmissivity_v: f64,
        phase: f64,
    ) -> Result<Self> {
        for (name, t) in [
            ("transmissivity_h", transmissivity_h),
            ("transmissivity_v", transmissivity_v),
        ] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::OutOfRange {
                    name,
                    value: t,
                    range: "[0, 1]",
                });
            }
        }
        let a = self.layout.arm_modes(arm_a)?;
        let b = self.layout.arm_modes(arm_b)?;
        let u_h = beamsplitter_unitary(transmissivity_h, phase);
        let u_v = beamsplitter_unitary(transmissivity_v, phase);
        // arm_modes orders sub-modes as [(H,m), (H,o), (V,m), (V,o)]
        let mut state = self.clone();
        for (k, u) in [(0, &u_h), (1, &u_h), (2, &u_v), (3, &u_v)] {
            state = state.apply_two_mode(a[k], b[k], u);
        }
        Ok(state)
    }

    /// Pure loss on one arm, realized as a beam splitter of amplitude √T into
    /// a fresh environment mode per sub-mode. The environment modes stay in
    /// the state (exact open-system treatment) and are summed over only when
    /// probabilities are extracted.
    pub fn apply_loss(&self, arm: &ArmId, transmission: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&transmission) {
            return Err(Error::OutOfRange {
                name: "transmission",
                value: transmission,
                range: "[0, 1]",
            });
        }
        let sub_modes = self.layout.arm_modes(arm)?;
        let mut layout = self.layout.clone();
        let env: Vec<usize> = (0..4).map(|_| layout.push_env()).collect();
        let pad = layout.len() - self.layout.len();
        let mut state = PhotonicState {
            layout,
            amplitudes: self
                .amplitudes
                .iter()
                .map(|(occ, &amp)| {
                    let mut o = occ.clone();
                    o.0.extend(std::iter::repeat_n(0, pad));
                    (o, amp)
                })
                .collect(),
            n_max: self.n_max,
            tail_weight: self.tail_weight,
        };
        let u = beamsplitter_unitary(transmission, 0.0);
        for (sys, env) in sub_modes.into_iter().zip(env) {
            state = state.apply_two_mode(sys, env, &u);
        }
        Ok(state)
    }

    /// Applies a 2×2 unitary on the (H, V) polarization pair of an arm,
    /// identically for both spectral bins.
    pub fn apply_polarization(&self, arm: &ArmId, u: &TwoModeUnitary) -> Result<Self> {
        let m = self.layout.arm_modes(arm)?;
        // [(H,m), (H,o), (V,m), (V,o)]: pair H with V per spectral bin
        Ok(self.apply_two_mode(m[0], m[2], u).apply_two_mode(m[1], m[3], u))
    }

    /// Tensor product. Arms must be disjoint; terms whose combined photon
    /// number exceeds `n_max` are dropped into the tail.
    pub fn tensor(&self, other: &PhotonicState) -> Result<Self> {
        let layout = self.layout.join(&other.layout)?;
        let n_max = self.n_max.min(other.n_max);
        let mut amplitudes = AmpMap::new();
        let mut kept = 0.0;
        for (occ_a, &amp_a) in &self.amplitudes {
            for (occ_b, &amp_b) in &other.amplitudes {
                if occ_a.total() + occ_b.total() > n_max {
                    continue;
                }
                let mut occ = occ_a.clone();
                occ.0.extend_from_slice(&occ_b.0);
                let amp = amp_a * amp_b;
                kept += amp.norm_sqr();
                *amplitudes.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += amp;
            }
        }
        Ok(PhotonicState {
            layout,
            amplitudes,
            n_max,
            tail_weight: 1.0 - kept,
        })
    }

    /// Projects onto exact photon counts for a subset of modes. Returns the
    /// renormalized conditional state and the pre-normalization probability.
    pub fn project(&self, pattern: &[(usize, u8)]) -> (PhotonicState, f64) {
        self.project_with(|occ| pattern.iter().all(|&(m, n)| occ.get(m) == n))
    }

    /// Projects onto the subspace selected by a predicate that is diagonal in
    /// the occupation basis.
    pub fn project_with(&self, keep: impl Fn(&OccupationState) -> bool) -> (PhotonicState, f64) {
        let kept: AmpMap = self
            .amplitudes
            .iter()
            .filter(|(occ, _)| keep(occ))
            .map(|(occ, &amp)| (occ.clone(), amp))
            .collect();
        let prob: f64 = kept.values().map(|a| a.norm_sqr()).sum();
        let scale = if prob > 0.0 { 1.0 / prob.sqrt() } else { 0.0 };
        let state = PhotonicState {
            layout: self.layout.clone(),
            amplitudes: kept
                .into_iter()
                .map(|(occ, amp)| (occ, amp * scale))
                .collect(),
            n_max: self.n_max,
            tail_weight: 0.0,
        };
        (state, prob)
    }

    /// Convenience index lookup.
    pub fn mode(&self, arm: &ArmId, pol: Polarization, bin: SpectralBin) -> Result<usize> {
        self.layout
            .optical_index(arm, pol, bin)
            .ok_or_else(|| Error::UnknownArm(arm.0.clone()))
    }
}
