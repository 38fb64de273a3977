use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::state::PhotonicState;

/// Threshold (click / no-click) detector. A group of modes watched by one
/// detector containing n photons clicks with probability
/// 1 − (1 − p_d)(1 − η)^n; dark counts fire as an independent Bernoulli per
/// trial window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdDetector {
    pub efficiency: f64,
    pub dark_count: f64,
}

impl ThresholdDetector {
    pub fn new(efficiency: f64, dark_count: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(Error::OutOfRange {
                name: "efficiency",
                value: efficiency,
                range: "[0, 1]",
            });
        }
        if !(0.0..=1.0).contains(&dark_count) {
            return Err(Error::OutOfRange {
                name: "dark_count",
                value: dark_count,
                range: "[0, 1]",
            });
        }
        Ok(ThresholdDetector {
            efficiency,
            dark_count,
        })
    }

    pub fn ideal() -> Self {
        ThresholdDetector {
            efficiency: 1.0,
            dark_count: 0.0,
        }
    }

    pub fn click_probability(&self, photons: u32) -> f64 {
        1.0 - (1.0 - self.dark_count) * (1.0 - self.efficiency).powi(photons as i32)
    }
}

/// One detector watching a set of mode positions.
#[derive(Debug, Clone)]
pub struct DetectorGroup {
    pub name: String,
    pub modes: Vec<usize>,
    pub detector: ThresholdDetector,
}

/// Exact joint distribution over click patterns. Bit `g` of a pattern index
/// is set when group `g` clicked. Probabilities sum to 1 − `tail_weight`.
#[derive(Debug, Clone)]
pub struct ClickDistribution {
    pub group_names: Vec<String>,
    pub probabilities: Vec<f64>,
    pub tail_weight: f64,
}

impl ClickDistribution {
    pub fn zero(group_names: Vec<String>) -> Self {
        let n = group_names.len();
        ClickDistribution {
            group_names,
            probabilities: vec![0.0; 1 << n],
            tail_weight: 0.0,
        }
    }

    pub fn n_groups(&self) -> usize {
        self.group_names.len()
    }

    /// Sum of pattern probabilities selected by a predicate on the pattern
    /// bitmask.
    pub fn prob_where(&self, pred: impl Fn(usize) -> bool) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(mask, _)| pred(*mask))
            .map(|(_, p)| p)
            .sum()
    }

    /// Accumulates `weight` times another distribution (ensemble mixing).
    pub fn add_weighted(&mut self, weight: f64, other: &ClickDistribution) {
        assert_eq!(self.probabilities.len(), other.probabilities.len());
        for (p, q) in self.probabilities.iter_mut().zip(&other.probabilities) {
            *p += weight * q;
        }
        self.tail_weight += weight * other.tail_weight;
    }
}

/// Computes the exact joint click distribution of `groups` on `state`.
///
/// The groups must be disjoint and together cover every non-environment mode;
/// environment modes are summed over implicitly (detection is diagonal in the
/// occupation basis, so their amplitudes only contribute probability weight).
pub fn click_distribution(state: &PhotonicState, groups: &[DetectorGroup]) -> Result<ClickDistribution> {
    let mut seen = vec![false; state.layout().len()];
    for g in groups {
        for &m in &g.modes {
            if m >= seen.len() {
                return Err(Error::BadDetectorGroups(format!(
                    "group `{}` references mode {} outside the layout",
                    g.name, m
                )));
            }
            if state.layout().labels()[m].is_env() {
                return Err(Error::BadDetectorGroups(format!(
                    "group `{}` watches environment mode {}",
                    g.name, m
                )));
            }
            if seen[m] {
                return Err(Error::BadDetectorGroups(format!(
                    "mode {m} is watched by more than one group"
                )));
            }
            seen[m] = true;
        }
    }
    for (m, label) in state.layout().labels().iter().enumerate() {
        if !label.is_env() && !seen[m] {
            return Err(Error::BadDetectorGroups(format!(
                "non-environment mode {m} ({label}) is not watched by any group"
            )));
        }
    }

    let n = groups.len();
    let mut dist = ClickDistribution::zero(groups.iter().map(|g| g.name.clone()).collect());
    let mut cond = vec![0.0_f64; n];
    for (occ, amp) in state.amplitudes() {
        let weight = amp.norm_sqr();
        if weight == 0.0 {
            continue;
        }
        for (g, group) in groups.iter().enumerate() {
            let photons: u32 = group.modes.iter().map(|&m| occ.get(m) as u32).sum();
            cond[g] = group.detector.click_probability(photons);
        }
        for mask in 0..(1usize << n) {
            let mut p = weight;
            for (g, &pc) in cond.iter().enumerate() {
                p *= if mask & (1 << g) != 0 { pc } else { 1.0 - pc };
                if p == 0.0 {
                    break;
                }
            }
            dist.probabilities[mask] += p;
        }
    }
    dist.tail_weight = state.tail_weight();
    Ok(dist)
}
