use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Photon polarization. `H` doubles as the +1 eigenstate of σ_z on the
/// polarization qubit (|H⟩ = |0⟩).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

/// Binary spectral label. Photons in the `Matched` bin overlap perfectly with
/// the reference spectral mode; `Orthogonal` photons are fully distinguishable
/// from it. A single amplitude-squared overlap V between the two bins is what
/// a Hong-Ou-Mandel visibility measurement actually calibrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpectralBin {
    Matched,
    Orthogonal,
}

/// Identifier of a spatial arm (a fiber/beam path).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArmId(pub String);

impl ArmId {
    pub fn new(name: impl Into<String>) -> Self {
        ArmId(name.into())
    }
}

impl fmt::Display for ArmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<&str> for ArmId {
    fn from(s: &str) -> Self {
        ArmId(s.to_owned())
    }
}

/// One bosonic mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModeLabel {
    /// A physical optical mode: (spatial arm, polarization, spectral bin).
    Optical {
        arm: ArmId,
        pol: Polarization,
        bin: SpectralBin,
    },
    /// An environment mode appended by a loss channel. Never detected;
    /// summed over when probabilities are extracted.
    Env(u32),
}

impl ModeLabel {
    pub fn is_env(&self) -> bool {
        matches!(self, ModeLabel::Env(_))
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeLabel::Optical { arm, pol, bin } => {
                let p = match pol {
                    Polarization::H => "H",
                    Polarization::V => "V",
                };
                let b = match bin {
                    SpectralBin::Matched => "m",
                    SpectralBin::Orthogonal => "o",
                };
                write!(f, "{arm}:{p}:{b}")
            }
            ModeLabel::Env(k) => write!(f, "env{k}"),
        }
    }
}

/// Ordered set of modes. Every spatial arm carries the four modes
/// (H, V) × (Matched, Orthogonal), so the matched/orthogonal pair always
/// exists together for each (arm, polarization).
#[derive(Debug, Clone, PartialEq)]
pub struct ModeLayout {
    modes: Vec<ModeLabel>,
    index: HashMap<ModeLabel, usize>,
    env_counter: u32,
}

impl ModeLayout {
    pub fn empty() -> Self {
        ModeLayout {
            modes: Vec::new(),
            index: HashMap::new(),
            env_counter: 0,
        }
    }

    /// Layout with the four (pol × bin) modes of each listed arm, in order.
    pub fn for_arms<I, A>(arms: I) -> Self
    where
        I: IntoIterator<Item = A>,
        A: Into<ArmId>,
    {
        let mut layout = ModeLayout::empty();
        for arm in arms {
            layout.push_arm(arm.into());
        }
        layout
    }

    fn push(&mut self, label: ModeLabel) {
        debug_assert!(!self.index.contains_key(&label), "duplicate mode label");
        self.index.insert(label.clone(), self.modes.len());
        self.modes.push(label);
    }

    pub fn push_arm(&mut self, arm: ArmId) {
        use Polarization::*;
        use SpectralBin::*;
        for (pol, bin) in [(H, Matched), (H, Orthogonal), (V, Matched), (V, Orthogonal)] {
            self.push(ModeLabel::Optical {
                arm: arm.clone(),
                pol,
                bin,
            });
        }
    }

    /// Appends a fresh environment mode, returning its position.
    pub fn push_env(&mut self) -> usize {
        let label = ModeLabel::Env(self.env_counter);
        self.env_counter += 1;
        self.push(label);
        self.modes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.modes
    }

    pub fn position(&self, label: &ModeLabel) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn optical_index(&self, arm: &ArmId, pol: Polarization, bin: SpectralBin) -> Option<usize> {
        self.position(&ModeLabel::Optical {
            arm: arm.clone(),
            pol,
            bin,
        })
    }

    pub fn has_arm(&self, arm: &ArmId) -> bool {
        self.modes.iter().any(
            |m| matches!(m, ModeLabel::Optical { arm: a, .. } if a == arm),
        )
    }

    /// Positions of the four modes of `arm`, grouped as
    /// [(H,m), (H,o), (V,m), (V,o)].
    pub fn arm_modes(&self, arm: &ArmId) -> Result<[usize; 4]> {
        use Polarization::*;
        use SpectralBin::*;
        let get = |pol, bin| {
            self.optical_index(arm, pol, bin)
                .ok_or_else(|| Error::UnknownArm(arm.0.clone()))
        };
        Ok([
            get(H, Matched)?,
            get(H, Orthogonal)?,
            get(V, Matched)?,
            get(V, Orthogonal)?,
        ])
    }

    /// Positions of all non-environment modes.
    pub fn optical_positions(&self) -> Vec<usize> {
        self.modes
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_env())
            .map(|(i, _)| i)
            .collect()
    }

    /// Concatenation of two disjoint layouts. Errors if any arm appears in
    /// both.
    pub fn join(&self, other: &ModeLayout) -> Result<ModeLayout> {
        for label in &other.modes {
            if let ModeLabel::Optical { arm, .. } = label {
                if self.has_arm(arm) {
                    return Err(Error::LayoutCollision(arm.0.clone()));
                }
            }
        }
        let mut joined = ModeLayout::empty();
        for label in self.modes.iter().chain(other.modes.iter()) {
            match label {
                ModeLabel::Env(_) => {
                    joined.push_env();
                }
                other => joined.push(other.clone()),
            }
        }
        Ok(joined)
    }
}
