//! Steering verification: measurement sets, the steering parameter, bounds,
//! violation significance, and the space-time ordering checker.

pub mod bounds;
pub mod timing;

use nalgebra::Vector3;
use serde::Serialize;

use crate::circuit::TrialRecord;
use crate::error::{Error, Result};

pub use bounds::{
    deterministic_bound, infinite_settings_bound_approx, loss_bound, subset_max_norms,
    BoundEstimate, SteeringBoundCurve,
};
pub use timing::{check_spacetime_ordering, symmetric_scenario, Event, EventGeometry, TimingReport};

/// A predetermined set of n Bloch measurement directions.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    directions: Vec<Vector3<f64>>,
}

impl MeasurementSet {
    /// Directions must be unit vectors (to 1e-12) and pairwise distinct.
    pub fn new(directions: Vec<Vector3<f64>>) -> Result<Self> {
        for u in &directions {
            if (u.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::BadDirection(u.norm()));
            }
        }
        for (i, u) in directions.iter().enumerate() {
            for v in directions.iter().skip(i + 1) {
                if (u - v).norm() < 1e-9 {
                    return Err(Error::Config(format!(
                        "measurement directions {i} and a later one coincide"
                    )));
                }
            }
        }
        Ok(MeasurementSet { directions })
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Vector3<f64>] {
        &self.directions
    }

    /// Deterministic golden-angle spiral covering the sphere, used for dense
    /// approximations of the many-settings limit.
    pub fn sphere_spiral(n: usize) -> Result<Self> {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let dirs = (0..n)
            .map(|k| {
                let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * k as f64;
                let v = Vector3::new(r * phi.cos(), r * phi.sin(), z);
                v / v.norm()
            })
            .collect();
        MeasurementSet::new(dirs)
    }
}

/// Measurement directions in a fixed documented orientation:
///
/// - n = 2: the orthogonal pair ẑ, x̂;
/// - n = 3: the octahedron axes x̂, ŷ, ẑ;
/// - n = 4: the cube diagonals (±1, ±1, 1)/√3;
/// - n = 6: the icosahedron vertex axes (pairwise |u·v| = 1/√5), built from
///   vertices (0, ±1, ±φ) and cyclic permutations, φ the golden ratio;
/// - n = 10: the dodecahedron vertex axes;
/// - n = 16: the composite of the n = 6 and n = 10 sets.
pub fn platonic_settings(n: usize) -> Result<MeasurementSet> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let icosa = || -> Vec<Vector3<f64>> {
        vec![
            Vector3::new(0.0, 1.0, phi),
            Vector3::new(0.0, 1.0, -phi),
            Vector3::new(1.0, phi, 0.0),
            Vector3::new(1.0, -phi, 0.0),
            Vector3::new(phi, 0.0, 1.0),
            Vector3::new(-phi, 0.0, 1.0),
        ]
        .into_iter()
        .map(|v| v / v.norm())
        .collect()
    };
    let dodeca = || -> Vec<Vector3<f64>> {
        let inv = 1.0 / phi;
        vec![
            Vector3::new(1.0, 1.0, 1.0),
            Vector3::new(1.0, 1.0, -1.0),
            Vector3::new(1.0, -1.0, 1.0),
            Vector3::new(1.0, -1.0, -1.0),
            Vector3::new(0.0, inv, phi),
            Vector3::new(0.0, inv, -phi),
            Vector3::new(inv, phi, 0.0),
            Vector3::new(inv, -phi, 0.0),
            Vector3::new(phi, 0.0, inv),
            Vector3::new(-phi, 0.0, inv),
        ]
        .into_iter()
        .map(|v| v / v.norm())
        .collect()
    };
    let dirs = match n {
        2 => vec![Vector3::new(0.0, 0.0, 1.0), Vector3::new(1.0, 0.0, 0.0)],
        3 => vec![
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.0, 0.0, 1.0),
        ],
        4 => vec![
            Vector3::new(1.0, 1.0, 1.0),
            Vector3::new(1.0, 1.0, -1.0),
            Vector3::new(1.0, -1.0, 1.0),
            Vector3::new(1.0, -1.0, -1.0),
        ]
        .into_iter()
        .map(|v| v / v.norm())
        .collect(),
        6 => icosa(),
        10 => dodeca(),
        16 => icosa().into_iter().chain(dodeca()).collect(),
        other => return Err(Error::UnsupportedSettingCount(other)),
    };
    MeasurementSet::new(dirs)
}

/// Outcome of a steering run.
#[derive(Debug, Clone, Serialize)]
pub struct SteeringResult {
    pub s_n: f64,
    pub sigma_s: f64,
    pub epsilon: f64,
    pub sigma_epsilon: f64,
    /// The bound C_n(ε) evaluated at the measured ε.
    pub bound: f64,
    pub violation_sds: f64,
}

/// Steering parameter S_n and its standard error from trial records,
/// restricted to heralded trials where both sides produced an outcome.
///
/// Sign convention: for the singlet the correlation of interest is the
/// anticorrelation, so each product A_k·B_k enters with a factor −1 and a
/// perfect singlet gives S_n = +1.
pub fn steering_parameter(records: &[TrialRecord], n_settings: usize) -> Result<(f64, f64)> {
    let mut sums = vec![0.0_f64; n_settings];
    let mut counts = vec![0u64; n_settings];
    for r in records {
        if !r.herald {
            continue;
        }
        if let (Some(a), Some(b)) = (r.alice_outcome, r.bob_outcome) {
            sums[r.setting] += -(a as f64) * (b as f64);
            counts[r.setting] += 1;
        }
    }
    let mut s = 0.0;
    let mut var = 0.0;
    for k in 0..n_settings {
        if counts[k] == 0 {
            return Err(Error::EmptySettingBucket(k));
        }
        let nk = counts[k] as f64;
        let ck = sums[k] / nk;
        // A·B is ±1: binomial error on the per-setting correlation.
        let p = ((1.0 + ck) / 2.0).clamp(0.0, 1.0);
        let sigma_ck = 2.0 * (p * (1.0 - p) / nk).sqrt();
        s += ck;
        var += sigma_ck * sigma_ck;
    }
    let n = n_settings as f64;
    Ok((s / n, var.sqrt() / n))
}

/// Heralding efficiency estimate from records: declared fraction of the
/// trials where the herald fired and Bob registered an outcome.
pub fn heralding_estimate(records: &[TrialRecord]) -> Result<(f64, f64)> {
    let mut valid = 0u64;
    let mut declared = 0u64;
    for r in records {
        if r.herald && r.bob_outcome.is_some() {
            valid += 1;
            if r.alice_outcome.is_some() {
                declared += 1;
            }
        }
    }
    if valid == 0 {
        return Err(Error::ZeroProbabilityEvent("no heralded trials with a Bob outcome"));
    }
    let eps = declared as f64 / valid as f64;
    let sigma = (eps * (1.0 - eps) / valid as f64).sqrt();
    Ok((eps, sigma))
}

/// Builds a [`SteeringResult`] from records against a bound curve.
pub fn evaluate_steering(
    records: &[TrialRecord],
    n_settings: usize,
    curve: &SteeringBoundCurve,
) -> Result<SteeringResult> {
    let (s_n, sigma_s) = steering_parameter(records, n_settings)?;
    let (epsilon, sigma_epsilon) = heralding_estimate(records)?;
    let bound = curve.value_at(epsilon)?;
    let mut result = SteeringResult {
        s_n,
        sigma_s,
        epsilon,
        sigma_epsilon,
        bound,
        violation_sds: 0.0,
    };
    result.violation_sds = violation_significance(&result);
    Ok(result)
}

/// Number of standard deviations by which the result violates its bound:
/// (S_n − C_n(ε)) / σ_S.
///
/// The declared fraction ε is a counted quantity of the run, not an estimate
/// of a latent parameter: the bound constrains the correlations *given* the
/// observed declaration fraction, so its uncertainty does not enter the
/// violation statistic. σ_ε is still reported for run-to-run comparisons.
pub fn violation_significance(result: &SteeringResult) -> f64 {
    (result.s_n - result.bound) / result.sigma_s
}
