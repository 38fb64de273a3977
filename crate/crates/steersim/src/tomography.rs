//! Two-qubit state tomography: synthetic coincidence counts, Poisson
//! maximum-likelihood reconstruction, fidelity and Monte-Carlo uncertainty.
//!
//! The measurement set is the standard overcomplete 36-element set: each side
//! projects on the six Pauli eigenstates ±x, ±y, ±z. Reconstruction ascends
//! the Poisson log-likelihood with congruence updates ρ ← M ρ M† / tr(·),
//! M built from the likelihood gradient, so every iterate is positive
//! semidefinite by construction — positivity is never restored by projection.
//! Basis order throughout: |HH⟩, |HV⟩, |VH⟩, |VV⟩ with H = |0⟩ = +z.

use nalgebra::{Matrix4, Vector2, Vector4};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// The six single-qubit analysis states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Basis {
    XPlus,
    XMinus,
    YPlus,
    YMinus,
    ZPlus,
    ZMinus,
}

pub const ALL_BASES: [Basis; 6] = [
    Basis::XPlus,
    Basis::XMinus,
    Basis::YPlus,
    Basis::YMinus,
    Basis::ZPlus,
    Basis::ZMinus,
];

impl Basis {
    pub fn ket(&self) -> Vector2<Complex64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = |re, im| Complex64::new(re, im);
        match self {
            Basis::ZPlus => Vector2::new(c(1.0, 0.0), c(0.0, 0.0)),
            Basis::ZMinus => Vector2::new(c(0.0, 0.0), c(1.0, 0.0)),
            Basis::XPlus => Vector2::new(c(s, 0.0), c(s, 0.0)),
            Basis::XMinus => Vector2::new(c(s, 0.0), c(-s, 0.0)),
            Basis::YPlus => Vector2::new(c(s, 0.0), c(0.0, s)),
            Basis::YMinus => Vector2::new(c(s, 0.0), c(0.0, -s)),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Basis::XPlus => "x+",
            Basis::XMinus => "x-",
            Basis::YPlus => "y+",
            Basis::YMinus => "y-",
            Basis::ZPlus => "z+",
            Basis::ZMinus => "z-",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        ALL_BASES
            .iter()
            .copied()
            .find(|b| b.label() == s)
            .ok_or_else(|| Error::Config(format!("unknown basis label `{s}`")))
    }
}

fn projectors() -> &'static [Matrix4<Complex64>; 36] {
    static CELL: OnceLock<[Matrix4<Complex64>; 36]> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut out = [Matrix4::zeros(); 36];
        for (i, a) in ALL_BASES.iter().enumerate() {
            for (j, b) in ALL_BASES.iter().enumerate() {
                let ket = kron2(&a.ket(), &b.ket());
                out[i * 6 + j] = ket * ket.adjoint();
            }
        }
        out
    })
}

fn kron2(a: &Vector2<Complex64>, b: &Vector2<Complex64>) -> Vector4<Complex64> {
    Vector4::new(a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
}

/// |Ψ⁻⟩ = (|HV⟩ − |VH⟩)/√2.
pub fn singlet_ket() -> Vector4<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Vector4::new(
        Complex64::new(0.0, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(0.0, 0.0),
    )
}

/// A reconstructed (or constructed) two-qubit density matrix.
#[derive(Debug, Clone)]
pub struct TwoQubitDensityMatrix {
    matrix: Matrix4<Complex64>,
}

impl TwoQubitDensityMatrix {
    /// Validates hermiticity, unit trace and positive semidefiniteness
    /// (within 1e-10).
    pub fn new(matrix: Matrix4<Complex64>) -> Result<Self> {
        let dm = TwoQubitDensityMatrix { matrix };
        dm.validate()?;
        Ok(dm)
    }

    pub fn from_pure(ket: &Vector4<Complex64>) -> Self {
        let n = ket.norm();
        let ket = ket / Complex64::new(n, 0.0);
        TwoQubitDensityMatrix {
            matrix: ket * ket.adjoint(),
        }
    }

    pub fn maximally_mixed() -> Self {
        TwoQubitDensityMatrix {
            matrix: Matrix4::identity() * Complex64::new(0.25, 0.0),
        }
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.matrix
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.matrix;
        let herm_dev = (m - m.adjoint()).norm();
        if herm_dev > 1e-10 {
            return Err(Error::Config(format!(
                "density matrix not hermitian (deviation {herm_dev:.2e})"
            )));
        }
        let trace = m.trace();
        if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
            return Err(Error::Config(format!("density matrix trace {trace} ≠ 1")));
        }
        let min = self.min_eigenvalue();
        if min < -1e-10 {
            return Err(Error::Config(format!(
                "density matrix has negative eigenvalue {min:.2e}"
            )));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let hermitian = (self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        hermitian
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |acc, &v| acc.min(v))
    }

    /// ⟨ψ|ρ|ψ⟩ for a pure target.
    pub fn fidelity(&self, target: &Vector4<Complex64>) -> f64 {
        let n = target.norm_squared();
        ((target.adjoint() * self.matrix * target)[(0, 0)].re / n).clamp(0.0, 1.0)
    }

    /// Row-major real/imaginary flat arrays, for JSON export.
    pub fn to_flat(&self) -> (Vec<f64>, Vec<f64>) {
        let mut re = Vec::with_capacity(16);
        let mut im = Vec::with_capacity(16);
        for r in 0..4 {
            for c in 0..4 {
                re.push(self.matrix[(r, c)].re);
                im.push(self.matrix[(r, c)].im);
            }
        }
        (re, im)
    }
}

/// Observed coincidence counts for the 36 projector pairs, with optional
/// per-setting acquisition weights (relative integration times).
#[derive(Debug, Clone)]
pub struct TomographyCounts {
    /// counts[i · 6 + j] pairs the i-th basis on side A with the j-th on B,
    /// in [`ALL_BASES`] order.
    pub counts: [u64; 36],
    pub weights: [f64; 36],
}

impl TomographyCounts {
    pub fn new(counts: [u64; 36]) -> Self {
        TomographyCounts {
            counts,
            weights: [1.0; 36],
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Expected coincidence rates: mean_total · w_ab · Tr(ρ Π_a⊗Π_b) / Σ(...).
fn expected_rates(rho: &Matrix4<Complex64>, weights: &[f64; 36]) -> [f64; 36] {
    let proj = projectors();
    let mut rates = [0.0; 36];
    for (i, p) in proj.iter().enumerate() {
        rates[i] = weights[i] * (p * rho).trace().re.max(0.0);
    }
    rates
}

/// Draws Poisson counts from the exact projector expectations of `rho`.
/// `mean_total` is the expected total over all 36 settings.
pub fn synth_counts(
    rho: &TwoQubitDensityMatrix,
    mean_total: f64,
    seed: u64,
) -> Result<TomographyCounts> {
    if !mean_total.is_finite() || mean_total <= 0.0 {
        return Err(Error::OutOfRange {
            name: "mean_total",
            value: mean_total,
            range: "> 0",
        });
    }
    let weights = [1.0; 36];
    let rates = expected_rates(rho.matrix(), &weights);
    let norm: f64 = rates.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0u64; 36];
    for (c, &r) in counts.iter_mut().zip(&rates) {
        let mu = mean_total * r / norm;
        if mu > 0.0 {
            *c = Poisson::new(mu).expect("positive mean").sample(&mut rng) as u64;
        }
    }
    Ok(TomographyCounts::new(counts))
}

/// Result of the likelihood ascent.
#[derive(Debug, Clone)]
pub struct MleReconstruction {
    pub rho: TwoQubitDensityMatrix,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
}

fn log_likelihood(counts: &TomographyCounts, rates: &[f64; 36], scale: f64) -> f64 {
    let mut ll = 0.0;
    for (&n, &r) in counts.counts.iter().zip(rates) {
        let mu = (scale * r).max(1e-300);
        ll += n as f64 * mu.ln() - mu;
    }
    ll
}

/// Maximum-likelihood reconstruction from coincidence counts.
///
/// Iterates ρ ← N[M ρ M†] with M = (1−λ)·1 + λ·R(ρ), where
/// R = Σ (n_ab/μ_ab) w_ab Π_ab is the Poisson gradient operator and λ is
/// halved until the log-likelihood does not decrease (λ = 1 is the plain
/// fixed-point step, small λ the diluted, provably ascending one). The total
/// rate scale is profiled out analytically each iteration. Converges when
/// the relative likelihood change drops below 1e-10, capped at 10⁴
/// iterations; on hitting the cap the best iterate is returned inside a
/// [`Error::NonConvergence`] diagnostic.
pub type MleError = Box<(Error, MleReconstruction)>;

pub fn reconstruct_mle(counts: &TomographyCounts) -> std::result::Result<MleReconstruction, MleError> {
    let total: u64 = counts.total();
    if total == 0 {
        return Err(Box::new((
            Error::Config("tomography needs at least one nonzero count".into()),
            MleReconstruction {
                rho: TwoQubitDensityMatrix::maximally_mixed(),
                iterations: 0,
                converged: false,
                log_likelihood: f64::NEG_INFINITY,
            },
        )));
    }
    let proj = projectors();
    let mut rho = TwoQubitDensityMatrix::maximally_mixed().matrix().to_owned();
    let mut rates = expected_rates(&rho, &counts.weights);
    let mut scale = total as f64 / rates.iter().sum::<f64>();
    let mut ll = log_likelihood(counts, &rates, scale);

    const MAX_ITERS: usize = 10_000;
    const RELATIVE_TOL: f64 = 1e-10;
    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..MAX_ITERS {
        iterations = iter + 1;
        // Gradient operator R = Σ (n/μ) w Π.
        let mut r_op = Matrix4::<Complex64>::zeros();
        for (i, p) in proj.iter().enumerate() {
            let mu = (scale * rates[i]).max(1e-300);
            let coeff = counts.counts[i] as f64 / mu * counts.weights[i] * scale;
            if coeff != 0.0 {
                r_op += p * Complex64::new(coeff, 0.0);
            }
        }

        let mut lambda = 1.0;
        let mut accepted = false;
        let mut new_ll = ll;
        let mut new_rho = rho;
        let mut new_rates = rates;
        let mut new_scale = scale;
        // Backtrack the dilution until the likelihood is non-decreasing.
        for _ in 0..48 {
            let m = Matrix4::identity() * Complex64::new(1.0 - lambda, 0.0)
                + r_op * Complex64::new(lambda / 36.0, 0.0);
            let candidate = m * rho * m.adjoint();
            let trace = candidate.trace().re;
            if trace > 0.0 {
                let candidate = candidate * Complex64::new(1.0 / trace, 0.0);
                let cand_rates = expected_rates(&candidate, &counts.weights);
                let cand_scale = total as f64 / cand_rates.iter().sum::<f64>();
                let cand_ll = log_likelihood(counts, &cand_rates, cand_scale);
                if cand_ll >= ll {
                    new_ll = cand_ll;
                    new_rho = candidate;
                    new_rates = cand_rates;
                    new_scale = cand_scale;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            // λ → 0 reproduces the current iterate; we are at a fixed point.
            converged = true;
            break;
        }
        debug_assert!(new_ll >= ll, "likelihood decreased: {ll} → {new_ll}");
        let change = (new_ll - ll).abs() / ll.abs().max(1.0);
        rho = new_rho;
        rates = new_rates;
        scale = new_scale;
        ll = new_ll;
        if change < RELATIVE_TOL {
            converged = true;
            break;
        }
    }

    // Clean tiny numerical asymmetry before validation.
    let rho = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let trace = rho.trace().re;
    let rho = rho * Complex64::new(1.0 / trace, 0.0);
    let reconstruction = MleReconstruction {
        rho: TwoQubitDensityMatrix { matrix: rho },
        iterations,
        converged,
        log_likelihood: ll,
    };
    if converged {
        Ok(reconstruction)
    } else {
        Err(Box::new((
            Error::NonConvergence {
                iterations,
                last_change: RELATIVE_TOL,
            },
            reconstruction,
        )))
    }
}

/// Monte-Carlo fidelity uncertainty: resamples every observed count from
/// Poisson(observed), reconstructs, and reports the mean and standard
/// deviation of the fidelity against `target`. Resamples run concurrently;
/// resample i uses the documented seed split `seed ⊕ splitmix64(i)`.
pub fn mc_uncertainty(
    counts: &TomographyCounts,
    target: &Vector4<Complex64>,
    n_resamples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n_resamples < 100 {
        return Err(Error::OutOfRange {
            name: "n_resamples",
            value: n_resamples as f64,
            range: "≥ 100",
        });
    }
    let fidelities: Vec<f64> = (0..n_resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ splitmix64(i as u64));
            let mut resampled = [0u64; 36];
            for (r, &n) in resampled.iter_mut().zip(&counts.counts) {
                if n > 0 {
                    *r = Poisson::new(n as f64)
                        .expect("positive mean")
                        .sample(&mut rng) as u64;
                }
            }
            let c = TomographyCounts {
                counts: resampled,
                weights: counts.weights,
            };
            match reconstruct_mle(&c) {
                Ok(rec) => rec.rho.fidelity(target),
                Err(diag) => diag.1.rho.fidelity(target),
            }
        })
        .collect();
    let n = fidelities.len() as f64;
    let mean = fidelities.iter().sum::<f64>() / n;
    let var = fidelities.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn singlet_projector_expectations() {
        let rho = TwoQubitDensityMatrix::from_pure(&singlet_ket());
        let rates = expected_rates(rho.matrix(), &[1.0; 36]);
        let at = |a: Basis, b: Basis| {
            let i = ALL_BASES.iter().position(|x| *x == a).unwrap();
            let j = ALL_BASES.iter().position(|x| *x == b).unwrap();
            rates[i * 6 + j]
        };
        // no same-outcome coincidences in any shared basis
        assert_abs_diff_eq!(at(Basis::ZPlus, Basis::ZPlus), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(at(Basis::XPlus, Basis::XPlus), 0.0, epsilon = 1e-14);
        // anti-aligned settings carry half the singlet weight
        assert_abs_diff_eq!(at(Basis::ZPlus, Basis::ZMinus), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(at(Basis::XPlus, Basis::XMinus), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn synth_counts_of_singlet_have_empty_hh() {
        let rho = TwoQubitDensityMatrix::from_pure(&singlet_ket());
        let counts = synth_counts(&rho, 100_000.0, 11).unwrap();
        let i = ALL_BASES.iter().position(|x| *x == Basis::ZPlus).unwrap();
        assert_eq!(counts.counts[i * 6 + i], 0);
    }

    #[test]
    fn maximally_mixed_gives_flat_expectations() {
        let rho = TwoQubitDensityMatrix::maximally_mixed();
        let rates = expected_rates(rho.matrix(), &[1.0; 36]);
        for &r in &rates {
            assert_abs_diff_eq!(r, 0.25, epsilon = 1e-14);
        }
    }

    #[test]
    fn mle_recovers_the_singlet_at_large_counts() {
        let truth = TwoQubitDensityMatrix::from_pure(&singlet_ket());
        let counts = synth_counts(&truth, 1e6, 3).unwrap();
        let rec = reconstruct_mle(&counts).unwrap();
        assert!(rec.converged);
        let f = rec.rho.fidelity(&singlet_ket());
        assert!(f >= 0.999, "fidelity {f}");
    }

    #[test]
    fn flat_counts_reconstruct_the_maximally_mixed_state() {
        let counts = TomographyCounts::new([1000; 36]);
        let rec = reconstruct_mle(&counts).unwrap();
        let dev = (rec.rho.matrix() - TwoQubitDensityMatrix::maximally_mixed().matrix()).norm();
        assert!(dev < 1e-3, "deviation {dev}");
    }

    #[test]
    fn product_state_reconstructs_rank_one() {
        let hh = Vector4::new(
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        );
        let truth = TwoQubitDensityMatrix::from_pure(&hh);
        let counts = synth_counts(&truth, 1e6, 5).unwrap();
        let rec = reconstruct_mle(&counts).unwrap();
        assert!(rec.rho.fidelity(&hh) >= 0.999);
        let eigs = rec.rho.matrix().symmetric_eigen().eigenvalues;
        let second = {
            let mut v: Vec<f64> = eigs.iter().copied().collect();
            v.sort_by(|a, b| b.total_cmp(a));
            v[1]
        };
        assert!(second < 1e-3, "second eigenvalue {second}");
    }

    #[test]
    fn mle_output_satisfies_density_matrix_invariants_on_noise() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..5 {
            let mut counts = [0u64; 36];
            for c in counts.iter_mut() {
                *c = rng.gen_range(0..200);
            }
            if counts.iter().all(|&c| c == 0) {
                counts[0] = 1;
            }
            let rec = match reconstruct_mle(&TomographyCounts::new(counts)) {
                Ok(r) => r,
                Err(diag) => diag.1,
            };
            rec.rho.validate().unwrap();
        }
    }

    #[test]
    fn fidelity_endpoints() {
        let singlet = TwoQubitDensityMatrix::from_pure(&singlet_ket());
        assert_abs_diff_eq!(singlet.fidelity(&singlet_ket()), 1.0, epsilon = 1e-12);
        let mixed = TwoQubitDensityMatrix::maximally_mixed();
        assert_abs_diff_eq!(mixed.fidelity(&singlet_ket()), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn reconstruction_error_shrinks_with_counts() {
        let truth = TwoQubitDensityMatrix::from_pure(&singlet_ket());
        let mut deficits = Vec::new();
        for (n, seed) in [(1e3, 41u64), (1e4, 42), (1e5, 43)] {
            let counts = synth_counts(&truth, n, seed).unwrap();
            let rec = reconstruct_mle(&counts).unwrap();
            deficits.push(1.0 - rec.rho.fidelity(&singlet_ket()));
        }
        assert!(
            deficits[0] > deficits[1] && deficits[1] > deficits[2],
            "fidelity deficit not decreasing: {deficits:?}"
        );
        assert!(deficits[2] < 1e-3);
    }

    #[test]
    fn mc_uncertainty_shrinks_with_counts() {
        // The 1/√N law holds where the fidelity is locally linear in the
        // state, i.e. away from the pure boundary; use a Werner state with
        // singlet fidelity 0.91. (For a pure truth the fidelity deficit is
        // quadratic in the estimation error and the SD shrinks like 1/N.)
        let p = 0.88;
        let singlet = TwoQubitDensityMatrix::from_pure(&singlet_ket());
        let werner = singlet.matrix() * Complex64::new(p, 0.0)
            + Matrix4::identity() * Complex64::new((1.0 - p) / 4.0, 0.0);
        let truth = TwoQubitDensityMatrix::new(werner).unwrap();
        let c_small = synth_counts(&truth, 1e3, 21).unwrap();
        let c_large = synth_counts(&truth, 1e4, 22).unwrap();
        let (_, sd_small) = mc_uncertainty(&c_small, &singlet_ket(), 120, 1).unwrap();
        let (_, sd_large) = mc_uncertainty(&c_large, &singlet_ket(), 120, 2).unwrap();
        let ratio = sd_small / sd_large;
        // a decade in counts ⇒ √10 in SD, within 30%
        assert!(
            (10f64.sqrt() * 0.7..=10f64.sqrt() * 1.3).contains(&ratio),
            "ratio {ratio}"
        );
    }
}
