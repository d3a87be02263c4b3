//! Hadamard-test sampling noise and its propagation through the
//! recursion.
//!
//! Three layers, all driven by a shot count S:
//!
//! * **Bernoulli**: each overlap is estimated from S two-outcome
//!   measurements with Pr(ξ = ±1) = (1 ± <P>)/2, the exact statistics of
//!   the test circuit. Unbiased, Var(mean) = (1 - <P>²)/S.
//! * **Surrogate**: the large-sample Gaussian model. The cost-function
//!   estimator at step k picks up a positive shift
//!   ε_k = E|φ_μ(1+i) + φ_ν(1+i)| = 2 √((σ_μ² + σ_ν²)/π), where the σ's
//!   are built from the variance bound Σ|c_j|²/S and feed the previous
//!   ε back in (errors propagate through the recursion).
//! * **Expectation error**: the shift of an assembled K-term expectation,
//!   Δ = |Σ_k c_k ‖χ0‖ ε_k <χ̄0|χ̄_k>|.
//!
//! The σ recursion reuses ε_{k-1}, ε_{k-2}, which breaks exact 1/√S
//! homogeneity; [`EpsilonRecursion::FirstOrder`] drops the feedback
//! (the self-consistent large-sample limit) and scales exactly.

use std::io::{self, Write};

use num_complex::Complex64;
use rand::distributions::Distribution;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, StandardNormal};

use crate::error::{Error, Result};
use crate::pauli::OperatorLCU;
use crate::rvse::{ChebStateSequence, MomentRecord};
use crate::statevec::{apply_pauli, inner};

/// How sampling noise is injected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// No noise; the idealized pipeline.
    Exact,
    /// Direct two-outcome sampling of every overlap.
    Bernoulli,
    /// Large-sample Gaussian surrogate with the ε recursion.
    Surrogate,
}

/// Scale of the final-overlap noise φ_k in the surrogate.
///
/// The source model literally draws φ_k ← (1/S)·N(0,1), which is
/// dimensionally inconsistent with the 1/√S variance elsewhere; both
/// conventions are provided, the verbatim one is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiConvention {
    /// σ_φ = 1/S (verbatim).
    PaperOneOverS,
    /// σ_φ = 1/√S (the plausible erratum).
    OneOverSqrtS,
}

/// Which σ recursion the closed-form ε sequence uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsilonRecursion {
    /// σ_{μ,k} ∝ (‖χ_{k-1}‖ + ε_{k-1}): errors feed forward (verbatim).
    Propagating,
    /// σ's use exact norms only; ε_k ∝ 1/√S exactly.
    FirstOrder,
}

/// Shot count, seed, and conventions for a noisy run.
#[derive(Debug, Clone, Copy)]
pub struct NoiseModel {
    /// Measurements per overlap evaluation.
    pub shots: u64,
    pub seed: u64,
    pub mode: NoiseMode,
    pub phi_convention: PhiConvention,
    /// Draw the real and imaginary noise components independently
    /// instead of the written same-draw φ(1+i) coupling.
    pub independent_phases: bool,
}

impl NoiseModel {
    pub fn exact() -> Self {
        Self {
            shots: 1,
            seed: 0,
            mode: NoiseMode::Exact,
            phi_convention: PhiConvention::PaperOneOverS,
            independent_phases: false,
        }
    }

    pub fn surrogate(shots: u64, seed: u64) -> Self {
        Self {
            shots,
            seed,
            mode: NoiseMode::Surrogate,
            phi_convention: PhiConvention::PaperOneOverS,
            independent_phases: false,
        }
    }

    pub fn bernoulli(shots: u64, seed: u64) -> Self {
        Self {
            shots,
            seed,
            mode: NoiseMode::Bernoulli,
            phi_convention: PhiConvention::PaperOneOverS,
            independent_phases: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode != NoiseMode::Exact && self.shots == 0 {
            return Err(Error::InvalidArgument(
                "shot count must be >= 1 in noisy modes".into(),
            ));
        }
        Ok(())
    }

    /// The run's RNG; identical seeds give bit-identical output streams.
    pub fn rng(&self) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(self.seed)
    }

    /// σ of the final-overlap noise φ_k under the active convention.
    pub fn phi_sigma(&self) -> f64 {
        match self.phi_convention {
            PhiConvention::PaperOneOverS => 1.0 / self.shots as f64,
            PhiConvention::OneOverSqrtS => 1.0 / (self.shots as f64).sqrt(),
        }
    }
}

fn sample_mean_of_signs(p_plus: f64, shots: u64, rng: &mut impl Rng) -> Result<f64> {
    if !(-1e-12..=1.0 + 1e-12).contains(&p_plus) {
        return Err(Error::InvalidArgument(format!(
            "outcome probability {p_plus} outside [0, 1]"
        )));
    }
    let p = p_plus.clamp(0.0, 1.0);
    let successes = Binomial::new(shots, p)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .sample(rng);
    Ok((2.0 * successes as f64 - shots as f64) / shots as f64)
}

/// Estimate a wave-function overlap the way the test circuit would:
/// the real part is the mean of S signs with Pr(+1) = (1 + Re)/2, the
/// imaginary part comes from an independent batch of S.
pub fn hadamard_estimate(
    true_overlap: Complex64,
    shots: u64,
    rng: &mut impl Rng,
) -> Result<Complex64> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shot count must be >= 1".into()));
    }
    if true_overlap.re.abs() > 1.0 + 1e-12 || true_overlap.im.abs() > 1.0 + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "overlap {true_overlap} outside the unit square"
        )));
    }
    let re = sample_mean_of_signs((1.0 + true_overlap.re) / 2.0, shots, rng)?;
    let im = sample_mean_of_signs((1.0 + true_overlap.im) / 2.0, shots, rng)?;
    Ok(Complex64::new(re, im))
}

/// Variance bound Σ_j |c_j|² / S for an LCU estimator with S shots per
/// term.
pub fn lcu_variance_bound(coeffs: &[f64], shots_per_term: u64) -> f64 {
    let s = shots_per_term.max(1) as f64;
    coeffs.iter().map(|c| c * c / s).sum()
}

/// The σ and ε sequences of the surrogate model.
#[derive(Debug, Clone)]
pub struct EpsilonSequence {
    pub sigma_mu: Vec<f64>,
    pub sigma_nu: Vec<f64>,
    pub eps: Vec<f64>,
}

impl EpsilonSequence {
    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }
}

/// E |φ(1+i)| for the summed Gaussian noise of one step: with
/// φ_μ + φ_ν ~ N(0, σ_μ² + σ_ν²), E|(φ_μ+φ_ν)(1+i)| = 2√((σ_μ²+σ_ν²)/π).
fn closed_form_eps(sigma_mu: f64, sigma_nu: f64) -> f64 {
    2.0 * ((sigma_mu * sigma_mu + sigma_nu * sigma_nu) / std::f64::consts::PI).sqrt()
}

/// Closed-form ε_0..ε_K with the verbatim propagating recursion.
///
/// `norms_exact[k]` is ‖χ_k‖ (so `norms_exact[0]` is ‖χ0‖) and
/// `sum_c_sq` is Σ|c_j|² of the scaled Hamiltonian.
pub fn epsilon_sequence(
    norms_exact: &[f64],
    sum_c_sq: f64,
    shots: u64,
    k_max: usize,
) -> Result<EpsilonSequence> {
    epsilon_sequence_with(
        EpsilonRecursion::Propagating,
        norms_exact,
        sum_c_sq,
        shots,
        k_max,
    )
}

/// Closed-form ε sequence with an explicit recursion variant.
pub fn epsilon_sequence_with(
    recursion: EpsilonRecursion,
    norms_exact: &[f64],
    sum_c_sq: f64,
    shots: u64,
    k_max: usize,
) -> Result<EpsilonSequence> {
    if norms_exact.len() < k_max + 1 {
        return Err(Error::InvalidArgument(format!(
            "need {} norms, got {}",
            k_max + 1,
            norms_exact.len()
        )));
    }
    if shots == 0 {
        return Err(Error::InvalidArgument("shot count must be >= 1".into()));
    }
    let s = shots as f64;
    let q = (sum_c_sq / s).sqrt();
    let mut sigma_mu = vec![0.0; k_max + 1];
    let mut sigma_nu = vec![0.0; k_max + 1];
    let mut eps = vec![0.0; k_max + 1];
    for k in 1..=k_max {
        if k == 1 {
            sigma_mu[1] = norms_exact[0] * q;
            sigma_nu[1] = 0.0;
        } else {
            let (feed1, feed2) = match recursion {
                EpsilonRecursion::Propagating => (eps[k - 1], eps[k - 2]),
                EpsilonRecursion::FirstOrder => (0.0, 0.0),
            };
            sigma_mu[k] = 2.0 * (norms_exact[k - 1] + feed1) * q;
            sigma_nu[k] = (norms_exact[k - 2] + feed2) / s.sqrt();
        }
        eps[k] = closed_form_eps(sigma_mu[k], sigma_nu[k]);
    }
    Ok(EpsilonSequence {
        sigma_mu,
        sigma_nu,
        eps,
    })
}

/// A noisy counterpart of one [`MomentRecord`].
#[derive(Debug, Clone, Copy)]
pub struct NoisyMomentRecord {
    pub k: usize,
    /// ‖χ_k‖ + ε_k, the expected noisy cost-function value.
    pub norm_noisy: f64,
    pub eps: f64,
    pub overlap_noisy: Complex64,
}

/// Surrogate-noise records: norms shifted by the closed-form ε_k and
/// final overlaps perturbed by φ_k.
pub fn noisy_records(
    records: &[MomentRecord],
    model: &NoiseModel,
    sum_c_sq: f64,
) -> Result<Vec<NoisyMomentRecord>> {
    if model.mode != NoiseMode::Surrogate {
        return Err(Error::InvalidArgument(
            "noisy_records requires surrogate mode".into(),
        ));
    }
    model.validate()?;
    let k_max = records.len().saturating_sub(1);
    let norms: Vec<f64> = records.iter().map(|r| r.norm).collect();
    let eps = epsilon_sequence(&norms, sum_c_sq, model.shots, k_max)?;
    let sigma_phi = model.phi_sigma();
    let mut rng = model.rng();
    let out = records
        .iter()
        .map(|r| {
            let (dre, dim) = if model.independent_phases {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                (a, b)
            } else {
                let phi: f64 = StandardNormal.sample(&mut rng);
                (phi, phi)
            };
            NoisyMomentRecord {
                k: r.k,
                norm_noisy: r.norm + eps.eps[r.k],
                eps: eps.eps[r.k],
                overlap_noisy: r.overlap + Complex64::new(sigma_phi * dre, sigma_phi * dim),
            }
        })
        .collect();
    Ok(out)
}

/// Bernoulli-mode records: every μ and ν overlap in the cost function
/// is estimated by direct sampling and the noisy normalizing constants
/// feed forward, mirroring the recursion a device would run.
pub fn bernoulli_records(
    seq: &ChebStateSequence,
    h_sc: &OperatorLCU,
    model: &NoiseModel,
) -> Result<Vec<NoisyMomentRecord>> {
    if model.mode != NoiseMode::Bernoulli {
        return Err(Error::InvalidArgument(
            "bernoulli_records requires bernoulli mode".into(),
        ));
    }
    model.validate()?;
    let mut rng = model.rng();
    let k_max = seq.k_max();
    let states = &seq.normalized_states;
    let mut noisy_norms = vec![0.0; k_max + 1];
    noisy_norms[0] = 1.0;
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(NoisyMomentRecord {
        k: 0,
        norm_noisy: 1.0,
        eps: 0.0,
        overlap_noisy: hadamard_estimate(
            inner(&states[0], &states[0])?,
            model.shots,
            &mut rng,
        )?,
    });
    for k in 1..=k_max {
        // mu part: sum_j h_j <chibar_k| P_j |chibar_{k-1}>
        let mut mu_sum = Complex64::new(0.0, 0.0);
        for (c, w) in h_sc.terms() {
            let applied = apply_pauli(w, &states[k - 1])?;
            let mu_true = inner(&states[k], &applied)?;
            let mu_est = hadamard_estimate(mu_true, model.shots, &mut rng)?;
            mu_sum += c * mu_est;
        }
        let estimate = if k == 1 {
            (noisy_norms[0] * mu_sum).norm()
        } else {
            let nu_true = inner(&states[k], &states[k - 2])?;
            let nu_est = hadamard_estimate(nu_true, model.shots, &mut rng)?;
            (2.0 * noisy_norms[k - 1] * mu_sum - noisy_norms[k - 2] * nu_est).norm()
        };
        noisy_norms[k] = estimate;
        let overlap_noisy =
            hadamard_estimate(inner(&states[0], &states[k])?, model.shots, &mut rng)?;
        out.push(NoisyMomentRecord {
            k,
            norm_noisy: estimate,
            eps: estimate - seq.norms[k],
            overlap_noisy,
        });
    }
    Ok(out)
}

/// Δ = |Σ_k c_k ‖χ0‖ ε_k <χ̄0|χ̄_k>|, the large-sample absolute error
/// of a K-term expectation at one evaluation point.
pub fn absolute_error_delta(
    coeff: impl Fn(usize) -> Complex64,
    eps: &EpsilonSequence,
    overlaps_exact: &[Complex64],
    chi0_norm: f64,
) -> f64 {
    let len = eps.eps.len().min(overlaps_exact.len());
    let sum: Complex64 = (0..len)
        .map(|k| coeff(k) * chi0_norm * eps.eps[k] * overlaps_exact[k])
        .sum();
    sum.norm()
}

/// Noise-report CSV: columns k, norm_exact, eps, norm_noisy, sigma_mu,
/// sigma_nu behind `#`-prefixed metadata.
pub fn write_noise_csv<W: Write>(
    out: &mut W,
    records: &[MomentRecord],
    noisy: &[NoisyMomentRecord],
    eps: &EpsilonSequence,
    metadata: &[(String, String)],
) -> io::Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "k,norm_exact,eps,norm_noisy,sigma_mu,sigma_nu")?;
    for (r, n) in records.iter().zip(noisy) {
        writeln!(
            out,
            "{},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}",
            r.k, r.norm, n.eps, n.norm_noisy, eps.sigma_mu[r.k], eps.sigma_nu[r.k]
        )?;
    }
    Ok(())
}
