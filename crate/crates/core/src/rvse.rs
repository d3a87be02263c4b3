//! Recursive construction of normalized Chebyshev states.
//!
//! With a scaled Hamiltonian H (spectrum inside (-1, 1)) and an initial
//! state χ0, the Chebyshev states χ_k = T_k(H) χ0 obey
//!
//!   χ_k = 2 ‖χ_{k-1}‖ H χ̄_{k-1} - ‖χ_{k-2}‖ χ̄_{k-2},
//!
//! where χ̄_k = χ_k / ‖χ_k‖ is the normalized state a variational
//! circuit would hold. The recursion propagates only the normalizing
//! constants ‖χ_k‖ and the reference overlaps <χ̄0|χ̄_k>; the product
//! ‖χ_k‖ <χ̄0|χ̄_k> equals the moment <χ̄0|T_k(H)|χ̄0>, and expectation
//! values of operator functions assemble as
//!
//!   <χ0|F(H)|χ0> / ‖χ0‖ ≈ Σ_k c_k ‖χ0‖ ‖χ_k‖ <χ̄0|χ̄_k>.
//!
//! The variational layer is idealized: normalized states are stored
//! exactly and the cost-function optimum is the normalizing constant
//! itself. Sampling-noise perturbations of that layer live in
//! [`crate::noise`].

use std::io::{self, Write};

use num_complex::Complex64;

use crate::chebyshev::MomentSeries;
use crate::error::{Error, Result};
use crate::pauli::OperatorLCU;
use crate::statevec::{apply_lcu, apply_lcu_scaled_add, inner, StateVector};

/// Norms below this signal exact annihilation (T_k(E) crossing zero on
/// an eigenstate); dividing through would be meaningless.
pub const ANNIHILATION_THRESHOLD: f64 = 1e-13;

/// One step of the recursion: normalizing constant ‖χ_k‖ together with
/// the reference overlap <χ̄0|χ̄_k>.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRecord {
    pub k: usize,
    /// ‖χ_k‖, the ideal cost-function optimum at step k.
    pub norm: f64,
    /// <χ̄0|χ̄_k>.
    pub overlap: Complex64,
}

impl MomentRecord {
    /// norm · Re(overlap) = <χ̄0|T_k(H)|χ̄0> for Hermitian H.
    pub fn moment(&self) -> f64 {
        self.norm * self.overlap.re
    }
}

/// One Chebyshev step: given the normalized states and norms at k-1 and
/// k-2, form χ_k and return `(χ̄_k, ‖χ_k‖)`.
///
/// `prev2 = None` is the k = 1 step, where T_1 = H and the doubled term
/// degenerates: χ_1 = ‖χ_0‖ H χ̄_0.
pub fn recursion_step(
    h_sc: &OperatorLCU,
    prev: (&StateVector, f64),
    prev2: Option<(&StateVector, f64)>,
) -> Result<(StateVector, f64)> {
    let (state_prev, norm_prev) = prev;
    let mut chi = apply_lcu(h_sc, state_prev)?;
    match prev2 {
        None => chi.scale(norm_prev),
        Some((state_prev2, norm_prev2)) => {
            chi.scale(2.0 * norm_prev);
            if chi.dim() != state_prev2.dim() {
                return Err(Error::DimMismatch {
                    expected: chi.dim(),
                    got: state_prev2.dim(),
                });
            }
            for (o, a) in chi.amplitudes_mut().iter_mut().zip(state_prev2.amplitudes()) {
                *o -= norm_prev2 * a;
            }
        }
    }
    let norm = chi.norm();
    if norm < ANNIHILATION_THRESHOLD {
        return Err(Error::VanishingNorm { k: 0, norm });
    }
    chi.scale(1.0 / norm);
    Ok((chi, norm))
}

/// Run the recursion for k = 0..=k_max, producing one [`MomentRecord`]
/// per order. χ0 is normalized on entry (record 0 always has norm 1 and
/// overlap 1), and only three statevectors are live at any point.
pub fn run_rvse(
    h_sc: &OperatorLCU,
    chi0: &StateVector,
    k_max: usize,
) -> Result<Vec<MomentRecord>> {
    let mut records = Vec::with_capacity(k_max + 1);
    run_rvse_with(h_sc, chi0, k_max, |r| records.push(r))?;
    Ok(records)
}

/// Visitor form of [`run_rvse`]; the closure sees each record in order.
pub fn run_rvse_with(
    h_sc: &OperatorLCU,
    chi0: &StateVector,
    k_max: usize,
    mut visit: impl FnMut(MomentRecord),
) -> Result<()> {
    if h_sc.n_qubits() != chi0.n_qubits() {
        return Err(Error::DimMismatch {
            expected: chi0.n_qubits(),
            got: h_sc.n_qubits(),
        });
    }
    let (chi0, _) = chi0.normalized()?;
    visit(MomentRecord {
        k: 0,
        norm: 1.0,
        overlap: Complex64::new(1.0, 0.0),
    });
    if k_max == 0 {
        return Ok(());
    }

    // k = 1: chi_1 = H chi0
    let mut chi = apply_lcu(h_sc, &chi0)?;
    let norm1 = chi.norm();
    if norm1 < ANNIHILATION_THRESHOLD {
        return Err(Error::VanishingNorm { k: 1, norm: norm1 });
    }
    chi.scale(1.0 / norm1);
    visit(MomentRecord {
        k: 1,
        norm: norm1,
        overlap: inner(&chi0, &chi)?,
    });

    // prev holds chi-bar_{k-1}, older holds chi-bar_{k-2}; the k-2
    // buffer is scaled in place and accumulated into, so the recursion
    // never holds more than these three states.
    let mut older = chi0.clone();
    let mut prev = chi;
    let mut norm_prev = norm1;
    let mut norm_older = 1.0;
    for k in 2..=k_max {
        older.scale(-norm_older);
        apply_lcu_scaled_add(h_sc, &prev, &mut older, 2.0 * norm_prev);
        let norm_k = older.norm();
        if norm_k < ANNIHILATION_THRESHOLD {
            return Err(Error::VanishingNorm { k, norm: norm_k });
        }
        older.scale(1.0 / norm_k);
        std::mem::swap(&mut older, &mut prev);
        norm_older = norm_prev;
        norm_prev = norm_k;
        visit(MomentRecord {
            k,
            norm: norm_k,
            overlap: inner(&chi0, &prev)?,
        });
    }
    Ok(())
}

/// All normalized Chebyshev states retained in memory, the form the
/// Bernoulli sampling pipeline needs (it must revisit pairs of states).
#[derive(Debug, Clone)]
pub struct ChebStateSequence {
    pub normalized_states: Vec<StateVector>,
    pub norms: Vec<f64>,
    pub chi0_norm: f64,
}

impl ChebStateSequence {
    /// Generate χ̄_0..χ̄_K and their norms. Memory is (K+1)·2^n
    /// amplitudes; use [`run_rvse`] when only the records matter.
    pub fn generate(h_sc: &OperatorLCU, chi0: &StateVector, k_max: usize) -> Result<Self> {
        let (chi0_normalized, chi0_norm) = chi0.normalized()?;
        let mut states = vec![chi0_normalized];
        let mut norms = vec![1.0];
        if k_max >= 1 {
            let (s1, n1) = recursion_step(h_sc, (&states[0], 1.0), None)
                .map_err(|e| relabel_annihilation(e, 1))?;
            states.push(s1);
            norms.push(n1);
        }
        for k in 2..=k_max {
            let (s, n) = recursion_step(
                h_sc,
                (&states[k - 1], norms[k - 1]),
                Some((&states[k - 2], norms[k - 2])),
            )
            .map_err(|e| relabel_annihilation(e, k))?;
            states.push(s);
            norms.push(n);
        }
        Ok(Self {
            normalized_states: states,
            norms,
            chi0_norm,
        })
    }

    pub fn k_max(&self) -> usize {
        self.norms.len().saturating_sub(1)
    }

    /// The records the streaming recursion would produce.
    pub fn records(&self) -> Result<Vec<MomentRecord>> {
        (0..self.norms.len())
            .map(|k| {
                Ok(MomentRecord {
                    k,
                    norm: self.norms[k],
                    overlap: inner(&self.normalized_states[0], &self.normalized_states[k])?,
                })
            })
            .collect()
    }
}

fn relabel_annihilation(e: Error, k: usize) -> Error {
    match e {
        Error::VanishingNorm { norm, .. } => Error::VanishingNorm { k, norm },
        other => other,
    }
}

/// Σ_k coeff(k) · ‖χ0‖ · ‖χ_k‖ · <χ̄0|χ̄_k>.
///
/// The ‖χ0‖ prefactor enters exactly once, so for unnormalized χ0 the
/// returned value targets <χ0|F(H)|χ0> / ‖χ0‖ and the caller multiplies
/// the second ‖χ0‖.
pub fn assemble_expectation(
    records: &[MomentRecord],
    chi0_norm: f64,
    coeff: impl Fn(usize) -> Complex64,
) -> Complex64 {
    records
        .iter()
        .map(|r| coeff(r.k) * chi0_norm * r.norm * r.overlap)
        .sum()
}

/// Unnormalized three-term recursion for the moments
/// <χ̄0|T_k(H)|χ̄0>; the in-repo oracle for [`run_rvse`].
pub fn moments_direct(
    h_sc: &OperatorLCU,
    chi0: &StateVector,
    k_max: usize,
) -> Result<MomentSeries> {
    let (u0, _) = chi0.normalized()?;
    let mut values = Vec::with_capacity(k_max + 1);
    values.push(1.0);
    if k_max == 0 {
        return Ok(MomentSeries::new(values));
    }
    let mut prev2 = u0.clone();
    let mut prev = apply_lcu(h_sc, &u0)?;
    values.push(checked_real(inner(&u0, &prev)?));
    for _ in 2..=k_max {
        let mut next = apply_lcu(h_sc, &prev)?;
        next.scale(2.0);
        for (o, a) in next.amplitudes_mut().iter_mut().zip(prev2.amplitudes()) {
            *o -= a;
        }
        prev2 = prev;
        prev = next;
        values.push(checked_real(inner(&u0, &prev)?));
    }
    Ok(MomentSeries::new(values))
}

fn checked_real(z: Complex64) -> f64 {
    debug_assert!(z.im.abs() < 1e-10, "moment has imaginary residue {}", z.im);
    z.re
}

/// Write the moment-dump CSV: `#`-prefixed metadata, then one row per
/// order with columns k, norm, overlap_re, overlap_im, moment.
pub fn write_moment_csv<W: Write>(
    out: &mut W,
    records: &[MomentRecord],
    metadata: &[(String, String)],
) -> io::Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "k,norm,overlap_re,overlap_im,moment")?;
    for r in records {
        writeln!(
            out,
            "{},{:.15e},{:.15e},{:.15e},{:.15e}",
            r.k,
            r.norm,
            r.overlap.re,
            r.overlap.im,
            r.moment()
        )?;
    }
    Ok(())
}
