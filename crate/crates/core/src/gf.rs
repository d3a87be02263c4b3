//! One-particle Green's-function spectral functions.
//!
//! The retarded diagonal element at zero temperature,
//!
//!   A_ii(E) = -(1/π) Im [ <E0| a_i (z⁺ - H)⁻¹ a_i† |E0>
//!                        - <E0| a_i† (z⁻ - H)⁻¹ a_i |E0> ],
//!
//! with z± = ±(E + iη) + E0^(N), has Lorentzian peaks of half-width η/2
//! at the negatives of the electron affinities and ionization
//! potentials. Each branch is an expectation of the resolvent in an
//! attachment or removal state, which the Chebyshev recursion delivers
//! through the coefficients c_k(z).
//!
//! Both branches are evaluated at upper-half-plane arguments: the
//! removal term at z⁻ (Im < 0) equals the conjugate of the same
//! expectation at conj(z⁻) = (E0 - E) + iη, so a single convergent
//! coefficient branch serves. The resulting A_attach and A_remove are
//! separately nonnegative up to Gibbs oscillations.

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::chebyshev::resolvent_coeffs;
use crate::error::{Error, Result};
use crate::noise::{epsilon_sequence, EpsilonSequence, NoiseMode, NoiseModel};
use crate::pauli::{
    jw_annihilation, jw_creation, scale_l1, scale_spectral, OperatorLCU, ScalingParams,
};
use crate::rvse::{run_rvse, MomentRecord};
use crate::statevec::{
    apply_lcu, exact_diagonalize, ground_state_in_sector, EigenDecomposition, StateVector,
};

/// How the Hamiltonian gets rescaled before the expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingChoice {
    /// Exact diagonalization supplies the bounds; `margin` widens them.
    Auto { margin: f64 },
    /// Caller-supplied bounds.
    Spectral {
        e_min: f64,
        e_max: f64,
        margin: f64,
    },
    /// Divide by λ = Σ|h_j|.
    L1,
}

impl Default for ScalingChoice {
    fn default() -> Self {
        ScalingChoice::Auto { margin: 0.01 }
    }
}

impl ScalingChoice {
    /// Apply the choice; `decomp` provides bounds for `Auto`.
    pub fn apply(
        &self,
        h: &OperatorLCU,
        decomp: Option<&EigenDecomposition>,
    ) -> Result<(OperatorLCU, ScalingParams)> {
        match *self {
            ScalingChoice::Auto { margin } => {
                let owned;
                let d = match decomp {
                    Some(d) => d,
                    None => {
                        owned = exact_diagonalize(h)?;
                        &owned
                    }
                };
                let e_min = d.eigenvalues()[0];
                let e_max = *d.eigenvalues().last().unwrap();
                scale_spectral(h, e_min, e_max, margin)
            }
            ScalingChoice::Spectral {
                e_min,
                e_max,
                margin,
            } => scale_spectral(h, e_min, e_max, margin),
            ScalingChoice::L1 => scale_l1(h),
        }
    }
}

/// Configuration of a spectral-function run.
#[derive(Debug, Clone)]
pub struct SpectralConfig {
    /// Spin-orbital index i of the diagonal element (starts from 0).
    pub orbital: usize,
    /// Broadening η > 0, in unscaled energy units.
    pub eta: f64,
    /// Chebyshev truncation order.
    pub k_max: usize,
    /// Energy grid, unscaled units, strictly increasing.
    pub grid: Vec<f64>,
    /// Particle number N of the neutral sector.
    pub n_particles: usize,
    pub scaling: ScalingChoice,
}

impl SpectralConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eta <= 0.0 {
            return Err(Error::InvalidArgument("eta must be positive".into()));
        }
        if self.grid.is_empty() {
            return Err(Error::InvalidArgument("empty energy grid".into()));
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "energy grid must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// EA/IP classification of an exact pole.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoleKind {
    /// Electron affinity EA_a = E0^(N) - E_a^(N+1).
    Ea,
    /// Ionization potential IP_i = E_i^(N-1) - E0^(N).
    Ip,
}

impl std::fmt::Display for PoleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PoleKind::Ea => write!(f, "EA"),
            PoleKind::Ip => write!(f, "IP"),
        }
    }
}

/// One EA or IP energy extracted from sector diagonalization.
#[derive(Debug, Clone, Copy)]
pub struct EaIpEntry {
    pub kind: PoleKind,
    /// Index of the state within its sector, by ascending energy.
    pub index: usize,
    /// The EA or IP energy itself (the spectral function peaks at its
    /// negative).
    pub energy: f64,
}

/// Output of [`spectral_function`].
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub grid: Vec<f64>,
    /// A_ii(E) from the Chebyshev expansion (noisy when the model says so).
    pub a_values: Vec<f64>,
    /// First (electron-attachment) branch.
    pub a_attach: Vec<f64>,
    /// Second (electron-removal) branch.
    pub a_remove: Vec<f64>,
    /// Large-sample error estimate Δ(E); zero in exact mode.
    pub delta_values: Vec<f64>,
    /// Lorentzian-sum oracle from exact diagonalization.
    pub exact_reference: Vec<f64>,
    pub table: Vec<EaIpEntry>,
    pub scaling: ScalingParams,
    pub ground_energy: f64,
    /// ‖a_i† |E0>‖² and ‖a_i |E0>‖²; they sum to 1.
    pub attach_weight: f64,
    pub remove_weight: f64,
}

/// a_i†|ground> (unnormalized) with its norm.
pub fn attachment_state(ground: &StateVector, orbital: usize) -> Result<(StateVector, f64)> {
    let op = jw_creation(orbital, ground.n_qubits())?;
    let state = apply_lcu(&op, ground)?;
    let norm = state.norm();
    Ok((state, norm))
}

/// a_i|ground> (unnormalized) with its norm.
pub fn removal_state(ground: &StateVector, orbital: usize) -> Result<(StateVector, f64)> {
    let op = jw_annihilation(orbital, ground.n_qubits())?;
    let state = apply_lcu(&op, ground)?;
    let norm = state.norm();
    Ok((state, norm))
}

/// <χ̄0|(z - H)⁻¹|χ̄0> ≈ Σ_k c_k(z) ‖χ_k‖ <χ̄0|χ̄_k> in scaled units.
/// Retarded branch: Im z > 0. The caller multiplies ‖χ0‖² for an
/// unnormalized χ0 and divides by the energy scale to unscale.
pub fn resolvent_expectation(records: &[MomentRecord], z_sc: Complex64) -> Result<Complex64> {
    if z_sc.im <= 0.0 {
        return Err(Error::InvalidArgument(
            "retarded resolvent needs Im z > 0".into(),
        ));
    }
    let coeffs = resolvent_coeffs(z_sc, records.len().saturating_sub(1))?;
    Ok(records
        .iter()
        .map(|r| coeffs[r.k] * r.norm * r.overlap)
        .sum())
}

struct Branch {
    /// Products norm_k * overlap_k actually used in the sums (noisy in
    /// surrogate/bernoulli modes).
    products: Vec<Complex64>,
    /// Exact overlaps, used in the Δ channel.
    overlaps_exact: Vec<Complex64>,
    eps: EpsilonSequence,
    /// ‖χ0‖² of the unnormalized branch state.
    weight: f64,
}

impl Branch {
    fn empty(k_max: usize) -> Self {
        Branch {
            products: vec![Complex64::new(0.0, 0.0); k_max + 1],
            overlaps_exact: vec![Complex64::new(0.0, 0.0); k_max + 1],
            eps: EpsilonSequence {
                sigma_mu: vec![0.0; k_max + 1],
                sigma_nu: vec![0.0; k_max + 1],
                eps: vec![0.0; k_max + 1],
            },
            weight: 0.0,
        }
    }
}

fn prepare_branch(
    h_sc: &OperatorLCU,
    state: StateVector,
    norm: f64,
    k_max: usize,
    model: &NoiseModel,
    sum_c_sq: f64,
    seed_offset: u64,
) -> Result<Branch> {
    if norm < 1e-13 {
        // fully blocked/empty orbital: the branch contributes zero
        return Ok(Branch::empty(k_max));
    }
    let (normalized, _) = state.normalized()?;
    let records = run_rvse(h_sc, &normalized, k_max)?;
    let norms: Vec<f64> = records.iter().map(|r| r.norm).collect();
    let overlaps_exact: Vec<Complex64> = records.iter().map(|r| r.overlap).collect();
    let (products, eps) = match model.mode {
        NoiseMode::Exact => {
            let eps = EpsilonSequence {
                sigma_mu: vec![0.0; k_max + 1],
                sigma_nu: vec![0.0; k_max + 1],
                eps: vec![0.0; k_max + 1],
            };
            let products = records
                .iter()
                .map(|r| Complex64::new(r.norm, 0.0) * r.overlap)
                .collect();
            (products, eps)
        }
        NoiseMode::Surrogate => {
            let branch_model = NoiseModel {
                seed: model.seed.wrapping_add(seed_offset),
                ..*model
            };
            let noisy = crate::noise::noisy_records(&records, &branch_model, sum_c_sq)?;
            let eps = epsilon_sequence(&norms, sum_c_sq, model.shots, k_max)?;
            let products = noisy
                .iter()
                .map(|n| Complex64::new(n.norm_noisy, 0.0) * n.overlap_noisy)
                .collect();
            (products, eps)
        }
        NoiseMode::Bernoulli => {
            let branch_model = NoiseModel {
                seed: model.seed.wrapping_add(seed_offset),
                ..*model
            };
            let seq = crate::rvse::ChebStateSequence::generate(h_sc, &normalized, k_max)?;
            let noisy = crate::noise::bernoulli_records(&seq, h_sc, &branch_model)?;
            let eps = epsilon_sequence(&norms, sum_c_sq, model.shots, k_max)?;
            let products = noisy
                .iter()
                .map(|n| Complex64::new(n.norm_noisy, 0.0) * n.overlap_noisy)
                .collect();
            (products, eps)
        }
    };
    Ok(Branch {
        products,
        overlaps_exact,
        eps,
        weight: norm * norm,
    })
}

/// Compute the diagonal spectral function A_ii over the configured grid.
pub fn spectral_function(
    h: &OperatorLCU,
    config: &SpectralConfig,
    model: &NoiseModel,
) -> Result<SpectralResult> {
    config.validate()?;
    model.validate()?;
    if config.orbital >= h.n_qubits() {
        return Err(Error::InvalidArgument(format!(
            "orbital {} out of range for {} qubits",
            config.orbital,
            h.n_qubits()
        )));
    }
    let decomp = exact_diagonalize(h)?;
    let (e0, ground) = ground_state_in_sector(&decomp, config.n_particles, h.n_qubits())?;
    let (h_sc, scaling) = config.scaling.apply(h, Some(&decomp))?;
    let sum_c_sq = h_sc.sum_coeff_sq();

    let (attach, attach_norm) = attachment_state(&ground, config.orbital)?;
    let (remove, remove_norm) = removal_state(&ground, config.orbital)?;
    let attach_branch = prepare_branch(
        &h_sc,
        attach,
        attach_norm,
        config.k_max,
        model,
        sum_c_sq,
        0,
    )?;
    let remove_branch = prepare_branch(
        &h_sc,
        remove,
        remove_norm,
        config.k_max,
        model,
        sum_c_sq,
        1,
    )?;

    let table = ea_ip_from_decomposition(&decomp, config.n_particles, h.n_qubits(), e0)?;
    let exact_reference =
        lorentzian_reference(&decomp, &ground, config, e0)?;

    let h_minus = scaling.energy_scale();
    let eta = config.eta;
    let evaluate = |energy: f64| -> Result<(f64, f64, f64)> {
        // attachment at w = E + E0 + i eta, removal via conjugation at
        // w = E0 - E + i eta; both upper half plane
        let mut a_attach = 0.0;
        let mut a_remove = 0.0;
        let mut delta = 0.0;
        if attach_branch.weight > 0.0 {
            let w = Complex64::new(energy + e0, eta);
            let z_sc = scaling.map_energy(w);
            let coeffs = resolvent_coeffs(z_sc, config.k_max)?;
            let sum: Complex64 = coeffs
                .iter()
                .zip(&attach_branch.products)
                .map(|(c, p)| c * p)
                .sum();
            a_attach = -attach_branch.weight / (std::f64::consts::PI * h_minus) * sum.im;
            let dsum: Complex64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * attach_branch.eps.eps[k] * attach_branch.overlaps_exact[k])
                .sum();
            delta += attach_branch.weight / (std::f64::consts::PI * h_minus) * dsum.norm();
        }
        if remove_branch.weight > 0.0 {
            let w = Complex64::new(e0 - energy, eta);
            let z_sc = scaling.map_energy(w);
            let coeffs = resolvent_coeffs(z_sc, config.k_max)?;
            let sum: Complex64 = coeffs
                .iter()
                .zip(&remove_branch.products)
                .map(|(c, p)| c * p)
                .sum();
            a_remove = -remove_branch.weight / (std::f64::consts::PI * h_minus) * sum.im;
            let dsum: Complex64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * remove_branch.eps.eps[k] * remove_branch.overlaps_exact[k])
                .sum();
            delta += remove_branch.weight / (std::f64::consts::PI * h_minus) * dsum.norm();
        }
        Ok((a_attach, a_remove, delta))
    };

    let rows: Result<Vec<(f64, f64, f64)>> =
        config.grid.par_iter().map(|&e| evaluate(e)).collect();
    let rows = rows?;

    Ok(SpectralResult {
        grid: config.grid.clone(),
        a_values: rows.iter().map(|r| r.0 + r.1).collect(),
        a_attach: rows.iter().map(|r| r.0).collect(),
        a_remove: rows.iter().map(|r| r.1).collect(),
        delta_values: rows.iter().map(|r| r.2).collect(),
        exact_reference,
        table,
        scaling,
        ground_energy: e0,
        attach_weight: attach_branch.weight,
        remove_weight: remove_branch.weight,
    })
}

/// Lorentzian-sum oracle: every exact pole broadened by η.
fn lorentzian_reference(
    decomp: &EigenDecomposition,
    ground: &StateVector,
    config: &SpectralConfig,
    e0: f64,
) -> Result<Vec<f64>> {
    let (attach, _) = attachment_state(ground, config.orbital)?;
    let (remove, _) = removal_state(ground, config.orbital)?;
    let w_attach: Vec<f64> = decomp
        .overlaps(&attach)?
        .iter()
        .map(|o| o.norm_sqr())
        .collect();
    let w_remove: Vec<f64> = decomp
        .overlaps(&remove)?
        .iter()
        .map(|o| o.norm_sqr())
        .collect();
    let eta = config.eta;
    Ok(config
        .grid
        .iter()
        .map(|&e| {
            let mut a = 0.0;
            for (m, &em) in decomp.eigenvalues().iter().enumerate() {
                // attachment pole at E = E_m - E0, removal pole at E = E0 - E_m
                if w_attach[m] > 0.0 {
                    let x = e - (em - e0);
                    a += w_attach[m] * eta / (std::f64::consts::PI * (x * x + eta * eta));
                }
                if w_remove[m] > 0.0 {
                    let x = e - (e0 - em);
                    a += w_remove[m] * eta / (std::f64::consts::PI * (x * x + eta * eta));
                }
            }
            a
        })
        .collect())
}

/// All EA_a and IP_i energies from exact sector diagonalization.
pub fn ea_ip_table(h: &OperatorLCU, n_particles: usize) -> Result<Vec<EaIpEntry>> {
    let decomp = exact_diagonalize(h)?;
    let (e0, _) = ground_state_in_sector(&decomp, n_particles, h.n_qubits())?;
    ea_ip_from_decomposition(&decomp, n_particles, h.n_qubits(), e0)
}

fn ea_ip_from_decomposition(
    decomp: &EigenDecomposition,
    n_particles: usize,
    n_qubits: usize,
    e0: f64,
) -> Result<Vec<EaIpEntry>> {
    let plus = sector_energies(decomp, n_particles as f64 + 1.0);
    let minus = if n_particles == 0 {
        Vec::new()
    } else {
        sector_energies(decomp, n_particles as f64 - 1.0)
    };
    if plus.is_empty() && n_particles + 1 <= n_qubits {
        return Err(Error::SectorNotFound {
            n_particles: n_particles + 1,
        });
    }
    if minus.is_empty() && n_particles >= 1 {
        return Err(Error::SectorNotFound {
            n_particles: n_particles - 1,
        });
    }
    let mut table = Vec::new();
    for (a, &e) in plus.iter().enumerate() {
        table.push(EaIpEntry {
            kind: PoleKind::Ea,
            index: a,
            energy: e0 - e,
        });
    }
    for (i, &e) in minus.iter().enumerate() {
        table.push(EaIpEntry {
            kind: PoleKind::Ip,
            index: i,
            energy: e - e0,
        });
    }
    Ok(table)
}

/// Energies of eigenstates with a sharp particle number near `target`.
/// Number-conserving Hamiltonians give every eigenstate a sharp number
/// except inside cross-sector degeneracies, which contribute their
/// energy once per member state of matching expectation.
fn sector_energies(decomp: &EigenDecomposition, target: f64) -> Vec<f64> {
    decomp
        .eigenvalues()
        .iter()
        .zip(decomp.eigenvectors())
        .filter(|(_, v)| (v.number_expectation() - target).abs() < 1e-7)
        .map(|(e, _)| *e)
        .collect()
}

/// Spectral CSV: columns E, E_scaled, A, A_attach, A_remove, A_exact,
/// Delta; metadata up front, EA/IP table appended as comments.
pub fn write_spectral_csv<W: Write>(
    out: &mut W,
    result: &SpectralResult,
    metadata: &[(String, String)],
) -> io::Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k}={v}")?;
    }
    match result.scaling {
        ScalingParams::Spectral { h_plus, h_minus } => {
            writeln!(out, "# scaling_h_plus={h_plus}")?;
            writeln!(out, "# scaling_h_minus={h_minus}")?;
        }
        ScalingParams::L1 { lambda } => writeln!(out, "# scaling_lambda={lambda}")?,
    }
    writeln!(out, "# ground_energy={}", result.ground_energy)?;
    writeln!(out, "E,E_scaled,A,A_attach,A_remove,A_exact,Delta")?;
    for (i, &e) in result.grid.iter().enumerate() {
        let e_sc = result.scaling.map_energy(Complex64::new(e, 0.0)).re;
        writeln!(
            out,
            "{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}",
            e,
            e_sc,
            result.a_values[i],
            result.a_attach[i],
            result.a_remove[i],
            result.exact_reference[i],
            result.delta_values[i]
        )?;
    }
    for entry in &result.table {
        writeln!(
            out,
            "# {}[{}]={:.12e}",
            entry.kind, entry.index, entry.energy
        )?;
    }
    Ok(())
}
