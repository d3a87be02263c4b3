//! Dense statevector backend.
//!
//! Stores 2^n complex amplitudes per state. The basis convention follows
//! the leftmost-qubit-0 rule from [`crate::pauli`]: bitstring
//! b0 b1 ... b_{n-1} maps to index Σ b_j 2^{n-1-j}, so qubit 0 is the
//! most significant bit.
//!
//! Everything here is exact (up to f64), which is what makes the module
//! usable as the oracle side of the recursion checks.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{number_operator, OperatorLCU, PauliWord};

/// Dense-backend qubit limit (amplitude vectors of length 2^14 at most).
pub const MAX_DENSE_QUBITS: usize = 14;

static LIVE_STATEVECTORS: AtomicUsize = AtomicUsize::new(0);

/// Number of currently live [`StateVector`] values, used to check the
/// recursion's constant-memory contract.
pub fn live_statevectors() -> usize {
    LIVE_STATEVECTORS.load(Ordering::SeqCst)
}

/// Dense complex amplitude vector of dimension 2^n.
#[derive(Debug)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Clone for StateVector {
    fn clone(&self) -> Self {
        Self::from_parts(self.n_qubits, self.amps.clone())
    }
}

impl Drop for StateVector {
    fn drop(&mut self) {
        LIVE_STATEVECTORS.fetch_sub(1, Ordering::SeqCst);
    }
}

impl StateVector {
    fn from_parts(n_qubits: usize, amps: Vec<Complex64>) -> Self {
        LIVE_STATEVECTORS.fetch_add(1, Ordering::SeqCst);
        Self { n_qubits, amps }
    }

    /// Build from an explicit amplitude list; length must be 2^n.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1usize << n_qubits {
            return Err(Error::DimMismatch {
                expected: 1usize << n_qubits,
                got: amps.len(),
            });
        }
        Ok(Self::from_parts(n_qubits, amps))
    }

    /// |0...0>.
    pub fn zero_state(n_qubits: usize) -> Self {
        Self::basis_state(n_qubits, 0)
    }

    /// Computational basis state by index (qubit 0 = most significant bit).
    pub fn basis_state(n_qubits: usize, index: usize) -> Self {
        let dim = 1usize << n_qubits;
        assert!(index < dim, "basis index out of range");
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Self::from_parts(n_qubits, amps)
    }

    /// Basis state from a bitstring such as "0110".
    pub fn from_bitstring(bits: &str) -> Result<Self> {
        let n = bits.len();
        let mut index = 0usize;
        for ch in bits.chars() {
            index <<= 1;
            match ch {
                '0' => {}
                '1' => index |= 1,
                _ => return Err(Error::Malformed(format!("invalid bit '{ch}'"))),
            }
        }
        Ok(Self::basis_state(n, index))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// True when the norm is 1 within 1e-10.
    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() < 1e-10
    }

    /// Return the normalized copy together with the original norm.
    pub fn normalized(&self) -> Result<(StateVector, f64)> {
        let n = self.norm();
        if n < 1e-13 {
            return Err(Error::ZeroNorm);
        }
        let amps = self.amps.iter().map(|a| a / n).collect();
        Ok((Self::from_parts(self.n_qubits, amps), n))
    }

    /// In-place scale by a real factor.
    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.amps {
            *a *= factor;
        }
    }

    /// Expectation of the total number operator Σ (I - Z_j)/2.
    pub fn number_expectation(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * i.count_ones() as f64)
            .sum()
    }
}

/// Exact action of a Pauli word; unitary, so norm preserving.
pub fn apply_pauli(word: &PauliWord, psi: &StateVector) -> Result<StateVector> {
    if word.len() != psi.n_qubits {
        return Err(Error::DimMismatch {
            expected: psi.n_qubits,
            got: word.len(),
        });
    }
    let (flip, sign_mask, y_count) = word.masks();
    let global = Complex64::i().powu(y_count % 4);
    let mut out = vec![Complex64::new(0.0, 0.0); psi.dim()];
    for (i, &a) in psi.amps.iter().enumerate() {
        let sign = if (i & sign_mask).count_ones() & 1 == 1 {
            -1.0
        } else {
            1.0
        };
        out[i ^ flip] = global * sign * a;
    }
    Ok(StateVector::from_parts(psi.n_qubits, out))
}

fn accumulate_term(
    coeff: Complex64,
    word: &PauliWord,
    psi: &[Complex64],
    out: &mut [Complex64],
) {
    let (flip, sign_mask, y_count) = word.masks();
    let scaled = coeff * Complex64::i().powu(y_count % 4);
    for (i, &a) in psi.iter().enumerate() {
        let term = if (i & sign_mask).count_ones() & 1 == 1 {
            -scaled * a
        } else {
            scaled * a
        };
        out[i ^ flip] += term;
    }
}

/// Σ_j h_j P_j |ψ>; the result is generally unnormalized.
pub fn apply_lcu(op: &OperatorLCU, psi: &StateVector) -> Result<StateVector> {
    if op.n_qubits() != psi.n_qubits {
        return Err(Error::DimMismatch {
            expected: psi.n_qubits,
            got: op.n_qubits(),
        });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); psi.dim()];
    for (c, w) in op.terms() {
        accumulate_term(*c, w, &psi.amps, &mut out);
    }
    Ok(StateVector::from_parts(psi.n_qubits, out))
}

/// target += alpha * (op |ψ>), reusing the target buffer. Used by the
/// recursion to keep its constant-memory contract.
pub(crate) fn apply_lcu_scaled_add(
    op: &OperatorLCU,
    psi: &StateVector,
    target: &mut StateVector,
    alpha: f64,
) {
    debug_assert_eq!(op.n_qubits(), psi.n_qubits);
    debug_assert_eq!(psi.dim(), target.dim());
    for (c, w) in op.terms() {
        accumulate_term(c * alpha, w, &psi.amps, &mut target.amps);
    }
}

/// <bra|ket>, conjugate-linear in the bra.
pub fn inner(bra: &StateVector, ket: &StateVector) -> Result<Complex64> {
    if bra.dim() != ket.dim() {
        return Err(Error::DimMismatch {
            expected: bra.dim(),
            got: ket.dim(),
        });
    }
    Ok(bra
        .amps
        .iter()
        .zip(&ket.amps)
        .map(|(b, k)| b.conj() * k)
        .sum())
}

/// Dense matrix of an LCU operator (column j = op |e_j>).
pub fn lcu_matrix(op: &OperatorLCU) -> DMatrix<Complex64> {
    let dim = 1usize << op.n_qubits();
    let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for (c, w) in op.terms() {
        let (flip, sign_mask, y_count) = w.masks();
        let scaled = c * Complex64::i().powu(y_count % 4);
        for j in 0..dim {
            let sign = if (j & sign_mask).count_ones() & 1 == 1 {
                -1.0
            } else {
                1.0
            };
            m[(j ^ flip, j)] += scaled * sign;
        }
    }
    m
}

/// Full spectrum of a Hamiltonian-flagged operator, ascending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<StateVector>,
}

impl EigenDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[StateVector] {
        &self.eigenvectors
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// <E_n|ψ> for every n.
    pub fn overlaps(&self, psi: &StateVector) -> Result<Vec<Complex64>> {
        self.eigenvectors.iter().map(|v| inner(v, psi)).collect()
    }

    /// Spectral-resolution resolvent Σ_n |<E_n|ψ>|² / (z - E_n).
    pub fn resolvent_expectation(&self, psi: &StateVector, z: Complex64) -> Result<Complex64> {
        let w = self.overlaps(psi)?;
        Ok(self
            .eigenvalues
            .iter()
            .zip(&w)
            .map(|(&e, o)| o.norm_sqr() / (z - e))
            .sum())
    }

    /// Spectral-resolution phase sum Σ_n |<E_n|ψ>|² e^{-i E_n t}.
    pub fn phase_sum(&self, psi: &StateVector, t: f64) -> Result<Complex64> {
        let w = self.overlaps(psi)?;
        Ok(self
            .eigenvalues
            .iter()
            .zip(&w)
            .map(|(&e, o)| o.norm_sqr() * Complex64::new(0.0, -e * t).exp())
            .sum())
    }
}

/// Dense exact diagonalization of a Hamiltonian-flagged operator.
pub fn exact_diagonalize(op: &OperatorLCU) -> Result<EigenDecomposition> {
    if !op.is_hamiltonian() {
        return Err(Error::NonHermitian);
    }
    if op.n_qubits() > MAX_DENSE_QUBITS {
        return Err(Error::DimensionGuard {
            n: op.n_qubits(),
            max: MAX_DENSE_QUBITS,
        });
    }
    let m = lcu_matrix(op);
    let eig = m.symmetric_eigen();
    let dim = 1usize << op.n_qubits();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors: Vec<StateVector> = order
        .iter()
        .map(|&i| {
            let col: Vec<Complex64> = eig.eigenvectors.column(i).iter().copied().collect();
            StateVector::from_parts(op.n_qubits(), col)
        })
        .collect();
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Energy-degeneracy threshold for the sector tie-break.
const DEGENERACY_THRESHOLD: f64 = 1e-9;
/// Tolerance on the particle-number expectation of a sector state.
const SECTOR_TOLERANCE: f64 = 1e-8;

/// Lowest eigenstate whose particle number is `n_particles`.
///
/// Degenerate energy levels are resolved by diagonalizing the number
/// operator within the degenerate subspace, so each returned state has a
/// sharp particle number even when the level mixes sectors.
pub fn ground_state_in_sector(
    decomp: &EigenDecomposition,
    n_particles: usize,
    n_qubits: usize,
) -> Result<(f64, StateVector)> {
    let target = n_particles as f64;
    let n_op = number_operator(n_qubits);
    let mut start = 0;
    while start < decomp.len() {
        let e0 = decomp.eigenvalues[start];
        let mut end = start + 1;
        while end < decomp.len() && (decomp.eigenvalues[end] - e0).abs() < DEGENERACY_THRESHOLD {
            end += 1;
        }
        let group = &decomp.eigenvectors[start..end];
        if group.len() == 1 {
            if (group[0].number_expectation() - target).abs() < SECTOR_TOLERANCE {
                return Ok((e0, group[0].clone()));
            }
        } else {
            // N restricted to the degenerate subspace
            let m = group.len();
            let mut n_sub = DMatrix::from_element(m, m, Complex64::new(0.0, 0.0));
            let applied: Vec<StateVector> = group
                .iter()
                .map(|v| apply_lcu(&n_op, v))
                .collect::<Result<_>>()?;
            for a in 0..m {
                for b in 0..m {
                    n_sub[(a, b)] = inner(&group[a], &applied[b])?;
                }
            }
            let eig = n_sub.symmetric_eigen();
            for col in 0..m {
                if (eig.eigenvalues[col] - target).abs() < SECTOR_TOLERANCE {
                    let mut amps = vec![Complex64::new(0.0, 0.0); group[0].dim()];
                    for b in 0..m {
                        let coeff = eig.eigenvectors[(b, col)];
                        for (i, &a) in group[b].amps.iter().enumerate() {
                            amps[i] += coeff * a;
                        }
                    }
                    let state = StateVector::from_parts(n_qubits, amps);
                    let (state, _) = state.normalized()?;
                    return Ok((e0, state));
                }
            }
        }
        start = end;
    }
    Err(Error::SectorNotFound { n_particles })
}

/// Parse the state format: terms `<amp>|<bits>>` joined by `+`/`-`,
/// where `<amp>` is a decimal or `(re,im)`. Whitespace-insensitive;
/// `>` and `⟩` are both accepted. The assembled superposition is
/// normalized; the pre-normalization norm is returned alongside.
pub fn parse_state(text: &str, n_qubits: usize) -> Result<(StateVector, f64)> {
    let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let chars: Vec<char> = cleaned.chars().collect();
    let dim = 1usize << n_qubits;
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    let mut pos = 0usize;
    let mut first = true;
    while pos < chars.len() {
        let mut sign = 1.0;
        match chars[pos] {
            '+' => {
                pos += 1;
            }
            '-' | '−' => {
                sign = -1.0;
                pos += 1;
            }
            _ if first => {}
            other => {
                return Err(Error::Malformed(format!(
                    "expected '+' or '-' between terms, found '{other}'"
                )));
            }
        }
        first = false;
        let amp = sign * parse_amplitude(&chars, &mut pos)?;
        if pos >= chars.len() || chars[pos] != '|' {
            return Err(Error::Malformed("expected '|' after amplitude".into()));
        }
        pos += 1;
        let bit_start = pos;
        while pos < chars.len() && (chars[pos] == '0' || chars[pos] == '1') {
            pos += 1;
        }
        let bits = &chars[bit_start..pos];
        if pos >= chars.len() || (chars[pos] != '>' && chars[pos] != '⟩') {
            return Err(Error::Malformed("expected '>' closing the ket".into()));
        }
        pos += 1;
        if bits.len() != n_qubits {
            return Err(Error::Malformed(format!(
                "bitstring length {} does not match {} qubits",
                bits.len(),
                n_qubits
            )));
        }
        let mut index = 0usize;
        for &b in bits {
            index = (index << 1) | usize::from(b == '1');
        }
        amps[index] += amp;
    }
    let state = StateVector::from_parts(n_qubits, amps);
    let norm = state.norm();
    if norm < 1e-13 {
        return Err(Error::ZeroNorm);
    }
    let (normalized, _) = state.normalized()?;
    Ok((normalized, norm))
}

fn parse_amplitude(chars: &[char], pos: &mut usize) -> Result<Complex64> {
    if *pos >= chars.len() {
        return Err(Error::Malformed("missing amplitude".into()));
    }
    if chars[*pos] == '(' {
        let close = chars[*pos..]
            .iter()
            .position(|&c| c == ')')
            .ok_or_else(|| Error::Malformed("unterminated '(' in amplitude".into()))?
            + *pos;
        let body: String = chars[*pos + 1..close].iter().collect();
        let (re_s, im_s) = body
            .split_once(',')
            .ok_or_else(|| Error::Malformed(format!("expected '(re,im)', got '({body})'")))?;
        let re: f64 = re_s
            .parse()
            .map_err(|_| Error::Malformed(format!("malformed amplitude '{re_s}'")))?;
        let im: f64 = im_s
            .parse()
            .map_err(|_| Error::Malformed(format!("malformed amplitude '{im_s}'")))?;
        *pos = close + 1;
        Ok(Complex64::new(re, im))
    } else {
        let start = *pos;
        while *pos < chars.len() {
            let c = chars[*pos];
            let prev = chars[*pos - 1];
            let is_num = c.is_ascii_digit() || c == '.';
            let is_exp = c == 'e' || c == 'E';
            let is_exp_sign = (c == '+' || c == '-') && (prev == 'e' || prev == 'E');
            if is_num || is_exp || (is_exp_sign && *pos > start) {
                *pos += 1;
            } else {
                break;
            }
        }
        let tok: String = chars[start..*pos].iter().collect();
        if tok.is_empty() {
            return Err(Error::Malformed("missing amplitude".into()));
        }
        let v: f64 = tok
            .parse()
            .map_err(|_| Error::Malformed(format!("malformed amplitude '{tok}'")))?;
        Ok(Complex64::new(v, 0.0))
    }
}

/// Convenience wrapper used by tests: dense matrix-vector product.
pub fn matrix_vector(m: &DMatrix<Complex64>, psi: &StateVector) -> StateVector {
    let v = DVector::from_column_slice(psi.amplitudes());
    let out = m * v;
    StateVector::from_parts(psi.n_qubits(), out.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{jw_annihilation, jw_creation};
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_state(n: usize, rng: &mut impl Rng) -> StateVector {
        let dim = 1usize << n;
        let amps: Vec<Complex64> = (0..dim)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        StateVector::from_amplitudes(n, amps).unwrap().normalized().unwrap().0
    }

    fn random_hamiltonian(n: usize, n_terms: usize, rng: &mut impl Rng) -> OperatorLCU {
        use crate::pauli::PauliOp;
        let ops = [PauliOp::I, PauliOp::X, PauliOp::Y, PauliOp::Z];
        let terms: Vec<(Complex64, PauliWord)> = (0..n_terms)
            .map(|_| {
                let axes: Vec<PauliOp> = (0..n).map(|_| ops[rng.gen_range(0..4)]).collect();
                (c(rng.gen_range(-1.0..1.0), 0.0), PauliWord::new(axes))
            })
            .collect();
        OperatorLCU::hamiltonian(n, terms).unwrap()
    }

    #[test]
    fn pauli_phase_conventions() {
        // X|0> = |1>
        let s = apply_pauli(&PauliWord::parse("X").unwrap(), &StateVector::zero_state(1)).unwrap();
        assert_eq!(s.amplitudes()[1], c(1.0, 0.0));
        // Z on (|0>+|1>)/sqrt2 -> (|0>-|1>)/sqrt2
        let plus = StateVector::from_amplitudes(
            1,
            vec![c(1.0 / 2f64.sqrt(), 0.0), c(1.0 / 2f64.sqrt(), 0.0)],
        )
        .unwrap();
        let s = apply_pauli(&PauliWord::parse("Z").unwrap(), &plus).unwrap();
        assert_relative_eq!(s.amplitudes()[0].re, 1.0 / 2f64.sqrt());
        assert_relative_eq!(s.amplitudes()[1].re, -1.0 / 2f64.sqrt());
        // Y|0> = i|1>
        let s = apply_pauli(&PauliWord::parse("Y").unwrap(), &StateVector::zero_state(1)).unwrap();
        assert_eq!(s.amplitudes()[1], c(0.0, 1.0));
    }

    #[test]
    fn pauli_application_is_unitary() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..20 {
            let psi = random_state(3, &mut rng);
            let w = random_hamiltonian(3, 1, &mut rng).terms()[0].1.clone();
            let out = apply_pauli(&w, &psi).unwrap();
            assert!((out.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn lcu_identity_and_scaling() {
        let psi = StateVector::zero_state(1);
        let id = OperatorLCU::parse_hamiltonian("1.0 I").unwrap();
        let out = apply_lcu(&id, &psi).unwrap();
        assert_eq!(out.amplitudes()[0], c(1.0, 0.0));
        let z = OperatorLCU::parse_hamiltonian("0.5 Z").unwrap();
        let out = apply_lcu(&z, &psi).unwrap();
        assert_eq!(out.amplitudes()[0], c(0.5, 0.0));
    }

    #[test]
    fn lcu_matches_dense_matrix_product() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..10 {
            let op = random_hamiltonian(3, 6, &mut rng);
            let m = lcu_matrix(&op);
            for basis in 0..8 {
                let psi = StateVector::basis_state(3, basis);
                let fast = apply_lcu(&op, &psi).unwrap();
                let dense = matrix_vector(&m, &psi);
                for i in 0..8 {
                    assert!((fast.amplitudes()[i] - dense.amplitudes()[i]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn inner_product_cases() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let psi = random_state(2, &mut rng);
        assert!((inner(&psi, &psi).unwrap() - c(1.0, 0.0)).norm() < 1e-12);
        let zero = StateVector::basis_state(1, 0);
        let one = StateVector::basis_state(1, 1);
        assert_eq!(inner(&zero, &one).unwrap(), c(0.0, 0.0));
        let sup = StateVector::from_amplitudes(
            1,
            vec![c(1.0 / 2f64.sqrt(), 0.0), c(0.0, 1.0 / 2f64.sqrt())],
        )
        .unwrap();
        assert!((inner(&zero, &sup).unwrap() - c(1.0 / 2f64.sqrt(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn hermiticity_of_lcu_expectations() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for _ in 0..10 {
            let h = random_hamiltonian(3, 5, &mut rng);
            let phi = random_state(3, &mut rng);
            let psi = random_state(3, &mut rng);
            let lhs = inner(&phi, &apply_lcu(&h, &psi).unwrap()).unwrap();
            let rhs = inner(&psi, &apply_lcu(&h, &phi).unwrap()).unwrap().conj();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn diagonalize_z() {
        let op = OperatorLCU::parse_hamiltonian("1.0 Z").unwrap();
        let d = exact_diagonalize(&op).unwrap();
        assert_relative_eq!(d.eigenvalues()[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(d.eigenvalues()[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn diagonalize_xx() {
        let op = OperatorLCU::parse_hamiltonian("0.5 XX").unwrap();
        let d = exact_diagonalize(&op).unwrap();
        let want = [-0.5, -0.5, 0.5, 0.5];
        for (got, want) in d.eigenvalues().iter().zip(want) {
            assert_relative_eq!(got, &want, epsilon = 1e-12);
        }
    }

    /// Independent oracle: cyclic Jacobi eigensolver for Hermitian
    /// matrices, sharing no code with the nalgebra-backed path.
    fn jacobi_eigenvalues(mut m: DMatrix<Complex64>) -> Vec<f64> {
        let n = m.nrows();
        for _sweep in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += m[(p, q)].norm_sqr();
                }
            }
            if off < 1e-24 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[(p, q)];
                    if apq.norm() < 1e-18 {
                        continue;
                    }
                    let app = m[(p, p)].re;
                    let aqq = m[(q, q)].re;
                    // unitary 2x2 rotation annihilating (p,q)
                    let phase = apq / apq.norm();
                    let theta = 0.5 * (2.0 * apq.norm()).atan2(aqq - app);
                    let (s, cth) = theta.sin_cos();
                    // columns: v_p' = c v_p - s e^{i phi} v_q ; v_q' = s e^{-i phi} v_p + c v_q
                    for r in 0..n {
                        let mrp = m[(r, p)];
                        let mrq = m[(r, q)];
                        m[(r, p)] = cth * mrp - s * phase * mrq;
                        m[(r, q)] = s * phase.conj() * mrp + cth * mrq;
                    }
                    for r in 0..n {
                        let mpr = m[(p, r)];
                        let mqr = m[(q, r)];
                        m[(p, r)] = cth * mpr - s * phase.conj() * mqr;
                        m[(q, r)] = s * phase * mpr + cth * mqr;
                    }
                }
            }
        }
        let mut evs: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
        evs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        evs
    }

    #[test]
    fn diagonalize_matches_jacobi_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..5 {
            let h = random_hamiltonian(3, 8, &mut rng);
            let d = exact_diagonalize(&h).unwrap();
            let oracle = jacobi_eigenvalues(lcu_matrix(&h));
            for (a, b) in d.eigenvalues().iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn diagonalize_residual_and_orthonormality() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let h = random_hamiltonian(3, 8, &mut rng);
        let d = exact_diagonalize(&h).unwrap();
        for (e, v) in d.eigenvalues().iter().zip(d.eigenvectors()) {
            let hv = apply_lcu(&h, v).unwrap();
            for i in 0..v.dim() {
                assert!((hv.amplitudes()[i] - e * v.amplitudes()[i]).norm() < 1e-9);
            }
        }
        for a in 0..d.len() {
            for b in 0..d.len() {
                let ip = inner(&d.eigenvectors()[a], &d.eigenvectors()[b]).unwrap();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((ip - c(want, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn diagonalize_guards() {
        let op = OperatorLCU::new(
            1,
            vec![(c(0.0, 1.0), PauliWord::parse("X").unwrap())],
        )
        .unwrap();
        assert!(matches!(exact_diagonalize(&op), Err(Error::NonHermitian)));
    }

    #[test]
    fn parseval_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let h = random_hamiltonian(3, 6, &mut rng);
        let d = exact_diagonalize(&h).unwrap();
        let psi = random_state(3, &mut rng);
        let total: f64 = d.overlaps(&psi).unwrap().iter().map(|o| o.norm_sqr()).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn sector_ground_state_of_number_operator() {
        let n_op = number_operator(2);
        let d = exact_diagonalize(&n_op).unwrap();
        let (e, v) = ground_state_in_sector(&d, 0, 2).unwrap();
        assert_relative_eq!(e, 0.0, epsilon = 1e-10);
        assert!((v.amplitudes()[0].norm() - 1.0).abs() < 1e-10);
        let (e, v) = ground_state_in_sector(&d, 1, 2).unwrap();
        assert_relative_eq!(e, 1.0, epsilon = 1e-10);
        // state lives in span{|01>, |10>}
        assert!(v.amplitudes()[0].norm() < 1e-8);
        assert!(v.amplitudes()[3].norm() < 1e-8);
        assert_relative_eq!(v.number_expectation(), 1.0, epsilon = 1e-8);
        assert!(matches!(
            ground_state_in_sector(&d, 5, 2),
            Err(Error::SectorNotFound { n_particles: 5 })
        ));
    }

    fn random_number_conserving(n: usize, rng: &mut impl Rng) -> OperatorLCU {
        // diagonal + hopping pairs, all number conserving
        let mut terms: Vec<(Complex64, PauliWord)> = Vec::new();
        for j in 0..n {
            let mut axes = vec![crate::pauli::PauliOp::I; n];
            axes[j] = crate::pauli::PauliOp::Z;
            terms.push((c(rng.gen_range(-1.0..1.0), 0.0), PauliWord::new(axes)));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(0.5) {
                    continue;
                }
                let t = rng.gen_range(-0.5..0.5);
                let mut ax = vec![crate::pauli::PauliOp::I; n];
                for a in ax.iter_mut().take(j).skip(i + 1) {
                    *a = crate::pauli::PauliOp::Z;
                }
                let mut x = ax.clone();
                x[i] = crate::pauli::PauliOp::X;
                x[j] = crate::pauli::PauliOp::X;
                let mut y = ax;
                y[i] = crate::pauli::PauliOp::Y;
                y[j] = crate::pauli::PauliOp::Y;
                terms.push((c(0.5 * t, 0.0), PauliWord::new(x)));
                terms.push((c(0.5 * t, 0.0), PauliWord::new(y)));
            }
        }
        OperatorLCU::hamiltonian(n, terms).unwrap()
    }

    #[test]
    fn sector_ground_state_matches_brute_force() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for _ in 0..5 {
            let h = random_number_conserving(4, &mut rng);
            let d = exact_diagonalize(&h).unwrap();
            let (e, v) = ground_state_in_sector(&d, 2, 4).unwrap();
            assert_relative_eq!(v.number_expectation(), 2.0, epsilon = 1e-8);
            // brute force: lowest eigenvalue whose eigenvector has <N> ~ 2
            let brute = d
                .eigenvalues()
                .iter()
                .zip(d.eigenvectors())
                .filter(|(_, v)| (v.number_expectation() - 2.0).abs() < 1e-6)
                .map(|(e, _)| *e)
                .fold(f64::INFINITY, f64::min);
            assert_relative_eq!(e, brute, epsilon = 1e-8);
        }
    }

    #[test]
    fn jw_anticommutation_on_statevectors() {
        // {a_i, a_j^dag} = delta_ij, {a_i, a_j} = 0, checked on all basis states
        for n in 1..=4 {
            for i in 0..n {
                for j in 0..n {
                    let ai = jw_annihilation(i, n).unwrap();
                    let aj = jw_annihilation(j, n).unwrap();
                    let ajd = jw_creation(j, n).unwrap();
                    for b in 0..(1usize << n) {
                        let psi = StateVector::basis_state(n, b);
                        let t1 = apply_lcu(&ai, &apply_lcu(&ajd, &psi).unwrap()).unwrap();
                        let t2 = apply_lcu(&ajd, &apply_lcu(&ai, &psi).unwrap()).unwrap();
                        let want = if i == j { 1.0 } else { 0.0 };
                        for idx in 0..psi.dim() {
                            let got = t1.amplitudes()[idx] + t2.amplitudes()[idx];
                            let expect = want * psi.amplitudes()[idx];
                            assert!((got - expect).norm() < 1e-12);
                        }
                        let s1 = apply_lcu(&ai, &apply_lcu(&aj, &psi).unwrap()).unwrap();
                        let s2 = apply_lcu(&aj, &apply_lcu(&ai, &psi).unwrap()).unwrap();
                        for idx in 0..psi.dim() {
                            assert!((s1.amplitudes()[idx] + s2.amplitudes()[idx]).norm() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn annihilation_is_nilpotent() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let psi = random_state(3, &mut rng);
        let a1 = jw_annihilation(1, 3).unwrap();
        let once = apply_lcu(&a1, &psi).unwrap();
        let twice = apply_lcu(&a1, &once).unwrap();
        assert!(twice.norm() < 1e-13);
    }

    #[test]
    fn parse_state_cases() {
        let (s, norm) = parse_state("1|10⟩", 2).unwrap();
        assert_relative_eq!(norm, 1.0);
        assert!((s.amplitudes()[0b10].norm() - 1.0).abs() < 1e-12);

        let (s, norm) = parse_state("0.70710678|1100> + 0.70710678|0011>", 4).unwrap();
        assert!((norm - 1.0).abs() < 1e-8);
        assert!(s.is_normalized());
        assert_relative_eq!(s.amplitudes()[0b1100].re, 1.0 / 2f64.sqrt(), epsilon = 1e-8);
        assert_relative_eq!(s.amplitudes()[0b0011].re, 1.0 / 2f64.sqrt(), epsilon = 1e-8);

        let (s, _) = parse_state("(0,1)|1>", 1).unwrap();
        assert!((s.amplitudes()[1] - c(0.0, 1.0)).norm() < 1e-12);

        // subtraction and scientific notation
        let (s, _) = parse_state("1e0|0> - 1|1>", 1).unwrap();
        assert!(s.amplitudes()[0].re > 0.0);
        assert!(s.amplitudes()[1].re < 0.0);

        assert!(parse_state("0.5|10>", 3).is_err());
        assert!(parse_state("x|0>", 1).is_err());
        assert!(parse_state("1|0> - 1|0>", 1).is_err()); // zero vector
    }
}
