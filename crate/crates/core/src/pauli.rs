//! Pauli-word algebra and Hamiltonians as linear combinations of unitaries.
//!
//! A Hamiltonian is a weighted sum of Pauli words,
//!
//!   H = Σ_j  h_j · P_j,     h_j ∈ ℝ,
//!
//! where each P_j is a tensor product of single-qubit Pauli operators.
//! Qubit 0 is the leftmost character of a word's text form, a convention
//! every other module inherits.
//!
//! The module also provides the two spectrum-rescaling protocols used
//! before a Chebyshev expansion (affine min/max scaling and L1 scaling)
//! and the Jordan-Wigner images of single fermionic ladder operators.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Coefficients with magnitude below this are dropped when terms merge.
pub const MERGE_THRESHOLD: f64 = 1e-14;

/// Largest imaginary part tolerated in a Hamiltonian-flagged coefficient.
pub const HAMILTONIAN_IMAG_TOL: f64 = 1e-12;

/// Single-qubit Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PauliOp {
    I,
    X,
    Y,
    Z,
}

impl PauliOp {
    fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(PauliOp::I),
            'X' => Some(PauliOp::X),
            'Y' => Some(PauliOp::Y),
            'Z' => Some(PauliOp::Z),
            _ => None,
        }
    }

    fn to_char(self) -> char {
        match self {
            PauliOp::I => 'I',
            PauliOp::X => 'X',
            PauliOp::Y => 'Y',
            PauliOp::Z => 'Z',
        }
    }
}

/// A tensor product of Pauli operators, one per qubit.
///
/// Qubit 0 is the leftmost entry.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliWord {
    axes: Vec<PauliOp>,
}

impl PauliWord {
    /// The all-identity word on `n_qubits` qubits.
    pub fn identity(n_qubits: usize) -> Self {
        Self {
            axes: vec![PauliOp::I; n_qubits],
        }
    }

    /// Build from explicit per-qubit operators.
    pub fn new(axes: Vec<PauliOp>) -> Self {
        Self { axes }
    }

    /// Parse a text form such as `XXYZ`.
    pub fn parse(s: &str) -> Result<Self> {
        let axes = s
            .chars()
            .map(|c| {
                PauliOp::from_char(c)
                    .ok_or_else(|| Error::Malformed(format!("invalid Pauli character '{c}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        if axes.is_empty() {
            return Err(Error::Malformed("empty Pauli word".into()));
        }
        Ok(Self { axes })
    }

    /// Number of qubits the word acts on.
    pub fn len(&self) -> usize {
        self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }

    /// Per-qubit operators, qubit 0 first.
    pub fn axes(&self) -> &[PauliOp] {
        &self.axes
    }

    /// True if every entry is the identity.
    pub fn is_identity(&self) -> bool {
        self.axes.iter().all(|&a| a == PauliOp::I)
    }

    /// Bit masks driving statevector application. Qubit q maps to index
    /// bit (n-1-q), so qubit 0 is the most significant bit.
    ///
    /// Returns `(flip_mask, sign_mask, y_count)`: X/Y flip the bit,
    /// Z/Y contribute a (-1)^bit sign, and each Y contributes a global i.
    pub(crate) fn masks(&self) -> (usize, usize, u32) {
        let n = self.axes.len();
        let mut flip = 0usize;
        let mut sign = 0usize;
        let mut y_count = 0u32;
        for (q, &op) in self.axes.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            match op {
                PauliOp::I => {}
                PauliOp::X => flip |= bit,
                PauliOp::Y => {
                    flip |= bit;
                    sign |= bit;
                    y_count += 1;
                }
                PauliOp::Z => sign |= bit,
            }
        }
        (flip, sign, y_count)
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &a in &self.axes {
            write!(f, "{}", a.to_char())?;
        }
        Ok(())
    }
}

/// A linear combination of Pauli words.
///
/// Terms are merged on construction: words appear at most once, sorted
/// canonically, and coefficients below [`MERGE_THRESHOLD`] are dropped.
/// The `hamiltonian` flag records that every coefficient is real, which
/// is what the recursion and the diagonalizer require.
#[derive(Debug, Clone)]
pub struct OperatorLCU {
    n_qubits: usize,
    terms: Vec<(Complex64, PauliWord)>,
    hamiltonian: bool,
}

impl OperatorLCU {
    /// Build a general (possibly non-Hermitian) operator.
    pub fn new(n_qubits: usize, terms: Vec<(Complex64, PauliWord)>) -> Result<Self> {
        Self::build(n_qubits, terms, false)
    }

    /// Build a Hamiltonian-flagged operator; coefficients must be real
    /// to within [`HAMILTONIAN_IMAG_TOL`].
    pub fn hamiltonian(n_qubits: usize, terms: Vec<(Complex64, PauliWord)>) -> Result<Self> {
        Self::build(n_qubits, terms, true)
    }

    fn build(
        n_qubits: usize,
        terms: Vec<(Complex64, PauliWord)>,
        hamiltonian: bool,
    ) -> Result<Self> {
        let mut merged: BTreeMap<PauliWord, Complex64> = BTreeMap::new();
        for (c, w) in terms {
            if w.len() != n_qubits {
                return Err(Error::DimMismatch {
                    expected: n_qubits,
                    got: w.len(),
                });
            }
            *merged.entry(w).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        let terms: Vec<(Complex64, PauliWord)> = merged
            .into_iter()
            .filter(|(_, c)| c.norm() >= MERGE_THRESHOLD)
            .map(|(w, c)| (c, w))
            .collect();
        if hamiltonian {
            for (c, _) in &terms {
                if c.im.abs() >= HAMILTONIAN_IMAG_TOL {
                    return Err(Error::NonHermitian);
                }
            }
        }
        Ok(Self {
            n_qubits,
            terms,
            hamiltonian,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Merged `(coefficient, word)` pairs in canonical word order.
    pub fn terms(&self) -> &[(Complex64, PauliWord)] {
        &self.terms
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_hamiltonian(&self) -> bool {
        self.hamiltonian
    }

    /// λ = Σ_j |h_j|.
    pub fn l1_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.norm()).sum()
    }

    /// Σ_j |h_j|², the quantity entering the sampling-variance bound.
    pub fn sum_coeff_sq(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.norm_sqr()).sum()
    }

    /// Coefficient of the all-identity word (zero if absent).
    pub fn identity_coeff(&self) -> Complex64 {
        self.terms
            .iter()
            .find(|(_, w)| w.is_identity())
            .map(|(c, _)| *c)
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    /// Parse the one-term-per-line Hamiltonian file format:
    /// `<real-coefficient> <pauli-word>`, `#` starts a comment line,
    /// blank lines are ignored. The qubit count is inferred from the
    /// first term.
    pub fn parse_hamiltonian(text: &str) -> Result<Self> {
        let mut terms: Vec<(Complex64, PauliWord)> = Vec::new();
        let mut n_qubits: Option<usize> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = trimmed.split_whitespace();
            let coeff_tok = fields.next().unwrap();
            let word_tok = fields.next().ok_or_else(|| Error::Parse {
                line,
                msg: "expected `<coefficient> <pauli-word>`".into(),
            })?;
            if let Some(extra) = fields.next() {
                return Err(Error::Parse {
                    line,
                    msg: format!("unexpected trailing field '{extra}'"),
                });
            }
            let coeff: f64 = coeff_tok.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("malformed coefficient '{coeff_tok}'"),
            })?;
            let word = PauliWord::parse(word_tok).map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            })?;
            match n_qubits {
                None => n_qubits = Some(word.len()),
                Some(n) if n != word.len() => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("word length {} != {} from first term", word.len(), n),
                    });
                }
                _ => {}
            }
            terms.push((Complex64::new(coeff, 0.0), word));
        }
        let n_qubits = n_qubits.ok_or_else(|| Error::Parse {
            line: 0,
            msg: "no terms found".into(),
        })?;
        Self::hamiltonian(n_qubits, terms)
    }

    /// Serialize in the Hamiltonian file format (real coefficients).
    pub fn serialize_hamiltonian(&self) -> Result<String> {
        if !self.hamiltonian {
            return Err(Error::NonHermitian);
        }
        let mut out = String::new();
        for (c, w) in &self.terms {
            out.push_str(&format!("{} {}\n", c.re, w));
        }
        Ok(out)
    }
}

/// Parameters of the spectrum map applied before a Chebyshev expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingParams {
    /// H_sc = (H - h_plus) / h_minus with h_plus = (Ẽmax+Ẽmin)/2,
    /// h_minus = (Ẽmax-Ẽmin)/2.
    Spectral { h_plus: f64, h_minus: f64 },
    /// H_sc = H / λ with λ = Σ|h_j|.
    L1 { lambda: f64 },
}

impl ScalingParams {
    /// Map an (possibly complex) energy into scaled units.
    pub fn map_energy(&self, e: Complex64) -> Complex64 {
        match *self {
            ScalingParams::Spectral { h_plus, h_minus } => (e - h_plus) / h_minus,
            ScalingParams::L1 { lambda } => e / lambda,
        }
    }

    /// Exact inverse of [`map_energy`](Self::map_energy).
    pub fn unmap_energy(&self, e_sc: Complex64) -> Complex64 {
        match *self {
            ScalingParams::Spectral { h_plus, h_minus } => e_sc * h_minus + h_plus,
            ScalingParams::L1 { lambda } => e_sc * lambda,
        }
    }

    /// The divisor of the affine map; `(z - H)^-1 = energy_scale^-1 (z_sc - H_sc)^-1`.
    pub fn energy_scale(&self) -> f64 {
        match *self {
            ScalingParams::Spectral { h_minus, .. } => h_minus,
            ScalingParams::L1 { lambda } => lambda,
        }
    }
}

/// Rescale so the spectrum lands inside (-1, 1).
///
/// The caller supplies eigenvalue bounds; each bound is widened outward
/// by `margin * (e_max - e_min) / 2` so that with `margin > 0` every
/// eigenvalue is strictly interior. The identity-word coefficient
/// absorbs the shift, keeping the result a plain Pauli sum.
pub fn scale_spectral(
    op: &OperatorLCU,
    e_min: f64,
    e_max: f64,
    margin: f64,
) -> Result<(OperatorLCU, ScalingParams)> {
    if e_max <= e_min {
        return Err(Error::InvalidArgument(format!(
            "e_max ({e_max}) must exceed e_min ({e_min})"
        )));
    }
    if margin < 0.0 {
        return Err(Error::InvalidArgument("margin must be >= 0".into()));
    }
    let pad = margin * (e_max - e_min) / 2.0;
    let h_plus = (e_max + e_min) / 2.0;
    let h_minus = (e_max - e_min) / 2.0 + pad;
    let mut terms: Vec<(Complex64, PauliWord)> = Vec::with_capacity(op.terms.len() + 1);
    let mut saw_identity = false;
    for (c, w) in &op.terms {
        if w.is_identity() {
            saw_identity = true;
            terms.push(((c - h_plus) / h_minus, w.clone()));
        } else {
            terms.push((c / h_minus, w.clone()));
        }
    }
    if !saw_identity && h_plus != 0.0 {
        terms.push((
            Complex64::new(-h_plus / h_minus, 0.0),
            PauliWord::identity(op.n_qubits),
        ));
    }
    let scaled = OperatorLCU::build(op.n_qubits, terms, op.hamiltonian)?;
    Ok((scaled, ScalingParams::Spectral { h_plus, h_minus }))
}

/// Rescale by the L1 norm: every coefficient divided by λ = Σ|h_j|.
pub fn scale_l1(op: &OperatorLCU) -> Result<(OperatorLCU, ScalingParams)> {
    let lambda = op.l1_norm();
    if lambda <= 0.0 {
        return Err(Error::ZeroOperator("cannot L1-scale"));
    }
    let terms = op
        .terms
        .iter()
        .map(|(c, w)| (c / lambda, w.clone()))
        .collect();
    let scaled = OperatorLCU::build(op.n_qubits, terms, op.hamiltonian)?;
    Ok((scaled, ScalingParams::L1 { lambda }))
}

fn jw_word(j: usize, n_qubits: usize, tail: PauliOp) -> PauliWord {
    let mut axes = vec![PauliOp::I; n_qubits];
    for axis in axes.iter_mut().take(j) {
        *axis = PauliOp::Z;
    }
    axes[j] = tail;
    PauliWord::new(axes)
}

/// Jordan-Wigner image of the fermion annihilation operator:
/// a_j = Z_0 ⊗ ... ⊗ Z_{j-1} ⊗ (X_j + iY_j)/2.
pub fn jw_annihilation(j: usize, n_qubits: usize) -> Result<OperatorLCU> {
    if j >= n_qubits {
        return Err(Error::InvalidArgument(format!(
            "orbital index {j} out of range for {n_qubits} qubits"
        )));
    }
    OperatorLCU::new(
        n_qubits,
        vec![
            (Complex64::new(0.5, 0.0), jw_word(j, n_qubits, PauliOp::X)),
            (Complex64::new(0.0, 0.5), jw_word(j, n_qubits, PauliOp::Y)),
        ],
    )
}

/// Jordan-Wigner image of the creation operator a_j† (coefficient
/// conjugate of [`jw_annihilation`]).
pub fn jw_creation(j: usize, n_qubits: usize) -> Result<OperatorLCU> {
    if j >= n_qubits {
        return Err(Error::InvalidArgument(format!(
            "orbital index {j} out of range for {n_qubits} qubits"
        )));
    }
    OperatorLCU::new(
        n_qubits,
        vec![
            (Complex64::new(0.5, 0.0), jw_word(j, n_qubits, PauliOp::X)),
            (Complex64::new(0.0, -0.5), jw_word(j, n_qubits, PauliOp::Y)),
        ],
    )
}

/// Total number operator N = Σ_j (I - Z_j)/2.
pub fn number_operator(n_qubits: usize) -> OperatorLCU {
    let mut terms = vec![(
        Complex64::new(n_qubits as f64 / 2.0, 0.0),
        PauliWord::identity(n_qubits),
    )];
    for j in 0..n_qubits {
        let mut axes = vec![PauliOp::I; n_qubits];
        axes[j] = PauliOp::Z;
        terms.push((Complex64::new(-0.5, 0.0), PauliWord::new(axes)));
    }
    OperatorLCU::hamiltonian(n_qubits, terms).expect("number operator is well-formed")
}
