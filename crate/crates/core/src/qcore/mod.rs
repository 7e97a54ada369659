//! Dense few-qubit linear algebra and the quantum objects the protocols use:
//! the four BB84 states, equator states, unambiguous-discrimination filters,
//! Pauli measurements and USD POVMs.

mod povm;
mod state;

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub use povm::{build_usd_povm, OutcomeLabel, Povm, PovmResiduals, UsdPovm};
pub use state::{overlap, tensor_power, LinearOperator, StateVector, MAX_QUBITS, NORM_TOL};

/// Hermiticity / positivity / completeness tolerance for POVM elements.
pub const PSD_TOL: f64 = 1e-10;

/// Smallest Gram eigenvalue accepted as linearly independent.
pub const GRAM_SINGULAR_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QcoreError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("length {0} is not a power of two >= 2")]
    NotPowerOfTwo(usize),
    #[error("{0} qubits exceeds the dense limit")]
    TooManyQubits(u32),
    #[error("cannot normalize a zero or non-finite vector")]
    ZeroNorm,
    #[error("expected a single-qubit state, got {0} qubits")]
    NotSingleQubit(u32),
    #[error("tensor power needs at least one factor")]
    ZeroPower,
    #[error("states are indistinguishable (overlap {0}); filter undefined")]
    DegenerateInput(f64),
    #[error("states are linearly dependent (smallest Gram eigenvalue {0:e})")]
    LinearlyDependent(f64),
    #[error("empty state list")]
    Empty,
    #[error("not a valid POVM: {0}")]
    InvalidPovm(String),
}

/// Pauli measurement axis; also the BB84 basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Z,
}

/// Eigenvalue sign of a Pauli observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// The four protocol states `|±x>`, `|±z>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateLabel {
    PlusX,
    MinusX,
    PlusZ,
    MinusZ,
}

impl StateLabel {
    pub const ALL: [StateLabel; 4] = [
        StateLabel::PlusX,
        StateLabel::MinusX,
        StateLabel::PlusZ,
        StateLabel::MinusZ,
    ];

    pub fn new(axis: Axis, sign: Sign) -> StateLabel {
        match (axis, sign) {
            (Axis::X, Sign::Plus) => StateLabel::PlusX,
            (Axis::X, Sign::Minus) => StateLabel::MinusX,
            (Axis::Z, Sign::Plus) => StateLabel::PlusZ,
            (Axis::Z, Sign::Minus) => StateLabel::MinusZ,
        }
    }

    pub fn axis(self) -> Axis {
        match self {
            StateLabel::PlusX | StateLabel::MinusX => Axis::X,
            StateLabel::PlusZ | StateLabel::MinusZ => Axis::Z,
        }
    }

    pub fn sign(self) -> Sign {
        match self {
            StateLabel::PlusX | StateLabel::PlusZ => Sign::Plus,
            StateLabel::MinusX | StateLabel::MinusZ => Sign::Minus,
        }
    }

    /// Set-encoding bit: `|±x>` codes 0, `|±z>` codes 1.
    pub fn bit(self) -> u8 {
        match self.axis() {
            Axis::X => 0,
            Axis::Z => 1,
        }
    }
}

/// Real-amplitude eigenstates: `|+x> = (1,1)/√2`, `|-x> = (1,-1)/√2`,
/// `|+z> = (1,0)`, `|-z> = (0,1)`.
pub fn qubit_state(label: StateLabel) -> StateVector {
    let amps: [f64; 2] = match label {
        StateLabel::PlusX => [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
        StateLabel::MinusX => [FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
        StateLabel::PlusZ => [1.0, 0.0],
        StateLabel::MinusZ => [0.0, 1.0],
    };
    StateVector::from_real(&amps).expect("fixed single-qubit amplitudes")
}

/// `(1, e^{iφ})/√2`, a state on the equator of the Poincaré sphere.
pub fn equator_state(phi: f64) -> StateVector {
    StateVector::from_amplitudes(vec![
        Complex64::new(FRAC_1_SQRT_2, 0.0),
        Complex64::from_polar(FRAC_1_SQRT_2, phi),
    ])
    .expect("unit-modulus amplitudes")
}

/// Pair of equator states at `±β` with `|<s0|s1>| = cos β = chi`.
pub fn equator_pair(chi: f64) -> (StateVector, StateVector) {
    let beta = chi.clamp(-1.0, 1.0).acos();
    (equator_state(beta), equator_state(-beta))
}

/// Unambiguous-discrimination filter for two single-qubit states.
///
/// `F = (|+x><s1⊥| + |-x><s0⊥|) / √(1+χ)` maps `s0` onto `|+x>` and `s1`
/// onto `|-x>`; a subsequent σx measurement then identifies the input. Either
/// input passes with probability `1 - χ`, and `F†F ⪯ I`.
pub fn build_filter(s0: &StateVector, s1: &StateVector) -> Result<LinearOperator, QcoreError> {
    s0.require_single_qubit()?;
    s1.require_single_qubit()?;
    let chi = overlap(s0, s1)?.norm();
    if chi >= 1.0 - 1e-12 {
        return Err(QcoreError::DegenerateInput(chi));
    }
    let plus_x = qubit_state(StateLabel::PlusX);
    let minus_x = qubit_state(StateLabel::MinusX);
    let s0_perp = s0.orthogonal_complement()?;
    let s1_perp = s1.orthogonal_complement()?;
    let scale = 1.0 / (1.0 + chi).sqrt();
    let m = DMatrix::from_fn(2, 2, |i, j| {
        (plus_x.amplitudes()[i] * s1_perp.amplitudes()[j].conj()
            + minus_x.amplitudes()[i] * s0_perp.amplitudes()[j].conj())
            * scale
    });
    LinearOperator::new(m)
}

/// Born-rule probability of outcome +1 when measuring `axis` on a qubit.
pub fn pauli_plus_probability(state: &StateVector, axis: Axis) -> Result<f64, QcoreError> {
    state.require_single_qubit()?;
    let eigen = qubit_state(StateLabel::new(axis, Sign::Plus));
    Ok(overlap(&eigen, state)?.norm_sqr().clamp(0.0, 1.0))
}

/// Projective σx or σz measurement. Outcome +1 iff `rand < p(+1)`; the
/// post-measurement state is the matching eigenstate.
pub fn measure_pauli(
    state: &StateVector,
    axis: Axis,
    rand: f64,
) -> Result<(Sign, StateVector), QcoreError> {
    let p_plus = pauli_plus_probability(state, axis)?;
    let sign = if rand < p_plus { Sign::Plus } else { Sign::Minus };
    Ok((sign, qubit_state(StateLabel::new(axis, sign))))
}

/// `G_ij = <s_i|s_j>`.
pub fn gram_matrix(states: &[StateVector]) -> Result<DMatrix<Complex64>, QcoreError> {
    let Some(first) = states.first() else {
        return Err(QcoreError::Empty);
    };
    if let Some(bad) = states.iter().find(|s| s.dim() != first.dim()) {
        return Err(QcoreError::DimensionMismatch {
            left: first.dim(),
            right: bad.dim(),
        });
    }
    let k = states.len();
    let mut g = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            g[(i, j)] = overlap(&states[i], &states[j])?;
        }
    }
    Ok(g)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    // Symmetrize first so round-off in the input cannot leak into the solver.
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut values: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}
