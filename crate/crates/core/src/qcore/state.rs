//! Pure states and operators on a handful of qubits.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::QcoreError;

/// Hard limit on register size. Every analysis here stays at or below six
/// photons, i.e. a 64-dimensional space.
pub const MAX_QUBITS: u32 = 6;

/// Tolerance on the norm of a constructed state.
pub const NORM_TOL: f64 = 1e-12;

/// Normalized pure state of `n` qubits, `2^n` complex amplitudes.
///
/// The first amplitude is the `|0...0>` component, i.e. `<+z|` on a single
/// qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    qubits: u32,
}

impl StateVector {
    /// Builds a state from raw amplitudes, normalizing them.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self, QcoreError> {
        let qubits = qubit_count(amplitudes.len())?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(QcoreError::ZeroNorm);
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(Self { amplitudes, qubits })
    }

    /// Real-amplitude shorthand for [`StateVector::from_amplitudes`].
    pub fn from_real(amplitudes: &[f64]) -> Result<Self, QcoreError> {
        Self::from_amplitudes(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn qubits(&self) -> u32 {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `|psi><psi|` as a dense matrix.
    pub fn projector(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.amplitudes[i] * self.amplitudes[j].conj())
    }

    pub(crate) fn require_single_qubit(&self) -> Result<(), QcoreError> {
        if self.qubits != 1 {
            return Err(QcoreError::NotSingleQubit(self.qubits));
        }
        Ok(())
    }

    /// The state orthogonal to a single-qubit state, `(a, b) -> (-b*, a*)`.
    pub fn orthogonal_complement(&self) -> Result<StateVector, QcoreError> {
        self.require_single_qubit()?;
        let (a, b) = (self.amplitudes[0], self.amplitudes[1]);
        Ok(StateVector {
            amplitudes: vec![-b.conj(), a.conj()],
            qubits: 1,
        })
    }
}

fn qubit_count(len: usize) -> Result<u32, QcoreError> {
    if len < 2 || !len.is_power_of_two() {
        return Err(QcoreError::NotPowerOfTwo(len));
    }
    let qubits = len.trailing_zeros();
    if qubits > MAX_QUBITS {
        return Err(QcoreError::TooManyQubits(qubits));
    }
    Ok(qubits)
}

/// Square operator on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    matrix: DMatrix<Complex64>,
    qubits: u32,
}

impl LinearOperator {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self, QcoreError> {
        if matrix.nrows() != matrix.ncols() {
            return Err(QcoreError::DimensionMismatch {
                left: matrix.nrows(),
                right: matrix.ncols(),
            });
        }
        let qubits = qubit_count(matrix.nrows())?;
        Ok(Self { matrix, qubits })
    }

    pub fn identity(qubits: u32) -> Result<Self, QcoreError> {
        if qubits == 0 || qubits > MAX_QUBITS {
            return Err(QcoreError::TooManyQubits(qubits));
        }
        let d = 1usize << qubits;
        Ok(Self {
            matrix: DMatrix::identity(d, d),
            qubits,
        })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn qubits(&self) -> u32 {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `A|psi>`, unnormalized.
    pub fn apply(&self, state: &StateVector) -> Result<Vec<Complex64>, QcoreError> {
        if state.dim() != self.dim() {
            return Err(QcoreError::DimensionMismatch {
                left: self.dim(),
                right: state.dim(),
            });
        }
        let d = self.dim();
        Ok((0..d)
            .map(|i| {
                (0..d)
                    .map(|j| self.matrix[(i, j)] * state.amplitudes()[j])
                    .sum()
            })
            .collect())
    }

    /// `<psi|A|psi>`.
    pub fn expectation(&self, state: &StateVector) -> Result<Complex64, QcoreError> {
        let image = self.apply(state)?;
        Ok(state
            .amplitudes()
            .iter()
            .zip(&image)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn adjoint(&self) -> LinearOperator {
        LinearOperator {
            matrix: self.matrix.adjoint(),
            qubits: self.qubits,
        }
    }

    pub fn compose(&self, rhs: &LinearOperator) -> Result<LinearOperator, QcoreError> {
        if self.dim() != rhs.dim() {
            return Err(QcoreError::DimensionMismatch {
                left: self.dim(),
                right: rhs.dim(),
            });
        }
        Ok(LinearOperator {
            matrix: &self.matrix * &rhs.matrix,
            qubits: self.qubits,
        })
    }
}

/// `<a|b>`, conjugate-linear in `a`.
pub fn overlap(a: &StateVector, b: &StateVector) -> Result<Complex64, QcoreError> {
    if a.dim() != b.dim() {
        return Err(QcoreError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// `s^{⊗m}`.
pub fn tensor_power(state: &StateVector, m: u32) -> Result<StateVector, QcoreError> {
    if m == 0 {
        return Err(QcoreError::ZeroPower);
    }
    let qubits = state.qubits() * m;
    if qubits > MAX_QUBITS {
        return Err(QcoreError::TooManyQubits(qubits));
    }
    let mut amplitudes = state.amplitudes().to_vec();
    for _ in 1..m {
        amplitudes = amplitudes
            .iter()
            .flat_map(|a| state.amplitudes().iter().map(move |b| a * b))
            .collect();
    }
    Ok(StateVector { amplitudes, qubits })
}
