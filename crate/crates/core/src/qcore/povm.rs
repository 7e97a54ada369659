//! POVMs and the equal-success unambiguous state discrimination measurement.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{gram_matrix, hermitian_eigenvalues, LinearOperator, QcoreError, StateVector};
use super::{GRAM_SINGULAR_TOL, PSD_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutcomeLabel {
    /// Identifies the input state with this index.
    Conclusive(usize),
    Inconclusive,
}

/// Worst-case deviations from the POVM axioms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PovmResiduals {
    pub hermiticity: f64,
    /// Most negative eigenvalue over all elements, or 0.
    pub negativity: f64,
    /// Largest entry of `|Σ E - I|`.
    pub completeness: f64,
}

impl PovmResiduals {
    pub fn within(&self, tol: f64) -> bool {
        self.hermiticity <= tol && self.negativity <= tol && self.completeness <= tol
    }
}

/// Positive operators summing to the identity.
#[derive(Debug, Clone)]
pub struct Povm {
    elements: Vec<(OutcomeLabel, LinearOperator)>,
}

impl Povm {
    /// Validates hermiticity, positivity and completeness at [`PSD_TOL`].
    pub fn new(elements: Vec<(OutcomeLabel, LinearOperator)>) -> Result<Self, QcoreError> {
        let Some((_, first)) = elements.first() else {
            return Err(QcoreError::Empty);
        };
        let d = first.dim();
        if let Some((_, bad)) = elements.iter().find(|(_, e)| e.dim() != d) {
            return Err(QcoreError::DimensionMismatch { left: d, right: bad.dim() });
        }
        let povm = Povm { elements };
        let r = povm.residuals();
        if !r.within(PSD_TOL) {
            return Err(QcoreError::InvalidPovm(format!(
                "hermiticity {:e}, negativity {:e}, completeness {:e}",
                r.hermiticity, r.negativity, r.completeness
            )));
        }
        Ok(povm)
    }

    pub fn elements(&self) -> &[(OutcomeLabel, LinearOperator)] {
        &self.elements
    }

    pub fn element(&self, label: OutcomeLabel) -> Option<&LinearOperator> {
        self.elements.iter().find(|(l, _)| *l == label).map(|(_, e)| e)
    }

    pub fn residuals(&self) -> PovmResiduals {
        let d = self.elements[0].1.dim();
        let mut sum = DMatrix::<Complex64>::zeros(d, d);
        let mut hermiticity = 0.0f64;
        let mut negativity = 0.0f64;
        for (_, e) in &self.elements {
            hermiticity = hermiticity.max(e.hermiticity_residual());
            let min = hermitian_eigenvalues(e.matrix())[0];
            negativity = negativity.max(-min);
            sum += e.matrix();
        }
        let id = DMatrix::<Complex64>::identity(d, d);
        let completeness = (sum - id).iter().map(|z| z.norm()).fold(0.0, f64::max);
        PovmResiduals {
            hermiticity,
            negativity,
            completeness,
        }
    }

    /// `<psi|E_label|psi>`.
    pub fn probability(&self, label: OutcomeLabel, state: &StateVector) -> Result<f64, QcoreError> {
        match self.element(label) {
            Some(e) => Ok(e.expectation(state)?.re),
            None => Ok(0.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct UsdPovm {
    pub povm: Povm,
    /// Success probability, identical for every input state.
    pub p_ok: f64,
    /// Gram eigenvalues of the inputs, ascending.
    pub gram_eigenvalues: Vec<f64>,
}

/// Equal-success USD measurement for linearly independent pure states.
///
/// With `G` the Gram matrix and `|φ_i> = Σ_j (G⁻¹)_{ji} |ψ_j>` the reciprocal
/// vectors (`<φ_i|ψ_j> = δ_ij`), the conclusive elements are
/// `E_i = q |φ_i><φ_i|` with `q = λ_min(G)`. This is the largest `q` for
/// which `I - Σ E_i` stays positive semidefinite, since on the span of the
/// inputs `Σ_i |φ_i><φ_i|` has spectrum `1/λ(G)`.
pub fn build_usd_povm(states: &[StateVector]) -> Result<UsdPovm, QcoreError> {
    let g = gram_matrix(states)?;
    let gram_eigenvalues = hermitian_eigenvalues(&g);
    let q = gram_eigenvalues[0];
    if q <= GRAM_SINGULAR_TOL {
        return Err(QcoreError::LinearlyDependent(q));
    }
    let g_inv = g
        .clone()
        .cholesky()
        .ok_or(QcoreError::LinearlyDependent(q))?
        .inverse();

    let d = states[0].dim();
    let k = states.len();
    let mut elements = Vec::with_capacity(k + 1);
    let mut conclusive_sum = DMatrix::<Complex64>::zeros(d, d);
    for i in 0..k {
        let mut dual = vec![Complex64::new(0.0, 0.0); d];
        for (j, psi) in states.iter().enumerate() {
            let c = g_inv[(j, i)];
            for (slot, a) in dual.iter_mut().zip(psi.amplitudes()) {
                *slot += c * a;
            }
        }
        let e = DMatrix::from_fn(d, d, |r, c| dual[r] * dual[c].conj() * q);
        conclusive_sum += &e;
        elements.push((OutcomeLabel::Conclusive(i), LinearOperator::new(e)?));
    }
    let id = DMatrix::<Complex64>::identity(d, d);
    elements.push((OutcomeLabel::Inconclusive, LinearOperator::new(id - conclusive_sum)?));

    Ok(UsdPovm {
        povm: Povm::new(elements)?,
        p_ok: q,
        gram_eigenvalues,
    })
}
