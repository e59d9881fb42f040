//! Operators, state vectors and density matrices tagged with their space.

use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{invalid, numeric, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::space::Space;

pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: Space,
    matrix: CMatrix,
    hermitian: bool,
}

impl Operator {
    pub fn new(space: Space, matrix: CMatrix) -> Result<Self> {
        let dim = space.dim();
        if matrix.shape() != (dim, dim) {
            return Err(invalid("operator matrix does not match the space dimension"));
        }
        Ok(Self { space, matrix, hermitian: false })
    }

    /// Like [`Operator::new`], but the matrix must be Hermitian within 1e-12.
    pub fn hermitian(space: Space, matrix: CMatrix) -> Result<Self> {
        let mut op = Self::new(space, matrix)?;
        let dev = linalg::hermitian_deviation(&op.matrix);
        if dev > HERMITIAN_TOL {
            return Err(invalid("operator expected to be Hermitian is not"));
        }
        op.hermitian = true;
        Ok(op)
    }

    pub fn identity(space: Space) -> Self {
        let dim = space.dim();
        Self { space, matrix: linalg::identity(dim), hermitian: true }
    }

    pub fn zeros(space: Space) -> Self {
        let dim = space.dim();
        Self { space, matrix: CMatrix::zeros(dim, dim), hermitian: true }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn is_hermitian_expected(&self) -> bool {
        self.hermitian
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.adjoint(), hermitian: self.hermitian }
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { space: self.space.clone(), matrix: &self.matrix * z, hermitian: self.hermitian && z.im == 0.0 }
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.space != self.space {
            return Err(invalid("operator and state live on different spaces"));
        }
        Ok(StateVector { space: self.space.clone(), amplitudes: &self.matrix * &psi.amplitudes })
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        assert_eq!(self.space, other.space, "commutator across spaces");
        Self { space: self.space.clone(), matrix: linalg::commutator(&self.matrix, &other.matrix), hermitian: false }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        linalg::frobenius(&self.matrix)
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operator sum across spaces");
        Operator { space: self.space.clone(), matrix: &self.matrix + &rhs.matrix, hermitian: self.hermitian && rhs.hermitian }
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operator difference across spaces");
        Operator { space: self.space.clone(), matrix: &self.matrix - &rhs.matrix, hermitian: self.hermitian && rhs.hermitian }
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operator product across spaces");
        Operator { space: self.space.clone(), matrix: &self.matrix * &rhs.matrix, hermitian: false }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator { space: self.space.clone(), matrix: -&self.matrix, hermitian: self.hermitian }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: Space,
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(space: Space, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(invalid("state vector length does not match the space dimension"));
        }
        Ok(Self { space, amplitudes })
    }

    /// Basis vector `|index⟩`.
    pub fn basis(space: Space, index: usize) -> Result<Self> {
        let dim = space.dim();
        if index >= dim {
            return Err(invalid("basis index out of range"));
        }
        let mut amplitudes = CVector::zeros(dim);
        amplitudes[index] = linalg::ONE;
        Ok(Self { space, amplitudes })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(numeric("cannot normalize a zero or non-finite vector"));
        }
        Ok(Self { space: self.space.clone(), amplitudes: &self.amplitudes / C64::new(n, 0.0) })
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.space != other.space {
            return Err(invalid("inner product across spaces"));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { space: self.space.clone(), amplitudes: &self.amplitudes * z }
    }

    pub fn add(&self, other: &StateVector) -> Result<Self> {
        if self.space != other.space {
            return Err(invalid("sum of states across spaces"));
        }
        Ok(Self { space: self.space.clone(), amplitudes: &self.amplitudes + &other.amplitudes })
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix { space: self.space.clone(), matrix: &self.amplitudes * self.amplitudes.adjoint() }
    }
}

/// Tolerances of [`DensityMatrix::validate`].
pub const DENSITY_HERMITIAN_TOL: f64 = 1e-10;
pub const DENSITY_TRACE_TOL: f64 = 1e-8;
pub const DENSITY_MIN_EIGENVALUE: f64 = -1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: Space,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(space: Space, matrix: CMatrix) -> Result<Self> {
        let dim = space.dim();
        if matrix.shape() != (dim, dim) {
            return Err(invalid("density matrix does not match the space dimension"));
        }
        Ok(Self { space, matrix })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn matrix_mut(&mut self) -> &mut CMatrix {
        &mut self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.matrix)
    }

    pub fn hermitize(&mut self) {
        linalg::hermitize(&mut self.matrix);
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.matrix)
    }

    /// Check Hermiticity, unit trace and positivity.
    pub fn validate(&self) -> Result<()> {
        if linalg::hermitian_deviation(&self.matrix) > DENSITY_HERMITIAN_TOL {
            return Err(numeric("density matrix is not Hermitian"));
        }
        let tr = self.trace();
        if (tr - linalg::ONE).norm() > DENSITY_TRACE_TOL {
            return Err(numeric("density matrix trace differs from one"));
        }
        if self.min_eigenvalue() < DENSITY_MIN_EIGENVALUE {
            return Err(numeric("density matrix has a negative eigenvalue"));
        }
        Ok(())
    }

    /// `tr(Oρ)`
    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.space() != &self.space {
            return Err(invalid("expectation value across spaces"));
        }
        let m = op.matrix();
        let n = self.dim();
        let mut acc = linalg::ZERO;
        for j in 0..n {
            for i in 0..n {
                acc += m[(i, j)] * self.matrix[(j, i)];
            }
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_constructor_rejects_non_hermitian() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = linalg::ONE;
        assert!(Operator::hermitian(Space::Mode(1), m.clone()).is_err());
        m[(1, 0)] = linalg::ONE;
        assert!(Operator::hermitian(Space::Mode(1), m).unwrap().is_hermitian_expected());
    }

    #[test]
    fn projector_is_a_valid_state() {
        let psi = StateVector::new(Space::Mode(1), CVector::from_vec(alloc::vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)])).unwrap();
        let rho = psi.projector();
        rho.validate().unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        assert!(Operator::new(Space::Mode(2), CMatrix::zeros(2, 2)).is_err());
        assert!(StateVector::basis(Space::Mode(2), 3).is_err());
    }
}
