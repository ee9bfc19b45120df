use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::linalg::{c, eig_hermitian, tensor_vec, vdot, CMat, C64, ONE, TOL, ZERO};

/// A valid density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMat,
}

impl DensityMatrix {
    pub fn new(matrix: CMat) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidState(format!(
                "{}x{} is not square",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let herm = matrix.hermitian_defect();
        if herm > TOL {
            return Err(Error::InvalidState(format!("hermiticity defect {herm:e}")));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let matrix = matrix.hermitian_part();
        let min = eig_hermitian(&matrix)?
            .values
            .last()
            .copied()
            .unwrap_or(0.0);
        if min < -TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    /// `|psi><psi|` for a normalized ket.
    pub fn pure(ket: &[C64]) -> Result<Self> {
        let norm = crate::linalg::vnorm(ket);
        if (norm - 1.0).abs() > TOL {
            return Err(Error::InvalidState(format!("ket norm {norm}")));
        }
        Ok(Self {
            matrix: CMat::projector(ket),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMat::identity(dim).scale_re(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    /// `<psi|rho|psi>`
    pub fn overlap(&self, ket: &[C64]) -> f64 {
        vdot(ket, &self.matrix.apply(ket).expect("dimension")).re
    }

    /// `Tr(E rho)` for an effect operator.
    pub fn expectation(&self, effect: &CMat) -> Result<f64> {
        if effect.rows() != self.dim() || !effect.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "effect {}x{} on dimension {}",
                effect.rows(),
                effect.cols(),
                self.dim()
            )));
        }
        Ok(effect.trace_product(&self.matrix).re)
    }
}

/// The six single-qubit Pauli eigenstates.
pub mod kets {
    use super::*;

    pub fn zero() -> Vec<C64> {
        vec![ONE, ZERO]
    }

    pub fn one() -> Vec<C64> {
        vec![ZERO, ONE]
    }

    pub fn plus() -> Vec<C64> {
        vec![c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]
    }

    pub fn minus() -> Vec<C64> {
        vec![c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)]
    }

    pub fn plus_i() -> Vec<C64> {
        vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)]
    }

    pub fn minus_i() -> Vec<C64> {
        vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2)]
    }

    /// Eigenstate of Pauli `k` (1 = X, 2 = Y, 3 = Z) with eigenvalue `sign`.
    pub fn pauli_eigenstate(k: usize, sign: i8) -> Vec<C64> {
        match (k, sign >= 0) {
            (1, true) => plus(),
            (1, false) => minus(),
            (2, true) => plus_i(),
            (2, false) => minus_i(),
            (3, true) => zero(),
            (3, false) => one(),
            _ => panic!("no eigenstate for pauli index {k}"),
        }
    }

    pub fn label(k: usize, sign: i8) -> &'static str {
        match (k, sign >= 0) {
            (1, true) => "+",
            (1, false) => "-",
            (2, true) => "+i",
            (2, false) => "-i",
            (3, true) => "0",
            (3, false) => "1",
            _ => panic!("no eigenstate for pauli index {k}"),
        }
    }

    pub fn product(kets: &[Vec<C64>]) -> Vec<C64> {
        kets.iter().fold(vec![ONE], |acc, k| tensor_vec(&acc, k))
    }

    /// `sum_i |ii> / sqrt(d)`
    pub fn max_entangled(dim: usize) -> Vec<C64> {
        let amp = c(1.0 / (dim as f64).sqrt(), 0.0);
        let mut v = vec![ZERO; dim * dim];
        for i in 0..dim {
            v[i * dim + i] = amp;
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_states() {
        assert!(DensityMatrix::new(CMat::identity(2)).is_err());
        assert!(DensityMatrix::new(CMat::from_real_diag(&[1.5, -0.5])).is_err());
        assert!(DensityMatrix::pure(&[ONE, ONE]).is_err());
        assert!(DensityMatrix::new(CMat::from_real_diag(&[0.25, 0.75])).is_ok());
    }

    #[test]
    fn eigenstates_are_normalized() {
        for k in 1..=3 {
            for s in [1, -1] {
                let v = kets::pauli_eigenstate(k, s);
                assert!((crate::linalg::vnorm(&v) - 1.0).abs() < 1e-15);
            }
        }
    }
}
