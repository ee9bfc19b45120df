use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, nearest_unitary, CMat, C64, ONE};

/// Unitarity tolerance for gates read from rounded tables.
pub const UNITARY_TOL: f64 = 1e-8;

/// A target unitary on one or two qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitaryGate {
    n_qubits: usize,
    matrix: CMat,
}

impl UnitaryGate {
    pub fn new(matrix: CMat) -> Result<Self> {
        let n_qubits = qubits_for_dim(matrix.rows())
            .filter(|_| matrix.is_square())
            .ok_or_else(|| {
                Error::DimensionMismatch(format!(
                    "gate must be 2^n x 2^n, got {}x{}",
                    matrix.rows(),
                    matrix.cols()
                ))
            })?;
        let defect = matrix.unitarity_defect();
        if defect > UNITARY_TOL {
            return Err(Error::NotUnitary(defect));
        }
        Ok(Self { n_qubits, matrix })
    }

    /// Accepts a matrix that is unitary only up to `tol` (e.g. four-decimal
    /// tables) and replaces it with its polar-decomposition unitary.
    pub fn from_rounded(matrix: CMat, tol: f64) -> Result<Self> {
        let defect = matrix.unitarity_defect();
        if defect > tol {
            return Err(Error::NotUnitary(defect));
        }
        Self::new(nearest_unitary(&matrix)?)
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            matrix: CMat::identity(1 << n_qubits),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }
}

pub(crate) fn qubits_for_dim(dim: usize) -> Option<usize> {
    (dim >= 2 && dim.is_power_of_two()).then(|| dim.trailing_zeros() as usize)
}

fn rounded_1q(entries: [(f64, f64); 4]) -> UnitaryGate {
    let data = entries.iter().map(|&(re, im)| c(re, im)).collect();
    UnitaryGate::from_rounded(CMat::from_vec(2, 2, data).unwrap(), 1e-3)
        .expect("tabulated gate is unitary to four decimals")
}

/// First demonstration gate, from its four-decimal table.
pub fn u_a() -> UnitaryGate {
    rounded_1q([
        (-0.7071, 0.3536),
        (0.0, 0.6124),
        (0.0, 0.6124),
        (-0.7071, -0.3536),
    ])
}

/// Second demonstration gate, from its four-decimal table.
pub fn u_b() -> UnitaryGate {
    rounded_1q([
        (-0.1228, -0.2418),
        (-0.6964, 0.6645),
        (0.6964, 0.6645),
        (-0.1228, 0.2418),
    ])
}

/// CNOT with qubit 1 (most significant) as control.
pub fn cnot() -> UnitaryGate {
    let mut m = CMat::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    UnitaryGate::new(m).unwrap()
}

/// Random single-qubit unitary from three Euler angles and a global phase.
pub fn euler_1q(alpha: f64, beta: f64, gamma: f64, phase: f64) -> UnitaryGate {
    let g = C64::from_polar(1.0, phase);
    let (cb, sb) = ((beta / 2.0).cos(), (beta / 2.0).sin());
    let m = CMat::from_vec(
        2,
        2,
        vec![
            g * C64::from_polar(cb, -(alpha + gamma) / 2.0),
            g * C64::from_polar(-sb, -(alpha - gamma) / 2.0),
            g * C64::from_polar(sb, (alpha - gamma) / 2.0),
            g * C64::from_polar(cb, (alpha + gamma) / 2.0),
        ],
    )
    .unwrap();
    UnitaryGate::new(m).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_gates_match_closed_form() {
        // U_a has exact entries -1/sqrt2 + i/(2 sqrt2) and i sqrt6/4.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = c(-s, s / 2.0);
        let b = c(0.0, 6f64.sqrt() / 4.0);
        let exact = CMat::from_vec(2, 2, vec![a, b, b, a.conj()]).unwrap();
        assert!(u_a().matrix().max_abs_diff(&exact) < 1e-4);
        assert!(u_b().matrix().unitarity_defect() < 1e-12);
    }

    #[test]
    fn rejects_non_unitary_and_bad_shapes() {
        assert!(matches!(
            UnitaryGate::new(CMat::from_real_diag(&[1.0, 0.5])),
            Err(Error::NotUnitary(_))
        ));
        assert!(UnitaryGate::new(CMat::identity(3)).is_err());
        assert!(UnitaryGate::from_rounded(CMat::from_real_diag(&[1.0, 0.9]), 1e-3).is_err());
    }

    #[test]
    fn cnot_is_self_inverse() {
        let g = cnot();
        assert_eq!(&g.matrix * &g.matrix, CMat::identity(4));
        assert_eq!(g.n_qubits(), 2);
    }
}
