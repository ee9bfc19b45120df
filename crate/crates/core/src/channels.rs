//! Quantum channels in Kraus form, noise models, and the Pauli-basis chi matrix.
//!
//! Chi convention: `Λ(ρ) = Σ_{mn} χ_{mn} P_m ρ P_n` over the unnormalized
//! Pauli strings `P_m ∈ {I, X, Y, Z}^{⊗n}` in tensor-lexicographic order.
//! With this convention `Tr χ = 1` for every trace-preserving map, χ is the
//! channel's Choi state written in the Pauli-string basis, and trace
//! preservation reads `Σ_{mn} χ_{mn} P_n P_m = I`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, eig_hermitian, pauli, psd_sqrt, tensor, tensor_all, CMat, C64, TOL,
};
use crate::verification::{kets, DensityMatrix, UnitaryGate};

/// A CPTP map on `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumChannel {
    n_qubits: usize,
    kraus: Vec<CMat>,
}

impl QuantumChannel {
    pub fn new(kraus: Vec<CMat>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::DimensionMismatch("empty Kraus set".into()))?;
        let dim = first.rows();
        let n_qubits = crate::verification::gates::qubits_for_dim(dim)
            .ok_or_else(|| Error::DimensionMismatch(format!("dimension {dim}")))?;
        if kraus.iter().any(|k| k.rows() != dim || k.cols() != dim) {
            return Err(Error::DimensionMismatch("Kraus operators differ in shape".into()));
        }
        let mut sum = CMat::zeros(dim, dim);
        for k in &kraus {
            sum = &sum + &(&k.adjoint() * k);
        }
        let defect = (&sum - &CMat::identity(dim)).frobenius_norm();
        if defect > TOL {
            return Err(Error::NotTracePreserving(defect));
        }
        Ok(Self { n_qubits, kraus })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            kraus: vec![CMat::identity(1 << n_qubits)],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &QuantumChannel) -> Result<QuantumChannel> {
        if self.n_qubits != next.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "composing {}-qubit and {}-qubit channels",
                self.n_qubits, next.n_qubits
            )));
        }
        let kraus = next
            .kraus
            .iter()
            .flat_map(|b| self.kraus.iter().map(move |a| b * a))
            .filter(|k| k.frobenius_norm() > 1e-14)
            .collect();
        Ok(Self {
            n_qubits: self.n_qubits,
            kraus,
        })
    }

    /// `Σ K X K†` on an arbitrary operator, no validation.
    pub fn apply_operator(&self, x: &CMat) -> CMat {
        let mut out = CMat::zeros(x.rows(), x.cols());
        for k in &self.kraus {
            out = &out + &(&(k * x) * &k.adjoint());
        }
        out
    }

    /// `(Λ ⊗ id)(|Φ⟩⟨Φ|)` with `|Φ⟩ = Σ|ii⟩/√d`, system first.
    pub fn choi_state(&self) -> DensityMatrix {
        let d = self.dim();
        let phi = CMat::projector(&kets::max_entangled(d));
        let id = CMat::identity(d);
        let mut out = CMat::zeros(d * d, d * d);
        for k in &self.kraus {
            let kk = tensor(k, &id);
            out = &out + &kk.conjugate(&phi).unwrap();
        }
        DensityMatrix::new(out).expect("Choi state of a CPTP map")
    }
}

/// `Λ(ρ) = Σ K ρ K†`.
pub fn apply(ch: &QuantumChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != ch.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}-dim state into {}-qubit channel",
            rho.dim(),
            ch.n_qubits
        )));
    }
    DensityMatrix::new(ch.apply_operator(rho.matrix()))
}

/// The ideal channel `ρ ↦ UρU†`.
pub fn unitary_channel(u: &UnitaryGate) -> QuantumChannel {
    QuantumChannel {
        n_qubits: u.n_qubits(),
        kraus: vec![u.matrix().clone()],
    }
}

/// Imperfection applied after the ideal gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum NoiseModel {
    /// `ρ ↦ (1-p)ρ + p I/d`
    Depolarizing { p: f64 },
    /// Independent amplitude damping on every qubit.
    AmplitudeDamping { gamma: f64 },
    /// `exp(-i·angle·(axis·σ)/2)` on every qubit.
    OverRotation { axis: [f64; 3], angle: f64 },
    /// Applied in list order.
    Composite { models: Vec<NoiseModel> },
}

impl NoiseModel {
    pub fn none() -> Self {
        NoiseModel::Depolarizing { p: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::OutOfRange(format!("{name} = {x} not in [0, 1]")))
            }
        };
        match self {
            NoiseModel::Depolarizing { p } => prob("p", *p),
            NoiseModel::AmplitudeDamping { gamma } => prob("gamma", *gamma),
            NoiseModel::OverRotation { axis, angle } => {
                let norm = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > TOL {
                    return Err(Error::OutOfRange(format!("axis norm {norm}")));
                }
                if !angle.is_finite() {
                    return Err(Error::OutOfRange("angle".into()));
                }
                Ok(())
            }
            NoiseModel::Composite { models } => models.iter().try_for_each(NoiseModel::validate),
        }
    }
}

/// Kraus set for a noise model on `n_qubits`.
pub fn make_noise(model: &NoiseModel, n_qubits: usize) -> Result<QuantumChannel> {
    model.validate()?;
    let d = 1usize << n_qubits;
    let kraus = match model {
        NoiseModel::Depolarizing { p } => {
            let d2 = (d * d) as f64;
            let mut ops = vec![CMat::identity(d).scale_re((1.0 - p + p / d2).sqrt())];
            if *p > 0.0 {
                let w = (p / d2).sqrt();
                ops.extend(pauli::basis(n_qubits).into_iter().skip(1).map(|pm| pm.scale_re(w)));
            }
            ops
        }
        NoiseModel::AmplitudeDamping { gamma } => {
            let k0 = CMat::from_real_diag(&[1.0, (1.0 - gamma).sqrt()]);
            let mut k1 = CMat::zeros(2, 2);
            k1[(0, 1)] = c(gamma.sqrt(), 0.0);
            let single = [k0, k1];
            let mut ops = vec![CMat::identity(1)];
            for _ in 0..n_qubits {
                ops = ops
                    .iter()
                    .flat_map(|a| single.iter().map(move |b| tensor(a, b)))
                    .collect();
            }
            ops.retain(|k| k.frobenius_norm() > 0.0);
            ops
        }
        NoiseModel::OverRotation { axis, angle } => {
            let gen = &(&pauli::x().scale_re(axis[0]) + &pauli::y().scale_re(axis[1]))
                + &pauli::z().scale_re(axis[2]);
            let half = angle / 2.0;
            let r = &CMat::identity(2).scale_re(half.cos()) + &gen.scale(c(0.0, -half.sin()));
            let rs = vec![r; n_qubits];
            vec![tensor_all(&rs)]
        }
        NoiseModel::Composite { models } => {
            let mut ch = QuantumChannel::identity(n_qubits);
            for m in models {
                ch = ch.then(&make_noise(m, n_qubits)?)?;
            }
            return Ok(ch);
        }
    };
    QuantumChannel::new(kraus)
}

/// Ideal gate followed by noise.
pub fn noisy_gate(u: &UnitaryGate, noise: &NoiseModel) -> Result<QuantumChannel> {
    unitary_channel(u).then(&make_noise(noise, u.n_qubits())?)
}

/// Which family [`calibrate_noise`] should solve for.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Depolarizing,
    AmplitudeDamping,
    /// Rotation about the given unit axis.
    OverRotation { axis: [f64; 3] },
}

/// Noise model whose entanglement fidelity with the identity equals `target`.
pub fn calibrate_noise(target: f64, kind: NoiseKind, n_qubits: usize) -> Result<NoiseModel> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::OutOfRange(format!("target fidelity {target} not in (0, 1]")));
    }
    let d2 = (1usize << (2 * n_qubits)) as f64;
    let per_qubit = target.powf(1.0 / n_qubits as f64);
    let model = match kind {
        NoiseKind::Depolarizing => NoiseModel::Depolarizing {
            p: (1.0 - target) * d2 / (d2 - 1.0),
        },
        // F_e = ((1 + sqrt(1-γ))/2)^2 per qubit
        NoiseKind::AmplitudeDamping => {
            let root = 2.0 * per_qubit.sqrt() - 1.0;
            if root < 0.0 {
                return Err(Error::OutOfRange(format!(
                    "amplitude damping cannot reach fidelity {target}"
                )));
            }
            NoiseModel::AmplitudeDamping {
                gamma: (1.0 - root * root).clamp(0.0, 1.0),
            }
        }
        // F_e = cos²(θ/2) per qubit
        NoiseKind::OverRotation { axis } => NoiseModel::OverRotation {
            axis,
            angle: 2.0 * per_qubit.sqrt().min(1.0).acos(),
        },
    };
    model.validate()?;
    Ok(model)
}

/// Pauli-basis process matrix with unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessMatrix {
    n_qubits: usize,
    chi: CMat,
}

impl ProcessMatrix {
    /// Wraps a raw chi matrix without checking physicality (linear inversion output).
    pub fn from_raw(n_qubits: usize, chi: CMat) -> Result<Self> {
        let dim = 1usize << (2 * n_qubits);
        if chi.rows() != dim || chi.cols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "chi for {n_qubits} qubits must be {dim}x{dim}"
            )));
        }
        Ok(Self { n_qubits, chi })
    }

    /// Wraps a chi matrix and checks Hermiticity, positivity and trace preservation.
    pub fn new(n_qubits: usize, chi: CMat) -> Result<Self> {
        let pm = Self::from_raw(n_qubits, chi)?;
        let herm = pm.chi.hermitian_defect();
        if herm > TOL {
            return Err(Error::NotHermitian(herm));
        }
        if pm.min_eigenvalue() < -1e-8 {
            return Err(Error::InvalidState(format!(
                "chi has eigenvalue {}",
                pm.min_eigenvalue()
            )));
        }
        let tp = pm.tp_residual();
        if tp > 1e-8 {
            return Err(Error::NotTracePreserving(tp));
        }
        Ok(pm)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn chi(&self) -> &CMat {
        &self.chi
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eig_hermitian(&self.chi.hermitian_part())
            .map(|e| *e.values.last().unwrap())
            .unwrap_or(f64::NAN)
    }

    /// `Σ χ_{mn} P_n P_m`, equal to `I` for trace-preserving maps.
    pub fn tp_operator(&self) -> CMat {
        tp_operator(&self.chi, &pauli::basis(self.n_qubits))
    }

    /// `‖Σ χ_{mn} P_n P_m − I‖_F`
    pub fn tp_residual(&self) -> f64 {
        let d = 1 << self.n_qubits;
        (&self.tp_operator() - &CMat::identity(d)).frobenius_norm()
    }

    /// `Σ χ_{mn} P_m ρ P_n`
    pub fn apply_operator(&self, rho: &CMat) -> CMat {
        let paulis = pauli::basis(self.n_qubits);
        let left: Vec<CMat> = paulis.iter().map(|p| p * rho).collect();
        let mut out = CMat::zeros(rho.rows(), rho.cols());
        for (m, lm) in left.iter().enumerate() {
            for (n, pn) in paulis.iter().enumerate() {
                let w = self.chi[(m, n)];
                if w.norm() > 0.0 {
                    out = &out + &(lm * pn).scale(w);
                }
            }
        }
        out
    }

    /// Kraus operators `√λ_k Σ_m v_k[m] P_m` from the eigendecomposition of χ.
    pub fn to_kraus(&self) -> Result<Vec<CMat>> {
        let eig = eig_hermitian(&self.chi.hermitian_part())?;
        let paulis = pauli::basis(self.n_qubits);
        let d = 1 << self.n_qubits;
        Ok(eig
            .values
            .iter()
            .enumerate()
            .filter(|(_, &lam)| lam > 1e-14)
            .map(|(k, &lam)| {
                let v = eig.vector(k);
                let mut op = CMat::zeros(d, d);
                for (m, pm) in paulis.iter().enumerate() {
                    op = &op + &pm.scale(v[m] * lam.sqrt());
                }
                op
            })
            .collect())
    }
}

pub(crate) fn tp_operator(chi: &CMat, paulis: &[CMat]) -> CMat {
    let d = paulis[0].rows();
    let mut out = CMat::zeros(d, d);
    for (m, pm) in paulis.iter().enumerate() {
        for (n, pn) in paulis.iter().enumerate() {
            let w = chi[(m, n)];
            if w.norm() > 0.0 {
                out = &out + &(pn * pm).scale(w);
            }
        }
    }
    out
}

/// Pauli coefficients `c_m = Tr(P_m K)/d` of every Kraus operator, accumulated into χ.
pub fn channel_to_chi(ch: &QuantumChannel) -> ProcessMatrix {
    let paulis = pauli::basis(ch.n_qubits);
    let d = ch.dim() as f64;
    let n = paulis.len();
    let mut chi = CMat::zeros(n, n);
    for k in &ch.kraus {
        let coef: Vec<C64> = paulis.iter().map(|p| p.trace_product(k) / d).collect();
        chi = &chi + &CMat::outer(&coef, &coef);
    }
    ProcessMatrix {
        n_qubits: ch.n_qubits,
        chi: chi.hermitian_part(),
    }
}

/// Entanglement fidelity between two process matrices.
///
/// When either argument is pure (a unitary target) this is `Tr(χ_a χ_b)`;
/// otherwise the Uhlmann fidelity of the two chi matrices viewed as states.
pub fn process_fidelity(a: &ProcessMatrix, b: &ProcessMatrix) -> Result<f64> {
    if a.n_qubits != b.n_qubits {
        return Err(Error::DimensionMismatch(format!(
            "{}-qubit vs {}-qubit process",
            a.n_qubits, b.n_qubits
        )));
    }
    let purity = |m: &CMat| m.trace_product(m).re;
    let f = if purity(&a.chi) >= 1.0 - 1e-9 || purity(&b.chi) >= 1.0 - 1e-9 {
        a.chi.trace_product(&b.chi).re
    } else {
        let sa = psd_sqrt(&a.chi.hermitian_part())?;
        let inner = (&(&sa * &b.chi) * &sa).hermitian_part();
        psd_sqrt(&inner)?.trace().re.powi(2)
    };
    Ok(f.clamp(0.0, 1.0))
}

/// `(d F_e + 1)/(d + 1)`
pub fn average_gate_fidelity(entanglement_fidelity: f64, n_qubits: usize) -> f64 {
    let d = (1usize << n_qubits) as f64;
    (d * entanglement_fidelity + 1.0) / (d + 1.0)
}

/// Entanglement fidelity of a channel against a unitary target.
pub fn gate_fidelity(ch: &QuantumChannel, target: &UnitaryGate) -> Result<f64> {
    process_fidelity(&channel_to_chi(ch), &channel_to_chi(&unitary_channel(target)))
}
