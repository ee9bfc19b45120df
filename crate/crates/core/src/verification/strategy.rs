use crate::channels::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{
    check_involution, eig_hermitian, pauli, projector_onto_sign, tensor, CMat, C64, TOL,
};

use super::gates::{self, UnitaryGate};
use super::state::{kets, DensityMatrix};

/// One prepare-and-measure configuration of a verification strategy.
#[derive(Clone, Debug)]
pub struct ProbingSetting {
    pub label: String,
    /// Pure product input, also available as [`ProbingSetting::input_state`].
    pub input_ket: Vec<C64>,
    pub input_state: DensityMatrix,
    /// Pauli string whose eigenstate was prepared, e.g. `"Z"` or `"XI"`.
    pub stabilizer: String,
    /// Human-readable name of the measured observable.
    pub basis: String,
    pub observable: CMat,
    pub pass_sign: i8,
    pub probability: f64,
}

impl ProbingSetting {
    pub fn new(
        label: impl Into<String>,
        input_ket: Vec<C64>,
        stabilizer: impl Into<String>,
        basis: impl Into<String>,
        observable: CMat,
        pass_sign: i8,
        probability: f64,
    ) -> Result<Self> {
        if !(probability > 0.0 && probability <= 1.0) {
            return Err(Error::OutOfRange(format!("setting probability {probability}")));
        }
        if pass_sign != 1 && pass_sign != -1 {
            return Err(Error::OutOfRange(format!("pass sign {pass_sign}")));
        }
        check_involution(&observable)?;
        let input_state = DensityMatrix::pure(&input_ket)?;
        if observable.rows() != input_state.dim() {
            return Err(Error::DimensionMismatch(format!(
                "observable {}x{} for a {}-dim input",
                observable.rows(),
                observable.cols(),
                input_state.dim()
            )));
        }
        Ok(Self {
            label: label.into(),
            input_ket,
            input_state,
            stabilizer: stabilizer.into(),
            basis: basis.into(),
            observable,
            pass_sign,
            probability,
        })
    }

    pub fn dim(&self) -> usize {
        self.input_state.dim()
    }

    /// Projector onto the passing outcome.
    pub fn pass_projector(&self) -> CMat {
        projector_onto_sign(&self.observable, self.pass_sign).expect("validated involution")
    }
}

/// A complete verification strategy for a target gate.
#[derive(Clone, Debug)]
pub struct VerificationStrategy {
    gate: UnitaryGate,
    settings: Vec<ProbingSetting>,
    omega: CMat,
    nu: f64,
}

impl VerificationStrategy {
    /// Validates the settings against the gate and computes Ω and ν.
    pub fn new(gate: UnitaryGate, settings: Vec<ProbingSetting>) -> Result<Self> {
        if settings.is_empty() {
            return Err(Error::OutOfRange("strategy without settings".into()));
        }
        if let Some(s) = settings.iter().find(|s| s.dim() != gate.dim()) {
            return Err(Error::DimensionMismatch(format!(
                "setting {} has dimension {}, gate {}",
                s.label,
                s.dim(),
                gate.dim()
            )));
        }
        let total: f64 = settings.iter().map(|s| s.probability).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::OutOfRange(format!("setting probabilities sum to {total}")));
        }
        let omega = strategy_omega(&settings)?;
        let choi = choi_state(&gate);
        let image = omega.matmul(choi.matrix())?;
        let defect = (&image - choi.matrix()).frobenius_norm();
        if defect > 1e-8 {
            return Err(Error::InvalidState(format!(
                "target Choi state is not a +1 eigenvector of the strategy operator ({defect:e})"
            )));
        }
        let nu = spectral_gap(&omega)?;
        Ok(Self {
            gate,
            settings,
            omega,
            nu,
        })
    }

    pub fn gate(&self) -> &UnitaryGate {
        &self.gate
    }

    pub fn settings(&self) -> &[ProbingSetting] {
        &self.settings
    }

    pub fn omega(&self) -> &CMat {
        &self.omega
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn n_qubits(&self) -> usize {
        self.gate.n_qubits()
    }

    pub fn setting(&self, label: &str) -> Option<&ProbingSetting> {
        self.settings.iter().find(|s| s.label == label)
    }

    /// Descending spectrum of Ω.
    pub fn omega_spectrum(&self) -> Vec<f64> {
        eig_hermitian(&self.omega).expect("Ω is Hermitian").values
    }

    /// Distinct measured observables, in first-use order.
    pub fn distinct_bases(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.settings {
            if !out.contains(&s.basis) {
                out.push(s.basis.clone());
            }
        }
        out
    }
}

/// `U P U†`
pub fn conjugated_observable(u: &UnitaryGate, p: &CMat) -> Result<CMat> {
    check_involution(p)?;
    if p.rows() != u.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} observable for a {}-qubit gate",
            p.rows(),
            p.cols(),
            u.n_qubits()
        )));
    }
    Ok(u.matrix().conjugate(p)?.hermitian_part())
}

/// Identifies `obs` as `±` a Pauli string, if it is one.
pub fn pauli_label(obs: &CMat) -> Option<(String, i8)> {
    let n = crate::verification::gates::qubits_for_dim(obs.rows())?;
    let labels = pauli::basis_labels(n);
    for (p, label) in pauli::basis(n).iter().zip(labels) {
        for sign in [1i8, -1] {
            if obs.max_abs_diff(&p.scale_re(sign as f64)) < 1e-8 {
                return Some((label, sign));
            }
        }
    }
    None
}

fn basis_name(obs: &CMat, probed: &str, gate_is_identity: bool) -> String {
    match pauli_label(obs) {
        Some((label, 1)) => label,
        Some((label, _)) => format!("-{label}"),
        None if gate_is_identity => probed.to_string(),
        None => format!("U{probed}U†"),
    }
}

/// Settings for a list of Pauli-string stabilizers.
///
/// For every stabilizer `S` and every product eigenstate of `S` (non-identity
/// factors in a Pauli eigenstate, identity factors in `|0⟩` or `|1⟩`), the
/// input is prepared, sent through the gate and measured in `U S U†`; the
/// pass sign is the input's eigenvalue under `S`. All preparations are
/// equiprobable.
pub fn stabilizer_settings(gate: &UnitaryGate, stabilizers: &[&str]) -> Result<Vec<ProbingSetting>> {
    let n = gate.n_qubits();
    let per = 1usize << n;
    let prob = 1.0 / (stabilizers.len() * per) as f64;
    let gate_is_identity = gate.matrix().max_abs_diff(&CMat::identity(gate.dim())) < 1e-12;
    let mut settings = Vec::with_capacity(stabilizers.len() * per);
    for label in stabilizers {
        let indices = parse_pauli_indices(label, n)?;
        let stab = pauli::string(&indices);
        let observable = conjugated_observable(gate, &stab)?;
        let basis = basis_name(&observable, label, gate_is_identity);
        let mut group: Vec<(i8, ProbingSetting)> = Vec::with_capacity(per);
        for bits in 0..per {
            let mut sign = 1i8;
            let mut factors = Vec::with_capacity(n);
            let mut names = String::new();
            for (q, &k) in indices.iter().enumerate() {
                let bit_sign = if (bits >> (n - 1 - q)) & 1 == 0 { 1 } else { -1 };
                if k == 0 {
                    factors.push(kets::pauli_eigenstate(3, bit_sign));
                    names.push_str(kets::label(3, bit_sign));
                } else {
                    sign *= bit_sign;
                    factors.push(kets::pauli_eigenstate(k, bit_sign));
                    names.push_str(kets::label(k, bit_sign));
                }
            }
            let tag = if n == 1 {
                names
            } else {
                format!("{label}{}:{names}", if sign > 0 { '+' } else { '-' })
            };
            let setting = ProbingSetting::new(
                tag,
                kets::product(&factors),
                *label,
                basis.clone(),
                observable.clone(),
                sign,
                prob,
            )?;
            group.push((sign, setting));
        }
        // +1 preparations first
        group.sort_by_key(|(s, _)| -s);
        settings.extend(group.into_iter().map(|(_, s)| s));
    }
    Ok(settings)
}

fn parse_pauli_indices(label: &str, n: usize) -> Result<Vec<usize>> {
    let idx: Vec<usize> = label
        .chars()
        .map(|ch| match ch {
            'I' => Ok(0),
            'X' => Ok(1),
            'Y' => Ok(2),
            'Z' => Ok(3),
            other => Err(Error::Parse(format!("bad Pauli letter {other:?} in {label}"))),
        })
        .collect::<Result<_>>()?;
    if idx.len() != n || idx.iter().all(|&k| k == 0) {
        return Err(Error::Parse(format!("{label} is not a non-trivial {n}-qubit Pauli")));
    }
    Ok(idx)
}

/// Six-state strategy for a single-qubit gate: inputs `|0⟩,|1⟩,|+⟩,|−⟩,|+i⟩,|−i⟩`
/// measured in `UZU†`, `UXU†`, `UYU†`, passing when the outcome equals the
/// input's Pauli eigenvalue.
pub fn single_qubit_strategy(u: &UnitaryGate) -> Result<VerificationStrategy> {
    if u.n_qubits() != 1 {
        return Err(Error::WrongArity {
            expected: 1,
            actual: u.n_qubits(),
        });
    }
    let settings = stabilizer_settings(u, &["Z", "X", "Y"])?;
    VerificationStrategy::new(u.clone(), settings)
}

/// Sixteen-setting CNOT strategy (control = qubit 1).
///
/// Inputs are eigenstates of `IZ`, `ZI`, `XI` and `IX`; conjugation through
/// the CNOT maps them to the measurements `ZZ`, `ZI`, `XX` and `IX`. The
/// `XI` family has `|±⟩` on the control and the `IX` family `|±⟩` on the
/// target; some write-ups swap these two names.
pub fn cnot_strategy() -> Result<VerificationStrategy> {
    let gate = gates::cnot();
    let settings = stabilizer_settings(&gate, &["IZ", "ZI", "XI", "IX"])?;
    VerificationStrategy::new(gate, settings)
}

/// `(U ⊗ I)|Φ⟩` with `|Φ⟩ = Σ|ii⟩/√d`, system first.
pub fn choi_ket(u: &UnitaryGate) -> Vec<C64> {
    let id = CMat::identity(u.dim());
    tensor(u.matrix(), &id)
        .apply(&kets::max_entangled(u.dim()))
        .expect("dimensions agree")
}

pub fn choi_state(u: &UnitaryGate) -> DensityMatrix {
    DensityMatrix::pure(&choi_ket(u)).expect("normalized")
}

/// `Ω = d Σ_i p_i Q_i ⊗ ρ_iᵀ` with `Q_i` the passing projector.
pub fn strategy_omega(settings: &[ProbingSetting]) -> Result<CMat> {
    let d = settings
        .first()
        .map(ProbingSetting::dim)
        .ok_or_else(|| Error::OutOfRange("no settings".into()))?;
    let mut avg = CMat::zeros(d, d);
    for s in settings {
        if s.dim() != d {
            return Err(Error::DimensionMismatch("settings differ in dimension".into()));
        }
        avg = &avg + &s.input_state.matrix().scale_re(s.probability);
    }
    let defect = (&avg - &CMat::identity(d).scale_re(1.0 / d as f64)).frobenius_norm();
    if defect > TOL {
        return Err(Error::EnsembleNotUniform(defect));
    }
    let mut omega = CMat::zeros(d * d, d * d);
    for s in settings {
        let term = tensor(&s.pass_projector(), &s.input_state.matrix().transpose());
        omega = &omega + &term.scale_re(d as f64 * s.probability);
    }
    Ok(omega.hermitian_part())
}

/// `(1/3)(P⁺[(UXU†)⊗X] + P⁻[(UYU†)⊗Y] + P⁺[(UZU†)⊗Z])`, the entangled-picture operator.
pub fn three_projector_omega(u: &UnitaryGate) -> Result<CMat> {
    if u.n_qubits() != 1 {
        return Err(Error::WrongArity {
            expected: 1,
            actual: u.n_qubits(),
        });
    }
    let mut omega = CMat::zeros(4, 4);
    for (p, sign) in [(pauli::x(), 1), (pauli::y(), -1), (pauli::z(), 1)] {
        let obs = tensor(&conjugated_observable(u, &p)?, &p);
        omega = &omega + &projector_onto_sign(&obs, sign)?;
    }
    Ok(omega.scale_re(1.0 / 3.0))
}

/// `λ₁ − λ₂`, with `λ₂` the largest eigenvalue below `λ₁ − 1e-9` (0 if none).
pub fn spectral_gap(omega: &CMat) -> Result<f64> {
    let values = eig_hermitian(omega)?.values;
    let top = values[0];
    Ok(values
        .iter()
        .find(|&&v| v < top - 1e-9)
        .map_or(0.0, |&second| top - second))
}

/// Pass iff the outcome equals the setting's pass sign.
pub fn judge(setting: &ProbingSetting, outcome: i8) -> bool {
    outcome == setting.pass_sign
}

/// `Σ_i p_i Tr(Q_i Λ(ρ_i))`
pub fn pass_probability(strategy: &VerificationStrategy, channel: &QuantumChannel) -> Result<f64> {
    if channel.n_qubits() != strategy.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "{}-qubit channel for a {}-qubit strategy",
            channel.n_qubits(),
            strategy.n_qubits()
        )));
    }
    let p = strategy
        .settings
        .iter()
        .map(|s| {
            let out = channel.apply_operator(s.input_state.matrix());
            s.probability * s.pass_projector().trace_product(&out).re
        })
        .sum::<f64>();
    Ok(p.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{make_noise, noisy_gate, unitary_channel, NoiseModel};
    use crate::linalg::{c, vdot};

    #[test]
    fn identity_strategy_settings() {
        let s = single_qubit_strategy(&UnitaryGate::identity(1)).unwrap();
        let got: Vec<(&str, &str, i8)> = s
            .settings()
            .iter()
            .map(|x| (x.label.as_str(), x.basis.as_str(), x.pass_sign))
            .collect();
        assert_eq!(
            got,
            vec![
                ("0", "Z", 1),
                ("1", "Z", -1),
                ("+", "X", 1),
                ("-", "X", -1),
                ("+i", "Y", 1),
                ("-i", "Y", -1)
            ]
        );
        assert!(s.settings().iter().all(|x| (x.probability - 1.0 / 6.0).abs() < 1e-15));
    }

    #[test]
    fn conjugation_examples() {
        let z = pauli::z();
        assert_eq!(conjugated_observable(&UnitaryGate::identity(1), &z).unwrap(), z);

        let obs = conjugated_observable(&gates::u_a(), &z).unwrap();
        let top = eig_hermitian(&obs).unwrap().vector(0);
        let chi_a1 = [c(-0.7071, 0.3536), c(0.0, 0.6124)];
        assert!(vdot(&top, &chi_a1).norm() > 1.0 - 1e-3);

        let xi = tensor(&pauli::x(), &pauli::id());
        let out = conjugated_observable(&gates::cnot(), &xi).unwrap();
        assert!(out.max_abs_diff(&tensor(&pauli::x(), &pauli::x())) < 1e-15);

        assert!(matches!(
            conjugated_observable(&gates::cnot(), &z),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn omega_for_identity_matches_bell_form() {
        let s = single_qubit_strategy(&UnitaryGate::identity(1)).unwrap();
        let phi = CMat::projector(&kets::max_entangled(2));
        let expected = &phi + &(&CMat::identity(4) - &phi).scale_re(1.0 / 3.0);
        assert!(s.omega().max_abs_diff(&expected) < 1e-14);
        assert!((s.nu() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_arity() {
        assert!(matches!(
            single_qubit_strategy(&gates::cnot()),
            Err(Error::WrongArity { expected: 1, actual: 2 })
        ));
    }

    #[test]
    fn non_uniform_ensemble_is_rejected() {
        let gate = UnitaryGate::identity(1);
        let mut settings = stabilizer_settings(&gate, &["Z", "X", "Y"]).unwrap();
        settings.truncate(5);
        for s in &mut settings {
            s.probability = 0.2;
        }
        assert!(matches!(strategy_omega(&settings), Err(Error::EnsembleNotUniform(_))));
    }

    #[test]
    fn spectral_gap_examples() {
        assert_eq!(spectral_gap(&CMat::identity(4)).unwrap(), 0.0);
        let g = spectral_gap(&CMat::from_real_diag(&[1.0, 0.25, 0.25, 0.0])).unwrap();
        assert!((g - 0.75).abs() < 1e-15);
        assert!(spectral_gap(&CMat::from_vec(2, 2, vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap()).is_err());
    }

    #[test]
    fn judge_signs() {
        let s = single_qubit_strategy(&UnitaryGate::identity(1)).unwrap();
        let plus = &s.settings()[0];
        let minus = &s.settings()[1];
        assert!(judge(plus, 1));
        assert!(!judge(minus, 1));
        assert!(judge(minus, -1));
    }

    #[test]
    fn pass_probability_examples() {
        let ua = gates::u_a();
        let s = single_qubit_strategy(&ua).unwrap();
        let ideal = pass_probability(&s, &unitary_channel(&ua)).unwrap();
        assert!((ideal - 1.0).abs() < 1e-12);
        let p = 0.3;
        let noisy = noisy_gate(&ua, &NoiseModel::Depolarizing { p }).unwrap();
        assert!((pass_probability(&s, &noisy).unwrap() - (1.0 - p / 2.0)).abs() < 1e-12);
        let full = make_noise(&NoiseModel::Depolarizing { p: 1.0 }, 1).unwrap();
        assert!((pass_probability(&s, &full).unwrap() - 0.5).abs() < 1e-12);
        assert!(pass_probability(&s, &unitary_channel(&gates::cnot())).is_err());
    }

    #[test]
    fn cnot_strategy_shape() {
        let s = cnot_strategy().unwrap();
        assert_eq!(s.settings().len(), 16);
        assert_eq!(s.distinct_bases(), vec!["ZZ", "ZI", "XX", "IX"]);
        let iz = s.setting("IZ+:00").unwrap();
        assert_eq!((iz.basis.as_str(), iz.pass_sign), ("ZZ", 1));
        let xi = s.setting("XI+:+0").unwrap();
        assert_eq!((xi.basis.as_str(), xi.pass_sign), ("XX", 1));
        let ideal = pass_probability(&s, &unitary_channel(s.gate())).unwrap();
        assert!((ideal - 1.0).abs() < 1e-12);
    }
}
