//! Process tomography: linear inversion and maximum-likelihood reconstruction.
//!
//! Every (probe `|ψ⟩`, effect `|e⟩⟨e|`) pair gives an outcome probability
//! `p = w† χ w` with `w_m = conj(⟨e|P_m|ψ⟩)`, so both estimators work on the
//! list of `w` vectors and their observed weights.
//!
//! The likelihood is maximized over `χ = T†T / Tr(T†T)`, which keeps χ
//! positive, with a quadratic penalty on the trace-preservation residual.
//! The penalty weight grows tenfold each time the ascent stalls. A final
//! right-multiplication of the Kraus operators by `S^{-1/2}` (`S = Σ K†K`)
//! makes the estimate exactly trace preserving.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::certify::mean_sd;
use crate::channels::{channel_to_chi, process_fidelity, unitary_channel, ProcessMatrix, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, pauli, psd_sqrt, vdot, CMat, C64, ONE, ZERO};
use crate::simulate::{
    allocate_shots, outcome_probabilities, run_qpt_counts_with, standard_bases, standard_probes,
    CountTable, MeasurementBasis, Probe, RngSpec,
};
use crate::verification::UnitaryGate;

/// Weight of the maximally mixed process blended into the seed so no direction of T starts at zero.
const SEED_MIXING: f64 = 1e-6;

/// Tuning knobs for [`mle_reconstruct`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    /// Cap on gradient steps across all penalty stages.
    pub max_iterations: usize,
    /// Stop a stage when the per-shot objective changes by less than this.
    pub tolerance: f64,
    /// Added to probabilities inside logarithms only.
    pub probability_floor: f64,
    pub initial_penalty: f64,
    pub max_penalty: f64,
    /// Target trace-preservation residual before the final exact correction.
    pub tp_tolerance: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            tolerance: 1e-10,
            probability_floor: 1e-12,
            initial_penalty: 1.0,
            max_penalty: 1e6,
            tp_tolerance: 1e-6,
        }
    }
}

/// One outcome of one setting.
#[derive(Clone, Debug)]
struct Observation {
    w: Vec<C64>,
    weight: f64,
    setting: usize,
}

/// Observed weights for every (probe, basis, outcome).
#[derive(Clone, Debug)]
pub struct TomographyData {
    n_qubits: usize,
    observations: Vec<Observation>,
    /// Total weight per setting.
    setting_weight: Vec<f64>,
}

fn response_vector(paulis: &[CMat], probe: &[C64], effect: &[C64]) -> Vec<C64> {
    paulis
        .iter()
        .map(|p| vdot(effect, &p.apply(probe).expect("dimension")).conj())
        .collect()
}

impl TomographyData {
    fn build(
        n_qubits: usize,
        rows: impl Iterator<Item = (Vec<C64>, MeasurementBasis, Vec<f64>)>,
    ) -> Result<Self> {
        let paulis = pauli::basis(n_qubits);
        let mut observations = Vec::new();
        let mut setting_weight = Vec::new();
        for (setting, (probe, basis, weights)) in rows.enumerate() {
            if probe.len() != 1 << n_qubits || basis.n_qubits() != n_qubits {
                return Err(Error::DimensionMismatch(format!(
                    "setting {setting} does not act on {n_qubits} qubits"
                )));
            }
            if weights.len() != basis.n_outcomes() {
                return Err(Error::DimensionMismatch(format!(
                    "setting {setting} has {} outcomes, expected {}",
                    weights.len(),
                    basis.n_outcomes()
                )));
            }
            setting_weight.push(weights.iter().sum());
            for (k, &weight) in weights.iter().enumerate() {
                observations.push(Observation {
                    w: response_vector(&paulis, &probe, &basis.outcome_ket(k)),
                    weight,
                    setting,
                });
            }
        }
        if observations.is_empty() {
            return Err(Error::OutOfRange("no tomography data".into()));
        }
        Ok(Self {
            n_qubits,
            observations,
            setting_weight,
        })
    }

    pub fn from_counts(counts: &CountTable) -> Result<Self> {
        Self::build(
            counts.n_qubits,
            counts.rows.iter().map(|r| {
                (
                    r.probe.ket.clone(),
                    r.basis.clone(),
                    r.counts.iter().map(|&c| c as f64).collect(),
                )
            }),
        )
    }

    /// Infinite-shot data: each setting weighted by its exact outcome probabilities.
    pub fn exact(device: &QuantumChannel, probes: &[Probe], bases: &[MeasurementBasis]) -> Result<Self> {
        let mut rows = Vec::new();
        for probe in probes {
            for basis in bases {
                rows.push((
                    probe.ket.clone(),
                    basis.clone(),
                    outcome_probabilities(device, probe, basis)?,
                ));
            }
        }
        Self::build(device.n_qubits(), rows.into_iter())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn total_weight(&self) -> f64 {
        self.setting_weight.iter().sum()
    }

    fn chi_dim(&self) -> usize {
        1 << (2 * self.n_qubits)
    }
}

fn quad_form(chi: &CMat, w: &[C64]) -> f64 {
    vdot(w, &chi.apply(w).expect("dimension")).re
}

/// `Σ n ln(p + floor)` for a chi matrix.
pub fn log_likelihood(data: &TomographyData, chi: &ProcessMatrix, floor: f64) -> f64 {
    data.observations
        .iter()
        .filter(|o| o.weight > 0.0)
        .map(|o| o.weight * (quad_form(chi.chi(), &o.w).max(0.0) + floor).ln())
        .sum()
}

/// Real Hermitian basis coordinates of `w w†` paired with χ's parameters.
fn design_row(w: &[C64]) -> Vec<f64> {
    let n = w.len();
    let mut row = Vec::with_capacity(n * n);
    for m in 0..n {
        row.push(w[m].norm_sqr());
    }
    for m in 0..n {
        for k in (m + 1)..n {
            let z = w[m].conj() * w[k];
            row.push(2.0 * z.re);
            row.push(-2.0 * z.im);
        }
    }
    row
}

fn chi_from_params(theta: &[f64], n: usize) -> CMat {
    let mut chi = CMat::zeros(n, n);
    for m in 0..n {
        chi[(m, m)] = C64::from(theta[m]);
    }
    let mut idx = n;
    for m in 0..n {
        for k in (m + 1)..n {
            let z = C64::new(theta[idx], theta[idx + 1]);
            chi[(m, k)] = z;
            chi[(k, m)] = z.conj();
            idx += 2;
        }
    }
    chi
}

/// Solves a symmetric positive-definite system by Gaussian elimination with partial pivoting.
fn solve_normal(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    let scale = (0..n).map(|i| a[i][i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col].abs() <= 1e-11 * scale {
            return Err(Error::RankDeficient);
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[r][k] -= f * a[col][k];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Ok(x)
}

/// Least-squares χ from observed frequencies; Hermitian, possibly not positive.
pub fn linear_inversion_data(data: &TomographyData) -> Result<ProcessMatrix> {
    let n = data.chi_dim();
    let n_params = n * n;
    let mut ata = vec![vec![0.0; n_params]; n_params];
    let mut atb = vec![0.0; n_params];
    for o in &data.observations {
        let total = data.setting_weight[o.setting];
        if total <= 0.0 {
            continue;
        }
        let f = o.weight / total;
        let row = design_row(&o.w);
        for i in 0..n_params {
            if row[i] == 0.0 {
                continue;
            }
            atb[i] += row[i] * f;
            for j in 0..n_params {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let theta = solve_normal(ata, atb)?;
    ProcessMatrix::from_raw(data.n_qubits, chi_from_params(&theta, n))
}

pub fn linear_inversion(counts: &CountTable) -> Result<ProcessMatrix> {
    linear_inversion_data(&TomographyData::from_counts(counts)?)
}

/// Closest physical χ: negative eigenvalues clipped, unit trace, then made trace preserving.
pub fn project_to_physical(chi: &ProcessMatrix) -> Result<ProcessMatrix> {
    let n = chi.chi().rows();
    let eig = eig_hermitian(&chi.chi().hermitian_part())?;
    let mut clipped = eig.map_values(|x| x.max(0.0));
    let tr = clipped.trace().re;
    clipped = if tr > 1e-12 {
        clipped.scale_re(1.0 / tr)
    } else {
        CMat::identity(n).scale_re(1.0 / n as f64)
    };
    enforce_trace_preservation(&ProcessMatrix::from_raw(chi.n_qubits(), clipped)?)
}

/// `K ↦ K S^{-1/2}` with `S = Σ K†K`, which fixes the trace-preservation residual exactly.
pub fn enforce_trace_preservation(chi: &ProcessMatrix) -> Result<ProcessMatrix> {
    let kraus = chi.to_kraus()?;
    let d = 1 << chi.n_qubits();
    let mut s = CMat::zeros(d, d);
    for k in &kraus {
        s = &s + &(&k.adjoint() * k);
    }
    let eig = eig_hermitian(&s.hermitian_part())?;
    if eig.values.last().copied().unwrap_or(0.0) <= 1e-14 {
        return Err(Error::RankDeficient);
    }
    let inv_sqrt = eig.map_values(|x| 1.0 / x.sqrt());
    let fixed: Vec<CMat> = kraus.iter().map(|k| k * &inv_sqrt).collect();
    Ok(channel_to_chi(&QuantumChannel::new(fixed)?))
}

/// Pauli string multiplication table: `P_a P_b = phase · P_{index}`.
struct PauliProducts {
    index: Vec<usize>,
    phase: Vec<C64>,
    dim: usize,
}

impl PauliProducts {
    fn new(n_qubits: usize) -> Self {
        let dim = 1usize << (2 * n_qubits);
        let mut index = vec![0; dim * dim];
        let mut phase = vec![ONE; dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                let (mut k, mut ph) = (0usize, ONE);
                for q in (0..n_qubits).rev() {
                    let shift = 2 * (n_qubits - 1 - q);
                    let (x, y) = ((a >> shift) & 3, (b >> shift) & 3);
                    let (z, p) = single_product(x, y);
                    k |= z << shift;
                    ph *= p;
                }
                index[a * dim + b] = k;
                phase[a * dim + b] = ph;
            }
        }
        Self { index, phase, dim }
    }

    /// Coefficients `s_k` with `Σ_{mn} χ_{mn} P_n P_m = Σ_k s_k P_k`.
    fn tp_coefficients(&self, chi: &CMat) -> Vec<C64> {
        let mut s = vec![ZERO; self.dim];
        for n in 0..self.dim {
            for m in 0..self.dim {
                let i = n * self.dim + m;
                s[self.index[i]] += chi[(m, n)] * self.phase[i];
            }
        }
        s
    }
}

fn single_product(a: usize, b: usize) -> (usize, C64) {
    match (a, b) {
        (0, x) | (x, 0) => (x, ONE),
        (x, y) if x == y => (0, ONE),
        (x, y) => {
            let k = 6 - x - y;
            let cyclic = matches!((x, y), (1, 2) | (2, 3) | (3, 1));
            (k, if cyclic { C64::new(0.0, 1.0) } else { C64::new(0.0, -1.0) })
        }
    }
}

/// Outcome of [`mle_reconstruct`].
#[derive(Clone, Debug)]
pub struct MleResult {
    pub process: ProcessMatrix,
    /// `Σ n ln(p + floor)` at the returned estimate.
    pub log_likelihood: f64,
    pub iterations: usize,
    /// False when `max_iterations` ran out first; the best iterate is still returned.
    pub converged: bool,
    /// Residual before the exact trace-preservation correction.
    pub penalty_tp_residual: f64,
}

struct Objective<'a> {
    data: &'a TomographyData,
    products: PauliProducts,
    floor: f64,
    total: f64,
    d: f64,
}

struct Evaluation {
    value: f64,
    grad: CMat,
    tp_residual: f64,
}

impl Objective<'_> {
    fn chi_of(t: &CMat) -> CMat {
        let a = (&t.adjoint() * t).hermitian_part();
        let tr = a.trace().re;
        a.scale_re(1.0 / tr)
    }

    fn value(&self, t: &CMat, mu: f64) -> f64 {
        let chi = Self::chi_of(t);
        let ll = self.ll(&chi);
        let (pen, _) = self.penalty(&chi);
        ll - mu * pen
    }

    fn ll(&self, chi: &CMat) -> f64 {
        self.data
            .observations
            .iter()
            .filter(|o| o.weight > 0.0)
            .map(|o| o.weight * (quad_form(chi, &o.w).max(0.0) + self.floor).ln())
            .sum::<f64>()
            / self.total
    }

    /// `‖S − I‖²_F` and the coefficient vector of `S − I`.
    fn penalty(&self, chi: &CMat) -> (f64, Vec<C64>) {
        let mut s = self.products.tp_coefficients(chi);
        s[0] -= ONE;
        (self.d * s.iter().map(|z| z.norm_sqr()).sum::<f64>(), s)
    }

    fn evaluate(&self, t: &CMat, mu: f64) -> Evaluation {
        let n = t.rows();
        let a = (&t.adjoint() * t).hermitian_part();
        let tr = a.trace().re;
        let chi = a.scale_re(1.0 / tr);

        let mut g = CMat::zeros(n, n);
        let mut ll = 0.0;
        for o in self.data.observations.iter().filter(|o| o.weight > 0.0) {
            let p = quad_form(&chi, &o.w).max(0.0) + self.floor;
            ll += o.weight * p.ln();
            let c = o.weight / (p * self.total);
            for r in 0..n {
                let wr = o.w[r] * c;
                for col in 0..n {
                    g[(r, col)] += wr * o.w[col].conj();
                }
            }
        }
        ll /= self.total;

        let (pen, s) = self.penalty(&chi);
        // W_nm = Tr(Δ P_n P_m) = phase · d · s_k
        for nn in 0..n {
            for m in 0..n {
                let i = nn * n + m;
                let w = self.products.phase[i] * s[self.products.index[i]] * self.d;
                g[(m, nn)] -= w.conj() * (2.0 * mu);
            }
        }
        let g = g.hermitian_part();
        let shift = g.trace_product(&chi).re;
        let ga = (&g - &CMat::identity(n).scale_re(shift)).scale_re(1.0 / tr);
        let grad = (t * &ga).scale_re(2.0);
        Evaluation {
            value: ll - mu * pen,
            grad,
            tp_residual: (pen).sqrt(),
        }
    }
}

/// Maximum-likelihood CPTP process matrix from counts.
pub fn mle_reconstruct(counts: &CountTable, options: &MleOptions) -> Result<MleResult> {
    mle_reconstruct_data(&TomographyData::from_counts(counts)?, options)
}

pub fn mle_reconstruct_data(data: &TomographyData, options: &MleOptions) -> Result<MleResult> {
    if !(options.tolerance > 0.0) {
        return Err(Error::OutOfRange("MLE tolerance must be positive".into()));
    }
    let n = data.chi_dim();
    let total = data.total_weight();
    if total <= 0.0 {
        return Err(Error::OutOfRange("no shots".into()));
    }
    let seed = match linear_inversion_data(data).and_then(|chi| project_to_physical(&chi)) {
        Ok(chi) => chi.chi().clone(),
        Err(Error::RankDeficient) => CMat::identity(n).scale_re(1.0 / n as f64),
        Err(e) => return Err(e),
    };
    let start = &seed.scale_re(1.0 - SEED_MIXING) + &CMat::identity(n).scale_re(SEED_MIXING / n as f64);
    let mut t = psd_sqrt(&start)?;

    let objective = Objective {
        data,
        products: PauliProducts::new(data.n_qubits),
        floor: options.probability_floor,
        total,
        d: (1usize << data.n_qubits) as f64,
    };

    let mut mu = options.initial_penalty;
    let mut step = 0.1;
    let mut iterations = 0;
    let mut converged = false;
    let mut eval = objective.evaluate(&t, mu);
    'stages: loop {
        let mut stalled = 0;
        loop {
            if iterations >= options.max_iterations {
                break 'stages;
            }
            iterations += 1;
            let gnorm2 = eval.grad.frobenius_norm().powi(2);
            if gnorm2 == 0.0 {
                break;
            }
            let mut accepted = None;
            while step > 1e-18 {
                let cand = &t + &eval.grad.scale_re(step);
                let v = objective.value(&cand, mu);
                if v >= eval.value + 1e-4 * step * gnorm2 {
                    accepted = Some(cand);
                    break;
                }
                step *= 0.5;
            }
            let Some(cand) = accepted else { break };
            let next = objective.evaluate(&cand, mu);
            let gain = next.value - eval.value;
            t = cand;
            // keep ‖T‖ near 1; χ is scale invariant
            let norm = t.frobenius_norm();
            t = t.scale_re(1.0 / norm);
            eval = objective.evaluate(&t, mu);
            step *= 2.0 / (norm * norm);
            if gain.abs() < options.tolerance {
                stalled += 1;
                if stalled >= 3 {
                    break;
                }
            } else {
                stalled = 0;
            }
        }
        if eval.tp_residual <= options.tp_tolerance || mu >= options.max_penalty {
            converged = true;
            break;
        }
        mu *= 10.0;
        eval = objective.evaluate(&t, mu);
    }

    let raw = ProcessMatrix::from_raw(data.n_qubits, Objective::chi_of(&t))?;
    let penalty_tp_residual = raw.tp_residual();
    let process = enforce_trace_preservation(&raw)?;
    let ll = log_likelihood(data, &process, options.probability_floor);
    Ok(MleResult {
        process,
        log_likelihood: ll,
        iterations,
        converged,
        penalty_tp_residual,
    })
}

/// One point of the tomography infidelity curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QptCurvePoint {
    #[serde(rename = "N")]
    pub n_total_samples: u64,
    pub mean_infidelity: f64,
    pub sd_infidelity: f64,
    /// `mean + z_{1−δ}·sd` across repetitions.
    #[serde(rename = "upper_99")]
    pub infidelity_upper: f64,
}

/// `z_{1−δ}` of the standard normal.
pub fn one_sided_z(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange(format!("delta {delta} not in (0, 1)")));
    }
    Ok(Normal::new(0.0, 1.0).unwrap().inverse_cdf(1.0 - delta))
}

/// Stream for QPT repetition `rep` at total shots `n`.
pub fn qpt_stream(seed: u64, n: u64, rep: u64) -> RngSpec {
    RngSpec::new(seed, (1 << 63) | (n << 24) | (rep & 0xff_ffff))
}

/// Infidelity of one simulated tomography run with `n` shots spread over the standard grid.
pub fn qpt_infidelity<R: Rng + ?Sized>(
    device: &QuantumChannel,
    target: &UnitaryGate,
    n: u64,
    options: &MleOptions,
    rng: &mut R,
) -> Result<f64> {
    let probes = standard_probes(device.n_qubits());
    let bases = standard_bases(device.n_qubits());
    let shots = allocate_shots(n, probes.len() * bases.len());
    let counts = run_qpt_counts_with(device, &probes, &bases, &shots, rng)?;
    let est = mle_reconstruct(&counts, options)?;
    let ideal = channel_to_chi(&unitary_channel(target));
    Ok(1.0 - process_fidelity(&ideal, &est.process)?)
}

/// Tomography infidelity versus total shots, with a one-sided normal upper bound.
pub fn qpt_epsilon_curve(
    device: &QuantumChannel,
    target: &UnitaryGate,
    n_grid: &[u64],
    repetitions: usize,
    delta: f64,
    seed: u64,
    options: &MleOptions,
) -> Result<Vec<QptCurvePoint>> {
    if repetitions == 0 || n_grid.is_empty() || n_grid.contains(&0) {
        return Err(Error::OutOfRange("empty grid, zero N or zero repetitions".into()));
    }
    if device.n_qubits() != target.n_qubits() {
        return Err(Error::DimensionMismatch("device and target differ in size".into()));
    }
    let z = one_sided_z(delta)?;
    let jobs: Vec<(u64, u64)> = n_grid
        .iter()
        .flat_map(|&n| (0..repetitions as u64).map(move |r| (n, r)))
        .collect();
    let infid: Vec<f64> = jobs
        .par_iter()
        .map(|&(n, r)| qpt_infidelity(device, target, n, options, &mut qpt_stream(seed, n, r).rng()))
        .collect::<Result<_>>()?;
    Ok(n_grid
        .iter()
        .zip(infid.chunks(repetitions))
        .map(|(&n, vals)| {
            let (mean, sd) = mean_sd(vals);
            QptCurvePoint {
                n_total_samples: n,
                mean_infidelity: mean,
                sd_infidelity: sd,
                infidelity_upper: mean + z * sd,
            }
        })
        .collect())
}

/// Smallest grid `N` whose upper bound is at most `target`.
pub fn first_n_reaching(curve: &[QptCurvePoint], target: f64) -> Option<u64> {
    curve
        .iter()
        .find(|p| p.infidelity_upper <= target)
        .map(|p| p.n_total_samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{noisy_gate, NoiseModel};
    use crate::simulate::run_qpt_counts;
    use crate::verification::gates;

    #[test]
    fn pauli_products_match_matrices() {
        let table = PauliProducts::new(2);
        let basis = pauli::basis(2);
        for a in 0..16 {
            for b in 0..16 {
                let i = a * 16 + b;
                let expected = basis[table.index[i]].scale(table.phase[i]);
                assert!((&basis[a] * &basis[b]).max_abs_diff(&expected) < 1e-15);
            }
        }
    }

    #[test]
    fn tp_coefficients_match_operator() {
        let ch = noisy_gate(&gates::u_a(), &NoiseModel::AmplitudeDamping { gamma: 0.2 }).unwrap();
        let chi = channel_to_chi(&ch);
        let s = PauliProducts::new(1).tp_coefficients(chi.chi());
        assert!((s[0] - ONE).norm() < 1e-14);
        assert!(s[1..].iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn linear_inversion_exact_identity_and_ua() {
        let probes = standard_probes(1);
        let bases = standard_bases(1);
        let id = QuantumChannel::identity(1);
        let est = linear_inversion_data(&TomographyData::exact(&id, &probes, &bases).unwrap()).unwrap();
        assert!((est.chi()[(0, 0)] - ONE).norm() < 1e-10);

        let ua = unitary_channel(&gates::u_a());
        let est = linear_inversion_data(&TomographyData::exact(&ua, &probes, &bases).unwrap()).unwrap();
        assert!(est.chi().max_abs_diff(channel_to_chi(&ua).chi()) < 1e-8);
    }

    #[test]
    fn linear_inversion_rank_deficient() {
        let probes = standard_probes(1);
        let bases = vec![MeasurementBasis::parse("Z").unwrap()];
        let id = QuantumChannel::identity(1);
        let data = TomographyData::exact(&id, &probes, &bases).unwrap();
        assert!(matches!(linear_inversion_data(&data), Err(Error::RankDeficient)));
    }

    #[test]
    fn linear_inversion_error_shrinks_with_shots() {
        let dev = noisy_gate(&gates::u_b(), &NoiseModel::Depolarizing { p: 0.05 }).unwrap();
        let truth = channel_to_chi(&dev);
        let probes = standard_probes(1);
        let bases = standard_bases(1);
        let err = |shots: u64| {
            let mut total = 0.0;
            for rep in 0..10 {
                let c = run_qpt_counts(&dev, &probes, &bases, shots, &mut RngSpec::new(11, rep).rng())
                    .unwrap();
                total += (&linear_inversion(&c).unwrap().chi().clone() - truth.chi()).frobenius_norm();
            }
            total
        };
        assert!(err(10_000) < err(100));
    }

    #[test]
    fn mle_on_noisy_counts_is_physical_and_beats_seed() {
        let dev = noisy_gate(&gates::u_a(), &NoiseModel::Depolarizing { p: 0.08 }).unwrap();
        let probes = standard_probes(1);
        let bases = standard_bases(1);
        let c = run_qpt_counts(&dev, &probes, &bases, 20, &mut RngSpec::new(4, 4).rng()).unwrap();
        let opts = MleOptions::default();
        let res = mle_reconstruct(&c, &opts).unwrap();
        assert!(res.process.tp_residual() <= 1e-6);
        assert!(res.process.min_eigenvalue() >= -1e-8);
        let data = TomographyData::from_counts(&c).unwrap();
        let seed = project_to_physical(&linear_inversion(&c).unwrap()).unwrap();
        let ll_seed = log_likelihood(&data, &seed, opts.probability_floor);
        assert!(res.log_likelihood >= ll_seed - 1e-9, "{} < {}", res.log_likelihood, ll_seed);
    }

    #[test]
    fn z_quantile() {
        assert!((one_sided_z(0.01).unwrap() - 2.326).abs() < 1e-3);
        assert!(one_sided_z(0.0).is_err());
    }
}
