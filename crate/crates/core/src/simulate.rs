//! Seeded Monte-Carlo sampling.
//!
//! Every random quantity is drawn from a ChaCha8 stream addressed by
//! `(seed, stream_id)`. Campaign repetitions own their stream, so results do
//! not depend on thread count or scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{mean_sd, VerificationResult};
use crate::channels::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{check_involution, pauli, projector_onto_sign, tensor_all, CMat, C64};
use crate::verification::{judge, kets, DensityMatrix, VerificationStrategy};

/// Address of one independent random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Stream for repetition `rep` at sample size `n`; independent of the rest of the grid.
pub fn campaign_stream(seed: u64, n: u64, rep: u64) -> RngSpec {
    RngSpec::new(seed, (n << 24) | (rep & 0xff_ffff))
}

fn sign_from_uniform(p_plus: f64, u: f64) -> i8 {
    if u < p_plus {
        1
    } else {
        -1
    }
}

/// Draws a `±1` outcome of `observable` on `state` with one uniform draw.
pub fn born_sample<R: Rng + ?Sized>(state: &DensityMatrix, observable: &CMat, rng: &mut R) -> Result<i8> {
    check_involution(observable)?;
    let p_plus = state.expectation(&projector_onto_sign(observable, 1)?)?;
    Ok(sign_from_uniform(p_plus, rng.random::<f64>()))
}

/// One verification trial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub trial: u64,
    pub setting: String,
    pub outcome: i8,
    pub passed: bool,
}

/// Per-setting data needed to draw trials quickly.
struct PreparedStrategy {
    cumulative: Vec<f64>,
    p_plus: Vec<f64>,
    pass_sign: Vec<i8>,
}

impl PreparedStrategy {
    fn new(strategy: &VerificationStrategy, device: &QuantumChannel) -> Result<Self> {
        if device.n_qubits() != strategy.n_qubits() {
            return Err(Error::DimensionMismatch(format!(
                "{}-qubit device for a {}-qubit strategy",
                device.n_qubits(),
                strategy.n_qubits()
            )));
        }
        let mut cumulative = Vec::new();
        let mut p_plus = Vec::new();
        let mut pass_sign = Vec::new();
        let mut acc = 0.0;
        for s in strategy.settings() {
            acc += s.probability;
            cumulative.push(acc);
            let out = device.apply_operator(s.input_state.matrix());
            let p = projector_onto_sign(&s.observable, 1)?.trace_product(&out).re;
            p_plus.push(p.clamp(0.0, 1.0));
            pass_sign.push(s.pass_sign);
        }
        Ok(Self {
            cumulative,
            p_plus,
            pass_sign,
        })
    }

    /// Setting index, then outcome: exactly two uniforms per trial.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, i8) {
        let u = rng.random::<f64>();
        let idx = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cumulative.len() - 1);
        (idx, sign_from_uniform(self.p_plus[idx], rng.random::<f64>()))
    }

    fn count_passes<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> u64 {
        (0..n)
            .filter(|_| {
                let (idx, outcome) = self.draw(rng);
                outcome == self.pass_sign[idx]
            })
            .count() as u64
    }
}

/// Runs `n` verification trials of `device` under `strategy`.
pub fn run_qgv<R: Rng + ?Sized>(
    strategy: &VerificationStrategy,
    device: &QuantumChannel,
    n: u64,
    rng: &mut R,
) -> Result<Vec<OutcomeRecord>> {
    let prepared = PreparedStrategy::new(strategy, device)?;
    let settings = strategy.settings();
    Ok((0..n)
        .map(|trial| {
            let (idx, outcome) = prepared.draw(rng);
            OutcomeRecord {
                trial,
                setting: settings[idx].label.clone(),
                outcome,
                passed: judge(&settings[idx], outcome),
            }
        })
        .collect())
}

/// Number of passes `n` trials would produce; consumes the same draws as [`run_qgv`].
pub fn run_qgv_count<R: Rng + ?Sized>(
    strategy: &VerificationStrategy,
    device: &QuantumChannel,
    n: u64,
    rng: &mut R,
) -> Result<u64> {
    Ok(PreparedStrategy::new(strategy, device)?.count_passes(n, rng))
}

/// Per-sample-size aggregate of a campaign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignPoint {
    #[serde(rename = "N")]
    pub n: u64,
    pub mean_epsilon: f64,
    pub sd_epsilon: f64,
    pub mean_pass_fraction: f64,
    pub n_certified: usize,
    pub repetitions: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    /// `results[i][r]` is repetition `r` at `n_grid[i]`.
    pub results: Vec<Vec<VerificationResult>>,
    pub points: Vec<CampaignPoint>,
}

impl Campaign {
    /// `(N, mean ε)` pairs for fitting.
    pub fn mean_curve(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .map(|p| (p.n as f64, p.mean_epsilon))
            .collect()
    }

    /// Smallest grid `N` whose mean certified ε is at most `target`.
    pub fn first_n_reaching(&self, target: f64) -> Option<u64> {
        self.points
            .iter()
            .find(|p| p.mean_epsilon <= target)
            .map(|p| p.n)
    }
}

/// Repeats verification at every grid size and certifies each repetition.
///
/// Repetitions that cannot be certified contribute `ε = 1` to the mean.
pub fn campaign(
    strategy: &VerificationStrategy,
    device: &QuantumChannel,
    n_grid: &[u64],
    repetitions: usize,
    delta: f64,
    seed: u64,
) -> Result<Campaign> {
    if repetitions == 0 || n_grid.is_empty() || n_grid.contains(&0) {
        return Err(Error::OutOfRange("empty grid, zero N or zero repetitions".into()));
    }
    let prepared = PreparedStrategy::new(strategy, device)?;
    let nu = strategy.nu();
    let jobs: Vec<(u64, u64)> = n_grid
        .iter()
        .flat_map(|&n| (0..repetitions as u64).map(move |r| (n, r)))
        .collect();
    let flat: Vec<VerificationResult> = jobs
        .par_iter()
        .map(|&(n, r)| {
            let mut rng = campaign_stream(seed, n, r).rng();
            let m = prepared.count_passes(n, &mut rng);
            VerificationResult::from_counts(m, n, delta, nu)
        })
        .collect::<Result<_>>()?;
    let results: Vec<Vec<VerificationResult>> =
        flat.chunks(repetitions).map(<[_]>::to_vec).collect();
    let points = n_grid
        .iter()
        .zip(&results)
        .map(|(&n, reps)| {
            let eps: Vec<f64> = reps.iter().map(|r| r.epsilon).collect();
            let (mean_epsilon, sd_epsilon) = mean_sd(&eps);
            CampaignPoint {
                n,
                mean_epsilon,
                sd_epsilon,
                mean_pass_fraction: reps
                    .iter()
                    .map(|r| r.n_passed as f64 / r.n_trials as f64)
                    .sum::<f64>()
                    / reps.len() as f64,
                n_certified: reps.iter().filter(|r| r.certified).count(),
                repetitions: reps.len(),
            }
        })
        .collect();
    Ok(Campaign { results, points })
}

/// A tomography input state.
#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    pub label: String,
    pub ket: Vec<C64>,
}

/// A product Pauli measurement, one letter per qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBasis {
    pub label: String,
    /// Pauli index per qubit (1 = X, 2 = Y, 3 = Z).
    pub paulis: Vec<usize>,
}

impl MeasurementBasis {
    pub fn parse(label: &str) -> Result<Self> {
        let paulis = label
            .chars()
            .map(|ch| match ch {
                'X' => Ok(1),
                'Y' => Ok(2),
                'Z' => Ok(3),
                other => Err(Error::Parse(format!("basis letter {other:?} in {label:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if paulis.is_empty() {
            return Err(Error::Parse("empty basis label".into()));
        }
        Ok(Self {
            label: label.to_string(),
            paulis,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.paulis.len()
    }

    pub fn n_outcomes(&self) -> usize {
        1 << self.paulis.len()
    }

    /// Signs of outcome `k`, qubit 1 most significant, bit 0 meaning `+1`.
    pub fn outcome_signs(&self, k: usize) -> Vec<i8> {
        let n = self.paulis.len();
        (0..n)
            .map(|q| if (k >> (n - 1 - q)) & 1 == 0 { 1 } else { -1 })
            .collect()
    }

    pub fn outcome_label(&self, k: usize) -> String {
        self.outcome_signs(k)
            .iter()
            .map(|&s| if s > 0 { '+' } else { '-' })
            .collect()
    }

    pub fn outcome_index(&self, label: &str) -> Option<usize> {
        (0..self.n_outcomes()).find(|&k| self.outcome_label(k) == label)
    }

    /// Product eigenvector for outcome `k`.
    pub fn outcome_ket(&self, k: usize) -> Vec<C64> {
        let factors: Vec<Vec<C64>> = self
            .paulis
            .iter()
            .zip(self.outcome_signs(k))
            .map(|(&p, s)| kets::pauli_eigenstate(p, s))
            .collect();
        kets::product(&factors)
    }
}

/// The `6^n` product probes built from `|0⟩,|1⟩,|+⟩,|−⟩,|+i⟩,|−i⟩`.
pub fn standard_probes(n_qubits: usize) -> Vec<Probe> {
    let single: Vec<(&str, Vec<C64>)> = [(3, 1), (3, -1), (1, 1), (1, -1), (2, 1), (2, -1)]
        .iter()
        .map(|&(k, s)| (kets::label(k, s), kets::pauli_eigenstate(k, s)))
        .collect();
    let mut out = vec![(Vec::<&str>::new(), vec![C64::new(1.0, 0.0)])];
    for _ in 0..n_qubits {
        out = out
            .iter()
            .flat_map(|(labels, ket)| {
                single.iter().map(move |(l, k)| {
                    let mut ls = labels.clone();
                    ls.push(l);
                    (ls, crate::linalg::tensor_vec(ket, k))
                })
            })
            .collect();
    }
    out.into_iter()
        .map(|(ls, ket)| Probe {
            label: ls.join(","),
            ket,
        })
        .collect()
}

/// Parses a probe label such as `"+i"` or `"0,-"`.
pub fn probe_from_label(label: &str) -> Result<Probe> {
    let factors = label
        .split(',')
        .map(|part| {
            let (k, s) = match part.trim() {
                "0" | "H" => (3, 1),
                "1" | "V" => (3, -1),
                "+" | "D" => (1, 1),
                "-" | "A" => (1, -1),
                "+i" | "R" => (2, 1),
                "-i" | "L" => (2, -1),
                other => return Err(Error::Parse(format!("unknown probe state {other:?}"))),
            };
            Ok(kets::pauli_eigenstate(k, s))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Probe {
        label: label.to_string(),
        ket: kets::product(&factors),
    })
}

/// The `3^n` product Pauli bases in X, Y, Z order.
pub fn standard_bases(n_qubits: usize) -> Vec<MeasurementBasis> {
    let mut labels = vec![String::new()];
    for _ in 0..n_qubits {
        labels = labels
            .iter()
            .flat_map(|l| ['X', 'Y', 'Z'].iter().map(move |c| format!("{l}{c}")))
            .collect();
    }
    labels
        .iter()
        .map(|l| MeasurementBasis::parse(l).unwrap())
        .collect()
}

/// Whether probe states and measurement effects each span the operator space.
pub fn is_informationally_complete(probes: &[Probe], bases: &[MeasurementBasis]) -> bool {
    let Some(d) = probes.first().map(|p| p.ket.len()) else {
        return false;
    };
    let probe_ops: Vec<CMat> = probes.iter().map(|p| CMat::projector(&p.ket)).collect();
    let effects: Vec<CMat> = bases
        .iter()
        .flat_map(|b| (0..b.n_outcomes()).map(move |k| CMat::projector(&b.outcome_ket(k))))
        .collect();
    operator_rank(&probe_ops) == d * d && operator_rank(&effects) == d * d
}

fn operator_rank(ops: &[CMat]) -> usize {
    let n = ops.len();
    let gram = CMat::from_fn(n, n, |i, j| ops[i].inner(&ops[j]));
    crate::linalg::eig_hermitian(&gram.hermitian_part())
        .map(|e| e.values.iter().filter(|&&v| v > 1e-9).count())
        .unwrap_or(0)
}

/// Outcome counts for every (probe, basis) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct CountTable {
    pub n_qubits: usize,
    pub rows: Vec<CountRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CountRow {
    pub probe: Probe,
    pub basis: MeasurementBasis,
    /// Indexed by [`MeasurementBasis::outcome_label`] order.
    pub counts: Vec<u64>,
}

impl CountRow {
    pub fn shots(&self) -> u64 {
        self.counts.iter().sum()
    }
}

impl CountTable {
    pub fn n_settings(&self) -> usize {
        self.rows.len()
    }

    pub fn total_shots(&self) -> u64 {
        self.rows.iter().map(CountRow::shots).sum()
    }
}

/// `floor(total / n)` shots each, the remainder to the first settings.
pub fn allocate_shots(total: u64, n_settings: usize) -> Vec<u64> {
    let n = n_settings as u64;
    let base = total / n;
    let extra = (total % n) as usize;
    (0..n_settings)
        .map(|i| base + u64::from(i < extra))
        .collect()
}

/// Exact outcome probabilities `⟨e_k|Λ(ρ)|e_k⟩` per (probe, basis).
pub fn outcome_probabilities(
    device: &QuantumChannel,
    probe: &Probe,
    basis: &MeasurementBasis,
) -> Result<Vec<f64>> {
    if probe.ket.len() != device.dim() || basis.n_qubits() != device.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "probe {:?} / basis {:?} on a {}-qubit device",
            probe.label,
            basis.label,
            device.n_qubits()
        )));
    }
    let out = DensityMatrix::new(device.apply_operator(&CMat::projector(&probe.ket)))?;
    Ok((0..basis.n_outcomes())
        .map(|k| out.overlap(&basis.outcome_ket(k)).clamp(0.0, 1.0))
        .collect())
}

fn multinomial<R: Rng + ?Sized>(shots: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut remaining = shots;
    let mut mass = 1.0;
    let mut counts = Vec::with_capacity(probs.len());
    for (i, &p) in probs.iter().enumerate() {
        if i + 1 == probs.len() {
            counts.push(remaining);
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = if remaining == 0 || q == 0.0 {
            0
        } else if q >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, q).expect("valid binomial").sample(rng)
        };
        counts.push(k);
        remaining -= k;
        mass -= p;
    }
    counts
}

/// Multinomial counts for every (probe, basis) pair with the given per-setting shots.
pub fn run_qpt_counts_with<R: Rng + ?Sized>(
    device: &QuantumChannel,
    probes: &[Probe],
    bases: &[MeasurementBasis],
    shots: &[u64],
    rng: &mut R,
) -> Result<CountTable> {
    if !is_informationally_complete(probes, bases) {
        return Err(Error::NotInformationallyComplete);
    }
    if shots.len() != probes.len() * bases.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} shot entries for {} settings",
            shots.len(),
            probes.len() * bases.len()
        )));
    }
    let mut rows = Vec::with_capacity(shots.len());
    let mut i = 0;
    for probe in probes {
        for basis in bases {
            let probs = outcome_probabilities(device, probe, basis)?;
            rows.push(CountRow {
                probe: probe.clone(),
                basis: basis.clone(),
                counts: multinomial(shots[i], &probs, rng),
            });
            i += 1;
        }
    }
    Ok(CountTable {
        n_qubits: device.n_qubits(),
        rows,
    })
}

/// Same number of shots on every setting.
pub fn run_qpt_counts<R: Rng + ?Sized>(
    device: &QuantumChannel,
    probes: &[Probe],
    bases: &[MeasurementBasis],
    shots_per_setting: u64,
    rng: &mut R,
) -> Result<CountTable> {
    let shots = vec![shots_per_setting; probes.len() * bases.len()];
    run_qpt_counts_with(device, probes, bases, &shots, rng)
}

/// Pauli string for a measurement basis (used by tests and diagnostics).
pub fn basis_observable(basis: &MeasurementBasis) -> CMat {
    let mats: Vec<CMat> = basis.paulis.iter().map(|&k| pauli::by_index(k)).collect();
    tensor_all(&mats)
}
