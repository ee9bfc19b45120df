//! On-disk formats.
//!
//! | file | format |
//! |---|---|
//! | gate spec | JSON: built-in name or unitary as `[[[re, im], ...], ...]`, optional noise |
//! | strategy dump | JSON: settings, Ω spectrum, ν |
//! | outcome records | JSONL: `{"trial", "setting", "outcome", "passed"}` per line |
//! | count table | CSV: `probe,basis,outcome,count` |
//! | χ matrix | JSON: Pauli basis labels and `[re, im]` entries |
//! | results | CSV: `N,M,delta,nu,epsilon` |
//! | QGV curve | CSV: `N,mean_epsilon,sd_epsilon` |
//! | QPT curve | CSV: `N,mean_infidelity,upper_99` |
//! | fit report | JSON: `slope,intercept,stderr,range,n_points` |
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! values always produce identical bytes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::certify::{ScalingFit, VerificationResult};
use crate::channels::{calibrate_noise, noisy_gate, NoiseKind, NoiseModel, ProcessMatrix, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{pauli, CMat, C64};
use crate::simulate::{probe_from_label, CountRow, CountTable, MeasurementBasis, OutcomeRecord};
use crate::tomography::QptCurvePoint;
use crate::simulate::CampaignPoint;
use crate::verification::{
    cnot_strategy, gates, single_qubit_strategy, stabilizer_settings, UnitaryGate, VerificationStrategy,
};

/// Complex number as a two-element array.
pub type JsonComplex = [f64; 2];

pub fn complex_to_json(z: C64) -> JsonComplex {
    [z.re, z.im]
}

pub fn matrix_to_json(m: &CMat) -> Vec<Vec<JsonComplex>> {
    m.to_rows()
        .into_iter()
        .map(|row| row.into_iter().map(complex_to_json).collect())
        .collect()
}

pub fn matrix_from_json(rows: &[Vec<JsonComplex>]) -> Result<CMat> {
    let rows: Vec<Vec<C64>> = rows
        .iter()
        .map(|r| r.iter().map(|&[re, im]| C64::new(re, im)).collect())
        .collect();
    CMat::from_rows(&rows)
}

fn read_to_string(path: &Path) -> Result<String> {
    let mut s = String::new();
    File::open(path)?.read_to_string(&mut s)?;
    Ok(s)
}

/// Writes pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_to_string(path)?)?)
}

/// Noise given as a target entanglement fidelity instead of explicit parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub entanglement_fidelity: f64,
    #[serde(default = "default_kind")]
    pub model: NoiseKind,
}

fn default_kind() -> NoiseKind {
    NoiseKind::Depolarizing
}

/// A gate plus the imperfection of the simulated device.
///
/// Exactly one of `gate` (a built-in name: `u_a`, `u_b`, `cnot`, `identity1`,
/// `identity2`) or `unitary` must be present. `noise` and `calibrate` are
/// mutually exclusive; with neither the device is ideal.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary: Option<Vec<Vec<JsonComplex>>>,
    /// When set, a slightly non-unitary table (e.g. printed to few decimals)
    /// is replaced by its nearest unitary if the defect is below this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounding_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibrate: Option<Calibration>,
}

impl GateSpec {
    pub fn builtin(name: &str) -> Self {
        Self {
            gate: Some(name.to_string()),
            ..Self::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn gate(&self) -> Result<UnitaryGate> {
        match (&self.gate, &self.unitary) {
            (Some(name), None) => builtin_gate(name),
            (None, Some(rows)) => {
                let m = matrix_from_json(rows)?;
                match self.rounding_tolerance {
                    Some(tol) => UnitaryGate::from_rounded(m, tol),
                    None => UnitaryGate::new(m),
                }
            }
            _ => Err(Error::Parse(
                "gate spec needs exactly one of \"gate\" or \"unitary\"".into(),
            )),
        }
    }

    pub fn noise_model(&self, n_qubits: usize) -> Result<NoiseModel> {
        match (&self.noise, &self.calibrate) {
            (Some(_), Some(_)) => Err(Error::Parse(
                "gate spec has both \"noise\" and \"calibrate\"".into(),
            )),
            (Some(m), None) => {
                m.validate()?;
                Ok(m.clone())
            }
            (None, Some(c)) => calibrate_noise(c.entanglement_fidelity, c.model, n_qubits),
            (None, None) => Ok(NoiseModel::none()),
        }
    }

    pub fn device(&self) -> Result<QuantumChannel> {
        let g = self.gate()?;
        noisy_gate(&g, &self.noise_model(g.n_qubits())?)
    }

    pub fn strategy(&self) -> Result<VerificationStrategy> {
        strategy_for(&self.gate()?)
    }
}

pub fn builtin_gate(name: &str) -> Result<UnitaryGate> {
    match name.to_ascii_lowercase().as_str() {
        "u_a" | "ua" => Ok(gates::u_a()),
        "u_b" | "ub" => Ok(gates::u_b()),
        "cnot" => Ok(gates::cnot()),
        "identity" | "identity1" | "i" => Ok(UnitaryGate::identity(1)),
        "identity2" => Ok(UnitaryGate::identity(2)),
        other => Err(Error::Parse(format!("unknown built-in gate {other:?}"))),
    }
}

/// Six-setting strategy for one qubit; the sixteen-setting stabilizer strategy for two.
pub fn strategy_for(gate: &UnitaryGate) -> Result<VerificationStrategy> {
    match gate.n_qubits() {
        1 => single_qubit_strategy(gate),
        2 if gate.matrix().max_abs_diff(gates::cnot().matrix()) < 1e-12 => cnot_strategy(),
        2 => VerificationStrategy::new(
            gate.clone(),
            stabilizer_settings(gate, &["IZ", "ZI", "XI", "IX"])?,
        ),
        n => Err(Error::WrongArity {
            expected: 2,
            actual: n,
        }),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingDump {
    pub label: String,
    pub probability: f64,
    pub stabilizer: String,
    pub basis: String,
    pub pass_sign: i8,
    pub input_state: Vec<JsonComplex>,
    pub observable: Vec<Vec<JsonComplex>>,
}

/// Audit view of a verification strategy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyDump {
    pub n_qubits: usize,
    pub n_settings: usize,
    pub distinct_bases: Vec<String>,
    /// Size of the standard tomography grid for the same gate.
    pub qpt_settings: usize,
    pub omega_spectrum: Vec<f64>,
    pub nu: f64,
    pub settings: Vec<SettingDump>,
}

impl StrategyDump {
    pub fn new(strategy: &VerificationStrategy) -> Self {
        let n = strategy.n_qubits();
        Self {
            n_qubits: n,
            n_settings: strategy.settings().len(),
            distinct_bases: strategy.distinct_bases(),
            qpt_settings: 18usize.pow(n as u32),
            omega_spectrum: strategy.omega_spectrum(),
            nu: strategy.nu(),
            settings: strategy
                .settings()
                .iter()
                .map(|s| SettingDump {
                    label: s.label.clone(),
                    probability: s.probability,
                    stabilizer: s.stabilizer.clone(),
                    basis: s.basis.clone(),
                    pass_sign: s.pass_sign,
                    input_state: s.input_ket.iter().copied().map(complex_to_json).collect(),
                    observable: matrix_to_json(&s.observable),
                })
                .collect(),
        }
    }
}

pub fn write_records<W: Write>(mut w: W, records: &[OutcomeRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_file(path: &Path, records: &[OutcomeRecord]) -> Result<()> {
    write_records(BufWriter::new(File::create(path)?), records)
}

/// Reads JSONL records; blank lines are skipped, `outcome` must be ±1.
pub fn read_records<R: BufRead>(r: R) -> Result<Vec<OutcomeRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: OutcomeRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("records line {}: {e}", i + 1)))?;
        if rec.outcome != 1 && rec.outcome != -1 {
            return Err(Error::Parse(format!(
                "records line {}: outcome {} is not ±1",
                i + 1,
                rec.outcome
            )));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn read_records_file(path: &Path) -> Result<Vec<OutcomeRecord>> {
    read_records(BufReader::new(File::open(path)?))
}

/// `(N, M)` of a record list.
pub fn tally(records: &[OutcomeRecord]) -> (u64, u64) {
    let m = records.iter().filter(|r| r.passed).count() as u64;
    (records.len() as u64, m)
}

#[derive(Debug, Serialize, Deserialize)]
struct CountCsvRow {
    probe: String,
    basis: String,
    outcome: String,
    count: u64,
}

pub fn write_counts<W: Write>(w: W, table: &CountTable) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for row in &table.rows {
        for (k, &count) in row.counts.iter().enumerate() {
            wr.serialize(CountCsvRow {
                probe: row.probe.label.clone(),
                basis: row.basis.label.clone(),
                outcome: row.basis.outcome_label(k),
                count,
            })?;
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn write_counts_file(path: &Path, table: &CountTable) -> Result<()> {
    write_counts(File::create(path)?, table)
}

/// Reads a count table; rows keep the order in which (probe, basis) pairs first appear.
/// Outcomes absent from the file count as zero.
pub fn read_counts<R: Read>(r: R) -> Result<CountTable> {
    let mut rd = csv::Reader::from_reader(r);
    let mut rows: Vec<CountRow> = Vec::new();
    for rec in rd.deserialize() {
        let rec: CountCsvRow = rec?;
        let idx = match rows
            .iter()
            .position(|row| row.probe.label == rec.probe && row.basis.label == rec.basis)
        {
            Some(i) => i,
            None => {
                let probe = probe_from_label(&rec.probe)?;
                let basis = MeasurementBasis::parse(&rec.basis)?;
                if probe.ket.len() != 1 << basis.n_qubits() {
                    return Err(Error::DimensionMismatch(format!(
                        "probe {} and basis {} differ in qubit count",
                        rec.probe, rec.basis
                    )));
                }
                let n_out = basis.n_outcomes();
                rows.push(CountRow {
                    probe,
                    basis,
                    counts: vec![0; n_out],
                });
                rows.len() - 1
            }
        };
        let row = &mut rows[idx];
        let k = row.basis.outcome_index(&rec.outcome).ok_or_else(|| {
            Error::Parse(format!("outcome {:?} invalid for basis {}", rec.outcome, rec.basis))
        })?;
        row.counts[k] += rec.count;
    }
    let n_qubits = rows
        .first()
        .map(|r| r.basis.n_qubits())
        .ok_or_else(|| Error::Parse("empty count table".into()))?;
    if rows.iter().any(|r| r.basis.n_qubits() != n_qubits) {
        return Err(Error::DimensionMismatch("mixed qubit counts in table".into()));
    }
    Ok(CountTable { n_qubits, rows })
}

pub fn read_counts_file(path: &Path) -> Result<CountTable> {
    read_counts(File::open(path)?)
}

/// χ matrix in the Pauli basis `I, X, Y, Z` (tensor-lexicographic, qubit 1 leftmost).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiDump {
    pub n_qubits: usize,
    pub basis: Vec<String>,
    pub chi: Vec<Vec<JsonComplex>>,
    pub trace_preservation_residual: f64,
    pub min_eigenvalue: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process_fidelity: Option<f64>,
}

impl ChiDump {
    pub fn new(chi: &ProcessMatrix, process_fidelity: Option<f64>) -> Self {
        Self {
            n_qubits: chi.n_qubits(),
            basis: pauli::basis_labels(chi.n_qubits()),
            chi: matrix_to_json(chi.chi()),
            trace_preservation_residual: chi.tp_residual(),
            min_eigenvalue: chi.min_eigenvalue(),
            process_fidelity,
        }
    }

    pub fn process_matrix(&self) -> Result<ProcessMatrix> {
        ProcessMatrix::from_raw(self.n_qubits, matrix_from_json(&self.chi)?)
    }
}

fn write_csv<W: Write, T: Serialize>(w: W, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ResultRow {
    #[serde(rename = "N")]
    n: u64,
    #[serde(rename = "M")]
    m: u64,
    delta: f64,
    nu: f64,
    epsilon: f64,
}

pub fn write_results<W: Write>(w: W, results: &[VerificationResult]) -> Result<()> {
    write_csv(
        w,
        results.iter().map(|r| ResultRow {
            n: r.n_trials,
            m: r.n_passed,
            delta: r.delta,
            nu: r.nu,
            epsilon: r.epsilon,
        }),
    )
}

#[derive(Serialize)]
struct QgvCurveRow {
    #[serde(rename = "N")]
    n: u64,
    mean_epsilon: f64,
    sd_epsilon: f64,
}

pub fn write_qgv_curve<W: Write>(w: W, points: &[CampaignPoint]) -> Result<()> {
    write_csv(
        w,
        points.iter().map(|p| QgvCurveRow {
            n: p.n,
            mean_epsilon: p.mean_epsilon,
            sd_epsilon: p.sd_epsilon,
        }),
    )
}

#[derive(Serialize)]
struct QptCurveRow {
    #[serde(rename = "N")]
    n: u64,
    mean_infidelity: f64,
    upper_99: f64,
}

pub fn write_qpt_curve<W: Write>(w: W, points: &[QptCurvePoint]) -> Result<()> {
    write_csv(
        w,
        points.iter().map(|p| QptCurveRow {
            n: p.n_total_samples,
            mean_infidelity: p.mean_infidelity,
            upper_99: p.infidelity_upper,
        }),
    )
}

pub fn write_fit(path: &Path, fit: &ScalingFit) -> Result<()> {
    write_json(path, fit)
}

/// Opens `path` for writing through a buffer.
pub fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{run_qpt_counts, standard_bases, standard_probes, RngSpec};

    #[test]
    fn records_round_trip() {
        let recs = vec![
            OutcomeRecord { trial: 0, setting: "0".into(), outcome: 1, passed: true },
            OutcomeRecord { trial: 1, setting: "XI+:+0".into(), outcome: -1, passed: false },
        ];
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), r#"{"trial":0,"setting":"0","outcome":1,"passed":true}"#);
        assert_eq!(read_records(&buf[..]).unwrap(), recs);
    }

    #[test]
    fn records_reject_bad_outcome() {
        let text = "{\"trial\":0,\"setting\":\"0\",\"outcome\":0,\"passed\":true}\n";
        assert!(matches!(read_records(text.as_bytes()), Err(Error::Parse(_))));
        assert!(read_records("not json\n".as_bytes()).is_err());
    }

    #[test]
    fn counts_round_trip_two_qubits() {
        let dev = QuantumChannel::identity(2);
        let t = run_qpt_counts(&dev, &standard_probes(2), &standard_bases(2), 3, &mut RngSpec::new(1, 2).rng())
            .unwrap();
        let mut buf = Vec::new();
        write_counts(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("probe,basis,outcome,count\n"));
        assert_eq!(read_counts(&buf[..]).unwrap(), t);
    }

    #[test]
    fn gate_spec_variants() {
        let spec: GateSpec = serde_json::from_str(
            r#"{"gate": "u_a", "calibrate": {"entanglement_fidelity": 0.98}}"#,
        )
        .unwrap();
        let dev = spec.device().unwrap();
        let f = crate::channels::gate_fidelity(&dev, &spec.gate().unwrap()).unwrap();
        assert!((f - 0.98).abs() < 1e-12);

        let spec: GateSpec = serde_json::from_str(
            r#"{"unitary": [[[0,0],[1,0]],[[1,0],[0,0]]], "noise": {"kind": "depolarizing", "params": {"p": 0.1}}}"#,
        )
        .unwrap();
        assert_eq!(spec.strategy().unwrap().settings().len(), 6);

        let bad: GateSpec = serde_json::from_str(r#"{"unitary": [[[1,0],[1,0]],[[0,0],[1,0]]]}"#).unwrap();
        assert!(matches!(bad.gate(), Err(Error::NotUnitary(_))));
        assert!(GateSpec::default().gate().is_err());
    }

    #[test]
    fn chi_dump_round_trip() {
        let chi = crate::channels::channel_to_chi(&crate::channels::unitary_channel(&gates::u_b()));
        let dump = ChiDump::new(&chi, Some(1.0));
        let text = serde_json::to_string(&dump).unwrap();
        let back: ChiDump = serde_json::from_str(&text).unwrap();
        assert_eq!(back.basis, vec!["I", "X", "Y", "Z"]);
        assert_eq!(back.process_matrix().unwrap(), chi);
    }
}
