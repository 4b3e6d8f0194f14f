//! On-disk formats: JSON Lines for per-trial reports and sweep points, CSV
//! for sweep tables. Every JSONL line carries `schema_version`.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{SweepPoint, SweepResult, SweepVariable};
use crate::error::SimError;
use crate::protocols::{MeasurementRecord, ProtocolReport};
use crate::rng::StreamId;
use crate::state::{BasisKet, PhotonKet, ProbePhase, StateVector};

pub const RECORD_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: unsupported schema_version {found} (expected {RECORD_SCHEMA_VERSION})")]
    Schema { line: usize, found: u32 },
    #[error("line {line}: {source}")]
    State { line: usize, source: SimError },
}

/// One nonzero amplitude of a stored state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub photons: Vec<PhotonKet>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<ProbePhase>,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    TwoQubit,
    Ghz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub schema_version: u32,
    pub kind: RunKind,
    pub trial: u32,
    pub seed: StreamId,
    pub fidelity: f64,
    pub success: bool,
    pub record: MeasurementRecord,
    pub final_state: Vec<TermRecord>,
}

impl ReportRecord {
    pub fn from_report(kind: RunKind, trial: u32, report: &ProtocolReport) -> Self {
        Self {
            schema_version: RECORD_SCHEMA_VERSION,
            kind,
            trial,
            seed: report.seed,
            fidelity: report.fidelity,
            success: report.success,
            record: report.record.clone(),
            final_state: report
                .final_state
                .terms()
                .map(|(k, a)| TermRecord {
                    photons: k.photons.clone(),
                    probes: k.probes.clone(),
                    re: a.re,
                    im: a.im,
                })
                .collect(),
        }
    }

    pub fn state(&self) -> Result<StateVector, SimError> {
        StateVector::from_terms(self.final_state.iter().map(|t| {
            (
                BasisKet {
                    photons: t.photons.clone(),
                    probes: t.probes.clone(),
                },
                Complex64::new(t.re, t.im),
            )
        }))
    }
}

/// One line of a sweep JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub schema_version: u32,
    pub variable: SweepVariable,
    pub seed: u64,
    #[serde(flatten)]
    pub point: SweepPoint,
}

/// One row of a sweep CSV file. Column order is fixed by field order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub mean_fidelity: f64,
    pub success_rate: f64,
    pub freq_phi1: f64,
    pub freq_phi2: f64,
    pub freq_phi3: f64,
    pub freq_phi4: f64,
    pub std_err: f64,
}

pub const SWEEP_CSV_HEADER: [&str; 8] = [
    "value",
    "mean_fidelity",
    "success_rate",
    "freq_phi1",
    "freq_phi2",
    "freq_phi3",
    "freq_phi4",
    "std_err",
];

impl From<&SweepPoint> for SweepRow {
    fn from(p: &SweepPoint) -> Self {
        let [f1, f2, f3, f4] = p.frequencies();
        Self {
            value: p.value,
            mean_fidelity: p.mean_fidelity,
            success_rate: p.success_rate,
            freq_phi1: f1,
            freq_phi2: f2,
            freq_phi3: f3,
            freq_phi4: f4,
            std_err: p.std_err,
        }
    }
}

fn write_jsonl<W: Write, T: Serialize>(
    mut w: W,
    items: impl IntoIterator<Item = T>,
) -> Result<(), RecordError> {
    for item in items {
        serde_json::to_writer(&mut w, &item)
            .map_err(|e| RecordError::Json { line: 0, source: e })?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn read_jsonl<R: BufRead, T: for<'de> Deserialize<'de>>(
    r: R,
    version: impl Fn(&T) -> u32,
) -> Result<Vec<T>, RecordError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item: T = serde_json::from_str(&line).map_err(|e| RecordError::Json {
            line: i + 1,
            source: e,
        })?;
        let found = version(&item);
        if found != RECORD_SCHEMA_VERSION {
            return Err(RecordError::Schema { line: i + 1, found });
        }
        out.push(item);
    }
    Ok(out)
}

pub fn write_reports<W: Write>(w: W, records: &[ReportRecord]) -> Result<(), RecordError> {
    write_jsonl(w, records)
}

/// Reads report lines and checks that every stored state is well formed.
pub fn read_reports<R: BufRead>(r: R) -> Result<Vec<ReportRecord>, RecordError> {
    let records = read_jsonl(r, |rec: &ReportRecord| rec.schema_version)?;
    for (i, rec) in records.iter().enumerate() {
        rec.state().map_err(|e| RecordError::State {
            line: i + 1,
            source: e,
        })?;
    }
    Ok(records)
}

pub fn sweep_records(result: &SweepResult) -> Vec<SweepRecord> {
    result
        .points
        .iter()
        .map(|p| SweepRecord {
            schema_version: RECORD_SCHEMA_VERSION,
            variable: result.variable,
            seed: result.seed,
            point: p.clone(),
        })
        .collect()
}

pub fn write_sweep_jsonl<W: Write>(w: W, result: &SweepResult) -> Result<(), RecordError> {
    write_jsonl(w, sweep_records(result))
}

pub fn read_sweep_jsonl<R: BufRead>(r: R) -> Result<Vec<SweepRecord>, RecordError> {
    read_jsonl(r, |rec: &SweepRecord| rec.schema_version)
}

pub fn write_sweep_csv<W: Write>(w: W, result: &SweepResult) -> Result<(), RecordError> {
    let mut wr = csv::Writer::from_writer(w);
    for p in &result.points {
        wr.serialize(SweepRow::from(p))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: std::io::Read>(r: R) -> Result<Vec<SweepRow>, RecordError> {
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
    if header != SWEEP_CSV_HEADER {
        return Err(RecordError::Csv(csv::Error::from(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("unexpected sweep header {header:?}"),
        ))));
    }
    rd.deserialize()
        .map(|row| row.map_err(RecordError::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{sweep, SweepSpec};
    use crate::elements::{HomodyneModel, NoiseParams};
    use crate::protocols::{run_ghz, run_two_qubit, TwoQubitSettings};
    use crate::rng::TrialRng;
    use proptest::prelude::*;

    fn report(seed: u64) -> ProtocolReport {
        let mut rng = TrialRng::new(seed);
        let settings = TwoQubitSettings {
            homodyne: HomodyneModel::new(0.3).unwrap(),
            ..Default::default()
        };
        let a = NoiseParams::from_angle(0.1 * seed as f64);
        let b = NoiseParams::from_angle(-0.2 * seed as f64);
        run_two_qubit(&a, &b, &settings, &mut rng).unwrap()
    }

    #[test]
    fn report_round_trip_restores_state() {
        let mut rng = TrialRng::new(2);
        let ghz = run_ghz(
            4,
            &[NoiseParams::from_angle(0.3); 4],
            &HomodyneModel::ideal(),
            &mut rng,
        )
        .unwrap();
        let records = vec![
            ReportRecord::from_report(RunKind::TwoQubit, 0, &report(1)),
            ReportRecord::from_report(RunKind::Ghz, 1, &ghz),
        ];
        let mut buf = Vec::new();
        write_reports(&mut buf, &records).unwrap();
        let back = read_reports(buf.as_slice()).unwrap();
        assert_eq!(back, records);
        assert_eq!(back[1].state().unwrap(), ghz.final_state);
    }

    #[test]
    fn schema_version_is_checked() {
        let mut rec = ReportRecord::from_report(RunKind::TwoQubit, 0, &report(3));
        rec.schema_version = 9;
        let mut buf = Vec::new();
        write_reports(&mut buf, &[rec]).unwrap();
        assert!(matches!(
            read_reports(buf.as_slice()),
            Err(RecordError::Schema { line: 1, found: 9 })
        ));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let input = b"\n{\"schema_version\": 1}\n";
        match read_reports(&input[..]) {
            Err(RecordError::Json { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sweep_files_round_trip() {
        let spec = SweepSpec {
            variable: SweepVariable::HomodyneErr,
            grid: vec![0.0, 0.2, 0.4],
            trials_per_point: 30,
            seed: 5,
            base: TwoQubitSettings::default(),
        };
        let result = sweep(&spec).unwrap();

        let mut csv_buf = Vec::new();
        write_sweep_csv(&mut csv_buf, &result).unwrap();
        let text = String::from_utf8(csv_buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), SWEEP_CSV_HEADER.join(","));
        let rows = read_sweep_csv(csv_buf.as_slice()).unwrap();
        let expected: Vec<SweepRow> = result.points.iter().map(SweepRow::from).collect();
        assert_eq!(rows, expected);

        let mut json_buf = Vec::new();
        write_sweep_jsonl(&mut json_buf, &result).unwrap();
        let back = read_sweep_jsonl(json_buf.as_slice()).unwrap();
        assert_eq!(back, sweep_records(&result));
    }

    #[test]
    fn csv_rejects_foreign_header() {
        assert!(read_sweep_csv(&b"a,b\n1,2\n"[..]).is_err());
    }

    proptest! {
        #[test]
        fn sweep_row_floats_round_trip(vals in proptest::array::uniform8(-1e300f64..1e300)) {
            let row = SweepRow {
                value: vals[0], mean_fidelity: vals[1], success_rate: vals[2], freq_phi1: vals[3],
                freq_phi2: vals[4], freq_phi3: vals[5], freq_phi4: vals[6], std_err: vals[7],
            };
            let mut wr = csv::Writer::from_writer(Vec::new());
            wr.serialize(row).unwrap();
            let buf = wr.into_inner().unwrap();
            let back = read_sweep_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, vec![row]);
        }

        #[test]
        fn report_floats_round_trip(seed in 0u64..500) {
            let rec = ReportRecord::from_report(RunKind::TwoQubit, seed as u32, &report(seed));
            let mut buf = Vec::new();
            write_reports(&mut buf, std::slice::from_ref(&rec)).unwrap();
            prop_assert_eq!(read_reports(buf.as_slice()).unwrap(), vec![rec]);
        }
    }
}
