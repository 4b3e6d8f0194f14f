use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use entdist_core::acceptance::{run_criterion, AcceptanceConfig, CRITERIA};
use entdist_core::analysis::{
    ghz_trials, sweep, two_qubit_trials, NoiseSource, SweepSpec, SweepVariable,
};
use entdist_core::protocols::{CorrectionTable, GhzProtocol, TwoQubitProtocol};
use entdist_core::records::{
    write_reports, write_sweep_csv, write_sweep_jsonl, ReportRecord, RunKind,
};
use entdist_core::{HomodyneModel, Outcome, ProtocolReport, TwoQubitSettings};

use crate::config::{NoiseKind, RunConfig, TableFormat};
use crate::error::CliError;

/// Command-line values that take precedence over the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u32>,
    pub p_err: Option<HomodyneModel>,
    pub output: Option<PathBuf>,
}

impl Overrides {
    fn seed(&self, cfg: &RunConfig) -> u64 {
        self.seed.or(cfg.seed).unwrap_or(0)
    }

    fn trials(&self, cfg: &RunConfig) -> u32 {
        self.trials.or(cfg.trials.map(|t| t.0)).unwrap_or(1)
    }

    fn homodyne(&self, cfg: &RunConfig) -> HomodyneModel {
        self.p_err.unwrap_or(cfg.homodyne.p_err.0)
    }

    fn output(&self, cfg: &RunConfig) -> Option<PathBuf> {
        self.output.clone().or_else(|| cfg.output.clone())
    }
}

fn fixed_noise(
    cfg: &RunConfig,
    parties: usize,
) -> Result<Option<Vec<entdist_core::NoiseParams>>, CliError> {
    match &cfg.noise {
        None => Ok(None),
        Some(n) => n
            .get_ref()
            .fixed(parties)
            .map_err(|m| cfg.at(n.span(), "noise", m)),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

fn summarize(
    out: &mut dyn Write,
    title: &str,
    seed: u64,
    reports: &[ProtocolReport],
    kind: RunKind,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let n = reports.len() as f64;
    let successes = reports.iter().filter(|r| r.success).count();
    let mean = reports.iter().map(|r| r.fidelity).sum::<f64>() / n;
    let mut outcomes: BTreeMap<String, usize> = BTreeMap::new();
    for r in reports {
        let key = match &r.record.outcome {
            Outcome::Pair(p) => p.to_string(),
            Outcome::Bits(b) => b.0.clone(),
        };
        *outcomes.entry(key).or_default() += 1;
    }
    writeln!(out, "{title}: {} trials, seed {seed}", reports.len())?;
    writeln!(out, "success rate: {}", successes as f64 / n)?;
    writeln!(out, "mean fidelity: {mean:.12}")?;
    let listed: Vec<String> = outcomes.iter().map(|(k, v)| format!("{k} {v}")).collect();
    writeln!(out, "outcomes: {}", listed.join(", "))?;
    if let Some(path) = output {
        let records: Vec<ReportRecord> = reports
            .iter()
            .enumerate()
            .map(|(i, r)| ReportRecord::from_report(kind, i as u32, r))
            .collect();
        write_reports(create(path)?, &records)?;
        writeln!(out, "records: {}", path.display())?;
    }
    Ok(())
}

pub fn run_two_qubit(cfg: &RunConfig, ov: &Overrides, out: &mut dyn Write) -> Result<(), CliError> {
    let (fiber, compensate) = cfg.fiber();
    let settings = TwoQubitSettings {
        fiber,
        homodyne: ov.homodyne(cfg),
        compensate,
    };
    let noise = match fixed_noise(cfg, 2)? {
        None => NoiseSource::Haar,
        Some(ch) => NoiseSource::Fixed(ch[0], ch[1]),
    };
    let seed = ov.seed(cfg);
    let reports = two_qubit_trials(
        TwoQubitProtocol::standard(),
        ov.trials(cfg),
        &settings,
        noise,
        seed,
        0,
    )?;
    summarize(
        out,
        "run-two-qubit",
        seed,
        &reports,
        RunKind::TwoQubit,
        ov.output(cfg).as_deref(),
    )
}

pub fn run_ghz(
    cfg: &RunConfig,
    ov: &Overrides,
    n: Option<usize>,
    odd_flag: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let n = n.or(cfg.ghz.n.map(|p| p.0)).unwrap_or(4);
    let allow_odd = odd_flag || cfg.ghz.experimental_odd_n;
    if n % 2 == 1 && !allow_odd {
        return Err(CliError::Config(format!(
            "n = {n} is odd; the source alternates w1/w2 between neighbours, which only pairs up for even n. \
             Pass --experimental-odd-n (or set ghz.experimental_odd_n = true) to run the extrapolated pattern"
        )));
    }
    if cfg.fiber.is_some() {
        eprintln!("note: run-ghz does not model fiber dispersion; [fiber] is ignored");
    }
    let protocol = GhzProtocol::new(n, allow_odd)?;
    let fixed = fixed_noise(cfg, n)?;
    let seed = ov.seed(cfg);
    let reports = ghz_trials(
        &protocol,
        ov.trials(cfg),
        &ov.homodyne(cfg),
        fixed.as_deref(),
        seed,
    )?;
    summarize(
        out,
        &format!("run-ghz n={n}"),
        seed,
        &reports,
        RunKind::Ghz,
        ov.output(cfg).as_deref(),
    )
}

pub fn run_sweep(
    cfg: &RunConfig,
    ov: &Overrides,
    format: Option<TableFormat>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let section = cfg.sweep.as_ref().ok_or_else(|| {
        CliError::Config("sweep needs a [sweep] section with `variable` and `grid`".into())
    })?;
    let s = section.get_ref();
    if let Some(noise) = &cfg.noise {
        if noise.get_ref().kind != NoiseKind::Random && s.variable != SweepVariable::NoiseAngle {
            return Err(cfg.at(
                noise.span(),
                "noise",
                "sweeps draw Haar-random channels (noise-angle sweeps set them from the grid); use kind = \"random\"",
            ));
        }
    }
    let (fiber, compensate) = cfg.fiber();
    let spec = SweepSpec {
        variable: s.variable,
        grid: s.grid.0.clone(),
        trials_per_point: ov
            .trials
            .or(s.trials_per_point.map(|t| t.0))
            .or(cfg.trials.map(|t| t.0))
            .unwrap_or(1000),
        seed: ov.seed(cfg),
        base: TwoQubitSettings {
            fiber,
            homodyne: ov.homodyne(cfg),
            compensate,
        },
    };
    if spec.variable == SweepVariable::HomodyneErr
        && spec.grid.iter().any(|v| !(0.0..=0.5).contains(v))
    {
        return Err(cfg.at(
            section.span(),
            "sweep.grid",
            "homodyne-err values must lie in [0, 0.5]",
        ));
    }
    if spec.variable == SweepVariable::FiberDelta
        && spec.grid.iter().any(|v| fiber.length_b + v <= 0.0)
    {
        return Err(cfg.at(
            section.span(),
            "sweep.grid",
            "fiber-delta values must keep length_a positive",
        ));
    }
    let result = sweep(&spec)?;
    let output = ov.output(cfg);
    let format = format.or(s.format).unwrap_or_else(|| match &output {
        Some(p) if p.extension().is_some_and(|e| e == "jsonl") => TableFormat::Jsonl,
        _ => TableFormat::Csv,
    });
    match output {
        None => match format {
            TableFormat::Csv => write_sweep_csv(&mut *out, &result)?,
            TableFormat::Jsonl => write_sweep_jsonl(&mut *out, &result)?,
        },
        Some(path) => {
            let w = create(&path)?;
            match format {
                TableFormat::Csv => write_sweep_csv(w, &result)?,
                TableFormat::Jsonl => write_sweep_jsonl(w, &result)?,
            }
            writeln!(
                out,
                "sweep {}: {} points x {} trials, seed {}",
                result.variable,
                result.points.len(),
                spec.trials_per_point,
                spec.seed
            )?;
            for p in &result.points {
                writeln!(
                    out,
                    "  {} = {}: success rate {}, mean fidelity {:.12}",
                    result.variable, p.value, p.success_rate, p.mean_fidelity
                )?;
            }
            writeln!(out, "table: {}", path.display())?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Fault {
    /// Swap two entries of the correction table.
    CorruptCorrections,
}

pub fn verify(
    criterion: Option<u8>,
    fault: Option<Fault>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = AcceptanceConfig {
        corrections: match fault {
            Some(Fault::CorruptCorrections) => CorrectionTable::corrupted(),
            None => CorrectionTable::standard(),
        },
    };
    let results = match criterion {
        Some(id) => {
            if !CRITERIA.iter().any(|(i, _)| *i == id) {
                return Err(CliError::Config(format!(
                    "no acceptance criterion {id} (valid: 1-8)"
                )));
            }
            vec![run_criterion(id, &cfg)?]
        }
        None => {
            let mut results = Vec::new();
            for (id, _) in CRITERIA {
                let r = run_criterion(id, &cfg)?;
                writeln!(out, "{r}")?;
                out.flush()?;
                results.push(r);
            }
            results
        }
    };
    if criterion.is_some() {
        for r in &results {
            writeln!(out, "{r}")?;
        }
    }
    let passed = results.iter().filter(|r| r.passed).count();
    writeln!(out, "{passed}/{} criteria passed", results.len())?;
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{} {}", r.id, r.name))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Acceptance(format!(
            "failing criteria: {}",
            failed.join(", ")
        )))
    }
}
