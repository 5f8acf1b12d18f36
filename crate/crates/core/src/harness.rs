//! Batch experiments and reports.
//!
//! Trial `i` of an experiment derives everything it needs from
//! `(rng_seed, i)`:
//!
//! * `trial_seed = splitmix64(rng_seed + (i + 1) * 0x9E3779B97F4A7C15)`
//! * verifier challenges are seeded with `trial_seed`
//! * a randomized prover is seeded with `splitmix64(trial_seed ^ 0x5052_4F56)`
//! * the instance seed comes from [`SeedSpec`] and does not depend on `rng_seed`
//!
//! so one trial can be replayed in isolation.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::{g_eval, GVariant};
use crate::classical::solve_classical_root;
use crate::error::{Result, RfsError};
use crate::instance::{NodePath, RfsInstance, PRG_ID};
use crate::oracle::CountingOracle;
use crate::protocol::{run_verifier, VerifierConfig};
use crate::provers::{make_prover, ProverKind};
use crate::quantum::qrfs_run;

/// z for a two-sided 95% interval.
const Z95: f64 = 1.959_963_984_540_054;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(rng_seed: u64, trial: u64) -> u64 {
    splitmix64(rng_seed.wrapping_add((trial + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

pub fn prover_seed(trial_seed: u64) -> u64 {
    splitmix64(trial_seed ^ 0x5052_4F56)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SeedSpec {
    /// Every trial uses the same instance.
    Fixed { seed: u64 },
    /// Trial `i` uses instance seed `start + (i mod count)`.
    Range { start: u64, count: u64 },
}

impl SeedSpec {
    pub fn seed_for(&self, trial: u64) -> u64 {
        match *self {
            SeedSpec::Fixed { seed } => seed,
            SeedSpec::Range { start, count } => start.wrapping_add(trial % count.max(1)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n: usize,
    pub l: usize,
    pub g_variant: GVariant,
    pub seeds: SeedSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Mode {
    Classical,
    Qrfs,
    Verifier {
        prover: ProverKind,
        repetitions: usize,
    },
}

impl Mode {
    fn name(&self) -> &'static str {
        match self {
            Mode::Classical => "classical",
            Mode::Qrfs => "qrfs",
            Mode::Verifier { .. } => "verifier",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub mode: Mode,
    pub trials: u64,
    pub rng_seed: u64,
    /// Include per-trial wall time in rows. Reports are then no longer byte-reproducible.
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(RfsError::contract("an experiment needs at least one trial"));
        }
        if let SeedSpec::Range { count: 0, .. } = self.instance.seeds {
            return Err(RfsError::contract("seed range must be non-empty"));
        }
        // surface parameter errors once instead of once per row
        RfsInstance::new(self.instance.n, self.instance.l, self.instance.g_variant, 0)?;
        if let Mode::Verifier {
            prover,
            repetitions,
        } = self.mode
        {
            prover.validate(self.instance.l)?;
            if repetitions == 0 {
                return Err(RfsError::contract("verifier needs at least one repetition"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialOutcome {
    AcceptCorrect,
    AcceptWrong,
    Abort,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub trial: u64,
    pub mode: String,
    pub prover: Option<String>,
    pub repetitions: Option<usize>,
    pub n: usize,
    pub l: usize,
    pub g_variant: GVariant,
    pub instance_seed: u64,
    pub verifier_seed: u64,
    pub outcome: TrialOutcome,
    pub answer: Option<u8>,
    pub expected: Option<u8>,
    pub classical_queries: u64,
    pub quantum_queries: u64,
    pub prover_queries: u64,
    pub aborted: bool,
    pub error: Option<String>,
    pub wall_time_us: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub count: u64,
    pub rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

impl Frequency {
    pub fn new(count: u64, total: u64) -> Self {
        let (wilson_low, wilson_high) = wilson_interval(count, total, Z95);
        Frequency {
            count,
            rate: if total == 0 {
                0.0
            } else {
                count as f64 / total as f64
            },
            wilson_low,
            wilson_high,
        }
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountStats {
    pub min: u64,
    pub max: u64,
    pub mean: f64,
}

impl CountStats {
    fn of(values: impl Iterator<Item = u64>) -> Option<Self> {
        let v: Vec<u64> = values.collect();
        if v.is_empty() {
            return None;
        }
        Some(CountStats {
            min: *v.iter().min().expect("nonempty"),
            max: *v.iter().max().expect("nonempty"),
            mean: v.iter().sum::<u64>() as f64 / v.len() as f64,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trials: u64,
    pub accept_correct: Frequency,
    pub accept_wrong: Frequency,
    pub abort: Frequency,
    pub errors: u64,
    /// Over rows without errors.
    pub classical_queries: Option<CountStats>,
    pub quantum_queries: Option<CountStats>,
    pub prover_queries: Option<CountStats>,
}

impl Summary {
    pub fn from_rows(rows: &[ResultRow]) -> Self {
        let total = rows.len() as u64;
        let count = |o: TrialOutcome| rows.iter().filter(|r| r.outcome == o).count() as u64;
        let ok = || rows.iter().filter(|r| r.outcome != TrialOutcome::Error);
        Summary {
            trials: total,
            accept_correct: Frequency::new(count(TrialOutcome::AcceptCorrect), total),
            accept_wrong: Frequency::new(count(TrialOutcome::AcceptWrong), total),
            abort: Frequency::new(count(TrialOutcome::Abort), total),
            errors: count(TrialOutcome::Error),
            classical_queries: CountStats::of(ok().map(|r| r.classical_queries)),
            quantum_queries: CountStats::of(ok().map(|r| r.quantum_queries)),
            prover_queries: CountStats::of(ok().map(|r| r.prover_queries)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub prg_id: String,
    pub verifier_rng: String,
    pub version: String,
}

impl Default for Metadata {
    fn default() -> Self {
        Metadata {
            prg_id: PRG_ID.to_string(),
            verifier_rng: "chacha8".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub metadata: Metadata,
    pub rows: Vec<ResultRow>,
    pub summary: Summary,
}

struct TrialData {
    answer: Option<bool>,
    aborted: bool,
    prover_queries: u64,
}

fn run_trial(config: &ExperimentConfig, trial: u64) -> ResultRow {
    let spec = config.instance;
    let instance_seed = spec.seeds.seed_for(trial);
    let verifier_seed = trial_seed(config.rng_seed, trial);
    let (prover, repetitions) = match config.mode {
        Mode::Verifier {
            prover,
            repetitions,
        } => (Some(prover.to_string()), Some(repetitions)),
        _ => (None, None),
    };
    let mut row = ResultRow {
        trial,
        mode: config.mode.name().to_string(),
        prover,
        repetitions,
        n: spec.n,
        l: spec.l,
        g_variant: spec.g_variant,
        instance_seed,
        verifier_seed,
        outcome: TrialOutcome::Error,
        answer: None,
        expected: None,
        classical_queries: 0,
        quantum_queries: 0,
        prover_queries: 0,
        aborted: false,
        error: None,
        wall_time_us: None,
    };
    let started = Instant::now();
    let instance = match RfsInstance::new(spec.n, spec.l, spec.g_variant, instance_seed) {
        Ok(i) => Arc::new(i),
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let oracle = Arc::new(CountingOracle::new(instance.clone()));
    let result = (|| -> Result<(bool, TrialData)> {
        let expected = g_eval(&instance.secret_at(&NodePath::root())?, spec.g_variant);
        let data = match config.mode {
            Mode::Classical => TrialData {
                answer: Some(solve_classical_root(&oracle)?.answer),
                aborted: false,
                prover_queries: 0,
            },
            Mode::Qrfs => TrialData {
                answer: Some(qrfs_run(&oracle, spec.g_variant, spec.l, &NodePath::root())?.answer),
                aborted: false,
                prover_queries: 0,
            },
            Mode::Verifier {
                prover,
                repetitions,
            } => {
                let mut endpoint = make_prover(prover, &oracle, prover_seed(verifier_seed))?;
                let vc = VerifierConfig {
                    repetitions,
                    rng_seed: verifier_seed,
                };
                let t = run_verifier(
                    &oracle,
                    &mut endpoint,
                    spec.g_variant,
                    spec.l,
                    &vc,
                    &NodePath::root(),
                )?;
                TrialData {
                    answer: t.accepted(),
                    aborted: t.is_abort(),
                    prover_queries: t.prover_queries,
                }
            }
        };
        Ok((expected, data))
    })();
    let counts = oracle.counts();
    row.classical_queries = counts.classical_queries;
    row.quantum_queries = counts.quantum_queries;
    match result {
        Ok((expected, data)) => {
            row.expected = Some(expected as u8);
            row.answer = data.answer.map(u8::from);
            row.aborted = data.aborted;
            row.prover_queries = data.prover_queries;
            row.outcome = match data.answer {
                None => TrialOutcome::Abort,
                Some(a) if a == expected => TrialOutcome::AcceptCorrect,
                Some(_) => TrialOutcome::AcceptWrong,
            };
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    if config.record_timing {
        row.wall_time_us = Some(started.elapsed().as_micros() as u64);
    }
    row
}

/// Run every trial (in parallel) and summarize. Rows come back in trial order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let rows: Vec<ResultRow> = (0..config.trials)
        .into_par_iter()
        .map(|i| run_trial(config, i))
        .collect();
    let summary = Summary::from_rows(&rows);
    Ok(Report {
        config: *config,
        metadata: Metadata::default(),
        rows,
        summary,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = RfsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(RfsError::contract(format!("unknown report format `{s}`"))),
        }
    }
}

/// JSON: one `{config, metadata, rows, summary}` document. CSV: header plus one line per row.
pub fn write_report<W: Write>(report: &Report, format: ReportFormat, out: W) -> Result<()> {
    if report.rows.is_empty() {
        return Err(RfsError::contract("report has no rows"));
    }
    match format {
        ReportFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, report)?;
            out.write_all(b"\n")?;
            out.flush()?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in &report.rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn emit_report(report: &Report, format: ReportFormat, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    write_report(report, format, BufWriter::new(file))
}

/// Named configurations. `*-log-*` presets use `l = log2 n`.
pub fn presets() -> Vec<(&'static str, ExperimentConfig)> {
    let cfg = |n, l, mode, trials| ExperimentConfig {
        instance: InstanceSpec {
            n,
            l,
            g_variant: GVariant::HammingMod3,
            seeds: SeedSpec::Range {
                start: 0,
                count: trials,
            },
        },
        mode,
        trials,
        rng_seed: 2024,
        record_timing: false,
    };
    let verifier = |prover| Mode::Verifier {
        prover,
        repetitions: 3,
    };
    vec![
        ("classical-log-n2", cfg(2, 1, Mode::Classical, 100)),
        ("classical-log-n4", cfg(4, 2, Mode::Classical, 100)),
        ("classical-log-n8", cfg(8, 3, Mode::Classical, 20)),
        ("qrfs-log-n2", cfg(2, 1, Mode::Qrfs, 100)),
        ("qrfs-log-n4", cfg(4, 2, Mode::Qrfs, 50)),
        (
            "verifier-honest-log-n2",
            cfg(2, 1, verifier(ProverKind::HonestLookup), 1000),
        ),
        (
            "verifier-honest-log-n4",
            cfg(4, 2, verifier(ProverKind::HonestLookup), 1000),
        ),
        (
            "verifier-honest-log-n8",
            cfg(8, 3, verifier(ProverKind::HonestLookup), 1000),
        ),
        (
            "verifier-quantum-log-n2",
            cfg(2, 1, verifier(ProverKind::HonestQuantum), 100),
        ),
        // largest log-regime quantum prover: n = 8, l = 3 would need 27 qubits for the root request
        (
            "verifier-quantum-log-n4",
            cfg(4, 2, verifier(ProverKind::HonestQuantum), 100),
        ),
        (
            "soundness-random-lie-log-n4",
            cfg(4, 2, verifier(ProverKind::RandomLie(1.0)), 10_000),
        ),
        (
            "soundness-root-flip-log-n4",
            cfg(4, 2, verifier(ProverKind::RootFlip), 10_000),
        ),
        (
            "verifier-honest-l2-n3",
            cfg(3, 2, verifier(ProverKind::HonestLookup), 1000),
        ),
        (
            "verifier-honest-l2-n5",
            cfg(5, 2, verifier(ProverKind::HonestLookup), 1000),
        ),
        (
            "verifier-honest-l2-n6",
            cfg(6, 2, verifier(ProverKind::HonestLookup), 1000),
        ),
        (
            "verifier-quantum-l2-n6",
            cfg(6, 2, verifier(ProverKind::HonestQuantum), 20),
        ),
    ]
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    presets()
        .into_iter()
        .find(|(k, _)| *k == name)
        .map(|(_, c)| c)
        .ok_or_else(|| RfsError::contract(format!("unknown preset `{name}`")))
}
