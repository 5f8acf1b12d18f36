//! `rfs`: command-line front end for the rfs-core library.
//!
//! Exit codes: 0 success, 1 contract violation or bad arguments, 2 I/O failure.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use rfs_core::harness::{
    emit_report, preset, presets, run_experiment, write_report, ExperimentConfig, InstanceSpec,
    Mode, ReportFormat, SeedSpec,
};
use rfs_core::protocol::{exact_outcome_analysis, run_verifier, VerifierConfig};
use rfs_core::provers::{make_prover, ProverKind};
use rfs_core::quantum::qrfs_run;
use rfs_core::{
    g_eval, solve_classical_root, CheckMode, CountingOracle, GVariant, NodePath, Result, RfsError,
    RfsInstance,
};

#[derive(Parser)]
#[command(
    name = "rfs",
    version,
    about = "Recursive Fourier sampling: solvers, simulator and interactive verifier"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Copy)]
struct InstanceArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    l: usize,
    /// Instance seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// hamming-mod3 or parity.
    #[arg(long, default_value = "hamming-mod3", value_parser = parse::<GVariant>)]
    g: GVariant,
}

impl InstanceArgs {
    fn build(&self) -> Result<Arc<RfsInstance>> {
        Ok(Arc::new(RfsInstance::new(
            self.n, self.l, self.g, self.seed,
        )?))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMode {
    Classical,
    Qrfs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(clap::Args)]
struct OutputArgs {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Compute g(s_root) of one instance.
    Solve {
        #[arg(long, value_enum)]
        mode: SolveMode,
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Run the interactive verifier against a prover for a batch of trials.
    Prove {
        /// honest-lookup, honest-quantum, root-flip, level-flip:K, random-lie:P or g-preserving.
        #[arg(long, value_parser = parse::<ProverKind>)]
        prover: ProverKind,
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        /// Use instance seeds seed, seed+1, ... instead of one instance for every trial.
        #[arg(long)]
        vary_instance: bool,
        /// Base seed for verifier challenges.
        #[arg(long, default_value_t = 0)]
        verifier_seed: u64,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// Record per-trial wall time (makes output non-reproducible).
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print the full transcript of one verifier run.
    Transcript {
        #[arg(long, value_parser = parse::<ProverKind>)]
        prover: ProverKind,
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value_t = 0)]
        verifier_seed: u64,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// Seed for randomized provers.
        #[arg(long, default_value_t = 0)]
        prover_seed: u64,
    },
    /// Exact accept and abort probabilities for a deterministic prover.
    AnalyzeExact {
        #[arg(long, value_parser = parse::<ProverKind>)]
        prover: ProverKind,
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value_t = 3)]
        reps: usize,
    },
    /// Check the promise on an instance.
    CheckInstance {
        #[command(flatten)]
        instance: InstanceArgs,
        /// exhaustive, sampled:COUNT or sampled:COUNT:SEED.
        #[arg(long, default_value = "exhaustive", value_parser = parse::<CheckMode>)]
        mode: CheckMode,
    },
    /// Run a named preset, or list presets when no name is given.
    Preset {
        name: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run an experiment described by a JSON config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn parse<T: std::str::FromStr<Err = RfsError>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: RfsError| e.to_string())
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn run_and_emit(config: &ExperimentConfig, output: &OutputArgs) -> Result<()> {
    let report = run_experiment(config)?;
    let format = output.format.into();
    match &output.out {
        Some(path) => emit_report(&report, format, path),
        None => write_report(&report, format, io::stdout().lock()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve { mode, instance } => {
            let inst = instance.build()?;
            let oracle = CountingOracle::new(inst.clone());
            let expected = g_eval(&inst.secret_at(&NodePath::root())?, instance.g);
            let (mode_name, answer, determinism) = match mode {
                SolveMode::Classical => ("classical", solve_classical_root(&oracle)?.answer, None),
                SolveMode::Qrfs => {
                    let out = qrfs_run(&oracle, instance.g, instance.l, &NodePath::root())?;
                    ("qrfs", out.answer, Some(out.determinism))
                }
            };
            let counts = oracle.counts();
            print_json(&json!({
                "instance": inst.descriptor(),
                "mode": mode_name,
                "answer": answer as u8,
                "expected": expected as u8,
                "determinism": determinism,
                "classical_queries": counts.classical_queries,
                "quantum_queries": counts.quantum_queries,
            }))
        }
        Command::Prove {
            prover,
            instance,
            trials,
            vary_instance,
            verifier_seed,
            reps,
            timing,
            output,
        } => {
            let seeds = if vary_instance {
                SeedSpec::Range {
                    start: instance.seed,
                    count: trials,
                }
            } else {
                SeedSpec::Fixed {
                    seed: instance.seed,
                }
            };
            let config = ExperimentConfig {
                instance: InstanceSpec {
                    n: instance.n,
                    l: instance.l,
                    g_variant: instance.g,
                    seeds,
                },
                mode: Mode::Verifier {
                    prover,
                    repetitions: reps,
                },
                trials,
                rng_seed: verifier_seed,
                record_timing: timing,
            };
            run_and_emit(&config, &output)
        }
        Command::Transcript {
            prover,
            instance,
            verifier_seed,
            reps,
            prover_seed,
        } => {
            let oracle = Arc::new(CountingOracle::new(instance.build()?));
            let mut endpoint = make_prover(prover, &oracle, prover_seed)?;
            let config = VerifierConfig {
                repetitions: reps,
                rng_seed: verifier_seed,
            };
            let t = run_verifier(
                &oracle,
                &mut endpoint,
                instance.g,
                instance.l,
                &config,
                &NodePath::root(),
            )?;
            let mut out = io::stdout().lock();
            out.write_all(t.to_json()?.as_bytes())?;
            out.write_all(b"\n")?;
            Ok(())
        }
        Command::AnalyzeExact {
            prover,
            instance,
            reps,
        } => {
            let inst = instance.build()?;
            let oracle = Arc::new(CountingOracle::new(inst.clone()));
            let mut endpoint = make_prover(prover, &oracle, 0)?;
            let config = VerifierConfig {
                repetitions: reps,
                rng_seed: 0,
            };
            let probs = exact_outcome_analysis(&inst, &mut endpoint, instance.g, &config)?;
            print_json(&json!({
                "instance": inst.descriptor(),
                "prover": prover.to_string(),
                "repetitions": reps,
                "probabilities": probs,
            }))
        }
        Command::CheckInstance { instance, mode } => {
            let inst = instance.build()?;
            let report = inst.check_promise(mode)?;
            print_json(&json!({
                "instance": inst.descriptor(),
                "mode": match mode {
                    CheckMode::Exhaustive => "exhaustive".to_string(),
                    CheckMode::Sampled { count, rng_seed } => format!("sampled:{count}:{rng_seed}"),
                },
                "checked": report.checked,
                "violations": report.violations,
            }))?;
            if report.violations > 0 {
                return Err(RfsError::Contract(format!(
                    "{} promise violations",
                    report.violations
                )));
            }
            Ok(())
        }
        Command::Preset { name, output } => match name {
            None => {
                let mut out = io::stdout().lock();
                for (name, _) in presets() {
                    writeln!(out, "{name}")?;
                }
                Ok(())
            }
            Some(name) => run_and_emit(&preset(&name)?, &output),
        },
        Command::Run { config, output } => {
            let text = std::fs::read_to_string(&config)?;
            let config: ExperimentConfig = serde_json::from_str(&text)?;
            run_and_emit(&config, &output)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rfs: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
