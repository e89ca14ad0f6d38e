use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use rsv_core::experiment::{check_provenance, Experiment, ExperimentConfig, Stage, StageOutcome, System};
use rsv_core::Error;

/// Staged noise- and reverberation-robust speaker-verification experiment.
#[derive(Debug, Parser)]
#[command(name = "rsv", version)]
struct Cli {
    /// TOML configuration; built-in defaults fill anything it leaves out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `general.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// With run-experiment, stop after this stage.
    #[arg(long, global = true)]
    stage: Option<Stage>,
    /// System to run, e.g. `baseline` or `AE+MC(N+RR)`; repeat for several. Replaces `regimes.systems`.
    #[arg(long = "regime", global = true)]
    regimes: Vec<System>,
    /// Worker threads (0 = one per core). Overrides `general.jobs`.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    SynthData,
    Corrupt,
    TrainAe,
    Enhance,
    Features,
    TrainBackend,
    Ivectors,
    Score,
    Eer,
    /// All stages in order, then the provenance check; prints the EER table.
    RunExperiment,
}

impl Command {
    fn stage(self) -> Option<Stage> {
        Some(match self {
            Command::SynthData => Stage::SynthData,
            Command::Corrupt => Stage::Corrupt,
            Command::TrainAe => Stage::TrainAe,
            Command::Enhance => Stage::Enhance,
            Command::Features => Stage::Features,
            Command::TrainBackend => Stage::TrainBackend,
            Command::Ivectors => Stage::Ivectors,
            Command::Score => Stage::Score,
            Command::Eer => Stage::Eer,
            Command::RunExperiment => return None,
        })
    }
}

fn effective_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.general.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        cfg.general.jobs = jobs;
    }
    if !cli.regimes.is_empty() {
        cfg.regimes.systems = cli.regimes.iter().map(|s| s.to_string()).collect();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report(stage: Stage, outcome: StageOutcome) {
    let what = match outcome {
        StageOutcome::Ran => "done",
        StageOutcome::UpToDate => "up to date",
    };
    eprintln!("{stage}: {what}");
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = effective_config(&cli)?;
    if cli.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let Some(command) = cli.command else {
        bail!(Error::Config("no subcommand given (see --help)".into()));
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.general.jobs)
        .build_global()
        .context("starting worker pool")?;
    let exp = Experiment::new(cfg)?;
    if let Some(stage) = command.stage() {
        report(stage, exp.run_stage(stage)?);
        return Ok(());
    }
    let last = cli.stage.unwrap_or(Stage::Eer);
    for stage in Stage::ALL.into_iter().take_while(|s| *s <= last) {
        report(stage, exp.run_stage(stage)?);
    }
    if last == Stage::Eer {
        let prov = check_provenance(exp.work_dir(), last.dir())?;
        if !prov.is_complete() {
            bail!(Error::StaleManifest(format!(
                "provenance incomplete: dangling {:?}, unreachable {:?}",
                prov.dangling, prov.unreachable
            )));
        }
        print!("{}", exp.report()?);
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_)) => 2,
        Some(Error::StaleManifest(_)) => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
