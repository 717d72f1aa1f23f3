mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Protocol;
use config::RunConfig;
use error::{CliError, CliResult};
use output::{emit, Envelope, Provenance, Report, SCHEMA_VERSION};

#[derive(Parser)]
#[command(
    name = "floqsweet",
    version,
    about = "Floquet sweet-spot analysis of driven fluxonium qubits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file. Tabular commands write CSV here and the envelope to `<out>.envelope.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (overrides the config; never changes the output).
    #[arg(long)]
    threads: Option<usize>,
    /// Random seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Fail on the first per-point error instead of marking it.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Static spectrum, two-level reduction and quasi-energies.
    Spectrum(Common),
    /// Decoherence rates at the configured drive.
    Rates(Common),
    /// T_phi and T1 over a drive-frequency / amplitude grid (CSV).
    SweetScan(Common),
    /// Sweet-spot curves of the dc-flux manifold.
    SweetTrace(Common),
    /// Avoided-crossing gaps against their closed-form estimates.
    GapCheck(Common),
    /// Single-qubit gates and readout mapping at a driven sweet spot.
    Gate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "x")]
        protocol: Protocol,
    },
    /// Two-qubit √iSWAP fidelity map (CSV).
    TwoQubit(Common),
    /// Frequency-modulation and spin-locking limits.
    Limits(Common),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Rates(_) => "rates",
            Command::SweetScan(_) => "sweet-scan",
            Command::SweetTrace(_) => "sweet-trace",
            Command::GapCheck(_) => "gap-check",
            Command::Gate { .. } => "gate",
            Command::TwoQubit(_) => "two-qubit",
            Command::Limits(_) => "limits",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Spectrum(c)
            | Command::Rates(c)
            | Command::SweetScan(c)
            | Command::SweetTrace(c)
            | Command::GapCheck(c)
            | Command::TwoQubit(c)
            | Command::Limits(c) => c,
            Command::Gate { common, .. } => common,
        }
    }
}

fn load(common: &Common) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::parse(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = Some(s);
    }
    cfg.check()?;
    if common.threads == Some(0) {
        return Err(CliError::schema(
            "--threads",
            "thread count must be positive",
        ));
    }
    Ok(cfg)
}

fn run(cmd: &Command) -> CliResult<()> {
    let common = cmd.common();
    let cfg = load(common)?;
    let seed = cfg.seed.unwrap_or(0);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = common.threads.or(cfg.threads) {
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?;
    let report: Report = pool.install(|| match cmd {
        Command::Spectrum(_) => commands::spectrum(&cfg, common.strict),
        Command::Rates(_) => commands::rates(&cfg),
        Command::SweetScan(_) => commands::sweet_scan_cmd(&cfg, common.strict),
        Command::SweetTrace(_) => commands::sweet_trace(&cfg),
        Command::GapCheck(_) => commands::gap_check(&cfg),
        Command::Gate { protocol, .. } => commands::gate(&cfg, *protocol),
        Command::TwoQubit(_) => commands::two_qubit(&cfg, seed),
        Command::Limits(_) => commands::limits(&cfg),
    })?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        command: cmd.name().into(),
        config: cfg,
        provenance: Provenance::new(seed),
        payload: report.payload,
        warnings: report.warnings,
    };
    emit(env, report.csv, common.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
