use std::path::PathBuf;
use std::process::ExitCode;

use caosir::fbc::DimMode;
use caosir::sim::Topology;
use caosir_cli::config::{OutputFormat, PartialConfig, Preset, RunConfig, SnrSpec};
use caosir_cli::run;
use clap::{Parser, ValueEnum};

/// Average-rate and throughput sweeps for channel-aware ordered successive
/// relaying under finite-blocklength coding, with two-timeslot
/// decode-and-forward baselines.
#[derive(Parser, Debug)]
#[command(name = "caosir", version, about)]
struct Cli {
    /// Figure preset: fig2 (rate vs error budget), fig3 (low-SNR rate),
    /// fig4 (i.i.d. throughput sweep), fig5 (i.ni.d. throughput sweep)
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    /// JSON config file; command-line flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Gain topology
    #[arg(long, value_enum)]
    topology: Option<TopologyArg>,
    /// Number of relays
    #[arg(long)]
    relays: Option<usize>,
    /// Blocklength in symbols
    #[arg(long)]
    blocklength: Option<u64>,
    /// Destination error budget, in (0, 0.5)
    #[arg(long = "eps-d")]
    eps_d: Option<f64>,
    /// SNR grid in dB as start:end:step
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    snr_db: Option<String>,
    /// Monte Carlo trials per SNR point
    #[arg(long)]
    trials: Option<u64>,
    /// Base seed for the deterministic trial streams
    #[arg(long)]
    seed: Option<u64>,
    /// Output path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Channel dimension of the capacity/dispersion formulas
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PresetArg {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TopologyArg {
    Iid,
    Inid,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Real,
    Complex,
}

impl Cli {
    fn to_partial(&self) -> PartialConfig {
        PartialConfig {
            preset: self.preset.map(|p| match p {
                PresetArg::Fig2 => Preset::Fig2,
                PresetArg::Fig3 => Preset::Fig3,
                PresetArg::Fig4 => Preset::Fig4,
                PresetArg::Fig5 => Preset::Fig5,
            }),
            topology: self.topology.map(|t| match t {
                TopologyArg::Iid => Topology::Iid,
                TopologyArg::Inid => Topology::Inid,
            }),
            relays: self.relays,
            blocklength: self.blocklength,
            eps_d: self.eps_d,
            mode: self.mode.map(|m| match m {
                ModeArg::Real => DimMode::Real,
                ModeArg::Complex => DimMode::Complex,
            }),
            rate: None,
            snr_db: self.snr_db.clone().map(SnrSpec::Range),
            trials: self.trials,
            seed: self.seed,
            protocols: None,
            out: self.out.clone(),
            format: self.format.map(|f| match f {
                FormatArg::Csv => OutputFormat::Csv,
                FormatArg::Jsonl => OutputFormat::Jsonl,
            }),
            solver: None,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let file_partial = match &cli.config {
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: config file {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            };
            match PartialConfig::from_json(&text, &path.display().to_string()) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
        }
        None => PartialConfig::default(),
    };

    let cfg = match RunConfig::resolve(cli.to_partial(), file_partial) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    match run::run(&cfg) {
        Ok(outcome) => {
            eprintln!(
                "wrote {} rows to {} (config {}, seed {})",
                outcome.rows,
                cfg.out.display(),
                cfg.hash(),
                cfg.seed
            );
            if outcome.nonconverged > 0 {
                eprintln!(
                    "error: solver failed to converge on {} points",
                    outcome.nonconverged
                );
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
