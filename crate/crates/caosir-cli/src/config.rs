//! Run configuration: defaults, preset templates, JSON config files and
//! flag overrides, merged in that order.

use std::path::PathBuf;

use caosir::fbc::DimMode;
use caosir::optimizer::SolverConfig;
use caosir::sim::{ProtocolId, Topology};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Rate versus error-budget scan for one drawn realization, with the
    /// achievability/converse bracket columns.
    Fig2,
    /// Mean optimized rate over fading for two relays, low-SNR range.
    Fig3,
    /// Throughput of all protocols over the SNR grid, i.i.d. gains.
    Fig4,
    /// Same as fig4 on the distance-based (i.ni.d.) topology.
    Fig5,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("relays: must be at least 1, got {0}")]
    Relays(usize),
    #[error("blocklength: must be at least 2, got {0}")]
    Blocklength(u64),
    #[error("eps-d: must lie in (0, 0.5), got {0}")]
    EpsD(f64),
    #[error("trials: must be at least 1")]
    Trials,
    #[error("rate: fixed target rate must be positive, got {0}")]
    Rate(f64),
    #[error("snr-db: expected `start:end:step` with step > 0, got `{0}`")]
    SnrSpec(String),
    #[error("snr-db: grid is empty")]
    SnrEmpty,
    #[error("topology: `inid` is defined for exactly 3 relays, got {0}")]
    InidRelays(usize),
    #[error("protocols: unknown protocol `{0}`")]
    Protocol(String),
    #[error("{field}: {message}")]
    Parse { field: &'static str, message: String },
    #[error("config file {path}: {message}")]
    File { path: String, message: String },
}

/// SNR grid as written in flags or config files: `start:end:step` or an
/// explicit list of dB values.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(untagged)]
pub enum SnrSpec {
    Range(String),
    List(Vec<f64>),
}

impl SnrSpec {
    pub fn grid(&self) -> Result<Vec<f64>, ConfigError> {
        let grid = match self {
            SnrSpec::List(v) => v.clone(),
            SnrSpec::Range(s) => {
                let parts: Vec<&str> = s.split(':').collect();
                if parts.len() != 3 {
                    return Err(ConfigError::SnrSpec(s.clone()));
                }
                let nums: Vec<f64> = parts
                    .iter()
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| ConfigError::SnrSpec(s.clone()))?;
                let (start, end, step) = (nums[0], nums[1], nums[2]);
                if !(step > 0.0) || end < start {
                    return Err(ConfigError::SnrSpec(s.clone()));
                }
                let mut grid = Vec::new();
                let mut k = 0u32;
                loop {
                    let v = start + f64::from(k) * step;
                    if v > end + 1e-9 {
                        break;
                    }
                    grid.push(v);
                    k += 1;
                }
                grid
            }
        };
        if grid.is_empty() {
            return Err(ConfigError::SnrEmpty);
        }
        Ok(grid)
    }
}

/// One layer of settings; `None` defers to the layer below.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub preset: Option<Preset>,
    pub topology: Option<Topology>,
    pub relays: Option<usize>,
    pub blocklength: Option<u64>,
    pub eps_d: Option<f64>,
    pub mode: Option<DimMode>,
    pub rate: Option<f64>,
    pub snr_db: Option<SnrSpec>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub protocols: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub solver: Option<SolverConfig>,
}

impl PartialConfig {
    /// Settings from `self` win over `base`.
    pub fn over(self, base: PartialConfig) -> PartialConfig {
        PartialConfig {
            preset: self.preset.or(base.preset),
            topology: self.topology.or(base.topology),
            relays: self.relays.or(base.relays),
            blocklength: self.blocklength.or(base.blocklength),
            eps_d: self.eps_d.or(base.eps_d),
            mode: self.mode.or(base.mode),
            rate: self.rate.or(base.rate),
            snr_db: self.snr_db.or(base.snr_db),
            trials: self.trials.or(base.trials),
            seed: self.seed.or(base.seed),
            protocols: self.protocols.or(base.protocols),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            solver: self.solver.or(base.solver),
        }
    }

    pub fn from_json(text: &str, path: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::File {
            path: path.to_string(),
            message: e.to_string(),
        })
    }
}

fn preset_template(preset: Preset) -> PartialConfig {
    let base = PartialConfig::default();
    match preset {
        Preset::Fig2 => PartialConfig {
            relays: Some(2),
            snr_db: Some(SnrSpec::List(vec![0.0])),
            protocols: Some(vec!["cao-sir-fbc".into()]),
            out: Some(PathBuf::from("fig2.csv")),
            ..base
        },
        Preset::Fig3 => PartialConfig {
            relays: Some(2),
            snr_db: Some(SnrSpec::Range("-20:30:2".into())),
            protocols: Some(vec!["cao-sir-fbc".into()]),
            out: Some(PathBuf::from("fig3.csv")),
            ..base
        },
        Preset::Fig4 => PartialConfig { out: Some(PathBuf::from("fig4.csv")), ..base },
        Preset::Fig5 => PartialConfig {
            topology: Some(Topology::Inid),
            out: Some(PathBuf::from("fig5.csv")),
            ..base
        },
    }
}

fn parse_protocol(label: &str, rate: f64) -> Result<ProtocolId, ConfigError> {
    Ok(match label {
        "cao-sir-fbc" => ProtocolId::CaoSirFbc,
        "two-slot-df-no-direct" => ProtocolId::TwoSlotDfNoDirect,
        "two-slot-df-direct" => ProtocolId::TwoSlotDfDirect,
        "two-slot-df-no-direct-fixed" => ProtocolId::TwoSlotDfNoDirectFixed(rate),
        "two-slot-df-direct-fixed" => ProtocolId::TwoSlotDfDirectFixed(rate),
        other => return Err(ConfigError::Protocol(other.to_string())),
    })
}

/// Fully resolved and validated run configuration.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RunConfig {
    pub preset: Option<Preset>,
    pub topology: Topology,
    pub relays: usize,
    pub blocklength: u64,
    pub eps_d: f64,
    pub mode: DimMode,
    pub rate: f64,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub protocols: Vec<ProtocolId>,
    /// Output location; not part of the configuration hash, which
    /// identifies the experiment rather than where it is written.
    #[serde(skip_serializing)]
    pub out: PathBuf,
    pub format: OutputFormat,
    pub solver: SolverConfig,
}

impl RunConfig {
    /// Merges flag and file layers over the preset template and defaults,
    /// then validates every field.
    pub fn resolve(flags: PartialConfig, file: PartialConfig) -> Result<RunConfig, ConfigError> {
        let mut merged = flags.over(file);
        if let Some(p) = merged.preset {
            merged = merged.over(preset_template(p));
        }

        let relays = merged.relays.unwrap_or(3);
        if relays == 0 {
            return Err(ConfigError::Relays(relays));
        }
        let blocklength = merged.blocklength.unwrap_or(300);
        if blocklength < 2 {
            return Err(ConfigError::Blocklength(blocklength));
        }
        let eps_d = merged.eps_d.unwrap_or(1e-3);
        if !(eps_d > 0.0 && eps_d < 0.5) {
            return Err(ConfigError::EpsD(eps_d));
        }
        let rate = merged.rate.unwrap_or(1.0);
        if !(rate > 0.0) {
            return Err(ConfigError::Rate(rate));
        }
        let trials = merged.trials.unwrap_or(2000);
        if trials == 0 {
            return Err(ConfigError::Trials);
        }
        let topology = merged.topology.unwrap_or(Topology::Iid);
        if topology == Topology::Inid && relays != 3 {
            return Err(ConfigError::InidRelays(relays));
        }
        let snr_db = merged
            .snr_db
            .unwrap_or(SnrSpec::Range("0:60:4".into()))
            .grid()?;
        let labels = merged.protocols.unwrap_or_else(|| {
            vec![
                "cao-sir-fbc".into(),
                "two-slot-df-no-direct".into(),
                "two-slot-df-direct".into(),
                "two-slot-df-no-direct-fixed".into(),
                "two-slot-df-direct-fixed".into(),
            ]
        });
        let protocols = labels
            .iter()
            .map(|l| parse_protocol(l, rate))
            .collect::<Result<Vec<_>, _>>()?;

        Ok(RunConfig {
            preset: merged.preset,
            topology,
            relays,
            blocklength,
            eps_d,
            mode: merged.mode.unwrap_or(DimMode::Complex),
            rate,
            snr_db,
            trials,
            seed: merged.seed.unwrap_or(1),
            protocols,
            out: merged.out.unwrap_or_else(|| PathBuf::from("sweep.csv")),
            format: merged.format.unwrap_or(OutputFormat::Csv),
            solver: merged.solver.unwrap_or_default(),
        })
    }

    /// Stable hash of the resolved configuration, recorded in output
    /// headers so reruns are diffable.
    pub fn hash(&self) -> String {
        use std::hash::{Hash, Hasher};
        let canon = serde_json::to_string(self).expect("config serializes");
        let mut h = std::collections::hash_map::DefaultHasher::new();
        canon.hash(&mut h);
        format!("{:016x}", h.finish())
    }
}
