//! Run configuration: command-line flags layered over an optional JSON config
//! file layered over built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use mcassm::channel::ArrayConfig;
use mcassm::constellation::Constellation;
use mcassm::design::Baseline;
use serde::{Deserialize, Serialize};

/// Flags shared by every subcommand. Unset flags fall back to the config file,
/// then to the defaults.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommonArgs {
    /// Link records (.csv or .json). Without it the built-in reference link is used.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Link to use when the file holds several (default: the first).
    #[arg(long)]
    pub link: Option<String>,
    /// Rescale each link's gains to unit norm after loading.
    #[arg(long)]
    pub normalize: Option<bool>,
    #[arg(long)]
    pub nt: Option<usize>,
    #[arg(long)]
    pub nr: Option<usize>,
    /// Transmit element spacing in wavelengths.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Receive element spacing in wavelengths.
    #[arg(long)]
    pub dr: Option<f64>,
    /// Receive RF chains (effective channel size).
    #[arg(long)]
    pub ns: Option<usize>,
    /// Active eigen-subchannels.
    #[arg(long)]
    pub nsa: Option<usize>,
    /// Beam-vector symbols.
    #[arg(short = 'L', long = "beams")]
    #[serde(rename = "L")]
    pub l: Option<usize>,
    /// Constellation order.
    #[arg(short = 'M', long = "order")]
    #[serde(rename = "M")]
    pub m: Option<usize>,
    /// psk or qam (odd-bit QAM orders use the rectangular grid).
    #[arg(long)]
    pub family: Option<String>,
    /// SNR grid in dB, `start:step:stop`.
    #[arg(long, allow_hyphen_values = true)]
    pub snr: Option<String>,
    /// Monte-Carlo symbols per SNR point.
    #[arg(long)]
    pub symbols: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// mca, ssm or gssm.
    #[arg(long)]
    pub baseline: Option<String>,
    /// Output file (default: standard output).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Emit JSON instead of CSV.
    #[arg(long)]
    #[serde(skip)]
    pub json: bool,
    /// Thread cap for parallel work.
    #[arg(long)]
    #[serde(skip)]
    pub workers: Option<usize>,
    /// Write the effective channel(s) as JSON to this path.
    #[arg(long)]
    #[serde(skip)]
    pub dump_effective: Option<PathBuf>,
    /// JSON file with any of the settings above; flags win over it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl CommonArgs {
    /// Fills every unset field from `file`.
    fn or(self, file: CommonArgs) -> CommonArgs {
        CommonArgs {
            scenario: self.scenario.or(file.scenario),
            link: self.link.or(file.link),
            normalize: self.normalize.or(file.normalize),
            nt: self.nt.or(file.nt),
            nr: self.nr.or(file.nr),
            dt: self.dt.or(file.dt),
            dr: self.dr.or(file.dr),
            ns: self.ns.or(file.ns),
            nsa: self.nsa.or(file.nsa),
            l: self.l.or(file.l),
            m: self.m.or(file.m),
            family: self.family.or(file.family),
            snr: self.snr.or(file.snr),
            symbols: self.symbols.or(file.symbols),
            seed: self.seed.or(file.seed),
            baseline: self.baseline.or(file.baseline),
            ..self
        }
    }
}

/// Fully resolved settings. Everything here feeds the config digest; output
/// paths and the worker count do not change results and are left out.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub scenario: Option<String>,
    pub link: Option<String>,
    pub normalize: bool,
    pub array: ArrayConfig,
    pub n_s: usize,
    pub n_sa: usize,
    pub l: usize,
    pub constellation: Constellation,
    pub snr_db: Vec<f64>,
    pub symbols: u64,
    pub seed: u64,
    pub baseline: Baseline,
    /// Command-specific settings.
    pub extra: serde_json::Value,
}

pub const DEFAULT_SNR: &str = "0:2:20";
pub const DEFAULT_SYMBOLS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 1;

pub fn parse_snr(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<f64>, _>>()
        .with_context(|| format!("SNR grid '{spec}' is not start:step:stop"))?;
    match nums[..] {
        [single] => Ok(vec![single]),
        [start, step, stop] => Ok(mcassm::link::snr_grid(start, step, stop)?),
        _ => bail!("SNR grid '{spec}' is not start:step:stop"),
    }
}

fn read_config_file(path: &Path) -> Result<CommonArgs> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("bad config file {}", path.display()))
}

/// Merges flags, config file and defaults, then validates.
pub fn resolve(command: &str, args: &CommonArgs, extra: serde_json::Value) -> Result<(RunConfig, CommonArgs)> {
    let merged = match &args.config {
        Some(p) => args.clone().or(read_config_file(p)?),
        None => args.clone(),
    };
    let d = ArrayConfig::default();
    let array = ArrayConfig::new(
        merged.nt.unwrap_or(d.n_tx),
        merged.nr.unwrap_or(d.n_rx),
        merged.dt.unwrap_or(d.d_tx),
        merged.dr.unwrap_or(d.d_rx),
    )?;
    let family = merged.family.clone().unwrap_or_else(|| "psk".into()).to_ascii_lowercase();
    let m = merged.m.unwrap_or(16);
    let constellation: Constellation = match family.as_str() {
        "psk" | "qam" => format!("{family}{m}").parse()?,
        other => bail!("unknown constellation family '{other}' (psk, qam)"),
    };
    let baseline: Baseline = merged.baseline.as_deref().unwrap_or("mca").parse()?;
    let cfg = RunConfig {
        command: command.to_string(),
        scenario: merged.scenario.as_ref().map(|p| p.display().to_string()),
        link: merged.link.clone(),
        normalize: merged.normalize.unwrap_or(false),
        array,
        n_s: merged.ns.unwrap_or(4),
        n_sa: merged.nsa.unwrap_or(2),
        l: merged.l.unwrap_or(4),
        constellation,
        snr_db: parse_snr(merged.snr.as_deref().unwrap_or(DEFAULT_SNR))?,
        symbols: merged.symbols.unwrap_or(DEFAULT_SYMBOLS),
        seed: merged.seed.unwrap_or(DEFAULT_SEED),
        baseline,
        extra,
    };
    Ok((cfg, merged))
}
