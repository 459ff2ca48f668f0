mod config;

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mcassm::analysis::{self, UubEvaluator};
use mcassm::array::{self, EffectiveChannel};
use mcassm::channel::{self, ChannelScenario, RecordFormat, SynthProfile};
use mcassm::design::{self, Baseline};
use mcassm::digest::config_digest;
use mcassm::link::{self, LinkConfig};
use serde::Serialize;
use serde_json::json;

use config::{CommonArgs, RunConfig};

#[derive(Parser)]
#[command(name = "mcassm", version, about = "Multipath component aggregation for spatial scattering modulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design the aggregation matrix and print the spectrum and power ratios.
    Optimize(OptimizeArgs),
    /// Monte-Carlo bit error rate over an SNR grid.
    Simulate(CommonOnly),
    /// Union bound on the average bit error probability over an SNR grid.
    Abep(CommonOnly),
    /// Minimum squared distance against the power ratio.
    EdSweep(EdSweepArgs),
    /// Bound curves for every link in a file or a synthetic ensemble.
    ScenarioSweep(SweepArgs),
    /// Write seeded synthetic link records.
    Synth(SynthArgs),
}

#[derive(Args)]
struct CommonOnly {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct EdSweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Ratio grid `lo:hi:count`, log-spaced. Default spans 1e-3..1e3 times λ₁/λ₂.
    #[arg(long)]
    iota2: Option<String>,
}

#[derive(Args)]
struct SynthEnsemble {
    /// Use this many synthetic links instead of a scenario file.
    #[arg(long)]
    synth: Option<usize>,
    /// Paths per synthetic link.
    #[arg(long, default_value_t = 7)]
    paths: usize,
    /// Ratio between consecutive path magnitudes.
    #[arg(long, default_value_t = 0.5)]
    decay: f64,
    /// Relative magnitude jitter.
    #[arg(long, default_value_t = 0.3)]
    jitter: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    ensemble: SynthEnsemble,
    /// Bound value at which each link's crossing SNR is reported.
    #[arg(long, default_value_t = 1e-4)]
    target: f64,
    /// Aggregate CSV path (default: `<out>.aggregate.csv`, or standard output).
    #[arg(long)]
    aggregate: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 50)]
    count: usize,
    #[arg(long, default_value_t = 7)]
    paths: usize,
    #[arg(long, default_value_t = 0.5)]
    decay: f64,
    #[arg(long, default_value_t = 0.3)]
    jitter: f64,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Optimize(a) => cmd_optimize(&a.common),
        Command::Simulate(a) => cmd_simulate(&a.common),
        Command::Abep(a) => cmd_abep(&a.common),
        Command::EdSweep(a) => cmd_ed_sweep(&a.common, a.iota2.as_deref()),
        Command::ScenarioSweep(a) => cmd_scenario_sweep(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

fn install_workers(n: Option<usize>) -> Result<()> {
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().context("cannot size the worker pool")?;
    }
    Ok(())
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn load_scenarios(cfg: &RunConfig) -> Result<Vec<ChannelScenario>> {
    match &cfg.scenario {
        None => Ok(vec![channel::reference_scenario().with_array(cfg.array)]),
        Some(p) => {
            let path = Path::new(p);
            let file = File::open(path).with_context(|| format!("cannot open scenario file {}", path.display()))?;
            let links = channel::load_link_records(BufReader::new(file), RecordFormat::from_path(path), cfg.array, cfg.normalize)
                .with_context(|| format!("cannot load {}", path.display()))?;
            if links.is_empty() {
                bail!("{} holds no links", path.display());
            }
            Ok(links)
        }
    }
}

fn single_link(cfg: &RunConfig) -> Result<ChannelScenario> {
    let mut links = load_scenarios(cfg)?;
    match &cfg.link {
        Some(id) => {
            let i = links.iter().position(|s| &s.link_id == id).with_context(|| format!("link '{id}' not found"))?;
            Ok(links.swap_remove(i))
        }
        None => {
            if links.len() > 1 {
                log::warn!("{} links in file, using '{}' (pick one with --link)", links.len(), links[0].link_id);
            }
            Ok(links.swap_remove(0))
        }
    }
}

fn dump_effective(path: Option<&Path>, effs: &[(&str, &EffectiveChannel)]) -> Result<()> {
    let Some(path) = path else { return Ok(()) };
    let value = if effs.len() == 1 {
        effs[0].1.to_json()
    } else {
        json!(effs.iter().map(|(id, e)| json!({"link_id": id, "effective": e.to_json()})).collect::<Vec<_>>())
    };
    std::fs::write(path, serde_json::to_string_pretty(&value)? + "\n").with_context(|| format!("cannot write {}", path.display()))
}

fn prepare(command: &str, args: &CommonArgs, extra: serde_json::Value) -> Result<(RunConfig, CommonArgs, ChannelScenario, EffectiveChannel)> {
    let (cfg, merged) = config::resolve(command, args, extra)?;
    install_workers(merged.workers)?;
    let scenario = single_link(&cfg)?;
    let eff = array::effective_channel(&scenario, cfg.n_s).with_context(|| format!("link {}", scenario.link_id))?;
    dump_effective(merged.dump_effective.as_deref(), &[(&scenario.link_id, &eff)])?;
    Ok((cfg, merged, scenario, eff))
}

fn precoder(cfg: &RunConfig, eff: &EffectiveChannel) -> Result<design::Precoder> {
    Ok(design::build_precoder(cfg.baseline, eff, &cfg.constellation, cfg.l, cfg.n_sa)?)
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ")
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn cmd_optimize(args: &CommonArgs) -> Result<()> {
    let (cfg, merged, _, eff) = prepare("optimize", args, serde_json::Value::Null)?;
    if cfg.baseline != Baseline::Mca {
        bail!("optimize designs the aggregation matrix; --baseline must be mca");
    }
    let opt = design::optimize(&eff, &cfg.constellation, cfg.l, cfg.n_sa)?;
    let d = &opt.design;
    let digest = config_digest(&cfg);
    let doc = json!({
        "config_digest": digest,
        "config": cfg,
        "eigvals": opt.eigvals,
        "iota": d.iota,
        "xi": d.xi,
        "min_ed": d.min_ed,
        "W": d.w_json(),
        "book": d.book.vectors(),
        "d0_len": opt.d0_len,
        "pruned": opt.pruned.entries,
        "candidates": opt.selection.table,
        "selected": opt.selection.index,
    });
    if merged.json && merged.out.is_none() {
        return write_json(&mut io::stdout().lock(), &doc);
    }
    println!("lambda = [{}]", fmt_vec(&opt.eigvals));
    println!("iota_opt = [{}]", fmt_vec(&d.iota));
    println!("xi^2 = [{}]", fmt_vec(&d.xi.iter().map(|x| x * x).collect::<Vec<_>>()));
    println!("min_ed = {:.6}", d.min_ed);
    println!("candidates:");
    for (i, row) in opt.selection.table.iter().enumerate() {
        let mark = if i == opt.selection.index { " *" } else { "" };
        println!("  iota = [{}]  min_ed = {:.6}{mark}", fmt_vec(&row.iota), row.min_ed);
    }
    if let Some(p) = &merged.out {
        write_json(&mut open_out(Some(p))?, &doc)?;
    }
    Ok(())
}

fn cmd_simulate(args: &CommonArgs) -> Result<()> {
    let (cfg, merged, _, eff) = prepare("simulate", args, serde_json::Value::Null)?;
    let pre = precoder(&cfg, &eff)?;
    let res = link::run_monte_carlo(&LinkConfig {
        w: pre.w,
        effective: eff,
        constellation: cfg.constellation.clone(),
        snr_db: cfg.snr_db.clone(),
        symbols_per_point: cfg.symbols,
        seed: cfg.seed,
        workers: merged.workers,
    })?;
    let digest = config_digest(&cfg);
    let mut out = open_out(merged.out.as_deref())?;
    if merged.json {
        return write_json(&mut out, &json!({"config_digest": digest, "config": cfg, "points": res.points}));
    }
    writeln!(out, "# config_digest={digest}")?;
    writeln!(out, "snr_db,bits,errors,ber")?;
    for p in &res.points {
        writeln!(out, "{},{},{},{:e}", p.snr_db, p.bits_sent, p.bit_errors, p.ber)?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_abep(args: &CommonArgs) -> Result<()> {
    let (cfg, merged, _, eff) = prepare("abep", args, serde_json::Value::Null)?;
    let pre = precoder(&cfg, &eff)?;
    let ev = UubEvaluator::new(&pre.w, &eff, &cfg.constellation)?;
    let curve = analysis::AbepCurve {
        snr_db: cfg.snr_db.clone(),
        uub: ev.curve(&cfg.snr_db),
        simulated: None,
        config_digest: config_digest(&cfg),
    };
    let mut out = open_out(merged.out.as_deref())?;
    if merged.json {
        return write_json(&mut out, &curve);
    }
    writeln!(out, "# config_digest={}", curve.config_digest)?;
    writeln!(out, "snr_db,uub")?;
    for (s, u) in curve.snr_db.iter().zip(&curve.uub) {
        writeln!(out, "{s},{u:e}")?;
    }
    out.flush()?;
    Ok(())
}

fn parse_ratio_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, n] = parts[..] else { bail!("ratio grid '{spec}' is not lo:hi:count") };
    let (lo, hi): (f64, f64) = (lo.parse()?, hi.parse()?);
    let n: usize = n.parse()?;
    if !(lo > 0.0 && hi >= lo && n > 0) {
        bail!("ratio grid '{spec}' needs 0 < lo <= hi and count > 0");
    }
    Ok(analysis::log_grid(lo, hi, n))
}

fn cmd_ed_sweep(args: &CommonArgs, iota2: Option<&str>) -> Result<()> {
    let extra = json!({ "iota2": iota2 });
    let (cfg, merged, _, eff) = prepare("ed-sweep", args, extra)?;
    let grid = match iota2 {
        Some(spec) => parse_ratio_grid(spec)?,
        None => {
            let r = eff.eigvals[0] / eff.eigvals[1];
            analysis::log_grid(1e-3 * r, 1e3 * r, 301)
        }
    };
    let book = design::design_upsilon(cfg.l, cfg.n_sa, cfg.n_s)?;
    let pts = analysis::ed_sweep(&eff, &book, &cfg.constellation, &grid)?;
    let digest = config_digest(&cfg);
    let mut out = open_out(merged.out.as_deref())?;
    if merged.json {
        return write_json(&mut out, &json!({"config_digest": digest, "config": cfg, "points": pts}));
    }
    writeln!(out, "# config_digest={digest}")?;
    writeln!(out, "iota2,min_ed")?;
    for p in &pts {
        writeln!(out, "{:e},{:e}", p.iota2, p.min_ed)?;
    }
    out.flush()?;
    Ok(())
}

fn aggregate_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "sweep".into());
    out.with_file_name(format!("{stem}.aggregate.csv"))
}

fn cmd_scenario_sweep(a: &SweepArgs) -> Result<()> {
    let e = &a.ensemble;
    let profile = SynthProfile {
        decay: e.decay,
        jitter: e.jitter,
        ..SynthProfile::default()
    };
    let extra = json!({
        "target": a.target,
        "synth": e.synth.map(|n| json!({"count": n, "paths": e.paths, "decay": e.decay, "jitter": e.jitter})),
    });
    let (cfg, merged) = config::resolve("scenario-sweep", &a.common, extra)?;
    install_workers(merged.workers)?;
    let links = match e.synth {
        Some(n) => {
            if cfg.scenario.is_some() {
                bail!("give either --scenario or --synth, not both");
            }
            channel::synth_ensemble(n, e.paths, cfg.seed, &SynthProfile { array: cfg.array, ..profile })?
        }
        None => load_scenarios(&cfg)?,
    };
    if let Some(p) = &merged.dump_effective {
        let effs: Vec<(String, EffectiveChannel)> = links
            .iter()
            .filter_map(|s| array::effective_channel(s, cfg.n_s).ok().map(|e| (s.link_id.clone(), e)))
            .collect();
        let refs: Vec<(&str, &EffectiveChannel)> = effs.iter().map(|(id, e)| (id.as_str(), e)).collect();
        dump_effective(Some(p), &refs)?;
    }
    let sweep_cfg = analysis::SweepConfig {
        n_s: cfg.n_s,
        n_sa: cfg.n_sa,
        l: cfg.l,
        constellation: cfg.constellation.clone(),
        baseline: cfg.baseline,
        snr_db: cfg.snr_db.clone(),
        target: a.target,
    };
    let res = analysis::scenario_sweep(&links, &sweep_cfg)?;
    let digest = config_digest(&cfg);
    if merged.json {
        let mut out = open_out(merged.out.as_deref())?;
        return write_json(&mut out, &json!({"config_digest": digest, "config": cfg, "result": res}));
    }
    if let Some(p) = &merged.out {
        let mut out = open_out(Some(p))?;
        writeln!(out, "# config_digest={digest}")?;
        writeln!(out, "link_id,snr_db,uub,snr_at_target")?;
        for l in &res.links {
            let cross = l.snr_at_target.map(|x| format!("{x:.6}")).unwrap_or_default();
            for (s, u) in res.snr_db.iter().zip(&l.uub) {
                writeln!(out, "{},{s},{u:e},{cross}", l.link_id)?;
            }
        }
        out.flush()?;
    }
    let agg_path = a.aggregate.clone().or_else(|| merged.out.as_deref().map(aggregate_path));
    let mut out = open_out(agg_path.as_deref())?;
    writeln!(out, "# config_digest={digest}")?;
    writeln!(out, "# links={} excluded={}", res.links.len(), res.failed.len())?;
    for (id, why) in &res.failed {
        writeln!(out, "# excluded {id}: {why}")?;
    }
    writeln!(out, "snr_db,mean_uub,median_uub")?;
    for ((s, m), md) in res.snr_db.iter().zip(&res.mean).zip(&res.median) {
        writeln!(out, "{s},{m:e},{md:e}")?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let (cfg, merged) = config::resolve("synth", &a.common, serde_json::Value::Null)?;
    let profile = SynthProfile {
        decay: a.decay,
        jitter: a.jitter,
        array: cfg.array,
    };
    let links = channel::synth_ensemble(a.count, a.paths, cfg.seed, &profile)?;
    let mut out = open_out(merged.out.as_deref())?;
    if merged.json {
        let file = channel::LinkRecordFile {
            links: links
                .iter()
                .map(|s| channel::LinkRecord {
                    link_id: json!(s.link_id),
                    beta: s.components.iter().map(|c| c.gain.re).collect(),
                    beta_im: None,
                    theta_t: s.components.iter().map(|c| c.aod).collect(),
                    theta_r: s.components.iter().map(|c| c.aoa).collect(),
                })
                .collect(),
        };
        return write_json(&mut out, &file);
    }
    channel::write_link_records_csv(&links, &mut out)?;
    out.flush()?;
    Ok(())
}
