//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 data error,
//! 4 runtime failure (I/O, numerical trouble, or a failed prior check).

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{parse_list, ConfigFile, Echo, EchoValue};
use crate::data::{compute_allowed_set, parse_dataset, AllowedSet, Dataset, Horizon, Observation};
use crate::error::{Error, Result};
use crate::inference::{
    per_time_bayes_factors, prior_check, read_samples, summarize, PosteriorSample, SampleWriter,
};
use crate::mcmc::{run_chain_with, ChainReport, KernelConfig, MoveCounters};
use crate::priors::Hyperparameters;
use crate::rng::derive_key;
use crate::simgen::{generate_scenario, ScenarioSpec, PRESETS};

/// `println!` that ignores a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

pub const OUT_DIR_ENV: &str = "MVBD_OUT_DIR";
pub const MANIFEST: &str = "manifest.json";

pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const DATA: i32 = 3;
    pub const RUNTIME: i32 = 4;
}

#[derive(Debug, Parser)]
#[command(name = "mvbd", version, about = "Change-point detection for discrete-time competing-risks data")]
pub struct Cli {
    /// Flat key-value config file; keys are long flag names.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a dataset from a scenario preset.
    Simulate(SimulateArgs),
    /// Run the sampler on a dataset.
    Fit(FitArgs),
    /// Posterior summaries of a fitted run.
    Summarize(SummarizeArgs),
    /// Bayes factors of a fitted run.
    Bf(BfArgs),
    /// Check that the temperature-0 sampler recovers the prior.
    PriorCheck(PriorCheckArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario preset.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fraction of individuals to censor (overrides the preset).
    #[arg(long)]
    pub censor: Option<f64>,
    /// Base name of the output files (default: the preset name).
    #[arg(long)]
    pub name: Option<String>,
    /// Existing output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct HyperArgs {
    #[arg(long)]
    pub mu_alpha: Option<f64>,
    #[arg(long)]
    pub sigma2_alpha: Option<f64>,
    #[arg(long)]
    pub sigma2_beta: Option<f64>,
    #[arg(long)]
    pub pi_k: Option<f64>,
    /// Comma-separated probabilities of the 2^m - 1 jump configurations.
    #[arg(long)]
    pub psi: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct KernelArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iterations: Option<u64>,
    #[arg(long)]
    pub burnin: Option<u64>,
    #[arg(long)]
    pub thin: Option<u64>,
    /// Likelihood temperature in [0, 1]; 0 samples the prior.
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Run only the local (augmented) moves.
    #[arg(long)]
    pub no_global_moves: bool,
    /// Random-walk scale of new levels in the global moves.
    #[arg(long)]
    pub rw_sd: Option<f64>,
    /// Evaluate the augmentation step on one thread.
    #[arg(long)]
    pub serial_augmentation: bool,
    #[arg(long, hide = true)]
    pub split_log_bias: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset CSV (`time,status,x1,…`).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Number of risks.
    #[arg(long)]
    pub m: Option<usize>,
    /// Horizon: an integer or `auto` (largest observed time).
    #[arg(long)]
    pub t_max: Option<String>,
    /// Independent chains with derived seeds.
    #[arg(long)]
    pub chains: Option<u64>,
    /// Run directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Run directory written by `fit`.
    #[arg(long)]
    pub run: Option<PathBuf>,
    /// Comma-separated covariate profile for the cumulative hazards (default all zeros).
    #[arg(long)]
    pub profile: Option<String>,
    /// Report directory (default: the run directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BfArgs {
    #[arg(long)]
    pub run: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PriorCheckArgs {
    /// Take the shape (m, horizon, admissible times) from a dataset.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub t_max: Option<String>,
    /// Directory for the JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

/// Merges command-line values, config-file values and defaults, recording
/// every resolved setting.
struct Resolver {
    file: ConfigFile,
    echo: Echo,
}

impl Resolver {
    fn new(path: Option<&Path>, known: &[&str]) -> Result<Self> {
        let file = match path {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        file.check_keys(known)?;
        Ok(Self {
            file,
            echo: BTreeMap::new(),
        })
    }

    fn u64(&mut self, key: &str, cli: Option<u64>, default: u64) -> Result<u64> {
        let v = cli.or(self.file.u64(key)?).unwrap_or(default);
        self.echo.insert(key.into(), EchoValue::Int(v));
        Ok(v)
    }

    fn f64_opt(&mut self, key: &str, cli: Option<f64>) -> Result<Option<f64>> {
        let v = cli.or(self.file.f64(key)?);
        if let Some(v) = v {
            self.echo.insert(key.into(), EchoValue::Float(v));
        }
        Ok(v)
    }

    fn f64(&mut self, key: &str, cli: Option<f64>, default: f64) -> Result<f64> {
        let v = self.f64_opt(key, cli)?.unwrap_or(default);
        self.echo.insert(key.into(), EchoValue::Float(v));
        Ok(v)
    }

    fn flag(&mut self, key: &str, cli: bool) -> Result<bool> {
        let v = cli || self.file.bool(key)?.unwrap_or(false);
        self.echo.insert(key.into(), EchoValue::Bool(v));
        Ok(v)
    }

    fn string(&mut self, key: &str, cli: Option<String>) -> Result<Option<String>> {
        let v = cli.or(self.file.string(key)?);
        if let Some(v) = &v {
            self.echo.insert(key.into(), EchoValue::Text(v.clone()));
        }
        Ok(v)
    }

    fn path(&mut self, key: &str, cli: Option<PathBuf>) -> Result<Option<PathBuf>> {
        Ok(self
            .string(key, cli.map(|p| p.to_string_lossy().into_owned()))?
            .map(PathBuf::from))
    }

    fn list(&mut self, key: &str, cli: Option<String>) -> Result<Option<Vec<f64>>> {
        let v = match cli {
            Some(s) => Some(parse_list(&s)?),
            None => self.file.list(key)?,
        };
        if let Some(v) = &v {
            self.echo.insert(key.into(), EchoValue::List(v.clone()));
        }
        Ok(v)
    }

    /// Output directory: flag, config file, environment, then `default`.
    fn out_dir(&mut self, cli: Option<PathBuf>, default: Option<PathBuf>) -> Result<Option<PathBuf>> {
        let env = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
        let chosen = match self.path("out", cli)? {
            Some(p) => Some(p),
            None => env.or(default),
        };
        if let Some(p) = &chosen {
            self.echo
                .insert("out".into(), EchoValue::Text(p.to_string_lossy().into_owned()));
        }
        Ok(chosen)
    }
}

const KERNEL_KEYS: &[&str] = &[
    "seed",
    "iterations",
    "burnin",
    "thin",
    "temperature",
    "no-global-moves",
    "rw-sd",
    "serial-augmentation",
    "split-log-bias",
];
const HYPER_KEYS: &[&str] = &["mu-alpha", "sigma2-alpha", "sigma2-beta", "pi-k", "psi"];

fn keys(groups: &[&[&'static str]]) -> Vec<&'static str> {
    groups.iter().flat_map(|g| g.iter().copied()).collect()
}

fn resolve_kernel(res: &mut Resolver, args: KernelArgs, defaults: &KernelConfig) -> Result<KernelConfig> {
    let cfg = KernelConfig {
        seed: res.u64("seed", args.seed, defaults.seed)?,
        iterations: res.u64("iterations", args.iterations, defaults.iterations)?,
        burn_in: res.u64("burnin", args.burnin, defaults.burn_in)?,
        thin: res.u64("thin", args.thin, defaults.thin)?,
        likelihood_temperature: res.f64("temperature", args.temperature, defaults.likelihood_temperature)?,
        global_moves_enabled: !res.flag("no-global-moves", args.no_global_moves)?,
        rw_sd: res.f64("rw-sd", args.rw_sd, defaults.rw_sd)?,
        parallel_augmentation: !res.flag("serial-augmentation", args.serial_augmentation)?,
        split_log_bias: res.f64_opt("split-log-bias", args.split_log_bias)?.unwrap_or(0.0),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn resolve_hyper(res: &mut Resolver, args: HyperArgs, m: usize, p: usize, t_max: usize) -> Result<Hyperparameters> {
    let mut hyper = Hyperparameters::defaults(m, p, t_max);
    hyper.mu_alpha = res.f64("mu-alpha", args.mu_alpha, hyper.mu_alpha)?;
    hyper.sigma2_alpha = res.f64("sigma2-alpha", args.sigma2_alpha, hyper.sigma2_alpha)?;
    hyper.sigma2_beta = res.f64("sigma2-beta", args.sigma2_beta, hyper.sigma2_beta)?;
    hyper.pi_k = res.f64("pi-k", args.pi_k, hyper.pi_k)?;
    if let Some(psi) = res.list("psi", args.psi)? {
        hyper.psi = psi;
    }
    hyper.validate()?;
    Ok(hyper)
}

fn resolve_horizon(res: &mut Resolver, cli: Option<String>) -> Result<Horizon> {
    let text = res.string("t-max", cli)?.unwrap_or_else(|| "auto".into());
    res.echo.insert("t-max".into(), EchoValue::Text(text.clone()));
    text.parse()
}

fn resolve_m(res: &mut Resolver, cli: Option<usize>, default: Option<usize>) -> Result<usize> {
    let m = match cli.map(|m| m as u64).or(res.file.u64("m")?).or(default.map(|m| m as u64)) {
        Some(m) => m as usize,
        None => return Err(Error::Config("the number of risks --m is required".into())),
    };
    res.echo.insert("m".into(), EchoValue::Int(m as u64));
    Ok(m)
}

fn load_dataset(path: &Path, m: usize, horizon: Horizon) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(BufReader::new(file), m, horizon)
}

/// Write `bytes` to `path` through a temporary file in the same directory.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn require_dir(dir: &Path) -> Result<()> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
        ))
    }
}

fn cmd_simulate(config: Option<&Path>, args: SimulateArgs) -> Result<()> {
    let mut res = Resolver::new(config, &["preset", "seed", "censor", "name", "out"])?;
    let preset = res
        .string("preset", args.preset)?
        .ok_or_else(|| Error::Config(format!("--preset is required (one of {})", PRESETS.join(", "))))?;
    let seed = res.u64("seed", args.seed, 1)?;
    let censor = res.f64_opt("censor", args.censor)?;
    let name = res.string("name", args.name)?.unwrap_or_else(|| preset.clone());
    let out = res.out_dir(args.out, Some(PathBuf::from(".")))?.expect("default given");
    let spec = ScenarioSpec::preset(&preset, seed, censor)?;
    require_dir(&out)?;
    let (dataset, truth) = generate_scenario(&spec)?;

    let mut csv = Vec::new();
    dataset.write_csv(&mut csv)?;
    let mut json = serde_json::to_vec_pretty(&truth)?;
    json.push(b'\n');
    let data_path = out.join(format!("{name}.csv"));
    let truth_path = out.join(format!("{name}.truth.json"));
    write_atomic(&data_path, &csv)?;
    write_atomic(&truth_path, &json)?;
    say!(
        "wrote {} ({} rows, t_max = {}) and {}",
        data_path.display(),
        dataset.n(),
        dataset.t_max(),
        truth_path.display()
    );
    Ok(())
}

/// Run manifest written next to the sample files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub status: String,
    pub tool: String,
    pub version: String,
    pub data: String,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub t_max: usize,
    pub allowed_times: Vec<usize>,
    pub hyperparameters: Hyperparameters,
    pub kernel: KernelConfig,
    pub chains: u64,
    pub chain_seeds: Vec<u64>,
    pub sample_files: Vec<String>,
    pub n_samples: u64,
    pub counters: Option<MoveCounters>,
    pub acceptance_rates: BTreeMap<String, f64>,
    pub chain_counters: Vec<MoveCounters>,
    pub wall_clock_seconds: Option<f64>,
    pub config: Echo,
}

impl RunManifest {
    pub fn load(run: &Path) -> Result<Self> {
        let path = run.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn allowed(&self) -> Result<AllowedSet> {
        AllowedSet::from_times(self.t_max, &self.allowed_times)
    }

    /// All recorded samples, chains concatenated in order.
    pub fn samples(&self, run: &Path) -> Result<Vec<PosteriorSample>> {
        let mut all = Vec::new();
        for name in &self.sample_files {
            let path = run.join(name);
            let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
            let set = read_samples(BufReader::new(file))?;
            if (set.m, set.p, set.t_max) != (self.m, self.p, self.t_max) {
                return Err(Error::SampleFormat(format!("{name}: shape differs from the manifest")));
            }
            all.extend(set.samples);
        }
        if all.is_empty() {
            return Err(Error::EmptySamples);
        }
        Ok(all)
    }
}

fn chain_seed(seed: u64, chain: u64) -> u64 {
    if chain == 0 {
        seed
    } else {
        derive_key(&[seed, chain])
    }
}

fn sample_file_name(chains: u64, chain: u64) -> String {
    if chains == 1 {
        "samples.csv".into()
    } else {
        format!("samples-chain{}.csv", chain + 1)
    }
}

fn run_one_chain(ds: &Dataset, hyper: &Hyperparameters, cfg: &KernelConfig, path: &Path) -> Result<ChainReport> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = SampleWriter::new(BufWriter::new(file), ds.m(), ds.p(), ds.t_max())?;
    let report = run_chain_with(ds, hyper, cfg, |s| writer.write(s))?;
    writer
        .into_inner()?
        .flush()
        .map_err(|e| Error::io(path, e))?;
    Ok(report)
}

fn cmd_fit(config: Option<&Path>, args: FitArgs) -> Result<()> {
    let known = keys(&[&["data", "m", "t-max", "chains", "out"], KERNEL_KEYS, HYPER_KEYS]);
    let mut res = Resolver::new(config, &known)?;
    let data = res
        .path("data", args.data)?
        .ok_or_else(|| Error::Config("--data is required".into()))?;
    let m = resolve_m(&mut res, args.m, None)?;
    let horizon = resolve_horizon(&mut res, args.t_max)?;
    let chains = res.u64("chains", args.chains, 1)?;
    if chains == 0 {
        return Err(Error::Config("--chains must be at least 1".into()));
    }
    let out = res.out_dir(args.out, Some(PathBuf::from("run")))?.expect("default given");
    let cfg = resolve_kernel(&mut res, args.kernel, &KernelConfig::default())?;
    let ds = load_dataset(&data, m, horizon)?;
    let hyper = resolve_hyper(&mut res, args.hyper, m, ds.p(), ds.t_max())?;
    let allowed = compute_allowed_set(&ds);

    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let chain_seeds: Vec<u64> = (0..chains).map(|c| chain_seed(cfg.seed, c)).collect();
    let sample_files: Vec<String> = (0..chains).map(|c| sample_file_name(chains, c)).collect();
    let mut manifest = RunManifest {
        status: "incomplete".into(),
        tool: "mvbd".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        data: data.to_string_lossy().into_owned(),
        n: ds.n(),
        m,
        p: ds.p(),
        t_max: ds.t_max(),
        allowed_times: allowed.times().to_vec(),
        hyperparameters: hyper.clone(),
        kernel: cfg.clone(),
        chains,
        chain_seeds: chain_seeds.clone(),
        sample_files: sample_files.clone(),
        n_samples: 0,
        counters: None,
        acceptance_rates: BTreeMap::new(),
        chain_counters: Vec::new(),
        wall_clock_seconds: None,
        config: res.echo.clone(),
    };
    let manifest_path = out.join(MANIFEST);
    write_json(&manifest_path, &manifest)?;

    let started = std::time::Instant::now();
    let reports: Vec<ChainReport> = (0..chains as usize)
        .into_par_iter()
        .map(|c| {
            let chain_cfg = KernelConfig {
                seed: chain_seeds[c],
                ..cfg.clone()
            };
            run_one_chain(&ds, &hyper, &chain_cfg, &out.join(&sample_files[c]))
        })
        .collect::<Result<_>>()?;

    let mut total = MoveCounters::default();
    for r in &reports {
        total.merge(&r.counters);
    }
    manifest.status = "complete".into();
    manifest.n_samples = reports.iter().map(|r| r.n_samples).sum();
    manifest.acceptance_rates = total
        .entries()
        .iter()
        .map(|(name, c)| (name.to_string(), c.rate()))
        .collect();
    manifest.counters = Some(total.clone());
    manifest.chain_counters = reports.iter().map(|r| r.counters.clone()).collect();
    manifest.wall_clock_seconds = Some(started.elapsed().as_secs_f64());
    write_json(&manifest_path, &manifest)?;

    say!(
        "fit: {} chain(s), {} samples, {:.1} s -> {}",
        chains,
        manifest.n_samples,
        started.elapsed().as_secs_f64(),
        out.display()
    );
    for (name, c) in total.entries() {
        if c.proposed > 0 {
            say!("  {name:<15} {:>10} / {:<10} accepted ({:.3})", c.accepted, c.proposed, c.rate());
        }
    }
    if total.nan_ratios > 0 {
        say!("  warning: {} NaN acceptance ratios", total.nan_ratios);
    }
    Ok(())
}

/// JSON report wrapper carrying run metadata.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub kind: &'a str,
    pub tool: &'a str,
    pub version: &'a str,
    pub run: Option<RunInfo>,
    pub report: &'a T,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunInfo {
    pub data: String,
    pub seed: u64,
    pub chains: u64,
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub n_samples: u64,
    pub hyperparameters: Hyperparameters,
}

impl From<&RunManifest> for RunInfo {
    fn from(m: &RunManifest) -> Self {
        Self {
            data: m.data.clone(),
            seed: m.kernel.seed,
            chains: m.chains,
            iterations: m.kernel.iterations,
            burn_in: m.kernel.burn_in,
            thin: m.kernel.thin,
            n_samples: m.n_samples,
            hyperparameters: m.hyperparameters.clone(),
        }
    }
}

fn open_run(res: &mut Resolver, run: Option<PathBuf>) -> Result<(PathBuf, RunManifest)> {
    let run = res
        .path("run", run)?
        .ok_or_else(|| Error::Config("--run is required".into()))?;
    let manifest = RunManifest::load(&run)?;
    if manifest.status != "complete" {
        return Err(Error::SampleFormat(format!(
            "{}: run is marked {}",
            run.display(),
            manifest.status
        )));
    }
    Ok((run, manifest))
}

fn report_file(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?))
}

fn cmd_summarize(config: Option<&Path>, args: SummarizeArgs) -> Result<()> {
    let mut res = Resolver::new(config, &["run", "profile", "out"])?;
    let (run, manifest) = open_run(&mut res, args.run)?;
    let profile = res.list("profile", args.profile)?.unwrap_or_else(|| vec![0.0; manifest.p]);
    let out = res.out_dir(args.out, Some(run.clone()))?.expect("default given");
    let samples = manifest.samples(&run)?;
    let summary = summarize(&samples, &profile)?;
    require_dir(&out)?;
    summary.write_alpha_csv(report_file(&out, "alpha_summary.csv")?)?;
    summary.write_beta_csv(report_file(&out, "beta_summary.csv")?)?;
    summary.write_cumulative_hazard_csv(report_file(&out, "cumulative_hazard.csv")?)?;
    let envelope = Envelope {
        kind: "summary",
        tool: "mvbd",
        version: env!("CARGO_PKG_VERSION"),
        run: Some(RunInfo::from(&manifest)),
        report: &summary,
    };
    write_json(&out.join("summary.json"), &envelope)?;
    say!("summarized {} samples -> {}", samples.len(), out.display());
    Ok(())
}

fn cmd_bf(config: Option<&Path>, args: BfArgs) -> Result<()> {
    let mut res = Resolver::new(config, &["run", "out"])?;
    let (run, manifest) = open_run(&mut res, args.run)?;
    let out = res.out_dir(args.out, Some(run.clone()))?.expect("default given");
    let samples = manifest.samples(&run)?;
    let report = per_time_bayes_factors(&samples, &manifest.hyperparameters, &manifest.allowed()?)?;
    require_dir(&out)?;
    report.write_csv(report_file(&out, "bayes_factors.csv")?)?;
    let envelope = Envelope {
        kind: "bayes-factors",
        tool: "mvbd",
        version: env!("CARGO_PKG_VERSION"),
        run: Some(RunInfo::from(&manifest)),
        report: &report,
    };
    write_json(&out.join("bayes_factors.json"), &envelope)?;
    let sd = &report.savage_dickey;
    say!(
        "B(K = 0) = {:.4} (posterior {:.4}, prior {:.4}, MC s.e. {:.4}, {} samples)",
        sd.bayes_factor, sd.posterior_k0, sd.prior_k0, sd.mc_standard_error, sd.n_samples
    );
    for e in &report.gamma {
        say!("  t = {:>3}  P(gamma = 1) = {:.4}  BF = {}", e.t, e.posterior, e.bayes_factor.display());
    }
    Ok(())
}

/// Shape with one event per period, so every `t` in `2..t_max` is admissible.
pub fn synthetic_shape(m: usize, t_max: usize) -> Result<Dataset> {
    let obs = (1..=t_max.max(1))
        .map(|t| Observation::new(t, 1 + (t - 1) % m, Vec::new()))
        .collect();
    Dataset::new(obs, m, Horizon::Fixed(t_max.max(1)))
}

fn cmd_prior_check(config: Option<&Path>, args: PriorCheckArgs) -> Result<bool> {
    let known = keys(&[&["data", "m", "t-max", "out"], KERNEL_KEYS, HYPER_KEYS]);
    let mut res = Resolver::new(config, &known)?;
    let data = res.path("data", args.data)?;
    let m = resolve_m(&mut res, args.m, Some(3))?;
    let ds = match &data {
        Some(path) => load_dataset(path, m, resolve_horizon(&mut res, args.t_max)?)?,
        None => {
            let t_max = match res.string("t-max", args.t_max)? {
                Some(s) => s
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("--t-max must be an integer here, got {s:?}")))?,
                None => 12,
            };
            synthetic_shape(m, t_max)?
        }
    };
    let defaults = KernelConfig {
        burn_in: 1_000,
        ..KernelConfig::default()
    };
    let mut cfg = resolve_kernel(&mut res, args.kernel, &defaults)?;
    cfg.likelihood_temperature = 0.0;
    let out = res.out_dir(args.out, None)?;
    let hyper = resolve_hyper(&mut res, args.hyper, m, ds.p(), ds.t_max())?;
    let allowed = compute_allowed_set(&ds);
    let mut samples = Vec::new();
    run_chain_with(&ds, &hyper, &cfg, |s| {
        samples.push(s.clone());
        Ok(())
    })?;
    let report = prior_check(&samples, &hyper, &allowed)?;

    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    say!(
        "prior-check: m = {m}, t_max = {}, |T| = {}, {} samples",
        ds.t_max(),
        allowed.len(),
        report.n_samples
    );
    say!("  {} K distribution: TV = {:.4} (tolerance {})", verdict(report.k_pass), report.tv_k, report.tv_tolerance);
    for g in &report.gamma {
        say!(
            "  {} P(gamma_{} = 1) = {:.4} vs {:.4} (3 MC s.e. = {:.4})",
            verdict(g.pass),
            g.t,
            g.frequency,
            g.prior,
            3.0 * g.mc_standard_error
        );
    }
    for z in &report.z {
        say!(
            "  {} P(z_{} = 1 | gamma = 1) = {:.4} vs {:.4} (tolerance {})",
            verdict(z.pass),
            z.risk,
            z.frequency,
            z.prior,
            report.z_tolerance
        );
    }
    say!("prior-check: {}", verdict(report.pass));
    if let Some(dir) = out {
        require_dir(&dir)?;
        let envelope = Envelope {
            kind: "prior-check",
            tool: "mvbd",
            version: env!("CARGO_PKG_VERSION"),
            run: None,
            report: &report,
        };
        write_json(&dir.join("prior_check.json"), &envelope)?;
    }
    Ok(report.pass)
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Hyperparameters(_) | Error::Scenario(_) | Error::Dimension(_) => exit::USAGE,
        e if e.is_data_error() => exit::DATA,
        _ => exit::RUNTIME,
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Simulate(a) => cmd_simulate(config, a).map(|_| exit::OK),
        Command::Fit(a) => cmd_fit(config, a).map(|_| exit::OK),
        Command::Summarize(a) => cmd_summarize(config, a).map(|_| exit::OK),
        Command::Bf(a) => cmd_bf(config, a).map(|_| exit::OK),
        Command::PriorCheck(a) => cmd_prior_check(config, a).map(|pass| if pass { exit::OK } else { exit::RUNTIME }),
    }
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
