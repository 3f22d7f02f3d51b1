//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::analysis::{
    collision_table, sc_partial_latency, scl_latency, scl_partial_latency, write_collision_curves,
    write_collision_table, psclf_latency, LatencyParams, DEFAULT_PHI,
};
use crate::code::io::{format_frozen_set, PartitionSpec};
use crate::partition_design::{estimate_first_error_cdf, CdfEstimation};
use crate::sim::{
    build_code, build_polar_code, write_metadata, write_results_csv, ExperimentConfig, RunMetadata,
    Simulation,
};

#[derive(Debug, Parser)]
#[command(name = "polarflip", version, about = "Partitioned polar codes: construction, decoding experiments and models")]
pub struct Cli {
    /// Worker threads; 1 gives bit-reproducible runs. Defaults to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ConfigArgs {
    /// Experiment configuration (TOML).
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Override a configuration value, e.g. `--set decoder.t_max=50`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the frozen set of the configured code.
    Construct {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run the configured partition design and write the partition spec.
    DesignPartitions {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Genie-aided first-error CDF of SCL for the configured code.
    EstimateCdf {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Eb/N0 in dB; defaults to the first configured SNR.
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        min_errors: u64,
        #[arg(long)]
        max_frames: Option<u64>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Frame-error simulation; writes a results CSV and a metadata sidecar.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// CRC collision and early-termination probabilities.
    AnalyzeCollisions {
        /// CRC structure as comma-separated widths; repeat for several.
        #[arg(long = "crc", required = true)]
        structures: Vec<String>,
        #[arg(long, default_value_t = 2)]
        list_size: usize,
        #[arg(long = "t-max", value_delimiter = ',', default_values_t = vec![20, 50, 300])]
        t_max: Vec<usize>,
        /// Random frames per curve point; 0 skips the simulated curves.
        #[arg(long, default_value_t = 10_000)]
        frames: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Spacing of the `T_max` grid of the curve file.
        #[arg(long, default_value_t = 10)]
        curve_step: usize,
        /// Table output; stdout when omitted.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Cycle counts of the latency model.
    Latency {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        phi: Option<usize>,
        #[arg(long)]
        info_size: Option<usize>,
        #[arg(long)]
        t_max: Option<usize>,
    },
}

/// Parses `argv`, runs the command and returns the process exit status.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    let used = pool.current_num_threads();
    pool.install(|| execute(cli.command, used))
}

fn execute(cmd: Command, threads: usize) -> anyhow::Result<()> {
    match cmd {
        Command::Construct { cfg, out } => {
            let cfg = load_config(&cfg)?;
            let code = build_polar_code(&cfg)?;
            let c: u32 = cfg.partition.crc.iter().sum();
            emit(out.as_deref(), format_frozen_set(&code, cfg.code.k, c as usize).as_bytes())
        }
        Command::DesignPartitions { cfg, out } => {
            let cfg = load_config(&cfg)?;
            let pcode = build_code(&cfg)?;
            let spec = PartitionSpec::from_code(&pcode);
            let mut text = format!(
                "# information positions per partition: {:?}\n",
                pcode.sizes()
            );
            text.push_str(&spec.to_toml());
            emit(out.as_deref(), text.as_bytes())
        }
        Command::EstimateCdf { cfg, snr, min_errors, max_frames, out } => {
            let cfg = load_config(&cfg)?;
            let pcode = build_code(&cfg)?;
            let sim = Simulation::from_config(&cfg)?;
            let mut est = CdfEstimation::new(
                cfg.decoder.list_size,
                snr.unwrap_or(cfg.snr_db[0]),
                sim.rate,
                min_errors,
                cfg.seed,
            );
            est.max_frames = max_frames;
            est.kernel = cfg.decoder.kernel;
            let cdf = estimate_first_error_cdf(pcode.code(), &est)?;
            let mut buf = Vec::new();
            cdf.write_csv(&mut buf)?;
            emit(out.as_deref(), &buf)
        }
        Command::Simulate { cfg, out } => {
            let cfg = load_config(&cfg)?;
            let sim = Simulation::from_config(&cfg)?;
            let res = sim.run(&cfg.snr_db)?;
            let mut buf = Vec::new();
            write_results_csv(&res, &mut buf)?;
            fs::write(&out, buf).with_context(|| format!("writing {}", out.display()))?;
            let meta = RunMetadata {
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed: cfg.seed,
                threads,
                code_hash: res.code_hash.clone(),
                config: cfg,
            };
            write_metadata(&out, &meta)?;
            Ok(())
        }
        Command::AnalyzeCollisions {
            structures,
            list_size,
            t_max,
            frames,
            seed,
            curve_step,
            table,
            curves,
        } => {
            let structures = structures
                .iter()
                .map(|s| parse_widths(s))
                .collect::<anyhow::Result<Vec<_>>>()?;
            if list_size == 0 || t_max.contains(&0) {
                bail!("list size and every T_max must be at least 1");
            }
            let rows = collision_table(&structures, list_size, &t_max);
            let mut buf = Vec::new();
            write_collision_table(&rows, &mut buf)?;
            emit(table.as_deref(), &buf)?;
            if let Some(path) = curves {
                if curve_step == 0 {
                    bail!("curve step must be positive");
                }
                let lo = *t_max.iter().min().unwrap();
                let hi = *t_max.iter().max().unwrap();
                let grid: Vec<usize> = (lo..=hi).step_by(curve_step).collect();
                let mut buf = Vec::new();
                write_collision_curves(&structures, list_size, &grid, frames.max(1), seed, &mut buf)?;
                fs::write(&path, buf).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(())
        }
        Command::Latency { cfg, n, phi, info_size, t_max } => {
            let (params, t) = if cfg.config.is_some() {
                let c = load_config(&cfg)?;
                let pcode = build_code(&c)?;
                (LatencyParams::from_code(&pcode, phi.unwrap_or(c.phi))?, t_max.unwrap_or(c.decoder.t_max))
            } else {
                let (Some(n), Some(k)) = (n, info_size) else {
                    bail!("latency needs --config or both --n and --info-size");
                };
                (LatencyParams::unpartitioned(n, phi.unwrap_or(DEFAULT_PHI), k)?, t_max.unwrap_or(1))
            };
            emit(None, latency_report(&params, t).as_bytes())
        }
    }
}

fn latency_report(p: &LatencyParams, t_max: usize) -> String {
    let mut s = String::new();
    s.push_str("quantity,cycles\n");
    s.push_str(&format!("sc,{}\n", sc_partial_latency(p.n_len - 1, p.n_len, p.phi)));
    s.push_str(&format!("scl,{}\n", scl_latency(p.n_len, p.phi, p.info_size)));
    for k in 1..=p.num_partitions() {
        s.push_str(&format!("scl_partial_{k},{}\n", scl_partial_latency(k, p)));
    }
    s.push_str(&format!("psclf_worst_case_t{t_max},{}\n", psclf_latency(t_max, p)));
    s
}

fn parse_widths(s: &str) -> anyhow::Result<Vec<u32>> {
    let w = s
        .split([',', '-', ' '])
        .filter(|t| !t.is_empty())
        .map(|t| t.trim().parse::<u32>().with_context(|| format!("bad CRC width `{t}`")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if w.is_empty() || w.contains(&0) {
        bail!("CRC structure `{s}` must list positive widths");
    }
    Ok(w)
}

fn emit(path: Option<&Path>, data: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, data).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(data)?;
            Ok(())
        }
    }
}

/// Reads the config file, applies `--set` overrides and validates.
pub fn load_config(args: &ConfigArgs) -> anyhow::Result<ExperimentConfig> {
    let (mut value, base) = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            let v: toml::Value = toml::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?;
            (v, path.parent().map(Path::to_path_buf))
        }
        None => (toml::Value::Table(Default::default()), None),
    };
    for o in &args.overrides {
        apply_override(&mut value, o)?;
    }
    let mut cfg: ExperimentConfig = value.try_into().context("invalid configuration")?;
    if let Some(base) = base {
        cfg.resolve_paths(&base);
    }
    cfg.validate().context("invalid configuration")?;
    Ok(cfg)
}

/// Sets a dotted key; the value is read as TOML and falls back to a string.
pub fn apply_override(root: &mut toml::Value, spec: &str) -> anyhow::Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .with_context(|| format!("override `{spec}` is not KEY=VALUE"))?;
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut cur = root;
    for (i, part) in parts.iter().enumerate() {
        let table = cur
            .as_table_mut()
            .with_context(|| format!("`{}` is not a table", parts[..i].join(".")))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        cur = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    bail!("empty override key")
}
