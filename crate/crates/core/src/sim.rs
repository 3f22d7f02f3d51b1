//! Monte-Carlo frame-error simulation over BPSK/AWGN.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    partition_cost, psclf_avg_exec_time, psclf_latency, scl_latency, LatencyParams, DEFAULT_PHI,
};
use crate::channel::{frame_rng, noiseless, transmit};
use crate::code::io::read_frozen_set;
use crate::code::{CrcSpec, PartitionedCode, PolarCode};
use crate::decoders::{DecodeOutcome, DecodeStatus, Decoder, DecoderConfig, Kernel, RestartMode};
use crate::error::{invalid, Error, Result};
use crate::partition_design::{
    design_partitions_cdf, design_partitions_div_k, design_partitions_div_n, FirstErrorCdf,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSection {
    pub n: usize,
    /// Message bits, excluding CRC bits.
    pub k: usize,
    /// Eb/N0 used by the Gaussian-approximation construction.
    #[serde(default = "default_design_snr")]
    pub design_snr_db: f64,
    /// Information set read from a frozen-set file instead of constructed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frozen_file: Option<PathBuf>,
}

fn default_design_snr() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Boundaries listed in `mu`.
    #[default]
    Explicit,
    DivK,
    DivN,
    /// Equal first-error mass per partition, from a CDF file.
    Cdf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSection {
    #[serde(default)]
    pub strategy: Strategy,
    /// CRC width of every partition; its length is the number of partitions.
    pub crc: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cdf_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Smallest-metric path, no CRC selection.
    Scl,
    /// Single pass, best path satisfying every CRC.
    CaScl,
    /// Flip decoding over the whole frame (one partition).
    Sclf,
    #[default]
    Psclf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecoderSection {
    #[serde(default)]
    pub algorithm: Algorithm,
    pub list_size: usize,
    pub omega: usize,
    pub t_max: usize,
    pub alpha: f64,
    pub restart: RestartMode,
    pub penalty: f64,
    pub kernel: Kernel,
}

impl Default for DecoderSection {
    fn default() -> Self {
        let d = DecoderConfig::default();
        Self {
            algorithm: Algorithm::Psclf,
            list_size: d.list_size,
            omega: d.omega,
            t_max: d.t_max,
            alpha: d.alpha,
            restart: d.restart,
            penalty: d.penalty,
            kernel: d.kernel,
        }
    }
}

impl DecoderSection {
    pub fn config(&self) -> DecoderConfig {
        DecoderConfig {
            list_size: self.list_size,
            omega: self.omega,
            t_max: self.t_max,
            alpha: self.alpha,
            restart: self.restart,
            penalty: self.penalty,
            kernel: self.kernel,
        }
    }
}

/// A point stops once either limit is reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StopRule {
    pub max_frames: u64,
    pub min_errors: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { max_frames: 1_000_000, min_errors: 400 }
    }
}

/// Which rate converts Eb/N0 into a noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMode {
    /// `K / N`.
    #[default]
    Message,
    /// `(K + C) / N`.
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_phi")]
    pub phi: usize,
    #[serde(default)]
    pub rate: RateMode,
    /// Skip the noise: every frame sees noise-free LLRs at the given SNR.
    #[serde(default)]
    pub noiseless: bool,
    pub code: CodeSection,
    pub partition: PartitionSection,
    #[serde(default)]
    pub decoder: DecoderSection,
    #[serde(default)]
    pub stop: StopRule,
}

fn default_phi() -> usize {
    DEFAULT_PHI
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_empty() {
            return Err(invalid("snr_db must list at least one point"));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(invalid("SNR values must be finite"));
        }
        if self.stop.max_frames == 0 || self.stop.min_errors == 0 {
            return Err(invalid("stop rule limits must be positive"));
        }
        if self.partition.crc.is_empty() {
            return Err(invalid("partition.crc must list at least one width"));
        }
        self.decoder.config().validate()?;
        if self.decoder.algorithm == Algorithm::Sclf && self.partition.crc.len() != 1 {
            return Err(invalid("sclf needs exactly one partition"));
        }
        Ok(())
    }

    /// Rewrites relative file paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.code.frozen_file, &mut self.partition.cdf_file].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

/// Builds the information set of the configured code.
pub fn build_polar_code(cfg: &ExperimentConfig) -> Result<PolarCode> {
    let crc_len: usize = cfg.partition.crc.iter().map(|&c| c as usize).sum();
    let size = cfg.code.k + crc_len;
    match &cfg.code.frozen_file {
        Some(path) => {
            let f = read_frozen_set(path)?;
            if f.code.len() != cfg.code.n || f.code.info_len() != size {
                return Err(Error::InvalidCode(format!(
                    "frozen-set file describes ({}, {}), config asks for ({}, {})",
                    f.code.len(),
                    f.code.info_len(),
                    cfg.code.n,
                    size
                )));
            }
            Ok(f.code)
        }
        None => PolarCode::construct(cfg.code.n, size, cfg.code.design_snr_db),
    }
}

/// Builds the partitioned code, running the configured boundary design.
pub fn build_code(cfg: &ExperimentConfig) -> Result<PartitionedCode> {
    let code = build_polar_code(cfg)?;
    let widths = &cfg.partition.crc;
    let parts = widths.len();
    let mu = match cfg.partition.strategy {
        Strategy::Explicit => match &cfg.partition.mu {
            Some(mu) => mu.clone(),
            None if parts == 1 => vec![code.len() - 1],
            None => return Err(invalid("explicit strategy needs partition.mu")),
        },
        Strategy::DivK => design_partitions_div_k(code.info_set(), parts)?,
        Strategy::DivN => design_partitions_div_n(code.len(), parts, code.info_set(), widths)?,
        Strategy::Cdf => {
            let path = cfg
                .partition
                .cdf_file
                .as_ref()
                .ok_or_else(|| invalid("cdf strategy needs partition.cdf_file"))?;
            let cdf = FirstErrorCdf::read_csv_file(path, code.clone())?;
            design_partitions_cdf(&cdf, parts)?
        }
    };
    let crcs = match &cfg.partition.generators {
        None => widths.iter().map(|&w| CrcSpec::with_width(w)).collect::<Result<Vec<_>>>()?,
        Some(g) if g.len() == parts => {
            widths.iter().zip(g).map(|(&w, &g)| CrcSpec::new(w, g)).collect::<Result<Vec<_>>>()?
        }
        Some(g) => return Err(invalid(format!("{} generators for {parts} partitions", g.len()))),
    };
    let pcode = PartitionedCode::new(code, mu, crcs)?;
    if pcode.message_len() != cfg.code.k {
        return Err(Error::InvalidCode("message length does not match the code".into()));
    }
    Ok(pcode)
}

/// SHA-256 over the information set, boundaries and CRC generators.
pub fn code_hash(pcode: &PartitionedCode) -> String {
    let mut h = Sha256::new();
    h.update(format!("N={};I=", pcode.code().len()));
    for i in pcode.code().info_set() {
        h.update(format!("{i},"));
    }
    h.update(";mu=");
    for m in pcode.mu() {
        h.update(format!("{m},"));
    }
    h.update(";crc=");
    for c in pcode.crcs() {
        h.update(format!("{}:{:x},", c.width(), c.generator()));
    }
    hex::encode(h.finalize())
}

/// Cycles spent on one decoded frame: every entered partition costs its
/// trial count times its SCL pass length.
pub fn accumulate_execution_time(outcome: &DecodeOutcome, params: &LatencyParams) -> u64 {
    outcome
        .trials_per_partition
        .iter()
        .take(params.num_partitions())
        .enumerate()
        .map(|(p, &t)| t as u64 * partition_cost(p + 1, params))
        .sum()
}

/// Counters of one SNR point. Merging is plain addition.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Counters {
    pub frames: u64,
    pub frame_errors: u64,
    /// Decoder reported success with a wrong message.
    pub undetected_errors: u64,
    pub early_terminations: u64,
    /// Frames where some CRC-passing path was off the transmitted trajectory.
    pub collision_frames: u64,
    /// Frames that entered partition `p`.
    pub entered: Vec<u64>,
    /// Trials summed over the frames that entered partition `p`.
    pub trials: Vec<u64>,
    pub cycles: u128,
}

impl Counters {
    pub fn new(parts: usize) -> Self {
        Self { entered: vec![0; parts], trials: vec![0; parts], ..Self::default() }
    }

    pub fn merge(&mut self, o: &Counters) {
        self.frames += o.frames;
        self.frame_errors += o.frame_errors;
        self.undetected_errors += o.undetected_errors;
        self.early_terminations += o.early_terminations;
        self.collision_frames += o.collision_frames;
        for (a, b) in self.entered.iter_mut().zip(&o.entered) {
            *a += b;
        }
        for (a, b) in self.trials.iter_mut().zip(&o.trials) {
            *a += b;
        }
        self.cycles += o.cycles;
    }

    fn record(&mut self, outcome: &DecodeOutcome, message: &[u8], cycles: u64) {
        self.frames += 1;
        let ok = outcome.is_success() && outcome.message.as_deref() == Some(message);
        if !ok {
            self.frame_errors += 1;
        }
        if outcome.is_success() && !ok {
            self.undetected_errors += 1;
        }
        if matches!(outcome.status, DecodeStatus::EarlyTerminated(_)) {
            self.early_terminations += 1;
        }
        if outcome.collision_observed.iter().any(|&c| c) {
            self.collision_frames += 1;
        }
        for (p, &t) in outcome.trials_per_partition.iter().enumerate().take(self.entered.len()) {
            self.entered[p] += 1;
            self.trials[p] += t as u64;
        }
        self.cycles += u128::from(cycles);
    }
}

/// Results of one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub snr_db: f64,
    pub counters: Counters,
    pub fer: f64,
    /// Mean trials in partition `p` over the frames that entered it.
    pub avg_trials: Vec<f64>,
    /// Fraction of frames that entered partition `p`.
    pub reach: Vec<f64>,
    pub early_termination_rate: f64,
    pub collision_rate: f64,
    /// Mean of the per-frame cycle counts.
    pub avg_cycles: f64,
    /// Average execution time rebuilt from `reach` and `avg_trials`.
    pub avg_cycles_model: f64,
}

impl PointResult {
    fn from_counters(snr_db: f64, c: Counters, params: &LatencyParams) -> Self {
        let f = c.frames.max(1) as f64;
        let avg_trials: Vec<f64> = c
            .trials
            .iter()
            .zip(&c.entered)
            .map(|(&t, &e)| if e == 0 { 0.0 } else { t as f64 / e as f64 })
            .collect();
        let reach: Vec<f64> = c.entered.iter().map(|&e| e as f64 / f).collect();
        let avg_cycles_model = psclf_avg_exec_time(&reach, &avg_trials, params).unwrap_or(f64::NAN);
        Self {
            snr_db,
            fer: c.frame_errors as f64 / f,
            early_termination_rate: c.early_terminations as f64 / f,
            collision_rate: c.collision_frames as f64 / f,
            avg_cycles: c.cycles as f64 / f,
            avg_cycles_model,
            avg_trials,
            reach,
            counters: c,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub points: Vec<PointResult>,
    pub scl_latency: u64,
    pub psclf_latency: u64,
    pub code_hash: String,
}

/// Frames per scheduling batch; the stop rule is checked between batches.
pub const BATCH: u64 = 256;

/// A ready-to-run experiment: code, decoder and channel settings.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub pcode: PartitionedCode,
    pub algorithm: Algorithm,
    pub decoder: DecoderConfig,
    pub stop: StopRule,
    pub seed: u64,
    pub rate: f64,
    pub noiseless: bool,
    pub params: LatencyParams,
}

impl Simulation {
    pub fn new(
        pcode: PartitionedCode,
        algorithm: Algorithm,
        decoder: DecoderConfig,
        stop: StopRule,
        seed: u64,
        phi: usize,
        rate_mode: RateMode,
    ) -> Result<Self> {
        decoder.validate()?;
        if algorithm == Algorithm::Sclf && pcode.num_partitions() != 1 {
            return Err(invalid("sclf needs exactly one partition"));
        }
        let n = pcode.code().len() as f64;
        let rate = match rate_mode {
            RateMode::Message => pcode.message_len() as f64 / n,
            RateMode::Info => pcode.code().info_len() as f64 / n,
        };
        // single-pass decoders are charged for the full SCL latency
        let params = match algorithm {
            Algorithm::Psclf => LatencyParams::from_code(&pcode, phi)?,
            _ => LatencyParams::unpartitioned(pcode.code().len(), phi, pcode.code().info_len())?,
        };
        Ok(Self { pcode, algorithm, decoder, stop, seed, rate, noiseless: false, params })
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let pcode = build_code(cfg)?;
        let mut s = Self::new(
            pcode,
            cfg.decoder.algorithm,
            cfg.decoder.config(),
            cfg.stop,
            cfg.seed,
            cfg.phi,
            cfg.rate,
        )?;
        s.noiseless = cfg.noiseless;
        Ok(s)
    }

    fn decode(&self, dec: &mut Decoder, frame: u64, point: u64, snr_db: f64) -> (DecodeOutcome, Vec<u8>) {
        let mut rng = frame_rng(self.seed, point, frame);
        let msg: Vec<u8> =
            (0..self.pcode.message_len()).map(|_| rng.random::<bool>() as u8).collect();
        let u = self.pcode.input_vector(&msg).expect("message length matches");
        let x = self.pcode.code().encode(&u).expect("input vector is valid");
        let ch = if self.noiseless {
            noiseless(&x, snr_db, self.rate)
        } else {
            transmit(&x, snr_db, self.rate, &mut rng).expect("rate validated")
        };
        let out = match self.algorithm {
            Algorithm::Scl => dec.scl(&ch, Some(&u)),
            Algorithm::CaScl => dec.ca_scl(&ch, Some(&u)),
            Algorithm::Sclf => dec.sclf(&ch, Some(&u)).expect("single partition checked"),
            Algorithm::Psclf => dec.psclf(&ch, Some(&u)),
        };
        (out, msg)
    }

    /// Runs one SNR point until the stop rule fires. `point` selects the
    /// random substream, so equal `(seed, point)` pairs see equal noise.
    pub fn run_point(&self, point: u64, snr_db: f64) -> Result<PointResult> {
        transmit(&[0], snr_db, self.rate, &mut frame_rng(0, 0, 0))?;
        let dec = Decoder::new(self.pcode.clone(), self.decoder.clone())?;
        let parts = self.params.num_partitions();
        let mut total = Counters::new(parts);
        while total.frames < self.stop.max_frames && total.frame_errors < self.stop.min_errors {
            let start = total.frames;
            let end = (start + BATCH).min(self.stop.max_frames);
            let batch = (start..end)
                .into_par_iter()
                .fold(
                    || (dec.clone(), Counters::new(parts)),
                    |(mut d, mut c), f| {
                        let (out, msg) = self.decode(&mut d, f, point, snr_db);
                        let cycles = accumulate_execution_time(&out, &self.params);
                        c.record(&out, &msg, cycles);
                        (d, c)
                    },
                )
                .map(|(_, c)| c)
                .reduce(
                    || Counters::new(parts),
                    |mut a, b| {
                        a.merge(&b);
                        a
                    },
                );
            total.merge(&batch);
        }
        Ok(PointResult::from_counters(snr_db, total, &self.params))
    }

    /// Runs every point of `snr_db`, point index `j` using substream `j`.
    pub fn run(&self, snr_db: &[f64]) -> Result<SimResult> {
        let points = snr_db
            .iter()
            .enumerate()
            .map(|(j, &s)| self.run_point(j as u64, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(SimResult {
            points,
            scl_latency: scl_latency(self.params.n_len, self.params.phi, self.params.info_size),
            psclf_latency: psclf_latency(self.decoder.t_max, &self.params),
            code_hash: code_hash(&self.pcode),
        })
    }
}

/// Builds the code from `cfg` and simulates every SNR point.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SimResult> {
    Simulation::from_config(cfg)?.run(&cfg.snr_db)
}

/// One row per SNR point; per-partition columns are numbered from 1.
pub fn write_results_csv<W: Write>(res: &SimResult, out: W) -> Result<()> {
    let parts = res.points.first().map_or(0, |p| p.reach.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = [
        "snr_db",
        "frames",
        "frame_errors",
        "fer",
        "undetected_errors",
        "early_termination_rate",
        "collision_rate",
        "avg_cycles",
        "avg_cycles_model",
        "avg_cycles_over_scl",
        "scl_latency",
        "psclf_latency",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((1..=parts).map(|p| format!("avg_trials_{p}")));
    header.extend((1..=parts).map(|p| format!("reach_{p}")));
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(&header).map_err(io)?;
    for p in &res.points {
        let c = &p.counters;
        let mut rec = vec![
            p.snr_db.to_string(),
            c.frames.to_string(),
            c.frame_errors.to_string(),
            p.fer.to_string(),
            c.undetected_errors.to_string(),
            p.early_termination_rate.to_string(),
            p.collision_rate.to_string(),
            p.avg_cycles.to_string(),
            p.avg_cycles_model.to_string(),
            (p.avg_cycles / res.scl_latency as f64).to_string(),
            res.scl_latency.to_string(),
            res.psclf_latency.to_string(),
        ];
        rec.extend(p.avg_trials.iter().map(f64::to_string));
        rec.extend(p.reach.iter().map(f64::to_string));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Sidecar written next to a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMetadata {
    pub version: String,
    pub seed: u64,
    pub threads: usize,
    pub code_hash: String,
    pub config: ExperimentConfig,
}

pub fn metadata_path(results: &Path) -> PathBuf {
    let mut s = results.as_os_str().to_owned();
    s.push(".meta.toml");
    PathBuf::from(s)
}

pub fn write_metadata(results: &Path, meta: &RunMetadata) -> Result<()> {
    let text = toml::to_string(meta).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(metadata_path(results), text)?;
    Ok(())
}

pub fn read_metadata(path: &Path) -> Result<RunMetadata> {
    toml::from_str(&std::fs::read_to_string(path)?).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoders::DecodeStatus;

    fn params() -> LatencyParams {
        LatencyParams::new(1024, 64, vec![100, 200, 244], vec![400, 700, 1023]).unwrap()
    }

    fn outcome(status: DecodeStatus, trials: Vec<usize>) -> DecodeOutcome {
        let n = trials.len();
        DecodeOutcome { status, message: None, trials_per_partition: trials, collision_observed: vec![false; n] }
    }

    #[test]
    fn cycles_telescope() {
        let p = params();
        let all_one = outcome(DecodeStatus::Success, vec![1, 1, 1]);
        assert_eq!(accumulate_execution_time(&all_one, &p), scl_latency(1024, 64, 544));
        let et = outcome(DecodeStatus::EarlyTerminated(1), vec![20]);
        assert_eq!(
            accumulate_execution_time(&et, &p),
            20 * crate::analysis::scl_partial_latency(1, &p)
        );
    }

    #[test]
    fn counters_merge_is_addition() {
        let mut a = Counters::new(2);
        a.record(&outcome(DecodeStatus::Success, vec![1, 3]), &[], 10);
        let mut b = Counters::new(2);
        b.record(&outcome(DecodeStatus::EarlyTerminated(1), vec![5]), &[], 7);
        let mut ab = a.clone();
        ab.merge(&b);
        let mut ba = b.clone();
        ba.merge(&a);
        assert_eq!(ab, ba);
        assert_eq!(ab.entered, vec![2, 1]);
        assert_eq!(ab.trials, vec![6, 3]);
        assert_eq!(ab.frame_errors, 2);
        assert_eq!(ab.early_terminations, 1);
    }

    #[test]
    fn config_round_trip() {
        let text = r#"
            snr_db = [1.0, 2.0]
            seed = 7
            [code]
            n = 64
            k = 24
            [partition]
            strategy = "div-k"
            crc = [4, 4]
            [decoder]
            algorithm = "psclf"
            list_size = 2
            omega = 1
            t_max = 5
            alpha = 1.0
            restart = "check-remove"
            penalty = 1000000.0
            kernel = "min-sum"
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let pc = build_code(&cfg).unwrap();
        assert_eq!(pc.message_len(), 24);
        assert!(ExperimentConfig::from_toml(&text.replace("seed = 7", "sede = 7")).is_err());
        assert!(ExperimentConfig::from_toml(&text.replace("[1.0, 2.0]", "[]")).is_err());
    }
}
