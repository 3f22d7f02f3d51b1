//! First-error statistics of SCL and placement of partition boundaries.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{frame_rng, transmit};
use crate::code::PolarCode;
use crate::decoders::{trajectory_leaf_llrs, Kernel, ListDecoder};
use crate::error::{invalid, Error, Result};

/// Empirical distribution of the first leaf at which every SCL path has left
/// the transmitted trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstErrorCdf {
    code: PolarCode,
    pub list_size: usize,
    pub snr_db: f64,
    /// Frames decoded, with or without a first error.
    pub frames: u64,
    counts: Vec<u64>,
    error_frames: u64,
}

impl FirstErrorCdf {
    /// Builds a CDF from raw first-error counts per leaf index.
    pub fn from_counts(
        code: PolarCode,
        list_size: usize,
        snr_db: f64,
        frames: u64,
        counts: Vec<u64>,
    ) -> Result<Self> {
        if counts.len() != code.len() {
            return Err(invalid(format!(
                "{} counts for a code of length {}",
                counts.len(),
                code.len()
            )));
        }
        let error_frames = counts.iter().sum();
        if error_frames > frames {
            return Err(invalid("more error frames than frames"));
        }
        Ok(Self { code, list_size, snr_db, frames, counts, error_frames })
    }

    pub fn code(&self) -> &PolarCode {
        &self.code
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn error_frames(&self) -> u64 {
        self.error_frames
    }

    /// Number of first errors at indices `<= k`.
    pub fn cumulative(&self, k: usize) -> u64 {
        self.counts[..=k.min(self.counts.len() - 1)].iter().sum()
    }

    /// `F(k)`; zero everywhere when no error was observed.
    pub fn cdf(&self, k: usize) -> f64 {
        if self.error_frames == 0 {
            return 0.0;
        }
        self.cumulative(k) as f64 / self.error_frames as f64
    }

    pub fn values(&self) -> Vec<f64> {
        let total = self.error_frames.max(1) as f64;
        let mut acc = 0u64;
        self.counts
            .iter()
            .map(|&c| {
                acc += c;
                acc as f64 / total
            })
            .collect()
    }

    /// Smallest `k` with `F(k) >= num / den`, compared in integers.
    pub fn quantile(&self, num: u64, den: u64) -> Option<usize> {
        let mut acc = 0u64;
        for (k, &c) in self.counts.iter().enumerate() {
            acc += c;
            if u128::from(acc) * u128::from(den) >= u128::from(num) * u128::from(self.error_frames)
                && self.error_frames > 0
            {
                return Some(k);
            }
        }
        None
    }

    /// Adds the counts of another estimate for the same code and list size.
    pub fn merge(&mut self, other: &FirstErrorCdf) -> Result<()> {
        if other.code != self.code || other.list_size != self.list_size {
            return Err(invalid("cannot merge CDFs of different codes or list sizes"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.frames += other.frames;
        self.error_frames += other.error_frames;
        Ok(())
    }

    /// CSV with columns `index,count,cdf`; run parameters sit in `#` lines.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        writeln!(
            out,
            "# n={} list_size={} snr_db={} frames={} error_frames={}",
            self.code.len(),
            self.list_size,
            self.snr_db,
            self.frames,
            self.error_frames
        )?;
        let mut w = csv::Writer::from_writer(out);
        for (k, (&c, f)) in self.counts.iter().zip(self.values()).enumerate() {
            w.serialize(CdfRow { index: k, count: c, cdf: f }).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a CSV written by [`FirstErrorCdf::write_csv`] for `code`.
    pub fn read_csv<R: Read>(input: R, code: PolarCode) -> Result<Self> {
        let mut text = String::new();
        let mut input = input;
        input.read_to_string(&mut text)?;
        let mut list_size = 0usize;
        let mut snr_db = f64::NAN;
        let mut frames = None;
        for line in text.lines().filter_map(|l| l.trim().strip_prefix('#')) {
            for kv in line.split_whitespace() {
                let Some((k, v)) = kv.split_once('=') else { continue };
                let bad = || Error::Parse(format!("bad header field `{kv}`"));
                match k {
                    "list_size" => list_size = v.parse().map_err(|_| bad())?,
                    "snr_db" => snr_db = v.parse().map_err(|_| bad())?,
                    "frames" => frames = Some(v.parse::<u64>().map_err(|_| bad())?),
                    _ => {}
                }
            }
        }
        let body: String = text
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .map(|l| format!("{l}\n"))
            .collect();
        let mut counts = vec![0u64; code.len()];
        for row in csv::Reader::from_reader(body.as_bytes()).deserialize::<CdfRow>() {
            let row = row.map_err(csv_err)?;
            if row.index >= counts.len() {
                return Err(Error::Parse(format!("index {} outside the code", row.index)));
            }
            counts[row.index] = row.count;
        }
        let total = counts.iter().sum();
        Self::from_counts(code, list_size, snr_db, frames.unwrap_or(total), counts)
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn read_csv_file(path: &Path, code: PolarCode) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, code)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CdfRow {
    index: usize,
    count: u64,
    cdf: f64,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Settings of a genie-aided first-error run.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfEstimation {
    pub list_size: usize,
    pub snr_db: f64,
    /// Code rate used for the Eb/N0 to noise-variance conversion.
    pub rate: f64,
    pub min_error_frames: u64,
    /// Hard cap on decoded frames; `None` runs until enough errors are seen.
    pub max_frames: Option<u64>,
    pub seed: u64,
    pub kernel: Kernel,
}

impl CdfEstimation {
    pub fn new(list_size: usize, snr_db: f64, rate: f64, min_error_frames: u64, seed: u64) -> Self {
        Self {
            list_size,
            snr_db,
            rate,
            min_error_frames,
            max_frames: None,
            seed,
            kernel: Kernel::MinSum,
        }
    }
}

const CDF_BATCH: u64 = 2048;
const SETTLE_STEP: usize = 32;

/// Genie-aided SCL over random frames until `min_error_frames` first errors
/// have been recorded.
///
/// Frames are drawn in fixed batches with one random stream per frame, so
/// the result is independent of the number of worker threads.
pub fn estimate_first_error_cdf(code: &PolarCode, est: &CdfEstimation) -> Result<FirstErrorCdf> {
    if est.min_error_frames == 0 {
        return Err(invalid("min_error_frames must be at least 1"));
    }
    if !est.list_size.is_power_of_two() {
        return Err(invalid(format!("list size {} is not a power of two", est.list_size)));
    }
    // validates rate and SNR once up front
    transmit(&[0], est.snr_db, est.rate, &mut frame_rng(0, 0, 0))?;
    let proto = ListDecoder::new(code, est.list_size, est.kernel);
    let n_len = code.len();
    let mut counts = vec![0u64; n_len];
    let mut errors = 0u64;
    let mut frames = 0u64;
    let cap = est.max_frames.unwrap_or(u64::MAX);
    while errors < est.min_error_frames && frames < cap {
        let end = frames.saturating_add(CDF_BATCH).min(cap);
        let firsts: Vec<Option<usize>> = (frames..end)
            .into_par_iter()
            .map_init(
                || (proto.clone(), Vec::new()),
                |(dec, records), f| first_error_of_frame(code, est, dec, records, f),
            )
            .collect();
        for i in firsts.into_iter().flatten() {
            counts[i] += 1;
            errors += 1;
        }
        frames = end;
    }
    FirstErrorCdf::from_counts(code.clone(), est.list_size, est.snr_db, frames, counts)
}

fn first_error_of_frame(
    code: &PolarCode,
    est: &CdfEstimation,
    dec: &mut ListDecoder,
    records: &mut Vec<crate::decoders::SortRecord>,
    frame: u64,
) -> Option<usize> {
    let mut rng = frame_rng(est.seed, 0, frame);
    let bits: Vec<u8> = (0..code.info_len()).map(|_| rng.random::<bool>() as u8).collect();
    let u = code.embed(&bits).expect("info length matches");
    let x = code.encode(&u).expect("input vector is valid");
    let ch = transmit(&x, est.snr_db, est.rate, &mut rng).expect("validated");
    dec.load(&ch.llrs, Some(&u));
    dec.set_stop_on_first_error(true);
    let last = code.len() - 1;
    if est.kernel != Kernel::MinSum {
        records.clear();
        dec.run_until(last, &[], records);
        return dec.first_error();
    }
    let bound = TruthBound::new(code, &ch.llrs, &u);
    let mut stop = bound.last_threat.unwrap_or(0);
    loop {
        records.clear();
        dec.run_until(stop.min(last), &[], records);
        if dec.first_error().is_some() || stop >= last {
            return dec.first_error();
        }
        if bound.settled(dec) {
            return None;
        }
        stop += SETTLE_STEP;
    }
}

const PRUNE_MARGIN: f64 = 1e-3;

/// Genie bookkeeping for early exit with min-sum metrics.
///
/// `rest[i]` is the penalty the true path still collects on leaves `i..N`.
/// A path whose metric exceeds the truth's by more than `rest[i + 1]` after
/// leaf `i` can never overtake it, nor can its descendants. A competitor
/// branching off the truth at information leaf `j` pays `|lam_j|` there, so
/// it is harmless when the truth agrees with `lam_j` and `|lam_j| > rest[j + 1]`.
/// `last_threat` is the last leaf where that fails.
struct TruthBound {
    rest: Vec<f64>,
    last_threat: Option<usize>,
}

impl TruthBound {
    fn new(code: &PolarCode, llrs: &[f64], u: &[u8]) -> Self {
        let leaves = trajectory_leaf_llrs(llrs, u);
        let n_len = u.len();
        let mut rest = vec![0.0f64; n_len + 1];
        let mut last_threat = None;
        for i in (0..n_len).rev() {
            let lam = leaves[i];
            let agrees = lam != 0.0 && (lam < 0.0) as u8 == u[i];
            let mag = f64::from(lam.abs());
            if last_threat.is_none()
                && code.is_info(i)
                && (!agrees || mag <= rest[i + 1] + PRUNE_MARGIN)
            {
                last_threat = Some(i);
            }
            rest[i] = rest[i + 1] + if agrees { 0.0 } else { mag };
        }
        Self { rest, last_threat }
    }

    /// True once no path but the truth can ever rank ahead of it.
    fn settled(&self, dec: &ListDecoder) -> bool {
        let done = dec.next_leaf();
        if self.last_threat.is_some_and(|j| j >= done) {
            return false;
        }
        let Some(t) = (0..dec.num_paths()).find(|&l| dec.on_truth(l)) else {
            return false;
        };
        let bound = dec.pm(t) + self.rest[done] + PRUNE_MARGIN;
        (0..dec.num_paths()).all(|l| l == t || dec.pm(l) > bound)
    }
}

/// Places `P` boundaries so that each partition holds an equal share of the
/// first-error mass: `mu_p` is the smallest index with `F(mu_p) >= p / P`,
/// moved up to the next information index if needed; `mu_P = N - 1`.
pub fn design_partitions_cdf(cdf: &FirstErrorCdf, parts: usize) -> Result<Vec<usize>> {
    if parts == 0 {
        return Err(invalid("at least one partition is required"));
    }
    let code = &cdf.code;
    let last = code.len() - 1;
    if parts > 1 && cdf.error_frames == 0 {
        return Err(Error::InfeasiblePartition("CDF holds no error events".into()));
    }
    let mut mu = Vec::with_capacity(parts);
    for p in 1..parts {
        let k = cdf
            .quantile(p as u64, parts as u64)
            .ok_or_else(|| Error::InfeasiblePartition(format!("F never reaches {p}/{parts}")))?;
        let snapped = code.info_set()[code.info_set().partition_point(|&i| i < k)];
        if mu.last().is_some_and(|&m| m >= snapped) || snapped >= last {
            return Err(Error::InfeasiblePartition(format!(
                "boundary {p} of {parts} collapses onto index {snapped}; the CDF is too concentrated"
            )));
        }
        mu.push(snapped);
    }
    mu.push(last);
    Ok(mu)
}

/// Equal number of information positions per partition:
/// `S_p = round(p |I| / P)` and `mu_p` is the `S_p`-th information index.
pub fn design_partitions_div_k(info_set: &[usize], parts: usize) -> Result<Vec<usize>> {
    let size = info_set.len();
    if parts == 0 || parts > size {
        return Err(invalid(format!("cannot split {size} information positions into {parts} parts")));
    }
    Ok((1..=parts)
        .map(|p| {
            let s = (2 * p * size + parts) / (2 * parts);
            info_set[s - 1]
        })
        .collect())
}

/// Equal-length partitions `mu_p = p N / P - 1`.
///
/// `crc_widths` gives the check length of every partition; each partition
/// must hold at least one message bit on top of its check bits.
pub fn design_partitions_div_n(
    n_len: usize,
    parts: usize,
    info_set: &[usize],
    crc_widths: &[u32],
) -> Result<Vec<usize>> {
    if parts == 0 || !n_len.is_multiple_of(parts) {
        return Err(invalid(format!("{parts} does not divide block length {n_len}")));
    }
    if crc_widths.len() != parts {
        return Err(invalid(format!("{} CRC widths for {parts} partitions", crc_widths.len())));
    }
    let mu: Vec<usize> = (1..=parts).map(|p| p * n_len / parts - 1).collect();
    for (p, (s, &c)) in non_frozen_counts(info_set, &mu).iter().zip(crc_widths).enumerate() {
        if *s < c as usize + 1 {
            return Err(Error::InfeasiblePartition(format!(
                "partition {} holds {s} information positions, fewer than its {c} check bits plus one message bit",
                p + 1
            )));
        }
    }
    Ok(mu)
}

/// Number of information positions in each partition `(mu_{p-1}, mu_p]`.
pub fn non_frozen_counts(info_set: &[usize], mu: &[usize]) -> Vec<usize> {
    let mut prev = 0;
    mu.iter()
        .map(|&m| {
            let upto = info_set.partition_point(|&i| i <= m);
            let s = upto - prev;
            prev = upto;
            s
        })
        .collect()
}

/// Probability that the first error falls in each partition,
/// `F(mu_p) - F(mu_{p-1})` with `F(mu_0) = 0`.
pub fn first_error_partition_probs(cdf: &FirstErrorCdf, mu: &[usize]) -> Result<Vec<f64>> {
    if mu.is_empty() || mu.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(format!("boundaries {mu:?} are not strictly increasing")));
    }
    if *mu.last().unwrap() >= cdf.code.len() {
        return Err(invalid("boundary outside the code"));
    }
    let mut prev = 0.0;
    Ok(mu
        .iter()
        .map(|&m| {
            let f = cdf.cdf(m);
            let d = f - prev;
            prev = f;
            d
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_cdf(counts: Vec<u64>) -> FirstErrorCdf {
        let code = PolarCode::new(8, vec![3, 5, 6, 7]).unwrap();
        let total = counts.iter().sum();
        FirstErrorCdf::from_counts(code, 1, 0.0, total, counts).unwrap()
    }

    #[test]
    fn quantile_uses_integer_comparison() {
        let f = toy_cdf(vec![0, 0, 0, 1, 0, 1, 1, 1]);
        assert_eq!(f.quantile(1, 4), Some(3));
        assert_eq!(f.quantile(2, 4), Some(5));
        assert_eq!(f.quantile(3, 4), Some(6));
        assert_eq!(f.quantile(4, 4), Some(7));
        assert_eq!(design_partitions_cdf(&f, 4).unwrap(), vec![3, 5, 6, 7]);
        assert_eq!(design_partitions_cdf(&f, 1).unwrap(), vec![7]);
    }

    #[test]
    fn concentrated_mass_is_infeasible() {
        let f = toy_cdf(vec![0, 0, 0, 0, 0, 5, 0, 0]);
        assert_eq!(design_partitions_cdf(&f, 2).unwrap(), vec![5, 7]);
        assert!(matches!(design_partitions_cdf(&f, 3), Err(Error::InfeasiblePartition(_))));
        assert!(matches!(
            design_partitions_cdf(&toy_cdf(vec![0; 8]), 2),
            Err(Error::InfeasiblePartition(_))
        ));
    }

    #[test]
    fn div_k_rounds() {
        let info: Vec<usize> = (0..10).collect();
        assert_eq!(design_partitions_div_k(&info, 2).unwrap(), vec![4, 9]);
        // 10/3 = 3.33 -> 3, 20/3 = 6.67 -> 7
        assert_eq!(design_partitions_div_k(&info, 3).unwrap(), vec![2, 6, 9]);
        assert_eq!(design_partitions_div_k(&info, 1).unwrap(), vec![9]);
    }

    #[test]
    fn div_n_checks_room_for_message() {
        let info = vec![3, 5, 6, 7];
        assert!(design_partitions_div_n(8, 2, &info, &[1, 1]).is_err());
        assert_eq!(design_partitions_div_n(8, 2, &info, &[0, 1]).unwrap(), vec![3, 7]);
        assert!(design_partitions_div_n(8, 3, &info, &[0, 0, 0]).is_err());
    }

    #[test]
    fn partition_probs_telescope() {
        let f = toy_cdf(vec![0, 0, 0, 2, 0, 1, 3, 2]);
        let p = first_error_partition_probs(&f, &[3, 6, 7]).unwrap();
        assert_eq!(p, vec![0.25, 0.5, 0.25]);
    }

    #[test]
    fn csv_round_trip() {
        let f = toy_cdf(vec![0, 0, 0, 2, 0, 1, 3, 2]);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let back = FirstErrorCdf::read_csv(buf.as_slice(), f.code().clone()).unwrap();
        assert_eq!(back.counts(), f.counts());
        assert_eq!(back.frames, f.frames);
        assert_eq!(back.list_size, 1);
    }
}
