//! Cycle-count models of semi-parallel SC / SCL / PSCLF decoders and the
//! random-candidate CRC collision model.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::frame_rng;
use crate::code::{CrcSpec, PartitionedCode};
use crate::error::{invalid, Error, Result};

/// Hardware and code parameters of the latency model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatencyParams {
    pub n_len: usize,
    /// Number of processing elements.
    pub phi: usize,
    pub info_size: usize,
    /// Information positions per partition.
    pub sizes: Vec<usize>,
    pub mu: Vec<usize>,
}

pub const DEFAULT_PHI: usize = 64;

impl LatencyParams {
    pub fn new(n_len: usize, phi: usize, sizes: Vec<usize>, mu: Vec<usize>) -> Result<Self> {
        if n_len < 2 || !n_len.is_power_of_two() {
            return Err(invalid(format!("block length {n_len} is not a power of two >= 2")));
        }
        if phi == 0 || !phi.is_power_of_two() {
            return Err(invalid(format!("processing-element count {phi} is not a power of two")));
        }
        if sizes.len() != mu.len() || mu.is_empty() {
            return Err(invalid("partition sizes and boundaries differ in length"));
        }
        if mu.windows(2).any(|w| w[0] >= w[1]) || *mu.last().unwrap() != n_len - 1 {
            return Err(invalid(format!("boundaries {mu:?} must increase and end at {}", n_len - 1)));
        }
        let info_size = sizes.iter().sum();
        Ok(Self { n_len, phi, info_size, sizes, mu })
    }

    /// Single-partition parameters.
    pub fn unpartitioned(n_len: usize, phi: usize, info_size: usize) -> Result<Self> {
        Self::new(n_len, phi, vec![info_size], vec![n_len - 1])
    }

    pub fn from_code(pcode: &PartitionedCode, phi: usize) -> Result<Self> {
        Self::new(pcode.code().len(), phi, pcode.sizes().to_vec(), pcode.mu().to_vec())
    }

    pub fn num_partitions(&self) -> usize {
        self.mu.len()
    }
}

/// Cycles a semi-parallel SC decoder with `phi` processing elements needs to
/// reach leaf `i`.
pub fn sc_partial_latency(i: usize, n_len: usize, phi: usize) -> u64 {
    assert!(i < n_len, "leaf {i} outside a length-{n_len} code");
    let n = n_len.trailing_zeros();
    (0..n)
        .map(|s| {
            let stage = (1usize << s).div_ceil(phi) as u64;
            stage + stage * (i >> s) as u64
        })
        .sum()
}

/// `2N + (N / phi) log2(N / (4 phi))`, valid for `phi <= N / 4`.
pub fn sc_latency_closed_form(n_len: usize, phi: usize) -> u64 {
    assert!(4 * phi <= n_len, "closed form needs phi <= N/4");
    let ratio = n_len / (4 * phi);
    (2 * n_len + (n_len / phi) * ratio.trailing_zeros() as usize) as u64
}

/// Full SCL latency: SC latency plus one sorting step per information bit.
pub fn scl_latency(n_len: usize, phi: usize, info_size: usize) -> u64 {
    sc_partial_latency(n_len - 1, n_len, phi) + info_size as u64
}

/// SCL cycles to finish partition `p` (1-based); zero for `p = 0`.
pub fn scl_partial_latency(p: usize, params: &LatencyParams) -> u64 {
    if p == 0 {
        return 0;
    }
    let sorts: usize = params.sizes[..p].iter().sum();
    sorts as u64 + sc_partial_latency(params.mu[p - 1], params.n_len, params.phi)
}

/// Cycles spent on one SCL pass over partition `p` (1-based).
pub fn partition_cost(p: usize, params: &LatencyParams) -> u64 {
    scl_partial_latency(p, params) - scl_partial_latency(p - 1, params)
}

/// Average PSCLF execution time from the probability of entering each
/// partition and the mean number of trials spent in it.
///
/// Partitions that are never entered may carry any mean trial count.
pub fn psclf_avg_exec_time(reach: &[f64], avg_trials: &[f64], params: &LatencyParams) -> Result<f64> {
    let parts = params.num_partitions();
    if reach.len() != parts || avg_trials.len() != parts {
        return Err(invalid(format!("expected {parts} reach probabilities and trial means")));
    }
    if reach[0] != 1.0 {
        return Err(invalid("the first partition is always entered"));
    }
    if reach.iter().any(|r| !(0.0..=1.0).contains(r)) || reach.windows(2).any(|w| w[1] > w[0]) {
        return Err(invalid(format!("reach probabilities {reach:?} must lie in [0, 1] and not increase")));
    }
    let mut total = 0.0;
    for p in 0..parts {
        if reach[p] == 0.0 {
            continue;
        }
        if avg_trials[p].is_nan() || avg_trials[p] < 1.0 {
            return Err(invalid(format!("partition {} averages {} trials", p + 1, avg_trials[p])));
        }
        total += reach[p] * avg_trials[p] * partition_cost(p + 1, params) as f64;
    }
    Ok(total)
}

/// Worst-case PSCLF execution time: every partition uses all `t_max` trials.
pub fn psclf_latency(t_max: usize, params: &LatencyParams) -> u64 {
    (1..=params.num_partitions())
        .map(|p| t_max as u64 * partition_cost(p, params))
        .sum()
}

pub fn sclf_avg_exec_time(avg_trials: f64, scl_latency: u64) -> f64 {
    avg_trials * scl_latency as f64
}

/// Probability that one random sequence satisfies a `width`-bit CRC.
pub fn p_collision(width: u32) -> f64 {
    (-(width as f64)).exp2()
}

/// `ln(1 - 2^-C)`.
fn ln_no_collision(width: u32) -> f64 {
    (-p_collision(width)).ln_1p()
}

/// At least one of `L * T_max` random sequences satisfies the CRC.
pub fn p_collision_trials(width: u32, list_size: usize, t_max: usize) -> f64 {
    -((list_size * t_max) as f64 * ln_no_collision(width)).exp_m1()
}

/// At least one partition sees a collision.
pub fn p_collision_any_partition(widths: &[u32], list_size: usize, t_max: usize) -> f64 {
    let draws = (list_size * t_max) as f64;
    -(widths.iter().map(|&c| draws * ln_no_collision(c)).sum::<f64>()).exp_m1()
}

/// Every partition sees a collision, so a wrong frame passes all CRCs.
pub fn p_all_partitions_collide(widths: &[u32], list_size: usize, t_max: usize) -> f64 {
    widths.iter().map(|&c| p_collision_trials(c, list_size, t_max)).product()
}

/// Some partition before the last exhausts its trials after all earlier
/// partitions were (falsely) passed.
pub fn p_early_termination(widths: &[u32], list_size: usize, t_max: usize) -> f64 {
    let mut passed_so_far = 1.0;
    let mut total = 0.0;
    for &c in widths.iter().take(widths.len().saturating_sub(1)) {
        let q = p_collision_trials(c, list_size, t_max);
        total += (1.0 - q) * passed_so_far;
        passed_so_far *= q;
    }
    total
}

/// Validated inputs of the collision model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollisionParams {
    pub widths: Vec<u32>,
    pub list_size: usize,
    pub t_max: usize,
}

impl CollisionParams {
    pub fn new(widths: Vec<u32>, list_size: usize, t_max: usize) -> Result<Self> {
        if widths.is_empty() || widths.contains(&0) {
            return Err(invalid(format!("CRC widths {widths:?} must be non-empty and positive")));
        }
        if list_size == 0 || t_max == 0 {
            return Err(invalid("list size and trial budget must be at least 1"));
        }
        Ok(Self { widths, list_size, t_max })
    }

    pub fn any_partition(&self) -> f64 {
        p_collision_any_partition(&self.widths, self.list_size, self.t_max)
    }

    pub fn all_partitions(&self) -> f64 {
        p_all_partitions_collide(&self.widths, self.list_size, self.t_max)
    }

    pub fn early_termination(&self) -> f64 {
        p_early_termination(&self.widths, self.list_size, self.t_max)
    }
}

/// Payload length of the random sequences fed to the CRC checker.
pub const RANDOM_PAYLOAD_BITS: usize = 64;

/// Monte-Carlo counterpart of the collision model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollisionEstimate {
    pub frames: u64,
    /// Frames where at least one partition saw a passing random sequence.
    pub any: u64,
    /// Frames where every partition did.
    pub all: u64,
    /// Per-partition count of frames with a collision.
    pub per_partition: Vec<u64>,
}

impl CollisionEstimate {
    pub fn p_any(&self) -> f64 {
        self.any as f64 / self.frames as f64
    }

    pub fn p_all(&self) -> f64 {
        self.all as f64 / self.frames as f64
    }
}

/// Feeds `L` uniformly random sequences per trial, for `t_max` trials, to the
/// CRC of every partition and counts the frames with collisions.
pub fn simulate_random_collisions(
    widths: &[u32],
    list_size: usize,
    t_max: usize,
    frames: u64,
    seed: u64,
) -> Result<CollisionEstimate> {
    if frames == 0 {
        return Err(invalid("at least one frame is required"));
    }
    let crcs = widths.iter().map(|&w| CrcSpec::with_width(w)).collect::<Result<Vec<_>>>()?;
    let draws = list_size * t_max;
    let hits: Vec<Vec<bool>> = (0..frames)
        .into_par_iter()
        .map(|f| {
            let mut rng = frame_rng(seed, 0, f);
            crcs.iter()
                .map(|crc| {
                    let bits = RANDOM_PAYLOAD_BITS + crc.width() as usize;
                    let mut buf = vec![0u8; bits.div_ceil(8)];
                    (0..draws).any(|_| {
                        rng.fill(&mut buf[..]);
                        crc.remainder_packed(&buf, bits) == 0
                    })
                })
                .collect()
        })
        .collect();
    let mut est = CollisionEstimate {
        frames,
        any: 0,
        all: 0,
        per_partition: vec![0; widths.len()],
    };
    for h in &hits {
        est.any += h.iter().any(|&x| x) as u64;
        est.all += h.iter().all(|&x| x) as u64;
        for (c, &x) in est.per_partition.iter_mut().zip(h) {
            *c += x as u64;
        }
    }
    Ok(est)
}

/// One row of the collision table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollisionRow {
    pub structure: String,
    pub list_size: usize,
    pub t_max: usize,
    /// Single-CRC collision probability when all widths are equal.
    pub p_single: Option<f64>,
    pub p_all_partitions: f64,
    pub p_any_partition: f64,
    pub p_early_termination: f64,
}

pub fn structure_label(widths: &[u32]) -> String {
    widths.iter().map(u32::to_string).collect::<Vec<_>>().join("-")
}

pub fn collision_table(structures: &[Vec<u32>], list_size: usize, t_values: &[usize]) -> Vec<CollisionRow> {
    let mut rows = Vec::new();
    for w in structures {
        let uniform = w.windows(2).all(|p| p[0] == p[1]);
        for &t in t_values {
            rows.push(CollisionRow {
                structure: structure_label(w),
                list_size,
                t_max: t,
                p_single: (uniform && !w.is_empty()).then(|| p_collision_trials(w[0], list_size, t)),
                p_all_partitions: p_all_partitions_collide(w, list_size, t),
                p_any_partition: p_collision_any_partition(w, list_size, t),
                p_early_termination: p_early_termination(w, list_size, t),
            });
        }
    }
    rows
}

pub fn write_collision_table<W: Write>(rows: &[CollisionRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Analytic and simulated all-partitions collision probability against
/// `T_max`; one column pair per CRC structure.
pub fn write_collision_curves<W: Write>(
    structures: &[Vec<u32>],
    list_size: usize,
    t_values: &[usize],
    frames: u64,
    seed: u64,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t_max".to_string()];
    for s in structures {
        let l = structure_label(s);
        header.push(format!("{l}_analytic"));
        header.push(format!("{l}_simulated"));
    }
    w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
    for &t in t_values {
        let mut rec = vec![t.to_string()];
        for s in structures {
            rec.push(p_all_partitions_collide(s, list_size, t).to_string());
            let sim = simulate_random_collisions(s, list_size, t, frames, seed)?;
            rec.push(sim.p_all().to_string());
        }
        w.write_record(&rec).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
