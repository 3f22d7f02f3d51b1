use crate::channel::ChannelRealization;
use crate::code::{PartitionedCode, PolarCode};
use crate::decoders::flip::{build_flip_candidates, FlipNode, FlipQueue, SortRecord};
use crate::decoders::list::{ListDecoder, PartitionSnapshot};
use crate::decoders::{DecodeOutcome, DecodeStatus, DecoderConfig, Kernel, RestartMode};
use crate::error::{invalid, Result};

/// Reusable decoder for one partitioned code and configuration.
#[derive(Debug, Clone)]
pub struct Decoder {
    pcode: PartitionedCode,
    config: DecoderConfig,
    list: ListDecoder,
    queue: FlipQueue,
    records: Vec<SortRecord>,
    flags: Vec<bool>,
    wrong: Vec<bool>,
    bits: Vec<u8>,
    truth_info: Option<Vec<u8>>,
}

impl Decoder {
    pub fn new(pcode: PartitionedCode, config: DecoderConfig) -> Result<Self> {
        config.validate()?;
        let list = ListDecoder::new(pcode.code(), config.list_size, config.kernel);
        let info_len = pcode.code().info_len();
        Ok(Self {
            queue: FlipQueue::for_trials(config.t_max),
            records: Vec::with_capacity(info_len),
            flags: vec![false; config.list_size],
            wrong: vec![false; config.list_size],
            bits: vec![0; info_len],
            truth_info: None,
            pcode,
            config,
            list,
        })
    }

    pub fn pcode(&self) -> &PartitionedCode {
        &self.pcode
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    /// The underlying list engine, in the state left by the last decode.
    pub fn list(&self) -> &ListDecoder {
        &self.list
    }

    fn load(&mut self, ch: &ChannelRealization, truth: Option<&[u8]>) {
        self.list.load(&ch.llrs, truth);
        self.truth_info = truth.map(|u| self.pcode.code().extract(u));
    }

    /// Evaluates the CRC of partition `p` on every path; returns whether any passed.
    fn check_partition(&mut self, p: usize) -> bool {
        let rows = self.pcode.info_rows(p);
        debug_assert_eq!(self.list.rows(), rows.end);
        let crc = &self.pcode.crcs()[p];
        let len = rows.len();
        let mut any = false;
        for l in 0..self.list.num_paths() {
            self.list.trace_into(l, rows.start, &mut self.bits[..len]);
            let ok = crc.passes(&self.bits[..len]);
            self.flags[l] = ok;
            if let Some(t) = &self.truth_info {
                self.wrong[l] = self.bits[..len] != t[rows.clone()];
            }
            any |= ok;
        }
        any
    }

    fn passing(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.list.num_paths()).filter(|&l| self.flags[l])
    }

    /// Some path passed the check while its bits differ from the
    /// transmitted ones in the checked rows.
    fn collision(&self) -> bool {
        self.truth_info.is_some() && self.passing().any(|l| self.wrong[l])
    }

    fn best_passing(&self) -> usize {
        let pm = self.list.pms();
        self.passing()
            .reduce(|b, l| if pm[l] < pm[b] { l } else { b })
            .expect("at least one passing path")
    }

    fn message_of(&self, l: usize) -> Vec<u8> {
        self.pcode.message_from_info(&self.list.trace(l, 0))
    }

    /// Runs flip trials on the partition whose pending snapshot is `snap`,
    /// ending at leaf `last`. Returns the trial count and whether a path passed.
    fn flip_trials(&mut self, p: usize, last: usize, snap: &PartitionSnapshot) -> (usize, bool) {
        self.queue.clear();
        let mut node = FlipNode::root();
        let mut t = 0;
        while t < self.config.t_max {
            if t > 0 {
                match self.queue.pop() {
                    Some(next) => node = next,
                    None => break,
                }
                self.list.restore(snap);
            }
            t += 1;
            self.records.clear();
            self.list.run_until(last, &node.flip_set, &mut self.records);
            if self.check_partition(p) {
                return (t, true);
            }
            build_flip_candidates(
                &self.records,
                &mut self.queue,
                &node,
                self.config.omega,
                self.config.alpha,
            );
        }
        (t, false)
    }

    /// Partitioned SCL-flip decoding.
    ///
    /// `truth` is the transmitted input vector; it is used only to fill the
    /// collision diagnostics.
    pub fn psclf(&mut self, ch: &ChannelRealization, truth: Option<&[u8]>) -> DecodeOutcome {
        let parts = self.pcode.num_partitions();
        self.load(ch, truth);
        let mut trials = Vec::with_capacity(parts);
        let mut collisions = Vec::with_capacity(parts);
        for p in 0..parts {
            let last = self.pcode.mu()[p];
            self.list.advance_to_info();
            let snap = self.list.snapshot();
            let (t, passed) = self.flip_trials(p, last, &snap);
            trials.push(t);
            if !passed {
                collisions.push(false);
                let status = if p + 1 < parts {
                    DecodeStatus::EarlyTerminated(p + 1)
                } else {
                    DecodeStatus::Exhausted
                };
                return DecodeOutcome {
                    status,
                    message: None,
                    trials_per_partition: trials,
                    collision_observed: collisions,
                };
            }
            collisions.push(self.collision());
            if p + 1 < parts && self.config.restart == RestartMode::CheckRemove {
                let penalty = self.config.penalty;
                let n = self.list.num_paths();
                let pms = self.list.pms_mut();
                for (pm, &flagged) in pms[..n].iter_mut().zip(&self.flags) {
                    if !flagged {
                        *pm += penalty;
                    }
                }
            }
        }
        let best = self.best_passing();
        DecodeOutcome {
            status: DecodeStatus::Success,
            message: Some(self.message_of(best)),
            trials_per_partition: trials,
            collision_observed: collisions,
        }
    }

    /// SCL-flip decoding of a single-partition code.
    pub fn sclf(&mut self, ch: &ChannelRealization, truth: Option<&[u8]>) -> Result<DecodeOutcome> {
        if self.pcode.num_partitions() != 1 {
            return Err(invalid("SCL-flip decoding needs a single-partition code"));
        }
        self.load(ch, truth);
        self.list.advance_to_info();
        let snap = self.list.snapshot();
        let last = self.list.code_len() - 1;
        let (t, passed) = self.flip_trials(0, last, &snap);
        Ok(if passed {
            let best = self.best_passing();
            DecodeOutcome {
                status: DecodeStatus::Success,
                message: Some(self.message_of(best)),
                trials_per_partition: vec![t],
                collision_observed: vec![self.collision()],
            }
        } else {
            DecodeOutcome {
                status: DecodeStatus::Exhausted,
                message: None,
                trials_per_partition: vec![t],
                collision_observed: vec![false],
            }
        })
    }

    /// Plain SCL: the path with the smallest metric wins, CRCs are ignored.
    pub fn scl(&mut self, ch: &ChannelRealization, truth: Option<&[u8]>) -> DecodeOutcome {
        self.load(ch, truth);
        self.records.clear();
        let last = self.list.code_len() - 1;
        self.list.run_until(last, &[], &mut self.records);
        let best = self.list.best_path();
        DecodeOutcome {
            status: DecodeStatus::Success,
            message: Some(self.message_of(best)),
            trials_per_partition: vec![1],
            collision_observed: vec![false],
        }
    }

    /// CRC-aided SCL: one list pass, then the best path satisfying every CRC.
    pub fn ca_scl(&mut self, ch: &ChannelRealization, truth: Option<&[u8]>) -> DecodeOutcome {
        self.load(ch, truth);
        self.records.clear();
        let last = self.list.code_len() - 1;
        self.list.run_until(last, &[], &mut self.records);
        let n = self.list.num_paths();
        let info = self.list.trace_all();
        let mut best: Option<usize> = None;
        for (l, bits) in info.iter().enumerate().take(n) {
            let ok = (0..self.pcode.num_partitions()).all(|p| {
                self.pcode.crcs()[p].passes(&bits[self.pcode.info_rows(p)])
            });
            self.flags[l] = ok;
            self.wrong[l] = self.truth_info.as_ref().is_some_and(|t| t != bits);
            if ok && best.is_none_or(|b| self.list.pm(l) < self.list.pm(b)) {
                best = Some(l);
            }
        }
        match best {
            Some(b) => DecodeOutcome {
                status: DecodeStatus::Success,
                message: Some(self.pcode.message_from_info(&info[b])),
                trials_per_partition: vec![1],
                collision_observed: vec![self.collision()],
            },
            None => DecodeOutcome {
                status: DecodeStatus::Exhausted,
                message: None,
                trials_per_partition: vec![1],
                collision_observed: vec![false],
            },
        }
    }
}

impl ListDecoder {
    /// Information bits of every current path.
    pub fn trace_all(&self) -> Vec<Vec<u8>> {
        (0..self.num_paths()).map(|l| self.trace(l, 0)).collect()
    }
}

/// Plain SCL without CRC: input vector of the path with the smallest metric.
pub fn scl_decode(
    ch: &ChannelRealization,
    code: &PolarCode,
    list_size: usize,
    kernel: Kernel,
) -> Result<Vec<u8>> {
    if !list_size.is_power_of_two() {
        return Err(invalid(format!("list size {list_size} is not a power of two")));
    }
    if ch.llrs.len() != code.len() {
        return Err(invalid("LLR vector length does not match the code"));
    }
    let mut dec = ListDecoder::new(code, list_size, kernel);
    dec.load(&ch.llrs, None);
    dec.run_until(code.len() - 1, &[], &mut Vec::new());
    Ok(dec.input_vector(dec.best_path()))
}

/// Decodes leaves up to `b` with worst-path selection at `flips`.
///
/// With a snapshot, decoding resumes from it; otherwise it continues from the
/// decoder's current position. Flip indices must be ascending sorting indices
/// inside `[a, b]` that have not been decided yet.
pub fn scl_decode_segment(
    dec: &mut ListDecoder,
    start: Option<&PartitionSnapshot>,
    a: usize,
    b: usize,
    flips: &[usize],
    records: &mut Vec<SortRecord>,
) -> Result<()> {
    if a > b || b >= dec.code_len() {
        return Err(invalid(format!("segment [{a}, {b}] is not inside the code")));
    }
    if let Some(s) = start {
        dec.restore(s);
    }
    let from = dec.next_leaf().max(a);
    if flips.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("flip indices must be strictly ascending"));
    }
    if let Some(&f) = flips.iter().find(|&&f| f < from || f > b || !dec.is_sorting_index(f)) {
        return Err(invalid(format!("flip index {f} is not a pending sorting index in [{a}, {b}]")));
    }
    dec.run_until(b, flips, records);
    Ok(())
}

/// Adds `penalty` to the metric of every path whose CRC flag is false.
pub fn penalize_failed_paths(pms: &[f64], crc_flags: &[bool], penalty: f64) -> Result<Vec<f64>> {
    if pms.len() != crc_flags.len() {
        return Err(invalid("metric and flag vectors differ in length"));
    }
    if !crc_flags.iter().any(|&f| f) {
        return Err(invalid("no path passed the CRC; nothing to keep"));
    }
    Ok(pms
        .iter()
        .zip(crc_flags)
        .map(|(&pm, &ok)| if ok { pm } else { pm + penalty })
        .collect())
}

pub fn psclf_decode(
    ch: &ChannelRealization,
    pcode: &PartitionedCode,
    config: &DecoderConfig,
) -> Result<DecodeOutcome> {
    Ok(Decoder::new(pcode.clone(), config.clone())?.psclf(ch, None))
}

pub fn sclf_decode(
    ch: &ChannelRealization,
    ca_code: &PartitionedCode,
    config: &DecoderConfig,
) -> Result<DecodeOutcome> {
    Decoder::new(ca_code.clone(), config.clone())?.sclf(ch, None)
}

pub fn ca_scl_decode(
    ch: &ChannelRealization,
    pcode: &PartitionedCode,
    list_size: usize,
) -> Result<DecodeOutcome> {
    let config = DecoderConfig { list_size, t_max: 1, ..DecoderConfig::default() };
    Ok(Decoder::new(pcode.clone(), config)?.ca_scl(ch, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn penalty_arithmetic() {
        assert_eq!(penalize_failed_paths(&[3.0, 2.0], &[true, false], 1e6).unwrap(), vec![
            3.0, 1000002.0
        ]);
        assert_eq!(penalize_failed_paths(&[3.0, 2.0], &[true, true], 1e6).unwrap(), vec![3.0, 2.0]);
        assert!(penalize_failed_paths(&[3.0, 2.0], &[false, false], 1e6).is_err());
    }
}
