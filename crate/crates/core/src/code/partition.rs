use crate::code::{polar_encode, CrcSpec, PolarCode};
use crate::error::{invalid, Error, Result};

/// A polar code whose information set is cut into `P` consecutive
/// partitions, each closed by its own CRC.
///
/// Partition `p` covers leaves `(mu[p-1], mu[p]]` (the first one starts at 0).
/// Its `s_p` information positions carry `K_p` message bits followed by
/// `C_p` check bits.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedCode {
    code: PolarCode,
    mu: Vec<usize>,
    crcs: Vec<CrcSpec>,
    sizes: Vec<usize>,
    cumulative: Vec<usize>,
}

impl PartitionedCode {
    pub fn new(code: PolarCode, mu: Vec<usize>, crcs: Vec<CrcSpec>) -> Result<Self> {
        let n_len = code.len();
        if mu.is_empty() {
            return Err(Error::InfeasiblePartition("no partitions given".into()));
        }
        if mu.len() != crcs.len() {
            return Err(Error::InfeasiblePartition(format!(
                "{} partition boundaries but {} CRC widths",
                mu.len(),
                crcs.len()
            )));
        }
        if mu.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InfeasiblePartition(format!(
                "boundaries {mu:?} are not strictly increasing"
            )));
        }
        if *mu.last().unwrap() != n_len - 1 {
            return Err(Error::InfeasiblePartition(format!(
                "last boundary must be {}, got {}",
                n_len - 1,
                mu.last().unwrap()
            )));
        }
        if let Some(&m) = mu.iter().find(|&&m| m >= n_len || !code.is_info(m)) {
            return Err(Error::InfeasiblePartition(format!(
                "boundary {m} is not an information index"
            )));
        }
        let info = code.info_set();
        let mut cumulative = Vec::with_capacity(mu.len());
        for &m in &mu {
            cumulative.push(info.partition_point(|&i| i <= m));
        }
        let mut sizes = Vec::with_capacity(mu.len());
        let mut prev = 0;
        for &s in &cumulative {
            sizes.push(s - prev);
            prev = s;
        }
        for (p, (&s, c)) in sizes.iter().zip(&crcs).enumerate() {
            if s < c.width() as usize + 1 {
                return Err(Error::InfeasiblePartition(format!(
                    "partition {} has {s} information positions, fewer than its {}-bit CRC plus one message bit",
                    p + 1,
                    c.width()
                )));
            }
        }
        Ok(Self { code, mu, crcs, sizes, cumulative })
    }

    /// Single-partition CA-polar code.
    pub fn ca_polar(code: PolarCode, crc: CrcSpec) -> Result<Self> {
        let last = code.len() - 1;
        Self::new(code, vec![last], vec![crc])
    }

    /// Builds partitions from CRC widths using the default generators.
    pub fn with_widths(code: PolarCode, mu: Vec<usize>, widths: &[u32]) -> Result<Self> {
        let crcs = widths.iter().map(|&w| CrcSpec::with_width(w)).collect::<Result<Vec<_>>>()?;
        Self::new(code, mu, crcs)
    }

    pub fn code(&self) -> &PolarCode {
        &self.code
    }

    pub fn mu(&self) -> &[usize] {
        &self.mu
    }

    pub fn crcs(&self) -> &[CrcSpec] {
        &self.crcs
    }

    pub fn num_partitions(&self) -> usize {
        self.mu.len()
    }

    /// Information positions per partition (`s_p`).
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Cumulative information positions up to each boundary (`S_p`).
    pub fn cumulative(&self) -> &[usize] {
        &self.cumulative
    }

    pub fn crc_widths(&self) -> Vec<u32> {
        self.crcs.iter().map(|c| c.width()).collect()
    }

    /// Message bits per partition (`K_p = s_p - C_p`).
    pub fn message_sizes(&self) -> Vec<usize> {
        self.sizes.iter().zip(&self.crcs).map(|(&s, c)| s - c.width() as usize).collect()
    }

    /// Total message length `K`.
    pub fn message_len(&self) -> usize {
        self.message_sizes().iter().sum()
    }

    /// Total CRC length `C`.
    pub fn crc_len(&self) -> usize {
        self.crcs.iter().map(|c| c.width() as usize).sum()
    }

    /// Range of rows of the information set belonging to partition `p` (0-based).
    pub fn info_rows(&self, p: usize) -> std::ops::Range<usize> {
        let start = if p == 0 { 0 } else { self.cumulative[p - 1] };
        start..self.cumulative[p]
    }

    /// Leaf range `[first, last]` of partition `p` (0-based).
    pub fn leaf_range(&self, p: usize) -> (usize, usize) {
        let first = if p == 0 { 0 } else { self.mu[p - 1] + 1 };
        (first, self.mu[p])
    }

    /// Maps a message onto the `K + C` information bits in index order.
    pub fn info_bits(&self, message: &[u8]) -> Result<Vec<u8>> {
        let k = self.message_len();
        if message.len() != k {
            return Err(invalid(format!("message has {} bits, expected {k}", message.len())));
        }
        let mut out = Vec::with_capacity(self.code.info_len());
        let mut at = 0;
        for (kp, crc) in self.message_sizes().into_iter().zip(&self.crcs) {
            let block = &message[at..at + kp];
            out.extend(block.iter().map(|b| b & 1));
            out.extend(crc.check_bits(block));
            at += kp;
        }
        Ok(out)
    }

    /// Recovers the message from the information bits (CRC fields dropped).
    pub fn message_from_info(&self, info_bits: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.message_len());
        for (p, kp) in self.message_sizes().into_iter().enumerate() {
            let start = self.info_rows(p).start;
            out.extend_from_slice(&info_bits[start..start + kp]);
        }
        out
    }

    /// Full-length input vector `u` for `message`.
    pub fn input_vector(&self, message: &[u8]) -> Result<Vec<u8>> {
        self.code.embed(&self.info_bits(message)?)
    }
}

/// Partition-wise CRC insertion followed by polar encoding.
pub fn encode_partitioned(message: &[u8], pcode: &PartitionedCode) -> Result<Vec<u8>> {
    polar_encode(&pcode.input_vector(message)?, pcode.code())
}
