//! Polar and CRC-aided polar codes: construction, encoding and partitioned layouts.

mod construct;
pub mod crc;
pub mod io;
mod partition;

pub use construct::{
    channel_means, construct_info_set, construct_info_set_at_rate, reliability_order,
};
pub use crc::{crc_append, crc_check, default_generator, CrcSpec};
pub use partition::{encode_partitioned, PartitionedCode};

use crate::error::{invalid, Error, Result};

/// A polar code of length `N = 2^n`, fully defined by its information set.
///
/// Indices are in natural order and coincide with the decoder's leaf order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolarCode {
    n: u32,
    info: Vec<usize>,
    is_info: Vec<bool>,
}

impl PolarCode {
    /// Builds a code from its information set. The set must be strictly
    /// ascending, lie in `[0, N)` and contain `N - 1`.
    pub fn new(n_len: usize, info_set: Vec<usize>) -> Result<Self> {
        if n_len < 2 || !n_len.is_power_of_two() {
            return Err(Error::InvalidCode(format!(
                "block length {n_len} is not a power of two >= 2"
            )));
        }
        if info_set.is_empty() {
            return Err(Error::InvalidCode("empty information set".into()));
        }
        if info_set.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidCode(
                "information set is not strictly ascending".into(),
            ));
        }
        let last = *info_set.last().unwrap();
        if last >= n_len {
            return Err(Error::InvalidCode(format!(
                "information index {last} outside [0, {n_len})"
            )));
        }
        if last != n_len - 1 {
            return Err(Error::InvalidCode(format!(
                "index {} must be an information index",
                n_len - 1
            )));
        }
        let mut is_info = vec![false; n_len];
        for &i in &info_set {
            is_info[i] = true;
        }
        Ok(Self { n: n_len.trailing_zeros(), info: info_set, is_info })
    }

    /// Gaussian-approximation construction with `size` information positions.
    pub fn construct(n_len: usize, size: usize, design_snr_db: f64) -> Result<Self> {
        Self::new(n_len, construct_info_set(n_len, size, design_snr_db)?)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.is_info.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Information set, ascending.
    pub fn info_set(&self) -> &[usize] {
        &self.info
    }

    pub fn info_len(&self) -> usize {
        self.info.len()
    }

    pub fn frozen_set(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.is_info[i]).collect()
    }

    #[inline]
    pub fn is_info(&self, i: usize) -> bool {
        self.is_info[i]
    }

    pub fn info_mask(&self) -> &[bool] {
        &self.is_info
    }

    /// Places `bits` on the information positions and zeroes the rest.
    pub fn embed(&self, bits: &[u8]) -> Result<Vec<u8>> {
        if bits.len() != self.info.len() {
            return Err(invalid(format!(
                "expected {} information bits, got {}",
                self.info.len(),
                bits.len()
            )));
        }
        let mut u = vec![0u8; self.len()];
        for (&i, &b) in self.info.iter().zip(bits) {
            u[i] = b & 1;
        }
        Ok(u)
    }

    /// Reads the information positions of `u`.
    pub fn extract(&self, u: &[u8]) -> Vec<u8> {
        self.info.iter().map(|&i| u[i]).collect()
    }

    pub fn encode(&self, u: &[u8]) -> Result<Vec<u8>> {
        polar_encode(u, self)
    }
}

/// In-place `x = u * T_2^{(x)n}` over GF(2).
pub fn polar_transform_in_place(x: &mut [u8]) {
    let n_len = x.len();
    debug_assert!(n_len.is_power_of_two());
    let mut half = 1;
    while half < n_len {
        for block in x.chunks_exact_mut(2 * half) {
            let (a, b) = block.split_at_mut(half);
            for (l, r) in a.iter_mut().zip(b.iter()) {
                *l ^= *r;
            }
        }
        half *= 2;
    }
}

/// Polar encoding of a full-length input vector whose frozen positions are zero.
pub fn polar_encode(u: &[u8], code: &PolarCode) -> Result<Vec<u8>> {
    if u.len() != code.len() {
        return Err(invalid(format!(
            "input has {} bits, code length is {}",
            u.len(),
            code.len()
        )));
    }
    if let Some(i) = (0..u.len()).find(|&i| !code.is_info(i) && u[i] != 0) {
        return Err(invalid(format!("frozen position {i} carries a one")));
    }
    let mut x: Vec<u8> = u.iter().map(|b| b & 1).collect();
    polar_transform_in_place(&mut x);
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_encode(u: &[u8]) -> Vec<u8> {
        let n_len = u.len();
        // T_N[r][c] = 1 iff the bits of c are a subset of the bits of r.
        (0..n_len)
            .map(|c| {
                (0..n_len).filter(|&r| r & c == c).fold(0u8, |acc, r| acc ^ u[r])
            })
            .collect()
    }

    #[test]
    fn tiny_vectors() {
        let code = PolarCode::new(2, vec![0, 1]).unwrap();
        assert_eq!(polar_encode(&[0, 0], &code).unwrap(), vec![0, 0]);
        assert_eq!(polar_encode(&[0, 1], &code).unwrap(), vec![1, 1]);
        assert_eq!(polar_encode(&[1, 0], &code).unwrap(), vec![1, 0]);
    }

    #[test]
    fn matches_dense_product() {
        let code = PolarCode::new(8, (0..8).collect()).unwrap();
        for word in 0u32..256 {
            let u: Vec<u8> = (0..8).map(|k| ((word >> k) & 1) as u8).collect();
            assert_eq!(polar_encode(&u, &code).unwrap(), dense_encode(&u));
        }
    }

    #[test]
    fn rejects_bad_codes() {
        assert!(PolarCode::new(8, vec![1, 3, 6]).is_err());
        assert!(PolarCode::new(8, vec![3, 1, 7]).is_err());
        assert!(PolarCode::new(8, vec![3, 8]).is_err());
        assert!(PolarCode::new(12, vec![11]).is_err());
        let code = PolarCode::new(4, vec![3]).unwrap();
        assert!(polar_encode(&[1, 0, 0, 0], &code).is_err());
        assert!(polar_encode(&[0, 0, 1], &code).is_err());
        assert_eq!(code.frozen_set(), vec![0, 1, 2]);
    }
}
