//! Bit-level CRC over GF(2) with a table-driven inner loop.
//!
//! Bits are MSB-first polynomial coefficients, one bit per `u8`. The
//! register starts at zero and no final XOR is applied, so the all-zero
//! message has an all-zero check field.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};

/// Widest CRC the 64-bit register supports (a byte of headroom is needed).
pub const MAX_WIDTH: u32 = 56;

/// A CRC code: width and generator polynomial without its leading `x^width` term.
#[derive(Clone)]
pub struct CrcSpec {
    width: u32,
    generator: u64,
    table: Arc<[u64; 256]>,
}

impl fmt::Debug for CrcSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CrcSpec")
            .field("width", &self.width)
            .field("generator", &format_args!("{:#x}", self.generator))
            .finish()
    }
}

impl PartialEq for CrcSpec {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width && self.generator == other.generator
    }
}

impl Eq for CrcSpec {}

/// Generator used when a configuration names only a CRC width.
pub fn default_generator(width: u32) -> Option<u64> {
    Some(match width {
        1 => 0x1,
        3 => 0x3,
        4 => 0x3,
        5 => 0x15,
        6 => 0x21,
        7 => 0x09,
        8 => 0x07,
        10 => 0x233,
        11 => 0x621,
        12 => 0x80f,
        16 => 0x1021,
        24 => 0x864cfb,
        32 => 0x04c1_1db7,
        _ => return None,
    })
}

impl CrcSpec {
    pub fn new(width: u32, generator: u64) -> Result<Self> {
        if width == 0 || width > MAX_WIDTH {
            return Err(invalid(format!("CRC width {width} not in 1..={MAX_WIDTH}")));
        }
        if generator >> width != 0 {
            return Err(invalid(format!(
                "generator {generator:#x} has degree >= width {width}"
            )));
        }
        if generator & 1 == 0 {
            return Err(invalid(format!(
                "generator {generator:#x} lacks the constant term"
            )));
        }
        let aligned = generator << (64 - width);
        let mut table = [0u64; 256];
        for (byte, slot) in table.iter_mut().enumerate() {
            let mut reg = (byte as u64) << 56;
            for _ in 0..8 {
                reg = if reg >> 63 == 1 { (reg << 1) ^ aligned } else { reg << 1 };
            }
            *slot = reg;
        }
        Ok(Self { width, generator, table: Arc::new(table) })
    }

    /// CRC of the given width with its entry from [`default_generator`].
    pub fn with_width(width: u32) -> Result<Self> {
        let g = default_generator(width)
            .ok_or_else(|| invalid(format!("no default generator for CRC width {width}")))?;
        Self::new(width, g)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn generator(&self) -> u64 {
        self.generator
    }

    fn aligned(&self) -> u64 {
        self.generator << (64 - self.width)
    }

    #[inline]
    fn feed_bit(&self, reg: u64, bit: u8) -> u64 {
        let top = (reg >> 63) as u8 ^ (bit & 1);
        if top == 1 {
            (reg << 1) ^ self.aligned()
        } else {
            reg << 1
        }
    }

    #[inline]
    fn feed_byte(&self, reg: u64, byte: u8) -> u64 {
        (reg << 8) ^ self.table[((reg >> 56) as u8 ^ byte) as usize]
    }

    /// `bits(x) * x^width mod g(x)` for one-bit-per-byte input.
    pub fn remainder(&self, bits: &[u8]) -> u64 {
        let mut reg = 0u64;
        let mut chunks = bits.chunks_exact(8);
        for c in &mut chunks {
            let byte = c.iter().fold(0u8, |acc, &b| (acc << 1) | (b & 1));
            reg = self.feed_byte(reg, byte);
        }
        for &b in chunks.remainder() {
            reg = self.feed_bit(reg, b);
        }
        reg >> (64 - self.width)
    }

    /// Remainder of the first `n_bits` bits of a packed MSB-first byte string.
    pub fn remainder_packed(&self, bytes: &[u8], n_bits: usize) -> u64 {
        debug_assert!(n_bits <= bytes.len() * 8);
        let full = n_bits / 8;
        let mut reg = 0u64;
        for &b in &bytes[..full] {
            reg = self.feed_byte(reg, b);
        }
        let rest = n_bits % 8;
        if rest > 0 {
            let b = bytes[full];
            for k in 0..rest {
                reg = self.feed_bit(reg, (b >> (7 - k)) & 1);
            }
        }
        reg >> (64 - self.width)
    }

    /// Check bits for `msg`, MSB first.
    pub fn check_bits(&self, msg: &[u8]) -> Vec<u8> {
        let r = self.remainder(msg);
        (0..self.width).rev().map(|k| ((r >> k) & 1) as u8).collect()
    }

    /// `msg` followed by its check bits.
    pub fn append(&self, msg: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(msg.len() + self.width as usize);
        out.extend_from_slice(msg);
        out.extend(self.check_bits(msg));
        out
    }

    /// Whether `bits` (message followed by check field) is a codeword.
    pub fn check(&self, bits: &[u8]) -> Result<bool> {
        if bits.len() <= self.width as usize {
            return Err(invalid(format!(
                "{} bits cannot hold a message and a {}-bit check field",
                bits.len(),
                self.width
            )));
        }
        Ok(self.remainder(bits) == 0)
    }

    /// [`CrcSpec::check`] without the length validation; used on decoder hot paths.
    #[inline]
    pub(crate) fn passes(&self, bits: &[u8]) -> bool {
        self.remainder(bits) == 0
    }
}

/// Appends the CRC of `msg` under `spec`.
pub fn crc_append(msg: &[u8], spec: &CrcSpec) -> Vec<u8> {
    spec.append(msg)
}

/// True iff `bits` has a zero remainder under `spec`.
pub fn crc_check(bits: &[u8], spec: &CrcSpec) -> Result<bool> {
    spec.check(bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
        bytes.iter().flat_map(|&b| (0..8).rev().map(move |k| (b >> k) & 1)).collect()
    }

    /// Schoolbook long division over GF(2), independent of the table path.
    fn long_division(msg: &[u8], width: u32, generator: u64) -> u64 {
        let full = (1u128 << width) | generator as u128;
        let mut work: Vec<u8> = msg.to_vec();
        work.extend(std::iter::repeat_n(0, width as usize));
        for i in 0..msg.len() {
            if work[i] == 1 {
                for k in 0..=width as usize {
                    work[i + k] ^= ((full >> (width as usize - k)) & 1) as u8;
                }
            }
        }
        work[msg.len()..].iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    #[test]
    fn crc8_check_value() {
        let spec = CrcSpec::with_width(8).unwrap();
        let msg = bytes_to_bits(b"123456789");
        assert_eq!(long_division(&msg, 8, 0x07), 0xF4);
        assert_eq!(spec.remainder(&msg), 0xF4);
        assert_eq!(spec.remainder_packed(b"123456789", 72), 0xF4);
        let cw = spec.append(&msg);
        assert_eq!(&cw[72..], &[1, 1, 1, 1, 0, 1, 0, 0]);
        assert!(spec.check(&cw).unwrap());
    }

    #[test]
    fn table_matches_long_division() {
        let msg: Vec<u8> = (0..157u32).map(|i| ((i * 7 + i / 3) % 2) as u8).collect();
        for w in [1u32, 3, 7, 8, 10, 11, 16, 24, 32] {
            let spec = CrcSpec::with_width(w).unwrap();
            for len in [1usize, 7, 8, 9, 64, 157] {
                assert_eq!(
                    spec.remainder(&msg[..len]),
                    long_division(&msg[..len], w, spec.generator()),
                    "width {w} len {len}"
                );
            }
        }
    }

    #[test]
    fn zero_message_zero_crc() {
        for w in [3u32, 8, 32] {
            let spec = CrcSpec::with_width(w).unwrap();
            let out = crc_append(&[0u8; 40], &spec);
            assert!(out.iter().all(|&b| b == 0));
        }
    }

    #[test]
    fn single_flip_detected() {
        let spec = CrcSpec::with_width(8).unwrap();
        let msg: Vec<u8> = (0..50).map(|i| (i % 3 == 0) as u8).collect();
        let cw = spec.append(&msg);
        for i in 0..cw.len() {
            let mut bad = cw.clone();
            bad[i] ^= 1;
            assert!(!crc_check(&bad, &spec).unwrap(), "flip at {i} undetected");
        }
    }

    #[test]
    fn validation() {
        assert!(CrcSpec::new(0, 1).is_err());
        assert!(CrcSpec::new(8, 0x107).is_err());
        assert!(CrcSpec::new(8, 0x06).is_err());
        assert!(CrcSpec::with_width(9).is_err());
        let spec = CrcSpec::with_width(8).unwrap();
        assert!(spec.check(&[0u8; 8]).is_err());
        assert!(spec.check(&[0u8; 9]).unwrap());
    }
}
