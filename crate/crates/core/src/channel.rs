//! BPSK over AWGN with channel LLR output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};

/// One noisy observation of a codeword.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub llrs: Vec<f64>,
    pub snr_db: f64,
    pub noise_var: f64,
}

/// Noise variance per real dimension for unit-energy BPSK at Eb/N0 `snr_db`.
pub fn noise_variance(snr_db: f64, rate: f64) -> f64 {
    1.0 / (2.0 * rate * 10f64.powf(snr_db / 10.0))
}

/// Maps bit `b` to `1 - 2b`, adds white Gaussian noise and returns `2y / sigma^2`.
pub fn transmit<R: Rng + ?Sized>(
    x: &[u8],
    snr_db: f64,
    rate: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(invalid(format!("rate {rate} not in (0, 1]")));
    }
    if !snr_db.is_finite() {
        return Err(invalid("SNR must be finite"));
    }
    let noise_var = noise_variance(snr_db, rate);
    let sigma = noise_var.sqrt();
    let scale = 2.0 / noise_var;
    let llrs = x
        .iter()
        .map(|&b| {
            let s = 1.0 - 2.0 * (b & 1) as f64;
            let n: f64 = rng.sample(StandardNormal);
            scale * (s + sigma * n)
        })
        .collect();
    Ok(ChannelRealization { llrs, snr_db, noise_var })
}

/// Random source for frame `frame` of operating point `point`.
///
/// Every (point, frame) pair reads its own disjoint window of one ChaCha8
/// key, so results do not depend on how frames are spread over threads.
pub fn frame_rng(seed: u64, point: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(point);
    rng.set_word_pos(u128::from(frame) << 24);
    rng
}

/// Noise-free observation; the LLR magnitudes correspond to `snr_db`.
pub fn noiseless(x: &[u8], snr_db: f64, rate: f64) -> ChannelRealization {
    let noise_var = noise_variance(snr_db, rate);
    let scale = 2.0 / noise_var;
    let llrs = x.iter().map(|&b| scale * (1.0 - 2.0 * (b & 1) as f64)).collect();
    ChannelRealization { llrs, snr_db, noise_var }
}

impl ChannelRealization {
    /// Wraps externally computed LLRs.
    pub fn from_llrs(llrs: Vec<f64>) -> Self {
        Self { llrs, snr_db: f64::NAN, noise_var: f64::NAN }
    }

    pub fn len(&self) -> usize {
        self.llrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.llrs.is_empty()
    }

    /// Received channel symbols `y = llr * sigma^2 / 2`.
    pub fn symbols(&self) -> Vec<f64> {
        self.llrs.iter().map(|l| l * self.noise_var / 2.0).collect()
    }
}
