//! Gaussian-approximation code construction.
//!
//! Each synthetic channel is tracked by the mean of its (consistent Gaussian)
//! LLR. A check-node combination maps a mean `m` to
//! `phi^-1(1 - (1 - phi(m))^2)`, a variable-node combination to `2m`. The
//! `phi` function uses the two-piece approximation of Chung et al., evaluated
//! in the log domain so that very reliable channels do not underflow.

use crate::error::{invalid, Result};

const A: f64 = -0.4527;
const B: f64 = 0.86;
const C: f64 = 0.0218;
const SPLIT: f64 = 10.0;

/// `ln phi(x)` for `x > 0`.
pub(crate) fn ln_phi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < SPLIT {
        A * x.powf(B) + C
    } else {
        0.5 * (std::f64::consts::PI / x).ln() - x / 4.0 + (1.0 - 10.0 / (7.0 * x)).ln()
    }
}

/// Inverse of [`ln_phi`]: the mean `x` whose `ln phi(x)` equals `ln_y`.
pub(crate) fn ln_phi_inv(ln_y: f64) -> f64 {
    if ln_y >= 0.0 {
        return 0.0;
    }
    if ln_y > ln_phi(SPLIT - f64::EPSILON * SPLIT) {
        return ((ln_y - C) / A).powf(1.0 / B);
    }
    // Large-mean branch is monotone decreasing; bisect on it.
    let mut lo = SPLIT;
    let mut hi = (-4.0 * ln_y).max(SPLIT) + 64.0;
    for _ in 0..128 {
        let mid = 0.5 * (lo + hi);
        if ln_phi(mid) > ln_y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_node_mean(m: f64) -> f64 {
    // 1 - (1 - phi)^2 = phi * (2 - phi)
    let lp = ln_phi(m);
    let ln_y = lp + (2.0 - lp.exp()).ln();
    ln_phi_inv(ln_y)
}

/// LLR means of all `n_len` synthetic channels, in natural index order.
///
/// `design_snr_db` is an Eb/N0 value; the channel LLR mean is `4 * rate * Eb/N0`.
pub fn channel_means(n_len: usize, design_snr_db: f64, rate: f64) -> Vec<f64> {
    let root = 4.0 * rate * 10f64.powf(design_snr_db / 10.0);
    let mut level = vec![root];
    while level.len() < n_len {
        let mut next = Vec::with_capacity(level.len() * 2);
        for &m in &level {
            next.push(check_node_mean(m));
            next.push(2.0 * m);
        }
        level = next;
    }
    level
}

/// Indices of all synthetic channels from most to least reliable.
pub fn reliability_order(n_len: usize, design_snr_db: f64, rate: f64) -> Vec<usize> {
    let means = channel_means(n_len, design_snr_db, rate);
    let mut order: Vec<usize> = (0..n_len).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
    order
}

/// Selects the `size` most reliable indices of a length-`n_len` code and
/// returns them in ascending order.
///
/// The design SNR is read as Eb/N0 for a code of rate `size / n_len`.
pub fn construct_info_set(n_len: usize, size: usize, design_snr_db: f64) -> Result<Vec<usize>> {
    construct_info_set_at_rate(n_len, size, design_snr_db, size as f64 / n_len as f64)
}

/// Same as [`construct_info_set`] with an explicit rate for the Eb/N0
/// conversion. For a fixed rate the returned sets are nested in `size`.
pub fn construct_info_set_at_rate(
    n_len: usize,
    size: usize,
    design_snr_db: f64,
    rate: f64,
) -> Result<Vec<usize>> {
    if n_len < 2 || !n_len.is_power_of_two() {
        return Err(invalid(format!("block length {n_len} is not a power of two >= 2")));
    }
    if size == 0 || size > n_len {
        return Err(invalid(format!("information set size {size} not in 1..={n_len}")));
    }
    if !design_snr_db.is_finite() {
        return Err(invalid("design SNR must be finite"));
    }
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(invalid(format!("rate {rate} not in (0, 1]")));
    }
    let mut info: Vec<usize> = reliability_order(n_len, design_snr_db, rate)[..size].to_vec();
    info.sort_unstable();
    Ok(info)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_inverse_round_trips() {
        for &x in &[0.1, 0.5, 3.0, 9.5, 12.0, 100.0, 5000.0] {
            let back = ln_phi_inv(ln_phi(x));
            assert!((back - x).abs() / x < 1e-9, "{x} -> {back}");
        }
    }

    #[test]
    fn trivial_sets() {
        assert_eq!(construct_info_set(2, 2, 0.0).unwrap(), vec![0, 1]);
        assert_eq!(construct_info_set(4, 1, 0.0).unwrap(), vec![3]);
        assert!(construct_info_set(8, 9, 1.0).is_err());
        assert!(construct_info_set(6, 2, 1.0).is_err());
    }

    #[test]
    fn nested_sets() {
        let order = reliability_order(256, 1.0, 0.5);
        let mut seen = order.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..256).collect::<Vec<_>>());
        for size in [1, 10, 64, 128, 200, 255] {
            let a = construct_info_set_at_rate(256, size, 1.0, 0.5).unwrap();
            let b = construct_info_set_at_rate(256, size + 1, 1.0, 0.5).unwrap();
            assert!(a.iter().all(|i| b.binary_search(i).is_ok()));
        }
    }
}
