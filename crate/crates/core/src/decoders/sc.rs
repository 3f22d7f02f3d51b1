use crate::channel::ChannelRealization;
use crate::code::PolarCode;

/// Successive-cancellation decoding with min-sum check nodes.
///
/// Returns the estimated input vector `u`; frozen positions are always zero.
pub fn sc_decode(ch: &ChannelRealization, code: &PolarCode) -> Vec<u8> {
    assert_eq!(ch.llrs.len(), code.len(), "LLR vector length mismatch");
    run_sc(&ch.llrs, |i, lam| if code.is_info(i) { (lam < 0.0) as u8 } else { 0 })
}

/// Leaf LLRs seen along the fixed trajectory `u`, with the same min-sum
/// arithmetic as the list decoder.
pub(crate) fn trajectory_leaf_llrs(llrs: &[f64], u: &[u8]) -> Vec<f32> {
    assert_eq!(llrs.len(), u.len(), "LLR vector length mismatch");
    let mut leaves = vec![0.0; u.len()];
    run_sc(llrs, |i, lam| {
        leaves[i] = lam;
        u[i]
    });
    leaves
}

#[allow(clippy::needless_range_loop)]
fn run_sc(llrs: &[f64], mut decide: impl FnMut(usize, f32) -> u8) -> Vec<u8> {
    let n_len = llrs.len();
    let n = n_len.trailing_zeros() as usize;
    // llr[s] holds the 2^s values of the stage-s node on the current branch;
    // llr[n] is the channel.
    let mut llr: Vec<Vec<f32>> = (0..=n).map(|s| vec![0.0; 1 << s]).collect();
    for (d, &l) in llr[n].iter_mut().zip(llrs) {
        *d = l as f32;
    }
    // bits[s] holds the re-encoded left sibling at stage s.
    let mut bits: Vec<Vec<u8>> = (0..=n).map(|s| vec![0; 1 << s]).collect();
    let mut u = vec![0u8; n_len];
    let mut tmp = vec![0u8; n_len];
    for i in 0..n_len {
        let top = if i == 0 { n } else { i.trailing_zeros() as usize + 1 };
        for s in (0..top).rev() {
            let half = 1 << s;
            let (lo, hi) = llr.split_at_mut(s + 1);
            let (a, b) = hi[0].split_at(half);
            let dst = &mut lo[s];
            if i > 0 && s + 1 == top {
                for k in 0..half {
                    dst[k] = if bits[s][k] == 0 { b[k] + a[k] } else { b[k] - a[k] };
                }
            } else {
                for k in 0..half {
                    let m = a[k].abs().min(b[k].abs());
                    dst[k] = if (a[k] < 0.0) != (b[k] < 0.0) { -m } else { m };
                }
            }
        }
        let bit = decide(i, llr[0][0]);
        u[i] = bit;
        // Re-encode upward while the finished node is a right child.
        let mut s = 0;
        tmp[0] = bit;
        while s < n && (i >> s) & 1 == 1 {
            let half = 1 << s;
            for k in 0..half {
                tmp[half + k] = tmp[k];
                tmp[k] ^= bits[s][k];
            }
            s += 1;
        }
        if s < n {
            bits[s][..1 << s].copy_from_slice(&tmp[..1 << s]);
        }
    }
    u
}
