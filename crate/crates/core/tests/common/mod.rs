//! Reference implementations shared by the integration tests.
#![allow(dead_code)]

use polarflip::channel::{transmit, ChannelRealization};
use polarflip::code::{polar_encode, PolarCode};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn f32_f(a: f32, b: f32) -> f32 {
    let m = a.abs().min(b.abs());
    if (a < 0.0) != (b < 0.0) {
        -m
    } else {
        m
    }
}

/// Leaf LLRs along the trajectory `u`, by plain recursion.
pub fn leaf_llrs(llr: &[f32], u: &[u8]) -> (Vec<f32>, Vec<u8>) {
    if llr.len() == 1 {
        return (vec![llr[0]], vec![u[0]]);
    }
    let h = llr.len() / 2;
    let f: Vec<f32> = (0..h).map(|k| f32_f(llr[k], llr[h + k])).collect();
    let (mut l1, x1) = leaf_llrs(&f, &u[..h]);
    let g: Vec<f32> = (0..h)
        .map(|k| if x1[k] == 0 { llr[h + k] + llr[k] } else { llr[h + k] - llr[k] })
        .collect();
    let (l2, x2) = leaf_llrs(&g, &u[h..]);
    let x = (0..h).map(|k| x1[k] ^ x2[k]).chain(x2.iter().copied()).collect();
    l1.extend(l2);
    (l1, x)
}

pub fn path_metric(llr: &[f32], u: &[u8], upto: usize) -> f64 {
    let (leaves, _) = leaf_llrs(llr, u);
    (0..=upto)
        .map(|i| {
            let lam = leaves[i];
            let hard = (lam < 0.0) as u8;
            if hard == u[i] {
                0.0
            } else {
                (lam as f64).abs()
            }
        })
        .sum()
}

/// Reference list decoder: keeps prefixes explicitly and recomputes every
/// metric from the channel.
pub fn reference_list(code: &PolarCode, llrs: &[f64], list_size: usize) -> Vec<(Vec<u8>, f64)> {
    let n_len = code.len();
    let llr32: Vec<f32> = llrs.iter().map(|&l| l as f32).collect();
    let mut paths: Vec<Vec<u8>> = vec![vec![0; n_len]];
    for i in 0..n_len {
        if !code.is_info(i) {
            continue;
        }
        let mut cands: Vec<(usize, u8, f64, Vec<u8>)> = Vec::new();
        for (p, u) in paths.iter().enumerate() {
            for bit in 0..2u8 {
                let mut v = u.clone();
                v[i] = bit;
                let pm = path_metric(&llr32, &v, i);
                cands.push((p, bit, pm, v));
            }
        }
        if cands.len() > list_size {
            cands.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
            cands.truncate(list_size);
            cands.sort_by_key(|c| (c.0, c.1));
        }
        paths = cands.into_iter().map(|c| c.3).collect();
    }
    paths
        .into_iter()
        .map(|u| {
            let pm = path_metric(&llr32, &u, n_len - 1);
            (u, pm)
        })
        .collect()
}

pub fn random_frame(code: &PolarCode, snr: f64, rng: &mut ChaCha8Rng) -> (Vec<u8>, ChannelRealization) {
    let bits: Vec<u8> = (0..code.info_len()).map(|_| rng.random_range(0..2)).collect();
    let u = code.embed(&bits).unwrap();
    let x = polar_encode(&u, code).unwrap();
    let rate = code.info_len() as f64 / code.len() as f64;
    (u, transmit(&x, snr, rate, rng).unwrap())
}

pub fn n16_code() -> PolarCode {
    PolarCode::new(16, vec![6, 7, 9, 10, 11, 13, 14, 15]).unwrap()
}

