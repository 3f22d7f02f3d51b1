use polarflip::channel::{noiseless, transmit, ChannelRealization};
use polarflip::code::{polar_encode, PartitionedCode, PolarCode};
use polarflip::decoders::{
    sc_decode, scl_decode, scl_decode_segment, Candidate, DecodeStatus, Decoder, DecoderConfig,
    Kernel, ListDecoder, RestartMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

use common::{n16_code, path_metric, random_frame, reference_list};

#[test]
fn survivors_match_reference_list() {
    let code = n16_code();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let (_, ch) = random_frame(&code, 0.0, &mut rng);
        for list_size in [1, 2, 4, 8] {
            let reference = reference_list(&code, &ch.llrs, list_size);
            let mut dec = ListDecoder::new(&code, list_size, Kernel::MinSum);
            dec.load(&ch.llrs, None);
            dec.run_until(15, &[], &mut Vec::new());
            assert_eq!(dec.num_paths(), reference.len());
            for (l, (u, pm)) in reference.iter().enumerate() {
                assert_eq!(&dec.input_vector(l), u, "L={list_size} path {l}");
                assert!((dec.pm(l) - pm).abs() < 1e-9, "L={list_size} path {l}");
            }
        }
    }
}

#[test]
fn unpruned_list_is_exhaustive() {
    let code = n16_code();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let llr32 = |ch: &ChannelRealization| ch.llrs.iter().map(|&l| l as f32).collect::<Vec<_>>();
    for _ in 0..20 {
        let (_, ch) = random_frame(&code, 1.0, &mut rng);
        let mut dec = ListDecoder::new(&code, 256, Kernel::MinSum);
        dec.load(&ch.llrs, None);
        dec.run_until(15, &[], &mut Vec::new());
        assert_eq!(dec.num_paths(), 256);
        let mut got: Vec<(Vec<u8>, f64)> =
            (0..256).map(|l| (dec.input_vector(l), dec.pm(l))).collect();
        let mut all: Vec<(Vec<u8>, f64)> = (0u32..256)
            .map(|w| {
                let bits: Vec<u8> = (0..8).map(|k| ((w >> (7 - k)) & 1) as u8).collect();
                let u = code.embed(&bits).unwrap();
                let pm = path_metric(&llr32(&ch), &u, 15);
                (u, pm)
            })
            .collect();
        got.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        assert_eq!(got, all);
    }
}

#[test]
fn sc_equals_list_of_one() {
    let code = PolarCode::construct(256, 128, 1.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..1000 {
        let (_, ch) = random_frame(&code, 1.0, &mut rng);
        assert_eq!(sc_decode(&ch, &code), scl_decode(&ch, &code, 1, Kernel::MinSum).unwrap());
    }
}

fn pcode_1024(widths: &[u32], mu: Vec<usize>) -> PartitionedCode {
    let code = PolarCode::construct(1024, 512 + widths.iter().sum::<u32>() as usize, 2.5).unwrap();
    PartitionedCode::with_widths(code, mu, widths).unwrap()
}

#[test]
fn noiseless_frames_take_one_trial() {
    let code = PolarCode::construct(1024, 544, 2.5).unwrap();
    let info = code.info_set().to_vec();
    let mu = vec![info[135], info[271], info[407], 1023];
    let pcode = PartitionedCode::with_widths(code, mu, &[8, 8, 8, 8]).unwrap();
    let msg: Vec<u8> = (0..512).map(|k| (k % 7 == 2) as u8).collect();
    let u = pcode.input_vector(&msg).unwrap();
    let x = polar_encode(&u, pcode.code()).unwrap();
    let ch = noiseless(&x, 2.0, 0.5);
    for restart in [RestartMode::CheckKeep, RestartMode::CheckRemove] {
        let config = DecoderConfig { list_size: 4, restart, ..DecoderConfig::default() };
        let mut dec = Decoder::new(pcode.clone(), config).unwrap();
        let out = dec.psclf(&ch, Some(&u));
        assert_eq!(out.status, DecodeStatus::Success);
        assert_eq!(out.trials_per_partition, vec![1, 1, 1, 1]);
        assert_eq!(out.collision_observed.len(), 4);
        assert_eq!(out.message.unwrap(), msg);
    }
}

#[test]
fn flip_on_noiseless_frame_inverts_decision() {
    let code = PolarCode::construct(128, 64, 2.0).unwrap();
    let bits: Vec<u8> = (0..64).map(|k| (k % 3 == 1) as u8).collect();
    let u = code.embed(&bits).unwrap();
    let x = polar_encode(&u, &code).unwrap();
    let ch = noiseless(&x, 2.0, 0.5);
    for list_size in [1, 4] {
        let mut dec = ListDecoder::new(&code, list_size, Kernel::MinSum);
        let skip = list_size.trailing_zeros() as usize;
        for &i in &code.info_set()[skip..] {
            dec.load(&ch.llrs, Some(&u));
            scl_decode_segment(&mut dec, None, 0, i, &[i], &mut Vec::new()).unwrap();
            for l in 0..dec.num_paths() {
                assert!(!dec.on_truth(l), "L={list_size} flip at {i}");
                if list_size == 1 {
                    assert_ne!(dec.trace(l, 0).last(), Some(&u[i]));
                }
            }
        }
    }
    let mut dec = ListDecoder::new(&code, 4, Kernel::MinSum);
    dec.load(&ch.llrs, None);
    let first = code.info_set()[0];
    assert!(scl_decode_segment(&mut dec, None, 0, 127, &[first], &mut Vec::new()).is_err());
    assert!(scl_decode_segment(&mut dec, None, 0, 127, &[0], &mut Vec::new()).is_err());
}

#[test]
fn sclf_single_trial_is_ca_scl_and_psclf_single_partition_is_sclf() {
    let pcode = pcode_1024(&[16], vec![1023]);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let one = DecoderConfig { list_size: 2, t_max: 1, ..DecoderConfig::default() };
    let many = DecoderConfig { list_size: 2, t_max: 20, omega: 2, ..DecoderConfig::default() };
    let mut d1 = Decoder::new(pcode.clone(), one).unwrap();
    let mut dm = Decoder::new(pcode.clone(), many).unwrap();
    let mut flips_used = 0;
    for _ in 0..300 {
        let msg: Vec<u8> = (0..512).map(|_| rng.random_range(0..2)).collect();
        let u = pcode.input_vector(&msg).unwrap();
        let x = polar_encode(&u, pcode.code()).unwrap();
        let ch = transmit(&x, 1.25, 0.5, &mut rng).unwrap();
        assert_eq!(d1.sclf(&ch, Some(&u)).unwrap(), d1.ca_scl(&ch, Some(&u)));
        let a = dm.sclf(&ch, Some(&u)).unwrap();
        let b = dm.psclf(&ch, Some(&u));
        assert_eq!(a, b);
        flips_used += (a.trials_per_partition[0] > 1) as usize;
    }
    assert!(flips_used > 10, "too few frames exercised flipping: {flips_used}");
}

#[test]
fn restart_from_snapshot_is_reproducible() {
    let code = PolarCode::construct(1024, 528, 2.5).unwrap();
    let mid = code.info_set()[300];
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let (_, ch) = random_frame(&code, 1.5, &mut rng);
    let mut dec = ListDecoder::new(&code, 4, Kernel::MinSum);
    dec.load(&ch.llrs, None);
    dec.run_until(mid - 1, &[], &mut Vec::new());
    dec.advance_to_info();
    let snap = dec.snapshot();
    assert_eq!(snap.candidates().len(), 8);
    let flips = [code.info_set()[320], code.info_set()[400]];
    let run = |dec: &mut ListDecoder| {
        let mut rec = Vec::new();
        scl_decode_segment(dec, Some(&snap), mid, 1023, &flips, &mut rec).unwrap();
        let paths: Vec<(Vec<u8>, f64)> =
            (0..dec.num_paths()).map(|l| (dec.input_vector(l), dec.pm(l))).collect();
        (paths, rec)
    };
    let a = run(&mut dec);
    let b = run(&mut dec);
    assert_eq!(a, b);
    // A fresh decoder driven to the same point agrees too.
    let mut fresh = ListDecoder::new(&code, 4, Kernel::MinSum);
    fresh.load(&ch.llrs, None);
    let mut rec = Vec::new();
    fresh.run_until(mid - 1, &[], &mut Vec::new());
    scl_decode_segment(&mut fresh, None, mid, 1023, &flips, &mut rec).unwrap();
    let c: Vec<(Vec<u8>, f64)> =
        (0..fresh.num_paths()).map(|l| (fresh.input_vector(l), fresh.pm(l))).collect();
    assert_eq!(a.0, c);
    assert_eq!(a.1, rec);
}

#[test]
fn check_remove_restricts_survivors_to_passing_paths() {
    let code = PolarCode::construct(256, 136, 1.0).unwrap();
    let info = code.info_set().to_vec();
    let mu1 = info[67];
    let pcode = PartitionedCode::with_widths(code.clone(), vec![mu1, 255], &[4, 4]).unwrap();
    let crc = pcode.crcs()[0].clone();
    let rows = pcode.info_rows(0);
    let next_sort = info[68];
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mut checked = 0;
    for _ in 0..4000 {
        let msg: Vec<u8> = (0..128).map(|_| rng.random_range(0..2)).collect();
        let u = pcode.input_vector(&msg).unwrap();
        let x = polar_encode(&u, &code).unwrap();
        let ch = transmit(&x, 0.0, 0.5, &mut rng).unwrap();
        let mut dec = ListDecoder::new(&code, 2, Kernel::MinSum);
        dec.load(&ch.llrs, None);
        dec.run_until(mu1, &[], &mut Vec::new());
        let flags: Vec<bool> =
            (0..2).map(|l| crc.check(&dec.trace(l, rows.start)).unwrap()).collect();
        if flags.iter().filter(|&&f| f).count() != 1 {
            continue;
        }
        let passing = dec.trace(flags.iter().position(|&f| f).unwrap(), 0);
        let pms = polarflip::decoders::penalize_failed_paths(dec.pms(), &flags, 1e6).unwrap();
        dec.pms_mut().copy_from_slice(&pms);
        dec.run_until(next_sort, &[], &mut Vec::new());
        for l in 0..dec.num_paths() {
            assert_eq!(&dec.trace(l, 0)[..rows.end], &passing[..]);
        }
        checked += 1;
    }
    assert!(checked >= 20, "only {checked} frames had a unique passing path");
}

#[test]
fn single_flip_repairs_first_error() {
    let pcode = pcode_1024(&[16], vec![1023]);
    let code = pcode.code().clone();
    let config = DecoderConfig { list_size: 2, t_max: 50, ..DecoderConfig::default() };
    let mut dec = Decoder::new(pcode.clone(), config).unwrap();
    let mut list = ListDecoder::new(&code, 2, Kernel::MinSum);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut found = 0;
    for _ in 0..3000 {
        let msg: Vec<u8> = (0..512).map(|_| rng.random_range(0..2)).collect();
        let u = pcode.input_vector(&msg).unwrap();
        let x = polar_encode(&u, &code).unwrap();
        let ch = transmit(&x, 1.5, 0.5, &mut rng).unwrap();
        if dec.ca_scl(&ch, Some(&u)).message.as_ref() == Some(&msg) {
            continue;
        }
        // Genie: the first error, and what the first trial would rank best.
        list.load(&ch.llrs, Some(&u));
        let mut rec = Vec::new();
        list.run_until(1023, &[], &mut rec);
        let Some(first) = list.first_error() else { continue };
        let best = rec
            .iter()
            .min_by(|a, b| a.flip_metric(1.0).total_cmp(&b.flip_metric(1.0)).then(a.index.cmp(&b.index)))
            .unwrap();
        if best.index != first {
            continue;
        }
        list.load(&ch.llrs, Some(&u));
        list.run_until(1023, &[first], &mut Vec::new());
        let repaired = (0..list.num_paths()).any(|l| list.on_truth(l));
        if !repaired {
            continue;
        }
        let sclf = dec.sclf(&ch, Some(&u)).unwrap();
        if sclf.trials_per_partition == vec![2] {
            found += 1;
            assert!(sclf.is_success());
        } else {
            // The true path survived, but a wrong path with a smaller metric
            // may still pass the CRC first; only a collision explains that.
            assert!(sclf.collision_observed[0] || !sclf.is_success() || sclf.trials_per_partition[0] == 2);
        }
    }
    assert!(found >= 3, "only {found} repairable frames");
}

#[test]
fn snapshot_holds_two_l_candidates() {
    let code = n16_code();
    let mut dec = ListDecoder::new(&code, 2, Kernel::MinSum);
    dec.load(&[1.0; 16], None);
    dec.run_until(9, &[], &mut Vec::new());
    dec.advance_to_info();
    let snap = dec.snapshot();
    assert_eq!(snap.index(), 10);
    let c: &[Candidate] = snap.candidates();
    assert_eq!(c.len(), 4);
    assert_eq!(snap.rows(), 3);
}
