use polarflip::analysis::DEFAULT_PHI;
use polarflip::code::{CrcSpec, PartitionedCode, PolarCode};
use polarflip::decoders::DecoderConfig;
use polarflip::sim::{
    read_metadata, run_experiment, write_metadata, write_results_csv, Algorithm, ExperimentConfig,
    RateMode, RunMetadata, Simulation, StopRule,
};

fn small_partitioned() -> PartitionedCode {
    let code = PolarCode::construct(256, 144, 2.0).unwrap();
    let mu = polarflip::partition_design::design_partitions_div_k(code.info_set(), 2).unwrap();
    PartitionedCode::with_widths(code, mu, &[8, 8]).unwrap()
}

fn sim(pcode: PartitionedCode, alg: Algorithm, stop: StopRule, seed: u64) -> Simulation {
    Simulation::new(pcode, alg, DecoderConfig::default(), stop, seed, DEFAULT_PHI, RateMode::Message)
        .unwrap()
}

#[test]
fn noiseless_frames_decode_in_one_trial() {
    let stop = StopRule { max_frames: 512, min_errors: 10 };
    let mut s = sim(small_partitioned(), Algorithm::Psclf, stop, 5);
    s.noiseless = true;
    let p = s.run_point(0, 3.0).unwrap();
    assert_eq!(p.counters.frames, 512);
    assert_eq!(p.fer, 0.0);
    assert_eq!(p.avg_trials, vec![1.0, 1.0]);
    assert_eq!(p.reach, vec![1.0, 1.0]);
    assert_eq!(p.early_termination_rate, 0.0);
}

#[test]
fn same_seed_same_counters_regardless_of_threads() {
    let stop = StopRule { max_frames: 1024, min_errors: 50 };
    let s = sim(small_partitioned(), Algorithm::Psclf, stop, 9);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let two = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
    let a = one.install(|| s.run(&[1.0, 2.0]).unwrap());
    let b = two.install(|| s.run(&[1.0, 2.0]).unwrap());
    assert_eq!(a, b);
    let c = sim(small_partitioned(), Algorithm::Psclf, stop, 10).run(&[1.0, 2.0]).unwrap();
    assert_ne!(a.points[0].counters, c.points[0].counters);
}

#[test]
fn measured_cycles_match_the_average_model() {
    let stop = StopRule { max_frames: 2048, min_errors: 200 };
    let s = sim(small_partitioned(), Algorithm::Psclf, stop, 3);
    for p in s.run(&[1.0, 1.5, 2.5]).unwrap().points {
        let rel = (p.avg_cycles - p.avg_cycles_model).abs() / p.avg_cycles;
        assert!(rel < 1e-9, "{} vs {}", p.avg_cycles, p.avg_cycles_model);
    }
}

#[test]
fn stop_rule_bounds_the_frame_count() {
    let stop = StopRule { max_frames: 100_000, min_errors: 30 };
    let s = sim(small_partitioned(), Algorithm::Psclf, stop, 4);
    let p = s.run_point(0, 0.0).unwrap();
    assert!(p.counters.frame_errors >= 30);
    // the rule is checked between batches
    assert!(p.counters.frames <= polarflip::sim::BATCH * (1 + 30));
}

#[test]
fn fer_drops_with_snr_and_flipping_helps() {
    let code = PolarCode::construct(256, 144, 2.0).unwrap();
    let ca = PartitionedCode::ca_polar(code, CrcSpec::with_width(16).unwrap()).unwrap();
    let stop = StopRule { max_frames: 4096, min_errors: 4096 };
    let scl = sim(ca.clone(), Algorithm::CaScl, stop, 2).run(&[1.0, 2.5]).unwrap();
    let sclf = sim(ca, Algorithm::Sclf, stop, 2).run(&[1.0, 2.5]).unwrap();
    assert!(scl.points[0].fer > scl.points[1].fer);
    // paired noise: flipping only ever adds chances to succeed
    for (a, b) in scl.points.iter().zip(&sclf.points) {
        assert!(b.counters.frame_errors <= a.counters.frame_errors);
    }
}

#[test]
fn config_round_trip_and_metadata() {
    let text = r#"
snr_db = [2.0]
seed = 11
[code]
n = 128
k = 48
[partition]
strategy = "div-k"
crc = [8, 8]
[decoder]
algorithm = "psclf"
t_max = 4
[stop]
max_frames = 300
min_errors = 300
"#;
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    let res = run_experiment(&cfg).unwrap();
    assert_eq!(res.points[0].counters.frames, 300);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let mut buf = Vec::new();
    write_results_csv(&res, &mut buf).unwrap();
    std::fs::write(&out, &buf).unwrap();
    let header = String::from_utf8(buf).unwrap().lines().next().unwrap().to_string();
    assert!(header.starts_with("snr_db,frames,frame_errors,fer"));
    let meta = RunMetadata {
        version: "test".into(),
        seed: cfg.seed,
        threads: 1,
        code_hash: res.code_hash.clone(),
        config: cfg.clone(),
    };
    write_metadata(&out, &meta).unwrap();
    let back = read_metadata(&polarflip::sim::metadata_path(&out)).unwrap();
    assert_eq!(back.config, cfg);
    assert_eq!(back.code_hash, res.code_hash);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let text = "snr_db = [1.0]\n[code]\nn = 64\nk = 20\nbogus = 1\n[partition]\ncrc = [4]\nstrategy = \"explicit\"\n";
    assert!(ExperimentConfig::from_toml(text).is_err());
}
