use std::path::Path;

use gaitkin::config::{expand_args, parse_config};
use gaitkin::data::{load_experiment_data, write_synthetic_dataset, LabelChoice};
use gaitkin::io::*;
use gaitkin_core::geometry::{Joint, JointAngleFrame, Keypoint3D, KeypointFrame};
use gaitkin_core::pipeline::{build_cohort, prepare_data, CohortConfig, DataOptions, Population};
use gaitkin_core::synth::{ImuSample, SynthOptions};
use gaitkin_core::tcn::{encode_model, TcnConfig, TcnModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn awkward(r: &mut ChaCha8Rng) -> f64 {
    // Values whose decimal forms are long, to exercise shortest round trips.
    r.random_range(-1.0..1.0) * 10f64.powi(r.random_range(-8..4))
}

#[test]
fn keypoints_round_trip_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let frames: Vec<KeypointFrame> = (0..50)
        .map(|i| {
            let mut f = KeypointFrame::new(i as f64 / 200.0);
            for j in Joint::ALL {
                if r.random_bool(0.9) {
                    f.set(
                        j,
                        Keypoint3D::new(awkward(&mut r), awkward(&mut r), awkward(&mut r))
                            .with_confidence(r.random()),
                    );
                }
            }
            f
        })
        .collect();
    let path = dir.path().join("nested/k.jsonl");
    write_keypoints(&path, &frames).unwrap();
    assert_eq!(read_keypoints(&path).unwrap(), frames);
}

#[test]
fn keypoint_records_are_lenient_about_extras_and_strict_about_numbers() {
    let f = parse_keypoint_line(
        r#"{"time_s": 0.5, "joints": {"r_knee": [1, 2, 3], "nose": [0, 0, 0]}}"#,
    )
    .unwrap();
    assert_eq!(f.time_s, 0.5);
    assert_eq!(f.get(Joint::RKnee).unwrap().confidence, 1.0);
    assert!(f.get(Joint::LKnee).is_none());
    for bad in [
        r#"{"joints": {}}"#,
        r#"{"time_s": 0, "joints": {"r_knee": [1, 2]}}"#,
        r#"{"time_s": 0, "joints": {"r_knee": [1, 2, "x"]}}"#,
        r#"{"time_s": 0, "joints": {"r_knee": [1, 2, 3, 1.5]}}"#,
        "not json",
    ] {
        assert!(parse_keypoint_line(bad).is_err(), "{bad}");
    }
}

#[test]
fn malformed_keypoint_line_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.jsonl");
    std::fs::write(
        &path,
        "{\"time_s\": 0, \"joints\": {}}\n\n{\"time_s\": oops}\n",
    )
    .unwrap();
    match read_keypoints(&path) {
        Err(IoError::Format { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn imu_round_trip_bitwise_and_errors_carry_lines() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let samples: Vec<ImuSample> = (0..40)
        .map(|i| ImuSample {
            time_s: i as f64 * 0.02,
            channels: std::array::from_fn(|_| awkward(&mut r)),
        })
        .collect();
    let path = dir.path().join("a.imu.csv");
    write_imu(&path, &samples).unwrap();
    assert_eq!(read_imu(&path).unwrap(), samples);

    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[5] = lines[5].replacen(',', ",abc,", 1);
    std::fs::write(&path, lines.join("\n")).unwrap();
    match read_imu(&path) {
        Err(IoError::Format { line, .. }) => assert_eq!(line, 6),
        other => panic!("{other:?}"),
    }
    std::fs::write(&path, "t,x\n1,2\n").unwrap();
    assert!(matches!(
        read_imu(&path),
        Err(IoError::Format { line: 1, .. })
    ));

    let row = parse_imu_row(&lines[2]).unwrap();
    assert_eq!(row, samples[1]);
    assert!(parse_imu_row("1,2,3").is_err());
}

#[test]
fn angle_tables_round_trip_to_six_decimals() {
    let dir = tempfile::tempdir().unwrap();
    let frames: Vec<JointAngleFrame> = (0..30)
        .map(|i| {
            JointAngleFrame::from_array(
                i as f64 * 0.02,
                [i as f64 * 0.123_456_7, -3.3, 45.0, 1.0 / 3.0],
            )
        })
        .collect();
    let path = dir.path().join("a.csv");
    write_angles(&path, &frames).unwrap();
    let back = read_angles(&path).unwrap();
    assert_eq!(back.len(), frames.len());
    for (a, b) in frames.iter().zip(&back) {
        for (x, y) in a.to_array().iter().zip(b.to_array()) {
            assert!((x - y).abs() <= 6e-7);
        }
        assert!((a.time_s - b.time_s).abs() <= 5e-7);
    }
}

#[test]
fn model_files_round_trip_and_reject_damage() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let m = TcnModel::init(TcnConfig::small(18, 2, 4, 3), &mut r).unwrap();
    let path = dir.path().join("m.tcn");
    save_model(&path, &m).unwrap();
    let back = load_model(&path).unwrap();
    assert_eq!(encode_model(&back), encode_model(&m));
    let mut bytes = std::fs::read(&path).unwrap();
    let n = bytes.len();
    bytes[n / 2] ^= 1;
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(load_model(&path), Err(IoError::Model { .. })));
    assert!(matches!(
        load_model(&dir.path().join("missing")),
        Err(IoError::Io { .. })
    ));
}

fn small_cohort() -> CohortConfig {
    CohortConfig {
        subjects: 1,
        seed: 9,
        synth: SynthOptions {
            trial_duration_s: 10.0,
            ..SynthOptions::default()
        },
        ..CohortConfig::default()
    }
}

fn files_in(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn synthetic_dataset_on_disk_matches_memory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_cohort();
    let manifest = write_synthetic_dataset(dir.path(), &cfg).unwrap();
    // Two populations, one subject, four trials and one validation walk.
    assert_eq!(manifest.recordings.len(), 10);
    assert_eq!(files_in(dir.path()).len(), 31);
    assert_eq!(RecordingManifest::read(dir.path()).unwrap(), manifest);
    assert_eq!(manifest.select(Population::Sk, true).len(), 1);

    let again = tempfile::tempdir().unwrap();
    write_synthetic_dataset(again.path(), &cfg).unwrap();
    assert_eq!(files_in(dir.path()), files_in(again.path()));

    // Reading back gives the same windows and labels as building in memory.
    let opts = DataOptions {
        window_len: 64,
        ..DataOptions::default()
    };
    let disk = load_experiment_data(
        dir.path(),
        LabelChoice::Keypoints(Default::default()),
        &opts,
    )
    .unwrap();
    let memory = prepare_data(&build_cohort(&cfg).unwrap(), &opts).unwrap();
    for (a, b) in [(&disk.ab, &memory.ab), (&disk.sk, &memory.sk)] {
        assert_eq!(a.train.len(), b.train.len());
        assert_eq!(a.test.len(), b.test.len());
        assert_eq!(a.validation.len(), b.validation.len());
        assert_eq!(a.dropped, b.dropped);
        for i in (0..a.train.len()).step_by(97) {
            assert_eq!(a.train.window(i), b.train.window(i));
            let (x, y) = (a.train.items[i].target, b.train.items[i].target);
            for j in 0..4 {
                // Keypoints are stored exactly, so labels agree bitwise.
                assert_eq!(x[j], y[j], "item {i}");
            }
        }
        for i in (0..a.validation.len()).step_by(211) {
            assert_eq!(
                a.validation.tags(i).condition,
                b.validation.tags(i).condition
            );
            let (x, y) = (a.validation.items[i].target, b.validation.items[i].target);
            assert!(x.iter().zip(&y).all(|(p, q)| (p - q).abs() <= 5e-7));
        }
    }
}

#[test]
fn config_entries_go_before_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(
        &path,
        "# comment\nseed = 5\n--subjects=2\nstrict = true\nquiet = false\n\n",
    )
    .unwrap();
    let args: Vec<std::ffi::OsString> = [
        "gaitkin",
        "synth",
        "--config",
        path.to_str().unwrap(),
        "--seed",
        "7",
    ]
    .iter()
    .map(Into::into)
    .collect();
    let out: Vec<String> = expand_args(args)
        .unwrap()
        .into_iter()
        .map(|a| a.into_string().unwrap())
        .collect();
    assert_eq!(
        out,
        [
            "gaitkin",
            "synth",
            "--seed=5",
            "--subjects=2",
            "--strict",
            "--config",
            path.to_str().unwrap(),
            "--seed",
            "7"
        ]
    );
    assert!(parse_config(&path, "just words\n").is_err());
    assert!(parse_config(&path, "two words = 1\n").is_err());
}
