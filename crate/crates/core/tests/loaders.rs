use std::path::{Path, PathBuf};

use ganser::data::{
    load_trials, preprocess_trials, synth_trials, write_trial_archive, DatasetKind, ElectrodeLayout,
    PreprocessOptions, SyntheticSpec,
};
use ganser::Error;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

// Fixture values (see tests/fixtures/make_fixtures.py): data[t, c, s] = 1000t + c + s/1000.
fn deap_value(t: usize, c: usize, s: usize) -> f64 {
    1000.0 * t as f64 + c as f64 + s as f64 * 0.001
}

#[test]
fn deap_uncompressed_file() {
    let trials = load_trials(DatasetKind::Deap, &fixtures().join("s01.mat")).unwrap();
    assert_eq!(trials.len(), 2);
    for (t, rec) in trials.iter().enumerate() {
        assert_eq!(rec.subject_id, "s01");
        assert_eq!(rec.signal.dim(), (32, 256));
        assert_eq!(rec.baseline.dim(), (32, 384));
        for (c, s) in [(0, 0), (31, 255), (7, 100)] {
            assert_eq!(rec.signal[[c, s]], deap_value(t, c, 384 + s) as f32);
            assert_eq!(rec.baseline[[c, s]], deap_value(t, c, s) as f32);
        }
    }
    assert_eq!(trials[0].ratings["valence"], 7.5);
    assert_eq!(trials[0].ratings["arousal"], 2.0);
    assert_eq!(trials[1].ratings["arousal"], 8.1);
}

#[test]
fn deap_directory_includes_compressed_single_precision() {
    let trials = load_trials(DatasetKind::Deap, &fixtures()).unwrap();
    assert_eq!(trials.len(), 4);
    let s02 = &trials[2];
    assert_eq!(s02.subject_id, "s02");
    assert_eq!(s02.signal[[5, 10]], -(deap_value(0, 5, 394) as f32));
    assert_eq!(s02.ratings["valence"], 3.0);
}

#[test]
fn dreamer_struct_and_cells() {
    let trials = load_trials(DatasetKind::Dreamer, &fixtures().join("DREAMER.mat")).unwrap();
    assert_eq!(trials.len(), 4);
    let value = |subj: usize, trial: usize, ch: usize, s: usize| (subj * 100 + trial * 10 + ch) as f64 + s as f64 * 0.01;
    for (i, rec) in trials.iter().enumerate() {
        let (subj, trial) = (i / 2, i % 2);
        assert_eq!(rec.signal.dim(), (14, 300));
        assert_eq!(rec.baseline.dim(), (14, 256));
        assert_eq!(rec.signal[[13, 299]], value(subj, trial, 13, 299) as f32);
        assert_eq!(rec.baseline[[2, 17]], value(subj, trial, 2, 17) as f32);
    }
    assert_eq!(trials[1].ratings["valence"], 2.0);
    assert_eq!(trials[1].ratings["arousal"], 5.0);

    // Variable trial length: 300 samples keep two whole windows.
    let samples = preprocess_trials(&trials, &ElectrodeLayout::dreamer14(), DatasetKind::Dreamer, PreprocessOptions::default()).unwrap();
    assert_eq!(samples.len(), 8);
}

#[test]
fn corrupt_archive_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s07.mat");
    std::fs::write(&p, vec![0u8; 300]).unwrap();
    let err = load_trials(DatasetKind::Deap, &p).unwrap_err();
    assert!(matches!(err, Error::Ingestion { .. }));
    assert!(err.to_string().contains("s07.mat"), "{err}");
}

#[test]
fn synthetic_archive_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let trials = synth_trials(&SyntheticSpec::new(4, 1, 0.4), 2, 5, 3).unwrap();
    write_trial_archive(dir.path(), &trials).unwrap();
    assert_eq!(load_trials(DatasetKind::Synthetic, dir.path()).unwrap(), trials);
}

/// Writes an uncompressed little-endian Level-5 MAT-file of single-precision
/// arrays. Independent of the library reader; used only to build full-size
/// DEAP subjects that are too large to commit.
fn write_mat_single(path: &Path, vars: &[(&str, &[usize], &[f32])]) {
    fn tag(out: &mut Vec<u8>, ty: u32, n: usize) {
        out.extend_from_slice(&ty.to_le_bytes());
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    fn pad(out: &mut Vec<u8>) {
        while !out.len().is_multiple_of(8) {
            out.push(0);
        }
    }
    let mut out = vec![b' '; 128];
    out[..20].copy_from_slice(b"MATLAB 5.0 MAT-file,");
    out[124..126].copy_from_slice(&0x0100u16.to_le_bytes());
    out[126..128].copy_from_slice(b"IM");
    for (name, dims, data) in vars {
        let mut m = Vec::new();
        tag(&mut m, 6, 8);
        m.extend_from_slice(&7u32.to_le_bytes()); // mxSINGLE_CLASS
        m.extend_from_slice(&0u32.to_le_bytes());
        tag(&mut m, 5, 4 * dims.len());
        for d in *dims {
            m.extend_from_slice(&(*d as i32).to_le_bytes());
        }
        pad(&mut m);
        tag(&mut m, 1, name.len());
        m.extend_from_slice(name.as_bytes());
        pad(&mut m);
        tag(&mut m, 7, 4 * data.len());
        for v in *data {
            m.extend_from_slice(&v.to_le_bytes());
        }
        pad(&mut m);
        tag(&mut out, 14, m.len());
        out.extend_from_slice(&m);
    }
    std::fs::write(path, out).unwrap();
}

#[test]
fn full_size_deap_subject_gives_2400_samples() {
    let (trials, channels, samples) = (40usize, 40usize, 8064usize);
    // Column-major, value encodes (trial, channel) and stays small.
    let data: Vec<f32> = (0..trials * channels * samples)
        .map(|i| {
            let t = i % trials;
            let c = (i / trials) % channels;
            let s = i / (trials * channels);
            (t + c) as f32 + if s < 384 { 0.0 } else { 1.0 }
        })
        .collect();
    let labels: Vec<f32> = (0..trials * 4).map(|i| 1.0 + (i % 9) as f32).collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s01.mat");
    write_mat_single(&path, &[("data", &[trials, channels, samples], &data), ("labels", &[trials, 4], &labels)]);

    let recs = load_trials(DatasetKind::Deap, &path).unwrap();
    assert_eq!(recs.len(), 40);
    assert!(recs.iter().all(|r| r.signal.dim() == (32, 7680) && r.baseline.dim() == (32, 384)));
    assert_eq!(recs[3].signal[[2, 0]], 6.0);

    let out = preprocess_trials(&recs, &ElectrodeLayout::deap32(), DatasetKind::Deap, PreprocessOptions::default()).unwrap();
    assert_eq!(out.len(), 2400);
    // Baseline removal leaves the constant +1 step on every electrode.
    let layout = ElectrodeLayout::deap32();
    for (r, c) in layout.positions() {
        assert_eq!(out[0].grid[[5, r, c]], 1.0);
    }
}
