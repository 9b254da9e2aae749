// Raw synthetic trials through baseline removal, windowing and grid mapping,
// then a sample store written and read back.
//
// cargo run --release --example synthetic_data [out_dir]

use std::path::{Path, PathBuf};

use ganser::data::{
    preprocess_trials, read_samples, synth_trials, write_samples, DatasetKind, ElectrodeLayout, PreprocessOptions,
    SyntheticSpec,
};

pub fn run_example(out: &Path) -> ganser::Result<()> {
    let spec = SyntheticSpec::new(4, 0, 0.3);
    let trials = synth_trials(&spec, 2, 4, 11)?;
    let layout = ElectrodeLayout::deap32();
    let samples = preprocess_trials(&trials, &layout, DatasetKind::Synthetic, PreprocessOptions { zscore: false })?;
    println!("{} trials of 4 s -> {} one-second samples", trials.len(), samples.len());

    let manifest = write_samples(out, &samples, &layout.name, "example")?;
    let (back, _) = read_samples(out)?;
    assert_eq!(back, samples);
    println!("store at {} holds {} samples", out.display(), manifest.sample_count);
    let first = &back[0];
    println!("first sample: subject {} trial {} window {}, quadrant {}", first.meta.subject_id, first.meta.trial_id, first.meta.window_index, first.labels.four_class());
    Ok(())
}

#[allow(dead_code)]
fn main() -> ganser::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("ganser-synthetic"), PathBuf::from);
    run_example(&out)
}
