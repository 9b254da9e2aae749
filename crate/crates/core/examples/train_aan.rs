// A short adversarial augmentation run on synthetic data, with checkpoints,
// the loss trace, and a resumed continuation.
//
// cargo run --release --example train_aan [out_dir]

use std::path::{Path, PathBuf};

use ganser::aan::{train_aan, AanConfig, AanModels, AanOutput};
use ganser::augmentation::build_channel_mask;
use ganser::data::{synth_dataset, ElectrodeLayout, GridSet, SyntheticSpec};
use ganser::models::{CheckpointMeta, ModelScale};

pub fn run_example(out: &Path) -> ganser::Result<()> {
    let samples = synth_dataset(&SyntheticSpec::new(2, 16, 0.5), 7)?;
    let data = GridSet::from_samples(&samples);
    let mask = build_channel_mask(&ElectrodeLayout::deap32());
    let config = AanConfig { epochs: 2, batch_size: 8, n_critic: 2, lr_g: 1e-3, lr_d: 1e-3, seed: 7, checkpoint_every: 1, ..Default::default() };
    let scale = ModelScale::Tiny;
    let meta = CheckpointMeta { epoch: 0, config_hash: "example".into(), layout: "deap32".into(), seed: 7, extra: Default::default() };
    let sink = AanOutput { dir: out.to_path_buf(), meta };

    let models = AanModels::init(scale.generator(), scale.stnet(1, 0.0), mask, config.seed)?;
    let first = train_aan(&data, models, &config, Some(&sink))?;
    for s in &first.trace {
        let lg = s.l_g.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!("epoch {} step {:>2}: L_D {:>8.4} (penalty {:.4}), L_G {lg}", s.epoch, s.step, s.l_d, s.penalty);
    }

    // Two more epochs from the last checkpoint.
    let last = first.checkpoints.last().expect("final checkpoint");
    let resumed = AanModels::resume(last)?;
    println!("resuming {} at epoch {}", last.display(), resumed.epoch);
    let more = train_aan(&data, resumed, &AanConfig { epochs: 4, ..config }, Some(&sink))?;
    println!("{} critic steps after resuming; checkpoints: {:?}", more.trace.len(), more.checkpoints);
    Ok(())
}

#[allow(dead_code)]
fn main() -> ganser::Result<()> {
    env_logger::init();
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("ganser-aan"), PathBuf::from);
    run_example(&out)
}
