// The full protocol on a small synthetic set: AAN on the 80% split, then
// k-fold pretraining and fine-tuning, driven by a TOML configuration.
//
// cargo run --release --example cross_validation

use std::path::{Path, PathBuf};

use ganser::augmentation::build_channel_mask;
use ganser::config::parse_config;
use ganser::data::{make_folds, BatchSource, synth_dataset, ElectrodeLayout, GridSet, SyntheticSpec};
use ganser::evaluation::{cross_validate, run_aan_stage, targets};

const CONFIG: &str = r#"
seed = 13
scale = "tiny"
protocol = "four-class"
folds = 3

[aan]
epochs = 2
batch_size = 8
n_critic = 2
lr_g = 1e-3
lr_d = 1e-3

[mtn]
pretrain_epochs = 6
finetune_epochs = 2
batch_size = 8
lr_c = 1e-2
"#;

pub fn run_example(_out: &Path) -> ganser::Result<()> {
    let cfg = parse_config(CONFIG)?;
    let samples = synth_dataset(&SyntheticSpec::new(4, 9, 0.5), cfg.seed)?;
    let data = GridSet::from_samples(&samples);
    let y = targets(&samples, cfg.protocol);
    let stage = run_aan_stage(&data, build_channel_mask(&ElectrodeLayout::deap32()), &cfg, None)?;
    println!("AAN trained on {} of {} samples", stage.train_idx.len(), samples.len());
    let folds = make_folds(data.len(), cfg.folds, cfg.derived_seeds().folds)?;
    let report = cross_validate(&data, &y, &folds, &cfg, Some(&stage.outcome.generator))?;
    print!("{}", report.table());
    Ok(())
}

#[allow(dead_code)]
fn main() -> ganser::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("ganser-cv"), PathBuf::from);
    run_example(&out)
}
