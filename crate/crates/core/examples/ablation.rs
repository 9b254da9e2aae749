// Every ablation variant on the same folds, with its generator scored by FSTD.
//
// cargo run --release --example ablation

use std::path::{Path, PathBuf};

use ganser::aan::AanConfig;
use ganser::augmentation::build_channel_mask;
use ganser::config::PipelineConfig;
use ganser::data::{make_folds, BatchSource, synth_dataset, ElectrodeLayout, GridSet, SyntheticSpec};
use ganser::evaluation::{ablation_run, aan_split, targets, train_fstd_extractor, Variant};
use ganser::models::ModelScale;
use ganser::mtn::MtnConfig;

pub fn run_example(_out: &Path) -> ganser::Result<()> {
    let cfg = PipelineConfig {
        seed: 17,
        scale: ModelScale::Tiny,
        folds: 3,
        aan: AanConfig { epochs: 1, batch_size: 8, n_critic: 2, lr_g: 1e-3, lr_d: 1e-3, ..Default::default() },
        mtn: MtnConfig { pretrain_epochs: 3, finetune_epochs: 1, batch_size: 8, lr_c: 1e-2, ..Default::default() },
        ..Default::default()
    };
    let samples = synth_dataset(&SyntheticSpec::new(2, 9, 0.5), cfg.seed)?;
    let data = GridSet::from_samples(&samples);
    let y = targets(&samples, cfg.protocol);
    let folds = make_folds(data.len(), cfg.folds, cfg.derived_seeds().folds)?;
    let mask = build_channel_mask(&ElectrodeLayout::deap32());

    let (train_idx, _) = aan_split(data.len(), &cfg)?;
    let mut ecfg = cfg.mtn_config(0);
    ecfg.seed = cfg.derived_seeds().extractor;
    let extractor = train_fstd_extractor(&data, &y, &train_idx, cfg.classifier_spec(), cfg.protocol, &ecfg)?;

    println!("{:<22} {:>8} {:>10}", "variant", "acc %", "FSTD");
    for v in Variant::ALL {
        let r = ablation_run(v, &data, &y, &folds, mask.clone(), &cfg, Some(&extractor))?;
        let fstd = r.fstd.map_or("-".to_string(), |f| format!("{:.3}", f.score));
        println!("{:<22} {:>8.2} {:>10}", v.name(), 100.0 * r.accuracy.mean_accuracy, fstd);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> ganser::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("ganser-ablation"), PathBuf::from);
    run_example(&out)
}
