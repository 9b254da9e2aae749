// Pretrains a classifier, then fine-tunes it with the self-supervised loss
// against a frozen generator, and compares with plain continued training.
//
// cargo run --release --example finetune_mtn

use std::path::{Path, PathBuf};

use ganser::aan::{train_aan, AanConfig, AanModels};
use ganser::augmentation::build_channel_mask;
use ganser::data::{make_folds, BatchSource, synth_dataset, ElectrodeLayout, GridSet, Protocol, SyntheticSpec};
use ganser::evaluation::targets;
use ganser::models::{ModelScale, StNet};
use ganser::mtn::{accuracy, finetune_mtn, pretrain_classifier, FinetuneMode, MtnConfig};
use ganser::seed;

pub fn run_example(_out: &Path) -> ganser::Result<()> {
    let samples = synth_dataset(&SyntheticSpec::new(2, 24, 0.5), 5)?;
    let y = targets(&samples, Protocol::Valence);
    let data = GridSet::from_samples(&samples);
    let folds = make_folds(data.len(), 4, 5)?;
    let (train, test) = (folds.train_indices(0), folds.test_indices(0));
    let pick = |idx: &[usize]| idx.iter().map(|&i| y[i]).collect::<Vec<_>>();
    let (train_set, test_set) = (data.subset(&train), data.subset(&test));

    let scale = ModelScale::Tiny;
    let mask = build_channel_mask(&ElectrodeLayout::deap32());
    let aan = AanConfig { epochs: 2, batch_size: 8, n_critic: 2, lr_g: 1e-3, lr_d: 1e-3, seed: 5, ..Default::default() };
    let generator = train_aan(&train_set, AanModels::init(scale.generator(), scale.stnet(1, 0.0), mask, 5)?, &aan, None)?.generator;

    let config = MtnConfig { pretrain_epochs: 10, finetune_epochs: 3, lr_c: 1e-2, batch_size: 8, seed: 5, ..Default::default() };
    let init = StNet::new(scale.stnet(2, 0.2), &mut seed::stream(5, "init-c", 0))?;
    let pre = pretrain_classifier(init, &train_set, &pick(&train), &config, config.pretrain_epochs)?;
    println!("pretrained: held-out accuracy {:.3}", accuracy(&pre.classifier, &test_set, &pick(&test), 8)?);

    for mode in [FinetuneMode::Msl, FinetuneMode::AugmentedCrossEntropy, FinetuneMode::CrossEntropyOnly] {
        let start = StNet::new(scale.stnet(2, 0.2), &mut seed::stream(5, "init-c", 0))?;
        let start = pretrain_classifier(start, &train_set, &pick(&train), &config, config.pretrain_epochs)?.classifier;
        let tuned = finetune_mtn(start, Some(&generator), &train_set, &pick(&train), &MtnConfig { mode, ..config.clone() })?;
        let last = tuned.history.last().expect("history");
        println!(
            "{mode:?}: final loss {:.4}, train acc {:.3}, held-out acc {:.3}",
            last.loss,
            last.train_accuracy,
            accuracy(&tuned.classifier, &test_set, &pick(&test), 8)?
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> ganser::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("ganser-mtn"), PathBuf::from);
    run_example(&out)
}
