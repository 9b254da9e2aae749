// Fréchet STNet distance: the closed-form Gaussian case, then a trained
// extractor scoring a generator against a noise baseline.
//
// cargo run --release --example fstd_score [out_dir]

use std::path::{Path, PathBuf};

use rand_distr::{Distribution, StandardNormal};

use ganser::aan::{train_aan, AanConfig, AanModels};
use ganser::augmentation::build_channel_mask;
use ganser::data::{synth_dataset, ElectrodeLayout, GridSet, Protocol, SyntheticSpec};
use ganser::evaluation::{fstd, targets, train_fstd_extractor};
use ganser::models::ModelScale;
use ganser::mtn::MtnConfig;
use ganser::seed;
use ganser::tensor::Tensor;

pub fn run_example(out: &Path) -> ganser::Result<()> {
    let mut rng = seed::stream(9, "fstd-example", 0);
    let mut gaussian = |shift: f64| Tensor::from_fn(&[20_000, 4], |i| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z + if i % 4 == 0 { shift } else { 0.0 }
    });
    let (a, b) = (gaussian(0.0), gaussian(1.0));
    let r = fstd::fstd(&a, &b)?;
    println!("unit covariances, unit mean offset: {:.4} (mean term {:.4}, trace term {:.4})", r.score, r.mean_term, r.trace_term);

    let samples = synth_dataset(&SyntheticSpec::new(2, 24, 0.5), 9)?;
    let y = targets(&samples, Protocol::Valence);
    let data = GridSet::from_samples(&samples);
    let all: Vec<usize> = (0..samples.len()).collect();
    let scale = ModelScale::Tiny;
    let config = MtnConfig { pretrain_epochs: 10, lr_c: 1e-2, batch_size: 8, seed: 9, ..Default::default() };
    let extractor = train_fstd_extractor(&data, &y, &all, scale.stnet(2, 0.0), Protocol::Valence, &config)?;
    println!("extractor {} reached training accuracy {:.3}", &extractor.id[..12], extractor.train_accuracy);

    let mask = build_channel_mask(&ElectrodeLayout::deap32());
    let aan = AanConfig { epochs: 3, batch_size: 8, n_critic: 2, lr_g: 1e-3, lr_d: 1e-3, seed: 9, ..Default::default() };
    let g = train_aan(&data, AanModels::init(scale.generator(), scale.stnet(1, 0.0), mask, 9)?, &aan, None)?.generator;
    let generated = extractor.score_generator(&g, &data, &all, aan.tau(), 1, 16)?;
    let noise = extractor.score_noise(&data, &all, 1, 16)?;
    println!("FSTD generated {:.4}, noise baseline {:.4}", generated.score, noise.score);
    generated.save_statistics(out)?;
    println!("feature means and covariances written to {}", out.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> ganser::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("ganser-fstd"), PathBuf::from);
    run_example(&out)
}
