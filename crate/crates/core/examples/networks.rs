// Builds G, D and C at every width preset and reports shapes and sizes.
//
// cargo run --release --example networks

use std::path::{Path, PathBuf};

use ganser::augmentation::build_channel_mask;
use ganser::data::{synth_dataset, BatchSource, ElectrodeLayout, GridSet, SyntheticSpec};
use ganser::error::IoContext;
use ganser::models::{load_generator, save_generator, CheckpointMeta, Generator, ModelScale, StNet};
use ganser::nn::Module;
use ganser::seed;

pub fn run_example(out: &Path) -> ganser::Result<()> {
    std::fs::create_dir_all(out).at(out)?;
    let samples = synth_dataset(&SyntheticSpec::new(2, 2, 0.5), 1)?;
    let x = GridSet::from_samples(&samples).batch(&[0, 1, 2, 3]);
    let mask = build_channel_mask(&ElectrodeLayout::deap32());
    for scale in [ModelScale::Tiny, ModelScale::Desk, ModelScale::Paper] {
        let mut rng = seed::stream(1, "networks-example", 0);
        let g = Generator::new(scale.generator(), mask.clone(), &mut rng)?;
        let d = StNet::new(scale.stnet(1, 0.0), &mut rng)?;
        let c = StNet::new(scale.stnet(4, 0.5), &mut rng)?;
        let (y, s, p) = (g.generate(&x)?, d.predict(&x)?, c.predict(&x)?);
        println!(
            "{scale:?}: G {} params {:?} -> {:?}; D {} params -> {:?}; C {} params -> {:?}, flatten {}, features {}",
            g.parameter_count(),
            x.shape(),
            y.shape(),
            d.parameter_count(),
            s.shape(),
            c.parameter_count(),
            p.shape(),
            c.spec.flatten_dim(),
            c.spec.hidden
        );
        if scale == ModelScale::Tiny {
            let path = out.join("g_tiny.json");
            let meta = CheckpointMeta { epoch: 0, config_hash: "example".into(), layout: "deap32".into(), seed: 1, extra: Default::default() };
            save_generator(&path, &g, &meta, None)?;
            let back = load_generator(&path)?.model;
            assert_eq!(back.generate(&x)?, y);
            println!("tiny generator round-tripped through {}", path.display());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> ganser::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("ganser-networks"), PathBuf::from);
    run_example(&out)
}
