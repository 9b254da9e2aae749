// Topographic maps of a real sample and its generated counterpart at 0, 0.25,
// 0.5 and 0.75 s, on one shared colour scale.
//
// cargo run --release --example topomap [out_dir]

use std::path::{Path, PathBuf};

use ganser::augmentation::{build_channel_mask, mask_batch};
use ganser::data::{synth_dataset, tensor_to_grids, BatchSource, ElectrodeLayout, GridSet, SyntheticSpec};
use ganser::evaluation::{topomap_export, ColorScale, DEFAULT_TIMES};
use ganser::models::{Generator, ModelScale};
use ganser::seed;

pub fn run_example(out: &Path) -> ganser::Result<()> {
    let samples = synth_dataset(&SyntheticSpec::new(2, 2, 0.3), 21)?;
    let data = GridSet::from_samples(&samples);
    let mut rng = seed::stream(21, "topomap-example", 0);
    let g = Generator::new(ModelScale::Tiny.generator(), build_channel_mask(&ElectrodeLayout::deap32()), &mut rng)?;
    let masked = mask_batch(&data.batch(&[0]), &[0.25], &mut rng)?;
    let generated = tensor_to_grids(&g.generate(&masked)?).remove(0);

    let real = &samples[0].grid;
    let scale = ColorScale::symmetric_over([real, &generated]);
    for (grid, name) in [(real, "real"), (&generated, "generated")] {
        for f in topomap_export(grid, &DEFAULT_TIMES, out, name, scale)? {
            println!("t={:.2} s (index {:>3}): {}", f.time, f.index, f.png.display());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> ganser::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("ganser-topomap"), PathBuf::from);
    run_example(&out)
}
