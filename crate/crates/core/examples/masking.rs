// The masking transformation and the channel mask on one synthetic sample.
//
// cargo run --release --example masking

use std::path::{Path, PathBuf};

use ganser::augmentation::{apply_channel_mask, build_channel_mask, masking_transform, sample_tau, TauRange};
use ganser::data::{synth_dataset, ElectrodeLayout, SyntheticSpec};
use ganser::seed;

pub fn run_example(_out: &Path) -> ganser::Result<()> {
    let sample = synth_dataset(&SyntheticSpec::new(2, 1, 0.5), 3)?.remove(0);
    let mut rng = seed::stream(3, "masking-example", 0);
    let range = TauRange::new(0.0, 0.5)?;
    for _ in 0..4 {
        let tau = sample_tau(range, &mut rng)?;
        let m = masking_transform(&sample.grid, tau.value(), &mut rng, true)?;
        let dropped = m.mask_realization.as_ref().map_or(0, |r| r.iter().filter(|&&z| z).count());
        println!("tau {:.3}: {dropped} of {} cells zeroed ({:.3})", tau.value(), m.grid.len(), dropped as f64 / m.grid.len() as f64);
    }

    for layout in [ElectrodeLayout::deap32(), ElectrodeLayout::dreamer14()] {
        let mask = build_channel_mask(&layout);
        let kept = apply_channel_mask(&sample.grid, &mask)?;
        println!("{}: {} electrode cells, {} nonzero values survive", layout.name, mask.popcount(), kept.iter().filter(|v| **v != 0.0).count());
        for r in 0..9 {
            let row: String = (0..9).map(|c| if mask.get(r, c) { '#' } else { '.' }).collect();
            println!("  {row}");
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> ganser::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("ganser-masking"), PathBuf::from);
    run_example(&out)
}
