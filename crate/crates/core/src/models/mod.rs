//! The three networks: UNet generator `G`, STNet critic `D` and STNet
//! classifier `C` (whose penultimate activation is the feature map `C_x`).
//!
//! All networks read `[n, 128, 9, 9]` batches, treating the 128 time steps as
//! convolution channels over the 9×9 scalp plane.

pub mod checkpoint;
pub mod generator;
pub mod stnet;
#[cfg(test)]
mod tests;

pub use checkpoint::{
    load_generator, load_stnet, save_generator, save_stnet, weights_sha256, CheckpointManifest, CheckpointMeta, Role,
};
pub use generator::{Generator, GeneratorSpec};
pub use stnet::{StNet, StNetKind, StNetSpec};

use serde::{Deserialize, Serialize};

/// Width presets. `Paper` reproduces the published widths; `Desk` keeps the
/// topology with narrower layers for single-CPU runs; `Tiny` is for smoke
/// runs and tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelScale {
    Paper,
    Desk,
    Tiny,
}

impl ModelScale {
    pub fn generator(self) -> GeneratorSpec {
        match self {
            ModelScale::Paper => GeneratorSpec::paper(),
            ModelScale::Desk => GeneratorSpec::desk(),
            ModelScale::Tiny => GeneratorSpec::tiny(crate::data::WINDOW),
        }
    }

    pub fn stnet(self, head: usize, dropout: f64) -> StNetSpec {
        match self {
            ModelScale::Paper => StNetSpec::paper(head, dropout),
            ModelScale::Desk => StNetSpec::desk(head, dropout),
            ModelScale::Tiny => StNetSpec::tiny(crate::data::WINDOW, head, dropout),
        }
    }
}
