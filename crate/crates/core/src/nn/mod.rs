//! Layers, initialization and the Adam optimizer on top of [`crate::autograd`].

mod layers;
mod optim;

pub use layers::{dropout, Conv2d, Init, Linear, Module};
pub use optim::{Adam, AdamConfig, AdamState};
