pub mod aan;
pub mod augmentation;
pub mod autograd;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod models;
pub mod mtn;
pub mod nn;
pub mod seed;
pub mod tensor;

pub use error::{Error, Result};
