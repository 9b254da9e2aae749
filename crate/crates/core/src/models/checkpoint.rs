//! Checkpoints: `NAME.json` manifest beside `NAME.bin` (parameters as
//! little-endian f64 in manifest order) and, when saved with optimizer state,
//! `NAME.adam.bin` (step count, then first and second moments).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::augmentation::ChannelMask;
use crate::error::{Error, IoContext, Result};
use crate::nn::{AdamState, Module};
use crate::seed::Rng;
use crate::tensor::Tensor;

use super::generator::{Generator, GeneratorSpec};
use super::stnet::{StNet, StNetSpec};

const MAGIC: &[u8; 8] = b"GNSRWTS1";
const ADAM_MAGIC: &[u8; 8] = b"GNSRADM1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    G,
    D,
    C,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "network", rename_all = "kebab-case")]
pub enum Architecture {
    Generator(GeneratorSpec),
    Stnet(StNetSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format: String,
    pub version: u32,
    pub role: Role,
    pub epoch: usize,
    pub config_hash: String,
    pub layout: String,
    pub seed: u64,
    pub architecture: Architecture,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_mask: Option<ChannelMask>,
    pub parameters: Vec<ParamEntry>,
    pub weights_sha256: String,
    #[serde(default)]
    pub has_optimizer: bool,
    /// Free-form run details (e.g. `n_critic`, protocol).
    #[serde(default)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

/// Run-level fields shared by every checkpoint written in a run.
#[derive(Clone, Debug, Default)]
pub struct CheckpointMeta {
    pub epoch: usize,
    pub config_hash: String,
    pub layout: String,
    pub seed: u64,
    pub extra: BTreeMap<String, serde_json::Value>,
}

pub fn weights_path(manifest: &Path) -> PathBuf {
    manifest.with_extension("bin")
}

pub fn optimizer_path(manifest: &Path) -> PathBuf {
    manifest.with_extension("adam.bin")
}

fn encode(tensors: impl IntoIterator<Item = Tensor>, magic: &[u8; 8], prefix: &[u8]) -> Vec<u8> {
    let mut out = magic.to_vec();
    out.extend_from_slice(prefix);
    for t in tensors {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn decode(bytes: &[u8], magic: &[u8; 8], skip: usize, shapes: &[Vec<usize>], path: &Path) -> Result<Vec<Tensor>> {
    let bad = |m: String| Error::Checkpoint(format!("{}: {m}", path.display()));
    if bytes.len() < 8 + skip || &bytes[..8] != magic {
        return Err(bad("bad magic".into()));
    }
    let body = &bytes[8 + skip..];
    let total: usize = shapes.iter().map(|s| s.iter().product::<usize>()).sum();
    if body.len() != total * 8 {
        return Err(bad(format!("{} payload bytes, expected {}", body.len(), total * 8)));
    }
    let mut values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    Ok(shapes
        .iter()
        .map(|s| Tensor::new(s.clone(), values.by_ref().take(s.iter().product()).collect()))
        .collect())
}

fn hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the weights blob `save` would write, usable as a model identity.
pub fn weights_sha256(module: &dyn Module) -> String {
    hex(&encode(module.named_parameters().into_iter().map(|(_, v)| v.value()), MAGIC, &[]))
}

/// Writes manifest, weights and (optionally) optimizer state.
pub fn save(
    path: &Path,
    role: Role,
    architecture: Architecture,
    channel_mask: Option<ChannelMask>,
    module: &dyn Module,
    meta: &CheckpointMeta,
    optimizer: Option<&AdamState>,
) -> Result<CheckpointManifest> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).at(dir)?;
    }
    let named = module.named_parameters();
    let blob = encode(named.iter().map(|(_, v)| v.value()), MAGIC, &[]);
    let wpath = weights_path(path);
    std::fs::write(&wpath, &blob).at(&wpath)?;
    if let Some(state) = optimizer {
        let tensors = state.first_moment.iter().chain(&state.second_moment).cloned();
        let opath = optimizer_path(path);
        std::fs::write(&opath, encode(tensors, ADAM_MAGIC, &state.step.to_le_bytes())).at(&opath)?;
    }
    let manifest = CheckpointManifest {
        format: "ganser-checkpoint".into(),
        version: 1,
        role,
        epoch: meta.epoch,
        config_hash: meta.config_hash.clone(),
        layout: meta.layout.clone(),
        seed: meta.seed,
        architecture,
        channel_mask,
        parameters: named.iter().map(|(n, v)| ParamEntry { name: n.clone(), shape: v.shape() }).collect(),
        weights_sha256: hex(&blob),
        has_optimizer: optimizer.is_some(),
        extra: meta.extra.clone(),
    };
    std::fs::write(path, serde_json::to_vec_pretty(&manifest)?).at(path)?;
    Ok(manifest)
}

pub fn read_manifest(path: &Path) -> Result<CheckpointManifest> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))
}

/// Copies stored weights into `module`, checking names, shapes and hash.
fn restore(path: &Path, manifest: &CheckpointManifest, module: &dyn Module) -> Result<Option<AdamState>> {
    let named = module.named_parameters();
    let expected: Vec<ParamEntry> = named.iter().map(|(n, v)| ParamEntry { name: n.clone(), shape: v.shape() }).collect();
    if expected != manifest.parameters {
        return Err(Error::Checkpoint(format!("{}: parameter list does not match the architecture", path.display())));
    }
    let shapes: Vec<Vec<usize>> = expected.iter().map(|p| p.shape.clone()).collect();
    let wpath = weights_path(path);
    let blob = std::fs::read(&wpath).map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", wpath.display())))?;
    if hex(&blob) != manifest.weights_sha256 {
        return Err(Error::Checkpoint(format!("{}: weights hash mismatch", wpath.display())));
    }
    for ((_, var), t) in named.iter().zip(decode(&blob, MAGIC, 0, &shapes, &wpath)?) {
        var.set_value(t);
    }
    if !manifest.has_optimizer {
        return Ok(None);
    }
    let opath = optimizer_path(path);
    let bytes = std::fs::read(&opath).map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", opath.display())))?;
    let step = bytes
        .get(8..16)
        .map(|b| u64::from_le_bytes(b.try_into().expect("8 bytes")))
        .ok_or_else(|| Error::Checkpoint(format!("{}: truncated", opath.display())))?;
    let both: Vec<Vec<usize>> = shapes.iter().chain(&shapes).cloned().collect();
    let mut moments = decode(&bytes, ADAM_MAGIC, 8, &both, &opath)?;
    let second_moment = moments.split_off(shapes.len());
    Ok(Some(AdamState { step, first_moment: moments, second_moment }))
}

pub struct LoadedGenerator {
    pub model: Generator,
    pub manifest: CheckpointManifest,
    pub optimizer: Option<AdamState>,
}

pub struct LoadedStNet {
    pub model: StNet,
    pub manifest: CheckpointManifest,
    pub optimizer: Option<AdamState>,
}

/// Any fixed seed works here: every parameter is overwritten on restore.
fn scratch_rng() -> Rng {
    crate::seed::stream(0, "checkpoint-scratch", 0)
}

pub fn load_generator(path: &Path) -> Result<LoadedGenerator> {
    let manifest = read_manifest(path)?;
    let (Role::G, Architecture::Generator(spec)) = (manifest.role, &manifest.architecture) else {
        return Err(Error::Checkpoint(format!("{} is not a generator checkpoint", path.display())));
    };
    let mask = manifest
        .channel_mask
        .clone()
        .ok_or_else(|| Error::Checkpoint(format!("{}: generator checkpoint lacks a channel mask", path.display())))?;
    let model = Generator::new(spec.clone(), mask, &mut scratch_rng())?;
    let optimizer = restore(path, &manifest, &model)?;
    Ok(LoadedGenerator { model, manifest, optimizer })
}

pub fn load_stnet(path: &Path) -> Result<LoadedStNet> {
    let manifest = read_manifest(path)?;
    let Architecture::Stnet(spec) = &manifest.architecture else {
        return Err(Error::Checkpoint(format!("{} is not an STNet checkpoint", path.display())));
    };
    let model = StNet::new(spec.clone(), &mut scratch_rng())?;
    let optimizer = restore(path, &manifest, &model)?;
    Ok(LoadedStNet { model, manifest, optimizer })
}

pub fn save_generator(path: &Path, g: &Generator, meta: &CheckpointMeta, optimizer: Option<&AdamState>) -> Result<CheckpointManifest> {
    save(path, Role::G, Architecture::Generator(g.spec.clone()), Some(g.mask.clone()), g, meta, optimizer)
}

pub fn save_stnet(path: &Path, role: Role, net: &StNet, meta: &CheckpointMeta, optimizer: Option<&AdamState>) -> Result<CheckpointManifest> {
    save(path, role, Architecture::Stnet(net.spec.clone()), None, net, meta, optimizer)
}
