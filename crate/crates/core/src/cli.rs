//! Command-line front end. Every command writes `run_manifest.json` into its
//! output directory, and a `FAILED` marker next to it when the run errors.
//!
//! Exit codes: 0 on success, 1 on a runtime failure, 2 on a usage error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::aan::{train_aan, AanModels, AanOutput, TRACE_FILE};
use crate::augmentation::{build_channel_mask, mask_batch, sample_tau, ChannelMask};
use crate::config::{load_config, DerivedSeeds, PipelineConfig};
use crate::data::{
    load_trials, make_folds, preprocess_trials, read_samples, synth_dataset, synth_trials, tensor_to_grids, write_samples,
    write_trial_archive, BatchSource, DatasetKind, EEGSample, ElectrodeLayout, GridSet, PreprocessOptions, Protocol,
    SyntheticSpec,
};
use crate::error::{Error, IoContext, Result};
use crate::evaluation::{
    ablation_run, aan_split, cross_validate, run_aan_stage, targets, topomap::topomap_export, train_fstd_extractor, ColorScale,
    Variant, DEFAULT_TIMES,
};
use crate::models::{load_generator, load_stnet, save_stnet, CheckpointMeta, Generator, Role, StNet};
use crate::mtn::{accuracy, finetune_mtn, pretrain_classifier, FinetuneMode};
use crate::seed;

pub const MANIFEST_FILE: &str = "run_manifest.json";
pub const FAILED_FILE: &str = "FAILED";
pub const REVISION: &str = env!("GANSER_REVISION");

#[derive(Parser, Debug)]
#[command(name = "ganser", version, about = "Adversarial EEG augmentation and self-supervised fine-tuning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Ingest DEAP, DREAMER or a synthetic trial archive into a sample store.
    Preprocess(PreprocessArgs),
    /// Write a synthetic labelled sample store (or raw trial archive).
    Synth(SynthArgs),
    /// Train the adversarial augmentation network on the configured split.
    TrainAan(TrainAanArgs),
    /// Pretrain and fine-tune a classifier against a frozen generator.
    TrainMtn(TrainMtnArgs),
    /// Cross-validation, FSTD, ablations or topographic maps.
    Evaluate(EvaluateArgs),
    /// Shorthand for `evaluate --mode topomap`.
    Topomap(EvaluateArgs),
}

#[derive(Args, Debug)]
pub struct PreprocessArgs {
    #[arg(long, value_parser = parse_kind)]
    pub dataset: DatasetKind,
    /// DEAP file or directory, DREAMER.mat, or a synthetic trial archive.
    #[arg(long, visible_alias = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Bundled layout name or layout JSON file; defaults to the dataset's own.
    #[arg(long)]
    pub layout: Option<String>,
    /// Z-score every channel of a trial after baseline removal.
    #[arg(long)]
    pub zscore: bool,
    /// Recorded in the manifest; preprocessing itself draws no random numbers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    #[arg(long, default_value_t = 256)]
    pub per_class: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Standard deviation of the additive Gaussian noise.
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
    /// Write a raw trial archive with this many trials per class instead of samples.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Seconds of signal per raw trial.
    #[arg(long, default_value_t = 10)]
    pub seconds: usize,
}

#[derive(Args, Debug)]
pub struct TrainAanArgs {
    /// Sample store written by `preprocess` or `synth`.
    #[arg(long, env = "GANSER_DATA")]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Pipeline TOML; missing keys take the published defaults.
    #[arg(long, env = "GANSER_CONFIG")]
    pub config: Option<PathBuf>,
    /// Generator checkpoint to continue from (its `d*` sibling is loaded too).
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainMtnArgs {
    #[arg(long, env = "GANSER_DATA")]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "GANSER_CONFIG")]
    pub config: Option<PathBuf>,
    /// Pretrained classifier; when absent one is pretrained first.
    #[arg(long)]
    pub classifier: Option<PathBuf>,
    /// Frozen generator checkpoint.
    #[arg(long)]
    pub generator: Option<PathBuf>,
    /// Train on the other folds of this fold and report its held-out accuracy.
    #[arg(long)]
    pub fold: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Cv,
    Fstd,
    Ablation,
    Topomap,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long, value_enum, default_value = "topomap", hide_default_value = true)]
    pub mode: Mode,
    #[arg(long, env = "GANSER_DATA")]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "GANSER_CONFIG")]
    pub config: Option<PathBuf>,
    /// Generator checkpoint. `cv` trains one when absent; `fstd` requires it.
    #[arg(long)]
    pub generator: Option<PathBuf>,
    /// Ablation variant name, or `all`.
    #[arg(long, default_value = "all")]
    pub variant: String,
    /// Also score each ablation's generator by FSTD.
    #[arg(long)]
    pub with_fstd: bool,
    /// Sample index for topographic maps.
    #[arg(long, default_value_t = 0)]
    pub sample: usize,
    /// Instants in seconds for topographic maps.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_TIMES.to_vec())]
    pub times: Vec<f64>,
    /// Masking rate for the generated topographic map.
    #[arg(long, default_value_t = 0.25)]
    pub tau: f64,
}

fn parse_kind(s: &str) -> std::result::Result<DatasetKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub revision: String,
    pub version: String,
    /// Resolved configuration as TOML.
    pub config: Option<String>,
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    pub derived_seeds: Option<DerivedSeeds>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub duration_seconds: f64,
    pub outcome: String,
    pub error: Option<String>,
    pub details: Value,
}

/// What a command reports back for its manifest.
#[derive(Default)]
struct Record {
    config: Option<PipelineConfig>,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    details: Value,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let shown: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli.command, shown) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(command: Command, args: Vec<String>) -> Result<()> {
    let (name, out) = match &command {
        Command::Preprocess(a) => ("preprocess", a.out.clone()),
        Command::Synth(a) => ("synth", a.out.clone()),
        Command::TrainAan(a) => ("train-aan", a.out.clone()),
        Command::TrainMtn(a) => ("train-mtn", a.out.clone()),
        Command::Evaluate(a) => ("evaluate", a.out.clone()),
        Command::Topomap(a) => ("topomap", a.out.clone()),
    };
    std::fs::create_dir_all(&out).at(&out)?;
    let marker = out.join(FAILED_FILE);
    if marker.exists() {
        std::fs::remove_file(&marker).at(&marker)?;
    }
    let start = Instant::now();
    let result = match command {
        Command::Preprocess(a) => preprocess(a),
        Command::Synth(a) => synth(a),
        Command::TrainAan(a) => train_aan_cmd(a),
        Command::TrainMtn(a) => train_mtn_cmd(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Topomap(a) => evaluate(EvaluateArgs { mode: Mode::Topomap, ..a }),
    };
    let (record, error) = match result {
        Ok(r) => (r, None),
        Err(e) => (Record::default(), Some(e)),
    };
    let manifest = RunManifest {
        command: name.into(),
        args,
        revision: REVISION.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: record.config.as_ref().map(PipelineConfig::to_toml),
        config_hash: record.config.as_ref().map(PipelineConfig::hash),
        seed: record.seed.or(record.config.as_ref().map(|c| c.seed)),
        derived_seeds: record.config.as_ref().map(PipelineConfig::derived_seeds),
        inputs: record.inputs,
        outputs: record.outputs,
        duration_seconds: start.elapsed().as_secs_f64(),
        outcome: if error.is_some() { "failure" } else { "success" }.into(),
        error: error.as_ref().map(ToString::to_string),
        details: record.details,
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    match error {
        Some(e) => {
            std::fs::write(&marker, format!("{e}\n")).at(&marker)?;
            Err(e)
        }
        None => Ok(()),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_vec_pretty(value)?).at(path)
}

fn config_or_default(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => load_config(p),
        None => Ok(PipelineConfig::default()),
    }
}

struct Store {
    samples: Vec<EEGSample>,
    grids: GridSet,
    layout: ElectrodeLayout,
    mask: ChannelMask,
}

fn load_store(dir: &Path) -> Result<Store> {
    let (samples, manifest) = read_samples(dir)?;
    if samples.is_empty() {
        return Err(Error::Ingestion { path: dir.to_path_buf(), reason: "sample store is empty".into() });
    }
    let layout = ElectrodeLayout::resolve(&manifest.layout)?;
    let mask = build_channel_mask(&layout);
    let grids = GridSet::from_samples(&samples);
    Ok(Store { samples, grids, layout, mask })
}

fn meta(config: &PipelineConfig, layout: &ElectrodeLayout, seed: u64) -> CheckpointMeta {
    CheckpointMeta { epoch: 0, config_hash: config.hash(), layout: layout.name.clone(), seed, extra: Default::default() }
}

fn preprocess(a: PreprocessArgs) -> Result<Record> {
    let layout = ElectrodeLayout::resolve(a.layout.as_deref().unwrap_or(a.dataset.default_layout()))?;
    let trials = load_trials(a.dataset, &a.input)?;
    let samples = preprocess_trials(&trials, &layout, a.dataset, PreprocessOptions { zscore: a.zscore })?;
    let options = json!({ "dataset": a.dataset, "layout": layout.name, "zscore": a.zscore });
    let hash = short_hash(&options);
    let manifest = write_samples(&a.out, &samples, &layout.name, &hash)?;
    println!("{} trials -> {} samples in {}", trials.len(), samples.len(), a.out.display());
    Ok(Record {
        seed: Some(a.seed),
        inputs: vec![a.input],
        outputs: vec![a.out],
        details: json!({ "options": options, "trials": trials.len(), "store": manifest }),
        ..Default::default()
    })
}

fn short_hash(v: &Value) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(v.to_string().as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn synth(a: SynthArgs) -> Result<Record> {
    let spec = SyntheticSpec { ..SyntheticSpec::new(a.classes, a.per_class, a.noise) };
    let details = json!({ "spec": spec, "trials": a.trials, "seconds": a.seconds });
    if let Some(per_class) = a.trials {
        let trials = synth_trials(&spec, per_class, a.seconds, a.seed)?;
        write_trial_archive(&a.out, &trials)?;
        println!("{} synthetic trials in {}", trials.len(), a.out.display());
    } else {
        let samples = synth_dataset(&spec, a.seed)?;
        let manifest = write_samples(&a.out, &samples, &spec.layout, &short_hash(&details))?;
        println!("{} synthetic samples in {}", manifest.sample_count, a.out.display());
    }
    Ok(Record { seed: Some(a.seed), outputs: vec![a.out], details, ..Default::default() })
}

fn train_aan_cmd(a: TrainAanArgs) -> Result<Record> {
    let cfg = config_or_default(a.config.as_deref())?.effective();
    let store = load_store(&a.data)?;
    let (train_idx, rest_idx) = aan_split(store.grids.len(), &cfg)?;
    let aan = cfg.aan_config();
    let models = match &a.resume {
        Some(p) => AanModels::resume(p)?,
        None => AanModels::init(cfg.generator_spec(), cfg.critic_spec(), store.mask.clone(), aan.seed)?,
    };
    let out = AanOutput { dir: a.out.clone(), meta: meta(&cfg, &store.layout, aan.seed) };
    if a.resume.is_none() {
        let trace = a.out.join(TRACE_FILE);
        if trace.exists() {
            std::fs::remove_file(&trace).at(&trace)?;
        }
    }
    write_json(&a.out.join("split.json"), &json!({ "train": train_idx, "rest": rest_idx }))?;
    let outcome = train_aan(&store.grids.subset(&train_idx), models, &aan, Some(&out))?;
    let last = outcome.trace.last();
    println!(
        "trained AAN for {} epochs on {} samples; final L_D {:.4}",
        aan.epochs,
        train_idx.len(),
        last.map_or(f64::NAN, |s| s.l_d)
    );
    let mut inputs = vec![a.data];
    inputs.extend(a.config);
    inputs.extend(a.resume);
    let mut outputs = outcome.checkpoints.clone();
    outputs.push(a.out.join(TRACE_FILE));
    Ok(Record {
        config: Some(cfg),
        inputs,
        outputs,
        details: json!({ "train_samples": train_idx.len(), "critic_steps": outcome.trace.len(), "final": last }),
        ..Default::default()
    })
}

fn needs_generator(cfg: &PipelineConfig) -> bool {
    cfg.mtn.mode != FinetuneMode::CrossEntropyOnly
}

fn load_frozen_generator(path: Option<&Path>, cfg: &PipelineConfig) -> Result<Option<Generator>> {
    match path {
        Some(p) => Ok(Some(load_generator(p)?.model)),
        None if needs_generator(cfg) => {
            Err(Error::Config("fine-tuning with generated samples needs --generator (or variant = \"no-gan\")".into()))
        }
        None => Ok(None),
    }
}

fn train_mtn_cmd(a: TrainMtnArgs) -> Result<Record> {
    let cfg = config_or_default(a.config.as_deref())?.effective();
    let store = load_store(&a.data)?;
    let y = targets(&store.samples, cfg.protocol);
    let generator = load_frozen_generator(a.generator.as_deref(), &cfg)?;
    let (train, test, fold) = match a.fold {
        Some(k) => {
            let folds = make_folds(store.grids.len(), cfg.folds, cfg.derived_seeds().folds)?;
            if k >= folds.k {
                return Err(Error::Argument(format!("fold {k} out of range for {} folds", folds.k)));
            }
            (folds.train_indices(k), folds.test_indices(k), k)
        }
        None => ((0..store.grids.len()).collect(), Vec::new(), 0),
    };
    let mtn = cfg.mtn_config(fold);
    let pick = |idx: &[usize]| idx.iter().map(|&i| y[i]).collect::<Vec<_>>();
    let train_set = store.grids.subset(&train);
    let mut outputs = Vec::new();
    let mut history = json!({});
    let classifier = match &a.classifier {
        Some(p) => load_stnet(p)?.model,
        None => {
            let init = StNet::new(cfg.classifier_spec(), &mut seed::stream(mtn.seed, "init-c", 0))?;
            let pre = pretrain_classifier(init, &train_set, &pick(&train), &mtn, mtn.pretrain_epochs)?;
            let path = a.out.join("c_pretrain.json");
            let m = CheckpointMeta { epoch: mtn.pretrain_epochs, ..meta(&cfg, &store.layout, mtn.seed) };
            save_stnet(&path, Role::C, &pre.classifier, &m, Some(&pre.optimizer))?;
            outputs.push(path);
            history["pretrain"] = serde_json::to_value(&pre.history)?;
            pre.classifier
        }
    };
    let pretrain_accuracy =
        if test.is_empty() { None } else { Some(accuracy(&classifier, &store.grids.subset(&test), &pick(&test), mtn.batch_size)?) };
    let tuned = finetune_mtn(classifier, generator.as_ref(), &train_set, &pick(&train), &mtn)?;
    history["finetune"] = serde_json::to_value(&tuned.history)?;
    let path = a.out.join("c.json");
    let m = CheckpointMeta { epoch: mtn.finetune_epochs, ..meta(&cfg, &store.layout, mtn.seed) };
    save_stnet(&path, Role::C, &tuned.classifier, &m, Some(&tuned.optimizer))?;
    outputs.push(path);
    let history_path = a.out.join("history.json");
    write_json(&history_path, &history)?;
    outputs.push(history_path);
    let test_accuracy =
        if test.is_empty() { None } else { Some(accuracy(&tuned.classifier, &store.grids.subset(&test), &pick(&test), mtn.batch_size)?) };
    if let (Some(p), Some(t)) = (pretrain_accuracy, test_accuracy) {
        println!("fold {fold}: pretrain {:.2}%, fine-tuned {:.2}%", 100.0 * p, 100.0 * t);
    }
    let mut inputs = vec![a.data];
    inputs.extend(a.config);
    inputs.extend(a.classifier);
    inputs.extend(a.generator);
    Ok(Record {
        config: Some(cfg),
        inputs,
        outputs,
        details: json!({
            "fold": a.fold,
            "train_samples": train.len(),
            "test_samples": test.len(),
            "pretrain_accuracy": pretrain_accuracy,
            "test_accuracy": test_accuracy,
        }),
        ..Default::default()
    })
}

fn evaluate(a: EvaluateArgs) -> Result<Record> {
    let cfg = config_or_default(a.config.as_deref())?;
    let store = load_store(&a.data)?;
    let mut inputs = vec![a.data.clone()];
    inputs.extend(a.config.clone());
    inputs.extend(a.generator.clone());
    let mut record = match a.mode {
        Mode::Cv => evaluate_cv(&a, cfg.effective(), &store)?,
        Mode::Fstd => evaluate_fstd(&a, cfg.effective(), &store)?,
        Mode::Ablation => evaluate_ablation(&a, cfg, &store)?,
        Mode::Topomap => evaluate_topomap(&a, &store)?,
    };
    record.inputs = inputs;
    Ok(record)
}

fn evaluate_cv(a: &EvaluateArgs, cfg: PipelineConfig, store: &Store) -> Result<Record> {
    let y = targets(&store.samples, cfg.protocol);
    let folds = make_folds(store.grids.len(), cfg.folds, cfg.derived_seeds().folds)?;
    let mut outputs = Vec::new();
    let generator = match (&a.generator, needs_generator(&cfg)) {
        (Some(p), _) => Some(load_generator(p)?.model),
        (None, true) => {
            let dir = a.out.join("aan");
            let out = AanOutput { dir: dir.clone(), meta: meta(&cfg, &store.layout, cfg.aan_config().seed) };
            let stage = run_aan_stage(&store.grids, store.mask.clone(), &cfg, Some(&out))?;
            outputs.extend(stage.outcome.checkpoints.clone());
            Some(stage.outcome.generator)
        }
        (None, false) => None,
    };
    let report = cross_validate(&store.grids, &y, &folds, &cfg, generator.as_ref())?;
    let path = a.out.join("report.json");
    write_json(&path, &report)?;
    outputs.push(path);
    println!("{}", serde_json::to_string(&report)?);
    print!("{}", report.table());
    Ok(Record { config: Some(cfg), outputs, details: serde_json::to_value(&report)?, ..Default::default() })
}

fn evaluate_fstd(a: &EvaluateArgs, cfg: PipelineConfig, store: &Store) -> Result<Record> {
    let gpath = a.generator.as_ref().ok_or_else(|| Error::Config("--mode fstd needs --generator".into()))?;
    let generator = load_generator(gpath)?.model;
    let (train_idx, rest_idx) = aan_split(store.grids.len(), &cfg)?;
    let pool = if rest_idx.len() >= 2 { rest_idx } else { train_idx.clone() };
    let seeds = cfg.derived_seeds();
    let mut extractor_cfg = cfg.mtn_config(0);
    extractor_cfg.seed = seeds.extractor;
    let mut results = Vec::new();
    let mut outputs = Vec::new();
    for protocol in [Protocol::Valence, Protocol::Arousal] {
        let y = targets(&store.samples, protocol);
        let ex = train_fstd_extractor(&store.grids, &y, &train_idx, cfg.classifier_spec(), protocol, &extractor_cfg)?;
        let ckpt = a.out.join(format!("extractor_{}.json", protocol.tag()));
        save_stnet(&ckpt, Role::C, &ex.classifier, &meta(&cfg, &store.layout, seeds.extractor), None)?;
        outputs.push(ckpt);
        let batch = cfg.mtn.batch_size;
        let gen = ex.score_generator(&generator, &store.grids, &pool, cfg.aan.tau(), seed::derive(cfg.seed, "fstd", 0), batch)?;
        let noise = ex.score_noise(&store.grids, &pool, seed::derive(cfg.seed, "fstd-noise", 0), batch)?;
        let stats = a.out.join(format!("statistics_{}", protocol.tag()));
        gen.save_statistics(&stats)?;
        outputs.push(stats);
        println!(
            "{:<8} FSTD {:>10.4}  (noise baseline {:>10.4}, extractor train acc {:.3})",
            protocol.tag(),
            gen.score,
            noise.score,
            ex.train_accuracy
        );
        results.push(json!({
            "protocol": protocol,
            "generated": gen.summary(pool.len(), pool.len()),
            "noise_baseline": noise.summary(pool.len(), pool.len()),
            "extractor_train_accuracy": ex.train_accuracy,
        }));
    }
    let scores: Vec<f64> = results.iter().filter_map(|r| r["generated"]["score"].as_f64()).collect();
    let report = json!({ "results": results, "mean_score": scores.iter().sum::<f64>() / scores.len() as f64 });
    let path = a.out.join("report.json");
    write_json(&path, &report)?;
    outputs.push(path);
    println!("{report}");
    Ok(Record { config: Some(cfg), outputs, details: report, ..Default::default() })
}

fn evaluate_ablation(a: &EvaluateArgs, cfg: PipelineConfig, store: &Store) -> Result<Record> {
    let variants: Vec<Variant> = if a.variant == "all" { Variant::ALL.to_vec() } else { vec![a.variant.parse()?] };
    let y = targets(&store.samples, cfg.protocol);
    let folds = make_folds(store.grids.len(), cfg.folds, cfg.derived_seeds().folds)?;
    let extractor = if a.with_fstd {
        let (train_idx, _) = aan_split(store.grids.len(), &cfg)?;
        let mut ecfg = cfg.mtn_config(0);
        ecfg.seed = cfg.derived_seeds().extractor;
        let full = cfg.scale.stnet(cfg.protocol.n_classes(), cfg.classifier_dropout);
        Some(train_fstd_extractor(&store.grids, &y, &train_idx, full, cfg.protocol, &ecfg)?)
    } else {
        None
    };
    let mut reports = Vec::new();
    println!("{:<22} {:>8} {:>10}", "variant", "acc %", "FSTD");
    for v in variants {
        let r = ablation_run(v, &store.grids, &y, &folds, store.mask.clone(), &cfg, extractor.as_ref())?;
        let fstd = r.fstd.as_ref().map_or("-".to_string(), |f| format!("{:.4}", f.score));
        println!("{:<22} {:>8.2} {:>10}", v.name(), 100.0 * r.accuracy.mean_accuracy, fstd);
        reports.push(r);
    }
    let path = a.out.join("report.json");
    write_json(&path, &reports)?;
    println!("{}", serde_json::to_string(&reports)?);
    Ok(Record { config: Some(cfg), outputs: vec![path], details: serde_json::to_value(&reports)?, ..Default::default() })
}

fn evaluate_topomap(a: &EvaluateArgs, store: &Store) -> Result<Record> {
    let sample = store.samples.get(a.sample).ok_or_else(|| {
        Error::Argument(format!("sample {} out of range for a store of {}", a.sample, store.samples.len()))
    })?;
    let mut grids = vec![sample.grid.clone()];
    if let Some(p) = &a.generator {
        let g = load_generator(p)?.model;
        let mut rng = seed::stream(0, "topomap", a.sample as u64);
        let tau = sample_tau(crate::augmentation::TauRange::new(a.tau, a.tau)?, &mut rng)?.value();
        let masked = mask_batch(&store.grids.batch(&[a.sample]), &[tau], &mut rng)?;
        grids.push(tensor_to_grids(&g.generate(&masked)?).remove(0));
    }
    let scale = ColorScale::symmetric_over(&grids);
    let mut outputs = Vec::new();
    for (grid, name) in grids.iter().zip(["real", "generated"]) {
        for f in topomap_export(grid, &a.times, &a.out, name, scale)? {
            outputs.push(f.png);
            outputs.push(f.grid);
        }
    }
    println!("wrote {} topographic maps to {}", outputs.len() / 2, a.out.display());
    Ok(Record {
        outputs,
        details: json!({ "sample": a.sample, "meta": sample.meta, "times": a.times, "scale": scale, "tau": a.tau }),
        ..Default::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(run(["ganser", "frobnicate"]), 2);
        assert_eq!(run(["ganser", "synth", "--bogus"]), 2);
        assert_eq!(run(["ganser", "evaluate", "--mode", "nope", "--data", "x", "--out", "y"]), 2);
    }

    #[test]
    fn runtime_failure_leaves_marker_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let code = run(["ganser", "train-aan", "--data", "/nonexistent/store", "--out", out.to_str().unwrap()]);
        assert_eq!(code, 1);
        assert!(out.join(FAILED_FILE).exists());
        let m: RunManifest = serde_json::from_slice(&std::fs::read(out.join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(m.outcome, "failure");
        assert!(m.error.unwrap().contains("nonexistent"));
    }

    #[test]
    fn synth_writes_store_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("d");
        let o = out.to_str().unwrap();
        assert_eq!(run(["ganser", "synth", "--classes", "2", "--per-class", "3", "--out", o, "--seed", "7"]), 0);
        let (samples, manifest) = read_samples(&out).unwrap();
        assert_eq!((samples.len(), manifest.sample_count), (6, 6));
        let m: RunManifest = serde_json::from_slice(&std::fs::read(out.join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!((m.outcome.as_str(), m.seed), ("success", Some(7)));
        assert!(!out.join(FAILED_FILE).exists());
    }
}
