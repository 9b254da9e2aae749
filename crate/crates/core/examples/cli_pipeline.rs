// The command-line pipeline driven in-process: synth, preprocess, train-aan,
// train-mtn, evaluate and topomap, each leaving a run manifest in its output directory.
//
// cargo run --release --example cli_pipeline [out_dir]

use std::path::{Path, PathBuf};

use ganser::cli::{run, RunManifest, MANIFEST_FILE};
use ganser::error::IoContext;

const CONFIG: &str = r#"
seed = 3
scale = "tiny"
folds = 3

[aan]
epochs = 2
batch_size = 8
n_critic = 2
lr_g = 1e-3
lr_d = 1e-3
checkpoint_every = 1

[mtn]
pretrain_epochs = 4
finetune_epochs = 2
batch_size = 8
lr_c = 1e-2
"#;

pub fn run_example(out: &Path) -> ganser::Result<()> {
    std::fs::create_dir_all(out).at(out)?;
    let config = out.join("pipeline.toml");
    std::fs::write(&config, CONFIG).at(&config)?;
    let p = |s: &str| out.join(s).to_string_lossy().into_owned();
    let c = config.to_string_lossy().into_owned();
    let steps: Vec<Vec<String>> = vec![
        vec!["synth".into(), "--trials".into(), "2".into(), "--seconds".into(), "6".into(), "--out".into(), p("raw")],
        vec!["preprocess".into(), "--dataset".into(), "synth".into(), "--in".into(), p("raw"), "--out".into(), p("data")],
        vec!["train-aan".into(), "--data".into(), p("data"), "--out".into(), p("aan"), "--config".into(), c.clone()],
        vec!["train-mtn".into(), "--data".into(), p("data"), "--out".into(), p("mtn"), "--config".into(), c.clone(), "--generator".into(), p("aan/g.json"), "--fold".into(), "1".into()],
        vec!["evaluate".into(), "--mode".into(), "fstd".into(), "--data".into(), p("data"), "--out".into(), p("fstd"), "--config".into(), c.clone(), "--generator".into(), p("aan/g.json")],
        vec!["evaluate".into(), "--mode".into(), "cv".into(), "--data".into(), p("data"), "--out".into(), p("cv"), "--config".into(), c, "--generator".into(), p("aan/g.json")],
        vec!["topomap".into(), "--data".into(), p("data"), "--out".into(), p("maps"), "--generator".into(), p("aan/g.json")],
    ];
    for args in steps {
        println!("$ ganser {}", args.join(" "));
        let code = run(std::iter::once("ganser".to_string()).chain(args.iter().cloned()));
        if code != 0 {
            return Err(ganser::Error::Argument(format!("`{}` exited with {code}", args[0])));
        }
        let dir = args.iter().position(|a| a == "--out").map(|i| PathBuf::from(&args[i + 1])).expect("--out");
        let text = std::fs::read(dir.join(MANIFEST_FILE)).at(&dir)?;
        let manifest: RunManifest = serde_json::from_slice(&text)?;
        println!("  {} in {:.2} s, {} outputs", manifest.outcome, manifest.duration_seconds, manifest.outputs.len());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> ganser::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("ganser-cli"), PathBuf::from);
    run_example(&out)
}
