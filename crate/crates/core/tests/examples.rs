//! Runs every example end to end in a scratch directory.

macro_rules! example {
    ($module:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $module() {
            let dir = tempfile::tempdir().unwrap();
            $module::run_example(dir.path()).unwrap();
        }
    };
}

example!(synthetic_data, "synthetic_data.rs");
example!(masking, "masking.rs");
example!(networks, "networks.rs");
example!(train_aan, "train_aan.rs");
example!(finetune_mtn, "finetune_mtn.rs");
example!(fstd_score, "fstd_score.rs");
example!(cross_validation, "cross_validation.rs");
example!(ablation, "ablation.rs");
example!(topomap, "topomap.rs");
example!(cli_pipeline, "cli_pipeline.rs");
