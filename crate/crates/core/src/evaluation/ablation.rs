//! Ablation variants. Each one removes or swaps a single component and keeps
//! the protocol otherwise identical.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::models::{GeneratorSpec, StNetKind, StNetSpec};
use crate::mtn::FinetuneMode;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    #[default]
    Full,
    /// No AAN: the classifier keeps training on real samples only.
    NoGan,
    /// `G` sees the clean sample in both stages and every confidence is 1.
    NoMaskingTransform,
    /// Generated samples join the cross-entropy term with their source labels.
    NoMsl,
    /// Generator without skip connections (a plain auto-encoder).
    NoUnet,
    /// Generator output is not multiplied by the channel mask.
    NoChannelMask,
    /// Critic and classifier use plain convolutions instead of the STNet blocks.
    NoStnet,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Full,
        Variant::NoGan,
        Variant::NoMaskingTransform,
        Variant::NoMsl,
        Variant::NoUnet,
        Variant::NoChannelMask,
        Variant::NoStnet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoGan => "no-gan",
            Variant::NoMaskingTransform => "no-masking-transform",
            Variant::NoMsl => "no-msl",
            Variant::NoUnet => "no-unet",
            Variant::NoChannelMask => "no-channel-mask",
            Variant::NoStnet => "no-stnet",
        }
    }

    pub fn uses_generator(self) -> bool {
        self != Variant::NoGan
    }

    /// Hyperparameter side of the variant.
    pub fn apply(self, config: &PipelineConfig) -> PipelineConfig {
        let mut c = PipelineConfig { variant: self, ..config.clone() };
        match self {
            Variant::NoGan => c.mtn.mode = FinetuneMode::CrossEntropyOnly,
            Variant::NoMaskingTransform => {
                c.aan.tau_range = [0.0, 0.0];
                c.mtn.tau_range = [0.0, 0.0];
                c.mtn.masking = false;
            }
            Variant::NoMsl => c.mtn.mode = FinetuneMode::AugmentedCrossEntropy,
            _ => {}
        }
        c
    }

    pub fn generator_spec(self, base: GeneratorSpec) -> GeneratorSpec {
        match self {
            Variant::NoUnet => GeneratorSpec { skip_connections: false, ..base },
            Variant::NoChannelMask => GeneratorSpec { channel_masking: false, ..base },
            _ => base,
        }
    }

    pub fn stnet_spec(self, base: StNetSpec) -> StNetSpec {
        match self {
            Variant::NoStnet => StNetSpec { kind: StNetKind::PlainConv, ..base },
            _ => base,
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
                Error::Argument(format!("unknown ablation variant `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip_and_unknown_is_rejected() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!(matches!("no-dropout".parse::<Variant>(), Err(Error::Argument(_))));
    }

    #[test]
    fn each_variant_changes_one_component() {
        let base = PipelineConfig::default();
        let g = GeneratorSpec::desk();
        let s = StNetSpec::desk(2, 0.5);
        for v in Variant::ALL {
            let c = v.apply(&base);
            let changed = [
                c.mtn.mode != base.mtn.mode,
                c.mtn.masking != base.mtn.masking,
                v.generator_spec(g.clone()) != g,
                v.stnet_spec(s.clone()) != s,
            ];
            let n = changed.iter().filter(|&&b| b).count();
            assert_eq!(n, usize::from(v != Variant::Full), "{v:?}");
        }
        assert!(Variant::NoMaskingTransform.apply(&base).validate().is_ok());
    }
}
