//! Electrode placement on the 9×9 scalp grid.
//!
//! Layout files are JSON: `{"name", "version", "channels": [[label, row, col], ...]}`
//! with channels listed in recording order. Two layouts ship with the crate:
//! `deap32` (Geneva ordering of the DEAP recordings) and `dreamer14` (Emotiv EPOC
//! ordering of DREAMER), both placed by the 10-20 system.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};

pub const GRID: usize = 9;

const DEAP32: &str = include_str!("../../layouts/deap32.json");
const DREAMER14: &str = include_str!("../../layouts/dreamer14.json");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElectrodeLayout {
    pub name: String,
    #[serde(default = "default_version")]
    pub version: u32,
    pub channels: Vec<(String, usize, usize)>,
}

fn default_version() -> u32 {
    1
}

impl ElectrodeLayout {
    /// Validates distinct, in-range positions.
    pub fn new(name: impl Into<String>, channels: Vec<(String, usize, usize)>) -> Result<Self> {
        let layout = Self { name: name.into(), version: 1, channels };
        layout.validate()?;
        Ok(layout)
    }

    pub fn deap32() -> Self {
        serde_json::from_str(DEAP32).expect("bundled deap32 layout parses")
    }

    pub fn dreamer14() -> Self {
        serde_json::from_str(DREAMER14).expect("bundled dreamer14 layout parses")
    }

    /// A bundled layout by name, or a layout file when `name` is a path.
    pub fn resolve(name: &str) -> Result<Self> {
        match name {
            "deap32" | "deap" => Ok(Self::deap32()),
            "dreamer14" | "dreamer" => Ok(Self::dreamer14()),
            other if Path::new(other).is_file() => Self::from_file(Path::new(other)),
            other => Err(Error::Config(format!("unknown electrode layout `{other}`"))),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).at(path)?;
        let layout: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("layout {}: {e}", path.display())))?;
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (label, r, c) in &self.channels {
            if *r >= GRID || *c >= GRID {
                return Err(Error::Config(format!("layout {}: {label} at ({r},{c}) is off the grid", self.name)));
            }
            if !seen.insert((*r, *c)) {
                return Err(Error::Config(format!("layout {}: duplicate position ({r},{c}) for {label}", self.name)));
            }
        }
        Ok(())
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.channels.iter().map(|(_, r, c)| (*r, *c))
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.positions().any(|p| p == (row, col))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_layouts_are_valid() {
        let deap = ElectrodeLayout::deap32();
        deap.validate().unwrap();
        assert_eq!(deap.channel_count(), 32);
        let dreamer = ElectrodeLayout::dreamer14();
        dreamer.validate().unwrap();
        assert_eq!(dreamer.channel_count(), 14);
    }

    #[test]
    fn dreamer_positions_are_a_subset_of_deap() {
        let deap = ElectrodeLayout::deap32();
        for (label, r, c) in ElectrodeLayout::dreamer14().channels {
            let same = deap.channels.iter().find(|(l, ..)| *l == label).expect("shared label");
            assert_eq!((same.1, same.2), (r, c), "{label}");
        }
    }

    #[test]
    fn duplicate_position_is_a_configuration_error() {
        let err = ElectrodeLayout::new("bad", vec![("A".into(), 1, 1), ("B".into(), 1, 1)]).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(ElectrodeLayout::new("bad", vec![("A".into(), 9, 0)]).is_err());
    }
}
