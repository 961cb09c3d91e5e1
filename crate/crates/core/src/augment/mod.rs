//! Training-table augmentation: knowledge-graph table synthesis (RDLTab),
//! label-wise token replacement (LWTR) and artificial equipment tags.

mod lwtr;
mod rdltab;
mod tag;

use serde::{Deserialize, Serialize};

pub use lwtr::{lwtr_augment, Lwtr};
pub use rdltab::{rdltab_augment, HeaderPools, RdlTab};
pub use tag::{acronym, generate_tag, looks_like_tag, TagPattern};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    /// Annotation-free columns copied from the original table.
    pub k: usize,
    /// Tables generated per original table.
    pub n_samples: usize,
    pub numeric_value_range: (f64, f64),
    /// Chance that a generated value is followed by a unit.
    pub uom_probability: f64,
    pub seed: u64,
    pub tag_pattern: TagPattern,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            k: 2,
            n_samples: 1,
            numeric_value_range: (0.0, 1000.0),
            uom_probability: 0.5,
            seed: 0,
            tag_pattern: TagPattern::default(),
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be at least 1".into()));
        }
        let (lo, hi) = self.numeric_value_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config("numeric_value_range must be a finite, non-empty interval".into()));
        }
        if !(0.0..=1.0).contains(&self.uom_probability) {
            return Err(Error::Config("uom_probability must lie in [0, 1]".into()));
        }
        self.tag_pattern.validate()
    }
}

/// Per-table seed for reproducible generation over a corpus.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = index.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    seed ^ (z ^ (z >> 31))
}
