//! Per-agent behavior trace: the detector's only input besides the key.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::behavior::BehaviorCatalog;
use crate::error::{Error, Result};
use crate::guidance::WatermarkKey;
use crate::persona::Persona;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub agent: Persona,
    pub catalog: BehaviorCatalog,
    pub watermarked: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<WatermarkKey>,
    pub sampler_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub round: u64,
    pub event_text: String,
    /// Generator distribution after normalization, before any bias.
    pub raw_distribution: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub biased_distribution: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guided_indices: Option<Vec<usize>>,
    pub selected: String,
    pub action_text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Checks rounds run 1..=N and that watermark fields appear exactly when
    /// the trace is marked watermarked.
    pub fn validate(&self) -> Result<()> {
        check_contiguous(&self.records)?;
        for r in &self.records {
            self.header.catalog.index_of(&r.selected)?;
            let wm_fields = r.biased_distribution.is_some() && r.guided_indices.is_some();
            let none = r.biased_distribution.is_none() && r.guided_indices.is_none();
            if (self.header.watermarked && !wm_fields) || (!self.header.watermarked && !none) {
                return Err(Error::InvalidConfig(
                    "watermark fields must be present exactly when the trace is watermarked",
                ));
            }
        }
        Ok(())
    }
}

pub(crate) fn check_contiguous(records: &[TraceRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::NonContiguousRounds {
            expected: 1,
            found: None,
        });
    }
    for (i, r) in records.iter().enumerate() {
        let expected = i as u64 + 1;
        if r.round != expected {
            return Err(Error::NonContiguousRounds {
                expected,
                found: Some(r.round),
            });
        }
    }
    Ok(())
}
