//! Vehicle positions over time and the request snapshots derived from them.

mod csv_trace;
mod demand;
mod enb;
mod fcd;
mod synthetic;

use std::ops::Range;

use serde::Serialize;
use thiserror::Error;

pub use csv_trace::{emit_csv, parse_csv_trace};
pub use demand::{snapshot_at, DemandProfile};
pub use enb::place_enbs;
pub use fcd::parse_fcd;
pub use synthetic::{generate_synthetic, SyntheticParams};

use crate::model::{Point, VehicleId};
use crate::scalar::Real;

/// One vehicle position at one instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct TraceSample<T> {
    pub time: T,
    pub vehicle_id: VehicleId,
    pub position: Point<T>,
    pub speed: Option<T>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: malformed XML: {message}")]
    MalformedXml { line: usize, message: String },
    #[error("line {line}: <{element}> lacks attribute '{attribute}'")]
    MissingAttribute {
        line: usize,
        element: String,
        attribute: String,
    },
    #[error("line {line}: time {found} precedes {previous}")]
    NonMonotonicTime { line: usize, previous: f64, found: f64 },
    #[error("line {line}: malformed row: {message}")]
    MalformedRow { line: usize, message: String },
    #[error("trace I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Time-ordered samples with an index of the distinct sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace<T> {
    samples: Vec<TraceSample<T>>,
    frames: Vec<(T, Range<usize>)>,
    end: T,
}

/// Two sample times closer than this are the same frame.
const TIME_EPS: f64 = 1e-6;

impl<T: Real> Trace<T> {
    /// Indexes `samples`, which must already be in non-decreasing time order.
    pub fn new(samples: Vec<TraceSample<T>>) -> Result<Self, TraceError> {
        let eps = T::lit(TIME_EPS);
        let mut frames: Vec<(T, Range<usize>)> = Vec::new();
        for (k, s) in samples.iter().enumerate() {
            match frames.last_mut() {
                Some((t, range)) if (s.time - *t).abs() <= eps => range.end = k + 1,
                Some((t, _)) if s.time < *t => {
                    return Err(TraceError::NonMonotonicTime {
                        line: k + 1,
                        previous: t.as_f64(),
                        found: s.time.as_f64(),
                    })
                }
                _ => frames.push((s.time, k..k + 1)),
            }
        }
        let end = frames.last().map_or(T::zero(), |(t, _)| *t);
        Ok(Trace { samples, frames, end })
    }

    /// Declares the trace to span up to `end` even if the last frames are empty.
    pub fn with_end(mut self, end: T) -> Self {
        self.end = self.end.max(end);
        self
    }

    pub fn samples(&self) -> &[TraceSample<T>] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<TraceSample<T>> {
        self.samples
    }

    pub fn end_time(&self) -> T {
        self.end
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Samples recorded at `time`; empty if none.
    pub fn at(&self, time: T) -> &[TraceSample<T>] {
        let eps = T::lit(TIME_EPS);
        let k = self.frames.partition_point(|(t, _)| *t < time - eps);
        match self.frames.get(k) {
            Some((t, range)) if (*t - time).abs() <= eps => &self.samples[range.clone()],
            _ => &[],
        }
    }

    /// Distinct vehicle ids in order of first appearance.
    pub fn vehicle_ids(&self) -> Vec<VehicleId> {
        let mut seen = std::collections::BTreeSet::new();
        self.samples
            .iter()
            .filter(|s| seen.insert(&s.vehicle_id))
            .map(|s| s.vehicle_id.clone())
            .collect()
    }
}
