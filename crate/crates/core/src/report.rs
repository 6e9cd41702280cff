//! Structured reports shared by all checkers.
//!
//! Reports serialize to a JSON tree. Witness vectors are written as decimal
//! triples; qutrit bases as triples of `[re, im]` pairs.

use serde::Serialize;

use crate::qubit::{BlochVector, Effect};

/// What a checker found at its worst sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessData {
    /// Bloch vectors of the rank-1 projectors involved.
    Vectors { vectors: Vec<BlochVector> },
    /// Effects whose sum broke additivity, as `(e0, e)` pairs.
    Effects { effects: Vec<Effect> },
    /// An orthonormal qutrit basis; each vector is three `[re, im]` pairs.
    ComplexBasis { basis: Vec<[[f64; 2]; 3]> },
    /// Two `(weight, vector)` decompositions of one effect and their scores.
    Decompositions {
        first: Vec<(f64, BlochVector)>,
        second: Vec<(f64, BlochVector)>,
        effect: Effect,
        probabilities: [f64; 2],
    },
    /// Real vectors of arbitrary dimension.
    RealVectors { vectors: Vec<Vec<f64>> },
}

/// Outcome of a sampled property check. `pass` holds iff `max_violation ≤ tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub property: String,
    pub samples: usize,
    pub seed: u64,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessData>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl PropertyReport {
    pub fn new(
        property: impl Into<String>,
        samples: usize,
        seed: u64,
        max_violation: f64,
        tolerance: f64,
        witness: Option<WitnessData>,
    ) -> Self {
        Self {
            property: property.into(),
            samples,
            seed,
            max_violation,
            tolerance,
            pass: max_violation <= tolerance,
            witness,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Running maximum with the witness that produced it. Ties keep the earlier
/// entry so merges in block order are deterministic.
#[derive(Debug, Clone)]
pub(crate) struct MaxTracker<W> {
    pub value: f64,
    pub witness: Option<W>,
}

impl<W> Default for MaxTracker<W> {
    fn default() -> Self {
        Self { value: 0.0, witness: None }
    }
}

impl<W> MaxTracker<W> {
    pub fn offer(&mut self, value: f64, witness: impl FnOnce() -> W) {
        // NaN always wins so that it surfaces in the report
        if value > self.value || (value.is_nan() && !self.value.is_nan()) {
            self.value = value;
            self.witness = Some(witness());
        }
    }

    pub fn merge(&mut self, other: MaxTracker<W>) {
        if other.value > self.value || (other.value.is_nan() && !self.value.is_nan()) {
            *self = other;
        }
    }
}

/// Pretty-printed JSON for any report.
pub fn to_json<T: Serialize>(report: &T) -> String {
    serde_json::to_string_pretty(report).expect("reports contain only serializable data")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_tracks_tolerance() {
        assert!(PropertyReport::new("p", 1, 0, 1e-13, 1e-12, None).pass);
        assert!(!PropertyReport::new("p", 1, 0, 2e-12, 1e-12, None).pass);
        assert!(!PropertyReport::new("p", 1, 0, f64::NAN, 1e-12, None).pass);
    }

    #[test]
    fn json_layout() {
        let report = PropertyReport::new(
            "complement_rule",
            10,
            42,
            0.5,
            1e-12,
            Some(WitnessData::Vectors { vectors: vec![BlochVector::Z, -BlochVector::Z] }),
        );
        let value: serde_json::Value = serde_json::from_str(&to_json(&report)).unwrap();
        assert_eq!(value["property"], "complement_rule");
        assert_eq!(value["seed"], 42);
        assert_eq!(value["pass"], false);
        assert_eq!(value["witness"]["kind"], "vectors");
        assert_eq!(value["witness"]["vectors"][1], serde_json::json!([-0.0, -0.0, -1.0]));
        assert!(value.get("note").is_none());
    }

    #[test]
    fn tracker_keeps_first_of_ties_and_surfaces_nan() {
        let mut t = MaxTracker::default();
        t.offer(1.0, || "a");
        t.offer(1.0, || "b");
        assert_eq!(t.witness, Some("a"));
        t.offer(f64::NAN, || "nan");
        assert_eq!(t.witness, Some("nan"));
        t.offer(5.0, || "c");
        assert_eq!(t.witness, Some("nan"));
    }
}
