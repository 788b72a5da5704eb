//! JSON report records shared by the verifiers.

use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub points_tested: usize,
    pub max_residual: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Failure locations kept per check; the count is always in `points_tested`.
const MAX_FAILURES: usize = 16;

impl CheckReport {
    pub fn new(check: &str) -> Self {
        CheckReport {
            check: check.to_string(),
            points_tested: 0,
            max_residual: 0.0,
            pass: true,
            failures: Vec::new(),
            witness: None,
            note: None,
        }
    }

    /// Residual-below-tolerance check over points.
    pub fn from_residuals<I>(check: &str, tol: f64, samples: I) -> Self
    where
        I: IntoIterator<Item = (Vec<f64>, f64)>,
    {
        let mut r = CheckReport::new(check);
        for (p, res) in samples {
            r.record(p, res, res < tol);
        }
        r
    }

    pub fn record(&mut self, p: Vec<f64>, residual: f64, ok: bool) {
        self.points_tested += 1;
        if residual.is_nan() || residual > self.max_residual {
            self.max_residual = residual;
        }
        if !ok {
            self.pass = false;
            if self.failures.len() < MAX_FAILURES {
                self.failures.push(p);
            }
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn merge(mut self, other: CheckReport) -> Self {
        self.points_tested += other.points_tested;
        if other.max_residual > self.max_residual || other.max_residual.is_nan() {
            self.max_residual = other.max_residual;
        }
        self.pass &= other.pass;
        for f in other.failures {
            if self.failures.len() < MAX_FAILURES {
                self.failures.push(f);
            }
        }
        self.witness = self.witness.or(other.witness);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_field_names() {
        let r = CheckReport::from_residuals("x", 1.0, [(vec![0.0], 0.5)]);
        let v = serde_json::to_value(&r).unwrap();
        for k in ["check", "points_tested", "max_residual", "pass"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        assert!(v.get("failures").is_none());
    }

    #[test]
    fn merge_is_conjunctive() {
        let a = CheckReport::from_residuals("x", 1.0, [(vec![0.0], 0.5)]);
        let b = CheckReport::from_residuals("x", 1.0, [(vec![1.0], 2.0)]);
        let m = a.merge(b);
        assert!(!m.pass);
        assert_eq!(m.points_tested, 2);
        assert_eq!(m.max_residual, 2.0);
        assert_eq!(m.failures, vec![vec![1.0]]);
    }
}
