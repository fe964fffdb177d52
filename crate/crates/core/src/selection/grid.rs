use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    #[default]
    Geometric,
}

/// Values of one hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    List(Vec<f64>),
    Range {
        min: f64,
        max: f64,
        count: usize,
        #[serde(default)]
        spacing: Spacing,
    },
    /// Geometric from a data-dependent reference value (the smallest lambda
    /// with an empty LASSO support) down to `min_ratio` times it.
    Relative { min_ratio: f64, count: usize },
}

fn spaced(min: f64, max: f64, count: usize, spacing: Spacing) -> Vec<f64> {
    if count == 1 {
        return vec![min];
    }
    let step = |i: usize| i as f64 / (count - 1) as f64;
    match spacing {
        Spacing::Linear => (0..count).map(|i| min + (max - min) * step(i)).collect(),
        Spacing::Geometric => {
            let (a, b) = (min.ln(), max.ln());
            (0..count)
                .map(|i| match i {
                    0 => min,
                    i if i == count - 1 => max,
                    i => (a + (b - a) * step(i)).exp(),
                })
                .collect()
        }
    }
}

impl Axis {
    pub fn validate(&self, name: &str) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("grid axis {name}: {m}")));
        match *self {
            Axis::List(ref v) => {
                if v.is_empty() {
                    return bad("empty value list".into());
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return bad("non-finite value".into());
                }
            }
            Axis::Range {
                min,
                max,
                count,
                spacing,
            } => {
                if count < 1 {
                    return bad("count must be at least 1".into());
                }
                if !(min.is_finite() && max.is_finite() && min <= max) {
                    return bad(format!("need finite min <= max, got {min} and {max}"));
                }
                if spacing == Spacing::Geometric && min <= 0.0 {
                    return bad("geometric spacing needs min > 0".into());
                }
            }
            Axis::Relative { min_ratio, count } => {
                if count < 1 {
                    return bad("count must be at least 1".into());
                }
                if !(min_ratio > 0.0 && min_ratio <= 1.0) {
                    return bad(format!("min_ratio must lie in (0, 1], got {min_ratio}"));
                }
            }
        }
        Ok(())
    }

    /// Ascending, deduplicated values. `reference` is required by
    /// [`Axis::Relative`].
    pub fn values(&self, reference: Option<f64>) -> Result<Vec<f64>> {
        let mut v = match *self {
            Axis::List(ref v) => v.clone(),
            Axis::Range {
                min,
                max,
                count,
                spacing,
            } => spaced(min, max, count, spacing),
            Axis::Relative { min_ratio, count } => {
                let r = reference.ok_or_else(|| Error::Config("relative grid axis without a reference value".into()))?;
                if !(r > 0.0) {
                    return Err(Error::invalid(format!("relative grid reference must be positive, got {r}")));
                }
                spaced(r * min_ratio, r, count, Spacing::Geometric)
            }
        };
        v.sort_by(f64::total_cmp);
        v.dedup();
        Ok(v)
    }

    /// Values that must be whole numbers (split and tree counts).
    pub fn integer_values(&self, name: &str) -> Result<Vec<usize>> {
        let v = self.values(None)?;
        let mut out: Vec<usize> = Vec::with_capacity(v.len());
        for x in v {
            let r = x.round();
            if r < 1.0 || (x - r).abs() > 1e-9 {
                return Err(Error::Config(format!("grid axis {name} needs whole numbers >= 1, got {x}")));
            }
            out.push(r as usize);
        }
        out.dedup();
        Ok(out)
    }
}

/// Hyperparameter grid: one axis per named parameter.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridSpec(pub BTreeMap<String, Axis>);

impl GridSpec {
    pub fn axis(&self, name: &str) -> Option<&Axis> {
        self.0.get(name)
    }

    /// Check axes and reject parameters the learner does not take.
    pub fn validate_for(&self, learner: &str, allowed: &[&str]) -> Result<()> {
        for (name, axis) in &self.0 {
            if !allowed.contains(&name.as_str()) {
                return Err(Error::Config(format!(
                    "{learner} has no hyperparameter {name:?} (expected one of {allowed:?})"
                )));
            }
            axis.validate(name)?;
        }
        Ok(())
    }
}
