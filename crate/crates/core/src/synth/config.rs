use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::people::Archetype;
use crate::features::{Catalog, Derivation, FeatureCatalogEntry, Subject};
use crate::{Error, Result};

/// Shape applied to a term's raw value before scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Transform {
    #[default]
    Identity,
    Log1p,
    Sqrt,
    /// 1 when the value is at least `at`.
    Step { at: f64 },
    /// max(0, value - at).
    Hinge { at: f64 },
}

impl Transform {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Transform::Identity => v,
            Transform::Log1p => v.max(0.0).ln_1p(),
            Transform::Sqrt => v.max(0.0).sqrt(),
            Transform::Step { at } => f64::from(v >= at),
            Transform::Hinge { at } => (v - at).max(0.0),
        }
    }
}

fn one() -> f64 {
    1.0
}

/// `coef * prod(transform(feature)) / scale`. A single feature gives a main
/// effect; several give an interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub features: Vec<String>,
    pub coef: f64,
    #[serde(default)]
    pub transform: Transform,
    #[serde(default = "one")]
    pub scale: f64,
}

impl Term {
    pub fn eval(&self, values: &[f64]) -> f64 {
        self.coef * values.iter().map(|&v| self.transform.apply(v)).product::<f64>() / self.scale
    }
}

fn default_mix() -> BTreeMap<Archetype, f64> {
    BTreeMap::from([
        (Archetype::Disability, 0.04),
        (Archetype::Migrant, 0.56),
        (Archetype::YoungUnemployed, 0.21),
        (Archetype::Parent, 0.19),
    ])
}

fn default_history() -> i32 {
    2011
}

fn default_parents() -> f64 {
    0.3
}

fn default_calibration() -> usize {
    40_000
}

/// Synthetic cohort recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    #[serde(default)]
    pub version: String,
    pub n_persons: usize,
    pub seed: u64,
    /// Share of people with outcome exactly 0.
    pub p0: f64,
    /// Share with outcome exactly 1.
    pub p1: f64,
    /// Standard deviation of the latent noise.
    pub noise: f64,
    /// Interior outcomes are `u^interior_power` for `u` uniform-ish on (0, 1).
    #[serde(default = "one")]
    pub interior_power: f64,
    #[serde(default = "default_mix")]
    pub archetype_mix: BTreeMap<Archetype, f64>,
    pub terms: Vec<Term>,
    #[serde(default)]
    pub intercept: f64,
    /// First year of generated payment history.
    #[serde(default = "default_history")]
    pub history_from: i32,
    /// Share of people with linked parent records.
    #[serde(default = "default_parents")]
    pub parent_link_share: f64,
    /// Draws used to place the point-mass thresholds.
    #[serde(default = "default_calibration")]
    pub calibration_draws: usize,
    /// Stored ceiling for this recipe, if computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_r2: Option<f64>,
}

impl DgpConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: DgpConfig = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Self::from_json(&text)
    }

    /// The bundled reference recipe.
    pub fn paperlike() -> Self {
        Self::from_json(include_str!("../../data/paperlike-v1.json")).expect("bundled recipe is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_persons == 0 {
            return bad("n_persons must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.p0) || !(0.0..=1.0).contains(&self.p1) || self.p0 + self.p1 > 1.0 + 1e-12 {
            return bad(format!("point masses p0={} p1={} are not feasible", self.p0, self.p1));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise must be a non-negative number, got {}", self.noise));
        }
        if !(self.interior_power > 0.0 && self.interior_power.is_finite()) {
            return bad(format!("interior_power must be positive, got {}", self.interior_power));
        }
        if self.archetype_mix.values().any(|&w| !(w >= 0.0)) || self.archetype_mix.values().sum::<f64>() <= 0.0 {
            return bad("archetype_mix needs non-negative weights with a positive total".into());
        }
        if !(0.0..=1.0).contains(&self.parent_link_share) {
            return bad("parent_link_share must lie in [0, 1]".into());
        }
        if !(2000..=2014).contains(&self.history_from) {
            return bad(format!("history_from {} outside 2000-2014", self.history_from));
        }
        if self.calibration_draws < 100 {
            return bad("calibration_draws must be at least 100".into());
        }
        for t in &self.terms {
            if t.features.is_empty() || t.scale == 0.0 || !t.coef.is_finite() {
                return bad(format!("malformed term {:?}", t.features));
            }
        }
        self.term_catalog().map(|_| ())
    }

    /// Shares of the four archetypes, normalised.
    pub fn mix(&self) -> Vec<(Archetype, f64)> {
        let total: f64 = self.archetype_mix.values().sum();
        Archetype::ALL
            .iter()
            .map(|a| (*a, self.archetype_mix.get(a).copied().unwrap_or(0.0) / total))
            .collect()
    }

    /// Shipped entries the terms read, plus whatever those entries reference,
    /// in shipped order.
    pub fn term_catalog(&self) -> Result<Catalog> {
        let shipped = Catalog::shipped();
        let mut keep = vec![false; shipped.len()];
        let mut stack: Vec<String> = self.terms.iter().flat_map(|t| t.features.clone()).collect();
        while let Some(name) = stack.pop() {
            let i = shipped
                .position(&name)
                .ok_or_else(|| Error::Config(format!("term feature {name:?} is not in the shipped catalog")))?;
            if keep[i] {
                continue;
            }
            let e = &shipped.entries()[i];
            if let Derivation::EverIndicator { subject, .. } = &e.derivation {
                if *subject != Subject::Own {
                    return Err(Error::Config(format!("term feature {name:?} depends on linked parents")));
                }
            }
            keep[i] = true;
            stack.extend(e.derivation.references().into_iter().map(String::from));
        }
        let entries: Vec<FeatureCatalogEntry> = shipped
            .entries()
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(e, _)| e.clone())
            .collect();
        if entries.is_empty() {
            // constant index; keep one cheap entry so the catalog is non-empty
            let e = shipped.get("p_female").expect("shipped sex indicator").clone();
            return Catalog::new(format!("{}-terms", self.version), vec![e]);
        }
        Catalog::new(format!("{}-terms", self.version), entries)
    }
}
