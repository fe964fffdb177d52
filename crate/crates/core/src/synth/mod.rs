//! Synthetic cohorts with a planted outcome model.
//!
//! Each person gets a payment, activity and demographic history drawn from
//! one of four archetypes. A latent index is computed from features the
//! shipped catalog derives from that history, noise is added, and the result
//! is mapped to a share of days in 2015-2018 with point masses at 0 and 1.
//! Outcome-window spells are then laid down so the recorded coverage equals
//! that share exactly. The per-person conditional mean of the outcome is
//! kept as the truth, so every fitted model has a known ceiling.

mod config;
mod io;
mod people;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use config::{DgpConfig, Term, Transform};
pub use io::{write_synth, write_truth, SYNTH_FILES};
pub use people::{place, Archetype};

use crate::data::{date, Cohort, PersonHistory};
use crate::features::{derive_person, Catalog};
use crate::learners::norm_cdf;
use crate::seed::{self, tag};
use crate::{par, Result};
use people::{parent_history, PersonGen};

/// Days in the outcome window.
pub const OUTCOME_DAYS: i64 = 1461;

/// Latent cut points: `z <= t0` gives 0 and `z >= t1` gives 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub t0: f64,
    pub t1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub person_id: String,
    pub archetype: Archetype,
    /// Noise-free latent index.
    pub index: f64,
    /// Conditional mean of the outcome given the index.
    pub truth: f64,
    /// Realised outcome.
    pub target: f64,
}

#[derive(Debug, Clone)]
pub struct SynthCohort {
    pub cohort: Cohort,
    pub truth: Vec<TruthRecord>,
    pub thresholds: Thresholds,
}

impl SynthCohort {
    pub fn targets(&self) -> Vec<f64> {
        self.truth.iter().map(|t| t.target).collect()
    }

    pub fn truths(&self) -> Vec<f64> {
        self.truth.iter().map(|t| t.truth).collect()
    }
}

fn quantize(v: f64) -> f64 {
    (v.clamp(0.0, 1.0) * OUTCOME_DAYS as f64).round() / OUTCOME_DAYS as f64
}

/// Outcome share for latent value `z`.
pub fn outcome_of(z: f64, th: Thresholds, power: f64) -> f64 {
    let w = th.t1 - th.t0;
    if w <= 0.0 {
        return f64::from(z > th.t0);
    }
    let u = ((z - th.t0) / w).clamp(0.0, 1.0);
    quantize(if power == 1.0 { u } else { u.powf(power) })
}

fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// E[outcome | index] when `z = index + N(0, noise^2)`.
pub fn conditional_mean(index: f64, noise: f64, th: Thresholds, power: f64) -> f64 {
    if noise == 0.0 {
        return outcome_of(index, th, power);
    }
    let w = th.t1 - th.t0;
    if w <= 0.0 {
        return norm_cdf((index - th.t0) / noise);
    }
    let m = (index - th.t0) / w;
    let s = noise / w;
    if power == 1.0 {
        // E[clip(u, 0, 1)] for u ~ N(m, s^2)
        let g = |a: f64| a * norm_cdf(a / s) + s * norm_pdf(a / s);
        return (g(m) - g(m - 1.0)).clamp(0.0, 1.0);
    }
    // E[round(D clip(u)^p) / D] = (1/D) sum_k P(clip(u)^p >= (k - 1/2) / D)
    let d = OUTCOME_DAYS as f64;
    (1..=OUTCOME_DAYS)
        .map(|k| norm_cdf((m - ((k as f64 - 0.5) / d).powf(1.0 / power)) / s))
        .sum::<f64>()
        / d
}

struct Draw {
    history: PersonHistory,
    parents: Vec<(PersonHistory, &'static str)>,
    archetype: Archetype,
    index: f64,
    z: f64,
    target: Option<f64>,
}

struct Ctx<'a> {
    cfg: &'a DgpConfig,
    catalog: &'a Catalog,
    mix: Vec<(Archetype, f64)>,
}

impl Ctx<'_> {
    fn index(&self, h: &PersonHistory) -> f64 {
        let values = derive_person(self.catalog, h, None);
        let get = |name: &str| {
            self.catalog
                .position(name)
                .and_then(|i| values[i])
                .unwrap_or(0.0)
        };
        self.cfg.intercept
            + self
                .cfg
                .terms
                .iter()
                .map(|t| {
                    let v: Vec<f64> = t.features.iter().map(|f| get(f)).collect();
                    t.eval(&v)
                })
                .sum::<f64>()
    }

    fn draw(&self, stream: u64, i: usize, th: Option<Thresholds>, with_parents: bool) -> Draw {
        let cfg = self.cfg;
        let mut rng = seed::rng(cfg.seed, &[stream, i as u64]);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut archetype = self.mix[self.mix.len() - 1].0;
        for &(a, w) in &self.mix {
            acc += w;
            if u < acc {
                archetype = a;
                break;
            }
        }
        let id = format!("P{:07}", i + 1);
        let mut g = PersonGen::new(&mut rng, id.clone(), archetype, cfg.history_from);
        g.demographics();
        g.residence();
        g.relationship();
        let kids = g.children();
        g.housing();
        let cov = g.payments();
        g.supplements(cov > 0.0, kids);
        g.employment();
        g.compliance(cov > 0.0);
        g.study();
        g.sort();
        let index = self.index(&g.h);
        let eps: f64 = StandardNormal.sample(g.rng);
        let z = index + cfg.noise * eps;
        let mut target = None;
        if let Some(th) = th {
            let y = outcome_of(z, th, cfg.interior_power);
            let days = (y * OUTCOME_DAYS as f64).round() as i64;
            let pieces = if days == OUTCOME_DAYS { 1 } else { 1 + g.rng.random_range(0..3) };
            let first = date(2015, 1, 1);
            for (a, b) in place(g.rng, days, OUTCOME_DAYS, pieces) {
                let code = g.outcome_code();
                g.spell_public(
                    code,
                    first + chrono::Duration::days(a),
                    first + chrono::Duration::days(b),
                );
            }
            target = Some(y);
        }
        let nu = g.latent.propensity;
        let age = g.latent.age;
        let history = g.finish();
        let mut parents = Vec::new();
        if with_parents && rng.random::<f64>() < cfg.parent_link_share {
            let both = rng.random::<f64>() < 0.6;
            let mother_only = !both && rng.random::<f64>() < 0.7;
            if both || mother_only {
                parents.push((parent_history(&mut rng, format!("{id}M"), "mother", age, nu), "mother"));
            }
            if both || !mother_only {
                parents.push((parent_history(&mut rng, format!("{id}F"), "father", age, nu), "father"));
            }
        }
        Draw {
            history,
            parents,
            archetype,
            index,
            z,
            target,
        }
    }
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Place the cut points so the point masses match `p0` and `p1` on an
/// independent calibration sample.
pub fn calibrate(cfg: &DgpConfig) -> Result<Thresholds> {
    cfg.validate()?;
    let catalog = cfg.term_catalog()?;
    let ctx = Ctx {
        cfg,
        catalog: &catalog,
        mix: cfg.mix(),
    };
    Ok(calibrate_with(&ctx))
}

fn calibrate_with(ctx: &Ctx<'_>) -> Thresholds {
    let stream = tag("calibration");
    let mut z = par::map_range(ctx.cfg.calibration_draws, |i| ctx.draw(stream, i, None, false).z);
    z.sort_by(f64::total_cmp);
    let t0 = quantile(&z, ctx.cfg.p0);
    let t1 = quantile(&z, 1.0 - ctx.cfg.p1).max(t0);
    Thresholds { t0, t1 }
}

/// Draw a cohort. Deterministic in `cfg` (including its seed).
pub fn generate(cfg: &DgpConfig) -> Result<SynthCohort> {
    cfg.validate()?;
    let catalog = cfg.term_catalog()?;
    let ctx = Ctx {
        cfg,
        catalog: &catalog,
        mix: cfg.mix(),
    };
    let th = calibrate_with(&ctx);
    let stream = tag("person");
    let draws = par::map_range(cfg.n_persons, |i| ctx.draw(stream, i, Some(th), true));
    let mut cohort = Cohort::default();
    let mut truth = Vec::with_capacity(draws.len());
    for d in draws {
        let id = d.history.person_id.clone();
        truth.push(TruthRecord {
            person_id: id.clone(),
            archetype: d.archetype,
            index: d.index,
            truth: conditional_mean(d.index, cfg.noise, th, cfg.interior_power),
            target: d.target.expect("outcome drawn"),
        });
        for (p, role) in d.parents {
            cohort
                .parent_links
                .entry(id.clone())
                .or_default()
                .push((p.person_id.clone(), role.to_string()));
            cohort.others.insert(p.person_id.clone(), p);
        }
        cohort.persons.push(d.history);
    }
    Ok(SynthCohort {
        cohort,
        truth,
        thresholds: th,
    })
}

/// Monte-Carlo ceiling on R²: var(truth) / var(outcome) over `draws`
/// fresh people.
pub fn oracle_r2(cfg: &DgpConfig, draws: usize) -> Result<f64> {
    cfg.validate()?;
    if draws < 2 {
        return Err(crate::Error::invalid("oracle_r2 needs at least two draws"));
    }
    let catalog = cfg.term_catalog()?;
    let ctx = Ctx {
        cfg,
        catalog: &catalog,
        mix: cfg.mix(),
    };
    let th = calibrate_with(&ctx);
    let stream = tag("oracle");
    let pairs = par::map_range(draws, |i| {
        let d = ctx.draw(stream, i, None, false);
        (
            conditional_mean(d.index, cfg.noise, th, cfg.interior_power),
            outcome_of(d.z, th, cfg.interior_power),
        )
    });
    let var = |v: &mut dyn Iterator<Item = f64>| {
        let xs: Vec<f64> = v.collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
    };
    let vt = var(&mut pairs.iter().map(|p| p.0));
    let vy = var(&mut pairs.iter().map(|p| p.1));
    if vy == 0.0 {
        return Ok(1.0);
    }
    Ok(vt / vy)
}
