//! Declarative model ladders.
//!
//! A ladder is an ordered list of entries. Each entry names a learner, its
//! inputs (catalog groups, explicit columns, top predictors of an earlier
//! entry, optional pairwise interactions), a hyperparameter grid, and
//! optionally its own outcome and sample filter. Entries run in order on a
//! shared train/holdout split; ensembles stack earlier entries.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::cv::{boosting_seed, cv_gbt, cv_lasso, cv_svr, fixed_values, lasso_grid, CvResult, FoldMoments, LearnerSpec};
use super::grid::GridSpec;
use super::metrics::{EvalReport, Sample, DEFAULT_BOOTSTRAP};
use super::split::SplitPlan;
use crate::data::{outcome_proportion, Cohort, ObservationWindow, PaymentFilter};
use crate::error::{Error, Result};
use crate::features::{expand_interactions, FeatureMatrix};
use crate::learners::{
    assemble_svr, fit_standardized, fractional_probit_fit, gbt_fit_rows, kernel_from_distances, ols_fit,
    post_lasso_ols, solve_dual, stack_ensemble, Binned, GbtParams, StackedModel, Standardized,
    SubsampleRecord, SvrHyperParams, SvrOptions, TrainedModel,
};
use crate::linalg::Matrix;
use crate::seed;

/// Number of ranked predictors kept in a report entry.
pub const REPORTED_PREDICTORS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopRef {
    pub entry: String,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inputs {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub columns: Vec<String>,
    /// Top-ranked predictors of earlier entries.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub top: Vec<TopRef>,
    /// Add all pairwise products of an earlier entry's top predictors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interactions: Option<TopRef>,
}

impl Inputs {
    fn is_empty(&self) -> bool {
        self.groups.is_empty() && self.columns.is_empty() && self.top.is_empty() && self.interactions.is_none()
    }

    fn describe(&self) -> String {
        let mut parts: Vec<String> = self.groups.clone();
        if !self.columns.is_empty() {
            parts.push(self.columns.join(", "));
        }
        for t in &self.top {
            parts.push(format!("top {} of {}", t.count, t.entry));
        }
        if let Some(t) = &self.interactions {
            parts.push(format!("interactions of top {} of {}", t.count, t.entry));
        }
        if parts.is_empty() {
            "constant".into()
        } else {
            parts.join(" + ")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleFilter {
    /// Drop people paid on every day of this window (e.g. `2011-2014`).
    pub exclude_always_on: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderEntry {
    pub name: String,
    /// Predictor description for reports; derived from the inputs if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub learner: LearnerSpec,
    #[serde(default)]
    pub inputs: Inputs,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleFilter>,
    /// `any-is` or `unemployment`; the run default if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<String>,
}

impl LadderEntry {
    pub fn predictors(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        match &self.learner {
            LearnerSpec::Ensemble { components } => components.join(" + "),
            _ => self.inputs.describe(),
        }
    }
}

fn default_ratio() -> f64 {
    0.8
}
fn default_boot() -> usize {
    DEFAULT_BOOTSTRAP
}
fn default_level() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    pub entries: Vec<LadderEntry>,
    #[serde(default = "default_ratio")]
    pub train_ratio: f64,
    #[serde(default = "default_boot")]
    pub n_bootstrap: usize,
    #[serde(default = "default_level")]
    pub level: f64,
}

/// Run-wide choices that entries may override.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LadderDefaults {
    pub outcome: String,
    pub exclude_always_on: Option<String>,
}

impl Default for LadderDefaults {
    fn default() -> Self {
        Self {
            outcome: "any-is".into(),
            exclude_always_on: None,
        }
    }
}

/// Bundled ladders by name.
pub const SHIPPED_LADDERS: [(&str, &str); 3] = [
    ("table2", include_str!("../../data/ladders/table2.json")),
    ("extensions", include_str!("../../data/ladders/extensions.json")),
    ("unemployment", include_str!("../../data/ladders/unemployment.json")),
];

impl Ladder {
    pub fn shipped(name: &str) -> Option<Self> {
        SHIPPED_LADDERS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, json)| Self::from_json(json).expect("bundled ladder is valid"))
    }

    /// Parse a ladder: either `{"entries": [...], ...}` or a bare entry list.
    pub fn from_json(s: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(s)?;
        let ladder: Ladder = if v.is_array() {
            Ladder {
                entries: serde_json::from_value(v)?,
                train_ratio: default_ratio(),
                n_bootstrap: default_boot(),
                level: default_level(),
            }
        } else {
            serde_json::from_value(v)?
        };
        ladder.validate()?;
        Ok(ladder)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.entries.is_empty() {
            return cfg("ladder has no entries".into());
        }
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return cfg(format!("train_ratio must lie in (0, 1), got {}", self.train_ratio));
        }
        if self.n_bootstrap < 100 {
            return cfg(format!("n_bootstrap must be at least 100, got {}", self.n_bootstrap));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return cfg(format!("level must lie in (0, 1), got {}", self.level));
        }
        let mut seen: HashMap<&str, &LadderEntry> = HashMap::new();
        for e in &self.entries {
            if seen.contains_key(e.name.as_str()) {
                return cfg(format!("duplicate ladder entry {:?}", e.name));
            }
            e.learner.validate_grid(&e.grid).map_err(|err| Error::Config(format!("entry {:?}: {err}", e.name)))?;
            let refs = e.inputs.top.iter().chain(&e.inputs.interactions);
            for r in refs {
                let Some(src) = seen.get(r.entry.as_str()) else {
                    return cfg(format!("entry {:?} refers to {:?}, which is not an earlier entry", e.name, r.entry));
                };
                if !matches!(src.learner, LearnerSpec::Ols | LearnerSpec::Lasso | LearnerSpec::Boosting { .. }) {
                    return cfg(format!(
                        "entry {:?}: {:?} is a {} model and has no predictor ranking",
                        e.name,
                        r.entry,
                        src.learner.name()
                    ));
                }
                if r.count == 0 {
                    return cfg(format!("entry {:?}: top count must be positive", e.name));
                }
            }
            if let Some(s) = &e.sample {
                ObservationWindow::parse(&s.exclude_always_on)?;
            }
            if let Some(o) = &e.outcome {
                PaymentFilter::parse_outcome(o)?;
            }
            if let LearnerSpec::Ensemble { components } = &e.learner {
                if components.is_empty() {
                    return cfg(format!("ensemble {:?} has no components", e.name));
                }
                if !e.inputs.is_empty() {
                    return cfg(format!("ensemble {:?} takes no inputs", e.name));
                }
                for c in components {
                    let Some(src) = seen.get(c.as_str()) else {
                        return cfg(format!("ensemble {:?} refers to {c:?}, which is not an earlier entry", e.name));
                    };
                    if src.outcome != e.outcome || src.sample != e.sample {
                        return cfg(format!("ensemble {:?} and component {c:?} differ in outcome or sample", e.name));
                    }
                }
            }
            seen.insert(&e.name, e);
        }
        Ok(())
    }

    /// Outcomes and exclusion windows the ladder needs under `d`.
    pub fn requirements(&self, d: &LadderDefaults) -> (Vec<String>, Vec<String>) {
        let mut outcomes: Vec<String> = Vec::new();
        let mut windows: Vec<String> = Vec::new();
        for e in &self.entries {
            let o = e.outcome.clone().unwrap_or_else(|| d.outcome.clone());
            if !outcomes.contains(&o) {
                outcomes.push(o);
            }
            if let Some(w) = resolve_filter(e, d) {
                if !windows.contains(&w) {
                    windows.push(w);
                }
            }
        }
        (outcomes, windows)
    }
}

fn resolve_filter(e: &LadderEntry, d: &LadderDefaults) -> Option<String> {
    e.sample
        .as_ref()
        .map(|s| s.exclude_always_on.clone())
        .or_else(|| d.exclude_always_on.clone())
}

/// Design matrix plus every outcome and exclusion mask a ladder needs,
/// aligned with the matrix rows.
pub struct LadderData<'a> {
    pub features: &'a FeatureMatrix,
    pub outcomes: BTreeMap<String, Vec<f64>>,
    /// window -> `true` for people paid on every day of it
    pub always_on: BTreeMap<String, Vec<bool>>,
}

impl<'a> LadderData<'a> {
    /// Compute outcomes and masks from the cohort. Every matrix row must be a
    /// sample member.
    pub fn from_cohort(features: &'a FeatureMatrix, cohort: &Cohort, outcomes: &[String], windows: &[String]) -> Result<Self> {
        let index: HashMap<&str, usize> = cohort
            .persons
            .iter()
            .enumerate()
            .map(|(i, h)| (h.person_id.as_str(), i))
            .collect();
        let rows: Vec<usize> = features
            .row_ids
            .iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::invalid(format!("feature row {id:?} is not in the cohort")))
            })
            .collect::<Result<_>>()?;
        let w = ObservationWindow::outcome();
        let mut out = BTreeMap::new();
        for o in outcomes {
            let filter = PaymentFilter::parse_outcome(o)?;
            let y = rows
                .iter()
                .map(|&i| outcome_proportion(&cohort.persons[i], &w, &filter))
                .collect::<Result<Vec<f64>>>()?;
            out.insert(o.clone(), y);
        }
        let mut masks = BTreeMap::new();
        for s in windows {
            let win = ObservationWindow::parse(s)?;
            let m = rows
                .iter()
                .map(|&i| Ok(outcome_proportion(&cohort.persons[i], &win, &PaymentFilter::AnyIs)? == 1.0))
                .collect::<Result<Vec<bool>>>()?;
            masks.insert(s.clone(), m);
        }
        Ok(Self {
            features,
            outcomes: out,
            always_on: masks,
        })
    }
}

/// One ladder row of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryReport {
    pub name: String,
    pub learner: String,
    pub predictors: String,
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclude_always_on: Option<String>,
    pub n_inputs: usize,
    pub n_train: usize,
    pub n_holdout: usize,
    /// Selected hyperparameters (empty for learners without a grid).
    pub selected: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv_mse: Option<f64>,
    pub grid_cells: usize,
    pub failed_cells: usize,
    pub train: EvalReport,
    pub holdout: EvalReport,
    /// LASSO support size or number of boosting inputs with influence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_selected: Option<usize>,
    /// Leading predictors with their coefficient or influence.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub importance: Vec<(String, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stack_weights: Option<Vec<f64>>,
}

/// Distribution of an outcome: point masses at 0 and 1 and 50 equal bins
/// over the open interval between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDensity {
    pub n: usize,
    pub zero: usize,
    pub one: usize,
    /// Counts of values in `((b-1)/50, b/50]`, the last bin open at 1.
    pub bins: Vec<usize>,
}

pub const DENSITY_BINS: usize = 50;

impl OutcomeDensity {
    pub fn of(y: &[f64]) -> Self {
        let mut d = OutcomeDensity {
            n: y.len(),
            zero: 0,
            one: 0,
            bins: vec![0; DENSITY_BINS],
        };
        for &v in y {
            if v <= 0.0 {
                d.zero += 1;
            } else if v >= 1.0 {
                d.one += 1;
            } else {
                let b = ((v * DENSITY_BINS as f64).ceil() as usize).clamp(1, DENSITY_BINS);
                d.bins[b - 1] += 1;
            }
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    pub seed: u64,
    pub n: usize,
    pub n_train: usize,
    pub n_holdout: usize,
    pub train_ratio: f64,
    pub n_bootstrap: usize,
    pub level: f64,
    pub outcomes: BTreeMap<String, OutcomeDensity>,
    pub entries: Vec<EntryReport>,
}

pub struct LadderOutput {
    pub report: LadderReport,
    /// Fitted models in ladder order.
    pub models: Vec<(String, TrainedModel)>,
}

struct Fitted {
    model: TrainedModel,
    train_pred: Vec<f64>,
    holdout_pred: Vec<f64>,
    ranking: Vec<(String, f64)>,
    outcome: String,
    filter: Option<String>,
}

fn ranking_of(model: &TrainedModel) -> (Vec<(String, f64)>, Option<usize>) {
    if let TrainedModel::Stacked(_) = model {
        return (Vec::new(), None);
    }
    let r = model.ranking();
    let n = match model {
        TrainedModel::SparseLinear(m) => Some(m.support_size()),
        TrainedModel::TreeEnsemble(_) => Some(r.len()),
        _ => None,
    };
    (r, n)
}

fn gather(y: &[f64], rows: &[usize]) -> Vec<f64> {
    rows.iter().map(|&i| y[i]).collect()
}

/// Fit every entry on the training rows of `plan` and evaluate it on the
/// holdout rows.
pub fn run_model_ladder(
    data: &LadderData<'_>,
    plan: &SplitPlan,
    ladder: &Ladder,
    defaults: &LadderDefaults,
    seed: u64,
) -> Result<LadderOutput> {
    ladder.validate()?;
    let fm = data.features;
    if plan.n != fm.n() {
        return Err(Error::LengthMismatch {
            left: plan.n,
            right: fm.n(),
        });
    }
    let mut fitted: Vec<(String, Fitted)> = Vec::new();
    let mut reports = Vec::new();
    for (idx, e) in ladder.entries.iter().enumerate() {
        let outcome = e.outcome.clone().unwrap_or_else(|| defaults.outcome.clone());
        let filter = resolve_filter(e, defaults);
        let y = data
            .outcomes
            .get(&outcome)
            .ok_or_else(|| Error::invalid(format!("outcome {outcome:?} was not computed")))?;
        let plan_e: Cow<SplitPlan> = match &filter {
            Some(w) => {
                let on = data
                    .always_on
                    .get(w)
                    .ok_or_else(|| Error::invalid(format!("exclusion window {w:?} was not computed")))?;
                let keep: Vec<bool> = on.iter().map(|a| !a).collect();
                Cow::Owned(plan.restrict(&keep))
            }
            None => Cow::Borrowed(plan),
        };
        if plan_e.train.len() < 2 * plan_e.n_folds || plan_e.holdout.is_empty() {
            return Err(Error::invalid(format!("entry {:?} has too few rows after filtering", e.name)));
        }
        let entry_seed = seed::derive(seed, &[seed::tag(&e.name)]);
        log::info!("ladder entry {} ({}): {} training rows", e.name, e.learner.name(), plan_e.train.len());
        let y_train = gather(y, &plan_e.train);
        let y_hold = gather(y, &plan_e.holdout);

        let (fit, cv, n_inputs) = if let LearnerSpec::Ensemble { components } = &e.learner {
            let parts: Vec<&Fitted> = components
                .iter()
                .map(|c| &fitted.iter().find(|(n, _)| n == c).unwrap().1)
                .collect();
            for p in &parts {
                if p.outcome != outcome || p.filter != filter {
                    return Err(Error::Config(format!("ensemble {:?} mixes outcomes or samples", e.name)));
                }
            }
            let train_preds: Vec<Vec<f64>> = parts.iter().map(|p| p.train_pred.clone()).collect();
            let hold_preds: Vec<Vec<f64>> = parts.iter().map(|p| p.holdout_pred.clone()).collect();
            let blend = stack_ensemble(&train_preds, &y_train)?;
            let fit = Fitted {
                train_pred: blend.combine(&train_preds),
                holdout_pred: blend.combine(&hold_preds),
                model: TrainedModel::Stacked(StackedModel::new(
                    parts.iter().map(|p| p.model.clone()).collect(),
                    blend,
                )?),
                ranking: Vec::new(),
                outcome: outcome.clone(),
                filter: filter.clone(),
            };
            (fit, None, components.len())
        } else {
            let (source, names) = resolve_inputs(fm, &e.inputs, &fitted)?;
            let x = source.select(&names)?;
            let (model, cv) = fit_entry(&e.learner, &e.grid, &x, y, &plan_e, &names, entry_seed)?;
            let train_x = x.select_rows(&plan_e.train);
            let hold_x = x.select_rows(&plan_e.holdout);
            drop(x);
            let (ranking, _) = ranking_of(&model);
            let fit = Fitted {
                train_pred: model.predict_matrix(&train_x),
                holdout_pred: model.predict_matrix(&hold_x),
                model,
                ranking,
                outcome: outcome.clone(),
                filter: filter.clone(),
            };
            (fit, cv, names.len())
        };

        let train = EvalReport::point(Sample::Train, &y_train, &fit.train_pred)?;
        let holdout = EvalReport::with_bootstrap(
            Sample::Holdout,
            &y_hold,
            &fit.holdout_pred,
            ladder.n_bootstrap,
            ladder.level,
            seed::derive(seed, &[seed::tag("holdout-bootstrap"), idx as u64]),
        )?;
        let (ranking, n_selected) = ranking_of(&fit.model);
        let dropped = match &fit.model {
            TrainedModel::Linear(m) => m.dropped.clone(),
            TrainedModel::Probit(m) => m.index.dropped.clone(),
            _ => Vec::new(),
        };
        let stack_weights = match &fit.model {
            TrainedModel::Stacked(s) => Some(s.blend.weights.clone()),
            _ => None,
        };
        log::info!("ladder entry {}: holdout mse {:.5}", e.name, holdout.mse);
        reports.push(EntryReport {
            name: e.name.clone(),
            learner: e.learner.name().into(),
            predictors: e.predictors(),
            outcome: outcome.clone(),
            exclude_always_on: filter.clone(),
            n_inputs,
            n_train: plan_e.train.len(),
            n_holdout: plan_e.holdout.len(),
            selected: cv.as_ref().map(|c| c.best().params.clone()).unwrap_or_default(),
            cv_mse: cv.as_ref().and_then(|c| c.best().mse),
            grid_cells: cv.as_ref().map_or(0, |c| c.cells.len()),
            failed_cells: cv.as_ref().map_or(0, |c| c.failed()),
            train,
            holdout,
            n_selected,
            importance: ranking.into_iter().take(REPORTED_PREDICTORS).collect(),
            dropped,
            stack_weights,
        });
        fitted.push((e.name.clone(), fit));
    }
    let outcomes = data
        .outcomes
        .iter()
        .map(|(k, v)| (k.clone(), OutcomeDensity::of(v)))
        .collect();
    Ok(LadderOutput {
        report: LadderReport {
            seed,
            n: plan.n,
            n_train: plan.train.len(),
            n_holdout: plan.holdout.len(),
            train_ratio: ladder.train_ratio,
            n_bootstrap: ladder.n_bootstrap,
            level: ladder.level,
            outcomes,
            entries: reports,
        },
        models: fitted.into_iter().map(|(n, f)| (n, f.model)).collect(),
    })
}

fn top_names(fitted: &[(String, Fitted)], r: &TopRef) -> Vec<String> {
    let f = &fitted.iter().find(|(n, _)| *n == r.entry).unwrap().1;
    f.ranking.iter().take(r.count).map(|(n, _)| n.clone()).collect()
}

/// Resolve an entry's inputs to column names, expanding interactions into
/// a widened copy of the matrix when asked.
fn resolve_inputs<'m>(
    fm: &'m FeatureMatrix,
    inputs: &Inputs,
    fitted: &[(String, Fitted)],
) -> Result<(Cow<'m, FeatureMatrix>, Vec<String>)> {
    let mut names: Vec<String> = Vec::new();
    let push = |n: String, names: &mut Vec<String>| {
        if !names.contains(&n) {
            names.push(n);
        }
    };
    if !inputs.groups.is_empty() {
        let cols = fm.columns_in_groups(&inputs.groups);
        for g in &inputs.groups {
            if g != "all" && !fm.columns.iter().any(|c| c.groups.contains(g)) {
                return Err(Error::MissingColumn(format!("group:{g}")));
            }
        }
        cols.into_iter().for_each(|n| push(n, &mut names));
    }
    for c in &inputs.columns {
        fm.column_index(c).ok_or_else(|| Error::MissingColumn(c.clone()))?;
        push(c.clone(), &mut names);
    }
    for r in &inputs.top {
        top_names(fitted, r).into_iter().for_each(|n| push(n, &mut names));
    }
    match &inputs.interactions {
        None => Ok((Cow::Borrowed(fm), names)),
        Some(r) => {
            let base: Vec<String> = top_names(fitted, r)
                .into_iter()
                .filter(|n| fm.column_index(n).is_some())
                .collect();
            let wide = expand_interactions(fm, &base)?;
            for a in 0..base.len() {
                for b in (a + 1)..base.len() {
                    push(format!("{},{}", base[a], base[b]), &mut names);
                }
            }
            Ok((Cow::Owned(wide), names))
        }
    }
}

/// Train one single-model entry on the training rows of `plan`, tuning on
/// its grid first.
pub fn fit_entry(
    learner: &LearnerSpec,
    grid: &GridSpec,
    x: &Matrix,
    y: &[f64],
    plan: &SplitPlan,
    names: &[String],
    seed: u64,
) -> Result<(TrainedModel, Option<CvResult>)> {
    let y_train = gather(y, &plan.train);
    match *learner {
        LearnerSpec::Ols => Ok((TrainedModel::Linear(ols_fit(&x.select_rows(&plan.train), &y_train, names)?), None)),
        LearnerSpec::Probit => Ok((
            TrainedModel::Probit(fractional_probit_fit(&x.select_rows(&plan.train), &y_train, names)?),
            None,
        )),
        LearnerSpec::Lasso => {
            let fm = FoldMoments::new(x, y, plan);
            let lambdas = lasso_grid(grid, &fm)?;
            let cv = cv_lasso(x, y, plan, &fm, &lambdas)?;
            let s = Standardized::from_moments(&fm.total)?;
            let mut m = fit_standardized(&s, cv.param("lambda"), &lambdas, names)?;
            post_lasso_ols(&mut m, &x.select_rows(&plan.train), &y_train)?;
            Ok((TrainedModel::SparseLinear(m), Some(cv)))
        }
        LearnerSpec::Svr { max_rows } => {
            let opts = SvrOptions::default();
            let vals = |n: &str| fixed_values(grid, n);
            let r = cv_svr(x, y, plan, &vals("c")?, &vals("gamma")?, &vals("epsilon")?, max_rows, seed, &opts)?;
            let hp = SvrHyperParams {
                c: r.result.param("c"),
                gamma: r.result.param("gamma"),
                epsilon: r.result.param("epsilon"),
            };
            let kern = kernel_from_distances(&r.distances, hp.gamma);
            let ys = gather(y, &r.rows);
            let sol = solve_dual(&kern, &ys, hp.c, hp.epsilon, &opts)?;
            let mut m = assemble_svr(names, hp, r.scaling.clone(), &r.z, &sol);
            if r.rows.len() < plan.train.len() {
                m.subsample = Some(SubsampleRecord {
                    seed,
                    rows: r.rows.len(),
                    of: plan.train.len(),
                });
            }
            Ok((TrainedModel::Kernel(m), Some(r.result)))
        }
        LearnerSpec::Boosting {
            shrinkage,
            bag_fraction,
        } => {
            let b = Binned::new(x);
            let splits = grid.axis("splits").unwrap().integer_values("splits")?;
            let trees = grid.axis("trees").unwrap().integer_values("trees")?;
            let cv = cv_gbt(&b, x, y, plan, &splits, &trees, shrinkage, bag_fraction, seed)?;
            let s = cv.param("splits") as usize;
            let p = GbtParams {
                max_splits: s,
                n_trees: cv.param("trees") as usize,
                shrinkage,
                bag_fraction,
                seed: boosting_seed(seed, s, None),
            };
            let m = gbt_fit_rows(&b, x, y, &plan.train, &p, names, |_, _| {})?;
            Ok((TrainedModel::TreeEnsemble(m), Some(cv)))
        }
        LearnerSpec::Ensemble { .. } => Err(Error::invalid("ensembles are fitted from earlier entries")),
    }
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::super::split::split_train_holdout;
    use super::*;
    use crate::features::ColumnMeta;

    fn data(n: usize) -> (FeatureMatrix, Vec<f64>, Vec<bool>) {
        let mut rng = seed::rng(11, &[]);
        let mut x = Matrix::zeros(n, 4);
        let mut y = vec![0.0; n];
        let mut on = vec![false; n];
        for i in 0..n {
            for j in 0..4 {
                x.set(i, j, rng.random::<f64>());
            }
            y[i] = (0.6 * x.get(i, 0) + 0.3 * (x.get(i, 1) > 0.5) as u8 as f64 + 0.05 * rng.random::<f64>()).min(1.0);
            on[i] = i % 7 == 0;
        }
        let groups = ["demo", "demo", "history", "history"];
        let cols = (0..4)
            .map(|j| {
                let mut c = ColumnMeta::plain(format!("v{j}"));
                c.groups.push(groups[j].into());
                c
            })
            .collect();
        let ids = (0..n).map(|i| format!("p{i}")).collect();
        (FeatureMatrix::new(ids, cols, x).unwrap(), y, on)
    }

    fn run(json: &str, n: usize) -> Result<LadderOutput> {
        let (fm, y, on) = data(n);
        let ladder = Ladder::from_json(json)?;
        let d = LadderData {
            features: &fm,
            outcomes: [("any-is".to_string(), y)].into_iter().collect(),
            always_on: [("2011-2014".to_string(), on)].into_iter().collect(),
        };
        let plan = split_train_holdout(n, ladder.train_ratio, 5)?;
        run_model_ladder(&d, &plan, &ladder, &LadderDefaults::default(), 5)
    }

    #[test]
    fn constant_entry_scores_holdout_variance() {
        let out = run(r#"[{"name": "constant", "learner": "ols"}]"#, 200).unwrap();
        let (_, y, _) = data(200);
        let plan = split_train_holdout(200, 0.8, 5).unwrap();
        let train_mean = plan.train.iter().map(|&i| y[i]).sum::<f64>() / 160.0;
        let hold: Vec<f64> = plan.holdout.iter().map(|&i| y[i]).collect();
        let want = hold.iter().map(|v| (v - train_mean).powi(2)).sum::<f64>() / 40.0;
        let r = &out.report.entries[0];
        assert!((r.holdout.mse - want).abs() < 1e-12);
        assert_eq!(r.holdout.r_squared, None);
        assert_eq!(r.predictors, "constant");
        // in-sample: the biased variance of the training outcome
        let tv = plan.train.iter().map(|&i| (y[i] - train_mean).powi(2)).sum::<f64>() / 160.0;
        assert!((r.train.mse - tv).abs() < 1e-12);
    }

    #[test]
    fn full_ladder_runs_in_order() {
        let json = r#"{
            "n_bootstrap": 200,
            "entries": [
                {"name": "demo", "learner": "ols", "inputs": {"groups": ["demo"]}},
                {"name": "lasso", "learner": "lasso", "inputs": {"groups": ["all"]},
                 "grid": {"lambda": {"min_ratio": 1e-3, "count": 10}}},
                {"name": "boost", "learner": "boosting", "inputs": {"groups": ["all"]},
                 "grid": {"splits": [1, 2], "trees": {"min": 1, "max": 20, "count": 20, "spacing": "linear"}}},
                {"name": "svr", "learner": "svr", "max_rows": 100, "inputs": {"groups": ["all"]},
                 "grid": {"c": [0.1, 1.0], "gamma": [1.0], "epsilon": [0.01, 0.1]}},
                {"name": "ensemble", "learner": "ensemble", "components": ["lasso", "boost", "svr"]},
                {"name": "top", "learner": "ols", "inputs": {"top": [{"entry": "lasso", "count": 2}]}},
                {"name": "pairs", "learner": "lasso", "inputs": {"groups": ["all"], "interactions": {"entry": "boost", "count": 3}},
                 "grid": {"lambda": {"min_ratio": 1e-3, "count": 5}}},
                {"name": "probit", "learner": "probit", "inputs": {"groups": ["demo"]}},
                {"name": "filtered", "learner": "ols", "inputs": {"groups": ["demo"]},
                 "sample": {"exclude_always_on": "2011-2014"}}
            ]}"#;
        let out = run(json, 250).unwrap();
        let names: Vec<&str> = out.report.entries.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(names, ["demo", "lasso", "boost", "svr", "ensemble", "top", "pairs", "probit", "filtered"]);
        let get = |n: &str| out.report.entries.iter().find(|e| e.name == n).unwrap();
        assert_eq!(get("lasso").grid_cells, 10);
        assert_eq!(get("boost").grid_cells, 40);
        assert_eq!(get("svr").grid_cells, 4);
        assert_eq!(get("top").n_inputs, 2);
        let base = get("boost").n_selected.unwrap().min(3);
        assert!(base >= 2);
        assert_eq!(get("pairs").n_inputs, 4 + base * (base - 1) / 2);
        assert_eq!(get("filtered").n_train + get("filtered").n_holdout, 250 - 36);
        for e in &out.report.entries {
            let h = &e.holdout;
            assert!(h.ci_low.unwrap() <= h.mse && h.mse <= h.ci_high.unwrap());
        }
        // stacking nests each component in sample
        let ens = get("ensemble").train.mse;
        for c in ["lasso", "boost", "svr"] {
            assert!(ens <= get(c).train.mse * (1.0 + 1e-10));
        }
        assert!(get("lasso").holdout.mse < get("demo").holdout.mse);
        // the stacked artifact reproduces the holdout predictions
        let (fm, y, _) = data(250);
        let plan = split_train_holdout(250, 0.8, 5).unwrap();
        let stacked = &out.models[4].1;
        let p = stacked.predict(&fm.select_rows(&plan.holdout)).unwrap();
        let yy: Vec<f64> = plan.holdout.iter().map(|&i| y[i]).collect();
        assert!((super::super::metrics::mse(&yy, &p).unwrap() - get("ensemble").holdout.mse).abs() < 1e-12);
    }

    #[test]
    fn shipped_ladders_parse() {
        for (name, _) in SHIPPED_LADDERS {
            let l = Ladder::shipped(name).unwrap();
            let catalog = crate::features::Catalog::shipped();
            for e in &l.entries {
                for g in &e.inputs.groups {
                    let known = g == "all" || catalog.entries().iter().any(|c| c.groups.contains(g));
                    assert!(known, "{name}: unknown group {g}");
                }
            }
        }
        let t2 = Ladder::shipped("table2").unwrap();
        assert_eq!(t2.entries.len(), 13);
        assert_eq!(t2.entries[10].grid.axis("c").unwrap().values(None).unwrap().len(), 5);
        assert!(Ladder::shipped("nope").is_none());
        let un = Ladder::shipped("unemployment").unwrap();
        assert!(un.entries.iter().all(|e| e.outcome.as_deref() == Some("unemployment")));
    }

    #[test]
    fn rejects_bad_ladders() {
        assert!(Ladder::from_json(r#"[{"name": "a", "learner": "forest"}]"#).is_err());
        assert!(Ladder::from_json(r#"[]"#).is_err());
        assert!(Ladder::from_json(r#"[{"name": "a", "learner": "ols"}, {"name": "a", "learner": "ols"}]"#).is_err());
        assert!(Ladder::from_json(r#"[{"name": "e", "learner": "ensemble", "components": ["x"]}]"#).is_err());
        assert!(Ladder::from_json(
            r#"[{"name": "s", "learner": "svr", "grid": {"c": [1], "gamma": [1], "epsilon": [0.1]}},
                {"name": "t", "learner": "ols", "inputs": {"top": [{"entry": "s", "count": 3}]}}]"#
        )
        .is_err());
        assert!(Ladder::from_json(r#"[{"name": "l", "learner": "lasso"}]"#).is_err());
        let err = run(r#"[{"name": "a", "learner": "ols", "inputs": {"columns": ["nope"]}}]"#, 50).err().unwrap();
        assert!(err.to_string().contains("nope"));
    }

    #[test]
    fn density_bins() {
        let d = OutcomeDensity::of(&[0.0, 0.0, 1.0, 0.01, 0.02, 0.021, 0.999]);
        assert_eq!((d.n, d.zero, d.one), (7, 2, 1));
        assert_eq!(d.bins[0], 2);
        assert_eq!(d.bins[1], 1);
        assert_eq!(d.bins[49], 1);
        assert_eq!(d.bins.iter().sum::<usize>() + d.zero + d.one, d.n);
    }
}
