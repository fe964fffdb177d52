use std::collections::HashMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use spellforge_core::cluster::{
    agglomerate, at_risk_rows, cut, group_summary, rescale_unit, select_k, ClusterReport, KSelection, Linkage,
};
use spellforge_core::data::io::{read_cohort, CohortPaths};
use spellforge_core::data::{Cohort, ObservationWindow};
use spellforge_core::features::{build_matrix, Catalog, ColumnMeta, FeatureMatrix};
use spellforge_core::learners::TrainedModel;
use spellforge_core::selection::{
    run_model_ladder, split_train_holdout, EvalReport, Ladder, LadderData, LadderDefaults, LadderReport, Sample,
};
use spellforge_core::synth::{generate, write_synth, DgpConfig};
use spellforge_core::{seed, Error, Result};

use crate::manifest::Recorder;
use crate::render;
use crate::CohortArgs;

fn create_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", out.display()))))
}

fn read_text(p: &Path) -> Result<String> {
    std::fs::read_to_string(p).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))))
}

fn write_json<T: Serialize>(p: &Path, v: &T) -> Result<()> {
    std::fs::write(p, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

struct CohortFiles {
    spells: PathBuf,
    persons: PathBuf,
    activity: Option<PathBuf>,
    parent_links: Option<PathBuf>,
}

impl CohortArgs {
    fn files(&self) -> Result<CohortFiles> {
        let from_dir = |name: &str, required: bool| -> Option<PathBuf> {
            let p = self.cohort.as_ref()?.join(name);
            (required || p.exists()).then_some(p)
        };
        let spells = self
            .spells
            .clone()
            .or_else(|| from_dir("spells.csv", true))
            .ok_or_else(|| Error::Config("no spells file: pass --cohort DIR or --spells".into()))?;
        let persons = self
            .persons
            .clone()
            .or_else(|| from_dir("persons.csv", true))
            .ok_or_else(|| Error::Config("no persons file: pass --cohort DIR or --persons".into()))?;
        Ok(CohortFiles {
            spells,
            persons,
            activity: self.activity.clone().or_else(|| from_dir("activity.csv", false)),
            parent_links: self.parent_links.clone().or_else(|| from_dir("parent_links.csv", false)),
        })
    }

    fn load(&self, rec: &mut Recorder) -> Result<Cohort> {
        let f = self.files()?;
        for p in [&f.spells, &f.persons] {
            if !p.exists() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
            rec.input(p);
        }
        for p in [&f.activity, &f.parent_links].into_iter().flatten() {
            rec.input(p);
        }
        read_cohort(&CohortPaths {
            spells: &f.spells,
            persons: &f.persons,
            activity: f.activity.as_deref(),
            parent_links: f.parent_links.as_deref(),
        })
    }
}

fn load_catalog(path: Option<&Path>, rec: &mut Recorder) -> Result<Catalog> {
    match path {
        Some(p) => {
            let text = read_text(p)?;
            rec.input(p);
            Catalog::from_json(&text)
        }
        None => Ok(Catalog::shipped()),
    }
}

pub fn columns_path(features: &Path) -> PathBuf {
    features.with_extension("columns.json")
}

fn read_features(path: &Path, columns: Option<&Path>, rec: &mut Recorder) -> Result<FeatureMatrix> {
    let meta_path = columns.map(Path::to_path_buf).unwrap_or_else(|| columns_path(path));
    let meta: Option<Vec<ColumnMeta>> = if meta_path.exists() {
        rec.input(&meta_path);
        Some(serde_json::from_str(&read_text(&meta_path)?)?)
    } else {
        None
    };
    let f = File::open(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    rec.input(path);
    FeatureMatrix::read_csv(std::io::BufReader::new(f), &path.display().to_string(), meta)
}

pub fn synth(config: Option<&Path>, seed: Option<u64>, n: Option<usize>, out: &Path) -> Result<()> {
    let mut rec = Recorder::new("synth");
    let mut cfg = match config {
        Some(p) => {
            let text = read_text(p)?;
            rec.input(p);
            DgpConfig::from_json(&text)?
        }
        None => DgpConfig::paperlike(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = n {
        cfg.n_persons = n;
    }
    cfg.validate()?;
    rec.config(serde_json::to_string(&cfg)?.as_bytes());
    rec.seed(cfg.seed);
    create_dir(out)?;
    let s = generate(&cfg)?;
    for p in write_synth(out, &s)? {
        rec.output(&p);
    }
    let cfg_path = out.join("dgp.json");
    write_json(&cfg_path, &cfg)?;
    rec.output(&cfg_path);
    rec.finish(out)?;
    log::info!("wrote {} people to {}", cfg.n_persons, out.display());
    Ok(())
}

fn write_matrix(fm: &FeatureMatrix, out: &Path, rec: &mut Recorder) -> Result<PathBuf> {
    let p = out.join("features.csv");
    fm.write_csv(BufWriter::new(File::create(&p)?))?;
    rec.output(&p);
    let c = columns_path(&p);
    write_json(&c, &fm.columns)?;
    rec.output(&c);
    Ok(p)
}

pub fn features(cohort: &CohortArgs, catalog: Option<&Path>, out: &Path) -> Result<()> {
    let mut rec = Recorder::new("features");
    let catalog = load_catalog(catalog, &mut rec)?;
    let cohort = cohort.load(&mut rec)?;
    let fm = build_matrix(&cohort, &catalog)?;
    create_dir(out)?;
    write_matrix(&fm, out, &mut rec)?;
    rec.finish(out)?;
    Ok(())
}

pub struct TrainArgs {
    pub cohort: CohortArgs,
    pub features: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub ladder: String,
    pub seed: u64,
    pub outcome: String,
    pub exclude_always_on: Option<String>,
    pub out: PathBuf,
}

/// Train/holdout membership by person id.
#[derive(Debug, Serialize, Deserialize)]
pub struct SplitFile {
    pub seed: u64,
    pub train_ratio: f64,
    pub train: Vec<String>,
    pub holdout: Vec<String>,
}

fn load_ladder(spec: &str, rec: &mut Recorder) -> Result<Ladder> {
    let p = Path::new(spec);
    if p.exists() {
        let text = read_text(p)?;
        rec.input(p);
        rec.config(text.as_bytes());
        return Ladder::from_json(&text);
    }
    let l = Ladder::shipped(spec).ok_or_else(|| {
        Error::Config(format!("ladder {spec:?} is neither a file nor a bundled ladder (table2, extensions, unemployment)"))
    })?;
    rec.config(serde_json::to_string(&l)?.as_bytes());
    Ok(l)
}

fn matrix_for(
    features: Option<&Path>,
    catalog: Option<&Path>,
    cohort: &Cohort,
    rec: &mut Recorder,
) -> Result<FeatureMatrix> {
    match features {
        Some(p) => read_features(p, None, rec),
        None => build_matrix(cohort, &load_catalog(catalog, rec)?),
    }
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let mut rec = Recorder::new("train");
    rec.seed(a.seed);
    let ladder = load_ladder(&a.ladder, &mut rec)?;
    ladder.validate()?;
    if let Some(w) = &a.exclude_always_on {
        ObservationWindow::parse(w)?;
    }
    let defaults = LadderDefaults {
        outcome: a.outcome.clone(),
        exclude_always_on: a.exclude_always_on.clone(),
    };
    let cohort = a.cohort.load(&mut rec)?;
    let fm = matrix_for(a.features.as_deref(), a.catalog.as_deref(), &cohort, &mut rec)?;
    let (outcomes, windows) = ladder.requirements(&defaults);
    let data = LadderData::from_cohort(&fm, &cohort, &outcomes, &windows)?;
    let plan = split_train_holdout(fm.n(), ladder.train_ratio, a.seed)?;
    let output = run_model_ladder(&data, &plan, &ladder, &defaults, a.seed)?;

    create_dir(&a.out)?;
    let models = a.out.join("models");
    create_dir(&models)?;
    for (name, m) in &output.models {
        let p = models.join(format!("{name}.json"));
        m.save(&p)?;
        rec.output(&p);
    }
    let split = SplitFile {
        seed: a.seed,
        train_ratio: ladder.train_ratio,
        train: plan.train.iter().map(|&i| fm.row_ids[i].clone()).collect(),
        holdout: plan.holdout.iter().map(|&i| fm.row_ids[i].clone()).collect(),
    };
    let sp = a.out.join("split.json");
    write_json(&sp, &split)?;
    rec.output(&sp);
    let rp = a.out.join("report.json");
    write_json(&rp, &output.report)?;
    rec.output(&rp);
    rec.finish(&a.out)?;
    print!("{}", render::table(&output.report));
    Ok(())
}

pub struct EvaluateArgs {
    pub cohort: CohortArgs,
    pub model: PathBuf,
    pub features: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub split: Option<PathBuf>,
    pub outcome: String,
    pub n_bootstrap: usize,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct Evaluation {
    model: String,
    kind: String,
    outcome: String,
    rows: String,
    report: EvalReport,
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let mut rec = Recorder::new("evaluate");
    rec.seed(a.seed);
    let model = TrainedModel::load(&a.model)
        .map_err(|e| Error::Config(format!("{}: {e}", a.model.display())))?;
    rec.input(&a.model);
    let cohort = a.cohort.load(&mut rec)?;
    let fm = matrix_for(a.features.as_deref(), a.catalog.as_deref(), &cohort, &mut rec)?;
    let (rows, label) = match &a.split {
        Some(p) => {
            let s: SplitFile = serde_json::from_str(&read_text(p)?)?;
            rec.input(p);
            let index: HashMap<&str, usize> = fm.row_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
            let rows = s
                .holdout
                .iter()
                .map(|id| {
                    index
                        .get(id.as_str())
                        .copied()
                        .ok_or_else(|| Error::invalid(format!("holdout person {id:?} has no feature row")))
                })
                .collect::<Result<Vec<usize>>>()?;
            (rows, "holdout")
        }
        None => ((0..fm.n()).collect(), "all"),
    };
    let sub = fm.select_rows(&rows);
    let data = LadderData::from_cohort(&sub, &cohort, std::slice::from_ref(&a.outcome), &[])?;
    let y = &data.outcomes[&a.outcome];
    let yhat = model.predict(&sub)?;
    let report = EvalReport::with_bootstrap(Sample::Holdout, y, &yhat, a.n_bootstrap, 0.95, a.seed)?;
    create_dir(&a.out)?;
    let p = a.out.join("evaluation.json");
    write_json(
        &p,
        &Evaluation {
            model: a
                .model
                .file_name()
                .map_or_else(|| a.model.display().to_string(), |f| f.to_string_lossy().into_owned()),
            kind: model.kind().into(),
            outcome: a.outcome.clone(),
            rows: label.into(),
            report: report.clone(),
        },
    )?;
    rec.output(&p);
    rec.finish(&a.out)?;
    println!(
        "n = {}  MSE = {:.4}  [{:.4}; {:.4}]  R² = {}",
        report.n,
        report.mse,
        report.ci_low.unwrap_or(f64::NAN),
        report.ci_high.unwrap_or(f64::NAN),
        report.r_squared.map(|r| format!("{:.1}%", 100.0 * r)).unwrap_or_else(|| "-".into())
    );
    Ok(())
}

pub struct ClusterArgs {
    pub model: PathBuf,
    pub features: PathBuf,
    pub columns: Option<PathBuf>,
    pub threshold: f64,
    pub linkage: String,
    pub k_max: usize,
    pub k: Option<usize>,
    pub variables: Vec<String>,
    pub top: usize,
    pub groups: Vec<String>,
    pub min_group: usize,
    pub max_rows: usize,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct ClusterOutput {
    threshold: f64,
    linkage: Linkage,
    n: usize,
    n_at_risk: usize,
    n_clustered: usize,
    person_ids: Vec<String>,
    variables: Vec<String>,
    constant_variables: Vec<String>,
    selection: Option<KSelection>,
    k: usize,
    report: Option<ClusterReport>,
}

fn clustering_variables(a: &ClusterArgs, model: &TrainedModel, fm: &FeatureMatrix) -> Result<Vec<String>> {
    if !a.variables.is_empty() {
        fm.indices(&a.variables)?;
        return Ok(a.variables.clone());
    }
    let mut out: Vec<String> = model.ranking().into_iter().take(a.top).map(|(n, _)| n).collect();
    out.retain(|n| fm.column_index(n).is_some());
    for n in fm.columns_in_groups(&a.groups) {
        if !out.contains(&n) {
            out.push(n);
        }
    }
    if out.is_empty() {
        return Err(Error::Config(
            "no clustering variables: pass --variables or a features file with column groups".into(),
        ));
    }
    Ok(out)
}

pub fn cluster(a: &ClusterArgs) -> Result<()> {
    let mut rec = Recorder::new("cluster");
    rec.seed(a.seed);
    let linkage: Linkage = a.linkage.parse()?;
    let model = TrainedModel::load(&a.model)
        .map_err(|e| Error::Config(format!("{}: {e}", a.model.display())))?;
    rec.input(&a.model);
    let fm = read_features(&a.features, a.columns.as_deref(), &mut rec)?;
    let variables = clustering_variables(a, &model, &fm)?;
    let pred = model.predict(&fm)?;
    let mut rows = at_risk_rows(&pred, a.threshold);
    let n_at_risk = rows.len();
    if rows.len() > a.max_rows {
        let mut rng = seed::rng(a.seed, &[seed::tag("cluster-sample")]);
        let mut keep: Vec<usize> = sample(&mut rng, rows.len(), a.max_rows).into_iter().map(|i| rows[i]).collect();
        keep.sort_unstable();
        log::warn!("clustering {} of {} at-risk people", keep.len(), rows.len());
        rows = keep;
    }
    let mut output = ClusterOutput {
        threshold: a.threshold,
        linkage,
        n: fm.n(),
        n_at_risk,
        n_clustered: rows.len(),
        person_ids: rows.iter().map(|&i| fm.row_ids[i].clone()).collect(),
        variables: variables.clone(),
        constant_variables: Vec::new(),
        selection: None,
        k: 0,
        report: None,
    };
    if rows.len() >= 2 {
        let x = fm.select_rows(&rows).select(&variables)?;
        let (scaled, flat) = rescale_unit(&x);
        output.constant_variables = variables.iter().zip(&flat).filter(|(_, f)| **f).map(|(v, _)| v.clone()).collect();
        let d = agglomerate(&scaled, linkage)?;
        let selection = if rows.len() >= 3 { Some(select_k(&d, &scaled, a.k_max)?) } else { None };
        let k = a
            .k
            .or(selection.as_ref().map(|s| s.recommended))
            .unwrap_or(1);
        let labels = cut(&d, k)?;
        output.report = Some(group_summary(&scaled, &labels, &variables, a.min_group)?);
        output.selection = selection;
        output.k = k;
    } else if rows.len() == 1 {
        output.k = 1;
    }
    create_dir(&a.out)?;
    let p = a.out.join("clusters.json");
    write_json(&p, &output)?;
    rec.output(&p);
    let s = a.out.join("clusters_summary.csv");
    match &output.report {
        Some(r) => r.write_csv(BufWriter::new(File::create(&s)?))?,
        None => std::fs::write(&s, "variable\n")?,
    }
    rec.output(&s);
    rec.finish(&a.out)?;
    match &output.report {
        Some(r) => println!(
            "{} at risk, {} clustered into {} groups (sizes {:?})",
            n_at_risk,
            output.n_clustered,
            output.k,
            r.sizes()
        ),
        None => println!("{n_at_risk} at risk; nothing to cluster"),
    }
    Ok(())
}

pub fn report(path: &Path, out: &Path) -> Result<()> {
    let mut rec = Recorder::new("report");
    let text = read_text(path)?;
    rec.input(path);
    let r: LadderReport = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if r.entries.is_empty() {
        return Err(Error::Config(format!("{}: report has no entries", path.display())));
    }
    create_dir(out)?;
    let table = render::table(&r);
    let tp = out.join("report.txt");
    std::fs::write(&tp, &table)?;
    rec.output(&tp);
    for (name, d) in &r.outcomes {
        let p = out.join(format!("density_{name}.csv"));
        std::fs::write(&p, render::density_csv(d))?;
        rec.output(&p);
    }
    rec.finish(out)?;
    print!("{table}");
    Ok(())
}
