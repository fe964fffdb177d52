use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::catalog::{miss_name, Catalog, Derivation, Family, TopCodeRule};
use super::derive::derive_person;
use super::policy::nearest_rank_quantile;
use crate::data::Cohort;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::par;

/// Description of one design-matrix column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    /// Catalog family; `None` for policy and interaction-expansion columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    /// For a missing indicator, the column it belongs to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indicator_of: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    /// Computational conventions that affect the value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<String>,
}

impl ColumnMeta {
    pub fn plain(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            family: None,
            indicator_of: None,
            groups: Vec::new(),
            description: String::new(),
            convention: None,
        }
    }
}

/// Design matrix with named columns and identified rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub row_ids: Vec<String>,
    pub columns: Vec<ColumnMeta>,
    pub values: Matrix,
    index: HashMap<String, usize>,
}

impl FeatureMatrix {
    pub fn new(row_ids: Vec<String>, columns: Vec<ColumnMeta>, values: Matrix) -> Result<Self> {
        if values.rows() != row_ids.len() {
            return Err(Error::LengthMismatch {
                left: values.rows(),
                right: row_ids.len(),
            });
        }
        if values.cols() != columns.len() {
            return Err(Error::LengthMismatch {
                left: values.cols(),
                right: columns.len(),
            });
        }
        let mut index = HashMap::with_capacity(columns.len());
        for (j, c) in columns.iter().enumerate() {
            if index.insert(c.name.clone(), j).is_some() {
                return Err(Error::DuplicateFeature(c.name.clone()));
            }
        }
        Ok(Self {
            row_ids,
            columns,
            values,
            index,
        })
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn k(&self) -> usize {
        self.values.cols()
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Indices of the named columns, failing on the first unknown one.
    pub fn indices(&self, names: &[String]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::MissingColumn(n.clone()))
            })
            .collect()
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self
            .column_index(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        Ok(self.values.column(j))
    }

    /// Sub-matrix of the named columns.
    pub fn select(&self, names: &[String]) -> Result<Matrix> {
        Ok(self.values.select_columns(&self.indices(names)?))
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            row_ids: rows.iter().map(|&i| self.row_ids[i].clone()).collect(),
            columns: self.columns.clone(),
            values: self.values.select_rows(rows),
            index: self.index.clone(),
        }
    }

    /// Names of columns carrying any of `groups`, in column order. The
    /// group `all` selects every column not tagged `extension`.
    pub fn columns_in_groups(&self, groups: &[String]) -> Vec<String> {
        let all = groups.iter().any(|g| g == "all");
        self.columns
            .iter()
            .filter(|c| {
                if all && !c.groups.iter().any(|g| g == "extension") {
                    return true;
                }
                c.groups.iter().any(|g| groups.contains(g))
            })
            .map(|c| c.name.clone())
            .collect()
    }

    /// Write `person_id` followed by every column.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let mut header = vec!["person_id".to_string()];
        header.extend(self.columns.iter().map(|c| c.name.clone()));
        wr.write_record(&header)?;
        let mut rec: Vec<String> = Vec::with_capacity(self.k() + 1);
        for i in 0..self.n() {
            rec.clear();
            rec.push(self.row_ids[i].clone());
            rec.extend(self.values.row(i).iter().map(|v| format!("{v}")));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Read a features file. Column metadata, when given, must list the same
    /// columns in the same order.
    pub fn read_csv<R: Read>(r: R, file: &str, meta: Option<Vec<ColumnMeta>>) -> Result<Self> {
        let schema = |row: usize, message: String| Error::Schema {
            file: file.to_string(),
            row,
            message,
        };
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("person_id") {
            return Err(schema(0, "first column must be person_id".into()));
        }
        let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let columns = match meta {
            Some(m) => {
                let same = m.len() == names.len() && m.iter().zip(&names).all(|(c, n)| &c.name == n);
                if !same {
                    return Err(schema(0, "column metadata does not match the header".into()));
                }
                m
            }
            None => names.iter().map(ColumnMeta::plain).collect(),
        };
        let k = names.len();
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| schema(row, e.to_string()))?;
            if rec.len() != k + 1 {
                return Err(schema(row, format!("expected {} fields, found {}", k + 1, rec.len())));
            }
            ids.push(rec[0].to_string());
            for (j, v) in rec.iter().skip(1).enumerate() {
                let x: f64 = v
                    .trim()
                    .parse()
                    .ok()
                    .filter(|x: &f64| x.is_finite())
                    .ok_or_else(|| schema(row, format!("column {}: bad number {v:?}", names[j])))?;
                data.push(x);
            }
        }
        let values = Matrix::from_vec(ids.len(), k, data)?;
        Self::new(ids, columns, values)
    }
}

/// Derive every catalog entry for every sample member of `cohort`.
///
/// Columns follow catalog order with each missing indicator right after its
/// base column; rows follow `cohort.persons`.
pub fn build_matrix(cohort: &Cohort, catalog: &Catalog) -> Result<FeatureMatrix> {
    if catalog.is_empty() {
        return Err(Error::EmptyCatalog);
    }
    let raw: Vec<Vec<Option<f64>>> = par::map_slice(&cohort.persons, |h| derive_person(catalog, h, Some(cohort)));
    let n = raw.len();

    // sample thresholds for percentile flags
    let mut thresholds: HashMap<usize, Option<f64>> = HashMap::new();
    for (i, e) in catalog.entries().iter().enumerate() {
        if let Derivation::TopCodeFlag {
            base,
            rule: TopCodeRule::Percentile(p),
        } = &e.derivation
        {
            let b = catalog.position(base).expect("validated reference");
            let sample: Vec<f64> = raw.iter().filter_map(|r| r[b]).collect();
            thresholds.insert(i, nearest_rank_quantile(&sample, *p));
        }
    }

    let mut columns = Vec::with_capacity(catalog.column_count());
    // (entry index, is indicator)
    let mut layout = Vec::with_capacity(catalog.column_count());
    for (i, e) in catalog.entries().iter().enumerate() {
        columns.push(ColumnMeta {
            name: e.name.clone(),
            family: Some(e.family()),
            indicator_of: None,
            groups: e.groups.clone(),
            description: e.description.clone(),
            convention: convention(&e.derivation),
        });
        layout.push((i, false));
        if catalog.is_missing_prone(i) {
            columns.push(ColumnMeta {
                name: miss_name(&e.name),
                family: Some(Family::MissingFlag),
                indicator_of: Some(e.name.clone()),
                groups: e.groups.clone(),
                description: format!("{} is missing", e.name),
                convention: None,
            });
            layout.push((i, true));
        }
    }
    let k = layout.len();
    let mut values = Matrix::zeros(n, k);
    for (r, person) in raw.iter().enumerate() {
        let row = values.row_mut(r);
        for (c, &(i, indicator)) in layout.iter().enumerate() {
            row[c] = if indicator {
                if person[i].is_none() { 1.0 } else { 0.0 }
            } else if let Some(t) = thresholds.get(&i) {
                let e = &catalog.entries()[i];
                let Derivation::TopCodeFlag { base, .. } = &e.derivation else { unreachable!() };
                let b = catalog.position(base).expect("validated reference");
                match (person[b], t) {
                    (Some(v), Some(t)) if v >= *t => 1.0,
                    _ => 0.0,
                }
            } else {
                // empty float sums are -0.0
                person[i].unwrap_or(0.0) + 0.0
            };
        }
    }
    let ids = cohort.persons.iter().map(|p| p.person_id.clone()).collect();
    FeatureMatrix::new(ids, columns, values)
}

fn convention(d: &Derivation) -> Option<String> {
    match d {
        Derivation::Fluctuation { .. } => Some(
            "sample standard deviation (divisor n-1) of 14-day bins anchored at the window start; final short bin kept; amounts spread pro rata by day".into(),
        ),
        Derivation::TopCodeFlag {
            rule: TopCodeRule::Percentile(_),
            ..
        } => Some("nearest-rank sample quantile over non-missing values".into()),
        _ => None,
    }
}

/// Append all pairwise products of the listed columns, named `a,b`.
pub fn expand_interactions(m: &FeatureMatrix, base: &[String]) -> Result<FeatureMatrix> {
    let idx = m.indices(base)?;
    let mut pairs = Vec::new();
    for a in 0..idx.len() {
        for b in (a + 1)..idx.len() {
            pairs.push((a, b));
        }
    }
    let n = m.n();
    let mut extra = Matrix::zeros(n, pairs.len());
    for i in 0..n {
        let src = m.values.row(i);
        let dst = extra.row_mut(i);
        for (c, &(a, b)) in pairs.iter().enumerate() {
            dst[c] = src[idx[a]] * src[idx[b]];
        }
    }
    let mut columns = m.columns.clone();
    for &(a, b) in &pairs {
        let mut meta = ColumnMeta::plain(format!("{},{}", base[a], base[b]));
        meta.groups.push("interaction".into());
        columns.push(meta);
    }
    FeatureMatrix::new(m.row_ids.clone(), columns, m.values.hstack(&extra)?)
}
