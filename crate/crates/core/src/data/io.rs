//! CSV readers and writers for the cohort files.
//!
//! | file              | header                                                    |
//! |-------------------|-----------------------------------------------------------|
//! | spells.csv        | `person_id,payment_code,start_date,end_date,amount`       |
//! | persons.csv       | `person_id,attribute,value`                               |
//! | activity.csv      | `person_id,kind,start_date,end_date,amount,hours,detail`  |
//! | parent_links.csv  | `child_id,parent_id,role`                                 |
//!
//! People listed in persons.csv are sample members (matrix rows, in file
//! order) unless they carry `in_sample=0`; such people, and people that
//! appear only as parents, are kept as linked records.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use csv::StringRecord;

use super::{
    classify_payment, parse_date, ActivityKind, ActivityRecord, Cohort, PersonHistory, SpellRecord,
};
use crate::error::{Error, Result};

pub const SPELLS_HEADER: [&str; 5] = ["person_id", "payment_code", "start_date", "end_date", "amount"];
pub const PERSONS_HEADER: [&str; 3] = ["person_id", "attribute", "value"];
pub const ACTIVITY_HEADER: [&str; 7] = [
    "person_id",
    "kind",
    "start_date",
    "end_date",
    "amount",
    "hours",
    "detail",
];
pub const LINKS_HEADER: [&str; 3] = ["child_id", "parent_id", "role"];

/// Attribute marking a linked (non-sample) person in persons.csv.
pub const IN_SAMPLE: &str = "in_sample";

struct Table<'a> {
    file: &'a str,
    header: &'a [&'a str],
}

impl Table<'_> {
    fn schema(&self, row: usize, message: impl Into<String>) -> Error {
        Error::Schema {
            file: self.file.to_string(),
            row,
            message: message.into(),
        }
    }

    /// Read all records, checking the header and field counts. Rows are
    /// numbered from 1 for the first data row.
    fn records<R: Read>(&self, r: R) -> Result<Vec<(usize, StringRecord)>> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(r);
        let header = rdr.headers()?.clone();
        let got: Vec<&str> = header.iter().collect();
        if got != self.header {
            return Err(self.schema(
                0,
                format!("expected header {:?}, found {:?}", self.header.join(","), got.join(",")),
            ));
        }
        let mut out = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| self.schema(row, e.to_string()))?;
            if rec.len() != self.header.len() {
                return Err(self.schema(
                    row,
                    format!("expected {} fields, found {}", self.header.len(), rec.len()),
                ));
            }
            out.push((row, rec));
        }
        Ok(out)
    }

    fn field<'r>(&self, row: usize, rec: &'r StringRecord, col: usize) -> Result<&'r str> {
        let v = rec.get(col).unwrap_or("");
        if v.is_empty() {
            return Err(self.schema(row, format!("column {} is empty", self.header[col])));
        }
        Ok(v)
    }

    fn date(&self, row: usize, rec: &StringRecord, col: usize) -> Result<chrono::NaiveDate> {
        let v = self.field(row, rec, col)?;
        parse_date(v).map_err(|_| {
            self.schema(row, format!("column {}: bad date {v:?}", self.header[col]))
        })
    }

    fn opt_number(&self, row: usize, rec: &StringRecord, col: usize) -> Result<Option<f64>> {
        let v = rec.get(col).unwrap_or("");
        if v.is_empty() {
            return Ok(None);
        }
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(Some(x)),
            _ => Err(self.schema(row, format!("column {}: bad number {v:?}", self.header[col]))),
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn read_spells_from<R: Read>(r: R, file: &str) -> Result<Vec<SpellRecord>> {
    let t = Table {
        file,
        header: &SPELLS_HEADER,
    };
    let mut out = Vec::new();
    for (row, rec) in t.records(r)? {
        let id = t.field(row, &rec, 0)?;
        let code = t.field(row, &rec, 1)?;
        let category = classify_payment(code)
            .map_err(|_| t.schema(row, format!("column payment_code: unknown payment code {code:?}")))?;
        let start = t.date(row, &rec, 2)?;
        let end = t.date(row, &rec, 3)?;
        let amount = t.opt_number(row, &rec, 4)?;
        let s = SpellRecord::new(id, category, start, end, amount)
            .map_err(|e| t.schema(row, e.to_string()))?;
        out.push(s);
    }
    Ok(out)
}

pub fn read_spells(path: &Path) -> Result<Vec<SpellRecord>> {
    read_spells_from(open(path)?, &file_label(path))
}

/// Persons in first-appearance order with their attribute maps.
pub fn read_persons_from<R: Read>(r: R, file: &str) -> Result<Vec<(String, BTreeMap<String, String>)>> {
    let t = Table {
        file,
        header: &PERSONS_HEADER,
    };
    let mut order: Vec<(String, BTreeMap<String, String>)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (row, rec) in t.records(r)? {
        let id = t.field(row, &rec, 0)?.to_string();
        let attr = t.field(row, &rec, 1)?.to_string();
        let value = rec.get(2).unwrap_or("").to_string();
        let slot = *index.entry(id.clone()).or_insert_with(|| {
            order.push((id.clone(), BTreeMap::new()));
            order.len() - 1
        });
        if order[slot].1.insert(attr.clone(), value).is_some() {
            return Err(t.schema(row, format!("attribute {attr:?} repeated for person {id:?}")));
        }
    }
    Ok(order)
}

pub fn read_persons(path: &Path) -> Result<Vec<(String, BTreeMap<String, String>)>> {
    read_persons_from(open(path)?, &file_label(path))
}

pub fn read_activity_from<R: Read>(r: R, file: &str) -> Result<Vec<ActivityRecord>> {
    let t = Table {
        file,
        header: &ACTIVITY_HEADER,
    };
    let mut out = Vec::new();
    for (row, rec) in t.records(r)? {
        let id = t.field(row, &rec, 0)?;
        let kind_s = t.field(row, &rec, 1)?;
        let kind = ActivityKind::parse(kind_s)
            .map_err(|_| t.schema(row, format!("column kind: unknown activity {kind_s:?}")))?;
        let start = t.date(row, &rec, 2)?;
        let end = t.date(row, &rec, 3)?;
        let mut a =
            ActivityRecord::new(id, kind, start, end).map_err(|e| t.schema(row, e.to_string()))?;
        a.amount = t.opt_number(row, &rec, 4)?;
        a.hours = t.opt_number(row, &rec, 5)?;
        a.detail = ActivityRecord::parse_detail(rec.get(6).unwrap_or(""))
            .map_err(|e| t.schema(row, format!("column detail: {e}")))?;
        out.push(a);
    }
    Ok(out)
}

pub fn read_activity(path: &Path) -> Result<Vec<ActivityRecord>> {
    read_activity_from(open(path)?, &file_label(path))
}

/// (child, parent, role) triples.
pub fn read_parent_links_from<R: Read>(r: R, file: &str) -> Result<Vec<(String, String, String)>> {
    let t = Table {
        file,
        header: &LINKS_HEADER,
    };
    let mut out = Vec::new();
    for (row, rec) in t.records(r)? {
        out.push((
            t.field(row, &rec, 0)?.to_string(),
            t.field(row, &rec, 1)?.to_string(),
            t.field(row, &rec, 2)?.to_ascii_lowercase(),
        ));
    }
    Ok(out)
}

pub fn read_parent_links(path: &Path) -> Result<Vec<(String, String, String)>> {
    read_parent_links_from(open(path)?, &file_label(path))
}

/// Group records by person into a [`Cohort`].
pub fn assemble_cohort(
    persons: Vec<(String, BTreeMap<String, String>)>,
    spells: Vec<SpellRecord>,
    activity: Vec<ActivityRecord>,
    links: Vec<(String, String, String)>,
) -> Result<Cohort> {
    let mut histories: Vec<PersonHistory> = Vec::with_capacity(persons.len());
    let mut index: HashMap<String, usize> = HashMap::with_capacity(persons.len());
    for (id, demographics) in persons {
        index.insert(id.clone(), histories.len());
        let mut h = PersonHistory::new(id);
        h.demographics = demographics;
        histories.push(h);
    }
    let parent_ids: std::collections::HashSet<&str> =
        links.iter().map(|(_, p, _)| p.as_str()).collect();
    let mut slot_for = |id: &str, what: &str| -> Result<usize> {
        if let Some(&i) = index.get(id) {
            return Ok(i);
        }
        if parent_ids.contains(id) {
            index.insert(id.to_string(), histories.len());
            let mut h = PersonHistory::new(id);
            h.demographics.insert(IN_SAMPLE.into(), "0".into());
            histories.push(h);
            return Ok(histories.len() - 1);
        }
        Err(Error::invalid(format!("{what} for person {id:?} not listed in persons.csv")))
    };
    let mut spell_slots = Vec::with_capacity(spells.len());
    for s in &spells {
        spell_slots.push(slot_for(&s.person_id, "spell")?);
    }
    let mut activity_slots = Vec::with_capacity(activity.len());
    for a in &activity {
        activity_slots.push(slot_for(&a.person_id, "activity")?);
    }
    for (s, i) in spells.into_iter().zip(spell_slots) {
        histories[i].spells.push(s);
    }
    for (a, i) in activity.into_iter().zip(activity_slots) {
        histories[i].activities.push(a);
    }
    for h in &mut histories {
        h.spells.sort_by_key(|s| (s.start, s.end));
        h.activities.sort_by_key(|a| (a.start, a.end));
    }

    let mut cohort = Cohort::default();
    for (child, parent, role) in links {
        cohort.parent_links.entry(child).or_default().push((parent, role));
    }
    for h in histories {
        if h.attribute(IN_SAMPLE) == Some("0") {
            cohort.others.insert(h.person_id.clone(), h);
        } else {
            cohort.persons.push(h);
        }
    }
    Ok(cohort)
}

/// Paths of the four cohort files; activity and parent links are optional.
#[derive(Debug, Clone)]
pub struct CohortPaths<'a> {
    pub spells: &'a Path,
    pub persons: &'a Path,
    pub activity: Option<&'a Path>,
    pub parent_links: Option<&'a Path>,
}

pub fn read_cohort(p: &CohortPaths<'_>) -> Result<Cohort> {
    let persons = read_persons(p.persons)?;
    let spells = read_spells(p.spells)?;
    let activity = match p.activity {
        Some(a) => read_activity(a)?,
        None => Vec::new(),
    };
    let links = match p.parent_links {
        Some(l) => read_parent_links(l)?,
        None => Vec::new(),
    };
    assemble_cohort(persons, spells, activity, links)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// Write all histories of a cohort (sample first, then linked people sorted by id).
fn all_histories(c: &Cohort) -> Vec<&PersonHistory> {
    let mut others: Vec<&PersonHistory> = c.others.values().collect();
    others.sort_by(|a, b| a.person_id.cmp(&b.person_id));
    c.persons.iter().chain(others).collect()
}

pub fn write_spells<W: Write>(w: W, c: &Cohort) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(SPELLS_HEADER)?;
    for h in all_histories(c) {
        for s in &h.spells {
            wr.write_record([
                s.person_id.as_str(),
                s.category.code.name(),
                &s.start.to_string(),
                &s.end.to_string(),
                &fmt_opt(s.amount),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn write_persons<W: Write>(w: W, c: &Cohort) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(PERSONS_HEADER)?;
    for h in all_histories(c) {
        for (k, v) in &h.demographics {
            wr.write_record([h.person_id.as_str(), k, v])?;
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn write_activity<W: Write>(w: W, c: &Cohort) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(ACTIVITY_HEADER)?;
    for h in all_histories(c) {
        for a in &h.activities {
            wr.write_record([
                a.person_id.as_str(),
                a.kind.as_str(),
                &a.start.to_string(),
                &a.end.to_string(),
                &fmt_opt(a.amount),
                &fmt_opt(a.hours),
                &a.detail_string(),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn write_parent_links<W: Write>(w: W, c: &Cohort) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(LINKS_HEADER)?;
    for h in &c.persons {
        if let Some(links) = c.parent_links.get(&h.person_id) {
            for (p, role) in links {
                wr.write_record([h.person_id.as_str(), p, role])?;
            }
        }
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPELLS: &str = "person_id,payment_code,start_date,end_date,amount\n\
        a,Newstart Allowance,2014-01-01,2014-06-30,560\n\
        b,Age Pension,2015-01-01,2018-12-31,\n\
        a,Family Tax Benefit Part A,2013-01-01,2013-01-31,100\n";

    #[test]
    fn reads_spells() {
        let s = read_spells_from(SPELLS.as_bytes(), "spells.csv").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[0].amount, Some(560.0));
        assert_eq!(s[1].amount, None);
        assert!(s[1].category.is_income_support);
    }

    #[test]
    fn schema_errors_name_row_and_column() {
        let bad = "person_id,payment_code,start_date,end_date,amount\n\
            a,Newstart Allowance,2014-01-01,2014-06-30,1\n\
            a,Newstart Allowance,2014-13-01,2014-06-30,1\n";
        let e = read_spells_from(bad.as_bytes(), "spells.csv").unwrap_err();
        match e {
            Error::Schema { file, row, message } => {
                assert_eq!(file, "spells.csv");
                assert_eq!(row, 2);
                assert!(message.contains("start_date"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let unknown = "person_id,payment_code,start_date,end_date,amount\n\
            a,Lottery Win,2014-01-01,2014-06-30,1\n";
        let e = read_spells_from(unknown.as_bytes(), "spells.csv").unwrap_err();
        assert!(e.to_string().contains("payment_code"));
        let header = "id,payment_code,start_date,end_date,amount\n";
        assert!(matches!(
            read_spells_from(header.as_bytes(), "spells.csv"),
            Err(Error::Schema { row: 0, .. })
        ));
    }

    #[test]
    fn cohort_round_trip() {
        let persons = "person_id,attribute,value\n\
            b,sex,M\n\
            a,sex,F\n\
            a,birth_date,1980-05-01\n\
            m,sex,F\n\
            m,in_sample,0\n";
        let activity = "person_id,kind,start_date,end_date,amount,hours,detail\n\
            a,employment,2014-01-01,2014-01-14,1000,40,employer=e1\n";
        let links = "child_id,parent_id,role\na,m,mother\n";
        let c = assemble_cohort(
            read_persons_from(persons.as_bytes(), "persons.csv").unwrap(),
            read_spells_from(SPELLS.as_bytes(), "spells.csv").unwrap(),
            read_activity_from(activity.as_bytes(), "activity.csv").unwrap(),
            read_parent_links_from(links.as_bytes(), "parent_links.csv").unwrap(),
        )
        .unwrap();
        assert_eq!(c.persons.len(), 2);
        assert_eq!(c.persons[0].person_id, "b");
        assert_eq!(c.persons[1].spells.len(), 2);
        assert!(c.persons[1].spells[0].start < c.persons[1].spells[1].start);
        assert_eq!(c.parents("a", "mother").unwrap().len(), 1);
        assert!(c.parents("a", "father").is_none());

        let mut buf = Vec::new();
        write_spells(&mut buf, &c).unwrap();
        let again = read_spells_from(buf.as_slice(), "spells.csv").unwrap();
        assert_eq!(again.len(), 3);
        let mut buf = Vec::new();
        write_activity(&mut buf, &c).unwrap();
        let again = read_activity_from(buf.as_slice(), "activity.csv").unwrap();
        assert_eq!(again[0].detail("employer"), Some("e1"));
    }

    #[test]
    fn unknown_person_rejected() {
        let persons = "person_id,attribute,value\nb,sex,M\n";
        let e = assemble_cohort(
            read_persons_from(persons.as_bytes(), "persons.csv").unwrap(),
            read_spells_from(SPELLS.as_bytes(), "spells.csv").unwrap(),
            vec![],
            vec![],
        );
        assert!(e.is_err());
    }
}
