use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{day_number, PaymentCategory, DATA_END, DATA_START};
use crate::error::{Error, Result};

/// One dated payment spell. `end` is inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpellRecord {
    pub person_id: String,
    pub category: PaymentCategory,
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Currency per fortnight.
    pub amount: Option<f64>,
}

fn check_dates(start: NaiveDate, end: NaiveDate) -> Result<()> {
    if start > end {
        return Err(Error::invalid(format!("start {start} after end {end}")));
    }
    if start < DATA_START || end > DATA_END {
        return Err(Error::invalid(format!(
            "dates {start}..{end} outside {DATA_START}..{DATA_END}"
        )));
    }
    Ok(())
}

impl SpellRecord {
    pub fn new(
        person_id: impl Into<String>,
        category: PaymentCategory,
        start: NaiveDate,
        end: NaiveDate,
        amount: Option<f64>,
    ) -> Result<Self> {
        check_dates(start, end)?;
        Ok(Self {
            person_id: person_id.into(),
            category,
            start,
            end,
            amount,
        })
    }

    pub fn days(&self) -> (i64, i64) {
        (day_number(self.start), day_number(self.end))
    }
}

/// Non-payment administrative records that feed the predictor catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivityKind {
    /// Employment income spell: `amount` is income and `hours` hours worked,
    /// both per fortnight; detail `employer`.
    Employment,
    /// Payment suspended (a sanction).
    Suspension,
    /// Benefit terminated for breach of activity requirements.
    Breach,
    /// Residence spell; detail `state`, `sa3`, `postcode`, `seifa`.
    Residence,
    /// Relationship status spell; detail `status`.
    Relationship,
    /// A child in care; detail `birth` (child's birth date).
    Child,
    /// Housing spell; `amount` is rent per fortnight; detail `tenure`, `accommodation`.
    Housing,
    /// Enrolled in study.
    Study,
    /// Caring responsibility; detail `type` (`adult`/`child`).
    Care,
}

impl ActivityKind {
    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.trim().to_ascii_lowercase()))
            .map_err(|_| Error::invalid(format!("unknown activity kind {s:?}")))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActivityKind::Employment => "employment",
            ActivityKind::Suspension => "suspension",
            ActivityKind::Breach => "breach",
            ActivityKind::Residence => "residence",
            ActivityKind::Relationship => "relationship",
            ActivityKind::Child => "child",
            ActivityKind::Housing => "housing",
            ActivityKind::Study => "study",
            ActivityKind::Care => "care",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityRecord {
    pub person_id: String,
    pub kind: ActivityKind,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub amount: Option<f64>,
    pub hours: Option<f64>,
    pub detail: BTreeMap<String, String>,
}

impl ActivityRecord {
    pub fn new(
        person_id: impl Into<String>,
        kind: ActivityKind,
        start: NaiveDate,
        end: NaiveDate,
    ) -> Result<Self> {
        check_dates(start, end)?;
        Ok(Self {
            person_id: person_id.into(),
            kind,
            start,
            end,
            amount: None,
            hours: None,
            detail: BTreeMap::new(),
        })
    }

    pub fn with_amount(mut self, amount: f64) -> Self {
        self.amount = Some(amount);
        self
    }

    pub fn with_hours(mut self, hours: f64) -> Self {
        self.hours = Some(hours);
        self
    }

    pub fn with_detail(mut self, key: &str, value: impl Into<String>) -> Self {
        self.detail.insert(key.to_string(), value.into());
        self
    }

    pub fn days(&self) -> (i64, i64) {
        (day_number(self.start), day_number(self.end))
    }

    pub fn detail(&self, key: &str) -> Option<&str> {
        self.detail.get(key).map(String::as_str)
    }

    /// `key=value;key=value` form used in activity.csv.
    pub fn detail_string(&self) -> String {
        self.detail
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn parse_detail(s: &str) -> Result<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("detail item {part:?} is not key=value")))?;
            out.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(out)
    }
}

/// Everything recorded about one person.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PersonHistory {
    pub person_id: String,
    pub spells: Vec<SpellRecord>,
    pub activities: Vec<ActivityRecord>,
    /// Raw attributes such as `sex`, `birth_date`, `indigenous`,
    /// `country_of_birth`, `education`. Absent keys are missing values.
    pub demographics: BTreeMap<String, String>,
}

impl PersonHistory {
    pub fn new(person_id: impl Into<String>) -> Self {
        Self {
            person_id: person_id.into(),
            ..Default::default()
        }
    }

    /// Add a spell, enforcing that it belongs to this person. Spells are kept
    /// ordered by (start, end).
    pub fn push_spell(&mut self, s: SpellRecord) -> Result<()> {
        if s.person_id != self.person_id {
            return Err(Error::invalid(format!(
                "spell for {} added to history of {}",
                s.person_id, self.person_id
            )));
        }
        let pos = self
            .spells
            .partition_point(|x| (x.start, x.end) <= (s.start, s.end));
        self.spells.insert(pos, s);
        Ok(())
    }

    pub fn push_activity(&mut self, a: ActivityRecord) -> Result<()> {
        if a.person_id != self.person_id {
            return Err(Error::invalid(format!(
                "activity for {} added to history of {}",
                a.person_id, self.person_id
            )));
        }
        let pos = self
            .activities
            .partition_point(|x| (x.start, x.end) <= (a.start, a.end));
        self.activities.insert(pos, a);
        Ok(())
    }

    pub fn attribute(&self, key: &str) -> Option<&str> {
        self.demographics
            .get(key)
            .map(String::as_str)
            .filter(|v| !v.is_empty())
    }

    pub fn activities_of(&self, kind: ActivityKind) -> impl Iterator<Item = &ActivityRecord> {
        self.activities.iter().filter(move |a| a.kind == kind)
    }
}

/// A sample of people plus the records of linked non-sample people (parents).
#[derive(Debug, Clone, Default)]
pub struct Cohort {
    /// Sample members in input order; these become matrix rows.
    pub persons: Vec<PersonHistory>,
    /// Histories of people referenced only as parents.
    pub others: HashMap<String, PersonHistory>,
    /// child id -> (parent id, role)
    pub parent_links: HashMap<String, Vec<(String, String)>>,
}

impl Cohort {
    /// Look a history up among sample members and linked people.
    pub fn history(&self, id: &str) -> Option<&PersonHistory> {
        self.others
            .get(id)
            .or_else(|| self.persons.iter().find(|p| p.person_id == id))
    }

    /// Parent histories of `child` with the given role (`father`, `mother`,
    /// or `any`). `None` when no link of that role exists.
    pub fn parents<'a>(&'a self, child: &str, role: &str) -> Option<Vec<&'a PersonHistory>> {
        let links = self.parent_links.get(child)?;
        let matched: Vec<&PersonHistory> = links
            .iter()
            .filter(|(_, r)| role == "any" || r.eq_ignore_ascii_case(role))
            .filter_map(|(p, _)| self.history(p))
            .collect();
        let any_link = links
            .iter()
            .any(|(_, r)| role == "any" || r.eq_ignore_ascii_case(role));
        any_link.then_some(matched)
    }
}
