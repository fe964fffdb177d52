use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data::{ActivityKind, ObservationWindow, PaymentFilter};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    EverIndicator,
    Duration,
    Count,
    AmountTotal,
    Fluctuation,
    Seasonality,
    AgeBand,
    CategoryOneHot,
    DerivedRatio,
    TopCodeFlag,
    MissingFlag,
    Interaction,
}

/// Whose records an entry reads.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subject {
    #[default]
    #[serde(rename = "self")]
    Own,
    Father,
    Mother,
    AnyParent,
}

impl Subject {
    pub fn role(self) -> Option<&'static str> {
        match self {
            Subject::Own => None,
            Subject::Father => Some("father"),
            Subject::Mother => Some("mother"),
            Subject::AnyParent => Some("any"),
        }
    }
}

/// Activity records of one kind, optionally restricted to a detail value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityMatch {
    pub kind: ActivityKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<String>,
}

/// Dated intervals an entry measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Payments(PaymentFilter),
    Activity(ActivityMatch),
    /// Any payment or suspension: days "in the system".
    System,
    /// At least one occurrence of an event.
    Event(Event),
}

/// Countable events inside a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Event {
    /// Records starting inside the window.
    Records(ActivityMatch),
    /// Residence records starting in the window at a new postcode.
    Moves,
    /// Moves to a higher, lower or equal SEIFA decile.
    SeifaMoves { direction: SeifaDirection },
    /// Switches between single and partnered status.
    RelationshipChanges,
    /// Income-support spell followed without a gap by a different payment.
    IsTransfers,
    /// Returns to income support after leaving within the window.
    IsReentries,
    /// Distinct employers.
    Jobs,
    /// Largest number of employers held on the same day.
    MaxSimultaneousJobs,
    /// Employment spells after bridging breaks of at most `max_gap` days.
    EmploymentSpells { max_gap: i64 },
    /// Fortnight-to-fortnight hours changes whose rounded percentage lies in
    /// `[min_pct, max_pct]` (of its absolute value when `abs`).
    HoursChanges {
        #[serde(default)]
        min_pct: Option<i64>,
        #[serde(default)]
        max_pct: Option<i64>,
        #[serde(default)]
        abs: bool,
    },
    /// Children in care whose age falls in `[min_age, max_age)` at some
    /// point of the window.
    Children {
        min_age: u32,
        #[serde(default)]
        max_age: Option<u32>,
    },
    /// Employment records with zero income and zero hours.
    ZeroHours,
    /// Employment records paying at most `rate` per hour.
    MinWage { rate: f64 },
    /// A day on which the person is single with a child in care.
    SingleParent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeifaDirection {
    Up,
    Down,
    Same,
}

/// Amount streams that can be totalled or binned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    BenefitAmount(PaymentFilter),
    EmploymentIncome,
    EmploymentHours,
    Rent,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmountStat {
    #[default]
    Total,
    /// Smallest per-day rate among records overlapping the window.
    MinDaily,
    /// Total divided by the number of days with a record.
    MeanDaily,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopCodeRule {
    /// Truncate the base entry at this value and flag truncated rows.
    Cap(f64),
    /// Flag rows at or above this sample quantile.
    Percentile(f64),
    /// Flag rows strictly above this value.
    Above(f64),
}

fn default_window() -> String {
    "2014-2014".into()
}

fn default_birth() -> String {
    "birth_date".into()
}

/// How an entry is computed. The tag doubles as the entry's family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Derivation {
    EverIndicator {
        source: Source,
        #[serde(default = "default_window")]
        window: String,
        #[serde(default)]
        subject: Subject,
    },
    Duration {
        source: Source,
        #[serde(default = "default_window")]
        window: String,
    },
    Count {
        event: Event,
        #[serde(default = "default_window")]
        window: String,
    },
    AmountTotal {
        quantity: Quantity,
        #[serde(default)]
        stat: AmountStat,
        #[serde(default = "default_window")]
        window: String,
    },
    Fluctuation {
        quantity: Quantity,
        #[serde(default = "default_window")]
        window: String,
        /// Per-fortnight cap applied before the standard deviation.
        #[serde(default)]
        bin_cap: Option<f64>,
    },
    Seasonality {
        source: PaymentFilter,
        #[serde(default)]
        month: Option<u32>,
        #[serde(default)]
        quarter: Option<u32>,
        year: i32,
    },
    AgeBand {
        #[serde(default = "default_birth")]
        attribute: String,
        reference: NaiveDate,
        min: u32,
        #[serde(default)]
        max: Option<u32>,
        /// Bands sharing a set are mutually exclusive.
        set: String,
    },
    CategoryOneHot {
        attribute: String,
        values: Vec<String>,
        #[serde(default)]
        negate: bool,
    },
    DerivedRatio {
        numerator: String,
        #[serde(default)]
        denominator: Vec<String>,
        #[serde(default)]
        constant: Option<f64>,
    },
    TopCodeFlag {
        base: String,
        rule: TopCodeRule,
    },
    MissingFlag {
        attribute: String,
    },
    Interaction {
        factors: Vec<String>,
    },
}

impl Derivation {
    pub fn family(&self) -> Family {
        match self {
            Derivation::EverIndicator { .. } => Family::EverIndicator,
            Derivation::Duration { .. } => Family::Duration,
            Derivation::Count { .. } => Family::Count,
            Derivation::AmountTotal { .. } => Family::AmountTotal,
            Derivation::Fluctuation { .. } => Family::Fluctuation,
            Derivation::Seasonality { .. } => Family::Seasonality,
            Derivation::AgeBand { .. } => Family::AgeBand,
            Derivation::CategoryOneHot { .. } => Family::CategoryOneHot,
            Derivation::DerivedRatio { .. } => Family::DerivedRatio,
            Derivation::TopCodeFlag { .. } => Family::TopCodeFlag,
            Derivation::MissingFlag { .. } => Family::MissingFlag,
            Derivation::Interaction { .. } => Family::Interaction,
        }
    }

    /// Names of entries this one reads.
    pub fn references(&self) -> Vec<&str> {
        match self {
            Derivation::DerivedRatio {
                numerator,
                denominator,
                ..
            } => std::iter::once(numerator.as_str())
                .chain(denominator.iter().map(String::as_str))
                .collect(),
            Derivation::TopCodeFlag { base, .. } => vec![base.as_str()],
            Derivation::Interaction { factors } => factors.iter().map(String::as_str).collect(),
            _ => Vec::new(),
        }
    }

    fn window_str(&self) -> Option<&str> {
        match self {
            Derivation::EverIndicator { window, .. }
            | Derivation::Duration { window, .. }
            | Derivation::Count { window, .. }
            | Derivation::AmountTotal { window, .. }
            | Derivation::Fluctuation { window, .. } => Some(window),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCatalogEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    /// Tags used to select ladder inputs (e.g. `heuristic`, `is-history`).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<String>,
    /// The value is missing unless the person has a record of this source
    /// in the entry's window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing_unless: Option<Source>,
    #[serde(flatten)]
    pub derivation: Derivation,
}

impl FeatureCatalogEntry {
    pub fn family(&self) -> Family {
        self.derivation.family()
    }

    /// Parsed observation window (calendar 2014 when not given).
    pub fn window(&self) -> Result<ObservationWindow> {
        match self.derivation.window_str() {
            Some(w) => ObservationWindow::parse(w),
            None => Ok(ObservationWindow::baseline()),
        }
    }
}

/// A validated, ordered list of entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CatalogFile", into = "CatalogFile")]
pub struct Catalog {
    pub version: String,
    entries: Vec<FeatureCatalogEntry>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    #[serde(skip)]
    missing_prone: Vec<bool>,
    #[serde(skip)]
    windows: Vec<ObservationWindow>,
}

#[derive(Serialize, Deserialize)]
struct CatalogFile {
    #[serde(default)]
    version: String,
    entries: Vec<FeatureCatalogEntry>,
}

impl TryFrom<CatalogFile> for Catalog {
    type Error = Error;
    fn try_from(f: CatalogFile) -> Result<Self> {
        Catalog::new(f.version, f.entries)
    }
}

impl From<Catalog> for CatalogFile {
    fn from(c: Catalog) -> Self {
        CatalogFile {
            version: c.version,
            entries: c.entries,
        }
    }
}

const SHIPPED: &str = include_str!("../../data/catalog.json");

impl Catalog {
    pub fn new(version: impl Into<String>, entries: Vec<FeatureCatalogEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyCatalog);
        }
        let mut index = HashMap::with_capacity(entries.len());
        let mut missing_prone: Vec<bool> = Vec::with_capacity(entries.len());
        let mut windows = Vec::with_capacity(entries.len());
        let mut band_sets: HashMap<&str, (&str, NaiveDate)> = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            if e.name.is_empty() || e.name.contains(',') {
                return Err(Error::Config(format!("bad feature name {:?}", e.name)));
            }
            if index.contains_key(&e.name) {
                return Err(Error::DuplicateFeature(e.name.clone()));
            }
            for r in e.derivation.references() {
                if !index.contains_key(r) {
                    return Err(Error::Config(format!(
                        "{} refers to {r:?}, which is not an earlier entry",
                        e.name
                    )));
                }
            }
            windows.push(e.window().map_err(|err| {
                Error::Config(format!("{}: {err}", e.name))
            })?);
            check_params(e, &mut band_sets)?;
            let prone = entry_missing_prone(e, &windows[i], |r| missing_prone[index[r]]);
            missing_prone.push(prone);
            index.insert(e.name.clone(), i);
        }
        // A column generated for the missing policy must not clash with an entry.
        for (e, &p) in entries.iter().zip(&missing_prone) {
            if p && index.contains_key(&miss_name(&e.name)) {
                return Err(Error::DuplicateFeature(miss_name(&e.name)));
            }
        }
        Ok(Self {
            version: version.into(),
            entries,
            index,
            missing_prone,
            windows,
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
        })?;
        Self::from_json(&text)
    }

    /// The catalog bundled with the crate.
    pub fn shipped() -> Self {
        Self::from_json(SHIPPED).expect("bundled catalog is valid")
    }

    pub fn shipped_json() -> &'static str {
        SHIPPED
    }

    pub fn entries(&self) -> &[FeatureCatalogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&FeatureCatalogEntry> {
        self.position(name).map(|i| &self.entries[i])
    }

    /// Whether entry `i` can be missing, and so carries a `miss` column.
    pub fn is_missing_prone(&self, i: usize) -> bool {
        self.missing_prone[i]
    }

    pub fn window_of(&self, i: usize) -> ObservationWindow {
        self.windows[i]
    }

    /// Number of matrix columns the catalog produces.
    pub fn column_count(&self) -> usize {
        self.entries.len() + self.missing_prone.iter().filter(|&&p| p).count()
    }

    /// All group tags in first-use order.
    pub fn groups(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for e in &self.entries {
            for g in &e.groups {
                if seen.insert(g.clone()) {
                    out.push(g.clone());
                }
            }
        }
        out
    }
}

/// Name of the missing-indicator column paired with `name`.
pub fn miss_name(name: &str) -> String {
    format!("{name}miss")
}

fn entry_missing_prone(
    e: &FeatureCatalogEntry,
    window: &ObservationWindow,
    prone: impl Fn(&str) -> bool,
) -> bool {
    if e.missing_unless.is_some() {
        return true;
    }
    match &e.derivation {
        Derivation::EverIndicator { subject, .. } => *subject != Subject::Own,
        Derivation::AmountTotal { stat, .. } => *stat != AmountStat::Total,
        Derivation::Fluctuation { .. } => super::series::bin_count(window) < 2,
        Derivation::AgeBand { .. } | Derivation::CategoryOneHot { .. } => true,
        Derivation::DerivedRatio {
            numerator,
            denominator,
            ..
        } => !denominator.is_empty() || prone(numerator),
        Derivation::Duration { .. }
        | Derivation::Count { .. }
        | Derivation::Seasonality { .. }
        | Derivation::TopCodeFlag { .. }
        | Derivation::MissingFlag { .. }
        | Derivation::Interaction { .. } => false,
    }
}

fn check_params<'a>(
    e: &'a FeatureCatalogEntry,
    band_sets: &mut HashMap<&'a str, (&'a str, NaiveDate)>,
) -> Result<()> {
    let bad = |msg: &str| Err(Error::Config(format!("{}: {msg}", e.name)));
    match &e.derivation {
        Derivation::Seasonality { month, quarter, .. } => match (month, quarter) {
            (Some(m), None) if (1..=12).contains(m) => Ok(()),
            (None, Some(q)) if (1..=4).contains(q) => Ok(()),
            _ => bad("seasonality needs exactly one of month 1-12 or quarter 1-4"),
        },
        Derivation::AgeBand {
            attribute,
            reference,
            min,
            max,
            set,
        } => {
            if max.is_some_and(|m| m <= *min) {
                return bad("age band max must exceed min");
            }
            match band_sets.get(set.as_str()) {
                Some(&(a, r)) if a != attribute || r != *reference => {
                    bad("bands in one set must share attribute and reference date")
                }
                _ => {
                    band_sets.insert(set, (attribute, *reference));
                    Ok(())
                }
            }
        }
        Derivation::CategoryOneHot { values, .. } if values.is_empty() => {
            bad("one-hot needs at least one value")
        }
        Derivation::DerivedRatio {
            denominator,
            constant,
            ..
        } => match (denominator.is_empty(), constant) {
            (true, Some(c)) if *c != 0.0 && c.is_finite() => Ok(()),
            (false, None) => Ok(()),
            _ => bad("ratio needs either denominator entries or a non-zero constant"),
        },
        Derivation::TopCodeFlag { rule, .. } => match rule {
            TopCodeRule::Percentile(p) if !(0.0..=1.0).contains(p) => {
                bad("percentile must lie in [0, 1]")
            }
            _ => Ok(()),
        },
        Derivation::Interaction { factors } if factors.len() < 2 => {
            bad("interaction needs at least two factors")
        }
        Derivation::Count {
            event: Event::EmploymentSpells { max_gap },
            ..
        } if *max_gap < 0 => bad("max_gap must be non-negative"),
        _ => Ok(()),
    }
}
