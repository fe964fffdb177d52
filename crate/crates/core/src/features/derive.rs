//! Per-person evaluation of catalog entries.

use std::collections::BTreeSet;

use chrono::NaiveDate;

use super::catalog::{
    ActivityMatch, AmountStat, Catalog, Derivation, Event, FeatureCatalogEntry, Quantity,
    SeifaDirection, Source, TopCodeRule,
};
use super::series::{biweekly_series, bin_count, fluctuation, overlapping_rates, window_total, BIN_DAYS};
use crate::data::{
    covered_days, date, ActivityKind, ActivityRecord, Cohort, ObservationWindow, PaymentFilter,
    PersonHistory,
};

/// What an entry may look at besides the person's own history.
#[derive(Clone, Copy)]
pub struct Env<'a> {
    /// Needed for parent-subject entries; without it they are missing.
    pub cohort: Option<&'a Cohort>,
    /// Values of earlier entries (`None` = missing or unknown).
    pub lookup: &'a dyn Fn(&str) -> Option<f64>,
}

impl Env<'_> {
    /// No cohort and no earlier entries.
    pub fn standalone() -> Env<'static> {
        Env {
            cohort: None,
            lookup: &|_| None,
        }
    }
}

/// Value of one entry for one person; `None` marks a missing value.
///
/// Percentile top-code flags need the whole sample and evaluate to 0 here;
/// [`super::build_matrix`] fills them in.
pub fn derive_feature(entry: &FeatureCatalogEntry, h: &PersonHistory, env: &Env<'_>) -> Option<f64> {
    derive_in(entry, &entry.window().ok()?, h, env)
}

fn derive_in(
    entry: &FeatureCatalogEntry,
    w: &ObservationWindow,
    h: &PersonHistory,
    env: &Env<'_>,
) -> Option<f64> {
    let w = *w;
    if let Some(src) = &entry.missing_unless {
        if !source_present(h, src, &w) {
            return None;
        }
    }
    let flag = |b: bool| Some(if b { 1.0 } else { 0.0 });
    match &entry.derivation {
        Derivation::EverIndicator { source, subject, .. } => match subject.role() {
            None => flag(source_present(h, source, &w)),
            Some(role) => {
                let parents = env.cohort?.parents(&h.person_id, role)?;
                flag(parents.iter().any(|p| source_present(p, source, &w)))
            }
        },
        Derivation::Duration { source, .. } => Some(covered_days(intervals(h, source), &w) as f64),
        Derivation::Count { event, .. } => Some(count_events(h, event, &w) as f64),
        Derivation::AmountTotal { quantity, stat, .. } => amount(h, quantity, *stat, &w),
        Derivation::Fluctuation {
            quantity, bin_cap, ..
        } => {
            let mut s = biweekly_series(h, &w, quantity);
            if let Some(cap) = bin_cap {
                s.iter_mut().for_each(|v| *v = v.min(*cap));
            }
            match fluctuation(&s) {
                (_, true) => None,
                (v, false) => Some(v),
            }
        }
        Derivation::Seasonality {
            source,
            month,
            quarter,
            year,
        } => {
            let (m0, m1) = match (month, quarter) {
                (Some(m), _) => (*m, *m),
                (None, Some(q)) => (3 * q - 2, 3 * q),
                _ => return None,
            };
            let first = date(*year, m0, 1);
            let last = last_of_month(*year, m1);
            let pw = ObservationWindow::new(first, last).ok()?;
            flag(covered_days(payment_intervals(h, source), &pw) > 0)
        }
        Derivation::AgeBand {
            attribute,
            reference,
            min,
            max,
            ..
        } => {
            let birth = crate::data::parse_date(h.attribute(attribute)?).ok()?;
            let age = reference.years_since(birth)?;
            flag(age >= *min && max.is_none_or(|m| age < m))
        }
        Derivation::CategoryOneHot {
            attribute,
            values,
            negate,
        } => {
            let v = h.attribute(attribute)?;
            let hit = values.iter().any(|x| x.eq_ignore_ascii_case(v.trim()));
            flag(hit != *negate)
        }
        Derivation::DerivedRatio {
            numerator,
            denominator,
            constant,
        } => {
            let num = (env.lookup)(numerator)?;
            let den = if denominator.is_empty() {
                (*constant)?
            } else {
                let mut s = 0.0;
                for d in denominator {
                    s += (env.lookup)(d)?;
                }
                s
            };
            if den == 0.0 {
                None
            } else {
                Some(num / den)
            }
        }
        Derivation::TopCodeFlag { base, rule } => {
            let v = (env.lookup)(base).unwrap_or(0.0);
            match *rule {
                TopCodeRule::Cap(c) => flag(v > c),
                TopCodeRule::Above(t) => flag(v > t),
                TopCodeRule::Percentile(_) => Some(0.0),
            }
        }
        Derivation::MissingFlag { attribute } => flag(h.attribute(attribute).is_none()),
        Derivation::Interaction { factors } => Some(
            factors
                .iter()
                .map(|f| (env.lookup)(f).unwrap_or(0.0))
                .product(),
        ),
    }
}

/// Evaluate every entry of `catalog` in order for one person. Cap rules
/// truncate their base entry in place before later entries read it.
pub fn derive_person(catalog: &Catalog, h: &PersonHistory, cohort: Option<&Cohort>) -> Vec<Option<f64>> {
    let mut values: Vec<Option<f64>> = Vec::with_capacity(catalog.len());
    for (k, e) in catalog.entries().iter().enumerate() {
        let v = {
            let lookup = |name: &str| catalog.position(name).and_then(|i| values.get(i).copied().flatten());
            derive_in(e, &catalog.window_of(k), h, &Env { cohort, lookup: &lookup })
        };
        if let Derivation::TopCodeFlag {
            base,
            rule: TopCodeRule::Cap(cap),
        } = &e.derivation
        {
            let i = catalog.position(base).expect("validated reference");
            if let Some(b) = values[i].as_mut() {
                *b = b.min(*cap);
            }
        }
        values.push(v);
    }
    values
}

fn last_of_month(y: i32, m: u32) -> NaiveDate {
    let (ny, nm) = if m == 12 { (y + 1, 1) } else { (y, m + 1) };
    date(ny, nm, 1).pred_opt().expect("valid date")
}

fn from_day(d: i64) -> NaiveDate {
    NaiveDate::from_num_days_from_ce_opt(d as i32).expect("day number in range")
}

fn overlaps(a: (i64, i64), w: &ObservationWindow) -> bool {
    a.0 <= w.last() && a.1 >= w.first()
}

fn activity_matches(r: &ActivityRecord, m: &ActivityMatch) -> bool {
    r.kind == m.kind
        && match &m.key {
            None => true,
            Some(k) => r
                .detail(k)
                .is_some_and(|v| m.values.is_empty() || m.values.iter().any(|x| x.eq_ignore_ascii_case(v))),
        }
}

fn payment_intervals<'a>(h: &'a PersonHistory, f: &'a PaymentFilter) -> impl Iterator<Item = (i64, i64)> + 'a {
    h.spells.iter().filter(move |s| f.matches(&s.category)).map(|s| s.days())
}

fn intervals(h: &PersonHistory, src: &Source) -> Vec<(i64, i64)> {
    match src {
        Source::Payments(f) => payment_intervals(h, f).collect(),
        Source::Activity(m) => h
            .activities
            .iter()
            .filter(|r| activity_matches(r, m))
            .map(|r| r.days())
            .collect(),
        Source::System => h
            .spells
            .iter()
            .map(|s| s.days())
            .chain(h.activities_of(ActivityKind::Suspension).map(|r| r.days()))
            .collect(),
        Source::Event(_) => Vec::new(),
    }
}

fn source_present(h: &PersonHistory, src: &Source, w: &ObservationWindow) -> bool {
    match src {
        Source::Event(e) => count_events(h, e, w) > 0,
        other => intervals(h, other).into_iter().any(|iv| overlaps(iv, w)),
    }
}

fn amount(h: &PersonHistory, q: &Quantity, stat: AmountStat, w: &ObservationWindow) -> Option<f64> {
    match stat {
        AmountStat::Total => Some(window_total(h, w, q)),
        AmountStat::MinDaily => overlapping_rates(h, w, q)
            .into_iter()
            .map(|(r, _)| r)
            .min_by(f64::total_cmp),
        AmountStat::MeanDaily => {
            let rates = overlapping_rates(h, w, q);
            if rates.is_empty() {
                return None;
            }
            let days = covered_days(quantity_intervals(h, q), w);
            (days > 0).then(|| window_total(h, w, q) / days as f64)
        }
    }
}

fn quantity_intervals(h: &PersonHistory, q: &Quantity) -> Vec<(i64, i64)> {
    match q {
        Quantity::BenefitAmount(f) => payment_intervals(h, f).collect(),
        Quantity::EmploymentIncome | Quantity::EmploymentHours => {
            h.activities_of(ActivityKind::Employment).map(|r| r.days()).collect()
        }
        Quantity::Rent => h.activities_of(ActivityKind::Housing).map(|r| r.days()).collect(),
    }
}

fn is_single(status: &str) -> Option<bool> {
    match status.to_ascii_lowercase().as_str() {
        "single" | "separated" | "divorced" | "widowed" => Some(true),
        "married" | "de-facto" | "defacto" => Some(false),
        _ => None,
    }
}

fn count_events(h: &PersonHistory, e: &Event, w: &ObservationWindow) -> usize {
    let starts_in = |d: (i64, i64)| d.0 >= w.first() && d.0 <= w.last();
    match e {
        Event::Records(m) => h
            .activities
            .iter()
            .filter(|r| activity_matches(r, m) && starts_in(r.days()))
            .count(),
        Event::Moves | Event::SeifaMoves { .. } => {
            let res: Vec<&ActivityRecord> = h.activities_of(ActivityKind::Residence).collect();
            let mut n = 0;
            for pair in res.windows(2) {
                let (prev, cur) = (pair[0], pair[1]);
                if !starts_in(cur.days()) || prev.detail("postcode") == cur.detail("postcode") {
                    continue;
                }
                let hit = match e {
                    Event::SeifaMoves { direction } => {
                        let a = prev.detail("seifa").and_then(|s| s.parse::<i64>().ok());
                        let b = cur.detail("seifa").and_then(|s| s.parse::<i64>().ok());
                        match (a, b) {
                            (Some(a), Some(b)) => match direction {
                                SeifaDirection::Up => b > a,
                                SeifaDirection::Down => b < a,
                                SeifaDirection::Same => b == a,
                            },
                            _ => false,
                        }
                    }
                    _ => true,
                };
                n += hit as usize;
            }
            n
        }
        Event::RelationshipChanges => {
            let rel: Vec<Option<bool>> = h
                .activities_of(ActivityKind::Relationship)
                .map(|r| r.detail("status").and_then(is_single))
                .collect();
            let starts: Vec<(i64, i64)> = h.activities_of(ActivityKind::Relationship).map(|r| r.days()).collect();
            (1..rel.len())
                .filter(|&i| starts_in(starts[i]))
                .filter(|&i| matches!((rel[i - 1], rel[i]), (Some(a), Some(b)) if a != b))
                .count()
        }
        Event::IsTransfers | Event::IsReentries => {
            let mut n = 0;
            let mut last: Option<(i64, crate::data::PaymentCode)> = None;
            for s in h.spells.iter().filter(|s| s.category.is_income_support) {
                let (a, b) = s.days();
                if let Some((end, code)) = last {
                    if starts_in((a, b)) {
                        let hit = match e {
                            Event::IsTransfers => end >= a - 1 && code != s.category.code,
                            _ => a > end + 1 && end >= w.first(),
                        };
                        n += hit as usize;
                    }
                }
                last = match last {
                    Some((end, code)) if end >= b => Some((end, code)),
                    _ => Some((b, s.category.code)),
                };
            }
            n
        }
        Event::Jobs => h
            .activities_of(ActivityKind::Employment)
            .filter(|r| overlaps(r.days(), w))
            .map(|r| r.detail("employer").unwrap_or(""))
            .collect::<BTreeSet<_>>()
            .len(),
        Event::MaxSimultaneousJobs => {
            let jobs: Vec<&ActivityRecord> = h
                .activities_of(ActivityKind::Employment)
                .filter(|r| overlaps(r.days(), w))
                .collect();
            jobs.iter()
                .map(|r| {
                    let d = r.days().0.max(w.first());
                    jobs.iter()
                        .filter(|o| o.days().0 <= d && o.days().1 >= d)
                        .map(|o| o.detail("employer").unwrap_or(""))
                        .collect::<BTreeSet<_>>()
                        .len()
                })
                .max()
                .unwrap_or(0)
        }
        Event::EmploymentSpells { max_gap } => {
            let mut iv: Vec<(i64, i64)> = h.activities_of(ActivityKind::Employment).map(|r| r.days()).collect();
            iv.sort_unstable();
            let mut merged: Vec<(i64, i64)> = Vec::new();
            for (a, b) in iv {
                match merged.last_mut() {
                    Some(m) if a - m.1 - 1 <= *max_gap => m.1 = m.1.max(b),
                    _ => merged.push((a, b)),
                }
            }
            merged.into_iter().filter(|&m| overlaps(m, w)).count()
        }
        Event::HoursChanges { min_pct, max_pct, abs } => {
            let s = biweekly_series(h, w, &Quantity::EmploymentHours);
            let full = (w.day_count() / BIN_DAYS) as usize;
            let s = &s[..full.min(bin_count(w))];
            s.windows(2)
                .filter(|p| p[0] > 0.0)
                .map(|p| (100.0 * (p[1] - p[0]) / p[0]).round() as i64)
                .map(|pct| if *abs { pct.abs() } else { pct })
                .filter(|&pct| min_pct.is_none_or(|m| pct >= m) && max_pct.is_none_or(|m| pct <= m))
                .count()
        }
        Event::Children { min_age, max_age } => h
            .activities_of(ActivityKind::Child)
            .filter(|r| overlaps(r.days(), w))
            .filter(|r| {
                let Some(birth) = r.detail("birth").and_then(|b| crate::data::parse_date(b).ok()) else {
                    return false;
                };
                let s = from_day(r.days().0.max(w.first()));
                let t = from_day(r.days().1.min(w.last()));
                let age_s = s.years_since(birth).unwrap_or(0);
                let age_t = t.years_since(birth).unwrap_or(0);
                age_t >= *min_age && max_age.is_none_or(|m| age_s < m)
            })
            .count(),
        Event::ZeroHours => h
            .activities_of(ActivityKind::Employment)
            .filter(|r| overlaps(r.days(), w) && r.amount == Some(0.0) && r.hours == Some(0.0))
            .count(),
        Event::MinWage { rate } => h
            .activities_of(ActivityKind::Employment)
            .filter(|r| overlaps(r.days(), w))
            .filter(|r| matches!((r.amount, r.hours), (Some(a), Some(hr)) if hr > 0.0 && a / hr <= *rate))
            .count(),
        Event::SingleParent => {
            let single: Vec<(i64, i64)> = h
                .activities_of(ActivityKind::Relationship)
                .filter(|r| r.detail("status").and_then(is_single) == Some(true))
                .map(|r| r.days())
                .collect();
            let kids: Vec<(i64, i64)> = h.activities_of(ActivityKind::Child).map(|r| r.days()).collect();
            let hit = single.iter().any(|&(a, b)| {
                kids.iter().any(|&(c, d)| {
                    let lo = a.max(c).max(w.first());
                    let hi = b.min(d).min(w.last());
                    lo <= hi
                })
            });
            hit as usize
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{PaymentCode, SpellRecord};

    fn entry(json: &str) -> FeatureCatalogEntry {
        serde_json::from_str(json).unwrap()
    }

    fn spell(code: PaymentCode, a: NaiveDate, b: NaiveDate, amt: Option<f64>) -> SpellRecord {
        SpellRecord::new("p", code.category(), a, b, amt).unwrap()
    }

    fn act(kind: ActivityKind, a: NaiveDate, b: NaiveDate) -> ActivityRecord {
        ActivityRecord::new("p", kind, a, b).unwrap()
    }

    #[test]
    fn duration_full_year() {
        let mut h = PersonHistory::new("p");
        h.push_spell(spell(PaymentCode::DisabilitySupportPension, date(2013, 5, 1), date(2015, 2, 1), None))
            .unwrap();
        let e = entry(r#"{"name":"p_isdur14","family":"duration","source":{"payments":"any-is"}}"#);
        assert_eq!(derive_feature(&e, &h, &Env::standalone()), Some(365.0));
        let ev = entry(r#"{"name":"p_evis14","family":"ever-indicator","source":{"payments":"any-is"}}"#);
        assert_eq!(derive_feature(&ev, &h, &Env::standalone()), Some(1.0));
        assert_eq!(derive_feature(&ev, &PersonHistory::new("q"), &Env::standalone()), Some(0.0));
    }

    #[test]
    fn wage_ratio_after_cap() {
        let catalog: Catalog = serde_json::from_str(
            r#"{"entries":[
            {"name":"inc","family":"amount-total","quantity":"employment-income"},
            {"name":"hrs","family":"amount-total","quantity":"employment-hours"},
            {"name":"hrstc","family":"top-code-flag","base":"hrs","rule":{"cap":5200}},
            {"name":"wage","family":"derived-ratio","numerator":"inc","denominator":["hrs"]}
        ]}"#,
        )
        .unwrap();
        // a whole-year job paying 5200 for 520 hours
        let mut h = PersonHistory::new("p");
        let days = 365.0 / 14.0;
        h.push_activity(
            act(ActivityKind::Employment, date(2014, 1, 1), date(2014, 12, 31))
                .with_amount(5200.0 / days)
                .with_hours(520.0 / days),
        )
        .unwrap();
        let v = derive_person(&catalog, &h, None);
        assert!((v[3].unwrap() - 10.0).abs() < 1e-9);
        assert_eq!(v[2], Some(0.0));

        let mut h = PersonHistory::new("p");
        h.push_activity(
            act(ActivityKind::Employment, date(2014, 1, 1), date(2014, 12, 31))
                .with_amount(52000.0 / days)
                .with_hours(6000.0 / days),
        )
        .unwrap();
        let v = derive_person(&catalog, &h, None);
        assert_eq!(v[1], Some(5200.0));
        assert_eq!(v[2], Some(1.0));
        assert!((v[3].unwrap() - 10.0).abs() < 1e-9);

        // no hours: wage undefined
        let v = derive_person(&catalog, &PersonHistory::new("p"), None);
        assert_eq!(v[3], None);
    }

    #[test]
    fn seasonality_and_age() {
        let mut h = PersonHistory::new("p");
        h.demographics.insert("birth_date".into(), "1990-06-15".into());
        h.push_spell(spell(PaymentCode::FamilyTaxBenefitA, date(2014, 12, 31), date(2015, 1, 3), None))
            .unwrap();
        let dec = entry(r#"{"name":"p_Dec2014","family":"seasonality","source":"any-payment","month":12,"year":2014}"#);
        let nov = entry(r#"{"name":"p_Nov2014","family":"seasonality","source":"any-payment","month":11,"year":2014}"#);
        let q4 = entry(r#"{"name":"p_qr42014","family":"seasonality","source":"any-payment","quarter":4,"year":2014}"#);
        let env = Env::standalone();
        assert_eq!(derive_feature(&dec, &h, &env), Some(1.0));
        assert_eq!(derive_feature(&nov, &h, &env), Some(0.0));
        assert_eq!(derive_feature(&q4, &h, &env), Some(1.0));
        // 23 on 2014-01-01
        let young = entry(r#"{"name":"a1","family":"age-band","reference":"2014-01-01","min":15,"max":25,"set":"c"}"#);
        let mid = entry(r#"{"name":"a2","family":"age-band","reference":"2014-01-01","min":25,"max":30,"set":"c"}"#);
        assert_eq!(derive_feature(&young, &h, &env), Some(1.0));
        assert_eq!(derive_feature(&mid, &h, &env), Some(0.0));
        assert_eq!(derive_feature(&mid, &PersonHistory::new("x"), &env), None);
    }

    #[test]
    fn event_counts() {
        let mut h = PersonHistory::new("p");
        let res = |a, b, pc: &str, seifa: &str| {
            act(ActivityKind::Residence, a, b)
                .with_detail("postcode", pc)
                .with_detail("seifa", seifa)
        };
        h.push_activity(res(date(2013, 1, 1), date(2014, 2, 28), "2000", "3")).unwrap();
        h.push_activity(res(date(2014, 3, 1), date(2014, 6, 30), "3000", "5")).unwrap();
        h.push_activity(res(date(2014, 7, 1), date(2014, 12, 31), "3000", "5")).unwrap();
        let w = ObservationWindow::baseline();
        assert_eq!(count_events(&h, &Event::Moves, &w), 1);
        assert_eq!(count_events(&h, &Event::SeifaMoves { direction: SeifaDirection::Up }, &w), 1);
        assert_eq!(count_events(&h, &Event::SeifaMoves { direction: SeifaDirection::Down }, &w), 0);

        let mut h = PersonHistory::new("p");
        h.push_spell(spell(PaymentCode::NewstartAllowance, date(2014, 1, 1), date(2014, 3, 31), None)).unwrap();
        h.push_spell(spell(PaymentCode::DisabilitySupportPension, date(2014, 4, 1), date(2014, 5, 31), None))
            .unwrap();
        h.push_spell(spell(PaymentCode::DisabilitySupportPension, date(2014, 8, 1), date(2014, 9, 30), None))
            .unwrap();
        assert_eq!(count_events(&h, &Event::IsTransfers, &w), 1);
        assert_eq!(count_events(&h, &Event::IsReentries, &w), 1);

        let mut h = PersonHistory::new("p");
        let job = |a, b, emp: &str| act(ActivityKind::Employment, a, b).with_detail("employer", emp);
        h.push_activity(job(date(2014, 1, 1), date(2014, 6, 30), "a")).unwrap();
        h.push_activity(job(date(2014, 3, 1), date(2014, 4, 30), "b")).unwrap();
        h.push_activity(job(date(2014, 3, 15), date(2014, 3, 20), "c")).unwrap();
        h.push_activity(job(date(2014, 8, 1), date(2014, 8, 30), "a")).unwrap();
        assert_eq!(count_events(&h, &Event::Jobs, &w), 3);
        assert_eq!(count_events(&h, &Event::MaxSimultaneousJobs, &w), 3);
        // gap 1 Jul - 31 Jul is 31 days: two spells; with 31-day bridging: one
        assert_eq!(count_events(&h, &Event::EmploymentSpells { max_gap: 28 }, &w), 2);
        assert_eq!(count_events(&h, &Event::EmploymentSpells { max_gap: 31 }, &w), 1);
    }

    #[test]
    fn children_and_single_parent() {
        let mut h = PersonHistory::new("p");
        h.push_activity(
            act(ActivityKind::Child, date(2010, 1, 1), date(2019, 1, 1)).with_detail("birth", "2009-12-01"),
        )
        .unwrap();
        h.push_activity(
            act(ActivityKind::Relationship, date(2014, 6, 1), date(2014, 12, 31)).with_detail("status", "separated"),
        )
        .unwrap();
        let w = ObservationWindow::baseline();
        // aged 4 then 5 during 2014
        assert_eq!(count_events(&h, &Event::Children { min_age: 0, max_age: Some(5) }, &w), 1);
        assert_eq!(count_events(&h, &Event::Children { min_age: 5, max_age: Some(8) }, &w), 1);
        assert_eq!(count_events(&h, &Event::Children { min_age: 8, max_age: None }, &w), 0);
        assert_eq!(count_events(&h, &Event::SingleParent, &w), 1);
    }

    #[test]
    fn parent_subject() {
        let mut cohort = Cohort::default();
        let mut mum = PersonHistory::new("m");
        mum.spells.push(SpellRecord::new("m", PaymentCode::ParentingPaymentSingle.category(), date(2014, 2, 1), date(2014, 3, 1), None).unwrap());
        cohort.others.insert("m".into(), mum);
        cohort.parent_links.insert("c".into(), vec![("m".into(), "mother".into())]);
        let child = PersonHistory::new("c");
        let e = entry(r#"{"name":"p_mais14","family":"ever-indicator","subject":"mother","source":{"payments":"any-is"}}"#);
        let f = entry(r#"{"name":"p_dais14","family":"ever-indicator","subject":"father","source":{"payments":"any-is"}}"#);
        let env = Env { cohort: Some(&cohort), lookup: &|_| None };
        assert_eq!(derive_feature(&e, &child, &env), Some(1.0));
        assert_eq!(derive_feature(&f, &child, &env), None);
    }

    #[test]
    fn missing_unless_is() {
        let e = entry(
            r#"{"name":"p_numjob2014","family":"count","event":"jobs","missing_unless":{"payments":"any-is"}}"#,
        );
        let env = Env::standalone();
        assert_eq!(derive_feature(&e, &PersonHistory::new("p"), &env), None);
        let mut h = PersonHistory::new("p");
        h.push_spell(spell(PaymentCode::NewstartAllowance, date(2014, 1, 1), date(2014, 1, 2), None)).unwrap();
        assert_eq!(derive_feature(&e, &h, &env), Some(0.0));
    }
}
