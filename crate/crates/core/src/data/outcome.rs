use super::{ObservationWindow, PaymentFilter, PersonHistory, Subfamily};
use crate::error::{Error, Result};

/// Filters accepted by [`outcome_proportion`].
pub type OutcomeFilter = PaymentFilter;

impl PaymentFilter {
    pub fn unemployment() -> Self {
        PaymentFilter::subfamilies([Subfamily::Unemployment])
    }

    /// `any-is` or `unemployment`, as used on the command line.
    pub fn parse_outcome(s: &str) -> Result<Self> {
        match s.trim() {
            "any-is" => Ok(PaymentFilter::AnyIs),
            "unemployment" => Ok(Self::unemployment()),
            other => Err(Error::invalid(format!(
                "unknown outcome {other:?} (expected any-is or unemployment)"
            ))),
        }
    }
}

/// Number of distinct days of `w` covered by at least one closed interval.
/// Intervals are day numbers, inclusive on both ends.
pub fn covered_days<I>(intervals: I, w: &ObservationWindow) -> i64
where
    I: IntoIterator<Item = (i64, i64)>,
{
    let (lo, hi) = (w.first(), w.last());
    let mut clipped: Vec<(i64, i64)> = intervals
        .into_iter()
        .filter_map(|(a, b)| {
            let (a, b) = (a.max(lo), b.min(hi));
            (a <= b).then_some((a, b))
        })
        .collect();
    clipped.sort_unstable();
    let mut total = 0;
    let mut cur: Option<(i64, i64)> = None;
    for (a, b) in clipped {
        match cur {
            Some((ca, cb)) if a <= cb + 1 => cur = Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                total += cb - ca + 1;
                cur = Some((a, b));
            }
            None => cur = Some((a, b)),
        }
    }
    if let Some((ca, cb)) = cur {
        total += cb - ca + 1;
    }
    total
}

/// Share of days in `w` on which at least one spell passing `filter` was
/// paid. Overlapping spells count each day once.
pub fn outcome_proportion(
    h: &PersonHistory,
    w: &ObservationWindow,
    filter: &OutcomeFilter,
) -> Result<f64> {
    let days = w.day_count();
    if days <= 0 {
        return Err(Error::EmptyWindow);
    }
    let covered = covered_days(
        h.spells
            .iter()
            .filter(|s| filter.matches(&s.category))
            .map(|s| s.days()),
        w,
    );
    Ok(covered as f64 / days as f64)
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use proptest::prelude::*;

    use super::*;
    use crate::data::{date, day_number, PaymentCode, SpellRecord};

    fn spell(code: PaymentCode, a: (i32, u32, u32), b: (i32, u32, u32)) -> SpellRecord {
        SpellRecord::new(
            "p",
            code.category(),
            date(a.0, a.1, a.2),
            date(b.0, b.1, b.2),
            None,
        )
        .unwrap()
    }

    fn history(spells: Vec<SpellRecord>) -> PersonHistory {
        let mut h = PersonHistory::new("p");
        for s in spells {
            h.push_spell(s).unwrap();
        }
        h
    }

    /// Day-by-day enumeration oracle.
    fn enumerate(h: &PersonHistory, w: &ObservationWindow, f: &OutcomeFilter) -> f64 {
        let mut days = HashSet::new();
        for s in h.spells.iter().filter(|s| f.matches(&s.category)) {
            let (a, b) = s.days();
            for d in a..=b {
                if d >= w.first() && d <= w.last() {
                    days.insert(d);
                }
            }
        }
        days.len() as f64 / w.day_count() as f64
    }

    #[test]
    fn full_coverage_is_one() {
        let h = history(vec![spell(PaymentCode::AgePension, (2014, 6, 1), (2019, 1, 5))]);
        let w = ObservationWindow::outcome();
        assert_eq!(outcome_proportion(&h, &w, &OutcomeFilter::AnyIs).unwrap(), 1.0);
    }

    #[test]
    fn no_qualifying_spells_is_zero() {
        let h = history(vec![spell(
            PaymentCode::FamilyTaxBenefitA,
            (2015, 1, 1),
            (2018, 12, 31),
        )]);
        let w = ObservationWindow::outcome();
        assert_eq!(outcome_proportion(&h, &w, &OutcomeFilter::AnyIs).unwrap(), 0.0);
    }

    #[test]
    fn single_year() {
        let h = history(vec![spell(PaymentCode::NewstartAllowance, (2015, 1, 1), (2015, 12, 31))]);
        let w = ObservationWindow::outcome();
        let p = outcome_proportion(&h, &w, &OutcomeFilter::AnyIs).unwrap();
        assert_eq!(p, 365.0 / 1461.0);
        assert_eq!(p, enumerate(&h, &w, &OutcomeFilter::AnyIs));
        assert!((p - 0.24983).abs() < 1e-5);
    }

    #[test]
    fn overlaps_count_once() {
        let h = history(vec![
            spell(PaymentCode::NewstartAllowance, (2015, 1, 1), (2015, 6, 30)),
            spell(PaymentCode::DisabilitySupportPension, (2015, 3, 1), (2015, 12, 31)),
            spell(PaymentCode::DisabilitySupportPension, (2015, 12, 31), (2015, 12, 31)),
        ]);
        let w = ObservationWindow::outcome();
        assert_eq!(outcome_proportion(&h, &w, &OutcomeFilter::AnyIs).unwrap(), 365.0 / 1461.0);
    }

    #[test]
    fn empty_window_error() {
        let h = history(vec![]);
        let w = ObservationWindow {
            first_day: date(2015, 1, 2),
            last_day: date(2015, 1, 1),
        };
        assert!(matches!(
            outcome_proportion(&h, &w, &OutcomeFilter::AnyIs),
            Err(Error::EmptyWindow)
        ));
    }

    const CODES: &[PaymentCode] = &[
        PaymentCode::NewstartAllowance,
        PaymentCode::YouthAllowanceOther,
        PaymentCode::DisabilitySupportPension,
        PaymentCode::ParentingPaymentSingle,
        PaymentCode::FamilyTaxBenefitA,
    ];

    fn arb_spells() -> impl Strategy<Value = Vec<(usize, i64, i64)>> {
        prop::collection::vec((0..CODES.len(), 0i64..1500, 0i64..400), 0..8)
    }

    fn build(raw: &[(usize, i64, i64)]) -> PersonHistory {
        let base = day_number(date(2014, 1, 1));
        let spells = raw
            .iter()
            .map(|&(c, off, len)| {
                let s = chrono::NaiveDate::from_num_days_from_ce_opt((base + off) as i32).unwrap();
                let e = chrono::NaiveDate::from_num_days_from_ce_opt((base + off + len) as i32)
                    .unwrap();
                SpellRecord::new("p", CODES[c].category(), s, e, None).unwrap()
            })
            .collect();
        history(spells)
    }

    proptest! {
        #[test]
        fn matches_enumeration(raw in arb_spells()) {
            let h = build(&raw);
            let w = ObservationWindow::outcome();
            for f in [OutcomeFilter::AnyIs, OutcomeFilter::unemployment()] {
                prop_assert_eq!(outcome_proportion(&h, &w, &f).unwrap(), enumerate(&h, &w, &f));
            }
        }

        #[test]
        fn monotone_in_spells(raw in arb_spells(), extra in (0..CODES.len(), 0i64..1500, 0i64..400)) {
            let w = ObservationWindow::outcome();
            let before = outcome_proportion(&build(&raw), &w, &OutcomeFilter::AnyIs).unwrap();
            let mut more = raw.clone();
            more.push(extra);
            let after = outcome_proportion(&build(&more), &w, &OutcomeFilter::AnyIs).unwrap();
            prop_assert!(after >= before);
        }

        #[test]
        fn unemployment_bounded_by_any_is(raw in arb_spells()) {
            let h = build(&raw);
            let w = ObservationWindow::outcome();
            let u = outcome_proportion(&h, &w, &OutcomeFilter::unemployment()).unwrap();
            let a = outcome_proportion(&h, &w, &OutcomeFilter::AnyIs).unwrap();
            prop_assert!(u <= a);
        }

        #[test]
        fn splitting_a_spell_is_neutral(c in 0..CODES.len(), off in 0i64..1500, len in 1i64..600, cut in 0i64..600) {
            let cut = cut % len;
            let w = ObservationWindow::outcome();
            let whole = build(&[(c, off, len)]);
            let split = build(&[(c, off, cut), (c, off + cut + 1, len - cut - 1)]);
            prop_assert_eq!(
                outcome_proportion(&whole, &w, &OutcomeFilter::AnyIs).unwrap(),
                outcome_proportion(&split, &w, &OutcomeFilter::AnyIs).unwrap()
            );
        }
    }
}
