//! Fortnightly series and their fluctuation.

use super::catalog::Quantity;
use crate::data::{ActivityKind, ObservationWindow, PersonHistory};

/// Bin width in days.
pub const BIN_DAYS: i64 = 14;

/// Number of 14-day bins covering `w`, counting a final short bin.
pub fn bin_count(w: &ObservationWindow) -> usize {
    let days = w.day_count().max(0);
    ((days + BIN_DAYS - 1) / BIN_DAYS) as usize
}

/// (first day, last day, daily rate) for every record feeding `q`.
fn daily_rates(h: &PersonHistory, q: &Quantity) -> Vec<(i64, i64, f64)> {
    let per_day = |(a, b): (i64, i64), amount: f64| (a, b, amount / BIN_DAYS as f64);
    match q {
        Quantity::BenefitAmount(filter) => h
            .spells
            .iter()
            .filter(|s| filter.matches(&s.category))
            .filter_map(|s| s.amount.map(|a| per_day(s.days(), a)))
            .collect(),
        Quantity::EmploymentIncome => h
            .activities_of(ActivityKind::Employment)
            .filter_map(|r| r.amount.map(|a| per_day(r.days(), a)))
            .collect(),
        Quantity::EmploymentHours => h
            .activities_of(ActivityKind::Employment)
            .filter_map(|r| r.hours.map(|a| per_day(r.days(), a)))
            .collect(),
        Quantity::Rent => h
            .activities_of(ActivityKind::Housing)
            .filter_map(|r| r.amount.map(|a| per_day(r.days(), a)))
            .collect(),
    }
}

/// Per-fortnight totals of `q` over `w`. Bins are 14 days long starting at
/// `w.first_day`; the last bin may be shorter. Fortnightly amounts are spread
/// evenly over the days of their record.
pub fn biweekly_series(h: &PersonHistory, w: &ObservationWindow, q: &Quantity) -> Vec<f64> {
    let n = bin_count(w);
    let mut bins = vec![0.0; n];
    let (lo, hi) = (w.first(), w.last());
    for (a, b, rate) in daily_rates(h, q) {
        let (a, b) = (a.max(lo), b.min(hi));
        if a > b {
            continue;
        }
        let first = ((a - lo) / BIN_DAYS) as usize;
        let last = ((b - lo) / BIN_DAYS) as usize;
        for (k, bin) in bins.iter_mut().enumerate().take(last + 1).skip(first) {
            let bin_lo = lo + k as i64 * BIN_DAYS;
            let bin_hi = (bin_lo + BIN_DAYS - 1).min(hi);
            let overlap = b.min(bin_hi) - a.max(bin_lo) + 1;
            *bin += rate * overlap as f64;
        }
    }
    bins
}

/// Total of `q` over `w` (sum of the series without binning error).
pub fn window_total(h: &PersonHistory, w: &ObservationWindow, q: &Quantity) -> f64 {
    let (lo, hi) = (w.first(), w.last());
    daily_rates(h, q)
        .into_iter()
        .map(|(a, b, rate)| {
            let days = b.min(hi) - a.max(lo) + 1;
            if days > 0 {
                rate * days as f64
            } else {
                0.0
            }
        })
        .sum()
}

/// Daily rates of records of `q` overlapping `w`, with their overlap in days.
pub fn overlapping_rates(h: &PersonHistory, w: &ObservationWindow, q: &Quantity) -> Vec<(f64, i64)> {
    let (lo, hi) = (w.first(), w.last());
    daily_rates(h, q)
        .into_iter()
        .filter_map(|(a, b, rate)| {
            let days = b.min(hi) - a.max(lo) + 1;
            (days > 0).then_some((rate, days))
        })
        .collect()
}

/// Sample standard deviation (divisor `len - 1`). Series shorter than two
/// give `(0.0, true)`; the flag marks that the value is undefined.
pub fn fluctuation(series: &[f64]) -> (f64, bool) {
    let n = series.len();
    if n < 2 {
        return (0.0, true);
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let ss: f64 = series.iter().map(|x| (x - mean).powi(2)).sum();
    ((ss / (n - 1) as f64).sqrt(), false)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::data::{date, ActivityRecord, PaymentCode, PaymentFilter, SpellRecord};

    fn benefit() -> Quantity {
        Quantity::BenefitAmount(PaymentFilter::AnyPayment)
    }

    #[test]
    fn year_has_27_bins() {
        let w = ObservationWindow::baseline();
        assert_eq!(bin_count(&w), 27);
        let s = biweekly_series(&PersonHistory::new("a"), &w, &benefit());
        assert_eq!(s.len(), 27);
        assert!(s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spell_on_first_bin() {
        let mut h = PersonHistory::new("a");
        h.push_spell(
            SpellRecord::new(
                "a",
                PaymentCode::NewstartAllowance.category(),
                date(2014, 1, 1),
                date(2014, 1, 14),
                Some(140.0),
            )
            .unwrap(),
        )
        .unwrap();
        let s = biweekly_series(&h, &ObservationWindow::baseline(), &benefit());
        assert!((s[0] - 140.0).abs() < 1e-12);
        assert!(s[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn apportioned_across_bins() {
        let mut h = PersonHistory::new("a");
        let r = ActivityRecord::new("a", ActivityKind::Employment, date(2014, 1, 8), date(2014, 1, 21))
            .unwrap()
            .with_amount(280.0)
            .with_hours(28.0);
        h.push_activity(r).unwrap();
        let w = ObservationWindow::baseline();
        let s = biweekly_series(&h, &w, &Quantity::EmploymentIncome);
        assert!((s[0] - 140.0).abs() < 1e-9);
        assert!((s[1] - 140.0).abs() < 1e-9);
        let hours = biweekly_series(&h, &w, &Quantity::EmploymentHours);
        assert!((hours.iter().sum::<f64>() - 28.0).abs() < 1e-9);
        assert!((window_total(&h, &w, &Quantity::EmploymentIncome) - 280.0).abs() < 1e-9);
    }

    #[test]
    fn fluctuation_examples() {
        assert_eq!(fluctuation(&[3.0; 10]), (0.0, false));
        let mut v = vec![0.0; 13];
        v.extend([100.0; 13]);
        // direct formula: mean 50, every deviation 50
        let oracle = (26.0 * 2500.0 / 25.0f64).sqrt();
        assert!((fluctuation(&v).0 - oracle).abs() < 1e-12);
        assert!((oracle - 50.990).abs() < 1e-3);
        assert!((fluctuation(&[0.0, 2.0]).0 - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(fluctuation(&[1.0]), (0.0, true));
        assert_eq!(fluctuation(&[]), (0.0, true));
    }

    proptest! {
        #[test]
        fn fluctuation_nonnegative_and_shift_invariant(
            v in prop::collection::vec(-1e3f64..1e3, 2..40),
            c in -1e3f64..1e3,
        ) {
            let (a, _) = fluctuation(&v);
            prop_assert!(a >= 0.0);
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let (b, _) = fluctuation(&shifted);
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
        }

        #[test]
        fn series_sums_to_total(start in 0i64..365, len in 0i64..200, amt in 0.0f64..2000.0) {
            let base = crate::data::day_number(date(2014, 1, 1));
            let d = |x: i64| chrono::NaiveDate::from_num_days_from_ce_opt((base + x) as i32).unwrap();
            let mut h = PersonHistory::new("a");
            h.push_spell(SpellRecord::new("a", PaymentCode::AgePension.category(), d(start), d(start + len), Some(amt)).unwrap()).unwrap();
            let w = ObservationWindow::baseline();
            let s = biweekly_series(&h, &w, &benefit());
            let total = window_total(&h, &w, &benefit());
            prop_assert!((s.iter().sum::<f64>() - total).abs() < 1e-7);
        }
    }
}
