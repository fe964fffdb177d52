//! Record generation for one synthetic person.

use chrono::{Duration, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{date, ActivityKind, ActivityRecord, PaymentCode, PersonHistory, SpellRecord};
use crate::learners::norm_cdf as phi;
use crate::seed::Rng as SeedRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Archetype {
    Disability,
    Migrant,
    YoungUnemployed,
    Parent,
}

impl Archetype {
    pub const ALL: [Archetype; 4] = [
        Archetype::Disability,
        Archetype::Migrant,
        Archetype::YoungUnemployed,
        Archetype::Parent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Archetype::Disability => "disability",
            Archetype::Migrant => "migrant",
            Archetype::YoungUnemployed => "young-unemployed",
            Archetype::Parent => "parent",
        }
    }

    fn shift(self) -> f64 {
        match self {
            Archetype::Disability => 1.0,
            Archetype::Migrant => -0.3,
            Archetype::YoungUnemployed => 0.2,
            Archetype::Parent => 0.3,
        }
    }
}

const REFERENCE: NaiveDate = match NaiveDate::from_ymd_opt(2014, 1, 1) {
    Some(d) => d,
    None => panic!(),
};

fn day(base: NaiveDate, k: i64) -> NaiveDate {
    base + Duration::days(k)
}

fn normal(rng: &mut SeedRng) -> f64 {
    StandardNormal.sample(rng)
}

fn pick<'a, T>(rng: &mut SeedRng, items: &'a [(T, f64)]) -> &'a T {
    let total: f64 = items.iter().map(|(_, w)| w).sum();
    let mut u = rng.random::<f64>() * total;
    for (t, w) in items {
        if u < *w {
            return t;
        }
        u -= w;
    }
    &items[items.len() - 1].0
}

fn poisson(rng: &mut SeedRng, lambda: f64) -> usize {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).map(|p| p.sample(rng) as usize).unwrap_or(0)
}

/// Split `total` covered days of a `len`-day window into `pieces` disjoint
/// intervals separated by random gaps. Offsets are inclusive.
pub fn place(rng: &mut SeedRng, total: i64, len: i64, pieces: usize) -> Vec<(i64, i64)> {
    let total = total.clamp(0, len);
    if total == 0 {
        return Vec::new();
    }
    let pieces = (pieces.max(1) as i64).min(total).min(len - total + 1).max(1) as usize;
    let cuts = |rng: &mut SeedRng, sum: i64, parts: usize, min: i64| -> Vec<i64> {
        // parts values >= min adding up to sum
        let free = sum - min * parts as i64;
        let mut marks: Vec<i64> = (0..parts - 1).map(|_| rng.random_range(0..=free)).collect();
        marks.sort_unstable();
        let mut out = Vec::with_capacity(parts);
        let mut prev = 0;
        for m in marks {
            out.push(m - prev + min);
            prev = m;
        }
        out.push(free - prev + min);
        out
    };
    let lengths = cuts(rng, total, pieces, 1);
    // inner gaps at least one day so pieces stay distinct
    let gaps = cuts(rng, len - total, pieces + 1, 0);
    let mut gaps = gaps;
    for g in gaps.iter_mut().take(pieces).skip(1) {
        if *g == 0 {
            *g = 1;
        }
    }
    let over: i64 = gaps.iter().sum::<i64>() - (len - total);
    if over > 0 {
        // take the extra days back from the outer gaps
        let mut left = over;
        for idx in [0, pieces] {
            let t = left.min(gaps[idx]);
            gaps[idx] -= t;
            left -= t;
        }
        let mut i = 1;
        while left > 0 && i < pieces {
            if gaps[i] > 1 {
                gaps[i] -= 1;
                left -= 1;
            } else {
                i += 1;
            }
        }
    }
    let mut out = Vec::with_capacity(pieces);
    let mut at = gaps[0];
    for (p, &l) in lengths.iter().enumerate() {
        out.push((at, at + l - 1));
        at += l + gaps[p + 1];
    }
    out
}

fn base_amount(code: PaymentCode) -> f64 {
    use PaymentCode::*;
    match code {
        AgePension | DisabilitySupportPension | CarerPayment | WifePensionAge | WifePensionDsp => 780.0,
        ParentingPaymentSingle => 700.0,
        ParentingPaymentPartnered | NewstartAllowance | NewstartMatureAgeAllowance | SicknessAllowance
        | PartnerAllowance | SpecialBenefit | WidowAllowance => 520.0,
        YouthAllowanceOther | YouthAllowanceStudent | YouthAllowanceApprentice | Austudy => 420.0,
        FamilyTaxBenefitA => 320.0,
        FamilyTaxBenefitB => 140.0,
        RentalAssistanceFamily | RentalAssistanceParenting | RentalAssistanceNewstart | RentalAssistancePension
        | RentalAssistanceAbstudy => 120.0,
        RemoteAreaAllowance => 18.0,
        CrisisPayment | AdvancePayment => 250.0,
        CarerAllowance => 120.0,
        _ => 500.0,
    }
}

const STATES: [(&str, f64); 8] = [
    ("NSW", 0.32),
    ("VIC", 0.25),
    ("QLD", 0.20),
    ("SA", 0.07),
    ("WA", 0.10),
    ("TAS", 0.02),
    ("NT", 0.01),
    ("ACT", 0.03),
];

fn sa3_of(state: &str) -> &'static [&'static str] {
    match state {
        "NSW" => &["101", "102", "103", "104", "105"],
        "VIC" => &["201", "202", "203", "204"],
        "QLD" => &["301", "302", "303"],
        "SA" => &["401", "402"],
        "WA" => &["501", "502"],
        "TAS" => &["601"],
        "NT" => &["701"],
        _ => &["801", "802"],
    }
}

const OVERSEAS: [(&str, &str, f64); 14] = [
    ("United Kingdom", "europe", 0.14),
    ("New Zealand", "oceania", 0.12),
    ("India", "asia", 0.10),
    ("China", "asia", 0.10),
    ("Vietnam", "asia", 0.08),
    ("Philippines", "asia", 0.07),
    ("Lebanon", "mena", 0.06),
    ("Iraq", "mena", 0.06),
    ("Sudan", "sub-saharan-africa", 0.06),
    ("Somalia", "sub-saharan-africa", 0.04),
    ("United States", "north-america", 0.04),
    ("El Salvador", "central-america", 0.03),
    ("Chile", "south-america", 0.04),
    ("Italy", "europe", 0.06),
];

const EDUCATION: [&str; 9] = ["y10", "y12", "cert1", "cert2", "cert3", "cert4", "dip", "bach", "postgrad"];

/// Latent draws that shape a person's records.
#[derive(Debug, Clone)]
pub struct Latent {
    pub archetype: Archetype,
    pub propensity: f64,
    pub age: f64,
}

/// Builder for one person's records.
pub struct PersonGen<'r> {
    pub rng: &'r mut SeedRng,
    pub h: PersonHistory,
    pub latent: Latent,
    pub history_from: i32,
    /// IS codes this person draws from.
    codes: Vec<(PaymentCode, f64)>,
    renter: bool,
    state: &'static str,
}

impl<'r> PersonGen<'r> {
    pub fn new(rng: &'r mut SeedRng, id: String, archetype: Archetype, history_from: i32) -> Self {
        let propensity = normal(rng);
        let u: f64 = rng.random();
        let age = match archetype {
            Archetype::Disability => 25.0 + 42.0 * u,
            Archetype::Migrant => 18.0 + 54.0 * u,
            Archetype::YoungUnemployed => 15.5 + 9.4 * u,
            Archetype::Parent => 19.0 + 27.0 * u,
        };
        Self {
            rng,
            h: PersonHistory::new(id),
            latent: Latent {
                archetype,
                propensity,
                age,
            },
            history_from,
            codes: Vec::new(),
            renter: false,
            state: "NSW",
        }
    }

    fn spell(&mut self, code: PaymentCode, a: NaiveDate, b: NaiveDate, amount: f64) {
        let s = SpellRecord::new(self.h.person_id.clone(), code.category(), a, b, Some((amount * 100.0).round() / 100.0))
            .expect("generated spell dates are in range");
        self.h.spells.push(s);
    }

    fn activity(&mut self, kind: ActivityKind, a: NaiveDate, b: NaiveDate) -> ActivityRecord {
        ActivityRecord::new(self.h.person_id.clone(), kind, a, b).expect("generated activity dates are in range")
    }

    fn push(&mut self, r: ActivityRecord) {
        self.h.activities.push(r);
    }

    pub fn demographics(&mut self) {
        let l = self.latent.clone();
        let rng = &mut *self.rng;
        let female = match l.archetype {
            Archetype::Parent => 0.92,
            Archetype::Disability => 0.45,
            _ => 0.5,
        };
        let d = &mut self.h.demographics;
        d.insert("sex".into(), if rng.random::<f64>() < female { "F" } else { "M" }.into());
        let birth = REFERENCE - Duration::days((l.age * 365.25) as i64);
        d.insert("birth_date".into(), birth.to_string());
        let indig = 0.03 + if l.archetype == Archetype::YoungUnemployed { 0.05 } else { 0.0 };
        d.insert("indigenous".into(), if rng.random::<f64>() < indig { "yes" } else { "no" }.into());
        let overseas = if l.archetype == Archetype::Migrant { 0.85 } else { 0.1 };
        if rng.random::<f64>() < overseas {
            let items: Vec<((&str, &str), f64)> = OVERSEAS.iter().map(|&(c, r, w)| ((c, r), w)).collect();
            let &(c, r) = pick(rng, &items);
            d.insert("birth_country".into(), c.into());
            d.insert("birth_region".into(), r.into());
        } else {
            d.insert("birth_country".into(), "Australia".into());
            d.insert("birth_region".into(), "oceania".into());
        }
        if rng.random::<f64>() >= 0.5 {
            let e: f64 = StandardNormal.sample(rng);
            let level = (4.0 + 1.8 * (e - 0.4 * l.propensity)).round().clamp(0.0, 8.0) as usize;
            d.insert("education".into(), EDUCATION[level].into());
        }
    }

    fn pick_codes(&mut self) {
        use PaymentCode::*;
        let age = self.latent.age;
        self.codes = if age >= 65.5 {
            vec![(AgePension, 1.0)]
        } else {
            match self.latent.archetype {
                Archetype::Disability => vec![(DisabilitySupportPension, 0.8), (NewstartAllowance, 0.15), (SicknessAllowance, 0.05)],
                Archetype::Migrant => vec![
                    (NewstartAllowance, 0.55),
                    (SpecialBenefit, 0.1),
                    (PartnerAllowance, 0.1),
                    (CarerPayment, 0.15),
                    (SicknessAllowance, 0.1),
                ],
                Archetype::YoungUnemployed if age < 22.0 => vec![(YouthAllowanceOther, 0.7), (YouthAllowanceStudent, 0.3)],
                Archetype::YoungUnemployed => vec![(NewstartAllowance, 0.7), (YouthAllowanceOther, 0.1), (Austudy, 0.2)],
                Archetype::Parent => vec![(ParentingPaymentSingle, 0.6), (ParentingPaymentPartnered, 0.3), (NewstartAllowance, 0.1)],
            }
        };
    }

    /// Income-support spells up to the end of 2014. Returns the share of
    /// 2014 covered.
    pub fn payments(&mut self) -> f64 {
        self.pick_codes();
        let nu = self.latent.propensity;
        let shift = self.latent.archetype.shift();
        let old = self.latent.age >= 65.5;
        let on = old || self.rng.random::<f64>() < phi(nu + shift);
        let mut cov = 0.0;
        if on {
            let e = normal(self.rng);
            cov = if old { 1.0 } else { phi(1.3 * (nu + shift) + 0.6 * e).clamp(0.03, 1.0) };
            if cov > 0.97 {
                cov = 1.0;
            }
        }
        let y2014 = date(2014, 1, 1);
        let main = *pick(self.rng, &self.codes.clone());
        if on {
            let days = (cov * 365.0).round() as i64;
            let pieces = if cov == 1.0 { 1 } else { 1 + self.rng.random_range(0..3) };
            let parts = place(self.rng, days, 365, pieces);
            for (k, &(a, b)) in parts.iter().enumerate() {
                let code = if k > 0 && self.rng.random::<f64>() < 0.25 {
                    *pick(self.rng, &self.codes.clone())
                } else {
                    main
                };
                self.paid_interval(code, day(y2014, a), day(y2014, b));
            }
        }
        // earlier years
        let start = date(self.history_from, 1, 1);
        let prior_len = (y2014 - start).num_days();
        if prior_len > 0 {
            let always = on && cov == 1.0 && self.rng.random::<f64>() < 0.9 * phi(nu + shift - 0.2);
            if always {
                self.paid_interval(main, start, day(y2014, -1));
            } else if self.rng.random::<f64>() < phi(nu + shift - 0.4) {
                let c = (cov + 0.25 * normal(self.rng)).clamp(0.02, 0.95);
                let pieces = 1 + self.rng.random_range(0..3);
                for (a, b) in place(self.rng, (c * prior_len as f64) as i64, prior_len, pieces) {
                    let code = *pick(self.rng, &self.codes.clone());
                    self.paid_interval(code, day(start, a), day(start, b));
                }
            }
        }
        cov
    }

    /// One paid interval, sometimes split where the rate changes.
    fn paid_interval(&mut self, code: PaymentCode, a: NaiveDate, b: NaiveDate) {
        let amount = base_amount(code) * (0.12 * normal(self.rng)).exp();
        let len = (b - a).num_days();
        if len > 60 && self.rng.random::<f64>() < 0.3 {
            let cut = self.rng.random_range(14..len - 14);
            let m = day(a, cut);
            self.spell(code, a, m, amount);
            let amount2 = amount * (0.25 * normal(self.rng)).exp();
            self.spell(code, day(m, 1), b, amount2);
        } else {
            self.spell(code, a, b, amount);
        }
    }

    pub fn supplements(&mut self, on_is: bool, kids: usize) {
        use PaymentCode::*;
        let y = |m, d| date(2014, m, d);
        if kids > 0 && self.rng.random::<f64>() < 0.8 {
            self.spell(FamilyTaxBenefitA, y(1, 1), y(12, 31), base_amount(FamilyTaxBenefitA) * kids as f64);
            if self.rng.random::<f64>() < 0.5 {
                self.spell(FamilyTaxBenefitB, y(1, 1), y(12, 31), base_amount(FamilyTaxBenefitB));
            }
        }
        if on_is && self.renter && self.rng.random::<f64>() < 0.7 {
            let code = match self.codes[0].0 {
                DisabilitySupportPension | AgePension | CarerPayment => RentalAssistancePension,
                ParentingPaymentSingle | ParentingPaymentPartnered => RentalAssistanceParenting,
                Austudy | YouthAllowanceStudent => RentalAssistanceAbstudy,
                _ => RentalAssistanceNewstart,
            };
            self.spell(code, y(1, 1), y(12, 31), base_amount(code));
        }
        if on_is && self.state == "NT" && self.rng.random::<f64>() < 0.4 {
            self.spell(RemoteAreaAllowance, y(1, 1), y(12, 31), base_amount(RemoteAreaAllowance));
        }
        if on_is && self.rng.random::<f64>() < 0.08 {
            let s = self.rng.random_range(0..350);
            self.spell(AdvancePayment, day(y(1, 1), s), day(y(1, 1), s + 13), base_amount(AdvancePayment));
        }
        if self.rng.random::<f64>() < 0.03 {
            let s = self.rng.random_range(0..350);
            self.spell(CrisisPayment, day(y(1, 1), s), day(y(1, 1), s + 13), base_amount(CrisisPayment));
        }
        if self.codes.iter().any(|c| c.0 == CarerPayment) && self.rng.random::<f64>() < 0.5 {
            self.spell(CarerAllowance, y(1, 1), y(12, 31), base_amount(CarerAllowance));
            let r = self.activity(ActivityKind::Care, y(1, 1), y(12, 31)).with_detail("type", "adult");
            self.push(r);
        }
    }

    pub fn employment(&mut self) {
        let nu = self.latent.propensity;
        let a = self.latent.archetype;
        let bias = match a {
            Archetype::Disability => -0.9,
            Archetype::YoungUnemployed => 0.2,
            Archetype::Parent => -0.2,
            Archetype::Migrant => 0.1,
        };
        if self.latent.age >= 65.5 || self.rng.random::<f64>() >= phi(0.3 - 0.8 * nu + bias) {
            return;
        }
        let u: f64 = self.rng.random();
        let jobs = 1 + (u < 0.25) as usize + (u < 0.08) as usize;
        let y2014 = date(2014, 1, 1);
        for j in 0..jobs {
            let employer = format!("E{:05}", self.rng.random_range(0..100_000));
            let start = if self.rng.random::<f64>() < 0.5 { 0 } else { self.rng.random_range(0..300) / 14 * 14 };
            let len = self.rng.random_range(4..=(365 - start) / 14).max(1) * 14;
            let end = (start + len - 1).min(364);
            let wage = if self.rng.random::<f64>() < 0.05 {
                15.0
            } else {
                17.29 * (0.2 + 0.35 * normal(self.rng)).exp().max(1.0)
            };
            let mut hours = (30.0 + 25.0 * normal(self.rng) - 8.0 * j as f64).clamp(4.0, 76.0).round();
            // records change hours at fortnight boundaries
            let mut at = start;
            while at <= end {
                let piece = (self.rng.random_range(2..=8) * 14).min(end - at + 1);
                let zero = self.rng.random::<f64>() < 0.03;
                let h = if zero { 0.0 } else { hours };
                let r = self
                    .activity(ActivityKind::Employment, day(y2014, at), day(y2014, at + piece - 1))
                    .with_amount((h * wage * 100.0).round() / 100.0)
                    .with_hours(h)
                    .with_detail("employer", employer.clone());
                self.push(r);
                at += piece;
                if self.rng.random::<f64>() < 0.4 {
                    hours = (hours * (0.3 * normal(self.rng)).exp()).clamp(4.0, 76.0).round();
                }
            }
        }
    }

    pub fn residence(&mut self) {
        let nu = self.latent.propensity;
        let states: Vec<(&'static str, f64)> = STATES.to_vec();
        let mut state = *pick(self.rng, &states);
        self.state = state;
        let young = (self.latent.archetype == Archetype::YoungUnemployed) as u8 as f64;
        let moves = poisson(self.rng, 0.15 + 0.2 * nu.max(0.0) + 0.3 * young);
        let mut cuts: Vec<i64> = (0..moves).map(|_| self.rng.random_range(1..365)).collect();
        cuts.sort_unstable();
        cuts.dedup();
        let y2014 = date(2014, 1, 1);
        let mut from = date(2013, 1, 1);
        let mut seifa = ((5.5 - 2.0 * nu + 2.0 * normal(self.rng)).round() as i64).clamp(1, 10);
        let stops: Vec<NaiveDate> = cuts.iter().map(|&c| day(y2014, c)).chain([date(2019, 1, 1)]).collect();
        for to in stops {
            let sa3s = sa3_of(state);
            let sa3 = sa3s[self.rng.random_range(0..sa3s.len())];
            let pc = format!("{sa3}{}", self.rng.random_range(0..4));
            let r = self
                .activity(ActivityKind::Residence, from, day(to, -1))
                .with_detail("state", state)
                .with_detail("sa3", sa3)
                .with_detail("postcode", pc)
                .with_detail("seifa", seifa.to_string());
            self.push(r);
            from = to;
            if self.rng.random::<f64>() < 0.2 {
                state = *pick(self.rng, &states);
            }
            seifa = (seifa + self.rng.random_range(-2..=2)).clamp(1, 10);
        }
    }

    pub fn relationship(&mut self) {
        let statuses: Vec<(&str, f64)> = match self.latent.archetype {
            Archetype::Parent => vec![("single", 0.55), ("separated", 0.15), ("married", 0.15), ("de-facto", 0.15)],
            Archetype::YoungUnemployed => vec![("single", 0.85), ("de-facto", 0.15)],
            Archetype::Disability => vec![
                ("single", 0.5),
                ("married", 0.2),
                ("separated", 0.1),
                ("divorced", 0.15),
                ("widowed", 0.05),
            ],
            Archetype::Migrant => vec![
                ("married", 0.5),
                ("single", 0.3),
                ("de-facto", 0.1),
                ("separated", 0.05),
                ("divorced", 0.05),
            ],
        };
        let first = *pick(self.rng, &statuses);
        if self.rng.random::<f64>() < 0.08 {
            let cut = day(date(2014, 1, 1), self.rng.random_range(30..330));
            let second = *pick(self.rng, &statuses);
            let r = self.activity(ActivityKind::Relationship, date(2012, 1, 1), day(cut, -1)).with_detail("status", first);
            self.push(r);
            let r = self.activity(ActivityKind::Relationship, cut, date(2018, 12, 31)).with_detail("status", second);
            self.push(r);
        } else {
            let r = self.activity(ActivityKind::Relationship, date(2012, 1, 1), date(2018, 12, 31)).with_detail("status", first);
            self.push(r);
        }
    }

    /// Children in care; returns how many and whether one is under five.
    pub fn children(&mut self) -> usize {
        let age = self.latent.age;
        let n = match self.latent.archetype {
            Archetype::Parent => 1 + self.rng.random_range(0..3),
            _ if age > 25.0 && age < 60.0 && self.rng.random::<f64>() < 0.35 => 1 + self.rng.random_range(0..2),
            _ => 0,
        };
        let max_kid_age = (age - 17.0).clamp(0.5, 17.0);
        for _ in 0..n {
            let kid_age = self.rng.random::<f64>() * max_kid_age;
            let birth = REFERENCE - Duration::days((kid_age * 365.25) as i64);
            let start = birth.max(date(2000, 1, 1));
            let r = self.activity(ActivityKind::Child, start, date(2018, 12, 31)).with_detail("birth", birth.to_string());
            self.push(r);
        }
        if n > 0 && self.rng.random::<f64>() < 0.3 {
            let r = self.activity(ActivityKind::Care, date(2014, 1, 1), date(2014, 12, 31)).with_detail("type", "child");
            self.push(r);
        }
        n
    }

    pub fn housing(&mut self) {
        let nu = self.latent.propensity;
        let young = self.latent.archetype == Archetype::YoungUnemployed;
        let owner = self.rng.random::<f64>() < phi(-0.6 - nu + if self.latent.age > 50.0 { 0.8 } else { 0.0 });
        let tenure = if owner {
            "owner"
        } else {
            *pick(self.rng, &[("public-rent", 0.25 + 0.1 * nu.max(0.0)), ("private-rent", 0.6), ("other-rent", 0.15)])
        };
        self.renter = !owner;
        let homeless = self.rng.random::<f64>() < 0.015 + 0.03 * nu.max(0.0);
        let accommodation = if homeless {
            "homeless"
        } else if owner {
            "exempt"
        } else if young && self.rng.random::<f64>() < 0.4 {
            "parent-home"
        } else {
            *pick(self.rng, &[("shared", 0.3), ("non-shared", 0.55), ("temporary", 0.05), ("unknown", 0.1)])
        };
        let mut r = self
            .activity(ActivityKind::Housing, date(2014, 1, 1), date(2014, 12, 31))
            .with_detail("tenure", tenure)
            .with_detail("accommodation", accommodation);
        if !owner {
            r = r.with_amount((300.0 * (0.35 * normal(self.rng)).exp()).round());
        }
        self.push(r);
    }

    pub fn compliance(&mut self, on_is: bool) {
        if !on_is {
            return;
        }
        let unemp = self.codes.iter().any(|c| {
            matches!(c.0, PaymentCode::NewstartAllowance | PaymentCode::YouthAllowanceOther)
        });
        if !unemp {
            return;
        }
        let k = poisson(self.rng, 0.3 + 0.3 * self.latent.propensity.max(0.0));
        for _ in 0..k {
            let s = self.rng.random_range(0..350);
            let r = self.activity(ActivityKind::Suspension, day(date(2014, 1, 1), s), day(date(2014, 1, 1), s + 13));
            self.push(r);
        }
        if self.rng.random::<f64>() < 0.05 {
            let s = self.rng.random_range(0..350);
            let r = self.activity(ActivityKind::Breach, day(date(2014, 1, 1), s), day(date(2014, 1, 1), s));
            self.push(r);
        }
    }

    pub fn study(&mut self) {
        let p = if self.latent.archetype == Archetype::YoungUnemployed { 0.4 } else { 0.05 };
        if self.rng.random::<f64>() < p {
            let r = self.activity(ActivityKind::Study, date(2014, 2, 1), date(2014, 11, 30));
            self.push(r);
        }
    }

    /// Payment code for outcome-window spells.
    pub fn outcome_code(&mut self) -> PaymentCode {
        if self.latent.age + 1.0 >= 65.5 && self.rng.random::<f64>() < 0.8 {
            return PaymentCode::AgePension;
        }
        if self.codes.is_empty() {
            self.pick_codes();
        }
        *pick(self.rng, &self.codes.clone())
    }

    pub fn spell_public(&mut self, code: PaymentCode, a: NaiveDate, b: NaiveDate) {
        let amount = base_amount(code) * (0.12 * normal(self.rng)).exp();
        self.spell(code, a, b, amount);
    }

    pub fn sort(&mut self) {
        self.h.spells.sort_by_key(|s| (s.start, s.end));
        self.h.activities.sort_by_key(|a| (a.start, a.end));
    }

    pub fn finish(mut self) -> PersonHistory {
        self.sort();
        self.h
    }
}

/// A linked parent whose receipt tracks the child's latent propensity.
pub fn parent_history(rng: &mut SeedRng, id: String, role: &str, child_age: f64, nu: f64) -> PersonHistory {
    let mut h = PersonHistory::new(id.clone());
    h.demographics.insert("in_sample".into(), "0".into());
    h.demographics.insert("sex".into(), if role == "mother" { "F" } else { "M" }.into());
    let age = child_age + 22.0 + 12.0 * rng.random::<f64>();
    h.demographics
        .insert("birth_date".into(), (REFERENCE - Duration::days((age * 365.25) as i64)).to_string());
    if rng.random::<f64>() < phi(0.6 * nu - 0.2) {
        use PaymentCode::*;
        let codes = [
            (NewstartAllowance, 0.35),
            (DisabilitySupportPension, 0.25),
            (ParentingPaymentSingle, 0.2),
            (CarerPayment, 0.1),
            (PartnerAllowance, 0.1),
        ];
        let start = date(2000, 1, 1);
        let len = (date(2014, 12, 31) - start).num_days() + 1;
        let cov = phi(0.8 * nu + 0.4 * normal(rng)).clamp(0.02, 1.0);
        let pieces = 1 + rng.random_range(0..3);
        for (a, b) in place(rng, (cov * len as f64) as i64, len, pieces) {
            let code = *pick(rng, &codes);
            let s = SpellRecord::new(id.clone(), code.category(), day(start, a), day(start, b), Some(base_amount(code)))
                .expect("parent spell in range");
            h.spells.push(s);
        }
    }
    h.spells.sort_by_key(|s| (s.start, s.end));
    h
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::seed;

    proptest! {
        #[test]
        fn place_covers_exactly(total in 0i64..1461, pieces in 1usize..5, s in 0u64..1000) {
            let mut rng = seed::rng(s, &[]);
            let parts = place(&mut rng, total, 1461, pieces);
            let covered: i64 = parts.iter().map(|(a, b)| b - a + 1).sum();
            prop_assert_eq!(covered, total);
            for w in parts.windows(2) {
                prop_assert!(w[0].1 + 1 < w[1].0);
            }
            if let (Some(f), Some(l)) = (parts.first(), parts.last()) {
                prop_assert!(f.0 >= 0 && l.1 < 1461);
            }
        }
    }
}
