use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Payment grouping used for outcomes and history variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subfamily {
    Disability,
    Carer,
    AgePension,
    Unemployment,
    Parenting,
    Partner,
    Crisis,
    #[serde(rename = "other-is")]
    OtherIs,
    #[serde(rename = "non-is")]
    NonIs,
}

macro_rules! payment_codes {
    ($( $variant:ident => ($name:literal, $is:literal, $sub:ident) ),* $(,)?) => {
        /// Every payment kind known to the taxonomy.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum PaymentCode { $( $variant ),* }

        impl PaymentCode {
            pub const ALL: &'static [PaymentCode] = &[ $( PaymentCode::$variant ),* ];

            pub fn name(self) -> &'static str {
                match self { $( PaymentCode::$variant => $name ),* }
            }

            pub fn category(self) -> PaymentCategory {
                match self {
                    $( PaymentCode::$variant => PaymentCategory {
                        code: self,
                        is_income_support: $is,
                        subfamily: Subfamily::$sub,
                    } ),*
                }
            }
        }
    };
}

payment_codes! {
    AgePension => ("Age Pension", true, AgePension),
    Austudy => ("Austudy", true, OtherIs),
    BereavementAllowance => ("Bereavement Allowance", true, OtherIs),
    CarerPayment => ("Carer Payment", true, Carer),
    DisabilitySupportPension => ("Disability Support Pension", true, Disability),
    ExceptionalCircumstancesPayment => ("Exceptional Circumstances Payment", true, Crisis),
    FarmFamilyRestart => ("Farm Family Restart", true, OtherIs),
    MatureAgeAllowance => ("Mature Age Allowance", true, OtherIs),
    MatureAgePartnerAllowance => ("Mature Age Partner Allowance", true, Partner),
    NewstartMatureAgeAllowance => ("Newstart Mature Age Allowance", true, Unemployment),
    NewstartAllowance => ("Newstart Allowance", true, Unemployment),
    ParentingPaymentPartnered => ("Parenting Payment Partnered", true, Parenting),
    ParentingPaymentSingle => ("Parenting Payment Single", true, Parenting),
    PartnerAllowance => ("Partner Allowance", true, Partner),
    SicknessAllowance => ("Sickness Allowance", true, OtherIs),
    SpecialBenefit => ("Special Benefit", true, Crisis),
    WidowAllowance => ("Widow Allowance", true, OtherIs),
    WifePensionAge => ("Wife Pension Age", true, Partner),
    WifePensionDsp => ("Wife Pension DSP", true, Partner),
    WidowBPension => ("Widow B Pension", true, OtherIs),
    YouthAllowanceApprentice => ("Youth Allowance (Apprentice)", true, OtherIs),
    YouthAllowanceOther => ("Youth Allowance (Other)", true, Unemployment),
    YouthAllowanceStudent => ("Youth Allowance (Student)", true, OtherIs),
    YouthTrainingAllowance => ("Youth Training Allowance", true, Unemployment),
    FamilyTaxBenefitA => ("Family Tax Benefit Part A", false, NonIs),
    FamilyTaxBenefitB => ("Family Tax Benefit Part B", false, NonIs),
    RentalAssistanceFamily => ("Rental Assistance Family", false, NonIs),
    RentalAssistanceParenting => ("Rental Assistance Parenting", false, NonIs),
    RentalAssistanceNewstart => ("Rental Assistance Newstart", false, NonIs),
    RentalAssistancePension => ("Rental Assistance Pension", false, NonIs),
    RentalAssistanceAbstudy => ("Rental Assistance Abstudy", false, NonIs),
    RemoteAreaAllowance => ("Remote Area Allowance", false, NonIs),
    CrisisPayment => ("Crisis Payment", false, NonIs),
    AdvancePayment => ("Advance Payment", false, NonIs),
    CarerAllowance => ("Carer Allowance", false, NonIs),
}

impl fmt::Display for PaymentCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for PaymentCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for PaymentCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        classify_payment(&s)
            .map(|c| c.code)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PaymentCategory {
    pub code: PaymentCode,
    pub is_income_support: bool,
    pub subfamily: Subfamily,
}

/// Map a payment name to its category. Matching ignores case and surrounding
/// whitespace; anything else is an error.
pub fn classify_payment(code: &str) -> Result<PaymentCategory> {
    let wanted = code.trim();
    PaymentCode::ALL
        .iter()
        .find(|c| c.name().eq_ignore_ascii_case(wanted))
        .map(|c| c.category())
        .ok_or_else(|| Error::UnknownPaymentCode(code.to_string()))
}

/// Which payments count towards a coverage or amount computation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PaymentFilter {
    /// Any income-support payment.
    AnyIs,
    /// Any payment at all (income support or not).
    AnyPayment,
    Subfamilies(BTreeSet<Subfamily>),
    Codes(BTreeSet<PaymentCodeKey>),
}

/// Ordered wrapper so codes can live in a `BTreeSet` with name-based serde.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PaymentCodeKey(pub PaymentCode);

impl PaymentFilter {
    pub fn subfamilies<I: IntoIterator<Item = Subfamily>>(it: I) -> Self {
        PaymentFilter::Subfamilies(it.into_iter().collect())
    }

    pub fn codes<I: IntoIterator<Item = PaymentCode>>(it: I) -> Self {
        PaymentFilter::Codes(it.into_iter().map(PaymentCodeKey).collect())
    }

    pub fn matches(&self, c: &PaymentCategory) -> bool {
        match self {
            PaymentFilter::AnyIs => c.is_income_support,
            PaymentFilter::AnyPayment => true,
            PaymentFilter::Subfamilies(s) => s.contains(&c.subfamily),
            PaymentFilter::Codes(s) => s.contains(&PaymentCodeKey(c.code)),
        }
    }
}
