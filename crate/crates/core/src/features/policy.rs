use super::catalog::TopCodeRule;

/// Zero-impute missing values and return the paired indicator column.
pub fn apply_missing_policy(raw: &[Option<f64>]) -> (Vec<f64>, Vec<f64>) {
    raw.iter()
        .map(|v| match v {
            Some(x) => (*x, 0.0),
            None => (0.0, 1.0),
        })
        .unzip()
}

/// Nearest-rank quantile: the smallest sample value with at least a share
/// `p` of the sample at or below it.
pub fn nearest_rank_quantile(sample: &[f64], p: f64) -> Option<f64> {
    if sample.is_empty() {
        return None;
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let rank = (p * s.len() as f64 - 1e-9).ceil().max(1.0) as usize;
    Some(s[rank.min(s.len()) - 1])
}

/// Apply a top-coding rule. Cap rules truncate and flag; flag rules leave the
/// value alone. Percentile rules need the sample the threshold comes from.
pub fn top_code(value: f64, rule: TopCodeRule, sample: Option<&[f64]>) -> (f64, bool) {
    match rule {
        TopCodeRule::Cap(cap) => {
            if value > cap {
                (cap, true)
            } else {
                (value, false)
            }
        }
        TopCodeRule::Above(t) => (value, value > t),
        TopCodeRule::Percentile(p) => {
            let t = sample.and_then(|s| nearest_rank_quantile(s, p));
            (value, t.is_some_and(|t| value >= t))
        }
    }
}
