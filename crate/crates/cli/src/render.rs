use std::fmt::Write as _;

use spellforge_core::selection::{LadderReport, OutcomeDensity, DENSITY_BINS};

fn pct(v: Option<f64>) -> String {
    v.map(|r| format!("{:.1}%", 100.0 * r)).unwrap_or_else(|| "-".into())
}

/// Fixed-width holdout table: Model, Predictors, MSE, CI, R².
pub fn table(r: &LadderReport) -> String {
    let mut rows: Vec<[String; 6]> = vec![[
        "#".into(),
        "Model".into(),
        "Predictors".into(),
        "MSE".into(),
        "C.I.".into(),
        "R²".into(),
    ]];
    for (i, e) in r.entries.iter().enumerate() {
        let h = &e.holdout;
        let ci = match (h.ci_low, h.ci_high) {
            (Some(a), Some(b)) => format!("[{a:.3}; {b:.3}]"),
            _ => "-".into(),
        };
        rows.push([
            (i + 1).to_string(),
            e.learner.clone(),
            e.predictors.clone(),
            format!("{:.3}", h.mse),
            ci,
            pct(h.r_squared),
        ]);
    }
    let width = |c: usize| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0);
    let w: Vec<usize> = (0..6).map(width).collect();
    let mut out = String::new();
    for (k, r) in rows.iter().enumerate() {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| {
                let pad = w[c] - s.chars().count();
                if c >= 3 {
                    format!("{}{s}", " ".repeat(pad))
                } else {
                    format!("{s}{}", " ".repeat(pad))
                }
            })
            .collect();
        writeln!(out, "{}", line.join("  ").trim_end()).unwrap();
        if k == 0 {
            let total: usize = w.iter().sum::<usize>() + 2 * (w.len() - 1);
            writeln!(out, "{}", "-".repeat(total)).unwrap();
        }
    }
    writeln!(
        out,
        "\nn = {} (train {}, holdout {}); {} bootstrap replicates, {:.0}% intervals; seed {}",
        r.n,
        r.n_train,
        r.n_holdout,
        r.n_bootstrap,
        100.0 * r.level,
        r.seed
    )
    .unwrap();
    out
}

/// `bin,lower,upper,count,share` with explicit rows for the masses at 0 and 1.
pub fn density_csv(d: &OutcomeDensity) -> String {
    let n = d.n.max(1) as f64;
    let mut out = String::from("bin,lower,upper,count,share\n");
    let row = |out: &mut String, name: &str, lo: f64, hi: f64, c: usize| {
        writeln!(out, "{name},{lo:.2},{hi:.2},{c},{:.6}", c as f64 / n).unwrap();
    };
    row(&mut out, "zero", 0.0, 0.0, d.zero);
    for (b, &c) in d.bins.iter().enumerate() {
        let w = 1.0 / DENSITY_BINS as f64;
        row(&mut out, &(b + 1).to_string(), b as f64 * w, (b + 1) as f64 * w, c);
    }
    row(&mut out, "one", 1.0, 1.0, d.one);
    out
}
