use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::{Error, Result};

/// Smallest group reported in full.
pub const DEFAULT_MIN_GROUP: usize = 6;

/// Per-group profile. Suppressed groups carry only their size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: usize,
    pub size: usize,
    pub suppressed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sd: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub k: usize,
    pub variables: Vec<String>,
    pub labels: Vec<usize>,
    pub groups: Vec<GroupSummary>,
}

impl ClusterReport {
    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.size).collect()
    }

    /// One row per variable with mean and sd columns per group, then a size row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["variable".to_string()];
        for g in &self.groups {
            header.push(format!("group{}_mean", g.label));
            header.push(format!("group{}_sd", g.label));
        }
        wr.write_record(&header)?;
        let cell = |v: &Option<Vec<f64>>, j: usize| v.as_ref().map(|v| format!("{:.4}", v[j])).unwrap_or_default();
        for (j, name) in self.variables.iter().enumerate() {
            let mut row = vec![name.clone()];
            for g in &self.groups {
                row.push(cell(&g.mean, j));
                row.push(cell(&g.sd, j));
            }
            wr.write_record(&row)?;
        }
        let mut row = vec!["observations".to_string()];
        for g in &self.groups {
            row.push(g.size.to_string());
            row.push(String::new());
        }
        wr.write_record(&row)?;
        wr.flush()?;
        Ok(())
    }
}

/// Means and sample standard deviations of each column within each group.
pub fn group_summary(x: &Matrix, labels: &[usize], variables: &[String], min_size: usize) -> Result<ClusterReport> {
    if labels.len() != x.rows() {
        return Err(Error::LengthMismatch {
            left: x.rows(),
            right: labels.len(),
        });
    }
    if variables.len() != x.cols() {
        return Err(Error::LengthMismatch {
            left: x.cols(),
            right: variables.len(),
        });
    }
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        members.entry(l).or_default().push(i);
    }
    let groups = members
        .into_iter()
        .map(|(label, rows)| {
            let size = rows.len();
            if size < min_size {
                return GroupSummary {
                    label,
                    size,
                    suppressed: true,
                    mean: None,
                    sd: None,
                };
            }
            let m = size as f64;
            let mean: Vec<f64> = (0..x.cols())
                .map(|j| rows.iter().map(|&i| x.get(i, j)).sum::<f64>() / m)
                .collect();
            let sd: Vec<f64> = (0..x.cols())
                .map(|j| {
                    if size < 2 {
                        return 0.0;
                    }
                    let ss: f64 = rows.iter().map(|&i| (x.get(i, j) - mean[j]).powi(2)).sum();
                    (ss / (m - 1.0)).sqrt()
                })
                .collect();
            GroupSummary {
                label,
                size,
                suppressed: false,
                mean: Some(mean),
                sd: Some(sd),
            }
        })
        .collect::<Vec<_>>();
    Ok(ClusterReport {
        k: groups.len(),
        variables: variables.to_vec(),
        labels: labels.to_vec(),
        groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|j| format!("v{j}")).collect()
    }

    #[test]
    fn one_group_is_overall() {
        let x = Matrix::from_columns(&[vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], vec![0.0, 0.0, 1.0, 1.0, 1.0, 1.0]], 6).unwrap();
        let r = group_summary(&x, &[1; 6], &names(2), 6).unwrap();
        assert_eq!(r.k, 1);
        let g = &r.groups[0];
        assert_eq!(g.mean.as_ref().unwrap(), &vec![3.5, 4.0 / 6.0]);
        // sample variance of 1..6 is 3.5
        assert!((g.sd.as_ref().unwrap()[0] - 3.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn small_groups_suppressed() {
        let col: Vec<f64> = (0..11).map(f64::from).collect();
        let x = Matrix::from_columns(&[col], 11).unwrap();
        let labels = [1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2];
        let r = group_summary(&x, &labels, &names(1), DEFAULT_MIN_GROUP).unwrap();
        assert_eq!(r.sizes(), vec![6, 5]);
        assert!(!r.groups[0].suppressed);
        assert!(r.groups[1].suppressed && r.groups[1].mean.is_none());
        assert_eq!(r.groups[0].mean.as_ref().unwrap()[0], 2.5);
        let json = serde_json::to_string(&r.groups[1]).unwrap();
        assert!(!json.contains("mean"));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("variable,group1_mean,group1_sd,group2_mean,group2_sd\nv0,2.5000,1.8708,,\n"));
        assert!(text.ends_with("observations,6,,5,\n"));
    }
}
