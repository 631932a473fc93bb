//! Method-by-group comparison tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::report::GroupReport;

pub const COMPARISON_FORMAT_VERSION: u32 = 1;

/// Rows appear in this order when present; other methods follow in order of
/// first appearance.
pub const METHOD_ORDER: [&str; 4] = ["source-only", "mmd-baseline", "coral-baseline", "ours-lmmd"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonRow {
    pub method: String,
    /// Average MAE per group, in column order.
    pub values: Vec<f64>,
    pub avg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Comparison {
    pub format_version: u32,
    pub groups: Vec<String>,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn row(&self, method: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn render_text(&self) -> String {
        let mut header = vec!["Method".to_string()];
        header.extend(self.groups.iter().cloned());
        header.push("Avg".to_string());
        let mut cells = vec![header];
        for r in &self.rows {
            let mut line = vec![r.method.clone()];
            line.extend(r.values.iter().map(|v| format!("{v:.3}")));
            line.push(format!("{:.3}", r.avg));
            cells.push(line);
        }
        let widths: Vec<usize> = (0..cells[0].len())
            .map(|c| cells.iter().map(|l| l[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, line) in cells.iter().enumerate() {
            let parts: Vec<String> = line
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (s, w))| if c == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
                .collect();
            out.push_str(parts.join("  ").trim_end());
            out.push('\n');
            if i == 0 {
                out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
                out.push('\n');
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Arrange reports as methods x groups with an `Avg` column. Every method
/// must cover the same groups, and all reports must share axis ranges.
pub fn compare_reports(reports: &[GroupReport]) -> Result<Comparison> {
    let first = reports.first().ok_or_else(|| Error::invalid("no reports to compare"))?;
    let mut groups: Vec<String> = Vec::new();
    let mut methods: Vec<String> = Vec::new();
    for r in reports {
        r.validate()?;
        if r.normalization != first.normalization {
            return Err(Error::invalid(format!(
                "report {} [{}] uses different axis ranges",
                r.group, r.method
            )));
        }
        if !groups.contains(&r.group) {
            groups.push(r.group.clone());
        }
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
        }
    }
    methods.sort_by_key(|m| METHOD_ORDER.iter().position(|o| o == m).unwrap_or(METHOD_ORDER.len()));
    let mut rows = Vec::with_capacity(methods.len());
    for m in methods {
        let mut values = Vec::with_capacity(groups.len());
        for g in &groups {
            let found: Vec<&GroupReport> = reports.iter().filter(|r| r.method == m && &r.group == g).collect();
            match found.as_slice() {
                [one] => values.push(one.avg_mae),
                [] => return Err(Error::invalid(format!("method {m} has no report for group {g}"))),
                _ => return Err(Error::invalid(format!("method {m} has several reports for group {g}"))),
            }
        }
        let avg = values.iter().sum::<f64>() / values.len() as f64;
        rows.push(ComparisonRow { method: m, values, avg });
    }
    Ok(Comparison {
        format_version: COMPARISON_FORMAT_VERSION,
        groups,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::report::report_from_predictions;
    use crate::model::matrix::Matrix;
    use crate::train::normalize::NormalizationSpec;

    fn report(group: &str, method: &str, err: f64) -> GroupReport {
        let spec = NormalizationSpec::new([-0.75, -0.75, -3.0], [0.75, 0.75, 0.0]).unwrap();
        let t = Matrix::from_rows(&[vec![0.0, 0.1, -1.0], vec![0.1, 0.0, -2.0]]).unwrap();
        let mut p = t.clone();
        p.data.iter_mut().for_each(|v| *v += err);
        report_from_predictions(&p, &t, &spec, group, method).unwrap()
    }

    #[test]
    fn single_cell() {
        let c = compare_reports(&[report("a->b", "source-only", 0.2)]).unwrap();
        assert_eq!(c.rows.len(), 1);
        assert_eq!(c.rows[0].values.len(), 1);
        assert_eq!(c.rows[0].values[0], c.rows[0].avg);
    }

    #[test]
    fn averages_and_ordering() {
        let reports = [
            report("g1", "ours-lmmd", 0.05),
            report("g1", "source-only", 0.1),
            report("g2", "source-only", 0.2),
            report("g3", "source-only", 0.3),
            report("g2", "ours-lmmd", 0.05),
            report("g3", "ours-lmmd", 0.05),
        ];
        let c = compare_reports(&reports).unwrap();
        assert_eq!(c.rows[0].method, "source-only");
        assert!((c.rows[0].avg - 0.2).abs() < 1e-12);
        assert_eq!(c.groups, vec!["g1", "g2", "g3"]);
        let text = c.render_text();
        assert!(text.lines().next().unwrap().ends_with("Avg"));
        assert!(text.contains("0.200"));
        let back: Comparison = serde_json::from_str(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn inconsistent_groups_are_rejected() {
        let reports = [report("g1", "source-only", 0.1), report("g2", "ours-lmmd", 0.1)];
        assert!(compare_reports(&reports).is_err());
        assert!(compare_reports(&[]).is_err());
    }
}
