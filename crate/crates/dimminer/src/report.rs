use std::fmt::{self, Display};

use dimminer_core::eval::MetricReport;

use crate::pipeline::BaselineResult;

/// Plain-text table with columns padded to their widest cell. Numeric
/// columns are right-aligned.
#[derive(Debug, Clone, Default)]
pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Table {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row<S: Into<String>>(&mut self, cells: impl IntoIterator<Item = S>) -> &mut Self {
        self.rows.push(cells.into_iter().map(Into::into).collect());
        self
    }

    fn numeric(&self, col: usize) -> bool {
        !self.rows.is_empty()
            && self
                .rows
                .iter()
                .all(|r| r.get(col).map_or(true, |c| c.parse::<f64>().is_ok()))
    }
}

impl Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cols = self.headers.len();
        let widths: Vec<usize> = (0..cols)
            .map(|c| {
                self.rows
                    .iter()
                    .filter_map(|r| r.get(c))
                    .chain(std::iter::once(&self.headers[c]))
                    .map(|s| s.chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let numeric: Vec<bool> = (0..cols).map(|c| self.numeric(c)).collect();
        let line = |f: &mut fmt::Formatter<'_>, cells: &[String]| -> fmt::Result {
            let mut out = Vec::with_capacity(cols);
            for c in 0..cols {
                let cell = cells.get(c).map_or("", String::as_str);
                out.push(if numeric[c] {
                    format!("{cell:>w$}", w = widths[c])
                } else {
                    format!("{cell:<w$}", w = widths[c])
                });
            }
            writeln!(f, "{}", out.join("  ").trim_end())
        };
        line(f, &self.headers)?;
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        writeln!(f, "{}", rule.join("  "))?;
        for r in &self.rows {
            line(f, r)?;
        }
        Ok(())
    }
}

pub fn metric_table(rows: &[(String, &MetricReport)]) -> Table {
    let mut t = Table::new(["name", "accuracy", "ari", "runs"]);
    for (name, m) in rows {
        t.row([
            name.clone(),
            format!("{:.2}", m.accuracy_percent),
            format!("{:.4}", m.ari),
            m.runs_aggregated.to_string(),
        ]);
    }
    t
}

pub fn baseline_table(results: &[BaselineResult]) -> Table {
    let mut t = Table::new([
        "baseline",
        "eigenvectors",
        "sizes",
        "accuracy",
        "ari",
        "mean_accuracy",
        "mean_ari",
    ]);
    for r in results {
        let eigs: Vec<String> = r.eig_indices.iter().map(|i| format!("e{i}")).collect();
        let name = match r.irm_k {
            Some(k) => format!("{} k={k}", r.baseline.name()),
            None => r.baseline.name().to_string(),
        };
        t.row([
            name,
            eigs.join(","),
            format!("{}/{}", r.sizes[0], r.sizes[1]),
            format!("{:.2}", r.canonical.accuracy_percent),
            format!("{:.4}", r.canonical.ari),
            format!("{:.2}", r.mean.accuracy_percent),
            format!("{:.4}", r.mean.ari),
        ]);
    }
    t
}
