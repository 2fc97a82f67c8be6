use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ranking metrics for one model on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricReport {
    pub model: String,
    pub ks: Vec<usize>,
    /// `recall[n]` is Recall@`ks[n]`, averaged over evaluated users.
    pub recall: Vec<f64>,
    pub ndcg: Vec<f64>,
    pub evaluated_users: usize,
    /// Users with held-out items but no train items.
    pub excluded_users: usize,
}

impl MetricReport {
    fn position(&self, k: usize) -> Result<usize> {
        self.ks
            .iter()
            .position(|&x| x == k)
            .ok_or_else(|| Error::InvalidArgument(format!("report for {} has no K={k}", self.model)))
    }

    pub fn recall_at(&self, k: usize) -> Result<f64> {
        Ok(self.recall[self.position(k)?])
    }

    pub fn ndcg_at(&self, k: usize) -> Result<f64> {
        Ok(self.ndcg[self.position(k)?])
    }

    pub fn with_model(mut self, name: impl Into<String>) -> Self {
        self.model = name.into();
        self
    }
}

/// Plain-text comparison table: one row per model, a Recall@K / NDCG@K column
/// pair per dataset, plus an average pair when there is more than one dataset.
///
/// Every dataset must list the same models in the same order.
pub fn comparison_table(datasets: &[(&str, &[MetricReport])], k: usize) -> Result<String> {
    let Some((_, first)) = datasets.first() else {
        return Err(Error::InvalidArgument("comparison table needs at least one dataset".into()));
    };
    let models: Vec<&str> = first.iter().map(|r| r.model.as_str()).collect();
    for (name, reports) in datasets {
        let these: Vec<&str> = reports.iter().map(|r| r.model.as_str()).collect();
        if these != models {
            return Err(Error::InvalidArgument(format!("dataset {name} lists different models")));
        }
    }

    let mut header = vec!["Model".to_string()];
    let mut groups: Vec<String> = datasets.iter().map(|(n, _)| n.to_string()).collect();
    if datasets.len() > 1 {
        groups.push("Average".into());
    }
    for _ in &groups {
        header.push(format!("Recall@{k}"));
        header.push(format!("NDCG@{k}"));
    }

    let mut rows = Vec::with_capacity(models.len());
    for (m, model) in models.iter().enumerate() {
        let mut row = vec![model.to_string()];
        let (mut rs, mut ns) = (0.0, 0.0);
        for (_, reports) in datasets {
            let (r, n) = (reports[m].recall_at(k)?, reports[m].ndcg_at(k)?);
            rs += r;
            ns += n;
            row.push(format!("{r:.4}"));
            row.push(format!("{n:.4}"));
        }
        if datasets.len() > 1 {
            let d = datasets.len() as f64;
            row.push(format!("{:.4}", rs / d));
            row.push(format!("{:.4}", ns / d));
        }
        rows.push(row);
    }

    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    // Dataset names centred over their column pair.
    let mut out = String::new();
    let _ = write!(out, "{:w$}", "", w = widths[0]);
    for (g, name) in groups.iter().enumerate() {
        let span = widths[1 + 2 * g] + widths[2 + 2 * g] + 2;
        let _ = write!(out, "  {name:^span$}");
    }
    out.push('\n');
    let line = |cells: &[String], out: &mut String| {
        for (c, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if c == 0 {
                let _ = write!(out, "{cell:<w$}");
            } else {
                let _ = write!(out, "  {cell:>w$}");
            }
        }
        out.push('\n');
    };
    line(&header, &mut out);
    let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for row in &rows {
        line(row, &mut out);
    }
    Ok(out)
}
