//! Machine-readable report records and aligned text tables.
//!
//! JSON always carries full precision; tables round to a caller-chosen
//! number of decimals.

use serde::{Deserialize, Serialize};

use crate::calibration::{CriticalValues, Estimate};
use crate::isotonic::{FitMethod, IsotonicFit};
use crate::med::MedDecision;
use crate::sim::{OrderingReport, StudyResult};
use crate::summary::GroupSummary;

/// Right-aligned plain-text table.
#[derive(Debug, Default)]
pub struct TextTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl TextTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row<S: Into<String>>(&mut self, cells: impl IntoIterator<Item = S>) {
        self.rows.push(cells.into_iter().map(Into::into).collect());
    }

    pub fn render(&self) -> String {
        let cols = self.header.len();
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let mut out = String::new();
            for (i, w) in widths.iter().enumerate().take(cols) {
                if i > 0 {
                    out.push_str("  ");
                }
                let cell = cells.get(i).map_or("", String::as_str);
                out.push_str(&format!("{cell:>w$}"));
            }
            out.push('\n');
            out
        };
        let mut out = line(&self.header);
        let total: usize = widths.iter().sum::<usize>() + 2 * cols.saturating_sub(1);
        out.push_str(&"-".repeat(total));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
        }
        out
    }
}

fn num(x: f64, digits: usize) -> String {
    format!("{x:.digits$}")
}

fn est(e: Estimate, digits: usize) -> String {
    format!("{:.digits$} ± {:.digits$}", e.value, e.se)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub dose: usize,
    pub label: String,
    pub n: u32,
    pub mean: f64,
    pub fitted: f64,
    pub block: usize,
}

/// Output of the `fit` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub method: FitMethod,
    pub control: Option<GroupSummary>,
    pub partition: String,
    pub doses: Vec<FitRow>,
}

impl FitReport {
    /// `treatments` are the dose groups in order, `fit` their isotonic fit.
    pub fn new(
        method: FitMethod,
        control: Option<GroupSummary>,
        treatments: &[GroupSummary],
        fit: &IsotonicFit,
    ) -> Self {
        let doses = treatments
            .iter()
            .zip(fit.fitted())
            .zip(fit.block_ids())
            .enumerate()
            .map(|(i, ((g, &fitted), block))| FitRow {
                dose: i + 1,
                label: g.label.clone(),
                n: g.n,
                mean: g.mean,
                fitted,
                block,
            })
            .collect();
        Self {
            method,
            control,
            partition: fit.partition_string(),
            doses,
        }
    }

    pub fn to_table(&self, digits: usize) -> String {
        let mut t = TextTable::new(["dose", "label", "n", "mean", "fitted", "block"]);
        if let Some(c) = &self.control {
            t.row([
                "0".to_string(),
                c.label.clone(),
                c.n.to_string(),
                num(c.mean, digits),
                "-".into(),
                "-".into(),
            ]);
        }
        for r in &self.doses {
            t.row([
                r.dose.to_string(),
                r.label.clone(),
                r.n.to_string(),
                num(r.mean, digits),
                num(r.fitted, digits),
                r.block.to_string(),
            ]);
        }
        format!(
            "method: {}\npartition: {}\n{}",
            self.method.name(),
            self.partition,
            t.render()
        )
    }
}

pub fn critical_values_table(cv: &CriticalValues, digits: usize) -> String {
    let cfg = cv.config();
    let mut t = TextTable::new(["dose", "c", "se"]);
    for (i, (c, se)) in cv.cutoffs().iter().zip(cv.standard_errors()).enumerate() {
        t.row([(i + 1).to_string(), num(*c, digits), num(*se, digits)]);
    }
    format!(
        "alpha: {}  delta: {}  nu: {}  replicates: {}  seed: {}\n{}",
        cfg.alpha,
        cfg.delta,
        cfg.nu,
        cfg.replicates,
        cfg.seed,
        t.render()
    )
}

/// Output of the `med` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedReport {
    pub delta: f64,
    pub alpha: f64,
    pub s: f64,
    pub nu: u32,
    pub decisions: Vec<MedDecision>,
}

impl MedReport {
    pub fn to_table(&self, digits: usize) -> String {
        let mut out = format!(
            "delta: {}  alpha: {}  S: {}  nu: {}\n",
            self.delta,
            self.alpha,
            num(self.s, digits),
            self.nu
        );
        for d in &self.decisions {
            let mut t = TextTable::new(["dose", "statistic", "cutoff", "reject"]);
            for (i, (s, c)) in d.statistics.iter().zip(&d.cutoffs).enumerate() {
                let reject = if d.rejected.contains(&(i + 1)) {
                    "yes"
                } else {
                    "no"
                };
                t.row([
                    (i + 1).to_string(),
                    num(*s, digits),
                    num(*c, digits),
                    reject.into(),
                ]);
            }
            out.push_str(&format!("\nmethod: {}\n", d.method.name()));
            out.push_str(&t.render());
            match d.med {
                Some(m) => out.push_str(&format!("MED: {m}\n")),
                None => out.push_str("MED: none (no MED identified)\n"),
            }
        }
        out
    }
}

pub fn study_table(study: &StudyResult, digits: usize) -> String {
    let truth = study
        .true_med
        .map_or_else(|| "none".to_string(), |m| m.to_string());
    let mut out = format!(
        "study: {:?}  k: {}  true MED: {}  replicates: {}  seed: {}\n",
        study.study, study.k, truth, study.replicates, study.seed
    )
    .to_lowercase();
    let mut summary = TextTable::new(["method", "error rate", "correct MED rate"]);
    for m in &study.methods {
        summary.row([
            m.method_name().to_string(),
            est(m.error_rate, digits),
            est(m.correct_med_rate, digits),
        ]);
    }
    out.push_str(&summary.render());

    let mut header = vec!["asserted".to_string()];
    header.extend(
        study
            .methods
            .iter()
            .map(|m| format!("P({})", m.method_name())),
    );
    header.extend(
        study
            .methods
            .iter()
            .map(|m| format!("P(<=, {})", m.method_name())),
    );
    let mut dist = TextTable::new(header);
    for i in 0..=study.k {
        let label = if i < study.k {
            (i + 1).to_string()
        } else {
            "none".into()
        };
        let mut row = vec![label];
        row.extend(
            study
                .methods
                .iter()
                .map(|m| num(m.med_distribution[i], digits)),
        );
        row.extend(study.methods.iter().map(|m| {
            m.cumulative
                .get(i)
                .map_or_else(|| "-".to_string(), |c| num(c.value, digits))
        }));
        dist.row(row);
    }
    out.push('\n');
    out.push_str(&dist.render());
    out
}

pub fn ordering_table(report: &OrderingReport, digits: usize) -> String {
    let mut out = format!(
        "dose bumped: {}  replicates: {}  seed: {}  pathwise violations: {}  ordering violations: {}\n",
        report.dose,
        report.replicates,
        report.seed,
        report.pathwise_violations,
        report.ordering_violations
    );
    let k = report.exceedance.first().map_or(0, Vec::len);
    for i in 0..k {
        let mut header = vec![format!("P(fit_{} > x)", i + 1)];
        header.extend(report.bumps.iter().map(|b| format!("bump {b}")));
        let mut t = TextTable::new(header);
        for (x, g) in report.grid.iter().enumerate() {
            let mut row = vec![num(*g, digits)];
            row.extend(
                report
                    .exceedance
                    .iter()
                    .map(|per_bump| num(per_bump[i][x].value, digits)),
            );
            t.row(row);
        }
        out.push('\n');
        out.push_str(&t.render());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_alignment() {
        let mut t = TextTable::new(["a", "long header"]);
        t.row(["12345", "x"]);
        let text = t.render();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "    a  long header");
        assert_eq!(lines[2], "12345            x");
        assert_eq!(lines[1].len(), lines[0].len());
    }
}
