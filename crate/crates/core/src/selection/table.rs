use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::WicMethod;
use crate::wv::fmt_num;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub model: String,
    /// Free parameters.
    pub p: usize,
    pub wic: Option<f64>,
    /// Apparent loss under the common weighting matrix.
    pub a: Option<f64>,
    /// Optimism penalty.
    pub b: Option<f64>,
    pub b_se: Option<f64>,
    /// Fit objective under the common weighting matrix (equal to `a`).
    pub objective: Option<f64>,
    pub gof_p: Option<f64>,
    /// Bootstrap refits that failed and were left out of `b`.
    pub dropped: usize,
    /// The estimate of `b` came out negative (bootstrap noise).
    pub b_negative: bool,
    /// This candidate supplied the common weighting matrix.
    pub omega_source: bool,
    pub theta: Vec<f64>,
    pub labels: Vec<String>,
    /// Why the candidate could not be scored.
    pub error: Option<String>,
}

impl RankingRow {
    pub(crate) fn failed(model: String, p: usize, e: &Error) -> RankingRow {
        RankingRow {
            model,
            p,
            wic: None,
            a: None,
            b: None,
            b_se: None,
            objective: None,
            gof_p: None,
            dropped: 0,
            b_negative: false,
            omega_source: false,
            theta: Vec::new(),
            labels: Vec::new(),
            error: Some(e.to_string()),
        }
    }
}

/// Columns of [`RankingTable::write_csv`].
pub const RANKING_COLUMNS: [&str; 12] = [
    "rank", "model", "p", "wic", "a", "b", "b_se", "objective", "gof_p", "dropped", "flags", "error",
];

/// Candidates in ascending WIC; failed candidates follow in input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    pub method: WicMethod,
    pub levels: usize,
    pub replicates: usize,
    pub seed: u64,
    pub rows: Vec<RankingRow>,
}

impl RankingTable {
    /// Sorts by WIC; values within `1e-12` (relative) count as ties and go
    /// to the candidate with fewer parameters.
    pub(crate) fn sorted(rows: Vec<RankingRow>, method: WicMethod, levels: usize, replicates: usize, seed: u64) -> RankingTable {
        let (mut ok, failed): (Vec<_>, Vec<_>) = rows.into_iter().partition(|r| r.wic.is_some());
        ok.sort_by(|x, y| {
            let (a, b) = (x.wic.unwrap(), y.wic.unwrap());
            if (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0) {
                x.p.cmp(&y.p)
            } else {
                a.total_cmp(&b)
            }
        });
        ok.extend(failed);
        RankingTable {
            method,
            levels,
            replicates,
            seed,
            rows: ok,
        }
    }

    /// Best-ranked candidate, if any could be scored.
    pub fn best(&self) -> Option<&RankingRow> {
        self.rows.first().filter(|r| r.wic.is_some())
    }

    /// CSV with the columns of [`RANKING_COLUMNS`].
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(RANKING_COLUMNS)?;
        for rec in self.csv_records() {
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// The CSV cells of each row, without the header.
    pub fn csv_records(&self) -> Vec<Vec<String>> {
        let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut flags = Vec::new();
                if r.omega_source {
                    flags.push("omega_source");
                }
                if r.b_negative {
                    flags.push("b_negative");
                }
                vec![
                    if r.wic.is_some() { (i + 1).to_string() } else { String::new() },
                    r.model.clone(),
                    r.p.to_string(),
                    opt(r.wic),
                    opt(r.a),
                    opt(r.b),
                    opt(r.b_se),
                    opt(r.objective),
                    opt(r.gof_p),
                    r.dropped.to_string(),
                    flags.join(";"),
                    r.error.clone().unwrap_or_default(),
                ]
            })
            .collect()
    }

    /// Aligned text table for the console.
    pub fn pretty(&self) -> String {
        let mut s = String::new();
        let mw = self.rows.iter().map(|r| r.model.len()).max().unwrap_or(5).max(5);
        let _ = writeln!(
            s,
            "WIC ranking ({} method, {} scales, {} replicates)",
            self.method, self.levels, self.replicates
        );
        let _ = writeln!(
            s,
            "{:>4}  {:<mw$}  {:>3}  {:>12}  {:>12}  {:>12}  {:>8}",
            "", "Model", "p", "WIC", "A", "B", "GoF p"
        );
        let num = |x: Option<f64>| x.map_or("NA".to_string(), |v| format!("{v:.5e}"));
        for (i, r) in self.rows.iter().enumerate() {
            let rank = if r.wic.is_some() { (i + 1).to_string() } else { "-".into() };
            let _ = write!(
                s,
                "{:>4}  {:<mw$}  {:>3}  {:>12}  {:>12}  {:>12}  {:>8}",
                rank,
                r.model,
                r.p,
                num(r.wic),
                num(r.a),
                num(r.b),
                r.gof_p.map_or("NA".to_string(), |v| format!("{v:.4}"))
            );
            if r.omega_source {
                s.push_str("  *");
            }
            if r.b_negative {
                s.push_str("  (B < 0)");
            }
            if let Some(e) = &r.error {
                let _ = write!(s, "  failed: {e}");
            }
            s.push('\n');
        }
        let _ = writeln!(s, "* supplied the common weighting matrix");
        s
    }
}
