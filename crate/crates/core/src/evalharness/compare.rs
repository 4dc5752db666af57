use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::run::EvalRunResult;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BestMarks {
    pub bleu: bool,
    pub sari: bool,
    pub fkgl: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub system: String,
    pub bleu: f64,
    pub sari: f64,
    pub fkgl: f64,
    pub best: BestMarks,
}

/// One row per system. Best is the highest BLEU and SARI and the lowest
/// FKGL, compared at the two printed decimals; tied rows are all marked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub test_set_hash: String,
    pub rows: Vec<ComparisonRow>,
}

fn cents(x: f64) -> i64 {
    (x * 100.0).round() as i64
}

impl Comparison {
    /// Builds the table from `(system, bleu, sari, fkgl)` rows.
    pub fn from_scores(
        test_set_hash: impl Into<String>,
        scores: &[(String, f64, f64, f64)],
    ) -> Self {
        let best_of = |pick: fn(&(String, f64, f64, f64)) -> f64, lowest: bool| -> Option<i64> {
            let values = scores.iter().map(|s| cents(pick(s)));
            if lowest {
                values.min()
            } else {
                values.max()
            }
        };
        let bleu = best_of(|s| s.1, false);
        let sari = best_of(|s| s.2, false);
        let fkgl = best_of(|s| s.3, true);
        let rows = scores
            .iter()
            .map(|(system, b, s, f)| ComparisonRow {
                system: system.clone(),
                bleu: *b,
                sari: *s,
                fkgl: *f,
                best: BestMarks {
                    bleu: Some(cents(*b)) == bleu,
                    sari: Some(cents(*s)) == sari,
                    fkgl: Some(cents(*f)) == fkgl,
                },
            })
            .collect();
        Comparison {
            test_set_hash: test_set_hash.into(),
            rows,
        }
    }

    /// Delimiter-separated values: header `System,BLEU,SARI,FKGL`, plain
    /// numbers.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("System,BLEU,SARI,FKGL\n");
        for r in &self.rows {
            let system = if r.system.contains([',', '"', '\n']) {
                format!("\"{}\"", r.system.replace('"', "\"\""))
            } else {
                r.system.clone()
            };
            writeln!(out, "{system},{:.2},{:.2},{:.2}", r.bleu, r.sari, r.fkgl).unwrap();
        }
        out
    }

    /// Markdown table with best values in bold.
    pub fn to_markdown(&self) -> String {
        let cell = |v: f64, best: bool| {
            if best {
                format!("**{v:.2}**")
            } else {
                format!("{v:.2}")
            }
        };
        let mut out = String::from("| System | BLEU | SARI | FKGL |\n|---|---:|---:|---:|\n");
        for r in &self.rows {
            writeln!(
                out,
                "| {} | {} | {} | {} |",
                r.system.replace('|', "\\|"),
                cell(r.bleu, r.best.bleu),
                cell(r.sari, r.best.sari),
                cell(r.fkgl, r.best.fkgl)
            )
            .unwrap();
        }
        out.push_str("\nBold marks the best value per column (FKGL: lowest).\n");
        out
    }
}

/// Compares runs scored on the same test set.
pub fn compare_systems(results: &[EvalRunResult]) -> Result<Comparison> {
    if results.len() < 2 {
        return Err(Error::Invalid(format!(
            "a comparison needs at least two runs, got {}",
            results.len()
        )));
    }
    let hash = &results[0].test_set_hash;
    if let Some(other) = results.iter().find(|r| &r.test_set_hash != hash) {
        return Err(Error::TestSetMismatch(
            hash.clone(),
            other.test_set_hash.clone(),
        ));
    }
    let scores: Vec<(String, f64, f64, f64)> = results
        .iter()
        .map(|r| {
            (
                r.system_name.clone(),
                r.report.bleu,
                r.report.sari,
                r.report.fkgl,
            )
        })
        .collect();
    Ok(Comparison::from_scores(hash.clone(), &scores))
}
