use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::rubric::{Criterion, Scores};
use super::store::Projection;

/// Mean consensus scores of one system. Values are unrounded; formatting
/// rounds to two decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSummary {
    pub system: String,
    pub n: usize,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "S")]
    pub s: f64,
    /// Mean of the four criterion means.
    pub overall: f64,
}

impl SystemSummary {
    pub fn mean(&self, c: Criterion) -> f64 {
        match c {
            Criterion::G => self.g,
            Criterion::R => self.r,
            Criterion::M => self.m,
            Criterion::S => self.s,
        }
    }
}

/// Groups consensus scores by system and averages them. Systems appear in
/// name order.
pub fn consensus_summary<'a>(
    records: impl IntoIterator<Item = (&'a str, &'a Scores)>,
) -> Vec<SystemSummary> {
    let mut groups: BTreeMap<&str, (usize, [u64; 4])> = BTreeMap::new();
    for (system, scores) in records {
        let (n, sums) = groups.entry(system).or_default();
        *n += 1;
        for (i, c) in Criterion::ALL.into_iter().enumerate() {
            sums[i] += u64::from(scores.get(c));
        }
    }
    groups
        .into_iter()
        .map(|(system, (n, sums))| {
            let means = sums.map(|s| s as f64 / n as f64);
            SystemSummary {
                system: system.to_string(),
                n,
                g: means[0],
                r: means[1],
                m: means[2],
                s: means[3],
                overall: means.iter().sum::<f64>() / 4.0,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub systems: Vec<SystemSummary>,
    pub items_total: usize,
    pub items_with_consensus: usize,
    /// Systems with items but no consensus yet.
    pub systems_without_consensus: Vec<String>,
}

impl Summary {
    pub fn of(projection: &Projection) -> Self {
        let resolved: Vec<(&str, &Scores)> = projection
            .items
            .values()
            .filter_map(|s| {
                s.consensus
                    .as_ref()
                    .map(|c| (s.spec.system_name.as_str(), &c.scores))
            })
            .collect();
        let systems = consensus_summary(resolved.iter().copied());
        let mut without: Vec<String> = projection
            .items
            .values()
            .map(|s| s.spec.system_name.clone())
            .filter(|name| !systems.iter().any(|s| &s.system == name))
            .collect();
        without.sort();
        without.dedup();
        Summary {
            items_total: projection.items.len(),
            items_with_consensus: resolved.len(),
            systems,
            systems_without_consensus: without,
        }
    }

    /// Markdown table: Model, G, R, M, S, Overall.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from(
            "| Model | G | R | M | S | Overall | n |\n|---|---:|---:|---:|---:|---:|---:|\n",
        );
        for s in &self.systems {
            writeln!(
                out,
                "| {} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} | {} |",
                s.system.replace('|', "\\|"),
                s.g,
                s.r,
                s.m,
                s.s,
                s.overall,
                s.n
            )
            .unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(g: u8, r: u8, m: u8, sc: u8) -> Scores {
        Scores::new(g, r, m, sc).unwrap()
    }

    #[test]
    fn symmetric_pair() {
        let a = s(4, 4, 4, 4);
        let b = s(2, 2, 2, 2);
        let out = consensus_summary([("x", &a), ("x", &b)]);
        assert_eq!(out.len(), 1);
        for c in Criterion::ALL {
            assert_eq!(out[0].mean(c), 3.0);
        }
        assert_eq!(out[0].overall, 3.0);
    }

    #[test]
    fn groups_by_system() {
        let top = s(4, 4, 4, 4);
        let low = s(0, 1, 2, 3);
        let out = consensus_summary([("b", &low), ("a", &top), ("a", &top)]);
        assert_eq!(out[0].system, "a");
        assert_eq!(out[0].n, 2);
        assert_eq!(out[1].overall, 1.5);
    }

    #[test]
    fn overall_can_differ_from_a_rounded_print() {
        // criterion totals 113, 102, 88, 47 over 50 items: 2.26, 2.04, 1.76, 0.94
        let mut items = [[0u8; 4]; 50];
        for (c, total) in [113u32, 102, 88, 47].into_iter().enumerate() {
            let mut left = total;
            for item in items.iter_mut() {
                let v = left.min(4);
                item[c] = v as u8;
                left -= v;
            }
        }
        let scores: Vec<Scores> = items.iter().map(|i| s(i[0], i[1], i[2], i[3])).collect();
        let out = consensus_summary(scores.iter().map(|x| ("nmt", x)));
        assert!((out[0].g - 2.26).abs() < 1e-12);
        assert!((out[0].overall - 1.75).abs() < 1e-12);
    }
}
