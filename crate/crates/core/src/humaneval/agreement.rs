use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::rubric::{Criterion, Scores, MAX_SCORE};
use super::store::{ItemState, Projection};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disagreement {
    pub item_id: String,
    pub system_name: String,
    pub criteria: Vec<Criterion>,
    pub ratings: BTreeMap<String, Scores>,
    pub resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    /// Exact-agreement rate per criterion; `None` when no item is fully rated.
    pub rates: BTreeMap<Criterion, Option<f64>>,
    /// Cohen's kappa, present when every compared item has the same two
    /// annotators; `None` per criterion when chance agreement is 1.
    pub kappa: Option<BTreeMap<Criterion, Option<f64>>>,
    pub disagreements: Vec<Disagreement>,
    pub compared: usize,
    /// Items still missing a rating from an assigned annotator.
    pub pending: usize,
    /// Log position the report was computed at.
    pub seq: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Per-criterion exact agreement over every fully rated item.
pub fn agreement(projection: &Projection) -> AgreementReport {
    let mut compared = Vec::new();
    let mut pending = 0;
    for state in projection.items.values() {
        if state.fully_rated() {
            compared.push(state);
        } else {
            pending += 1;
        }
    }

    let mut agree = [0usize; 4];
    let mut disagreements = Vec::new();
    for state in &compared {
        let ratings: BTreeMap<String, Scores> = state
            .assigned
            .iter()
            .map(|a| (a.clone(), state.ratings[a].scores))
            .collect();
        let mut criteria = Vec::new();
        for (i, c) in Criterion::ALL.into_iter().enumerate() {
            let values: BTreeSet<u8> = ratings.values().map(|s| s.get(c)).collect();
            if values.len() == 1 {
                agree[i] += 1;
            } else {
                criteria.push(c);
            }
        }
        if !criteria.is_empty() {
            disagreements.push(Disagreement {
                item_id: state.spec.item_id.clone(),
                system_name: state.spec.system_name.clone(),
                criteria,
                ratings,
                resolved: state.consensus.is_some(),
            });
        }
    }

    let n = compared.len();
    let rates = Criterion::ALL
        .into_iter()
        .zip(agree)
        .map(|(c, a)| (c, (n > 0).then(|| a as f64 / n as f64)))
        .collect();

    let annotators: BTreeSet<&String> = compared.iter().flat_map(|s| s.assigned.iter()).collect();
    let warning = (n > 0 && annotators.len() == 1).then(|| {
        log::warn!("agreement computed with a single annotator");
        "only one annotator: agreement is 1.0 by definition".to_string()
    });

    AgreementReport {
        rates,
        kappa: kappa(&compared),
        disagreements,
        compared: n,
        pending,
        seq: projection.seq,
        warning,
    }
}

fn kappa(compared: &[&ItemState]) -> Option<BTreeMap<Criterion, Option<f64>>> {
    let first = compared.first()?;
    if first.assigned.len() != 2 || compared.iter().any(|s| s.assigned != first.assigned) {
        return None;
    }
    let pair: Vec<&String> = first.assigned.iter().collect();
    let n = compared.len() as f64;
    let levels = MAX_SCORE as usize + 1;
    Some(
        Criterion::ALL
            .into_iter()
            .map(|c| {
                let mut observed = 0usize;
                let mut marg_a = vec![0usize; levels];
                let mut marg_b = vec![0usize; levels];
                for s in compared {
                    let a = s.ratings[pair[0]].scores.get(c) as usize;
                    let b = s.ratings[pair[1]].scores.get(c) as usize;
                    observed += usize::from(a == b);
                    marg_a[a] += 1;
                    marg_b[b] += 1;
                }
                let po = observed as f64 / n;
                let pe: f64 = marg_a
                    .iter()
                    .zip(&marg_b)
                    .map(|(a, b)| (*a as f64 / n) * (*b as f64 / n))
                    .sum();
                let k = (pe < 1.0).then(|| (po - pe) / (1.0 - pe));
                (c, k)
            })
            .collect(),
    )
}
