//! SARI: add F1, keep F1 and deletion precision over orders 1 to 4.
//!
//! Zero denominators yield 0 for the affected precision or recall, and a
//! harmonic mean with `p + r = 0` is 0.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::ngram::{counts, Counts};
use super::{EvalInstance, TokenizedInstance};
use crate::error::{Error, Result};

const MAX_N: usize = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SariComponents {
    pub f_add: f64,
    pub f_keep: f64,
    pub p_del: f64,
}

impl SariComponents {
    /// `100 × (f_add + f_keep + p_del) / 3`.
    pub fn combined(&self) -> f64 {
        100.0 * (self.f_add + self.f_keep + self.p_del) / 3.0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SariScore {
    pub sari: f64,
    pub components: SariComponents,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn get(c: &Counts<'_>, g: &[String]) -> usize {
    c.get(g).copied().unwrap_or(0)
}

/// Mean of `num[g] / den[g]` over the grams with a positive `den`.
fn mean_ratio<'a>(num: impl Fn(&'a [String]) -> usize, den: &Counts<'a>) -> f64 {
    let mut sum = 0.0;
    let mut distinct = 0usize;
    for (&g, &d) in den {
        if d > 0 {
            sum += num(g) as f64 / d as f64;
            distinct += 1;
        }
    }
    ratio(sum, distinct as f64)
}

fn order_components(inst: &TokenizedInstance, n: usize) -> SariComponents {
    let r = inst.references.len();
    let s = counts(&inst.input, n, r);
    let c = counts(&inst.output, n, r);
    let mut refs: Counts<'_> = Counts::new();
    for reference in &inst.references {
        for (g, k) in counts(reference, n, 1) {
            *refs.entry(g).or_insert(0) += k;
        }
    }

    // addition, set semantics
    let added: HashSet<&[String]> = c.keys().filter(|g| !s.contains_key(*g)).copied().collect();
    let good = added.iter().filter(|g| refs.contains_key(*g)).count();
    let all = refs.keys().filter(|g| !s.contains_key(*g)).count();
    let f_add = f1(
        ratio(good as f64, added.len() as f64),
        ratio(good as f64, all as f64),
    );

    // keep, multiset semantics
    let keep: Counts<'_> = s
        .iter()
        .filter_map(|(&g, &sv)| {
            let k = sv.min(get(&c, g));
            (k > 0).then_some((g, k))
        })
        .collect();
    let keep_all: Counts<'_> = s
        .iter()
        .filter_map(|(&g, &sv)| {
            let k = sv.min(get(&refs, g));
            (k > 0).then_some((g, k))
        })
        .collect();
    let keep_good = |g: &[String]| get(&keep, g).min(get(&refs, g));
    let f_keep = f1(
        mean_ratio(keep_good, &keep),
        mean_ratio(keep_good, &keep_all),
    );

    // deletion, precision only
    let deleted: Counts<'_> = s
        .iter()
        .filter_map(|(&g, &sv)| {
            let d = sv.saturating_sub(get(&c, g));
            (d > 0).then_some((g, d))
        })
        .collect();
    let del_good = |g: &[String]| get(&deleted, g).saturating_sub(get(&refs, g));
    let p_del = mean_ratio(del_good, &deleted);

    SariComponents {
        f_add,
        f_keep,
        p_del,
    }
}

pub(crate) fn sari_instance(inst: &TokenizedInstance) -> SariScore {
    let mut sum = SariComponents::default();
    for n in 1..=MAX_N {
        let c = order_components(inst, n);
        sum.f_add += c.f_add;
        sum.f_keep += c.f_keep;
        sum.p_del += c.p_del;
    }
    let components = SariComponents {
        f_add: sum.f_add / MAX_N as f64,
        f_keep: sum.f_keep / MAX_N as f64,
        p_del: sum.p_del / MAX_N as f64,
    };
    SariScore {
        sari: components.combined(),
        components,
    }
}

pub fn sari_sentence(instance: &EvalInstance) -> Result<SariScore> {
    Ok(sari_instance(&TokenizedInstance::new(instance)?))
}

pub(crate) fn sari_tokenized(instances: &[TokenizedInstance]) -> Result<SariScore> {
    if instances.is_empty() {
        return Err(Error::EmptyInput("SARI"));
    }
    let n = instances.len() as f64;
    let mut sari = 0.0;
    let mut comp = SariComponents::default();
    for inst in instances {
        let s = sari_instance(inst);
        sari += s.sari;
        comp.f_add += s.components.f_add;
        comp.f_keep += s.components.f_keep;
        comp.p_del += s.components.p_del;
    }
    Ok(SariScore {
        sari: sari / n,
        components: SariComponents {
            f_add: comp.f_add / n,
            f_keep: comp.f_keep / n,
            p_del: comp.p_del / n,
        },
    })
}

/// Corpus SARI: the mean of sentence scores, with components averaged the
/// same way.
pub fn sari_corpus(instances: &[EvalInstance]) -> Result<SariScore> {
    sari_tokenized(&TokenizedInstance::all(instances)?)
}
