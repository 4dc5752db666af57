//! Brute-force BLEU and SARI written directly from their definitions.
//!
//! Inputs are pre-tokenized word lists. Nothing here calls into the
//! library; n-grams are plain vectors and counting is a linear scan.

pub type Tokens = Vec<String>;

fn ngrams(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    if tokens.len() < n {
        return Vec::new();
    }
    (0..=tokens.len() - n)
        .map(|i| tokens[i..i + n].to_vec())
        .collect()
}

fn count(list: &[Vec<String>], gram: &[String]) -> usize {
    list.iter().filter(|g| g.as_slice() == gram).count()
}

fn distinct(list: &[Vec<String>]) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = Vec::new();
    for g in list {
        if !out.contains(g) {
            out.push(g.clone());
        }
    }
    out
}

pub struct Case {
    pub input: Tokens,
    pub output: Tokens,
    pub refs: Vec<Tokens>,
}

/// Corpus BLEU on the 0-100 scale with up to 4-grams.
pub fn bleu(cases: &[&Case]) -> f64 {
    let max_n = 4;
    let mut matches = vec![0usize; max_n];
    let mut totals = vec![0usize; max_n];
    let mut c = 0usize;
    let mut r = 0usize;
    for case in cases {
        let cand = &case.output;
        c += cand.len();
        // closest reference length, ties to the shorter one
        let mut best: Option<usize> = None;
        for reference in &case.refs {
            let len = reference.len();
            best = Some(match best {
                None => len,
                Some(b) => {
                    let (db, dl) = (b.abs_diff(cand.len()), len.abs_diff(cand.len()));
                    if dl < db || (dl == db && len < b) {
                        len
                    } else {
                        b
                    }
                }
            });
        }
        r += best.unwrap();
        for n in 1..=max_n {
            let cand_grams = ngrams(cand, n);
            totals[n - 1] += cand_grams.len();
            for g in distinct(&cand_grams) {
                let in_cand = count(&cand_grams, &g);
                let mut max_ref = 0;
                for reference in &case.refs {
                    max_ref = max_ref.max(count(&ngrams(reference, n), &g));
                }
                matches[n - 1] += in_cand.min(max_ref);
            }
        }
    }
    if (0..max_n).any(|i| matches[i] == 0 || totals[i] == 0) {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for i in 0..max_n {
        log_sum += (1.0 / max_n as f64) * (matches[i] as f64 / totals[i] as f64).ln();
    }
    let bp = if c == 0 {
        0.0
    } else {
        f64::min(1.0, (1.0 - r as f64 / c as f64).exp())
    };
    bp * log_sum.exp() * 100.0
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Mean of `values`, or 0 when empty.
fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Per-instance SARI: (score on 0-100, f_add, f_keep, p_del).
pub fn sari(case: &Case) -> (f64, f64, f64, f64) {
    let r = case.refs.len();
    let (mut add, mut keep, mut del) = (0.0, 0.0, 0.0);
    for n in 1..=4 {
        let i_grams = ngrams(&case.input, n);
        let o_grams = ngrams(&case.output, n);
        let ref_grams: Vec<Vec<Vec<String>>> = case.refs.iter().map(|t| ngrams(t, n)).collect();

        let i_set = distinct(&i_grams);
        let o_set = distinct(&o_grams);
        let mut ref_union: Vec<Vec<String>> = Vec::new();
        for list in &ref_grams {
            for g in distinct(list) {
                if !ref_union.contains(&g) {
                    ref_union.push(g);
                }
            }
        }

        // addition, on sets
        let added: Vec<&Vec<String>> = o_set.iter().filter(|g| !i_set.contains(g)).collect();
        let good = added.iter().filter(|g| ref_union.contains(g)).count();
        let all = ref_union.iter().filter(|g| !i_set.contains(g)).count();
        add += f1(ratio(good, added.len()), ratio(good, all));

        // keep and delete, on weighted counts
        let mut universe: Vec<Vec<String>> = Vec::new();
        for g in i_grams
            .iter()
            .chain(&o_grams)
            .chain(ref_grams.iter().flatten())
        {
            if !universe.contains(g) {
                universe.push(g.clone());
            }
        }
        let (mut kp, mut kr, mut dp) = (Vec::new(), Vec::new(), Vec::new());
        for g in &universe {
            let s = count(&i_grams, g) * r;
            let c = count(&o_grams, g) * r;
            let rr: usize = ref_grams.iter().map(|l| count(l, g)).sum();
            let k = s.min(c);
            let k_good = k.min(rr);
            let k_all = s.min(rr);
            if k > 0 {
                kp.push(k_good as f64 / k as f64);
            }
            if k_all > 0 {
                kr.push(k_good as f64 / k_all as f64);
            }
            let d = s.saturating_sub(c);
            let d_good = d.saturating_sub(rr);
            if d > 0 {
                dp.push(d_good as f64 / d as f64);
            }
        }
        keep += f1(mean(&kp), mean(&kr));
        del += mean(&dp);
    }
    let (add, keep, del) = (add / 4.0, keep / 4.0, del / 4.0);
    (100.0 * (add + keep + del) / 3.0, add, keep, del)
}

/// Corpus SARI: the mean of per-instance scores and components.
pub fn sari_corpus(cases: &[&Case]) -> (f64, f64, f64, f64) {
    let n = cases.len() as f64;
    let mut acc = (0.0, 0.0, 0.0, 0.0);
    for case in cases {
        let s = sari(case);
        acc.0 += s.0;
        acc.1 += s.1;
        acc.2 += s.2;
        acc.3 += s.3;
    }
    (acc.0 / n, acc.1 / n, acc.2 / n, acc.3 / n)
}
