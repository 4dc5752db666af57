use std::collections::HashMap;

pub(crate) type Counts<'a> = HashMap<&'a [String], usize>;

/// Order-`n` n-gram counts of `tokens`, each multiplied by `weight`.
pub(crate) fn counts(tokens: &[String], n: usize, weight: usize) -> Counts<'_> {
    let mut out = HashMap::new();
    if n == 0 || tokens.len() < n {
        return out;
    }
    for gram in tokens.windows(n) {
        *out.entry(gram).or_insert(0) += weight;
    }
    out
}
