//! Seeded synthetic inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simpkit_core::EvalInstance;

const WORDS: &[&str] = &[
    "linn",
    "valitsus",
    "kinnitas",
    "eelarve",
    "uue",
    "kooli",
    "ehitamise",
    "ja",
    "teede",
    "remondi",
    "jaoks",
    "mis",
    "algab",
    "järgmisel",
    "aastal",
    "kevadel",
    "kui",
    "ilm",
    "lubab",
    "elanikud",
    "said",
    "arvamust",
    "avaldada",
    "koosolekul",
    "eile",
    "õhtul",
    "pärast",
    "tööd",
];

fn sentence(rng: &mut ChaCha8Rng, min: usize, max: usize) -> Vec<&'static str> {
    let len = rng.random_range(min..=max);
    (0..len)
        .map(|_| WORDS[rng.random_range(0..WORDS.len())])
        .collect()
}

fn capitalized(words: &[&str]) -> String {
    let mut text = words.join(" ");
    if let Some(first) = text.get(..1) {
        text.replace_range(..1, &first.to_uppercase());
    }
    text.push('.');
    text
}

/// `n` instances with `refs` references each; outputs and references are
/// drop-edits of the input.
pub fn instances(n: usize, refs: usize, seed: u64) -> Vec<EvalInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let input = sentence(&mut rng, 12, 30);
            let mut edit = |keep: f64| -> String {
                let kept: Vec<&str> = input
                    .iter()
                    .copied()
                    .filter(|_| rng.random_bool(keep))
                    .collect();
                capitalized(if kept.is_empty() { &input[..1] } else { &kept })
            };
            let output = edit(0.8);
            let references: Vec<String> = (0..refs).map(|_| edit(0.6)).collect();
            EvalInstance::new(format!("b{i:06}"), capitalized(&input), output, references)
        })
        .collect()
}

/// A document of roughly `sentences` sentences with some abbreviations.
pub fn document(sentences: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut doc = String::new();
    for i in 0..sentences {
        let words = sentence(&mut rng, 5, 25);
        doc.push_str(&capitalized(&words));
        doc.push(if i % 7 == 6 { '\n' } else { ' ' });
        if i % 5 == 0 {
            doc.push_str("Nt. ");
        }
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic() {
        assert_eq!(instances(5, 2, 1), instances(5, 2, 1));
        assert_eq!(document(20, 3), document(20, 3));
        assert!(instances(3, 4, 9).iter().all(|i| i.references.len() == 4));
    }
}
