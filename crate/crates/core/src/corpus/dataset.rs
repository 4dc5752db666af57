use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pairs::{AlignedPair, Origin};
use crate::error::{Error, Result};
use crate::jsonl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
    Gold,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Dev, Split::Test, Split::Gold];

    pub fn file_name(self) -> &'static str {
        match self {
            Split::Train => "train.jsonl",
            Split::Dev => "dev.jsonl",
            Split::Test => "test.jsonl",
            Split::Gold => "gold.jsonl",
        }
    }
}

/// Composition of a dataset. `split_sizes` and `seed` stay empty until the
/// dataset has been split.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub counts_by_origin: BTreeMap<Origin, usize>,
    pub total: usize,
    pub split_sizes: BTreeMap<Split, usize>,
    pub seed: Option<u64>,
}

impl DatasetManifest {
    fn from_pairs(pairs: &[AlignedPair]) -> Self {
        let mut counts_by_origin = BTreeMap::new();
        for p in pairs {
            *counts_by_origin.entry(p.origin).or_insert(0) += 1;
        }
        DatasetManifest {
            counts_by_origin,
            total: pairs.len(),
            ..Default::default()
        }
    }

    pub fn check(&self) -> Result<()> {
        let by_origin: usize = self.counts_by_origin.values().sum();
        if by_origin != self.total {
            return Err(Error::Invalid(format!(
                "manifest total {} differs from the per-origin sum {by_origin}",
                self.total
            )));
        }
        let by_split: usize = self.split_sizes.values().sum();
        if !self.split_sizes.is_empty() && by_split != self.total {
            return Err(Error::Invalid(format!(
                "manifest total {} differs from the split sum {by_split}",
                self.total
            )));
        }
        Ok(())
    }
}

/// The origin label attached to a pair file on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceTag {
    Fixed(Origin),
    /// LLM silver data; each record's origin follows its template version.
    Llm,
}

impl FromStr for SourceTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "llm" {
            Ok(SourceTag::Llm)
        } else {
            s.parse().map(SourceTag::Fixed)
        }
    }
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceTag::Fixed(o) => o.fmt(f),
            SourceTag::Llm => f.write_str("llm"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PairSource {
    pub path: PathBuf,
    pub tag: SourceTag,
}

impl FromStr for PairSource {
    type Err = Error;

    /// `<path>:<origin>`; the last colon separates the tag.
    fn from_str(s: &str) -> Result<Self> {
        let (path, tag) = s.rsplit_once(':').ok_or_else(|| {
            Error::Invalid(format!("source `{s}` is not of the form <path>:<origin>"))
        })?;
        Ok(PairSource {
            path: PathBuf::from(path),
            tag: tag.parse()?,
        })
    }
}

fn read_source(source: &PairSource) -> Result<Vec<AlignedPair>> {
    let path = &source.path;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| Error::Parse {
            path: path.clone(),
            line: idx + 1,
            message,
        };
        let pair: AlignedPair =
            serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        pair.validate().map_err(|e| malformed(e.to_string()))?;
        let expected = match source.tag {
            SourceTag::Fixed(origin) => origin,
            SourceTag::Llm => {
                let version = pair.template_version.as_deref().unwrap_or_default();
                Origin::from_template_version(version)
            }
        };
        if pair.origin != expected {
            return Err(malformed(format!(
                "origin `{}` does not match source tag `{}` (expected `{expected}`)",
                pair.origin, source.tag
            )));
        }
        pairs.push(pair);
    }
    Ok(pairs)
}

/// Reads and validates every source, rejecting ids seen twice.
pub fn merge_sources(sources: &[PairSource]) -> Result<(Vec<AlignedPair>, DatasetManifest)> {
    let mut merged = Vec::new();
    let mut seen = HashSet::new();
    let mut touched = BTreeMap::new();
    for source in sources {
        match source.tag {
            SourceTag::Fixed(o) => {
                touched.insert(o, 0);
            }
            SourceTag::Llm => {
                touched.insert(Origin::LlmV1, 0);
                touched.insert(Origin::LlmAgents, 0);
            }
        }
        for pair in read_source(source)? {
            if !seen.insert(pair.id.clone()) {
                return Err(Error::DuplicateId(pair.id));
            }
            merged.push(pair);
        }
    }
    let mut manifest = DatasetManifest::from_pairs(&merged);
    // origins named on the command line show up even when empty
    for (origin, zero) in touched {
        manifest.counts_by_origin.entry(origin).or_insert(zero);
    }
    Ok((merged, manifest))
}

/// Merges the sources into one canonical pair file at `out`.
pub fn build_dataset(sources: &[PairSource], out: &Path) -> Result<DatasetManifest> {
    let (pairs, manifest) = merge_sources(sources)?;
    jsonl::write_records(out, &pairs)?;
    Ok(manifest)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            dev: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.dev, self.test];
        if parts.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::Invalid(format!(
                "split ratios must be non-negative, got {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!(
                "split ratios must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

impl FromStr for SplitRatios {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Invalid(format!("bad ratios `{s}`: {e}")))?;
        let [train, dev, test] = parts[..] else {
            return Err(Error::Invalid(format!(
                "expected three ratios train,dev,test, got `{s}`"
            )));
        };
        let ratios = SplitRatios { train, dev, test };
        ratios.validate()?;
        Ok(ratios)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetSplits {
    pub train: Vec<AlignedPair>,
    pub dev: Vec<AlignedPair>,
    pub test: Vec<AlignedPair>,
    pub gold: Vec<AlignedPair>,
}

impl DatasetSplits {
    pub fn get(&self, split: Split) -> &[AlignedPair] {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
            Split::Gold => &self.gold,
        }
    }

    /// Writes `train.jsonl`, `dev.jsonl`, `test.jsonl`, and `gold.jsonl` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        for split in Split::ALL {
            jsonl::write_records(&dir.join(split.file_name()), self.get(split))?;
        }
        Ok(())
    }
}

/// Holds out `gold_ids` and partitions the rest by seeded shuffle.
///
/// The shuffle runs over pairs sorted by id, so the result does not depend
/// on input order. Train and dev sizes are rounded; test takes the remainder.
/// Each split is written sorted by id.
pub fn split_dataset(
    pairs: &[AlignedPair],
    seed: u64,
    ratios: SplitRatios,
    gold_ids: &[String],
) -> Result<(DatasetSplits, DatasetManifest)> {
    ratios.validate()?;
    let by_id: HashMap<&str, &AlignedPair> = pairs.iter().map(|p| (p.id.as_str(), p)).collect();
    if by_id.len() != pairs.len() {
        let mut seen = HashSet::new();
        let dup = pairs
            .iter()
            .find(|p| !seen.insert(&p.id))
            .expect("a duplicate exists");
        return Err(Error::DuplicateId(dup.id.clone()));
    }
    let mut gold_set = HashSet::new();
    for id in gold_ids {
        if !by_id.contains_key(id.as_str()) {
            return Err(Error::UnknownId(id.clone()));
        }
        if !gold_set.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }

    let mut rest: Vec<&AlignedPair> = pairs
        .iter()
        .filter(|p| !gold_set.contains(p.id.as_str()))
        .collect();
    rest.sort_by(|a, b| a.id.cmp(&b.id));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rest.shuffle(&mut rng);

    let n = rest.len();
    let n_train = ((n as f64 * ratios.train).round() as usize).min(n);
    let n_dev = ((n as f64 * ratios.dev).round() as usize).min(n - n_train);

    let collect_sorted = |slice: &[&AlignedPair]| {
        let mut v: Vec<AlignedPair> = slice.iter().map(|p| (*p).clone()).collect();
        v.sort_by(|a, b| a.id.cmp(&b.id));
        v
    };
    let mut gold: Vec<AlignedPair> = gold_set.iter().map(|id| by_id[id].clone()).collect();
    gold.sort_by(|a, b| a.id.cmp(&b.id));
    let splits = DatasetSplits {
        train: collect_sorted(&rest[..n_train]),
        dev: collect_sorted(&rest[n_train..n_train + n_dev]),
        test: collect_sorted(&rest[n_train + n_dev..]),
        gold,
    };

    let mut manifest = DatasetManifest::from_pairs(pairs);
    manifest.seed = Some(seed);
    manifest.split_sizes = Split::ALL
        .into_iter()
        .map(|s| (s, splits.get(s).len()))
        .collect();
    Ok((splits, manifest))
}
