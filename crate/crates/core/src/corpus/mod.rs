//! Sentence extraction and aligned-pair dataset assembly.

mod dataset;
mod pairs;
mod segment;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use dataset::{
    build_dataset, merge_sources, split_dataset, DatasetManifest, DatasetSplits, PairSource,
    SourceTag, Split, SplitRatios,
};
pub use pairs::{AlignedPair, Origin};
pub use segment::{
    filter_candidates, segment_article, segment_sentences, word_count, SegmentationRules,
    SentenceRecord,
};

use crate::error::{Error, Result};
use crate::jsonl;

/// Minimum word count for a sentence to be worth simplifying.
pub const DEFAULT_MIN_WORDS: usize = 16;

/// A plain-text article.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub text: String,
}

/// Loads articles from `path`.
///
/// A `.jsonl` file holds one `{id, text}` article per line; any other file
/// is a single article named after the file stem.
pub fn read_articles(path: &Path) -> Result<Vec<Article>> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        return jsonl::read_records(path);
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "article".into());
    Ok(vec![Article { id, text }])
}

pub fn segment_articles(articles: &[Article], rules: &SegmentationRules) -> Vec<SentenceRecord> {
    articles
        .iter()
        .flat_map(|a| segment_article(&a.text, Some(&a.id), rules))
        .collect()
}
