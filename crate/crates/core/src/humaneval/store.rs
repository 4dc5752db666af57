use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use super::rubric::{ScoreError, Scores};
use crate::error::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemSpec {
    pub item_id: String,
    pub system_name: String,
    pub source: String,
    pub output: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemStatus {
    /// Some assigned annotator has not rated yet.
    Pending,
    /// Everyone rated and agreed; consensus not yet recorded.
    Rated,
    /// Everyone rated and some criterion differs.
    Disputed,
    Consensus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationItem {
    pub item_id: String,
    pub system_name: String,
    pub source: String,
    pub output: String,
    pub status: ItemStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub annotator_id: String,
    pub item_id: String,
    pub scores: Scores,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Unix seconds.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsensusRecord {
    pub item_id: String,
    pub scores: Scores,
    pub resolved_by: Vec<String>,
    /// Created because all annotators already agreed.
    #[serde(default)]
    pub automatic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    ItemAdded(ItemSpec),
    Assigned { annotator: String, item_id: String },
    Rated(Rating),
    Consensus(ConsensusRecord),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, thiserror::Error)]
pub enum HumanEvalError {
    #[error("{0}")]
    Validation(ScoreError),
    #[error("annotator `{annotator}` is not assigned item `{item_id}`")]
    NotAssigned { annotator: String, item_id: String },
    #[error("unknown item `{0}`")]
    UnknownItem(String),
    #[error("{0}")]
    Conflict(String),
    #[error(transparent)]
    Store(#[from] Error),
}

impl HumanEvalError {
    fn invalid(message: impl Into<String>) -> Self {
        HumanEvalError::Validation(ScoreError {
            criterion: None,
            message: message.into(),
        })
    }
}

impl From<HumanEvalError> for Error {
    fn from(e: HumanEvalError) -> Self {
        match e {
            HumanEvalError::Store(inner) => inner,
            other => Error::Invalid(other.to_string()),
        }
    }
}

type HeResult<T> = std::result::Result<T, HumanEvalError>;

#[derive(Debug, Clone)]
pub struct ItemState {
    pub spec: ItemSpec,
    pub assigned: BTreeSet<String>,
    pub ratings: BTreeMap<String, Rating>,
    pub consensus: Option<ConsensusRecord>,
    /// Sequence number of the latest rating event for this item.
    pub ratings_seq: u64,
}

impl ItemState {
    pub fn fully_rated(&self) -> bool {
        !self.assigned.is_empty() && self.assigned.iter().all(|a| self.ratings.contains_key(a))
    }

    /// Scores shared by every assigned annotator, if they all rated alike.
    pub fn shared_scores(&self) -> Option<Scores> {
        if !self.fully_rated() {
            return None;
        }
        let mut it = self.assigned.iter().map(|a| self.ratings[a].scores);
        let first = it.next()?;
        it.all(|s| s == first).then_some(first)
    }

    pub fn status(&self) -> ItemStatus {
        if self.consensus.is_some() {
            ItemStatus::Consensus
        } else if !self.fully_rated() {
            ItemStatus::Pending
        } else if self.shared_scores().is_some() {
            ItemStatus::Rated
        } else {
            ItemStatus::Disputed
        }
    }

    pub fn item(&self) -> AnnotationItem {
        AnnotationItem {
            item_id: self.spec.item_id.clone(),
            system_name: self.spec.system_name.clone(),
            source: self.spec.source.clone(),
            output: self.spec.output.clone(),
            status: self.status(),
        }
    }
}

/// In-memory state rebuilt from the event log.
#[derive(Debug, Clone, Default)]
pub struct Projection {
    pub items: BTreeMap<String, ItemState>,
    /// Sequence number of the last applied event.
    pub seq: u64,
}

impl Projection {
    fn item_mut(&mut self, id: &str) -> HeResult<&mut ItemState> {
        self.items
            .get_mut(id)
            .ok_or_else(|| HumanEvalError::UnknownItem(id.to_string()))
    }

    /// Applies one event, enforcing the state rules.
    fn apply(&mut self, entry: &LogEntry) -> HeResult<()> {
        match &entry.event {
            Event::ItemAdded(spec) => match self.items.get(&spec.item_id) {
                Some(existing) if existing.spec != *spec => {
                    return Err(HumanEvalError::Conflict(format!(
                        "item `{}` already exists with different content",
                        spec.item_id
                    )))
                }
                Some(_) => {}
                None => {
                    self.items.insert(
                        spec.item_id.clone(),
                        ItemState {
                            spec: spec.clone(),
                            assigned: BTreeSet::new(),
                            ratings: BTreeMap::new(),
                            consensus: None,
                            ratings_seq: 0,
                        },
                    );
                }
            },
            Event::Assigned { annotator, item_id } => {
                let item = self.item_mut(item_id)?;
                if item.consensus.is_some() {
                    return Err(HumanEvalError::Conflict(format!(
                        "item `{item_id}` already has a consensus"
                    )));
                }
                item.assigned.insert(annotator.clone());
            }
            Event::Rated(rating) => {
                let item = self.item_mut(&rating.item_id)?;
                if !item.assigned.contains(&rating.annotator_id) {
                    return Err(HumanEvalError::NotAssigned {
                        annotator: rating.annotator_id.clone(),
                        item_id: rating.item_id.clone(),
                    });
                }
                if item.consensus.is_some() {
                    return Err(HumanEvalError::Conflict(format!(
                        "item `{}` already has a consensus",
                        rating.item_id
                    )));
                }
                item.ratings
                    .insert(rating.annotator_id.clone(), rating.clone());
                item.ratings_seq = entry.seq;
            }
            Event::Consensus(record) => {
                let item = self.item_mut(&record.item_id)?;
                if !item.fully_rated() {
                    return Err(HumanEvalError::Conflict(format!(
                        "item `{}` is not rated by every assigned annotator",
                        record.item_id
                    )));
                }
                if record.resolved_by.is_empty() {
                    return Err(HumanEvalError::invalid(
                        "resolved_by must name at least one annotator",
                    ));
                }
                if let Some(who) = record
                    .resolved_by
                    .iter()
                    .find(|a| !item.assigned.contains(*a))
                {
                    return Err(HumanEvalError::invalid(format!(
                        "`{who}` is not an annotator of item `{}`",
                        record.item_id
                    )));
                }
                if let Some(existing) = &item.consensus {
                    return Err(HumanEvalError::Conflict(format!(
                        "item `{}` already has a consensus {:?}",
                        record.item_id, existing.scores
                    )));
                }
                item.consensus = Some(record.clone());
            }
        }
        self.seq = entry.seq;
        Ok(())
    }

    fn push(&mut self, event: Event, out: &mut Vec<LogEntry>) -> HeResult<()> {
        let entry = LogEntry {
            seq: self.seq + 1,
            event,
        };
        self.apply(&entry)?;
        out.push(entry);
        Ok(())
    }
}

/// Which of an annotator's items to list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemFilter {
    /// Not yet rated by this annotator.
    Pending,
    /// Rated by this annotator.
    Rated,
    /// Not rated the same by everyone, and not resolved.
    Disputed,
    All,
}

impl std::str::FromStr for ItemFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pending" => Ok(ItemFilter::Pending),
            "rated" => Ok(ItemFilter::Rated),
            "disputed" => Ok(ItemFilter::Disputed),
            "all" => Ok(ItemFilter::All),
            _ => Err(format!(
                "status must be pending, rated, disputed or all, got `{s}`"
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatingOutcome {
    pub item_id: String,
    pub status: ItemStatus,
    pub seq: u64,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

struct Writer {
    file: Option<File>,
    path: Option<PathBuf>,
    lines: Vec<String>,
}

/// Append-only event log with a projection kept in memory.
///
/// Writes are serialized; readers take a cheap snapshot of the latest
/// projection.
pub struct EventStore {
    writer: Mutex<Writer>,
    current: RwLock<Arc<Projection>>,
}

impl EventStore {
    pub fn in_memory() -> Self {
        EventStore {
            writer: Mutex::new(Writer {
                file: None,
                path: None,
                lines: Vec::new(),
            }),
            current: RwLock::new(Arc::new(Projection::default())),
        }
    }

    /// Opens (or creates) the log at `path` and replays it. A truncated
    /// final line left by a crash is cut off.
    pub fn open(path: &Path) -> Result<Self, Error> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(Error::io(path, e)),
        };
        let mut projection = Projection::default();
        let mut lines = Vec::new();
        let mut valid_len = 0;
        let mut offset = 0;
        let raw: Vec<&str> = text.split_inclusive('\n').collect();
        for (idx, raw_line) in raw.iter().enumerate() {
            offset += raw_line.len();
            let line = raw_line.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() {
                valid_len = offset;
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message,
            };
            let entry: LogEntry = match serde_json::from_str(line) {
                Ok(e) => e,
                Err(e) if idx + 1 == raw.len() && !raw_line.ends_with('\n') => {
                    log::warn!("{}: discarding truncated final event: {e}", path.display());
                    break;
                }
                Err(e) => return Err(parse_err(e.to_string())),
            };
            if entry.seq != projection.seq + 1 {
                return Err(parse_err(format!(
                    "expected event {}, found {}",
                    projection.seq + 1,
                    entry.seq
                )));
            }
            projection
                .apply(&entry)
                .map_err(|e| parse_err(e.to_string()))?;
            lines.push(line.to_string());
            valid_len = offset;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        if valid_len < text.len() {
            file.set_len(valid_len as u64)
                .map_err(|e| Error::io(path, e))?;
        }
        Ok(EventStore {
            writer: Mutex::new(Writer {
                file: Some(file),
                path: Some(path.to_path_buf()),
                lines,
            }),
            current: RwLock::new(Arc::new(projection)),
        })
    }

    pub fn snapshot(&self) -> Arc<Projection> {
        self.current.read().clone()
    }

    /// Runs `f` against a copy of the projection and persists the events it
    /// produced. Nothing is written if `f` fails.
    fn transact<T>(
        &self,
        f: impl FnOnce(&mut Projection, &mut Vec<LogEntry>) -> HeResult<T>,
    ) -> HeResult<T> {
        let mut writer = self.writer.lock();
        let mut next = (*self.snapshot()).clone();
        let mut entries = Vec::new();
        let value = f(&mut next, &mut entries)?;
        if entries.is_empty() {
            return Ok(value);
        }
        let mut buf = String::new();
        let mut new_lines = Vec::with_capacity(entries.len());
        for entry in &entries {
            let line = serde_json::to_string(entry).expect("serializable event");
            buf.push_str(&line);
            buf.push('\n');
            new_lines.push(line);
        }
        let Writer { file, path, lines } = &mut *writer;
        if let Some(file) = file {
            let path = path.as_deref().unwrap_or(Path::new(""));
            file.write_all(buf.as_bytes())
                .and_then(|_| file.sync_data())
                .map_err(|e| HumanEvalError::Store(Error::io(path, e)))?;
        }
        lines.extend(new_lines);
        *self.current.write() = Arc::new(next);
        Ok(value)
    }

    /// Adds the items (if new) and assigns every annotator every item.
    /// Returns the number of (annotator, item) tasks covered.
    pub fn assign_items(&self, items: &[ItemSpec], annotators: &[String]) -> HeResult<usize> {
        if items.is_empty() {
            return Err(HumanEvalError::invalid("no items to assign"));
        }
        let annotators: BTreeSet<&String> =
            annotators.iter().filter(|a| !a.trim().is_empty()).collect();
        if annotators.is_empty() {
            return Err(HumanEvalError::invalid(
                "at least one annotator is required",
            ));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = items.iter().find(|i| !seen.insert(i.item_id.as_str())) {
            return Err(HumanEvalError::invalid(format!(
                "duplicate item id `{}`",
                dup.item_id
            )));
        }
        self.transact(|proj, out| {
            for spec in items {
                if !proj.items.contains_key(&spec.item_id) {
                    proj.push(Event::ItemAdded(spec.clone()), out)?;
                } else if proj.items[&spec.item_id].spec != *spec {
                    return Err(HumanEvalError::Conflict(format!(
                        "item `{}` already exists with different content",
                        spec.item_id
                    )));
                }
                for annotator in &annotators {
                    if !proj.items[&spec.item_id].assigned.contains(*annotator) {
                        proj.push(
                            Event::Assigned {
                                annotator: (*annotator).clone(),
                                item_id: spec.item_id.clone(),
                            },
                            out,
                        )?;
                    }
                }
            }
            Ok(items.len() * annotators.len())
        })
    }

    /// Stores (or replaces) an annotator's rating. When every annotator has
    /// rated the item identically, the consensus is recorded as well.
    pub fn record_rating(
        &self,
        annotator: &str,
        item_id: &str,
        scores: &serde_json::Value,
        note: Option<String>,
    ) -> HeResult<RatingOutcome> {
        let scores = Scores::from_json(scores).map_err(HumanEvalError::Validation)?;
        let note = note.filter(|n| !n.trim().is_empty());
        self.transact(|proj, out| {
            let item = proj
                .items
                .get(item_id)
                .ok_or_else(|| HumanEvalError::UnknownItem(item_id.to_string()))?;
            let unchanged = item
                .ratings
                .get(annotator)
                .is_some_and(|r| r.scores == scores && r.note == note);
            if unchanged && item.consensus.is_none() {
                return Ok(RatingOutcome {
                    item_id: item_id.to_string(),
                    status: item.status(),
                    seq: proj.seq,
                });
            }
            proj.push(
                Event::Rated(Rating {
                    annotator_id: annotator.to_string(),
                    item_id: item_id.to_string(),
                    scores,
                    note,
                    timestamp: now(),
                }),
                out,
            )?;
            let item = &proj.items[item_id];
            if let Some(shared) = item.shared_scores() {
                let record = ConsensusRecord {
                    item_id: item_id.to_string(),
                    scores: shared,
                    resolved_by: item.assigned.iter().cloned().collect(),
                    automatic: true,
                };
                proj.push(Event::Consensus(record), out)?;
            }
            Ok(RatingOutcome {
                item_id: item_id.to_string(),
                status: proj.items[item_id].status(),
                seq: proj.seq,
            })
        })
    }

    /// Records the agreed scores for a disputed item.
    ///
    /// With `seen_seq`, the request is rejected if any rating of the item
    /// changed after that log position.
    pub fn resolve(
        &self,
        item_id: &str,
        scores: &serde_json::Value,
        resolved_by: Vec<String>,
        seen_seq: Option<u64>,
    ) -> HeResult<ConsensusRecord> {
        let scores = Scores::from_json(scores).map_err(HumanEvalError::Validation)?;
        self.transact(|proj, out| {
            let item = proj
                .items
                .get(item_id)
                .ok_or_else(|| HumanEvalError::UnknownItem(item_id.to_string()))?;
            if let Some(seen) = seen_seq {
                if item.ratings_seq > seen {
                    return Err(HumanEvalError::Conflict(format!(
                        "ratings of `{item_id}` changed at event {} after the view at {seen}",
                        item.ratings_seq
                    )));
                }
            }
            let record = ConsensusRecord {
                item_id: item_id.to_string(),
                scores,
                resolved_by,
                automatic: false,
            };
            if let Some(existing) = &item.consensus {
                if existing.scores == record.scores {
                    return Ok(existing.clone());
                }
            }
            proj.push(Event::Consensus(record.clone()), out)?;
            Ok(record)
        })
    }

    pub fn items_for(&self, annotator: &str, filter: ItemFilter) -> Vec<AnnotationItem> {
        self.snapshot()
            .items
            .values()
            .filter(|s| s.assigned.contains(annotator))
            .filter(|s| match filter {
                ItemFilter::Pending => !s.ratings.contains_key(annotator) && s.consensus.is_none(),
                ItemFilter::Rated => s.ratings.contains_key(annotator),
                ItemFilter::Disputed => s.status() == ItemStatus::Disputed,
                ItemFilter::All => true,
            })
            .map(ItemState::item)
            .collect()
    }

    /// The full event log as JSON lines.
    pub fn export(&self) -> String {
        let writer = self.writer.lock();
        let mut out = String::new();
        for line in &writer.lines {
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}
