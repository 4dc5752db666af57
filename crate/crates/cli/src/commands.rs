use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use simpkit_core::corpus::{
    build_dataset, filter_candidates, read_articles, segment_articles, split_dataset, PairSource,
    SegmentationRules, SplitRatios, DEFAULT_MIN_WORDS,
};
use simpkit_core::evalharness::{
    checkpoint_sweep, compare_systems, discover_checkpoints, read_test_set, resolve, run_eval,
    EvalConfig, SelectionMetric,
};
use simpkit_core::humaneval::{agreement, EventStore, ItemSpec, Summary};
use simpkit_core::metrics::{read_instances, score_instances, ReportFile};
use simpkit_core::promptgen::{
    batch_generate, failures_path, BatchConfig, HttpCompletionClient, PromptTemplate,
};
use simpkit_core::{jsonl, AlignedPair, BackendSpec, EvalRunResult, SentenceRecord};

use crate::args::{CorpusCommand, EvalCommand, GenerateArgs, HumanevalCommand, MetricsCommand};
use crate::config::ToolConfig;
use crate::error::CliError;

type CliResult = Result<(), CliError>;

/// Annotation log name under `data_dir`.
pub const ANNOTATION_LOG: &str = "annotations.jsonl";

fn print_json<T: Serialize>(value: &T) -> CliResult {
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, value).map_err(std::io::Error::from)?;
    writeln!(stdout)?;
    Ok(())
}

/// Writes JSON to `out`, or to stdout.
fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> CliResult {
    match out {
        Some(path) => Ok(jsonl::write_json(path, value)?),
        None => print_json(value),
    }
}

fn emit_text(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(path) => Ok(jsonl::write_atomic(path, text.as_bytes())?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn extension(path: &Path) -> Option<&str> {
    path.extension().and_then(|e| e.to_str())
}

pub fn corpus(cmd: CorpusCommand, config: &ToolConfig) -> CliResult {
    match cmd {
        CorpusCommand::Segment { input, out, abbrev } => {
            let mut rules = SegmentationRules::estonian();
            if let Some(path) = abbrev {
                rules = rules.merge(SegmentationRules::from_file(&path)?);
            }
            let articles = read_articles(&input)?;
            let records = segment_articles(&articles, &rules);
            jsonl::write_records(&out, &records)?;
            eprintln!(
                "{} sentence(s) from {} article(s)",
                records.len(),
                articles.len()
            );
        }
        CorpusCommand::Filter {
            input,
            out,
            min_words,
        } => {
            let min_words = min_words.or(config.min_words).unwrap_or(DEFAULT_MIN_WORDS);
            let records: Vec<SentenceRecord> = jsonl::read_records(&input)?;
            let kept = filter_candidates(&records, min_words);
            match &out {
                Some(path) => jsonl::write_records(path, &kept)?,
                None => print!("{}", jsonl::to_lines(&kept)),
            }
            eprintln!(
                "kept {} of {} sentence(s) with at least {min_words} words",
                kept.len(),
                records.len()
            );
        }
        CorpusCommand::Build {
            sources,
            out,
            manifest,
        } => {
            let sources: Vec<PairSource> = sources
                .iter()
                .map(|s| s.parse())
                .collect::<Result<_, _>>()?;
            let built = build_dataset(&sources, &out)?;
            emit_json(manifest.as_deref(), &built)?;
            eprintln!("{} pair(s) written to {}", built.total, out.display());
        }
        CorpusCommand::Split {
            input,
            out,
            seed,
            ratios,
            gold,
        } => {
            let seed = seed.or(config.seed).unwrap_or(0);
            let ratios: SplitRatios = ratios.parse()?;
            let pairs: Vec<AlignedPair> = jsonl::read_records(&input)?;
            let gold_ids = match &gold {
                Some(path) => read_ids(path)?,
                None => Vec::new(),
            };
            let (splits, manifest) = split_dataset(&pairs, seed, ratios, &gold_ids)?;
            std::fs::create_dir_all(&out)
                .map_err(|e| CliError::Config(format!("{}: {e}", out.display())))?;
            splits.write(&out)?;
            jsonl::write_json(&out.join("manifest.json"), &manifest)?;
            print_json(&manifest)?;
        }
    }
    Ok(())
}

/// One id per line, or JSONL records carrying an `id` field.
fn read_ids(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut ids = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('{') {
            let value: Value = serde_json::from_str(line)
                .map_err(|e| CliError::Config(format!("{}:{}: {e}", path.display(), n + 1)))?;
            let id = value["id"].as_str().ok_or_else(|| {
                CliError::Config(format!(
                    "{}:{}: record has no string `id`",
                    path.display(),
                    n + 1
                ))
            })?;
            ids.push(id.to_string());
        } else {
            ids.push(line.to_string());
        }
    }
    Ok(ids)
}

pub fn generate(args: GenerateArgs, config: &ToolConfig) -> CliResult {
    let stages: Vec<PromptTemplate> = args
        .templates
        .iter()
        .map(|p| PromptTemplate::load(&config.template_path(p)))
        .collect::<Result<_, _>>()?;
    let sentences: Vec<SentenceRecord> = jsonl::read_records(&args.input)?;
    let client = HttpCompletionClient::from_config(&config.endpoint())?;
    let batch = BatchConfig {
        workers: config.workers(args.workers)?,
        rps: config.rps(args.rps)?,
        params: config.params(),
        retry: config.retry(),
    };
    let summary = batch_generate(&sentences, &stages, &client, &batch, &args.out)?;
    print_json(&summary)?;
    if summary.failed > 0 {
        return Err(CliError::Incomplete(format!(
            "{} sentence(s) failed; details in {}",
            summary.failed,
            failures_path(&args.out).display()
        )));
    }
    Ok(())
}

pub fn metrics(cmd: MetricsCommand, config: &ToolConfig) -> CliResult {
    let MetricsCommand::Score {
        instances,
        out,
        lang,
    } = cmd;
    let language = config.language(lang.as_deref())?;
    let instances = read_instances(&instances)?;
    let report = score_instances(&instances, language)?;
    eprintln!("{}", report.summary());
    emit_json(out.as_deref(), &ReportFile::new(report, language))
}

pub fn eval(cmd: EvalCommand, config: &ToolConfig) -> CliResult {
    match cmd {
        EvalCommand::Run {
            backend,
            test,
            out,
            system,
            lang,
            no_timestamp,
        } => {
            let spec: BackendSpec = backend.parse()?;
            let items = read_test_set(&test)?;
            let simplifier = resolve(&spec, &config.backend_options()?)?;
            let label = spec.to_string();
            let run_config = EvalConfig {
                system_name: system.unwrap_or_else(|| label.clone()),
                backend_label: label,
                language: config.language(lang.as_deref())?,
                timestamp: !no_timestamp,
            };
            let result = run_eval(simplifier.as_ref(), &items, &run_config)?;
            eprintln!("{}: {}", result.system_name, result.report.summary());
            emit_json(out.as_deref(), &result)
        }
        EvalCommand::Sweep {
            checkpoints,
            test,
            metric,
            out,
            lang,
        } => {
            let metric: SelectionMetric = metric.parse()?;
            let found = discover_checkpoints(&checkpoints)?;
            let items = read_test_set(&test)?;
            let sweep =
                checkpoint_sweep(&found, &items, metric, config.language(lang.as_deref())?)?;
            for r in &sweep.ranking {
                eprintln!(
                    "{:>3}. {}  BLEU {:.2}  SARI {:.2}  FKGL {:.2}",
                    r.rank, r.name, r.bleu, r.sari, r.fkgl
                );
            }
            eprintln!("best by {metric}: {}", sweep.best);
            emit_json(out.as_deref(), &sweep)
        }
        EvalCommand::Compare { runs, out } => {
            let results: Vec<EvalRunResult> = runs
                .iter()
                .map(|p| EvalRunResult::load(p))
                .collect::<Result<_, _>>()?;
            let table = compare_systems(&results)?;
            match out.as_deref() {
                Some(path) if extension(path) == Some("csv") => {
                    emit_text(out.as_deref(), &table.to_csv())
                }
                Some(path) if extension(path) == Some("json") => emit_json(Some(path), &table),
                _ => emit_text(out.as_deref(), &table.to_markdown()),
            }
        }
    }
}

/// Opens an existing log; unlike serving, offline views never create one.
fn open_existing(path: &Path) -> Result<EventStore, CliError> {
    if !path.is_file() {
        return Err(CliError::Config(format!(
            "{}: annotation log not found",
            path.display()
        )));
    }
    Ok(EventStore::open(path)?)
}

pub fn humaneval(cmd: HumanevalCommand, config: &ToolConfig) -> CliResult {
    match cmd {
        HumanevalCommand::Summary { data, out } => {
            let store = open_existing(&config.data_path(data.as_deref(), ANNOTATION_LOG)?)?;
            let summary = Summary::of(&store.snapshot());
            if !summary.systems_without_consensus.is_empty() {
                eprintln!(
                    "no consensus yet for: {}",
                    summary.systems_without_consensus.join(", ")
                );
            }
            match out.as_deref() {
                Some(path) if extension(path) == Some("json") => emit_json(Some(path), &summary),
                _ => emit_text(out.as_deref(), &summary.to_markdown()),
            }
        }
        HumanevalCommand::Agreement { data } => {
            let store = open_existing(&config.data_path(data.as_deref(), ANNOTATION_LOG)?)?;
            print_json(&agreement(&store.snapshot()))
        }
        HumanevalCommand::Assign {
            data,
            items,
            annotators,
        } => {
            let specs: Vec<ItemSpec> = jsonl::read_records(&items)?;
            let store = EventStore::open(&config.data_path(data.as_deref(), ANNOTATION_LOG)?)?;
            let tasks = store
                .assign_items(&specs, &annotators)
                .map_err(simpkit_core::Error::from)?;
            eprintln!(
                "{} item(s), {} assignment(s) across {} annotator(s)",
                specs.len(),
                tasks,
                annotators.len()
            );
            Ok(())
        }
    }
}
