use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "simpkit", version, about = "Sentence simplification toolkit")]
pub struct Cli {
    /// Configuration file; defaults to `simpkit.toml` in the working directory if present.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sentence extraction and dataset assembly.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Produce silver pairs with a chain of prompt templates.
    Generate(GenerateArgs),
    /// Automatic metrics.
    #[command(subcommand)]
    Metrics(MetricsCommand),
    /// Run, sweep and compare systems on a test set.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Offline views of an annotation log.
    #[command(subcommand)]
    Humaneval(HumanevalCommand),
    /// Serve the annotation API.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
pub enum CorpusCommand {
    /// Split articles into sentence records.
    Segment {
        /// Plain-text article, or JSONL of {id, text} articles.
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Abbreviations, one per line, added to the built-in list.
        #[arg(long, value_name = "PATH")]
        abbrev: Option<PathBuf>,
    },
    /// Keep sentences with at least `--min-words` words.
    Filter {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long, value_name = "N")]
        min_words: Option<usize>,
    },
    /// Merge pair files into one dataset.
    Build {
        /// `<path>:<origin>`, where origin is turk, wiki2, llm_v1, llm_agents, manual or llm.
        #[arg(long = "source", value_name = "PATH:ORIGIN", required = true)]
        sources: Vec<String>,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Where to write the manifest; printed to stdout if absent.
        #[arg(long, value_name = "PATH")]
        manifest: Option<PathBuf>,
    },
    /// Partition a dataset into train/dev/test plus a gold holdout.
    Split {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Output directory for the split files and manifest.json.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_name = "TRAIN,DEV,TEST", default_value = "0.8,0.1,0.1")]
        ratios: String,
        /// Gold ids: one per line, or JSONL records with an `id` field.
        #[arg(long, value_name = "PATH")]
        gold: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Sentence records (JSONL).
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Stage templates in order. A path, or `builtin:<name>`.
    #[arg(long = "template", value_name = "PATH", required = true)]
    pub templates: Vec<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Requests per second across all workers.
    #[arg(long)]
    pub rps: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum MetricsCommand {
    /// Score {id, input, output, references} instances.
    Score {
        #[arg(long, value_name = "PATH")]
        instances: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long)]
        lang: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Run one backend over a test set.
    Run {
        /// identity | file:<path> | http:<url> | cmd:"<argv>"
        #[arg(long)]
        backend: String,
        #[arg(long, value_name = "PATH")]
        test: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// System name recorded in the result; defaults to the backend label.
        #[arg(long)]
        system: Option<String>,
        #[arg(long)]
        lang: Option<String>,
        /// Leave out the generation time so reruns are byte-identical.
        #[arg(long)]
        no_timestamp: bool,
    },
    /// Rank checkpoint output files by a metric.
    Sweep {
        /// Directory of `<checkpoint>.jsonl` files with {id, output} lines.
        #[arg(long, value_name = "DIR")]
        checkpoints: PathBuf,
        #[arg(long, value_name = "PATH")]
        test: PathBuf,
        #[arg(long, default_value = "sari")]
        metric: String,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long)]
        lang: Option<String>,
    },
    /// Tabulate runs scored on the same test set.
    Compare {
        #[arg(long, value_name = "PATH", num_args = 2.., required = true)]
        runs: Vec<PathBuf>,
        /// `.md`, `.csv` or `.json`; markdown on stdout if absent.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum HumanevalCommand {
    /// Per-system consensus means.
    Summary {
        #[arg(long, value_name = "PATH")]
        data: Option<PathBuf>,
        /// `.json` or `.md`; markdown on stdout if absent.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Agreement rates and open disagreements as JSON.
    Agreement {
        #[arg(long, value_name = "PATH")]
        data: Option<PathBuf>,
    },
    /// Add items and assign them to annotators.
    Assign {
        #[arg(long, value_name = "PATH")]
        data: Option<PathBuf>,
        /// JSONL of {item_id, system_name, source, output}.
        #[arg(long, value_name = "PATH")]
        items: PathBuf,
        #[arg(long = "annotator", value_name = "ID", required = true)]
        annotators: Vec<String>,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Static UI assets served under `/`.
    #[arg(long, value_name = "DIR")]
    pub assets: Option<PathBuf>,
}
