use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use xmldiv::corpus::{parse_corpus, IndexConfig};
use xmldiv::diversify::{DiversifyParams, TopK};
use xmldiv::error::QueryError;
use xmldiv::features::top_features;
use xmldiv::index::build_index;
use xmldiv::report::{run_search, Algorithm, FeatureReport, RunInfo, SearchReport};
use xmldiv::store::{load_index, save_index};
use xmldiv::text::{query_terms, tokenize};

#[derive(Parser)]
#[command(
    name = "xmldiv",
    version,
    about = "Diversified keyword search over XML corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an XML corpus and write an index directory.
    Index {
        #[arg(long)]
        input: PathBuf,
        /// Element label treated as an entity; repeatable.
        #[arg(long = "entity", required = true)]
        entities: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Maximum token distance for co-occurrence.
        #[arg(long, default_value_t = IndexConfig::DEFAULT_WINDOW)]
        window: usize,
        /// Whitespace-separated stopword list replacing the built-in one.
        #[arg(long)]
        stopwords: Option<PathBuf>,
    },
    /// Print the top feature terms of a keyword.
    Features {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        term: String,
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Run a diversified search.
    Search {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 20)]
        m: usize,
        #[arg(long, value_enum, default_value_t = Algo::Baseline)]
        algo: Algo,
        #[arg(long, default_value_t = 4)]
        workers: usize,
        /// Evaluate at most this many intents.
        #[arg(long)]
        budget: Option<usize>,
        /// Include workers, work counters and elapsed time in the report.
        #[arg(long)]
        stats: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Baseline,
    Anchor,
    Parallel,
}

impl From<Algo> for Algorithm {
    fn from(a: Algo) -> Self {
        match a {
            Algo::Baseline => Algorithm::Baseline,
            Algo::Anchor => Algorithm::Anchor,
            Algo::Parallel => Algorithm::Parallel,
        }
    }
}

enum Failure {
    Usage(String),
    Data(String),
}

fn data<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Data(e.to_string())
}

fn read(path: &PathBuf) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn cmd_index(
    input: PathBuf,
    entities: Vec<String>,
    out: PathBuf,
    window: usize,
    stopwords: Option<PathBuf>,
) -> Result<(), Failure> {
    let mut config = IndexConfig::new(entities).with_window(window);
    if let Some(path) = stopwords {
        let text = String::from_utf8_lossy(&read(&path)?).into_owned();
        config = config.with_stopwords(tokenize(&text));
    }
    config
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let xml = read(&input)?;
    let corpus = parse_corpus(&xml, &config).map_err(data)?;
    let index = build_index(&corpus, &config).map_err(data)?;
    save_index(&index, &out).map_err(data)?;
    println!(
        "entities: {}\nterms: {}\ntriplets: {}",
        index.entity_count(),
        index.term_count(),
        index.cooccurrences().len()
    );
    Ok(())
}

fn cmd_features(index: PathBuf, term: String, top: usize, format: Format) -> Result<(), Failure> {
    if top == 0 {
        return Err(Failure::Usage("--top must be at least 1".into()));
    }
    let index = load_index(&index).map_err(data)?;
    let term = term.to_lowercase();
    let report = FeatureReport::new(&term, &top_features(&term, top, &index));
    match format {
        Format::Json => print!("{}", report.to_json()),
        Format::Csv => print!("{}", report.to_csv()),
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_search(
    index: PathBuf,
    query: String,
    k: usize,
    m: usize,
    algo: Algo,
    workers: usize,
    budget: Option<usize>,
    stats: bool,
    format: Format,
) -> Result<(), Failure> {
    let keywords = query_terms(&query);
    if keywords.is_empty() {
        return Err(Failure::Usage("--query has no keywords".into()));
    }
    let params = DiversifyParams::new(k, m).with_budget(budget);
    params
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    if workers == 0 {
        return Err(Failure::Usage("--workers must be at least 1".into()));
    }
    let index = load_index(&index).map_err(data)?;
    let algo = Algorithm::from(algo);
    let start = Instant::now();
    let (top, eval_stats) = match run_search(&keywords, params, &index, algo, workers) {
        Ok(r) => r,
        Err(QueryError::NoIntent) => (TopK::empty(k), Default::default()),
        Err(e @ (QueryError::EmptyQuery | QueryError::InvalidParameter(_))) => {
            return Err(Failure::Usage(e.to_string()))
        }
    };
    let run = stats.then(|| RunInfo {
        workers,
        stats: eval_stats,
        elapsed_ms: start.elapsed().as_millis() as u64,
    });
    let report = SearchReport::new(&keywords, params, algo, &top, run);
    match format {
        Format::Json => print!("{}", report.to_json()),
        Format::Csv => print!("{}", report.to_csv()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Index {
            input,
            entities,
            out,
            window,
            stopwords,
        } => cmd_index(input, entities, out, window, stopwords),
        Command::Features {
            index,
            term,
            top,
            format,
        } => cmd_features(index, term, top, format),
        Command::Search {
            index,
            query,
            k,
            m,
            algo,
            workers,
            budget,
            stats,
            format,
        } => cmd_search(index, query, k, m, algo, workers, budget, stats, format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
