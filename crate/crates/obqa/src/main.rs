use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use obqa::artifacts::{build_index_parallel, load_index, save_checkpoint, save_index};
use obqa::eval::{evaluate_e2e, evaluate_retriever, DEFAULT_KS};
use obqa::ingest::{ingest_corpus, IngestError};
use obqa::pipeline::{Pipeline, PipelineConfig, PipelineError};
use obqa::qa_eval::load_qa_eval;
use obqa::squad::{load_squad, SquadVersion};
use obqa::synth_io::write_fixture;
use obqa::training::label_examples;
use obqa_core::extractor::{train, TrainConfig};
use obqa_core::synth::synth_generate;
use obqa_core::{Bm25Params, CorpusStore, EncoderConfig, WindowConfig};

#[derive(Parser)]
#[command(name = "obqa", version, about = "Open-book question answering over a document directory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a BM25 index over a directory of text files.
    Index {
        corpus_root: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Train an extractor checkpoint.
    Train(TrainArgs),
    /// Rank documents for a query (JSON to stdout).
    Retrieve {
        index: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(short, default_value_t = 5)]
        k: usize,
    },
    /// Answer one question (JSON to stdout).
    Answer {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        question: String,
    },
    /// Strict P@K and hit@K of the configured retriever.
    EvalRetriever {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        qa: PathBuf,
        /// Comma-separated K values.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_KS.to_vec())]
        ks: Vec<usize>,
        /// Also write the table as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Answer every question in a QA file and write a scored report.
    EvalE2e {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        qa: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_KS.to_vec())]
        ks: Vec<usize>,
    },
    /// Write a seeded synthetic corpus with planted facts and questions.
    GenSynth {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        docs: usize,
        #[arg(long)]
        questions: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// SQuAD JSON file (omit when using --qa with --corpus).
    squad_json: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
    /// SQuAD version: v1.1 or v2.0.
    #[arg(long, default_value = "v1.1")]
    version: SquadVersion,
    /// JSON-lines QA file whose doc_ids resolve against --corpus.
    #[arg(long, requires = "corpus", conflicts_with = "squad_json")]
    qa: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    epochs: usize,
    #[arg(long, default_value_t = 8)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0.01)]
    weight_decay: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value_t = 16)]
    hidden: usize,
    #[arg(long, default_value_t = 2)]
    heads: usize,
    #[arg(long, default_value_t = 32)]
    ffn_dim: usize,
    #[arg(long, default_value_t = 512)]
    vocab_size: usize,
    /// Encoder input limit in window tokens.
    #[arg(long, default_value_t = 32)]
    max_window_len: usize,
    #[arg(long, default_value_t = 16)]
    max_question_len: usize,
    /// Labeling stride (defaults to half the window).
    #[arg(long)]
    stride: Option<usize>,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl Failure {
    fn from_pipeline(e: PipelineError) -> Self {
        if e.is_config() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }

    fn from_ingest(e: IngestError) -> Self {
        match e {
            IngestError::Corpus(_) => Failure::Data(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Data(e.to_string())
}

fn json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map_err(data)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Failure::Usage(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn run_train(a: TrainArgs) -> Result<(), Failure> {
    let encoder = EncoderConfig {
        layers: a.layers,
        hidden: a.hidden,
        heads: a.heads,
        ffn_dim: a.ffn_dim,
        vocab_hash_size: a.vocab_size,
        max_window_len: a.max_window_len,
        max_question_len: a.max_question_len,
        seed: a.seed,
    };
    encoder.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let windowing =
        WindowConfig { max_window_len: a.max_window_len, stride: a.stride.unwrap_or((a.max_window_len / 2).max(1)) };
    let (examples, corpus) = match (&a.squad_json, &a.qa, &a.corpus) {
        (Some(path), None, _) => {
            (load_squad(path, a.version).map_err(data)?, CorpusStore::new(Vec::new()).map_err(data)?)
        }
        (None, Some(qa), Some(root)) => {
            let corpus = ingest_corpus(root).map_err(Failure::from_ingest)?.corpus;
            (load_qa_eval(qa).map_err(data)?, corpus)
        }
        _ => return Err(Failure::Usage("give a SQuAD file, or --qa together with --corpus".into())),
    };
    let labeled = label_examples(&examples, &corpus, &windowing).map_err(|e| Failure::Usage(e.to_string()))?;
    log::info!("{} examples → {} windows ({} skipped)", examples.len(), labeled.windows.len(), labeled.skipped.len());
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        weight_decay: a.weight_decay,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let out = train(&labeled.windows, encoder, &cfg, |epoch, loss| log::info!("epoch {epoch}: loss {loss:.6}"))
        .map_err(data)?;
    save_checkpoint(&a.output, &out.params).map_err(|e| Failure::Usage(e.to_string()))?;
    println!("{}", json(&serde_json::json!({ "checkpoint": a.output, "loss_history": out.loss_history }))?);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Index { corpus_root, output } => {
            let ingest = ingest_corpus(&corpus_root).map_err(Failure::from_ingest)?;
            let index = build_index_parallel(&ingest.corpus, Bm25Params::default()).map_err(data)?;
            save_index(&output, &index).map_err(|e| Failure::Usage(e.to_string()))?;
            let summary = serde_json::json!({
                "documents": index.num_docs(),
                "terms": index.num_terms(),
                "skipped": ingest.skipped,
            });
            println!("{}", json(&summary)?);
        }
        Command::Train(args) => run_train(args)?,
        Command::Retrieve { index, query, k } => {
            if k == 0 {
                return Err(Failure::Usage("-k must be at least 1".into()));
            }
            let index = load_index(&index).map_err(data)?;
            println!("{}", json(&index.retrieve(&query, k).map_err(data)?)?);
        }
        Command::Answer { config, question } => {
            let cfg = PipelineConfig::load(&config).map_err(Failure::from_pipeline)?;
            let pipeline = Pipeline::from_config(cfg).map_err(Failure::from_pipeline)?;
            println!("{}", json(&pipeline.answer(&question).map_err(Failure::from_pipeline)?)?);
        }
        Command::EvalRetriever { config, qa, ks, json: out } => {
            let cfg = PipelineConfig::load(&config).map_err(Failure::from_pipeline)?;
            let pipeline = Pipeline::from_config(cfg).map_err(Failure::from_pipeline)?;
            let dataset = load_qa_eval(&qa).map_err(data)?;
            let table = evaluate_retriever(&dataset, pipeline.retriever(), &ks).map_err(data)?;
            print!("{}", table.to_table());
            if let Some(path) = out {
                write_file(&path, &json(&table)?)?;
            }
        }
        Command::EvalE2e { config, qa, output, ks } => {
            let cfg = PipelineConfig::load(&config).map_err(Failure::from_pipeline)?;
            let snapshot = serde_json::to_value(&cfg).map_err(data)?;
            let pipeline = Pipeline::from_config(cfg).map_err(Failure::from_pipeline)?;
            let dataset = load_qa_eval(&qa).map_err(data)?;
            let report = evaluate_e2e(&dataset, &pipeline, Some(pipeline.retriever()), &ks, snapshot).map_err(data)?;
            write_file(&output, &report.to_json())?;
            let e = pipeline.params().config();
            let hyper = format!("L={}, H={}, A={}, window={}", e.layers, e.hidden, e.heads, e.max_window_len);
            print!("{}", report.to_text(&config.display().to_string(), &hyper));
        }
        Command::GenSynth { seed, docs, questions, output } => {
            if docs == 0 || questions == 0 {
                return Err(Failure::Usage("--docs and --questions must be at least 1".into()));
            }
            let fixture = synth_generate(seed, docs, questions);
            let paths = write_fixture(&output, &fixture).map_err(|e| Failure::Usage(e.to_string()))?;
            let summary = serde_json::json!({
                "corpus_root": paths.corpus_root,
                "questions": paths.questions,
                "train": paths.train,
                "documents": fixture.corpus.len(),
                "evaluation_questions": fixture.questions.len(),
                "training_questions": fixture.training.len(),
            });
            println!("{}", json(&summary)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
