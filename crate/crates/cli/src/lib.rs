//! Command-line front end and HTTP prediction service.

mod service;

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use refdoc::baseline::KeywordRules;
use refdoc::classifiers::{Algorithm, ModelConfig};
use refdoc::corpus::{class_distribution, load_corpus, stratified_sample, CorpusFormat, Dataset, RefactoringType};
use refdoc::evaluation::{cross_validate, evaluate_baseline};
use refdoc::inconsistency::inconsistency_report;
use refdoc::pipeline::{fit, predict_message, ModelFile};
use refdoc::synth::{self, SynthConfig};
use refdoc::terms::{frequent_ngrams, match_patterns, PatternCatalog};

pub use service::{predict_response, router, PredictRequest, PredictResponse, MAX_MESSAGE_BYTES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Environment variable naming the default model file.
pub const MODEL_ENV: &str = "REFDOC_MODEL";

#[derive(Debug, Parser)]
#[command(name = "refdoc", version, about = "Classify the refactoring documented in commit messages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a corpus and print its class distribution
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        /// Write the records back out as canonical JSONL
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Draw a class-balanced sample
    Sample {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        per_class: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train a model and write it to a model file
    Train {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        output: PathBuf,
        /// Record the creation time (SOURCE_DATE_EPOCH if set, else now)
        #[arg(long)]
        timestamp: bool,
    },
    /// Stratified k-fold cross-validation
    Evaluate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        /// Seed for the fold assignment (defaults to --seed)
        #[arg(long)]
        fold_seed: Option<u64>,
        /// Write the JSON report here
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Predict the refactoring type of one message (argument or stdin)
    Predict {
        #[arg(long, env = MODEL_ENV)]
        model: PathBuf,
        message: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Keyword baseline: one message, or metrics over a corpus
    Baseline {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, conflicts_with = "input")]
        message: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Frequent n-grams per class, or catalog matches for one message
    Terms {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        class: Option<RefactoringType>,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=3))]
        n: u8,
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[arg(long, conflicts_with_all = ["input", "class"])]
        message: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Compare detector labels with message-based predictions
    Inconsistency {
        #[arg(long, env = MODEL_ENV)]
        model: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        json: bool,
    },
    /// Serve predictions over HTTP
    Serve {
        #[arg(long, env = MODEL_ENV)]
        model: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Generate a synthetic corpus from the pattern catalog
    Synth {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 100)]
        per_class: usize,
        #[arg(long, default_value_t = synth::BUNDLED_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 0.3)]
        distractor_rate: f64,
        #[arg(long)]
        include_none: bool,
        /// Emit detector-labeled records instead
        #[arg(long, conflicts_with_all = ["include_none", "distractor_rate"])]
        detector: bool,
    },
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Corpus file (JSONL or CSV); the bundled synthetic corpus when omitted
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    format: Option<CorpusFormat>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, default_value = "gbt")]
    algo: Algorithm,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=3))]
    ngram: u8,
    #[arg(long, default_value_t = 5000)]
    features: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Train with the None class
    #[arg(long)]
    include_none: bool,
    /// Hyperparameter override, NAME=VALUE; repeatable
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let value: f64 = value.parse().map_err(|e| format!("bad value for {name}: {e}"))?;
    Ok((name.trim().to_string(), value))
}

impl ModelArgs {
    fn config(&self) -> ModelConfig {
        let mut cfg = ModelConfig::new(self.algo)
            .with_pipeline(usize::from(self.ngram), self.features)
            .with_seed(self.seed)
            .with_include_none(self.include_none);
        for (name, value) in &self.params {
            cfg = cfg.with_hyperparameter(name, *value);
        }
        cfg
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl From<refdoc::Error> for Failure {
    fn from(e: refdoc::Error) -> Self {
        match e {
            refdoc::Error::InvalidConfig(m) => Failure::Usage(m),
            other => Failure::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

/// Standard streams, swappable for tests.
pub struct Io<'a> {
    pub stdin: &'a mut dyn Read,
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
}

/// Runs the CLI on the process streams and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let mut stdin = std::io::stdin().lock();
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    run_with(
        args,
        Io {
            stdin: &mut stdin,
            stdout: &mut stdout,
            stderr: &mut stderr,
        },
    )
}

pub fn run_with<I, T>(args: I, io: Io<'_>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = io.stdout.write_all(rendered.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = io.stderr.write_all(rendered.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli.command, io.stdin, io.stdout, io.stderr) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(io.stderr, "error: {m}");
            let _ = writeln!(io.stderr, "run `refdoc --help` for usage");
            EXIT_USAGE
        }
        Err(Failure::Data(m)) => {
            let _ = writeln!(io.stderr, "error: {m}");
            EXIT_DATA
        }
    }
}

fn load_input(input: &InputArgs, with_none: bool) -> CliResult<Dataset> {
    match &input.input {
        Some(path) => {
            let format = input.format.unwrap_or_else(|| CorpusFormat::from_path(path));
            Ok(load_corpus(path, format)?)
        }
        None if with_none => Ok(synth::bundled_synthetic_with_none()?),
        None => Ok(synth::bundled_synthetic()?),
    }
}

/// Drops `None` records unless the model is meant to learn that class.
fn training_view(d: Dataset, include_none: bool, stderr: &mut dyn Write) -> CliResult<Dataset> {
    if include_none {
        if !d.class_counts().contains_key(&RefactoringType::None) {
            return Err(Failure::Data("--include-none needs records labeled None in the corpus".into()));
        }
        return Ok(d);
    }
    let keep: Vec<usize> = d
        .records()
        .iter()
        .enumerate()
        .filter(|(_, r)| r.label != Some(RefactoringType::None))
        .map(|(i, _)| i)
        .collect();
    if keep.len() < d.len() {
        writeln!(stderr, "note: ignoring {} None-labeled records (pass --include-none to train on them)", d.len() - keep.len())?;
        return Ok(d.select(&keep));
    }
    Ok(d)
}

fn timestamp() -> String {
    if let Ok(epoch) = std::env::var("SOURCE_DATE_EPOCH") {
        return epoch;
    }
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    secs.to_string()
}

fn read_message(message: Option<String>, stdin: &mut dyn Read) -> CliResult<String> {
    let message = match message {
        Some(m) => m,
        None => {
            let mut s = String::new();
            stdin.read_to_string(&mut s)?;
            s.trim_end_matches(['\n', '\r']).to_string()
        }
    };
    if message.trim().is_empty() {
        return Err(Failure::Usage("message is empty".into()));
    }
    Ok(message)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CliResult {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))
}

fn execute(command: Command, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    match command {
        Command::Ingest { input, output } => {
            let d = load_input(&input, true)?;
            writeln!(out, "{} records, fingerprint {}", d.len(), d.fingerprint())?;
            for (class, n) in class_distribution(&d) {
                writeln!(out, "{:<16} {n:>6}", class.name())?;
            }
            let unlabeled = d.records().iter().filter(|r| r.label.is_none()).count();
            if unlabeled > 0 {
                writeln!(out, "{:<16} {unlabeled:>6}", "(unlabeled)")?;
            }
            if let Some(path) = output {
                d.save_jsonl(&path)?;
            }
        }
        Command::Sample {
            input,
            per_class,
            seed,
            output,
        } => {
            let d = load_input(&input, true)?;
            let s = stratified_sample(&d, per_class, seed)?;
            s.save_jsonl(&output)?;
            writeln!(out, "wrote {} records to {} (seed {seed}, {})", s.len(), output.display(), refdoc::corpus::RNG_ALGORITHM)?;
        }
        Command::Train {
            input,
            model,
            output,
            timestamp: stamp,
        } => {
            let config = model.config();
            let d = training_view(load_input(&input, config.include_none)?, config.include_none, err)?;
            let trained = fit(&d, &config)?;
            let file = ModelFile::new(trained, &d, stamp.then(timestamp));
            file.save(&output)?;
            writeln!(
                out,
                "trained {} on {} records ({} classes, {} features) -> {}",
                config.algorithm,
                d.len(),
                file.model.class_order.len(),
                file.model.vocab.selected().len(),
                output.display()
            )?;
        }
        Command::Evaluate {
            input,
            model,
            folds,
            fold_seed,
            report,
        } => {
            let config = model.config();
            let d = training_view(load_input(&input, config.include_none)?, config.include_none, err)?;
            // validate overrides before spending time on folds
            config.resolved_hyperparameters()?;
            let r = cross_validate(&d, &config, folds, fold_seed.unwrap_or(config.pipeline.seed))?;
            out.write_all(r.render_table().as_bytes())?;
            if let Some(path) = report {
                write_json(&path, &r)?;
            }
        }
        Command::Predict { model, message, json } => {
            let file = ModelFile::load(&model)?;
            let message = read_message(message, stdin)?;
            if json {
                let response = predict_response(&file, &message);
                writeln!(out, "{}", serde_json::to_string(&response)?)?;
            } else {
                let scores = predict_message(&file.model, &message);
                writeln!(out, "{}", scores.label())?;
                for (class, score) in scores.scores() {
                    writeln!(out, "  {:<16} {score:.4}", class.name())?;
                }
            }
        }
        Command::Baseline { input, message, json } => {
            let rules = KeywordRules::bundled();
            if let Some(message) = message {
                let verdict = rules.predict(&message);
                if json {
                    writeln!(out, "{}", serde_json::to_string(&verdict)?)?;
                } else {
                    let label = verdict.label.map_or("(no match)", RefactoringType::name);
                    writeln!(out, "{label}")?;
                }
            } else {
                let d = load_input(&input, false)?;
                let summary = evaluate_baseline(&d, rules)?;
                if json {
                    writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?;
                } else {
                    out.write_all(summary.render_table("Keyword baseline").as_bytes())?;
                }
            }
        }
        Command::Terms {
            input,
            class,
            n,
            top,
            message,
            json,
        } => {
            if let Some(message) = message {
                let hits = match_patterns(&message, PatternCatalog::bundled());
                if json {
                    writeln!(out, "{}", serde_json::to_string(&hits)?)?;
                } else {
                    for (class, patterns) in &hits {
                        writeln!(out, "{}: {}", class.name(), patterns.join(" | "))?;
                    }
                }
                return Ok(());
            }
            let d = load_input(&input, true)?;
            let classes: Vec<RefactoringType> = match class {
                Some(c) => vec![c],
                None => RefactoringType::ALL
                    .into_iter()
                    .filter(|c| d.class_counts().contains_key(c))
                    .collect(),
            };
            let mut tables = BTreeMap::new();
            for c in classes {
                tables.insert(c, frequent_ngrams(&d, c, usize::from(n), top)?);
            }
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&tables)?)?;
            } else {
                for c in RefactoringType::ALL {
                    let Some(t) = tables.get(&c) else { continue };
                    writeln!(out, "{} ({} documents)", c.display_name(), t.documents)?;
                    for row in &t.rows {
                        writeln!(out, "  {:>5}  {}", row.frequency, row.ngram)?;
                    }
                }
            }
        }
        Command::Inconsistency { model, input, json } => {
            let file = ModelFile::load(&model)?;
            let d = match &input.input {
                Some(_) => load_input(&input, true)?,
                None => synth::bundled_detector_corpus()?,
            };
            let r = inconsistency_report(&d, &file.model)?;
            if json {
                writeln!(out, "{}", r.to_json()?)?;
            } else {
                out.write_all(r.render_table().as_bytes())?;
            }
        }
        Command::Serve { model, port, host } => {
            let file = ModelFile::load(&model)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port)).await?;
                writeln!(err, "listening on http://{}", listener.local_addr()?)?;
                axum::serve(listener, router(file)).await
            })?;
        }
        Command::Synth {
            output,
            per_class,
            seed,
            distractor_rate,
            include_none,
            detector,
        } => {
            if !(0.0..=1.0).contains(&distractor_rate) {
                return Err(Failure::Usage("--distractor-rate must be within [0, 1]".into()));
            }
            let d = if detector {
                synth::synthetic_detector_corpus(per_class, seed)
            } else {
                synth::synthetic_corpus(&SynthConfig {
                    per_class,
                    distractor_rate,
                    seed,
                    include_none,
                })
            };
            d.save_jsonl(&output)?;
            writeln!(out, "wrote {} records to {}", d.len(), output.display())?;
        }
    }
    Ok(())
}
