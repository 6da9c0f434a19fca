use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pardep::conll::{self, Entry, Mode};
use pardep::model_io::{sidecar_path, ModelFile, Sidecar, TrainSettings, FORMAT_VERSION};
use pardep::pipeline::{self, PlanFile, ReportFormat};
use pardep::{synth, Failure};
use pardep_core::corpus::{DepTree, EvalResult, PartialTree, PunctSet, Sentence};
use pardep_core::features::{FeatureConfig, FeatureExtractor, DEFAULT_DIMENSION_LOG2};
use pardep_core::sim::{self, Setting};
use pardep_core::evaluate_uas;
use pardep_core::train::{self, ParserKind, TrainConfig, TrainingInstance};
use rayon::prelude::*;

/// Dependency parsers trained from full and partial annotation.
#[derive(Parser)]
#[command(name = "pardep", version)]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    /// POS tags treated as punctuation (comma separated); defaults to the PTB set.
    #[arg(long, global = true, value_delimiter = ',')]
    punct: Option<Vec<String>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Carve a treebank into consecutive parts by sentence counts.
    Split(SplitArgs),
    /// Simulate partial annotation over a fully annotated treebank.
    Simulate(SimulateArgs),
    /// Train a parser and write a model file plus a JSON sidecar.
    Train(TrainArgs),
    /// Complete partial trees with constrained decoding.
    Complete(CompleteArgs),
    /// Parse a treebank (heads in the input are ignored unless --constrained).
    Parse(ParseArgs),
    /// Score predicted trees, or a model, against gold trees.
    Evaluate(EvaluateArgs),
    /// Run every experiment of a plan file and print a report.
    Experiment(ExperimentArgs),
    /// Write a synthetic treebank.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct SplitArgs {
    /// Fully annotated input treebank.
    input: PathBuf,
    /// `FILE=COUNT` parts in order; the last part may use `FILE=rest`.
    #[arg(long = "part", required = true)]
    parts: Vec<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    setting: Setting,
    /// Percentage of non-punctuation heads kept (random and uncertain).
    #[arg(long, default_value_t = 100.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Model files: one LLGPar model for `uncertain`, one of each parser for `divergence`.
    #[arg(long = "model")]
    models: Vec<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    parser: ParserKind,
    /// Fully annotated training data.
    #[arg(long)]
    fa: Option<PathBuf>,
    /// Partially annotated training data (`_` heads).
    #[arg(long)]
    pa: Option<PathBuf>,
    /// Development data for model selection.
    #[arg(long)]
    dev: Option<PathBuf>,
    #[arg(long)]
    model: PathBuf,
    /// TOML file with training settings; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dimension_log2: Option<u32>,
    #[arg(long)]
    beam_size: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CompleteArgs {
    #[arg(long)]
    model: PathBuf,
    /// Partially annotated treebank.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Gold trees for scoring the completed treebank.
    #[arg(long)]
    gold: Option<PathBuf>,
}

#[derive(Args)]
struct ParseArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Keep the input's annotated heads as constraints.
    #[arg(long)]
    constrained: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    gold: PathBuf,
    /// Predicted trees, aligned with the gold treebank.
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    pred: Option<PathBuf>,
    /// Parse the gold sentences with this model instead.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, default_value = "tsv")]
    format: ReportFormat,
    /// Report destination; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Synthetic {
    Trend,
    Separable,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: Synthetic,
    /// Sentences (trend) or sentences per shape (separable).
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let punct = match &cli.punct {
        Some(tags) => PunctSet::new(tags.iter().map(String::as_str)),
        None => PunctSet::ptb(),
    };
    let result = match cli.command {
        Command::Split(a) => split(a, &punct),
        Command::Simulate(a) => simulate(a, &punct),
        Command::Train(a) => train_cmd(a, &punct),
        Command::Complete(a) => complete(a, &punct),
        Command::Parse(a) => parse(a, &punct),
        Command::Evaluate(a) => evaluate(a, &punct),
        Command::Experiment(a) => experiment(a, &punct),
        Command::Generate(a) => generate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.kind.exit_code() as u8)
        }
    }
}

fn write_entries(path: &Path, entries: &[Entry]) -> Result<(), Failure> {
    let io_err = |e: std::io::Error| Failure::data(format!("{}: {e}", path.display()));
    let mut w = BufWriter::new(fs::File::create(path).map_err(io_err)?);
    conll::write_treebank(&mut w, entries).map_err(io_err)?;
    w.flush().map_err(io_err)
}

fn write_pairs(path: &Path, pairs: &[(Sentence, DepTree)]) -> Result<(), Failure> {
    let entries: Vec<Entry> = pairs.iter().map(|(s, t)| Entry::full(s.clone(), t.clone())).collect();
    write_entries(path, &entries)
}

fn load_model(path: &Path) -> Result<ModelFile, Failure> {
    ModelFile::load(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn split(a: SplitArgs, punct: &PunctSet) -> Result<(), Failure> {
    let entries = pipeline::read_entries(&a.input, Mode::Full, punct)?;
    let mut start = 0;
    for (i, part) in a.parts.iter().enumerate() {
        let (file, count) = part
            .rsplit_once('=')
            .ok_or_else(|| Failure::usage(format!("--part `{part}` is not FILE=COUNT")))?;
        let end = if count == "rest" && i + 1 == a.parts.len() {
            entries.len()
        } else {
            let c: usize = count
                .parse()
                .map_err(|_| Failure::usage(format!("--part `{part}`: bad count `{count}`")))?;
            start + c
        };
        if end > entries.len() {
            return Err(Failure::data(format!(
                "{} has {} sentences; parts need at least {end}",
                a.input.display(),
                entries.len()
            )));
        }
        write_entries(Path::new(file), &entries[start..end])?;
        start = end;
    }
    Ok(())
}

fn simulate(a: SimulateArgs, punct: &PunctSet) -> Result<(), Failure> {
    let gold = pipeline::read_gold(&a.input, punct)?;
    let models = a.models.iter().map(|p| load_model(p)).collect::<Result<Vec<_>, _>>()?;
    let training = |e: pardep_core::Error| Failure::training(e.to_string());
    let partials: Vec<PartialTree> = match a.setting {
        Setting::Random => {
            if !models.is_empty() {
                return Err(Failure::usage("the random setting takes no --model"));
            }
            sim::simulate_random(&gold, a.alpha, a.seed).map_err(|e| Failure::usage(e.to_string()))?
        }
        Setting::Uncertain => {
            let [m] = models.as_slice() else {
                return Err(Failure::usage("the uncertain setting needs exactly one --model"));
            };
            if m.kind != ParserKind::LLGPar {
                return Err(Failure::usage("the uncertain setting needs an llgpar model"));
            }
            if !(a.alpha > 0.0 && a.alpha <= 100.0) {
                return Err(Failure::usage(format!("alpha must lie in (0, 100], got {}", a.alpha)));
            }
            let extractor = FeatureExtractor::new(m.model.config().clone());
            let weights = m.model.averaged();
            let parts: Vec<Vec<PartialTree>> = gold
                .par_chunks(64)
                .map(|c| sim::simulate_uncertain(c, a.alpha, &extractor, &weights))
                .collect::<Result<_, _>>()
                .map_err(training)?;
            parts.into_iter().flatten().collect()
        }
        Setting::Divergence => {
            let mut ordered = Vec::new();
            for kind in ParserKind::ALL {
                match models.iter().filter(|m| m.kind == kind).collect::<Vec<_>>().as_slice() {
                    [m] => ordered.push(*m),
                    _ => return Err(Failure::usage("the divergence setting needs one model of each parser kind")),
                }
            }
            let sentences: Vec<&Sentence> = gold.iter().map(|(s, _)| s).collect();
            let mut predictions = Vec::new();
            for m in ordered {
                let extractor = FeatureExtractor::new(m.model.config().clone());
                let parser = train::Parser::new(m.kind, &extractor, &m.model, m.beam_size).map_err(training)?;
                predictions.push(pipeline::parse_parallel(&parser, &sentences).map_err(training)?);
            }
            sim::simulate_divergence(&gold, [&predictions[0], &predictions[1], &predictions[2]]).map_err(training)?
        }
    };
    let entries: Vec<Entry> = gold.into_iter().zip(partials).map(|((s, _), p)| Entry::partial(s, p)).collect();
    write_entries(&a.output, &entries)
}

fn train_cmd(a: TrainArgs, punct: &PunctSet) -> Result<(), Failure> {
    let mut settings = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
            toml::from_str::<TrainSettings>(&text).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?
        }
        None => TrainSettings::default(),
    };
    if let Some(v) = a.beam_size {
        settings.beam_size = v;
    }
    if let Some(v) = a.max_iterations {
        settings.max_iterations = v;
    }
    if let Some(v) = a.patience {
        settings.patience = v;
    }
    if let Some(v) = a.seed {
        settings.rng_seed = v;
    }
    let config = TrainConfig::from(&settings);
    config.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let feature_config =
        FeatureConfig::new(a.dimension_log2.unwrap_or(DEFAULT_DIMENSION_LOG2)).map_err(|e| Failure::usage(e.to_string()))?;
    if a.fa.is_none() && a.pa.is_none() {
        return Err(Failure::usage("give --fa, --pa or both"));
    }

    let data = |e: pardep_core::Error| Failure::data(e.to_string());
    let fa: Vec<TrainingInstance> = match &a.fa {
        Some(p) => pipeline::read_gold(p, punct)?
            .into_iter()
            .map(|(s, t)| TrainingInstance::full(s, t))
            .collect::<Result<_, _>>()
            .map_err(data)?,
        None => Vec::new(),
    };
    let pa: Vec<TrainingInstance> = match &a.pa {
        Some(p) => pipeline::read_entries(p, Mode::Partial, punct)?
            .into_iter()
            .map(|e| TrainingInstance::partial(e.sentence, e.annotation.constraint()))
            .collect::<Result<_, _>>()
            .map_err(data)?,
        None => Vec::new(),
    };
    let dev = match &a.dev {
        Some(p) => pipeline::read_gold(p, punct)?,
        None => Vec::new(),
    };
    let extractor = FeatureExtractor::new(feature_config.clone());
    let outcome = train::train(a.parser, &extractor, &fa, &pa, &dev, &config).map_err(|e| Failure::training(e.to_string()))?;
    let file = ModelFile {
        kind: a.parser,
        beam_size: config.beam_size,
        model: outcome.model,
    };
    file.save(&a.model).map_err(|e| Failure::data(format!("{}: {e}", a.model.display())))?;
    let sidecar = Sidecar {
        format_version: FORMAT_VERSION,
        parser: a.parser.name().to_owned(),
        template_set_version: feature_config.template_set_version.clone(),
        dimension_log2: feature_config.dimension_log2,
        seed: config.rng_seed,
        config: settings,
        fa_sentences: fa.len(),
        pa_sentences: pa.len(),
        skipped_instances: outcome.skipped,
        best_iteration: outcome.best_iteration,
        dev_curve: outcome.dev_curve,
    };
    let path = sidecar_path(&a.model);
    sidecar.save(&path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn complete(a: CompleteArgs, punct: &PunctSet) -> Result<(), Failure> {
    let m = load_model(&a.model)?;
    let entries = pipeline::read_entries(&a.input, Mode::Partial, punct)?;
    let gold = match &a.gold {
        Some(p) => {
            let g = pipeline::read_gold(p, punct)?;
            if g.len() != entries.len() || g.iter().zip(&entries).any(|((s, _), e)| s.len() != e.sentence.len()) {
                return Err(Failure::data("gold treebank does not align with the input"));
            }
            Some(g.into_iter().map(|(_, t)| t).collect::<Vec<_>>())
        }
        None => None,
    };
    let extractor = FeatureExtractor::new(m.model.config().clone());
    let parser =
        train::Parser::new(m.kind, &extractor, &m.model, m.beam_size).map_err(|e| Failure::training(e.to_string()))?;
    let sentences: Vec<&Sentence> = entries.iter().map(|e| &e.sentence).collect();
    let partials: Vec<PartialTree> = entries.iter().map(|e| e.annotation.constraint()).collect();
    let completion = pipeline::complete_treebank(&parser, &sentences, &partials, gold.as_deref())
        .map_err(|e| Failure::training(e.to_string()))?;
    let out: Vec<Entry> = entries
        .iter()
        .zip(&completion.trees)
        .filter_map(|(e, t)| t.as_ref().map(|t| Entry::full(e.sentence.clone(), t.clone())))
        .collect();
    write_entries(&a.output, &out)?;
    if let Some(eval) = completion.eval {
        print_eval("completed", eval);
    }
    Ok(())
}

fn parse(a: ParseArgs, punct: &PunctSet) -> Result<(), Failure> {
    let m = load_model(&a.model)?;
    let entries = pipeline::read_entries(&a.input, Mode::Partial, punct)?;
    let extractor = FeatureExtractor::new(m.model.config().clone());
    let parser =
        train::Parser::new(m.kind, &extractor, &m.model, m.beam_size).map_err(|e| Failure::training(e.to_string()))?;
    let trees: Vec<DepTree> = entries
        .par_iter()
        .map(|e| {
            let constraint = a.constrained.then(|| e.annotation.constraint());
            parser.parse(&e.sentence, constraint.as_ref())
        })
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::training(e.to_string()))?;
    let out: Vec<Entry> = entries.into_iter().zip(trees).map(|(e, t)| Entry::full(e.sentence, t)).collect();
    write_entries(&a.output, &out)
}

fn print_eval(label: &str, eval: EvalResult) {
    println!(
        "{label} UAS {:.2} ({} / {} non-punctuation tokens)",
        eval.uas() * 100.0,
        eval.correct_heads,
        eval.scored_tokens
    );
}

fn evaluate(a: EvaluateArgs, punct: &PunctSet) -> Result<(), Failure> {
    let gold = pipeline::read_gold(&a.gold, punct)?;
    let eval = match (&a.pred, &a.model) {
        (Some(p), _) => {
            let pred = pipeline::read_gold(p, punct)?;
            if pred.len() != gold.len() {
                return Err(Failure::data(format!(
                    "{} has {} sentences, gold has {}",
                    p.display(),
                    pred.len(),
                    gold.len()
                )));
            }
            let mut total = EvalResult::default();
            for ((s, g), (_, t)) in gold.iter().zip(&pred) {
                total += evaluate_uas(t, g, s).map_err(|e| Failure::data(e.to_string()))?;
            }
            total
        }
        (None, Some(m)) => {
            let m = load_model(m)?;
            let extractor = FeatureExtractor::new(m.model.config().clone());
            let parser = train::Parser::new(m.kind, &extractor, &m.model, m.beam_size)
                .map_err(|e| Failure::training(e.to_string()))?;
            pipeline::evaluate_parallel(&parser, &gold).map_err(|e| Failure::training(e.to_string()))?
        }
        (None, None) => return Err(Failure::usage("give --pred or --model")),
    };
    print_eval("test", eval);
    Ok(())
}

fn experiment(a: ExperimentArgs, punct: &PunctSet) -> Result<(), Failure> {
    let plan = PlanFile::load(&a.plan)?;
    let rows = pipeline::run_plan(&plan, punct)?;
    let bytes = pipeline::emit_report(&rows, a.format);
    pipeline::write_output(a.output.as_deref(), &bytes).map_err(|e| Failure::data(e.to_string()))
}

fn generate(a: GenerateArgs) -> Result<(), Failure> {
    let pairs = match a.kind {
        Synthetic::Trend => synth::trend_treebank(a.count, a.seed),
        Synthetic::Separable => synth::separable_treebank(a.count),
    };
    if pairs.is_empty() {
        return Err(Failure::usage("--count must be positive"));
    }
    write_pairs(&a.output, &pairs)
}
