//! Experiment plans, the two training regimes, and reports.
//!
//! A plan file names the four corpora once and lists runs:
//!
//! ```toml
//! fa = "fa.conll"
//! pa_source = "pa.conll"
//! dev = "dev.conll"
//! test = "test.conll"
//! dimension_log2 = 20
//!
//! [train]
//! beam_size = 16
//!
//! [simulation]
//! setting = "random"
//! alpha = 30
//! seed = 1
//!
//! [[run]]
//! parser = "llgpar"
//!
//! [[run]]
//! parser = "lgpar"
//! regime = "complete-then-train"
//! completer = "fine-llgpar"
//! ```
//!
//! Paths are relative to the plan file. Without a `[simulation]` table the
//! PA source is taken as already partially annotated.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pardep_core::corpus::{DepTree, EvalResult, PartialTree, PunctSet, Sentence};
use pardep_core::features::{FeatureConfig, FeatureExtractor, DEFAULT_DIMENSION_LOG2};
use pardep_core::sim::{self, Setting};
use pardep_core::train::{self, Parser, ParserKind, TrainConfig, TrainOutcome, TrainingInstance};
use pardep_core::{evaluate_uas, Error, WeightModel};
use rayon::prelude::*;
use serde::Deserialize;

use crate::conll::{self, Entry, Mode};
use crate::model_io::TrainSettings;
use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Direct,
    CompleteThenTrain,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Direct => "direct",
            Regime::CompleteThenTrain => "complete-then-train",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Completer {
    /// The target parser kind trained on the FA set only.
    CoarseSelf,
    /// LLGPar trained on FA + PA with the forest objective.
    FineLlgpar,
}

impl Completer {
    pub fn name(self) -> &'static str {
        match self {
            Completer::CoarseSelf => "coarse-self",
            Completer::FineLlgpar => "fine-llgpar",
        }
    }
}

/// How partial annotation is derived from the PA source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationSpec {
    pub setting: Setting,
    /// Percentage in (0, 100]; ignored by the divergence setting.
    pub alpha: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulationToml {
    setting: String,
    #[serde(default = "hundred")]
    alpha: f64,
    #[serde(default = "one")]
    seed: u64,
}

fn hundred() -> f64 {
    100.0
}

fn one() -> u64 {
    1
}

impl SimulationToml {
    fn resolve(&self) -> Result<SimulationSpec, Failure> {
        let setting = Setting::from_str(&self.setting).map_err(|e| Failure::usage(e.to_string()))?;
        if setting != Setting::Divergence && !(self.alpha > 0.0 && self.alpha <= 100.0) {
            return Err(Failure::usage(format!("alpha must lie in (0, 100], got {}", self.alpha)));
        }
        Ok(SimulationSpec {
            setting,
            alpha: self.alpha,
            seed: self.seed,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunToml {
    parser: String,
    #[serde(default = "direct")]
    regime: Regime,
    completer: Option<Completer>,
    simulation: Option<SimulationToml>,
}

fn direct() -> Regime {
    Regime::Direct
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanToml {
    fa: PathBuf,
    pa_source: PathBuf,
    dev: PathBuf,
    test: PathBuf,
    dimension_log2: Option<u32>,
    #[serde(default)]
    train: TrainSettings,
    simulation: Option<SimulationToml>,
    #[serde(default)]
    run: Vec<RunToml>,
}

/// One experiment: a parser, a regime and how its PA is obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub parser: ParserKind,
    pub regime: Regime,
    /// Set exactly when the regime is complete-then-train.
    pub completer: Option<Completer>,
    /// `None` when the PA source is already partially annotated.
    pub simulation: Option<SimulationSpec>,
}

/// A parsed plan file.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanFile {
    pub fa: PathBuf,
    pub pa_source: PathBuf,
    pub dev: PathBuf,
    pub test: PathBuf,
    pub feature_config: FeatureConfig,
    pub train: TrainConfig,
    pub runs: Vec<ExperimentPlan>,
}

impl PlanFile {
    pub fn parse(text: &str, base: &Path) -> Result<Self, Failure> {
        let raw: PlanToml = toml::from_str(text).map_err(|e| Failure::usage(format!("invalid plan: {e}")))?;
        let feature_config = FeatureConfig::new(raw.dimension_log2.unwrap_or(DEFAULT_DIMENSION_LOG2))
            .map_err(|e| Failure::usage(e.to_string()))?;
        let train = TrainConfig::from(&raw.train);
        train.validate().map_err(|e| Failure::usage(e.to_string()))?;
        if raw.run.is_empty() {
            return Err(Failure::usage("plan has no [[run]] entries"));
        }
        let shared = raw.simulation.as_ref().map(SimulationToml::resolve).transpose()?;
        let mut runs = Vec::new();
        for (i, r) in raw.run.iter().enumerate() {
            let parser = ParserKind::from_str(&r.parser).map_err(|e| Failure::usage(format!("run {}: {e}", i + 1)))?;
            let completer = match (r.regime, r.completer) {
                (Regime::Direct, None) => None,
                (Regime::Direct, Some(_)) => {
                    return Err(Failure::usage(format!("run {}: a completer needs regime = \"complete-then-train\"", i + 1)))
                }
                (Regime::CompleteThenTrain, c) => Some(c.unwrap_or(Completer::CoarseSelf)),
            };
            let simulation = match &r.simulation {
                Some(s) => Some(s.resolve()?),
                None => shared,
            };
            runs.push(ExperimentPlan {
                parser,
                regime: r.regime,
                completer,
                simulation,
            });
        }
        let resolve = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
        Ok(PlanFile {
            fa: resolve(&raw.fa),
            pa_source: resolve(&raw.pa_source),
            dev: resolve(&raw.dev),
            test: resolve(&raw.test),
            feature_config,
            train,
            runs,
        })
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

/// Reads a treebank file, logging rejected sentences.
pub fn read_entries(path: &Path, mode: Mode, punct: &PunctSet) -> Result<Vec<Entry>, Failure> {
    let file = fs::File::open(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    let result = conll::read_treebank(BufReader::new(file), mode, punct)
        .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    for d in &result.diagnostics {
        log::warn!("{}: skipping {d}", path.display());
    }
    Ok(result.entries)
}

/// Reads a fully annotated treebank.
pub fn read_gold(path: &Path, punct: &PunctSet) -> Result<Vec<(Sentence, DepTree)>, Failure> {
    conll::gold_pairs(read_entries(path, Mode::Full, punct)?).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

/// The four corpora of an experiment.
#[derive(Debug, Clone, Default)]
pub struct Corpora {
    pub fa: Vec<(Sentence, DepTree)>,
    /// Either gold trees (to simulate from) or given partial annotation.
    pub pa_source: Vec<Entry>,
    pub dev: Vec<(Sentence, DepTree)>,
    pub test: Vec<(Sentence, DepTree)>,
}

impl Corpora {
    pub fn load(plan: &PlanFile, punct: &PunctSet) -> Result<Self, Failure> {
        let pa_source = read_entries(&plan.pa_source, Mode::Partial, punct)?
            .into_iter()
            .map(|e| match e.annotation.constraint().to_complete() {
                Some(tree) => Entry::full(e.sentence, tree),
                None => e,
            })
            .collect();
        Ok(Corpora {
            fa: read_gold(&plan.fa, punct)?,
            pa_source,
            dev: read_gold(&plan.dev, punct)?,
            test: read_gold(&plan.test, punct)?,
        })
    }

    /// Gold trees of the PA source, if every sentence has one.
    pub fn pa_gold(&self) -> Option<Vec<(Sentence, DepTree)>> {
        self.pa_source.iter().map(|e| e.tree().map(|t| (e.sentence.clone(), t.clone()))).collect()
    }
}

/// A failure tagged with the pipeline stage it happened in.
#[derive(Debug, Clone, PartialEq)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage failed: {}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {}

impl From<StageError> for Failure {
    fn from(e: StageError) -> Self {
        Failure::training(e.to_string())
    }
}

fn tag(stage: &'static str) -> impl FnOnce(Error) -> StageError {
    move |error| StageError { stage, error }
}

/// Corpus UAS of `parser`, parsing sentences in parallel.
pub fn evaluate_parallel(parser: &Parser<'_>, data: &[(Sentence, DepTree)]) -> Result<EvalResult, Error> {
    let parts: Vec<EvalResult> = data
        .par_iter()
        .map(|(s, gold)| evaluate_uas(&parser.parse(s, None)?, gold, s))
        .collect::<Result<_, Error>>()?;
    Ok(parts.into_iter().sum())
}

/// Parses every sentence in parallel, keeping input order.
pub fn parse_parallel(parser: &Parser<'_>, sentences: &[&Sentence]) -> Result<Vec<DepTree>, Error> {
    sentences.par_iter().map(|s| parser.parse(s, None)).collect()
}

/// Result of completing a partially annotated treebank.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    /// Completed tree per input sentence; `None` where the partial was unsatisfiable.
    pub trees: Vec<Option<DepTree>>,
    /// Completed trees scored against gold, when gold is known.
    pub eval: Option<EvalResult>,
}

impl Completion {
    pub fn skipped(&self) -> usize {
        self.trees.iter().filter(|t| t.is_none()).count()
    }
}

/// Completes each partial tree with constrained decoding.
///
/// Unsatisfiable partials are logged and yield `None`; any other decoding
/// error aborts. Completed trees are scored against `gold` when given.
pub fn complete_treebank(
    parser: &Parser<'_>,
    sentences: &[&Sentence],
    partials: &[PartialTree],
    gold: Option<&[DepTree]>,
) -> Result<Completion, Error> {
    if partials.len() != sentences.len() {
        return Err(Error::LengthMismatch {
            expected: sentences.len(),
            found: partials.len(),
        });
    }
    let trees: Vec<Option<DepTree>> = sentences
        .par_iter()
        .zip(partials.par_iter())
        .enumerate()
        .map(|(i, (s, p))| match parser.parse(s, Some(p)) {
            Ok(t) => {
                debug_assert!(t.contains(p));
                Ok(Some(t))
            }
            Err(Error::Unsatisfiable) => {
                log::warn!("sentence {}: partial annotation cannot be completed; skipped", i + 1);
                Ok(None)
            }
            Err(e) => Err(e),
        })
        .collect::<Result<_, Error>>()?;
    let eval = match gold {
        Some(gold) => {
            if gold.len() != sentences.len() {
                return Err(Error::LengthMismatch {
                    expected: sentences.len(),
                    found: gold.len(),
                });
            }
            let mut total = EvalResult::default();
            for ((t, g), s) in trees.iter().zip(gold).zip(sentences) {
                if let Some(t) = t {
                    total += evaluate_uas(t, g, s)?;
                }
            }
            Some(total)
        }
        None => None,
    };
    Ok(Completion { trees, eval })
}

/// One line of an experiment report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub parser: ParserKind,
    pub regime: Regime,
    pub completer: Option<Completer>,
    /// Simulation setting, or `None` for given partial annotation.
    pub setting: Option<Setting>,
    pub alpha: Option<f64>,
    pub dev_uas: f64,
    pub test_uas: f64,
    pub completed_uas: Option<f64>,
    /// Remarks such as `closed-test`.
    pub flags: Vec<String>,
}

/// Shared state of the runs of one plan: data, settings and cached seed models.
pub struct Session {
    pub corpora: Corpora,
    pub extractor: FeatureExtractor,
    pub config: TrainConfig,
    seed_models: BTreeMap<ParserKind, WeightModel>,
    simulated: Vec<(SimulationSpec, Vec<PartialTree>)>,
}

impl Session {
    pub fn new(corpora: Corpora, feature_config: FeatureConfig, config: TrainConfig) -> Self {
        Session {
            corpora,
            extractor: FeatureExtractor::new(feature_config),
            config,
            seed_models: BTreeMap::new(),
            simulated: Vec::new(),
        }
    }

    fn fa_instances(&self) -> Result<Vec<TrainingInstance>, StageError> {
        self.corpora
            .fa
            .iter()
            .map(|(s, t)| TrainingInstance::full(s.clone(), t.clone()))
            .collect::<Result<_, _>>()
            .map_err(tag("load"))
    }

    fn train(
        &self,
        kind: ParserKind,
        fa: &[TrainingInstance],
        pa: &[TrainingInstance],
        stage: &'static str,
    ) -> Result<TrainOutcome, StageError> {
        log::info!("{stage}: training {kind} on {} FA + {} PA sentences", fa.len(), pa.len());
        let outcome = train::train(kind, &self.extractor, fa, pa, &self.corpora.dev, &self.config).map_err(tag(stage))?;
        if outcome.skipped > 0 {
            log::warn!("{stage}: {} training instances skipped", outcome.skipped);
        }
        Ok(outcome)
    }

    /// `kind` trained on the FA set alone (cached).
    pub fn seed_model(&mut self, kind: ParserKind) -> Result<WeightModel, StageError> {
        if let Some(m) = self.seed_models.get(&kind) {
            return Ok(m.clone());
        }
        let fa = self.fa_instances()?;
        let model = self.train(kind, &fa, &[], "seed")?.model;
        self.seed_models.insert(kind, model.clone());
        Ok(model)
    }

    fn parser<'a>(&'a self, kind: ParserKind, model: &WeightModel, stage: &'static str) -> Result<Parser<'a>, StageError> {
        Parser::new(kind, &self.extractor, model, self.config.beam_size).map_err(tag(stage))
    }

    /// Partial annotation of the PA source under `spec` (cached), or the given
    /// annotation when `spec` is `None`.
    pub fn partials(&mut self, spec: Option<SimulationSpec>) -> Result<Vec<PartialTree>, StageError> {
        let Some(spec) = spec else {
            return Ok(self.corpora.pa_source.iter().map(|e| e.annotation.constraint()).collect());
        };
        if let Some((_, p)) = self.simulated.iter().find(|(s, _)| *s == spec) {
            return Ok(p.clone());
        }
        let gold = self.corpora.pa_gold().ok_or(StageError {
            stage: "simulate",
            error: Error::TrainConfig("simulation needs a fully annotated PA source".into()),
        })?;
        let partials = match spec.setting {
            Setting::Random => sim::simulate_random(&gold, spec.alpha, spec.seed).map_err(tag("simulate"))?,
            Setting::Uncertain => {
                let model = self.seed_model(ParserKind::LLGPar)?;
                let weights = model.averaged();
                let parts: Vec<_> = gold
                    .par_chunks(64)
                    .map(|chunk| sim::simulate_uncertain(chunk, spec.alpha, &self.extractor, &weights))
                    .collect::<Result<_, _>>()
                    .map_err(tag("simulate"))?;
                parts.into_iter().flatten().collect()
            }
            Setting::Divergence => {
                let sentences: Vec<&Sentence> = gold.iter().map(|(s, _)| s).collect();
                let mut predictions = Vec::new();
                for kind in ParserKind::ALL {
                    let model = self.seed_model(kind)?;
                    let parser = self.parser(kind, &model, "simulate")?;
                    predictions.push(parse_parallel(&parser, &sentences).map_err(tag("simulate"))?);
                }
                sim::simulate_divergence(&gold, [&predictions[0], &predictions[1], &predictions[2]]).map_err(tag("simulate"))?
            }
        };
        self.simulated.push((spec, partials.clone()));
        Ok(partials)
    }

    fn evaluate_row(&self, kind: ParserKind, model: &WeightModel) -> Result<(f64, f64), StageError> {
        let parser = self.parser(kind, model, "evaluate")?;
        let dev = evaluate_parallel(&parser, &self.corpora.dev).map_err(tag("evaluate"))?;
        let test = evaluate_parallel(&parser, &self.corpora.test).map_err(tag("evaluate"))?;
        Ok((dev.uas(), test.uas()))
    }

    /// Trains the target parser on FA + PA directly.
    pub fn run_direct(&mut self, plan: &ExperimentPlan) -> Result<ReportRow, StageError> {
        let partials = self.partials(plan.simulation)?;
        let fa = self.fa_instances()?;
        let pa: Vec<TrainingInstance> = self
            .corpora
            .pa_source
            .iter()
            .zip(partials)
            .map(|(e, p)| TrainingInstance::partial(e.sentence.clone(), p))
            .collect::<Result<_, _>>()
            .map_err(tag("load"))?;
        let outcome = self.train(plan.parser, &fa, &pa, "train")?;
        let (dev_uas, test_uas) = self.evaluate_row(plan.parser, &outcome.model)?;
        Ok(self.row(plan, dev_uas, test_uas, None))
    }

    /// Completes the PA with a completer model, then trains on FA + completed trees.
    pub fn run_complete_then_train(&mut self, plan: &ExperimentPlan) -> Result<ReportRow, StageError> {
        let completer = plan.completer.unwrap_or(Completer::CoarseSelf);
        let partials = self.partials(plan.simulation)?;
        let fa = self.fa_instances()?;

        // stage 1: the completer
        let (kind, model) = match completer {
            Completer::CoarseSelf => (plan.parser, self.seed_model(plan.parser)?),
            Completer::FineLlgpar => {
                let pa: Vec<TrainingInstance> = self
                    .corpora
                    .pa_source
                    .iter()
                    .zip(&partials)
                    .map(|(e, p)| TrainingInstance::partial(e.sentence.clone(), p.clone()))
                    .collect::<Result<_, _>>()
                    .map_err(tag("load"))?;
                (ParserKind::LLGPar, self.train(ParserKind::LLGPar, &fa, &pa, "completer")?.model)
            }
        };
        // stage 2: completion
        let sentences: Vec<&Sentence> = self.corpora.pa_source.iter().map(|e| &e.sentence).collect();
        let gold: Option<Vec<DepTree>> = self.corpora.pa_source.iter().map(|e| e.tree().cloned()).collect();
        let parser = self.parser(kind, &model, "complete")?;
        let completion = complete_treebank(&parser, &sentences, &partials, gold.as_deref()).map_err(tag("complete"))?;
        drop(parser);
        // stage 3: the target parser on completed trees as ordinary FA
        let mut train_fa = fa;
        for (s, t) in sentences.iter().zip(completion.trees) {
            if let Some(t) = t {
                train_fa.push(TrainingInstance::full((*s).clone(), t).map_err(tag("train"))?);
            }
        }
        let outcome = self.train(plan.parser, &train_fa, &[], "train")?;
        let (dev_uas, test_uas) = self.evaluate_row(plan.parser, &outcome.model)?;
        Ok(self.row(plan, dev_uas, test_uas, completion.eval.map(|e| e.uas())))
    }

    pub fn run(&mut self, plan: &ExperimentPlan) -> Result<ReportRow, StageError> {
        match plan.regime {
            Regime::Direct => self.run_direct(plan),
            Regime::CompleteThenTrain => self.run_complete_then_train(plan),
        }
    }

    fn row(&self, plan: &ExperimentPlan, dev_uas: f64, test_uas: f64, completed_uas: Option<f64>) -> ReportRow {
        let mut flags = Vec::new();
        if plan.completer == Some(Completer::FineLlgpar) {
            // the completer was trained on the very partials it completes
            flags.push("closed-test".to_owned());
        }
        ReportRow {
            parser: plan.parser,
            regime: plan.regime,
            completer: plan.completer,
            setting: plan.simulation.map(|s| s.setting),
            alpha: plan.simulation.filter(|s| s.setting != Setting::Divergence).map(|s| s.alpha),
            dev_uas,
            test_uas,
            completed_uas,
            flags,
        }
    }
}

/// Runs every experiment of a plan file.
pub fn run_plan(plan: &PlanFile, punct: &PunctSet) -> Result<Vec<ReportRow>, Failure> {
    let corpora = Corpora::load(plan, punct)?;
    let mut session = Session::new(corpora, plan.feature_config.clone(), plan.train.clone());
    plan.runs.iter().map(|r| session.run(r).map_err(Failure::from)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Tsv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(ReportFormat::Tsv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(format!("unknown report format `{s}` (expected tsv or markdown)")),
        }
    }
}

pub const REPORT_COLUMNS: [&str; 9] = [
    "parser",
    "regime",
    "completer",
    "setting",
    "alpha",
    "dev_uas",
    "test_uas",
    "completed_uas",
    "flags",
];

fn percent(v: f64) -> String {
    format!("{:.2}", v * 100.0)
}

fn cells(r: &ReportRow) -> [String; 9] {
    let dash = || "-".to_owned();
    [
        r.parser.name().to_owned(),
        r.regime.name().to_owned(),
        r.completer.map_or_else(dash, |c| c.name().to_owned()),
        r.setting.map_or_else(|| "given".to_owned(), |s| s.name().to_owned()),
        r.alpha.map_or_else(dash, |a| format!("{a}")),
        percent(r.dev_uas),
        percent(r.test_uas),
        r.completed_uas.map_or_else(dash, percent),
        if r.flags.is_empty() { dash() } else { r.flags.join(",") },
    ]
}

/// Renders rows sorted by (parser, setting, alpha, regime, completer).
pub fn emit_report(rows: &[ReportRow], format: ReportFormat) -> Vec<u8> {
    let mut sorted: Vec<&ReportRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.parser
            .name()
            .cmp(b.parser.name())
            .then(a.setting.cmp(&b.setting))
            .then(a.alpha.unwrap_or(-1.0).total_cmp(&b.alpha.unwrap_or(-1.0)))
            .then(a.regime.cmp(&b.regime))
            .then(a.completer.cmp(&b.completer))
    });
    let mut out = String::new();
    match format {
        ReportFormat::Tsv => {
            out.push_str(&REPORT_COLUMNS.join("\t"));
            out.push('\n');
            for r in sorted {
                out.push_str(&cells(r).join("\t"));
                out.push('\n');
            }
        }
        ReportFormat::Markdown => {
            out.push_str(&format!("| {} |\n", REPORT_COLUMNS.join(" | ")));
            out.push_str(&format!("|{}\n", "---|".repeat(REPORT_COLUMNS.len())));
            for r in sorted {
                out.push_str(&format!("| {} |\n", cells(r).join(" | ")));
            }
        }
    }
    out.into_bytes()
}

/// Parses a TSV report back into rows (UAS values at printed precision).
pub fn parse_report_tsv(text: &str) -> Result<Vec<ReportRow>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty report")?;
    if header.split('\t').ne(REPORT_COLUMNS) {
        return Err(format!("unexpected header `{header}`"));
    }
    fn opt(s: &str) -> Option<&str> {
        (s != "-").then_some(s)
    }
    let uas = |s: &str| s.parse::<f64>().map(|v| v / 100.0).map_err(|e| format!("bad UAS `{s}`: {e}"));
    lines
        .map(|line| {
            let c: Vec<&str> = line.split('\t').collect();
            if c.len() != REPORT_COLUMNS.len() {
                return Err(format!("row `{line}` has {} columns", c.len()));
            }
            Ok(ReportRow {
                parser: c[0].parse().map_err(|e: Error| e.to_string())?,
                regime: match c[1] {
                    "direct" => Regime::Direct,
                    "complete-then-train" => Regime::CompleteThenTrain,
                    other => return Err(format!("unknown regime `{other}`")),
                },
                completer: match opt(c[2]) {
                    None => None,
                    Some("coarse-self") => Some(Completer::CoarseSelf),
                    Some("fine-llgpar") => Some(Completer::FineLlgpar),
                    Some(other) => return Err(format!("unknown completer `{other}`")),
                },
                setting: match c[3] {
                    "given" => None,
                    s => Some(s.parse().map_err(|e: Error| e.to_string())?),
                },
                alpha: opt(c[4]).map(|a| a.parse::<f64>().map_err(|e| e.to_string())).transpose()?,
                dev_uas: uas(c[5])?,
                test_uas: uas(c[6])?,
                completed_uas: opt(c[7]).map(uas).transpose()?,
                flags: opt(c[8]).map(|f| f.split(',').map(str::to_owned).collect()).unwrap_or_default(),
            })
        })
        .collect()
}

/// Writes report bytes to `path`, or to stdout when `None`.
pub fn write_output(path: Option<&Path>, bytes: &[u8]) -> io::Result<()> {
    use std::io::Write;
    match path {
        Some(p) => fs::write(p, bytes),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()
        }
    }
}
