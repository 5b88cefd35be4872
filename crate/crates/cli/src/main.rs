use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pplgec::corpus::split_corpus;
use pplgec::eval::{
    ablation_scored, evaluate_scored, hit_curves_scored, score_corpus, tune_alpha_scored,
    ScoredCorpus,
};
use pplgec::oracle::RemoteOracle;
use pplgec::{
    apply_corrections, build_corpus, corpus_stats, correct_text, parse_corpus, tokenize,
    write_corpus, AlphaTable, CachedOracle, ConfusionRegistry, Corpus, CorpusError, CorrectorError,
    EvalError, MaskOracle, NGramOracle, OracleError, Quota, RegistryError, ScorerMode,
    ScoringError, UniformOracle,
};
use serde_json::json;

const USAGE: u8 = 1;
const DATA: u8 = 2;
const BACKEND: u8 = 3;

#[derive(Parser)]
#[command(
    name = "pplgec",
    version,
    about = "Confusion-set grammatical error correction"
)]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Correct raw text, one sentence per line.
    Correct(CorrectArgs),
    /// Score a masked corpus and write a metrics report.
    Evaluate(EvaluateArgs),
    /// Pick the best fusion weight per error type.
    TuneAlpha(TuneArgs),
    /// Hit@k curves for top-k recommendation.
    Hitk(HitkArgs),
    #[command(subcommand)]
    Corpus(CorpusCommand),
    #[command(subcommand)]
    Ngram(NgramCommand),
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Mask confusion words out of raw text to make an evaluation corpus.
    Build(BuildArgs),
    /// Sample counts per error type.
    Stats(StatsArgs),
}

#[derive(Subcommand)]
enum NgramCommand {
    /// Count a bigram model from raw text.
    Train(TrainArgs),
}

#[derive(Clone, Debug)]
enum OracleSpec {
    Ngram(PathBuf),
    Remote(String),
    Uniform(usize),
}

impl FromStr for OracleSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or("expected ngram:<path>, remote:<url> or uniform:<V>")?;
        match kind {
            "ngram" => Ok(OracleSpec::Ngram(arg.into())),
            "remote" => Ok(OracleSpec::Remote(arg.to_string())),
            "uniform" => arg
                .parse()
                .ok()
                .filter(|&v| v > 0)
                .map(OracleSpec::Uniform)
                .ok_or_else(|| format!("`{arg}` is not a positive vocabulary size")),
            _ => Err(format!("unknown oracle kind `{kind}`")),
        }
    }
}

#[derive(Clone, Debug)]
enum AlphaSpec {
    Fixed(f64),
    File(PathBuf),
    Auto,
}

impl FromStr for AlphaSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(AlphaSpec::Auto);
        }
        match s.parse::<f64>() {
            Ok(a) if (0.0..=1.0).contains(&a) => Ok(AlphaSpec::Fixed(a)),
            Ok(a) => Err(format!("alpha {a} is outside [0, 1]")),
            Err(_) => Ok(AlphaSpec::File(s.into())),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct ModelArgs {
    /// ngram:<model.json> | remote:<url> | uniform:<V>
    #[arg(long)]
    oracle: OracleSpec,
    /// Confusion sets (default: the bundled Tagalog sets).
    #[arg(long)]
    registry: Option<PathBuf>,
}

#[derive(Args)]
struct AlphaArgs {
    /// A number in [0, 1], a `<type>: <alpha>` file, or `auto`.
    #[arg(long, default_value = "0.5")]
    alpha: AlphaSpec,
    #[arg(long, default_value = "fused")]
    mode: ScorerMode,
}

#[derive(Args)]
struct CorrectArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    alpha: AlphaArgs,
    /// Text to correct (default: stdin).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Suggestions listed per slot.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Corpus to tune on when --alpha is auto.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    alpha: AlphaArgs,
    /// Report first-only, second-only and fused side by side.
    #[arg(long)]
    ablation: bool,
    /// With --alpha auto: tune on this fraction, report on the rest.
    #[arg(long)]
    split: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Grid spacing over [0, 1].
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    /// Write the tuning curves here as JSON.
    #[arg(long)]
    curves: Option<PathBuf>,
    /// Alpha file (`<type>: <alpha>` lines).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct HitkArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    alpha: AlphaArgs,
    /// Largest k (default: the largest confusion set).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    format: CurveFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BuildArgs {
    /// Raw text, one sentence per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Samples per error type.
    #[arg(long, default_value_t = 100)]
    quota: usize,
    /// Per-type override, `<type>=<n>`; repeatable.
    #[arg(long = "type-quota", value_parser = parse_type_quota)]
    type_quota: Vec<(String, usize)>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_type_quota(s: &str) -> Result<(String, usize), String> {
    let (t, n) = s.split_once('=').ok_or("expected <type>=<n>")?;
    let n = n.parse().map_err(|_| format!("`{n}` is not a count"))?;
    Ok((t.to_string(), n))
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    registry: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Raw text, one sentence per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "add-k", default_value_t = pplgec::oracle::DEFAULT_ADD_K)]
    add_k: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn data(message: impl Into<String>) -> Self {
        Failure {
            code: DATA,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: USAGE,
            message: message.into(),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        let code = match e {
            OracleError::BackendUnavailable(_) | OracleError::Protocol(_) => BACKEND,
            OracleError::InvalidConfig(_) => USAGE,
            OracleError::InvalidQuery(_) | OracleError::EmptyTrainingData => DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<ScoringError> for Failure {
    fn from(e: ScoringError) -> Self {
        match e {
            ScoringError::Oracle(o) => o.into(),
            other => Failure::data(other.to_string()),
        }
    }
}

impl From<CorrectorError> for Failure {
    fn from(e: CorrectorError) -> Self {
        match e {
            CorrectorError::Scoring(s) => s.into(),
            other => Failure::data(other.to_string()),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Corrector(c) => c.into(),
            other => Failure::data(other.to_string()),
        }
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        Failure::data(e.to_string())
    }
}

impl From<RegistryError> for Failure {
    fn from(e: RegistryError) -> Self {
        Failure::data(e.to_string())
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match output {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::data(format!("stdout: {e}")))
        }
    }
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn load_registry(path: &Option<PathBuf>) -> Result<ConfusionRegistry, Failure> {
    match path {
        None => Ok(ConfusionRegistry::tagalog()),
        Some(p) => ConfusionRegistry::parse_str(&read_file(p)?)
            .map_err(|e| Failure::data(format!("{}: {e}", p.display()))),
    }
}

fn load_corpus(path: &Path, registry: &ConfusionRegistry) -> Result<Corpus, Failure> {
    let text = read_file(path)?;
    parse_corpus(text.as_bytes(), registry)
        .map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn load_oracle(spec: &OracleSpec) -> Result<CachedOracle<Box<dyn MaskOracle>>, Failure> {
    let inner: Box<dyn MaskOracle> = match spec {
        OracleSpec::Uniform(v) => Box::new(UniformOracle::new(*v)?),
        OracleSpec::Ngram(path) => Box::new(
            NGramOracle::from_json(&read_file(path)?)
                .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?,
        ),
        OracleSpec::Remote(url) => Box::new(RemoteOracle::connect(url)?),
    };
    Ok(CachedOracle::new(inner))
}

fn grid(step: f64) -> Result<Vec<f64>, Failure> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Failure::usage(format!("--step {step} must be in (0, 1]")));
    }
    let n = (1.0 / step).round() as usize;
    let mut g: Vec<f64> = (0..=n).map(|i| (i as f64 * step).min(1.0)).collect();
    g.dedup();
    Ok(g)
}

/// Resolves the alpha table and a protocol label for the report.
fn resolve_alphas(
    spec: &AlphaSpec,
    tune_on: Option<&ScoredCorpus>,
) -> Result<(AlphaTable, &'static str), Failure> {
    match spec {
        AlphaSpec::Fixed(a) => Ok((AlphaTable::fixed(*a), "fixed")),
        AlphaSpec::File(p) => Ok((AlphaTable::parse_str(&read_file(p)?)?, "per-type file")),
        AlphaSpec::Auto => {
            let scored =
                tune_on.ok_or_else(|| Failure::usage("--alpha auto needs a corpus to tune on"))?;
            let tuned = tune_alpha_scored(scored, &grid(0.01)?)?;
            Ok((tuned.alpha_table(), "resubstitution"))
        }
    }
}

fn run_correct(args: CorrectArgs) -> Result<(), Failure> {
    if args.k == 0 {
        return Err(Failure::usage("--k must be at least 1"));
    }
    let registry = load_registry(&args.model.registry)?;
    let oracle = load_oracle(&args.model.oracle)?;
    let tuned_on = match (&args.alpha.alpha, &args.corpus) {
        (AlphaSpec::Auto, Some(path)) => Some(score_corpus(
            &load_corpus(path, &registry)?,
            &registry,
            &oracle,
        )?),
        _ => None,
    };
    let (alphas, _) = resolve_alphas(&args.alpha.alpha, tuned_on.as_ref())?;
    let text = match &args.input {
        Some(p) => read_file(p)?,
        None => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Failure::data(format!("stdin: {e}")))?;
            s
        }
    };
    let mut table = String::new();
    let mut records = Vec::new();
    for line in text.lines() {
        let tokens = tokenize(line);
        let mut corrections = Vec::new();
        for c in correct_text(&tokens, &registry, &oracle, &alphas)? {
            // correct_text ranks fused; re-rank when another mode is asked for
            if args.alpha.mode == ScorerMode::Fused {
                corrections.push(c);
            } else {
                corrections.push(pplgec::corrector::correct_with(
                    &tokens,
                    c.position,
                    c.error_type.as_str(),
                    &registry,
                    &oracle,
                    alphas.get(c.error_type.as_str()),
                    args.alpha.mode,
                )?);
            }
        }
        let fixed = apply_corrections(&tokens, &corrections).join(" ");
        table.push_str(&fixed);
        table.push('\n');
        let mut slots = Vec::new();
        for c in &corrections {
            let top: Vec<_> = c.ranked.entries.iter().take(args.k).collect();
            let listed: Vec<String> = top
                .iter()
                .map(|e| format!("{} {:.4}", e.candidate, e.key))
                .collect();
            table.push_str(&format!(
                "  {} {}: {} -> {}{} [{}]\n",
                c.position,
                c.error_type,
                c.original_word.as_deref().unwrap_or("[MASK]"),
                c.predicted_word,
                if c.changed { " *" } else { "" },
                listed.join(", ")
            ));
            slots.push(json!({
                "position": c.position,
                "error_type": c.error_type,
                "original": c.original_word,
                "predicted": c.predicted_word,
                "changed": c.changed,
                "suggestions": top.iter().map(|e| json!({
                    "candidate": e.candidate,
                    "score": e.key,
                })).collect::<Vec<_>>(),
            }));
        }
        records.push(json!({ "input": line, "output": fixed, "slots": slots }));
    }
    let out = match args.format {
        Format::Table => table,
        Format::Json => with_newline(serde_json::to_string_pretty(&records).expect("json")),
    };
    emit(&args.output, &out)
}

fn run_evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let registry = load_registry(&args.model.registry)?;
    let corpus = load_corpus(&args.corpus, &registry)?;
    if let Some(f) = args.split {
        if !(f > 0.0 && f < 1.0) {
            return Err(Failure::usage("--split must be strictly between 0 and 1"));
        }
        if !matches!(args.alpha.alpha, AlphaSpec::Auto) {
            return Err(Failure::usage("--split only applies with --alpha auto"));
        }
    }
    let oracle = load_oracle(&args.model.oracle)?;
    let (scored, alphas, protocol) = match (args.split, &args.alpha.alpha) {
        (Some(f), AlphaSpec::Auto) => {
            let (dev, test) = split_corpus(&corpus, f, args.seed);
            let dev = score_corpus(&dev, &registry, &oracle)?;
            let tuned = tune_alpha_scored(&dev, &grid(0.01)?)?;
            let test = score_corpus(&test, &registry, &oracle)?;
            (test, tuned.alpha_table(), "dev-split")
        }
        (_, spec) => {
            let scored = score_corpus(&corpus, &registry, &oracle)?;
            let (alphas, protocol) = resolve_alphas(spec, Some(&scored))?;
            (scored, alphas, protocol)
        }
    };
    let out = if args.ablation {
        let r = ablation_scored(&scored, &alphas, protocol)?;
        match args.format {
            Format::Json => r.to_json(),
            Format::Table => r.to_table(),
        }
    } else {
        let r = evaluate_scored(&scored, &alphas, args.alpha.mode, protocol)?;
        match args.format {
            Format::Json => r.to_json(),
            Format::Table => r.to_table(),
        }
    };
    emit(&args.output, &with_newline(out))
}

fn run_tune(args: TuneArgs) -> Result<(), Failure> {
    let grid = grid(args.step)?;
    let registry = load_registry(&args.model.registry)?;
    let corpus = load_corpus(&args.corpus, &registry)?;
    let oracle = load_oracle(&args.model.oracle)?;
    let scored = score_corpus(&corpus, &registry, &oracle)?;
    let tuned = tune_alpha_scored(&scored, &grid)?;
    for (t, r) in &tuned.per_type {
        eprintln!("{t}: alpha {} (F0.5 {:.4})", r.best_alpha, r.best_f05_macro);
    }
    if let Some(path) = &args.curves {
        emit(&Some(path.clone()), &with_newline(tuned.to_json()))?;
    }
    emit(&args.output, &tuned.alpha_table().to_file_string())
}

fn run_hitk(args: HitkArgs) -> Result<(), Failure> {
    let registry = load_registry(&args.model.registry)?;
    let corpus = load_corpus(&args.corpus, &registry)?;
    let max_k = match args.k {
        Some(0) => return Err(Failure::usage("--k must be at least 1")),
        Some(k) => k,
        None => registry
            .sets()
            .iter()
            .map(|s| s.words.len())
            .max()
            .unwrap_or(1),
    };
    let oracle = load_oracle(&args.model.oracle)?;
    let scored = score_corpus(&corpus, &registry, &oracle)?;
    let (alphas, _) = resolve_alphas(&args.alpha.alpha, Some(&scored))?;
    let curves = hit_curves_scored(&scored, &alphas, args.alpha.mode, max_k)?;
    let out = match args.format {
        CurveFormat::Csv => curves.to_csv(),
        CurveFormat::Json => with_newline(curves.to_json()),
    };
    emit(&args.output, &out)
}

fn run_build(args: BuildArgs) -> Result<(), Failure> {
    let registry = load_registry(&args.registry)?;
    let mut quota = Quota::uniform(args.quota);
    for (t, n) in &args.type_quota {
        let t = registry.resolve_type(t)?;
        quota = quota.with(t.as_str(), *n);
    }
    let file = fs::File::open(&args.input)
        .map_err(|e| Failure::data(format!("{}: {e}", args.input.display())))?;
    let corpus = build_corpus(io::BufReader::new(file), &registry, &quota, args.seed)?;
    let stats = corpus_stats(&corpus, &registry);
    for (t, n) in &stats.per_type_counts {
        let want = quota.for_type(t);
        if *n < want {
            eprintln!("warning: {t}: {n} of {want} samples available");
        }
    }
    let mut buf = Vec::new();
    write_corpus(&corpus, &mut buf)?;
    emit(
        &args.output,
        &String::from_utf8(buf).expect("utf-8 in, utf-8 out"),
    )
}

fn run_stats(args: StatsArgs) -> Result<(), Failure> {
    let registry = load_registry(&args.registry)?;
    let corpus = load_corpus(&args.corpus, &registry)?;
    let stats = corpus_stats(&corpus, &registry);
    let out = match args.format {
        Format::Table => stats.to_table(),
        Format::Json => stats.to_json(),
    };
    emit(&args.output, &with_newline(out))
}

fn run_train(args: TrainArgs) -> Result<(), Failure> {
    let file = fs::File::open(&args.input)
        .map_err(|e| Failure::data(format!("{}: {e}", args.input.display())))?;
    let model = NGramOracle::train(io::BufReader::new(file), args.add_k)?;
    eprintln!(
        "{} tokens, {} word types",
        model.total_tokens(),
        model.vocab_size()
    );
    emit(&args.output, &with_newline(model.to_json()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    match cli.command {
        Command::Correct(a) => run_correct(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::TuneAlpha(a) => run_tune(a),
        Command::Hitk(a) => run_hitk(a),
        Command::Corpus(CorpusCommand::Build(a)) => run_build(a),
        Command::Corpus(CorpusCommand::Stats(a)) => run_stats(a),
        Command::Ngram(NgramCommand::Train(a)) => run_train(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("pplgec: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
