//! Thin command-line front end over the gui_tod library: screen parsing,
//! corpus validation and splitting, policy training, replay evaluation,
//! and report rendering. Exit codes: 0 success, 2 validation failure,
//! 1 internal error.

use clap::{Args, Parser, Subcommand};
use gui_tod::actions::validate_action;
use gui_tod::config::Config;
use gui_tod::corpus::{
    compute_stats, load_corpus, save_corpus, split_holdout, split_random, CorpusError,
    Episode, HoldoutKey,
};
use gui_tod::harness::{
    emit_report, evaluate_with_predictions, load_report, render_table, run_generality_suite,
    EvalRun, ReportFormat,
};
use gui_tod::hierarchy::{extract_items, parse_hierarchy, parse_pseudo_layout};
use gui_tod::policy::{
    fit_counts, train, ActionPolicy, FrequencyPolicy, FrequencyResponder, MostFrequentPolicy,
    MostFrequentResponder, PolicyParams, RandomPolicy, RandomResponder, ReferencePolicy,
    ResponsePolicy, RetrievalResponder,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gui-tod", version, about = "GUI task-oriented dialogue toolkit")]
struct Cli {
    /// Seed for stochastic policies and splits.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// JSON config file (feature dim, history length, training knobs).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory for generated files.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a view-hierarchy XML or pseudo-layout file and show its items.
    ParseHierarchy(ParseHierarchyArgs),
    /// Validate a corpus file: schema, trace invariants, action validity.
    ValidateCorpus { corpus: PathBuf },
    /// Best-effort conversion of an external corpus layout to this schema.
    Import { source: PathBuf },
    /// Split a corpus randomly by ratios or by app/domain holdout.
    Split(SplitArgs),
    /// Print corpus statistics as JSON.
    Stats { corpus: PathBuf },
    /// Train the reference policy on a corpus.
    Train(TrainArgs),
    /// Evaluate a policy over a corpus under teacher forcing.
    Eval(EvalArgs),
    /// Fit and evaluate a heuristic baseline (random, fm, mfm).
    Baseline(BaselineArgs),
    /// Hold out each app or domain, train fresh, evaluate on the held side.
    Generality(GeneralityArgs),
    /// Re-render a saved JSON report.
    Report(ReportArgs),
}

#[derive(Args)]
struct ParseHierarchyArgs {
    file: PathBuf,
    /// Treat the input as an OCR pseudo-layout JSON file.
    #[arg(long)]
    pseudo: bool,
    /// Screen size as WxH (used to bound pseudo-layout records).
    #[arg(long, value_name = "WxH", default_value = "1080x1920")]
    screen_size: String,
    /// Emit the extracted items in the given format (only `json`).
    #[arg(long, value_name = "FORMAT")]
    emit_items: Option<String>,
}

#[derive(Args)]
struct SplitArgs {
    corpus: PathBuf,
    /// Random split ratios, e.g. 8:1:1.
    #[arg(long, conflicts_with_all = ["holdout_domain", "holdout_app"])]
    ratios: Option<String>,
    /// Hold out every episode touching this domain.
    #[arg(long, conflicts_with = "holdout_app")]
    holdout_domain: Option<String>,
    /// Hold out every episode touching this app package.
    #[arg(long)]
    holdout_app: Option<String>,
}

#[derive(Args)]
struct TrainArgs {
    corpus: PathBuf,
    /// Where to write the trained parameters (default <out>/params.json).
    #[arg(long, value_name = "FILE")]
    params_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    corpus: PathBuf,
    /// Policy to run: `reference`, `random`, `fm`, or `mfm`.
    #[arg(long, default_value = "reference")]
    policy: String,
    /// Parameter file for the reference policy.
    #[arg(long, value_name = "FILE")]
    params: Option<PathBuf>,
    /// Training corpus for baseline counts / retrieval index.
    #[arg(long, value_name = "FILE")]
    fit: Option<PathBuf>,
    /// Also generate responses: `retrieval`, `mfm`, `fm`, or `random`.
    #[arg(long, value_name = "KIND")]
    respond: Option<String>,
    /// Where to write the JSON report (default <out>/report.json).
    #[arg(long, value_name = "FILE")]
    report_out: Option<PathBuf>,
    /// Also write per-data-point predictions as JSONL.
    #[arg(long, value_name = "FILE")]
    predictions_out: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    corpus: PathBuf,
    /// Baseline kind: `random`, `fm`, or `mfm`.
    #[arg(long)]
    kind: String,
    /// Training corpus to fit counts on (defaults to the eval corpus).
    #[arg(long, value_name = "FILE")]
    fit: Option<PathBuf>,
}

#[derive(Args)]
struct GeneralityArgs {
    corpus: PathBuf,
    /// Holdout unit: `domain` or `app`.
    #[arg(long, default_value = "domain")]
    by: String,
}

#[derive(Args)]
struct ReportArgs {
    /// A JSON report produced by `eval` or `generality`.
    #[arg(long, value_name = "FILE")]
    from: PathBuf,
    /// `text` or `json`.
    #[arg(long, default_value = "text")]
    format: String,
}

/// Errors that should exit with code 2 (bad input) vs 1 (internal).
enum CliError {
    Validation(String),
    Internal(String),
}

impl CliError {
    fn validation(message: impl Into<String>) -> Self {
        CliError::Validation(message.into())
    }

    fn internal(message: impl Into<String>) -> Self {
        CliError::Internal(message.into())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io { .. } => CliError::Internal(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn load_config(cli_config: &Option<PathBuf>, seed: u64) -> Result<Config, CliError> {
    let mut config = match cli_config {
        Some(path) => Config::from_json_file(path)
            .map_err(|e| CliError::validation(e.to_string()))?,
        None => Config::default(),
    };
    config.seed = seed;
    Ok(config)
}

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::internal(format!("creating {}: {e}", dir.display())))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = load_config(&cli.config, cli.seed)?;
    match cli.command {
        Command::ParseHierarchy(args) => cmd_parse_hierarchy(args),
        Command::ValidateCorpus { corpus } => cmd_validate_corpus(&corpus),
        Command::Import { source } => cmd_import(&source, &cli.out),
        Command::Split(args) => cmd_split(args, cli.seed, &cli.out),
        Command::Stats { corpus } => cmd_stats(&corpus),
        Command::Train(args) => cmd_train(args, &config, &cli.out),
        Command::Eval(args) => cmd_eval(args, &config, cli.seed, &cli.out),
        Command::Baseline(args) => cmd_baseline(args, &config, cli.seed),
        Command::Generality(args) => cmd_generality(args, &config, &cli.out),
        Command::Report(args) => cmd_report(args),
    }
}

fn parse_screen_size(raw: &str) -> Result<(u32, u32), CliError> {
    let (w, h) = raw
        .split_once(['x', 'X'])
        .ok_or_else(|| CliError::validation(format!("bad --screen-size {raw:?}, want WxH")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<u32>()
            .map_err(|e| CliError::validation(format!("bad --screen-size {raw:?}: {e}")))
    };
    Ok((parse(w)?, parse(h)?))
}

fn cmd_parse_hierarchy(args: ParseHierarchyArgs) -> Result<(), CliError> {
    let bytes = std::fs::read(&args.file)
        .map_err(|e| CliError::internal(format!("reading {}: {e}", args.file.display())))?;
    let size = parse_screen_size(&args.screen_size)?;
    let (items, node_count) = if args.pseudo {
        let screen = parse_pseudo_layout(&bytes, size)
            .map_err(|e| CliError::validation(e.to_string()))?;
        (screen.items, 0)
    } else {
        let root = parse_hierarchy(&bytes).map_err(|e| CliError::validation(e.to_string()))?;
        let items = extract_items(&root);
        (items, root.node_count())
    };

    match args.emit_items.as_deref() {
        Some("json") => {
            println!("{}", serde_json::to_string_pretty(&items).expect("items serialize"));
        }
        Some(other) => {
            return Err(CliError::validation(format!(
                "unsupported --emit-items format {other:?}, only `json`"
            )))
        }
        None => {
            if node_count > 0 {
                println!("{node_count} nodes, {} actionable items", items.len());
            } else {
                println!("pseudo-layout with {} actionable items", items.len());
            }
            for item in &items {
                println!(
                    "  [{}] {:<16} {:?} at [{},{}][{},{}]",
                    item.index,
                    item.item_type,
                    item.text,
                    item.bbox.left,
                    item.bbox.top,
                    item.bbox.right,
                    item.bbox.bottom
                );
            }
        }
    }
    Ok(())
}

fn cmd_validate_corpus(corpus: &Path) -> Result<(), CliError> {
    let episodes = load_corpus(corpus)?;
    // Structural invariants passed; also check every action against its
    // screen.
    let mut violations = Vec::new();
    for episode in &episodes {
        for (t, turn) in episode.turns.iter().enumerate() {
            for (a, step) in turn.trace.iter().enumerate() {
                for violation in validate_action(&step.action, &step.screen) {
                    violations.push(format!(
                        "episode {}, turn {t}, action {a}: {violation}",
                        episode.episode_id
                    ));
                }
            }
        }
    }
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("{v}");
        }
        return Err(CliError::validation(format!(
            "{} action/screen violations",
            violations.len()
        )));
    }
    let stats = compute_stats(&episodes);
    println!(
        "ok: {} episodes, {} turns, {} data points",
        stats.n_dialogues, stats.n_turns, stats.n_data_points
    );
    Ok(())
}

/// Accepts a file that is already in (or close to) the native JSONL
/// schema, normalizes it, and writes `<out>/imported.jsonl`. Layout paths
/// are rewritten to absolute so the output loads from anywhere.
fn cmd_import(source: &Path, out: &Path) -> Result<(), CliError> {
    ensure_out_dir(out)?;
    let episodes = load_corpus(source).map_err(|e| {
        CliError::validation(format!(
            "cannot interpret {} as an episode corpus: {e}. Expected JSONL with one \
             {{episode_id, turns: [{{user, response, domain, apps, trace}}]}} object per line.",
            source.display()
        ))
    })?;
    let base = source
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .canonicalize()
        .map_err(|e| CliError::internal(format!("resolving {}: {e}", source.display())))?;
    let absolutize = |p: &mut Option<String>| {
        if let Some(rel) = p.as_ref() {
            let candidate = Path::new(rel);
            if !candidate.is_absolute() {
                *p = Some(base.join(candidate).display().to_string());
            }
        }
    };
    let mut episodes: Vec<Episode> = episodes;
    for episode in &mut episodes {
        for turn in &mut episode.turns {
            for step in &mut turn.trace {
                absolutize(&mut step.source.xml_path);
                absolutize(&mut step.source.pseudo_layout_path);
                absolutize(&mut step.source.screenshot_path);
            }
        }
    }
    let target = out.join("imported.jsonl");
    save_corpus(&episodes, &target)?;
    println!("imported {} episodes -> {}", episodes.len(), target.display());
    Ok(())
}

fn parse_ratios(raw: &str) -> Result<(u64, u64, u64), CliError> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::validation(format!("bad --ratios {raw:?}, want A:B:C")));
    }
    let parse = |s: &str| {
        s.parse::<u64>()
            .map_err(|e| CliError::validation(format!("bad --ratios {raw:?}: {e}")))
    };
    Ok((parse(parts[0])?, parse(parts[1])?, parse(parts[2])?))
}

/// When the split files land outside the corpus directory, relative layout
/// paths would dangle; rewrite them to absolute.
fn rebase_layout_paths(episodes: &mut [Episode], corpus_dir: &Path) {
    for episode in episodes {
        for turn in &mut episode.turns {
            for step in &mut turn.trace {
                for p in [&mut step.source.xml_path, &mut step.source.pseudo_layout_path] {
                    if let Some(rel) = p.as_ref() {
                        if !Path::new(rel).is_absolute() {
                            *p = Some(corpus_dir.join(rel).display().to_string());
                        }
                    }
                }
            }
        }
    }
}

fn cmd_split(args: SplitArgs, seed: u64, out: &Path) -> Result<(), CliError> {
    let episodes = load_corpus(&args.corpus)?;
    ensure_out_dir(out)?;
    let corpus_dir = args
        .corpus
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .canonicalize()
        .unwrap_or_else(|_| PathBuf::from("."));
    let rebase_needed = out.canonicalize().ok().as_deref() != Some(corpus_dir.as_path());

    let write = |name: &str, mut part: Vec<Episode>| -> Result<usize, CliError> {
        if rebase_needed {
            rebase_layout_paths(&mut part, &corpus_dir);
        }
        let path = out.join(name);
        save_corpus(&part, &path)?;
        Ok(part.len())
    };

    if let Some(domain) = &args.holdout_domain {
        let (train, test) = split_holdout(&episodes, HoldoutKey::Domain, domain)?;
        let n_train = write("train.jsonl", train)?;
        let n_test = write("test.jsonl", test)?;
        println!("holdout domain {domain}: {n_train} train / {n_test} test episodes");
    } else if let Some(app) = &args.holdout_app {
        let (train, test) = split_holdout(&episodes, HoldoutKey::App, app)?;
        let n_train = write("train.jsonl", train)?;
        let n_test = write("test.jsonl", test)?;
        println!("holdout app {app}: {n_train} train / {n_test} test episodes");
    } else {
        let ratios = parse_ratios(args.ratios.as_deref().unwrap_or("8:1:1"))?;
        let (train, dev, test) = split_random(&episodes, ratios, seed)?;
        let n_train = write("train.jsonl", train)?;
        let n_dev = write("dev.jsonl", dev)?;
        let n_test = write("test.jsonl", test)?;
        println!(
            "random {}:{}:{} split (seed {seed}): {n_train} / {n_dev} / {n_test} episodes",
            ratios.0, ratios.1, ratios.2
        );
    }
    Ok(())
}

fn cmd_stats(corpus: &Path) -> Result<(), CliError> {
    let episodes = load_corpus(corpus)?;
    let stats = compute_stats(&episodes);
    println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
    Ok(())
}

fn cmd_train(args: TrainArgs, config: &Config, out: &Path) -> Result<(), CliError> {
    let episodes = load_corpus(&args.corpus)?;
    let outcome =
        train(&episodes, config).map_err(|e| CliError::internal(e.to_string()))?;
    ensure_out_dir(out)?;
    let params_path = args.params_out.unwrap_or_else(|| out.join("params.json"));
    outcome
        .policy
        .params
        .save_json(&params_path)
        .map_err(|e| CliError::internal(e.to_string()))?;
    println!(
        "trained {} epochs; loss {:.4} -> {:.4} (best epoch {}); params -> {}",
        config.epochs,
        outcome.epoch_losses.first().unwrap(),
        outcome.epoch_losses.last().unwrap(),
        outcome.best_epoch,
        params_path.display()
    );
    Ok(())
}

fn build_action_policy(
    kind: &str,
    params: &Option<PathBuf>,
    fit: &Option<Vec<Episode>>,
    config: &Config,
    seed: u64,
) -> Result<Box<dyn ActionPolicy>, CliError> {
    match kind {
        "reference" => {
            let params_path = params
                .as_ref()
                .ok_or_else(|| CliError::validation("--policy reference needs --params"))?;
            let params = PolicyParams::load_json(params_path)
                .map_err(|e| CliError::validation(e.to_string()))?;
            let mut config = config.clone();
            config.feature_dim = params.feature_dim;
            config.history_len = params.history_len;
            config.head_hidden = params.head_hidden;
            config.trunk_layers = params.trunk.len();
            Ok(Box::new(ReferencePolicy::new(params, config)))
        }
        "random" => Ok(Box::new(RandomPolicy::new(seed))),
        "fm" | "mfm" => {
            let train_set = fit
                .as_ref()
                .ok_or_else(|| CliError::validation(format!("--policy {kind} needs --fit")))?;
            let counts = fit_counts(train_set);
            if kind == "fm" {
                Ok(Box::new(
                    FrequencyPolicy::new(counts, seed)
                        .map_err(|e| CliError::validation(e.to_string()))?,
                ))
            } else {
                Ok(Box::new(
                    MostFrequentPolicy::new(counts)
                        .map_err(|e| CliError::validation(e.to_string()))?,
                ))
            }
        }
        other => Err(CliError::validation(format!(
            "unknown policy {other:?}; expected reference, random, fm, or mfm"
        ))),
    }
}

fn build_responder(
    kind: &str,
    fit: &Option<Vec<Episode>>,
    config: &Config,
    seed: u64,
) -> Result<Box<dyn ResponsePolicy>, CliError> {
    let train_set = fit
        .as_ref()
        .ok_or_else(|| CliError::validation(format!("--respond {kind} needs --fit")))?;
    match kind {
        "retrieval" => Ok(Box::new(
            RetrievalResponder::fit(train_set, config)
                .map_err(|e| CliError::validation(e.to_string()))?,
        )),
        "mfm" => Ok(Box::new(
            MostFrequentResponder::new(&fit_counts(train_set))
                .map_err(|e| CliError::validation(e.to_string()))?,
        )),
        "fm" => Ok(Box::new(
            FrequencyResponder::new(&fit_counts(train_set), seed)
                .map_err(|e| CliError::validation(e.to_string()))?,
        )),
        "random" => Ok(Box::new(
            RandomResponder::new(&fit_counts(train_set), seed)
                .map_err(|e| CliError::validation(e.to_string()))?,
        )),
        other => Err(CliError::validation(format!(
            "unknown responder {other:?}; expected retrieval, mfm, fm, or random"
        ))),
    }
}

fn cmd_eval(args: EvalArgs, config: &Config, seed: u64, out: &Path) -> Result<(), CliError> {
    let episodes = load_corpus(&args.corpus)?;
    let fit = match &args.fit {
        Some(path) => Some(load_corpus(path)?),
        None => None,
    };
    let mut policy = build_action_policy(&args.policy, &args.params, &fit, config, seed)?;
    let mut responder = match &args.respond {
        Some(kind) => Some(build_responder(kind, &fit, config, seed)?),
        None => None,
    };
    let split_name = args
        .corpus
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".into());
    let (run, predictions) = evaluate_with_predictions(
        policy.as_mut(),
        responder.as_mut().map(|r| r.as_mut() as &mut dyn ResponsePolicy),
        &episodes,
        &split_name,
        config,
    )
    .map_err(|e| CliError::internal(e.to_string()))?;

    ensure_out_dir(out)?;
    let report_path = args.report_out.unwrap_or_else(|| out.join("report.json"));
    emit_report(std::slice::from_ref(&run), ReportFormat::Json, &report_path)
        .map_err(|e| CliError::internal(e.to_string()))?;
    if let Some(pred_path) = &args.predictions_out {
        let mut lines = String::new();
        for p in &predictions {
            lines.push_str(&serde_json::to_string(p).expect("prediction serialize"));
            lines.push('\n');
        }
        std::fs::write(pred_path, lines)
            .map_err(|e| CliError::internal(format!("{}: {e}", pred_path.display())))?;
    }
    print!("{}", render_table(std::slice::from_ref(&run)));
    println!("report -> {}", report_path.display());
    Ok(())
}

fn cmd_baseline(args: BaselineArgs, config: &Config, seed: u64) -> Result<(), CliError> {
    let episodes = load_corpus(&args.corpus)?;
    let fit = match &args.fit {
        Some(path) => load_corpus(path)?,
        None => episodes.clone(),
    };
    let mut policy = build_action_policy(&args.kind, &None, &Some(fit), config, seed)?;
    let run = gui_tod::harness::evaluate(
        policy.as_mut(),
        None,
        &episodes,
        "baseline",
        config,
        gui_tod::harness::EvalMode::TeacherForced,
    )
    .map_err(|e| CliError::internal(e.to_string()))?;
    print!("{}", render_table(std::slice::from_ref(&run)));
    Ok(())
}

fn cmd_generality(args: GeneralityArgs, config: &Config, out: &Path) -> Result<(), CliError> {
    let episodes = load_corpus(&args.corpus)?;
    let by = match args.by.as_str() {
        "domain" => HoldoutKey::Domain,
        "app" => HoldoutKey::App,
        other => {
            return Err(CliError::validation(format!(
                "unknown --by {other:?}; expected domain or app"
            )))
        }
    };
    let suite = run_generality_suite(&episodes, by, config)
        .map_err(|e| CliError::internal(e.to_string()))?;
    ensure_out_dir(out)?;
    let report_path = out.join("generality.json");
    emit_report(&suite.runs, ReportFormat::Json, &report_path)
        .map_err(|e| CliError::internal(e.to_string()))?;
    print!("{}", render_table(&suite.runs));
    for skipped in &suite.skipped {
        eprintln!("skipped {}: {}", skipped.held, skipped.reason);
    }
    println!("report -> {}", report_path.display());
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), CliError> {
    let runs: Vec<EvalRun> =
        load_report(&args.from).map_err(|e| CliError::validation(e.to_string()))?;
    match args.format.as_str() {
        "text" => print!("{}", render_table(&runs)),
        "json" => println!("{}", serde_json::to_string_pretty(&runs).expect("runs serialize")),
        other => {
            return Err(CliError::validation(format!(
                "unknown --format {other:?}; expected text or json"
            )))
        }
    }
    Ok(())
}
