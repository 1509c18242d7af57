use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tengen::data::synth::{generate_game, random_rank, SynthConfig};
use tengen::data::{ingest_dir, load_records, split_by_game, write_records, IngestFilter, Rank, SplitTag, DEFAULT_TEST_FRACTION};
use tengen::interface::{engine_from_spec, run_match, selfcheck, Config, GtpSession, MatchConfig};
use tengen::network::{evaluate, load_model, prepare, save_model, train, Init, Model, ModelSpec, TrainConfig};
use tengen::search::{EvalMode, SearchParams};

#[derive(Parser)]
#[command(name = "tengen", version, about = "Go move prediction networks and tree search")]
struct Cli {
    /// key = value file; command-line flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output style for reports
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Kv,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a directory of SGF files into train/test example files
    Ingest {
        #[arg(long)]
        sgf_dir: PathBuf,
        /// Writes <out>.train.bin and <out>.test.bin with manifests
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        test_fraction: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dan_only: bool,
        #[arg(long)]
        no_handicap: bool,
        #[arg(long)]
        board_size: Option<usize>,
    },
    /// Write synthetic games from the built-in heuristic player
    Generate {
        #[arg(long)]
        games: usize,
        #[arg(long, default_value_t = 9)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a policy network
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Convolutional layers, output layer included
        #[arg(long)]
        layers: Option<usize>,
        #[arg(long)]
        filters: Option<usize>,
        #[arg(long)]
        symmetric: bool,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        finetune_epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// `uniform:<range>` or `fan-in`
        #[arg(long)]
        init: Option<String>,
    },
    /// Top-n accuracy of a model on an example file
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 10)]
        top_n: usize,
    },
    /// Serve GTP on stdin/stdout
    Gtp {
        /// random, mcts, policy:<model>, mcts-cnn:<model> or gtp:<command>
        #[arg(long)]
        engine: Option<String>,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        komi: Option<f32>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Play a refereed match between two engines
    Match {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        games: Option<usize>,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        komi: Option<f32>,
        #[arg(long)]
        max_moves: Option<usize>,
        /// Directory for SGF records of every game
        #[arg(long)]
        sgf_out: Option<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Run the built-in oracle checks
    Selfcheck {
        #[arg(long, default_value_t = 1)]
        scale: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    rollouts: Option<usize>,
    #[arg(long)]
    c_uct: Option<f64>,
    #[arg(long)]
    rave_k: Option<f64>,
    #[arg(long)]
    prior_visits: Option<f32>,
    #[arg(long)]
    eval_batch: Option<usize>,
    #[arg(long)]
    expansion_threshold: Option<u32>,
    /// `sync` or `threaded`
    #[arg(long)]
    eval_mode: Option<String>,
    #[arg(long)]
    rank: Option<String>,
    /// Resign when the best move's win rate falls below this
    #[arg(long)]
    resign: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

const CONFIG_KEYS: &[&str] = &[
    "seed",
    "test_fraction",
    "board_size",
    "size",
    "layers",
    "filters",
    "symmetric",
    "epochs",
    "finetune_epochs",
    "lr",
    "batch_size",
    "init",
    "engine",
    "komi",
    "games",
    "max_moves",
    "rollouts",
    "c_uct",
    "rave_k",
    "prior_visits",
    "eval_batch",
    "expansion_threshold",
    "eval_mode",
    "rank",
    "resign",
];

struct Output {
    format: Format,
    pairs: Vec<(String, String)>,
    text: Vec<String>,
}

impl Output {
    fn new(format: Format) -> Output {
        Output { format, pairs: Vec::new(), text: Vec::new() }
    }

    fn kv(&mut self, key: &str, value: impl ToString) {
        self.pairs.push((key.to_string(), value.to_string()));
    }

    fn line(&mut self, s: impl Into<String>) {
        self.text.push(s.into());
    }

    fn print(&self) {
        let stdout = std::io::stdout();
        let mut out = stdout.lock();
        match self.format {
            Format::Kv => {
                for (k, v) in &self.pairs {
                    let _ = writeln!(out, "{k}={v}");
                }
            }
            Format::Text => {
                for l in &self.text {
                    let _ = writeln!(out, "{l}");
                }
            }
        }
    }
}

fn parse_init(s: &str) -> Result<Init> {
    if s == "fan-in" {
        return Ok(Init::FanIn);
    }
    match s.strip_prefix("uniform:").map(str::parse::<f64>) {
        Some(Ok(r)) if r > 0.0 => Ok(Init::Uniform(r)),
        _ => bail!("init must be uniform:<range> or fan-in, got {s:?}"),
    }
}

fn parse_rank(s: &str) -> Result<Rank> {
    match Rank::parse(s) {
        Rank::Unknown if !matches!(s, "?" | "unknown") => bail!("invalid rank {s:?}"),
        r => Ok(r),
    }
}

fn search_params(cfg: &Config, a: &SearchArgs) -> Result<(SearchParams, Rank, Option<f64>)> {
    let d = SearchParams::default();
    let mode = cfg.resolve(a.eval_mode.clone(), "eval_mode", "threaded".to_string())?;
    let eval_mode = match mode.as_str() {
        "sync" => EvalMode::Synchronous,
        "threaded" => EvalMode::Threaded,
        other => bail!("eval_mode must be sync or threaded, got {other:?}"),
    };
    let rank = parse_rank(&cfg.resolve(a.rank.clone(), "rank", "9d".to_string())?)?;
    let params = SearchParams {
        rollouts: cfg.resolve(a.rollouts, "rollouts", d.rollouts)?,
        c_uct: cfg.resolve(a.c_uct, "c_uct", d.c_uct)?,
        rave_equivalence: cfg.resolve(a.rave_k, "rave_k", d.rave_equivalence)?,
        prior_visits: cfg.resolve(a.prior_visits, "prior_visits", d.prior_visits)?,
        batch_size: cfg.resolve(a.eval_batch, "eval_batch", d.batch_size)?,
        expansion_threshold: cfg.resolve(a.expansion_threshold, "expansion_threshold", d.expansion_threshold)?,
        seed: cfg.resolve(a.seed, "seed", d.seed)?,
        komi: d.komi,
        rank,
        reuse_tree: false,
        eval_mode,
    };
    if params.rollouts == 0 || params.batch_size == 0 {
        bail!("rollouts and eval_batch must be positive");
    }
    let resign = match a.resign {
        Some(r) => Some(r),
        None => cfg.get("resign")?,
    };
    Ok((params, rank, resign))
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => Config::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => Config::default(),
    };
    cfg.check_keys(CONFIG_KEYS)?;
    let mut out = Output::new(cli.format);
    match cli.command {
        Command::Ingest { sgf_dir, out: prefix, test_fraction, seed, dan_only, no_handicap, board_size } => {
            let filter = IngestFilter {
                include_handicap: !no_handicap,
                dan_only,
                board_size: match board_size {
                    Some(s) => Some(s),
                    None => cfg.get("board_size")?,
                },
            };
            let (games, stats) = ingest_dir(&sgf_dir, filter)?;
            let fraction = cfg.resolve(test_fraction, "test_fraction", DEFAULT_TEST_FRACTION)?;
            let seed = cfg.resolve(seed, "seed", 0)?;
            if games.is_empty() {
                bail!("no usable games under {}", sgf_dir.display());
            }
            let (train_set, test_set) = split_by_game(games, fraction, seed);
            let train_path = with_suffix(&prefix, "train.bin");
            let test_path = with_suffix(&prefix, "test.bin");
            write_records(&train_path, &train_set.examples, SplitTag::Train)?;
            write_records(&test_path, &test_set.examples, SplitTag::Test)?;
            for (k, v) in [
                ("files", stats.files),
                ("parsed", stats.parsed),
                ("rejected", stats.rejected),
                ("truncated", stats.truncated),
                ("filtered", stats.filtered),
                ("train_examples", train_set.examples.len()),
                ("test_examples", test_set.examples.len()),
            ] {
                out.kv(k, v);
            }
            out.line(format!(
                "{} files: {} parsed, {} rejected, {} truncated, {} filtered",
                stats.files, stats.parsed, stats.rejected, stats.truncated, stats.filtered
            ));
            out.line(format!("{} train examples -> {}", train_set.examples.len(), train_path.display()));
            out.line(format!("{} test examples -> {}", test_set.examples.len(), test_path.display()));
        }
        Command::Generate { games, size, out: dir, seed } => {
            let seed = cfg.resolve(seed, "seed", 0)?;
            if tengen::board::Position::new(size).is_err() {
                bail!("unsupported board size {size}");
            }
            std::fs::create_dir_all(&dir)?;
            let synth = SynthConfig::new(size);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut moves = 0;
            for g in 0..games {
                let (b, w) = (random_rank(&mut rng), random_rank(&mut rng));
                let game = generate_game(&synth, b, w, &mut rng);
                moves += game.moves.len();
                std::fs::write(dir.join(format!("synth_{g:05}.sgf")), game.to_sgf())?;
            }
            out.kv("games", games);
            out.kv("moves", moves);
            out.line(format!("wrote {games} games ({moves} moves) to {}", dir.display()));
        }
        Command::Train { data, test, out: path, layers, filters, symmetric, epochs, finetune_epochs, lr, batch_size, seed, init } => {
            let d = TrainConfig::default();
            let init = match init {
                Some(s) => parse_init(&s)?,
                None => match cfg.raw("init") {
                    Some(s) => parse_init(s)?,
                    None => d.init,
                },
            };
            let config = TrainConfig {
                batch_size: cfg.resolve(batch_size, "batch_size", d.batch_size)?,
                learning_rate: cfg.resolve(lr, "lr", d.learning_rate)?,
                epochs: cfg.resolve(epochs, "epochs", d.epochs)?,
                finetune_epochs: cfg.resolve(finetune_epochs, "finetune_epochs", d.finetune_epochs)?,
                init,
                seed: cfg.resolve(seed, "seed", d.seed)?,
                augment: true,
            };
            let layers = cfg.resolve(layers, "layers", 12)?;
            let filters = cfg.resolve(filters, "filters", 128)?;
            let symmetric = symmetric || cfg.get("symmetric")?.unwrap_or(false);
            let train_examples = load_records(&data)?;
            let Some(first) = train_examples.first() else { bail!("{} holds no examples", data.display()) };
            let size = first.snapshot.size;
            let train_data = prepare(&train_examples);
            drop(train_examples);
            let test_data = match &test {
                Some(t) => Some(prepare(&load_records(t)?)),
                None => None,
            };
            let spec = ModelSpec::policy(size, layers, filters, symmetric);
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let mut model: Model = Model::init_with(spec, config.init, &mut rng)?;
            let verbose = cli.verbose;
            let history = train(&mut model, &train_data, test_data.as_deref(), &config, |m| {
                if verbose > 0 || cli.format == Format::Text {
                    eprintln!(
                        "epoch {} lr {:.4}: train loss {:.4} acc {:.4}{}",
                        m.epoch,
                        m.learning_rate,
                        m.train_loss,
                        m.train_accuracy,
                        m.test_accuracy.map(|a| format!(", test acc {a:.4}")).unwrap_or_default()
                    );
                }
            })?;
            save_model(&model, &path)?;
            let last = history.last();
            out.kv("parameters", model.param_count());
            out.kv("epochs", history.len());
            if let Some(m) = last {
                out.kv("train_loss", format!("{:.6}", m.train_loss));
                out.kv("train_accuracy", format!("{:.6}", m.train_accuracy));
                if let Some(a) = m.test_accuracy {
                    out.kv("test_accuracy", format!("{a:.6}"));
                }
            }
            out.line(format!("saved {} parameters to {}", model.param_count(), path.display()));
        }
        Command::Eval { model, data, top_n } => {
            let m = load_model(&model)?;
            let examples = prepare(&load_records(&data)?);
            let report = evaluate(&m, &examples, top_n)?;
            out.kv("examples", report.examples);
            out.kv("log_loss", format!("{:.6}", report.log_loss));
            out.line(format!("{} examples, log loss {:.4}", report.examples, report.log_loss));
            out.line("n\taccuracy");
            for (k, acc) in report.top_n.iter().enumerate() {
                out.kv(&format!("top_{}", k + 1), format!("{acc:.6}"));
                out.line(format!("{}\t{:.4}", k + 1, acc));
            }
        }
        Command::Gtp { engine, size, komi, search } => {
            let (params, rank, resign) = search_params(&cfg, &search)?;
            let spec = cfg.resolve(engine, "engine", "mcts".to_string())?;
            let e = engine_from_spec(&spec, &params, rank, resign)?;
            let size = cfg.resolve(size, "size", 19)?;
            let komi = cfg.resolve(komi, "komi", 7.5)?;
            if tengen::board::Position::new(size).is_err() {
                bail!("unsupported board size {size}");
            }
            let mut session = GtpSession::new(e, size, komi, params.seed);
            let stdin = std::io::stdin();
            session.run(stdin.lock(), BufWriter::new(std::io::stdout().lock()))?;
            return Ok(());
        }
        Command::Match { a, b, games, size, komi, max_moves, sgf_out, search } => {
            let (params, rank, resign) = search_params(&cfg, &search)?;
            let size = cfg.resolve(size, "size", 9)?;
            let mut mc = MatchConfig::new(cfg.resolve(games, "games", 100)?, size);
            mc.komi = cfg.resolve(komi, "komi", 7.5)?;
            mc.max_moves = cfg.resolve(max_moves, "max_moves", mc.max_moves)?;
            mc.seed = params.seed;
            mc.sgf_dir = sgf_out;
            let mut ea = engine_from_spec(&a, &params, rank, resign)?;
            let mut eb = engine_from_spec(&b, &params, rank, resign)?;
            let report = run_match(ea.as_mut(), eb.as_mut(), &mc)?;
            for line in report.to_key_values().lines() {
                if let Some((k, v)) = line.split_once('=') {
                    out.kv(k, v);
                }
            }
            out.line(report.to_string());
        }
        Command::Selfcheck { scale, seed } => {
            let seed = cfg.resolve(seed, "seed", 0)?;
            let results = selfcheck::run_all(scale, seed);
            for r in &results {
                out.kv(r.name, if r.passed { "pass" } else { "fail" });
                out.line(format!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail));
            }
            out.print();
            if results.iter().any(|r| !r.passed) {
                bail!("self-check failed");
            }
            return Ok(());
        }
    }
    out.print();
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
