mod config;
mod error;
mod oracle;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ckws_core::attack::RefSpeed;
use ckws_core::conjunction::{count, MAX_DEFAULT_ARITY};
use ckws_core::cooccurrence::{estimate_bytes, estimate_time_complexity};
use ckws_core::corpus::{ingest, ExtractionConfig, Stemmer, StopwordList};
use ckws_core::experiment::{
    clamp_accuracy, fit_extrapolation, plot_series, read_results, sweep, ExperimentConfig,
    ExperimentResult, PlotAxis, ResultStore, RunOptions,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Assignments;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "ckws", version, about = "Query recovery against conjunctive keyword search")]
struct Cli {
    /// Log progress (-v) or everything (-vv). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a directory of documents and write a corpus manifest.
    Ingest(IngestArgs),
    /// Memory and operation-count estimates for a vocabulary size and arity.
    Estimate(EstimateArgs),
    /// Run one experiment file; list-valued keys expand into a grid.
    Run(RunArgs),
    /// Run several experiment files in sequence, continuing past failures.
    Sweep(SweepArgs),
    /// Fit logit(accuracy) = b·v + a per series and predict other vocabulary sizes.
    Extrapolate(ExtrapolateArgs),
    /// Print (x, mean, stddev) series as tab-separated values.
    #[command(alias = "plot_data")]
    PlotData(PlotArgs),
    /// Compare the pipeline against brute-force references on toy corpora.
    #[command(alias = "oracle_check")]
    OracleCheck(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum StemmerArg {
    Porter,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum StopwordArg {
    English,
    None,
}

#[derive(Args)]
struct IngestArgs {
    /// Directory read recursively, one document per file.
    #[arg(long)]
    dir: PathBuf,
    /// Drop each file's header block (up to the first blank line).
    #[arg(long)]
    email_mode: bool,
    #[arg(long, value_enum, default_value = "porter")]
    stemmer: StemmerArg,
    #[arg(long, value_enum, default_value = "english")]
    stopwords: StopwordArg,
    /// Manifest destination.
    #[arg(long, default_value = "corpus-manifest.tsv")]
    manifest: PathBuf,
    /// Replace an existing manifest.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct EstimateArgs {
    /// Vocabulary size.
    #[arg(long)]
    v: usize,
    /// Conjunction arity.
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Fraction of conjunctions queried.
    #[arg(long, default_value_t = ckws_core::experiment::DEFAULT_QUERY_FRACTION)]
    fraction: f64,
    /// Initially known queries.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Predictions promoted per iteration: a count (`25`) or a share of the queries (`5%`).
    #[arg(long, default_value = "5%")]
    ref_speed: String,
    /// Bytes per matrix entry.
    #[arg(long, default_value_t = 8)]
    float_width: u32,
    /// Also report what one streamed repetition over this many documents holds.
    #[arg(long)]
    docs: Option<usize>,
    /// Accept arities above 3.
    #[arg(long)]
    allow_large_arity: bool,
}

/// Typed shortcuts for configuration keys; each overrides the file. Grid keys take lists.
#[derive(Args, Default)]
struct ConfigFlags {
    /// Corpus directory.
    #[arg(long)]
    corpus: Option<String>,
    /// Strip header blocks while ingesting.
    #[arg(long)]
    email_mode: bool,
    /// Arity (list allowed).
    #[arg(long)]
    d: Option<String>,
    /// Real vocabulary size (list allowed).
    #[arg(long)]
    v_real: Option<String>,
    /// `similar` or `p_known`.
    #[arg(long)]
    mode: Option<String>,
    /// Known-documents rate in p_known mode (list allowed).
    #[arg(long)]
    p: Option<String>,
    /// Attacker share of the corpus in similar mode (list allowed).
    #[arg(long)]
    similar_fraction: Option<String>,
    #[arg(long)]
    query_fraction: Option<String>,
    /// Initially known queries (list allowed).
    #[arg(long)]
    k_known: Option<String>,
    /// `25`, `5%` or `auto` (list allowed).
    #[arg(long)]
    ref_speed: Option<String>,
    /// `l2` or `l1`.
    #[arg(long)]
    norm: Option<String>,
    #[arg(long)]
    repetitions: Option<String>,
    /// Base seed; repetition r uses base + r.
    #[arg(long)]
    seed: Option<String>,
    /// Per-repetition memory limit, e.g. `16GiB`.
    #[arg(long)]
    memory_budget: Option<String>,
    /// Any configuration key, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigFlags {
    fn assignments(&self) -> Result<Assignments, CliError> {
        let mut a = Assignments::default();
        let typed = [
            ("corpus_path", &self.corpus),
            ("d", &self.d),
            ("v_real", &self.v_real),
            ("mode", &self.mode),
            ("p", &self.p),
            ("similar_fraction", &self.similar_fraction),
            ("query_fraction", &self.query_fraction),
            ("k_known", &self.k_known),
            ("ref_speed", &self.ref_speed),
            ("norm", &self.norm),
            ("repetitions", &self.repetitions),
            ("base_seed", &self.seed),
            ("memory_budget", &self.memory_budget),
        ];
        for pair in &self.set {
            a.set_pair(pair)?;
        }
        for (key, value) in typed {
            if let Some(v) = value {
                a.set(key, v).map_err(CliError::usage)?;
            }
        }
        if self.email_mode {
            a.set("email_mode", "true").map_err(CliError::usage)?;
        }
        Ok(a)
    }
}

#[derive(Args)]
struct Execution {
    /// Results directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Replace stored results of identical configurations.
    #[arg(long)]
    force: bool,
    /// Leave runtime_s empty so reruns produce byte-identical files.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: ConfigFlags,
    #[command(flatten)]
    exec: Execution,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment files, run in order; repeatable.
    #[arg(long, required = true)]
    config: Vec<PathBuf>,
    /// Overrides applied to every file.
    #[command(flatten)]
    flags: ConfigFlags,
    #[command(flatten)]
    exec: Execution,
}

#[derive(Args)]
struct ExtrapolateArgs {
    /// runs.csv written by `run` or `sweep`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Vocabulary sizes to predict, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "500")]
    at: Vec<f64>,
    /// Clamp mean accuracies into [1/(2r), 1 − 1/(2r)] before fitting, r the run count.
    #[arg(long)]
    clamp: bool,
    /// Only fit series whose label contains this text.
    #[arg(long)]
    series: Option<String>,
    /// Ignore points below this vocabulary size.
    #[arg(long)]
    min_v: Option<f64>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// x axis: v_real, k_known or p.
    #[arg(long, default_value = "v_real")]
    x: String,
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Seeded random corpora checked after the built-in ones.
    #[arg(long, default_value_t = 40)]
    random: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn cmd_ingest(args: &IngestArgs) -> Result<(), CliError> {
    if args.manifest.exists() && !args.force {
        return Err(CliError::usage(format!(
            "{} already exists; pass --force to replace it",
            args.manifest.display()
        )));
    }
    let config = ExtractionConfig {
        stemmer: match args.stemmer {
            StemmerArg::Porter => Stemmer::Porter,
            StemmerArg::None => Stemmer::None,
        },
        stopwords: match args.stopwords {
            StopwordArg::English => StopwordList::English,
            StopwordArg::None => StopwordList::None,
        },
        email_mode: args.email_mode,
    };
    let corpus = ingest(&args.dir, &config)?;
    corpus.write_manifest(&args.manifest)?;
    println!(
        "n={} distinct_keywords={} manifest={}",
        corpus.n(),
        corpus.distinct_keywords(),
        args.manifest.display()
    );
    Ok(())
}

fn gib(bytes: u64) -> String {
    let g = bytes as f64 / (1u64 << 30) as f64;
    if g >= 10.0 {
        format!("{g:.1} GiB")
    } else {
        format!("{g:.2} GiB")
    }
}

fn cmd_estimate(args: &EstimateArgs) -> Result<(), CliError> {
    if args.d == 0 || (args.d > MAX_DEFAULT_ARITY && !args.allow_large_arity) {
        return Err(ckws_core::Error::UnsupportedArity(args.d).into());
    }
    if args.float_width == 0 {
        return Err(CliError::usage("--float-width must be positive"));
    }
    let ref_speed: RefSpeed = args.ref_speed.parse()?;
    let m = count(args.v, args.d)?;
    let bytes = estimate_bytes(args.v, args.d, args.fraction, args.float_width)?;
    let l = (args.fraction * m as f64).round() as usize;
    let speed = ref_speed.resolve(l.max(1))?;
    let (f, g) = estimate_time_complexity(args.v, args.d, l, args.k, speed)?;
    println!("conjunctions C({}, {}) = {m}", args.v, args.d);
    println!("observed queries l = {l}");
    println!("memory ≈ {} ({bytes} bytes, C_ckw and C_td)", gib(bytes));
    println!("f = {f}");
    println!("g = {g} (RefSpeed {speed})");
    if let Some(n) = args.docs {
        let c = ExperimentConfig {
            v_real: args.v,
            d: args.d,
            allow_large_arity: args.allow_large_arity,
            query_fraction: args.fraction,
            k_known: args.k,
            attack: ckws_core::attack::AttackConfig {
                ref_speed,
                ..Default::default()
            },
            ..ExperimentConfig::default()
        };
        let streamed = c.required_bytes(n)?;
        println!(
            "streamed repetition over {n} documents ≈ {} ({streamed} bytes)",
            gib(streamed)
        );
    }
    Ok(())
}

fn load(files: &[PathBuf], flags: &ConfigFlags) -> Result<Vec<ExperimentConfig>, CliError> {
    let overrides = flags.assignments()?;
    let sources: Vec<Assignments> = if files.is_empty() {
        vec![Assignments::default()]
    } else {
        files.iter().map(|f| Assignments::read(f)).collect::<Result<_, _>>()?
    };
    let mut configs = Vec::new();
    for mut a in sources {
        a.merge(&overrides);
        if a.get("corpus_path").is_none_or(str::is_empty) {
            return Err(CliError::usage(
                "no corpus: set corpus_path in the file or pass --corpus",
            ));
        }
        configs.extend(a.expand()?);
    }
    for c in &configs {
        c.validate()?;
    }
    Ok(configs)
}

fn summary(r: &ExperimentResult) -> String {
    let c = &r.config;
    let acc = match (r.mean_accuracy, r.std_accuracy) {
        (Some(m), Some(s)) => format!("accuracy {m:.4} ± {s:.4}"),
        _ => "no completed repetitions".to_owned(),
    };
    format!(
        "{} mode={} d={} v_real={} {}={} k_known={} ref_speed={}: {acc} over {} runs, {} failed",
        r.config_hash,
        c.mode,
        c.d,
        c.v_real,
        match c.mode {
            ckws_core::experiment::AttackerMode::Similar => "similar_fraction",
            ckws_core::experiment::AttackerMode::PKnown => "p",
        },
        c.p_or_similar_fraction(),
        c.k_known,
        c.attack.ref_speed,
        r.completed(),
        r.failures.len()
    )
}

fn execute(configs: &[ExperimentConfig], exec: &Execution) -> Result<(), CliError> {
    let store = ResultStore::open(&exec.out, exec.force)?;
    if !exec.force {
        if let Some(c) = configs.iter().find(|c| store.aggregate_path(&c.hash()).exists()) {
            return Err(ckws_core::Error::ResultsExist(store.aggregate_path(&c.hash())).into());
        }
    }
    let options = RunOptions {
        workers: exec.workers,
        record_timing: !exec.no_timing,
    };
    let outcomes = sweep(configs, &options, Some(&store))?;
    let mut first_error = None;
    for (config, outcome) in configs.iter().zip(outcomes) {
        match outcome {
            Ok(result) => {
                let manifest = store.dir().join(format!("config-{}.cfg", result.config_hash));
                fs::write(&manifest, config::render(config)).map_err(|e| {
                    CliError::runtime(format!("cannot write {}: {e}", manifest.display()))
                })?;
                println!("{}", summary(&result));
                for f in &result.failures {
                    eprintln!("  seed {}: {}", f.seed, f.error);
                }
                if result.completed() == 0 && first_error.is_none() {
                    first_error = Some(CliError::runtime(format!(
                        "every repetition of {} failed",
                        result.config_hash
                    )));
                }
            }
            Err(e) => {
                eprintln!("error: configuration {}: {e}", config.hash());
                first_error.get_or_insert(e.into());
            }
        }
    }
    println!("results in {}", store.runs_path().display());
    first_error.map_or(Ok(()), Err)
}

fn cmd_extrapolate(args: &ExtrapolateArgs) -> Result<(), CliError> {
    let records = read_results(&args.input)?;
    let mut fitted = 0;
    for series in plot_series(&records, PlotAxis::VReal) {
        if args.series.as_ref().is_some_and(|s| !series.label.contains(s.as_str())) {
            continue;
        }
        let points: Vec<(f64, f64)> = series
            .points
            .iter()
            .filter(|p| args.min_v.is_none_or(|min| p.x >= min))
            .map(|p| {
                let acc = if args.clamp {
                    clamp_accuracy(p.mean, p.runs)
                } else {
                    p.mean
                };
                (p.x, acc)
            })
            .collect();
        if points.len() < 2 {
            eprintln!("skipping {}: fewer than 2 vocabulary sizes", series.label);
            continue;
        }
        let fit = fit_extrapolation(&points)?;
        fitted += 1;
        println!("series {}", series.label);
        println!("  a = {:.6}", fit.a);
        println!("  b = {:.6}", fit.b);
        for ((v, acc), res) in fit.points.iter().zip(&fit.residuals) {
            println!("  v = {v}: accuracy {acc:.4}, logit residual {res:+.4}");
        }
        for v in &args.at {
            println!("  predicted accuracy at v = {v}: {:.4}", fit.predict(*v));
        }
    }
    if fitted == 0 {
        return Err(CliError::runtime(format!(
            "no series in {} has at least 2 vocabulary sizes",
            args.input.display()
        )));
    }
    Ok(())
}

fn cmd_plot(args: &PlotArgs) -> Result<(), CliError> {
    let axis: PlotAxis = args.x.parse()?;
    let records = read_results(&args.input)?;
    let mut out = String::from("series\tx\tmean\tstddev\truns\n");
    for s in plot_series(&records, axis) {
        for p in &s.points {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                s.label, p.x, p.mean, p.stddev, p.runs
            ));
        }
    }
    match &args.out {
        Some(path) => write_new(path, &out),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn write_new(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

fn cmd_oracle(args: &OracleArgs) -> Result<(), CliError> {
    let report = oracle::run(args.seed, args.random);
    for m in &report.mismatches {
        eprintln!("mismatch: {m}");
    }
    if report.mismatches.is_empty() {
        println!(
            "all oracles passed ({} instances, {} through the attack)",
            report.instances, report.attacks
        );
        Ok(())
    } else {
        Err(CliError::runtime(format!(
            "{} oracle mismatches",
            report.mismatches.len()
        )))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let outcome = match &cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Run(a) => {
            let files: Vec<PathBuf> = a.config.iter().cloned().collect();
            load(&files, &a.flags).and_then(|c| execute(&c, &a.exec))
        }
        Command::Sweep(a) => load(&a.config, &a.flags).and_then(|c| execute(&c, &a.exec)),
        Command::Extrapolate(a) => cmd_extrapolate(a),
        Command::PlotData(a) => cmd_plot(a),
        Command::OracleCheck(a) => cmd_oracle(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
