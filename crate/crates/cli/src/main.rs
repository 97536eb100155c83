//! `hdb`: hashed dynamic blocking from the command line.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data errors.

mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hdb_core::building::{lsh_probability, simulate_band_sharing};
use hdb_core::eval::{evaluate, labels_from_entity_ids, naive_pair_count, threshold_blocking, LabelSet, PairSet};
use hdb_core::hashing::derive_seed;
use hdb_core::io::{read_labels, read_pairs, write_block_pairs, write_label_pairs, write_pairs};
use hdb_core::pairs::materialize_blocks;
use hdb_core::pipeline::{run_blocking, StatsReport, Timing, REPORT_VERSION};
use hdb_core::{
    build_index, read_dataset, write_csv, Approximation, BlockingConfig, Dataset, EngineParams, InputFormat,
    ReadOptions,
};

use output::Outputs;

#[derive(Parser, Debug)]
#[command(name = "hdb", version, about = "Hashed dynamic blocking for record deduplication")]
struct Cli {
    /// Worker threads. Output does not depend on this value.
    #[arg(long, global = true, env = "HDB_THREADS")]
    threads: Option<usize>,

    /// Log filter, e.g. `info` or `hdb_core=debug`.
    #[arg(long, global = true, env = "HDB_LOG", default_value = "warn")]
    log: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build blocks and write the deduplicated candidate pairs.
    Block(BlockArgs),
    /// Score a pair file against labeled matches.
    Evaluate(EvaluateArgs),
    /// Tabulate the LSH banding probability curve.
    LshCurve(LshCurveArgs),
    /// Top-level block statistics and the threshold / naive baselines.
    Stats(StatsArgs),
    /// Convert benchmark data into record and label files.
    #[command(subcommand)]
    Prep(PrepCommand),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Records as CSV with a header row, or JSON lines.
    #[arg(long, short)]
    input: PathBuf,
    /// Input format; guessed from the file extension by default.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Column with unsigned 64-bit record ids; row ordinals otherwise.
    #[arg(long)]
    id_column: Option<String>,
    /// Block building configuration (TOML, or JSON with a .json extension).
    #[arg(long, short)]
    config: PathBuf,
}

impl InputArgs {
    fn load(&self) -> anyhow::Result<(Dataset, BlockingConfig)> {
        let config = BlockingConfig::from_path(&self.config)?;
        let opts = ReadOptions {
            id_column: self.id_column.clone(),
            format: self.format.map(|f| match f {
                Format::Csv => InputFormat::Csv,
                Format::Jsonl => InputFormat::Jsonl,
            }),
        };
        let dataset = read_dataset(&self.input, &opts)?;
        Ok((dataset, config))
    }
}

#[derive(Args, Debug)]
struct EngineArgs {
    /// Largest block whose pairs are emitted.
    #[arg(long, default_value_t = 500)]
    max_block_size: u32,
    /// Records with more over-sized keys than this leave the intersection.
    #[arg(long, default_value_t = 80)]
    max_keys: usize,
    /// Intersected blocks keeping more than this fraction of their smaller
    /// parent are discarded.
    #[arg(long, default_value_t = 0.9)]
    max_similarity: f64,
    #[arg(long, default_value_t = 20)]
    max_iterations: usize,
    /// Bloom filter false positive rate.
    #[arg(long, default_value_t = 1e-8)]
    bloom_fpr: f64,
    #[arg(long, default_value_t = 1 << 20)]
    cms_width: usize,
    #[arg(long, default_value_t = 5)]
    cms_depth: usize,
    /// Seed of the sketch hash functions.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exact counting and membership instead of sketches.
    #[arg(long)]
    exact: bool,
}

impl EngineArgs {
    fn params(&self) -> Result<EngineParams, CliError> {
        let params = EngineParams {
            max_block_size: self.max_block_size,
            max_keys: self.max_keys,
            max_similarity: self.max_similarity,
            max_iterations: self.max_iterations,
            bloom_target_fpr: self.bloom_fpr,
            cms_width: self.cms_width,
            cms_depth: self.cms_depth,
            seed: self.seed,
            approximation: if self.exact { Approximation::Exact } else { Approximation::Sketch },
        };
        params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(params)
    }
}

#[derive(Args, Debug)]
struct BlockArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    engine: EngineArgs,
    /// Receives pairs.csv, block_pairs.txt, stats.json and timing.json.
    #[arg(long, short)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Pair file written by `hdb block`.
    #[arg(long)]
    pairs: PathBuf,
    /// Positive labels, one `rid1,rid2` per line.
    #[arg(long)]
    labels: PathBuf,
    /// Labels are not complete ground truth; pair quality is not reported.
    #[arg(long)]
    incomplete_labels: bool,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LshCurveArgs {
    #[arg(long, short)]
    bands: usize,
    #[arg(long, short = 'w')]
    band_width: usize,
    /// Jaccard grid spacing over [0, 1].
    #[arg(long, default_value_t = 0.05, conflicts_with = "grid")]
    step: f64,
    /// Explicit comma-separated Jaccard values.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Monte-Carlo samples per grid point; 0 skips the simulation.
    #[arg(long, default_value_t = 0)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout by default.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Threshold for the threshold-blocking baseline.
    #[arg(long, default_value_t = 500)]
    max_block_size: u32,
    /// Optional complete labels to score the threshold baseline.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum PrepCommand {
    /// DBLP-Scholar: DBLP2.csv, Scholar.csv and the perfect mapping.
    Scholar {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, short)]
        out_dir: PathBuf,
    },
    /// Synthetic people registry with planted duplicates.
    People {
        #[arg(long, default_value_t = 100_000)]
        records: usize,
        #[arg(long, default_value_t = 0.1)]
        duplicate_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out_dir: PathBuf,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

impl From<hdb_core::Error> for CliError {
    fn from(e: hdb_core::Error) -> Self {
        CliError::Data(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    init_logging(&cli.log);
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Block(args) => cmd_block(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::LshCurve(args) => cmd_lsh_curve(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Prep(cmd) => cmd_prep(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn init_logging(filter: &str) {
    let filter = tracing_subscriber::EnvFilter::try_new(filter).unwrap_or_else(|_| "warn".into());
    let _ = tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).try_init();
}

fn cmd_block(args: BlockArgs) -> Result<(), CliError> {
    let params = args.engine.params()?;
    let (dataset, config) = args.input.load()?;
    let run = run_blocking(&dataset, &config, &params, rayon::current_num_threads())?;
    let stats = StatsReport::new(&run, &params);

    let mut out = Outputs::new(&args.out_dir);
    out.write("pairs.csv", |w| Ok(write_pairs(w, &run.pairs.pairs)?))?;
    out.write("block_pairs.txt", |w| Ok(write_block_pairs(w, &run.pairs.block_pairs)?))?;
    out.write_json("stats.json", &stats)?;
    out.write_json("timing.json", &TimingReport { version: REPORT_VERSION, timing: &run.timing })?;
    out.commit()?;
    eprintln!(
        "{} records, {} blocks, {} pairs in {:.2}s",
        stats.records,
        stats.right_sized_blocks,
        stats.pairs,
        run.timing.total().as_secs_f64()
    );
    Ok(())
}

#[derive(Serialize)]
struct TimingReport<'a> {
    version: u32,
    #[serde(flatten)]
    timing: &'a Timing,
}

#[derive(Serialize)]
struct EvaluationReport {
    version: u32,
    pairs_file: PathBuf,
    labels_file: PathBuf,
    labels_complete: bool,
    #[serde(flatten)]
    metrics: hdb_core::eval::Metrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    run: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing: Option<serde_json::Value>,
}

fn sibling_json(pairs: &Path, name: &str) -> anyhow::Result<Option<serde_json::Value>> {
    let path = pairs.with_file_name(name);
    if !path.is_file() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?))
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let pairs = read_pairs(&args.pairs)?;
    let labels: LabelSet = read_labels(&args.labels, !args.incomplete_labels)?;
    let p = PairSet::from_pairs(pairs.iter().map(|c| (c.rid1, c.rid2)));
    let metrics = evaluate(&p, &labels)?;
    let report = EvaluationReport {
        version: REPORT_VERSION,
        pairs_file: args.pairs.clone(),
        labels_file: args.labels.clone(),
        labels_complete: labels.complete,
        metrics,
        run: sibling_json(&args.pairs, "stats.json")?,
        timing: sibling_json(&args.pairs, "timing.json")?,
    };
    emit_json(&report, args.out.as_deref())
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    if let Some(path) = out {
        let mut outs = Outputs::for_file(path);
        outs.write_json(path.file_name().and_then(|n| n.to_str()).unwrap_or("report.json"), value)?;
        outs.commit()?;
    }
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, value).map_err(anyhow::Error::from)?;
    writeln!(stdout).map_err(anyhow::Error::from)?;
    Ok(())
}

fn cmd_lsh_curve(args: LshCurveArgs) -> Result<(), CliError> {
    if args.bands == 0 || args.band_width == 0 {
        return Err(CliError::Usage("--bands and --band-width must be at least 1".into()));
    }
    let grid: Vec<f64> = match &args.grid {
        Some(g) => g.clone(),
        None => {
            if !(args.step > 0.0 && args.step <= 1.0) {
                return Err(CliError::Usage("--step must be in (0, 1]".into()));
            }
            let steps = (1.0 / args.step).round() as usize;
            (0..=steps).map(|k| k as f64 / steps as f64).collect()
        }
    };
    if let Some(bad) = grid.iter().find(|j| !(0.0..=1.0).contains(*j)) {
        return Err(CliError::Usage(format!("jaccard value {bad} outside [0, 1]")));
    }

    let mut table = String::from(if args.samples > 0 { "j,probability,monte_carlo\n" } else { "j,probability\n" });
    for (k, &j) in grid.iter().enumerate() {
        let p = lsh_probability(args.bands, args.band_width, j);
        if args.samples > 0 {
            let est = simulate_band_sharing(args.bands, args.band_width, j, args.samples, derive_seed(args.seed, k as u64));
            table.push_str(&format!("{j},{p},{}\n", est.rate()));
        } else {
            table.push_str(&format!("{j},{p}\n"));
        }
    }
    match &args.out {
        Some(path) => {
            let mut outs = Outputs::for_file(path);
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("curve.csv");
            outs.write(name, |w| Ok(w.write_all(table.as_bytes())?))?;
            outs.commit()?;
        }
        None => print!("{table}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct IndexStats {
    version: u32,
    records: usize,
    records_without_keys: usize,
    top_level_key_occurrences: usize,
    top_level_blocks: usize,
    singleton_blocks: usize,
    oversized_blocks: usize,
    largest_block: usize,
    max_block_size: u32,
    naive_pairs: u64,
    threshold_pairs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold_metrics: Option<hdb_core::eval::Metrics>,
}

fn cmd_stats(args: StatsArgs) -> Result<(), CliError> {
    if args.max_block_size < 2 {
        return Err(CliError::Usage("--max-block-size must be at least 2".into()));
    }
    let (dataset, config) = args.input.load()?;
    let labels = args.labels.as_deref().map(|p| read_labels(p, true)).transpose()?;
    let index = build_index(&dataset, &config)?;
    let blocks = materialize_blocks(&index);
    let threshold = threshold_blocking(&index, args.max_block_size);
    let report = IndexStats {
        version: REPORT_VERSION,
        records: index.len(),
        records_without_keys: index.iter().filter(|r| r.keys.is_empty()).count(),
        top_level_key_occurrences: index.iter().map(|r| r.keys.len()).sum(),
        top_level_blocks: blocks.len(),
        singleton_blocks: blocks.iter().filter(|b| b.members.len() == 1).count(),
        oversized_blocks: blocks.iter().filter(|b| b.members.len() > args.max_block_size as usize).count(),
        largest_block: blocks.iter().map(|b| b.members.len()).max().unwrap_or(0),
        max_block_size: args.max_block_size,
        naive_pairs: naive_pair_count(&index),
        threshold_pairs: threshold.len(),
        threshold_metrics: labels.as_ref().map(|l| evaluate(&threshold, l)).transpose()?,
    };
    emit_json(&report, args.out.as_deref())
}

fn cmd_prep(cmd: PrepCommand) -> Result<(), CliError> {
    match cmd {
        PrepCommand::Scholar { dir, out_dir } => {
            let bench = hdb_core::prep::load_dblp_scholar(&dir)?;
            let mut out = Outputs::new(&out_dir);
            out.write("records.csv", |w| Ok(write_csv(&bench.dataset, w)?))?;
            out.write("labels.csv", |w| Ok(write_label_pairs(w, &bench.labels.positives)?))?;
            out.commit()?;
            eprintln!(
                "{} + {} records, {} labels ({} unresolved mapping rows)",
                bench.left_records,
                bench.right_records,
                bench.labels.positives.len(),
                bench.unresolved_mappings
            );
        }
        PrepCommand::People { records, duplicate_rate, seed, out_dir } => {
            if !(0.0..=1.0).contains(&duplicate_rate) {
                return Err(CliError::Usage("--duplicate-rate must be in [0, 1]".into()));
            }
            let spec = hdb_core::synth::PeopleSpec { records, duplicate_rate, ..hdb_core::synth::PeopleSpec::new(records, seed) };
            let dataset = hdb_core::synth::people_dataset(&spec);
            let labels = labels_from_entity_ids(
                dataset.records.iter().map(|r| (r.rid, r.values[0][0].clone(), Vec::new())),
                false,
            );
            let config = toml_string(&hdb_core::synth::people_config())?;
            let mut out = Outputs::new(&out_dir);
            out.write("records.csv", |w| Ok(write_csv(&dataset, w)?))?;
            out.write("labels.csv", |w| Ok(write_label_pairs(w, &labels.positives)?))?;
            out.write("config.toml", |w| Ok(w.write_all(config.as_bytes())?))?;
            out.commit()?;
            eprintln!("{} records, {} labels", dataset.len(), labels.positives.len());
        }
    }
    Ok(())
}

fn toml_string(config: &BlockingConfig) -> anyhow::Result<String> {
    config.to_toml_string().map_err(|e| anyhow!(e))
}
