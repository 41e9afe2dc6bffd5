//! `rankproj` command line.
//!
//! Every subcommand accepts `--config <file>`: a TOML table whose keys are
//! flag names (`p1 = 0.75`, `max-iter = 500`). Values from the file are
//! applied first and explicit flags override them. Each output file starts
//! with the fully resolved configuration as `#` comment lines, which is
//! itself a valid config file once the `# ` prefix is stripped.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Serialize, Serializer};

use crate::graph::{self, Dataset, IdMap, InputFormat};
use crate::metrics;
use crate::projection::{project_graph, ProjectionParams};
use crate::ranking::{self, Algorithm, RankingConfig};
use crate::sweep::{self, DataSource, GridSpec, Metric, SweepGrid, SweepPlan};
use crate::synth::{self, DiscretizationCase, SynthSpec};

type BoxError = Box<dyn std::error::Error + Send + Sync>;

/// Default output directory when `--out-dir` is not given.
pub const OUT_DIR_ENV: &str = "RANKPROJ_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "rankproj",
    version,
    about = "Reputation ranking with rating projection on bipartite rating networks",
    args_override_self = true
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Load a ratings file and print its basic statistics.
    Ingest(IngestArgs),
    /// Generate an artificial rating network and its ground truth.
    Synth(SynthArgs),
    /// Rank items and users of a ratings file.
    Rank(RankArgs),
    /// Score a ranking against a benchmark list or synthetic truth.
    Eval(EvalArgs),
    /// Evaluate a metric over a (p1, p2) grid.
    Sweep(SweepArgs),
    /// Original vs. projected-optimum ranking scores per algorithm.
    Table(TableArgs),
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Common {
    /// TOML file with default flag values; explicit flags win.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Directory for relative output paths.
    #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Progress messages on stderr.
    #[arg(short, long, action = clap::ArgAction::Count)]
    #[serde(skip)]
    pub verbose: u8,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct InputArgs {
    /// Ratings file.
    #[arg(long)]
    pub ratings: PathBuf,
    /// `csv` (user_id,item_id,rating) or `movielens` (a::b::r::t).
    #[arg(long, default_value = "csv")]
    #[serde(serialize_with = "display")]
    pub format: InputFormat,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RankingArgs {
    #[arg(long, default_value = "rr")]
    #[serde(serialize_with = "display")]
    pub algorithm: Algorithm,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 5.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub delta: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
}

impl RankingArgs {
    fn config(&self) -> RankingConfig {
        RankingConfig {
            algorithm: self.algorithm,
            beta: self.beta,
            epsilon: self.epsilon,
            theta: self.theta,
            delta: self.delta,
            max_iterations: self.max_iter,
            ..RankingConfig::default()
        }
    }
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ProjectionArgs {
    #[arg(long, default_value_t = 0.5)]
    pub p1: f64,
    #[arg(long, default_value_t = 0.5)]
    pub p2: f64,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct IngestArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Also write the ratings back out in generic CSV form.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SynthShape {
    #[arg(long, default_value_t = 6000)]
    pub users: usize,
    #[arg(long, default_value_t = 4000)]
    pub items: usize,
    #[arg(long, default_value_t = 480_000)]
    pub links: usize,
    /// Fraction of links given a uniform random rating.
    #[arg(long, default_value_t = 0.0)]
    pub spam_p: f64,
}

impl SynthShape {
    fn spec(&self, case: DiscretizationCase, seed: u64) -> SynthSpec {
        SynthSpec {
            num_users: self.users,
            num_items: self.items,
            num_links: self.links,
            case,
            spam_fraction: self.spam_p,
            seed,
            ..SynthSpec::default()
        }
    }
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SynthArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub shape: SynthShape,
    /// Discretization case 0..=4.
    #[arg(long, default_value = "0")]
    #[serde(serialize_with = "case_index")]
    pub case: DiscretizationCase,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "ratings.csv")]
    pub out_ratings: PathBuf,
    #[arg(long, default_value = "truth.txt")]
    pub out_truth: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RankArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub ranking: RankingArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub projection: ProjectionArgs,
    #[arg(long, default_value = "qualities.csv")]
    pub out_qualities: PathBuf,
    #[arg(long, default_value = "reputations.csv")]
    pub out_reputations: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct EvalArgs {
    /// `item_id,quality,rank` file written by `rank`.
    #[arg(long)]
    pub qualities: PathBuf,
    /// `user_id,reputation` file written by `rank`; needed with `--truth`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reputations: Option<PathBuf>,
    /// Benchmark item ids, one per line.
    #[arg(long, required_unless_present = "truth")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<PathBuf>,
    /// Ground truth written by `synth`.
    #[arg(long, requires = "reputations")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
    /// Benchmark fraction drawn from the truth when `--benchmark` is absent.
    #[arg(long, default_value_t = 0.05)]
    pub top_fraction: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct GridArgs {
    #[arg(long, default_value_t = 0.05)]
    pub grid_step: f64,
    /// Explicit p1 values (comma separated) instead of the uniform axis.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub p1_values: Vec<f64>,
    /// Explicit p2 values (comma separated) instead of the uniform axis.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub p2_values: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub realizations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl GridArgs {
    fn grid(&self) -> Result<GridSpec, BoxError> {
        let uniform = GridSpec::uniform(self.grid_step)?;
        let p1 = if self.p1_values.is_empty() {
            uniform.p1_values
        } else {
            self.p1_values.clone()
        };
        let p2 = if self.p2_values.is_empty() {
            uniform.p2_values
        } else {
            self.p2_values.clone()
        };
        Ok(GridSpec::new(p1, p2)?)
    }
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ranking: RankingArgs,
    #[arg(long, default_value = "rs")]
    #[serde(serialize_with = "display")]
    pub metric: Metric,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    /// Real ratings file (use with `--benchmark`).
    #[arg(long, conflicts_with = "synth_case", requires = "benchmark")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratings: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    #[serde(serialize_with = "display")]
    pub format: InputFormat,
    #[arg(long, requires = "ratings")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<PathBuf>,
    /// Synthetic networks with this discretization case.
    #[arg(long, required_unless_present = "ratings")]
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "opt_case_index")]
    pub synth_case: Option<DiscretizationCase>,
    #[command(flatten)]
    #[serde(flatten)]
    pub shape: SynthShape,
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct TableArgs {
    #[arg(long, value_delimiter = ',', default_value = "mean,ir,cr,rr")]
    #[serde(serialize_with = "display_list")]
    pub algorithms: Vec<Algorithm>,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 5.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub delta: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[arg(long, conflicts_with = "synth_cases", requires = "benchmark")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratings: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    #[serde(serialize_with = "display")]
    pub format: InputFormat,
    #[arg(long, requires = "ratings")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<PathBuf>,
    /// Synthetic cases, one table row each.
    #[arg(long, value_delimiter = ',', required_unless_present = "ratings")]
    #[serde(skip_serializing_if = "Vec::is_empty", serialize_with = "case_list")]
    pub synth_cases: Vec<DiscretizationCase>,
    #[command(flatten)]
    #[serde(flatten)]
    pub shape: SynthShape,
    #[arg(long, default_value = "table.csv")]
    pub out: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

fn display<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn display_list<T: Display, S: Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
    let joined: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    s.serialize_str(&joined.join(","))
}

fn case_index<S: Serializer>(c: &DiscretizationCase, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u8(c.index())
}

fn opt_case_index<S: Serializer>(c: &Option<DiscretizationCase>, s: S) -> Result<S::Ok, S::Error> {
    match c {
        Some(c) => s.serialize_u8(c.index()),
        None => s.serialize_none(),
    }
}

fn case_list<S: Serializer>(v: &[DiscretizationCase], s: S) -> Result<S::Ok, S::Error> {
    let joined: Vec<String> = v.iter().map(|c| c.index().to_string()).collect();
    s.serialize_str(&joined.join(","))
}

/// Entry point used by the binary; returns the process exit status.
pub fn main() -> i32 {
    run(std::env::args_os())
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match merge_config_file(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("rankproj: error: {e}");
            return 2;
        }
    };
    let cfg = match RunConfig::try_parse_from(argv) {
        Ok(cfg) => cfg,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("rankproj: error: {e}");
            1
        }
    }
}

/// Inserts `--key value` pairs from a `--config` TOML file right after the
/// subcommand so that explicit flags, which come later, take precedence.
fn merge_config_file(argv: Vec<OsString>) -> Result<Vec<OsString>, BoxError> {
    let mut path = None;
    for (i, arg) in argv.iter().enumerate() {
        let arg = arg.to_string_lossy();
        if arg == "--config" {
            path = argv.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = arg.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    // an output file's header block doubles as a config
    let text: String = if text.starts_with("# rankproj ") {
        text.lines()
            .map_while(|l| l.strip_prefix('#'))
            .skip(1)
            .map(str::trim_start)
            .collect::<Vec<_>>()
            .join("\n")
    } else {
        text
    };
    let table: toml::Table =
        toml::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))?;
    let mut injected = Vec::new();
    for (key, value) in table {
        let flag = format!("--{}", key.replace('_', "-"));
        let value = match value {
            toml::Value::String(s) => s,
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => f.to_string(),
            toml::Value::Boolean(b) => b.to_string(),
            toml::Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    toml::Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect::<Vec<_>>()
                .join(","),
            other => return Err(format!("unsupported config value for `{key}`: {other}").into()),
        };
        injected.push(OsString::from(flag));
        injected.push(OsString::from(value));
    }
    let mut merged = argv;
    if merged.len() >= 2 {
        merged.splice(2..2, injected);
    }
    Ok(merged)
}

fn dispatch(cfg: RunConfig) -> Result<(), BoxError> {
    let common = match &cfg.command {
        Command::Ingest(a) => &a.common,
        Command::Synth(a) => &a.common,
        Command::Rank(a) => &a.common,
        Command::Eval(a) => &a.common,
        Command::Sweep(a) => &a.common,
        Command::Table(a) => &a.common,
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let header = header_lines(&cfg.command)?;
    let out = Outputs::prepare(&common.out_dir)?;
    let verbose = common.verbose > 0;
    match &cfg.command {
        Command::Ingest(a) => ingest(a, &out, &header),
        Command::Synth(a) => synth_cmd(a, &out, &header),
        Command::Rank(a) => rank_cmd(a, &out, &header),
        Command::Eval(a) => eval_cmd(a),
        Command::Sweep(a) => sweep_cmd(a, &out, &header, verbose),
        Command::Table(a) => table_cmd(a, &out, &header, verbose),
    }
}

/// `rankproj <subcommand>` followed by the resolved flags as TOML.
fn header_lines(cmd: &Command) -> Result<Vec<String>, BoxError> {
    let (name, body) = match cmd {
        Command::Ingest(a) => ("ingest", toml::to_string(a)?),
        Command::Synth(a) => ("synth", toml::to_string(a)?),
        Command::Rank(a) => ("rank", toml::to_string(a)?),
        Command::Eval(a) => ("eval", toml::to_string(a)?),
        Command::Sweep(a) => ("sweep", toml::to_string(a)?),
        Command::Table(a) => ("table", toml::to_string(a)?),
    };
    let mut lines = vec![format!("rankproj {name} {}", env!("CARGO_PKG_VERSION"))];
    lines.extend(body.lines().map(str::to_owned));
    Ok(lines)
}

/// Resolves output paths and writes files atomically.
struct Outputs {
    dir: PathBuf,
}

impl Outputs {
    fn prepare(dir: &Path) -> Result<Self, BoxError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| format!("output directory {} not usable: {e}", dir.display()))?;
        tempfile::NamedTempFile::new_in(dir)
            .map_err(|e| format!("output directory {} not writable: {e}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.dir.join(path)
        }
    }

    /// Writes through a temporary file in the target directory, then renames.
    fn write(
        &self,
        path: &Path,
        body: impl FnOnce(&mut dyn Write) -> Result<(), BoxError>,
    ) -> Result<PathBuf, BoxError> {
        let target = self.resolve(path);
        let parent = target.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        std::fs::create_dir_all(parent)?;
        let mut tmp = tempfile::NamedTempFile::new_in(parent)?;
        {
            let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
            body(&mut buf)?;
            buf.flush()?;
        }
        tmp.persist(&target)
            .map_err(|e| format!("cannot write {}: {}", target.display(), e.error))?;
        Ok(target)
    }
}

fn open(path: &Path) -> Result<BufReader<File>, BoxError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| format!("cannot open {}: {e}", path.display()).into())
}

fn load_dataset(input: &InputArgs) -> Result<Dataset, BoxError> {
    load_ratings(&input.ratings, input.format)
}

fn load_ratings(path: &Path, format: InputFormat) -> Result<Dataset, BoxError> {
    graph::ingest_ratings(open(path)?, format)
        .map_err(|e| format!("{}: {e}", path.display()).into())
}

fn ingest(a: &IngestArgs, out: &Outputs, header: &[String]) -> Result<(), BoxError> {
    let started = std::time::Instant::now();
    let ds = load_dataset(&a.input)?;
    let s = ds.graph.stats();
    println!("users\t{}", s.num_users);
    println!("items\t{}", s.num_items);
    println!("links\t{}", s.num_links);
    println!("mean_user_degree\t{:.1}", s.mean_user_degree);
    println!("mean_item_degree\t{:.1}", s.mean_item_degree);
    println!("sparsity\t{:.4}", s.sparsity);
    println!("elapsed_s\t{:.2}", started.elapsed().as_secs_f64());
    if let Some(path) = &a.out {
        let written = out.write(path, |w| Ok(graph::write_ratings_csv(&ds, header, w)?))?;
        eprintln!("wrote {}", written.display());
    }
    Ok(())
}

fn synth_cmd(a: &SynthArgs, out: &Outputs, header: &[String]) -> Result<(), BoxError> {
    let spec = a.shape.spec(a.case, a.seed);
    let net = synth::generate(&spec)?;
    let ds = Dataset::with_sequential_ids(net.graph);
    out.write(&a.out_ratings, |w| Ok(graph::write_ratings_csv(&ds, header, w)?))?;
    out.write(&a.out_truth, |w| Ok(synth::write_truth(&net.truth, header, w)?))?;
    let s = ds.graph.stats();
    println!(
        "generated {} users, {} items, {} links (sparsity {:.4})",
        s.num_users, s.num_items, s.num_links, s.sparsity
    );
    Ok(())
}

fn rank_cmd(a: &RankArgs, out: &Outputs, header: &[String]) -> Result<(), BoxError> {
    let ds = load_dataset(&a.input)?;
    let params = ProjectionParams::new(a.projection.p1, a.projection.p2)?;
    let projected = project_graph(&ds.graph, params);
    let result = ranking::rank(&projected, &a.ranking.config())?;
    let ranks = metrics::midranks(&result.qualities);

    let mut order: Vec<usize> = (0..result.qualities.len()).collect();
    order.sort_by(|&x, &y| ranks[x].total_cmp(&ranks[y]).then(x.cmp(&y)));
    out.write(&a.out_qualities, |w| {
        for line in header {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "item_id,quality,rank")?;
        for &i in &order {
            writeln!(w, "{},{},{}", ds.items.id(i), result.qualities[i], ranks[i])?;
        }
        Ok(())
    })?;
    out.write(&a.out_reputations, |w| {
        for line in header {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "user_id,reputation")?;
        for (u, r) in result.reputations.iter().enumerate() {
            writeln!(w, "{},{}", ds.users.id(u), r)?;
        }
        Ok(())
    })?;
    println!(
        "{}: {} iterations, converged={}, residual={:e}",
        a.ranking.algorithm, result.iterations_used, result.converged, result.final_residual
    );
    Ok(())
}

/// Reads a two-or-more column CSV with an id column and a float column,
/// skipping `#` lines and the header row.
fn read_id_values(path: &Path) -> Result<(IdMap, Vec<f64>), BoxError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .flexible(true)
        .from_reader(open(path)?);
    let mut ids = IdMap::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        let id = record.get(0).ok_or("missing id column")?;
        let value: f64 = record
            .get(1)
            .ok_or("missing value column")?
            .trim()
            .parse()
            .map_err(|_| format!("{}: bad value in `{:?}`", path.display(), record))?;
        if ids.get(id).is_some() {
            return Err(format!("{}: duplicate id {id}", path.display()).into());
        }
        ids.intern(id);
        values.push(value);
    }
    Ok((ids, values))
}

fn eval_cmd(a: &EvalArgs) -> Result<(), BoxError> {
    let (items, qualities) = read_id_values(&a.qualities)?;
    let truth = match &a.truth {
        Some(p) => Some(synth::read_truth(open(p)?)?),
        None => None,
    };
    let benchmark = match (&a.benchmark, &truth) {
        (Some(p), _) => {
            let loaded = graph::load_benchmark(open(p)?, &items)?;
            if loaded.skipped > 0 {
                eprintln!("skipped {} unknown benchmark ids", loaded.skipped);
            }
            loaded.set
        }
        (None, Some(t)) => {
            let top = metrics::top_fraction(&t.intrinsic_quality, a.top_fraction)?;
            let found: Vec<usize> = top
                .iter()
                .filter_map(|i| items.get(&i.to_string()))
                .collect();
            graph::BenchmarkSet::new(found, items.len())?
        }
        (None, None) => return Err("need --benchmark or --truth".into()),
    };
    let rs = metrics::ranking_score(&qualities, &benchmark)?;
    println!("rs\t{}\tbenchmark_size\t{}", rs.value, rs.benchmark_size);

    if let (Some(t), Some(rep_path)) = (&truth, &a.reputations) {
        let (users, reps) = read_id_values(rep_path)?;
        let mut r = Vec::with_capacity(reps.len());
        let mut e = Vec::with_capacity(reps.len());
        for (u, rep) in reps.iter().enumerate() {
            let idx: usize = users
                .id(u)
                .parse()
                .map_err(|_| format!("user id `{}` is not a truth index", users.id(u)))?;
            let err = t
                .error_magnitude
                .get(idx)
                .ok_or_else(|| format!("user {idx} missing from truth"))?;
            r.push(*rep);
            e.push(*err);
        }
        let c = metrics::reputation_error_correlation(&r, &e)?;
        println!("corr\t{}\tdegenerate\t{}", c.value, c.degenerate);
    }
    Ok(())
}

fn source(
    ratings: &Option<PathBuf>,
    format: InputFormat,
    benchmark: &Option<PathBuf>,
    case: Option<DiscretizationCase>,
    shape: &SynthShape,
) -> Result<(DataSource, String), BoxError> {
    match (ratings, case) {
        (Some(path), _) => {
            let ds = load_ratings(path, format)?;
            let bpath = benchmark.as_ref().ok_or("--ratings needs --benchmark")?;
            let loaded = graph::load_benchmark(open(bpath)?, &ds.items)?;
            if loaded.skipped > 0 {
                eprintln!("skipped {} unknown benchmark ids", loaded.skipped);
            }
            let tag = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "real".into());
            Ok((
                DataSource::Real {
                    graph: ds.graph,
                    benchmark: loaded.set,
                },
                tag,
            ))
        }
        (None, Some(case)) => Ok((
            DataSource::synthetic(shape.spec(case, 0)),
            case.to_string(),
        )),
        (None, None) => Err("need --ratings/--benchmark or a synthetic case".into()),
    }
}

fn sweep_cmd(a: &SweepArgs, out: &Outputs, header: &[String], verbose: bool) -> Result<(), BoxError> {
    let (src, tag) = source(&a.ratings, a.format, &a.benchmark, a.synth_case, &a.shape)?;
    let plan = SweepPlan {
        algorithm: a.ranking.config(),
        metric: a.metric,
        grid: a.grid.grid()?,
        realizations: a.grid.realizations,
        master_seed: a.grid.seed,
        tag,
    };
    if verbose {
        eprintln!(
            "sweeping {} cells x {} realizations",
            plan.grid.len(),
            plan.realizations
        );
    }
    let grid = sweep::run_sweep(&src, &plan)?;
    out.write(&a.out, |w| Ok(grid.write_csv(header, w)?))?;
    print_summary(&grid);
    Ok(())
}

fn print_summary(grid: &SweepGrid) {
    match sweep::find_optimum(grid) {
        Ok(o) => {
            let original = grid
                .cell(0.5, 0.5)
                .map(|c| format!(" original={}", c.mean()))
                .unwrap_or_default();
            println!(
                "optimum {} {} p1={} p2={} {}={}{original}",
                grid.tag, grid.algorithm, o.p1, o.p2, grid.metric, o.value
            );
        }
        Err(e) => println!("optimum {} {}: {e}", grid.tag, grid.algorithm),
    }
}

fn table_cmd(a: &TableArgs, out: &Outputs, header: &[String], verbose: bool) -> Result<(), BoxError> {
    let grid = a.grid.grid()?;
    let sources: Vec<(DataSource, String)> = if a.ratings.is_some() {
        vec![source(&a.ratings, a.format, &a.benchmark, None, &a.shape)?]
    } else {
        a.synth_cases
            .iter()
            .map(|&c| source(&None, a.format, &None, Some(c), &a.shape))
            .collect::<Result<_, _>>()?
    };
    let mut sweeps = HashMap::new();
    let mut tags = Vec::new();
    for (src, tag) in &sources {
        tags.push(tag.clone());
        let realizations = match src {
            DataSource::Real { .. } => 1,
            DataSource::Synthetic { .. } => a.grid.realizations,
        };
        let prepared = sweep::realize_all(src, realizations, a.grid.seed)?;
        for &alg in &a.algorithms {
            if verbose {
                eprintln!("{tag}: {alg}");
            }
            let plan = SweepPlan {
                algorithm: RankingConfig {
                    algorithm: alg,
                    beta: a.beta,
                    epsilon: a.epsilon,
                    theta: a.theta,
                    delta: a.delta,
                    max_iterations: a.max_iter,
                    ..RankingConfig::default()
                },
                metric: Metric::Rs,
                grid: grid.clone(),
                realizations,
                master_seed: a.grid.seed,
                tag: tag.clone(),
            };
            let swept = sweep::sweep_realizations(&prepared, &plan)?;
            print_summary(&swept);
            sweeps.insert((tag.clone(), alg), swept);
        }
    }
    let table = sweep::compare_table(&tags, &a.algorithms, &sweeps)?;
    out.write(&a.out, |w| Ok(table.write_csv(header, w)?))?;
    for (tag, row) in &table.rows {
        let cells: Vec<String> = a
            .algorithms
            .iter()
            .zip(row)
            .map(|(alg, c)| format!("{alg} {:.4}->{:.4}", c.original, c.projected))
            .collect();
        println!("{tag}: {}", cells.join("  "));
    }
    Ok(())
}
