//! The `combwalk` command line.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::{
    check_alpha, parse_checkpoints, parse_list, parse_range, ConfigError, ConfigFile,
};
use crate::ensemble::{run_ensemble, EnsembleError, EnsembleSpec, Execution};
use crate::graph::{build_graph, parse_byte_size, GraphError, GraphModel};
use crate::oracle::{self, OracleError};
use crate::sampler::{Construction, PairTrajectorySummary, RecordPolicy, SampleError};
use crate::statistics::{
    self, DriftAccumulator, DyadicAccumulator, DyadicGrid, GrowthAccumulator, LilReport, StatsError,
};

pub mod exit {
    pub const OK: u8 = 0;
    pub const CHECK_FAILED: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const BUDGET: u8 = 3;
    pub const SCHEMA: u8 = 4;
    pub const DEGENERATE: u8 = 5;
}

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::new(exit::CONFIG, e.to_string())
    }
}

impl From<GraphError> for Failure {
    fn from(e: GraphError) -> Self {
        let code = match e {
            GraphError::Budget { .. } => exit::BUDGET,
            _ => exit::CONFIG,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Graph(g) => g.into(),
            OracleError::Leak(_) => Failure::new(exit::DEGENERATE, e.to_string()),
            _ => Failure::new(exit::CONFIG, e.to_string()),
        }
    }
}

impl From<SampleError> for Failure {
    fn from(e: SampleError) -> Self {
        match e {
            SampleError::Graph(g) => g.into(),
            _ => Failure::new(exit::CONFIG, e.to_string()),
        }
    }
}

impl From<StatsError> for Failure {
    fn from(e: StatsError) -> Self {
        let code = match e {
            StatsError::Schema(_) => exit::SCHEMA,
            StatsError::Alpha(_) | StatsError::MissingAlpha(_) => exit::CONFIG,
            StatsError::Degenerate(_) | StatsError::EmptyCondition { .. } => exit::DEGENERATE,
        };
        Failure::new(code, e.to_string())
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::new(exit::CONFIG, format!("{}: {e}", path.display()))
}

#[derive(Parser, Debug)]
#[command(
    name = "combwalk",
    version,
    about = "Random walks and collisions on comb graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate independent pairs of walkers and write one JSON line per replica.
    Simulate(SimulateArgs),
    /// Exact transition-kernel computations.
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
    /// Dyadic statistics, growth curves, envelope and drift reports from JSONL.
    Stats(StatsArgs),
    /// Log-log exponent fit of one CSV column.
    Fit(FitArgs),
    /// Check the exact identities (same as `oracle identities`).
    Verify(VerifyArgs),
}

#[derive(Subcommand, Debug)]
enum OracleCommand {
    /// Return probabilities p^(n)(v,v).
    Return(SeriesArgs),
    /// Partial sums of the expected number of meetings.
    Meetings(SeriesArgs),
    /// Largest per-tooth-site meeting probability at each time.
    Persite(SeriesArgs),
    /// Full n-step distribution from the start vertex.
    Distribution(SeriesArgs),
    /// Loop-around and reversibility residuals on a built-in grid.
    Identities(VerifyArgs),
}

#[derive(Args, Debug, Default)]
struct SimulateArgs {
    /// TOML file keyed by flag names; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    graph: Option<String>,
    /// Start vertex coordinates, comma separated (default: the graph root).
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    replicas: Option<u64>,
    /// First replica index, for sharded runs.
    #[arg(long)]
    first_replica: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// direct, self-loop or geometric-clock.
    #[arg(long)]
    construction: Option<String>,
    /// `dyadic`, `every:N`, `none` or a comma-separated list.
    #[arg(long)]
    checkpoints: Option<String>,
    /// Envelope exponents to track, comma separated.
    #[arg(long)]
    alpha: Option<String>,
    /// Record both positions at every checkpoint.
    #[arg(long)]
    track_positions: bool,
    /// JSONL destination (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct SeriesArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    graph: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    /// Largest time (the time itself for `distribution`).
    #[arg(long)]
    nmax: Option<u64>,
    /// Byte budget for the truncated ball, e.g. `512M`.
    #[arg(long)]
    memory_budget: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct StatsArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSONL files from `simulate`; several files are merged as shards.
    #[arg(long, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Time cells `lo:hi` (powers of two).
    #[arg(long)]
    r_range: Option<String>,
    /// Height cells `lo:hi`.
    #[arg(long)]
    k_range: Option<String>,
    /// Dyadic grid CSV (`-` for stdout). Written to stdout when no report is requested.
    #[arg(long)]
    dyadic: Option<PathBuf>,
    /// Growth-curve CSV.
    #[arg(long)]
    growth: Option<PathBuf>,
    /// Envelope report CSV.
    #[arg(long)]
    lil: Option<PathBuf>,
    /// Envelope exponents to report (default: all recorded).
    #[arg(long)]
    alpha: Option<String>,
    /// Count replicas whose last envelope violation is after this time.
    #[arg(long)]
    lil_after: Option<u64>,
    /// Ladder drift CSV.
    #[arg(long)]
    drift: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct FitArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Column to fit (default `value`).
    #[arg(long)]
    column: Option<String>,
    /// Abscissa column (default: the first column).
    #[arg(long)]
    x: Option<String>,
    /// Inclusive range `lo:hi` of the abscissa, after halving.
    #[arg(long)]
    range: Option<String>,
    /// Use x/2 as the abscissa (return series at even times).
    #[arg(long)]
    halve_x: bool,
    /// Keep only rows whose `graph` column equals this.
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct VerifyArgs {
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Flag values layered over a config file.
struct Layered {
    file: ConfigFile,
}

impl Layered {
    fn new(path: Option<&Path>, allowed: &[&str]) -> Result<Self, Failure> {
        let file = match path {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        file.check_keys(allowed)?;
        Ok(Layered { file })
    }

    fn string(&self, flag: &Option<String>, key: &str) -> Option<String> {
        flag.clone()
            .or_else(|| self.file.raw(key).map(str::to_string))
    }

    fn value<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, Failure>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => Ok(self.file.get(key)?),
        }
    }

    fn path(&self, flag: &Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.clone()
            .or_else(|| self.file.raw(key).map(PathBuf::from))
    }

    fn flag(&self, flag: bool, key: &str) -> Result<bool, Failure> {
        Ok(flag || self.file.get::<bool>(key)?.unwrap_or(false))
    }
}

fn require<T>(v: Option<T>, key: &str) -> Result<T, Failure> {
    v.ok_or_else(|| ConfigError::Missing(key.into()).into())
}

fn model(spec: &str, start: Option<&str>, budget: Option<&str>) -> Result<GraphModel, Failure> {
    let mut g = build_graph(spec)?;
    if let Some(b) = budget {
        let bytes = parse_byte_size(b).ok_or_else(|| ConfigError::Value {
            key: "memory-budget".into(),
            reason: format!("cannot read `{b}` as a byte size"),
        })?;
        g = g.with_memory_budget(bytes);
    }
    if let Some(s) = start {
        let coords: Vec<i64> = parse_list("start", s)?;
        let v = g.vertex_from_coords(&coords)?;
        g = g.with_root(v)?;
    }
    Ok(g)
}

/// Writes the whole report at once; files go through a `.partial` sibling
/// so a failed run never leaves a complete-looking file.
fn emit(path: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match path {
        None => io::stdout()
            .lock()
            .write_all(contents.as_bytes())
            .map_err(|e| Failure::new(exit::CONFIG, e.to_string())),
        Some(p) if p == Path::new("-") => emit(None, contents),
        Some(p) => {
            let tmp = partial_path(p);
            std::fs::write(&tmp, contents).map_err(|e| io_failure(&tmp, e))?;
            std::fs::rename(&tmp, p).map_err(|e| io_failure(p, e))
        }
    }
}

fn partial_path(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

const SIMULATE_KEYS: &[&str] = &[
    "graph",
    "start",
    "steps",
    "replicas",
    "first-replica",
    "seed",
    "workers",
    "construction",
    "checkpoints",
    "alpha",
    "track-positions",
    "output",
    "memory-budget",
];

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let c = Layered::new(a.config.as_deref(), SIMULATE_KEYS)?;
    let graph = require(c.string(&a.graph, "graph"), "graph")?;
    let start = c.string(&a.start, "start");
    let g = model(&graph, start.as_deref(), c.file.raw("memory-budget"))?;
    let steps = require(c.value(a.steps, "steps")?, "steps")?;
    let replicas = require(c.value(a.replicas, "replicas")?, "replicas")?;
    if replicas == 0 {
        return Err(ConfigError::Value {
            key: "replicas".into(),
            reason: "must be positive".into(),
        }
        .into());
    }
    let seed = require(c.value(a.seed, "seed")?, "seed")?;
    let workers = c
        .value(a.workers, "workers")?
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let construction: Construction = match c.string(&a.construction, "construction") {
        Some(s) => s.parse().map_err(|e: SampleError| ConfigError::Value {
            key: "construction".into(),
            reason: e.to_string(),
        })?,
        None => Construction::Direct,
    };
    let checkpoints = parse_checkpoints(
        &c.string(&a.checkpoints, "checkpoints")
            .unwrap_or("dyadic".into()),
        steps,
    )?;
    let lil_alphas = match c.string(&a.alpha, "alpha") {
        Some(s) => parse_list::<f64>("alpha", &s)?
            .into_iter()
            .map(check_alpha)
            .collect::<Result<_, _>>()?,
        None => vec![0.75],
    };
    let spec = EnsembleSpec {
        start: g.root(),
        steps,
        first_replica: c.value(a.first_replica, "first-replica")?.unwrap_or(0),
        replicas,
        seed,
        construction,
        policy: RecordPolicy {
            checkpoints,
            lil_alphas,
            track_positions: c.flag(a.track_positions, "track-positions")?,
        },
    };
    let output = c.path(&a.output, "output");
    let clock = Instant::now();
    let mut total_meetings = 0u64;
    let mut sink_to = |w: &mut dyn Write| {
        run_ensemble(&g, &spec, Execution::with_workers(workers), |s| {
            total_meetings += s.meetings;
            serde_json::to_writer(&mut *w, &s).map_err(io::Error::from)?;
            w.write_all(b"\n")
        })
    };
    let result = match output.as_deref() {
        None => sink_to(&mut io::stdout().lock()),
        Some(p) => {
            let tmp = partial_path(p);
            let file = File::create(&tmp).map_err(|e| io_failure(&tmp, e))?;
            let mut w = BufWriter::new(file);
            let r = sink_to(&mut w);
            w.flush().map_err(|e| io_failure(&tmp, e))?;
            if r.is_ok() {
                std::fs::rename(&tmp, p).map_err(|e| io_failure(p, e))?;
            }
            r
        }
    };
    match result {
        Ok(()) => {
            eprintln!(
                "replicas={replicas} meetings={total_meetings} wall={:.3}s",
                clock.elapsed().as_secs_f64()
            );
            Ok(())
        }
        Err(EnsembleError::Replica { replica, source }) => {
            let mut f: Failure = source.into();
            f.message = format!("replica {replica}: {}", f.message);
            Err(f)
        }
        Err(EnsembleError::Sink(e)) => Err(Failure::new(exit::CONFIG, e.to_string())),
        Err(EnsembleError::Pool(e)) => Err(Failure::new(exit::CONFIG, e)),
    }
}

const SERIES_KEYS: &[&str] = &["graph", "start", "nmax", "memory-budget", "output"];

fn series_csv(points: impl IntoIterator<Item = (u64, f64)>) -> String {
    let mut out = String::from("n,value\n");
    for (n, v) in points {
        let _ = writeln!(out, "{n},{v}");
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn oracle_series(which: &OracleCommand, a: &SeriesArgs) -> Result<(), Failure> {
    let c = Layered::new(a.config.as_deref(), SERIES_KEYS)?;
    let graph = require(c.string(&a.graph, "graph"), "graph")?;
    let start = c.string(&a.start, "start");
    let budget = c.string(&a.memory_budget, "memory-budget");
    let g = model(&graph, start.as_deref(), budget.as_deref())?;
    let nmax = require(c.value(a.nmax, "nmax")?, "nmax")?;
    let csv = match which {
        OracleCommand::Return(_) => {
            let s = oracle::return_probability_series(&g, nmax)?;
            let bipartite = g.is_bipartite();
            series_csv(
                s.points
                    .into_iter()
                    .filter(|&(n, _)| n >= 1 && (!bipartite || n % 2 == 0)),
            )
        }
        OracleCommand::Meetings(_) => {
            series_csv(oracle::meeting_expectation_series(&g, nmax)?.points)
        }
        OracleCommand::Persite(_) => series_csv(
            oracle::per_site_collision_series(&g, nmax, &[])?
                .series
                .points,
        ),
        OracleCommand::Distribution(_) => {
            let gt = crate::graph::truncate(&g, nmax as u32 + 1)?;
            let d = oracle::transition_vector(&gt, nmax)?;
            let mut out = String::from("vertex,probability\n");
            for &(i, p) in &d.entries {
                let _ = writeln!(out, "{},{p}", csv_field(&gt.vertex(i).to_string()));
            }
            out
        }
        OracleCommand::Identities(_) => unreachable!(),
    };
    emit(c.path(&a.output, "output").as_deref(), &csv)
}

fn verify(a: &VerifyArgs) -> Result<(), Failure> {
    let rows = oracle::identity_checks()?;
    let mut out = String::from("check,residual,pass\n");
    for r in &rows {
        let _ = writeln!(out, "{},{:e},{}", r.check, r.residual, r.pass);
    }
    emit(a.output.as_deref(), &out)?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    eprintln!("{} checks, {failed} failed", rows.len());
    if failed > 0 {
        return Err(Failure::new(
            exit::CHECK_FAILED,
            format!(
                "{failed} identity checks above {:e}",
                oracle::IDENTITY_TOLERANCE
            ),
        ));
    }
    Ok(())
}

const STATS_KEYS: &[&str] = &[
    "input",
    "r-range",
    "k-range",
    "dyadic",
    "growth",
    "lil",
    "alpha",
    "lil-after",
    "drift",
];

/// Streams summaries from JSONL files in order.
struct SummaryReader {
    files: std::vec::IntoIter<PathBuf>,
    current: Option<(PathBuf, io::Lines<BufReader<File>>, usize)>,
}

impl SummaryReader {
    fn new(files: Vec<PathBuf>) -> Self {
        SummaryReader {
            files: files.into_iter(),
            current: None,
        }
    }

    fn next_summary(&mut self) -> Result<Option<PairTrajectorySummary>, Failure> {
        loop {
            if self.current.is_none() {
                let Some(p) = self.files.next() else {
                    return Ok(None);
                };
                let f = File::open(&p).map_err(|e| io_failure(&p, e))?;
                self.current = Some((p, BufReader::new(f).lines(), 0));
            }
            let (path, lines, lineno) = self.current.as_mut().expect("open file");
            match lines.next() {
                None => self.current = None,
                Some(line) => {
                    *lineno += 1;
                    let line = line.map_err(|e| io_failure(path, e))?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    return serde_json::from_str(&line).map(Some).map_err(|e| {
                        Failure::new(exit::SCHEMA, format!("{}:{}: {e}", path.display(), lineno))
                    });
                }
            }
        }
    }
}

fn stats(a: StatsArgs) -> Result<(), Failure> {
    let c = Layered::new(a.config.as_deref(), STATS_KEYS)?;
    let mut inputs = a.input.clone();
    if inputs.is_empty() {
        if let Some(s) = c.file.raw("input") {
            inputs = s.split(',').map(|p| PathBuf::from(p.trim())).collect();
        }
    }
    if inputs.is_empty() {
        return Err(ConfigError::Missing("input".into()).into());
    }
    let mut reader = SummaryReader::new(inputs);
    let first = reader.next_summary()?;
    let range = |flag: &Option<String>, key: &str| -> Result<Option<(u32, u32)>, Failure> {
        match c.string(flag, key) {
            Some(s) => {
                let (lo, hi) = parse_range(key, &s)?;
                let cast = |v: u64| {
                    u32::try_from(v).map_err(|_| ConfigError::Value {
                        key: key.into(),
                        reason: "out of range".into(),
                    })
                };
                Ok(Some((cast(lo)?, cast(hi)?)))
            }
            None => Ok(None),
        }
    };
    let fallback = DyadicGrid::for_horizon(first.as_ref().map_or(1, |s| s.steps));
    let (r_lo, r_hi) = range(&a.r_range, "r-range")?.unwrap_or((fallback.r_lo, fallback.r_hi));
    let (k_lo, k_hi) = range(&a.k_range, "k-range")?.unwrap_or((fallback.k_lo, fallback.k_hi));
    let grid = DyadicGrid::new((r_lo, r_hi), (k_lo, k_hi))
        .map_err(|e| Failure::new(exit::CONFIG, e.to_string()))?;

    let dyadic_out = c.path(&a.dyadic, "dyadic");
    let growth_out = c.path(&a.growth, "growth");
    let lil_out = c.path(&a.lil, "lil");
    let drift_out = c.path(&a.drift, "drift");
    let nothing_requested =
        dyadic_out.is_none() && growth_out.is_none() && lil_out.is_none() && drift_out.is_none();
    let lil_after = c.value(a.lil_after, "lil-after")?.unwrap_or(1024);
    let alphas: Option<Vec<f64>> = c
        .string(&a.alpha, "alpha")
        .map(|s| parse_list::<f64>("alpha", &s))
        .transpose()?;

    let mut dyadic = DyadicAccumulator::new(grid);
    let mut growth = GrowthAccumulator::default();
    let mut drift = DriftAccumulator::default();
    let mut lil: Vec<LilReport> = Vec::new();
    let mut next = first;
    let mut seen = 0u64;
    while let Some(s) = next {
        seen += 1;
        dyadic.add(&s);
        growth.add(&s)?;
        if drift_out.is_some() {
            drift.add(&s)?;
        }
        if lil_out.is_some() {
            let wanted: Vec<f64> = match &alphas {
                Some(v) => v.clone(),
                None => s.lil.iter().map(|l| l.alpha).collect(),
            };
            if lil.is_empty() {
                lil = wanted
                    .iter()
                    .map(|&alpha| LilReport {
                        alpha,
                        after: lil_after,
                        ..Default::default()
                    })
                    .collect();
            }
            for rep in &mut lil {
                let one =
                    statistics::lil_envelope_check(std::slice::from_ref(&s), rep.alpha, lil_after)
                        .map_err(|e| match e {
                            StatsError::MissingAlpha(_) => {
                                Failure::new(exit::SCHEMA, e.to_string())
                            }
                            other => other.into(),
                        })?;
                rep.merge(&one);
            }
        }
        next = reader.next_summary()?;
    }

    if let Some(p) = dyadic_out.as_deref() {
        emit(Some(p), &statistics::dyadic_csv(&dyadic))?;
    } else if nothing_requested {
        emit(None, &statistics::dyadic_csv(&dyadic))?;
    }
    if let Some(p) = growth_out.as_deref() {
        emit(Some(p), &statistics::growth_csv(&growth.curves()))?;
    }
    if let Some(p) = lil_out.as_deref() {
        emit(Some(p), &statistics::lil_csv(&lil))?;
    }
    if let Some(p) = drift_out.as_deref() {
        emit(Some(p), &statistics::drift_csv(&drift.estimate()?))?;
    }
    eprintln!("summaries={seen}");
    Ok(())
}

const FIT_KEYS: &[&str] = &[
    "input", "column", "x", "range", "halve-x", "graph", "output",
];

fn fit(a: FitArgs) -> Result<(), Failure> {
    let c = Layered::new(a.config.as_deref(), FIT_KEYS)?;
    let input = require(c.path(&a.input, "input"), "input")?;
    let text = std::fs::read_to_string(&input).map_err(|e| io_failure(&input, e))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Failure::new(exit::SCHEMA, "empty CSV"))?
        .split(',')
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Failure::new(exit::SCHEMA, format!("no column `{name}`")))
    };
    let y_name = c.string(&a.column, "column").unwrap_or("value".into());
    let yi = col(&y_name)?;
    let xi = match c.string(&a.x, "x") {
        Some(x) => col(&x)?,
        None => 0,
    };
    let graph_filter = c.string(&a.graph, "graph");
    let gi = match &graph_filter {
        Some(_) => Some(col("graph")?),
        None => None,
    };
    let halve = c.flag(a.halve_x, "halve-x")?;
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != header.len() {
            return Err(Failure::new(
                exit::SCHEMA,
                format!("row {}: wrong field count", i + 2),
            ));
        }
        if let (Some(gi), Some(g)) = (gi, &graph_filter) {
            if f[gi] != g {
                continue;
            }
        }
        let bad = |what: &str| Failure::new(exit::SCHEMA, format!("row {}: bad {what}", i + 2));
        let mut x: u64 = f[xi].parse().map_err(|_| bad("abscissa"))?;
        if halve {
            if x % 2 == 1 {
                continue;
            }
            x /= 2;
        }
        if f[yi].is_empty() {
            continue;
        }
        let y: f64 = f[yi].parse().map_err(|_| bad("value"))?;
        points.push((x, y));
    }
    let (lo, hi) = match c.string(&a.range, "range") {
        Some(r) => parse_range("range", &r)?,
        None => (0, u64::MAX),
    };
    let f = statistics::estimate_exponent(&points, lo, hi)?;
    emit(
        c.path(&a.output, "output").as_deref(),
        &statistics::fit_csv(&f),
    )
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Oracle { which } => match &which {
            OracleCommand::Identities(a) => verify(a),
            OracleCommand::Return(a)
            | OracleCommand::Meetings(a)
            | OracleCommand::Persite(a)
            | OracleCommand::Distribution(a) => oracle_series(&which, a),
        },
        Command::Stats(a) => stats(a),
        Command::Fit(a) => fit(a),
        Command::Verify(a) => verify(&a),
    }
}

/// Parses arguments, runs the command, and maps failures to exit codes.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                exit::CONFIG
            } else {
                exit::OK
            });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
