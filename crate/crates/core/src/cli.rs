//! Command-line front end.
//!
//! Every JSON output has the shape `{"manifest": ..., "result": ...}`; CSV outputs start with
//! a `# manifest: {...}` comment line. Exit codes: 0 success, 2 input error, 3 the verified
//! profile is not a PBE.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::equilibrium::{
    self, DiscountBound, GameSpec, Horizon, Regime, RegularProfile, BOUND_GRID_STEP, BOUND_REFINE_WIDTH,
};
use crate::error::Error;
use crate::profiles::{self, Playout, SimulationConfig, SimulationResult, StrategyProfile};
use crate::transform::{self, ThresholdRow};
use crate::verifier::{self, DeviationReport, DEFAULT_BINS, DEFAULT_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_PBE: i32 = 3;

const DEFAULT_T_SWEEP: &str = "1,2,3,4,5,10,inf";

#[derive(Parser, Debug)]
#[command(name = "stopgame", version, about = "Solve, verify and simulate sender-receiver stopping games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Regular strategy profile: thresholds and values.
    Solve {
        #[command(flatten)]
        game: GameArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Critical discount bound for the game's horizon.
    Bounds {
        #[command(flatten)]
        game: GameArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// One-shot deviation check of a profile (exit 3 when it is not a PBE).
    Verify {
        #[command(flatten)]
        game: GameArgs,
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo playouts of a profile.
    Simulate {
        #[command(flatten)]
        game: GameArgs,
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Truncation horizon on the infinite horizon.
        #[arg(long)]
        max_periods: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Table over horizons or discount factors.
    Sweep {
        #[command(flatten)]
        game: GameArgs,
        #[arg(long, value_enum, default_value_t = SweepParam::T)]
        param: SweepParam,
        /// Comma-separated grid, e.g. `1,2,5,inf` or `0.2,0.4`.
        #[arg(long)]
        values: Option<String>,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        /// Number of evenly spaced points from `--from` to `--to` (delta sweeps).
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Reduce a game to uniform states.
    Transform {
        #[command(flatten)]
        game: GameArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args, Debug)]
pub struct GameArgs {
    /// Game spec: a JSON file path or an inline JSON object.
    #[arg(long)]
    pub game: String,
    /// Override the horizon (`N` or `inf`).
    #[arg(long)]
    pub horizon: Option<String>,
    /// Override the discount factor.
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    /// `regular`, or a profile JSON file path or inline object.
    #[arg(long, default_value = "regular")]
    pub profile: String,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Primary output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Secondary CSV table (thresholds, stop times or threshold map).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    #[value(name = "T")]
    T,
    #[value(name = "delta")]
    Delta,
}

/// Provenance attached to every output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Game argument as given: a path or the inline JSON text.
    pub input: String,
    pub game: GameSpec,
    pub settings: BTreeMap<String, serde_json::Value>,
    pub outputs: Vec<String>,
    pub started_unix: f64,
    pub elapsed_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Output<T> {
    pub manifest: RunManifest,
    pub result: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutput {
    #[serde(flatten)]
    pub summary: SimulationResult,
    /// The single playout when one replication was requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub playout: Option<Playout>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformOutput {
    pub uniform_game: GameSpec,
    pub thresholds: Vec<ThresholdRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub horizon: Horizon,
    pub delta: f64,
    /// Period-1 threshold in original state units.
    pub threshold: f64,
    pub sender_value: Option<f64>,
    pub receiver_value: Option<f64>,
    pub bound_label: String,
    pub bound: f64,
    pub regime: Regime,
    /// Verdict of the one-shot check on the regular profile; `None` where it does not apply.
    pub verdict: Option<verifier::Verdict>,
    pub max_gap: Option<f64>,
}

/// Failure carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::input(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command; returns the exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

struct Context {
    subcommand: &'static str,
    input: String,
    game: GameSpec,
    settings: BTreeMap<String, serde_json::Value>,
    started: SystemTime,
    clock: Instant,
}

impl Context {
    fn new(subcommand: &'static str, args: &GameArgs) -> CliResult<Self> {
        Ok(Self {
            subcommand,
            input: args.game.clone(),
            game: load_game(args)?,
            settings: BTreeMap::new(),
            started: SystemTime::now(),
            clock: Instant::now(),
        })
    }

    fn set(&mut self, key: &str, value: impl Serialize) {
        self.settings.insert(key.to_string(), serde_json::to_value(value).expect("setting serializes"));
    }

    fn manifest(&self, output: &OutputArgs) -> RunManifest {
        let outputs = [&output.out, &output.csv]
            .into_iter()
            .flatten()
            .map(|p| p.display().to_string())
            .collect();
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: self.subcommand.to_string(),
            input: self.input.clone(),
            game: self.game.clone(),
            settings: self.settings.clone(),
            outputs,
            started_unix: self.started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
            elapsed_seconds: self.clock.elapsed().as_secs_f64(),
        }
    }
}

fn read_json_arg(arg: &str, what: &str) -> CliResult<(String, String)> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') {
        return Ok((arg.to_string(), "inline JSON".to_string()));
    }
    let text = fs::read_to_string(arg).map_err(|e| CliError::input(format!("cannot read {what} file {arg}: {e}")))?;
    Ok((text, arg.to_string()))
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, source: &str, what: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| {
        CliError::input(format!("invalid {what} ({source}) at line {} column {}: {e}", e.line(), e.column()))
    })
}

fn parse_horizon(s: &str) -> CliResult<Horizon> {
    s.parse::<Horizon>().map_err(CliError::from)
}

pub fn load_game(args: &GameArgs) -> CliResult<GameSpec> {
    let (text, source) = read_json_arg(&args.game, "game")?;
    let mut game: GameSpec = parse_json(&text, &source, "game spec")?;
    if let Some(h) = &args.horizon {
        game = game.with_horizon(parse_horizon(h)?)?;
    }
    if let Some(d) = args.delta {
        game = game.with_delta(d)?;
    }
    Ok(game)
}

fn load_profile(args: &ProfileArgs, game: &GameSpec) -> CliResult<StrategyProfile> {
    let profile = if args.profile == "regular" {
        transform::solve_general(game)?.to_strategy()
    } else {
        let (text, source) = read_json_arg(&args.profile, "profile")?;
        parse_json(&text, &source, "strategy profile")?
    };
    profile.validate(game)?;
    Ok(profile)
}

fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::input(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_text<T: Serialize>(manifest: &RunManifest, result: &T) -> String {
    let doc = Output { manifest: manifest.clone(), result };
    let mut s = serde_json::to_string_pretty(&doc).expect("output serializes");
    s.push('\n');
    s
}

fn csv_text(manifest: &RunManifest, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8");
    format!("# manifest: {}\n{body}", serde_json::to_string(manifest).expect("manifest serializes"))
}

/// Shortest round-trip decimal, in exponent form for very small or large magnitudes.
fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn display(x: f64) -> String {
    format!("{x:.5}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn opt_display(x: Option<f64>) -> String {
    x.map(display).unwrap_or_default()
}

/// Writes the JSON or CSV primary output and the optional secondary CSV.
fn emit<T: Serialize>(
    ctx: &Context,
    output: &OutputArgs,
    default: Format,
    result: &T,
    table: (&[&str], Vec<Vec<String>>),
) -> CliResult<()> {
    let manifest = ctx.manifest(output);
    let (header, rows) = table;
    let primary = match output.format.unwrap_or(default) {
        Format::Json => json_text(&manifest, result),
        Format::Csv => csv_text(&manifest, header, &rows),
    };
    write_text(output.out.as_deref(), &primary)?;
    if let Some(p) = &output.csv {
        write_text(Some(p), &csv_text(&manifest, header, &rows))?;
    }
    Ok(())
}

fn solve_rows(game: &GameSpec, profile: &RegularProfile) -> CliResult<Vec<Vec<String>>> {
    let strategy = profile.to_strategy();
    let values = if game.horizon() == Horizon::Infinite && game.delta() >= 1.0 {
        None
    } else {
        Some(verifier::continuation_values(game, &strategy)?)
    };
    let periods: Vec<u32> = match game.horizon() {
        Horizon::Finite(n) => (1..=n).collect(),
        Horizon::Infinite => vec![1],
    };
    Ok(periods
        .into_iter()
        .map(|t| {
            let b = profile.thresholds.at(t);
            let (s, r) = match &values {
                Some(v) => {
                    let (s, r) = v.at(t);
                    (Some(s), Some(r))
                }
                None => (None, None),
            };
            vec![
                game.horizon().to_string(),
                t.to_string(),
                num(b),
                display(b),
                opt(s),
                opt(r),
                opt_display(s),
                opt_display(r),
            ]
        })
        .collect())
}

const SOLVE_HEADER: &[&str] = &[
    "horizon",
    "period",
    "threshold",
    "threshold_5dp",
    "sender_value",
    "receiver_value",
    "sender_value_5dp",
    "receiver_value_5dp",
];

fn cmd_solve(game: &GameArgs, output: &OutputArgs) -> CliResult<i32> {
    let ctx = Context::new("solve", game)?;
    let profile = transform::solve_general(&ctx.game)?;
    for w in &profile.warnings {
        eprintln!("warning: {w}");
    }
    let rows = solve_rows(&ctx.game, &profile)?;
    emit(&ctx, output, Format::Json, &profile, (SOLVE_HEADER, rows))?;
    Ok(EXIT_OK)
}

const BOUND_HEADER: &[&str] =
    &["label", "value", "value_5dp", "grid_step", "refine_width", "crossings", "multiple_crossings", "valid_tail"];

fn bound_row(b: &DiscountBound) -> Vec<String> {
    vec![
        b.label.clone(),
        num(b.value),
        display(b.value),
        num(b.grid_step),
        num(b.refine_width),
        b.crossings.to_string(),
        b.multiple_crossings.to_string(),
        b.valid_tail.to_string(),
    ]
}

fn cmd_bounds(game: &GameArgs, output: &OutputArgs) -> CliResult<i32> {
    let mut ctx = Context::new("bounds", game)?;
    ctx.set("grid_step", BOUND_GRID_STEP);
    ctx.set("refine_width", BOUND_REFINE_WIDTH);
    let bound = transform::bound_general(&ctx.game)?;
    if bound.multiple_crossings {
        eprintln!("warning: the bound functional changes sign {} times on the grid", bound.crossings);
    }
    if !bound.valid_tail {
        eprintln!("warning: the bound functional is negative at delta = 1; reporting 1");
    }
    let row = bound_row(&bound);
    emit(&ctx, output, Format::Json, &bound, (BOUND_HEADER, vec![row]))?;
    Ok(EXIT_OK)
}

const VERIFY_HEADER: &[&str] = &["player", "period", "message", "threshold", "probability", "off_path", "gap", "gap_5dp"];

fn verify_rows(rep: &DeviationReport) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for c in &rep.sender {
        rows.push(vec![
            "sender".into(),
            c.period.to_string(),
            String::new(),
            num(c.threshold),
            String::new(),
            String::new(),
            num(c.gap()),
            display(c.gap()),
        ]);
    }
    for c in &rep.receiver {
        rows.push(vec![
            "receiver".into(),
            c.period.to_string(),
            c.message.to_string(),
            String::new(),
            num(c.probability),
            c.off_path.to_string(),
            num(c.gap),
            display(c.gap),
        ]);
    }
    rows
}

fn cmd_verify(game: &GameArgs, profile: &ProfileArgs, bins: usize, tol: f64, output: &OutputArgs) -> CliResult<i32> {
    let mut ctx = Context::new("verify", game)?;
    ctx.set("bins", bins);
    ctx.set("tol", tol);
    ctx.set("profile", &profile.profile);
    let strategy = load_profile(profile, &ctx.game)?;
    let report = verifier::verify_pbe(&ctx.game, &strategy, bins, tol)?;
    emit(&ctx, output, Format::Json, &report, (VERIFY_HEADER, verify_rows(&report)))?;
    let table = report.table();
    if output.out.is_some() {
        print!("{table}");
    } else {
        eprint!("{table}");
    }
    Ok(if report.is_pbe() { EXIT_OK } else { EXIT_NOT_PBE })
}

const SIM_HEADER: &[&str] = &["stop_time", "count", "share"];

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    game: &GameArgs,
    profile: &ProfileArgs,
    reps: u64,
    seed: u64,
    max_periods: Option<u64>,
    workers: Option<usize>,
    output: &OutputArgs,
) -> CliResult<i32> {
    let mut ctx = Context::new("simulate", game)?;
    if reps == 0 {
        return Err(CliError::input("--reps must be at least 1"));
    }
    let strategy = load_profile(profile, &ctx.game)?;
    let config = SimulationConfig { replications: reps, seed, max_periods, workers };
    let truncation = profiles::truncation_horizon(&ctx.game, max_periods);
    ctx.set("reps", reps);
    ctx.set("seed", seed);
    ctx.set("profile", &profile.profile);
    ctx.set("max_periods", truncation);
    ctx.set("truncation_tol", profiles::TRUNCATION_TOL);
    ctx.set("workers", workers);
    let summary = profiles::simulate(&ctx.game, &strategy, &config)?;
    let playout = if reps == 1 {
        let mut rng = profiles::replication_rng(seed, 0);
        Some(profiles::play_once(&ctx.game, &strategy, &mut rng, max_periods)?)
    } else {
        None
    };
    let n = summary.replications as f64;
    let mut rows: Vec<Vec<String>> = summary
        .stop_time_histogram
        .iter()
        .map(|r| vec![r.stop_time.to_string(), r.count.to_string(), num(r.count as f64 / n)])
        .collect();
    rows.push(vec!["truncated".into(), summary.truncated.to_string(), num(summary.truncated_fraction)]);
    let result = SimulationOutput { summary, playout };
    emit(&ctx, output, Format::Json, &result, (SIM_HEADER, rows))?;
    Ok(EXIT_OK)
}

fn sweep_grid(
    param: SweepParam,
    values: Option<&str>,
    from: Option<f64>,
    to: Option<f64>,
    steps: Option<usize>,
) -> CliResult<Vec<String>> {
    let grid: Vec<String> = match (values, from, to) {
        (Some(v), None, None) => v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
        (None, Some(a), Some(b)) => match param {
            SweepParam::T => {
                if a.fract() != 0.0 || b.fract() != 0.0 || a < 1.0 {
                    return Err(CliError::input("horizon ranges need positive integer endpoints"));
                }
                (a as u64..=b as u64).map(|t| t.to_string()).collect()
            }
            SweepParam::Delta => {
                let n = steps.unwrap_or(2);
                if n == 0 || a > b {
                    Vec::new()
                } else if n == 1 {
                    vec![num(a)]
                } else {
                    (0..n).map(|i| num(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
                }
            }
        },
        (None, None, None) => match param {
            SweepParam::T => DEFAULT_T_SWEEP.split(',').map(String::from).collect(),
            SweepParam::Delta => return Err(CliError::input("a delta sweep needs --values or --from/--to")),
        },
        _ => return Err(CliError::input("give either --values or both --from and --to")),
    };
    if grid.is_empty() {
        return Err(CliError::input("the sweep range is empty"));
    }
    Ok(grid)
}

const SWEEP_HEADER: &[&str] = &[
    "horizon",
    "delta",
    "threshold",
    "threshold_5dp",
    "sender_value",
    "receiver_value",
    "bound_label",
    "bound",
    "bound_5dp",
    "regime",
    "verdict",
    "max_gap",
];

fn sweep_row(game: &GameSpec, bins: usize, tol: f64, bounds: &mut BTreeMap<String, DiscountBound>) -> CliResult<SweepRow> {
    let profile = transform::solve_general(game)?;
    let key = game.horizon().to_string();
    let bound = match bounds.get(&key) {
        Some(b) => b.clone(),
        None => {
            let b = transform::bound_general(game)?;
            bounds.insert(key, b.clone());
            b
        }
    };
    let regime = transform::classify_general(game)?.regime;
    let (verdict, max_gap) = if game.horizon() == Horizon::Infinite && game.delta() >= 1.0 {
        (None, None)
    } else {
        let rep = verifier::verify_pbe(game, &profile.to_strategy(), bins, tol)?;
        (Some(rep.verdict), Some(rep.max_gap))
    };
    Ok(SweepRow {
        horizon: game.horizon(),
        delta: game.delta(),
        threshold: profile.thresholds.first(),
        sender_value: profile.sender_value,
        receiver_value: profile.receiver_value,
        bound_label: bound.label,
        bound: bound.value,
        regime,
        verdict,
        max_gap,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    game: &GameArgs,
    param: SweepParam,
    values: Option<&str>,
    from: Option<f64>,
    to: Option<f64>,
    steps: Option<usize>,
    bins: usize,
    tol: f64,
    output: &OutputArgs,
) -> CliResult<i32> {
    let mut ctx = Context::new("sweep", game)?;
    let grid = sweep_grid(param, values, from, to, steps)?;
    ctx.set("param", match param {
        SweepParam::T => "T",
        SweepParam::Delta => "delta",
    });
    ctx.set("values", &grid);
    ctx.set("bins", bins);
    ctx.set("tol", tol);
    ctx.set("grid_step", BOUND_GRID_STEP);
    ctx.set("refine_width", BOUND_REFINE_WIDTH);
    let mut bounds = BTreeMap::new();
    let mut rows = Vec::with_capacity(grid.len());
    for v in &grid {
        let point = match param {
            SweepParam::T => ctx.game.with_horizon(parse_horizon(v)?)?,
            SweepParam::Delta => {
                let d: f64 = v.parse().map_err(|_| CliError::input(format!("not a discount factor: {v:?}")))?;
                ctx.game.with_delta(d)?
            }
        };
        rows.push(sweep_row(&point, bins, tol, &mut bounds)?);
    }
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.horizon.to_string(),
                num(r.delta),
                num(r.threshold),
                display(r.threshold),
                opt(r.sender_value),
                opt(r.receiver_value),
                r.bound_label.clone(),
                num(r.bound),
                display(r.bound),
                r.regime.to_string(),
                r.verdict.map(|v| v.to_string()).unwrap_or_else(|| "n/a".into()),
                opt(r.max_gap),
            ]
        })
        .collect();
    emit(&ctx, output, Format::Csv, &rows, (SWEEP_HEADER, table))?;
    Ok(EXIT_OK)
}

const TRANSFORM_HEADER: &[&str] = &["period", "uniform_threshold", "original_threshold", "original_threshold_5dp"];

fn cmd_transform(game: &GameArgs, output: &OutputArgs) -> CliResult<i32> {
    let ctx = Context::new("transform", game)?;
    let tg = transform::to_uniform(&ctx.game)?;
    let uniform = equilibrium::solve(&tg.uniform_game)?;
    let periods: Vec<u32> = match ctx.game.horizon() {
        Horizon::Finite(n) => (1..=n).collect(),
        Horizon::Infinite => vec![1],
    };
    let thresholds = tg.threshold_table(&periods.iter().map(|&t| uniform.thresholds.at(t)).collect::<Vec<_>>())?;
    let rows = periods
        .iter()
        .zip(&thresholds)
        .map(|(t, r)| vec![t.to_string(), num(r.uniform), num(r.original), display(r.original)])
        .collect();
    let result = TransformOutput { uniform_game: tg.uniform_game.clone(), thresholds };
    emit(&ctx, output, Format::Json, &result, (TRANSFORM_HEADER, rows))?;
    Ok(EXIT_OK)
}

/// Runs a parsed command; returns the exit code on success.
pub fn run(cli: &Cli) -> CliResult<i32> {
    match &cli.command {
        Command::Solve { game, output } => cmd_solve(game, output),
        Command::Bounds { game, output } => cmd_bounds(game, output),
        Command::Verify { game, profile, bins, tol, output } => cmd_verify(game, profile, *bins, *tol, output),
        Command::Simulate { game, profile, reps, seed, max_periods, workers, output } => {
            cmd_simulate(game, profile, *reps, *seed, *max_periods, *workers, output)
        }
        Command::Sweep { game, param, values, from, to, steps, bins, tol, output } => {
            cmd_sweep(game, *param, values.as_deref(), *from, *to, *steps, *bins, *tol, output)
        }
        Command::Transform { game, output } => cmd_transform(game, output),
    }
}
