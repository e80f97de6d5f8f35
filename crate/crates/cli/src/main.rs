mod input;
mod output;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use critmarkets::abm::{self, AbmConfig};
use critmarkets::cusp::{self, CuspControl, StationaryDensity};
use critmarkets::fixedpoint::{Region, Stability};
use critmarkets::game::{
    classify_ts, complementarity, gparams_to_sdt, spillover, to_gparams, Player, TsPoint,
};
use critmarkets::logit::{logit_probs, sample_gumbel_argmax, total_variation, ChoiceProblem};
use critmarkets::qre::{self, CriticalOutcome, QreModel, XiConvention};
use critmarkets::sdt::{self, SdtModel};
use critmarkets::twin::{self, CoupledMarkets, Direction, StartBranch};
use critmarkets::verify::{self, Suite};

use input::{load_game, parse_list, Range};
use output::{csv_writer, num, write_json, RunManifest, ARTIFACT_VERSION};

const DEFAULT_SEED: u64 = 42;

/// Bad user input; exits with status 2.
#[derive(Debug)]
pub struct UsageError {
    pub field: String,
    pub reason: String,
}

impl UsageError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        UsageError {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid value for `{}`: {}", self.field, self.reason)
    }
}

impl std::error::Error for UsageError {}

/// Equilibria, bifurcation sets and crisis simulations for binary-choice
/// market models. CSV and JSON go to `--out` or stdout.
#[derive(Debug, Parser)]
#[command(name = "critmarkets", version)]
struct Cli {
    /// Worker threads for parallel subcommands (default: all cores).
    #[arg(long, global = true, env = "CRITMARKETS_THREADS")]
    threads: Option<usize>,

    /// Seed for stochastic subcommands.
    #[arg(long, global = true, env = "CRITMARKETS_SEED")]
    seed: Option<u64>,

    /// Output file; stdout when omitted.
    #[arg(long, global = true, env = "CRITMARKETS_OUT")]
    out: Option<PathBuf>,

    /// Where to write the run manifest (default: `<out>.manifest.json` when
    /// `--out` is given).
    #[arg(long, global = true, env = "CRITMARKETS_MANIFEST")]
    manifest: Option<PathBuf>,

    /// Re-run the configuration recorded in a manifest.
    #[arg(long)]
    replay: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum XiConv {
    Canonical,
    /// Precision on the integer payoff scale: four times smaller.
    Eq45,
}

impl From<XiConv> for XiConvention {
    fn from(c: XiConv) -> Self {
        match c {
            XiConv::Canonical => XiConvention::Canonical,
            XiConv::Eq45 => XiConvention::Integer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum SweepDirection {
    #[value(alias = "ascending")]
    Up,
    #[value(alias = "descending")]
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Start {
    High,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum SuiteArg {
    All,
    Game,
    Logit,
    Fixedpoint,
    Sdt,
    Qre,
    Cusp,
    Twin,
    Abm,
}

impl SuiteArg {
    fn suites(self) -> Vec<Suite> {
        match self {
            SuiteArg::All => Suite::ALL.to_vec(),
            SuiteArg::Game => vec![Suite::Game],
            SuiteArg::Logit => vec![Suite::Logit],
            SuiteArg::Fixedpoint => vec![Suite::Fixedpoint],
            SuiteArg::Sdt => vec![Suite::Sdt],
            SuiteArg::Qre => vec![Suite::Qre],
            SuiteArg::Cusp => vec![Suite::Cusp],
            SuiteArg::Twin => vec![Suite::Twin],
            SuiteArg::Abm => vec![Suite::Abm],
        }
    }
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
enum Command {
    /// Compare Gumbel-argmax sampling with the closed-form logit
    /// probabilities; emits JSON.
    GumbelCheck {
        /// Comma-separated utilities.
        #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
        utilities: ::std::vec::Vec<f64>,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        xi: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
    },
    /// Mean-field equilibria of the social model across a precision range;
    /// emits CSV (xi, equilibrium, stability).
    SdtSweep {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        h: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        j: f64,
        #[arg(long, default_value = "0.2:3:0.01", allow_hyphen_values = true)]
        xi_range: Range,
    },
    /// Logit equilibria over a precision grid; emits CSV
    /// (xi1, xi2, x1, x2, stability, region).
    QreSurface {
        /// Built-in name (chicken, harmony, stag-hunt, pd, chicken-paper) or JSON file.
        #[arg(long)]
        game: String,
        #[arg(long, default_value = "0:4:0.02", allow_hyphen_values = true)]
        xi1: Range,
        #[arg(long, default_value = "0:4:0.02", allow_hyphen_values = true)]
        xi2: Range,
        #[arg(long, value_enum, default_value_t = XiConv::Canonical)]
        xi_convention: XiConv,
    },
    /// Fold curve of the logit equilibrium map; emits CSV (xi1, xi2, x1, x2).
    QreCritical {
        #[arg(long)]
        game: String,
        #[arg(long, default_value = "0:4:0.02", allow_hyphen_values = true)]
        xi1: Range,
        #[arg(long, default_value = "0:4:0.02", allow_hyphen_values = true)]
        xi2: Range,
        #[arg(long, value_enum, default_value_t = XiConv::Canonical)]
        xi_convention: XiConv,
    },
    /// Equilibria of the cusp over a control grid; emits CSV
    /// (u1, u2, root, stability, region).
    CuspSurface {
        #[arg(long, default_value = "-2:4:0.05", allow_hyphen_values = true)]
        u1: Range,
        #[arg(long, default_value = "-3:3:0.05", allow_hyphen_values = true)]
        u2: Range,
    },
    /// Bifurcation boundary 4 u1^3 = 27 u2^2; emits CSV (u1, u2).
    CuspCritical {
        #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
        u1_max: f64,
        /// Points per branch.
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Stationary density of the stochastic cusp; emits CSV (x, p).
    CuspDensity {
        #[arg(long, allow_hyphen_values = true)]
        u1: f64,
        #[arg(long, allow_hyphen_values = true)]
        u2: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        xi: f64,
        #[arg(long, default_value_t = 801)]
        points: usize,
    },
    /// One-sided sweep of the first market's precision with the second held
    /// fixed; emits CSV (xi1, x1, x2, jumped) and a JSON jump summary.
    TwinCrises {
        #[arg(long)]
        game: String,
        #[arg(long, allow_hyphen_values = true)]
        xi2: f64,
        #[arg(long, default_value = "0:4:0.005", allow_hyphen_values = true)]
        xi1: Range,
        #[arg(long, value_enum)]
        direction: SweepDirection,
        /// Branch to start on.
        #[arg(long, value_enum, default_value_t = Start::High)]
        start: Start,
        #[arg(long, value_enum, default_value_t = XiConv::Canonical)]
        xi_convention: XiConv,
        /// Jump summary file (default: stderr).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Agent-based market simulation; emits CSV (t, p, x).
    AbmRun {
        /// JSON file with the simulation configuration.
        #[arg(long)]
        config: PathBuf,
        /// Per-agent choice matrix, one row per step.
        #[arg(long)]
        choices: Option<PathBuf>,
    },
    /// Utility coefficients and social parameters of each player; emits JSON.
    Transform {
        #[arg(long)]
        game: String,
    },
    /// Name the game at a point of the temptation/sucker plane.
    ClassifyTs {
        #[arg(long = "T", allow_hyphen_values = true)]
        t: f64,
        #[arg(long = "S", allow_hyphen_values = true)]
        s: f64,
    },
    /// Run the invariant suites; exits 1 if any check fails.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GumbelCheck { .. } => "gumbel-check",
            Command::SdtSweep { .. } => "sdt-sweep",
            Command::QreSurface { .. } => "qre-surface",
            Command::QreCritical { .. } => "qre-critical",
            Command::CuspSurface { .. } => "cusp-surface",
            Command::CuspCritical { .. } => "cusp-critical",
            Command::CuspDensity { .. } => "cusp-density",
            Command::TwinCrises { .. } => "twin-crises",
            Command::AbmRun { .. } => "abm-run",
            Command::Transform { .. } => "transform",
            Command::ClassifyTs { .. } => "classify-ts",
            Command::Verify { .. } => "verify",
        }
    }

    fn uses_seed(&self) -> bool {
        matches!(
            self,
            Command::GumbelCheck { .. } | Command::AbmRun { .. } | Command::Verify { .. }
        )
    }
}

/// What a run resolved to; stored in the manifest for replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Resolved {
    command: Command,
    out: Option<PathBuf>,
}

struct Outcome {
    outputs: Vec<PathBuf>,
    status: ExitCode,
}

impl Outcome {
    fn ok(outputs: Vec<PathBuf>) -> Self {
        Outcome {
            outputs,
            status: ExitCode::SUCCESS,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<UsageError>() || cause.is::<serde_json::Error>() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<critmarkets::Error>() {
            return if err.is_validation() { 2 } else { 1 };
        }
    }
    1
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(UsageError::new("threads", "must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let (resolved, seed) = match (&cli.replay, cli.command) {
        (Some(_), Some(_)) => {
            return Err(UsageError::new("replay", "cannot be combined with a subcommand").into());
        }
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            let m: RunManifest = serde_json::from_str(&text)?;
            let mut r: Resolved = serde_json::from_value(m.config)?;
            if cli.out.is_some() {
                r.out = cli.out.clone();
            }
            (r, cli.seed.or(m.seed))
        }
        (None, Some(command)) => (
            Resolved {
                command,
                out: cli.out.clone(),
            },
            cli.seed,
        ),
        (None, None) => {
            return Err(UsageError::new("command", "a subcommand or --replay is required").into())
        }
    };
    let seed = resolved
        .command
        .uses_seed()
        .then(|| seed.unwrap_or(DEFAULT_SEED));
    let t0 = Instant::now();
    let outcome = dispatch(&resolved.command, resolved.out.as_deref(), seed)?;
    let manifest_path = cli.manifest.clone().or_else(|| {
        resolved
            .out
            .as_ref()
            .map(|o| PathBuf::from(format!("{}.manifest.json", o.display())))
    });
    if let Some(path) = manifest_path {
        let manifest = RunManifest {
            subcommand: resolved.command.name().to_string(),
            config: serde_json::to_value(&resolved)?,
            seed,
            artifact_version: ARTIFACT_VERSION.to_string(),
            outputs: outcome.outputs,
            wall_clock_seconds: t0.elapsed().as_secs_f64(),
        };
        write_json(Some(&path), &manifest)?;
    }
    Ok(outcome.status)
}

fn stability(s: Stability) -> &'static str {
    match s {
        Stability::Stable => "stable",
        Stability::Unstable => "unstable",
        Stability::Critical => "critical",
    }
}

fn check_xi(field: &str, xi: f64) -> Result<()> {
    if !(xi.is_finite() && xi >= 0.0) {
        return Err(
            UsageError::new(field, format!("must be a finite value >= 0, got {xi}")).into(),
        );
    }
    Ok(())
}

fn check_range_xi(field: &str, r: &Range) -> Result<()> {
    check_xi(field, r.start)
}

fn dispatch(cmd: &Command, out: Option<&Path>, seed: Option<u64>) -> Result<Outcome> {
    let mut outputs: Vec<PathBuf> = out.map(Path::to_path_buf).into_iter().collect();
    match cmd {
        Command::GumbelCheck {
            utilities,
            xi,
            samples,
        } => {
            let p = ChoiceProblem::new(utilities.clone(), *xi)?;
            let analytic = logit_probs(&p);
            let empirical = sample_gumbel_argmax(&p, *samples, seed.unwrap_or(DEFAULT_SEED))?;
            let tv = total_variation(&analytic, &empirical);
            write_json(
                out,
                &serde_json::json!({ "analytic": analytic, "empirical": empirical, "tv_distance": tv }),
            )?;
        }
        Command::SdtSweep { h, j, xi_range } => {
            check_range_xi("xi-range", xi_range)?;
            SdtModel::social(*h, *j, 0.0)?;
            let rows = xi_range
                .values()
                .par_iter()
                .map(|&xi| {
                    let set = sdt::equilibria(&SdtModel::social(*h, *j, xi)?)?;
                    Ok(set
                        .points
                        .iter()
                        .map(|e| (xi, e.x[0], e.stability))
                        .collect::<Vec<_>>())
                })
                .collect::<critmarkets::Result<Vec<_>>>()?;
            let mut w = csv_writer(out)?;
            w.write_record(["xi", "equilibrium", "stability"])?;
            for (xi, x, s) in rows.into_iter().flatten() {
                w.write_record([num(xi), num(x), stability(s).to_string()])?;
            }
            w.flush()?;
        }
        Command::QreSurface {
            game,
            xi1,
            xi2,
            xi_convention,
        } => {
            check_range_xi("xi1", xi1)?;
            check_range_xi("xi2", xi2)?;
            let conv = XiConvention::from(*xi_convention);
            let base = QreModel::new(load_game(game)?, [0.0, 0.0])?;
            let cells: Vec<[f64; 2]> = xi2
                .values()
                .iter()
                .flat_map(|&b| xi1.values().into_iter().map(move |a| [a, b]))
                .collect();
            let rows = cells
                .par_iter()
                .map(|&xi| {
                    let m = base.with_xi([conv.to_canonical(xi[0]), conv.to_canonical(xi[1])])?;
                    let set = qre::qre_equilibria(&m)?;
                    let region = Region::from_count(set.len());
                    Ok(set
                        .points
                        .iter()
                        .map(|e| (xi, e.x, e.stability, region))
                        .collect::<Vec<_>>())
                })
                .collect::<critmarkets::Result<Vec<_>>>()?;
            let mut w = csv_writer(out)?;
            w.write_record(["xi1", "xi2", "x1", "x2", "stability", "region"])?;
            for (xi, x, s, r) in rows.into_iter().flatten() {
                w.write_record([
                    num(xi[0]),
                    num(xi[1]),
                    num(x[0]),
                    num(x[1]),
                    stability(s).to_string(),
                    r.as_str().to_string(),
                ])?;
            }
            w.flush()?;
        }
        Command::QreCritical {
            game,
            xi1,
            xi2,
            xi_convention,
        } => {
            check_range_xi("xi1", xi1)?;
            check_range_xi("xi2", xi2)?;
            let conv = XiConvention::from(*xi_convention);
            let scale = |r: &Range| {
                r.values()
                    .into_iter()
                    .map(|v| conv.to_canonical(v))
                    .collect::<Vec<_>>()
            };
            let outcome = qre::critical_set(&load_game(game)?, &scale(xi1), &scale(xi2))?;
            if let CriticalOutcome::NoComplementarity { player } = &outcome {
                log::warn!(
                    "player {player:?} has no strategic complementarity; the critical set is empty"
                );
            }
            let mut w = csv_writer(out)?;
            w.write_record(["xi1", "xi2", "x1", "x2"])?;
            for p in outcome.points() {
                w.write_record([
                    num(conv.from_canonical(p.xi[0])),
                    num(conv.from_canonical(p.xi[1])),
                    num(p.x[0]),
                    num(p.x[1]),
                ])?;
            }
            w.flush()?;
        }
        Command::CuspSurface { u1, u2 } => {
            let mut w = csv_writer(out)?;
            w.write_record(["u1", "u2", "root", "stability", "region"])?;
            for b in u2.values() {
                for a in u1.values() {
                    let c = CuspControl::plane(a, b)?;
                    let region = cusp::classify_region(&c);
                    for e in cusp::stationary_points(&c).points {
                        w.write_record([
                            num(a),
                            num(b),
                            num(e.x[0]),
                            stability(e.stability).to_string(),
                            region.as_str().to_string(),
                        ])?;
                    }
                }
            }
            w.flush()?;
        }
        Command::CuspCritical { u1_max, points } => {
            let mut w = csv_writer(out)?;
            w.write_record(["u1", "u2"])?;
            for p in cusp::critical_curve(*u1_max, *points)? {
                w.write_record([num(p[0]), num(p[1])])?;
            }
            w.flush()?;
        }
        Command::CuspDensity { u1, u2, xi, points } => {
            if *points < 2 {
                return Err(UsageError::new("points", "need at least 2").into());
            }
            let d = StationaryDensity::new(CuspControl::new(*u1, *u2, *xi)?)?;
            let mut w = csv_writer(out)?;
            w.write_record(["x", "p"])?;
            let h = 2.0 * d.bound / (*points - 1) as f64;
            for k in 0..*points {
                let x = -d.bound + h * k as f64;
                w.write_record([num(x), num(d.pdf(x)?)])?;
            }
            w.flush()?;
        }
        Command::TwinCrises {
            game,
            xi2,
            xi1,
            direction,
            start,
            xi_convention,
            summary,
        } => {
            check_xi("xi2", *xi2)?;
            check_range_xi("xi1", xi1)?;
            let conv = XiConvention::from(*xi_convention);
            let c = CoupledMarkets::new(load_game(game)?, [0.0, conv.to_canonical(*xi2)])?;
            let grid: Vec<f64> = xi1
                .values()
                .into_iter()
                .map(|v| conv.to_canonical(v))
                .collect();
            let dir = match direction {
                SweepDirection::Up => Direction::Ascending,
                SweepDirection::Down => Direction::Descending,
            };
            let start = match start {
                Start::High => StartBranch::High,
                Start::Low => StartBranch::Low,
            };
            let s = twin::one_sided_sweep(&c, Player::One, &grid, dir, start)?;
            let jumped = s.jump_cells(Player::One);
            let mut w = csv_writer(out)?;
            w.write_record(["xi1", "x1", "x2", "jumped"])?;
            let order: Vec<usize> = match dir {
                Direction::Ascending => (0..grid.len()).collect(),
                Direction::Descending => (0..grid.len()).rev().collect(),
            };
            for (k, &i) in order.iter().enumerate() {
                let x = s.states[k];
                w.write_record([
                    num(conv.from_canonical(grid[i])),
                    num(x[0]),
                    num(x[1]),
                    jumped.contains(&k).to_string(),
                ])?;
            }
            w.flush()?;
            let jumps: Vec<serde_json::Value> = s
                .jumps
                .iter()
                .map(|j| {
                    serde_json::json!({
                        "xi1_before": conv.from_canonical(j.xi_before),
                        "xi1_after": conv.from_canonical(j.xi_after),
                        "location": conv.from_canonical(j.location),
                        "before": j.before,
                        "after": j.after,
                        "markets": j.markets,
                        "co_collapse": j.markets == [true, true],
                    })
                })
                .collect();
            let report = serde_json::json!({
                "xi2": xi2,
                "direction": dir,
                "xi_convention": xi_convention,
                "jumps": jumps,
            });
            match summary {
                Some(p) => {
                    write_json(Some(p), &report)?;
                    outputs.push(p.clone());
                }
                None => eprintln!("{}", serde_json::to_string_pretty(&report)?),
            }
        }
        Command::AbmRun { config, choices } => {
            let text = std::fs::read_to_string(config)
                .with_context(|| format!("cannot read {}", config.display()))?;
            let mut cfg: AbmConfig = serde_json::from_str(&text)
                .map_err(|e| UsageError::new("config", format!("{}: {e}", config.display())))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.record_choices |= choices.is_some();
            let h = abm::run(&cfg)?;
            let mut w = csv_writer(out)?;
            w.write_record(["t", "p", "x"])?;
            for (t, (p, x)) in h.p.iter().zip(&h.x).enumerate() {
                w.write_record([t.to_string(), num(*p), num(*x)])?;
            }
            w.flush()?;
            if let (Some(path), Some(m)) = (choices, &h.choices) {
                let mut w = csv_writer(Some(path))?;
                let header: Vec<String> = std::iter::once("t".to_string())
                    .chain((0..cfg.n).map(|i| format!("agent{i}")))
                    .collect();
                w.write_record(&header)?;
                for (t, row) in m.iter().enumerate() {
                    w.write_record(
                        std::iter::once(t.to_string()).chain(row.iter().map(|c| c.to_string())),
                    )?;
                }
                w.flush()?;
                outputs.push(path.clone());
            }
        }
        Command::Transform { game } => {
            let g = load_game(game)?;
            let players: Vec<serde_json::Value> = Player::BOTH
                .iter()
                .map(|&p| {
                    let gp = to_gparams(&g, p);
                    serde_json::json!({
                        "player": p.index() + 1,
                        "payoffs": g.own_payoffs(p),
                        "gparams": gp,
                        "sdt": gparams_to_sdt(&gp),
                        "spillover": spillover(&gp),
                        "complementarity": complementarity(&gp),
                    })
                })
                .collect();
            write_json(out, &players)?;
        }
        Command::ClassifyTs { t, s } => {
            if !(t.is_finite() && s.is_finite()) {
                return Err(UsageError::new("T/S", "must be finite").into());
            }
            let mut w = output::sink(out)?;
            writeln!(w, "{}", classify_ts(TsPoint::new(*t, *s)))?;
            w.flush()?;
        }
        Command::Verify { suite } => {
            let mut w = output::sink(out)?;
            let report = verify::run(&suite.suites(), seed.unwrap_or(DEFAULT_SEED), |c| {
                // progress goes out even if the sink is a file
                let _ = writeln!(w, "{c}");
                let _ = w.flush();
            });
            let failed = report.failures().count();
            writeln!(w, "{} checks, {failed} failed", report.checks.len())?;
            w.flush()?;
            if failed > 0 {
                return Ok(Outcome {
                    outputs,
                    status: ExitCode::FAILURE,
                });
            }
        }
    }
    Ok(Outcome::ok(outputs))
}
