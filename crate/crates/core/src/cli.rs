//! Command-line front end: argument parsing, config-file merging, and the
//! CSV / JSON tables each subcommand emits.
//!
//! Exit codes: 0 success, 1 internal failure, 2 invalid input,
//! 3 threshold pattern not found.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::bifurcation::{find_thresholds, profit_branches};
use crate::equilibria::{br_conjugate, enumerate_equilibria, pareto_optimum};
use crate::error::Error;
use crate::model::{EntangledGame, ModelParams};
use crate::oracle::{grid_equilibria, GridSpec};

pub const DEFAULT_A: f64 = 3.0;
pub const DEFAULT_B: f64 = 5.0;
pub const DEFAULT_D: f64 = 10.0;

/// Significant digits for machine-readable numbers.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Sample points per best-response locus in `brcurves`.
pub const CURVE_POINTS: usize = 1000;

/// Strengths checked by `verify`.
pub const VERIFY_GAMMAS: [f64; 9] = [0.0, 0.1, 0.255, 0.27, 0.285, 0.296, 0.3, 0.6, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format '{other}', expected csv or json")),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qcournot", version, about = "Equilibria of the entangled Cournot duopoly")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub d: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Write output here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Flat `key = value` file; flags take precedence.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// All equilibria at one entanglement strength.
    Equilibria {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_negative_numbers = true)]
        gamma: Option<f64>,
    },
    /// Profit branches over a range of strengths.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_negative_numbers = true)]
        from: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        to: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Strengths at which the number of equilibria changes.
    Thresholds {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Joint-profit optimum.
    Pareto {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sampled best-response loci of both firms.
    Brcurves {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_negative_numbers = true)]
        gamma: Option<f64>,
    },
    /// Cross-check the enumeration against the brute-force grid search.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
}

/// Failure of a CLI run, carrying its exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Invalid(String),
    Internal(String),
    PatternNotFound(Vec<usize>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Internal(_) => 1,
            Self::Invalid(_) => 2,
            Self::PatternNotFound(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Invalid(m) => write!(f, "invalid input: {m}"),
            Self::Internal(m) => write!(f, "internal error: {m}"),
            Self::PatternNotFound(counts) => write!(
                f,
                "equilibrium count pattern 3 -> 5 -> 1 not found; observed count sequence {counts:?}"
            ),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(_)
            | Error::GammaOutOfRange(_)
            | Error::InvalidRange(_)
            | Error::InvalidGrid(_) => Self::Invalid(e.to_string()),
            Error::PatternNotFound { observed } => Self::PatternNotFound(observed),
            _ => Self::Internal(e.to_string()),
        }
    }
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub gamma: Option<f64>,
    pub gamma_range: Option<(f64, f64, usize)>,
    pub output_format: Option<OutputFormat>,
    pub output_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn params(&self) -> Result<ModelParams, CliError> {
        Ok(ModelParams::new(self.a, self.b, self.d)?)
    }

    fn game(&self) -> Result<EntangledGame, CliError> {
        let gamma = self
            .gamma
            .ok_or_else(|| CliError::Invalid("--gamma is required".into()))?;
        Ok(EntangledGame::new(self.params()?, gamma)?)
    }

    fn range(&self) -> Result<(f64, f64, usize), CliError> {
        self.gamma_range
            .ok_or_else(|| CliError::Invalid("--from, --to and --steps are required".into()))
    }
}

/// Parses a flat `key = value` file. Blank lines and `#` comments are
/// skipped.
pub fn parse_config(text: &str) -> Result<HashMap<String, String>, CliError> {
    let mut out = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Invalid(format!("config line {}: expected key=value", n + 1)))?;
        out.insert(key.trim().to_ascii_lowercase(), value.trim().to_string());
    }
    Ok(out)
}

fn config_value<T: FromStr>(file: &HashMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    file.get(key)
        .map(|raw| {
            raw.parse::<T>()
                .map_err(|_| CliError::Invalid(format!("config key '{key}': cannot parse '{raw}'")))
        })
        .transpose()
}

/// Merges flags over the optional config file over the defaults.
pub fn resolve(
    common: &CommonArgs,
    gamma: Option<f64>,
    range: (Option<f64>, Option<f64>, Option<usize>),
) -> Result<RunConfig, CliError> {
    let file = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => HashMap::new(),
    };
    let a = common.a.or(config_value(&file, "a")?).unwrap_or(DEFAULT_A);
    let b = common.b.or(config_value(&file, "b")?).unwrap_or(DEFAULT_B);
    let d = common.d.or(config_value(&file, "d")?).unwrap_or(DEFAULT_D);
    let gamma = gamma.or(config_value(&file, "gamma")?);
    let from = range.0.or(config_value(&file, "from")?);
    let to = range.1.or(config_value(&file, "to")?);
    let steps = range.2.or(config_value(&file, "steps")?);
    let gamma_range = match (from, to, steps) {
        (Some(f), Some(t), Some(s)) => Some((f, t, s)),
        _ => None,
    };
    Ok(RunConfig {
        a,
        b,
        d,
        gamma,
        gamma_range,
        output_format: common.format.or(config_value(&file, "format")?),
        output_path: common.out.clone().or(config_value(&file, "out")?),
    })
}

/// Rounds to [`SIGNIFICANT_DIGITS`] and prints the shortest decimal that
/// reads back to the rounded value.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded = round_significant(x);
    if rounded == 0.0 {
        return "0".into();
    }
    let magnitude = rounded.abs();
    if !(1e-4..1e15).contains(&magnitude) {
        return format!("{rounded:e}");
    }
    format!("{rounded}")
}

fn round_significant(x: f64) -> f64 {
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("scientific notation parses")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Bool(bool),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Self::Num(x) => format_number(*x),
            Self::Int(n) => n.to_string(),
            Self::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Self::Num(x) if x.is_finite() => json!(round_significant(*x)),
            Self::Num(_) => Value::Null,
            Self::Int(n) => json!(n),
            Self::Bool(b) => json!(b),
        }
    }
}

/// Column-named rows, serialisable as CSV or JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Echoed under `"params"` in JSON output.
    pub params: Map<String, Value>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            writer
                .write_record(row.iter().map(Cell::text))
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    pub fn to_json(&self) -> String {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Object(
                    self.columns
                        .iter()
                        .zip(row)
                        .map(|(c, cell)| (c.to_string(), cell.json()))
                        .collect(),
                )
            })
            .collect();
        let doc = json!({ "params": Value::Object(self.params.clone()), "records": records });
        let mut text = serde_json::to_string_pretty(&doc).expect("serialisable");
        text.push('\n');
        text
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

fn base_params(config: &RunConfig) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("a".into(), Cell::Num(config.a).json());
    m.insert("b".into(), Cell::Num(config.b).json());
    m.insert("d".into(), Cell::Num(config.d).json());
    m
}

pub fn equilibria_table(config: &RunConfig) -> Result<Table, CliError> {
    let game = config.game()?;
    let mut params = base_params(config);
    params.insert("gamma".into(), Cell::Num(game.gamma()).json());
    let rows = enumerate_equilibria(&game)?
        .iter()
        .map(|eq| {
            vec![
                Cell::Num(game.gamma()),
                Cell::Num(eq.quantities.q1),
                Cell::Num(eq.quantities.q2),
                Cell::Num(eq.strategies.x1),
                Cell::Num(eq.strategies.x2),
                Cell::Num(eq.profits.u1),
                Cell::Num(eq.profits.u2),
                Cell::Bool(eq.symmetric),
                Cell::Bool(eq.negative_quantity),
                Cell::Num(eq.residual),
            ]
        })
        .collect();
    Ok(Table {
        columns: vec![
            "gamma",
            "q1",
            "q2",
            "x1",
            "x2",
            "u1",
            "u2",
            "symmetric",
            "negative_quantity",
            "residual",
        ],
        rows,
        params,
    })
}

pub fn sweep_table(config: &RunConfig) -> Result<Table, CliError> {
    let (from, to, steps) = config.range()?;
    let rows = profit_branches(&config.params()?, from, to, steps)?
        .iter()
        .map(|r| {
            vec![
                Cell::Num(r.gamma),
                Cell::Int(r.branch_id),
                Cell::Num(r.q1),
                Cell::Num(r.q2),
                Cell::Num(r.u1),
                Cell::Num(r.u2),
                Cell::Bool(r.symmetric),
                Cell::Num(r.u_pareto),
                Cell::Num(r.u_classical_sym),
            ]
        })
        .collect();
    let mut params = base_params(config);
    params.insert("from".into(), Cell::Num(from).json());
    params.insert("to".into(), Cell::Num(to).json());
    params.insert("steps".into(), json!(steps));
    Ok(Table {
        columns: vec![
            "gamma",
            "branch_id",
            "q1",
            "q2",
            "u1",
            "u2",
            "symmetric",
            "u_pareto",
            "u_classical_sym",
        ],
        rows,
        params,
    })
}

pub fn brcurves_table(config: &RunConfig) -> Result<Table, CliError> {
    let game = config.game()?;
    let a = game.params().a();
    let (lo, hi) = (a - 3.0, a + 3.0);
    let last = (CURVE_POINTS - 1) as f64;
    let samples: Vec<f64> = (0..CURVE_POINTS)
        .map(|k| if k + 1 == CURVE_POINTS { hi } else { lo + (hi - lo) * k as f64 / last })
        .collect();
    let rows = [1usize, 2]
        .iter()
        .flat_map(|&firm| {
            samples.iter().map(move |&q_j| {
                vec![
                    Cell::Num(q_j),
                    Cell::Num(br_conjugate(&game, q_j)),
                    Cell::Int(firm),
                ]
            })
        })
        .collect();
    let mut params = base_params(config);
    params.insert("gamma".into(), Cell::Num(game.gamma()).json());
    Ok(Table {
        columns: vec!["q_j", "q_i", "which_firm"],
        rows,
        params,
    })
}

pub fn thresholds_output(config: &RunConfig) -> Result<String, CliError> {
    let t = find_thresholds(&config.params()?)?;
    Ok(match config.output_format {
        None => format!(
            "gamma1={:.6}\ngamma2={:.6}\nbracket_width={:e}\n",
            t.gamma1, t.gamma2, t.bracket_width
        ),
        Some(format) => Table {
            columns: vec!["gamma1", "gamma2", "bracket_width"],
            rows: vec![vec![Cell::Num(t.gamma1), Cell::Num(t.gamma2), Cell::Num(t.bracket_width)]],
            params: base_params(config),
        }
        .render(format),
    })
}

pub fn pareto_output(config: &RunConfig) -> Result<String, CliError> {
    let p = pareto_optimum(&config.params()?);
    Ok(match config.output_format {
        None => format!(
            "q_star={:.6}\nalpha={:.6}\nbeta={:.6}\nprofit_each={:.6}\nfoc_residual={:e}\n",
            p.q_star,
            p.alpha,
            p.beta,
            p.profit_each,
            p.foc_residual()
        ),
        Some(format) => Table {
            columns: vec!["q_star", "alpha", "beta", "profit_each", "foc_residual"],
            rows: vec![vec![
                Cell::Num(p.q_star),
                Cell::Num(p.alpha),
                Cell::Num(p.beta),
                Cell::Num(p.profit_each),
                Cell::Num(p.foc_residual()),
            ]],
            params: base_params(config),
        }
        .render(format),
    })
}

/// Pointwise tolerance between oracle and enumeration.
pub const VERIFY_TOL: f64 = 1e-5;

/// One line per strength in [`VERIFY_GAMMAS`]; `Ok(false)` if any fails.
pub fn verify_output(config: &RunConfig) -> Result<(String, bool), CliError> {
    let params = config.params()?;
    let mut text = String::new();
    let mut all = true;
    for gamma in VERIFY_GAMMAS {
        let game = EntangledGame::new(params, gamma)?;
        let enumerated = enumerate_equilibria(&game)?;
        let oracle = grid_equilibria(&game, &GridSpec::default_for(&game))?;
        let max_gap = if enumerated.len() == oracle.len() {
            enumerated
                .iter()
                .zip(&oracle)
                .map(|(e, o)| (e.quantities.q1 - o.q1).abs().max((e.quantities.q2 - o.q2).abs()))
                .fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        let pass = max_gap <= VERIFY_TOL;
        all &= pass;
        text.push_str(&format!(
            "{} gamma={:.6} enumerated={} oracle={} max_gap={:e}\n",
            if pass { "PASS" } else { "FAIL" },
            gamma,
            enumerated.len(),
            oracle.len(),
            max_gap
        ));
    }
    Ok((text, all))
}

fn write_output(text: &str, path: Option<&Path>) -> Result<Option<String>, CliError> {
    match path {
        Some(p) => {
            std::fs::write(p, text)
                .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", p.display())))?;
            Ok(None)
        }
        None => Ok(Some(text.to_string())),
    }
}

/// Executes one parsed command. Returns the text destined for stdout
/// (`None` when it went to `--out`).
pub fn run(cli: &Cli) -> Result<Option<String>, CliError> {
    let none = (None, None, None);
    let (config, text) = match &cli.command {
        Command::Equilibria { common, gamma } => {
            let c = resolve(common, *gamma, none)?;
            let t = equilibria_table(&c)?.render(c.output_format.unwrap_or(OutputFormat::Csv));
            (c, t)
        }
        Command::Sweep {
            common,
            from,
            to,
            steps,
        } => {
            let c = resolve(common, None, (*from, *to, *steps))?;
            let t = sweep_table(&c)?.render(c.output_format.unwrap_or(OutputFormat::Csv));
            (c, t)
        }
        Command::Thresholds { common } => {
            let c = resolve(common, None, none)?;
            let t = thresholds_output(&c)?;
            (c, t)
        }
        Command::Pareto { common } => {
            let c = resolve(common, None, none)?;
            let t = pareto_output(&c)?;
            (c, t)
        }
        Command::Brcurves { common, gamma } => {
            let c = resolve(common, *gamma, none)?;
            let t = brcurves_table(&c)?.render(c.output_format.unwrap_or(OutputFormat::Csv));
            (c, t)
        }
        Command::Verify { common } => {
            let c = resolve(common, None, none)?;
            let (t, ok) = verify_output(&c)?;
            if !ok {
                return Err(CliError::Internal(format!("oracle disagreement\n{t}")));
            }
            (c, t)
        }
    };
    write_output(&text, config.output_path.as_deref())
}
