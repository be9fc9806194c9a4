//! Run configuration: command-line flags, an optional flat `key = value`
//! file, and the IRRPER_PRECISION environment variable.
//!
//! Resolution order per field: flag, then config file, then environment
//! (precision only), then the built-in default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use irrper_core::curve::{CurveCase, CurveParams, ExceptionalRoot};
use irrper_core::engine::default_m_list;
use irrper_core::numeric::{Cplx, Execution, Precision};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::UsageError;

pub const PRECISION_ENV: &str = "IRRPER_PRECISION";
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Run the acceptance suite.
    Verify,
    /// Generic pipeline: limit, pushforward, Σ-periods, final value.
    Period,
    /// The approximation sequence P₍ₘ₎ and its extrapolated limit.
    Approx,
    /// The 4×4 period matrix on the curve itself.
    Direct,
    /// The λ² − λ + 1 = 0 pipeline.
    Exceptional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    Double,
    Extended,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::Double => Precision::Double,
            PrecisionArg::Extended => Precision::Extended,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "irrper", version, about = "Period determinants of d + dy on the Legendre curve")]
pub struct Cli {
    /// Mode (alternatively --mode).
    #[arg(value_enum)]
    pub mode_arg: Option<Mode>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// λ as "a+bi".
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    /// Comma-separated regularization indices.
    #[arg(long)]
    pub m: Option<String>,
    /// Quadrature tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub precision: Option<PrecisionArg>,
    /// Report destination (standard output when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Leave wall-clock timings out of the report.
    #[arg(long)]
    pub no_timings: bool,
    /// Flat key = value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Disable data parallelism.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    /// λ as given (or the default), for the echo.
    pub lambda_text: String,
    pub lambda: Complex64,
    /// Set when λ is (numerically) a root of λ² − λ + 1; the pipelines then
    /// use the root at full working precision.
    pub exceptional_root: Option<ExceptionalRoot>,
    pub m_list: Vec<u32>,
    pub tol: f64,
    pub precision: Precision,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub timings: bool,
    pub execution: Execution,
}

/// The configuration as written into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub mode: Mode,
    pub lambda_input: String,
    pub lambda: Cplx,
    pub m_list: Vec<u32>,
    pub tol: f64,
    pub precision: Precision,
    pub format: Format,
    pub execution: Execution,
    pub timings: bool,
}

impl RunConfig {
    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            mode: self.mode,
            lambda_input: self.lambda_text.clone(),
            lambda: Cplx { re: self.lambda.re, im: self.lambda.im },
            m_list: self.m_list.clone(),
            tol: self.tol,
            precision: self.precision,
            format: self.format,
            execution: self.execution,
            timings: self.timings,
        }
    }
}

/// Parse a flat `key = value` file; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| UsageError(format!("config line {}: expected key = value", n + 1)))?;
        let key = k.trim().replace('-', "_");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(UsageError(format!("config line {}: unknown key {key:?}", n + 1)));
        }
        out.insert(key, v.trim().trim_matches('"').to_string());
    }
    Ok(out)
}

const KNOWN_KEYS: [&str; 9] = ["mode", "lambda", "m", "tol", "precision", "out", "format", "timings", "execution"];

fn read_config(path: &Path) -> Result<BTreeMap<String, String>, UsageError> {
    let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))?;
    parse_config_text(&text)
}

pub fn parse_lambda(s: &str) -> Result<Complex64, UsageError> {
    let cleaned: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    Complex64::from_str(&cleaned).map_err(|_| UsageError(format!("cannot parse λ = {s:?} (expected a+bi)")))
}

pub fn parse_m_list(s: &str) -> Result<Vec<u32>, UsageError> {
    let list = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<u32>().map_err(|_| UsageError(format!("bad m value {t:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if list.is_empty() {
        return Err(UsageError("empty m-list".into()));
    }
    Ok(list)
}

fn parse_with<T: ValueEnum>(key: &str, s: &str) -> Result<T, UsageError> {
    T::from_str(s, true).map_err(|_| UsageError(format!("bad {key} value {s:?}")))
}

fn parse_bool(key: &str, s: &str) -> Result<bool, UsageError> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(UsageError(format!("bad {key} value {s:?}"))),
    }
}

fn exceptional_default() -> (String, Complex64) {
    ("0.5+0.8660254037844386i".into(), Complex64::new(0.5, 3f64.sqrt() / 2.0))
}

/// Merge flags, file and environment into a validated configuration.
pub fn resolve(cli: &Cli, env_precision: Option<&str>) -> Result<RunConfig, UsageError> {
    let file = match &cli.config {
        Some(p) => read_config(p)?,
        None => BTreeMap::new(),
    };
    let get = |k: &str| file.get(k).map(String::as_str);

    let mode = match (cli.mode_arg, cli.mode) {
        (Some(a), Some(b)) if a != b => return Err(UsageError("conflicting positional mode and --mode".into())),
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => match get("mode") {
            Some(s) => parse_with("mode", s)?,
            None => return Err(UsageError("no mode given".into())),
        },
    };

    let precision = match (cli.precision, get("precision"), env_precision) {
        (Some(p), _, _) => p.into(),
        (None, Some(s), _) => parse_with::<PrecisionArg>("precision", s)?.into(),
        (None, None, Some(s)) if !s.is_empty() => parse_with::<PrecisionArg>(PRECISION_ENV, s)?.into(),
        _ => Precision::Double,
    };

    let lambda_given = cli.lambda.clone().or_else(|| get("lambda").map(str::to_string));
    let (lambda_text, lambda) = match lambda_given {
        Some(t) => {
            let v = parse_lambda(&t)?;
            (t, v)
        }
        None if mode == Mode::Exceptional => exceptional_default(),
        None => ("2+0i".into(), Complex64::new(2.0, 0.0)),
    };
    let params = CurveParams::<f64>::new(lambda).map_err(|e| UsageError(e.to_string()))?;
    let exceptional_root = (params.case == CurveCase::Exceptional)
        .then_some(if lambda.im >= 0.0 { ExceptionalRoot::Plus } else { ExceptionalRoot::Minus });
    match (mode, exceptional_root) {
        (Mode::Exceptional, None) => return Err(UsageError(format!("λ = {lambda} is not a root of λ² − λ + 1"))),
        (Mode::Period | Mode::Direct, Some(_)) => {
            return Err(UsageError(format!("{mode:?} mode needs a generic λ; use exceptional mode")))
        }
        _ => {}
    }

    let m_given = cli.m.clone().or_else(|| get("m").map(str::to_string));
    let m_list = match m_given {
        Some(s) => parse_m_list(&s)?,
        None if mode == Mode::Approx => return Err(UsageError("approx mode needs --m".into())),
        None => default_m_list(),
    };
    if m_list.len() < 2 || m_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(UsageError("m-list must be strictly increasing with at least two entries".into()));
    }

    let tol = match (cli.tol, get("tol")) {
        (Some(t), _) => t,
        (None, Some(s)) => s.parse().map_err(|_| UsageError(format!("bad tol value {s:?}")))?,
        _ => DEFAULT_TOL,
    };
    if !(tol > 0.0 && tol <= 1e-4) {
        return Err(UsageError(format!("tol = {tol:e} must lie in (0, 1e-4]")));
    }

    let out = cli.out.clone().or_else(|| get("out").map(PathBuf::from));
    let format = match (cli.format, get("format")) {
        (Some(f), _) => f,
        (None, Some(s)) => parse_with("format", s)?,
        _ => Format::Json,
    };
    let timings = if cli.no_timings {
        false
    } else {
        match get("timings") {
            Some(s) => parse_bool("timings", s)?,
            None => true,
        }
    };
    let execution = if cli.sequential {
        Execution::Sequential
    } else {
        match get("execution") {
            Some("sequential") => Execution::Sequential,
            Some("parallel") | None => Execution::Parallel,
            Some(s) => return Err(UsageError(format!("bad execution value {s:?}"))),
        }
    };

    Ok(RunConfig { mode, lambda_text, lambda, exceptional_root, m_list, tol, precision, out, format, timings, execution })
}

/// Non-fatal remarks about the configuration, for standard error.
pub fn warnings(cfg: &RunConfig) -> Vec<String> {
    let mut w = Vec::new();
    if cfg.mode == Mode::Direct && cfg.precision != Precision::Extended {
        w.push("direct mode at double precision: Stokes and stability checks may be tolerance-limited; use --precision extended".into());
    }
    if let Ok(p) = CurveParams::<f64>::new(cfg.lambda) {
        w.extend(p.warnings);
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::parse_from(std::iter::once("irrper").chain(args.iter().copied()))
    }

    #[test]
    fn flags_win_over_file_and_env() {
        let dir = std::env::temp_dir().join(format!("irrper-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        std::fs::write(&path, "# test\nmode = approx\nm = 10, 20\nprecision = extended\nlambda = 3+1i\n").unwrap();
        let c = cli(&["--config", path.to_str().unwrap(), "--lambda", "2+0i"]);
        let cfg = resolve(&c, Some("double")).unwrap();
        assert_eq!(cfg.mode, Mode::Approx);
        assert_eq!(cfg.m_list, vec![10, 20]);
        assert_eq!(cfg.precision, Precision::Extended);
        assert_eq!(cfg.lambda, Complex64::new(2.0, 0.0));
        let c = cli(&["--config", path.to_str().unwrap(), "--precision", "double"]);
        assert_eq!(resolve(&c, None).unwrap().precision, Precision::Double);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn env_sets_default_precision() {
        let c = cli(&["period"]);
        assert_eq!(resolve(&c, Some("extended")).unwrap().precision, Precision::Extended);
        assert_eq!(resolve(&c, None).unwrap().precision, Precision::Double);
        assert!(resolve(&c, Some("quad")).is_err());
    }

    #[test]
    fn mode_requirements() {
        assert!(resolve(&cli(&["approx"]), None).is_err());
        assert!(resolve(&cli(&["approx", "--m", "10,20,40,80"]), None).is_ok());
        assert!(resolve(&cli(&["approx", "--m", "20,10"]), None).is_err());
        assert!(resolve(&cli(&["exceptional", "--lambda", "2"]), None).is_err());
        let e = resolve(&cli(&["exceptional", "--lambda", "0.5-0.8660254037844386i"]), None).unwrap();
        assert_eq!(e.exceptional_root, Some(ExceptionalRoot::Minus));
        assert!(resolve(&cli(&["period", "--lambda", "1"]), None).is_err());
        assert!(resolve(&cli(&["period", "--tol", "0.1"]), None).is_err());
        assert!(resolve(&cli(&[]), None).is_err());
    }

    #[test]
    fn lambda_forms() {
        assert_eq!(parse_lambda("2").unwrap(), Complex64::new(2.0, 0.0));
        assert_eq!(parse_lambda("2+0i").unwrap(), Complex64::new(2.0, 0.0));
        assert_eq!(parse_lambda("-1.5 - 2i").unwrap(), Complex64::new(-1.5, -2.0));
        assert!(parse_lambda("two").is_err());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(parse_config_text("colour = blue").is_err());
        assert!(parse_config_text("mode approx").is_err());
        let m = parse_config_text("timings = false  # trailing\n\nexecution = sequential").unwrap();
        assert_eq!(m.get("timings").map(String::as_str), Some("false"));
        assert_eq!(m.len(), 2);
    }
}
