//! Scenario configuration: defaults, a `key = value` file, and flag overrides.
//!
//! Resolution order is flags > file > defaults. Unknown keys are rejected
//! wherever they appear, and every value is parsed and range-checked with
//! the offending key named in the error.
//!
//! File format: one `key = value` per line; blank lines and lines starting
//! with `#` are ignored; a key may appear at most once per file. Lists are
//! comma separated (`deltas = 1, 0.8, 0.5`).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown key `{key}` ({origin})")]
    UnknownKey { key: String, origin: String },
    #[error("duplicate key `{key}` at line {line}")]
    DuplicateKey { key: String, line: usize },
    #[error("malformed line {line}: `{text}` (expected key = value)")]
    Malformed { line: usize, text: String },
    #[error("malformed override `{0}` (expected --set key=value)")]
    MalformedOverride(String),
    #[error("key `{key}`: cannot parse `{value}` as {expected}")]
    BadValue { key: String, value: String, expected: &'static str },
    #[error("key `{key}`: value {value} is out of range, must satisfy {bound}")]
    OutOfRange { key: String, value: String, bound: String },
    #[error("unknown scenario `{0}` (expected one of: {names})", names = ScenarioName::ALL.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "))]
    UnknownScenario(String),
    #[error("no scenario given (use --scenario or a `scenario` key)")]
    MissingScenario,
    #[error("cannot read config file {path}: {message}")]
    Io { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioName {
    IpdNominal,
    PidNominal,
    IpdDelta,
    PidDelta,
    IpAttempt,
    StabmapFixedT,
    StabmapAllT,
    Compare,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 8] = [
        Self::IpdNominal,
        Self::PidNominal,
        Self::IpdDelta,
        Self::PidDelta,
        Self::IpAttempt,
        Self::StabmapFixedT,
        Self::StabmapAllT,
        Self::Compare,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::IpdNominal => "ipd-nominal",
            Self::PidNominal => "pid-nominal",
            Self::IpdDelta => "ipd-delta",
            Self::PidDelta => "pid-delta",
            Self::IpAttempt => "ip-attempt",
            Self::StabmapFixedT => "stabmap-fixed-t",
            Self::StabmapAllT => "stabmap-all-t",
            Self::Compare => "compare",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| ConfigError::UnknownScenario(s.to_string()))
    }
}

/// Every key accepted in a config file or through `--set`.
pub const KEYS: &[&str] = &[
    "scenario",
    "out",
    "seed",
    "delta",
    "deltas",
    "sigma",
    "h",
    "duration",
    "y0",
    "alpha",
    "t_filter",
    "ipd_pole",
    "pid_pole",
    "ref_start",
    "ref_end",
    "ref_t0",
    "ref_t1",
    "ip_alpha",
    "ip_kp",
    "kp_min",
    "kp_max",
    "kp_count",
    "alpha_min",
    "alpha_max",
    "alpha_count",
    "t_min",
    "t_max",
    "t_count",
    "xval_samples",
];

/// Fully resolved scenario parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: ScenarioName,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Actuator effectiveness for the single-δ scenarios.
    pub delta: f64,
    /// δ set for `*-delta` and `compare`; `None` means the scenario default.
    pub deltas: Option<Vec<f64>>,
    pub sigma: f64,
    pub h: f64,
    pub duration: f64,
    pub y0: f64,
    pub alpha: f64,
    pub t_filter: f64,
    /// iPD error dynamics are placed at `(s + ipd_pole)²`.
    pub ipd_pole: f64,
    /// PID closed loop is placed at `(s + pid_pole)³`.
    pub pid_pole: f64,
    pub ref_start: f64,
    pub ref_end: f64,
    pub ref_t0: f64,
    pub ref_t1: f64,
    pub ip_alpha: f64,
    pub ip_kp: f64,
    pub kp_min: f64,
    pub kp_max: f64,
    pub kp_count: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_count: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
    pub xval_samples: usize,
}

impl ScenarioConfig {
    /// Defaults for `name`: the nominal iPD/PID setup with α = 0.5,
    /// `(s + 0.5)²`, `(s + 0.66)³`, σ = 0.01, y(0) = -0.05, h = 1 ms, 20 s.
    pub fn defaults(name: ScenarioName) -> Self {
        Self {
            name,
            out_dir: PathBuf::from("out"),
            seed: 1,
            delta: 1.0,
            deltas: None,
            sigma: 0.01,
            h: 1e-3,
            duration: 20.0,
            y0: -0.05,
            alpha: 0.5,
            t_filter: 0.1,
            ipd_pole: 0.5,
            pid_pole: 0.66,
            ref_start: 0.0,
            ref_end: 1.0,
            ref_t0: 1.0,
            ref_t1: 6.0,
            ip_alpha: 1.0,
            ip_kp: 1.0,
            kp_min: -5.0,
            kp_max: 5.0,
            kp_count: 201,
            alpha_min: -5.0,
            alpha_max: 5.0,
            alpha_count: 201,
            t_min: 1e-3,
            t_max: 1.9,
            t_count: 25,
            xval_samples: 50,
        }
    }

    /// δ values the scenario runs over.
    pub fn delta_set(&self) -> Vec<f64> {
        match (&self.deltas, self.name) {
            (Some(d), ScenarioName::IpdDelta | ScenarioName::PidDelta | ScenarioName::Compare) => d.clone(),
            (None, ScenarioName::IpdDelta | ScenarioName::PidDelta) => vec![0.8, 0.5],
            (None, ScenarioName::Compare) => vec![1.0, 0.8, 0.5],
            _ => vec![self.delta],
        }
    }

    pub fn scenario_dir(&self) -> PathBuf {
        self.out_dir.join(self.name.as_str())
    }
}

/// Overrides coming from the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlagOverrides {
    pub scenario: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Raw `key=value` strings from repeated `--set`.
    pub sets: Vec<String>,
}

fn check_key(key: &str, origin: &str) -> Result<(), ConfigError> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        Err(ConfigError::UnknownKey { key: key.to_string(), origin: origin.to_string() })
    }
}

/// Parses the `key = value` file format into raw strings.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Malformed { line: idx + 1, text: raw.to_string() });
        };
        let key = k.trim();
        check_key(key, &format!("config file line {}", idx + 1))?;
        if out.insert(key.to_string(), v.trim().to_string()).is_some() {
            return Err(ConfigError::DuplicateKey { key: key.to_string(), line: idx + 1 });
        }
    }
    Ok(out)
}

/// Resolves a configuration from optional file contents and flag overrides.
pub fn parse_config(file_text: Option<&str>, flags: &FlagOverrides) -> Result<ScenarioConfig, ConfigError> {
    let mut raw = match file_text {
        Some(text) => parse_key_values(text)?,
        None => BTreeMap::new(),
    };
    for set in &flags.sets {
        let (k, v) = set.split_once('=').ok_or_else(|| ConfigError::MalformedOverride(set.clone()))?;
        let key = k.trim();
        check_key(key, "--set")?;
        raw.insert(key.to_string(), v.trim().to_string());
    }
    if let Some(s) = &flags.scenario {
        raw.insert("scenario".into(), s.clone());
    }
    if let Some(o) = &flags.out {
        raw.insert("out".into(), o.to_string_lossy().into_owned());
    }
    if let Some(seed) = flags.seed {
        raw.insert("seed".into(), seed.to_string());
    }

    let name: ScenarioName = raw.get("scenario").ok_or(ConfigError::MissingScenario)?.parse()?;
    let mut cfg = ScenarioConfig::defaults(name);
    for (key, value) in &raw {
        apply(&mut cfg, key, value)?;
    }
    validate(&cfg)?;
    Ok(cfg)
}

/// Reads the config file at `path` (if any) and resolves it with `flags`.
pub fn load_config(path: Option<&Path>, flags: &FlagOverrides) -> Result<ScenarioConfig, ConfigError> {
    let text = match path {
        Some(p) => Some(
            std::fs::read_to_string(p)
                .map_err(|e| ConfigError::Io { path: p.to_path_buf(), message: e.to_string() })?,
        ),
        None => None,
    };
    parse_config(text.as_deref(), flags)
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ConfigError::BadValue { key: key.into(), value: value.into(), expected: "a finite number" })
}

fn parse_usize(key: &str, value: &str) -> Result<usize, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::BadValue { key: key.into(), value: value.into(), expected: "a nonnegative integer" })
}

fn apply(cfg: &mut ScenarioConfig, key: &str, value: &str) -> Result<(), ConfigError> {
    let f = |v: &str| parse_f64(key, v);
    match key {
        "scenario" => {}
        "out" => cfg.out_dir = PathBuf::from(value),
        "seed" => {
            cfg.seed = value.parse().map_err(|_| ConfigError::BadValue {
                key: key.into(),
                value: value.into(),
                expected: "an unsigned 64-bit integer",
            })?
        }
        "delta" => cfg.delta = f(value)?,
        "deltas" => {
            let list = value.split(',').map(|s| f(s.trim())).collect::<Result<Vec<_>, _>>()?;
            if list.is_empty() {
                return Err(ConfigError::BadValue { key: key.into(), value: value.into(), expected: "a list of numbers" });
            }
            cfg.deltas = Some(list);
        }
        "sigma" => cfg.sigma = f(value)?,
        "h" => cfg.h = f(value)?,
        "duration" => cfg.duration = f(value)?,
        "y0" => cfg.y0 = f(value)?,
        "alpha" => cfg.alpha = f(value)?,
        "t_filter" => cfg.t_filter = f(value)?,
        "ipd_pole" => cfg.ipd_pole = f(value)?,
        "pid_pole" => cfg.pid_pole = f(value)?,
        "ref_start" => cfg.ref_start = f(value)?,
        "ref_end" => cfg.ref_end = f(value)?,
        "ref_t0" => cfg.ref_t0 = f(value)?,
        "ref_t1" => cfg.ref_t1 = f(value)?,
        "ip_alpha" => cfg.ip_alpha = f(value)?,
        "ip_kp" => cfg.ip_kp = f(value)?,
        "kp_min" => cfg.kp_min = f(value)?,
        "kp_max" => cfg.kp_max = f(value)?,
        "kp_count" => cfg.kp_count = parse_usize(key, value)?,
        "alpha_min" => cfg.alpha_min = f(value)?,
        "alpha_max" => cfg.alpha_max = f(value)?,
        "alpha_count" => cfg.alpha_count = parse_usize(key, value)?,
        "t_min" => cfg.t_min = f(value)?,
        "t_max" => cfg.t_max = f(value)?,
        "t_count" => cfg.t_count = parse_usize(key, value)?,
        "xval_samples" => cfg.xval_samples = parse_usize(key, value)?,
        other => return Err(ConfigError::UnknownKey { key: other.into(), origin: "resolution".into() }),
    }
    Ok(())
}

fn out_of_range(key: &str, value: impl ToString, bound: &str) -> ConfigError {
    ConfigError::OutOfRange { key: key.into(), value: value.to_string(), bound: bound.into() }
}

fn validate(cfg: &ScenarioConfig) -> Result<(), ConfigError> {
    let unit = |key: &str, v: f64| {
        if (0.0..=1.0).contains(&v) {
            Ok(())
        } else {
            Err(out_of_range(key, v, "0 <= delta <= 1"))
        }
    };
    unit("delta", cfg.delta)?;
    if let Some(ds) = &cfg.deltas {
        for &d in ds {
            unit("deltas", d)?;
        }
    }
    if cfg.sigma < 0.0 {
        return Err(out_of_range("sigma", cfg.sigma, "sigma >= 0"));
    }
    if cfg.h <= 0.0 {
        return Err(out_of_range("h", cfg.h, "h > 0"));
    }
    if cfg.duration < 10.0 * cfg.h {
        return Err(out_of_range("duration", cfg.duration, "duration >= 10 h"));
    }
    if cfg.alpha == 0.0 {
        return Err(out_of_range("alpha", cfg.alpha, "alpha != 0"));
    }
    if cfg.ip_alpha == 0.0 {
        return Err(out_of_range("ip_alpha", cfg.ip_alpha, "ip_alpha != 0"));
    }
    if cfg.t_filter <= 0.0 {
        return Err(out_of_range("t_filter", cfg.t_filter, "t_filter > 0"));
    }
    if cfg.ref_t1 <= cfg.ref_t0 {
        return Err(out_of_range("ref_t1", cfg.ref_t1, "ref_t1 > ref_t0"));
    }
    for (key, count) in [("kp_count", cfg.kp_count), ("alpha_count", cfg.alpha_count), ("t_count", cfg.t_count)] {
        if count < 2 {
            return Err(out_of_range(key, count, &format!("{key} >= 2")));
        }
    }
    if cfg.kp_max <= cfg.kp_min {
        return Err(out_of_range("kp_max", cfg.kp_max, "kp_max > kp_min"));
    }
    if cfg.alpha_max <= cfg.alpha_min {
        return Err(out_of_range("alpha_max", cfg.alpha_max, "alpha_max > alpha_min"));
    }
    if cfg.t_min <= 0.0 {
        return Err(out_of_range("t_min", cfg.t_min, "t_min > 0"));
    }
    if cfg.t_max <= cfg.t_min {
        return Err(out_of_range("t_max", cfg.t_max, "t_max > t_min"));
    }
    if cfg.xval_samples == 0 {
        return Err(out_of_range("xval_samples", 0, "xval_samples >= 1"));
    }
    Ok(())
}
