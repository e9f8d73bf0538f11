//! INI-style run configuration. Parsing is fail-closed: unknown sections,
//! unknown keys, duplicates and keys that do not apply to the chosen recipe
//! are all errors that name the key and its line.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

/// Printed by `gnse --help`.
pub const CONFIG_HELP: &str = "\
Configuration file (INI style, `key = value`, `#` or `;` comments).
Numbers may be written as fractions, e.g. `dt = 1/256`.

[grid]
  n           = 32         power of two in 8..=128
  weight      = constant   constant | sine | table
  value       = 1.0        weight = constant: g = value
  epsilon     = 0.1        weight = sine: g = 1 + epsilon sin(2 pi x1)
  file        = (none)     weight = table: n*n row-major samples
[frac]
  alpha       (required)   0 < alpha <= 1
  alpha1      = alpha/2    0 < alpha1 < alpha
[solver]
  nu          = 0.05
  dt          (required)
  T           (required)   T/dt must be a whole number of steps
  m           = 8          Galerkin modes, at most 64
  picard_tol  = 1e-10
  picard_max  = 50
  slack       = 1.10       certificate slack
  threads     = 1          workers for finite-difference gradients
  trial_modes = 512        trial fields for the eigensolver
[forcing]
  recipe      = zero       zero | kolmogorov | mode
  amplitude   = 1.0
  wavenumber  = 1          recipe = kolmogorov
  mode        = 1          recipe = mode: amplitude times eigenmode k
[initial]
  recipe      = taylor_green   zero | taylor_green | mode
  amplitude   = 1.0
  mode        = 1              recipe = mode
[control]
  modes       = 1          comma list of actuator eigenmodes
  d_c         = #modes     must match the number of modes
  kappa       = 1e-6
  lo          = -1.0       one value, or one per actuator
  hi          = 1.0
  max_iters   = 50
  tol         = 1e-8
  armijo_c    = 1e-4
  armijo_beta = 0.5
  fd_eps      = 1e-6
  target      = zero       zero | free | driven
  target_w    = 1.0        target = driven: constant control generating z
[output]
  dir         = out        overridden by the GNSE_OUT environment variable
";

const KEYS: &[(&str, &[&str])] = &[
    ("grid", &["n", "weight", "value", "epsilon", "file"]),
    ("frac", &["alpha", "alpha1"]),
    (
        "solver",
        &["nu", "dt", "T", "m", "picard_tol", "picard_max", "slack", "threads", "trial_modes"],
    ),
    ("forcing", &["recipe", "amplitude", "wavenumber", "mode"]),
    ("initial", &["recipe", "amplitude", "mode"]),
    (
        "control",
        &[
            "modes", "d_c", "kappa", "lo", "hi", "max_iters", "tol", "armijo_c", "armijo_beta", "fd_eps",
            "target", "target_w",
        ],
    ),
    ("output", &["dir"]),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    Constant(f64),
    Sine(f64),
    Table(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Forcing {
    Zero,
    Kolmogorov { amplitude: f64, wavenumber: usize },
    Mode { amplitude: f64, mode: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    Zero,
    TaylorGreen { amplitude: f64 },
    Mode { amplitude: f64, mode: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Zero,
    Free,
    Driven,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlSection {
    pub modes: Vec<usize>,
    pub kappa: f64,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub max_iters: usize,
    pub tol: f64,
    pub armijo_c: f64,
    pub armijo_beta: f64,
    pub fd_eps: f64,
    pub target: Target,
    pub target_w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub weight: Weight,
    pub alpha: f64,
    pub alpha1: f64,
    pub nu: f64,
    pub dt: f64,
    pub horizon: f64,
    pub n_steps: usize,
    pub m: usize,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub slack: f64,
    pub threads: usize,
    pub trial_modes: usize,
    pub forcing: Forcing,
    pub initial: Initial,
    pub control: ControlSection,
    pub output: PathBuf,
}

struct Entry {
    value: String,
    line: usize,
    used: bool,
}

/// Raw `section.key → value` table with line numbers.
struct Raw {
    entries: BTreeMap<String, Entry>,
}

impl Raw {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section: Option<&str> = None;
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let err = |key: &str, message: String| ConfigError {
                line: Some(line),
                key: key.to_string(),
                message,
            };
            let s = raw_line.split(['#', ';']).next().unwrap_or("").trim();
            if s.is_empty() {
                continue;
            }
            if let Some(name) = s.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(s, "unterminated section header".into()))?
                    .trim();
                section = Some(
                    KEYS.iter()
                        .map(|(sec, _)| *sec)
                        .find(|sec| *sec == name)
                        .ok_or_else(|| err(name, "unknown section".into()))?,
                );
                continue;
            }
            let (key, value) = s
                .split_once('=')
                .ok_or_else(|| err(s, "expected `key = value`".into()))?;
            let key = key.trim();
            let sec = section.ok_or_else(|| err(key, "key outside any section".into()))?;
            let full = format!("{sec}.{key}");
            let allowed = KEYS.iter().find(|(name, _)| *name == sec).map(|(_, k)| *k).unwrap_or(&[]);
            if !allowed.contains(&key) {
                return Err(err(&full, "unknown key".into()));
            }
            if let Some(prev) = entries.get(&full) {
                let prev: &Entry = prev;
                return Err(err(&full, format!("duplicate key (first set on line {})", prev.line)));
            }
            entries.insert(
                full,
                Entry {
                    value: value.trim().to_string(),
                    line,
                    used: false,
                },
            );
        }
        Ok(Self { entries })
    }

    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: self.entries.get(key).map(|e| e.line),
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.get_mut(key).map(|e| {
            e.used = true;
            e.value.clone()
        })
    }

    fn num(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => parse_number(&v).map(Some).ok_or_else(|| self.err(key, format!("not a number: `{v}`"))),
        }
    }

    fn num_or(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.num(key)?.unwrap_or(default))
    }

    fn required(&mut self, key: &str) -> Result<f64, ConfigError> {
        self.num(key)?.ok_or_else(|| self.err(key, "missing required key"))
    }

    fn count_or(&mut self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| self.err(key, format!("not a nonnegative integer: `{v}`"))),
        }
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|x| parse_number(x.trim()))
                .collect::<Option<Vec<_>>>()
                .map(Some)
                .ok_or_else(|| self.err(key, format!("not a comma-separated list of numbers: `{v}`"))),
        }
    }

    fn word(&mut self, key: &str, default: &str, choices: &[&str]) -> Result<String, ConfigError> {
        let v = self.take(key).unwrap_or_else(|| default.to_string());
        if choices.contains(&v.as_str()) {
            Ok(v)
        } else {
            Err(self.err(key, format!("expected one of {}, got `{v}`", choices.join(" | "))))
        }
    }

    /// Keys that were set but that the chosen recipes never read.
    fn reject_unused(&self) -> Result<(), ConfigError> {
        match self.entries.iter().find(|(_, e)| !e.used) {
            Some((key, e)) => Err(ConfigError {
                line: Some(e.line),
                key: key.clone(),
                message: "key does not apply to the selected recipe".into(),
            }),
            None => Ok(()),
        }
    }
}

/// Decimal number or a fraction `a/b`.
fn parse_number(s: &str) -> Option<f64> {
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?,
        None => s.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            key: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut cfg = Self::parse(&text)?;
        if let Weight::Table(file) = &cfg.weight {
            if file.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.weight = Weight::Table(base.join(file));
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = Raw::parse(text)?;

        let n = raw.count_or("grid.n", 32)?;
        if !(8..=128).contains(&n) || !n.is_power_of_two() {
            return Err(raw.err("grid.n", format!("must be a power of two in 8..=128, got {n}")));
        }
        let weight = match raw.word("grid.weight", "constant", &["constant", "sine", "table"])?.as_str() {
            "constant" => {
                let c = raw.num_or("grid.value", 1.0)?;
                if !(c > 0.0) {
                    return Err(raw.err("grid.value", format!("weight must be positive, got {c}")));
                }
                Weight::Constant(c)
            }
            "sine" => {
                let e = raw.num_or("grid.epsilon", 0.1)?;
                if !(e.abs() < 1.0) {
                    return Err(raw.err("grid.epsilon", format!("need |epsilon| < 1, got {e}")));
                }
                Weight::Sine(e)
            }
            _ => match raw.take("grid.file") {
                Some(f) if !f.is_empty() => Weight::Table(PathBuf::from(f)),
                _ => return Err(raw.err("grid.file", "weight = table needs a file")),
            },
        };

        let alpha = raw.required("frac.alpha")?;
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(raw.err("frac.alpha", format!("must satisfy 0 < alpha <= 1, got {alpha}")));
        }
        let alpha1 = raw.num_or("frac.alpha1", alpha / 2.0)?;
        if !(alpha1 > 0.0 && alpha1 < alpha) {
            return Err(raw.err("frac.alpha1", format!("must satisfy 0 < alpha1 < alpha = {alpha}, got {alpha1}")));
        }

        let nu = raw.num_or("solver.nu", 0.05)?;
        if !(nu > 0.0) {
            return Err(raw.err("solver.nu", format!("must be positive, got {nu}")));
        }
        let dt = raw.required("solver.dt")?;
        if !(dt > 0.0) {
            return Err(raw.err("solver.dt", format!("must be positive, got {dt}")));
        }
        let horizon = raw.required("solver.T")?;
        if !(horizon > 0.0) {
            return Err(raw.err("solver.T", format!("must be positive, got {horizon}")));
        }
        let steps = horizon / dt;
        let n_steps = steps.round() as usize;
        if n_steps == 0 || (steps - n_steps as f64).abs() > 1e-9 * steps.max(1.0) {
            return Err(raw.err("solver.T", format!("T = {horizon} is not a whole number of steps dt = {dt}")));
        }
        let m = raw.count_or("solver.m", 8)?;
        if !(1..=64).contains(&m) {
            return Err(raw.err("solver.m", format!("must be in 1..=64, got {m}")));
        }
        let picard_tol = raw.num_or("solver.picard_tol", 1e-10)?;
        if !(picard_tol > 0.0) {
            return Err(raw.err("solver.picard_tol", "must be positive"));
        }
        let picard_max = raw.count_or("solver.picard_max", 50)?;
        if picard_max == 0 {
            return Err(raw.err("solver.picard_max", "must be at least 1"));
        }
        let slack = raw.num_or("solver.slack", 1.10)?;
        if !(slack >= 1.0) {
            return Err(raw.err("solver.slack", format!("must be at least 1, got {slack}")));
        }
        let threads = raw.count_or("solver.threads", 1)?;
        if threads == 0 {
            return Err(raw.err("solver.threads", "must be at least 1"));
        }
        let trial_modes = raw.count_or("solver.trial_modes", 512)?;
        if trial_modes == 0 {
            return Err(raw.err("solver.trial_modes", "must be at least 1"));
        }

        let forcing = match raw.word("forcing.recipe", "zero", &["zero", "kolmogorov", "mode"])?.as_str() {
            "zero" => Forcing::Zero,
            "kolmogorov" => {
                let amplitude = raw.num_or("forcing.amplitude", 1.0)?;
                let wavenumber = raw.count_or("forcing.wavenumber", 1)?;
                if wavenumber == 0 || wavenumber >= n / 2 {
                    return Err(raw.err("forcing.wavenumber", format!("must be in 1..{}", n / 2)));
                }
                Forcing::Kolmogorov { amplitude, wavenumber }
            }
            _ => Forcing::Mode {
                amplitude: raw.num_or("forcing.amplitude", 1.0)?,
                mode: mode_index(&mut raw, "forcing.mode", m)?,
            },
        };
        let initial = match raw.word("initial.recipe", "taylor_green", &["zero", "taylor_green", "mode"])?.as_str() {
            "zero" => Initial::Zero,
            "taylor_green" => Initial::TaylorGreen {
                amplitude: raw.num_or("initial.amplitude", 1.0)?,
            },
            _ => Initial::Mode {
                amplitude: raw.num_or("initial.amplitude", 1.0)?,
                mode: mode_index(&mut raw, "initial.mode", m)?,
            },
        };

        let control = parse_control(&mut raw, m)?;
        let output = PathBuf::from(raw.take("output.dir").unwrap_or_else(|| "out".into()));
        raw.reject_unused()?;
        Ok(Self {
            n,
            weight,
            alpha,
            alpha1,
            nu,
            dt,
            horizon,
            n_steps,
            m,
            picard_tol,
            picard_max,
            slack,
            threads,
            trial_modes,
            forcing,
            initial,
            control,
            output,
        })
    }

    /// Every resolved setting as a flat `section.key` map.
    pub fn flat(&self) -> Map<String, Value> {
        let mut out = Map::new();
        let mut put = |k: &str, v: Value| {
            out.insert(k.to_string(), v);
        };
        put("grid.n", self.n.into());
        match &self.weight {
            Weight::Constant(c) => {
                put("grid.weight", "constant".into());
                put("grid.value", (*c).into());
            }
            Weight::Sine(e) => {
                put("grid.weight", "sine".into());
                put("grid.epsilon", (*e).into());
            }
            Weight::Table(p) => {
                put("grid.weight", "table".into());
                put("grid.file", p.display().to_string().into());
            }
        }
        put("frac.alpha", self.alpha.into());
        put("frac.alpha1", self.alpha1.into());
        put("solver.nu", self.nu.into());
        put("solver.dt", self.dt.into());
        put("solver.T", self.horizon.into());
        put("solver.m", self.m.into());
        put("solver.picard_tol", self.picard_tol.into());
        put("solver.picard_max", self.picard_max.into());
        put("solver.slack", self.slack.into());
        put("solver.threads", self.threads.into());
        put("solver.trial_modes", self.trial_modes.into());
        match &self.forcing {
            Forcing::Zero => put("forcing.recipe", "zero".into()),
            Forcing::Kolmogorov { amplitude, wavenumber } => {
                put("forcing.recipe", "kolmogorov".into());
                put("forcing.amplitude", (*amplitude).into());
                put("forcing.wavenumber", (*wavenumber).into());
            }
            Forcing::Mode { amplitude, mode } => {
                put("forcing.recipe", "mode".into());
                put("forcing.amplitude", (*amplitude).into());
                put("forcing.mode", (*mode).into());
            }
        }
        match &self.initial {
            Initial::Zero => put("initial.recipe", "zero".into()),
            Initial::TaylorGreen { amplitude } => {
                put("initial.recipe", "taylor_green".into());
                put("initial.amplitude", (*amplitude).into());
            }
            Initial::Mode { amplitude, mode } => {
                put("initial.recipe", "mode".into());
                put("initial.amplitude", (*amplitude).into());
                put("initial.mode", (*mode).into());
            }
        }
        let c = &self.control;
        let list = |v: &[f64]| Value::from(v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
        put(
            "control.modes",
            c.modes.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",").into(),
        );
        put("control.d_c", c.modes.len().into());
        put("control.kappa", c.kappa.into());
        put("control.lo", list(&c.lo));
        put("control.hi", list(&c.hi));
        put("control.max_iters", c.max_iters.into());
        put("control.tol", c.tol.into());
        put("control.armijo_c", c.armijo_c.into());
        put("control.armijo_beta", c.armijo_beta.into());
        put("control.fd_eps", c.fd_eps.into());
        let target = match c.target {
            Target::Zero => "zero",
            Target::Free => "free",
            Target::Driven => "driven",
        };
        put("control.target", target.into());
        if c.target == Target::Driven {
            put("control.target_w", list(&c.target_w));
        }
        put("output.dir", self.output.display().to_string().into());
        out
    }
}

fn mode_index(raw: &mut Raw, key: &str, m: usize) -> Result<usize, ConfigError> {
    let k = raw.count_or(key, 1)?;
    if !(1..=m).contains(&k) {
        return Err(raw.err(key, format!("mode index must be in 1..={m}, got {k}")));
    }
    Ok(k)
}

/// A single value broadcasts to every actuator.
fn per_actuator(raw: &mut Raw, key: &str, default: f64, d_c: usize) -> Result<Vec<f64>, ConfigError> {
    match raw.list(key)? {
        None => Ok(vec![default; d_c]),
        Some(v) if v.len() == 1 => Ok(vec![v[0]; d_c]),
        Some(v) if v.len() == d_c => Ok(v),
        Some(v) => Err(raw.err(key, format!("expected 1 or {d_c} values, got {}", v.len()))),
    }
}

fn parse_control(raw: &mut Raw, m: usize) -> Result<ControlSection, ConfigError> {
    let modes: Vec<usize> = match raw.take("control.modes") {
        None => vec![1],
        Some(v) => v
            .split(',')
            .map(|x| x.trim().parse::<usize>().ok().filter(|k| (1..=m).contains(k)))
            .collect::<Option<_>>()
            .ok_or_else(|| raw.err("control.modes", format!("expected mode indices in 1..={m}, got `{v}`")))?,
    };
    let d_c = modes.len();
    if let Some(given) = raw.take("control.d_c") {
        if given.parse::<usize>().ok() != Some(d_c) {
            return Err(raw.err("control.d_c", format!("`{given}` does not match the {d_c} listed modes")));
        }
    }
    let kappa = raw.num_or("control.kappa", 1e-6)?;
    if !(kappa > 0.0) {
        return Err(raw.err("control.kappa", format!("must be positive, got {kappa}")));
    }
    let lo = per_actuator(raw, "control.lo", -1.0, d_c)?;
    let hi = per_actuator(raw, "control.hi", 1.0, d_c)?;
    let max_iters = raw.count_or("control.max_iters", 50)?;
    let tol = raw.num_or("control.tol", 1e-8)?;
    let armijo_c = raw.num_or("control.armijo_c", 1e-4)?;
    if !(armijo_c > 0.0 && armijo_c < 1.0) {
        return Err(raw.err("control.armijo_c", "must lie in (0, 1)"));
    }
    let armijo_beta = raw.num_or("control.armijo_beta", 0.5)?;
    if !(armijo_beta > 0.0 && armijo_beta < 1.0) {
        return Err(raw.err("control.armijo_beta", "must lie in (0, 1)"));
    }
    let fd_eps = raw.num_or("control.fd_eps", 1e-6)?;
    if !(fd_eps > 0.0) {
        return Err(raw.err("control.fd_eps", "must be positive"));
    }
    let target = match raw.word("control.target", "zero", &["zero", "free", "driven"])?.as_str() {
        "zero" => Target::Zero,
        "free" => Target::Free,
        _ => Target::Driven,
    };
    let target_w = if target == Target::Driven {
        per_actuator(raw, "control.target_w", 1.0, d_c)?
    } else {
        Vec::new()
    };
    Ok(ControlSection {
        modes,
        kappa,
        lo,
        hi,
        max_iters,
        tol,
        armijo_c,
        armijo_beta,
        fd_eps,
        target,
        target_w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[frac]\nalpha = 0.5\n[solver]\ndt = 1/256\nT = 0.5\n";

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.n, 32);
        assert_eq!(c.weight, Weight::Constant(1.0));
        assert_eq!(c.alpha1, 0.25);
        assert_eq!(c.n_steps, 128);
        assert_eq!(c.m, 8);
        assert_eq!(c.slack, 1.10);
        assert_eq!(c.threads, 1);
        assert_eq!(c.forcing, Forcing::Zero);
        assert_eq!(c.initial, Initial::TaylorGreen { amplitude: 1.0 });
        assert_eq!(c.control.modes, vec![1]);
        assert_eq!(c.output, PathBuf::from("out"));
    }

    #[test]
    fn alpha1_must_stay_below_alpha() {
        let e = RunConfig::parse("[frac]\nalpha = 0.5\nalpha1 = 0.5\n[solver]\ndt = 0.1\nT = 1\n").unwrap_err();
        assert_eq!(e.key, "frac.alpha1");
        assert_eq!(e.line, Some(3));
    }

    #[test]
    fn duplicate_and_unknown_keys_name_the_line() {
        let e = RunConfig::parse("[frac]\nalpha = 0.5\nalpha = 0.6\n").unwrap_err();
        assert_eq!((e.key.as_str(), e.line), ("frac.alpha", Some(3)));
        assert!(e.message.contains("line 2"));
        let e = RunConfig::parse(&format!("{MINIMAL}[grid]\nsize = 4\n")).unwrap_err();
        assert_eq!((e.key.as_str(), e.line), ("grid.size", Some(7)));
        let e = RunConfig::parse(&format!("{MINIMAL}[grid]\nepsilon = 0.2\n")).unwrap_err();
        assert_eq!(e.key, "grid.epsilon");
        assert!(RunConfig::parse(&format!("{MINIMAL}[mesh]\n")).is_err());
    }

    #[test]
    fn range_checks() {
        let with = |extra: &str| RunConfig::parse(&format!("{MINIMAL}{extra}"));
        assert_eq!(with("[grid]\nn = 48\n").unwrap_err().key, "grid.n");
        assert_eq!(with("[grid]\nn = 256\n").unwrap_err().key, "grid.n");
        assert!(RunConfig::parse("[frac]\nalpha = 0.5\n[solver]\ndt = 0.3\nT = 1\n").is_err());
        assert!(RunConfig::parse("[frac]\nalpha = 0.5\n[solver]\ndt = 0.1\n").is_err());
        let c = with("[control]\nmodes = 1, 3\nlo = -2\nhi = 1, 2\n").unwrap();
        assert_eq!(c.control.lo, vec![-2.0, -2.0]);
        assert_eq!(c.control.hi, vec![1.0, 2.0]);
        assert_eq!(with("[control]\nmodes = 9\n").unwrap_err().key, "control.modes");
        assert_eq!(with("[control]\nd_c = 2\n").unwrap_err().key, "control.d_c");
    }

    #[test]
    fn fractions_and_comments() {
        assert_eq!(parse_number("1/256"), Some(1.0 / 256.0));
        assert_eq!(parse_number("1/0"), None);
        let c = RunConfig::parse("# run\n[frac]\nalpha = 1/2 ; half\n[solver]\ndt = 1/4\nT = 1\n").unwrap();
        assert_eq!(c.alpha, 0.5);
        assert_eq!(c.n_steps, 4);
    }
}
