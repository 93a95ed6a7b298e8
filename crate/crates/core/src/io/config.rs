//! Line-based run configuration: `[section]` headers, `key = value` lines,
//! `#` comments.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::adjoint::CostWeights;
use crate::control::OptimizeConfig;
use crate::grid::stencil::AdvectionScheme;
use crate::grid::{GridSpec, DEFAULT_CFL};
use crate::linearized::LinearizationMode;
use crate::presets::Preset;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { line: usize, section: String },
    #[error("line {line}: `{key}` expects {expected}, got `{value}`")]
    TypeError { line: usize, key: String, expected: &'static str, value: String },
    #[error("line {line}: duplicate key `{key}` (first set on line {first})")]
    DuplicateKey { line: usize, key: String, first: usize },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {msg}")]
    Invalid { line: usize, msg: String },
    #[error("missing required key `{key}` in [{section}]")]
    Missing { section: &'static str, key: &'static str },
    #[error("referenced file does not exist: {0}")]
    MissingFile(PathBuf),
}

/// Where initial data or boundary control comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Preset(Preset),
    /// `.lcb` control file, or an `.lcf` director snapshot (with an optional
    /// velocity snapshot) for initial data.
    File { path: PathBuf, velocity: Option<PathBuf> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    /// Targets generated by the self-tracking preset on the same grid.
    SelfTracking,
    /// Zero velocity targets and constant director targets given in chart
    /// coordinates.
    Constant { d_chart: [f64; 2], d_final_chart: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Seed of random test directions.
    pub seed: u64,
    pub mode: LinearizationMode,
    /// Finite-difference steps for `grad-check`.
    pub eps: Vec<f64>,
    /// Random directions for duality and stationarity checks.
    pub directions: usize,
    /// Write snapshots every this many steps (0: first and last only).
    pub snapshot_every: usize,
    /// Manufactured-solution levels (cells per side) for `verify`.
    pub verify_levels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub scheme: AdvectionScheme,
    pub initial: Source,
    pub control: Source,
    pub targets: TargetSpec,
    pub weights: CostWeights,
    pub optimize: OptimizeConfig,
    /// `None`: take the radius from the self-tracking preset or from the
    /// starting control.
    pub m_radius: Option<f64>,
    pub output: OutputConfig,
}

#[derive(Clone, Copy)]
enum Kind {
    Int,
    Float,
    Str,
    FloatList,
    IntList,
}

const KEYS: &[(&str, &[(&str, Kind)])] = &[
    (
        "grid",
        &[
            ("nx", Kind::Int),
            ("ny", Kind::Int),
            ("lx", Kind::Float),
            ("ly", Kind::Float),
            ("dt", Kind::Float),
            ("nsteps", Kind::Int),
            ("cfl", Kind::Float),
        ],
    ),
    ("physics", &[("nu", Kind::Float), ("mu", Kind::Float), ("lambda", Kind::Float), ("scheme", Kind::Str)]),
    ("initial", &[("preset", Kind::Str), ("file", Kind::Str), ("velocity_file", Kind::Str)]),
    ("control", &[("preset", Kind::Str), ("file", Kind::Str)]),
    ("targets", &[("preset", Kind::Str), ("d_chart", Kind::FloatList), ("d_final_chart", Kind::FloatList)]),
    (
        "weights",
        &[("beta1", Kind::Float), ("beta2", Kind::Float), ("beta3", Kind::Float), ("beta4", Kind::Float), ("beta5", Kind::Float)],
    ),
    (
        "optimize",
        &[
            ("m_radius", Kind::Float),
            ("step0", Kind::Float),
            ("armijo_c", Kind::Float),
            ("armijo_shrink", Kind::Float),
            ("max_iters", Kind::Int),
            ("grad_tol", Kind::Float),
            ("max_backtracks", Kind::Int),
        ],
    ),
    (
        "output",
        &[
            ("dir", Kind::Str),
            ("seed", Kind::Int),
            ("mode", Kind::Str),
            ("eps", Kind::FloatList),
            ("directions", Kind::Int),
            ("snapshot_every", Kind::Int),
            ("verify_levels", Kind::IntList),
        ],
    ),
];

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Int(u64),
    Float(f64),
    Str(String),
    FloatList(Vec<f64>),
    IntList(Vec<u64>),
}

struct Entry {
    line: usize,
    value: Value,
}

fn parse_value(kind: Kind, raw: &str, line: usize, key: &str) -> Result<Value, ConfigError> {
    let err = |expected| ConfigError::TypeError { line, key: key.to_string(), expected, value: raw.to_string() };
    let float = |s: &str| s.trim().parse::<f64>().ok().filter(|x| x.is_finite());
    match kind {
        Kind::Int => raw.parse::<u64>().map(Value::Int).map_err(|_| err("a nonnegative integer")),
        Kind::Float => float(raw).map(Value::Float).ok_or_else(|| err("a finite number")),
        Kind::Str => {
            let s = raw.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(raw);
            if s.is_empty() {
                return Err(err("a nonempty string"));
            }
            Ok(Value::Str(s.to_string()))
        }
        Kind::FloatList => raw.split(',').map(float).collect::<Option<Vec<_>>>().map(Value::FloatList).ok_or_else(|| err("a comma-separated list of numbers")),
        Kind::IntList => raw
            .split(',')
            .map(|s| s.trim().parse::<u64>().ok())
            .collect::<Option<Vec<_>>>()
            .map(Value::IntList)
            .ok_or_else(|| err("a comma-separated list of integers")),
    }
}

type Table = HashMap<(&'static str, &'static str), Entry>;

fn tokenize(text: &str) -> Result<Table, ConfigError> {
    let mut table: Table = HashMap::new();
    let mut section: Option<&'static [(&'static str, Kind)]> = None;
    let mut section_name: &'static str = "";
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax { line, msg: "unterminated section header".into() })?
                .trim();
            let (n, keys) = KEYS
                .iter()
                .find(|(s, _)| *s == name)
                .ok_or_else(|| ConfigError::UnknownSection { line, section: name.to_string() })?;
            section = Some(keys);
            section_name = n;
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line, msg: format!("expected `key = value`, got `{content}`") })?;
        let (key, value) = (key.trim(), value.trim());
        let keys = section.ok_or_else(|| ConfigError::Syntax { line, msg: format!("key `{key}` outside any section") })?;
        let &(k, kind) = keys.iter().find(|(k, _)| *k == key).ok_or_else(|| ConfigError::UnknownKey {
            line,
            section: section_name.to_string(),
            key: key.to_string(),
        })?;
        if let Some(prev) = table.get(&(section_name, k)) {
            return Err(ConfigError::DuplicateKey { line, key: format!("{section_name}.{k}"), first: prev.line });
        }
        let value = parse_value(kind, value, line, k)?;
        table.insert((section_name, k), Entry { line, value });
    }
    Ok(table)
}

struct Reader {
    table: Table,
}

impl Reader {
    fn line(&self, s: &'static str, k: &'static str) -> usize {
        self.table.get(&(s, k)).map_or(0, |e| e.line)
    }

    fn float(&self, s: &'static str, k: &'static str) -> Option<f64> {
        match self.table.get(&(s, k)).map(|e| &e.value) {
            Some(Value::Float(x)) => Some(*x),
            _ => None,
        }
    }

    fn int(&self, s: &'static str, k: &'static str) -> Option<u64> {
        match self.table.get(&(s, k)).map(|e| &e.value) {
            Some(Value::Int(x)) => Some(*x),
            _ => None,
        }
    }

    fn str(&self, s: &'static str, k: &'static str) -> Option<&str> {
        match self.table.get(&(s, k)).map(|e| &e.value) {
            Some(Value::Str(x)) => Some(x),
            _ => None,
        }
    }

    fn floats(&self, s: &'static str, k: &'static str) -> Option<&[f64]> {
        match self.table.get(&(s, k)).map(|e| &e.value) {
            Some(Value::FloatList(x)) => Some(x),
            _ => None,
        }
    }

    fn ints(&self, s: &'static str, k: &'static str) -> Option<&[u64]> {
        match self.table.get(&(s, k)).map(|e| &e.value) {
            Some(Value::IntList(x)) => Some(x),
            _ => None,
        }
    }

    fn invalid(&self, s: &'static str, k: &'static str, msg: String) -> ConfigError {
        ConfigError::Invalid { line: self.line(s, k), msg }
    }

    fn preset(&self, s: &'static str, k: &'static str) -> Result<Option<Preset>, ConfigError> {
        self.str(s, k).map(|v| v.parse::<Preset>().map_err(|e| self.invalid(s, k, e.to_string()))).transpose()
    }

    fn chart(&self, s: &'static str, k: &'static str) -> Result<[f64; 2], ConfigError> {
        match self.floats(s, k) {
            None => Ok([0.0, 0.0]),
            Some(&[a, b]) if a * a + b * b <= 1.0 => Ok([a, b]),
            Some(v) => Err(self.invalid(s, k, format!("chart point {v:?} must be two numbers in the closed unit disk"))),
        }
    }

    fn source(&self, s: &'static str, with_velocity: bool) -> Result<Source, ConfigError> {
        match (self.preset(s, "preset")?, self.str(s, "file")) {
            (Some(_), Some(_)) => Err(self.invalid(s, "file", format!("[{s}] sets both `preset` and `file`"))),
            (Some(p), None) => Ok(Source::Preset(p)),
            (None, Some(f)) => Ok(Source::File {
                path: PathBuf::from(f),
                velocity: if with_velocity { self.str(s, "velocity_file").map(PathBuf::from) } else { None },
            }),
            (None, None) => Err(ConfigError::Missing { section: s, key: "preset" }),
        }
    }
}

fn usize_of(v: u64) -> usize {
    usize::try_from(v).unwrap_or(usize::MAX)
}

/// Parse and validate a configuration.
///
/// Defaults: `ν = μ = λ = 1`, `cfl = 0.2`, `lx = ly = 1`, `ny = nx`,
/// `dt` the largest stable step, centered advection, control from the
/// initial preset, constant targets at `e₃`, `β = (0, 1, 0, 0, 0)`.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let r = Reader { table: tokenize(text)? };

    let nx = usize_of(r.int("grid", "nx").ok_or(ConfigError::Missing { section: "grid", key: "nx" })?);
    let ny = r.int("grid", "ny").map_or(nx, usize_of);
    let nsteps = usize_of(r.int("grid", "nsteps").ok_or(ConfigError::Missing { section: "grid", key: "nsteps" })?);
    let mut grid = GridSpec {
        lx: r.float("grid", "lx").unwrap_or(1.0),
        ly: r.float("grid", "ly").unwrap_or(1.0),
        nx,
        ny,
        dt: 0.0,
        nsteps,
        nu: r.float("physics", "nu").unwrap_or(1.0),
        mu: r.float("physics", "mu").unwrap_or(1.0),
        lambda: r.float("physics", "lambda").unwrap_or(1.0),
        cfl: r.float("grid", "cfl").unwrap_or(DEFAULT_CFL),
    };
    grid.dt = r.float("grid", "dt").unwrap_or_else(|| grid.max_stable_dt());
    grid.validate().map_err(|e| r.invalid("grid", if r.line("grid", "dt") > 0 { "dt" } else { "nx" }, e.to_string()))?;

    let scheme = match r.str("physics", "scheme").unwrap_or("centered") {
        "centered" => AdvectionScheme::Centered,
        "upwind" => AdvectionScheme::Upwind,
        other => return Err(r.invalid("physics", "scheme", format!("unknown advection scheme `{other}`"))),
    };

    let initial = r.source("initial", true)?;
    let control = match (r.preset("control", "preset")?, r.str("control", "file")) {
        (None, None) => match &initial {
            Source::Preset(p) => Source::Preset(*p),
            Source::File { .. } => return Err(ConfigError::Missing { section: "control", key: "file" }),
        },
        _ => r.source("control", false)?,
    };

    let targets = match r.str("targets", "preset").unwrap_or("constant") {
        "self-tracking" => TargetSpec::SelfTracking,
        "constant" => TargetSpec::Constant { d_chart: r.chart("targets", "d_chart")?, d_final_chart: r.chart("targets", "d_final_chart")? },
        other => return Err(r.invalid("targets", "preset", format!("unknown target preset `{other}`"))),
    };

    let defaults = [0.0, 1.0, 0.0, 0.0, 0.0];
    let keys = ["beta1", "beta2", "beta3", "beta4", "beta5"];
    let any_given = keys.iter().any(|k| r.float("weights", k).is_some());
    let mut beta = [0.0; 5];
    for (i, k) in keys.iter().enumerate() {
        beta[i] = r.float("weights", k).unwrap_or(if any_given { 0.0 } else { defaults[i] });
        if beta[i] < 0.0 {
            return Err(r.invalid("weights", k, format!("{k} = {} must be nonnegative", beta[i])));
        }
    }
    let weights = CostWeights::new(beta);
    if weights.is_zero() {
        return Err(r.invalid("weights", "beta1", "the weights must not all vanish".into()));
    }

    let d = OptimizeConfig::default();
    let m_radius = r.float("optimize", "m_radius");
    let optimize = OptimizeConfig {
        m_radius: m_radius.unwrap_or(d.m_radius),
        step0: r.float("optimize", "step0").unwrap_or(d.step0),
        armijo_c: r.float("optimize", "armijo_c").unwrap_or(d.armijo_c),
        armijo_shrink: r.float("optimize", "armijo_shrink").unwrap_or(d.armijo_shrink),
        max_iters: r.int("optimize", "max_iters").map_or(d.max_iters, usize_of),
        grad_tol: r.float("optimize", "grad_tol").unwrap_or(d.grad_tol),
        max_backtracks: r.int("optimize", "max_backtracks").map_or(d.max_backtracks, usize_of),
    };
    optimize.validate().map_err(|e| ConfigError::Invalid { line: r.line("optimize", "m_radius").max(1), msg: e.to_string() })?;

    let mode = r
        .str("output", "mode")
        .unwrap_or("discrete")
        .parse::<LinearizationMode>()
        .map_err(|e| r.invalid("output", "mode", e.to_string()))?;
    let eps = r.floats("output", "eps").map_or_else(|| vec![1e-2, 1e-3, 1e-4], <[f64]>::to_vec);
    if eps.iter().any(|e| *e <= 0.0) {
        return Err(r.invalid("output", "eps", "finite-difference steps must be positive".into()));
    }
    let verify_levels: Vec<usize> = r.ints("output", "verify_levels").map_or_else(|| vec![8, 16, 32], |v| v.iter().map(|x| usize_of(*x)).collect());
    if verify_levels.len() < 3 || verify_levels.iter().any(|n| *n < 4) {
        return Err(r.invalid("output", "verify_levels", "need at least three levels of >= 4 cells".into()));
    }
    let output = OutputConfig {
        dir: PathBuf::from(r.str("output", "dir").unwrap_or("out")),
        seed: r.int("output", "seed").unwrap_or(1),
        mode,
        eps,
        directions: r.int("output", "directions").map_or(10, usize_of),
        snapshot_every: r.int("output", "snapshot_every").map_or(0, usize_of),
        verify_levels,
    };

    Ok(RunConfig { grid, scheme, initial, control, targets, weights, optimize, m_radius, output })
}

impl RunConfig {
    /// Resolve relative file references against `base` and check they exist.
    pub fn resolve_files(&mut self, base: &Path) -> Result<(), ConfigError> {
        for src in [&mut self.initial, &mut self.control] {
            if let Source::File { path, velocity } = src {
                for p in std::iter::once(path).chain(velocity.iter_mut()) {
                    if p.is_relative() {
                        *p = base.join(&*p);
                    }
                    if !p.exists() {
                        return Err(ConfigError::MissingFile(p.clone()));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[grid]\nnx = 8\nnsteps = 4\n[initial]\npreset = driven\n[control]\npreset = driven\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!((c.grid.nu, c.grid.mu, c.grid.lambda, c.grid.cfl), (1.0, 1.0, 1.0, 0.2));
        assert_eq!(c.grid.ny, 8);
        assert_eq!(c.grid.dt, 0.2 / 64.0);
        assert_eq!(c.initial, Source::Preset(Preset::Driven));
        assert_eq!(c.weights.beta, [0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(c.output.mode, LinearizationMode::Discrete);
        assert_eq!(c.targets, TargetSpec::Constant { d_chart: [0.0, 0.0], d_final_chart: [0.0, 0.0] });
    }

    #[test]
    fn full_config_parses() {
        let text = "# comment\n[grid]\nnx = 8\nny = 6\ndt = 1e-3\nnsteps = 3\ncfl = 0.25\n\n[physics]\nnu = 0.5\nscheme = \"upwind\"\n\
                    [initial]\npreset = self-tracking\n[targets]\npreset = self-tracking\n[weights]\nbeta2 = 2 # inline\nbeta5 = 0.1\n\
                    [optimize]\nm_radius = 50\nmax_iters = 7\n[output]\ndir = run1\nseed = 5\nmode = continuous\neps = 1e-3, 1e-4\nverify_levels = 4, 8, 16\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.grid.ny, 6);
        assert_eq!(c.grid.nu, 0.5);
        assert_eq!(c.scheme, AdvectionScheme::Upwind);
        assert_eq!(c.control, Source::Preset(Preset::SelfTracking));
        assert_eq!(c.weights.beta, [0.0, 2.0, 0.0, 0.0, 0.1]);
        assert_eq!(c.m_radius, Some(50.0));
        assert_eq!(c.optimize.max_iters, 7);
        assert_eq!(c.output.eps, vec![1e-3, 1e-4]);
        assert_eq!(c.output.dir, PathBuf::from("run1"));
        assert_eq!(c.output.verify_levels, vec![4, 8, 16]);
    }

    #[test]
    fn negative_weight_is_rejected() {
        let e = parse_config(&format!("{MINIMAL}[weights]\nbeta1 = -1\n")).unwrap_err();
        assert!(matches!(e, ConfigError::Invalid { line: 9, .. }), "{e}");
        let e = parse_config(&format!("{MINIMAL}[weights]\nbeta2 = 0\n")).unwrap_err();
        assert!(matches!(e, ConfigError::Invalid { .. }));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_config("[grid]\nnx = 8\nnx = 9\n").unwrap_err();
        assert_eq!(e, ConfigError::DuplicateKey { line: 3, key: "grid.nx".into(), first: 2 });
        let e = parse_config("[grid]\nnx = 8\ncolor = red\n").unwrap_err();
        assert_eq!(e, ConfigError::UnknownKey { line: 3, section: "grid".into(), key: "color".into() });
        let e = parse_config("[grid]\nnx = eight\n").unwrap_err();
        assert!(matches!(e, ConfigError::TypeError { line: 2, .. }));
        let e = parse_config("[grid]\nnx = 8\n[extras]\n").unwrap_err();
        assert!(matches!(e, ConfigError::UnknownSection { line: 3, .. }));
        assert!(matches!(parse_config("nx = 8\n").unwrap_err(), ConfigError::Syntax { line: 1, .. }));
        assert!(matches!(parse_config("[grid]\nnx 8\n").unwrap_err(), ConfigError::Syntax { line: 2, .. }));
        assert!(matches!(parse_config("[grid]\nnx = 8\n").unwrap_err(), ConfigError::Missing { key: "nsteps", .. }));
        let e = parse_config("[grid]\nnx = 8\nnsteps = 2\ndt = 1\n[initial]\npreset = driven\n").unwrap_err();
        assert!(matches!(e, ConfigError::Invalid { line: 4, .. }), "{e}");
        let e = parse_config("[grid]\nnx = 8\nnsteps = 2\n[initial]\npreset = nowhere\n").unwrap_err();
        assert!(matches!(e, ConfigError::Invalid { line: 5, .. }), "{e}");
    }

    #[test]
    fn missing_files_are_reported() {
        let mut c = parse_config("[grid]\nnx = 8\nnsteps = 2\n[initial]\nfile = nope.lcf\n[control]\nfile = nope.lcb\n").unwrap();
        assert!(matches!(c.resolve_files(Path::new("/nonexistent")), Err(ConfigError::MissingFile(_))));
    }
}
