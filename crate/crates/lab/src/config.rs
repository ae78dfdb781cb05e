//! Flat `key = value` configuration with `#` comments.
//!
//! Every key can also be given as a command-line flag of the same name
//! (underscores and hyphens are interchangeable); flags win over the file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use calabi_core::field::ConcatMode;
use calabi_core::flow::{IntegratorConfig, Scheme};
use calabi_core::quadrature::{QuadratureConfig, QuadratureRule};
use calabi_core::{Dim, LiouvilleKind};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {message}")]
    BadValue { key: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaChoice {
    Radial,
    Xdy,
    Both,
}

impl LambdaChoice {
    pub fn kinds(self) -> Vec<LiouvilleKind> {
        match self {
            LambdaChoice::Radial => vec![LiouvilleKind::Radial],
            LambdaChoice::Xdy => vec![LiouvilleKind::Xdy],
            LambdaChoice::Both => LiouvilleKind::ALL.to_vec(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            LambdaChoice::Radial => "radial",
            LambdaChoice::Xdy => "xdy",
            LambdaChoice::Both => "both",
        }
    }
}

impl FromStr for LambdaChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "radial" => Ok(LambdaChoice::Radial),
            "xdy" => Ok(LambdaChoice::Xdy),
            "both" => Ok(LambdaChoice::Both),
            other => Err(format!("expected radial, xdy or both, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabConfig {
    pub dim: Dim,
    pub lambda: LambdaChoice,
    pub integrator: IntegratorConfig,
    pub quadrature: QuadratureConfig,
    /// Points per axis of every probe grid. For the grid example this counts
    /// points per subcube side.
    pub grid_res: usize,
    pub delta: f64,
    pub kmin: usize,
    pub kmax: usize,
    pub eps: Vec<f64>,
    /// Smallest transition width of a grid bump, as a fraction of the cell.
    pub min_transition: f64,
    /// Target `dt · max‖∇²H‖` for grid runs; steps grow with `k` to meet it.
    pub grid_stiffness: f64,
    pub concat: ConcatMode,
    pub probes: usize,
    pub df_probes: usize,
    pub phase_probes: usize,
    pub sak_probes: usize,
    pub path_nodes: usize,
    pub newton_tol_alpha: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub svg: bool,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            dim: Dim::default(),
            lambda: LambdaChoice::Both,
            integrator: IntegratorConfig::default(),
            quadrature: QuadratureConfig::default(),
            grid_res: 33,
            delta: 0.5,
            kmin: 2,
            kmax: 8,
            eps: vec![0.2, 0.1, 0.05, 0.025],
            min_transition: 0.08,
            grid_stiffness: 1.5,
            concat: ConcatMode::Kink,
            probes: 200,
            df_probes: 100,
            phase_probes: 12,
            sak_probes: 24,
            path_nodes: calabi_core::phase::DEFAULT_PATH_NODES,
            newton_tol_alpha: 1e-12,
            seed: 24301,
            out: PathBuf::from("lab-out"),
            svg: false,
        }
    }
}

/// Every accepted key, in echo order.
pub const KEYS: &[&str] = &[
    "dim",
    "lambda",
    "scheme",
    "steps",
    "newton_tol",
    "newton_max_iter",
    "quad",
    "time_nodes",
    "rule",
    "grid_res",
    "delta",
    "kmin",
    "kmax",
    "eps",
    "min_transition",
    "grid_stiffness",
    "concat",
    "probes",
    "df_probes",
    "phase_probes",
    "sak_probes",
    "path_nodes",
    "newton_tol_alpha",
    "seed",
    "out",
    "svg",
];

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V, ConfigError>
where
    V::Err: std::fmt::Display,
{
    value.parse().map_err(|e: V::Err| ConfigError::BadValue {
        key: key.into(),
        message: e.to_string(),
    })
}

fn bad(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.into(),
        message: message.into(),
    }
}

pub fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl LabConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            })?;
            self.set(key, value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = normalize_key(key);
        let k = key.as_str();
        match k {
            "dim" => self.dim = Dim::new(parse(k, value)?).map_err(|e| bad(k, e.to_string()))?,
            "lambda" => self.lambda = parse(k, value)?,
            "scheme" => self.integrator.scheme = parse::<Scheme>(k, value)?,
            "steps" => self.integrator.steps = parse(k, value)?,
            "newton_tol" => self.integrator.newton_tol = parse(k, value)?,
            "newton_max_iter" => self.integrator.newton_max_iter = parse(k, value)?,
            "quad" => self.quadrature.spatial_nodes_per_axis = parse(k, value)?,
            "time_nodes" => self.quadrature.time_nodes = parse(k, value)?,
            "rule" => self.quadrature.rule = parse::<QuadratureRule>(k, value)?,
            "grid_res" => self.grid_res = parse(k, value)?,
            "delta" => self.delta = parse(k, value)?,
            "kmin" => self.kmin = parse(k, value)?,
            "kmax" => self.kmax = parse(k, value)?,
            "eps" => {
                self.eps = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse(k, s))
                    .collect::<Result<_, _>>()?
            }
            "min_transition" => self.min_transition = parse(k, value)?,
            "grid_stiffness" => self.grid_stiffness = parse(k, value)?,
            "concat" => {
                self.concat = match value {
                    "kink" => ConcatMode::Kink,
                    "smooth" => ConcatMode::Smooth,
                    other => return Err(bad(k, format!("expected kink or smooth, got `{other}`"))),
                }
            }
            "probes" => self.probes = parse(k, value)?,
            "df_probes" => self.df_probes = parse(k, value)?,
            "phase_probes" => self.phase_probes = parse(k, value)?,
            "sak_probes" => self.sak_probes = parse(k, value)?,
            "path_nodes" => self.path_nodes = parse(k, value)?,
            "newton_tol_alpha" => self.newton_tol_alpha = parse(k, value)?,
            "seed" => self.seed = parse(k, value)?,
            "out" => self.out = PathBuf::from(value),
            "svg" => self.svg = parse(k, value)?,
            _ => return Err(ConfigError::UnknownKey(key)),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.integrator.validate().map_err(|e| bad("steps", e.to_string()))?;
        self.quadrature.validate().map_err(|e| bad("quad", e.to_string()))?;
        if self.grid_res < 2 {
            return Err(bad("grid_res", "need at least 2 points per axis"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(bad("delta", "must be positive"));
        }
        if self.kmin == 0 || self.kmin > self.kmax {
            return Err(bad("kmin", format!("need 1 ≤ kmin ≤ kmax, got {}..{}", self.kmin, self.kmax)));
        }
        if self.eps.iter().any(|e| !e.is_finite()) {
            return Err(bad("eps", "entries must be finite"));
        }
        if !(self.min_transition > 0.0 && self.min_transition < 0.5) {
            return Err(bad("min_transition", "must lie in (0, 0.5)"));
        }
        if !(self.grid_stiffness > 0.0 && self.grid_stiffness.is_finite()) {
            return Err(bad("grid_stiffness", "must be positive"));
        }
        if self.path_nodes == 0 {
            return Err(bad("path_nodes", "must be positive"));
        }
        if !(self.newton_tol_alpha > 0.0) {
            return Err(bad("newton_tol_alpha", "must be positive"));
        }
        Ok(())
    }

    pub fn kinds(&self) -> Vec<LiouvilleKind> {
        self.lambda.kinds()
    }

    pub fn value_of(&self, key: &str) -> String {
        match key {
            "dim" => self.dim.half().to_string(),
            "lambda" => self.lambda.name().into(),
            "scheme" => match self.integrator.scheme {
                Scheme::ImplicitMidpoint => "implicit_midpoint".into(),
                Scheme::Rk4 => "rk4".into(),
            },
            "steps" => self.integrator.steps.to_string(),
            "newton_tol" => format!("{:e}", self.integrator.newton_tol),
            "newton_max_iter" => self.integrator.newton_max_iter.to_string(),
            "quad" => self.quadrature.spatial_nodes_per_axis.to_string(),
            "time_nodes" => self.quadrature.time_nodes.to_string(),
            "rule" => match self.quadrature.rule {
                QuadratureRule::GaussLegendre => "gauss_legendre".into(),
                QuadratureRule::Midpoint => "midpoint".into(),
            },
            "grid_res" => self.grid_res.to_string(),
            "delta" => self.delta.to_string(),
            "kmin" => self.kmin.to_string(),
            "kmax" => self.kmax.to_string(),
            "eps" => self.eps.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","),
            "min_transition" => self.min_transition.to_string(),
            "grid_stiffness" => self.grid_stiffness.to_string(),
            "concat" => match self.concat {
                ConcatMode::Kink => "kink".into(),
                ConcatMode::Smooth => "smooth".into(),
            },
            "probes" => self.probes.to_string(),
            "df_probes" => self.df_probes.to_string(),
            "phase_probes" => self.phase_probes.to_string(),
            "sak_probes" => self.sak_probes.to_string(),
            "path_nodes" => self.path_nodes.to_string(),
            "newton_tol_alpha" => format!("{:e}", self.newton_tol_alpha),
            "seed" => self.seed.to_string(),
            "out" => self.out.display().to_string(),
            "svg" => self.svg.to_string(),
            other => unreachable!("unknown key {other}"),
        }
    }

    /// The effective configuration in the file format; parsing it back
    /// reproduces `self`.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        for key in KEYS {
            let _ = writeln!(s, "{key} = {}", self.value_of(key));
        }
        s
    }
}
