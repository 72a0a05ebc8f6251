//! `RunConfig`: a plain-text `key = value` file plus flag overrides.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use heightfrag::measure::DislocationFunctional;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "HEIGHTFRAG_OUT";
const DEFAULT_OUT: &str = "heightfrag-out";

/// Identities checked by `verify`, with their default relative tolerances.
pub const IDENTITY_TOLERANCES: [(&str, f64); 9] = [
    ("phi_levy_integral", 1e-6),
    ("phi_zero_density", 1e-6),
    ("moment_chain", 1e-12),
    ("rho_sum", 1e-12),
    ("kappa_rho", 1e-12),
    ("kappa_restriction", 1e-10),
    ("eppf_sum", 1e-12),
    ("u_flow", 1e-13),
    ("entrance_quadrature", 1e-10),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub alpha_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub n_samples: usize,
    pub epsilon: f64,
    pub n_vertices: usize,
    pub output_dir: PathBuf,
    pub tolerances: BTreeMap<String, f64>,
    /// Trees per size for `asymptotics`, and per seed for tree samples.
    pub trees: usize,
    pub functionals: Vec<DislocationFunctional>,
    /// Stopping rule of the conditioned jump sampler.
    pub k_max: usize,
    pub delta: f64,
    /// Euler grid of `csbp-path`.
    pub dt: f64,
    pub t_max: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha_grid: vec![1.1, 1.3, 1.5, 1.7, 1.9],
            seeds: vec![1],
            n_samples: 10_000,
            epsilon: 1e-6,
            n_vertices: 20_000,
            output_dir: PathBuf::from(DEFAULT_OUT),
            tolerances: IDENTITY_TOLERANCES.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            trees: 200,
            functionals: vec![
                DislocationFunctional::PowerSum { r: 1.0 },
                DislocationFunctional::MassDefect,
                DislocationFunctional::LargestBelow { delta: 0.3 },
                DislocationFunctional::SizeBiasedComplement,
            ],
            k_max: 64,
            delta: 1e-3,
            dt: 0.01,
            t_max: 1.0,
        }
    }
}

fn bad(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Config { field: field.to_string(), reason: reason.into() }
}

fn parse_num<T: std::str::FromStr>(field: &str, raw: &str) -> Result<T, CliError> {
    raw.trim().parse().map_err(|_| bad(field, format!("cannot parse `{}`", raw.trim())))
}

fn parse_list<T: std::str::FromStr>(field: &str, raw: &str) -> Result<Vec<T>, CliError> {
    raw.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_num(field, s)).collect()
}

/// `power_sum[:r]`, `mass_defect`, `largest_below[:delta]`, `size_biased_complement`.
pub fn parse_functional(raw: &str) -> Result<DislocationFunctional, CliError> {
    let raw = raw.trim();
    let (name, arg) = match raw.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (raw, None),
    };
    let f = match (name, arg) {
        ("power_sum", a) => DislocationFunctional::PowerSum { r: a.map_or(Ok(1.0), |a| parse_num("functionals", a))? },
        ("mass_defect", None) => DislocationFunctional::MassDefect,
        ("largest_below", a) => {
            DislocationFunctional::LargestBelow { delta: a.map_or(Ok(0.3), |a| parse_num("functionals", a))? }
        }
        ("size_biased_complement", None) => DislocationFunctional::SizeBiasedComplement,
        _ => return Err(bad("functionals", format!("unknown functional `{raw}`"))),
    };
    f.validate().map_err(|e| bad("functionals", e.to_string()))?;
    Ok(f)
}

fn functional_key(f: &DislocationFunctional) -> String {
    match *f {
        DislocationFunctional::PowerSum { r } => format!("power_sum:{r}"),
        DislocationFunctional::MassDefect => "mass_defect".into(),
        DislocationFunctional::LargestBelow { delta } => format!("largest_below:{delta}"),
        DislocationFunctional::SizeBiasedComplement => "size_biased_complement".into(),
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Defaults, with the output directory taken from [`OUT_ENV`] if set.
    pub fn from_env() -> Self {
        let mut cfg = RunConfig::default();
        if let Some(dir) = std::env::var_os(OUT_ENV).filter(|d| !d.is_empty()) {
            cfg.output_dir = PathBuf::from(dir);
        }
        cfg
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim();
        let value = value.trim();
        match key {
            "alpha_grid" => self.alpha_grid = parse_list(key, value)?,
            "seeds" => self.seeds = parse_list(key, value)?,
            "n_samples" => self.n_samples = parse_num(key, value)?,
            "epsilon" => self.epsilon = parse_num(key, value)?,
            "n_vertices" => self.n_vertices = parse_num(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "trees" => self.trees = parse_num(key, value)?,
            "functionals" => {
                self.functionals =
                    value.split(',').filter(|s| !s.trim().is_empty()).map(parse_functional).collect::<Result<_, _>>()?
            }
            "k_max" => self.k_max = parse_num(key, value)?,
            "delta" => self.delta = parse_num(key, value)?,
            "dt" => self.dt = parse_num(key, value)?,
            "t_max" => self.t_max = parse_num(key, value)?,
            _ => match key.strip_prefix("tolerance.") {
                Some(name) => self.set_tolerance(name, value)?,
                None => return Err(bad(key, "unknown configuration key")),
            },
        }
        Ok(())
    }

    pub fn set_tolerance(&mut self, name: &str, value: &str) -> Result<(), CliError> {
        let field = format!("tolerance.{name}");
        if !IDENTITY_TOLERANCES.iter().any(|(k, _)| *k == name) {
            return Err(bad(&field, "unknown identity"));
        }
        let v: f64 = parse_num(&field, value)?;
        if !(v > 0.0) {
            return Err(bad(&field, format!("{v} must be positive")));
        }
        self.tolerances.insert(name.to_string(), v);
        Ok(())
    }

    /// Applies every line of a config file; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(&format!("line {}", i + 1), format!("expected `key = value`, got `{line}`")))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad("config", format!("{}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.alpha_grid.is_empty() {
            return Err(bad("alpha_grid", "needs at least one value"));
        }
        if let Some(a) = self.alpha_grid.iter().find(|&&a| !(a > 1.0 && a < 2.0)) {
            return Err(bad("alpha_grid", format!("{a} is not in the open interval (1, 2)")));
        }
        if self.seeds.is_empty() {
            return Err(bad("seeds", "needs at least one seed"));
        }
        if self.n_samples < 1 {
            return Err(bad("n_samples", "must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(bad("epsilon", format!("{} must be positive", self.epsilon)));
        }
        if self.trees < 1 {
            return Err(bad("trees", "must be at least 1"));
        }
        if self.k_max < 1 {
            return Err(bad("k_max", "must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(bad("delta", format!("{} is not in (0, 1)", self.delta)));
        }
        if !(self.dt > 0.0 && self.t_max >= self.dt && self.t_max.is_finite()) {
            return Err(bad("dt", format!("need 0 < dt <= t_max, got dt {} and t_max {}", self.dt, self.t_max)));
        }
        Ok(())
    }

    /// Canonical `key = value` rendering; parsing it back gives the same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "alpha_grid = {}", join(&self.alpha_grid));
        let _ = writeln!(s, "seeds = {}", join(&self.seeds));
        let _ = writeln!(s, "n_samples = {}", self.n_samples);
        let _ = writeln!(s, "epsilon = {}", self.epsilon);
        let _ = writeln!(s, "n_vertices = {}", self.n_vertices);
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(s, "trees = {}", self.trees);
        let fs: Vec<String> = self.functionals.iter().map(functional_key).collect();
        let _ = writeln!(s, "functionals = {}", fs.join(","));
        let _ = writeln!(s, "k_max = {}", self.k_max);
        let _ = writeln!(s, "delta = {}", self.delta);
        let _ = writeln!(s, "dt = {}", self.dt);
        let _ = writeln!(s, "t_max = {}", self.t_max);
        for (k, v) in &self.tolerances {
            let _ = writeln!(s, "tolerance.{k} = {v}");
        }
        s
    }

    /// SHA-256 of [`to_text`](Self::to_text), hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn tolerance(&self, identity: &str) -> f64 {
        self.tolerances[identity]
    }
}
