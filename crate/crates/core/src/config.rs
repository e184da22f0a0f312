//! Run configuration: a flat key-value document, one `key = value` per line,
//! dotted keys for nesting (`trap.h = 5`, `interaction.g0 = 4.7`).
//!
//! The common physical knobs are also accepted at the top level (`g0`, `h`,
//! `w`, `alpha`, `L`, `sigma`).

use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{validation, Error, Result};
use crate::grid1p::{make_grid, Grid, TrapSpec};
use crate::interaction::InteractionSpec;
use crate::solver::{KrylovOptions, Method, RelaxOptions};

const DEFAULT_SCAN_POINTS: usize = 16;
const DEFAULT_SCAN_RANGE: (f64, f64) = (0.1, 200.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    G0,
    Alpha,
    H,
    N,
}

impl ScanAxis {
    pub fn name(self) -> &'static str {
        match self {
            ScanAxis::G0 => "g0",
            ScanAxis::Alpha => "alpha",
            ScanAxis::H => "h",
            ScanAxis::N => "n",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Artifact {
    Energy,
    Rho1,
    Rho2,
    Occupations,
    Displacement,
    Orbitals,
    Tensor,
}

impl Artifact {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "energy" => Artifact::Energy,
            "rho1" => Artifact::Rho1,
            "rho2" => Artifact::Rho2,
            "occupations" => Artifact::Occupations,
            "displacement" => Artifact::Displacement,
            "orbitals" => Artifact::Orbitals,
            "tensor" => Artifact::Tensor,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridConfig {
    pub x_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
    pub dtau: f64,
}

impl SolverConfig {
    pub fn krylov(&self) -> KrylovOptions {
        KrylovOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            ..KrylovOptions::default()
        }
    }

    /// Imaginary time stops on the per-step energy drop; `tol` is reused as
    /// that threshold only when it is tighter than the default.
    pub fn relax(&self) -> RelaxOptions {
        let defaults = RelaxOptions::default();
        RelaxOptions {
            dtau: self.dtau,
            tol: defaults.tol.min(self.tol),
            ..defaults
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanConfig {
    pub axis: ScanAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub artifacts: Vec<Artifact>,
}

impl OutputConfig {
    pub fn wants(&self, artifact: Artifact) -> bool {
        self.artifacts.contains(&artifact)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    #[serde(rename = "N")]
    pub n_particles: usize,
    #[serde(rename = "n")]
    pub n_orbitals: usize,
    pub trap: TrapSpec,
    pub interaction: InteractionSpec,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub scan: Option<ScanConfig>,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn make_grid(&self) -> Result<Grid> {
        make_grid(self.grid.x_max, self.grid.points)
    }

    /// Hex SHA-256 of the canonical JSON form of the resolved configuration
    /// (output directory excluded), truncated to 16 characters.
    pub fn hash(&self) -> String {
        let mut key = self.clone();
        key.output.dir = None;
        let canonical = serde_json::to_string(&key).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    pub fn scan_values(&self) -> Option<&[f64]> {
        self.scan.as_ref().map(|s| s.values.as_slice())
    }
}

/// `count` geometrically spaced points from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let ratio = (hi / lo).ln() / (count - 1) as f64;
    (0..count)
        .map(|k| {
            if k + 1 == count {
                hi
            } else {
                lo * (ratio * k as f64).exp()
            }
        })
        .collect()
}

pub fn default_scan_values() -> Vec<f64> {
    geometric_grid(
        DEFAULT_SCAN_RANGE.0,
        DEFAULT_SCAN_RANGE.1,
        DEFAULT_SCAN_POINTS,
    )
}

/// Flatten nested tables into `(dotted.path, value)` pairs.
fn flatten(prefix: &str, table: &Table, out: &mut Vec<(String, Value)>) {
    for (key, value) in table {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match value {
            Value::Table(inner) => flatten(&path, inner, out),
            other => out.push((path, other.clone())),
        }
    }
}

fn canonical_key(key: &str) -> &str {
    match key {
        "g0" => "interaction.g0",
        "alpha" => "interaction.alpha",
        "L" => "interaction.L",
        "sigma" => "interaction.sigma",
        "h" => "trap.h",
        "w" => "trap.w",
        other => other,
    }
}

fn as_float(key: &str, value: &Value) -> Result<f64> {
    let v = match value {
        Value::Float(f) => *f,
        Value::Integer(i) => *i as f64,
        other => {
            return Err(validation(format!(
                "{key}: expected a number, got {}",
                other.type_str()
            )))
        }
    };
    if !v.is_finite() {
        return Err(validation(format!("{key}: must be finite")));
    }
    Ok(v)
}

fn as_count(key: &str, value: &Value) -> Result<usize> {
    match value {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        Value::Integer(i) => Err(validation(format!("{key}: must be >= 0, got {i}"))),
        other => Err(validation(format!(
            "{key}: expected an integer, got {}",
            other.type_str()
        ))),
    }
}

fn as_str<'a>(key: &str, value: &'a Value) -> Result<&'a str> {
    value.as_str().ok_or_else(|| {
        validation(format!(
            "{key}: expected a string, got {}",
            value.type_str()
        ))
    })
}

fn as_array<'a>(key: &str, value: &'a Value) -> Result<&'a [Value]> {
    value.as_array().map(|a| a.as_slice()).ok_or_else(|| {
        validation(format!(
            "{key}: expected an array, got {}",
            value.type_str()
        ))
    })
}

/// Report a syntax error with the line, and the key assigned on that line
/// when there is one.
fn malformed(text: &str, e: &toml::de::Error) -> Error {
    let detail = e.message().trim();
    let Some(span) = e.span() else {
        return validation(format!("malformed config: {detail}"));
    };
    let start = span.start.min(text.len());
    let line_no = text[..start].matches('\n').count() + 1;
    let line = text.lines().nth(line_no - 1).unwrap_or("");
    match line.split_once('=') {
        Some((key, _)) if !key.trim().is_empty() => validation(format!(
            "{}: malformed value on line {line_no}: {detail}",
            key.trim()
        )),
        _ => validation(format!("malformed config on line {line_no}: {detail}")),
    }
}

/// Parse and validate a configuration document, filling defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| malformed(text, &e))?;
    let mut entries = Vec::new();
    flatten("", &table, &mut entries);

    let mut n_particles = None;
    let mut n_orbitals = None;
    let mut trap = TrapSpec::harmonic();
    let mut interaction = InteractionSpec::homogeneous(0.0);
    let mut g0 = None;
    let mut grid = GridConfig {
        x_max: 8.0,
        points: 1024,
    };
    let defaults = KrylovOptions::default();
    let mut solver = SolverConfig {
        method: Method::Krylov,
        tol: defaults.tol,
        max_iter: defaults.max_iter,
        dtau: RelaxOptions::default().dtau,
    };
    let mut axis = None;
    let mut values = None;
    let mut output = OutputConfig {
        dir: None,
        artifacts: vec![
            Artifact::Energy,
            Artifact::Rho1,
            Artifact::Occupations,
            Artifact::Displacement,
        ],
    };
    let mut seen = std::collections::HashSet::new();

    for (raw, value) in &entries {
        let key = canonical_key(raw);
        if !seen.insert(key.to_string()) {
            return Err(validation(format!("{raw}: given more than once")));
        }
        match key {
            "N" => n_particles = Some(as_count(raw, value)?),
            "n" => n_orbitals = Some(as_count(raw, value)?),
            "trap.h" => trap.h = as_float(raw, value)?,
            "trap.w" => trap.w = as_float(raw, value)?,
            "interaction.g0" => g0 = Some(as_float(raw, value)?),
            "interaction.alpha" => interaction.alpha = as_float(raw, value)?,
            "interaction.L" => interaction.length = as_float(raw, value)?,
            "interaction.sigma" => interaction.sigma = as_float(raw, value)?,
            "grid.x_max" => grid.x_max = as_float(raw, value)?,
            "grid.points" => grid.points = as_count(raw, value)?,
            "solver.method" => {
                solver.method = match as_str(raw, value)? {
                    "krylov" => Method::Krylov,
                    "imaginary_time" => Method::ImaginaryTime,
                    other => {
                        return Err(validation(format!(
                            "{raw}: expected krylov or imaginary_time, got {other:?}"
                        )))
                    }
                }
            }
            "solver.tol" => solver.tol = as_float(raw, value)?,
            "solver.max_iter" => solver.max_iter = as_count(raw, value)?,
            "solver.dtau" => solver.dtau = as_float(raw, value)?,
            "scan.axis" => {
                axis = Some(match as_str(raw, value)? {
                    "g0" => ScanAxis::G0,
                    "alpha" => ScanAxis::Alpha,
                    "h" => ScanAxis::H,
                    "n" => ScanAxis::N,
                    other => {
                        return Err(validation(format!(
                            "{raw}: expected g0, alpha, h or n, got {other:?}"
                        )))
                    }
                })
            }
            "scan.values" => {
                let list = as_array(raw, value)?
                    .iter()
                    .enumerate()
                    .map(|(i, v)| as_float(&format!("{raw}[{i}]"), v))
                    .collect::<Result<Vec<_>>>()?;
                values = Some(list);
            }
            "output.dir" => output.dir = Some(PathBuf::from(as_str(raw, value)?)),
            "output.artifacts" => {
                output.artifacts = as_array(raw, value)?
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let name = as_str(&format!("{raw}[{i}]"), v)?;
                        Artifact::parse(name).ok_or_else(|| {
                            validation(format!("{raw}[{i}]: unknown artifact {name:?}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
            }
            _ => return Err(validation(format!("{raw}: unknown key"))),
        }
    }

    let n_particles = n_particles.ok_or_else(|| validation("N: required"))?;
    let n_orbitals = n_orbitals.ok_or_else(|| validation("n: required"))?;
    if n_particles == 0 {
        return Err(validation("N: must be >= 1"));
    }
    if n_orbitals == 0 {
        return Err(validation("n: must be >= 1"));
    }
    interaction.g0 = g0.unwrap_or(0.0);
    if interaction.g0 < 0.0 {
        return Err(validation(format!(
            "interaction.g0: must be >= 0, got {}",
            interaction.g0
        )));
    }
    trap.validate().map_err(|e| prefixed("trap", e))?;
    interaction
        .validate()
        .map_err(|e| prefixed("interaction", e))?;
    make_grid(grid.x_max, grid.points).map_err(|e| prefixed("grid", e))?;
    if !(solver.tol > 0.0) {
        return Err(validation("solver.tol: must be > 0"));
    }
    if solver.max_iter == 0 {
        return Err(validation("solver.max_iter: must be >= 1"));
    }
    if !(solver.dtau > 0.0) {
        return Err(validation("solver.dtau: must be > 0"));
    }

    let scan = match (axis, values) {
        (None, None) => None,
        (None, Some(_)) => return Err(validation("scan.values: given without scan.axis")),
        (Some(axis), values) => {
            let values = match (axis, values) {
                (_, Some(v)) => v,
                (ScanAxis::G0, None) => default_scan_values(),
                (ScanAxis::N, None) => (1..=n_orbitals).map(|k| k as f64).collect(),
                (_, None) => {
                    return Err(validation(format!(
                        "scan.values: required for axis {}",
                        axis.name()
                    )))
                }
            };
            validate_scan(axis, &values, &interaction, n_orbitals)?;
            Some(ScanConfig { axis, values })
        }
    };

    Ok(RunConfig {
        n_particles,
        n_orbitals,
        trap,
        interaction,
        grid,
        solver,
        scan,
        output,
    })
}

fn prefixed(section: &str, e: Error) -> Error {
    match e {
        Error::Validation(m) => validation(format!("{section}: {m}")),
        other => other,
    }
}

fn validate_scan(
    axis: ScanAxis,
    values: &[f64],
    interaction: &InteractionSpec,
    n_orbitals: usize,
) -> Result<()> {
    if values.is_empty() {
        return Err(validation("scan.values: must not be empty"));
    }
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(validation("scan.values: must be strictly ascending"));
    }
    for (i, &v) in values.iter().enumerate() {
        let key = format!("scan.values[{i}]");
        let ok = match axis {
            ScanAxis::G0 => v >= 0.0,
            ScanAxis::Alpha => {
                let probe = InteractionSpec {
                    alpha: v,
                    ..*interaction
                };
                probe.validate().is_ok()
            }
            ScanAxis::H => v >= 0.0,
            ScanAxis::N => v >= 1.0 && v.fract() == 0.0 && v as usize <= n_orbitals,
        };
        if !ok {
            let rule = match axis {
                ScanAxis::G0 | ScanAxis::H => "must be >= 0".to_string(),
                ScanAxis::Alpha => {
                    "must lie in [0, 1) and respect the slow-modulation bound".to_string()
                }
                ScanAxis::N => format!("must be an integer in 1..={n_orbitals}"),
            };
            return Err(validation(format!("{key}: {rule}, got {v}")));
        }
    }
    Ok(())
}
