//! Run configuration: a single versioned JSON document. Every field has a
//! default; unknown keys are rejected so typos cannot silently change a run.

use std::path::{Path, PathBuf};

use cmdnls_core::evolve::{Scheme, SolverConfig};
use cmdnls_core::formula::SolveSettings;
use cmdnls_core::grid::GridSpec;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub version: u32,
    pub grid: GridConfig,
    pub datum: InitialDatum,
    pub solver: SolverSection,
    pub formula: FormulaSection,
    pub sweep: SweepConfig,
    pub out_dir: PathBuf,
    /// cmd_compare exits nonzero when max |formula - solver| exceeds this.
    pub compare_gate: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            grid: GridConfig::default(),
            datum: InitialDatum::default(),
            solver: SolverSection::default(),
            formula: FormulaSection::default(),
            sweep: SweepConfig::default(),
            out_dir: PathBuf::from("out"),
            compare_gate: 1e-6,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(invalid(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        self.grid.build()?;
        self.datum.validate()?;
        self.solver.validate()?;
        self.formula.validate()?;
        self.sweep.validate()?;
        if !(self.compare_gate > 0.0 && self.compare_gate.is_finite()) {
            return Err(invalid("compare_gate must be positive and finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub half_length: f64,
    pub size: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            half_length: 50.0,
            size: 1024,
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec, ConfigError> {
        GridSpec::new(self.half_length, self.size).map_err(|e| invalid(e.to_string()))
    }
}

/// One simple pole a / (x + i b); b > 0 keeps it in the lower half-plane.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleTerm {
    pub a: [f64; 2],
    pub b: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpTerm {
    pub amplitude: [f64; 2],
    pub width: f64,
    pub center: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantParams {
    pub c: [f64; 2],
}

impl Default for ConstantParams {
    fn default() -> Self {
        Self { c: [1.0, 0.0] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RationalParams {
    pub c: [f64; 2],
    pub terms: Vec<PoleTerm>,
}

impl Default for RationalParams {
    fn default() -> Self {
        Self {
            c: [1.0, 0.0],
            terms: vec![PoleTerm {
                a: [0.2, 0.0],
                b: 1.0,
            }],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaussianParams {
    pub c: [f64; 2],
    pub amplitude: [f64; 2],
    pub width: f64,
    pub center: f64,
}

impl Default for GaussianParams {
    fn default() -> Self {
        Self {
            c: [1.0, 0.0],
            amplitude: [0.1, 0.0],
            width: 1.0,
            center: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiBumpParams {
    pub c: [f64; 2],
    pub bumps: Vec<BumpTerm>,
}

impl Default for MultiBumpParams {
    fn default() -> Self {
        Self {
            c: [1.0, 0.0],
            bumps: vec![
                BumpTerm {
                    amplitude: [0.08, 0.0],
                    width: 1.0,
                    center: -6.0,
                },
                BumpTerm {
                    amplitude: [0.0, 0.05],
                    width: 1.5,
                    center: 6.0,
                },
            ],
        }
    }
}

/// Initial-data catalog. JSON shape: {"kind": "...", ...parameters}.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDatum {
    Constant(ConstantParams),
    Rational(RationalParams),
    GaussianBump(GaussianParams),
    MultiBump(MultiBumpParams),
}

impl Default for InitialDatum {
    fn default() -> Self {
        Self::GaussianBump(GaussianParams::default())
    }
}

const DATUM_KINDS: &[&str] = &["constant", "rational", "gaussian_bump", "multi_bump"];

// Manual dispatch on "kind": serde's internal tagging does not enforce
// deny_unknown_fields inside variants, and silent typos are rejected here.
impl<'de> Deserialize<'de> for InitialDatum {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let mut map = serde_json::Map::deserialize(de)?;
        let kind = map
            .remove("kind")
            .ok_or_else(|| D::Error::missing_field("kind"))?;
        let kind: String = serde_json::from_value(kind).map_err(D::Error::custom)?;
        let rest = serde_json::Value::Object(map);
        let datum = match kind.as_str() {
            "constant" => Self::Constant(serde_json::from_value(rest).map_err(D::Error::custom)?),
            "rational" => Self::Rational(serde_json::from_value(rest).map_err(D::Error::custom)?),
            "gaussian_bump" => {
                Self::GaussianBump(serde_json::from_value(rest).map_err(D::Error::custom)?)
            }
            "multi_bump" => {
                Self::MultiBump(serde_json::from_value(rest).map_err(D::Error::custom)?)
            }
            other => return Err(D::Error::unknown_variant(other, DATUM_KINDS)),
        };
        Ok(datum)
    }
}

fn check_unimodular(c: [f64; 2]) -> Result<(), ConfigError> {
    let norm = (c[0] * c[0] + c[1] * c[1]).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(invalid(format!(
            "background c must be unimodular so |u|^2 - 1 decays; got |c| = {norm}"
        )));
    }
    Ok(())
}

impl InitialDatum {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Constant(_) => "constant",
            Self::Rational(_) => "rational",
            Self::GaussianBump(_) => "gaussian_bump",
            Self::MultiBump(_) => "multi_bump",
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            Self::Constant(p) => check_unimodular(p.c),
            Self::Rational(p) => {
                check_unimodular(p.c)?;
                if p.terms.is_empty() {
                    return Err(invalid("rational datum needs at least one pole term"));
                }
                for (j, term) in p.terms.iter().enumerate() {
                    if !(term.b > 0.0 && term.b.is_finite()) {
                        return Err(invalid(format!(
                            "pole term {j} must sit in the lower half-plane (b > 0), got b = {}",
                            term.b
                        )));
                    }
                    if !(term.a[0].is_finite() && term.a[1].is_finite()) {
                        return Err(invalid(format!("pole term {j} has a non-finite amplitude")));
                    }
                }
                Ok(())
            }
            Self::GaussianBump(p) => {
                check_unimodular(p.c)?;
                if !(p.width > 0.0 && p.width.is_finite()) {
                    return Err(invalid(format!("width must be positive, got {}", p.width)));
                }
                if !(p.center.is_finite() && p.amplitude[0].is_finite() && p.amplitude[1].is_finite())
                {
                    return Err(invalid("gaussian_bump parameters must be finite"));
                }
                Ok(())
            }
            Self::MultiBump(p) => {
                check_unimodular(p.c)?;
                if p.bumps.is_empty() {
                    return Err(invalid("multi_bump datum needs at least one bump"));
                }
                for (j, bump) in p.bumps.iter().enumerate() {
                    if !(bump.width > 0.0 && bump.width.is_finite() && bump.center.is_finite()) {
                        return Err(invalid(format!("bump {j} has invalid width or center")));
                    }
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    IntegratingFactorRk4,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: SchemeName,
    pub snapshot_stride: usize,
    pub dealiasing: bool,
    pub leak_abort: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 1.0,
            scheme: SchemeName::IntegratingFactorRk4,
            snapshot_stride: 1,
            dealiasing: true,
            leak_abort: 1e-6,
        }
    }
}

impl SolverSection {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if self.snapshot_stride == 0 {
            return Err(invalid("snapshot_stride must be >= 1"));
        }
        if !self.t_final.is_finite() {
            return Err(invalid("t_final must be finite"));
        }
        Ok(())
    }

    pub fn to_core(&self) -> SolverConfig {
        SolverConfig {
            dt: self.dt,
            t_final: self.t_final,
            scheme: match self.scheme {
                SchemeName::IntegratingFactorRk4 => Scheme::IntegratingFactorRk4,
            },
            snapshot_stride: self.snapshot_stride,
            dealiasing: self.dealiasing,
            leak_abort: self.leak_abort,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FormulaSection {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub restart: usize,
    pub dense_limit: usize,
    pub dense_max: usize,
    pub condition_limit: f64,
    /// Grid-refinement ladder for the resolvent route (ascending factors).
    pub resolvent_refinement: Vec<usize>,
    /// Ladder for the boundary-trace route (dense in frequency, kept small).
    pub trace_refinement: Vec<usize>,
    pub z_min: f64,
}

impl Default for FormulaSection {
    fn default() -> Self {
        let s = SolveSettings::default();
        Self {
            tolerance: s.tolerance,
            max_iterations: s.max_iterations,
            restart: s.restart,
            dense_limit: s.dense_limit,
            dense_max: s.dense_max,
            condition_limit: s.condition_limit,
            resolvent_refinement: vec![2, 4, 8],
            trace_refinement: vec![1, 2],
            z_min: cmdnls_core::grid::Z_MIN_DEFAULT,
        }
    }
}

impl FormulaSection {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.tolerance > 0.0 && self.tolerance < 1e-8) {
            return Err(invalid(format!(
                "solve tolerance must lie in (0, 1e-8), got {}",
                self.tolerance
            )));
        }
        for ladder in [&self.resolvent_refinement, &self.trace_refinement] {
            if ladder.is_empty() || ladder[0] == 0 || ladder.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid(
                    "refinement ladders must be strictly ascending positive factors",
                ));
            }
        }
        if !(self.z_min > 0.0 && self.z_min.is_finite()) {
            return Err(invalid("z_min must be positive"));
        }
        Ok(())
    }

    pub fn to_core(&self) -> SolveSettings {
        SolveSettings {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            restart: self.restart,
            dense_limit: self.dense_limit,
            dense_max: self.dense_max,
            condition_limit: self.condition_limit,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub t: Vec<f64>,
    /// Evaluation points as [re, im] pairs, im > 0.
    pub z: Vec<[f64; 2]>,
    /// Dispersion parameters for cmd_zd; cmd_formula uses eps = 1 only.
    pub eps: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            t: vec![0.1, 0.5],
            z: vec![[0.0, 1.0], [0.0, 2.0], [1.0, 1.0]],
            eps: vec![1.0, 0.5, 0.25, 0.125, 0.0625],
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.t.is_empty() || self.z.is_empty() || self.eps.is_empty() {
            return Err(invalid("sweep grids must be nonempty"));
        }
        if self.t.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(invalid("sweep t values must be finite and nonnegative"));
        }
        if self
            .z
            .iter()
            .any(|z| !z[0].is_finite() || !(z[1] > 0.0 && z[1].is_finite()))
        {
            return Err(invalid("sweep z values must be finite with Im z > 0"));
        }
        if self.eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(invalid("sweep eps values must be finite and positive"));
        }
        Ok(())
    }
}
