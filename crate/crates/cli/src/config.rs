//! Run configuration: a versioned JSON document validated before any work.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use otoc_core::cluster::{DEFAULT_ENUMERATION_BUDGET, DEFAULT_GRAPH_BUDGET};
use otoc_core::evolve::DEFAULT_STRING_BUDGET;
use otoc_core::locality::NormKind;
use otoc_core::{Boundary, Lattice, Letter, ModelSpec, DEFAULT_DENSE_CUTOFF};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub lattice: LatticeBlock,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    pub experiment: Experiment,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeBlock {
    pub extents: Vec<usize>,
    #[serde(default = "open")]
    pub boundary: Boundary,
}

fn open() -> Boundary {
    Boundary::Open
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budgets {
    /// Largest site count handled with dense `2^n × 2^n` matrices.
    pub dense_cutoff: usize,
    /// Live Pauli strings allowed in a truncated series.
    pub string_budget: usize,
    /// Strings visited by a cluster enumeration.
    pub enumeration_budget: usize,
    /// Largest `m` for connection-graph enumeration.
    pub graph_budget: usize,
    /// Wall-clock allowance in seconds; exceeding it is a warning.
    pub wall_clock_seconds: f64,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            dense_cutoff: DEFAULT_DENSE_CUTOFF,
            string_budget: DEFAULT_STRING_BUDGET,
            enumeration_budget: DEFAULT_ENUMERATION_BUDGET,
            graph_budget: DEFAULT_GRAPH_BUDGET,
            wall_clock_seconds: 900.0,
        }
    }
}

/// Either explicit sample times or `count` evenly spaced points on
/// `[start, stop]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeGrid {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl TimeGrid {
    pub fn points(&self) -> anyhow::Result<Vec<f64>> {
        let pts = match self {
            TimeGrid::Values(v) => v.clone(),
            TimeGrid::Range { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                _ => (0..*count)
                    .map(|k| start + (stop - start) * k as f64 / (*count - 1) as f64)
                    .collect(),
            },
        };
        if pts.iter().any(|t| !t.is_finite()) {
            bail!("time grid contains a non-finite value");
        }
        Ok(pts)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OtocMethod {
    /// Exact propagator and exact normalized trace.
    Dense,
    /// Truncated string series, exact trace of the truncation.
    Series,
    /// Truncated string series, Hutchinson trace estimate.
    Stochastic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    LatticeInfo {
        /// Centres and radii of the balls whose shell tables are printed.
        #[serde(default)]
        center: usize,
        #[serde(default = "default_shell_radii")]
        radii: Vec<usize>,
    },
    ModelCheck {},
    Otoc {
        #[serde(default)]
        w_site: usize,
        #[serde(default = "default_letter")]
        w_letter: char,
        #[serde(default = "default_letter")]
        v_letter: char,
        /// Defaults to every site other than `w_site`.
        #[serde(default)]
        probe_sites: Option<Vec<usize>>,
        times: TimeGrid,
        #[serde(default = "default_method")]
        method: OtocMethod,
        #[serde(default = "default_series_order")]
        series_order: usize,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    BoundCheck {
        #[serde(default)]
        center: usize,
        #[serde(default = "default_letter")]
        w_letter: char,
        #[serde(default = "default_letter")]
        v_letter: char,
        #[serde(default = "default_r0")]
        r0: Vec<usize>,
        radii: Vec<usize>,
        /// Slice counts `m_t`; the evolution time is `m_t · Δt`.
        steps: Vec<usize>,
        /// Defaults to `τ*/2`.
        #[serde(default)]
        dt: Option<f64>,
        #[serde(default = "default_norms")]
        norms: Vec<NormKind>,
        /// Shrink factor applied to `C₀` under `--sensitivity`.
        #[serde(default = "default_shrink")]
        sensitivity_factor: f64,
    },
    ClusterAudit {
        #[serde(default = "default_audit_order")]
        max_order: usize,
        #[serde(default = "default_graph_order")]
        graph_order: usize,
        #[serde(default = "default_consistency_order")]
        consistency_order: usize,
        /// Root site for the consistency check.
        #[serde(default)]
        root_site: usize,
    },
    Fit {
        /// OTOC table with `radius,t,otoc` columns, relative to the config.
        input: PathBuf,
        #[serde(default = "default_delta")]
        delta: f64,
        /// Check the front against the certified cone of the model block.
        #[serde(default = "yes")]
        containment: bool,
    },
}

fn default_shell_radii() -> Vec<usize> {
    vec![0, 1, 2]
}
fn default_letter() -> char {
    'Z'
}
fn default_method() -> OtocMethod {
    OtocMethod::Dense
}
fn default_series_order() -> usize {
    12
}
fn default_samples() -> usize {
    64
}
fn default_r0() -> Vec<usize> {
    vec![0]
}
fn default_norms() -> Vec<NormKind> {
    vec![NormKind::NormalizedFrobenius, NormKind::Operator]
}
fn default_shrink() -> f64 {
    1e-8
}
fn default_audit_order() -> usize {
    3
}
fn default_graph_order() -> usize {
    7
}
fn default_consistency_order() -> usize {
    4
}
fn default_delta() -> f64 {
    otoc_core::fit::DEFAULT_DELTA
}
fn yes() -> bool {
    true
}

impl Experiment {
    pub fn command(&self) -> &'static str {
        match self {
            Experiment::LatticeInfo { .. } => "lattice_info",
            Experiment::ModelCheck {} => "model_check",
            Experiment::Otoc { .. } => "otoc",
            Experiment::BoundCheck { .. } => "bound_check",
            Experiment::ClusterAudit { .. } => "cluster_audit",
            Experiment::Fit { .. } => "fit",
        }
    }
}

/// A parsed config together with the bytes it was read from.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub sha256: String,
    pub dir: PathBuf,
}

/// Malformed or semantically invalid configuration.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn load(path: &Path) -> anyhow::Result<LoadedConfig> {
    let bytes = std::fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
    let config = parse(&bytes)?;
    Ok(LoadedConfig {
        config,
        sha256: crate::output::sha256_hex(&bytes),
        dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
    })
}

pub fn parse(bytes: &[u8]) -> anyhow::Result<RunConfig> {
    let config: RunConfig = serde_json::from_slice(bytes).map_err(|e| ConfigError(e.to_string()))?;
    config.validate().map_err(|e| ConfigError(e.to_string()))?;
    Ok(config)
}

pub fn letter(c: char) -> anyhow::Result<Letter> {
    Ok(match c.to_ascii_uppercase() {
        'X' => Letter::X,
        'Y' => Letter::Y,
        'Z' => Letter::Z,
        other => bail!("Pauli letter must be X, Y or Z, got {other:?}"),
    })
}

impl RunConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            );
        }
        let lattice = self.build_lattice()?;
        let n = lattice.n_sites();
        let site = |s: usize, what: &str| -> anyhow::Result<()> {
            if s >= n {
                bail!("{what} {s} is outside a lattice of {n} sites");
            }
            Ok(())
        };
        let needs_model = !matches!(self.experiment, Experiment::LatticeInfo { .. } | Experiment::Fit { .. });
        if needs_model && self.model.is_none() {
            bail!("command {} needs a model block", self.experiment.command());
        }
        match &self.experiment {
            Experiment::LatticeInfo { center, .. } => site(*center, "center")?,
            Experiment::ModelCheck {} => {}
            Experiment::Otoc {
                w_site,
                w_letter,
                v_letter,
                probe_sites,
                times,
                samples,
                method,
                ..
            } => {
                site(*w_site, "w_site")?;
                letter(*w_letter)?;
                letter(*v_letter)?;
                for &p in probe_sites.iter().flatten() {
                    site(p, "probe site")?;
                }
                times.points()?;
                if *method == OtocMethod::Stochastic && *samples < 2 {
                    bail!("stochastic estimates need at least 2 samples");
                }
            }
            Experiment::BoundCheck {
                center,
                w_letter,
                v_letter,
                steps,
                dt,
                sensitivity_factor,
                ..
            } => {
                site(*center, "center")?;
                letter(*w_letter)?;
                letter(*v_letter)?;
                if steps.contains(&0) {
                    bail!("slice counts must be at least 1");
                }
                if let Some(dt) = dt {
                    if !(*dt > 0.0) || !dt.is_finite() {
                        bail!("dt must be positive and finite");
                    }
                }
                if !(*sensitivity_factor > 0.0 && *sensitivity_factor < 1.0) {
                    bail!("sensitivity_factor must lie in (0, 1)");
                }
            }
            Experiment::ClusterAudit { root_site, .. } => site(*root_site, "root_site")?,
            Experiment::Fit { delta, .. } => {
                if !(*delta > 0.0 && *delta <= 4.0) {
                    bail!("delta must lie in (0, 4]");
                }
            }
        }
        Ok(())
    }

    pub fn build_lattice(&self) -> anyhow::Result<Lattice> {
        Ok(Lattice::new(self.lattice.extents.clone(), self.lattice.boundary)?)
    }
}
