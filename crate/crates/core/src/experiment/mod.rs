//! Experiment configurations and runners producing the data tables behind
//! each figure-style comparison.

mod output;
mod run;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::covmodel::{CovarianceSpec, Taper, TaperFamily};
use crate::error::{Error, Result};
use crate::field::{BoxDomain, GridSpec, SamplingDesign};
use crate::responses::{Adjacency, ResponseKind};
use crate::simulate::EnsembleSpec;

pub use output::{csv_preamble, ExperimentWriter};
pub use run::{
    run_ensemble_experiment, run_mse_sweep, run_sparsity_table, MseSweepRow, ResponseComparison,
    SparsityRow, Subtitle, ThetaOutcome,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    MseSweep,
    SparsityCurve,
    Profile1d,
    Connectivity2d,
    Transit2d,
    Connectivity3d,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::MseSweep,
        ExperimentKind::SparsityCurve,
        ExperimentKind::Profile1d,
        ExperimentKind::Connectivity2d,
        ExperimentKind::Transit2d,
        ExperimentKind::Connectivity3d,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::MseSweep => "mse_sweep",
            ExperimentKind::SparsityCurve => "sparsity_curve",
            ExperimentKind::Profile1d => "profile1d",
            ExperimentKind::Connectivity2d => "connectivity2d",
            ExperimentKind::Transit2d => "transit2d",
            ExperimentKind::Connectivity3d => "connectivity3d",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == t)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind `{s}`")))
    }

    pub fn is_ensemble(&self) -> bool {
        !matches!(self, ExperimentKind::MseSweep | ExperimentKind::SparsityCurve)
    }
}

/// Run size: `Desk` finishes in minutes, `Full` uses the full-size layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignName {
    Regular,
    Stratified,
    Random,
    Cox,
}

impl DesignName {
    pub fn design(&self, domain: &BoxDomain) -> Result<SamplingDesign> {
        Ok(match self {
            DesignName::Regular => SamplingDesign::RegularGrid,
            DesignName::Stratified => SamplingDesign::RandomStratified,
            DesignName::Random => SamplingDesign::PurelyRandom,
            DesignName::Cox => SamplingDesign::default_cox(domain)?,
        })
    }
}

/// A covariance written in the model grammar, e.g. `matern(nu=1)`,
/// optionally rescaled to an effective range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovEntry {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effective_range: Option<f64>,
}

impl CovEntry {
    pub fn new(model: &str, effective_range: Option<f64>) -> Self {
        Self {
            model: model.to_string(),
            effective_range,
        }
    }

    pub fn spec(&self) -> Result<CovarianceSpec> {
        let base: CovarianceSpec = self.model.parse().map_err(config_err)?;
        match self.effective_range {
            Some(r) => base.with_effective_range(r).map_err(config_err),
            None => Ok(base),
        }
    }

    pub fn label(&self) -> String {
        match self.effective_range {
            Some(r) => format!("{} [eff={r}]", self.model),
            None => self.model.clone(),
        }
    }
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

fn parse_taper(name: &str) -> Result<TaperFamily> {
    name.parse().map_err(config_err)
}

/// Settings shared by the F/T/HT ensemble experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub covariance: CovEntry,
    pub taper: String,
    /// Taper range divided by the effective range of the covariance.
    pub ratios: Vec<f64>,
    /// Nodes per axis.
    pub grid: Vec<usize>,
    #[serde(default = "one")]
    pub spacing: f64,
    #[serde(default = "default_design")]
    pub design: DesignName,
    pub n_data: usize,
    pub n_samples: usize,
    pub realizations_per_sample: usize,
    /// Always condition on the grid corners.
    #[serde(default = "yes")]
    pub corners: bool,
    pub responses: Vec<ResponseKind>,
    /// Non-data nodes per sample where simulation MSE ratios are evaluated.
    #[serde(default = "default_probes")]
    pub probes: usize,
    /// Samples used for the MSE ratios and the measured sparsity.
    #[serde(default = "default_subtitle_samples")]
    pub subtitle_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MseSweepConfig {
    pub covariances: Vec<CovEntry>,
    pub tapers: Vec<String>,
    pub ratios: Vec<f64>,
    pub n: usize,
    pub n_samples: usize,
    #[serde(default = "default_sweep_design")]
    pub design: DesignName,
    #[serde(default = "two")]
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparsityConfig {
    /// Normalized taper ranges.
    pub thetas: Vec<f64>,
    pub dims: Vec<usize>,
    /// Points in the disk/sphere and box comparison.
    pub n_points: usize,
    pub designs: Vec<DesignName>,
    /// Points per design in 2D and 3D.
    pub design_points: [usize; 2],
    #[serde(default = "default_sparsity_taper")]
    pub taper: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mse_sweep: Option<MseSweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparsity: Option<SparsityConfig>,
}

fn one() -> f64 {
    1.0
}
fn two() -> usize {
    2
}
fn yes() -> bool {
    true
}
fn default_design() -> DesignName {
    DesignName::Random
}
fn default_sweep_design() -> DesignName {
    DesignName::Stratified
}
fn default_probes() -> usize {
    5
}
fn default_subtitle_samples() -> usize {
    5
}
fn default_sparsity_taper() -> String {
    "spherical".into()
}

const DEFAULT_RATIOS: [f64; 7] = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0];

impl ExperimentConfig {
    pub fn preset(kind: ExperimentKind, scale: Scale) -> Self {
        let full = scale == Scale::Full;
        let mut cfg = Self {
            kind,
            seed: 20190101,
            ensemble: None,
            mse_sweep: None,
            sparsity: None,
        };
        let ratios = DEFAULT_RATIOS.to_vec();
        match kind {
            ExperimentKind::MseSweep => {
                cfg.mse_sweep = Some(MseSweepConfig {
                    covariances: vec![
                        CovEntry::new("spherical(range=1)", None),
                        CovEntry::new("exponential", Some(1.0)),
                        CovEntry::new("cubic(range=1)", None),
                        CovEntry::new("matern(nu=1)", Some(1.0)),
                    ],
                    tapers: ["spherical", "cubic", "penta", "bohman", "wendland1"].map(String::from).to_vec(),
                    ratios: (1..=12).map(|k| k as f64 * 0.25).collect(),
                    n: 400,
                    n_samples: if full { 50 } else { 20 },
                    design: DesignName::Stratified,
                    dim: 2,
                })
            }
            ExperimentKind::SparsityCurve => {
                cfg.sparsity = Some(SparsityConfig {
                    thetas: (1..=20).map(|k| k as f64 / 10.0).collect(),
                    dims: vec![2, 3],
                    n_points: 2000,
                    designs: vec![DesignName::Regular, DesignName::Stratified, DesignName::Random, DesignName::Cox],
                    design_points: [2500, 3375],
                    taper: default_sparsity_taper(),
                })
            }
            ExperimentKind::Profile1d => {
                cfg.ensemble = Some(EnsembleConfig {
                    covariance: CovEntry::new("exponential", Some(33.0)),
                    taper: "spherical".into(),
                    ratios,
                    grid: vec![100],
                    spacing: 1.0,
                    design: DesignName::Random,
                    n_data: 10,
                    n_samples: 500,
                    realizations_per_sample: 1,
                    corners: true,
                    responses: vec![ResponseKind::MaxConsecDiff, ResponseKind::ProfileLength],
                    probes: default_probes(),
                    subtitle_samples: 20,
                })
            }
            ExperimentKind::Connectivity2d | ExperimentKind::Transit2d => {
                let m = if full { 100 } else { 50 };
                let transit = kind == ExperimentKind::Transit2d;
                cfg.ensemble = Some(EnsembleConfig {
                    covariance: CovEntry::new("matern(nu=1)", Some((m - 1) as f64 / 2.0)),
                    taper: "wendland1".into(),
                    ratios,
                    grid: vec![m, m],
                    spacing: 1.0,
                    design: DesignName::Random,
                    n_data: 100,
                    n_samples: if full { 40 } else { 10 },
                    realizations_per_sample: match (full, transit) {
                        (true, false) => 40,
                        _ => 10,
                    },
                    corners: true,
                    responses: vec![if transit {
                        ResponseKind::TransitTime
                    } else {
                        ResponseKind::Connectivity {
                            p: 0.3,
                            adjacency: Adjacency::Face,
                        }
                    }],
                    probes: default_probes(),
                    subtitle_samples: default_subtitle_samples(),
                })
            }
            ExperimentKind::Connectivity3d => {
                let m = if full { 50 } else { 30 };
                cfg.ensemble = Some(EnsembleConfig {
                    covariance: CovEntry::new("exponential", Some(m as f64 / 3.0)),
                    taper: "spherical".into(),
                    ratios,
                    grid: vec![m, m, m],
                    spacing: 1.0,
                    design: DesignName::Random,
                    n_data: 100,
                    n_samples: 40,
                    realizations_per_sample: if full { 40 } else { 10 },
                    corners: true,
                    responses: vec![ResponseKind::Connectivity {
                        p: 0.2,
                        adjacency: Adjacency::Face,
                    }],
                    probes: default_probes(),
                    subtitle_samples: default_subtitle_samples(),
                })
            }
        }
        cfg
    }

    /// Checks every field before any computation.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let check_ratios = |r: &[f64]| -> Result<()> {
            if r.is_empty() || r.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(Error::Config(format!("ratios must be nonempty and positive: {r:?}")));
            }
            Ok(())
        };
        match self.kind {
            ExperimentKind::MseSweep => {
                let Some(c) = &self.mse_sweep else {
                    return bad("mse_sweep section missing".into());
                };
                if c.covariances.is_empty() || c.tapers.is_empty() {
                    return bad("mse_sweep needs covariances and tapers".into());
                }
                for e in &c.covariances {
                    e.spec()?;
                }
                for t in &c.tapers {
                    parse_taper(t)?;
                }
                check_ratios(&c.ratios)?;
                if c.n == 0 || c.n_samples == 0 || !(1..=3).contains(&c.dim) {
                    return bad("mse_sweep needs n, n_samples >= 1 and dim in 1..=3".into());
                }
            }
            ExperimentKind::SparsityCurve => {
                let Some(c) = &self.sparsity else {
                    return bad("sparsity section missing".into());
                };
                check_ratios(&c.thetas)?;
                if c.dims.is_empty() || c.dims.iter().any(|d| !(2..=3).contains(d)) {
                    return bad(format!("sparsity dims must be 2 or 3: {:?}", c.dims));
                }
                if c.n_points < 2 || c.design_points.iter().any(|&n| n < 2) {
                    return bad("sparsity point counts must be at least 2".into());
                }
                parse_taper(&c.taper)?;
            }
            _ => {
                let Some(c) = &self.ensemble else {
                    return bad("ensemble section missing".into());
                };
                c.covariance.spec()?;
                parse_taper(&c.taper)?;
                check_ratios(&c.ratios)?;
                let want_dim = match self.kind {
                    ExperimentKind::Profile1d => 1,
                    ExperimentKind::Connectivity3d => 3,
                    _ => 2,
                };
                if c.grid.len() != want_dim {
                    return bad(format!("{} needs a {want_dim}D grid, got {:?}", self.kind.name(), c.grid));
                }
                let grid = c.grid_spec()?;
                let mandatory = if c.corners { grid.corner_indices().len() } else { 0 };
                if c.n_data < mandatory.max(1) || c.n_data > grid.len() {
                    return bad(format!(
                        "n_data = {} must lie in [{}, {}]",
                        c.n_data,
                        mandatory.max(1),
                        grid.len()
                    ));
                }
                if c.n_samples == 0 || c.realizations_per_sample == 0 {
                    return bad("n_samples and realizations_per_sample must be positive".into());
                }
                if c.responses.is_empty() {
                    return bad("at least one response is required".into());
                }
                for r in &c.responses {
                    let ok = match r {
                        ResponseKind::MaxConsecDiff | ResponseKind::ProfileLength => want_dim == 1,
                        ResponseKind::Connectivity { p, .. } => want_dim >= 2 && *p > 0.0 && *p < 1.0,
                        ResponseKind::TransitTime => want_dim == 2,
                    };
                    if !ok {
                        return bad(format!("response {r} does not fit a {want_dim}D experiment"));
                    }
                }
                if c.probes == 0 || c.probes + c.n_data > grid.len() {
                    return bad("probes must be positive and fit beside the data".into());
                }
            }
        }
        Ok(())
    }

    /// Stable hash of the configuration, seed included.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }
}

impl EnsembleConfig {
    pub fn grid_spec(&self) -> Result<GridSpec> {
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return Err(Error::Config(format!("spacing must be positive (got {})", self.spacing)));
        }
        if self.grid.is_empty() || self.grid.iter().any(|&c| c == 0) {
            return Err(Error::Config(format!("grid counts must be positive: {:?}", self.grid)));
        }
        GridSpec::regular(self.grid.clone(), self.spacing).map_err(config_err)
    }

    pub fn taper_family(&self) -> Result<TaperFamily> {
        parse_taper(&self.taper)
    }

    /// Ensemble layout with taper range `ratio ×` the effective range.
    pub fn ensemble_spec(&self, ratio: f64) -> Result<EnsembleSpec> {
        let cov0 = self.covariance.spec()?;
        let taper = Taper::new(self.taper_family()?, ratio * cov0.effective_range()).map_err(config_err)?;
        run::ensemble_spec(self, cov0, taper, &self.grid_spec()?)
    }
}

impl MseSweepConfig {
    pub fn taper_families(&self) -> Result<Vec<TaperFamily>> {
        self.tapers.iter().map(|t| parse_taper(t)).collect()
    }
}

impl SparsityConfig {
    pub fn taper_family(&self) -> Result<TaperFamily> {
        parse_taper(&self.taper)
    }
}
