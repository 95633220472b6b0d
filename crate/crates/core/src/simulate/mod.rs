//! Unconditional Gaussian simulation and conditioning by kriging in the
//! full (F), tapered (T) and half-tapered (HT) modes.

mod circulant;
mod ensemble;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::covmodel::{CovModel, Covariance, CovarianceSpec, Taper, TaperedCovariance};
use crate::error::{Error, Result};
use crate::field::{dist, GridSpec, PointSet};
use crate::kriging::{build_system, KrigingSystem};
use crate::linalg::{assemble_dense, cholesky, CholFactor, JitterPolicy};
use crate::rng::rng_from_seed;

pub use circulant::CirculantEmbedding;
pub use ensemble::{
    run_ensemble, run_modes, run_modes_with, sample_sites, select_sites, Ensemble, EnsembleSpec,
    RealizationContext,
};

/// Largest location set simulated with a dense Cholesky factor.
pub const DENSE_LIMIT: usize = 8000;

/// Which covariance drives the unconditional simulation and which the
/// conditioning kriging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConditioningMode {
    F,
    T,
    HT,
}

impl ConditioningMode {
    pub const ALL: [ConditioningMode; 3] = [ConditioningMode::F, ConditioningMode::T, ConditioningMode::HT];

    pub fn name(&self) -> &'static str {
        match self {
            ConditioningMode::F => "F",
            ConditioningMode::T => "T",
            ConditioningMode::HT => "HT",
        }
    }

    pub fn simulation_model(&self, c0: &CovarianceSpec, taper: &Taper) -> CovModel {
        match self {
            ConditioningMode::T => TaperedCovariance::new(*c0, *taper).into(),
            _ => (*c0).into(),
        }
    }

    pub fn conditioning_model(&self, c0: &CovarianceSpec, taper: &Taper) -> CovModel {
        match self {
            ConditioningMode::F => (*c0).into(),
            _ => TaperedCovariance::new(*c0, *taper).into(),
        }
    }
}

impl fmt::Display for ConditioningMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConditioningMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "F" => Ok(ConditioningMode::F),
            "T" => Ok(ConditioningMode::T),
            "HT" => Ok(ConditioningMode::HT),
            other => Err(Error::Parse(format!("unknown conditioning mode `{other}`"))),
        }
    }
}

pub(crate) fn standard_normals(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Dense Cholesky sampler at a fixed location set.
#[derive(Debug, Clone)]
pub struct UnconditionalSampler {
    factor: CholFactor,
}

impl UnconditionalSampler {
    pub fn new(cov: &impl Covariance, sites: &PointSet) -> Result<Self> {
        if sites.len() > DENSE_LIMIT {
            return Err(Error::invalid(format!(
                "{} sites exceed the dense simulation limit of {DENSE_LIMIT}",
                sites.len()
            )));
        }
        let factor = cholesky(&assemble_dense(cov, sites), JitterPolicy::default())?;
        Ok(Self { factor })
    }

    pub fn len(&self) -> usize {
        self.factor.n()
    }

    pub fn is_empty(&self) -> bool {
        self.factor.n() == 0
    }

    pub fn jitter_applied(&self) -> f64 {
        self.factor.jitter_applied()
    }

    /// `L ε` with `ε` drawn from the stream of `seed`.
    pub fn draw(&self, seed: u64) -> Vec<f64> {
        let eps = standard_normals(seed, self.len());
        self.factor.lower_mul(&eps).expect("length matches factor")
    }
}

/// One unconditional draw at `sites`.
pub fn unconditional(cov: &impl Covariance, sites: &PointSet, seed: u64) -> Result<Vec<f64>> {
    Ok(UnconditionalSampler::new(cov, sites)?.draw(seed))
}

#[derive(Debug, Clone)]
enum GridMethod {
    Cholesky(UnconditionalSampler),
    Circulant(CirculantEmbedding),
}

/// Unconditional simulation on a grid: dense Cholesky up to
/// [`DENSE_LIMIT`] nodes, circulant embedding beyond.
#[derive(Debug, Clone)]
pub struct GridSimulator {
    grid: GridSpec,
    method: GridMethod,
}

impl GridSimulator {
    pub fn new(cov: &impl Covariance, grid: &GridSpec) -> Result<Self> {
        Self::with_dense_limit(cov, grid, DENSE_LIMIT)
    }

    pub fn with_dense_limit(cov: &impl Covariance, grid: &GridSpec, limit: usize) -> Result<Self> {
        let method = if grid.len() <= limit {
            GridMethod::Cholesky(UnconditionalSampler::new(cov, &grid.to_points())?)
        } else {
            GridMethod::Circulant(CirculantEmbedding::new(cov, grid)?)
        };
        Ok(Self {
            grid: grid.clone(),
            method,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn method_name(&self) -> &'static str {
        match self.method {
            GridMethod::Cholesky(_) => "cholesky",
            GridMethod::Circulant(_) => "circulant",
        }
    }

    pub fn draw(&self, seed: u64) -> Vec<f64> {
        match &self.method {
            GridMethod::Cholesky(s) => s.draw(seed),
            GridMethod::Circulant(c) => c.draw(seed),
        }
    }
}

/// An unconditional field on a grid together with its values at the data
/// sites, drawn jointly.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub grid: GridSpec,
    pub grid_values: Vec<f64>,
    pub data_sites: PointSet,
    pub data_site_values: Vec<f64>,
}

#[derive(Debug, Clone)]
enum JointKind {
    // sites sit on grid nodes: read them off a grid draw
    OnGrid { sim: Arc<GridSimulator>, nodes: Vec<usize> },
    // one factor over sites stacked above the grid nodes
    Stacked(UnconditionalSampler),
}

/// Joint simulator for data sites and grid under one covariance.
#[derive(Debug, Clone)]
pub struct JointSimulator {
    grid: GridSpec,
    sites: PointSet,
    kind: JointKind,
}

/// Grid node indices of `sites`, or `None` if some site is off the grid.
pub fn sites_on_grid(grid: &GridSpec, sites: &PointSet) -> Option<Vec<usize>> {
    let tol = 1e-9 * grid.spacing.iter().cloned().fold(f64::INFINITY, f64::min);
    sites
        .iter()
        .map(|p| {
            let k = grid.nearest_node(p);
            (dist(&grid.node(k), p) <= tol).then_some(k)
        })
        .collect()
}

impl JointSimulator {
    pub fn new(cov: &impl Covariance, grid: &GridSpec, sites: &PointSet) -> Result<Self> {
        if sites_on_grid(grid, sites).is_some() {
            return Self::on_grid(Arc::new(GridSimulator::new(cov, grid)?), sites);
        }
        let stacked = sites.concat(&grid.to_points())?;
        Ok(Self {
            grid: grid.clone(),
            sites: sites.clone(),
            kind: JointKind::Stacked(UnconditionalSampler::new(cov, &stacked)?),
        })
    }

    /// Reuses a grid simulator; every site must coincide with a node.
    pub fn on_grid(sim: Arc<GridSimulator>, sites: &PointSet) -> Result<Self> {
        let nodes = sites_on_grid(sim.grid(), sites)
            .ok_or_else(|| Error::invalid("data sites do not coincide with grid nodes"))?;
        Ok(Self {
            grid: sim.grid().clone(),
            sites: sites.clone(),
            kind: JointKind::OnGrid { sim, nodes },
        })
    }

    pub fn draw(&self, seed: u64) -> Realization {
        let (grid_values, data_site_values) = match &self.kind {
            JointKind::OnGrid { sim, nodes } => {
                let g = sim.draw(seed);
                let s = nodes.iter().map(|&k| g[k]).collect();
                (g, s)
            }
            JointKind::Stacked(s) => {
                let mut all = s.draw(seed);
                let g = all.split_off(self.sites.len());
                (g, all)
            }
        };
        Realization {
            grid: self.grid.clone(),
            grid_values,
            data_sites: self.sites.clone(),
            data_site_values,
        }
    }
}

/// A conditional realization on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalRealization {
    pub grid_values: Vec<f64>,
    pub mode: ConditioningMode,
    pub seed: u64,
    pub sample_id: u64,
    pub realization_id: u64,
}

/// Kriging from data sites to grid nodes with one factorization, applied
/// as `Z* + Z_s − Z_s* = Z_s + k′K⁻¹(z − z_s)`.
#[derive(Debug, Clone)]
pub struct PostConditioner {
    system: KrigingSystem,
    n_grid: usize,
    // grid-by-site cross covariances, nonzeros only (CSR)
    rowptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl PostConditioner {
    /// Tapered models are factorized on the sparse path.
    pub fn new(cov: impl Into<CovModel>, sites: &PointSet, grid: &GridSpec) -> Result<Self> {
        let cov = cov.into();
        if sites.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                got: sites.dim(),
            });
        }
        let system = build_system(cov, sites, true)?;
        let support = cov.support();
        let n_grid = grid.len();
        let mut rowptr = Vec::with_capacity(n_grid + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        rowptr.push(0);
        for g in 0..n_grid {
            let x = grid.node(g);
            for (i, p) in sites.iter().enumerate() {
                let d = dist(&x, p);
                if support.is_some_and(|s| d >= s) {
                    continue;
                }
                let v = cov.covariance(d);
                if v != 0.0 {
                    cols.push(i);
                    vals.push(v);
                }
            }
            rowptr.push(cols.len());
        }
        Ok(Self {
            system,
            n_grid,
            rowptr,
            cols,
            vals,
        })
    }

    pub fn system(&self) -> &KrigingSystem {
        &self.system
    }

    fn check(&self, len: usize, expected: usize) -> Result<()> {
        if len != expected {
            return Err(Error::DimensionMismatch { expected, got: len });
        }
        Ok(())
    }

    fn krige_residual(&self, residual: &[f64]) -> Result<Vec<f64>> {
        let alpha = self.system.factor().solve(residual)?;
        Ok((0..self.n_grid)
            .map(|g| {
                (self.rowptr[g]..self.rowptr[g + 1])
                    .map(|p| self.vals[p] * alpha[self.cols[p]])
                    .sum()
            })
            .collect())
    }

    /// Kriging estimate `Z*` of the grid from data values.
    pub fn kriging_field(&self, data: &[f64]) -> Result<Vec<f64>> {
        self.check(data.len(), self.system.points().len())?;
        self.krige_residual(data)
    }

    /// `Z_cs` on the grid for simulated grid values and simulated values at
    /// the data sites.
    pub fn condition_values(&self, data: &[f64], sim_sites: &[f64], sim_grid: &[f64]) -> Result<Vec<f64>> {
        let n = self.system.points().len();
        self.check(data.len(), n)?;
        self.check(sim_sites.len(), n)?;
        self.check(sim_grid.len(), self.n_grid)?;
        let residual: Vec<f64> = data.iter().zip(sim_sites).map(|(z, s)| z - s).collect();
        let mut out = self.krige_residual(&residual)?;
        for (o, s) in out.iter_mut().zip(sim_grid) {
            *o += s;
        }
        Ok(out)
    }

    pub fn condition(&self, data: &[f64], u: &Realization) -> Result<Vec<f64>> {
        if u.data_sites != *self.system.points() {
            return Err(Error::invalid("realization data sites differ from the kriging sites"));
        }
        self.condition_values(data, &u.data_site_values, &u.grid_values)
    }
}

/// Conditions one unconditional realization on `data_values` by kriging
/// with `cond_cov`.
pub fn post_condition(
    u: &Realization,
    data_values: &[f64],
    cond_cov: impl Into<CovModel>,
    mode: ConditioningMode,
    seed: u64,
) -> Result<ConditionalRealization> {
    let pc = PostConditioner::new(cond_cov, &u.data_sites, &u.grid)?;
    Ok(ConditionalRealization {
        grid_values: pc.condition(data_values, u)?,
        mode,
        seed,
        sample_id: 0,
        realization_id: 0,
    })
}
