use std::collections::BTreeSet;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{DesignName, EnsembleConfig, MseSweepConfig, SparsityConfig};
use crate::covmodel::{CovarianceSpec, Taper, TaperedCovariance};
use crate::error::{Error, Result};
use crate::field::{draw_sample, uniform_in_ball, BoxDomain, GridSpec};
use crate::kriging::{build_system, KrigingSystem, MseReport};
use crate::linalg::{assemble_sparse_tapered, sparsity};
use crate::responses::ResponseKind;
use crate::rng::{derive_seed, rng_from_seed, stream};
use crate::simulate::{run_modes_with, sample_sites, ConditioningMode, EnsembleSpec, GridSimulator};
use crate::sparsity::{forecast, sparsity_index};
use crate::stats::{ks_two_sample, summarize, DistSummary, KsResult};

/// Simulation MSE ratios and sparsity at one taper range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subtitle {
    pub theta_ratio: f64,
    pub taper_range: f64,
    /// `Σ MSE^s(x, C₁) / Σ MSE^s(x, C₀)` over probe nodes.
    pub ratio_t: f64,
    /// `Σ MSE^s(x, C₀, C₁) / Σ MSE^s(x, C₀)` over probe nodes.
    pub ratio_ht: f64,
    pub sparsity_forecast: f64,
    pub sparsity_measured: f64,
}

/// One response under the three modes.
#[derive(Debug, Clone)]
pub struct ResponseComparison {
    pub kind: ResponseKind,
    /// Values in the order of [`ConditioningMode::ALL`].
    pub values: [Vec<f64>; 3],
    pub summaries: [DistSummary; 3],
    pub ks_t: KsResult,
    pub ks_ht: KsResult,
}

impl ResponseComparison {
    pub fn of(&self, mode: ConditioningMode) -> &[f64] {
        &self.values[mode_index(mode)]
    }

    pub fn summary(&self, mode: ConditioningMode) -> &DistSummary {
        &self.summaries[mode_index(mode)]
    }
}

fn mode_index(mode: ConditioningMode) -> usize {
    ConditioningMode::ALL.iter().position(|m| *m == mode).expect("known mode")
}

#[derive(Debug, Clone)]
pub struct ThetaOutcome {
    pub theta_ratio: f64,
    pub taper_range: f64,
    pub realizations_per_sample: usize,
    pub subtitle: Subtitle,
    pub responses: Vec<ResponseComparison>,
}

pub(super) fn ensemble_spec(cfg: &EnsembleConfig, cov0: CovarianceSpec, taper: Taper, grid: &GridSpec) -> Result<EnsembleSpec> {
    let mut spec = EnsembleSpec::per_sample(
        cov0,
        taper,
        grid.clone(),
        cfg.n_data,
        cfg.n_samples,
        cfg.realizations_per_sample,
    );
    spec.design = cfg.design.design(&BoxDomain::new(grid.side_lengths())?)?;
    if !cfg.corners {
        spec.mandatory_nodes.clear();
    }
    Ok(spec)
}

fn probe_nodes(grid: &GridSpec, sites: &[usize], count: usize, seed: u64) -> Vec<usize> {
    let taken: BTreeSet<usize> = sites.iter().copied().collect();
    let mut rng = rng_from_seed(seed);
    let mut out = BTreeSet::new();
    while out.len() < count {
        let k = rng.gen_range(0..grid.len());
        if !taken.contains(&k) {
            out.insert(k);
        }
    }
    out.into_iter().collect()
}

fn subtitle(cfg: &EnsembleConfig, spec: &EnsembleSpec, seed: u64, theta_ratio: f64) -> Result<Subtitle> {
    let grid = &spec.grid;
    let nodes = grid.to_points();
    let tc = spec.tapered();
    let n_sub = cfg.subtitle_samples.clamp(1, spec.n_samples) as u64;
    let parts: Vec<Result<([f64; 3], f64)>> = (0..n_sub)
        .into_par_iter()
        .map(|s| {
            let sites = sample_sites(spec, seed, s)?;
            let pts = nodes.subset(&sites)?;
            let sys0 = build_system(spec.cov0, &pts, false)?;
            let sys1: KrigingSystem = build_system(tc, &pts, true)?;
            let mut acc = [0.0; 3];
            for k in probe_nodes(grid, &sites, cfg.probes, derive_seed(seed, &[stream::PROBE, s])) {
                let rep = MseReport::from_systems(&sys0, &sys1, &grid.node(k))?;
                acc[0] += rep.mses_f;
                acc[1] += rep.mses_t;
                acc[2] += rep.mses_ht;
            }
            Ok((acc, sparsity(&assemble_sparse_tapered(&tc, &pts)?)))
        })
        .collect();
    let mut acc = [0.0; 3];
    let mut sp = 0.0;
    for p in parts {
        let (a, s) = p?;
        for k in 0..3 {
            acc[k] += a[k];
        }
        sp += s;
    }
    let domain = BoxDomain::new(grid.side_lengths())?;
    Ok(Subtitle {
        theta_ratio,
        taper_range: spec.taper.theta(),
        ratio_t: acc[1] / acc[0],
        ratio_ht: acc[2] / acc[0],
        sparsity_forecast: forecast(&spec.taper, &domain, spec.n_data)?.index,
        sparsity_measured: sp / n_sub as f64,
    })
}

/// Runs F, T and HT for every taper-range ratio of `cfg`. `on_theta` sees
/// each outcome as soon as it is complete.
pub fn run_ensemble_experiment(
    cfg: &EnsembleConfig,
    seed: u64,
    mut on_theta: impl FnMut(&ThetaOutcome) -> Result<()>,
) -> Result<Vec<ThetaOutcome>> {
    let cov0 = cfg.covariance.spec()?;
    let family = cfg.taper_family()?;
    let grid = cfg.grid_spec()?;
    let eff = cov0.effective_range();
    let sim0 = Arc::new(GridSimulator::new(&cov0, &grid)?);
    log::info!(
        "simulating {} nodes by {} under {}",
        grid.len(),
        sim0.method_name(),
        cov0
    );
    let modes = ConditioningMode::ALL;
    let mut outcomes = Vec::with_capacity(cfg.ratios.len());
    for &ratio in &cfg.ratios {
        let taper = Taper::new(family, ratio * eff)?;
        let spec = ensemble_spec(cfg, cov0, taper, &grid)?;
        let raw = run_modes_with(&spec, &modes, seed, Some(sim0.clone()), |ctx| {
            cfg.responses
                .iter()
                .map(|r| r.evaluate(ctx.grid, ctx.values))
                .collect::<Result<Vec<f64>>>()
        })?;
        let mut responses = Vec::with_capacity(cfg.responses.len());
        for (ri, kind) in cfg.responses.iter().enumerate() {
            let mut values: [Vec<f64>; 3] = Default::default();
            for (mi, per_mode) in raw.iter().enumerate() {
                values[mi] = per_mode
                    .iter()
                    .map(|r| r.as_ref().map(|v| v[ri]).map_err(|e| Error::Numerical(e.to_string())))
                    .collect::<Result<_>>()?;
            }
            let summaries = [summarize(&values[0])?, summarize(&values[1])?, summarize(&values[2])?];
            responses.push(ResponseComparison {
                kind: *kind,
                ks_t: ks_two_sample(&values[1], &values[0])?,
                ks_ht: ks_two_sample(&values[2], &values[0])?,
                values,
                summaries,
            });
        }
        let outcome = ThetaOutcome {
            theta_ratio: ratio,
            taper_range: taper.theta(),
            realizations_per_sample: cfg.realizations_per_sample,
            subtitle: subtitle(cfg, &spec, seed, ratio)?,
            responses,
        };
        log::info!(
            "θ-ratio {ratio}: MSE^s ratios T {:.4}, HT {:.4}",
            outcome.subtitle.ratio_t,
            outcome.subtitle.ratio_ht
        );
        on_theta(&outcome)?;
        outcomes.push(outcome);
    }
    Ok(outcomes)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MseSweepRow {
    pub covariance: String,
    pub taper: String,
    pub theta_ratio: f64,
    pub theta: f64,
    /// Mean over samples of `MSE(x, C₁) / σ²_{k,C₀}(x)`.
    pub mean_ratio: f64,
    /// `mean MSE(x, C₁) / mean σ²_{k,C₀}(x)`.
    pub ratio_of_means: f64,
    pub min_ratio: f64,
    pub mses_ratio_t: f64,
    pub mses_ratio_ht: f64,
}

impl MseSweepRow {
    pub const CSV_HEADER: &'static str =
        "covariance,taper,theta_ratio,theta,mean_ratio,ratio_of_means,min_ratio,mses_ratio_t,mses_ratio_ht";

    pub fn csv_line(&self) -> String {
        format!(
            "\"{}\",{},{},{},{},{},{},{},{}",
            self.covariance,
            self.taper,
            self.theta_ratio,
            self.theta,
            self.mean_ratio,
            self.ratio_of_means,
            self.min_ratio,
            self.mses_ratio_t,
            self.mses_ratio_ht
        )
    }
}

/// Prediction MSE ratio at the domain center as a function of the taper
/// range, for every covariance and taper in `cfg`. Samples are shared by
/// all combinations.
pub fn run_mse_sweep(cfg: &MseSweepConfig, seed: u64) -> Result<Vec<MseSweepRow>> {
    let domain = BoxDomain::unit(cfg.dim)?;
    let design = cfg.design.design(&domain)?;
    let x = domain.center();
    let samples = (0..cfg.n_samples as u64)
        .map(|s| draw_sample(&design, cfg.n, &domain, derive_seed(seed, &[stream::SAMPLE, s])))
        .collect::<Result<Vec<_>>>()?;
    let families = cfg.taper_families()?;
    let mut rows = Vec::new();
    for entry in &cfg.covariances {
        let cov0 = entry.spec()?;
        let eff = cov0.effective_range();
        let sys0 = samples
            .par_iter()
            .map(|pts| build_system(cov0, pts, false))
            .collect::<Result<Vec<_>>>()?;
        for (family, name) in families.iter().zip(&cfg.tapers) {
            for &ratio in &cfg.ratios {
                let taper = Taper::new(*family, ratio * eff)?;
                let tc = TaperedCovariance::new(cov0, taper);
                let reps = samples
                    .par_iter()
                    .zip(&sys0)
                    .map(|(pts, s0)| MseReport::from_systems(s0, &build_system(tc, pts, true)?, &x))
                    .collect::<Result<Vec<_>>>()?;
                let n = reps.len() as f64;
                let ratios: Vec<f64> = reps.iter().map(|r| r.mse_plugin / r.sk_var_c0).collect();
                let sum = |f: fn(&MseReport) -> f64| reps.iter().map(f).sum::<f64>();
                rows.push(MseSweepRow {
                    covariance: entry.label(),
                    taper: name.clone(),
                    theta_ratio: ratio,
                    theta: taper.theta(),
                    mean_ratio: ratios.iter().sum::<f64>() / n,
                    ratio_of_means: sum(|r| r.mse_plugin) / sum(|r| r.sk_var_c0),
                    min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
                    mses_ratio_t: sum(|r| r.mses_t) / sum(|r| r.mses_f),
                    mses_ratio_ht: sum(|r| r.mses_ht) / sum(|r| r.mses_f),
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparsityRow {
    pub dim: usize,
    pub theta: f64,
    /// `theory`, `ball`, `box` or a design name.
    pub source: String,
    pub n: usize,
    pub sparsity: f64,
}

impl SparsityRow {
    pub const CSV_HEADER: &'static str = "dim,theta,source,n,sparsity";

    pub fn csv_line(&self) -> String {
        format!("{},{},{},{},{}", self.dim, self.theta, self.source, self.n, self.sparsity)
    }
}

/// Theoretical sparsity index against measured sparsity of tapered
/// matrices for points in the unit ball, in a box of equal measure, and for
/// each sampling design over that box.
pub fn run_sparsity_table(cfg: &SparsityConfig, seed: u64) -> Result<Vec<SparsityRow>> {
    let family = cfg.taper_family()?;
    // sparsity does not depend on the covariance being tapered
    let cov = CovarianceSpec::exponential(1.0, 1.0)?;
    let mut rows = Vec::new();
    for (di, &dim) in cfg.dims.iter().enumerate() {
        let side = match dim {
            2 => std::f64::consts::PI.sqrt(),
            _ => (4.0 * std::f64::consts::PI / 3.0).cbrt(),
        };
        let domain = BoxDomain::new(vec![side; dim])?;
        let mut rng = rng_from_seed(derive_seed(seed, &[stream::SAMPLE, di as u64]));
        let mut sets = vec![
            ("ball".to_string(), uniform_in_ball(cfg.n_points, dim, 1.0, &mut rng)?),
            (
                "box".to_string(),
                draw_sample(&DesignName::Random.design(&domain)?, cfg.n_points, &domain, derive_seed(seed, &[stream::SAMPLE, di as u64, 1]))?,
            ),
        ];
        let n_design = cfg.design_points[dim - 2];
        for (k, d) in cfg.designs.iter().enumerate() {
            let design = d.design(&domain)?;
            let pts = draw_sample(&design, n_design, &domain, derive_seed(seed, &[stream::SAMPLE, di as u64, 2 + k as u64]))?;
            sets.push((design.name().to_string(), pts));
        }
        for &theta in &cfg.thetas {
            rows.push(SparsityRow {
                dim,
                theta,
                source: "theory".into(),
                n: cfg.n_points,
                sparsity: sparsity_index(theta, cfg.n_points, dim)?,
            });
        }
        let jobs: Vec<(usize, f64)> = (0..sets.len()).flat_map(|s| cfg.thetas.iter().map(move |&t| (s, t))).collect();
        let measured = jobs
            .par_iter()
            .map(|&(s, theta)| {
                let tc = TaperedCovariance::new(cov, Taper::new(family, theta)?);
                let (name, pts) = &sets[s];
                Ok(SparsityRow {
                    dim,
                    theta,
                    source: name.clone(),
                    n: pts.len(),
                    sparsity: sparsity(&assemble_sparse_tapered(&tc, pts)?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(measured);
    }
    Ok(rows)
}
