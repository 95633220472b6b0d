//! Ensembles of conditional realizations for the F, T and HT modes.
//!
//! Each sample takes its conditioning data from an independent parent
//! realization under `C₀`. All requested modes reuse the parent, the sample
//! and the unconditional noise of every realization, so differences between
//! modes come from the covariances alone.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{ConditionalRealization, ConditioningMode, GridSimulator, PostConditioner};
use crate::covmodel::{CovarianceSpec, Taper, TaperedCovariance};
use crate::error::{Error, Result};
use crate::field::{draw_sample, BoxDomain, GridSpec, SamplingDesign};
use crate::rng::{derive_seed, rng_from_seed, stream};

/// Layout of an ensemble run.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub cov0: CovarianceSpec,
    pub taper: Taper,
    pub grid: GridSpec,
    pub design: SamplingDesign,
    /// Conditioning sites per sample, mandatory nodes included.
    pub n_data: usize,
    pub n_samples: usize,
    pub realizations_per_sample: usize,
    /// Grid nodes always present in the sample.
    pub mandatory_nodes: Vec<usize>,
}

impl EnsembleSpec {
    /// One new parent and sample per realization. The grid corners (the
    /// end points in 1D) are mandatory.
    pub fn independent(cov0: CovarianceSpec, taper: Taper, grid: GridSpec, n_data: usize, n_real: usize) -> Self {
        Self::per_sample(cov0, taper, grid, n_data, n_real, 1)
    }

    /// `n_samples` samples with `realizations_per_sample` realizations each.
    pub fn per_sample(
        cov0: CovarianceSpec,
        taper: Taper,
        grid: GridSpec,
        n_data: usize,
        n_samples: usize,
        realizations_per_sample: usize,
    ) -> Self {
        let mandatory_nodes = grid.corner_indices();
        Self {
            cov0,
            taper,
            grid,
            design: SamplingDesign::PurelyRandom,
            n_data,
            n_samples,
            realizations_per_sample,
            mandatory_nodes,
        }
    }

    pub fn total_realizations(&self) -> usize {
        self.n_samples * self.realizations_per_sample
    }

    pub fn tapered(&self) -> TaperedCovariance {
        TaperedCovariance::new(self.cov0, self.taper)
    }
}

/// Grid nodes for one conditioning sample: the mandatory nodes plus
/// `n_data − mandatory` nodes nearest to a draw from `design` over the grid
/// extent. Collisions are replaced by uniformly chosen free nodes.
pub fn select_sites(
    grid: &GridSpec,
    design: &SamplingDesign,
    n_data: usize,
    mandatory: &[usize],
    seed: u64,
) -> Result<Vec<usize>> {
    let mut chosen: BTreeSet<usize> = mandatory.iter().copied().collect();
    if chosen.iter().any(|&k| k >= grid.len()) {
        return Err(Error::invalid("mandatory node outside the grid"));
    }
    if n_data < chosen.len() || n_data > grid.len() {
        return Err(Error::invalid(format!(
            "cannot place {n_data} sites on {} nodes with {} mandatory",
            grid.len(),
            chosen.len()
        )));
    }
    let extra = n_data - chosen.len();
    if extra == 0 {
        return Ok(chosen.into_iter().collect());
    }
    let extent: Vec<f64> = grid
        .counts
        .iter()
        .zip(&grid.spacing)
        .map(|(&c, &h)| ((c - 1) as f64 * h).max(h))
        .collect();
    let domain = BoxDomain::new(extent)?;
    let pts = draw_sample(design, extra, &domain, seed)?;
    let mut rng = rng_from_seed(derive_seed(seed, &[stream::JITTER]));
    for p in pts.iter() {
        let x: Vec<f64> = p.iter().zip(&grid.origin).map(|(a, o)| a + o).collect();
        let mut k = grid.nearest_node(&x);
        while chosen.contains(&k) {
            k = rng.gen_range(0..grid.len());
        }
        chosen.insert(k);
    }
    Ok(chosen.into_iter().collect())
}

/// Everything known about one conditional realization when it is handed
/// to the caller.
pub struct RealizationContext<'a> {
    pub mode: ConditioningMode,
    pub sample_id: u64,
    pub realization_id: u64,
    /// Seed of the unconditional draw.
    pub seed: u64,
    pub grid: &'a GridSpec,
    /// Conditioning nodes.
    pub sites: &'a [usize],
    /// Parent field the data were taken from.
    pub parent: &'a [f64],
    pub data: &'a [f64],
    pub values: &'a [f64],
}

/// Runs all `modes` on shared randomness and maps every conditional
/// realization through `f`. Output is per mode, ordered by
/// (sample, realization) regardless of scheduling.
pub fn run_modes<T, F>(spec: &EnsembleSpec, modes: &[ConditioningMode], seed: u64, f: F) -> Result<Vec<Vec<T>>>
where
    T: Send,
    F: Fn(&RealizationContext) -> T + Sync,
{
    run_modes_with(spec, modes, seed, None, f)
}

/// Conditioning sites of sample `s`, as used by [`run_modes`].
pub fn sample_sites(spec: &EnsembleSpec, seed: u64, s: u64) -> Result<Vec<usize>> {
    select_sites(
        &spec.grid,
        &spec.design,
        spec.n_data,
        &spec.mandatory_nodes,
        derive_seed(seed, &[stream::SAMPLE, s]),
    )
}

/// [`run_modes`] with an optional prebuilt simulator for `spec.cov0` on
/// `spec.grid`, so sweeps over the taper range can share it.
pub fn run_modes_with<T, F>(
    spec: &EnsembleSpec,
    modes: &[ConditioningMode],
    seed: u64,
    sim0: Option<Arc<GridSimulator>>,
    f: F,
) -> Result<Vec<Vec<T>>>
where
    T: Send,
    F: Fn(&RealizationContext) -> T + Sync,
{
    if modes.is_empty() || spec.total_realizations() == 0 {
        return Ok((0..modes.len()).map(|_| Vec::new()).collect());
    }
    let grid = &spec.grid;
    let c1 = spec.tapered();
    let need_c0 = modes.iter().any(|m| *m != ConditioningMode::T);
    let need_c1 = modes.contains(&ConditioningMode::T);
    let sim0 = match sim0 {
        Some(sim) if sim.grid() == grid => sim,
        Some(_) => return Err(Error::invalid("shared simulator was built for another grid")),
        None => Arc::new(GridSimulator::new(&spec.cov0, grid)?),
    };
    let sim1 = if need_c1 { Some(GridSimulator::new(&c1, grid)?) } else { None };
    let nodes = grid.to_points();

    let per_sample: Vec<Result<Vec<Vec<T>>>> = (0..spec.n_samples as u64)
        .into_par_iter()
        .map(|s| -> Result<Vec<Vec<T>>> {
            let sites = sample_sites(spec, seed, s)?;
            let site_points = nodes.subset(&sites)?;
            let parent = sim0.draw(derive_seed(seed, &[stream::PARENT, s]));
            let data: Vec<f64> = sites.iter().map(|&k| parent[k]).collect();
            let pc_full = if modes.contains(&ConditioningMode::F) {
                Some(PostConditioner::new(spec.cov0, &site_points, grid)?)
            } else {
                None
            };
            let pc_taper = if modes.iter().any(|m| *m != ConditioningMode::F) {
                Some(PostConditioner::new(c1, &site_points, grid)?)
            } else {
                None
            };
            let mut out: Vec<Vec<T>> = modes.iter().map(|_| Vec::with_capacity(spec.realizations_per_sample)).collect();
            for r in 0..spec.realizations_per_sample as u64 {
                let useed = derive_seed(seed, &[stream::UNCOND, s, r]);
                let z0 = if need_c0 { Some(sim0.draw(useed)) } else { None };
                let z1 = sim1.as_ref().map(|sim| sim.draw(useed));
                for (mi, mode) in modes.iter().enumerate() {
                    let (z, pc) = match mode {
                        ConditioningMode::F => (z0.as_ref(), pc_full.as_ref()),
                        ConditioningMode::T => (z1.as_ref(), pc_taper.as_ref()),
                        ConditioningMode::HT => (z0.as_ref(), pc_taper.as_ref()),
                    };
                    let (z, pc) = (z.expect("field drawn"), pc.expect("conditioner built"));
                    let zs: Vec<f64> = sites.iter().map(|&k| z[k]).collect();
                    let values = pc.condition_values(&data, &zs, z)?;
                    out[mi].push(f(&RealizationContext {
                        mode: *mode,
                        sample_id: s,
                        realization_id: r,
                        seed: useed,
                        grid,
                        sites: &sites,
                        parent: &parent,
                        data: &data,
                        values: &values,
                    }));
                }
            }
            Ok(out)
        })
        .collect();

    let mut merged: Vec<Vec<T>> = modes.iter().map(|_| Vec::with_capacity(spec.total_realizations())).collect();
    for sample in per_sample {
        for (acc, part) in merged.iter_mut().zip(sample?) {
            acc.extend(part);
        }
    }
    Ok(merged)
}

/// Conditional realizations of one mode.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub mode: ConditioningMode,
    pub grid: GridSpec,
    pub realizations: Vec<ConditionalRealization>,
    pub config_digest: String,
}

#[derive(Serialize)]
struct RawHeader<'a> {
    format: &'static str,
    layout: &'static str,
    n_realizations: usize,
    n_nodes: usize,
    counts: &'a [usize],
    spacing: &'a [f64],
    origin: &'a [f64],
    mode: &'static str,
    config_digest: &'a str,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.realizations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.realizations.is_empty()
    }

    /// CSV rows `realization,grid_index,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        if !self.config_digest.is_empty() {
            writeln!(w, "# config_digest={} mode={}", self.config_digest, self.mode)?;
        }
        writeln!(w, "realization,grid_index,value")?;
        for (k, r) in self.realizations.iter().enumerate() {
            for (g, v) in r.grid_values.iter().enumerate() {
                writeln!(w, "{k},{g},{v}")?;
            }
        }
        Ok(())
    }

    /// Writes `<stem>.bin` (little-endian f64, one realization after the
    /// other, grid row-major) and `<stem>.json` describing it.
    pub fn write_raw(&self, stem: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(self.len() * self.grid.len() * 8);
        for r in &self.realizations {
            for v in &r.grid_values {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        std::fs::write(stem.with_extension("bin"), bytes)?;
        let header = RawHeader {
            format: "f64le",
            layout: "realization-major, grid row-major (last axis fastest)",
            n_realizations: self.len(),
            n_nodes: self.grid.len(),
            counts: &self.grid.counts,
            spacing: &self.grid.spacing,
            origin: &self.grid.origin,
            mode: self.mode.name(),
            config_digest: &self.config_digest,
        };
        std::fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&header)?)?;
        Ok(())
    }
}

/// Conditional realizations of a single mode.
pub fn run_ensemble(spec: &EnsembleSpec, mode: ConditioningMode, seed: u64, config_digest: &str) -> Result<Ensemble> {
    let mut out = run_modes(spec, &[mode], seed, |ctx| ConditionalRealization {
        grid_values: ctx.values.to_vec(),
        mode: ctx.mode,
        seed: ctx.seed,
        sample_id: ctx.sample_id,
        realization_id: ctx.realization_id,
    })?;
    Ok(Ensemble {
        mode,
        grid: spec.grid.clone(),
        realizations: out.pop().unwrap_or_default(),
        config_digest: config_digest.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covmodel::TaperFamily;

    fn spec_1d(n_real: usize, theta: f64) -> EnsembleSpec {
        let grid = GridSpec::regular(vec![100], 1.0).unwrap();
        let c0 = CovarianceSpec::exponential(1.0, 1.0).unwrap().with_effective_range(100.0 / 3.0).unwrap();
        EnsembleSpec::independent(c0, Taper::new(TaperFamily::Spherical, theta).unwrap(), grid, 10, n_real)
    }

    #[test]
    fn empty_ensemble() {
        let e = run_ensemble(&spec_1d(0, 10.0), ConditioningMode::F, 1, "").unwrap();
        assert!(e.is_empty());
    }

    #[test]
    fn sites_include_mandatory_nodes() {
        let grid = GridSpec::regular(vec![50, 50], 1.0).unwrap();
        for design in [SamplingDesign::PurelyRandom, SamplingDesign::RandomStratified, SamplingDesign::RegularGrid] {
            let s = select_sites(&grid, &design, 100, &grid.corner_indices(), 4).unwrap();
            assert_eq!(s.len(), 100);
            for c in grid.corner_indices() {
                assert!(s.contains(&c));
            }
        }
        let g1 = GridSpec::regular(vec![100], 1.0).unwrap();
        let s = select_sites(&g1, &SamplingDesign::PurelyRandom, 10, &g1.corner_indices(), 9).unwrap();
        assert_eq!((s[0], s[9], s.len()), (0, 99, 10));
        assert!(select_sites(&g1, &SamplingDesign::PurelyRandom, 1, &[0, 99], 9).is_err());
    }

    #[test]
    fn huge_taper_makes_ht_equal_f() {
        let spec = spec_1d(20, 1e9);
        let out = run_modes(&spec, &[ConditioningMode::F, ConditioningMode::HT], 5, |c| c.values.to_vec()).unwrap();
        for (a, b) in out[0].iter().zip(&out[1]) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn deterministic_and_exact() {
        let spec = spec_1d(6, 10.0);
        let a = run_modes(&spec, &ConditioningMode::ALL, 11, |c| {
            for (k, &node) in c.sites.iter().enumerate() {
                assert!((c.values[node] - c.data[k]).abs() < 1e-8);
            }
            c.values.to_vec()
        })
        .unwrap();
        let b = run_modes(&spec, &ConditioningMode::ALL, 11, |c| c.values.to_vec()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].len(), 6);
    }

    #[test]
    fn exports() {
        let spec = spec_1d(2, 10.0);
        let e = run_ensemble(&spec, ConditioningMode::HT, 3, "abc").unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2 + 200);
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("ens");
        e.write_raw(&stem).unwrap();
        let bytes = std::fs::read(stem.with_extension("bin")).unwrap();
        assert_eq!(bytes.len(), 200 * 8);
        let first = f64::from_le_bytes(bytes[..8].try_into().unwrap());
        assert_eq!(first, e.realizations[0].grid_values[0]);
        let json: serde_json::Value = serde_json::from_slice(&std::fs::read(stem.with_extension("json")).unwrap()).unwrap();
        assert_eq!(json["n_realizations"], 2);
    }
}
