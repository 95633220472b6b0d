//! Domains, grids, point sets, sampling designs and radius neighbor search.

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::covmodel::CovarianceSpec;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, stream, SimRng};
use crate::simulate::GridSimulator;

/// Relative minimum separation between sampled points (times the domain diameter).
pub const DEFAULT_MIN_SEPARATION: f64 = 1e-9;

fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::invalid(format!("dimension must be 1, 2 or 3 (got {dim})")))
    }
}

/// Axis-aligned box `[0, L₁] × … × [0, L_d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lengths: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lengths: Vec<f64>) -> Result<Self> {
        check_dim(lengths.len())?;
        if lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::invalid(format!("box extents must be positive: {lengths:?}")));
        }
        Ok(Self { lengths })
    }

    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn diameter(&self) -> f64 {
        self.lengths.iter().map(|l| l * l).sum::<f64>().sqrt()
    }

    pub fn measure(&self) -> f64 {
        self.lengths.iter().product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(&self.lengths).all(|(x, l)| *x >= 0.0 && *x <= *l)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lengths.iter().map(|l| 0.5 * l).collect()
    }
}

/// `n` points in ℝ^dim, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "coordinate buffer of length {} does not hold a whole number of {dim}-d points",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("point coordinates must be finite"));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("points of mixed dimension"));
        }
        Self::new(dim, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        dist(self.point(i), self.point(j))
    }

    pub fn distance_to(&self, i: usize, x: &[f64]) -> f64 {
        dist(self.point(i), x)
    }

    /// Points selected by index, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.len() {
                return Err(Error::invalid(format!("point index {i} out of range")));
            }
            coords.extend_from_slice(self.point(i));
        }
        Self::new(self.dim, coords)
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &PointSet) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        Self::new(self.dim, coords)
    }

    /// Smallest pairwise distance (infinite for a single point). O(n²).
    pub fn min_separation(&self) -> f64 {
        let n = self.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.min(self.distance(i, j));
            }
        }
        best
    }

    /// Axis-aligned bounding box as (min, max) per axis.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.iter() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }
}

#[inline]
pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Regular grid with nodes `origin + i ⊙ spacing`, enumerated row-major
/// (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub counts: Vec<usize>,
}

impl GridSpec {
    pub fn new(origin: Vec<f64>, spacing: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        check_dim(counts.len())?;
        if origin.len() != counts.len() || spacing.len() != counts.len() {
            return Err(Error::invalid("grid origin, spacing and counts differ in length"));
        }
        if spacing.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Error::invalid(format!("grid spacing must be positive: {spacing:?}")));
        }
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::invalid(format!("grid counts must be >= 1: {counts:?}")));
        }
        Ok(Self {
            origin,
            spacing,
            counts,
        })
    }

    /// Grid with unit spacing... or any spacing, anchored at the origin.
    pub fn regular(counts: Vec<usize>, spacing: f64) -> Result<Self> {
        let d = counts.len();
        Self::new(vec![0.0; d], vec![spacing; d], counts)
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            out[k] = idx % self.counts[k];
            idx /= self.counts[k];
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.counts)
            .fold(0, |acc, (&i, &c)| acc * c + i)
    }

    pub fn node(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.origin[k] + i as f64 * self.spacing[k])
            .collect()
    }

    pub fn to_points(&self) -> PointSet {
        let coords: Vec<f64> = (0..self.len()).flat_map(|i| self.node(i)).collect();
        PointSet::new(self.dim(), coords).expect("grid nodes form a valid point set")
    }

    /// Nearest node to `p` (clamped to the grid).
    pub fn nearest_node(&self, p: &[f64]) -> usize {
        let multi: Vec<usize> = (0..self.dim())
            .map(|k| {
                let t = ((p[k] - self.origin[k]) / self.spacing[k]).round();
                t.clamp(0.0, (self.counts[k] - 1) as f64) as usize
            })
            .collect();
        self.flat_index(&multi)
    }

    /// Flat indices of the 2^d corner nodes (deduplicated for degenerate axes).
    pub fn corner_indices(&self) -> Vec<usize> {
        let d = self.dim();
        let mut out = Vec::new();
        for mask in 0..(1usize << d) {
            let multi: Vec<usize> = (0..d)
                .map(|k| if mask >> k & 1 == 1 { self.counts[k] - 1 } else { 0 })
                .collect();
            let idx = self.flat_index(&multi);
            if !out.contains(&idx) {
                out.push(idx);
            }
        }
        out.sort_unstable();
        out
    }

    /// Physical length per axis counted as `count × spacing`.
    pub fn side_lengths(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(&self.spacing)
            .map(|(&c, &h)| c as f64 * h)
            .collect()
    }

    /// Center of the node bounding box.
    pub fn center(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|k| self.origin[k] + 0.5 * (self.counts[k] - 1) as f64 * self.spacing[k])
            .collect()
    }
}

/// Spatial sampling design for conditioning data.
#[derive(Debug, Clone, PartialEq)]
pub enum SamplingDesign {
    RegularGrid,
    /// One uniform point per cell of a regular partition.
    RandomStratified,
    PurelyRandom,
    /// Locations from a Poisson process with intensity `exp(Z)`, `Z` a
    /// zero-mean unit-variance Gaussian field with covariance `cov`.
    CoxProcess { cov: CovarianceSpec },
}

impl SamplingDesign {
    /// Cox design with exponential covariance, practical range 0.3 × the
    /// shortest side of `domain`.
    pub fn default_cox(domain: &BoxDomain) -> Result<Self> {
        let side = domain.lengths().iter().cloned().fold(f64::INFINITY, f64::min);
        let cov = CovarianceSpec::exponential(1.0, 1.0)?.with_effective_range(0.3 * side)?;
        Ok(SamplingDesign::CoxProcess { cov })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SamplingDesign::RegularGrid => "regular",
            SamplingDesign::RandomStratified => "stratified",
            SamplingDesign::PurelyRandom => "random",
            SamplingDesign::CoxProcess { .. } => "cox",
        }
    }
}

fn cells_per_axis(n: usize, dim: usize) -> usize {
    let mut k = (n as f64).powf(1.0 / dim as f64).round().max(1.0) as usize;
    while k.pow(dim as u32) < n {
        k += 1;
    }
    k
}

/// Draws `n` sampling locations in `domain`.
///
/// Regular and stratified designs partition each axis into
/// `k = ⌈n^{1/d}⌉` cells. When `n` is not a perfect d-th power, `n` of the
/// `k^d` cells are chosen at random. The Cox design simulates the log
/// intensity on a fine grid (1024, 128² or 48³ cells), picks cells with
/// probability proportional to the intensity and jitters uniformly inside
/// the chosen cell, so exactly `n` points are returned.
pub fn draw_sample(
    design: &SamplingDesign,
    n: usize,
    domain: &BoxDomain,
    seed: u64,
) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    let dim = domain.dim();
    let lengths = domain.lengths();
    let mut rng = rng_from_seed(seed);
    let eps = DEFAULT_MIN_SEPARATION * domain.diameter();

    // Each point is generated by a closure so that it can be redrawn when it
    // violates the minimum separation.
    let mut coords: Vec<f64> = Vec::with_capacity(n * dim);
    match design {
        SamplingDesign::RegularGrid | SamplingDesign::RandomStratified => {
            let k = cells_per_axis(n, dim);
            let total = k.pow(dim as u32);
            let mut cells: Vec<usize> = (0..total).collect();
            if total > n {
                cells.shuffle(&mut rng);
                cells.truncate(n);
                cells.sort_unstable();
            }
            let stratified = matches!(design, SamplingDesign::RandomStratified);
            for &cell in &cells {
                let mut rem = cell;
                let mut multi = vec![0usize; dim];
                for a in (0..dim).rev() {
                    multi[a] = rem % k;
                    rem /= k;
                }
                for a in 0..dim {
                    let h = lengths[a] / k as f64;
                    let u: f64 = if stratified { rng.gen() } else { 0.5 };
                    coords.push((multi[a] as f64 + u) * h);
                }
            }
        }
        SamplingDesign::PurelyRandom => {
            for _ in 0..n {
                loop {
                    let p: Vec<f64> = lengths.iter().map(|l| rng.gen::<f64>() * l).collect();
                    if separated(&coords, dim, &p, eps) {
                        coords.extend(p);
                        break;
                    }
                }
            }
        }
        SamplingDesign::CoxProcess { cov } => {
            let m = match dim {
                1 => 1024,
                2 => 128,
                _ => 48,
            };
            let spacing: Vec<f64> = lengths.iter().map(|l| l / m as f64).collect();
            let origin: Vec<f64> = spacing.iter().map(|h| 0.5 * h).collect();
            let grid = GridSpec::new(origin, spacing.clone(), vec![m; dim])?;
            let unit = CovarianceSpec::new(cov.family(), 1.0, cov.range())?;
            let sim = GridSimulator::new(&unit, &grid)?;
            let z = sim.draw(derive_seed(seed, &[stream::COX]));
            let weights: Vec<f64> = z.iter().map(|v| v.exp()).collect();
            let pick = WeightedIndex::new(&weights)
                .map_err(|e| Error::Numerical(format!("Cox intensity: {e}")))?;
            let mut jitter = rng_from_seed(derive_seed(seed, &[stream::JITTER]));
            for _ in 0..n {
                loop {
                    let cell = pick.sample(&mut rng);
                    let multi = grid.multi_index(cell);
                    let p: Vec<f64> = (0..dim)
                        .map(|a| (multi[a] as f64 + jitter.gen::<f64>()) * spacing[a])
                        .collect();
                    if separated(&coords, dim, &p, eps) {
                        coords.extend(p);
                        break;
                    }
                }
            }
        }
    }
    PointSet::new(dim, coords)
}

fn separated(coords: &[f64], dim: usize, p: &[f64], eps: f64) -> bool {
    coords.chunks_exact(dim).all(|q| dist(q, p) >= eps)
}

/// Uniform points in the centered ball of radius `radius`, by rejection from
/// the bounding cube.
pub fn uniform_in_ball(n: usize, dim: usize, radius: f64, rng: &mut SimRng) -> Result<PointSet> {
    check_dim(dim)?;
    let mut coords = Vec::with_capacity(n * dim);
    let mut p = vec![0.0; dim];
    while coords.len() < n * dim {
        for x in p.iter_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
        if p.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            coords.extend(p.iter().map(|x| x * radius));
        }
    }
    PointSet::new(dim, coords)
}

/// Distances between `n_pairs` independent pairs of uniform points in the
/// unit ball of ℝ^dim.
pub fn random_disk_pairs(n_pairs: usize, dim: usize, seed: u64) -> Result<Vec<f64>> {
    if n_pairs == 0 {
        return Err(Error::invalid("n_pairs must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let pts = uniform_in_ball(2 * n_pairs, dim, 1.0, &mut rng)?;
    Ok((0..n_pairs).map(|k| pts.distance(2 * k, 2 * k + 1)).collect())
}

/// All pairs `(i, j, distance)` with `i < j` and `distance < radius`,
/// sorted by `(i, j)`. Uses uniform cell binning with cell size `radius`.
pub fn neighbors_within(points: &PointSet, radius: f64) -> Result<Vec<(usize, usize, f64)>> {
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("radius must be positive (got {radius})")));
    }
    let dim = points.dim();
    let n = points.len();
    let (lo, hi) = points.bounds();
    // A radius spanning the whole cloud degenerates to one cell.
    let extent = (0..dim).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
    let cell = if radius.is_finite() { radius.max(extent * 1e-9).max(f64::MIN_POSITIVE) } else { f64::INFINITY };
    let key = |p: &[f64]| -> [i64; 3] {
        let mut k = [0i64; 3];
        if cell.is_finite() {
            for a in 0..dim {
                k[a] = ((p[a] - lo[a]) / cell).floor() as i64;
            }
        }
        k
    };
    let mut bins: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        bins.entry(key(p)).or_default().push(i);
    }
    let offsets: Vec<[i64; 3]> = {
        let r: Vec<i64> = vec![-1, 0, 1];
        let z = [0i64];
        let ax = |a: usize| if a < dim { &r[..] } else { &z[..] };
        let mut v = Vec::new();
        for &a in ax(0) {
            for &b in ax(1) {
                for &c in ax(2) {
                    v.push([a, b, c]);
                }
            }
        }
        v
    };
    let mut out = Vec::new();
    for i in 0..n {
        let pi = points.point(i);
        let k = key(pi);
        for off in &offsets {
            let nk = [k[0] + off[0], k[1] + off[1], k[2] + off[2]];
            if let Some(members) = bins.get(&nk) {
                for &j in members {
                    if j > i {
                        let d = dist(pi, points.point(j));
                        if d < radius {
                            out.push((i, j, d));
                        }
                    }
                }
            }
        }
    }
    out.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    Ok(out)
}

const AXES: [&str; 3] = ["x", "y", "z"];

/// Writes points (and optional values) as CSV with header `x[,y[,z]][,value]`.
pub fn write_points_csv<W: Write>(w: W, points: &PointSet, values: Option<&[f64]>) -> Result<()> {
    if let Some(v) = values {
        if v.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: v.len(),
            });
        }
    }
    let mut wtr = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = AXES[..points.dim()].to_vec();
    if values.is_some() {
        header.push("value");
    }
    wtr.write_record(&header)?;
    for (i, p) in points.iter().enumerate() {
        let mut rec: Vec<String> = p.iter().map(|x| format!("{x}")).collect();
        if let Some(v) = values {
            rec.push(format!("{}", v[i]));
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads the format written by [`write_points_csv`]. Lines starting with `#`
/// are ignored.
pub fn read_points_csv<R: Read>(r: R) -> Result<(PointSet, Option<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r);
    let header = rdr.headers()?.clone();
    let names: Vec<String> = header.iter().map(|h| h.to_ascii_lowercase()).collect();
    let has_value = names.last().map(|h| h == "value").unwrap_or(false);
    let dim = names.len() - usize::from(has_value);
    check_dim(dim)?;
    if names[..dim].iter().zip(AXES).any(|(h, a)| h != a) {
        return Err(Error::Parse(format!("unexpected point CSV header: {names:?}")));
    }
    let mut coords = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != names.len() {
            return Err(Error::Parse(format!("row has {} fields, expected {}", rec.len(), names.len())));
        }
        for (k, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse(format!("bad number `{field}`")))?;
            if k < dim {
                coords.push(v);
            } else {
                values.push(v);
            }
        }
    }
    let pts = PointSet::new(dim, coords)?;
    Ok((pts, has_value.then_some(values)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(points: &PointSet, radius: f64) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points.distance(i, j) < radius {
                    v.push((i, j));
                }
            }
        }
        v
    }

    #[test]
    fn regular_grid_two_by_two() {
        let d = BoxDomain::unit(2).unwrap();
        let p = draw_sample(&SamplingDesign::RegularGrid, 4, &d, 1).unwrap();
        let want = [[0.25, 0.25], [0.25, 0.75], [0.75, 0.25], [0.75, 0.75]];
        assert_eq!(p.len(), 4);
        for (got, w) in p.iter().zip(want) {
            assert_eq!(got, &w[..]);
        }
    }

    #[test]
    fn random_is_deterministic_per_seed() {
        let d = BoxDomain::unit(3).unwrap();
        let a = draw_sample(&SamplingDesign::PurelyRandom, 50, &d, 9).unwrap();
        let b = draw_sample(&SamplingDesign::PurelyRandom, 50, &d, 9).unwrap();
        let c = draw_sample(&SamplingDesign::PurelyRandom, 50, &d, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|p| d.contains(p)));
    }

    #[test]
    fn stratified_one_point_per_cell() {
        let d = BoxDomain::unit(2).unwrap();
        let p = draw_sample(&SamplingDesign::RandomStratified, 400, &d, 3).unwrap();
        let mut counts = vec![0; 400];
        for q in p.iter() {
            let i = (q[0] * 20.0).floor() as usize;
            let j = (q[1] * 20.0).floor() as usize;
            counts[i * 20 + j] += 1;
        }
        assert!(counts.iter().all(|&c| c == 1));
    }

    #[test]
    fn non_power_sizes_are_exact() {
        let d = BoxDomain::new(vec![2.0, 1.0]).unwrap();
        for design in [SamplingDesign::RegularGrid, SamplingDesign::RandomStratified] {
            let p = draw_sample(&design, 10, &d, 5).unwrap();
            assert_eq!(p.len(), 10);
            assert!(p.iter().all(|q| d.contains(q)));
        }
        assert!(draw_sample(&SamplingDesign::PurelyRandom, 0, &d, 5).is_err());
    }

    #[test]
    fn cox_sample_is_exact_size_and_inside() {
        let d = BoxDomain::unit(2).unwrap();
        let design = SamplingDesign::default_cox(&d).unwrap();
        let p = draw_sample(&design, 300, &d, 17).unwrap();
        assert_eq!(p.len(), 300);
        assert!(p.iter().all(|q| d.contains(q)));
        assert!(p.min_separation() > 0.0);
    }

    fn mean_nn_distance(p: &PointSet) -> f64 {
        let n = p.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| p.distance(i, j))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn cox_sampling_is_clustered() {
        // Across 50 seeds the Cox mean nearest-neighbor distance sits below
        // the Poisson expectation 0.5/sqrt(n) (edge effects push the random
        // design above it).
        let d = BoxDomain::unit(2).unwrap();
        let design = SamplingDesign::default_cox(&d).unwrap();
        let n = 200;
        let mut below = 0;
        let mut cox_mean = 0.0;
        let mut rand_mean = 0.0;
        for seed in 0..50 {
            let c = mean_nn_distance(&draw_sample(&design, n, &d, seed).unwrap());
            let r = mean_nn_distance(&draw_sample(&SamplingDesign::PurelyRandom, n, &d, seed).unwrap());
            cox_mean += c / 50.0;
            rand_mean += r / 50.0;
            if c < 0.5 / (n as f64).sqrt() {
                below += 1;
            }
        }
        // one-sided sign test: P(X >= 40 | p = 1/2, n = 50) < 1e-5
        assert!(below >= 40, "only {below}/50 Cox samples clustered");
        assert!(cox_mean < rand_mean);
    }

    #[test]
    fn disk_pairs() {
        let d = random_disk_pairs(10_000, 2, 1).unwrap();
        assert!(d.iter().all(|&x| (0.0..=2.0).contains(&x)));
        assert_eq!(d, random_disk_pairs(10_000, 2, 1).unwrap());
        // 1-D closed form F(r) = r - r²/4
        let d1 = random_disk_pairs(1_000_000, 1, 2).unwrap();
        for r in [0.25, 0.5, 1.0, 1.5] {
            let emp = d1.iter().filter(|&&x| x <= r).count() as f64 / d1.len() as f64;
            assert!((emp - (r - r * r / 4.0)).abs() < 0.01);
        }
    }

    #[test]
    fn neighbor_search_matches_brute_force() {
        let mut rng = rng_from_seed(4);
        for trial in 0..50 {
            let dim = 1 + trial % 3;
            let n = rng.gen_range(2..200);
            let coords: Vec<f64> = (0..n * dim).map(|_| rng.gen::<f64>()).collect();
            let p = PointSet::new(dim, coords).unwrap();
            let radius = rng.gen_range(0.01..0.6);
            let got: Vec<(usize, usize)> = neighbors_within(&p, radius)
                .unwrap()
                .into_iter()
                .map(|(i, j, _)| (i, j))
                .collect();
            assert_eq!(got, brute_force(&p, radius), "trial {trial}");
        }
    }

    #[test]
    fn neighbor_search_extremes() {
        let mut rng = rng_from_seed(8);
        let p = uniform_in_ball(200, 2, 1.0, &mut rng).unwrap();
        let all = neighbors_within(&p, 10.0).unwrap();
        assert_eq!(all.len(), 200 * 199 / 2);
        let none = neighbors_within(&p, 0.5 * p.min_separation()).unwrap();
        assert!(none.is_empty());
        let r = neighbors_within(&p, 0.3).unwrap();
        let want = brute_force(&p, 0.3);
        assert_eq!(r.len(), want.len());
        assert!(neighbors_within(&p, 0.0).is_err());
    }

    #[test]
    fn grid_indexing() {
        let g = GridSpec::regular(vec![3, 4, 5], 0.5).unwrap();
        assert_eq!(g.len(), 60);
        for i in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(i)), i);
            assert_eq!(g.nearest_node(&g.node(i)), i);
        }
        assert_eq!(g.node(1), vec![0.0, 0.0, 0.5]);
        assert_eq!(g.corner_indices().len(), 8);
        assert_eq!(GridSpec::regular(vec![10], 1.0).unwrap().corner_indices(), vec![0, 9]);
    }

    #[test]
    fn csv_round_trip() {
        let p = PointSet::new(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let mut buf = Vec::new();
        write_points_csv(&mut buf, &p, Some(&[1.5, -2.0])).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("x,y,value\n"));
        let (q, v) = read_points_csv(&buf[..]).unwrap();
        assert_eq!(p, q);
        assert_eq!(v.unwrap(), vec![1.5, -2.0]);
        let (q, v) = read_points_csv("# comment\nx\n0.5\n1.5\n".as_bytes()).unwrap();
        assert_eq!(q.len(), 2);
        assert!(v.is_none());
        assert!(read_points_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
