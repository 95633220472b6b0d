//! Nonlinear responses evaluated on simulated fields.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::GridSpec;
use crate::simulate::ConditioningMode;
use crate::specfun::std_normal_quantile;

/// Largest absolute jump between consecutive profile values.
pub fn max_consec_diff(profile: &[f64]) -> Result<f64> {
    if profile.len() < 2 {
        return Err(Error::invalid("profile needs at least two points"));
    }
    Ok(profile.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max))
}

/// Arc length of the polyline through `(i·dx, z_i)`.
pub fn profile_length(profile: &[f64], dx: f64) -> Result<f64> {
    if profile.len() < 2 {
        return Err(Error::invalid("profile needs at least two points"));
    }
    if !(dx > 0.0) || !dx.is_finite() {
        return Err(Error::invalid(format!("spacing must be positive (got {dx})")));
    }
    Ok(profile.windows(2).map(|w| (w[1] - w[0]).hypot(dx)).sum())
}

/// Neighbourhood used to join permeable cells into clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adjacency {
    /// Cells sharing a face (4 in 2D, 6 in 3D).
    #[default]
    Face,
    /// Cells sharing a face, edge or corner (8 in 2D, 26 in 3D).
    Full,
}

impl FromStr for Adjacency {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "face" => Ok(Adjacency::Face),
            "full" => Ok(Adjacency::Full),
            _ => Err(Error::invalid(format!("unknown adjacency '{s}' (face|full)"))),
        }
    }
}

// Offsets of the forward half of the neighbourhood, so each edge is visited once.
fn forward_offsets(dim: usize, adjacency: Adjacency) -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    let r = |k: usize| if k < dim { -1i64..=1 } else { 0..=0 };
    for a in r(0) {
        for b in r(1) {
            for c in r(2) {
                let o = [a, b, c];
                let nz = o.iter().filter(|&&v| v != 0).count();
                if nz == 0 || (adjacency == Adjacency::Face && nz > 1) {
                    continue;
                }
                // lexicographically positive
                if o.iter().find(|&&v| v != 0).copied().unwrap_or(0) > 0 {
                    out.push(o);
                }
            }
        }
    }
    out
}

fn neighbor(grid: &GridSpec, mi: &[usize], off: &[i64; 3]) -> Option<usize> {
    let mut idx = 0usize;
    for (k, &m) in mi.iter().enumerate() {
        let v = m as i64 + off[k];
        if v < 0 || v >= grid.counts[k] as i64 {
            return None;
        }
        idx = idx * grid.counts[k] + v as usize;
    }
    Some(idx)
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Connectivity {
    /// `g = Σ n_i² / n_p²`, or 0 when no cell is permeable.
    pub value: f64,
    pub n_permeable: usize,
    /// Cluster sizes, largest first.
    pub cluster_sizes: Vec<usize>,
    pub empty: bool,
}

fn check_field(grid: &GridSpec, values: &[f64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("field contains non-finite values"));
    }
    Ok(())
}

/// Connectivity of the phase `{z <= threshold}`.
pub fn connectivity_at(
    grid: &GridSpec,
    values: &[f64],
    threshold: f64,
    adjacency: Adjacency,
) -> Result<Connectivity> {
    check_field(grid, values)?;
    let dim = grid.dim();
    let n = grid.len();
    let permeable: Vec<bool> = values.iter().map(|&z| z <= threshold).collect();
    let mut uf = UnionFind::new(n);
    let offs = forward_offsets(dim, adjacency);
    for i in 0..n {
        if !permeable[i] {
            continue;
        }
        let mi = grid.multi_index(i);
        for off in &offs {
            if let Some(j) = neighbor(grid, &mi, off) {
                if permeable[j] {
                    uf.union(i, j);
                }
            }
        }
    }
    let n_p = permeable.iter().filter(|&&b| b).count();
    let mut cluster_sizes: Vec<usize> = Vec::new();
    for i in 0..n {
        if permeable[i] && uf.find(i) == i {
            cluster_sizes.push(uf.size[i]);
        }
    }
    cluster_sizes.sort_unstable_by(|a, b| b.cmp(a));
    if n_p == 0 {
        log::warn!("connectivity: no permeable cell at threshold {threshold}");
        return Ok(Connectivity {
            value: 0.0,
            n_permeable: 0,
            cluster_sizes,
            empty: true,
        });
    }
    let sq: f64 = cluster_sizes.iter().map(|&s| (s * s) as f64).sum();
    Ok(Connectivity {
        value: sq / (n_p as f64 * n_p as f64),
        n_permeable: n_p,
        cluster_sizes,
        empty: false,
    })
}

/// Connectivity `g(p)` of the phase `{z <= Φ⁻¹(p)}` of a standard Gaussian
/// field on a 2D or 3D grid.
pub fn connectivity(grid: &GridSpec, values: &[f64], p: f64, adjacency: Adjacency) -> Result<Connectivity> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("proportion must lie in (0, 1) (got {p})")));
    }
    if !(2..=3).contains(&grid.dim()) {
        return Err(Error::invalid("connectivity needs a 2D or 3D grid"));
    }
    connectivity_at(grid, values, std_normal_quantile(p)?, adjacency)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// 8-neighbourhood graph of a 2D grid with slowness `exp(-z)` per cell.
struct TravelGraph<'a> {
    grid: &'a GridSpec,
    slowness: Vec<f64>,
    steps: Vec<([i64; 3], f64)>,
}

impl<'a> TravelGraph<'a> {
    fn new(grid: &'a GridSpec, values: &[f64]) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::invalid("transit time needs a 2D grid"));
        }
        check_field(grid, values)?;
        let (hx, hy) = (grid.spacing[0], grid.spacing[1]);
        let mut steps = Vec::with_capacity(8);
        for a in -1i64..=1 {
            for b in -1i64..=1 {
                if a != 0 || b != 0 {
                    let len = (a as f64 * hx).hypot(b as f64 * hy);
                    steps.push(([a, b, 0], len));
                }
            }
        }
        Ok(Self {
            grid,
            slowness: values.iter().map(|z| (-z).exp()).collect(),
            steps,
        })
    }

    fn edges(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let mi = self.grid.multi_index(i);
        self.steps.iter().filter_map(move |(off, len)| {
            neighbor(self.grid, &mi, off).map(|j| (j, len * 0.5 * (self.slowness[i] + self.slowness[j])))
        })
    }

    fn dijkstra(&self, source: usize, target: Option<usize>) -> (Vec<f64>, Vec<usize>) {
        let n = self.grid.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(HeapItem(0.0, source));
        while let Some(HeapItem(d, i)) = heap.pop() {
            if d > dist[i] {
                continue;
            }
            if Some(i) == target {
                break;
            }
            for (j, w) in self.edges(i) {
                let nd = d + w;
                if nd < dist[j] {
                    dist[j] = nd;
                    prev[j] = i;
                    heap.push(HeapItem(nd, j));
                }
            }
        }
        (dist, prev)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitPath {
    pub cost: f64,
    /// Cell indices from the first to the last grid cell.
    pub cells: Vec<usize>,
}

/// Fastest travel time from the first grid cell to the last one, with speed
/// `exp(z)`. Edge cost is the step length times the mean slowness of its two
/// cells.
pub fn transit_time(grid: &GridSpec, values: &[f64]) -> Result<TransitPath> {
    let g = TravelGraph::new(grid, values)?;
    let target = grid.len() - 1;
    let (dist, prev) = g.dijkstra(0, Some(target));
    let mut cells = vec![target];
    let mut c = target;
    while c != 0 {
        c = prev[c];
        cells.push(c);
    }
    cells.reverse();
    Ok(TransitPath {
        cost: dist[target],
        cells,
    })
}

/// Travel times from `source` to every cell.
pub fn travel_times(grid: &GridSpec, values: &[f64], source: usize) -> Result<Vec<f64>> {
    if source >= grid.len() {
        return Err(Error::invalid(format!("source cell {source} outside the grid")));
    }
    Ok(TravelGraph::new(grid, values)?.dijkstra(source, None).0)
}

/// A scalar response of one realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResponseKind {
    MaxConsecDiff,
    ProfileLength,
    Connectivity {
        p: f64,
        #[serde(default)]
        adjacency: Adjacency,
    },
    TransitTime,
}

impl ResponseKind {
    pub fn name(&self) -> &'static str {
        match self {
            ResponseKind::MaxConsecDiff => "max_consec_diff",
            ResponseKind::ProfileLength => "profile_length",
            ResponseKind::Connectivity { .. } => "connectivity",
            ResponseKind::TransitTime => "transit_time",
        }
    }

    pub fn evaluate(&self, grid: &GridSpec, values: &[f64]) -> Result<f64> {
        check_field(grid, values)?;
        match *self {
            ResponseKind::MaxConsecDiff | ResponseKind::ProfileLength if grid.dim() != 1 => {
                Err(Error::invalid(format!("{} needs a 1D grid", self.name())))
            }
            ResponseKind::MaxConsecDiff => max_consec_diff(values),
            ResponseKind::ProfileLength => profile_length(values, grid.spacing[0]),
            ResponseKind::Connectivity { p, adjacency } => Ok(connectivity(grid, values, p, adjacency)?.value),
            ResponseKind::TransitTime => Ok(transit_time(grid, values)?.cost),
        }
    }
}

impl fmt::Display for ResponseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResponseKind::Connectivity { p, .. } => write!(f, "connectivity(p={p})"),
            other => f.write_str(other.name()),
        }
    }
}

/// One response value per realization of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseSample {
    pub kind: ResponseKind,
    pub mode: ConditioningMode,
    pub values: Vec<f64>,
    pub digest: String,
}

impl ResponseSample {
    pub const CSV_HEADER: &'static str = "mode,realization,value";

    /// Rows `mode,realization,value` without a header.
    pub fn write_rows(&self, mut w: impl Write) -> Result<()> {
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{},{}", self.mode, i, v)?;
        }
        Ok(())
    }
}
