//! Circulant embedding for regular grids too large for a dense factor.

use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::covmodel::Covariance;
use crate::error::{Error, Result};
use crate::field::GridSpec;
use crate::rng::rng_from_seed;

// Eigenvalues above -NEG_TOL·max are rounding noise.
const NEG_TOL: f64 = 1e-10;
const MAX_ENLARGE: usize = 3;
const MAX_EMBEDDING: usize = 1 << 23;

/// Exact Gaussian sampler on a grid from the spectrum of a periodic
/// extension of the covariance.
#[derive(Clone)]
pub struct CirculantEmbedding {
    grid: GridSpec,
    ext: Vec<usize>,
    // sqrt(λ / M) per frequency, row-major over `ext`
    amp: Vec<f64>,
    ffts: Vec<Arc<dyn Fft<f64>>>,
    clipped: f64,
}

impl std::fmt::Debug for CirculantEmbedding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantEmbedding")
            .field("ext", &self.ext)
            .field("clipped", &self.clipped)
            .finish()
    }
}

/// Smallest 2-3-5-smooth integer ≥ n.
fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

fn fft_nd(data: &mut [Complex64], ext: &[usize], ffts: &[Arc<dyn Fft<f64>>]) {
    let d = ext.len();
    let total = data.len();
    for axis in 0..d {
        let len = ext[axis];
        if len == 1 {
            continue;
        }
        let stride: usize = ext[axis + 1..].iter().product();
        let fft = &ffts[axis];
        let mut line = vec![Complex64::new(0.0, 0.0); len];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let block = len * stride;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[base + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (k, v) in line.iter().enumerate() {
                    data[base + k * stride] = *v;
                }
            }
        }
    }
}

fn multi_index(mut idx: usize, ext: &[usize]) -> Vec<usize> {
    let mut out = vec![0; ext.len()];
    for k in (0..ext.len()).rev() {
        out[k] = idx % ext[k];
        idx /= ext[k];
    }
    out
}

impl CirculantEmbedding {
    pub fn new(cov: &impl Covariance, grid: &GridSpec) -> Result<Self> {
        let mut ext: Vec<usize> = grid
            .counts
            .iter()
            .map(|&m| if m == 1 { 1 } else { smooth_size(2 * (m - 1)) })
            .collect();
        let mut planner = FftPlanner::new();
        for attempt in 0..=MAX_ENLARGE {
            let total: usize = ext.iter().product();
            if total > MAX_EMBEDDING {
                return Err(Error::Numerical(format!(
                    "circulant embedding of size {ext:?} exceeds the memory cap"
                )));
            }
            let ffts: Vec<Arc<dyn Fft<f64>>> = ext.iter().map(|&l| planner.plan_fft_forward(l)).collect();
            let mut c = vec![Complex64::new(0.0, 0.0); total];
            for (j, v) in c.iter_mut().enumerate() {
                let mi = multi_index(j, &ext);
                let r2: f64 = mi
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| {
                        let wrapped = i.min(ext[k] - i) as f64 * grid.spacing[k];
                        wrapped * wrapped
                    })
                    .sum();
                *v = Complex64::new(cov.covariance(r2.sqrt()), 0.0);
            }
            fft_nd(&mut c, &ext, &ffts);
            let max = c.iter().map(|z| z.re).fold(0.0, f64::max);
            let neg: f64 = c.iter().map(|z| (-z.re).max(0.0)).sum();
            let worst = c.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
            let ok = worst >= -NEG_TOL * max;
            if ok || attempt == MAX_ENLARGE {
                let total_mass: f64 = c.iter().map(|z| z.re.abs()).sum();
                let clipped = if ok { 0.0 } else { neg / total_mass };
                if !ok {
                    log::warn!(
                        "circulant embedding {ext:?}: clipping negative eigenvalues ({:.3e} of spectral mass)",
                        clipped
                    );
                }
                let amp = c.iter().map(|z| (z.re.max(0.0) / total as f64).sqrt()).collect();
                return Ok(Self {
                    grid: grid.clone(),
                    ext,
                    amp,
                    ffts,
                    clipped,
                });
            }
            log::debug!("circulant embedding {ext:?} not nonnegative (min {worst:e}); enlarging");
            for (k, e) in ext.iter_mut().enumerate() {
                if grid.counts[k] > 1 {
                    *e = smooth_size(2 * *e);
                }
            }
        }
        unreachable!()
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn embedding_size(&self) -> &[usize] {
        &self.ext
    }

    /// Fraction of spectral mass removed by clipping (0 for an exact
    /// embedding).
    pub fn clipped_fraction(&self) -> f64 {
        self.clipped
    }

    pub fn draw(&self, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        let mut z: Vec<Complex64> = self
            .amp
            .iter()
            .map(|&a| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(a * re, a * im)
            })
            .collect();
        fft_nd(&mut z, &self.ext, &self.ffts);
        let grid = &self.grid;
        let d = grid.dim();
        let mut out = Vec::with_capacity(grid.len());
        let mut mi = vec![0usize; d];
        for _ in 0..grid.len() {
            let idx = mi.iter().zip(&self.ext).fold(0, |acc, (&i, &e)| acc * e + i);
            out.push(z[idx].re);
            for k in (0..d).rev() {
                mi[k] += 1;
                if mi[k] < grid.counts[k] {
                    break;
                }
                mi[k] = 0;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covmodel::CovarianceSpec;

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(58), 60);
        assert_eq!(smooth_size(64), 64);
        assert_eq!(smooth_size(1), 1);
        assert_eq!(smooth_size(7), 8);
    }

    #[test]
    fn fft_matches_naive_dft() {
        let ext = [3usize, 4];
        let mut planner = FftPlanner::new();
        let ffts: Vec<Arc<dyn Fft<f64>>> = ext.iter().map(|&l| planner.plan_fft_forward(l)).collect();
        let input: Vec<Complex64> = (0..12).map(|i| Complex64::new(i as f64, (i * i) as f64 * 0.1)).collect();
        let mut got = input.clone();
        fft_nd(&mut got, &ext, &ffts);
        for k0 in 0..3 {
            for k1 in 0..4 {
                let mut s = Complex64::new(0.0, 0.0);
                for j0 in 0..3 {
                    for j1 in 0..4 {
                        let ang = -2.0 * std::f64::consts::PI * ((k0 * j0) as f64 / 3.0 + (k1 * j1) as f64 / 4.0);
                        s += input[j0 * 4 + j1] * Complex64::from_polar(1.0, ang);
                    }
                }
                assert!((got[k0 * 4 + k1] - s).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn empirical_covariance_2d() {
        let cov = CovarianceSpec::exponential(1.0, 3.0).unwrap();
        let grid = GridSpec::regular(vec![20, 20], 1.0).unwrap();
        let ce = CirculantEmbedding::new(&cov, &grid).unwrap();
        assert_eq!(ce.clipped_fraction(), 0.0);
        let n_real = 4000;
        let pairs = [(0usize, 0usize), (0, 1), (0, 21), (210, 215), (0, 399)];
        let mut acc = vec![0.0; pairs.len()];
        for s in 0..n_real {
            let z = ce.draw(s);
            for (k, &(a, b)) in pairs.iter().enumerate() {
                acc[k] += z[a] * z[b] / n_real as f64;
            }
        }
        for (k, &(a, b)) in pairs.iter().enumerate() {
            let h = crate::field::dist(&grid.node(a), &grid.node(b));
            let want = cov.covariance(h);
            // MC standard error of a product moment ≤ sqrt((1 + ρ²)/n)
            let se = ((1.0 + want * want) / n_real as f64).sqrt();
            assert!((acc[k] - want).abs() < 4.0 * se, "pair {a},{b}: {} vs {want}", acc[k]);
        }
    }
}
