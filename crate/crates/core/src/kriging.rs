//! Simple kriging and the mean squared error algebra for tapered
//! prediction and conditional simulation.

use std::io::Write;

use serde::Serialize;

use crate::covmodel::{CovModel, Covariance, CovarianceSpec, Taper, TaperedCovariance};
use crate::error::{Error, Result};
use crate::field::{dist, PointSet};
use crate::linalg::{
    assemble_dense, assemble_sparse_tapered, cholesky, covariance_vector, sparse_cholesky,
    CholFactor, JitterPolicy,
};

/// Relative tolerance (times the sill) below which negative variances are
/// treated as round-off.
pub const VARIANCE_TOLERANCE: f64 = 1e-9;

/// A factorized simple-kriging system (zero known mean).
#[derive(Debug, Clone)]
pub struct KrigingSystem {
    points: PointSet,
    cov: CovModel,
    factor: CholFactor,
}

/// Assembles and factorizes the covariance matrix of `cov` at `points`.
/// Tapered models use the sparse path when `sparse_if_tapered` is set.
pub fn build_system(cov: impl Into<CovModel>, points: &PointSet, sparse_if_tapered: bool) -> Result<KrigingSystem> {
    let cov = cov.into();
    let factor = match &cov {
        CovModel::Tapered(tc) if sparse_if_tapered => {
            sparse_cholesky(&assemble_sparse_tapered(tc, points)?, JitterPolicy::default())?
        }
        _ => cholesky(&assemble_dense(&cov, points), JitterPolicy::default())?,
    };
    Ok(KrigingSystem {
        points: points.clone(),
        cov,
        factor,
    })
}

impl KrigingSystem {
    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn cov(&self) -> &CovModel {
        &self.cov
    }

    pub fn factor(&self) -> &CholFactor {
        &self.factor
    }

    pub fn sill(&self) -> f64 {
        self.cov.sill()
    }

    fn check_target(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.points.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.points.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn covariance_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_target(x)?;
        Ok(covariance_vector(&self.cov, &self.points, x))
    }

    /// `λ(x) = K⁻¹ k(x)`.
    pub fn weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.factor.solve(&self.covariance_vector(x)?)
    }

    /// `σ² − k′K⁻¹k`, evaluated as `σ² − ‖L⁻¹Pk‖²`.
    pub fn kriging_variance(&self, x: &[f64]) -> Result<f64> {
        let y = self.factor.forward_solve(&self.covariance_vector(x)?)?;
        let sill = self.sill();
        clamp_variance(sill - y.iter().map(|v| v * v).sum::<f64>(), sill)
    }

    /// Kriging estimate `λ(x)′ z`.
    pub fn predict(&self, x: &[f64], data: &[f64]) -> Result<f64> {
        if data.len() != self.points.len() {
            return Err(Error::DimensionMismatch {
                expected: self.points.len(),
                got: data.len(),
            });
        }
        Ok(self.weights(x)?.iter().zip(data).map(|(w, z)| w * z).sum())
    }
}

fn clamp_variance(v: f64, sill: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -VARIANCE_TOLERANCE * sill {
        Ok(0.0)
    } else {
        Err(Error::Numerical(format!(
            "negative variance {v:e} exceeds round-off tolerance (sill {sill})"
        )))
    }
}

pub fn weights(sys: &KrigingSystem, x: &[f64]) -> Result<Vec<f64>> {
    sys.weights(x)
}

pub fn kriging_variance(sys: &KrigingSystem, x: &[f64]) -> Result<f64> {
    sys.kriging_variance(x)
}

fn check_pair(sys0: &KrigingSystem, sys1: &KrigingSystem) -> Result<()> {
    if sys0.points != sys1.points {
        return Err(Error::invalid("kriging systems are built on different point sets"));
    }
    Ok(())
}

// K₀ v with rows generated on the fly.
fn streaming_matvec(cov: &impl Covariance, points: &PointSet, v: &[f64]) -> Vec<f64> {
    let sill = cov.sill();
    (0..points.len())
        .map(|i| {
            let pi = points.point(i);
            points
                .iter()
                .zip(v)
                .enumerate()
                .map(|(j, (pj, vj))| if i == j { sill * vj } else { cov.covariance(dist(pi, pj)) * vj })
                .sum()
        })
        .collect()
}

/// Prediction error variance under `C₀` of the kriging predictor built
/// with the covariance of `sys1`: `σ² − 2λ₁′k₀ + λ₁′K₀λ₁`.
pub fn plugin_mse(sys0: &KrigingSystem, sys1: &KrigingSystem, x: &[f64]) -> Result<f64> {
    check_pair(sys0, sys1)?;
    let lambda1 = sys1.weights(x)?;
    let k0 = sys0.covariance_vector(x)?;
    let k0l = streaming_matvec(&sys0.cov, &sys0.points, &lambda1);
    let sill = sys0.sill();
    let v = sill - 2.0 * dot(&lambda1, &k0) + dot(&lambda1, &k0l);
    clamp_variance(v, sill)
}

/// `(λ₁ − λ₀)′K₀(λ₁ − λ₀)`, evaluated as `‖L₀ᵀλ₁ − L₀⁻¹k₀‖²` so that it is
/// nonnegative by construction.
pub fn mse_excess(sys0: &KrigingSystem, sys1: &KrigingSystem, x: &[f64]) -> Result<f64> {
    check_pair(sys0, sys1)?;
    let lambda1 = sys1.weights(x)?;
    let a = sys0.factor.transpose_mul(&lambda1)?;
    let b = sys0.factor.forward_solve(&sys0.covariance_vector(x)?)?;
    Ok(a.iter().zip(&b).map(|(u, v)| (u - v) * (u - v)).sum())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Prediction and simulation error variances at one target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MseReport {
    pub target: Vec<f64>,
    /// `σ²_{k,C₀}(x)`
    pub sk_var_c0: f64,
    /// `σ²_{k,C₁}(x)`
    pub sk_var_c1: f64,
    /// `MSE(x, C₁)`
    pub mse_plugin: f64,
    /// `MSE(x, C₁) − MSE(x, C₀)`
    pub delta: f64,
    /// simulation MSE of the full approach, `2σ²_{k,C₀}`
    pub mses_f: f64,
    /// tapered approach, `MSE(x, C₁) + σ²_{k,C₁}`
    pub mses_t: f64,
    /// half-tapered approach, `2 MSE(x, C₁)`
    pub mses_ht: f64,
    pub ratio_t: f64,
    pub ratio_ht: f64,
    /// The plug-in MSE exceeded the tapered kriging variance (rare).
    pub plugin_exceeds_sk1: bool,
}

impl MseReport {
    /// Report from two systems on the same points: `sys0` under `C₀`,
    /// `sys1` under `C₁`.
    pub fn from_systems(sys0: &KrigingSystem, sys1: &KrigingSystem, x: &[f64]) -> Result<Self> {
        check_pair(sys0, sys1)?;
        let sk0 = sys0.kriging_variance(x)?;
        let sk1 = sys1.kriging_variance(x)?;
        let delta = mse_excess(sys0, sys1, x)?;
        let plugin = sk0 + delta;
        let mses_f = 2.0 * sk0;
        let mses_t = plugin + sk1;
        let mses_ht = 2.0 * plugin;
        let ratio = |v: f64| if mses_f > 0.0 { v / mses_f } else { f64::NAN };
        let sill = sys0.sill();
        Ok(Self {
            target: x.to_vec(),
            sk_var_c0: sk0,
            sk_var_c1: sk1,
            mse_plugin: plugin,
            delta,
            mses_f,
            mses_t,
            mses_ht,
            ratio_t: ratio(mses_t),
            ratio_ht: ratio(mses_ht),
            plugin_exceeds_sk1: plugin > sk1 + VARIANCE_TOLERANCE * sill,
        })
    }

    pub const CSV_HEADER: &'static str =
        "target,sk_var_c0,sk_var_c1,mse_plugin,delta,mses_f,mses_t,mses_ht,ratio_t,ratio_ht,plugin_exceeds_sk1";

    pub fn write_csv_row<W: Write>(&self, mut w: W) -> Result<()> {
        let target: Vec<String> = self.target.iter().map(|v| v.to_string()).collect();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            target.join(" "),
            self.sk_var_c0,
            self.sk_var_c1,
            self.mse_plugin,
            self.delta,
            self.mses_f,
            self.mses_t,
            self.mses_ht,
            self.ratio_t,
            self.ratio_ht,
            self.plugin_exceeds_sk1
        )?;
        Ok(())
    }
}

/// Builds both systems (dense `C₀`, sparse `C₁`) and reports at `x`.
pub fn mse_report(cov0: &CovarianceSpec, taper: &Taper, points: &PointSet, x: &[f64]) -> Result<MseReport> {
    let sys0 = build_system(*cov0, points, false)?;
    let sys1 = build_system(TaperedCovariance::new(*cov0, *taper), points, true)?;
    MseReport::from_systems(&sys0, &sys1, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covmodel::{CovFamily, TaperFamily};
    use crate::field::{draw_sample, BoxDomain, SamplingDesign};
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    fn exp_cov(range: f64) -> CovarianceSpec {
        CovarianceSpec::exponential(1.0, range).unwrap()
    }

    fn random_points(n: usize, dim: usize, seed: u64) -> PointSet {
        let mut rng = rng_from_seed(seed);
        PointSet::new(dim, (0..n * dim).map(|_| rng.gen::<f64>()).collect()).unwrap()
    }

    #[test]
    fn single_point_closed_forms() {
        let c = exp_cov(0.5);
        let p = PointSet::new(1, vec![0.0]).unwrap();
        let sys = build_system(c, &p, false).unwrap();
        let rho = (-0.3f64 / 0.5).exp();
        let w = sys.weights(&[0.3]).unwrap();
        assert!((w[0] - rho).abs() < 1e-15);
        assert!((sys.kriging_variance(&[0.3]).unwrap() - (1.0 - rho * rho)).abs() < 1e-15);
        assert_eq!(sys.kriging_variance(&[0.0]).unwrap(), 0.0);
        let far = build_system(CovarianceSpec::new(CovFamily::Spherical, 2.0, 0.1).unwrap(), &p, false).unwrap();
        assert_eq!(far.kriging_variance(&[5.0]).unwrap(), 2.0);
    }

    #[test]
    fn exact_interpolation_at_data() {
        let p = random_points(40, 2, 1);
        let sys = build_system(exp_cov(0.3), &p, false).unwrap();
        for i in 0..p.len() {
            let w = sys.weights(p.point(i)).unwrap();
            for (j, wj) in w.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((wj - want).abs() < 1e-9, "{i} {j} {wj}");
            }
        }
    }

    #[test]
    fn three_collinear_points_hand_solve() {
        // exponential, unit range, points 0, 1, 2, target 1.5
        let p = PointSet::new(1, vec![0.0, 1.0, 2.0]).unwrap();
        let sys = build_system(exp_cov(1.0), &p, false).unwrap();
        let w = sys.weights(&[1.5]).unwrap();
        // Markov screening: the weight on the far point vanishes and the two
        // neighbors get the 2-point solution.
        let e = (-1.0f64).exp();
        let (a, b) = ((-1.5f64).exp(), (-0.5f64).exp());
        let k = [a, b, b];
        let kinv = {
            // explicit inverse of [[1,e,e²],[e,1,e],[e²,e,1]] (tridiagonal)
            let d = 1.0 - e * e;
            [[1.0 / d, -e / d, 0.0], [-e / d, (1.0 + e * e) / d, -e / d], [0.0, -e / d, 1.0 / d]]
        };
        for i in 0..3 {
            let want: f64 = (0..3).map(|j| kinv[i][j] * k[j]).sum();
            assert!((w[i] - want).abs() < 1e-14);
        }
        assert!(w[0].abs() < 1e-14);
        assert!(w[1] > 0.3 && w[2] > 0.3);
    }

    #[test]
    fn diagonal_tapered_system() {
        let p = PointSet::new(1, vec![0.0, 1.0, 2.0]).unwrap();
        let tc = TaperedCovariance::new(exp_cov(1.0), Taper::new(TaperFamily::Spherical, 0.5).unwrap());
        let sys = build_system(tc, &p, true).unwrap();
        let w = sys.weights(&[0.2]).unwrap();
        assert!((w[0] - tc.covariance(0.2)).abs() < 1e-15);
        assert_eq!(&w[1..], &[0.0, 0.0]);
    }

    #[test]
    fn dense_and_sparse_builds_agree() {
        let p = random_points(300, 2, 2);
        let tc = TaperedCovariance::new(exp_cov(0.2), Taper::new(TaperFamily::Wendland1, 0.15).unwrap());
        let a = build_system(tc, &p, true).unwrap();
        let b = build_system(tc, &p, false).unwrap();
        for x in [[0.5, 0.5], [0.1, 0.9], [0.33, 0.01]] {
            let wa = a.weights(&x).unwrap();
            let wb = b.weights(&x).unwrap();
            assert!(wa.iter().zip(&wb).all(|(u, v)| (u - v).abs() < 1e-8));
        }
    }

    #[test]
    fn plugin_equals_truth_without_taper() {
        let p = random_points(50, 2, 3);
        let s0 = build_system(exp_cov(0.3), &p, false).unwrap();
        let s1 = build_system(exp_cov(0.3), &p, false).unwrap();
        let x = [0.4, 0.6];
        let sk = s0.kriging_variance(&x).unwrap();
        assert!((plugin_mse(&s0, &s1, &x).unwrap() - sk).abs() < 1e-12);
        let wide = TaperedCovariance::new(exp_cov(0.3), Taper::new(TaperFamily::Spherical, 1e6).unwrap());
        let s2 = build_system(wide, &p, false).unwrap();
        assert!((plugin_mse(&s0, &s2, &x).unwrap() - sk).abs() < 1e-5);
        let other = build_system(exp_cov(0.3), &random_points(50, 2, 4), false).unwrap();
        assert!(plugin_mse(&s0, &other, &x).is_err());
    }

    #[test]
    fn report_identities() {
        let d = BoxDomain::unit(2).unwrap();
        let p = draw_sample(&SamplingDesign::RandomStratified, 100, &d, 5).unwrap();
        let c0 = CovarianceSpec::exponential(1.0, 1.0).unwrap().with_effective_range(0.3).unwrap();
        let t = Taper::new(TaperFamily::Spherical, 0.15).unwrap();
        let r = mse_report(&c0, &t, &p, &[0.5, 0.5]).unwrap();
        assert!((r.mses_f - 2.0 * r.sk_var_c0).abs() < 1e-15);
        assert!((r.mses_ht - 2.0 * r.mse_plugin).abs() < 1e-15);
        assert!((r.mses_t - (r.mse_plugin + r.sk_var_c1)).abs() < 1e-15);
        assert!((r.ratio_ht - r.mse_plugin / r.sk_var_c0).abs() < 1e-12);
        assert!(r.ratio_ht >= 1.0 && r.ratio_t >= 1.0);
        let huge = Taper::new(TaperFamily::Spherical, 1e7).unwrap();
        let r = mse_report(&c0, &huge, &p, &[0.5, 0.5]).unwrap();
        assert!((r.ratio_ht - 1.0).abs() < 1e-4 && (r.ratio_t - 1.0).abs() < 1e-4);
        let mut buf = Vec::new();
        r.write_csv_row(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().split(',').count(), MseReport::CSV_HEADER.split(',').count());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn plugin_minus_truth_is_quadratic_form(seed in 0u64..10_000, n in 2usize..60, dim in 1usize..4, theta in 0.05f64..1.0) {
            let p = random_points(n, dim, seed);
            prop_assume!(p.min_separation() > 1e-3);
            let c0 = exp_cov(0.2);
            let tc = TaperedCovariance::new(c0, Taper::new(TaperFamily::Wendland1, theta).unwrap());
            let s0 = build_system(c0, &p, false).unwrap();
            let s1 = build_system(tc, &p, true).unwrap();
            let x = vec![0.5; dim];
            let direct = plugin_mse(&s0, &s1, &x).unwrap() - s0.kriging_variance(&x).unwrap();
            let quad = mse_excess(&s0, &s1, &x).unwrap();
            // independent dense evaluation of (λ₁−λ₀)′K₀(λ₁−λ₀)
            let l0 = s0.weights(&x).unwrap();
            let l1 = s1.weights(&x).unwrap();
            let diff: Vec<f64> = l1.iter().zip(&l0).map(|(a, b)| a - b).collect();
            let k0 = assemble_dense(&c0, &p);
            let oracle = dot(&diff, &k0.matvec(&diff));
            prop_assert!((direct - quad).abs() < 1e-10);
            prop_assert!((oracle - quad).abs() < 1e-10);
            prop_assert!(quad >= 0.0);
        }
    }
}
