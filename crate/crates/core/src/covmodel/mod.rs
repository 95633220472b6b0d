//! Isotropic covariance families, compactly supported tapers and their
//! products.
//!
//! All families are parameterized on the normalized distance `x = r / a`
//! (covariances) or `x = r / θ` (tapers). The spherical, cubic and penta
//! polynomials serve both as covariances and as tapers.

mod parse;
mod spectral;

use std::fmt;

use crate::error::{Error, Result};
use crate::specfun::{bessel_k, gamma};

pub use spectral::{
    spectral_density_r3, spectral_density_scaled, tail_screen, DecayClass, Smoothness,
    SpectralModel, SpectralProfile, TailReport, TailVerdict,
};

/// Correlation level used to define the effective (practical) range.
pub const EFFECTIVE_RANGE_LEVEL: f64 = 0.05;

/// Isotropic covariance family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovFamily {
    Exponential,
    Gaussian,
    Spherical,
    Cubic,
    Penta,
    /// Matérn with smoothness `nu` (integer or half-integer).
    Matern { nu: f64 },
    /// Generalized Cauchy `(1 + x²)^(-alpha)`.
    Cauchy { alpha: f64 },
}

/// A stationary isotropic covariance `C₀(h) = sill · φ(|h| / range)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceSpec {
    family: CovFamily,
    sill: f64,
    range: f64,
    // 1 / (2^{ν-1} Γ(ν)) for Matérn, unused otherwise
    matern_norm: f64,
}

impl CovarianceSpec {
    pub fn new(family: CovFamily, sill: f64, range: f64) -> Result<Self> {
        if !(sill > 0.0) || !sill.is_finite() {
            return Err(Error::invalid(format!("sill must be positive (got {sill})")));
        }
        if !(range > 0.0) || !range.is_finite() {
            return Err(Error::invalid(format!("range must be positive (got {range})")));
        }
        let mut matern_norm = 0.0;
        match family {
            CovFamily::Matern { nu } => {
                if !(nu > 0.0) {
                    return Err(Error::invalid(format!("Matérn nu must be positive (got {nu})")));
                }
                // fail early for orders the Bessel kernel cannot evaluate
                bessel_k(nu, 1.0)?;
                matern_norm = 1.0 / (2f64.powf(nu - 1.0) * gamma(nu));
            }
            CovFamily::Cauchy { alpha } => {
                if !(alpha > 0.0) {
                    return Err(Error::invalid(format!(
                        "Cauchy alpha must be positive (got {alpha})"
                    )));
                }
            }
            _ => {}
        }
        Ok(Self {
            family,
            sill,
            range,
            matern_norm,
        })
    }

    pub fn exponential(sill: f64, range: f64) -> Result<Self> {
        Self::new(CovFamily::Exponential, sill, range)
    }

    pub fn family(&self) -> CovFamily {
        self.family
    }

    pub fn sill(&self) -> f64 {
        self.sill
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    /// Same family and sill, rescaled so that its effective range equals `target`.
    pub fn with_effective_range(&self, target: f64) -> Result<Self> {
        if !(target > 0.0) {
            return Err(Error::invalid(format!(
                "effective range must be positive (got {target})"
            )));
        }
        let unit = Self::new(self.family, self.sill, 1.0)?;
        Self::new(self.family, self.sill, target / unit.effective_range())
    }

    /// Correlation `φ(r / a)`.
    pub fn correlation(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::invalid(format!("lag must be non-negative (got {r})")));
        }
        Ok(self.corr(r))
    }

    pub(crate) fn corr(&self, r: f64) -> f64 {
        let x = r.abs() / self.range;
        match self.family {
            CovFamily::Exponential => (-x).exp(),
            CovFamily::Gaussian => (-x * x).exp(),
            CovFamily::Spherical => spherical_poly(x),
            CovFamily::Cubic => cubic_poly(x),
            CovFamily::Penta => penta_poly(x),
            CovFamily::Matern { nu } => {
                if x == 0.0 {
                    1.0
                } else if x > 700.0 {
                    0.0
                } else {
                    // order validated at construction
                    let k = bessel_k(nu, x).unwrap_or(0.0);
                    (self.matern_norm * x.powf(nu) * k).min(1.0)
                }
            }
            CovFamily::Cauchy { alpha } => (1.0 + x * x).powf(-alpha),
        }
    }

    /// Smallest distance at which the correlation drops to 0.05.
    pub fn effective_range(&self) -> f64 {
        let level = EFFECTIVE_RANGE_LEVEL;
        let mut lo = 0.0;
        let mut hi = self.range;
        while self.corr(hi) > level {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.corr(mid) > level {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        hi
    }

    /// Support radius for compactly supported families.
    pub fn support(&self) -> Option<f64> {
        match self.family {
            CovFamily::Spherical | CovFamily::Cubic | CovFamily::Penta => Some(self.range),
            _ => None,
        }
    }
}

impl fmt::Display for CovarianceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            CovFamily::Matern { nu } => write!(
                f,
                "matern(nu={nu}, range={}, sill={})",
                self.range, self.sill
            ),
            CovFamily::Cauchy { alpha } => write!(
                f,
                "cauchy(alpha={alpha}, range={}, sill={})",
                self.range, self.sill
            ),
            family => write!(
                f,
                "{}(range={}, sill={})",
                cov_family_name(family),
                self.range,
                self.sill
            ),
        }
    }
}

pub(crate) fn cov_family_name(family: CovFamily) -> &'static str {
    match family {
        CovFamily::Exponential => "exponential",
        CovFamily::Gaussian => "gaussian",
        CovFamily::Spherical => "spherical",
        CovFamily::Cubic => "cubic",
        CovFamily::Penta => "penta",
        CovFamily::Matern { .. } => "matern",
        CovFamily::Cauchy { .. } => "cauchy",
    }
}

/// Compactly supported correlation families usable as tapers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaperFamily {
    Spherical,
    Cubic,
    Penta,
    Bohman,
    Wendland0,
    Wendland1,
    Wendland2,
}

impl TaperFamily {
    pub const ALL: [TaperFamily; 7] = [
        TaperFamily::Spherical,
        TaperFamily::Cubic,
        TaperFamily::Penta,
        TaperFamily::Bohman,
        TaperFamily::Wendland0,
        TaperFamily::Wendland1,
        TaperFamily::Wendland2,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TaperFamily::Spherical => "spherical",
            TaperFamily::Cubic => "cubic",
            TaperFamily::Penta => "penta",
            TaperFamily::Bohman => "bohman",
            TaperFamily::Wendland0 => "wendland0",
            TaperFamily::Wendland1 => "wendland1",
            TaperFamily::Wendland2 => "wendland2",
        }
    }

    /// Unit-range profile `φ(x)`, zero for `x >= 1`.
    pub fn profile(&self, x: f64) -> f64 {
        let x = x.abs();
        if x >= 1.0 {
            return 0.0;
        }
        let v = match self {
            TaperFamily::Spherical => spherical_poly(x),
            TaperFamily::Cubic => cubic_poly(x),
            TaperFamily::Penta => penta_poly(x),
            TaperFamily::Bohman => bohman(x),
            TaperFamily::Wendland0 => (1.0 - x) * (1.0 - x),
            TaperFamily::Wendland1 => {
                let x2 = x * x;
                1.0 - 10.0 * x2 + 20.0 * x2 * x - 15.0 * x2 * x2 + 4.0 * x2 * x2 * x
            }
            TaperFamily::Wendland2 => horner(
                x,
                &[
                    1.0,
                    0.0,
                    -28.0 / 3.0,
                    0.0,
                    70.0,
                    -448.0 / 3.0,
                    140.0,
                    -64.0,
                    35.0 / 3.0,
                ],
            ),
        };
        // the high-order polynomials dip a few ulps below zero near x = 1
        v.clamp(0.0, 1.0)
    }
}

impl fmt::Display for TaperFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A taper `C_{T,θ}(r) = φ(r / θ)` with compact support `[0, θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Taper {
    family: TaperFamily,
    theta: f64,
}

impl Taper {
    pub fn new(family: TaperFamily, theta: f64) -> Result<Self> {
        if !(theta > 0.0) || theta.is_nan() {
            return Err(Error::invalid(format!("taper range must be positive (got {theta})")));
        }
        Ok(Self { family, theta })
    }

    pub fn family(&self) -> TaperFamily {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Taper value at lag `r`; exactly zero for `r >= θ`.
    pub fn value(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::invalid(format!("lag must be non-negative (got {r})")));
        }
        Ok(self.eval(r))
    }

    pub(crate) fn eval(&self, r: f64) -> f64 {
        if self.theta.is_infinite() {
            return 1.0;
        }
        self.family.profile(r / self.theta)
    }
}

impl fmt::Display for Taper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(theta={})", self.family.name(), self.theta)
    }
}

/// The tapered covariance `C₁ = C₀ · C_T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaperedCovariance {
    pub base: CovarianceSpec,
    pub taper: Taper,
}

impl TaperedCovariance {
    pub fn new(base: CovarianceSpec, taper: Taper) -> Self {
        Self { base, taper }
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::invalid(format!("lag must be non-negative (got {r})")));
        }
        Ok(self.covariance(r))
    }
}

/// Free-function form of [`CovarianceSpec::correlation`].
pub fn correlation(spec: &CovarianceSpec, r: f64) -> Result<f64> {
    spec.correlation(r)
}

/// Free-function form of [`Taper::value`].
pub fn taper_value(taper: &Taper, r: f64) -> Result<f64> {
    taper.value(r)
}

/// Free-function form of [`TaperedCovariance::value`].
pub fn tapered_value(tc: &TaperedCovariance, r: f64) -> Result<f64> {
    tc.value(r)
}

/// Free-function form of [`CovarianceSpec::effective_range`].
pub fn effective_range(spec: &CovarianceSpec) -> f64 {
    spec.effective_range()
}

/// Anything that can be evaluated as an isotropic covariance of the lag.
///
/// `covariance` is even in its argument.
pub trait Covariance: Send + Sync {
    fn covariance(&self, r: f64) -> f64;

    fn sill(&self) -> f64;

    /// Radius beyond which the covariance is identically zero, if any.
    fn support(&self) -> Option<f64> {
        None
    }
}

impl Covariance for CovarianceSpec {
    fn covariance(&self, r: f64) -> f64 {
        self.sill * self.corr(r)
    }

    fn sill(&self) -> f64 {
        self.sill
    }

    fn support(&self) -> Option<f64> {
        CovarianceSpec::support(self)
    }
}

impl Covariance for TaperedCovariance {
    fn covariance(&self, r: f64) -> f64 {
        let t = self.taper.eval(r.abs());
        if t == 0.0 {
            0.0
        } else {
            self.base.covariance(r) * t
        }
    }

    fn sill(&self) -> f64 {
        self.base.sill
    }

    fn support(&self) -> Option<f64> {
        let t = self.taper.theta;
        let s = match self.base.support() {
            Some(b) => t.min(b),
            None => t,
        };
        s.is_finite().then_some(s)
    }
}

/// Either the target covariance or its tapered version.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovModel {
    Full(CovarianceSpec),
    Tapered(TaperedCovariance),
}

impl CovModel {
    pub fn base(&self) -> &CovarianceSpec {
        match self {
            CovModel::Full(c) => c,
            CovModel::Tapered(t) => &t.base,
        }
    }

    pub fn is_tapered(&self) -> bool {
        matches!(self, CovModel::Tapered(_))
    }
}

impl Covariance for CovModel {
    fn covariance(&self, r: f64) -> f64 {
        match self {
            CovModel::Full(c) => c.covariance(r),
            CovModel::Tapered(t) => t.covariance(r),
        }
    }

    fn sill(&self) -> f64 {
        match self {
            CovModel::Full(c) => c.sill,
            CovModel::Tapered(t) => t.base.sill,
        }
    }

    fn support(&self) -> Option<f64> {
        match self {
            CovModel::Full(c) => Covariance::support(c),
            CovModel::Tapered(t) => Covariance::support(t),
        }
    }
}

impl From<CovarianceSpec> for CovModel {
    fn from(c: CovarianceSpec) -> Self {
        CovModel::Full(c)
    }
}

impl From<TaperedCovariance> for CovModel {
    fn from(t: TaperedCovariance) -> Self {
        CovModel::Tapered(t)
    }
}

impl fmt::Display for CovModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovModel::Full(c) => write!(f, "{c}"),
            CovModel::Tapered(t) => write!(f, "{} * {}", t.base, t.taper),
        }
    }
}

fn horner(x: f64, coeffs: &[f64]) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn spherical_poly(x: f64) -> f64 {
    if x >= 1.0 {
        0.0
    } else {
        1.0 - 1.5 * x + 0.5 * x * x * x
    }
}

fn cubic_poly(x: f64) -> f64 {
    if x >= 1.0 {
        0.0
    } else {
        horner(x, &[1.0, 0.0, -7.0, 35.0 / 4.0, 0.0, -3.5, 0.0, 0.75]).max(0.0)
    }
}

fn penta_poly(x: f64) -> f64 {
    if x >= 1.0 {
        0.0
    } else {
        horner(
            x,
            &[
                1.0,
                0.0,
                -22.0 / 3.0,
                0.0,
                33.0,
                -77.0 / 2.0,
                0.0,
                33.0 / 2.0,
                0.0,
                -11.0 / 2.0,
                0.0,
                5.0 / 6.0,
            ],
        )
        .max(0.0)
    }
}

// Table form: (1 - x) sin(2πx)/(2πx) + (1 - cos 2πx)/(2π² x), continuous at 0.
fn bohman(x: f64) -> f64 {
    use std::f64::consts::PI;
    if x < 1e-8 {
        // 1 - (2π²/3) x² + (π²/3) x³ + O(x⁴)
        return 1.0 - PI * PI / 3.0 * x * x * (2.0 - x);
    }
    let u = 2.0 * PI * x;
    // 1 - cos u written as 2 sin²(u/2) to avoid cancellation
    let h = (0.5 * u).sin();
    (1.0 - x) * u.sin() / u + h * h / (PI * PI * x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn all_covariances() -> Vec<CovarianceSpec> {
        let fams = [
            CovFamily::Exponential,
            CovFamily::Gaussian,
            CovFamily::Spherical,
            CovFamily::Cubic,
            CovFamily::Penta,
            CovFamily::Matern { nu: 0.5 },
            CovFamily::Matern { nu: 1.0 },
            CovFamily::Matern { nu: 1.5 },
            CovFamily::Matern { nu: 2.5 },
            CovFamily::Cauchy { alpha: 0.5 },
            CovFamily::Cauchy { alpha: 2.0 },
        ];
        fams.iter()
            .map(|&f| CovarianceSpec::new(f, 1.0, 1.0).unwrap())
            .collect()
    }

    #[test]
    fn unit_correlation_at_origin() {
        for c in all_covariances() {
            assert_eq!(c.correlation(0.0).unwrap(), 1.0, "{c}");
        }
        for t in TaperFamily::ALL {
            assert_eq!(Taper::new(t, 0.7).unwrap().value(0.0).unwrap(), 1.0, "{t}");
        }
    }

    #[test]
    fn exponential_value() {
        let c = CovarianceSpec::exponential(1.0, 1.0).unwrap();
        assert!((c.correlation(1.0).unwrap() - 0.367_879_441_171_442_3).abs() < 1e-15);
    }

    #[test]
    fn matern_half_is_exponential() {
        let m = CovarianceSpec::new(CovFamily::Matern { nu: 0.5 }, 1.0, 1.0).unwrap();
        let e = CovarianceSpec::exponential(1.0, 1.0).unwrap();
        for r in [0.01, 0.5, 2.0, 7.0] {
            assert!((m.correlation(r).unwrap() - e.correlation(r).unwrap()).abs() < 1e-14);
        }
        assert!((m.correlation(2.0).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn matern_three_halves_closed_form() {
        let m = CovarianceSpec::new(CovFamily::Matern { nu: 1.5 }, 1.0, 1.0).unwrap();
        for r in [0.1, 1.0, 3.0] {
            let want = (1.0 + r) * (-r as f64).exp();
            assert!((m.correlation(r).unwrap() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn negative_lag_rejected() {
        let c = CovarianceSpec::exponential(1.0, 1.0).unwrap();
        assert!(c.correlation(-1.0).is_err());
        assert!(Taper::new(TaperFamily::Spherical, 1.0).unwrap().value(-0.1).is_err());
        assert!(CovarianceSpec::new(CovFamily::Matern { nu: 0.3 }, 1.0, 1.0).is_err());
        assert!(CovarianceSpec::exponential(0.0, 1.0).is_err());
        assert!(Taper::new(TaperFamily::Spherical, 0.0).is_err());
    }

    #[test]
    fn taper_support_and_values() {
        for fam in TaperFamily::ALL {
            let t = Taper::new(fam, 0.8).unwrap();
            assert_eq!(t.value(0.8).unwrap(), 0.0);
            assert_eq!(t.value(3.0).unwrap(), 0.0);
            for i in 0..=800 {
                let v = t.value(i as f64 * 1e-3).unwrap();
                assert!((0.0..=1.0).contains(&v), "{fam} out of range: {v}");
            }
        }
        // hand evaluation of the spherical polynomial, then an independent evaluator
        let sph = Taper::new(TaperFamily::Spherical, 1.0).unwrap();
        assert!((sph.value(0.5).unwrap() - 0.3125).abs() < 1e-15);
        let independent = |x: f64| 1.0 - 3.0 * x / 2.0 + x.powi(3) / 2.0;
        assert!((sph.value(0.37).unwrap() - independent(0.37)).abs() < 1e-15);
        let boh = Taper::new(TaperFamily::Bohman, 1.0).unwrap();
        assert!((boh.value(1e-9).unwrap() - 1.0).abs() < 1e-12);
        // continuity across the small-argument switch
        assert!((boh.value(1e-8 - 1e-14).unwrap() - boh.value(1e-8 + 1e-14).unwrap()).abs() < 1e-15);
        // mpmath at 40 digits
        assert!((boh.value(1e-3).unwrap() - 0.999_993_423_566_579_9).abs() < 1e-15);
    }

    #[test]
    fn tapered_product() {
        let c = CovarianceSpec::exponential(1.0, 1.0).unwrap();
        let t = Taper::new(TaperFamily::Spherical, 1.0).unwrap();
        let tc = TaperedCovariance::new(c, t);
        assert_eq!(tc.value(0.0).unwrap(), 1.0);
        assert_eq!(tc.value(1.0).unwrap(), 0.0);
        assert_eq!(tc.value(2.0).unwrap(), 0.0);
        let want = (-0.5f64).exp() * 0.3125;
        assert!((tc.value(0.5).unwrap() - want).abs() < 1e-15);
        let c2 = CovarianceSpec::exponential(2.5, 1.0).unwrap();
        assert_eq!(TaperedCovariance::new(c2, t).value(0.0).unwrap(), 2.5);
    }

    #[test]
    fn tapered_never_exceeds_base() {
        for c in all_covariances() {
            for fam in TaperFamily::ALL {
                let tc = TaperedCovariance::new(c, Taper::new(fam, 1.3).unwrap());
                for i in 0..10_000 {
                    let r = i as f64 * 2e-4;
                    let base = c.covariance(r);
                    let tv = tc.covariance(r);
                    assert!(tv.abs() <= base.abs(), "{c} {fam} r={r}");
                }
            }
        }
    }

    #[test]
    fn effective_ranges() {
        let e = CovarianceSpec::exponential(1.0, 1.0).unwrap();
        assert!((e.effective_range() - 20f64.ln()).abs() < 1e-12);
        assert!((e.effective_range() - 2.9957).abs() < 1e-4);
        let g = CovarianceSpec::new(CovFamily::Gaussian, 1.0, 1.0).unwrap();
        assert!((g.effective_range() - 1.730_818_382_602_285_4).abs() < 1e-12);
        // bisection on the cubic 1 - 1.5x + 0.5x³ = 0.05 (reference root)
        let s = CovarianceSpec::new(CovFamily::Spherical, 1.0, 1.0).unwrap();
        assert!((s.effective_range() - 0.811_401_351_899_507_7).abs() < 1e-12);
        assert!(s.effective_range() < 1.0);
        let m = CovarianceSpec::new(CovFamily::Matern { nu: 1.0 }, 1.0, 1.0).unwrap();
        assert!((m.effective_range() - 3.998_522_311_489_36).abs() < 1e-9);
        let scaled = m.with_effective_range(25.0).unwrap();
        assert!((scaled.effective_range() - 25.0).abs() < 1e-9);
    }

    fn min_eigenvalue(mat: &[f64], n: usize) -> f64 {
        // Jacobi eigenvalue iteration; independent of the crate's factorizations.
        let mut a = mat.to_vec();
        for _ in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[p * n + q] * a[p * n + q];
                }
            }
            if off < 1e-22 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[i * n + i]).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn assembled_matrices_are_positive_semidefinite() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let covs = all_covariances();
        for trial in 0..200 {
            let dim = 1 + trial % 3;
            let n = rng.gen_range(2..=40);
            let pts: Vec<f64> = (0..n * dim).map(|_| rng.gen::<f64>()).collect();
            let c = covs[trial % covs.len()];
            let fam = TaperFamily::ALL[trial % 7];
            let tc = TaperedCovariance::new(c, Taper::new(fam, rng.gen_range(0.1..1.5)).unwrap());
            for model in [CovModel::Full(c), CovModel::Tapered(tc)] {
                let mut m = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        let d: f64 = (0..dim)
                            .map(|k| (pts[i * dim + k] - pts[j * dim + k]).powi(2))
                            .sum::<f64>()
                            .sqrt();
                        m[i * n + j] = model.covariance(d);
                    }
                }
                let ev = min_eigenvalue(&m, n);
                assert!(ev >= -1e-8, "{model} min eigenvalue {ev} (dim {dim}, n {n})");
            }
        }
    }

    #[test]
    fn display_round_trips_through_parser() {
        for c in all_covariances() {
            let parsed: CovarianceSpec = c.to_string().parse().unwrap();
            assert_eq!(parsed, c);
        }
        for fam in TaperFamily::ALL {
            let t = Taper::new(fam, 0.3).unwrap();
            let parsed: Taper = t.to_string().parse().unwrap();
            assert_eq!(parsed, t);
        }
    }
}
