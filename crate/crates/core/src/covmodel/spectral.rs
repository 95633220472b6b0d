//! Radial spectral densities in ℝ³, smoothness/decay metadata and the
//! tail-condition screen.

use std::f64::consts::PI;
use std::fmt;

use serde::Serialize;

use super::{CovFamily, CovarianceSpec, Taper, TaperFamily};
use crate::quad::gauss_legendre;
use crate::specfun::{bessel_j_threehalves, bessel_k, gamma};

/// Below this frequency the closed forms of the compactly supported
/// families lose digits to cancellation; the radial transform is integrated
/// directly instead.
const DIRECT_TRANSFORM_BELOW: f64 = 8.0;

/// Large-frequency decay of a spectral density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DecayClass {
    /// `f(s) ~ s^(-exponent)`
    Polynomial(f64),
    /// `f(s) ~ s^β e^(-s)`
    ExponentialRate,
    /// `f(s) ~ e^(-s²)`
    GaussianRate,
}

impl fmt::Display for DecayClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecayClass::Polynomial(e) => write!(f, "s^-{e}"),
            DecayClass::ExponentialRate => f.write_str("exponential"),
            DecayClass::GaussianRate => f.write_str("gaussian"),
        }
    }
}

/// Mean-square differentiability order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Smoothness {
    Finite(u32),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralProfile {
    pub decay: DecayClass,
    pub smoothness: Smoothness,
}

/// A correlation model with a tabulated unit-range spectral density.
pub trait SpectralModel {
    /// Radial spectral density in ℝ³ of the unit-range correlation.
    fn unit_spectral_density(&self, s: f64) -> f64;

    /// Length scale `a` such that the model is `φ(r / a)`.
    fn length_scale(&self) -> f64;

    fn spectral_profile(&self) -> SpectralProfile;
}

/// Unit-range radial spectral density in ℝ³. Negative `s` is treated as `|s|`.
pub fn spectral_density_r3(model: &impl SpectralModel, s: f64) -> f64 {
    model.unit_spectral_density(s.abs())
}

/// Spectral density of the model at its own range: `a³ f(a s)`.
pub fn spectral_density_scaled(model: &impl SpectralModel, s: f64) -> f64 {
    let a = model.length_scale();
    a * a * a * model.unit_spectral_density(a * s.abs())
}

// f(s) = 1/(2π²) ∫_0^1 φ(r) r² sin(sr)/(sr) dr for a profile supported on [0, 1].
fn direct_radial_transform(profile: impl Fn(f64) -> f64, s: f64) -> f64 {
    let integrand = |r: f64| {
        let sr = s * r;
        let sinc = if sr.abs() < 1e-8 { 1.0 - sr * sr / 6.0 } else { sr.sin() / sr };
        profile(r) * r * r * sinc
    };
    gauss_legendre(integrand, 0.0, 1.0) / (2.0 * PI * PI)
}

fn compact_density(family: TaperFamily, s: f64) -> f64 {
    if s < DIRECT_TRANSFORM_BELOW {
        return direct_radial_transform(|r| family.profile(r), s).max(0.0);
    }
    let pi2 = PI * PI;
    let v = match family {
        TaperFamily::Spherical => {
            let j = bessel_j_threehalves(s / 2.0).unwrap_or(0.0);
            3.0 / (4.0 * PI * s.powi(3)) * j * j
        }
        TaperFamily::Cubic => {
            let h = s / 2.0;
            let inner = (s * s - 12.0) * h.sin() + 6.0 * s * h.cos();
            210.0 * inner * inner / (pi2 * s.powi(10))
        }
        TaperFamily::Penta => {
            let h = s / 2.0;
            let inner = s * (s * s - 60.0) * h.cos() - 12.0 * (s * s - 10.0) * h.sin();
            27720.0 * inner * inner / (pi2 * s.powi(14))
        }
        TaperFamily::Bohman => {
            let den = s * s * s - 4.0 * pi2 * s;
            if den.abs() < 1e-6 * s.powi(3) {
                // removable singularity at s = 2π
                return direct_radial_transform(|r| family.profile(r), s).max(0.0);
            }
            4.0 * (1.0 - s.cos()) / (den * den)
        }
        TaperFamily::Wendland0 => (2.0 * s - 3.0 * s.sin() + s * s.cos()) / (pi2 * s.powi(5)),
        TaperFamily::Wendland1 => {
            -60.0 * (-4.0 * s * s + (s * s - 24.0) * s.cos() - 9.0 * s * s.sin() + 24.0)
                / (pi2 * s.powi(8))
        }
        TaperFamily::Wendland2 => {
            6720.0
                * (8.0 * s * (s * s - 24.0)
                    + 9.0 * (35.0 - 2.0 * s * s) * s.sin()
                    + s * (s * s - 123.0) * s.cos())
                / (pi2 * s.powi(11))
        }
    };
    v.max(0.0)
}

fn compact_profile(family: TaperFamily) -> SpectralProfile {
    let (exp, smooth) = match family {
        TaperFamily::Spherical => (4.0, 0),
        TaperFamily::Cubic => (6.0, 2),
        TaperFamily::Penta => (8.0, 4),
        TaperFamily::Bohman => (6.0, 2),
        TaperFamily::Wendland0 => (4.0, 0),
        TaperFamily::Wendland1 => (6.0, 2),
        TaperFamily::Wendland2 => (8.0, 4),
    };
    SpectralProfile {
        decay: DecayClass::Polynomial(exp),
        smoothness: Smoothness::Finite(smooth),
    }
}

impl SpectralModel for Taper {
    fn unit_spectral_density(&self, s: f64) -> f64 {
        compact_density(self.family(), s)
    }

    fn length_scale(&self) -> f64 {
        self.theta()
    }

    fn spectral_profile(&self) -> SpectralProfile {
        compact_profile(self.family())
    }
}

impl SpectralModel for TaperFamily {
    fn unit_spectral_density(&self, s: f64) -> f64 {
        compact_density(*self, s)
    }

    fn length_scale(&self) -> f64 {
        1.0
    }

    fn spectral_profile(&self) -> SpectralProfile {
        compact_profile(*self)
    }
}

impl SpectralModel for CovarianceSpec {
    fn unit_spectral_density(&self, s: f64) -> f64 {
        let pi2 = PI * PI;
        match self.family() {
            CovFamily::Exponential => {
                let q = 1.0 + s * s;
                1.0 / (pi2 * q * q)
            }
            CovFamily::Gaussian => (-s * s / 4.0).exp() / (8.0 * PI.powf(1.5)),
            CovFamily::Spherical => compact_density(TaperFamily::Spherical, s),
            CovFamily::Cubic => compact_density(TaperFamily::Cubic, s),
            CovFamily::Penta => compact_density(TaperFamily::Penta, s),
            CovFamily::Matern { nu } => {
                (1.0 + s * s).powf(-nu - 1.5) * gamma(nu + 1.5) / (PI.powf(1.5) * gamma(nu))
            }
            CovFamily::Cauchy { alpha } => {
                let order = 1.5 - alpha;
                let norm = 2f64.powf(-alpha - 0.5) / (PI.powf(1.5) * gamma(alpha));
                if s == 0.0 {
                    // s^{α-3/2} K_{|α-3/2|}(s) → Γ(α-3/2) 2^{α-5/2} for α > 3/2
                    return if alpha > 1.5 {
                        norm * gamma(alpha - 1.5) * 2f64.powf(alpha - 2.5)
                    } else {
                        f64::INFINITY
                    };
                }
                match bessel_k(order, s) {
                    Ok(k) => norm * s.powf(alpha - 1.5) * k,
                    Err(_) => f64::NAN,
                }
            }
        }
    }

    fn length_scale(&self) -> f64 {
        self.range()
    }

    fn spectral_profile(&self) -> SpectralProfile {
        match self.family() {
            CovFamily::Exponential => SpectralProfile {
                decay: DecayClass::Polynomial(4.0),
                smoothness: Smoothness::Finite(0),
            },
            CovFamily::Gaussian => SpectralProfile {
                decay: DecayClass::GaussianRate,
                smoothness: Smoothness::Infinite,
            },
            CovFamily::Spherical => compact_profile(TaperFamily::Spherical),
            CovFamily::Cubic => compact_profile(TaperFamily::Cubic),
            CovFamily::Penta => compact_profile(TaperFamily::Penta),
            CovFamily::Matern { nu } => SpectralProfile {
                decay: DecayClass::Polynomial(2.0 * nu + 3.0),
                // tabulated as 2⌈ν - 1⌉, kept verbatim
                smoothness: Smoothness::Finite((2.0 * (nu - 1.0).ceil()).max(0.0) as u32),
            },
            CovFamily::Cauchy { .. } => SpectralProfile {
                decay: DecayClass::ExponentialRate,
                smoothness: Smoothness::Infinite,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TailVerdict {
    Yes,
    No,
    Unknown,
}

impl fmt::Display for TailVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TailVerdict::Yes => "yes",
            TailVerdict::No => "no",
            TailVerdict::Unknown => "unknown",
        })
    }
}

/// Qualitative tail-condition check for a covariance/taper pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub satisfied: TailVerdict,
    pub gamma_note: String,
    pub taper_decay: SpectralProfile,
    pub cov_decay: SpectralProfile,
}

/// Compares spectral decay classes of the covariance and the taper.
///
/// The limit `γ = lim f₁/f₀` is not computed: `f₁` is the spectral density
/// of the product `C₀·C_T`, a convolution that has no tabulated form.
pub fn tail_screen(cov: &CovarianceSpec, taper: &Taper) -> TailReport {
    let cov_decay = cov.spectral_profile();
    let taper_decay = taper.spectral_profile();
    let (satisfied, gamma_note) = match (cov_decay.decay, taper_decay.decay) {
        (DecayClass::ExponentialRate | DecayClass::GaussianRate, _) => (
            TailVerdict::No,
            format!(
                "covariance spectrum decays at {} rate; no compactly supported taper matches it",
                cov_decay.decay
            ),
        ),
        (DecayClass::Polynomial(c), DecayClass::Polynomial(t)) if t >= c => (
            TailVerdict::Yes,
            format!(
                "taper decays as s^-{t}, at least as fast as the covariance (s^-{c}); γ finite and positive"
            ),
        ),
        (DecayClass::Polynomial(c), DecayClass::Polynomial(t)) => (
            TailVerdict::No,
            format!("taper decays as s^-{t}, slower than the covariance (s^-{c})"),
        ),
        _ => (
            TailVerdict::Unknown,
            "taper decay class not comparable with the covariance".to_string(),
        ),
    };
    TailReport {
        satisfied,
        gamma_note,
        taper_decay,
        cov_decay,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(f: CovFamily) -> CovarianceSpec {
        CovarianceSpec::new(f, 1.0, 1.0).unwrap()
    }

    #[test]
    fn tabulated_values() {
        let e = unit(CovFamily::Exponential);
        assert!((spectral_density_r3(&e, 1.0) - 1.0 / (4.0 * PI * PI)).abs() < 1e-16);
        let g = unit(CovFamily::Gaussian);
        assert!((spectral_density_r3(&g, 0.0) - 1.0 / (8.0 * PI.powf(1.5))).abs() < 1e-16);
        // Matérn(1/2) is the exponential
        let m = unit(CovFamily::Matern { nu: 0.5 });
        for s in [0.0, 0.3, 2.0, 9.0] {
            let a = spectral_density_r3(&m, s);
            let b = spectral_density_r3(&e, s);
            assert!((a / b - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn compact_densities_continuous_across_switch() {
        for fam in TaperFamily::ALL {
            let below = direct_radial_transform(|r| fam.profile(r), DIRECT_TRANSFORM_BELOW);
            let above = fam.unit_spectral_density(DIRECT_TRANSFORM_BELOW);
            assert!(
                (below - above).abs() <= 1e-9 * below.abs().max(1e-12),
                "{fam}: {below} vs {above}"
            );
            // finite and non-negative at the origin
            let f0 = fam.unit_spectral_density(0.0);
            assert!(f0.is_finite() && f0 > 0.0);
        }
        // Bohman near its removable singularity
        let b = TaperFamily::Bohman;
        // mpmath quadrature of the radial transform
        let at = b.unit_spectral_density(2.0 * PI);
        assert!((at / 3.208_119_454_588_854_7e-4 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decay_exponents_hold() {
        // f(s) s^k bounded for the tabulated exponent k
        for fam in TaperFamily::ALL {
            let DecayClass::Polynomial(k) = fam.spectral_profile().decay else {
                unreachable!()
            };
            let mut worst: f64 = 0.0;
            let mut s = 50.0;
            while s < 5000.0 {
                worst = worst.max(fam.unit_spectral_density(s) * s.powf(k));
                s *= 1.07;
            }
            assert!(worst.is_finite() && worst < 1e4, "{fam}: {worst}");
            // and not faster: the envelope stays away from zero
            let peak = (0..2000)
                .map(|i| {
                    let s = 1000.0 + i as f64 * 0.01;
                    fam.unit_spectral_density(s) * s.powf(k)
                })
                .fold(0.0, f64::max);
            assert!(peak > 1e-6, "{fam}: decays faster than s^-{k}");
        }
    }

    #[test]
    fn smoothness_metadata_matches_tables() {
        let expect = [
            (TaperFamily::Spherical, 0, 4.0),
            (TaperFamily::Cubic, 2, 6.0),
            (TaperFamily::Penta, 4, 8.0),
            (TaperFamily::Bohman, 2, 6.0),
            (TaperFamily::Wendland0, 0, 4.0),
            (TaperFamily::Wendland1, 2, 6.0),
            (TaperFamily::Wendland2, 4, 8.0),
        ];
        for (fam, smooth, exp) in expect {
            let p = fam.spectral_profile();
            assert_eq!(p.smoothness, Smoothness::Finite(smooth));
            assert_eq!(p.decay, DecayClass::Polynomial(exp));
        }
        let p = unit(CovFamily::Exponential).spectral_profile();
        assert_eq!((p.smoothness, p.decay), (Smoothness::Finite(0), DecayClass::Polynomial(4.0)));
        let p = unit(CovFamily::Gaussian).spectral_profile();
        assert_eq!((p.smoothness, p.decay), (Smoothness::Infinite, DecayClass::GaussianRate));
        let p = unit(CovFamily::Cauchy { alpha: 0.5 }).spectral_profile();
        assert_eq!((p.smoothness, p.decay), (Smoothness::Infinite, DecayClass::ExponentialRate));
        let p = unit(CovFamily::Matern { nu: 1.0 }).spectral_profile();
        assert_eq!((p.smoothness, p.decay), (Smoothness::Finite(0), DecayClass::Polynomial(5.0)));
        let p = unit(CovFamily::Matern { nu: 2.5 }).spectral_profile();
        assert_eq!((p.smoothness, p.decay), (Smoothness::Finite(4), DecayClass::Polynomial(8.0)));
    }

    fn recover_correlation(model: &impl SpectralModel, r: f64, s_max: f64) -> f64 {
        // 4π ∫ f(s) s² sin(sr)/(sr) ds by composite Simpson
        let n = 400_000;
        let h = s_max / n as f64;
        let g = |s: f64| {
            if s == 0.0 {
                0.0
            } else {
                model.unit_spectral_density(s) * s * (s * r).sin() / r
            }
        };
        let mut acc = g(0.0) + g(s_max);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
        }
        4.0 * PI * acc * h / 3.0
    }

    #[test]
    fn densities_invert_to_correlations() {
        let e = unit(CovFamily::Exponential);
        let sph = TaperFamily::Spherical;
        for r in [0.1, 0.5, 1.0] {
            let got = recover_correlation(&e, r, 2000.0);
            assert!((got - (-r as f64).exp()).abs() < 1e-3, "exp r={r}: {got}");
            let got = recover_correlation(&sph, r, 2000.0);
            assert!((got - sph.profile(r)).abs() < 1e-3, "sph r={r}: {got}");
        }
    }

    #[test]
    fn scaled_density() {
        let e = CovarianceSpec::exponential(1.0, 2.0).unwrap();
        let want = 8.0 * unit(CovFamily::Exponential).unit_spectral_density(1.0);
        assert!((spectral_density_scaled(&e, 0.5) - want).abs() < 1e-16);
    }

    #[test]
    fn tail_screen_cases() {
        let sph = Taper::new(TaperFamily::Spherical, 1.0).unwrap();
        let w0 = Taper::new(TaperFamily::Wendland0, 1.0).unwrap();
        let penta = Taper::new(TaperFamily::Penta, 1.0).unwrap();
        assert_eq!(tail_screen(&unit(CovFamily::Exponential), &sph).satisfied, TailVerdict::Yes);
        assert_eq!(tail_screen(&unit(CovFamily::Exponential), &w0).satisfied, TailVerdict::Yes);
        assert_eq!(tail_screen(&unit(CovFamily::Gaussian), &penta).satisfied, TailVerdict::No);
        assert_eq!(
            tail_screen(&unit(CovFamily::Cauchy { alpha: 1.0 }), &penta).satisfied,
            TailVerdict::No
        );
        let rep = tail_screen(&unit(CovFamily::Matern { nu: 1.0 }), &sph);
        assert_eq!(rep.satisfied, TailVerdict::No);
        assert!(rep.gamma_note.contains("slower"));
    }
}
