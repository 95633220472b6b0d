//! A-priori sparsity of tapered covariance matrices.
//!
//! Distances are normalized to a ball of radius one with the same measure as
//! the sampling domain, so a taper range `θ` in normalized units lies in
//! `[0, 2]`.

use serde::Serialize;

use crate::covmodel::{tail_screen, CovarianceSpec, Taper, TailReport};
use crate::error::{Error, Result};
use crate::field::BoxDomain;
use crate::specfun::regularized_inc_beta;

/// Volume of the unit ball in ℝ^dim.
fn unit_ball_measure(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI / 3.0,
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::invalid(format!("dimension must be 1, 2 or 3 (got {dim})")))
    }
}

/// CDF of the distance between two independent uniform points in the unit
/// ball of ℝ^dim:
///
/// `F_d(r) = r^d I_{1-r²/4}((d+1)/2, 1/2) + I_{r²/4}((d+1)/2, (d+1)/2)`.
///
/// `r` is clamped to `[0, 2]`.
pub fn distance_cdf(dim: usize, r: f64) -> Result<f64> {
    check_dim(dim)?;
    if r.is_nan() {
        return Err(Error::invalid("distance is NaN"));
    }
    if r <= 0.0 {
        return Ok(0.0);
    }
    if r >= 2.0 {
        return Ok(1.0);
    }
    let a = (dim as f64 + 1.0) / 2.0;
    let q = r * r / 4.0;
    let v = r.powi(dim as i32) * regularized_inc_beta(1.0 - q, a, 0.5)? + regularized_inc_beta(q, a, a)?;
    Ok(v.clamp(0.0, 1.0))
}

/// Expected fraction of zero entries `S(θ) = 1 - F_d(θ) - (1 - F_d(θ))/n`
/// in an `n × n` matrix tapered at normalized range `θ`.
pub fn sparsity_index(theta_norm: f64, n: usize, dim: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let f = distance_cdf(dim, theta_norm)?;
    Ok(1.0 - f - (1.0 - f) / n as f64)
}

/// Taper range expressed relative to the radius of the ball with the same
/// measure as `domain`.
///
/// 1D: `2 d_t / ℓ`; 2D: `d_t √π / √(ab)`; 3D: `d_t (4π/3)^{1/3} / (abc)^{1/3}`.
pub fn equivalent_theta(taper_range: f64, domain: &BoxDomain) -> Result<f64> {
    if !(taper_range > 0.0) || !taper_range.is_finite() {
        return Err(Error::invalid(format!("taper range must be positive (got {taper_range})")));
    }
    let d = domain.dim();
    let radius = (domain.measure() / unit_ball_measure(d)).powf(1.0 / d as f64);
    Ok(taper_range / radius)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparsityForecast {
    pub theta_norm: f64,
    pub n: usize,
    pub dim: usize,
    pub cdf: f64,
    pub index: f64,
}

pub fn forecast(taper: &Taper, domain: &BoxDomain, n: usize) -> Result<SparsityForecast> {
    let dim = domain.dim();
    let theta_norm = equivalent_theta(taper.theta(), domain)?;
    let cdf = distance_cdf(dim, theta_norm)?;
    let index = sparsity_index(theta_norm, n, dim)?;
    Ok(SparsityForecast {
        theta_norm,
        n,
        dim,
        cdf,
        index,
    })
}

/// Sparsity forecast together with the spectral tail screen of the pair.
#[derive(Debug, Clone)]
pub struct ForecastReport {
    pub forecast: SparsityForecast,
    pub tail: TailReport,
}

pub fn forecast_report(
    cov: &CovarianceSpec,
    taper: &Taper,
    domain: &BoxDomain,
    n: usize,
) -> Result<ForecastReport> {
    Ok(ForecastReport {
        forecast: forecast(taper, domain, n)?,
        tail: tail_screen(cov, taper),
    })
}
