//! Channel models: the BS→RIS transmission vector and the RIS→UE channels
//! with their steering vectors.
//!
//! The feed-to-array link is always in the radiating near field of the
//! aperture (the feed sits a few wavelengths away), so it uses a
//! Rayleigh–Sommerfeld diffraction model. The array→user link is either a
//! spherical-wavefront (near-field) or planar-wavefront (far-field)
//! line-of-sight channel.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Region, SystemGeometry, SPEED_OF_LIGHT};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// BS→RIS channel vector for one subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionVector {
    entries: DVector<Complex64>,
    subcarrier_index: i32,
}

impl TransmissionVector {
    pub fn entries(&self) -> &DVector<Complex64> {
        &self.entries
    }

    pub fn subcarrier_index(&self) -> i32 {
        self.subcarrier_index
    }

    pub fn norm(&self) -> f64 {
        self.entries.norm()
    }
}

/// Unit-norm array response vector; every entry has magnitude 1/√M.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    entries: DVector<Complex64>,
}

impl SteeringVector {
    pub fn entries(&self) -> &DVector<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DVector<Complex64> {
        self.entries
    }
}

/// Scalar channel gain β with |β| = λ/(4πr).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexGain {
    pub value: Complex64,
}

/// Rayleigh–Sommerfeld feed→cell coefficient vector for subcarrier `n`.
///
/// Entry m is (A·cos χ_m/d_m)·(1/(2π d_m) − j/λ)·exp(j·2π·d_m·(1/λ − nΔ_f/c))
/// with element area A = (λ/2)², feed distance d_m and obliquity
/// cos χ_m = d_c/d_m measured from the array normal.
pub fn bs_ris_channel(geom: &SystemGeometry, n: i32, delta_f: f64) -> Result<TransmissionVector> {
    if !(delta_f > 0.0) {
        return Err(Error::validation(format!(
            "subcarrier spacing must be positive, got {delta_f}"
        )));
    }
    let area = (geom.lambda() / 2.0) * (geom.lambda() / 2.0);
    let lam = geom.lambda();
    let entries = DVector::from_fn(geom.m(), |i, _| {
        let d_m = geom.feed_distance(i + 1);
        let cos_chi = geom.d_c() / d_m;
        let amplitude = area * cos_chi / d_m;
        let kernel = Complex64::new(1.0 / (TWO_PI * d_m), -1.0 / lam);
        let phase = TWO_PI * d_m * (1.0 / lam - n as f64 * delta_f / SPEED_OF_LIGHT);
        amplitude * kernel * Complex64::cis(phase)
    });
    Ok(TransmissionVector { entries, subcarrier_index: n })
}

/// Distance from the user at (r, θ) to cell m: the spherical-wavefront
/// range r_m = sqrt(r² + y_m²δ² − 2·r·y_m·δ·cos θ). θ is measured from the
/// y-axis, which is why cos θ pairs with the y-offset.
pub fn cell_range(geom: &SystemGeometry, r: f64, theta: f64, m: usize) -> f64 {
    let y = geom.y_m(m) * geom.delta();
    (r * r + y * y - 2.0 * r * y * theta.cos()).sqrt()
}

/// Near-field steering vector: entry m = (1/√M)·exp(−j(2π/λ)(r_m − r)).
pub fn nf_steering(geom: &SystemGeometry, r: f64, theta: f64) -> Result<SteeringVector> {
    if !(r > 0.0) {
        return Err(Error::validation(format!("range must be positive, got {r}")));
    }
    let scale = 1.0 / (geom.m() as f64).sqrt();
    let k = TWO_PI / geom.lambda();
    let entries = DVector::from_fn(geom.m(), |i, _| {
        let r_m = cell_range(geom, r, theta, i + 1);
        scale * Complex64::cis(-k * (r_m - r))
    });
    Ok(SteeringVector { entries })
}

/// Far-field steering vector: entry m = (1/√M)·exp(+j·2π(m−1)(δ/λ)cos θ).
/// Note the phase sign is opposite to the near-field convention; the global
/// phase is absorbed into β and cannot affect any bound.
pub fn ff_steering(geom: &SystemGeometry, theta: f64) -> SteeringVector {
    let scale = 1.0 / (geom.m() as f64).sqrt();
    let step = TWO_PI * geom.delta() / geom.lambda() * theta.cos();
    let entries =
        DVector::from_fn(geom.m(), |i, _| scale * Complex64::cis(i as f64 * step));
    SteeringVector { entries }
}

/// Near-field user channel: h₁ = β₁·a₁ᴴ(r, θ) with
/// β₁ = λ/(4πr)·exp(−j2πr/λ). Returns the conjugated steering vector as a
/// column (so `h·ζ` is `h.dot`-style `aᴴζ` scaled by β) plus the gain.
///
/// Ranges outside the Fresnel window are allowed (the model is universal)
/// but logged as a warning.
pub fn nf_channel(
    geom: &SystemGeometry,
    r: f64,
    theta: f64,
) -> Result<(DVector<Complex64>, ComplexGain)> {
    let region = geom.classify_region(r)?;
    if region != Region::FresnelNear {
        log::warn!(
            "near-field channel evaluated at r = {r} m, outside the Fresnel window {:?}",
            geom.fresnel_bounds()
        );
    }
    let beta = ComplexGain {
        value: geom.lambda() / (4.0 * std::f64::consts::PI * r)
            * Complex64::cis(-TWO_PI * r / geom.lambda()),
    };
    let a = nf_steering(geom, r, theta)?;
    let h = a.entries().map(|z| z.conj()) * beta.value;
    Ok((h, beta))
}

/// Far-field user channel for subcarrier `n`:
/// h₂[n] = β₂·exp(−j2πτnΔ_f)·a₂ᴴ(θ) with β₂ = λ/(4πr)·exp(jφ) and the
/// time of arrival τ = r/c. Returns (h row as a conjugated column, β₂, τ).
pub fn ff_channel(
    geom: &SystemGeometry,
    n: i32,
    delta_f: f64,
    r: f64,
    theta: f64,
    phi: f64,
) -> Result<(DVector<Complex64>, ComplexGain, f64)> {
    if !(r > 0.0) {
        return Err(Error::validation(format!("range must be positive, got {r}")));
    }
    if !(delta_f > 0.0) {
        return Err(Error::validation(format!(
            "subcarrier spacing must be positive, got {delta_f}"
        )));
    }
    let tau = r / SPEED_OF_LIGHT;
    let beta = ComplexGain {
        value: geom.lambda() / (4.0 * std::f64::consts::PI * r) * Complex64::cis(phi),
    };
    let subcarrier_phase = Complex64::cis(-TWO_PI * tau * n as f64 * delta_f);
    let a = ff_steering(geom, theta);
    let h = a.entries().map(|z| z.conj()) * (beta.value * subcarrier_phase);
    Ok((h, beta, tau))
}
