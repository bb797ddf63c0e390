//! Spatial quantities: element layout, apertures, distances, angles, and
//! field-region classification.
//!
//! The RIS is a uniform linear array along the y-axis, centered on `p_ris`,
//! with the BS feed antenna on its negative x side at distance `d_c`. Angles
//! are measured from the +y axis toward +x, so a user on the x-axis sits at
//! θ = π/2 and a broadside user at θ = 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Propagation speed used everywhere, m/s. The conventional rounded value,
/// not the CODATA one; wavelengths and delays are defined against it.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Field region of a user relative to the array aperture.
///
/// Ordered from nearest to farthest so that region indices are monotone in
/// range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    ReactiveNear,
    FresnelNear,
    Far,
}

/// Immutable array geometry: element count and spacing, carrier, feed
/// distance, and anchor positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemGeometry {
    m: usize,
    delta: f64,
    lambda: f64,
    f_c: f64,
    d_c: f64,
    p_ris: [f64; 2],
    p_bs: [f64; 2],
}

impl SystemGeometry {
    /// Builds a validated geometry. `delta`, `d_c` in meters, `f_c` in Hz;
    /// the wavelength is derived from `f_c` and the BS position from
    /// `p_ris` and `d_c` (feed on the negative x side).
    pub fn new(m: usize, delta: f64, f_c: f64, d_c: f64, p_ris: [f64; 2]) -> Result<Self> {
        if m < 2 {
            return Err(Error::validation(format!("element count M must be >= 2, got {m}")));
        }
        if !(delta > 0.0) {
            return Err(Error::validation(format!("element spacing must be positive, got {delta}")));
        }
        if !(f_c > 0.0) {
            return Err(Error::validation(format!("carrier frequency must be positive, got {f_c}")));
        }
        if !(d_c > 0.0) {
            return Err(Error::validation(format!("feed distance d_c must be positive, got {d_c}")));
        }
        let lambda = SPEED_OF_LIGHT / f_c;
        let p_bs = [p_ris[0] - d_c, p_ris[1]];
        Ok(Self { m, delta, lambda, f_c, d_c, p_ris, p_bs })
    }

    /// The default simulation geometry: M = 101 half-wavelength-spaced
    /// cells at 28 GHz with the feed half a wavelength behind the array
    /// center at the origin.
    pub fn standard() -> Self {
        let lambda = SPEED_OF_LIGHT / 28.0e9;
        Self::new(101, lambda / 2.0, 28.0e9, 0.5 * lambda, [0.0, 0.0])
            .expect("standard geometry is valid")
    }

    /// Same as [`standard`](Self::standard) but with the feed at `k`
    /// wavelengths from the array center.
    pub fn standard_with_dc_lambda(k: f64) -> Result<Self> {
        let lambda = SPEED_OF_LIGHT / 28.0e9;
        Self::new(101, lambda / 2.0, 28.0e9, k * lambda, [0.0, 0.0])
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn f_c(&self) -> f64 {
        self.f_c
    }

    pub fn d_c(&self) -> f64 {
        self.d_c
    }

    pub fn p_ris(&self) -> [f64; 2] {
        self.p_ris
    }

    pub fn p_bs(&self) -> [f64; 2] {
        self.p_bs
    }

    /// Array aperture D = (M − 1)·δ.
    pub fn aperture(&self) -> f64 {
        (self.m as f64 - 1.0) * self.delta
    }

    /// Signed element index y_m = m − (M+1)/2 for the 1-based cell `m`;
    /// half-integer for even M, integer for odd M, zero at the center.
    pub fn y_m(&self, m: usize) -> f64 {
        m as f64 - (self.m as f64 + 1.0) / 2.0
    }

    /// Position of the 1-based cell `m`, on the array line through `p_ris`.
    pub fn cell_position(&self, m: usize) -> Result<[f64; 2]> {
        if m < 1 || m > self.m {
            return Err(Error::validation(format!(
                "cell index {m} out of range 1..={}",
                self.m
            )));
        }
        Ok([self.p_ris[0], self.p_ris[1] + self.y_m(m) * self.delta])
    }

    /// Distance from the BS feed antenna to cell `m`:
    /// d_m = sqrt(d_c² + y_m²δ²).
    pub fn feed_distance(&self, m: usize) -> f64 {
        let y = self.y_m(m) * self.delta;
        (self.d_c * self.d_c + y * y).sqrt()
    }

    /// Fresnel-region boundaries `(0.62·sqrt(D³/λ), 2·D²/λ)` in meters.
    pub fn fresnel_bounds(&self) -> (f64, f64) {
        let d = self.aperture();
        let lower = 0.62 * (d.powi(3) / self.lambda).sqrt();
        let upper = 2.0 * d * d / self.lambda;
        (lower, upper)
    }

    /// Classifies a range. Boundary values go to the nearer-field class
    /// (the near-field model is the universally valid one).
    pub fn classify_region(&self, r: f64) -> Result<Region> {
        if !(r > 0.0) {
            return Err(Error::validation(format!("range must be positive, got {r}")));
        }
        let (lower, upper) = self.fresnel_bounds();
        Ok(if r <= lower {
            Region::ReactiveNear
        } else if r <= upper {
            Region::FresnelNear
        } else {
            Region::Far
        })
    }

    /// Polar coordinates of a user position relative to the RIS center.
    ///
    /// θ = atan2(Δx, Δy) is the exact inverse of [`ue_position`]
    /// (Self::ue_position) over the whole plane and agrees with the
    /// arcsin(Δx/r) convention wherever y ≥ y_ris. Codebook sweeps use the
    /// x ≥ 0 half, where θ ∈ [0, π]; the channel model is even in θ, so
    /// mirrored positions are physically indistinguishable.
    pub fn ue_polar(&self, p_ue: [f64; 2]) -> Result<PolarPosition> {
        let dx = p_ue[0] - self.p_ris[0];
        let dy = p_ue[1] - self.p_ris[1];
        let r = dx.hypot(dy);
        if r < 1e-12 {
            return Err(Error::validation(
                "user position coincides with the RIS center".to_string(),
            ));
        }
        PolarPosition::new(r, dx.atan2(dy))
    }

    /// Inverse of [`ue_polar`](Self::ue_polar):
    /// p = p_ris + (r·sin θ, r·cos θ).
    pub fn ue_position(&self, polar: &PolarPosition) -> [f64; 2] {
        [
            self.p_ris[0] + polar.r() * polar.theta().sin(),
            self.p_ris[1] + polar.r() * polar.theta().cos(),
        ]
    }
}

/// Range/angle pair locating a user relative to the RIS center.
///
/// The canonical sweeping domain is θ ∈ [0, π] (the x ≥ 0 half-plane);
/// negative angles denote mirrored positions and carry identical physics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPosition {
    r: f64,
    theta: f64,
}

impl PolarPosition {
    /// Validates r > 0 and θ ∈ [−π, π].
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::validation(format!("range must be positive, got {r}")));
        }
        if !(-std::f64::consts::PI..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::validation(format!(
                "angle must lie in [-pi, pi], got {theta}"
            )));
        }
        Ok(Self { r, theta })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}
