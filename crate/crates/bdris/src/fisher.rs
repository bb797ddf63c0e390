//! Fisher information, channel-parameter CRLBs and the position error bound.
//!
//! The pilot protocol sends one symbol per codebook entry t and subcarrier n,
//! so the noiseless observation is μ[t,n] = β·e^{−j2πτnΔ_f}·aᴴζ_t[n] with
//! ζ_t[n] the effective transmit vector of that slot. The channel-parameter
//! FIM is F = (2P/σ²)·Σ_{t,n} Re{∂μ·∂μᴴ} over the four real parameters
//! (r or τ, ϑ, Re β, Im β); the position-domain bound follows by a Jacobian
//! congruence and the PEB is the root trace of the position block of its
//! inverse.
//!
//! All linear-algebra guards work on the Jacobi-equilibrated matrix
//! D·F·D with D = diag(F)^{−1/2}, which removes the unit-induced scale
//! disparity between parameters (seconds vs radians) that otherwise inflates
//! raw condition numbers past any useful threshold.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::channel::{bs_ris_channel, cell_range, ff_steering, nf_steering};
use crate::codebook::{Architecture, Codebook, Codeword, Scenario};
use crate::error::{Error, Result};
use crate::geometry::{PolarPosition, SystemGeometry, SPEED_OF_LIGHT};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Maximum acceptable condition number of an equilibrated matrix before
/// its inversion is refused as numerically meaningless.
pub const CONDITION_LIMIT: f64 = 1e14;

/// Relative diagonal threshold below which a parameter is treated as
/// structurally absent from a FIM (no information at all).
const DEAD_PARAM_REL: f64 = 1e-18;

/// Far-field steering derivative variant. `SinTheta` is the analytically
/// and numerically verified form dȧ₂/dϑ ∝ −sin ϑ; `CosThetaAsPrinted`
/// reproduces a commonly printed cos ϑ variant for comparison only (its
/// derivative disagrees with finite differences of a₂ by design).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FfThetaMode {
    #[default]
    SinTheta,
    CosThetaAsPrinted,
}

impl FfThetaMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sin" | "sin-theta" => Ok(FfThetaMode::SinTheta),
            "cos-as-printed" | "cos" => Ok(FfThetaMode::CosThetaAsPrinted),
            other => Err(Error::validation(format!(
                "unknown ff theta mode '{other}' (expected sin-theta or cos-as-printed)"
            ))),
        }
    }
}

/// Sign convention for the azimuth row of the position Jacobian. The UE
/// azimuth produced by [`SystemGeometry::ue_polar`] grows from the +y axis
/// toward +x, giving ∂ϑ/∂x = +Δy/r²; the opposite convention flips that
/// row. Either pairs consistently with a FIM computed in its own
/// convention and both yield the same positional bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaSign {
    FromYTowardX,
    FromYTowardNegX,
}

/// Pilot-protocol configuration: transmit power and noise in linear mW,
/// the subcarrier count and spacing, and far-field modelling switches.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PilotConfig {
    pub power_mw: f64,
    pub noise_mw: f64,
    pub n_subcarriers: usize,
    pub delta_f: f64,
    pub ff_theta_mode: FfThetaMode,
    /// Global phase of the far-field gain β₂ (the near-field phase is
    /// fixed by the range). The bound is invariant to it.
    pub ff_phase: f64,
}

impl PilotConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.power_mw > 0.0) {
            return Err(Error::validation(format!(
                "transmit power must be positive, got {} mW",
                self.power_mw
            )));
        }
        if !(self.noise_mw > 0.0) {
            return Err(Error::validation(format!(
                "noise power must be positive, got {} mW",
                self.noise_mw
            )));
        }
        if self.n_subcarriers == 0 || self.n_subcarriers.is_multiple_of(2) {
            return Err(Error::validation(format!(
                "subcarrier count must be odd and positive, got {}",
                self.n_subcarriers
            )));
        }
        if !(self.delta_f > 0.0) {
            return Err(Error::validation(format!(
                "subcarrier spacing must be positive, got {} Hz",
                self.delta_f
            )));
        }
        Ok(())
    }
}

/// The four real channel parameters of one scenario, in estimation order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelParams {
    scenario: Scenario,
    values: [f64; 4],
}

impl ChannelParams {
    /// Near-field parameters (r, ϑ, Re β, Im β).
    pub fn nf(r: f64, theta: f64, beta: Complex64) -> Self {
        Self { scenario: Scenario::NearField, values: [r, theta, beta.re, beta.im] }
    }

    /// Far-field parameters (τ, ϑ, Re β, Im β).
    pub fn ff(tau: f64, theta: f64, beta: Complex64) -> Self {
        Self { scenario: Scenario::FarField, values: [tau, theta, beta.re, beta.im] }
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn values(&self) -> [f64; 4] {
        self.values
    }

    pub fn names(&self) -> [&'static str; 4] {
        match self.scenario {
            Scenario::NearField => ["r", "theta", "re_beta", "im_beta"],
            Scenario::FarField => ["tau", "theta", "re_beta", "im_beta"],
        }
    }
}

/// Everything the bound pipeline produces for one UE position: the
/// channel-domain FIM and CRLBs, the Jacobian actually used (azimuth row
/// in the `FromYTowardX` convention matching [`SystemGeometry::ue_polar`]),
/// the position-domain FIM and the PEB. Unbounded entries (a parameter
/// carrying no information) hold +∞, which JSON renders as null.
#[derive(Debug, Clone, Serialize)]
pub struct FisherReport {
    pub scenario: Scenario,
    pub architecture: Architecture,
    pub parameter_names: Vec<String>,
    pub parameter_values: Vec<f64>,
    pub fim_channel: DMatrix<f64>,
    pub crlb: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub fim_positional: DMatrix<f64>,
    pub peb: f64,
}

/// Effective transmit vector of one codebook slot at the center
/// subcarrier input `g`: Ω·g for the RIS architectures, the precoder
/// itself for the active array (which bypasses the feed channel).
pub fn effective_vector(codeword: &Codeword, g: &DVector<Complex64>) -> DVector<Complex64> {
    match codeword {
        Codeword::Matrix(psm) => psm.omega() * g,
        Codeword::Vector(f) => f.clone(),
    }
}

/// M×T matrix whose column t is the effective vector of slot t at the
/// center subcarrier. Reusable across UE positions of a sweep.
pub fn effective_matrix(geom: &SystemGeometry, codebook: &Codebook) -> Result<DMatrix<Complex64>> {
    let g0 = bs_ris_channel(geom, 0, 1.0)?;
    let m = geom.m();
    let mut zc = DMatrix::<Complex64>::zeros(m, codebook.len());
    for (t, word) in codebook.entries.iter().enumerate() {
        zc.set_column(t, &effective_vector(word, g0.entries()));
    }
    Ok(zc)
}

/// Near-field complex gain β = λ/(4πr)·e^(−j2πr/λ).
pub fn nf_gain(geom: &SystemGeometry, r: f64) -> Complex64 {
    geom.lambda() / (4.0 * std::f64::consts::PI * r) * Complex64::cis(-TWO_PI * r / geom.lambda())
}

/// Far-field complex gain β = λ/(4πr)·e^(jφ) with the phase treated as a
/// free parameter.
pub fn ff_gain(geom: &SystemGeometry, r: f64, phi: f64) -> Complex64 {
    geom.lambda() / (4.0 * std::f64::consts::PI * r) * Complex64::cis(phi)
}

/// Radial and azimuthal phase-derivative factors of the near-field
/// steering vector: entry m of ∂a₁/∂x is `factor_x[m]·a₁[m]`.
pub fn nf_derivative_factors(
    geom: &SystemGeometry,
    r: f64,
    theta: f64,
) -> (DVector<Complex64>, DVector<Complex64>) {
    let m = geom.m();
    let k = TWO_PI / geom.lambda();
    let (sin_t, cos_t) = theta.sin_cos();
    let mut d_r = DVector::<Complex64>::zeros(m);
    let mut d_theta = DVector::<Complex64>::zeros(m);
    for idx in 0..m {
        let y = geom.y_m(idx + 1) * geom.delta();
        let r_m = cell_range(geom, r, theta, idx + 1);
        d_r[idx] = Complex64::new(0.0, -k * ((r - y * cos_t) / r_m - 1.0));
        d_theta[idx] = Complex64::new(0.0, -k * (r * y * sin_t) / r_m);
    }
    (d_r, d_theta)
}

/// Azimuthal derivative of the far-field steering vector as entrywise
/// factors: ∂a₂/∂ϑ = factor ⊙ a₂.
pub fn ff_theta_factor(
    geom: &SystemGeometry,
    theta: f64,
    mode: FfThetaMode,
) -> DVector<Complex64> {
    let m = geom.m();
    let trig = match mode {
        FfThetaMode::SinTheta => theta.sin(),
        FfThetaMode::CosThetaAsPrinted => theta.cos(),
    };
    let scale = -TWO_PI * geom.delta() / geom.lambda() * trig;
    DVector::from_fn(m, |i, _| Complex64::new(0.0, scale * i as f64))
}

fn accumulate_outer(f: &mut [[f64; 4]; 4], v: &[Complex64; 4]) {
    for i in 0..4 {
        for j in 0..4 {
            f[i][j] += (v[i] * v[j].conj()).re;
        }
    }
}

fn finish_fim(acc: [[f64; 4]; 4], power_mw: f64, noise_mw: f64) -> DMatrix<f64> {
    let scale = 2.0 * power_mw / noise_mw;
    DMatrix::from_fn(4, 4, |i, j| scale * acc[i][j])
}

/// Near-field channel-parameter FIM from a precomputed effective matrix
/// (column t = ζ_t). Narrowband: exactly one subcarrier.
pub fn nf_fim_from_effective(
    geom: &SystemGeometry,
    zc: &DMatrix<Complex64>,
    polar: &PolarPosition,
    cfg: &PilotConfig,
) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    if cfg.n_subcarriers != 1 {
        return Err(Error::validation(format!(
            "the near-field scenario is narrowband (one subcarrier), got {}",
            cfg.n_subcarriers
        )));
    }
    let (r, theta) = (polar.r(), polar.theta());
    let av = nf_steering(geom, r, theta)?.into_entries();
    let (d_r, d_theta) = nf_derivative_factors(geom, r, theta);
    let beta = nf_gain(geom, r);
    let a_r = av.zip_map(&d_r, |a, d| a * d);
    let a_theta = av.zip_map(&d_theta, |a, d| a * d);

    let mut acc = [[0.0_f64; 4]; 4];
    for t in 0..zc.ncols() {
        let zeta = zc.column(t);
        let m0 = av.dotc(&zeta);
        let v = [
            beta * a_r.dotc(&zeta),
            beta * a_theta.dotc(&zeta),
            m0,
            Complex64::new(0.0, 1.0) * m0,
        ];
        accumulate_outer(&mut acc, &v);
    }
    Ok(finish_fim(acc, cfg.power_mw, cfg.noise_mw))
}

/// Far-field channel-parameter FIM at one UE position, summed over all
/// codebook slots and subcarriers n ∈ {−(N−1)/2, …, (N−1)/2} in that
/// order. The common unit-modulus factor e^{−j2πτnΔ_f} of all four
/// derivatives cancels from the products and is omitted.
pub fn ff_fim_at(
    geom: &SystemGeometry,
    codebook: &Codebook,
    polar: &PolarPosition,
    cfg: &PilotConfig,
) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    let (r, theta) = (polar.r(), polar.theta());
    let av = ff_steering(geom, theta).into_entries();
    let avd = av.zip_map(&ff_theta_factor(geom, theta, cfg.ff_theta_mode), |a, d| a * d);
    let beta = ff_gain(geom, r, cfg.ff_phase);
    let half = (cfg.n_subcarriers as i32 - 1) / 2;

    let g0 = bs_ris_channel(geom, 0, cfg.delta_f)?;
    let m = geom.m();
    let ramps: Vec<f64> = (0..m)
        .map(|idx| -TWO_PI * geom.feed_distance(idx + 1) * cfg.delta_f / SPEED_OF_LIGHT)
        .collect();

    let mut acc = [[0.0_f64; 4]; 4];
    for word in codebook.entries.iter() {
        // row weights avᴴΩ resp. ȧᴴΩ, stored conjugated for dotc
        let (c0, c1, aaa_scalars) = match word {
            Codeword::Matrix(psm) => {
                let omega = psm.omega();
                (Some(omega.ad_mul(&av)), Some(omega.ad_mul(&avd)), None)
            }
            Codeword::Vector(f) => (None, None, Some((av.dotc(f), avd.dotc(f)))),
        };
        for n in -half..=half {
            let (w, wd) = match (&c0, &c1, &aaa_scalars) {
                (Some(c0), Some(c1), _) => {
                    let gn = DVector::from_fn(m, |idx, _| {
                        g0.entries()[idx] * Complex64::cis(ramps[idx] * n as f64)
                    });
                    (c0.dotc(&gn), c1.dotc(&gn))
                }
                (_, _, Some((w, wd))) => (*w, *wd),
                _ => unreachable!(),
            };
            let tau_factor = Complex64::new(0.0, -TWO_PI * n as f64 * cfg.delta_f);
            let v = [tau_factor * beta * w, beta * wd, w, Complex64::new(0.0, 1.0) * w];
            accumulate_outer(&mut acc, &v);
        }
    }
    Ok(finish_fim(acc, cfg.power_mw, cfg.noise_mw))
}

/// Channel-parameter FIM for one UE position under the codebook's
/// scenario.
pub fn fim_channel(
    geom: &SystemGeometry,
    codebook: &Codebook,
    p_ue: [f64; 2],
    cfg: &PilotConfig,
) -> Result<DMatrix<f64>> {
    let polar = geom.ue_polar(p_ue)?;
    match codebook.scenario {
        Scenario::NearField => {
            let zc = effective_matrix(geom, codebook)?;
            nf_fim_from_effective(geom, &zc, &polar, cfg)
        }
        Scenario::FarField => ff_fim_at(geom, codebook, &polar, cfg),
    }
}

/// Inverts a symmetric positive-definite matrix through Jacobi
/// equilibration, refusing matrices whose equilibrated condition number
/// exceeds [`CONDITION_LIMIT`]. `names` label the rows for error messages.
fn invert_spd(f: &DMatrix<f64>, names: &[&str]) -> Result<DMatrix<f64>> {
    let n = f.nrows();
    let mut scales = vec![0.0_f64; n];
    for i in 0..n {
        let d = f[(i, i)];
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::numerical(format!(
                "no invertible information matrix: diagonal entry for '{}' is {d}",
                names.get(i).unwrap_or(&"?")
            )));
        }
        scales[i] = 1.0 / d.sqrt();
    }
    let eq = DMatrix::from_fn(n, n, |i, j| f[(i, j)] * scales[i] * scales[j]);
    let eig = nalgebra::SymmetricEigen::new(eq);
    let lambda_max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let lambda_min = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    if !(lambda_min > 0.0) || lambda_max / lambda_min > CONDITION_LIMIT {
        let weak = eig.eigenvalues.imin();
        let direction = eig.eigenvectors.column(weak);
        let dominant = direction.iamax();
        return Err(Error::numerical(format!(
            "information matrix is numerically singular (equilibrated condition {:.3e}); \
             the near-null direction is dominated by '{}'",
            lambda_max / lambda_min.max(f64::MIN_POSITIVE),
            names.get(dominant).unwrap_or(&"?")
        )));
    }
    let mut inv_eq = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let vk = eig.eigenvectors.column(k);
        let w = 1.0 / eig.eigenvalues[k];
        for i in 0..n {
            for j in 0..n {
                inv_eq[(i, j)] += w * vk[i] * vk[j];
            }
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| inv_eq[(i, j)] * scales[i] * scales[j]))
}

const PARAM_NAMES: [&str; 4] = ["first", "theta", "re_beta", "im_beta"];

/// CRLB standard deviations η_ℓ = √([F⁻¹]_ℓℓ) of the four channel
/// parameters. Errors when any parameter carries no information; use
/// [`crlb_channel_reduced`] to tolerate structurally absent parameters.
pub fn crlb_channel(f: &DMatrix<f64>) -> Result<[f64; 4]> {
    if f.nrows() != 4 || f.ncols() != 4 {
        return Err(Error::validation(format!(
            "channel FIM must be 4x4, got {}x{}",
            f.nrows(),
            f.ncols()
        )));
    }
    let inv = invert_spd(f, &PARAM_NAMES)?;
    let mut eta = [0.0_f64; 4];
    for i in 0..4 {
        eta[i] = inv[(i, i)].sqrt();
    }
    Ok(eta)
}

/// CRLB standard deviations where parameters with (relatively) zero
/// diagonal information are excluded from the inversion and reported as
/// +∞, e.g. the delay on a single subcarrier.
pub fn crlb_channel_reduced(f: &DMatrix<f64>) -> Result<[f64; 4]> {
    if f.nrows() != 4 || f.ncols() != 4 {
        return Err(Error::validation(format!(
            "channel FIM must be 4x4, got {}x{}",
            f.nrows(),
            f.ncols()
        )));
    }
    let max_diag = (0..4).map(|i| f[(i, i)]).fold(0.0_f64, f64::max);
    if !(max_diag > 0.0) {
        return Err(Error::numerical(
            "information matrix has no positive diagonal entry".to_string(),
        ));
    }
    let alive: Vec<usize> = (0..4).filter(|&i| f[(i, i)] > DEAD_PARAM_REL * max_diag).collect();
    let sub_names: Vec<&str> = alive.iter().map(|&i| PARAM_NAMES[i]).collect();
    let sub = DMatrix::from_fn(alive.len(), alive.len(), |i, j| f[(alive[i], alive[j])]);
    let inv = invert_spd(&sub, &sub_names)?;
    let mut eta = [f64::INFINITY; 4];
    for (k, &i) in alive.iter().enumerate() {
        eta[i] = inv[(k, k)].sqrt();
    }
    Ok(eta)
}

/// Jacobian of the channel parameters with respect to the positional
/// parameters (x, y, Re β, Im β), azimuth row in the stated convention.
/// The first row converts range to meters directly (near field) or the
/// delay via 1/c (far field).
pub fn jacobian_with(
    scenario: Scenario,
    r: f64,
    theta: f64,
    sign: ThetaSign,
) -> Result<DMatrix<f64>> {
    if !(r > 0.0) {
        return Err(Error::validation(format!("range must be positive, got {r}")));
    }
    let dx = r * theta.sin();
    let dy = r * theta.cos();
    let first_scale = match scenario {
        Scenario::NearField => 1.0,
        Scenario::FarField => 1.0 / SPEED_OF_LIGHT,
    };
    let theta_sign = match sign {
        ThetaSign::FromYTowardX => 1.0,
        ThetaSign::FromYTowardNegX => -1.0,
    };
    let mut j = DMatrix::<f64>::zeros(4, 4);
    j[(0, 0)] = first_scale * dx / r;
    j[(0, 1)] = first_scale * dy / r;
    j[(1, 0)] = theta_sign * dy / (r * r);
    j[(1, 1)] = -theta_sign * dx / (r * r);
    j[(2, 2)] = 1.0;
    j[(3, 3)] = 1.0;
    Ok(j)
}

/// Jacobian in the convention with azimuth growing from +y toward −x
/// (∂ϑ/∂x = −Δy/r²). Pair it only with a FIM computed in the same
/// convention.
pub fn jacobian(scenario: Scenario, r: f64, theta: f64) -> Result<DMatrix<f64>> {
    jacobian_with(scenario, r, theta, ThetaSign::FromYTowardNegX)
}

/// Position-domain FIM F_po = Jᵀ·F_ch·J.
pub fn fim_positional(f_ch: &DMatrix<f64>, j: &DMatrix<f64>) -> DMatrix<f64> {
    j.transpose() * f_ch * j
}

/// Position error bound √tr([F_po⁻¹]₂ₓ₂) over the (x, y) block.
pub fn peb(f_po: &DMatrix<f64>) -> Result<f64> {
    let inv = invert_spd(f_po, &["x", "y", "re_beta", "im_beta"])?;
    Ok((inv[(0, 0)] + inv[(1, 1)]).sqrt())
}

/// Full bound pipeline for one UE position: FIM, reduced CRLBs, Jacobian
/// (ue_polar convention), positional FIM and PEB. The PEB is +∞ when a
/// positional direction carries no information (far field on a single
/// subcarrier).
pub fn fisher_report(
    geom: &SystemGeometry,
    codebook: &Codebook,
    p_ue: [f64; 2],
    cfg: &PilotConfig,
) -> Result<FisherReport> {
    let polar = geom.ue_polar(p_ue)?;
    let f_ch = fim_channel(geom, codebook, p_ue, cfg)?;
    let crlb = crlb_channel_reduced(&f_ch)?;
    let j = jacobian_with(codebook.scenario, polar.r(), polar.theta(), ThetaSign::FromYTowardX)?;
    let f_po = fim_positional(&f_ch, &j);
    let peb_value = if crlb.iter().all(|e| e.is_finite()) {
        peb(&f_po)?
    } else {
        f64::INFINITY
    };
    let params = match codebook.scenario {
        Scenario::NearField => ChannelParams::nf(polar.r(), polar.theta(), nf_gain(geom, polar.r())),
        Scenario::FarField => ChannelParams::ff(
            polar.r() / SPEED_OF_LIGHT,
            polar.theta(),
            ff_gain(geom, polar.r(), cfg.ff_phase),
        ),
    };
    Ok(FisherReport {
        scenario: codebook.scenario,
        architecture: codebook.architecture,
        parameter_names: params.names().iter().map(|s| s.to_string()).collect(),
        parameter_values: params.values().to_vec(),
        fim_channel: f_ch,
        crlb: crlb.to_vec(),
        jacobian: j,
        fim_positional: f_po,
        peb: peb_value,
    })
}

/// Noiseless observations μ[t,n] (T×N), including the carrier-offset
/// phase e^{−j2πτnΔ_f} in the far field.
pub fn noiseless_signal(
    geom: &SystemGeometry,
    codebook: &Codebook,
    p_ue: [f64; 2],
    cfg: &PilotConfig,
) -> Result<DMatrix<Complex64>> {
    cfg.validate()?;
    let polar = geom.ue_polar(p_ue)?;
    let (r, theta) = (polar.r(), polar.theta());
    match codebook.scenario {
        Scenario::NearField => {
            if cfg.n_subcarriers != 1 {
                return Err(Error::validation(format!(
                    "the near-field scenario is narrowband (one subcarrier), got {}",
                    cfg.n_subcarriers
                )));
            }
            let zc = effective_matrix(geom, codebook)?;
            let av = nf_steering(geom, r, theta)?.into_entries();
            let beta = nf_gain(geom, r);
            let mut mu = DMatrix::<Complex64>::zeros(codebook.len(), 1);
            for t in 0..codebook.len() {
                mu[(t, 0)] = beta * av.dotc(&zc.column(t));
            }
            Ok(mu)
        }
        Scenario::FarField => {
            let av = ff_steering(geom, theta).into_entries();
            let beta = ff_gain(geom, r, cfg.ff_phase);
            let tau = r / SPEED_OF_LIGHT;
            let half = (cfg.n_subcarriers as i32 - 1) / 2;
            let g0 = bs_ris_channel(geom, 0, cfg.delta_f)?;
            let m = geom.m();
            let ramps: Vec<f64> = (0..m)
                .map(|idx| -TWO_PI * geom.feed_distance(idx + 1) * cfg.delta_f / SPEED_OF_LIGHT)
                .collect();
            let mut mu = DMatrix::<Complex64>::zeros(codebook.len(), cfg.n_subcarriers);
            for (t, word) in codebook.entries.iter().enumerate() {
                let weights = match word {
                    Codeword::Matrix(psm) => Some(psm.omega().ad_mul(&av)),
                    Codeword::Vector(_) => None,
                };
                for n in -half..=half {
                    let col = (n + half) as usize;
                    let w = match (&weights, word) {
                        (Some(c0), _) => {
                            let gn = DVector::from_fn(m, |idx, _| {
                                g0.entries()[idx] * Complex64::cis(ramps[idx] * n as f64)
                            });
                            c0.dotc(&gn)
                        }
                        (None, Codeword::Vector(f)) => av.dotc(f),
                        _ => unreachable!(),
                    };
                    mu[(t, col)] =
                        beta * Complex64::cis(-TWO_PI * tau * n as f64 * cfg.delta_f) * w;
                }
            }
            Ok(mu)
        }
    }
}

/// Noisy observations y = √P·μ + w with w ~ CN(0, σ²) i.i.d., drawn
/// deterministically from the seed (ChaCha20 keystream, Box-Muller
/// transform), in row-major (t, n) order.
pub fn received_signal(
    geom: &SystemGeometry,
    codebook: &Codebook,
    p_ue: [f64; 2],
    cfg: &PilotConfig,
    seed: u64,
) -> Result<DMatrix<Complex64>> {
    let mu = noiseless_signal(geom, codebook, p_ue, cfg)?;
    let amp = cfg.power_mw.sqrt();
    let sigma_half = (cfg.noise_mw / 2.0).sqrt();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut y = DMatrix::<Complex64>::zeros(mu.nrows(), mu.ncols());
    for t in 0..mu.nrows() {
        for n in 0..mu.ncols() {
            let u1: f64 = 1.0 - rng.gen::<f64>();
            let u2: f64 = rng.gen();
            let mag = (-2.0 * u1.ln()).sqrt();
            let (s, c) = (TWO_PI * u2).sin_cos();
            let w = Complex64::new(mag * c, mag * s) * sigma_half;
            y[(t, n)] = amp * mu[(t, n)] + w;
        }
    }
    Ok(y)
}
