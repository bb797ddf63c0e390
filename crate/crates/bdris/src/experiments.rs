//! The figure-generating studies: beam patterns, power / feed-distance /
//! subcarrier sweeps, and PEB heatmaps, for all three architectures, plus
//! the CSV and JSON-sidecar writers that make runs reproducible.
//!
//! Axis points and grid points are independent work items computed in input
//! order (grid rows in parallel, deterministically ordered), delegating to
//! the pure fisher/channel/codebook operations.

use std::io::Write as _;
use std::path::Path;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::channel::ff_steering;
use crate::codebook::{build_codebook, Architecture, Codebook, GridMode, GridSpec, Scenario};
use crate::error::{Error, Result};
use crate::fisher::{
    effective_matrix, ff_fim_at, fim_positional, fisher_report, jacobian_with,
    nf_fim_from_effective, peb, FfThetaMode, PilotConfig, ThetaSign,
};
use crate::geometry::SystemGeometry;

/// dBm to linear milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10.0_f64.powf(dbm / 10.0)
}

/// Linear milliwatts to dBm.
pub fn mw_to_dbm(mw: f64) -> Result<f64> {
    if !(mw > 0.0) {
        return Err(Error::validation(format!(
            "only positive powers have a dBm value, got {mw} mW"
        )));
    }
    Ok(10.0 * mw.log10())
}

/// Thermal noise power −174 + 10·log₁₀(B) dBm over bandwidth B in Hz.
pub fn noise_power_dbm(bandwidth_hz: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) {
        return Err(Error::validation(format!(
            "bandwidth must be positive, got {bandwidth_hz} Hz"
        )));
    }
    Ok(-174.0 + 10.0 * bandwidth_hz.log10())
}

/// One experiment's run parameters: scenario, architecture, pilot
/// protocol, sweep grid and UE position, with the default values of the
/// reference configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub architecture: Architecture,
    pub n_subcarriers: usize,
    pub delta_f: f64,
    pub power_dbm: f64,
    /// Noise override in dBm; the −174 + 10·log₁₀(N·Δ_f) rule applies
    /// when absent.
    pub noise_override_dbm: Option<f64>,
    pub p_ue: [f64; 2],
    pub seed: u64,
    pub grid: GridSpec,
    pub grid_mode: GridMode,
    pub ff_theta_mode: FfThetaMode,
    pub ff_phase: f64,
}

impl ScenarioConfig {
    /// Reference configuration of the given scenario: 20 dBm, Δ_f = 120
    /// kHz, thermal noise rule, BD-RIS, and the scenario's default UE
    /// position and subcarrier count (near field narrowband, far field
    /// N = 501).
    pub fn standard(scenario: Scenario) -> Self {
        let (n_subcarriers, p_ue) = match scenario {
            Scenario::NearField => (1, [12.0, 8.0]),
            Scenario::FarField => (501, [60.0, 40.0]),
        };
        Self {
            scenario,
            architecture: Architecture::BdRis,
            n_subcarriers,
            delta_f: 120.0e3,
            power_dbm: 20.0,
            noise_override_dbm: None,
            p_ue,
            seed: 0,
            grid: GridSpec::default(),
            grid_mode: GridMode::Literal,
            ff_theta_mode: FfThetaMode::SinTheta,
            ff_phase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers == 0 || self.n_subcarriers.is_multiple_of(2) {
            return Err(Error::validation(format!(
                "subcarrier count must be odd and positive, got {}",
                self.n_subcarriers
            )));
        }
        if self.scenario == Scenario::NearField && self.n_subcarriers != 1 {
            return Err(Error::validation(format!(
                "the near-field scenario is narrowband and forces one subcarrier, got {}",
                self.n_subcarriers
            )));
        }
        if !(self.delta_f > 0.0) {
            return Err(Error::validation(format!(
                "subcarrier spacing must be positive, got {}",
                self.delta_f
            )));
        }
        Ok(())
    }

    /// Bandwidth N·Δ_f of the pilot in Hz.
    pub fn bandwidth_hz(&self) -> f64 {
        self.n_subcarriers as f64 * self.delta_f
    }

    /// Effective noise power in dBm: the override, or the thermal rule
    /// over the pilot bandwidth.
    pub fn noise_dbm(&self) -> Result<f64> {
        match self.noise_override_dbm {
            Some(v) => Ok(v),
            None => noise_power_dbm(self.bandwidth_hz()),
        }
    }

    /// The pilot-protocol view of this configuration (powers in linear
    /// mW).
    pub fn pilot(&self) -> Result<PilotConfig> {
        self.validate()?;
        Ok(PilotConfig {
            power_mw: dbm_to_mw(self.power_dbm),
            noise_mw: dbm_to_mw(self.noise_dbm()?),
            n_subcarriers: self.n_subcarriers,
            delta_f: self.delta_f,
            ff_theta_mode: self.ff_theta_mode,
            ff_phase: self.ff_phase,
        })
    }

    /// SHA-256 of the canonical JSON encoding, for provenance metadata.
    pub fn sha256(&self) -> Result<String> {
        let canonical = serde_json::to_string(self)?;
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        Ok(format!("{:x}", hasher.finalize()))
    }
}

/// Deterministic provenance attached to every result: it excludes wall
/// time so identical configurations serialize identically.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub config_sha256: String,
    pub seed: u64,
    pub ff_phase: f64,
}

impl RunMetadata {
    fn of(config: &ScenarioConfig) -> Result<Self> {
        Ok(Self {
            config_sha256: config.sha256()?,
            seed: config.seed,
            ff_phase: config.ff_phase,
        })
    }
}

/// Beam gains of one effective vector over an angle grid, raw
/// |a₂ᴴ(θ)·ζ|² and normalized to the lossless bound ‖ζ‖² (which equals
/// ‖g[0]‖² for the passive architectures and 1 for the active array, so
/// the normalized traces are directly comparable), in dB.
#[derive(Debug, Clone, Serialize)]
pub struct BeamPattern {
    pub theta_rad: Vec<f64>,
    pub gain_raw: Vec<f64>,
    pub gain_normalized_db: Vec<f64>,
}

/// Evaluates the far-field beam pattern of one effective vector.
pub fn beam_pattern(
    geom: &SystemGeometry,
    zeta: &DVector<Complex64>,
    thetas: &[f64],
) -> Result<BeamPattern> {
    let norm_sq = zeta.norm_squared();
    if !(norm_sq > 0.0) {
        return Err(Error::validation(
            "the effective vector is zero; its pattern is undefined".to_string(),
        ));
    }
    if zeta.len() != geom.m() {
        return Err(Error::validation(format!(
            "effective vector has {} entries for an aperture of {}",
            zeta.len(),
            geom.m()
        )));
    }
    let mut gain_raw = Vec::with_capacity(thetas.len());
    let mut gain_normalized_db = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let a = ff_steering(geom, theta);
        let g = a.entries().dotc(zeta).norm_sqr();
        gain_raw.push(g);
        gain_normalized_db.push(10.0 * (g / norm_sq).log10());
    }
    Ok(BeamPattern { theta_rad: thetas.to_vec(), gain_raw, gain_normalized_db })
}

/// One architecture's bound series along a sweep axis.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSeries {
    pub architecture: Architecture,
    pub eta_first: Vec<f64>,
    pub eta_theta: Vec<f64>,
    pub peb: Vec<f64>,
}

/// A sweep study: the axis, one series per architecture, and provenance.
/// Values are positive; +∞ marks a structurally absent parameter (the
/// far-field delay on a single subcarrier).
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub axis_name: String,
    pub axis_unit: String,
    pub axis: Vec<f64>,
    pub series: Vec<SweepSeries>,
    pub metadata: RunMetadata,
}

impl SweepResult {
    pub fn validate(&self) -> Result<()> {
        for s in &self.series {
            if s.eta_first.len() != self.axis.len()
                || s.eta_theta.len() != self.axis.len()
                || s.peb.len() != self.axis.len()
            {
                return Err(Error::validation(format!(
                    "series lengths for {} disagree with the axis length {}",
                    s.architecture.label(),
                    self.axis.len()
                )));
            }
            for v in s.eta_first.iter().chain(&s.eta_theta).chain(&s.peb) {
                if v.is_nan() || *v <= 0.0 {
                    return Err(Error::numerical(format!(
                        "sweep series for {} contains a non-positive value {v}",
                        s.architecture.label()
                    )));
                }
            }
        }
        Ok(())
    }
}

fn report_summary(
    geom: &SystemGeometry,
    codebook: &Codebook,
    p_ue: [f64; 2],
    cfg: &PilotConfig,
) -> Result<(f64, f64, f64)> {
    let report = fisher_report(geom, codebook, p_ue, cfg)?;
    Ok((report.crlb[0], report.crlb[1], report.peb))
}

/// CRLB/PEB versus transmit power. The FIM scales linearly with power, so
/// the reference bounds are computed once per architecture and rescaled by
/// √P exactly, making the P^(−1/2) law hold to the bit.
pub fn sweep_power(
    geom: &SystemGeometry,
    base: &ScenarioConfig,
    powers_dbm: &[f64],
    archs: &[Architecture],
) -> Result<SweepResult> {
    if powers_dbm.is_empty() || archs.is_empty() {
        return Err(Error::validation("power sweep needs a nonempty axis and architectures"));
    }
    base.validate()?;
    let mut series = Vec::with_capacity(archs.len());
    for &arch in archs {
        let codebook =
            build_codebook(geom, base.scenario, arch, &base.grid, base.grid_mode)?;
        let mut cfg = base.pilot()?;
        cfg.power_mw = 1.0;
        let (eta_first_ref, eta_theta_ref, peb_ref) =
            report_summary(geom, &codebook, base.p_ue, &cfg)?;
        let mut s = SweepSeries {
            architecture: arch,
            eta_first: Vec::new(),
            eta_theta: Vec::new(),
            peb: Vec::new(),
        };
        for &p_dbm in powers_dbm {
            let scale = 1.0 / dbm_to_mw(p_dbm).sqrt();
            s.eta_first.push(eta_first_ref * scale);
            s.eta_theta.push(eta_theta_ref * scale);
            s.peb.push(peb_ref * scale);
        }
        series.push(s);
    }
    Ok(SweepResult {
        axis_name: "power".to_string(),
        axis_unit: "dBm".to_string(),
        axis: powers_dbm.to_vec(),
        series,
        metadata: RunMetadata::of(base)?,
    })
}

/// CRLB/PEB versus feed distance d_c (in wavelengths). The feed channel
/// and the passive codebooks are rebuilt per axis value; the active array
/// never sees d_c and yields a bit-constant series.
pub fn sweep_dc(
    geom: &SystemGeometry,
    base: &ScenarioConfig,
    dc_lambdas: &[f64],
    archs: &[Architecture],
) -> Result<SweepResult> {
    if dc_lambdas.is_empty() || archs.is_empty() {
        return Err(Error::validation(
            "feed-distance sweep needs a nonempty axis and architectures",
        ));
    }
    base.validate()?;
    let cfg = base.pilot()?;
    let mut series: Vec<SweepSeries> = archs
        .iter()
        .map(|&arch| SweepSeries {
            architecture: arch,
            eta_first: Vec::new(),
            eta_theta: Vec::new(),
            peb: Vec::new(),
        })
        .collect();
    for &k in dc_lambdas {
        if !(k > 0.0) {
            return Err(Error::validation(format!(
                "feed distance must be positive, got {k} wavelengths"
            )));
        }
        let geom_k = SystemGeometry::new(
            geom.m(),
            geom.delta(),
            geom.f_c(),
            k * geom.lambda(),
            geom.p_ris(),
        )?;
        for (s, &arch) in series.iter_mut().zip(archs) {
            let codebook =
                build_codebook(&geom_k, base.scenario, arch, &base.grid, base.grid_mode)?;
            let (eta_first, eta_theta, peb_v) =
                report_summary(&geom_k, &codebook, base.p_ue, &cfg)?;
            s.eta_first.push(eta_first);
            s.eta_theta.push(eta_theta);
            s.peb.push(peb_v);
        }
    }
    Ok(SweepResult {
        axis_name: "dc".to_string(),
        axis_unit: "lambda".to_string(),
        axis: dc_lambdas.to_vec(),
        series,
        metadata: RunMetadata::of(base)?,
    })
}

/// The two noise conventions of the subcarrier sweep: `tracking` follows
/// the thermal rule σ²(N·Δ_f) so widening the band admits more noise;
/// `fixed` pins σ² at the single-subcarrier value, isolating the pure
/// information scaling. A configured noise override replaces both.
#[derive(Debug, Clone, Serialize)]
pub struct SubcarrierSweep {
    pub tracking: SweepResult,
    pub fixed: SweepResult,
}

/// CRLB/PEB versus subcarrier count (far field only). Codebooks are built
/// once per architecture; N changes only the pilot protocol.
pub fn sweep_subcarriers(
    geom: &SystemGeometry,
    base: &ScenarioConfig,
    ns: &[usize],
    archs: &[Architecture],
) -> Result<SubcarrierSweep> {
    if ns.is_empty() || archs.is_empty() {
        return Err(Error::validation(
            "subcarrier sweep needs a nonempty axis and architectures",
        ));
    }
    if base.scenario != Scenario::FarField {
        return Err(Error::validation(
            "the subcarrier sweep is a wideband study and requires the far-field scenario",
        ));
    }
    for &n in ns {
        if n == 0 || n.is_multiple_of(2) {
            return Err(Error::validation(format!(
                "subcarrier counts must be odd and positive, got {n}"
            )));
        }
    }
    let mut modes = [
        (
            "tracking",
            SweepResult {
                axis_name: "n_subcarriers".to_string(),
                axis_unit: "count".to_string(),
                axis: ns.iter().map(|&n| n as f64).collect(),
                series: Vec::new(),
                metadata: RunMetadata::of(base)?,
            },
        ),
        (
            "fixed",
            SweepResult {
                axis_name: "n_subcarriers".to_string(),
                axis_unit: "count".to_string(),
                axis: ns.iter().map(|&n| n as f64).collect(),
                series: Vec::new(),
                metadata: RunMetadata::of(base)?,
            },
        ),
    ];
    for &arch in archs {
        let codebook = build_codebook(geom, base.scenario, arch, &base.grid, base.grid_mode)?;
        let mut tracking = SweepSeries {
            architecture: arch,
            eta_first: Vec::new(),
            eta_theta: Vec::new(),
            peb: Vec::new(),
        };
        let mut fixed = tracking.clone();
        for &n in ns {
            let mut scenario_n = base.clone();
            scenario_n.n_subcarriers = n;
            let cfg_tracking = scenario_n.pilot()?;
            let summary = report_summary(geom, &codebook, base.p_ue, &cfg_tracking)?;
            tracking.eta_first.push(summary.0);
            tracking.eta_theta.push(summary.1);
            tracking.peb.push(summary.2);
            let mut cfg_fixed = cfg_tracking;
            cfg_fixed.noise_mw = match base.noise_override_dbm {
                Some(v) => dbm_to_mw(v),
                None => dbm_to_mw(noise_power_dbm(base.delta_f)?),
            };
            let summary = report_summary(geom, &codebook, base.p_ue, &cfg_fixed)?;
            fixed.eta_first.push(summary.0);
            fixed.eta_theta.push(summary.1);
            fixed.peb.push(summary.2);
        }
        modes[0].1.series.push(tracking);
        modes[1].1.series.push(fixed);
    }
    let [(_, tracking), (_, fixed)] = modes;
    Ok(SubcarrierSweep { tracking, fixed })
}

/// Rectangular evaluation window of a PEB heatmap, with the exclusion
/// radius masking UE positions unphysically close to the aperture.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HeatmapWindow {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub resolution: f64,
    pub exclusion_radius: f64,
}

impl HeatmapWindow {
    /// Default windows: 20×15 m at 0.25 m for the near field, 80×80 m at
    /// 1 m for the far field; 0.5 m exclusion radius.
    pub fn standard(scenario: Scenario) -> Self {
        match scenario {
            Scenario::NearField => Self {
                x_min: -10.0,
                x_max: 10.0,
                y_min: 0.0,
                y_max: 15.0,
                resolution: 0.25,
                exclusion_radius: 0.5,
            },
            Scenario::FarField => Self {
                x_min: -40.0,
                x_max: 40.0,
                y_min: 0.0,
                y_max: 80.0,
                resolution: 1.0,
                exclusion_radius: 0.5,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0) {
            return Err(Error::validation(format!(
                "heatmap resolution must be positive, got {}",
                self.resolution
            )));
        }
        if self.x_min > self.x_max || self.y_min > self.y_max {
            return Err(Error::validation(format!(
                "heatmap window is empty: x [{}, {}], y [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        if self.exclusion_radius < 0.0 {
            return Err(Error::validation(format!(
                "exclusion radius must be nonnegative, got {}",
                self.exclusion_radius
            )));
        }
        Ok(())
    }

    fn steps(min: f64, max: f64, step: f64) -> Vec<f64> {
        let count = ((max - min) / step + 1e-9).floor() as usize;
        (0..=count).map(|k| min + k as f64 * step).collect()
    }
}

/// PEB over a position grid for one architecture, as 10·log₁₀(PEB)
/// dB-meters. Masked cells (inside the exclusion radius, or numerically
/// unbounded) hold NaN; `peb_db[iy][ix]` pairs with `(xs[ix], ys[iy])`.
#[derive(Debug, Clone, Serialize)]
pub struct HeatmapResult {
    pub scenario: Scenario,
    pub architecture: Architecture,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub peb_db: Vec<Vec<f64>>,
    pub metadata: RunMetadata,
}

/// Sweeps the UE position over the window with the codebook held fixed
/// and reports 10·log₁₀(PEB) per cell. Rows are computed in parallel and
/// assembled in grid order.
pub fn peb_heatmap(
    geom: &SystemGeometry,
    base: &ScenarioConfig,
    window: &HeatmapWindow,
) -> Result<HeatmapResult> {
    base.validate()?;
    window.validate()?;
    let cfg = base.pilot()?;
    let codebook =
        build_codebook(geom, base.scenario, base.architecture, &base.grid, base.grid_mode)?;
    let xs = HeatmapWindow::steps(window.x_min, window.x_max, window.resolution);
    let ys = HeatmapWindow::steps(window.y_min, window.y_max, window.resolution);
    let nf_effective = match base.scenario {
        Scenario::NearField => Some(effective_matrix(geom, &codebook)?),
        Scenario::FarField => None,
    };

    let cell = |x: f64, y: f64| -> f64 {
        let p_ris = geom.p_ris();
        let r = (x - p_ris[0]).hypot(y - p_ris[1]);
        if r < window.exclusion_radius {
            return f64::NAN;
        }
        let polar = match geom.ue_polar([x, y]) {
            Ok(p) => p,
            Err(_) => return f64::NAN,
        };
        let f_ch = match (&nf_effective, base.scenario) {
            (Some(zc), Scenario::NearField) => nf_fim_from_effective(geom, zc, &polar, &cfg),
            _ => ff_fim_at(geom, &codebook, &polar, &cfg),
        };
        let f_ch = match f_ch {
            Ok(f) => f,
            Err(err) => {
                log::debug!("heatmap cell ({x}, {y}) failed: {err}");
                return f64::NAN;
            }
        };
        let j = match jacobian_with(base.scenario, polar.r(), polar.theta(), ThetaSign::FromYTowardX)
        {
            Ok(j) => j,
            Err(_) => return f64::NAN,
        };
        match peb(&fim_positional(&f_ch, &j)) {
            Ok(v) => 10.0 * v.log10(),
            Err(err) => {
                log::debug!("heatmap cell ({x}, {y}) is unbounded: {err}");
                f64::NAN
            }
        }
    };

    let peb_db: Vec<Vec<f64>> = ys
        .par_iter()
        .map(|&y| xs.iter().map(|&x| cell(x, y)).collect())
        .collect();
    let masked = peb_db.iter().flatten().filter(|v| v.is_nan()).count();
    log::info!(
        "heatmap {} x {} cells, {masked} masked (excluded or unbounded)",
        xs.len(),
        ys.len()
    );

    Ok(HeatmapResult {
        scenario: base.scenario,
        architecture: base.architecture,
        xs,
        ys,
        peb_db,
        metadata: RunMetadata::of(base)?,
    })
}

fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.12e}")
    }
}

/// Writes a sweep as CSV with the pinned header
/// `axis,arch,eta_first,eta_theta,peb`, one row per architecture and axis
/// value, architectures outer, axis ascending.
pub fn write_sweep_csv<W: std::io::Write>(result: &SweepResult, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["axis", "arch", "eta_first", "eta_theta", "peb"])?;
    for s in &result.series {
        for (k, &axis) in result.axis.iter().enumerate() {
            w.write_record([
                format_value(axis),
                s.architecture.label().to_string(),
                format_value(s.eta_first[k]),
                format_value(s.eta_theta[k]),
                format_value(s.peb[k]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes a heatmap as CSV with the pinned header `x,y,arch,peb_db`, rows
/// in y-major, x-minor order.
pub fn write_heatmap_csv<W: std::io::Write>(result: &HeatmapResult, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "y", "arch", "peb_db"])?;
    for (iy, &y) in result.ys.iter().enumerate() {
        for (ix, &x) in result.xs.iter().enumerate() {
            w.write_record([
                format_value(x),
                format_value(y),
                result.architecture.label().to_string(),
                format_value(result.peb_db[iy][ix]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Provenance sidecar written next to every CSV: full configuration (the
/// heatmap window when one applies), its hash, seed, gain phase, software
/// version and wall-clock duration.
#[derive(Debug, Serialize)]
pub struct Sidecar<'a> {
    pub schema: u32,
    pub config: &'a ScenarioConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<&'a HeatmapWindow>,
    pub config_sha256: String,
    pub seed: u64,
    pub ff_phase: f64,
    pub software_version: &'static str,
    pub wall_ms: u128,
}

/// Writes the JSON sidecar for a run.
pub fn write_sidecar(
    path: &Path,
    config: &ScenarioConfig,
    window: Option<&HeatmapWindow>,
    wall_ms: u128,
) -> Result<()> {
    let sidecar = Sidecar {
        schema: 1,
        config,
        window,
        config_sha256: config.sha256()?,
        seed: config.seed,
        ff_phase: config.ff_phase,
        software_version: env!("CARGO_PKG_VERSION"),
        wall_ms,
    };
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, &sidecar)?;
    f.write_all(b"\n")?;
    Ok(())
}
