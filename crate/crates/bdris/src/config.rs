//! Run configuration: a flat `key = value` document with dotted
//! namespaces, strict unknown-key rejection, command-line override
//! precedence, and the reference defaults for every absent key.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::codebook::{Architecture, GridMode, GridSpec, Scenario};
use crate::error::{Error, Result};
use crate::experiments::{HeatmapWindow, ScenarioConfig};
use crate::fisher::FfThetaMode;
use crate::geometry::{SystemGeometry, SPEED_OF_LIGHT};

const KNOWN_KEYS: [&str; 29] = [
    "scenario",
    "arch",
    "N",
    "delta_f_hz",
    "P_dbm",
    "noise_dbm",
    "seed",
    "ue_x",
    "ue_y",
    "phi",
    "ff_theta_mode",
    "geom.m",
    "geom.f_c_hz",
    "geom.delta_over_lambda",
    "geom.dc_over_lambda",
    "geom.ris_x",
    "geom.ris_y",
    "grid.rho_min",
    "grid.rho_max",
    "grid.delta_r",
    "grid.delta_theta_deg",
    "grid.truncate",
    "heatmap.x_min",
    "heatmap.x_max",
    "heatmap.y_min",
    "heatmap.y_max",
    "heatmap.resolution",
    "heatmap.exclusion_radius",
    "out.dir",
];

/// Fully resolved run settings: geometry, scenario parameters, heatmap
/// window and output directory, with a record of which keys were stated
/// explicitly rather than defaulted.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub geometry: SystemGeometry,
    pub scenario: ScenarioConfig,
    pub heatmap: HeatmapWindow,
    pub out_dir: PathBuf,
    explicit: Vec<String>,
}

impl RunConfig {
    /// Whether the key was set in the file or an override (as opposed to
    /// carrying its default value).
    pub fn is_explicit(&self, key: &str) -> bool {
        self.explicit.iter().any(|k| k == key)
    }
}

fn parse_pair(line: &str, origin: &str) -> Result<(String, String)> {
    let Some((key, value)) = line.split_once('=') else {
        return Err(Error::validation(format!(
            "{origin}: expected key = value, got '{line}'"
        )));
    };
    let key = key.trim();
    let value = value.trim();
    if key.is_empty() || value.is_empty() {
        return Err(Error::validation(format!(
            "{origin}: empty key or value in '{line}'"
        )));
    }
    Ok((key.to_string(), value.to_string()))
}

fn typed<T: std::str::FromStr>(key: &str, raw: &str, what: &str) -> Result<T> {
    raw.parse::<T>().map_err(|_| {
        Error::validation(format!("key '{key}': expected {what}, got '{raw}'"))
    })
}

fn get_f64(map: &BTreeMap<String, String>, key: &str, default: f64) -> Result<f64> {
    match map.get(key) {
        Some(raw) => typed(key, raw, "a number"),
        None => Ok(default),
    }
}

/// Reads the optional config file and applies `key=value` overrides on
/// top (overrides win), resolving every absent key to its reference
/// default. Unknown keys are errors; validation messages name the
/// offending key.
pub fn parse_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path)?;
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let origin = format!("{}:{}", path.display(), idx + 1);
            let (key, value) = parse_pair(line, &origin)?;
            map.insert(key, value);
        }
    }
    for item in overrides {
        let (key, value) = parse_pair(item, "override")?;
        map.insert(key, value);
    }
    for key in map.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::validation(format!(
                "unknown key '{key}' (known keys: {})",
                KNOWN_KEYS.join(", ")
            )));
        }
    }
    resolve(map)
}

fn resolve(map: BTreeMap<String, String>) -> Result<RunConfig> {
    let scenario = match map.get("scenario") {
        Some(raw) => Scenario::parse(raw)
            .map_err(|e| Error::validation(format!("key 'scenario': {e}")))?,
        None => Scenario::NearField,
    };
    let architecture = match map.get("arch") {
        Some(raw) => Architecture::parse(raw)
            .map_err(|e| Error::validation(format!("key 'arch': {e}")))?,
        None => Architecture::BdRis,
    };
    let defaults = ScenarioConfig::standard(scenario);

    let m: usize = match map.get("geom.m") {
        Some(raw) => typed("geom.m", raw, "a positive integer")?,
        None => 101,
    };
    let f_c = get_f64(&map, "geom.f_c_hz", 28.0e9)?;
    if !(f_c > 0.0) {
        return Err(Error::validation(format!(
            "key 'geom.f_c_hz': carrier frequency must be positive, got {f_c}"
        )));
    }
    let lambda = SPEED_OF_LIGHT / f_c;
    let delta = get_f64(&map, "geom.delta_over_lambda", 0.5)? * lambda;
    let d_c = get_f64(&map, "geom.dc_over_lambda", 0.5)? * lambda;
    let p_ris = [
        get_f64(&map, "geom.ris_x", 0.0)?,
        get_f64(&map, "geom.ris_y", 0.0)?,
    ];
    let geometry = SystemGeometry::new(m, delta, f_c, d_c, p_ris)
        .map_err(|e| Error::validation(format!("keys 'geom.*': {e}")))?;

    let n_subcarriers: usize = match map.get("N") {
        Some(raw) => typed("N", raw, "a positive integer")?,
        None => defaults.n_subcarriers,
    };
    if n_subcarriers == 0 || n_subcarriers.is_multiple_of(2) {
        return Err(Error::validation(format!(
            "key 'N': subcarrier count must be odd and positive, got {n_subcarriers}"
        )));
    }
    if scenario == Scenario::NearField && n_subcarriers != 1 {
        return Err(Error::validation(format!(
            "key 'N': the near-field scenario (scenario = nf) is narrowband and forces N = 1, \
             got {n_subcarriers}"
        )));
    }
    let delta_f = get_f64(&map, "delta_f_hz", defaults.delta_f)?;
    if !(delta_f > 0.0) {
        return Err(Error::validation(format!(
            "key 'delta_f_hz': subcarrier spacing must be positive, got {delta_f}"
        )));
    }
    let noise_override_dbm = match map.get("noise_dbm") {
        Some(raw) => Some(typed("noise_dbm", raw, "a number")?),
        None => None,
    };
    let seed: u64 = match map.get("seed") {
        Some(raw) => typed("seed", raw, "an unsigned integer")?,
        None => defaults.seed,
    };
    let ff_theta_mode = match map.get("ff_theta_mode") {
        Some(raw) => FfThetaMode::parse(raw)
            .map_err(|e| Error::validation(format!("key 'ff_theta_mode': {e}")))?,
        None => defaults.ff_theta_mode,
    };

    let grid = GridSpec {
        rho_min: get_f64(&map, "grid.rho_min", defaults.grid.rho_min)?,
        rho_max: get_f64(&map, "grid.rho_max", defaults.grid.rho_max)?,
        delta_r: get_f64(&map, "grid.delta_r", defaults.grid.delta_r)?,
        delta_theta_deg: get_f64(&map, "grid.delta_theta_deg", defaults.grid.delta_theta_deg)?,
    };
    let grid_mode = match map.get("grid.truncate") {
        Some(raw) => {
            let keep: usize = typed("grid.truncate", raw, "a positive integer")?;
            if keep == 0 {
                return Err(Error::validation(
                    "key 'grid.truncate': keep count must be positive".to_string(),
                ));
            }
            GridMode::Truncate(keep)
        }
        None => GridMode::Literal,
    };

    let scenario_cfg = ScenarioConfig {
        scenario,
        architecture,
        n_subcarriers,
        delta_f,
        power_dbm: get_f64(&map, "P_dbm", defaults.power_dbm)?,
        noise_override_dbm,
        p_ue: [
            get_f64(&map, "ue_x", defaults.p_ue[0])?,
            get_f64(&map, "ue_y", defaults.p_ue[1])?,
        ],
        seed,
        grid,
        grid_mode,
        ff_theta_mode,
        ff_phase: get_f64(&map, "phi", defaults.ff_phase)?,
    };
    scenario_cfg.validate()?;

    let window_defaults = HeatmapWindow::standard(scenario);
    let heatmap = HeatmapWindow {
        x_min: get_f64(&map, "heatmap.x_min", window_defaults.x_min)?,
        x_max: get_f64(&map, "heatmap.x_max", window_defaults.x_max)?,
        y_min: get_f64(&map, "heatmap.y_min", window_defaults.y_min)?,
        y_max: get_f64(&map, "heatmap.y_max", window_defaults.y_max)?,
        resolution: get_f64(&map, "heatmap.resolution", window_defaults.resolution)?,
        exclusion_radius: get_f64(
            &map,
            "heatmap.exclusion_radius",
            window_defaults.exclusion_radius,
        )?,
    };
    heatmap.validate()?;

    let out_dir = match map.get("out.dir") {
        Some(raw) => PathBuf::from(raw),
        None => match std::env::var_os("BDRIS_OUT_DIR") {
            Some(dir) => PathBuf::from(dir),
            None => PathBuf::from("."),
        },
    };

    Ok(RunConfig {
        geometry,
        scenario: scenario_cfg,
        heatmap,
        out_dir,
        explicit: map.into_keys().collect(),
    })
}
