//! Command-line front end: configuration parsing, experiment dispatch and
//! CSV/JSON emission, one subcommand per study.

// Validation guards are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgAction, Parser, Subcommand};
use nalgebra::DVector;
use num_complex::Complex64;

use bdris::channel::{bs_ris_channel, ff_steering, nf_steering};
use bdris::codebook::{
    aaa_codeword, build_codebook, dris_codeword, takagi_codeword, Codeword, GridSpec,
};
use bdris::config::{parse_config, RunConfig};
use bdris::error::{Error, Result};
use bdris::experiments::{
    beam_pattern, dbm_to_mw, noise_power_dbm, peb_heatmap, sweep_dc, sweep_power,
    sweep_subcarriers, write_heatmap_csv, write_sidecar, write_sweep_csv,
};
use bdris::fisher::{
    effective_matrix, ff_gain, ff_theta_factor, fisher_report, jacobian, nf_derivative_factors,
    nf_gain, noiseless_signal, FfThetaMode, PilotConfig,
};
use bdris::geometry::{PolarPosition, SystemGeometry, SPEED_OF_LIGHT};
use bdris::{Architecture, Scenario};

#[derive(Parser)]
#[command(
    name = "bdris",
    version,
    about = "Cramér-Rao position error bounds for BS-integrated BD-RIS localization"
)]
struct Cli {
    /// Key-value config file (flat `key = value` lines)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one config key, e.g. --set P_dbm=10 (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Scenario shorthand: nf or ff
    #[arg(long, global = true, value_name = "nf|ff")]
    scenario: Option<String>,

    /// Architecture: bd-ris, d-ris, aaa, or all
    #[arg(long, global = true, value_name = "ARCH")]
    arch: Option<String>,

    /// Output directory (default: out.dir key, then $BDRIS_OUT_DIR, then .)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Cap the worker-thread count
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug)
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Far-field beam pattern of the codeword aimed at one target
    Pattern {
        /// Target angle in degrees (default: the configured UE direction)
        #[arg(long, value_name = "DEG")]
        theta_deg: Option<f64>,
        /// Target range in meters, near field only (default: the UE range)
        #[arg(long, value_name = "M")]
        r: Option<f64>,
        /// Number of evaluation angles over [0°, 180°]
        #[arg(long, default_value_t = 721)]
        points: usize,
    },
    /// Channel CRLBs and the PEB at the configured UE position
    Crlb,
    /// Bounds versus transmit power in dBm
    SweepPower {
        /// Power axis: comma list or start:step:stop
        #[arg(long = "p", value_name = "LIST", default_value = "0:2:30")]
        p: String,
    },
    /// Bounds versus feed distance in wavelengths
    SweepDc {
        /// Feed-distance axis: comma list or start:step:stop
        #[arg(long = "dc", value_name = "LIST", default_value = "0.5,1,2,5,10,20,50")]
        dc: String,
    },
    /// Bounds versus subcarrier count (far field), both noise conventions
    SweepSubcarriers {
        /// Subcarrier-count axis: comma list of odd integers
        #[arg(long = "n", value_name = "LIST", default_value = "1,11,51,151,301,501")]
        n: String,
    },
    /// PEB map over the configured position window
    Heatmap,
    /// Serialize the sweep codebook to JSON
    CodebookExport,
    /// Built-in finite-difference and unitarity checks
    Selftest,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let ok = matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = err.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut overrides = cli.set.clone();
    if let Some(scenario) = &cli.scenario {
        overrides.push(format!("scenario={scenario}"));
    }
    let all_archs = match cli.arch.as_deref() {
        None => false,
        Some("all") => true,
        Some(one) => {
            overrides.push(format!("arch={one}"));
            false
        }
    };
    let run_cfg = parse_config(cli.config.as_deref(), &overrides)?;
    let archs: Vec<Architecture> = if all_archs {
        vec![Architecture::BdRis, Architecture::DRis, Architecture::Aaa]
    } else {
        vec![run_cfg.scenario.architecture]
    };
    if let Some(threads) = cli.threads {
        if threads > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
        }
    }
    let out_dir = cli.out.clone().unwrap_or_else(|| run_cfg.out_dir.clone());
    if !matches!(cli.command, Command::Selftest | Command::Crlb) {
        std::fs::create_dir_all(&out_dir)?;
    }

    match &cli.command {
        Command::Pattern { theta_deg, r, points } => {
            cmd_pattern(&run_cfg, &archs, &out_dir, *theta_deg, *r, *points)
        }
        Command::Crlb => cmd_crlb(&run_cfg, &archs, &out_dir),
        Command::SweepPower { p } => cmd_sweep_power(&run_cfg, &archs, &out_dir, p),
        Command::SweepDc { dc } => cmd_sweep_dc(&run_cfg, &archs, &out_dir, dc),
        Command::SweepSubcarriers { n } => cmd_sweep_subcarriers(&run_cfg, &archs, &out_dir, n),
        Command::Heatmap => cmd_heatmap(&run_cfg, &archs, &out_dir),
        Command::CodebookExport => cmd_codebook_export(&run_cfg, &archs, &out_dir),
        Command::Selftest => selftest(),
    }
}

/// Parses `a,b,c` or inclusive `start:step:stop` into a float list.
fn parse_axis(raw: &str, what: &str) -> Result<Vec<f64>> {
    let parse_one = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Validation(format!("{what}: '{s}' is not a number")))
    };
    if raw.contains(':') {
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Validation(format!(
                "{what}: ranges are start:step:stop, got '{raw}'"
            )));
        }
        let (start, step, stop) = (parse_one(parts[0])?, parse_one(parts[1])?, parse_one(parts[2])?);
        if !(step > 0.0) || stop < start {
            return Err(Error::Validation(format!(
                "{what}: range '{raw}' must have a positive step and stop >= start"
            )));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=count).map(|k| start + k as f64 * step).collect());
    }
    raw.split(',').map(parse_one).collect()
}

fn parse_axis_counts(raw: &str, what: &str) -> Result<Vec<usize>> {
    parse_axis(raw, what)?
        .into_iter()
        .map(|v| {
            if v.fract() != 0.0 || v < 1.0 {
                return Err(Error::Validation(format!(
                    "{what}: '{v}' is not a positive integer"
                )));
            }
            Ok(v as usize)
        })
        .collect()
}

fn format_line_value(v: f64) -> String {
    if v.is_finite() { format!("{v:.6e}") } else { v.to_string() }
}

fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

fn cmd_pattern(
    run_cfg: &RunConfig,
    archs: &[Architecture],
    out_dir: &Path,
    theta_deg: Option<f64>,
    r: Option<f64>,
    points: usize,
) -> Result<()> {
    if points < 2 {
        return Err(Error::Validation(format!(
            "pattern needs at least two evaluation angles, got {points}"
        )));
    }
    let geom = &run_cfg.geometry;
    let cfg = &run_cfg.scenario;
    let polar = geom.ue_polar(cfg.p_ue)?;
    let theta = match theta_deg {
        Some(deg) => deg.to_radians(),
        None => polar.theta(),
    };
    let range = r.unwrap_or_else(|| polar.r());
    if !(range > 0.0) {
        return Err(Error::Validation(format!("target range must be positive, got {range}")));
    }
    let thetas: Vec<f64> = (0..points)
        .map(|i| i as f64 * std::f64::consts::PI / (points - 1) as f64)
        .collect();
    let g0 = bs_ris_channel(geom, 0, 1.0)?;
    let u_t = g0.entries() * Complex64::new(1.0 / g0.norm(), 0.0);
    let u_r = match cfg.scenario {
        Scenario::NearField => nf_steering(geom, range, theta)?.into_entries(),
        Scenario::FarField => ff_steering(geom, theta).into_entries(),
    };

    let start = Instant::now();
    let path = out_dir.join(format!("pattern_{}.csv", cfg.scenario.label()));
    let mut w = csv::Writer::from_writer(std::fs::File::create(&path)?);
    w.write_record(["theta_deg", "arch", "gain_raw", "gain_norm_db"])?;
    for &arch in archs {
        let zeta = match arch {
            Architecture::BdRis => takagi_codeword(&u_t, &u_r)?.omega() * g0.entries(),
            Architecture::DRis => dris_codeword(&u_t, &u_r)?.omega() * g0.entries(),
            Architecture::Aaa => aaa_codeword(&u_r)?,
        };
        let pattern = beam_pattern(geom, &zeta, &thetas)?;
        for (k, &t) in pattern.theta_rad.iter().enumerate() {
            w.write_record([
                format!("{:.6}", t.to_degrees()),
                arch.label().to_string(),
                format!("{:.12e}", pattern.gain_raw[k]),
                format!("{:.12e}", pattern.gain_normalized_db[k]),
            ])?;
        }
    }
    w.flush()?;
    write_sidecar(&sidecar_path(&path), cfg, None, start.elapsed().as_millis())?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_crlb(run_cfg: &RunConfig, archs: &[Architecture], out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let geom = &run_cfg.geometry;
    for &arch in archs {
        let mut cfg = run_cfg.scenario.clone();
        cfg.architecture = arch;
        let start = Instant::now();
        let codebook = build_codebook(geom, cfg.scenario, arch, &cfg.grid, cfg.grid_mode)?;
        let report = fisher_report(geom, &codebook, cfg.p_ue, &cfg.pilot()?)?;
        let path = out_dir.join(format!("crlb_{}_{}.json", cfg.scenario.label(), arch.label()));
        let artifact = serde_json::json!({
            "schema": 1,
            "config": cfg,
            "config_sha256": cfg.sha256()?,
            "software_version": env!("CARGO_PKG_VERSION"),
            "wall_ms": start.elapsed().as_millis() as u64,
            "report": report,
        });
        std::fs::write(&path, format!("{:#}\n", artifact))?;
        println!(
            "{}: PEB = {} m at ({}, {}) m -> {}",
            arch.label(),
            format_line_value(report.peb),
            cfg.p_ue[0],
            cfg.p_ue[1],
            path.display()
        );
    }
    Ok(())
}

fn cmd_sweep_power(
    run_cfg: &RunConfig,
    archs: &[Architecture],
    out_dir: &Path,
    axis: &str,
) -> Result<()> {
    let powers = parse_axis(axis, "--p")?;
    let start = Instant::now();
    let result = sweep_power(&run_cfg.geometry, &run_cfg.scenario, &powers, archs)?;
    let path = out_dir.join(format!("sweep_power_{}.csv", run_cfg.scenario.scenario.label()));
    write_sweep_csv(&result, std::fs::File::create(&path)?)?;
    write_sidecar(&sidecar_path(&path), &run_cfg.scenario, None, start.elapsed().as_millis())?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_sweep_dc(
    run_cfg: &RunConfig,
    archs: &[Architecture],
    out_dir: &Path,
    axis: &str,
) -> Result<()> {
    let dcs = parse_axis(axis, "--dc")?;
    let start = Instant::now();
    let result = sweep_dc(&run_cfg.geometry, &run_cfg.scenario, &dcs, archs)?;
    let path = out_dir.join(format!("sweep_dc_{}.csv", run_cfg.scenario.scenario.label()));
    write_sweep_csv(&result, std::fs::File::create(&path)?)?;
    write_sidecar(&sidecar_path(&path), &run_cfg.scenario, None, start.elapsed().as_millis())?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_sweep_subcarriers(
    run_cfg: &RunConfig,
    archs: &[Architecture],
    out_dir: &Path,
    axis: &str,
) -> Result<()> {
    let ns = parse_axis_counts(axis, "--n")?;
    let start = Instant::now();
    let sweep = sweep_subcarriers(&run_cfg.geometry, &run_cfg.scenario, &ns, archs)?;
    let scenario = run_cfg.scenario.scenario.label();
    for (mode, result) in [("tracking", &sweep.tracking), ("fixed", &sweep.fixed)] {
        let path = out_dir.join(format!("sweep_subcarriers_{scenario}_{mode}.csv"));
        write_sweep_csv(result, std::fs::File::create(&path)?)?;
        write_sidecar(&sidecar_path(&path), &run_cfg.scenario, None, start.elapsed().as_millis())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_heatmap(run_cfg: &RunConfig, archs: &[Architecture], out_dir: &Path) -> Result<()> {
    let geom = &run_cfg.geometry;
    for &arch in archs {
        let mut cfg = run_cfg.scenario.clone();
        cfg.architecture = arch;
        if cfg.scenario == Scenario::FarField && !run_cfg.is_explicit("grid.delta_theta_deg") {
            cfg.grid.delta_theta_deg = 5.0;
        }
        let start = Instant::now();
        let result = peb_heatmap(geom, &cfg, &run_cfg.heatmap)?;
        let path = out_dir
            .join(format!("heatmap_{}_{}.csv", cfg.scenario.label(), arch.label()));
        write_heatmap_csv(&result, std::fs::File::create(&path)?)?;
        write_sidecar(
            &sidecar_path(&path),
            &cfg,
            Some(&run_cfg.heatmap),
            start.elapsed().as_millis(),
        )?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_codebook_export(
    run_cfg: &RunConfig,
    archs: &[Architecture],
    out_dir: &Path,
) -> Result<()> {
    let geom = &run_cfg.geometry;
    for &arch in archs {
        let mut cfg = run_cfg.scenario.clone();
        cfg.architecture = arch;
        let start = Instant::now();
        let codebook = build_codebook(geom, cfg.scenario, arch, &cfg.grid, cfg.grid_mode)?;
        let path = out_dir
            .join(format!("codebook_{}_{}.json", cfg.scenario.label(), arch.label()));
        let artifact = serde_json::json!({
            "schema": 1,
            "config": cfg,
            "config_sha256": cfg.sha256()?,
            "software_version": env!("CARGO_PKG_VERSION"),
            "wall_ms": start.elapsed().as_millis() as u64,
            "codebook": codebook.export(),
        });
        std::fs::write(&path, format!("{:#}\n", artifact))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

struct Check {
    name: &'static str,
    run: fn() -> Result<()>,
}

fn check(ok: bool, detail: String) -> Result<()> {
    if ok { Ok(()) } else { Err(Error::Numerical(detail)) }
}

fn selftest_codeword_algebra() -> Result<()> {
    let geom = SystemGeometry::standard();
    let spec = GridSpec { delta_theta_deg: 22.5, ..GridSpec::default() };
    let g0 = bs_ris_channel(&geom, 0, 1.0)?;
    let u_t = g0.entries() * Complex64::new(1.0 / g0.norm(), 0.0);
    for arch in [Architecture::BdRis, Architecture::DRis] {
        let cb = build_codebook(
            &geom,
            Scenario::NearField,
            arch,
            &spec,
            bdris::codebook::GridMode::Literal,
        )?;
        for (word, target) in cb.entries.iter().zip(&cb.targets) {
            let Codeword::Matrix(psm) = word else {
                return Err(Error::Numerical("passive codebook holds a vector".into()));
            };
            check(
                psm.unitarity_defect() <= 1e-10,
                format!("unitarity defect {:.3e} at {:?}", psm.unitarity_defect(), target),
            )?;
            check(
                psm.symmetry_defect() <= 1e-12,
                format!("symmetry defect {:.3e} at {:?}", psm.symmetry_defect(), target),
            )?;
            if arch == Architecture::BdRis {
                let u_r = bdris::codebook::target_steering(&geom, Scenario::NearField, target)?;
                let gain = u_r.dotc(&(psm.omega() * &u_t)).norm();
                check(gain >= 1.0 - 1e-8, format!("matched gain {gain:.12} at {target:?}"))?;
            }
        }
    }
    Ok(())
}

fn selftest_nf_derivatives() -> Result<()> {
    let geom = SystemGeometry::standard();
    let spec = GridSpec { delta_theta_deg: 45.0, ..GridSpec::default() };
    let cb = build_codebook(
        &geom,
        Scenario::NearField,
        Architecture::BdRis,
        &spec,
        bdris::codebook::GridMode::Literal,
    )?;
    let zc = effective_matrix(&geom, &cb)?;
    let (r0, th0) = (13.0, 0.9);
    let mu = |r: f64, th: f64| -> Result<Vec<Complex64>> {
        let av = nf_steering(&geom, r, th)?.into_entries();
        let beta = nf_gain(&geom, r);
        Ok((0..zc.ncols()).map(|t| beta * av.dotc(&zc.column(t))).collect())
    };
    let (d_r, d_theta) = nf_derivative_factors(&geom, r0, th0);
    let av = nf_steering(&geom, r0, th0)?.into_entries();
    let beta = nf_gain(&geom, r0);
    let a_r = av.zip_map(&d_r, |a, d| a * d);
    let a_t = av.zip_map(&d_theta, |a, d| a * d);
    let (hr, ht) = (1e-4, 1e-6);
    let up_r = mu(r0 + hr, th0)?;
    let dn_r = mu(r0 - hr, th0)?;
    let up_t = mu(r0, th0 + ht)?;
    let dn_t = mu(r0, th0 - ht)?;
    for t in 0..zc.ncols() {
        let zeta = zc.column(t);
        let fd_r = (up_r[t] / nf_gain(&geom, r0 + hr) - dn_r[t] / nf_gain(&geom, r0 - hr)) * beta
            / Complex64::new(2.0 * hr, 0.0);
        let an_r = beta * a_r.dotc(&zeta);
        check(
            (fd_r - an_r).norm() <= 1e-4 * an_r.norm().max(1e-12),
            format!("nf d/dr slot {t}: fd {fd_r} vs {an_r}"),
        )?;
        let fd_t = (up_t[t] - dn_t[t]) / Complex64::new(2.0 * ht, 0.0);
        let an_t = beta * a_t.dotc(&zeta);
        check(
            (fd_t - an_t).norm() <= 1e-4 * an_t.norm().max(1e-12),
            format!("nf d/dtheta slot {t}: fd {fd_t} vs {an_t}"),
        )?;
    }
    Ok(())
}

fn selftest_ff_derivatives() -> Result<()> {
    let geom = SystemGeometry::standard();
    let spec = GridSpec { delta_theta_deg: 60.0, ..GridSpec::default() };
    let cb = build_codebook(
        &geom,
        Scenario::FarField,
        Architecture::BdRis,
        &spec,
        bdris::codebook::GridMode::Literal,
    )?;
    let cfg = PilotConfig {
        power_mw: dbm_to_mw(20.0),
        noise_mw: dbm_to_mw(noise_power_dbm(3.0 * 120.0e3)?),
        n_subcarriers: 3,
        delta_f: 120.0e3,
        ff_theta_mode: FfThetaMode::SinTheta,
        ff_phase: 0.0,
    };
    let p_ue = [60.0, 40.0];
    let polar = geom.ue_polar(p_ue)?;
    let th0 = polar.theta();
    let h = 1e-7;
    let mu = |th: f64| -> Result<nalgebra::DMatrix<Complex64>> {
        let rotated = geom.ue_position(&PolarPosition::new(polar.r(), th)?);
        noiseless_signal(&geom, &cb, rotated, &cfg)
    };
    let up = mu(th0 + h)?;
    let dn = mu(th0 - h)?;
    let factor = ff_theta_factor(&geom, th0, FfThetaMode::SinTheta);
    let av = ff_steering(&geom, th0).into_entries();
    let avd = av.zip_map(&factor, |a, d| a * d);
    let g0 = bs_ris_channel(&geom, 0, cfg.delta_f)?;
    let tau = polar.r() / SPEED_OF_LIGHT;
    for t in 0..cb.len() {
        let Codeword::Matrix(psm) = &cb.entries[t] else {
            return Err(Error::Numerical("ff codebook holds a vector".into()));
        };
        for (col, n) in (-1..=1).enumerate() {
            let fd = (up[(t, col)] - dn[(t, col)]) / Complex64::new(2.0 * h, 0.0);
            let gn = DVector::from_fn(geom.m(), |idx, _| {
                g0.entries()[idx]
                    * Complex64::cis(
                        -2.0 * std::f64::consts::PI
                            * geom.feed_distance(idx + 1)
                            * (n as f64)
                            * cfg.delta_f
                            / SPEED_OF_LIGHT,
                    )
            });
            let an = ff_gain(&geom, polar.r(), 0.0)
                * Complex64::cis(-2.0 * std::f64::consts::PI * tau * n as f64 * cfg.delta_f)
                * psm.omega().ad_mul(&avd).dotc(&gn);
            check(
                (fd - an).norm() <= 2e-5 * an.norm().max(1e-12),
                format!("ff d/dtheta slot {t} n {n}: fd {fd} vs {an}"),
            )?;
        }
    }
    Ok(())
}

fn selftest_jacobian_and_units() -> Result<()> {
    let j = jacobian(Scenario::NearField, 10.0, 0.0)?;
    check(
        (j[(0, 1)] - 1.0).abs() <= 1e-12 && (j[(1, 0)] + 0.1).abs() <= 1e-12,
        format!("jacobian at broadside: {j}"),
    )?;
    let thermal = noise_power_dbm(1.0)?;
    check((thermal + 174.0).abs() <= 1e-12, format!("1 Hz thermal floor {thermal}"))?;
    Ok(())
}

fn selftest() -> Result<()> {
    let checks = [
        Check { name: "codeword algebra (unitarity, symmetry, matched gain)", run: selftest_codeword_algebra },
        Check { name: "near-field derivatives vs finite differences", run: selftest_nf_derivatives },
        Check { name: "far-field derivatives vs finite differences", run: selftest_ff_derivatives },
        Check { name: "jacobian convention and noise floor", run: selftest_jacobian_and_units },
    ];
    for c in checks {
        (c.run)().map_err(|e| Error::Numerical(format!("selftest '{}': {e}", c.name)))?;
        println!("ok: {}", c.name);
    }
    println!("selftest passed");
    Ok(())
}
