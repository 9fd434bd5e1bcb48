//! The experiment drivers behind each CLI command: run, fit, write the
//! decay tables and the summary.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rbsim::analysis::{
    epg_from_fit, epg_limit, fit_exponential, fit_quadratic, fit_stretched, FitResult,
};
use rbsim::engine::{run_coherence, run_rb, CoherenceKind, DecayCurve, SimConfig};
use rbsim::noise::{echo_time_analytic, fid_time_analytic, OUParams};
use rbsim::pulse::{nominal_gate_period, DdKind, PulseStyle, SchemeId};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::output::{write_decay_table, Summary};

const US: f64 = 1e-6;
/// Echo-measured and decoupling-limited coherence times used for the
/// reference error-per-gate limits.
const T2_ECHO_REF: f64 = 760.0 * US;
const T2_DD_REF: f64 = 50.0e-3;

pub fn run(cfg: &Config, out_dir: &Path) -> CliResult<()> {
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("cannot create '{}': {e}", out_dir.display())))?;
    let started = Instant::now();
    let mut summary = Summary::new(&cfg.experiment, cfg.seed);

    match cfg.experiment.as_str() {
        "rb" => rb_experiment(cfg, out_dir, &mut summary)?,
        "coherence" => coherence_experiment(cfg, out_dir, &mut summary)?,
        "calibrate" => calibrate_experiment(cfg, &mut summary)?,
        "table1" => table1_experiment(cfg, out_dir, &mut summary)?,
        "fig2" => fig2_experiment(cfg, out_dir, &mut summary)?,
        "fig3" => fig3_experiment(cfg, out_dir, &mut summary)?,
        "fig4" => fig4_experiment(cfg, out_dir, &mut summary)?,
        other => return Err(CliError::Config(format!("unknown experiment '{other}'"))),
    }

    summary.push_config_echo(&cfg.to_raw());
    let text = summary.finish(started.elapsed().as_secs_f64());
    let path = out_dir.join("summary.toml");
    fs::write(&path, text)
        .map_err(|e| CliError::Io(format!("cannot write '{}': {e}", path.display())))?;
    println!("summary: {}", path.display());
    Ok(())
}

fn resolve_noise(cfg: &Config) -> CliResult<Option<OUParams>> {
    cfg.resolve_noise().map_err(CliError::from_compute)
}

fn sim_config(cfg: &Config, noise: Option<OUParams>) -> CliResult<SimConfig> {
    cfg.sim_config(noise).map_err(|e| CliError::Config(e.to_string()))
}

fn write_curve(out_dir: &Path, curve: &DecayCurve) -> CliResult<()> {
    let path = write_decay_table(out_dir, curve)
        .map_err(|e| CliError::Io(format!("cannot write decay table: {e}")))?;
    println!("curve:   {}", path.display());
    Ok(())
}

/// Time-axis curves are fitted in milliseconds so the per-unit decay
/// parameter stays well conditioned.
fn with_x_in_ms(curve: &DecayCurve) -> DecayCurve {
    let mut scaled = curve.clone();
    for p in &mut scaled.points {
        p.x *= 1e3;
    }
    scaled
}

fn push_rb_fits(
    summary: &mut Summary,
    curve: &DecayCurve,
    exponential: &FitResult,
    stretched: Option<&FitResult>,
) -> CliResult<()> {
    let tau = curve.tau_gate.expect("benchmarking curves carry a gate period");
    summary.push_value("tau_gate_s", tau);
    summary.push_value("points", curve.points.len() as f64);
    summary.push_fit("fit_exponential", exponential);
    let (epg, epg_sd) = epg_from_fit(exponential).map_err(CliError::from_compute)?;
    summary.push_value("epg", epg);
    summary.push_value("epg_stderr", epg_sd);
    let limit_echo = epg_limit(tau, T2_ECHO_REF);
    let limit_dd = epg_limit(tau, T2_DD_REF);
    summary.push_value("epg_limit_hahn_760us", limit_echo);
    summary.push_value("epg_limit_dd_50ms", limit_dd);
    summary.push_str_value(
        "below_hahn_limit",
        if epg < limit_echo { "true" } else { "false" },
    );
    if let Some(f) = stretched {
        summary.push_fit("fit_stretched", f);
    }
    Ok(())
}

fn rb_experiment(cfg: &Config, out_dir: &Path, summary: &mut Summary) -> CliResult<()> {
    let noise = resolve_noise(cfg)?;
    summary.push_noise(noise.as_ref());
    let sim = sim_config(cfg, noise)?;
    let curve = run_rb(&sim).map_err(|e| CliError::Config(e.to_string()))?;
    write_curve(out_dir, &curve)?;
    let exponential = fit_exponential(&curve).map_err(CliError::from_compute)?;
    let stretched = fit_stretched(&curve).ok();
    summary.push_section(&curve.label);
    push_rb_fits(summary, &curve, &exponential, stretched.as_ref())?;
    let (epg, epg_sd) = epg_from_fit(&exponential).map_err(CliError::from_compute)?;
    println!(
        "EPG({}) = {:.4e} +- {:.4e}  [limit(tau, 760 us) = {:.4e}]",
        curve.label,
        epg,
        epg_sd,
        epg_limit(curve.tau_gate.unwrap(), T2_ECHO_REF)
    );
    Ok(())
}

fn coherence_experiment(cfg: &Config, out_dir: &Path, summary: &mut Summary) -> CliResult<()> {
    let noise = resolve_noise(cfg)?;
    summary.push_noise(noise.as_ref());
    let sim = sim_config(cfg, noise)?;
    let kind = match cfg.coherence_dd_kind() {
        Some(dd) => CoherenceKind::Dd {
            kind: dd,
            style: cfg.coherence_dd_style,
            tau_delay: cfg.coherence_tau_delay,
            n_cycles: cfg.coherence_n_cycles,
        },
        None if cfg.coherence_kind == "hahn" => CoherenceKind::Hahn {
            t_max: cfg.coherence_t_max,
            points: cfg.coherence_points,
        },
        None => CoherenceKind::Fid {
            t_max: cfg.coherence_t_max,
            points: cfg.coherence_points,
        },
    };
    let curve = run_coherence(&kind, &sim).map_err(|e| CliError::Config(e.to_string()))?;
    write_curve(out_dir, &curve)?;
    summary.push_section(&curve.label);
    summary.push_value("points", curve.points.len() as f64);
    if let Some(t) = one_over_e_time(&curve) {
        summary.push_value("time_1e_s", t);
        println!("1/e time({}) = {:.4e} s", curve.label, t);
    }
    if let Ok(fit) = fit_exponential(&with_x_in_ms(&curve)) {
        summary.push_fit("fit_exponential_ms", &fit);
        if let Some(tc) = fit.time_constant() {
            summary.push_value("time_constant_ms", tc);
        }
    }
    Ok(())
}

/// First crossing of 1/e by linear interpolation.
pub fn one_over_e_time(curve: &DecayCurve) -> Option<f64> {
    let target = (-1.0f64).exp();
    let mut prev: Option<(f64, f64)> = None;
    for p in &curve.points {
        if let Some((x0, y0)) = prev {
            if y0 >= target && p.mean < target {
                let f = (y0 - target) / (y0 - p.mean);
                return Some(x0 + f * (p.x - x0));
            }
        }
        prev = Some((p.x, p.mean));
    }
    None
}

fn calibrate_experiment(cfg: &Config, summary: &mut Summary) -> CliResult<()> {
    let noise = resolve_noise(cfg)?;
    let params = noise.ok_or_else(|| {
        CliError::Config("the calibrate experiment needs noise.kind = \"calibrated\"".into())
    })?;
    summary.push_noise(Some(&params));
    let fid = fid_time_analytic(&params);
    let hahn = echo_time_analytic(&params);
    summary.push_section("calibration");
    summary.push_value("sigma_rad_s", params.sigma);
    summary.push_value("tau_c_s", params.tau_c);
    summary.push_value("fid_1e_s", fid);
    summary.push_value("hahn_1e_s", hahn);
    println!(
        "calibrated: sigma = {:.6e} rad/s, tau_c = {:.6e} s (FID {:.4e} s, echo {:.4e} s)",
        params.sigma, params.tau_c, fid, hahn
    );
    Ok(())
}

fn table1_experiment(cfg: &Config, out_dir: &Path, summary: &mut Summary) -> CliResult<()> {
    summary.push_noise(None);
    let rows: [(&str, SchemeId); 6] = [
        ("BB1", SchemeId::BareBb1),
        ("(a)", SchemeId::SchemeA),
        ("(b)", SchemeId::SchemeB),
        ("(c)", SchemeId::SchemeC),
        ("(d)", SchemeId::SchemeD),
        ("(e)", SchemeId::SchemeE),
    ];
    let mut table = String::from("gate  tau_us  EPG_m_1e-4  EPG_M_1e-4\n");
    summary.push_section("table1");
    for (name, scheme) in rows {
        let tau = nominal_gate_period(scheme, cfg.gate_params)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let epg_m = epg_limit(tau, T2_DD_REF) * 1e4;
        let epg_cap = epg_limit(tau, T2_ECHO_REF) * 1e4;
        table.push_str(&format!(
            "{name:<5} {:<7.0} {:<11.0} {:<10.0}\n",
            tau / US,
            epg_m.round(),
            epg_cap.round()
        ));
        let key = name.trim_matches(|c| c == '(' || c == ')').to_lowercase();
        summary.push_value(&format!("tau_us_{key}"), tau / US);
        summary.push_value(&format!("epg_m_1e4_{key}"), epg_m);
        summary.push_value(&format!("epg_M_1e4_{key}"), epg_cap);
    }
    print!("{table}");
    let path = out_dir.join("table1.txt");
    fs::write(&path, &table)
        .map_err(|e| CliError::Io(format!("cannot write '{}': {e}", path.display())))?;
    println!("table:   {}", path.display());
    Ok(())
}

fn fig2_experiment(cfg: &Config, out_dir: &Path, summary: &mut Summary) -> CliResult<()> {
    // Composite-pulse benchmarking decay with the dephasing-limit
    // reference curves quoted as percentages.
    let noise = resolve_noise(cfg)?;
    summary.push_noise(noise.as_ref());
    let mut sim = sim_config(cfg, noise)?;
    sim.scheme = SchemeId::BareBb1;
    let curve = run_rb(&sim).map_err(|e| CliError::Config(e.to_string()))?;
    write_curve(out_dir, &curve)?;
    let exponential = fit_exponential(&curve).map_err(CliError::from_compute)?;
    summary.push_section(&curve.label);
    push_rb_fits(summary, &curve, &exponential, fit_stretched(&curve).ok().as_ref())?;
    let tau = curve.tau_gate.unwrap();
    summary.push_value("epg_limit_750us_pct", epg_limit(tau, 750.0 * US) * 100.0);
    summary.push_value("epg_limit_340us_pct", epg_limit(tau, 340.0 * US) * 100.0);
    Ok(())
}

fn fig3_experiment(cfg: &Config, out_dir: &Path, summary: &mut Summary) -> CliResult<()> {
    // The four gate families compared head to head.
    let noise = resolve_noise(cfg)?;
    summary.push_noise(noise.as_ref());
    for scheme in [
        SchemeId::BareRect,
        SchemeId::BareBb1,
        SchemeId::SchemeA,
        SchemeId::SchemeC,
    ] {
        let mut sim = sim_config(cfg, noise)?;
        sim.scheme = scheme;
        let curve = run_rb(&sim).map_err(|e| CliError::Config(e.to_string()))?;
        write_curve(out_dir, &curve)?;
        summary.push_section(&curve.label);
        if scheme == SchemeId::BareRect {
            // Uncompensated pulses decay sub-exponentially; the stretched
            // fit is the headline and the exponential is best-effort.
            let stretched = fit_stretched(&curve).map_err(CliError::from_compute)?;
            summary.push_value("tau_gate_s", curve.tau_gate.unwrap());
            summary.push_fit("fit_stretched", &stretched);
            if let Ok(exponential) = fit_exponential(&curve) {
                summary.push_fit("fit_exponential", &exponential);
            }
        } else {
            let exponential = fit_exponential(&curve).map_err(CliError::from_compute)?;
            push_rb_fits(summary, &curve, &exponential, fit_stretched(&curve).ok().as_ref())?;
        }
    }
    Ok(())
}

fn fig4_experiment(cfg: &Config, out_dir: &Path, summary: &mut Summary) -> CliResult<()> {
    // Benchmarking interleaved with decoupling versus pure decoupling,
    // all against wall time.
    let noise = resolve_noise(cfg)?;
    summary.push_noise(noise.as_ref());

    // Benchmarking arm: gates embedded in the decoupling train.
    let mut sim = sim_config(cfg, noise)?;
    sim.scheme = SchemeId::SchemeD;
    let rb_curve = run_rb(&sim).map_err(|e| CliError::Config(e.to_string()))?;
    let tau = rb_curve.tau_gate.unwrap();
    let mut time_curve = rb_curve.clone();
    time_curve.label = "rb_scheme_d_vs_time".into();
    for p in &mut time_curve.points {
        p.x *= tau;
    }
    write_curve(out_dir, &time_curve)?;
    summary.push_section(&time_curve.label);
    summary.push_value("tau_gate_s", tau);
    let fit = fit_exponential(&with_x_in_ms(&time_curve)).map_err(CliError::from_compute)?;
    summary.push_fit("fit_exponential_ms", &fit);
    if let Some(tc) = fit.time_constant() {
        summary.push_value("time_constant_ms", tc);
    }

    // Pure decoupling arms at the same inter-pulse delay.
    let delay = cfg.gate_params.scheme_d_delay;
    for (dd, label, n_cycles) in [
        (DdKind::Xy4, "dd_xy4", cfg.coherence_n_cycles.max(12)),
        (DdKind::Xy16, "dd_xy16", (cfg.coherence_n_cycles.max(12) + 3) / 4 * 8),
    ] {
        let sim = sim_config(cfg, noise)?;
        let mut curve = run_coherence(
            &CoherenceKind::Dd {
                kind: dd,
                style: PulseStyle::Rect,
                tau_delay: delay,
                n_cycles,
            },
            &sim,
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
        curve.label = label.into();
        write_curve(out_dir, &curve)?;
        summary.push_section(label);
        if dd == DdKind::Xy4 {
            // Short-time decay; fit the quadratic over the undecayed range.
            let mut window = curve.clone();
            window.points.retain(|p| p.mean > 0.05);
            if window.points.len() >= 3 {
                let fit =
                    fit_quadratic(&with_x_in_ms(&window)).map_err(CliError::from_compute)?;
                summary.push_fit("fit_quadratic_ms", &fit);
                summary.push_value(
                    "fit_window_max_ms",
                    window.points.last().unwrap().x * 1e3,
                );
            }
        } else if let Ok(fit) = fit_exponential(&with_x_in_ms(&curve)) {
            summary.push_fit("fit_exponential_ms", &fit);
            if let Some(tc) = fit.time_constant() {
                summary.push_value("time_constant_ms", tc);
            }
        }
    }
    Ok(())
}
