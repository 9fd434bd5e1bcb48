//! Temporary tuning probe (not part of the deliverable).

use rbsim::analysis::{epg_from_fit, epg_limit, fit_exponential, fit_stretched, power_law_slope};
use rbsim::engine::{run_coherence, run_rb, CoherenceKind, SimConfig};
use rbsim::noise::{calibrate, AmplitudeErrorModel};
use rbsim::pulse::{DdKind, PulseStyle, SchemeId};
use std::time::Instant;

fn main() {
    let us = 1e-6;
    let params = calibrate(360.0 * us, 740.0 * us).unwrap();
    println!(
        "calibrated: sigma = {:.4e} rad/s, tau_c = {:.4e} s",
        params.sigma, params.tau_c
    );

    let which: String = std::env::args().nth(1).unwrap_or_default();

    if which.is_empty() || which == "rb" {
        for scheme in [SchemeId::BareRect, SchemeId::BareBb1, SchemeId::SchemeC] {
            let t0 = Instant::now();
            let cfg = SimConfig {
                n_noise: 100,
                n_sequences: 32,
                noise: Some(params),
                eps_model: AmplitudeErrorModel::Gaussian { sigma: 0.05 },
                scheme,
                master_seed: 20260811,
                ..SimConfig::default()
            };
            let curve = run_rb(&cfg).unwrap();
            let stretched = fit_stretched(&curve);
            let exponential = fit_exponential(&curve);
            print!("{scheme}: ");
            for p in &curve.points {
                print!("({:.0},{:.4}) ", p.x, p.mean);
            }
            println!();
            if let Ok(f) = &stretched {
                println!(
                    "  stretched: A={:.4} a={:.5} k={:.4} resid={:.3e}",
                    f.params[0], f.params[1], f.params[2], f.residual_norm
                );
            }
            if let Ok(f) = &exponential {
                let (epg, sd) = epg_from_fit(f).unwrap();
                let tau = curve.tau_gate.unwrap();
                println!(
                    "  exponential: A={:.4} d={:.5} EPG={:.5}+-{:.5} limit(tau,760us)={:.5} tau={:.1}us resid={:.3e}",
                    f.params[0], f.params[1], epg, sd,
                    epg_limit(tau, 760.0 * us),
                    tau / us, f.residual_norm
                );
            }
            println!("  elapsed {:?}", t0.elapsed());
        }
    }

    if which == "shape" {
        // How strongly sub-exponential is the rect decay vs sigma_eps?
        for (sig, noise_on) in [(0.05, true), (0.10, true), (0.15, true), (0.15, false), (0.20, true)] {
            let cfg = SimConfig {
                n_noise: 100,
                n_sequences: 64,
                noise: noise_on.then_some(params),
                eps_model: AmplitudeErrorModel::Gaussian { sigma: sig },
                scheme: SchemeId::BareRect,
                master_seed: 4711,
                ..SimConfig::default()
            };
            let curve = run_rb(&cfg).unwrap();
            match fit_stretched(&curve) {
                Ok(f) => println!(
                    "rect sigma_eps={sig} noise={noise_on}: A={:.4} a={:.5} k={:.4}",
                    f.params[0], f.params[1], f.params[2]
                ),
                Err(e) => println!("rect sigma_eps={sig}: fit failed {e}"),
            }
        }
    }

    if which == "kdist" {
        for seed in [1u64, 2, 3, 4, 5, 6, 7, 8] {
            let cfg = SimConfig {
                n_noise: 100,
                n_sequences: 32,
                noise: Some(params),
                eps_model: AmplitudeErrorModel::Gaussian { sigma: 0.05 },
                scheme: SchemeId::BareRect,
                master_seed: seed,
                ..SimConfig::default()
            };
            let curve = run_rb(&cfg).unwrap();
            let k = fit_stretched(&curve).map(|f| f.params[2]).unwrap_or(f64::NAN);
            println!("seed {seed}: k = {k:.4}");
        }
        let cfg = SimConfig {
            n_noise: 200,
            n_sequences: 256,
            noise: Some(params),
            eps_model: AmplitudeErrorModel::Gaussian { sigma: 0.05 },
            scheme: SchemeId::BareRect,
            master_seed: 123,
            ..SimConfig::default()
        };
        let curve = run_rb(&cfg).unwrap();
        for p in &curve.points { print!("({:.0},{:.4}+-{:.4}) ", p.x, p.mean, p.stderr); }
        println!();
        let f = fit_stretched(&curve).unwrap();
        println!("high-stats: A={:.4} a={:.5} k={:.4}", f.params[0], f.params[1], f.params[2]);
    }

    if which == "schemes" {
        // Noise-only EPG for every scheme at paper noise (no eps).
        for scheme in SchemeId::ALL {
            let cfg = SimConfig {
                n_noise: 100,
                n_sequences: 32,
                noise: Some(params),
                eps_model: AmplitudeErrorModel::Off,
                scheme,
                master_seed: 999,
                ..SimConfig::default()
            };
            let curve = run_rb(&cfg).unwrap();
            match fit_exponential(&curve) {
                Ok(f) => {
                    let (epg, sd) = epg_from_fit(&f).unwrap();
                    println!(
                        "{scheme}: noise-only EPG = {:.5} +- {:.5} (tau {:.0} us)",
                        epg, sd, curve.tau_gate.unwrap() / us
                    );
                }
                Err(e) => println!("{scheme}: fit failed {e}"),
            }
        }
    }

    if which.is_empty() || which == "slopes" {
        for eps in [0.02, 0.03, 0.05] {
            // Coherent side: repeated XY-4 with fixed flip-angle error.
            let cfg = SimConfig {
                n_noise: 1,
                noise: None,
                eps_model: AmplitudeErrorModel::Fixed(eps),
                master_seed: 1,
                ..SimConfig::default()
            };
            let curve = run_coherence(
                &CoherenceKind::Dd {
                    kind: DdKind::Xy4,
                    style: PulseStyle::Rect,
                    tau_delay: 2.0 * us,
                    n_cycles: 64,
                },
                &cfg,
            )
            .unwrap();
            let pts: Vec<(f64, f64)> = curve
                .points
                .iter()
                .enumerate()
                .filter(|(i, _)| [3usize, 7, 15, 31, 63].contains(i))
                .map(|(i, p)| ((i + 1) as f64, (1.0 - p.mean) / 2.0))
                .collect();
            println!("eps={eps}: xy4 infidelities {pts:?}");
            let slope_dd = power_law_slope(&pts);

            // Random side: plain benchmarking with uncompensated pulses.
            let cfg = SimConfig {
                n_noise: 1,
                n_sequences: 64,
                m_values: vec![4, 8, 16, 32, 64],
                noise: None,
                eps_model: AmplitudeErrorModel::Fixed(eps),
                scheme: SchemeId::BareRect,
                master_seed: 2,
                ..SimConfig::default()
            };
            let curve = run_rb(&cfg).unwrap();
            let pts: Vec<(f64, f64)> = curve
                .points
                .iter()
                .map(|p| (p.x, (1.0 - p.mean) / 2.0))
                .collect();
            println!("eps={eps}: rb-d infidelities {pts:?}");
            let slope_rb = power_law_slope(&pts);
            println!("eps={eps}: xy4 slope {slope_dd:.3}, randomized slope {slope_rb:.3}");
        }
    }
}

#[allow(dead_code)]
fn extra() {}
