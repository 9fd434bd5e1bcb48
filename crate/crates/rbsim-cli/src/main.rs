//! Batch front end: experiment presets, configuration handling, and
//! machine-readable outputs for the benchmarking simulator.

mod config;
mod error;
mod experiments;
mod output;
mod units;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RawConfig;
use error::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "rbsim",
    about = "Randomized benchmarking of noise-protected single-qubit gates",
    version
)]
struct Cli {
    /// Configuration file (TOML); flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for decay tables and the summary.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Master seed; fixes every random draw of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap (also via RBSIM_WORKERS; 0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Randomized-benchmarking decay for one gate scheme.
    Rb(RbArgs),
    /// Free-induction, echo, or pure-decoupling coherence decay.
    Coherence(CoherenceArgs),
    /// Calibrate the dephasing model against coherence-time targets.
    Calibrate(CalibrateArgs),
    /// Dephasing-limited error-per-gate table for all gate schemes.
    Table1,
    /// Preset: composite-pulse benchmarking decay with limit references.
    Fig2(ScaleArgs),
    /// Preset: the four gate families compared head to head.
    Fig3(ScaleArgs),
    /// Preset: benchmarking inside a decoupling train vs pure decoupling.
    Fig4(ScaleArgs),
    /// Run an experiment entirely from a configuration file.
    Run,
}

#[derive(Args)]
struct RbArgs {
    /// Gate scheme: bare_rect, bare_bb1, scheme_a..scheme_e.
    #[arg(long)]
    scheme: Option<String>,
    /// Named preset bundling the study constants (paper-noise).
    #[arg(long)]
    preset: Option<String>,
    /// Sequence lengths, e.g. "1,2,4,8" or "1..80".
    #[arg(long)]
    m_values: Option<String>,
    /// "off" or "calibrated".
    #[arg(long)]
    noise: Option<String>,
    /// "none", "fixed:E", "gaussian:S" or "uniform:W".
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    n_sequences: Option<usize>,
    #[arg(long)]
    n_noise: Option<usize>,
}

#[derive(Args)]
struct CoherenceArgs {
    /// fid, hahn, xy4, xy8 or xy16.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    preset: Option<String>,
    /// Longest free-evolution time, e.g. "1.5 ms".
    #[arg(long)]
    t_max: Option<String>,
    #[arg(long)]
    points: Option<usize>,
    /// Inter-pulse delay for decoupling runs, e.g. "2 us".
    #[arg(long)]
    tau_delay: Option<String>,
    #[arg(long)]
    n_cycles: Option<usize>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    n_noise: Option<usize>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Free-induction 1/e target, e.g. "360 us".
    #[arg(long, default_value = "360 us")]
    t2_fid: String,
    /// Single-echo 1/e target, e.g. "740 us".
    #[arg(long, default_value = "740 us")]
    t2_hahn: String,
}

#[derive(Args)]
struct ScaleArgs {
    #[arg(long)]
    n_sequences: Option<usize>,
    #[arg(long)]
    n_noise: Option<usize>,
    #[arg(long)]
    m_values: Option<String>,
    #[arg(long)]
    n_cycles: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests exit cleanly; anything else is an
            // invalid invocation.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match real_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn real_main(cli: Cli) -> CliResult<()> {
    configure_workers(cli.workers)?;

    let mut raw = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read '{}': {e}", path.display())))?;
            RawConfig::parse_toml(&text).map_err(CliError::Config)?
        }
        None => RawConfig::parse_toml("experiment = \"rb\"").map_err(CliError::Config)?,
    };

    apply_command(&mut raw, &cli.command)?;
    if let Some(seed) = cli.seed {
        raw.seed = seed;
    }

    let cfg = raw.validate().map_err(CliError::Config)?;
    experiments::run(&cfg, &cli.out_dir)
}

fn configure_workers(flag: Option<usize>) -> CliResult<()> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var("RBSIM_WORKERS") {
            Ok(v) => v
                .parse()
                .map_err(|_| CliError::Config(format!("RBSIM_WORKERS = '{v}' is not a count")))?,
            Err(_) => 0,
        },
    };
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot configure {n} workers: {e}")))?;
    }
    Ok(())
}

fn apply_command(raw: &mut RawConfig, command: &Command) -> CliResult<()> {
    match command {
        Command::Run => {
            // Everything comes from the config file.
        }
        Command::Rb(args) => {
            raw.experiment = "rb".into();
            if let Some(preset) = &args.preset {
                apply_preset(raw, preset)?;
            }
            if let Some(s) = &args.scheme {
                raw.sim.scheme = s.clone();
            }
            if let Some(mv) = &args.m_values {
                raw.sim.m_values = parse_m_values(mv)?;
            }
            if let Some(noise) = &args.noise {
                apply_noise_flag(raw, noise)?;
            }
            if let Some(eps) = &args.eps {
                apply_eps_flag(raw, eps)?;
            }
            if let Some(n) = args.n_sequences {
                raw.sim.n_sequences = n;
            }
            if let Some(n) = args.n_noise {
                raw.sim.n_noise = n;
            }
        }
        Command::Coherence(args) => {
            raw.experiment = "coherence".into();
            if let Some(preset) = &args.preset {
                apply_preset(raw, preset)?;
            }
            if let Some(kind) = &args.kind {
                raw.coherence.kind = kind.clone();
            }
            if let Some(t) = &args.t_max {
                raw.coherence.t_max = t.clone();
            }
            if let Some(p) = args.points {
                raw.coherence.points = p;
            }
            if let Some(t) = &args.tau_delay {
                raw.coherence.tau_delay = t.clone();
            }
            if let Some(n) = args.n_cycles {
                raw.coherence.n_cycles = n;
            }
            if let Some(eps) = &args.eps {
                apply_eps_flag(raw, eps)?;
            }
            if let Some(n) = args.n_noise {
                raw.sim.n_noise = n;
            }
        }
        Command::Calibrate(args) => {
            raw.experiment = "calibrate".into();
            raw.noise.kind = "calibrated".into();
            raw.noise.t2_fid = Some(args.t2_fid.clone());
            raw.noise.t2_hahn = Some(args.t2_hahn.clone());
        }
        Command::Table1 => {
            raw.experiment = "table1".into();
        }
        Command::Fig2(args) => {
            raw.experiment = "fig2".into();
            apply_preset(raw, "paper-noise")?;
            apply_scale(raw, args)?;
        }
        Command::Fig3(args) => {
            raw.experiment = "fig3".into();
            apply_preset(raw, "paper-noise")?;
            apply_scale(raw, args)?;
        }
        Command::Fig4(args) => {
            raw.experiment = "fig4".into();
            apply_preset(raw, "paper-noise")?;
            raw.coherence.n_cycles = 12;
            apply_scale(raw, args)?;
        }
    }
    Ok(())
}

fn apply_scale(raw: &mut RawConfig, args: &ScaleArgs) -> CliResult<()> {
    if let Some(n) = args.n_sequences {
        raw.sim.n_sequences = n;
    }
    if let Some(n) = args.n_noise {
        raw.sim.n_noise = n;
    }
    if let Some(mv) = &args.m_values {
        raw.sim.m_values = parse_m_values(mv)?;
    }
    if let Some(n) = args.n_cycles {
        raw.coherence.n_cycles = n;
    }
    Ok(())
}

/// The paper-noise preset: the study's constants. Dephasing calibrated to
/// 360 us free-induction and 740 us echo times, 5% Gaussian amplitude
/// spread, 8 us pi pulses, 32 sequences of up to 80 gates.
fn apply_preset(raw: &mut RawConfig, preset: &str) -> CliResult<()> {
    match preset {
        "paper-noise" => {
            raw.noise.kind = "calibrated".into();
            raw.noise.t2_fid = Some("360 us".into());
            raw.noise.t2_hahn = Some("740 us".into());
            raw.eps.model = "gaussian".into();
            raw.eps.value = 0.05;
            raw.pulse.t_pi = "8 us".into();
            raw.sim.n_sequences = 32;
            raw.sim.n_noise = 100;
            raw.sim.m_values = vec![1, 2, 4, 8, 16, 32, 48, 64, 80];
            Ok(())
        }
        other => Err(CliError::Config(format!(
            "unknown preset '{other}' (available: paper-noise)"
        ))),
    }
}

fn apply_noise_flag(raw: &mut RawConfig, value: &str) -> CliResult<()> {
    match value {
        "off" => {
            raw.noise.kind = "off".into();
            Ok(())
        }
        "calibrated" => {
            raw.noise.kind = "calibrated".into();
            raw.noise.t2_fid.get_or_insert_with(|| "360 us".into());
            raw.noise.t2_hahn.get_or_insert_with(|| "740 us".into());
            Ok(())
        }
        other => Err(CliError::Config(format!(
            "--noise takes 'off' or 'calibrated', got '{other}'"
        ))),
    }
}

fn apply_eps_flag(raw: &mut RawConfig, value: &str) -> CliResult<()> {
    if value == "none" || value == "off" {
        raw.eps.model = "off".into();
        raw.eps.value = 0.0;
        return Ok(());
    }
    let (model, number) = value.split_once(':').ok_or_else(|| {
        CliError::Config(format!(
            "--eps takes 'none' or model:value (e.g. gaussian:0.05), got '{value}'"
        ))
    })?;
    let number: f64 = number
        .parse()
        .map_err(|_| CliError::Config(format!("--eps value '{number}' is not a number")))?;
    if !["fixed", "gaussian", "uniform"].contains(&model) {
        return Err(CliError::Config(format!("--eps model '{model}' is unknown")));
    }
    raw.eps.model = model.into();
    raw.eps.value = number;
    Ok(())
}

/// Parses "1,2,4" and "1..80" (inclusive) forms, also mixed.
fn parse_m_values(s: &str) -> CliResult<Vec<usize>> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let item = item.trim();
        if let Some((a, b)) = item.split_once("..") {
            let a: usize = a
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad m range start '{a}'")))?;
            let b: usize = b
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad m range end '{b}'")))?;
            if a == 0 || b < a {
                return Err(CliError::Config(format!("bad m range '{item}'")));
            }
            out.extend(a..=b);
        } else {
            let v: usize = item
                .parse()
                .map_err(|_| CliError::Config(format!("bad m value '{item}'")))?;
            out.push(v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m_value_parsing() {
        assert_eq!(parse_m_values("1,2,4").unwrap(), vec![1, 2, 4]);
        assert_eq!(parse_m_values("1..5").unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(parse_m_values("1,4..6,9").unwrap(), vec![1, 4, 5, 6, 9]);
        assert!(parse_m_values("0..5").is_err());
        assert!(parse_m_values("5..2").is_err());
        assert!(parse_m_values("x").is_err());
    }

    #[test]
    fn eps_flag_parsing() {
        let mut raw = RawConfig::parse_toml("experiment = \"rb\"").unwrap();
        apply_eps_flag(&mut raw, "gaussian:0.05").unwrap();
        assert_eq!(raw.eps.model, "gaussian");
        assert_eq!(raw.eps.value, 0.05);
        apply_eps_flag(&mut raw, "none").unwrap();
        assert_eq!(raw.eps.model, "off");
        assert!(apply_eps_flag(&mut raw, "gaussian").is_err());
        assert!(apply_eps_flag(&mut raw, "weird:0.1").is_err());
    }
}
