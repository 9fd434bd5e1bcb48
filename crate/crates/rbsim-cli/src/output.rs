//! Machine-readable outputs: decay tables and the run summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rbsim::analysis::FitResult;
use rbsim::engine::DecayCurve;
use rbsim::noise::OUParams;

/// Formats one decay curve as CSV: header plus `x, mean, stderr` rows at
/// 10 significant digits.
pub fn decay_table(curve: &DecayCurve) -> String {
    let mut out = String::from("x,mean,stderr\n");
    for p in &curve.points {
        writeln!(out, "{:.9e},{:.9e},{:.9e}", p.x, p.mean, p.stderr).unwrap();
    }
    out
}

pub fn write_decay_table(dir: &Path, curve: &DecayCurve) -> std::io::Result<PathBuf> {
    let path = dir.join(format!("decay_{}.csv", curve.label));
    fs::write(&path, decay_table(curve))?;
    Ok(path)
}

/// Incrementally built run summary in TOML form with stable key names.
pub struct Summary {
    body: String,
}

impl Summary {
    pub fn new(experiment: &str, seed: u64) -> Self {
        let mut body = String::from("[run]\n");
        writeln!(body, "experiment = \"{experiment}\"").unwrap();
        writeln!(body, "master_seed = {seed}").unwrap();
        Self { body }
    }

    pub fn push_noise(&mut self, params: Option<&OUParams>) {
        self.body.push_str("\n[noise]\n");
        match params {
            Some(p) => {
                writeln!(self.body, "enabled = true").unwrap();
                writeln!(self.body, "sigma_rad_s = {}", p.sigma).unwrap();
                writeln!(self.body, "tau_c_s = {}", p.tau_c).unwrap();
            }
            None => {
                writeln!(self.body, "enabled = false").unwrap();
            }
        }
    }

    /// Opens a named result section, e.g. `[result.rb_bare_bb1]`.
    pub fn push_section(&mut self, name: &str) {
        writeln!(self.body, "\n[result.{name}]").unwrap();
    }

    pub fn push_value(&mut self, key: &str, value: f64) {
        writeln!(self.body, "{key} = {value}").unwrap();
    }

    pub fn push_str_value(&mut self, key: &str, value: &str) {
        writeln!(self.body, "{key} = \"{value}\"").unwrap();
    }

    pub fn push_fit(&mut self, prefix: &str, fit: &FitResult) {
        self.push_str_value(&format!("{prefix}_model"), fit.model.name());
        let names: &[&str] = match fit.model {
            rbsim::analysis::FitModel::Exponential => &["A", "d"],
            rbsim::analysis::FitModel::Stretched => &["A", "a", "k"],
            rbsim::analysis::FitModel::Quadratic => &["c2", "c1", "c0"],
        };
        for (i, n) in names.iter().enumerate() {
            self.push_value(&format!("{prefix}_{n}"), fit.params[i]);
            self.push_value(&format!("{prefix}_{n}_stderr"), fit.stderr[i]);
        }
        self.push_value(&format!("{prefix}_residual_norm"), fit.residual_norm);
    }

    /// Appends the full effective configuration echo.
    pub fn push_config_echo(&mut self, raw: &crate::config::RawConfig) {
        self.body.push_str("\n[config]\n");
        // The echo is a complete RawConfig document nested under [config]:
        // every key moves down one level so the summary stays one TOML file.
        let rendered = toml::to_string(raw).expect("config serializes");
        for line in rendered.lines() {
            if let Some(stripped) = line.strip_prefix('[') {
                writeln!(self.body, "[config.{stripped}").unwrap();
            } else {
                writeln!(self.body, "{line}").unwrap();
            }
        }
    }

    pub fn finish(mut self, wall_time_s: f64) -> String {
        writeln!(self.body, "\n[timing]\nwall_time_s = {wall_time_s}").unwrap();
        self.body
    }
}

/// Extracts the `[config]` section of a summary back into a standalone
/// config document (the reproduction path).
pub fn extract_config_echo(summary_text: &str) -> Option<String> {
    let value: toml::Value = summary_text.parse().ok()?;
    let config = value.get("config")?;
    toml::to_string(config).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rbsim::engine::CurvePoint;

    #[test]
    fn decay_table_format() {
        let curve = DecayCurve {
            points: vec![
                CurvePoint { x: 1.0, mean: 0.987654321987, stderr: 0.001 },
                CurvePoint { x: 2.0, mean: 0.9, stderr: 0.002 },
            ],
            tau_gate: None,
            scheme: None,
            label: "t".into(),
        };
        let table = decay_table(&curve);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], "x,mean,stderr");
        assert!(lines[1].starts_with("1.000000000e0,9.876543220e-1,"));
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn summary_is_valid_toml_and_echo_extracts() {
        let raw = crate::config::RawConfig::parse_toml("experiment = \"rb\"").unwrap();
        let cfg = raw.validate().unwrap();
        let mut s = Summary::new("rb", 1);
        s.push_noise(None);
        s.push_section("rb_bare_bb1");
        s.push_value("epg", 3.2e-3);
        s.push_config_echo(&cfg.to_raw());
        let text = s.finish(1.5);
        let parsed: toml::Value = text.parse().expect("summary parses as TOML");
        assert!(parsed.get("config").is_some());
        let echo = extract_config_echo(&text).unwrap();
        let back = crate::config::RawConfig::parse_toml(&echo).unwrap();
        assert_eq!(back.experiment, "rb");
        assert_eq!(back.validate().unwrap().dt, cfg.dt);
    }
}
