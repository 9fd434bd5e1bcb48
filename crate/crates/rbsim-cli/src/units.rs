//! Strict unit-suffixed quantity parsing. Every physical quantity in a
//! config carries an explicit unit; bare numbers are rejected so a value
//! can never be silently misread by three orders of magnitude.

/// Parses a duration like "8 us", "0.36ms", "1.52 s", "100 ns" to seconds.
pub fn parse_time(s: &str) -> Result<f64, String> {
    let (value, unit) = split_quantity(s)?;
    let scale = match unit {
        "s" => 1.0,
        "ms" => 1e-3,
        "us" => 1e-6,
        "ns" => 1e-9,
        _ => return Err(format!("unknown time unit '{unit}' in '{s}' (use s, ms, us, ns)")),
    };
    Ok(value * scale)
}

/// Parses a duration or the literal "off".
pub fn parse_time_or_off(s: &str) -> Result<Option<f64>, String> {
    if s.trim() == "off" {
        return Ok(None);
    }
    parse_time(s).map(Some)
}

/// Parses an angular rate like "4.6e3 rad/s" or "4.6 krad/s" to rad/s.
pub fn parse_rate(s: &str) -> Result<f64, String> {
    let (value, unit) = split_quantity(s)?;
    let scale = match unit {
        "rad/s" => 1.0,
        "krad/s" => 1e3,
        "Mrad/s" => 1e6,
        _ => return Err(format!(
            "unknown rate unit '{unit}' in '{s}' (use rad/s, krad/s, Mrad/s)"
        )),
    };
    Ok(value * scale)
}

/// Parses a frequency like "62.5 kHz" to Hz.
pub fn parse_frequency(s: &str) -> Result<f64, String> {
    let (value, unit) = split_quantity(s)?;
    let scale = match unit {
        "Hz" => 1.0,
        "kHz" => 1e3,
        "MHz" => 1e6,
        _ => return Err(format!("unknown frequency unit '{unit}' in '{s}' (use Hz, kHz, MHz)")),
    };
    Ok(value * scale)
}

/// Canonical echo form: seconds, shortest round-trip float representation.
pub fn format_time(v: f64) -> String {
    format!("{v} s")
}

pub fn format_rate(v: f64) -> String {
    format!("{v} rad/s")
}

fn split_quantity(s: &str) -> Result<(f64, &str), String> {
    let t = s.trim();
    let split = t
        .char_indices()
        .find(|(_, c)| c.is_alphabetic())
        .map(|(i, _)| i)
        .ok_or_else(|| format!("quantity '{s}' is missing a unit suffix"))?;
    let (num, unit) = t.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("cannot parse number '{}' in '{s}'", num.trim()))?;
    if !value.is_finite() {
        return Err(format!("quantity '{s}' is not finite"));
    }
    Ok((value, unit.trim()))
}
