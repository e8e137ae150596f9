//! Parsing of angle expressions such as `pi/2`, `0.25pi`, `3*pi/4` or plain
//! decimals. Pulse areas in the catalog are rational multiples of pi, so the
//! command line and the sequence files accept them in that form.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Parses an angle in radians.
pub fn parse_angle(text: &str) -> Result<f64> {
    let err = || Error::Angle(text.to_string());
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(err());
    }
    let (sign, body) = match s.as_bytes()[0] {
        b'-' => (-1.0, &s[1..]),
        b'+' => (1.0, &s[1..]),
        _ => (1.0, s.as_str()),
    };
    if body.starts_with(['+', '-']) {
        return Err(err());
    }
    let lower = body.to_ascii_lowercase();
    let Some(pos) = lower.find("pi") else {
        return body.parse::<f64>().map(|v| sign * v).map_err(|_| err());
    };

    let prefix = lower[..pos].trim_end_matches('*');
    let factor = if prefix.is_empty() {
        1.0
    } else {
        prefix.parse::<f64>().map_err(|_| err())?
    };
    let suffix = &lower[pos + 2..];
    let value = if suffix.is_empty() {
        factor * PI
    } else if let Some(den) = suffix.strip_prefix('/') {
        let den: f64 = den.parse().map_err(|_| err())?;
        if den == 0.0 {
            return Err(err());
        }
        factor * PI / den
    } else if let Some(mul) = suffix.strip_prefix('*') {
        factor * PI * mul.parse::<f64>().map_err(|_| err())?
    } else {
        return Err(err());
    };
    if !value.is_finite() {
        return Err(err());
    }
    Ok(sign * value)
}
