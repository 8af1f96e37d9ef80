//! Fixed-precision float formatting shared by every report and state dump.
//!
//! All floating-point output is written with 17 significant digits in
//! scientific notation (`{:.16e}`), which round-trips any `f64` exactly and
//! is stable across platforms.

use std::fmt;

use serde::de::Deserializer;
use serde::ser::{Error as _, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

/// 17-significant-digit scientific notation. Non-finite values become `null`
/// in JSON and an empty cell in CSV; `-0.0` prints as `0`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        let x = if x == 0.0 { 0.0 } else { x };
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

/// `f64` wrapper that serializes with [`fmt17`].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Sig17(pub f64);

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        let raw = RawValue::from_string(fmt17(self.0)).map_err(S::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Sig17 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Option::<f64>::deserialize(deserializer).map(|v| Sig17(v.unwrap_or(f64::NAN)))
    }
}

impl From<f64> for Sig17 {
    fn from(x: f64) -> Self {
        Sig17(x)
    }
}

impl fmt::Display for Sig17 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt17(self.0))
    }
}

/// `serialize_with` helper for plain `f64` fields.
pub fn serialize_f64<S: Serializer>(x: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    Sig17(*x).serialize(serializer)
}

/// `serialize_with` helper for `Option<f64>` fields.
pub fn serialize_opt_f64<S: Serializer>(x: &Option<f64>, serializer: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => Sig17(*v).serialize(serializer),
        None => serializer.serialize_none(),
    }
}

/// Optional value: `None` serializes as `null` (JSON) or an empty cell (CSV).
pub fn fmt17_opt(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

/// Top-level layout of every report file: the command, the effective
/// config it ran with, and its result.
#[derive(Debug, Serialize)]
pub struct ReportEnvelope<'a, C: Serialize, T: Serialize> {
    pub command: &'a str,
    pub seed: u64,
    pub config: &'a C,
    pub result: &'a T,
}

impl<C: Serialize, T: Serialize> ReportEnvelope<'_, C, T> {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports always serialize");
        text.push('\n');
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(1.0), "1.0000000000000000e0");
        assert_eq!(fmt17(0.25), "2.5000000000000000e-1");
        assert_eq!(fmt17(-3.0e-20), "-3.0000000000000003e-20");
        assert_eq!(fmt17(-0.0), "0.0000000000000000e0");
        assert_eq!(fmt17(f64::NAN), "");
    }

    #[test]
    fn round_trips_through_json() {
        for x in [0.1, 1.0 / 3.0, std::f64::consts::PI, 1e-300, -2.5e17] {
            let text = serde_json::to_string(&Sig17(x)).unwrap();
            let back: Sig17 = serde_json::from_str(&text).unwrap();
            assert_eq!(back.0.to_bits(), x.to_bits(), "{text}");
        }
        assert_eq!(serde_json::to_string(&Sig17(f64::INFINITY)).unwrap(), "null");
    }
}
