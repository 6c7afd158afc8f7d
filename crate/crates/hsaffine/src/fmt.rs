//! Numeric output formatting for artifacts.
//!
//! Every float written to a JSON or CSV artifact is rendered with 17
//! significant digits, which is enough for an exact `f64` round trip: reading
//! the text back reproduces the original bits. Artifacts produced with
//! different worker counts are byte-compared in tests, so formatting must be
//! deterministic and locale-independent — hence a single shared formatter
//! rather than per-site `format!` calls.

use serde::Serialize;
use std::io;

/// Formats a finite float with 17 significant digits in scientific notation.
///
/// The output parses back to the exact same `f64` bit pattern (sign of zero
/// included).
pub fn fmt_g17(x: f64) -> String {
    debug_assert!(x.is_finite(), "artifact floats must be finite, got {x}");
    format!("{x:.16e}")
}

/// `serde_json` formatter that renders every `f64` through [`fmt_g17`].
///
/// Non-finite values serialize as `null`, matching `serde_json`'s own
/// convention; report types are expected to keep their floats finite.
struct G17Formatter;

impl serde_json::ser::Formatter for G17Formatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        if value.is_finite() {
            writer.write_all(fmt_g17(value).as_bytes())
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes a report to JSON with exact-round-trip float formatting.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, G17Formatter);
    value
        .serialize(&mut ser)
        .expect("report serialization cannot fail");
    String::from_utf8(out).expect("serde_json output is valid UTF-8")
}

/// Appends one CSV row of floats (17 significant digits each) to `out`.
pub fn push_csv_row(out: &mut String, fields: &[f64]) {
    for (k, x) in fields.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        out.push_str(&fmt_g17(*x));
    }
    out.push('\n');
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_round_trips_exactly() {
        let values = [
            0.0,
            -0.0,
            1.0,
            -1.0,
            std::f64::consts::PI,
            1.0 / 3.0,
            6.02e23,
            -2.2250738585072014e-308, // smallest normal, negated
            1.7976931348623157e308,   // largest finite
            5e-324,                   // smallest subnormal
            0.1 + 0.2,
        ];
        for &x in &values {
            let s = fmt_g17(x);
            let back: f64 = s.parse().expect("parse back");
            assert_eq!(back.to_bits(), x.to_bits(), "round trip failed for {s}");
        }
    }

    #[test]
    fn json_floats_round_trip_through_text() {
        #[derive(Serialize)]
        struct Row {
            a: f64,
            b: f64,
            n: usize,
        }
        let row = Row {
            a: 1.0 / 3.0,
            b: -7.25e-19,
            n: 3,
        };
        let text = to_json(&row);
        let parsed: serde_json::Value = serde_json::from_str(&text).expect("valid json");
        assert_eq!(parsed["a"].as_f64().unwrap().to_bits(), (1.0f64 / 3.0).to_bits());
        assert_eq!(parsed["b"].as_f64().unwrap().to_bits(), (-7.25e-19f64).to_bits());
        assert_eq!(parsed["n"].as_u64(), Some(3));
    }

    #[test]
    fn csv_rows_are_comma_separated_with_newline() {
        let mut out = String::new();
        push_csv_row(&mut out, &[0.5, 2.0]);
        assert_eq!(out, "5.0000000000000000e-1,2.0000000000000000e0\n");
        let reparsed: Vec<f64> = out
            .trim_end()
            .split(',')
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(reparsed, vec![0.5, 2.0]);
    }
}
