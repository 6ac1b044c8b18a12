// Copyright 2026 The vanhove Authors
// SPDX-License-Identifier: Apache-2.0

//! Shortest round-trip number formatting for CSV artifacts.

use std::fmt::Write;

/// Plain decimal for moderate magnitudes, exponent form otherwise, so tiny
/// values do not expand to hundreds of digits. Both forms round-trip.
pub(crate) fn number(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// One CSV line (with trailing newline); `None` becomes an empty field.
pub(crate) fn row(fields: &[Option<f64>]) -> String {
    let mut out = String::new();
    for (k, f) in fields.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        if let Some(x) = f {
            let _ = write!(out, "{}", number(*x));
        }
    }
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [
            0.0,
            -0.0,
            0.5,
            1e-300,
            1.1187682635727447e-112,
            -3.25e20,
            12345.678,
            1e-4,
            9.99e-5,
        ] {
            assert_eq!(
                number(x).parse::<f64>().unwrap().to_bits(),
                x.to_bits(),
                "{x}"
            );
        }
        assert_eq!(number(2e-7), "2e-7");
        assert_eq!(number(0.25), "0.25");
    }

    #[test]
    fn row_layout() {
        assert_eq!(row(&[Some(1.0), None, Some(1e-9)]), "1,,1e-9\n");
    }
}
