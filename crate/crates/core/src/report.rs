//! Number formatting shared by the CSV and JSON writers.

/// Formats `x` with 15 significant digits in scientific notation.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    // adding 0.0 turns −0 into +0
    format!("{:.14e}", x + 0.0)
}

/// Rounds `x` to 15 significant digits, for JSON emission.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    fmt_sig(x).parse().unwrap_or(x)
}

/// One LF-terminated CSV record of numbers.
pub fn csv_line(cells: &[f64]) -> String {
    let mut line = cells.iter().map(|&c| fmt_sig(c)).collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

/// Recursively rounds every number in a JSON value to 15 significant digits.
pub fn round_json(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round_sig(f)) {
                        *n = r;
                    }
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_json),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Serializes to pretty JSON with numbers rounded to 15 significant digits.
pub fn to_json_string<T: serde::Serialize>(value: &T) -> serde_json::Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_json(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_significant_digits() {
        assert_eq!(fmt_sig(0.25), "2.50000000000000e-1");
        assert_eq!(fmt_sig(-3.0), "-3.00000000000000e0");
        let x = std::f64::consts::PI;
        assert_eq!(round_sig(x).to_string(), "3.14159265358979");
        assert_eq!(fmt_sig(f64::NAN), "NaN");
        assert_eq!(fmt_sig(-0.0), "0.00000000000000e0");
    }

    #[test]
    fn json_numbers_are_rounded() {
        let s = to_json_string(&serde_json::json!({"a": [std::f64::consts::E, 3], "b": null})).unwrap();
        assert!(s.contains("2.71828182845905"));
        assert!(s.contains('3'));
        assert!(s.ends_with('\n'));
    }
}
