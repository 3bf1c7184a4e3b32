//! Deterministic number formatting: 12 significant digits, `.` separator,
//! no locale dependence, so repeated runs emit identical bytes.

/// Formats with 12 significant digits in the style of `printf %.12g`:
/// fixed notation for decimal exponents in `[-4, 11]`, scientific
/// otherwise, trailing zeros stripped.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let formatted = format!("{:.11e}", x);
    let (mant, exp_str) = formatted.split_once('e').expect("exponential format");
    let exp: i32 = exp_str.parse().expect("exponent parses");
    let neg = mant.starts_with('-');
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 12);

    let body = if (-4..12).contains(&exp) {
        if exp >= 0 {
            let split = (exp + 1) as usize;
            let int_part = &digits[..split];
            let frac = digits[split..].trim_end_matches('0');
            if frac.is_empty() {
                int_part.to_string()
            } else {
                format!("{int_part}.{frac}")
            }
        } else {
            let frac = digits.trim_end_matches('0');
            format!("0.{}{}", "0".repeat((-exp - 1) as usize), frac)
        }
    } else {
        let head = &digits[..1];
        let tail = digits[1..].trim_end_matches('0');
        if tail.is_empty() {
            format!("{head}e{exp}")
        } else {
            format!("{head}.{tail}e{exp}")
        }
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// Rounds to 12 significant digits (the value [`fmt_sig`] prints).
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    fmt_sig(x).parse().expect("formatted float parses back")
}

/// A JSON number carrying the 12-significant-digit rounding.
pub fn json_num(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(round_sig(x))
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}
