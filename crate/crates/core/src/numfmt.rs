//! Fixed-precision text rendering for tabular output.
//!
//! Every number written to CSV goes through [`sig12`]: twelve significant
//! digits, ties to even on the exact binary value, trailing zeros dropped.
//! Infinities are spelled `inf` / `-inf` so tables stay parseable.

pub const SIGNIFICANT_DIGITS: usize = 12;

pub fn sig12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
    if !(-6..15).contains(&exp) {
        return format!("{mantissa}e{exp}");
    }
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa),
    };
    let digits: String = digits.chars().filter(|c| *c != '.').collect();
    let point = exp + 1;
    let body = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), digits)
    } else if point as usize >= digits.len() {
        format!("{}{}", digits, "0".repeat(point as usize - digits.len()))
    } else {
        let (int, frac) = digits.split_at(point as usize);
        format!("{int}.{frac}")
    };
    format!("{sign}{body}")
}

/// Inverse of [`sig12`] for table readers; accepts `inf`, `-inf` and `nan`.
pub fn parse(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn renders_plainly() {
        assert_eq!(sig12(0.45), "0.45");
        assert_eq!(sig12(1.0), "1");
        assert_eq!(sig12(-2.5), "-2.5");
        assert_eq!(sig12(1234.5), "1234.5");
        assert_eq!(sig12(0.1 + 0.2), "0.3");
        assert_eq!(sig12(1e-9), "1e-9");
        assert_eq!(sig12(2.5e-5), "0.000025");
        assert_eq!(sig12(1e20), "1e20");
        assert_eq!(sig12(f64::INFINITY), "inf");
        assert_eq!(sig12(2.0f64.log2()), "1");
        assert_eq!(sig12(std::f64::consts::PI), "3.14159265359");
    }

    #[test]
    fn ties_go_to_even() {
        // Both inputs are exact in binary, so these are genuine ties.
        assert_eq!(sig12(100_000_000_001.5), "100000000002");
        assert_eq!(sig12(100_000_000_000.5), "100000000000");
    }

    proptest! {
        #[test]
        fn round_trips_to_twelve_digits(x in -1e12f64..1e12) {
            let back = parse(&sig12(x)).unwrap();
            prop_assert!((back - x).abs() <= 1e-11 * x.abs().max(1e-300));
        }
    }
}

/// Serde adapter writing non-finite floats as the strings `inf`, `-inf`,
/// `nan` (JSON has no literal for them) and finite ones as plain numbers.
pub mod extended {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&super::sig12(*x))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => {
                super::parse(&t).ok_or_else(|| de::Error::custom(format!("not a number: {t}")))
            }
        }
    }
}
