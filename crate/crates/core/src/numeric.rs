//! Stable evaluation of the exponential forms that show up in occurrence
//! probabilities and in the life-rate prior.

use std::f64::consts::LN_10;

/// `1 - e^(-x)` without cancellation for small `x`.
#[inline]
pub fn one_minus_exp_neg(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// `ln(1 - e^(-x))` for `x >= 0`.
///
/// Uses `ln(-expm1(-x))` below `ln 2` and `ln1p(-e^(-x))` above it, which
/// keeps full relative precision on both sides.
pub fn ln_one_minus_exp_neg(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if x < std::f64::consts::LN_2 {
        (-(-x).exp_m1()).ln()
    } else {
        (-(-x).exp()).ln_1p()
    }
}

/// `ln(1 - e^(-e^y))`, i.e. the natural log of the life-rate transform
/// applied to a rate given by its logarithm `y`.
///
/// For very negative `y` the rate itself underflows; there the result is
/// `y - e^y / 2`, which is exact to double precision once `e^y < 1e-8`.
pub fn ln_one_minus_exp_neg_exp(y: f64) -> f64 {
    if y == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if y < -18.0 {
        let x = y.exp();
        return y - 0.5 * x;
    }
    ln_one_minus_exp_neg(y.exp())
}

#[inline]
pub fn ln_to_log10(ln: f64) -> f64 {
    ln / LN_10
}

#[inline]
pub fn log10_to_ln(log10: f64) -> f64 {
    log10 * LN_10
}

/// Formats with `sig` significant digits in the style of C's `%g`.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sig = sig.max(1);
    // Round first so the exponent reflects the printed mantissa.
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= sig as i32 {
        let mantissa = trim_zeros(mantissa);
        format!("{mantissa}e{exp}")
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_minus_exp_small_argument() {
        let v = one_minus_exp_neg(1e-30);
        assert!((v / 1e-30 - 1.0).abs() < 1e-12);
        assert_eq!(one_minus_exp_neg(0.0), 0.0);
        assert!((one_minus_exp_neg(1.0) - 0.632_120_558_828_557_7).abs() < 1e-15);
    }

    #[test]
    fn ln_forms_agree_with_naive_in_safe_range() {
        for &x in &[0.01f64, 0.3, 0.69, 0.7, 1.0, 5.0, 30.0] {
            let naive = (1.0 - (-x).exp()).ln();
            assert!((ln_one_minus_exp_neg(x) - naive).abs() < 1e-13, "x={x}");
        }
        for &y in &[-30.0f64, -18.5, -17.5, -5.0, 0.0, 1.0, 3.0] {
            let x = y.exp();
            let direct = (-(-x).exp_m1()).ln();
            let got = ln_one_minus_exp_neg_exp(y);
            assert!(
                (got - direct).abs() <= 1e-12 * direct.abs().max(1.0),
                "y={y}"
            );
        }
    }

    #[test]
    fn ln_life_rate_deep_tail_stays_finite() {
        assert_eq!(ln_one_minus_exp_neg_exp(-1000.0), -1000.0);
        assert_eq!(
            ln_one_minus_exp_neg_exp(f64::NEG_INFINITY),
            f64::NEG_INFINITY
        );
        assert_eq!(ln_one_minus_exp_neg_exp(800.0), 0.0);
    }

    #[test]
    fn sig_formatting() {
        assert_eq!(format_sig(0.632_120_558_8, 6), "0.632121");
        assert_eq!(format_sig(0.051_293_294_4, 6), "0.0512933");
        assert_eq!(format_sig(7.694_0e-13, 6), "7.694e-13");
        assert_eq!(format_sig(2e22, 6), "2e22");
        assert_eq!(format_sig(100.0, 6), "100");
        assert_eq!(format_sig(0.0, 6), "0");
        assert_eq!(format_sig(-1.5, 3), "-1.5");
        assert_eq!(format_sig(999_999.7, 6), "1e6");
    }
}

/// Serde adapter for doubles that may be infinite: non-finite values are
/// written as the strings `"inf"`, `"-inf"` or `"nan"`.
pub mod nonfinite {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = f64;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                match v {
                    "inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    "nan" => Ok(f64::NAN),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}
