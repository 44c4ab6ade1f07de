//! Exact text form of `f64` in C99 `%a` style, e.g. `0x1.8p+1` for 3.

use crate::error::{Error, Result};

const MANT_BITS: u32 = 52;
const EXP_BIAS: i32 = 1023;

pub fn to_hex(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    let sign = if x.is_sign_negative() { "-" } else { "" };
    if x.is_infinite() {
        return format!("{sign}inf");
    }
    let bits = x.to_bits();
    let exp_field = ((bits >> MANT_BITS) & 0x7ff) as i32;
    let mant = bits & ((1u64 << MANT_BITS) - 1);
    if exp_field == 0 && mant == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if exp_field == 0 { (0, 1 - EXP_BIAS) } else { (1, exp_field - EXP_BIAS) };
    let mut frac = format!("{mant:013x}");
    while frac.ends_with('0') {
        frac.pop();
    }
    let dot = if frac.is_empty() { String::new() } else { format!(".{frac}") };
    let esign = if exp >= 0 { "+" } else { "-" };
    format!("{sign}0x{lead}{dot}p{esign}{}", exp.unsigned_abs())
}

pub fn from_hex(s: &str) -> Result<f64> {
    let bad = || Error::HexFloat(s.to_string());
    let t = s.trim();
    let (neg, body) = match t.as_bytes().first() {
        Some(b'-') => (true, &t[1..]),
        Some(b'+') => (false, &t[1..]),
        _ => (false, t),
    };
    let apply = |v: f64| if neg { -v } else { v };
    match body {
        "inf" | "infinity" => return Ok(apply(f64::INFINITY)),
        "nan" => return Ok(f64::NAN),
        _ => {}
    }
    let body = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")).ok_or_else(bad)?;
    let (digits, exp) = body.split_once(['p', 'P']).ok_or_else(bad)?;
    let exp: i32 = exp.parse().map_err(|_| bad())?;
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    let mut mant: u64 = 0;
    let mut shift: i32 = 0;
    for (i, c) in int_part.chars().chain(frac_part.chars()).enumerate() {
        let d = c.to_digit(16).ok_or_else(bad)? as u64;
        if mant >> 59 != 0 {
            if d != 0 {
                return Err(bad());
            }
            if i < int_part.len() {
                shift += 4;
            }
            continue;
        }
        mant = (mant << 4) | d;
        if i >= int_part.len() {
            shift -= 4;
        }
    }
    if mant == 0 {
        return Ok(apply(0.0));
    }
    // only exactly representable significands are accepted
    if 64 - mant.leading_zeros() - mant.trailing_zeros() > 53 {
        return Err(bad());
    }
    Ok(apply(ldexp(mant, exp.saturating_add(shift))))
}

/// `2^k` for `k ∈ [−1074, 1023]`.
fn pow2(k: i32) -> f64 {
    if k >= -1022 {
        f64::from_bits(((k + EXP_BIAS) as u64) << MANT_BITS)
    } else {
        f64::from_bits(1u64 << (k + 1074))
    }
}

/// `m · 2^e` for `m > 0` with at most 53 significant bits, rounded once.
fn ldexp(m: u64, e: i32) -> f64 {
    let top = 63 - m.leading_zeros() as i32;
    // exact: x ∈ [1, 2)
    let x = m as f64 * pow2(-top);
    let e = e.saturating_add(top);
    if e > 1023 {
        f64::INFINITY
    } else if e >= -1022 {
        x * pow2(e)
    } else if e + 1022 >= -1074 {
        x * pow2(-1022) * pow2(e + 1022)
    } else {
        0.0
    }
}
