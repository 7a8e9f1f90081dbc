//! Decimal literals as written in markup, significant-figure bookkeeping and
//! the rounding/formatting used when rendering converted quantities.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// A numeric literal that remembers how it was written.
///
/// Precision decisions (significant figures, decimal places) are made from
/// the written form, never from the parsed `f64`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decimal {
    pub repr: String,
    pub value: f64,
}

impl Decimal {
    pub fn parse(s: &str) -> Option<Self> {
        let value = parse_number(s)?;
        Some(Decimal {
            repr: s.trim().to_string(),
            value,
        })
    }

    /// Significant figures of the written literal. Trailing zeros of an
    /// integer without a decimal point are not significant; zero itself
    /// counts as one figure.
    pub fn sig_figs(&self) -> u32 {
        sig_figs(&self.repr)
    }

    pub fn decimal_places(&self) -> u32 {
        decimal_places(&self.repr)
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.repr)
    }
}

fn digits_only(s: &str) -> (String, Option<usize>) {
    // digits of the mantissa and the index of the decimal point in that digit string
    let mut out = String::new();
    let mut point = None;
    for c in s.chars() {
        match c {
            '0'..='9' => out.push(c),
            '.' => point = Some(out.len()),
            'e' | 'E' => break,
            _ => {}
        }
    }
    (out, point)
}

pub fn sig_figs(repr: &str) -> u32 {
    let (digits, point) = digits_only(repr);
    let trimmed = digits.trim_start_matches('0');
    if trimmed.is_empty() {
        return 1;
    }
    match point {
        Some(_) => trimmed.len() as u32,
        None => trimmed.trim_end_matches('0').len().max(1) as u32,
    }
}

pub fn decimal_places(repr: &str) -> u32 {
    let (digits, point) = digits_only(repr);
    match point {
        Some(p) => (digits.len() - p) as u32,
        None => 0,
    }
}

/// Parse a plain numeral: optional sign (ASCII or U+2212), digits with
/// optional comma thousands separators, optional fraction, optional
/// exponent. Comma groups must be exactly three digits.
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    let (neg, body) = if let Some(rest) = s.strip_prefix('-') {
        (true, rest)
    } else if let Some(rest) = s.strip_prefix('\u{2212}') {
        (true, rest)
    } else if let Some(rest) = s.strip_prefix('+') {
        (false, rest)
    } else {
        (false, s)
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => {
            let exp: i32 = body[i + 1..].parse().ok()?;
            (&body[..i], exp)
        }
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], Some(&mantissa[i + 1..])),
        None => (mantissa, None),
    };
    if int_part.is_empty() && frac_part.is_none_or(str::is_empty) {
        return None;
    }
    let mut clean = String::new();
    if int_part.contains(',') {
        let mut groups = int_part.split(',');
        let first = groups.next()?;
        if first.is_empty() || first.len() > 3 || !first.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        clean.push_str(first);
        for g in groups {
            if g.len() != 3 || !g.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            clean.push_str(g);
        }
    } else {
        if !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        clean.push_str(int_part);
    }
    if let Some(frac) = frac_part {
        if !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        clean.push('.');
        clean.push_str(frac);
    }
    if clean.starts_with('.') {
        clean.insert(0, '0');
    }
    let mut v: f64 = clean.parse().ok()?;
    if exponent != 0 {
        v *= libm::pow(10.0, exponent as f64);
    }
    Some(if neg { -v } else { v })
}

/// Decimal places (possibly negative, meaning rounding to tens, hundreds…)
/// that leave `sig` significant figures on `magnitude`.
pub fn places_for_sig_figs(magnitude: f64, sig: u32) -> i32 {
    let m = libm::fabs(magnitude);
    if m == 0.0 || !m.is_finite() {
        return 0;
    }
    let exp = libm::floor(libm::log10(m)) as i32;
    sig as i32 - 1 - exp
}

/// Round half away from zero to `places` decimal places (negative places
/// round to powers of ten). Values within float noise of a tie count as the
/// tie, so 0.635 rounds to 0.64 although its binary value is slightly lower.
pub fn round_to_places(x: f64, places: i32) -> f64 {
    if places >= 0 {
        let scale = libm::pow(10.0, places as f64);
        round_half_away(x * scale) / scale
    } else {
        let scale = libm::pow(10.0, (-places) as f64);
        round_half_away(x / scale) * scale
    }
}

fn round_half_away(y: f64) -> f64 {
    let a = libm::fabs(y);
    let floor = libm::floor(a);
    let frac = a - floor;
    let tol = 64.0 * f64::EPSILON * libm::fmax(1.0, a);
    let r = if libm::fabs(frac - 0.5) <= tol || frac > 0.5 {
        floor + 1.0
    } else {
        floor
    };
    libm::copysign(r, y)
}

/// Render a rounded value with `places` decimals (clamped at zero) and
/// comma grouping of the integer part when it has more than four digits,
/// or exactly four digits and no fraction.
pub fn format_rounded(x: f64, places: i32) -> String {
    let r = round_to_places(x, places);
    let shown = places.max(0) as usize;
    let mut s = alloc::format!("{:.*}", shown, r);
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s.remove(0);
    }
    group_thousands(&s)
}

pub fn group_thousands(s: &str) -> String {
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", s),
    };
    let (int_part, frac) = match body.find('.') {
        Some(i) => (&body[..i], &body[i..]),
        None => (body, ""),
    };
    if int_part.len() < 4 || !int_part.bytes().all(|b| b.is_ascii_digit()) {
        return s.to_string();
    }
    let bytes: Vec<u8> = int_part.bytes().collect();
    let mut out = String::from(sign);
    for (i, b) in bytes.iter().enumerate() {
        if i > 0 && (bytes.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(*b as char);
    }
    out.push_str(frac);
    out
}

/// Whether two floats are equal up to a few ulps of relative error.
pub fn approx_eq(a: f64, b: f64) -> bool {
    if a == b {
        return true;
    }
    let scale = libm::fmax(libm::fabs(a), libm::fabs(b));
    libm::fabs(a - b) <= scale * 8.0 * f64::EPSILON
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grouped_and_signed_numbers() {
        assert_eq!(parse_number("17,257"), Some(17257.0));
        assert_eq!(parse_number("2,564"), Some(2564.0));
        assert_eq!(parse_number("-3.5"), Some(-3.5));
        assert_eq!(parse_number("\u{2212}40"), Some(-40.0));
        assert_eq!(parse_number("1.5e3"), Some(1500.0));
        assert_eq!(parse_number(".5"), Some(0.5));
        assert_eq!(parse_number("12,34"), None);
        assert_eq!(parse_number("abc"), None);
        assert_eq!(parse_number(""), None);
    }

    #[test]
    fn significant_figures() {
        assert_eq!(sig_figs("11"), 2);
        assert_eq!(sig_figs("60"), 1);
        assert_eq!(sig_figs("62.5"), 3);
        assert_eq!(sig_figs("0.050"), 2);
        assert_eq!(sig_figs("0"), 1);
        assert_eq!(sig_figs("1,200"), 2);
        assert_eq!(decimal_places("62.5"), 1);
        assert_eq!(decimal_places("60"), 0);
    }

    #[test]
    fn rounding_and_grouping() {
        assert_eq!(format_rounded(39.6, places_for_sig_figs(39.6, 2)), "40");
        assert_eq!(format_rounded(196.85, 0), "197");
        assert_eq!(format_rounded(1234.5, 0), "1,235");
        assert_eq!(format_rounded(0.6350, 2), "0.64");
        assert_eq!(format_rounded(-0.001, 0), "0");
        assert_eq!(format_rounded(0.6096 + 0.0254, 2), "0.64");
        assert_eq!(format_rounded(-2.5, 0), "-3");
        assert_eq!(format_rounded(1234.0, -2), "1,200");
        assert_eq!(group_thousands("1234567.25"), "1,234,567.25");
        assert_eq!(group_thousands("999"), "999");
    }
}
