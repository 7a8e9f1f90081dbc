//! Expansion of parsed `{{convert}}` calls into quantity strings.
//!
//! Only a subset of the upstream template is reproduced: single values,
//! ranges and compound inputs; symbol or name display via `abbr`; precision
//! via `sigfig=` or a positional decimal-places argument. Everything else is
//! accepted and ignored.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::{format_rounded, group_thousands, places_for_sig_figs, Decimal};
use crate::units::{check_dimensions, ConvertError, UnitDef, UnitRegistry};
use crate::wikitext::{ConvertCall, ValueSpec};

pub const EN_DASH: char = '–';
const MINUS: char = '\u{2212}';

/// Smallest number of significant figures given to converted values.
pub const MIN_SIG_FIGS: u32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderingKind {
    InputOnly,
    OutputOnly,
    Combined,
}

impl RenderingKind {
    pub const ALL: [RenderingKind; 3] = [
        RenderingKind::InputOnly,
        RenderingKind::OutputOnly,
        RenderingKind::Combined,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RenderingKind::InputOnly => "input_only",
            RenderingKind::OutputOnly => "output_only",
            RenderingKind::Combined => "combined",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rendering {
    pub kind: RenderingKind,
    pub text: String,
}

/// The three renderings of one call.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Renderings {
    pub input_only: Rendering,
    pub output_only: Rendering,
    pub combined: Rendering,
}

impl Renderings {
    pub fn get(&self, kind: RenderingKind) -> &Rendering {
        match kind {
            RenderingKind::InputOnly => &self.input_only,
            RenderingKind::OutputOnly => &self.output_only,
            RenderingKind::Combined => &self.combined,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderingWeights {
    pub input_only: f64,
    pub output_only: f64,
    pub combined: f64,
}

impl Default for RenderingWeights {
    fn default() -> Self {
        RenderingWeights {
            input_only: 0.475,
            output_only: 0.475,
            combined: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("rendering weights must be non-negative and sum to 1 (got {0})")]
pub struct BadWeights(pub f64);

impl RenderingWeights {
    pub fn validate(&self) -> Result<(), BadWeights> {
        let w = [self.input_only, self.output_only, self.combined];
        let sum: f64 = w.iter().sum();
        if w.iter().any(|x| x.is_nan() || *x < 0.0) || libm::fabs(sum - 1.0) > 1e-9 {
            return Err(BadWeights(sum));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Display {
    Symbol,
    Name,
}

fn displays(call: &ConvertCall, input: &UnitDef) -> (Display, Display) {
    match call.option("abbr").map(str::trim) {
        Some("on") | Some("yes") => (Display::Symbol, Display::Symbol),
        Some("off") | Some("no") => (Display::Name, Display::Name),
        Some("in") => (Display::Symbol, Display::Name),
        Some("out") => (Display::Name, Display::Symbol),
        Some("values") => (Display::Symbol, Display::Symbol),
        // upstream default: spelled-out input, symbol output; temperatures
        // keep their symbols on both sides
        _ if input.dimension == "temperature" => (Display::Symbol, Display::Symbol),
        _ => (Display::Name, Display::Symbol),
    }
}

fn format_input_number(d: &Decimal) -> String {
    let repr = d.repr.trim();
    let (neg, body) = match repr.strip_prefix('-').or_else(|| repr.strip_prefix(MINUS)) {
        Some(rest) => (true, rest),
        None => (false, repr.trim_start_matches('+')),
    };
    let body = if body.contains(',') || body.contains(['e', 'E']) {
        body.to_string()
    } else {
        group_thousands(body)
    };
    if neg {
        let mut s = String::new();
        s.push(MINUS);
        s.push_str(&body);
        s
    } else {
        body
    }
}

fn format_output_number(x: f64, places: i32) -> String {
    let s = format_rounded(x, places);
    match s.strip_prefix('-') {
        Some(rest) => {
            let mut out = String::new();
            out.push(MINUS);
            out.push_str(rest);
            out
        }
        None => s,
    }
}

fn is_one(text: &str) -> bool {
    text == "1"
}

fn unit_text(unit: &UnitDef, display: Display, plural: bool) -> &str {
    match display {
        Display::Symbol => &unit.symbol,
        Display::Name => unit.name_for(plural),
    }
}

fn attach(number: &str, unit: &str) -> String {
    if unit.starts_with('/') || unit == "%" {
        alloc::format!("{number}{unit}")
    } else {
        alloc::format!("{number} {unit}")
    }
}

fn render_values(values: &[String], unit: &UnitDef, display: Display) -> String {
    let plural = !(values.len() == 1 && is_one(&values[0]));
    let mut nums = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            nums.push(EN_DASH);
        }
        nums.push_str(v);
    }
    attach(&nums, unit_text(unit, display, plural))
}

/// Decimal places for all converted values of one output unit.
fn output_places(
    call: &ConvertCall,
    input_values: &[&Decimal],
    converted: &[f64],
    affine: bool,
) -> i32 {
    if let Some(p) = call
        .option("precision")
        .and_then(|p| p.trim().parse::<i32>().ok())
    {
        return p;
    }
    let largest = converted
        .iter()
        .fold(0.0f64, |m, v| libm::fmax(m, libm::fabs(*v)));
    if let Some(sig) = call
        .option("sigfig")
        .and_then(|s| s.trim().parse::<u32>().ok())
    {
        if sig > 0 {
            return places_for_sig_figs(largest, sig);
        }
    }
    if affine {
        return input_values
            .iter()
            .map(|d| d.decimal_places() as i32)
            .max()
            .unwrap_or(0);
    }
    let sig = input_values
        .iter()
        .map(|d| d.sig_figs())
        .max()
        .unwrap_or(1)
        .max(MIN_SIG_FIGS);
    places_for_sig_figs(largest, sig)
}

/// Expand a call into its three renderings.
pub fn expand_convert(
    call: &ConvertCall,
    registry: &UnitRegistry,
) -> Result<Renderings, ConvertError> {
    let input = registry.lookup(&call.input_unit)?;
    let (in_display, out_display) = displays(call, input);

    // input side, plus values expressed in the input unit for conversion
    let (input_text, in_values, numbers): (String, Vec<f64>, Vec<&Decimal>) = match &call.value {
        ValueSpec::Single(d) => {
            let shown = format_input_number(d);
            (
                render_values(&[shown], input, in_display),
                alloc::vec![d.value],
                alloc::vec![d],
            )
        }
        ValueSpec::Range { lo, hi, .. } => {
            let shown = [format_input_number(lo), format_input_number(hi)];
            (
                render_values(&shown, input, in_display),
                alloc::vec![lo.value, hi.value],
                alloc::vec![lo, hi],
            )
        }
        ValueSpec::Compound(parts) => {
            let mut pieces = Vec::new();
            let mut base = 0.0;
            for (d, code) in parts {
                let unit = registry.lookup(code)?;
                check_dimensions(input, unit)?;
                let shown = format_input_number(d);
                pieces.push(render_values(&[shown], unit, in_display));
                base += d.value * unit.factor;
            }
            let total = (base - 0.0) / input.factor;
            (
                pieces.join(" "),
                alloc::vec![total],
                parts.iter().map(|(d, _)| d).collect(),
            )
        }
    };

    let default_output;
    let output_codes: Vec<&str> = if call.output_units.is_empty() {
        default_output = input.default_output.clone();
        alloc::vec![default_output.as_str()]
    } else {
        call.output_units.iter().map(String::as_str).collect()
    };

    let mut outputs = Vec::with_capacity(output_codes.len());
    for code in output_codes {
        let out = registry.lookup(code)?;
        check_dimensions(input, out)?;
        let affine = input.is_affine() || out.is_affine();
        let converted: Vec<f64> = in_values
            .iter()
            .map(|v| out.from_base(input.to_base(*v)))
            .collect();
        let places = output_places(call, &numbers, &converted, affine);
        let shown: Vec<String> = converted
            .iter()
            .map(|v| format_output_number(*v, places))
            .collect();
        outputs.push(render_values(&shown, out, out_display));
    }
    let output_text = outputs.join("; ");
    let combined = alloc::format!("{input_text} ({output_text})");
    Ok(Renderings {
        input_only: Rendering {
            kind: RenderingKind::InputOnly,
            text: input_text,
        },
        output_only: Rendering {
            kind: RenderingKind::OutputOnly,
            text: output_text,
        },
        combined: Rendering {
            kind: RenderingKind::Combined,
            text: combined,
        },
    })
}

/// Draw a rendering kind with one uniform variate.
pub fn pick_kind<R: Rng + ?Sized>(weights: &RenderingWeights, rng: &mut R) -> RenderingKind {
    let u: f64 = rng.random();
    if u < weights.input_only {
        RenderingKind::InputOnly
    } else if u < weights.input_only + weights.output_only {
        RenderingKind::OutputOnly
    } else {
        RenderingKind::Combined
    }
}

pub fn select_rendering<R: Rng + ?Sized>(
    renderings: &Renderings,
    weights: &RenderingWeights,
    rng: &mut R,
) -> Rendering {
    renderings.get(pick_kind(weights, rng)).clone()
}
