//! MediaWiki markup to plain text, keeping `{{convert}}` calls as
//! placeholders.
//!
//! The scanner is tolerant: unbalanced braces and brackets are emitted as
//! text rather than rejected. Templates other than `{{convert}}` (and its
//! `{{cvt}}` alias) are dropped wholesale, which also removes infoboxes and
//! sidebars. Each surviving convert call becomes one [`PLACEHOLDER`]
//! character in the output text.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Decimal;

/// Private-use character standing in for one convert call.
pub const PLACEHOLDER: char = '\u{E000}';

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Simple,
}

impl Language {
    pub fn as_str(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Simple => "simple",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PageSource {
    pub page_id: String,
    pub title: String,
    pub language: Language,
    pub markup: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeSeparator {
    Dash,
    To,
    By,
    And,
    X,
}

impl RangeSeparator {
    fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "-" | "–" | "—" | "to(-)" => Some(RangeSeparator::Dash),
            "to" => Some(RangeSeparator::To),
            "by" => Some(RangeSeparator::By),
            "and" | "and(-)" | "&" => Some(RangeSeparator::And),
            "x" | "×" => Some(RangeSeparator::X),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ValueSpec {
    Single(Decimal),
    Range {
        lo: Decimal,
        hi: Decimal,
        separator: RangeSeparator,
    },
    Compound(Vec<(Decimal, String)>),
}

impl ValueSpec {
    pub fn values(&self) -> Vec<&Decimal> {
        match self {
            ValueSpec::Single(d) => alloc::vec![d],
            ValueSpec::Range { lo, hi, .. } => alloc::vec![lo, hi],
            ValueSpec::Compound(parts) => parts.iter().map(|(d, _)| d).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvertCall {
    pub raw_args: Vec<String>,
    pub value: ValueSpec,
    /// Input unit code; for compound values, the unit of the first part.
    pub input_unit: String,
    /// Empty means "use the registry default for the input unit".
    pub output_units: Vec<String>,
    pub options: BTreeMap<String, String>,
}

impl ConvertCall {
    pub fn option(&self, key: &str) -> Option<&str> {
        self.options.get(key).map(String::as_str)
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("malformed convert template `{raw}`: {reason}")]
pub struct MalformedTemplate {
    pub raw: String,
    pub reason: &'static str,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StrippedPage {
    pub text: String,
    /// Byte offset of each placeholder in `text`, with its parsed call.
    pub calls: Vec<(usize, ConvertCall)>,
    /// Convert calls that could not be parsed and were skipped.
    pub malformed: Vec<MalformedTemplate>,
    /// Convert calls dropped because they pull values from Wikidata.
    pub wikidata_dropped: usize,
}

const DROPPED_TAGS: &[&str] = &[
    "ref",
    "math",
    "gallery",
    "timeline",
    "syntaxhighlight",
    "source",
    "score",
    "imagemap",
    "chem",
    "ce",
    "templatedata",
    "graph",
    "mapframe",
    "references",
];

const DROPPED_NAMESPACES: &[&str] = &[
    "file",
    "image",
    "category",
    "media",
    "wikt",
    "wiktionary",
    "template",
    "help",
    "wikipedia",
    "wp",
    "special",
    "portal",
    "commons",
    "s",
    "q",
    "n",
    "b",
    "v",
];

/// Strip markup from a page, returning plain text with convert placeholders.
pub fn strip_markup(page: &PageSource) -> StrippedPage {
    strip_text(&page.markup)
}

/// Strip markup from raw wikitext.
pub fn strip_text(markup: &str) -> StrippedPage {
    let mut state = Scanner {
        src: markup,
        out: String::with_capacity(markup.len()),
        calls: Vec::new(),
        malformed: Vec::new(),
        wikidata_dropped: 0,
    };
    state.run(0, markup.len());
    let cleaned = tidy_whitespace(&state.out);
    let mut calls = Vec::with_capacity(state.calls.len());
    let mut pending = state.calls.into_iter();
    for (i, c) in cleaned.char_indices() {
        if c == PLACEHOLDER {
            if let Some(call) = pending.next() {
                calls.push((i, call));
            }
        }
    }
    StrippedPage {
        text: cleaned,
        calls,
        malformed: state.malformed,
        wikidata_dropped: state.wikidata_dropped,
    }
}

struct Scanner<'a> {
    src: &'a str,
    out: String,
    calls: Vec<ConvertCall>,
    malformed: Vec<MalformedTemplate>,
    wikidata_dropped: usize,
}

impl<'a> Scanner<'a> {
    fn run(&mut self, start: usize, end: usize) {
        let src = self.src;
        let bytes = src.as_bytes();
        let mut i = start;
        let mut at_line_start = start == 0 || bytes.get(start.wrapping_sub(1)) == Some(&b'\n');
        while i < end {
            let rest = &src[i..end];
            if at_line_start {
                at_line_start = false;
                if rest.starts_with('=') {
                    // heading line
                    i = line_end(src, i, end);
                    continue;
                }
                if rest.starts_with("{|") {
                    i = skip_table(src, i, end);
                    continue;
                }
                let markers = rest
                    .bytes()
                    .take_while(|b| matches!(b, b'*' | b'#' | b':' | b';'))
                    .count();
                if markers > 0 {
                    i += markers;
                    continue;
                }
            }
            if rest.starts_with("<!--") {
                i = match rest.find("-->") {
                    Some(p) => i + p + 3,
                    None => end,
                };
                continue;
            }
            if rest.starts_with('<') {
                if let Some(next) = self.tag(i, end) {
                    i = next;
                    continue;
                }
            }
            if rest.starts_with("{{") {
                match matching_close(src, i, end, "{{", "}}") {
                    Some(close) => {
                        self.template(&src[i + 2..close]);
                        i = close + 2;
                    }
                    None => {
                        // unbalanced: drop the braces, keep scanning
                        i += 2;
                    }
                }
                continue;
            }
            if rest.starts_with("[[") {
                match matching_close(src, i, end, "[[", "]]") {
                    Some(close) => {
                        self.link(i + 2, close);
                        i = close + 2;
                    }
                    None => {
                        i += 2;
                    }
                }
                continue;
            }
            if rest.starts_with('[') && is_external_link(&rest[1..]) {
                if let Some(close) = rest.find(']') {
                    let inner = &rest[1..close];
                    if let Some(sp) = inner.find(' ') {
                        let label_start = i + 1 + sp + 1;
                        self.run(label_start, i + close);
                    }
                    i += close + 1;
                    continue;
                }
            }
            if rest.starts_with("'''''") {
                i += 5;
                continue;
            }
            if rest.starts_with("'''") {
                i += 3;
                continue;
            }
            if rest.starts_with("''") {
                i += 2;
                continue;
            }
            if rest.starts_with("__") {
                if let Some(len) = magic_word(rest) {
                    i += len;
                    continue;
                }
            }
            if rest.starts_with('&') {
                if let Some((text, len)) = entity(rest) {
                    self.out.push_str(text);
                    i += len;
                    continue;
                }
            }
            let c = rest.chars().next().expect("non-empty");
            if c == '\n' {
                at_line_start = true;
            }
            if c != PLACEHOLDER {
                self.out.push(c);
            }
            i += c.len_utf8();
        }
    }

    /// Handle an HTML-ish tag at `i`. Returns the index after what was
    /// consumed, or `None` when the `<` is plain text.
    fn tag(&mut self, i: usize, end: usize) -> Option<usize> {
        let rest = &self.src[i..end];
        let close_angle = rest.find('>')?;
        let inner = &rest[1..close_angle];
        let closing = inner.starts_with('/');
        let name: String = inner
            .trim_start_matches('/')
            .chars()
            .take_while(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        if name.is_empty() {
            return None;
        }
        let self_closing = inner.ends_with('/');
        let after = i + close_angle + 1;
        if !closing && !self_closing && DROPPED_TAGS.contains(&name.as_str()) {
            let closer = alloc::format!("</{}", name);
            let lower = self.src[after..end].to_ascii_lowercase();
            return Some(match lower.find(&closer) {
                Some(p) => {
                    let tail = &self.src[after + p..end];
                    after + p + tail.find('>').map_or(tail.len(), |q| q + 1)
                }
                None => end,
            });
        }
        if name == "br" {
            self.out.push(' ');
        }
        Some(after)
    }

    fn template(&mut self, body: &str) {
        let args = split_top_level(body, '|');
        let name = args.first().map(|s| s.trim()).unwrap_or("");
        let lname = name.to_lowercase();
        let is_cvt = lname == "cvt";
        if lname != "convert" && !is_cvt {
            return;
        }
        let args: Vec<String> = args[1..].iter().map(|s| s.to_string()).collect();
        if references_wikidata(&args) {
            self.wikidata_dropped += 1;
            return;
        }
        match parse_convert(&args) {
            Ok(mut call) => {
                if is_cvt {
                    call.options
                        .entry("abbr".into())
                        .or_insert_with(|| "on".into());
                }
                self.calls.push(call);
                self.out.push(PLACEHOLDER);
            }
            Err(e) => self.malformed.push(e),
        }
    }

    fn link(&mut self, start: usize, close: usize) {
        let inner = &self.src[start..close];
        let target = inner.split('|').next().unwrap_or("").trim();
        if let Some(colon) = target.find(':') {
            let ns = target[..colon].trim().to_lowercase();
            let is_lang =
                ns.len() >= 2 && ns.len() <= 3 && ns.chars().all(|c| c.is_ascii_lowercase());
            if DROPPED_NAMESPACES.contains(&ns.as_str())
                || (is_lang && !target[colon + 1..].starts_with(' '))
            {
                return;
            }
        }
        match inner.rfind('|') {
            Some(p) if split_top_level(inner, '|').len() > 1 => {
                let label_start = start + p + 1;
                if label_start < close {
                    self.run(label_start, close);
                } else {
                    // pipe trick: [[Bern (city)|]] shows "Bern"
                    let t = target.split(" (").next().unwrap_or(target);
                    self.out.push_str(t);
                }
            }
            _ => {
                let t = target.trim_start_matches(':');
                self.out.push_str(t.split('#').next().unwrap_or(t));
            }
        }
    }
}

fn line_end(src: &str, i: usize, end: usize) -> usize {
    src[i..end].find('\n').map_or(end, |p| i + p)
}

fn skip_table(src: &str, i: usize, end: usize) -> usize {
    let mut depth = 0usize;
    let mut j = i;
    while j < end {
        let rest = &src[j..end];
        if rest.starts_with("{|") {
            depth += 1;
            j += 2;
        } else if rest.starts_with("|}") {
            depth -= 1;
            j += 2;
            if depth == 0 {
                return j;
            }
        } else {
            j += rest.chars().next().map_or(1, char::len_utf8);
        }
    }
    end
}

/// Index of the closer matching the opener at `i`, honouring nesting.
fn matching_close(src: &str, i: usize, end: usize, open: &str, close: &str) -> Option<usize> {
    let mut depth = 0usize;
    let mut j = i;
    while j < end {
        let rest = &src[j..end];
        if rest.starts_with(open) {
            depth += 1;
            j += open.len();
        } else if rest.starts_with(close) {
            depth -= 1;
            if depth == 0 {
                return Some(j);
            }
            j += close.len();
        } else {
            j += rest.chars().next().map_or(1, char::len_utf8);
        }
    }
    None
}

/// Split on `sep` outside nested `{{…}}` and `[[…]]`.
pub fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut last = 0;
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let two = &s[i..s.len().min(i + 2)];
        if two == "{{" || two == "[[" {
            depth += 1;
            i += 2;
            continue;
        }
        if (two == "}}" || two == "]]") && depth > 0 {
            depth -= 1;
            i += 2;
            continue;
        }
        let c = s[i..].chars().next().expect("in bounds");
        if c == sep && depth == 0 {
            parts.push(&s[last..i]);
            last = i + c.len_utf8();
        }
        i += c.len_utf8();
    }
    parts.push(&s[last..]);
    parts
}

fn is_external_link(s: &str) -> bool {
    ["http://", "https://", "//", "ftp://"]
        .iter()
        .any(|p| s.starts_with(p))
}

fn magic_word(s: &str) -> Option<usize> {
    let body = &s[2..];
    let len = body
        .bytes()
        .take_while(|b| b.is_ascii_uppercase() || *b == b'_')
        .count();
    let word = &body[..len];
    if word.len() > 2 && word.ends_with("__") {
        Some(2 + len)
    } else {
        None
    }
}

fn entity(s: &str) -> Option<(&'static str, usize)> {
    const TABLE: &[(&str, &str)] = &[
        ("&nbsp;", " "),
        ("&thinsp;", " "),
        ("&ensp;", " "),
        ("&emsp;", " "),
        ("&ndash;", "–"),
        ("&mdash;", "—"),
        ("&minus;", "−"),
        ("&times;", "×"),
        ("&plusmn;", "±"),
        ("&deg;", "°"),
        ("&amp;", "&"),
        ("&lt;", "<"),
        ("&gt;", ">"),
        ("&quot;", "\""),
        ("&apos;", "'"),
        ("&#160;", " "),
        ("&#8211;", "–"),
    ];
    TABLE
        .iter()
        .find(|(k, _)| s.starts_with(k))
        .map(|(k, v)| (*v, k.len()))
}

/// Collapse runs of spaces, trim each line, drop blank lines.
fn tidy_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for line in s.lines() {
        let mut prev_space = true;
        let mut buf = String::new();
        for c in line.chars() {
            if c == ' ' || c == '\t' || c == '\u{a0}' {
                if !prev_space {
                    buf.push(' ');
                }
                prev_space = true;
            } else {
                buf.push(c);
                prev_space = false;
            }
        }
        let t = buf.trim_end();
        // stray space before punctuation left behind by removed references
        let t = fix_space_before_punct(t);
        if !t.is_empty() {
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(&t);
        }
    }
    out
}

fn fix_space_before_punct(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let chars: Vec<char> = s.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if c == ' ' {
            if let Some(&n) = chars.get(i + 1) {
                if matches!(n, '.' | ',' | ';' | ':')
                    && chars.get(i + 2).is_none_or(|c| c.is_whitespace())
                {
                    continue;
                }
            }
        }
        out.push(c);
    }
    out
}

fn references_wikidata(args: &[String]) -> bool {
    args.iter().any(|a| {
        let t = a.trim();
        let lower = t.to_lowercase();
        lower.starts_with("input=")
            || lower.contains("wikidata")
            || lower.contains("#property")
            || lower.contains("#statements")
    })
}

fn split_option(arg: &str) -> Option<(String, String)> {
    let eq = arg.find('=')?;
    let key = arg[..eq].trim();
    if key.is_empty()
        || !key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return None;
    }
    Some((key.to_string(), arg[eq + 1..].trim().to_string()))
}

/// Split "60-62.5" style ranges written in one argument.
fn inline_range(s: &str) -> Option<(Decimal, Decimal)> {
    for (i, c) in s.char_indices() {
        if (c == '-' || c == '–') && i > 0 {
            let lo = Decimal::parse(&s[..i])?;
            let hi = Decimal::parse(&s[i + c.len_utf8()..])?;
            return Some((lo, hi));
        }
    }
    None
}

fn is_unitish(s: &str) -> bool {
    let t = s.trim();
    !t.is_empty() && Decimal::parse(t).is_none() && RangeSeparator::parse(t).is_none()
}

/// Parse the argument list of a convert call (template name excluded).
pub fn parse_convert(args: &[String]) -> Result<ConvertCall, MalformedTemplate> {
    let raw = args.join("|");
    let bad = |reason| MalformedTemplate {
        raw: raw.clone(),
        reason,
    };
    let mut options = BTreeMap::new();
    let mut positional: Vec<&str> = Vec::new();
    for a in args {
        match split_option(a) {
            Some((k, v)) => {
                options.insert(k, v);
            }
            None => positional.push(a.trim()),
        }
    }
    while positional.last() == Some(&"") {
        positional.pop();
    }
    if positional.is_empty() {
        return Err(bad("no value"));
    }
    if positional.len() < 2 {
        return Err(bad("no input unit"));
    }
    let first = positional[0];
    let mut idx;
    let value;
    let input_unit;
    if let Some(d) = Decimal::parse(first) {
        if positional.len() >= 4 {
            if let Some(sep) = RangeSeparator::parse(positional[1]) {
                let hi = Decimal::parse(positional[2]).ok_or_else(|| bad("bad range end"))?;
                value = ValueSpec::Range {
                    lo: d,
                    hi,
                    separator: sep,
                };
                input_unit = positional[3].to_string();
                idx = 4;
                return finish(raw, args, value, input_unit, &positional[idx..], options);
            }
        }
        // compound: value unit value unit …
        if positional.len() >= 4
            && is_unitish(positional[1])
            && Decimal::parse(positional[2]).is_some()
            && is_unitish(positional[3])
        {
            let mut parts = Vec::new();
            idx = 0;
            while idx + 1 < positional.len() {
                match (
                    Decimal::parse(positional[idx]),
                    is_unitish(positional[idx + 1]),
                ) {
                    (Some(v), true) => {
                        parts.push((v, positional[idx + 1].to_string()));
                        idx += 2;
                    }
                    _ => break,
                }
            }
            input_unit = parts[0].1.clone();
            value = ValueSpec::Compound(parts);
            return finish(raw, args, value, input_unit, &positional[idx..], options);
        }
        value = ValueSpec::Single(d);
    } else if let Some((lo, hi)) = inline_range(first) {
        value = ValueSpec::Range {
            lo,
            hi,
            separator: RangeSeparator::Dash,
        };
    } else {
        return Err(bad("value is not a number"));
    }
    if !is_unitish(positional[1]) {
        return Err(bad("no input unit"));
    }
    input_unit = positional[1].to_string();
    idx = 2;
    finish(raw, args, value, input_unit, &positional[idx..], options)
}

fn finish(
    _raw: String,
    args: &[String],
    value: ValueSpec,
    input_unit: String,
    rest: &[&str],
    mut options: BTreeMap<String, String>,
) -> Result<ConvertCall, MalformedTemplate> {
    let mut output_units = Vec::new();
    let mut rest = rest.iter();
    if let Some(out) = rest.next() {
        if !out.is_empty() {
            output_units = out
                .split('+')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
        }
    }
    if let Some(prec) = rest.next() {
        if prec.parse::<i32>().is_ok() {
            options
                .entry("precision".into())
                .or_insert_with(|| prec.to_string());
        }
    }
    Ok(ConvertCall {
        raw_args: args.to_vec(),
        value,
        input_unit,
        output_units,
        options,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn page(markup: &str) -> PageSource {
        PageSource {
            page_id: "1".into(),
            title: "T".into(),
            language: Language::En,
            markup: markup.into(),
        }
    }

    #[test]
    fn convert_call_becomes_placeholder() {
        let s = strip_markup(&page("Speed of {{convert|11|m/s|km/h|abbr=on}} over land"));
        assert_eq!(s.text, "Speed of \u{E000} over land");
        assert_eq!(s.calls.len(), 1);
        let (off, call) = &s.calls[0];
        assert_eq!(&s.text[*off..*off + 3], "\u{E000}");
        assert_eq!(call.value, ValueSpec::Single(Decimal::parse("11").unwrap()));
        assert_eq!(call.input_unit, "m/s");
        assert_eq!(call.output_units, ["km/h"]);
        assert_eq!(call.option("abbr"), Some("on"));
    }

    #[test]
    fn plain_text_is_identity() {
        let text = "The river is long. It flows north.";
        let s = strip_markup(&page(text));
        assert_eq!(s.text, text);
        assert!(s.calls.is_empty());
    }

    #[test]
    fn comments_and_piped_links() {
        assert_eq!(
            strip_markup(&page("<!--c--> A [[Bern|city]]")).text,
            "A city"
        );
        assert_eq!(strip_markup(&page("[[Bern]]ese")).text, "Bernese");
    }

    #[test]
    fn refs_infoboxes_files_categories() {
        let m = "{{Infobox river\n| name = X\n| length = {{convert|5|km}}\n}}\nThe X is a river.<ref name=a>Source {{cite web|url=x}}</ref> It is {{convert|5|km|mi}} long.<ref name=a/>\n[[File:X.jpg|thumb|A [[river]]]]\n[[Category:Rivers]]";
        let s = strip_markup(&page(m));
        assert_eq!(s.text, "The X is a river. It is \u{E000} long.");
        assert_eq!(s.calls.len(), 1);
    }

    #[test]
    fn bold_headings_entities_and_external_links() {
        let m = "== History ==\n'''Bern''' is a&nbsp;city, see [https://example.org the site].";
        assert_eq!(strip_markup(&page(m)).text, "Bern is a city, see the site.");
    }

    #[test]
    fn unbalanced_braces_are_tolerated() {
        let s = strip_markup(&page("A {{convert|3|m and then nothing"));
        assert!(s.text.starts_with("A convert|3|m"));
        assert!(s.calls.is_empty());
    }

    #[test]
    fn wikidata_calls_are_dropped() {
        let s = strip_markup(&page("Height {{convert|input=P2048|m|ft}} here."));
        assert_eq!(s.text, "Height here.");
        assert!(s.calls.is_empty());
        assert_eq!(s.wikidata_dropped, 1);
    }

    #[test]
    fn malformed_call_is_skipped() {
        let s = strip_markup(&page("It is {{convert|about|m}} high."));
        assert!(s.calls.is_empty());
        assert_eq!(s.malformed.len(), 1);
        assert_eq!(s.text, "It is high.");
    }

    #[test]
    fn range_forms() {
        let args = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let c = parse_convert(&args(&["60-62.5", "m", "ft+royal cubit"])).unwrap();
        match &c.value {
            ValueSpec::Range { lo, hi, separator } => {
                assert_eq!(lo.repr, "60");
                assert_eq!(hi.repr, "62.5");
                assert_eq!(*separator, RangeSeparator::Dash);
            }
            v => panic!("{v:?}"),
        }
        assert_eq!(c.output_units, ["ft", "royal cubit"]);
        let c = parse_convert(&args(&["5", "to", "10", "km", "mi"])).unwrap();
        assert!(matches!(
            c.value,
            ValueSpec::Range {
                separator: RangeSeparator::To,
                ..
            }
        ));
        assert_eq!(c.input_unit, "km");
        let c = parse_convert(&args(&["-5", "C", "F"])).unwrap();
        assert!(matches!(c.value, ValueSpec::Single(ref d) if d.value == -5.0));
    }

    #[test]
    fn compound_and_options() {
        let args: Vec<String> = ["2", "ft", "1", "in", "m", "abbr=off", "sigfig=3", "lk=on"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let c = parse_convert(&args).unwrap();
        match &c.value {
            ValueSpec::Compound(parts) => assert_eq!(parts.len(), 2),
            v => panic!("{v:?}"),
        }
        assert_eq!(c.output_units, ["m"]);
        assert_eq!(c.option("sigfig"), Some("3"));
        // unknown options are kept
        assert_eq!(c.option("lk"), Some("on"));
    }

    #[test]
    fn placeholders_map_one_to_one() {
        let m = "A {{convert|1|m}} B {{cvt|2|km}} C {{foo}} D {{convert|3|kg|lb}}.";
        let s = strip_markup(&page(m));
        let n = s.text.chars().filter(|&c| c == PLACEHOLDER).count();
        assert_eq!(n, s.calls.len());
        assert_eq!(n, 3);
        assert_eq!(s.calls[1].1.option("abbr"), Some("on"));
    }
}
