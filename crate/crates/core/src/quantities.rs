//! Quantity-span examples built from expanded convert calls: completeness
//! filter, synthetic citations, long-example splitting and curation fixes.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convert::{expand_convert, select_rendering, RenderingWeights};
use crate::lingo::{
    digit_residue, find_numbers, LingAnnotation, LingProvider, SentenceSplitter, WHITELISTED_NER,
};
use crate::rng::stage_rng;
use crate::units::UnitRegistry;
use crate::wikitext::{strip_markup, Language, PageSource, PLACEHOLDER};

/// A quantity annotation as byte offsets into its sentence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuantitySpan {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

impl QuantitySpan {
    pub fn new(sentence: &str, start: usize, end: usize) -> Self {
        QuantitySpan {
            start,
            end,
            text: sentence[start..end].to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub sentence: String,
    pub spans: Vec<QuantitySpan>,
    pub page_id: String,
    pub language: Language,
    pub curated: bool,
}

impl AnnotatedSentence {
    /// Check offsets, slice equality, ordering and disjointness.
    pub fn spans_valid(&self) -> bool {
        let mut prev_end = 0;
        for s in &self.spans {
            if s.start >= s.end
                || s.end > self.sentence.len()
                || s.start < prev_end
                || !self.sentence.is_char_boundary(s.start)
                || !self.sentence.is_char_boundary(s.end)
                || self.sentence[s.start..s.end] != s.text
            {
                return false;
            }
            prev_end = s.end;
        }
        true
    }

    fn resync(&mut self) {
        for s in &mut self.spans {
            s.text = self.sentence[s.start..s.end].to_string();
        }
    }
}

pub const MIN_SENTENCE_CHARS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    TooShort,
    PerOutsideSpan,
    NumberOutsideSpan,
}

impl Rejection {
    pub fn as_str(self) -> &'static str {
        match self {
            Rejection::TooShort => "too_short",
            Rejection::PerOutsideSpan => "per_outside_span",
            Rejection::NumberOutsideSpan => "number_outside_span",
        }
    }
}

fn in_whitelisted_ner(ann: &LingAnnotation, tok_start: usize, tok_end: usize) -> bool {
    ann.ner.iter().any(|s| {
        s.start <= tok_start && tok_end <= s.end && WHITELISTED_NER.contains(&s.label.as_str())
    })
}

/// Keep a sentence only if every number in it is annotated (or part of a
/// whitelisted named entity), "per" does not follow a span, and it is long
/// enough.
pub fn filter_sentence(
    sentence: &str,
    spans: &[QuantitySpan],
    ann: &LingAnnotation,
) -> Result<(), Rejection> {
    if sentence.chars().count() < MIN_SENTENCE_CHARS {
        return Err(Rejection::TooShort);
    }
    let covered = |a: usize, b: usize| spans.iter().any(|s| s.start <= a && b <= s.end);
    for i in 0..ann.len() {
        let (a, b) = ann.tokens[i];
        if ann.token_text(sentence, i).eq_ignore_ascii_case("per") && !covered(a, b) {
            return Err(Rejection::PerOutsideSpan);
        }
    }
    let mentions = find_numbers(sentence, ann);
    for m in &mentions {
        if !covered(m.start, m.end) && !in_whitelisted_ner(ann, m.tok_start, m.tok_end) {
            return Err(Rejection::NumberOutsideSpan);
        }
    }
    for (a, b) in digit_residue(sentence, ann, &mentions) {
        let tok = ann.token_at(a);
        let whitelisted = tok.is_some_and(|t| in_whitelisted_ner(ann, t, t + 1));
        if !covered(a, b) && !whitelisted {
            return Err(Rejection::NumberOutsideSpan);
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CitationStyle {
    Numeric,
    AuthorYear,
    Figure,
    Table,
    Superscript,
}

impl CitationStyle {
    pub const ALL: [CitationStyle; 5] = [
        CitationStyle::Numeric,
        CitationStyle::AuthorYear,
        CitationStyle::Figure,
        CitationStyle::Table,
        CitationStyle::Superscript,
    ];

    /// Figure and table references, as opposed to bibliographic citations.
    pub fn is_reference(self) -> bool {
        matches!(self, CitationStyle::Figure | CitationStyle::Table)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CitationConfig {
    /// Fraction of sentences that receive a citation.
    pub rate: f64,
    pub numeric: f64,
    pub author_year: f64,
    pub figure: f64,
    pub table: f64,
    pub superscript: f64,
    /// Probability of parentheses (else brackets) per style.
    pub paren_numeric: f64,
    pub paren_author_year: f64,
    pub paren_reference: f64,
    pub prefix_probability: f64,
    /// Probability that a bibliographic citation follows the final period.
    pub after_period: f64,
}

impl Default for CitationConfig {
    fn default() -> Self {
        CitationConfig {
            rate: 0.15,
            numeric: 0.5,
            author_year: 0.2,
            figure: 0.15,
            table: 0.1,
            superscript: 0.05,
            paren_numeric: 0.2,
            paren_author_year: 0.8,
            paren_reference: 0.8,
            prefix_probability: 0.3,
            after_period: 0.05,
        }
    }
}

impl CitationConfig {
    pub fn disabled() -> Self {
        CitationConfig {
            rate: 0.0,
            ..Self::default()
        }
    }

    fn style_weight(&self, s: CitationStyle) -> f64 {
        match s {
            CitationStyle::Numeric => self.numeric,
            CitationStyle::AuthorYear => self.author_year,
            CitationStyle::Figure => self.figure,
            CitationStyle::Table => self.table,
            CitationStyle::Superscript => self.superscript,
        }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        let probs = [
            self.rate,
            self.paren_numeric,
            self.paren_author_year,
            self.paren_reference,
            self.prefix_probability,
            self.after_period,
        ];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err("citation probabilities must lie in [0, 1]");
        }
        let weights: Vec<f64> = CitationStyle::ALL
            .iter()
            .map(|s| self.style_weight(*s))
            .collect();
        if weights.iter().any(|w| *w < 0.0) || weights.iter().sum::<f64>() <= 0.0 {
            return Err("citation style weights must be non-negative with a positive sum");
        }
        Ok(())
    }
}

const SURNAMES: &[&str] = &[
    "Einstein",
    "Smith",
    "Müller",
    "Garcia",
    "Chen",
    "Nakamura",
    "Okafor",
    "Ivanova",
    "Rossi",
    "Dubois",
    "Kowalski",
    "Andersson",
    "Silva",
    "Patel",
    "Kim",
    "Novak",
    "Jensen",
    "Schmidt",
    "Nguyen",
    "Cohen",
];

const ROMAN: &[&str] = &["I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X"];

fn pick<'a, R: Rng + ?Sized>(rng: &mut R, items: &[&'a str]) -> &'a str {
    items[rng.random_range(0..items.len())]
}

fn citation_body<R: Rng + ?Sized>(style: CitationStyle, rng: &mut R) -> String {
    match style {
        CitationStyle::Numeric => {
            let a = rng.random_range(1..=60u32);
            match rng.random_range(0..3u8) {
                0 => alloc::format!("{a}"),
                1 => alloc::format!("{a}, {}", a + rng.random_range(1..=9u32)),
                _ => alloc::format!("{a}–{}", a + rng.random_range(1..=4u32)),
            }
        }
        CitationStyle::Superscript => {
            let a = rng.random_range(1..=40u32);
            alloc::format!("{a}-{}", a + rng.random_range(1..=3u32))
        }
        CitationStyle::AuthorYear => {
            let year = rng.random_range(1950..=2024u32);
            let a = pick(rng, SURNAMES);
            match rng.random_range(0..3u8) {
                0 => alloc::format!("{a} et al., {year}"),
                1 => alloc::format!("{a} and {}, {year}", pick(rng, SURNAMES)),
                _ => alloc::format!("{a}, {year}"),
            }
        }
        CitationStyle::Figure => match rng.random_range(0..3u8) {
            0 => alloc::format!("Fig. {}", rng.random_range(1..=12u32)),
            1 => alloc::format!(
                "Figure {}{}",
                rng.random_range(1..=9u32),
                pick(rng, &["", "a", "b"])
            ),
            _ => alloc::format!("Fig. {}", pick(rng, ROMAN)),
        },
        CitationStyle::Table => match rng.random_range(0..3u8) {
            0 => alloc::format!("Table {}", rng.random_range(1..=9u32)),
            1 => alloc::format!(
                "Table {}{}",
                pick(rng, &["A", "B", "S"]),
                rng.random_range(1..=5u32)
            ),
            _ => alloc::format!("Tab. {}", rng.random_range(1..=9u32)),
        },
    }
}

fn choose_style<R: Rng + ?Sized>(cfg: &CitationConfig, rng: &mut R) -> CitationStyle {
    let total: f64 = CitationStyle::ALL
        .iter()
        .map(|s| cfg.style_weight(*s))
        .sum();
    let mut u: f64 = rng.random::<f64>() * total;
    for s in CitationStyle::ALL {
        let w = cfg.style_weight(s);
        if u < w {
            return s;
        }
        u -= w;
    }
    CitationStyle::Numeric
}

/// Render one citation, returning its text and style.
pub fn make_citation<R: Rng + ?Sized>(
    cfg: &CitationConfig,
    rng: &mut R,
) -> (String, CitationStyle) {
    let style = choose_style(cfg, rng);
    let mut body = citation_body(style, rng);
    if style == CitationStyle::Superscript {
        return (body, style);
    }
    if rng.random::<f64>() < cfg.prefix_probability {
        let prefix = if style.is_reference() {
            pick(rng, &["cf.", "see", "as shown in"])
        } else {
            pick(rng, &["cf.", "see"])
        };
        body = alloc::format!("{prefix} {body}");
    }
    let paren = match style {
        CitationStyle::Numeric => cfg.paren_numeric,
        CitationStyle::AuthorYear => cfg.paren_author_year,
        _ => cfg.paren_reference,
    };
    let text = if rng.random::<f64>() < paren {
        alloc::format!("({body})")
    } else {
        alloc::format!("[{body}]")
    };
    (text, style)
}

/// Insert `text` at byte `pos`, shifting spans at or after it.
fn insert_at(ex: &mut AnnotatedSentence, pos: usize, text: &str) {
    ex.sentence.insert_str(pos, text);
    for s in &mut ex.spans {
        if s.start >= pos {
            s.start += text.len();
            s.end += text.len();
        }
    }
}

/// With probability `cfg.rate`, add a synthetic citation or reference at the
/// end of the sentence. Reference styles go before the final period;
/// bibliographic ones go after it with probability `cfg.after_period`.
pub fn inject_citations<R: Rng + ?Sized>(
    ex: &AnnotatedSentence,
    rng: &mut R,
    cfg: &CitationConfig,
) -> AnnotatedSentence {
    let mut out = ex.clone();
    if cfg.rate <= 0.0 || rng.random::<f64>() >= cfg.rate {
        return out;
    }
    let (citation, style) = make_citation(cfg, rng);
    let trimmed_len = out.sentence.trim_end().len();
    let ends_with_period = out.sentence[..trimmed_len].ends_with('.');
    let after = !style.is_reference() && rng.random::<f64>() < cfg.after_period;
    let (pos, text) = if !ends_with_period || after {
        (trimmed_len, alloc::format!(" {citation}"))
    } else {
        (trimmed_len - 1, alloc::format!(" {citation}"))
    };
    if out.spans.iter().any(|s| s.start < pos && pos < s.end) {
        return out;
    }
    insert_at(&mut out, pos, &text);
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("example cannot be split under a budget of {budget} tokens near byte {at}")]
pub struct UnsplittableExample {
    pub budget: usize,
    pub at: usize,
}

pub const TOKEN_BUDGET: usize = 512;

/// Conservative stand-in for subword counts: whitespace tokens × 1.3,
/// rounded up.
pub fn proxy_token_count(text: &str) -> usize {
    let words = text.split_whitespace().count();
    (words * 13).div_ceil(10)
}

/// Split an example into pieces within `budget` tokens, cutting only at
/// whitespace outside spans. Concatenating the pieces gives the input.
pub fn split_long(
    ex: &AnnotatedSentence,
    budget: usize,
    counter: &dyn Fn(&str) -> usize,
) -> Result<Vec<AnnotatedSentence>, UnsplittableExample> {
    if counter(&ex.sentence) <= budget {
        return Ok(alloc::vec![ex.clone()]);
    }
    let text = &ex.sentence;
    // cut points: just after a whitespace run, outside any span
    let mut cuts: Vec<usize> = Vec::new();
    let mut prev_ws = false;
    for (b, c) in text.char_indices() {
        if !c.is_whitespace() && prev_ws && !ex.spans.iter().any(|s| s.start < b && b < s.end) {
            cuts.push(b);
        }
        prev_ws = c.is_whitespace();
    }
    let mut pieces = Vec::new();
    let mut start = 0;
    while counter(&text[start..]) > budget {
        // farthest cut keeping the piece within budget
        let mut best = None;
        for &c in cuts.iter().filter(|&&c| c > start) {
            if counter(&text[start..c]) <= budget {
                best = Some(c);
            } else {
                break;
            }
        }
        let Some(c) = best else {
            return Err(UnsplittableExample { budget, at: start });
        };
        pieces.push((start, c));
        start = c;
    }
    pieces.push((start, text.len()));
    Ok(pieces
        .into_iter()
        .map(|(a, b)| AnnotatedSentence {
            sentence: text[a..b].to_string(),
            spans: ex
                .spans
                .iter()
                .filter(|s| s.start >= a && s.end <= b)
                .map(|s| QuantitySpan {
                    start: s.start - a,
                    end: s.end - a,
                    text: s.text.clone(),
                })
                .collect(),
            page_id: ex.page_id.clone(),
            language: ex.language,
            curated: ex.curated,
        })
        .collect())
}

const DIMENSION_SUFFIXES: &[&str] = &["-high", "-long", "-tall", "-wide", "-deep", "-thick"];

/// Remove `[a, b)` from the sentence and move spans accordingly.
fn delete_range(ex: &mut AnnotatedSentence, a: usize, b: usize) {
    let len = b - a;
    ex.sentence.replace_range(a..b, "");
    let adjust = |x: usize| {
        if x <= a {
            x
        } else if x >= b {
            x - len
        } else {
            a
        }
    };
    for s in &mut ex.spans {
        s.start = adjust(s.start);
        s.end = adjust(s.end);
    }
    ex.spans.retain(|s| s.start < s.end);
    ex.resync();
}

fn fix_empty_parens(ex: &mut AnnotatedSentence) -> bool {
    for pat in ["( ; )", "(;)", "( )", "()", "(, )", "( , )", "[]", "[ ]"] {
        if let Some(p) = ex.sentence.find(pat) {
            let mut a = p;
            let b = p + pat.len();
            if ex.sentence[..a].ends_with(' ') {
                a -= 1;
            }
            delete_range(ex, a, b);
            return true;
        }
    }
    false
}

fn last_word(s: &str) -> Option<&str> {
    s.rsplit(|c: char| c.is_whitespace())
        .next()
        .filter(|w| !w.is_empty())
}

fn fix_unit_repetition(ex: &mut AnnotatedSentence) -> bool {
    for i in 0..ex.spans.len() {
        let span = &ex.spans[i];
        let Some(word) = last_word(&span.text) else {
            continue;
        };
        if word.chars().all(|c| !c.is_alphabetic()) {
            continue;
        }
        // repetition inside the span: "3.1 metres metres"
        let head = &span.text[..span.text.len() - word.len()];
        if let Some(prev) = last_word(head.trim_end()) {
            if prev == word && head.ends_with(' ') {
                let end = span.end;
                delete_range(ex, end - word.len() - 1, end);
                return true;
            }
        }
        // repetition right after the span
        let rest = &ex.sentence[span.end..];
        if let Some(after) = rest.strip_prefix(' ') {
            let next = after
                .split(|c: char| c.is_whitespace() || matches!(c, ',' | '.' | ';' | ':' | ')'))
                .next()
                .unwrap_or("");
            if next == word {
                let end = span.end;
                delete_range(ex, end, end + 1 + word.len());
                return true;
            }
        }
    }
    false
}

fn fix_dimension_suffix(ex: &mut AnnotatedSentence) -> bool {
    for s in &mut ex.spans {
        for suf in DIMENSION_SUFFIXES {
            if s.text.ends_with(suf) && s.text.len() > suf.len() {
                s.end -= suf.len();
                s.text.truncate(s.text.len() - suf.len());
                return true;
            }
        }
    }
    false
}

fn tolerance_len(rest: &str) -> usize {
    let Some(after) = rest.strip_prefix('±') else {
        return 0;
    };
    let after_ws = after.trim_start_matches(' ');
    let ws = after.len() - after_ws.len();
    let digits: usize = after_ws
        .char_indices()
        .take_while(|&(i, c)| c.is_ascii_digit() || (c == '.' && i > 0))
        .map(|(_, c)| c.len_utf8())
        .sum();
    let digits = if after_ws[..digits].ends_with('.') {
        digits - 1
    } else {
        digits
    };
    if digits == 0 {
        0
    } else {
        '±'.len_utf8() + ws + digits
    }
}

fn fix_expansions(ex: &mut AnnotatedSentence) -> bool {
    for i in 0..ex.spans.len() {
        let end = ex.spans[i].end;
        let limit = ex.spans.get(i + 1).map_or(ex.sentence.len(), |s| s.start);
        let rest = &ex.sentence[end..limit];
        let mut grow = tolerance_len(rest);
        if grow == 0 {
            if let Some(r) = rest.strip_prefix(" square") {
                if r.chars().next().is_none_or(|c| !c.is_alphanumeric()) {
                    grow = " square".len();
                }
            }
        }
        if grow == 0 {
            if let Some(r) = rest.strip_prefix(" for every ") {
                let w: usize = r
                    .chars()
                    .take_while(|c| c.is_alphabetic())
                    .map(char::len_utf8)
                    .sum();
                if w > 0 {
                    grow = " for every ".len() + w;
                }
            }
        }
        if grow > 0 {
            ex.spans[i].end += grow;
            ex.resync();
            return true;
        }
    }
    false
}

/// Apply the curation rules until none fires: drop empty parentheses,
/// collapse repeated unit words, trim "-high"-style suffixes from spans and
/// grow spans over "±x", " square" and " for every <word>".
pub fn curation_fixes(ex: &AnnotatedSentence) -> AnnotatedSentence {
    let mut out = ex.clone();
    // each rule strictly shrinks the text or moves a span end in one
    // direction, so this terminates
    for _ in 0..1000 {
        let changed = fix_empty_parens(&mut out)
            || fix_unit_repetition(&mut out)
            || fix_dimension_suffix(&mut out)
            || fix_expansions(&mut out);
        if !changed {
            break;
        }
    }
    out
}

/// Per-page rejection and yield counters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageCounts {
    pub convert_calls: usize,
    pub expansion_errors: usize,
    pub malformed_templates: usize,
    pub wikidata_templates: usize,
    pub sentences: usize,
    pub without_quantity: usize,
    pub too_short: usize,
    pub per_outside_span: usize,
    pub number_outside_span: usize,
    pub failed_expansion: usize,
    pub unsplittable: usize,
    pub accepted: usize,
    pub citations: usize,
    pub split_extra: usize,
}

impl PageCounts {
    pub fn add(&mut self, o: &PageCounts) {
        self.convert_calls += o.convert_calls;
        self.expansion_errors += o.expansion_errors;
        self.malformed_templates += o.malformed_templates;
        self.wikidata_templates += o.wikidata_templates;
        self.sentences += o.sentences;
        self.without_quantity += o.without_quantity;
        self.too_short += o.too_short;
        self.per_outside_span += o.per_outside_span;
        self.number_outside_span += o.number_outside_span;
        self.failed_expansion += o.failed_expansion;
        self.unsplittable += o.unsplittable;
        self.accepted += o.accepted;
        self.citations += o.citations;
        self.split_extra += o.split_extra;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantityConfig {
    pub rendering: RenderingWeights,
    pub citations: CitationConfig,
    pub token_budget: usize,
}

impl Default for QuantityConfig {
    fn default() -> Self {
        QuantityConfig {
            rendering: RenderingWeights::default(),
            citations: CitationConfig::default(),
            token_budget: TOKEN_BUDGET,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PageResult {
    pub examples: Vec<AnnotatedSentence>,
    pub counts: PageCounts,
}

/// Expanded page text with quantity spans (byte offsets).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RenderedPage {
    pub text: String,
    pub spans: Vec<(usize, usize)>,
    /// Ranges whose convert call failed to expand.
    pub failed: Vec<(usize, usize)>,
}

/// Strip the page and replace every convert placeholder by one selected
/// rendering. Draws come from the `render` stream of this page.
pub fn render_page(
    page: &PageSource,
    registry: &UnitRegistry,
    weights: &RenderingWeights,
    seed: u64,
) -> (RenderedPage, PageCounts) {
    let stripped = strip_markup(page);
    let mut counts = PageCounts {
        convert_calls: stripped.calls.len(),
        malformed_templates: stripped.malformed.len(),
        wikidata_templates: stripped.wikidata_dropped,
        ..PageCounts::default()
    };
    let mut rng = stage_rng(seed, "render", &page.page_id);
    let mut out = RenderedPage::default();
    let mut last = 0;
    for (offset, call) in &stripped.calls {
        out.text.push_str(&stripped.text[last..*offset]);
        let start = out.text.len();
        match expand_convert(call, registry) {
            Ok(r) => {
                let chosen = select_rendering(&r, weights, &mut rng);
                out.text.push_str(&chosen.text);
                out.spans.push((start, out.text.len()));
            }
            Err(_) => {
                counts.expansion_errors += 1;
                out.text.push_str(&call.raw_args.join(" "));
                out.failed.push((start, out.text.len()));
            }
        }
        last = offset + PLACEHOLDER.len_utf8();
    }
    out.text.push_str(&stripped.text[last..]);
    (out, counts)
}

/// Run the per-page part of the quantity pipeline.
pub fn process_page(
    page: &PageSource,
    registry: &UnitRegistry,
    provider: &dyn LingProvider,
    splitter: &SentenceSplitter,
    cfg: &QuantityConfig,
    seed: u64,
) -> PageResult {
    let (rendered, mut counts) = render_page(page, registry, &cfg.rendering, seed);
    let mut protected = rendered.spans.clone();
    protected.extend_from_slice(&rendered.failed);
    let mut cite_rng = stage_rng(seed, "cite", &page.page_id);
    let mut examples = Vec::new();
    for (a, b) in splitter.split(&rendered.text, &protected) {
        counts.sentences += 1;
        let sentence = &rendered.text[a..b];
        if rendered.failed.iter().any(|&(s, e)| s < b && a < e) {
            counts.failed_expansion += 1;
            continue;
        }
        let spans: Vec<QuantitySpan> = rendered
            .spans
            .iter()
            .filter(|&&(s, e)| s >= a && e <= b)
            .map(|&(s, e)| QuantitySpan::new(sentence, s - a, e - a))
            .collect();
        if spans.is_empty() {
            counts.without_quantity += 1;
            continue;
        }
        let ann = provider.annotate(sentence);
        match filter_sentence(sentence, &spans, &ann) {
            Err(Rejection::TooShort) => counts.too_short += 1,
            Err(Rejection::PerOutsideSpan) => counts.per_outside_span += 1,
            Err(Rejection::NumberOutsideSpan) => counts.number_outside_span += 1,
            Ok(()) => {
                let ex = AnnotatedSentence {
                    sentence: sentence.to_string(),
                    spans,
                    page_id: page.page_id.clone(),
                    language: page.language,
                    curated: false,
                };
                let cited = inject_citations(&ex, &mut cite_rng, &cfg.citations);
                if cited.sentence != ex.sentence {
                    counts.citations += 1;
                }
                match split_long(&cited, cfg.token_budget, &proxy_token_count) {
                    Ok(pieces) => {
                        counts.accepted += 1;
                        counts.split_extra += pieces.len() - 1;
                        examples.extend(pieces.iter().map(curation_fixes));
                    }
                    Err(_) => counts.unsplittable += 1,
                }
            }
        }
    }
    PageResult { examples, counts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lingo::BuiltinProvider;

    fn ex(sentence: &str, spans: &[&str]) -> AnnotatedSentence {
        let mut out = Vec::new();
        let mut from = 0;
        for s in spans {
            let p = sentence[from..].find(s).unwrap() + from;
            out.push(QuantitySpan::new(sentence, p, p + s.len()));
            from = p + s.len();
        }
        AnnotatedSentence {
            sentence: sentence.into(),
            spans: out,
            page_id: "p".into(),
            language: Language::En,
            curated: false,
        }
    }

    fn filter(sentence: &str, spans: &[&str]) -> Result<(), Rejection> {
        let e = ex(sentence, spans);
        let ann = BuiltinProvider::default().annotate(sentence);
        filter_sentence(&e.sentence, &e.spans, &ann)
    }

    #[test]
    fn filter_cases() {
        assert_eq!(filter("The bridge is 320 m long.", &["320 m"]), Ok(()));
        assert_eq!(
            filter(
                "It produced 2 million barrels per day.",
                &["2 million barrels"]
            ),
            Err(Rejection::PerOutsideSpan)
        );
        assert_eq!(filter("The iPhone 15 weighs 171 g.", &["171 g"]), Ok(()));
        assert_eq!(filter("3 m", &["3 m"]), Err(Rejection::TooShort));
        assert_eq!(
            filter("The two bridges are 320 m long.", &["320 m"]),
            Err(Rejection::NumberOutsideSpan)
        );
        assert_eq!(
            filter("The X5 tower is 320 m tall.", &["320 m"]),
            Err(Rejection::NumberOutsideSpan)
        );
        assert_eq!(
            filter("In 1990 the bridge was 320 m long.", &["320 m"]),
            Ok(())
        );
    }

    #[test]
    fn citations_disabled_is_identity() {
        let e = ex("The bridge is 320 m long.", &["320 m"]);
        let mut rng = stage_rng(1, "cite", "p");
        assert_eq!(
            inject_citations(&e, &mut rng, &CitationConfig::disabled()),
            e
        );
    }

    #[test]
    fn reference_goes_before_period() {
        let cfg = CitationConfig {
            rate: 1.0,
            numeric: 0.0,
            author_year: 0.0,
            figure: 1.0,
            table: 0.0,
            superscript: 0.0,
            ..CitationConfig::default()
        };
        let e = ex("The road is 3 km.", &["3 km"]);
        for k in 0..1000 {
            let mut rng = stage_rng(k, "cite", "p");
            let out = inject_citations(&e, &mut rng, &cfg);
            assert!(
                out.sentence.ends_with(").") || out.sentence.ends_with("]."),
                "{}",
                out.sentence
            );
            assert!(out.sentence.contains("Fig"), "{}", out.sentence);
            assert_eq!(out.spans, e.spans);
        }
    }

    #[test]
    fn bibliographic_after_period_is_rare() {
        let cfg = CitationConfig {
            rate: 1.0,
            numeric: 1.0,
            author_year: 0.0,
            figure: 0.0,
            table: 0.0,
            superscript: 0.0,
            ..CitationConfig::default()
        };
        let e = ex("The road is 3 km.", &["3 km"]);
        let mut after = 0;
        let n = 20_000;
        for k in 0..n {
            let mut rng = stage_rng(k, "cite", "p");
            let out = inject_citations(&e, &mut rng, &cfg);
            assert!(out.sentence.starts_with("The road is 3 km"));
            assert_eq!(out.spans[0].text, "3 km");
            if out.sentence.starts_with("The road is 3 km. ") {
                after += 1;
            }
        }
        let frac = after as f64 / n as f64;
        assert!((frac - 0.05).abs() < 0.01, "{frac}");
    }

    #[test]
    fn split_long_cases() {
        let short = ex("A 20 word sentence with 3 km in it.", &["3 km"]);
        assert_eq!(
            split_long(&short, 512, &proxy_token_count).unwrap(),
            core::slice::from_ref(&short)
        );

        let mut words: Vec<String> = (0..847).map(|i| alloc::format!("w{i}")).collect();
        words[400] = "3".into();
        words[401] = "km".into();
        let text = words.join(" ");
        assert_eq!(proxy_token_count(&text), 1102);
        let long = ex(&text, &["3 km"]);
        let parts = split_long(&long, 512, &proxy_token_count).unwrap();
        assert_eq!(parts.len(), 3);
        let joined: String = parts.iter().map(|p| p.sentence.as_str()).collect();
        assert_eq!(joined, text);
        assert!(parts.iter().all(|p| proxy_token_count(&p.sentence) <= 512));
        assert_eq!(parts.iter().map(|p| p.spans.len()).sum::<usize>(), 1);
        assert!(parts.iter().all(AnnotatedSentence::spans_valid));

        let huge_span: String = (0..470).map(|_| "x").collect::<Vec<_>>().join(" ");
        let bad = ex(&alloc::format!("a {huge_span} b"), &[&huge_span]);
        assert!(split_long(&bad, 512, &proxy_token_count).is_err());
    }

    #[test]
    fn curation_rules() {
        let e = ex("It is 3.1 metres metres tall.", &["3.1 metres"]);
        let f = curation_fixes(&e);
        assert_eq!(f.sentence, "It is 3.1 metres tall.");
        assert_eq!(f.spans[0].text, "3.1 metres");

        let e = ex("A 3.1-meter-high wall.", &["3.1-meter-high"]);
        assert_eq!(curation_fixes(&e).spans[0].text, "3.1-meter");

        let e = ex("It was 38 °C±1 that day.", &["38 °C"]);
        assert_eq!(curation_fixes(&e).spans[0].text, "38 °C±1");

        let e = ex("Each plot is 1 meter square.", &["1 meter"]);
        assert_eq!(curation_fixes(&e).spans[0].text, "1 meter square");

        let e = ex("It rises 3.1 in for every second.", &["3.1 in"]);
        assert_eq!(curation_fixes(&e).spans[0].text, "3.1 in for every second");

        let e = ex("The wall ( ; ) is 3 m high.", &["3 m"]);
        let f = curation_fixes(&e);
        assert_eq!(f.sentence, "The wall is 3 m high.");
        assert!(f.spans_valid());

        let e = ex("Nothing to fix at 3 m here.", &["3 m"]);
        assert_eq!(curation_fixes(&e), e);
    }

    #[test]
    fn page_pipeline() {
        let page = PageSource {
            page_id: "42".into(),
            title: "Barn swallow".into(),
            language: Language::En,
            markup: "The '''barn swallow''' flies at {{convert|11|m/s|km/h|abbr=on}} over land. It has two wings. Its nest is {{convert|5|cm|in}} per egg.".into(),
        };
        let reg = UnitRegistry::builtin();
        let r = process_page(
            &page,
            &reg,
            &BuiltinProvider::default(),
            &SentenceSplitter::default(),
            &QuantityConfig::default(),
            1,
        );
        assert_eq!(r.counts.sentences, 3);
        assert_eq!(r.counts.without_quantity, 1);
        assert_eq!(r.counts.per_outside_span, 1);
        assert_eq!(r.examples.len(), 1);
        let e = &r.examples[0];
        assert!(e.sentence.starts_with("The barn swallow flies at "));
        assert!(["11 m/s", "40 km/h", "11 m/s (40 km/h)"].contains(&e.spans[0].text.as_str()));
        assert!(e.spans_valid());
    }
}
