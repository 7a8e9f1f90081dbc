//! Sequence-labelling, question-answering and frequency-table exports.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{MeasurementExample, SpanKind};
use crate::dedup::{trailing_unit_of, DedupItem};
use crate::lingo::tokenize;
use crate::quantities::AnnotatedSentence;
use crate::units::UnitRegistry;

pub const QUANT_LABEL: &str = "QUANT";

/// A labelled byte range.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabelledSpan {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

impl LabelledSpan {
    pub fn new(label: impl Into<String>, start: usize, end: usize) -> Self {
        LabelledSpan {
            label: label.into(),
            start,
            end,
        }
    }
}

/// One tokenized sentence with IOB tags. `text` keeps the original spacing
/// so spans can be recovered exactly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IobRecord {
    pub text: String,
    pub tokens: Vec<String>,
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IobError {
    #[error("invalid tag sequence at token {index}: {tag}")]
    InvalidTagSequence { index: usize, tag: String },
    #[error("{tokens} tokens but {tags} tags")]
    LengthMismatch { tokens: usize, tags: usize },
    #[error("token {index} ({token:?}) not found in the sentence text")]
    MisalignedToken { index: usize, token: String },
    #[error("spans overlap or fall outside the sentence")]
    BadSpans,
}

/// Tokenize with the default tokenizer, splitting tokens at span edges.
pub fn to_iob(text: &str, spans: &[LabelledSpan]) -> Result<IobRecord, IobError> {
    to_iob_with(text, spans, &tokenize)
}

/// As [`to_iob`] with a caller-supplied tokenizer returning byte ranges.
pub fn to_iob_with(
    text: &str,
    spans: &[LabelledSpan],
    tokenizer: &dyn Fn(&str) -> Vec<(usize, usize)>,
) -> Result<IobRecord, IobError> {
    let mut sorted: Vec<&LabelledSpan> = spans.iter().collect();
    sorted.sort_by_key(|s| (s.start, s.end));
    for w in sorted.windows(2) {
        if w[0].end > w[1].start {
            return Err(IobError::BadSpans);
        }
    }
    if sorted.iter().any(|s| {
        s.start >= s.end
            || s.end > text.len()
            || !text.is_char_boundary(s.start)
            || !text.is_char_boundary(s.end)
    }) {
        return Err(IobError::BadSpans);
    }
    let mut cuts: Vec<usize> = sorted.iter().flat_map(|s| [s.start, s.end]).collect();
    cuts.sort_unstable();
    let mut pieces: Vec<(usize, usize)> = Vec::new();
    for (s, e) in tokenizer(text) {
        let mut a = s;
        for &c in cuts.iter().filter(|&&c| s < c && c < e) {
            pieces.push((a, c));
            a = c;
        }
        pieces.push((a, e));
    }
    let mut tokens = Vec::with_capacity(pieces.len());
    let mut tags = Vec::with_capacity(pieces.len());
    for (s, e) in pieces {
        let piece = text[s..e].trim();
        if piece.is_empty() {
            continue;
        }
        let tag = match sorted.iter().find(|sp| sp.start <= s && e <= sp.end) {
            Some(sp) if sp.start == s => alloc::format!("B-{}", sp.label),
            Some(sp) => alloc::format!("I-{}", sp.label),
            None => "O".to_string(),
        };
        tokens.push(piece.to_string());
        tags.push(tag);
    }
    Ok(IobRecord {
        text: text.to_string(),
        tokens,
        tags,
    })
}

/// Check the tag alphabet and sequence constraints.
pub fn validate_tags(tags: &[String]) -> Result<(), IobError> {
    let mut prev: Option<&str> = None;
    for (i, t) in tags.iter().enumerate() {
        let bad = || IobError::InvalidTagSequence {
            index: i,
            tag: t.clone(),
        };
        if t == "O" {
            prev = None;
        } else if let Some(l) = t.strip_prefix("B-") {
            if l.is_empty() {
                return Err(bad());
            }
            prev = Some(l);
        } else if let Some(l) = t.strip_prefix("I-") {
            if prev != Some(l) {
                return Err(bad());
            }
        } else {
            return Err(bad());
        }
    }
    Ok(())
}

/// Recover labelled byte spans from a record.
pub fn from_iob(record: &IobRecord) -> Result<Vec<LabelledSpan>, IobError> {
    if record.tokens.len() != record.tags.len() {
        return Err(IobError::LengthMismatch {
            tokens: record.tokens.len(),
            tags: record.tags.len(),
        });
    }
    validate_tags(&record.tags)?;
    let mut pos = 0;
    let mut out: Vec<LabelledSpan> = Vec::new();
    for (i, (tok, tag)) in record.tokens.iter().zip(&record.tags).enumerate() {
        let skip = record.text[pos..].len() - record.text[pos..].trim_start().len();
        pos += skip;
        if !record.text[pos..].starts_with(tok.as_str()) || tok.is_empty() {
            return Err(IobError::MisalignedToken {
                index: i,
                token: tok.clone(),
            });
        }
        let (s, e) = (pos, pos + tok.len());
        pos = e;
        if let Some(l) = tag.strip_prefix("B-") {
            out.push(LabelledSpan::new(l, s, e));
        } else if tag.starts_with("I-") {
            if let Some(last) = out.last_mut() {
                last.end = e;
            }
        }
    }
    Ok(out)
}

pub fn quantity_spans(ex: &AnnotatedSentence) -> Vec<LabelledSpan> {
    ex.spans
        .iter()
        .map(|s| LabelledSpan::new(QUANT_LABEL, s.start, s.end))
        .collect()
}

/// Measurement spans as IOB labels. Modifiers are not part of the tag set.
pub fn measurement_spans(ex: &MeasurementExample) -> Vec<LabelledSpan> {
    ex.spans()
        .into_iter()
        .filter(|(k, _)| *k != SpanKind::Modifier)
        .map(|(k, s)| LabelledSpan::new(k.tag(), s.start, s.end))
        .collect()
}

pub fn quantity_iob(ex: &AnnotatedSentence) -> Result<IobRecord, IobError> {
    to_iob(&ex.sentence, &quantity_spans(ex))
}

pub fn measurement_iob(ex: &MeasurementExample) -> Result<IobRecord, IobError> {
    to_iob(&ex.sentence, &measurement_spans(ex))
}

/// `# text = ...` line, then `token<TAB>tag` lines, then a blank line.
pub fn write_iob(records: &[IobRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str("# text = ");
        out.push_str(&r.text.replace('\n', " "));
        out.push('\n');
        for (t, g) in r.tokens.iter().zip(&r.tags) {
            out.push_str(t);
            out.push('\t');
            out.push_str(g);
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IobParseError {
    #[error("line {line}: expected token<TAB>tag")]
    BadLine { line: usize },
    #[error("sentence ending at line {line}: {source}")]
    Record { line: usize, source: IobError },
}

/// Parse the output of [`write_iob`]. Without a text comment the tokens are
/// joined by single spaces.
pub fn parse_iob(input: &str) -> Result<Vec<IobRecord>, IobParseError> {
    let mut out = Vec::new();
    let mut text: Option<String> = None;
    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    let mut flush = |text: &mut Option<String>,
                     tokens: &mut Vec<String>,
                     tags: &mut Vec<String>,
                     line: usize| {
        if text.is_none() && tokens.is_empty() {
            return Ok(());
        }
        let rec = IobRecord {
            text: text.take().unwrap_or_else(|| tokens.join(" ")),
            tokens: core::mem::take(tokens),
            tags: core::mem::take(tags),
        };
        from_iob(&rec).map_err(|source| IobParseError::Record { line, source })?;
        out.push(rec);
        Ok(())
    };
    for (n, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            flush(&mut text, &mut tokens, &mut tags, n + 1)?;
        } else if let Some(t) = line.strip_prefix("# text = ") {
            flush(&mut text, &mut tokens, &mut tags, n + 1)?;
            text = Some(t.to_string());
        } else {
            let (tok, tag) = line
                .split_once('\t')
                .ok_or(IobParseError::BadLine { line: n + 1 })?;
            tokens.push(tok.to_string());
            tags.push(tag.trim_end().to_string());
        }
    }
    let last = input.lines().count();
    flush(&mut text, &mut tokens, &mut tags, last)?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaAnswer {
    pub text: String,
    /// Character offset in the context.
    pub answer_start: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaItem {
    pub id: String,
    pub question: String,
    pub answers: Vec<QaAnswer>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaParagraph {
    pub context: String,
    pub qas: Vec<QaItem>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaArticle {
    pub title: String,
    pub paragraphs: Vec<QaParagraph>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaDataset {
    pub version: String,
    pub data: Vec<QaArticle>,
}

pub const QA_VERSION: &str = "corpusforge-qa-1";

fn char_offset(text: &str, byte: usize) -> usize {
    text[..byte].chars().count()
}

fn answer(text: &str, start: usize, end: usize) -> QaAnswer {
    QaAnswer {
        text: text[start..end].to_string(),
        answer_start: char_offset(text, start),
    }
}

/// One question per annotated concept of a measurement example.
pub fn measurement_questions(ex: &MeasurementExample, id_prefix: &str) -> Vec<QaItem> {
    let s = &ex.sentence;
    let q = ex.quantity_span();
    let quantity = q.text(s);
    let entity = ex.entity.text(s);
    let property = ex
        .property
        .map(|p| p.text(s).to_string())
        .or_else(|| ex.implicit_property_label.clone())
        .unwrap_or_default();
    let mut out = Vec::new();
    let mut push = |concept: String, question: String, span: crate::align::Span| {
        out.push(QaItem {
            id: alloc::format!("{id_prefix}-{concept}"),
            question,
            answers: alloc::vec![answer(s, span.start, span.end)],
        });
    };
    push(
        "entity".into(),
        alloc::format!("What is the measured entity for {quantity}?"),
        ex.entity,
    );
    if let Some(p) = ex.property {
        push(
            "property".into(),
            alloc::format!("What is the measured property for {quantity}?"),
            p,
        );
    }
    push(
        "value".into(),
        alloc::format!("What is the value of the {property} of {entity}?"),
        ex.value,
    );
    if let Some(u) = ex.unit {
        push(
            "unit".into(),
            alloc::format!("What is the unit of the {property} of {entity}?"),
            u,
        );
    }
    for (k, sp) in &ex.qualifiers {
        push(
            alloc::format!("qualifier-{}", k.as_str()),
            alloc::format!(
                "What is the {} for {quantity}?",
                k.as_str().replace('_', " ")
            ),
            *sp,
        );
    }
    out
}

/// A single question whose answers are all quantity spans.
pub fn quantity_questions(ex: &AnnotatedSentence, id_prefix: &str) -> Vec<QaItem> {
    if ex.spans.is_empty() {
        return Vec::new();
    }
    alloc::vec![QaItem {
        id: alloc::format!("{id_prefix}-quantity"),
        question: "What quantities are mentioned?".into(),
        answers: ex
            .spans
            .iter()
            .map(|sp| answer(&ex.sentence, sp.start, sp.end))
            .collect(),
    }]
}

/// Group paragraphs by page, keeping first-seen page order.
fn group_qa(items: impl Iterator<Item = (String, QaParagraph)>) -> QaDataset {
    let mut order: Vec<String> = Vec::new();
    let mut by_page: BTreeMap<String, Vec<QaParagraph>> = BTreeMap::new();
    for (page, para) in items {
        if !by_page.contains_key(&page) {
            order.push(page.clone());
        }
        by_page.entry(page).or_default().push(para);
    }
    QaDataset {
        version: QA_VERSION.into(),
        data: order
            .into_iter()
            .map(|t| QaArticle {
                paragraphs: by_page.remove(&t).unwrap_or_default(),
                title: t,
            })
            .collect(),
    }
}

pub fn measurement_qa(examples: &[MeasurementExample]) -> QaDataset {
    group_qa(examples.iter().enumerate().map(|(i, ex)| {
        (
            ex.page_id.clone(),
            QaParagraph {
                context: ex.sentence.clone(),
                qas: measurement_questions(ex, &alloc::format!("m{i}")),
            },
        )
    }))
}

pub fn quantity_qa(examples: &[AnnotatedSentence]) -> QaDataset {
    group_qa(examples.iter().enumerate().map(|(i, ex)| {
        (
            ex.page_id.clone(),
            QaParagraph {
                context: ex.sentence.clone(),
                qas: quantity_questions(ex, &alloc::format!("q{i}")),
            },
        )
    }))
}

/// Every answer text equals the context slice at its character offset.
pub fn qa_is_consistent(ds: &QaDataset) -> bool {
    ds.data.iter().flat_map(|a| &a.paragraphs).all(|p| {
        p.qas.iter().flat_map(|q| &q.answers).all(|a| {
            let slice: String = p
                .context
                .chars()
                .skip(a.answer_start)
                .take(a.text.chars().count())
                .collect();
            slice == a.text
        })
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub rank: usize,
    pub surface: String,
    pub count: usize,
    pub percent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub name: String,
    pub total: usize,
    pub rows: Vec<StatRow>,
}

impl FrequencyTable {
    /// Count surfaces; sorted by count, then surface.
    pub fn build(name: &str, surfaces: impl IntoIterator<Item = String>) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut total = 0;
        for s in surfaces {
            *counts.entry(s).or_insert(0) += 1;
            total += 1;
        }
        let mut rows: Vec<(String, usize)> = counts.into_iter().collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        FrequencyTable {
            name: name.into(),
            total,
            rows: rows
                .into_iter()
                .enumerate()
                .map(|(i, (surface, count))| StatRow {
                    rank: i + 1,
                    surface,
                    count,
                    percent: 100.0 * count as f64 / total as f64,
                })
                .collect(),
        }
    }

    pub fn percent_sum(&self) -> f64 {
        self.rows.iter().map(|r| r.percent).sum()
    }

    /// Tab-separated text with a header line.
    pub fn render(&self) -> String {
        let mut out = alloc::format!(
            "# {} (n={})\nrank\tsurface\tpercent\n",
            self.name,
            self.total
        );
        for r in &self.rows {
            out.push_str(&alloc::format!(
                "{}\t{}\t{:.2}\n",
                r.rank,
                r.surface,
                r.percent
            ));
        }
        out
    }
}

/// Trailing-unit frequencies of any corpus.
pub fn unit_table<T: DedupItem>(items: &[T], registry: &UnitRegistry) -> FrequencyTable {
    FrequencyTable::build(
        "unit",
        items.iter().filter_map(|it| {
            let code = trailing_unit_of(it, registry)?;
            Some(registry.get(&code).map_or(code, |d| d.symbol.clone()))
        }),
    )
}

/// Entity, property, value, unit and temporal-scope tables. Entities,
/// properties and temporal scopes ignore case.
pub fn measurement_tables(examples: &[MeasurementExample]) -> Vec<FrequencyTable> {
    let text = |ex: &MeasurementExample, sp: crate::align::Span| sp.text(&ex.sentence).to_string();
    alloc::vec![
        FrequencyTable::build(
            "entity",
            examples.iter().map(|e| text(e, e.entity).to_lowercase())
        ),
        FrequencyTable::build(
            "property",
            examples.iter().filter_map(|e| {
                e.property
                    .map(|p| text(e, p))
                    .or_else(|| e.implicit_property_label.clone())
                    .map(|p| p.to_lowercase())
            }),
        ),
        FrequencyTable::build("value", examples.iter().map(|e| text(e, e.value))),
        FrequencyTable::build(
            "unit",
            examples.iter().filter_map(|e| e.unit.map(|u| text(e, u)))
        ),
        FrequencyTable::build(
            "temporal_scope",
            examples.iter().flat_map(|e| {
                e.qualifiers
                    .iter()
                    .filter(|(k, _)| k.is_temporal())
                    .map(move |(_, s)| text(e, *s).to_lowercase())
            }),
        ),
    ]
}
