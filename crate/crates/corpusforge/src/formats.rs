//! On-disk formats. Everything is line-delimited JSON except IOB, QA and
//! stats exports. Offsets in files count characters; in memory they count
//! bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use corpusforge_core::align::{AcceptanceReason, MeasurementExample, Span, SpanKind};
use corpusforge_core::facts::QuantFact;
use corpusforge_core::lingo::{
    AnnotationError, BuiltinProvider, LingAnnotation, LingProvider, NerSpan, Pos,
};
use corpusforge_core::quantities::{AnnotatedSentence, QuantitySpan};
use corpusforge_core::wikitext::{Language, PageSource};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: schema error{}: {message}", field.as_ref().map(|f| format!(" in `{f}`")).unwrap_or_default())]
    Schema {
        path: PathBuf,
        line: usize,
        field: Option<String>,
        message: String,
    },
    #[error("{path}:{line}: offset out of range: {message}")]
    OffsetOutOfRange {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl FormatError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Field named in a serde error message such as "missing field `lemma`".
fn field_of(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

/// Byte/character offset conversion for one string.
pub struct CharIndex {
    /// Byte offset of each character, plus the total length.
    bytes: Vec<usize>,
}

impl CharIndex {
    pub fn new(text: &str) -> Self {
        let mut bytes: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        bytes.push(text.len());
        CharIndex { bytes }
    }

    pub fn char_len(&self) -> usize {
        self.bytes.len() - 1
    }

    pub fn to_byte(&self, c: usize) -> Option<usize> {
        self.bytes.get(c).copied()
    }

    /// Panics if `b` is not a character boundary.
    pub fn to_char(&self, b: usize) -> usize {
        self.bytes
            .binary_search(&b)
            .expect("offset on a character boundary")
    }
}

pub fn read_lines(path: &Path) -> Result<Vec<(usize, String)>, FormatError> {
    let f = fs::File::open(path).map_err(|e| FormatError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| FormatError::io(path, e))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, FormatError> {
    read_lines(path)?
        .into_iter()
        .map(|(line, text)| {
            serde_json::from_str(&text).map_err(|e| {
                let message = e.to_string();
                FormatError::Schema {
                    path: path.to_path_buf(),
                    line,
                    field: field_of(&message),
                    message,
                }
            })
        })
        .collect()
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for it in items {
        out.push_str(&serde_json::to_string(it).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), FormatError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| FormatError::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| FormatError::io(path, e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| FormatError::io(path, e))
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), FormatError> {
    write_file(path, &to_jsonl(items))
}

pub fn read_pages(path: &Path) -> Result<Vec<PageSource>, FormatError> {
    read_jsonl(path)
}

/// Fact files hold one serialized [`QuantFact`] per line.
pub fn read_facts(path: &Path) -> Result<Vec<QuantFact>, FormatError> {
    let facts: Vec<QuantFact> = read_jsonl(path)?;
    for (i, f) in facts.iter().enumerate() {
        f.validate().map_err(|e| FormatError::Schema {
            path: path.to_path_buf(),
            line: i + 1,
            field: None,
            message: e.to_string(),
        })?;
    }
    Ok(facts)
}

pub fn write_facts(path: &Path, facts: &[QuantFact]) -> Result<(), FormatError> {
    write_jsonl(path, facts)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterchangeNer {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

/// One annotated sentence in the interchange format. Token offsets are
/// character offsets into `text`; the other index fields refer to tokens.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterchangeRecord {
    pub sentence_id: String,
    pub text: String,
    pub tokens: Vec<[usize; 2]>,
    pub lemma: Vec<String>,
    pub pos: Vec<Pos>,
    pub ner: Vec<InterchangeNer>,
    pub dep_head: Vec<usize>,
    pub dep_rel: Vec<String>,
    pub noun_chunks: Vec<[usize; 2]>,
    pub like_num: Vec<bool>,
}

impl InterchangeRecord {
    pub fn from_annotation(sentence_id: &str, text: &str, ann: &LingAnnotation) -> Self {
        let idx = CharIndex::new(text);
        InterchangeRecord {
            sentence_id: sentence_id.into(),
            text: text.into(),
            tokens: ann
                .tokens
                .iter()
                .map(|&(s, e)| [idx.to_char(s), idx.to_char(e)])
                .collect(),
            lemma: ann.lemma.clone(),
            pos: ann.pos.clone(),
            ner: ann
                .ner
                .iter()
                .map(|n| InterchangeNer {
                    start: n.start,
                    end: n.end,
                    label: n.label.clone(),
                })
                .collect(),
            dep_head: ann.dep_head.clone(),
            dep_rel: ann.dep_rel.clone(),
            noun_chunks: ann.noun_chunks.iter().map(|&(s, e)| [s, e]).collect(),
            like_num: ann.like_num.clone(),
        }
    }

    /// Validate in character units, then convert offsets to bytes.
    pub fn to_annotation(&self) -> Result<LingAnnotation, AnnotationError> {
        let idx = CharIndex::new(&self.text);
        let mut ann = LingAnnotation {
            tokens: self.tokens.iter().map(|t| (t[0], t[1])).collect(),
            lemma: self.lemma.clone(),
            pos: self.pos.clone(),
            ner: self
                .ner
                .iter()
                .map(|n| NerSpan {
                    start: n.start,
                    end: n.end,
                    label: n.label.clone(),
                })
                .collect(),
            dep_head: self.dep_head.clone(),
            dep_rel: self.dep_rel.clone(),
            noun_chunks: self.noun_chunks.iter().map(|c| (c[0], c[1])).collect(),
            like_num: self.like_num.clone(),
        };
        ann.validate(idx.char_len())?;
        for t in ann.tokens.iter_mut() {
            *t = (idx.to_byte(t.0).unwrap_or(0), idx.to_byte(t.1).unwrap_or(0));
        }
        Ok(ann)
    }
}

/// Annotations keyed by sentence id, with their text.
pub type ExternalAnnotations = BTreeMap<String, (String, LingAnnotation)>;

/// Load and validate an interchange file.
pub fn load_external(path: &Path) -> Result<ExternalAnnotations, FormatError> {
    let mut out = BTreeMap::new();
    for (line, text) in read_lines(path)? {
        let rec: InterchangeRecord = serde_json::from_str(&text).map_err(|e| {
            let message = e.to_string();
            FormatError::Schema {
                path: path.to_path_buf(),
                line,
                field: field_of(&message),
                message,
            }
        })?;
        let ann = rec.to_annotation().map_err(|e| match e {
            AnnotationError::LengthMismatch { field, .. } => FormatError::Schema {
                path: path.to_path_buf(),
                line,
                field: Some(field.to_string()),
                message: e.to_string(),
            },
            AnnotationError::UnknownLabel(_) => FormatError::Schema {
                path: path.to_path_buf(),
                line,
                field: Some("ner".into()),
                message: e.to_string(),
            },
            other => FormatError::OffsetOutOfRange {
                path: path.to_path_buf(),
                line,
                message: other.to_string(),
            },
        })?;
        out.insert(rec.sentence_id, (rec.text, ann));
    }
    Ok(out)
}

pub fn write_external(path: &Path, annotations: &ExternalAnnotations) -> Result<(), FormatError> {
    let recs: Vec<InterchangeRecord> = annotations
        .iter()
        .map(|(id, (text, ann))| InterchangeRecord::from_annotation(id, text, ann))
        .collect();
    write_jsonl(path, &recs)
}

/// Serves annotations from an interchange file, looked up by sentence
/// text; sentences not in the file fall back to the built-in provider.
pub struct ExternalProvider {
    by_text: BTreeMap<String, LingAnnotation>,
    fallback: BuiltinProvider,
    misses: AtomicUsize,
}

impl ExternalProvider {
    pub fn new(annotations: ExternalAnnotations) -> Self {
        ExternalProvider {
            by_text: annotations.into_values().collect(),
            fallback: BuiltinProvider::default(),
            misses: AtomicUsize::new(0),
        }
    }

    /// Sentences that were not in the file.
    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }
}

impl LingProvider for ExternalProvider {
    fn annotate(&self, sentence: &str) -> LingAnnotation {
        match self.by_text.get(sentence) {
            Some(a) => a.clone(),
            None => {
                self.misses.fetch_add(1, Ordering::Relaxed);
                self.fallback.annotate(sentence)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantityRecord {
    pub sentence: String,
    pub spans: Vec<CharSpan>,
    pub page_id: String,
    pub language: Language,
    pub curated: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RecordError {
    #[error("span {0}..{1} is outside the sentence or empty")]
    BadSpan(usize, usize),
    #[error("unknown span kind `{0}`")]
    UnknownKind(String),
    #[error("expected exactly one `{0}` span")]
    Cardinality(&'static str),
}

impl QuantityRecord {
    pub fn from_example(ex: &AnnotatedSentence) -> Self {
        let idx = CharIndex::new(&ex.sentence);
        QuantityRecord {
            sentence: ex.sentence.clone(),
            spans: ex
                .spans
                .iter()
                .map(|s| CharSpan {
                    start: idx.to_char(s.start),
                    end: idx.to_char(s.end),
                })
                .collect(),
            page_id: ex.page_id.clone(),
            language: ex.language,
            curated: ex.curated,
        }
    }

    pub fn to_example(&self) -> Result<AnnotatedSentence, RecordError> {
        let idx = CharIndex::new(&self.sentence);
        let spans = self
            .spans
            .iter()
            .map(|s| match (idx.to_byte(s.start), idx.to_byte(s.end)) {
                (Some(a), Some(b)) if a < b => Ok(QuantitySpan::new(&self.sentence, a, b)),
                _ => Err(RecordError::BadSpan(s.start, s.end)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(AnnotatedSentence {
            sentence: self.sentence.clone(),
            spans,
            page_id: self.page_id.clone(),
            language: self.language,
            curated: self.curated,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindSpan {
    pub start: usize,
    pub end: usize,
    pub kind: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementRecord {
    pub sentence: String,
    pub page_id: String,
    pub language: Language,
    pub sentence_index: usize,
    pub spans: Vec<KindSpan>,
    pub implicit_property_label: Option<String>,
    pub acceptance_reasons: Vec<AcceptanceReason>,
    pub fact: QuantFact,
    #[serde(default)]
    pub context_before: Vec<String>,
    #[serde(default)]
    pub context_after: Vec<String>,
}

impl MeasurementRecord {
    pub fn from_example(ex: &MeasurementExample) -> Self {
        let idx = CharIndex::new(&ex.sentence);
        MeasurementRecord {
            sentence: ex.sentence.clone(),
            page_id: ex.page_id.clone(),
            language: ex.language,
            sentence_index: ex.sentence_index,
            spans: ex
                .spans()
                .into_iter()
                .map(|(k, s)| KindSpan {
                    start: idx.to_char(s.start),
                    end: idx.to_char(s.end),
                    kind: k.name(),
                })
                .collect(),
            implicit_property_label: ex.implicit_property_label.clone(),
            acceptance_reasons: ex.reasons.iter().copied().collect(),
            fact: ex.fact.clone(),
            context_before: ex.context_before.clone(),
            context_after: ex.context_after.clone(),
        }
    }

    pub fn to_example(&self) -> Result<MeasurementExample, RecordError> {
        let idx = CharIndex::new(&self.sentence);
        let mut entity = Vec::new();
        let mut property = Vec::new();
        let mut value = Vec::new();
        let mut unit = Vec::new();
        let mut modifiers = Vec::new();
        let mut qualifiers = Vec::new();
        for s in &self.spans {
            let span = match (idx.to_byte(s.start), idx.to_byte(s.end)) {
                (Some(a), Some(b)) if a < b => Span::new(a, b),
                _ => return Err(RecordError::BadSpan(s.start, s.end)),
            };
            match SpanKind::parse_name(&s.kind)
                .ok_or_else(|| RecordError::UnknownKind(s.kind.clone()))?
            {
                SpanKind::Entity => entity.push(span),
                SpanKind::Property => property.push(span),
                SpanKind::Value => value.push(span),
                SpanKind::Unit => unit.push(span),
                SpanKind::Modifier => modifiers.push(span),
                SpanKind::Qualifier(k) => qualifiers.push((k, span)),
            }
        }
        let one = |v: Vec<Span>, name: &'static str| -> Result<Span, RecordError> {
            match v.as_slice() {
                [s] => Ok(*s),
                _ => Err(RecordError::Cardinality(name)),
            }
        };
        let at_most_one = |v: Vec<Span>, name: &'static str| -> Result<Option<Span>, RecordError> {
            match v.as_slice() {
                [] => Ok(None),
                [s] => Ok(Some(*s)),
                _ => Err(RecordError::Cardinality(name)),
            }
        };
        Ok(MeasurementExample {
            sentence: self.sentence.clone(),
            page_id: self.page_id.clone(),
            language: self.language,
            sentence_index: self.sentence_index,
            entity: one(entity, "entity")?,
            property: at_most_one(property, "property")?,
            implicit_property_label: self.implicit_property_label.clone(),
            value: one(value, "value")?,
            unit: at_most_one(unit, "unit")?,
            modifiers,
            qualifiers,
            reasons: self.acceptance_reasons.iter().copied().collect(),
            fact: self.fact.clone(),
            context_before: self.context_before.clone(),
            context_after: self.context_after.clone(),
        })
    }
}

/// Which corpus a record file holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusKind {
    Quantities,
    Measurements,
}

pub enum Corpus {
    Quantities(Vec<AnnotatedSentence>),
    Measurements(Vec<MeasurementExample>),
}

impl Corpus {
    pub fn kind(&self) -> CorpusKind {
        match self {
            Corpus::Quantities(_) => CorpusKind::Quantities,
            Corpus::Measurements(_) => CorpusKind::Measurements,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Corpus::Quantities(v) => v.len(),
            Corpus::Measurements(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn record_error(path: &Path, line: usize, e: RecordError) -> FormatError {
    FormatError::OffsetOutOfRange {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

/// Read a corpus file; the kind is taken from the first record when not
/// given.
pub fn read_corpus(path: &Path, kind: Option<CorpusKind>) -> Result<Corpus, FormatError> {
    let lines = read_lines(path)?;
    let kind = kind.unwrap_or_else(|| match lines.first() {
        Some((_, l))
            if serde_json::from_str::<serde_json::Value>(l)
                .is_ok_and(|v| v.get("fact").is_some()) =>
        {
            CorpusKind::Measurements
        }
        _ => CorpusKind::Quantities,
    });
    Ok(match kind {
        CorpusKind::Quantities => {
            let recs: Vec<QuantityRecord> = read_jsonl(path)?;
            Corpus::Quantities(
                recs.iter()
                    .enumerate()
                    .map(|(i, r)| {
                        r.to_example()
                            .map_err(|e| record_error(path, lines[i].0, e))
                    })
                    .collect::<Result<_, _>>()?,
            )
        }
        CorpusKind::Measurements => {
            let recs: Vec<MeasurementRecord> = read_jsonl(path)?;
            Corpus::Measurements(
                recs.iter()
                    .enumerate()
                    .map(|(i, r)| {
                        r.to_example()
                            .map_err(|e| record_error(path, lines[i].0, e))
                    })
                    .collect::<Result<_, _>>()?,
            )
        }
    })
}

pub fn quantity_jsonl(items: &[AnnotatedSentence]) -> String {
    to_jsonl(
        &items
            .iter()
            .map(QuantityRecord::from_example)
            .collect::<Vec<_>>(),
    )
}

pub fn measurement_jsonl(items: &[MeasurementExample]) -> String {
    to_jsonl(
        &items
            .iter()
            .map(MeasurementRecord::from_example)
            .collect::<Vec<_>>(),
    )
}

pub fn write_corpus(path: &Path, corpus: &Corpus) -> Result<(), FormatError> {
    match corpus {
        Corpus::Quantities(v) => write_file(path, &quantity_jsonl(v)),
        Corpus::Measurements(v) => write_file(path, &measurement_jsonl(v)),
    }
}
