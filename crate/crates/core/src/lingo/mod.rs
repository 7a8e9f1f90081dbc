//! Linguistic annotations behind a provider trait.
//!
//! Offsets in [`LingAnnotation`] are byte offsets into the sentence string.
//! Serialized forms (the interchange format) use character offsets; the
//! conversion lives with the file format code.

mod lexicon;
mod numbers;
mod sentences;
mod tokenize;

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lexicon::{Gazetteer, Lexicon};
pub use numbers::{digit_residue, find_numbers, number_word_value, NumberKind, NumberMention};
pub use sentences::{split_sentences, SentenceSplitter, DEFAULT_ABBREVIATIONS};
pub use tokenize::tokenize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Pos {
    Noun,
    Propn,
    Num,
    Adj,
    Adp,
    Verb,
    Det,
    Punct,
    Other,
}

impl Pos {
    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "NOUN",
            Pos::Propn => "PROPN",
            Pos::Num => "NUM",
            Pos::Adj => "ADJ",
            Pos::Adp => "ADP",
            Pos::Verb => "VERB",
            Pos::Det => "DET",
            Pos::Punct => "PUNCT",
            Pos::Other => "OTHER",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "NOUN" => Pos::Noun,
            "PROPN" => Pos::Propn,
            "NUM" => Pos::Num,
            "ADJ" => Pos::Adj,
            "ADP" => Pos::Adp,
            "VERB" => Pos::Verb,
            "DET" => Pos::Det,
            "PUNCT" => Pos::Punct,
            "OTHER" => Pos::Other,
            _ => return None,
        })
    }

    pub fn is_nominal(self) -> bool {
        matches!(self, Pos::Noun | Pos::Propn)
    }
}

/// NER labels whose spans may contain numerals in a quantity example.
pub const WHITELISTED_NER: &[&str] = &[
    "DATE",
    "EVENT",
    "FAC",
    "GPE",
    "LANGUAGE",
    "LAW",
    "LOC",
    "NORP",
    "ORG",
    "PERSON",
    "PRODUCT",
    "TIME",
    "WORK_OF_ART",
];

/// Numeric NER labels accepted in addition to the whitelist.
pub const NUMERIC_NER: &[&str] = &[
    "CARDINAL", "ORDINAL", "QUANTITY", "PERCENT", "MONEY", "DATE",
];

pub fn is_known_ner_label(label: &str) -> bool {
    WHITELISTED_NER.contains(&label) || NUMERIC_NER.contains(&label)
}

/// A named-entity span over tokens `[start, end)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NerSpan {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LingAnnotation {
    /// Byte offsets `[start, end)` of each token.
    pub tokens: Vec<(usize, usize)>,
    pub lemma: Vec<String>,
    pub pos: Vec<Pos>,
    pub ner: Vec<NerSpan>,
    /// Head token index; a token heading itself is the root.
    pub dep_head: Vec<usize>,
    pub dep_rel: Vec<String>,
    /// Token ranges `[start, end)`.
    pub noun_chunks: Vec<(usize, usize)>,
    pub like_num: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AnnotationError {
    #[error("field `{field}` has {found} entries, expected {expected}")]
    LengthMismatch {
        field: &'static str,
        found: usize,
        expected: usize,
    },
    #[error("token {index} offsets are empty, unordered or overlap the previous token")]
    BadToken { index: usize },
    #[error("token {index} ends past the sentence ({end} > {len})")]
    TokenOutOfRange {
        index: usize,
        end: usize,
        len: usize,
    },
    #[error("`{field}` entry {index} refers to token {value}, but there are {len} tokens")]
    IndexOutOfRange {
        field: &'static str,
        index: usize,
        value: usize,
        len: usize,
    },
    #[error("unknown NER label `{0}`")]
    UnknownLabel(String),
}

impl LingAnnotation {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Check the structural invariants against a sentence of `text_len`
    /// units (bytes in memory, chars in files).
    pub fn validate(&self, text_len: usize) -> Result<(), AnnotationError> {
        let n = self.tokens.len();
        let lens: [(&'static str, usize); 5] = [
            ("lemma", self.lemma.len()),
            ("pos", self.pos.len()),
            ("dep_head", self.dep_head.len()),
            ("dep_rel", self.dep_rel.len()),
            ("like_num", self.like_num.len()),
        ];
        for (field, found) in lens {
            if found != n {
                return Err(AnnotationError::LengthMismatch {
                    field,
                    found,
                    expected: n,
                });
            }
        }
        let mut prev_end = 0;
        for (i, &(s, e)) in self.tokens.iter().enumerate() {
            if s >= e || s < prev_end {
                return Err(AnnotationError::BadToken { index: i });
            }
            if e > text_len {
                return Err(AnnotationError::TokenOutOfRange {
                    index: i,
                    end: e,
                    len: text_len,
                });
            }
            prev_end = e;
        }
        for (i, &h) in self.dep_head.iter().enumerate() {
            if h >= n {
                return Err(AnnotationError::IndexOutOfRange {
                    field: "dep_head",
                    index: i,
                    value: h,
                    len: n,
                });
            }
        }
        for (i, span) in self.ner.iter().enumerate() {
            if span.start >= span.end || span.end > n {
                return Err(AnnotationError::IndexOutOfRange {
                    field: "ner",
                    index: i,
                    value: span.end,
                    len: n,
                });
            }
            if !is_known_ner_label(&span.label) {
                return Err(AnnotationError::UnknownLabel(span.label.clone()));
            }
        }
        for (i, &(s, e)) in self.noun_chunks.iter().enumerate() {
            if s >= e || e > n {
                return Err(AnnotationError::IndexOutOfRange {
                    field: "noun_chunks",
                    index: i,
                    value: e,
                    len: n,
                });
            }
        }
        Ok(())
    }

    pub fn token_text<'a>(&self, text: &'a str, i: usize) -> &'a str {
        let (s, e) = self.tokens[i];
        &text[s..e]
    }

    /// Index of the token containing byte offset `b`.
    pub fn token_at(&self, b: usize) -> Option<usize> {
        self.tokens.iter().position(|&(s, e)| s <= b && b < e)
    }

    /// Tokens fully inside the byte range `[start, end)`.
    pub fn tokens_in(&self, start: usize, end: usize) -> core::ops::Range<usize> {
        let first = self
            .tokens
            .iter()
            .position(|&(s, _)| s >= start)
            .unwrap_or(self.len());
        let mut last = first;
        while last < self.len() && self.tokens[last].1 <= end {
            last += 1;
        }
        first..last
    }

    /// NER label of the span covering token `i`, if any.
    pub fn ner_label(&self, i: usize) -> Option<&str> {
        self.ner
            .iter()
            .find(|s| s.start <= i && i < s.end)
            .map(|s| s.label.as_str())
    }

    pub fn ner_span_of(&self, i: usize) -> Option<&NerSpan> {
        self.ner.iter().find(|s| s.start <= i && i < s.end)
    }

    /// Byte range of tokens `[start, end)`.
    pub fn byte_range(&self, start: usize, end: usize) -> (usize, usize) {
        (self.tokens[start].0, self.tokens[end - 1].1)
    }

    /// Whether `b` follows `a` directly, with at most one space between.
    pub fn adjacent(&self, text: &str, a: usize, b: usize) -> bool {
        if b != a + 1 {
            return false;
        }
        let gap = &text[self.tokens[a].1..self.tokens[b].0];
        gap.is_empty() || gap == " " || gap == "\u{a0}"
    }

    /// Path length between two tokens in the dependency tree, or `None` if
    /// they are not connected.
    pub fn dep_distance(&self, a: usize, b: usize) -> Option<usize> {
        let path = |mut x: usize| {
            let mut seen = Vec::new();
            loop {
                seen.push(x);
                let h = self.dep_head[x];
                if h == x || seen.len() > self.len() {
                    break;
                }
                x = h;
            }
            seen
        };
        let pa = path(a);
        let pb = path(b);
        for (i, x) in pa.iter().enumerate() {
            if let Some(j) = pb.iter().position(|y| y == x) {
                return Some(i + j);
            }
        }
        None
    }
}

/// Produces annotations for one sentence at a time.
pub trait LingProvider: Send + Sync {
    fn annotate(&self, sentence: &str) -> LingAnnotation;
}

/// Rule-based provider: tokenizer, lemma tables, heuristic tags, gazetteer
/// NER and a chain-shaped dependency structure.
#[derive(Clone, Debug)]
pub struct BuiltinProvider {
    lexicon: Lexicon,
    gazetteer: Gazetteer,
}

impl Default for BuiltinProvider {
    fn default() -> Self {
        Self::new(Gazetteer::builtin())
    }
}

impl BuiltinProvider {
    pub fn new(gazetteer: Gazetteer) -> Self {
        BuiltinProvider {
            lexicon: Lexicon::builtin(),
            gazetteer,
        }
    }

    pub fn gazetteer(&self) -> &Gazetteer {
        &self.gazetteer
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }
}

impl LingProvider for BuiltinProvider {
    fn annotate(&self, sentence: &str) -> LingAnnotation {
        let tokens = tokenize(sentence);
        let words: Vec<&str> = tokens.iter().map(|&(s, e)| &sentence[s..e]).collect();
        let n = words.len();
        let like_num: Vec<bool> = words.iter().map(|w| numbers::token_like_num(w)).collect();
        let ner = self.gazetteer.tag(sentence, &tokens, &words);
        let mut pos = Vec::with_capacity(n);
        for (i, w) in words.iter().enumerate() {
            let in_name = ner.iter().any(|s| {
                s.start <= i
                    && i < s.end
                    && !matches!(s.label.as_str(), "DATE" | "ORDINAL" | "CARDINAL")
            });
            pos.push(self.lexicon.tag(w, i, &words, like_num[i], in_name));
        }
        let lemma: Vec<String> = words
            .iter()
            .zip(&pos)
            .map(|(w, p)| self.lexicon.lemma(w, *p))
            .collect();
        let root = pos.iter().position(|p| *p == Pos::Verb).unwrap_or(0);
        // a chain toward the root: path length equals token distance
        let dep_head = (0..n)
            .map(|i| match i.cmp(&root) {
                core::cmp::Ordering::Less => i + 1,
                core::cmp::Ordering::Equal => root,
                core::cmp::Ordering::Greater => i - 1,
            })
            .collect();
        let dep_rel = (0..n)
            .map(|i| if i == root { "ROOT" } else { "dep" }.to_string())
            .collect();
        let noun_chunks = noun_chunks(&pos);
        LingAnnotation {
            tokens,
            lemma,
            pos,
            ner,
            dep_head,
            dep_rel,
            noun_chunks,
            like_num,
        }
    }
}

/// Maximal DET/ADJ/NOUN/PROPN runs, cut back to end on a noun.
fn noun_chunks(pos: &[Pos]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < pos.len() {
        if matches!(pos[i], Pos::Det | Pos::Adj | Pos::Noun | Pos::Propn) {
            let start = i;
            while i < pos.len() && matches!(pos[i], Pos::Det | Pos::Adj | Pos::Noun | Pos::Propn) {
                i += 1;
            }
            let mut end = i;
            while end > start && !pos[end - 1].is_nominal() {
                end -= 1;
            }
            if end > start {
                out.push((start, end));
            }
        } else {
            i += 1;
        }
    }
    out
}
