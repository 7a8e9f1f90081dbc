//! Number detection: digit numerals, fractions, number words, ordinals and
//! date parts.

use alloc::string::ToString;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::lexicon::{is_month, is_ordinal_digits, is_year, ordinal_word_value};
use super::LingAnnotation;
use crate::num::{parse_number, Decimal};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumberKind {
    Cardinal,
    Word,
    Fraction,
    Ordinal,
    DatePart,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumberMention {
    /// Byte offsets in the sentence.
    pub start: usize,
    pub end: usize,
    /// First and one-past-last token.
    pub tok_start: usize,
    pub tok_end: usize,
    pub value: Option<Decimal>,
    pub kind: NumberKind,
    pub preceded_by_per: bool,
}

impl NumberMention {
    /// Candidates for value matching: cardinals, words and fractions not
    /// preceded by "per".
    pub fn is_matchable(&self) -> bool {
        matches!(
            self.kind,
            NumberKind::Cardinal | NumberKind::Word | NumberKind::Fraction
        ) && !self.preceded_by_per
            && self.value.is_some()
    }
}

const UNITS: &[(&str, u64)] = &[
    ("zero", 0),
    ("one", 1),
    ("two", 2),
    ("three", 3),
    ("four", 4),
    ("five", 5),
    ("six", 6),
    ("seven", 7),
    ("eight", 8),
    ("nine", 9),
    ("ten", 10),
    ("eleven", 11),
    ("twelve", 12),
    ("thirteen", 13),
    ("fourteen", 14),
    ("fifteen", 15),
    ("sixteen", 16),
    ("seventeen", 17),
    ("eighteen", 18),
    ("nineteen", 19),
    ("twenty", 20),
    ("thirty", 30),
    ("forty", 40),
    ("fifty", 50),
    ("sixty", 60),
    ("seventy", 70),
    ("eighty", 80),
    ("ninety", 90),
    ("dozen", 12),
];

const SCALES: &[(&str, u64)] = &[
    ("hundred", 100),
    ("thousand", 1_000),
    ("million", 1_000_000),
    ("billion", 1_000_000_000),
];

fn unit_word(w: &str) -> Option<u64> {
    let l = w.to_lowercase();
    UNITS.iter().find(|(k, _)| *k == l).map(|(_, v)| *v)
}

fn scale_word(w: &str) -> Option<u64> {
    let l = w.to_lowercase();
    SCALES.iter().find(|(k, _)| *k == l).map(|(_, v)| *v)
}

/// Value of a number word ("seven", "hundred", "dozen").
pub fn number_word_value(w: &str) -> Option<u64> {
    unit_word(w).or_else(|| scale_word(w))
}

/// A token that reads as a number on its own.
pub fn token_like_num(w: &str) -> bool {
    parse_number(w).is_some() || number_word_value(w).is_some()
}

/// Compose a run of number words, e.g. ["two", "hundred", "fifty"] → 250.
/// Returns `None` when the run is not well-formed (e.g. "hundred two
/// hundred").
pub fn compose_words(words: &[&str]) -> Option<u64> {
    let mut total: u64 = 0;
    let mut current: u64 = 0;
    let mut last_scale = u64::MAX;
    let mut seen_any = false;
    for w in words {
        if let Some(v) = unit_word(w) {
            // "twenty one" is fine; "one twenty", "ten five" and "five six" are not
            let r = current % 100;
            if r != 0 && (r < 20 || !r.is_multiple_of(10) || v >= 10) {
                return None;
            }
            current += v;
            seen_any = true;
        } else {
            let s = scale_word(w)?;
            if s == 100 {
                if current == 0 || current >= 100 {
                    return None;
                }
                current *= 100;
            } else {
                if s >= last_scale {
                    return None;
                }
                total += current.max(1) * s;
                current = 0;
                last_scale = s;
            }
            seen_any = true;
        }
    }
    seen_any.then_some(total + current)
}

/// Every number mention in a sentence, without overlaps.
pub fn find_numbers(sentence: &str, ann: &LingAnnotation) -> Vec<NumberMention> {
    let n = ann.len();
    let words: Vec<&str> = (0..n).map(|i| ann.token_text(sentence, i)).collect();
    let glued = |a: usize, b: usize| ann.tokens[a].1 == ann.tokens[b].0;
    let in_date = |i: usize| ann.ner_label(i) == Some("DATE");
    let mut out: Vec<NumberMention> = Vec::new();
    let mut i = 0;
    while i < n {
        let w = words[i];
        let per = i > 0 && ann.lemma[i - 1].eq_ignore_ascii_case("per");

        if is_ordinal_digits(w) || ordinal_word_value(w).is_some() {
            let v = if is_ordinal_digits(w) {
                let d = w.bytes().take_while(u8::is_ascii_digit).count();
                Decimal::parse(&w[..d])
            } else {
                ordinal_word_value(w).and_then(|v| Decimal::parse(&v.to_string()))
            };
            out.push(mention(ann, i, i + 1, v, NumberKind::Ordinal, per));
            i += 1;
            continue;
        }

        if let Some(value) = parse_number(w) {
            if !w.bytes().next().is_some_and(|b| b.is_ascii_digit()) && !w.starts_with('.') {
                i += 1;
                continue;
            }
            let mut start = i;
            // leading sign glued to the number and not glued to a word before
            if i > 0
                && matches!(words[i - 1], "-" | "\u{2212}" | "+")
                && glued(i - 1, i)
                && (i < 2 || !glued(i - 2, i - 1))
            {
                start = i - 1;
            }
            // fraction a/b
            if i + 2 < n
                && words[i + 1] == "/"
                && glued(i, i + 1)
                && glued(i + 1, i + 2)
                && w.bytes().all(|b| b.is_ascii_digit())
                && words[i + 2].bytes().all(|b| b.is_ascii_digit())
            {
                let den = parse_number(words[i + 2]).unwrap_or(0.0);
                let v = if den != 0.0 {
                    Some(Decimal {
                        repr: alloc::format!("{}/{}", w, words[i + 2]),
                        value: value / den,
                    })
                } else {
                    None
                };
                out.push(mention(ann, start, i + 3, v, NumberKind::Fraction, per));
                i += 3;
                continue;
            }
            let date_part = in_date(i) || is_date_adjacent(&words, i);
            if date_part {
                out.push(mention(
                    ann,
                    start,
                    i + 1,
                    Decimal::parse(w),
                    NumberKind::DatePart,
                    per,
                ));
                i += 1;
                continue;
            }
            // "2 million", "1.5 billion"
            let mut end = i + 1;
            let mut v = if start < i && words[start] != "+" {
                -value
            } else {
                value
            };
            while end < n && scale_word(words[end]).is_some_and(|s| s >= 1_000) {
                v *= scale_word(words[end]).unwrap_or(1) as f64;
                end += 1;
            }
            let repr = if end > i + 1 {
                crate::num::format_rounded(v, 0).replace(',', "")
            } else {
                words[start..=i].concat()
            };
            let dec = if start < i || end > i + 1 {
                Decimal::parse(&repr)
            } else {
                Decimal::parse(w)
            };
            out.push(mention(ann, start, end, dec, NumberKind::Cardinal, per));
            i = end;
            continue;
        }

        if number_word_value(w).is_some() {
            // longest well-formed run of number words joined by spaces,
            // hyphens or "and"
            let mut best: Option<(usize, u64)> = None;
            let mut run: Vec<&str> = Vec::new();
            let mut j = i;
            while j < n {
                if number_word_value(words[j]).is_some() {
                    run.push(words[j]);
                    if let Some(v) = compose_words(&run) {
                        best = Some((j + 1, v));
                    } else {
                        break;
                    }
                    j += 1;
                } else if (words[j] == "-" || words[j].eq_ignore_ascii_case("and"))
                    && j + 1 < n
                    && number_word_value(words[j + 1]).is_some()
                {
                    j += 1;
                } else {
                    break;
                }
            }
            if let Some((end, v)) = best {
                let dec = Decimal::parse(&v.to_string());
                out.push(mention(ann, i, end, dec, NumberKind::Word, per));
                i = end;
                continue;
            }
        }
        i += 1;
    }
    out
}

fn mention(
    ann: &LingAnnotation,
    tok_start: usize,
    tok_end: usize,
    value: Option<Decimal>,
    kind: NumberKind,
    preceded_by_per: bool,
) -> NumberMention {
    let (start, end) = ann.byte_range(tok_start, tok_end);
    NumberMention {
        start,
        end,
        tok_start,
        tok_end,
        value,
        kind,
        preceded_by_per,
    }
}

fn is_date_adjacent(words: &[&str], i: usize) -> bool {
    let w = words[i];
    let plain = w.bytes().all(|b| b.is_ascii_digit());
    if !plain || w.len() > 4 {
        return false;
    }
    let near_month = |k: Option<usize>| k.and_then(|k| words.get(k)).is_some_and(|x| is_month(x));
    if near_month(i.checked_sub(1)) || near_month(Some(i + 1)) {
        return true;
    }
    // "March 5, 2010"
    is_year(w) && i >= 3 && words[i - 1] == "," && near_month(Some(i - 3))
}

/// Byte ranges of digit characters not covered by any mention nor by a
/// DATE or ORDINAL entity span.
pub fn digit_residue(
    sentence: &str,
    ann: &LingAnnotation,
    mentions: &[NumberMention],
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (b, c) in sentence.char_indices() {
        if !c.is_ascii_digit() {
            continue;
        }
        if mentions.iter().any(|m| m.start <= b && b < m.end) {
            continue;
        }
        let covered = ann
            .token_at(b)
            .is_some_and(|t| matches!(ann.ner_label(t), Some("DATE") | Some("ORDINAL")));
        if !covered {
            out.push((b, b + 1));
        }
    }
    out
}
