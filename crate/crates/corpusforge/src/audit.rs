//! Manual audit support: draw a seeded sample into a TSV sheet with an
//! empty verdict column, then score the filled-in sheet.

use std::collections::BTreeMap;

use corpusforge_core::align::MeasurementExample;
use corpusforge_core::quantities::AnnotatedSentence;
use corpusforge_core::rng::sample_indices;
use serde::Serialize;
use thiserror::Error;

use crate::formats::Corpus;

pub const HEADER: &str = "index\tpage_id\tsentence\tannotation\tverdict";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Correct,
    Partial,
    Wrong,
}

impl Verdict {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "correct" | "c" => Some(Verdict::Correct),
            "partial" | "p" => Some(Verdict::Partial),
            "wrong" | "w" => Some(Verdict::Wrong),
            _ => None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AuditError {
    #[error("sample of {n} requested from a corpus of {len}")]
    SampleTooLarge { n: usize, len: usize },
    #[error("line {line}: expected 5 tab-separated columns")]
    Columns { line: usize },
    #[error("line {line}: unknown verdict {verdict:?}")]
    Verdict { line: usize, verdict: String },
    #[error("missing header line")]
    Header,
}

fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

fn quantity_annotation(ex: &AnnotatedSentence) -> String {
    ex.spans
        .iter()
        .map(|s| format!("Q={}", s.text))
        .collect::<Vec<_>>()
        .join("; ")
}

fn measurement_annotation(ex: &MeasurementExample) -> String {
    let mut parts: Vec<String> = ex
        .spans()
        .into_iter()
        .map(|(k, sp)| format!("{}={}", k.tag(), sp.text(&ex.sentence)))
        .collect();
    if let Some(l) = &ex.implicit_property_label {
        parts.push(format!("PROP*={l}"));
    }
    parts.join("; ")
}

/// Audit sheet for `n` examples drawn with the `audit` stream of `seed`.
pub fn sample_sheet(corpus: &Corpus, n: usize, seed: u64) -> Result<String, AuditError> {
    let len = corpus.len();
    if n > len {
        return Err(AuditError::SampleTooLarge { n, len });
    }
    let mut out = String::from(HEADER);
    out.push('\n');
    for i in sample_indices(len, n, seed, "audit") {
        let (page, sentence, ann) = match corpus {
            Corpus::Quantities(v) => (&v[i].page_id, &v[i].sentence, quantity_annotation(&v[i])),
            Corpus::Measurements(v) => {
                (&v[i].page_id, &v[i].sentence, measurement_annotation(&v[i]))
            }
        };
        out.push_str(&format!(
            "{i}\t{}\t{}\t{}\t\n",
            clean(page),
            clean(sentence),
            clean(&ann)
        ));
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AuditScore {
    pub scored: usize,
    pub unscored: usize,
    pub counts: BTreeMap<String, usize>,
    /// Share judged fully correct.
    pub strict_accuracy: f64,
    /// Share judged correct or partially correct.
    pub lenient_accuracy: f64,
}

pub fn score_sheet(text: &str) -> Result<AuditScore, AuditError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim_end() == HEADER => {}
        _ => return Err(AuditError::Header),
    }
    let mut score = AuditScore::default();
    let mut by: BTreeMap<Verdict, usize> = BTreeMap::new();
    for (i, line) in lines {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(AuditError::Columns { line: i + 1 });
        }
        let raw = cols[4].trim();
        if raw.is_empty() {
            score.unscored += 1;
            continue;
        }
        let v = Verdict::parse(raw).ok_or_else(|| AuditError::Verdict {
            line: i + 1,
            verdict: raw.into(),
        })?;
        *by.entry(v).or_insert(0) += 1;
        score.scored += 1;
    }
    let get = |v| by.get(&v).copied().unwrap_or(0);
    if score.scored > 0 {
        let n = score.scored as f64;
        score.strict_accuracy = get(Verdict::Correct) as f64 / n;
        score.lenient_accuracy = (get(Verdict::Correct) + get(Verdict::Partial)) as f64 / n;
    }
    for (v, name) in [
        (Verdict::Correct, "correct"),
        (Verdict::Partial, "partial"),
        (Verdict::Wrong, "wrong"),
    ] {
        score.counts.insert(name.into(), get(v));
    }
    Ok(score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use corpusforge_core::quantities::QuantitySpan;
    use corpusforge_core::wikitext::Language;

    fn corpus(n: usize) -> Corpus {
        Corpus::Quantities(
            (0..n)
                .map(|i| {
                    let s = format!("Item {i} is 3 m\tlong.");
                    AnnotatedSentence {
                        spans: vec![QuantitySpan::new(
                            &s,
                            s.find("3 m").unwrap(),
                            s.find("3 m").unwrap() + 3,
                        )],
                        sentence: s,
                        page_id: format!("p{i}"),
                        language: Language::En,
                        curated: false,
                    }
                })
                .collect(),
        )
    }

    #[test]
    fn sample_is_seeded_and_blank() {
        let c = corpus(20);
        let a = sample_sheet(&c, 5, 1).unwrap();
        assert_eq!(a, sample_sheet(&c, 5, 1).unwrap());
        assert_ne!(a, sample_sheet(&c, 5, 2).unwrap());
        assert_eq!(a.lines().count(), 6);
        assert!(a
            .lines()
            .skip(1)
            .all(|l| l.ends_with('\t') && l.split('\t').count() == 5));
        assert!(a.contains("Q=3 m"));
        assert_eq!(
            sample_sheet(&c, 21, 1),
            Err(AuditError::SampleTooLarge { n: 21, len: 20 })
        );
    }

    #[test]
    fn scoring() {
        let sheet = format!("{HEADER}\n1\tp\ts\ta\tcorrect\n2\tp\ts\ta\tpartial\n3\tp\ts\ta\twrong\n4\tp\ts\ta\tc\n5\tp\ts\ta\t\n");
        let s = score_sheet(&sheet).unwrap();
        assert_eq!(s.scored, 4);
        assert_eq!(s.unscored, 1);
        assert_eq!(s.strict_accuracy, 0.5);
        assert_eq!(s.lenient_accuracy, 0.75);
        assert!(matches!(
            score_sheet(&format!("{HEADER}\n1\tp\ts\ta\tmaybe\n")),
            Err(AuditError::Verdict { .. })
        ));
        assert_eq!(score_sheet("x\n"), Err(AuditError::Header));
    }
}
