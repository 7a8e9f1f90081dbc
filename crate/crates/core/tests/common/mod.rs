//! Fixture loaders shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use std::path::PathBuf;

use corpusforge_core::align::{
    resolve_conflicts, AlignRejection, Aligner, AlignerConfig, MeasurementExample,
};
use corpusforge_core::facts::{
    FactUnit, Labelled, Qualifier, QualifierKind, QualifierValue, QuantFact, TimePrecision,
};
use corpusforge_core::lingo::BuiltinProvider;
use corpusforge_core::units::UnitRegistry;
use corpusforge_core::wikitext::Language;
use serde::Deserialize;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

pub fn read_fixture(name: &str) -> String {
    let path = fixture_dir().join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldFact {
    pub entity: String,
    #[serde(default)]
    pub entity_alts: Vec<String>,
    pub property: String,
    #[serde(default)]
    pub property_alts: Vec<String>,
    pub value: f64,
    /// Registry code, or "1" for counts.
    pub unit: String,
    #[serde(default)]
    pub bounds: Option<(f64, f64)>,
    #[serde(default)]
    pub qualifiers: Vec<GoldQualifier>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldQualifier {
    pub kind: String,
    #[serde(default)]
    pub time: Option<String>,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub lat: Option<f64>,
    #[serde(default)]
    pub lon: Option<f64>,
}

#[derive(Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GoldExample {
    pub entity: String,
    #[serde(default)]
    pub property: Option<String>,
    pub value: String,
    #[serde(default)]
    pub unit: Option<String>,
    #[serde(default)]
    pub modifiers: Vec<String>,
    #[serde(default)]
    pub qualifiers: Vec<(String, String)>,
    #[serde(default)]
    pub implicit: bool,
    #[serde(default)]
    pub reasons: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldCase {
    pub name: String,
    pub sentence: String,
    pub facts: Vec<GoldFact>,
    #[serde(default)]
    pub expect: Vec<GoldExample>,
    /// Expected rejection when a single fact yields nothing.
    #[serde(default)]
    pub reject: Option<String>,
}

fn time_value(s: &str) -> QualifierValue {
    let parts: Vec<&str> = s.split('-').collect();
    let num = |i: usize| parts.get(i).map_or(1, |p| p.parse::<u8>().unwrap());
    QualifierValue::Time {
        year: parts[0].parse().unwrap(),
        month: num(1),
        day: num(2),
        precision: match parts.len() {
            1 => TimePrecision::Year,
            2 => TimePrecision::Month,
            _ => TimePrecision::Day,
        },
    }
}

impl GoldFact {
    pub fn to_fact(&self, registry: &UnitRegistry) -> QuantFact {
        let unit = if self.unit == "1" {
            FactUnit::count()
        } else {
            FactUnit::from_registry("Qunit", &self.unit, registry)
                .unwrap_or_else(|| panic!("unit {}", self.unit))
        };
        let qualifiers = self
            .qualifiers
            .iter()
            .map(|q| {
                let kind =
                    QualifierKind::parse(&q.kind).unwrap_or_else(|| panic!("kind {}", q.kind));
                let value = if let Some(t) = &q.time {
                    time_value(t)
                } else if let Some(t) = &q.text {
                    QualifierValue::Text {
                        text: t.clone(),
                        id: None,
                    }
                } else {
                    QualifierValue::Coordinates {
                        lat: q.lat.unwrap(),
                        lon: q.lon.unwrap(),
                    }
                };
                Qualifier {
                    pid: String::new(),
                    kind,
                    value,
                }
            })
            .collect();
        QuantFact {
            article: self.entity.clone(),
            entity: Labelled {
                id: "Qentity".into(),
                label: self.entity.clone(),
                alt_labels: self.entity_alts.clone(),
            },
            property: Labelled {
                id: "Pproperty".into(),
                label: self.property.clone(),
                alt_labels: self.property_alts.clone(),
            },
            value: self.value,
            unit,
            lower_bound: self.bounds.map(|b| b.0),
            upper_bound: self.bounds.map(|b| b.1),
            qualifiers,
        }
    }
}

pub fn load_gold(text: &str) -> Vec<GoldCase> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).unwrap_or_else(|e| panic!("gold line {}: {e}", i + 1))
        })
        .collect()
}

pub fn describe(ex: &MeasurementExample) -> GoldExample {
    let t = |s: corpusforge_core::align::Span| s.text(&ex.sentence).to_string();
    GoldExample {
        entity: t(ex.entity),
        property: ex.property.map(t),
        value: t(ex.value),
        unit: ex.unit.map(t),
        modifiers: ex.modifiers.iter().map(|m| t(*m)).collect(),
        qualifiers: ex
            .qualifiers
            .iter()
            .map(|(k, s)| (k.as_str().to_string(), t(*s)))
            .collect(),
        implicit: ex.implicit_property_label.is_some(),
        reasons: ex.reasons.iter().map(|r| r.as_str().to_string()).collect(),
    }
}

pub struct CaseOutcome {
    pub examples: Vec<MeasurementExample>,
    pub rejections: Vec<AlignRejection>,
}

pub fn run_case(
    case: &GoldCase,
    registry: &UnitRegistry,
    provider: &BuiltinProvider,
    cfg: &AlignerConfig,
) -> CaseOutcome {
    let aligner = Aligner::new(registry, provider, cfg.clone());
    let view = aligner.view(&case.sentence);
    let mut examples = Vec::new();
    let mut rejections = Vec::new();
    for f in &case.facts {
        match aligner.align_sentence(&view, &f.to_fact(registry), ("gold", Language::En, 0)) {
            Ok(ex) => examples.push(ex),
            Err(r) => rejections.push(r),
        }
    }
    CaseOutcome {
        examples: resolve_conflicts(examples),
        rejections,
    }
}

/// `Ok` when the outcome matches the case, else a description of the
/// difference.
pub fn check_case(case: &GoldCase, out: &CaseOutcome) -> Result<(), String> {
    let got: Vec<GoldExample> = out.examples.iter().map(describe).collect();
    if got != case.expect {
        return Err(format!(
            "{}: expected {:?}, got {:?} (rejections {:?})",
            case.name, case.expect, got, out.rejections
        ));
    }
    if let Some(r) = &case.reject {
        let names: Vec<String> = out
            .rejections
            .iter()
            .map(|x| {
                serde_json::to_value(x)
                    .unwrap()
                    .as_str()
                    .unwrap()
                    .to_string()
            })
            .collect();
        if !names.contains(r) {
            return Err(format!(
                "{}: expected rejection {r}, got {names:?}",
                case.name
            ));
        }
    }
    Ok(())
}

use corpusforge_core::quantities::{AnnotatedSentence, QuantitySpan};
use corpusforge_core::rng::stage_rng;
use rand::seq::SliceRandom;
use rand::Rng;

const NAMES: &[&str] = &[
    "Arlo", "Venn", "Castor", "Bruma", "Ketter", "Dalby", "Orsk", "Pellam", "Quill", "Ruda",
    "Selk", "Tamsin",
];

const WORDS: &[&str] = &[
    "the", "old", "town", "river", "valley", "museum", "station", "north", "bridge", "road",
    "park", "hall", "built", "near", "large", "small", "village", "lake", "church", "market",
];

/// Quantity sentences with many near-duplicates: random word sequences
/// and perturbed copies of earlier ones.
pub fn dedup_corpus(n: usize, seed: u64) -> Vec<AnnotatedSentence> {
    let mut rng = stage_rng(seed, "fixture", "dedup");
    let mut bodies: Vec<Vec<String>> = Vec::new();
    for _ in 0..n {
        let body: Vec<String> = if !bodies.is_empty() && rng.random_bool(0.6) {
            let mut b = bodies[rng.random_range(0..bodies.len())].clone();
            for _ in 0..rng.random_range(0..6) {
                let i = rng.random_range(0..b.len());
                match rng.random_range(0..3) {
                    0 if b.len() > 3 => {
                        b.remove(i);
                    }
                    1 => b[i] = WORDS[rng.random_range(0..WORDS.len())].to_string(),
                    _ => b.insert(i, WORDS[rng.random_range(0..WORDS.len())].to_string()),
                }
            }
            b
        } else {
            (0..rng.random_range(4..20))
                .map(|_| WORDS[rng.random_range(0..WORDS.len())].to_string())
                .collect()
        };
        bodies.push(body);
    }
    bodies
        .into_iter()
        .map(|b| {
            let mut s = String::from("It is ");
            let q0 = s.len();
            s.push_str(&format!("{} km", rng.random_range(1..500)));
            let q1 = s.len();
            s.push(' ');
            s.push_str(&b.join(" "));
            s.push('.');
            let span = QuantitySpan::new(&s, q0, q1);
            AnnotatedSentence {
                sentence: s,
                spans: vec![span],
                page_id: "fixture".into(),
                language: Language::En,
                curated: false,
            }
        })
        .collect()
}

/// A (sentence, fact) pair whose alignment is expected to succeed.
pub struct StrictCase {
    pub sentence: String,
    pub fact: GoldFact,
}

fn simple_fact(entity: &str, property: &str, value: f64, unit: &str) -> GoldFact {
    GoldFact {
        entity: entity.into(),
        entity_alts: vec![],
        property: property.into(),
        property_alts: vec![],
        value,
        unit: unit.into(),
        bounds: None,
        qualifiers: vec![],
    }
}

/// Mixed strong and weak alignments built from templates.
pub fn strict_corpus(n: usize, seed: u64) -> Vec<StrictCase> {
    let mut rng = stage_rng(seed, "fixture", "strict");
    (0..n)
        .map(|i| {
            let name = format!("Lake {}", NAMES[i % NAMES.len()]);
            let other = format!("Lake {}", NAMES[(i + 5) % NAMES.len()]);
            let v = rng.random_range(11..90_000) as f64;
            let shown = corpusforge_core::num::group_thousands(&format!("{v}"));
            match rng.random_range(0..6) {
                0 => StrictCase {
                    sentence: format!("{name} has an area of {shown} km²."),
                    fact: simple_fact(&name, "area", v, "km2"),
                },
                1 => StrictCase {
                    sentence: format!("It has an area of {shown} km²."),
                    fact: simple_fact(&name, "area", v, "km2"),
                },
                2 => StrictCase {
                    sentence: format!("{name} had {shown} visitors."),
                    fact: simple_fact(&name, "visitor count", v, "1"),
                },
                3 => StrictCase {
                    sentence: format!(
                        "{name} is larger than {other}, and {name} has a depth of {shown} m."
                    ),
                    fact: simple_fact(&name, "depth", v, "m"),
                },
                4 => StrictCase {
                    sentence: format!("{name} has an area of {shown} km²."),
                    fact: simple_fact(&name, "area", v * 1.02, "km2"),
                },
                _ => StrictCase {
                    sentence: format!("{name} has a depth of {shown} ft."),
                    fact: simple_fact(&name, "depth", v * 0.3048, "m"),
                },
            }
        })
        .collect()
}

pub fn align_cases(
    cases: &[StrictCase],
    cfg: &AlignerConfig,
) -> (Vec<MeasurementExample>, Vec<(usize, AlignRejection)>) {
    let registry = UnitRegistry::builtin();
    let provider = BuiltinProvider::default();
    let aligner = Aligner::new(&registry, &provider, cfg.clone());
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for (i, c) in cases.iter().enumerate() {
        let view = aligner.view(&c.sentence);
        match aligner.align_sentence(
            &view,
            &c.fact.to_fact(&registry),
            ("fixture", Language::En, i),
        ) {
            Ok(ex) => ok.push(ex),
            Err(r) => bad.push((i, r)),
        }
    }
    (ok, bad)
}

/// Candidates for one sentence that exercise every conflict rule, and the
/// survivors expected after resolution (as entity/qualifier descriptions).
pub fn conflict_fixture() -> Vec<MeasurementExample> {
    let registry = UnitRegistry::builtin();
    let provider = BuiltinProvider::default();
    let aligner = Aligner::new(&registry, &provider, AlignerConfig::default());
    let year = |y: &str| GoldQualifier {
        kind: "point_in_time".into(),
        time: Some(y.into()),
        text: None,
        lat: None,
        lon: None,
    };
    let sentences = [
        // identical pair: one survives
        (
            "Libon had a population of 74,976.",
            vec![
                simple_fact("Libon", "population", 74976.0, "1"),
                simple_fact("Libon", "population", 74976.0, "1"),
            ],
        ),
        // qualifier subset: the qualified one survives
        ("In 2010, Libon had a population of 74,976.", {
            let mut q = simple_fact("Libon", "population", 74976.0, "1");
            q.qualifiers.push(year("2010"));
            vec![simple_fact("Libon", "population", 74976.0, "1"), q]
        }),
        // contradicting qualifiers: both dropped
        ("In 2010 and 2011, Libon had a population of 74,976.", {
            let mut a = simple_fact("Libon", "population", 74976.0, "1");
            a.qualifiers.push(year("2010"));
            let mut b = simple_fact("Libon", "population", 74976.0, "1");
            b.qualifiers.push(year("2011"));
            vec![a, b]
        }),
        // different entities for one value: both dropped
        (
            "Libon and Ligao had a population of 74,976.",
            vec![
                simple_fact("Libon", "population", 74976.0, "1"),
                simple_fact("Ligao", "population", 74976.0, "1"),
            ],
        ),
        // same annotations, different fact values: both dropped
        (
            "Oas had a population of 65,000.",
            vec![
                simple_fact("Oas", "population", 65000.0, "1"),
                simple_fact("Oas", "population", 64800.0, "1"),
            ],
        ),
    ];
    let mut out = Vec::new();
    for (si, (s, facts)) in sentences.iter().enumerate() {
        let view = aligner.view(s);
        for f in facts {
            let ex = aligner
                .align_sentence(
                    &view,
                    &f.to_fact(&registry),
                    ("conflicts", Language::En, si),
                )
                .unwrap_or_else(|e| panic!("{s}: {e:?}"));
            out.push(ex);
        }
    }
    out
}

/// Shuffle with a seeded generator.
pub fn shuffled<T: Clone>(items: &[T], seed: u64) -> Vec<T> {
    let mut v = items.to_vec();
    v.shuffle(&mut stage_rng(seed, "fixture", "shuffle"));
    v
}
