//! Fixture corpora shared by the integration tests and the acceptance
//! runner.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use corpusforge::config::PipelineConfig;
use corpusforge::formats::{read_facts, read_pages};
use corpusforge::pipeline::{facts_by_page, process_pages, Resources};
use corpusforge_core::align::{Aligner, MeasurementExample};
use corpusforge_core::facts::QuantFact;
use corpusforge_core::lingo::{find_numbers, BuiltinProvider, LingProvider, WHITELISTED_NER};
use corpusforge_core::quantities::AnnotatedSentence;
use corpusforge_core::wikitext::PageSource;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn pages() -> Vec<PageSource> {
    read_pages(&fixtures().join("pages50.jsonl")).unwrap()
}

pub fn facts() -> Vec<QuantFact> {
    read_facts(&fixtures().join("facts50.jsonl")).unwrap()
}

/// Accepted quantity examples of the page fixture, before deduplication.
pub fn quantity_examples(cfg: &PipelineConfig) -> Vec<AnnotatedSentence> {
    let res = Resources::load(cfg).unwrap();
    process_pages(&pages(), &res, cfg).0
}

/// Aligned measurement examples of the page and fact fixtures.
pub fn measurement_examples() -> Vec<MeasurementExample> {
    let cfg = PipelineConfig::default();
    let res = Resources::load(&cfg).unwrap();
    let pages = pages();
    let facts = facts();
    let (grouped, _) = facts_by_page(&pages, &facts);
    let aligner = Aligner::new(&res.registry, res.provider.as_ref(), cfg.aligner.clone());
    pages
        .iter()
        .zip(&grouped)
        .flat_map(|(p, fs)| {
            let owned: Vec<QuantFact> = fs.iter().map(|f| (*f).clone()).collect();
            aligner.align_page(p, &owned).examples
        })
        .collect()
}

/// Byte ranges of numbers left unexplained: number mentions, and any
/// digit run, outside quantity spans and whitelisted entity spans.
pub fn unexplained(sentence: &str, spans: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let ann = BuiltinProvider::default().annotate(sentence);
    let mut allowed = spans.to_vec();
    for n in &ann.ner {
        if WHITELISTED_NER.contains(&n.label.as_str()) {
            allowed.push(ann.byte_range(n.start, n.end));
        }
    }
    let inside = |a: usize, b: usize| allowed.iter().any(|&(s, e)| s <= a && b <= e);
    let mut out: Vec<(usize, usize)> = find_numbers(sentence, &ann)
        .into_iter()
        .map(|m| (m.start, m.end))
        .filter(|&(a, b)| !inside(a, b))
        .collect();
    let mut i = 0;
    let bytes = sentence.as_bytes();
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if !inside(start, i) {
                out.push((start, i));
            }
        } else {
            i += 1;
        }
    }
    out
}

/// Relative path to file contents for a whole directory tree.
pub fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .replace('\\', "/");
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}
