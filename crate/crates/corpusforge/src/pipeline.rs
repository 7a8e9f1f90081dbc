//! End-to-end drivers for the two corpora and the single-stage commands.

use std::collections::BTreeMap;
use std::path::Path;

use corpusforge_core::align::{build_variants, AlignCounts, Aligner, MeasurementExample, Variant};
use corpusforge_core::dedup::{balance, deduplicate, select, DedupItem};
use corpusforge_core::export::{
    measurement_iob, measurement_qa, measurement_tables, quantity_iob, quantity_qa, unit_table,
    write_iob, FrequencyTable, IobError, QaDataset,
};
use corpusforge_core::facts::{article_title, QuantFact};
use corpusforge_core::lingo::{
    BuiltinProvider, LingProvider, SentenceSplitter, DEFAULT_ABBREVIATIONS,
};
use corpusforge_core::quantities::{process_page, AnnotatedSentence, PageCounts};
use corpusforge_core::units::{UnitRegistry, WikidataUnits};
use corpusforge_core::wikitext::PageSource;
use log::info;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, PipelineConfig};
use crate::formats::{
    load_external, measurement_jsonl, quantity_jsonl, read_facts, read_pages, Corpus,
    ExternalProvider, FormatError,
};
use crate::manifest::Manifest;
use crate::sparql::{fetch_facts, SparqlClient, SparqlError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Sparql(#[from] SparqlError),
    #[error("unit registry {path}: {message}")]
    Units { path: String, message: String },
    #[error("export failed for record {index}: {source}")]
    Export { index: usize, source: IobError },
    #[error("{0}")]
    Data(String),
}

impl PipelineError {
    /// 1 for configuration problems, 2 for bad or unavailable data.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Units { .. } => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

/// Shared read-only resources of a run.
pub struct Resources {
    pub registry: UnitRegistry,
    pub provider: Box<dyn LingProvider>,
    pub splitter: SentenceSplitter,
}

impl Resources {
    pub fn load(cfg: &PipelineConfig) -> Result<Self> {
        let registry = match &cfg.paths.units {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| PipelineError::Units {
                    path: p.display().to_string(),
                    message: e.to_string(),
                })?;
                UnitRegistry::parse(&text).map_err(|e| PipelineError::Units {
                    path: p.display().to_string(),
                    message: e.to_string(),
                })?
            }
            None => UnitRegistry::builtin(),
        };
        let provider: Box<dyn LingProvider> = match &cfg.paths.annotations {
            Some(p) => Box::new(ExternalProvider::new(load_external(p)?)),
            None => Box::new(BuiltinProvider::default()),
        };
        let splitter = SentenceSplitter::new(
            DEFAULT_ABBREVIATIONS
                .iter()
                .copied()
                .chain(cfg.abbreviations.iter().map(String::as_str)),
        );
        Ok(Resources {
            registry,
            provider,
            splitter,
        })
    }
}

fn require<'a>(p: &'a Option<std::path::PathBuf>, name: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| ConfigError::Invalid(format!("paths.{name} is not set")).into())
}

pub fn qa_json(ds: &QaDataset) -> String {
    let mut s = serde_json::to_string_pretty(ds).expect("qa serializes");
    s.push('\n');
    s
}

pub fn quantities_iob_text(items: &[AnnotatedSentence]) -> Result<String> {
    let recs = items
        .iter()
        .enumerate()
        .map(|(index, ex)| {
            quantity_iob(ex).map_err(|source| PipelineError::Export { index, source })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(write_iob(&recs))
}

pub fn measurements_iob_text(items: &[MeasurementExample]) -> Result<String> {
    let recs = items
        .iter()
        .enumerate()
        .map(|(index, ex)| {
            measurement_iob(ex).map_err(|source| PipelineError::Export { index, source })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(write_iob(&recs))
}

/// Frequency tables for a corpus: units for quantities, one table per
/// annotated concept for measurements.
pub fn corpus_tables(corpus: &Corpus, registry: &UnitRegistry) -> Vec<FrequencyTable> {
    match corpus {
        Corpus::Quantities(v) => vec![unit_table(v, registry)],
        Corpus::Measurements(v) => measurement_tables(v),
    }
}

fn emit_tables(
    m: &mut Manifest,
    out: &Path,
    prefix: &str,
    tables: &[FrequencyTable],
) -> Result<()> {
    for t in tables {
        m.emit(out, &format!("{prefix}stats/{}.tsv", t.name), &t.render())?;
    }
    Ok(())
}

pub fn process_pages(
    pages: &[PageSource],
    res: &Resources,
    cfg: &PipelineConfig,
) -> (Vec<AnnotatedSentence>, PageCounts) {
    let results: Vec<_> = pages
        .par_iter()
        .map(|p| {
            process_page(
                p,
                &res.registry,
                res.provider.as_ref(),
                &res.splitter,
                &cfg.quantities,
                cfg.seed,
            )
        })
        .collect();
    let mut counts = PageCounts::default();
    let mut examples = Vec::new();
    for r in results {
        counts.add(&r.counts);
        examples.extend(r.examples);
    }
    (examples, counts)
}

/// Pages to a deduplicated, balanced quantity corpus with its exports.
pub fn run_quantities(cfg: &PipelineConfig) -> Result<Manifest> {
    let out = cfg.output_dir()?;
    let pages_path = require(&cfg.paths.pages, "pages")?;
    let res = Resources::load(cfg)?;
    let pages = read_pages(pages_path)?;
    let mut m = Manifest::new("quantities", cfg.seed, cfg.hash());
    m.input("pages", pages_path)?;
    if let Some(p) = &cfg.paths.annotations {
        m.input("annotations", p)?;
    }
    let (examples, counts) = process_pages(&pages, &res, cfg);
    info!(
        "{} pages, {} examples before deduplication",
        pages.len(),
        examples.len()
    );
    m.count("pages", &pages.len());
    m.count("extraction", &counts);
    let (kept, dedup_report) = deduplicate(&examples);
    let deduped = select(&examples, &kept);
    m.count("dedup", &dedup_report);
    let (kept, balance_report) = balance(&deduped, &cfg.balance, &res.registry, cfg.seed);
    let corpus = select(&deduped, &kept);
    m.count("balance", &balance_report);
    info!(
        "{} examples after deduplication and balancing",
        corpus.len()
    );

    m.emit(out, "quantities.jsonl", &quantity_jsonl(&corpus))?;
    m.emit(out, "quantities.iob", &quantities_iob_text(&corpus)?)?;
    m.emit(out, "quantities_qa.json", &qa_json(&quantity_qa(&corpus)))?;
    emit_tables(&mut m, out, "", &[unit_table(&corpus, &res.registry)])?;
    m.write(out)?;
    Ok(m)
}

/// Facts grouped by the page they belong to, matched on article title or
/// page id.
pub fn facts_by_page<'a>(
    pages: &[PageSource],
    facts: &'a [QuantFact],
) -> (Vec<Vec<&'a QuantFact>>, usize) {
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, p) in pages.iter().enumerate() {
        index.entry(p.page_id.as_str()).or_insert(i);
        index.entry(p.title.as_str()).or_insert(i);
    }
    let mut grouped = vec![Vec::new(); pages.len()];
    let mut unmatched = 0;
    for f in facts {
        let title = article_title(&f.article);
        match index
            .get(title.as_str())
            .or_else(|| index.get(f.article.as_str()))
        {
            Some(&i) => grouped[i].push(f),
            None => unmatched += 1,
        }
    }
    (grouped, unmatched)
}

pub fn load_or_fetch_facts(
    cfg: &PipelineConfig,
    m: &mut Manifest,
    registry: &UnitRegistry,
) -> Result<Vec<QuantFact>> {
    match &cfg.paths.facts {
        Some(p) => {
            m.input("facts", p)?;
            Ok(read_facts(p)?)
        }
        None => {
            let client = SparqlClient::new(cfg.facts.client.clone());
            info!("fetching facts from {}", client.endpoint());
            let (facts, report) =
                fetch_facts(&client, &cfg.facts, registry, &WikidataUnits::builtin())?;
            m.count("fetch", &report);
            Ok(facts)
        }
    }
}

/// Align every page with its facts, then write each requested variant.
pub fn run_measurements(cfg: &PipelineConfig) -> Result<Manifest> {
    let out = cfg.output_dir()?;
    let pages_path = require(&cfg.paths.pages, "pages")?;
    let res = Resources::load(cfg)?;
    let pages = read_pages(pages_path)?;
    let mut m = Manifest::new("measurements", cfg.seed, cfg.hash());
    m.input("pages", pages_path)?;
    if let Some(p) = &cfg.paths.annotations {
        m.input("annotations", p)?;
    }
    let facts = load_or_fetch_facts(cfg, &mut m, &res.registry)?;
    let (grouped, unmatched) = facts_by_page(&pages, &facts);
    m.count(
        "facts",
        &serde_json::json!({ "total": facts.len(), "without_page": unmatched }),
    );

    let aligner = Aligner {
        splitter: res.splitter.clone(),
        ..Aligner::new(&res.registry, res.provider.as_ref(), cfg.aligner.clone())
    };
    let aligned: Vec<_> = pages
        .par_iter()
        .zip(grouped.par_iter())
        .map(|(p, fs)| {
            let owned: Vec<QuantFact> = fs.iter().map(|f| (*f).clone()).collect();
            aligner.align_page(p, &owned)
        })
        .collect();
    let mut counts = AlignCounts::default();
    let mut examples = Vec::new();
    for a in aligned {
        counts.add(&a.counts);
        examples.extend(a.examples);
    }
    info!("{} aligned examples", examples.len());
    m.count("alignment", &counts);
    let (variants, report) = build_variants(&examples, &cfg.aligner);
    m.count("variants", &report);

    let mut sizes = BTreeMap::new();
    for v in cfg.selected_variants() {
        let items = &variants[&v];
        sizes.insert(v.as_str(), items.len());
        write_measurement_variant(&mut m, out, v, items)?;
    }
    m.count("variant_sizes", &sizes);
    m.write(out)?;
    Ok(m)
}

fn write_measurement_variant(
    m: &mut Manifest,
    out: &Path,
    v: Variant,
    items: &[MeasurementExample],
) -> Result<()> {
    let dir = format!("{}/", v.as_str());
    m.emit(
        out,
        &format!("{dir}measurements.jsonl"),
        &measurement_jsonl(items),
    )?;
    m.emit(
        out,
        &format!("{dir}measurements.iob"),
        &measurements_iob_text(items)?,
    )?;
    m.emit(
        out,
        &format!("{dir}qa.json"),
        &qa_json(&measurement_qa(items)),
    )?;
    emit_tables(m, out, &dir, &measurement_tables(items))
}

/// Deduplicate a corpus on its own.
pub fn dedup_corpus(corpus: Corpus) -> (Corpus, serde_json::Value) {
    fn run<T: DedupItem + Clone>(v: &[T]) -> (Vec<T>, serde_json::Value) {
        let (kept, report) = deduplicate(v);
        (select(v, &kept), serde_json::to_value(report).unwrap())
    }
    match corpus {
        Corpus::Quantities(v) => {
            let (v, r) = run(&v);
            (Corpus::Quantities(v), r)
        }
        Corpus::Measurements(v) => {
            let (v, r) = run(&v);
            (Corpus::Measurements(v), r)
        }
    }
}

/// Balance a corpus on its own.
pub fn balance_corpus(
    corpus: Corpus,
    cfg: &PipelineConfig,
    registry: &UnitRegistry,
) -> (Corpus, serde_json::Value) {
    fn run<T: DedupItem + Clone>(
        v: &[T],
        cfg: &PipelineConfig,
        reg: &UnitRegistry,
    ) -> (Vec<T>, serde_json::Value) {
        let (kept, report) = balance(v, &cfg.balance, reg, cfg.seed);
        (select(v, &kept), serde_json::to_value(report).unwrap())
    }
    match corpus {
        Corpus::Quantities(v) => {
            let (v, r) = run(&v, cfg, registry);
            (Corpus::Quantities(v), r)
        }
        Corpus::Measurements(v) => {
            let (v, r) = run(&v, cfg, registry);
            (Corpus::Measurements(v), r)
        }
    }
}

pub fn iob_text(corpus: &Corpus) -> Result<String> {
    match corpus {
        Corpus::Quantities(v) => quantities_iob_text(v),
        Corpus::Measurements(v) => measurements_iob_text(v),
    }
}

pub fn qa_text(corpus: &Corpus) -> String {
    match corpus {
        Corpus::Quantities(v) => qa_json(&quantity_qa(v)),
        Corpus::Measurements(v) => qa_json(&measurement_qa(v)),
    }
}
