//! Acceptance run: one PASS/FAIL line per criterion, with the tolerance
//! applied and the wall time against its budget. Exits non-zero when any
//! criterion fails or runs over budget.

#[path = "../../core/tests/common/mod.rs"]
mod common;
mod support;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use corpusforge::config::PipelineConfig;
use corpusforge::formats::{read_facts, write_facts};
use corpusforge::pipeline::{run_measurements, run_quantities};
use corpusforge_core::align::{
    build_variants, match_value, resolve_conflicts, unit_candidates, AlignerConfig, ValueMatch,
    Variant,
};
use corpusforge_core::convert::{expand_convert, pick_kind, RenderingKind, RenderingWeights};
use corpusforge_core::dedup::{
    deduplicate, edit_distance, near_duplicate_survivors, near_duplicate_survivors_bruteforce,
    normalize_item, removal_probability, strip_trailing_references, DedupItem,
};
use corpusforge_core::export::{
    from_iob, measurement_iob, measurement_spans, parse_iob, quantity_iob, quantity_spans,
    write_iob, LabelledSpan,
};
use corpusforge_core::facts::{FactUnit, Labelled, QuantFact};
use corpusforge_core::lingo::BuiltinProvider;
use corpusforge_core::quantities::{render_page, AnnotatedSentence, CitationConfig, QuantitySpan};
use corpusforge_core::rng::stage_rng;
use corpusforge_core::units::UnitRegistry;
use corpusforge_core::wikitext::{parse_convert, Language, PageSource};
use rand::Rng;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn golden_convert() -> Result<String, String> {
    let registry = UnitRegistry::builtin();
    let golden = [
        (&["11", "m/s", "km/h", "abbr=on"][..], "11 m/s (40 km/h)"),
        (
            &["60-62.5", "m", "ft+royal cubit", "abbr=on"][..],
            "60–62.5 m (197–205 ft; 115–119 cu)",
        ),
    ];
    let combined_only = RenderingWeights {
        input_only: 0.0,
        output_only: 0.0,
        combined: 1.0,
    };
    for (args, want) in golden {
        let args: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        let call = parse_convert(&args).map_err(|e| format!("{args:?}: {e:?}"))?;
        let got = expand_convert(&call, &registry)
            .map_err(|e| format!("{args:?}: {e}"))?
            .combined
            .text;
        ensure(got == want, || format!("expanded {got:?}, want {want:?}"))?;
        // the same call embedded in page markup
        let page = PageSource {
            page_id: "golden".into(),
            title: "Golden".into(),
            language: Language::En,
            markup: format!("It runs at {{{{convert|{}}}}} here.", args.join("|")),
        };
        let (rendered, _) = render_page(&page, &registry, &combined_only, 0);
        let expect = format!("It runs at {want} here.");
        ensure(rendered.text == expect, || {
            format!("page rendered {:?}, want {expect:?}", rendered.text)
        })?;
    }
    Ok("2 calls byte-exact, direct and via page markup".into())
}

fn rendering_frequencies() -> Result<String, String> {
    const DRAWS: usize = 100_000;
    let weights = RenderingWeights::default();
    let mut rng = stage_rng(42, "acceptance", "render");
    let mut counts = [0usize; 3];
    for _ in 0..DRAWS {
        let i = match pick_kind(&weights, &mut rng) {
            RenderingKind::InputOnly => 0,
            RenderingKind::OutputOnly => 1,
            RenderingKind::Combined => 2,
        };
        counts[i] += 1;
    }
    let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / DRAWS as f64).collect();
    let want = [weights.input_only, weights.output_only, weights.combined];
    let tol = [0.005, 0.005, 0.003];
    for k in 0..3 {
        ensure((freq[k] - want[k]).abs() <= tol[k], || {
            format!(
                "kind {k}: {:.4} vs {:.4} outside ±{}",
                freq[k], want[k], tol[k]
            )
        })?;
    }
    Ok(format!(
        "{:.4}/{:.4}/{:.4} over {DRAWS} draws (seed 42), tol ±0.005/±0.005/±0.003",
        freq[0], freq[1], freq[2]
    ))
}

fn balancing_formula() -> Result<String, String> {
    ensure(removal_probability(0, 50) == 0.0, || "p(0) is not 0".into())?;
    for t in [1, 7, 50, 1000] {
        let p = removal_probability(t, t);
        ensure(p == 0.5, || format!("p({t}, {t}) = {p}"))?;
    }
    let mut rng = stage_rng(2, "acceptance", "balance");
    for _ in 0..1000 {
        let t = rng.random_range(1..10_000u64);
        let a = rng.random_range(0..100_000u64);
        let b = rng.random_range(0..100_000u64);
        if a == b {
            continue;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let (plo, phi) = (removal_probability(lo, t), removal_probability(hi, t));
        ensure(plo < phi, || {
            format!("t={t}: p({lo})={plo} not below p({hi})={phi}")
        })?;
        ensure((0.0..1.0).contains(&phi), || {
            format!("p({hi}, {t}) = {phi} outside [0, 1)")
        })?;
    }
    Ok("p(0)=0, p(t,t)=0.5 exact, strictly increasing on 1000 random pairs".into())
}

fn near_duplicates() -> Result<String, String> {
    let base: Vec<String> = (0..17).map(|i| format!("w{i}")).collect();
    let mk = |toks: &[String]| {
        let s = format!("It is 3 km {}.", toks.join(" "));
        AnnotatedSentence {
            spans: vec![QuantitySpan::new(&s, 6, 10)],
            sentence: s,
            page_id: "p".into(),
            language: Language::En,
            curated: false,
        }
    };
    let edited = |n: usize| {
        let mut t = base.clone();
        t.iter_mut().take(n).for_each(|w| *w = "x".into());
        mk(&t)
    };
    let a = mk(&base);
    let tokens = normalize_item(&a).tokens;
    ensure(tokens.len() == 20, || {
        format!("{} tokens, want 20", tokens.len())
    })?;
    for (d, expect) in [(7, vec![0]), (8, vec![0, 1])] {
        let b = edited(d);
        let dist = edit_distance(&tokens, &normalize_item(&b).tokens);
        ensure(dist == d, || format!("edit distance {dist}, want {d}"))?;
        let (kept, _) = deduplicate(&[a.clone(), b]);
        ensure(kept == expect, || {
            format!("d={d}: kept {kept:?}, want {expect:?}")
        })?;
    }
    let mut removed = 0;
    for seed in [1, 2, 3] {
        let forms: Vec<_> = common::dedup_corpus(500, seed)
            .iter()
            .map(normalize_item)
            .collect();
        let fast = near_duplicate_survivors(&forms);
        let slow = near_duplicate_survivors_bruteforce(&forms);
        ensure(fast == slow, || {
            format!("seed {seed}: indexed and brute-force survivors differ")
        })?;
        removed += 500 - fast.len();
    }
    Ok(format!(
        "20 tokens: d=7 duplicate, d=8 kept; indexed == brute force on 3x500 ({removed} removed)"
    ))
}

fn value_matching() -> Result<String, String> {
    let cfg = AlignerConfig::default();
    let tol = cfg.mape_tolerance;
    let cases = [
        (100.0, None, 103.0, tol, ValueMatch::Approximate),
        (100.0, None, 103.5, tol, ValueMatch::None),
        (100.0, None, 100.0, tol, ValueMatch::Exact),
        (13.0, Some((12.0, 14.0)), 13.0, 0.0001, ValueMatch::Exact),
        (13.0, Some((12.0, 14.0)), 13.0, 0.5, ValueMatch::Exact),
        (13.0, Some((12.0, 14.0)), 14.5, 0.5, ValueMatch::None),
    ];
    for (r, b, o, t, want) in cases {
        let got = match_value(r, b, o, t);
        ensure(got == want, || {
            format!("match_value({r}, {b:?}, {o}, {t}) = {got:?}, want {want:?}")
        })?;
    }
    // candidates: every unit of the fact's dimension whose factor lies
    // strictly inside the interval, and nothing else
    let registry = UnitRegistry::builtin();
    let mut checked = 0;
    for code in ["m", "km2", "kg", "s"] {
        let fact = QuantFact {
            article: "X".into(),
            entity: Labelled::new("Q1", "X"),
            property: Labelled::new("P1", "size"),
            value: 5.0,
            unit: FactUnit::from_registry("Qu", code, &registry)
                .ok_or(format!("no unit {code}"))?,
            lower_bound: None,
            upper_bound: None,
            qualifiers: Vec::new(),
        };
        let own = registry.get(code).unwrap();
        let got: BTreeSet<String> = unit_candidates(&fact, &cfg, &registry)
            .into_iter()
            .filter_map(|c| c.code)
            .collect();
        let want: BTreeSet<String> = registry
            .iter()
            .filter(|d| d.dimension == own.dimension)
            .filter(|d| {
                let f = own.factor / d.factor;
                d.code == own.code
                    || (f > cfg.conversion_factor_min && f < cfg.conversion_factor_max)
            })
            .map(|d| d.code.clone())
            .collect();
        ensure(got == want, || {
            format!("{code}: candidates {got:?}, want {want:?}")
        })?;
        checked += got.len();
    }
    let m = FactUnit::from_registry("Qu", "m", &registry).unwrap();
    let fact = QuantFact {
        article: "A380".into(),
        entity: Labelled::new("Q1", "A380"),
        property: Labelled::new("P1", "wingspan"),
        value: 79.8,
        unit: m,
        lower_bound: None,
        upper_bound: None,
        qualifiers: Vec::new(),
    };
    let codes: BTreeSet<String> = unit_candidates(&fact, &cfg, &registry)
        .into_iter()
        .filter_map(|c| c.code)
        .collect();
    for (c, present) in [("km", false), ("mm", false), ("ft", true), ("cm", true)] {
        ensure(codes.contains(c) == present, || {
            format!("m fact: {c} present={}", codes.contains(c))
        })?;
    }
    Ok(format!(
        "tolerance {tol}, bounds override tolerance, open interval ({} candidates checked)",
        checked
    ))
}

fn gold_suite() -> Result<String, String> {
    let cases = common::load_gold(&common::read_fixture("aligner_gold.jsonl"));
    let registry = UnitRegistry::builtin();
    let provider = BuiltinProvider::default();
    let cfg = AlignerConfig::default();
    let failures: Vec<String> = cases
        .iter()
        .filter_map(|c| {
            common::check_case(c, &common::run_case(c, &registry, &provider, &cfg)).err()
        })
        .collect();
    ensure(cases.len() == 30, || {
        format!("{} gold cases, want 30", cases.len())
    })?;
    ensure(failures.is_empty(), || {
        format!("{} failing: {}", failures.len(), failures.join("; "))
    })?;
    let named = [
        "a380_wingspan",
        "symphony_hall_seats",
        "whittier_rejected",
        "alabama_conflict_dropped",
    ];
    ensure(
        named.iter().all(|n| cases.iter().any(|c| c.name == *n)),
        || "a named reference case is missing".into(),
    )?;
    Ok(format!(
        "{}/{} cases exact, incl. {}",
        cases.len(),
        cases.len(),
        named.join(", ")
    ))
}

fn conflicts() -> Result<String, String> {
    let all = common::conflict_fixture();
    let group = |i: usize| {
        all.iter()
            .filter(|e| e.sentence_index == i)
            .cloned()
            .collect::<Vec<_>>()
    };
    let kept = resolve_conflicts(group(0));
    ensure(kept.len() == 1, || {
        format!("identical pair kept {}", kept.len())
    })?;
    let kept = resolve_conflicts(group(1));
    ensure(kept.len() == 1 && kept[0].qualifiers.len() == 1, || {
        "qualifier subset did not keep the qualified one".into()
    })?;
    for i in 2..5 {
        let kept = resolve_conflicts(group(i)).len();
        ensure(kept == 0, || {
            format!("sentence {i}: {kept} survivors, want 0")
        })?;
    }
    let mut merged = all.clone();
    merged.iter_mut().for_each(|e| e.sentence_index = 0);
    let describe = |v: &[corpusforge_core::align::MeasurementExample]| {
        v.iter()
            .map(|e| format!("{}|{:?}", e.exact_key(), e.fact.value))
            .collect::<Vec<_>>()
    };
    let reference = describe(&resolve_conflicts(merged.clone()));
    for seed in 0..100 {
        let got = describe(&resolve_conflicts(common::shuffled(&merged, seed)));
        ensure(got == reference, || {
            format!("permutation {seed} changed the result")
        })?;
    }
    Ok("5 rule groups, 100 permutations identical".into())
}

fn strict_subset() -> Result<String, String> {
    let cases = common::strict_corpus(200, 11);
    let (examples, failed) = common::align_cases(&cases, &AlignerConfig::default());
    ensure(failed.is_empty(), || {
        format!("{} fixture cases failed to align", failed.len())
    })?;
    let weak: BTreeSet<String> = examples
        .iter()
        .filter(|e| e.has_weak_reason())
        .map(|e| e.exact_key())
        .collect();
    let (variants, _) = build_variants(&examples, &AlignerConfig::default());
    let keys = |v: Variant| {
        variants[&v]
            .iter()
            .map(|e| e.exact_key())
            .collect::<BTreeSet<_>>()
    };
    for (loose, strict) in [
        (Variant::Large, Variant::LargeStrict),
        (Variant::Small, Variant::SmallStrict),
    ] {
        let (l, s) = (keys(loose), keys(strict));
        ensure(s.is_subset(&l), || {
            format!("{} not a subset of {}", strict.as_str(), loose.as_str())
        })?;
        let removed: BTreeSet<String> = l.difference(&s).cloned().collect();
        let weak_in: BTreeSet<String> = weak.intersection(&l).cloned().collect();
        ensure(removed == weak_in, || {
            format!("{}: removed set differs from weak set", strict.as_str())
        })?;
    }
    Ok(format!(
        "200 alignments, {} weak removed exactly",
        weak.len()
    ))
}

fn sorted(mut v: Vec<LabelledSpan>) -> Vec<LabelledSpan> {
    v.sort_by_key(|s| (s.start, s.end));
    v
}

fn round_trips() -> Result<String, String> {
    let q = support::quantity_examples(&PipelineConfig::default());
    let records: Vec<_> = q
        .iter()
        .map(quantity_iob)
        .collect::<Result<_, _>>()
        .map_err(|e| format!("{e:?}"))?;
    ensure(
        parse_iob(&write_iob(&records)).map_err(|e| format!("{e:?}"))? == records,
        || "quantity IOB text differs".into(),
    )?;
    for (ex, rec) in q.iter().zip(&records) {
        let back = from_iob(rec).map_err(|e| format!("{e:?}"))?;
        ensure(back == sorted(quantity_spans(ex)), || {
            format!("quantity spans differ: {}", ex.sentence)
        })?;
    }
    let m = support::measurement_examples();
    let records: Vec<_> = m
        .iter()
        .map(measurement_iob)
        .collect::<Result<_, _>>()
        .map_err(|e| format!("{e:?}"))?;
    ensure(
        parse_iob(&write_iob(&records)).map_err(|e| format!("{e:?}"))? == records,
        || "measurement IOB text differs".into(),
    )?;
    for (ex, rec) in m.iter().zip(&records) {
        let back = from_iob(rec).map_err(|e| format!("{e:?}"))?;
        ensure(back == sorted(measurement_spans(ex)), || {
            format!("measurement spans differ: {}", ex.sentence)
        })?;
    }
    let facts = support::facts();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = dir.path().join("facts.jsonl");
    write_facts(&p, &facts).map_err(|e| e.to_string())?;
    let back = read_facts(&p).map_err(|e| e.to_string())?;
    ensure(back == facts, || "fact file round trip differs".into())?;
    Ok(format!(
        "{} quantity, {} measurement, {} fact records lossless",
        q.len(),
        m.len(),
        facts.len()
    ))
}

fn run_both(out: &Path, seed: u64) -> Result<(), String> {
    let config = |sub: &str| {
        let mut cfg = PipelineConfig {
            seed,
            ..PipelineConfig::default()
        };
        cfg.paths.pages = Some(support::fixtures().join("pages50.jsonl"));
        cfg.paths.facts = Some(support::fixtures().join("facts50.jsonl"));
        cfg.paths.output = Some(out.join(sub));
        cfg
    };
    run_quantities(&config("quantities")).map_err(|e| e.to_string())?;
    run_measurements(&config("measurements")).map_err(|e| e.to_string())?;
    Ok(())
}

fn determinism() -> Result<String, String> {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_both(a.path(), 7)?;
    run_both(b.path(), 7)?;
    let (ta, tb) = (support::tree(a.path()), support::tree(b.path()));
    ensure(ta.keys().eq(tb.keys()), || "output file sets differ".into())?;
    for (k, v) in &ta {
        ensure(v == &tb[k], || format!("{k} differs"))?;
    }
    let bytes: usize = ta.values().map(Vec::len).sum();
    Ok(format!(
        "{} files, {bytes} bytes byte-identical (seed 7)",
        ta.len()
    ))
}

fn completeness() -> Result<String, String> {
    let mut cfg = PipelineConfig::default();
    cfg.quantities.citations = CitationConfig::disabled();
    let plain = support::quantity_examples(&cfg);
    let cited = support::quantity_examples(&PipelineConfig::default());
    for (ex, cut) in plain
        .iter()
        .map(|e| (e, false))
        .chain(cited.iter().map(|e| (e, true)))
    {
        let spans: Vec<(usize, usize)> = ex.spans.iter().map(|s| (s.start, s.end)).collect();
        let text = if cut {
            strip_trailing_references(&ex.sentence, &spans)
        } else {
            ex.sentence.clone()
        };
        let bad = support::unexplained(&text, &spans);
        ensure(bad.is_empty(), || {
            format!("unannotated numbers {bad:?} in {text:?}")
        })?;
    }
    Ok(format!(
        "{} + {} sentences, 0 unannotated numbers",
        plain.len(),
        cited.len()
    ))
}

fn main() {
    let checks: [(&str, u64, Check); 11] = [
        ("golden-convert-renderings", 1, golden_convert),
        ("rendering-frequencies", 5, rendering_frequencies),
        ("balancing-formula", 1, balancing_formula),
        ("near-duplicate-boundary", 10, near_duplicates),
        ("value-matching", 1, value_matching),
        ("aligner-gold-suite", 5, gold_suite),
        ("conflict-resolution", 5, conflicts),
        ("strict-subset", 5, strict_subset),
        ("format-round-trips", 5, round_trips),
        ("end-to-end-determinism", 60, determinism),
        ("sentence-completeness", 5, completeness),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, budget, check) in checks {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(d) if took > Duration::from_secs(budget) => Err(format!("over budget; {d}")),
            o => o,
        };
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{tag}  {name:<26} {:>7.3}s / {budget}s  {detail}",
            took.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", 11 - failed, 11);
    if failed > 0 {
        std::process::exit(1);
    }
}
