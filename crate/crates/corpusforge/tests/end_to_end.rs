mod support;

use std::path::{Path, PathBuf};
use std::process::Command;

use corpusforge::config::PipelineConfig;
use corpusforge::formats::{read_corpus, read_facts, Corpus};
use corpusforge::pipeline::{run_measurements, run_quantities};
use corpusforge::sparql::{query_key, ArchiveMode};
use corpusforge_core::align::Variant;
use corpusforge_core::dedup::BalanceConfig;
use corpusforge_core::facts::{property_query, statement_query};
use support::{fixtures, tree};

fn config(out: &Path, seed: u64) -> PipelineConfig {
    let mut cfg = PipelineConfig {
        seed,
        ..PipelineConfig::default()
    };
    cfg.paths.pages = Some(fixtures().join("pages50.jsonl"));
    cfg.paths.facts = Some(fixtures().join("facts50.jsonl"));
    cfg.paths.output = Some(out.to_path_buf());
    cfg
}

fn run_both(out: &Path, seed: u64) {
    run_quantities(&config(&out.join("quantities"), seed)).unwrap();
    run_measurements(&config(&out.join("measurements"), seed)).unwrap();
}

#[test]
fn two_runs_give_identical_trees() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_both(a.path(), 7);
    run_both(b.path(), 7);
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert!(ta.len() > 10);
    assert_eq!(ta.keys().collect::<Vec<_>>(), tb.keys().collect::<Vec<_>>());
    for (k, v) in &ta {
        assert!(v == &tb[k], "{k} differs");
    }
    let c = tempfile::tempdir().unwrap();
    run_quantities(&config(c.path(), 8)).unwrap();
    assert_ne!(
        std::fs::read(c.path().join("quantities.jsonl")).unwrap(),
        ta["quantities/quantities.jsonl"],
        "a different seed should change renderings"
    );
}

#[test]
fn manifest_counts_reconcile() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_quantities(&config(dir.path(), 7)).unwrap();
    let c = &m.counts;
    let n = |stage: &str, key: &str| c[stage][key].as_u64().unwrap();
    let sentences = n("extraction", "sentences");
    let rejected: u64 = [
        "without_quantity",
        "too_short",
        "per_outside_span",
        "number_outside_span",
        "failed_expansion",
        "unsplittable",
    ]
    .iter()
    .map(|k| n("extraction", k))
    .sum();
    assert_eq!(sentences, rejected + n("extraction", "accepted"));
    let extracted = n("extraction", "accepted") + n("extraction", "split_extra");
    assert_eq!(n("dedup", "input"), extracted);
    assert_eq!(
        n("dedup", "input"),
        n("dedup", "output") + n("dedup", "exact_duplicates") + n("dedup", "near_duplicates")
    );
    assert_eq!(n("balance", "input"), n("dedup", "output"));
    assert_eq!(
        n("balance", "input"),
        n("balance", "output") + n("balance", "token_balance") + n("balance", "unit_cap")
    );
    let Corpus::Quantities(corpus) =
        read_corpus(&dir.path().join("quantities.jsonl"), None).unwrap()
    else {
        panic!("wrong corpus kind")
    };
    assert_eq!(corpus.len() as u64, n("balance", "output"));
    assert_eq!(m.outputs["quantities.jsonl"].sha256.len(), 64);
    assert_eq!(m.seed, 7);
}

#[test]
fn rejecting_everything_gives_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let pages = dir.path().join("pages.jsonl");
    std::fs::write(
        &pages,
        "{\"page_id\":\"x\",\"title\":\"X\",\"language\":\"en\",\"markup\":\"In 1990 it was {{convert|5|km|mi}} long and had 7 gates.\"}\n",
    )
    .unwrap();
    let mut cfg = config(&dir.path().join("out"), 1);
    cfg.paths.pages = Some(pages);
    let m = run_quantities(&cfg).unwrap();
    assert_eq!(m.counts["balance"]["output"], 0);
    assert_eq!(m.counts["extraction"]["number_outside_span"], 1);
    assert_eq!(
        std::fs::read_to_string(dir.path().join("out/quantities.jsonl")).unwrap(),
        ""
    );
}

#[test]
fn tiny_balance_is_subset_of_small() {
    let corpus_for = |b: BalanceConfig| {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path(), 7);
        cfg.balance = b;
        run_quantities(&cfg).unwrap();
        std::fs::read_to_string(dir.path().join("quantities.jsonl")).unwrap()
    };
    // thresholds small enough to bite on a 50-page corpus
    let small = corpus_for(BalanceConfig {
        u_thr: Some(6),
        t_thr: Some(4),
        ..BalanceConfig::small()
    });
    let tiny = corpus_for(BalanceConfig {
        u_thr: Some(2),
        t_thr: Some(4),
        ..BalanceConfig::small()
    });
    let small: Vec<&str> = small.lines().collect();
    let tiny: Vec<&str> = tiny.lines().collect();
    assert!(tiny.len() < small.len());
    assert!(tiny.iter().all(|l| small.contains(l)));
}

#[test]
fn strict_run_is_subset_of_default_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_measurements(&config(a.path(), 7)).unwrap();
    let mut cfg = config(b.path(), 7);
    cfg.aligner.strict = true;
    run_measurements(&cfg).unwrap();
    let lines = |p: PathBuf| {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .map(String::from)
            .collect::<Vec<_>>()
    };
    let loose = lines(a.path().join("large/measurements.jsonl"));
    let strict = lines(b.path().join("large/measurements.jsonl"));
    assert!(!strict.is_empty() && strict.len() < loose.len());
    assert!(strict.iter().all(|l| loose.contains(l)));
    assert_eq!(
        strict,
        lines(a.path().join("large_strict/measurements.jsonl"))
    );
}

/// Facts read from a file and facts replayed from archived SPARQL answers
/// must give the same measurement outputs.
#[test]
fn archived_responses_match_fact_file() {
    let facts = read_facts(&fixtures().join("facts50.jsonl")).unwrap();
    let archive = tempfile::tempdir().unwrap();
    let mut props: Vec<(String, String)> = facts
        .iter()
        .flat_map(|f| {
            f.property
                .all_labels()
                .map(|l| (f.property.id.clone(), l.to_string()))
        })
        .collect();
    props.dedup();
    let term = |t: &str, v: &str| serde_json::json!({ "type": t, "value": v });
    let prop_rows: Vec<_> = props
        .iter()
        .map(|(id, l)| {
            serde_json::json!({
                "property": term("uri", &format!("http://www.wikidata.org/entity/{id}")),
                "propertyLabel": term("literal", l),
            })
        })
        .collect();
    let write = |q: &str, rows: Vec<serde_json::Value>| {
        let body = serde_json::json!({ "head": { "vars": [] }, "results": { "bindings": rows } });
        std::fs::write(
            archive.path().join(format!("{}.json", query_key(q))),
            body.to_string(),
        )
        .unwrap();
    };
    write(&property_query(), prop_rows);
    let limit = corpusforge_core::facts::DEFAULT_LIMIT;
    let pids: std::collections::BTreeSet<&String> = props.iter().map(|p| &p.0).collect();
    for pid in pids {
        let rows = facts
            .iter()
            .filter(|f| &f.property.id == pid)
            .flat_map(|f| {
                let base = serde_json::json!({
                    "article": term("uri", &f.article),
                    "entity": term("uri", &format!("http://www.wikidata.org/entity/{}", f.entity.id)),
                    "value": term("literal", &format!("+{}", f.value)),
                    "unit": term("uri", &if f.unit.is_count() { "http://www.wikidata.org/entity/Q199".to_string() } else { format!("http://www.wikidata.org/entity/{}", f.unit.id) }),
                });
                if f.qualifiers.is_empty() {
                    return vec![base];
                }
                f.qualifiers
                    .iter()
                    .map(|q| {
                        let mut row = base.clone();
                        let corpusforge_core::facts::QualifierValue::Time { year, .. } = q.value else {
                            panic!("fixture qualifiers are years")
                        };
                        row["qualifier"] = term("uri", &format!("http://www.wikidata.org/entity/{}", q.pid));
                        row["qualifier_value"] = term("literal", &format!("+{year}-01-01T00:00:00Z"));
                        row["qualifier_time_precision"] = term("literal", "9");
                        row
                    })
                    .collect()
            })
            .collect();
        write(&statement_query(pid, "en", limit), rows);
    }

    let from_file = tempfile::tempdir().unwrap();
    run_measurements(&config(from_file.path(), 7)).unwrap();
    let replayed = tempfile::tempdir().unwrap();
    let mut cfg = config(replayed.path(), 7);
    cfg.paths.facts = None;
    cfg.facts.client.endpoint = Some("http://127.0.0.1:9/offline".into());
    cfg.facts.client.archive = Some(archive.path().to_path_buf());
    cfg.facts.client.archive_mode = ArchiveMode::Replay;
    let m = run_measurements(&cfg).unwrap();
    assert_eq!(m.counts["fetch"]["malformed_rows"], 0);
    for v in Variant::ALL {
        let rel = format!("{}/measurements.jsonl", v.as_str());
        let a = std::fs::read_to_string(from_file.path().join(&rel)).unwrap();
        let b = std::fs::read_to_string(replayed.path().join(&rel)).unwrap();
        assert_eq!(a, b, "{rel}");
    }
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_corpusforge"))
        .args(args)
        .env_remove("CORPUSFORGE_OUTPUT_DIR")
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let pages = fixtures().join("pages50.jsonl");
    let facts = fixtures().join("facts50.jsonl");
    let s = |p: &Path| p.to_str().unwrap().to_string();

    assert_eq!(cli(&["--help"]).0, 0);
    assert_eq!(cli(&["frobnicate"]).0, 1);
    assert_eq!(cli(&["--variant", "huge", "measurements"]).0, 1);
    let (code, _, err) = cli(&[
        "--strict",
        "quantities",
        "--pages",
        &s(&pages),
        "--output",
        &s(&d.join("q")),
    ]);
    assert_eq!(code, 1, "{err}");
    assert_eq!(
        cli(&["quantities", "--output", &s(&d.join("q"))]).0,
        1,
        "pages missing"
    );

    let bad_cfg = d.join("bad.toml");
    std::fs::write(&bad_cfg, "seed = \"seven\"\n").unwrap();
    assert_eq!(cli(&["--config", &s(&bad_cfg), "quantities"]).0, 1);
    let weights = d.join("weights.toml");
    std::fs::write(
        &weights,
        "[quantities.rendering]\ninput_only = 0.9\noutput_only = 0.9\ncombined = 0.0\n",
    )
    .unwrap();
    assert_eq!(cli(&["--config", &s(&weights), "quantities"]).0, 1);

    let broken = d.join("broken.jsonl");
    std::fs::write(&broken, "{\"page_id\": 3}\n").unwrap();
    let (code, _, err) = cli(&[
        "quantities",
        "--pages",
        &s(&broken),
        "--output",
        &s(&d.join("q")),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("broken.jsonl:1"), "{err}");
    assert_eq!(
        cli(&[
            "dedup",
            "--input",
            &s(&d.join("missing.jsonl")),
            "--output",
            &s(&d.join("x"))
        ])
        .0,
        2
    );

    // a full run through every subcommand
    let cfg = d.join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "seed = 7\n[paths]\npages = {:?}\nfacts = {:?}\noutput = \"out\"\n",
            s(&pages),
            s(&facts)
        ),
    )
    .unwrap();
    let (code, out, err) = cli(&["--config", &s(&cfg), "quantities"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("\"dedup\""));
    let q = d.join("out/quantities.jsonl");
    assert!(
        q.exists(),
        "output is resolved against the config directory"
    );
    assert_eq!(
        cli(&[
            "--config",
            &s(&cfg),
            "--strict",
            "measurements",
            "--output",
            &s(&d.join("m"))
        ])
        .0,
        0
    );
    assert!(d.join("m/large_strict/measurements.jsonl").exists());
    assert!(!d.join("m/large/measurements.jsonl").exists());
    assert_eq!(
        cli(&[
            "measurements",
            "--pages",
            &s(&pages),
            "--facts",
            &s(&facts),
            "--variant",
            "small",
            "--output",
            &s(&d.join("m2"))
        ])
        .0,
        0
    );
    assert!(d.join("m2/small/qa.json").exists() && !d.join("m2/large").exists());

    assert_eq!(
        cli(&[
            "dedup",
            "--input",
            &s(&q),
            "--output",
            &s(&d.join("d.jsonl"))
        ])
        .0,
        0
    );
    assert_eq!(
        cli(&[
            "--seed",
            "3",
            "balance",
            "--input",
            &s(&q),
            "--output",
            &s(&d.join("b.jsonl"))
        ])
        .0,
        0
    );
    assert_eq!(
        cli(&[
            "export",
            "--input",
            &s(&q),
            "--format",
            "iob",
            "--output",
            &s(&d.join("q.iob"))
        ])
        .0,
        0
    );
    assert_eq!(
        cli(&[
            "export",
            "--input",
            &s(&q),
            "--format",
            "qa",
            "--output",
            &s(&d.join("q.json"))
        ])
        .0,
        0
    );
    let (code, out, _) = cli(&["stats", "--input", &s(&q)]);
    assert_eq!(code, 0);
    assert!(out.starts_with("# unit"));
    let sheet = d.join("audit.tsv");
    assert_eq!(
        cli(&[
            "audit",
            "sample",
            "--input",
            &s(&q),
            "-n",
            "3",
            "--output",
            &s(&sheet)
        ])
        .0,
        0
    );
    assert_eq!(
        cli(&[
            "audit",
            "sample",
            "--input",
            &s(&q),
            "-n",
            "100000",
            "--output",
            &s(&sheet)
        ])
        .0,
        2
    );
    let filled: String = std::fs::read_to_string(&sheet)
        .unwrap()
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                format!("{l}\n")
            } else {
                format!("{l}correct\n")
            }
        })
        .collect();
    std::fs::write(&sheet, filled).unwrap();
    let (code, out, _) = cli(&["audit", "score", "--input", &s(&sheet)]);
    assert_eq!(code, 0);
    assert!(out.contains("\"strict_accuracy\": 1.0"), "{out}");
}
