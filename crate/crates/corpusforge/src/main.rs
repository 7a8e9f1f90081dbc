use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use corpusforge::audit::{sample_sheet, score_sheet};
use corpusforge::config::{ConfigError, PipelineConfig};
use corpusforge::formats::{read_corpus, write_corpus, write_facts, write_file, FormatError};
use corpusforge::manifest::Manifest;
use corpusforge::pipeline::{
    balance_corpus, corpus_tables, dedup_corpus, iob_text, load_or_fetch_facts, qa_text,
    run_measurements, run_quantities, PipelineError, Resources,
};
use corpusforge_core::align::Variant;

#[derive(Parser, Debug)]
#[command(
    name = "corpusforge",
    version,
    about = "Build quantity and measurement corpora from wiki markup"
)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Keep only strongly supported measurement annotations.
    #[arg(long, global = true)]
    strict: bool,
    /// Measurement variant to write (repeatable).
    #[arg(long, global = true, value_parser = parse_variant)]
    variant: Vec<Variant>,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::parse(s).ok_or_else(|| {
        let names: Vec<_> = Variant::ALL.iter().map(|v| v.as_str()).collect();
        format!(
            "unknown variant {s:?}; expected one of {}",
            names.join(", ")
        )
    })
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExportFormat {
    Iob,
    Qa,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pages to a deduplicated, balanced quantity-span corpus.
    Quantities {
        #[arg(long)]
        pages: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Align facts with page sentences and write measurement variants.
    Measurements {
        #[arg(long)]
        pages: Option<PathBuf>,
        /// Fact file; facts are fetched over SPARQL when absent.
        #[arg(long)]
        facts: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Download quantitative facts into a fact file.
    FetchFacts {
        #[arg(long)]
        output: PathBuf,
    },
    /// Remove exact and near duplicates from a corpus file.
    Dedup {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Token-frequency balancing and per-unit caps for a corpus file.
    Balance {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Convert a corpus file to IOB or QA.
    Export {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        #[arg(long)]
        output: PathBuf,
    },
    /// Frequency tables of a corpus file.
    Stats {
        #[arg(long)]
        input: PathBuf,
        /// Directory for one TSV per table; printed when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Manual audit sheets.
    Audit {
        #[command(subcommand)]
        action: AuditAction,
    },
}

#[derive(Subcommand, Debug)]
enum AuditAction {
    /// Draw a seeded sample into a TSV with an empty verdict column.
    Sample {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, short)]
        n: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Strict and lenient accuracy of a filled-in sheet.
    Score {
        #[arg(long)]
        input: PathBuf,
    },
}

fn invalid(msg: &str) -> PipelineError {
    ConfigError::Invalid(msg.into()).into()
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => {
            let mut c = PipelineConfig::default();
            c.apply_env();
            c
        }
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let measuring = matches!(cli.command, Command::Measurements { .. });
    if !measuring && cli.strict {
        return Err(invalid("--strict only applies to the measurements command"));
    }
    if !measuring && !cli.variant.is_empty() {
        return Err(invalid(
            "--variant only applies to the measurements command",
        ));
    }
    if cli.strict {
        cfg.aligner.strict = true;
        if cli.variant.is_empty() && cfg.variants.is_empty() {
            cfg.variants = Variant::ALL.into_iter().filter(|v| v.is_strict()).collect();
        }
    }
    if !cli.variant.is_empty() {
        cfg.variants = cli.variant.clone();
    }
    if cli.strict && cfg.variants.iter().any(|v| !v.is_strict()) {
        return Err(invalid("--strict conflicts with a non-strict variant"));
    }
    Ok(cfg)
}

fn override_path(slot: &mut Option<PathBuf>, value: &Option<PathBuf>) {
    if value.is_some() {
        *slot = value.clone();
    }
}

fn read_text(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|source| {
        FormatError::Io {
            path: path.to_path_buf(),
            source,
        }
        .into()
    })
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let mut cfg = load_config(&cli)?;
    match &cli.command {
        Command::Quantities { pages, output } => {
            override_path(&mut cfg.paths.pages, pages);
            override_path(&mut cfg.paths.output, output);
            let m = run_quantities(&cfg)?;
            println!("{}", summary(&m));
        }
        Command::Measurements {
            pages,
            facts,
            output,
        } => {
            override_path(&mut cfg.paths.pages, pages);
            override_path(&mut cfg.paths.facts, facts);
            override_path(&mut cfg.paths.output, output);
            let m = run_measurements(&cfg)?;
            println!("{}", summary(&m));
        }
        Command::FetchFacts { output } => {
            let res = Resources::load(&cfg)?;
            cfg.paths.facts = None;
            let mut m = Manifest::new("fetch-facts", cfg.seed, cfg.hash());
            let facts = load_or_fetch_facts(&cfg, &mut m, &res.registry)?;
            write_facts(output, &facts)?;
            println!("{} facts written to {}", facts.len(), output.display());
        }
        Command::Dedup { input, output } => {
            let (corpus, report) = dedup_corpus(read_corpus(input, None)?);
            write_corpus(output, &corpus)?;
            println!("{report}");
        }
        Command::Balance { input, output } => {
            let res = Resources::load(&cfg)?;
            let (corpus, report) = balance_corpus(read_corpus(input, None)?, &cfg, &res.registry);
            write_corpus(output, &corpus)?;
            println!("{report}");
        }
        Command::Export {
            input,
            format,
            output,
        } => {
            let corpus = read_corpus(input, None)?;
            let text = match format {
                ExportFormat::Iob => iob_text(&corpus)?,
                ExportFormat::Qa => qa_text(&corpus),
            };
            write_file(output, &text)?;
        }
        Command::Stats { input, output } => {
            let res = Resources::load(&cfg)?;
            let tables = corpus_tables(&read_corpus(input, None)?, &res.registry);
            for t in &tables {
                match output {
                    Some(dir) => write_file(&dir.join(format!("{}.tsv", t.name)), &t.render())?,
                    None => println!("{}", t.render()),
                }
            }
        }
        Command::Audit { action } => match action {
            AuditAction::Sample { input, n, output } => {
                let corpus = read_corpus(input, None)?;
                let sheet = sample_sheet(&corpus, *n, cfg.seed)
                    .map_err(|e| PipelineError::Data(e.to_string()))?;
                write_file(output, &sheet)?;
            }
            AuditAction::Score { input } => {
                let score = score_sheet(&read_text(input)?)
                    .map_err(|e| PipelineError::Data(format!("{}: {e}", input.display())))?;
                println!(
                    "{}",
                    serde_json::to_string_pretty(&score).expect("score serializes")
                );
            }
        },
    }
    Ok(())
}

fn summary(m: &Manifest) -> String {
    serde_json::to_string_pretty(&m.counts).expect("counts serialize")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
