//! SPARQL over HTTP with retries and an on-disk response archive, plus the
//! two-step quantitative fact download.

use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use corpusforge_core::facts::{
    parse_property_bindings, parse_statement_bindings, property_query, statement_query, Labelled,
    QuantFact, SparqlResults,
};
use corpusforge_core::units::{UnitRegistry, WikidataUnits};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const ENDPOINT_ENV: &str = "CORPUSFORGE_SPARQL_ENDPOINT";
pub const DEFAULT_ENDPOINT: &str = "https://query.wikidata.org/sparql";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchiveMode {
    /// Always query the endpoint.
    #[default]
    Off,
    /// Answer from the archive only; never touch the network.
    Replay,
    /// Query the endpoint and store every response.
    Record,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClientConfig {
    pub endpoint: Option<String>,
    /// Extra attempts after a 5xx or transport failure.
    pub retries: u32,
    pub backoff_ms: u64,
    pub timeout_s: u64,
    pub user_agent: String,
    pub archive: Option<PathBuf>,
    pub archive_mode: ArchiveMode,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            endpoint: None,
            retries: 2,
            backoff_ms: 1000,
            timeout_s: 300,
            user_agent: concat!("corpusforge/", env!("CARGO_PKG_VERSION")).into(),
            archive: None,
            archive_mode: ArchiveMode::Off,
        }
    }
}

#[derive(Debug, Error)]
pub enum SparqlError {
    #[error("endpoint answered HTTP {status}")]
    Http { status: u16 },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed SPARQL JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("no archived response for this query at {0}")]
    ArchiveMiss(PathBuf),
    #[error("archive requested but no archive directory configured")]
    NoArchive,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SparqlError {
    fn retryable(&self) -> bool {
        match self {
            SparqlError::Http { status } => *status >= 500,
            SparqlError::Transport(_) => true,
            _ => false,
        }
    }
}

pub struct SparqlClient {
    agent: ureq::Agent,
    endpoint: String,
    config: ClientConfig,
}

/// Archive file name for a query.
pub fn query_key(query: &str) -> String {
    hex::encode(Sha256::digest(query.as_bytes()))
}

impl SparqlClient {
    /// The endpoint comes from the config, else the environment, else the
    /// public default.
    pub fn new(config: ClientConfig) -> Self {
        let endpoint = config
            .endpoint
            .clone()
            .or_else(|| std::env::var(ENDPOINT_ENV).ok())
            .unwrap_or_else(|| DEFAULT_ENDPOINT.into());
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_s)))
            .user_agent(config.user_agent.as_str())
            .build()
            .into();
        SparqlClient {
            agent,
            endpoint,
            config,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn archive_path(&self, query: &str) -> Result<PathBuf, SparqlError> {
        let dir = self.config.archive.as_ref().ok_or(SparqlError::NoArchive)?;
        Ok(dir.join(format!("{}.json", query_key(query))))
    }

    fn post(&self, query: &str) -> Result<String, SparqlError> {
        let resp = self
            .agent
            .post(&self.endpoint)
            .header("Accept", "application/sparql-results+json")
            .send_form([("query", query), ("format", "json")]);
        match resp {
            Ok(mut r) => r
                .body_mut()
                .read_to_string()
                .map_err(|e| SparqlError::Transport(e.to_string())),
            Err(ureq::Error::StatusCode(status)) => Err(SparqlError::Http { status }),
            Err(e) => Err(SparqlError::Transport(e.to_string())),
        }
    }

    fn post_with_retries(&self, query: &str) -> Result<String, SparqlError> {
        let mut attempt = 0;
        loop {
            match self.post(query) {
                Ok(body) => return Ok(body),
                Err(e) if e.retryable() && attempt < self.config.retries => {
                    attempt += 1;
                    warn!("SPARQL attempt {attempt} failed ({e}); retrying");
                    thread::sleep(Duration::from_millis(
                        self.config.backoff_ms * attempt as u64,
                    ));
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Raw JSON body for a query.
    pub fn query_raw(&self, query: &str) -> Result<String, SparqlError> {
        match self.config.archive_mode {
            ArchiveMode::Replay => {
                let path = self.archive_path(query)?;
                fs::read_to_string(&path).map_err(|_| SparqlError::ArchiveMiss(path))
            }
            ArchiveMode::Off => self.post_with_retries(query),
            ArchiveMode::Record => {
                let path = self.archive_path(query)?;
                let body = self.post_with_retries(query)?;
                write_archive(&path, &body)?;
                Ok(body)
            }
        }
    }

    pub fn query(&self, query: &str) -> Result<SparqlResults, SparqlError> {
        Ok(serde_json::from_str(&self.query_raw(query)?)?)
    }
}

fn write_archive(path: &Path, body: &str) -> Result<(), SparqlError> {
    let io = |source| SparqlError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, body).map_err(io)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FetchConfig {
    /// Wikipedia whose articles are linked ("en", "simple").
    pub wiki_lang: String,
    pub limit: usize,
    /// Restrict to these property ids; empty means all quantity properties.
    pub properties: Vec<String>,
    /// Statement queries in flight at once.
    pub concurrency: usize,
    pub client: ClientConfig,
}

impl Default for FetchConfig {
    fn default() -> Self {
        FetchConfig {
            wiki_lang: "en".into(),
            limit: corpusforge_core::facts::DEFAULT_LIMIT,
            properties: Vec::new(),
            concurrency: 2,
            client: ClientConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FetchReport {
    pub properties: usize,
    pub facts: usize,
    pub malformed_rows: usize,
}

/// List quantity properties, then download statements per property.
pub fn fetch_facts(
    client: &SparqlClient,
    cfg: &FetchConfig,
    registry: &UnitRegistry,
    wd_units: &WikidataUnits,
) -> Result<(Vec<QuantFact>, FetchReport), SparqlError> {
    let props = parse_property_bindings(&client.query(&property_query())?.results.bindings);
    let props: Vec<Labelled> = if cfg.properties.is_empty() {
        props
    } else {
        props
            .into_iter()
            .filter(|p| cfg.properties.contains(&p.id))
            .collect()
    };
    let mut report = FetchReport {
        properties: props.len(),
        ..FetchReport::default()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.concurrency.max(1))
        .build()
        .expect("thread pool");
    // results stay in property order; the first failure in that order wins
    let fetched: Vec<Result<SparqlResults, SparqlError>> = pool.install(|| {
        props
            .par_iter()
            .map(|p| client.query(&statement_query(&p.id, &cfg.wiki_lang, cfg.limit)))
            .collect()
    });
    let mut facts = Vec::new();
    for (p, res) in props.iter().zip(fetched) {
        let parsed =
            parse_statement_bindings(&res?.results.bindings, p, wd_units, registry, cfg.limit);
        info!(
            "{} ({}): {} facts, {} malformed rows",
            p.id,
            p.label,
            parsed.facts.len(),
            parsed.malformed
        );
        report.malformed_rows += parsed.malformed;
        facts.extend(parsed.facts);
    }
    report.facts = facts.len();
    Ok((facts, report))
}
