//! Quantitative knowledge-graph statements: types, SPARQL query templates
//! and conversion of SPARQL JSON result rows into facts. No IO here.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{UnitRegistry, WikidataUnits};

/// Unit id that marks a count.
pub const COUNT_UNIT: &str = "1";
const COUNT_UNIT_ITEM: &str = "Q199";
/// Ranking qualifiers are never stored.
pub const RANKING_PID: &str = "P1352";
pub const DEFAULT_LIMIT: usize = 250_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labelled {
    pub id: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alt_labels: Vec<String>,
}

impl Labelled {
    pub fn new(id: &str, label: &str) -> Self {
        Labelled {
            id: id.into(),
            label: label.into(),
            alt_labels: Vec::new(),
        }
    }

    pub fn with_alts(mut self, alts: &[&str]) -> Self {
        self.alt_labels = alts.iter().map(|a| a.to_string()).collect();
        self
    }

    /// Label followed by alternative labels.
    pub fn all_labels(&self) -> impl Iterator<Item = &str> {
        core::iter::once(self.label.as_str()).chain(self.alt_labels.iter().map(String::as_str))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conversion {
    /// Registry code of the unit.
    pub code: String,
    pub factor: f64,
    pub offset: f64,
    pub dimension: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactUnit {
    pub id: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alt_labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conversion: Option<Conversion>,
}

impl FactUnit {
    pub fn count() -> Self {
        FactUnit {
            id: COUNT_UNIT.into(),
            label: COUNT_UNIT.into(),
            alt_labels: Vec::new(),
            conversion: None,
        }
    }

    pub fn is_count(&self) -> bool {
        self.id == COUNT_UNIT
    }

    /// Unit described by a registry code, with names and symbols as labels.
    pub fn from_registry(id: &str, code: &str, registry: &UnitRegistry) -> Option<Self> {
        let def = registry.get(code)?;
        let mut alts = registry.surfaces_of(def);
        alts.retain(|s| *s != def.singular);
        Some(FactUnit {
            id: id.into(),
            label: def.singular.clone(),
            alt_labels: alts,
            conversion: Some(Conversion {
                code: def.code.clone(),
                factor: def.factor,
                offset: def.offset,
                dimension: def.dimension.clone(),
            }),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualifierKind {
    PointInTime,
    StartTime,
    EndTime,
    Location,
    Coordinate,
    AppliesToPart,
    InScopeOf,
    CriterionUsed,
    DeterminationMethod,
    AccordingTo,
    Other,
}

impl QualifierKind {
    /// `None` for rankings, which are dropped.
    pub fn from_pid(pid: &str) -> Option<Self> {
        Some(match pid {
            RANKING_PID => return None,
            "P585" => QualifierKind::PointInTime,
            "P580" => QualifierKind::StartTime,
            "P582" => QualifierKind::EndTime,
            "P276" => QualifierKind::Location,
            "P625" => QualifierKind::Coordinate,
            "P518" => QualifierKind::AppliesToPart,
            "P642" => QualifierKind::InScopeOf,
            "P1013" => QualifierKind::CriterionUsed,
            "P459" => QualifierKind::DeterminationMethod,
            "P3680" => QualifierKind::AccordingTo,
            _ => QualifierKind::Other,
        })
    }

    pub fn is_temporal(self) -> bool {
        matches!(
            self,
            QualifierKind::PointInTime | QualifierKind::StartTime | QualifierKind::EndTime
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QualifierKind::PointInTime => "point_in_time",
            QualifierKind::StartTime => "start_time",
            QualifierKind::EndTime => "end_time",
            QualifierKind::Location => "location",
            QualifierKind::Coordinate => "coordinate",
            QualifierKind::AppliesToPart => "applies_to_part",
            QualifierKind::InScopeOf => "in_scope_of",
            QualifierKind::CriterionUsed => "criterion_used",
            QualifierKind::DeterminationMethod => "determination_method",
            QualifierKind::AccordingTo => "according_to",
            QualifierKind::Other => "other",
        }
    }

    /// Upper-case tag suffix used in IOB labels.
    pub fn tag(self) -> String {
        self.as_str().to_uppercase()
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            QualifierKind::PointInTime,
            QualifierKind::StartTime,
            QualifierKind::EndTime,
            QualifierKind::Location,
            QualifierKind::Coordinate,
            QualifierKind::AppliesToPart,
            QualifierKind::InScopeOf,
            QualifierKind::CriterionUsed,
            QualifierKind::DeterminationMethod,
            QualifierKind::AccordingTo,
            QualifierKind::Other,
        ]
        .into_iter()
        .find(|k| k.as_str().eq_ignore_ascii_case(s))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimePrecision {
    Year,
    Month,
    Day,
}

impl TimePrecision {
    /// From the numeric precision codes of the knowledge graph (9, 10, 11).
    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            9 => Some(TimePrecision::Year),
            10 => Some(TimePrecision::Month),
            11 => Some(TimePrecision::Day),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum QualifierValue {
    Quantity {
        value: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        unit: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lower_bound: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        upper_bound: Option<f64>,
    },
    Time {
        year: i32,
        month: u8,
        day: u8,
        precision: TimePrecision,
    },
    Text {
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
    },
    Coordinates {
        lat: f64,
        lon: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Qualifier {
    pub pid: String,
    pub kind: QualifierKind,
    pub value: QualifierValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantFact {
    /// Article URL or page id the fact is aligned against.
    pub article: String,
    pub entity: Labelled,
    pub property: Labelled,
    pub value: f64,
    pub unit: FactUnit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub qualifiers: Vec<Qualifier>,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum FactError {
    #[error("bounds [{lower}, {upper}] do not contain value {value}")]
    BadBounds { lower: f64, upper: f64, value: f64 },
    #[error("only one of the two bounds is present")]
    HalfBounds,
    #[error("empty {0} label")]
    EmptyLabel(&'static str),
    #[error("value is not finite")]
    NotFinite,
    #[error("qualifier {pid} of kind {kind} carries the wrong payload")]
    QualifierPayload { pid: String, kind: &'static str },
    #[error("ranking qualifiers are not stored")]
    Ranking,
}

impl QuantFact {
    pub fn bounds(&self) -> Option<(f64, f64)> {
        self.lower_bound.zip(self.upper_bound)
    }

    pub fn validate(&self) -> Result<(), FactError> {
        if !self.value.is_finite() {
            return Err(FactError::NotFinite);
        }
        match (self.lower_bound, self.upper_bound) {
            (Some(lower), Some(upper)) => {
                if !(lower <= self.value && self.value <= upper) {
                    return Err(FactError::BadBounds {
                        lower,
                        upper,
                        value: self.value,
                    });
                }
            }
            (None, None) => {}
            _ => return Err(FactError::HalfBounds),
        }
        if self.entity.label.trim().is_empty() {
            return Err(FactError::EmptyLabel("entity"));
        }
        if self.property.label.trim().is_empty() {
            return Err(FactError::EmptyLabel("property"));
        }
        if self.unit.label.trim().is_empty() {
            return Err(FactError::EmptyLabel("unit"));
        }
        for q in &self.qualifiers {
            if q.pid == RANKING_PID {
                return Err(FactError::Ranking);
            }
            let ok = match q.kind {
                k if k.is_temporal() => matches!(q.value, QualifierValue::Time { .. }),
                QualifierKind::Coordinate => matches!(q.value, QualifierValue::Coordinates { .. }),
                _ => true,
            };
            if !ok {
                return Err(FactError::QualifierPayload {
                    pid: q.pid.clone(),
                    kind: q.kind.as_str(),
                });
            }
        }
        Ok(())
    }
}

/// Query listing every property whose values are quantities, with English
/// labels and alternative labels.
pub fn property_query() -> String {
    "SELECT ?property ?propertyLabel\n\
WHERE {\n\
    ?property wikibase:propertyType wikibase:Quantity .\n\
    ?property rdfs:label|skos:altLabel ?propertyLabel .\n\
    FILTER(LANG(?propertyLabel) = \"en\") .\n\
}\n"
    .to_string()
}

/// Query for up to `limit` quantity statements of `pid` about items with an
/// article in the `wiki_lang` wiki, with bounds and qualifiers.
pub fn statement_query(pid: &str, wiki_lang: &str, limit: usize) -> String {
    alloc::format!(
        "SELECT DISTINCT ?article ?entity ?value ?unit ?lowerbound ?upperbound ?qualifier ?qualifier_value ?qualifier_unit ?qualifier_lowerbound ?qualifier_upperbound ?qualifier_time_precision
WHERE {{
    VALUES (?property) {{(wd:{pid})}}
    ?article schema:about ?entity .
    ?article schema:isPartOf <https://{wiki_lang}.wikipedia.org/> .
    ?entity    ?p  ?statement .
    ?statement ?ps ?valuenode .
    ?property  wikibase:claim          ?p ;
               wikibase:statementValue ?ps .
    ?valuenode wikibase:quantityAmount ?value ;
               wikibase:quantityUnit   ?unit .
    OPTIONAL {{
        ?valuenode wikibase:quantityLowerBound ?lowerbound ;
                   wikibase:quantityUpperBound ?upperbound .
    }}
    OPTIONAL {{
        ?statement ?qualifier ?qualifier_value .
        ?wdpq wikibase:qualifier ?qualifier .
        OPTIONAL {{
            ?statement ?pqv ?pqv_ .
            ?wdpq wikibase:qualifierValue ?pqv .
            OPTIONAL {{ ?pqv_ wikibase:quantityUnit ?qualifier_unit . }}
            OPTIONAL {{
                ?pqv_ wikibase:quantityLowerBound ?qualifier_lowerbound ;
                      wikibase:quantityUpperBound ?qualifier_upperbound .
            }}
            OPTIONAL {{ ?pqv_ wikibase:timePrecision ?qualifier_time_precision . }}
        }}
    }}
}}
LIMIT {limit}
"
    )
}

/// One RDF term of a SPARQL JSON result row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdfTerm {
    #[serde(rename = "type")]
    pub kind: String,
    pub value: String,
    #[serde(default, rename = "xml:lang", skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datatype: Option<String>,
}

pub type Binding = BTreeMap<String, RdfTerm>;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparqlResults {
    #[serde(default)]
    pub head: SparqlHead,
    pub results: SparqlBindings,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparqlHead {
    #[serde(default)]
    pub vars: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparqlBindings {
    #[serde(default)]
    pub bindings: Vec<Binding>,
}

/// Last path segment of an entity URI ("http://…/entity/Q42" → "Q42").
pub fn local_id(uri: &str) -> &str {
    uri.rsplit('/').next().unwrap_or(uri)
}

/// Properties with their labels, merged by id in first-seen order.
pub fn parse_property_bindings(rows: &[Binding]) -> Vec<Labelled> {
    let mut out: Vec<Labelled> = Vec::new();
    for row in rows {
        let (Some(p), Some(l)) = (row.get("property"), row.get("propertyLabel")) else {
            continue;
        };
        let id = local_id(&p.value);
        match out.iter_mut().find(|x| x.id == id) {
            Some(x) => {
                if x.label != l.value && !x.alt_labels.contains(&l.value) {
                    x.alt_labels.push(l.value.clone());
                }
            }
            None => out.push(Labelled::new(id, &l.value)),
        }
    }
    out
}

/// Title of an article URL: last segment, percent-decoded, underscores as
/// spaces.
pub fn article_title(url: &str) -> String {
    let seg = url.rsplit('/').next().unwrap_or(url);
    let bytes = seg.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' && i + 2 < bytes.len() {
            if let Ok(b) = u8::from_str_radix(&seg[i + 1..i + 3], 16) {
                out.push(b);
                i += 3;
                continue;
            }
        }
        out.push(if bytes[i] == b'_' { b' ' } else { bytes[i] });
        i += 1;
    }
    String::from_utf8_lossy(&out).into_owned()
}

/// Entity labels derived from an article title: the title, plus the part
/// before a disambiguating comma or parenthesis as an alternative.
pub fn entity_from_title(qid: &str, title: &str) -> Labelled {
    let mut e = Labelled::new(qid, title);
    let short = title.split([',', '(']).next().unwrap_or(title).trim();
    if !short.is_empty() && short != title {
        e.alt_labels.push(short.to_string());
    }
    e
}

fn parse_amount(s: &str) -> Option<f64> {
    let v: f64 = s.trim_start_matches('+').parse().ok()?;
    v.is_finite().then_some(v)
}

/// "+2019-01-01T00:00:00Z" → (2019, 1, 1).
pub fn parse_timestamp(s: &str) -> Option<(i32, u8, u8)> {
    let neg = s.starts_with('-');
    let body = s.trim_start_matches(['+', '-']);
    let date = body.split('T').next()?;
    let mut parts = date.split('-');
    let year: i32 = parts.next()?.parse().ok()?;
    let month: u8 = parts.next()?.parse().ok()?;
    let day: u8 = parts.next()?.parse().ok()?;
    Some((if neg { -year } else { year }, month, day))
}

/// "Point(8.5 47.3)" → (lat 47.3, lon 8.5).
pub fn parse_point(s: &str) -> Option<(f64, f64)> {
    let inner = s.trim().strip_prefix("Point(")?.strip_suffix(')')?;
    let mut it = inner.split_whitespace();
    let lon: f64 = it.next()?.parse().ok()?;
    let lat: f64 = it.next()?.parse().ok()?;
    Some((lat, lon))
}

fn unit_of(uri: &str, wd_units: &WikidataUnits, registry: &UnitRegistry) -> FactUnit {
    let qid = local_id(uri);
    if qid == COUNT_UNIT_ITEM || qid == COUNT_UNIT {
        return FactUnit::count();
    }
    if let Some(u) = wd_units
        .code(qid)
        .and_then(|code| FactUnit::from_registry(qid, code, registry))
    {
        return u;
    }
    FactUnit {
        id: qid.into(),
        label: wd_units.label(qid).unwrap_or(qid).into(),
        alt_labels: Vec::new(),
        conversion: None,
    }
}

fn qualifier_of(
    row: &Binding,
    wd_units: &WikidataUnits,
) -> Result<Option<Qualifier>, &'static str> {
    let (Some(q), Some(v)) = (row.get("qualifier"), row.get("qualifier_value")) else {
        return Ok(None);
    };
    let pid = local_id(&q.value).to_string();
    let Some(kind) = QualifierKind::from_pid(&pid) else {
        return Ok(None);
    };
    let datatype = v.datatype.as_deref().unwrap_or("");
    let value = if datatype.ends_with("#dateTime") || kind.is_temporal() {
        let (year, month, day) = parse_timestamp(&v.value).ok_or("bad qualifier time")?;
        let precision = row
            .get("qualifier_time_precision")
            .and_then(|p| p.value.parse::<u8>().ok())
            .and_then(TimePrecision::from_code)
            .unwrap_or(TimePrecision::Day);
        QualifierValue::Time {
            year,
            month,
            day,
            precision,
        }
    } else if datatype.ends_with("wktLiteral") || kind == QualifierKind::Coordinate {
        let (lat, lon) = parse_point(&v.value).ok_or("bad qualifier coordinates")?;
        QualifierValue::Coordinates { lat, lon }
    } else if let Some(amount) = datatype
        .ends_with("#decimal")
        .then(|| parse_amount(&v.value))
    {
        let amount = amount.ok_or("bad qualifier amount")?;
        let unit = row.get("qualifier_unit").map(|u| {
            let qid = local_id(&u.value);
            wd_units.code(qid).unwrap_or(qid).to_string()
        });
        QualifierValue::Quantity {
            value: amount,
            unit: unit.filter(|u| u != COUNT_UNIT_ITEM),
            lower_bound: row
                .get("qualifier_lowerbound")
                .and_then(|b| parse_amount(&b.value)),
            upper_bound: row
                .get("qualifier_upperbound")
                .and_then(|b| parse_amount(&b.value)),
        }
    } else if v.kind == "uri" {
        let id = local_id(&v.value).to_string();
        QualifierValue::Text {
            text: v
                .lang
                .as_ref()
                .map_or_else(|| id.clone(), |_| v.value.clone()),
            id: Some(id),
        }
    } else {
        QualifierValue::Text {
            text: v.value.clone(),
            id: None,
        }
    };
    Ok(Some(Qualifier { pid, kind, value }))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParsedStatements {
    pub facts: Vec<QuantFact>,
    /// Rows skipped as malformed.
    pub malformed: usize,
}

/// Group statement rows into facts. Rows differing only in their
/// qualifier columns belong to one statement; rankings are dropped; at most
/// `limit` facts are returned.
pub fn parse_statement_bindings(
    rows: &[Binding],
    property: &Labelled,
    wd_units: &WikidataUnits,
    registry: &UnitRegistry,
    limit: usize,
) -> ParsedStatements {
    let mut out = ParsedStatements::default();
    let mut index: BTreeMap<(String, String, String, String, String, String), usize> =
        BTreeMap::new();
    for row in rows {
        let get = |k: &str| row.get(k).map(|t| t.value.clone());
        let (Some(article), Some(entity), Some(value_s), Some(unit_uri)) =
            (get("article"), get("entity"), get("value"), get("unit"))
        else {
            out.malformed += 1;
            continue;
        };
        let Some(value) = parse_amount(&value_s) else {
            out.malformed += 1;
            continue;
        };
        let lower = get("lowerbound").and_then(|s| parse_amount(&s));
        let upper = get("upperbound").and_then(|s| parse_amount(&s));
        let qualifier = match qualifier_of(row, wd_units) {
            Ok(q) => q,
            Err(_) => {
                out.malformed += 1;
                continue;
            }
        };
        let key = (
            article.clone(),
            entity.clone(),
            value_s,
            unit_uri.clone(),
            get("lowerbound").unwrap_or_default(),
            get("upperbound").unwrap_or_default(),
        );
        let idx = match index.get(&key) {
            Some(&i) => i,
            None => {
                if out.facts.len() >= limit {
                    continue;
                }
                let fact = QuantFact {
                    entity: entity_from_title(local_id(&entity), &article_title(&article)),
                    article,
                    property: property.clone(),
                    value,
                    unit: unit_of(&unit_uri, wd_units, registry),
                    lower_bound: lower.zip(upper).map(|b| b.0),
                    upper_bound: lower.zip(upper).map(|b| b.1),
                    qualifiers: Vec::new(),
                };
                if fact.validate().is_err() {
                    out.malformed += 1;
                    continue;
                }
                out.facts.push(fact);
                index.insert(key, out.facts.len() - 1);
                out.facts.len() - 1
            }
        };
        if let Some(q) = qualifier {
            let quals = &mut out.facts[idx].qualifiers;
            if !quals.contains(&q) {
                quals.push(q);
            }
        }
    }
    out
}
