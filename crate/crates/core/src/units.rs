//! Unit registry: symbols, names, dimensions and affine conversion to a
//! per-dimension base unit (`base = value * factor + offset`).

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

const BUILTIN_UNITS: &str = include_str!("../data/units.tsv");
const BUILTIN_WIKIDATA_UNITS: &str = include_str!("../data/wikidata_units.tsv");

#[derive(Clone, Debug, PartialEq)]
pub struct UnitDef {
    pub code: String,
    pub symbol: String,
    pub singular: String,
    pub plural: String,
    pub dimension: String,
    pub factor: f64,
    pub offset: f64,
    pub default_output: String,
}

impl UnitDef {
    pub fn is_affine(&self) -> bool {
        self.offset != 0.0
    }

    pub fn to_base(&self, value: f64) -> f64 {
        value * self.factor + self.offset
    }

    pub fn from_base(&self, base: f64) -> f64 {
        (base - self.offset) / self.factor
    }

    pub fn name_for(&self, plural: bool) -> &str {
        if plural {
            &self.plural
        } else {
            &self.singular
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RegistryError {
    #[error("line {line}: expected 8 tab-separated columns, found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("line {line}: invalid number in column `{column}`")]
    BadNumber { line: usize, column: &'static str },
    #[error("line {line}: duplicate unit code `{code}`")]
    Duplicate { line: usize, code: String },
    #[error(
        "unit `{code}` names default output `{target}` which is missing or of another dimension"
    )]
    BadDefault { code: String, target: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvertError {
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),
    #[error("cannot convert `{from}` ({from_dim}) to `{to}` ({to_dim})")]
    DimensionMismatch {
        from: String,
        from_dim: String,
        to: String,
        to_dim: String,
    },
}

#[derive(Clone, Debug)]
pub struct UnitRegistry {
    units: Vec<UnitDef>,
    by_code: BTreeMap<String, usize>,
    by_symbol: BTreeMap<String, usize>,
    by_name: BTreeMap<String, usize>,
    // every surface form, longest first
    surfaces: Vec<(String, usize)>,
}

impl UnitRegistry {
    /// Parse the tabular registry format. Blank lines and `#` comments are
    /// skipped.
    pub fn parse(text: &str) -> Result<Self, RegistryError> {
        let mut units = Vec::new();
        let mut by_code = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').map(str::trim).collect();
            if cols.len() != 8 {
                return Err(RegistryError::ColumnCount {
                    line,
                    found: cols.len(),
                });
            }
            let factor: f64 = cols[5].parse().map_err(|_| RegistryError::BadNumber {
                line,
                column: "factor_to_base",
            })?;
            let offset: f64 = cols[6].parse().map_err(|_| RegistryError::BadNumber {
                line,
                column: "offset_to_base",
            })?;
            if factor == 0.0 || !factor.is_finite() {
                return Err(RegistryError::BadNumber {
                    line,
                    column: "factor_to_base",
                });
            }
            let def = UnitDef {
                code: cols[0].to_string(),
                symbol: cols[1].to_string(),
                singular: cols[2].to_string(),
                plural: cols[3].to_string(),
                dimension: cols[4].to_string(),
                factor,
                offset,
                default_output: cols[7].to_string(),
            };
            if by_code.insert(def.code.clone(), units.len()).is_some() {
                return Err(RegistryError::Duplicate {
                    line,
                    code: def.code,
                });
            }
            units.push(def);
        }
        for u in &units {
            match by_code.get(&u.default_output) {
                Some(&j) if units[j].dimension == u.dimension => {}
                _ => {
                    return Err(RegistryError::BadDefault {
                        code: u.code.clone(),
                        target: u.default_output.clone(),
                    })
                }
            }
        }
        let mut by_symbol = BTreeMap::new();
        let mut by_name = BTreeMap::new();
        let mut surfaces = Vec::new();
        for (i, u) in units.iter().enumerate() {
            by_symbol.entry(u.symbol.clone()).or_insert(i);
            by_name.entry(u.singular.to_lowercase()).or_insert(i);
            by_name.entry(u.plural.to_lowercase()).or_insert(i);
            for s in surface_variants(u) {
                surfaces.push((s, i));
            }
        }
        surfaces.sort_by(|a, b| {
            b.0.chars()
                .count()
                .cmp(&a.0.chars().count())
                .then(a.0.cmp(&b.0))
        });
        surfaces.dedup_by(|a, b| a.0 == b.0);
        Ok(UnitRegistry {
            units,
            by_code,
            by_symbol,
            by_name,
            surfaces,
        })
    }

    /// The registry shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_UNITS).expect("shipped unit registry is valid")
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &UnitDef> {
        self.units.iter()
    }

    /// Resolve a unit by code, then by exact symbol, then by name.
    pub fn get(&self, code: &str) -> Option<&UnitDef> {
        let code = code.trim();
        self.by_code
            .get(code)
            .or_else(|| self.by_symbol.get(code))
            .or_else(|| self.by_name.get(&code.to_lowercase()))
            .map(|&i| &self.units[i])
    }

    pub fn lookup(&self, code: &str) -> Result<&UnitDef, ConvertError> {
        self.get(code)
            .ok_or_else(|| ConvertError::UnknownUnit(code.to_string()))
    }

    /// Convert `value` from `from` to `to` through the base unit.
    pub fn convert(&self, value: f64, from: &str, to: &str) -> Result<f64, ConvertError> {
        let a = self.lookup(from)?;
        let b = self.lookup(to)?;
        check_dimensions(a, b)?;
        Ok(b.from_base(a.to_base(value)))
    }

    /// Multiplicative factor taking a value in `from` to a value in `to`,
    /// ignoring offsets.
    pub fn linear_factor(from: &UnitDef, to: &UnitDef) -> f64 {
        from.factor / to.factor
    }

    /// All surface forms (symbols, names, spelling variants) with their
    /// units, longest first.
    pub fn surfaces(&self) -> &[(String, usize)] {
        &self.surfaces
    }

    pub fn unit_at(&self, index: usize) -> &UnitDef {
        &self.units[index]
    }

    /// Surface forms of one unit.
    pub fn surfaces_of(&self, unit: &UnitDef) -> Vec<String> {
        surface_variants(unit)
    }

    /// Longest surface form that is a suffix of `text` at a word boundary,
    /// after trailing closing punctuation is removed.
    pub fn trailing_unit<'a>(&self, text: &'a str) -> Option<(&'a str, &UnitDef)> {
        let trimmed = text.trim_end_matches(|c: char| {
            c.is_whitespace() || matches!(c, ')' | ']' | '.' | ',' | ';' | ':')
        });
        for (surface, idx) in &self.surfaces {
            if let Some(head) = trimmed.strip_suffix(surface.as_str()) {
                let boundary = head.chars().next_back().is_none_or(|c| !c.is_alphabetic());
                if boundary {
                    return Some((&trimmed[head.len()..], &self.units[*idx]));
                }
            }
        }
        None
    }
}

pub fn check_dimensions(a: &UnitDef, b: &UnitDef) -> Result<(), ConvertError> {
    if a.dimension == b.dimension {
        Ok(())
    } else {
        Err(ConvertError::DimensionMismatch {
            from: a.code.clone(),
            from_dim: a.dimension.clone(),
            to: b.code.clone(),
            to_dim: b.dimension.clone(),
        })
    }
}

fn push_unique(out: &mut Vec<String>, s: String) {
    if !s.is_empty() && !out.contains(&s) {
        out.push(s);
    }
}

/// American spellings and typographic variants of a name or symbol.
fn spelling_variants(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    for (from, to) in [("metre", "meter"), ("litre", "liter")] {
        if s.contains(from) {
            out.push(s.replace(from, to));
        }
    }
    for (from, to) in [("2", "²"), ("3", "³")] {
        if s.ends_with(from) && s.chars().any(|c| c.is_alphabetic()) {
            out.push(alloc::format!("{}{}", &s[..s.len() - 1], to));
        }
    }
    for (from, to) in [('²', "2"), ('³', "3")] {
        if s.contains(from) {
            out.push(s.replace(from, to));
        }
    }
    if s.contains('·') {
        out.push(s.replace('·', "⋅"));
        out.push(s.replace('·', ""));
    }
    if s.contains('⋅') {
        out.push(s.replace('⋅', "·"));
    }
    out
}

fn surface_variants(u: &UnitDef) -> Vec<String> {
    let mut out = Vec::new();
    for base in [&u.symbol, &u.singular, &u.plural] {
        push_unique(&mut out, base.clone());
        for v in spelling_variants(base) {
            push_unique(&mut out, v);
        }
    }
    // codes that read like text ("sqmi" does not)
    if u.code == u.symbol || u.code.chars().all(|c| !c.is_ascii_lowercase()) {
        push_unique(&mut out, u.code.clone());
    }
    out
}

/// Mapping from Wikidata unit item ids to registry codes.
#[derive(Clone, Debug, Default)]
pub struct WikidataUnits {
    map: BTreeMap<String, (String, String)>,
}

impl WikidataUnits {
    pub fn parse(text: &str) -> Self {
        let mut map = BTreeMap::new();
        for raw in text.lines() {
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').map(str::trim).collect();
            if cols.len() >= 3 {
                map.insert(
                    cols[0].to_string(),
                    (cols[1].to_string(), cols[2].to_string()),
                );
            }
        }
        WikidataUnits { map }
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_WIKIDATA_UNITS)
    }

    /// Registry code for a unit item id.
    pub fn code(&self, qid: &str) -> Option<&str> {
        self.map.get(qid).map(|(c, _)| c.as_str())
    }

    /// English label for a unit item id.
    pub fn label(&self, qid: &str) -> Option<&str> {
        self.map.get(qid).map(|(_, l)| l.as_str())
    }

    /// Registry code for an English unit label.
    pub fn code_for_label(&self, label: &str) -> Option<&str> {
        let label = label.to_lowercase();
        self.map
            .values()
            .find(|(_, l)| *l == label)
            .map(|(c, _)| c.as_str())
    }
}
