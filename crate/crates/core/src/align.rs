//! Distant-supervision alignment of quantitative facts with the sentences of
//! their subject's article, conflict resolution and dataset variants.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::convert::RenderingWeights;
use crate::dedup::{deduplicate_exact, near_duplicate_survivors, normalize_item, DedupItem};
use crate::facts::{Qualifier, QualifierKind, QualifierValue, QuantFact, TimePrecision};
use crate::lingo::{
    find_numbers, tokenize, Lexicon, LingAnnotation, LingProvider, NumberMention, Pos,
    SentenceSplitter,
};
use crate::quantities::render_page;
use crate::units::UnitRegistry;
use crate::wikitext::{Language, PageSource};

/// Byte range inside a sentence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn overlaps(&self, o: &Span) -> bool {
        self.start < o.end && o.start < self.end
    }

    pub fn text<'a>(&self, sentence: &'a str) -> &'a str {
        &sentence[self.start..self.end]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcceptanceReason {
    ImplicitProperty,
    CoreferenceEntity,
    ShortestPathTiebreak,
    SubclauseTiebreak,
    ApproximateValue,
    ConvertedUnit,
}

impl AcceptanceReason {
    /// Reasons that strict variants do not accept.
    pub fn is_weak(self) -> bool {
        matches!(
            self,
            AcceptanceReason::ImplicitProperty
                | AcceptanceReason::CoreferenceEntity
                | AcceptanceReason::ShortestPathTiebreak
                | AcceptanceReason::SubclauseTiebreak
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AcceptanceReason::ImplicitProperty => "implicit_property",
            AcceptanceReason::CoreferenceEntity => "coreference_entity",
            AcceptanceReason::ShortestPathTiebreak => "shortest_path_tiebreak",
            AcceptanceReason::SubclauseTiebreak => "subclause_tiebreak",
            AcceptanceReason::ApproximateValue => "approximate_value",
            AcceptanceReason::ConvertedUnit => "converted_unit",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpanKind {
    Entity,
    Property,
    Value,
    Unit,
    Modifier,
    Qualifier(QualifierKind),
}

impl SpanKind {
    /// Short label used in IOB tags and span records.
    pub fn tag(self) -> String {
        match self {
            SpanKind::Entity => "ENT".into(),
            SpanKind::Property => "PROP".into(),
            SpanKind::Value => "VAL".into(),
            SpanKind::Unit => "UNIT".into(),
            SpanKind::Modifier => "MOD".into(),
            SpanKind::Qualifier(k) => alloc::format!("QUAL_{}", k.tag()),
        }
    }

    pub fn parse_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "ENT" => SpanKind::Entity,
            "PROP" => SpanKind::Property,
            "VAL" => SpanKind::Value,
            "UNIT" => SpanKind::Unit,
            "MOD" => SpanKind::Modifier,
            _ => SpanKind::Qualifier(QualifierKind::parse(tag.strip_prefix("QUAL_")?)?),
        })
    }

    /// Lowercase name used in span records ("entity", "qualifier:point_in_time").
    pub fn name(self) -> String {
        match self {
            SpanKind::Entity => "entity".into(),
            SpanKind::Property => "property".into(),
            SpanKind::Value => "value".into(),
            SpanKind::Unit => "unit".into(),
            SpanKind::Modifier => "modifier".into(),
            SpanKind::Qualifier(k) => alloc::format!("qualifier:{}", k.as_str()),
        }
    }

    pub fn parse_name(name: &str) -> Option<Self> {
        Some(match name {
            "entity" => SpanKind::Entity,
            "property" => SpanKind::Property,
            "value" => SpanKind::Value,
            "unit" => SpanKind::Unit,
            "modifier" => SpanKind::Modifier,
            _ => SpanKind::Qualifier(QualifierKind::parse(name.strip_prefix("qualifier:")?)?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementExample {
    pub sentence: String,
    pub page_id: String,
    pub language: Language,
    pub sentence_index: usize,
    pub entity: Span,
    pub property: Option<Span>,
    pub implicit_property_label: Option<String>,
    pub value: Span,
    pub unit: Option<Span>,
    pub modifiers: Vec<Span>,
    pub qualifiers: Vec<(QualifierKind, Span)>,
    pub reasons: BTreeSet<AcceptanceReason>,
    pub fact: QuantFact,
    pub context_before: Vec<String>,
    pub context_after: Vec<String>,
}

#[derive(PartialEq)]
struct AnnotationKey<'a> {
    entity: Span,
    property: Option<Span>,
    implicit: &'a Option<String>,
    unit: Option<Span>,
    qualifiers: BTreeSet<(QualifierKind, Span)>,
}

impl AnnotationKey<'_> {
    fn same_entity_property_unit(&self, o: &Self) -> bool {
        self.entity == o.entity
            && self.property == o.property
            && self.implicit == o.implicit
            && self.unit == o.unit
    }
}

impl MeasurementExample {
    /// All spans with their kinds, sorted by position.
    pub fn spans(&self) -> Vec<(SpanKind, Span)> {
        let mut out = alloc::vec![
            (SpanKind::Entity, self.entity),
            (SpanKind::Value, self.value)
        ];
        if let Some(p) = self.property {
            out.push((SpanKind::Property, p));
        }
        if let Some(u) = self.unit {
            out.push((SpanKind::Unit, u));
        }
        out.extend(self.modifiers.iter().map(|m| (SpanKind::Modifier, *m)));
        out.extend(
            self.qualifiers
                .iter()
                .map(|(k, s)| (SpanKind::Qualifier(*k), *s)),
        );
        out.sort_by_key(|(k, s)| (*s, *k));
        out
    }

    pub fn has_weak_reason(&self) -> bool {
        self.reasons.iter().any(|r| r.is_weak())
    }

    /// Value and unit as one range.
    pub fn quantity_span(&self) -> Span {
        match self.unit {
            Some(u) => Span::new(self.value.start.min(u.start), self.value.end.max(u.end)),
            None => self.value,
        }
    }

    fn annotation_key(&self) -> AnnotationKey<'_> {
        AnnotationKey {
            entity: self.entity,
            property: self.property,
            implicit: &self.implicit_property_label,
            unit: self.unit,
            qualifiers: self.qualifiers.iter().copied().collect(),
        }
    }

    /// Ordering key used for canonical output order.
    fn order_key(&self) -> (usize, Span, Span, String) {
        (
            self.sentence_index,
            self.value,
            self.entity,
            alloc::format!(
                "{}|{}|{:e}|{}|{:?}|{:?}|{:?}",
                self.fact.entity.id,
                self.fact.property.id,
                self.fact.value,
                self.fact.unit.id,
                self.property,
                self.unit,
                self.qualifiers
            ),
        )
    }
}

impl DedupItem for MeasurementExample {
    fn sentence(&self) -> &str {
        &self.sentence
    }

    fn quantity_spans(&self) -> Vec<(usize, usize)> {
        let q = self.quantity_span();
        alloc::vec![(q.start, q.end)]
    }

    fn exact_key(&self) -> String {
        let mut key = self.sentence.clone();
        for (k, s) in self.spans() {
            key.push_str(&alloc::format!("\u{1f}{}:{}:{}", k.name(), s.start, s.end));
        }
        if let Some(l) = &self.implicit_property_label {
            key.push('\u{1f}');
            key.push_str(l);
        }
        key
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignerConfig {
    pub mape_tolerance: f64,
    /// Open interval of admissible conversion factors.
    pub conversion_factor_min: f64,
    pub conversion_factor_max: f64,
    /// Values below this need a matched qualifier.
    pub small_value_cutoff: f64,
    /// Integer values in this closed range are too common for an
    /// implicit property.
    pub frequent_value_min: i64,
    pub frequent_value_max: i64,
    pub strict: bool,
    /// When set, strict mode also requires a qualifier for round values
    /// (multiples of ten) below this.
    pub strict_small_rounded_cutoff: Option<f64>,
}

impl Default for AlignerConfig {
    fn default() -> Self {
        AlignerConfig {
            mape_tolerance: 0.03,
            conversion_factor_min: 1e-3,
            conversion_factor_max: 1e3,
            small_value_cutoff: 10.0,
            frequent_value_min: 1,
            frequent_value_max: 10,
            strict: false,
            strict_small_rounded_cutoff: None,
        }
    }
}

impl AlignerConfig {
    pub fn strict() -> Self {
        AlignerConfig {
            strict: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.mape_tolerance > 0.0 && self.mape_tolerance < 1.0) {
            return Err("mape_tolerance must lie in (0, 1)");
        }
        if !(self.conversion_factor_min > 0.0
            && self.conversion_factor_min < self.conversion_factor_max)
        {
            return Err("conversion factor interval must be positive and non-empty");
        }
        if self.frequent_value_min > self.frequent_value_max {
            return Err("frequent value range is empty");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueMatch {
    Exact,
    Approximate,
    None,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

/// Compare an observed number with a reference value. With bounds the
/// observed value must lie inside them; otherwise equality is exact and a
/// relative deviation up to `tolerance` is approximate.
pub fn match_value(
    reference: f64,
    bounds: Option<(f64, f64)>,
    observed: f64,
    tolerance: f64,
) -> ValueMatch {
    if let Some((lo, hi)) = bounds {
        let eps = 1e-9 * hi.abs().max(lo.abs()).max(1.0);
        return if lo - eps <= observed && observed <= hi + eps {
            ValueMatch::Exact
        } else {
            ValueMatch::None
        };
    }
    if close(observed, reference) {
        ValueMatch::Exact
    } else if reference != 0.0 && ((observed - reference) / reference).abs() <= tolerance + 1e-12 {
        ValueMatch::Approximate
    } else {
        ValueMatch::None
    }
}

/// Value matching for a number mention against the fact's own value.
pub fn value_matches(fact: &QuantFact, mention: &NumberMention, cfg: &AlignerConfig) -> ValueMatch {
    match (&mention.value, mention.is_matchable()) {
        (Some(v), true) => match_value(fact.value, fact.bounds(), v.value, cfg.mape_tolerance),
        _ => ValueMatch::None,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnitCandidate {
    /// Registry code, if the unit is known.
    pub code: Option<String>,
    pub surfaces: Vec<String>,
    pub value: f64,
    pub bounds: Option<(f64, f64)>,
    pub converted: bool,
}

/// The fact's own unit first, then every registry unit of the same
/// dimension whose factor relative to it lies strictly inside the
/// configured interval. Counts have no candidates.
pub fn unit_candidates(
    fact: &QuantFact,
    cfg: &AlignerConfig,
    registry: &UnitRegistry,
) -> Vec<UnitCandidate> {
    if fact.unit.is_count() {
        return Vec::new();
    }
    let mut own: Vec<String> = fact.unit.alt_labels.clone();
    own.insert(0, fact.unit.label.clone());
    let mut out = Vec::new();
    let Some(conv) = &fact.unit.conversion else {
        out.push(UnitCandidate {
            code: None,
            surfaces: own,
            value: fact.value,
            bounds: fact.bounds(),
            converted: false,
        });
        return out;
    };
    if let Some(def) = registry.get(&conv.code) {
        for s in registry.surfaces_of(def) {
            if !own.contains(&s) {
                own.push(s);
            }
        }
    }
    out.push(UnitCandidate {
        code: Some(conv.code.clone()),
        surfaces: own,
        value: fact.value,
        bounds: fact.bounds(),
        converted: false,
    });
    let to_base = |v: f64| v * conv.factor + conv.offset;
    for def in registry.iter() {
        if def.dimension != conv.dimension || def.code == conv.code {
            continue;
        }
        let factor = conv.factor / def.factor;
        if !(factor > cfg.conversion_factor_min && factor < cfg.conversion_factor_max) {
            continue;
        }
        out.push(UnitCandidate {
            code: Some(def.code.clone()),
            surfaces: registry.surfaces_of(def),
            value: def.from_base(to_base(fact.value)),
            bounds: fact
                .bounds()
                .map(|(lo, hi)| (def.from_base(to_base(lo)), def.from_base(to_base(hi)))),
            converted: true,
        });
    }
    out
}

const UNIT_BLACKLIST: &[&str] = &["of which"];

const MODIFIERS: &[&str] = &[
    "approximately",
    "approx.",
    "about",
    "around",
    "roughly",
    "nearly",
    "almost",
    "over",
    "under",
    "more than",
    "less than",
    "fewer than",
    "at least",
    "at most",
    "up to",
    "some",
    "circa",
    "ca.",
    "c.",
    "an estimated",
    "estimated",
    "just over",
    "just under",
    "close to",
    "as many as",
    "as much as",
    "no more than",
    "no less than",
    "in excess of",
];

const PRONOUNS: &[&str] = &["it", "its", "she", "he"];

const CLAUSE_WORDS: &[&str] = &[
    "and", "but", "while", "whereas", "which", "who", "whose", "where", "although", "though",
    "because",
];

const CATEGORY_MODIFIERS: &[&str] = &[
    "urban",
    "metropolitan",
    "protected",
    "residential",
    "census",
    "statistical",
    "conservation",
    "wilderness",
    "built-up",
    "designated",
];

/// Dimension named by a word, for the width/height/depth/thickness/length
/// guard.
pub fn dimension_of(word: &str) -> Option<&'static str> {
    Some(match word.to_lowercase().as_str() {
        "width" | "wide" | "breadth" | "broad" | "wingspan" => "width",
        "height" | "high" | "tall" => "height",
        "depth" | "deep" => "depth",
        "thickness" | "thick" => "thickness",
        "length" | "long" => "length",
        _ => return None,
    })
}

/// Why a (fact, sentence) pair produced no example.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignRejection {
    NoValue,
    AmbiguousValue,
    NoUnit,
    AmbiguousUnit,
    NoEntity,
    EntityTie,
    PropertyTie,
    DimensionConflict,
    ImplicitNotExact,
    FrequentValue,
    SmallValueWithoutQualifier,
    WeakReason,
    SmallRoundedValue,
}

/// A sentence with everything the matcher needs precomputed.
pub struct SentenceView<'a> {
    pub text: &'a str,
    pub ann: LingAnnotation,
    pub mentions: Vec<NumberMention>,
    starts: BTreeSet<usize>,
    ends: BTreeSet<usize>,
    /// Every registry unit occurrence, non-overlapping, longest first.
    any_units: Vec<Span>,
    clause: Vec<usize>,
}

fn case_sensitive(surface: &str) -> bool {
    surface.chars().count() <= 3 || !surface.chars().any(|c| c.is_lowercase())
}

impl<'a> SentenceView<'a> {
    pub fn new(text: &'a str, provider: &dyn LingProvider, registry: &UnitRegistry) -> Self {
        let ann = provider.annotate(text);
        let mentions = find_numbers(text, &ann);
        let starts = ann.tokens.iter().map(|t| t.0).collect();
        let ends = ann.tokens.iter().map(|t| t.1).collect();
        let mut clause = Vec::with_capacity(ann.len());
        let mut c = 0;
        for i in 0..ann.len() {
            let w = ann.token_text(text, i);
            if matches!(w, "," | ";" | ":" | "(" | ")" | "—" | "–")
                || CLAUSE_WORDS.contains(&w.to_lowercase().as_str())
            {
                c += 1;
            }
            clause.push(c);
        }
        let mut view = SentenceView {
            text,
            ann,
            mentions,
            starts,
            ends,
            any_units: Vec::new(),
            clause,
        };
        let mut any: Vec<Span> = Vec::new();
        for (surface, _) in registry.surfaces() {
            for s in view.find_surface(surface) {
                if !any.iter().any(|a| a.overlaps(&s)) {
                    any.push(s);
                }
            }
        }
        any.sort();
        view.any_units = any;
        view
    }

    /// Occurrences of `surface` aligned with token boundaries.
    fn find_surface(&self, surface: &str) -> Vec<Span> {
        if surface.is_empty() {
            return Vec::new();
        }
        let cs = case_sensitive(surface);
        let n = surface.len();
        let bytes = self.text.as_bytes();
        self.starts
            .iter()
            .filter_map(|&s| {
                let e = s + n;
                if e > bytes.len() || !self.ends.contains(&e) || !self.text.is_char_boundary(e) {
                    return None;
                }
                let cand = &self.text[s..e];
                let hit = if cs {
                    cand == surface
                } else {
                    cand.to_lowercase() == surface.to_lowercase()
                };
                hit.then_some(Span::new(s, e))
            })
            .collect()
    }

    fn tok_range(&self, span: Span) -> (usize, usize) {
        let r = self.ann.tokens_in(span.start, span.end);
        (r.start, r.end.max(r.start + 1).min(self.ann.len()))
    }

    fn span_of(&self, a: usize, b: usize) -> Span {
        let (s, e) = self.ann.byte_range(a, b);
        Span::new(s, e)
    }

    /// Unit directly after the value, joined by nothing, a space or a hyphen.
    fn unit_adjacent(&self, value: Span, unit: Span) -> bool {
        unit.start >= value.end
            && matches!(&self.text[value.end..unit.start], "" | " " | "\u{a0}" | "-")
    }

    fn blacklisted(&self, unit: Span) -> bool {
        let before = self.text[..unit.start].trim_end().to_lowercase();
        UNIT_BLACKLIST.iter().any(|b| before.ends_with(b))
    }

    fn lower(&self, i: usize) -> String {
        self.ann.token_text(self.text, i).to_lowercase()
    }
}

/// Token windows matching a label by surface or lemma.
fn label_windows(view: &SentenceView, lexicon: &Lexicon, label: &str) -> Vec<(usize, usize)> {
    let words: Vec<String> = tokenize(label)
        .into_iter()
        .map(|(s, e)| label[s..e].to_lowercase())
        .collect();
    let lemmas = lexicon.lemmatize_phrase(label);
    let k = words.len();
    if k == 0 || k > view.ann.len() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for i in 0..=view.ann.len() - k {
        let ok = (0..k).all(|j| {
            let t = view.lower(i + j);
            t == words[j] || view.ann.lemma[i + j].to_lowercase() == lemmas[j]
        });
        // a multi-word label must not run across a comma or parenthesis
        if ok {
            out.push((i, i + k));
        }
    }
    out
}

fn windows_for(
    view: &SentenceView,
    lexicon: &Lexicon,
    labels: &[&str],
    reserved: &[Span],
) -> Vec<(usize, usize)> {
    let mut all: Vec<(usize, usize)> = Vec::new();
    for l in labels {
        for w in label_windows(view, lexicon, l) {
            let span = view.span_of(w.0, w.1);
            if !reserved.iter().any(|r| r.overlaps(&span)) && !all.contains(&w) {
                all.push(w);
            }
        }
    }
    // drop windows inside longer ones
    let snapshot = all.clone();
    all.retain(|w| !snapshot.iter().any(|o| o != w && o.0 <= w.0 && w.1 <= o.1));
    all.sort();
    all
}

fn is_name_label(label: &str) -> bool {
    !matches!(
        label,
        "DATE" | "TIME" | "CARDINAL" | "ORDINAL" | "QUANTITY" | "PERCENT" | "MONEY"
    )
}

fn expand_entity(
    view: &SentenceView,
    (mut s, mut e): (usize, usize),
    reserved: &[Span],
) -> (usize, usize) {
    let free = |i: usize| {
        let sp = view.span_of(i, i + 1);
        !reserved.iter().any(|r| r.overlaps(&sp))
    };
    for n in &view.ann.ner {
        if n.start < e && s < n.end && is_name_label(&n.label) && (n.start..n.end).all(free) {
            s = s.min(n.start);
            e = e.max(n.end);
        }
    }
    let n = view.ann.len();
    let glued = |a: usize, b: usize| view.ann.tokens[a].1 == view.ann.tokens[b].0;
    let namelike = |i: usize| {
        free(i)
            && (view.ann.pos[i] == Pos::Propn
                || view
                    .ann
                    .token_text(view.text, i)
                    .chars()
                    .next()
                    .is_some_and(char::is_uppercase))
    };
    // "Disentis/Mustér"
    while e + 1 < n
        && view.ann.token_text(view.text, e) == "/"
        && glued(e - 1, e)
        && glued(e, e + 1)
        && namelike(e + 1)
    {
        e += 2;
    }
    while s >= 2
        && view.ann.token_text(view.text, s - 1) == "/"
        && glued(s - 1, s)
        && glued(s - 2, s - 1)
        && namelike(s - 2)
    {
        s -= 2;
    }
    // "rural India"
    while s > 0 && view.ann.pos[s - 1] == Pos::Adj && free(s - 1) && !view.ann.like_num[s - 1] {
        s -= 1;
    }
    (s, e)
}

/// Property span grown left over adjectives and nouns ("total area").
/// Returns `None` when a category modifier shows the noun names a kind of
/// place rather than the measured property ("medium urban area").
fn expand_property(
    view: &SentenceView,
    (mut s, e): (usize, usize),
    reserved: &[Span],
) -> Option<(usize, usize)> {
    while s > 0 {
        let i = s - 1;
        let sp = view.span_of(i, i + 1);
        let ok = matches!(view.ann.pos[i], Pos::Adj | Pos::Noun)
            && !view.ann.like_num[i]
            && !reserved.iter().any(|r| r.overlaps(&sp))
            && view.ann.ner_label(i).is_none();
        if !ok {
            break;
        }
        s = i;
    }
    if (s..e).any(|i| CATEGORY_MODIFIERS.contains(&view.lower(i).as_str())) {
        return None;
    }
    Some((s, e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Choice {
    Single,
    Subclause,
    ShortestPath,
}

/// Pick one candidate: the only one, else the only one in the anchors'
/// subclause, else the unique one with the shortest total dependency path
/// to the anchors. `None` on a tie.
fn choose_span(
    view: &SentenceView,
    cands: &[(usize, usize)],
    anchors: &[usize],
) -> Option<((usize, usize), Choice)> {
    match cands.len() {
        0 => return None,
        1 => return Some((cands[0], Choice::Single)),
        _ => {}
    }
    let anchor_clause = anchors.first().map(|&a| view.clause[a]);
    let same: Vec<(usize, usize)> = cands
        .iter()
        .copied()
        .filter(|c| (c.0..c.1).any(|i| Some(view.clause[i]) == anchor_clause))
        .collect();
    if same.len() == 1 {
        return Some((same[0], Choice::Subclause));
    }
    let pool = if same.is_empty() {
        cands.to_vec()
    } else {
        same
    };
    let cost = |c: &(usize, usize)| -> usize {
        anchors
            .iter()
            .map(|&a| {
                (c.0..c.1)
                    .filter_map(|i| view.ann.dep_distance(i, a))
                    .min()
                    .unwrap_or(usize::MAX / 4)
            })
            .sum()
    };
    let best = pool.iter().map(cost).min()?;
    let winners: Vec<&(usize, usize)> = pool.iter().filter(|c| cost(c) == best).collect();
    (winners.len() == 1).then(|| (*winners[0], Choice::ShortestPath))
}

const MONTH_NAMES: &[&str] = &[
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

fn match_time(
    view: &SentenceView,
    year: i32,
    month: u8,
    day: u8,
    precision: TimePrecision,
    reserved: &[Span],
) -> Option<Span> {
    let n = view.ann.len();
    let w = |i: usize| view.ann.token_text(view.text, i);
    let y = alloc::format!("{year}");
    let m = MONTH_NAMES.get(usize::from(month).wrapping_sub(1)).copied();
    let d = alloc::format!("{day}");
    let free = |sp: &Span| !reserved.iter().any(|r| r.overlaps(sp));
    for i in 0..n {
        let cand = match precision {
            TimePrecision::Year => (w(i) == y).then(|| (i, i + 1)),
            TimePrecision::Month => {
                (i + 1 < n && Some(w(i)) == m && w(i + 1) == y).then(|| (i, i + 2))
            }
            TimePrecision::Day => {
                if i + 2 < n && w(i) == d && Some(w(i + 1)) == m && w(i + 2) == y {
                    Some((i, i + 3))
                } else if i + 3 < n
                    && Some(w(i)) == m
                    && w(i + 1) == d
                    && w(i + 2) == ","
                    && w(i + 3) == y
                {
                    Some((i, i + 4))
                } else {
                    None
                }
            }
        };
        if let Some((a, b)) = cand {
            let sp = view.span_of(a, b);
            if free(&sp) {
                return Some(sp);
            }
        }
    }
    None
}

/// Coordinate components: (span, decimal degrees, hemisphere letter).
fn coordinate_parts(view: &SentenceView) -> Vec<(Span, f64, Option<char>)> {
    let n = view.ann.len();
    let w = |i: usize| view.ann.token_text(view.text, i);
    let num = |i: usize| -> Option<f64> { w(i).parse::<f64>().ok() };
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let (Some(deg), true) = (num(i), i + 1 < n && w(i + 1) == "°") else {
            i += 1;
            continue;
        };
        let start = i;
        let mut j = i + 2;
        let mut value = deg;
        if j + 1 < n && num(j).is_some() && matches!(w(j + 1), "′" | "'") {
            value += num(j).unwrap_or(0.0) / 60.0;
            j += 2;
            if j + 1 < n && num(j).is_some() && matches!(w(j + 1), "″" | "\"") {
                value += num(j).unwrap_or(0.0) / 3600.0;
                j += 2;
            }
        }
        let mut hemi = None;
        if j < n {
            if let Some(c @ ('N' | 'S' | 'E' | 'W')) =
                w(j).chars().next().filter(|_| w(j).len() == 1)
            {
                hemi = Some(c);
                j += 1;
            }
        }
        if matches!(hemi, Some('S' | 'W')) {
            value = -value;
        }
        out.push((view.span_of(start, j), value, hemi));
        i = j;
    }
    out
}

fn match_coordinates(view: &SentenceView, lat: f64, lon: f64, reserved: &[Span]) -> Option<Span> {
    let parts = coordinate_parts(view);
    for pair in parts.windows(2) {
        let ((a, la, ha), (b, lo, hb)) = (pair[0], pair[1]);
        let lat_ok = !matches!(ha, Some('E' | 'W')) && !matches!(hb, Some('N' | 'S'));
        let between = view.text[a.end..b.start].trim();
        if !lat_ok || !(between.is_empty() || between == ",") {
            continue;
        }
        let sp = Span::new(a.start, b.end);
        if (la - lat).abs() <= 0.01 + 1e-9
            && (lo - lon).abs() <= 0.01 + 1e-9
            && !reserved.iter().any(|r| r.overlaps(&sp))
        {
            return Some(sp);
        }
    }
    None
}

fn match_qualifier(
    view: &SentenceView,
    lexicon: &Lexicon,
    q: &Qualifier,
    value_mention: usize,
    reserved: &[Span],
    cfg: &AlignerConfig,
) -> Option<Span> {
    match &q.value {
        QualifierValue::Time {
            year,
            month,
            day,
            precision,
        } => match_time(view, *year, *month, *day, *precision, reserved),
        QualifierValue::Coordinates { lat, lon } => match_coordinates(view, *lat, *lon, reserved),
        QualifierValue::Text { text, id } => {
            if id.as_deref() == Some(text.as_str()) {
                return None;
            }
            let ws = windows_for(view, lexicon, &[text.as_str()], reserved);
            ws.first().map(|&(a, b)| view.span_of(a, b))
        }
        QualifierValue::Quantity {
            value,
            unit,
            lower_bound,
            upper_bound,
        } => {
            let bounds = lower_bound.zip(*upper_bound);
            view.mentions.iter().enumerate().find_map(|(i, m)| {
                let mv = m.value.as_ref()?.value;
                let sp = Span::new(m.start, m.end);
                if i == value_mention
                    || !m.is_matchable()
                    || reserved.iter().any(|r| r.overlaps(&sp))
                    || match_value(*value, bounds, mv, cfg.mape_tolerance) == ValueMatch::None
                {
                    return None;
                }
                let with_unit = unit.as_ref().and_then(|_| {
                    view.any_units.iter().find(|u| {
                        view.unit_adjacent(sp, **u) && !reserved.iter().any(|r| r.overlaps(u))
                    })
                });
                Some(match with_unit {
                    Some(u) => Span::new(sp.start, u.end),
                    None => sp,
                })
            })
        }
    }
}

struct ValueHit {
    mention: usize,
    unit: Option<Span>,
    exact: bool,
    converted: bool,
}

/// Resolve the unit of one matched mention, following the adjacency rules.
/// `Ok(None)` means no unit occurrence; `Err` means an undecidable one.
fn resolve_unit(
    view: &SentenceView,
    mi: usize,
    matched: &[(usize, ValueMatch)],
    cands: &[UnitCandidate],
) -> Result<Option<(Span, usize)>, AlignRejection> {
    let m = &view.mentions[mi];
    let vspan = Span::new(m.start, m.end);
    let mut occs: Vec<(Span, usize)> = Vec::new();
    let mut surfaces: Vec<(&str, usize)> = matched
        .iter()
        .flat_map(|&(ci, _)| cands[ci].surfaces.iter().map(move |s| (s.as_str(), ci)))
        .collect();
    surfaces.sort_by_key(|(s, _)| core::cmp::Reverse(s.len()));
    for (s, ci) in surfaces {
        for sp in view.find_surface(s) {
            if sp.overlaps(&vspan)
                || view.blacklisted(sp)
                || occs.iter().any(|(o, _)| o.overlaps(&sp))
            {
                continue;
            }
            occs.push((sp, ci));
        }
    }
    if occs.is_empty() {
        return Ok(None);
    }
    let adjacent: Vec<(Span, usize)> = occs
        .iter()
        .copied()
        .filter(|(u, _)| view.unit_adjacent(vspan, *u))
        .collect();
    if occs.len() == 1 {
        let (u, ci) = occs[0];
        if !adjacent.is_empty() {
            return Ok(Some((u, ci)));
        }
        // a lone distant unit: no other value may sit next to it, and the
        // target value may not carry another unit
        let other_value = view
            .mentions
            .iter()
            .enumerate()
            .any(|(j, o)| j != mi && view.unit_adjacent(Span::new(o.start, o.end), u));
        let other_unit = view
            .any_units
            .iter()
            .any(|a| !a.overlaps(&u) && view.unit_adjacent(vspan, *a));
        return if other_value || other_unit {
            Err(AlignRejection::AmbiguousUnit)
        } else {
            Ok(Some((u, ci)))
        };
    }
    if adjacent.len() == 1 {
        Ok(Some(adjacent[0]))
    } else {
        Err(AlignRejection::AmbiguousUnit)
    }
}

/// Succeeding noun taken as the unit of a count ("2,564-seat", "850
/// inhabitants").
fn count_unit(view: &SentenceView, m: &NumberMention) -> Option<Span> {
    let n = view.ann.len();
    let mut i = m.tok_end;
    if i < n && view.ann.token_text(view.text, i) == "-" && view.ann.tokens[i].0 == m.end {
        let j = i + 1;
        if j < n
            && view.ann.tokens[j].0 == view.ann.tokens[i].1
            && view
                .ann
                .token_text(view.text, j)
                .chars()
                .all(char::is_alphabetic)
        {
            return Some(view.span_of(j, j + 1));
        }
        return None;
    }
    if i >= n {
        return None;
    }
    if let Some(&(s, e)) = view.ann.noun_chunks.iter().find(|c| c.0 == i) {
        return Some(view.span_of(s, e));
    }
    let w = view.ann.token_text(view.text, i);
    if matches!(view.ann.pos[i], Pos::Noun | Pos::Propn) && w.chars().all(char::is_alphabetic) {
        i += 1;
        return Some(view.span_of(i - 1, i));
    }
    None
}

fn find_value(
    view: &SentenceView,
    fact: &QuantFact,
    cands: &[UnitCandidate],
    cfg: &AlignerConfig,
) -> Result<ValueHit, AlignRejection> {
    let count = fact.unit.is_count();
    let mut hits: Vec<ValueHit> = Vec::new();
    let mut failures: Vec<AlignRejection> = Vec::new();
    for (mi, m) in view.mentions.iter().enumerate() {
        let Some(v) = m
            .value
            .as_ref()
            .filter(|_| m.is_matchable())
            .map(|d| d.value)
        else {
            continue;
        };
        if count {
            let vm = match_value(fact.value, fact.bounds(), v, cfg.mape_tolerance);
            if vm != ValueMatch::None {
                hits.push(ValueHit {
                    mention: mi,
                    unit: count_unit(view, m),
                    exact: vm == ValueMatch::Exact,
                    converted: false,
                });
            }
            continue;
        }
        let matched: Vec<(usize, ValueMatch)> = cands
            .iter()
            .enumerate()
            .map(|(ci, c)| (ci, match_value(c.value, c.bounds, v, cfg.mape_tolerance)))
            .filter(|(_, vm)| *vm != ValueMatch::None)
            .collect();
        if matched.is_empty() {
            continue;
        }
        match resolve_unit(view, mi, &matched, cands) {
            Ok(Some((u, ci))) => {
                let vm = matched
                    .iter()
                    .find(|(c, _)| *c == ci)
                    .map_or(ValueMatch::None, |x| x.1);
                hits.push(ValueHit {
                    mention: mi,
                    unit: Some(u),
                    exact: vm == ValueMatch::Exact,
                    converted: cands[ci].converted,
                });
            }
            Ok(None) => hits.push(ValueHit {
                mention: mi,
                unit: None,
                exact: matched.iter().any(|x| x.1 == ValueMatch::Exact),
                converted: false,
            }),
            Err(e) => {
                failures.push(e);
                hits.push(ValueHit {
                    mention: mi,
                    unit: None,
                    exact: false,
                    converted: false,
                });
            }
        }
    }
    let hit = match hits.len() {
        0 => return Err(AlignRejection::NoValue),
        1 => hits.pop().unwrap_or_else(|| unreachable!()),
        _ => {
            // several matches: take the single exact one that is not a bare count
            let mut exact: Vec<ValueHit> = hits
                .into_iter()
                .filter(|h| h.exact && (count || h.unit.is_some()))
                .collect();
            if exact.len() != 1 || count {
                return Err(AlignRejection::AmbiguousValue);
            }
            exact.pop().unwrap_or_else(|| unreachable!())
        }
    };
    if !count && hit.unit.is_none() {
        return Err(failures.first().copied().unwrap_or(AlignRejection::NoUnit));
    }
    Ok(hit)
}

fn modifier_before(view: &SentenceView, value: Span) -> Option<Span> {
    let head = &view.text[..value.start];
    let trimmed = head.trim_end();
    if head.len() - trimmed.len() > 1 {
        return None;
    }
    let lower = trimmed.to_lowercase();
    let mut best: Option<Span> = None;
    for m in MODIFIERS {
        if lower.ends_with(m) {
            let start = trimmed.len() - m.len();
            let boundary = trimmed[..start]
                .chars()
                .next_back()
                .is_none_or(|c| !c.is_alphanumeric());
            if boundary && best.is_none_or(|b| start < b.start) && trimmed.is_char_boundary(start) {
                best = Some(Span::new(start, trimmed.len()));
            }
        }
    }
    best
}

fn is_frequent(v: f64, cfg: &AlignerConfig) -> bool {
    libm::trunc(v) == v && v >= cfg.frequent_value_min as f64 && v <= cfg.frequent_value_max as f64
}

/// Whether an accepted example also satisfies strict mode.
pub fn passes_strict(ex: &MeasurementExample, cfg: &AlignerConfig) -> bool {
    if ex.has_weak_reason() {
        return false;
    }
    let Some(cutoff) = cfg.strict_small_rounded_cutoff else {
        return true;
    };
    let v = mention_value(ex).abs();
    let rounded = libm::trunc(v) == v && v % 10.0 == 0.0;
    !(rounded && v < cutoff && ex.qualifiers.is_empty())
}

fn mention_value(ex: &MeasurementExample) -> f64 {
    let text = ex.value.text(&ex.sentence);
    crate::num::parse_number(text).unwrap_or(ex.fact.value)
}

/// Everything alignment needs besides the fact and sentence.
pub struct Aligner<'a> {
    pub registry: &'a UnitRegistry,
    pub provider: &'a dyn LingProvider,
    pub lexicon: Lexicon,
    pub splitter: SentenceSplitter,
    pub config: AlignerConfig,
}

/// Draft fields before provenance and context are attached.
struct Draft {
    entity: Span,
    property: Option<Span>,
    implicit: Option<String>,
    value: Span,
    unit: Option<Span>,
    modifiers: Vec<Span>,
    qualifiers: Vec<(QualifierKind, Span)>,
    reasons: BTreeSet<AcceptanceReason>,
}

impl<'a> Aligner<'a> {
    pub fn new(
        registry: &'a UnitRegistry,
        provider: &'a dyn LingProvider,
        config: AlignerConfig,
    ) -> Self {
        Aligner {
            registry,
            provider,
            lexicon: Lexicon::builtin(),
            splitter: SentenceSplitter::default(),
            config,
        }
    }

    pub fn view<'s>(&self, sentence: &'s str) -> SentenceView<'s> {
        SentenceView::new(sentence, self.provider, self.registry)
    }

    fn draft(&self, view: &SentenceView, fact: &QuantFact) -> Result<Draft, AlignRejection> {
        let cfg = &self.config;
        let cands = unit_candidates(fact, cfg, self.registry);
        let hit = find_value(view, fact, &cands, cfg)?;
        let m = &view.mentions[hit.mention];
        let value = Span::new(m.start, m.end);
        let mut reasons = BTreeSet::new();
        if !hit.exact {
            reasons.insert(AcceptanceReason::ApproximateValue);
        }
        if hit.converted {
            reasons.insert(AcceptanceReason::ConvertedUnit);
        }
        let modifier = modifier_before(view, value);
        let mut reserved: Vec<Span> = alloc::vec![value];
        reserved.extend(hit.unit);
        reserved.extend(modifier);
        let anchor = m.tok_start;

        // property
        let plabels: Vec<&str> = fact.property.all_labels().collect();
        let pwins: Vec<(usize, usize)> = windows_for(view, &self.lexicon, &plabels, &reserved)
            .into_iter()
            .filter_map(|w| expand_property(view, w, &reserved))
            .collect();
        let fact_dim = fact
            .property
            .label
            .split_whitespace()
            .last()
            .and_then(dimension_of);
        let pwins: Vec<(usize, usize)> = pwins
            .into_iter()
            .filter(|&(_, e)| {
                let head = dimension_of(&view.ann.lemma[e - 1])
                    .or_else(|| dimension_of(&view.lower(e - 1)));
                !matches!((fact_dim, head), (Some(a), Some(b)) if a != b)
            })
            .collect();
        let property = if pwins.is_empty() {
            None
        } else {
            let (w, how) =
                choose_span(view, &pwins, &[anchor]).ok_or(AlignRejection::PropertyTie)?;
            match how {
                Choice::Subclause => reasons.insert(AcceptanceReason::SubclauseTiebreak),
                Choice::ShortestPath => reasons.insert(AcceptanceReason::ShortestPathTiebreak),
                Choice::Single => false,
            };
            Some(w)
        };
        if let Some(d) = fact_dim {
            // a different dimension word next to the quantity
            let q_end = hit.unit.map_or(m.tok_end, |u| view.tok_range(u).1);
            let lo = m.tok_start.saturating_sub(3);
            let hi = (q_end + 3).min(view.ann.len());
            let conflict = (lo..hi).any(|i| {
                let inside_prop = property.is_some_and(|(a, b)| a <= i && i < b);
                let dim = dimension_of(&view.ann.lemma[i]).or_else(|| dimension_of(&view.lower(i)));
                !inside_prop && dim.is_some_and(|x| x != d)
            });
            if conflict {
                return Err(AlignRejection::DimensionConflict);
            }
        }
        let property_span = property.map(|(a, b)| view.span_of(a, b));
        reserved.extend(property_span);

        // entity
        let elabels: Vec<&str> = fact.entity.all_labels().collect();
        let ewins: Vec<(usize, usize)> = windows_for(view, &self.lexicon, &elabels, &reserved)
            .into_iter()
            .map(|w| expand_entity(view, w, &reserved))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let entity = if ewins.is_empty() {
            let first = (!view.ann.is_empty()).then(|| view.lower(0));
            match first {
                Some(w)
                    if PRONOUNS.contains(&w.as_str())
                        && !reserved.iter().any(|r| r.overlaps(&view.span_of(0, 1))) =>
                {
                    reasons.insert(AcceptanceReason::CoreferenceEntity);
                    view.span_of(0, 1)
                }
                _ => return Err(AlignRejection::NoEntity),
            }
        } else {
            let mut anchors = alloc::vec![anchor];
            anchors.extend(property.map(|p| p.0));
            let (w, how) = choose_span(view, &ewins, &anchors).ok_or(AlignRejection::EntityTie)?;
            match how {
                Choice::Subclause => reasons.insert(AcceptanceReason::SubclauseTiebreak),
                Choice::ShortestPath => reasons.insert(AcceptanceReason::ShortestPathTiebreak),
                Choice::Single => false,
            };
            view.span_of(w.0, w.1)
        };
        reserved.push(entity);

        // qualifiers
        let mut qualifiers = Vec::new();
        for q in &fact.qualifiers {
            if let Some(sp) = match_qualifier(view, &self.lexicon, q, hit.mention, &reserved, cfg) {
                reserved.push(sp);
                qualifiers.push((q.kind, sp));
            }
        }
        qualifiers.sort_by_key(|(k, s)| (*s, *k));

        // acceptance
        let v = m.value.as_ref().map_or(fact.value, |d| d.value);
        let implicit = if property_span.is_none() {
            if !hit.exact {
                return Err(AlignRejection::ImplicitNotExact);
            }
            if is_frequent(v.abs(), cfg) {
                return Err(AlignRejection::FrequentValue);
            }
            reasons.insert(AcceptanceReason::ImplicitProperty);
            Some(fact.property.label.clone())
        } else {
            None
        };
        if v.abs() < cfg.small_value_cutoff && qualifiers.is_empty() {
            return Err(AlignRejection::SmallValueWithoutQualifier);
        }
        Ok(Draft {
            entity,
            property: property_span,
            implicit,
            value,
            unit: hit.unit,
            modifiers: modifier.into_iter().collect(),
            qualifiers,
            reasons,
        })
    }

    /// Align one fact with one sentence.
    pub fn align_sentence(
        &self,
        view: &SentenceView,
        fact: &QuantFact,
        page: (&str, Language, usize),
    ) -> Result<MeasurementExample, AlignRejection> {
        let d = self.draft(view, fact)?;
        let ex = MeasurementExample {
            sentence: view.text.to_string(),
            page_id: page.0.to_string(),
            language: page.1,
            sentence_index: page.2,
            entity: d.entity,
            property: d.property,
            implicit_property_label: d.implicit,
            value: d.value,
            unit: d.unit,
            modifiers: d.modifiers,
            qualifiers: d.qualifiers,
            reasons: d.reasons,
            fact: fact.clone(),
            context_before: Vec::new(),
            context_after: Vec::new(),
        };
        if self.config.strict {
            if ex.has_weak_reason() {
                return Err(AlignRejection::WeakReason);
            }
            if !passes_strict(&ex, &self.config) {
                return Err(AlignRejection::SmallRoundedValue);
            }
        }
        Ok(ex)
    }

    /// Sentences of a page after markup stripping and convert expansion.
    /// Convert calls are shown in their combined form, as on the rendered
    /// page.
    pub fn page_sentences(&self, page: &PageSource) -> Vec<String> {
        let weights = RenderingWeights {
            input_only: 0.0,
            output_only: 0.0,
            combined: 1.0,
        };
        let (rendered, _) = render_page(page, self.registry, &weights, 0);
        let mut protected = rendered.spans.clone();
        protected.extend_from_slice(&rendered.failed);
        self.splitter
            .split(&rendered.text, &protected)
            .into_iter()
            .map(|(a, b)| rendered.text[a..b].to_string())
            .collect()
    }

    /// Align all facts of a page and resolve conflicts per sentence.
    pub fn align_page(&self, page: &PageSource, facts: &[QuantFact]) -> PageAlignment {
        let sentences = self.page_sentences(page);
        let mut counts = AlignCounts {
            sentences: sentences.len(),
            facts: facts.len(),
            ..AlignCounts::default()
        };
        let mut by_sentence: BTreeMap<usize, Vec<MeasurementExample>> = BTreeMap::new();
        for (si, s) in sentences.iter().enumerate() {
            let view = self.view(s);
            for fact in facts {
                match self.align_sentence(&view, fact, (&page.page_id, page.language, si)) {
                    Ok(mut ex) => {
                        ex.context_before = si
                            .checked_sub(1)
                            .map(|p| sentences[p].clone())
                            .into_iter()
                            .collect();
                        ex.context_after = sentences.get(si + 1).cloned().into_iter().collect();
                        counts.candidates += 1;
                        by_sentence.entry(si).or_default().push(ex);
                    }
                    Err(AlignRejection::NoValue) => counts.no_value += 1,
                    Err(r) => {
                        counts.candidates += 1;
                        *counts.rejected.entry(r).or_insert(0) += 1;
                    }
                }
            }
        }
        let mut examples = Vec::new();
        for (_, group) in by_sentence {
            let n = group.len();
            let kept = resolve_conflicts(group);
            counts.conflicts_dropped += n - kept.len();
            examples.extend(kept);
        }
        counts.accepted = examples.len();
        PageAlignment { examples, counts }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignCounts {
    pub facts: usize,
    pub sentences: usize,
    /// (fact, sentence) pairs with no matching number at all.
    pub no_value: usize,
    /// Pairs with a matching number.
    pub candidates: usize,
    pub rejected: BTreeMap<AlignRejection, usize>,
    pub conflicts_dropped: usize,
    pub accepted: usize,
}

impl AlignCounts {
    pub fn add(&mut self, o: &AlignCounts) {
        self.facts += o.facts;
        self.sentences += o.sentences;
        self.no_value += o.no_value;
        self.candidates += o.candidates;
        for (k, v) in &o.rejected {
            *self.rejected.entry(*k).or_insert(0) += v;
        }
        self.conflicts_dropped += o.conflicts_dropped;
        self.accepted += o.accepted;
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PageAlignment {
    pub examples: Vec<MeasurementExample>,
    pub counts: AlignCounts,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Conflict {
    /// Drop the second example of the pair.
    DropSecond,
    DropFirst,
    DropBoth,
}

/// The pairwise rules for two examples of one sentence.
pub fn conflict(a: &MeasurementExample, b: &MeasurementExample) -> Option<Conflict> {
    if a.value != b.value {
        return None;
    }
    let ka = a.annotation_key();
    let kb = b.annotation_key();
    let same_value = a.fact.value == b.fact.value;
    if ka == kb && same_value {
        return Some(Conflict::DropSecond);
    }
    let same_epu = ka.same_entity_property_unit(&kb);
    if same_epu && same_value {
        if ka.qualifiers.is_subset(&kb.qualifiers) && ka.qualifiers != kb.qualifiers {
            return Some(Conflict::DropFirst);
        }
        if kb.qualifiers.is_subset(&ka.qualifiers) && ka.qualifiers != kb.qualifiers {
            return Some(Conflict::DropSecond);
        }
    }
    if !ka.qualifiers.is_empty() && !kb.qualifiers.is_empty() {
        let contradict = ka
            .qualifiers
            .iter()
            .any(|(k, s)| kb.qualifiers.iter().any(|(k2, s2)| k == k2 && s != s2));
        if contradict {
            return Some(Conflict::DropBoth);
        }
    }
    if !same_epu {
        return Some(Conflict::DropBoth);
    }
    if ka.qualifiers == kb.qualifiers && !same_value {
        return Some(Conflict::DropBoth);
    }
    None
}

/// Apply the pairwise rules until nothing changes. Each round evaluates
/// every pair of the current set, so the result does not depend on input
/// order; output is sorted canonically.
pub fn resolve_conflicts(mut examples: Vec<MeasurementExample>) -> Vec<MeasurementExample> {
    examples.sort_by_key(|a| a.order_key());
    loop {
        let n = examples.len();
        let mut drop = alloc::vec![false; n];
        for i in 0..n {
            for j in i + 1..n {
                match conflict(&examples[i], &examples[j]) {
                    Some(Conflict::DropSecond) => drop[j] = true,
                    Some(Conflict::DropFirst) => drop[i] = true,
                    Some(Conflict::DropBoth) => {
                        drop[i] = true;
                        drop[j] = true;
                    }
                    None => {}
                }
            }
        }
        if !drop.iter().any(|d| *d) {
            return examples;
        }
        let mut k = 0;
        examples.retain(|_| {
            k += 1;
            !drop[k - 1]
        });
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Large,
    LargeStrict,
    Small,
    SmallStrict,
    SmallContext,
    SmallContextStrict,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Large,
        Variant::LargeStrict,
        Variant::Small,
        Variant::SmallStrict,
        Variant::SmallContext,
        Variant::SmallContextStrict,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Large => "large",
            Variant::LargeStrict => "large_strict",
            Variant::Small => "small",
            Variant::SmallStrict => "small_strict",
            Variant::SmallContext => "small_context",
            Variant::SmallContextStrict => "small_context_strict",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == s.replace('-', "_"))
    }

    pub fn is_strict(self) -> bool {
        matches!(
            self,
            Variant::LargeStrict | Variant::SmallStrict | Variant::SmallContextStrict
        )
    }

    pub fn has_context(self) -> bool {
        matches!(self, Variant::SmallContext | Variant::SmallContextStrict)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantReport {
    pub input: usize,
    pub exact_duplicates: usize,
    pub near_duplicates: usize,
    pub strict_removed_large: usize,
    pub strict_removed_small: usize,
}

/// Build all dataset variants from the accepted examples of every page.
pub fn build_variants(
    examples: &[MeasurementExample],
    cfg: &AlignerConfig,
) -> (BTreeMap<Variant, Vec<MeasurementExample>>, VariantReport) {
    let large_idx = deduplicate_exact(examples);
    let large: Vec<MeasurementExample> = large_idx.iter().map(|&i| examples[i].clone()).collect();
    let forms: Vec<_> = large.iter().map(normalize_item).collect();
    let small: Vec<MeasurementExample> = near_duplicate_survivors(&forms)
        .into_iter()
        .map(|i| large[i].clone())
        .collect();
    let strict = |v: &[MeasurementExample]| -> Vec<MeasurementExample> {
        v.iter()
            .filter(|e| passes_strict(e, cfg))
            .cloned()
            .collect()
    };
    let strip = |v: Vec<MeasurementExample>| -> Vec<MeasurementExample> {
        v.into_iter()
            .map(|mut e| {
                e.context_before.clear();
                e.context_after.clear();
                e
            })
            .collect()
    };
    let large_strict = strict(&large);
    let small_strict = strict(&small);
    let report = VariantReport {
        input: examples.len(),
        exact_duplicates: examples.len() - large.len(),
        near_duplicates: large.len() - small.len(),
        strict_removed_large: large.len() - large_strict.len(),
        strict_removed_small: small.len() - small_strict.len(),
    };
    let mut out = BTreeMap::new();
    out.insert(Variant::SmallContext, small.clone());
    out.insert(Variant::SmallContextStrict, small_strict.clone());
    out.insert(Variant::Large, strip(large));
    out.insert(Variant::LargeStrict, strip(large_strict));
    out.insert(Variant::Small, strip(small));
    out.insert(Variant::SmallStrict, strip(small_strict));
    (out, report)
}
