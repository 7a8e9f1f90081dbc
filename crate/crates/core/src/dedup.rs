//! Exact and near-duplicate removal over normalized token sequences, and
//! balancing by token frequency and per-unit caps.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::quantities::AnnotatedSentence;
use crate::rng::stage_rng;
use crate::units::UnitRegistry;

/// Stand-in for every quantity span in a normalized form.
pub const QUANTITY_TOKEN: &str = "⟪Q⟫";

const NEUTRAL_TOKENS: &str = include_str!("../data/neutral_tokens.txt");

const DIRECTIONS: &[&str] = &[
    "north",
    "south",
    "east",
    "west",
    "northeast",
    "northwest",
    "southeast",
    "southwest",
    "north-east",
    "north-west",
    "south-east",
    "south-west",
    "northern",
    "southern",
    "eastern",
    "western",
    "northeastern",
    "northwestern",
    "southeastern",
    "southwestern",
    "northwards",
    "southwards",
    "eastwards",
    "westwards",
    "northward",
    "southward",
    "eastward",
    "westward",
];

const MONTHS: &[&str] = &[
    "january",
    "february",
    "march",
    "april",
    "may",
    "june",
    "july",
    "august",
    "september",
    "october",
    "november",
    "december",
];

const SETTLEMENTS: &[&str] = &[
    "city",
    "cities",
    "town",
    "towns",
    "village",
    "villages",
    "municipality",
    "municipalities",
    "commune",
    "communes",
    "hamlet",
    "hamlets",
    "borough",
    "boroughs",
    "township",
    "townships",
    "settlement",
    "settlements",
    "suburb",
    "suburbs",
    "parish",
    "parishes",
    "locality",
    "localities",
    "community",
    "communities",
];

/// Anything that can be deduplicated: a sentence plus its quantity spans
/// (byte ranges).
pub trait DedupItem {
    fn sentence(&self) -> &str;
    fn quantity_spans(&self) -> Vec<(usize, usize)>;

    /// Identity for exact-duplicate removal.
    fn exact_key(&self) -> String {
        let mut key = self.sentence().to_string();
        for (s, e) in self.quantity_spans() {
            key.push_str(&alloc::format!("\u{1f}{s}:{e}"));
        }
        key
    }
}

impl DedupItem for AnnotatedSentence {
    fn sentence(&self) -> &str {
        &self.sentence
    }

    fn quantity_spans(&self) -> Vec<(usize, usize)> {
        self.spans.iter().map(|s| (s.start, s.end)).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NormalizedForm {
    pub tokens: Vec<String>,
}

impl NormalizedForm {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn overlaps(spans: &[(usize, usize)], a: usize, b: usize) -> bool {
    spans.iter().any(|&(s, e)| s < b && a < e)
}

fn looks_like_reference(inner: &str) -> bool {
    let lower = inner.trim().to_lowercase();
    if lower.is_empty() {
        return false;
    }
    if lower
        .chars()
        .all(|c| c.is_ascii_digit() || matches!(c, ',' | '-' | '–' | ' '))
    {
        return true;
    }
    let body = ["cf. ", "see ", "as shown in "]
        .iter()
        .find_map(|p| lower.strip_prefix(p))
        .unwrap_or(&lower);
    if ["fig.", "fig ", "figure", "figs", "table", "tab."]
        .iter()
        .any(|p| body.starts_with(p))
    {
        return true;
    }
    // author-year: "... 1999" or "... 1999a"
    let tail = body.trim_end_matches(|c: char| c.is_ascii_lowercase() && c != ' ');
    let year_tail = tail.len() >= 4 && tail[tail.len() - 4..].chars().all(|c| c.is_ascii_digit());
    year_tail && (body.contains(',') || body.contains("et al"))
}

/// The sentence with sentence-final reference markers
/// ("[12]", "(Fig. 2)", "(Smith et al., 2001)", a trailing "2-3") are cut.
/// A final period before a stripped marker is kept.
pub fn strip_trailing_references(sentence: &str, spans: &[(usize, usize)]) -> String {
    let mut text = sentence.trim_end().to_string();
    loop {
        let (body_end, period) = match text.strip_suffix('.') {
            Some(b) => (b.trim_end().len(), true),
            None => (text.len(), false),
        };
        let body = &text[..body_end];
        let mut cut = None;
        if let Some(open_c) = match body.chars().last() {
            Some(']') => Some('['),
            Some(')') => Some('('),
            _ => None,
        } {
            if let Some(open) = body.rfind(open_c) {
                let inner = &body[open + 1..body.len() - 1];
                let is_ref = open_c == '[' || looks_like_reference(inner);
                if is_ref && open > 0 && !overlaps(spans, open, body.len()) {
                    cut = Some(open);
                }
            }
        } else if let Some(sp) = body.rfind(' ') {
            let tail = &body[sp + 1..];
            let numeric = !tail.is_empty()
                && tail
                    .chars()
                    .all(|c| c.is_ascii_digit() || matches!(c, '-' | '–' | ','));
            if numeric && !overlaps(spans, sp, body.len()) {
                if !period && body[..sp].ends_with('.') {
                    // a superscript-style marker after the final period: "... km. 2-3"
                    text.truncate(sp);
                    continue;
                }
                // before it: "... km 2-3." (a lone number may be content)
                if period
                    && tail.contains(['-', '–'])
                    && tail.starts_with(|c: char| c.is_ascii_digit())
                {
                    let rest = alloc::format!("{}.", body[..sp].trim_end());
                    if rest != text {
                        text = rest;
                        continue;
                    }
                }
            }
        }
        let Some(open) = cut else { break };
        let mut rest = text[..open].trim_end().to_string();
        if period && !rest.ends_with('.') {
            rest.push('.');
        }
        if rest.is_empty() {
            break;
        }
        text = rest;
    }
    text
}

fn map_core(core: &str) -> Option<&'static str> {
    if DIRECTIONS.contains(&core) {
        return Some("north");
    }
    if SETTLEMENTS.contains(&core) {
        return Some("region");
    }
    if MONTHS.contains(&core) {
        return Some("january");
    }
    if core.len() == 4 && core.bytes().all(|b| b.is_ascii_digit()) {
        let y: u32 = core.parse().ok()?;
        if (1000..=2100).contains(&y) {
            return Some("2023");
        }
    }
    None
}

fn edge_punct(c: char) -> bool {
    !c.is_alphanumeric() && c != '⟪' && c != '⟫'
}

/// Lowercase, replace spans by [`QUANTITY_TOKEN`], drop trailing
/// references, split on whitespace and canonicalize directions, years,
/// months and settlement words.
pub fn normalize(sentence: &str, spans: &[(usize, usize)]) -> NormalizedForm {
    let kept = strip_trailing_references(sentence, spans);
    let mut text = String::with_capacity(kept.len());
    let mut last = 0;
    let mut sorted: Vec<(usize, usize)> = spans
        .iter()
        .copied()
        .filter(|&(_, e)| e <= kept.len())
        .collect();
    sorted.sort_unstable();
    for (s, e) in sorted {
        if s < last {
            continue;
        }
        text.push_str(&kept[last..s].to_lowercase());
        text.push_str(QUANTITY_TOKEN);
        last = e;
    }
    text.push_str(&kept[last..].to_lowercase());
    let tokens = text
        .split_whitespace()
        .map(|tok| {
            let core = tok.trim_matches(edge_punct);
            match map_core(core) {
                Some(rep) if !core.is_empty() => {
                    let pre = tok.find(core).unwrap_or(0);
                    alloc::format!("{}{}{}", &tok[..pre], rep, &tok[pre + core.len()..])
                }
                _ => tok.to_string(),
            }
        })
        .collect();
    NormalizedForm { tokens }
}

pub fn normalize_item<T: DedupItem + ?Sized>(item: &T) -> NormalizedForm {
    normalize(item.sentence(), &item.quantity_spans())
}

/// Token-level Levenshtein distance.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = alloc::vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Whether the distance is at most `k`, computing only the diagonal band.
pub fn edit_distance_within<T: PartialEq>(a: &[T], b: &[T], k: usize) -> bool {
    if a.len().abs_diff(b.len()) > k {
        return false;
    }
    let inf = k + 1;
    let m = b.len();
    let mut prev: Vec<usize> = (0..=m).map(|j| j.min(inf)).collect();
    let mut cur = alloc::vec![inf; m + 1];
    for i in 1..=a.len() {
        let lo = i.saturating_sub(k).max(1);
        let hi = (i + k).min(m);
        cur.fill(inf);
        cur[0] = i.min(inf);
        let mut row_min = cur[0];
        for j in lo..=hi {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            let v = sub.min(prev[j] + 1).min(cur[j - 1] + 1).min(inf);
            cur[j] = v;
            row_min = row_min.min(v);
        }
        if row_min > k {
            return false;
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[m] <= k
}

/// Largest distance at which `b` is still a near duplicate of the kept
/// form of length `kept_len` (35% of the kept length, inclusive).
pub fn near_duplicate_threshold(kept_len: usize) -> usize {
    kept_len * 35 / 100
}

/// `b` duplicates the kept example `a` when their distance is at most 35%
/// of `a`'s token count. The threshold depends on `a` only, so the relation
/// is not symmetric for forms of different lengths.
pub fn is_near_duplicate(a: &NormalizedForm, b: &NormalizedForm) -> bool {
    edit_distance(&a.tokens, &b.tokens) * 100 <= 35 * a.len()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupReport {
    pub input: usize,
    pub exact_duplicates: usize,
    pub near_duplicates: usize,
    pub output: usize,
}

/// Survivors of a straightforward quadratic pass over `forms`, in order.
/// Used as a reference for [`deduplicate`].
pub fn near_duplicate_survivors_bruteforce(forms: &[NormalizedForm]) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for (i, f) in forms.iter().enumerate() {
        if !kept.iter().any(|&k| is_near_duplicate(&forms[k], f)) {
            kept.push(i);
        }
    }
    kept
}

struct Interned {
    ids: Vec<u32>,
    sorted: Vec<u32>,
}

fn multiset_common(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Survivors of the near-duplicate pass over `forms`, identical to
/// [`near_duplicate_survivors_bruteforce`]. Kept forms are bucketed by
/// length; a candidate is only compared against lengths that can be
/// within threshold and passes a token-multiset bound before the banded
/// distance.
pub fn near_duplicate_survivors(forms: &[NormalizedForm]) -> Vec<usize> {
    let mut vocab: BTreeMap<&str, u32> = BTreeMap::new();
    let interned: Vec<Interned> = forms
        .iter()
        .map(|f| {
            let ids: Vec<u32> = f
                .tokens
                .iter()
                .map(|t| {
                    let next = vocab.len() as u32;
                    *vocab.entry(t.as_str()).or_insert(next)
                })
                .collect();
            let mut sorted = ids.clone();
            sorted.sort_unstable();
            Interned { ids, sorted }
        })
        .collect();
    let mut by_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut kept = Vec::new();
    for (i, cand) in interned.iter().enumerate() {
        let m = cand.ids.len();
        // |n - m| <= 0.35 n
        let lo = (100 * m).div_ceil(135);
        let hi = 100 * m / 65;
        let dup = by_len.range(lo..=hi).any(|(&n, idxs)| {
            let k = near_duplicate_threshold(n);
            idxs.iter().any(|&j| {
                let other = &interned[j];
                let common = multiset_common(&other.sorted, &cand.sorted);
                n.max(m) - common <= k && edit_distance_within(&other.ids, &cand.ids, k)
            })
        });
        if !dup {
            by_len.entry(m).or_default().push(i);
            kept.push(i);
        }
    }
    kept
}

/// Drop exact duplicates (same [`DedupItem::exact_key`]), then near duplicates in
/// input order. Returns the kept indices.
pub fn deduplicate<T: DedupItem>(items: &[T]) -> (Vec<usize>, DedupReport) {
    let unique = deduplicate_exact(items);
    let forms: Vec<NormalizedForm> = unique.iter().map(|&i| normalize_item(&items[i])).collect();
    let kept: Vec<usize> = near_duplicate_survivors(&forms)
        .into_iter()
        .map(|k| unique[k])
        .collect();
    let report = DedupReport {
        input: items.len(),
        exact_duplicates: items.len() - unique.len(),
        near_duplicates: unique.len() - kept.len(),
        output: kept.len(),
    };
    (kept, report)
}

/// Only exact duplicates.
pub fn deduplicate_exact<T: DedupItem>(items: &[T]) -> Vec<usize> {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    (0..items.len())
        .filter(|&i| seen.insert(items[i].exact_key()))
        .collect()
}

/// `1 - t_thr / (t_i + t_thr)`.
pub fn removal_probability(token_count: u64, t_thr: u64) -> f64 {
    if token_count == 0 {
        return 0.0;
    }
    1.0 - t_thr as f64 / (token_count as f64 + t_thr as f64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BalanceConfig {
    /// Cap per trailing unit; `None` means no cap.
    pub u_thr: Option<u64>,
    /// Token-frequency scale; `None` disables token balancing.
    pub t_thr: Option<u64>,
    /// How many of the most frequent tokens drive removal.
    pub frequent_tokens: usize,
    /// Added to the built-in neutral token list.
    pub extra_neutral_tokens: Vec<String>,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        BalanceConfig::small()
    }
}

impl BalanceConfig {
    pub fn small() -> Self {
        BalanceConfig {
            u_thr: Some(1200),
            t_thr: Some(1000),
            frequent_tokens: 100,
            extra_neutral_tokens: Vec::new(),
        }
    }

    pub fn tiny() -> Self {
        BalanceConfig {
            u_thr: Some(300),
            ..Self::small()
        }
    }

    pub fn unlimited() -> Self {
        BalanceConfig {
            u_thr: None,
            t_thr: None,
            ..Self::small()
        }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if self.u_thr == Some(0) || self.t_thr == Some(0) {
            return Err("u_thr and t_thr must be at least 1");
        }
        Ok(())
    }

    pub fn neutral_tokens(&self) -> BTreeSet<String> {
        let mut set: BTreeSet<String> = NEUTRAL_TOKENS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        set.extend(self.extra_neutral_tokens.iter().map(|t| t.to_lowercase()));
        set
    }
}

/// Lowercased content tokens outside quantity spans, with edge
/// punctuation trimmed and neutral or non-alphabetic tokens removed.
pub fn balance_tokens(
    sentence: &str,
    spans: &[(usize, usize)],
    neutral: &BTreeSet<String>,
) -> Vec<String> {
    let mut out = Vec::new();
    let mut last = 0;
    let mut pieces = Vec::new();
    let mut sorted = spans.to_vec();
    sorted.sort_unstable();
    for (s, e) in sorted {
        if s >= last {
            pieces.push(&sentence[last..s]);
            last = e;
        }
    }
    pieces.push(&sentence[last..]);
    for piece in pieces {
        for tok in piece.split_whitespace() {
            let t = tok
                .trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase();
            if t.chars().any(char::is_alphabetic) && !neutral.contains(&t) {
                out.push(t);
            }
        }
    }
    out
}

/// Occurrence counts of balance tokens across the corpus.
pub fn token_counts<T: DedupItem>(
    items: &[T],
    neutral: &BTreeSet<String>,
) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for it in items {
        for t in balance_tokens(it.sentence(), &it.quantity_spans(), neutral) {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    counts
}

/// The `n` most frequent tokens with counts, ties broken alphabetically.
pub fn frequent_tokens(counts: &BTreeMap<String, u64>, n: usize) -> BTreeMap<String, u64> {
    let mut v: Vec<(&String, &u64)> = counts.iter().collect();
    v.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    v.into_iter()
        .take(n)
        .map(|(t, c)| (t.clone(), *c))
        .collect()
}

/// Unit code of the last quantity span's trailing unit.
pub fn trailing_unit_of<T: DedupItem + ?Sized>(
    item: &T,
    registry: &UnitRegistry,
) -> Option<String> {
    let (s, e) = item.quantity_spans().into_iter().max()?;
    registry
        .trailing_unit(&item.sentence()[s..e])
        .map(|(_, u)| u.code.clone())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub input: usize,
    pub token_balance: usize,
    pub unit_cap: usize,
    pub output: usize,
}

/// Probability that each item is removed by token balancing.
pub fn removal_probabilities<T: DedupItem>(items: &[T], cfg: &BalanceConfig) -> Vec<f64> {
    let Some(t_thr) = cfg.t_thr else {
        return alloc::vec![0.0; items.len()];
    };
    let neutral = cfg.neutral_tokens();
    let counts = token_counts(items, &neutral);
    let frequent = frequent_tokens(&counts, cfg.frequent_tokens);
    items
        .iter()
        .map(|it| {
            balance_tokens(it.sentence(), &it.quantity_spans(), &neutral)
                .iter()
                .filter_map(|t| frequent.get(t))
                .map(|&c| removal_probability(c, t_thr))
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Token-frequency removal followed by the per-unit cap. One uniform draw
/// per input item, in order, from the `balance` stream, so thresholds can be
/// compared under the same seed. Returns kept indices in input order.
pub fn balance<T: DedupItem>(
    items: &[T],
    cfg: &BalanceConfig,
    registry: &UnitRegistry,
    seed: u64,
) -> (Vec<usize>, BalanceReport) {
    let probs = removal_probabilities(items, cfg);
    let mut rng = stage_rng(seed, "balance", "");
    let survivors: Vec<usize> = (0..items.len())
        .filter(|&i| {
            let u: f64 = rng.random();
            u >= probs[i]
        })
        .collect();
    let mut per_unit: BTreeMap<Option<String>, u64> = BTreeMap::new();
    let kept: Vec<usize> = survivors
        .iter()
        .copied()
        .filter(|&i| {
            let unit = trailing_unit_of(&items[i], registry);
            let Some(cap) = cfg.u_thr else { return true };
            if unit.is_none() {
                return true;
            }
            let n = per_unit.entry(unit).or_insert(0);
            *n += 1;
            *n <= cap
        })
        .collect();
    let report = BalanceReport {
        input: items.len(),
        token_balance: items.len() - survivors.len(),
        unit_cap: survivors.len() - kept.len(),
        output: kept.len(),
    };
    (kept, report)
}

pub fn select<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}
