//! Word lists behind the built-in provider: closed-class words, lemma
//! exceptions, suffix rules and the name gazetteer.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::tokenize::tokenize;
use super::{NerSpan, Pos};

const BUILTIN_GAZETTEER: &str = include_str!("../../data/gazetteer.tsv");

const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "its", "their", "his", "her", "our", "my",
    "your", "every", "each", "some", "any", "no", "all", "both", "another", "either", "neither",
    "whose",
];

const ADPOSITIONS: &[&str] = &[
    "of",
    "in",
    "on",
    "at",
    "by",
    "for",
    "with",
    "from",
    "to",
    "into",
    "onto",
    "over",
    "under",
    "about",
    "above",
    "below",
    "per",
    "between",
    "through",
    "during",
    "after",
    "before",
    "than",
    "as",
    "near",
    "across",
    "along",
    "around",
    "within",
    "without",
    "since",
    "until",
    "up",
    "via",
    "among",
    "beyond",
    "behind",
    "beneath",
    "towards",
    "toward",
    "upon",
    "against",
    "throughout",
    "despite",
    "like",
    "off",
    "out",
    "down",
];

const OTHER_WORDS: &[&str] = &[
    "and",
    "or",
    "but",
    "nor",
    "so",
    "yet",
    "it",
    "they",
    "he",
    "she",
    "we",
    "i",
    "you",
    "them",
    "him",
    "us",
    "me",
    "which",
    "who",
    "whom",
    "what",
    "where",
    "when",
    "while",
    "whereas",
    "also",
    "not",
    "very",
    "only",
    "just",
    "then",
    "there",
    "here",
    "thus",
    "however",
    "if",
    "because",
    "although",
    "though",
    "whether",
    "approximately",
    "roughly",
    "nearly",
    "almost",
    "about",
    "around",
    "some",
    "over",
    "more",
    "less",
    "most",
    "least",
    "than",
    "too",
    "even",
    "still",
    "already",
    "often",
    "sometimes",
    "now",
    "once",
    "twice",
    "again",
    "ever",
    "never",
    "always",
    "itself",
    "themselves",
    "himself",
    "herself",
    "one's",
    "'s",
    "n't",
    "how",
    "why",
    "up",
    "out",
    "such",
    "much",
    "many",
    "few",
    "several",
    "each",
];

const VERBS: &[&str] = &[
    "is",
    "are",
    "was",
    "were",
    "be",
    "been",
    "being",
    "am",
    "has",
    "have",
    "had",
    "having",
    "do",
    "does",
    "did",
    "can",
    "could",
    "may",
    "might",
    "must",
    "shall",
    "should",
    "will",
    "would",
    "covers",
    "cover",
    "covered",
    "measures",
    "measure",
    "measured",
    "reaches",
    "reach",
    "reached",
    "stands",
    "stand",
    "stood",
    "weighs",
    "weigh",
    "weighed",
    "lies",
    "lie",
    "lay",
    "rises",
    "rise",
    "rose",
    "flows",
    "flow",
    "flowed",
    "runs",
    "run",
    "ran",
    "extends",
    "extend",
    "extended",
    "spans",
    "span",
    "spanned",
    "holds",
    "hold",
    "held",
    "seats",
    "seat",
    "produces",
    "produce",
    "produced",
    "contains",
    "contain",
    "contained",
    "includes",
    "include",
    "included",
    "makes",
    "make",
    "made",
    "takes",
    "take",
    "took",
    "becomes",
    "become",
    "became",
    "remains",
    "remain",
    "remained",
    "hit",
    "hits",
    "killed",
    "kills",
    "built",
    "builds",
    "build",
    "opened",
    "opens",
    "open",
    "located",
    "situated",
    "named",
    "called",
    "known",
    "recorded",
    "estimated",
    "described",
    "work",
    "works",
    "worked",
    "live",
    "lives",
    "lived",
    "reported",
    "wrote",
    "writes",
    "write",
    "grew",
    "grows",
    "grow",
    "fell",
    "falls",
    "fall",
    "increased",
    "increases",
    "decreased",
    "decreases",
    "climbed",
    "climbs",
    "carries",
    "carry",
    "carried",
    "accommodates",
    "accommodate",
    "serves",
    "serve",
    "served",
    "towering",
    "abide",
    "drains",
    "drain",
    "drained",
    "joins",
    "join",
    "joined",
    "sits",
    "sit",
    "sat",
    "ranks",
    "ranked",
    "comprises",
    "comprise",
    "comprised",
    "totals",
    "totalled",
    "totaled",
    "lasted",
    "lasts",
    "last",
    "stretches",
    "stretch",
    "stretched",
    "averages",
    "averaged",
    "exceeds",
    "exceed",
    "exceeded",
    "had",
    "got",
    "get",
    "gets",
    "gave",
    "give",
    "gives",
    "found",
    "find",
    "finds",
    "saw",
    "see",
    "sees",
    "went",
    "go",
    "goes",
    "came",
    "come",
    "comes",
    "began",
    "begin",
    "begins",
    "ended",
    "ends",
    "end",
];

const ADJECTIVES: &[&str] = &[
    "high",
    "long",
    "tall",
    "wide",
    "deep",
    "thick",
    "large",
    "small",
    "big",
    "little",
    "total",
    "average",
    "maximum",
    "minimum",
    "mean",
    "main",
    "new",
    "old",
    "great",
    "greater",
    "greatest",
    "largest",
    "smallest",
    "highest",
    "longest",
    "tallest",
    "widest",
    "deepest",
    "first",
    "last",
    "other",
    "same",
    "current",
    "former",
    "annual",
    "medium",
    "urban",
    "rural",
    "short",
    "heavy",
    "light",
    "top",
    "full",
    "empty",
    "net",
    "gross",
    "overall",
    "combined",
    "approximate",
    "estimated",
    "northern",
    "southern",
    "eastern",
    "western",
    "central",
    "upper",
    "lower",
    "inner",
    "outer",
    "higher",
    "lower",
    "longer",
    "shorter",
    "larger",
    "smaller",
    "entire",
    "whole",
    "original",
    "present",
    "modern",
    "ancient",
    "early",
    "late",
    "major",
    "minor",
    "public",
    "private",
    "national",
    "local",
    "regional",
    "federal",
    "municipal",
    "official",
    "previous",
    "next",
    "final",
    "open",
    "closed",
    "wet",
    "dry",
    "hot",
    "cold",
    "warm",
    "cool",
    "free",
    "real",
    "true",
    "false",
    "certain",
    "various",
    "different",
    "several",
    "few",
    "many",
    "much",
    "more",
    "less",
    "most",
    "least",
    "such",
    "own",
    "only",
    "residential",
    "employed",
    "living",
    "concert",
];

const IRREGULAR_LEMMAS: &[(&str, &str)] = &[
    ("feet", "foot"),
    ("metres", "metre"),
    ("meters", "meter"),
    ("people", "person"),
    ("children", "child"),
    ("men", "man"),
    ("women", "woman"),
    ("teeth", "tooth"),
    ("mice", "mouse"),
    ("geese", "goose"),
    ("is", "be"),
    ("are", "be"),
    ("was", "be"),
    ("were", "be"),
    ("been", "be"),
    ("being", "be"),
    ("am", "be"),
    ("has", "have"),
    ("had", "have"),
    ("having", "have"),
    ("does", "do"),
    ("did", "do"),
    ("rose", "rise"),
    ("ran", "run"),
    ("stood", "stand"),
    ("held", "hold"),
    ("took", "take"),
    ("made", "make"),
    ("became", "become"),
    ("built", "build"),
    ("grew", "grow"),
    ("fell", "fall"),
    ("lay", "lie"),
    ("lies", "lie"),
    ("sat", "sit"),
    ("wrote", "write"),
    ("gave", "give"),
    ("got", "get"),
    ("went", "go"),
    ("came", "come"),
    ("began", "begin"),
    ("saw", "see"),
    ("found", "find"),
    ("known", "know"),
    ("inches", "inch"),
    ("indices", "index"),
    ("data", "datum"),
    ("criteria", "criterion"),
    ("phenomena", "phenomenon"),
    ("species", "species"),
    ("series", "series"),
    ("lbs", "lb"),
    ("its", "its"),
    ("this", "this"),
    ("was", "be"),
    ("as", "as"),
    ("us", "us"),
    ("bus", "bus"),
    ("gas", "gas"),
    ("census", "census"),
    ("status", "status"),
    ("campus", "campus"),
    ("bonus", "bonus"),
    ("apparatus", "apparatus"),
    ("news", "news"),
    ("lens", "lens"),
    ("yes", "yes"),
    ("physics", "physics"),
    ("mathematics", "mathematics"),
    ("economics", "economics"),
    ("wolves", "wolf"),
    ("leaves", "leaf"),
    ("lives", "life"),
    ("knives", "knife"),
    ("halves", "half"),
    ("shelves", "shelf"),
    ("calves", "calf"),
    ("degrees", "degree"),
    ("inhabitants", "inhabitant"),
    ("households", "household"),
    ("kilometres", "kilometre"),
    ("centimetres", "centimetre"),
    ("millimetres", "millimetre"),
    ("litres", "litre"),
    ("hectares", "hectare"),
    ("acres", "acre"),
    ("tonnes", "tonne"),
    ("miles", "mile"),
    ("ewes", "ewe"),
    ("houses", "house"),
    ("horses", "horse"),
    ("courses", "course"),
    ("bases", "base"),
    ("cases", "case"),
    ("phases", "phase"),
    ("places", "place"),
    ("spaces", "space"),
    ("races", "race"),
    ("pieces", "piece"),
    ("sources", "source"),
    ("resources", "resource"),
    ("lines", "line"),
    ("times", "time"),
    ("sizes", "size"),
    ("prizes", "prize"),
    ("rates", "rate"),
    ("states", "state"),
    ("sites", "site"),
    ("routes", "route"),
    ("tides", "tide"),
    ("sides", "side"),
    ("types", "type"),
    ("scales", "scale"),
    ("zones", "zone"),
    ("stones", "stone"),
    ("volumes", "volume"),
    ("structures", "structure"),
    ("temperatures", "temperature"),
    ("measures", "measure"),
    ("pages", "page"),
    ("villages", "village"),
    ("images", "image"),
    ("ranges", "range"),
    ("bridges", "bridge"),
    ("edges", "edge"),
    ("engines", "engine"),
    ("machines", "machine"),
    ("tonnes", "tonne"),
    ("seats", "seat"),
    ("goes", "go"),
    ("does", "do"),
];

const NOUN_SUFFIXES: &[&str] = &[
    "tion", "sion", "ment", "ness", "ity", "ance", "ence", "ship", "hood", "ism", "ist", "age",
    "ure", "dom", "ery",
];

const ADJ_SUFFIXES: &[&str] = &["ous", "ive", "ful", "less", "able", "ible", "ical", "ern"];

#[derive(Clone, Debug)]
pub struct Lexicon {
    determiners: BTreeSet<&'static str>,
    adpositions: BTreeSet<&'static str>,
    other: BTreeSet<&'static str>,
    verbs: BTreeSet<&'static str>,
    adjectives: BTreeSet<&'static str>,
    irregular: BTreeMap<&'static str, &'static str>,
}

fn is_punct(w: &str) -> bool {
    w.chars().all(|c| !c.is_alphanumeric())
}

fn starts_upper(w: &str) -> bool {
    w.chars().next().is_some_and(char::is_uppercase)
}

impl Lexicon {
    pub fn builtin() -> Self {
        Lexicon {
            determiners: DETERMINERS.iter().copied().collect(),
            adpositions: ADPOSITIONS.iter().copied().collect(),
            other: OTHER_WORDS.iter().copied().collect(),
            verbs: VERBS.iter().copied().collect(),
            adjectives: ADJECTIVES.iter().copied().collect(),
            irregular: IRREGULAR_LEMMAS.iter().copied().collect(),
        }
    }

    /// Coarse tag for token `i` of `words`.
    pub fn tag(&self, w: &str, i: usize, words: &[&str], like_num: bool, in_name: bool) -> Pos {
        if is_punct(w) {
            return Pos::Punct;
        }
        if like_num {
            return Pos::Num;
        }
        if in_name {
            return Pos::Propn;
        }
        let lower = w.to_lowercase();
        let l = lower.as_str();
        if self.determiners.contains(l) {
            return Pos::Det;
        }
        if self.adpositions.contains(l) && !(l == "about" && next_is_num(words, i)) {
            return Pos::Adp;
        }
        if self.other.contains(l) {
            return Pos::Other;
        }
        let sentence_start = i == 0
            || words
                .get(i.wrapping_sub(1))
                .is_some_and(|p| matches!(*p, "\"" | "“" | "(" | ":" | "."));
        if starts_upper(w) {
            let all_caps = w
                .chars()
                .filter(|c| c.is_alphabetic())
                .all(char::is_uppercase);
            if sentence_start && !all_caps {
                if self.verbs.contains(l) {
                    return Pos::Verb;
                }
                if self.adjectives.contains(l) {
                    return Pos::Adj;
                }
                if NOUN_SUFFIXES.iter().any(|s| l.ends_with(s)) && l.len() > 5 {
                    return Pos::Noun;
                }
            }
            return Pos::Propn;
        }
        if self.verbs.contains(l) {
            return Pos::Verb;
        }
        if self.adjectives.contains(l) {
            return Pos::Adj;
        }
        if l.ends_with("ly") && l.len() > 4 {
            return Pos::Other;
        }
        if l.ends_with("ed") && l.len() > 4 {
            return Pos::Verb;
        }
        if ADJ_SUFFIXES.iter().any(|s| l.ends_with(s)) && l.len() > 5 {
            return Pos::Adj;
        }
        Pos::Noun
    }

    /// Lemma of a token given its tag. Proper nouns keep their case;
    /// everything else is lowercased.
    pub fn lemma(&self, w: &str, pos: Pos) -> String {
        if pos == Pos::Propn {
            return w.to_string();
        }
        let lower = w.to_lowercase();
        if let Some(l) = self.irregular.get(lower.as_str()) {
            return l.to_string();
        }
        match pos {
            Pos::Noun => noun_lemma(&lower),
            Pos::Verb => verb_lemma(&lower),
            _ => lower,
        }
    }

    /// Lowercase lemmas of a label phrase, each word treated as a noun.
    pub fn lemmatize_phrase(&self, phrase: &str) -> Vec<String> {
        tokenize(phrase)
            .into_iter()
            .map(|(s, e)| {
                let w = &phrase[s..e];
                let lower = w.to_lowercase();
                match self.irregular.get(lower.as_str()) {
                    Some(l) => l.to_string(),
                    None if is_punct(w) => lower,
                    None => noun_lemma(&lower),
                }
            })
            .collect()
    }
}

fn next_is_num(words: &[&str], i: usize) -> bool {
    words
        .get(i + 1)
        .is_some_and(|w| w.chars().next().is_some_and(|c| c.is_ascii_digit()))
}

fn noun_lemma(w: &str) -> String {
    let n = w.chars().count();
    if n > 4 && w.ends_with("ies") {
        return alloc::format!("{}y", &w[..w.len() - 3]);
    }
    for suf in ["sses", "xes", "ches", "shes", "zes"] {
        if w.ends_with(suf) && n > suf.len() + 1 {
            return w[..w.len() - 2].to_string();
        }
    }
    if n > 3 && w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") && !w.ends_with("is") {
        return w[..w.len() - 1].to_string();
    }
    w.to_string()
}

fn verb_lemma(w: &str) -> String {
    let n = w.chars().count();
    if n > 4 && w.ends_with("ies") {
        return alloc::format!("{}y", &w[..w.len() - 3]);
    }
    if n > 4
        && (w.ends_with("ches") || w.ends_with("shes") || w.ends_with("sses") || w.ends_with("xes"))
    {
        return w[..w.len() - 2].to_string();
    }
    if n > 4 && w.ends_with("ied") {
        return alloc::format!("{}y", &w[..w.len() - 3]);
    }
    if n > 4 && w.ends_with("ed") {
        let stem = &w[..w.len() - 2];
        // "measured" → "measure", "reached" → "reach"
        if stem.ends_with(['u', 'v', 'z', 'c', 'g']) || stem.ends_with("at") || stem.ends_with("it")
        {
            return alloc::format!("{stem}e");
        }
        return stem.to_string();
    }
    if n > 3 && w.ends_with('s') && !w.ends_with("ss") {
        return w[..w.len() - 1].to_string();
    }
    w.to_string()
}

/// Longest-match name list plus rules for dates and ordinals.
#[derive(Clone, Debug, Default)]
pub struct Gazetteer {
    // first token → (token sequence, label), longest first
    entries: BTreeMap<String, Vec<(Vec<String>, String)>>,
}

pub const MONTHS: &[&str] = &[
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

const TEMPORAL_PREPOSITIONS: &[&str] = &[
    "in", "since", "by", "until", "till", "from", "during", "before", "after", "circa", "c.",
    "around", "year", "early", "late", "mid", "between", "to", "and", "or",
];

pub fn is_month(w: &str) -> bool {
    MONTHS.contains(&w)
        || matches!(
            w,
            "Jan"
                | "Feb"
                | "Mar"
                | "Apr"
                | "Jun"
                | "Jul"
                | "Aug"
                | "Sep"
                | "Sept"
                | "Oct"
                | "Nov"
                | "Dec"
        )
}

pub fn is_year(w: &str) -> bool {
    w.len() == 4
        && w.bytes().all(|b| b.is_ascii_digit())
        && matches!(w.parse::<u32>(), Ok(1000..=2099))
}

fn is_day(w: &str) -> bool {
    w.len() <= 2 && w.bytes().all(|b| b.is_ascii_digit()) && matches!(w.parse::<u32>(), Ok(1..=31))
}

impl Gazetteer {
    /// Parse `name<TAB>label` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        let mut g = Gazetteer::default();
        for line in text.lines() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let (Some(name), Some(label)) = (cols.next(), cols.next()) else {
                continue;
            };
            g.insert(name.trim(), label.trim());
        }
        g
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_GAZETTEER)
    }

    pub fn insert(&mut self, name: &str, label: &str) {
        let toks: Vec<String> = tokenize(name)
            .into_iter()
            .map(|(s, e)| name[s..e].to_string())
            .collect();
        if toks.is_empty() {
            return;
        }
        let list = self.entries.entry(toks[0].clone()).or_default();
        if !list.iter().any(|(t, _)| *t == toks) {
            list.push((toks, label.to_string()));
            list.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
        }
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Tag a tokenized sentence. Names win over date rules; spans never
    /// overlap.
    pub fn tag(&self, text: &str, tokens: &[(usize, usize)], words: &[&str]) -> Vec<NerSpan> {
        let n = words.len();
        let mut taken = alloc::vec![false; n];
        let mut spans = Vec::new();
        let mut i = 0;
        while i < n {
            let mut matched = None;
            if let Some(list) = self.entries.get(words[i]) {
                for (seq, label) in list {
                    let m = seq.len();
                    if i + m <= n
                        && seq.iter().zip(&words[i..i + m]).all(|(a, b)| a == b)
                        && contiguous(text, tokens, i, i + m)
                    {
                        matched = Some((m, label.clone()));
                        break;
                    }
                }
            }
            match matched {
                Some((m, label)) => {
                    for t in &mut taken[i..i + m] {
                        *t = true;
                    }
                    spans.push(NerSpan {
                        start: i,
                        end: i + m,
                        label,
                    });
                    i += m;
                }
                None => i += 1,
            }
        }
        for (s, e, label) in date_and_ordinal_spans(words) {
            if taken[s..e].iter().all(|t| !t) {
                for t in &mut taken[s..e] {
                    *t = true;
                }
                spans.push(NerSpan {
                    start: s,
                    end: e,
                    label: label.to_string(),
                });
            }
        }
        spans.sort();
        spans
    }
}

/// Tokens `[a, b)` are separated by at most single spaces.
fn contiguous(text: &str, tokens: &[(usize, usize)], a: usize, b: usize) -> bool {
    (a + 1..b).all(|k| {
        let gap = &text[tokens[k - 1].1..tokens[k].0];
        gap.is_empty() || gap == " "
    })
}

fn date_and_ordinal_spans(words: &[&str]) -> Vec<(usize, usize, &'static str)> {
    let n = words.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let w = words[i];
        if is_month(w) {
            let mut s = i;
            let mut e = i + 1;
            // "5 March"
            if i > 0 && is_day(words[i - 1]) {
                s = i - 1;
            }
            if e < n && is_day(words[e]) {
                e += 1;
            }
            if e < n && words[e] == "," && e + 1 < n && is_year(words[e + 1]) {
                e += 2;
            } else if e < n && is_year(words[e]) {
                e += 1;
            }
            // a bare month name only counts with a number attached
            if e - s > 1 {
                out.push((s, e, "DATE"));
                i = e;
                continue;
            }
        }
        if is_year(w) || is_decade(w) {
            let prev = if i > 0 {
                words[i - 1].to_lowercase()
            } else {
                String::new()
            };
            let as_of = prev == "of" && i > 1 && words[i - 2].eq_ignore_ascii_case("as");
            let after_year_dash =
                i > 1 && matches!(words[i - 1], "–" | "-" | "—") && is_year(words[i - 2]);
            if TEMPORAL_PREPOSITIONS.contains(&prev.as_str())
                || as_of
                || after_year_dash
                || is_decade(w)
            {
                out.push((i, i + 1, "DATE"));
                i += 1;
                continue;
            }
        }
        if is_ordinal_word(w) || is_ordinal_digits(w) {
            out.push((i, i + 1, "ORDINAL"));
        }
        i += 1;
    }
    out
}

fn is_decade(w: &str) -> bool {
    w.len() == 5 && w.ends_with('s') && is_year(&w[..4]) && w[..4].ends_with('0')
}

pub fn is_ordinal_digits(w: &str) -> bool {
    let digits = w.bytes().take_while(u8::is_ascii_digit).count();
    digits > 0 && matches!(&w[digits..], "st" | "nd" | "rd" | "th")
}

const ORDINAL_WORDS: &[(&str, u32)] = &[
    ("first", 1),
    ("second", 2),
    ("third", 3),
    ("fourth", 4),
    ("fifth", 5),
    ("sixth", 6),
    ("seventh", 7),
    ("eighth", 8),
    ("ninth", 9),
    ("tenth", 10),
    ("eleventh", 11),
    ("twelfth", 12),
    ("thirteenth", 13),
    ("fourteenth", 14),
    ("fifteenth", 15),
    ("sixteenth", 16),
    ("seventeenth", 17),
    ("eighteenth", 18),
    ("nineteenth", 19),
    ("twentieth", 20),
    ("thirtieth", 30),
    ("fortieth", 40),
    ("fiftieth", 50),
    ("sixtieth", 60),
    ("seventieth", 70),
    ("eightieth", 80),
    ("ninetieth", 90),
    ("hundredth", 100),
    ("thousandth", 1000),
];

pub fn ordinal_word_value(w: &str) -> Option<u32> {
    let l = w.to_lowercase();
    ORDINAL_WORDS.iter().find(|(k, _)| *k == l).map(|(_, v)| *v)
}

pub fn is_ordinal_word(w: &str) -> bool {
    ordinal_word_value(w).is_some()
}
