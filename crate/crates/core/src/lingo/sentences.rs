use alloc::string::String;
#[cfg(test)]
use alloc::string::ToString;
use alloc::vec::Vec;

/// Abbreviations that never end a sentence (matched case-insensitively).
pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "fig.", "figs.", "no.", "nos.", "ft.", "st.", "mt.", "mts.", "dr.", "mr.",
    "mrs.", "ms.", "jr.", "sr.", "vs.", "approx.", "ca.", "c.", "cf.", "al.", "inc.", "ltd.",
    "co.", "corp.", "u.s.", "u.k.", "sq.", "lb.", "lbs.", "oz.", "mi.", "vol.", "pp.", "p.",
    "jan.", "feb.", "mar.", "apr.", "jun.", "jul.", "aug.", "sep.", "sept.", "oct.", "nov.",
    "dec.", "gen.", "col.", "capt.", "lt.", "sgt.", "prof.", "rev.", "est.", "op.", "ed.", "eds.",
    "ch.", "sec.",
];

#[derive(Clone, Debug)]
pub struct SentenceSplitter {
    abbreviations: Vec<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        Self::new(DEFAULT_ABBREVIATIONS.iter().copied())
    }
}

const CLOSERS: &[char] = &['"', '\'', ')', ']', '”', '’', '»'];

impl SentenceSplitter {
    pub fn new<'a>(abbreviations: impl IntoIterator<Item = &'a str>) -> Self {
        SentenceSplitter {
            abbreviations: abbreviations
                .into_iter()
                .map(|a| a.to_lowercase())
                .collect(),
        }
    }

    /// Sentence byte spans, trimmed. No boundary is placed inside a
    /// `protected` byte range; line breaks always end a sentence.
    pub fn split(&self, text: &str, protected: &[(usize, usize)]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = 0;
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let inside = |b: usize| protected.iter().any(|&(s, e)| s <= b && b < e);
        let mut k = 0;
        while k < chars.len() {
            let (b, c) = chars[k];
            if c == '\n' && !inside(b) {
                push_trimmed(text, start, b, &mut out);
                start = b + 1;
                k += 1;
                continue;
            }
            if matches!(c, '.' | '!' | '?') && !inside(b) {
                let mut j = k + 1;
                while j < chars.len()
                    && (CLOSERS.contains(&chars[j].1) || matches!(chars[j].1, '.' | '!' | '?'))
                {
                    j += 1;
                }
                let end = chars.get(j).map_or(text.len(), |x| x.0);
                let at_end = j == chars.len();
                let followed_by_space = chars.get(j).is_some_and(|x| x.1.is_whitespace());
                if (at_end || followed_by_space)
                    && (c != '.' || self.period_ends(text, &chars, k, j))
                {
                    push_trimmed(text, start, end, &mut out);
                    start = end;
                }
                k = j;
                continue;
            }
            k += 1;
        }
        push_trimmed(text, start, text.len(), &mut out);
        out
    }

    fn period_ends(&self, text: &str, chars: &[(usize, char)], k: usize, j: usize) -> bool {
        let dot = chars[k].0;
        // the word carrying the period
        let mut w = k;
        while w > 0 && !chars[w - 1].1.is_whitespace() && !matches!(chars[w - 1].1, '(' | '[' | '"')
        {
            w -= 1;
        }
        let word = text[chars[w].0..dot + 1].to_lowercase();
        if self.abbreviations.contains(&word) {
            return false;
        }
        let letters: Vec<char> = word.chars().filter(|c| c.is_alphabetic()).collect();
        // initials such as "J. Smith" or "U.S.A."
        if letters.len() == 1 && chars[w].1.is_uppercase() {
            return false;
        }
        // the next sentence starts with an uppercase letter, digit or quote
        let next = chars[j..]
            .iter()
            .find(|x| !x.1.is_whitespace())
            .map(|x| x.1);
        !next.is_some_and(|c| c.is_lowercase())
    }
}

fn push_trimmed(text: &str, start: usize, end: usize, out: &mut Vec<(usize, usize)>) {
    let slice = &text[start..end];
    let lead = slice.len() - slice.trim_start().len();
    let trail = slice.len() - slice.trim_end().len();
    if start + lead < end - trail {
        out.push((start + lead, end - trail));
    }
}

/// Split with the default abbreviation list and no protected ranges.
pub fn split_sentences(text: &str) -> Vec<(usize, usize)> {
    SentenceSplitter::default().split(text, &[])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slices(text: &str, spans: &[(usize, usize)]) -> Vec<String> {
        spans.iter().map(|&(s, e)| text[s..e].to_string()).collect()
    }

    #[test]
    fn two_plain_sentences() {
        let t = "A is 3 m tall. B is 4 m.";
        assert_eq!(
            slices(t, &split_sentences(t)),
            ["A is 3 m tall.", "B is 4 m."]
        );
    }

    #[test]
    fn abbreviation_does_not_split() {
        let t = "It rose to 5 ft. In 1990 it fell.";
        let s = SentenceSplitter::new(["ft."]).split(t, &[]);
        assert_eq!(s.len(), 1);
        assert_eq!(split_sentences("It rose to 5 ft. in 1990.").len(), 1);
        assert_eq!(split_sentences("See Fig. 2 for details. Done.").len(), 2);
    }

    #[test]
    fn empty_and_whitespace() {
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("  \n ").is_empty());
    }

    #[test]
    fn protected_ranges_never_split() {
        let t = "It is 5 U.S. Gal. Here.";
        let p = [(6, 16)];
        let s = SentenceSplitter::new([]).split(t, &p);
        assert_eq!(slices(t, &s), ["It is 5 U.S. Gal.", "Here."]);
    }

    #[test]
    fn closing_quotes_and_lines() {
        let t = "He said \"stop.\" Then left.\nNew line";
        assert_eq!(
            slices(t, &split_sentences(t)),
            ["He said \"stop.\"", "Then left.", "New line"]
        );
    }
}
