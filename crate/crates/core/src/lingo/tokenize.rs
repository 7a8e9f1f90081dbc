use alloc::vec::Vec;

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Whitespace and punctuation tokenization, as byte ranges.
///
/// Words are runs of alphanumerics; `.` and `,` stay inside a word when both
/// neighbours are digits ("2,564", "79.8"); an apostrophe followed by letters
/// starts its own token ("Djoser" + "'s"). Every other non-space character is
/// a token of its own.
pub fn tokenize(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let end_of = |k: usize| chars.get(k).map_or(text.len(), |&(b, _)| b);
    let mut k = 0;
    while k < chars.len() {
        let (start, c) = chars[k];
        if c.is_whitespace() {
            k += 1;
            continue;
        }
        if is_word_char(c) {
            let mut j = k + 1;
            while j < chars.len() {
                let c = chars[j].1;
                if is_word_char(c) {
                    j += 1;
                } else if (c == '.' || c == ',')
                    && chars[j - 1].1.is_ascii_digit()
                    && chars.get(j + 1).is_some_and(|n| n.1.is_ascii_digit())
                {
                    j += 2;
                } else {
                    break;
                }
            }
            out.push((start, end_of(j)));
            k = j;
            continue;
        }
        if (c == '\'' || c == '’') && k > 0 && is_word_char(chars[k - 1].1) {
            let mut j = k + 1;
            while j < chars.len() && chars[j].1.is_alphabetic() {
                j += 1;
            }
            if j > k + 1 && j - k <= 3 {
                out.push((start, end_of(j)));
                k = j;
                continue;
            }
        }
        out.push((start, end_of(k + 1)));
        k += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn toks(s: &str) -> Vec<&str> {
        tokenize(s).into_iter().map(|(a, b)| &s[a..b]).collect()
    }

    #[test]
    fn numbers_stay_whole() {
        assert_eq!(
            toks("a 2,564-seat hall"),
            ["a", "2,564", "-", "seat", "hall"]
        );
        assert_eq!(
            toks("79.8 m (261 ft)."),
            ["79.8", "m", "(", "261", "ft", ")", "."]
        );
        assert_eq!(toks("1, 2"), ["1", ",", "2"]);
    }

    #[test]
    fn punctuation_and_possessives() {
        assert_eq!(
            toks("Djoser's m/s °C"),
            ["Djoser", "'s", "m", "/", "s", "°", "C"]
        );
        assert_eq!(toks("ft."), ["ft", "."]);
        assert_eq!(toks("km²"), ["km²"]);
        assert!(toks("").is_empty());
    }
}
