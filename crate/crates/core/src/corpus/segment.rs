use serde::{Deserialize, Serialize};

/// How documents are cut into sentences before scanning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Segmenter {
    #[default]
    RuleBased,
    /// The whole document is one sentence.
    Document,
}

impl Segmenter {
    pub fn segment<'a>(&self, document: &'a str) -> Vec<&'a str> {
        match self {
            Segmenter::RuleBased => segment_sentences(document),
            Segmenter::Document => {
                let t = document.trim();
                if t.is_empty() {
                    vec![]
                } else {
                    vec![t]
                }
            }
        }
    }
}

// Lowercased, without the trailing period.
const ABBREVIATIONS: &[&str] = &[
    "al", "approx", "ca", "cf", "co", "corp", "dept", "dr", "e.g", "eq", "eqs", "esp", "et", "etc",
    "fig", "figs", "i.e", "inc", "jr", "ltd", "min", "mr", "mrs", "ms", "no", "nos", "pp", "prof",
    "ref", "refs", "resp", "sec", "sr", "st", "viz", "vol", "vs",
];

fn is_abbreviation(word: &str) -> bool {
    let word = word.trim_start_matches(|c: char| !c.is_alphanumeric());
    let Some(stem) = word.strip_suffix('.') else {
        return false;
    };
    let lower = stem.to_lowercase();
    if ABBREVIATIONS.contains(&lower.as_str()) {
        return true;
    }
    // uppercase initials such as "J."
    let mut chars = stem.chars();
    matches!((chars.next(), chars.next()), (Some(c), None) if c.is_uppercase())
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '}' | '»' | '”' | '’')
}

/// Splits a document at `.`, `!` or `?` (plus any closing quotes or
/// brackets) when followed by whitespace and an uppercase letter or digit,
/// unless the word ending there is a known abbreviation or an uppercase
/// initial.
pub fn segment_sentences(document: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = document.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (_, c) = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut end = i + 1;
            while end < chars.len()
                && (is_closer(chars[end].1) || matches!(chars[end].1, '.' | '!' | '?'))
            {
                end += 1;
            }
            let mut next = end;
            while next < chars.len() && chars[next].1.is_whitespace() {
                next += 1;
            }
            let boundary = next > end
                && next < chars.len()
                && (chars[next].1.is_uppercase() || chars[next].1.is_ascii_digit());
            if boundary {
                let end_byte = chars.get(end).map_or(document.len(), |(b, _)| *b);
                let word_start = document[start..end_byte]
                    .rfind(char::is_whitespace)
                    .map_or(start, |p| start + p + 1);
                let last_word = &document[word_start..chars[i].0 + c.len_utf8()];
                if !(c == '.' && is_abbreviation(last_word)) {
                    let s = document[start..end_byte].trim();
                    if !s.is_empty() {
                        sentences.push(s);
                    }
                    start = chars[next].0;
                    i = next;
                    continue;
                }
            }
            i = end;
            continue;
        }
        i += 1;
    }
    let tail = document[start..].trim();
    if !tail.is_empty() {
        sentences.push(tail);
    }
    sentences
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sentences() {
        assert_eq!(
            segment_sentences("A cell. The lung."),
            ["A cell.", "The lung."]
        );
        assert_eq!(segment_sentences("A b. C d."), ["A b.", "C d."]);
    }

    #[test]
    fn empty_document() {
        assert!(segment_sentences("").is_empty());
        assert!(segment_sentences("   ").is_empty());
    }

    #[test]
    fn abbreviations_and_initials_do_not_split() {
        assert_eq!(
            segment_sentences("See Fig. 3 for details. Dr. Smith agreed."),
            ["See Fig. 3 for details.", "Dr. Smith agreed."]
        );
        assert_eq!(
            segment_sentences("J. Smith wrote it."),
            ["J. Smith wrote it."]
        );
    }

    #[test]
    fn lowercase_continuation_does_not_split() {
        assert_eq!(
            segment_sentences("It was 3 p.m. today."),
            ["It was 3 p.m. today."]
        );
    }

    #[test]
    fn closing_quotes_stay_with_sentence() {
        assert_eq!(
            segment_sentences("He said \"stop.\" Then he left!"),
            ["He said \"stop.\"", "Then he left!"]
        );
    }

    #[test]
    fn digits_start_sentences() {
        assert_eq!(
            segment_sentences("Done. 42 remain."),
            ["Done.", "42 remain."]
        );
    }

    #[test]
    fn document_mode_keeps_whole_line() {
        assert_eq!(Segmenter::Document.segment(" A b. C d. "), ["A b. C d."]);
    }
}
