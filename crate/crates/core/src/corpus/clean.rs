use crate::error::Result;

const FRENCH_LETTERS: &str = "àâæçéèêëîïôœùûüÿÀÂÆÇÉÈÊËÎÏÔŒÙÛÜŸ";
const EXTRA_PUNCTUATION: &str = "§°«»€…–—‘’“”‹›";

/// True for characters kept by [`clean_text`]: ASCII letters and digits,
/// French accented letters, ASCII punctuation plus a few typographic marks
/// common in French legal writing.
pub fn is_retained_char(c: char) -> bool {
    c.is_ascii_alphanumeric()
        || c.is_ascii_punctuation()
        || FRENCH_LETTERS.contains(c)
        || EXTRA_PUNCTUATION.contains(c)
}

/// Removes every character outside the retained set, collapses whitespace
/// runs to a single space and trims both ends.
///
/// Removal is per character, so a digit inside a removed run survives:
/// `"loi 第5条 n°5"` becomes `"loi 5 n°5"`.
pub fn clean_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars() {
        if c.is_whitespace() {
            pending_space = true;
        } else if is_retained_char(c) {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        }
    }
    out
}

/// [`clean_text`] over raw bytes, rejecting invalid UTF-8.
pub fn clean_bytes(bytes: &[u8]) -> Result<String> {
    Ok(clean_text(std::str::from_utf8(bytes)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_input() {
        assert_eq!(clean_text(""), "");
        assert_eq!(clean_text(" \n\t "), "");
    }

    #[test]
    fn french_text_and_section_sign_survive() {
        assert_eq!(clean_text("mémoire § ampliatif"), "mémoire § ampliatif");
        assert_eq!(
            clean_text("Œuvre d’art « déjà vue » : 12,5 €"),
            "Œuvre d’art « déjà vue » : 12,5 €"
        );
    }

    #[test]
    fn cjk_is_removed_per_character() {
        assert_eq!(clean_text("loi 第5条 n°5"), "loi 5 n°5");
        assert_eq!(clean_text("loi 第条 n°5"), "loi n°5");
    }

    #[test]
    fn whitespace_runs_collapse() {
        assert_eq!(clean_text("  a\u{a0}\u{a0}b\n\n c  "), "a b c");
        assert_eq!(clean_text("a \u{1F600} b"), "a b");
    }

    #[test]
    fn invalid_utf8_is_rejected() {
        assert!(clean_bytes(&[0x61, 0xff, 0x62]).is_err());
        assert_eq!(clean_bytes("é t".as_bytes()).unwrap(), "é t");
    }

    proptest! {
        #[test]
        fn idempotent(s in any::<String>()) {
            let once = clean_text(&s);
            prop_assert_eq!(clean_text(&once), once.clone());
            prop_assert!(once.chars().all(|c| c == ' ' || is_retained_char(c)));
            prop_assert!(!once.contains("  "));
        }
    }
}
