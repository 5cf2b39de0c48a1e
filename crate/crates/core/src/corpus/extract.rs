use super::RawDocument;

/// Splits text into paragraphs separated by one or more blank lines.
/// Paragraph text is trimmed; lines inside a paragraph are kept as-is.
pub fn paragraphs(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                out.push(current.join("\n").trim().to_owned());
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        out.push(current.join("\n").trim().to_owned());
    }
    out
}

fn strip_prefix_ci<'a>(s: &'a str, word: &str) -> Option<&'a str> {
    let head = s.get(..word.len())?;
    head.eq_ignore_ascii_case(word).then(|| &s[word.len()..])
}

/// Does the paragraph open with "ALORS QUE" (any case, any whitespace
/// between the words, not followed by another letter)?
pub fn is_alors_que_paragraph(paragraph: &str) -> bool {
    let Some(rest) = strip_prefix_ci(paragraph.trim_start(), "alors") else {
        return false;
    };
    let after_space = rest.trim_start();
    if after_space.len() == rest.len() {
        return false;
    }
    match strip_prefix_ci(after_space, "que") {
        Some(tail) => !tail.chars().next().is_some_and(char::is_alphanumeric),
        None => false,
    }
}

/// Every `ALORS QUE` paragraph of the document, in document order.
pub fn extract_alors_que(doc: &RawDocument) -> Vec<String> {
    paragraphs(&doc.text)
        .into_iter()
        .filter(|p| is_alors_que_paragraph(p))
        .collect()
}

/// The classification input of a pleading: its `ALORS QUE` paragraphs joined
/// by newlines, or `None` when it has none.
pub fn alors_que_text(doc: &RawDocument) -> Option<String> {
    let found = extract_alors_que(doc);
    (!found.is_empty()).then(|| found.join("\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(paragraphs: &[&str]) -> RawDocument {
        RawDocument {
            doc_id: "d".into(),
            text: paragraphs.join("\n\n"),
            chamber_label: None,
            matiere_label: None,
        }
    }

    #[test]
    fn no_match() {
        assert!(extract_alors_que(&doc(&["Attendu que X", "Par ces motifs"])).is_empty());
        assert_eq!(alors_que_text(&doc(&["Attendu que X"])), None);
    }

    #[test]
    fn direct_prefix_match() {
        let d = doc(&["Attendu que X", "ALORS QUE la cour a jugé..."]);
        assert_eq!(extract_alors_que(&d), ["ALORS QUE la cour a jugé..."]);
    }

    #[test]
    fn case_and_whitespace_tolerant() {
        let d = doc(&["alors que Y", "ALORS  QUE Z"]);
        assert_eq!(extract_alors_que(&d), ["alors que Y", "ALORS  QUE Z"]);
        assert_eq!(alors_que_text(&d).unwrap(), "alors que Y\nALORS  QUE Z");
    }

    #[test]
    fn predicate_edges() {
        assert!(is_alors_que_paragraph("   Alors\tque, d'une part"));
        assert!(is_alors_que_paragraph("ALORS\nQUE"));
        assert!(!is_alors_que_paragraph("ALORSQUE"));
        assert!(!is_alors_que_paragraph("ALORS QUELQUE"));
        assert!(!is_alors_que_paragraph("Et alors que"));
        assert!(!is_alors_que_paragraph("ALORS"));
    }

    #[test]
    fn paragraphs_split_on_blank_lines() {
        let p = paragraphs("a\nb\n\n \n\nc\n");
        assert_eq!(p, ["a\nb", "c"]);
        assert!(paragraphs("").is_empty());
    }

    proptest! {
        #[test]
        fn non_matching_prefix_paragraph_is_ignored(
            body in "[a-zA-Z ]{0,40}",
            prefix in "[b-z][a-z ]{0,30}",
        ) {
            let base = doc(&["ALORS QUE un", &body, "alors que deux"]);
            let with_prefix = RawDocument {
                text: format!("{prefix}\n\n{}", base.text),
                ..base.clone()
            };
            let out = extract_alors_que(&base);
            prop_assert!(out.iter().all(|p| is_alors_que_paragraph(p)));
            prop_assert_eq!(extract_alors_que(&with_prefix), out);
        }
    }
}
