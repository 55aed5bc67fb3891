//! Property tests for the text format: round-trip identity over random valid
//! nets, and sane error positions under token deletion.

mod common;

use proptest::prelude::*;

use common::random_net;
use wfp_core::dsl::{parse, serialize, ParseFailure, SourceSpan};

/// Whitespace-delimited chunks of `text` with their byte offsets.
fn chunks(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut offset = 0;
    for part in text.split_inclusive(char::is_whitespace) {
        let token = part.trim_end_matches(char::is_whitespace);
        if !token.is_empty() {
            out.push((offset, token));
        }
        offset += part.len();
    }
    out
}

fn offset_to_span(text: &str, offset: usize) -> SourceSpan {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() as u32 + 1;
    let column = (offset - before.rfind('\n').map_or(0, |p| p + 1)) as u32 + 1;
    SourceSpan { line, column }
}

fn span_le(a: SourceSpan, b: SourceSpan) -> bool {
    (a.line, a.column) <= (b.line, b.column)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialize_parse_is_identity(seed in any::<u64>()) {
        let def = random_net(seed);
        let text = serialize(&def);
        let reparsed = parse(&text).expect("serialized text parses");
        prop_assert_eq!(reparsed, def);
    }

    /// Deleting one token either leaves the text valid, or yields an error
    /// whose span lies inside the text and no later than the token that
    /// followed the deleted one.
    #[test]
    fn deleted_token_errors_point_near_the_gap(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let def = random_net(seed);
        let text = serialize(&def);
        let tokens = chunks(&text);
        let victim = pick.index(tokens.len());
        let (start, token) = tokens[victim];
        let mutated = format!("{}{}", &text[..start], &text[start + token.len()..]);

        // Position, in the mutated text, of the token that followed the
        // deleted one (or the end of the text).
        let boundary = tokens
            .get(victim + 1)
            .map_or(mutated.len(), |(next, _)| next - token.len());
        let boundary_span = offset_to_span(&mutated, boundary);

        match parse(&mutated) {
            Ok(_) | Err(ParseFailure::Invalid(_)) => {}
            Err(ParseFailure::Syntax(errors)) => {
                let first = &errors[0];
                let line_count = mutated.lines().count() as u32;
                prop_assert!(first.span.line >= 1 && first.span.line <= line_count.max(1));
                let line = mutated.lines().nth(first.span.line as usize - 1).unwrap_or("");
                prop_assert!(first.span.column >= 1 && first.span.column as usize <= line.len() + 1);
                prop_assert!(
                    span_le(first.span, boundary_span),
                    "error at {} but the deleted token's successor is at {} in:\n{}",
                    first.span, boundary_span, mutated
                );
            }
        }
    }
}
