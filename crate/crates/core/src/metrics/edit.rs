use crate::lang::{tokenize_lenient, TokenKind};

/// Lexemes of a program, layout tokens dropped. Never fails.
pub fn code_tokens(code: &str) -> Vec<String> {
    tokenize_lenient(code)
        .into_iter()
        .filter(|t| !t.kind.is_layout() && t.kind != TokenKind::Eof)
        .map(|t| t.lexeme)
        .collect()
}

/// Concatenated tokens of one turn's programs, in directive order.
pub fn turn_tokens<'a>(codes: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    codes.into_iter().flat_map(code_tokens).collect()
}

pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut row = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        row[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            row[j + 1] = sub.min(prev[j + 1] + 1).min(row[j] + 1);
        }
        std::mem::swap(&mut prev, &mut row);
    }
    prev[b.len()]
}

pub fn code_edit_distance(gt_code: &str, pred_code: &str) -> usize {
    levenshtein(&code_tokens(gt_code), &code_tokens(pred_code))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(levenshtein(&[1, 2, 3], &[1, 3]), 1);
        assert_eq!(levenshtein::<u8>(&[], &[1, 2]), 2);
        assert_eq!(code_edit_distance("x = s3.f(Bucket=\"a\")", "x = s3.f(Bucket=\"b\")"), 1);
        assert_eq!(code_tokens("if a:\n    return b\n"), ["if", "a", ":", "return", "b"]);
        assert_eq!(code_tokens("x = $"), ["x", "=", "$"]);
    }
}
