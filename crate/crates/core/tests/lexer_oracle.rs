//! Tokenizer output on a snippet that hides `for` in literals and comments,
//! compared with a token list written out by hand.

use flagsel_core::{tokenize, TokenKind};

const SNIPPET: &str = r#"/* loop over "for" words */
#include <string.h>
const char *kw = "for";
const char *msg = "for (;;) {} while";
char q = '"';
int count(const char *s) {
    int n = 0; // for each char
    while (*s) {
        if (strcmp(s, "for") == 0) n++;
        s++;
    }
    return n; }
"#;

#[test]
fn hand_lexed_snippet() {
    use TokenKind::*;
    let want: &[(TokenKind, &str, u32)] = &[
        (Keyword, "const", 3), (Keyword, "char", 3), (Punctuator, "*", 3), (Identifier, "kw", 3),
        (Punctuator, "=", 3), (StringLiteral, "\"for\"", 3), (Punctuator, ";", 3),
        (Keyword, "const", 4), (Keyword, "char", 4), (Punctuator, "*", 4), (Identifier, "msg", 4),
        (Punctuator, "=", 4), (StringLiteral, "\"for (;;) {} while\"", 4), (Punctuator, ";", 4),
        (Keyword, "char", 5), (Identifier, "q", 5), (Punctuator, "=", 5), (CharLiteral, "'\"'", 5),
        (Punctuator, ";", 5),
        (Keyword, "int", 6), (Identifier, "count", 6), (Punctuator, "(", 6), (Keyword, "const", 6),
        (Keyword, "char", 6), (Punctuator, "*", 6), (Identifier, "s", 6), (Punctuator, ")", 6),
        (Punctuator, "{", 6),
        (Keyword, "int", 7), (Identifier, "n", 7), (Punctuator, "=", 7), (Number, "0", 7), (Punctuator, ";", 7),
        (Keyword, "while", 8), (Punctuator, "(", 8), (Punctuator, "*", 8), (Identifier, "s", 8),
        (Punctuator, ")", 8), (Punctuator, "{", 8),
        (Keyword, "if", 9), (Punctuator, "(", 9), (Identifier, "strcmp", 9), (Punctuator, "(", 9),
        (Identifier, "s", 9), (Punctuator, ",", 9), (StringLiteral, "\"for\"", 9), (Punctuator, ")", 9),
        (Punctuator, "==", 9), (Number, "0", 9), (Punctuator, ")", 9), (Identifier, "n", 9),
        (Punctuator, "++", 9), (Punctuator, ";", 9),
        (Identifier, "s", 10), (Punctuator, "++", 10), (Punctuator, ";", 10),
        (Punctuator, "}", 11),
        (Keyword, "return", 12), (Identifier, "n", 12), (Punctuator, ";", 12), (Punctuator, "}", 12),
    ];
    assert_eq!(SNIPPET.lines().count(), 12);
    let got = tokenize(SNIPPET.as_bytes()).unwrap();
    let got: Vec<(TokenKind, &str, u32)> = got.iter().map(|t| (t.kind, t.lexeme.as_str(), t.line)).collect();
    assert_eq!(got, want);
    assert_eq!(got.iter().filter(|t| t.0 == Keyword && t.1 == "for").count(), 0);
}

#[test]
fn lexer_errors() {
    use flagsel_core::LexError;
    assert!(matches!(tokenize(b"int f() {"), Err(LexError::UnbalancedBraces { .. })));
    assert!(matches!(tokenize(b"}"), Err(LexError::UnbalancedBraces { line: 1 })));
    assert!(matches!(tokenize(b"int x; /* open"), Err(LexError::UnterminatedComment { line: 1 })));
    assert!(matches!(tokenize(b"\nchar *s = \"abc;\n"), Err(LexError::UnterminatedLiteral { line: 2 })));
}
