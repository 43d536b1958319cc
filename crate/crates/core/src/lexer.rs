//! A forgiving C tokenizer.
//!
//! This is not a conforming C lexer: it does not expand macros, handle
//! trigraphs or digraphs, or validate literals. It exists so that the
//! structural scanner in [`crate::features`] sees keywords and braces
//! only where the program really has them, never inside comments, string
//! literals, character literals or preprocessor lines.

use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Identifier,
    Keyword,
    Punctuator,
    Number,
    StringLiteral,
    CharLiteral,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    /// 1-based source line of the first byte of the token.
    pub line: u32,
}

impl Token {
    pub fn is_keyword(&self, kw: &str) -> bool {
        self.kind == TokenKind::Keyword && self.lexeme == kw
    }

    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punctuator && self.lexeme == p
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexError {
    #[error("unbalanced braces at line {line}")]
    UnbalancedBraces { line: u32 },
    #[error("unterminated comment starting at line {line}")]
    UnterminatedComment { line: u32 },
    #[error("unterminated literal starting at line {line}")]
    UnterminatedLiteral { line: u32 },
}

/// C11 keywords plus the common GNU spellings.
const KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else", "enum",
    "extern", "float", "for", "goto", "if", "inline", "int", "long", "register", "restrict",
    "return", "short", "signed", "sizeof", "static", "struct", "switch", "typedef", "union",
    "unsigned", "void", "volatile", "while", "_Alignas", "_Alignof", "_Atomic", "_Bool",
    "_Complex", "_Generic", "_Imaginary", "_Noreturn", "_Static_assert", "_Thread_local",
    "__asm__", "__attribute__", "__extension__", "__inline", "__inline__", "__restrict",
    "__restrict__", "__typeof__", "__volatile__", "asm", "typeof",
];

const PUNCT3: &[&str] = &["...", "<<=", ">>="];
const PUNCT2: &[&str] = &[
    "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "*=", "/=", "%=", "+=", "-=",
    "&=", "^=", "|=", "##",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

/// Tokenize C source text.
///
/// Comments, the bodies of string/char literals and whole preprocessor
/// lines (including backslash continuations) never produce keyword or
/// punctuator tokens. Fails if a comment or literal is left open, or if
/// `{`/`}` do not balance.
pub fn tokenize(source: &[u8]) -> Result<Vec<Token>, LexError> {
    let mut lx = Lexer {
        src: source,
        pos: 0,
        line: 1,
        at_line_start: true,
        tokens: Vec::new(),
    };
    lx.run()?;

    let mut depth: i64 = 0;
    for tok in &lx.tokens {
        if tok.is_punct("{") {
            depth += 1;
        } else if tok.is_punct("}") {
            depth -= 1;
            if depth < 0 {
                return Err(LexError::UnbalancedBraces { line: tok.line });
            }
        }
    }
    if depth != 0 {
        return Err(LexError::UnbalancedBraces { line: lx.line });
    }
    Ok(lx.tokens)
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    at_line_start: bool,
    tokens: Vec<Token>,
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_' || b == b'$' || b >= 0x80
}

fn is_ident_continue(b: u8) -> bool {
    is_ident_start(b) || b.is_ascii_digit()
}

impl<'a> Lexer<'a> {
    fn peek(&self, off: usize) -> Option<u8> {
        self.src.get(self.pos + off).copied()
    }

    fn advance(&mut self) -> u8 {
        let b = self.src[self.pos];
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
        }
        b
    }

    fn push(&mut self, kind: TokenKind, start: usize, line: u32) {
        let lexeme = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
        self.tokens.push(Token { kind, lexeme, line });
        self.at_line_start = false;
    }

    fn run(&mut self) -> Result<(), LexError> {
        while let Some(b) = self.peek(0) {
            match b {
                b'\n' => {
                    self.advance();
                    self.at_line_start = true;
                }
                b' ' | b'\t' | b'\r' | 0x0b | 0x0c => {
                    self.advance();
                }
                b'\\' if self.continuation_len() > 0 => {
                    let n = self.continuation_len();
                    for _ in 0..n {
                        self.advance();
                    }
                }
                b'/' if self.peek(1) == Some(b'/') => self.line_comment(),
                b'/' if self.peek(1) == Some(b'*') => self.block_comment()?,
                b'#' if self.at_line_start => self.directive()?,
                b'"' => {
                    let (start, line) = (self.pos, self.line);
                    self.quoted(b'"')?;
                    self.push(TokenKind::StringLiteral, start, line);
                }
                b'\'' => {
                    let (start, line) = (self.pos, self.line);
                    self.quoted(b'\'')?;
                    self.push(TokenKind::CharLiteral, start, line);
                }
                b if b.is_ascii_digit() => self.number(),
                b'.' if self.peek(1).is_some_and(|c| c.is_ascii_digit()) => self.number(),
                b if is_ident_start(b) => self.word()?,
                _ => self.punctuator(),
            }
        }
        Ok(())
    }

    /// Length of a backslash-newline sequence at the cursor, 0 if none.
    fn continuation_len(&self) -> usize {
        match (self.peek(0), self.peek(1), self.peek(2)) {
            (Some(b'\\'), Some(b'\n'), _) => 2,
            (Some(b'\\'), Some(b'\r'), Some(b'\n')) => 3,
            _ => 0,
        }
    }

    fn line_comment(&mut self) {
        while let Some(b) = self.peek(0) {
            if b == b'\n' {
                break;
            }
            let n = self.continuation_len();
            if n > 0 {
                for _ in 0..n {
                    self.advance();
                }
                continue;
            }
            self.advance();
        }
    }

    fn block_comment(&mut self) -> Result<(), LexError> {
        let line = self.line;
        self.advance();
        self.advance();
        loop {
            match self.peek(0) {
                None => return Err(LexError::UnterminatedComment { line }),
                Some(b'*') if self.peek(1) == Some(b'/') => {
                    self.advance();
                    self.advance();
                    return Ok(());
                }
                Some(_) => {
                    self.advance();
                }
            }
        }
    }

    /// Skip a preprocessor line. Comments and literals inside it are
    /// honoured so that `"/*"` or a multi-line comment cannot desync us.
    fn directive(&mut self) -> Result<(), LexError> {
        while let Some(b) = self.peek(0) {
            match b {
                b'\n' => break,
                b'\\' if self.continuation_len() > 0 => {
                    let n = self.continuation_len();
                    for _ in 0..n {
                        self.advance();
                    }
                }
                b'/' if self.peek(1) == Some(b'/') => self.line_comment(),
                b'/' if self.peek(1) == Some(b'*') => self.block_comment()?,
                b'"' => self.quoted(b'"')?,
                // `#include <a'b.h>` and `#error don't` are legal; an
                // apostrophe in a directive is not treated as a literal.
                _ => {
                    self.advance();
                }
            }
        }
        Ok(())
    }

    fn quoted(&mut self, close: u8) -> Result<(), LexError> {
        let line = self.line;
        self.advance();
        loop {
            match self.peek(0) {
                None | Some(b'\n') => return Err(LexError::UnterminatedLiteral { line }),
                Some(b'\\') => {
                    self.advance();
                    if self.peek(0).is_some() {
                        // escaped char, or a line continuation
                        if self.peek(0) == Some(b'\r') && self.peek(1) == Some(b'\n') {
                            self.advance();
                        }
                        self.advance();
                    }
                }
                Some(b) if b == close => {
                    self.advance();
                    return Ok(());
                }
                Some(_) => {
                    self.advance();
                }
            }
        }
    }

    fn number(&mut self) {
        let (start, line) = (self.pos, self.line);
        self.advance();
        while let Some(b) = self.peek(0) {
            let prev = self.src[self.pos - 1];
            if is_ident_continue(b) || b == b'.' {
                self.advance();
            } else if (b == b'+' || b == b'-') && matches!(prev, b'e' | b'E' | b'p' | b'P') {
                self.advance();
            } else if b == b'\'' && self.peek(1).is_some_and(|c| c.is_ascii_alphanumeric()) {
                // C23 digit separator
                self.advance();
            } else {
                break;
            }
        }
        self.push(TokenKind::Number, start, line);
    }

    fn word(&mut self) -> Result<(), LexError> {
        let (start, line) = (self.pos, self.line);
        while self.peek(0).is_some_and(is_ident_continue) {
            self.advance();
        }
        let word = &self.src[start..self.pos];
        let prefix = matches!(word, b"L" | b"u" | b"U" | b"u8");
        match self.peek(0) {
            Some(b'"') if prefix => {
                self.quoted(b'"')?;
                self.push(TokenKind::StringLiteral, start, line);
            }
            Some(b'\'') if prefix => {
                self.quoted(b'\'')?;
                self.push(TokenKind::CharLiteral, start, line);
            }
            _ => {
                let kind = match core::str::from_utf8(word) {
                    Ok(w) if is_keyword(w) => TokenKind::Keyword,
                    _ => TokenKind::Identifier,
                };
                self.push(kind, start, line);
            }
        }
        Ok(())
    }

    fn punctuator(&mut self) {
        let (start, line) = (self.pos, self.line);
        let rest = &self.src[self.pos..];
        let len = if PUNCT3.iter().any(|p| rest.starts_with(p.as_bytes())) {
            3
        } else if PUNCT2.iter().any(|p| rest.starts_with(p.as_bytes())) {
            2
        } else {
            // Multi-byte UTF-8 never reaches here (bytes >= 0x80 are
            // identifier bytes), so one byte is one character.
            1
        };
        for _ in 0..len {
            self.advance();
        }
        self.push(TokenKind::Punctuator, start, line);
    }
}
