//! Structural profile of a C translation unit.
//!
//! The scanner walks the token stream with a small statement-level
//! recursive descent. It recognises `for`, `while`, `do`, `if`/`else`,
//! compound blocks and plain statements (anything up to `;`), which is all
//! that is needed to count constructs and their nesting.
//!
//! Conventions:
//!
//! * The depth of a construct is its 1-based nesting level counting every
//!   enclosing `for`/`while`/`do`/`if`. An `else` has the depth of its `if`
//!   and its body is enclosed by that `if`, so `else if` is an `else`
//!   holding a nested `if`.
//! * `nested_if_count` counts `if`s that sit inside at least one other
//!   `if`/`else` (loops in between do not matter).
//! * A loop is infinite when its condition is empty, a single nonzero
//!   integer literal or the identifier `true`. A `do` loop uses its trailing
//!   `while (...)`. No constant folding.
//! * A nondet call is an identifier starting with one of the configured
//!   prefixes, followed by `(`, that is not being declared. Its depth is
//!   the number of enclosing constructs (conditions count as enclosed by
//!   their construct), so a call at function level has depth 0.
//! * A brace-less body is the next single statement.
//!
//! Macros are not expanded; loops hidden behind a macro are invisible.

use alloc::vec::Vec;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::lexer::{tokenize, LexError, Token, TokenKind};

pub const DEFAULT_NONDET_PREFIX: &str = "__VERIFIER_nondet";

pub const FEATURE_COUNT: usize = 21;

/// Serialization order of [`FeatureVector`], shared by the JSON object and
/// the numeric array handed to the models.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "for_count",
    "for_max_depth",
    "for_depth_avg",
    "while_count",
    "while_infinite_count",
    "while_max_depth",
    "while_depth_avg",
    "while_infinite_with_nondet_count",
    "do_count",
    "do_max_depth",
    "do_depth_avg",
    "do_infinite_count",
    "if_count",
    "if_max_depth",
    "if_depth_avg",
    "nested_if_count",
    "else_count",
    "else_depth_avg",
    "nondet_call_count",
    "nondet_call_depth_avg",
    "has_nondet_in_loop",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureVector {
    pub for_count: u32,
    pub for_max_depth: u32,
    pub for_depth_avg: f64,
    pub while_count: u32,
    pub while_infinite_count: u32,
    pub while_max_depth: u32,
    pub while_depth_avg: f64,
    pub while_infinite_with_nondet_count: u32,
    pub do_count: u32,
    pub do_max_depth: u32,
    pub do_depth_avg: f64,
    pub do_infinite_count: u32,
    pub if_count: u32,
    pub if_max_depth: u32,
    pub if_depth_avg: f64,
    pub nested_if_count: u32,
    pub else_count: u32,
    pub else_depth_avg: f64,
    pub nondet_call_count: u32,
    pub nondet_call_depth_avg: f64,
    #[serde(serialize_with = "bool_as_int", deserialize_with = "int_as_bool")]
    pub has_nondet_in_loop: bool,
}

fn bool_as_int<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u8(u8::from(*v))
}

fn int_as_bool<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
    match u8::deserialize(d)? {
        0 => Ok(false),
        1 => Ok(true),
        n => Err(serde::de::Error::custom(alloc::format!(
            "has_nondet_in_loop must be 0 or 1, got {n}"
        ))),
    }
}

impl FeatureVector {
    /// The features as numbers, in [`FEATURE_NAMES`] order.
    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        [
            self.for_count as f64,
            self.for_max_depth as f64,
            self.for_depth_avg,
            self.while_count as f64,
            self.while_infinite_count as f64,
            self.while_max_depth as f64,
            self.while_depth_avg,
            self.while_infinite_with_nondet_count as f64,
            self.do_count as f64,
            self.do_max_depth as f64,
            self.do_depth_avg,
            self.do_infinite_count as f64,
            self.if_count as f64,
            self.if_max_depth as f64,
            self.if_depth_avg,
            self.nested_if_count as f64,
            self.else_count as f64,
            self.else_depth_avg,
            self.nondet_call_count as f64,
            self.nondet_call_depth_avg,
            if self.has_nondet_in_loop { 1.0 } else { 0.0 },
        ]
    }

    pub fn loop_count(&self) -> u32 {
        self.for_count + self.while_count + self.do_count
    }

    /// Deepest loop of any kind, 0 when there are no loops.
    pub fn max_loop_depth(&self) -> u32 {
        self.for_max_depth.max(self.while_max_depth).max(self.do_max_depth)
    }

    /// Check the structural invariants every extracted vector satisfies.
    /// Returns the name of the first violated rule.
    pub fn check_invariants(&self) -> Result<(), &'static str> {
        let groups = [
            ("for", self.for_count, self.for_max_depth, self.for_depth_avg),
            ("while", self.while_count, self.while_max_depth, self.while_depth_avg),
            ("do", self.do_count, self.do_max_depth, self.do_depth_avg),
            ("if", self.if_count, self.if_max_depth, self.if_depth_avg),
        ];
        for (name, count, max, avg) in groups {
            if (max == 0) != (count == 0) {
                return Err(name);
            }
            if !(avg >= 0.0 && avg <= max as f64) {
                return Err(name);
            }
            if count >= 1 && avg < 1.0 {
                return Err(name);
            }
            if count == 0 && avg != 0.0 {
                return Err(name);
            }
        }
        if self.while_infinite_count > self.while_count {
            return Err("while_infinite_count");
        }
        if self.while_infinite_with_nondet_count > self.while_infinite_count {
            return Err("while_infinite_with_nondet_count");
        }
        if self.do_infinite_count > self.do_count {
            return Err("do_infinite_count");
        }
        if self.nested_if_count > self.if_count {
            return Err("nested_if_count");
        }
        if self.else_count > self.if_count {
            return Err("else_count");
        }
        if self.else_count == 0 && self.else_depth_avg != 0.0 {
            return Err("else_depth_avg");
        }
        if self.else_count >= 1 && self.else_depth_avg < 1.0 {
            return Err("else_depth_avg");
        }
        if self.nondet_call_count == 0 && self.nondet_call_depth_avg != 0.0 {
            return Err("nondet_call_depth_avg");
        }
        if self.has_nondet_in_loop && (self.nondet_call_count == 0 || self.loop_count() == 0) {
            return Err("has_nondet_in_loop");
        }
        Ok(())
    }
}

/// Tokenize `source` and compute its structural profile.
///
/// `nondet_prefixes` selects which identifiers count as nondet calls; pass
/// `&[DEFAULT_NONDET_PREFIX]` for the usual `__VERIFIER_nondet_*` stubs.
pub fn extract_features(source: &[u8], nondet_prefixes: &[&str]) -> Result<FeatureVector, LexError> {
    let tokens = tokenize(source)?;
    Ok(features_from_tokens(&tokens, nondet_prefixes))
}

pub fn features_from_tokens(tokens: &[Token], nondet_prefixes: &[&str]) -> FeatureVector {
    let mut sc = Scanner {
        toks: tokens,
        pos: 0,
        prefixes: nondet_prefixes,
        decl_run: 0,
        decl_open: true,
        tally: Tally::default(),
    };
    let top = Ctx::default();
    while let Some(tok) = sc.peek(0) {
        if tok.is_punct("}") {
            // unreachable for balanced input; keep going rather than stall
            sc.bump(top);
        } else {
            sc.statement(top);
        }
    }
    sc.tally.finish()
}

#[derive(Debug, Clone, Copy, Default)]
struct Ctx {
    /// enclosing for/while/do/if constructs
    depth: u32,
    /// enclosing if/else constructs only
    if_depth: u32,
    /// enclosing loops only
    loop_depth: u32,
}

#[derive(Debug, Default, Clone, Copy)]
struct DepthStat {
    count: u32,
    max: u32,
    sum: u64,
}

impl DepthStat {
    fn record(&mut self, depth: u32) {
        self.count += 1;
        self.max = self.max.max(depth);
        self.sum += u64::from(depth);
    }

    fn avg(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum as f64 / self.count as f64
        }
    }
}

#[derive(Debug, Default)]
struct Tally {
    fors: DepthStat,
    whiles: DepthStat,
    dos: DepthStat,
    ifs: DepthStat,
    elses: DepthStat,
    nondet: DepthStat,
    while_infinite: u32,
    while_infinite_nondet: u32,
    do_infinite: u32,
    nested_if: u32,
    nondet_in_loop: bool,
}

impl Tally {
    fn finish(&self) -> FeatureVector {
        FeatureVector {
            for_count: self.fors.count,
            for_max_depth: self.fors.max,
            for_depth_avg: self.fors.avg(),
            while_count: self.whiles.count,
            while_infinite_count: self.while_infinite,
            while_max_depth: self.whiles.max,
            while_depth_avg: self.whiles.avg(),
            while_infinite_with_nondet_count: self.while_infinite_nondet,
            do_count: self.dos.count,
            do_max_depth: self.dos.max,
            do_depth_avg: self.dos.avg(),
            do_infinite_count: self.do_infinite,
            if_count: self.ifs.count,
            if_max_depth: self.ifs.max,
            if_depth_avg: self.ifs.avg(),
            nested_if_count: self.nested_if,
            else_count: self.elses.count,
            else_depth_avg: self.elses.avg(),
            nondet_call_count: self.nondet.count,
            nondet_call_depth_avg: self.nondet.avg(),
            has_nondet_in_loop: self.nondet_in_loop,
        }
    }
}

struct Scanner<'t, 'p> {
    toks: &'t [Token],
    pos: usize,
    prefixes: &'p [&'p str],
    /// Tokens consumed since the statement began while it still looks like
    /// a declaration prefix (`int`, `unsigned long`, `T *`, ...).
    decl_run: u32,
    decl_open: bool,
    tally: Tally,
}

fn is_construct_keyword(tok: &Token) -> bool {
    tok.kind == TokenKind::Keyword && matches!(tok.lexeme.as_str(), "for" | "while" | "do" | "if" | "else")
}

impl<'t, 'p> Scanner<'t, 'p> {
    fn peek(&self, off: usize) -> Option<&'t Token> {
        self.toks.get(self.pos + off)
    }

    fn peek_punct(&self, p: &str) -> bool {
        self.peek(0).is_some_and(|t| t.is_punct(p))
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        self.peek(0).is_some_and(|t| t.is_keyword(kw))
    }

    fn start_statement(&mut self) {
        self.decl_run = 0;
        self.decl_open = true;
    }

    /// Consume one token, noting nondet calls at the depth of `ctx`.
    fn bump(&mut self, ctx: Ctx) {
        let Some(tok) = self.peek(0) else { return };
        if tok.kind == TokenKind::Identifier
            && self.peek(1).is_some_and(|n| n.is_punct("("))
            && self.prefixes.iter().any(|p| !p.is_empty() && tok.lexeme.starts_with(p))
        {
            let declared = self.decl_open && self.decl_run > 0;
            if !declared {
                self.tally.nondet.record(ctx.depth);
                if ctx.loop_depth > 0 {
                    self.tally.nondet_in_loop = true;
                }
            }
        }
        let keeps_decl = match tok.kind {
            TokenKind::Identifier => true,
            TokenKind::Keyword => !matches!(tok.lexeme.as_str(), "return" | "sizeof" | "case" | "goto"),
            TokenKind::Punctuator => tok.lexeme == "*",
            _ => false,
        };
        if keeps_decl {
            self.decl_run += 1;
        } else {
            self.decl_open = false;
        }
        self.pos += 1;
    }

    fn statement(&mut self, ctx: Ctx) {
        self.start_statement();
        self.skip_labels(ctx);
        let Some(tok) = self.peek(0) else { return };
        match (tok.kind, tok.lexeme.as_str()) {
            (TokenKind::Keyword, "for") => self.for_loop(ctx),
            (TokenKind::Keyword, "while") => self.while_loop(ctx),
            (TokenKind::Keyword, "do") => self.do_loop(ctx),
            (TokenKind::Keyword, "if") => self.if_statement(ctx),
            (TokenKind::Keyword, "else") => {
                // orphan else; scan its body as a plain statement
                self.bump(ctx);
                self.body(ctx);
            }
            (TokenKind::Punctuator, "{") => self.block(ctx),
            (TokenKind::Punctuator, "}") => {}
            (TokenKind::Punctuator, ";") => self.bump(ctx),
            _ => self.simple(ctx),
        }
    }

    fn skip_labels(&mut self, ctx: Ctx) {
        loop {
            let Some(tok) = self.peek(0) else { return };
            if tok.is_keyword("case") {
                self.bump(ctx);
                while let Some(t) = self.peek(0) {
                    if t.is_punct(":") {
                        self.bump(ctx);
                        break;
                    }
                    if t.is_punct("(") {
                        self.paren_group(ctx);
                    } else if t.is_punct(";") || t.is_punct("{") || t.is_punct("}") {
                        break;
                    } else {
                        self.bump(ctx);
                    }
                }
            } else if (tok.is_keyword("default") || tok.kind == TokenKind::Identifier)
                && self.peek(1).is_some_and(|t| t.is_punct(":"))
            {
                self.bump(ctx);
                self.bump(ctx);
            } else {
                return;
            }
            self.start_statement();
        }
    }

    /// Body of a construct: one statement, possibly a block. Empty when the
    /// construct is cut off by `}` or end of input.
    fn body(&mut self, ctx: Ctx) {
        match self.peek(0) {
            None => {}
            Some(t) if t.is_punct("}") => {}
            Some(_) => self.statement(ctx),
        }
    }

    fn block(&mut self, ctx: Ctx) {
        self.bump(ctx);
        while let Some(tok) = self.peek(0) {
            if tok.is_punct("}") {
                self.bump(ctx);
                return;
            }
            self.statement(ctx);
        }
    }

    /// Consume a parenthesised group starting at `(` and return the index
    /// range of its contents. Returns an empty range if there is no `(`.
    fn paren_group(&mut self, ctx: Ctx) -> (usize, usize) {
        if !self.peek_punct("(") {
            return (self.pos, self.pos);
        }
        self.bump(ctx);
        let start = self.pos;
        let mut parens = 1u32;
        let mut braces = 0u32;
        while let Some(tok) = self.peek(0) {
            if tok.kind == TokenKind::Punctuator {
                match tok.lexeme.as_str() {
                    "(" => parens += 1,
                    ")" => {
                        parens -= 1;
                        if parens == 0 {
                            let end = self.pos;
                            self.bump(ctx);
                            return (start, end);
                        }
                    }
                    "{" => braces += 1,
                    "}" => {
                        if braces == 0 {
                            return (start, self.pos);
                        }
                        braces -= 1;
                    }
                    _ => {}
                }
            }
            self.bump(ctx);
        }
        (start, self.pos)
    }

    /// Everything that is not a construct or block: scan to `;`.
    fn simple(&mut self, ctx: Ctx) {
        while let Some(tok) = self.peek(0) {
            if is_construct_keyword(tok) {
                return;
            }
            match (tok.kind, tok.lexeme.as_str()) {
                (TokenKind::Punctuator, ";") => {
                    self.bump(ctx);
                    return;
                }
                (TokenKind::Punctuator, "}") => return,
                (TokenKind::Punctuator, "(") => {
                    self.paren_group(ctx);
                }
                (TokenKind::Punctuator, "{") => {
                    let after_paren = self.pos > 0 && self.toks[self.pos - 1].is_punct(")");
                    self.block(ctx);
                    self.decl_open = false;
                    // `f(...) { ... }` is a function body and ends here;
                    // `struct S { ... } s;` and `= { ... };` continue to `;`.
                    if after_paren {
                        return;
                    }
                }
                _ => self.bump(ctx),
            }
        }
    }

    fn enter(ctx: Ctx, is_loop: bool, is_if: bool) -> Ctx {
        Ctx {
            depth: ctx.depth + 1,
            if_depth: ctx.if_depth + u32::from(is_if),
            loop_depth: ctx.loop_depth + u32::from(is_loop),
        }
    }

    fn for_loop(&mut self, ctx: Ctx) {
        let inner = Self::enter(ctx, true, false);
        self.tally.fors.record(inner.depth);
        self.bump(inner);
        self.paren_group(inner);
        self.body(inner);
    }

    fn while_loop(&mut self, ctx: Ctx) {
        let inner = Self::enter(ctx, true, false);
        self.tally.whiles.record(inner.depth);
        let calls_before = self.tally.nondet.count;
        self.bump(inner);
        let cond = self.paren_group(inner);
        let infinite = self.is_infinite(cond);
        self.body(inner);
        if infinite {
            self.tally.while_infinite += 1;
            if self.tally.nondet.count > calls_before {
                self.tally.while_infinite_nondet += 1;
            }
        }
    }

    fn do_loop(&mut self, ctx: Ctx) {
        let inner = Self::enter(ctx, true, false);
        self.tally.dos.record(inner.depth);
        self.bump(inner);
        self.body(inner);
        if self.peek_keyword("while") {
            self.bump(inner);
            let cond = self.paren_group(inner);
            if self.is_infinite(cond) {
                self.tally.do_infinite += 1;
            }
            if self.peek_punct(";") {
                self.bump(inner);
            }
        }
    }

    fn if_statement(&mut self, ctx: Ctx) {
        let inner = Self::enter(ctx, false, true);
        self.tally.ifs.record(inner.depth);
        if inner.if_depth >= 2 {
            self.tally.nested_if += 1;
        }
        self.bump(inner);
        self.paren_group(inner);
        self.body(inner);
        if self.peek_keyword("else") {
            self.tally.elses.record(inner.depth);
            self.bump(inner);
            self.body(inner);
        }
    }

    fn is_infinite(&self, (start, end): (usize, usize)) -> bool {
        match &self.toks[start..end] {
            [] => true,
            [tok] => match tok.kind {
                TokenKind::Number => is_nonzero_integer_literal(&tok.lexeme),
                TokenKind::Identifier => tok.lexeme == "true",
                _ => false,
            },
            _ => false,
        }
    }
}

/// `1`, `0x10`, `07`, `1u`, `5UL`, `0b1`... but not `0`, `1.0` or `1e3`.
pub fn is_nonzero_integer_literal(lexeme: &str) -> bool {
    let body = lexeme.trim_end_matches(['u', 'U', 'l', 'L']);
    let (digits, radix) = if let Some(h) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        (h, 16)
    } else if let Some(b) = body.strip_prefix("0b").or_else(|| body.strip_prefix("0B")) {
        (b, 2)
    } else if body.len() > 1 && body.starts_with('0') {
        (&body[1..], 8)
    } else {
        (body, 10)
    };
    let digits: Vec<char> = digits.chars().filter(|&c| c != '\'').collect();
    !digits.is_empty()
        && digits.iter().all(|c| c.is_digit(radix))
        && digits.iter().any(|&c| c != '0')
}
