//! Extractor properties over generated programs. Programs come from a small
//! statement grammar; a direct walk of the generated syntax tree is the
//! reference for what the token scanner must report.

use flagsel_core::{extract_features, FeatureVector, DEFAULT_NONDET_PREFIX};
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Cond {
    One,
    True,
    Var,
    Nondet,
}

#[derive(Debug, Clone)]
enum Stmt {
    Assign,
    NondetAssign,
    For(Vec<Stmt>),
    While(Cond, Vec<Stmt>),
    Do(Vec<Stmt>, Cond),
    If(Cond, Vec<Stmt>, Option<Vec<Stmt>>),
}

fn cond() -> impl Strategy<Value = Cond> {
    prop_oneof![Just(Cond::One), Just(Cond::True), Just(Cond::Var), Just(Cond::Nondet)]
}

fn stmt() -> impl Strategy<Value = Stmt> {
    let leaf = prop_oneof![3 => Just(Stmt::Assign), 1 => Just(Stmt::NondetAssign)];
    leaf.prop_recursive(5, 40, 4, |inner| {
        let block = prop::collection::vec(inner, 0..4);
        prop_oneof![
            block.clone().prop_map(Stmt::For),
            (cond(), block.clone()).prop_map(|(c, b)| Stmt::While(c, b)),
            (block.clone(), cond()).prop_map(|(b, c)| Stmt::Do(b, c)),
            (cond(), block.clone(), prop::option::of(block)).prop_map(|(c, t, e)| Stmt::If(c, t, e)),
        ]
    })
}

fn program() -> impl Strategy<Value = Vec<Stmt>> {
    prop::collection::vec(stmt(), 0..5)
}

fn push_all(out: &mut Vec<String>, toks: &[&str]) {
    out.extend(toks.iter().map(|t| t.to_string()));
}

fn render_cond(c: &Cond, out: &mut Vec<String>) {
    match c {
        Cond::One => push_all(out, &["1"]),
        Cond::True => push_all(out, &["true"]),
        Cond::Var => push_all(out, &["x", "<", "3"]),
        Cond::Nondet => push_all(out, &["__VERIFIER_nondet_int", "(", ")"]),
    }
}

fn render_block(b: &[Stmt], out: &mut Vec<String>) {
    out.push("{".into());
    for s in b {
        render(s, out);
    }
    out.push("}".into());
}

fn render(s: &Stmt, out: &mut Vec<String>) {
    match s {
        Stmt::Assign => push_all(out, &["x", "=", "x", "+", "1", ";"]),
        Stmt::NondetAssign => push_all(out, &["x", "=", "__VERIFIER_nondet_int", "(", ")", ";"]),
        Stmt::For(b) => {
            push_all(out, &["for", "(", "int", "i", "=", "0", ";", "i", "<", "3", ";", "i", "++", ")"]);
            render_block(b, out);
        }
        Stmt::While(c, b) => {
            push_all(out, &["while", "("]);
            render_cond(c, out);
            out.push(")".into());
            render_block(b, out);
        }
        Stmt::Do(b, c) => {
            out.push("do".into());
            render_block(b, out);
            push_all(out, &["while", "("]);
            render_cond(c, out);
            push_all(out, &[")", ";"]);
        }
        Stmt::If(c, t, e) => {
            push_all(out, &["if", "("]);
            render_cond(c, out);
            out.push(")".into());
            render_block(t, out);
            if let Some(e) = e {
                out.push("else".into());
                render_block(e, out);
            }
        }
    }
}

fn program_tokens(body: &[Stmt], wrap_in_while: bool) -> Vec<String> {
    let mut out = Vec::new();
    push_all(&mut out, &["extern", "int", "__VERIFIER_nondet_int", "(", "void", ")", ";"]);
    push_all(&mut out, &["int", "main", "(", "void", ")", "{", "int", "x", "=", "0", ";"]);
    if wrap_in_while {
        push_all(&mut out, &["while", "(", "1", ")", "{"]);
    }
    for s in body {
        render(s, &mut out);
    }
    if wrap_in_while {
        out.push("}".into());
    }
    push_all(&mut out, &["return", "x", ";", "}"]);
    out
}

/// Reference counts from the syntax tree.
#[derive(Default)]
struct Walk {
    fors: Vec<u32>,
    whiles: Vec<u32>,
    while_inf: u32,
    while_inf_nondet: u32,
    dos: Vec<u32>,
    do_inf: u32,
    ifs: Vec<u32>,
    nested_if: u32,
    elses: Vec<u32>,
    nondet: Vec<u32>,
    nondet_in_loop: bool,
}

fn infinite(c: &Cond) -> bool {
    matches!(c, Cond::One | Cond::True)
}

fn has_nondet(c: &Cond) -> bool {
    matches!(c, Cond::Nondet)
}

fn contains_nondet(b: &[Stmt]) -> bool {
    b.iter().any(|s| match s {
        Stmt::Assign => false,
        Stmt::NondetAssign => true,
        Stmt::For(b) => contains_nondet(b),
        Stmt::While(c, b) | Stmt::Do(b, c) => has_nondet(c) || contains_nondet(b),
        Stmt::If(c, t, e) => has_nondet(c) || contains_nondet(t) || e.as_deref().is_some_and(contains_nondet),
    })
}

impl Walk {
    fn call(&mut self, depth: u32, loops: u32) {
        self.nondet.push(depth);
        if loops > 0 {
            self.nondet_in_loop = true;
        }
    }

    /// `depth`, `ifs` and `loops` count the constructs around `b`.
    fn block(&mut self, b: &[Stmt], depth: u32, ifs: u32, loops: u32) {
        for s in b {
            self.stmt(s, depth, ifs, loops);
        }
    }

    fn stmt(&mut self, s: &Stmt, depth: u32, ifs: u32, loops: u32) {
        let d = depth + 1;
        match s {
            Stmt::Assign => {}
            Stmt::NondetAssign => self.call(depth, loops),
            Stmt::For(b) => {
                self.fors.push(d);
                self.block(b, d, ifs, loops + 1);
            }
            Stmt::While(c, b) => {
                self.whiles.push(d);
                if has_nondet(c) {
                    self.call(d, loops + 1);
                }
                if infinite(c) {
                    self.while_inf += 1;
                    if contains_nondet(b) {
                        self.while_inf_nondet += 1;
                    }
                }
                self.block(b, d, ifs, loops + 1);
            }
            Stmt::Do(b, c) => {
                self.dos.push(d);
                self.block(b, d, ifs, loops + 1);
                if has_nondet(c) {
                    self.call(d, loops + 1);
                }
                if infinite(c) {
                    self.do_inf += 1;
                }
            }
            Stmt::If(c, t, e) => {
                self.ifs.push(d);
                if ifs >= 1 {
                    self.nested_if += 1;
                }
                if has_nondet(c) {
                    self.call(d, loops);
                }
                self.block(t, d, ifs + 1, loops);
                if let Some(e) = e {
                    self.elses.push(d);
                    self.block(e, d, ifs + 1, loops);
                }
            }
        }
    }

    fn vector(&self) -> FeatureVector {
        let max = |v: &[u32]| v.iter().copied().max().unwrap_or(0);
        let avg = |v: &[u32]| if v.is_empty() { 0.0 } else { v.iter().map(|&x| u64::from(x)).sum::<u64>() as f64 / v.len() as f64 };
        FeatureVector {
            for_count: self.fors.len() as u32,
            for_max_depth: max(&self.fors),
            for_depth_avg: avg(&self.fors),
            while_count: self.whiles.len() as u32,
            while_infinite_count: self.while_inf,
            while_max_depth: max(&self.whiles),
            while_depth_avg: avg(&self.whiles),
            while_infinite_with_nondet_count: self.while_inf_nondet,
            do_count: self.dos.len() as u32,
            do_max_depth: max(&self.dos),
            do_depth_avg: avg(&self.dos),
            do_infinite_count: self.do_inf,
            if_count: self.ifs.len() as u32,
            if_max_depth: max(&self.ifs),
            if_depth_avg: avg(&self.ifs),
            nested_if_count: self.nested_if,
            else_count: self.elses.len() as u32,
            else_depth_avg: avg(&self.elses),
            nondet_call_count: self.nondet.len() as u32,
            nondet_call_depth_avg: avg(&self.nondet),
            has_nondet_in_loop: self.nondet_in_loop,
        }
    }
}

fn reference(body: &[Stmt]) -> FeatureVector {
    let mut w = Walk::default();
    w.block(body, 0, 0, 0);
    w.vector()
}

fn features(tokens: &[String], seps: &[&str]) -> FeatureVector {
    let mut text = String::new();
    for (i, t) in tokens.iter().enumerate() {
        text.push_str(t);
        text.push_str(seps[i % seps.len()]);
    }
    extract_features(text.as_bytes(), &[DEFAULT_NONDET_PREFIX]).unwrap()
}

const SEPARATORS: [&str; 6] = [" ", "\n", "\t", " /* for while { */ ", "// if (x) {\n", "  \n\n "];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn scanner_matches_tree_walk(body in program()) {
        let got = features(&program_tokens(&body, false), &[" "]);
        prop_assert_eq!(got, reference(&body));
        prop_assert!(got.check_invariants().is_ok());
    }

    #[test]
    fn wrapping_in_infinite_while(body in program()) {
        let before = features(&program_tokens(&body, false), &[" "]);
        let after = features(&program_tokens(&body, true), &[" "]);
        prop_assert_eq!(after.while_count, before.while_count + 1);
        prop_assert_eq!(after.while_infinite_count, before.while_infinite_count + 1);
        let pairs = [
            (before.for_count, before.for_max_depth, after.for_max_depth),
            (before.while_count, before.while_max_depth, after.while_max_depth),
            (before.do_count, before.do_max_depth, after.do_max_depth),
            (before.if_count, before.if_max_depth, after.if_max_depth),
        ];
        for (count, b, a) in pairs {
            if count > 0 {
                prop_assert_eq!(a, b + 1);
            }
        }
        if before.while_count == 0 {
            prop_assert_eq!(after.while_max_depth, 1);
        }
    }

    #[test]
    fn comments_and_whitespace_do_not_matter(
        body in program(),
        picks in prop::collection::vec(0..SEPARATORS.len(), 1..8),
    ) {
        let tokens = program_tokens(&body, false);
        let seps: Vec<&str> = picks.iter().map(|&i| SEPARATORS[i]).collect();
        prop_assert_eq!(features(&tokens, &seps), features(&tokens, &[" "]));
    }
}
