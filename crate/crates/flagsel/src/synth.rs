//! Seeded generator of small, structurally varied C programs for
//! exercising campaigns and models without a real benchmark corpus.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use flagsel_core::TaskType;

use crate::manifest::{write_manifest, BenchmarkEntry};
use crate::{Error, Result};

/// Shape knobs drawn once per program so that programs differ in
/// character, not only in detail.
#[derive(Debug, Clone, Copy)]
struct Profile {
    loop_p: f64,
    if_p: f64,
    nondet_p: f64,
    max_depth: u32,
}

struct Gen {
    rng: ChaCha8Rng,
    profile: Profile,
    out: String,
}

impl Gen {
    fn line(&mut self, indent: usize, text: &str) {
        for _ in 0..indent {
            self.out.push_str("    ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn cond(&mut self) -> String {
        let vars = ["a", "b", "c", "n"];
        let v = vars[self.rng.gen_range(0..vars.len())];
        match self.rng.gen_range(0..3) {
            0 => format!("{v} > {}", self.rng.gen_range(0..20)),
            1 => format!("{v} % {} == 0", self.rng.gen_range(2..5)),
            _ => format!("{v} != b"),
        }
    }

    fn simple(&mut self, indent: usize) {
        if self.rng.gen_bool(self.profile.nondet_p) {
            let kind = ["int", "uint", "char"][self.rng.gen_range(0..3)];
            let text = format!("a = __VERIFIER_nondet_{kind}();");
            self.line(indent, &text);
        } else {
            let text = match self.rng.gen_range(0..3) {
                0 => format!("b = b + {};", self.rng.gen_range(1..9)),
                1 => "c = a * 2 - b;".to_string(),
                _ => "n = n - 1;".to_string(),
            };
            self.line(indent, &text);
        }
    }

    fn block(&mut self, indent: usize, depth: u32, statements: usize) {
        for _ in 0..statements {
            self.statement(indent, depth);
        }
    }

    fn statement(&mut self, indent: usize, depth: u32) {
        let room = depth < self.profile.max_depth;
        if room && self.rng.gen_bool(self.profile.loop_p) {
            let inner = self.rng.gen_range(1..4);
            match self.rng.gen_range(0..4) {
                0 => {
                    let bound = self.rng.gen_range(2..50);
                    self.line(indent, &format!("for (int i{depth} = 0; i{depth} < {bound}; i{depth}++) {{"));
                    self.block(indent + 1, depth + 1, inner);
                    self.line(indent, "}");
                }
                1 => {
                    let c = self.cond();
                    self.line(indent, &format!("while ({c}) {{"));
                    self.block(indent + 1, depth + 1, inner);
                    self.line(indent, "n = n - 1;");
                    self.line(indent, "}");
                }
                2 => {
                    self.line(indent, "while (1) {");
                    self.block(indent + 1, depth + 1, inner);
                    let c = self.cond();
                    self.line(indent + 1, &format!("if ({c}) break;"));
                    self.line(indent, "}");
                }
                _ => {
                    self.line(indent, "do {");
                    self.block(indent + 1, depth + 1, inner);
                    let c = self.cond();
                    self.line(indent, &format!("}} while ({c});"));
                }
            }
        } else if room && self.rng.gen_bool(self.profile.if_p) {
            let c = self.cond();
            if self.rng.gen_bool(0.3) {
                self.line(indent, &format!("if ({c})"));
                self.simple(indent + 1);
                return;
            }
            self.line(indent, &format!("if ({c}) {{"));
            let inner = self.rng.gen_range(1..3);
            self.block(indent + 1, depth + 1, inner);
            if self.rng.gen_bool(0.5) {
                self.line(indent, "} else {");
                self.block(indent + 1, depth + 1, 1);
            }
            self.line(indent, "}");
        } else {
            self.simple(indent);
        }
    }

    fn function(&mut self, name: &str) {
        self.line(0, &format!("int {name}(int a, int b) {{"));
        self.line(1, "int c = 0;");
        self.line(1, "int n = 100;");
        let top = self.rng.gen_range(2..7);
        self.block(1, 0, top);
        self.line(1, "return c;");
        self.line(0, "}");
    }
}

fn generator(seed: u64) -> Gen {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profile = Profile {
        loop_p: rng.gen_range(0.0..0.6),
        if_p: rng.gen_range(0.1..0.6),
        nondet_p: rng.gen_range(0.0..0.5),
        max_depth: rng.gen_range(1..5),
    };
    Gen { rng, profile, out: String::new() }
}

const PRELUDE: &str = "extern int __VERIFIER_nondet_int(void);\n\
                       extern unsigned __VERIFIER_nondet_uint(void);\n\
                       extern char __VERIFIER_nondet_char(void);\n";

/// One program with a single `main`.
pub fn synth_program(seed: u64) -> String {
    let mut g = generator(seed);
    let _ = writeln!(g.out, "/* synthetic program {seed} */");
    g.out.push_str(PRELUDE);
    g.function("main");
    g.out
}

/// A program of at least `min_lines` lines, built from many functions.
pub fn synth_program_lines(min_lines: usize, seed: u64) -> String {
    let mut g = generator(seed);
    g.out.push_str(PRELUDE);
    let mut k = 0;
    while g.out.lines().count() < min_lines {
        g.function(&format!("f{k}"));
        k += 1;
    }
    g.out
}

/// Write `count` synthetic programs plus a `manifest.json` into `dir`.
/// Program `i` uses seed `seed + i`; ids are `p0000`, `p0001`, ...
pub fn write_synthetic_corpus(
    dir: &Path,
    count: usize,
    task: TaskType,
    seed: u64,
    time_limit_seconds: f64,
) -> Result<(PathBuf, Vec<BenchmarkEntry>)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(count);
    for i in 0..count {
        let id = format!("p{i:04}");
        let path = dir.join(format!("{id}.c"));
        std::fs::write(&path, synth_program(seed.wrapping_add(i as u64))).map_err(|e| Error::io(&path, e))?;
        entries.push(BenchmarkEntry { id, path, task, time_limit_seconds });
    }
    let manifest = dir.join("manifest.json");
    write_manifest(&manifest, &entries)?;
    Ok((manifest, entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use flagsel_core::{extract_features, DEFAULT_NONDET_PREFIX};

    #[test]
    fn programs_parse_and_vary() {
        let mut distinct = std::collections::HashSet::new();
        for seed in 0..200 {
            let src = synth_program(seed);
            let f = extract_features(src.as_bytes(), &[DEFAULT_NONDET_PREFIX]).unwrap();
            f.check_invariants().unwrap();
            distinct.insert(format!("{:?}", f.to_array()));
        }
        assert!(distinct.len() > 100, "{}", distinct.len());
        assert_eq!(synth_program(7), synth_program(7));
    }

    #[test]
    fn long_programs() {
        let src = synth_program_lines(1000, 3);
        assert!(src.lines().count() >= 1000);
        extract_features(src.as_bytes(), &[DEFAULT_NONDET_PREFIX]).unwrap();
    }
}
