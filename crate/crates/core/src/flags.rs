//! The backend flag space.
//!
//! Seven knobs, enumerated lexicographically in this field order with the
//! values in the listed order:
//!
//! | field          | values                         |
//! |----------------|--------------------------------|
//! | strategy       | incremental, k-induction       |
//! | solver         | boolector, z3                  |
//! | encoding       | floatbv, fixedbv               |
//! | k_step         | 1, 2, 3                        |
//! | context_bound  | 2, 4                           |
//! | unwind         | 10, unlimited                  |
//! | fuzz           | off, on(25), on(83), on(188)   |
//!
//! 2·2·2·3·2·2·4 = 384 configurations. The fuzz on-times are 10%, 33.3% and
//! 75% of a 250 s budget (a 300 s limit minus 50 s reserved), rounded to
//! whole seconds; [`FlagSpace::with_fuzz_budget`] rescales them.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Incremental,
    KInduction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Solver {
    Boolector,
    Z3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Encoding {
    FloatBv,
    FixedBv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Unwind {
    Bounded(u32),
    Unlimited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fuzz {
    Off,
    /// Fuzzer enabled for this many seconds.
    On(u32),
}

impl Fuzz {
    pub fn seconds(self) -> u32 {
        match self {
            Fuzz::Off => 0,
            Fuzz::On(s) => s,
        }
    }
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Incremental => "incremental",
            Strategy::KInduction => "k-induction",
        }
    }
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Boolector => "boolector",
            Solver::Z3 => "z3",
        }
    }
}

impl Encoding {
    pub fn name(self) -> &'static str {
        match self {
            Encoding::FloatBv => "floatbv",
            Encoding::FixedBv => "fixedbv",
        }
    }
}

impl Unwind {
    pub fn name(self) -> String {
        match self {
            Unwind::Bounded(n) => n.to_string(),
            Unwind::Unlimited => "unlimited".into(),
        }
    }
}

impl Fuzz {
    pub fn name(self) -> String {
        match self {
            Fuzz::Off => "off".into(),
            Fuzz::On(s) => s.to_string(),
        }
    }
}

/// One complete assignment of the seven backend options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FlagConfiguration {
    pub strategy: Strategy,
    pub solver: Solver,
    pub encoding: Encoding,
    pub k_step: u32,
    pub context_bound: u32,
    pub unwind: Unwind,
    pub fuzz: Fuzz,
}

/// Canonical text form, e.g.
/// `strategy=incremental;solver=boolector;encoding=floatbv;kstep=1;ctx=2;unwind=10;fuzz=off`.
impl fmt::Display for FlagConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "strategy={};solver={};encoding={};kstep={};ctx={};unwind={};fuzz={}",
            self.strategy.name(),
            self.solver.name(),
            self.encoding.name(),
            self.k_step,
            self.context_bound,
            self.unwind.name(),
            self.fuzz.name()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FlagError {
    #[error("malformed flag text `{0}`")]
    Malformed(String),
    #[error("unknown value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("backend argument map has no template for `{0}`")]
    MappingIncomplete(&'static str),
    #[error("configuration index {0} out of range")]
    IndexOutOfRange(usize),
}

impl FromStr for FlagConfiguration {
    type Err = FlagError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        const KEYS: [&str; 7] = ["strategy", "solver", "encoding", "kstep", "ctx", "unwind", "fuzz"];
        let parts: Vec<&str> = s.trim().split(';').collect();
        if parts.len() != KEYS.len() {
            return Err(FlagError::Malformed(s.into()));
        }
        let mut values = [""; 7];
        for (i, part) in parts.iter().enumerate() {
            let (k, v) = part.split_once('=').ok_or_else(|| FlagError::Malformed(s.into()))?;
            if k != KEYS[i] {
                return Err(FlagError::Malformed(s.into()));
            }
            values[i] = v;
        }
        let bad = |i: usize| FlagError::BadValue { key: KEYS[i].into(), value: values[i].into() };
        let strategy = match values[0] {
            "incremental" => Strategy::Incremental,
            "k-induction" => Strategy::KInduction,
            _ => return Err(bad(0)),
        };
        let solver = match values[1] {
            "boolector" => Solver::Boolector,
            "z3" => Solver::Z3,
            _ => return Err(bad(1)),
        };
        let encoding = match values[2] {
            "floatbv" => Encoding::FloatBv,
            "fixedbv" => Encoding::FixedBv,
            _ => return Err(bad(2)),
        };
        let k_step = values[3].parse().map_err(|_| bad(3))?;
        let context_bound = values[4].parse().map_err(|_| bad(4))?;
        let unwind = match values[5] {
            "unlimited" => Unwind::Unlimited,
            v => Unwind::Bounded(v.parse().map_err(|_| bad(5))?),
        };
        let fuzz = match values[6] {
            "off" => Fuzz::Off,
            v => Fuzz::On(v.parse().map_err(|_| bad(6))?),
        };
        Ok(FlagConfiguration { strategy, solver, encoding, k_step, context_bound, unwind, fuzz })
    }
}

impl Serialize for FlagConfiguration {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FlagConfiguration {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The value lists of each knob. The default is the 384-point space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagSpace {
    pub strategies: Vec<Strategy>,
    pub solvers: Vec<Solver>,
    pub encodings: Vec<Encoding>,
    pub k_steps: Vec<u32>,
    pub context_bounds: Vec<u32>,
    pub unwinds: Vec<Unwind>,
    pub fuzz: Vec<Fuzz>,
}

// serde for the knob enums goes through their names so the space can be
// loaded from a config file.
macro_rules! serde_by_name {
    ($ty:ty, $($name:literal => $val:expr),+) => {
        impl Serialize for $ty {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.name())
            }
        }
        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                match s.as_str() {
                    $($name => Ok($val),)+
                    other => Err(serde::de::Error::custom(format!("unknown value `{other}`"))),
                }
            }
        }
    };
}

serde_by_name!(Strategy, "incremental" => Strategy::Incremental, "k-induction" => Strategy::KInduction);
serde_by_name!(Solver, "boolector" => Solver::Boolector, "z3" => Solver::Z3);
serde_by_name!(Encoding, "floatbv" => Encoding::FloatBv, "fixedbv" => Encoding::FixedBv);

impl Serialize for Unwind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for Unwind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "unlimited" => Ok(Unwind::Unlimited),
            v => v.parse().map(Unwind::Bounded).map_err(serde::de::Error::custom),
        }
    }
}

impl Serialize for Fuzz {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for Fuzz {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "off" => Ok(Fuzz::Off),
            v => v.parse().map(Fuzz::On).map_err(serde::de::Error::custom),
        }
    }
}

/// Total time budget the default fuzz on-times are fractions of.
pub const DEFAULT_FUZZ_BUDGET_SECONDS: u32 = 250;
/// Fractions of the budget used for the three fuzz on-times.
pub const FUZZ_BUDGET_FRACTIONS: [f64; 3] = [0.10, 0.333, 0.75];

impl Default for FlagSpace {
    fn default() -> Self {
        Self::with_fuzz_budget(DEFAULT_FUZZ_BUDGET_SECONDS)
    }
}

impl FlagSpace {
    /// The standard space with fuzz on-times derived from `budget_seconds`.
    /// A budget of 250 gives 25, 83 and 188 seconds.
    pub fn with_fuzz_budget(budget_seconds: u32) -> Self {
        let mut fuzz = vec![Fuzz::Off];
        fuzz.extend(
            FUZZ_BUDGET_FRACTIONS
                .iter()
                .map(|f| Fuzz::On(libm::round(f * budget_seconds as f64) as u32)),
        );
        FlagSpace {
            strategies: vec![Strategy::Incremental, Strategy::KInduction],
            solvers: vec![Solver::Boolector, Solver::Z3],
            encodings: vec![Encoding::FloatBv, Encoding::FixedBv],
            k_steps: vec![1, 2, 3],
            context_bounds: vec![2, 4],
            unwinds: vec![Unwind::Bounded(10), Unwind::Unlimited],
            fuzz,
        }
    }

    fn radices(&self) -> [usize; 7] {
        [
            self.strategies.len(),
            self.solvers.len(),
            self.encodings.len(),
            self.k_steps.len(),
            self.context_bounds.len(),
            self.unwinds.len(),
            self.fuzz.len(),
        ]
    }

    pub fn len(&self) -> usize {
        self.radices().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The configuration at canonical index `index` (mixed radix, fuzz
    /// varying fastest).
    pub fn config(&self, index: usize) -> Result<FlagConfiguration, FlagError> {
        if index >= self.len() {
            return Err(FlagError::IndexOutOfRange(index));
        }
        let mut digits = [0usize; 7];
        let mut rest = index;
        for (d, radix) in digits.iter_mut().zip(self.radices()).rev() {
            *d = rest % radix;
            rest /= radix;
        }
        Ok(FlagConfiguration {
            strategy: self.strategies[digits[0]],
            solver: self.solvers[digits[1]],
            encoding: self.encodings[digits[2]],
            k_step: self.k_steps[digits[3]],
            context_bound: self.context_bounds[digits[4]],
            unwind: self.unwinds[digits[5]],
            fuzz: self.fuzz[digits[6]],
        })
    }

    /// Canonical index of `config`, or `None` if it is not in this space.
    pub fn index_of(&self, config: &FlagConfiguration) -> Option<usize> {
        fn pos<T: PartialEq>(values: &[T], v: &T) -> Option<usize> {
            values.iter().position(|x| x == v)
        }
        let digits = [
            pos(&self.strategies, &config.strategy)?,
            pos(&self.solvers, &config.solver)?,
            pos(&self.encodings, &config.encoding)?,
            pos(&self.k_steps, &config.k_step)?,
            pos(&self.context_bounds, &config.context_bound)?,
            pos(&self.unwinds, &config.unwind)?,
            pos(&self.fuzz, &config.fuzz)?,
        ];
        Some(digits.iter().zip(self.radices()).fold(0, |acc, (d, r)| acc * r + d))
    }

    pub fn iter(&self) -> impl Iterator<Item = FlagConfiguration> + '_ {
        (0..self.len()).map(move |i| self.config(i).expect("index in range"))
    }
}

/// All 384 configurations of the default space in canonical order.
pub fn enumerate_flags() -> Vec<FlagConfiguration> {
    FlagSpace::default().iter().collect()
}

/// How one knob becomes command-line tokens.
///
/// `args` is a token template in which `{value}` is replaced by the knob's
/// spelling. The spelling is the canonical value name (`incremental`,
/// `z3`, `10`, `unlimited`, `83`, ...) unless `values` renames it.
/// `overrides` replaces the whole token list for one canonical value.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ArgTemplate {
    pub args: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<String, Vec<String>>,
}

impl ArgTemplate {
    fn simple(flag: &str) -> Self {
        ArgTemplate { args: vec![flag.into(), "{value}".into()], ..Default::default() }
    }

    fn render(&self, canonical: &str) -> Vec<String> {
        if let Some(tokens) = self.overrides.get(canonical) {
            return tokens.clone();
        }
        let spelled = self.values.get(canonical).map(String::as_str).unwrap_or(canonical);
        self.args.iter().map(|a| a.replace("{value}", spelled)).collect()
    }
}

/// Per-knob templates for turning a configuration into backend arguments.
/// Loaded from JSON; a missing knob is only an error when rendering.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendArgMap {
    #[serde(default)]
    pub strategy: Option<ArgTemplate>,
    #[serde(default)]
    pub solver: Option<ArgTemplate>,
    #[serde(default)]
    pub encoding: Option<ArgTemplate>,
    #[serde(default)]
    pub k_step: Option<ArgTemplate>,
    #[serde(default)]
    pub context_bound: Option<ArgTemplate>,
    #[serde(default)]
    pub unwind: Option<ArgTemplate>,
    #[serde(default)]
    pub fuzz: Option<ArgTemplate>,
}

impl BackendArgMap {
    /// The built-in mapping:
    ///
    /// ```text
    /// --strategy incr|kinduction  --solver boolector|z3  --encoding floatbv|fixedbv
    /// --k-step N  --context-bound N  --unwind 10|-1
    /// --fuzz off | --fuzz on --fuzz-time SECONDS
    /// ```
    ///
    /// Unlimited unwinding is passed as the backend's `-1` sentinel.
    pub fn standard() -> Self {
        let mut strategy = ArgTemplate::simple("--strategy");
        strategy.values.insert("incremental".into(), "incr".into());
        strategy.values.insert("k-induction".into(), "kinduction".into());
        let mut unwind = ArgTemplate::simple("--unwind");
        unwind.values.insert("unlimited".into(), "-1".into());
        let mut fuzz = ArgTemplate {
            args: vec!["--fuzz".into(), "on".into(), "--fuzz-time".into(), "{value}".into()],
            ..Default::default()
        };
        fuzz.overrides.insert("off".into(), vec!["--fuzz".into(), "off".into()]);
        BackendArgMap {
            strategy: Some(strategy),
            solver: Some(ArgTemplate::simple("--solver")),
            encoding: Some(ArgTemplate::simple("--encoding")),
            k_step: Some(ArgTemplate::simple("--k-step")),
            context_bound: Some(ArgTemplate::simple("--context-bound")),
            unwind: Some(unwind),
            fuzz: Some(fuzz),
        }
    }

    /// Render `config` as backend command-line tokens, knobs in canonical
    /// field order.
    pub fn to_backend_args(&self, config: &FlagConfiguration) -> Result<Vec<String>, FlagError> {
        fn get<'a>(t: &'a Option<ArgTemplate>, name: &'static str) -> Result<&'a ArgTemplate, FlagError> {
            t.as_ref().ok_or(FlagError::MappingIncomplete(name))
        }
        let parts = [
            (get(&self.strategy, "strategy")?, String::from(config.strategy.name())),
            (get(&self.solver, "solver")?, String::from(config.solver.name())),
            (get(&self.encoding, "encoding")?, String::from(config.encoding.name())),
            (get(&self.k_step, "k_step")?, config.k_step.to_string()),
            (get(&self.context_bound, "context_bound")?, config.context_bound.to_string()),
            (get(&self.unwind, "unwind")?, config.unwind.name()),
            (get(&self.fuzz, "fuzz")?, config.fuzz.name()),
        ];
        Ok(parts.iter().flat_map(|(t, v)| t.render(v)).collect())
    }
}

/// Shorthand for [`BackendArgMap::to_backend_args`].
pub fn to_backend_args(config: &FlagConfiguration, mapping: &BackendArgMap) -> Result<Vec<String>, FlagError> {
    mapping.to_backend_args(config)
}
