//! `key = value` problem files.
//!
//! ```text
//! # worked example, a = 4, b = 3
//! alpha = 0.5
//! f     = (1/4)*((1+abs(x))^(1/4) + (1+abs(y))^(1/4))
//! g     = (1/3)*((1+abs(x))^(1/3) + (1+abs(y))^(1/3))
//! phi   = t/(1+t)
//! rho   = atan(t)
//! k     = 0.25
//! r     = 1/3
//! ```
//!
//! Everything after `#` on a line is a comment. Real-valued keys accept
//! constant expressions such as `1/3`.

use std::fmt::Write as _;

use pantograph::expr;
use pantograph::problem::{
    ProblemError, ProblemSpec, DEFAULT_R0_SEARCH_MAX, DEFAULT_SAMPLE_BUDGET,
};
use pantograph::solver::{SolveError, SolveSettings};
use thiserror::Error;

pub const REQUIRED_KEYS: [&str; 7] = ["alpha", "f", "g", "phi", "rho", "k", "r"];
pub const OPTIONAL_KEYS: [&str; 7] = [
    "r0_search_max",
    "grid_points",
    "tol",
    "max_iter",
    "damping",
    "seed",
    "sample_budget",
];

#[derive(Debug, Error)]
pub enum FileError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("line {line}: bad value for `{key}`: {msg}")]
    BadValue {
        line: usize,
        key: String,
        msg: String,
    },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Settings(#[from] SolveError),
}

/// Everything one invocation needs: the problem, solver settings and RNG seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub spec: ProblemSpec,
    pub settings: SolveSettings,
    pub seed: u64,
}

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

impl Entry<'_> {
    fn bad(&self, msg: impl Into<String>) -> FileError {
        FileError::BadValue {
            line: self.line,
            key: self.key.to_string(),
            msg: msg.into(),
        }
    }

    fn real(&self) -> Result<f64, FileError> {
        let e = expr::parse(self.value, &[]).map_err(|e| self.bad(e.to_string()))?;
        e.eval_slots(&[]).map_err(|e| self.bad(e.to_string()))
    }

    fn integer(&self) -> Result<u64, FileError> {
        self.value
            .parse()
            .map_err(|_| self.bad(format!("`{}` is not a nonnegative integer", self.value)))
    }
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, FileError> {
        let mut entries: Vec<Entry> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(FileError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(FileError::Syntax { line });
            }
            if !REQUIRED_KEYS.contains(&key) && !OPTIONAL_KEYS.contains(&key) {
                return Err(FileError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if entries.iter().any(|e| e.key == key) {
                return Err(FileError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
            entries.push(Entry { line, key, value });
        }
        let find = |key: &str| entries.iter().find(|e| e.key == key);
        for key in REQUIRED_KEYS {
            if find(key).is_none() {
                return Err(FileError::MissingKey(key));
            }
        }
        let required = |key: &str| find(key).expect("checked above");

        let mut spec = ProblemSpec::new(
            required("alpha").real()?,
            required("f").value,
            required("g").value,
            required("phi").value,
            required("rho").value,
            required("k").real()?,
            required("r").real()?,
        )?;
        spec.r0_search_max =
            find("r0_search_max").map_or(Ok(DEFAULT_R0_SEARCH_MAX), Entry::real)?;
        spec.sample_budget = find("sample_budget")
            .map_or(Ok(DEFAULT_SAMPLE_BUDGET as u64), Entry::integer)?
            as usize;
        spec.check_parameters()?;

        let defaults = SolveSettings::default();
        let settings = SolveSettings {
            grid_points: find("grid_points")
                .map_or(Ok(defaults.grid_points as u64), Entry::integer)?
                as usize,
            tol: find("tol").map_or(Ok(defaults.tol), Entry::real)?,
            max_iter: find("max_iter").map_or(Ok(defaults.max_iter as u64), Entry::integer)?
                as usize,
            damping: find("damping").map_or(Ok(defaults.damping), Entry::real)?,
        };
        settings.check()?;
        let seed = find("seed").map_or(Ok(0), Entry::integer)?;
        Ok(ProblemFile {
            spec,
            settings,
            seed,
        })
    }

    /// Renders every key, including defaults, so that parsing the result
    /// gives back the same problem.
    pub fn to_text(&self) -> String {
        let s = &self.spec;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("alpha", format!("{:?}", s.alpha));
        kv("f", s.f.source().to_string());
        kv("g", s.g.source().to_string());
        kv("phi", s.phi.source().to_string());
        kv("rho", s.rho.source().to_string());
        kv("k", format!("{:?}", s.k_exp));
        kv("r", format!("{:?}", s.r_exp));
        kv("r0_search_max", format!("{:?}", s.r0_search_max));
        kv("sample_budget", s.sample_budget.to_string());
        kv("grid_points", self.settings.grid_points.to_string());
        kv("tol", format!("{:?}", self.settings.tol));
        kv("max_iter", self.settings.max_iter.to_string());
        kv("damping", format!("{:?}", self.settings.damping));
        kv("seed", self.seed.to_string());
        out
    }
}
