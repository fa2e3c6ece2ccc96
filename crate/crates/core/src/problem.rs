//! Problem model for
//!
//! ```text
//! D^α [ x(t) / f(t, x(t), x(φ(t))) ] = g(t, x(t), x(ρ(t))),   0 < t < 1,   x(0) = 0
//! ```
//!
//! plus sampling checks of the structural hypotheses on f, φ and ρ.

use std::fmt;

use thiserror::Error;

use crate::expr::{self, EvalError, Expr, ParseError, STATE_VARS, TIME_VARS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("cannot parse `{name}`: {source}")]
    Parse {
        name: &'static str,
        #[source]
        source: ParseError,
    },
    #[error("evaluating `{name}` at {point}: {source}")]
    Eval {
        name: &'static str,
        point: Point,
        #[source]
        source: EvalError,
    },
}

/// An expression together with the text it was parsed from.
#[derive(Debug, Clone, PartialEq)]
pub struct Formula {
    source: String,
    expr: Expr,
}

impl Formula {
    pub fn parse(source: &str, vars: &[&str]) -> Result<Self, ParseError> {
        Ok(Formula {
            source: source.trim().to_string(),
            expr: expr::parse(source, vars)?,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }
}

/// Which function of the problem an expression plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    F,
    G,
    Phi,
    Rho,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::F => "f",
            Role::G => "g",
            Role::Phi => "phi",
            Role::Rho => "rho",
        }
    }
}

/// A sample location; `x`, `y` are absent for functions of `t` alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub t: f64,
    pub x: Option<f64>,
    pub y: Option<f64>,
}

impl Point {
    pub fn time(t: f64) -> Self {
        Point {
            t,
            x: None,
            y: None,
        }
    }

    pub fn state(t: f64, x: f64, y: f64) -> Self {
        Point {
            t,
            x: Some(x),
            y: Some(y),
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.x, self.y) {
            (Some(x), Some(y)) => write!(f, "(t={}, x={x}, y={y})", self.t),
            _ => write!(f, "(t={})", self.t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub alpha: f64,
    pub f: Formula,
    pub g: Formula,
    pub phi: Formula,
    pub rho: Formula,
    /// Exponent bounding the increments of f.
    pub k_exp: f64,
    /// Exponent bounding the increments of g.
    pub r_exp: f64,
    /// Largest ball radius searched for r₀; also the half-width of the sampled (x, y) box.
    pub r0_search_max: f64,
    /// Number of randomized increment trials.
    pub sample_budget: usize,
}

pub const DEFAULT_R0_SEARCH_MAX: f64 = 2.0;
pub const DEFAULT_SAMPLE_BUDGET: usize = 100_000;

fn open_unit(name: &'static str, value: f64) -> Result<(), ProblemError> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(ProblemError::InvalidParameter {
            name,
            value,
            reason: "must lie strictly inside (0, 1)",
        })
    }
}

impl ProblemSpec {
    /// Parses the four expressions and checks the scalar parameters.
    /// `r0_search_max` and `sample_budget` start at their defaults.
    pub fn new(
        alpha: f64,
        f: &str,
        g: &str,
        phi: &str,
        rho: &str,
        k_exp: f64,
        r_exp: f64,
    ) -> Result<Self, ProblemError> {
        let parse = |name: &'static str, src: &str, vars: &[&str]| {
            Formula::parse(src, vars).map_err(|source| ProblemError::Parse { name, source })
        };
        let spec = ProblemSpec {
            alpha,
            f: parse("f", f, &STATE_VARS)?,
            g: parse("g", g, &STATE_VARS)?,
            phi: parse("phi", phi, &TIME_VARS)?,
            rho: parse("rho", rho, &TIME_VARS)?,
            k_exp,
            r_exp,
            r0_search_max: DEFAULT_R0_SEARCH_MAX,
            sample_budget: DEFAULT_SAMPLE_BUDGET,
        };
        spec.check_parameters()?;
        Ok(spec)
    }

    pub fn check_parameters(&self) -> Result<(), ProblemError> {
        open_unit("alpha", self.alpha)?;
        open_unit("k", self.k_exp)?;
        open_unit("r", self.r_exp)?;
        if !(self.r0_search_max > 0.0 && self.r0_search_max.is_finite()) {
            return Err(ProblemError::InvalidParameter {
                name: "r0_search_max",
                value: self.r0_search_max,
                reason: "must be positive and finite",
            });
        }
        Ok(())
    }

    pub fn formula(&self, role: Role) -> &Formula {
        match role {
            Role::F => &self.f,
            Role::G => &self.g,
            Role::Phi => &self.phi,
            Role::Rho => &self.rho,
        }
    }

    pub fn eval_f(&self, t: f64, x: f64, y: f64) -> Result<f64, EvalError> {
        self.f.expr.eval_slots(&[t, x, y])
    }

    pub fn eval_g(&self, t: f64, x: f64, y: f64) -> Result<f64, EvalError> {
        self.g.expr.eval_slots(&[t, x, y])
    }

    pub fn eval_phi(&self, t: f64) -> Result<f64, EvalError> {
        self.phi.expr.eval_slots(&[t])
    }

    pub fn eval_rho(&self, t: f64) -> Result<f64, EvalError> {
        self.rho.expr.eval_slots(&[t])
    }

    pub(crate) fn eval_state(
        &self,
        role: Role,
        t: f64,
        x: f64,
        y: f64,
    ) -> Result<f64, ProblemError> {
        let value = match role {
            Role::F => self.eval_f(t, x, y),
            Role::G => self.eval_g(t, x, y),
            Role::Phi => self.eval_phi(t),
            Role::Rho => self.eval_rho(t),
        };
        value.map_err(|source| ProblemError::Eval {
            name: role.name(),
            point: match role {
                Role::F | Role::G => Point::state(t, x, y),
                Role::Phi | Role::Rho => Point::time(t),
            },
            source,
        })
    }
}

/// Sample counts for the hypothesis checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingPlan {
    /// Points on [0,1] for t.
    pub t_samples: usize,
    /// Points per axis on [−R, R] for x and y.
    pub xy_samples: usize,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan {
            t_samples: 1001,
            xy_samples: 101,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// φ or ρ left [0,1].
    OutOfUnitInterval,
    /// f evaluated to zero.
    Vanishes,
    /// f took both signs, so by continuity it vanishes somewhere between the witnesses.
    ChangesSign,
    /// The expression is undefined at the witness.
    Undefined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub role: Role,
    pub kind: ViolationKind,
    pub witness: Point,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} at {}: {}",
            self.role.name(),
            self.witness,
            self.detail
        )
    }
}

fn axis(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * (i as f64 / (n - 1) as f64))
        .collect()
}

/// Samples φ, ρ on [0,1] and f, g on [0,1]×[−R,R]² with R = `r0_search_max`.
///
/// Reports at most one violation per (function, kind), carrying the first
/// witness in scan order. Axes a formula does not mention are not scanned.
pub fn validate(spec: &ProblemSpec, plan: &SamplingPlan) -> Vec<Violation> {
    let mut out = Vec::new();
    let ts = axis(plan.t_samples.max(2), 0.0, 1.0);

    for role in [Role::Phi, Role::Rho] {
        let mut out_of_range = false;
        for &t in &ts {
            match spec.eval_state(role, t, 0.0, 0.0) {
                Ok(v) if !(0.0..=1.0).contains(&v) => {
                    if !out_of_range {
                        out_of_range = true;
                        out.push(Violation {
                            role,
                            kind: ViolationKind::OutOfUnitInterval,
                            witness: Point::time(t),
                            detail: format!("value {v} is outside [0, 1]"),
                        });
                    }
                }
                Ok(_) => {}
                Err(e) => {
                    out.push(Violation {
                        role,
                        kind: ViolationKind::Undefined,
                        witness: Point::time(t),
                        detail: e.to_string(),
                    });
                    break;
                }
            }
        }
    }

    let r = spec.r0_search_max;
    for role in [Role::F, Role::G] {
        let expr = spec.formula(role).expr();
        let axis_for = |var: &str, full: Vec<f64>| {
            if expr.mentions(var) {
                full
            } else {
                vec![0.0]
            }
        };
        let t_axis = axis_for("t", ts.clone());
        let x_axis = axis_for("x", axis(plan.xy_samples, -r, r));
        let y_axis = axis_for("y", axis(plan.xy_samples, -r, r));

        let mut first_sign: Option<(f64, Point)> = None;
        let mut seen_zero = false;
        let mut seen_flip = false;
        'scan: for &t in &t_axis {
            for &x in &x_axis {
                for &y in &y_axis {
                    let point = Point::state(t, x, y);
                    let v = match spec.eval_state(role, t, x, y) {
                        Ok(v) => v,
                        Err(e) => {
                            out.push(Violation {
                                role,
                                kind: ViolationKind::Undefined,
                                witness: point,
                                detail: e.to_string(),
                            });
                            break 'scan;
                        }
                    };
                    if role != Role::F {
                        continue;
                    }
                    if v == 0.0 {
                        if !seen_zero {
                            seen_zero = true;
                            out.push(Violation {
                                role,
                                kind: ViolationKind::Vanishes,
                                witness: point,
                                detail: "f vanishes".into(),
                            });
                        }
                        continue;
                    }
                    match first_sign {
                        None => first_sign = Some((v.signum(), point)),
                        Some((sign, origin)) if sign != v.signum() && !seen_flip => {
                            seen_flip = true;
                            out.push(Violation {
                                role,
                                kind: ViolationKind::ChangesSign,
                                witness: point,
                                detail: format!(
                                    "f = {v} has the opposite sign to its value at {origin}"
                                ),
                            });
                        }
                        _ => {}
                    }
                    if seen_zero && seen_flip {
                        break 'scan;
                    }
                }
            }
        }
    }
    out
}

/// Suprema of |f(t,0,0)| and |g(t,0,0)| over t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    pub k1: f64,
    pub k2: f64,
}

/// Maximises |f(t_i,0,0)| and |g(t_i,0,0)| over t_i = i/(n−1).
pub fn derive_constants(
    spec: &ProblemSpec,
    n_samples: usize,
) -> Result<DerivedConstants, ProblemError> {
    let mut k1: f64 = 0.0;
    let mut k2: f64 = 0.0;
    for t in axis(n_samples.max(2), 0.0, 1.0) {
        k1 = k1.max(spec.eval_state(Role::F, t, 0.0, 0.0)?.abs());
        k2 = k2.max(spec.eval_state(Role::G, t, 0.0, 0.0)?.abs());
    }
    Ok(DerivedConstants { k1, k2 })
}

/// f and g from the worked example with scaling constants `a` and `b`:
/// f = (⁴√(1+|x|) + ⁴√(1+|y|)) / a, g = (∛(1+|x|) + ∛(1+|y|)) / b,
/// φ(t) = t/(1+t), ρ(t) = arctan t, α = 1/2, k = 1/4, r = 1/3.
pub fn example_one(a: f64, b: f64) -> ProblemSpec {
    ProblemSpec::new(
        0.5,
        &format!("(1/{a})*((1+abs(x))^(1/4) + (1+abs(y))^(1/4))"),
        &format!("(1/{b})*((1+abs(x))^(1/3) + (1+abs(y))^(1/3))"),
        "t/(1+t)",
        "atan(t)",
        0.25,
        1.0 / 3.0,
    )
    .expect("example problem is well formed")
}
