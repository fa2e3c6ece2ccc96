//! Empirical certification of the growth and radius hypotheses.
//!
//! The increment condition on f (exponent k) and g (exponent r),
//!
//! ```text
//! |f(t,x₁,y₁) − f(t,x₂,y₂)| ≤ (max(|x₁−x₂|, |y₁−y₂|) + 1)^k − 1,
//! ```
//!
//! quantifies over all reals, so it is checked by seeded random sampling over
//! the ball the solver can visit. The radius conditions
//!
//! ```text
//! ((r₀+1)^k − 1 + K₁)((r₀+1)^r − 1 + K₂) ≤ r₀ Γ(α+1)
//! (r₀+1)^r − 1 + K₂ ≤ Γ(α+1)
//! ```
//!
//! are one-dimensional and solved by scan-then-bisect.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gamma::gamma;
use crate::problem::{
    derive_constants, validate, DerivedConstants, ProblemError, ProblemSpec, Role, SamplingPlan,
    Violation,
};

/// Slack allowed on every inequality to absorb rounding.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

/// Absolute precision of the bisection in [`find_r0`].
pub const R0_PRECISION: f64 = 1e-6;

/// ψ(d) = (d + 1)^k − 1: concave, zero at 0, nondecreasing and subadditive.
pub fn concave_growth(k: f64, d: f64) -> f64 {
    (k * d.ln_1p()).exp_m1()
}

/// Five-tuple (t, x₁, y₁, x₂, y₂) at which an increment was measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementWitness {
    pub trial: usize,
    pub t: f64,
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncrementCheck {
    pub passed: bool,
    pub trials: usize,
    /// max over trials of |Δ| − ψ(max(|Δx|, |Δy|)); ≤ 0 means the bound held.
    pub worst_margin: f64,
    pub witness: Option<IncrementWitness>,
    /// Set when the expression could not be evaluated at `witness`.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncrementReport {
    pub f: IncrementCheck,
    pub g: IncrementCheck,
}

impl IncrementReport {
    pub fn passed(&self) -> bool {
        self.f.passed && self.g.passed
    }
}

struct Tracker {
    role: Role,
    exponent: f64,
    worst: f64,
    witness: Option<IncrementWitness>,
    error: Option<String>,
}

impl Tracker {
    fn new(role: Role, exponent: f64) -> Self {
        Tracker {
            role,
            exponent,
            worst: f64::NEG_INFINITY,
            witness: None,
            error: None,
        }
    }

    fn observe(&mut self, spec: &ProblemSpec, w: IncrementWitness) {
        if self.error.is_some() {
            return;
        }
        let pair = spec
            .eval_state(self.role, w.t, w.x1, w.y1)
            .and_then(|a| Ok((a, spec.eval_state(self.role, w.t, w.x2, w.y2)?)));
        match pair {
            Ok((a, b)) => {
                let spread = (w.x1 - w.x2).abs().max((w.y1 - w.y2).abs());
                let margin = (a - b).abs() - concave_growth(self.exponent, spread);
                // Strict comparison keeps the lowest trial index on ties.
                if margin > self.worst {
                    self.worst = margin;
                    self.witness = Some(w);
                }
            }
            Err(e) => {
                self.error = Some(e.to_string());
                self.witness = Some(w);
            }
        }
    }

    fn finish(self, trials: usize) -> IncrementCheck {
        let passed = self.error.is_none() && self.worst <= FEASIBILITY_SLACK;
        IncrementCheck {
            passed,
            trials,
            worst_margin: self.worst,
            witness: self.witness,
            error: self.error,
        }
    }
}

/// Draws `n_trials` tuples uniformly from [0,1]×[−R,R]⁴ (R = `r0_search_max`)
/// with a ChaCha8 stream seeded by `seed`, and records the worst margin for f and g.
pub fn check_h3(spec: &ProblemSpec, n_trials: usize, seed: u64) -> IncrementReport {
    let n_trials = n_trials.max(1);
    let r = spec.r0_search_max;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = Tracker::new(Role::F, spec.k_exp);
    let mut g = Tracker::new(Role::G, spec.r_exp);
    for trial in 0..n_trials {
        let w = IncrementWitness {
            trial,
            t: rng.gen_range(0.0..=1.0),
            x1: rng.gen_range(-r..=r),
            y1: rng.gen_range(-r..=r),
            x2: rng.gen_range(-r..=r),
            y2: rng.gen_range(-r..=r),
        };
        f.observe(spec, w);
        g.observe(spec, w);
    }
    IncrementReport {
        f: f.finish(n_trials),
        g: g.finish(n_trials),
    }
}

/// The two radius conditions as functions of r₀; feasible when both are ≤ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusConditions {
    pub k1: f64,
    pub k2: f64,
    pub k_exp: f64,
    pub r_exp: f64,
    pub alpha: f64,
    gamma_alpha_1: f64,
}

pub fn h4_functions(k1: f64, k2: f64, k_exp: f64, r_exp: f64, alpha: f64) -> RadiusConditions {
    RadiusConditions {
        k1,
        k2,
        k_exp,
        r_exp,
        alpha,
        gamma_alpha_1: gamma(alpha + 1.0),
    }
}

impl RadiusConditions {
    pub fn gamma_alpha_1(&self) -> f64 {
        self.gamma_alpha_1
    }

    /// Left side of the product condition.
    pub fn product_lhs(&self, r0: f64) -> f64 {
        (concave_growth(self.k_exp, r0) + self.k1) * (concave_growth(self.r_exp, r0) + self.k2)
    }

    pub fn product_rhs(&self, r0: f64) -> f64 {
        r0 * self.gamma_alpha_1
    }

    pub fn g_factor_lhs(&self, r0: f64) -> f64 {
        concave_growth(self.r_exp, r0) + self.k2
    }

    pub fn psi1(&self, r0: f64) -> f64 {
        self.product_lhs(r0) - self.product_rhs(r0)
    }

    pub fn psi2(&self, r0: f64) -> f64 {
        self.g_factor_lhs(r0) - self.gamma_alpha_1
    }

    pub fn feasible(&self, r0: f64) -> bool {
        self.psi1(r0) <= FEASIBILITY_SLACK && self.psi2(r0) <= FEASIBILITY_SLACK
    }
}

/// Smallest feasible r₀ in (0, `r_max`], or `None` when no scanned point is feasible.
///
/// ψ₁ can cross zero twice, so the interval is scanned on `n_scan` uniform
/// points first and the first infeasible→feasible transition is bisected.
pub fn find_r0(conds: &RadiusConditions, r_max: f64, n_scan: usize) -> Option<f64> {
    let n_scan = n_scan.max(2);
    let point = |j: usize| r_max * j as f64 / n_scan as f64;
    let first = (1..=n_scan).find(|&j| conds.feasible(point(j)))?;
    let mut lo = point(first - 1);
    let mut hi = point(first);
    while hi - lo > R0_PRECISION {
        let mid = 0.5 * (lo + hi);
        if conds.feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    debug_assert!(conds.feasible(hi));
    Some(hi)
}

/// Outcome of running every hypothesis check on a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub violations: Vec<Violation>,
    pub increments: IncrementReport,
    pub constants: DerivedConstants,
    pub conditions: RadiusConditions,
    pub r0: Option<f64>,
}

impl HypothesisReport {
    pub fn structural_ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// True iff every check passed and a feasible radius was found.
    pub fn certified(&self) -> bool {
        self.structural_ok() && self.increments.passed() && self.r0.is_some()
    }
}

/// Scan resolution used by [`certify`].
pub const DEFAULT_R0_SCAN: usize = 2000;

pub fn certify(
    spec: &ProblemSpec,
    plan: &SamplingPlan,
    seed: u64,
) -> Result<HypothesisReport, ProblemError> {
    let violations = validate(spec, plan);
    let constants = derive_constants(spec, plan.t_samples)?;
    let increments = check_h3(spec, spec.sample_budget, seed);
    let conditions = h4_functions(
        constants.k1,
        constants.k2,
        spec.k_exp,
        spec.r_exp,
        spec.alpha,
    );
    let r0 = find_r0(&conditions, spec.r0_search_max, DEFAULT_R0_SCAN);
    Ok(HypothesisReport {
        violations,
        increments,
        constants,
        conditions,
        r0,
    })
}
