//! Fixed-point solver for the integral form of the problem,
//!
//! ```text
//! x(t) = f(t, x(t), x(φ(t))) · (1/Γ(α)) ∫₀ᵗ (t − s)^{α−1} g(s, x(s), x(ρ(s))) ds,
//! ```
//!
//! by (optionally damped) Picard iteration on a uniform grid. The right-hand
//! side is the product of a pointwise factor `F x = f(·, x, x∘φ)` and an
//! integral factor `G x = I^α g(·, x, x∘ρ)`.

use std::fmt;

use thiserror::Error;

use crate::expr::EvalError;
use crate::fracops::{FracError, Grid, ProductTrapezoid, SampledFunction};
use crate::problem::{Point, ProblemSpec, Role};

/// Delay values may leave [0,1] by this much before clamping is refused.
pub const DELAY_SLACK: f64 = 1e-9;

/// Refinement factor of the grid used to recompute the residual.
pub const RESIDUAL_REFINEMENT: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid solver settings: {0}")]
    InvalidSettings(String),
    #[error("evaluating `{}` at {point}: {source}", role.name())]
    Domain {
        role: Role,
        point: Point,
        #[source]
        source: EvalError,
    },
    #[error("{} maps t = {t} to {value}, outside [0, 1]", role.name())]
    DelayOutOfRange { role: Role, t: f64, value: f64 },
    #[error(transparent)]
    Frac(#[from] FracError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSettings {
    pub grid_points: usize,
    /// Stop once the sup-norm step falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// x_{n+1} = (1 − damping)·x_n + damping·T x_n.
    pub damping: f64,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            grid_points: 1025,
            tol: 1e-10,
            max_iter: 200,
            damping: 1.0,
        }
    }
}

impl SolveSettings {
    pub fn check(&self) -> Result<(), SolveError> {
        let bad = |msg: String| Err(SolveError::InvalidSettings(msg));
        if self.grid_points < 33 {
            return bad(format!("grid_points = {} (need ≥ 33)", self.grid_points));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad(format!("tol = {} (need > 0)", self.tol));
        }
        if self.max_iter < 1 {
            return bad("max_iter = 0 (need ≥ 1)".into());
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad(format!("damping = {} (need 0 < damping ≤ 1)", self.damping));
        }
        Ok(())
    }
}

/// The fixed-point map on one grid, with delay positions and quadrature
/// weights computed once.
#[derive(Debug, Clone)]
pub struct HybridOperator<'a> {
    spec: &'a ProblemSpec,
    grid: Grid,
    weights: ProductTrapezoid,
    phi_at: Vec<(usize, f64)>,
    rho_at: Vec<(usize, f64)>,
}

impl<'a> HybridOperator<'a> {
    pub fn new(spec: &'a ProblemSpec, grid: Grid) -> Result<Self, SolveError> {
        let weights = ProductTrapezoid::new(grid, spec.alpha)?;
        let locate = |role: Role| -> Result<Vec<(usize, f64)>, SolveError> {
            grid.nodes()
                .map(|t| {
                    let value = match role {
                        Role::Phi => spec.eval_phi(t),
                        _ => spec.eval_rho(t),
                    }
                    .map_err(|source| SolveError::Domain {
                        role,
                        point: Point::time(t),
                        source,
                    })?;
                    if !(-DELAY_SLACK..=1.0 + DELAY_SLACK).contains(&value) {
                        return Err(SolveError::DelayOutOfRange { role, t, value });
                    }
                    Ok(grid.locate(value))
                })
                .collect()
        };
        Ok(HybridOperator {
            spec,
            grid,
            weights,
            phi_at: locate(Role::Phi)?,
            rho_at: locate(Role::Rho)?,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn spec(&self) -> &ProblemSpec {
        self.spec
    }

    fn check_grid(&self, x: &SampledFunction) -> Result<(), SolveError> {
        if x.grid() != self.grid {
            return Err(FracError::GridMismatch(x.grid().n_points(), self.grid.n_points()).into());
        }
        Ok(())
    }

    fn compose(&self, role: Role, x: &SampledFunction) -> Result<Vec<f64>, SolveError> {
        let delays = if role == Role::F {
            &self.phi_at
        } else {
            &self.rho_at
        };
        let xs = x.values();
        xs.iter()
            .zip(delays)
            .enumerate()
            .map(|(i, (&xi, &(j, frac)))| {
                let t = self.grid.node(i);
                let delayed = xs[j] + frac * (xs[j + 1] - xs[j]);
                let value = match role {
                    Role::F => self.spec.eval_f(t, xi, delayed),
                    _ => self.spec.eval_g(t, xi, delayed),
                };
                value.map_err(|source| SolveError::Domain {
                    role,
                    point: Point::state(t, xi, delayed),
                    source,
                })
            })
            .collect()
    }

    /// (F x)(t) = f(t, x(t), x(φ(t))).
    pub fn nonlinear_factor(&self, x: &SampledFunction) -> Result<SampledFunction, SolveError> {
        self.check_grid(x)?;
        Ok(SampledFunction::new(self.grid, self.compose(Role::F, x)?)?)
    }

    /// (G x)(t) = I^α [g(·, x, x∘ρ)](t).
    pub fn integral_factor(&self, x: &SampledFunction) -> Result<SampledFunction, SolveError> {
        self.check_grid(x)?;
        let integrand = self.compose(Role::G, x)?;
        Ok(SampledFunction::new(
            self.grid,
            self.weights.apply_values(&integrand),
        )?)
    }

    /// T x = (F x)·(G x); vanishes at t = 0.
    pub fn apply(&self, x: &SampledFunction) -> Result<SampledFunction, SolveError> {
        let f = self.nonlinear_factor(x)?;
        let g = self.integral_factor(x)?;
        Ok(f.product(&g)?)
    }

    /// Damped Picard iterates x₁, x₂, … starting from `start`.
    pub fn iterates(&self, start: SampledFunction, damping: f64) -> PicardIterates<'_, 'a> {
        PicardIterates {
            op: self,
            current: start,
            damping,
            failed: false,
        }
    }
}

/// Iterator over damped Picard iterates; stops after the first error.
pub struct PicardIterates<'o, 'a> {
    op: &'o HybridOperator<'a>,
    current: SampledFunction,
    damping: f64,
    failed: bool,
}

impl Iterator for PicardIterates<'_, '_> {
    type Item = Result<SampledFunction, SolveError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let next = self.op.apply(&self.current).and_then(|tx| {
            if self.damping == 1.0 {
                Ok(tx)
            } else {
                Ok(self
                    .current
                    .lin_comb(1.0 - self.damping, &tx, self.damping)?)
            }
        });
        match next {
            Ok(x) => {
                self.current = x.clone();
                Some(Ok(x))
            }
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

/// T x on the grid of `x`.
pub fn apply_t(x: &SampledFunction, spec: &ProblemSpec) -> Result<SampledFunction, SolveError> {
    HybridOperator::new(spec, x.grid())?.apply(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    PositiveOnInterior,
    NegativeOnInterior,
    Zero,
    SignChanging,
}

impl Sign {
    pub fn label(self) -> &'static str {
        match self {
            Sign::PositiveOnInterior => "positive-on-(0,1)",
            Sign::NegativeOnInterior => "negative-on-(0,1)",
            Sign::Zero => "zero",
            Sign::SignChanging => "sign-changing",
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Scale-aware zero threshold 1e−8·max(1, ‖x‖).
pub fn default_zero_tol(x: &SampledFunction) -> f64 {
    1e-8 * x.sup_norm().max(1.0)
}

/// Sign of `x` on the interior nodes (both endpoints excluded).
pub fn classify_sign(x: &SampledFunction, zero_tol: f64) -> Sign {
    let v = x.values();
    let interior = &v[1..v.len() - 1];
    if interior.iter().all(|&xi| xi > zero_tol) {
        Sign::PositiveOnInterior
    } else if interior.iter().all(|&xi| xi < -zero_tol) {
        Sign::NegativeOnInterior
    } else if interior.iter().all(|&xi| xi.abs() <= zero_tol) {
        Sign::Zero
    } else {
        Sign::SignChanging
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    /// `max_iter` was reached with the last step still ≥ `tol`.
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Final iterate (the best available when not converged).
    pub x: SampledFunction,
    pub iterations: usize,
    /// ‖x_n − x_{n−1}‖ of the last update.
    pub final_step: f64,
    /// Defect of the continuous integral equation at the nodes, estimated by
    /// re-applying the map on a grid refined by [`RESIDUAL_REFINEMENT`].
    pub residual: f64,
    /// ‖x − T_h x‖ with the same discrete map used by the iteration.
    pub discrete_residual: f64,
    /// `discrete_residual / final_step`; the observed contraction of the last step.
    pub step_ratio: f64,
    pub sup_norm: f64,
    pub sign: Sign,
    /// Sup-norm step of every iteration.
    pub history: Vec<f64>,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// Iterates from x₀ ≡ 0 until the step drops below `tol` or `max_iter` is hit.
pub fn solve(spec: &ProblemSpec, settings: &SolveSettings) -> Result<SolveResult, SolveError> {
    settings.check()?;
    let grid = Grid::new(settings.grid_points)?;
    let op = HybridOperator::new(spec, grid)?;

    let mut x = SampledFunction::zeros(grid);
    let mut history = Vec::new();
    let mut status = SolveStatus::MaxIterations;
    for next in op
        .iterates(x.clone(), settings.damping)
        .take(settings.max_iter)
    {
        let next = next?;
        let step = next.distance(&x)?;
        history.push(step);
        x = next;
        if step < settings.tol {
            status = SolveStatus::Converged;
            break;
        }
    }
    let final_step = history.last().copied().unwrap_or(0.0);

    let discrete_residual = x.distance(&op.apply(&x)?)?;
    let residual = continuum_residual(spec, &x)?;
    let sup_norm = x.sup_norm();
    let sign = classify_sign(&x, default_zero_tol(&x));
    Ok(SolveResult {
        status,
        iterations: history.len(),
        final_step,
        residual,
        discrete_residual,
        step_ratio: if final_step > 0.0 {
            discrete_residual / final_step
        } else {
            0.0
        },
        sup_norm,
        sign,
        history,
        x,
    })
}

/// max_i |x(t_i) − (T x̃)(t_i)| where x̃ is the piecewise-linear interpolant of
/// `x` and T is applied on a grid [`RESIDUAL_REFINEMENT`] times finer.
pub fn continuum_residual(spec: &ProblemSpec, x: &SampledFunction) -> Result<f64, SolveError> {
    let coarse = x.grid();
    let fine = Grid::new(coarse.intervals() * RESIDUAL_REFINEMENT + 1)?;
    let x_fine = SampledFunction::new(fine, fine.nodes().map(|t| x.interpolate(t)).collect())?;
    let tx = HybridOperator::new(spec, fine)?.apply(&x_fine)?;
    Ok(x.values()
        .iter()
        .enumerate()
        .map(|(i, xi)| (xi - tx.values()[i * RESIDUAL_REFINEMENT]).abs())
        .fold(0.0, f64::max))
}
