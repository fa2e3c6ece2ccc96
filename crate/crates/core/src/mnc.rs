//! Modulus-of-continuity diagnostics for families of sampled functions.
//!
//! ω(x, ε) = sup{|x(t) − x(s)| : |t − s| ≤ ε} is evaluated over node pairs, and
//! ω(X, ε) is its maximum over a family. The ε → 0 limit is never reported as
//! a number: a finite sample cannot tell a vanishing limit from a small
//! positive one, so only curves down to the grid spacing are produced.

use std::collections::VecDeque;

use thiserror::Error;

use crate::fracops::{Grid, SampledFunction};
use crate::hypothesis::concave_growth;
use crate::problem::ProblemSpec;
use crate::solver::{HybridOperator, SolveError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MncError {
    #[error("a function family needs at least one member")]
    EmptyFamily,
    #[error("family members live on different grids ({0} vs {1} points)")]
    MixedGrids(usize, usize),
    #[error("epsilon {eps} is below the grid spacing {h}")]
    BelowResolution { eps: f64, h: f64 },
    #[error("epsilon {0} is outside (0, 1]")]
    OutOfRange(f64),
    #[error("epsilons must be strictly decreasing ({0} then {1})")]
    NotDecreasing(f64, f64),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Largest node-index distance `m` with m·h ≤ ε.
fn max_lag(grid: Grid, eps: f64) -> usize {
    let lag = (eps * grid.intervals() as f64 + 1e-9).floor();
    (lag.max(0.0) as usize).min(grid.intervals())
}

/// ω(x, ε) over node pairs: the largest range (max − min) of any window of
/// `lag + 1` consecutive nodes, found with two monotone deques in O(n).
pub fn modulus(x: &SampledFunction, eps: f64) -> f64 {
    let lag = max_lag(x.grid(), eps);
    if lag == 0 {
        return 0.0;
    }
    let v = x.values();
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut best: f64 = 0.0;
    for i in 0..v.len() {
        while maxq.back().is_some_and(|&j| v[j] <= v[i]) {
            maxq.pop_back();
        }
        maxq.push_back(i);
        while minq.back().is_some_and(|&j| v[j] >= v[i]) {
            minq.pop_back();
        }
        minq.push_back(i);
        let start = i.saturating_sub(lag);
        while maxq.front().is_some_and(|&j| j < start) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&j| j < start) {
            minq.pop_front();
        }
        best = best.max(v[maxq[0]] - v[minq[0]]);
    }
    best
}

/// Nonempty set of sampled functions sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionFamily {
    members: Vec<SampledFunction>,
}

impl FunctionFamily {
    pub fn new(members: Vec<SampledFunction>) -> Result<Self, MncError> {
        let first = members.first().ok_or(MncError::EmptyFamily)?.grid();
        if let Some(other) = members.iter().find(|m| m.grid() != first) {
            return Err(MncError::MixedGrids(
                first.n_points(),
                other.grid().n_points(),
            ));
        }
        Ok(FunctionFamily { members })
    }

    pub fn members(&self) -> &[SampledFunction] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn grid(&self) -> Grid {
        self.members[0].grid()
    }

    /// ‖X‖ = max member sup-norm.
    pub fn norm(&self) -> f64 {
        self.members
            .iter()
            .map(SampledFunction::sup_norm)
            .fold(0.0, f64::max)
    }

    pub fn modulus(&self, eps: f64) -> f64 {
        self.members
            .iter()
            .map(|m| modulus(m, eps))
            .fold(0.0, f64::max)
    }

    /// XY = {x·y : x ∈ X, y ∈ Y}.
    pub fn products(&self, other: &FunctionFamily) -> Result<FunctionFamily, MncError> {
        if self.grid() != other.grid() {
            return Err(MncError::MixedGrids(
                self.grid().n_points(),
                other.grid().n_points(),
            ));
        }
        let members = self
            .members
            .iter()
            .flat_map(|x| {
                other
                    .members
                    .iter()
                    .map(move |y| x.product(y).expect("same grid"))
            })
            .collect();
        FunctionFamily::new(members)
    }

    /// Applies `map` to every member.
    pub fn try_map(
        &self,
        map: impl Fn(&SampledFunction) -> Result<SampledFunction, SolveError>,
    ) -> Result<FunctionFamily, MncError> {
        let members = self.members.iter().map(map).collect::<Result<_, _>>()?;
        FunctionFamily::new(members)
    }
}

/// ω(X, ε) sampled on a strictly decreasing ladder of ε.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulusCurve {
    pub epsilons: Vec<f64>,
    pub omegas: Vec<f64>,
}

impl ModulusCurve {
    /// ω never increases as ε decreases.
    pub fn is_monotone(&self) -> bool {
        self.omegas.windows(2).all(|w| w[1] <= w[0])
    }
}

/// ε = 2^{−m} for m = 1, 2, … while ε ≥ h.
pub fn default_epsilons(grid: Grid) -> Vec<f64> {
    let h = grid.step();
    (1..)
        .map(|m| 0.5f64.powi(m))
        .take_while(|&eps| eps >= h * (1.0 - 1e-12))
        .collect()
}

fn check_epsilons(grid: Grid, epsilons: &[f64]) -> Result<(), MncError> {
    let h = grid.step();
    for &eps in epsilons {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(MncError::OutOfRange(eps));
        }
        if eps < h * (1.0 - 1e-9) {
            return Err(MncError::BelowResolution { eps, h });
        }
    }
    if let Some(w) = epsilons.windows(2).find(|w| w[1] >= w[0]) {
        return Err(MncError::NotDecreasing(w[0], w[1]));
    }
    Ok(())
}

pub fn family_modulus_curve(
    family: &FunctionFamily,
    epsilons: &[f64],
) -> Result<ModulusCurve, MncError> {
    check_epsilons(family.grid(), epsilons)?;
    Ok(ModulusCurve {
        epsilons: epsilons.to_vec(),
        omegas: epsilons.iter().map(|&e| family.modulus(e)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionRow {
    pub eps: f64,
    pub omega_x: f64,
    pub omega_tx: f64,
    /// (ω(X, ε) + 1)^k − 1.
    pub bound: f64,
}

/// Compares ω(TX, ε) against (ω(X, ε) + 1)^k − 1 at each ε.
///
/// The limiting inequality only concerns ε → 0, so no verdict is attached to
/// individual rows.
pub fn contraction_diagnostic(
    family: &FunctionFamily,
    spec: &ProblemSpec,
    epsilons: &[f64],
) -> Result<Vec<ContractionRow>, MncError> {
    check_epsilons(family.grid(), epsilons)?;
    let op = HybridOperator::new(spec, family.grid())?;
    let image = family.try_map(|x| op.apply(x))?;
    Ok(epsilons
        .iter()
        .map(|&eps| {
            let omega_x = family.modulus(eps);
            ContractionRow {
                eps,
                omega_x,
                omega_tx: image.modulus(eps),
                bound: concave_growth(spec.k_exp, omega_x),
            }
        })
        .collect())
}

/// Modulus curves of the two factors and of the full map over a family.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorCurves {
    pub family: ModulusCurve,
    pub nonlinear: ModulusCurve,
    pub integral: ModulusCurve,
    pub image: ModulusCurve,
}

pub fn factor_curves(
    family: &FunctionFamily,
    spec: &ProblemSpec,
    epsilons: &[f64],
) -> Result<FactorCurves, MncError> {
    let op = HybridOperator::new(spec, family.grid())?;
    Ok(FactorCurves {
        family: family_modulus_curve(family, epsilons)?,
        nonlinear: family_modulus_curve(&family.try_map(|x| op.nonlinear_factor(x))?, epsilons)?,
        integral: family_modulus_curve(&family.try_map(|x| op.integral_factor(x))?, epsilons)?,
        image: family_modulus_curve(&family.try_map(|x| op.apply(x))?, epsilons)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionMRow {
    pub eps: f64,
    /// ω(XY, ε)
    pub lhs: f64,
    /// ‖X‖ω(Y, ε) + ‖Y‖ω(X, ε)
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionMTable {
    pub rows: Vec<ConditionMRow>,
    /// Rounding allowance: 8 ulp of ‖X‖‖Y‖.
    pub slack: f64,
}

impl ConditionMTable {
    pub fn violations(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.lhs > r.rhs + self.slack)
            .count()
    }
}

/// Tabulates ω(XY, ε) ≤ ‖X‖ω(Y, ε) + ‖Y‖ω(X, ε). On node pairs this holds
/// exactly, since x_i y_i − x_j y_j = x_i (y_i − y_j) + y_j (x_i − x_j).
pub fn condition_m_diagnostic(
    x: &FunctionFamily,
    y: &FunctionFamily,
    epsilons: &[f64],
) -> Result<ConditionMTable, MncError> {
    let xy = x.products(y)?;
    check_epsilons(xy.grid(), epsilons)?;
    let (nx, ny) = (x.norm(), y.norm());
    let rows = epsilons
        .iter()
        .map(|&eps| ConditionMRow {
            eps,
            lhs: xy.modulus(eps),
            rhs: nx * y.modulus(eps) + ny * x.modulus(eps),
        })
        .collect();
    Ok(ConditionMTable {
        rows,
        slack: 8.0 * f64::EPSILON * nx * ny,
    })
}

/// Functions φ: (0,∞) → (1,∞) with φ(t_n) → 1 exactly when t_n → 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComparisonFunction {
    /// 1 + t; the form behind ω₀(TX) + 1 ≤ (ω₀(X) + 1)^k.
    OnePlus,
    /// e^{√t}
    ExpSqrt,
    /// 2 − (2/π)·arctan(t^{−a}), 0 < a < 1
    Arctan { a: f64 },
    /// (1 + t²)^β, β > 0
    OnePlusSquare { beta: f64 },
}

impl ComparisonFunction {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            ComparisonFunction::OnePlus => 1.0 + t,
            ComparisonFunction::ExpSqrt => t.sqrt().exp(),
            ComparisonFunction::Arctan { a } => {
                2.0 - std::f64::consts::FRAC_2_PI * t.powf(-a).atan()
            }
            ComparisonFunction::OnePlusSquare { beta } => (1.0 + t * t).powf(beta),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassCheck {
    /// |φ(2^{−n}) − 1| is nonincreasing in n and ends below `limit_tol`.
    pub tends_to_one: bool,
    /// min of φ − 1 over [δ, t_max]; positive when φ stays away from 1 there.
    pub gap_away_from_zero: f64,
    /// φ > 1 on [δ, t_max] and φ ≥ 1 along the sequence.
    pub above_one: bool,
}

impl ClassCheck {
    pub fn passed(&self) -> bool {
        self.tends_to_one && self.above_one && self.gap_away_from_zero > 0.0
    }
}

/// Sampled membership check: φ along t_n = 2^{−n} (n ≤ 60) and on a uniform
/// sample of [δ, t_max].
pub fn check_comparison_function(
    phi: ComparisonFunction,
    delta: f64,
    t_max: f64,
    limit_tol: f64,
) -> ClassCheck {
    let seq: Vec<f64> = (1..=60)
        .map(|n| (phi.eval(0.5f64.powi(n)) - 1.0).abs())
        .collect();
    let tends_to_one =
        seq.windows(2).all(|w| w[1] <= w[0]) && seq.last().is_some_and(|&v| v < limit_tol);
    let samples = 10_000;
    let away: Vec<f64> = (0..=samples)
        .map(|i| delta + (t_max - delta) * i as f64 / samples as f64)
        .map(|t| phi.eval(t) - 1.0)
        .collect();
    let gap = away.iter().copied().fold(f64::INFINITY, f64::min);
    // Near 0, φ − 1 drops below one ulp of 1, so the tail is only held to φ ≥ 1.
    let above_one = gap > 0.0 && (1..=60).all(|n| phi.eval(0.5f64.powi(n)) >= 1.0);
    ClassCheck {
        tends_to_one,
        gap_away_from_zero: gap,
        above_one,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::example_one;
    use crate::solver::{HybridOperator, SolveSettings};
    use proptest::prelude::*;

    // Oracle: direct scan over all node pairs within ε.
    fn brute_modulus(x: &SampledFunction, eps: f64) -> f64 {
        let v = x.values();
        let g = x.grid();
        let mut best: f64 = 0.0;
        for i in 0..v.len() {
            for j in i..v.len() {
                if g.node(j) - g.node(i) <= eps + 1e-12 {
                    best = best.max((v[i] - v[j]).abs());
                }
            }
        }
        best
    }

    fn fam(members: Vec<SampledFunction>) -> FunctionFamily {
        FunctionFamily::new(members).unwrap()
    }

    #[test]
    fn constant_has_zero_modulus() {
        let g = Grid::new(65).unwrap();
        let c = SampledFunction::from_fn(g, |_| 3.5);
        for eps in default_epsilons(g) {
            assert_eq!(modulus(&c, eps), 0.0);
        }
    }

    #[test]
    fn identity_modulus_equals_eps() {
        let g = Grid::new(1025).unwrap();
        let x = SampledFunction::from_fn(g, |t| t);
        assert_eq!(modulus(&x, 0.25), 0.25);
        for eps in default_epsilons(g) {
            assert!((modulus(&x, eps) - eps).abs() < 1e-15);
        }
    }

    #[test]
    fn square_root_first_step_dominates() {
        let g = Grid::new(1025).unwrap();
        let x = SampledFunction::from_fn(g, f64::sqrt);
        let h = g.step();
        assert!((modulus(&x, h) - h.sqrt()).abs() < 1e-15);
        assert!((modulus(&x, h) - 0.03125).abs() < 1e-15);
    }

    #[test]
    fn below_resolution_gives_zero_for_single_function() {
        let g = Grid::new(11).unwrap();
        let x = SampledFunction::from_fn(g, |t| t);
        assert_eq!(modulus(&x, 0.05), 0.0);
    }

    #[test]
    fn family_rules() {
        let g = Grid::new(9).unwrap();
        let other = Grid::new(17).unwrap();
        assert_eq!(FunctionFamily::new(vec![]), Err(MncError::EmptyFamily));
        assert!(matches!(
            FunctionFamily::new(vec![
                SampledFunction::zeros(g),
                SampledFunction::zeros(other)
            ]),
            Err(MncError::MixedGrids(9, 17))
        ));
        let x = fam(vec![SampledFunction::zeros(g)]);
        assert!(matches!(
            family_modulus_curve(&x, &[0.5, 0.1]),
            Err(MncError::BelowResolution { .. })
        ));
        assert!(matches!(
            family_modulus_curve(&x, &[0.25, 0.5]),
            Err(MncError::NotDecreasing(..))
        ));
        assert!(matches!(
            family_modulus_curve(&x, &[1.5]),
            Err(MncError::OutOfRange(_))
        ));
    }

    #[test]
    fn singleton_and_pair_curves() {
        let g = Grid::new(257).unwrap();
        let eps = default_epsilons(g);
        assert_eq!(eps.len(), 8);
        let w = SampledFunction::from_fn(g, |t| (7.0 * t).sin());
        let single = family_modulus_curve(&fam(vec![w.clone()]), &eps).unwrap();
        let own: Vec<f64> = eps.iter().map(|&e| modulus(&w, e)).collect();
        assert_eq!(single.omegas, own);

        let pair = fam(vec![
            SampledFunction::zeros(g),
            SampledFunction::from_fn(g, |t| t),
        ]);
        let curve = family_modulus_curve(&pair, &eps).unwrap();
        for (e, o) in curve.epsilons.iter().zip(&curve.omegas) {
            assert!((e - o).abs() < 1e-15);
        }
        assert!(curve.is_monotone());
    }

    #[test]
    fn contraction_rows_for_trivial_families() {
        let s = example_one(4.0, 3.0);
        let g = Grid::new(129).unwrap();
        let eps = default_epsilons(g);
        let zero = fam(vec![SampledFunction::zeros(g)]);
        let rows = contraction_diagnostic(&zero, &s, &eps).unwrap();
        let t0 = HybridOperator::new(&s, g)
            .unwrap()
            .apply(&SampledFunction::zeros(g))
            .unwrap();
        for row in &rows {
            assert_eq!(row.omega_x, 0.0);
            assert_eq!(row.bound, 0.0);
            assert_eq!(row.omega_tx, modulus(&t0, row.eps));
        }

        let quiet = ProblemSpec::new(0.5, "1 + x*x", "0", "t", "t", 0.5, 0.5).unwrap();
        let x = fam(vec![
            SampledFunction::from_fn(g, |t| t),
            SampledFunction::from_fn(g, |t| t * t),
        ]);
        for row in contraction_diagnostic(&x, &quiet, &eps).unwrap() {
            assert_eq!(row.omega_tx, 0.0);
            assert!(row.omega_tx <= row.bound);
        }
    }

    #[test]
    fn factor_curves_for_example_iterates() {
        let s = example_one(4.0, 3.0);
        let g = Grid::new(257).unwrap();
        let op = HybridOperator::new(&s, g).unwrap();
        let settings = SolveSettings::default();
        let iterates: Vec<_> = op
            .iterates(SampledFunction::zeros(g), settings.damping)
            .take(8)
            .collect::<Result<_, _>>()
            .unwrap();
        let x = fam(iterates);
        let eps = default_epsilons(g);
        let curves = factor_curves(&x, &s, &eps).unwrap();
        for c in [
            &curves.family,
            &curves.nonlinear,
            &curves.integral,
            &curves.image,
        ] {
            assert!(c.is_monotone());
        }
    }

    #[test]
    fn condition_m_examples() {
        let g = Grid::new(129).unwrap();
        let eps = default_epsilons(g);
        let x = fam(vec![
            SampledFunction::from_fn(g, |t| (3.0 * t).cos()),
            SampledFunction::from_fn(g, |t| t),
        ]);
        let one = fam(vec![SampledFunction::from_fn(g, |_| 1.0)]);
        let table = condition_m_diagnostic(&x, &one, &eps).unwrap();
        for row in &table.rows {
            assert_eq!(row.lhs, x.modulus(row.eps));
            assert!(row.rhs >= row.lhs);
        }
        let id = fam(vec![SampledFunction::from_fn(g, |t| t)]);
        let table = condition_m_diagnostic(&id, &id, &eps).unwrap();
        assert_eq!(table.violations(), 0);
        for row in &table.rows {
            assert!((row.rhs - 2.0 * row.eps).abs() < 1e-15);
        }
    }

    #[test]
    fn comparison_functions_in_class() {
        for phi in [
            ComparisonFunction::OnePlus,
            ComparisonFunction::ExpSqrt,
            ComparisonFunction::Arctan { a: 0.5 },
            ComparisonFunction::OnePlusSquare { beta: 0.5 },
            ComparisonFunction::OnePlusSquare { beta: 3.0 },
        ] {
            let check = check_comparison_function(phi, 0.1, 100.0, 1e-6);
            assert!(check.passed(), "{phi:?}: {check:?}");
        }
        // (1 + t²)^0 ≡ 1 never exceeds 1.
        let check = check_comparison_function(
            ComparisonFunction::OnePlusSquare { beta: 0.0 },
            0.1,
            10.0,
            1e-6,
        );
        assert!(!check.passed());
    }

    fn arb_function(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-5.0f64..5.0, n)
    }

    proptest! {
        #[test]
        fn sliding_window_matches_brute_force(vals in arb_function(40), eps in 0.0f64..1.0) {
            let g = Grid::new(40).unwrap();
            let x = SampledFunction::new(g, vals).unwrap();
            prop_assert_eq!(modulus(&x, eps), brute_modulus(&x, eps));
        }

        #[test]
        fn curve_invariants(members in proptest::collection::vec(arb_function(33), 1..5), extra in arb_function(33)) {
            let g = Grid::new(33).unwrap();
            let eps = default_epsilons(g);
            let xs: Vec<_> = members.into_iter().map(|v| SampledFunction::new(g, v).unwrap()).collect();
            let small = fam(xs.clone());
            let mut bigger = xs;
            bigger.push(SampledFunction::new(g, extra).unwrap());
            let big = fam(bigger);
            let c_small = family_modulus_curve(&small, &eps).unwrap();
            let c_big = family_modulus_curve(&big, &eps).unwrap();
            prop_assert!(c_small.is_monotone() && c_big.is_monotone());
            for (a, b) in c_small.omegas.iter().zip(&c_big.omegas) {
                prop_assert!(a <= b);
                prop_assert!(*a <= 2.0 * small.norm());
            }
        }

        #[test]
        fn condition_m_never_violated(
            xs in proptest::collection::vec(arb_function(65), 1..4),
            ys in proptest::collection::vec(arb_function(65), 1..4),
        ) {
            let g = Grid::new(65).unwrap();
            let to_fam = |v: Vec<Vec<f64>>| fam(v.into_iter().map(|v| SampledFunction::new(g, v).unwrap()).collect());
            let table = condition_m_diagnostic(&to_fam(xs), &to_fam(ys), &default_epsilons(g)).unwrap();
            prop_assert_eq!(table.violations(), 0);
        }
    }
}
