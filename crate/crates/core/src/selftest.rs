//! Built-in verification suite: closed-form oracles for the quadrature,
//! properties of the growth function, and the worked example's numbers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fracops::{frac_derivative, frac_integral, Grid, ProductTrapezoid, SampledFunction};
use crate::gamma::gamma;
use crate::hypothesis::{concave_growth, find_r0, h4_functions, DEFAULT_R0_SCAN};
use crate::mnc::{check_comparison_function, ComparisonFunction};
use crate::problem::{derive_constants, example_one, ProblemSpec, SamplingPlan};
use crate::solver::{solve, Sign, SolveSettings};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Errors this close to zero mean the rule is exact for the integrand, so no
/// convergence order can be observed.
pub fn roundoff_floor(scale: f64) -> f64 {
    64.0 * f64::EPSILON * scale.max(1.0)
}

/// Max node error of I^α t^β against Γ(β+1)/Γ(α+β+1)·t^{α+β}.
pub fn power_rule_error(alpha: f64, beta: f64, n: usize) -> f64 {
    let grid = Grid::new(n).expect("grid size");
    let y = SampledFunction::from_fn(grid, |t| t.powf(beta));
    let z = frac_integral(&y, alpha).expect("valid order");
    let c = gamma(beta + 1.0) / gamma(alpha + beta + 1.0);
    grid.nodes()
        .zip(z.values())
        .map(|(t, v)| (v - c * t.powf(alpha + beta)).abs())
        .fold(0.0, f64::max)
}

/// Observed orders log₂(e_n / e_{2n−1}); `None` where both errors sit at the
/// roundoff floor.
pub fn observed_orders(errors: &[f64], floor: f64) -> Vec<Option<f64>> {
    errors
        .windows(2)
        .map(|w| {
            if w[0] <= floor && w[1] <= floor {
                None
            } else {
                Some((w[0] / w[1]).log2())
            }
        })
        .collect()
}

/// Interior max |D^α I^α y − y| / ‖y‖ for y = t(1 − t).
pub fn round_trip_error(alpha: f64, n: usize) -> f64 {
    let grid = Grid::new(n).expect("grid size");
    let y = SampledFunction::from_fn(grid, |t| t * (1.0 - t));
    let back = frac_derivative(&frac_integral(&y, alpha).expect("valid order"), alpha)
        .expect("valid order");
    (1..n - 1)
        .map(|i| (back.values()[i] - y.values()[i]).abs())
        .fold(0.0, f64::max)
        / y.sup_norm()
}

/// Counts monotonicity and subadditivity failures of d ↦ (1+d)^k − 1 over
/// `pairs` random pairs from [0, 10]².
pub fn growth_function_failures(k: f64, pairs: usize, seed: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut monotone, mut subadditive) = (0, 0);
    for _ in 0..pairs {
        let a: f64 = rng.gen_range(0.0..10.0);
        let b: f64 = rng.gen_range(0.0..10.0);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (glo, ghi) = (concave_growth(k, lo), concave_growth(k, hi));
        let slack = 4.0 * f64::EPSILON * (1.0 + ghi);
        if glo > ghi + slack {
            monotone += 1;
        }
        if ghi - glo > concave_growth(k, hi - lo) + slack {
            subadditive += 1;
        }
    }
    (monotone, subadditive)
}

/// x(t) = √t solves the problem with f ≡ 1, g ≡ Γ(3/2).
pub fn manufactured_sqrt() -> ProblemSpec {
    ProblemSpec::new(
        0.5,
        "1",
        &format!("{:?}", gamma(1.5)),
        "t/2",
        "t",
        0.25,
        1.0 / 3.0,
    )
    .expect("well formed")
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

fn gamma_check() -> Check {
    let g = gamma(1.5);
    let exact = std::f64::consts::PI.sqrt() / 2.0;
    let passed = (g - 0.8862).abs() <= 5e-5 && ((g - exact) / exact).abs() <= 1e-13;
    check("gamma", passed, format!("gamma(3/2) = {g:.12}"))
}

fn power_rule_check() -> Check {
    let mut passed = true;
    let mut parts = Vec::new();
    for (alpha, beta) in [(0.5, 1.0), (0.5, 2.0), (0.25, 1.0), (0.75, 1.0)] {
        let errors: Vec<f64> = [129, 257, 513, 1025]
            .iter()
            .map(|&n| power_rule_error(alpha, beta, n))
            .collect();
        let orders = observed_orders(&errors, roundoff_floor(1.0));
        let ok = errors[3] <= 1e-4 && !orders.iter().flatten().any(|&o| o < 1.9);
        passed &= ok;
        let min_order = orders.iter().flatten().copied().reduce(f64::min);
        parts.push(match min_order {
            Some(o) => format!("({alpha},{beta}) err {:.2e} order {o:.2}", errors[3]),
            None => format!("({alpha},{beta}) err {:.2e} exact", errors[3]),
        });
    }
    check("power-rule", passed, parts.join("; "))
}

fn weight_identity_check() -> Check {
    let mut worst: f64 = 0.0;
    for alpha in [0.25, 0.5, 0.75] {
        let grid = Grid::new(1025).expect("grid size");
        let rule = ProductTrapezoid::new(grid, alpha).expect("valid order");
        for i in 1..grid.n_points() {
            let sum: f64 = (0..=i).map(|j| rule.weight(i, j)).sum();
            let exact = grid.node(i).powf(alpha) / gamma(alpha + 1.0);
            worst = worst.max(((sum - exact) / exact).abs());
        }
    }
    check(
        "weight-identity",
        worst <= 1e-12,
        format!("max relative error {worst:.2e}"),
    )
}

fn round_trip_check() -> Check {
    let mut passed = true;
    let mut parts = Vec::new();
    for alpha in [0.3, 0.5, 0.7] {
        let errs: Vec<f64> = [1025, 2049, 4097]
            .iter()
            .map(|&n| round_trip_error(alpha, n))
            .collect();
        passed &= errs.windows(2).all(|w| w[1] < w[0]) && errs[2] <= 1e-2;
        parts.push(format!("alpha {alpha}: {:.2e}", errs[2]));
    }
    check("round-trip", passed, parts.join("; "))
}

fn growth_function_check() -> Check {
    let mut failures = 0;
    for (i, k) in [0.1, 0.25, 0.5, 0.9].into_iter().enumerate() {
        let (m, s) = growth_function_failures(k, 10_000, i as u64);
        failures += m + s;
    }
    let lhs = (4.0f64.sqrt() - 2.0f64.sqrt()).abs();
    let rhs = concave_growth(0.5, 2.0);
    let passed = failures == 0 && lhs <= rhs;
    check(
        "growth-function",
        passed,
        format!("{failures} failures; |sqrt4 - sqrt2| = {lhs:.4} <= {rhs:.4}"),
    )
}

fn comparison_function_check() -> Check {
    let functions = [
        ComparisonFunction::OnePlus,
        ComparisonFunction::ExpSqrt,
        ComparisonFunction::Arctan { a: 0.5 },
        ComparisonFunction::OnePlusSquare { beta: 0.5 },
    ];
    let failed = functions
        .iter()
        .filter(|&&phi| !check_comparison_function(phi, 1e-3, 100.0, 1e-6).passed())
        .count();
    check(
        "comparison-functions",
        failed == 0,
        format!("{}/{} in class", functions.len() - failed, functions.len()),
    )
}

fn example_constants_check() -> Check {
    let spec = example_one(4.0, 3.0);
    let Ok(c) = derive_constants(&spec, SamplingPlan::default().t_samples) else {
        return check("example-constants", false, "could not evaluate f, g".into());
    };
    let conds = h4_functions(c.k1, c.k2, spec.k_exp, spec.r_exp, spec.alpha);
    let psi2 = conds.psi2(0.8);
    let r0 = find_r0(&conds, spec.r0_search_max, DEFAULT_R0_SCAN);
    let passed = c.k1 == 0.5
        && c.k2 == 2.0 / 3.0
        && (-0.0035..=-0.0025).contains(&psi2)
        && conds.psi1(0.8) <= 0.0
        && r0.is_some_and(|r| r <= 0.8 && conds.feasible(r));
    check(
        "example-constants",
        passed,
        format!("K1 {} K2 {:.6} psi2(0.8) {psi2:.5} r0 {r0:?}", c.k1, c.k2),
    )
}

fn manufactured_check() -> Check {
    let settings = SolveSettings {
        grid_points: 2049,
        ..SolveSettings::default()
    };
    match solve(&manufactured_sqrt(), &settings) {
        Ok(res) => {
            let err = res
                .x
                .grid()
                .nodes()
                .zip(res.x.values())
                .map(|(t, v)| (v - t.sqrt()).abs())
                .fold(0.0, f64::max);
            check(
                "manufactured-solution",
                res.converged() && err <= 5e-3,
                format!("max error {err:.2e}"),
            )
        }
        Err(e) => check("manufactured-solution", false, e.to_string()),
    }
}

fn example_solve_check() -> Check {
    match solve(&example_one(4.0, 3.0), &SolveSettings::default()) {
        Ok(res) => {
            let passed = res.converged()
                && res.sup_norm <= 0.8 + 1e-3
                && res.sign == Sign::PositiveOnInterior
                && res.residual <= 1e-3;
            check(
                "example-solve",
                passed,
                format!(
                    "{} iterations, sup norm {:.6}, {}, residual {:.2e}",
                    res.iterations, res.sup_norm, res.sign, res.residual
                ),
            )
        }
        Err(e) => check("example-solve", false, e.to_string()),
    }
}

/// Runs every check in a fixed order.
pub fn run() -> Vec<Check> {
    vec![
        gamma_check(),
        power_rule_check(),
        weight_identity_check(),
        round_trip_check(),
        growth_function_check(),
        comparison_function_check(),
        example_constants_check(),
        manufactured_check(),
        example_solve_check(),
    ]
}
