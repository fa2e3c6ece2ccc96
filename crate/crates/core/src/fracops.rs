//! Riemann–Liouville fractional integral and derivative of order α ∈ (0,1)
//! on uniform grids over [0,1].
//!
//! The integral uses product-trapezoidal weights: the integrand is replaced
//! by its piecewise-linear interpolant and the weakly singular moments
//! ∫(t_i − s)^{α−1}·(hat function) ds are evaluated in closed form. On a
//! uniform grid the weights only depend on the index distance, so a table
//! of `n` interior coefficients plus `n` left-endpoint coefficients is
//! enough for every row.

use thiserror::Error;

use crate::gamma::gamma;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FracError {
    #[error("fractional order {0} is outside (0, 1)")]
    InvalidOrder(f64),
    #[error("a grid needs at least 2 points, got {0}")]
    GridTooSmall(usize),
    #[error("expected {expected} samples, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("sample {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("functions live on different grids ({0} vs {1} points)")]
    GridMismatch(usize, usize),
}

/// Uniform grid t_i = i/(n−1) on [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    n_points: usize,
}

impl Grid {
    pub fn new(n_points: usize) -> Result<Self, FracError> {
        if n_points < 2 {
            return Err(FracError::GridTooSmall(n_points));
        }
        Ok(Grid { n_points })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn step(&self) -> f64 {
        1.0 / self.intervals() as f64
    }

    pub fn intervals(&self) -> usize {
        self.n_points - 1
    }

    /// Node `i`; computed as a ratio so that the last node is exactly 1.
    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.intervals() as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.node(i))
    }

    /// Left node index and fractional offset in [0,1] of `t`, clamped into [0,1].
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let scaled = t.clamp(0.0, 1.0) * self.intervals() as f64;
        let idx = (scaled.floor() as usize).min(self.intervals() - 1);
        (idx, scaled - idx as f64)
    }
}

/// Values of a continuous function at every node of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, FracError> {
        if values.len() != grid.n_points() {
            return Err(FracError::LengthMismatch {
                expected: grid.n_points(),
                found: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(FracError::NonFinite { index, value });
        }
        Ok(SampledFunction { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        SampledFunction {
            grid,
            values: vec![0.0; grid.n_points()],
        }
    }

    /// Samples `f` at each node. Panics if `f` returns a non-finite value.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().map(f).collect();
        Self::new(grid, values).expect("sampled function must be finite")
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sup-norm of the difference; both functions must share a grid.
    pub fn distance(&self, other: &SampledFunction) -> Result<f64, FracError> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Piecewise-linear interpolant evaluated at `t` (clamped into [0,1]).
    pub fn interpolate(&self, t: f64) -> f64 {
        let (i, frac) = self.grid.locate(t);
        let (a, b) = (self.values[i], self.values[i + 1]);
        a + frac * (b - a)
    }

    /// Pointwise combination `a·self + b·other`.
    pub fn lin_comb(&self, a: f64, other: &SampledFunction, b: f64) -> Result<Self, FracError> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        SampledFunction::new(self.grid, values)
    }

    /// Pointwise product.
    pub fn product(&self, other: &SampledFunction) -> Result<Self, FracError> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x * y)
            .collect();
        SampledFunction::new(self.grid, values)
    }

    fn check_same_grid(&self, other: &SampledFunction) -> Result<(), FracError> {
        if self.grid != other.grid {
            return Err(FracError::GridMismatch(
                self.grid.n_points(),
                other.grid.n_points(),
            ));
        }
        Ok(())
    }
}

fn check_order(alpha: f64) -> Result<(), FracError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(FracError::InvalidOrder(alpha))
    }
}

/// (m+1)^p − m^p without cancellation for large m.
fn forward_power_difference(m: usize, p: f64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let m = m as f64;
    m.powf(p) * (p * (1.0 / m).ln_1p()).exp_m1()
}

/// Product-trapezoidal weight table for I^α on a uniform grid.
///
/// Row `i` reads z_i = Σ_j b_{i,j} y_j with
/// b_{i,0} = s·e_i, b_{i,j} = s·c_{i−j} for 1 ≤ j ≤ i, s = h^α / Γ(α+2).
#[derive(Debug, Clone)]
pub struct ProductTrapezoid {
    alpha: f64,
    grid: Grid,
    scale: f64,
    interior: Vec<f64>,
    endpoint: Vec<f64>,
}

impl ProductTrapezoid {
    pub fn new(grid: Grid, alpha: f64) -> Result<Self, FracError> {
        check_order(alpha)?;
        let n = grid.n_points();
        let p = alpha + 1.0;
        let scale = grid.step().powf(alpha) / gamma(alpha + 2.0);

        let mut interior = Vec::with_capacity(n);
        interior.push(1.0);
        let mut prev = forward_power_difference(0, p);
        for m in 1..n {
            let cur = forward_power_difference(m, p);
            interior.push(cur - prev);
            prev = cur;
        }

        // e_i = (i−1)^{α+1} − (i−1−α)·i^α, rearranged as
        // i^α·[(i−1)·((1 − 1/i)^α − 1) + α].
        let mut endpoint = Vec::with_capacity(n);
        endpoint.push(0.0);
        for i in 1..n {
            let fi = i as f64;
            let shrink = (alpha * (-1.0 / fi).ln_1p()).exp_m1();
            endpoint.push(fi.powf(alpha) * ((fi - 1.0) * shrink + alpha));
        }

        Ok(ProductTrapezoid {
            alpha,
            grid,
            scale,
            interior,
            endpoint,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// b_{i,j}; zero above the diagonal and on row 0.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        if i == 0 || j > i {
            0.0
        } else if j == 0 {
            self.scale * self.endpoint[i]
        } else {
            self.scale * self.interior[i - j]
        }
    }

    pub fn apply(&self, y: &SampledFunction) -> Result<SampledFunction, FracError> {
        if y.grid() != self.grid {
            return Err(FracError::GridMismatch(
                y.grid().n_points(),
                self.grid.n_points(),
            ));
        }
        Ok(SampledFunction {
            grid: self.grid,
            values: self.apply_values(y.values()),
        })
    }

    pub(crate) fn apply_values(&self, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        let mut z = vec![0.0; n];
        for i in 1..n {
            let mut acc = self.endpoint[i] * y[0];
            // c_{i−j} y_j for j = 1..=i, walking the kernel table backwards.
            for (c, yj) in self.interior[..i].iter().rev().zip(&y[1..=i]) {
                acc += c * yj;
            }
            z[i] = self.scale * acc;
        }
        z
    }
}

/// I^α y by the product-trapezoidal rule.
pub fn frac_integral(y: &SampledFunction, alpha: f64) -> Result<SampledFunction, FracError> {
    ProductTrapezoid::new(y.grid(), alpha)?.apply(y)
}

/// D^α y = d/dt I^{1−α} y, differentiated with second-order finite differences
/// (central inside, one-sided three-point at both ends).
pub fn frac_derivative(y: &SampledFunction, alpha: f64) -> Result<SampledFunction, FracError> {
    check_order(alpha)?;
    let w = frac_integral(y, 1.0 - alpha)?;
    let grid = y.grid();
    let h = grid.step();
    let w = w.values();
    let n = w.len();
    let values = if n == 2 {
        let d = (w[1] - w[0]) / h;
        vec![d, d]
    } else {
        (0..n)
            .map(|i| {
                if i == 0 {
                    (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * h)
                } else if i == n - 1 {
                    (3.0 * w[n - 1] - 4.0 * w[n - 2] + w[n - 3]) / (2.0 * h)
                } else {
                    (w[i + 1] - w[i - 1]) / (2.0 * h)
                }
            })
            .collect()
    };
    SampledFunction::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn power_rule_integral(alpha: f64, beta: f64, t: f64) -> f64 {
        gamma(beta + 1.0) / gamma(alpha + beta + 1.0) * t.powf(alpha + beta)
    }

    fn max_err(a: &SampledFunction, exact: impl Fn(f64) -> f64) -> f64 {
        a.grid()
            .nodes()
            .zip(a.values())
            .fold(0.0, |m, (t, v)| m.max((v - exact(t)).abs()))
    }

    // Independent oracle: direct moment integration of one hat function by
    // composite Gauss–Jacobi-free substitution u = (t−s)^α, which removes the
    // singularity so that plain midpoint quadrature converges.
    fn brute_weight(grid: Grid, alpha: f64, i: usize, j: usize) -> f64 {
        let h = grid.step();
        let t = grid.node(i);
        let tj = grid.node(j);
        let hat = |s: f64| (1.0 - ((s - tj) / h).abs()).max(0.0);
        // ∫_0^t (t−s)^{α−1} φ(s) ds = (1/α) ∫_0^{t^α} φ(t − u^{1/α}) du
        let upper = t.powf(alpha);
        let m = 200_000;
        let du = upper / m as f64;
        let sum: f64 = (0..m)
            .map(|k| {
                let u = (k as f64 + 0.5) * du;
                hat(t - u.powf(1.0 / alpha))
            })
            .sum();
        sum * du / alpha / gamma(alpha)
    }

    #[test]
    fn grid_nodes() {
        let g = Grid::new(5).unwrap();
        assert_eq!(g.node(0), 0.0);
        assert_eq!(g.node(4), 1.0);
        assert_eq!(g.step(), 0.25);
        assert_eq!(g.locate(1.0), (3, 1.0));
        assert_eq!(g.locate(0.3).0, 1);
        assert!(Grid::new(1).is_err());
    }

    #[test]
    fn sampled_function_rejects_bad_input() {
        let g = Grid::new(3).unwrap();
        assert!(matches!(
            SampledFunction::new(g, vec![0.0, 1.0]),
            Err(FracError::LengthMismatch { .. })
        ));
        assert!(matches!(
            SampledFunction::new(g, vec![0.0, f64::NAN, 1.0]),
            Err(FracError::NonFinite { index: 1, .. })
        ));
    }

    #[test]
    fn interpolation_is_linear_between_nodes() {
        let g = Grid::new(11).unwrap();
        let y = SampledFunction::from_fn(g, |t| t * t);
        assert!((y.interpolate(0.25) - 0.5 * (0.04 + 0.09)).abs() < 1e-15);
        assert_eq!(y.interpolate(1.0), 1.0);
        assert_eq!(y.interpolate(-0.1), 0.0);
    }

    #[test]
    fn order_out_of_range() {
        let g = Grid::new(9).unwrap();
        let y = SampledFunction::zeros(g);
        for alpha in [0.0, 1.0, -0.5, 1.5] {
            assert_eq!(
                frac_integral(&y, alpha),
                Err(FracError::InvalidOrder(alpha))
            );
            assert_eq!(
                frac_derivative(&y, alpha),
                Err(FracError::InvalidOrder(alpha))
            );
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = Grid::new(65).unwrap();
        let y = SampledFunction::zeros(g);
        assert!(frac_integral(&y, 0.5)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        assert!(frac_derivative(&y, 0.5)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn weights_match_brute_force_moments() {
        let g = Grid::new(9).unwrap();
        for alpha in [0.25, 0.5, 0.8] {
            let w = ProductTrapezoid::new(g, alpha).unwrap();
            for (i, j) in [
                (1, 0),
                (1, 1),
                (4, 0),
                (4, 2),
                (4, 4),
                (8, 0),
                (8, 3),
                (8, 7),
            ] {
                let exact = brute_weight(g, alpha, i, j);
                assert!(
                    (w.weight(i, j) - exact).abs() < 1e-6,
                    "alpha {alpha} ({i},{j}): {} vs {exact}",
                    w.weight(i, j)
                );
            }
        }
    }

    #[test]
    fn weights_nonnegative_and_row_sums_exact() {
        for n in [2, 33, 1025, 4097] {
            let g = Grid::new(n).unwrap();
            for alpha in [0.1, 0.25, 0.5, 0.75, 0.95] {
                let w = ProductTrapezoid::new(g, alpha).unwrap();
                for i in 0..n {
                    let mut sum = 0.0;
                    for j in 0..=i {
                        let b = w.weight(i, j);
                        assert!(b >= 0.0, "negative weight n={n} alpha={alpha} ({i},{j})");
                        sum += b;
                    }
                    let exact = g.node(i).powf(alpha) / gamma(alpha + 1.0);
                    if i == 0 {
                        assert_eq!(sum, 0.0);
                    } else {
                        assert!(
                            ((sum - exact) / exact).abs() < 1e-12,
                            "n={n} alpha={alpha} i={i}: {sum} vs {exact}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn constant_integrand_half_order() {
        let g = Grid::new(257).unwrap();
        let z = frac_integral(&SampledFunction::from_fn(g, |_| 1.0), 0.5).unwrap();
        let err = max_err(&z, |t| power_rule_integral(0.5, 0.0, t));
        assert!(err < 1e-12, "err {err}");
    }

    #[test]
    fn linear_integrand_half_order() {
        let g = Grid::new(1025).unwrap();
        let z = frac_integral(&SampledFunction::from_fn(g, |t| t), 0.5).unwrap();
        let err = max_err(&z, |t| {
            t.powf(1.5) / (3.0 * std::f64::consts::PI.sqrt() / 4.0)
        });
        assert!(err <= 1e-4, "err {err}");
    }

    #[test]
    fn power_rule_second_order() {
        for (alpha, beta) in [(0.5, 2.0), (0.3, 3.0), (0.7, 1.5)] {
            let errs: Vec<f64> = [129, 257, 513]
                .iter()
                .map(|&n| {
                    let g = Grid::new(n).unwrap();
                    let z = frac_integral(&SampledFunction::from_fn(g, |t| t.powf(beta)), alpha)
                        .unwrap();
                    max_err(&z, |t| power_rule_integral(alpha, beta, t))
                })
                .collect();
            for pair in errs.windows(2) {
                let order = (pair[0] / pair[1]).log2();
                assert!(order >= 1.9, "alpha {alpha} beta {beta}: order {order}");
            }
        }
    }

    #[test]
    fn derivative_power_rule() {
        // D^α t^β = Γ(β+1)/Γ(β−α+1) t^{β−α}; with β = α the result is constant.
        let alpha = 0.5;
        let g = Grid::new(2049).unwrap();
        let y = SampledFunction::from_fn(g, |t| gamma(alpha + 1.0) * t.powf(alpha));
        let d = frac_derivative(&y, alpha).unwrap();
        let expected = gamma(alpha + 1.0) * gamma(alpha + 1.0);
        // t^{1/2} has an unbounded derivative at 0, so the first few nodes are
        // excluded from the pointwise check.
        for (i, v) in d.values().iter().enumerate().skip(g.n_points() / 64) {
            assert!((v - expected).abs() < 1e-3, "node {i}: {v} vs {expected}");
        }

        let y = SampledFunction::from_fn(g, |t| t * t);
        let d = frac_derivative(&y, 0.3).unwrap();
        let err = max_err(&d, |t| 2.0 / gamma(2.7) * t.powf(1.7));
        assert!(err < 1e-4, "err {err}");
    }

    #[test]
    fn derivative_inverts_integral() {
        let y_of = |t: f64| t * (1.0 - t);
        let mut last = f64::INFINITY;
        for n in [1025, 2049, 4097] {
            let g = Grid::new(n).unwrap();
            let y = SampledFunction::from_fn(g, y_of);
            let back = frac_derivative(&frac_integral(&y, 0.5).unwrap(), 0.5).unwrap();
            let err = (1..n - 1)
                .map(|i| (back.values()[i] - y.values()[i]).abs())
                .fold(0.0, f64::max)
                / y.sup_norm();
            assert!(err < last, "n {n}: {err} did not improve on {last}");
            last = err;
        }
        assert!(last <= 1e-2, "relative error {last}");
    }

    proptest! {
        #[test]
        fn linearity(a in -3.0f64..3.0, b in -3.0f64..3.0, c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, alpha in 0.05f64..0.95) {
            let g = Grid::new(65).unwrap();
            let y1 = SampledFunction::from_fn(g, |t| (c1 * t).sin() + t);
            let y2 = SampledFunction::from_fn(g, |t| (c2 * t * t).cos());
            let lhs = frac_integral(&y1.lin_comb(a, &y2, b).unwrap(), alpha).unwrap();
            let rhs = frac_integral(&y1, alpha).unwrap().lin_comb(a, &frac_integral(&y2, alpha).unwrap(), b).unwrap();
            prop_assert!(lhs.distance(&rhs).unwrap() < 1e-13);
        }

        #[test]
        fn nonnegative_integrands_give_nonnegative_integrals(
            vals in proptest::collection::vec(0.0f64..10.0, 33),
            alpha in 0.05f64..0.95,
        ) {
            let g = Grid::new(33).unwrap();
            let z = frac_integral(&SampledFunction::new(g, vals).unwrap(), alpha).unwrap();
            prop_assert!(z.values().iter().all(|&v| v >= 0.0));
        }

        // Monotonicity needs a nondecreasing integrand: a spike near 0 alone
        // produces a decaying (t − s)^{α−1} tail.
        #[test]
        fn nondecreasing_nonnegative_integrands_give_nondecreasing_integrals(
            mut vals in proptest::collection::vec(0.0f64..10.0, 33),
            alpha in 0.05f64..0.95,
        ) {
            vals.sort_by(f64::total_cmp);
            let g = Grid::new(33).unwrap();
            let z = frac_integral(&SampledFunction::new(g, vals).unwrap(), alpha).unwrap();
            let z = z.values();
            prop_assert!(z.iter().all(|&v| v >= 0.0));
            for w in z.windows(2) {
                prop_assert!(w[1] >= w[0] * (1.0 - 1e-14));
            }
        }
    }
}
