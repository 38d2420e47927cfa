//! Fractional sums and differences on uniform integer grids.
//!
//! A grid is the point set {a, a+1, ..., a+k} with real origin a and integer
//! length k >= 2. Operators are stated in the rewritten on-grid form
//!
//! ```text
//! left  sum, order nu:  f(t) + sum_{s=a}^{t-1}      w(t-s-1) f(s)
//! right sum, order nu:  f(t) + sum_{s=t+1}^{b}      w(s-t-1) f(s)
//! w(m) = nu (nu+1) ... (nu+m) / (m+1)!
//! ```
//!
//! so the coefficient for a summand at gap m is an iterative product; no gamma
//! quotient is evaluated and the nu -> 0 limit is exact. A fractional
//! difference of order alpha in (0, 1] is the forward difference of the
//! complementary sum of order 1 - alpha (negated for the right operator), and
//! is defined on all grid points but the last.
//!
//! Everything operates on plain value slices as well as on [`GridFunction`];
//! the slice entry points exist because derived quantities (forward
//! differences, integrand partials) live on truncated domains shorter than the
//! k >= 2 a [`Grid`] requires.

mod gamma;

pub use gamma::{falling_factorial, gamma, ln_gamma, PoleError};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("grid length must be at least 2, got {0}")]
    TooShort(usize),
    #[error("grid origin must be finite")]
    NonFiniteOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ValueError {
    #[error("grid with {expected} points got {got} values")]
    WrongLength { expected: usize, got: usize },
    #[error("value at index {index} is not finite")]
    NonFinite { index: usize },
}

/// Uniform unit-step grid {a, a+1, ..., a+k}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    a: f64,
    k: usize,
}

impl Grid {
    pub fn new(a: f64, k: usize) -> Result<Grid, GridError> {
        if !a.is_finite() {
            return Err(GridError::NonFiniteOrigin);
        }
        if k < 2 {
            return Err(GridError::TooShort(k));
        }
        Ok(Grid { a, k })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Terminal point b = a + k.
    pub fn b(&self) -> f64 {
        self.a + self.k as f64
    }

    /// Number of unit steps.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of points, k + 1.
    pub fn num_points(&self) -> usize {
        self.k + 1
    }

    pub fn point(&self, i: usize) -> f64 {
        assert!(i <= self.k, "point index {i} out of range 0..={}", self.k);
        self.a + i as f64
    }
}

/// Real-valued function sampled on every point of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<GridFunction, ValueError> {
        if values.len() != grid.num_points() {
            return Err(ValueError::WrongLength {
                expected: grid.num_points(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(ValueError::NonFinite { index });
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<GridFunction, ValueError> {
        let values = (0..grid.num_points()).map(|i| f(grid.point(i))).collect();
        GridFunction::new(grid, values)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// f(t+1) - f(t) at t = a + i, for i < k.
    pub fn forward_diff(&self, i: usize) -> f64 {
        forward_diff(&self.values, i)
    }

    pub fn left_frac_sum(&self, nu: f64, i: usize) -> f64 {
        left_frac_sum(&self.values, nu, i)
    }

    pub fn right_frac_sum(&self, nu: f64, i: usize) -> f64 {
        right_frac_sum(&self.values, nu, i)
    }

    pub fn left_frac_diff(&self, alpha: f64, i: usize) -> f64 {
        left_frac_diff(&self.values, alpha, i)
    }

    pub fn right_frac_diff(&self, alpha: f64, i: usize) -> f64 {
        right_frac_diff(&self.values, alpha, i)
    }
}

/// Summand coefficients w(0), ..., w(count - 1) of the rewritten fractional
/// sums, where w(m) multiplies the value at gap m from the evaluation point:
/// w(m) = nu (nu+1) ... (nu+m) / (m+1)!.
pub fn frac_sum_weights(nu: f64, count: usize) -> Vec<f64> {
    assert!(nu >= 0.0 && nu.is_finite(), "sum order must be >= 0, got {nu}");
    let mut w = Vec::with_capacity(count);
    if count == 0 {
        return w;
    }
    w.push(nu);
    for m in 1..count {
        let next = w[m - 1] * (nu + m as f64) / (m as f64 + 1.0);
        w.push(next);
    }
    w
}

// Grids longer than this accumulate their sums with a Neumaier compensation
// term; shorter ones use plain accumulation.
const COMPENSATED_LEN: usize = 64;

struct Accumulator {
    sum: f64,
    comp: f64,
    compensated: bool,
}

impl Accumulator {
    fn new(compensated: bool) -> Accumulator {
        Accumulator { sum: 0.0, comp: 0.0, compensated }
    }

    fn add(&mut self, term: f64) {
        if !self.compensated {
            self.sum += term;
            return;
        }
        let t = self.sum + term;
        if self.sum.abs() >= term.abs() {
            self.comp += (self.sum - t) + term;
        } else {
            self.comp += (term - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn forward_diff(values: &[f64], i: usize) -> f64 {
    assert!(
        i + 1 < values.len(),
        "forward difference index {i} out of range 0..{}",
        values.len().saturating_sub(1)
    );
    values[i + 1] - values[i]
}

/// Left fractional sum of order nu >= 0 at index i, over values on a unit grid.
pub fn left_frac_sum(values: &[f64], nu: f64, i: usize) -> f64 {
    assert!(i < values.len(), "index {i} out of range 0..{}", values.len());
    let w = frac_sum_weights(nu, i);
    let mut acc = Accumulator::new(values.len() > COMPENSATED_LEN);
    for j in 0..i {
        acc.add(w[i - 1 - j] * values[j]);
    }
    values[i] + acc.total()
}

/// Right fractional sum of order nu >= 0 at index i; the terminal point is the
/// last entry of the slice.
pub fn right_frac_sum(values: &[f64], nu: f64, i: usize) -> f64 {
    let n = values.len();
    assert!(i < n, "index {i} out of range 0..{n}");
    let w = frac_sum_weights(nu, n - 1 - i);
    let mut acc = Accumulator::new(n > COMPENSATED_LEN);
    for s in i + 1..n {
        acc.add(w[s - i - 1] * values[s]);
    }
    values[i] + acc.total()
}

/// Left fractional difference of order alpha in (0, 1] at index i < len - 1:
/// the forward difference of the left sum of order 1 - alpha.
pub fn left_frac_diff(values: &[f64], alpha: f64, i: usize) -> f64 {
    assert!(
        0.0 < alpha && alpha <= 1.0,
        "difference order must lie in (0, 1], got {alpha}"
    );
    assert!(
        i + 1 < values.len(),
        "difference index {i} out of range 0..{}",
        values.len().saturating_sub(1)
    );
    let mu = 1.0 - alpha;
    left_frac_sum(values, mu, i + 1) - left_frac_sum(values, mu, i)
}

/// Right fractional difference of order alpha in (0, 1] at index i < len - 1:
/// minus the forward difference of the right sum of order 1 - alpha.
pub fn right_frac_diff(values: &[f64], alpha: f64, i: usize) -> f64 {
    assert!(
        0.0 < alpha && alpha <= 1.0,
        "difference order must lie in (0, 1], got {alpha}"
    );
    assert!(
        i + 1 < values.len(),
        "difference index {i} out of range 0..{}",
        values.len().saturating_sub(1)
    );
    let mu = 1.0 - alpha;
    right_frac_sum(values, mu, i) - right_frac_sum(values, mu, i + 1)
}

/// Residual of the left commutation identity at index i in 0..k: applying the
/// left sum to the forward difference equals the forward difference of the
/// left sum minus w(i) f(a).
pub fn left_commutation_residual(f: &GridFunction, nu: f64, i: usize) -> f64 {
    let k = f.grid().k();
    assert!(i < k, "commutation index {i} out of range 0..{k}");
    let df: Vec<f64> = (0..k).map(|j| f.forward_diff(j)).collect();
    let lhs = left_frac_sum(&df, nu, i);
    let w_i = *frac_sum_weights(nu, i + 1).last().unwrap();
    let rhs = (f.left_frac_sum(nu, i + 1) - f.left_frac_sum(nu, i)) - w_i * f.value(0);
    lhs - rhs
}

/// Residual of the right commutation identity at index i in 0..k: the right
/// sum truncated at b - 1 applied to the forward difference equals
/// w(k - 1 - i) f(b) plus the forward difference of the full right sum.
pub fn right_commutation_residual(f: &GridFunction, nu: f64, i: usize) -> f64 {
    let k = f.grid().k();
    assert!(i < k, "commutation index {i} out of range 0..{k}");
    let df: Vec<f64> = (0..k).map(|j| f.forward_diff(j)).collect();
    let lhs = right_frac_sum(&df, nu, i);
    let w_end = *frac_sum_weights(nu, k - i).last().unwrap();
    let rhs = w_end * f.value(k) + (f.right_frac_sum(nu, i + 1) - f.right_frac_sum(nu, i));
    lhs - rhs
}
