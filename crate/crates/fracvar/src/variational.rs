//! Summed variational functionals with two-sided fractional differences.
//!
//! A problem is a grid {a, ..., b}, orders alpha and beta in (0, 1], boundary
//! conditions at a and b (fixed value or free), and an integrand
//! L(t, u, v, w). The functional is
//!
//! ```text
//! J[y] = sum_{t=a}^{b-1} L(t, y(t+1), (left diff, order alpha) y(t), (right diff, order beta) y(t))
//! ```
//!
//! Stationarity of J splits into the Euler-Lagrange residual on the interior
//! points {a, ..., b-2} and, for each free endpoint, a natural boundary
//! residual; [`el_residual`], [`natural_bc_initial`], and
//! [`natural_bc_terminal`] evaluate them for a candidate y. Each one equals
//! the partial derivative of [`functional_value`] with respect to the
//! matching value of y (at t+1, a, b respectively), which is what the solver
//! drives to zero.
//!
//! [`legendre_lhs`] evaluates the second-order (accessory) quadratic form
//! produced by a unit spike variation at t+1; a minimizer must keep it
//! nonnegative on every interior point.
//!
//! Integrand partials are recomputed from the expression on every call; no
//! state is cached across candidate updates.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::expr::{EvalError, Expression, ParseError, SecondOrderValue};
use crate::fraccalc::{
    frac_sum_weights, left_frac_diff, right_frac_diff, Grid, GridFunction,
};

/// Default slack accepted when testing the second-order condition.
pub const LEGENDRE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    Fixed(f64),
    Free,
}

impl Boundary {
    pub fn is_free(&self) -> bool {
        matches!(self, Boundary::Free)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Initial,
    Terminal,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Initial => write!(f, "initial"),
            Side::Terminal => write!(f, "terminal"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VarError {
    #[error("fractional order {0} must lie in (0, 1]")]
    InvalidOrder(f64),
    #[error("{side} boundary value must be finite")]
    NonFiniteBoundary { side: Side },
    #[error("y at the {side} boundary is {got}, but the problem fixes it to {want}")]
    BoundaryMismatch { side: Side, want: f64, got: f64 },
    #[error("the {side} boundary is fixed; no natural condition applies")]
    NotFree { side: Side },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Integrand expression together with its parameter bindings.
#[derive(Debug, Clone, PartialEq)]
pub struct Lagrangian {
    expression: Expression,
    params: BTreeMap<String, f64>,
}

impl Lagrangian {
    pub fn new(expression: Expression, params: BTreeMap<String, f64>) -> Lagrangian {
        Lagrangian { expression, params }
    }

    pub fn parse(source: &str, params: BTreeMap<String, f64>) -> Result<Lagrangian, ParseError> {
        Ok(Lagrangian::new(crate::expr::parse(source)?, params))
    }

    pub fn expression(&self) -> &Expression {
        &self.expression
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn eval(&self, t: f64, u: f64, v: f64, w: f64) -> Result<f64, EvalError> {
        self.expression.eval(t, u, v, w, &self.params)
    }

    pub fn partials(&self, t: f64, u: f64, v: f64, w: f64) -> Result<SecondOrderValue, EvalError> {
        self.expression.eval_with_partials(t, u, v, w, &self.params)
    }
}

/// A complete variational problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    grid: Grid,
    alpha: f64,
    beta: f64,
    initial: Boundary,
    terminal: Boundary,
    lagrangian: Lagrangian,
}

impl ProblemSpec {
    pub fn new(
        grid: Grid,
        alpha: f64,
        beta: f64,
        initial: Boundary,
        terminal: Boundary,
        lagrangian: Lagrangian,
    ) -> Result<ProblemSpec, VarError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(VarError::InvalidOrder(alpha));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(VarError::InvalidOrder(beta));
        }
        for (side, bound) in [(Side::Initial, initial), (Side::Terminal, terminal)] {
            if let Boundary::Fixed(value) = bound {
                if !value.is_finite() {
                    return Err(VarError::NonFiniteBoundary { side });
                }
            }
        }
        Ok(ProblemSpec { grid, alpha, beta, initial, terminal, lagrangian })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn initial(&self) -> Boundary {
        self.initial
    }

    pub fn terminal(&self) -> Boundary {
        self.terminal
    }

    pub fn lagrangian(&self) -> &Lagrangian {
        &self.lagrangian
    }

    /// The same problem with different orders.
    pub fn with_orders(&self, alpha: f64, beta: f64) -> Result<ProblemSpec, VarError> {
        ProblemSpec::new(
            self.grid,
            alpha,
            beta,
            self.initial,
            self.terminal,
            self.lagrangian.clone(),
        )
    }
}

/// Arguments handed to the integrand at interior index i: the shifted value
/// and both fractional differences of y at t = a + i.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationPoint {
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

fn check_same_grid(p: &ProblemSpec, y: &GridFunction) {
    assert!(
        p.grid() == y.grid(),
        "candidate grid {:?} does not match the problem grid {:?}",
        y.grid(),
        p.grid()
    );
}

pub fn evaluation_point(p: &ProblemSpec, y: &GridFunction, i: usize) -> EvaluationPoint {
    check_same_grid(p, y);
    let k = p.grid().k();
    assert!(i < k, "evaluation index {i} out of range 0..{k}");
    EvaluationPoint {
        t: p.grid().point(i),
        u: y.value(i + 1),
        v: left_frac_diff(y.values(), p.alpha(), i),
        w: right_frac_diff(y.values(), p.beta(), i),
    }
}

fn check_boundaries(p: &ProblemSpec, y: &GridFunction) -> Result<(), VarError> {
    let k = p.grid().k();
    if let Boundary::Fixed(want) = p.initial() {
        if y.value(0) != want {
            return Err(VarError::BoundaryMismatch { side: Side::Initial, want, got: y.value(0) });
        }
    }
    if let Boundary::Fixed(want) = p.terminal() {
        if y.value(k) != want {
            return Err(VarError::BoundaryMismatch { side: Side::Terminal, want, got: y.value(k) });
        }
    }
    Ok(())
}

/// J[y]: the integrand summed over {a, ..., b-1}. Fixed boundary values must
/// be met by y exactly.
pub fn functional_value(p: &ProblemSpec, y: &GridFunction) -> Result<f64, VarError> {
    check_same_grid(p, y);
    check_boundaries(p, y)?;
    let mut total = 0.0;
    for i in 0..p.grid().k() {
        let ep = evaluation_point(p, y, i);
        total += p.lagrangian().eval(ep.t, ep.u, ep.v, ep.w)?;
    }
    Ok(total)
}

/// Integrand partials at every interior index, in grid order.
pub(crate) fn integrand_partials(
    p: &ProblemSpec,
    y: &GridFunction,
) -> Result<Vec<SecondOrderValue>, VarError> {
    check_same_grid(p, y);
    (0..p.grid().k())
        .map(|i| {
            let ep = evaluation_point(p, y, i);
            p.lagrangian().partials(ep.t, ep.u, ep.v, ep.w).map_err(VarError::from)
        })
        .collect()
}

/// Euler-Lagrange residual at t = a + i, for i in 0..=k-2:
///
/// ```text
/// L_u(t) + (right diff, order alpha, domain cut at b-1) L_v(t)
///        + (left diff, order beta) L_w(t)
/// ```
///
/// where L_u, L_v, L_w are the integrand partials along y on {a, ..., b-1}.
pub fn el_residual(p: &ProblemSpec, y: &GridFunction, i: usize) -> Result<f64, VarError> {
    let k = p.grid().k();
    assert!(i + 1 < k, "interior index {i} out of range 0..{}", k - 1);
    let parts = integrand_partials(p, y)?;
    Ok(el_residual_from_partials(p, &parts, i))
}

pub(crate) fn el_residual_from_partials(
    p: &ProblemSpec,
    parts: &[SecondOrderValue],
    i: usize,
) -> f64 {
    let lv: Vec<f64> = parts.iter().map(|s| s.grad[1]).collect();
    let lw: Vec<f64> = parts.iter().map(|s| s.grad[2]).collect();
    parts[i].grad[0] + right_frac_diff(&lv, p.alpha(), i) + left_frac_diff(&lw, p.beta(), i)
}

/// Natural boundary residual at a free initial point:
///
/// ```text
/// -L_v(a) + sum_{j=0}^{k-1} w(j) L_v(a+j) - sum_{j=1}^{k-1} w(j-1) L_v(a+j) + L_w(a)
/// ```
///
/// with w the order-(1 - alpha) sum weights. Together with the interior
/// residuals this makes the first variation vanish when y(a) is free.
pub fn natural_bc_initial(p: &ProblemSpec, y: &GridFunction) -> Result<f64, VarError> {
    if !p.initial().is_free() {
        return Err(VarError::NotFree { side: Side::Initial });
    }
    let parts = integrand_partials(p, y)?;
    Ok(natural_bc_initial_from_partials(p, &parts))
}

pub(crate) fn natural_bc_initial_from_partials(
    p: &ProblemSpec,
    parts: &[SecondOrderValue],
) -> f64 {
    let k = p.grid().k();
    let w = frac_sum_weights(1.0 - p.alpha(), k);
    let mut correction = 0.0;
    for j in 0..k {
        let lv = parts[j].grad[1];
        correction += w[j] * lv;
        if j >= 1 {
            correction -= w[j - 1] * lv;
        }
    }
    -parts[0].grad[1] + correction + parts[0].grad[2]
}

/// Natural boundary residual at a free terminal point:
///
/// ```text
/// L_u(b-1) + L_v(b-1) - L_w(b-1)
///   + sum_{j=0}^{k-1} w(k-1-j) L_w(a+j) - sum_{j=0}^{k-2} w(k-2-j) L_w(a+j)
/// ```
///
/// with w the order-(1 - beta) sum weights.
pub fn natural_bc_terminal(p: &ProblemSpec, y: &GridFunction) -> Result<f64, VarError> {
    if !p.terminal().is_free() {
        return Err(VarError::NotFree { side: Side::Terminal });
    }
    let parts = integrand_partials(p, y)?;
    Ok(natural_bc_terminal_from_partials(p, &parts))
}

pub(crate) fn natural_bc_terminal_from_partials(
    p: &ProblemSpec,
    parts: &[SecondOrderValue],
) -> f64 {
    let k = p.grid().k();
    let w = frac_sum_weights(1.0 - p.beta(), k);
    let mut correction = 0.0;
    for j in 0..k {
        let lw = parts[j].grad[2];
        correction += w[k - 1 - j] * lw;
        if j <= k.saturating_sub(2) {
            correction -= w[k - 2 - j] * lw;
        }
    }
    let last = &parts[k - 1];
    last.grad[0] + last.grad[1] - last.grad[2] + correction
}

/// Residual of the fractional summation-by-parts identity for a pair (f, g):
/// f sampled on {a, ..., b-1} (one value per interior point of g's grid), g on
/// the full grid. Zero up to rounding for every pair and order.
pub fn summation_by_parts_residual(f: &[f64], g: &GridFunction, alpha: f64) -> f64 {
    let k = g.grid().k();
    assert!(
        f.len() == k,
        "f has {} values but g's grid has {k} interior points",
        f.len()
    );
    let gv = g.values();
    let mut lhs = 0.0;
    for i in 0..k {
        lhs += f[i] * left_frac_diff(gv, alpha, i);
    }
    let mut rhs = f[k - 1] * gv[k] - f[0] * gv[0];
    for i in 0..k - 1 {
        rhs += right_frac_diff(f, alpha, i) * gv[i + 1];
    }
    let w = frac_sum_weights(1.0 - alpha, k);
    let mut correction = 0.0;
    for j in 0..k {
        correction += w[j] * f[j];
        if j >= 1 {
            correction -= w[j - 1] * f[j];
        }
    }
    rhs += gv[0] * correction;
    lhs - rhs
}

// Squared-coefficient sequences of the accessory quadratic form. The spike
// variation at t+1 reaches later points through the left difference with
// weight C(d) at gap d >= 2, and earlier points through the right difference
// with weight D(e) at gap e >= 1. Both collapse differences of adjacent sum
// weights: C(d) = w(d-1) - w(d-2) at order mu, D(e) = w(e-1) - w(e) at order
// nu, which reduce to
//   C(2) = mu (mu - 1) / 2,      C(d) = C(d-1) (mu + d - 2) / d
//   D(1) = nu (1 - nu) / 2,      D(e) = D(e-1) (nu + e - 1) / (e + 1)
fn forward_spike_coeff(mu: f64, max_gap: usize) -> Vec<f64> {
    // entry d-2 holds C(d)
    if max_gap < 2 {
        return Vec::new();
    }
    let mut c = Vec::with_capacity(max_gap - 1);
    c.push(mu * (mu - 1.0) / 2.0);
    for d in 3..=max_gap {
        let prev = *c.last().unwrap();
        c.push(prev * (mu + d as f64 - 2.0) / d as f64);
    }
    c
}

fn backward_spike_coeff(nu: f64, max_gap: usize) -> Vec<f64> {
    // entry e-1 holds D(e)
    if max_gap < 1 {
        return Vec::new();
    }
    let mut d = Vec::with_capacity(max_gap);
    d.push(nu * (1.0 - nu) / 2.0);
    for e in 2..=max_gap {
        let prev = *d.last().unwrap();
        d.push(prev * (nu + e as f64 - 1.0) / (e as f64 + 1.0));
    }
    d
}

/// Residual between the closed product form of the forward spike coefficient
/// at the given gap >= 2 and the difference of the two kernel weights it
/// collapses; zero up to rounding for every order in (0, 1).
pub fn coefficient_identity_residual(mu: f64, gap: usize) -> f64 {
    assert!(gap >= 2, "the coefficient identity needs a gap of at least 2");
    let product = forward_spike_coeff(mu, gap).pop().unwrap();
    let w = frac_sum_weights(mu, gap);
    product - (w[gap - 1] - w[gap - 2])
}

/// Second-order (accessory) quadratic form of J at y for the unit spike
/// variation at a + i + 1, for i in 0..=k-2. A local minimizer keeps this
/// nonnegative at every i.
pub fn legendre_lhs(p: &ProblemSpec, y: &GridFunction, i: usize) -> Result<f64, VarError> {
    let k = p.grid().k();
    assert!(i + 1 < k, "interior index {i} out of range 0..{}", k - 1);
    let parts = integrand_partials(p, y)?;
    Ok(legendre_lhs_from_partials(p, &parts, i))
}

fn legendre_lhs_from_partials(p: &ProblemSpec, parts: &[SecondOrderValue], i: usize) -> f64 {
    let k = p.grid().k();
    let mu = 1.0 - p.alpha();
    let nu = 1.0 - p.beta();
    let here = &parts[i].hess;
    let next = &parts[i + 1].hess;

    let mut value = here[0][0] + 2.0 * here[0][1] + here[1][1];
    value += next[1][1] * (mu - 1.0) * (mu - 1.0);
    let c = forward_spike_coeff(mu, k - 1 - i);
    for s in i + 2..k {
        let coeff = c[s - i - 2];
        value += parts[s].hess[1][1] * coeff * coeff;
    }
    value += 2.0 * here[0][2] * (nu - 1.0);
    value += 2.0 * (nu - 1.0) * here[1][2];
    value += 2.0 * (mu - 1.0) * next[1][2];
    value += here[2][2] * (1.0 - nu) * (1.0 - nu);
    value += next[2][2];
    let d = backward_spike_coeff(nu, i);
    for s in 0..i {
        let coeff = d[i - s - 1];
        value += parts[s].hess[2][2] * coeff * coeff;
    }
    value
}

/// Outcome of testing the second-order condition at every interior point.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreReport {
    /// One accessory-form value per interior point, in grid order.
    pub values: Vec<f64>,
    pub min: f64,
    pub satisfied: bool,
    pub tolerance: f64,
}

pub fn legendre_check(
    p: &ProblemSpec,
    y: &GridFunction,
    tolerance: f64,
) -> Result<LegendreReport, VarError> {
    let parts = integrand_partials(p, y)?;
    let k = p.grid().k();
    let values: Vec<f64> = (0..k - 1)
        .map(|i| legendre_lhs_from_partials(p, &parts, i))
        .collect();
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(LegendreReport { values, min, satisfied: min >= -tolerance, tolerance })
}
