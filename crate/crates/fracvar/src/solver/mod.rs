//! Solvers that turn a [`ProblemSpec`] into an extremal.
//!
//! The stationarity system collects one equation per unknown value of y: the
//! Euler-Lagrange residual at every interior point, plus a natural boundary
//! residual for each free endpoint. [`solve_el`] drives that system to zero
//! with a damped Newton iteration; [`brute_force_minimize`] minimizes the
//! functional directly with derivative-free descent and serves as an
//! independent oracle for small problems. [`alpha_sweep`] repeats a solve
//! across orders and [`minimize_objective_over_alpha`] golden-sections the
//! map from alpha to the stationary objective value.
//!
//! Stationarity is necessary, not sufficient: a converged [`Solution`] is an
//! extremal candidate, and for non-convex integrands it may be a maximizer or
//! a saddle. Every solution therefore carries the second-order
//! [`LegendreReport`] so callers can screen candidates; a failed report
//! refutes minimality, a passing one does not prove it.
//!
//! Solves are single-threaded and deterministic. The only randomness is the
//! multi-start sampling in [`brute_force_minimize`], which draws from a
//! generator seeded by [`SolverOptions::seed`].

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::SecondOrderValue;
use crate::fraccalc::{left_frac_diff, right_frac_diff, GridFunction};
use crate::variational::{
    el_residual_from_partials, functional_value, integrand_partials, legendre_check,
    natural_bc_initial_from_partials, natural_bc_terminal_from_partials, Boundary,
    LegendreReport, ProblemSpec, VarError, LEGENDRE_TOLERANCE,
};

mod linalg;
mod simplex;

/// Hard cap on the number of unknowns [`brute_force_minimize`] accepts.
pub const MAX_DIRECT_UNKNOWNS: usize = 8;

/// Bracket width at which the golden-section search stops.
const GOLDEN_WIDTH: f64 = 1e-10;

/// Random starts sampled by the brute-force oracle, besides the
/// interpolation start.
const RANDOM_STARTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Var(#[from] VarError),
    #[error("jacobian is singular at newton iteration {iteration}")]
    SingularJacobian { iteration: usize },
    #[error("direct minimization handles at most {max} unknowns, this problem has {got}")]
    DimensionTooLarge { got: usize, max: usize },
}

/// How [`solve_el`] obtains the Jacobian of the stationarity system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JacobianMode {
    /// Exact rows assembled from the integrand's second partials (the
    /// default): each residual row is linear in the integrand gradient, so
    /// the chain rule through the difference operators is closed-form.
    #[default]
    ForwardAd,
    /// One-sided finite differences of the residual vector, step
    /// 1e-7 * max(1, |y_i|). Slower and less accurate; useful as a
    /// cross-check.
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Newton stops once the residual infinity norm drops this low.
    pub residual_tolerance: f64,
    pub max_iterations: usize,
    pub jacobian_mode: JacobianMode,
    /// Starting candidate; linear interpolation between the boundary data
    /// (0 standing in for a free side) when absent. Only the unknown entries
    /// are read; fixed boundary values always come from the problem.
    pub initial_guess: Option<GridFunction>,
    /// Sufficient-decrease slope for the backtracking line search.
    pub armijo_constant: f64,
    /// Step shrink factor when a trial step is rejected.
    pub backtrack_factor: f64,
    /// Seed for the random starts of [`brute_force_minimize`].
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> SolverOptions {
        SolverOptions {
            residual_tolerance: 1e-12,
            max_iterations: 100,
            jacobian_mode: JacobianMode::ForwardAd,
            initial_guess: None,
            armijo_constant: 1e-4,
            backtrack_factor: 0.5,
            seed: 0,
        }
    }
}

/// A stationary candidate together with its diagnostics. `converged` means
/// `residual_inf_norm` met the tolerance; otherwise the fields describe the
/// best iterate seen. Fixed boundary values are carried bit-identically.
#[derive(Debug, Clone)]
pub struct Solution {
    pub y: GridFunction,
    pub objective: f64,
    pub residual_inf_norm: f64,
    pub iterations: usize,
    pub legendre: LegendreReport,
    pub converged: bool,
}

fn validate_options(opts: &SolverOptions) {
    assert!(opts.residual_tolerance > 0.0, "residual tolerance must be positive");
    assert!(opts.max_iterations >= 1, "at least one iteration is required");
    assert!(
        opts.armijo_constant > 0.0 && opts.armijo_constant < 0.5,
        "armijo constant must lie in (0, 0.5)"
    );
    assert!(
        opts.backtrack_factor > 0.0 && opts.backtrack_factor < 1.0,
        "backtrack factor must lie in (0, 1)"
    );
}

/// Grid indices of the unknown values, in residual-row order: y(a) when the
/// initial point is free, the interior values, y(b) when the terminal point
/// is free.
fn unknown_indices(p: &ProblemSpec) -> Vec<usize> {
    let k = p.grid().k();
    let mut idx = Vec::with_capacity(k + 1);
    if p.initial().is_free() {
        idx.push(0);
    }
    idx.extend(1..k);
    if p.terminal().is_free() {
        idx.push(k);
    }
    idx
}

/// Full candidate from the unknown vector; fixed boundary values are copied
/// exactly. `None` when z contains a non-finite entry (overshooting trial
/// steps get rejected through this).
fn candidate(p: &ProblemSpec, z: &[f64]) -> Option<GridFunction> {
    let k = p.grid().k();
    let idx = unknown_indices(p);
    debug_assert_eq!(z.len(), idx.len());
    let mut values = vec![0.0; k + 1];
    if let Boundary::Fixed(v) = p.initial() {
        values[0] = v;
    }
    if let Boundary::Fixed(v) = p.terminal() {
        values[k] = v;
    }
    for (&j, &x) in idx.iter().zip(z) {
        values[j] = x;
    }
    GridFunction::new(p.grid(), values).ok()
}

/// Linear interpolation between the boundary data, with 0 standing in for a
/// free side, sampled at the unknown indices.
fn starting_values(p: &ProblemSpec) -> Vec<f64> {
    let k = p.grid().k();
    let a = match p.initial() {
        Boundary::Fixed(v) => v,
        Boundary::Free => 0.0,
    };
    let b = match p.terminal() {
        Boundary::Fixed(v) => v,
        Boundary::Free => 0.0,
    };
    unknown_indices(p)
        .iter()
        .map(|&j| a + (b - a) * j as f64 / k as f64)
        .collect()
}

/// Stationarity residual vector for a candidate, one entry per unknown: the
/// initial natural boundary residual when y(a) is free, the Euler-Lagrange
/// residual at each interior point, and the terminal natural boundary
/// residual when y(b) is free.
pub fn assemble_residual(p: &ProblemSpec, y: &GridFunction) -> Result<Vec<f64>, VarError> {
    let parts = integrand_partials(p, y)?;
    Ok(residual_from_partials(p, &parts))
}

fn residual_from_partials(p: &ProblemSpec, parts: &[SecondOrderValue]) -> Vec<f64> {
    let k = p.grid().k();
    let mut rows = Vec::with_capacity(k + 1);
    if p.initial().is_free() {
        rows.push(natural_bc_initial_from_partials(p, parts));
    }
    for i in 0..k - 1 {
        rows.push(el_residual_from_partials(p, parts, i));
    }
    if p.terminal().is_free() {
        rows.push(natural_bc_terminal_from_partials(p, parts));
    }
    rows
}

/// Exact Jacobian of the residual vector. Every row is linear in the
/// integrand gradient entries, so the derivative with respect to y(g) is the
/// same row assembly applied to the directional derivative of the gradient:
/// the second partials contracted with how (u, v, w) at each sum index move
/// when y(g) moves (a shift for u, one operator weight for v and w).
fn ad_jacobian(p: &ProblemSpec, parts: &[SecondOrderValue]) -> Vec<Vec<f64>> {
    let k = p.grid().k();
    let idx = unknown_indices(p);
    let n = idx.len();
    let mut jac = vec![vec![0.0; n]; n];
    let mut basis = vec![0.0; k + 1];
    for (col, &g) in idx.iter().enumerate() {
        basis[g] = 1.0;
        let mut dparts = Vec::with_capacity(k);
        for (s, part) in parts.iter().enumerate() {
            let du = if g == s + 1 { 1.0 } else { 0.0 };
            let dv = left_frac_diff(&basis, p.alpha(), s);
            let dw = right_frac_diff(&basis, p.beta(), s);
            let h = &part.hess;
            dparts.push(SecondOrderValue {
                value: 0.0,
                grad: [
                    h[0][0] * du + h[0][1] * dv + h[0][2] * dw,
                    h[1][0] * du + h[1][1] * dv + h[1][2] * dw,
                    h[2][0] * du + h[2][1] * dv + h[2][2] * dw,
                ],
                hess: [[0.0; 3]; 3],
            });
        }
        for (row, v) in residual_from_partials(p, &dparts).into_iter().enumerate() {
            jac[row][col] = v;
        }
        basis[g] = 0.0;
    }
    jac
}

fn fd_jacobian(p: &ProblemSpec, z: &[f64], base: &[f64]) -> Result<Vec<Vec<f64>>, VarError> {
    let n = z.len();
    let mut jac = vec![vec![0.0; n]; n];
    for col in 0..n {
        let h = 1e-7 * z[col].abs().max(1.0);
        let mut shifted = z.to_vec();
        shifted[col] += h;
        let y = candidate(p, &shifted).expect("finite shift of a finite iterate");
        let r = assemble_residual(p, &y)?;
        for (row, jac_row) in jac.iter_mut().enumerate() {
            jac_row[col] = (r[row] - base[row]) / h;
        }
    }
    Ok(jac)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn merit(residual: &[f64]) -> f64 {
    0.5 * residual.iter().map(|r| r * r).sum::<f64>()
}

fn try_residual(
    p: &ProblemSpec,
    z: &[f64],
) -> Option<(GridFunction, Vec<SecondOrderValue>, Vec<f64>)> {
    let y = candidate(p, z)?;
    let parts = integrand_partials(p, &y).ok()?;
    let residual = residual_from_partials(p, &parts);
    Some((y, parts, residual))
}

fn build_solution(
    p: &ProblemSpec,
    z: &[f64],
    residual_inf_norm: f64,
    iterations: usize,
    tolerance: f64,
) -> Result<Solution, SolverError> {
    let y = candidate(p, z).expect("accepted iterates are finite");
    let objective = functional_value(p, &y)?;
    let legendre = legendre_check(p, &y, LEGENDRE_TOLERANCE)?;
    Ok(Solution {
        y,
        objective,
        residual_inf_norm,
        iterations,
        converged: residual_inf_norm <= tolerance,
        legendre,
    })
}

/// Damped Newton iteration on [`assemble_residual`]. Steps are scaled back
/// until the squared residual norm satisfies a sufficient decrease; when no
/// acceptable step length remains, or the iteration budget runs out, the best
/// iterate is returned with `converged = false` rather than an error.
pub fn solve_el(p: &ProblemSpec, opts: &SolverOptions) -> Result<Solution, SolverError> {
    validate_options(opts);
    let mut z: Vec<f64> = match &opts.initial_guess {
        Some(guess) => {
            assert!(
                guess.grid() == p.grid(),
                "initial guess grid {:?} does not match the problem grid {:?}",
                guess.grid(),
                p.grid()
            );
            unknown_indices(p).iter().map(|&j| guess.value(j)).collect()
        }
        None => starting_values(p),
    };
    let y = candidate(p, &z).expect("starting point is finite");
    let mut parts = integrand_partials(p, &y)?;
    let mut residual = residual_from_partials(p, &parts);
    let mut norm = inf_norm(&residual);
    let mut best_z = z.clone();
    let mut best_norm = norm;
    let mut iterations = 0;

    while norm > opts.residual_tolerance && iterations < opts.max_iterations {
        let jac = match opts.jacobian_mode {
            JacobianMode::ForwardAd => ad_jacobian(p, &parts),
            JacobianMode::FiniteDifference => fd_jacobian(p, &z, &residual)?,
        };
        let rhs: Vec<f64> = residual.iter().map(|r| -r).collect();
        let Some(step) = linalg::solve_dense(jac, rhs) else {
            return Err(SolverError::SingularJacobian { iteration: iterations + 1 });
        };

        // Newton direction: the merit's directional derivative is -2 merit,
        // so sufficient decrease is merit <= merit0 (1 - 2 c lambda).
        let merit0 = merit(&residual);
        let mut lambda = 1.0;
        let mut moved = false;
        while lambda >= 1e-12 {
            let trial: Vec<f64> =
                z.iter().zip(&step).map(|(&x, &s)| x + lambda * s).collect();
            if let Some((_, trial_parts, trial_residual)) = try_residual(p, &trial) {
                let trial_merit = merit(&trial_residual);
                if trial_merit.is_finite()
                    && trial_merit
                        <= merit0 * (1.0 - 2.0 * opts.armijo_constant * lambda)
                {
                    z = trial;
                    parts = trial_parts;
                    residual = trial_residual;
                    norm = inf_norm(&residual);
                    moved = true;
                    break;
                }
            }
            lambda *= opts.backtrack_factor;
        }
        iterations += 1;
        if norm < best_norm {
            best_norm = norm;
            best_z = z.clone();
        }
        if !moved {
            break;
        }
    }

    build_solution(p, &best_z, best_norm, iterations, opts.residual_tolerance)
}

/// Minimizes the functional directly over the unknown values: multi-start
/// Nelder-Mead (the interpolation start plus [`RANDOM_STARTS`] samples from a
/// box spanning the boundary data widened by 2) refined by a quadratic-model
/// polish. Derivative-free throughout, so it is an independent check on
/// [`solve_el`]. The iteration count reports the winning start's simplex
/// reshapes.
pub fn brute_force_minimize(
    p: &ProblemSpec,
    opts: &SolverOptions,
) -> Result<Solution, SolverError> {
    validate_options(opts);
    let n = unknown_indices(p).len();
    if n > MAX_DIRECT_UNKNOWNS {
        return Err(SolverError::DimensionTooLarge { got: n, max: MAX_DIRECT_UNKNOWNS });
    }
    let a = match p.initial() {
        Boundary::Fixed(v) => v,
        Boundary::Free => 0.0,
    };
    let b = match p.terminal() {
        Boundary::Fixed(v) => v,
        Boundary::Free => 0.0,
    };
    let lo = a.min(b) - 2.0;
    let hi = a.max(b) + 2.0;

    let mut objective = |z: &[f64]| -> f64 {
        match candidate(p, z) {
            Some(y) => functional_value(p, &y).unwrap_or(f64::INFINITY),
            None => f64::INFINITY,
        }
    };

    let mut starts: Vec<Vec<f64>> = vec![starting_values(p)];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..RANDOM_STARTS {
        starts.push((0..n).map(|_| rng.gen_range(lo..=hi)).collect());
    }

    let mut best: Option<simplex::SimplexResult> = None;
    for start in &starts {
        let res = simplex::nelder_mead(&mut objective, start, 0.1 * (hi - lo), 1e-14, 600 * n);
        if best.as_ref().map_or(true, |cur| res.value < cur.value) {
            best = Some(res);
        }
    }
    let mut best = best.expect("at least one start");
    simplex::quadratic_polish(&mut objective, &mut best.z, &mut best.value, 1e-3, 4);

    let y = candidate(p, &best.z).expect("minimizer is finite");
    let residual = assemble_residual(p, &y)?;
    build_solution(p, &best.z, inf_norm(&residual), best.iterations, opts.residual_tolerance)
}

/// Solves the problem at each order in turn, keeping the input order. With
/// `link_beta` the second order follows alpha; otherwise the problem's beta
/// is kept. Failures are carried per entry so one bad order does not abort
/// the sweep.
pub fn alpha_sweep(
    p: &ProblemSpec,
    alphas: &[f64],
    link_beta: bool,
    opts: &SolverOptions,
) -> Vec<(f64, Result<Solution, SolverError>)> {
    alphas
        .iter()
        .map(|&alpha| {
            let beta = if link_beta { alpha } else { p.beta() };
            let result = p
                .with_orders(alpha, beta)
                .map_err(SolverError::from)
                .and_then(|q| solve_el(&q, opts));
            (alpha, result)
        })
        .collect()
}

/// Golden-section search for the order minimizing the stationary objective
/// over `[lo, hi]`, to bracket width 1e-10. The interior estimate is then
/// compared against both bracket endpoints, so a minimum sitting on the
/// boundary is reported exactly as `lo` or `hi`. Requires 0 < lo < hi <= 1;
/// any failing solve aborts the search.
pub fn minimize_objective_over_alpha(
    p: &ProblemSpec,
    lo: f64,
    hi: f64,
    link_beta: bool,
    opts: &SolverOptions,
) -> Result<(f64, Solution), SolverError> {
    assert!(
        0.0 < lo && lo < hi && hi <= 1.0,
        "order bracket must satisfy 0 < lo < hi <= 1, got [{lo}, {hi}]"
    );
    let solve_at = |alpha: f64| -> Result<Solution, SolverError> {
        let beta = if link_beta { alpha } else { p.beta() };
        solve_el(&p.with_orders(alpha, beta)?, opts)
    };

    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = solve_at(c)?.objective;
    let mut fd = solve_at(d)?.objective;
    while b - a > GOLDEN_WIDTH {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = solve_at(c)?.objective;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = solve_at(d)?.objective;
        }
    }

    let mid = 0.5 * (a + b);
    let mut best_alpha = mid;
    let mut best = solve_at(mid)?;
    for endpoint in [lo, hi] {
        let sol = solve_at(endpoint)?;
        // an endpoint wins ties against the interior estimate, within the
        // rounding slack of two equal objectives computed at orders 1e-10
        // apart
        if sol.objective <= best.objective + 1e-12 * (1.0 + best.objective.abs()) {
            best_alpha = endpoint;
            best = sol;
        }
    }
    Ok((best_alpha, best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fraccalc::Grid;
    use crate::variational::Lagrangian;
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeMap;

    fn problem(
        k: usize,
        alpha: f64,
        beta: f64,
        initial: Boundary,
        terminal: Boundary,
        src: &str,
    ) -> ProblemSpec {
        let grid = Grid::new(0.0, k).unwrap();
        let lag = Lagrangian::parse(src, BTreeMap::new()).unwrap();
        ProblemSpec::new(grid, alpha, beta, initial, terminal, lag).unwrap()
    }

    fn gf(k: usize, values: Vec<f64>) -> GridFunction {
        GridFunction::new(Grid::new(0.0, k).unwrap(), values).unwrap()
    }

    // stationary value of the two-point quadratic problem L = v^2 with
    // y(0) = a, y(2) = b
    fn two_point_quadratic(alpha: f64, a: f64, b: f64) -> f64 {
        (2.0 * alpha * b + (alpha.powi(3) - alpha.powi(2) + 2.0 * alpha) * a)
            / (2.0 * alpha.powi(2) + 2.0)
    }

    #[test]
    fn residual_length_matches_unknowns() {
        let fixed = Boundary::Fixed(0.0);
        let p = problem(2, 0.5, 0.5, fixed, Boundary::Fixed(1.0), "v^2");
        let y = gf(2, vec![0.0, 0.3, 1.0]);
        assert_eq!(assemble_residual(&p, &y).unwrap().len(), 1);

        let p = problem(4, 0.5, 0.5, fixed, Boundary::Fixed(1.0), "v^2");
        let y = gf(4, vec![0.0, 0.1, 0.2, 0.3, 1.0]);
        assert_eq!(assemble_residual(&p, &y).unwrap().len(), 3);

        let p = problem(3, 0.5, 0.5, fixed, Boundary::Free, "v^2");
        let y = gf(3, vec![0.0, 0.1, 0.2, 0.3]);
        assert_eq!(assemble_residual(&p, &y).unwrap().len(), 3);
    }

    #[test]
    fn residual_rows_match_named_operations() {
        use crate::variational::{el_residual, natural_bc_initial, natural_bc_terminal};
        let p = problem(4, 0.4, 0.75, Boundary::Free, Boundary::Free, "v^2 + 0.5*w^2 + u*v - u");
        let y = gf(4, vec![0.35, -0.2, 0.6, 1.4, -0.8]);
        let rows = assemble_residual(&p, &y).unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[0], natural_bc_initial(&p, &y).unwrap());
        for i in 0..3 {
            assert_eq!(rows[i + 1], el_residual(&p, &y, i).unwrap());
        }
        assert_eq!(rows[4], natural_bc_terminal(&p, &y).unwrap());
    }

    #[test]
    fn ad_jacobian_matches_finite_differences() {
        let p = problem(
            4,
            0.45,
            0.8,
            Boundary::Free,
            Boundary::Free,
            "exp(u) * v^2 + sin(t + w) + u^3 * w",
        );
        let z = vec![0.31, -0.42, 0.27, 0.55, -0.18];
        let y = candidate(&p, &z).unwrap();
        let parts = integrand_partials(&p, &y).unwrap();
        let jac = ad_jacobian(&p, &parts);

        let n = z.len();
        for col in 0..n {
            let h = 1e-6;
            let mut zp = z.clone();
            zp[col] += h;
            let mut zm = z.clone();
            zm[col] -= h;
            let rp = assemble_residual(&p, &candidate(&p, &zp).unwrap()).unwrap();
            let rm = assemble_residual(&p, &candidate(&p, &zm).unwrap()).unwrap();
            for row in 0..n {
                let fd = (rp[row] - rm[row]) / (2.0 * h);
                assert_abs_diff_eq!(jac[row][col], fd, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn newton_reproduces_two_point_closed_form() {
        let (a, b) = (1.5, -0.75);
        for &alpha in &[0.35, 0.6, 1.0] {
            let p = problem(2, alpha, alpha, Boundary::Fixed(a), Boundary::Fixed(b), "v^2");
            let sol = solve_el(&p, &SolverOptions::default()).unwrap();
            assert!(sol.converged);
            assert!(sol.residual_inf_norm <= 1e-12);
            assert_abs_diff_eq!(
                sol.y.value(1),
                two_point_quadratic(alpha, a, b),
                epsilon = 1e-12
            );
        }
        let p = problem(2, 1.0, 1.0, Boundary::Fixed(a), Boundary::Fixed(b), "v^2");
        let sol = solve_el(&p, &SolverOptions::default()).unwrap();
        assert_abs_diff_eq!(sol.y.value(1), (a + b) / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn newton_reproduces_reference_extremal() {
        // five-point quadratic problem, frozen reference values
        let p = problem(4, 0.25, 0.25, Boundary::Fixed(0.0), Boundary::Fixed(1.0), "v^2");
        let sol = solve_el(&p, &SolverOptions::default()).unwrap();
        assert!(sol.converged);
        assert_abs_diff_eq!(sol.y.value(1), 0.10647146897355, epsilon = 1e-8);
        assert_abs_diff_eq!(sol.y.value(2), 0.16857982587479, epsilon = 1e-8);
        assert_abs_diff_eq!(sol.y.value(3), 0.2792657904952, epsilon = 1e-8);
        assert_abs_diff_eq!(sol.objective, 0.90855653524095, epsilon = 1e-8);
    }

    #[test]
    fn quadratic_integrand_converges_in_one_step() {
        // the stationarity system of L = v^2 is linear in y, so a single
        // full Newton step lands on the solution from any start
        let p = problem(4, 0.6, 0.9, Boundary::Fixed(0.0), Boundary::Fixed(1.0), "v^2");
        let opts = SolverOptions {
            initial_guess: Some(gf(4, vec![0.0, 57.0, -33.0, 12.0, 1.0])),
            ..SolverOptions::default()
        };
        let sol = solve_el(&p, &opts).unwrap();
        assert!(sol.converged);
        assert!(sol.iterations <= 2, "took {} iterations", sol.iterations);
    }

    #[test]
    fn guess_at_solution_needs_no_iterations() {
        let (a, b) = (0.0, 1.0);
        let p = problem(2, 1.0, 1.0, Boundary::Fixed(a), Boundary::Fixed(b), "v^2");
        let opts = SolverOptions {
            initial_guess: Some(gf(2, vec![a, (a + b) / 2.0, b])),
            ..SolverOptions::default()
        };
        let sol = solve_el(&p, &opts).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn jacobian_modes_agree() {
        let p = problem(3, 0.45, 0.8, Boundary::Fixed(0.2), Boundary::Fixed(1.1), "v^2 + w^2");
        let ad = solve_el(&p, &SolverOptions::default()).unwrap();
        let fd = solve_el(
            &p,
            &SolverOptions {
                jacobian_mode: JacobianMode::FiniteDifference,
                ..SolverOptions::default()
            },
        )
        .unwrap();
        assert!(ad.converged && fd.converged);
        for i in 0..=3 {
            assert_abs_diff_eq!(ad.y.value(i), fd.y.value(i), epsilon = 1e-8);
        }
    }

    #[test]
    fn singular_jacobian_is_reported() {
        // L = u has a constant residual vector; the Jacobian vanishes
        let p = problem(3, 0.5, 0.5, Boundary::Fixed(0.0), Boundary::Fixed(1.0), "u");
        match solve_el(&p, &SolverOptions::default()) {
            Err(SolverError::SingularJacobian { iteration: 1 }) => {}
            other => panic!("expected a singular jacobian, got {other:?}"),
        }
    }

    #[test]
    fn nonconvergence_returns_best_iterate() {
        let p = problem(2, 0.5, 0.5, Boundary::Fixed(0.0), Boundary::Fixed(1.0), "exp(v) + u^2");
        let opts = SolverOptions {
            max_iterations: 1,
            initial_guess: Some(gf(2, vec![0.0, 30.0, 1.0])),
            ..SolverOptions::default()
        };
        let sol = solve_el(&p, &opts).unwrap();
        assert!(!sol.converged);
        assert!(sol.residual_inf_norm > 1e-12);
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.y.value(0), 0.0);
        assert_eq!(sol.y.value(2), 1.0);
    }

    #[test]
    fn fixed_boundaries_are_bit_identical() {
        let a = 0.1 + 0.2;
        let b = 1.0 / 3.0;
        let p = problem(3, 0.7, 0.7, Boundary::Fixed(a), Boundary::Fixed(b), "v^2");
        let sol = solve_el(&p, &SolverOptions::default()).unwrap();
        assert_eq!(sol.y.value(0).to_bits(), a.to_bits());
        assert_eq!(sol.y.value(3).to_bits(), b.to_bits());
    }

    #[test]
    fn converged_solution_is_stationary_for_the_functional() {
        let p = problem(4, 0.4, 0.75, Boundary::Free, Boundary::Free, "v^2 + 0.5*w^2 + u*v - u");
        let sol = solve_el(&p, &SolverOptions::default()).unwrap();
        assert!(sol.converged);
        let base = sol.y.values().to_vec();
        for j in 0..base.len() {
            let h = 1e-6 * base[j].abs().max(1.0);
            let mut up = base.clone();
            up[j] += h;
            let mut down = base.clone();
            down[j] -= h;
            let fp = functional_value(&p, &gf(4, up)).unwrap();
            let fm = functional_value(&p, &gf(4, down)).unwrap();
            let grad = (fp - fm) / (2.0 * h);
            assert!(grad.abs() <= 1e-7, "gradient {grad} at unknown {j}");
        }
    }

    #[test]
    fn brute_force_matches_frozen_minimizers() {
        let p = problem(2, 0.5, 0.5, Boundary::Fixed(0.0), Boundary::Fixed(0.0), "0.5*v^2 - u");
        let sol = brute_force_minimize(&p, &SolverOptions::default()).unwrap();
        assert_abs_diff_eq!(sol.y.value(1), 0.8, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.objective, -0.4, epsilon = 1e-6);

        let p = problem(2, 1.0, 1.0, Boundary::Fixed(0.0), Boundary::Fixed(1.0), "v^2");
        let sol = brute_force_minimize(&p, &SolverOptions::default()).unwrap();
        assert_abs_diff_eq!(sol.y.value(1), 0.5, epsilon = 1e-6);
    }

    #[test]
    fn brute_force_rejects_large_problems() {
        let p = problem(10, 0.5, 0.5, Boundary::Fixed(0.0), Boundary::Fixed(1.0), "v^2");
        match brute_force_minimize(&p, &SolverOptions::default()) {
            Err(SolverError::DimensionTooLarge { got: 9, max: 8 }) => {}
            other => panic!("expected a dimension error, got {other:?}"),
        }
    }

    #[test]
    fn brute_force_agrees_with_newton() {
        let fixed = problem(
            3,
            0.55,
            0.85,
            Boundary::Fixed(0.2),
            Boundary::Fixed(1.1),
            "v^2 + 0.7*u^2",
        );
        let free_end = problem(
            3,
            0.55,
            0.85,
            Boundary::Fixed(0.2),
            Boundary::Free,
            "v^2 + w^2 + u^2 - u",
        );
        for p in [fixed, free_end] {
            let newton = solve_el(&p, &SolverOptions::default()).unwrap();
            let direct = brute_force_minimize(&p, &SolverOptions::default()).unwrap();
            assert!(newton.converged);
            for i in 0..=3 {
                assert_abs_diff_eq!(newton.y.value(i), direct.y.value(i), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn sweep_reproduces_reference_objectives() {
        let p = problem(4, 0.5, 0.5, Boundary::Fixed(0.0), Boundary::Fixed(1.0), "v^2");
        let alphas = [0.25, 0.5, 0.75, 1.0];
        let expected = [0.90855653524095, 0.67191601049869, 0.4246209666969, 0.25];
        let results = alpha_sweep(&p, &alphas, true, &SolverOptions::default());
        assert_eq!(results.len(), 4);
        for ((alpha, result), (&want_alpha, &want)) in
            results.iter().zip(alphas.iter().zip(&expected))
        {
            assert_eq!(*alpha, want_alpha);
            let sol = result.as_ref().unwrap();
            assert_abs_diff_eq!(sol.objective, want, epsilon = 1e-8);
        }
    }

    #[test]
    fn singleton_sweep_equals_direct_solve() {
        let p = problem(4, 1.0, 1.0, Boundary::Fixed(0.0), Boundary::Fixed(1.0), "v^2");
        let swept = alpha_sweep(&p, &[1.0], true, &SolverOptions::default());
        let direct = solve_el(&p, &SolverOptions::default()).unwrap();
        let sol = swept[0].1.as_ref().unwrap();
        assert_eq!(sol.y.values(), direct.y.values());
        assert_eq!(sol.objective, direct.objective);
    }

    #[test]
    fn sweep_carries_errors_per_entry() {
        let p = problem(2, 0.5, 0.5, Boundary::Fixed(0.0), Boundary::Fixed(1.0), "v^2");
        let results = alpha_sweep(&p, &[0.5, 1.5, 0.75], true, &SolverOptions::default());
        assert!(results[0].1.is_ok());
        assert!(matches!(
            results[1].1,
            Err(SolverError::Var(VarError::InvalidOrder(_)))
        ));
        assert!(results[2].1.is_ok());
    }

    #[test]
    fn golden_section_finds_interior_minimum() {
        let p = problem(2, 0.5, 0.5, Boundary::Fixed(0.0), Boundary::Fixed(1.0), "v^2 + w^2");
        let (alpha, sol) =
            minimize_objective_over_alpha(&p, 0.3, 0.9, true, &SolverOptions::default()).unwrap();
        assert_abs_diff_eq!(alpha, 0.61747447161482, epsilon = 1e-6);
        assert!(sol.converged);
        assert!(sol.objective < 0.9140625);
    }

    #[test]
    fn golden_section_reports_boundary_minima_exactly() {
        let p = problem(4, 0.5, 0.5, Boundary::Fixed(0.0), Boundary::Fixed(1.0), "v^2");
        let (alpha, sol) =
            minimize_objective_over_alpha(&p, 0.5, 1.0, true, &SolverOptions::default()).unwrap();
        assert_eq!(alpha, 1.0);
        assert_abs_diff_eq!(sol.objective, 0.25, epsilon = 1e-12);

        let p = problem(2, 0.5, 0.5, Boundary::Fixed(0.0), Boundary::Fixed(0.0), "0.5*v^2 - u");
        let (alpha, _) =
            minimize_objective_over_alpha(&p, 0.3, 0.9, true, &SolverOptions::default()).unwrap();
        assert_eq!(alpha, 0.3);
    }
}
