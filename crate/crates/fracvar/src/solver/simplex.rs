//! Derivative-free descent used by the brute-force oracle: multi-start
//! Nelder-Mead followed by a local quadratic-model polish. Nothing here looks
//! at derivatives of the objective, so results stay independent of the
//! residual-based Newton path they are compared against.

use super::linalg::solve_dense;

pub(crate) struct SimplexResult {
    pub z: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Standard Nelder-Mead (reflection 1, expansion 2, contraction 1/2, shrink
/// 1/2) from `start`, with the initial simplex offset by `scale` along each
/// coordinate. Stops when the simplex's value spread drops to `ftol`
/// relative to the best value, or after `max_iterations` reshapes.
pub(crate) fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> f64,
    start: &[f64],
    scale: f64,
    ftol: f64,
    max_iterations: usize,
) -> SimplexResult {
    let n = start.len();
    assert!(n >= 1, "simplex needs at least one coordinate");
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    points.push(start.to_vec());
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += scale;
        points.push(p);
    }
    let mut values: Vec<f64> = points.iter().map(|p| f(p)).collect();
    let mut iterations = 0;

    while iterations < max_iterations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];
        let spread = values[worst] - values[best];
        if spread.is_nan() || spread <= ftol * (1.0 + values[best].abs()) {
            break;
        }
        iterations += 1;

        // centroid of all points except the worst
        let mut centroid = vec![0.0; n];
        for (idx, p) in points.iter().enumerate() {
            if idx == worst {
                continue;
            }
            for (c, &x) in centroid.iter_mut().zip(p) {
                *c += x;
            }
        }
        for c in centroid.iter_mut() {
            *c /= n as f64;
        }

        let blend = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&points[worst])
                .map(|(&c, &w)| c + t * (c - w))
                .collect()
        };

        let reflected = blend(1.0);
        let fr = f(&reflected);
        if fr < values[best] {
            let expanded = blend(2.0);
            let fe = f(&expanded);
            if fe < fr {
                points[worst] = expanded;
                values[worst] = fe;
            } else {
                points[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second_worst] {
            points[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        let contracted = if fr < values[worst] { blend(0.5) } else { blend(-0.5) };
        let fc = f(&contracted);
        if fc < values[worst].min(fr) {
            points[worst] = contracted;
            values[worst] = fc;
            continue;
        }
        // shrink toward the best point
        let anchor = points[best].clone();
        for idx in 0..=n {
            if idx == best {
                continue;
            }
            for (x, &a) in points[idx].iter_mut().zip(&anchor) {
                *x = a + 0.5 * (*x - a);
            }
            values[idx] = f(&points[idx]);
        }
    }

    let best = (0..=n).min_by(|&i, &j| values[i].total_cmp(&values[j])).unwrap();
    SimplexResult { z: points[best].clone(), value: values[best], iterations }
}

/// Local polish: fits the exact quadratic model through a central-difference
/// stencil (gradient, curvature, and cross terms at step `h`), jumps to the
/// model minimizer, and keeps the move only if the objective decreases
/// (halving the jump a few times otherwise). For a quadratic objective the
/// model is the objective, so one round lands on the minimizer up to
/// rounding; repeated rounds tighten the remaining error.
pub(crate) fn quadratic_polish(
    f: &mut dyn FnMut(&[f64]) -> f64,
    z: &mut Vec<f64>,
    value: &mut f64,
    h: f64,
    rounds: usize,
) {
    let n = z.len();
    for _ in 0..rounds {
        let f0 = *value;
        let mut grad = vec![0.0; n];
        let mut hess = vec![vec![0.0; n]; n];
        let mut plus = vec![0.0; n];
        let mut minus = vec![0.0; n];
        for i in 0..n {
            let mut p = z.clone();
            p[i] += h;
            plus[i] = f(&p);
            p[i] -= 2.0 * h;
            minus[i] = f(&p);
            grad[i] = (plus[i] - minus[i]) / (2.0 * h);
            hess[i][i] = (plus[i] - 2.0 * f0 + minus[i]) / (h * h);
        }
        for i in 0..n {
            for j in i + 1..n {
                let mut p = z.clone();
                p[i] += h;
                p[j] += h;
                let fij = f(&p);
                let mixed = (fij - plus[i] - plus[j] + f0) / (h * h);
                hess[i][j] = mixed;
                hess[j][i] = mixed;
            }
        }
        let Some(step) = solve_dense(hess, grad.iter().map(|g| -g).collect()) else {
            return;
        };
        if step.iter().any(|s| !s.is_finite()) {
            return;
        }
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let trial: Vec<f64> = z.iter().zip(&step).map(|(&x, &s)| x + lambda * s).collect();
            let ft = f(&trial);
            if ft < *value {
                *z = trial;
                *value = ft;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return;
        }
    }
}
