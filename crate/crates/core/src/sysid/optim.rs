//! Box-constrained least squares in log-parameter space.
//!
//! Every parameter is strictly positive and optimized as `u = ln θ`, which
//! turns the box `[lo, hi]` into a box in `u` and puts parameters spanning
//! several decades on a common scale. A derivative-free simplex gets each
//! start into the right basin and Levenberg–Marquardt polishes it.

use nalgebra::{DMatrix, DVector};

/// Per-parameter bounds in natural units.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(pairs: &[(f64, f64)]) -> Self {
        assert!(
            pairs.iter().all(|&(lo, hi)| lo > 0.0 && hi > lo),
            "bounds must be positive and ordered"
        );
        Self {
            lower: pairs.iter().map(|p| p.0).collect(),
            upper: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn log_lower(&self, i: usize) -> f64 {
        self.lower[i].ln()
    }

    fn log_upper(&self, i: usize) -> f64 {
        self.upper[i].ln()
    }

    pub(crate) fn clamp_log(&self, u: &mut [f64]) {
        for (i, x) in u.iter_mut().enumerate() {
            *x = x.clamp(self.log_lower(i), self.log_upper(i));
        }
    }

    pub(crate) fn to_log(&self, theta: &[f64]) -> Vec<f64> {
        let mut u: Vec<f64> = theta
            .iter()
            .map(|t| t.max(f64::MIN_POSITIVE).ln())
            .collect();
        self.clamp_log(&mut u);
        u
    }

    /// Indices of parameters within `rel` (in log units, relative to the
    /// box width) of a bound.
    pub fn pinned(&self, theta: &[f64], rel: f64) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| {
                let u = theta[i].ln();
                let width = self.log_upper(i) - self.log_lower(i);
                u - self.log_lower(i) <= rel * width || self.log_upper(i) - u <= rel * width
            })
            .collect()
    }

    /// Points on a `levels`-per-axis grid at the cell centres of the log box.
    pub fn log_grid(&self, levels: usize) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for i in 0..self.dim() {
            let (lo, hi) = (self.log_lower(i), self.log_upper(i));
            let mut next = Vec::with_capacity(out.len() * levels);
            for prefix in &out {
                for l in 0..levels {
                    let u = lo + (hi - lo) * (l as f64 + 0.5) / levels as f64;
                    let mut p = prefix.clone();
                    p.push(u.exp());
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }
}

/// A least-squares problem: residual vector as a function of natural-unit
/// parameters. The cost is the mean of squared residual pairs, so it reads
/// as a per-point squared error.
pub(crate) struct Problem<'a> {
    pub residuals: &'a (dyn Fn(&[f64]) -> Vec<f64> + Sync),
    pub bounds: &'a Bounds,
    /// Divisor turning the residual sum of squares into the reported cost.
    pub normalizer: f64,
}

impl Problem<'_> {
    fn residual_log(&self, u: &[f64]) -> Vec<f64> {
        let theta: Vec<f64> = u.iter().map(|x| x.exp()).collect();
        (self.residuals)(&theta)
    }

    pub fn cost_log(&self, u: &[f64]) -> f64 {
        let r = self.residual_log(u);
        let ss: f64 = r.iter().map(|x| x * x).sum();
        if ss.is_finite() {
            ss / self.normalizer
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Outcome {
    pub u: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
}

/// Nelder–Mead with standard coefficients, clamped to the log box.
pub(crate) fn nelder_mead(problem: &Problem<'_>, start: &[f64], max_iter: usize) -> Outcome {
    let n = start.len();
    let bounds = problem.bounds;
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut p = start.to_vec();
        let width = bounds.log_upper(i) - bounds.log_lower(i);
        let step = 0.1 * width.max(0.2);
        p[i] = if p[i] + step <= bounds.log_upper(i) {
            p[i] + step
        } else {
            p[i] - step
        };
        bounds.clamp_log(&mut p);
        simplex.push(p);
    }
    let mut costs: Vec<f64> = simplex.iter().map(|p| problem.cost_log(p)).collect();
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        costs = order.iter().map(|&i| costs[i]).collect();
        if (costs[n] - costs[0]).abs() <= 1e-14 * (1.0 + costs[0].abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| {
            let mut p: Vec<f64> = (0..n)
                .map(|j| centroid[j] + t * (simplex[n][j] - centroid[j]))
                .collect();
            bounds.clamp_log(&mut p);
            p
        };
        let reflected = along(-1.0);
        let fr = problem.cost_log(&reflected);
        if fr < costs[0] {
            let expanded = along(-2.0);
            let fe = problem.cost_log(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                costs[n] = fe;
            } else {
                simplex[n] = reflected;
                costs[n] = fr;
            }
        } else if fr < costs[n - 1] {
            simplex[n] = reflected;
            costs[n] = fr;
        } else {
            let (contracted, fc) = if fr < costs[n] {
                let p = along(-0.5);
                let f = problem.cost_log(&p);
                (p, f)
            } else {
                let p = along(0.5);
                let f = problem.cost_log(&p);
                (p, f)
            };
            if fc < costs[n].min(fr) {
                simplex[n] = contracted;
                costs[n] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=n {
                    for j in 0..n {
                        simplex[i][j] = best[j] + 0.5 * (simplex[i][j] - best[j]);
                    }
                    costs[i] = problem.cost_log(&simplex[i]);
                }
            }
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| costs[a].total_cmp(&costs[b]))
        .unwrap();
    Outcome {
        u: simplex[best].clone(),
        cost: costs[best],
        iterations,
    }
}

/// Central-difference Jacobian of the residuals in log space. Steps that
/// would leave the box are taken one-sided.
fn jacobian(problem: &Problem<'_>, u: &[f64], r0: &[f64]) -> DMatrix<f64> {
    let h = 1e-6;
    let mut jac = DMatrix::zeros(r0.len(), u.len());
    for j in 0..u.len() {
        let lo = problem.bounds.log_lower(j);
        let hi = problem.bounds.log_upper(j);
        let (a, b) = if u[j] + h > hi {
            (u[j] - h, u[j])
        } else if u[j] - h < lo {
            (u[j], u[j] + h)
        } else {
            (u[j] - h, u[j] + h)
        };
        let (mut ua, mut ub) = (u.to_vec(), u.to_vec());
        ua[j] = a;
        ub[j] = b;
        let ra = if a == u[j] {
            r0.to_vec()
        } else {
            problem.residual_log(&ua)
        };
        let rb = if b == u[j] {
            r0.to_vec()
        } else {
            problem.residual_log(&ub)
        };
        for i in 0..r0.len() {
            jac[(i, j)] = (rb[i] - ra[i]) / (b - a);
        }
    }
    jac
}

/// Levenberg–Marquardt with Marquardt scaling and projection onto the box.
pub(crate) fn levenberg_marquardt(
    problem: &Problem<'_>,
    start: &[f64],
    max_iter: usize,
) -> Outcome {
    let mut u = start.to_vec();
    problem.bounds.clamp_log(&mut u);
    let mut r = problem.residual_log(&u);
    let mut cost = problem.cost_log(&u);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while iterations < max_iter && cost.is_finite() {
        iterations += 1;
        let jac = jacobian(problem, &u, &r);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * DVector::from_column_slice(&r);
        let mut improved = false;
        while lambda < 1e12 {
            let mut a = jtj.clone();
            for i in 0..u.len() {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            problem.bounds.clamp_log(&mut trial);
            let trial_cost = problem.cost_log(&trial);
            if trial_cost < cost {
                let moved = trial
                    .iter()
                    .zip(&u)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                let gain = cost - trial_cost;
                u = trial;
                r = problem.residual_log(&u);
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-12);
                improved = moved > 1e-13 && gain > 1e-16 * cost.max(1e-300);
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    Outcome {
        u,
        cost,
        iterations,
    }
}

/// Simplex then Levenberg–Marquardt from every start; the lowest cost wins.
pub(crate) fn multistart(problem: &Problem<'_>, starts: &[Vec<f64>]) -> Outcome {
    let mut best: Option<Outcome> = None;
    let mut total = 0;
    for start in starts {
        let u0 = problem.bounds.to_log(start);
        let coarse = nelder_mead(problem, &u0, 400 * u0.len());
        let fine = levenberg_marquardt(problem, &coarse.u, 200);
        total += coarse.iterations + fine.iterations;
        if best.as_ref().is_none_or(|b| fine.cost < b.cost) {
            best = Some(fine);
        }
    }
    let mut best = best.expect("at least one start");
    best.iterations = total;
    best
}

/// Finite-difference gradient of the cost in log space.
pub(crate) fn cost_gradient(problem: &Problem<'_>, u: &[f64]) -> Vec<f64> {
    let h = 1e-6;
    (0..u.len())
        .map(|j| {
            let (mut a, mut b) = (u.to_vec(), u.to_vec());
            a[j] -= h;
            b[j] += h;
            (problem.cost_log(&b) - problem.cost_log(&a)) / (2.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock_residuals(theta: &[f64]) -> Vec<f64> {
        // minimum at (1, 1), shifted into the positive orthant
        vec![10.0 * (theta[1] - theta[0] * theta[0]), 1.0 - theta[0]]
    }

    #[test]
    fn recovers_rosenbrock_minimum() {
        let bounds = Bounds::new(&[(0.01, 10.0), (0.01, 10.0)]);
        let problem = Problem {
            residuals: &rosenbrock_residuals,
            bounds: &bounds,
            normalizer: 1.0,
        };
        let out = multistart(&problem, &bounds.log_grid(3));
        assert!(out.cost < 1e-20, "{}", out.cost);
        assert!((out.u[0].exp() - 1.0).abs() < 1e-8);
        assert!((out.u[1].exp() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn optimum_outside_box_lands_on_bound() {
        let bounds = Bounds::new(&[(1.0, 2.0)]);
        let res = |t: &[f64]| vec![t[0] - 5.0];
        let problem = Problem {
            residuals: &res,
            bounds: &bounds,
            normalizer: 1.0,
        };
        let out = multistart(&problem, &[vec![1.5]]);
        assert!((out.u[0].exp() - 2.0).abs() < 1e-12);
        assert_eq!(bounds.pinned(&[out.u[0].exp()], 1e-6), vec![0]);
    }

    #[test]
    fn grid_points_are_inside_and_counted() {
        let bounds = Bounds::new(&[(1e-5, 1.0), (50.0, 5000.0), (1.0, 2.0)]);
        let grid = bounds.log_grid(3);
        assert_eq!(grid.len(), 27);
        for p in grid {
            for (i, v) in p.iter().enumerate() {
                assert!(*v > bounds.lower[i] && *v < bounds.upper[i]);
            }
        }
    }

    #[test]
    fn nelder_mead_alone_converges_on_a_bowl() {
        let bounds = Bounds::new(&[(0.1, 10.0), (0.1, 10.0)]);
        let res = |t: &[f64]| vec![t[0].ln() - 0.5, t[1].ln() + 0.3];
        let problem = Problem {
            residuals: &res,
            bounds: &bounds,
            normalizer: 1.0,
        };
        let out = nelder_mead(&problem, &[0.0, 0.0], 2000);
        assert!((out.u[0] - 0.5).abs() < 1e-6 && (out.u[1] + 0.3).abs() < 1e-6);
    }
}
