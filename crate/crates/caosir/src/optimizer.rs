//! Maximal average-rate optimization for one channel realization.
//!
//! The chain: the end-to-end reliability constraint is linearized into a
//! budget `eps_dp` on the sum of all decoding-error probabilities
//! ([`eps_prime_range`] gives the admissible budget range). Maximizing the
//! average rate is then equivalent to minimizing `sum_i c_i x_i` subject to
//! `sum Q(a_ij x_i + b_ij) = eps_dp`, which is solved by exchanging objective
//! and constraint: for a fixed objective level `v0` the exchanged problem
//!
//! ```text
//! min  f(x) = sum_i sum_j Q(a_ij x_i + b_ij)
//! s.t. sum_i c_i x_i = v0,   x_i >= x_min_i
//! ```
//!
//! is convex and separable, so [`solve_inner`] solves it exactly through its
//! dual: for a multiplier `mu` each coordinate satisfies the monotone scalar
//! equation `sum_j a_ij phi(a_ij x_i + b_ij) = mu c_i` (pinned at its lower
//! bound when the equation demands less), and an outer bisection drives
//! `sum c_i x_i(mu)` to `v0`. [`max_avg_rate`] then bisects `v0` inside the
//! bracket of [`v_bounds`] until the error sum meets the budget, and
//! [`approx_max_rate`] picks the budget itself, falling back to a scan over
//! the budget range when the bracketing rates disagree too much.
//!
//! Interior-point style solvers struggle here because the Gaussian tail is
//! numerically flat at the operating point; the dual bisection has no such
//! problem since every scalar equation is strictly monotone on the
//! restricted domain.

use thiserror::Error;

use crate::fbc::{self, FbcParams};
use crate::relay::{
    avg_rate_from_x, build_coefficients, epsilon_count, reliability, ChannelState,
    CoefficientSystem, RateSolution,
};

/// Admissible range of the linearized error budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsPrimeRange {
    pub eps_min: f64,
    pub eps_max: f64,
}

impl EpsPrimeRange {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.eps_min + self.eps_max)
    }
}

/// Range of budgets whose linearized constraint still implies the true
/// reliability constraint: `eps_min = eps_d` and
/// `eps_max = (M - sqrt(M^2 - 2M(M-1) eps_d)) / (M-1)` with `M = N(N+3)/2`.
pub fn eps_prime_range(eps_d: f64, n_relays: usize) -> EpsPrimeRange {
    assert!(
        (0.0..0.5).contains(&eps_d),
        "error budget {eps_d} outside [0, 0.5)"
    );
    assert!(n_relays >= 1);
    let m = epsilon_count(n_relays) as f64;
    let disc = m * m - 2.0 * m * (m - 1.0) * eps_d;
    debug_assert!(disc >= 0.0);
    let eps_max = if m > 1.0 { (m - disc.sqrt()) / (m - 1.0) } else { eps_d };
    EpsPrimeRange { eps_min: eps_d, eps_max: eps_max.max(eps_d) }
}

/// Solver tolerances and iteration limits.
///
/// `tol_outer` and `tol_interval` are relative: the error-sum residual is
/// measured against `tol_outer * eps_dp` and the objective-level interval
/// against `tol_interval * (v2 - v1)`. `tol_inner` is the absolute tolerance
/// of the per-coordinate scalar roots.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    pub tol_inner: f64,
    pub tol_outer: f64,
    pub tol_interval: f64,
    pub k_max: usize,
    /// Percent-error threshold above which the approximation loop rescans
    /// the budget range.
    pub alpha: f64,
    /// Number of budget increments of the rescan.
    pub scan_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_inner: 1e-10,
            tol_outer: 1e-2,
            tol_interval: 1e-8,
            k_max: 200,
            alpha: 0.05,
            scan_steps: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("no bracket found for the feasibility root within the iteration limit")]
    NoBracket,
    #[error("objective level {v0} is below the restricted domain floor {floor}")]
    EmptyDomain { v0: f64, floor: f64 },
    #[error("iteration limit hit with constraint residual {residual:e}")]
    IterationLimit { residual: f64, best: InnerSolution },
}

/// Solution of the exchanged (equality-constrained) problem at one `v0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub x: Vec<f64>,
    /// Dual multiplier of the linear constraint.
    pub mu: f64,
    /// `sum_i sum_j Q(a_ij x_i + b_ij)` at `x`.
    pub total_error: f64,
    /// Coordinates pinned at their lower bound `x_min_i`.
    pub active_bounds: Vec<usize>,
}

/// Weighted density sum `g_i(x) = sum_j a_ij phi(a_ij x + b_ij)`: the
/// magnitude of the error-sum gradient along coordinate `i`.
fn grad_row(coeffs: &CoefficientSystem, i: usize, x: f64) -> f64 {
    let n = coeffs.n_relays();
    let mut g = 0.0;
    for j in i..=n {
        let a = coeffs.a(i, j);
        g += a * fbc::normal_pdf(a * x + coeffs.b(i, j));
    }
    g
}

fn grad_row_derivative(coeffs: &CoefficientSystem, i: usize, x: f64) -> f64 {
    let n = coeffs.n_relays();
    let mut d = 0.0;
    for j in i..=n {
        let a = coeffs.a(i, j);
        let z = a * x + coeffs.b(i, j);
        d -= a * a * z * fbc::normal_pdf(z);
    }
    d
}

/// Solves `g_i(x) = target` for `x >= x_lo`, returning `x_lo` when the
/// root would fall below the bound. `g_i` is strictly decreasing there.
fn coordinate_root(
    coeffs: &CoefficientSystem,
    i: usize,
    x_lo_bound: f64,
    target: f64,
    tol: f64,
) -> (f64, bool) {
    if grad_row(coeffs, i, x_lo_bound) <= target {
        return (x_lo_bound, true);
    }
    // Bracket the root by doubling the step above the bound.
    let mut lo = x_lo_bound;
    let mut step = 1.0;
    let mut hi = lo + step;
    while grad_row(coeffs, i, hi) > target {
        lo = hi;
        step *= 2.0;
        hi = x_lo_bound + step;
        if step > 1e12 {
            return (hi, false);
        }
    }
    // Safeguarded Newton in log space; fall back to bisection whenever the
    // step leaves the bracket or the density underflows.
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        if hi - lo <= tol * x.abs().max(1.0) {
            break;
        }
        let g = grad_row(coeffs, i, x);
        if g > target {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = f64::NAN;
        if g > 0.0 && target > 0.0 {
            let d = grad_row_derivative(coeffs, i, x);
            if d < 0.0 {
                // Newton on ln g(x) = ln target.
                next = x - (g.ln() - target.ln()) * g / d;
            }
        }
        x = if next.is_finite() && next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
    }
    (x, false)
}

/// Evaluates the dual map `mu -> x(mu)` coordinate-wise.
fn dual_coordinates(
    coeffs: &CoefficientSystem,
    x_min: &[f64],
    mu: f64,
    tol: f64,
) -> (Vec<f64>, Vec<usize>) {
    let mut x = Vec::with_capacity(coeffs.n_relays());
    let mut active = Vec::new();
    for (i, &lo) in x_min.iter().enumerate() {
        let (xi, pinned) = coordinate_root(coeffs, i, lo, mu * coeffs.c()[i], tol);
        if pinned {
            active.push(i);
        }
        x.push(xi);
    }
    (x, active)
}

fn weighted_sum(c: &[f64], x: &[f64]) -> f64 {
    c.iter().zip(x).map(|(ci, xi)| ci * xi).sum()
}

/// Minimizes the error sum subject to `sum c_i x_i = v0` on the restricted
/// domain, via bisection on the dual multiplier.
pub fn solve_inner(
    coeffs: &CoefficientSystem,
    v0: f64,
    cfg: &SolverConfig,
) -> Result<InnerSolution, SolveError> {
    let c = coeffs.c();
    let x_min = coeffs.x_min_all();
    let floor = weighted_sum(c, &x_min);
    let c_sum: f64 = c.iter().sum();
    let v_tol = cfg.tol_inner * c_sum.max(v0.abs());
    if v0 < floor - v_tol {
        return Err(SolveError::EmptyDomain { v0, floor });
    }

    // Above mu_hi every coordinate pins to its bound and the weighted sum
    // bottoms out at the domain floor.
    let mu_hi_start = (0..coeffs.n_relays())
        .map(|i| grad_row(coeffs, i, x_min[i]) / c[i])
        .fold(f64::MIN, f64::max);
    let mut mu_hi = mu_hi_start;
    let mut mu_lo = mu_hi;
    let mut iterations = 0usize;
    loop {
        let (x, _) = dual_coordinates(coeffs, &x_min, mu_lo, cfg.tol_inner);
        if weighted_sum(c, &x) >= v0 - v_tol {
            break;
        }
        mu_hi = mu_lo;
        mu_lo *= 0.5;
        iterations += 1;
        if iterations > cfg.k_max {
            let (x, active) = dual_coordinates(coeffs, &x_min, mu_lo, cfg.tol_inner);
            let total_error = coeffs.error_sum(&x);
            let residual = (weighted_sum(c, &x) - v0).abs();
            return Err(SolveError::IterationLimit {
                residual,
                best: InnerSolution { x, mu: mu_lo, total_error, active_bounds: active },
            });
        }
    }

    let mut best: Option<(f64, InnerSolution)> = None;
    for _ in 0..(cfg.k_max.max(64) + 64) {
        let mu = 0.5 * (mu_lo + mu_hi);
        let (x, active) = dual_coordinates(coeffs, &x_min, mu, cfg.tol_inner);
        let v = weighted_sum(c, &x);
        let residual = (v - v0).abs();
        let better = best.as_ref().map_or(true, |(r, _)| residual < *r);
        if better {
            let total_error = coeffs.error_sum(&x);
            best = Some((residual, InnerSolution { x, mu, total_error, active_bounds: active }));
        }
        if residual <= v_tol {
            return Ok(best.unwrap().1);
        }
        if v > v0 {
            mu_lo = mu;
        } else {
            mu_hi = mu;
        }
        if (mu_hi - mu_lo) <= f64::EPSILON * mu_hi.abs() {
            // The dual interval is exhausted; the weighted sum is flat to
            // machine precision, so the best iterate is the solution.
            return Ok(best.unwrap().1);
        }
    }
    let (residual, best) = best.unwrap();
    Err(SolveError::IterationLimit { residual, best })
}

/// Scalar root of the error sum: the `x` at which a uniform decision vector
/// meets the budget exactly. Feeds the objective-level bracket of Lemma-style
/// bounds in [`v_bounds`].
pub fn feasibility_root(
    coeffs: &CoefficientSystem,
    eps_dp: f64,
    cfg: &SolverConfig,
) -> Result<f64, SolveError> {
    assert!(eps_dp > 0.0 && eps_dp < 0.5, "budget {eps_dp} outside (0, 0.5)");
    let n = coeffs.n_relays();
    let x_floor = (0..n).map(|i| coeffs.x_min(i)).fold(0.0f64, f64::max);
    let sum_at = |x: f64| (0..n).map(|i| coeffs.row_error_sum(i, x)).sum::<f64>();

    let tol = cfg.tol_outer * eps_dp;
    if sum_at(x_floor) < eps_dp - tol {
        // Cannot bracket: even the most pessimistic admissible point is
        // already below the budget.
        return Err(SolveError::NoBracket);
    }
    let mut lo = x_floor;
    let mut step = 1.0;
    let mut hi = x_floor + step;
    let mut doublings = 0usize;
    while sum_at(hi) > eps_dp {
        lo = hi;
        step *= 2.0;
        hi = x_floor + step;
        doublings += 1;
        if doublings > cfg.k_max {
            return Err(SolveError::NoBracket);
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..cfg.k_max.max(128) {
        let s = sum_at(x);
        if (s - eps_dp).abs() <= tol || (hi - lo) <= 1e-14 * x.abs().max(1.0) {
            return Ok(x);
        }
        if s > eps_dp {
            lo = x;
        } else {
            hi = x;
        }
        x = 0.5 * (lo + hi);
    }
    Ok(x)
}

/// Bracket `[v1, v2]` of the optimal objective level: every error at the
/// budget gives the lower end, the uniform feasibility root the upper end.
pub fn v_bounds(
    coeffs: &CoefficientSystem,
    eps_dp: f64,
    cfg: &SolverConfig,
) -> Result<(f64, f64), SolveError> {
    let x1 = feasibility_root(coeffs, eps_dp, cfg)?;
    let c_sum: f64 = coeffs.c().iter().sum();
    let v1 = fbc::q_inv(eps_dp).expect("budget validated") * c_sum;
    let v2 = x1 * c_sum;
    Ok((v1.min(v2), v2))
}

/// Minimizes `sum c_i x_i` subject to the error sum meeting `eps_dp`, by
/// bisecting the objective level inside the [`v_bounds`] bracket. This is the
/// budget-level solve shared by [`max_avg_rate`] and the high-SNR limit
/// analysis, which runs it on a coefficient system of limiting form.
pub fn solve_budget(
    coeffs: &CoefficientSystem,
    eps_dp: f64,
    cfg: &SolverConfig,
) -> Result<InnerSolution, SolveError> {
    let (v1, v2) = v_bounds(coeffs, eps_dp, cfg)?;
    let floor = weighted_sum(coeffs.c(), &coeffs.x_min_all());
    let mut v_lo = v1.max(floor);
    let mut v_hi = v2.max(v_lo);
    let tol_f = cfg.tol_outer * eps_dp;
    let tol_v = cfg.tol_interval * (v_hi - v_lo).max(f64::MIN_POSITIVE);

    let mut best: Option<InnerSolution> = None;
    for _ in 0..cfg.k_max {
        let v3 = 0.5 * (v_lo + v_hi);
        let inner = match solve_inner(coeffs, v3, cfg) {
            Ok(s) => s,
            Err(SolveError::IterationLimit { best, .. }) => best,
            Err(e) => return Err(e),
        };
        let f3 = inner.total_error;
        if (f3 - eps_dp).abs() < tol_f || 0.5 * (v_hi - v_lo) < tol_v {
            return Ok(inner);
        }
        let closer = best
            .as_ref()
            .map_or(true, |b| (f3 - eps_dp).abs() < (b.total_error - eps_dp).abs());
        if closer {
            best = Some(inner);
        }
        // The minimized error sum decreases in the objective level, so a sum
        // below budget means the level can still shrink (raising the rate).
        if f3 < eps_dp {
            v_hi = v3;
        } else {
            v_lo = v3;
        }
    }
    let best = best.expect("k_max >= 1");
    Err(SolveError::IterationLimit { residual: (best.total_error - eps_dp).abs(), best })
}

/// Maximal average rate for one realization at a fixed linearized budget:
/// bisects the objective level until the minimized error sum meets the
/// budget, then evaluates the rates at the optimizer.
///
/// Total by construction: degenerate channels, bracket failures and
/// iteration-limit exits all come back as zero-rate solutions so Monte Carlo
/// loops never panic.
pub fn max_avg_rate(
    state: &ChannelState,
    params: &FbcParams,
    eps_dp: f64,
    cfg: &SolverConfig,
) -> RateSolution {
    let n_relays = state.n_relays();
    let coeffs = match build_coefficients(state, params.n, params.mode) {
        Ok(c) => c,
        Err(_) => return RateSolution::infeasible(n_relays, eps_dp),
    };
    match solve_budget(&coeffs, eps_dp, cfg) {
        Ok(inner) => {
            let mut sol = avg_rate_from_x(&coeffs, &inner.x, params.n, state, params.mode);
            sol.eps_dp = eps_dp;
            sol
        }
        Err(e) => {
            let mut sol = RateSolution::infeasible(n_relays, eps_dp);
            // A degenerate realization is an honestly-zero outcome; running
            // out of iterations is a numerical failure and is flagged.
            if matches!(e, SolveError::IterationLimit { .. }) {
                sol.converged = false;
            }
            sol
        }
    }
}

/// Approximated maximal rate over the admissible budget range.
///
/// Runs [`max_avg_rate`] at the midpoint budget and brackets it with the
/// achievability (lowest budget) and converse (highest budget) rates. When
/// the percent error between the brackets exceeds `cfg.alpha`, the budget
/// range is scanned in `cfg.scan_steps` increments and the first candidate
/// whose recomputed reliability matches the target budget is returned.
pub fn approx_max_rate(
    state: &ChannelState,
    params: &FbcParams,
    cfg: &SolverConfig,
) -> RateSolution {
    let range = eps_prime_range(params.eps_d, state.n_relays());
    let eps_hat = range.midpoint();
    let r_hat = max_avg_rate(state, params, eps_hat, cfg);
    if !r_hat.feasible || r_hat.avg_rate <= 0.0 {
        return r_hat;
    }
    let r_a = max_avg_rate(state, params, range.eps_min, cfg);
    let r_c = max_avg_rate(state, params, range.eps_max, cfg);
    let delta =
        (r_c.avg_rate - r_hat.avg_rate).max(r_hat.avg_rate - r_a.avg_rate) / r_hat.avg_rate;
    if delta < cfg.alpha {
        return r_hat;
    }

    // Rescan the budget range, accepting the first candidate whose
    // end-to-end reliability reproduces the destination budget.
    let tol = cfg.tol_outer * params.eps_d;
    let steps = cfg.scan_steps.max(1);
    let delta_eps = (range.eps_max - range.eps_min) / steps as f64;
    let mut best: Option<(f64, RateSolution)> = None;
    for s in 0..=steps {
        let eps_dp = range.eps_min + s as f64 * delta_eps;
        let mut sol = max_avg_rate(state, params, eps_dp, cfg);
        sol.scanned = true;
        if !sol.feasible {
            continue;
        }
        let gap = (params.eps_d - (1.0 - sol.zeta)).abs();
        if gap < tol {
            return sol;
        }
        if best.as_ref().map_or(true, |(g, _)| gap < *g) {
            best = Some((gap, sol));
        }
    }
    match best {
        Some((_, mut sol)) => {
            sol.converged = false;
            sol
        }
        None => {
            let mut sol = RateSolution::infeasible(state.n_relays(), eps_hat);
            sol.scanned = true;
            sol.converged = false;
            sol
        }
    }
}

/// Recomputes the reliability of a solved realization from scratch. Thin
/// wrapper used by callers that want an independent closure check.
pub fn recompute_zeta(coeffs: &CoefficientSystem, x: &[f64]) -> f64 {
    reliability(&crate::relay::propagate_errors(coeffs, x))
}
