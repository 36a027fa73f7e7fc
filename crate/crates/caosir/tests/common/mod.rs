//! Shared test oracles, independent of the library's implementation paths.
//!
//! The Gaussian tail oracle uses a Maclaurin series for the error function on
//! the body and the Laplace continued fraction on the tail; the optimizer
//! oracle is a plain constrained grid search. Neither touches the library's
//! erfc, Newton refinement or dual-bisection machinery.

#![allow(dead_code)]

use caosir::fbc::DimMode;
use caosir::relay::{ChannelState, CoefficientSystem};
use rand::Rng;

const SQRT_PI: f64 = 1.772_453_850_905_516;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Maclaurin series for erf(t), accurate to full precision for |t| <= 2.2.
fn erf_series(t: f64) -> f64 {
    let mut term = t;
    let mut sum = t;
    let t2 = t * t;
    for k in 1..200 {
        let kf = k as f64;
        term *= -t2 / kf;
        let add = term / (2.0 * kf + 1.0);
        sum += add;
        if add.abs() < 1e-20 * sum.abs() {
            break;
        }
    }
    2.0 / SQRT_PI * sum
}

/// Laplace continued fraction for the Mills ratio, evaluated bottom-up.
/// Accurate to full precision for x >= 3.
fn q_tail_cf(x: f64) -> f64 {
    let mut cf = 0.0;
    for k in (1..=300).rev() {
        cf = k as f64 / (x + cf);
    }
    let pdf = (-0.5 * x * x).exp() / (SQRT_2 * SQRT_PI);
    pdf / (x + cf)
}

/// Independent high-precision Gaussian tail function.
pub fn q_oracle(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - q_oracle(-x);
    }
    if x <= 3.0 {
        0.5 - 0.5 * erf_series(x / SQRT_2)
    } else {
        q_tail_cf(x)
    }
}

/// Capacity/dispersion evaluated directly from the formulas, in bits.
pub fn cap_oracle(rho: f64, mode: DimMode) -> f64 {
    let c = 0.5 * (1.0 + rho).ln() / std::f64::consts::LN_2;
    match mode {
        DimMode::Real => c,
        DimMode::Complex => 2.0 * c,
    }
}

pub fn disp_oracle(rho: f64, mode: DimMode) -> f64 {
    let l2e = 1.0 / std::f64::consts::LN_2;
    let v = 0.5 * rho * (2.0 + rho) / ((1.0 + rho) * (1.0 + rho)) * l2e * l2e;
    match mode {
        DimMode::Real => v,
        DimMode::Complex => 2.0 * v,
    }
}

/// Draws a random two-relay state with exponential unit-mean gains.
pub fn random_state(n_relays: usize, gamma: f64, rng: &mut impl Rng) -> ChannelState {
    let exp = |rng: &mut dyn rand::RngCore| -> f64 {
        let u: f64 = rng.gen();
        -(1.0 - u).ln()
    };
    let g_sr: Vec<f64> = (0..n_relays).map(|_| exp(rng)).collect();
    let g_rd: Vec<f64> = (0..n_relays).map(|_| exp(rng)).collect();
    let g_sd = exp(rng);
    let mut s = ChannelState::new(g_sr, g_rd, g_sd, gamma).unwrap();
    caosir::relay::order_relays(&mut s);
    s
}

/// Result of the two-relay constrained grid search.
pub struct GridOptimum {
    pub x: [f64; 2],
    pub v: f64,
    pub avg_rate: f64,
}

/// Exhaustive constrained minimization of `c0 x0 + c1 x1` subject to the
/// raw error sum meeting `eps_dp`, for two relays: scan `x0` on a coarse
/// grid, solve `x1` from the constraint by bisection on the raw Q-sum, then
/// refine locally on a fine grid. Everything is evaluated through
/// [`q_oracle`]-independent raw sums (the library's `q_func` is itself
/// oracle-checked separately).
pub fn grid_optimum_two_relays(
    coeffs: &CoefficientSystem,
    eps_dp: f64,
    state: &ChannelState,
    n: u64,
    mode: DimMode,
) -> Option<GridOptimum> {
    assert_eq!(coeffs.n_relays(), 2);
    let row_sum = |i: usize, xi: f64| coeffs.row_error_sum(i, xi);
    let x0_min = coeffs.x_min(0);
    let x1_min = coeffs.x_min(1);

    // Uniform-x feasibility root bounds the search box from above.
    let total = |x: f64| row_sum(0, x.max(x0_min)) + row_sum(1, x.max(x1_min));
    let mut hi = x0_min.max(x1_min) + 1.0;
    let mut doublings = 0;
    while total(hi) > eps_dp {
        hi = x0_min.max(x1_min) + (hi - x0_min.max(x1_min)) * 2.0;
        doublings += 1;
        if doublings > 300 {
            return None;
        }
    }
    let c = coeffs.c();
    let x0_hi = (hi * (c[0] + c[1]) - c[1] * x1_min) / c[0];

    // Solve the second coordinate from the remaining budget.
    let solve_x1 = |budget: f64| -> Option<f64> {
        if budget <= 0.0 || row_sum(1, x1_min) < budget {
            return None;
        }
        let (mut lo, mut up) = (x1_min, x1_min + 1.0);
        let mut k = 0;
        while row_sum(1, up) > budget {
            lo = up;
            up = x1_min + (up - x1_min) * 2.0;
            k += 1;
            if k > 300 {
                return None;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + up);
            if row_sum(1, mid) > budget {
                lo = mid;
            } else {
                up = mid;
            }
        }
        Some(0.5 * (lo + up))
    };

    let mut best: Option<GridOptimum> = None;
    let consider = |x0: f64, best: &mut Option<GridOptimum>| {
        let budget = eps_dp - row_sum(0, x0);
        if let Some(x1) = solve_x1(budget) {
            let v = c[0] * x0 + c[1] * x1;
            if best.as_ref().map_or(true, |b| v < b.v) {
                *best = Some(GridOptimum { x: [x0, x1], v, avg_rate: 0.0 });
            }
        }
    };

    let coarse = 1e-3;
    let mut x0 = x0_min;
    while x0 <= x0_hi {
        consider(x0, &mut best);
        x0 += coarse;
    }
    let center = best.as_ref()?.x[0];
    let fine = 1e-5;
    let mut x0 = (center - 2.0 * coarse).max(x0_min);
    while x0 <= center + 2.0 * coarse {
        consider(x0, &mut best);
        x0 += fine;
    }

    best.map(|mut b| {
        let nf = n as f64;
        let pen = nf.log2() / (2.0 * nf);
        let mut sum = 0.0;
        for (k, xk) in b.x.iter().enumerate() {
            let c_sk = cap_oracle(state.rho_sr(k), mode);
            let v_sk = disp_oracle(state.rho_sr(k), mode);
            sum += (c_sk - (v_sk / nf).sqrt() * xk + pen).max(0.0);
        }
        b.avg_rate = sum / 3.0;
        b
    })
}
