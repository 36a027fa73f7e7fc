//! Channel-state representation, relay ordering, coefficient construction,
//! error propagation across timeslots and end-to-end reliability.
//!
//! A successive relaying period ships `N` messages through `N` relays in
//! `N + 1` timeslots. Relays are indexed in ascending order of their
//! source-relay gain; relay `m` must decode every message `k <= m`, and the
//! destination decodes all of them. With inter-relay interference cancelled,
//! each decoding step is an AWGN link, so every error probability is a
//! Gaussian tail of an affine function `a * x_k + b` of the per-message
//! decision variable `x_k = Qinv(eps_k[k])`. [`CoefficientSystem`] holds
//! those affine coefficients for one channel realization.

use thiserror::Error;

use crate::fbc::{self, DimMode};

/// One fading realization: linear gains of every link plus the transmit SNR.
///
/// `rho_{a,b} = g_{a,b} * gamma` is the receiver-side SNR of a link. The
/// direct source-destination gain is carried only for the two-timeslot
/// baseline protocols; the successive relaying chain never uses it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    g_sr: Vec<f64>,
    g_rd: Vec<f64>,
    g_sd: f64,
    gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RelayError {
    #[error("channel gains must be nonnegative and finite")]
    InvalidGain,
    #[error("transmit SNR must be positive and finite, got {0}")]
    InvalidSnr(f64),
    #[error("at least one relay is required")]
    NoRelays,
    #[error("source-relay and relay-destination gain lists differ in length")]
    LengthMismatch,
    #[error("degenerate realization: link {0} has zero receiver-side SNR")]
    DegenerateLink(String),
}

impl ChannelState {
    pub fn new(g_sr: Vec<f64>, g_rd: Vec<f64>, g_sd: f64, gamma: f64) -> Result<Self, RelayError> {
        if g_sr.is_empty() {
            return Err(RelayError::NoRelays);
        }
        if g_sr.len() != g_rd.len() {
            return Err(RelayError::LengthMismatch);
        }
        let ok = |g: f64| g.is_finite() && g >= 0.0;
        if !g_sr.iter().chain(g_rd.iter()).all(|&g| ok(g)) || !ok(g_sd) {
            return Err(RelayError::InvalidGain);
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(RelayError::InvalidSnr(gamma));
        }
        Ok(Self { g_sr, g_rd, g_sd, gamma })
    }

    pub fn n_relays(&self) -> usize {
        self.g_sr.len()
    }

    pub fn g_sr(&self) -> &[f64] {
        &self.g_sr
    }

    pub fn g_rd(&self) -> &[f64] {
        &self.g_rd
    }

    pub fn g_sd(&self) -> f64 {
        self.g_sd
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Receiver-side SNR of the source -> relay `i` link.
    pub fn rho_sr(&self, i: usize) -> f64 {
        self.g_sr[i] * self.gamma
    }

    /// Receiver-side SNR of the relay `i` -> destination link.
    pub fn rho_rd(&self, i: usize) -> f64 {
        self.g_rd[i] * self.gamma
    }

    /// Receiver-side SNR of the direct source -> destination link.
    pub fn rho_sd(&self) -> f64 {
        self.g_sd * self.gamma
    }

    /// Returns a copy of the state at a different transmit SNR, keeping the
    /// same gain realization.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self, RelayError> {
        Self::new(self.g_sr.clone(), self.g_rd.clone(), self.g_sd, gamma)
    }

    pub fn is_ordered(&self) -> bool {
        self.g_sr.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Sorts the relays in place by ascending source-relay gain (stable on ties)
/// and permutes the relay-destination gains consistently. Returns the applied
/// permutation: entry `k` is the original index of the relay now at slot `k`.
pub fn order_relays(state: &mut ChannelState) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..state.g_sr.len()).collect();
    perm.sort_by(|&a, &b| state.g_sr[a].total_cmp(&state.g_sr[b]));
    state.g_sr = perm.iter().map(|&i| state.g_sr[i]).collect();
    state.g_rd = perm.iter().map(|&i| state.g_rd[i]).collect();
    perm
}

/// Affine coefficients of every decoding-error tail for one realization.
///
/// For message `i` (0-based) and decoder column `j`, the error probability is
/// `Q(a(i,j) * x_i + b(i,j))` where column `j < n_relays()` is relay `j` and
/// column `j == n_relays()` is the destination. Only columns `j >= i` exist:
/// relay `j` decodes message `i` only when `j >= i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSystem {
    n_relays: usize,
    // Ragged rows: row i holds columns i..=n_relays.
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    c: Vec<f64>,
}

impl CoefficientSystem {
    pub fn n_relays(&self) -> usize {
        self.n_relays
    }

    /// Tail-slope coefficient for message `i` at decoder column `j`.
    pub fn a(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j >= i && j <= self.n_relays);
        self.a[i][j - i]
    }

    /// Tail-offset coefficient for message `i` at decoder column `j`.
    pub fn b(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j >= i && j <= self.n_relays);
        self.b[i][j - i]
    }

    /// Objective weight `sqrt(V_{S,i})` of message `i`.
    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// Smallest admissible `x_i`: keeps every tail argument nonnegative, so
    /// every error probability stays at or below one half. On this restricted
    /// domain the error sum is convex and coordinate-wise monotone.
    pub fn x_min(&self, i: usize) -> f64 {
        let mut lo: f64 = 0.0;
        for j in i..=self.n_relays {
            lo = lo.max(-self.b(i, j) / self.a(i, j));
        }
        lo
    }

    pub fn x_min_all(&self) -> Vec<f64> {
        (0..self.n_relays).map(|i| self.x_min(i)).collect()
    }

    /// Total error probability `sum_i sum_j Q(a_ij x_i + b_ij)`.
    pub fn error_sum(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n_relays);
        let mut sum = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            for j in i..=self.n_relays {
                sum += fbc::q_func(self.a(i, j) * xi + self.b(i, j));
            }
        }
        sum
    }

    /// Error probability sum contributed by message row `i` at `x_i`.
    pub fn row_error_sum(&self, i: usize, x_i: f64) -> f64 {
        (i..=self.n_relays)
            .map(|j| fbc::q_func(self.a(i, j) * x_i + self.b(i, j)))
            .sum()
    }

    /// Construct a system directly from its raw coefficients. Intended for
    /// asymptotic analyses that replace the finite-SNR coefficients with
    /// their limits; `build_coefficients` is the normal entry point.
    pub fn from_raw(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, c: Vec<f64>) -> Self {
        let n = c.len();
        assert_eq!(a.len(), n);
        assert_eq!(b.len(), n);
        for i in 0..n {
            assert_eq!(a[i].len(), n + 1 - i);
            assert_eq!(b[i].len(), n + 1 - i);
        }
        Self { n_relays: n, a, b, c }
    }
}

/// Builds the coefficient system of one ordered channel realization.
///
/// Fails with a degenerate-link error when any required receiver-side SNR is
/// zero; callers treat such realizations as carrying rate 0.
pub fn build_coefficients(
    state: &ChannelState,
    n: u64,
    mode: DimMode,
) -> Result<CoefficientSystem, RelayError> {
    debug_assert!(state.is_ordered(), "build_coefficients needs an ordered state");
    let nr = state.n_relays();
    for i in 0..nr {
        if state.rho_sr(i) <= 0.0 {
            return Err(RelayError::DegenerateLink(format!("S->relay {i}")));
        }
        if state.rho_rd(i) <= 0.0 {
            return Err(RelayError::DegenerateLink(format!("relay {i}->D")));
        }
    }

    let cap_sr: Vec<f64> = (0..nr).map(|i| fbc::capacity(state.rho_sr(i), mode)).collect();
    let var_sr: Vec<f64> = (0..nr).map(|i| fbc::dispersion(state.rho_sr(i), mode)).collect();
    let cap_rd: Vec<f64> = (0..nr).map(|i| fbc::capacity(state.rho_rd(i), mode)).collect();
    let var_rd: Vec<f64> = (0..nr).map(|i| fbc::dispersion(state.rho_rd(i), mode)).collect();
    let nf = n as f64;

    let mut a = Vec::with_capacity(nr);
    let mut b = Vec::with_capacity(nr);
    for i in 0..nr {
        let mut row_a = Vec::with_capacity(nr + 1 - i);
        let mut row_b = Vec::with_capacity(nr + 1 - i);
        for j in i..nr {
            row_a.push((var_sr[i] / var_sr[j]).sqrt());
            row_b.push((nf / var_sr[j]).sqrt() * (cap_sr[j] - cap_sr[i]));
        }
        // Destination column: the relay i -> D link.
        row_a.push((var_sr[i] / var_rd[i]).sqrt());
        row_b.push((nf / var_rd[i]).sqrt() * (cap_rd[i] - cap_sr[i]));
        a.push(row_a);
        b.push(row_b);
    }
    let c: Vec<f64> = var_sr.iter().map(|v| v.sqrt()).collect();
    Ok(CoefficientSystem { n_relays: nr, a, b, c })
}

/// Error probabilities of every decoding step for one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    // Ragged rows: eps_relay[k] holds relays k..N-1 decoding message k.
    eps_relay: Vec<Vec<f64>>,
    eps_dest: Vec<f64>,
}

impl ErrorTable {
    /// Probability that relay `m` fails to decode message `k` (`m >= k`).
    pub fn eps_relay(&self, k: usize, m: usize) -> f64 {
        debug_assert!(m >= k);
        self.eps_relay[k][m - k]
    }

    /// Probability that the destination fails to decode message `k`.
    pub fn eps_dest(&self, k: usize) -> f64 {
        self.eps_dest[k]
    }

    pub fn n_relays(&self) -> usize {
        self.eps_dest.len()
    }

    /// Sum of every entry; the quantity the rate optimizer pins to the
    /// linearized budget.
    pub fn total(&self) -> f64 {
        self.eps_relay.iter().flatten().sum::<f64>() + self.eps_dest.iter().sum::<f64>()
    }

    pub fn from_parts(eps_relay: Vec<Vec<f64>>, eps_dest: Vec<f64>) -> Self {
        let n = eps_dest.len();
        assert_eq!(eps_relay.len(), n);
        for (k, row) in eps_relay.iter().enumerate() {
            assert_eq!(row.len(), n - k);
        }
        Self { eps_relay, eps_dest }
    }
}

/// Evaluates every decoding-error probability at the decision vector `x`.
pub fn propagate_errors(coeffs: &CoefficientSystem, x: &[f64]) -> ErrorTable {
    let n = coeffs.n_relays();
    debug_assert_eq!(x.len(), n);
    let mut eps_relay = Vec::with_capacity(n);
    let mut eps_dest = Vec::with_capacity(n);
    for (k, &xk) in x.iter().enumerate() {
        let row: Vec<f64> =
            (k..n).map(|m| fbc::q_func(coeffs.a(k, m) * xk + coeffs.b(k, m))).collect();
        eps_relay.push(row);
        eps_dest.push(fbc::q_func(coeffs.a(k, n) * xk + coeffs.b(k, n)));
    }
    ErrorTable { eps_relay, eps_dest }
}

/// End-to-end reliability: the probability that the destination decodes all
/// messages, i.e. the product of every decoding step succeeding.
pub fn reliability(errors: &ErrorTable) -> f64 {
    let mut zeta = 1.0;
    for k in 0..errors.n_relays() {
        for e in &errors.eps_relay[k] {
            zeta *= 1.0 - e;
        }
        zeta *= 1.0 - errors.eps_dest[k];
    }
    zeta.clamp(0.0, 1.0)
}

/// Number of distinct decoding-error events for `n_relays` relays:
/// `N(N+3)/2` (every relay `m >= k` per message plus one destination event).
pub fn epsilon_count(n_relays: usize) -> usize {
    n_relays * (n_relays + 3) / 2
}

/// Rates, error table and reliability of one solved realization.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSolution {
    /// Optimal decision variables `x_k = Qinv(eps_k[k])`.
    pub x: Vec<f64>,
    /// Per-message rates in bits per symbol, clamped at zero.
    pub rate_msg: Vec<f64>,
    /// Average rate over the `N + 1` timeslots of the relaying period.
    pub avg_rate: f64,
    pub errors: ErrorTable,
    pub zeta: f64,
    /// False when the realization was degenerate or the solver gave up; the
    /// rate is 0 in that case.
    pub feasible: bool,
    /// False when an iteration limit was hit before the tolerances were met.
    pub converged: bool,
    /// Linearized error budget the solution was computed for.
    pub eps_dp: f64,
    /// True when the approximation loop had to fall back to scanning the
    /// budget range.
    pub scanned: bool,
}

impl RateSolution {
    /// Zero-rate solution for realizations the solver cannot serve.
    pub fn infeasible(n_relays: usize, eps_dp: f64) -> Self {
        Self {
            x: vec![0.0; n_relays],
            rate_msg: vec![0.0; n_relays],
            avg_rate: 0.0,
            errors: ErrorTable {
                eps_relay: (0..n_relays).map(|k| vec![0.0; n_relays - k]).collect(),
                eps_dest: vec![0.0; n_relays],
            },
            zeta: 0.0,
            feasible: false,
            converged: true,
            eps_dp,
            scanned: false,
        }
    }
}

/// Evaluates the per-message and average rates at a decision vector `x`,
/// together with the full error table and the reliability.
pub fn avg_rate_from_x(
    coeffs: &CoefficientSystem,
    x: &[f64],
    n: u64,
    state: &ChannelState,
    mode: DimMode,
) -> RateSolution {
    let nr = coeffs.n_relays();
    debug_assert_eq!(x.len(), nr);
    let nf = n as f64;
    let penalty = fbc::log_penalty(n);
    let mut rate_msg = Vec::with_capacity(nr);
    for (k, &xk) in x.iter().enumerate() {
        let c_sk = fbc::capacity(state.rho_sr(k), mode);
        let v_sk = fbc::dispersion(state.rho_sr(k), mode);
        let r = c_sk - (v_sk / nf).sqrt() * xk + penalty;
        rate_msg.push(r.max(0.0));
    }
    let avg_rate = rate_msg.iter().sum::<f64>() / (nr as f64 + 1.0);
    let errors = propagate_errors(coeffs, x);
    let zeta = reliability(&errors);
    RateSolution {
        x: x.to_vec(),
        rate_msg,
        avg_rate,
        errors,
        zeta,
        feasible: true,
        converged: true,
        eps_dp: f64::NAN,
        scanned: false,
    }
}
