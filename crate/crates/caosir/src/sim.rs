//! Monte Carlo average-throughput evaluation over Rayleigh fading, the
//! two-timeslot decode-and-forward baselines, and the high-SNR asymptote.
//!
//! Channel gains are exponential (Rayleigh amplitudes) with topology-derived
//! means; every draw is deterministic in the seed. Sweeps use common random
//! numbers: at a given trial index, every protocol and every SNR point sees
//! the same gain realization, so throughput is monotone in SNR per trial and
//! curve differences are low-variance.
//!
//! The baseline models are deliberate constructions, not reproductions:
//! selection decode-and-forward over the best max-min relay for the
//! no-direct variants, incremental decode-and-forward (relay retransmits
//! only when the direct slot fails) for the direct variants. They pin the
//! classic fixed-rate ceilings of 1 and 1/2 bit/s/Hz at high SNR.

use thiserror::Error;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fbc::{self, DimMode, FbcParams};
use crate::optimizer::{approx_max_rate, solve_budget, SolveError, SolverConfig};
use crate::relay::{order_relays, ChannelState, CoefficientSystem};

const SQRT3_HALF: f64 = 0.866_025_403_784_438_6;

/// Node layout generating the mean link gains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// Unit mean gain on every link.
    Iid,
    /// Distance-based pathloss (exponent 2) on the fixed three-relay layout:
    /// source at (0,0), destination at (0,1), relays at (±√3/2, 1/2) and
    /// (0, 1/2).
    Inid,
}

/// Mean gains of every link class for one topology.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanGains {
    pub sr: Vec<f64>,
    pub rd: Vec<f64>,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("the i.ni.d. topology is defined for exactly 3 relays, got {0}")]
    UnsupportedTopology(usize),
    #[error("quadrature failed to converge")]
    QuadratureFailed,
    #[error("high-SNR limit problem failed: {0}")]
    LimitSolve(#[from] SolveError),
}

impl Topology {
    /// Mean gain of every link; `Inid` is defined for exactly three relays.
    pub fn mean_gains(&self, n_relays: usize) -> Result<MeanGains, SimError> {
        match self {
            Topology::Iid => Ok(MeanGains {
                sr: vec![1.0; n_relays],
                rd: vec![1.0; n_relays],
                sd: 1.0,
            }),
            Topology::Inid => {
                if n_relays != 3 {
                    return Err(SimError::UnsupportedTopology(n_relays));
                }
                let s = (0.0, 0.0);
                let d = (0.0, 1.0);
                let relays = [(SQRT3_HALF, 0.5), (-SQRT3_HALF, 0.5), (0.0, 0.5)];
                let gain = |p: (f64, f64), q: (f64, f64)| {
                    let d2 = (p.0 - q.0).powi(2) + (p.1 - q.1).powi(2);
                    1.0 / d2
                };
                Ok(MeanGains {
                    sr: relays.iter().map(|&r| gain(s, r)).collect(),
                    rd: relays.iter().map(|&r| gain(r, d)).collect(),
                    sd: gain(s, d),
                })
            }
        }
    }
}

/// Protocols the sweep can evaluate. Fixed-rate variants carry the target
/// rate in bits per symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProtocolId {
    CaoSirFbc,
    TwoSlotDfNoDirect,
    TwoSlotDfDirect,
    TwoSlotDfNoDirectFixed(f64),
    TwoSlotDfDirectFixed(f64),
}

impl ProtocolId {
    /// Stable machine-readable label used in CSV and JSON output.
    pub fn label(&self) -> String {
        match self {
            ProtocolId::CaoSirFbc => "cao-sir-fbc".to_string(),
            ProtocolId::TwoSlotDfNoDirect => "two-slot-df-no-direct".to_string(),
            ProtocolId::TwoSlotDfDirect => "two-slot-df-direct".to_string(),
            ProtocolId::TwoSlotDfNoDirectFixed(r) => format!("two-slot-df-no-direct-fixed-r{r}"),
            ProtocolId::TwoSlotDfDirectFixed(r) => format!("two-slot-df-direct-fixed-r{r}"),
        }
    }
}

impl serde::Serialize for ProtocolId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

/// One Monte Carlo point of a sweep.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ThroughputPoint {
    pub protocol: ProtocolId,
    pub snr_db: f64,
    pub mean_tput: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
    /// Trials whose throughput was exactly zero (cut off or infeasible).
    pub zero_trials: u64,
    /// Trials where the rate solver gave up before reaching its tolerances.
    pub nonconverged_trials: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-trial seed stream. Gains depend on the trial only, so a
/// trial shares its realization across all SNR points and protocols.
pub fn trial_seed(base_seed: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(base_seed) ^ splitmix64(trial ^ 0xA076_1D64_78BD_642F))
}

/// Draws one fading realization: every gain independent exponential with the
/// topology's mean. Identical seeds give identical states.
pub fn draw_channel(
    topology: Topology,
    n_relays: usize,
    gamma: f64,
    seed: u64,
) -> Result<ChannelState, SimError> {
    let means = topology.mean_gains(n_relays)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exp_draw = |mean: f64| {
        let u: f64 = rng.gen();
        -mean * (1.0 - u).ln()
    };
    let g_sr: Vec<f64> = means.sr.iter().map(|&m| exp_draw(m)).collect();
    let g_rd: Vec<f64> = means.rd.iter().map(|&m| exp_draw(m)).collect();
    let g_sd = exp_draw(means.sd);
    Ok(ChannelState::new(g_sr, g_rd, g_sd, gamma).expect("draw produces valid gains"))
}

/// Throughput of the successive relaying protocol for one ordered
/// realization: the optimized average rate, zero when infeasible.
pub fn cao_sir_fbc_tput(state: &ChannelState, params: &FbcParams, cfg: &SolverConfig) -> f64 {
    approx_max_rate(state, params, cfg).avg_rate.max(0.0)
}

/// Success probability of one link at a given rate; a dead link never
/// succeeds at a positive rate, regardless of the zero-SNR error convention.
fn link_success(rho: f64, n: u64, rate: f64, mode: DimMode) -> f64 {
    if rho <= 0.0 {
        return if rate > 0.0 { 0.0 } else { 1.0 };
    }
    1.0 - fbc::fbc_error(rho, n, rate, mode)
}

/// Relay maximizing the bottleneck gain `min(g_sr, g_rd)`; first index wins
/// ties.
fn best_relay(state: &ChannelState) -> usize {
    let mut best = 0;
    let mut best_gain = f64::NEG_INFINITY;
    for i in 0..state.n_relays() {
        let g = state.g_sr()[i].min(state.g_rd()[i]);
        if g > best_gain {
            best_gain = g;
            best = i;
        }
    }
    best
}

/// Throughput of one two-timeslot decode-and-forward baseline for one
/// realization. Panics when called with [`ProtocolId::CaoSirFbc`].
pub fn two_slot_df_tput(state: &ChannelState, params: &FbcParams, variant: ProtocolId) -> f64 {
    let n = params.n;
    let mode = params.mode;
    let i = best_relay(state);
    let rho_sr = state.rho_sr(i);
    let rho_rd = state.rho_rd(i);
    let rho_sd = state.rho_sd();

    match variant {
        ProtocolId::CaoSirFbc => panic!("not a two-slot baseline"),
        ProtocolId::TwoSlotDfNoDirect => {
            if rho_sr <= 0.0 || rho_rd <= 0.0 {
                return 0.0;
            }
            // Equal per-hop rate with the error budget split across hops:
            // the largest R with e1(R) + e2(R) = eps_d.
            let esum = |r: f64| {
                fbc::fbc_error(rho_sr, n, r, mode) + fbc::fbc_error(rho_rd, n, r, mode)
            };
            if esum(0.0) >= params.eps_d {
                return 0.0;
            }
            let mut lo = 0.0;
            let mut hi = fbc::capacity(rho_sr.max(rho_rd), mode) + 2.0;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if esum(mid) < params.eps_d {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * lo
        }
        ProtocolId::TwoSlotDfNoDirectFixed(r) => {
            0.5 * r * link_success(rho_sr, n, r, mode) * link_success(rho_rd, n, r, mode)
        }
        ProtocolId::TwoSlotDfDirectFixed(r) => {
            let p_direct = link_success(rho_sd, n, r, mode);
            let p_relayed = link_success(rho_sr, n, r, mode) * link_success(rho_rd, n, r, mode);
            r * p_direct + 0.5 * r * (1.0 - p_direct) * p_relayed
        }
        ProtocolId::TwoSlotDfDirect => {
            // Incremental DF with an adapted rate: scan then locally refine.
            let tput = |r: f64| {
                let p_direct = link_success(rho_sd, n, r, mode);
                let p_relayed =
                    link_success(rho_sr, n, r, mode) * link_success(rho_rd, n, r, mode);
                r * p_direct + 0.5 * r * (1.0 - p_direct) * p_relayed
            };
            let r_cap = fbc::capacity(rho_sd, mode)
                .max(fbc::capacity(rho_sr.min(rho_rd), mode));
            if r_cap <= 0.0 {
                return 0.0;
            }
            let hi = r_cap + 2.0;
            const STEPS: usize = 512;
            let mut best_r = 0.0;
            let mut best_t = 0.0;
            for k in 1..=STEPS {
                let r = hi * k as f64 / STEPS as f64;
                let t = tput(r);
                if t > best_t {
                    best_t = t;
                    best_r = r;
                }
            }
            // Golden-section refinement around the best grid point.
            let mut a = (best_r - hi / STEPS as f64).max(0.0);
            let mut b = best_r + hi / STEPS as f64;
            const INV_PHI: f64 = 0.618_033_988_749_894_9;
            for _ in 0..60 {
                let c = b - (b - a) * INV_PHI;
                let d = a + (b - a) * INV_PHI;
                if tput(c) < tput(d) {
                    a = c;
                } else {
                    b = d;
                }
            }
            best_t.max(tput(0.5 * (a + b)))
        }
    }
}

fn eval_protocol(
    protocol: ProtocolId,
    state: &ChannelState,
    params: &FbcParams,
    cfg: &SolverConfig,
) -> (f64, bool) {
    match protocol {
        ProtocolId::CaoSirFbc => {
            let sol = approx_max_rate(state, params, cfg);
            (sol.avg_rate.max(0.0), sol.converged)
        }
        other => (two_slot_df_tput(state, params, other), true),
    }
}

/// Monte Carlo sweep over an SNR grid with common random numbers: all
/// protocols and SNR points of a trial share one gain realization.
/// Deterministic in `base_seed`; aggregation runs in fixed trial order.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    protocols: &[ProtocolId],
    topology: Topology,
    n_relays: usize,
    snr_grid_db: &[f64],
    params: &FbcParams,
    cfg: &SolverConfig,
    trials: u64,
    base_seed: u64,
) -> Result<Vec<ThroughputPoint>, SimError> {
    assert!(trials >= 1);
    let mut points = Vec::with_capacity(snr_grid_db.len() * protocols.len());
    for &snr_db in snr_grid_db {
        let gamma = 10f64.powf(snr_db / 10.0);
        let mut per_protocol: Vec<Vec<f64>> =
            vec![Vec::with_capacity(trials as usize); protocols.len()];
        let mut nonconverged = vec![0u64; protocols.len()];
        for t in 0..trials {
            let mut state = draw_channel(topology, n_relays, gamma, trial_seed(base_seed, t))?;
            order_relays(&mut state);
            for (pi, &p) in protocols.iter().enumerate() {
                let (tput, converged) = eval_protocol(p, &state, params, cfg);
                per_protocol[pi].push(tput);
                if !converged {
                    nonconverged[pi] += 1;
                }
            }
        }
        for (pi, &p) in protocols.iter().enumerate() {
            let vals = &per_protocol[pi];
            let tf = trials as f64;
            let mean = vals.iter().sum::<f64>() / tf;
            let stderr = if trials > 1 {
                let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (tf - 1.0);
                (var / tf).sqrt()
            } else {
                0.0
            };
            points.push(ThroughputPoint {
                protocol: p,
                snr_db,
                mean_tput: mean,
                stderr,
                trials,
                seed: base_seed,
                zero_trials: vals.iter().filter(|&&v| v == 0.0).count() as u64,
                nonconverged_trials: nonconverged[pi],
            });
        }
    }
    Ok(points)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Option<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Some(left + right + delta / 15.0);
    }
    if depth == 0 {
        return None;
    }
    let l = adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Some(l + r)
}

/// `∫_0^∞ log2(1 + x·gamma) e^{-2x} dx` by adaptive quadrature. This is half
/// the ergodic capacity of the weaker of two unit-mean exponential links.
pub fn log2_ergodic_min_integral(gamma: f64) -> Result<f64, SimError> {
    assert!(gamma >= 0.0);
    if gamma == 0.0 {
        return Ok(0.0);
    }
    // The exponential envelope makes the tail beyond x = 40 smaller than
    // 1e-30 of the total for any practical SNR.
    let (a, b) = (0.0, 40.0);
    let f = |x: f64| (x * gamma).ln_1p() * std::f64::consts::LOG2_E * (-2.0 * x).exp();
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, b, fa, fm, fb);
    // Absolute tolerance from the integrand's envelope, not the first
    // Simpson estimate: the mass sits near the origin, which the whole-range
    // rule badly underestimates at high SNR.
    let scale = ((40.0 * gamma).ln_1p() * std::f64::consts::LOG2_E).max(1.0);
    adaptive_simpson(&f, a, b, fa, fm, fb, whole, 1e-9 * scale, 60)
        .ok_or(SimError::QuadratureFailed)
}

/// Coefficient system in the high-SNR limit: every slope coefficient tends
/// to one and the offsets depend only on gain ratios, so the solution is
/// SNR-independent. Gains must already be ordered by `g_sr`.
pub fn high_snr_limit_coefficients(g_sr: &[f64], g_rd: &[f64], n: u64) -> CoefficientSystem {
    let nr = g_sr.len();
    assert_eq!(g_rd.len(), nr);
    let scale = (2.0 * n as f64).sqrt() / std::f64::consts::LOG2_E;
    let mut a = Vec::with_capacity(nr);
    let mut b = Vec::with_capacity(nr);
    for i in 0..nr {
        let mut row_a = vec![1.0; nr + 1 - i];
        let mut row_b = Vec::with_capacity(nr + 1 - i);
        for j in i..nr {
            row_b.push(scale * (g_sr[j] / g_sr[i]).log2());
        }
        row_b.push(scale * (g_rd[i] / g_sr[i]).log2());
        row_a[0] = 1.0;
        a.push(row_a);
        b.push(row_b);
    }
    // In the limit every dispersion reaches the same constant, so the
    // objective weights are all equal.
    let c = vec![(std::f64::consts::LOG2_E * std::f64::consts::LOG2_E / 2.0).sqrt(); nr];
    CoefficientSystem::from_raw(a, b, c)
}

/// Closed-form high-SNR average throughput for one realization of the limit
/// problem: the ergodic capacity term minus the SNR-independent dispersion
/// penalty. Averaging over realizations of `coeffs_at_limit` gives the
/// expected-value curve; the asymptote is linear in the solved decision sum,
/// so averaging the asymptote and averaging the sum coincide.
pub fn high_snr_asymptote(
    n_relays: usize,
    gamma: f64,
    n: u64,
    coeffs_at_limit: &CoefficientSystem,
    eps_dp: f64,
    cfg: &SolverConfig,
) -> Result<f64, SimError> {
    let integral = log2_ergodic_min_integral(gamma)?;
    let x0 = solve_budget(coeffs_at_limit, eps_dp, cfg)?;
    let x0_sum: f64 = x0.x.iter().sum();
    let nf = n as f64;
    let nr = n_relays as f64;
    let l2e = std::f64::consts::LOG2_E;
    let penalty = (l2e * l2e / (2.0 * nf)).sqrt() * x0_sum - nr * nf.log2() / (2.0 * nf);
    Ok(2.0 * nr / (nr + 1.0) * integral - penalty / (nr + 1.0))
}
