//! Channel-aware ordered successive relaying under finite-blocklength coding.
//!
//! A source ships `N` messages to a destination through `N` relays in `N + 1`
//! timeslots, with relays ordered by their source-side gain and inter-relay
//! interference cancelled from prior decodes. At finite blocklength every
//! decoding step carries an error probability, and the per-message rates must
//! be chosen so the destination still meets its end-to-end error budget.
//!
//! - [`fbc`]: scalar normal-approximation primitives (Q function, capacity,
//!   dispersion, rate and its inversion).
//! - [`relay`]: channel states, relay ordering, the affine tail-coefficient
//!   system of one realization, error propagation and reliability.
//! - [`optimizer`]: the maximal-average-rate solver (budget range, dual
//!   bisection, objective-level bisection, approximation loop).
//! - [`sim`]: Rayleigh-fading Monte Carlo sweeps, two-timeslot
//!   decode-and-forward baselines and the high-SNR asymptote.

pub mod fbc;
pub mod optimizer;
pub mod relay;
pub mod sim;

pub use fbc::{DimMode, FbcParams};
pub use optimizer::{approx_max_rate, max_avg_rate, EpsPrimeRange, SolverConfig};
pub use relay::{ChannelState, RateSolution};
pub use sim::{sweep, ProtocolId, ThroughputPoint, Topology};
