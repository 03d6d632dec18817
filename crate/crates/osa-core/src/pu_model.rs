//! Four-state channel occupancy model for a reactive primary user.
//!
//! A reactive PU operates in one of two regimes: Level 0, where it accesses
//! its channel aggressively, and Level 1, where it backs off after
//! experiencing a collision. Each level has a busy and an idle state, giving
//! the four-state chain
//!
//! ```text
//!   0 = BusyL0   1 = IdleL0   2 = BusyL1   3 = IdleL1
//! ```
//!
//! Busy-state transitions depend on whether the secondary user collides with
//! the PU in the current slot (probability `mu`):
//!
//! ```text
//!   P(0|busy) = (1-mu)(1-alpha0)    P(1|busy) = (1-mu) alpha0
//!   P(2|busy) = mu (1-alpha1)       P(3|busy) = mu alpha1
//! ```
//!
//! Idle-state transitions never depend on the SU (no transmission means no
//! collision): `IdleL0` stays in Level 0 via `beta0`, `IdleL1` stays in
//! Level 1 via `beta1`. Both busy states share identical outgoing rows, so a
//! collided PU in either level reacts the same way.
//!
//! Setting `alpha1 = alpha0` and `beta1 = beta0` collapses the model onto the
//! classical two-state on/off chain of a non-reactive PU.

use serde::Serialize;

use crate::error::{OsaError, Result};
use crate::sensor_roc::EnergyDetectorParams;

/// Number of occupancy states per channel.
pub const STATE_COUNT: usize = 4;

/// One of the four occupancy states of a reactive PU channel.
///
/// The numeric encoding is two bits: the high bit is the level, the low bit
/// is busy (`0`) versus idle (`1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PuState {
    /// `00`: Level 0, PU transmitting.
    BusyL0 = 0,
    /// `01`: Level 0, channel idle.
    IdleL0 = 1,
    /// `10`: Level 1, PU transmitting.
    BusyL1 = 2,
    /// `11`: Level 1, channel idle.
    IdleL1 = 3,
}

impl PuState {
    /// All states in encoding order.
    pub const ALL: [PuState; STATE_COUNT] = [
        PuState::BusyL0,
        PuState::IdleL0,
        PuState::BusyL1,
        PuState::IdleL1,
    ];

    /// Numeric encoding of the state.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Inverse of [`PuState::index`].
    pub fn from_index(index: usize) -> Option<PuState> {
        PuState::ALL.get(index).copied()
    }

    /// True when the PU occupies the channel in this state.
    pub fn is_busy(self) -> bool {
        matches!(self, PuState::BusyL0 | PuState::BusyL1)
    }

    /// True when the channel is free in this state.
    pub fn is_idle(self) -> bool {
        !self.is_busy()
    }

    /// Backoff level of the state (0 or 1).
    pub fn level(self) -> u8 {
        (self.index() >> 1) as u8
    }
}

/// Transition probabilities of one reactive PU channel.
///
/// `alpha0`/`beta0` govern Level 0, `alpha1`/`beta1` govern Level 1. The
/// reactive ordering `alpha1 >= alpha0` and `beta1 >= beta0` is enforced at
/// construction, as is rejection of the degenerate absorbing combination
/// `alpha0 = 0, beta0 = 1` that would leave the Level-0 chain without a
/// stationary busy probability.
///
/// ```
/// use osa_core::ChannelParams;
///
/// let channel = ChannelParams::new(0.1, 0.2, 0.9, 0.95)?;
/// assert!((channel.stationary_level0().0 - 8.0 / 9.0).abs() < 1e-12);
/// assert!((channel.benchmark_throughput(0.1) - 0.8).abs() < 1e-12);
/// # Ok::<(), osa_core::OsaError>(())
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelParams {
    alpha0: f64,
    beta0: f64,
    alpha1: f64,
    beta1: f64,
}

fn check_prob(name: &str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(OsaError::InvalidParameters(format!(
            "{name} must lie in [0, 1], got {value}"
        )));
    }
    Ok(())
}

impl ChannelParams {
    /// Builds a validated parameter set.
    pub fn new(alpha0: f64, beta0: f64, alpha1: f64, beta1: f64) -> Result<Self> {
        check_prob("alpha0", alpha0)?;
        check_prob("beta0", beta0)?;
        check_prob("alpha1", alpha1)?;
        check_prob("beta1", beta1)?;
        if alpha1 < alpha0 {
            return Err(OsaError::InvalidParameters(format!(
                "alpha1 ({alpha1}) must be >= alpha0 ({alpha0})"
            )));
        }
        if beta1 < beta0 {
            return Err(OsaError::InvalidParameters(format!(
                "beta1 ({beta1}) must be >= beta0 ({beta0})"
            )));
        }
        if 1.0 + alpha0 - beta0 == 0.0 {
            return Err(OsaError::InvalidParameters(
                "degenerate Level-0 chain: 1 + alpha0 - beta0 = 0".to_string(),
            ));
        }
        Ok(Self {
            alpha0,
            beta0,
            alpha1,
            beta1,
        })
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    /// Next-state distribution when the SU does not access this channel.
    ///
    /// A busy PU that sees no collision returns to (or stays in) Level 0; an
    /// idle PU keeps its level. Idle-to-busy lands in the busy state of the
    /// same level, matching the within-level arrows of the chain diagram;
    /// the choice is unobservable because both busy states share outgoing
    /// rows, but it fixes the encoding for state-level tests.
    pub fn transition_row_unsensed(&self, state: PuState) -> [f64; STATE_COUNT] {
        match state {
            PuState::BusyL0 | PuState::BusyL1 => [1.0 - self.alpha0, self.alpha0, 0.0, 0.0],
            PuState::IdleL0 => [1.0 - self.beta0, self.beta0, 0.0, 0.0],
            PuState::IdleL1 => [0.0, 0.0, 1.0 - self.beta1, self.beta1],
        }
    }

    /// Next-state distribution when the SU senses this channel and accesses
    /// it with conditional probability `mu` given that the PU is busy.
    ///
    /// Idle-state rows are unaffected by `mu`: the PU only reacts to
    /// collisions, and no collision can occur while it is not transmitting.
    pub fn transition_row_sensed(&self, state: PuState, mu: f64) -> [f64; STATE_COUNT] {
        debug_assert!((0.0..=1.0).contains(&mu), "mu out of range: {mu}");
        match state {
            PuState::BusyL0 | PuState::BusyL1 => [
                (1.0 - mu) * (1.0 - self.alpha0),
                (1.0 - mu) * self.alpha0,
                mu * (1.0 - self.alpha1),
                mu * self.alpha1,
            ],
            PuState::IdleL0 | PuState::IdleL1 => self.transition_row_unsensed(state),
        }
    }

    /// Stationary `(busy, idle)` distribution of the Level-0 two-state chain.
    pub fn stationary_level0(&self) -> (f64, f64) {
        let busy = (1.0 - self.beta0) / (1.0 + self.alpha0 - self.beta0);
        (busy, 1.0 - busy)
    }

    /// Minimum normalized throughput a non-reactive PU would retain when the
    /// SU collides with at most a `zeta` fraction of its busy slots.
    pub fn benchmark_throughput(&self, zeta: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&zeta), "zeta out of range: {zeta}");
        let (busy, _) = self.stationary_level0();
        busy * (1.0 - zeta)
    }

    /// Collapses the model to its non-reactive two-state special case.
    pub fn reduce_to_nonreactive(&self) -> ChannelParams {
        ChannelParams {
            alpha0: self.alpha0,
            beta0: self.beta0,
            alpha1: self.alpha0,
            beta1: self.beta0,
        }
    }

    /// True when Level 1 behaves exactly like Level 0.
    pub fn is_nonreactive(&self) -> bool {
        self.alpha1 == self.alpha0 && self.beta1 == self.beta0
    }
}

/// A full problem instance: channels, horizon, collision bound, and sensor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    channels: Vec<ChannelParams>,
    horizon: usize,
    zeta: f64,
    sensor: EnergyDetectorParams,
}

impl Scenario {
    /// Builds a validated scenario.
    pub fn new(
        channels: Vec<ChannelParams>,
        horizon: usize,
        zeta: f64,
        sensor: EnergyDetectorParams,
    ) -> Result<Self> {
        if channels.is_empty() {
            return Err(OsaError::InvalidParameters(
                "a scenario needs at least one channel".to_string(),
            ));
        }
        if horizon < 1 {
            return Err(OsaError::InvalidParameters(
                "horizon must be at least 1".to_string(),
            ));
        }
        check_prob("zeta", zeta)?;
        Ok(Self {
            channels,
            horizon,
            zeta,
            sensor,
        })
    }

    pub fn channels(&self) -> &[ChannelParams] {
        &self.channels
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn sensor(&self) -> &EnergyDetectorParams {
        &self.sensor
    }

    /// Benchmark throughput per channel.
    pub fn benchmarks(&self) -> Vec<f64> {
        self.channels
            .iter()
            .map(|params| params.benchmark_throughput(self.zeta))
            .collect()
    }
}
