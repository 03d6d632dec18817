//! Belief tracking over PU states, observation probabilities, Bayes updates,
//! and single-slot expected rewards.
//!
//! The SU never observes the PU states directly; it keeps one probability row
//! per channel. Rows on unsensed channels are pushed through the unsensed
//! kernel. The row of the sensed channel conditions on the acknowledgment
//! `K` via Bayes rule:
//!
//! ```text
//!   lambda'_j = sum_i lambda_i P(j|i, A) U(k|i)  /  sum_i lambda_i U(k|i)
//! ```
//!
//! with `U(1|i) = g` for idle `i` and 0 for busy `i`, where
//! `g = epsilon f(0) + (1-epsilon) f(1)` is the access probability given an
//! idle PU. The product form is exact here: idle-state transitions do not
//! depend on the access outcome, and busy states can never produce `K = 1`.

use serde::Serialize;

use crate::error::{OsaError, Result};
use crate::pu_model::{ChannelParams, PuState, Scenario, STATE_COUNT};
use crate::sensor_roc::OperatingPoint;

/// Tolerance for belief rows to count as a probability distribution.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Observation branches with probability below this are pruned by the exact
/// solvers and evaluators; they contribute below value tolerance and can
/// have undefined Bayes updates.
pub const BRANCH_PRUNE_PROB: f64 = 1e-15;

/// End-of-slot acknowledgment from the SU receiver.
///
/// `Acked` means the SU transmitted on an idle channel; `NotAcked` covers
/// both "did not transmit" and "transmitted into a collision".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Observation {
    NotAcked = 0,
    Acked = 1,
}

impl Observation {
    pub const ALL: [Observation; 2] = [Observation::NotAcked, Observation::Acked];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Unit throughput carried by this observation.
    pub fn reward(self) -> f64 {
        match self {
            Observation::NotAcked => 0.0,
            Observation::Acked => 1.0,
        }
    }

    pub fn from_index(index: usize) -> Option<Observation> {
        Observation::ALL.get(index).copied()
    }
}

/// Channel access probabilities conditioned on the sensing result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccessPair {
    /// Access probability when the sensor reads "busy".
    pub when_sensed_busy: f64,
    /// Access probability when the sensor reads "idle".
    pub when_sensed_idle: f64,
}

impl AccessPair {
    /// Always follow the sensing result: never transmit on a busy reading,
    /// always transmit on an idle reading. Optimal under both constraint
    /// families considered here.
    pub const TRUST_SENSOR: AccessPair = AccessPair {
        when_sensed_busy: 0.0,
        when_sensed_idle: 1.0,
    };

    pub fn new(when_sensed_busy: f64, when_sensed_idle: f64) -> Result<Self> {
        for (name, value) in [
            ("when_sensed_busy", when_sensed_busy),
            ("when_sensed_idle", when_sensed_idle),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(OsaError::InvalidArgument(format!(
                    "access probability {name} must lie in [0, 1], got {value}"
                )));
            }
        }
        Ok(Self {
            when_sensed_busy,
            when_sensed_idle,
        })
    }
}

/// A complete per-slot decision: which channel to sense, at which sensor
/// operating point, and how to act on the sensing result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionTriple {
    /// Zero-based index of the sensed channel.
    pub channel: usize,
    pub point: OperatingPoint,
    pub access: AccessPair,
}

impl ActionTriple {
    pub fn new(channel: usize, point: OperatingPoint, access: AccessPair) -> Self {
        Self {
            channel,
            point,
            access,
        }
    }

    /// Access probability given the PU is idle on the sensed channel:
    /// `g = epsilon f(0) + (1-epsilon) f(1)`.
    pub fn access_prob_idle(&self) -> f64 {
        self.point.epsilon * self.access.when_sensed_busy
            + (1.0 - self.point.epsilon) * self.access.when_sensed_idle
    }

    /// Access probability given the PU is busy on the sensed channel:
    /// `mu = (1-delta) f(0) + delta f(1)`.
    pub fn access_prob_busy(&self) -> f64 {
        (1.0 - self.point.delta) * self.access.when_sensed_busy
            + self.point.delta * self.access.when_sensed_idle
    }

    /// Probability of observing `obs` on the sensed channel given the PU
    /// state there: an acknowledgment requires an idle PU and an access.
    pub fn observation_prob(&self, state: PuState, obs: Observation) -> f64 {
        let ack = if state.is_idle() {
            self.access_prob_idle()
        } else {
            0.0
        };
        match obs {
            Observation::Acked => ack,
            Observation::NotAcked => 1.0 - ack,
        }
    }

    /// Conditional collision probability this action induces on `channel`:
    /// `mu` on the sensed channel, 0 anywhere else.
    pub fn collision_prob(&self, channel: usize) -> f64 {
        if channel == self.channel {
            self.access_prob_busy()
        } else {
            0.0
        }
    }
}

/// Probability row over the four PU states of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeliefRow([f64; STATE_COUNT]);

impl BeliefRow {
    /// Builds a row after checking it lies on the simplex.
    pub fn new(probs: [f64; STATE_COUNT]) -> Result<Self> {
        for p in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(OsaError::InvalidParameters(format!(
                    "belief entry {p} outside [0, 1]"
                )));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(OsaError::InvalidParameters(format!(
                "belief row sums to {sum}, expected 1"
            )));
        }
        Ok(Self(probs))
    }

    /// Initial belief for one channel: Level-0 stationary occupancy with no
    /// mass in Level 1.
    pub fn initial(params: &ChannelParams) -> Self {
        let (busy, idle) = params.stationary_level0();
        Self([busy, idle, 0.0, 0.0])
    }

    pub fn probs(&self) -> [f64; STATE_COUNT] {
        self.0
    }

    pub fn prob(&self, state: PuState) -> f64 {
        self.0[state.index()]
    }

    /// Probability that the channel is occupied.
    pub fn busy_mass(&self) -> f64 {
        self.0[0] + self.0[2]
    }

    /// Probability that the channel is free.
    pub fn idle_mass(&self) -> f64 {
        self.0[1] + self.0[3]
    }

    /// Rescales the row if accumulated drift exceeds [`SIMPLEX_TOL`].
    fn renormalized(mut self) -> Self {
        let sum: f64 = self.0.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL && sum > 0.0 {
            log::debug!("renormalizing belief row with drift {}", sum - 1.0);
            for p in &mut self.0 {
                *p /= sum;
            }
        }
        self
    }

    /// One-step prediction when the SU does not sense this channel.
    pub fn update_unselected(&self, params: &ChannelParams) -> BeliefRow {
        let mut next = [0.0; STATE_COUNT];
        for (i, state) in PuState::ALL.iter().enumerate() {
            let mass = self.0[i];
            if mass == 0.0 {
                continue;
            }
            let row = params.transition_row_unsensed(*state);
            for (n, r) in next.iter_mut().zip(row.iter()) {
                *n += mass * r;
            }
        }
        BeliefRow(next).renormalized()
    }

    /// Probability of observing `obs` when `action` senses this channel.
    pub fn observation_likelihood(&self, action: &ActionTriple, obs: Observation) -> f64 {
        PuState::ALL
            .iter()
            .map(|&state| self.prob(state) * action.observation_prob(state, obs))
            .sum()
    }

    /// Bayes update of the sensed channel given acknowledgment `obs`.
    ///
    /// Fails with [`OsaError::ImpossibleObservation`] when `obs` has zero
    /// probability under this row (for instance `Acked` with no idle mass);
    /// exact evaluators are expected to skip such branches instead of
    /// renormalizing silently.
    pub fn update_selected(
        &self,
        params: &ChannelParams,
        action: &ActionTriple,
        obs: Observation,
    ) -> Result<BeliefRow> {
        let denominator = self.observation_likelihood(action, obs);
        if denominator <= 0.0 {
            return Err(OsaError::ImpossibleObservation {
                k: obs.index() as u8,
            });
        }
        let mu = action.access_prob_busy();
        let mut next = [0.0; STATE_COUNT];
        for (i, state) in PuState::ALL.iter().enumerate() {
            let weight = self.0[i] * action.observation_prob(*state, obs);
            if weight == 0.0 {
                continue;
            }
            let row = params.transition_row_sensed(*state, mu);
            for (n, r) in next.iter_mut().zip(row.iter()) {
                *n += weight * r;
            }
        }
        for n in &mut next {
            *n /= denominator;
        }
        Ok(BeliefRow(next).renormalized())
    }
}

/// Expected SU reward in one slot: the probability of an acknowledgment.
pub fn expected_su_reward(row: &BeliefRow, action: &ActionTriple) -> f64 {
    row.idle_mass() * action.access_prob_idle()
}

/// Expected PU throughput on one channel in one slot under collision
/// probability `sigma`.
pub fn expected_pu_reward_slot(row: &BeliefRow, sigma: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&sigma), "sigma out of range: {sigma}");
    row.busy_mass() * (1.0 - sigma)
}

/// The SU's belief over all channels: one row per channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeliefMatrix {
    rows: Vec<BeliefRow>,
}

impl BeliefMatrix {
    /// Initial belief of a scenario: every channel at its Level-0 stationary
    /// distribution.
    pub fn initial(scenario: &Scenario) -> Self {
        Self {
            rows: scenario.channels().iter().map(BeliefRow::initial).collect(),
        }
    }

    pub fn from_rows(rows: Vec<BeliefRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(OsaError::InvalidParameters(
                "belief matrix needs at least one row".to_string(),
            ));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[BeliefRow] {
        &self.rows
    }

    pub fn row(&self, channel: usize) -> &BeliefRow {
        &self.rows[channel]
    }

    pub fn num_channels(&self) -> usize {
        self.rows.len()
    }

    /// One-slot update of the whole matrix: Bayes on the sensed channel,
    /// prediction on all others.
    pub fn step(
        &self,
        channels: &[ChannelParams],
        action: &ActionTriple,
        obs: Observation,
    ) -> Result<BeliefMatrix> {
        debug_assert_eq!(channels.len(), self.rows.len());
        let mut rows = Vec::with_capacity(self.rows.len());
        for (n, (row, params)) in self.rows.iter().zip(channels.iter()).enumerate() {
            if n == action.channel {
                rows.push(row.update_selected(params, action, obs)?);
            } else {
                rows.push(row.update_unselected(params));
            }
        }
        Ok(BeliefMatrix { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(a0: f64, b0: f64, a1: f64, b1: f64) -> ChannelParams {
        ChannelParams::new(a0, b0, a1, b1).unwrap()
    }

    fn action(epsilon: f64, delta: f64, f0: f64, f1: f64) -> ActionTriple {
        ActionTriple::new(
            0,
            OperatingPoint { epsilon, delta },
            AccessPair::new(f0, f1).unwrap(),
        )
    }

    #[test]
    fn access_prob_idle_examples() {
        assert!((action(0.5, 0.5, 0.0, 0.5).access_prob_idle() - 0.25).abs() < 1e-15);
        assert!((action(0.5, 0.5, 0.0, 0.6).access_prob_idle() - 0.3).abs() < 1e-15);
        for epsilon in [0.0, 0.3, 1.0] {
            assert_eq!(action(epsilon, 0.5, 1.0, 1.0).access_prob_idle(), 1.0);
        }
    }

    #[test]
    fn access_prob_busy_examples() {
        assert!((action(0.5, 0.5, 0.0, 0.5).access_prob_busy() - 0.25).abs() < 1e-15);
        assert_eq!(action(0.5, 0.5, 0.0, 0.0).access_prob_busy(), 0.0);
        // Trusting the sensor makes the busy access probability exactly the
        // mis-detection probability.
        for delta in [0.0, 0.3, 1.0] {
            let a = ActionTriple::new(
                0,
                OperatingPoint {
                    epsilon: 0.2,
                    delta,
                },
                AccessPair::TRUST_SENSOR,
            );
            assert_eq!(a.access_prob_busy(), delta);
        }
    }

    #[test]
    fn observation_prob_examples() {
        let a = action(0.5, 0.5, 0.0, 0.5); // g = 0.25
        assert_eq!(a.observation_prob(PuState::BusyL0, Observation::Acked), 0.0);
        assert!((a.observation_prob(PuState::IdleL1, Observation::Acked) - 0.25).abs() < 1e-15);
        for state in PuState::ALL {
            let total: f64 = Observation::ALL
                .iter()
                .map(|&k| a.observation_prob(state, k))
                .sum();
            assert!((total - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn collision_prob_zero_off_channel() {
        let mut a = action(0.5, 0.5, 0.0, 0.6);
        a.channel = 2;
        assert!((a.collision_prob(2) - 0.3).abs() < 1e-15);
        assert_eq!(a.collision_prob(0), 0.0);
        assert_eq!(a.collision_prob(1), 0.0);
    }

    #[test]
    fn update_unselected_point_mass() {
        let p = params(0.1, 0.2, 0.9, 0.95);
        let row = BeliefRow::new([1.0, 0.0, 0.0, 0.0]).unwrap();
        let next = row.update_unselected(&p);
        assert_eq!(next.probs(), [0.9, 0.1, 0.0, 0.0]);
    }

    #[test]
    fn update_unselected_stationary_fixed_point() {
        let p = params(0.3, 0.4, 0.3, 0.4);
        let row = BeliefRow::initial(&p);
        let next = row.update_unselected(&p);
        for (a, b) in next.probs().iter().zip(row.probs().iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn update_selected_matches_hand_computation() {
        // Table-style instance: uniform Level-0 belief, epsilon = delta = 0.5,
        // access (0, 0.5), observation NotAcked.
        let p = params(0.5, 0.5, 0.9, 0.9);
        let row = BeliefRow::new([0.5, 0.5, 0.0, 0.0]).unwrap();
        let a = action(0.5, 0.5, 0.0, 0.5);
        let next = row
            .update_selected(&p, &a, Observation::NotAcked)
            .unwrap()
            .probs();
        let expected = [3.0 / 7.0, 3.0 / 7.0, 1.0 / 70.0, 9.0 / 70.0];
        for (n, e) in next.iter().zip(expected.iter()) {
            assert!((n - e).abs() < 1e-12, "{next:?} vs {expected:?}");
        }
    }

    #[test]
    fn update_selected_ack_from_idle_point_mass() {
        let p = params(0.1, 0.2, 0.9, 0.95);
        let row = BeliefRow::new([0.0, 1.0, 0.0, 0.0]).unwrap();
        let a = action(0.5, 0.5, 0.0, 0.5);
        let next = row.update_selected(&p, &a, Observation::Acked).unwrap();
        assert_eq!(next.probs(), [0.8, 0.2, 0.0, 0.0]);
    }

    #[test]
    fn ack_posterior_supported_on_idle_successors() {
        // After an acknowledgment the PU was idle, so the next state can only
        // be a successor of an idle state.
        let p = params(0.1, 0.2, 0.9, 0.95);
        let row = BeliefRow::new([0.3, 0.4, 0.1, 0.2]).unwrap();
        let a = action(0.2, 0.3, 0.1, 0.9);
        let next = row.update_selected(&p, &a, Observation::Acked).unwrap();
        // Mass reachable from IdleL0 ({0, 1}) and IdleL1 ({2, 3}) only; since
        // both idle rows exist here all four entries may be positive, but the
        // split must match the conditional idle mixture exactly.
        let idle0 = row.prob(PuState::IdleL0);
        let idle1 = row.prob(PuState::IdleL1);
        let total_idle = idle0 + idle1;
        assert!((next.probs()[0] + next.probs()[1] - idle0 / total_idle).abs() < 1e-12);
        assert!((next.probs()[2] + next.probs()[3] - idle1 / total_idle).abs() < 1e-12);
    }

    #[test]
    fn impossible_observation_is_an_error() {
        let p = params(0.1, 0.2, 0.9, 0.95);
        // All-busy row cannot produce an acknowledgment.
        let busy = BeliefRow::new([0.7, 0.0, 0.3, 0.0]).unwrap();
        let a = action(0.5, 0.5, 0.0, 1.0);
        assert!(matches!(
            busy.update_selected(&p, &a, Observation::Acked),
            Err(OsaError::ImpossibleObservation { k: 1 })
        ));
        // g = 0 blocks acknowledgments even with idle mass.
        let idle = BeliefRow::new([0.0, 1.0, 0.0, 0.0]).unwrap();
        let silent = action(1.0, 0.0, 0.0, 1.0);
        assert!(idle
            .update_selected(&p, &silent, Observation::Acked)
            .is_err());
    }

    #[test]
    fn expected_rewards_examples() {
        let row = BeliefRow::new([0.5, 0.5, 0.0, 0.0]).unwrap();
        let a = action(0.5, 0.5, 0.0, 0.5); // g = 0.25
        assert!((expected_su_reward(&row, &a) - 0.125).abs() < 1e-15);
        assert_eq!(
            expected_su_reward(&row, &action(1.0, 0.5, 0.0, 0.0)),
            0.0 // g = 0
        );
        let all_busy = BeliefRow::new([0.6, 0.0, 0.4, 0.0]).unwrap();
        assert_eq!(expected_su_reward(&all_busy, &a), 0.0);

        assert_eq!(expected_pu_reward_slot(&row, 0.0), row.busy_mass());
        let full = BeliefRow::new([1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((expected_pu_reward_slot(&full, 0.05) - 0.95).abs() < 1e-15);
    }

    #[test]
    fn belief_row_validation() {
        assert!(BeliefRow::new([0.25, 0.25, 0.25, 0.25]).is_ok());
        assert!(BeliefRow::new([0.5, 0.5, 0.1, -0.1]).is_err());
        assert!(BeliefRow::new([0.5, 0.4, 0.0, 0.0]).is_err());
    }

    #[test]
    fn matrix_step_updates_only_sensed_row_by_bayes() {
        let ch = vec![params(0.1, 0.2, 0.9, 0.95), params(0.5, 0.5, 0.9, 0.9)];
        let sensor = crate::sensor_roc::EnergyDetectorParams::new(30, 1.0, 3.0).unwrap();
        let scenario = Scenario::new(ch.clone(), 3, 0.1, sensor).unwrap();
        let belief = BeliefMatrix::initial(&scenario);
        let mut a = action(0.5, 0.5, 0.0, 0.5);
        a.channel = 1;
        let next = belief.step(&ch, &a, Observation::NotAcked).unwrap();
        assert_eq!(
            next.row(0).probs(),
            belief.row(0).update_unselected(&ch[0]).probs()
        );
        assert_eq!(
            next.row(1).probs(),
            belief
                .row(1)
                .update_selected(&ch[1], &a, Observation::NotAcked)
                .unwrap()
                .probs()
        );
    }

    fn arb_row() -> impl Strategy<Value = BeliefRow> {
        proptest::array::uniform4(0.0f64..1.0).prop_map(|raw| {
            let sum: f64 = raw.iter().sum();
            if sum == 0.0 {
                return BeliefRow([0.25; 4]);
            }
            let mut probs = raw.map(|x| x / sum);
            // Close the simplex exactly despite rounding.
            probs[3] = 1.0 - probs[0] - probs[1] - probs[2];
            BeliefRow(probs)
        })
    }

    proptest! {
        #[test]
        fn updates_preserve_the_simplex(
            row in arb_row(),
            a0 in 0.0f64..=1.0, b0 in 0.0f64..1.0,
            epsilon in 0.0f64..=1.0, delta in 0.0f64..=1.0,
            f0 in 0.0f64..=1.0, f1 in 0.0f64..=1.0,
        ) {
            let p = params(a0, b0, a0.max(0.9), b0.max(0.9));
            let unsensed = row.update_unselected(&p);
            prop_assert!((unsensed.probs().iter().sum::<f64>() - 1.0).abs() < SIMPLEX_TOL);

            let a = action(epsilon, delta, f0, f1);
            for obs in Observation::ALL {
                if row.observation_likelihood(&a, obs) > BRANCH_PRUNE_PROB {
                    let next = row.update_selected(&p, &a, obs).unwrap();
                    prop_assert!((next.probs().iter().sum::<f64>() - 1.0).abs() < SIMPLEX_TOL);
                    prop_assert!(next.probs().iter().all(|&x| x >= 0.0));
                }
            }
        }

        #[test]
        fn unsensed_update_is_linear_in_the_row(
            x in arb_row(), y in arb_row(), w in 0.0f64..=1.0,
            a0 in 0.0f64..=1.0, b0 in 0.0f64..1.0,
        ) {
            let p = params(a0, b0, a0.max(0.95), b0.max(0.95));
            let mix = {
                let xs = x.probs();
                let ys = y.probs();
                let mut m = [0.0; 4];
                for i in 0..4 {
                    m[i] = w * xs[i] + (1.0 - w) * ys[i];
                }
                BeliefRow(m)
            };
            let pushed_mix = mix.update_unselected(&p).probs();
            let xp = x.update_unselected(&p).probs();
            let yp = y.update_unselected(&p).probs();
            for i in 0..4 {
                let expected = w * xp[i] + (1.0 - w) * yp[i];
                prop_assert!((pushed_mix[i] - expected).abs() < 1e-12);
            }
        }
    }
}
