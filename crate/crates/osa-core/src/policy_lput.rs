//! Suboptimal policy guaranteeing the PU's long-term throughput.
//!
//! A per-slot collision cap cannot protect a reactive PU: every collision
//! pushes the PU toward its backoff level, and the lost access probability
//! compounds over the horizon. The long-term constraint instead requires the
//! PU's normalized throughput over `T` slots to reach the benchmark
//! `Upsilon`. Optimizing under it exactly costs `O(2^T)` belief branches, so
//! the policy here works on the deterministic equivalent process over
//! expected state distributions:
//!
//! ```text
//!   Omega(t+1) = Omega(t) P(. | ., mu = delta(t))      (f = (0, 1))
//!   R(t)       = (omega_0(t) + omega_2(t)) (1 - delta(t))
//! ```
//!
//! Satisfying `sum_t R(t) = Upsilon T` on this process implies the original
//! constraint holds in expectation, because the branch-probability mixture of
//! the belief rows equals `Omega(t)` in every slot (checked numerically by
//! [`pomdp_mdp_consistency`]).
//!
//! The schedule keeps the remaining requirement `X(t)` between two per-slot
//! mis-detection bounds: `delta_low` stops the PU from being overserved
//! (`X` must stay nonnegative so the final slot can close the books exactly)
//! and `delta_high`, built from a backward coefficient recursion, stops the
//! PU from being starved beyond what the remaining slots can repay. A
//! configurable interpolation `psi(t)` places the decision inside the box.

use serde::Serialize;

use crate::belief::{AccessPair, ActionTriple, BeliefMatrix, BeliefRow, Observation};
use crate::error::{OsaError, Result};
use crate::policy_sccp::{solve_sensing_tree, SensingPolicyTree};
use crate::pu_model::{ChannelParams, PuState, Scenario, STATE_COUNT};
use crate::sensor_roc::RocCurve;

/// Mis-detection bounds closer than this are treated as collapsed; wider
/// inversions are infeasibility. Matches the accuracy of the ROC inversion.
const BRACKET_TOL: f64 = 1e-9;

/// State of the deterministic equivalent process: the expected distribution
/// over the four PU states given the action history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MdpState([f64; STATE_COUNT]);

impl MdpState {
    pub fn new(probs: [f64; STATE_COUNT]) -> Result<Self> {
        let row = BeliefRow::new(probs)?;
        Ok(Self(row.probs()))
    }

    /// Initial state, equal to the initial belief row.
    pub fn initial(params: &ChannelParams) -> Self {
        Self(BeliefRow::initial(params).probs())
    }

    pub fn from_belief_row(row: &BeliefRow) -> Self {
        Self(row.probs())
    }

    pub fn probs(&self) -> [f64; STATE_COUNT] {
        self.0
    }

    pub fn prob(&self, state: PuState) -> f64 {
        self.0[state.index()]
    }

    pub fn busy_mass(&self) -> f64 {
        self.0[0] + self.0[2]
    }

    pub fn idle_mass(&self) -> f64 {
        self.0[1] + self.0[3]
    }
}

/// Deterministic one-slot transition under mis-detection `delta` with the
/// sensor trusted (`f = (0, 1)`, so the collision probability equals
/// `delta`).
pub fn mdp_step(state: &MdpState, params: &ChannelParams, delta: f64) -> MdpState {
    debug_assert!((0.0..=1.0).contains(&delta), "delta out of range: {delta}");
    let mut next = [0.0; STATE_COUNT];
    for (i, pu_state) in PuState::ALL.iter().enumerate() {
        let mass = state.0[i];
        if mass == 0.0 {
            continue;
        }
        let row = params.transition_row_sensed(*pu_state, delta);
        for (n, r) in next.iter_mut().zip(row.iter()) {
            *n += mass * r;
        }
    }
    MdpState(next)
}

/// Expected PU throughput in one slot of the equivalent process.
pub fn mdp_pu_reward(state: &MdpState, delta: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&delta), "delta out of range: {delta}");
    state.busy_mass() * (1.0 - delta)
}

/// Remaining-requirement sequence `X(1..=T)`: `X(1) = Upsilon T` and each
/// slot's realized reward is paid down in order.
pub fn requirement_recursion(upsilon: f64, horizon: usize, rewards: &[f64]) -> Vec<f64> {
    let mut remaining = vec![0.0; horizon];
    if horizon == 0 {
        return remaining;
    }
    remaining[0] = upsilon * horizon as f64;
    for t in 1..horizon {
        remaining[t] = remaining[t - 1] - rewards[t - 1];
    }
    remaining
}

/// Backward coefficients bounding how much PU throughput the remaining slots
/// can still deliver. Indexed by slot, terminal values `(1, 0, 0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MCoefficients {
    per_slot: Vec<[f64; 4]>,
}

impl MCoefficients {
    pub fn compute(params: &ChannelParams, horizon: usize) -> Self {
        let (a0, b0, a1, b1) = (
            params.alpha0(),
            params.beta0(),
            params.alpha1(),
            params.beta1(),
        );
        let mut per_slot = vec![[0.0; 4]; horizon];
        per_slot[horizon - 1] = [1.0, 0.0, 0.0, 1.0];
        for t in (0..horizon.saturating_sub(1)).rev() {
            let [m1n, m2n, m3n, _] = per_slot[t + 1];
            per_slot[t] = [
                1.0 + (1.0 - a0) * m1n + a0 * m2n,
                (1.0 - b0) * m1n + b0 * m2n,
                (1.0 - b1) * m1n + b1 * m3n,
                1.0 + (a1 - a0) * m1n + a0 * m2n - a1 * m3n,
            ];
        }
        Self { per_slot }
    }

    /// Coefficients `(m1, m2, m3, m4)` for one-based slot `t`.
    pub fn at(&self, t: usize) -> [f64; 4] {
        self.per_slot[t - 1]
    }

    pub fn horizon(&self) -> usize {
        self.per_slot.len()
    }
}

/// Minimum mis-detection at slot `slot` that keeps the remaining requirement
/// nonnegative: serving the PU more than `remaining` now would force the
/// final equality to miss from above.
pub fn pm_lower(state: &MdpState, remaining: f64, slot: usize) -> Result<f64> {
    let busy = state.busy_mass();
    if busy <= 0.0 {
        if remaining > 0.0 {
            return Err(OsaError::InfeasibleRequirement {
                slot,
                detail: format!("requirement {remaining} outstanding but the PU is never busy"),
            });
        }
        return Ok(1.0);
    }
    Ok((1.0 - remaining / busy).clamp(0.0, 1.0))
}

/// Maximum mis-detection at slot `slot` that leaves the remaining slots able
/// to serve the rest of the requirement.
pub fn pm_upper(state: &MdpState, remaining: f64, m: [f64; 4], slot: usize) -> Result<f64> {
    let busy = state.busy_mass();
    if busy <= 0.0 {
        if remaining > 0.0 {
            return Err(OsaError::InfeasibleRequirement {
                slot,
                detail: format!("requirement {remaining} outstanding but the PU is never busy"),
            });
        }
        return Ok(1.0);
    }
    let [m1, m2, m3, m4] = m;
    if m4 <= 0.0 {
        return Err(OsaError::InvalidArgument(format!(
            "coefficient m4 = {m4} must be positive at slot {slot}"
        )));
    }
    let upper = (state.prob(PuState::IdleL0) * m2 + state.prob(PuState::IdleL1) * m3 - remaining)
        / (busy * m4)
        + m1 / m4;
    if upper < -BRACKET_TOL {
        return Err(OsaError::InfeasibleRequirement {
            slot,
            detail: format!(
                "maximum allowable mis-detection is {upper}; the requirement {remaining} \
                 cannot be met from this slot onward"
            ),
        });
    }
    Ok(upper.clamp(0.0, 1.0))
}

/// One slot of a built schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LputSlot {
    /// PU throughput still owed from this slot through the horizon.
    pub remaining_requirement: f64,
    /// Equivalent-process state at the start of the slot.
    pub state: MdpState,
    pub delta_low: f64,
    pub delta_high: f64,
    /// `delta_low + psi (delta_high - delta_low)`.
    pub delta: f64,
    /// False alarm on the ROC curve at `delta`.
    pub epsilon: f64,
}

/// Per-slot sensor decisions for one channel; the access pair is always
/// `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LputSchedule {
    /// Benchmark throughput the schedule serves exactly.
    pub upsilon: f64,
    pub slots: Vec<LputSlot>,
}

impl LputSchedule {
    pub fn horizon(&self) -> usize {
        self.slots.len()
    }

    /// The slot decision as a full action on `channel` (one-based slot `t`).
    pub fn action_on(&self, channel: usize, t: usize) -> ActionTriple {
        let slot = &self.slots[t - 1];
        ActionTriple::new(
            channel,
            crate::sensor_roc::OperatingPoint {
                epsilon: slot.epsilon,
                delta: slot.delta,
            },
            AccessPair::TRUST_SENSOR,
        )
    }

    /// Equivalent-process PU reward per slot.
    pub fn pu_slot_rewards(&self) -> Vec<f64> {
        self.slots
            .iter()
            .map(|slot| mdp_pu_reward(&slot.state, slot.delta))
            .collect()
    }

    /// Total PU throughput over the horizon; equals `upsilon * T` by
    /// construction up to floating point.
    pub fn pu_total(&self) -> f64 {
        self.pu_slot_rewards().iter().sum()
    }
}

/// Builds the mis-detection schedule for one channel under the long-term
/// constraint: a forward pass tracking the equivalent-process state and the
/// remaining requirement, placing each slot's decision at `psi(t)` between
/// its feasibility bounds. The final slot closes the requirement exactly.
///
/// ```
/// use osa_core::{build_schedule, ChannelParams, EnergyDetectorParams};
///
/// let channel = ChannelParams::new(0.1, 0.2, 0.9, 0.95)?;
/// let detector = EnergyDetectorParams::new(30, 1.0, 10f64.powf(0.5))?;
/// let schedule = build_schedule(&channel, &detector, 0.05, 5, &[0.8; 5])?;
/// let target = schedule.upsilon * 5.0;
/// assert!((schedule.pu_total() - target).abs() < 1e-9);
/// # Ok::<(), osa_core::OsaError>(())
/// ```
pub fn build_schedule(
    params: &ChannelParams,
    roc: &impl RocCurve,
    zeta: f64,
    horizon: usize,
    psi: &[f64],
) -> Result<LputSchedule> {
    if horizon < 1 {
        return Err(OsaError::InvalidArgument(
            "horizon must be at least 1".to_string(),
        ));
    }
    if psi.len() != horizon {
        return Err(OsaError::InvalidArgument(format!(
            "psi has {} entries, expected {horizon}",
            psi.len()
        )));
    }
    if let Some(bad) = psi.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(OsaError::InvalidArgument(format!(
            "psi entries must lie in [0, 1], got {bad}"
        )));
    }
    if !(0.0..=1.0).contains(&zeta) {
        return Err(OsaError::InvalidArgument(format!(
            "zeta must lie in [0, 1], got {zeta}"
        )));
    }

    let upsilon = params.benchmark_throughput(zeta);
    let coefficients = MCoefficients::compute(params, horizon);
    let mut state = MdpState::initial(params);
    let mut remaining = upsilon * horizon as f64;
    let mut slots = Vec::with_capacity(horizon);

    for t in 1..=horizon {
        let delta_low = pm_lower(&state, remaining, t)?;
        let mut delta_high = pm_upper(&state, remaining, coefficients.at(t), t)?;
        if delta_high < delta_low {
            if delta_low - delta_high > BRACKET_TOL {
                return Err(OsaError::InfeasibleRequirement {
                    slot: t,
                    detail: format!("empty mis-detection bracket [{delta_low}, {delta_high}]"),
                });
            }
            delta_high = delta_low;
        }
        let delta = delta_low + psi[t - 1] * (delta_high - delta_low);
        let epsilon = roc.epsilon_for(delta)?;
        slots.push(LputSlot {
            remaining_requirement: remaining,
            state,
            delta_low,
            delta_high,
            delta,
            epsilon,
        });
        remaining -= mdp_pu_reward(&state, delta);
        state = mdp_step(&state, params, delta);
    }
    debug_assert!(
        remaining.abs() < BRACKET_TOL,
        "requirement not closed: {remaining}"
    );
    Ok(LputSchedule { upsilon, slots })
}

/// The multi-channel suboptimal policy: per-channel schedules plus the
/// sensing rule that maximizes SU reward given them.
#[derive(Debug, Clone, Serialize)]
pub struct MultiChannelPolicy {
    pub schedules: Vec<LputSchedule>,
    pub tree: SensingPolicyTree,
    /// Total expected SU reward of the sensing rule.
    pub value: f64,
}

/// Builds the policy for a whole scenario. Each channel's schedule is
/// computed against the worst case in which that channel is sensed in every
/// slot; the trajectories are observation-independent, so they can be fixed
/// offline. Sensing a channel in fewer slots only helps its PU (unsensed
/// slots carry zero collision probability), so every PU still reaches its
/// benchmark. The sensing rule then maximizes the SU's reward by exhaustive
/// dynamic programming with the per-slot actions pinned.
pub fn multi_channel_policy(
    scenario: &Scenario,
    psi: &[f64],
    budget: u64,
) -> Result<MultiChannelPolicy> {
    let schedules: Vec<LputSchedule> = scenario
        .channels()
        .iter()
        .map(|params| {
            build_schedule(
                params,
                scenario.sensor(),
                scenario.zeta(),
                scenario.horizon(),
                psi,
            )
        })
        .collect::<Result<_>>()?;
    let initial = BeliefMatrix::initial(scenario);
    let (value, tree) = solve_sensing_tree(
        scenario.channels(),
        scenario.horizon(),
        &initial,
        &|channel, t| schedules[channel].action_on(channel, t),
        budget,
    )?;
    Ok(MultiChannelPolicy {
        schedules,
        tree,
        value,
    })
}

/// Final-slot tightening: given the PU throughput `realized` over slots
/// `1..T`, returns the slot-`T` action that lands the PU total exactly on
/// `upsilon * T`. Applicable when the outstanding amount is nonnegative and
/// within the final slot's busy mass; any strict surplus turns into strictly
/// more SU reward because a larger feasible mis-detection pairs with a
/// smaller false alarm.
pub fn tighten_final_slot(
    belief_at_horizon: &BeliefRow,
    roc: &impl RocCurve,
    upsilon: f64,
    horizon: usize,
    realized: f64,
) -> Result<ActionTriple> {
    const EDGE_TOL: f64 = 1e-12;
    let outstanding = upsilon * horizon as f64 - realized;
    let busy = belief_at_horizon.busy_mass();
    if outstanding < -EDGE_TOL || outstanding > busy + EDGE_TOL {
        return Err(OsaError::InfeasibleRequirement {
            slot: horizon,
            detail: format!(
                "outstanding throughput {outstanding} not within [0, {busy}]; \
                 the tightening construction does not apply"
            ),
        });
    }
    let outstanding = outstanding.clamp(0.0, busy);
    let delta = if busy > 0.0 {
        1.0 - outstanding / busy
    } else {
        1.0
    };
    let epsilon = roc.epsilon_for(delta)?;
    Ok(ActionTriple::new(
        0,
        crate::sensor_roc::OperatingPoint { epsilon, delta },
        AccessPair::TRUST_SENSOR,
    ))
}

/// Checks the state-consistency identity behind the equivalent process for a
/// single-channel scenario: enumerates every observation branch of the
/// belief process under the per-slot mis-detection schedule `deltas` and
/// returns the largest absolute difference, over slots and states, between
/// the equivalent-process state and the probability-weighted mixture of
/// branch beliefs.
pub fn pomdp_mdp_consistency(scenario: &Scenario, deltas: &[f64], budget: u64) -> Result<f64> {
    if scenario.num_channels() != 1 {
        return Err(OsaError::InvalidArgument(format!(
            "consistency check is defined for one channel, got {}",
            scenario.num_channels()
        )));
    }
    let horizon = scenario.horizon();
    if deltas.len() != horizon {
        return Err(OsaError::InvalidArgument(format!(
            "delta schedule has {} entries, expected {horizon}",
            deltas.len()
        )));
    }
    let required = crate::policy_sccp::search_node_bound(1, horizon);
    if required > budget {
        return Err(OsaError::BudgetExceeded { required, budget });
    }

    let params = scenario.channels()[0];
    let actions: Vec<ActionTriple> = deltas
        .iter()
        .map(|&delta| {
            Ok(ActionTriple::new(
                0,
                crate::sensor_roc::OperatingPoint {
                    epsilon: scenario.sensor().epsilon_for(delta)?,
                    delta,
                },
                AccessPair::TRUST_SENSOR,
            ))
        })
        .collect::<Result<_>>()?;

    // Branch-probability mixture of belief rows, per slot and state. Only
    // exactly-zero branches are skipped so no probability mass is lost.
    let mut mixture = vec![[0.0; STATE_COUNT]; horizon];
    fn accumulate(
        row: &BeliefRow,
        prob: f64,
        t: usize,
        horizon: usize,
        params: &ChannelParams,
        actions: &[ActionTriple],
        mixture: &mut [[f64; STATE_COUNT]],
    ) -> Result<()> {
        for (acc, p) in mixture[t - 1].iter_mut().zip(row.probs().iter()) {
            *acc += prob * p;
        }
        if t == horizon {
            return Ok(());
        }
        let action = &actions[t - 1];
        for obs in Observation::ALL {
            let branch = row.observation_likelihood(action, obs);
            if branch <= 0.0 {
                continue;
            }
            let next = row.update_selected(params, action, obs)?;
            accumulate(
                &next,
                prob * branch,
                t + 1,
                horizon,
                params,
                actions,
                mixture,
            )?;
        }
        Ok(())
    }
    accumulate(
        &BeliefRow::initial(&params),
        1.0,
        1,
        horizon,
        &params,
        &actions,
        &mut mixture,
    )?;

    let mut state = MdpState::initial(&params);
    let mut deviation = 0.0f64;
    for t in 1..=horizon {
        for (omega, mixed) in state.probs().iter().zip(mixture[t - 1].iter()) {
            deviation = deviation.max((omega - mixed).abs());
        }
        if t < horizon {
            state = mdp_step(&state, &params, deltas[t - 1]);
        }
    }
    Ok(deviation)
}
