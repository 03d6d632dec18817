//! Exact and Monte Carlo evaluation of a policy's SU and PU throughput.
//!
//! The exact evaluator enumerates the observation tree of the belief process
//! under a fixed policy (a per-channel, per-slot action schedule plus a
//! sensing rule), accumulating the SU's expected reward and the PU's
//! expected throughput on every channel along each branch. Unsensed channels
//! contribute zero collision probability in a slot. The Monte Carlo
//! simulator samples true PU trajectories, sensing outcomes, and access
//! decisions; it exists to cross-validate the exact recursions and to reach
//! instances beyond the exact tree's budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{
    expected_pu_reward_slot, expected_su_reward, AccessPair, ActionTriple, BeliefMatrix,
    Observation, BRANCH_PRUNE_PROB,
};
use crate::error::{OsaError, Result};
use crate::policy_lput::LputSchedule;
use crate::policy_sccp::{search_node_bound, SccpAction, SensingNode, SensingPolicyTree};
use crate::pu_model::{ChannelParams, PuState, Scenario};
use crate::sensor_roc::OperatingPoint;

/// Per-channel, per-slot sensor and access decisions.
///
/// `action(n, t)` is the action the SU plays whenever it senses channel `n`
/// in slot `t`; which channel is sensed comes from the sensing rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySchedule {
    actions: Vec<Vec<(OperatingPoint, AccessPair)>>,
}

impl PolicySchedule {
    /// The same operating point and access pair everywhere; the
    /// collision-constrained optimum has this shape.
    pub fn uniform(
        num_channels: usize,
        horizon: usize,
        point: OperatingPoint,
        access: AccessPair,
    ) -> Self {
        Self {
            actions: vec![vec![(point, access); horizon]; num_channels],
        }
    }

    /// Schedule of the collision-constrained action on every channel.
    pub fn from_sccp(action: &SccpAction, num_channels: usize, horizon: usize) -> Self {
        Self::uniform(
            num_channels,
            horizon,
            action.point,
            AccessPair::TRUST_SENSOR,
        )
    }

    /// Stitches per-channel throughput schedules into one policy schedule.
    pub fn from_lput_schedules(schedules: &[LputSchedule]) -> Result<Self> {
        if schedules.is_empty() {
            return Err(OsaError::InvalidArgument(
                "need at least one channel schedule".to_string(),
            ));
        }
        let horizon = schedules[0].horizon();
        if schedules.iter().any(|s| s.horizon() != horizon) {
            return Err(OsaError::InvalidArgument(
                "channel schedules disagree on the horizon".to_string(),
            ));
        }
        Ok(Self {
            actions: schedules
                .iter()
                .map(|schedule| {
                    schedule
                        .slots
                        .iter()
                        .map(|slot| {
                            (
                                OperatingPoint {
                                    epsilon: slot.epsilon,
                                    delta: slot.delta,
                                },
                                AccessPair::TRUST_SENSOR,
                            )
                        })
                        .collect()
                })
                .collect(),
        })
    }

    pub fn num_channels(&self) -> usize {
        self.actions.len()
    }

    pub fn horizon(&self) -> usize {
        self.actions[0].len()
    }

    /// Full action for sensing channel `channel` in one-based slot `t`.
    pub fn action(&self, channel: usize, t: usize) -> ActionTriple {
        let (point, access) = self.actions[channel][t - 1];
        ActionTriple::new(channel, point, access)
    }
}

/// Raw totals from one exact tree walk.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactEvaluation {
    /// Expected SU reward summed over the horizon (not normalized).
    pub su_total: f64,
    /// Expected SU reward earned in each slot.
    pub su_per_slot: Vec<f64>,
    /// Expected SU reward split by the channel it was earned on.
    pub su_share_per_channel: Vec<f64>,
    /// Expected PU throughput per channel summed over the horizon.
    pub pu_totals: Vec<f64>,
    /// Number of observation paths enumerated.
    pub branch_count: u64,
    /// Total probability mass of the enumerated paths; 1 up to pruning.
    pub probability_mass: f64,
}

fn check_policy_shape(
    num_channels: usize,
    horizon: usize,
    schedule: &PolicySchedule,
    tree: &SensingPolicyTree,
) -> Result<()> {
    if schedule.num_channels() != num_channels || schedule.horizon() != horizon {
        return Err(OsaError::InvalidArgument(format!(
            "policy schedule is {}x{}, scenario needs {}x{}",
            schedule.num_channels(),
            schedule.horizon(),
            num_channels,
            horizon
        )));
    }
    if tree.horizon != horizon {
        return Err(OsaError::InvalidArgument(format!(
            "sensing tree depth {} does not match horizon {horizon}",
            tree.horizon
        )));
    }
    Ok(())
}

/// Exact policy evaluation from an arbitrary initial belief.
pub fn exact_evaluate_from(
    initial: &BeliefMatrix,
    channels: &[ChannelParams],
    horizon: usize,
    schedule: &PolicySchedule,
    tree: &SensingPolicyTree,
    budget: u64,
) -> Result<ExactEvaluation> {
    check_policy_shape(channels.len(), horizon, schedule, tree)?;
    // Branching is over observations only: the walk touches at most
    // sum_t 2^(t-1) belief nodes regardless of the channel count.
    let required = search_node_bound(1, horizon);
    if required > budget {
        return Err(OsaError::BudgetExceeded { required, budget });
    }

    struct Walk<'a> {
        channels: &'a [ChannelParams],
        horizon: usize,
        schedule: &'a PolicySchedule,
        su_total: f64,
        su_per_slot: Vec<f64>,
        su_share: Vec<f64>,
        pu_totals: Vec<f64>,
        branch_count: u64,
        probability_mass: f64,
    }

    impl Walk<'_> {
        fn visit(
            &mut self,
            belief: &BeliefMatrix,
            node: &SensingNode,
            t: usize,
            prob: f64,
        ) -> Result<()> {
            let action = self.schedule.action(node.channel, t);
            let su_here = prob * expected_su_reward(belief.row(node.channel), &action);
            self.su_total += su_here;
            self.su_per_slot[t - 1] += su_here;
            self.su_share[node.channel] += su_here;
            for n in 0..self.channels.len() {
                self.pu_totals[n] +=
                    prob * expected_pu_reward_slot(belief.row(n), action.collision_prob(n));
            }
            if t == self.horizon {
                self.branch_count += 1;
                self.probability_mass += prob;
                return Ok(());
            }
            for obs in Observation::ALL {
                let branch = belief
                    .row(node.channel)
                    .observation_likelihood(&action, obs);
                if branch < BRANCH_PRUNE_PROB {
                    continue;
                }
                let child = node.children[obs.index()].as_deref().ok_or_else(|| {
                    OsaError::InvalidArgument(format!(
                        "sensing tree lacks the k={} branch at slot {t} (probability {branch})",
                        obs.index()
                    ))
                })?;
                let next = belief.step(self.channels, &action, obs)?;
                self.visit(&next, child, t + 1, prob * branch)?;
            }
            Ok(())
        }
    }

    let mut walk = Walk {
        channels,
        horizon,
        schedule,
        su_total: 0.0,
        su_per_slot: vec![0.0; horizon],
        su_share: vec![0.0; channels.len()],
        pu_totals: vec![0.0; channels.len()],
        branch_count: 0,
        probability_mass: 0.0,
    };
    walk.visit(initial, &tree.root, 1, 1.0)?;
    Ok(ExactEvaluation {
        su_total: walk.su_total,
        su_per_slot: walk.su_per_slot,
        su_share_per_channel: walk.su_share,
        pu_totals: walk.pu_totals,
        branch_count: walk.branch_count,
        probability_mass: walk.probability_mass,
    })
}

/// Exact policy evaluation from the scenario's initial belief.
pub fn exact_evaluate(
    scenario: &Scenario,
    schedule: &PolicySchedule,
    tree: &SensingPolicyTree,
    budget: u64,
) -> Result<ExactEvaluation> {
    exact_evaluate_from(
        &BeliefMatrix::initial(scenario),
        scenario.channels(),
        scenario.horizon(),
        schedule,
        tree,
        budget,
    )
}

/// Exact expected SU reward over the horizon (not normalized).
pub fn exact_su_value(
    scenario: &Scenario,
    schedule: &PolicySchedule,
    tree: &SensingPolicyTree,
    budget: u64,
) -> Result<f64> {
    Ok(exact_evaluate(scenario, schedule, tree, budget)?.su_total)
}

/// Exact normalized PU throughput per channel.
pub fn exact_pu_throughput(
    scenario: &Scenario,
    schedule: &PolicySchedule,
    tree: &SensingPolicyTree,
    budget: u64,
) -> Result<Vec<f64>> {
    let horizon = scenario.horizon() as f64;
    Ok(exact_evaluate(scenario, schedule, tree, budget)?
        .pu_totals
        .into_iter()
        .map(|total| total / horizon)
        .collect())
}

/// Upper bound on the SU's normalized throughput while the PU on this
/// channel still reaches its benchmark: the channel's unit throughput minus
/// the benchmark.
pub fn su_upper_bound(params: &ChannelParams, zeta: f64) -> f64 {
    1.0 - params.benchmark_throughput(zeta)
}

/// How an [`EvaluationReport`] was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EvalMethod {
    Exact,
    MonteCarlo { episodes: u64, seed: u64 },
}

/// Standard errors of the Monte Carlo estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardErrors {
    pub su_normalized: f64,
    pub pu_normalized: Vec<f64>,
    pub su_share_per_channel: Vec<f64>,
}

/// Normalized throughput figures for one (scenario, policy) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub method: EvalMethod,
    /// SU reward per slot, averaged over the horizon.
    pub su_normalized: f64,
    /// SU reward per slot earned on each channel.
    pub su_share_per_channel: Vec<f64>,
    /// PU throughput per slot on each channel.
    pub pu_normalized: Vec<f64>,
    /// Per-channel sum of the PU throughput and the SU share.
    pub sum_throughput: Vec<f64>,
    /// `1 - Upsilon_n` per channel.
    pub upper_bound: Vec<f64>,
    /// Enumerated observation paths (exact) or episodes (Monte Carlo).
    pub branch_count: u64,
    /// Present for Monte Carlo reports.
    pub standard_errors: Option<StandardErrors>,
}

/// Exact evaluation packaged as a report.
pub fn exact_report(
    scenario: &Scenario,
    schedule: &PolicySchedule,
    tree: &SensingPolicyTree,
    budget: u64,
) -> Result<EvaluationReport> {
    let evaluation = exact_evaluate(scenario, schedule, tree, budget)?;
    debug_assert!((evaluation.probability_mass - 1.0).abs() < 1e-12);
    let horizon = scenario.horizon() as f64;
    let pu_normalized: Vec<f64> = evaluation.pu_totals.iter().map(|t| t / horizon).collect();
    let su_share: Vec<f64> = evaluation
        .su_share_per_channel
        .iter()
        .map(|s| s / horizon)
        .collect();
    let sum_throughput = pu_normalized
        .iter()
        .zip(su_share.iter())
        .map(|(pu, su)| pu + su)
        .collect();
    Ok(EvaluationReport {
        method: EvalMethod::Exact,
        su_normalized: evaluation.su_total / horizon,
        su_share_per_channel: su_share,
        pu_normalized,
        sum_throughput,
        upper_bound: scenario
            .channels()
            .iter()
            .map(|p| su_upper_bound(p, scenario.zeta()))
            .collect(),
        branch_count: evaluation.branch_count,
        standard_errors: None,
    })
}

fn sample_next_state(
    state: PuState,
    collided: bool,
    params: &ChannelParams,
    rng: &mut ChaCha8Rng,
) -> PuState {
    match state {
        PuState::BusyL0 | PuState::BusyL1 => {
            if collided {
                if rng.random_bool(params.alpha1()) {
                    PuState::IdleL1
                } else {
                    PuState::BusyL1
                }
            } else if rng.random_bool(params.alpha0()) {
                PuState::IdleL0
            } else {
                PuState::BusyL0
            }
        }
        PuState::IdleL0 => {
            if rng.random_bool(params.beta0()) {
                PuState::IdleL0
            } else {
                PuState::BusyL0
            }
        }
        PuState::IdleL1 => {
            if rng.random_bool(params.beta1()) {
                PuState::IdleL1
            } else {
                PuState::BusyL1
            }
        }
    }
}

/// Streaming mean and standard error over episodes.
#[derive(Debug, Clone, Default)]
struct Accumulator {
    sum: f64,
    sum_sq: f64,
}

impl Accumulator {
    fn push(&mut self, value: f64) {
        self.sum += value;
        self.sum_sq += value * value;
    }

    fn mean(&self, n: u64) -> f64 {
        self.sum / n as f64
    }

    fn standard_error(&self, n: u64) -> f64 {
        if n < 2 {
            return 0.0;
        }
        let n_f = n as f64;
        let variance = ((self.sum_sq - self.sum * self.sum / n_f) / (n_f - 1.0)).max(0.0);
        (variance / n_f).sqrt()
    }
}

/// Seeded Monte Carlo evaluation.
///
/// Every episode draws from its own counter-indexed RNG stream, so episode
/// `i` produces the same trajectory no matter how episodes are scheduled;
/// a fixed `(seed, episodes)` pair is bit-reproducible.
pub fn monte_carlo(
    scenario: &Scenario,
    schedule: &PolicySchedule,
    tree: &SensingPolicyTree,
    episodes: u64,
    seed: u64,
) -> Result<EvaluationReport> {
    check_policy_shape(scenario.num_channels(), scenario.horizon(), schedule, tree)?;
    if episodes < 1 {
        return Err(OsaError::InvalidArgument(
            "need at least one episode".to_string(),
        ));
    }

    let channels = scenario.channels();
    let horizon = scenario.horizon();
    let n = scenario.num_channels();
    let mut su_acc = Accumulator::default();
    let mut pu_acc = vec![Accumulator::default(); n];
    let mut share_acc = vec![Accumulator::default(); n];

    for episode in 0..episodes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(episode);

        // True states start from the Level-0 stationary distribution.
        let mut states: Vec<PuState> = channels
            .iter()
            .map(|params| {
                let (busy, _) = params.stationary_level0();
                if rng.random_bool(busy) {
                    PuState::BusyL0
                } else {
                    PuState::IdleL0
                }
            })
            .collect();

        let mut node = &tree.root;
        let mut su_episode = 0.0;
        let mut pu_episode = vec![0.0; n];
        let mut share_episode = vec![0.0; n];

        for t in 1..=horizon {
            let sensed = node.channel;
            let action = schedule.action(sensed, t);
            let busy = states[sensed].is_busy();
            // Sensor reading: "idle" on a mis-detection or a true idle
            // without false alarm.
            let reads_idle = if busy {
                rng.random_bool(action.point.delta)
            } else {
                !rng.random_bool(action.point.epsilon)
            };
            let access_prob = if reads_idle {
                action.access.when_sensed_idle
            } else {
                action.access.when_sensed_busy
            };
            let accesses = rng.random_bool(access_prob);
            let acked = accesses && !busy;
            if acked {
                su_episode += 1.0;
                share_episode[sensed] += 1.0;
            }
            for (channel, &state) in states.iter().enumerate() {
                let collided = channel == sensed && accesses && state.is_busy();
                if state.is_busy() && !collided {
                    pu_episode[channel] += 1.0;
                }
            }
            // Advance the true chains; only the sensed channel can collide.
            for (channel, state) in states.iter_mut().enumerate() {
                let collided = channel == sensed && accesses && state.is_busy();
                *state = sample_next_state(*state, collided, &channels[channel], &mut rng);
            }
            if t < horizon {
                let observed = if acked { 1 } else { 0 };
                node = match node.children[observed].as_deref() {
                    Some(child) => child,
                    None => {
                        // A branch the solver pruned as (numerically)
                        // unreachable was realized; keep sensing the same
                        // channel for the remainder of the episode.
                        log::debug!("realized a pruned branch at slot {t}");
                        node
                    }
                };
            }
        }

        let horizon_f = horizon as f64;
        su_acc.push(su_episode / horizon_f);
        for channel in 0..n {
            pu_acc[channel].push(pu_episode[channel] / horizon_f);
            share_acc[channel].push(share_episode[channel] / horizon_f);
        }
    }

    let pu_normalized: Vec<f64> = pu_acc.iter().map(|acc| acc.mean(episodes)).collect();
    let su_share: Vec<f64> = share_acc.iter().map(|acc| acc.mean(episodes)).collect();
    let sum_throughput = pu_normalized
        .iter()
        .zip(su_share.iter())
        .map(|(pu, su)| pu + su)
        .collect();
    Ok(EvaluationReport {
        method: EvalMethod::MonteCarlo { episodes, seed },
        su_normalized: su_acc.mean(episodes),
        su_share_per_channel: su_share,
        pu_normalized,
        sum_throughput,
        upper_bound: scenario
            .channels()
            .iter()
            .map(|p| su_upper_bound(p, scenario.zeta()))
            .collect(),
        branch_count: episodes,
        standard_errors: Some(StandardErrors {
            su_normalized: su_acc.standard_error(episodes),
            pu_normalized: pu_acc
                .iter()
                .map(|acc| acc.standard_error(episodes))
                .collect(),
            su_share_per_channel: share_acc
                .iter()
                .map(|acc| acc.standard_error(episodes))
                .collect(),
        }),
    })
}
