//! Optimal policy under the per-slot conditional collision constraint.
//!
//! The constraint caps the probability that the SU accesses a channel whose
//! PU is busy: `sigma_n(t) <= zeta` on every channel in every slot. A
//! separation principle holds even though the PU reacts to collisions: the
//! sensor operating point and access pair can be fixed once,
//!
//! ```text
//!   delta* = zeta,   epsilon* on the ROC curve at zeta,   f = (0, 1)
//! ```
//!
//! independent of the belief and the slot, after which the channel-selection
//! policy is found by ordinary finite-horizon dynamic programming over the
//! reachable belief tree. The tree has at most `sum_t (2N)^(t-1)` nodes; the
//! solver refuses to expand more than its node budget rather than silently
//! approximating.

use serde::Serialize;

use crate::belief::{AccessPair, ActionTriple, BeliefMatrix, Observation, BRANCH_PRUNE_PROB};
use crate::error::{OsaError, Result};
use crate::pu_model::{ChannelParams, Scenario};
use crate::sensor_roc::{OperatingPoint, RocCurve};

/// Default cap on the number of belief nodes an exact solver may expand.
pub const DEFAULT_NODE_BUDGET: u64 = 5_000_000;

/// Q-values within this of each other count as tied; the lowest channel
/// index wins so solved policies are reproducible.
const TIE_TOL: f64 = 1e-12;

/// The time-invariant, belief-independent sensor/access decision that is
/// optimal under the collision constraint, missing only the channel choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SccpAction {
    pub point: OperatingPoint,
}

impl SccpAction {
    /// Builds the constrained-optimal action for collision bound `zeta`:
    /// mis-detection pinned at `zeta`, false alarm read off the ROC curve,
    /// and the sensor trusted unconditionally.
    pub fn for_constraint(zeta: f64, roc: &impl RocCurve) -> Result<Self> {
        if !(0.0..=1.0).contains(&zeta) {
            return Err(OsaError::InvalidArgument(format!(
                "zeta must lie in [0, 1], got {zeta}"
            )));
        }
        Ok(Self {
            point: roc.operating_point_for(zeta)?,
        })
    }

    /// The full action applied to a concrete channel.
    pub fn on_channel(&self, channel: usize) -> ActionTriple {
        ActionTriple::new(channel, self.point, AccessPair::TRUST_SENSOR)
    }
}

/// Conditional collision probability induced on `channel` by `action`.
pub fn sccp_sigma(action: &ActionTriple, channel: usize) -> f64 {
    action.collision_prob(channel)
}

/// Expected reward from slot `t` through the horizon for taking `action` at
/// `belief`, with the tail supplied by `continuation` (evaluated on the
/// updated belief; ignored in the final slot).
pub fn q_value<F>(
    belief: &BeliefMatrix,
    channels: &[ChannelParams],
    action: &ActionTriple,
    t: usize,
    horizon: usize,
    continuation: F,
) -> Result<f64>
where
    F: Fn(&BeliefMatrix) -> f64,
{
    if t < 1 || t > horizon {
        return Err(OsaError::InvalidArgument(format!(
            "slot {t} outside horizon 1..={horizon}"
        )));
    }
    let row = belief.row(action.channel);
    let mut value = 0.0;
    for obs in Observation::ALL {
        let prob = row.observation_likelihood(action, obs);
        if prob < BRANCH_PRUNE_PROB {
            continue;
        }
        let tail = if t < horizon {
            continuation(&belief.step(channels, action, obs)?)
        } else {
            0.0
        };
        value += prob * (obs.reward() + tail);
    }
    Ok(value)
}

/// One node of a solved sensing policy: the channel to sense at this point
/// of the observation history, with children indexed by the acknowledgment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensingNode {
    pub channel: usize,
    /// `children[k]` continues the policy after observing `k`; pruned
    /// zero-probability branches hold `None`.
    pub children: [Option<Box<SensingNode>>; 2],
}

impl SensingNode {
    fn leaf(channel: usize) -> Self {
        Self {
            channel,
            children: [None, None],
        }
    }

    fn count(&self) -> u64 {
        1 + self
            .children
            .iter()
            .flatten()
            .map(|child| child.count())
            .sum::<u64>()
    }
}

/// A per-slot map from reachable belief nodes to channel choices, stored as
/// a binary tree over observation histories of depth `horizon`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensingPolicyTree {
    pub horizon: usize,
    pub root: SensingNode,
}

impl SensingPolicyTree {
    /// The rule that senses the same channel in every slot on every branch.
    pub fn always(channel: usize, horizon: usize) -> Self {
        fn build(channel: usize, depth: usize) -> SensingNode {
            let mut node = SensingNode::leaf(channel);
            if depth > 1 {
                node.children = [
                    Some(Box::new(build(channel, depth - 1))),
                    Some(Box::new(build(channel, depth - 1))),
                ];
            }
            node
        }
        Self {
            horizon,
            root: build(channel, horizon),
        }
    }

    pub fn node_count(&self) -> u64 {
        self.root.count()
    }
}

/// Result of the exact constrained solve: the maximum expected SU reward
/// over the horizon and the sensing policy attaining it.
#[derive(Debug, Clone, Serialize)]
pub struct SccpSolution {
    /// `V_1`, the total (unnormalized) expected SU reward.
    pub value: f64,
    pub tree: SensingPolicyTree,
    pub action: SccpAction,
}

/// Worst-case node count of the exhaustive belief-tree search:
/// `sum_{t=1}^{T} (2N)^(t-1)`, saturating at `u64::MAX`.
pub fn search_node_bound(num_channels: usize, horizon: usize) -> u64 {
    let branch = (2 * num_channels) as u64;
    let mut total: u64 = 0;
    let mut level: u64 = 1;
    for _ in 0..horizon {
        total = total.saturating_add(level);
        level = level.saturating_mul(branch);
    }
    total
}

fn check_budget(num_channels: usize, horizon: usize, budget: u64) -> Result<()> {
    let required = search_node_bound(num_channels, horizon);
    if required > budget {
        return Err(OsaError::BudgetExceeded { required, budget });
    }
    Ok(())
}

/// Exhaustive finite-horizon DP over reachable beliefs with per-channel,
/// per-slot actions supplied by `action_for(channel, t)`. Shared by the
/// collision-constrained solve and the throughput-constrained sensing step.
pub(crate) fn solve_sensing_tree<F>(
    channels: &[ChannelParams],
    horizon: usize,
    initial: &BeliefMatrix,
    action_for: &F,
    budget: u64,
) -> Result<(f64, SensingPolicyTree)>
where
    F: Fn(usize, usize) -> ActionTriple,
{
    check_budget(channels.len(), horizon, budget)?;

    fn expand<F>(
        channels: &[ChannelParams],
        horizon: usize,
        belief: &BeliefMatrix,
        t: usize,
        action_for: &F,
    ) -> Result<(f64, SensingNode)>
    where
        F: Fn(usize, usize) -> ActionTriple,
    {
        let mut best: Option<(f64, SensingNode)> = None;
        for channel in 0..channels.len() {
            let action = action_for(channel, t);
            debug_assert_eq!(action.channel, channel);
            let row = belief.row(channel);
            let mut value = 0.0;
            let mut node = SensingNode::leaf(channel);
            for obs in Observation::ALL {
                let prob = row.observation_likelihood(&action, obs);
                if prob < BRANCH_PRUNE_PROB {
                    continue;
                }
                if t < horizon {
                    let next = belief.step(channels, &action, obs)?;
                    let (child_value, child) = expand(channels, horizon, &next, t + 1, action_for)?;
                    value += prob * (obs.reward() + child_value);
                    node.children[obs.index()] = Some(Box::new(child));
                } else {
                    value += prob * obs.reward();
                }
            }
            let better = match &best {
                None => true,
                Some((best_value, _)) => value > best_value + TIE_TOL,
            };
            if better {
                best = Some((value, node));
            }
        }
        Ok(best.expect("at least one channel"))
    }

    let (value, root) = expand(channels, horizon, initial, 1, action_for)?;
    Ok((value, SensingPolicyTree { horizon, root }))
}

/// Solves the collision-constrained problem exactly: fixes the separated
/// per-slot action and searches every reachable belief node for the best
/// channel to sense, breaking ties toward the lowest index.
pub fn solve_sccp(scenario: &Scenario, budget: u64) -> Result<SccpSolution> {
    let action = SccpAction::for_constraint(scenario.zeta(), scenario.sensor())?;
    let initial = BeliefMatrix::initial(scenario);
    let (value, tree) = solve_sensing_tree(
        scenario.channels(),
        scenario.horizon(),
        &initial,
        &|channel, _t| action.on_channel(channel),
        budget,
    )?;
    Ok(SccpSolution {
        value,
        tree,
        action,
    })
}
