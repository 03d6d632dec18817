//! Policy construction shared by the solve, simulate, and reproduce
//! commands.

use osa_core::{
    multi_channel_policy, solve_sccp, LputSchedule, OsaError, PolicySchedule, SccpAction, Scenario,
    SensingPolicyTree,
};

use crate::config::{Constraint, PsiSpec};

/// A policy ready for evaluation: per-channel/slot actions, the sensing
/// rule, and the solver's expected SU value.
pub struct SolvedPolicy {
    pub schedule: PolicySchedule,
    pub tree: SensingPolicyTree,
    pub value: f64,
    pub detail: PolicyDetail,
}

pub enum PolicyDetail {
    Sccp(SccpAction),
    Lput(Vec<LputSchedule>),
}

pub fn solve_policy(
    scenario: &Scenario,
    constraint: Constraint,
    psi: &PsiSpec,
    budget: u64,
) -> Result<SolvedPolicy, OsaError> {
    match constraint {
        Constraint::Sccp => {
            let solution = solve_sccp(scenario, budget)?;
            let schedule = PolicySchedule::from_sccp(
                &solution.action,
                scenario.num_channels(),
                scenario.horizon(),
            );
            Ok(SolvedPolicy {
                schedule,
                tree: solution.tree,
                value: solution.value,
                detail: PolicyDetail::Sccp(solution.action),
            })
        }
        Constraint::Lput => {
            let psi = psi.resolve(scenario.horizon());
            let policy = multi_channel_policy(scenario, &psi, budget)?;
            let schedule = PolicySchedule::from_lput_schedules(&policy.schedules)?;
            Ok(SolvedPolicy {
                schedule,
                tree: policy.tree,
                value: policy.value,
                detail: PolicyDetail::Lput(policy.schedules),
            })
        }
    }
}
