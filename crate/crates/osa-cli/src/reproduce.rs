//! Reproduction targets: the published Q-value table and the throughput
//! figures, emitted as CSV series from the bundled scenario presets.

use std::path::{Path, PathBuf};

use osa_core::{
    exact_report, expected_su_reward, q_value, AccessPair, ActionTriple, BeliefMatrix, BeliefRow,
    ChannelParams, EvaluationReport, OperatingPoint, OsaError, Scenario, DEFAULT_NODE_BUDGET,
};

use crate::config::{self, Constraint, LoadedConfig, PsiSpec};
use crate::output::{fmt_f64, write_csv};
use crate::run::solve_policy;

/// Bundled single-channel benchmark preset.
pub const SINGLE_CHANNEL_PRESET: &str = include_str!("../presets/single_channel.json");
/// Bundled three-channel benchmark preset.
pub const MULTI_CHANNEL_PRESET: &str = include_str!("../presets/multi_channel.json");

/// All recognized reproduction targets.
pub const TARGETS: [&str; 9] = [
    "table1", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11",
];

const SINGLE_ZETAS: [f64; 2] = [0.05, 0.1];
const SINGLE_HORIZONS: std::ops::RangeInclusive<usize> = 1..=8;
const MULTI_HORIZONS: std::ops::RangeInclusive<usize> = 1..=6;

fn preset(text: &str) -> LoadedConfig {
    let document: serde_json::Value = serde_json::from_str(text).expect("bundled preset parses");
    config::validate(&document).expect("bundled preset is valid")
}

pub fn single_channel_config() -> LoadedConfig {
    preset(SINGLE_CHANNEL_PRESET)
}

pub fn multi_channel_config() -> LoadedConfig {
    preset(MULTI_CHANNEL_PRESET)
}

fn zeta_label(zeta: f64) -> String {
    format!("zeta{zeta}")
}

fn evaluate(
    scenario: &Scenario,
    constraint: Constraint,
    psi: &PsiSpec,
) -> Result<(EvaluationReport, f64), OsaError> {
    let solved = solve_policy(scenario, constraint, psi, DEFAULT_NODE_BUDGET)?;
    let report = exact_report(
        scenario,
        &solved.schedule,
        &solved.tree,
        DEFAULT_NODE_BUDGET,
    )?;
    Ok((report, solved.value))
}

/// The three published action rows reproduced with the exact Q recursion
/// under an ideal-sensor final slot.
fn table1_rows() -> Result<Vec<String>, OsaError> {
    let params = ChannelParams::new(0.5, 0.5, 0.9, 0.9)?;
    let belief = BeliefMatrix::from_rows(vec![BeliefRow::initial(&params)])?;
    // Final-slot continuation: unconstrained access with a perfect sensor.
    let unconstrained = ActionTriple::new(
        0,
        OperatingPoint {
            epsilon: 0.0,
            delta: 1.0,
        },
        AccessPair::TRUST_SENSOR,
    );
    let tail = |b: &BeliefMatrix| expected_su_reward(b.row(0), &unconstrained);
    let cases = [
        (1, 0.5, 0.5, 0.0, 0.5),
        (2, 0.5, 0.5, 0.0, 0.6),
        (3, 0.5, 0.1, 0.0, 0.6),
    ];
    let mut rows = Vec::new();
    for (case, epsilon, delta, f0, f1) in cases {
        let action = ActionTriple::new(
            0,
            OperatingPoint { epsilon, delta },
            AccessPair::new(f0, f1)?,
        );
        let q = q_value(&belief, &[params], &action, 1, 2, tail)?;
        rows.push(format!("{case},g,{}", fmt_f64(action.access_prob_idle())));
        rows.push(format!("{case},q_value,{}", fmt_f64(q)));
    }
    Ok(rows)
}

/// Single-channel series over horizons and collision bounds. The callback
/// receives `(report, zeta, benchmark)` and returns the named series values
/// for that point.
fn single_channel_series(
    constraint: Constraint,
    reduce_to_nonreactive: bool,
    mut series_for: impl FnMut(&EvaluationReport, f64, f64) -> Vec<(String, f64)>,
) -> Result<Vec<String>, OsaError> {
    let config = single_channel_config();
    let mut rows = Vec::new();
    for zeta in SINGLE_ZETAS {
        for horizon in SINGLE_HORIZONS {
            let mut channels = config.channels.clone();
            if reduce_to_nonreactive {
                channels = channels
                    .iter()
                    .map(ChannelParams::reduce_to_nonreactive)
                    .collect();
            }
            let scenario = Scenario::new(channels, horizon, zeta, config.sensor)?;
            let benchmark = scenario.benchmarks()[0];
            let (report, _) = evaluate(&scenario, constraint, &config.psi)?;
            for (series, value) in series_for(&report, zeta, benchmark) {
                rows.push(format!("{horizon},{series},{}", fmt_f64(value)));
            }
        }
    }
    Ok(rows)
}

/// Three-channel series over horizons (`zeta = 0.05`).
fn multi_channel_series(
    constraint: Constraint,
    mut series_for: impl FnMut(&EvaluationReport, &[f64]) -> Vec<(String, f64)>,
) -> Result<Vec<String>, OsaError> {
    let config = multi_channel_config();
    let mut rows = Vec::new();
    for horizon in MULTI_HORIZONS {
        let scenario = config.scenario_at(horizon, config.zeta);
        let benchmarks = scenario.benchmarks();
        let (report, _) = evaluate(&scenario, constraint, &config.psi)?;
        for (series, value) in series_for(&report, &benchmarks) {
            rows.push(format!("{horizon},{series},{}", fmt_f64(value)));
        }
    }
    Ok(rows)
}

/// Emits the CSV for one reproduction target; returns the written path.
pub fn reproduce(id: &str, out_dir: &Path) -> Result<Option<PathBuf>, OsaError> {
    let (header, rows) = match id {
        "table1" => ("case,series,value", table1_rows()?),
        "fig4" => {
            // SU normalized throughput under the collision cap: reactive vs
            // non-reactive channel model.
            let mut rows = single_channel_series(Constraint::Sccp, true, |report, zeta, _| {
                vec![(
                    format!("su_sccp_nonreactive_{}", zeta_label(zeta)),
                    report.su_normalized,
                )]
            })?;
            rows.extend(single_channel_series(
                Constraint::Sccp,
                false,
                |report, zeta, _| {
                    vec![(
                        format!("su_sccp_reactive_{}", zeta_label(zeta)),
                        report.su_normalized,
                    )]
                },
            )?);
            ("T,series,value", rows)
        }
        "fig5" => {
            let mut rows =
                single_channel_series(Constraint::Sccp, false, |report, zeta, benchmark| {
                    vec![
                        (
                            format!("pu_sccp_{}", zeta_label(zeta)),
                            report.pu_normalized[0],
                        ),
                        (format!("benchmark_{}", zeta_label(zeta)), benchmark),
                    ]
                })?;
            rows.extend(single_channel_series(
                Constraint::Lput,
                false,
                |report, zeta, _| {
                    vec![(
                        format!("pu_lput_{}", zeta_label(zeta)),
                        report.pu_normalized[0],
                    )]
                },
            )?);
            ("T,series,value", rows)
        }
        "fig6" => {
            let mut rows = single_channel_series(Constraint::Sccp, false, |report, zeta, _| {
                vec![
                    (
                        format!("su_sccp_{}", zeta_label(zeta)),
                        report.su_normalized,
                    ),
                    (
                        format!("upper_bound_{}", zeta_label(zeta)),
                        report.upper_bound[0],
                    ),
                ]
            })?;
            rows.extend(single_channel_series(
                Constraint::Lput,
                false,
                |report, zeta, _| {
                    vec![(
                        format!("su_lput_{}", zeta_label(zeta)),
                        report.su_normalized,
                    )]
                },
            )?);
            ("T,series,value", rows)
        }
        "fig7" => {
            let mut rows = single_channel_series(Constraint::Sccp, false, |report, zeta, _| {
                vec![(
                    format!("sum_sccp_{}", zeta_label(zeta)),
                    report.sum_throughput[0],
                )]
            })?;
            rows.extend(single_channel_series(
                Constraint::Lput,
                false,
                |report, zeta, _| {
                    vec![(
                        format!("sum_lput_{}", zeta_label(zeta)),
                        report.sum_throughput[0],
                    )]
                },
            )?);
            ("T,series,value", rows)
        }
        "fig8" => (
            "T,series,value",
            multi_channel_series(Constraint::Sccp, |report, benchmarks| {
                let mut out = Vec::new();
                for (channel, (pu, benchmark)) in
                    report.pu_normalized.iter().zip(benchmarks).enumerate()
                {
                    out.push((format!("pu_sccp_channel{}", channel + 1), *pu));
                    out.push((format!("benchmark_channel{}", channel + 1), *benchmark));
                }
                out
            })?,
        ),
        "fig9" => (
            "T,series,value",
            multi_channel_series(Constraint::Lput, |report, benchmarks| {
                let mut out = Vec::new();
                for (channel, (pu, benchmark)) in
                    report.pu_normalized.iter().zip(benchmarks).enumerate()
                {
                    out.push((format!("pu_lput_channel{}", channel + 1), *pu));
                    out.push((format!("benchmark_channel{}", channel + 1), *benchmark));
                }
                out
            })?,
        ),
        "fig10" => {
            let mut rows = multi_channel_series(Constraint::Sccp, |report, _| {
                vec![("su_sccp".to_string(), report.su_normalized)]
            })?;
            rows.extend(multi_channel_series(Constraint::Lput, |report, _| {
                vec![("su_lput".to_string(), report.su_normalized)]
            })?);
            ("T,series,value", rows)
        }
        "fig11" => {
            let mut rows = multi_channel_series(Constraint::Sccp, |report, _| {
                (0..3)
                    .map(|channel| {
                        (
                            format!("sum_sccp_channel{}", channel + 1),
                            report.sum_throughput[channel],
                        )
                    })
                    .collect()
            })?;
            rows.extend(multi_channel_series(Constraint::Lput, |report, _| {
                (0..3)
                    .map(|channel| {
                        (
                            format!("sum_lput_channel{}", channel + 1),
                            report.sum_throughput[channel],
                        )
                    })
                    .collect()
            })?);
            ("T,series,value", rows)
        }
        _ => return Ok(None),
    };
    let path = out_dir.join(format!("{id}.csv"));
    write_csv(&path, header, &rows).map_err(|error| {
        OsaError::InvalidArgument(format!("cannot write {}: {error}", path.display()))
    })?;
    Ok(Some(path))
}
