//! Scenario configuration: JSON schema validation with JSON-pointer
//! diagnostics, dB-to-linear power conversion, and construction of the core
//! types.

use osa_core::{ChannelParams, EnergyDetectorParams, Scenario, DEFAULT_NODE_BUDGET};
use serde_json::Value;

/// One schema or model-constraint violation, addressed by JSON pointer.
#[derive(Debug, Clone)]
pub struct Violation {
    pub pointer: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "violation at {}: {}", self.pointer, self.message)
    }
}

/// Which protection constraint the policy must honor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    Sccp,
    Lput,
}

impl Constraint {
    pub fn as_str(&self) -> &'static str {
        match self {
            Constraint::Sccp => "sccp",
            Constraint::Lput => "lput",
        }
    }
}

/// Evaluation method requested by the configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalSpec {
    Exact,
    MonteCarlo { episodes: u64, seed: u64 },
}

/// Per-slot interpolation specification for the long-term constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum PsiSpec {
    Scalar(f64),
    PerSlot(Vec<f64>),
}

impl PsiSpec {
    /// Materializes the per-slot vector for a horizon.
    pub fn resolve(&self, horizon: usize) -> Vec<f64> {
        match self {
            PsiSpec::Scalar(value) => vec![*value; horizon],
            PsiSpec::PerSlot(values) => values.clone(),
        }
    }
}

/// A validated configuration, kept in pieces so callers can re-derive
/// scenarios at other horizons or collision bounds.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub channels: Vec<ChannelParams>,
    pub horizon: usize,
    pub zeta: f64,
    pub constraint: Constraint,
    pub psi: PsiSpec,
    pub sensor: EnergyDetectorParams,
    pub eval: EvalSpec,
    pub node_budget: u64,
}

impl LoadedConfig {
    pub fn scenario(&self) -> Scenario {
        Scenario::new(self.channels.clone(), self.horizon, self.zeta, self.sensor)
            .expect("validated configuration")
    }

    /// Scenario at a different horizon / collision bound (used by the
    /// reproduction presets).
    pub fn scenario_at(&self, horizon: usize, zeta: f64) -> Scenario {
        Scenario::new(self.channels.clone(), horizon, zeta, self.sensor)
            .expect("validated configuration")
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

struct Checker {
    violations: Vec<Violation>,
}

impl Checker {
    fn report(&mut self, pointer: &str, message: impl Into<String>) {
        self.violations.push(Violation {
            pointer: pointer.to_string(),
            message: message.into(),
        });
    }

    fn require<'a>(&mut self, object: &'a Value, key: &str, pointer: &str) -> Option<&'a Value> {
        match object.get(key) {
            Some(value) => Some(value),
            None => {
                self.report(pointer, format!("missing required key \"{key}\""));
                None
            }
        }
    }

    fn number(&mut self, value: &Value, pointer: &str) -> Option<f64> {
        match value.as_f64() {
            Some(number) => Some(number),
            None => {
                self.report(pointer, "expected a number");
                None
            }
        }
    }

    fn probability(&mut self, value: &Value, pointer: &str) -> Option<f64> {
        let number = self.number(value, pointer)?;
        if !(0.0..=1.0).contains(&number) {
            self.report(pointer, format!("{number} is outside [0, 1]"));
            return None;
        }
        Some(number)
    }

    fn positive_integer(&mut self, value: &Value, pointer: &str) -> Option<u64> {
        match value.as_u64() {
            Some(integer) if integer >= 1 => Some(integer),
            _ => {
                self.report(pointer, "expected an integer >= 1");
                None
            }
        }
    }

    fn reject_unknown_keys(&mut self, object: &Value, allowed: &[&str], base: &str) {
        if let Some(map) = object.as_object() {
            for key in map.keys() {
                if !allowed.contains(&key.as_str()) {
                    self.report(&format!("{base}/{key}"), "unknown key");
                }
            }
        }
    }
}

/// Validates a parsed JSON document against the scenario schema and the
/// model constraints, reporting every violation found.
pub fn validate(document: &Value) -> Result<LoadedConfig, Vec<Violation>> {
    let mut check = Checker {
        violations: Vec::new(),
    };

    if !document.is_object() {
        check.report("", "configuration must be a JSON object");
        return Err(check.violations);
    }
    check.reject_unknown_keys(
        document,
        &[
            "channels",
            "horizon",
            "zeta",
            "constraint",
            "psi",
            "sensor",
            "eval",
            "node_budget",
        ],
        "",
    );

    // channels
    let mut channels = Vec::new();
    match check.require(document, "channels", "/channels") {
        Some(Value::Array(items)) if !items.is_empty() => {
            for (index, item) in items.iter().enumerate() {
                let base = format!("/channels/{index}");
                if !item.is_object() {
                    check.report(&base, "expected an object");
                    continue;
                }
                check.reject_unknown_keys(item, &["alpha0", "beta0", "alpha1", "beta1"], &base);
                let field = |check: &mut Checker, name: &str| -> Option<f64> {
                    let pointer = format!("{base}/{name}");
                    let value = check.require(item, name, &pointer)?;
                    check.probability(value, &pointer)
                };
                let alpha0 = field(&mut check, "alpha0");
                let beta0 = field(&mut check, "beta0");
                let alpha1 = field(&mut check, "alpha1");
                let beta1 = field(&mut check, "beta1");
                if let (Some(a0), Some(b0), Some(a1), Some(b1)) = (alpha0, beta0, alpha1, beta1) {
                    if a1 < a0 {
                        check.report(
                            &format!("{base}/alpha1"),
                            format!("alpha1 ({a1}) must be >= alpha0 ({a0})"),
                        );
                    } else if b1 < b0 {
                        check.report(
                            &format!("{base}/beta1"),
                            format!("beta1 ({b1}) must be >= beta0 ({b0})"),
                        );
                    } else {
                        match ChannelParams::new(a0, b0, a1, b1) {
                            Ok(params) => channels.push(params),
                            Err(error) => check.report(&base, error.to_string()),
                        }
                    }
                }
            }
        }
        Some(Value::Array(_)) => check.report("/channels", "needs at least one channel"),
        Some(_) => check.report("/channels", "expected an array"),
        None => {}
    }

    // horizon
    let horizon = check
        .require(document, "horizon", "/horizon")
        .cloned()
        .and_then(|value| check.positive_integer(&value, "/horizon"))
        .map(|value| value as usize);

    // zeta
    let zeta = check
        .require(document, "zeta", "/zeta")
        .cloned()
        .and_then(|value| check.probability(&value, "/zeta"));

    // constraint
    let constraint = match check.require(document, "constraint", "/constraint") {
        Some(Value::String(text)) => match text.as_str() {
            "sccp" => Some(Constraint::Sccp),
            "lput" => Some(Constraint::Lput),
            other => {
                check.report(
                    "/constraint",
                    format!("\"{other}\" is not \"sccp\" or \"lput\""),
                );
                None
            }
        },
        Some(_) => {
            check.report("/constraint", "expected a string");
            None
        }
        None => None,
    };

    // psi (lput only)
    let mut psi = PsiSpec::Scalar(0.8);
    if let Some(value) = document.get("psi") {
        if constraint == Some(Constraint::Sccp) {
            check.report("/psi", "only allowed when constraint is \"lput\"");
        }
        match value {
            Value::Array(items) => {
                let mut entries = Vec::with_capacity(items.len());
                for (index, item) in items.iter().enumerate() {
                    if let Some(entry) = check.probability(item, &format!("/psi/{index}")) {
                        entries.push(entry);
                    }
                }
                if let Some(h) = horizon {
                    if items.len() != h {
                        check.report(
                            "/psi",
                            format!("has {} entries but the horizon is {h}", items.len()),
                        );
                    }
                }
                psi = PsiSpec::PerSlot(entries);
            }
            scalar => {
                if let Some(entry) = check.probability(scalar, "/psi") {
                    psi = PsiSpec::Scalar(entry);
                }
            }
        }
    }

    // sensor
    let mut sensor = None;
    match check.require(document, "sensor", "/sensor") {
        Some(object) if object.is_object() => {
            check.reject_unknown_keys(
                object,
                &["m_samples", "noise_power_db", "signal_power_db"],
                "/sensor",
            );
            let m_samples = check
                .require(object, "m_samples", "/sensor/m_samples")
                .cloned()
                .and_then(|value| check.positive_integer(&value, "/sensor/m_samples"));
            let noise_db = check
                .require(object, "noise_power_db", "/sensor/noise_power_db")
                .cloned()
                .and_then(|value| check.number(&value, "/sensor/noise_power_db"));
            let signal_db = check
                .require(object, "signal_power_db", "/sensor/signal_power_db")
                .cloned()
                .and_then(|value| check.number(&value, "/sensor/signal_power_db"));
            if let (Some(m), Some(noise), Some(signal)) = (m_samples, noise_db, signal_db) {
                match EnergyDetectorParams::new(m as u32, db_to_linear(noise), db_to_linear(signal))
                {
                    Ok(detector) => sensor = Some(detector),
                    Err(error) => check.report("/sensor", error.to_string()),
                }
            }
        }
        Some(_) => check.report("/sensor", "expected an object"),
        None => {}
    }

    // eval
    let mut eval = EvalSpec::Exact;
    if let Some(object) = document.get("eval") {
        if !object.is_object() {
            check.report("/eval", "expected an object");
        } else {
            check.reject_unknown_keys(object, &["method", "episodes", "seed"], "/eval");
            match check.require(object, "method", "/eval/method") {
                Some(Value::String(text)) => match text.as_str() {
                    "exact" => {}
                    "mc" => {
                        let episodes = check
                            .require(object, "episodes", "/eval/episodes")
                            .cloned()
                            .and_then(|value| check.positive_integer(&value, "/eval/episodes"));
                        let seed = match object.get("seed") {
                            Some(value) => value.as_u64().or_else(|| {
                                check.report("/eval/seed", "expected a nonnegative integer");
                                None
                            }),
                            None => Some(0),
                        };
                        if let (Some(episodes), Some(seed)) = (episodes, seed) {
                            eval = EvalSpec::MonteCarlo { episodes, seed };
                        }
                    }
                    other => check.report(
                        "/eval/method",
                        format!("\"{other}\" is not \"exact\" or \"mc\""),
                    ),
                },
                Some(_) => check.report("/eval/method", "expected a string"),
                None => {}
            }
        }
    }

    // node_budget
    let mut node_budget = DEFAULT_NODE_BUDGET;
    if let Some(value) = document.get("node_budget") {
        if let Some(budget) = check.positive_integer(value, "/node_budget") {
            node_budget = budget;
        }
    }

    if !check.violations.is_empty() {
        return Err(check.violations);
    }
    Ok(LoadedConfig {
        channels,
        horizon: horizon.expect("validated"),
        zeta: zeta.expect("validated"),
        constraint: constraint.expect("validated"),
        psi,
        sensor: sensor.expect("validated"),
        eval,
        node_budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_document() -> Value {
        serde_json::json!({
            "channels": [{"alpha0": 0.1, "beta0": 0.2, "alpha1": 0.9, "beta1": 0.95}],
            "horizon": 5,
            "zeta": 0.05,
            "constraint": "lput",
            "psi": 0.8,
            "sensor": {"m_samples": 30, "noise_power_db": 0.0, "signal_power_db": 5.0}
        })
    }

    #[test]
    fn accepts_the_benchmark_document() {
        let config = validate(&base_document()).unwrap();
        assert_eq!(config.horizon, 5);
        assert_eq!(config.constraint, Constraint::Lput);
        assert_eq!(config.node_budget, DEFAULT_NODE_BUDGET);
        assert!((config.sensor.noise_power() - 1.0).abs() < 1e-12);
        assert!((config.sensor.signal_power() - 3.1622776601683795).abs() < 1e-12);
        assert_eq!(config.psi.resolve(3), vec![0.8; 3]);
    }

    #[test]
    fn reports_reversed_reaction_ordering_with_pointer() {
        let mut document = base_document();
        document["channels"][0]["alpha1"] = serde_json::json!(0.05);
        let violations = validate(&document).unwrap_err();
        assert!(violations
            .iter()
            .any(|violation| violation.pointer == "/channels/0/alpha1"));
    }

    #[test]
    fn reports_missing_horizon() {
        let mut document = base_document();
        document.as_object_mut().unwrap().remove("horizon");
        let violations = validate(&document).unwrap_err();
        assert!(violations.iter().any(|v| v.pointer == "/horizon"));
    }

    #[test]
    fn rejects_psi_under_sccp_and_bad_lengths() {
        let mut document = base_document();
        document["constraint"] = serde_json::json!("sccp");
        let violations = validate(&document).unwrap_err();
        assert!(violations.iter().any(|v| v.pointer == "/psi"));

        let mut document = base_document();
        document["psi"] = serde_json::json!([0.2, 0.4]);
        let violations = validate(&document).unwrap_err();
        assert!(violations.iter().any(|v| v.pointer == "/psi"));
    }

    #[test]
    fn rejects_unknown_keys() {
        let mut document = base_document();
        document["extra"] = serde_json::json!(1);
        let violations = validate(&document).unwrap_err();
        assert!(violations.iter().any(|v| v.pointer == "/extra"));
    }

    #[test]
    fn collects_multiple_violations_at_once() {
        let mut document = base_document();
        document["zeta"] = serde_json::json!(2.0);
        document["channels"][0]["beta1"] = serde_json::json!(0.1);
        let violations = validate(&document).unwrap_err();
        assert!(violations.len() >= 2);
    }

    #[test]
    fn monte_carlo_eval_spec() {
        let mut document = base_document();
        document["eval"] = serde_json::json!({"method": "mc", "episodes": 1000, "seed": 7});
        let config = validate(&document).unwrap();
        assert_eq!(
            config.eval,
            EvalSpec::MonteCarlo {
                episodes: 1000,
                seed: 7
            }
        );
    }
}
