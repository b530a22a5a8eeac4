//! Scenario files.
//!
//! A config is a TOML document holding an array of `[[scenario]]` tables:
//!
//! ```toml
//! [[scenario]]
//! name = "sparse-3-adaptive"
//! process = "sparse"            # classical | quantum | cyclic | sparse | w3
//! k = 3
//! strategy = "adaptive-basis"   # or "grid-sweep", "w3-adaptive", "w3-nonadaptive",
//!                               # or { nonadaptive = "mixed" | "plus" | "basis:<i>" }
//! checks = ["game", "validity", "circuit"]
//! expect = "violates-fixed-order"
//! seed = 7
//! trials = 20
//! ```
//!
//! Unknown keys are rejected. `strategy` is needed by the `game` and
//! `dephase-equivalence` checks. `seed` and `trials` are needed by the sampled
//! checks (`validity`, `dephase-equivalence`, `circuit`); a grid sweep needs
//! only `seed`.

use std::collections::BTreeSet;
use std::fmt;

use serde::Deserialize;

use kcycle::circuit::MAX_EQUIVALENCE_PARTIES;
use kcycle::game::Verdict;
use kcycle::polytope::{MAX_PLAYERS, MIN_PLAYERS};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub scenario: Vec<ScenarioConfig>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ProcessKind {
    Classical,
    Quantum,
    Cyclic,
    Sparse,
    W3,
}

impl ProcessKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProcessKind::Classical => "classical",
            ProcessKind::Quantum => "quantum",
            ProcessKind::Cyclic => "cyclic",
            ProcessKind::Sparse => "sparse",
            ProcessKind::W3 => "w3",
        }
    }

    fn parties(self) -> (usize, usize) {
        match self {
            ProcessKind::Classical | ProcessKind::Quantum => (2, 5),
            ProcessKind::Cyclic | ProcessKind::Sparse => (2, 6),
            ProcessKind::W3 => (3, 3),
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum StrategySpec {
    AdaptiveBasis,
    /// Fixed control state: `mixed`, `plus` or `basis:<i>`.
    Nonadaptive(String),
    W3Adaptive,
    W3Nonadaptive,
    GridSweep,
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategySpec::AdaptiveBasis => f.write_str("adaptive-basis"),
            StrategySpec::Nonadaptive(c) => write!(f, "nonadaptive({c})"),
            StrategySpec::W3Adaptive => f.write_str("w3-adaptive"),
            StrategySpec::W3Nonadaptive => f.write_str("w3-nonadaptive"),
            StrategySpec::GridSweep => f.write_str("grid-sweep"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControlState {
    Mixed,
    /// Uniform superposition of all control levels.
    Plus,
    Basis(usize),
}

impl ControlState {
    fn parse(spec: &str) -> Option<Self> {
        match spec {
            "mixed" => Some(ControlState::Mixed),
            "plus" => Some(ControlState::Plus),
            _ => spec
                .strip_prefix("basis:")
                .and_then(|i| i.parse().ok())
                .map(ControlState::Basis),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Game,
    Validity,
    DephaseEquivalence,
    Polytope,
    Facet,
    Circuit,
}

impl Check {
    pub fn as_str(self) -> &'static str {
        match self {
            Check::Game => "game",
            Check::Validity => "validity",
            Check::DephaseEquivalence => "dephase-equivalence",
            Check::Polytope => "polytope",
            Check::Facet => "facet",
            Check::Circuit => "circuit",
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    WithinBound,
    ViolatesFixedOrder,
}

impl Expectation {
    pub fn matches(self, verdict: Verdict) -> bool {
        matches!(
            (self, verdict),
            (Expectation::WithinBound, Verdict::WithinBound)
                | (Expectation::ViolatesFixedOrder, Verdict::ViolatesFixedOrder)
        )
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub process: ProcessKind,
    pub k: usize,
    pub strategy: Option<StrategySpec>,
    pub checks: Vec<Check>,
    /// Verdict the `game` check must reach.
    pub expect: Option<Expectation>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
}

/// A scenario that passed validation.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub process: ProcessKind,
    pub k: usize,
    pub strategy: Option<StrategySpec>,
    pub control: Option<ControlState>,
    pub checks: Vec<Check>,
    pub expect: Option<Expectation>,
    pub seed: u64,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Values given on the command line, which replace those in the file.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
}

pub fn parse(text: &str, overrides: Overrides) -> Result<Vec<Scenario>, ConfigError> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| ConfigError {
        field: "config".to_string(),
        message: e.to_string().trim_end().to_string(),
    })?;
    if file.scenario.is_empty() {
        return Err(ConfigError {
            field: "scenario".to_string(),
            message: "no [[scenario]] entries".to_string(),
        });
    }
    let mut names = BTreeSet::new();
    file.scenario
        .into_iter()
        .enumerate()
        .map(|(i, raw)| {
            let s = validate(i, raw, overrides)?;
            if !names.insert(s.name.clone()) {
                return Err(ConfigError {
                    field: format!("scenario[{i}].name"),
                    message: format!("duplicate scenario name `{}`", s.name),
                });
            }
            Ok(s)
        })
        .collect()
}

fn validate(i: usize, raw: ScenarioConfig, overrides: Overrides) -> Result<Scenario, ConfigError> {
    let fail = |field: &str, message: String| ConfigError {
        field: format!("scenario[{i}].{field}"),
        message,
    };
    if raw.name.trim().is_empty() {
        return Err(fail("name", "must not be empty".to_string()));
    }
    let (lo, hi) = raw.process.parties();
    if !(lo..=hi).contains(&raw.k) {
        return Err(fail(
            "k",
            format!(
                "{} outside {lo}..={hi} for process `{}`",
                raw.k,
                raw.process.as_str()
            ),
        ));
    }
    if raw.checks.is_empty() {
        return Err(fail("checks", "at least one check is required".to_string()));
    }
    let checks: BTreeSet<Check> = raw.checks.iter().copied().collect();
    if checks.len() != raw.checks.len() {
        return Err(fail("checks", "a check is listed twice".to_string()));
    }

    let wants_strategy =
        checks.contains(&Check::Game) || checks.contains(&Check::DephaseEquivalence);
    let mut control = None;
    match (&raw.strategy, wants_strategy) {
        (None, true) => {
            return Err(fail(
                "strategy",
                "required by the game and dephase-equivalence checks".to_string(),
            ))
        }
        (Some(s), _) => {
            let is_w3 = raw.process == ProcessKind::W3;
            match s {
                StrategySpec::W3Adaptive | StrategySpec::W3Nonadaptive if !is_w3 => {
                    return Err(fail("strategy", format!("`{s}` needs process `w3`")));
                }
                StrategySpec::Nonadaptive(spec) => {
                    if is_w3 {
                        return Err(fail(
                            "strategy",
                            "`w3` has no control register; use w3-nonadaptive".to_string(),
                        ));
                    }
                    let c = ControlState::parse(spec).ok_or_else(|| {
                        fail(
                            "strategy",
                            format!("control state `{spec}` is not mixed, plus or basis:<i>"),
                        )
                    })?;
                    if let ControlState::Basis(b) = c {
                        if b >= raw.k {
                            return Err(fail(
                                "strategy",
                                format!("basis:{b} needs a control of dimension > {b}"),
                            ));
                        }
                    }
                    control = Some(c);
                }
                _ => {}
            }
        }
        (None, false) => {}
    }
    if raw.expect.is_some() && !checks.contains(&Check::Game) {
        return Err(fail(
            "expect",
            "only meaningful with the game check".to_string(),
        ));
    }
    if checks.contains(&Check::DephaseEquivalence) && raw.process == ProcessKind::W3 {
        return Err(fail(
            "checks",
            "dephase-equivalence needs a process with a control".to_string(),
        ));
    }
    if (checks.contains(&Check::Polytope) || checks.contains(&Check::Facet))
        && !(MIN_PLAYERS..=MAX_PLAYERS).contains(&raw.k)
    {
        return Err(fail(
            "k",
            format!("polytope checks need {MIN_PLAYERS}..={MAX_PLAYERS} players"),
        ));
    }
    if checks.contains(&Check::Circuit) {
        if raw.process != ProcessKind::Sparse {
            return Err(fail(
                "checks",
                "circuit equivalence is defined for process `sparse`".to_string(),
            ));
        }
        if raw.k > MAX_EQUIVALENCE_PARTIES {
            return Err(fail(
                "k",
                format!("circuit equivalence supports k up to {MAX_EQUIVALENCE_PARTIES}"),
            ));
        }
    }

    let sampled = checks.contains(&Check::Validity)
        || checks.contains(&Check::DephaseEquivalence)
        || checks.contains(&Check::Circuit);
    let swept = checks.contains(&Check::Game) && raw.strategy == Some(StrategySpec::GridSweep);
    let seed = overrides.seed.or(raw.seed);
    let trials = overrides.trials.or(raw.trials);
    if (sampled || swept) && seed.is_none() {
        return Err(fail(
            "seed",
            "required by the randomized checks".to_string(),
        ));
    }
    if sampled {
        match trials {
            None => return Err(fail("trials", "required by the sampled checks".to_string())),
            Some(0) => return Err(fail("trials", "must be at least 1".to_string())),
            Some(_) => {}
        }
    }
    Ok(Scenario {
        name: raw.name,
        process: raw.process,
        k: raw.k,
        strategy: raw.strategy,
        control,
        checks: raw.checks,
        expect: raw.expect,
        seed: seed.unwrap_or(0),
        trials: trials.unwrap_or(0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(body: &str) -> Result<Vec<Scenario>, ConfigError> {
        parse(&format!("[[scenario]]\n{body}"), Overrides::default())
    }

    #[test]
    fn parses_every_strategy_form() {
        let s = one("name = \"a\"\nprocess = \"quantum\"\nk = 3\nstrategy = { nonadaptive = \"basis:2\" }\nchecks = [\"game\"]")
            .unwrap();
        assert_eq!(s[0].control, Some(ControlState::Basis(2)));
        let s = one("name = \"a\"\nprocess = \"w3\"\nk = 3\nstrategy = \"w3-adaptive\"\nchecks = [\"game\"]").unwrap();
        assert_eq!(s[0].strategy, Some(StrategySpec::W3Adaptive));
    }

    #[test]
    fn errors_name_the_field() {
        let e = one("name = \"a\"\nprocess = \"sparse\"\nk = 9\nstrategy = \"adaptive-basis\"\nchecks = [\"game\"]")
            .unwrap_err();
        assert_eq!(e.field, "scenario[0].k");
        let e =
            one("name = \"a\"\nprocess = \"sparse\"\nk = 3\nchecks = [\"validity\"]").unwrap_err();
        assert_eq!(e.field, "scenario[0].seed");
        let e = one("name = \"a\"\nprocess = \"sparse\"\nk = 3\nchecks = [\"game\"]").unwrap_err();
        assert_eq!(e.field, "scenario[0].strategy");
        let e = one("name = \"a\"\nprocess = \"sparse\"\nk = 3\nchecks = [\"game\"]\ncolour = 1")
            .unwrap_err();
        assert!(e.message.contains("colour"), "{e}");
    }

    #[test]
    fn overrides_supply_seed_and_trials() {
        let text =
            "[[scenario]]\nname = \"a\"\nprocess = \"sparse\"\nk = 3\nchecks = [\"validity\"]";
        let s = parse(
            text,
            Overrides {
                seed: Some(4),
                trials: Some(2),
            },
        )
        .unwrap();
        assert_eq!((s[0].seed, s[0].trials), (4, 2));
    }
}
