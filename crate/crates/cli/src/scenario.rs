//! Executes validated scenarios and collects their reports.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kcycle::choi::{preparation, random_state, OutputState};
use kcycle::circuit::equivalence_check;
use kcycle::game::{
    adaptive_basis, optimize_nonadaptive_control, verdict, w3_adaptive, w3_nonadaptive,
    win_probability, with_mixed_rest, GameResult, PartyMaps, Preparation, Strategy, Verdict,
    DEFAULT_RANDOM_CONTROLS,
};
use kcycle::labels::PAST_CONTROL;
use kcycle::polytope::{facet_check, full_dimensionality, max_causal_win};
use kcycle::process::{
    classical_switch, cyclic_switch, dephase_control, quantum_switch, sparse_switch,
    validate_process, w3_process, Process, NORMALIZATION_TOLERANCE,
};
use kcycle::tensor::{LabeledOperator, LabeledVector};

use crate::config::{Check, ControlState, ProcessKind, Scenario, StrategySpec};

pub const CSV_HEADER: [&str; 7] = ["scenario", "process", "k", "s", "x", "a", "probability"];

#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub scenario: String,
    pub process: &'static str,
    pub k: usize,
    pub s: usize,
    pub x: u8,
    pub a: u8,
    pub probability: f64,
}

impl CsvRow {
    /// Fields in [`CSV_HEADER`] order. `f64` is written in its shortest
    /// round-trip form, so the file is lossless.
    pub fn record(&self) -> [String; 7] {
        [
            self.scenario.clone(),
            self.process.to_string(),
            self.k.to_string(),
            self.s.to_string(),
            self.x.to_string(),
            self.a.to_string(),
            self.probability.to_string(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub check: Check,
    pub passed: bool,
    pub max_deviation: f64,
    /// Set when the library refused to run the check.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameSummary {
    pub p_win: f64,
    pub bound: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioOutcome {
    pub name: String,
    pub report: Vec<String>,
    pub rows: Vec<CsvRow>,
    pub checks: Vec<CheckOutcome>,
    pub game: Option<GameSummary>,
}

impl ScenarioOutcome {
    pub fn summary_lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                let status = if c.passed { "PASS" } else { "FAIL" };
                match &c.error {
                    Some(e) => format!("{status} {} {}: {e}", self.name, c.check.as_str()),
                    None => format!(
                        "{status} {} {}: max deviation {:.6e}",
                        self.name,
                        c.check.as_str(),
                        c.max_deviation
                    ),
                }
            })
            .collect()
    }
}

/// Runs independent scenarios on separate threads; outcomes keep input order.
pub fn run_all(scenarios: &[Scenario]) -> Vec<ScenarioOutcome> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|s| scope.spawn(move || execute(s)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    })
}

pub fn build_process(kind: ProcessKind, k: usize) -> kcycle::Result<Process> {
    match kind {
        ProcessKind::Classical => classical_switch(k),
        ProcessKind::Quantum => quantum_switch(k),
        ProcessKind::Cyclic => cyclic_switch(k),
        ProcessKind::Sparse => sparse_switch(k),
        ProcessKind::W3 => w3_process(),
    }
}

pub fn execute(scenario: &Scenario) -> ScenarioOutcome {
    let mut out = ScenarioOutcome {
        name: scenario.name.clone(),
        report: vec![format!(
            "scenario {}: process {}, k = {}{}",
            scenario.name,
            scenario.process.as_str(),
            scenario.k,
            scenario
                .strategy
                .as_ref()
                .map(|s| format!(", strategy {s}"))
                .unwrap_or_default()
        )],
        rows: Vec::new(),
        checks: Vec::new(),
        game: None,
    };
    let process = build_process(scenario.process, scenario.k);
    for &check in &scenario.checks {
        let result = process
            .as_ref()
            .map_err(|e| e.clone())
            .and_then(|p| run_check(scenario, p, check, &mut out));
        let outcome = match result {
            Ok((passed, max_deviation)) => CheckOutcome {
                check,
                passed,
                max_deviation,
                error: None,
            },
            Err(e) => CheckOutcome {
                check,
                passed: false,
                max_deviation: f64::NAN,
                error: Some(e.to_string()),
            },
        };
        out.checks.push(outcome);
    }
    out
}

type Measured = (bool, f64);

fn run_check(
    scenario: &Scenario,
    process: &Process,
    check: Check,
    out: &mut ScenarioOutcome,
) -> kcycle::Result<Measured> {
    match check {
        Check::Game => game(scenario, process, out),
        Check::Validity => {
            let r = validate_process(process, scenario.trials, scenario.seed)?;
            out.report.push(format!(
                "  validity over {} trials: max |Σp - 1| = {:.6e}, min weight {:.6}",
                r.trials, r.max_deviation, r.min_weight
            ));
            Ok((r.passed, r.max_deviation))
        }
        Check::DephaseEquivalence => dephasing(scenario, process, out),
        Check::Polytope => {
            let n = scenario.k;
            let causal = max_causal_win(n)?;
            let bound = kcycle::game::fixed_order_bound(n);
            let full = full_dimensionality(n)?;
            out.report.push(format!(
                "  causal polytope n={n}: max win {causal:.6}, fixed-order bound {bound:.6}; affine rank {} = 2n",
                full.affine_rank
            ));
            Ok((causal == bound && full.passed, (causal - bound).abs()))
        }
        Check::Facet => {
            let f = facet_check(scenario.k)?;
            out.report.push(format!(
                "  saturating affine rank {} = 2n−1: facet {}",
                f.family_affine_rank,
                if f.confirmed {
                    "CONFIRMED"
                } else {
                    "NOT CONFIRMED"
                }
            ));
            out.report.push(format!(
                "  {} saturating vertices, affine rank {}",
                f.saturating_vertices, f.saturating_affine_rank
            ));
            let gap = (f.saturating_affine_rank as f64 - (2 * f.n - 1) as f64).abs();
            Ok((f.confirmed, gap))
        }
        Check::Circuit => {
            let r = equivalence_check(scenario.k, scenario.trials, scenario.seed)?;
            out.report.push(format!(
                "  circuit vs process over {} random instances: max |Δp| = {:.6e}",
                r.trials, r.max_deviation
            ));
            Ok((r.passed, r.max_deviation))
        }
    }
}

fn control_operator(process: &Process, control: ControlState) -> kcycle::Result<LabeledOperator> {
    let label = process
        .label(PAST_CONTROL)
        .ok_or_else(|| {
            kcycle::Error::Label(format!("process `{}` has no control", process.name()))
        })?
        .clone();
    let d = label.dim();
    match control {
        ControlState::Mixed => LabeledOperator::maximally_mixed(vec![label]),
        ControlState::Basis(i) => LabeledOperator::projector(vec![label], &[i]),
        ControlState::Plus => {
            let amp = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
            Ok(
                LabeledVector::from_amplitudes(vec![label], (0..d).map(|i| (vec![i], amp)))?
                    .outer(),
            )
        }
    }
}

fn mixed_standard(process: &Process) -> kcycle::Result<Strategy> {
    let state = LabeledOperator::maximally_mixed(process.past_labels())?;
    Strategy::standard(
        process.parties(),
        Preparation::NonAdaptive(preparation(state)?),
        OutputState::MaximallyMixed,
    )
}

/// The configured strategy, or the best state of a control sweep together
/// with a line describing the sweep.
fn strategy(scenario: &Scenario, process: &Process) -> kcycle::Result<(Strategy, Option<String>)> {
    let spec = scenario
        .strategy
        .as_ref()
        .expect("validated configs carry a strategy for game checks");
    let fixed = match spec {
        StrategySpec::AdaptiveBasis => adaptive_basis(process)?,
        StrategySpec::W3Adaptive => w3_adaptive(&DMatrix::from_diagonal_element(
            4,
            4,
            Complex64::new(0.25, 0.0),
        ))?,
        StrategySpec::W3Nonadaptive => w3_nonadaptive()?,
        StrategySpec::Nonadaptive(_) => {
            let control = scenario.control.expect("validated nonadaptive spec");
            let prep = with_mixed_rest(process, control_operator(process, control)?)?;
            mixed_standard(process)?.with_preparation(Preparation::NonAdaptive(prep))?
        }
        StrategySpec::GridSweep => {
            let base = if scenario.process == ProcessKind::W3 {
                w3_nonadaptive()?
            } else {
                mixed_standard(process)?
            };
            let sweep = optimize_nonadaptive_control(
                process,
                &base,
                DEFAULT_RANDOM_CONTROLS,
                scenario.seed,
            )?;
            let line = format!(
                "  max p_win = {:.6} over {} control states (spread {:.6}), verdict {}",
                sweep.best_p_win,
                sweep.values.len(),
                sweep.spread(),
                verdict(sweep.best_p_win, process.parties())
            );
            let prep = with_mixed_rest(process, sweep.best_state)?;
            return Ok((
                base.with_preparation(Preparation::NonAdaptive(prep))?,
                Some(line),
            ));
        }
    };
    Ok((fixed, None))
}

fn game(
    scenario: &Scenario,
    process: &Process,
    out: &mut ScenarioOutcome,
) -> kcycle::Result<Measured> {
    let (strategy, sweep) = strategy(scenario, process)?;
    out.report.extend(sweep);
    let result: GameResult = win_probability(process, &strategy)?;
    for (&(s, x, a), &p) in &result.probabilities {
        out.report.push(format!("  p({a}|s={s},x={x}) = {p:.6}"));
        out.rows.push(CsvRow {
            scenario: scenario.name.clone(),
            process: scenario.process.as_str(),
            k: scenario.k,
            s,
            x,
            a,
            probability: p,
        });
    }
    out.report.push(format!(
        "  p_win = {:.6}, bound {:.6}, verdict {}",
        result.p_win, result.bound, result.verdict
    ));
    let defect = result.normalization_defect();
    let expected = scenario.expect.is_none_or(|e| e.matches(result.verdict));
    if let Some(e) = scenario.expect {
        if !expected {
            out.report
                .push(format!("  expected verdict {e:?} not reached"));
        }
    }
    out.game = Some(GameSummary {
        p_win: result.p_win,
        bound: result.bound,
        verdict: result.verdict,
    });
    Ok((expected && defect <= NORMALIZATION_TOLERANCE, defect))
}

/// Compares every `p(a|s,x)` on the process and on its control-dephased
/// version, for the configured strategy and `trials` random ones.
fn dephasing(
    scenario: &Scenario,
    process: &Process,
    out: &mut ScenarioOutcome,
) -> kcycle::Result<Measured> {
    let dephased = dephase_control(process)?;
    let mut strategies = vec![strategy(scenario, process)?.0];
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    for _ in 0..scenario.trials {
        let parties = (0..process.parties())
            .map(|p| PartyMaps::random(p, &mut rng))
            .collect::<kcycle::Result<Vec<_>>>()?;
        let prep = preparation(random_state(process.past_labels(), &mut rng)?)?;
        strategies.push(Strategy::new(Preparation::NonAdaptive(prep), parties)?);
    }
    let mut max_deviation: f64 = 0.0;
    for s in &strategies {
        let a = win_probability(process, s)?;
        let b = win_probability(&dephased, s)?;
        for (key, p) in &a.probabilities {
            max_deviation = max_deviation.max((p - b.probabilities[key]).abs());
        }
    }
    out.report.push(format!(
        "  dephased control over {} strategies: max |Δp| = {:.6e}",
        strategies.len(),
        max_deviation
    ));
    Ok((max_deviation <= NORMALIZATION_TOLERANCE, max_deviation))
}
