//! The reproducibility suite: ten checks with fixed seeds, each reporting a
//! pass/fail verdict and the numbers behind it.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::choi::{preparation, random_state};
use crate::circuit::{equivalence_check, equivalence_check_with_wiring, Wiring};
use crate::error::Result;
use crate::game::{
    adaptive_basis, control_basis_preparation, evaluate, fixed_order_bound,
    optimize_nonadaptive_control, two_switch_closed_form, w3_adaptive, w3_nonadaptive,
    win_probability, PartyMaps, Preparation, Strategy, DEFAULT_RANDOM_CONTROLS,
};
use crate::labels::{past_dummy, successor, PAST_CONTROL, PAST_TARGET};
use crate::polytope::{facet_check, full_dimensionality, max_causal_win};
use crate::process::{
    classical_switch, cyclic_switch, quantum_switch, sparse_switch, validate_process, w3_process,
    Process,
};
use crate::tensor::{LabeledOperator, SubsystemLabel};

pub const SUITE_SEED: u64 = 20_240_601;

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    /// One line per measured quantity.
    pub details: Vec<String>,
}

impl CriterionOutcome {
    pub fn summary_line(&self) -> String {
        format!(
            "{} [{:>2}] {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title
        )
    }
}

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "fixed-order bound constants"),
    (2, "adaptive strategies win with certainty on every switch"),
    (3, "non-adaptive classical switch stays within 3/4"),
    (4, "control dephasing leaves game statistics unchanged"),
    (5, "built-in processes are normalized"),
    (6, "three-party non-causal process wins with certainty"),
    (7, "causal polytope bound equals the fixed-order bound"),
    (8, "cycle inequality is a facet of the causal polytope"),
    (9, "circuit realization reproduces the sparse switch"),
    (10, "sparse switch isolates non-link parties"),
];

pub fn run(id: u8) -> Result<CriterionOutcome> {
    let title = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map(|(_, t)| *t)
        .unwrap_or("unknown criterion");
    let (passed, details) = match id {
        1 => bound_constants()?,
        2 => adaptive_wins()?,
        3 => classical_ceiling(200)?,
        4 => dephasing_equivalence(20)?,
        5 => validity(50)?,
        6 => w3_wins()?,
        7 => polytope_bound()?,
        8 => facets()?,
        9 => circuit_equivalence(50)?,
        10 => isolation(10)?,
        _ => (false, vec![format!("no criterion {id}")]),
    };
    Ok(CriterionOutcome {
        id,
        title,
        passed,
        details,
    })
}

pub fn run_all() -> Result<Vec<CriterionOutcome>> {
    CRITERIA.iter().map(|(id, _)| run(*id)).collect()
}

type Check = (bool, Vec<String>);

fn bound_constants() -> Result<Check> {
    let mut ok = true;
    let mut details = Vec::new();
    for (k, expected) in [(2, 0.75), (3, 5.0 / 6.0), (4, 0.875)] {
        let process = classical_switch(k)?;
        let reported = win_probability(&process, &adaptive_basis(&process)?)?.bound;
        let hit = reported == expected && fixed_order_bound(k) == expected;
        ok &= hit;
        details.push(format!(
            "k={k}: bound {reported:.6} (expected {expected:.6})"
        ));
    }
    Ok((ok, details))
}

fn all_switches(k: usize) -> Result<Vec<Process>> {
    Ok(vec![
        classical_switch(k)?,
        quantum_switch(k)?,
        cyclic_switch(k)?,
        sparse_switch(k)?,
    ])
}

fn adaptive_wins() -> Result<Check> {
    let mut ok = true;
    let mut details = Vec::new();
    for k in 2..=4 {
        for process in all_switches(k)? {
            let r = win_probability(&process, &adaptive_basis(&process)?)?;
            let gap = (r.p_win - 1.0).abs();
            ok &= gap <= 1e-12;
            details.push(format!(
                "{}: p_win {:.6} (|1 - p_win| = {gap:.1e}), bound {:.6}, {}",
                process.name(),
                r.p_win,
                r.bound,
                r.verdict
            ));
        }
    }
    Ok((ok, details))
}

/// Random `σ ⊗ ρ` with random party maps, plus a control sweep with standard maps.
fn classical_ceiling(random_strategies: usize) -> Result<Check> {
    let process = classical_switch(2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED ^ 3);
    let control_label = SubsystemLabel::qubit(PAST_CONTROL);
    let target_label = SubsystemLabel::qubit(PAST_TARGET);

    let mut max_p = f64::NEG_INFINITY;
    let mut max_gap: f64 = 0.0;
    let mut count = 0;
    for _ in 0..random_strategies {
        let sigma = random_state(vec![control_label.clone()], &mut rng)?;
        let rho = random_state(vec![target_label.clone()], &mut rng)?;
        let parties = vec![
            PartyMaps::random(0, &mut rng)?,
            PartyMaps::random(1, &mut rng)?,
        ];
        let prep = preparation(sigma.tensor(&rho)?)?;
        let strategy = Strategy::new(Preparation::NonAdaptive(prep), parties)?;
        let p_win = win_probability(&process, &strategy)?.p_win;
        let closed = two_switch_closed_form(
            sigma.entry(&[0], &[0]).re,
            &rho.to_dense(),
            strategy.parties(),
        )?;
        max_p = max_p.max(p_win);
        max_gap = max_gap.max((p_win - closed).abs());
        count += 1;
    }

    let rho = LabeledOperator::maximally_mixed(vec![target_label])?;
    let base = Strategy::standard(
        2,
        Preparation::NonAdaptive(preparation(
            LabeledOperator::maximally_mixed(vec![control_label])?.tensor(&rho)?,
        )?),
        Default::default(),
    )?;
    let sweep = optimize_nonadaptive_control(&process, &base, DEFAULT_RANDOM_CONTROLS, SUITE_SEED)?;
    for (value, state) in sweep.values.iter().zip(&sweep.states) {
        let closed =
            two_switch_closed_form(state.entry(&[0], &[0]).re, &rho.to_dense(), base.parties())?;
        max_gap = max_gap.max((value - closed).abs());
    }
    max_p = max_p.max(sweep.best_p_win);
    count += sweep.values.len();

    let ok = max_p <= 0.75 + 1e-9 && max_gap <= 1e-9;
    Ok((
        ok,
        vec![
            format!("{count} non-adaptive strategies, max p_win {max_p:.6} (bound 0.750000)"),
            format!("control sweep spread {:.1e}", sweep.spread()),
            format!("max deviation from the analytic two-party formula {max_gap:.1e}"),
        ],
    ))
}

fn random_product_preparation<R: Rng + ?Sized>(
    process: &Process,
    rng: &mut R,
) -> Result<Preparation> {
    let mut state: Option<LabeledOperator> = None;
    for label in process.past_labels() {
        let factor = random_state(vec![label], rng)?;
        state = Some(match state {
            Some(s) => s.tensor(&factor)?,
            None => factor,
        });
    }
    Ok(Preparation::NonAdaptive(preparation(
        state.expect("processes have past systems"),
    )?))
}

fn dephasing_equivalence(tuples: usize) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED ^ 4);
    let mut max_gap: f64 = 0.0;
    let mut details = Vec::new();
    for k in 2..=3 {
        let quantum = quantum_switch(k)?;
        let classical = classical_switch(k)?;
        let mut gap_k: f64 = 0.0;
        for _ in 0..tuples {
            let parties = (0..k)
                .map(|p| PartyMaps::random(p, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let strategy = Strategy::new(random_product_preparation(&quantum, &mut rng)?, parties)?;
            let q = win_probability(&quantum, &strategy)?;
            let c = win_probability(&classical, &strategy)?;
            for (key, p) in &q.probabilities {
                gap_k = gap_k.max((p - c.probabilities[key]).abs());
            }
        }
        details.push(format!(
            "k={k}: {tuples} random party tuples, max |Δp(a|s,x)| {gap_k:.1e}"
        ));
        max_gap = max_gap.max(gap_k);
    }
    Ok((max_gap <= 1e-10, details))
}

/// Every process family at the sizes used by the other checks.
pub fn builtin_processes() -> Result<Vec<Process>> {
    let mut out = Vec::new();
    for k in 2..=4 {
        out.extend(all_switches(k)?);
    }
    out.push(w3_process()?);
    Ok(out)
}

fn validity(trials: usize) -> Result<Check> {
    let mut ok = true;
    let mut details = Vec::new();
    for (i, process) in builtin_processes()?.iter().enumerate() {
        let r = validate_process(process, trials, SUITE_SEED + i as u64)?;
        ok &= r.passed;
        details.push(format!(
            "{}: {trials} trials, max |Σp - 1| {:.1e}",
            process.name(),
            r.max_deviation
        ));
    }
    Ok((ok, details))
}

fn w3_wins() -> Result<Check> {
    let process = w3_process()?;
    let mut details = Vec::new();
    let mut ok = true;
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED ^ 6);
    let mixed = DMatrix::from_diagonal_element(4, 4, Complex64::new(0.25, 0.0));
    let random = random_state(
        vec![SubsystemLabel::qubit("a"), SubsystemLabel::qubit("b")],
        &mut rng,
    )?
    .to_dense();
    for (name, strategy) in [
        ("adaptive, sigma = 1/4", w3_adaptive(&mixed)?),
        ("adaptive, random sigma", w3_adaptive(&random)?),
        ("non-adaptive |000>", w3_nonadaptive()?),
    ] {
        let r = win_probability(&process, &strategy)?;
        let gap = (r.p_win - 1.0).abs();
        ok &= gap <= 1e-12 && r.bound == 5.0 / 6.0;
        details.push(format!(
            "{name}: p_win {:.6} (|1 - p_win| = {gap:.1e}), causal bound {:.6}",
            r.p_win, r.bound
        ));
    }
    Ok((ok, details))
}

fn polytope_bound() -> Result<Check> {
    let mut ok = true;
    let mut details = Vec::new();
    for n in 2..=5 {
        let max = max_causal_win(n)?;
        ok &= max == fixed_order_bound(n);
        details.push(format!(
            "n={n}: max over causal vertices {max:.6}, 1 - 1/(2n) = {:.6}",
            fixed_order_bound(n)
        ));
    }
    Ok((ok, details))
}

fn facets() -> Result<Check> {
    let mut ok = true;
    let mut details = Vec::new();
    for n in 2..=5 {
        let facet = facet_check(n)?;
        let full = full_dimensionality(n)?;
        ok &= facet.confirmed && full.passed;
        details.push(format!(
            "n={n}: saturating affine rank {} = 2n−1: facet {}; {} saturating vertices with rank {}; full-dimensional rank {} = 2n",
            facet.family_affine_rank,
            if facet.confirmed { "CONFIRMED" } else { "NOT CONFIRMED" },
            facet.saturating_vertices,
            facet.saturating_affine_rank,
            full.affine_rank
        ));
    }
    Ok((ok, details))
}

fn circuit_equivalence(trials: usize) -> Result<Check> {
    let mut ok = true;
    let mut details = Vec::new();
    for k in 2..=4 {
        let r = equivalence_check(k, trials, SUITE_SEED + k as u64)?;
        let tampered = equivalence_check_with_wiring(
            k,
            trials,
            SUITE_SEED + k as u64,
            &Wiring::with_swapped_dummies(k, 0, 1),
        )?;
        ok &= r.passed && tampered.max_deviation > 1e-3;
        details.push(format!(
            "k={k}: {trials} trials, max deviation {:.1e}; swapped dummy wiring deviates by {:.1e}",
            r.max_deviation, tampered.max_deviation
        ));
    }
    Ok((ok, details))
}

/// Adaptive control `|s>` with random target, dummy and party maps; every
/// non-link party is then replaced by fresh random maps.
fn isolation(perturbations: usize) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED ^ 10);
    let mut max_gap: f64 = 0.0;
    let mut details = Vec::new();
    for k in 3..=4 {
        let process = sparse_switch(k)?;
        let mut gap_k: f64 = 0.0;
        for s in 0..k {
            let control = control_basis_preparation(&process, s)?;
            let control_only = control.matrix().partial_trace(
                &process
                    .past_labels()
                    .iter()
                    .filter(|l| l.name() != PAST_CONTROL)
                    .map(SubsystemLabel::name)
                    .collect::<Vec<_>>(),
            )?;
            let mut state = control_only;
            state = state.tensor(&random_state(
                vec![SubsystemLabel::qubit(PAST_TARGET)],
                &mut rng,
            )?)?;
            for j in 0..k {
                state = state.tensor(&random_state(vec![past_dummy(j)], &mut rng)?)?;
            }
            let parties = (0..k)
                .map(|p| PartyMaps::random(p, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let base = Strategy::new(Preparation::NonAdaptive(preparation(state)?), parties)?;
            let reference: Vec<[f64; 2]> = (0..2)
                .map(|x| evaluate(&process, &base, s, x))
                .collect::<Result<_>>()?;
            let link = [s, successor(s, k)];
            for _ in 0..perturbations {
                let mut perturbed = base.clone();
                for j in (0..k).filter(|j| !link.contains(j)) {
                    perturbed = perturbed.with_party(j, PartyMaps::random(j, &mut rng)?);
                }
                for x in 0..2u8 {
                    let p = evaluate(&process, &perturbed, s, x)?;
                    for a in 0..2 {
                        gap_k = gap_k.max((p[a] - reference[x as usize][a]).abs());
                    }
                }
            }
        }
        details.push(format!(
            "k={k}: {perturbations} perturbations per sender, max |Δp(a|s,x)| {gap_k:.1e}"
        ));
        max_gap = max_gap.max(gap_k);
    }
    Ok((max_gap <= 1e-12, details))
}
