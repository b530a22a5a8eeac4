use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kcycle::choi::{preparation, random_state, OutputState};
use kcycle::game::{
    adaptive_basis, adaptive_w3_strategy, evaluate, fixed_order_bound,
    optimize_nonadaptive_control, two_switch_closed_form, w3_adaptive, w3_nonadaptive,
    win_probability, PartyMaps, Preparation, Strategy, Verdict,
};
use kcycle::labels::{PAST_CONTROL, PAST_TARGET};
use kcycle::process::{
    classical_switch, cyclic_switch, dephase_control, quantum_switch, sparse_switch, w3_process,
    Process,
};
use kcycle::tensor::{LabeledOperator, SubsystemLabel};

fn product_state(process: &Process, rng: &mut ChaCha8Rng) -> LabeledOperator {
    process
        .past_labels()
        .into_iter()
        .map(|l| random_state(vec![l], rng).unwrap())
        .reduce(|a, b| a.tensor(&b).unwrap())
        .unwrap()
}

fn random_strategy(process: &Process, rng: &mut ChaCha8Rng) -> Strategy {
    let parties = (0..process.parties())
        .map(|p| PartyMaps::random(p, rng).unwrap())
        .collect();
    let prep = preparation(product_state(process, rng)).unwrap();
    Strategy::new(Preparation::NonAdaptive(prep), parties).unwrap()
}

fn apply(kraus: &[DMatrix<Complex64>], rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    kraus
        .iter()
        .fold(DMatrix::zeros(rho.nrows(), rho.ncols()), |acc, k| {
            acc + k * rho * k.adjoint()
        })
}

/// Two-party classical switch simulated in the Schrödinger picture:
/// with probability `p` the order is A then B, otherwise B then A.
fn kraus_oracle(p: f64, rho: &DMatrix<Complex64>, parties: &[PartyMaps]) -> f64 {
    let mut total = 0.0;
    for x in 0..2u8 {
        for (s, r) in [(0, 1), (1, 0)] {
            let through = apply(&parties[s].sender(x).kraus(), rho);
            let via_sender = apply(&parties[r].receiver(x).kraus(), &through).trace().re;
            let direct = apply(&parties[r].receiver(x).kraus(), rho).trace().re;
            let sender_first = if s == 0 { p } else { 1.0 - p };
            total += sender_first * via_sender + (1.0 - sender_first) * direct;
        }
    }
    total / 4.0
}

#[test]
fn two_switch_matches_kraus_oracle() {
    let process = classical_switch(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..40 {
        let sigma = random_state(vec![SubsystemLabel::qubit(PAST_CONTROL)], &mut rng).unwrap();
        let rho = random_state(vec![SubsystemLabel::qubit(PAST_TARGET)], &mut rng).unwrap();
        let parties: Vec<PartyMaps> = (0..2)
            .map(|p| PartyMaps::random(p, &mut rng).unwrap())
            .collect();
        let strategy = Strategy::new(
            Preparation::NonAdaptive(preparation(sigma.tensor(&rho).unwrap()).unwrap()),
            parties.clone(),
        )
        .unwrap();
        let p = sigma.entry(&[0], &[0]).re;
        let evaluated = win_probability(&process, &strategy).unwrap().p_win;
        let oracle = kraus_oracle(p, &rho.to_dense(), &parties);
        let closed = two_switch_closed_form(p, &rho.to_dense(), &parties).unwrap();
        assert!((evaluated - oracle).abs() < 1e-9, "{evaluated} vs {oracle}");
        assert!((closed - oracle).abs() < 1e-9, "{closed} vs {oracle}");
        assert!(evaluated <= 0.75 + 1e-9);
    }
}

#[test]
fn identical_party_maps_make_control_irrelevant() {
    let process = classical_switch(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let one = PartyMaps::random(0, &mut rng).unwrap();
    // Same Choi matrices for B, relabeled onto B's ports.
    let relabel = |m: &kcycle::choi::ChoiMap| {
        let dense = m.matrix().permute(&["I_A", "O_A"]).unwrap().to_dense();
        let op = LabeledOperator::from_dense(
            vec![SubsystemLabel::qubit("I_B"), SubsystemLabel::qubit("O_B")],
            &dense,
        )
        .unwrap();
        kcycle::choi::ChoiMap::new(
            vec![SubsystemLabel::qubit("I_B")],
            vec![SubsystemLabel::qubit("O_B")],
            op,
        )
        .unwrap()
    };
    let two = PartyMaps::new(
        [relabel(one.sender(0)), relabel(one.sender(1))],
        [relabel(one.receiver(0)), relabel(one.receiver(1))],
        relabel(one.bystander()),
    )
    .unwrap();
    let rho = random_state(vec![SubsystemLabel::qubit(PAST_TARGET)], &mut rng).unwrap();
    let base = Strategy::new(
        Preparation::NonAdaptive(
            preparation(
                LabeledOperator::maximally_mixed(vec![SubsystemLabel::qubit(PAST_CONTROL)])
                    .unwrap()
                    .tensor(&rho)
                    .unwrap(),
            )
            .unwrap(),
        ),
        vec![one, two],
    )
    .unwrap();
    let sweep = optimize_nonadaptive_control(&process, &base, 32, 1).unwrap();
    assert!(sweep.spread() < 1e-12, "spread {}", sweep.spread());
}

#[test]
fn standard_maps_control_sweeps() {
    let mixed = |process: &Process| {
        Strategy::standard(
            process.parties(),
            Preparation::NonAdaptive(
                preparation(LabeledOperator::maximally_mixed(process.past_labels()).unwrap())
                    .unwrap(),
            ),
            OutputState::MaximallyMixed,
        )
        .unwrap()
    };

    let classical = classical_switch(2).unwrap();
    let sweep = optimize_nonadaptive_control(&classical, &mixed(&classical), 64, 5).unwrap();
    assert!(sweep.spread() < 1e-12);
    assert!((sweep.best_p_win - 0.75).abs() < 1e-12);
    assert_eq!(sweep.values.len(), 6 + 1 + 64);

    let quantum = quantum_switch(2).unwrap();
    let sweep = optimize_nonadaptive_control(&quantum, &mixed(&quantum), 64, 5).unwrap();
    assert!(sweep.best_p_win <= 0.75 + 1e-9);

    let w3 = w3_process().unwrap();
    let base = w3_nonadaptive().unwrap();
    let sweep = optimize_nonadaptive_control(&w3, &base, 8, 5).unwrap();
    assert!((sweep.best_p_win - 1.0).abs() < 1e-12);
    assert_eq!(
        sweep.best_state.entry(&[0, 0, 0], &[0, 0, 0]),
        Complex64::ONE
    );
}

#[test]
fn nonadaptive_three_party_classical_switch_within_bound() {
    let process = classical_switch(3).unwrap();
    let bound = fixed_order_bound(3);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut tried = 0;
    for _ in 0..100 {
        let r = win_probability(&process, &random_strategy(&process, &mut rng)).unwrap();
        assert!(r.p_win <= bound + 1e-9, "{}", r.p_win);
        assert_eq!(r.verdict, Verdict::WithinBound);
        tried += 1;
    }
    let base = Strategy::standard(
        3,
        Preparation::NonAdaptive(
            preparation(LabeledOperator::maximally_mixed(process.past_labels()).unwrap()).unwrap(),
        ),
        OutputState::MaximallyMixed,
    )
    .unwrap();
    let sweep = optimize_nonadaptive_control(&process, &base, 64, 10).unwrap();
    tried += sweep.values.len();
    assert!(sweep.best_p_win <= bound + 1e-9);
    assert!(tried >= 200);
}

#[test]
fn adaptive_w3_sender_zero_is_deterministic() {
    let process = w3_process().unwrap();
    let quarter = DMatrix::from_diagonal_element(4, 4, Complex64::new(0.25, 0.0));
    let strategy = w3_adaptive(&quarter).unwrap();
    for x in 0..2u8 {
        let p = evaluate(&process, &strategy, 0, x).unwrap();
        assert!((p[x as usize] - 1.0).abs() < 1e-12);
        assert!(p[1 - x as usize].abs() < 1e-12);
    }
    let prep = adaptive_w3_strategy(0, &quarter).unwrap();
    let h1 = prep.matrix().partial_trace(&["H_0", "H_2"]).unwrap();
    assert_eq!(h1.entry(&[0], &[0]), Complex64::ONE);
}

#[test]
fn three_party_adaptive_classical_switch_wins() {
    // No closed form is used beyond two parties; this is a direct evaluation.
    for k in 3..=4 {
        let process = classical_switch(k).unwrap();
        let r = win_probability(&process, &adaptive_basis(&process).unwrap()).unwrap();
        assert!((r.p_win - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dephasing_the_control_changes_nothing(seed in any::<u64>(), k in 2usize..=3) {
        let quantum = quantum_switch(k).unwrap();
        let dephased = dephase_control(&quantum).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let strategy = random_strategy(&quantum, &mut rng);
        let a = win_probability(&quantum, &strategy).unwrap();
        let b = win_probability(&dephased, &strategy).unwrap();
        prop_assert!((a.p_win - b.p_win).abs() < 1e-10);
        for (key, p) in &a.probabilities {
            prop_assert!((p - b.probabilities[key]).abs() < 1e-10);
        }
    }

    #[test]
    fn outcome_distributions_are_normalized(seed in any::<u64>(), which in 0usize..5) {
        let process = match which {
            0 => classical_switch(2),
            1 => quantum_switch(3),
            2 => cyclic_switch(3),
            3 => sparse_switch(3),
            _ => w3_process(),
        }
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let strategy = random_strategy(&process, &mut rng);
        let r = win_probability(&process, &strategy).unwrap();
        prop_assert!(r.normalization_defect() < 1e-9);
        prop_assert!(r.probabilities.values().all(|&p| (-1e-12..=1.0 + 1e-12).contains(&p)));
        let sum: f64 = (0..process.parties())
            .flat_map(|s| (0..2u8).map(move |x| (s, x)))
            .map(|(s, x)| r.probability(s, x, x))
            .sum();
        prop_assert!((r.p_win - sum / (2 * process.parties()) as f64).abs() < 1e-15);
    }

    #[test]
    fn random_w3_sigma_still_wins(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = random_state(
            vec![SubsystemLabel::qubit("a"), SubsystemLabel::qubit("b")],
            &mut rng,
        )
        .unwrap()
        .to_dense();
        let r = win_probability(&w3_process().unwrap(), &w3_adaptive(&sigma).unwrap()).unwrap();
        prop_assert!((r.p_win - 1.0).abs() < 1e-12);
    }
}

#[test]
fn unnormalized_sigma_is_rejected() {
    let sigma = DMatrix::from_diagonal_element(4, 4, Complex64::new(0.3, 0.0));
    assert!(matches!(
        adaptive_w3_strategy(1, &sigma),
        Err(kcycle::Error::State(_))
    ));
}
