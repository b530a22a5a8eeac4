//! The k-cycle game: a referee picks a sender `s` and a bit `x`, and the
//! sender's cyclic successor `s⁺` has to output `a = x`.
//!
//! The probability of outcome `a` is `Tr(W · M_P ⊗ M_s(x) ⊗ M_{s⁺}(a) ⊗ M_rest ⊗ M_F)`
//! with `F` discarding everything it receives.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::choi::{
    bystander_map, discard, preparation, random_cptp, random_instrument, random_pure_state,
    receiver_map, sender_map, ChoiMap, OutputState,
};
use crate::error::{Error, Result};
use crate::labels::{party_input, party_output, predecessor, successor, PAST_CONTROL};
use crate::process::{w3_past_label, Process};
use crate::tensor::{LabeledOperator, LabeledVector, SubsystemLabel};

/// Margin above the bound before a result counts as a violation.
pub const VIOLATION_MARGIN: f64 = 1e-9;

/// Default number of seeded Haar-random control states in a sweep.
pub const DEFAULT_RANDOM_CONTROLS: usize = 64;

/// Best winning probability of any fixed-order strategy, `1 - 1/(2k)`.
pub fn fixed_order_bound(k: usize) -> f64 {
    // One division, so 3/4, 5/6 and 7/8 come out as the nearest doubles.
    (2 * k - 1) as f64 / (2 * k) as f64
}

/// What `P` prepares, either once for all rounds or per sender.
#[derive(Clone, Debug, PartialEq)]
pub enum Preparation {
    NonAdaptive(ChoiMap),
    Adaptive(Vec<ChoiMap>),
}

impl Preparation {
    pub fn for_sender(&self, s: usize) -> Option<&ChoiMap> {
        match self {
            Preparation::NonAdaptive(m) => Some(m),
            Preparation::Adaptive(ms) => ms.get(s),
        }
    }

    fn maps(&self) -> Vec<&ChoiMap> {
        match self {
            Preparation::NonAdaptive(m) => vec![m],
            Preparation::Adaptive(ms) => ms.iter().collect(),
        }
    }
}

/// The three roles a single party may be asked to play.
#[derive(Clone, Debug, PartialEq)]
pub struct PartyMaps {
    sender: [ChoiMap; 2],
    receiver: [ChoiMap; 2],
    bystander: ChoiMap,
}

impl PartyMaps {
    /// Senders and bystander must be CPTP and the two receiver maps must sum to a CPTP map.
    pub fn new(sender: [ChoiMap; 2], receiver: [ChoiMap; 2], bystander: ChoiMap) -> Result<Self> {
        for (what, m) in [
            ("sender x=0", &sender[0]),
            ("sender x=1", &sender[1]),
            ("bystander", &bystander),
        ] {
            if !m.is_trace_preserving() {
                return Err(Error::NotTracePreserving(format!(
                    "{what} has defect {:e}",
                    m.trace_preservation_defect()
                )));
            }
        }
        let total = ChoiMap::sum(receiver.iter())?;
        if !total.is_trace_preserving() {
            return Err(Error::NotTracePreserving(format!(
                "receiver outcomes sum with defect {:e}",
                total.trace_preservation_defect()
            )));
        }
        Ok(Self {
            sender,
            receiver,
            bystander,
        })
    }

    /// `|x>` senders, computational-basis receivers and identity bystanders.
    pub fn standard(party: usize, output: OutputState) -> Self {
        Self {
            sender: [sender_map(0, party), sender_map(1, party)],
            receiver: [
                receiver_map(0, party, output),
                receiver_map(1, party, output),
            ],
            bystander: bystander_map(party, output),
        }
    }

    /// Random sender channels, a random two-outcome receiver instrument and a
    /// random bystander channel, all on the qubit ports of `party`.
    pub fn random<R: Rng + ?Sized>(party: usize, rng: &mut R) -> Result<Self> {
        let ports = || (vec![party_input(party)], vec![party_output(party)]);
        let (i, o) = ports();
        let s0 = random_cptp(i, o, rng)?;
        let (i, o) = ports();
        let s1 = random_cptp(i, o, rng)?;
        let (i, o) = ports();
        let mut outcomes = random_instrument(i, o, 2, rng)?;
        let r1 = outcomes.pop().expect("two outcomes");
        let r0 = outcomes.pop().expect("two outcomes");
        let (i, o) = ports();
        let bystander = random_cptp(i, o, rng)?;
        Self::new([s0, s1], [r0, r1], bystander)
    }

    pub fn sender(&self, x: u8) -> &ChoiMap {
        &self.sender[x as usize]
    }

    pub fn receiver(&self, a: u8) -> &ChoiMap {
        &self.receiver[a as usize]
    }

    pub fn bystander(&self) -> &ChoiMap {
        &self.bystander
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Strategy {
    preparation: Preparation,
    parties: Vec<PartyMaps>,
}

impl Strategy {
    pub fn new(preparation: Preparation, parties: Vec<PartyMaps>) -> Result<Self> {
        for m in preparation.maps() {
            if !m.inputs().is_empty() {
                return Err(Error::State(
                    "a preparation of P cannot take inputs".to_string(),
                ));
            }
        }
        if let Preparation::Adaptive(ms) = &preparation {
            if ms.len() != parties.len() {
                return Err(Error::Shape(format!(
                    "{} adaptive preparations for {} parties",
                    ms.len(),
                    parties.len()
                )));
            }
        }
        Ok(Self {
            preparation,
            parties,
        })
    }

    /// Standard maps for every party.
    pub fn standard(k: usize, preparation: Preparation, output: OutputState) -> Result<Self> {
        Self::new(
            preparation,
            (0..k).map(|p| PartyMaps::standard(p, output)).collect(),
        )
    }

    pub fn preparation(&self) -> &Preparation {
        &self.preparation
    }

    pub fn parties(&self) -> &[PartyMaps] {
        &self.parties
    }

    pub fn party(&self, p: usize) -> &PartyMaps {
        &self.parties[p]
    }

    pub fn with_party(mut self, p: usize, maps: PartyMaps) -> Self {
        self.parties[p] = maps;
        self
    }

    pub fn with_preparation(self, preparation: Preparation) -> Result<Self> {
        Self::new(preparation, self.parties)
    }
}

/// `|i><i|` on `label` tensored with `½·1` on the remaining past systems.
fn basis_control_state(process: &Process, label: &SubsystemLabel, i: usize) -> Result<ChoiMap> {
    let control = LabeledOperator::projector(vec![label.clone()], &[i])?;
    with_mixed_rest(process, control)
}

/// Preparation of `control` on its own systems and `1/d` on the rest of `P`.
pub fn with_mixed_rest(process: &Process, control: LabeledOperator) -> Result<ChoiMap> {
    let names: Vec<&str> = control.label_names();
    let rest: Vec<SubsystemLabel> = process
        .past_labels()
        .into_iter()
        .filter(|l| !names.contains(&l.name()))
        .collect();
    let state = if rest.is_empty() {
        control
    } else {
        control.tensor(&LabeledOperator::maximally_mixed(rest)?)?
    };
    preparation(state)
}

/// `M_P(s) = |s><s|_{P_c} ⊗ ½·1` on every other system of `P`.
///
/// Index `s` of the control selects the order starting `s, s⁺, ...` in every
/// switch, so the sender's message travels directly to the receiver.
pub fn control_basis_preparation(process: &Process, s: usize) -> Result<ChoiMap> {
    let label = process
        .label(PAST_CONTROL)
        .ok_or_else(|| Error::Label(format!("process `{}` has no control", process.name())))?
        .clone();
    basis_control_state(process, &label, s)
}

/// `σ_{s,s⁻} ⊗ |0><0|_{s⁺}` for the three-party non-causal process.
///
/// `sigma` is a two-qubit density matrix on (slot `s`, slot `s⁻`).
pub fn adaptive_w3_strategy(s: usize, sigma: &DMatrix<Complex64>) -> Result<ChoiMap> {
    if s >= 3 {
        return Err(Error::Size {
            what: "w3 sender",
            value: s,
            min: 0,
            max: 2,
        });
    }
    let pair = vec![w3_past_label(s), w3_past_label(predecessor(s, 3))];
    let sigma = LabeledOperator::from_dense(pair, sigma)?;
    let zero = LabeledOperator::projector(vec![w3_past_label(successor(s, 3))], &[0])?;
    let state = sigma.tensor(&zero)?.permute(&["H_0", "H_1", "H_2"])?;
    preparation(state)
}

/// Standard maps with `|0>` outputs, adaptive preparation with the given `σ`.
pub fn w3_adaptive(sigma: &DMatrix<Complex64>) -> Result<Strategy> {
    let preps = (0..3)
        .map(|s| adaptive_w3_strategy(s, sigma))
        .collect::<Result<Vec<_>>>()?;
    Strategy::standard(3, Preparation::Adaptive(preps), OutputState::Zero)
}

/// Standard maps with `|0>` outputs and `P` always emitting `|000>`.
pub fn w3_nonadaptive() -> Result<Strategy> {
    let labels: Vec<SubsystemLabel> = (0..3).map(w3_past_label).collect();
    let state = LabeledOperator::projector(labels, &[0, 0, 0])?;
    Strategy::standard(
        3,
        Preparation::NonAdaptive(preparation(state)?),
        OutputState::Zero,
    )
}

/// The adaptive strategy that wins with certainty on the given process.
///
/// Switches get [`control_basis_preparation`]; the three-party non-causal
/// process gets [`adaptive_w3_strategy`] with `σ = ¼·1`.
pub fn adaptive_basis(process: &Process) -> Result<Strategy> {
    let k = process.parties();
    if process.label(PAST_CONTROL).is_some() {
        let preps = (0..k)
            .map(|s| control_basis_preparation(process, s))
            .collect::<Result<Vec<_>>>()?;
        return Strategy::standard(k, Preparation::Adaptive(preps), OutputState::MaximallyMixed);
    }
    if process.label("H_0").is_some() && k == 3 {
        let sigma = DMatrix::from_diagonal_element(4, 4, Complex64::new(0.25, 0.0));
        return w3_adaptive(&sigma);
    }
    Err(Error::Label(format!(
        "no adaptive strategy known for process `{}`",
        process.name()
    )))
}

fn check_strategy(process: &Process, strategy: &Strategy, s: usize) -> Result<usize> {
    let k = process.parties();
    if strategy.parties.len() != k {
        return Err(Error::Shape(format!(
            "strategy for {} parties used on a {k}-party process",
            strategy.parties.len()
        )));
    }
    if s >= k {
        return Err(Error::Size {
            what: "sender",
            value: s,
            min: 0,
            max: k - 1,
        });
    }
    Ok(k)
}

fn outcome_probability(
    process: &Process,
    strategy: &Strategy,
    future: &ChoiMap,
    s: usize,
    x: u8,
    a: u8,
) -> Result<f64> {
    let k = check_strategy(process, strategy, s)?;
    let receiver = successor(s, k);
    let prep = strategy
        .preparation
        .for_sender(s)
        .expect("adaptive preparations checked against party count");
    let mut ops: Vec<&LabeledOperator> = Vec::with_capacity(k + 2);
    ops.push(prep.matrix());
    for (p, maps) in strategy.parties.iter().enumerate() {
        let m = if p == s {
            maps.sender(x)
        } else if p == receiver {
            maps.receiver(a)
        } else {
            maps.bystander()
        };
        ops.push(m.matrix());
    }
    ops.push(future.matrix());
    process.probability(&ops)
}

/// `p(a|s,x)` for `a ∈ {0,1}`, as computed (no renormalization).
pub fn evaluate(process: &Process, strategy: &Strategy, s: usize, x: u8) -> Result<[f64; 2]> {
    assert!(x < 2, "bit value {x}");
    let future = discard(process.future_labels())?;
    Ok([
        outcome_probability(process, strategy, &future, s, x, 0)?,
        outcome_probability(process, strategy, &future, s, x, 1)?,
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    WithinBound,
    ViolatesFixedOrder,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::WithinBound => "within-bound",
            Verdict::ViolatesFixedOrder => "violates-fixed-order",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameResult {
    pub k: usize,
    /// `(s, x, a) → p(a|s,x)`.
    pub probabilities: BTreeMap<(usize, u8, u8), f64>,
    pub p_win: f64,
    pub bound: f64,
    pub verdict: Verdict,
}

impl GameResult {
    pub fn probability(&self, s: usize, x: u8, a: u8) -> f64 {
        self.probabilities[&(s, x, a)]
    }

    /// Largest `|Σ_a p(a|s,x) - 1|`.
    pub fn normalization_defect(&self) -> f64 {
        (0..self.k)
            .flat_map(|s| (0..2).map(move |x| (s, x)))
            .map(|(s, x)| (self.probability(s, x, 0) + self.probability(s, x, 1) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn verdict(p_win: f64, k: usize) -> Verdict {
    if p_win > fixed_order_bound(k) + VIOLATION_MARGIN {
        Verdict::ViolatesFixedOrder
    } else {
        Verdict::WithinBound
    }
}

/// Plays every `(s, x)` with uniform weight and scores the game.
pub fn win_probability(process: &Process, strategy: &Strategy) -> Result<GameResult> {
    let k = process.parties();
    let future = discard(process.future_labels())?;
    let mut probabilities = BTreeMap::new();
    let mut wins = 0.0;
    for s in 0..k {
        for x in 0..2u8 {
            for a in 0..2u8 {
                let p = outcome_probability(process, strategy, &future, s, x, a)?;
                if a == x {
                    wins += p;
                }
                probabilities.insert((s, x, a), p);
            }
        }
    }
    let p_win = wins / (2 * k) as f64;
    Ok(GameResult {
        k,
        probabilities,
        p_win,
        bound: fixed_order_bound(k),
        verdict: verdict(p_win, k),
    })
}

/// Pure states `|a>`, `(|a> ± |b>)/√2`, `(|a> ± i|b>)/√2` for every level pair.
pub fn control_grid(dim: usize) -> Vec<DVector<Complex64>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut states = Vec::new();
    for a in 0..dim {
        let mut v = DVector::zeros(dim);
        v[a] = Complex64::ONE;
        states.push(v);
    }
    for a in 0..dim {
        for b in a + 1..dim {
            for phase in [Complex64::ONE, -Complex64::ONE, Complex64::I, -Complex64::I] {
                let mut v = DVector::zeros(dim);
                v[a] = Complex64::new(h, 0.0);
                v[b] = phase * h;
                states.push(v);
            }
        }
    }
    states
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlSweep {
    pub best_p_win: f64,
    pub best_state: LabeledOperator,
    /// Every state tried, grid first, then the mixed state, then random states.
    pub states: Vec<LabeledOperator>,
    /// Winning probability for each entry of `states`.
    pub values: Vec<f64>,
}

impl ControlSweep {
    pub fn spread(&self) -> f64 {
        let max = self
            .values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let min = self.values.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// Sweeps the control preparation of a non-adaptive strategy.
///
/// The swept register is `P_c`, or all of `P`'s systems when the process has
/// no control. The rest of `P`'s preparation is kept as the reduced state of
/// the base strategy. Tried states: [`control_grid`], the maximally mixed
/// state, and `random_states` Haar-random pure states drawn from `seed`.
pub fn optimize_nonadaptive_control(
    process: &Process,
    base: &Strategy,
    random_states: usize,
    seed: u64,
) -> Result<ControlSweep> {
    let Preparation::NonAdaptive(base_prep) = &base.preparation else {
        return Err(Error::State(
            "control sweep needs a non-adaptive base strategy".to_string(),
        ));
    };
    let swept: Vec<SubsystemLabel> = match process.label(PAST_CONTROL) {
        Some(l) => vec![l.clone()],
        None => process.past_labels(),
    };
    let swept_names: Vec<&str> = swept.iter().map(|l| l.name()).collect();
    let rest = if swept.len() == process.past_labels().len() {
        None
    } else {
        Some(base_prep.matrix().partial_trace(&swept_names)?)
    };
    let dim: usize = swept.iter().map(|l| l.dim()).product();

    let mut candidates: Vec<LabeledOperator> = control_grid(dim)
        .iter()
        .map(|v| Ok(LabeledVector::from_dense(swept.clone(), v)?.outer()))
        .collect::<Result<_>>()?;
    candidates.push(LabeledOperator::maximally_mixed(swept.clone())?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random_states {
        let v = DVector::from_vec(random_pure_state(dim, &mut rng));
        candidates.push(LabeledVector::from_dense(swept.clone(), &v)?.outer());
    }

    let mut values = Vec::with_capacity(candidates.len());
    let mut best: Option<(f64, LabeledOperator)> = None;
    for control in &candidates {
        let state = match &rest {
            Some(r) => control.tensor(r)?,
            None => control.clone(),
        };
        let strategy = Strategy {
            preparation: Preparation::NonAdaptive(preparation(state)?),
            parties: base.parties.clone(),
        };
        let p = win_probability(process, &strategy)?.p_win;
        values.push(p);
        if best.as_ref().is_none_or(|(b, _)| p > *b) {
            best = Some((p, control.clone()));
        }
    }
    let (best_p_win, best_state) = best.expect("grid is never empty");
    Ok(ControlSweep {
        best_p_win,
        best_state,
        states: candidates,
        values,
    })
}

fn dense_choi(m: &ChoiMap) -> Result<DMatrix<Complex64>> {
    let names: Vec<&str> = m.matrix().label_names();
    Ok(m.matrix().permute(&names)?.to_dense())
}

/// Receiver effect `Tr_O R` as a dense matrix on the input.
fn dense_effect(m: &ChoiMap) -> Result<DMatrix<Complex64>> {
    let outs: Vec<&str> = m.outputs().iter().map(SubsystemLabel::name).collect();
    Ok(m.matrix().partial_trace(&outs)?.to_dense())
}

/// Analytic score of the two-party classical switch with a product
/// preparation `σ ⊗ ρ`, where only `p = <0|σ|0>` matters.
///
/// Order `A ≺ B` is taken with probability `p`. The receiver either sees the
/// sender's channel output or, when it acts first, the raw target `ρ`.
pub fn two_switch_closed_form(
    p: f64,
    rho: &DMatrix<Complex64>,
    parties: &[PartyMaps],
) -> Result<f64> {
    if parties.len() != 2 {
        return Err(Error::Shape(format!(
            "{} parties, expected 2",
            parties.len()
        )));
    }
    // Σ ρ[l,i] S[(l,m),(i,j)] E[m,j]: sender channel followed by receiver effect.
    let through = |s: &ChoiMap, r: &ChoiMap| -> Result<Complex64> {
        let sm = dense_choi(s)?;
        let e = dense_effect(r)?;
        let mut acc = Complex64::ZERO;
        for l in 0..2 {
            for i in 0..2 {
                for m in 0..2 {
                    for j in 0..2 {
                        acc += rho[(l, i)] * sm[(l * 2 + m, i * 2 + j)] * e[(m, j)];
                    }
                }
            }
        }
        Ok(acc)
    };
    let direct = |r: &ChoiMap| -> Result<Complex64> {
        let e = dense_effect(r)?;
        Ok((0..2)
            .flat_map(|l| (0..2).map(move |i| (l, i)))
            .map(|(l, i)| rho[(l, i)] * e[(l, i)])
            .sum())
    };
    let (a, b) = (&parties[0], &parties[1]);
    let mut total = Complex64::ZERO;
    for x in 0..2u8 {
        total += through(a.sender(x), b.receiver(x))? * p + direct(b.receiver(x))? * (1.0 - p);
        total += direct(a.receiver(x))? * p + through(b.sender(x), a.receiver(x))? * (1.0 - p);
    }
    Ok(total.re / 4.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{classical_switch, quantum_switch, w3_process};

    #[test]
    fn bounds() {
        assert_eq!(fixed_order_bound(2), 0.75);
        assert_eq!(fixed_order_bound(3), 5.0 / 6.0);
        assert_eq!(fixed_order_bound(4), 0.875);
        assert_eq!(verdict(0.75, 2), Verdict::WithinBound);
        assert_eq!(verdict(0.75 + 2e-9, 2), Verdict::ViolatesFixedOrder);
    }

    #[test]
    fn adaptive_two_switch_sends_deterministically() {
        let cs = classical_switch(2).unwrap();
        let st = adaptive_basis(&cs).unwrap();
        let p = evaluate(&cs, &st, 0, 1).unwrap();
        assert!((p[1] - 1.0).abs() < 1e-12 && p[0].abs() < 1e-12);
        let r = win_probability(&cs, &st).unwrap();
        assert!((r.p_win - 1.0).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::ViolatesFixedOrder);
    }

    #[test]
    fn quantum_switch_plus_state_normalized() {
        let qs = quantum_switch(2).unwrap();
        let plus = LabeledVector::from_amplitudes(
            vec![SubsystemLabel::qubit(PAST_CONTROL)],
            [
                (vec![0], Complex64::new(0.5f64.sqrt(), 0.0)),
                (vec![1], Complex64::new(0.5f64.sqrt(), 0.0)),
            ],
        )
        .unwrap()
        .outer();
        let prep = with_mixed_rest(&qs, plus).unwrap();
        let st =
            Strategy::standard(2, Preparation::NonAdaptive(prep), OutputState::default()).unwrap();
        let r = win_probability(&qs, &st).unwrap();
        assert!(r.normalization_defect() < 1e-12);
        assert!(r.p_win <= 0.75 + 1e-9);
    }

    #[test]
    fn w3_nonadaptive_wins() {
        let w = w3_process().unwrap();
        let st = w3_nonadaptive().unwrap();
        let p = evaluate(&w, &st, 1, 0).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert!((win_probability(&w, &st).unwrap().p_win - 1.0).abs() < 1e-12);
    }

    #[test]
    fn w3_adaptive_rejects_bad_sigma() {
        let sigma = DMatrix::from_diagonal_element(4, 4, Complex64::new(0.5, 0.0));
        assert!(matches!(
            adaptive_w3_strategy(0, &sigma),
            Err(Error::State(_))
        ));
        assert!(matches!(
            adaptive_w3_strategy(3, &DMatrix::identity(4, 4)),
            Err(Error::Size { .. })
        ));
    }

    #[test]
    fn grid_size() {
        assert_eq!(control_grid(2).len(), 2 + 4);
        assert_eq!(control_grid(6).len(), 6 + 15 * 4);
    }

    #[test]
    fn mismatched_strategy_rejected() {
        let cs = classical_switch(3).unwrap();
        let st = adaptive_basis(&classical_switch(2).unwrap()).unwrap();
        assert!(evaluate(&cs, &st, 0, 0).is_err());
    }

    #[test]
    fn party_maps_validation() {
        let std = PartyMaps::standard(0, OutputState::default());
        let half = std.receiver(0).scaled(0.5).unwrap();
        let bad = PartyMaps::new(
            [std.sender(0).clone(), std.sender(1).clone()],
            [half, std.receiver(1).clone()],
            std.bystander().clone(),
        );
        assert!(matches!(bad, Err(Error::NotTracePreserving(_))));
    }
}
