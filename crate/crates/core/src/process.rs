//! Process matrices stored as weighted sums of rank-one terms.
//!
//! `W = Σ_t w_t |v_t><v_t|` with `w_t ≥ 0`, so positivity holds by
//! construction. All terms share the label list of the process, which also
//! records the role of each subsystem (output of the past party `P`, input
//! or output of a playing party, input of the future party `F`).

use std::fmt;

use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::choi::{discard, preparation, random_cptp, random_state, ChoiMap};
use crate::error::{Error, Result};
use crate::labels::{
    future_dummy, party_input, party_name, party_output, past_dummy, successor, FUTURE_CONTROL,
    FUTURE_TARGET, PAST_CONTROL, PAST_TARGET,
};
use crate::tensor::{check_distinct, contract, LabeledOperator, LabeledVector, SubsystemLabel};

/// Deviation from unit total probability tolerated by [`validate_process`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Past,
    Input(usize),
    Output(usize),
    Future,
}

/// An ordering of the playing parties: position `j` holds party `order[j]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &p in &order {
            if p >= order.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Label(format!("{order:?} is not a permutation")));
            }
        }
        Ok(Self(order))
    }

    /// `j ↦ shift + j mod k`.
    pub fn cyclic(k: usize, shift: usize) -> Self {
        Self((0..k).map(|j| (shift + j) % k).collect())
    }

    pub fn order(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &p in &self.0 {
            write!(f, "{}", party_name(p))?;
        }
        Ok(())
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// All `k!` orders used by the classical and quantum switch.
///
/// The `k` cyclic shifts come first (shift `i` at index `i`), followed by the
/// remaining permutations in lexicographic order. With this indexing the
/// control value `s` routes sender `s` directly into its successor.
pub fn switch_permutations(k: usize) -> Vec<Permutation> {
    let mut perms: Vec<Permutation> = (0..k).map(|i| Permutation::cyclic(k, i)).collect();
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        if !perms.iter().any(|p| p.0 == current) {
            perms.push(Permutation(current.clone()));
        }
        if !next_permutation(&mut current) {
            break;
        }
    }
    perms
}

fn wire(a: SubsystemLabel, b: SubsystemLabel) -> LabeledVector {
    LabeledVector::max_entangled(a, b).expect("wires join systems of equal dimension")
}

fn chain(wires: impl IntoIterator<Item = LabeledVector>) -> LabeledVector {
    wires
        .into_iter()
        .reduce(|acc, w| acc.tensor(&w).expect("wires touch distinct systems"))
        .expect("at least one wire")
}

fn target(name: &str) -> SubsystemLabel {
    SubsystemLabel::qubit(name)
}

/// Channels carrying the target through the parties in the order `pi`:
/// `P_t → I_{π(0)}`, `O_{π(j)} → I_{π(j+1)}`, `O_{π(k-1)} → F_t`.
pub fn perm_wire(pi: &Permutation) -> LabeledVector {
    let order = pi.order();
    let mut wires = Vec::with_capacity(order.len() + 1);
    let mut from = target(PAST_TARGET);
    for &p in order {
        wires.push(wire(from, party_input(p)));
        from = party_output(p);
    }
    wires.push(wire(from, target(FUTURE_TARGET)));
    chain(wires)
}

/// A process matrix as a weighted sum of rank-one terms.
#[derive(Clone, Debug, PartialEq)]
pub struct Process {
    name: String,
    parties: usize,
    labels: Vec<(SubsystemLabel, Role)>,
    terms: Vec<(f64, LabeledVector)>,
}

impl Process {
    /// Assembles a process; every term is reordered to match `labels`.
    pub fn new(
        name: impl Into<String>,
        parties: usize,
        labels: Vec<(SubsystemLabel, Role)>,
        terms: Vec<(f64, LabeledVector)>,
    ) -> Result<Self> {
        let plain: Vec<SubsystemLabel> = labels.iter().map(|(l, _)| l.clone()).collect();
        check_distinct(&plain)?;
        for (label, role) in &labels {
            if let Role::Input(p) | Role::Output(p) = role {
                if *p >= parties {
                    return Err(Error::Label(format!(
                        "`{}` assigned to party {p} of {parties}",
                        label.name()
                    )));
                }
            }
        }
        let order: Vec<&str> = plain.iter().map(|l| l.name()).collect();
        let terms = terms
            .into_iter()
            .map(|(w, v)| {
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(Error::State(format!("term weight {w}")));
                }
                let v = v.permute(&order)?;
                if v.labels() != plain.as_slice() {
                    return Err(Error::Shape(format!(
                        "term labels {:?} do not match process labels {:?}",
                        v.labels(),
                        plain
                    )));
                }
                Ok((w, v))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            name: name.into(),
            parties,
            labels,
            terms,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn terms(&self) -> &[(f64, LabeledVector)] {
        &self.terms
    }

    pub fn labels(&self) -> &[(SubsystemLabel, Role)] {
        &self.labels
    }

    pub fn labels_with_role(&self, role: Role) -> Vec<SubsystemLabel> {
        self.labels
            .iter()
            .filter(|(_, r)| *r == role)
            .map(|(l, _)| l.clone())
            .collect()
    }

    pub fn past_labels(&self) -> Vec<SubsystemLabel> {
        self.labels_with_role(Role::Past)
    }

    pub fn future_labels(&self) -> Vec<SubsystemLabel> {
        self.labels_with_role(Role::Future)
    }

    pub fn label(&self, name: &str) -> Option<&SubsystemLabel> {
        self.labels
            .iter()
            .map(|(l, _)| l)
            .find(|l| l.name() == name)
    }

    /// `Σ_t w_t <v_t| (⊗ ops) |v_t>`; the imaginary part is discarded.
    pub fn probability(&self, ops: &[&LabeledOperator]) -> Result<f64> {
        Ok(self.amplitude_sum(ops)?.re)
    }

    /// Like [`Process::probability`] but keeping the complex value.
    pub fn amplitude_sum(&self, ops: &[&LabeledOperator]) -> Result<Complex64> {
        self.terms.iter().try_fold(Complex64::ZERO, |acc, (w, v)| {
            Ok(acc + contract(v, ops)? * *w)
        })
    }

    /// The process matrix as a sparse operator.
    pub fn to_operator(&self) -> LabeledOperator {
        let plain = self.labels.iter().map(|(l, _)| l.clone()).collect();
        let mut acc = LabeledOperator::zeros(plain).expect("labels validated");
        for (w, v) in &self.terms {
            acc = acc
                .add(&v.outer().scale(Complex64::new(*w, 0.0)))
                .expect("same labels");
        }
        acc
    }

    /// Largest entrywise difference between the two process matrices.
    pub fn max_abs_diff(&self, other: &Process) -> Result<f64> {
        self.to_operator().max_abs_diff(&other.to_operator())
    }
}

fn check_range(what: &'static str, k: usize, min: usize, max: usize) -> Result<()> {
    if k < min || k > max {
        return Err(Error::Size {
            what,
            value: k,
            min,
            max,
        });
    }
    Ok(())
}

fn factorial(k: usize) -> usize {
    (1..=k).product()
}

fn switch_roles(k: usize, dummies: bool) -> Vec<(SubsystemLabel, Role)> {
    vec![(target(PAST_TARGET), Role::Past)]
        .into_iter()
        .chain(
            (0..k)
                .filter(|_| dummies)
                .map(|j| (past_dummy(j), Role::Past)),
        )
        .chain((0..k).flat_map(|p| {
            [
                (party_input(p), Role::Input(p)),
                (party_output(p), Role::Output(p)),
            ]
        }))
        .chain([(target(FUTURE_TARGET), Role::Future)])
        .chain(
            (0..k)
                .filter(|_| dummies)
                .map(|j| (future_dummy(j), Role::Future)),
        )
        .collect()
}

fn with_control(
    k: usize,
    control_dim: usize,
    dummies: bool,
) -> (Vec<(SubsystemLabel, Role)>, SubsystemLabel, SubsystemLabel) {
    let pc = SubsystemLabel::new(PAST_CONTROL, control_dim).expect("nonzero control dimension");
    let fc = SubsystemLabel::new(FUTURE_CONTROL, control_dim).expect("nonzero control dimension");
    let mut labels = vec![(pc.clone(), Role::Past)];
    labels.extend(switch_roles(k, dummies));
    labels.push((fc.clone(), Role::Future));
    (labels, pc, fc)
}

/// `|i>_{P_c} ⊗ wires ⊗ |i>_{F_c}`.
fn controlled_branch(
    pc: &SubsystemLabel,
    fc: &SubsystemLabel,
    i: usize,
    wires: &LabeledVector,
) -> LabeledVector {
    let p = LabeledVector::basis_vector(vec![pc.clone()], &[i]).expect("control index in range");
    let f = LabeledVector::basis_vector(vec![fc.clone()], &[i]).expect("control index in range");
    p.tensor(wires)
        .and_then(|v| v.tensor(&f))
        .expect("control labels are distinct from the wires")
}

fn coherent_sum(branches: Vec<LabeledVector>) -> LabeledVector {
    branches
        .into_iter()
        .reduce(|acc, b| acc.add(&b).expect("branches share labels"))
        .expect("at least one branch")
}

/// Classical `k`-switch: an incoherent mixture over all `k!` orders.
pub fn classical_switch(k: usize) -> Result<Process> {
    check_range("classical switch parties", k, 2, 5)?;
    let perms = switch_permutations(k);
    let (labels, pc, fc) = with_control(k, perms.len(), false);
    let terms = perms
        .iter()
        .enumerate()
        .map(|(i, pi)| (1.0, controlled_branch(&pc, &fc, i, &perm_wire(pi))))
        .collect();
    Process::new(format!("classical-switch-{k}"), k, labels, terms)
}

/// Quantum `k`-switch: the coherent superposition over all `k!` orders.
pub fn quantum_switch(k: usize) -> Result<Process> {
    check_range("quantum switch parties", k, 2, 5)?;
    let perms = switch_permutations(k);
    debug_assert_eq!(perms.len(), factorial(k));
    let (labels, pc, fc) = with_control(k, perms.len(), false);
    let order: Vec<String> = labels.iter().map(|(l, _)| l.name().to_string()).collect();
    let order: Vec<&str> = order.iter().map(String::as_str).collect();
    let branches = perms
        .iter()
        .enumerate()
        .map(|(i, pi)| {
            controlled_branch(&pc, &fc, i, &perm_wire(pi))
                .permute(&order)
                .expect("branch has the process labels")
        })
        .collect();
    Process::new(
        format!("quantum-switch-{k}"),
        k,
        labels,
        vec![(1.0, coherent_sum(branches))],
    )
}

/// Cyclic quantum switch: coherent control over the `k` cyclic orders only.
pub fn cyclic_switch(k: usize) -> Result<Process> {
    check_range("cyclic switch parties", k, 2, 6)?;
    let (labels, pc, fc) = with_control(k, k, false);
    let order: Vec<String> = labels.iter().map(|(l, _)| l.name().to_string()).collect();
    let order: Vec<&str> = order.iter().map(String::as_str).collect();
    let branches = (0..k)
        .map(|i| {
            controlled_branch(&pc, &fc, i, &perm_wire(&Permutation::cyclic(k, i)))
                .permute(&order)
                .expect("branch has the process labels")
        })
        .collect();
    Process::new(
        format!("cyclic-switch-{k}"),
        k,
        labels,
        vec![(1.0, coherent_sum(branches))],
    )
}

/// The link `P_t → i → i⁺ → F_t` activated by control value `i`.
pub fn sparse_link(i: usize, k: usize) -> LabeledVector {
    let next = successor(i, k);
    chain([
        wire(target(PAST_TARGET), party_input(i)),
        wire(party_output(i), party_input(next)),
        wire(party_output(next), target(FUTURE_TARGET)),
    ])
}

/// Dummy routing for control value `i`: `D_i` and `D_{i⁺}` bypass their
/// parties, every other party `j` receives `D_j` and returns it to `F`.
pub fn sparse_dummies(i: usize, k: usize) -> LabeledVector {
    let next = successor(i, k);
    let mut wires = vec![
        wire(past_dummy(i), future_dummy(i)),
        wire(past_dummy(next), future_dummy(next)),
    ];
    for j in (0..k).filter(|&j| j != i && j != next) {
        wires.push(wire(past_dummy(j), party_input(j)));
        wires.push(wire(party_output(j), future_dummy(j)));
    }
    chain(wires)
}

/// Sparse quantum switch: control value `i` opens the single link `i → i⁺`.
pub fn sparse_switch(k: usize) -> Result<Process> {
    check_range("sparse switch parties", k, 2, 6)?;
    let (labels, pc, fc) = with_control(k, k, true);
    let order: Vec<String> = labels.iter().map(|(l, _)| l.name().to_string()).collect();
    let order: Vec<&str> = order.iter().map(String::as_str).collect();
    let branches = (0..k)
        .map(|i| {
            let wires = sparse_link(i, k)
                .tensor(&sparse_dummies(i, k))
                .expect("link and dummies are disjoint");
            controlled_branch(&pc, &fc, i, &wires)
                .permute(&order)
                .expect("branch has the process labels")
        })
        .collect();
    Process::new(
        format!("sparse-switch-{k}"),
        k,
        labels,
        vec![(1.0, coherent_sum(branches))],
    )
}

/// Name of the `slot`-th qubit emitted by `P` in the three-party non-causal process.
pub fn w3_past_label(slot: usize) -> SubsystemLabel {
    SubsystemLabel::qubit(format!("H_{slot}"))
}

pub fn w3_future_label(slot: usize) -> SubsystemLabel {
    SubsystemLabel::qubit(format!("F_{slot}"))
}

/// Three-party classical process without causal order.
///
/// Party inputs are `A = i ⊕ (¬m ∧ n)`, `B = j ⊕ (¬n ∧ ℓ)`, `C = k ⊕ (¬ℓ ∧ m)`
/// where `(i, j, k)` come from `P` and `(ℓ, m, n)` are the outputs of A, B, C,
/// which `F` receives as copies.
pub fn w3_process() -> Result<Process> {
    let mut labels: Vec<(SubsystemLabel, Role)> =
        (0..3).map(|s| (w3_past_label(s), Role::Past)).collect();
    for p in 0..3 {
        labels.push((party_input(p), Role::Input(p)));
        labels.push((party_output(p), Role::Output(p)));
    }
    labels.extend((0..3).map(|s| (w3_future_label(s), Role::Future)));
    let plain: Vec<SubsystemLabel> = labels.iter().map(|(l, _)| l.clone()).collect();

    let mut amplitudes = Vec::with_capacity(64);
    for bits in 0..64usize {
        let b = |n: usize| (bits >> n) & 1;
        let (i, j, k, l, m, n) = (b(5), b(4), b(3), b(2), b(1), b(0));
        let not = |x: usize| 1 - x;
        let a_in = i ^ (not(m) & n);
        let b_in = j ^ (not(n) & l);
        let c_in = k ^ (not(l) & m);
        amplitudes.push((
            vec![i, j, k, a_in, l, b_in, m, c_in, n, l, m, n],
            Complex64::ONE,
        ));
    }
    let v = LabeledVector::from_amplitudes(plain, amplitudes)?;
    Process::new("w3", 3, labels, vec![(1.0, v)])
}

/// Removes every term of `W` that is off-diagonal in the control systems.
///
/// Each rank-one term is split by its values on `(P_c, F_c)`, which turns
/// coherent control into the corresponding classically controlled mixture.
pub fn dephase_control(process: &Process) -> Result<Process> {
    for name in [PAST_CONTROL, FUTURE_CONTROL] {
        if process.label(name).is_none() {
            return Err(Error::Label(format!(
                "process `{}` has no control subsystem `{name}`",
                process.name
            )));
        }
    }
    let mut terms = Vec::new();
    for (w, v) in &process.terms {
        for (_, piece) in v.split_by(&[PAST_CONTROL, FUTURE_CONTROL])? {
            terms.push((*w, piece));
        }
    }
    Process::new(
        format!("dephased-{}", process.name),
        process.parties,
        process.labels.clone(),
        terms,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidityReport {
    pub trials: usize,
    /// Largest `|Σ p - 1|` over the trials.
    pub max_deviation: f64,
    /// Smallest term weight; positivity of `W` holds whenever this is `≥ 0`.
    pub min_weight: f64,
    pub passed: bool,
}

/// One CPTP map per role: a state for `P`, a channel per party, discard for `F`.
pub fn random_role_maps<R: rand::Rng + ?Sized>(
    process: &Process,
    rng: &mut R,
) -> Result<Vec<ChoiMap>> {
    let mut maps = vec![preparation(random_state(process.past_labels(), rng)?)?];
    for p in 0..process.parties {
        maps.push(random_cptp(
            process.labels_with_role(Role::Input(p)),
            process.labels_with_role(Role::Output(p)),
            rng,
        )?);
    }
    maps.push(discard(process.future_labels())?);
    Ok(maps)
}

/// Monte Carlo check that `W` assigns total probability one to random CPTP maps.
pub fn validate_process(process: &Process, trials: usize, seed: u64) -> Result<ValidityReport> {
    if trials == 0 {
        return Err(Error::Size {
            what: "validation trials",
            value: 0,
            min: 1,
            max: usize::MAX,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_deviation: f64 = 0.0;
    for _ in 0..trials {
        let maps = random_role_maps(process, &mut rng)?;
        let ops: Vec<&LabeledOperator> = maps.iter().map(ChoiMap::matrix).collect();
        let total = process.amplitude_sum(&ops)?;
        max_deviation = max_deviation.max((total - 1.0).norm());
    }
    let min_weight = process
        .terms
        .iter()
        .map(|(w, _)| *w)
        .fold(f64::INFINITY, f64::min);
    Ok(ValidityReport {
        trials,
        max_deviation,
        min_weight,
        passed: max_deviation <= NORMALIZATION_TOLERANCE && min_weight >= 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm_strings(k: usize) -> Vec<String> {
        switch_permutations(k)
            .iter()
            .map(|p| p.to_string())
            .collect()
    }

    #[test]
    fn permutation_ordering() {
        assert_eq!(perm_strings(2), ["AB", "BA"]);
        assert_eq!(perm_strings(3), ["ABC", "BCA", "CAB", "ACB", "BAC", "CBA"]);
        let four = perm_strings(4);
        assert_eq!(four.len(), 24);
        assert_eq!(&four[..5], ["ABCD", "BCDA", "CDAB", "DABC", "ABDC"]);
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![1, 2]).is_err());
    }

    #[test]
    fn two_party_wire() {
        let v = perm_wire(&Permutation::cyclic(2, 0));
        assert_eq!(v.label_names(), ["P_t", "I_A", "O_A", "I_B", "O_B", "F_t"]);
        assert_eq!(v.len(), 8);
        for bits in 0..8usize {
            let (a, b, c) = ((bits >> 2) & 1, (bits >> 1) & 1, bits & 1);
            assert_eq!(v.amplitude(&[a, a, b, b, c, c]), Complex64::ONE);
        }
    }

    #[test]
    fn three_party_wire_routes_a_to_c() {
        let acb = &switch_permutations(3)[3];
        assert_eq!(acb.to_string(), "ACB");
        let v = perm_wire(acb);
        assert_eq!(
            v.label_names(),
            ["P_t", "I_A", "O_A", "I_C", "O_C", "I_B", "O_B", "F_t"]
        );
        assert_eq!(v.len(), 16);
    }

    #[test]
    fn switch_term_counts() {
        let cs2 = classical_switch(2).unwrap();
        assert_eq!(cs2.terms().len(), 2);
        assert_eq!(cs2.label("P_c").unwrap().dim(), 2);
        let cs3 = classical_switch(3).unwrap();
        assert_eq!(cs3.terms().len(), 6);
        assert_eq!(cs3.label("P_c").unwrap().dim(), 6);

        let qs2 = quantum_switch(2).unwrap();
        assert_eq!(qs2.terms().len(), 1);
        assert_eq!(qs2.terms()[0].1.len(), 16);

        let cq3 = cyclic_switch(3).unwrap();
        assert_eq!(cq3.label("P_c").unwrap().dim(), 3);

        let sq3 = sparse_switch(3).unwrap();
        assert_eq!(sq3.terms()[0].1.len(), 384);
        assert_eq!(sq3.terms()[0].1.labels().len(), 1 + 1 + 3 + 6 + 1 + 3 + 1);
    }

    #[test]
    fn size_guards() {
        assert!(matches!(classical_switch(1), Err(Error::Size { .. })));
        assert!(matches!(classical_switch(6), Err(Error::Size { .. })));
        assert!(matches!(quantum_switch(6), Err(Error::Size { .. })));
        assert!(matches!(cyclic_switch(7), Err(Error::Size { .. })));
        assert!(matches!(sparse_switch(7), Err(Error::Size { .. })));
        assert!(sparse_switch(6).is_ok());
    }

    #[test]
    fn cyclic_and_quantum_switch_coincide_for_two_parties() {
        let q = quantum_switch(2).unwrap();
        let c = cyclic_switch(2).unwrap();
        assert_eq!(q.max_abs_diff(&c).unwrap(), 0.0);
    }

    #[test]
    fn dephasing() {
        let q = quantum_switch(2).unwrap();
        let c = classical_switch(2).unwrap();
        let d = dephase_control(&q).unwrap();
        assert_eq!(d.terms().len(), 2);
        assert_eq!(d.max_abs_diff(&c).unwrap(), 0.0);

        for k in 2..=3 {
            let c = classical_switch(k).unwrap();
            let again = dephase_control(&c).unwrap();
            assert_eq!(again.terms().len(), c.terms().len());
            assert_eq!(again.max_abs_diff(&c).unwrap(), 0.0);
        }
        assert_eq!(
            dephase_control(&cyclic_switch(3).unwrap())
                .unwrap()
                .terms()
                .len(),
            3
        );
        assert!(matches!(
            dephase_control(&w3_process().unwrap()),
            Err(Error::Label(_))
        ));
    }

    #[test]
    fn quantum_switch_is_classical_plus_cross_terms() {
        let q = quantum_switch(2).unwrap().to_operator();
        let c = classical_switch(2).unwrap().to_operator();
        let diff = q.add(&c.scale(-Complex64::ONE)).unwrap();
        // Every surviving entry is off-diagonal in both control systems.
        let pc = 0;
        let fc = diff.labels().len() - 1;
        assert!(!diff.is_empty());
        for (r, col) in diff.entries().keys() {
            assert_ne!(r[pc], col[pc]);
            assert_ne!(r[fc], col[fc]);
        }
    }

    #[test]
    fn w3_amplitudes() {
        let w = w3_process().unwrap();
        let v = &w.terms()[0].1;
        assert_eq!(v.len(), 64);
        // i=j=k=0, ℓ=1, m=0, n=0: A=0, B=0⊕(1∧1)=1, C=0.
        assert_eq!(
            v.amplitude(&[0, 0, 0, 0, 1, 1, 0, 0, 0, 1, 0, 0]),
            Complex64::ONE
        );
        assert_eq!(
            v.amplitude(&[0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0]),
            Complex64::ZERO
        );
    }

    #[test]
    fn mis_weighted_process_fails_validation() {
        let c = classical_switch(2).unwrap();
        let half = Process::new(
            "half",
            2,
            c.labels().to_vec(),
            c.terms()
                .iter()
                .map(|(w, v)| (w * 0.5, v.clone()))
                .collect(),
        )
        .unwrap();
        let report = validate_process(&half, 10, 1).unwrap();
        assert!(!report.passed);
        assert!((report.max_deviation - 0.5).abs() < 1e-9);
    }

    #[test]
    fn validation_passes_for_small_switches() {
        let report = validate_process(&classical_switch(2).unwrap(), 50, 11).unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(report.min_weight, 1.0);
    }

    #[test]
    fn negative_weights_rejected() {
        let c = classical_switch(2).unwrap();
        let err = Process::new(
            "neg",
            2,
            c.labels().to_vec(),
            vec![(-1.0, c.terms()[0].1.clone())],
        );
        assert!(matches!(err, Err(Error::State(_))));
    }
}
