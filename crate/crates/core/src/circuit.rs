//! The sparse quantum switch as a circuit with quantum control.
//!
//! Registers: a control `c` of dimension `k`, the target qubit `t`, and one
//! dummy qubit `D_j` per party. With control `|s>` the circuit lets `s` act on
//! the target, increments the control, lets `s⁺` act on the target, and then
//! `k - 2` times increments the control and lets the party named by it act on
//! its own dummy (swapped into the target slot and back). Every party acts
//! exactly once in every branch.
//!
//! Circuit outputs are matched to the future systems of the process by
//! [`Wiring::standard`]: `t → F_t`, `D_j → F_Dj`, and `c → F_c` with the
//! value shifted by one, since the control ends at `s⁻` in branch `s`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::choi::{preparation, random_cptp_with_env, random_pure_state, ChoiMap};
use crate::error::{Error, Result};
use crate::labels::{
    future_dummy, party_input, party_output, past_dummy, FUTURE_CONTROL, FUTURE_TARGET,
    PAST_CONTROL, PAST_TARGET,
};
use crate::process::sparse_switch;
use crate::tensor::{hermitian_eigen, LabeledOperator, LabeledVector, SubsystemLabel};

pub const CONTROL_REGISTER: &str = "c";
pub const TARGET_REGISTER: &str = "t";

/// Largest number of parties the dense circuit simulator accepts.
pub const MAX_CIRCUIT_PARTIES: usize = 6;

/// Maximal probability gap accepted by [`equivalence_check`].
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-9;

/// Largest `k` accepted by [`equivalence_check`].
pub const MAX_EQUIVALENCE_PARTIES: usize = 4;

pub fn dummy_register(j: usize) -> SubsystemLabel {
    SubsystemLabel::qubit(format!("D_{j}"))
}

/// Labels of the circuit registers in storage order: `c, t, D_0, …, D_{k-1}`.
pub fn register_labels(k: usize) -> Vec<SubsystemLabel> {
    let mut labels = vec![
        SubsystemLabel::new(CONTROL_REGISTER, k).expect("k >= 2"),
        SubsystemLabel::qubit(TARGET_REGISTER),
    ];
    labels.extend((0..k).map(dummy_register));
    labels
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    /// `|c> ↦ |c + 1 mod k>`.
    Increment,
    /// For every control value `c`, swap the target with `D_c`.
    ControlledSwap,
    /// For every control value `c`, party `c` acts on the target.
    ControlledPartyOp,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    k: usize,
    gates: Vec<Gate>,
    party_maps: Vec<ChoiMap>,
}

impl Circuit {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn party_maps(&self) -> &[ChoiMap] {
        &self.party_maps
    }

    /// Number of swap-in/act/swap-out blocks after the activated link.
    pub fn idle_blocks(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| **g == Gate::ControlledSwap)
            .count()
            / 2
    }
}

/// Gate sequence of the sparse-switch circuit for the given qubit party maps.
pub fn build_sqs_circuit(k: usize, party_maps: Vec<ChoiMap>) -> Result<Circuit> {
    if !(2..=MAX_CIRCUIT_PARTIES).contains(&k) {
        return Err(Error::Size {
            what: "circuit parties",
            value: k,
            min: 2,
            max: MAX_CIRCUIT_PARTIES,
        });
    }
    if party_maps.len() != k {
        return Err(Error::Shape(format!(
            "{} party maps for {k} parties",
            party_maps.len()
        )));
    }
    for (j, m) in party_maps.iter().enumerate() {
        if m.input_dim() != 2 || m.output_dim() != 2 {
            return Err(Error::Shape(format!(
                "party {j} maps dimension {} to {}, expected a qubit channel",
                m.input_dim(),
                m.output_dim()
            )));
        }
    }
    let mut gates = vec![
        Gate::ControlledPartyOp,
        Gate::Increment,
        Gate::ControlledPartyOp,
    ];
    for _ in 0..k - 2 {
        gates.extend([
            Gate::Increment,
            Gate::ControlledSwap,
            Gate::ControlledPartyOp,
            Gate::ControlledSwap,
        ]);
    }
    Ok(Circuit {
        k,
        gates,
        party_maps,
    })
}

struct Layout {
    k: usize,
    dummies: usize,
}

impl Layout {
    fn dim(&self) -> usize {
        self.k * 2 * self.dummies
    }

    fn split(&self, idx: usize) -> (usize, usize, usize) {
        let d = idx % self.dummies;
        let rest = idx / self.dummies;
        (rest / 2, rest % 2, d)
    }

    fn join(&self, c: usize, t: usize, d: usize) -> usize {
        (c * 2 + t) * self.dummies + d
    }

    /// Bit of `D_j` inside the dummy index (`D_0` most significant).
    fn dummy_bit(&self, j: usize) -> usize {
        1 << (self.k - 1 - j)
    }
}

fn apply_gate(
    layout: &Layout,
    gate: Gate,
    kraus: &[&DMatrix<Complex64>],
    state: &[Complex64],
) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; state.len()];
    for (idx, &amp) in state.iter().enumerate() {
        if amp == Complex64::ZERO {
            continue;
        }
        let (c, t, d) = layout.split(idx);
        match gate {
            Gate::Increment => out[layout.join((c + 1) % layout.k, t, d)] += amp,
            Gate::ControlledSwap => {
                let bit = layout.dummy_bit(c);
                let dv = usize::from(d & bit != 0);
                let d2 = if t == 1 { d | bit } else { d & !bit };
                out[layout.join(c, dv, d2)] += amp;
            }
            Gate::ControlledPartyOp => {
                let k = kraus[c];
                for t2 in 0..2 {
                    out[layout.join(c, t2, d)] += k[(t2, t)] * amp;
                }
            }
        }
    }
    out
}

/// Runs a pure input through the gates, party `j` applying `kraus[j]`.
fn run_pure(
    circuit: &Circuit,
    kraus: &[&DMatrix<Complex64>],
    input: Vec<Complex64>,
) -> Vec<Complex64> {
    let layout = Layout {
        k: circuit.k,
        dummies: 1 << circuit.k,
    };
    circuit
        .gates
        .iter()
        .fold(input, |state, &g| apply_gate(&layout, g, kraus, &state))
}

/// Output of the pure input `|c, t, D_0 … D_{k-1}>` under fixed Kraus choices.
pub fn run_basis(
    circuit: &Circuit,
    kraus: &[&DMatrix<Complex64>],
    c: usize,
    t: usize,
    dummies: usize,
) -> Vec<Complex64> {
    let layout = Layout {
        k: circuit.k,
        dummies: 1 << circuit.k,
    };
    let mut input = vec![Complex64::ZERO; layout.dim()];
    input[layout.join(c, t, dummies)] = Complex64::ONE;
    run_pure(circuit, kraus, input)
}

/// `(weight, vector)` pairs with `ρ = Σ w |v><v|`.
fn ensemble(rho: &DMatrix<Complex64>, what: &str) -> Result<Vec<(f64, DVector<Complex64>)>> {
    if !rho.is_square() {
        return Err(Error::Shape(format!("{what} is not square")));
    }
    if (rho - rho.adjoint()).camax() > 1e-12 {
        return Err(Error::State(format!("{what} is not Hermitian")));
    }
    let trace = rho.trace();
    if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
        return Err(Error::State(format!("{what} has trace {trace}")));
    }
    let (values, vectors) = hermitian_eigen(rho);
    if values.iter().any(|&v| v < -1e-10) {
        return Err(Error::State(format!("{what} is not positive")));
    }
    Ok(values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 1e-14)
        .map(|(i, &v)| (v, vectors.column(i).into_owned()))
        .collect())
}

/// Tensor product of pure states given as dense vectors, first factor most significant.
fn kron(vectors: &[&DVector<Complex64>]) -> Vec<Complex64> {
    vectors.iter().fold(vec![Complex64::ONE], |acc, v| {
        acc.iter()
            .flat_map(|a| v.iter().map(move |b| a * b))
            .collect()
    })
}

/// Output density operator of the circuit on `c, t, D_0, …` for product inputs.
///
/// Each party's Kraus index is shared by all branches of the control, so the
/// result is `Σ_κ V_κ ρ V_κ†`. For CP maps that are not trace preserving the
/// trace of the output is the probability of the recorded operations.
pub fn run_circuit(
    circuit: &Circuit,
    control: &DMatrix<Complex64>,
    target: &DMatrix<Complex64>,
    dummies: &[DMatrix<Complex64>],
) -> Result<LabeledOperator> {
    let k = circuit.k;
    if control.nrows() != k || target.nrows() != 2 || dummies.len() != k {
        return Err(Error::Shape(format!(
            "circuit on {k} parties needs a {k}-level control, a qubit target and {k} dummy qubits"
        )));
    }
    let mut factors = vec![
        ensemble(control, "control preparation")?,
        ensemble(target, "target preparation")?,
    ];
    for (j, d) in dummies.iter().enumerate() {
        if d.nrows() != 2 {
            return Err(Error::Shape(format!("dummy {j} is not a qubit state")));
        }
        factors.push(ensemble(d, &format!("dummy {j} preparation"))?);
    }
    let kraus: Vec<Vec<DMatrix<Complex64>>> =
        circuit.party_maps.iter().map(ChoiMap::kraus).collect();

    let dim = k * 2 * (1 << k);
    let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
    let mut components = vec![0usize; factors.len()];
    loop {
        let weight: f64 = components
            .iter()
            .zip(&factors)
            .map(|(&i, f)| f[i].0)
            .product();
        let vectors: Vec<&DVector<Complex64>> = components
            .iter()
            .zip(&factors)
            .map(|(&i, f)| &f[i].1)
            .collect();
        let input = kron(&vectors);

        let mut tuple = vec![0usize; k];
        loop {
            let chosen: Vec<&DMatrix<Complex64>> =
                tuple.iter().zip(&kraus).map(|(&i, ks)| &ks[i]).collect();
            let out = DVector::from_vec(run_pure(circuit, &chosen, input.clone()));
            rho += (&out * out.adjoint()).scale(weight);
            if !advance(&mut tuple, |j| kraus[j].len()) {
                break;
            }
        }
        if !advance(&mut components, |j| factors[j].len()) {
            break;
        }
    }
    LabeledOperator::from_dense(register_labels(k), &rho)
}

/// Odometer step over a mixed-radix counter; `false` once it wraps.
fn advance(counter: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for j in (0..counter.len()).rev() {
        counter[j] += 1;
        if counter[j] < radix(j) {
            return true;
        }
        counter[j] = 0;
    }
    false
}

/// Correspondence between circuit registers and future systems of the process.
#[derive(Clone, Debug, PartialEq)]
pub struct Wiring {
    /// `(register, future label)` for the target and the dummies.
    pub pairs: Vec<(String, String)>,
    /// Future control value is `register value + control_offset mod k`.
    pub control_offset: usize,
}

impl Wiring {
    pub fn standard(k: usize) -> Self {
        let mut pairs = vec![(TARGET_REGISTER.to_string(), FUTURE_TARGET.to_string())];
        pairs.extend((0..k).map(|j| {
            (
                dummy_register(j).name().to_string(),
                future_dummy(j).name().to_string(),
            )
        }));
        Self {
            pairs,
            control_offset: 1,
        }
    }

    /// The standard table with the future labels of dummies `a` and `b` exchanged.
    pub fn with_swapped_dummies(k: usize, a: usize, b: usize) -> Self {
        let mut w = Self::standard(k);
        let (ia, ib) = (a + 1, b + 1);
        let fa = w.pairs[ia].1.clone();
        w.pairs[ia].1 = std::mem::replace(&mut w.pairs[ib].1, fa);
        w
    }

    /// Moves an operator on circuit registers onto the future systems.
    pub fn to_future(&self, op: &LabeledOperator) -> Result<LabeledOperator> {
        let labels: Vec<SubsystemLabel> = op
            .labels()
            .iter()
            .map(|l| {
                if l.name() == CONTROL_REGISTER {
                    return SubsystemLabel::new(FUTURE_CONTROL, l.dim());
                }
                self.pairs
                    .iter()
                    .find(|(r, _)| r == l.name())
                    .map(|(_, f)| SubsystemLabel::new(f.clone(), l.dim()))
                    .ok_or_else(|| Error::Label(format!("register `{}` is not wired", l.name())))?
            })
            .collect::<Result<_>>()?;
        let pos = op
            .labels()
            .iter()
            .position(|l| l.name() == CONTROL_REGISTER);
        let shift = |mut idx: Vec<usize>| {
            if let Some(p) = pos {
                idx[p] = (idx[p] + self.control_offset) % op.labels()[p].dim();
            }
            idx
        };
        LabeledOperator::from_entries(
            labels,
            op.entries()
                .iter()
                .map(|((r, c), v)| ((shift(r.clone()), shift(c.clone())), *v)),
        )
    }
}

/// Random density matrix of rank at most `rank`.
fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DMatrix<Complex64> {
    let mut rho = DMatrix::zeros(dim, dim);
    let weights: Vec<f64> = (0..rank).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    for w in weights {
        let v = DVector::from_vec(random_pure_state(dim, rng));
        rho += (&v * v.adjoint()).scale(w / total);
    }
    rho
}

/// Random effect `Σ_r λ_r |e_r><e_r|` with `λ_r ∈ [0, 1)`.
fn random_effect<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<Complex64> {
    let mut e = DMatrix::zeros(dim, dim);
    for _ in 0..2 {
        let lambda: f64 = rng.random();
        let v = DVector::from_vec(random_pure_state(dim, rng));
        e += (&v * v.adjoint()).scale(lambda);
    }
    e
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub k: usize,
    pub trials: usize,
    pub max_deviation: f64,
    pub passed: bool,
}

/// One random instance: preparations, CP party maps and a final effect.
#[derive(Clone, Debug)]
pub struct Instance {
    pub control: DMatrix<Complex64>,
    pub target: DMatrix<Complex64>,
    pub dummies: Vec<DMatrix<Complex64>>,
    pub party_maps: Vec<ChoiMap>,
    pub effect: DMatrix<Complex64>,
}

impl Instance {
    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<Self> {
        // Alternate between a pure superposition and a mixed control.
        let control = if rng.random::<bool>() {
            random_density(k, 1, rng)
        } else {
            random_density(k, 2, rng)
        };
        let target = random_density(2, 2, rng);
        let dummies = (0..k).map(|_| random_density(2, 2, rng)).collect();
        let party_maps = (0..k)
            .map(|j| {
                let factor = 0.5 + 0.5 * rng.random::<f64>();
                random_cptp_with_env(vec![party_input(j)], vec![party_output(j)], 2, rng)?
                    .scaled(factor)
            })
            .collect::<Result<Vec<_>>>()?;
        let effect = random_effect(k * 2 * (1 << k), rng);
        Ok(Self {
            control,
            target,
            dummies,
            party_maps,
            effect,
        })
    }

    pub fn circuit_probability(&self) -> Result<f64> {
        let k = self.dummies.len();
        let circuit = build_sqs_circuit(k, self.party_maps.clone())?;
        let rho = run_circuit(&circuit, &self.control, &self.target, &self.dummies)?;
        Ok((self.effect.clone() * rho.to_dense()).trace().re)
    }

    /// `Tr(W · M_P ⊗ M_A ⊗ … ⊗ M_F)` with `M_F` the transposed effect moved by `wiring`.
    pub fn process_probability(&self, wiring: &Wiring) -> Result<f64> {
        let k = self.dummies.len();
        let process = sparse_switch(k)?;
        let mut state = LabeledOperator::from_dense(
            vec![SubsystemLabel::new(PAST_CONTROL, k)?],
            &self.control,
        )?
        .tensor(&LabeledOperator::from_dense(
            vec![SubsystemLabel::qubit(PAST_TARGET)],
            &self.target,
        )?)?;
        for (j, d) in self.dummies.iter().enumerate() {
            state = state.tensor(&LabeledOperator::from_dense(vec![past_dummy(j)], d)?)?;
        }
        let past = preparation(state)?;
        let effect = LabeledOperator::from_dense(register_labels(k), &self.effect)?;
        let future = wiring.to_future(&effect)?.transpose();
        let mut ops: Vec<&LabeledOperator> = vec![past.matrix()];
        ops.extend(self.party_maps.iter().map(ChoiMap::matrix));
        ops.push(&future);
        process.probability(&ops)
    }
}

/// Compares circuit and process predictions on `trials` random instances.
pub fn equivalence_check(k: usize, trials: usize, seed: u64) -> Result<EquivalenceReport> {
    equivalence_check_with_wiring(k, trials, seed, &Wiring::standard(k))
}

pub fn equivalence_check_with_wiring(
    k: usize,
    trials: usize,
    seed: u64,
    wiring: &Wiring,
) -> Result<EquivalenceReport> {
    if !(2..=MAX_EQUIVALENCE_PARTIES).contains(&k) {
        return Err(Error::Size {
            what: "equivalence check parties",
            value: k,
            min: 2,
            max: MAX_EQUIVALENCE_PARTIES,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_deviation: f64 = 0.0;
    for _ in 0..trials {
        let inst = Instance::random(k, &mut rng)?;
        let gap = (inst.circuit_probability()? - inst.process_probability(wiring)?).abs();
        max_deviation = max_deviation.max(gap);
    }
    Ok(EquivalenceReport {
        k,
        trials,
        max_deviation,
        passed: trials > 0 && max_deviation <= EQUIVALENCE_TOLERANCE,
    })
}

/// `|i><i|` as a dense `dim × dim` matrix.
pub fn basis_density(dim: usize, i: usize) -> DMatrix<Complex64> {
    let v = LabeledVector::basis_vector(
        vec![SubsystemLabel::new("x", dim).expect("nonzero dimension")],
        &[i],
    )
    .expect("index in range");
    v.outer().to_dense()
}
