//! Choi matrices of completely positive maps and the standard party operations.
//!
//! For a map `M: L(H_I) -> L(H_O)` the Choi matrix is
//! `Σ_ij |i><j|_I ⊗ M(|i><j|)_O`, stored with the input subsystems first.
//! The map is trace preserving iff tracing out the outputs leaves `1_I`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::labels::{party_input, party_output};
use crate::tensor::{check_distinct, hermitian_eigen, total_dim, LabeledOperator, SubsystemLabel};

/// Entrywise tolerance on `M - M†`.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
/// Smallest admissible eigenvalue of a Choi matrix.
pub const POSITIVITY_TOLERANCE: f64 = -1e-10;
/// Entrywise tolerance on `Tr_O M - 1_I`.
pub const TRACE_PRESERVING_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapKind {
    CompletelyPositive,
    Cptp,
}

/// What a receiver or bystander leaves on its output port.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutputState {
    /// `½·1`, used with the switch processes.
    #[default]
    MaximallyMixed,
    /// `|0><0|`, needed by the three-party non-causal process.
    Zero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMap {
    inputs: Vec<SubsystemLabel>,
    outputs: Vec<SubsystemLabel>,
    matrix: LabeledOperator,
    kind: MapKind,
}

impl ChoiMap {
    /// Validates `matrix` as the Choi matrix of a CP map from `inputs` to `outputs`.
    pub fn new(
        inputs: Vec<SubsystemLabel>,
        outputs: Vec<SubsystemLabel>,
        matrix: LabeledOperator,
    ) -> Result<Self> {
        let mut all = inputs.clone();
        all.extend(outputs.iter().cloned());
        check_distinct(&all)?;
        let order: Vec<&str> = all.iter().map(|l| l.name()).collect();
        let matrix = matrix.permute(&order)?;
        if matrix.labels() != all.as_slice() {
            return Err(Error::Shape(format!(
                "Choi matrix labels {:?} do not match {:?}",
                matrix.labels(),
                all
            )));
        }
        let defect = matrix.hermiticity_defect();
        if defect > HERMITIAN_TOLERANCE {
            return Err(Error::NotCompletelyPositive(format!(
                "matrix is not Hermitian (defect {defect:e})"
            )));
        }
        let min_eig = matrix.min_eigenvalue();
        if min_eig < POSITIVITY_TOLERANCE {
            return Err(Error::NotCompletelyPositive(format!(
                "minimum eigenvalue {min_eig:e}"
            )));
        }
        let mut map = Self {
            inputs,
            outputs,
            matrix,
            kind: MapKind::CompletelyPositive,
        };
        if map.trace_preservation_defect() <= TRACE_PRESERVING_TOLERANCE {
            map.kind = MapKind::Cptp;
        }
        Ok(map)
    }

    /// Choi matrix of `ρ ↦ Σ_K K ρ K†`. Each Kraus operator is `dim(outputs) × dim(inputs)`.
    pub fn from_kraus(
        kraus: &[DMatrix<Complex64>],
        inputs: Vec<SubsystemLabel>,
        outputs: Vec<SubsystemLabel>,
    ) -> Result<Self> {
        let din = total_dim(&inputs);
        let dout = total_dim(&outputs);
        if let Some(k) = kraus.iter().find(|k| k.shape() != (dout, din)) {
            return Err(Error::Shape(format!(
                "Kraus operator of shape {:?}, expected ({dout}, {din})",
                k.shape()
            )));
        }
        let mut dense = DMatrix::zeros(din * dout, din * dout);
        for k in kraus {
            for i in 0..din {
                for o in 0..dout {
                    for j in 0..din {
                        for o2 in 0..dout {
                            dense[(i * dout + o, j * dout + o2)] += k[(o, i)] * k[(o2, j)].conj();
                        }
                    }
                }
            }
        }
        let mut labels = inputs.clone();
        labels.extend(outputs.iter().cloned());
        check_distinct(&labels)?;
        Self::new(
            inputs,
            outputs,
            LabeledOperator::from_dense(labels, &dense)?,
        )
    }

    pub fn inputs(&self) -> &[SubsystemLabel] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[SubsystemLabel] {
        &self.outputs
    }

    pub fn matrix(&self) -> &LabeledOperator {
        &self.matrix
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.kind == MapKind::Cptp
    }

    pub fn input_dim(&self) -> usize {
        total_dim(&self.inputs)
    }

    pub fn output_dim(&self) -> usize {
        total_dim(&self.outputs)
    }

    /// Largest entry of `|Tr_O M - 1_I|`.
    pub fn trace_preservation_defect(&self) -> f64 {
        let outputs: Vec<&str> = self.outputs.iter().map(|l| l.name()).collect();
        let reduced = self
            .matrix
            .partial_trace(&outputs)
            .expect("outputs are labels of the matrix");
        let identity =
            LabeledOperator::identity(self.inputs.clone()).expect("input labels are distinct");
        reduced.max_abs_diff(&identity).expect("same label set")
    }

    /// Kraus operators read off the eigen-decomposition of the Choi matrix.
    pub fn kraus(&self) -> Vec<DMatrix<Complex64>> {
        let din = self.input_dim();
        let dout = self.output_dim();
        let (values, vectors) = hermitian_eigen(&self.matrix.to_dense());
        values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 1e-14)
            .map(|(col, &v)| {
                let scale = v.sqrt();
                DMatrix::from_fn(dout, din, |o, i| vectors[(i * dout + o, col)] * scale)
            })
            .collect()
    }

    /// The CP map `factor · M`. Trace preservation is re-evaluated.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor >= 0.0 && factor.is_finite()) {
            return Err(Error::NotCompletelyPositive(format!(
                "scale factor {factor}"
            )));
        }
        Self::new(
            self.inputs.clone(),
            self.outputs.clone(),
            self.matrix.scale(factor.into()),
        )
    }

    /// Sum of CP maps on the same ports, e.g. the outcomes of an instrument.
    pub fn sum<'a>(maps: impl IntoIterator<Item = &'a ChoiMap>) -> Result<Self> {
        let mut iter = maps.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::Shape("sum of no maps".into()))?;
        let mut matrix = first.matrix.clone();
        for m in iter {
            if m.inputs != first.inputs || m.outputs != first.outputs {
                return Err(Error::Shape("summands act on different ports".into()));
            }
            matrix = matrix.add(&m.matrix)?;
        }
        Self::new(first.inputs.clone(), first.outputs.clone(), matrix)
    }
}

/// Choi map of a single-system channel given by Kraus operators.
pub fn choi_of_kraus(
    kraus: &[DMatrix<Complex64>],
    input: SubsystemLabel,
    output: SubsystemLabel,
) -> Result<ChoiMap> {
    ChoiMap::from_kraus(kraus, vec![input], vec![output])
}

fn standard_map(party: usize, input: LabeledOperator, output: LabeledOperator) -> ChoiMap {
    ChoiMap::new(
        vec![party_input(party)],
        vec![party_output(party)],
        input
            .tensor(&output)
            .expect("input and output labels differ"),
    )
    .expect("standard party maps are CP")
}

fn basis_projector(label: SubsystemLabel, value: usize) -> LabeledOperator {
    LabeledOperator::projector(vec![label], &[value]).expect("qubit basis index")
}

fn output_state(party: usize, state: OutputState) -> LabeledOperator {
    match state {
        OutputState::MaximallyMixed => {
            LabeledOperator::maximally_mixed(vec![party_output(party)]).expect("single label")
        }
        OutputState::Zero => basis_projector(party_output(party), 0),
    }
}

/// Sender encoding bit `x`: `1_I ⊗ |x><x|_O`.
pub fn sender_map(x: u8, party: usize) -> ChoiMap {
    assert!(x < 2, "bit value {x}");
    standard_map(
        party,
        LabeledOperator::identity(vec![party_input(party)]).expect("single label"),
        basis_projector(party_output(party), x as usize),
    )
}

/// Receiver outcome `a`: `|a><a|_I ⊗ (output state)_O`.
pub fn receiver_map(a: u8, party: usize, output: OutputState) -> ChoiMap {
    assert!(a < 2, "bit value {a}");
    standard_map(
        party,
        basis_projector(party_input(party), a as usize),
        output_state(party, output),
    )
}

/// The "do nothing" operation of a party that neither sends nor receives.
pub fn bystander_map(party: usize, output: OutputState) -> ChoiMap {
    standard_map(
        party,
        LabeledOperator::identity(vec![party_input(party)]).expect("single label"),
        output_state(party, output),
    )
}

/// A state preparation: a Choi map with no inputs.
pub fn preparation(state: LabeledOperator) -> Result<ChoiMap> {
    let trace = state.trace();
    if (trace.re - 1.0).abs() > TRACE_PRESERVING_TOLERANCE
        || trace.im.abs() > TRACE_PRESERVING_TOLERANCE
    {
        return Err(Error::State(format!("trace {trace} is not 1")));
    }
    let outputs = state.labels().to_vec();
    ChoiMap::new(vec![], outputs, state).map_err(|e| match e {
        Error::NotCompletelyPositive(msg) => Error::State(msg),
        other => other,
    })
}

/// Discarding the given systems: the identity on the inputs, nothing out.
pub fn discard(inputs: Vec<SubsystemLabel>) -> Result<ChoiMap> {
    let matrix = LabeledOperator::identity(inputs.clone())?;
    ChoiMap::new(inputs, vec![], matrix)
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

/// Columns of a Haar-random isometry `C^cols -> C^rows`.
pub(crate) fn random_isometry<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> DMatrix<Complex64> {
    assert!(rows >= cols);
    let g = gaussian_matrix(rows, cols, rng);
    let qr = g.qr();
    let (q, r) = qr.unpack();
    // Fix the phase freedom of QR so the distribution is Haar.
    let mut q = q;
    for c in 0..cols {
        let d = r[(c, c)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for row in 0..rows {
                q[(row, c)] *= phase;
            }
        }
    }
    q
}

/// Haar-random unit vector of dimension `dim`.
pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    random_isometry(dim, 1, rng)
        .column(0)
        .iter()
        .copied()
        .collect()
}

/// Random CPTP map from `inputs` to `outputs`, drawn as the Stinespring
/// dilation of a Haar-random isometry with environment dimension `env_dim`.
pub fn random_cptp_with_env<R: Rng + ?Sized>(
    inputs: Vec<SubsystemLabel>,
    outputs: Vec<SubsystemLabel>,
    env_dim: usize,
    rng: &mut R,
) -> Result<ChoiMap> {
    let din = total_dim(&inputs);
    let dout = total_dim(&outputs);
    if env_dim == 0 || dout * env_dim < din {
        return Err(Error::Shape(format!(
            "environment dimension {env_dim} cannot dilate {din} -> {dout}"
        )));
    }
    let v = random_isometry(dout * env_dim, din, rng);
    let kraus: Vec<_> = (0..env_dim)
        .map(|e| DMatrix::from_fn(dout, din, |o, i| v[(o * env_dim + e, i)]))
        .collect();
    ChoiMap::from_kraus(&kraus, inputs, outputs)
}

/// Random CPTP map with full Kraus rank.
pub fn random_cptp<R: Rng + ?Sized>(
    inputs: Vec<SubsystemLabel>,
    outputs: Vec<SubsystemLabel>,
    rng: &mut R,
) -> Result<ChoiMap> {
    let env = total_dim(&inputs) * total_dim(&outputs);
    random_cptp_with_env(inputs, outputs, env, rng)
}

/// Random CPTP map `in -> out` with dimensions `in_dim`, `out_dim`, reproducible from `seed`.
pub fn random_cptp_seeded(in_dim: usize, out_dim: usize, seed: u64) -> Result<ChoiMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_cptp(
        vec![SubsystemLabel::new("in", in_dim)?],
        vec![SubsystemLabel::new("out", out_dim)?],
        &mut rng,
    )
}

/// Random density operator on `labels` (a random CPTP map with no input).
pub fn random_state<R: Rng + ?Sized>(
    labels: Vec<SubsystemLabel>,
    rng: &mut R,
) -> Result<LabeledOperator> {
    Ok(random_cptp(vec![], labels, rng)?.matrix)
}

/// Random two-outcome (or more) instrument: CP maps summing to a CPTP map.
///
/// Drawn as a random channel into `outputs ⊗ outcome register` whose
/// register is then read out in the computational basis.
pub fn random_instrument<R: Rng + ?Sized>(
    inputs: Vec<SubsystemLabel>,
    outputs: Vec<SubsystemLabel>,
    outcomes: usize,
    rng: &mut R,
) -> Result<Vec<ChoiMap>> {
    let register = SubsystemLabel::new("__outcome", outcomes)?;
    let mut extended = outputs.clone();
    extended.push(register.clone());
    let channel = random_cptp(inputs.clone(), extended, rng)?;
    (0..outcomes)
        .map(|a| {
            let mut labels = channel.matrix.labels().to_vec();
            labels.retain(|l| l.name() != register.name());
            let pos = channel.matrix.labels().len() - 1;
            let entries = channel
                .matrix
                .entries()
                .iter()
                .filter(|((r, c), _)| r[pos] == a && c[pos] == a)
                .map(|((r, c), v)| ((r[..pos].to_vec(), c[..pos].to_vec()), *v));
            let matrix = LabeledOperator::from_entries(labels, entries)?;
            ChoiMap::new(inputs.clone(), outputs.clone(), matrix)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn identity_kraus() -> DMatrix<Complex64> {
        DMatrix::identity(2, 2)
    }

    #[test]
    fn identity_channel_is_bell_projector() {
        let m = choi_of_kraus(
            &[identity_kraus()],
            SubsystemLabel::qubit("i"),
            SubsystemLabel::qubit("o"),
        )
        .unwrap();
        assert_eq!(m.kind(), MapKind::Cptp);
        assert!((m.matrix().trace() - c(2.0)).norm() < 1e-15);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(m.matrix().entry(&[i, i], &[j, j]), c(1.0));
            }
        }
    }

    #[test]
    fn reset_channel() {
        let k0 = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        let k1 = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        let m = choi_of_kraus(
            &[k0, k1],
            SubsystemLabel::qubit("i"),
            SubsystemLabel::qubit("o"),
        )
        .unwrap();
        assert_eq!(m.kind(), MapKind::Cptp);
        let expected = LabeledOperator::identity(vec![SubsystemLabel::qubit("i")])
            .unwrap()
            .tensor(&LabeledOperator::projector(vec![SubsystemLabel::qubit("o")], &[0]).unwrap())
            .unwrap();
        assert!(m.matrix().max_abs_diff(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn half_identity_is_cp_not_tp() {
        let m = choi_of_kraus(
            &[identity_kraus().scale(0.5)],
            SubsystemLabel::qubit("i"),
            SubsystemLabel::qubit("o"),
        )
        .unwrap();
        assert_eq!(m.kind(), MapKind::CompletelyPositive);
        let reduced = m.matrix().partial_trace(&["o"]).unwrap();
        let quarter = LabeledOperator::identity(vec![SubsystemLabel::qubit("i")])
            .unwrap()
            .scale(c(0.25));
        assert!(reduced.max_abs_diff(&quarter).unwrap() < 1e-15);
    }

    #[test]
    fn kraus_shape_mismatch() {
        let err = choi_of_kraus(
            &[identity_kraus(), DMatrix::identity(3, 2)],
            SubsystemLabel::qubit("i"),
            SubsystemLabel::qubit("o"),
        );
        assert!(matches!(err, Err(Error::Shape(_))));
    }

    #[test]
    fn sender_maps() {
        for x in 0..2u8 {
            let s = sender_map(x, 0);
            assert!(s.is_trace_preserving());
            for i in 0..2 {
                for o in 0..2 {
                    let expected = if o == x as usize { 1.0 } else { 0.0 };
                    assert_eq!(s.matrix().entry(&[i, o], &[i, o]), c(expected));
                }
            }
            assert_eq!(s.matrix().len(), 2);
            let reduced = s.matrix().partial_trace(&["O_A"]).unwrap();
            let id = LabeledOperator::identity(vec![party_input(0)]).unwrap();
            assert_eq!(reduced.max_abs_diff(&id).unwrap(), 0.0);
        }
    }

    #[test]
    fn receiver_maps() {
        let r0 = receiver_map(0, 1, OutputState::MaximallyMixed);
        assert_eq!(r0.matrix().entry(&[0, 0], &[0, 0]), c(0.5));
        assert_eq!(r0.matrix().entry(&[0, 1], &[0, 1]), c(0.5));
        assert_eq!(r0.matrix().len(), 2);
        assert!(!r0.is_trace_preserving());
        let r1 = receiver_map(1, 1, OutputState::MaximallyMixed);
        assert!(ChoiMap::sum([&r0, &r1]).unwrap().is_trace_preserving());

        let w = receiver_map(1, 2, OutputState::Zero);
        assert_eq!(w.matrix().len(), 1);
        assert_eq!(w.matrix().entry(&[1, 0], &[1, 0]), c(1.0));
        let w0 = receiver_map(0, 2, OutputState::Zero);
        assert!(ChoiMap::sum([&w0, &w]).unwrap().is_trace_preserving());
    }

    #[test]
    fn receiver_completeness_identity() {
        // Σ_a <m| Tr_O R(a) |j> = δ_mj
        let total = ChoiMap::sum([
            &receiver_map(0, 0, OutputState::MaximallyMixed),
            &receiver_map(1, 0, OutputState::MaximallyMixed),
        ])
        .unwrap();
        let reduced = total.matrix().partial_trace(&["O_A"]).unwrap();
        for m in 0..2 {
            for j in 0..2 {
                let expected = if m == j { 1.0 } else { 0.0 };
                assert!((reduced.entry(&[m], &[j]) - c(expected)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn bystander_variants() {
        let b = bystander_map(0, OutputState::MaximallyMixed);
        assert!(b.is_trace_preserving());
        assert_eq!(b.matrix().len(), 4);
        for i in 0..2 {
            for o in 0..2 {
                assert_eq!(b.matrix().entry(&[i, o], &[i, o]), c(0.5));
            }
        }
        let z = bystander_map(0, OutputState::Zero);
        assert!(z.is_trace_preserving());
        assert_eq!(z.matrix().len(), 2);
        assert_eq!(z.matrix().entry(&[1, 0], &[1, 0]), c(1.0));
    }

    #[test]
    fn preparations() {
        let pc = SubsystemLabel::qubit("P_c");
        let pt = SubsystemLabel::qubit("P_t");
        let state = LabeledOperator::projector(vec![pc.clone()], &[0])
            .unwrap()
            .tensor(&LabeledOperator::maximally_mixed(vec![pt]).unwrap())
            .unwrap();
        let p = preparation(state).unwrap();
        assert!(p.inputs().is_empty());
        assert!(p.is_trace_preserving());

        let plus = crate::tensor::LabeledVector::from_amplitudes(
            vec![pc.clone()],
            [(vec![0], c(0.5f64.sqrt())), (vec![1], c(0.5f64.sqrt()))],
        )
        .unwrap()
        .outer();
        assert!(preparation(plus).is_ok());

        let short = LabeledOperator::projector(vec![pc.clone()], &[0])
            .unwrap()
            .scale(c(0.9));
        assert!(matches!(preparation(short), Err(Error::State(_))));

        let negative = LabeledOperator::from_entries(
            vec![pc],
            [((vec![0], vec![0]), c(1.5)), ((vec![1], vec![1]), c(-0.5))],
        )
        .unwrap();
        assert!(matches!(preparation(negative), Err(Error::State(_))));
    }

    #[test]
    fn discard_maps() {
        let d = discard(vec![
            SubsystemLabel::qubit("F_c"),
            SubsystemLabel::qubit("F_t"),
        ])
        .unwrap();
        assert!(d.is_trace_preserving());
        assert_eq!(d.matrix().len(), 4);
        let dense = d.matrix().to_dense();
        assert_eq!(dense, DMatrix::identity(4, 4));

        let scalar = discard(vec![]).unwrap();
        assert_eq!(scalar.matrix().entry(&[], &[]), c(1.0));
        assert!(scalar.is_trace_preserving());
    }

    #[test]
    fn random_channels() {
        let a = random_cptp_seeded(2, 3, 42).unwrap();
        let b = random_cptp_seeded(2, 3, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.is_trace_preserving());
        assert!(a.matrix().min_eigenvalue() >= POSITIVITY_TOLERANCE);

        let scalar = random_cptp_seeded(1, 1, 7).unwrap();
        assert_eq!(scalar.matrix().len(), 1);
        assert!((scalar.matrix().entry(&[0, 0], &[0, 0]) - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn kraus_round_trip() {
        let m = random_cptp_seeded(2, 2, 3).unwrap();
        let rebuilt =
            ChoiMap::from_kraus(&m.kraus(), m.inputs().to_vec(), m.outputs().to_vec()).unwrap();
        assert!(m.matrix().max_abs_diff(rebuilt.matrix()).unwrap() < 1e-12);
    }

    #[test]
    fn instruments_sum_to_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let inst =
            random_instrument(vec![party_input(0)], vec![party_output(0)], 2, &mut rng).unwrap();
        assert_eq!(inst.len(), 2);
        assert!(inst.iter().all(|m| !m.is_trace_preserving()));
        assert!(ChoiMap::sum(&inst).unwrap().is_trace_preserving());
    }

    #[test]
    fn non_positive_matrix_rejected() {
        let labels = vec![SubsystemLabel::qubit("i"), SubsystemLabel::qubit("o")];
        let m =
            LabeledOperator::from_entries(labels.clone(), [((vec![0, 0], vec![0, 0]), c(-1.0))])
                .unwrap();
        let err = ChoiMap::new(vec![labels[0].clone()], vec![labels[1].clone()], m);
        assert!(matches!(err, Err(Error::NotCompletelyPositive(_))));
    }
}
