//! Sparse complex vectors and operators over labeled tensor-product spaces.
//!
//! Every Hilbert space in the crate is an ordered list of named subsystems
//! ([`SubsystemLabel`]). Amplitudes and matrix entries are keyed by a
//! multi-index holding one basis index per subsystem, in label order.
//! Binary operations align their operands by name, so the storage order of
//! the subsystems never changes a result.
//!
//! The central kernel is [`contract`], which evaluates `<v| (X_1 ⊗ ... ⊗ X_m) |v>`
//! for a sparse `v` without ever forming the global operator.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Amplitudes with modulus below this value are dropped when an object is built.
pub const PRUNE_TOLERANCE: f64 = 1e-12;

/// One basis index per subsystem, in label order.
pub type MultiIndex = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsystemLabel {
    name: String,
    dim: usize,
}

impl SubsystemLabel {
    pub fn new(name: impl Into<String>, dim: usize) -> Result<Self> {
        let name = name.into();
        if dim == 0 {
            return Err(Error::Shape(format!("subsystem `{name}` has dimension 0")));
        }
        Ok(Self { name, dim })
    }

    pub fn qubit(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            dim: 2,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl fmt::Display for SubsystemLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name, self.dim)
    }
}

pub(crate) fn check_distinct(labels: &[SubsystemLabel]) -> Result<()> {
    for (i, a) in labels.iter().enumerate() {
        if labels[..i].iter().any(|b| b.name == a.name) {
            return Err(Error::LabelCollision(a.name.clone()));
        }
    }
    Ok(())
}

fn check_index(labels: &[SubsystemLabel], index: &[usize]) -> Result<()> {
    if index.len() != labels.len() {
        return Err(Error::Shape(format!(
            "multi-index of length {} for {} subsystems",
            index.len(),
            labels.len()
        )));
    }
    for (label, &i) in labels.iter().zip(index) {
        if i >= label.dim {
            return Err(Error::Dimension {
                label: label.name.clone(),
                index: i,
                dim: label.dim,
            });
        }
    }
    Ok(())
}

/// Product of the subsystem dimensions.
pub fn total_dim(labels: &[SubsystemLabel]) -> usize {
    labels.iter().map(|l| l.dim).product()
}

/// Row-major flattening of a multi-index.
pub fn flatten_index(labels: &[SubsystemLabel], index: &[usize]) -> usize {
    labels
        .iter()
        .zip(index)
        .fold(0, |acc, (label, &i)| acc * label.dim + i)
}

pub fn unflatten_index(labels: &[SubsystemLabel], mut flat: usize) -> MultiIndex {
    let mut index = vec![0; labels.len()];
    for (slot, label) in index.iter_mut().zip(labels).rev() {
        *slot = flat % label.dim;
        flat /= label.dim;
    }
    index
}

/// `positions[new] = old` for reordering `labels` into `order`.
fn permutation_positions(labels: &[SubsystemLabel], order: &[&str]) -> Result<Vec<usize>> {
    if order.len() != labels.len() {
        return Err(Error::Label(format!(
            "order {:?} is not a permutation of {:?}",
            order,
            names(labels)
        )));
    }
    let mut seen = vec![false; labels.len()];
    order
        .iter()
        .map(|name| {
            let pos = labels
                .iter()
                .position(|l| l.name == *name)
                .ok_or_else(|| Error::Label(format!("unknown subsystem `{name}`")))?;
            if std::mem::replace(&mut seen[pos], true) {
                return Err(Error::Label(format!(
                    "subsystem `{name}` repeated in order"
                )));
            }
            Ok(pos)
        })
        .collect()
}

fn names(labels: &[SubsystemLabel]) -> Vec<&str> {
    labels.iter().map(|l| l.name.as_str()).collect()
}

fn reorder(index: &[usize], positions: &[usize]) -> MultiIndex {
    positions.iter().map(|&p| index[p]).collect()
}

fn same_label_set(a: &[SubsystemLabel], b: &[SubsystemLabel]) -> Result<Vec<usize>> {
    let order = names(a);
    let positions = permutation_positions(b, &order)?;
    for (pos, label) in positions.iter().zip(a) {
        if b[*pos].dim != label.dim {
            return Err(Error::Shape(format!(
                "subsystem `{}` has dimensions {} and {}",
                label.name, label.dim, b[*pos].dim
            )));
        }
    }
    Ok(positions)
}

fn accumulate<K: Ord>(map: &mut BTreeMap<K, Complex64>, key: K, value: Complex64) {
    *map.entry(key).or_insert(Complex64::ZERO) += value;
}

fn prune<K: Ord>(map: &mut BTreeMap<K, Complex64>) {
    map.retain(|_, v| v.norm() >= PRUNE_TOLERANCE);
}

/// Sparse amplitude vector over an ordered list of subsystems.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledVector {
    labels: Vec<SubsystemLabel>,
    amplitudes: BTreeMap<MultiIndex, Complex64>,
}

impl LabeledVector {
    pub fn zeros(labels: Vec<SubsystemLabel>) -> Result<Self> {
        check_distinct(&labels)?;
        Ok(Self {
            labels,
            amplitudes: BTreeMap::new(),
        })
    }

    /// Builds a vector from `(index, amplitude)` pairs. Repeated indices add up.
    pub fn from_amplitudes<I>(labels: Vec<SubsystemLabel>, amplitudes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, Complex64)>,
    {
        check_distinct(&labels)?;
        let mut map = BTreeMap::new();
        for (index, value) in amplitudes {
            check_index(&labels, &index)?;
            accumulate(&mut map, index, value);
        }
        prune(&mut map);
        Ok(Self {
            labels,
            amplitudes: map,
        })
    }

    pub fn basis_vector(labels: Vec<SubsystemLabel>, index: &[usize]) -> Result<Self> {
        Self::from_amplitudes(labels, [(index.to_vec(), Complex64::ONE)])
    }

    /// The unnormalized `Σ_i |i>|i>` over two subsystems of equal dimension.
    pub fn max_entangled(a: SubsystemLabel, b: SubsystemLabel) -> Result<Self> {
        if a.dim != b.dim {
            return Err(Error::Shape(format!(
                "cannot pair `{}` (dim {}) with `{}` (dim {})",
                a.name, a.dim, b.name, b.dim
            )));
        }
        let dim = a.dim;
        Self::from_amplitudes(vec![a, b], (0..dim).map(|i| (vec![i, i], Complex64::ONE)))
    }

    pub fn from_dense(labels: Vec<SubsystemLabel>, dense: &DVector<Complex64>) -> Result<Self> {
        let dim = total_dim(&labels);
        if dense.len() != dim {
            return Err(Error::Shape(format!(
                "dense vector of length {} for total dimension {dim}",
                dense.len()
            )));
        }
        let entries: Vec<_> = dense
            .iter()
            .enumerate()
            .map(|(flat, &v)| (unflatten_index(&labels, flat), v))
            .collect();
        Self::from_amplitudes(labels, entries)
    }

    pub fn labels(&self) -> &[SubsystemLabel] {
        &self.labels
    }

    pub fn label_names(&self) -> Vec<&str> {
        names(&self.labels)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.name == name)
    }

    pub fn amplitudes(&self) -> &BTreeMap<MultiIndex, Complex64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: &[usize]) -> Complex64 {
        self.amplitudes
            .get(index)
            .copied()
            .unwrap_or(Complex64::ZERO)
    }

    /// Number of stored (nonzero) amplitudes.
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn dim(&self) -> usize {
        total_dim(&self.labels)
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        check_distinct(&labels)?;
        let mut amplitudes = BTreeMap::new();
        for (a, va) in &self.amplitudes {
            for (b, vb) in &other.amplitudes {
                let mut index = a.clone();
                index.extend_from_slice(b);
                amplitudes.insert(index, va * vb);
            }
        }
        prune(&mut amplitudes);
        Ok(Self { labels, amplitudes })
    }

    pub fn permute(&self, order: &[&str]) -> Result<Self> {
        let positions = permutation_positions(&self.labels, order)?;
        Ok(Self {
            labels: positions.iter().map(|&p| self.labels[p].clone()).collect(),
            amplitudes: self
                .amplitudes
                .iter()
                .map(|(k, v)| (reorder(k, &positions), *v))
                .collect(),
        })
    }

    /// Sum of two vectors on the same subsystems; the result keeps `self`'s order.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let positions = same_label_set(&self.labels, &other.labels)?;
        let mut amplitudes = self.amplitudes.clone();
        for (k, v) in &other.amplitudes {
            accumulate(&mut amplitudes, reorder(k, &positions), *v);
        }
        prune(&mut amplitudes);
        Ok(Self {
            labels: self.labels.clone(),
            amplitudes,
        })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut amplitudes: BTreeMap<_, _> = self
            .amplitudes
            .iter()
            .map(|(k, v)| (k.clone(), v * factor))
            .collect();
        prune(&mut amplitudes);
        Self {
            labels: self.labels.clone(),
            amplitudes,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|v| v.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        let positions = same_label_set(&self.labels, &other.labels)?;
        let mut sum = Complex64::ZERO;
        for (k, v) in &other.amplitudes {
            sum += self.amplitude(&reorder(k, &positions)).conj() * v;
        }
        Ok(sum)
    }

    /// Rank-one operator `|v><v|`.
    pub fn outer(&self) -> LabeledOperator {
        let mut entries = BTreeMap::new();
        for (r, vr) in &self.amplitudes {
            for (c, vc) in &self.amplitudes {
                entries.insert((r.clone(), c.clone()), vr * vc.conj());
            }
        }
        prune(&mut entries);
        LabeledOperator {
            labels: self.labels.clone(),
            entries,
        }
    }

    /// Groups the amplitudes by the values they take on `names`.
    ///
    /// Each group keeps the full label set; the key lists the values in the
    /// order of `names`.
    pub fn split_by(&self, names: &[&str]) -> Result<Vec<(MultiIndex, LabeledVector)>> {
        let positions = names
            .iter()
            .map(|n| {
                self.position(n)
                    .ok_or_else(|| Error::Label(format!("unknown subsystem `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut groups: BTreeMap<MultiIndex, BTreeMap<MultiIndex, Complex64>> = BTreeMap::new();
        for (k, v) in &self.amplitudes {
            groups
                .entry(reorder(k, &positions))
                .or_default()
                .insert(k.clone(), *v);
        }
        Ok(groups
            .into_iter()
            .map(|(key, amplitudes)| {
                (
                    key,
                    Self {
                        labels: self.labels.clone(),
                        amplitudes,
                    },
                )
            })
            .collect())
    }

    pub fn to_dense(&self) -> DVector<Complex64> {
        let mut dense = DVector::zeros(self.dim());
        for (k, v) in &self.amplitudes {
            dense[flatten_index(&self.labels, k)] = *v;
        }
        dense
    }
}

/// Sparse operator whose row and column spaces share one label list.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledOperator {
    labels: Vec<SubsystemLabel>,
    entries: BTreeMap<(MultiIndex, MultiIndex), Complex64>,
}

impl LabeledOperator {
    pub fn zeros(labels: Vec<SubsystemLabel>) -> Result<Self> {
        check_distinct(&labels)?;
        Ok(Self {
            labels,
            entries: BTreeMap::new(),
        })
    }

    pub fn from_entries<I>(labels: Vec<SubsystemLabel>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = ((MultiIndex, MultiIndex), Complex64)>,
    {
        check_distinct(&labels)?;
        let mut map = BTreeMap::new();
        for ((r, c), value) in entries {
            check_index(&labels, &r)?;
            check_index(&labels, &c)?;
            accumulate(&mut map, (r, c), value);
        }
        prune(&mut map);
        Ok(Self {
            labels,
            entries: map,
        })
    }

    pub fn identity(labels: Vec<SubsystemLabel>) -> Result<Self> {
        Self::scaled_identity(labels, 1.0)
    }

    /// `1/d` times the identity.
    pub fn maximally_mixed(labels: Vec<SubsystemLabel>) -> Result<Self> {
        let dim = total_dim(&labels);
        Self::scaled_identity(labels, 1.0 / dim as f64)
    }

    fn scaled_identity(labels: Vec<SubsystemLabel>, factor: f64) -> Result<Self> {
        let dim = total_dim(&labels);
        let entries: Vec<_> = (0..dim)
            .map(|flat| {
                let i = unflatten_index(&labels, flat);
                ((i.clone(), i), Complex64::new(factor, 0.0))
            })
            .collect();
        Self::from_entries(labels, entries)
    }

    /// `|i><i|` for a basis multi-index.
    pub fn projector(labels: Vec<SubsystemLabel>, index: &[usize]) -> Result<Self> {
        Ok(LabeledVector::basis_vector(labels, index)?.outer())
    }

    pub fn from_dense(labels: Vec<SubsystemLabel>, dense: &DMatrix<Complex64>) -> Result<Self> {
        let dim = total_dim(&labels);
        if dense.nrows() != dim || dense.ncols() != dim {
            return Err(Error::Shape(format!(
                "dense matrix {}x{} for total dimension {dim}",
                dense.nrows(),
                dense.ncols()
            )));
        }
        let mut entries = Vec::new();
        for r in 0..dim {
            for c in 0..dim {
                let v = dense[(r, c)];
                if v.norm() >= PRUNE_TOLERANCE {
                    entries.push((
                        (unflatten_index(&labels, r), unflatten_index(&labels, c)),
                        v,
                    ));
                }
            }
        }
        Self::from_entries(labels, entries)
    }

    pub fn labels(&self) -> &[SubsystemLabel] {
        &self.labels
    }

    pub fn label_names(&self) -> Vec<&str> {
        names(&self.labels)
    }

    pub fn entries(&self) -> &BTreeMap<(MultiIndex, MultiIndex), Complex64> {
        &self.entries
    }

    pub fn entry(&self, row: &[usize], col: &[usize]) -> Complex64 {
        self.entries
            .get(&(row.to_vec(), col.to_vec()))
            .copied()
            .unwrap_or(Complex64::ZERO)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        total_dim(&self.labels)
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        check_distinct(&labels)?;
        let mut entries = BTreeMap::new();
        for ((ra, ca), va) in &self.entries {
            for ((rb, cb), vb) in &other.entries {
                let mut r = ra.clone();
                r.extend_from_slice(rb);
                let mut c = ca.clone();
                c.extend_from_slice(cb);
                entries.insert((r, c), va * vb);
            }
        }
        prune(&mut entries);
        Ok(Self { labels, entries })
    }

    pub fn permute(&self, order: &[&str]) -> Result<Self> {
        let positions = permutation_positions(&self.labels, order)?;
        Ok(Self {
            labels: positions.iter().map(|&p| self.labels[p].clone()).collect(),
            entries: self
                .entries
                .iter()
                .map(|((r, c), v)| ((reorder(r, &positions), reorder(c, &positions)), *v))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let positions = same_label_set(&self.labels, &other.labels)?;
        let mut entries = self.entries.clone();
        for ((r, c), v) in &other.entries {
            accumulate(
                &mut entries,
                (reorder(r, &positions), reorder(c, &positions)),
                *v,
            );
        }
        prune(&mut entries);
        Ok(Self {
            labels: self.labels.clone(),
            entries,
        })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut entries: BTreeMap<_, _> = self
            .entries
            .iter()
            .map(|(k, v)| (k.clone(), v * factor))
            .collect();
        prune(&mut entries);
        Self {
            labels: self.labels.clone(),
            entries,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            labels: self.labels.clone(),
            entries: self
                .entries
                .iter()
                .map(|((r, c), v)| ((c.clone(), r.clone()), v.conj()))
                .collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            labels: self.labels.clone(),
            entries: self
                .entries
                .iter()
                .map(|((r, c), v)| ((c.clone(), r.clone()), *v))
                .collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.entries
            .iter()
            .filter(|((r, c), _)| r == c)
            .map(|(_, v)| *v)
            .sum()
    }

    /// Traces out the named subsystems; the remaining ones keep their order.
    pub fn partial_trace(&self, over: &[&str]) -> Result<Self> {
        let mut traced = vec![false; self.labels.len()];
        for name in over {
            let pos = self
                .labels
                .iter()
                .position(|l| l.name == *name)
                .ok_or_else(|| Error::Label(format!("unknown subsystem `{name}`")))?;
            traced[pos] = true;
        }
        let keep: Vec<usize> = (0..self.labels.len()).filter(|&i| !traced[i]).collect();
        let mut entries = BTreeMap::new();
        for ((r, c), v) in &self.entries {
            if (0..r.len()).all(|i| !traced[i] || r[i] == c[i]) {
                accumulate(&mut entries, (reorder(r, &keep), reorder(c, &keep)), *v);
            }
        }
        prune(&mut entries);
        Ok(Self {
            labels: keep.iter().map(|&p| self.labels[p].clone()).collect(),
            entries,
        })
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = self.dim();
        let mut dense = DMatrix::zeros(dim, dim);
        for ((r, c), v) in &self.entries {
            dense[(
                flatten_index(&self.labels, r),
                flatten_index(&self.labels, c),
            )] = *v;
        }
        dense
    }

    /// Largest entrywise modulus of `self - other` after aligning labels.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        let positions = same_label_set(&self.labels, &other.labels)?;
        let aligned: BTreeMap<_, _> = other
            .entries
            .iter()
            .map(|((r, c), v)| ((reorder(r, &positions), reorder(c, &positions)), *v))
            .collect();
        let mut worst: f64 = 0.0;
        for (key, v) in &self.entries {
            let theirs = aligned.get(key).copied().unwrap_or(Complex64::ZERO);
            worst = worst.max((v - theirs).norm());
        }
        for (key, v) in &aligned {
            if !self.entries.contains_key(key) {
                worst = worst.max(v.norm());
            }
        }
        Ok(worst)
    }

    /// Largest entrywise modulus of `self - self†`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for ((r, c), v) in &self.entries {
            worst = worst.max((v - self.entry(c, r).conj()).norm());
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigen(&self.to_dense())
            .0
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Eigen-decomposition of the Hermitian part of a square matrix, eigenvalues ascending.
///
/// Backed by faer: nalgebra's symmetric solver returns NaN on some sparse
/// rank-one 0/1 matrices such as the quantum switch.
pub(crate) fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    let herm = faer::Mat::<Complex64>::from_fn(n, n, |r, c| (m[(r, c)] + m[(c, r)].conj()) * 0.5);
    let eig = herm
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("self-adjoint eigendecomposition converges");
    let values = (0..n).map(|i| eig.S()[i].re).collect();
    let u = eig.U();
    (values, DMatrix::from_fn(n, n, |r, c| u[(r, c)]))
}

struct Block {
    positions: Vec<usize>,
    dim: usize,
    matrix: Vec<Complex64>,
    density: f64,
}

/// `<v| (ops[0] ⊗ ops[1] ⊗ ...) |v>` for a sparse `v`.
///
/// The label sets of `ops` must partition the labels of `term`; each operator
/// may list its subsystems in any order. The cost is quadratic in the number
/// of stored amplitudes of `term` and independent of the global dimension.
pub fn contract(term: &LabeledVector, ops: &[&LabeledOperator]) -> Result<Complex64> {
    let mut covered = vec![false; term.labels.len()];
    let mut blocks = Vec::with_capacity(ops.len());
    for op in ops {
        let mut positions = Vec::with_capacity(op.labels.len());
        for label in &op.labels {
            let pos = term.position(&label.name).ok_or_else(|| {
                Error::Coverage(format!(
                    "operator subsystem `{}` is not part of the vector {:?}",
                    label.name,
                    term.label_names()
                ))
            })?;
            if term.labels[pos].dim != label.dim {
                return Err(Error::Coverage(format!(
                    "subsystem `{}` has dimension {} in the vector but {} in the operator",
                    label.name, term.labels[pos].dim, label.dim
                )));
            }
            if std::mem::replace(&mut covered[pos], true) {
                return Err(Error::Coverage(format!(
                    "subsystem `{}` is acted on by two operators",
                    label.name
                )));
            }
            positions.push(pos);
        }
        let dim = op.dim();
        let mut matrix = vec![Complex64::ZERO; dim * dim];
        for ((r, c), v) in &op.entries {
            matrix[flatten_index(&op.labels, r) * dim + flatten_index(&op.labels, c)] = *v;
        }
        blocks.push(Block {
            positions,
            dim,
            density: op.entries.len() as f64 / (dim * dim) as f64,
            matrix,
        });
    }
    if let Some(pos) = covered.iter().position(|c| !c) {
        return Err(Error::Coverage(format!(
            "subsystem `{}` is not acted on by any operator",
            term.labels[pos].name
        )));
    }
    // Sparse factors first so that zero products are detected early.
    blocks.sort_by(|a, b| a.density.total_cmp(&b.density));

    let entries: Vec<(Complex64, Vec<usize>)> = term
        .amplitudes
        .iter()
        .map(|(index, &amp)| {
            let keys = blocks
                .iter()
                .map(|b| {
                    b.positions
                        .iter()
                        .fold(0, |acc, &p| acc * term.labels[p].dim + index[p])
                })
                .collect();
            (amp, keys)
        })
        .collect();

    let Some((first, rest)) = blocks.split_first() else {
        // No operators: the term is a scalar.
        return Ok(entries
            .iter()
            .map(|(a, _)| a.norm_sqr())
            .sum::<f64>()
            .into());
    };

    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, (_, keys)) in entries.iter().enumerate() {
        groups.entry(keys[0]).or_default().push(i);
    }
    let mut groups: Vec<_> = groups.into_iter().collect();
    groups.sort_unstable_by_key(|(k, _)| *k);

    let mut total = Complex64::ZERO;
    for (gu, members_u) in &groups {
        for (gw, members_w) in &groups {
            let head = first.matrix[gu * first.dim + gw];
            if head == Complex64::ZERO {
                continue;
            }
            for &u in members_u {
                let (au, ku) = &entries[u];
                let left = au.conj() * head;
                'pairs: for &w in members_w {
                    let (aw, kw) = &entries[w];
                    let mut prod = left * aw;
                    for (b, block) in rest.iter().enumerate() {
                        let x = block.matrix[ku[b + 1] * block.dim + kw[b + 1]];
                        if x == Complex64::ZERO {
                            continue 'pairs;
                        }
                        prod *= x;
                    }
                    total += prod;
                }
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn basis_vectors() {
        let v = LabeledVector::basis_vector(vec![SubsystemLabel::qubit("c")], &[0]).unwrap();
        assert_eq!(v.amplitudes().len(), 1);
        assert_eq!(v.amplitude(&[0]), c(1.0));

        let v = LabeledVector::basis_vector(
            vec![SubsystemLabel::qubit("c"), SubsystemLabel::qubit("t")],
            &[1, 0],
        )
        .unwrap();
        assert_eq!(v.amplitude(&[1, 0]), c(1.0));
        assert_eq!(v.len(), 1);

        let err = LabeledVector::basis_vector(vec![SubsystemLabel::new("c", 3).unwrap()], &[3]);
        assert!(matches!(
            err,
            Err(Error::Dimension {
                index: 3,
                dim: 3,
                ..
            })
        ));
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(SubsystemLabel::new("x", 0).is_err());
    }

    #[test]
    fn max_entangled_pairs() {
        let v =
            LabeledVector::max_entangled(SubsystemLabel::qubit("a"), SubsystemLabel::qubit("b"))
                .unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.amplitude(&[0, 0]), c(1.0));
        assert_eq!(v.amplitude(&[1, 1]), c(1.0));
        assert_eq!(v.norm_sqr(), 2.0);

        let one = SubsystemLabel::new("a", 1).unwrap();
        let v = LabeledVector::max_entangled(one.clone(), SubsystemLabel::new("b", 1).unwrap())
            .unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.amplitude(&[0, 0]), c(1.0));

        let err = LabeledVector::max_entangled(
            SubsystemLabel::qubit("a"),
            SubsystemLabel::new("b", 3).unwrap(),
        );
        assert!(matches!(err, Err(Error::Shape(_))));
    }

    #[test]
    fn tensor_products() {
        let zero = LabeledVector::basis_vector(vec![SubsystemLabel::qubit("c")], &[0]).unwrap();
        let one = LabeledVector::basis_vector(vec![SubsystemLabel::qubit("t")], &[1]).unwrap();
        let v = zero.tensor(&one).unwrap();
        assert_eq!(v.label_names(), ["c", "t"]);
        assert_eq!(v.amplitude(&[0, 1]), c(1.0));

        let plus = LabeledVector::from_amplitudes(
            vec![SubsystemLabel::qubit("c")],
            [(vec![0], c(1.0)), (vec![1], c(1.0))],
        )
        .unwrap();
        let t0 = LabeledVector::basis_vector(vec![SubsystemLabel::qubit("t")], &[0]).unwrap();
        let v = plus.tensor(&t0).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.amplitude(&[0, 0]), c(1.0));
        assert_eq!(v.amplitude(&[1, 0]), c(1.0));

        assert!(matches!(zero.tensor(&zero), Err(Error::LabelCollision(n)) if n == "c"));
    }

    #[test]
    fn permute_swaps_and_identity() {
        let v = LabeledVector::basis_vector(
            vec![SubsystemLabel::qubit("c"), SubsystemLabel::qubit("t")],
            &[0, 1],
        )
        .unwrap();
        let w = v.permute(&["t", "c"]).unwrap();
        assert_eq!(w.amplitude(&[1, 0]), c(1.0));
        assert_eq!(v.permute(&["c", "t"]).unwrap(), v);
        assert!(matches!(v.permute(&["c"]), Err(Error::Label(_))));
        assert!(matches!(v.permute(&["c", "c"]), Err(Error::Label(_))));
        assert!(matches!(v.permute(&["c", "x"]), Err(Error::Label(_))));
    }

    #[test]
    fn outer_of_basis_and_bell() {
        let v = LabeledVector::basis_vector(vec![SubsystemLabel::qubit("c")], &[0]).unwrap();
        let p = v.outer();
        assert_eq!(p.len(), 1);
        assert_eq!(p.entry(&[0], &[0]), c(1.0));

        let bell =
            LabeledVector::max_entangled(SubsystemLabel::qubit("a"), SubsystemLabel::qubit("b"))
                .unwrap()
                .outer();
        assert_eq!(bell.len(), 4);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(bell.entry(&[i, i], &[j, j]), c(1.0));
            }
        }
    }

    #[test]
    fn partial_trace_of_bell_is_identity() {
        let bell =
            LabeledVector::max_entangled(SubsystemLabel::qubit("a"), SubsystemLabel::qubit("b"))
                .unwrap()
                .outer();
        let reduced = bell.partial_trace(&["b"]).unwrap();
        let id = LabeledOperator::identity(vec![SubsystemLabel::qubit("a")]).unwrap();
        assert_eq!(reduced.max_abs_diff(&id).unwrap(), 0.0);

        let all = bell.partial_trace(&["a", "b"]).unwrap();
        assert!(all.labels().is_empty());
        assert_eq!(all.entry(&[], &[]), bell.trace());

        assert!(matches!(bell.partial_trace(&["z"]), Err(Error::Label(_))));
    }

    #[test]
    fn contract_simple_cases() {
        let v = LabeledVector::basis_vector(vec![SubsystemLabel::qubit("c")], &[0]).unwrap();
        let p = LabeledOperator::projector(vec![SubsystemLabel::qubit("c")], &[0]).unwrap();
        assert_eq!(contract(&v, &[&p]).unwrap(), c(1.0));

        let bell =
            LabeledVector::max_entangled(SubsystemLabel::qubit("a"), SubsystemLabel::qubit("b"))
                .unwrap();
        let ia = LabeledOperator::identity(vec![SubsystemLabel::qubit("a")]).unwrap();
        let ib = LabeledOperator::identity(vec![SubsystemLabel::qubit("b")]).unwrap();
        assert_eq!(contract(&bell, &[&ia, &ib]).unwrap(), c(2.0));
    }

    #[test]
    fn contract_coverage_errors() {
        let bell =
            LabeledVector::max_entangled(SubsystemLabel::qubit("a"), SubsystemLabel::qubit("b"))
                .unwrap();
        let ia = LabeledOperator::identity(vec![SubsystemLabel::qubit("a")]).unwrap();
        let iz = LabeledOperator::identity(vec![SubsystemLabel::qubit("z")]).unwrap();
        let ia3 = LabeledOperator::identity(vec![SubsystemLabel::new("a", 3).unwrap()]).unwrap();
        assert!(matches!(contract(&bell, &[&ia]), Err(Error::Coverage(_))));
        assert!(matches!(
            contract(&bell, &[&ia, &iz]),
            Err(Error::Coverage(_))
        ));
        assert!(matches!(
            contract(&bell, &[&ia, &ia]),
            Err(Error::Coverage(_))
        ));
        assert!(matches!(contract(&bell, &[&ia3]), Err(Error::Coverage(_))));
    }

    #[test]
    fn amplitudes_below_threshold_are_pruned() {
        let v = LabeledVector::from_amplitudes(
            vec![SubsystemLabel::qubit("c")],
            [(vec![0], c(1e-13)), (vec![1], c(1.0))],
        )
        .unwrap();
        assert_eq!(v.len(), 1);
    }

    #[test]
    fn split_by_groups_values() {
        let v = LabeledVector::from_amplitudes(
            vec![SubsystemLabel::qubit("c"), SubsystemLabel::qubit("t")],
            [
                (vec![0, 0], c(1.0)),
                (vec![1, 1], c(2.0)),
                (vec![1, 0], c(3.0)),
            ],
        )
        .unwrap();
        let groups = v.split_by(&["c"]).unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].0, vec![0]);
        assert_eq!(groups[0].1.len(), 1);
        assert_eq!(groups[1].1.len(), 2);
    }
}
