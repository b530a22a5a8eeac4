//! Causal correlations of the n-cycle game as a polytope in `R^{2n}`.
//!
//! A point is the vector of `p(0|s,x)`, stored at index `x·n + s` (the whole
//! `x = 0` half first). Deterministic causal strategies pick a party `j`
//! that acts before everyone else; the only constraint is that `j` cannot
//! see `x` when it is the receiver, i.e. for the sender `s` with `s⁺ = j`.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::labels::{predecessor, successor};

pub const MIN_PLAYERS: usize = 2;
pub const MAX_PLAYERS: usize = 5;

fn check_n(n: usize) -> Result<()> {
    if !(MIN_PLAYERS..=MAX_PLAYERS).contains(&n) {
        return Err(Error::Size {
            what: "cycle players",
            value: n,
            min: MIN_PLAYERS,
            max: MAX_PLAYERS,
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationVector {
    n: usize,
    entries: Vec<f64>,
}

impl CorrelationVector {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != 2 * n {
            return Err(Error::Shape(format!(
                "{} entries for {n} players",
                entries.len()
            )));
        }
        if let Some(e) = entries.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::State(format!("probability {e} outside [0, 1]")));
        }
        Ok(Self { n, entries })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![0.0; 2 * n],
        }
    }

    /// The unit vector at coordinate `(s, x)`.
    pub fn unit(n: usize, s: usize, x: u8) -> Self {
        let mut v = Self::zeros(n);
        v.entries[index(n, s, x)] = 1.0;
        v
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// `p(0|s,x)`.
    pub fn get(&self, s: usize, x: u8) -> f64 {
        self.entries[index(self.n, s, x)]
    }

    /// Game score `(1/2n) Σ p(x|s,x)`.
    pub fn win_probability(&self) -> f64 {
        (lhs_form(self) + self.n as f64) / (2 * self.n) as f64
    }

    fn to_bits(&self) -> Option<Vec<i64>> {
        self.entries
            .iter()
            .map(|&e| match e {
                0.0 => Some(0),
                1.0 => Some(1),
                _ => None,
            })
            .collect()
    }
}

fn index(n: usize, s: usize, x: u8) -> usize {
    x as usize * n + s
}

/// A deterministic causal strategy.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CausalVertex {
    first: usize,
    /// `responses[s][x]`: what `s⁺` outputs when `s` sent `x`.
    responses: Vec<[u8; 2]>,
}

impl CausalVertex {
    pub fn new(first: usize, responses: Vec<[u8; 2]>) -> Result<Self> {
        let n = responses.len();
        check_n(n)?;
        if first >= n {
            return Err(Error::Label(format!("first party {first} of {n}")));
        }
        if responses.iter().flatten().any(|&a| a > 1) {
            return Err(Error::State("responses must be bits".to_string()));
        }
        let blind = predecessor(first, n);
        if responses[blind][0] != responses[blind][1] {
            return Err(Error::State(format!(
                "party {first} acts first, so its response to sender {blind} cannot depend on x"
            )));
        }
        Ok(Self { first, responses })
    }

    pub fn first(&self) -> usize {
        self.first
    }

    pub fn responses(&self) -> &[[u8; 2]] {
        &self.responses
    }

    pub fn correlation(&self) -> CorrelationVector {
        let n = self.responses.len();
        let mut v = CorrelationVector::zeros(n);
        for (s, r) in self.responses.iter().enumerate() {
            for x in 0..2u8 {
                v.entries[index(n, s, x)] = if r[x as usize] == 0 { 1.0 } else { 0.0 };
            }
        }
        v
    }
}

/// Every deterministic causal strategy, `n · 2 · 4^(n-1)` of them.
pub fn enumerate_raw_vertices(n: usize) -> Result<Vec<CausalVertex>> {
    check_n(n)?;
    let choices: [[u8; 2]; 4] = [[0, 0], [0, 1], [1, 0], [1, 1]];
    let mut out = Vec::with_capacity(n * 2 * 4usize.pow(n as u32 - 1));
    for first in 0..n {
        let blind = predecessor(first, n);
        let free: Vec<usize> = (0..n).filter(|&s| s != blind).collect();
        for constant in 0..2u8 {
            for code in 0..4usize.pow(free.len() as u32) {
                let mut responses = vec![[constant, constant]; n];
                let mut c = code;
                for &s in &free {
                    responses[s] = choices[c % 4];
                    c /= 4;
                }
                out.push(CausalVertex { first, responses });
            }
        }
    }
    Ok(out)
}

/// Deterministic causal strategies with distinct correlation vectors.
pub fn enumerate_vertices(n: usize) -> Result<Vec<CausalVertex>> {
    let mut seen = BTreeSet::new();
    Ok(enumerate_raw_vertices(n)?
        .into_iter()
        .filter(|v| seen.insert(v.correlation().to_bits().expect("vertices are 0/1")))
        .collect())
}

/// `Σ_{s,x} (-1)^x p(0|s,x)`; causal correlations keep this at most `n - 1`.
pub fn lhs_form(v: &CorrelationVector) -> f64 {
    let n = v.n;
    (0..n).map(|s| v.get(s, 0) - v.get(s, 1)).sum()
}

fn lhs_exact(bits: &[i64], n: usize) -> i64 {
    (0..n).map(|s| bits[s] - bits[n + s]).sum()
}

/// Largest game score of a causal strategy.
pub fn max_causal_win(n: usize) -> Result<f64> {
    let best = enumerate_vertices(n)?
        .iter()
        .map(|v| lhs_exact(&v.correlation().to_bits().unwrap(), n))
        .max()
        .expect("vertex set is never empty");
    // p_win = (LHS + n) / 2n as one division so the bound is hit exactly.
    Ok((best + n as i64) as f64 / (2 * n) as f64)
}

/// Rank of an integer matrix by fraction-free (Bareiss) elimination.
pub fn exact_rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&e| e as i128).collect())
        .collect();
    let (n_rows, n_cols) = (m.len(), m.first().map_or(0, Vec::len));
    let mut rank = 0;
    let mut prev: i128 = 1;
    for col in 0..n_cols {
        let Some(pivot) = (rank..n_rows).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        for r in rank + 1..n_rows {
            for c in col + 1..n_cols {
                m[r][c] = (m[rank][col] * m[r][c] - m[r][col] * m[rank][c]) / prev;
            }
            m[r][col] = 0;
        }
        prev = m[rank][col];
        rank += 1;
        if rank == n_rows {
            break;
        }
    }
    rank
}

/// Numerical rank from the singular values, relative tolerance `1e-9`.
pub fn float_rank(rows: &[Vec<f64>]) -> usize {
    if rows.is_empty() || rows[0].is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |r, c| rows[r][c]);
    let sv = m.singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-9 * max).count()
}

/// Affine rank of 0/1 points: the rank of their differences to the first one.
fn affine_ranks(points: &[Vec<i64>]) -> (usize, usize) {
    let Some((base, rest)) = points.split_first() else {
        return (0, 0);
    };
    let diffs: Vec<Vec<i64>> = rest
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    let float: Vec<Vec<f64>> = diffs
        .iter()
        .map(|r| r.iter().map(|&e| e as f64).collect())
        .collect();
    (exact_rank(&diffs), float_rank(&float))
}

/// Affine rank of the given correlation vectors, exact and floating point.
///
/// All entries must be 0 or 1.
pub fn affine_rank(points: &[CorrelationVector]) -> Result<(usize, usize)> {
    let bits = points
        .iter()
        .map(|p| {
            p.to_bits()
                .ok_or_else(|| Error::State("affine rank needs 0/1 vectors".to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(affine_ranks(&bits))
}

/// The strategy producing the unit vector at `(s, x)`: `s` goes first and its
/// successor outputs 0 only when told `x`; every other receiver outputs 1.
pub fn unit_vector_strategy(n: usize, s: usize, x: u8) -> Result<CausalVertex> {
    let mut responses = vec![[1u8, 1u8]; n];
    responses[s] = if x == 0 { [0, 1] } else { [1, 0] };
    CausalVertex::new(s, responses)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FullDimensionalityReport {
    pub n: usize,
    pub all_are_vertices: bool,
    pub affine_rank: usize,
    pub float_affine_rank: usize,
    pub passed: bool,
}

/// Checks that the zero vector and all `2n` unit vectors are causal vertices
/// with affine rank `2n`.
pub fn full_dimensionality(n: usize) -> Result<FullDimensionalityReport> {
    let vertices: BTreeSet<Vec<i64>> = enumerate_vertices(n)?
        .iter()
        .map(|v| v.correlation().to_bits().unwrap())
        .collect();
    let mut points = vec![CorrelationVector::zeros(n)];
    for x in 0..2u8 {
        for s in 0..n {
            points.push(CorrelationVector::unit(n, s, x));
        }
    }
    let all_are_vertices = points
        .iter()
        .all(|p| vertices.contains(&p.to_bits().unwrap()));
    let (affine_rank, float_affine_rank) = self::affine_rank(&points)?;
    Ok(FullDimensionalityReport {
        n,
        all_are_vertices,
        affine_rank,
        float_affine_rank,
        passed: all_are_vertices && affine_rank == 2 * n && float_affine_rank == affine_rank,
    })
}

/// `(1,…,1) ∥ e_k`: every receiver outputs `x`, except that sender `k`'s
/// receiver always outputs 0.
pub fn first_family(n: usize, k: usize) -> CorrelationVector {
    let mut v = CorrelationVector::zeros(n);
    for s in 0..n {
        v.entries[index(n, s, 0)] = 1.0;
    }
    v.entries[index(n, k, 1)] = 1.0;
    v
}

/// `(1 - e_k) ∥ 0`: like [`first_family`] but sender `k`'s receiver always outputs 1.
pub fn second_family(n: usize, k: usize) -> CorrelationVector {
    let mut v = CorrelationVector::zeros(n);
    for s in (0..n).filter(|&s| s != k) {
        v.entries[index(n, s, 0)] = 1.0;
    }
    v
}

/// Realizes either family vector: `k⁺` acts first and answers `k` with `constant`.
pub fn family_strategy(n: usize, k: usize, constant: u8) -> Result<CausalVertex> {
    let mut responses = vec![[0u8, 1u8]; n];
    responses[k] = [constant, constant];
    CausalVertex::new(successor(k, n), responses)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FacetReport {
    pub n: usize,
    pub family: Vec<CorrelationVector>,
    pub all_realized: bool,
    pub all_saturate: bool,
    pub family_affine_rank: usize,
    pub family_float_rank: usize,
    pub saturating_vertices: usize,
    pub saturating_affine_rank: usize,
    pub confirmed: bool,
}

/// Certifies that `Σ (-1)^x p(0|s,x) ≤ n - 1` is a facet of the causal polytope.
///
/// Uses the two explicit families of `n` saturating vectors each, and
/// cross-checks with every enumerated vertex that saturates the inequality.
pub fn facet_check(n: usize) -> Result<FacetReport> {
    let vertices = enumerate_vertices(n)?;
    let family: Vec<CorrelationVector> = (0..n)
        .map(|k| first_family(n, k))
        .chain((0..n).map(|k| second_family(n, k)))
        .collect();
    let mut all_realized = true;
    for k in 0..n {
        for (constant, target) in [(0u8, first_family(n, k)), (1u8, second_family(n, k))] {
            let vertex = family_strategy(n, k, constant)?;
            all_realized &= vertex.correlation() == target
                && vertices.iter().any(|v| v.correlation() == target);
        }
    }
    let bound = n as i64 - 1;
    let all_saturate = family
        .iter()
        .all(|v| lhs_exact(&v.to_bits().unwrap(), n) == bound);
    let (family_affine_rank, family_float_rank) = affine_rank(&family)?;

    let saturating: Vec<Vec<i64>> = vertices
        .iter()
        .map(|v| v.correlation().to_bits().unwrap())
        .filter(|b| lhs_exact(b, n) == bound)
        .collect();
    let (saturating_affine_rank, saturating_float) = affine_ranks(&saturating);

    let target = 2 * n - 1;
    Ok(FacetReport {
        n,
        family,
        all_realized,
        all_saturate,
        family_affine_rank,
        family_float_rank,
        saturating_vertices: saturating.len(),
        saturating_affine_rank,
        confirmed: all_realized
            && all_saturate
            && family_affine_rank == target
            && family_float_rank == target
            && saturating_affine_rank == target
            && saturating_float == target,
    })
}
