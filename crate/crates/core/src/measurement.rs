//! Paths, loops, length functionals, measurement ensembles, and the
//! canonical base/trilateration measurement matrices.
//!
//! A walk over the vertices of `K_n` measures the sum of the lengths of its
//! edges, counted with multiplicity; two walks are the same measurement
//! exactly when their edge multisets agree. An ensemble of walks evaluated
//! against a configuration produces an unlabeled multiset of values — the
//! only thing the reconstruction side ever sees.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::edges::{edge_count, edge_list};
use crate::geometry::Configuration;
use crate::ratmat::RationalMatrix;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasurementError {
    #[error("walk is invalid: {0}")]
    InvalidWalk(String),
    #[error("vertex index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WalkKind {
    Path,
    Loop,
}

/// A walk `[i_1, ..., i_z]` over graph vertices with no vertex immediately
/// repeated. It is a loop exactly when the endpoints coincide. Equality is
/// edge-multiset equality: the measured length only depends on which edges
/// are traversed how often.
#[derive(Debug, Clone, Eq)]
pub struct Walk {
    vertices: Vec<usize>,
}

impl Walk {
    pub fn new(vertices: Vec<usize>) -> Result<Self, MeasurementError> {
        if vertices.len() < 2 {
            return Err(MeasurementError::InvalidWalk(
                "a walk traverses at least one edge".into(),
            ));
        }
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(MeasurementError::InvalidWalk(
                "no vertex may be immediately repeated".into(),
            ));
        }
        Ok(Self { vertices })
    }

    pub fn edge(i: usize, j: usize) -> Self {
        Self::new(vec![i, j]).expect("distinct endpoints")
    }

    /// The loop `[i, j, i]` traversing one edge twice.
    pub fn ping(i: usize, j: usize) -> Self {
        Self::new(vec![i, j, i]).expect("distinct endpoints")
    }

    /// The loop `[i, j, k, i]` over three distinct edges.
    pub fn triangle(i: usize, j: usize, k: usize) -> Self {
        Self::new(vec![i, j, k, i]).expect("distinct vertices")
    }

    pub fn kind(&self) -> WalkKind {
        if self.vertices.first() == self.vertices.last() {
            WalkKind::Loop
        } else {
            WalkKind::Path
        }
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn max_vertex(&self) -> usize {
        *self.vertices.iter().max().unwrap()
    }

    /// Edge multiset with multiplicities.
    pub fn edge_multiset(&self) -> BTreeMap<(usize, usize), u32> {
        let mut out = BTreeMap::new();
        for w in self.vertices.windows(2) {
            let key = (w[0].min(w[1]), w[0].max(w[1]));
            *out.entry(key).or_insert(0) += 1;
        }
        out
    }

    /// Largest edge multiplicity.
    pub fn bound(&self) -> u32 {
        self.edge_multiset().values().copied().max().unwrap_or(0)
    }

    pub fn is_b_bounded(&self, b: u32) -> bool {
        self.bound() <= b
    }

    /// The walk with the same edges at `s` times their multiplicity: a loop
    /// is traversed `s` times, an open path is retraced back and forth.
    pub fn scaled(&self, s: u32) -> Self {
        assert!(s >= 1);
        let mut vertices = self.vertices.clone();
        match self.kind() {
            WalkKind::Loop => {
                for _ in 1..s {
                    vertices.extend_from_slice(&self.vertices[1..]);
                }
            }
            WalkKind::Path => {
                for pass in 1..s {
                    if pass % 2 == 1 {
                        vertices.extend(self.vertices.iter().rev().skip(1));
                    } else {
                        vertices.extend(self.vertices.iter().skip(1));
                    }
                }
            }
        }
        Self { vertices }
    }

    /// Remaps vertex `v` to `relabel[v]`.
    pub fn relabeled(&self, relabel: &[usize]) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&v| relabel[v]).collect(),
        }
    }

    /// The whole length functional measuring this walk over `K_n`.
    pub fn functional(&self, n: usize) -> Result<LengthFunctional, MeasurementError> {
        let max = self.max_vertex();
        if max >= n {
            return Err(MeasurementError::IndexOutOfRange { index: max, n });
        }
        let coeffs = self
            .edge_multiset()
            .into_iter()
            .map(|(e, mult)| (e, Rational64::from_integer(mult as i64)))
            .collect();
        Ok(LengthFunctional { n, coeffs })
    }
}

impl PartialEq for Walk {
    fn eq(&self, other: &Self) -> bool {
        self.edge_multiset() == other.edge_multiset()
    }
}

/// A linear functional over the `N` unsquared edge lengths of `K_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LengthFunctional {
    n: usize,
    coeffs: BTreeMap<(usize, usize), Rational64>,
}

impl LengthFunctional {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn from_coefficients(
        n: usize,
        coeffs: BTreeMap<(usize, usize), Rational64>,
    ) -> Result<Self, MeasurementError> {
        for &(i, j) in coeffs.keys() {
            if i >= j {
                return Err(MeasurementError::InvalidArguments(
                    "edge keys must satisfy i < j".into(),
                ));
            }
            if j >= n {
                return Err(MeasurementError::IndexOutOfRange { index: j, n });
            }
        }
        Ok(Self {
            n,
            coeffs: coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coefficient(&self, i: usize, j: usize) -> Rational64 {
        let key = (i.min(j), i.max(j));
        self.coeffs.get(&key).copied().unwrap_or_else(Rational64::zero)
    }

    pub fn coefficients(&self) -> &BTreeMap<(usize, usize), Rational64> {
        &self.coeffs
    }

    /// All coefficients are non-negative integers.
    pub fn is_whole(&self) -> bool {
        self.coeffs
            .values()
            .all(|c| c.is_integer() && !c.is_negative())
    }

    /// All coefficient magnitudes are at most `b`.
    pub fn is_b_bounded(&self, b: u32) -> bool {
        let bound = Rational64::from_integer(b as i64);
        self.coeffs.values().all(|c| c.abs() <= bound)
    }

    /// Sum of coefficients over edges incident to `v`.
    pub fn vertex_degree(&self, v: usize) -> Rational64 {
        self.coeffs
            .iter()
            .filter(|(&(i, j), _)| i == v || j == v)
            .map(|(_, c)| *c)
            .sum()
    }

    pub fn scaled(&self, s: i64) -> Self {
        Self {
            n: self.n,
            coeffs: self
                .coeffs
                .iter()
                .map(|(&e, c)| (e, c * Rational64::from_integer(s)))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    /// Row vector over the fixed edge order of `K_n`.
    pub fn dense_row(&self) -> Vec<Rational64> {
        let mut row = vec![Rational64::zero(); edge_count(self.n)];
        for (&(i, j), &c) in &self.coeffs {
            row[crate::edges::edge_index(i, j)] = c;
        }
        row
    }

    /// Applies the functional to a configuration's edge lengths.
    pub fn evaluate<T: Real>(&self, config: &Configuration<T>) -> Result<T, MeasurementError> {
        let mut total = T::zero();
        for (&(i, j), c) in &self.coeffs {
            if j >= config.len() {
                return Err(MeasurementError::IndexOutOfRange {
                    index: j,
                    n: config.len(),
                });
            }
            total += T::from_f64_lossy(c.to_f64().unwrap()) * config.distance(i, j);
        }
        Ok(total)
    }
}

/// Stacks functionals into a `k x N` rational matrix, one row per
/// functional.
pub fn ensemble_matrix(
    functionals: &[LengthFunctional],
) -> Result<Vec<Vec<Rational64>>, MeasurementError> {
    if let Some(first) = functionals.first() {
        if functionals.iter().any(|f| f.n != first.n) {
            return Err(MeasurementError::InvalidArguments(
                "functionals must share the vertex count".into(),
            ));
        }
    }
    Ok(functionals.iter().map(|f| f.dense_row()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementMode {
    Path,
    Loop,
    Edge,
}

impl std::fmt::Display for MeasurementMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MeasurementMode::Path => write!(f, "path"),
            MeasurementMode::Loop => write!(f, "loop"),
            MeasurementMode::Edge => write!(f, "edge"),
        }
    }
}

/// An ordered list of walks over `K_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementEnsemble {
    pub mode: MeasurementMode,
    pub n: usize,
    pub walks: Vec<Walk>,
}

impl MeasurementEnsemble {
    pub fn new(
        mode: MeasurementMode,
        n: usize,
        walks: Vec<Walk>,
    ) -> Result<Self, MeasurementError> {
        for w in &walks {
            if w.max_vertex() >= n {
                return Err(MeasurementError::IndexOutOfRange {
                    index: w.max_vertex(),
                    n,
                });
            }
            match mode {
                MeasurementMode::Loop => {
                    if w.kind() != WalkKind::Loop {
                        return Err(MeasurementError::InvalidArguments(
                            "loop ensembles may only contain loops".into(),
                        ));
                    }
                }
                MeasurementMode::Edge => {
                    if w.vertices().len() != 2 {
                        return Err(MeasurementError::InvalidArguments(
                            "edge ensembles may only contain single edges".into(),
                        ));
                    }
                }
                MeasurementMode::Path => {}
            }
        }
        Ok(Self { mode, n, walks })
    }

    pub fn functionals(&self) -> Vec<LengthFunctional> {
        self.walks
            .iter()
            .map(|w| w.functional(self.n).expect("validated on construction"))
            .collect()
    }

    pub fn is_b_bounded(&self, b: u32) -> bool {
        self.walks.iter().all(|w| w.is_b_bounded(b))
    }

    /// Every walk at `s` times its edge multiplicities.
    pub fn scaled(&self, s: u32) -> Self {
        Self {
            mode: self.mode,
            n: self.n,
            walks: self.walks.iter().map(|w| w.scaled(s)).collect(),
        }
    }

    /// Concatenates two ensembles over the same vertex set.
    pub fn merged(&self, other: &Self) -> Result<Self, MeasurementError> {
        if self.n != other.n || self.mode != other.mode {
            return Err(MeasurementError::InvalidArguments(
                "merged ensembles must share n and mode".into(),
            ));
        }
        let mut walks = self.walks.clone();
        walks.extend(other.walks.iter().cloned());
        Self::new(self.mode, self.n, walks)
    }

    /// Measures the configuration and shuffles the values by `seed`,
    /// producing the unlabeled data set.
    pub fn evaluate<T: Real>(
        &self,
        config: &Configuration<T>,
        bound: u32,
        seed: u64,
    ) -> Result<UnlabeledDataSet<T>, MeasurementError> {
        let values = self.evaluate_labeled(config)?;
        let mut ds = UnlabeledDataSet {
            values,
            dimension: config.dimension(),
            bound,
        };
        ds.shuffle(seed);
        Ok(ds)
    }

    /// Values in ensemble order, without the unlabeling shuffle.
    pub fn evaluate_labeled<T: Real>(
        &self,
        config: &Configuration<T>,
    ) -> Result<Vec<T>, MeasurementError> {
        self.walks
            .iter()
            .map(|w| w.functional(self.n)?.evaluate(config))
            .collect()
    }
}

/// A multiset of measurement values with the dimension and edge-multiplicity
/// bound they were collected under; carries no labeling.
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledDataSet<T: Real> {
    pub values: Vec<T>,
    pub dimension: usize,
    pub bound: u32,
}

impl<T: Real> UnlabeledDataSet<T> {
    /// Deterministic reshuffle; value order never carries information.
    pub fn shuffle(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_da7a);
        self.values.shuffle(&mut rng);
    }
}

/// Which canonical loop measurement pattern over a `K_{d+2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonicalKind {
    /// All pings and triangles through the first vertex: identifies a
    /// `K_{d+2}` from scratch.
    Base,
    /// The edges of the leading `K_{d+1}` plus one ping and `d` triangles
    /// through the first vertex to the new last vertex: trilateration.
    Trilat,
}

/// The walks behind the canonical measurement matrix, in row order. The
/// first `C(d+1, 2)` rows are supported on the edges of the leading `d + 1`
/// vertices.
pub fn canonical_walks(kind: CanonicalKind, d: usize) -> Vec<Walk> {
    assert!(d >= 1);
    let last = d + 1;
    let mut walks = Vec::with_capacity(edge_count(d + 2));
    match kind {
        CanonicalKind::Base => {
            for j in 1..=last {
                walks.push(Walk::ping(0, j));
                for k in 1..j {
                    walks.push(Walk::triangle(0, k, j));
                }
            }
        }
        CanonicalKind::Trilat => {
            for (i, j) in edge_list(d + 1) {
                walks.push(Walk::edge(i, j));
            }
            walks.push(Walk::ping(0, last));
            for k in 1..=d {
                walks.push(Walk::triangle(0, k, last));
            }
        }
    }
    walks
}

/// The planar canonical matrices, fixed by hand; the programmatic
/// construction must reproduce them (checked in tests).
const BASE_MATRIX_2D: [[i64; 6]; 6] = [
    [2, 0, 0, 0, 0, 0],
    [0, 2, 0, 0, 0, 0],
    [1, 1, 1, 0, 0, 0],
    [0, 0, 0, 2, 0, 0],
    [1, 0, 0, 1, 1, 0],
    [0, 1, 0, 1, 0, 1],
];

const TRILAT_MATRIX_2D: [[i64; 6]; 6] = [
    [1, 0, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 0],
    [0, 0, 1, 0, 0, 0],
    [0, 0, 0, 2, 0, 0],
    [1, 0, 0, 1, 1, 0],
    [0, 1, 0, 1, 0, 1],
];

/// The `D x D` integer canonical measurement matrix: row `r` holds the edge
/// multiplicities of the `r`-th canonical walk over the fixed edge order.
pub fn canonical_matrix(kind: CanonicalKind, d: usize) -> DMatrix<i64> {
    assert!(d >= 1, "canonical matrices need d >= 1");
    if d == 2 {
        let fixed = match kind {
            CanonicalKind::Base => &BASE_MATRIX_2D,
            CanonicalKind::Trilat => &TRILAT_MATRIX_2D,
        };
        return DMatrix::from_fn(6, 6, |i, j| fixed[i][j]);
    }
    canonical_matrix_programmatic(kind, d)
}

/// Builds the matrix from the canonical walks, for any dimension.
pub fn canonical_matrix_programmatic(kind: CanonicalKind, d: usize) -> DMatrix<i64> {
    let walks = canonical_walks(kind, d);
    let size = edge_count(d + 2);
    let mut m = DMatrix::zeros(size, size);
    for (r, w) in walks.iter().enumerate() {
        for ((i, j), mult) in w.edge_multiset() {
            m[(r, crate::edges::edge_index(i, j))] = mult as i64;
        }
    }
    m
}

/// Exact rational form of the canonical matrix, for inversion.
pub fn canonical_matrix_rational(kind: CanonicalKind, d: usize) -> RationalMatrix {
    let m = canonical_matrix(kind, d);
    let rows: Vec<Vec<i64>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect();
    RationalMatrix::from_integer_rows(&rows)
}

/// Simulates a measurement ensemble that allows for trilateration over a
/// seed-chosen vertex order: a base `K_{d+2}` pattern, a trilateration
/// sequence for every further vertex, and `extra` additional random
/// `b`-bounded walks.
pub fn build_trilateration_ensemble(
    n: usize,
    d: usize,
    mode: MeasurementMode,
    extra: usize,
    b: u32,
    seed: u64,
) -> Result<MeasurementEnsemble, MeasurementError> {
    if mode == MeasurementMode::Edge {
        return Err(MeasurementError::InvalidArguments(
            "edge mode measures the complete edge set; use build_complete_edge_ensemble".into(),
        ));
    }
    if n < d + 2 {
        return Err(MeasurementError::InvalidArguments(format!(
            "need n >= d + 2 = {}, got n = {n}",
            d + 2
        )));
    }
    if mode == MeasurementMode::Loop && b < 2 {
        return Err(MeasurementError::InvalidArguments(
            "loop ensembles need b >= 2: a ping traverses its edge twice".into(),
        ));
    }
    if b < 1 {
        return Err(MeasurementError::InvalidArguments("need b >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3a5e);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mut walks = Vec::new();
    match mode {
        MeasurementMode::Path => {
            for (i, j) in edge_list(d + 2) {
                walks.push(Walk::edge(order[i], order[j]));
            }
        }
        MeasurementMode::Loop => {
            for w in canonical_walks(CanonicalKind::Base, d) {
                walks.push(w.relabeled(&order));
            }
        }
        MeasurementMode::Edge => unreachable!(),
    }
    for j in d + 2..n {
        // d + 1 previously placed anchors, the first one distinguished in
        // loop mode.
        let mut anchors: Vec<usize> = (0..j).collect();
        anchors.shuffle(&mut rng);
        anchors.truncate(d + 1);
        let new = order[j];
        match mode {
            MeasurementMode::Path => {
                for &a in &anchors {
                    walks.push(Walk::edge(order[a], new));
                }
            }
            MeasurementMode::Loop => {
                walks.push(Walk::ping(order[anchors[0]], new));
                for &a in &anchors[1..] {
                    walks.push(Walk::triangle(order[anchors[0]], order[a], new));
                }
            }
            MeasurementMode::Edge => unreachable!(),
        }
    }
    for _ in 0..extra {
        let w = random_bounded_walk(n, mode, b, &walks, &mut rng)?;
        walks.push(w);
    }
    MeasurementEnsemble::new(mode, n, walks)
}

/// The complete edge set of `K_n`, one walk per edge in the fixed order.
pub fn build_complete_edge_ensemble(n: usize) -> Result<MeasurementEnsemble, MeasurementError> {
    if n < 2 {
        return Err(MeasurementError::InvalidArguments("need n >= 2".into()));
    }
    let walks = edge_list(n)
        .into_iter()
        .map(|(i, j)| Walk::edge(i, j))
        .collect();
    MeasurementEnsemble::new(MeasurementMode::Edge, n, walks)
}

fn random_bounded_walk(
    n: usize,
    mode: MeasurementMode,
    b: u32,
    existing: &[Walk],
    rng: &mut ChaCha8Rng,
) -> Result<Walk, MeasurementError> {
    for _ in 0..1000 {
        // Length capped so a b-bounded walk of this length exists; sequences
        // that exceed the per-edge bound are rejected below. Walks whose
        // functional is already in the ensemble are rejected so that generic
        // data sets have pairwise distinct values.
        let vertices = match mode {
            MeasurementMode::Loop => {
                let interior = rng.gen_range(2..=(2 * b as usize));
                let mut seq = no_repeat_sequence(n, interior, rng);
                if seq[0] == *seq.last().unwrap() {
                    continue;
                }
                seq.push(seq[0]);
                seq
            }
            _ => no_repeat_sequence(n, rng.gen_range(2..=(2 * b as usize + 1)), rng),
        };
        let Ok(walk) = Walk::new(vertices) else {
            continue;
        };
        if walk.is_b_bounded(b) && !existing.contains(&walk) {
            return Ok(walk);
        }
    }
    Err(MeasurementError::InvalidArguments(
        "could not sample a bounded walk".into(),
    ))
}

fn no_repeat_sequence(n: usize, len: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut seq = Vec::with_capacity(len);
    seq.push(rng.gen_range(0..n));
    while seq.len() < len {
        let prev = *seq.last().unwrap();
        let mut next = rng.gen_range(0..n);
        while next == prev {
            next = rng.gen_range(0..n);
        }
        seq.push(next);
    }
    seq
}

/// Independent structural check that an ensemble allows for trilateration:
/// searches for a base `K_{d+2}` pattern and then greedily for per-vertex
/// trilateration sequences until every vertex in `0..n` is covered.
pub fn allows_trilateration(ensemble: &MeasurementEnsemble, d: usize) -> bool {
    let n = ensemble.n;
    if n < d + 2 {
        return false;
    }
    let walks = &ensemble.walks;
    // Try every (d+2)-subset as the base, every member as the distinguished
    // vertex in loop mode.
    let mut base_vertices: Vec<usize> = (0..d + 2).collect();
    loop {
        let bases: Vec<Vec<usize>> = match ensemble.mode {
            MeasurementMode::Loop => {
                // Any rotation: the distinguished vertex is any of the d+2.
                (0..d + 2)
                    .map(|k| {
                        let mut v = base_vertices.clone();
                        v.swap(0, k);
                        v
                    })
                    .collect()
            }
            _ => vec![base_vertices.clone()],
        };
        for base in bases {
            if has_base_pattern(walks, ensemble.mode, &base, d)
                && can_grow_everywhere(walks, ensemble.mode, &base, n, d)
            {
                return true;
            }
        }
        if !next_subset(&mut base_vertices, n) {
            return false;
        }
    }
}

fn has_base_pattern(walks: &[Walk], mode: MeasurementMode, base: &[usize], d: usize) -> bool {
    let needed: Vec<Walk> = match mode {
        MeasurementMode::Loop => canonical_walks(CanonicalKind::Base, d)
            .into_iter()
            .map(|w| w.relabeled(base))
            .collect(),
        _ => edge_list(d + 2)
            .into_iter()
            .map(|(i, j)| Walk::edge(base[i], base[j]))
            .collect(),
    };
    contains_all(walks, &needed)
}

fn can_grow_everywhere(
    walks: &[Walk],
    mode: MeasurementMode,
    base: &[usize],
    n: usize,
    d: usize,
) -> bool {
    let mut placed: Vec<bool> = vec![false; n];
    for &v in base {
        placed[v] = true;
    }
    let mut progress = true;
    while progress {
        progress = false;
        for v in 0..n {
            if placed[v] {
                continue;
            }
            if can_trilaterate(walks, mode, &placed, v, d) {
                placed[v] = true;
                progress = true;
            }
        }
    }
    placed.iter().all(|&p| p)
}

fn can_trilaterate(walks: &[Walk], mode: MeasurementMode, placed: &[bool], v: usize, d: usize) -> bool {
    let anchors: Vec<usize> = (0..placed.len()).filter(|&u| placed[u]).collect();
    match mode {
        MeasurementMode::Loop => {
            // One distinguished anchor with a ping, plus d triangles through
            // it to distinct other anchors.
            for &a0 in &anchors {
                if !walks.contains(&Walk::ping(a0, v)) {
                    continue;
                }
                let count = anchors
                    .iter()
                    .filter(|&&a| a != a0 && walks.contains(&Walk::triangle(a0, a, v)))
                    .count();
                if count >= d {
                    return true;
                }
            }
            false
        }
        _ => {
            let count = anchors
                .iter()
                .filter(|&&a| walks.contains(&Walk::edge(a, v)))
                .count();
            count >= d + 1
        }
    }
}

fn contains_all(walks: &[Walk], needed: &[Walk]) -> bool {
    needed.iter().all(|w| walks.contains(w))
}

fn next_subset(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < n - (k - i) {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_pseudo_generic;
    use approx::assert_relative_eq;

    #[test]
    fn walk_validation() {
        assert!(Walk::new(vec![0]).is_err());
        assert!(Walk::new(vec![0, 0]).is_err());
        assert!(Walk::new(vec![0, 1, 1, 2]).is_err());
        assert_eq!(Walk::new(vec![0, 1, 0]).unwrap().kind(), WalkKind::Loop);
        assert_eq!(Walk::new(vec![0, 1, 2]).unwrap().kind(), WalkKind::Path);
    }

    #[test]
    fn walk_equality_is_edge_multiset_equality() {
        // Same triangle traversed from different start points.
        assert_eq!(Walk::triangle(0, 1, 2), Walk::new(vec![1, 2, 0, 1]).unwrap());
        // Reversal preserves edges.
        assert_eq!(
            Walk::new(vec![0, 1, 2]).unwrap(),
            Walk::new(vec![2, 1, 0]).unwrap()
        );
        assert_ne!(Walk::ping(0, 1), Walk::edge(0, 1));
    }

    #[test]
    fn ping_functional_has_coefficient_two() {
        let f = Walk::ping(0, 1).functional(4).unwrap();
        assert_eq!(f.coefficient(0, 1), Rational64::from_integer(2));
        assert_eq!(f.coefficient(0, 2), Rational64::zero());
        assert!(f.is_whole());
        assert!(f.is_b_bounded(2));
        assert!(!f.is_b_bounded(1));
    }

    #[test]
    fn triangle_and_path_functionals() {
        let t = Walk::triangle(0, 1, 2).functional(4).unwrap();
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            assert_eq!(t.coefficient(i, j), Rational64::from_integer(1));
        }
        // The path [1, 0, 2] measures edges {0,1} and {0,2}.
        let p = Walk::new(vec![1, 0, 2]).unwrap().functional(3).unwrap();
        assert_eq!(p.coefficient(0, 1), Rational64::from_integer(1));
        assert_eq!(p.coefficient(0, 2), Rational64::from_integer(1));
        assert_eq!(p.coefficient(1, 2), Rational64::zero());
    }

    #[test]
    fn evaluate_examples() {
        let config = Configuration::from_coords(2, &[vec![0.0, 0.0], vec![3.0, 4.0]]);
        let e = MeasurementEnsemble::new(MeasurementMode::Loop, 2, vec![Walk::ping(0, 1)]).unwrap();
        let ds = e.evaluate(&config, 2, 0).unwrap();
        assert_relative_eq!(ds.values[0], 10.0);

        let empty = MeasurementEnsemble::new(MeasurementMode::Path, 2, vec![]).unwrap();
        assert!(empty.evaluate(&config, 1, 0).unwrap().values.is_empty());

        let square = Configuration::from_coords(
            2,
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]],
        );
        let edges = build_complete_edge_ensemble(4).unwrap();
        let mut values = edges.evaluate(&square, 1, 7).unwrap().values;
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let s2 = 2f64.sqrt();
        for (got, want) in values.iter().zip([1.0, 1.0, 1.0, 1.0, s2, s2]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn evaluate_rejects_out_of_range_vertices() {
        let config = Configuration::from_coords(2, &[vec![0.0, 0.0], vec![1.0, 0.0]]);
        let f = Walk::ping(0, 3).functional(4).unwrap();
        assert!(matches!(
            f.evaluate(&config),
            Err(MeasurementError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn planar_canonical_matrices_match_print() {
        let base = canonical_matrix(CanonicalKind::Base, 2);
        let expected = [
            [2, 0, 0, 0, 0, 0],
            [0, 2, 0, 0, 0, 0],
            [1, 1, 1, 0, 0, 0],
            [0, 0, 0, 2, 0, 0],
            [1, 0, 0, 1, 1, 0],
            [0, 1, 0, 1, 0, 1],
        ];
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(base[(i, j)], expected[i][j]);
            }
        }
        let trilat = canonical_matrix(CanonicalKind::Trilat, 2);
        for i in 0..3 {
            for j in 0..6 {
                assert_eq!(trilat[(i, j)], i64::from(i == j));
            }
        }
        // Last three rows agree with the base matrix rows for the new vertex.
        for i in 3..6 {
            for j in 0..6 {
                assert_eq!(trilat[(i, j)], base[(i, j)]);
            }
        }
    }

    #[test]
    fn hardcoded_planar_matrices_match_programmatic_construction() {
        for kind in [CanonicalKind::Base, CanonicalKind::Trilat] {
            assert_eq!(
                canonical_matrix(kind, 2),
                canonical_matrix_programmatic(kind, 2)
            );
        }
    }

    #[test]
    fn base_matrix_determinant_is_nonzero() {
        // Frozen from exact expansion: det N_base = 8 for d = 2.
        let det = canonical_matrix_rational(CanonicalKind::Base, 2).determinant();
        assert_eq!(det, num_rational::BigRational::from_integer(8.into()));
        let det3 = canonical_matrix_rational(CanonicalKind::Base, 3).determinant();
        assert!(!det3.is_zero());
    }

    #[test]
    fn canonical_row_support_property() {
        // First C rows live on the first C edge slots, for d = 2 and 3.
        for d in [2usize, 3] {
            let c = edge_count(d + 1);
            for kind in [CanonicalKind::Base, CanonicalKind::Trilat] {
                let m = canonical_matrix(kind, d);
                for i in 0..c {
                    for j in c..m.ncols() {
                        assert_eq!(m[(i, j)], 0, "d={d} row {i} col {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn figure_loops_reproduce_base_matrix() {
        // Three pings and three triangles at a common vertex, stacked, give
        // exactly the base measurement matrix.
        let walks = canonical_walks(CanonicalKind::Base, 2);
        let functionals: Vec<LengthFunctional> =
            walks.iter().map(|w| w.functional(4).unwrap()).collect();
        let rows = ensemble_matrix(&functionals).unwrap();
        let base = canonical_matrix(CanonicalKind::Base, 2);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v, Rational64::from_integer(base[(i, j)]));
            }
        }
    }

    #[test]
    fn ensemble_matrix_unit_row_and_empty() {
        let f = Walk::edge(0, 2).functional(4).unwrap();
        let rows = ensemble_matrix(&[f]).unwrap();
        assert_eq!(rows.len(), 1);
        let want: Vec<i64> = vec![0, 1, 0, 0, 0, 0];
        for (v, w) in rows[0].iter().zip(want) {
            assert_eq!(*v, Rational64::from_integer(w));
        }
        assert!(ensemble_matrix(&[]).unwrap().is_empty());
    }

    #[test]
    fn trilateration_ensemble_counts_and_bounds() {
        // n=4 loop: exactly the base pattern, 3 pings + 3 triangles at a
        // common vertex.
        let e = build_trilateration_ensemble(4, 2, MeasurementMode::Loop, 0, 2, 42).unwrap();
        assert_eq!(e.walks.len(), 6);
        let pings = e.walks.iter().filter(|w| w.vertices().len() == 3).count();
        assert_eq!(pings, 3);
        let tris = e.walks.iter().filter(|w| w.vertices().len() == 4).count();
        assert_eq!(tris, 3);
        // Common endpoint vertex.
        let first = e.walks[0].vertices()[0];
        assert!(e.walks.iter().all(|w| w.vertices()[0] == first));

        // n=5 path: 6 base edges + 3 trilateration edges.
        let e = build_trilateration_ensemble(5, 2, MeasurementMode::Path, 0, 2, 1).unwrap();
        assert_eq!(e.walks.len(), 9);

        // extras are loops and 3-bounded.
        let e = build_trilateration_ensemble(4, 2, MeasurementMode::Loop, 2, 3, 5).unwrap();
        assert_eq!(e.walks.len(), 8);
        assert!(e.walks.iter().all(|w| w.kind() == WalkKind::Loop));
        assert!(e.is_b_bounded(3));
    }

    #[test]
    fn trilateration_ensemble_rejects_bad_arguments() {
        assert!(build_trilateration_ensemble(3, 2, MeasurementMode::Loop, 0, 2, 0).is_err());
        assert!(build_trilateration_ensemble(4, 2, MeasurementMode::Loop, 0, 1, 0).is_err());
        assert!(build_trilateration_ensemble(4, 2, MeasurementMode::Edge, 0, 1, 0).is_err());
    }

    #[test]
    fn built_ensembles_pass_independent_checker() {
        for seed in 0..20 {
            for (mode, b) in [(MeasurementMode::Path, 1), (MeasurementMode::Loop, 2)] {
                let e = build_trilateration_ensemble(6, 2, mode, 2, b.max(2), seed).unwrap();
                assert!(allows_trilateration(&e, 2), "seed {seed} mode {mode}");
            }
        }
        for seed in 0..5 {
            let e = build_trilateration_ensemble(6, 3, MeasurementMode::Loop, 0, 2, seed).unwrap();
            assert!(allows_trilateration(&e, 3), "seed {seed} d=3");
        }
        // A non-example: too few walks.
        let e = MeasurementEnsemble::new(
            MeasurementMode::Path,
            4,
            vec![Walk::edge(0, 1), Walk::edge(1, 2)],
        )
        .unwrap();
        assert!(!allows_trilateration(&e, 2));
    }

    #[test]
    fn loop_parity_and_path_parity() {
        for seed in 0..10 {
            let e = build_trilateration_ensemble(6, 2, MeasurementMode::Loop, 3, 2, seed).unwrap();
            for f in e.functionals() {
                for v in 0..6 {
                    let deg = f.vertex_degree(v);
                    assert!(deg.is_integer());
                    assert_eq!(deg.to_integer() % 2, 0, "loops have even degrees");
                }
            }
            let e = build_trilateration_ensemble(6, 2, MeasurementMode::Path, 3, 2, seed).unwrap();
            for (w, f) in e.walks.iter().zip(e.functionals()) {
                let odd = (0..6)
                    .filter(|&v| f.vertex_degree(v).to_integer() % 2 == 1)
                    .count();
                match w.kind() {
                    WalkKind::Path => {
                        assert_eq!(odd, 2, "open paths have odd degree at exactly two vertices")
                    }
                    WalkKind::Loop => assert_eq!(odd, 0, "closed walks have even degrees"),
                }
            }
        }
    }

    #[test]
    fn evaluate_is_linear_under_merge_and_scale() {
        let config = sample_pseudo_generic::<f64>(5, 2, 8, 1.0).unwrap();
        let a = build_trilateration_ensemble(5, 2, MeasurementMode::Loop, 1, 2, 3).unwrap();
        let b = build_trilateration_ensemble(5, 2, MeasurementMode::Loop, 2, 2, 4).unwrap();
        let merged = a.merged(&b).unwrap();
        let mut lhs = merged.evaluate_labeled(&config).unwrap();
        let mut rhs = a.evaluate_labeled(&config).unwrap();
        rhs.extend(b.evaluate_labeled(&config).unwrap());
        lhs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        rhs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (x, y) in lhs.iter().zip(rhs) {
            assert_relative_eq!(*x, y, epsilon = 1e-12);
        }
        // Scaling a walk by s multiplies its value by s.
        for s in [2u32, 3] {
            let scaled = a.scaled(s);
            let base_vals = a.evaluate_labeled(&config).unwrap();
            let scaled_vals = scaled.evaluate_labeled(&config).unwrap();
            for (x, y) in base_vals.iter().zip(scaled_vals) {
                assert_relative_eq!(x * s as f64, y, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn generic_values_are_pairwise_distinct() {
        for seed in 0..20 {
            let config = sample_pseudo_generic::<f64>(6, 2, seed, 1.0).unwrap();
            let e =
                build_trilateration_ensemble(6, 2, MeasurementMode::Loop, 3, 2, seed).unwrap();
            let mut values = e.evaluate_labeled(&config).unwrap();
            values.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for w in values.windows(2) {
                assert!(w[1] - w[0] > 1e-9, "seed {seed}: near-tie {:?}", w);
            }
        }
    }

    #[test]
    fn dataset_shuffle_is_deterministic() {
        let config = sample_pseudo_generic::<f64>(5, 2, 8, 1.0).unwrap();
        let e = build_trilateration_ensemble(5, 2, MeasurementMode::Loop, 2, 2, 3).unwrap();
        let d1 = e.evaluate(&config, 2, 99).unwrap();
        let d2 = e.evaluate(&config, 2, 99).unwrap();
        assert_eq!(d1, d2);
    }

    #[test]
    fn scaled_walks_multiply_multiplicities() {
        let ping = Walk::ping(0, 1);
        let scaled = ping.scaled(2);
        assert_eq!(scaled.edge_multiset()[&(0, 1)], 4);
        let tri = Walk::triangle(0, 1, 2).scaled(3);
        for (_, m) in tri.edge_multiset() {
            assert_eq!(m, 3);
        }
        let path = Walk::new(vec![0, 1, 2]).unwrap().scaled(2);
        for (_, m) in path.edge_multiset() {
            assert_eq!(m, 2);
        }
        assert_eq!(path.kind(), WalkKind::Loop); // retraced path closes up
    }
}
