//! The hypothesize-and-test reconstruction engine.
//!
//! Given an unlabeled multiset of walk lengths, the engine exhaustively
//! tests ordered `D`-tuples of values as candidate `K_{d+2}` bases, grows
//! every accepted base by trilateration over ordered `(d+1)`-tuples of
//! unclaimed values, and finally returns the smallest-scale candidate among
//! those with the maximal point count. Acceptance of a tuple requires
//! membership in the unsquared measurement variety, a rational-rank
//! certificate, and a real realization; under the genericity hypotheses
//! every accepted tuple is veridical, so consuming the first passing growth
//! tuple per vertex is safe.

use std::collections::{BTreeMap, HashSet};

use nalgebra::{DMatrix, DVector};
use num_traits::Float;
use thiserror::Error;

use crate::edges::{edge_count, edge_index, edge_list};
use crate::geometry::{
    align_congruent, find_similar_subconfigurations, realize_simplex, trilaterate_point,
    Configuration,
};
use crate::measurement::{
    canonical_matrix_rational, canonical_walks, CanonicalKind, MeasurementMode, UnlabeledDataSet,
    Walk,
};
use crate::rank::{
    all_distinct, integer_relation_search, rank_bypass_restricted_3d, rational_rank_2d, RankError,
    RestrictedEnsembleAssumption,
};
use crate::scalar::Real;
use crate::variety::{is_singular_l24, on_unsquared_variety, VarietyPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconError {
    #[error(
        "reconstruction is not supported in dimension 1: the one-dimensional unsquared \
         variety is reducible, and unlabeled path data admits non-congruent explanations"
    )]
    DimensionOne,
    #[error("unsupported dimension {0}: only d = 2 and d = 3 are implemented")]
    UnsupportedDimension(usize),
    #[error(
        "d = 3 {0} reconstruction at b = {1} requires the restricted-ensemble assumption \
         (all pings and triangles through one vertex): the general rational-rank test \
         is O(b^90) and exceeds the enumeration budget"
    )]
    RestrictedAssumptionRequired(MeasurementMode, u32),
    #[error("no ordered value tuple passes the base tests")]
    NoBaseFound,
    #[error("two maximal candidates of equal scale are non-congruent")]
    AmbiguousResult,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Rank(#[from] RankError),
}

/// Every numeric threshold used by the engine, exposed because no
/// principled values exist: the bounded setting guarantees a separating
/// epsilon but not its value, so the defaults are empirical.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances<T> {
    /// Normalized variety-membership residual bound.
    pub membership: T,
    /// Relative distance bound for the singular-locus test.
    pub singular: T,
    /// Relative residual for integer relation acceptance.
    pub relation: T,
    /// Gram eigenvalue clamp for simplex realization.
    pub realize: T,
    /// Relative residual for trilateration consistency.
    pub trilateration: T,
    /// Relative tolerance for the distinctness bypass and duplicate points.
    pub distinct: T,
    /// Relative tolerance when grouping candidate scales.
    pub scale_group: T,
    /// Relative tolerance for final congruence comparisons.
    pub congruence: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            membership: T::from_f64_lossy(1e-7),
            singular: T::from_f64_lossy(1e-7),
            relation: T::from_f64_lossy(1e-9),
            realize: T::from_f64_lossy(1e-9),
            trilateration: T::from_f64_lossy(1e-8),
            distinct: T::from_f64_lossy(1e-9),
            scale_group: T::from_f64_lossy(1e-6),
            congruence: T::from_f64_lossy(1e-7),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ReconOpts<T> {
    pub tolerances: Tolerances<T>,
    /// Caller-asserted restricted-ensemble assumption for d = 3 loop data.
    pub restricted_3d: bool,
}

impl<T: Real> Default for ReconOpts<T> {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            restricted_3d: false,
        }
    }
}

/// Why a tuple was rejected; tallied in diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Rejection {
    /// A derived edge length was non-positive or broke a triangle screen.
    Screen,
    /// Off the measurement variety.
    Membership,
    /// A bounded rational relation exists (or values tie in restricted 3d).
    Rank,
    /// On the singular locus.
    Singularity,
    /// Gram matrix not realizable in the target dimension.
    Realizability,
    /// Trilateration residual too large.
    Inconsistency,
    /// The placed point coincides with an existing one.
    Duplicate,
}

impl Rejection {
    fn name(self) -> &'static str {
        match self {
            Rejection::Screen => "screen",
            Rejection::Membership => "membership",
            Rejection::Rank => "rank",
            Rejection::Singularity => "singularity",
            Rejection::Realizability => "realizability",
            Rejection::Inconsistency => "inconsistency",
            Rejection::Duplicate => "duplicate",
        }
    }
}

/// Outcome of a single tuple test; rejection is a value, not an error.
#[derive(Debug, Clone)]
pub enum TupleOutcome<A> {
    Accepted(A),
    Rejected(Rejection),
}

impl<A> TupleOutcome<A> {
    pub fn accepted(self) -> Option<A> {
        match self {
            TupleOutcome::Accepted(a) => Some(a),
            TupleOutcome::Rejected(_) => None,
        }
    }
}

/// One consumed data value and the walk hypothesis explaining it, over the
/// candidate's local vertex indices.
#[derive(Debug, Clone)]
pub struct Claim {
    pub value_index: usize,
    pub walk: Walk,
}

/// A partial reconstruction: placed points, consumed value indices with
/// their walk hypotheses, and the scale relative to the smallest maximal
/// candidate (1 until final selection).
#[derive(Debug, Clone)]
pub struct CandidateReconstruction<T: Real> {
    pub points: Configuration<T>,
    pub claims: Vec<Claim>,
    pub scale_hypothesis: T,
}

impl<T: Real> CandidateReconstruction<T> {
    pub fn claimed_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.claims.iter().map(|c| c.value_index).collect();
        v.sort_unstable();
        v
    }

    /// Worst relative deviation between each claimed data value and its walk
    /// hypothesis re-measured on the candidate points.
    pub fn soundness_residual(&self, values: &[T]) -> T {
        let mut worst = T::zero();
        for claim in &self.claims {
            let f = claim
                .walk
                .functional(self.points.len())
                .expect("claims index placed points");
            let got = f
                .evaluate(&self.points)
                .expect("claims index placed points");
            let want = values[claim.value_index];
            let denom = Float::max(Float::abs(want), T::one());
            worst = Float::max(worst, Float::abs(got - want) / denom);
        }
        worst
    }
}

/// Search counters and the final self-check residual.
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct Diagnostics {
    pub base_tuples_tested: u64,
    pub base_accepted: u64,
    pub growth_tuples_tested: u64,
    pub growth_accepted: u64,
    pub rejections: BTreeMap<String, u64>,
    pub candidates: usize,
    pub maximal_candidates: usize,
    pub candidate_scales: Vec<f64>,
    pub claimed_values: usize,
    pub data_values: usize,
    /// Worst relative deviation of claimed values re-measured on the output.
    pub soundness_residual: f64,
}

impl Diagnostics {
    fn reject(&mut self, r: Rejection) {
        *self.rejections.entry(r.name().to_string()).or_insert(0) += 1;
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult<T: Real> {
    pub n: usize,
    pub configuration: Configuration<T>,
    pub mode: MeasurementMode,
    /// Scale of the winner relative to the smallest maximal candidate
    /// (1 by construction; larger hypotheses appear in diagnostics).
    pub scale: T,
    pub claims: Vec<Claim>,
    pub diagnostics: Diagnostics,
}

impl<T: Real> ReconstructionResult<T> {
    /// Soundness: re-measuring the discovered walks on the output
    /// configuration reproduces the claimed data values.
    pub fn verify_against(&self, data: &UnlabeledDataSet<T>) -> T {
        CandidateReconstruction {
            points: self.configuration.clone(),
            claims: self.claims.clone(),
            scale_hypothesis: self.scale,
        }
        .soundness_residual(&data.values)
    }
}

/// How rational rank is certified for a mode/dimension pair.
#[derive(Debug, Clone, Copy)]
enum RankPolicy {
    /// d = 2: bounded relation search on the first three values (coefficients
    /// up to `b^2`) plus non-singularity.
    Planar { b: u32 },
    /// d = 3 loop under the caller-asserted restricted ensemble:
    /// distinctness of the ten values.
    RestrictedDistinct,
    /// Full bounded search over all `D` values; only feasible for unit
    /// bounds (edge mode).
    FullSearch { bound: u32 },
}

fn rank_policy(
    d: usize,
    mode: MeasurementMode,
    b: u32,
    restricted_3d: bool,
) -> Result<RankPolicy, ReconError> {
    match d {
        1 => Err(ReconError::DimensionOne),
        2 => Ok(RankPolicy::Planar {
            b: effective_bound(mode, b),
        }),
        3 => {
            if restricted_3d && mode == MeasurementMode::Loop {
                Ok(RankPolicy::RestrictedDistinct)
            } else {
                let b = effective_bound(mode, b);
                let bound = b
                    .checked_pow(9)
                    .ok_or(ReconError::RestrictedAssumptionRequired(mode, b))?;
                let candidates = (2u128 * bound as u128 + 1).pow(10);
                if candidates > crate::rank::SEARCH_BUDGET {
                    return Err(ReconError::RestrictedAssumptionRequired(mode, b));
                }
                Ok(RankPolicy::FullSearch { bound })
            }
        }
        d => Err(ReconError::UnsupportedDimension(d)),
    }
}

fn effective_bound(mode: MeasurementMode, b: u32) -> u32 {
    match mode {
        MeasurementMode::Edge => 1,
        _ => b.max(1),
    }
}

/// Precomputed per-run state: the exact inverses of the canonical
/// measurement matrices (loop mode only), converted once to the working
/// scalar type. The tuple tests run millions of times per reconstruction;
/// rebuilding the rational inverses inside them dominates everything else.
#[derive(Debug, Clone)]
pub struct EngineContext<T: Real> {
    base_inverse: Option<DMatrix<T>>,
    trilat_inverse: Option<DMatrix<T>>,
}

impl<T: Real> EngineContext<T> {
    pub fn new(d: usize, mode: MeasurementMode) -> Self {
        match mode {
            MeasurementMode::Loop => {
                let base = canonical_matrix_rational(CanonicalKind::Base, d)
                    .inverse()
                    .expect("canonical base matrices are nonsingular");
                let trilat = canonical_matrix_rational(CanonicalKind::Trilat, d)
                    .inverse()
                    .expect("canonical trilateration matrices are nonsingular");
                Self {
                    base_inverse: Some(base.to_real()),
                    trilat_inverse: Some(trilat.to_real()),
                }
            }
            _ => Self {
                base_inverse: None,
                trilat_inverse: None,
            },
        }
    }
}

/// Tests an ordered `D`-tuple of values as the canonical base measurements
/// of a `K_{d+2}`: inverts the canonical matrix in loop mode, then runs
/// membership, rank certification, and real realization. Acceptance yields
/// the simplex in canonical pose together with the scale placeholder 1; the
/// true scale is resolved against other candidates at selection time.
pub fn test_base_tuple<T: Real>(
    w: &[T],
    d: usize,
    mode: MeasurementMode,
    b: u32,
    opts: &ReconOpts<T>,
) -> Result<TupleOutcome<(Configuration<T>, T)>, ReconError> {
    test_base_tuple_in(&EngineContext::new(d, mode), w, d, mode, b, opts)
}

fn test_base_tuple_in<T: Real>(
    ctx: &EngineContext<T>,
    w: &[T],
    d: usize,
    mode: MeasurementMode,
    b: u32,
    opts: &ReconOpts<T>,
) -> Result<TupleOutcome<(Configuration<T>, T)>, ReconError> {
    let dd = edge_count(d + 2);
    if w.len() != dd {
        return Err(ReconError::Invalid(format!(
            "base tuples have {dd} values in d = {d}, got {}",
            w.len()
        )));
    }
    let policy = rank_policy(d, mode, b, opts.restricted_3d)?;
    let lengths = match mode {
        MeasurementMode::Loop => apply_matrix(
            ctx.base_inverse.as_ref().expect("loop context"),
            w,
        ),
        _ => w.to_vec(),
    };
    if lengths.iter().any(|&l| !(l > T::zero())) {
        return Ok(TupleOutcome::Rejected(Rejection::Screen));
    }
    if let Some(rejection) = membership_and_rank(&lengths, w, d, policy, &opts.tolerances)? {
        return Ok(TupleOutcome::Rejected(rejection));
    }
    let squared: Vec<T> = lengths.iter().map(|&l| l * l).collect();
    match realize_simplex(&squared, d, opts.tolerances.realize) {
        Ok(config) => Ok(TupleOutcome::Accepted((config, T::one()))),
        Err(_) => Ok(TupleOutcome::Rejected(Rejection::Realizability)),
    }
}

/// Membership and rank tests shared by the base path. `lengths` is the
/// edge-length interpretation, `w` the raw measured tuple.
fn membership_and_rank<T: Real>(
    lengths: &[T],
    w: &[T],
    d: usize,
    policy: RankPolicy,
    tols: &Tolerances<T>,
) -> Result<Option<Rejection>, ReconError> {
    let point = VarietyPoint::new(d, lengths.to_vec())
        .map_err(|e| ReconError::Invalid(e.to_string()))?;
    if !on_unsquared_variety(&point, tols.membership).on_variety {
        return Ok(Some(Rejection::Membership));
    }
    match policy {
        RankPolicy::Planar { b } => {
            let larr: [T; 6] = core::array::from_fn(|i| lengths[i]);
            let singular = is_singular_l24(&larr, tols.singular);
            let warr: [T; 6] = core::array::from_fn(|i| w[i]);
            let report = rational_rank_2d(&warr, b, tols.relation, singular)?;
            if report.found_relation.is_some() {
                return Ok(Some(Rejection::Rank));
            }
            if report.singular {
                return Ok(Some(Rejection::Singularity));
            }
        }
        RankPolicy::RestrictedDistinct => {
            let arr: [T; 10] = core::array::from_fn(|i| w[i]);
            let report =
                rank_bypass_restricted_3d(&arr, RestrictedEnsembleAssumption(true), tols.distinct)?;
            if !report.certified_full {
                return Ok(Some(Rejection::Rank));
            }
        }
        RankPolicy::FullSearch { bound } => {
            let (relation, _) = integer_relation_search(w, bound, tols.relation)?;
            if relation.is_some() {
                return Ok(Some(Rejection::Rank));
            }
        }
    }
    Ok(None)
}

/// Tests an ordered `(d+1)`-tuple of values as the trilateration
/// measurements of one new point off `base` (points in anchor order):
/// assembles the full `D`-vector with the known base edges, inverts the
/// canonical trilateration matrix in loop mode, and runs membership, the
/// rank fast path (the base-edge functionals are independent by
/// construction), and trilateration. Values are divided by `scale` first.
pub fn test_growth_tuple<T: Real>(
    base: &Configuration<T>,
    w: &[T],
    mode: MeasurementMode,
    scale: T,
    b: u32,
    opts: &ReconOpts<T>,
) -> Result<TupleOutcome<DVector<T>>, ReconError> {
    test_growth_tuple_in(
        &EngineContext::new(base.dimension(), mode),
        base,
        w,
        mode,
        scale,
        b,
        opts,
    )
}

fn test_growth_tuple_in<T: Real>(
    ctx: &EngineContext<T>,
    base: &Configuration<T>,
    w: &[T],
    mode: MeasurementMode,
    scale: T,
    b: u32,
    opts: &ReconOpts<T>,
) -> Result<TupleOutcome<DVector<T>>, ReconError> {
    let d = base.dimension();
    if base.len() != d + 1 || w.len() != d + 1 {
        return Err(ReconError::Invalid(format!(
            "growth tuples have {} values over {} base points in d = {d}",
            d + 1,
            d + 1
        )));
    }
    let policy = rank_policy(d, mode, b, opts.restricted_3d)?;
    let c = edge_count(d + 1);
    let dd = edge_count(d + 2);
    let mut assembled: Vec<T> = Vec::with_capacity(dd);
    assembled.extend(base.edge_lengths());
    assembled.extend(w.iter().map(|&v| v / scale));
    let lengths = match mode {
        MeasurementMode::Loop => apply_matrix(
            ctx.trilat_inverse.as_ref().expect("loop context"),
            &assembled,
        ),
        _ => assembled.clone(),
    };
    if lengths[c..].iter().any(|&l| !(l > T::zero())) {
        return Ok(TupleOutcome::Rejected(Rejection::Screen));
    }
    let point =
        VarietyPoint::new(d, lengths.clone()).map_err(|e| ReconError::Invalid(e.to_string()))?;
    if !on_unsquared_variety(&point, opts.tolerances.membership).on_variety {
        return Ok(TupleOutcome::Rejected(Rejection::Membership));
    }
    match policy {
        RankPolicy::Planar { .. } => {
            let arr: [T; 6] = core::array::from_fn(|i| lengths[i]);
            if is_singular_l24(&arr, opts.tolerances.singular) {
                return Ok(TupleOutcome::Rejected(Rejection::Singularity));
            }
        }
        RankPolicy::RestrictedDistinct => {
            if !all_distinct(&lengths, opts.tolerances.distinct) {
                return Ok(TupleOutcome::Rejected(Rejection::Rank));
            }
        }
        RankPolicy::FullSearch { bound } => {
            let (relation, _) =
                integer_relation_search(&assembled, bound, opts.tolerances.relation)?;
            if relation.is_some() {
                return Ok(TupleOutcome::Rejected(Rejection::Rank));
            }
        }
    }
    let squared: Vec<T> = lengths[c..].iter().map(|&l| l * l).collect();
    match trilaterate_point(base, &squared, opts.tolerances.trilateration) {
        Ok(p) => Ok(TupleOutcome::Accepted(p)),
        Err(_) => Ok(TupleOutcome::Rejected(Rejection::Inconsistency)),
    }
}

fn apply_matrix<T: Real>(m: &DMatrix<T>, v: &[T]) -> Vec<T> {
    let x = DVector::from_column_slice(v);
    (m * x).iter().copied().collect()
}

/// Reconstructs a configuration from unlabeled data. The data must arise
/// from an ensemble that allows trilateration over a pseudo-generic
/// configuration. Dimension 1 is refused outright; d = 3 path/loop
/// reconstruction requires the restricted-ensemble flag.
pub fn reconstruct<T: Real>(
    data: &UnlabeledDataSet<T>,
    mode: MeasurementMode,
    opts: &ReconOpts<T>,
) -> Result<ReconstructionResult<T>, ReconError> {
    let d = data.dimension;
    let b = effective_bound(mode, data.bound);
    rank_policy(d, mode, b, opts.restricted_3d)?;
    let ctx = EngineContext::new(d, mode);
    let mut diag = Diagnostics {
        data_values: data.values.len(),
        ..Diagnostics::default()
    };
    let mut candidates = search_bases(&ctx, data, mode, b, opts, &mut diag)?;
    if candidates.is_empty() {
        return Err(ReconError::NoBaseFound);
    }
    for cand in candidates.iter_mut() {
        grow_candidate(&ctx, cand, data, mode, b, opts, &mut diag)?;
    }
    diag.candidates = candidates.len();
    select_winner(candidates, data, mode, opts, diag)
}

/// Boutin-Kemper mode: a complete shuffled edge-length multiset. Same
/// engine in edge mode at unit bound; a short data set is not an error here
/// (trilateration may still cover a subset; diagnostics expose the
/// shortfall).
pub fn reconstruct_edges_complete<T: Real>(
    data: &UnlabeledDataSet<T>,
    n: usize,
    d: usize,
    opts: &ReconOpts<T>,
) -> Result<ReconstructionResult<T>, ReconError> {
    if data.dimension != d {
        return Err(ReconError::Invalid(format!(
            "data dimension {} does not match requested d = {d}",
            data.dimension
        )));
    }
    if data.values.len() > edge_count(n) {
        return Err(ReconError::Invalid(format!(
            "{} values exceed the {} edges of K_{n}",
            data.values.len(),
            edge_count(n)
        )));
    }
    let edge_data = UnlabeledDataSet {
        values: data.values.clone(),
        dimension: d,
        bound: 1,
    };
    reconstruct(&edge_data, MeasurementMode::Edge, opts)
}

/// Exhaustive base search: combinations of `D` value indices in sorted
/// value order, then a depth-first ordered assignment to the canonical
/// slots with positivity and triangle screens, then the full tuple tests on
/// surviving assignments. Accepted bases are deduplicated by claimed index
/// set (orders of one set that pass are vertex relabelings of one simplex).
fn search_bases<T: Real>(
    ctx: &EngineContext<T>,
    data: &UnlabeledDataSet<T>,
    mode: MeasurementMode,
    b: u32,
    opts: &ReconOpts<T>,
    diag: &mut Diagnostics,
) -> Result<Vec<CandidateReconstruction<T>>, ReconError> {
    let d = data.dimension;
    let dd = edge_count(d + 2);
    let values = &data.values;
    if values.len() < dd {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());

    let walks = base_walks(mode, d);
    let mut seen_claims: HashSet<Vec<usize>> = HashSet::new();
    let mut out = Vec::new();
    let mut combo: Vec<usize> = (0..dd).collect();
    loop {
        let pool: Vec<usize> = combo.iter().map(|&k| order[k]).collect();
        assign_base_slots(
            ctx,
            values,
            &pool,
            mode,
            d,
            b,
            opts,
            &walks,
            &mut seen_claims,
            &mut out,
            diag,
        )?;
        if !next_combination(&mut combo, values.len()) {
            break;
        }
    }
    Ok(out)
}

/// Walk hypotheses for the base slots, over local vertices `0..d+2`.
fn base_walks(mode: MeasurementMode, d: usize) -> Vec<Walk> {
    match mode {
        MeasurementMode::Loop => canonical_walks(CanonicalKind::Base, d),
        _ => edge_list(d + 2)
            .into_iter()
            .map(|(i, j)| Walk::edge(i, j))
            .collect(),
    }
}

/// Depth-first assignment of pool values to base slots. Slot `k` determines
/// the `k`-th edge (fixed edge order) of the hypothesized simplex, so
/// positivity and triangle screens apply incrementally.
#[allow(clippy::too_many_arguments)]
fn assign_base_slots<T: Real>(
    ctx: &EngineContext<T>,
    values: &[T],
    pool: &[usize],
    mode: MeasurementMode,
    d: usize,
    b: u32,
    opts: &ReconOpts<T>,
    walks: &[Walk],
    seen_claims: &mut HashSet<Vec<usize>>,
    out: &mut Vec<CandidateReconstruction<T>>,
    diag: &mut Diagnostics,
) -> Result<(), ReconError> {
    let dd = pool.len();
    let edges = edge_list(d + 2);
    let mut assignment: Vec<usize> = Vec::new();
    let mut used = vec![false; dd];
    let mut lengths: Vec<T> = vec![T::zero(); dd];
    let mut choice_stack: Vec<usize> = vec![0];
    while let Some(next_choice) = choice_stack.last_mut() {
        let slot = assignment.len();
        let mut chosen = None;
        while *next_choice < dd {
            let k = *next_choice;
            *next_choice += 1;
            if used[k] {
                continue;
            }
            let w = values[pool[k]];
            let l = edge_length_from_slot(&lengths, &edges, mode, slot, w);
            if screen_edge(&lengths, &edges, d, slot, l) {
                chosen = Some((k, l));
                break;
            }
            diag.reject(Rejection::Screen);
        }
        let Some((k, l)) = chosen else {
            choice_stack.pop();
            if let Some(k) = assignment.pop() {
                used[k] = false;
            }
            continue;
        };
        used[k] = true;
        assignment.push(k);
        lengths[slot] = l;
        if assignment.len() == dd {
            diag.base_tuples_tested += 1;
            let w: Vec<T> = assignment.iter().map(|&k| values[pool[k]]).collect();
            match test_base_tuple_in(ctx, &w, d, mode, b, opts)? {
                TupleOutcome::Accepted((config, _scale)) => {
                    let mut claim_set: Vec<usize> =
                        assignment.iter().map(|&k| pool[k]).collect();
                    claim_set.sort_unstable();
                    if seen_claims.insert(claim_set) {
                        diag.base_accepted += 1;
                        let claims = assignment
                            .iter()
                            .zip(walks)
                            .map(|(&k, walk)| Claim {
                                value_index: pool[k],
                                walk: walk.clone(),
                            })
                            .collect();
                        out.push(CandidateReconstruction {
                            points: config,
                            claims,
                            scale_hypothesis: T::one(),
                        });
                    }
                }
                TupleOutcome::Rejected(r) => diag.reject(r),
            }
            let k = assignment.pop().unwrap();
            used[k] = false;
        } else {
            choice_stack.push(0);
        }
    }
    Ok(())
}

/// The edge length determined by assigning measured value `w` to `slot`.
fn edge_length_from_slot<T: Real>(
    lengths: &[T],
    edges: &[(usize, usize)],
    mode: MeasurementMode,
    slot: usize,
    w: T,
) -> T {
    match mode {
        MeasurementMode::Loop => {
            let (i, j) = edges[slot];
            if i == 0 {
                // Ping slot [0, j, 0]: the edge twice.
                w / T::from_f64_lossy(2.0)
            } else {
                // Triangle slot [0, i, j, 0]: subtract the two known edges
                // at vertex 0 (their slots precede this one).
                let l0i = lengths[edge_index(0, i)];
                let l0j = lengths[edge_index(0, j)];
                w - l0i - l0j
            }
        }
        _ => w,
    }
}

/// Positivity plus the triangle inequality against every already-determined
/// triangle this edge closes. Necessary conditions for a real realization;
/// the tolerant slack keeps veridical tuples alive through roundoff.
fn screen_edge<T: Real>(
    lengths: &[T],
    edges: &[(usize, usize)],
    d: usize,
    slot: usize,
    l: T,
) -> bool {
    if !(l > T::zero()) || !Float::is_finite(l) {
        return false;
    }
    let (i, j) = edges[slot];
    for k in 0..d + 2 {
        if k == i || k == j {
            continue;
        }
        let eik = edge_index(i.min(k), i.max(k));
        let ejk = edge_index(j.min(k), j.max(k));
        if eik < slot && ejk < slot {
            let a = lengths[eik];
            let b = lengths[ejk];
            let slack = T::from_f64_lossy(1e-9) * (a + b + l);
            if l > a + b + slack || l < Float::abs(a - b) - slack {
                return false;
            }
        }
    }
    true
}

/// Grows a candidate until no ordered value tuple trilaterates a new point:
/// scans anchor subsets and unclaimed value tuples in deterministic order
/// and consumes the first acceptance per new vertex.
fn grow_candidate<T: Real>(
    ctx: &EngineContext<T>,
    cand: &mut CandidateReconstruction<T>,
    data: &UnlabeledDataSet<T>,
    mode: MeasurementMode,
    b: u32,
    opts: &ReconOpts<T>,
    diag: &mut Diagnostics,
) -> Result<(), ReconError> {
    let d = data.dimension;
    loop {
        let claimed: HashSet<usize> = cand.claims.iter().map(|c| c.value_index).collect();
        let unclaimed: Vec<usize> = (0..data.values.len())
            .filter(|i| !claimed.contains(i))
            .collect();
        if unclaimed.len() < d + 1 {
            return Ok(());
        }
        match find_growth(ctx, cand, data, &unclaimed, mode, b, opts, diag)? {
            Some((point, claims)) => {
                cand.points.push(point);
                cand.claims.extend(claims);
            }
            None => return Ok(()),
        }
    }
}

/// One growth round: the first passing (anchors, values) pair, if any.
fn find_growth<T: Real>(
    ctx: &EngineContext<T>,
    cand: &CandidateReconstruction<T>,
    data: &UnlabeledDataSet<T>,
    unclaimed: &[usize],
    mode: MeasurementMode,
    b: u32,
    opts: &ReconOpts<T>,
    diag: &mut Diagnostics,
) -> Result<Option<(DVector<T>, Vec<Claim>)>, ReconError> {
    let d = data.dimension;
    for anchors in anchor_subsets(cand.points.len(), d, mode) {
        let base = cand.points.subconfiguration(&anchors);
        let mut tuple: Vec<usize> = Vec::with_capacity(d + 1);
        let mut new_lengths: Vec<T> = Vec::with_capacity(d + 1);
        if let Some(hit) = growth_value_dfs(
            ctx,
            cand,
            data,
            unclaimed,
            &anchors,
            &base,
            mode,
            b,
            opts,
            &mut tuple,
            &mut new_lengths,
            diag,
        )? {
            return Ok(Some(hit));
        }
    }
    Ok(None)
}

/// Anchor index sequences over the placed points: in loop mode the first
/// anchor is distinguished (the ping and all triangles pass through it);
/// in path mode a sorted subset suffices since the ordered value tuples
/// cover all pairings.
fn anchor_subsets(k: usize, d: usize, mode: MeasurementMode) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k < d + 1 {
        return out;
    }
    let mut subset: Vec<usize> = (0..d + 1).collect();
    loop {
        match mode {
            MeasurementMode::Loop => {
                for lead in 0..subset.len() {
                    let mut s = subset.clone();
                    s.swap(0, lead);
                    s[1..].sort_unstable();
                    out.push(s);
                }
            }
            _ => out.push(subset.clone()),
        }
        if !next_combination(&mut subset, k) {
            break;
        }
    }
    out
}

/// Depth-first scan over ordered unclaimed value tuples with incremental
/// positivity and triangle screens; full growth tests run on complete
/// tuples and the first acceptance wins.
#[allow(clippy::too_many_arguments)]
fn growth_value_dfs<T: Real>(
    ctx: &EngineContext<T>,
    cand: &CandidateReconstruction<T>,
    data: &UnlabeledDataSet<T>,
    unclaimed: &[usize],
    anchors: &[usize],
    base: &Configuration<T>,
    mode: MeasurementMode,
    b: u32,
    opts: &ReconOpts<T>,
    tuple: &mut Vec<usize>,
    new_lengths: &mut Vec<T>,
    diag: &mut Diagnostics,
) -> Result<Option<(DVector<T>, Vec<Claim>)>, ReconError> {
    let d = base.dimension();
    if tuple.len() == d + 1 {
        diag.growth_tuples_tested += 1;
        let w: Vec<T> = tuple.iter().map(|&i| data.values[i]).collect();
        match test_growth_tuple_in(ctx, base, &w, mode, T::one(), b, opts)? {
            TupleOutcome::Accepted(point) => {
                // A placement coinciding with an existing point comes from
                // redundant measurements of a known vertex; generic truth
                // has no coincident points, so reject it.
                let dup_tol = T::from_f64_lossy(1e-6)
                    * Float::max(cand.points.rms_edge_length(), T::one());
                if cand
                    .points
                    .points()
                    .iter()
                    .any(|p| (p - &point).norm() <= dup_tol)
                {
                    diag.reject(Rejection::Duplicate);
                    return Ok(None);
                }
                diag.growth_accepted += 1;
                let new_local = cand.points.len();
                let claims = growth_claims(mode, anchors, new_local, tuple);
                return Ok(Some((point, claims)));
            }
            TupleOutcome::Rejected(r) => {
                diag.reject(r);
                return Ok(None);
            }
        }
    }
    let pos = tuple.len();
    'next_value: for &vi in unclaimed {
        if tuple.contains(&vi) {
            continue;
        }
        let v = data.values[vi];
        // The length from the new point to anchor `pos` this value implies.
        let new_len = match mode {
            MeasurementMode::Loop => {
                if pos == 0 {
                    v / T::from_f64_lossy(2.0)
                } else {
                    // Triangle [a0, a_pos, new]: subtract the known anchor
                    // edge and the ping-derived length.
                    v - base.distance(0, pos) - new_lengths[0]
                }
            }
            _ => v,
        };
        if !(new_len > T::zero()) || !Float::is_finite(new_len) {
            diag.reject(Rejection::Screen);
            continue;
        }
        for (aslot, &alen) in new_lengths.iter().enumerate() {
            let between = base.distance(aslot, pos);
            let slack = T::from_f64_lossy(1e-9) * (alen + between + new_len);
            if new_len > alen + between + slack || new_len < Float::abs(alen - between) - slack {
                diag.reject(Rejection::Screen);
                continue 'next_value;
            }
        }
        tuple.push(vi);
        new_lengths.push(new_len);
        if let Some(hit) = growth_value_dfs(
            ctx,
            cand,
            data,
            unclaimed,
            anchors,
            base,
            mode,
            b,
            opts,
            tuple,
            new_lengths,
            diag,
        )? {
            return Ok(Some(hit));
        }
        tuple.pop();
        new_lengths.pop();
    }
    Ok(None)
}

/// Walk hypotheses for an accepted growth step, over candidate-local
/// vertex indices.
fn growth_claims(
    mode: MeasurementMode,
    anchors: &[usize],
    new_local: usize,
    tuple: &[usize],
) -> Vec<Claim> {
    match mode {
        MeasurementMode::Loop => {
            let mut claims = vec![Claim {
                value_index: tuple[0],
                walk: Walk::ping(anchors[0], new_local),
            }];
            for (slot, &vi) in tuple.iter().enumerate().skip(1) {
                claims.push(Claim {
                    value_index: vi,
                    walk: Walk::triangle(anchors[0], anchors[slot], new_local),
                });
            }
            claims
        }
        _ => anchors
            .iter()
            .zip(tuple)
            .map(|(&a, &vi)| Claim {
                value_index: vi,
                walk: Walk::edge(a, new_local),
            })
            .collect(),
    }
}

/// Final selection: maximal point count, then smallest scale. Maximal
/// candidates are similar copies of the truth in the generic case, so their
/// sizes relative to the smallest are the scale hypotheses. Equal-scale
/// winners must agree up to congruence and relabeling; disagreement is
/// surfaced, never resolved silently.
fn select_winner<T: Real>(
    candidates: Vec<CandidateReconstruction<T>>,
    data: &UnlabeledDataSet<T>,
    mode: MeasurementMode,
    opts: &ReconOpts<T>,
    mut diag: Diagnostics,
) -> Result<ReconstructionResult<T>, ReconError> {
    let max_n = candidates.iter().map(|c| c.points.len()).max().unwrap();
    let mut maximal: Vec<CandidateReconstruction<T>> = candidates
        .into_iter()
        .filter(|c| c.points.len() == max_n)
        .collect();
    let min_size = maximal
        .iter()
        .map(|c| c.points.rms_edge_length())
        .fold(<T as Float>::infinity(), Float::min);
    for cand in maximal.iter_mut() {
        cand.scale_hypothesis = cand.points.rms_edge_length() / min_size;
    }
    diag.maximal_candidates = maximal.len();
    diag.candidate_scales = maximal
        .iter()
        .map(|c| c.scale_hypothesis.to_f64_lossy())
        .collect();
    let winners: Vec<usize> = (0..maximal.len())
        .filter(|&i| maximal[i].scale_hypothesis - T::one() <= opts.tolerances.scale_group)
        .collect();
    let first = winners[0];
    for &other in &winners[1..] {
        if !congruent_up_to_relabeling(
            &maximal[first].points,
            &maximal[other].points,
            opts.tolerances.congruence,
        ) {
            return Err(ReconError::AmbiguousResult);
        }
    }
    let winner = maximal.swap_remove(first);
    diag.claimed_values = winner.claims.len();
    diag.soundness_residual = winner.soundness_residual(&data.values).to_f64_lossy();
    Ok(ReconstructionResult {
        n: winner.points.len(),
        configuration: winner.points.canonical_pose(),
        mode,
        scale: winner.scale_hypothesis,
        claims: winner.claims,
        diagnostics: diag,
    })
}

/// Whether two equal-size configurations are congruent after some vertex
/// relabeling.
pub fn congruent_up_to_relabeling<T: Real>(
    a: &Configuration<T>,
    b: &Configuration<T>,
    tol: T,
) -> bool {
    if a.len() != b.len() || a.dimension() != b.dimension() {
        return false;
    }
    if b.len() < 3 {
        return true;
    }
    find_similar_subconfigurations(a, b, tol)
        .into_iter()
        .any(|(_, scale)| Float::abs(scale - T::one()) <= tol * T::from_f64_lossy(10.0))
}

/// Vertex matching and similarity of a reconstruction against the ground
/// truth.
#[derive(Debug, Clone)]
pub struct MatchReport<T> {
    /// `truth[truth_indices[k]]` corresponds to `result` point `k`.
    pub truth_indices: Vec<usize>,
    /// `truth_indices` subconfiguration matches `scale * result`.
    pub scale: T,
    /// RMSD after scale correction and optimal congruence.
    pub rmsd: T,
}

/// Finds the vertex correspondence between a reconstruction and the truth
/// and reports the post-alignment RMSD (scale-corrected). `None` when no
/// similarity matching exists at the tolerance.
pub fn match_to_truth<T: Real>(
    result: &Configuration<T>,
    truth: &Configuration<T>,
    tol: T,
) -> Option<MatchReport<T>> {
    let hits = find_similar_subconfigurations(truth, result, tol);
    let (truth_indices, scale) = hits.into_iter().next()?;
    let matched = truth.subconfiguration(&truth_indices);
    let align = align_congruent(&result.scaled(scale), &matched).ok()?;
    Some(MatchReport {
        truth_indices,
        scale,
        rmsd: align.residual_rmsd,
    })
}

fn next_combination(subset: &mut [usize], n: usize) -> bool {
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
