//! Rational-rank testing of measurement tuples.
//!
//! A tuple of measurement values can only be trusted as the image of
//! independent functionals when no small integer relation holds among them.
//! For bounded integer functionals, any linear dependence among `k` values
//! is witnessed by integer coefficients of magnitude at most `b^(k-1)`, so a
//! bounded enumeration is a complete test. In the plane there is a shortcut:
//! full rank (six) follows from rank three on any size-3 subset plus
//! non-singularity of the tuple in the unsquared variety, which keeps the
//! search at `O(b^6)`. In three dimensions the analogous full search is
//! `O(b^90)` and is refused by the enumeration guard; the supported path is
//! the restricted-ensemble assumption under which distinctness of the ten
//! values suffices.

use num_traits::Float;
use thiserror::Error;

use crate::scalar::Real;

/// Enumeration ceiling for the relation search.
pub const SEARCH_BUDGET: u128 = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankError {
    #[error("relation search needs at least two values")]
    TooFewValues,
    #[error("enumeration of {candidates} candidate relations exceeds the {budget} budget")]
    BudgetExceeded { candidates: u128, budget: u128 },
    #[error("the restricted-ensemble test requires the caller to assert the assumption")]
    AssumptionNotAsserted,
}

/// Outcome of a rational-rank test.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalRankReport {
    pub rank_lower_bound: usize,
    pub certified_full: bool,
    /// A bounded integer relation on the tested values, when one was found.
    pub found_relation: Option<Vec<i64>>,
    /// Whether the tuple sat on a singular subspace (2d shortcut only).
    pub singular: bool,
    /// Number of candidate coefficient vectors examined.
    pub search_budget_used: u128,
}

/// Searches for a nonzero integer vector `c` with `|c_i| <= coeff_bound` and
/// `|sum c_i w_i| <= tol * |w| * |c|`. Vectors are enumerated by increasing
/// max-norm, lexicographically within a shell, and the first hit is
/// returned. `None` means no bounded relation exists at this tolerance.
pub fn integer_relation_search<T: Real>(
    w: &[T],
    coeff_bound: u32,
    tol: T,
) -> Result<(Option<Vec<i64>>, u128), RankError> {
    let k = w.len();
    if k < 2 {
        return Err(RankError::TooFewValues);
    }
    let candidates = (2u128 * coeff_bound as u128 + 1).pow(k as u32);
    if candidates > SEARCH_BUDGET {
        return Err(RankError::BudgetExceeded {
            candidates,
            budget: SEARCH_BUDGET,
        });
    }
    let w_norm = Float::sqrt(w.iter().map(|&v| v * v).sum::<T>());
    let mut used: u128 = 0;
    let mut c = vec![0i64; k];
    for shell in 1..=coeff_bound as i64 {
        if let Some(hit) = search_shell(w, w_norm, tol, shell, 0, &mut c, &mut used) {
            return Ok((Some(hit), used));
        }
    }
    Ok((None, used))
}

/// Lexicographic scan of the vectors with max-norm exactly `shell`.
fn search_shell<T: Real>(
    w: &[T],
    w_norm: T,
    tol: T,
    shell: i64,
    pos: usize,
    c: &mut Vec<i64>,
    used: &mut u128,
) -> Option<Vec<i64>> {
    if pos == c.len() {
        if c.iter().all(|&v| v.abs() < shell) {
            return None; // interior of the shell, already visited
        }
        *used += 1;
        let mut sum = T::zero();
        let mut c_sq = 0i64;
        for (ci, wi) in c.iter().zip(w) {
            sum += T::from_f64_lossy(*ci as f64) * *wi;
            c_sq += ci * ci;
        }
        let c_norm = Float::sqrt(T::from_f64_lossy(c_sq as f64));
        if Float::abs(sum) <= tol * w_norm * c_norm {
            return Some(c.clone());
        }
        return None;
    }
    for v in -shell..=shell {
        c[pos] = v;
        if let Some(hit) = search_shell(w, w_norm, tol, shell, pos + 1, c, used) {
            return Some(hit);
        }
    }
    c[pos] = 0;
    None
}

/// Planar full-rank certificate for a six-value tuple that already passed
/// the variety membership test: full rank holds exactly when the first three
/// values admit no integer relation with coefficients bounded by `b^2` and
/// the tuple is non-singular in the unsquared variety. The singularity flag
/// is computed by the caller (variety module) on the edge-length
/// interpretation of the tuple.
pub fn rational_rank_2d<T: Real>(
    w: &[T; 6],
    b: u32,
    tol: T,
    l24_singular: bool,
) -> Result<RationalRankReport, RankError> {
    let bound = b.saturating_mul(b);
    let (relation, used) = integer_relation_search(&w[..3], bound, tol)?;
    let independent_triple = relation.is_none();
    Ok(RationalRankReport {
        rank_lower_bound: if independent_triple { 3 } else { 1 },
        certified_full: independent_triple && !l24_singular,
        found_relation: relation,
        singular: l24_singular,
        search_budget_used: used,
    })
}

/// Marker that the caller asserts the restricted-ensemble assumption:
/// every measurement is a ping or triangle through one common vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RestrictedEnsembleAssumption(pub bool);

/// Three-dimensional bypass: under the restricted-ensemble assumption, ten
/// pairwise-distinct values have full rational rank; no search is run.
/// Refuses to answer when the assumption is not asserted.
pub fn rank_bypass_restricted_3d<T: Real>(
    w: &[T; 10],
    assumption: RestrictedEnsembleAssumption,
    tol: T,
) -> Result<RationalRankReport, RankError> {
    if !assumption.0 {
        return Err(RankError::AssumptionNotAsserted);
    }
    let distinct = all_distinct(w, tol);
    Ok(RationalRankReport {
        rank_lower_bound: if distinct { 10 } else { 1 },
        certified_full: distinct,
        found_relation: if distinct {
            None
        } else {
            first_equal_pair_relation(w, tol)
        },
        singular: false,
        search_budget_used: 0,
    })
}

/// Pairwise distinctness to relative tolerance.
pub fn all_distinct<T: Real>(w: &[T], tol: T) -> bool {
    let scale = w
        .iter()
        .map(|&v| Float::abs(v))
        .fold(T::zero(), Float::max);
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            if Float::abs(w[i] - w[j]) <= tol * scale {
                return false;
            }
        }
    }
    true
}

fn first_equal_pair_relation<T: Real>(w: &[T], tol: T) -> Option<Vec<i64>> {
    let scale = w
        .iter()
        .map(|&v| Float::abs(v))
        .fold(T::zero(), Float::max);
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            if Float::abs(w[i] - w[j]) <= tol * scale {
                let mut c = vec![0i64; w.len()];
                c[i] = 1;
                c[j] = -1;
                return Some(c);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_relation_valid(w: &[f64], c: &[i64], tol: f64) {
        let sum: f64 = c.iter().zip(w).map(|(&ci, &wi)| ci as f64 * wi).sum();
        let w_norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let c_norm = c.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
        assert!(c.iter().any(|&v| v != 0));
        assert!(sum.abs() <= tol * w_norm * c_norm, "residual {sum}");
    }

    #[test]
    fn finds_pythagorean_family_relation() {
        let t = 1.234567;
        let w = [3.0 * t, 4.0 * t, 5.0 * t];
        let (rel, _) = integer_relation_search(&w, 5, 1e-9).unwrap();
        let rel = rel.expect("relation exists");
        assert_relation_valid(&w, &rel, 1e-9);
    }

    #[test]
    fn rationally_independent_roots_have_no_relation() {
        let w = [1.0, 2f64.sqrt(), 3f64.sqrt()];
        let (rel, _) = integer_relation_search(&w, 10, 1e-9).unwrap();
        assert!(rel.is_none());
    }

    #[test]
    fn repeated_value_gives_unit_relation() {
        let w = [0.7253, 0.7253];
        let (rel, _) = integer_relation_search(&w, 1, 1e-12).unwrap();
        assert_eq!(rel.unwrap(), vec![-1, 1]);
    }

    #[test]
    fn budget_guard_trips_for_infeasible_searches() {
        let w = [1.0; 10];
        // b = 2 in three dimensions: bound b^9 = 512, (2*512+1)^10 blows up.
        match integer_relation_search(&w, 512, 1e-9) {
            Err(RankError::BudgetExceeded { .. }) => {}
            other => panic!("expected BudgetExceeded, got {other:?}"),
        }
    }

    #[test]
    fn returned_relations_always_satisfy_the_bound() {
        // Soundness: every returned relation passes the residual test.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let k = rng.gen_range(2..5);
            let bound = rng.gen_range(1..4u32);
            // Plant a relation: w_k = -(sum of c_i w_i)/c_k.
            let mut w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.5..2.0)).collect();
            let mut c: Vec<i64> = (0..k)
                .map(|_| rng.gen_range(-(bound as i64)..=bound as i64))
                .collect();
            if c.iter().all(|&v| v == 0) {
                c[0] = 1;
            }
            let pivot = (0..k).find(|&i| c[i] != 0).unwrap();
            let partial: f64 = (0..k)
                .filter(|&i| i != pivot)
                .map(|i| c[i] as f64 * w[i])
                .sum();
            w[pivot] = -partial / c[pivot] as f64;
            if !w[pivot].is_finite() {
                continue;
            }
            let (rel, _) = integer_relation_search(&w, bound, 1e-9).unwrap();
            let rel = rel.expect("planted relation must be found");
            assert_relation_valid(&w, &rel, 1e-9);
        }
    }

    #[test]
    fn deterministic_first_hit() {
        let w = [1.0, 1.0, 2.0];
        let (rel1, _) = integer_relation_search(&w, 2, 1e-12).unwrap();
        let (rel2, _) = integer_relation_search(&w, 2, 1e-12).unwrap();
        assert_eq!(rel1, rel2);
        // Smallest shell first, lexicographic within: (-1, -1, 1) is the
        // first max-norm-1 vector annihilating (1, 1, 2).
        assert_eq!(rel1.unwrap(), vec![-1, -1, 1]);
    }

    #[test]
    fn planar_shortcut_accepts_generic_tuples() {
        use crate::geometry::sample_pseudo_generic;
        for seed in 0..50 {
            let c = sample_pseudo_generic::<f64>(4, 2, seed, 1.0).unwrap();
            let l = c.edge_lengths();
            let w: [f64; 6] = core::array::from_fn(|i| l[i]);
            let singular = crate::variety::is_singular_l24(&w, 1e-7);
            let report = rational_rank_2d(&w, 3, 1e-9, singular).unwrap();
            assert!(report.certified_full, "seed {seed}: {report:?}");
        }
    }

    #[test]
    fn planar_shortcut_rejects_glued_345_family() {
        for t in [1.0, 0.3, 17.25] {
            let w: [f64; 6] = [3.0, 4.0, 5.0, 5.0, 4.0, 3.0].map(|v| v * t);
            let report = rational_rank_2d(&w, 3, 1e-9, false).unwrap();
            assert!(!report.certified_full);
            assert!(report.found_relation.is_some());
        }
    }

    #[test]
    fn planar_shortcut_rejects_singular_tuples() {
        // Distances of 4 collinear points: independent first triple, but the
        // singularity flag blocks certification.
        let w = [0.7, 1.9, 1.2, 3.2, 2.5, 1.3];
        assert!(crate::variety::is_singular_l24(&w, 1e-9));
        let report = rational_rank_2d(&w, 3, 1e-9, true).unwrap();
        assert!(!report.certified_full);
        assert!(report.singular);
    }

    #[test]
    fn restricted_3d_bypass() {
        let distinct: [f64; 10] = core::array::from_fn(|i| 1.0 + i as f64 * 0.173);
        let r = rank_bypass_restricted_3d(&distinct, RestrictedEnsembleAssumption(true), 1e-9)
            .unwrap();
        assert!(r.certified_full);

        let mut tied = distinct;
        tied[7] = tied[2];
        let r =
            rank_bypass_restricted_3d(&tied, RestrictedEnsembleAssumption(true), 1e-9).unwrap();
        assert!(!r.certified_full);
        assert!(r.found_relation.is_some());

        assert!(matches!(
            rank_bypass_restricted_3d(&distinct, RestrictedEnsembleAssumption(false), 1e-9),
            Err(RankError::AssumptionNotAsserted)
        ));
    }
}
