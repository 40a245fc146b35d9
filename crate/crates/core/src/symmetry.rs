//! Exact rational construction of the linear automorphism machinery of the
//! planar four-point unsquared measurement variety: edge permutations
//! induced by vertex relabelings, coordinate sign flips, the Regge map, and
//! breadth-first group closure on scale-quotient classes.
//!
//! Scale factors are themselves automorphisms, so finite counts only make
//! sense on equivalence classes: up to positive scale, or up to sign and
//! scale. Classes are represented by a canonical matrix, obtained by
//! dividing by the absolute value of the first nonzero entry in row-major
//! order (and additionally forcing that entry positive in the sign-and-scale
//! quotient). Closure under multiplication of the relabelings, the flips,
//! and the Regge map recovers the expected orders: 768 for the signed edge
//! permutations up to sign and scale, 23040 with the Regge map up to
//! positive scale, 11520 up to sign and scale, and exactly the 24 vertex
//! relabelings once restricted to non-negative entries.

use std::collections::HashSet;

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, One, Signed, Zero};
use thiserror::Error;

use crate::edges::induced_edge_permutation;
use crate::geometry::sample_pseudo_generic;
pub use crate::ratmat::RationalMatrix;
use crate::scalar::Real;
use crate::variety::{on_unsquared_variety, VarietyPoint};

/// Abort threshold for runaway closures.
pub const CLOSURE_GUARD: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymmetryError {
    #[error("group closure exceeded the guard of {0} elements")]
    ClosureGuardExceeded(usize),
    #[error("generators must be nonsingular")]
    SingularGenerator,
}

/// Which scale action is quotiented away.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quotient {
    /// Classes under multiplication by positive rationals.
    PositiveScale,
    /// Classes under multiplication by any nonzero rational.
    SignAndScale,
}

/// A scale-quotient class in canonical form, with an optional generator
/// word (indices into the generator list that produced it).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupElement {
    pub matrix: RationalMatrix,
    pub word: Vec<u32>,
}

/// Canonical class representative: divide by the absolute value of the
/// first nonzero entry (positive scale), or by the entry itself so it
/// becomes `+1` (sign and scale).
pub fn canonicalize(m: &RationalMatrix, quotient: Quotient) -> RationalMatrix {
    let Some(first) = m.first_nonzero() else {
        return m.clone();
    };
    let divisor = match quotient {
        Quotient::PositiveScale => first.abs(),
        Quotient::SignAndScale => first.clone(),
    };
    m.scale(&divisor.recip())
}

/// The 6x6 permutation matrix realizing the edge permutation induced by a
/// relabeling of the 4 vertices.
pub fn vertex_relabeling_matrix(perm: &[usize]) -> RationalMatrix {
    assert_eq!(perm.len(), 4, "a relabeling permutes the 4 vertices");
    let mut sorted = perm.to_vec();
    sorted.sort_unstable();
    assert_eq!(sorted, vec![0, 1, 2, 3], "not a permutation");
    let induced = induced_edge_permutation(perm);
    let mut m = RationalMatrix::zeros(6);
    for (old, &new) in induced.iter().enumerate() {
        m[(new, old)] = BigRational::one();
    }
    m
}

/// All 24 relabeling matrices.
pub fn all_vertex_relabelings() -> Vec<RationalMatrix> {
    (0..4usize)
        .permutations(4)
        .map(|p| vertex_relabeling_matrix(&p))
        .collect()
}

/// Diagonal matrix negating the coordinates selected by `bits`.
pub fn sign_flip_matrix(bits: u8) -> RationalMatrix {
    let mut m = RationalMatrix::zeros(6);
    for i in 0..6 {
        m[(i, i)] = if bits >> i & 1 == 0 {
            BigRational::one()
        } else {
            -BigRational::one()
        };
    }
    m
}

/// The six single-coordinate sign flips.
pub fn single_coordinate_sign_flips() -> Vec<RationalMatrix> {
    (0..6).map(|i| sign_flip_matrix(1 << i)).collect()
}

/// The Regge map: fixes the two diagonal coordinates and replaces each
/// remaining length by half the four-cycle sum minus itself. Half-integer
/// entries; an involution.
pub fn regge_matrix() -> RationalMatrix {
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    // Edge order 01, 02, 12, 03, 13, 23. The fixed coordinates are the
    // diagonals {0,2} and {1,3}; the moved ones are the four-cycle
    // 01, 12, 23, 03.
    let fixed = [1usize, 4];
    let cycle = [0usize, 2, 5, 3];
    let mut m = RationalMatrix::zeros(6);
    for &i in &fixed {
        m[(i, i)] = BigRational::one();
    }
    for &i in &cycle {
        for &j in &cycle {
            m[(i, j)] = if i == j { -half.clone() } else { half.clone() };
        }
    }
    m
}

/// Closure of the generated group on scale-quotient classes, under the
/// default guard. Deterministic output: sorted by canonical matrix entries.
pub fn close_group(
    generators: &[RationalMatrix],
    quotient: Quotient,
) -> Result<Vec<GroupElement>, SymmetryError> {
    close_group_with_guard(generators, quotient, CLOSURE_GUARD)
}

/// Closure with an explicit element-count guard.
pub fn close_group_with_guard(
    generators: &[RationalMatrix],
    quotient: Quotient,
    guard: usize,
) -> Result<Vec<GroupElement>, SymmetryError> {
    for g in generators {
        if g.determinant().is_zero() {
            return Err(SymmetryError::SingularGenerator);
        }
    }
    let canonical_gens: Vec<RationalMatrix> = generators
        .iter()
        .map(|g| canonicalize(g, quotient))
        .collect();
    let size = generators.first().map_or(6, |g| g.size());
    let identity = canonicalize(&RationalMatrix::identity(size), quotient);
    let mut seen: HashSet<RationalMatrix> = HashSet::new();
    let mut elements: Vec<GroupElement> = Vec::new();
    let mut frontier: Vec<GroupElement> = vec![GroupElement {
        matrix: identity.clone(),
        word: Vec::new(),
    }];
    seen.insert(identity);
    while let Some(current) = frontier.pop() {
        for (gi, g) in canonical_gens.iter().enumerate() {
            let product = canonicalize(&current.matrix.mul(g), quotient);
            if seen.contains(&product) {
                continue;
            }
            if seen.len() >= guard {
                return Err(SymmetryError::ClosureGuardExceeded(guard));
            }
            seen.insert(product.clone());
            let mut word = current.word.clone();
            word.push(gi as u32);
            frontier.push(GroupElement {
                matrix: product,
                word,
            });
        }
        elements.push(current);
    }
    elements.sort_by(|a, b| cmp_matrices(&a.matrix, &b.matrix));
    Ok(elements)
}

fn cmp_matrices(a: &RationalMatrix, b: &RationalMatrix) -> std::cmp::Ordering {
    let n = a.size();
    for i in 0..n {
        for j in 0..n {
            match a[(i, j)].cmp(&b[(i, j)]) {
                std::cmp::Ordering::Equal => continue,
                other => return other,
            }
        }
    }
    std::cmp::Ordering::Equal
}

/// Elements whose canonical matrix is entrywise non-negative.
pub fn filter_nonnegative(group: &[GroupElement]) -> Vec<GroupElement> {
    group
        .iter()
        .filter(|e| e.matrix.is_nonnegative())
        .cloned()
        .collect()
}

/// Elements `A` for which `N * A` is entrywise non-negative.
pub fn check_canonical_nonneg_compositions(
    group: &[GroupElement],
    n: &RationalMatrix,
) -> Vec<GroupElement> {
    group
        .iter()
        .filter(|e| n.mul(&e.matrix).is_nonnegative())
        .cloned()
        .collect()
}

/// Numeric surrogate for variety preservation: the maximum unsquared-variety
/// membership residual of `A * l` over pseudo-generic planar four-point
/// length vectors, together with whether every sample stayed within `tol`.
pub fn verify_preserves_variety<T: Real>(
    a: &RationalMatrix,
    samples: usize,
    seed: u64,
    tol: T,
) -> (T, bool) {
    let am = a.to_real::<T>();
    let mut max_residual = T::zero();
    for k in 0..samples {
        let config = sample_pseudo_generic::<T>(4, 2, seed.wrapping_add(k as u64), 1.0)
            .expect("sampling at n=4 succeeds");
        let l = config.edge_lengths();
        let lv = nalgebra::DVector::from_vec(l);
        let image = &am * lv;
        let point = VarietyPoint::new(2, image.iter().copied().collect()).unwrap();
        let membership = on_unsquared_variety(&point, tol);
        max_residual = Float::max(max_residual, membership.residual);
    }
    (max_residual, max_residual <= tol)
}
