//! Numeric membership tests for the squared and unsquared measurement
//! varieties at the minimal point count `n = d + 2`, the singular locus of
//! the planar four-point unsquared variety, and a determinant/sign-flip
//! identity used as a property check.
//!
//! At `n = d + 2` both varieties are cut out by a single determinant: the
//! `(d+1) x (d+1)` matrix with diagonal `2 m_{k,last}` and off-diagonal
//! `m_{k,last} + m_{l,last} - m_{kl}` vanishes exactly when the squared
//! lengths `m` come from `d + 2` points in `d`-space (complex in general;
//! real realizability is a separate positive-semidefiniteness question
//! handled by [`crate::geometry::realize_simplex`]). The unsquared variety is
//! the preimage under coordinate-wise squaring, so membership of a length
//! vector is membership of its squares.

use nalgebra::{DMatrix, DVector};
use num_traits::Float;
use thiserror::Error;

use crate::edges::{edge_count, edge_index};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VarietyError {
    #[error("expected {expected} edge coordinates for d = {d}, got {got}")]
    WrongShape {
        d: usize,
        expected: usize,
        got: usize,
    },
    #[error("sign-flip identity enumeration limited to r <= 10, got {0}")]
    TooLarge(usize),
}

/// A point of the ambient edge space for `n = d + 2`, in the fixed edge
/// order. Interpreted as squared lengths by the `M` tests and as unsquared
/// lengths by the `L` tests.
#[derive(Debug, Clone, PartialEq)]
pub struct VarietyPoint<T: Real> {
    pub d: usize,
    pub coords: Vec<T>,
}

impl<T: Real> VarietyPoint<T> {
    pub fn new(d: usize, coords: Vec<T>) -> Result<Self, VarietyError> {
        let expected = edge_count(d + 2);
        if coords.len() != expected {
            return Err(VarietyError::WrongShape {
                d,
                expected,
                got: coords.len(),
            });
        }
        Ok(Self { d, coords })
    }

    pub fn squared(&self) -> Self {
        Self {
            d: self.d,
            coords: self.coords.iter().map(|&c| c * c).collect(),
        }
    }
}

/// Membership verdict with the normalized residual that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership<T> {
    pub on_variety: bool,
    pub residual: T,
}

/// The `(d+1) x (d+1)` matrix whose determinant cuts out the squared variety
/// at `n = d + 2`: diagonal `2 m_{k,last}`, off-diagonal
/// `m_{k,last} + m_{l,last} - m_{kl}` (twice the Gram matrix with the last
/// vertex at the origin).
pub fn gram_from_squared<T: Real>(m: &VarietyPoint<T>) -> DMatrix<T> {
    let last = m.d + 1;
    let two = T::from_f64_lossy(2.0);
    let at = |i: usize, j: usize| m.coords[edge_index(i, j)];
    DMatrix::from_fn(m.d + 1, m.d + 1, |k, l| {
        if k == l {
            two * at(k, last)
        } else {
            at(k, last) + at(l, last) - at(k, l)
        }
    })
}

/// Squared-variety membership: the determinant above, normalized by
/// `scale^(d+1)` with `scale` the mean absolute coordinate (the determinant
/// is homogeneous of degree `d + 1`), compared against `tol`. The all-zero
/// point is on the variety with residual zero.
pub fn on_squared_variety<T: Real>(m: &VarietyPoint<T>, tol: T) -> Membership<T> {
    let det = gram_from_squared(m).determinant();
    let n = T::from_f64_lossy(m.coords.len() as f64);
    let scale = m.coords.iter().map(|&c| Float::abs(c)).sum::<T>() / n;
    let residual = if scale > T::zero() {
        Float::abs(det) / Float::powi(scale, (m.d + 1) as i32)
    } else {
        Float::abs(det)
    };
    Membership {
        on_variety: residual <= tol,
        residual,
    }
}

/// Unsquared-variety membership: squared-variety membership of the
/// coordinate-wise squares, so all `2^N` coordinate sign flips of a member
/// are members.
pub fn on_unsquared_variety<T: Real>(l: &VarietyPoint<T>, tol: T) -> Membership<T> {
    on_squared_variety(&l.squared(), tol)
}

/// One 3-dimensional singular subspace of the planar four-point unsquared
/// variety, cut out by three linear equations with `{0, +-1}` coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSubspace {
    pub kind: SubspaceKind,
    /// Three normal vectors over the 6 edge coordinates.
    pub normals: [[i8; 6]; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubspaceKind {
    /// Four collinear points (all sign patterns of the line ordering).
    Collinear,
    /// Two vertices collapsed to one point.
    CollapsedPair,
    /// One triangle of edges collapsed to zero length.
    CollapsedTriangle,
}

/// The 60 singular subspaces: 32 collinear, 24 collapsed-pair, 4
/// collapsed-triangle.
pub fn l24_singular_subspaces() -> Vec<SingularSubspace> {
    let mut out = Vec::with_capacity(60);
    let e = |i: usize, j: usize| edge_index(i, j);
    // Collinear type: l01 - s02 l02 + s12 l12, l01 - s03 l03 + s13 l13,
    // s02 l02 - s03 l03 + s23 l23, over all five sign choices.
    for bits in 0..32u32 {
        let sign = |k: u32| if bits >> k & 1 == 0 { 1i8 } else { -1i8 };
        let (s02, s12, s03, s13, s23) = (sign(0), sign(1), sign(2), sign(3), sign(4));
        let mut normals = [[0i8; 6]; 3];
        normals[0][e(0, 1)] = 1;
        normals[0][e(0, 2)] = -s02;
        normals[0][e(1, 2)] = s12;
        normals[1][e(0, 1)] = 1;
        normals[1][e(0, 3)] = -s03;
        normals[1][e(1, 3)] = s13;
        normals[2][e(0, 2)] = s02;
        normals[2][e(0, 3)] = -s03;
        normals[2][e(2, 3)] = s23;
        out.push(SingularSubspace {
            kind: SubspaceKind::Collinear,
            normals,
        });
    }
    // Collapsed pair: collapsing {i, j} forces l_ij = 0 and pairs up the
    // edges to the remaining two vertices, with either sign.
    for j in 1..4 {
        for i in 0..j {
            let others: Vec<usize> = (0..4).filter(|&v| v != i && v != j).collect();
            for bits in 0..4u32 {
                let s1 = if bits & 1 == 0 { 1i8 } else { -1i8 };
                let s2 = if bits & 2 == 0 { 1i8 } else { -1i8 };
                let mut normals = [[0i8; 6]; 3];
                normals[0][e(i, j)] = 1;
                normals[1][e(i, others[0])] = 1;
                normals[1][e(j, others[0])] = -s1;
                normals[2][e(i, others[1])] = 1;
                normals[2][e(j, others[1])] = -s2;
                out.push(SingularSubspace {
                    kind: SubspaceKind::CollapsedPair,
                    normals,
                });
            }
        }
    }
    // Collapsed triangle: the three edges among one vertex triple vanish.
    for skip in 0..4 {
        let tri: Vec<usize> = (0..4).filter(|&v| v != skip).collect();
        let mut normals = [[0i8; 6]; 3];
        normals[0][e(tri[0], tri[1])] = 1;
        normals[1][e(tri[0], tri[2])] = 1;
        normals[2][e(tri[1], tri[2])] = 1;
        out.push(SingularSubspace {
            kind: SubspaceKind::CollapsedTriangle,
            normals,
        });
    }
    out
}

impl SingularSubspace {
    /// Euclidean distance from `l` to the subspace: the norm of the
    /// orthogonal projection of `l` onto the span of the three normals.
    pub fn distance<T: Real>(&self, l: &[T; 6]) -> T {
        let n = DMatrix::from_fn(3, 6, |r, c| T::from_f64_lossy(self.normals[r][c] as f64));
        let x = DVector::from_column_slice(l);
        // dist^2 = x^T N^T (N N^T)^-1 N x
        let nx = &n * &x;
        let gram = &n * n.transpose();
        let sol = gram
            .lu()
            .solve(&nx)
            .expect("normal Gram matrices are nonsingular");
        Float::sqrt(Float::max(nx.dot(&sol), T::zero()))
    }
}

/// True when `l` lies within `tol * |l|` of one of the 60 singular
/// subspaces.
pub fn is_singular_l24<T: Real>(l: &[T; 6], tol: T) -> bool {
    let norm = Float::sqrt(l.iter().map(|&c| c * c).sum::<T>());
    l24_singular_subspaces()
        .iter()
        .any(|s| s.distance(l) <= tol * norm)
}

/// Both sides of the sign-flip determinant identity
/// `sum_S det(S X + Y) = 2^r det(Y)` over all `2^r` diagonal sign matrices
/// `S`, with the discrepancy normalized by the magnitude of the summed
/// terms.
pub fn signflip_det_identity_check<T: Real>(
    x: &DMatrix<T>,
    y: &DMatrix<T>,
) -> Result<(T, T, T), VarietyError> {
    let r = x.nrows();
    if x.ncols() != r || y.nrows() != r || y.ncols() != r {
        return Err(VarietyError::WrongShape {
            d: 0,
            expected: r,
            got: y.nrows(),
        });
    }
    if r > 10 {
        return Err(VarietyError::TooLarge(r));
    }
    let mut lhs = T::zero();
    let mut magnitude = T::zero();
    for bits in 0..(1u32 << r) {
        let mut z = y.clone();
        for row in 0..r {
            let s = if bits >> row & 1 == 0 { T::one() } else { -T::one() };
            for col in 0..r {
                z[(row, col)] += s * x[(row, col)];
            }
        }
        let det = z.determinant();
        lhs += det;
        magnitude += Float::abs(det);
    }
    let rhs = T::from_f64_lossy((1u64 << r) as f64) * y.clone().determinant();
    let denom = Float::max(Float::max(magnitude, Float::abs(rhs)), T::one());
    let discrepancy = Float::abs(lhs - rhs) / denom;
    Ok((lhs, rhs, discrepancy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_pseudo_generic;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gram_matrix_for_collinear_triple() {
        // Points 0, 1, 3 on a line: m = (1, 9, 4).
        let m = VarietyPoint::new(1, vec![1.0, 9.0, 4.0]).unwrap();
        let g = gram_from_squared(&m);
        assert_eq!(g[(0, 0)], 18.0);
        assert_eq!(g[(0, 1)], 12.0);
        assert_eq!(g[(1, 0)], 12.0);
        assert_eq!(g[(1, 1)], 8.0);
        assert_relative_eq!(g.determinant(), 0.0, epsilon = 1e-12);
        // The determinant expands to
        // 2(m01 m02 + m01 m12 + m02 m12) - (m01^2 + m02^2 + m12^2).
        let (a, b, c) = (1.0, 9.0, 4.0);
        let expanded = 2.0 * (a * b + a * c + b * c) - (a * a + b * b + c * c);
        assert_relative_eq!(g.determinant(), expanded, epsilon = 1e-12);
    }

    #[test]
    fn gram_matrix_unit_square_is_singular() {
        let m = VarietyPoint::new(2, vec![1.0, 2.0, 1.0, 1.0, 2.0, 1.0]).unwrap();
        let g = gram_from_squared(&m);
        assert_eq!(g.nrows(), 3);
        assert_relative_eq!(g.determinant(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn variety_point_shape_is_checked() {
        assert!(matches!(
            VarietyPoint::new(2, vec![1.0; 10]),
            Err(VarietyError::WrongShape { .. })
        ));
    }

    #[test]
    fn generic_planar_quadruples_are_members() {
        for seed in 0..20 {
            let c = sample_pseudo_generic::<f64>(4, 2, seed, 1.0).unwrap();
            let m = VarietyPoint::new(2, c.squared_edge_lengths()).unwrap();
            let mem = on_squared_variety(&m, 1e-7);
            assert!(mem.on_variety, "seed {seed}: residual {}", mem.residual);
            let l = VarietyPoint::new(2, c.edge_lengths()).unwrap();
            assert!(on_unsquared_variety(&l, 1e-7).on_variety);
        }
    }

    #[test]
    fn perturbed_member_is_rejected() {
        for seed in 0..100 {
            let c = sample_pseudo_generic::<f64>(4, 2, seed, 1.0).unwrap();
            let mut coords = c.squared_edge_lengths();
            coords[0] *= 1.10;
            let m = VarietyPoint::new(2, coords).unwrap();
            let mem = on_squared_variety(&m, 1e-7);
            assert!(!mem.on_variety, "seed {seed}: residual {}", mem.residual);
        }
    }

    #[test]
    fn all_zero_point_is_a_member() {
        let m = VarietyPoint::new(2, vec![0.0; 6]).unwrap();
        let mem = on_squared_variety(&m, 1e-7);
        assert!(mem.on_variety);
        assert_eq!(mem.residual, 0.0);
    }

    #[test]
    fn sign_flips_stay_on_unsquared_variety() {
        let c = sample_pseudo_generic::<f64>(4, 2, 3, 1.0).unwrap();
        let l = c.edge_lengths();
        for bits in 0..64u32 {
            let flipped: Vec<f64> = l
                .iter()
                .enumerate()
                .map(|(i, &v)| if bits >> i & 1 == 0 { v } else { -v })
                .collect();
            let p = VarietyPoint::new(2, flipped).unwrap();
            assert!(on_unsquared_variety(&p, 1e-7).on_variety);
        }
    }

    #[test]
    fn glued_345_rectangle_is_a_member() {
        let l = VarietyPoint::new(2, vec![3.0, 4.0, 5.0, 5.0, 4.0, 3.0]).unwrap();
        let mem = on_unsquared_variety(&l, 1e-7);
        assert!(mem.on_variety, "residual {}", mem.residual);
    }

    #[test]
    fn singular_subspace_counts() {
        let subs = l24_singular_subspaces();
        assert_eq!(subs.len(), 60);
        let count = |k: SubspaceKind| subs.iter().filter(|s| s.kind == k).count();
        assert_eq!(count(SubspaceKind::Collinear), 32);
        assert_eq!(count(SubspaceKind::CollapsedPair), 24);
        assert_eq!(count(SubspaceKind::CollapsedTriangle), 4);
        // All normals have entries in {0, +-1}; collinear normals have
        // support 3.
        for s in &subs {
            for n in &s.normals {
                assert!(n.iter().all(|&v| v.abs() <= 1));
                if s.kind == SubspaceKind::Collinear {
                    assert_eq!(n.iter().filter(|&&v| v != 0).count(), 3);
                }
            }
        }
        // The subspaces are pairwise distinct as equation sets.
        for (i, a) in subs.iter().enumerate() {
            for b in subs.iter().skip(i + 1) {
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn collinear_points_hit_a_singular_subspace() {
        // Four points on a line, ordered: l satisfies the collinear pattern
        // with all signs positive.
        let c = crate::geometry::Configuration::from_coords(
            1,
            &[vec![0.0], vec![0.7], vec![1.9], vec![3.2]],
        );
        let l1 = c.edge_lengths();
        // Embed in the plane: same lengths.
        let l: [f64; 6] = core::array::from_fn(|i| l1[i]);
        assert!(is_singular_l24(&l, 1e-9));
    }

    #[test]
    fn collapsed_pair_hits_a_singular_subspace() {
        // l01 = 0 and the edges from 0 and 1 to each other vertex agree.
        let l = [0.0, 1.3, 1.3, 2.1, 2.1, 0.9];
        assert!(is_singular_l24(&l, 1e-9));
    }

    #[test]
    fn generic_member_is_nonsingular() {
        for seed in 0..50 {
            let c = sample_pseudo_generic::<f64>(4, 2, seed, 1.0).unwrap();
            let l1 = c.edge_lengths();
            let l: [f64; 6] = core::array::from_fn(|i| l1[i]);
            assert!(!is_singular_l24(&l, 1e-7), "seed {seed}");
        }
    }

    #[test]
    fn singular_subspaces_lie_on_the_variety() {
        // Random points of each subspace are members of the unsquared
        // variety.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for s in l24_singular_subspaces() {
            for _ in 0..20 {
                let p = random_point_of(&s, &mut rng);
                let vp = VarietyPoint::new(2, p.to_vec()).unwrap();
                let mem = on_unsquared_variety(&vp, 1e-9);
                assert!(mem.on_variety, "{:?}: residual {}", s.kind, mem.residual);
            }
        }
    }

    fn random_point_of(s: &SingularSubspace, rng: &mut ChaCha8Rng) -> [f64; 6] {
        // Sample ambient, then project out the normal components.
        let n = DMatrix::from_fn(3, 6, |r, c| s.normals[r][c] as f64);
        let x = DVector::from_fn(6, |_, _| rng.gen_range(-1.0..1.0));
        let gram = &n * n.transpose();
        let sol = gram.lu().solve(&(&n * &x)).unwrap();
        let proj = &x - n.transpose() * sol;
        core::array::from_fn(|i| proj[i])
    }

    #[test]
    fn signflip_identity_zero_x() {
        let x = DMatrix::zeros(3, 3);
        let y = DMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64 + 1.0 + (i == j) as u8 as f64);
        let (lhs, rhs, disc) = signflip_det_identity_check(&x, &y).unwrap();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
        assert!(disc < 1e-14);
    }

    #[test]
    fn signflip_identity_vanishes_for_singular_y() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
        // Rank-deficient Y: last row a copy of the first.
        let mut y = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
        for c in 0..4 {
            y[(3, c)] = y[(0, c)];
        }
        let (lhs, _rhs, disc) = signflip_det_identity_check(&x, &y).unwrap();
        assert!(lhs.abs() < 1e-10, "lhs = {lhs}");
        assert!(disc < 1e-10);
    }

    #[test]
    fn signflip_identity_random_r3() {
        for seed in 0..1000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
            let y = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
            let (lhs, rhs, disc) = signflip_det_identity_check(&x, &y).unwrap();
            assert!(
                disc < 1e-10,
                "seed {seed}: lhs {lhs} rhs {rhs} disc {disc}"
            );
        }
    }

    #[test]
    fn signflip_identity_guard() {
        let x = DMatrix::<f64>::zeros(11, 11);
        assert!(matches!(
            signflip_det_identity_check(&x, &x),
            Err(VarietyError::TooLarge(11))
        ));
    }
}
