//! Reconstruction of planar (and, under a restricted ensemble assumption,
//! spatial) point configurations from *unlabeled* path or loop length
//! measurements.
//!
//! The measurement model: a configuration of `n` points in `d` dimensions is
//! probed by a collection of walks (paths or loops over the complete graph
//! `K_n`), and the only observable is the multiset of their Euclidean
//! lengths — no information about which walk produced which value. For a
//! generic configuration and a measurement ensemble that allows for
//! trilateration, the configuration is determined up to congruence and can be
//! recovered by a hypothesize-and-test search:
//!
//! 1. *Base search*: try ordered `D`-tuples of values (`D = (d+2)(d+1)/2`) as
//!    the edge lengths of a `K_{d+2}` (path mode) or as the canonical
//!    ping/triangle loop pattern over a `K_{d+2}` (loop mode). A tuple is
//!    accepted only if it lies on the unsquared measurement variety, has full
//!    rational rank, and realizes as a real simplex.
//! 2. *Growth*: trilaterate one new point at a time off `d+1` placed points
//!    using ordered `(d+1)`-tuples of unclaimed values, under the analogous
//!    consistency tests.
//! 3. *Selection*: among maximal candidates, keep the smallest-scale one.
//!
//! The supporting algebra lives in the submodules: determinant membership
//! tests for the measurement varieties ([`variety`]), bounded integer
//! relation search for rational-rank certification ([`rank`]), and the exact
//! rational automorphism group of the `n = 4`, `d = 2` unsquared variety,
//! including the Regge symmetry ([`symmetry`]).
//!
//! Core numerics are generic over the scalar type via [`scalar::Real`]
//! (`f32`/`f64`); the group machinery is exact rational. Concrete `f64`
//! aliases are exported at the crate root.

pub mod edges;
pub mod geometry;
pub mod io;
pub mod measurement;
pub mod rank;
pub mod ratmat;
pub mod reconstruction;
pub mod scalar;
pub mod symmetry;
pub mod variety;

pub use scalar::Real;

/// `f64` configuration, the default working type.
pub type Configuration = geometry::Configuration<f64>;
/// `f64` alignment result.
pub type AlignmentResult = geometry::AlignmentResult<f64>;
/// `f64` variety point.
pub type VarietyPoint = variety::VarietyPoint<f64>;
/// `f64` unlabeled data set.
pub type UnlabeledDataSet = measurement::UnlabeledDataSet<f64>;
/// `f64` reconstruction result.
pub type ReconstructionResult = reconstruction::ReconstructionResult<f64>;
