//! Point configurations and the labeled placement primitives: base simplex
//! realization from squared lengths, single-point trilateration, congruence
//! alignment, and deterministic pseudo-generic sampling.

use nalgebra::{DMatrix, DVector};
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::edges::{edge_count, edge_list};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("gram matrix has negative eigenvalue {0} beyond tolerance; not realizable in real space")]
    NotRealizable(f64),
    #[error("gram matrix rank {rank} exceeds target dimension {dim}")]
    RankTooHigh { rank: usize, dim: usize },
    #[error("base does not affinely span the target dimension")]
    DegenerateBase,
    #[error("distances are inconsistent with any point (residual {0})")]
    Inconsistent(f64),
    #[error("configurations must share point count and dimension")]
    SizeMismatch,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("pseudo-generic sampling failed after 100 attempts; degenerate parameters")]
    SampleExhausted,
}

/// An ordered sequence of `n` points in `d`-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration<T: Real> {
    dimension: usize,
    points: Vec<DVector<T>>,
}

impl<T: Real> Configuration<T> {
    /// Invariants: `n >= 1`, every point has exactly `dimension` coordinates.
    pub fn new(dimension: usize, points: Vec<DVector<T>>) -> Self {
        assert!(dimension >= 1, "dimension must be at least 1");
        assert!(!points.is_empty(), "a configuration has at least one point");
        assert!(
            points.iter().all(|p| p.len() == dimension),
            "every point must have exactly d coordinates"
        );
        Self { dimension, points }
    }

    pub fn from_coords(dimension: usize, coords: &[Vec<T>]) -> Self {
        Self::new(
            dimension,
            coords
                .iter()
                .map(|c| DVector::from_column_slice(c))
                .collect(),
        )
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    pub fn point(&self, i: usize) -> &DVector<T> {
        &self.points[i]
    }

    pub fn points(&self) -> &[DVector<T>] {
        &self.points
    }

    pub fn push(&mut self, p: DVector<T>) {
        assert_eq!(p.len(), self.dimension);
        self.points.push(p);
    }

    pub fn distance(&self, i: usize, j: usize) -> T {
        (&self.points[i] - &self.points[j]).norm()
    }

    pub fn squared_distance(&self, i: usize, j: usize) -> T {
        (&self.points[i] - &self.points[j]).norm_squared()
    }

    /// The subconfiguration indexed by `indices`, in that order.
    pub fn subconfiguration(&self, indices: &[usize]) -> Self {
        Self::new(
            self.dimension,
            indices.iter().map(|&i| self.points[i].clone()).collect(),
        )
    }

    /// Unsquared edge lengths in the fixed edge order.
    pub fn edge_lengths(&self) -> Vec<T> {
        edge_list(self.len())
            .into_iter()
            .map(|(i, j)| self.distance(i, j))
            .collect()
    }

    /// Squared edge lengths in the fixed edge order.
    pub fn squared_edge_lengths(&self) -> Vec<T> {
        edge_list(self.len())
            .into_iter()
            .map(|(i, j)| self.squared_distance(i, j))
            .collect()
    }

    /// Scales every coordinate by `s`.
    pub fn scaled(&self, s: T) -> Self {
        Self::new(
            self.dimension,
            self.points.iter().map(|p| p * s).collect(),
        )
    }

    /// Root-mean-square edge length; zero for a single point.
    pub fn rms_edge_length(&self) -> T {
        if self.len() < 2 {
            return T::zero();
        }
        let lengths = self.edge_lengths();
        let n = T::from_f64_lossy(lengths.len() as f64);
        Float::sqrt(lengths.iter().map(|&l| l * l).sum::<T>() / n)
    }

    /// Moves the configuration into a deterministic pose: first point at the
    /// origin, second on the positive first axis, third with positive second
    /// coordinate, and so on. Rotations and reflections only, so the result
    /// is congruent to the input.
    pub fn canonical_pose(&self) -> Self {
        let d = self.dimension;
        let origin = self.points[0].clone();
        // Orthonormal frame from successive edge vectors, completed with the
        // standard basis where the affine span is deficient.
        let mut frame: Vec<DVector<T>> = Vec::with_capacity(d);
        let tiny = T::from_f64_lossy(1e-300);
        let orthogonalize = |frame: &[DVector<T>], candidate: DVector<T>| {
            let mut v = candidate;
            for q in frame {
                let proj = q.dot(&v);
                v -= q * proj;
            }
            let norm = v.norm();
            if norm > tiny {
                Some(v / norm)
            } else {
                None
            }
        };
        for p in &self.points[1..] {
            if frame.len() == d {
                break;
            }
            if let Some(q) = orthogonalize(&frame, p - &origin) {
                frame.push(q);
            }
        }
        for k in 0..d {
            if frame.len() == d {
                break;
            }
            let mut e = DVector::zeros(d);
            e[k] = T::one();
            if let Some(q) = orthogonalize(&frame, e) {
                frame.push(q);
            }
        }
        let points = self
            .points
            .iter()
            .map(|p| {
                let v = p - &origin;
                DVector::from_iterator(d, frame.iter().map(|q| q.dot(&v)))
            })
            .collect();
        Self::new(d, points)
    }
}

/// Optimal congruence (rotation or reflection plus translation) taking `a`
/// onto `b`, least squares over point correspondences.
#[derive(Debug, Clone)]
pub struct AlignmentResult<T: Real> {
    /// Orthogonal matrix, reflections allowed.
    pub rotation: DMatrix<T>,
    pub translation: DVector<T>,
    pub residual_rmsd: T,
}

/// Orthogonal Procrustes with reflections allowed: the returned transform
/// minimizes the RMS of `rotation * a_i + translation - b_i`.
pub fn align_congruent<T: Real>(
    a: &Configuration<T>,
    b: &Configuration<T>,
) -> Result<AlignmentResult<T>, GeometryError> {
    if a.len() != b.len() || a.dimension() != b.dimension() {
        return Err(GeometryError::SizeMismatch);
    }
    let d = a.dimension();
    let n = a.len();
    let nt = T::from_f64_lossy(n as f64);
    let mut ca = DVector::zeros(d);
    let mut cb = DVector::zeros(d);
    for i in 0..n {
        ca += a.point(i);
        cb += b.point(i);
    }
    ca /= nt;
    cb /= nt;
    // Cross covariance of centered clouds; maximize tr(R H), H = sum a' b'^T.
    let mut h = DMatrix::zeros(d, d);
    for i in 0..n {
        let av = a.point(i) - &ca;
        let bv = b.point(i) - &cb;
        h += &av * bv.transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("svd with u");
    let vt = svd.v_t.expect("svd with v_t");
    let rotation = vt.transpose() * u.transpose();
    let translation = &cb - &rotation * &ca;
    let mut sq = T::zero();
    for i in 0..n {
        let moved = &rotation * a.point(i) + &translation;
        sq += (moved - b.point(i)).norm_squared();
    }
    let residual_rmsd = Float::sqrt(sq / nt);
    Ok(AlignmentResult {
        rotation,
        translation,
        residual_rmsd,
    })
}

/// Deterministic rejection-sampled stand-in for a generic configuration:
/// seeded uniform points in `[0, box_size)^d`, resampled until all pairwise
/// distances are distinct (relative `1e-6`) and no `d + 1` points are
/// affinely dependent (singular value threshold `1e-9 * box_size`).
pub fn sample_pseudo_generic<T: Real>(
    n: usize,
    d: usize,
    seed: u64,
    box_size: f64,
) -> Result<Configuration<T>, GeometryError> {
    if n == 0 || d == 0 || !(box_size > 0.0) {
        return Err(GeometryError::InvalidInput(
            "need n >= 1, d >= 1 and a positive box".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        let points: Vec<DVector<T>> = (0..n)
            .map(|_| {
                DVector::from_iterator(
                    d,
                    (0..d).map(|_| T::from_f64_lossy(rng.gen_range(0.0..box_size))),
                )
            })
            .collect();
        let config = Configuration::new(d, points);
        if is_pseudo_generic(&config, T::from_f64_lossy(box_size)) {
            return Ok(config);
        }
    }
    Err(GeometryError::SampleExhausted)
}

fn is_pseudo_generic<T: Real>(config: &Configuration<T>, box_size: T) -> bool {
    let n = config.len();
    let d = config.dimension();
    // Pairwise distances distinct to relative 1e-6.
    let mut dist: Vec<T> = config.edge_lengths();
    dist.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rel = T::from_f64_lossy(1e-6);
    for w in dist.windows(2) {
        if w[1] - w[0] <= rel * w[1] {
            return false;
        }
    }
    // No d+1 points affinely dependent.
    if n >= d + 1 {
        let threshold = T::from_f64_lossy(1e-9) * box_size;
        let mut subset: Vec<usize> = (0..d + 1).collect();
        loop {
            if affine_span_deficient(config, &subset, threshold) {
                return false;
            }
            if !next_combination(&mut subset, n) {
                break;
            }
        }
    }
    true
}

fn affine_span_deficient<T: Real>(
    config: &Configuration<T>,
    subset: &[usize],
    threshold: T,
) -> bool {
    let d = config.dimension();
    let cols: Vec<DVector<T>> = subset[1..]
        .iter()
        .map(|&i| config.point(i) - config.point(subset[0]))
        .collect();
    let m = DMatrix::from_columns(&cols);
    let sv = m.singular_values();
    sv.iter().any(|&s| s <= threshold) || sv.len() < d.min(subset.len() - 1)
}

/// Advances `subset` to the next k-combination of `0..n`; false when done.
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

/// Realizes `d + 2` points from their squared edge lengths (fixed edge
/// order) via eigendecomposition of the Gram matrix with the last vertex at
/// the origin. Eigenvalues in `(-tol, 0)` are clamped to zero; a negative
/// eigenvalue or a rank above `d` beyond tolerance is an error. The output is
/// in canonical pose.
pub fn realize_simplex<T: Real>(
    squared_lengths: &[T],
    d: usize,
    tol: T,
) -> Result<Configuration<T>, GeometryError> {
    let n = d + 2;
    if squared_lengths.len() != edge_count(n) {
        return Err(GeometryError::InvalidInput(format!(
            "expected {} squared lengths for d = {}, got {}",
            edge_count(n),
            d,
            squared_lengths.len()
        )));
    }
    let g = gram_with_last_at_origin(squared_lengths, n);
    let eig = g.symmetric_eigen();
    let mut order: Vec<usize> = (0..n - 1).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
    });
    let scale = order
        .iter()
        .map(|&i| Float::abs(eig.eigenvalues[i]))
        .fold(T::zero(), Float::max);
    let cutoff = tol * scale;
    if let Some(&neg) = order
        .iter()
        .map(|&i| &eig.eigenvalues[i])
        .find(|&&l| l < -cutoff)
    {
        return Err(GeometryError::NotRealizable(neg.to_f64_lossy()));
    }
    let rank = order
        .iter()
        .filter(|&&i| eig.eigenvalues[i] > cutoff)
        .count();
    if rank > d {
        return Err(GeometryError::RankTooHigh { rank, dim: d });
    }
    // Coordinates: rows of Q_d * sqrt(Lambda_d) for the n-1 non-origin
    // vertices, origin appended as the last vertex.
    let mut points = Vec::with_capacity(n);
    for k in 0..n - 1 {
        let coords: Vec<T> = order[..d]
            .iter()
            .map(|&i| {
                let l = Float::max(eig.eigenvalues[i], T::zero());
                eig.eigenvectors[(k, i)] * Float::sqrt(l)
            })
            .collect();
        points.push(DVector::from_column_slice(&coords));
    }
    points.push(DVector::zeros(d));
    Ok(Configuration::new(d, points).canonical_pose())
}

/// The Gram matrix of vertices `0..n-1` relative to vertex `n-1` at the
/// origin: `G_kk = m_{k,last}`, `G_kl = (m_{k,last} + m_{l,last} - m_kl)/2`.
fn gram_with_last_at_origin<T: Real>(squared: &[T], n: usize) -> DMatrix<T> {
    let last = n - 1;
    let half = T::from_f64_lossy(0.5);
    let m = |i: usize, j: usize| squared[crate::edges::edge_index(i, j)];
    DMatrix::from_fn(n - 1, n - 1, |k, l| {
        if k == l {
            m(k, last)
        } else {
            (m(k, last) + m(l, last) - m(k, l)) * half
        }
    })
}

/// Places the point at the given squared distances from `d + 1` base points
/// spanning `d` dimensions. The linearized system must be nonsingular
/// (`DegenerateBase`) and the solution must reproduce every squared distance
/// to `tol` relative (`Inconsistent`).
pub fn trilaterate_point<T: Real>(
    base: &Configuration<T>,
    squared_dists: &[T],
    tol: T,
) -> Result<DVector<T>, GeometryError> {
    let d = base.dimension();
    if base.len() != d + 1 || squared_dists.len() != d + 1 {
        return Err(GeometryError::InvalidInput(format!(
            "trilateration needs {} base points and as many squared distances",
            d + 1
        )));
    }
    let two = T::from_f64_lossy(2.0);
    let b0 = base.point(0);
    let mut a = DMatrix::zeros(d, d);
    let mut rhs = DVector::zeros(d);
    for k in 1..=d {
        let bk = base.point(k);
        let row = (bk - b0) * two;
        for c in 0..d {
            a[(k - 1, c)] = row[c];
        }
        rhs[k - 1] =
            bk.norm_squared() - b0.norm_squared() - (squared_dists[k] - squared_dists[0]);
    }
    let spread = base.rms_edge_length();
    let svd = a.clone().svd(true, true);
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .fold(<T as Float>::infinity(), Float::min);
    if smin <= T::from_f64_lossy(1e-12) * Float::max(spread, T::one()) {
        return Err(GeometryError::DegenerateBase);
    }
    let x = svd
        .solve(&rhs, T::from_f64_lossy(0.0))
        .map_err(|_| GeometryError::DegenerateBase)?;
    // Consistency of the quadratic constraints, not just the linearization.
    let scale = squared_dists
        .iter()
        .map(|&s| Float::abs(s))
        .fold(spread * spread, Float::max);
    let mut worst = T::zero();
    for k in 0..=d {
        let r = Float::abs((&x - base.point(k)).norm_squared() - squared_dists[k]);
        worst = Float::max(worst, r);
    }
    if worst > tol * scale {
        return Err(GeometryError::Inconsistent((worst / scale).to_f64_lossy()));
    }
    Ok(x)
}

/// Every ordered index sequence `I` of `config` whose subconfiguration is
/// similar to `probe` within `tol`, with the scale factor `s` such that
/// `config_I` matches `s * probe`. The probe needs at least three points.
pub fn find_similar_subconfigurations<T: Real>(
    config: &Configuration<T>,
    probe: &Configuration<T>,
    tol: T,
) -> Vec<(Vec<usize>, T)> {
    let k = probe.len();
    assert!(k >= 3, "probe needs at least 3 points");
    if config.dimension() != probe.dimension() || config.len() < k {
        return Vec::new();
    }
    let probe_max = probe
        .edge_lengths()
        .into_iter()
        .fold(T::zero(), Float::max);
    let mut out = Vec::new();
    let mut partial = Vec::with_capacity(k);
    extend_similar(config, probe, tol, probe_max, &mut partial, &mut out);
    out
}

fn extend_similar<T: Real>(
    config: &Configuration<T>,
    probe: &Configuration<T>,
    tol: T,
    probe_max: T,
    partial: &mut Vec<usize>,
    out: &mut Vec<(Vec<usize>, T)>,
) {
    let k = probe.len();
    if partial.len() == k {
        let scale = config.distance(partial[0], partial[1]) / probe.distance(0, 1);
        out.push((partial.clone(), scale));
        return;
    }
    let pos = partial.len();
    'candidates: for cand in 0..config.len() {
        if partial.contains(&cand) {
            continue;
        }
        // All pairwise distances to already-assigned points must agree with
        // the probe under a common scale (signed distances determine
        // similarity classes, reflections included).
        if pos >= 1 {
            let scale = if pos == 1 {
                config.distance(partial[0], cand) / probe.distance(0, 1)
            } else {
                config.distance(partial[0], partial[1]) / probe.distance(0, 1)
            };
            if !(scale > T::zero()) || !Float::is_finite(scale) {
                continue;
            }
            for (a, &ia) in partial.iter().enumerate() {
                let want = scale * probe.distance(a, pos);
                let got = config.distance(ia, cand);
                if Float::abs(got - want) > tol * scale * probe_max {
                    continue 'candidates;
                }
            }
        }
        partial.push(cand);
        extend_similar(config, probe, tol, probe_max, partial, out);
        partial.pop();
    }
}
