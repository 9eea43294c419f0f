//! Weighted point clouds, similarity maps and ball queries.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;
use crate::math::{dist_sq, norm_sq, sqrt};

/// Finite measure `Σ wᵢ δ_{pᵢ}` on `ℝⁿ`.
///
/// Zero-weight points are dropped on construction, so every stored point lies
/// in the support. Points are kept in insertion order; a secondary index
/// sorted by the first coordinate answers ball queries exactly.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    total_mass: f64,
    by_first: Vec<u32>,
    first_keys: Vec<f64>,
}

impl PartialEq for DiscreteMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.coords == other.coords && self.weights == other.weights
    }
}

impl DiscreteMeasure {
    /// Builds a measure from a flat coordinate buffer (`dim` values per point).
    pub fn from_flat(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if coords.len() != weights.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: weights.len() * dim,
                found: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoordinate);
        }
        if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidWeight(w));
        }
        let (coords, weights) = if weights.iter().any(|&w| w == 0.0) {
            let mut c = Vec::with_capacity(coords.len());
            let mut w = Vec::with_capacity(weights.len());
            for (i, &wi) in weights.iter().enumerate() {
                if wi > 0.0 {
                    c.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
                    w.push(wi);
                }
            }
            (c, w)
        } else {
            (coords, weights)
        };
        Ok(Self::assemble(dim, coords, weights))
    }

    pub fn new(dim: usize, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                found: weights.len(),
            });
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords, weights)
    }

    /// Uniform probability measure on the given points.
    pub fn uniform(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        let w = if n == 0 { 0.0 } else { 1.0 / n as f64 };
        Self::new(dim, points, vec![w; n])
    }

    pub fn dirac(point: &[f64], mass: f64) -> Result<Self> {
        Self::from_flat(point.len(), point.to_vec(), vec![mass])
    }

    /// Empty measure on `ℝ^dim`.
    pub fn empty(dim: usize) -> Self {
        Self::assemble(dim.max(1), Vec::new(), Vec::new())
    }

    fn assemble(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Self {
        let total_mass = crate::math::compensated_sum(weights.iter().copied());
        let mut by_first: Vec<u32> = (0..weights.len() as u32).collect();
        by_first.sort_by(|&a, &b| {
            coords[a as usize * dim]
                .total_cmp(&coords[b as usize * dim])
                .then(a.cmp(&b))
        });
        let first_keys = by_first.iter().map(|&i| coords[i as usize * dim]).collect();
        Self {
            dim,
            coords,
            weights,
            total_mass,
            by_first,
            first_keys,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn points(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.coords
            .chunks_exact(self.dim)
            .zip(self.weights.iter().copied())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Calls `f` with the index of every point in the open ball, in index order.
    fn indices_in_ball(&self, center: &[f64], radius: f64) -> Vec<usize> {
        let lo = self.first_keys.partition_point(|&k| k <= center[0] - radius);
        let hi = self.first_keys.partition_point(|&k| k < center[0] + radius);
        let r2 = radius * radius;
        let mut out: Vec<usize> = self.by_first[lo..hi]
            .iter()
            .map(|&i| i as usize)
            .filter(|&i| dist_sq(self.point(i), center) < r2)
            .collect();
        out.sort_unstable();
        out
    }

    /// Number of points in the open ball `B(center, radius)`.
    pub fn ball_count(&self, center: &[f64], radius: f64) -> usize {
        self.indices_in_ball(center, radius).len()
    }

    /// `μ(B(x,r))` for the open ball.
    pub fn ball_mass(&self, q: &BallQuery) -> f64 {
        self.ball_mass_at(&q.center, q.radius)
    }

    pub fn ball_mass_at(&self, center: &[f64], radius: f64) -> f64 {
        self.indices_in_ball(center, radius)
            .into_iter()
            .map(|i| self.weights[i])
            .sum()
    }

    /// Restriction of the measure to an open ball (no rescaling).
    pub fn restrict_to_ball(&self, center: &[f64], radius: f64) -> DiscreteMeasure {
        let idx = self.indices_in_ball(center, radius);
        let mut coords = Vec::with_capacity(idx.len() * self.dim);
        let mut weights = Vec::with_capacity(idx.len());
        for i in idx {
            coords.extend_from_slice(self.point(i));
            weights.push(self.weights[i]);
        }
        Self::assemble(self.dim, coords, weights)
    }

    /// Weights multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> DiscreteMeasure {
        Self::assemble(
            self.dim,
            self.coords.clone(),
            self.weights.iter().map(|w| w * factor).collect(),
        )
    }

    /// Push-forward `G♯μ`: points mapped by `g`, weights unchanged.
    pub fn pushforward(&self, g: &SimilarityMap) -> DiscreteMeasure {
        assert_eq!(g.dim(), self.dim, "map and measure dimensions differ");
        let mut coords = vec![0.0; self.coords.len()];
        for (src, dst) in self
            .coords
            .chunks_exact(self.dim)
            .zip(coords.chunks_exact_mut(self.dim))
        {
            g.apply_into(src, dst);
        }
        Self::assemble(self.dim, coords, self.weights.clone())
    }

    /// The full blow-up `μ₀^{x,r}`: every point mapped by `u ↦ (u − x)/r`,
    /// weights divided by `μ(B(x,r))`.
    ///
    /// Images of points of `B(x,r)` are kept strictly inside the unit ball and
    /// images of the other points outside it, so the result has mass one on
    /// `B(0,1)` up to rounding of the weights.
    pub fn blowup(&self, q: &BallQuery) -> Result<DiscreteMeasure> {
        self.check_dim(&q.center)?;
        let inside = self.indices_in_ball(&q.center, q.radius);
        let mass: f64 = inside.iter().map(|&i| self.weights[i]).sum();
        if mass <= 0.0 {
            return Err(Error::EmptyBall { radius: q.radius });
        }
        let mut flags = vec![false; self.len()];
        for &i in &inside {
            flags[i] = true;
        }
        let mut coords = vec![0.0; self.coords.len()];
        for (i, dst) in coords.chunks_exact_mut(self.dim).enumerate() {
            let p = self.point(i);
            for k in 0..self.dim {
                dst[k] = (p[k] - q.center[k]) / q.radius;
            }
            snap(dst, flags[i]);
        }
        let weights = self.weights.iter().map(|w| w / mass).collect();
        Ok(Self::assemble(self.dim, coords, weights))
    }

    /// The blow-up `μ₀^{x,r}` restricted to the open unit ball.
    pub fn local_blowup(&self, center: &[f64], radius: f64) -> Result<DiscreteMeasure> {
        self.check_dim(center)?;
        let inside = self.indices_in_ball(center, radius);
        let mass: f64 = inside.iter().map(|&i| self.weights[i]).sum();
        if mass <= 0.0 {
            return Err(Error::EmptyBall { radius });
        }
        let mut coords = Vec::with_capacity(inside.len() * self.dim);
        let mut weights = Vec::with_capacity(inside.len());
        let mut y = vec![0.0; self.dim];
        for &i in &inside {
            let p = self.point(i);
            for k in 0..self.dim {
                y[k] = (p[k] - center[k]) / radius;
            }
            snap(&mut y, true);
            coords.extend_from_slice(&y);
            weights.push(self.weights[i] / mass);
        }
        Ok(Self::assemble(self.dim, coords, weights))
    }

    /// Euclidean distance from `x` to the nearest point of the support.
    pub fn support_distance(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        if self.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let best = self
            .coords
            .chunks_exact(self.dim)
            .map(|p| dist_sq(p, x))
            .fold(f64::INFINITY, f64::min);
        Ok(sqrt(best))
    }

    /// `max μ(B(x,2r)) / μ(B(x,r))` over all probe/scale pairs, an empirical
    /// lower bound for the doubling constant.
    pub fn doubling_constant(&self, probes: &[Vec<f64>], scales: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for x in probes {
            self.check_dim(x)?;
            for &r in scales {
                let inner = self.ball_mass_at(x, r);
                if inner <= 0.0 {
                    return Err(Error::EmptyBall { radius: r });
                }
                worst = worst.max(self.ball_mass_at(x, 2.0 * r) / inner);
            }
        }
        Ok(worst)
    }
}

/// Keeps a blown-up point on the correct side of the unit sphere after rounding.
fn snap(y: &mut [f64], inside: bool) {
    let n2 = norm_sq(y);
    if inside && n2 >= 1.0 {
        let s = (1.0 - 1e-15) / sqrt(n2);
        y.iter_mut().for_each(|v| *v *= s);
    } else if !inside && n2 < 1.0 && n2 > 0.0 {
        let s = (1.0 + 1e-15) / sqrt(n2);
        y.iter_mut().for_each(|v| *v *= s);
    }
}

/// Affine similarity `u ↦ λ·R·u + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMap {
    dim: usize,
    scale: f64,
    rotation: Vec<f64>,
    translation: Vec<f64>,
    dilation_only: bool,
}

impl SimilarityMap {
    pub fn new(scale: f64, rotation: Vec<f64>, translation: Vec<f64>) -> Result<Self> {
        let dim = translation.len();
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidRadius(scale));
        }
        if !linalg::is_orthogonal(&rotation, dim, 1e-10) {
            return Err(Error::NotOrthogonal);
        }
        let dilation_only = rotation == linalg::identity(dim);
        Ok(Self {
            dim,
            scale,
            rotation,
            translation,
            dilation_only,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::dilation(1.0, vec![0.0; dim])
    }

    /// `u ↦ λu + a`, an element of the dilation group.
    pub fn dilation(scale: f64, translation: Vec<f64>) -> Self {
        let dim = translation.len();
        Self {
            dim,
            scale,
            rotation: linalg::identity(dim),
            translation,
            dilation_only: true,
        }
    }

    /// `u ↦ λR(u − x)`, which sends `x` to the origin.
    pub fn about_point(x: &[f64], scale: f64, rotation: Vec<f64>) -> Result<Self> {
        let dim = x.len();
        let rx = linalg::mat_vec(&rotation, x, dim);
        Self::new(scale, rotation, rx.iter().map(|v| -scale * v).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `λ(G)`.
    pub fn lambda(&self) -> f64 {
        self.scale
    }

    pub fn rotation(&self) -> &[f64] {
        &self.rotation
    }

    pub fn translation(&self) -> &[f64] {
        &self.translation
    }

    pub fn is_dilation_only(&self) -> bool {
        self.dilation_only
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.apply_into(u, &mut out);
        out
    }

    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        if self.dilation_only {
            for k in 0..self.dim {
                out[k] = self.scale * u[k] + self.translation[k];
            }
        } else {
            linalg::mat_vec_into(&self.rotation, u, self.dim, out);
            for k in 0..self.dim {
                out[k] = self.scale * out[k] + self.translation[k];
            }
        }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &SimilarityMap) -> SimilarityMap {
        let rotation = linalg::mat_mul(&self.rotation, &inner.rotation, self.dim);
        let translation = self.apply(&inner.translation);
        SimilarityMap {
            dim: self.dim,
            scale: self.scale * inner.scale,
            dilation_only: self.dilation_only && inner.dilation_only,
            rotation,
            translation,
        }
    }

    pub fn inverse(&self) -> SimilarityMap {
        let rt = linalg::transpose(&self.rotation, self.dim);
        let mut translation = linalg::mat_vec(&rt, &self.translation, self.dim);
        translation.iter_mut().for_each(|v| *v = -*v / self.scale);
        SimilarityMap {
            dim: self.dim,
            scale: 1.0 / self.scale,
            rotation: rt,
            translation,
            dilation_only: self.dilation_only,
        }
    }
}

/// Open ball `B(center, radius)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallQuery {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BallQuery {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidRadius(radius));
        }
        Ok(Self { center, radius })
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            center: vec![0.0; dim],
            radius: 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::PI;
    use proptest::prelude::*;

    fn ball(c: &[f64], r: f64) -> BallQuery {
        BallQuery::new(c.to_vec(), r).unwrap()
    }

    fn square_corners() -> DiscreteMeasure {
        DiscreteMeasure::new(
            2,
            vec![
                vec![0.5, 0.5],
                vec![-0.5, 0.5],
                vec![0.5, -0.5],
                vec![-0.5, -0.5],
            ],
            vec![0.25; 4],
        )
        .unwrap()
    }

    #[test]
    fn ball_mass_examples() {
        let d = DiscreteMeasure::dirac(&[0.0, 0.0], 1.0).unwrap();
        assert_eq!(d.ball_mass(&ball(&[0.0, 0.0], 1.0)), 1.0);
        assert_eq!(d.ball_mass(&ball(&[2.0, 0.0], 1.0)), 0.0);
        assert_eq!(square_corners().ball_mass(&ball(&[0.0, 0.0], 0.8)), 1.0);
        // |corner| = sqrt(0.5) > 0.7
        assert_eq!(square_corners().ball_mass(&ball(&[0.0, 0.0], 0.7)), 0.0);
    }

    #[test]
    fn open_ball_excludes_boundary() {
        let d = DiscreteMeasure::dirac(&[1.0, 0.0], 1.0).unwrap();
        assert_eq!(d.ball_mass(&ball(&[0.0, 0.0], 1.0)), 0.0);
    }

    #[test]
    fn zero_weights_are_pruned() {
        let m = DiscreteMeasure::new(1, vec![vec![0.0], vec![1.0]], vec![0.0, 2.0]).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.point(0), &[1.0]);
        assert_eq!(m.total_mass(), 2.0);
    }

    #[test]
    fn rejects_negative_weight() {
        assert!(matches!(
            DiscreteMeasure::new(1, vec![vec![0.0]], vec![-1.0]),
            Err(Error::InvalidWeight(_))
        ));
    }

    #[test]
    fn pushforward_examples() {
        let m = DiscreteMeasure::new(2, vec![vec![0.3, 0.1], vec![-0.2, 0.4]], vec![0.7, 0.3])
            .unwrap();
        assert_eq!(m.pushforward(&SimilarityMap::identity(2)), m);

        let d = DiscreteMeasure::dirac(&[0.3, -0.1], 1.5).unwrap();
        let doubled = d.pushforward(&SimilarityMap::dilation(2.0, vec![0.0, 0.0]));
        assert_eq!(doubled.point(0), &[0.6, -0.2]);
        assert_eq!(doubled.total_mass(), 1.5);

        let rot = SimilarityMap::new(1.0, linalg::rotation_2d(PI / 2.0), vec![0.0, 0.0]).unwrap();
        let turned = m.pushforward(&rot);
        assert!((turned.point(0)[0] + 0.1).abs() < 1e-15);
        assert!((turned.point(0)[1] - 0.3).abs() < 1e-15);
        assert_eq!(turned.weights(), m.weights());
    }

    #[test]
    fn blowup_examples() {
        let d = DiscreteMeasure::dirac(&[0.4, 0.2], 3.0).unwrap();
        let b = d.blowup(&ball(&[0.4, 0.2], 0.01)).unwrap();
        assert_eq!(b.point(0), &[0.0, 0.0]);
        assert_eq!(b.weight(0), 1.0);

        assert!(matches!(
            d.blowup(&ball(&[1.0, 1.0], 0.1)),
            Err(Error::EmptyBall { .. })
        ));
    }

    #[test]
    fn blowup_keeps_far_points() {
        let m = DiscreteMeasure::new(1, vec![vec![0.0], vec![5.0]], vec![1.0, 1.0]).unwrap();
        let b = m.blowup(&ball(&[0.0], 1.0)).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.total_mass(), 2.0);
        assert_eq!(b.ball_mass(&BallQuery::unit(1)), 1.0);
    }

    #[test]
    fn support_distance_examples() {
        let d = DiscreteMeasure::dirac(&[0.0, 0.0], 1.0).unwrap();
        assert_eq!(d.support_distance(&[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(d.support_distance(&[0.0, 0.0]).unwrap(), 0.0);
        let two = DiscreteMeasure::uniform(2, vec![vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(two.support_distance(&[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(
            DiscreteMeasure::empty(2).support_distance(&[0.0, 0.0]),
            Err(Error::EmptyMeasure)
        );
    }

    #[test]
    fn doubling_of_single_atom_is_one() {
        let d = DiscreteMeasure::dirac(&[0.0], 1.0).unwrap();
        let c = d.doubling_constant(&[vec![0.0]], &[0.1, 0.01]).unwrap();
        assert_eq!(c, 1.0);
    }

    #[test]
    fn similarity_inverse_and_compose() {
        let g = SimilarityMap::new(2.5, linalg::rotation_2d(0.7), vec![1.0, -2.0]).unwrap();
        let id = g.compose(&g.inverse());
        let u = [0.3, 0.9];
        let v = id.apply(&u);
        assert!((v[0] - u[0]).abs() < 1e-12 && (v[1] - u[1]).abs() < 1e-12);
        assert!((id.lambda() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn about_point_sends_center_to_origin() {
        let x = [0.2, -0.7];
        let g = SimilarityMap::about_point(&x, 3.0, linalg::rotation_2d(1.2)).unwrap();
        let y = g.apply(&x);
        assert!(y[0].abs() < 1e-15 && y[1].abs() < 1e-15);
    }

    fn cloud() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
        (1usize..30).prop_flat_map(|n| {
            (
                proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 2), n),
                proptest::collection::vec(0.01f64..1.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn pushforward_round_trip((pts, w) in cloud(), s in 0.1f64..5.0, th in 0.0f64..6.3,
                                  a in -1.0f64..1.0) {
            let m = DiscreteMeasure::new(2, pts, w).unwrap();
            let g = SimilarityMap::new(s, linalg::rotation_2d(th), vec![a, -a]).unwrap();
            let back = m.pushforward(&g).pushforward(&g.inverse());
            for i in 0..m.len() {
                for k in 0..2 {
                    prop_assert!((back.point(i)[k] - m.point(i)[k]).abs() < 1e-10);
                }
            }
            prop_assert_eq!(back.weights(), m.weights());
        }

        #[test]
        fn blowup_has_unit_mass((pts, w) in cloud(), i in 0usize..30, r in 0.01f64..3.0) {
            let m = DiscreteMeasure::new(2, pts, w).unwrap();
            let x = m.point(i % m.len()).to_vec();
            let b = m.blowup(&BallQuery::new(x.clone(), r).unwrap()).unwrap();
            prop_assert!((b.ball_mass(&BallQuery::unit(2)) - 1.0).abs() < 1e-12);
            let local = m.local_blowup(&x, r).unwrap();
            prop_assert!((local.total_mass() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn ball_mass_monotone_in_radius((pts, w) in cloud(), r1 in 0.0f64..3.0, dr in 0.0f64..1.0) {
            let m = DiscreteMeasure::new(2, pts, w).unwrap();
            let c = [0.1, -0.2];
            prop_assert!(m.ball_mass_at(&c, r1) <= m.ball_mass_at(&c, r1 + dr));
        }

        #[test]
        fn doubling_monotone_on_subsets((pts, w) in cloud(), k in 1usize..4) {
            let m = DiscreteMeasure::new(2, pts, w).unwrap();
            let probes = vec![m.point(0).to_vec()];
            let scales = [0.05, 0.1, 0.2, 0.4, 0.8];
            let all = m.doubling_constant(&probes, &scales).unwrap();
            let sub = m.doubling_constant(&probes, &scales[k..]).unwrap();
            prop_assert!(sub <= all);
        }
    }
}
