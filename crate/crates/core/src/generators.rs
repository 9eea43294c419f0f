//! Synthetic measures with known structure: flat lattices, IFS attractors,
//! Koch-type snowflakes and mixtures.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;
use crate::math::{cos, floor, powi, sin, PI};
use crate::measure::{DiscreteMeasure, SimilarityMap};

/// Default cap on the number of IFS words.
pub const IFS_BUDGET: usize = 1_000_000;

fn check_basis(basis: &[Vec<f64>], n: usize) -> Result<()> {
    if basis.iter().any(|b| b.len() != n) {
        return Err(Error::BadBasis);
    }
    if !linalg::is_orthonormal_basis(basis, 1e-10) {
        return Err(Error::BadBasis);
    }
    Ok(())
}

/// Cell-weighted lattice sample of `c·ℋ^d` on `offset + span(basis)`.
///
/// Points are `offset + Σ kᵢ h bᵢ` with `|kᵢ| ≤ ⌊half_extent / h⌋`, each of
/// weight `c·h^d`. With `d = 0` (empty basis) the result is one atom of mass `c`.
pub fn flat_measure(
    basis: &[Vec<f64>],
    offset: &[f64],
    density: f64,
    half_extent: f64,
    spacing: f64,
) -> Result<DiscreteMeasure> {
    let n = offset.len();
    let d = basis.len();
    check_basis(basis, n)?;
    if !(density > 0.0 && density.is_finite()) {
        return Err(Error::InvalidWeight(density));
    }
    if !(spacing > 0.0) || !(half_extent >= 0.0) {
        return Err(Error::InvalidSpec("spacing must be positive and extent nonnegative"));
    }
    if d == 0 {
        return DiscreteMeasure::dirac(offset, density);
    }
    let k = floor(half_extent / spacing + 1e-9) as i64;
    let side = (2 * k + 1) as usize;
    let count = side.checked_pow(d as u32).ok_or(Error::InvalidSpec("lattice too large"))?;
    let mut coords = Vec::with_capacity(count * n);
    let mut idx = vec![-k; d];
    for _ in 0..count {
        let start = coords.len();
        coords.extend_from_slice(offset);
        for (j, &i) in idx.iter().enumerate() {
            let t = i as f64 * spacing;
            for c in 0..n {
                coords[start + c] += t * basis[j][c];
            }
        }
        for j in 0..d {
            idx[j] += 1;
            if idx[j] <= k {
                break;
            }
            idx[j] = -k;
        }
    }
    let w = density * powi(spacing, d as i32);
    DiscreteMeasure::from_flat(n, coords, vec![w; count])
}

/// Graded lattice sample of `c·ℋ^d` on a `d`-plane, refined towards `offset`.
///
/// Level `ℓ = 0..levels` is the cell-centered lattice of spacing `s = h·2^ℓ`
/// (plane coordinates in `(ℤ + ½)s`) filling the cube of half-width `K·s`
/// minus the cube of level `ℓ − 1`; every point weighs `c·s^d`. The cells tile
/// the outermost cube exactly, and dilation by 2 about `offset` maps each
/// level onto the next, so the sample is self-similar away from the core.
/// `core_cells = K` must be even.
pub fn graded_flat_measure(
    basis: &[Vec<f64>],
    offset: &[f64],
    density: f64,
    spacing: f64,
    core_cells: usize,
    levels: usize,
) -> Result<DiscreteMeasure> {
    let n = offset.len();
    let d = basis.len();
    check_basis(basis, n)?;
    if d == 0 {
        return DiscreteMeasure::dirac(offset, density);
    }
    if core_cells == 0 || core_cells % 2 != 0 {
        return Err(Error::InvalidSpec("core_cells must be even and positive"));
    }
    if !(density > 0.0 && spacing > 0.0) {
        return Err(Error::InvalidSpec("density and spacing must be positive"));
    }
    let k = core_cells as i64;
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for level in 0..levels.max(1) {
        let s = spacing * powi(2.0, level as i32);
        let w = density * powi(s, d as i32);
        let mut idx = vec![-k; d];
        loop {
            // twice the cell-center coordinate in units of s
            let inner = idx.iter().all(|&i| (2 * i + 1).abs() < k);
            if level == 0 || !inner {
                let start = coords.len();
                coords.extend_from_slice(offset);
                for (j, &i) in idx.iter().enumerate() {
                    let t = (i as f64 + 0.5) * s;
                    for c in 0..n {
                        coords[start + c] += t * basis[j][c];
                    }
                }
                weights.push(w);
            }
            let mut j = 0;
            while j < d {
                idx[j] += 1;
                if idx[j] < k {
                    break;
                }
                idx[j] = -k;
                j += 1;
            }
            if j == d {
                break;
            }
        }
    }
    DiscreteMeasure::from_flat(n, coords, weights)
}

/// Orthonormal basis of the first `d` coordinate axes of `ℝⁿ`.
pub fn axis_basis(d: usize, n: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|j| (0..n).map(|k| if j == k { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// A contracting similarity system with word probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct IfsSpec {
    pub maps: Vec<SimilarityMap>,
    pub probabilities: Vec<f64>,
    pub depth: usize,
    /// Maximal number of generated points.
    pub budget: usize,
}

impl IfsSpec {
    pub fn new(maps: Vec<SimilarityMap>, probabilities: Vec<f64>, depth: usize) -> Result<Self> {
        let spec = Self {
            maps,
            probabilities,
            depth,
            budget: IFS_BUDGET,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.maps.is_empty() || self.maps.len() != self.probabilities.len() {
            return Err(Error::InvalidSpec("one probability per map is required"));
        }
        let n = self.maps[0].dim();
        if let Some(m) = self.maps.iter().find(|m| m.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.dim(),
            });
        }
        if self.maps.iter().any(|m| !(m.lambda() > 0.0 && m.lambda() < 1.0)) {
            return Err(Error::InvalidSpec("IFS maps must be contractions"));
        }
        if self.probabilities.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::InvalidSpec("probabilities must be positive"));
        }
        let total: f64 = self.probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec("probabilities must sum to one"));
        }
        if self.depth == 0 {
            return Err(Error::InvalidSpec("depth must be positive"));
        }
        Ok(())
    }

    fn words(&self, depth: usize) -> u128 {
        (self.maps.len() as u128).saturating_pow(depth as u32)
    }

    /// Largest depth whose expansion fits in the budget (at least 1).
    pub fn max_depth(&self) -> usize {
        let mut d = 1;
        while d < self.depth && self.words(d + 1) <= self.budget as u128 {
            d += 1;
        }
        d
    }
}

/// Fixed point of `u ↦ λRu + a`.
pub fn fixed_point(g: &SimilarityMap) -> Result<Vec<f64>> {
    let n = g.dim();
    let mut m = linalg::identity(n);
    for (k, v) in m.iter_mut().enumerate() {
        *v -= g.lambda() * g.rotation()[k];
    }
    linalg::solve(&m, g.translation(), n).ok_or(Error::InvalidSpec("map has no unique fixed point"))
}

/// All words of length `depth` applied to the fixed point of the first map,
/// in lexicographic order (first letter outermost), weighted by the product
/// of letter probabilities.
pub fn ifs_measure(spec: &IfsSpec) -> Result<DiscreteMeasure> {
    spec.validate()?;
    let words = spec.words(spec.depth);
    if words > spec.budget as u128 {
        return Err(Error::DepthOverflow {
            points: words,
            budget: spec.budget,
        });
    }
    expand(spec, spec.depth)
}

/// Like [`ifs_measure`] but lowers the depth to fit the budget; returns the depth used.
pub fn ifs_measure_truncated(spec: &IfsSpec) -> Result<(DiscreteMeasure, usize)> {
    spec.validate()?;
    let depth = spec.max_depth();
    Ok((expand(spec, depth)?, depth))
}

fn expand(spec: &IfsSpec, depth: usize) -> Result<DiscreteMeasure> {
    let n = spec.maps[0].dim();
    let mut coords = fixed_point(&spec.maps[0])?;
    let mut weights = vec![1.0];
    let mut buf = vec![0.0; n];
    for _ in 0..depth {
        let m = weights.len();
        let mut next_c = Vec::with_capacity(coords.len() * spec.maps.len());
        let mut next_w = Vec::with_capacity(m * spec.maps.len());
        for (g, &p) in spec.maps.iter().zip(&spec.probabilities) {
            for j in 0..m {
                g.apply_into(&coords[j * n..(j + 1) * n], &mut buf);
                next_c.extend_from_slice(&buf);
                next_w.push(p * weights[j]);
            }
        }
        coords = next_c;
        weights = next_w;
    }
    DiscreteMeasure::from_flat(n, coords, weights)
}

/// Middle-thirds Cantor measure on `[0, 1]`.
pub fn cantor(depth: usize) -> Result<IfsSpec> {
    IfsSpec::new(
        vec![
            SimilarityMap::dilation(1.0 / 3.0, vec![0.0]),
            SimilarityMap::dilation(1.0 / 3.0, vec![2.0 / 3.0]),
        ],
        vec![0.5, 0.5],
        depth,
    )
}

/// Sierpinski triangle with vertices `0`, `e₁` and `(½, √3/2)`.
pub fn sierpinski(depth: usize) -> Result<IfsSpec> {
    let h = crate::math::sqrt(3.0) / 2.0;
    IfsSpec::new(
        vec![
            SimilarityMap::dilation(0.5, vec![0.0, 0.0]),
            SimilarityMap::dilation(0.5, vec![0.5, 0.0]),
            SimilarityMap::dilation(0.5, vec![0.25, h / 2.0]),
        ],
        vec![1.0 / 3.0; 3],
        depth,
    )
}

/// Planar IFS whose first map `u ↦ R(θ)u/3` fixes the origin; the other two
/// maps place copies around `(⅔, 0)` and `(0, ⅔)`. Near the origin the
/// attractor is invariant under the similarity of ratio 3 and angle `θ`, but
/// not under the pure dilation.
pub fn spiral(angle: f64, depth: usize) -> Result<IfsSpec> {
    IfsSpec::new(
        vec![
            SimilarityMap::new(1.0 / 3.0, linalg::rotation_2d(angle), vec![0.0, 0.0])?,
            SimilarityMap::dilation(1.0 / 3.0, vec![2.0 / 3.0, 0.0]),
            SimilarityMap::dilation(1.0 / 3.0, vec![0.0, 2.0 / 3.0]),
        ],
        vec![1.0 / 3.0; 3],
        depth,
    )
}

/// Bump angle used at generation `g` of the Koch recursion.
#[derive(Debug, Clone, PartialEq)]
pub enum AngleSequence {
    Constant(f64),
    /// `θ_g = 1/ln(g + 2)`, capped just below `π/4`.
    InverseLog,
    /// Explicit angles; generations beyond the list reuse the last entry.
    Explicit(Vec<f64>),
}

/// Cap applied to [`AngleSequence::InverseLog`].
pub const ANGLE_CAP: f64 = PI / 4.0 - 1e-3;

impl AngleSequence {
    pub fn angle(&self, g: usize) -> f64 {
        match self {
            AngleSequence::Constant(t) => *t,
            AngleSequence::InverseLog => (1.0 / crate::math::ln(g as f64 + 2.0)).min(ANGLE_CAP),
            AngleSequence::Explicit(v) => v.get(g).or(v.last()).copied().unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnowflakeSpec {
    pub angles: AngleSequence,
    /// Number of subdivisions; the curve has `4^depth` edges.
    pub depth: usize,
}

/// Koch-type curve over the segment `[0, e₁]`: every edge is replaced by four
/// edges of relative length `1/(2 + 2 cos θ_g)`, the middle two forming a
/// bump of angle `θ_g` to the left. The measure puts `4^{-depth}` at the
/// midpoint of every final edge.
pub fn snowflake_measure(spec: &SnowflakeSpec) -> Result<DiscreteMeasure> {
    if spec.depth == 0 {
        return Err(Error::InvalidSpec("snowflake depth must be at least 1"));
    }
    if spec.depth > 11 {
        return Err(Error::DepthOverflow {
            points: 1u128 << (2 * spec.depth),
            budget: 1 << 22,
        });
    }
    for g in 0..spec.depth {
        let t = spec.angles.angle(g);
        if !(0.0..PI / 4.0).contains(&t) {
            return Err(Error::InvalidSpec("snowflake angles must lie in [0, pi/4)"));
        }
    }
    let mut verts: Vec<[f64; 2]> = vec![[0.0, 0.0], [1.0, 0.0]];
    for g in 0..spec.depth {
        let t = spec.angles.angle(g);
        let l = 1.0 / (2.0 + 2.0 * cos(t));
        let (c, s) = (cos(t), sin(t));
        let mut next = Vec::with_capacity(4 * (verts.len() - 1) + 1);
        for e in verts.windows(2) {
            let (a, b) = (e[0], e[1]);
            let v = [b[0] - a[0], b[1] - a[1]];
            let p1 = [a[0] + l * v[0], a[1] + l * v[1]];
            let apex = [p1[0] + l * (c * v[0] - s * v[1]), p1[1] + l * (s * v[0] + c * v[1])];
            let p2 = [b[0] - l * v[0], b[1] - l * v[1]];
            next.push(a);
            next.push(p1);
            next.push(apex);
            next.push(p2);
        }
        next.push(*verts.last().expect("nonempty"));
        verts = next;
    }
    let edges = verts.len() - 1;
    let mut coords = Vec::with_capacity(2 * edges);
    for e in verts.windows(2) {
        coords.push(0.5 * (e[0][0] + e[1][0]));
        coords.push(0.5 * (e[0][1] + e[1][1]));
    }
    DiscreteMeasure::from_flat(2, coords, vec![1.0 / edges as f64; edges])
}

/// Weighted union `Σ wᵢ μᵢ`.
pub fn mix(measures: &[DiscreteMeasure], weights: &[f64]) -> Result<DiscreteMeasure> {
    if measures.is_empty() || measures.len() != weights.len() {
        return Err(Error::InvalidSpec("one weight per measure is required"));
    }
    let n = measures[0].dim();
    let mut coords = Vec::new();
    let mut w = Vec::new();
    for (m, &a) in measures.iter().zip(weights) {
        if m.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.dim(),
            });
        }
        if !(a > 0.0) {
            return Err(Error::InvalidWeight(a));
        }
        coords.extend_from_slice(m.coords());
        w.extend(m.weights().iter().map(|v| v * a));
    }
    DiscreteMeasure::from_flat(n, coords, w)
}

/// The three-stratum planar corpus: a unit-density segment of length 2 on the
/// `x`-axis, a unit-density square patch of side 2 centered at `(0, 4)`, and
/// an atom at `(4, 0)`, each part of mass proportional to its size.
pub fn stratified_corpus(spacing: f64) -> Result<DiscreteMeasure> {
    let segment = flat_measure(&axis_basis(1, 2), &[0.0, 0.0], 1.0, 1.0, spacing)?;
    let patch = flat_measure(&axis_basis(2, 2), &[0.0, 4.0], 1.0, 1.0, spacing)?;
    let atom = DiscreteMeasure::dirac(&[4.0, 0.0], 1.0)?;
    mix(&[segment, patch, atom], &[1.0, 1.0, 1.0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sqrt;

    #[test]
    fn flat_examples() {
        let atom = flat_measure(&[], &[0.1, 0.2], 2.5, 1.0, 0.1).unwrap();
        assert_eq!(atom.len(), 1);
        assert_eq!(atom.total_mass(), 2.5);

        let h = 0.01;
        let seg = flat_measure(&axis_basis(1, 2), &[0.0, 0.0], 1.0, 2.0, h).unwrap();
        assert!((seg.total_mass() - 4.0).abs() <= h + 1e-12);

        let sheet = flat_measure(&axis_basis(2, 2), &[0.0, 0.0], 1.0, 1.0, 0.005).unwrap();
        let r = 0.3;
        let m = sheet.ball_mass_at(&[0.1, -0.05], r);
        assert!((m - PI * r * r).abs() < 4.0 * 0.005 / r * PI * r * r);
    }

    #[test]
    fn flat_rejects_bad_basis() {
        let basis = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        assert_eq!(flat_measure(&basis, &[0.0, 0.0], 1.0, 1.0, 0.1), Err(Error::BadBasis));
    }

    #[test]
    fn graded_tiles_the_cube() {
        let h = 0.1;
        for d in 1..=3 {
            let m = graded_flat_measure(&axis_basis(d, 3), &[0.0; 3], 1.0, h, 4, 3).unwrap();
            // outer cube half-width K h 2^(L-1)
            let side = 2.0 * 4.0 * h * 4.0;
            assert!((m.total_mass() - powi(side, d as i32)).abs() < 1e-9);
        }
    }

    #[test]
    fn graded_is_self_similar_about_its_focus() {
        let m = graded_flat_measure(&axis_basis(2, 2), &[0.0, 0.0], 1.0, 0.05, 4, 6).unwrap();
        let a = m.local_blowup(&[0.0, 0.0], 0.8).unwrap();
        let b = m.local_blowup(&[0.0, 0.0], 1.6).unwrap();
        let v = crate::transport::w1_value(&a, &b).unwrap();
        // one of the two blow-ups has an extra refined core inside B(0, 0.125)
        assert!(v < 0.02, "{v}");
    }

    #[test]
    fn cantor_examples() {
        let k = 8;
        let m = ifs_measure(&cantor(k).unwrap()).unwrap();
        assert_eq!(m.len(), 1 << k);
        assert!(m.weights().iter().all(|&w| w == 1.0 / 256.0));
        for j in 0..=k {
            let r = powi(3.0, -(j as i32));
            let mass = m.ball_mass_at(&[0.0], r * (1.0 + 1e-9));
            assert!((mass - powi(0.5, j as i32)).abs() < 1e-12, "j = {j}");
        }
    }

    #[test]
    fn single_map_is_a_dirac_at_its_fixed_point() {
        let spec = IfsSpec::new(vec![SimilarityMap::dilation(0.5, vec![0.3])], vec![1.0], 5).unwrap();
        let m = ifs_measure(&spec).unwrap();
        assert_eq!(m.len(), 1);
        assert!((m.point(0)[0] - 0.6).abs() < 1e-15);
        assert_eq!(m.weight(0), 1.0);
    }

    #[test]
    fn sierpinski_counts() {
        let m = ifs_measure(&sierpinski(6).unwrap()).unwrap();
        assert_eq!(m.len(), 729);
        assert!((m.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn depth_budget() {
        let mut spec = cantor(30).unwrap();
        assert!(matches!(ifs_measure(&spec), Err(Error::DepthOverflow { .. })));
        spec.budget = 1 << 10;
        let (m, depth) = ifs_measure_truncated(&spec).unwrap();
        assert_eq!(depth, 10);
        assert_eq!(m.len(), 1024);
    }

    #[test]
    fn spiral_is_rotation_self_similar_at_origin() {
        let theta = PI / 4.0;
        let m = ifs_measure(&spiral(theta, 7).unwrap()).unwrap();
        let m6 = ifs_measure(&spiral(theta, 6).unwrap()).unwrap();
        let r = 1.0 / 27.0;
        let small = m.local_blowup(&[0.0, 0.0], r).unwrap();
        let big = m6.local_blowup(&[0.0, 0.0], 3.0 * r).unwrap();
        let g = SimilarityMap::new(1.0, linalg::rotation_2d(theta), vec![0.0, 0.0]).unwrap();
        let v = crate::transport::w1_value(&small, &big.pushforward(&g)).unwrap();
        assert!(v < 1e-9, "{v}");
    }

    #[test]
    fn snowflake_examples() {
        let flat = snowflake_measure(&SnowflakeSpec {
            angles: AngleSequence::Constant(0.0),
            depth: 3,
        })
        .unwrap();
        assert_eq!(flat.len(), 64);
        assert!(flat.points().all(|(p, w)| p[1].abs() < 1e-15 && w == 1.0 / 64.0));
        for i in 0..64 {
            assert!((flat.point(i)[0] - (i as f64 + 0.5) / 64.0).abs() < 1e-12);
        }

        let one = snowflake_measure(&SnowflakeSpec {
            angles: AngleSequence::Constant(PI / 6.0),
            depth: 1,
        })
        .unwrap();
        assert_eq!(one.len(), 4);
        assert!(one.weights().iter().all(|&w| w == 0.25));
        // the bump is on the left of the base segment
        assert!(one.point(1)[1] > 0.0 && one.point(2)[1] > 0.0);
    }

    #[test]
    fn snowflake_edges_have_equal_length() {
        let t = PI / 6.0;
        let l = 1.0 / (2.0 + 2.0 * cos(t));
        let m = snowflake_measure(&SnowflakeSpec {
            angles: AngleSequence::Constant(t),
            depth: 2,
        })
        .unwrap();
        let xs: Vec<f64> = m.points().map(|(p, _)| p[0]).collect();
        assert!(xs[0] > 0.0 && xs[15] < 1.0);
        assert!((xs[0] - l * l / 2.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_log_angles_are_capped_and_decreasing() {
        let a = AngleSequence::InverseLog;
        assert_eq!(a.angle(0), ANGLE_CAP);
        assert_eq!(a.angle(1), ANGLE_CAP);
        assert!((a.angle(2) - 1.0 / crate::math::ln(4.0)).abs() < 1e-15);
        for g in 1..20 {
            assert!(a.angle(g + 1) <= a.angle(g));
        }
        let m = snowflake_measure(&SnowflakeSpec { angles: a, depth: 4 }).unwrap();
        assert!((m.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mix_examples() {
        let a = DiscreteMeasure::dirac(&[0.0], 1.0).unwrap();
        let b = DiscreteMeasure::dirac(&[1.0], 1.0).unwrap();
        assert_eq!(mix(&[a.clone()], &[1.0]).unwrap(), a);
        let m = mix(&[a, b], &[0.5, 0.5]).unwrap();
        assert!((m.total_mass() - 1.0).abs() < 1e-15);
        let c = DiscreteMeasure::dirac(&[0.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            mix(&[m, c], &[1.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn corpus_parts_are_separated() {
        let m = stratified_corpus(0.05).unwrap();
        assert!(m.support_distance(&[4.0, 0.0]).unwrap() == 0.0);
        let rest: Vec<f64> = m
            .points()
            .filter(|(p, _)| p[0] != 4.0 || p[1] != 0.0)
            .map(|(p, _)| sqrt((p[0] - 4.0) * (p[0] - 4.0) + p[1] * p[1]))
            .collect();
        assert!(rest.iter().all(|&d| d >= 1.0));
    }
}
