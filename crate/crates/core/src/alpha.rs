//! Self-similarity coefficients `α_𝒟`, `α_𝒢`, their average `α*_𝒢`, and the
//! flatness coefficients `α_d`.
//!
//! The infima over groups and affine planes are taken over finite grids
//! followed by local refinement, so every returned value is an upper bound of
//! the exact infimum, attained by an explicit group element or plane.

#![allow(non_snake_case)]

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::math::{self, dist_sq, ln, exp, norm, powf, sqrt, unit_ball_volume, PI, TAU};
use crate::measure::{DiscreteMeasure, SimilarityMap};
use crate::transport::{w1_to_point, w1_value_with, TransportConfig};

/// Admissible range `λ₁ r ≤ λ(G)⁻¹ ≤ λ₂ r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupWindow {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl GroupWindow {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1 > 1.0 && lambda2 > lambda1 && lambda2.is_finite()) {
            return Err(Error::InvalidWindow { lambda1, lambda2 });
        }
        Ok(Self { lambda1, lambda2 })
    }
}

impl Default for GroupWindow {
    fn default() -> Self {
        Self {
            lambda1: 1.5,
            lambda2: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Log-spaced scale grid has `scale_grid_size + 1` nodes including both ends.
    pub scale_grid_size: usize,
    /// Angles per rotation parameter.
    pub rotation_grid_size: usize,
    pub refine_iters: usize,
    /// Grid values per Grassmannian angle and per offset coordinate.
    pub plane_grid_size: usize,
    pub mc_samples: usize,
    /// Blow-ups with more points are aggregated on a voxel grid.
    pub max_support: usize,
    /// Add every integer ratio inside the window to the scale grid.
    pub integer_ratios: bool,
    pub transport: TransportConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            scale_grid_size: 5,
            rotation_grid_size: 4,
            refine_iters: 4,
            plane_grid_size: 3,
            mc_samples: 32,
            max_support: 250,
            integer_ratios: true,
            transport: TransportConfig::default(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scale_grid_size == 0 {
            return Err(Error::InvalidConfig("scale_grid_size must be positive"));
        }
        if self.rotation_grid_size == 0 {
            return Err(Error::InvalidConfig("rotation_grid_size must be positive"));
        }
        if self.plane_grid_size == 0 {
            return Err(Error::InvalidConfig("plane_grid_size must be positive"));
        }
        if self.mc_samples == 0 {
            return Err(Error::InvalidConfig("mc_samples must be positive"));
        }
        if self.max_support < 2 {
            return Err(Error::InvalidConfig("max_support must be at least 2"));
        }
        Ok(())
    }
}

/// Row flag bits.
pub mod flags {
    /// Fewer support points in the ball than the resolution floor.
    pub const UNDER_RESOLVED: u32 = 1;
    /// The ball carries no mass; coefficients are NaN.
    pub const EMPTY_BALL: u32 = 2;
    /// Rotation search unavailable in this dimension; `alpha_G` is NaN.
    pub const NO_ROTATIONS: u32 = 4;
    /// The blow-up was aggregated to fit the support budget.
    pub const COMPRESSED: u32 = 8;

    pub fn names(bits: u32) -> alloc::vec::Vec<&'static str> {
        let mut out = alloc::vec::Vec::new();
        for (b, n) in [
            (UNDER_RESOLVED, "under_resolved"),
            (EMPTY_BALL, "empty_ball"),
            (NO_ROTATIONS, "no_rotations"),
            (COMPRESSED, "compressed"),
        ] {
            if bits & b != 0 {
                out.push(n);
            }
        }
        out
    }
}

/// Every coefficient at one `(probe, scale)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaProfile {
    pub probe: Vec<f64>,
    pub scale: f64,
    pub alpha_D: f64,
    pub alpha_G: f64,
    /// Index `d = 0..=n`.
    pub alpha_flat: Vec<f64>,
    pub alpha_min: f64,
    pub best_d: usize,
    pub ball_mass: f64,
    /// Support points in `B(x, r)`.
    pub ball_count: usize,
    pub flags: u32,
}

impl AlphaProfile {
    pub fn is_resolved(&self) -> bool {
        self.flags & (flags::UNDER_RESOLVED | flags::EMPTY_BALL) == 0
    }

    /// Row for a ball without mass.
    pub fn empty(probe: &[f64], scale: f64) -> Self {
        Self {
            probe: probe.to_vec(),
            scale,
            alpha_D: f64::NAN,
            alpha_G: f64::NAN,
            alpha_flat: vec![f64::NAN; probe.len() + 1],
            alpha_min: f64::NAN,
            best_d: 0,
            ball_mass: 0.0,
            ball_count: 0,
            flags: flags::EMPTY_BALL | flags::UNDER_RESOLVED,
        }
    }
}

/// Aggregates `m` on a voxel grid (anchored at the origin, cell centers on
/// `ηℤⁿ`) into weighted centroids, growing `η` until at most `budget` cells
/// are occupied. Measures already within budget are returned unchanged.
pub fn compress(m: &DiscreteMeasure, budget: usize) -> DiscreteMeasure {
    if m.len() <= budget {
        return m.clone();
    }
    let n = m.dim();
    let mut eta = 2.0 / budget as f64;
    // a subsample never occupies more cells than the full support, so the
    // smallest admissible grid of the subsample is a safe starting point
    let stride = m.len() / COMPRESS_SAMPLE + 1;
    if stride > 1 {
        let sample: Vec<usize> = (0..m.len()).step_by(stride).collect();
        while occupied(m, &sample, eta) > budget {
            eta *= 1.2;
        }
    }
    let all: Vec<usize> = (0..m.len()).collect();
    loop {
        let (keys, order) = sorted_keys(m, &all, eta);
        if distinct(&keys, &order, n) <= budget {
            let mut coords = Vec::with_capacity(budget * n);
            let mut weights = Vec::with_capacity(budget);
            let mut acc = vec![0.0; n];
            let mut wsum = 0.0;
            for (pos, &i) in order.iter().enumerate() {
                let w = m.weight(i);
                wsum += w;
                for (a, &v) in acc.iter_mut().zip(m.point(i)) {
                    *a += w * v;
                }
                let last = pos + 1 == order.len() || keys[i * n..(i + 1) * n] != keys[order[pos + 1] * n..(order[pos + 1] + 1) * n];
                if last {
                    coords.extend(acc.iter().map(|a| a / wsum));
                    weights.push(wsum);
                    acc.iter_mut().for_each(|a| *a = 0.0);
                    wsum = 0.0;
                }
            }
            return DiscreteMeasure::from_flat(n, coords, weights)
                .expect("aggregated measure is valid");
        }
        eta *= 1.2;
    }
}

const COMPRESS_SAMPLE: usize = 4096;

/// Cell keys of the selected points, and the selection sorted by key.
fn sorted_keys(m: &DiscreteMeasure, idx: &[usize], eta: f64) -> (Vec<i64>, Vec<usize>) {
    let n = m.dim();
    let mut keys = vec![0i64; m.len() * n];
    for &i in idx {
        for (k, &v) in keys[i * n..(i + 1) * n].iter_mut().zip(m.point(i)) {
            *k = math::round(v / eta) as i64;
        }
    }
    let mut order = idx.to_vec();
    order.sort_by(|&a, &b| keys[a * n..(a + 1) * n].cmp(&keys[b * n..(b + 1) * n]).then(a.cmp(&b)));
    (keys, order)
}

fn distinct(keys: &[i64], order: &[usize], n: usize) -> usize {
    if order.is_empty() {
        return 0;
    }
    1 + order
        .windows(2)
        .filter(|w| keys[w[0] * n..(w[0] + 1) * n] != keys[w[1] * n..(w[1] + 1) * n])
        .count()
}

fn occupied(m: &DiscreteMeasure, idx: &[usize], eta: f64) -> usize {
    let (keys, order) = sorted_keys(m, idx, eta);
    distinct(&keys, &order, m.dim())
}

/// `μ₀^{x,r}` restricted to `𝔹` and compressed to the support budget.
pub fn resolved_blowup(
    mu: &DiscreteMeasure,
    x: &[f64],
    r: f64,
    cfg: &SearchConfig,
) -> Result<DiscreteMeasure> {
    Ok(compress(&mu.local_blowup(x, r)?, cfg.max_support))
}

/// Median nearest-neighbor distance of the support (0 for a single point).
pub fn median_spacing(m: &DiscreteMeasure) -> f64 {
    let k = m.len();
    if k < 2 {
        return 0.0;
    }
    let mut nn: Vec<f64> = (0..k)
        .map(|i| {
            let mut best = f64::INFINITY;
            for j in 0..k {
                if i != j {
                    best = best.min(dist_sq(m.point(i), m.point(j)));
                }
            }
            sqrt(best)
        })
        .collect();
    nn.sort_by(f64::total_cmp);
    nn[k / 2]
}

const SPACING_SAMPLES: usize = 256;

/// Median nearest-neighbor distance over an evenly strided subsample of at
/// most `samples` points, each measured against the whole support.
pub fn sampled_spacing(m: &DiscreteMeasure, samples: usize) -> f64 {
    let k = m.len();
    if k <= samples {
        return median_spacing(m);
    }
    let mut nn: Vec<f64> = (0..samples)
        .map(|s| {
            let i = s * k / samples;
            let mut best = f64::INFINITY;
            for j in 0..k {
                if i != j {
                    best = best.min(dist_sq(m.point(i), m.point(j)));
                }
            }
            sqrt(best)
        })
        .collect();
    nn.sort_by(f64::total_cmp);
    nn[samples / 2]
}

/// Candidate radii `λ(G)⁻¹` in `[λ₁r, λ₂r]`, sorted and deduplicated.
pub fn scale_candidates(r: f64, w: &GroupWindow, cfg: &SearchConfig) -> Vec<f64> {
    let n = cfg.scale_grid_size;
    let mut ratios: Vec<f64> = (0..=n)
        .map(|i| w.lambda1 * powf(w.lambda2 / w.lambda1, i as f64 / n as f64))
        .collect();
    if cfg.integer_ratios {
        let mut k = math::ceil(w.lambda1);
        while k <= w.lambda2 {
            ratios.push(k);
            k += 1.0;
        }
    }
    ratios.sort_by(f64::total_cmp);
    ratios.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * *b);
    ratios.into_iter().map(|q| q * r).collect()
}

struct Target<'a> {
    mu: &'a DiscreteMeasure,
    x: &'a [f64],
    r: f64,
    blowup: DiscreteMeasure,
    /// Nearest-neighbor spacing of the blow-up before aggregation.
    raw_spacing: f64,
    compressed: bool,
    cfg: &'a SearchConfig,
}

impl<'a> Target<'a> {
    fn new(mu: &'a DiscreteMeasure, x: &'a [f64], r: f64, cfg: &'a SearchConfig) -> Result<Self> {
        cfg.validate()?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidRadius(r));
        }
        let raw = mu.local_blowup(x, r)?;
        let compressed = raw.len() > cfg.max_support;
        let (blowup, raw_spacing) = if compressed {
            (compress(&raw, cfg.max_support), sampled_spacing(&raw, SPACING_SAMPLES))
        } else {
            let h = median_spacing(&raw);
            (raw, h)
        };
        Ok(Self {
            mu,
            x,
            r,
            blowup,
            raw_spacing,
            compressed,
            cfg,
        })
    }

    fn candidate(&self, s: f64) -> Result<DiscreteMeasure> {
        resolved_blowup(self.mu, self.x, s, self.cfg)
    }

    fn distance(&self, c: &DiscreteMeasure) -> Result<f64> {
        w1_value_with(c, &self.blowup, &self.cfg.transport)
    }
}

/// `W₁(R♯μ₀^{x,s}, μ₀^{x,r})`, the cost of one group element `u ↦ s⁻¹R(u − x)`.
pub fn group_distance(
    mu: &DiscreteMeasure,
    x: &[f64],
    r: f64,
    s: f64,
    rotation: Option<&[f64]>,
    cfg: &SearchConfig,
) -> Result<f64> {
    let t = Target::new(mu, x, r, cfg)?;
    let mut c = t.candidate(s)?;
    if let Some(rot) = rotation {
        c = c.pushforward(&SimilarityMap::new(1.0, rot.to_vec(), vec![0.0; mu.dim()])?);
    }
    t.distance(&c)
}

/// Golden-section search of `f` over `[a, b]`, `iters` new evaluations.
fn golden<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, iters: usize) -> Result<(f64, f64)> {
    let g = (sqrt(5.0) - 1.0) / 2.0;
    let (mut lo, mut hi) = (a, b);
    let mut best = (f64::INFINITY, a);
    if iters == 0 || !(hi > lo) {
        return Ok(best);
    }
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1)?;
    best = (f1, x1);
    if iters == 1 {
        return Ok(best);
    }
    let mut f2 = f(x2)?;
    if f2 < best.0 {
        best = (f2, x2);
    }
    for _ in 2..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
            if f1 < best.0 {
                best = (f1, x1);
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
            if f2 < best.0 {
                best = (f2, x2);
            }
        }
    }
    Ok(best)
}

struct ScaleSearch {
    value: f64,
    scales: Vec<f64>,
    blowups: Vec<DiscreteMeasure>,
}

fn dilation_search(t: &Target, w: &GroupWindow) -> Result<ScaleSearch> {
    let scales = scale_candidates(t.r, w, t.cfg);
    let mut blowups = Vec::with_capacity(scales.len());
    let mut values = Vec::with_capacity(scales.len());
    for &s in &scales {
        let c = t.candidate(s)?;
        values.push(t.distance(&c)?);
        blowups.push(c);
    }
    let (bi, &bv) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .expect("scale grid is nonempty");
    let mut value = bv;
    let lo = scales[bi.saturating_sub(1)];
    let hi = scales[(bi + 1).min(scales.len() - 1)];
    if hi > lo && value > 0.0 {
        let (v, _) = golden(
            |ls| t.distance(&t.candidate(exp(ls))?),
            ln(lo),
            ln(hi),
            t.cfg.refine_iters,
        )?;
        value = value.min(v);
    }
    Ok(ScaleSearch {
        value,
        scales,
        blowups,
    })
}

/// `α_𝒟(x, r)`: best dilation about `x` within the window.
pub fn alpha_D(
    mu: &DiscreteMeasure,
    x: &[f64],
    r: f64,
    w: &GroupWindow,
    cfg: &SearchConfig,
) -> Result<f64> {
    let t = Target::new(mu, x, r, cfg)?;
    Ok(dilation_search(&t, w)?.value)
}

/// Rotation parameters: angles plus an orientation branch.
#[derive(Debug, Clone, PartialEq)]
struct RotParams {
    angles: Vec<f64>,
    flip: bool,
}

fn rotation_from(n: usize, p: &RotParams) -> Vec<f64> {
    match n {
        1 => vec![if p.flip { -1.0 } else { 1.0 }],
        2 => {
            let r = linalg::rotation_2d(p.angles[0]);
            if p.flip {
                linalg::mat_mul(&r, &[1.0, 0.0, 0.0, -1.0], 2)
            } else {
                r
            }
        }
        _ => {
            let r = linalg::euler_zyz(p.angles[0], p.angles[1], p.angles[2]);
            if p.flip {
                linalg::mat_mul(&r, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0], 3)
            } else {
                r
            }
        }
    }
}

fn rotation_params(n: usize, size: usize) -> Result<Vec<RotParams>> {
    let mut out = Vec::new();
    match n {
        1 => {
            out.push(RotParams { angles: vec![], flip: false });
            out.push(RotParams { angles: vec![], flip: true });
        }
        2 => {
            for flip in [false, true] {
                for k in 0..size {
                    out.push(RotParams {
                        angles: vec![TAU * k as f64 / size as f64],
                        flip,
                    });
                }
            }
        }
        3 => {
            for flip in [false, true] {
                let mut seen: Vec<Vec<f64>> = Vec::new();
                for j in 0..=size {
                    let b = PI * j as f64 / size as f64;
                    for i in 0..size {
                        for k in 0..size {
                            let p = RotParams {
                                angles: vec![TAU * i as f64 / size as f64, b, TAU * k as f64 / size as f64],
                                flip,
                            };
                            let m = rotation_from(3, &p);
                            let dup = seen.iter().any(|q| {
                                q.iter().zip(&m).all(|(a, c)| (a - c).abs() < 1e-9)
                            });
                            if !dup {
                                seen.push(m);
                                out.push(p);
                            }
                        }
                    }
                }
            }
        }
        _ => return Err(Error::UnsupportedDim(n)),
    }
    Ok(out)
}

/// The rotation grid of `O(n)` used by [`alpha_G`]; the identity comes first.
pub fn rotation_grid(n: usize, size: usize) -> Result<Vec<Vec<f64>>> {
    Ok(rotation_params(n, size)?
        .iter()
        .map(|p| rotation_from(n, p))
        .collect())
}

fn similarity_search(t: &Target, dil: &ScaleSearch, w: &GroupWindow) -> Result<f64> {
    let n = t.mu.dim();
    let params = rotation_params(n, t.cfg.rotation_grid_size)?;
    let zero = vec![0.0; n];
    let rotate = |c: &DiscreteMeasure, p: &RotParams| -> Result<DiscreteMeasure> {
        let g = SimilarityMap::new(1.0, rotation_from(n, p), zero.clone())?;
        Ok(c.pushforward(&g))
    };

    let mut best = (f64::INFINITY, 0usize, 0usize);
    for (si, c) in dil.blowups.iter().enumerate() {
        for (pi, p) in params.iter().enumerate() {
            let v = t.distance(&rotate(c, p)?)?;
            if v < best.0 {
                best = (v, si, pi);
            }
        }
    }

    let (mut value, si, pi) = best;
    let mut ls = ln(dil.scales[si]);
    let mut p = params[pi].clone();
    let (llo, lhi) = (ln(w.lambda1 * t.r), ln(w.lambda2 * t.r));
    let mut scale_step = (lhi - llo) / t.cfg.scale_grid_size as f64 / 2.0;
    let mut angle_step = PI / t.cfg.rotation_grid_size as f64;
    for _ in 0..t.cfg.refine_iters {
        if value <= 0.0 {
            break;
        }
        for coord in 0..=p.angles.len() {
            for sign in [-1.0, 1.0] {
                let mut q = p.clone();
                let mut lq = ls;
                if coord == 0 {
                    lq = (ls + sign * scale_step).clamp(llo, lhi);
                    if lq == ls {
                        continue;
                    }
                } else {
                    q.angles[coord - 1] += sign * angle_step;
                }
                let v = t.distance(&rotate(&t.candidate(exp(lq))?, &q)?)?;
                if v < value {
                    value = v;
                    ls = lq;
                    p = q;
                }
            }
        }
        scale_step /= 2.0;
        angle_step /= 2.0;
    }
    Ok(value.min(dil.value))
}

/// `α_𝒢(x, r)`: best rotation-dilation about `x` within the window.
pub fn alpha_G(
    mu: &DiscreteMeasure,
    x: &[f64],
    r: f64,
    w: &GroupWindow,
    cfg: &SearchConfig,
) -> Result<f64> {
    if mu.dim() > 3 {
        return Err(Error::UnsupportedDim(mu.dim()));
    }
    let t = Target::new(mu, x, r, cfg)?;
    let dil = dilation_search(&t, w)?;
    similarity_search(&t, &dil, w)
}

/// Affine plane `offset + span(basis)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffinePlane {
    pub basis: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

/// Discretized `c_V ℋ^d` on `V ∩ 𝔹`: a lattice of the given spacing in the
/// plane coordinates, aligned at the offset, normalized to mass one.
pub fn flat_reference(plane: &AffinePlane, n: usize, spacing: f64) -> DiscreteMeasure {
    let d = plane.basis.len();
    let v0 = &plane.offset;
    let rho2 = 1.0 - math::norm_sq(v0);
    if d == 0 || rho2 <= 0.0 {
        return DiscreteMeasure::dirac(v0, 1.0).expect("valid offset");
    }
    let k = math::floor(sqrt(rho2) / spacing) as i64;
    let mut coords = Vec::new();
    let mut idx = vec![-k; d];
    let mut p = vec![0.0; n];
    loop {
        for c in 0..n {
            p[c] = v0[c];
        }
        for (j, &i) in idx.iter().enumerate() {
            let t = i as f64 * spacing;
            for c in 0..n {
                p[c] += t * plane.basis[j][c];
            }
        }
        if math::norm_sq(&p) < 1.0 - 1e-12 {
            coords.extend_from_slice(&p);
        }
        let mut j = 0;
        loop {
            if j == d {
                let m = coords.len() / n;
                if m == 0 {
                    return DiscreteMeasure::dirac(v0, 1.0).expect("valid offset");
                }
                return DiscreteMeasure::from_flat(n, coords, vec![1.0 / m as f64; m])
                    .expect("lattice is valid");
            }
            idx[j] += 1;
            if idx[j] <= k {
                break;
            }
            idx[j] = -k;
            j += 1;
        }
    }
}

/// Lattice spacing for `ν_V`: the blow-up's median spacing, coarsened so the
/// lattice has about `budget` points.
fn reference_spacing(target_spacing: f64, d: usize, offset_norm: f64, budget: usize) -> f64 {
    let rho = sqrt((1.0 - offset_norm * offset_norm).max(0.0));
    let by_budget = powf(unit_ball_volume(d) * powf(rho, d as f64) / budget as f64, 1.0 / d as f64);
    target_spacing.max(by_budget)
}

/// Reference points generated before aggregation, per unit of support budget.
const REFERENCE_OVERSAMPLE: usize = 1000;

/// `ν_V` at the target's resolution. An aggregated target is compared with an
/// aggregated reference: the lattice is drawn at the raw spacing (coarsened to
/// at most `REFERENCE_OVERSAMPLE·budget` points) and then compressed alike.
fn reference_measure(plane: &AffinePlane, n: usize, spacing: f64, compressed: bool, budget: usize) -> DiscreteMeasure {
    let d = plane.basis.len();
    let offset_norm = norm(&plane.offset);
    if compressed {
        let h = reference_spacing(spacing, d, offset_norm, REFERENCE_OVERSAMPLE * budget);
        compress(&flat_reference(plane, n, h), budget)
    } else {
        flat_reference(plane, n, reference_spacing(spacing, d, offset_norm, budget))
    }
}

/// Best plane found by [`alpha_flat_fit`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatFit {
    pub value: f64,
    pub plane: AffinePlane,
}

/// Weighted second moments `Σ w (y − c)(y − c)ᵀ` and the centroid `c`.
fn moments(m: &DiscreteMeasure, centered: bool) -> (Vec<f64>, Vec<f64>) {
    let n = m.dim();
    let total = m.total_mass();
    let mut c = vec![0.0; n];
    if centered {
        for (p, w) in m.points() {
            for k in 0..n {
                c[k] += w * p[k] / total;
            }
        }
    }
    let mut cov = vec![0.0; n * n];
    for (p, w) in m.points() {
        for i in 0..n {
            for j in 0..n {
                cov[i * n + j] += w * (p[i] - c[i]) * (p[j] - c[j]);
            }
        }
    }
    (cov, c)
}

pub(crate) fn principal_frame(m: &DiscreteMeasure, centered: bool) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = m.dim();
    let (cov, c) = moments(m, centered);
    let (vals, vecs) = linalg::symmetric_eigen(&cov, n);
    (vals, vecs, c)
}

fn clamp_offset(v: &mut [f64]) {
    let len = norm(v);
    if len >= 0.5 {
        let s = 0.499 / len;
        v.iter_mut().for_each(|x| *x *= s);
    }
}

fn offset_grid(size: usize) -> Vec<f64> {
    if size == 1 {
        return vec![0.0];
    }
    (0..size)
        .map(|i| -0.4 + 0.8 * i as f64 / (size - 1) as f64)
        .collect()
}

/// All tuples of `len` values drawn from `values`, lexicographic.
fn product(values: &[f64], len: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * values.len());
        for prefix in &out {
            for &v in values {
                let mut t = prefix.clone();
                t.push(v);
                next.push(t);
            }
        }
        out = next;
    }
    out
}

struct PlaneSearch<'a> {
    n: usize,
    d: usize,
    base: Vec<f64>,
    pairs: Vec<(usize, usize)>,
    target: &'a DiscreteMeasure,
    spacing: f64,
    compressed: bool,
    budget: usize,
    transport: &'a TransportConfig,
}

impl PlaneSearch<'_> {
    fn plane(&self, angles: &[f64], offsets: &[f64]) -> AffinePlane {
        let n = self.n;
        let mut frame = self.base.clone();
        for (&(i, j), &th) in self.pairs.iter().zip(angles) {
            if th != 0.0 {
                frame = linalg::mat_mul(&frame, &linalg::givens(n, i, j, th), n);
            }
        }
        let basis: Vec<Vec<f64>> = (0..self.d).map(|j| linalg::column(&frame, n, j)).collect();
        let mut offset = vec![0.0; n];
        for (k, &o) in offsets.iter().enumerate() {
            let col = linalg::column(&frame, n, self.d + k);
            for c in 0..n {
                offset[c] += o * col[c];
            }
        }
        clamp_offset(&mut offset);
        AffinePlane { basis, offset }
    }

    fn eval(&self, plane: &AffinePlane) -> Result<f64> {
        if self.d == 0 {
            return Ok(w1_to_point(self.target, &plane.offset));
        }
        let nu = reference_measure(plane, self.n, self.spacing, self.compressed, self.budget);
        w1_value_with(self.target, &nu, self.transport)
    }
}

/// `α_d(x, r)` together with the plane attaining it.
pub fn alpha_flat_fit(
    mu: &DiscreteMeasure,
    x: &[f64],
    r: f64,
    d: usize,
    cfg: &SearchConfig,
) -> Result<FlatFit> {
    let t = Target::new(mu, x, r, cfg)?;
    flat_fit_on(&t, d)
}

fn flat_fit_on(t: &Target, d: usize) -> Result<FlatFit> {
    let (target, cfg) = (&t.blowup, t.cfg);
    let n = target.dim();
    if d > n {
        return Err(Error::BadFlatDimension { d, n });
    }
    if d == n {
        let plane = AffinePlane {
            basis: (0..n)
                .map(|j| (0..n).map(|k| if j == k { 1.0 } else { 0.0 }).collect())
                .collect(),
            offset: vec![0.0; n],
        };
        let nu = reference_measure(&plane, n, t.raw_spacing, t.compressed, cfg.max_support);
        let value = w1_value_with(target, &nu, &cfg.transport)?;
        return Ok(FlatFit { value, plane });
    }

    let (_, base, centroid) = principal_frame(target, true);
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (d..n).map(move |j| (i, j))).collect();
    let search = PlaneSearch {
        n,
        d,
        base,
        pairs,
        target,
        spacing: t.raw_spacing,
        compressed: t.compressed,
        budget: cfg.max_support,
        transport: &cfg.transport,
    };
    let size = cfg.plane_grid_size;
    let angle_values: Vec<f64> = (0..size).map(|k| PI * k as f64 / size as f64).collect();
    let offsets = offset_grid(size);
    // finer grids are cheap when the reference is a single atom
    let (offsets, rounds) = if d == 0 {
        (offset_grid(size.max(9)), 3 * cfg.refine_iters)
    } else {
        (offsets, cfg.refine_iters)
    };

    let seed_offsets: Vec<f64> = (0..n - d)
        .map(|k| math::dot(&centroid, &linalg::column(&search.base, n, d + k)))
        .collect();
    let mut candidates: Vec<(Vec<f64>, Vec<f64>)> = vec![(vec![0.0; search.pairs.len()], seed_offsets)];
    for a in product(&angle_values, search.pairs.len()) {
        for o in product(&offsets, n - d) {
            candidates.push((a.clone(), o));
        }
    }

    let mut best_val = f64::INFINITY;
    let mut best = candidates[0].clone();
    for (a, o) in &candidates {
        let v = search.eval(&search.plane(a, o))?;
        if v < best_val {
            best_val = v;
            best = (a.clone(), o.clone());
        }
    }

    let mut angle_step = PI / size as f64 / 2.0;
    let mut offset_step = if offsets.len() > 1 {
        (offsets[1] - offsets[0]) / 2.0
    } else {
        0.1
    };
    let (mut angles, mut offs) = best;
    for _ in 0..rounds {
        if best_val <= 0.0 {
            break;
        }
        let coords = angles.len() + offs.len();
        for c in 0..coords {
            for sign in [-1.0, 1.0] {
                let (mut a, mut o) = (angles.clone(), offs.clone());
                if c < a.len() {
                    a[c] += sign * angle_step;
                } else {
                    o[c - a.len()] += sign * offset_step;
                }
                let v = search.eval(&search.plane(&a, &o))?;
                if v < best_val {
                    best_val = v;
                    angles = a;
                    offs = o;
                }
            }
        }
        angle_step /= 2.0;
        offset_step /= 2.0;
    }
    Ok(FlatFit {
        value: best_val,
        plane: search.plane(&angles, &offs),
    })
}

/// `α_d(x, r)`: distance from the blow-up to the nearest normalized flat `d`-measure.
pub fn alpha_flat(
    mu: &DiscreteMeasure,
    x: &[f64],
    r: f64,
    d: usize,
    cfg: &SearchConfig,
) -> Result<f64> {
    Ok(alpha_flat_fit(mu, x, r, d, cfg)?.value)
}

fn argmin(values: &[f64]) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for (d, &v) in values.iter().enumerate() {
        if v < best.0 {
            best = (v, d);
        }
    }
    best
}

/// `α(x, r) = min_d α_d(x, r)` and the smallest minimizing `d`.
pub fn alpha_min(mu: &DiscreteMeasure, x: &[f64], r: f64, cfg: &SearchConfig) -> Result<(f64, usize)> {
    let t = Target::new(mu, x, r, cfg)?;
    let values = (0..=mu.dim())
        .map(|d| Ok(flat_fit_on(&t, d)?.value))
        .collect::<Result<Vec<f64>>>()?;
    Ok(argmin(&values))
}

/// Every coefficient at `(x, r)`.
pub fn alpha_profile(
    mu: &DiscreteMeasure,
    x: &[f64],
    r: f64,
    w: &GroupWindow,
    cfg: &SearchConfig,
) -> Result<AlphaProfile> {
    let t = Target::new(mu, x, r, cfg)?;
    let ball_count = mu.ball_count(x, r);
    let mut row_flags = 0;
    if t.blowup.len() < ball_count {
        row_flags |= flags::COMPRESSED;
    }
    let dil = dilation_search(&t, w)?;
    let alpha_G = if mu.dim() <= 3 {
        similarity_search(&t, &dil, w)?
    } else {
        row_flags |= flags::NO_ROTATIONS;
        f64::NAN
    };
    let alpha_flat = (0..=mu.dim())
        .map(|d| Ok(flat_fit_on(&t, d)?.value))
        .collect::<Result<Vec<f64>>>()?;
    let (alpha_min, best_d) = argmin(&alpha_flat);
    Ok(AlphaProfile {
        probe: x.to_vec(),
        scale: r,
        alpha_D: dil.value,
        alpha_G,
        alpha_flat,
        alpha_min,
        best_d,
        ball_mass: mu.ball_mass_at(x, r),
        ball_count,
        flags: row_flags,
    })
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// `α*_𝒢(x, r)`: mean of `α_𝒢(y, t)` over `y ~ μ|B(x,r)` and `t ~ U[r, 2r]`.
pub fn alpha_G_star(
    mu: &DiscreteMeasure,
    x: &[f64],
    r: f64,
    w: &GroupWindow,
    cfg: &SearchConfig,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    cfg.validate()?;
    let ball = mu.restrict_to_ball(x, r);
    if ball.is_empty() {
        return Err(Error::EmptyBall { radius: r });
    }
    let mut cumulative = Vec::with_capacity(ball.len());
    let mut acc = 0.0;
    for &wt in ball.weights() {
        acc += wt;
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(cfg.mc_samples);
    for _ in 0..cfg.mc_samples {
        let u: f64 = rng.random::<f64>() * acc;
        let i = cumulative.partition_point(|&c| c <= u).min(ball.len() - 1);
        let tt = r * (1.0 + rng.random::<f64>());
        values.push(alpha_G(mu, ball.point(i), tt, w, cfg)?);
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    Ok(MonteCarloEstimate {
        mean,
        std_error: sqrt(var / k),
        samples: values.len(),
    })
}
