//! Local distances `W₁` and `W_φ` between measures on the unit ball.
//!
//! Both are suprema of `|∫ψ dμ − ∫ψ dν|` (with reweighted measures for `W_φ`)
//! over 1-Lipschitz `ψ` vanishing outside `𝔹`. Such a `ψ` is exactly a
//! 1-Lipschitz function for the quotient metric
//!
//! ```text
//! d(x, y) = min(|x − y|, (1 − |x|) + (1 − |y|)),   d(x, ∂) = 1 − |x|
//! ```
//!
//! that vanishes at the collapsed boundary point `∂`. By duality the supremum
//! equals a minimum-cost flow from the positive to the negative part of
//! `μ − ν`, with one extra boundary node absorbing the mass imbalance. The
//! optimal node potentials are extended to a certified test function.

mod network_simplex;
mod ssp;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{dist, dist_sq, norm};
use crate::measure::DiscreteMeasure;

/// Radial cutoff `φ(x) = profile(|x|)` with `1_{B(0,1/2)} ≤ φ ≤ 1_{B(0,1)}`.
#[derive(Debug, Clone, Copy)]
pub struct BumpFunction {
    pub profile: fn(f64) -> f64,
    /// Exact Lipschitz norm of the profile.
    pub lip_constant: f64,
    pub name: &'static str,
}

impl PartialEq for BumpFunction {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.lip_constant == other.lip_constant
    }
}

impl BumpFunction {
    pub fn eval(&self, t: f64) -> f64 {
        (self.profile)(t)
    }

    pub fn at(&self, x: &[f64]) -> f64 {
        (self.profile)(norm(x))
    }

    /// Profile `1 − 2(t − 1/2)` on `[1/2, 1]`, Lipschitz constant 2.
    pub fn linear() -> Self {
        Self {
            profile: linear_profile,
            lip_constant: 2.0,
            name: "linear",
        }
    }
}

fn smoothstep_profile(t: f64) -> f64 {
    if t <= 0.5 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let u = 2.0 * t - 1.0;
        1.0 - (3.0 * u * u - 2.0 * u * u * u)
    }
}

fn linear_profile(t: f64) -> f64 {
    if t <= 0.5 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        2.0 - 2.0 * t
    }
}

/// Cubic smoothstep cutoff, Lipschitz constant 3.
pub fn default_bump() -> BumpFunction {
    BumpFunction {
        profile: smoothstep_profile,
        lip_constant: 3.0,
        name: "smoothstep",
    }
}

/// Linear-programming backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    NetworkSimplex,
    SuccessiveShortestPaths,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportConfig {
    pub backend: Backend,
    /// Node count above which source–sink arcs start from a k-nearest graph
    /// and violated pairs are added until the dual is feasible.
    pub dense_threshold: usize,
    pub knn: usize,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            backend: Backend::NetworkSimplex,
            dense_threshold: 2000,
            knn: 16,
        }
    }
}

impl TransportConfig {
    pub fn with_backend(backend: Backend) -> Self {
        Self {
            backend,
            ..Self::default()
        }
    }
}

/// Optimal test function `ψ`.
///
/// `values[i]` is `ψ` at `points[i]`, the merged union of both supports in
/// lexicographic order. `ψ` extends to all of `ℝⁿ` through [`DualSolution::eval`].
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub dim: usize,
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub objective: f64,
    anchors: Vec<f64>,
    anchor_values: Vec<f64>,
}

impl DualSolution {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// `ψ(x)` for any `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        extend(&self.anchors, &self.anchor_values, self.dim, x)
    }

    /// Largest violation of the Lipschitz and boundary constraints over the
    /// stored points.
    pub fn max_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            let bi = boundary(self.point(i));
            worst = worst.max(self.values[i].abs() - bi);
            for j in i + 1..self.len() {
                let gap = (self.values[i] - self.values[j]).abs();
                worst = worst.max(gap - dist(self.point(i), self.point(j)));
            }
        }
        worst
    }
}

#[inline]
fn boundary(x: &[f64]) -> f64 {
    (1.0 - norm(x)).max(0.0)
}

#[inline]
fn quotient_cost(x: &[f64], bx: f64, y: &[f64], by: f64) -> f64 {
    dist(x, y).min(bx + by)
}

fn extend(anchors: &[f64], values: &[f64], dim: usize, x: &[f64]) -> f64 {
    let bx = boundary(x);
    if bx <= 0.0 {
        return 0.0;
    }
    let mut best = bx;
    for (t, &yt) in anchors.chunks_exact(dim).zip(values) {
        let c = quotient_cost(x, bx, t, boundary(t));
        best = best.min(yt + c);
    }
    best
}

/// Uncapacitated min-cost flow instance: `out − in = supply` at every node.
pub(crate) struct Network {
    pub nodes: usize,
    pub supply: Vec<f64>,
    pub src: Vec<u32>,
    pub dst: Vec<u32>,
    pub cost: Vec<f64>,
}

impl Network {
    fn add_arc(&mut self, s: usize, t: usize, c: f64) {
        self.src.push(s as u32);
        self.dst.push(t as u32);
        self.cost.push(c);
    }
}

/// Optimal cost and potentials `y` with `y_u − y_v ≤ c_uv` on every arc.
pub(crate) struct FlowSolution {
    pub cost: f64,
    pub potentials: Vec<f64>,
}

/// Signed measure `f = μ − ν` on the merged support inside `𝔹`.
struct SignedProblem {
    dim: usize,
    coords: Vec<f64>,
    net: Vec<f64>,
}

fn merge(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> (SignedProblem, Vec<f64>) {
    let dim = mu.dim();
    let mut entries: Vec<(&[f64], f64)> = Vec::with_capacity(mu.len() + nu.len());
    entries.extend(mu.points());
    entries.extend(nu.points().map(|(p, w)| (p, -w)));
    entries.sort_by(|a, b| lex_cmp(a.0, b.0));

    let mut all = Vec::new();
    let mut coords = Vec::new();
    let mut net = Vec::new();
    let mut i = 0;
    while i < entries.len() {
        let p = entries[i].0;
        let mut pos = 0.0;
        let mut neg = 0.0;
        let mut j = i;
        while j < entries.len() && entries[j].0 == p {
            let w = entries[j].1;
            if w > 0.0 {
                pos += w;
            } else {
                neg -= w;
            }
            j += 1;
        }
        all.extend_from_slice(p);
        let f = pos - neg;
        if f != 0.0 && boundary(p) > 0.0 {
            coords.extend_from_slice(p);
            net.push(f);
        }
        i = j;
    }
    (SignedProblem { dim, coords, net }, all)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> core::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            core::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    core::cmp::Ordering::Equal
}

/// Solved problem before the dual is expanded to all points.
struct Certified {
    cost: f64,
    anchors: Vec<f64>,
    anchor_values: Vec<f64>,
}

fn solve_signed(p: &SignedProblem, cfg: &TransportConfig) -> Result<Certified> {
    let dim = p.dim;
    let m = p.net.len();
    if m == 0 {
        return Ok(Certified {
            cost: 0.0,
            anchors: Vec::new(),
            anchor_values: Vec::new(),
        });
    }
    let pt = |i: usize| &p.coords[i * dim..(i + 1) * dim];
    let b: Vec<f64> = (0..m).map(|i| boundary(pt(i))).collect();
    let sources: Vec<usize> = (0..m).filter(|&i| p.net[i] > 0.0).collect();
    let sinks: Vec<usize> = (0..m).filter(|&i| p.net[i] < 0.0).collect();

    // node m is the boundary
    let bnode = m;
    let mut supply = p.net.clone();
    supply.push(-p.net.iter().sum::<f64>());
    let mut net = Network {
        nodes: m + 1,
        supply,
        src: Vec::new(),
        dst: Vec::new(),
        cost: Vec::new(),
    };
    for &s in &sources {
        net.add_arc(s, bnode, b[s]);
    }
    for &t in &sinks {
        net.add_arc(bnode, t, b[t]);
    }

    let sparse = m + 1 > cfg.dense_threshold;
    let useful = |s: usize, t: usize| {
        let c = dist(pt(s), pt(t));
        if c < b[s] + b[t] {
            Some(c)
        } else {
            None
        }
    };
    let mut present = alloc::collections::BTreeSet::new();
    if !sparse {
        for &s in &sources {
            for &t in &sinks {
                if let Some(c) = useful(s, t) {
                    net.add_arc(s, t, c);
                }
            }
        }
    } else {
        let k = cfg.knn.max(1).min(sinks.len());
        for &s in &sources {
            let mut near: Vec<(f64, usize)> =
                sinks.iter().map(|&t| (dist_sq(pt(s), pt(t)), t)).collect();
            near.select_nth_unstable_by(k - 1, |a, c| a.0.total_cmp(&c.0).then(a.1.cmp(&c.1)));
            near[..k].sort_by(|a, c| a.1.cmp(&c.1));
            for &(_, t) in &near[..k] {
                if let Some(c) = useful(s, t) {
                    net.add_arc(s, t, c);
                    present.insert((s, t));
                }
            }
        }
    }

    let flow = loop {
        let sol = run_backend(&net, cfg.backend)?;
        if !sparse {
            break sol;
        }
        let y = &sol.potentials;
        let mut added = 0usize;
        for &s in &sources {
            for &t in &sinks {
                if present.contains(&(s, t)) {
                    continue;
                }
                if let Some(c) = useful(s, t) {
                    if y[s] - y[t] > c + 1e-10 {
                        net.add_arc(s, t, c);
                        present.insert((s, t));
                        added += 1;
                    }
                }
            }
        }
        if added == 0 {
            break sol;
        }
    };

    let yb = flow.potentials[bnode];
    let mut anchors = Vec::with_capacity(sinks.len() * dim);
    let mut anchor_values = Vec::with_capacity(sinks.len());
    for &t in &sinks {
        anchors.extend_from_slice(pt(t));
        // dual feasibility on B → t gives y_t ≥ −b_t
        anchor_values.push((flow.potentials[t] - yb).max(-b[t]));
    }
    Ok(Certified {
        cost: flow.cost.max(0.0),
        anchors,
        anchor_values,
    })
}

fn run_backend(net: &Network, backend: Backend) -> Result<FlowSolution> {
    match backend {
        Backend::NetworkSimplex => network_simplex::solve(net),
        Backend::SuccessiveShortestPaths => ssp::solve(net),
    }
}

fn certify(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cfg: &TransportConfig) -> Result<(f64, DualSolution)> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: nu.dim(),
        });
    }
    let dim = mu.dim();
    let (problem, all) = merge(mu, nu);
    let solved = solve_signed(&problem, cfg)?;
    let values: Vec<f64> = all
        .chunks_exact(dim)
        .map(|x| extend(&solved.anchors, &solved.anchor_values, dim, x))
        .collect();
    Ok((
        solved.cost,
        DualSolution {
            dim,
            points: all,
            values,
            objective: solved.cost,
            anchors: solved.anchors,
            anchor_values: solved.anchor_values,
        },
    ))
}

/// Restriction to the open unit ball (no renormalization).
fn restrict_unit(m: &DiscreteMeasure) -> DiscreteMeasure {
    if m.points().all(|(p, _)| boundary(p) > 0.0) {
        return m.clone();
    }
    m.restrict_to_ball(&vec![0.0; m.dim()], 1.0)
}

fn unit_ball_mass(m: &DiscreteMeasure) -> f64 {
    m.points()
        .filter(|(p, _)| boundary(p) > 0.0)
        .map(|(_, w)| w)
        .sum()
}

/// `W₁(μ, ν)` with its optimal test function.
pub fn w1(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(f64, DualSolution)> {
    w1_with(mu, nu, &TransportConfig::default())
}

pub fn w1_with(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cfg: &TransportConfig,
) -> Result<(f64, DualSolution)> {
    let (mm, nm) = (unit_ball_mass(mu), unit_ball_mass(nu));
    if (mm - 1.0).abs() > 1e-9 || (nm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { mu: mm, nu: nm });
    }
    certify(&restrict_unit(mu), &restrict_unit(nu), cfg)
}

/// `W₁` value only.
pub fn w1_value(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    w1_value_with(mu, nu, &TransportConfig::default())
}

pub fn w1_value_with(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cfg: &TransportConfig) -> Result<f64> {
    let (mm, nm) = (unit_ball_mass(mu), unit_ball_mass(nu));
    if (mm - 1.0).abs() > 1e-9 || (nm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { mu: mm, nu: nm });
    }
    if nu.len() == 1 && boundary(nu.point(0)) > 0.0 {
        return Ok(w1_to_point(mu, nu.point(0)));
    }
    if mu.len() == 1 && boundary(mu.point(0)) > 0.0 {
        return Ok(w1_to_point(nu, mu.point(0)));
    }
    let (problem, _) = merge(&restrict_unit(mu), &restrict_unit(nu));
    Ok(solve_signed(&problem, cfg)?.cost)
}

/// Closed form `W₁(μ, δ_v) = Σ w_p d(p, v)` for `μ` a probability measure on
/// `𝔹` and `v ∈ 𝔹`.
pub fn w1_to_point(mu: &DiscreteMeasure, v: &[f64]) -> f64 {
    let bv = boundary(v);
    mu.points()
        .filter(|(p, _)| boundary(p) > 0.0)
        .map(|(p, w)| w * quotient_cost(p, boundary(p), v, bv))
        .sum()
}

/// `φ`-reweighted copy of `m` normalized to mass one, points with `φ = 0` dropped.
pub fn phi_normalize(m: &DiscreteMeasure, phi: &BumpFunction) -> Result<DiscreteMeasure> {
    let half = m.ball_mass_at(&vec![0.0; m.dim()], 0.5);
    if half <= 0.0 {
        return Err(Error::InnerBallEmpty { radius: 0.5 });
    }
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for (p, w) in m.points() {
        let f = phi.at(p);
        if f > 0.0 {
            coords.extend_from_slice(p);
            weights.push(f * w);
        }
    }
    let total: f64 = crate::math::compensated_sum(weights.iter().copied());
    weights.iter_mut().for_each(|w| *w /= total);
    DiscreteMeasure::from_flat(m.dim(), coords, weights)
}

/// `W_φ(μ, ν)`; no normalization of the inputs is needed.
pub fn w_phi(mu: &DiscreteMeasure, nu: &DiscreteMeasure, phi: &BumpFunction) -> Result<f64> {
    Ok(w_phi_with(mu, nu, phi, &TransportConfig::default())?.0)
}

pub fn w_phi_with(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    phi: &BumpFunction,
    cfg: &TransportConfig,
) -> Result<(f64, DualSolution)> {
    let a = phi_normalize(mu, phi)?;
    let b = phi_normalize(nu, phi)?;
    certify(&a, &b, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::measure::SimilarityMap;
    use proptest::prelude::*;

    fn dirac(p: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::dirac(p, 1.0).unwrap()
    }

    fn both_backends() -> [TransportConfig; 2] {
        [
            TransportConfig::with_backend(Backend::NetworkSimplex),
            TransportConfig::with_backend(Backend::SuccessiveShortestPaths),
        ]
    }

    #[test]
    fn bump_profile_values() {
        let phi = default_bump();
        assert_eq!(phi.eval(0.0), 1.0);
        assert_eq!(phi.eval(1.0), 0.0);
        assert!((phi.eval(0.75) - 0.5).abs() < 1e-15);
        assert_eq!(phi.lip_constant, 3.0);
    }

    #[test]
    fn bump_lipschitz_constant_is_attained() {
        for phi in [default_bump(), BumpFunction::linear()] {
            let n = 100_000;
            let mut best: f64 = 0.0;
            for i in 0..n {
                let t0 = 0.4 + 0.7 * i as f64 / n as f64;
                let t1 = t0 + 0.7 / n as f64;
                best = best.max((phi.eval(t1) - phi.eval(t0)).abs() / (t1 - t0));
            }
            assert!(best <= phi.lip_constant + 1e-9);
            assert!(best >= phi.lip_constant - 1e-3);
        }
    }

    #[test]
    fn identical_measures_are_at_distance_zero() {
        let m = DiscreteMeasure::new(2, vec![vec![0.1, 0.2], vec![-0.3, 0.4]], vec![0.5, 0.5])
            .unwrap();
        assert_eq!(w1(&m, &m).unwrap().0, 0.0);
        assert_eq!(w_phi(&m, &m, &default_bump()).unwrap(), 0.0);
    }

    #[test]
    fn dirac_pair() {
        for cfg in both_backends() {
            let (v, dual) = w1_with(&dirac(&[0.0, 0.0]), &dirac(&[0.3, 0.0]), &cfg).unwrap();
            assert!((v - 0.3).abs() < 1e-12);
            assert!(dual.max_violation() < 1e-12);
        }
    }

    #[test]
    fn split_atoms_against_center() {
        let mu = DiscreteMeasure::new(2, vec![vec![-0.2, 0.0], vec![0.2, 0.0]], vec![0.5, 0.5])
            .unwrap();
        let nu = dirac(&[0.0, 0.0]);
        for cfg in both_backends() {
            let (v, dual) = w1_with(&mu, &nu, &cfg).unwrap();
            assert!((v - 0.2).abs() < 1e-12);
            let witness = |x: &[f64]| norm(x).min(1.0 - norm(x));
            let direct = 0.5 * witness(&[-0.2, 0.0]) + 0.5 * witness(&[0.2, 0.0]) - witness(&[0.0, 0.0]);
            assert!((direct - v).abs() < 1e-12);
            assert!(dual.max_violation() < 1e-12);
        }
    }

    #[test]
    fn near_boundary_mass_leaves_through_the_boundary() {
        // both atoms at distance 0.05 from the sphere on opposite sides
        let mu = dirac(&[0.95, 0.0]);
        let nu = dirac(&[-0.95, 0.0]);
        let v = w1(&mu, &nu).unwrap().0;
        assert!((v - 0.1).abs() < 1e-12);
    }

    #[test]
    fn points_outside_the_ball_are_ignored() {
        let mu = DiscreteMeasure::new(1, vec![vec![0.0], vec![3.0]], vec![1.0, 7.0]).unwrap();
        let v = w1(&mu, &dirac(&[0.5])).unwrap().0;
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_unnormalized_input() {
        let m = DiscreteMeasure::dirac(&[0.0], 2.0).unwrap();
        assert!(matches!(w1(&m, &dirac(&[0.0])), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn w_phi_examples() {
        let phi = default_bump();
        let v = w_phi(&dirac(&[0.0, 0.0]), &dirac(&[0.3, 0.0]), &phi).unwrap();
        assert!((v - 0.3).abs() < 1e-12);

        let mu = DiscreteMeasure::new(2, vec![vec![0.1, 0.0], vec![0.6, 0.2]], vec![0.3, 0.7]).unwrap();
        let nu = DiscreteMeasure::new(2, vec![vec![-0.2, 0.1], vec![0.0, 0.7]], vec![0.4, 0.6]).unwrap();
        let base = w_phi(&mu, &nu, &phi).unwrap();
        let scaled = w_phi(&mu.scaled(3.0), &nu.scaled(5.0), &phi).unwrap();
        assert!((base - scaled).abs() < 1e-12);

        assert!(matches!(
            w_phi(&dirac(&[0.7, 0.0]), &mu, &phi),
            Err(Error::InnerBallEmpty { .. })
        ));
    }

    #[test]
    fn closed_form_for_point_targets_matches_lp() {
        let mu = DiscreteMeasure::new(
            2,
            vec![vec![0.1, 0.0], vec![0.6, 0.2], vec![-0.9, 0.1]],
            vec![0.3, 0.5, 0.2],
        )
        .unwrap();
        let v = [0.2, -0.3];
        let lp = w1(&mu, &dirac(&v)).unwrap().0;
        assert!((lp - w1_to_point(&mu, &v)).abs() < 1e-12);
    }

    #[test]
    fn sparse_mode_matches_dense() {
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) * 1.2 - 0.6
        };
        let mut pa = Vec::new();
        let mut pb = Vec::new();
        for _ in 0..120 {
            pa.push(vec![next(), next()]);
            pb.push(vec![next() * 0.5, next() * 0.5]);
        }
        let a = DiscreteMeasure::uniform(2, pa).unwrap();
        let b = DiscreteMeasure::uniform(2, pb).unwrap();
        let dense = w1(&a, &b).unwrap().0;
        let cfg = TransportConfig {
            dense_threshold: 10,
            knn: 3,
            ..TransportConfig::default()
        };
        let (sparse, dual) = w1_with(&a, &b, &cfg).unwrap();
        assert!((dense - sparse).abs() < 1e-9);
        assert!(dual.max_violation() < 1e-9);
    }

    fn cloud(n: usize) -> impl Strategy<Value = DiscreteMeasure> {
        (
            proptest::collection::vec(proptest::collection::vec(-0.7f64..0.7, 2), 1..n),
            proptest::collection::vec(0.05f64..1.0, n),
        )
            .prop_map(|(pts, w)| {
                let w = w[..pts.len()].to_vec();
                let total: f64 = w.iter().sum();
                let w = w.iter().map(|v| v / total).collect();
                DiscreteMeasure::new(2, pts, w).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn w1_is_a_metric(a in cloud(12), b in cloud(12), c in cloud(12)) {
            let ab = w1_value(&a, &b).unwrap();
            let ba = w1_value(&b, &a).unwrap();
            let bc = w1_value(&b, &c).unwrap();
            let ac = w1_value(&a, &c).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() < 1e-8);
            prop_assert!(ac <= ab + bc + 1e-8);
            prop_assert!(ab <= 2.0);
        }

        #[test]
        fn dual_is_feasible_and_tight(a in cloud(15), b in cloud(15)) {
            for cfg in both_backends() {
                let (v, dual) = w1_with(&a, &b, &cfg).unwrap();
                prop_assert!(dual.max_violation() < 1e-9);
                let ia: f64 = a.points().map(|(p, w)| w * dual.eval(p)).sum();
                let ib: f64 = b.points().map(|(p, w)| w * dual.eval(p)).sum();
                prop_assert!(((ia - ib) - v).abs() < 1e-9);
                prop_assert!((dual.objective - v).abs() < 1e-12);
            }
        }

        #[test]
        fn backends_agree(a in cloud(20), b in cloud(20)) {
            let x = w1_value_with(&a, &b, &both_backends()[0]).unwrap();
            let y = w1_value_with(&a, &b, &both_backends()[1]).unwrap();
            prop_assert!((x - y).abs() < 1e-9);
        }

        #[test]
        fn w_phi_axioms(a in cloud(10), b in cloud(10), c in cloud(10), s in 0.1f64..10.0,
                        th in 0.0f64..6.3) {
            let phi = default_bump();
            if let (Ok(ab), Ok(bc), Ok(ac)) = (w_phi(&a, &b, &phi), w_phi(&b, &c, &phi), w_phi(&a, &c, &phi)) {
                prop_assert!(ab <= 2.0);
                prop_assert!(ac <= ab + bc + 1e-8);
                let scaled = w_phi(&a.scaled(s), &b, &phi).unwrap();
                prop_assert!((scaled - ab).abs() < 1e-9);
                let g = SimilarityMap::new(1.0, linalg::rotation_2d(th), vec![0.0, 0.0]).unwrap();
                let turned = w_phi(&a.pushforward(&g), &b.pushforward(&g), &phi).unwrap();
                prop_assert!((turned - ab).abs() < 1e-8);
            }
        }
    }
}
