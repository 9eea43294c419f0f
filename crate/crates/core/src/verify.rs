//! Seeded harness checking the `W₁`/`W_φ` axioms and comparison inequalities.
//!
//! Trial `i` of a run with seed `s` draws from ChaCha8 seeded with `s` on
//! stream `i`, so every report is reproducible and trials are independent.
//! A random measure (ambient dimension 1, 2 or 3 with equal odds) is a
//! mixture of one or two parts with weights uniform in `[0.2, 1]`, each part
//! being with equal odds
//!
//! - an atom cloud of 1 to 6 atoms uniform in `B(0, 0.95)`,
//! - a lattice piece of a random 1- or 2-plane through a point of `B(0, ½)`,
//! - a randomly scaled and rotated Cantor (or, for `n ≥ 2`, Sierpinski) truncation.
//!
//! The mixture is restricted to `𝔹`; when the inner ball required by a check
//! is empty an anchor atom of weight 0.1 is added inside it. The result is
//! normalized to unit mass. The second measure of a pair is independent with
//! probability ½, otherwise a perturbed copy (points moved by at most 0.05,
//! weights by at most 20%).

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::generators;
use crate::linalg;
use crate::math::{dot, norm};
use crate::measure::{BallQuery, DiscreteMeasure, SimilarityMap};
use crate::transport::{self, Backend, BumpFunction, TransportConfig};

/// Absolute tolerance of every inequality.
pub const TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    /// Which inequality of the check this record tests.
    pub kind: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// Quadrature slack added to `rhs` (zero except for the averaged check).
    pub slack: f64,
    /// `rhs + slack − lhs`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub trials: usize,
    pub seed: u64,
    /// Factor applied to the constant of the bound.
    pub bound_scale: f64,
    pub lhs_max: f64,
    /// Smallest `rhs/lhs` over records with `lhs, rhs > 0`.
    pub min_rhs_over_lhs: f64,
    pub slack_max: f64,
    /// Largest disagreement between the two transport backends, when cross-checked.
    pub backend_gap: Option<f64>,
    pub violations: usize,
    pub records: Vec<TrialRecord>,
    pub pass: bool,
}

impl CheckReport {
    fn new(name: &str, trials: usize, seed: u64, bound_scale: f64, records: Vec<TrialRecord>) -> Self {
        let violations = records.iter().filter(|r| r.margin < -TOLERANCE).count();
        let lhs_max = records.iter().map(|r| r.lhs).fold(0.0, f64::max);
        let min_ratio = records
            .iter()
            .filter(|r| r.lhs > 0.0 && r.rhs > 0.0)
            .map(|r| r.rhs / r.lhs)
            .fold(f64::INFINITY, f64::min);
        let slack_max = records.iter().map(|r| r.slack).fold(0.0, f64::max);
        Self {
            name: name.into(),
            trials,
            seed,
            bound_scale,
            lhs_max,
            min_rhs_over_lhs: min_ratio,
            slack_max,
            backend_gap: None,
            violations,
            records,
            pass: violations == 0,
        }
    }
}

fn record(trial: usize, kind: &'static str, lhs: f64, rhs: f64, slack: f64) -> TrialRecord {
    TrialRecord {
        trial,
        kind,
        lhs,
        rhs,
        slack,
        margin: rhs + slack - lhs,
    }
}

/// Harness parameters shared by every check.
#[derive(Debug, Clone)]
pub struct Harness {
    pub trials: usize,
    pub seed: u64,
    pub phi: BumpFunction,
    /// Multiplies the constant of each bound; 1 checks the stated inequalities.
    pub bound_scale: f64,
    pub transport: TransportConfig,
}

impl Harness {
    pub fn new(trials: usize, seed: u64, phi: BumpFunction) -> Self {
        Self {
            trials: trials.max(1),
            seed,
            phi,
            bound_scale: 1.0,
            transport: TransportConfig::default(),
        }
    }

    pub fn with_bound_scale(mut self, s: f64) -> Self {
        self.bound_scale = s;
        self
    }

    fn rng(&self, trial: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial as u64);
        rng
    }

    fn w1(&self, a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<f64> {
        transport::w1_value_with(a, b, &self.transport)
    }

    fn wphi(&self, a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<f64> {
        Ok(transport::w_phi_with(a, b, &self.phi, &self.transport)?.0)
    }

    /// Symmetry, identity, nonnegativity, the triangle inequality and `W₁ ≤ 2`.
    pub fn w1_axioms(&self) -> Result<CheckReport> {
        let mut recs = Vec::new();
        for t in 0..self.trials {
            let mut rng = self.rng(t);
            let n = random_dim(&mut rng);
            let a = random_measure(&mut rng, n, 0.0);
            let b = random_partner(&mut rng, &a, 0.0);
            let c = random_partner(&mut rng, &a, 0.0);
            let ab = self.w1(&a, &b)?;
            let ba = self.w1(&b, &a)?;
            let bc = self.w1(&b, &c)?;
            let ac = self.w1(&a, &c)?;
            recs.push(record(t, "symmetry", (ab - ba).abs(), 0.0, 0.0));
            recs.push(record(t, "identity", self.w1(&a, &a)?, 0.0, 0.0));
            recs.push(record(t, "nonnegative", -ab, 0.0, 0.0));
            recs.push(record(t, "triangle", ac, self.bound_scale * (ab + bc), 0.0));
            recs.push(record(t, "bounded", ab, self.bound_scale * 2.0, 0.0));
        }
        Ok(CheckReport::new("w1_axioms", self.trials, self.seed, self.bound_scale, recs))
    }

    /// `W_φ ≤ (1 + 2‖φ‖)/μ(B(0,½)) · W₁` for unit-mass pairs, with a backend cross-check.
    pub fn lemma_5_1(&self) -> Result<CheckReport> {
        let lip = self.phi.lip_constant;
        let other = TransportConfig {
            backend: match self.transport.backend {
                Backend::NetworkSimplex => Backend::SuccessiveShortestPaths,
                Backend::SuccessiveShortestPaths => Backend::NetworkSimplex,
            },
            ..self.transport.clone()
        };
        let mut recs = Vec::new();
        let mut gap: f64 = 0.0;
        for t in 0..self.trials {
            let mut rng = self.rng(t);
            let n = random_dim(&mut rng);
            let a = random_measure(&mut rng, n, 0.5);
            let b = random_partner(&mut rng, &a, 0.5);
            let w1 = self.w1(&a, &b)?;
            gap = gap.max((w1 - transport::w1_value_with(&a, &b, &other)?).abs());
            let inner = a.ball_mass_at(&vec![0.0; n], 0.5);
            let rhs = self.bound_scale * (1.0 + 2.0 * lip) / inner * w1;
            recs.push(record(t, "bound", self.wphi(&a, &b)?, rhs, 0.0));
        }
        let mut rep = CheckReport::new("lemma_5_1", self.trials, self.seed, self.bound_scale, recs);
        rep.backend_gap = Some(gap);
        if gap > 1e-7 {
            rep.pass = false;
        }
        Ok(rep)
    }

    /// `W_φ(μ₁, ν₁) ≤ θ⁻¹(1 + 4‖φ‖) μ(B(0,1))/μ(B(0,θ/2)) · W_φ(μ, ν)` with `μ₁(A) = μ(θA)`.
    pub fn lemma_5_2(&self, theta: f64) -> Result<CheckReport> {
        let lip = self.phi.lip_constant;
        let mut recs = Vec::new();
        for t in 0..self.trials {
            let mut rng = self.rng(t);
            let n = random_dim(&mut rng);
            let a = random_measure(&mut rng, n, theta / 2.0);
            let b = random_partner(&mut rng, &a, theta / 2.0);
            let zoom = SimilarityMap::dilation(1.0 / theta, vec![0.0; n]);
            let lhs = self.wphi(&a.pushforward(&zoom), &b.pushforward(&zoom))?;
            let o = vec![0.0; n];
            let ratio = a.ball_mass_at(&o, 1.0) / a.ball_mass_at(&o, theta / 2.0);
            let rhs = self.bound_scale * (1.0 + 4.0 * lip) / theta * ratio * self.wphi(&a, &b)?;
            recs.push(record(t, "bound", lhs, rhs, 0.0));
        }
        Ok(CheckReport::new("lemma_5_2", self.trials, self.seed, self.bound_scale, recs))
    }

    /// `⨍_{1/4}^{1/2} W₁(μ_t, ν_t) dt ≤ (8 + ‖φ‖) μ(𝔹)/μ(B(0,¼)) · W_φ(μ, ν)`, the
    /// average taken by the midpoint rule on `quad_points` nodes; the slack is
    /// its distance to the rule with twice as many nodes.
    pub fn lemma_5_3(&self, quad_points: usize) -> Result<CheckReport> {
        let lip = self.phi.lip_constant;
        let q = quad_points.max(1);
        let mut recs = Vec::new();
        for t in 0..self.trials {
            let mut rng = self.rng(t);
            let n = random_dim(&mut rng);
            let a = random_measure(&mut rng, n, 0.25);
            let b = random_partner(&mut rng, &a, 0.25);
            let coarse = self.averaged_w1(&a, &b, q)?;
            let fine = self.averaged_w1(&a, &b, 2 * q)?;
            let o = vec![0.0; n];
            let ratio = a.ball_mass_at(&o, 1.0) / a.ball_mass_at(&o, 0.25);
            let rhs = self.bound_scale * (8.0 + lip) * ratio * self.wphi(&a, &b)?;
            recs.push(record(t, "bound", coarse, rhs, (coarse - fine).abs()));
        }
        Ok(CheckReport::new("lemma_5_3", self.trials, self.seed, self.bound_scale, recs))
    }

    /// Midpoint-rule mean of `t ↦ W₁(μ_t, ν_t)` over `[¼, ½]`.
    pub fn averaged_w1(&self, a: &DiscreteMeasure, b: &DiscreteMeasure, nodes: usize) -> Result<f64> {
        let n = a.dim();
        let mut acc = 0.0;
        for i in 0..nodes {
            let t = 0.25 + 0.25 * (i as f64 + 0.5) / nodes as f64;
            let q = BallQuery::new(vec![0.0; n], t)?;
            acc += self.w1(&a.blowup(&q)?, &b.blowup(&q)?)?;
        }
        Ok(acc / nodes as f64)
    }

    /// `W_φ ≤ 2`, invariance under `(aμ, bν)` and the triangle inequality.
    pub fn wphi_bounds(&self) -> Result<CheckReport> {
        let mut recs = Vec::new();
        for t in 0..self.trials {
            let mut rng = self.rng(t);
            let n = random_dim(&mut rng);
            let a = random_measure(&mut rng, n, 0.5);
            let b = random_partner(&mut rng, &a, 0.5);
            let c = random_partner(&mut rng, &a, 0.5);
            let ab = self.wphi(&a, &b)?;
            let sa = crate::math::exp(rng.random_range(-2.3..2.3));
            let sb = crate::math::exp(rng.random_range(-2.3..2.3));
            let scaled = self.wphi(&a.scaled(sa), &b.scaled(sb))?;
            recs.push(record(t, "bounded", ab, self.bound_scale * 2.0, 0.0));
            recs.push(record(t, "scaling", (scaled - ab).abs(), 0.0, 0.0));
            let rhs = self.bound_scale * (ab + self.wphi(&b, &c)?);
            recs.push(record(t, "triangle", self.wphi(&a, &c)?, rhs, 0.0));
        }
        Ok(CheckReport::new("wphi_bounds", self.trials, self.seed, self.bound_scale, recs))
    }

    /// Every check with `θ ∈ {¼, ½}` and 16 quadrature nodes.
    pub fn all(&self) -> Result<Vec<CheckReport>> {
        Ok(vec![
            self.w1_axioms()?,
            self.lemma_5_1()?,
            self.lemma_5_2(0.25)?,
            self.lemma_5_2(0.5)?,
            self.lemma_5_3(16)?,
            self.wphi_bounds()?,
        ])
    }
}

pub fn check_w1_axioms(trials: usize, seed: u64) -> Result<CheckReport> {
    Harness::new(trials, seed, transport::default_bump()).w1_axioms()
}

pub fn check_lemma_5_1(trials: usize, seed: u64, phi: &BumpFunction) -> Result<CheckReport> {
    Harness::new(trials, seed, phi.clone()).lemma_5_1()
}

pub fn check_lemma_5_2(trials: usize, seed: u64, phi: &BumpFunction, theta: f64) -> Result<CheckReport> {
    if !(theta > 0.0 && theta <= 0.5) {
        return Err(crate::Error::InvalidConfig("theta must lie in (0, 1/2]"));
    }
    Harness::new(trials, seed, phi.clone()).lemma_5_2(theta)
}

pub fn check_lemma_5_3(trials: usize, seed: u64, phi: &BumpFunction, quad_points: usize) -> Result<CheckReport> {
    Harness::new(trials, seed, phi.clone()).lemma_5_3(quad_points)
}

pub fn check_wphi_bounds(trials: usize, seed: u64, phi: &BumpFunction) -> Result<CheckReport> {
    Harness::new(trials, seed, phi.clone()).wphi_bounds()
}

fn random_dim(rng: &mut ChaCha8Rng) -> usize {
    rng.random_range(1..=3)
}

fn random_in_ball(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if norm(&p) < 1.0 {
            return p.into_iter().map(|v| v * radius).collect();
        }
    }
}

/// Random orthonormal frame, columns stored row-major in an `n × n` matrix.
fn random_frame(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
        for _ in 0..n {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            for c in &cols {
                let p = dot(&v, c);
                for k in 0..n {
                    v[k] -= p * c[k];
                }
            }
            let len = norm(&v);
            if len < 1e-3 {
                break;
            }
            cols.push(v.into_iter().map(|x| x / len).collect());
        }
        if cols.len() == n {
            let mut m = vec![0.0; n * n];
            for (j, c) in cols.iter().enumerate() {
                for i in 0..n {
                    m[i * n + j] = c[i];
                }
            }
            return m;
        }
    }
}

/// Places a measure of dimension `k ≤ n` in `ℝⁿ` as `u ↦ s·F(u, 0) + shift`.
fn embed(m: &DiscreteMeasure, n: usize, frame: &[f64], s: f64, shift: &[f64]) -> DiscreteMeasure {
    let k = m.dim();
    let mut coords = Vec::with_capacity(m.len() * n);
    let mut full = vec![0.0; n];
    for (p, _) in m.points() {
        full[..k].copy_from_slice(p);
        full[k..].iter_mut().for_each(|v| *v = 0.0);
        let q = linalg::mat_vec(frame, &full, n);
        coords.extend(q.iter().zip(shift).map(|(a, b)| s * a + b));
    }
    DiscreteMeasure::from_flat(n, coords, m.weights().to_vec()).expect("embedding keeps validity")
}

fn random_part(rng: &mut ChaCha8Rng, n: usize) -> DiscreteMeasure {
    match rng.random_range(0..3) {
        0 => {
            let k = rng.random_range(1..=6);
            let pts: Vec<Vec<f64>> = (0..k).map(|_| random_in_ball(rng, n, 0.95)).collect();
            let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
            DiscreteMeasure::new(n, pts, w).expect("valid atoms")
        }
        1 => {
            let d = rng.random_range(1..=n.min(2));
            let frame = random_frame(rng, n);
            let basis: Vec<Vec<f64>> = (0..d).map(|j| linalg::column(&frame, n, j)).collect();
            let offset = random_in_ball(rng, n, 0.5);
            let half = rng.random_range(0.2..0.8);
            let per_side = if d == 1 { rng.random_range(6..=20) } else { rng.random_range(2..=4) };
            let spacing = half / per_side as f64;
            generators::flat_measure(&basis, &offset, 1.0, half, spacing).expect("valid flat piece")
        }
        _ => {
            let base = if n >= 2 && rng.random_bool(0.5) {
                generators::ifs_measure(&generators::sierpinski(rng.random_range(2..=4)).expect("valid"))
            } else {
                generators::ifs_measure(&generators::cantor(rng.random_range(3..=5)).expect("valid"))
            }
            .expect("within budget");
            let frame = random_frame(rng, n);
            let s = rng.random_range(0.4..1.4);
            let shift = random_in_ball(rng, n, 0.6);
            let lifted = lift(&base, n);
            embed(&lifted, n, &frame, s, &shift)
        }
    }
}

/// Truncates or pads coordinates so the measure lives in dimension `min(dim, n)`.
fn lift(m: &DiscreteMeasure, n: usize) -> DiscreteMeasure {
    if m.dim() <= n {
        return m.clone();
    }
    let coords: Vec<f64> = m.points().flat_map(|(p, _)| p[..n].to_vec()).collect();
    DiscreteMeasure::from_flat(n, coords, m.weights().to_vec()).expect("valid projection")
}

fn finish(rng: &mut ChaCha8Rng, m: DiscreteMeasure, inner: f64) -> DiscreteMeasure {
    let n = m.dim();
    let o = vec![0.0; n];
    let mut m = m.restrict_to_ball(&o, 1.0);
    let need_anchor = m.is_empty() || (inner > 0.0 && m.ball_mass_at(&o, inner) <= 0.0);
    if need_anchor {
        let target = if inner > 0.0 { inner } else { 1.0 };
        let p = random_in_ball(rng, n, 0.9 * target);
        let atom = DiscreteMeasure::dirac(&p, 0.1).expect("valid anchor");
        m = if m.is_empty() {
            atom
        } else {
            generators::mix(&[m, atom], &[1.0, 1.0]).expect("same dimension")
        };
    }
    let total = m.total_mass();
    m.scaled(1.0 / total)
}

/// Random measure in `ℝⁿ` of unit mass on `𝔹` with mass in `B(0, inner)`.
pub fn random_measure(rng: &mut ChaCha8Rng, n: usize, inner: f64) -> DiscreteMeasure {
    let parts = rng.random_range(1..=2);
    let pieces: Vec<DiscreteMeasure> = (0..parts).map(|_| random_part(rng, n)).collect();
    let w: Vec<f64> = (0..parts).map(|_| rng.random_range(0.2..1.0)).collect();
    let m = generators::mix(&pieces, &w).expect("same dimension");
    finish(rng, m, inner)
}

/// Independent draw or a perturbed copy of `a`, with equal odds.
pub fn random_partner(rng: &mut ChaCha8Rng, a: &DiscreteMeasure, inner: f64) -> DiscreteMeasure {
    let n = a.dim();
    if rng.random_bool(0.5) {
        return random_measure(rng, n, inner);
    }
    let mut coords = Vec::with_capacity(a.len() * n);
    let mut w = Vec::with_capacity(a.len());
    for (p, wt) in a.points() {
        let jitter = random_in_ball(rng, n, 0.05);
        coords.extend(p.iter().zip(&jitter).map(|(x, j)| x + j));
        w.push(wt * rng.random_range(0.8..1.2));
    }
    let m = DiscreteMeasure::from_flat(n, coords, w).expect("valid perturbation");
    finish(rng, m, inner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::default_bump;

    fn dirac(p: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::dirac(p, 1.0).unwrap()
    }

    #[test]
    fn examples_on_dirac_pairs() {
        let h = Harness::new(1, 0, default_bump());
        let a = dirac(&[0.0, 0.0]);
        let b = dirac(&[0.3, 0.0]);
        assert_eq!(h.w1(&a, &a).unwrap(), 0.0);
        let w1 = h.w1(&a, &b).unwrap();
        assert!((w1 - 0.3).abs() < 1e-12);
        let wphi = h.wphi(&a, &b).unwrap();
        assert!((wphi - 0.3).abs() < 1e-12);
        assert!((7.0 * w1 - 2.1).abs() < 1e-12);

        let c = dirac(&[0.1, 0.0]);
        let avg = h.averaged_w1(&a, &c, 64).unwrap();
        // ⨍ 0.1/t dt over [1/4, 1/2]
        let exact = 4.0 * 0.1 * crate::math::LN_2;
        assert!((avg - exact).abs() < 1e-4);
        assert!(avg <= 11.0 * h.wphi(&a, &c).unwrap());
    }

    #[test]
    fn random_measures_meet_the_preconditions() {
        for t in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            rng.set_stream(t);
            let n = random_dim(&mut rng);
            let a = random_measure(&mut rng, n, 0.25);
            let b = random_partner(&mut rng, &a, 0.25);
            for m in [&a, &b] {
                let o = vec![0.0; n];
                assert!((m.ball_mass_at(&o, 1.0) - 1.0).abs() < 1e-12);
                assert!(m.ball_mass_at(&o, 0.25) > 0.0);
                assert!(m.len() <= 200, "{}", m.len());
            }
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let a = check_lemma_5_1(6, 11, &default_bump()).unwrap();
        let b = check_lemma_5_1(6, 11, &default_bump()).unwrap();
        assert_eq!(a, b);
        let c = check_lemma_5_1(6, 12, &default_bump()).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn small_runs_pass() {
        let phi = default_bump();
        assert!(check_w1_axioms(8, 1).unwrap().pass);
        let r = check_lemma_5_1(8, 1, &phi).unwrap();
        assert!(r.pass && r.backend_gap.unwrap() < 1e-7);
        assert!(check_lemma_5_2(8, 1, &phi, 0.5).unwrap().pass);
        assert!(check_lemma_5_2(8, 1, &phi, 0.25).unwrap().pass);
        assert!(check_lemma_5_3(4, 1, &phi, 8).unwrap().pass);
        assert!(check_wphi_bounds(8, 1, &phi).unwrap().pass);
        assert!(check_lemma_5_2(1, 1, &phi, 0.7).is_err());
    }

    #[test]
    fn corrupted_bound_can_fail() {
        let h = Harness::new(8, 1, default_bump()).with_bound_scale(0.0);
        let r = h.lemma_5_1().unwrap();
        assert!(!r.pass);
        assert!(r.violations > 0);
    }
}
