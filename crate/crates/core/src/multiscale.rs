//! Scale sweeps, discretized Dini sums, density ratios and regularity diagnostics.

use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::alpha::{self, flags, AlphaProfile, GroupWindow, SearchConfig};
use crate::error::{Error, Result};
use crate::math::{ln, powf, powi, LN_2};
use crate::measure::DiscreteMeasure;
use crate::transport::{w1_value_with, w_phi_with, BumpFunction};

/// Rows whose ball holds fewer support points are flagged under-resolved.
pub const RESOLUTION_FLOOR: usize = 30;

/// Geometric ladder `r_k = r_max·q^{-k}`, `k = 0..K−1`; dyadic when `q = 2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleLadder {
    pub r_max: f64,
    pub depth: usize,
    pub ratio: f64,
    pub radii: Vec<f64>,
}

impl ScaleLadder {
    pub fn dyadic(r_max: f64, depth: usize) -> Result<Self> {
        Self::geometric(r_max, depth, 2.0)
    }

    pub fn geometric(r_max: f64, depth: usize, ratio: f64) -> Result<Self> {
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::InvalidRadius(r_max));
        }
        if depth == 0 {
            return Err(Error::InvalidConfig("ladder depth must be positive"));
        }
        if !(ratio > 1.0 && ratio.is_finite()) {
            return Err(Error::InvalidConfig("ladder ratio must exceed 1"));
        }
        let radii = (0..depth).map(|k| r_max * powi(ratio, -(k as i32))).collect();
        Ok(Self {
            r_max,
            depth,
            ratio,
            radii,
        })
    }

    pub fn min_radius(&self) -> f64 {
        *self.radii.last().expect("depth is positive")
    }

    /// `ln q`, the `dr/r` measure of one band.
    pub fn band(&self) -> f64 {
        ln(self.ratio)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiniWeight {
    Plain,
    Log,
}

/// Which coefficient a Dini sum integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Coefficient {
    Dilation,
    Similarity,
    /// `min_d α_d`.
    Flatness,
}

impl Coefficient {
    pub fn of(self, row: &AlphaProfile) -> f64 {
        match self {
            Coefficient::Dilation => row.alpha_D,
            Coefficient::Similarity => row.alpha_G,
            Coefficient::Flatness => row.alpha_min,
        }
    }
}

/// Dyadic Dini sum of `(r_k, α_k)`: plain `Σ α_k·ln 2`, log-weighted
/// `Σ α_k·ln(2/r_k)·ln 2`.
pub fn dini_sum(values: &[(f64, f64)], weight: DiniWeight) -> f64 {
    dini_sum_banded(values, weight, LN_2)
}

/// Dini sum over bands `[r_k e^{-b}, r_k]` of log-width `b`, each weighted at
/// its lower endpoint so that the log-weighted sum bounds the integral from above.
pub fn dini_sum_banded(values: &[(f64, f64)], weight: DiniWeight, band: f64) -> f64 {
    values
        .iter()
        .map(|&(r, a)| match weight {
            DiniWeight::Plain => a * band,
            DiniWeight::Log => a * (band - ln(r)) * band,
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiniReport {
    pub probe: Vec<f64>,
    pub coefficient: Coefficient,
    pub plain_sum: f64,
    pub log_weighted_sum: f64,
    /// Resolved scales only.
    pub per_scale: Vec<(f64, f64)>,
    pub truncation_depth: usize,
}

impl DiniReport {
    /// Sums over the resolved rows of `rows` belonging to one probe.
    pub fn from_rows(probe: &[f64], rows: &[AlphaProfile], coefficient: Coefficient, ladder: &ScaleLadder) -> Self {
        let per_scale: Vec<(f64, f64)> = rows
            .iter()
            .filter(|row| row.is_resolved() && row.probe == probe)
            .map(|row| (row.scale, coefficient.of(row)))
            .filter(|(_, a)| a.is_finite())
            .collect();
        let band = ladder.band();
        Self {
            probe: probe.to_vec(),
            coefficient,
            plain_sum: dini_sum_banded(&per_scale, DiniWeight::Plain, band),
            log_weighted_sum: dini_sum_banded(&per_scale, DiniWeight::Log, band),
            per_scale,
            truncation_depth: ladder.depth,
        }
    }
}

/// One sweep row; an empty ball yields a flagged row instead of an error.
pub fn sweep_row(
    mu: &DiscreteMeasure,
    x: &[f64],
    r: f64,
    w: &GroupWindow,
    cfg: &SearchConfig,
) -> Result<AlphaProfile> {
    if mu.ball_mass_at(x, r) <= 0.0 {
        return Ok(AlphaProfile::empty(x, r));
    }
    let mut row = match alpha::alpha_profile(mu, x, r, w, cfg) {
        Err(Error::EmptyBall { .. }) => return Ok(AlphaProfile::empty(x, r)),
        other => other?,
    };
    if row.ball_count < RESOLUTION_FLOOR {
        row.flags |= flags::UNDER_RESOLVED;
    }
    Ok(row)
}

/// Rows in probe-major, scale-minor order.
pub fn sweep(
    mu: &DiscreteMeasure,
    probes: &[Vec<f64>],
    ladder: &ScaleLadder,
    w: &GroupWindow,
    cfg: &SearchConfig,
) -> Result<Vec<AlphaProfile>> {
    let mut rows = Vec::with_capacity(probes.len() * ladder.depth);
    for x in probes {
        if x.len() != mu.dim() {
            return Err(Error::DimensionMismatch {
                expected: mu.dim(),
                found: x.len(),
            });
        }
        for &r in &ladder.radii {
            rows.push(sweep_row(mu, x, r, w, cfg)?);
        }
    }
    Ok(rows)
}

/// `(r_k, μ(B(x, r_k)))`.
pub fn mass_profile(mu: &DiscreteMeasure, x: &[f64], ladder: &ScaleLadder) -> Vec<(f64, f64)> {
    ladder.radii.iter().map(|&r| (r, mu.ball_mass_at(x, r))).collect()
}

/// `(r_k, r_k^{-d} μ(B(x, r_k)))`.
pub fn density_profile(mu: &DiscreteMeasure, x: &[f64], d: usize, ladder: &ScaleLadder) -> Vec<(f64, f64)> {
    mass_profile(mu, x, ladder)
        .into_iter()
        .map(|(r, m)| (r, m * powi(r, -(d as i32))))
        .collect()
}

/// Least-squares slope of `ln μ(B(x,r))` against `ln r` over positive-mass rows.
pub fn dimension_slope(profile: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = profile
        .iter()
        .filter(|(r, m)| *r > 0.0 && *m > 0.0)
        .map(|&(r, m)| (ln(r), ln(m)))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(pts.len()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

/// `(max, min)` of `μ(B(x,r))/r^D` over probes and ladder scales; `D` may be fractional.
pub fn ahlfors_check(mu: &DiscreteMeasure, probes: &[Vec<f64>], ladder: &ScaleLadder, d: f64) -> (f64, f64) {
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for x in probes {
        for &r in &ladder.radii {
            let v = mu.ball_mass_at(x, r) / powf(r, d);
            hi = hi.max(v);
            lo = lo.min(v);
        }
    }
    (hi, lo)
}

/// Symmetric matrix of `W_φ` between the blow-ups at every pair of ladder scales.
pub fn tangent_uniqueness_diagnostic(
    mu: &DiscreteMeasure,
    x: &[f64],
    ladder: &ScaleLadder,
    phi: &BumpFunction,
) -> Result<Vec<Vec<f64>>> {
    tangent_uniqueness_diagnostic_with(mu, x, ladder, phi, &SearchConfig::default())
}

pub fn tangent_uniqueness_diagnostic_with(
    mu: &DiscreteMeasure,
    x: &[f64],
    ladder: &ScaleLadder,
    phi: &BumpFunction,
    cfg: &SearchConfig,
) -> Result<Vec<Vec<f64>>> {
    let blowups = ladder
        .radii
        .iter()
        .map(|&r| alpha::resolved_blowup(mu, x, r, cfg))
        .collect::<Result<Vec<_>>>()?;
    let k = blowups.len();
    let mut m = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let v = w_phi_with(&blowups[i], &blowups[j], phi, &cfg.transport)?.0;
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    Ok(m)
}

/// Refinement defect `W₁(μ₀^{x,r}, ν₀^{x,r})` between two samples of the same
/// measure at different resolutions; the discretization floor of a coefficient.
pub fn refinement_defect(
    coarse: &DiscreteMeasure,
    fine: &DiscreteMeasure,
    x: &[f64],
    r: f64,
    cfg: &SearchConfig,
) -> Result<f64> {
    let a = alpha::resolved_blowup(coarse, x, r, cfg)?;
    let b = alpha::resolved_blowup(fine, x, r, cfg)?;
    w1_value_with(&a, &b, &cfg.transport)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{axis_basis, cantor, flat_measure, ifs_measure, mix};
    use crate::math::{unit_ball_volume, PI};
    use crate::transport::default_bump;
    use proptest::prelude::*;

    fn fast() -> SearchConfig {
        SearchConfig {
            scale_grid_size: 3,
            rotation_grid_size: 4,
            refine_iters: 1,
            plane_grid_size: 2,
            max_support: 120,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn ladder_is_dyadic_and_decreasing() {
        let l = ScaleLadder::dyadic(0.5, 6).unwrap();
        assert_eq!(l.radii.len(), 6);
        for k in 0..6 {
            assert_eq!(l.radii[k], 0.5 / (1u32 << k) as f64);
        }
        assert!(l.radii.windows(2).all(|w| w[1] < w[0]));
        assert!(ScaleLadder::dyadic(0.0, 3).is_err());
        assert!(ScaleLadder::dyadic(1.0, 0).is_err());
        assert!(ScaleLadder::geometric(1.0, 3, 1.0).is_err());
    }

    #[test]
    fn dini_examples() {
        let l = ScaleLadder::dyadic(1.0, 10).unwrap();
        let zeros: Vec<(f64, f64)> = l.radii.iter().map(|&r| (r, 0.0)).collect();
        assert_eq!(dini_sum(&zeros, DiniWeight::Plain), 0.0);
        assert_eq!(dini_sum(&zeros, DiniWeight::Log), 0.0);

        let c = 0.37;
        for k in 1..=12usize {
            let l = ScaleLadder::dyadic(1.0, k).unwrap();
            let vals: Vec<(f64, f64)> = l.radii.iter().map(|&r| (r, c)).collect();
            let kf = k as f64;
            assert!((dini_sum(&vals, DiniWeight::Plain) - c * kf * LN_2).abs() < 1e-12);
            let closed = c * LN_2 * LN_2 * kf * (kf + 1.0) / 2.0;
            let got = dini_sum(&vals, DiniWeight::Log);
            assert!((got - closed).abs() < 1e-12, "{got} vs {closed}");
            // midpoint quadrature of ∫_{2^-K}^1 c ln(1/r) dr/r in t = ln(1/r)
            let tmax = kf * LN_2;
            let m = 4000;
            let quad: f64 = (0..m)
                .map(|i| {
                    let t = (i as f64 + 0.5) * tmax / m as f64;
                    c * t * tmax / m as f64
                })
                .sum();
            assert!(got >= quad - 1e-9);
            assert!(got - quad <= c * LN_2 * tmax + 1e-9);
        }
    }

    proptest! {
        #[test]
        fn dini_is_linear_and_monotone(
            a in prop::collection::vec(0.0f64..1.0, 6),
            b in prop::collection::vec(0.0f64..1.0, 6),
            s in 0.0f64..3.0,
            bump in 0.0f64..0.5,
            idx in 0usize..6,
        ) {
            let l = ScaleLadder::dyadic(0.8, 6).unwrap();
            for wt in [DiniWeight::Plain, DiniWeight::Log] {
                let va: Vec<_> = l.radii.iter().zip(&a).map(|(&r, &v)| (r, v)).collect();
                let vb: Vec<_> = l.radii.iter().zip(&b).map(|(&r, &v)| (r, v)).collect();
                let vc: Vec<_> = l.radii.iter().zip(a.iter().zip(&b)).map(|(&r, (&x, &y))| (r, s * x + y)).collect();
                let lhs = dini_sum(&vc, wt);
                let rhs = s * dini_sum(&va, wt) + dini_sum(&vb, wt);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
                let mut up = va.clone();
                up[idx].1 += bump;
                prop_assert!(dini_sum(&up, wt) >= dini_sum(&va, wt));
            }
        }

        #[test]
        fn slope_is_weight_scale_invariant(c in 0.01f64..100.0) {
            let m = ifs_measure(&cantor(8).unwrap()).unwrap();
            let l = ScaleLadder::dyadic(0.5, 6).unwrap();
            let a = dimension_slope(&mass_profile(&m, &[0.0], &l)).unwrap();
            let b = dimension_slope(&mass_profile(&m.scaled(c), &[0.0], &l)).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn report_sums_match_per_scale() {
        let m = flat_measure(&axis_basis(1, 2), &[0.0, 0.0], 1.0, 1.0, 0.005).unwrap();
        let l = ScaleLadder::dyadic(0.4, 3).unwrap();
        let rows = sweep(&m, &[vec![0.0, 0.0]], &l, &GroupWindow::default(), &fast()).unwrap();
        let rep = DiniReport::from_rows(&[0.0, 0.0], &rows, Coefficient::Dilation, &l);
        assert_eq!(rep.per_scale.len(), 3);
        let plain: f64 = rep.per_scale.iter().map(|p| p.1 * LN_2).sum();
        let log: f64 = rep.per_scale.iter().map(|p| p.1 * ln(2.0 / p.0) * LN_2).sum();
        assert!((rep.plain_sum - plain).abs() < 1e-12);
        assert!((rep.log_weighted_sum - log).abs() < 1e-12);
        assert_eq!(rep.truncation_depth, 3);
    }

    #[test]
    fn flat_line_sweep_is_near_zero() {
        let h = 0.02;
        let m = flat_measure(&axis_basis(1, 2), &[0.0, 0.0], 1.0, 2.0, h).unwrap();
        let l = ScaleLadder::dyadic(0.8, 4).unwrap();
        let probes = vec![vec![0.0, 0.0], vec![0.2, 0.0], vec![-0.3, 0.0]];
        let rows = sweep(&m, &probes, &l, &GroupWindow::default(), &fast()).unwrap();
        assert_eq!(rows.len(), 12);
        for row in &rows {
            let floor = 4.0 * h / row.scale;
            assert!(row.alpha_D <= floor, "{row:?}");
            assert!(row.alpha_G <= row.alpha_D + 1e-12);
            assert!(row.alpha_flat[1] <= floor, "{row:?}");
        }
    }

    #[test]
    fn atom_rows_are_flat_of_dimension_zero() {
        let m = DiscreteMeasure::dirac(&[0.1, 0.2], 1.0).unwrap();
        let l = ScaleLadder::dyadic(1.0, 4).unwrap();
        let rows = sweep(&m, &[vec![0.1, 0.2]], &l, &GroupWindow::default(), &fast()).unwrap();
        for row in rows {
            assert!(row.alpha_flat[0] < 1e-12);
            assert!(row.flags & flags::UNDER_RESOLVED != 0);
        }
    }

    #[test]
    fn empty_balls_become_flagged_rows() {
        let m = DiscreteMeasure::dirac(&[0.0], 1.0).unwrap();
        let l = ScaleLadder::dyadic(0.5, 3).unwrap();
        let rows = sweep(&m, &[vec![2.0]], &l, &GroupWindow::default(), &fast()).unwrap();
        assert!(rows.iter().all(|r| r.flags & flags::EMPTY_BALL != 0 && r.alpha_D.is_nan()));
    }

    #[test]
    fn density_examples() {
        let h = 0.004;
        let sheet = flat_measure(&axis_basis(2, 2), &[0.0, 0.0], 1.0, 1.0, h).unwrap();
        let l = ScaleLadder::dyadic(0.4, 4).unwrap();
        for (r, v) in density_profile(&sheet, &[0.01, 0.0], 2, &l) {
            // direct summation of the cells inside the disk
            let direct = sheet.ball_mass_at(&[0.01, 0.0], r) / (r * r);
            assert!((v - direct).abs() < 1e-12);
            assert!((v - PI).abs() < 6.0 * h / r * PI, "{r} {v}");
        }

        let atom = DiscreteMeasure::dirac(&[0.5], 1.0).unwrap();
        assert!(density_profile(&atom, &[0.5], 0, &l).iter().all(|p| p.1 == 1.0));

        let c = ifs_measure(&cantor(12).unwrap()).unwrap();
        let tri = ScaleLadder::geometric(1.0, 10, 3.0).unwrap();
        let prof = density_profile(&c, &[0.0], 1, &tri);
        for (k, (_, v)) in prof.iter().enumerate() {
            assert!((v - powf(1.5, k as f64)).abs() < 1e-9 * v);
        }
    }

    #[test]
    fn slope_examples() {
        for d in 1..=3usize {
            let prof: Vec<(f64, f64)> = (0..6)
                .map(|k| {
                    let r = 0.5 * powi(2.0, -k);
                    (r, unit_ball_volume(d) * powi(r, d as i32))
                })
                .collect();
            assert!((dimension_slope(&prof).unwrap() - d as f64).abs() < 1e-9);
        }
        let dirac = [(1.0, 2.0), (0.5, 2.0), (0.25, 2.0)];
        assert!(dimension_slope(&dirac).unwrap().abs() < 1e-9);
        assert_eq!(dimension_slope(&[(1.0, 1.0), (0.5, 0.0), (0.25, 0.5)]), Err(Error::InsufficientData(2)));

        let c = ifs_measure(&cantor(12).unwrap()).unwrap();
        let tri = ScaleLadder::geometric(1.0, 10, 3.0).unwrap();
        let s = dimension_slope(&mass_profile(&c, &[0.0], &tri)).unwrap();
        assert!((s - LN_2 / ln(3.0)).abs() < 1e-9);
    }

    #[test]
    fn ahlfors_examples() {
        let h = 0.005;
        let line = flat_measure(&axis_basis(1, 2), &[0.0, 0.0], 1.0, 1.0, h).unwrap();
        let l = ScaleLadder::dyadic(0.25, 4).unwrap();
        let probes = vec![vec![0.0, 0.0], vec![0.3, 0.0]];
        let (hi, lo) = ahlfors_check(&line, &probes, &l, 1.0);
        assert!(hi / lo < 1.0 + 8.0 * h / l.min_radius(), "{hi} {lo}");

        let atom = DiscreteMeasure::dirac(&[0.0, 3.0], 1.0).unwrap();
        let both = mix(&[line.clone(), atom], &[1.0, 1.0]).unwrap();
        assert_eq!(ahlfors_check(&both, &probes, &l, 1.0), (hi, lo));

        let c = ifs_measure(&cantor(12).unwrap()).unwrap();
        let dim = LN_2 / ln(3.0);
        let probes: Vec<Vec<f64>> = [0.0, 2.0 / 3.0, 2.0 / 9.0, 8.0 / 9.0].iter().map(|&v| vec![v]).collect();
        let tri = ScaleLadder::geometric(1.0 / 3.0, 8, 3.0).unwrap();
        let (hi, lo) = ahlfors_check(&c, &probes, &tri, dim);
        // brute force
        let (mut bh, mut bl) = (f64::NEG_INFINITY, f64::INFINITY);
        for x in &probes {
            for &r in &tri.radii {
                let m: f64 = c.points().filter(|(p, _)| (p[0] - x[0]).abs() < r).map(|(_, w)| w).sum();
                let v = m / powf(r, dim);
                bh = bh.max(v);
                bl = bl.min(v);
            }
        }
        assert!((hi - bh).abs() < 1e-9 && (lo - bl).abs() < 1e-9);
        assert!(hi / lo <= 4.0);
    }

    #[test]
    fn diagnostic_is_symmetric_with_zero_diagonal() {
        let line = flat_measure(&axis_basis(1, 2), &[0.0, 0.0], 1.0, 1.0, 0.01).unwrap();
        let l = ScaleLadder::dyadic(0.5, 3).unwrap();
        let m = tangent_uniqueness_diagnostic_with(&line, &[0.0, 0.0], &l, &default_bump(), &fast()).unwrap();
        for i in 0..3 {
            assert_eq!(m[i][i], 0.0);
            for j in 0..3 {
                assert!((m[i][j] - m[j][i]).abs() < 1e-8);
                assert!(m[i][j] < 0.05);
            }
        }
        let atom = DiscreteMeasure::dirac(&[0.0, 0.0], 1.0).unwrap();
        let m = tangent_uniqueness_diagnostic(&atom, &[0.0, 0.0], &l, &default_bump()).unwrap();
        assert!(m.iter().flatten().all(|&v| v < 1e-12));
    }

    #[test]
    fn defect_shrinks_with_spacing() {
        let cfg = fast();
        let line = |h| flat_measure(&axis_basis(1, 2), &[0.0, 0.0], 1.0, 1.0, h).unwrap();
        let a = refinement_defect(&line(0.02), &line(0.01), &[0.003, 0.0], 0.3, &cfg).unwrap();
        let b = refinement_defect(&line(0.01), &line(0.005), &[0.003, 0.0], 0.3, &cfg).unwrap();
        assert!(a > 0.0 && b < a);
    }
}
