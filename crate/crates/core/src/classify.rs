//! Stratification of probe points into atoms, `d`-rectifiable points and the rest.

use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::alpha::{principal_frame, GroupWindow, SearchConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::math::{dist, dot, norm, sqrt};
use crate::measure::DiscreteMeasure;
use crate::multiscale::{dimension_slope, sweep, Coefficient, DiniReport, ScaleLadder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StratumKind {
    Atom,
    Rectifiable(usize),
    Unclassified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StratumLabel {
    pub kind: StratumKind,
    /// 0 for atoms and unclassified points.
    pub dimension: usize,
    /// Fraction of resolved scales agreeing with the label.
    pub confidence: f64,
}

impl StratumLabel {
    pub fn atom() -> Self {
        Self {
            kind: StratumKind::Atom,
            dimension: 0,
            confidence: 1.0,
        }
    }

    pub fn unclassified(confidence: f64) -> Self {
        Self {
            kind: StratumKind::Unclassified,
            dimension: 0,
            confidence,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyConfig {
    /// Upper bound on `min_d α_d` at the finest resolved scale.
    pub tau_flat: f64,
    /// Required share of resolved scales voting for the modal dimension.
    pub agreement: f64,
    /// Allowed gap between the measured dimension slope and the voted `d`.
    pub slope_tolerance: f64,
    pub search: SearchConfig,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            tau_flat: 0.15,
            agreement: 0.8,
            slope_tolerance: 0.25,
            search: SearchConfig::default(),
        }
    }
}

/// Tangent plane `x + V` with its orthonormal basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangentPlane {
    pub basis: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeClassification {
    pub probe: Vec<f64>,
    pub label: StratumLabel,
    pub dimension_slope: Option<f64>,
    /// Per ladder scale; `None` for unresolved rows.
    pub best_d: Vec<Option<usize>>,
    pub tangent_plane: Option<TangentPlane>,
    /// Dini sums of `α_𝒟`.
    pub dini: DiniReport,
    /// Dini sums of `α_𝒢`.
    pub dini_g: DiniReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumCounts {
    pub atoms: usize,
    /// Index `d = 0..=n`; entry 0 is always 0.
    pub rectifiable: Vec<usize>,
    pub unclassified: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub probes: Vec<ProbeClassification>,
    pub summary: StratumCounts,
}

impl ClassificationReport {
    pub fn from_probes(dim: usize, probes: Vec<ProbeClassification>) -> Self {
        let mut summary = StratumCounts {
            atoms: 0,
            rectifiable: vec![0; dim + 1],
            unclassified: 0,
        };
        for p in &probes {
            match p.label.kind {
                StratumKind::Atom => summary.atoms += 1,
                StratumKind::Rectifiable(d) => summary.rectifiable[d] += 1,
                StratumKind::Unclassified => summary.unclassified += 1,
            }
        }
        Self { probes, summary }
    }
}

/// `x` carries mass and the rest of the support stays outside `B(x, r_min)`.
pub fn detect_atom(mu: &DiscreteMeasure, x: &[f64], ladder: &ScaleLadder) -> bool {
    let r = ladder.min_radius();
    let mut own = 0.0;
    for (p, w) in mu.points() {
        let d = dist(p, x);
        if d == 0.0 {
            own += w;
        } else if d <= r {
            return false;
        }
    }
    own > 0.0
}

/// Weighted principal `d`-plane (through `x`) of the blow-up at `B(x, r)` and the
/// largest ratio `dist(y, V)/|y|` over blow-up points with `|y| ≥ 0.05`.
pub fn tangent_plane(mu: &DiscreteMeasure, x: &[f64], r: f64, d: usize) -> Result<TangentPlane> {
    let n = mu.dim();
    if d == 0 || d > n {
        return Err(Error::BadFlatDimension { d, n });
    }
    let b = mu.local_blowup(x, r)?;
    let (vals, vecs, _) = principal_frame(&b, false);
    if d < n {
        let sd = sqrt(vals[d - 1].max(0.0));
        let next = sqrt(vals[d].max(0.0));
        if (sd - next).abs() <= 1e-12 {
            return Err(Error::DegenerateSpectrum { d: sd, d_next: next });
        }
    }
    let basis: Vec<Vec<f64>> = (0..d).map(|j| linalg::column(&vecs, n, j)).collect();
    let mut residual: f64 = 0.0;
    let mut perp = vec![0.0; n];
    for (y, _) in b.points() {
        let len = norm(y);
        if len < 0.05 {
            continue;
        }
        perp.copy_from_slice(y);
        for e in &basis {
            let c = dot(y, e);
            for k in 0..n {
                perp[k] -= c * e[k];
            }
        }
        residual = residual.max(norm(&perp) / len);
    }
    Ok(TangentPlane {
        basis,
        offset: x.to_vec(),
        residual,
    })
}

/// Full per-probe evidence.
pub fn classify_probe(
    mu: &DiscreteMeasure,
    x: &[f64],
    ladder: &ScaleLadder,
    w: &GroupWindow,
    cfg: &ClassifyConfig,
) -> Result<ProbeClassification> {
    let rows = sweep(mu, &[x.to_vec()], ladder, w, &cfg.search)?;
    let dini = DiniReport::from_rows(x, &rows, Coefficient::Dilation, ladder);
    let dini_g = DiniReport::from_rows(x, &rows, Coefficient::Similarity, ladder);
    let best_d: Vec<Option<usize>> = rows
        .iter()
        .map(|row| row.is_resolved().then_some(row.best_d))
        .collect();
    let masses: Vec<(f64, f64)> = rows
        .iter()
        .filter(|row| row.is_resolved())
        .map(|row| (row.scale, row.ball_mass))
        .collect();
    let slope = dimension_slope(&masses).ok();
    let mut out = ProbeClassification {
        probe: x.to_vec(),
        label: StratumLabel::unclassified(0.0),
        dimension_slope: slope,
        best_d: best_d.clone(),
        tangent_plane: None,
        dini,
        dini_g,
    };
    if detect_atom(mu, x, ladder) {
        out.label = StratumLabel::atom();
        return Ok(out);
    }

    let votes: Vec<usize> = best_d.iter().flatten().copied().collect();
    if votes.is_empty() {
        return Ok(out);
    }
    let n = mu.dim();
    let mut counts = vec![0usize; n + 1];
    for &d in &votes {
        counts[d] += 1;
    }
    let (mut modal, mut top) = (0, 0);
    for (d, &c) in counts.iter().enumerate() {
        if c > top {
            modal = d;
            top = c;
        }
    }
    let confidence = top as f64 / votes.len() as f64;
    out.label = StratumLabel::unclassified(confidence);
    let finest = rows
        .iter()
        .rev()
        .find(|row| row.is_resolved())
        .expect("at least one resolved row");
    let slope_ok = slope.is_some_and(|s| (s - modal as f64).abs() <= cfg.slope_tolerance);
    if modal == 0 || confidence < cfg.agreement || !(finest.alpha_min < cfg.tau_flat) || !slope_ok {
        return Ok(out);
    }
    match tangent_plane(mu, x, finest.scale, modal) {
        Ok(plane) => {
            out.tangent_plane = Some(plane);
            out.label = StratumLabel {
                kind: StratumKind::Rectifiable(modal),
                dimension: modal,
                confidence,
            };
        }
        Err(_) => {}
    }
    Ok(out)
}

/// Label of `x`; failures degrade to [`StratumKind::Unclassified`].
pub fn classify_point(
    mu: &DiscreteMeasure,
    x: &[f64],
    ladder: &ScaleLadder,
    w: &GroupWindow,
    cfg: &ClassifyConfig,
) -> StratumLabel {
    classify_probe(mu, x, ladder, w, cfg)
        .map(|p| p.label)
        .unwrap_or(StratumLabel::unclassified(0.0))
}

pub fn decompose(
    mu: &DiscreteMeasure,
    probes: &[Vec<f64>],
    ladder: &ScaleLadder,
    w: &GroupWindow,
    cfg: &ClassifyConfig,
) -> Result<ClassificationReport> {
    if probes.is_empty() {
        return Err(Error::EmptyProbes);
    }
    let per = probes
        .iter()
        .map(|x| classify_probe(mu, x, ladder, w, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassificationReport::from_probes(mu.dim(), per))
}
