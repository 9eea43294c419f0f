//! Parallel sweeps and decompositions. Results come back in index order, so
//! they match the sequential library calls exactly.

use rayon::prelude::*;
use tangentia_core::classify::{classify_probe, ClassificationReport};
use tangentia_core::multiscale::sweep_row;
use tangentia_core::{AlphaProfile, ClassifyConfig, DiscreteMeasure, Error, GroupWindow, Result, ScaleLadder, SearchConfig};

pub const THREADS_VAR: &str = "TANGENTIA_THREADS";

/// Thread cap from `TANGENTIA_THREADS`; unset, empty or zero means all cores.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_VAR).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs `f` inside a pool sized by [`thread_cap`].
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        b = b.num_threads(n);
    }
    match b.build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

fn check_dims(mu: &DiscreteMeasure, probes: &[Vec<f64>]) -> Result<()> {
    match probes.iter().find(|p| p.len() != mu.dim()) {
        Some(p) => Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: p.len(),
        }),
        None => Ok(()),
    }
}

/// Same rows as `multiscale::sweep`, evaluated in parallel.
pub fn sweep(
    mu: &DiscreteMeasure,
    probes: &[Vec<f64>],
    ladder: &ScaleLadder,
    w: &GroupWindow,
    cfg: &SearchConfig,
) -> Result<Vec<AlphaProfile>> {
    check_dims(mu, probes)?;
    let jobs: Vec<(&[f64], f64)> = probes
        .iter()
        .flat_map(|x| ladder.radii.iter().map(move |&r| (x.as_slice(), r)))
        .collect();
    with_pool(|| jobs.par_iter().map(|&(x, r)| sweep_row(mu, x, r, w, cfg)).collect())
}

/// Same report as `classify::decompose`, one task per probe.
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
    check_dims(mu, probes)?;
    let per = with_pool(|| {
        probes
            .par_iter()
            .map(|x| classify_probe(mu, x, ladder, w, cfg))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(ClassificationReport::from_probes(mu.dim(), per))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tangentia_core::generators::{axis_basis, flat_measure};
    use tangentia_core::multiscale;

    #[test]
    fn matches_sequential() {
        let mu = flat_measure(&axis_basis(1, 2), &[0.0, 0.0], 1.0, 1.0, 0.02).unwrap();
        let probes = vec![vec![0.0, 0.0], vec![0.1, 0.0]];
        let ladder = ScaleLadder::dyadic(0.4, 3).unwrap();
        let cfg = SearchConfig {
            scale_grid_size: 2,
            refine_iters: 1,
            max_support: 80,
            ..SearchConfig::default()
        };
        let w = GroupWindow::default();
        let a = sweep(&mu, &probes, &ladder, &w, &cfg).unwrap();
        let b = multiscale::sweep(&mu, &probes, &ladder, &w, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(sweep(&mu, &[vec![0.0]], &ladder, &w, &cfg).is_err());
    }
}
