//! Successive shortest paths with Dijkstra on reduced costs.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{FlowSolution, Network};
use crate::error::{Error, Result};

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

pub(crate) fn solve(net: &Network) -> Result<FlowSolution> {
    let n = net.nodes;
    let arcs = net.cost.len();
    let src: Vec<usize> = net.src.iter().map(|&v| v as usize).collect();
    let dst: Vec<usize> = net.dst.iter().map(|&v| v as usize).collect();
    let cost = &net.cost;
    let mut out_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut in_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for a in 0..arcs {
        out_adj[src[a]].push(a);
        in_adj[dst[a]].push(a);
    }

    let scale = net.supply.iter().fold(0.0f64, |m, &b| m.max(b.abs()));
    let tol = 1e-14 * (1.0 + scale);
    let mut excess = net.supply.clone();
    let mut flow = vec![0.0; arcs];
    let mut pi = vec![0.0; n];
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    // predecessor arc and whether it was used forward
    let mut pred: Vec<(usize, bool)> = vec![(usize::MAX, true); n];
    let mut heap = BinaryHeap::new();
    let max_rounds = 20 * (n + arcs) + 1000;

    for _round in 0..max_rounds {
        if excess.iter().all(|&e| e <= tol) {
            let total = crate::math::compensated_sum((0..arcs).map(|a| cost[a] * flow[a]));
            return Ok(FlowSolution {
                cost: total,
                potentials: pi.iter().map(|p| -p).collect(),
            });
        }
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        done.iter_mut().for_each(|d| *d = false);
        heap.clear();
        for v in 0..n {
            if excess[v] > tol {
                dist[v] = 0.0;
                pred[v] = (usize::MAX, true);
                heap.push(Entry(0.0, v));
            }
        }
        let mut target = usize::MAX;
        while let Some(Entry(d, u)) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            if excess[u] < -tol {
                target = u;
                break;
            }
            for &a in &out_adj[u] {
                let v = dst[a];
                let rc = (cost[a] + pi[u] - pi[v]).max(0.0);
                if d + rc < dist[v] {
                    dist[v] = d + rc;
                    pred[v] = (a, true);
                    heap.push(Entry(dist[v], v));
                }
            }
            for &a in &in_adj[u] {
                if flow[a] <= 0.0 {
                    continue;
                }
                let v = src[a];
                let rc = (pi[u] - pi[v] - cost[a]).max(0.0);
                if d + rc < dist[v] {
                    dist[v] = d + rc;
                    pred[v] = (a, false);
                    heap.push(Entry(dist[v], v));
                }
            }
        }
        if target == usize::MAX {
            return Err(Error::Solver("flow problem infeasible"));
        }
        let dt = dist[target];
        for v in 0..n {
            pi[v] += dist[v].min(dt);
        }

        let mut delta = -excess[target];
        let mut v = target;
        while pred[v].0 != usize::MAX {
            let (a, forward) = pred[v];
            if forward {
                v = src[a];
            } else {
                delta = delta.min(flow[a]);
                v = dst[a];
            }
        }
        delta = delta.min(excess[v]);
        let start = v;
        let mut v = target;
        while pred[v].0 != usize::MAX {
            let (a, forward) = pred[v];
            if forward {
                flow[a] += delta;
                v = src[a];
            } else {
                flow[a] -= delta;
                if flow[a] < tol {
                    flow[a] = 0.0;
                }
                v = dst[a];
            }
        }
        excess[start] -= delta;
        excess[target] += delta;
    }
    Err(Error::Solver("successive shortest paths iteration limit"))
}
