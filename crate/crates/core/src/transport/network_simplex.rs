//! Primal network simplex for uncapacitated min-cost flow.
//!
//! Starts from the artificial-root tree, prices arcs in blocks and keeps the
//! spanning tree strongly feasible, which rules out cycling on degenerate pivots.

use alloc::vec;
use alloc::vec::Vec;

use super::{FlowSolution, Network};
use crate::error::{Error, Result};

const PRICE_TOL: f64 = 1e-12;

pub(crate) fn solve(net: &Network) -> Result<FlowSolution> {
    let n = net.nodes;
    let root = n;
    let real_arcs = net.cost.len();
    let cmax = net.cost.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
    let big = (n as f64 + 1.0) * (cmax + 1.0);

    let mut src: Vec<usize> = net.src.iter().map(|&v| v as usize).collect();
    let mut dst: Vec<usize> = net.dst.iter().map(|&v| v as usize).collect();
    let mut cost = net.cost.clone();
    let mut flow = vec![0.0; real_arcs];
    let mut in_tree = vec![false; real_arcs];
    for i in 0..n {
        let b = net.supply[i];
        if b > 0.0 {
            src.push(i);
            dst.push(root);
            flow.push(b);
        } else {
            src.push(root);
            dst.push(i);
            flow.push(-b);
        }
        cost.push(big);
        in_tree.push(true);
    }
    let arcs = cost.len();

    let mut parent = vec![usize::MAX; n + 1];
    let mut parent_arc = vec![usize::MAX; n + 1];
    let mut depth = vec![0usize; n + 1];
    let mut y = vec![0.0; n + 1];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    let mut queue = Vec::with_capacity(n + 1);

    for a in 0..arcs {
        if in_tree[a] {
            adj[src[a]].push(a);
            adj[dst[a]].push(a);
        }
    }
    let rebuild = |adj: &[Vec<usize>],
                   queue: &mut Vec<usize>,
                   parent: &mut [usize],
                   parent_arc: &mut [usize],
                   depth: &mut [usize],
                   y: &mut [f64]| {
        queue.clear();
        queue.push(root);
        parent[root] = usize::MAX;
        parent_arc[root] = usize::MAX;
        depth[root] = 0;
        y[root] = 0.0;
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head];
            head += 1;
            for &a in &adj[u] {
                if a == parent_arc[u] {
                    continue;
                }
                let v = if src[a] == u { dst[a] } else { src[a] };
                parent[v] = u;
                parent_arc[v] = a;
                depth[v] = depth[u] + 1;
                // tree arcs have zero reduced cost c − y_src + y_dst
                y[v] = if src[a] == u { y[u] - cost[a] } else { y[u] + cost[a] };
                queue.push(v);
            }
        }
    };
    rebuild(
        &adj,
        &mut queue,
        &mut parent,
        &mut parent_arc,
        &mut depth,
        &mut y,
    );

    let block = (crate::math::sqrt(arcs as f64) as usize).max(64).min(arcs);
    let mut next_arc = 0usize;
    let mut up_side: Vec<usize> = Vec::new();
    let mut down_side: Vec<usize> = Vec::new();
    let max_pivots = 50 * arcs + 10_000;
    let mut pivots = 0usize;

    loop {
        // block pricing
        let mut entering = usize::MAX;
        let mut scanned = 0usize;
        while scanned < arcs {
            let mut best = -PRICE_TOL * (1.0 + cmax);
            let end = (scanned + block).min(arcs);
            for _ in scanned..end {
                let a = next_arc;
                next_arc += 1;
                if next_arc == arcs {
                    next_arc = 0;
                }
                if in_tree[a] {
                    continue;
                }
                let rc = cost[a] - y[src[a]] + y[dst[a]];
                if rc < best {
                    best = rc;
                    entering = a;
                }
            }
            scanned = end;
            if entering != usize::MAX {
                break;
            }
        }
        if entering == usize::MAX {
            break;
        }
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Solver("network simplex pivot limit"));
        }

        // cycle: u → v along the entering arc, then v up to the apex and back down to u
        let (u, v) = (src[entering], dst[entering]);
        up_side.clear();
        down_side.clear();
        let (mut a, mut b) = (u, v);
        while a != b {
            if depth[a] >= depth[b] {
                up_side.push(a);
                a = parent[a];
            } else {
                down_side.push(b);
                b = parent[b];
            }
        }
        // up_side holds the u-branch from u upward; the cycle walks it apex → u.
        // down_side holds the v-branch from v upward; the cycle walks it v → apex.
        let mut theta = f64::INFINITY;
        let mut leaving_node = usize::MAX;
        for &w in up_side.iter().rev() {
            let pa = parent_arc[w];
            // traversed parent(w) → w; against the cycle when the arc points w → parent
            if src[pa] == w && flow[pa] <= theta {
                theta = flow[pa];
                leaving_node = w;
            }
        }
        for &w in down_side.iter() {
            let pa = parent_arc[w];
            // traversed w → parent(w); against the cycle when the arc points parent → w
            if dst[pa] == w && flow[pa] <= theta {
                theta = flow[pa];
                leaving_node = w;
            }
        }
        if leaving_node == usize::MAX {
            return Err(Error::Solver("unbounded flow problem"));
        }
        let theta = theta.max(0.0);
        if theta > 0.0 {
            flow[entering] += theta;
            for &w in &up_side {
                let pa = parent_arc[w];
                if src[pa] == w {
                    flow[pa] -= theta;
                } else {
                    flow[pa] += theta;
                }
            }
            for &w in &down_side {
                let pa = parent_arc[w];
                if dst[pa] == w {
                    flow[pa] -= theta;
                } else {
                    flow[pa] += theta;
                }
            }
        }
        let leaving = parent_arc[leaving_node];
        flow[leaving] = 0.0;
        in_tree[leaving] = false;
        in_tree[entering] = true;
        for end in [src[leaving], dst[leaving]] {
            adj[end].retain(|&x| x != leaving);
        }
        adj[src[entering]].push(entering);
        adj[dst[entering]].push(entering);
        rebuild(
            &adj,
            &mut queue,
            &mut parent,
            &mut parent_arc,
            &mut depth,
            &mut y,
        );
    }

    let supply_scale = net.supply.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    for a in real_arcs..arcs {
        if flow[a] > 1e-9 * (1.0 + supply_scale) {
            return Err(Error::Solver("flow problem infeasible"));
        }
    }
    let total = crate::math::compensated_sum((0..real_arcs).map(|a| cost[a] * flow[a]));
    y.truncate(n);
    Ok(FlowSolution {
        cost: total,
        potentials: y,
    })
}
