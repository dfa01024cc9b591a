//! Exact expected shared-GHZ count by exhaustive enumeration.
//!
//! Every link pattern, every uniformly-random fusion subset choice, and
//! every fusion success pattern is visited with its exact probability, so
//! the result carries no sampling error. Only practical for tiny networks;
//! used to validate the Monte Carlo engine.

use crate::protocol::{count_shared_ghz, resolve_cycle, FusionAttempt, FusionPlan, Variant};
use crate::topology::{Color, NodeId, Role, Topology, VertexId};
use crate::{Error, Result};

const MAX_EDGES: usize = 16;
const MAX_STATES: f64 = 5e7;

/// All k-subsets of `items`.
fn k_subsets(items: &[VertexId], k: usize) -> Vec<Vec<VertexId>> {
    let mut out = Vec::new();
    let m = items.len();
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != k {
            continue;
        }
        out.push(
            (0..m)
                .filter(|&i| mask >> i & 1 == 1)
                .map(|i| items[i])
                .collect(),
        );
    }
    out
}

/// One node's alternatives: (qubits to fuse, probability of this choice).
/// Unchosen successful qubits are measured, which never affects the shared
/// count, so they are not tracked here.
fn node_choices(
    topo: &Topology,
    variant: Variant,
    links: &[bool],
    node: NodeId,
) -> Vec<(Vec<VertexId>, f64)> {
    let n = variant.n() as usize;
    let live: Vec<VertexId> = topo
        .incident_edges(node)
        .iter()
        .filter(|&&e| links[e as usize])
        .map(|&e| topo.vertex_at(e, node))
        .collect();
    let fixed_or_choose = |set: Vec<VertexId>, pool: &[VertexId], want: usize| {
        if pool.len() <= want {
            let mut all = set.clone();
            all.extend_from_slice(pool);
            vec![(all, 1.0)]
        } else {
            let w = 1.0 / binomial(pool.len(), want);
            k_subsets(pool, want)
                .into_iter()
                .map(|mut extra| {
                    let mut full = set.clone();
                    full.append(&mut extra);
                    (full, w)
                })
                .collect()
        }
    };
    let mut alts = match variant {
        Variant::Random { .. } => fixed_or_choose(Vec::new(), &live, n.min(live.len())),
        Variant::Brickwork { .. } => {
            let (black, red): (Vec<_>, Vec<_>) = live
                .iter()
                .partition(|&&v| topo.edge(topo.vertex_edge(v)).color == Some(Color::Black));
            if black.len() >= n {
                fixed_or_choose(Vec::new(), &black, n)
            } else {
                fixed_or_choose(black.clone(), &red, n - black.len())
            }
        }
    };
    for (set, _) in &mut alts {
        if set.len() < 2 {
            set.clear(); // a lone qubit is measured, not fused
        }
    }
    alts
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut b = 1.0;
    for i in 0..k {
        b = b * (n - i) as f64 / (i + 1) as f64;
    }
    b
}

/// Exact E[shared GHZ states per cycle]. Errors when the enumeration would
/// exceed roughly 5e7 resolved configurations.
pub fn exact_shared_expectation(
    topo: &Topology,
    variant: Variant,
    p: f64,
    q: f64,
) -> Result<f64> {
    let n_edges = topo.edge_count();
    if n_edges > MAX_EDGES {
        return Err(Error::Analysis(format!(
            "exact enumeration supports <= {MAX_EDGES} edges, topology has {n_edges}"
        )));
    }
    let helpers: Vec<NodeId> = (0..topo.node_count() as NodeId)
        .filter(|&v| topo.node(v).role == Role::Helper)
        .collect();
    let mut total = 0.0;
    for mask in 0u64..(1 << n_edges) {
        let links: Vec<bool> = (0..n_edges).map(|i| mask >> i & 1 == 1).collect();
        let ones = mask.count_ones() as i32;
        let w_links = p.powi(ones) * (1.0 - p).powi(n_edges as i32 - ones);
        if w_links == 0.0 {
            continue;
        }
        let choices: Vec<Vec<(Vec<VertexId>, f64)>> = helpers
            .iter()
            .map(|&h| node_choices(topo, variant, &links, h))
            .collect();
        let mut states: f64 = choices.iter().map(|c| c.len() as f64).product();
        let n_fusions_max = choices.iter().filter(|c| !c[0].0.is_empty()).count();
        states *= (1u64 << n_fusions_max) as f64;
        if states > MAX_STATES {
            return Err(Error::Analysis(format!(
                "exact enumeration too large ({states:.1e} configurations for one link pattern)"
            )));
        }
        total += w_links * expect_over_choices(topo, &links, &helpers, &choices, q);
    }
    Ok(total)
}

/// Recursively fixes each helper's subset choice, then sums over fusion
/// success patterns.
fn expect_over_choices(
    topo: &Topology,
    links: &[bool],
    helpers: &[NodeId],
    choices: &[Vec<(Vec<VertexId>, f64)>],
    q: f64,
) -> f64 {
    fn recurse(
        topo: &Topology,
        links: &[bool],
        helpers: &[NodeId],
        choices: &[Vec<(Vec<VertexId>, f64)>],
        q: f64,
        idx: usize,
        plan: &mut FusionPlan,
    ) -> f64 {
        if idx == choices.len() {
            let f = plan.fusions.len();
            let mut acc = 0.0;
            for smask in 0u64..(1 << f) {
                let successes: Vec<bool> = (0..f).map(|i| smask >> i & 1 == 1).collect();
                let ones = smask.count_ones() as i32;
                let w = q.powi(ones) * (1.0 - q).powi(f as i32 - ones);
                if w == 0.0 {
                    continue;
                }
                let cs = resolve_cycle(topo, links, plan, &successes);
                acc += w * count_shared_ghz(topo, &cs).expect("consumers exist") .count as f64;
            }
            return acc;
        }
        let mut acc = 0.0;
        for (set, w) in &choices[idx] {
            let pushed = if set.is_empty() {
                false
            } else {
                plan.fusions.push(FusionAttempt { node: helpers[idx], vertices: set.clone() });
                true
            };
            acc += w * recurse(topo, links, helpers, choices, q, idx + 1, plan);
            if pushed {
                plan.fusions.pop();
            }
        }
        acc
    }
    let mut plan = FusionPlan::default();
    recurse(topo, links, helpers, choices, q, 0, &mut plan)
}
