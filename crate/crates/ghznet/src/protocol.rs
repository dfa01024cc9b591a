//! One-cycle protocol simulation: link generation, fusion planning, and
//! resolution of the shared entanglement via memory-vertex percolation.
//!
//! Cycle model. Every edge attempts a Bell pair (success probability `p`,
//! optionally thinned down to `p_star`). Each helper node then acts on the
//! qubits of its successful links:
//!
//! * 0 qubits: nothing to do.
//! * 1 qubit: measure it in the X basis (it can contribute no fusion).
//! * 2..=n qubits: fuse them all (success probability `q`).
//! * more than n: fuse a uniformly random n-subset, X-measure the rest.
//!
//! The brickwork variant prefers black edges: all successful black-edge
//! qubits are fused, topped up with uniformly chosen red-edge qubits to at
//! most n, leftovers X-measured; a set of size 1 is measured instead of
//! fused. Consumers never fuse or measure — they hold their qubits.
//!
//! Resolution. Fusion is local, so a helper attempts it (and pays the `q`
//! draw) even when remote link ends are already dead. A memory vertex is
//! *active* when its node is a consumer or it belongs to a successful
//! fusion. Components are built by uniting each successful fusion's members
//! and the two end vertices of every surviving link whose ends are both
//! active. A component holding memory vertices of both consumers is one
//! shared GHZ state; after all helper qubits are measured out its physical
//! size is the number of consumer vertices it holds.
//!
//! Draw order is fixed (links in edge order, subset choices in node order,
//! fusion successes in plan order) and each trial uses its own RNG stream,
//! so results are reproducible for any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ghz::GhzRecord;
use crate::topology::{Color, EdgeId, NodeId, Role, Topology, VertexId};
use crate::{Error, Result};

/// Which fusion rule helpers follow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Fuse up to `n` qubits chosen uniformly from the successful links.
    Random { n: u32 },
    /// Prefer black-colored edges, topping up with red ones to `n`.
    Brickwork { n: u32 },
}

impl Variant {
    pub fn n(&self) -> u32 {
        match *self {
            Variant::Random { n } | Variant::Brickwork { n } => n,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Random { .. } => "random",
            Variant::Brickwork { .. } => "brickwork",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProtocolConfig {
    pub variant: Variant,
    /// Link (Bell pair) success probability per edge.
    pub p: f64,
    /// Fusion success probability per attempt.
    pub q: f64,
    /// Optional thinning target: successful links are deliberately broken
    /// so the effective link probability is `min(p, p_star)`.
    pub p_star: Option<f64>,
    pub trials: u64,
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn validate(&self, topo: &Topology) -> Result<()> {
        for (name, x) in [("p", self.p), ("q", self.q)] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Config(format!("{name} = {x} outside [0, 1]")));
            }
        }
        if let Some(ps) = self.p_star {
            if !(0.0..=1.0).contains(&ps) {
                return Err(Error::Config(format!("p_star = {ps} outside [0, 1]")));
            }
        }
        if self.variant.n() < 2 {
            return Err(Error::Config(format!(
                "fusion arity n = {} but fusing needs >= 2 qubits",
                self.variant.n()
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if matches!(self.variant, Variant::Brickwork { .. })
            && topo.edges().iter().any(|e| e.color.is_none())
        {
            return Err(Error::Config(
                "brickwork variant needs a fully colored topology".into(),
            ));
        }
        Ok(())
    }

    pub fn effective_p(&self) -> f64 {
        match self.p_star {
            Some(ps) => self.p.min(ps),
            None => self.p,
        }
    }
}

/// One fusion attempt: >= 2 memory vertices, all held by `node`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FusionAttempt {
    pub node: NodeId,
    pub vertices: Vec<VertexId>,
}

/// Everything every helper decided to do this cycle.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FusionPlan {
    /// At most one attempt per node, in node-id order.
    pub fusions: Vec<FusionAttempt>,
    /// Helper vertices measured in the X basis.
    pub measured: Vec<VertexId>,
}

/// Per-edge link outcomes for one cycle, in edge-id order.
pub fn sample_link_outcomes(topo: &Topology, p_eff: f64, rng: &mut impl Rng) -> Vec<bool> {
    (0..topo.edge_count()).map(|_| rng.random::<f64>() < p_eff).collect()
}

/// Moves a uniformly random k-subset of `items` to the front and returns the
/// split point (always k). Consumes exactly k RNG draws.
fn choose_prefix(items: &mut [VertexId], k: usize, rng: &mut impl Rng) {
    for i in 0..k {
        let j = rng.random_range(i..items.len());
        items.swap(i, j);
    }
}

/// Applies the per-helper fusion rules to the link outcomes.
pub fn select_fusions(
    topo: &Topology,
    variant: Variant,
    links: &[bool],
    rng: &mut impl Rng,
) -> FusionPlan {
    let n = variant.n() as usize;
    let mut plan = FusionPlan::default();
    for node in 0..topo.node_count() as NodeId {
        if topo.node(node).role != Role::Helper {
            continue;
        }
        let live = |e: &&EdgeId| links[**e as usize];
        let mut fuse: Vec<VertexId>;
        let mut leftover: Vec<VertexId> = Vec::new();
        match variant {
            Variant::Random { .. } => {
                fuse = topo
                    .incident_edges(node)
                    .iter()
                    .filter(live)
                    .map(|&e| topo.vertex_at(e, node))
                    .collect();
                if fuse.len() > n {
                    choose_prefix(&mut fuse, n, rng);
                    leftover = fuse.split_off(n);
                }
            }
            Variant::Brickwork { .. } => {
                let vert = |color| {
                    topo.incident_edges(node)
                        .iter()
                        .filter(live)
                        .filter(|&&e| topo.edge(e).color == Some(color))
                        .map(|&e| topo.vertex_at(e, node))
                        .collect::<Vec<_>>()
                };
                fuse = vert(Color::Black);
                let mut reds = vert(Color::Red);
                if fuse.len() > n {
                    // only possible when the coloring was not n-bounded
                    choose_prefix(&mut fuse, n, rng);
                    leftover = fuse.split_off(n);
                    leftover.append(&mut reds);
                } else {
                    let want = n - fuse.len();
                    if reds.len() > want {
                        choose_prefix(&mut reds, want, rng);
                        leftover = reds.split_off(want);
                    }
                    fuse.append(&mut reds);
                }
            }
        }
        match fuse.len() {
            0 => {}
            1 => leftover.push(fuse[0]),
            _ => plan.fusions.push(FusionAttempt { node, vertices: fuse }),
        }
        plan.measured.extend(leftover);
    }
    plan
}

/// Union-find over the memory vertices after one resolved cycle.
#[derive(Clone, Debug)]
pub struct ComponentSet {
    parent: Vec<u32>,
    active: Vec<bool>,
    /// Links whose end vertices were both active (the unions that crossed edges).
    used_links: Vec<EdgeId>,
}

impl ComponentSet {
    fn new(n_vertices: usize) -> ComponentSet {
        ComponentSet {
            parent: (0..n_vertices as u32).collect(),
            active: vec![false; n_vertices],
            used_links: Vec::new(),
        }
    }

    pub fn find(&self, mut v: VertexId) -> VertexId {
        while self.parent[v as usize] != v {
            v = self.parent[v as usize];
        }
        v
    }

    fn union(&mut self, a: VertexId, b: VertexId) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[rb as usize] = ra;
        }
    }

    pub fn is_active(&self, v: VertexId) -> bool {
        self.active[v as usize]
    }

    pub fn same_component(&self, a: VertexId, b: VertexId) -> bool {
        self.active[a as usize] && self.active[b as usize] && self.find(a) == self.find(b)
    }
}

/// Resolves one cycle given the link outcomes, the plan, and one success
/// flag per planned fusion (aligned with `plan.fusions`).
pub fn resolve_cycle(
    topo: &Topology,
    links: &[bool],
    plan: &FusionPlan,
    fusion_success: &[bool],
) -> ComponentSet {
    debug_assert_eq!(fusion_success.len(), plan.fusions.len());
    let mut cs = ComponentSet::new(topo.vertex_count());
    for e in 0..topo.edge_count() as EdgeId {
        let edge = topo.edge(e);
        if topo.node(edge.u).role != Role::Helper {
            cs.active[(2 * e) as usize] = true;
        }
        if topo.node(edge.v).role != Role::Helper {
            cs.active[(2 * e + 1) as usize] = true;
        }
    }
    for (attempt, &ok) in plan.fusions.iter().zip(fusion_success) {
        if !ok {
            continue;
        }
        for &v in &attempt.vertices {
            cs.active[v as usize] = true;
        }
        for pair in attempt.vertices.windows(2) {
            cs.union(pair[0], pair[1]);
        }
    }
    for e in 0..topo.edge_count() as EdgeId {
        if links[e as usize]
            && cs.active[(2 * e) as usize]
            && cs.active[(2 * e + 1) as usize]
        {
            cs.union(2 * e, 2 * e + 1);
            cs.used_links.push(e);
        }
    }
    cs
}

/// Count and sizes of the GHZ states shared by the two consumers.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SharedSummary {
    pub count: u32,
    /// (consumer A qubits, consumer B qubits) per shared state, sorted.
    pub sizes: Vec<(u32, u32)>,
}

pub fn count_shared_ghz(topo: &Topology, cs: &ComponentSet) -> Result<SharedSummary> {
    let mut tally: std::collections::HashMap<VertexId, (u32, u32)> = Default::default();
    for (role, slot) in [(Role::ConsumerA, 0usize), (Role::ConsumerB, 1)] {
        for v in topo.consumer_vertices(role)? {
            if !cs.is_active(v) {
                continue;
            }
            let entry = tally.entry(cs.find(v)).or_insert((0, 0));
            if slot == 0 {
                entry.0 += 1;
            } else {
                entry.1 += 1;
            }
        }
    }
    let mut sizes: Vec<(u32, u32)> = tally
        .into_values()
        .filter(|&(a, b)| a > 0 && b > 0)
        .collect();
    sizes.sort_unstable();
    Ok(SharedSummary { count: sizes.len() as u32, sizes })
}

/// True when some memory vertex of consumer A shares a component with one of
/// consumer B (at least one GHZ state is shared).
pub fn consumers_connected(topo: &Topology, cs: &ComponentSet) -> Result<bool> {
    Ok(count_shared_ghz(topo, cs)?.count > 0)
}

/// Size of the largest node-level component divided by the node count.
/// Helpers join through their successful fusion; consumers bridge all their
/// active links. Nodes with no surviving link count as singletons.
pub fn largest_node_fraction(topo: &Topology, cs: &ComponentSet) -> f64 {
    let n = topo.node_count();
    if n == 0 {
        return 0.0;
    }
    let mut parent: Vec<u32> = (0..n as u32).collect();
    fn find(parent: &mut [u32], mut v: u32) -> u32 {
        while parent[v as usize] != v {
            parent[v as usize] = parent[parent[v as usize] as usize];
            v = parent[v as usize];
        }
        v
    }
    for &e in &cs.used_links {
        let edge = topo.edge(e);
        let (ra, rb) = (find(&mut parent, edge.u), find(&mut parent, edge.v));
        if ra != rb {
            parent[rb as usize] = ra;
        }
    }
    if cs.used_links.is_empty() {
        return 1.0 / n as f64;
    }
    let mut visited = vec![false; n];
    let mut size = vec![0u32; n];
    let mut best = 1u32;
    for &e in &cs.used_links {
        for v in [topo.edge(e).u, topo.edge(e).v] {
            if visited[v as usize] {
                continue;
            }
            visited[v as usize] = true;
            let r = find(&mut parent, v) as usize;
            size[r] += 1;
            if size[r] > best {
                best = size[r];
            }
        }
    }
    best as f64 / n as f64
}

/// All random draws of one trial, in the fixed draw order. Holding the raw
/// fusion uniforms lets callers re-resolve the same trial at several `q`
/// values with common random numbers.
#[derive(Clone, Debug)]
pub struct TrialDraws {
    pub links: Vec<bool>,
    pub plan: FusionPlan,
    /// One uniform per planned fusion; the attempt succeeds when `u < q`.
    pub fusion_u: Vec<f64>,
}

impl TrialDraws {
    pub fn successes_at(&self, q: f64) -> Vec<bool> {
        self.fusion_u.iter().map(|&u| u < q).collect()
    }
}

/// Draws one full trial from the stream `(seed, trial)`.
pub fn draw_trial(
    topo: &Topology,
    variant: Variant,
    p_eff: f64,
    seed: u64,
    trial: u64,
) -> TrialDraws {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let links = sample_link_outcomes(topo, p_eff, &mut rng);
    let plan = select_fusions(topo, variant, &links, &mut rng);
    let fusion_u = (0..plan.fusions.len()).map(|_| rng.random::<f64>()).collect();
    TrialDraws { links, plan, fusion_u }
}

/// Monte Carlo estimate of shared GHZ states per cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct RateEstimate {
    /// Mean shared states per cycle.
    pub rate: f64,
    pub stderr: f64,
    pub trials: u64,
    /// `count_hist[c]` = cycles that produced exactly c shared states.
    pub count_hist: Vec<u64>,
    /// `size_hist[s]` = shared states of physical size s (consumer qubits).
    pub size_hist: Vec<u64>,
}

#[derive(Clone, Default)]
struct RateAcc {
    sum: u64,
    sum_sq: u64,
    count_hist: Vec<u64>,
    size_hist: Vec<u64>,
}

impl RateAcc {
    fn add_count(hist: &mut Vec<u64>, idx: usize) {
        if hist.len() <= idx {
            hist.resize(idx + 1, 0);
        }
        hist[idx] += 1;
    }

    fn merge(mut self, other: RateAcc) -> RateAcc {
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        for (i, &c) in other.count_hist.iter().enumerate() {
            if self.count_hist.len() <= i {
                self.count_hist.resize(i + 1, 0);
            }
            self.count_hist[i] += c;
        }
        for (i, &c) in other.size_hist.iter().enumerate() {
            if self.size_hist.len() <= i {
                self.size_hist.resize(i + 1, 0);
            }
            self.size_hist[i] += c;
        }
        self
    }
}

/// Runs `cfg.trials` independent cycles and averages the shared-GHZ count.
/// All accumulation is integer-exact, so the result is identical for any
/// thread count.
pub fn estimate_rate(topo: &Topology, cfg: &ProtocolConfig) -> Result<RateEstimate> {
    cfg.validate(topo)?;
    let p_eff = cfg.effective_p();
    let acc = (0..cfg.trials)
        .into_par_iter()
        .try_fold(RateAcc::default, |mut acc, trial| -> Result<RateAcc> {
            let draws = draw_trial(topo, cfg.variant, p_eff, cfg.seed, trial);
            let cs = resolve_cycle(topo, &draws.links, &draws.plan, &draws.successes_at(cfg.q));
            let shared = count_shared_ghz(topo, &cs)?;
            let c = shared.count as u64;
            acc.sum += c;
            acc.sum_sq += c * c;
            RateAcc::add_count(&mut acc.count_hist, shared.count as usize);
            for &(a, b) in &shared.sizes {
                RateAcc::add_count(&mut acc.size_hist, (a + b) as usize);
            }
            Ok(acc)
        })
        .try_reduce(RateAcc::default, |a, b| Ok(a.merge(b)))?;
    let t = cfg.trials as f64;
    let mean = acc.sum as f64 / t;
    let var = (acc.sum_sq as f64 / t - mean * mean).max(0.0);
    Ok(RateEstimate {
        rate: mean,
        stderr: (var / t).sqrt(),
        trials: cfg.trials,
        count_hist: acc.count_hist,
        size_hist: acc.size_hist,
    })
}

/// Replays a resolved cycle as explicit GHZ-record algebra: Bell records for
/// every surviving link, then each planned fusion (merging the distinct
/// records of its qubits and discarding those qubits on success; measuring
/// each fused qubit out of its own record on failure), then the planned X
/// measurements. Returns the surviving records; qubit ids are memory vertex
/// ids. `resolve_cycle` components restricted to consumer vertices must and
/// do agree with these records.
pub fn replay_cycle(
    topo: &Topology,
    links: &[bool],
    plan: &FusionPlan,
    fusion_success: &[bool],
) -> Result<Vec<GhzRecord>> {
    let mut ledger = GhzLedger::new(topo.vertex_count());
    for e in 0..topo.edge_count() as EdgeId {
        if links[e as usize] {
            ledger.add_bell(2 * e, 2 * e + 1);
        }
    }
    for (attempt, &ok) in plan.fusions.iter().zip(fusion_success) {
        ledger.fuse(&attempt.vertices, ok)?;
    }
    for &v in &plan.measured {
        ledger.x_measure(v)?;
    }
    Ok(ledger.into_records())
}

/// Cycle-wide GHZ tracking that, unlike [`crate::ghz::fuse_ghz_records`],
/// accepts fusions whose qubits already share a record (earlier merges can
/// bring two of a node's qubits into one state). A success merges the
/// distinct records involved — sizes m_1 + .. + m_k - n for n fused qubits.
struct GhzLedger {
    /// record index per qubit, usize::MAX = no record
    of: Vec<usize>,
    records: Vec<std::collections::BTreeSet<u32>>,
}

impl GhzLedger {
    fn new(n_qubits: usize) -> GhzLedger {
        GhzLedger { of: vec![usize::MAX; n_qubits], records: Vec::new() }
    }

    fn add_bell(&mut self, a: u32, b: u32) {
        let id = self.records.len();
        self.records.push([a, b].into_iter().collect());
        self.of[a as usize] = id;
        self.of[b as usize] = id;
    }

    fn fuse(&mut self, qubits: &[u32], success: bool) -> Result<()> {
        let mut rec_ids = Vec::with_capacity(qubits.len());
        for &q in qubits {
            let id = self.of[q as usize];
            if id == usize::MAX {
                return Err(Error::Fusion(format!("qubit {q} has no record to fuse")));
            }
            rec_ids.push(id);
        }
        if success {
            let mut distinct = rec_ids.clone();
            distinct.sort_unstable();
            distinct.dedup();
            let target = distinct[0];
            for &id in &distinct[1..] {
                let moved = std::mem::take(&mut self.records[id]);
                for &q in &moved {
                    self.of[q as usize] = target;
                }
                self.records[target].extend(moved);
            }
            for &q in qubits {
                self.records[target].remove(&q);
                self.of[q as usize] = usize::MAX;
            }
        } else {
            for &q in qubits {
                self.x_measure(q)?;
            }
        }
        Ok(())
    }

    fn x_measure(&mut self, q: u32) -> Result<()> {
        let id = self.of[q as usize];
        if id == usize::MAX {
            return Err(Error::Fusion(format!("qubit {q} has no record to measure")));
        }
        self.records[id].remove(&q);
        self.of[q as usize] = usize::MAX;
        Ok(())
    }

    fn into_records(self) -> Vec<GhzRecord> {
        let mut out: Vec<GhzRecord> = self
            .records
            .into_iter()
            .filter(|r| !r.is_empty())
            .map(GhzRecord::new)
            .collect();
        out.sort();
        out
    }
}
