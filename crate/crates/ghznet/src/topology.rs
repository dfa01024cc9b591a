//! Repeater network topologies and their memory-qubit vertex mapping.
//!
//! A network is a graph of repeater nodes; every (node, edge) incidence owns
//! one memory qubit, the "memory vertex". Edge `e` contributes vertex `2e`
//! at its `u` endpoint and `2e + 1` at its `v` endpoint, so a topology with
//! `E` edges has exactly `2E` memory vertices.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::{Error, Result};

pub type NodeId = u32;
pub type EdgeId = u32;
/// Memory vertex id: `2 * edge` (u side) or `2 * edge + 1` (v side).
pub type VertexId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Helper,
    ConsumerA,
    ConsumerB,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Color {
    Black,
    Red,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Node {
    pub role: Role,
    /// Grid coordinate when the node came from a lattice builder.
    pub coord: Option<(i32, i32)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub color: Option<Color>,
    /// Sub-network id after `divided`; edges of different partitions never mix.
    pub partition: Option<u8>,
}

#[derive(Clone, Debug)]
pub struct Topology {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    /// Incident edge ids per node, in edge-id order.
    incidence: Vec<Vec<EdgeId>>,
    /// Grid dimensions when built by `square_grid` (columns, rows).
    grid_dims: Option<(u32, u32)>,
}

impl Topology {
    fn assemble(
        nodes: Vec<Node>,
        edges: Vec<Edge>,
        grid_dims: Option<(u32, u32)>,
    ) -> Result<Topology> {
        let mut incidence = vec![Vec::new(); nodes.len()];
        for (e, edge) in edges.iter().enumerate() {
            let (u, v) = (edge.u as usize, edge.v as usize);
            if u >= nodes.len() || v >= nodes.len() {
                return Err(Error::Topology(format!(
                    "edge {e} references missing node ({}, {})",
                    edge.u, edge.v
                )));
            }
            if u == v {
                return Err(Error::Topology(format!("edge {e} is a self-loop at {u}")));
            }
            incidence[u].push(e as EdgeId);
            incidence[v].push(e as EdgeId);
        }
        Ok(Topology { nodes, edges, incidence, grid_dims })
    }

    /// W x H square lattice with open boundaries. Node `(x, y)` has id
    /// `y * W + x`; horizontal edges are listed first, row by row, then
    /// vertical edges. `a` and `b` become the two consumers.
    pub fn square_grid(width: u32, height: u32, a: (i32, i32), b: (i32, i32)) -> Result<Topology> {
        if width < 1 || height < 1 || (width as u64) * (height as u64) < 2 {
            return Err(Error::Topology(format!("degenerate grid {width}x{height}")));
        }
        let in_bounds = |(x, y): (i32, i32)| {
            x >= 0 && y >= 0 && (x as u32) < width && (y as u32) < height
        };
        if !in_bounds(a) || !in_bounds(b) {
            return Err(Error::Topology(format!(
                "consumer out of bounds: a={a:?} b={b:?} on {width}x{height}"
            )));
        }
        if a == b {
            return Err(Error::Topology("consumers coincide".into()));
        }
        let nid = |x: i32, y: i32| (y as u32 * width + x as u32) as NodeId;
        let mut nodes = Vec::with_capacity((width * height) as usize);
        for y in 0..height as i32 {
            for x in 0..width as i32 {
                let role = if (x, y) == a {
                    Role::ConsumerA
                } else if (x, y) == b {
                    Role::ConsumerB
                } else {
                    Role::Helper
                };
                nodes.push(Node { role, coord: Some((x, y)) });
            }
        }
        let mut edges = Vec::new();
        for y in 0..height as i32 {
            for x in 0..width as i32 - 1 {
                edges.push(Edge { u: nid(x, y), v: nid(x + 1, y), color: None, partition: None });
            }
        }
        for y in 0..height as i32 - 1 {
            for x in 0..width as i32 {
                edges.push(Edge { u: nid(x, y), v: nid(x, y + 1), color: None, partition: None });
            }
        }
        Topology::assemble(nodes, edges, Some((width, height)))
    }

    /// Random multigraph-free configuration graph: node degrees drawn from
    /// `dist`, stubs matched uniformly. An odd stub total is fixed by
    /// redrawing one node's degree; self-loops and duplicate pairs are
    /// discarded rather than rematched, so realized degrees can fall slightly
    /// short of their draws. No consumers are designated.
    pub fn configuration_graph(
        dist: &DegreeDistribution,
        n_nodes: usize,
        rng: &mut impl Rng,
    ) -> Result<Topology> {
        if n_nodes < 2 {
            return Err(Error::Topology("configuration graph needs >= 2 nodes".into()));
        }
        if dist.probs().iter().skip(1).all(|&p| p <= 0.0) {
            return Err(Error::Topology("degree distribution is degenerate at 0".into()));
        }
        // When only odd degrees can be drawn, the stub total has the parity
        // of the node count, and no amount of resampling changes it.
        let has_even = dist.probs().iter().enumerate().any(|(d, &p)| p > 0.0 && d % 2 == 0);
        if !has_even && n_nodes % 2 == 1 {
            return Err(Error::Topology(
                "odd-degree-only distribution needs an even node count (stub total must be even)"
                    .into(),
            ));
        }
        let mut degrees: Vec<usize> = (0..n_nodes).map(|_| dist.sample(rng)).collect();
        while degrees.iter().sum::<usize>() % 2 == 1 {
            let i = rng.random_range(0..n_nodes);
            degrees[i] = dist.sample(rng);
        }
        let mut stubs = Vec::with_capacity(degrees.iter().sum());
        for (i, &d) in degrees.iter().enumerate() {
            stubs.extend(std::iter::repeat(i as NodeId).take(d));
        }
        // Fisher-Yates, then pair consecutive stubs.
        for i in (1..stubs.len()).rev() {
            let j = rng.random_range(0..=i);
            stubs.swap(i, j);
        }
        let mut seen = std::collections::HashSet::new();
        let mut edges = Vec::with_capacity(stubs.len() / 2);
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v {
                continue;
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                continue;
            }
            edges.push(Edge { u, v, color: None, partition: None });
        }
        let nodes = vec![Node { role: Role::Helper, coord: None }; n_nodes];
        Topology::assemble(nodes, edges, None)
    }

    /// Deterministic grid coloring: every horizontal edge is black; the
    /// vertical edge from `(x, y)` to `(x, y+1)` is black when `x + y` is
    /// even, red otherwise. Interior nodes end with 3 black and 1 red edge.
    pub fn brickwork_colored(&self) -> Result<Topology> {
        let (w, h) = self
            .grid_dims
            .ok_or_else(|| Error::Topology("brickwork coloring needs a square grid".into()))?;
        if w < 2 || h < 2 {
            return Err(Error::Topology("brickwork coloring needs a 2x2 grid or larger".into()));
        }
        let mut out = self.clone();
        for edge in &mut out.edges {
            let (x0, y0) = self.nodes[edge.u as usize].coord.unwrap();
            let (x1, y1) = self.nodes[edge.v as usize].coord.unwrap();
            edge.color = if y0 == y1 {
                Some(Color::Black)
            } else {
                let (x, y) = if y0 < y1 { (x0, y0) } else { (x1, y1) };
                if (x + y) % 2 == 0 {
                    Some(Color::Black)
                } else {
                    Some(Color::Red)
                }
            };
        }
        Ok(out)
    }

    /// Randomized coloring for irregular graphs: edges are visited in random
    /// order and colored black while both endpoints still hold fewer than
    /// `n` black edges, red otherwise. Nodes of degree <= n therefore end
    /// all-black unless a neighbor saturated first; `bounded_black_deviations`
    /// reports the nodes where that happened.
    pub fn bounded_black_colored(&self, n: u32, rng: &mut impl Rng) -> Topology {
        let mut order: Vec<usize> = (0..self.edges.len()).collect();
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let mut black_count = vec![0u32; self.nodes.len()];
        let mut out = self.clone();
        for e in order {
            let Edge { u, v, .. } = out.edges[e];
            if black_count[u as usize] < n && black_count[v as usize] < n {
                out.edges[e].color = Some(Color::Black);
                black_count[u as usize] += 1;
                black_count[v as usize] += 1;
            } else {
                out.edges[e].color = Some(Color::Red);
            }
        }
        out
    }

    /// Nodes of degree <= n left holding a red edge by `bounded_black_colored`.
    pub fn bounded_black_deviations(&self, n: u32) -> Vec<NodeId> {
        (0..self.nodes.len() as NodeId)
            .filter(|&v| {
                self.degree(v) <= n as usize
                    && self.incident_edges(v).iter().any(|&e| {
                        self.edges[e as usize].color == Some(Color::Red)
                    })
            })
            .collect()
    }

    /// Splits a grid into four disconnected equal-height horizontal strips,
    /// leaving each consumer with exactly one memory vertex per strip.
    ///
    /// Each consumer's four lattice edges are replaced by one edge into each
    /// strip, and every edge joining two different strips is erased. The
    /// strip edge lands in the consumer's column at a node that ends with
    /// degree at most 4: in a foreign strip the strip's top boundary row
    /// (two horizontal neighbours plus one below), in the consumer's own
    /// strip the node directly below (or above) the consumer, which has just
    /// lost its edge to the consumer. Keeping every helper at degree <= 4
    /// makes the division saturate to exactly four shared states per cycle
    /// under 4-GHZ fusions at p = q = 1. Requires both consumers interior
    /// (degree 4), on a common row, and a height divisible by 4 with strips
    /// at least 2 rows tall.
    pub fn divided(&self) -> Result<Topology> {
        let (w, h) = self
            .grid_dims
            .ok_or_else(|| Error::Topology("dividing needs a square grid".into()))?;
        if h % 4 != 0 || h < 8 {
            return Err(Error::Topology(format!(
                "dividing needs height divisible by 4 with strips >= 2 rows, got {h}"
            )));
        }
        let a = self.consumer(Role::ConsumerA)?;
        let b = self.consumer(Role::ConsumerB)?;
        let (ax, ay) = self.nodes[a as usize].coord.unwrap();
        let (bx, by) = self.nodes[b as usize].coord.unwrap();
        if ay != by {
            return Err(Error::Topology(
                "default division needs horizontally opposed consumers".into(),
            ));
        }
        for c in [a, b] {
            if self.degree(c) != 4 {
                return Err(Error::Topology(format!(
                    "dividing needs interior consumers with 4 memory vertices, node {c} has {}",
                    self.degree(c) * 1
                )));
            }
        }
        let strip_h = (h / 4) as i32;
        let strip_of = |y: i32| (y / strip_h) as u8;
        let nid = |x: i32, y: i32| (y as u32 * w + x as u32) as NodeId;

        let mut edges = Vec::new();
        for edge in &self.edges {
            let (u, v) = (edge.u, edge.v);
            if u == a || v == a || u == b || v == b {
                continue; // consumer edges are rebuilt below
            }
            let (_, yu) = self.nodes[u as usize].coord.unwrap();
            let (_, yv) = self.nodes[v as usize].coord.unwrap();
            let (su, sv) = (strip_of(yu), strip_of(yv));
            if su != sv {
                continue; // crossing edge, permanently erased
            }
            edges.push(Edge { partition: Some(su), ..*edge });
        }
        for (c, cx, cy) in [(a, ax, ay), (b, bx, by)] {
            for k in 0..4i32 {
                let top = k * strip_h;
                let bottom = top + strip_h - 1;
                let my = if strip_of(cy) == k as u8 {
                    // Own strip: attach to the freed former neighbour.
                    if cy + 1 <= bottom {
                        cy + 1
                    } else {
                        cy - 1
                    }
                } else {
                    top
                };
                edges.push(Edge {
                    u: c,
                    v: nid(cx, my),
                    color: None,
                    partition: Some(k as u8),
                });
            }
        }
        Topology::assemble(self.nodes.clone(), edges, Some((w, h)))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Two memory vertices per edge.
    pub fn vertex_count(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn node(&self, v: NodeId) -> &Node {
        &self.nodes[v as usize]
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e as usize]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn incident_edges(&self, v: NodeId) -> &[EdgeId] {
        &self.incidence[v as usize]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.incidence[v as usize].len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.nodes.len()).map(|v| self.incidence[v].len()).max().unwrap_or(0)
    }

    pub fn grid_dims(&self) -> Option<(u32, u32)> {
        self.grid_dims
    }

    /// Memory vertex held by `node` on edge `e`.
    pub fn vertex_at(&self, e: EdgeId, node: NodeId) -> VertexId {
        let edge = &self.edges[e as usize];
        debug_assert!(edge.u == node || edge.v == node);
        if edge.u == node {
            2 * e
        } else {
            2 * e + 1
        }
    }

    pub fn vertex_edge(&self, v: VertexId) -> EdgeId {
        v / 2
    }

    pub fn vertex_node(&self, v: VertexId) -> NodeId {
        let edge = &self.edges[(v / 2) as usize];
        if v % 2 == 0 {
            edge.u
        } else {
            edge.v
        }
    }

    pub fn consumer(&self, role: Role) -> Result<NodeId> {
        self.nodes
            .iter()
            .position(|n| n.role == role)
            .map(|i| i as NodeId)
            .ok_or_else(|| Error::Topology(format!("no node with role {role:?}")))
    }

    /// Memory vertices held by the consumer with `role`.
    pub fn consumer_vertices(&self, role: Role) -> Result<Vec<VertexId>> {
        let c = self.consumer(role)?;
        Ok(self.incident_edges(c).iter().map(|&e| self.vertex_at(e, c)).collect())
    }

    /// Manhattan distance between the consumers (grid topologies only).
    pub fn consumer_distance(&self) -> Result<u32> {
        let a = self.consumer(Role::ConsumerA)?;
        let b = self.consumer(Role::ConsumerB)?;
        match (self.nodes[a as usize].coord, self.nodes[b as usize].coord) {
            (Some((ax, ay)), Some((bx, by))) => {
                Ok(((ax - bx).unsigned_abs() + (ay - by).unsigned_abs()) as u32)
            }
            _ => Err(Error::Topology("consumer distance needs coordinates".into())),
        }
    }

    /// Line-oriented text form; `from_text` restores it losslessly.
    ///
    /// ```text
    /// ghz-topology 1
    /// <node-count> <edge-count> [<grid-w>x<grid-h>]
    /// <id> <role: h|A|B> <x|-> <y|->        (one line per node)
    /// <u> <v> <color: -|b|r> <partition: -|0..3>   (one line per edge)
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("ghz-topology 1\n");
        match self.grid_dims {
            Some((w, h)) => {
                let _ = writeln!(s, "{} {} {}x{}", self.nodes.len(), self.edges.len(), w, h);
            }
            None => {
                let _ = writeln!(s, "{} {}", self.nodes.len(), self.edges.len());
            }
        }
        for (i, n) in self.nodes.iter().enumerate() {
            let role = match n.role {
                Role::Helper => "h",
                Role::ConsumerA => "A",
                Role::ConsumerB => "B",
            };
            match n.coord {
                Some((x, y)) => {
                    let _ = writeln!(s, "{i} {role} {x} {y}");
                }
                None => {
                    let _ = writeln!(s, "{i} {role} - -");
                }
            }
        }
        for e in &self.edges {
            let color = match e.color {
                None => "-",
                Some(Color::Black) => "b",
                Some(Color::Red) => "r",
            };
            match e.partition {
                Some(p) => {
                    let _ = writeln!(s, "{} {} {} {}", e.u, e.v, color, p);
                }
                None => {
                    let _ = writeln!(s, "{} {} {} -", e.u, e.v, color);
                }
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Topology> {
        let mut lines = text.lines().enumerate();
        let bad = |ln: usize, msg: &str| Error::Parse(format!("topology line {}: {msg}", ln + 1));
        let (ln, magic) = lines.next().ok_or_else(|| bad(0, "empty input"))?;
        if magic.trim() != "ghz-topology 1" {
            return Err(bad(ln, "expected header `ghz-topology 1`"));
        }
        let (ln, counts) = lines.next().ok_or_else(|| bad(1, "missing counts line"))?;
        let mut it = counts.split_whitespace();
        let n_nodes: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(ln, "bad node count"))?;
        let n_edges: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(ln, "bad edge count"))?;
        let grid_dims = match it.next() {
            None => None,
            Some(tok) => {
                let (w, h) = tok
                    .split_once('x')
                    .ok_or_else(|| bad(ln, "bad grid dims"))?;
                Some((
                    w.parse().map_err(|_| bad(ln, "bad grid width"))?,
                    h.parse().map_err(|_| bad(ln, "bad grid height"))?,
                ))
            }
        };
        let mut nodes = Vec::with_capacity(n_nodes);
        for i in 0..n_nodes {
            let (ln, line) = lines.next().ok_or_else(|| bad(2 + i, "missing node line"))?;
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 4 {
                return Err(bad(ln, "node line needs `id role x y`"));
            }
            let id: usize = t[0].parse().map_err(|_| bad(ln, "bad node id"))?;
            if id != i {
                return Err(bad(ln, "node ids must be dense and in order"));
            }
            let role = match t[1] {
                "h" => Role::Helper,
                "A" => Role::ConsumerA,
                "B" => Role::ConsumerB,
                _ => return Err(bad(ln, "role must be h, A or B")),
            };
            let coord = match (t[2], t[3]) {
                ("-", "-") => None,
                (x, y) => Some((
                    x.parse().map_err(|_| bad(ln, "bad x coordinate"))?,
                    y.parse().map_err(|_| bad(ln, "bad y coordinate"))?,
                )),
            };
            nodes.push(Node { role, coord });
        }
        let mut edges = Vec::with_capacity(n_edges);
        for _ in 0..n_edges {
            let (ln, line) = lines.next().ok_or_else(|| bad(0, "missing edge line"))?;
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 4 {
                return Err(bad(ln, "edge line needs `u v color partition`"));
            }
            let u: NodeId = t[0].parse().map_err(|_| bad(ln, "bad endpoint"))?;
            let v: NodeId = t[1].parse().map_err(|_| bad(ln, "bad endpoint"))?;
            let color = match t[2] {
                "-" => None,
                "b" => Some(Color::Black),
                "r" => Some(Color::Red),
                _ => return Err(bad(ln, "color must be -, b or r")),
            };
            let partition = match t[3] {
                "-" => None,
                p => Some(p.parse().map_err(|_| bad(ln, "bad partition"))?),
            };
            edges.push(Edge { u, v, color, partition });
        }
        if let Some((ln, extra)) = lines.next() {
            if !extra.trim().is_empty() {
                return Err(bad(ln, "trailing content"));
            }
        }
        Topology::assemble(nodes, edges, grid_dims)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Topology> {
        Ok(Topology::from_text(&std::fs::read_to_string(path)?)?)
    }
}

/// Finite node-degree distribution; probabilities sum to 1 within 1e-12.
#[derive(Clone, Debug)]
pub struct DegreeDistribution {
    probs: Vec<f64>,
}

impl DegreeDistribution {
    pub fn new(probs: Vec<f64>) -> Result<DegreeDistribution> {
        if probs.is_empty() || probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::Topology("degree probabilities must lie in [0, 1]".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Topology(format!(
                "degree probabilities sum to {sum}, expected 1 within 1e-12"
            )));
        }
        Ok(DegreeDistribution { probs })
    }

    pub fn constant(d: usize) -> DegreeDistribution {
        let mut probs = vec![0.0; d + 1];
        probs[d] = 1.0;
        DegreeDistribution { probs }
    }

    /// Poisson(lambda) truncated at `d_max` (default: smallest cutoff with
    /// tail mass below 1e-10); the tail mass is folded into the last bin.
    pub fn poisson(lambda: f64, d_max: Option<usize>) -> Result<DegreeDistribution> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Topology(format!("poisson needs lambda > 0, got {lambda}")));
        }
        let cutoff = d_max.unwrap_or_else(|| {
            let mut term = (-lambda).exp();
            let mut cdf = term;
            let mut d = 0usize;
            while 1.0 - cdf > 1e-10 && d < 10_000 {
                d += 1;
                term *= lambda / d as f64;
                cdf += term;
            }
            d
        });
        let mut probs = Vec::with_capacity(cutoff + 1);
        let mut term = (-lambda).exp();
        let mut cdf = 0.0;
        for d in 0..=cutoff {
            if d > 0 {
                term *= lambda / d as f64;
            }
            probs.push(term);
            cdf += term;
        }
        *probs.last_mut().unwrap() += 1.0 - cdf; // fold the tail in
        DegreeDistribution::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn max_degree(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(d, &p)| d as f64 * p).sum()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let mut u: f64 = rng.random();
        for (d, &p) in self.probs.iter().enumerate() {
            if u < p {
                return d;
            }
            u -= p;
        }
        self.probs.len() - 1
    }
}

/// Per-strip node sets of a divided topology, for diagnostics.
pub fn partition_summary(topo: &Topology) -> BTreeMap<u8, usize> {
    let mut count = BTreeMap::new();
    for e in topo.edges() {
        if let Some(p) = e.partition {
            *count.entry(p).or_insert(0) += 1;
        }
    }
    count
}
