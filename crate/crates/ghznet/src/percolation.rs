//! Percolation estimators: consumer-to-consumer connection probability,
//! giant-component fractions, Newman-Ziff bond sweeps, and critical-point
//! search for the fusion probability.
//!
//! Every Monte Carlo routine accumulates integers (event counts, component
//! sizes), so estimates are bit-identical for any thread count. Trials use
//! common random numbers across parameter values: the same trial index
//! reuses the same underlying uniforms, which makes empirical curves smooth
//! and the connection indicator monotone along the fusion-probability axis.

use std::borrow::Cow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::protocol::{
    consumers_connected, draw_trial, largest_node_fraction, resolve_cycle, select_fusions,
    ProtocolConfig, Variant,
};
use crate::topology::{Role, Topology};
use crate::Result;

/// Stream-salt so plan subset choices and fusion uniforms restart identically
/// for every point of a link-probability sweep (common random numbers).
const PLAN_SALT: u64 = 0x706c_616e;
const FUSION_SALT: u64 = 0x6675_7365;

/// Full binomial pmf for m successes out of n at probability p, computed
/// outward from the mode with the ratio recurrence (stable for large n).
pub fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let mut pmf = vec![0.0; n + 1];
    if p <= 0.0 {
        pmf[0] = 1.0;
        return pmf;
    }
    if p >= 1.0 {
        pmf[n] = 1.0;
        return pmf;
    }
    let mode = (((n + 1) as f64) * p).floor().min(n as f64) as usize;
    let mut ln = mode as f64 * p.ln() + (n - mode) as f64 * (1.0 - p).ln();
    for i in 1..=mode {
        ln += ((n - mode + i) as f64).ln() - (i as f64).ln();
    }
    pmf[mode] = ln.exp();
    let odds = p / (1.0 - p);
    for m in mode..n {
        pmf[m + 1] = pmf[m] * (n - m) as f64 / (m + 1) as f64 * odds;
    }
    for m in (1..=mode).rev() {
        pmf[m - 1] = pmf[m] * m as f64 / (n - m + 1) as f64 / odds;
    }
    pmf
}

/// First x where the piecewise-linear curve through `(xs, ys)` reaches
/// `level` from below.
pub fn crossing_point(xs: &[f64], ys: &[f64], level: f64) -> Option<f64> {
    debug_assert_eq!(xs.len(), ys.len());
    if !ys.is_empty() && ys[0] >= level {
        return Some(xs[0]);
    }
    for i in 1..xs.len() {
        if ys[i - 1] < level && ys[i] >= level {
            let t = (level - ys[i - 1]) / (ys[i] - ys[i - 1]);
            return Some(xs[i - 1] + t * (xs[i] - xs[i - 1]));
        }
    }
    None
}

/// Consumer-connection probability at one parameter point.
pub fn connection_probability(topo: &Topology, cfg: &ProtocolConfig) -> Result<(f64, f64)> {
    cfg.validate(topo)?;
    let p_eff = cfg.effective_p();
    let hits = (0..cfg.trials)
        .into_par_iter()
        .try_fold(
            || 0u64,
            |acc, trial| -> Result<u64> {
                let draws = draw_trial(topo, cfg.variant, p_eff, cfg.seed, trial);
                let cs =
                    resolve_cycle(topo, &draws.links, &draws.plan, &draws.successes_at(cfg.q));
                Ok(acc + consumers_connected(topo, &cs)? as u64)
            },
        )
        .try_reduce(|| 0u64, |a, b| Ok(a + b))?;
    let t = cfg.trials as f64;
    let phat = hits as f64 / t;
    Ok((phat, (phat * (1.0 - phat) / t).sqrt()))
}

/// Consumer-connection probability on a grid of link probabilities, sharing
/// each trial's link uniforms across all points.
pub fn connection_curve_over_p(
    topo: &Topology,
    variant: Variant,
    q: f64,
    p_values: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let hits = (0..trials)
        .into_par_iter()
        .try_fold(
            || vec![0u64; p_values.len()],
            |mut acc, trial| -> Result<Vec<u64>> {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(trial);
                let u: Vec<f64> = (0..topo.edge_count()).map(|_| rng.random()).collect();
                for (i, &p) in p_values.iter().enumerate() {
                    let links: Vec<bool> = u.iter().map(|&x| x < p).collect();
                    let mut plan_rng = ChaCha8Rng::seed_from_u64(seed ^ PLAN_SALT);
                    plan_rng.set_stream(trial);
                    let plan = select_fusions(topo, variant, &links, &mut plan_rng);
                    let successes: Vec<bool> = if q >= 1.0 {
                        vec![true; plan.fusions.len()]
                    } else {
                        let mut q_rng = ChaCha8Rng::seed_from_u64(seed ^ FUSION_SALT);
                        q_rng.set_stream(trial);
                        (0..plan.fusions.len()).map(|_| q_rng.random::<f64>() < q).collect()
                    };
                    let cs = resolve_cycle(topo, &links, &plan, &successes);
                    acc[i] += consumers_connected(topo, &cs)? as u64;
                }
                Ok(acc)
            },
        )
        .try_reduce(
            || vec![0u64; p_values.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(a)
            },
        )?;
    let t = trials as f64;
    Ok(hits
        .into_iter()
        .map(|h| {
            let phat = h as f64 / t;
            (phat, (phat * (1.0 - phat) / t).sqrt())
        })
        .collect())
}

/// Mean largest-component node fraction under the protocol. When the cycle
/// degenerates to plain bond percolation (all fusions succeed and every
/// node can fuse its full degree), components are counted directly on the
/// link graph so that leaf nodes, which the fusion rules would measure out,
/// still count — that is the classical quantity the analytic solutions use.
pub fn giant_component_fraction(topo: &Topology, cfg: &ProtocolConfig) -> Result<(f64, f64)> {
    cfg.validate(topo)?;
    let p_eff = cfg.effective_p();
    let pure_bond = cfg.q >= 1.0 && cfg.variant.n() as usize >= topo.max_degree();
    let (sum, sum_sq) = (0..cfg.trials)
        .into_par_iter()
        .try_fold(
            || (0u64, u128::from(0u8)),
            |(s, s2), trial| -> Result<(u64, u128)> {
                let size = if pure_bond {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    rng.set_stream(trial);
                    let links: Vec<bool> =
                        (0..topo.edge_count()).map(|_| rng.random::<f64>() < p_eff).collect();
                    largest_bond_component(topo, &links)
                } else {
                    let draws = draw_trial(topo, cfg.variant, p_eff, cfg.seed, trial);
                    let cs = resolve_cycle(
                        topo,
                        &draws.links,
                        &draws.plan,
                        &draws.successes_at(cfg.q),
                    );
                    (largest_node_fraction(topo, &cs) * topo.node_count() as f64).round() as u64
                };
                Ok((s + size, s2 + u128::from(size) * u128::from(size)))
            },
        )
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let t = cfg.trials as f64;
    let n = topo.node_count() as f64;
    let mean = sum as f64 / t;
    let var = (sum_sq as f64 / t - mean * mean).max(0.0);
    Ok((mean / n, (var / t).sqrt() / n))
}

/// Largest component of the plain link graph, all nodes present.
fn largest_bond_component(topo: &Topology, links: &[bool]) -> u64 {
    let n = topo.node_count();
    let mut parent: Vec<u32> = (0..n as u32).collect();
    let mut size = vec![1u32; n];
    fn find(parent: &mut [u32], mut v: u32) -> u32 {
        while parent[v as usize] != v {
            parent[v as usize] = parent[parent[v as usize] as usize];
            v = parent[v as usize];
        }
        v
    }
    let mut best = 1;
    for (e, edge) in topo.edges().iter().enumerate() {
        if !links[e] {
            continue;
        }
        let (mut ra, mut rb) = (find(&mut parent, edge.u), find(&mut parent, edge.v));
        if ra == rb {
            continue;
        }
        if size[ra as usize] < size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        parent[rb as usize] = ra;
        size[ra as usize] += size[rb as usize];
        best = best.max(size[ra as usize]);
    }
    best as u64
}

/// Newman-Ziff sweep of plain bond percolation: each trial inserts the edges
/// in a fresh random order, recording the largest component size after every
/// insertion and the insertion count at which the consumers first connect.
/// Canonical (fixed-p) values follow by binomial convolution, so one sweep
/// serves every p.
#[derive(Clone, Debug)]
pub struct BondSweep {
    n_nodes: usize,
    n_edges: usize,
    trials: u64,
    /// trials whose consumers were connected after at most m insertions
    conn_cdf: Vec<u64>,
    /// summed largest component size after m insertions
    sum_largest: Vec<u64>,
}

#[derive(Clone)]
struct SweepAcc {
    conn_hist: Vec<u64>,
    sum_largest: Vec<u64>,
}

pub fn newman_ziff_sweep(topo: &Topology, trials: u64, seed: u64) -> Result<BondSweep> {
    let n = topo.node_count();
    let m = topo.edge_count();
    let a = topo.consumer(Role::ConsumerA)?;
    let b = topo.consumer(Role::ConsumerB)?;
    let zero = || SweepAcc { conn_hist: vec![0; m + 2], sum_largest: vec![0; m + 1] };
    let acc = (0..trials)
        .into_par_iter()
        .fold(zero, |mut acc, trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial);
            let mut order: Vec<u32> = (0..m as u32).collect();
            for i in (1..m).rev() {
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }
            let mut parent: Vec<u32> = (0..n as u32).collect();
            let mut size = vec![1u32; n];
            fn find(parent: &mut [u32], mut v: u32) -> u32 {
                while parent[v as usize] != v {
                    parent[v as usize] = parent[parent[v as usize] as usize];
                    v = parent[v as usize];
                }
                v
            }
            let mut largest = 1u64;
            let mut m_star = m + 1; // sentinel: never connected
            acc.sum_largest[0] += 1;
            for (step, &e) in order.iter().enumerate() {
                let edge = topo.edge(e);
                let (mut ra, mut rb) = (find(&mut parent, edge.u), find(&mut parent, edge.v));
                if ra != rb {
                    if size[ra as usize] < size[rb as usize] {
                        std::mem::swap(&mut ra, &mut rb);
                    }
                    parent[rb as usize] = ra;
                    size[ra as usize] += size[rb as usize];
                    largest = largest.max(size[ra as usize] as u64);
                }
                acc.sum_largest[step + 1] += largest;
                if m_star > m && find(&mut parent, a) == find(&mut parent, b) {
                    m_star = step + 1;
                }
            }
            acc.conn_hist[m_star] += 1;
            acc
        })
        .reduce(zero, |mut x, y| {
            for (a, b) in x.conn_hist.iter_mut().zip(y.conn_hist) {
                *a += b;
            }
            for (a, b) in x.sum_largest.iter_mut().zip(y.sum_largest) {
                *a += b;
            }
            x
        });
    let mut conn_cdf = vec![0u64; m + 1];
    let mut run = 0;
    for (i, cdf) in conn_cdf.iter_mut().enumerate() {
        run += acc.conn_hist[i];
        *cdf = run;
    }
    Ok(BondSweep { n_nodes: n, n_edges: m, trials, conn_cdf, sum_largest: acc.sum_largest })
}

impl BondSweep {
    /// P(consumers connected) at link probability p.
    pub fn connection_at(&self, p: f64) -> f64 {
        let pmf = binomial_pmf(self.n_edges, p);
        let t = self.trials as f64;
        pmf.iter()
            .zip(&self.conn_cdf)
            .map(|(&w, &c)| w * c as f64 / t)
            .sum()
    }

    /// E[largest component fraction] at link probability p.
    pub fn giant_fraction_at(&self, p: f64) -> f64 {
        let pmf = binomial_pmf(self.n_edges, p);
        let t = self.trials as f64 * self.n_nodes as f64;
        pmf.iter()
            .zip(&self.sum_largest)
            .map(|(&w, &s)| w * s as f64 / t)
            .sum()
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }
}

/// Where the trials of a critical-point search come from: one fixed network,
/// or a fresh sample of a random ensemble per trial.
pub enum Ensemble<'a> {
    Fixed(&'a Topology),
    Resampled(Box<dyn Fn(u64) -> Result<Topology> + Sync + 'a>),
}

impl Ensemble<'_> {
    fn for_trial(&self, trial: u64) -> Result<Cow<'_, Topology>> {
        match self {
            Ensemble::Fixed(t) => Ok(Cow::Borrowed(t)),
            Ensemble::Resampled(f) => Ok(Cow::Owned(f(trial)?)),
        }
    }
}

/// Observable whose level-crossing defines the critical point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Estimator {
    /// Probability that the consumers share at least one GHZ state.
    /// Suits lattices with a consumer pair at a fixed fraction of the span.
    Connection { level: f64 },
    /// Mean largest-component node fraction. Suits random-graph ensembles;
    /// the level should shrink with size, see [`default_fraction_level`].
    GiantFraction { level: f64 },
}

impl Estimator {
    pub fn level(&self) -> f64 {
        match *self {
            Estimator::Connection { level } | Estimator::GiantFraction { level } => level,
        }
    }
}

/// Finite-size crossing level N^(-1/3) for the giant-fraction estimator.
pub fn default_fraction_level(n_nodes: usize) -> f64 {
    (n_nodes as f64).powf(-1.0 / 3.0)
}

/// The default connection level for lattice threshold scans. At the scan
/// geometry used here (consumer separation of half the lattice span) the
/// connection probability at criticality sits near this value, so the
/// crossing estimate converges onto the threshold instead of overshooting.
pub const GRID_CONNECTION_LEVEL: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalPoint {
    pub value: f64,
    /// Half-width of the final bisection bracket.
    pub uncertainty: f64,
}

/// Smallest fusion probability at which `estimator` reaches its level, found
/// by bisection with common random numbers (link patterns and fusion
/// uniforms are fixed per trial, so the estimate is monotone in q and the
/// bisection is self-consistent). Returns None when even q = 1 stays below
/// the level.
pub fn critical_q(
    ensemble: &Ensemble,
    variant: Variant,
    p: f64,
    estimator: Estimator,
    trials: u64,
    seed: u64,
    tol: f64,
) -> Result<Option<CriticalPoint>> {
    let eval = |q: f64| -> Result<f64> {
        let (num, den) = (0..trials)
            .into_par_iter()
            .try_fold(
                || (0u64, 0u64),
                |(num, den), trial| -> Result<(u64, u64)> {
                    let topo = ensemble.for_trial(trial)?;
                    let draws = draw_trial(&topo, variant, p, seed, trial);
                    let cs =
                        resolve_cycle(&topo, &draws.links, &draws.plan, &draws.successes_at(q));
                    Ok(match estimator {
                        Estimator::Connection { .. } => {
                            (num + consumers_connected(&topo, &cs)? as u64, den + 1)
                        }
                        Estimator::GiantFraction { .. } => {
                            let n = topo.node_count() as u64;
                            let size = (largest_node_fraction(&topo, &cs) * n as f64).round();
                            (num + size as u64, den + n)
                        }
                    })
                },
            )
            .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
        Ok(num as f64 / den as f64)
    };
    let level = estimator.level();
    if eval(1.0)? < level {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? >= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(CriticalPoint { value: 0.5 * (lo + hi), uncertainty: 0.5 * (hi - lo) }))
}

/// One point of a simulated site-bond critical region boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub p: f64,
    /// None: no threshold (unreachable even with perfect fusions).
    pub q_c: Option<f64>,
    pub uncertainty: f64,
}

/// Simulated critical curve q_c(p) over the given link probabilities.
pub fn site_bond_curve_sim(
    ensemble: &Ensemble,
    variant: Variant,
    p_values: &[f64],
    estimator: Estimator,
    trials: u64,
    seed: u64,
    tol: f64,
) -> Result<Vec<CurvePoint>> {
    p_values
        .iter()
        .map(|&p| {
            Ok(match critical_q(ensemble, variant, p, estimator, trials, seed, tol)? {
                Some(cp) => CurvePoint { p, q_c: Some(cp.value), uncertainty: cp.uncertainty },
                None => CurvePoint { p, q_c: None, uncertainty: tol },
            })
        })
        .collect()
}
