//! Analytic (generating-function) solutions for the protocol on random
//! graphs with a given degree distribution.
//!
//! Following a random edge to a node of excess degree k (k other edges,
//! each alive with probability p), the component of a consumer grows
//! through that node only if the node's fusion succeeds (probability q) and
//! includes the arrival qubit. Averaging the number of onward qubits over
//! the excess-degree distribution gives a branching sum B(p); the process
//! percolates when q·B(p) > 1, so the critical fusion probability is
//! q_c(p) = 1 / B(p).
//!
//! The brickwork (two-color) protocol distinguishes arrival along a black
//! edge from arrival along a red edge. In the idealized model every node of
//! excess degree k >= n holds n black and k - n + 1 red edge slots when
//! entered by black (n and k - n when entered by red); successful black
//! qubits always fuse, red qubits only top the fusion up to n, and a red
//! arrival among l2 other successful reds is included with probability
//! (n - l1)/(l2 + 1). The two-channel branching matrix S then yields the
//! threshold as the smallest root of (1 - q S11)(1 - q S22) = q^2 S12 S21.

use crate::percolation::binomial_pmf;
use crate::topology::DegreeDistribution;
use crate::{Error, Result};

/// Degree data prepared for generating-function sums.
#[derive(Clone, Debug)]
pub struct GenFnContext {
    /// Excess-degree distribution: e[k] = (k+1) p_{k+1} / z.
    excess: Vec<f64>,
    /// Mean degree z.
    z: f64,
}

/// Builds the excess-degree view of a degree distribution.
pub fn excess_distribution(dist: &DegreeDistribution) -> Result<GenFnContext> {
    let z = dist.mean();
    if z <= 0.0 {
        return Err(Error::Analysis("degree distribution has zero mean".into()));
    }
    let probs = dist.probs();
    let excess = (1..probs.len()).map(|d| d as f64 * probs[d] / z).collect();
    Ok(GenFnContext { excess, z })
}

impl GenFnContext {
    pub fn excess(&self) -> &[f64] {
        &self.excess
    }

    pub fn mean_degree(&self) -> f64 {
        self.z
    }
}

/// Branching sum B(p): expected onward fusion qubits per arrival, before
/// the fusion-success factor q. A node of excess degree k < n fuses all l
/// successful qubits (weight l onward); k >= n nodes fuse all l when l < n,
/// otherwise a random n-subset of the l+1 candidates including the arrival,
/// which propagates n(n-1)/(l+1) onward qubits on average.
pub fn criticality_sum(ctx: &GenFnContext, n: u32, p: f64) -> f64 {
    let n = n as usize;
    let nn = (n * (n - 1)) as f64;
    let mut b = 0.0;
    for (k, &ek) in ctx.excess.iter().enumerate() {
        if ek == 0.0 {
            continue;
        }
        let pmf = binomial_pmf(k, p);
        let mut t = 0.0;
        for (l, &w) in pmf.iter().enumerate() {
            if k < n || l < n {
                t += l as f64 * w;
            } else {
                t += w * nn / (l as f64 + 1.0);
            }
        }
        b += ek * t;
    }
    b
}

/// Critical fusion probability q_c(p) = 1/B(p); None when even perfect
/// fusions cannot percolate (B < 1).
pub fn analytic_q_c(ctx: &GenFnContext, n: u32, p: f64) -> Option<f64> {
    let b = criticality_sum(ctx, n, p);
    if b >= 1.0 {
        Some(1.0 / b)
    } else {
        None
    }
}

/// Mean size of the component a random link grows into, counted in
/// consumer-reachable qubits: <s> = q (1 + z p H'(1)) with
/// H'(1) = q (1 - R) / (1 - q B). Errors at or beyond criticality.
pub fn mean_component_size(ctx: &GenFnContext, n: u32, p: f64, q: f64) -> Result<f64> {
    let b = criticality_sum(ctx, n, p);
    if q * b >= 1.0 {
        return Err(Error::Analysis(format!(
            "mean component size diverges: qB = {:.4} >= 1",
            q * b
        )));
    }
    let n = n as usize;
    // weight lost to fusions that exclude the arrival qubit
    let mut r = 0.0;
    for (k, &ek) in ctx.excess.iter().enumerate() {
        if ek == 0.0 || k < n {
            continue;
        }
        let pmf = binomial_pmf(k, p);
        for (l, &w) in pmf.iter().enumerate().skip(n) {
            r += ek * w * (l + 1 - n) as f64 / (l as f64 + 1.0);
        }
    }
    let h1 = q * (1.0 - r) / (1.0 - q * b);
    Ok(q * (1.0 + ctx.z * p * h1))
}

/// Two-channel branching system of the brickwork protocol. `s11`/`s12` are
/// expected onward black/red qubits after a black arrival, `s21`/`s22`
/// after a red arrival; `w11`/`w12` are the arrival-inclusion weights
/// (black arrivals always fuse, so w11 = 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BrickworkSystem {
    pub s11: f64,
    pub s12: f64,
    pub s21: f64,
    pub s22: f64,
    pub w11: f64,
    pub w12: f64,
}

pub fn brickwork_system(ctx: &GenFnContext, n: u32, p: f64) -> BrickworkSystem {
    let n = n as usize;
    let mut sys = BrickworkSystem { s11: 0.0, s12: 0.0, s21: 0.0, s22: 0.0, w11: 0.0, w12: 0.0 };
    for (k, &ek) in ctx.excess.iter().enumerate() {
        if ek == 0.0 {
            continue;
        }
        if k < n {
            // all-black node: every successful qubit fuses
            let pmf = binomial_pmf(k, p);
            for (l, &w) in pmf.iter().enumerate() {
                sys.s11 += ek * w * l as f64;
                sys.w11 += ek * w;
            }
            continue;
        }
        // black arrival: n-1 other black slots, k-n+1 red slots
        let pa = binomial_pmf(n - 1, p);
        let pb = binomial_pmf(k - n + 1, p);
        for (l1, &wa) in pa.iter().enumerate() {
            for (l2, &wb) in pb.iter().enumerate() {
                let w = ek * wa * wb;
                sys.s11 += w * l1 as f64;
                sys.w11 += w;
                if l1 + l2 <= n - 1 {
                    sys.s12 += w * l2 as f64;
                } else {
                    sys.s12 += w * (n - 1 - l1) as f64;
                }
            }
        }
        // red arrival: n black slots, k-n other red slots
        let qa = binomial_pmf(n, p);
        let qb = binomial_pmf(k - n, p);
        for (l1, &wa) in qa.iter().enumerate() {
            for (l2, &wb) in qb.iter().enumerate() {
                let w = ek * wa * wb;
                if l1 + l2 <= n - 1 {
                    sys.s21 += w * l1 as f64;
                    sys.s22 += w * l2 as f64;
                    sys.w12 += w;
                } else if l1 < n {
                    // arrival red included with probability (n-l1)/(l2+1)
                    let inc = (n - l1) as f64 / (l2 as f64 + 1.0);
                    sys.s21 += w * inc * l1 as f64;
                    sys.s22 += w * inc * (n - 1 - l1) as f64;
                    sys.w12 += w * inc;
                }
            }
        }
    }
    sys
}

impl BrickworkSystem {
    /// Constant terms of the two derivative equations at fusion probability q.
    pub fn constants(&self, q: f64) -> (f64, f64) {
        (q * self.w11, q * self.w12)
    }

    /// Critical fusion probability: smallest root of
    /// (1 - q S11)(1 - q S22) = q^2 S12 S21 in (0, 1]; None when the
    /// two-channel process cannot percolate with q <= 1.
    pub fn q_c(&self) -> Option<f64> {
        let a = self.s11 * self.s22 - self.s12 * self.s21;
        let s = self.s11 + self.s22;
        let disc = s * s - 4.0 * a;
        if disc < 0.0 {
            return None;
        }
        let t = s + disc.sqrt();
        if t <= 0.0 {
            return None;
        }
        // numerically stable pair of roots of a q^2 - s q + 1 = 0
        [2.0 / t, t / (2.0 * a)]
            .into_iter()
            .filter(|r| r.is_finite() && *r > 0.0 && *r <= 1.0 + 1e-12)
            .fold(None, |best: Option<f64>, r| {
                Some(best.map_or(r, |b| b.min(r)))
            })
            .map(|r| r.min(1.0))
    }

    /// Mean-size derivatives (H'_black, H'_red) at fusion probability q;
    /// errors at or beyond criticality.
    pub fn derivatives(&self, q: f64) -> Result<(f64, f64)> {
        let det = (1.0 - q * self.s11) * (1.0 - q * self.s22) - q * q * self.s12 * self.s21;
        if det <= 0.0 {
            return Err(Error::Analysis(format!(
                "two-channel system is critical or supercritical (det = {det:.3e})"
            )));
        }
        let (c1, c2) = self.constants(q);
        let h11 = (c1 * (1.0 - q * self.s22) + q * self.s12 * c2) / det;
        let h12 = (c2 * (1.0 - q * self.s11) + q * self.s21 * c1) / det;
        Ok((h11, h12))
    }
}

/// Convenience wrapper around [`brickwork_system`] and its threshold.
pub fn brickwork_q_c(ctx: &GenFnContext, n: u32, p: f64) -> Option<f64> {
    brickwork_system(ctx, n, p).q_c()
}

/// q_c(p) over a grid of link probabilities.
pub fn analytic_curve(ctx: &GenFnContext, n: u32, p_values: &[f64]) -> Vec<(f64, Option<f64>)> {
    p_values.iter().map(|&p| (p, analytic_q_c(ctx, n, p))).collect()
}

/// Brickwork q_c(p) over a grid of link probabilities.
pub fn brickwork_curve(ctx: &GenFnContext, n: u32, p_values: &[f64]) -> Vec<(f64, Option<f64>)> {
    p_values.iter().map(|&p| (p, brickwork_q_c(ctx, n, p))).collect()
}

/// Threshold curve of the thinned protocol: at link probability p the
/// links may be deliberately broken down to any p' <= p, so the effective
/// threshold is the running minimum of q_c over p' <= p. Input must be
/// sorted by ascending p.
pub fn thinned_curve(points: &[(f64, Option<f64>)]) -> Vec<(f64, Option<f64>)> {
    debug_assert!(points.windows(2).all(|w| w[0].0 <= w[1].0));
    let mut best: Option<f64> = None;
    points
        .iter()
        .map(|&(p, q_c)| {
            if let Some(q) = q_c {
                best = Some(best.map_or(q, |b: f64| b.min(q)));
            }
            (p, best)
        })
        .collect()
}
