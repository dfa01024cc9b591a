//! Capacity and rate bounds for a degree-4 consumer pair joined by a
//! lossy network, for calibrating simulated rates against fundamental and
//! protocol-specific ceilings.
//!
//! The identification used throughout: the link success probability p of
//! the protocol plays the role of the channel transmissivity eta.

use crate::{Error, Result};

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Analysis(format!("{name} = {x} outside [0, 1]")));
    }
    Ok(())
}

/// Two-way assisted entanglement capacity of the four parallel pure-loss
/// channels feeding a consumer: -4 log2(1 - eta) ebits per cycle
/// (infinite at eta = 1).
pub fn ultimate_capacity(eta: f64) -> Result<f64> {
    check_unit("eta", eta)?;
    if eta >= 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-4.0 * (1.0 - eta).log2())
}

/// Expected max-flow across the consumer's own cut: four edges, each alive
/// with probability p, carrying one state each.
pub fn max_flow_bound(p: f64) -> Result<f64> {
    check_unit("p", p)?;
    Ok(4.0 * p)
}

/// Probability that both consumers touch the giant cluster when each sits
/// in it with probability `fraction` independently.
pub fn gcc_bound(fraction: f64) -> Result<f64> {
    check_unit("fraction", fraction)?;
    Ok(fraction * fraction)
}

/// Rate ceiling for a Bell-swap (2-fusion) relay: four parallel chains,
/// both ends in the giant cluster, and d_ab - 1 intermediate swaps each
/// succeeding with probability q.
pub fn bsm_rate_bound(fraction: f64, q: f64, d_ab: u32) -> Result<f64> {
    check_unit("fraction", fraction)?;
    check_unit("q", q)?;
    if d_ab == 0 {
        return Err(Error::Analysis("consumer distance must be >= 1".into()));
    }
    Ok(4.0 * fraction * fraction * q.powi(d_ab as i32 - 1))
}
