//! Distance independence: above the percolation threshold the rate does not
//! decay with consumer separation; below it the decay is exponential.

use ghznet::protocol::{estimate_rate, ProtocolConfig, Variant};
use ghznet::topology::Topology;

fn rate_at(width: u32, height: u32, d: u32, p: f64, trials: u64) -> ghznet::Result<(f64, f64)> {
    let y = (height / 2) as i32;
    let xa = (width as i32 - d as i32) / 2;
    let topo = Topology::square_grid(width, height, (xa, y), (xa + d as i32, y))?;
    let cfg = ProtocolConfig {
        variant: Variant::Random { n: 4 },
        p,
        q: 1.0,
        p_star: None,
        trials,
        seed: 11,
    };
    let est = estimate_rate(&topo, &cfg)?;
    Ok((est.rate, est.stderr))
}

fn main() -> ghznet::Result<()> {
    println!("60x60 grid, 4-GHZ, q = 1; consumers on the middle row\n");
    for &(p, label) in &[(0.6, "above threshold"), (0.4, "below threshold")] {
        println!("p = {p} ({label})");
        println!("{:>10} {:>10} {:>10}", "distance", "rate", "stderr");
        for &d in &[8u32, 16, 32, 48] {
            let (rate, se) = rate_at(60, 60, d, p, 3000)?;
            println!("{d:>10} {rate:>10.4} {se:>10.4}");
        }
        println!();
    }
    Ok(())
}
