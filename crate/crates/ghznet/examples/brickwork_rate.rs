//! The brickwork variant removes the high-p rate collapse of the random
//! 3-GHZ protocol: helpers fuse a fixed "black" edge pattern first, so
//! saturating the lattice with links never hurts.

use ghznet::protocol::{estimate_rate, ProtocolConfig, Variant};
use ghznet::topology::Topology;

fn main() -> ghznet::Result<()> {
    let plain = Topology::square_grid(30, 30, (1, 1), (28, 28))?;
    let colored = plain.brickwork_colored()?;
    let trials = 4000;
    let q = 0.85;
    println!("30x30 grid, n = 3, q = {q}\n");
    println!("{:>6} {:>12} {:>12}", "p", "random", "brickwork");
    for i in 0..=6 {
        let p = 0.70 + 0.05 * i as f64;
        let rand_cfg = ProtocolConfig {
            variant: Variant::Random { n: 3 },
            p,
            q,
            p_star: None,
            trials,
            seed: 13,
        };
        let brick_cfg =
            ProtocolConfig { variant: Variant::Brickwork { n: 3 }, ..rand_cfg };
        let r = estimate_rate(&plain, &rand_cfg)?.rate;
        let b = estimate_rate(&colored, &brick_cfg)?.rate;
        println!("{p:>6.2} {r:>12.4} {b:>12.4}");
    }
    println!("\nThe random protocol's rate falls as p -> 1 (uncoordinated subset");
    println!("choices sever links); the brickwork rate keeps climbing.");
    Ok(())
}
