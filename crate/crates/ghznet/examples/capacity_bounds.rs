//! The bound chain on one grid: ultimate capacity >= max-flow >= GCC bound
//! >= measured 4-GHZ rate >= measured 3-GHZ rate.

use ghznet::bounds::{gcc_bound, max_flow_bound, ultimate_capacity};
use ghznet::percolation::giant_component_fraction;
use ghznet::protocol::{estimate_rate, ProtocolConfig, Variant};
use ghznet::topology::Topology;

fn main() -> ghznet::Result<()> {
    let topo = Topology::square_grid(40, 40, (1, 1), (38, 38))?;
    let trials = 1200;
    println!("40x40 grid, q = 1, corner-adjacent consumers\n");
    println!(
        "{:>6} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "p", "capacity", "max-flow", "gcc^2", "rate-4", "rate-3"
    );
    for i in 0..=6 {
        let p = 0.35 + 0.1 * i as f64;
        let cap = ultimate_capacity(p)?;
        let flow = max_flow_bound(p)?;
        let bond = ProtocolConfig {
            variant: Variant::Random { n: 4 },
            p,
            q: 1.0,
            p_star: None,
            trials,
            seed: 5,
        };
        let (frac, _) = giant_component_fraction(&topo, &bond)?;
        let gcc = gcc_bound(frac)?;
        let r4 = estimate_rate(&topo, &bond)?.rate;
        let cfg3 = ProtocolConfig { variant: Variant::Random { n: 3 }, ..bond };
        let r3 = estimate_rate(&topo, &cfg3)?.rate;
        let cap_s = if cap.is_finite() { format!("{cap:>9.4}") } else { format!("{:>9}", "inf") };
        println!("{p:>6.2} {cap_s} {flow:>9.4} {gcc:>9.4} {r4:>9.4} {r3:>9.4}");
    }
    println!("\nEach column bounds the one to its right (within Monte Carlo error).");
    Ok(())
}
