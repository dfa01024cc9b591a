//! Dividing the network into four independent strips multiplies the
//! saturated rate: at p = q = 1 one undivided grid yields a single shared
//! state per cycle, the divided grid yields four.

use ghznet::protocol::{estimate_rate, ProtocolConfig, Variant};
use ghznet::topology::Topology;

fn main() -> ghznet::Result<()> {
    let whole = Topology::square_grid(16, 16, (1, 8), (14, 8))?;
    let divided = whole.divided()?;
    let cfg = ProtocolConfig {
        variant: Variant::Random { n: 4 },
        p: 1.0,
        q: 1.0,
        p_star: None,
        trials: 10,
        seed: 1,
    };
    let r1 = estimate_rate(&whole, &cfg)?;
    let r4 = estimate_rate(&divided, &cfg)?;
    println!("16x16 grid at p = q = 1, consumers on the middle row:");
    println!("  undivided: {} shared state(s) per cycle", r1.rate);
    println!("  divided:   {} shared state(s) per cycle", r4.rate);
    println!();
    println!("Sizes of the shared states (consumer qubits per state):");
    let show = |label: &str, est: &ghznet::protocol::RateEstimate| {
        let sizes: Vec<String> = est
            .size_hist
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(s, c)| format!("size {s} x{c}"))
            .collect();
        println!("  {label}: {}", sizes.join(", "));
    };
    show("undivided", &r1);
    show("divided  ", &r4);
    Ok(())
}
