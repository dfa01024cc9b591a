//! Key sifting from shared GHZ states: both parties measure every share in
//! a random basis; matching bases yield one key bit (repeated bit in the
//! computational basis, own-string parity in the Hadamard basis).

use ghznet::qkd::{bits_to_hex, run_qkd, GhzShare};

fn main() -> ghznet::Result<()> {
    let share = GhzShare::new(3, 2)?; // 3 qubits at Alice, 2 at Bob
    let res = run_qkd(share, 20_000, 99)?;
    println!("20000 shares of a (3+2)-qubit state:");
    println!("  sifted rounds: {} (rate {:.4})", res.sifted, res.sift_rate());
    println!("  key mismatches: {}", res.mismatches);
    println!("  keys identical: {}", res.key_a == res.key_b);
    println!("  key head (hex): {}...", &bits_to_hex(&res.key_a)[..16]);

    println!("\nFirst 8 rounds:");
    println!("{:>6} {:>8} {:>8} {:>7} {:>4}", "round", "basis_a", "basis_b", "sifted", "key");
    for (i, r) in res.log.iter().take(8).enumerate() {
        let key = r.key_bit.map(|b| b.to_string()).unwrap_or_else(|| "-".into());
        println!(
            "{i:>6} {:>8} {:>8} {:>7} {:>4}",
            r.basis_a.symbol(),
            r.basis_b.symbol(),
            r.sifted,
            key
        );
    }
    Ok(())
}
