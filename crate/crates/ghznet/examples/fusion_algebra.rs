//! GHZ record algebra: fusing n qubits from distinct states merges them into
//! one state of combined size minus n; a failed fusion X-measures the
//! involved qubits out, shrinking each state by one.

use ghznet::ghz::{fuse_ghz_records, FusionOutcome, GhzRecord};

fn show(label: &str, outcome: &FusionOutcome) {
    match outcome {
        FusionOutcome::Success(rec) => println!("{label}: one state of size {}", rec.size()),
        FusionOutcome::Failure(recs) => {
            let sizes: Vec<usize> = recs.iter().map(GhzRecord::size).collect();
            println!("{label}: remaining sizes {sizes:?}");
        }
    }
}

fn main() -> ghznet::Result<()> {
    // Three states of sizes 3, 3, 4 over qubits 0..9; fuse qubits {0, 3, 6}.
    let records = vec![
        GhzRecord::new([0, 1, 2]),
        GhzRecord::new([3, 4, 5]),
        GhzRecord::new([6, 7, 8, 9]),
    ];
    println!("States of sizes {{3, 3, 4}}, 3-GHZ projection on one qubit of each:");
    show("  success", &fuse_ghz_records(&records, &[0, 3, 6], true)?);
    show("  failure", &fuse_ghz_records(&records, &[0, 3, 6], false)?);

    // Entanglement swapping: two Bell pairs fused at the middle helper.
    let pairs = vec![GhzRecord::bell(0, 1), GhzRecord::bell(2, 3)];
    println!("\nTwo Bell pairs 0-1, 2-3; 2-GHZ (Bell) projection on qubits 1 and 2:");
    show("  success", &fuse_ghz_records(&pairs, &[1, 2], true)?);
    show("  failure", &fuse_ghz_records(&pairs, &[1, 2], false)?);
    println!("\nA failed swap X-measures both middle qubits: the surviving far-end");
    println!("qubits 0 and 3 drop to single-qubit records, i.e. no entanglement.");
    Ok(())
}
