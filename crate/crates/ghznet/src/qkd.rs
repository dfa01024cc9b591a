//! Key sifting on shared GHZ states (an entanglement-based BBM92-style
//! scheme generalized to multi-qubit shares).
//!
//! Each round the consumers hold one (m+l)-qubit GHZ state, m qubits on
//! Alice's side and l on Bob's. Both pick a basis uniformly and measure all
//! their qubits in it. The ideal outcome statistics:
//!
//! * both computational: every qubit shows the same uniformly random bit;
//! * both Hadamard: a uniformly random bit string of even total parity;
//! * mixed: each side's marginal (repeated bit / iid uniform bits),
//!   independent of the other side.
//!
//! Sifting keeps the rounds with matching bases: the repeated bit is the
//! key bit in the computational case; each side's own substring parity is
//! the key bit in the Hadamard case (the even total parity makes them
//! agree). Mixed rounds are discarded, so the asymptotic sift rate is 1/2.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Computational,
    Hadamard,
}

impl Basis {
    pub fn symbol(&self) -> &'static str {
        match self {
            Basis::Computational => "Z",
            Basis::Hadamard => "X",
        }
    }
}

/// One shared GHZ state: m qubits with Alice, l with Bob.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GhzShare {
    pub m: usize,
    pub l: usize,
}

impl GhzShare {
    pub fn new(m: usize, l: usize) -> Result<GhzShare> {
        if m < 1 || l < 1 {
            return Err(Error::Config(format!(
                "a shared state needs qubits on both sides, got m={m}, l={l}"
            )));
        }
        Ok(GhzShare { m, l })
    }
}

/// Outcomes of one measured round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasuredRound {
    pub basis_a: Basis,
    pub basis_b: Basis,
    pub a_bits: Vec<u8>,
    pub b_bits: Vec<u8>,
}

fn parity(bits: &[u8]) -> u8 {
    bits.iter().fold(0, |p, &b| p ^ b)
}

/// Samples the ideal measurement statistics of one GHZ share.
pub fn measure_share(
    share: GhzShare,
    basis_a: Basis,
    basis_b: Basis,
    rng: &mut impl Rng,
) -> MeasuredRound {
    let bit = |rng: &mut dyn FnMut() -> bool| u8::from(rng());
    let mut draw = || rng.random::<bool>();
    let (a_bits, b_bits) = match (basis_a, basis_b) {
        (Basis::Computational, Basis::Computational) => {
            let r = bit(&mut draw);
            (vec![r; share.m], vec![r; share.l])
        }
        (Basis::Hadamard, Basis::Hadamard) => {
            let mut all: Vec<u8> = (1..share.m + share.l).map(|_| bit(&mut draw)).collect();
            all.push(parity(&all)); // total parity is always even
            let b = all.split_off(share.m);
            (all, b)
        }
        (Basis::Computational, Basis::Hadamard) => {
            let r = bit(&mut draw);
            (vec![r; share.m], (0..share.l).map(|_| bit(&mut draw)).collect())
        }
        (Basis::Hadamard, Basis::Computational) => {
            let a = (0..share.m).map(|_| bit(&mut draw)).collect();
            let r = bit(&mut draw);
            (a, vec![r; share.l])
        }
    };
    MeasuredRound { basis_a, basis_b, a_bits, b_bits }
}

/// Applies the sifting rule to one round: Some((alice_bit, bob_bit)) when
/// the bases matched, None when discarded. A computational-basis string
/// that is not constant signals a corrupted state and is an error.
pub fn sift_round(round: &MeasuredRound) -> Result<Option<(u8, u8)>> {
    let constant = |bits: &[u8], side: &str| -> Result<u8> {
        if bits.iter().any(|&b| b != bits[0]) {
            return Err(Error::Analysis(format!(
                "{side} computational outcomes {bits:?} are not constant; state was not GHZ"
            )));
        }
        Ok(bits[0])
    };
    match (round.basis_a, round.basis_b) {
        (Basis::Computational, Basis::Computational) => {
            let a = constant(&round.a_bits, "alice")?;
            let b = constant(&round.b_bits, "bob")?;
            Ok(Some((a, b)))
        }
        (Basis::Hadamard, Basis::Hadamard) => {
            Ok(Some((parity(&round.a_bits), parity(&round.b_bits))))
        }
        _ => Ok(None),
    }
}

/// Per-round log entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundRecord {
    pub basis_a: Basis,
    pub basis_b: Basis,
    pub sifted: bool,
    /// Alice's key bit when sifted.
    pub key_bit: Option<u8>,
}

#[derive(Clone, Debug)]
pub struct QkdResult {
    pub key_a: Vec<u8>,
    pub key_b: Vec<u8>,
    pub rounds: u64,
    pub sifted: u64,
    /// Sifted rounds where the two key bits disagreed (0 for ideal states).
    pub mismatches: u64,
    pub log: Vec<RoundRecord>,
}

impl QkdResult {
    /// Fraction of rounds that survived sifting (0 for an empty run).
    pub fn sift_rate(&self) -> f64 {
        if self.rounds == 0 {
            0.0
        } else {
            self.sifted as f64 / self.rounds as f64
        }
    }
}

/// Runs `rounds` rounds with uniformly random bases on both sides.
/// Zero rounds is allowed and yields an empty key.
pub fn run_qkd(share: GhzShare, rounds: u64, seed: u64) -> Result<QkdResult> {
    GhzShare::new(share.m, share.l)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = QkdResult {
        key_a: Vec::new(),
        key_b: Vec::new(),
        rounds,
        sifted: 0,
        mismatches: 0,
        log: Vec::with_capacity(rounds as usize),
    };
    for _ in 0..rounds {
        let pick = |rng: &mut ChaCha8Rng| {
            if rng.random::<bool>() {
                Basis::Hadamard
            } else {
                Basis::Computational
            }
        };
        let (ba, bb) = (pick(&mut rng), pick(&mut rng));
        let round = measure_share(share, ba, bb, &mut rng);
        match sift_round(&round)? {
            Some((ka, kb)) => {
                out.sifted += 1;
                out.mismatches += u64::from(ka != kb);
                out.key_a.push(ka);
                out.key_b.push(kb);
                out.log.push(RoundRecord {
                    basis_a: ba,
                    basis_b: bb,
                    sifted: true,
                    key_bit: Some(ka),
                });
            }
            None => out.log.push(RoundRecord {
                basis_a: ba,
                basis_b: bb,
                sifted: false,
                key_bit: None,
            }),
        }
    }
    Ok(out)
}

/// Packs key bits into lowercase hex, most significant bit first; a final
/// partial byte is zero-padded on the right.
pub fn bits_to_hex(bits: &[u8]) -> String {
    let mut s = String::with_capacity(bits.len().div_ceil(4));
    for chunk in bits.chunks(8) {
        let mut byte = 0u8;
        for (i, &b) in chunk.iter().enumerate() {
            byte |= (b & 1) << (7 - i);
        }
        s.push_str(&format!("{byte:02x}"));
    }
    s
}
