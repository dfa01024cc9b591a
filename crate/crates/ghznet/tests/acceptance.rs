//! Acceptance suite: twelve end-to-end checks of the library's headline
//! behaviors, each with its stated quantitative tolerance. One test per
//! criterion (named `criterion_NN_*`), so `cargo test --test acceptance`
//! reports one pass/fail line per criterion; each test also prints a
//! `criterion NN ...: PASS` summary visible with `-- --nocapture`.
//!
//! Monte Carlo checks use frozen seeds, so every run is reproducible.
//! Expected values come from independent oracles: exact enumeration for
//! small lattices, brute-force state vectors for fusion algebra and
//! measurement statistics, and closed-form generating-function solutions
//! for random-graph thresholds.

use ghznet::analytics::{analytic_q_c, excess_distribution, thinned_curve};
use ghznet::bounds::{bsm_rate_bound, gcc_bound, max_flow_bound, ultimate_capacity};
use ghznet::exact::exact_shared_expectation;
use ghznet::experiment::{parse_spec, run_experiment};
use ghznet::ghz::{fuse_ghz_records, FusionOutcome, GhzRecord};
use ghznet::percolation::{
    connection_curve_over_p, connection_probability, critical_q, crossing_point,
    default_fraction_level, giant_component_fraction, newman_ziff_sweep, site_bond_curve_sim,
    Ensemble, Estimator, GRID_CONNECTION_LEVEL,
};
use ghznet::protocol::{estimate_rate, ProtocolConfig, RateEstimate, Variant};
use ghznet::qkd::{measure_share, run_qkd, sift_round, Basis, GhzShare, MeasuredRound};
use ghznet::topology::{DegreeDistribution, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

fn cfg(variant: Variant, p: f64, q: f64, trials: u64, seed: u64) -> ProtocolConfig {
    ProtocolConfig { variant, p, q, p_star: None, trials, seed }
}

/// Square grid with both consumers on the middle row, `d` columns apart,
/// centered horizontally.
fn mid_row_grid(side: u32, d: i32) -> Topology {
    let y = (side / 2) as i32;
    let xa = (side as i32 - d) / 2;
    Topology::square_grid(side, side, (xa, y), (xa + d, y)).unwrap()
}

/// Weighted least-squares line fit with known per-point standard deviations.
/// Returns (slope, standard error of the slope).
fn wls_slope(xs: &[f64], ys: &[f64], sigmas: &[f64]) -> (f64, f64) {
    let w: Vec<f64> = sigmas.iter().map(|s| 1.0 / (s * s)).collect();
    let sw: f64 = w.iter().sum();
    let xbar = xs.iter().zip(&w).map(|(x, wi)| x * wi).sum::<f64>() / sw;
    let ybar = ys.iter().zip(&w).map(|(y, wi)| y * wi).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(&w).map(|(x, wi)| wi * (x - xbar) * (x - xbar)).sum();
    let sxy: f64 =
        xs.iter().zip(ys).zip(&w).map(|((x, y), wi)| wi * (x - xbar) * (y - ybar)).sum();
    (sxy / sxx, (1.0 / sxx).sqrt())
}

// ---------------------------------------------------------------------------
// Criterion 1: 4-GHZ threshold on the square grid sits at the bond
// percolation point, p_c = 0.50 +/- 0.02, measured in under five minutes.
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_grid_threshold_4ghz() {
    let started = Instant::now();
    let topo = Topology::square_grid(100, 100, (25, 50), (75, 50)).unwrap();

    // With n >= degree and q = 1 every helper fuses all live links, so the
    // cycle reduces to bond percolation; the bond sweep measures the same
    // connection probability. Cross-check the reduction at one point.
    let sweep = newman_ziff_sweep(&topo, 1500, 41).unwrap();
    let protocol = cfg(Variant::Random { n: 4 }, 0.50, 1.0, 1200, 41);
    let (c_proto, c_se) = connection_probability(&topo, &protocol).unwrap();
    let c_sweep = sweep.connection_at(0.50);
    let sweep_se = (c_sweep * (1.0 - c_sweep) / 1500.0).sqrt();
    assert!(
        (c_proto - c_sweep).abs() <= 3.0 * c_se.hypot(sweep_se),
        "protocol connection {c_proto:.4} and bond sweep {c_sweep:.4} disagree"
    );

    let ps: Vec<f64> = (0..=40).map(|i| 0.46 + 0.0025 * i as f64).collect();
    let conn: Vec<f64> = ps.iter().map(|&p| sweep.connection_at(p)).collect();
    let pc = crossing_point(&ps, &conn, GRID_CONNECTION_LEVEL).expect("curve crosses the level");
    assert!((pc - 0.50).abs() <= 0.02, "4-GHZ threshold {pc:.4} outside 0.50 +/- 0.02");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 300, "threshold scan took {elapsed:?}, budget is 5 minutes");
    println!("criterion 01 (4-GHZ grid threshold): PASS  p_c = {pc:.4} in 0.50 +/- 0.02 ({elapsed:.2?})");
}

// ---------------------------------------------------------------------------
// Criterion 2: 3-GHZ threshold on the square grid, p_c = 0.53 +/- 0.02.
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_grid_threshold_3ghz() {
    let topo = Topology::square_grid(100, 100, (25, 50), (75, 50)).unwrap();
    let ps = [0.50, 0.52, 0.53, 0.54, 0.55, 0.56, 0.58];
    let curve =
        connection_curve_over_p(&topo, Variant::Random { n: 3 }, 1.0, &ps, 1200, 41).unwrap();
    let conn: Vec<f64> = curve.iter().map(|c| c.0).collect();
    let pc = crossing_point(&ps, &conn, GRID_CONNECTION_LEVEL).expect("curve crosses the level");
    assert!((pc - 0.53).abs() <= 0.02, "3-GHZ threshold {pc:.4} outside 0.53 +/- 0.02");
    println!("criterion 02 (3-GHZ grid threshold): PASS  p_c = {pc:.4} in 0.53 +/- 0.02");
}

// ---------------------------------------------------------------------------
// Criterion 3: above threshold the rate is distance independent; below it
// the log-rate falls linearly with distance.
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_distance_independence() {
    // p = 0.6 > p_c: rates at widely different separations agree.
    let seps = [10i32, 20, 40, 80];
    let ests: Vec<RateEstimate> = seps
        .iter()
        .map(|&d| {
            let topo = mid_row_grid(100, d);
            estimate_rate(&topo, &cfg(Variant::Random { n: 4 }, 0.6, 1.0, 3000, 17)).unwrap()
        })
        .collect();
    for i in 0..ests.len() {
        for j in i + 1..ests.len() {
            let diff = (ests[i].rate - ests[j].rate).abs();
            let tol = 3.0 * ests[i].stderr.hypot(ests[j].stderr);
            assert!(
                diff <= tol,
                "separations {} and {}: rates {:.4} vs {:.4} differ by {diff:.4} > {tol:.4}",
                seps[i],
                seps[j],
                ests[i].rate,
                ests[j].rate
            );
        }
    }

    // p = 0.4 < p_c: exponential decay, i.e. strongly negative log-rate slope.
    // Separations are shorter here so every point keeps a measurable rate.
    let sub = [4i32, 8, 12];
    let mut lns = Vec::new();
    let mut sigmas = Vec::new();
    for &d in &sub {
        let topo = mid_row_grid(100, d);
        let est = estimate_rate(&topo, &cfg(Variant::Random { n: 4 }, 0.4, 1.0, 6000, 17)).unwrap();
        assert!(est.rate > 0.0, "no events at separation {d}");
        lns.push(est.rate.ln());
        sigmas.push(est.stderr / est.rate);
    }
    let xs: Vec<f64> = sub.iter().map(|&d| d as f64).collect();
    let (slope, slope_se) = wls_slope(&xs, &lns, &sigmas);
    let t = slope / slope_se;
    assert!(t < -5.0, "subcritical log-rate slope {slope:.3} has t-statistic {t:.1} >= -5");
    println!(
        "criterion 03 (distance independence): PASS  p=0.6 rates {:?} agree; p=0.4 slope {slope:.3} (t = {t:.1})",
        ests.iter().map(|e| (e.rate * 1e3).round() / 1e3).collect::<Vec<_>>()
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: simulated critical fusion probability on constant-degree-4
// random graphs matches the generating-function solution within 0.05, and
// the n >= 4 closed form q_c = 1/(3p) holds exactly.
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_random_graph_critical_points() {
    let ctx = excess_distribution(&DegreeDistribution::constant(4)).unwrap();
    let seed = 23u64;
    let nodes = 10_000usize;
    let mut worst: f64 = 0.0;
    for p in [0.4f64, 0.55, 0.7, 0.85, 1.0] {
        let ensemble = Ensemble::Resampled(Box::new(move |trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x746f_706f);
            rng.set_stream(trial);
            Topology::configuration_graph(&DegreeDistribution::constant(4), nodes, &mut rng)
        }));
        let sim = critical_q(
            &ensemble,
            Variant::Random { n: 3 },
            p,
            Estimator::GiantFraction { level: default_fraction_level(nodes) },
            250,
            seed,
            1.0 / 128.0,
        )
        .unwrap()
        .expect("threshold exists on the constant-4 ensemble at this p");
        let exact = analytic_q_c(&ctx, 3, p).expect("analytic threshold exists");
        let diff = (sim.value - exact).abs();
        worst = worst.max(diff);
        assert!(diff <= 0.05, "p = {p}: simulated q_c {:.4} vs analytic {exact:.4}", sim.value);
    }
    // Closed form for n >= degree: every helper fuses everything, and the
    // threshold reduces to 1/(excess mean * p) = 1/(3p).
    for n in [4u32, 6] {
        for p in [0.4f64, 0.7, 1.0] {
            let qc = analytic_q_c(&ctx, n, p).unwrap();
            assert!(
                (qc - 1.0 / (3.0 * p)).abs() < 1e-12,
                "n = {n}, p = {p}: q_c {qc} differs from 1/(3p)"
            );
        }
    }
    println!("criterion 04 (random-graph critical points): PASS  max |sim - analytic| = {worst:.4} <= 0.05");
}

// ---------------------------------------------------------------------------
// Criterion 5: the simulated 3-GHZ site-bond boundary on the grid turns
// around (more links can hurt), deliberate thinning removes the turnaround,
// and the brickwork protocol's rate keeps rising where the random
// protocol's rate falls.
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_turnaround_thinning_brickwork() {
    // (a) Non-monotone critical boundary q_c(p).
    let grid = Topology::square_grid(30, 30, (7, 15), (22, 15)).unwrap();
    let pv: Vec<f64> = (0..9).map(|i| 0.6 + 0.05 * i as f64).collect();
    let curve = site_bond_curve_sim(
        &Ensemble::Fixed(&grid),
        Variant::Random { n: 3 },
        &pv,
        Estimator::Connection { level: GRID_CONNECTION_LEVEL },
        1200,
        5,
        1.0 / 256.0,
    )
    .unwrap();
    let pts: Vec<(f64, f64, f64)> = curve
        .iter()
        .map(|c| (c.p, c.q_c.expect("threshold exists across the scanned range"), c.uncertainty))
        .collect();
    let (imin, &(pmin, qmin, umin)) = pts
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .unwrap();
    let (p0, q0, u0) = pts[0];
    let (plast, qlast, ulast) = *pts.last().unwrap();
    assert!(imin > 0 && imin + 1 < pts.len(), "minimum must be interior, found at p = {pmin}");
    assert!(
        q0 - qmin > 3.0 * (u0 + umin),
        "boundary must fall first: q_c({p0}) = {q0:.4} vs q_c({pmin}) = {qmin:.4}"
    );
    assert!(
        qlast - qmin > 3.0 * (ulast + umin),
        "boundary must rise after its minimum: q_c({pmin}) = {qmin:.4} vs q_c({plast}) = {qlast:.4}"
    );

    // (b) Thinning to the best earlier link probability makes it monotone.
    let raw: Vec<(f64, Option<f64>)> = pts.iter().map(|&(p, q, _)| (p, Some(q))).collect();
    let thin = thinned_curve(&raw);
    for w in thin.windows(2) {
        let (a, b) = (w[0].1.unwrap(), w[1].1.unwrap());
        assert!(b <= a + 1e-12, "thinned boundary rose from {a} to {b}");
    }

    // (c) Brickwork rescue: at q = 0.85 the random 3-GHZ rate falls as
    // p -> 1 while the brickwork rate keeps climbing.
    let colored = Topology::square_grid(30, 30, (1, 1), (28, 28)).unwrap().brickwork_colored().unwrap();
    let ps = [0.85f64, 0.925, 1.0];
    let mut random = Vec::new();
    let mut brick = Vec::new();
    for &p in &ps {
        random.push(estimate_rate(&colored, &cfg(Variant::Random { n: 3 }, p, 0.85, 4000, 13)).unwrap());
        brick.push(estimate_rate(&colored, &cfg(Variant::Brickwork { n: 3 }, p, 0.85, 4000, 13)).unwrap());
    }
    let drop = random[0].rate - random[2].rate;
    assert!(
        drop > 3.0 * random[0].stderr.hypot(random[2].stderr),
        "random rate must fall over p in [0.85, 1]: {:.4} -> {:.4}",
        random[0].rate,
        random[2].rate
    );
    for i in 0..2 {
        let tol = 3.0 * brick[i].stderr.hypot(brick[i + 1].stderr);
        assert!(
            brick[i + 1].rate >= brick[i].rate - tol,
            "brickwork rate fell from {:.4} to {:.4} between p = {} and {}",
            brick[i].rate,
            brick[i + 1].rate,
            ps[i],
            ps[i + 1]
        );
    }
    println!(
        "criterion 05 (turnaround / thinning / brickwork): PASS  q_c {q0:.4} -> {qmin:.4} -> {qlast:.4}; random {:.3} -> {:.3}, brickwork {:.3} -> {:.3}",
        random[0].rate, random[2].rate, brick[0].rate, brick[2].rate
    );
}

// ---------------------------------------------------------------------------
// Criterion 6: Monte Carlo matches exact enumeration on small lattices for
// every protocol size at several (p, q) points, within 3 standard errors.
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_exact_vs_monte_carlo() {
    let mut worst: f64 = 0.0;
    for (w, h) in [(2u32, 2u32), (2, 3)] {
        let topo =
            Topology::square_grid(w, h, (0, 0), (w as i32 - 1, h as i32 - 1)).unwrap();
        for n in [2u32, 3, 4] {
            for p in [0.3f64, 0.7] {
                for q in [0.5f64, 1.0] {
                    let variant = Variant::Random { n };
                    let exact = exact_shared_expectation(&topo, variant, p, q).unwrap();
                    let est =
                        estimate_rate(&topo, &cfg(variant, p, q, 100_000, 29)).unwrap();
                    let z = (est.rate - exact) / est.stderr;
                    worst = worst.max(z.abs());
                    assert!(
                        z.abs() <= 3.0,
                        "{w}x{h} n={n} p={p} q={q}: MC {:.5} vs exact {exact:.5} is {z:.2} sigma",
                        est.rate
                    );
                }
            }
        }
    }
    println!("criterion 06 (exact vs Monte Carlo): PASS  worst |z| = {worst:.2} <= 3");
}

// ---------------------------------------------------------------------------
// Criterion 7: record-level fusion algebra agrees with a brute-force state
// vector simulation of GHZ projections and X measurements.
// ---------------------------------------------------------------------------

/// A pure state over the listed qubits; bit b of an amplitude index is the
/// computational-basis value of `qubits[b]`.
struct Pure {
    qubits: Vec<u32>,
    amps: Vec<f64>,
}

/// Tensor product of one GHZ state (|0..0> + |1..1>)/sqrt(2) per record.
/// A one-qubit record is (|0> + |1>)/sqrt(2): an unentangled but usable
/// qubit, exactly what survives X-measuring away its former partners.
fn ghz_product(records: &[GhzRecord]) -> Pure {
    let mut qubits: Vec<u32> = Vec::new();
    let mut amps = vec![1.0f64];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for rec in records {
        let lo = qubits.len();
        qubits.extend(rec.qubits());
        let ones = ((1usize << rec.size()) - 1) << lo;
        let mut next = vec![0.0; amps.len() << rec.size()];
        for (i, &a) in amps.iter().enumerate() {
            next[i] += a * s;
            next[i | ones] += a * s;
        }
        amps = next;
    }
    Pure { qubits, amps }
}

/// Projects the selected qubits onto (|0..0> + |1..1>)/sqrt(2) and removes
/// them: the success outcome of an n-GHZ measurement (for one qubit this is
/// an X measurement onto |+>), with the classical phase correction assumed.
fn project_out(state: &Pure, sel: &[u32]) -> Pure {
    let mask: usize = sel
        .iter()
        .map(|q| 1usize << state.qubits.iter().position(|x| x == q).expect("qubit present"))
        .sum();
    let keep: Vec<usize> = (0..state.qubits.len()).filter(|b| mask >> b & 1 == 0).collect();
    let mut amps = vec![0.0f64; 1 << keep.len()];
    for (idx, &a) in state.amps.iter().enumerate() {
        let sel_bits = idx & mask;
        if sel_bits != 0 && sel_bits != mask {
            continue; // overlaps neither |0..0> nor |1..1> on the selection
        }
        let mut out = 0usize;
        for (nb, &b) in keep.iter().enumerate() {
            out |= (idx >> b & 1) << nb;
        }
        amps[out] += a;
    }
    let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
    assert!(norm > 1e-9, "projection annihilated the state");
    for a in &mut amps {
        *a /= norm;
    }
    Pure { qubits: keep.iter().map(|&b| state.qubits[b]).collect(), amps }
}

/// Reads the entanglement partition off the state: qubits belong to the
/// same GHZ factor exactly when their ZZ correlator is +/-1, and every GHZ
/// marginal is maximally mixed (<Z> = 0). Independent of the record algebra.
fn z_partition(state: &Pure) -> BTreeSet<BTreeSet<u32>> {
    let nb = state.qubits.len();
    let probs: Vec<f64> = state.amps.iter().map(|a| a * a).collect();
    let sign = |x: usize, b: usize| if x >> b & 1 == 1 { -1.0 } else { 1.0 };
    for b in 0..nb {
        let m: f64 = probs.iter().enumerate().map(|(x, pr)| pr * sign(x, b)).sum();
        assert!(m.abs() < 1e-9, "qubit {} has polarized marginal {m}", state.qubits[b]);
    }
    fn find(parent: &mut Vec<usize>, mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    let mut parent: Vec<usize> = (0..nb).collect();
    for i in 0..nb {
        for j in i + 1..nb {
            let c: f64 =
                probs.iter().enumerate().map(|(x, pr)| pr * sign(x, i) * sign(x, j)).sum();
            assert!(
                c.abs() < 1e-9 || (c.abs() - 1.0).abs() < 1e-9,
                "ZZ correlator {c} is neither 0 nor +/-1"
            );
            if c.abs() > 0.5 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut clusters: BTreeMap<usize, BTreeSet<u32>> = BTreeMap::new();
    for b in 0..nb {
        clusters.entry(find(&mut parent, b)).or_default().insert(state.qubits[b]);
    }
    clusters.into_values().collect()
}

/// Partition implied by the record algebra: untouched records plus the
/// fusion outcome, empty records dropped.
fn expected_partition(
    records: &[GhzRecord],
    fused: &[u32],
    outcome: &FusionOutcome,
) -> BTreeSet<BTreeSet<u32>> {
    let mut parts: BTreeSet<BTreeSet<u32>> = records
        .iter()
        .filter(|r| !fused.iter().any(|&q| r.contains(q)))
        .map(|r| r.qubits().collect())
        .collect();
    match outcome {
        FusionOutcome::Success(m) => {
            if m.size() > 0 {
                parts.insert(m.qubits().collect());
            }
        }
        FusionOutcome::Failure(v) => {
            for r in v {
                parts.insert(r.qubits().collect());
            }
        }
    }
    parts
}

fn check_fusion_against_state_vector(
    records: &[GhzRecord],
    fused: &[u32],
    success: bool,
    label: &str,
) -> FusionOutcome {
    let outcome = fuse_ghz_records(records, fused, success).unwrap();
    let expected = expected_partition(records, fused, &outcome);
    let state = ghz_product(records);
    let post = if success {
        project_out(&state, fused)
    } else {
        fused.iter().fold(state, |s, &q| project_out(&s, &[q]))
    };
    let observed = z_partition(&post);
    assert_eq!(
        observed, expected,
        "{label}: state vector partition differs from record algebra (fused {fused:?}, success {success})"
    );
    outcome
}

#[test]
fn criterion_07_fusion_matches_state_vector() {
    // Worked instance: sizes {3, 3, 4}; success merges to 7, failure
    // shrinks each to {2, 2, 3}.
    let records =
        vec![GhzRecord::new(0u32..3), GhzRecord::new(3u32..6), GhzRecord::new(6u32..10)];
    let fused = [0u32, 3, 6];
    match check_fusion_against_state_vector(&records, &fused, true, "worked instance") {
        FusionOutcome::Success(m) => assert_eq!(m.size(), 7),
        other => panic!("expected success, got {other:?}"),
    }
    match check_fusion_against_state_vector(&records, &fused, false, "worked instance") {
        FusionOutcome::Failure(v) => {
            let mut sizes: Vec<usize> = v.iter().map(|r| r.size()).collect();
            sizes.sort_unstable();
            assert_eq!(sizes, vec![2, 2, 3]);
        }
        other => panic!("expected failure, got {other:?}"),
    }

    // 100 random instances with up to 10 qubits total.
    let mut rng = ChaCha8Rng::seed_from_u64(0x6f72_61636c);
    for case in 0..100 {
        let total = rng.random_range(2..=10usize);
        let mut sizes: Vec<usize> = Vec::new();
        let mut left = total;
        while left > 0 {
            let hi = if sizes.is_empty() { (left - 1).max(1) } else { left }.min(4);
            let s = rng.random_range(1..=hi);
            sizes.push(s);
            left -= s;
        }
        let mut records = Vec::new();
        let mut next = 0u32;
        for &s in &sizes {
            records.push(GhzRecord::new(next..next + s as u32));
            next += s as u32;
        }
        let k = rng.random_range(2..=sizes.len().min(5));
        let mut order: Vec<usize> = (0..records.len()).collect();
        for i in 0..k {
            let j = rng.random_range(i..order.len());
            order.swap(i, j);
        }
        let fused: Vec<u32> = order[..k]
            .iter()
            .map(|&ri| {
                let qs: Vec<u32> = records[ri].qubits().collect();
                qs[rng.random_range(0..qs.len())]
            })
            .collect();
        let success = rng.random::<bool>();
        check_fusion_against_state_vector(&records, &fused, success, &format!("case {case}"));
    }
    println!("criterion 07 (fusion vs state vector): PASS  worked instance + 100 random instances");
}

// ---------------------------------------------------------------------------
// Criterion 8: the bound chain capacity >= max-flow >= giant-component
// bound >= 4-GHZ rate >= 3-GHZ rate holds pointwise in p (within
// simulation error for the simulated quantities).
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_capacity_bound_chain() {
    let topo = Topology::square_grid(50, 50, (1, 1), (48, 48)).unwrap();
    for i in 0..7 {
        let p = 0.3 + 0.1 * i as f64;
        let capacity = ultimate_capacity(p).unwrap();
        let max_flow = max_flow_bound(p).unwrap();
        let (f, f_se) =
            giant_component_fraction(&topo, &cfg(Variant::Random { n: 4 }, p, 1.0, 1500, 31))
                .unwrap();
        let gcc = gcc_bound(f).unwrap();
        let gcc_se = 2.0 * f * f_se;
        let r4 = estimate_rate(&topo, &cfg(Variant::Random { n: 4 }, p, 1.0, 2500, 31)).unwrap();
        let r3 = estimate_rate(&topo, &cfg(Variant::Random { n: 3 }, p, 1.0, 2500, 31)).unwrap();
        // When every trial connects, the binomial stderr degenerates to 0
        // even though a proportion estimated as 1.0 from T trials still
        // carries a one-sided rule-of-three uncertainty of about 3/T.
        let resolution = 3.0 / r4.trials as f64;
        assert!(capacity >= max_flow - 1e-9, "p = {p}: capacity {capacity} < max-flow {max_flow}");
        assert!(
            max_flow >= gcc - 3.0 * gcc_se,
            "p = {p}: max-flow {max_flow:.4} < GCC bound {gcc:.4}"
        );
        assert!(
            r4.rate - gcc <= 3.0 * r4.stderr.hypot(gcc_se) + resolution,
            "p = {p}: 4-GHZ rate {:.4} exceeds GCC bound {gcc:.4}",
            r4.rate
        );
        assert!(
            r3.rate - r4.rate <= 3.0 * r3.stderr.hypot(r4.stderr) + resolution,
            "p = {p}: 3-GHZ rate {:.4} exceeds 4-GHZ rate {:.4}",
            r3.rate,
            r4.rate
        );
    }
    println!("criterion 08 (capacity bound chain): PASS  ordered at every scanned p");
}

// ---------------------------------------------------------------------------
// Criterion 9: Bell-measurement (n = 2) repeaters with lossy fusions show
// no distance independence: the rate decays at least as fast as q per hop
// and stays below the 4 F(p)^2 q^(d-1) ceiling.
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_bsm_rate_decays() {
    let q = 0.9f64;
    let dists = [2i32, 4, 6];
    let mut rates = Vec::new();
    let mut lns = Vec::new();
    let mut sigmas = Vec::new();
    for &d in &dists {
        let y = 20i32;
        let xa = (40 - d) / 2;
        let topo = Topology::square_grid(40, 40, (xa, y), (xa + d, y)).unwrap();
        let est = estimate_rate(&topo, &cfg(Variant::Random { n: 2 }, 1.0, q, 50_000, 11)).unwrap();
        assert!(est.rate > 0.0, "no events at separation {d}");
        // All links are alive at p = 1, so the link graph's giant fraction
        // is exactly 1 and the ceiling is 4 q^(d-1).
        let bound = bsm_rate_bound(1.0, q, d as u32).unwrap();
        assert!(est.rate < bound, "separation {d}: rate {:.5} >= ceiling {bound:.5}", est.rate);
        rates.push(est.rate);
        lns.push(est.rate.ln());
        sigmas.push(est.stderr / est.rate);
    }
    assert!(rates[0] > rates[1] && rates[1] > rates[2], "rates {rates:?} must decay");
    let xs: Vec<f64> = dists.iter().map(|&d| d as f64).collect();
    let (slope, slope_se) = wls_slope(&xs, &lns, &sigmas);
    assert!(
        slope <= q.ln() + 3.0 * slope_se,
        "log-rate slope {slope:.3} decays slower than ln q = {:.3}",
        q.ln()
    );
    println!(
        "criterion 09 (n=2 decay): PASS  slope {slope:.3} <= ln 0.9 = {:.3}; rates below 4 q^(d-1)",
        q.ln()
    );
}

// ---------------------------------------------------------------------------
// Criterion 10: key sifting. The seven worked rounds sift exactly as
// tabulated; random-basis sifting keeps half the rounds with identical,
// mismatch-free keys; and both-Hadamard outcomes follow the brute-force
// state-vector distribution (uniform over even-parity strings).
// ---------------------------------------------------------------------------

/// Exact outcome distribution of an (m + l)-qubit GHZ state measured in the
/// X basis on every qubit, by brute-force Hadamard transform of the state.
fn ghz_x_probs(k: usize) -> Vec<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![0.0f64; 1 << k];
    amps[0] = s;
    amps[(1 << k) - 1] = s;
    for b in 0..k {
        let step = 1usize << b;
        let mut base = 0;
        while base < amps.len() {
            for off in 0..step {
                let (i, j) = (base + off, base + off + step);
                let (x, y) = (amps[i], amps[j]);
                amps[i] = (x + y) * s;
                amps[j] = (x - y) * s;
            }
            base += step << 1;
        }
    }
    amps.iter().map(|a| a * a).collect()
}

#[test]
fn criterion_10_qkd_sifting() {
    use Basis::{Computational as Z, Hadamard as X};

    // (a) The seven worked rounds: kept keys 0, 0, -, 1, -, 1, -.
    let rows: [(Basis, &str, Basis, &str, Option<u8>); 7] = [
        (X, "1010", X, "0", Some(0)),
        (Z, "0", Z, "0", Some(0)),
        (X, "1101", Z, "11", None),
        (X, "100", X, "010", Some(1)),
        (Z, "1111", X, "01", None),
        (Z, "1", Z, "111", Some(1)),
        (Z, "00", X, "110", None),
    ];
    for (i, (ba, a, bb, b, want)) in rows.iter().enumerate() {
        let round = MeasuredRound {
            basis_a: *ba,
            basis_b: *bb,
            a_bits: a.bytes().map(|c| c - b'0').collect(),
            b_bits: b.bytes().map(|c| c - b'0').collect(),
        };
        let got = sift_round(&round).unwrap();
        assert_eq!(got, want.map(|k| (k, k)), "worked round {}", i + 1);
    }

    // (b) Random bases over 10^5 rounds: half survive, keys identical.
    let res = run_qkd(GhzShare::new(3, 2).unwrap(), 100_000, 47).unwrap();
    let sift = res.sift_rate();
    assert!((sift - 0.5).abs() <= 0.01, "sift rate {sift:.4} outside 0.5 +/- 0.01");
    assert_eq!(res.key_a, res.key_b, "sifted keys differ");
    assert_eq!(res.mismatches, 0);
    assert_eq!(res.key_a.len() as u64, res.sifted);

    // (c) Both-Hadamard outcome statistics vs the brute-force distribution,
    // for every split with at most 10 qubits.
    let mut worst_tv: f64 = 0.0;
    for m in 1usize..=9 {
        for l in 1..=(10 - m) {
            let k = m + l;
            let n = 100_000usize.max(5000usize << (k - 1));
            let mut rng = ChaCha8Rng::seed_from_u64(53);
            rng.set_stream((m * 16 + l) as u64);
            let share = GhzShare::new(m, l).unwrap();
            let mut counts = vec![0u64; 1 << k];
            for _ in 0..n {
                let r = measure_share(share, X, X, &mut rng);
                let mut idx = 0usize;
                for (i, &bit) in r.a_bits.iter().enumerate() {
                    idx |= (bit as usize) << i;
                }
                for (j, &bit) in r.b_bits.iter().enumerate() {
                    idx |= (bit as usize) << (m + j);
                }
                counts[idx] += 1;
            }
            let probs = ghz_x_probs(k);
            let tv = 0.5
                * counts
                    .iter()
                    .zip(&probs)
                    .map(|(&c, &pr)| (c as f64 / n as f64 - pr).abs())
                    .sum::<f64>();
            worst_tv = worst_tv.max(tv);
            assert!(tv < 0.01, "m = {m}, l = {l}: total variation {tv:.4} >= 0.01");
        }
    }
    println!(
        "criterion 10 (key sifting): PASS  sift rate {sift:.4}, keys identical, worst TV {worst_tv:.4}"
    );
}

// ---------------------------------------------------------------------------
// Criterion 11: dividing the network into four strips multiplies the
// saturated rate: exactly 4 shared states per cycle at p = q = 1, against
// exactly 1 without the division.
// ---------------------------------------------------------------------------

#[test]
fn criterion_11_network_division() {
    let whole = Topology::square_grid(16, 16, (1, 8), (14, 8)).unwrap();
    let divided = whole.divided().unwrap();
    let saturated = cfg(Variant::Random { n: 4 }, 1.0, 1.0, 200, 3);
    let one = estimate_rate(&whole, &saturated).unwrap();
    let four = estimate_rate(&divided, &saturated).unwrap();
    assert_eq!(one.rate, 1.0, "undivided saturated rate must be exactly 1");
    assert_eq!(one.stderr, 0.0);
    assert_eq!(four.rate, 4.0, "divided saturated rate must be exactly 4");
    assert_eq!(four.stderr, 0.0);
    assert_eq!(four.count_hist, vec![0, 0, 0, 0, 200], "every cycle must yield exactly 4");
    println!("criterion 11 (network division): PASS  rate 1.0 -> 4.0 at p = q = 1, zero variance");
}

// ---------------------------------------------------------------------------
// Criterion 12: experiment outputs are byte-identical across re-runs and
// across thread counts.
// ---------------------------------------------------------------------------

#[test]
fn criterion_12_deterministic_outputs() {
    let config = "\
[experiment]
kind = rate-vs-p
seed = 9
trials = 3000

[topology]
type = grid
width = 12
height = 12
consumer_a = 1,1
consumer_b = 10,10

[protocol]
variant = random
n = 3
q = 0.8

[sweep]
p_values = 0.4,0.6,0.8
";
    let spec = parse_spec(config, None).unwrap();
    let base = std::env::temp_dir().join(format!("ghznet-acceptance-{}", std::process::id()));
    let run_with_pool = |threads: Option<usize>, sub: &str| -> Vec<u8> {
        let dir = base.join(sub);
        let out = match threads {
            None => run_experiment(&spec, &dir).unwrap(),
            Some(t) => {
                let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
                pool.install(|| run_experiment(&spec, &dir)).unwrap()
            }
        };
        assert_eq!(out.files.len(), 1);
        std::fs::read(&out.files[0]).unwrap()
    };
    let first = run_with_pool(None, "a");
    assert_eq!(first, run_with_pool(None, "b"), "re-run changed the output bytes");
    assert_eq!(first, run_with_pool(Some(1), "t1"), "1-thread run changed the output bytes");
    assert_eq!(first, run_with_pool(Some(3), "t3"), "3-thread run changed the output bytes");
    assert!(!first.is_empty());
    std::fs::remove_dir_all(&base).ok();
    println!("criterion 12 (deterministic outputs): PASS  byte-identical across re-runs and 1/3 threads");
}
