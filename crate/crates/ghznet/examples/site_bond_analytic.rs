//! Analytic site-bond critical curves from generating functions, for random
//! graphs with constant and Poisson degree distributions.

use ghznet::analytics::{analytic_curve, analytic_q_c, excess_distribution};
use ghznet::topology::DegreeDistribution;

fn main() -> ghznet::Result<()> {
    let p_values: Vec<f64> = (0..=12).map(|i| 0.3 + 0.05 * i as f64 + 0.1).collect();

    let const4 = excess_distribution(&DegreeDistribution::constant(4))?;
    let pois5 = excess_distribution(&DegreeDistribution::poisson(5.0, None)?)?;

    println!("Critical fusion probability q_c(p) for 3-GHZ fusions\n");
    println!("{:>6} {:>14} {:>14}", "p", "constant d=4", "poisson l=5");
    let c3 = analytic_curve(&const4, 3, &p_values);
    let p3 = analytic_curve(&pois5, 3, &p_values);
    for ((p, a), (_, b)) in c3.iter().zip(&p3) {
        let fmt = |v: &Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        println!("{p:>6.2} {:>14} {:>14}", fmt(a), fmt(b));
    }

    println!("\nWith n >= degree the constant-degree-4 curve is exactly 1/(3p):");
    for &p in &[0.4, 0.6, 0.8, 1.0] {
        let qc = analytic_q_c(&const4, 4, p);
        println!("  q_c({p:.1}) = {}  (1/(3p) = {:.6})", qc.map(|x| format!("{x:.6}")).unwrap_or("-".into()), 1.0 / (3.0 * p));
    }
    Ok(())
}
