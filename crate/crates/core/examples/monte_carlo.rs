//! Seeded Monte Carlo estimate of P(R_n > a) against the exact value.
use gwlimits::montecarlo::{estimate_rn_tail_curve, exact_rn_tail, SimConfig};
use gwlimits::OffspringLaw;

fn main() -> gwlimits::Result<()> {
    let law = OffspringLaw::from_sparse("1:0.5,2:0.5")?;
    let a = 1.8;
    let cfg = SimConfig::new(42, 200_000, 10);
    let curve = estimate_rn_tail_curve(&law, 1, 10, a, &cfg)?;
    for (i, e) in curve.iter().enumerate() {
        let n = i as u32 + 1;
        println!("n = {n:>2}  mc = {:.5} +- {:.5}  exact = {:.5}", e.value, e.stderr, exact_rn_tail(&law, n, a)?);
    }
    Ok(())
}
