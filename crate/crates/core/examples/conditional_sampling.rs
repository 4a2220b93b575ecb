//! Law of Z_n given Z_{n-k} >= v by rejection sampling, against the exact one.
use gwlimits::gen_dist::conditional_pmf;
use gwlimits::montecarlo::{conditional_pmf_empirical, empirical_ak, total_variation, SimConfig};
use gwlimits::OffspringLaw;

fn main() -> gwlimits::Result<()> {
    let law = OffspringLaw::from_sparse("1:0.5,2:0.5")?;
    let (n, k, v) = (8, 2, 4);
    let cfg = SimConfig::new(7, 200_000, n);
    let emp = conditional_pmf_empirical(&law, k, v, &cfg)?;
    let exact = conditional_pmf(&law, n, k, v as usize, 256)?;
    println!("TV distance {:.4} over {} accepted samples", total_variation(&emp.probs, &exact.coeffs), emp.samples);

    // how many families carry R_n above a
    let ak = empirical_ak(&law, 1.8, &SimConfig::new(7, 100_000, 10))?;
    println!("A_k median {} from {} samples", ak.median(), ak.samples);
    Ok(())
}
