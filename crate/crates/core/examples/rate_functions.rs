//! Cramer rate of the offspring law and the conditional rates built on it.
use gwlimits::ldp::{legendre, legendre_point, rate_table, Growth, RateKind, RateRegime, TableRegime};
use gwlimits::{classify, OffspringLaw};

fn main() -> gwlimits::Result<()> {
    let law = OffspringLaw::from_sparse("1:0.5,2:0.5")?;
    let cls = classify(&law);
    for x in [1.0, 1.25, 1.5, 1.8, 2.0] {
        let p = legendre_point(&law, x);
        println!("Lambda*({x}) = {:.6}  theta = {:.4}", p.value, p.theta);
    }
    println!("at the ends: {} {}", legendre(&law, 1.0), -0.5f64.ln());

    let xs: Vec<f64> = (0..=5).map(|i| 1.5 + 0.1 * i as f64).collect();
    for growth in [Growth::Linear { b: 0.5 }, Growth::Superlinear, Growth::Sublinear] {
        let regime = TableRegime::Schroeder(RateRegime::new(&cls, 1, growth)?);
        let t = rate_table(&law, RateKind::Offspring, regime, &xs, None)?;
        let rates: Vec<String> = t.rates.iter().map(|r| format!("{r:.4}")).collect();
        println!("{growth:?}: {}", rates.join(" "));
    }
    Ok(())
}
