//! Exact pmf of Z_n two ways: truncated composition and DFT inversion.
use gwlimits::gen_dist::{zn_pmf_compose, zn_pmf_dft};
use gwlimits::OffspringLaw;

fn main() -> gwlimits::Result<()> {
    let law = OffspringLaw::from_sparse("1:0.5,2:0.5")?;

    let z2 = zn_pmf_compose(&law, 2, 8)?;
    println!("Z_2: {:?}", &z2.coeffs[..5]);

    let n = 10;
    let cap = 1 << 10;
    let a = zn_pmf_compose(&law, n, cap)?;
    let b = zn_pmf_dft(&law, n, 2 * cap)?;
    let diff = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    println!("n = {n}: max |compose - dft| = {diff:.2e}, mean {:.4} (m^n = {:.4})", a.truncated_mean(), 1.5f64.powi(n as i32));
    Ok(())
}
