//! Laplace transform and cumulant of the martingale limit W.
use gwlimits::asymptotics::{w_laplace, w_second_moment, W_LAPLACE_LEVELS};
use gwlimits::ldp::{w_cumulant, w_legendre};
use gwlimits::OffspringLaw;

fn main() -> gwlimits::Result<()> {
    let law = OffspringLaw::from_sparse("1:0.5,2:0.5")?;
    let m = law.mean();
    println!("E W^2 = {}", w_second_moment(&law));
    for u in [0.5, 1.0, 2.0, 8.0] {
        let phi = w_laplace(&law, u, W_LAPLACE_LEVELS)?;
        let abel = w_laplace(&law, m * u, W_LAPLACE_LEVELS)? - law.poly(phi);
        println!("phi({u}) = {phi:.10}  Abel residual {abel:.1e}");
    }
    for theta in [-2.0, -0.5, 0.5, 1.0] {
        println!("Lambda_W({theta}) = {:.6}", w_cumulant(&law, theta));
    }
    for x in [0.5, 1.0, 1.5, 2.0] {
        println!("Lambda_W*({x}) = {:.6}", w_legendre(&law, x));
    }
    Ok(())
}
