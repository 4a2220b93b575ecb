//! Q(s) = lim gamma^-n (f_n(s) - q) and its functional equation Q(f(s)) = gamma Q(s).
use gwlimits::asymptotics::{q_coefficients, q_limit, Q_MAX_ITERATIONS, Q_TOLERANCE};
use gwlimits::{classify, OffspringLaw};

fn main() -> gwlimits::Result<()> {
    let law = OffspringLaw::from_sparse("0:0.25,2:0.75")?;
    let gamma = classify(&law).gamma;
    for s in [0.0, 0.2, 0.5, 0.8, 0.95] {
        let q = q_limit(&law, s, Q_TOLERANCE, Q_MAX_ITERATIONS)?;
        let qf = q_limit(&law, law.poly(s), Q_TOLERANCE, Q_MAX_ITERATIONS)?;
        println!("s = {s:.2}  Q = {:+.8}  Q(f(s)) - gamma Q(s) = {:+.1e}  ({} steps)", q.value, qf.value - gamma * q.value, q.n_used);
    }

    let sup = OffspringLaw::from_sparse("1:0.5,2:0.5")?;
    let c = q_coefficients(&sup, 8, 40)?;
    println!("L_sup q_1..q_8: {:?}", c.coeffs);
    Ok(())
}
