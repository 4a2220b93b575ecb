//! The Boettcher function G(s) = lim j0^-n log f_n(s) and the decay bound on f_n.
use gwlimits::asymptotics::{boettcher_decay, boettcher_g, boettcher_g_iterate, G_TOLERANCE};
use gwlimits::OffspringLaw;

fn main() -> gwlimits::Result<()> {
    let law = OffspringLaw::from_sparse("2:0.5,3:0.5")?;
    for s in [0.1, 0.3, 0.6, 0.9] {
        let g = boettcher_g(&law, s, G_TOLERANCE)?;
        let it = boettcher_g_iterate(&law, 20, s);
        println!("s = {s}: G = {:.10} ({} terms)  iterate = {it:.10}", g.value, g.terms_used);
    }
    for d in boettcher_decay(&law, 0.5, 3, 4..=8)? {
        println!("n = {}  log f_n(1/2) = {:.3}  bound {:.3}  {}", d.n, d.log_fn, d.log_bound, d.holds());
    }
    Ok(())
}
