//! Constants and regimes of the standard test laws.
use gwlimits::{classify, OffspringLaw};

fn main() -> gwlimits::Result<()> {
    let laws = [
        ("L_sub", "1:0.6,3:0.4"),
        ("L_crit", "1:0.5,3:0.5"),
        ("L_sup", "1:0.5,2:0.5"),
        ("L_bot", "2:0.5,3:0.5"),
        ("L_q", "0:0.25,2:0.75"),
    ];
    println!("{:<7} {:>6} {:>8} {:>8} {:>9} {:>3}  regime", "law", "m", "q", "gamma", "alpha", "j0");
    for (name, spec) in laws {
        let c = classify(&OffspringLaw::from_sparse(spec)?);
        println!("{name:<7} {:>6.3} {:>8.5} {:>8.5} {:>9.5} {:>3}  {}", c.m, c.q, c.gamma, c.alpha, c.j0, c.regime);
    }
    Ok(())
}
