//! P(Z_n = v_n) / A_n for the three Schroeder regimes.
use gwlimits::asymptotics::{local_limit_sequence, VRule};
use gwlimits::OffspringLaw;

fn main() -> gwlimits::Result<()> {
    for spec in ["1:0.6,3:0.4", "1:0.5,3:0.5", "1:0.5,2:0.5"] {
        let law = OffspringLaw::from_sparse(spec)?;
        let seq = local_limit_sequence(&law, 6..=14, VRule::Sqrt)?;
        println!("{spec} ({})", seq.regime);
        for e in &seq.entries {
            println!("  n = {:>2}  v = {:>4}  P = {:.4e}  ratio = {:.5}", e.n, e.v, e.prob, e.ratio);
        }
        println!("  max/min ratio {:.3}", seq.band());
    }
    Ok(())
}
