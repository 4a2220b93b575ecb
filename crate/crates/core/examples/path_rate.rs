//! Rate of a piecewise-linear path t -> phi(t) for the partial-sum process.
use gwlimits::ldp::{path_rate, Growth, PiecewiseLinearPath, RateRegime};
use gwlimits::{classify, OffspringLaw};

fn main() -> gwlimits::Result<()> {
    let law = OffspringLaw::from_sparse("1:0.5,2:0.5")?;
    let cls = classify(&law);
    let regime = RateRegime::new(&cls, 1, Growth::Linear { b: 0.0 })?;
    for spec in ["0:0,1:1.5", "0:0,1:1.8", "0:0,0.5:0.5,1:1.8", "0:0,0.5:1,1:1.8", "0:0.1,1:1.8"] {
        let path = PiecewiseLinearPath::parse(spec)?;
        println!("{spec:<20} {:.6}", path_rate(&law, &cls, &regime, &path)?);
    }
    Ok(())
}
