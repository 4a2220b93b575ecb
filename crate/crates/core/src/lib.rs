// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod gen_dist;
pub mod ldp;
pub mod montecarlo;
pub mod offspring;
pub mod series;
pub mod verify;

pub use error::{Error, Result};
pub use offspring::{classify, Classification, OffspringLaw, Regime};
