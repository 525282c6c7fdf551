//! Finite-dimensional operators, entropic functionals, quantum channels and
//! finite-window diagnostics for dominated-convergence statements about
//! sequences of entropic functionals.

pub mod channel;
pub mod diagnostics;
pub mod dini;
pub mod entropy;
pub mod error;
pub mod exec;
pub mod extended;
pub mod operator;
pub mod random;

pub use channel::{Channel, ChannelSequence};
pub use error::{Error, Result};
pub use exec::Execution;
pub use extended::ExtendedReal;
