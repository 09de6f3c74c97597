//! Supermartingale certificates for almost-sure Streett and parity
//! properties of probabilistic programs.
//!
//! The crate checks and synthesises certificates over probabilistic
//! control-flow graphs ([`model::Pcfg`]) with a priority partition, and
//! cross-validates them against exact analyses of finite Markov chains
//! ([`oracle`]).

pub mod certificates;
pub mod lexorder;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod poly;
pub mod pqe;
pub mod rational;
pub mod synthesis;
