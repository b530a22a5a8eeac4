//! Simulation and verification toolkit for the k-cycle communication game
//! played over higher-order quantum processes.

pub mod choi;
pub mod circuit;
pub mod error;
pub mod game;
pub mod labels;
pub mod polytope;
pub mod process;
pub mod suite;
pub mod tensor;

pub use error::{Error, Result};

// The guide's code blocks run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/tensors.md")]
    mod tensors {}
    #[doc = include_str!("../../../book/src/choi.md")]
    mod choi {}
    #[doc = include_str!("../../../book/src/processes.md")]
    mod processes {}
    #[doc = include_str!("../../../book/src/game.md")]
    mod game {}
    #[doc = include_str!("../../../book/src/polytope.md")]
    mod polytope {}
    #[doc = include_str!("../../../book/src/circuit.md")]
    mod circuit {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
