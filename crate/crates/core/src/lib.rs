//! Discrete potential theory on electrical networks carried by weighted
//! Bratteli diagrams.

pub mod closed_form;
pub mod dense;
pub mod diagram;
pub mod energy;
pub mod error;
pub mod function;
pub mod graph;
pub mod harmonic;
pub mod levelsys;
pub mod operators;
pub mod pathspace;
pub mod sparse;
pub mod verify;

pub use diagram::{Diagram, VertexId};
pub use error::{Error, Result};
pub use function::LevelFunction;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/diagrams.md")]
    mod diagrams {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/harmonic.md")]
    mod harmonic {}
    #[doc = include_str!("../../../book/src/pathspace.md")]
    mod pathspace {}
    #[doc = include_str!("../../../book/src/energy.md")]
    mod energy {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
