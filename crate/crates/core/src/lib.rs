//! Spectral-domain graph signal processing for heterogeneous change detection.

pub mod detect;
pub mod error;
pub mod graph;
pub mod imaging;
pub mod io;
pub mod pipeline;
pub mod regression;
pub mod sparse;
pub mod spectral;
pub mod synth;

pub use error::{Error, Result};
pub use faer;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graph.md")]
    mod graph {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/regression.md")]
    mod regression {}
    #[doc = include_str!("../../../book/src/detection.md")]
    mod detection {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
