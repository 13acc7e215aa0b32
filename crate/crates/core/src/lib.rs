//! Build a labeled property graph from SNOMED CT RF2 releases, derive
//! knowledge-injected dialogue datasets from it, and evaluate fused outputs.

pub mod rf2;
pub mod parser;
pub mod retry;
pub mod snowstorm;
pub mod graph;
pub mod validator;
pub mod paths;
pub mod dataset;
pub mod fusion;
pub mod fixture;
pub mod pipeline;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/rf2.md")]
    struct Rf2;
    #[doc = include_str!("../../../book/src/graph.md")]
    struct Graph;
    #[doc = include_str!("../../../book/src/validation.md")]
    struct Validation;
    #[doc = include_str!("../../../book/src/paths.md")]
    struct Paths;
    #[doc = include_str!("../../../book/src/dataset.md")]
    struct Dataset;
    #[doc = include_str!("../../../book/src/fusion.md")]
    struct Fusion;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
