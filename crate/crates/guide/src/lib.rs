//! The chapters of `book/` compiled as documentation so that every Rust
//! snippet in the guide runs under `cargo test`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/chain-plants.md")]
pub mod chain_plants {}

#[doc = include_str!("../../../book/src/pendulum-model.md")]
pub mod pendulum_model {}

#[doc = include_str!("../../../book/src/pole-placement.md")]
pub mod pole_placement {}

#[doc = include_str!("../../../book/src/boundedness.md")]
pub mod boundedness {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
