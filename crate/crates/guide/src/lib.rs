//! The user guide's code snippets, compiled and run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}
#[doc = include_str!("../../../book/src/baths.md")]
pub mod baths {}
#[doc = include_str!("../../../book/src/heom.md")]
pub mod heom {}
#[doc = include_str!("../../../book/src/rcm.md")]
pub mod rcm {}
#[doc = include_str!("../../../book/src/observables.md")]
pub mod observables {}
#[doc = include_str!("../../../book/src/steady-state.md")]
pub mod steady_state {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
