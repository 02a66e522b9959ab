//! Doc-tests for the guide. Each chapter of `book/src` is compiled as the
//! docs of an empty module so `cargo test` runs its snippets.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/numbers.md")]
pub mod numbers {}
#[doc = include_str!("../../../book/src/bases.md")]
pub mod bases {}
#[doc = include_str!("../../../book/src/objectives.md")]
pub mod objectives {}
#[doc = include_str!("../../../book/src/augmentation.md")]
pub mod augmentation {}
#[doc = include_str!("../../../book/src/nfold.md")]
pub mod nfold {}
#[doc = include_str!("../../../book/src/twostage.md")]
pub mod twostage {}
#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}
#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
