//! The guide's chapters as modules, so `cargo test` runs their code listings.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/corpus.md")]
pub mod corpus {}
#[doc = include_str!("../../../book/src/summarizer.md")]
pub mod summarizer {}
#[doc = include_str!("../../../book/src/wording.md")]
pub mod wording {}
#[doc = include_str!("../../../book/src/psych.md")]
pub mod psych {}
#[doc = include_str!("../../../book/src/themes.md")]
pub mod themes {}
#[doc = include_str!("../../../book/src/statistics.md")]
pub mod statistics {}
#[doc = include_str!("../../../book/src/portrait.md")]
pub mod portrait {}
#[doc = include_str!("../../../book/src/running.md")]
pub mod running {}
