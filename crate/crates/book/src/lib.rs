//! Guide chapters compiled as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/signals.md")]
pub mod signals {}

#[doc = include_str!("../../../book/src/losses.md")]
pub mod losses {}

#[doc = include_str!("../../../book/src/privatize.md")]
pub mod privatize {}

#[doc = include_str!("../../../book/src/privacy.md")]
pub mod privacy {}

#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}
