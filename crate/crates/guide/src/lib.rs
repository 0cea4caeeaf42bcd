//! Book chapters compiled as doc tests, one module per chapter so a failure names its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/language.md")]
pub mod language {}
#[doc = include_str!("../../../book/src/passive.md")]
pub mod passive {}
#[doc = include_str!("../../../book/src/inference.md")]
pub mod inference {}
#[doc = include_str!("../../../book/src/far.md")]
pub mod far {}
#[doc = include_str!("../../../book/src/contracts.md")]
pub mod contracts {}
#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
