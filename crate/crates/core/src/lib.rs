pub mod compile;
pub mod determinize;
pub mod dump;
pub mod error;
pub mod fuzz;
pub mod multipass;
pub mod optimizer;
pub mod resyntax;
pub mod runtime;
pub mod tnfa;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/tags.md")]
    mod tags {}
    #[doc = include_str!("../../../book/src/automata.md")]
    mod automata {}
    #[doc = include_str!("../../../book/src/optimizations.md")]
    mod optimizations {}
    #[doc = include_str!("../../../book/src/multipass.md")]
    mod multipass {}
    #[doc = include_str!("../../../book/src/longest_prefix.md")]
    mod longest_prefix {}
    #[doc = include_str!("../../../book/src/fuzzing.md")]
    mod fuzzing {}
}
