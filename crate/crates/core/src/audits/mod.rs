//! Structural audits of rules and preferences.

mod canonical;
mod intersectionality;
mod substitutes;

pub use canonical::*;
pub use intersectionality::*;
pub use substitutes::*;
