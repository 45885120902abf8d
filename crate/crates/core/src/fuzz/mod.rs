//! Random expressions and the differential checker that runs every engine
//! against simulation.

mod check;
mod gen;

pub use check::{longest_prefix_oracle, regex_at, run_fuzz, Divergence, FuzzConfig, FuzzReport, Mutation};
pub use gen::{all_strings, matching_input, random_regex, GenLimits};
