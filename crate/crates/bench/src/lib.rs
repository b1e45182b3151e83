//! Shared inputs for the criterion benchmarks.

use bmop::specfun::Params;

/// The two reference parameter sets.
pub fn presets() -> [(&'static str, Params); 2] {
    [("S0", Params::preset("S0").unwrap()), ("S1", Params::preset("S1").unwrap())]
}
