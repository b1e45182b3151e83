pub mod asymptotics;
pub mod bigfloat;
pub mod error;
pub mod lommel;
pub mod mellin;
pub mod mopoly;
pub mod quad;
pub mod recurrence;
pub mod rmt;
pub mod specfun;
pub mod sum;
pub mod verify;

pub use error::{Error, Result};
