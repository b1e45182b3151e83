//! Scalar special functions: Gamma, Pochhammer, hypergeometric sums, the
//! modified Bessel functions and the scaled weights omega and rho.

pub mod bessel;
pub mod bessel_mp;
pub mod gamma;
pub mod hyper;
mod logvalue;
mod params;

pub use bessel::{bessel_i, bessel_k, bessel_k_sequence, omega, omega_at_zero, omega_sequence, omega_small_x, rho, rho_at_zero, rho_sequence};
pub use bessel_mp::{omega_mp, omega_sequence_mp, rho_mp, rho_sequence_mp};
pub use gamma::{binomial, gamma_complex, ln_gamma_complex, log_gamma_ratio, pochhammer};
pub use hyper::{hyp_terminating, Hypergeometric};
pub use logvalue::{LogValue, Sign};
pub use params::{Params, PrecisionConfig, PrecisionMode};
