use serde::Serialize;

use crate::error::{Error, Result};

/// The quadruple (mu, nu, a, b) that fixes the weights and the polynomial family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Params {
    mu: f64,
    nu: f64,
    a: f64,
    b: f64,
}

impl Params {
    /// Validates `mu > -1`, `nu > 0` and `b > a > 0`.
    pub fn new(mu: f64, nu: f64, a: f64, b: f64) -> Result<Self> {
        if ![mu, nu, a, b].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if mu <= -1.0 {
            return Err(Error::InvalidParams(format!("mu = {mu} violates mu > -1")));
        }
        if nu <= 0.0 {
            return Err(Error::InvalidParams(format!("nu = {nu} violates nu > 0")));
        }
        if !(a > 0.0 && b > a) {
            return Err(Error::InvalidParams(format!("(a, b) = ({a}, {b}) violates b > a > 0")));
        }
        Ok(Params { mu, nu, a, b })
    }

    /// Named reference sets: `S0` = (0.5, 1.5, 1, 2), `S1` = (0, 1, 0.8, 1.6).
    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "S0" => Some(Params { mu: 0.5, nu: 1.5, a: 1.0, b: 2.0 }),
            "S1" => Some(Params { mu: 0.0, nu: 1.0, a: 0.8, b: 1.6 }),
            _ => None,
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }

    /// mu + nu
    pub fn sigma(&self) -> f64 {
        self.mu + self.nu
    }

    /// b^2 - a^2
    pub fn gap(&self) -> f64 {
        self.b * self.b - self.a * self.a
    }

    /// Exponential decay rate in sqrt(x) of products omega * rho, namely 2(b - a).
    pub fn decay_rate(&self) -> f64 {
        2.0 * (self.b - self.a)
    }

    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Params::new(mu, self.nu, self.a, self.b)
    }

    pub fn with_nu(&self, nu: f64) -> Result<Self> {
        Params::new(self.mu, nu, self.a, self.b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionMode {
    Double,
    Extended,
}

/// Arithmetic used by the evaluators.
///
/// In double mode an alternating sum whose condition estimate exceeds
/// [`PrecisionConfig::ESCALATE_ABOVE`] is recomputed in extended arithmetic when
/// `auto_escalate` is set, and fails with `PrecisionLoss` above
/// [`PrecisionConfig::LOSS_LIMIT`] otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrecisionConfig {
    pub mode: PrecisionMode,
    pub mantissa_bits: u32,
    pub sum_compensation: bool,
    pub auto_escalate: bool,
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        PrecisionConfig { mode: PrecisionMode::Double, mantissa_bits: 256, sum_compensation: true, auto_escalate: true }
    }
}

impl PrecisionConfig {
    pub const ESCALATE_ABOVE: f64 = 1e5;
    pub const LOSS_LIMIT: f64 = 1e12;
    /// Degree above which sums always run in extended arithmetic.
    pub const DOUBLE_DEGREE_CAP: usize = 30;

    pub fn double() -> Self {
        Self::default()
    }

    pub fn extended(bits: u32) -> Result<Self> {
        if bits < 64 {
            return Err(Error::InvalidParams(format!("mantissa_bits = {bits} must be at least 64")));
        }
        Ok(PrecisionConfig { mode: PrecisionMode::Extended, mantissa_bits: bits, ..Self::default() })
    }

    /// Parses `double` or `extended:<bits>`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("double") {
            return Ok(Self::double());
        }
        if let Some(bits) = s.strip_prefix("extended:") {
            let bits: u32 = bits.parse().map_err(|_| Error::InvalidParams(format!("bad mantissa width in '{s}'")))?;
            return Self::extended(bits);
        }
        if s == "extended" {
            return Self::extended(256);
        }
        Err(Error::InvalidParams(format!("unknown precision '{s}', expected double or extended:<bits>")))
    }

    /// Whether a double-mode sum of degree `n` with condition `cond` must be
    /// redone in extended arithmetic; errors when escalation is disabled and
    /// the loss is past the limit.
    pub fn escalate(&self, n: usize, cond: f64) -> Result<bool> {
        if self.is_extended() {
            return Ok(true);
        }
        let hard = !(cond <= Self::LOSS_LIMIT);
        if !(cond <= Self::ESCALATE_ABOVE) || n > Self::DOUBLE_DEGREE_CAP {
            if self.auto_escalate {
                return Ok(true);
            }
            if hard {
                return Err(Error::PrecisionLoss { condition: cond, limit: Self::LOSS_LIMIT });
            }
        }
        Ok(false)
    }

    pub fn is_extended(&self) -> bool {
        self.mode == PrecisionMode::Extended
    }

    /// Working precision for extended evaluation.
    pub fn bits(&self) -> u32 {
        self.mantissa_bits.max(64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraints_rejected() {
        assert!(Params::new(-1.0, 1.0, 1.0, 2.0).is_err());
        assert!(Params::new(0.0, 0.0, 1.0, 2.0).is_err());
        assert!(Params::new(0.0, 1.0, 2.0, 1.0).is_err());
        assert!(Params::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(Params::new(-0.5, 0.1, 0.1, 0.2).is_ok());
    }

    #[test]
    fn presets() {
        let s0 = Params::preset("S0").unwrap();
        assert_eq!((s0.mu(), s0.nu(), s0.a(), s0.b()), (0.5, 1.5, 1.0, 2.0));
        let s1 = Params::preset("s1").unwrap();
        assert_eq!((s1.mu(), s1.nu(), s1.a(), s1.b()), (0.0, 1.0, 0.8, 1.6));
        assert!(Params::preset("S2").is_none());
    }

    #[test]
    fn precision_parse() {
        assert_eq!(PrecisionConfig::parse("double").unwrap().mode, PrecisionMode::Double);
        let e = PrecisionConfig::parse("extended:320").unwrap();
        assert!(e.is_extended() && e.mantissa_bits == 320);
        assert!(PrecisionConfig::parse("extended:32").is_err());
        assert!(PrecisionConfig::parse("quad").is_err());
    }
}
