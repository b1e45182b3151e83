//! Compensated summation and the condition estimate sum|t| / |sum t|.

use crate::bigfloat::BigFloat;
use crate::specfun::{LogValue, PrecisionConfig};
use crate::{Error, Result};

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
    abs: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.abs += x.abs();
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn abs_sum(&self) -> f64 {
        self.abs
    }

    pub fn condition(&self) -> f64 {
        let v = self.value().abs();
        if v == 0.0 {
            if self.abs == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            self.abs / v
        }
    }
}

/// Result of summing terms of widely varying magnitude.
#[derive(Clone, Copy, Debug)]
pub struct ScaledSum {
    pub value: LogValue,
    pub condition: f64,
}

/// Sums `terms` after rescaling to the largest exponent.
pub fn sum_scaled(terms: &[LogValue], compensated: bool) -> ScaledSum {
    let e = terms.iter().filter(|t| !t.is_zero()).map(|t| t.exponent()).max();
    let Some(e) = e else {
        return ScaledSum { value: LogValue::ZERO, condition: 1.0 };
    };
    let mut acc = NeumaierSum::new();
    let mut plain = 0.0;
    for t in terms {
        if t.is_zero() {
            continue;
        }
        let v = libm::ldexp(t.mantissa(), (t.exponent() - e).max(-2000) as i32);
        acc.add(v);
        plain += v;
    }
    let s = if compensated { acc.value() } else { plain };
    let cond = if s == 0.0 { f64::INFINITY } else { acc.abs_sum() / s.abs() };
    ScaledSum { value: LogValue::from_parts(s, e), condition: cond }
}

/// Sum of big floats with the number of bits lost to cancellation.
pub fn sum_mp(terms: &[BigFloat], prec: u32) -> (BigFloat, i64) {
    let mut acc = BigFloat::zero(prec);
    let mut top = i64::MIN;
    for t in terms {
        if !t.is_zero() {
            top = top.max(t.top_exp());
        }
        acc = &acc + t;
    }
    let loss = if top == i64::MIN {
        0
    } else if acc.is_zero() {
        i64::MAX / 4
    } else {
        (top - acc.top_exp()).max(0)
    };
    (acc, loss)
}

/// Runs `f` at growing working precision until the reported cancellation
/// leaves `bits` correct bits, and returns the result rounded to `bits`.
pub fn adaptive_mp(bits: u32, f: impl Fn(u32) -> Result<(BigFloat, i64)>) -> Result<BigFloat> {
    let mut wp = bits + 32;
    for _ in 0..8 {
        let (v, loss) = f(wp)?;
        if loss + bits as i64 + 16 <= wp as i64 {
            return Ok(v.with_prec(bits));
        }
        let want = if loss > 1 << 20 { 2 * wp } else { bits + loss as u32 + 48 };
        wp = want.max(wp + 32);
    }
    Err(Error::PrecisionLoss { condition: f64::INFINITY, limit: PrecisionConfig::LOSS_LIMIT })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_small_addends() {
        let mut s = NeumaierSum::new();
        s.add(1.0);
        s.add(1e100);
        s.add(1.0);
        s.add(-1e100);
        assert_eq!(s.value(), 2.0);
        assert!(s.condition() > 1e99);
    }

    #[test]
    fn adaptive_recovers_cancellation() {
        // (1 + 2^-200) - 1 needs more than the requested 64 bits
        let v = adaptive_mp(64, |wp| {
            let one = BigFloat::one(wp);
            let tiny = BigFloat::one(wp).mul_pow2(-200);
            Ok(sum_mp(&[&one + &tiny, -one], wp))
        })
        .unwrap();
        assert_eq!(v.to_f64(), libm::ldexp(1.0, -200));
    }

    #[test]
    fn scaled_sum_beyond_double_range() {
        let big = LogValue::from_parts(0.75, 5000);
        let r = sum_scaled(&[big, big, -big], true);
        assert_eq!(r.value, big);
        assert!((r.condition - 3.0).abs() < 1e-15);
    }
}
