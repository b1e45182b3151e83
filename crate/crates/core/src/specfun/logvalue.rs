use std::cmp::Ordering;
use std::ops::{Div, Mul, Neg};

use serde::Serialize;

use crate::bigfloat::BigFloat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Negative => -1.0,
            Sign::Zero => 0.0,
            Sign::Positive => 1.0,
        }
    }
}

/// A real number that cannot overflow: `mant * 2^exp2` with `0.5 <= |mant| < 1`.
///
/// `log_magnitude()` and `sign()` give the logarithmic view; keeping the binary
/// exponent separate makes `from_f64(v).to_f64() == v` exact.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogValue {
    mant: f64,
    exp2: i64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue { mant: 0.0, exp2: 0 };
    pub const ONE: LogValue = LogValue { mant: 0.5, exp2: 1 };

    pub fn from_f64(v: f64) -> Self {
        debug_assert!(v.is_finite());
        if v == 0.0 {
            return Self::ZERO;
        }
        let (m, e) = libm::frexp(v);
        LogValue { mant: m, exp2: e as i64 }
    }

    /// Builds `mant * 2^exp2` for any finite `mant`.
    pub fn from_parts(mant: f64, exp2: i64) -> Self {
        let v = Self::from_f64(mant);
        if v.mant == 0.0 {
            return Self::ZERO;
        }
        LogValue { mant: v.mant, exp2: v.exp2 + exp2 }
    }

    /// The value `sign * exp(log_magnitude)`.
    pub fn from_log(log_magnitude: f64, sign: Sign) -> Self {
        if sign == Sign::Zero || log_magnitude == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        Self::exp(log_magnitude).scale_f64(sign.as_f64())
    }

    /// `e^x` with Cody-Waite reduction, accurate for |x| far beyond the double range.
    pub fn exp(x: f64) -> Self {
        const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
        const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;
        if x == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        let k = (x / std::f64::consts::LN_2).round();
        let r = (x - k * LN2_HI) - k * LN2_LO;
        Self::from_parts(r.exp(), k as i64)
    }

    pub fn from_bigfloat(v: &BigFloat) -> Self {
        let (m, e) = v.frexp();
        Self::from_parts(m, e)
    }

    pub fn to_bigfloat(&self, prec: u32) -> BigFloat {
        BigFloat::from_f64(self.mant, prec).mul_pow2(self.exp2)
    }

    /// Nearest double; overflows to infinity and underflows to zero.
    pub fn to_f64(&self) -> f64 {
        if self.mant == 0.0 {
            return 0.0;
        }
        libm::ldexp(self.mant, self.exp2.clamp(-5000, 5000) as i32)
    }

    pub fn sign(&self) -> Sign {
        if self.mant > 0.0 {
            Sign::Positive
        } else if self.mant < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn log_magnitude(&self) -> f64 {
        if self.mant == 0.0 {
            return f64::NEG_INFINITY;
        }
        self.mant.abs().ln() + self.exp2 as f64 * std::f64::consts::LN_2
    }

    pub fn is_zero(&self) -> bool {
        self.mant == 0.0
    }

    pub fn mantissa(&self) -> f64 {
        self.mant
    }

    pub fn exponent(&self) -> i64 {
        self.exp2
    }

    pub fn abs(&self) -> Self {
        LogValue { mant: self.mant.abs(), exp2: self.exp2 }
    }

    pub fn recip(&self) -> Self {
        Self::from_parts(1.0 / self.mant, -self.exp2)
    }

    pub fn scale_f64(&self, k: f64) -> Self {
        Self::from_parts(self.mant * k, self.exp2)
    }

    /// `|self|^p` carrying the sign of `self` only for integer powers.
    pub fn powf(&self, p: f64) -> Self {
        if self.mant == 0.0 {
            return if p == 0.0 { Self::ONE } else { Self::ZERO };
        }
        let sign = if self.mant < 0.0 && p.fract() == 0.0 && (p as i64) % 2 != 0 { Sign::Negative } else { Sign::Positive };
        Self::from_log(p * self.log_magnitude(), sign)
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.mant == 0.0 {
            return *o;
        }
        if o.mant == 0.0 {
            return *self;
        }
        let e = self.exp2.max(o.exp2);
        let a = libm::ldexp(self.mant, (self.exp2 - e).max(-2000) as i32);
        let b = libm::ldexp(o.mant, (o.exp2 - e).max(-2000) as i32);
        Self::from_parts(a + b, e)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&-*o)
    }

    /// Ratio `self / o` as a plain double (finite when the magnitudes are comparable).
    pub fn ratio(&self, o: &Self) -> f64 {
        (*self / *o).to_f64()
    }

    pub fn cmp_abs(&self, o: &Self) -> Ordering {
        match (self.mant == 0.0, o.mant == 0.0) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            _ => self.exp2.cmp(&o.exp2).then(self.mant.abs().total_cmp(&o.mant.abs())),
        }
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, o: LogValue) -> LogValue {
        LogValue::from_parts(self.mant * o.mant, self.exp2 + o.exp2)
    }
}

impl Div for LogValue {
    type Output = LogValue;
    fn div(self, o: LogValue) -> LogValue {
        LogValue::from_parts(self.mant / o.mant, self.exp2 - o.exp2)
    }
}

impl Neg for LogValue {
    type Output = LogValue;
    fn neg(self) -> LogValue {
        LogValue { mant: -self.mant, exp2: self.exp2 }
    }
}

impl From<f64> for LogValue {
    fn from(v: f64) -> Self {
        LogValue::from_f64(v)
    }
}
