//! Binary floating point with a configurable mantissa, built on `num-bigint`.
//!
//! A value is `(-1)^neg * mant * 2^exp` where `mant` holds exactly `prec`
//! significant bits (or is zero). Every operation rounds to nearest, ties to
//! even, at the larger precision of its operands.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{Float, One, ToPrimitive, Zero};

#[derive(Clone)]
pub struct BigFloat {
    neg: bool,
    mant: BigUint,
    exp: i64,
    prec: u32,
}

impl fmt::Debug for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BigFloat({:e}, {} bits)", self.to_f64(), self.prec)
    }
}

fn round_to(neg: bool, m: BigUint, exp: i64, prec: u32, sticky: bool) -> BigFloat {
    if m.is_zero() {
        return BigFloat::zero(prec);
    }
    let bits = m.bits();
    let p = prec as u64;
    if bits <= p {
        let sh = p - bits;
        return BigFloat { neg, mant: m << sh, exp: exp - sh as i64, prec };
    }
    let sh = bits - p;
    let mut q = &m >> sh;
    let half = m.bit(sh - 1);
    let below = sticky || m.trailing_zeros().map_or(false, |tz| tz < sh - 1);
    let mut e = exp + sh as i64;
    if half && (below || q.bit(0)) {
        q += 1u32;
        if q.bits() > p {
            q >>= 1;
            e += 1;
        }
    }
    BigFloat { neg, mant: q, exp: e, prec }
}

impl BigFloat {
    pub fn zero(prec: u32) -> Self {
        BigFloat { neg: false, mant: BigUint::zero(), exp: 0, prec }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_u64(1, prec)
    }

    pub fn from_u64(v: u64, prec: u32) -> Self {
        round_to(false, BigUint::from(v), 0, prec, false)
    }

    pub fn from_i64(v: i64, prec: u32) -> Self {
        round_to(v < 0, BigUint::from(v.unsigned_abs()), 0, prec, false)
    }

    /// Binomial coefficient C(n, k), exact before rounding to `prec`.
    pub fn binomial(n: u64, k: u64, prec: u32) -> Self {
        if k > n {
            return Self::zero(prec);
        }
        let k = k.min(n - k);
        let mut c = BigUint::from(1u32);
        for i in 0..k {
            c = c * BigUint::from(n - i) / BigUint::from(i + 1);
        }
        round_to(false, c, 0, prec, false)
    }

    pub fn from_bigint(v: &BigInt, prec: u32) -> Self {
        round_to(v.sign() == Sign::Minus, v.magnitude().clone(), 0, prec, false)
    }

    /// Exact conversion of a finite double (rounded only if `prec < 53`).
    pub fn from_f64(v: f64, prec: u32) -> Self {
        assert!(v.is_finite(), "non-finite value {v} cannot be lifted");
        if v == 0.0 {
            return Self::zero(prec);
        }
        let (m, e, s) = v.integer_decode();
        round_to(s < 0, BigUint::from(m), e as i64, prec, false)
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.neg && !self.is_zero()
    }

    /// Sign as -1, 0 or +1.
    pub fn signum(&self) -> i8 {
        if self.is_zero() {
            0
        } else if self.neg {
            -1
        } else {
            1
        }
    }

    /// Exponent `e` with `2^(e-1) <= |x| < 2^e`; `i64::MIN` for zero.
    pub fn top_exp(&self) -> i64 {
        if self.is_zero() {
            i64::MIN
        } else {
            self.exp + self.mant.bits() as i64
        }
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        if prec >= self.prec {
            let sh = (prec - self.prec) as u64;
            if self.is_zero() {
                return Self::zero(prec);
            }
            BigFloat { neg: self.neg, mant: &self.mant << sh, exp: self.exp - sh as i64, prec }
        } else {
            round_to(self.neg, self.mant.clone(), self.exp, prec, false)
        }
    }

    pub fn abs(&self) -> Self {
        BigFloat { neg: false, ..self.clone() }
    }

    /// Multiplication by `2^k`, exact.
    pub fn mul_pow2(&self, k: i64) -> Self {
        let mut r = self.clone();
        if !r.is_zero() {
            r.exp += k;
        }
        r
    }

    pub fn to_f64(&self) -> f64 {
        let (m, e) = self.frexp();
        libm::ldexp(m, e.clamp(-20000, 20000) as i32)
    }

    /// Returns `(m, e)` with `0.5 <= |m| < 1` and value `m * 2^e`.
    pub fn frexp(&self) -> (f64, i64) {
        if self.is_zero() {
            return (0.0, 0);
        }
        let bits = self.mant.bits();
        let top = if bits > 64 { (&self.mant >> (bits - 64)).to_u64().unwrap() } else { self.mant.to_u64().unwrap() << (64 - bits) };
        let m = top as f64 / 18446744073709551616.0;
        // rounding may carry into 1.0
        let (m, adj) = if m >= 1.0 { (0.5, 1) } else { (m, 0) };
        let s = if self.neg { -m } else { m };
        (s, self.exp + bits as i64 + adj)
    }

    /// Natural log of |x| as a double; `-inf` for zero.
    pub fn ln_abs_f64(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let (m, e) = self.frexp();
        m.abs().ln() + e as f64 * std::f64::consts::LN_2
    }

    fn cmp_abs(&self, o: &Self) -> Ordering {
        match (self.is_zero(), o.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let (ta, tb) = (self.top_exp(), o.top_exp());
        if ta != tb {
            return ta.cmp(&tb);
        }
        let e = self.exp.min(o.exp);
        let ma = &self.mant << (self.exp - e) as u64;
        let mb = &o.mant << (o.exp - e) as u64;
        ma.cmp(&mb)
    }

    fn add_signed(&self, o: &Self, flip: bool) -> Self {
        let prec = self.prec.max(o.prec);
        let oneg = o.neg ^ flip;
        if o.is_zero() {
            return self.with_prec(prec);
        }
        if self.is_zero() {
            let mut r = o.with_prec(prec);
            r.neg = oneg;
            return r;
        }
        let (ta, tb) = (self.top_exp(), o.top_exp());
        let gap = prec as i64 + 3;
        if ta - tb > gap {
            return self.add_tiny(oneg, prec);
        }
        if tb - ta > gap {
            let mut big = o.clone();
            big.neg = oneg;
            return big.add_tiny(self.neg, prec);
        }
        let e = self.exp.min(o.exp);
        let ma = &self.mant << (self.exp - e) as u64;
        let mb = &o.mant << (o.exp - e) as u64;
        if self.neg == oneg {
            round_to(self.neg, ma + mb, e, prec, false)
        } else {
            match ma.cmp(&mb) {
                Ordering::Equal => Self::zero(prec),
                Ordering::Greater => round_to(self.neg, ma - mb, e, prec, false),
                Ordering::Less => round_to(oneg, mb - ma, e, prec, false),
            }
        }
    }

    // self plus a nonzero quantity far below half an ulp: only the sticky bit matters
    fn add_tiny(&self, tiny_neg: bool, prec: u32) -> Self {
        let base = self.with_prec(prec);
        let m = &base.mant << 2u32;
        let e = base.exp - 2;
        if tiny_neg == self.neg {
            round_to(self.neg, m, e, prec, true)
        } else {
            round_to(self.neg, m - 1u32, e, prec, true)
        }
    }

    fn mul_ref(&self, o: &Self) -> Self {
        let prec = self.prec.max(o.prec);
        round_to(self.neg ^ o.neg, &self.mant * &o.mant, self.exp + o.exp, prec, false)
    }

    fn div_ref(&self, o: &Self) -> Self {
        assert!(!o.is_zero(), "BigFloat division by zero");
        let prec = self.prec.max(o.prec);
        if self.is_zero() {
            return Self::zero(prec);
        }
        let want = prec as i64 + 3 + o.mant.bits() as i64 - self.mant.bits() as i64;
        let sh = want.max(0) as u64;
        let (q, r) = (&self.mant << sh).div_rem(&o.mant);
        round_to(self.neg ^ o.neg, q, self.exp - o.exp - sh as i64, prec, !r.is_zero())
    }

    pub fn mul_i64(&self, k: i64) -> Self {
        round_to(self.neg ^ (k < 0), &self.mant * BigUint::from(k.unsigned_abs()), self.exp, self.prec, false)
    }

    pub fn div_i64(&self, k: i64) -> Self {
        self.div_ref(&Self::from_i64(k, 64))
    }

    pub fn recip(&self) -> Self {
        Self::one(self.prec).div_ref(self)
    }

    /// Rising factorial (self)_k.
    pub fn rising(&self, k: usize) -> Self {
        let mut acc = Self::one(self.prec);
        for i in 0..k {
            acc = &acc * &(self + &Self::from_u64(i as u64, 64));
        }
        acc
    }

    pub fn square(&self) -> Self {
        self.mul_ref(self)
    }

    pub fn sqrt(&self) -> Self {
        assert!(!self.is_negative(), "square root of a negative BigFloat");
        if self.is_zero() {
            return self.clone();
        }
        let prec = self.prec as i64;
        let bits = self.mant.bits() as i64;
        let mut sh = (2 * (prec + 3) - bits).max(0);
        if (self.exp - sh) % 2 != 0 {
            sh += 1;
        }
        let m = &self.mant << sh as u64;
        let r = m.sqrt();
        let exact = &r * &r == m;
        round_to(false, r, (self.exp - sh) / 2, self.prec, !exact)
    }

    /// Nearest integer, ties away from zero.
    pub fn round_int(&self) -> BigInt {
        let half = BigFloat::from_f64(0.5, 8);
        let t = if self.neg { self - &half } else { self + &half };
        t.trunc_int()
    }

    pub fn trunc_int(&self) -> BigInt {
        let m = if self.exp >= 0 { &self.mant << self.exp as u64 } else { &self.mant >> (-self.exp) as u64 };
        BigInt::from_biguint(if self.neg { Sign::Minus } else { Sign::Plus }, m)
    }

    /// True when the value is an integer.
    pub fn is_integer(&self) -> bool {
        if self.is_zero() || self.exp >= 0 {
            return true;
        }
        self.mant.trailing_zeros().map_or(true, |tz| tz as i64 >= -self.exp)
    }

    pub fn exp(&self) -> Self {
        let p = self.prec;
        if self.is_zero() {
            return Self::one(p);
        }
        let approx = self.to_f64();
        assert!(approx.abs() < 1e15, "exp argument too large: {approx}");
        let k = (approx / std::f64::consts::LN_2).round() as i64;
        let s: u32 = 12;
        let wp = p + 40 + s + 64 - k.unsigned_abs().leading_zeros();
        let x = self.with_prec(wp);
        let r = &x - &ln2(wp).mul_i64(k);
        let rr = r.mul_pow2(-(s as i64));
        let mut sum = Self::one(wp);
        let mut term = Self::one(wp);
        let stop = -(wp as i64) - 4;
        for i in 1..10_000i64 {
            term = (&term * &rr).div_i64(i);
            if term.is_zero() || term.top_exp() < stop {
                break;
            }
            sum = &sum + &term;
        }
        for _ in 0..s {
            sum = sum.square();
        }
        sum.mul_pow2(k).with_prec(p)
    }

    pub fn ln(&self) -> Self {
        assert!(!self.is_negative() && !self.is_zero(), "logarithm of a non-positive BigFloat");
        let p = self.prec;
        let mut e = self.top_exp();
        let wp0 = p + 40 + 64 - e.unsigned_abs().leading_zeros();
        let mut m = self.with_prec(wp0).mul_pow2(-e);
        if m.to_f64() < std::f64::consts::FRAC_1_SQRT_2 {
            m = m.mul_pow2(1);
            e -= 1;
        }
        // m^(1/2^j) moves m close to 1 and speeds the atanh series
        let j: u32 = 6;
        let wp = wp0 + j;
        let mut m = m.with_prec(wp);
        for _ in 0..j {
            m = m.sqrt();
        }
        let one = Self::one(wp);
        let t = &(&m - &one) / &(&m + &one);
        let t2 = t.square();
        let mut pw = t.clone();
        let mut sum = t.clone();
        let stop = -(wp as i64) - 4;
        for k in 1..100_000i64 {
            pw = &pw * &t2;
            let term = pw.div_i64(2 * k + 1);
            if term.is_zero() || term.top_exp() - sum.top_exp() < stop {
                break;
            }
            sum = &sum + &term;
        }
        let lnm = sum.mul_pow2(1 + j as i64);
        (&lnm + &ln2(wp).mul_i64(e)).with_prec(p)
    }

    /// `self^y` for positive `self`.
    pub fn powf(&self, y: &Self) -> Self {
        if y.is_zero() {
            return Self::one(self.prec.max(y.prec));
        }
        if y.is_integer() && y.top_exp() < 32 {
            return self.powi(y.trunc_int().to_i64().unwrap());
        }
        let prec = self.prec.max(y.prec);
        let guard = 16 + (64 - (self.top_exp().unsigned_abs() + 1).leading_zeros()) + (64 - (y.top_exp().max(0) as u64).leading_zeros());
        let wp = prec + guard + 8;
        (&self.with_prec(wp).ln() * &y.with_prec(wp)).exp().with_prec(prec)
    }

    pub fn powi(&self, k: i64) -> Self {
        let p = self.prec;
        let wp = p + 2 * (64 - k.unsigned_abs().leading_zeros()) + 8;
        let mut base = self.with_prec(wp);
        let mut acc = Self::one(wp);
        let mut n = k.unsigned_abs();
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = base.square();
            }
        }
        if k < 0 {
            acc = acc.recip();
        }
        acc.with_prec(p)
    }

    /// `sin(pi * self)` with exact argument reduction.
    pub fn sin_pi(&self) -> Self {
        let p = self.prec;
        if self.is_zero() || self.is_integer() {
            return Self::zero(p);
        }
        let wp = p + 20;
        let x = self.with_prec(wp + self.top_exp().max(0) as u32);
        // reduce to f in (-1, 1]: sin(pi x) = (-1)^k sin(pi (x - k))
        let k = x.round_int();
        let mut f = &x - &Self::from_bigint(&k, 64);
        let mut negate = k.is_odd();
        if f.is_negative() {
            f = -f;
            negate = !negate;
        }
        // f in [0, 1/2]; fold f > 1/4 through cos to keep the series short
        let f = f.with_prec(wp);
        let quarter = Self::from_f64(0.25, 8);
        let res = if f > quarter {
            let g = &Self::from_f64(0.5, 8) - &f;
            cos_series(&(&pi(wp) * &g), wp)
        } else {
            sin_series(&(&pi(wp) * &f), wp)
        };
        let res = res.with_prec(p);
        if negate {
            -res
        } else {
            res
        }
    }

    /// Gamma function for real arguments away from the poles.
    pub fn gamma(&self) -> Self {
        let p = self.prec;
        assert!(!(self.is_integer() && (self.is_zero() || self.is_negative())), "Gamma pole");
        if self.to_f64() < 0.5 {
            // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
            let wp = p + 20;
            let x = self.with_prec(wp);
            let one_minus = &Self::one(wp) - &x;
            let g = one_minus.gamma();
            return (&pi(wp) / &(&x.sin_pi() * &g)).with_prec(p);
        }
        let wp = p + 32;
        let shift_to = (0.2 * wp as f64).ceil() + 10.0;
        let xf = self.to_f64();
        let n_shift = if xf < shift_to { (shift_to - xf).ceil() as i64 } else { 0 };
        let x = self.with_prec(wp + 16);
        let mut prod = Self::one(wp + 16);
        for i in 0..n_shift {
            prod = &prod * &(&x + &Self::from_i64(i, 64));
        }
        let y = &x + &Self::from_i64(n_shift, 64);
        let lg = ln_gamma_stirling(&y, wp + 16);
        (&lg.exp() / &prod).with_prec(p)
    }

    pub fn max_ref<'a>(&'a self, o: &'a Self) -> &'a Self {
        if self >= o {
            self
        } else {
            o
        }
    }
}

fn sin_series(x: &BigFloat, wp: u32) -> BigFloat {
    let x2 = x.square();
    let mut term = x.clone();
    let mut sum = x.clone();
    let stop = -(wp as i64) - 4;
    for k in 1..10_000i64 {
        term = -(&term * &x2).div_i64((2 * k) * (2 * k + 1));
        if term.is_zero() || term.top_exp() < stop {
            break;
        }
        sum = &sum + &term;
    }
    sum
}

fn cos_series(x: &BigFloat, wp: u32) -> BigFloat {
    let x2 = x.square();
    let mut term = BigFloat::one(wp);
    let mut sum = BigFloat::one(wp);
    let stop = -(wp as i64) - 4;
    for k in 1..10_000i64 {
        term = -(&term * &x2).div_i64((2 * k - 1) * (2 * k));
        if term.is_zero() || term.top_exp() < stop {
            break;
        }
        sum = &sum + &term;
    }
    sum
}

// ln Gamma(y) for y large enough that the Stirling tail is below 2^-wp
fn ln_gamma_stirling(y: &BigFloat, wp: u32) -> BigFloat {
    let y = y.with_prec(wp);
    let half = BigFloat::from_f64(0.5, 8);
    let mut s = &(&(&y - &half) * &y.ln()) - &y;
    s = &s + &ln_sqrt_2pi(wp);
    let y2 = y.square();
    let mut ypow = y.clone();
    let stop = -(wp as i64) - 8;
    for k in 1..2000usize {
        let (num, den) = bernoulli(2 * k);
        let b = &BigFloat::from_bigint(&num, wp) / &BigFloat::from_bigint(&den, wp);
        let kk = 2 * k as i64;
        let term = &b / &ypow.mul_i64(kk * (kk - 1));
        if term.is_zero() || term.top_exp() < stop {
            break;
        }
        s = &s + &term;
        ypow = &ypow * &y2;
    }
    s
}

impl PartialEq for BigFloat {
    fn eq(&self, o: &Self) -> bool {
        self.partial_cmp(o) == Some(Ordering::Equal)
    }
}

impl PartialOrd for BigFloat {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        let (sa, sb) = (self.signum(), o.signum());
        if sa != sb {
            return Some(sa.cmp(&sb));
        }
        let c = self.cmp_abs(o);
        Some(if sa < 0 { c.reverse() } else { c })
    }
}

impl Neg for BigFloat {
    type Output = BigFloat;
    fn neg(mut self) -> BigFloat {
        self.neg = !self.neg;
        self
    }
}

impl Neg for &BigFloat {
    type Output = BigFloat;
    fn neg(self) -> BigFloat {
        -(self.clone())
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&BigFloat> for &BigFloat {
            type Output = BigFloat;
            fn $m(self, o: &BigFloat) -> BigFloat {
                $body(self, o)
            }
        }
        impl $tr<BigFloat> for BigFloat {
            type Output = BigFloat;
            fn $m(self, o: BigFloat) -> BigFloat {
                $body(&self, &o)
            }
        }
        impl $tr<&BigFloat> for BigFloat {
            type Output = BigFloat;
            fn $m(self, o: &BigFloat) -> BigFloat {
                $body(&self, o)
            }
        }
        impl $tr<BigFloat> for &BigFloat {
            type Output = BigFloat;
            fn $m(self, o: BigFloat) -> BigFloat {
                $body(self, &o)
            }
        }
    };
}

binop!(Add, add, |a: &BigFloat, b: &BigFloat| a.add_signed(b, false));
binop!(Sub, sub, |a: &BigFloat, b: &BigFloat| a.add_signed(b, true));
binop!(Mul, mul, |a: &BigFloat, b: &BigFloat| a.mul_ref(b));
binop!(Div, div, |a: &BigFloat, b: &BigFloat| a.div_ref(b));

// ---------------------------------------------------------------------------
// constants, cached per precision

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Const {
    Ln2,
    Pi,
    LnSqrt2Pi,
    Euler,
}

fn cache() -> &'static Mutex<HashMap<(Const, u32), BigFloat>> {
    static C: OnceLock<Mutex<HashMap<(Const, u32), BigFloat>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached(c: Const, prec: u32, make: impl FnOnce(u32) -> BigFloat) -> BigFloat {
    if let Some(v) = cache().lock().unwrap().get(&(c, prec)) {
        return v.clone();
    }
    let v = make(prec);
    cache().lock().unwrap().insert((c, prec), v.clone());
    v
}

// sum_{k>=0} sign^k / ((2k+1) m^(2k+1)) in fixed point with `bits` fraction bits
fn arctan_inv_fixed(m: u64, bits: u64, alternate: bool) -> BigInt {
    let one = BigInt::one() << bits;
    let m2 = BigInt::from(m * m);
    let mut pw = one / BigInt::from(m);
    let mut sum = pw.clone();
    let mut k = 1u64;
    while !pw.is_zero() {
        pw /= &m2;
        let t = &pw / BigInt::from(2 * k + 1);
        if alternate && k % 2 == 1 {
            sum -= t;
        } else {
            sum += t;
        }
        k += 1;
    }
    sum
}

pub fn ln2(prec: u32) -> BigFloat {
    cached(Const::Ln2, prec, |p| {
        let bits = p as u64 + 32;
        let s = arctan_inv_fixed(3, bits, false) << 1u32;
        BigFloat::from_bigint(&s, p + 32).mul_pow2(-(bits as i64)).with_prec(p)
    })
}

pub fn pi(prec: u32) -> BigFloat {
    cached(Const::Pi, prec, |p| {
        let bits = p as u64 + 32;
        let s = (arctan_inv_fixed(5, bits, true) << 4u32) - (arctan_inv_fixed(239, bits, true) << 2u32);
        BigFloat::from_bigint(&s, p + 32).mul_pow2(-(bits as i64)).with_prec(p)
    })
}

fn ln_sqrt_2pi(prec: u32) -> BigFloat {
    cached(Const::LnSqrt2Pi, prec, |p| pi(p + 16).mul_pow2(1).ln().mul_pow2(-1).with_prec(p))
}

/// Euler's constant, from the asymptotic series of the digamma function.
pub fn euler_gamma(prec: u32) -> BigFloat {
    cached(Const::Euler, prec, |p| {
        let wp = p + 32;
        let n = (0.25 * wp as f64).ceil() as i64 + 10;
        let y = BigFloat::from_i64(n, wp);
        // psi(n) = ln n - 1/(2n) - sum B_2k / (2k n^2k)
        let mut psi = &y.ln() - &y.mul_pow2(1).recip();
        let y2 = y.square();
        let mut ypow = y2.clone();
        let stop = -(wp as i64) - 8;
        for k in 1..2000usize {
            let (num, den) = bernoulli(2 * k);
            let b = &BigFloat::from_bigint(&num, wp) / &BigFloat::from_bigint(&den, wp);
            let term = &b / &ypow.mul_i64(2 * k as i64);
            if term.top_exp() < stop {
                break;
            }
            psi = &psi - &term;
            ypow = &ypow * &y2;
        }
        // psi(1) = psi(n) - H_{n-1}
        let mut h = BigFloat::zero(wp);
        for j in 1..n {
            h = &h + &BigFloat::from_i64(j, 64).with_prec(wp).recip();
        }
        (-(&psi - &h)).with_prec(p)
    })
}

/// Bernoulli number `B_m` as an exact fraction `(num, den)`.
pub fn bernoulli(m: usize) -> (BigInt, BigInt) {
    if m == 0 {
        return (BigInt::one(), BigInt::one());
    }
    if m == 1 {
        return (BigInt::from(-1), BigInt::from(2));
    }
    if m % 2 == 1 {
        return (BigInt::zero(), BigInt::one());
    }
    let k = m / 2;
    let t = tangent_numbers(k);
    // B_2k = (-1)^(k-1) 2k T_k / (2^2k (2^2k - 1))
    let p2 = BigInt::one() << (2 * k);
    let mut num = BigInt::from(2 * k) * &t[k - 1];
    if k % 2 == 0 {
        num = -num;
    }
    let den = &p2 * (&p2 - 1u32);
    let g = num.gcd(&den);
    (num / &g, den / g)
}

// tangent numbers T_1..T_k (Brent-Harvey in-place recurrence), cached
fn tangent_numbers(k: usize) -> Vec<BigInt> {
    static T: OnceLock<Mutex<Vec<BigInt>>> = OnceLock::new();
    let lock = T.get_or_init(|| Mutex::new(Vec::new()));
    let mut g = lock.lock().unwrap();
    if g.len() < k {
        let n = k.max(2 * g.len()).max(64);
        let mut t: Vec<BigInt> = vec![BigInt::zero(); n + 1];
        t[1] = BigInt::one();
        for j in 2..=n {
            t[j] = &t[j - 1] * BigInt::from(j - 1);
        }
        for j in 2..=n {
            for i in j..=n {
                t[i] = &t[i - 1] * BigInt::from(i - j) + &t[i] * BigInt::from(i - j + 2);
            }
        }
        *g = t[1..].to_vec();
    }
    g[..k].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 256;

    #[test]
    fn binomial_is_exact_past_double_range() {
        // C(80, 40) = 107507208733336176461620
        let c = BigFloat::binomial(80, 40, P);
        let expect = BigFloat::from_bigint(&"107507208733336176461620".parse::<BigInt>().unwrap(), P);
        assert!((&c - &expect).is_zero());
        assert!(BigFloat::binomial(3, 5, P).is_zero());
        assert_eq!(BigFloat::binomial(10, 3, P).to_f64(), 120.0);
    }

    fn bf(v: f64) -> BigFloat {
        BigFloat::from_f64(v, P)
    }

    fn close(a: &BigFloat, b: &BigFloat, rel_bits: i64) -> bool {
        let d = (a - b).abs();
        d.is_zero() || d.top_exp() - a.abs().max_ref(&b.abs()).top_exp() < -rel_bits
    }

    #[test]
    fn roundtrip_f64() {
        for v in [1.0, -2.5, 1e-300, 3.141592653589793, 1e300, -7.0e-5] {
            assert_eq!(bf(v).to_f64(), v);
        }
    }

    #[test]
    fn arithmetic_identities() {
        let a = bf(1.0) / bf(3.0);
        let b = &a * &bf(3.0);
        assert!(close(&b, &bf(1.0), 250));
        let s = bf(2.0).sqrt();
        assert!(close(&s.square(), &bf(2.0), 250));
        assert!((bf(1.0) - bf(1.0)).is_zero());
        assert!(bf(-3.0) < bf(2.0));
        assert!(bf(-3.0) < bf(-2.0));
    }

    #[test]
    fn tiny_addend_rounds() {
        let one = BigFloat::one(64);
        let tiny = bf(1e-60);
        assert_eq!((&one + &tiny).to_f64(), 1.0);
        assert!((&one - &tiny) < one);
    }

    #[test]
    fn constants_match_known_digits() {
        assert_eq!(pi(P).to_f64(), std::f64::consts::PI);
        assert_eq!(ln2(P).to_f64(), std::f64::consts::LN_2);
        assert!((euler_gamma(P).to_f64() - 0.5772156649015329).abs() < 1e-16);
        // pi at two precisions agree
        assert!(close(&pi(512).with_prec(P), &pi(P), 254));
    }

    #[test]
    fn exp_ln_inverse() {
        for v in [0.1, 1.0, 2.5, -7.25, 100.0, 1e-8] {
            let x = bf(v);
            assert!(close(&x.exp().ln(), &x, 225), "v={v}");
        }
        assert!((bf(1.0).exp().to_f64() - std::f64::consts::E).abs() < 1e-15);
        assert!(close(&bf(2.0).powf(&bf(0.5)), &bf(2.0).sqrt(), 245));
    }

    #[test]
    fn sin_pi_values() {
        assert!(close(&bf(0.5).sin_pi(), &bf(1.0), 250));
        assert!(close(&bf(1.0 / 6.0).sin_pi(), &bf(0.5), 50));
        assert!(bf(3.0).sin_pi().is_zero());
        assert!((bf(-0.3).sin_pi().to_f64() + (0.3f64 * std::f64::consts::PI).sin()).abs() < 1e-15);
        assert!((bf(7.7).sin_pi().to_f64() - (0.7 * std::f64::consts::PI).sin() * -1.0).abs() < 1e-14);
    }

    #[test]
    fn bernoulli_small() {
        assert_eq!(bernoulli(2), (BigInt::from(1), BigInt::from(6)));
        assert_eq!(bernoulli(4), (BigInt::from(-1), BigInt::from(30)));
        assert_eq!(bernoulli(12), (BigInt::from(-691), BigInt::from(2730)));
    }

    #[test]
    fn gamma_values() {
        assert!(close(&bf(5.0).gamma(), &bf(24.0), 240));
        let half = bf(0.5).gamma();
        assert!(close(&half, &pi(P).sqrt(), 240));
        // Gamma(-0.5) = -2 sqrt(pi)
        assert!(close(&bf(-0.5).gamma(), &(-pi(P).sqrt().mul_i64(2)), 240));
        let g = bf(101.0).gamma();
        let mut f = BigFloat::one(P);
        for i in 2..=100 {
            f = f.mul_i64(i);
        }
        assert!(close(&g, &f, 240));
    }
}
