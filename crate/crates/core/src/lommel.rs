//! Shift polynomials expressing omega_{mu+m} and rho_{nu+m} through the
//! two lowest orders.

use crate::bigfloat::BigFloat;
use crate::specfun::bessel_mp::{omega_mp_shifted, rho_mp_shifted};
use crate::specfun::gamma::{binomial, pochhammer};
use crate::specfun::{omega, rho, Params, PrecisionConfig};
use crate::Result;

/// Coefficients (constant term first) of the pair (r_m, s_m) for a given order.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftPair {
    pub r_poly: Vec<f64>,
    pub s_poly: Vec<f64>,
    pub m: usize,
    pub order_base: f64,
}

impl ShiftPair {
    pub fn r(&self, x: f64) -> f64 {
        horner(&self.r_poly, x)
    }

    pub fn s(&self, x: f64) -> f64 {
        horner(&self.s_poly, x)
    }
}

pub(crate) fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

/// Binomial-sum form of r_{m,mu} and s_{m,mu}.
pub fn shift_pair(order_base: f64, m: usize) -> ShiftPair {
    let mu = order_base;
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    let r_poly = match m {
        0 => vec![1.0],
        1 => Vec::new(),
        _ => {
            let top = (m - 2) / 2;
            let mut c = vec![0.0; top + 2];
            for j in 0..=top {
                c[j + 1] = sign * binomial((m - j - 2) as u64, j as u64) * pochhammer(mu + j as f64 + 2.0, (m - 2 * j - 2) as u32);
            }
            c
        }
    };
    let s_poly = if m == 0 {
        Vec::new()
    } else {
        let top = (m - 1) / 2;
        (0..=top)
            .map(|j| -sign * binomial((m - j - 1) as u64, j as u64) * pochhammer(mu + j as f64 + 1.0, (m - 2 * j - 1) as u32))
            .collect()
    };
    ShiftPair { r_poly, s_poly, m, order_base }
}

/// omega_{mu+m,a}(x) rebuilt from omega_mu and omega_{mu+1}.
///
/// The two terms cancel when a^2 x is small against m; past the escalation
/// threshold the combination is redone in extended precision.
pub fn omega_shift_eval(p: &Params, m: usize, x: f64) -> Result<f64> {
    let (mu, a) = (p.mu(), p.a());
    let w0 = omega(mu, a, x)?.to_f64();
    let w1 = omega(mu + 1.0, a, x)?.to_f64();
    let exact = |wp: u32| (omega_mp_shifted(mu, 0, a, x, wp), omega_mp_shifted(mu, 1, a, x, wp));
    combine(mu, m, a, x, w0, w1, exact)
}

/// rho_{nu+m,b}(x) rebuilt from rho_nu and rho_{nu+1}; the base is -b.
pub fn rho_shift_eval(p: &Params, m: usize, x: f64) -> Result<f64> {
    let (nu, b) = (p.nu(), p.b());
    let r0 = rho(nu, b, x)?.to_f64();
    let r1 = rho(nu + 1.0, b, x)?.to_f64();
    let exact = |wp: u32| (rho_mp_shifted(nu, 0, b, x, wp), rho_mp_shifted(nu, 1, b, x, wp));
    combine(nu, m, -b, x, r0, r1, exact)
}

// c^{-m} r(c^2 x) f0 + c^{1-m} s(c^2 x) f1
fn combine(base: f64, m: usize, c: f64, x: f64, f0: f64, f1: f64, exact: impl Fn(u32) -> (BigFloat, BigFloat)) -> Result<f64> {
    let sp = shift_pair(base, m);
    let y = c * c * x;
    let t0 = c.powi(-(m as i32)) * sp.r(y) * f0;
    let t1 = c.powi(1 - m as i32) * sp.s(y) * f1;
    let v = t0 + t1;
    let cond = (t0.abs() + t1.abs()) / v.abs();
    if cond <= PrecisionConfig::ESCALATE_ABOVE {
        return Ok(v);
    }
    let mut wp = 96 + if cond.is_finite() { cond.log2() as u32 } else { 64 };
    loop {
        let (f0, f1) = exact(wp);
        let (r, s) = shift_pair_mp(base, m, wp);
        let cb = BigFloat::from_f64(c, wp);
        let yb = &(&cb * &cb) * &BigFloat::from_f64(x, wp);
        let t0 = &(&cb.powi(-(m as i64)) * &horner_mp(&r, &yb)) * &f0;
        let t1 = &(&cb.powi(1 - m as i64) * &horner_mp(&s, &yb)) * &f1;
        let v = &t0 + &t1;
        let loss = t0.top_exp().max(t1.top_exp()) - v.top_exp();
        if v.is_zero() || loss + 64 > wp as i64 {
            if wp > 4096 {
                return Err(crate::Error::PrecisionLoss { condition: cond, limit: PrecisionConfig::LOSS_LIMIT });
            }
            wp = 2 * wp;
            continue;
        }
        return Ok(v.to_f64());
    }
}

pub(crate) fn horner_mp(c: &[BigFloat], x: &BigFloat) -> BigFloat {
    c.iter().rev().fold(BigFloat::zero(x.prec()), |acc, v| &(&acc * x) + v)
}

/// The pair (r_m, s_m) with coefficients to `prec` bits.
pub fn shift_pair_mp(order_base: f64, m: usize, prec: u32) -> (Vec<BigFloat>, Vec<BigFloat>) {
    let mu = BigFloat::from_f64(order_base, prec);
    let sign = if m % 2 == 0 { 1 } else { -1 };
    let binom = |n: usize, k: usize| BigFloat::binomial(n as u64, k as u64, prec);
    let r = match m {
        0 => vec![BigFloat::one(prec)],
        1 => Vec::new(),
        _ => {
            let mut c = vec![BigFloat::zero(prec)];
            for j in 0..=(m - 2) / 2 {
                let sh = &mu + &BigFloat::from_u64(j as u64 + 2, 64);
                c.push((&binom(m - j - 2, j) * &sh.rising(m - 2 * j - 2)).mul_i64(sign));
            }
            c
        }
    };
    let s = if m == 0 {
        Vec::new()
    } else {
        (0..=(m - 1) / 2)
            .map(|j| {
                let sh = &mu + &BigFloat::from_u64(j as u64 + 1, 64);
                (&binom(m - j - 1, j) * &sh.rising(m - 2 * j - 1)).mul_i64(-sign)
            })
            .collect()
    };
    (r, s)
}
