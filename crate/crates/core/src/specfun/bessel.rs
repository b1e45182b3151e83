//! Modified Bessel functions and the scaled weights in double precision.

use super::gamma::{gamma, rgamma};
use super::logvalue::LogValue;
use crate::error::{Error, Result};

/// Argument above which the large-z expansion of I is tried first.
pub const I_ASYMPTOTIC_FROM: f64 = 30.0;

/// Largest argument accepted by the I and K evaluators.
pub const MAX_ARGUMENT: f64 = 1e9;

// Taylor coefficients of 1/Gamma(1+x) about 0
const RGAMMA1P: [f64; 29] = [
    1.00000000000000000000e+00,
    5.77215664901532865549e-01,
    -6.55878071520253902449e-01,
    -4.20026350340952370210e-02,
    1.66538611382291479313e-01,
    -4.21977345555443333902e-02,
    -9.62197152787697303211e-03,
    7.21894324666309990246e-03,
    -1.16516759185906516871e-03,
    -2.15241674114950975192e-04,
    1.28050282388116195512e-04,
    -2.01348547807882386862e-05,
    -1.25049348214267063072e-06,
    1.13302723198169592860e-06,
    -2.05633841697760707339e-07,
    6.11609510448141608721e-09,
    5.00200764446922294544e-09,
    -1.18127457048702004406e-09,
    1.04342671169110053979e-10,
    7.78226343990507081432e-12,
    -3.69680561864220597869e-12,
    5.10037028745447575372e-13,
    -2.05832605356650663575e-14,
    -5.34812253942301782029e-15,
    1.22677862823826084089e-15,
    -1.18125930169745883374e-16,
    1.18669225475160037462e-18,
    1.41238065531803185733e-18,
    -2.29874568443537021993e-19,
];

fn pow_lv(base: f64, p: f64) -> LogValue {
    let v = base.powf(p);
    if v.is_normal() {
        LogValue::from_f64(v)
    } else {
        LogValue::from_f64(base).powf(p)
    }
}

fn rgamma_lv(x: f64) -> LogValue {
    let r = rgamma(x);
    if r.is_normal() {
        LogValue::from_f64(r)
    } else {
        let (l, s) = super::gamma::ln_gamma_signed(x);
        LogValue::from_log(-l, if s > 0.0 { super::Sign::Positive } else { super::Sign::Negative })
    }
}

/// I_mu(z) for mu > -1 and z >= 0.
pub fn bessel_i(mu: f64, z: f64) -> Result<LogValue> {
    if !(mu > -1.0) || !mu.is_finite() {
        return Err(Error::Domain(format!("bessel_i order {mu} must exceed -1")));
    }
    if !(z >= 0.0) || !(z <= MAX_ARGUMENT) {
        return Err(Error::Domain(format!("bessel_i argument {z:e} must lie in [0, {MAX_ARGUMENT:e}]")));
    }
    if z == 0.0 {
        return if mu == 0.0 {
            Ok(LogValue::ONE)
        } else if mu > 0.0 {
            Ok(LogValue::ZERO)
        } else {
            Err(Error::Domain(format!("I_{mu}(0) is unbounded")))
        };
    }
    if z > I_ASYMPTOTIC_FROM {
        if let Some(v) = i_asymptotic(mu, z) {
            return Ok(v);
        }
    }
    Ok(i_series(mu, z))
}

fn i_series(mu: f64, z: f64) -> LogValue {
    let h = 0.5 * z;
    let q = h * h;
    let mut sum = 1.0f64;
    let mut t = 1.0f64;
    let mut scale: i64 = 0;
    let mut k = 1.0f64;
    loop {
        let den = k * (mu + k);
        t *= q / den;
        sum += t;
        if den > q && t < 1e-17 * sum {
            break;
        }
        if sum > 1e280 {
            sum = libm::ldexp(sum, -900);
            t = libm::ldexp(t, -900);
            scale += 900;
        }
        k += 1.0;
    }
    pow_lv(h, mu) * rgamma_lv(mu + 1.0) * LogValue::from_parts(sum, scale)
}

// e^z / sqrt(2 pi z) * sum_k (-1)^k a_k(mu) / z^k, or None when the series stalls
fn i_asymptotic(mu: f64, z: f64) -> Option<LogValue> {
    let m4 = 4.0 * mu * mu;
    let mut t = 1.0f64;
    let mut sum = 1.0f64;
    for k in 1..80 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = -t * (m4 - odd * odd) / (8.0 * kf * z);
        if next == 0.0 {
            break;
        }
        if next.abs() >= t.abs() {
            return None;
        }
        t = next;
        sum += t;
        if t.abs() < 1e-17 * sum.abs() {
            return Some(LogValue::exp(z) * LogValue::from_f64(sum / (2.0 * std::f64::consts::PI * z).sqrt()));
        }
        if k == 79 {
            return None;
        }
    }
    Some(LogValue::exp(z) * LogValue::from_f64(sum / (2.0 * std::f64::consts::PI * z).sqrt()))
}

/// K_nu(z) for real nu and z > 0.
pub fn bessel_k(nu: f64, z: f64) -> Result<LogValue> {
    Ok(bessel_k_sequence(nu, z, 1)?[0])
}

/// K_{|nu|+j}(z) for j = 0..count.
pub fn bessel_k_sequence(nu: f64, z: f64, count: usize) -> Result<Vec<LogValue>> {
    if !(z > 0.0) || !(z <= MAX_ARGUMENT) {
        return Err(Error::Domain(format!("bessel_k argument {z:e} must lie in (0, {MAX_ARGUMENT:e}]")));
    }
    if !nu.is_finite() {
        return Err(Error::Domain("bessel_k order must be finite".into()));
    }
    let nu = nu.abs();
    let nl = (nu + 0.5).floor() as usize;
    let xmu = nu - nl as f64;
    let (mut k0, mut k1, mut scale) = if z < 2.0 { k_temme(xmu, z) } else { k_steed(xmu, z) };
    let xi2 = 2.0 / z;
    let mut out = Vec::with_capacity(count);
    let total = nl + count;
    // index i: k0 = K_{xmu+i}, k1 = K_{xmu+i+1}
    for i in 0..total {
        if i >= nl {
            out.push(scale * LogValue::from_f64(k0));
        }
        let next = (xmu + (i + 1) as f64) * xi2 * k1 + k0;
        k0 = k1;
        k1 = next;
        if k1 > 1e250 {
            k0 = libm::ldexp(k0, -800);
            k1 = libm::ldexp(k1, -800);
            scale = scale * LogValue::from_parts(1.0, 800);
        }
    }
    Ok(out)
}

// Temme series, |xmu| <= 1/2, z < 2: (K_xmu, K_{xmu+1}, scale)
fn k_temme(xmu: f64, z: f64) -> (f64, f64, LogValue) {
    use std::f64::consts::PI;
    let eps = 1e-17;
    let x2 = 0.5 * z;
    let pimu = PI * xmu;
    let fact = if pimu.abs() < eps { 1.0 } else { pimu / pimu.sin() };
    let d = -x2.ln();
    let e = xmu * d;
    let fact2 = if e.abs() < eps { 1.0 } else { e.sinh() / e };
    let (gam1, gam2, gampl, gammi) = temme_gammas(xmu);
    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = 0.5 * ee / gampl;
    let mut q = 0.5 / (ee * gammi);
    let mut c = 1.0;
    let dd = x2 * x2;
    let mut sum1 = p;
    let xmu2 = xmu * xmu;
    for i in 1..10_000 {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - xmu2);
        c *= dd / fi;
        p /= fi - xmu;
        q /= fi + xmu;
        let del = c * ff;
        sum += del;
        sum1 += c * (p - fi * ff);
        if del.abs() < sum.abs() * eps {
            break;
        }
    }
    (sum, sum1 * 2.0 / z, LogValue::ONE)
}

// 1/Gamma(1+x) and 1/Gamma(1-x) together with Temme's Gamma_1 and Gamma_2
fn temme_gammas(x: f64) -> (f64, f64, f64, f64) {
    let mut even = 0.0;
    let mut odd = 0.0;
    let mut p = 1.0;
    for (k, c) in RGAMMA1P.iter().enumerate() {
        if k % 2 == 0 {
            even += c * p;
        } else {
            odd += c * p;
        }
        if k % 2 == 1 {
            p *= x * x;
        }
    }
    // even = sum c_2k x^2k, odd = sum c_2k+1 x^2k
    let gampl = even + x * odd;
    let gammi = even - x * odd;
    (-odd, even, gampl, gammi)
}

// Steed's continued fraction, z >= 2: scaled by e^{-z}
fn k_steed(xmu: f64, z: f64) -> (f64, f64, LogValue) {
    let eps = 1e-17;
    let mut b = 2.0 * (1.0 + z);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - xmu * xmu;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..100_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < eps {
            break;
        }
    }
    h *= a1;
    let k0 = (std::f64::consts::PI / (2.0 * z)).sqrt() / s;
    let k1 = k0 * (xmu + z + 0.5 - h) / z;
    (k0, k1, LogValue::exp(-z))
}

fn check_x(x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("weights need x > 0, got {x}")));
    }
    Ok(())
}

/// omega_{mu,a}(x) = x^{mu/2} I_mu(2 a sqrt x).
pub fn omega(mu: f64, a: f64, x: f64) -> Result<LogValue> {
    check_x(x)?;
    Ok(pow_lv(x, 0.5 * mu) * bessel_i(mu, 2.0 * a * x.sqrt())?)
}

/// rho_{nu,b}(x) = x^{nu/2} K_nu(2 b sqrt x).
pub fn rho(nu: f64, b: f64, x: f64) -> Result<LogValue> {
    check_x(x)?;
    Ok(pow_lv(x, 0.5 * nu) * bessel_k(nu, 2.0 * b * x.sqrt())?)
}

/// omega_{mu+j,a}(x) for j = 0..count, by downward recurrence from the top two orders.
pub fn omega_sequence(mu: f64, a: f64, x: f64, count: usize) -> Result<Vec<LogValue>> {
    check_x(x)?;
    if count == 0 {
        return Ok(Vec::new());
    }
    if count == 1 {
        return Ok(vec![omega(mu, a, x)?]);
    }
    let mut out = vec![LogValue::ZERO; count];
    out[count - 1] = omega(mu + (count - 1) as f64, a, x)?;
    out[count - 2] = omega(mu + (count - 2) as f64, a, x)?;
    let inv_x = LogValue::from_f64(1.0 / x);
    for j in (0..count - 2).rev() {
        let c = LogValue::from_f64((mu + j as f64 + 1.0) / a);
        out[j] = out[j + 2].add(&(c * out[j + 1])) * inv_x;
    }
    Ok(out)
}

/// rho_{nu+j,b}(x) for j = 0..count, by upward recurrence.
pub fn rho_sequence(nu: f64, b: f64, x: f64, count: usize) -> Result<Vec<LogValue>> {
    check_x(x)?;
    let ks = bessel_k_sequence(nu, 2.0 * b * x.sqrt(), count)?;
    let mut p = pow_lv(x, 0.5 * nu);
    let sx = LogValue::from_f64(x.sqrt());
    Ok(ks
        .into_iter()
        .map(|k| {
            let v = p * k;
            p = p * sx;
            v
        })
        .collect())
}

/// Leading small-x behaviour (a x)^mu / Gamma(mu+1) of omega.
pub fn omega_small_x(mu: f64, a: f64, x: f64) -> Result<LogValue> {
    check_x(x)?;
    Ok(pow_lv(a * x, mu) * rgamma_lv(mu + 1.0))
}

/// omega_{mu,a}(0): 1 for mu = 0, 0 for mu > 0; unbounded for mu < 0.
pub fn omega_at_zero(mu: f64) -> Result<f64> {
    if mu == 0.0 {
        Ok(1.0)
    } else if mu > 0.0 {
        Ok(0.0)
    } else {
        Err(Error::Domain(format!("omega with mu = {mu} is unbounded at 0")))
    }
}

/// rho_{nu,b}(0+) = Gamma(nu) / (2 b^nu) for nu > 0.
pub fn rho_at_zero(nu: f64, b: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("rho_{nu} has no finite value at 0")));
    }
    Ok(gamma(nu) / (2.0 * b.powf(nu)))
}
