//! The weights in extended precision.
//!
//! omega is the positive ascending series. rho uses the reflection
//! K_nu = pi (I_{-nu} - I_nu) / (2 sin nu pi) for non-integer orders and the
//! logarithmic series for integer orders; both cancel like e^{-4 b sqrt x}, so
//! guard bits are sized from a first estimate and the evaluation is repeated
//! when the measured cancellation exceeds them.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::bigfloat::{euler_gamma, pi, BigFloat};

fn bf(v: f64, p: u32) -> BigFloat {
    BigFloat::from_f64(v, p)
}

/// Gamma(shift + sign * x) with the argument formed exactly, memoised per precision.
pub fn gamma_mp(x: f64, sign: i8, shift: i64, prec: u32) -> BigFloat {
    type Key = (u64, i8, i64, u32);
    static MEMO: OnceLock<Mutex<HashMap<Key, BigFloat>>> = OnceLock::new();
    let memo = MEMO.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (x.to_bits(), sign, shift, prec);
    if let Some(v) = memo.lock().unwrap().get(&key) {
        return v.clone();
    }
    let xb = bf(x, prec);
    let arg = &BigFloat::from_i64(shift, 64) + &(if sign < 0 { -xb } else { xb });
    let v = arg.gamma();
    let mut m = memo.lock().unwrap();
    if m.len() > 4096 {
        m.clear();
    }
    m.insert(key, v.clone());
    v
}

// sum_k y^k t_k with t_0 = first and t_k = t_{k-1} / (k (k + shift)); positive y
fn ascending(y: &BigFloat, shift: &BigFloat, first: BigFloat, wp: u32) -> BigFloat {
    let mut t = first;
    let mut sum = t.clone();
    let mut peak = sum.abs();
    let yf = y.to_f64();
    let sf = shift.to_f64();
    let stop = wp as i64 + 8;
    for k in 1..1_000_000i64 {
        let kf = k as f64;
        let den = &(shift + &BigFloat::from_i64(k, 64)) * &BigFloat::from_i64(k, 64);
        t = &(&t * y) / &den;
        sum = &sum + &t;
        let ta = t.abs();
        if ta > peak {
            peak = ta.clone();
        }
        if kf * (kf + sf) > yf && kf + sf > 0.0 && (t.is_zero() || peak.top_exp() - t.top_exp() > stop) {
            break;
        }
    }
    sum
}

/// omega_{mu,a}(x) to `prec` bits.
pub fn omega_mp(mu: f64, a: f64, x: f64, prec: u32) -> BigFloat {
    omega_mp_shifted(mu, 0, a, x, prec)
}

/// omega_{mu+j,a}(x) with the order mu + j formed exactly.
pub fn omega_mp_shifted(mu: f64, j: i64, a: f64, x: f64, prec: u32) -> BigFloat {
    omega_mp_shifted_at(mu, j, a, &bf(x, prec + 24), prec)
}

/// [`omega_mp_shifted`] at an extended-precision point.
pub fn omega_mp_shifted_at(mu: f64, j: i64, a: f64, x: &BigFloat, prec: u32) -> BigFloat {
    let wp = prec + 24;
    let (af, xf) = (bf(a, wp), x.with_prec(wp));
    let muf = &bf(mu, wp) + &BigFloat::from_i64(j, 64);
    let y = &(&af * &af) * &xf;
    let first = gamma_mp(mu, 1, j + 1, wp).recip();
    let s = ascending(&y, &muf, first, wp);
    (&(&af * &xf).powf(&muf) * &s).with_prec(prec)
}

/// omega_{mu+j,a}(x), j < count, by downward recurrence.
pub fn omega_sequence_mp(mu: f64, a: f64, x: f64, count: usize, prec: u32) -> Vec<BigFloat> {
    omega_sequence_mp_at(mu, a, &bf(x, prec + 40), count, prec)
}

/// [`omega_sequence_mp`] at an extended-precision point.
pub fn omega_sequence_mp_at(mu: f64, a: f64, x: &BigFloat, count: usize, prec: u32) -> Vec<BigFloat> {
    let wp = prec + 16;
    if count == 0 {
        return Vec::new();
    }
    if count == 1 {
        return vec![omega_mp_shifted_at(mu, 0, a, x, prec)];
    }
    let mut out = vec![BigFloat::zero(wp); count];
    out[count - 1] = omega_mp_shifted_at(mu, count as i64 - 1, a, x, wp);
    out[count - 2] = omega_mp_shifted_at(mu, count as i64 - 2, a, x, wp);
    let (muf, af, xf) = (bf(mu, wp), bf(a, wp), x.with_prec(wp));
    for j in (0..count - 2).rev() {
        let c = &(&muf + &BigFloat::from_i64(j as i64 + 1, 64)) / &af;
        out[j] = &(&out[j + 2] + &(&c * &out[j + 1])) / &xf;
    }
    out.into_iter().map(|v| v.with_prec(prec)).collect()
}

/// rho_{nu,b}(x) to `prec` bits, nu > 0.
pub fn rho_mp(nu: f64, b: f64, x: f64, prec: u32) -> BigFloat {
    rho_mp_shifted(nu, 0, b, x, prec)
}

/// rho_{nu+j,b}(x) with the order nu + j formed exactly.
pub fn rho_mp_shifted(nu: f64, j: i64, b: f64, x: f64, prec: u32) -> BigFloat {
    rho_mp_shifted_at(nu, j, b, &bf(x, 64), prec)
}

/// [`rho_mp_shifted`] at an extended-precision point.
pub fn rho_mp_shifted_at(nu: f64, j: i64, b: f64, x: &BigFloat, prec: u32) -> BigFloat {
    let z = 2.0 * b * x.to_f64().sqrt();
    let sin_loss = if nu.fract() == 0.0 { 0.0 } else { -(crate::specfun::gamma::sin_pi(nu).abs().log2()) };
    let mut guard = 40 + (2.0 * z * std::f64::consts::LOG2_E) as u32 + sin_loss.max(0.0) as u32;
    loop {
        let wp = prec + guard;
        let (v, loss) = if nu.fract() == 0.0 { rho_integer(nu as i64 + j, b, x, wp) } else { rho_reflect(nu, j, b, x, wp) };
        if loss + 24 < guard as i64 {
            return v.with_prec(prec);
        }
        guard = (loss + 48) as u32;
    }
}

// returns (value, bits lost to cancellation)
fn rho_reflect(nu: f64, j: i64, b: f64, x: &BigFloat, wp: u32) -> (BigFloat, i64) {
    let (bb, xf) = (bf(b, wp), x.with_prec(wp));
    let nuf = &bf(nu, wp) + &BigFloat::from_i64(j, 64);
    let y = &(&bb * &bb) * &xf;
    let sm = ascending(&y, &(-&nuf), gamma_mp(nu, -1, 1 - j, wp).recip(), wp);
    let sp = ascending(&y, &nuf, gamma_mp(nu, 1, 1 + j, wp).recip(), wp);
    let bnu = bb.powf(&nuf);
    let big_a = &sm / &bnu;
    let big_b = &(&bnu * &xf.powf(&nuf)) * &sp;
    let diff = &big_a - &big_b;
    let top = big_a.abs().max_ref(&big_b.abs()).top_exp();
    let loss = if diff.is_zero() { wp as i64 } else { top - diff.top_exp() };
    let pref = &pi(wp) / &nuf.sin_pi().mul_pow2(1);
    (&pref * &diff, loss)
}

fn rho_integer(m: i64, b: f64, x: &BigFloat, wp: u32) -> (BigFloat, i64) {
    let (bb, xf) = (bf(b, wp), x.with_prec(wp));
    let y = &(&bb * &bb) * &xf;
    let one = BigFloat::one(wp);
    // finite part: (1/2) b^{-m} sum_{k<m} (m-k-1)!/k! (-y)^k
    let mut fin = BigFloat::zero(wp);
    if m > 0 {
        let mut fact_top = BigFloat::one(wp);
        for i in 1..m {
            fact_top = fact_top.mul_i64(i);
        }
        // term_k = (m-k-1)!/k! (-y)^k
        let mut term = fact_top;
        for k in 0..m {
            fin = &fin + &term;
            if k + 1 < m {
                term = -(&(&term * &y) / &BigFloat::from_i64((k + 1) * (m - k - 1), 64));
            }
        }
        fin = (&fin / &bb.powi(m)).mul_pow2(-1);
    }
    // series parts share y^k / (k! (m+k)!)
    let gamma_e = euler_gamma(wp);
    let mut fact_m = BigFloat::one(wp);
    for i in 2..=m {
        fact_m = fact_m.mul_i64(i);
    }
    let mut t = fact_m.recip();
    let mut hk = BigFloat::zero(wp);
    let mut hmk = BigFloat::zero(wp);
    for i in 1..=m {
        hmk = &hmk + &BigFloat::from_i64(i, 64).with_prec(wp).recip();
    }
    let mut s_plain = BigFloat::zero(wp);
    let mut s_psi = BigFloat::zero(wp);
    let mut peak = BigFloat::zero(wp);
    let stop = wp as i64 + 8;
    let yf = y.to_f64();
    for k in 0..1_000_000i64 {
        if k > 0 {
            t = &(&t * &y) / &BigFloat::from_i64(k * (m + k), 64);
            hk = &hk + &BigFloat::from_i64(k, 64).with_prec(wp).recip();
            hmk = &hmk + &BigFloat::from_i64(m + k, 64).with_prec(wp).recip();
        }
        let psi = &(&hk + &hmk) - &gamma_e.mul_pow2(1);
        s_plain = &s_plain + &t;
        let pt = &psi * &t;
        s_psi = &s_psi + &pt;
        if pt.abs() > peak {
            peak = pt.abs();
        }
        let kf = k as f64;
        if kf * (kf + m as f64) > yf && k > 2 && peak.top_exp() - pt.top_exp() > stop && peak.top_exp() - t.top_exp() > stop {
            break;
        }
    }
    let bxm = (&bb * &xf).powi(m);
    let ln_half_z = &bb.ln() + &xf.ln().mul_pow2(-1);
    let sgn = if m % 2 == 0 { one.clone() } else { -one.clone() };
    let log_part = -(&(&(&sgn * &ln_half_z) * &bxm) * &s_plain);
    let psi_part = (&(&sgn * &bxm) * &s_psi).mul_pow2(-1);
    let total = &(&fin + &log_part) + &psi_part;
    let top = fin.abs().max_ref(&log_part.abs()).max_ref(&psi_part.abs()).top_exp();
    let loss = if total.is_zero() { wp as i64 } else { top - total.top_exp() };
    (total, loss)
}

/// rho_{nu+j,b}(x), j < count, by upward recurrence.
pub fn rho_sequence_mp(nu: f64, b: f64, x: f64, count: usize, prec: u32) -> Vec<BigFloat> {
    rho_sequence_mp_at(nu, b, &bf(x, 64), count, prec)
}

/// [`rho_sequence_mp`] at an extended-precision point.
pub fn rho_sequence_mp_at(nu: f64, b: f64, x: &BigFloat, count: usize, prec: u32) -> Vec<BigFloat> {
    let wp = prec + 16;
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(rho_mp_shifted_at(nu, 0, b, x, wp));
    if count > 1 {
        out.push(rho_mp_shifted_at(nu, 1, b, x, wp));
    }
    let (nuf, bb, xf) = (bf(nu, wp), bf(b, wp), x.with_prec(wp));
    for j in 2..count {
        let c = &(&nuf + &BigFloat::from_i64(j as i64 - 1, 64)) / &bb;
        let v = &(&xf * &out[j - 2]) + &(&c * &out[j - 1]);
        out.push(v);
    }
    out.into_iter().map(|v| v.with_prec(prec)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::bessel::{omega, rho};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn omega_matches_double() {
        for (mu, a, x) in [(0.5, 1.0, 1.0), (0.0, 2.0, 0.7), (-0.6, 0.8, 3.0), (7.0, 1.0, 200.0)] {
            let v = omega_mp(mu, a, x, 128).to_f64();
            assert!(rel(v, omega(mu, a, x).unwrap().to_f64()) < 1e-14, "({mu},{a},{x})");
        }
    }

    #[test]
    fn rho_matches_double() {
        for (nu, b, x) in [(1.5, 2.0, 1.0), (1.0, 2.0, 1.0), (3.0, 1.5, 0.01), (0.3, 0.9, 20.0), (2.0, 1.6, 150.0), (1.0 + 1e-9, 1.0, 2.0), (12.5, 1.0, 0.4)] {
            let v = rho_mp(nu, b, x, 128).to_f64();
            let d = rho(nu, b, x).unwrap().to_f64();
            assert!(rel(v, d) < 2e-14, "({nu},{b},{x}): {v} vs {d}");
        }
    }

    #[test]
    fn precision_is_real() {
        // two working precisions agree far beyond double
        let lo = rho_mp(1.5, 2.0, 3.0, 200);
        let hi = rho_mp(1.5, 2.0, 3.0, 300);
        let d = (&lo - &hi.with_prec(200)).abs();
        assert!(d.is_zero() || lo.top_exp() - d.top_exp() > 190);
        let lo = rho_mp(2.0, 1.0, 0.5, 200);
        let hi = rho_mp(2.0, 1.0, 0.5, 300);
        let d = (&lo - &hi.with_prec(200)).abs();
        assert!(d.is_zero() || lo.top_exp() - d.top_exp() > 190);
    }

    #[test]
    fn sequences_consistent() {
        let w = omega_sequence_mp(0.5, 1.0, 2.0, 8, 160);
        let r = rho_sequence_mp(1.5, 2.0, 2.0, 8, 160);
        for j in 0..8 {
            assert!(rel(w[j].to_f64(), omega(0.5 + j as f64, 1.0, 2.0).unwrap().to_f64()) < 1e-14);
            assert!(rel(r[j].to_f64(), rho(1.5 + j as f64, 2.0, 2.0).unwrap().to_f64()) < 1e-14);
        }
    }
}
