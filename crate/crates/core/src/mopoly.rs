//! The linear forms Q_n and P_n and their polynomial coefficient pairs.
//!
//! Q_n = sum_j c_j omega_{mu+j,a} and P_n = sum_j d_j rho_{nu+j,b}. Each form
//! has a weight expansion, a determinant and (for Q) a double series; the
//! polynomial pairs give Q_n = A_1 omega_mu + A_2 omega_{mu+1} and
//! P_n = B_1 rho_nu + B_2 rho_{nu+1}.

use rayon::prelude::*;
use serde::Serialize;

use crate::bigfloat::BigFloat;
use crate::lommel::horner;
use crate::specfun::bessel_mp::gamma_mp;
use crate::specfun::gamma::{binomial, pochhammer};
use crate::specfun::{log_gamma_ratio, omega_sequence, omega_sequence_mp, rho_sequence, rho_sequence_mp, LogValue, Params, PrecisionConfig};
use crate::sum::{adaptive_mp, sum_mp, sum_scaled, NeumaierSum};
use crate::{Error, Result};

/// Q_n = sum_j coeffs[j] * omega_{mu+j,a}.
#[derive(Clone, Debug, Serialize)]
pub struct OmegaExpansion {
    pub params: Params,
    pub n: usize,
    pub coeffs: Vec<LogValue>,
}

/// P_n = sum_j coeffs[j] * rho_{nu+j,b}.
#[derive(Clone, Debug, Serialize)]
pub struct RhoExpansion {
    pub params: Params,
    pub n: usize,
    pub coeffs: Vec<LogValue>,
}

impl OmegaExpansion {
    pub fn values(&self) -> Vec<f64> {
        self.coeffs.iter().map(LogValue::to_f64).collect()
    }
}

impl RhoExpansion {
    pub fn values(&self) -> Vec<f64> {
        self.coeffs.iter().map(LogValue::to_f64).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PolyKind {
    A,
    B,
}

/// Monomial coefficients (constant first) of (A_{n,1}, A_{n,2}) or (B_{n,1}, B_{n,2}).
#[derive(Clone, Debug, Serialize)]
pub struct PolyPair {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub kind: PolyKind,
}

impl PolyPair {
    /// The first polynomial at x.
    pub fn first_at(&self, x: f64) -> f64 {
        horner(&self.first, x)
    }

    pub fn second_at(&self, x: f64) -> f64 {
        horner(&self.second, x)
    }

    /// first(x) w_0(x) + second(x) w_1(x) with the weights matching `kind`.
    pub fn reconstruct(&self, p: &Params, x: f64) -> Result<f64> {
        let (w0, w1) = match self.kind {
            PolyKind::A => {
                let w = omega_sequence(p.mu(), p.a(), x, 2)?;
                (w[0].to_f64(), w[1].to_f64())
            }
            PolyKind::B => {
                let w = rho_sequence(p.nu(), p.b(), x, 2)?;
                (w[0].to_f64(), w[1].to_f64())
            }
        };
        Ok(horner(&self.first, x) * w0 + horner(&self.second, x) * w1)
    }
}

/// c_n = 2 (b^2-a^2)^{mu+nu+1} / (a^mu b^nu Gamma(mu+nu+1+n) n!).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormalizationC {
    pub n: usize,
    pub value: LogValue,
}

fn sign_of(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_x(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("x = {x} must be positive and finite")))
    }
}

// (-1)^{n+j} C(n,j) Gamma(s+1+n)/Gamma(s+1+j) (gap/base)^j
fn form_coeffs(p: &Params, n: usize, base: f64) -> Vec<LogValue> {
    let s1 = p.sigma() + 1.0;
    let r = LogValue::from_f64(p.gap() / base);
    (0..=n)
        .map(|j| {
            let g = log_gamma_ratio(s1 + n as f64, s1 + j as f64).expect("s + 1 > 0");
            let c = LogValue::from_f64(sign_of(n + j) * binomial(n as u64, j as u64)) * g * r.powf(j as f64);
            c
        })
        .collect()
}

/// Coefficients of Q_n in the omega basis.
pub fn q_coeffs(p: &Params, n: usize) -> OmegaExpansion {
    OmegaExpansion { params: *p, n, coeffs: form_coeffs(p, n, p.a()) }
}

/// Coefficients of P_n in the rho basis.
pub fn p_coeffs(p: &Params, n: usize) -> RhoExpansion {
    let c = normalization_c(p, n).value;
    RhoExpansion { params: *p, n, coeffs: form_coeffs(p, n, p.b()).into_iter().map(|d| d * c).collect() }
}

pub fn normalization_c(p: &Params, n: usize) -> NormalizationC {
    let s1 = p.sigma() + 1.0;
    let num = LogValue::from_f64(p.gap()).powf(s1).scale_f64(2.0);
    let den = LogValue::from_f64(p.a()).powf(p.mu())
        * LogValue::from_f64(p.b()).powf(p.nu())
        * log_gamma_ratio(s1 + n as f64, 1.0).expect("positive argument")
        * log_gamma_ratio(n as f64 + 1.0, 1.0).expect("positive argument");
    NormalizationC { n, value: num / den }
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(v))
    }
}

fn dot_scaled(coeffs: &[LogValue], w: &[LogValue], compensated: bool) -> (f64, f64) {
    let terms: Vec<LogValue> = coeffs.iter().zip(w).map(|(c, w)| *c * *w).collect();
    let s = sum_scaled(&terms, compensated);
    (s.value.to_f64(), s.condition)
}

// exact b^2 - a^2 and the exact ratio gap / base
fn gap_mp(p: &Params, wp: u32) -> BigFloat {
    let (a, b) = (BigFloat::from_f64(p.a(), wp), BigFloat::from_f64(p.b(), wp));
    &(&b * &b) - &(&a * &a)
}

fn form_coeffs_mp(p: &Params, n: usize, base: f64, wp: u32) -> Vec<BigFloat> {
    let s1 = &(&BigFloat::from_f64(p.mu(), wp) + &BigFloat::from_f64(p.nu(), wp)) + &BigFloat::one(wp);
    let r = &gap_mp(p, wp) / &BigFloat::from_f64(base, wp);
    let mut rj = BigFloat::one(wp);
    let mut out = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let sj = &s1 + &BigFloat::from_u64(j as u64, 64);
        let c = &(&BigFloat::binomial(n as u64, j as u64, wp) * &sj.rising(n - j)) * &rj;
        out.push(if (n + j) % 2 == 0 { c } else { -c });
        rj = &rj * &r;
    }
    out
}

// 2 gap^{s+1} / (a^mu b^nu Gamma(s+1+n) n!)
fn normalization_mp(p: &Params, n: usize, wp: u32) -> BigFloat {
    let bf = |v: f64| BigFloat::from_f64(v, wp);
    let s1 = &(&bf(p.mu()) + &bf(p.nu())) + &BigFloat::one(wp);
    let num = gap_mp(p, wp).powf(&s1).mul_i64(2);
    let gs = &(&s1 + &BigFloat::from_u64(n as u64, 64)).gamma() * &BigFloat::from_u64(n as u64 + 1, 64).gamma();
    let den = &(&bf(p.a()).powf(&bf(p.mu())) * &bf(p.b()).powf(&bf(p.nu()))) * &gs;
    &num / &den
}

/// Coefficients of Q_n in the omega basis at `wp` bits.
pub fn q_coeffs_mp(p: &Params, n: usize, wp: u32) -> Vec<BigFloat> {
    form_coeffs_mp(p, n, p.a(), wp)
}

/// Coefficients of P_n in the rho basis at `wp` bits.
pub fn p_coeffs_mp(p: &Params, n: usize, wp: u32) -> Vec<BigFloat> {
    let c = normalization_mp(p, n, wp);
    form_coeffs_mp(p, n, p.b(), wp).iter().map(|d| d * &c).collect()
}

/// Q_n(x) in extended arithmetic, correct to about `bits` bits.
pub fn q_eval_mp(p: &Params, n: usize, x: f64, bits: u32) -> Result<BigFloat> {
    check_x(x)?;
    adaptive_mp(bits, |wp| {
        let c = form_coeffs_mp(p, n, p.a(), wp);
        let w = omega_sequence_mp(p.mu(), p.a(), x, n + 1, wp);
        let terms: Vec<BigFloat> = c.iter().zip(&w).map(|(c, w)| c * w).collect();
        Ok(sum_mp(&terms, wp))
    })
}

/// P_n(x) in extended arithmetic, correct to about `bits` bits.
pub fn p_eval_mp(p: &Params, n: usize, x: f64, bits: u32) -> Result<BigFloat> {
    check_x(x)?;
    let v = adaptive_mp(bits, |wp| {
        let c = form_coeffs_mp(p, n, p.b(), wp);
        let w = rho_sequence_mp(p.nu(), p.b(), x, n + 1, wp);
        let terms: Vec<BigFloat> = c.iter().zip(&w).map(|(c, w)| c * w).collect();
        Ok(sum_mp(&terms, wp))
    })?;
    Ok(&v * &normalization_mp(p, n, bits + 16))
}

/// Coefficient tables of Q_0..Q_nmax and P_0..P_nmax at `wp` bits, for
/// repeated evaluation with [`forms_upto_mp_at`].
pub fn form_tables_mp(p: &Params, nmax: usize, wp: u32) -> (Vec<Vec<BigFloat>>, Vec<Vec<BigFloat>>) {
    ((0..=nmax).map(|n| q_coeffs_mp(p, n, wp)).collect(), (0..=nmax).map(|n| p_coeffs_mp(p, n, wp)).collect())
}

/// Q_n(x) and P_n(x), n <= nmax, at an extended-precision point. The error
/// is absolute, about 2^-wp times the sum of |terms|.
pub fn forms_upto_mp_at(p: &Params, tables: &(Vec<Vec<BigFloat>>, Vec<Vec<BigFloat>>), x: &BigFloat, wp: u32) -> (Vec<BigFloat>, Vec<BigFloat>) {
    let count = tables.0.len();
    let w = crate::specfun::bessel_mp::omega_sequence_mp_at(p.mu(), p.a(), x, count, wp);
    let r = crate::specfun::bessel_mp::rho_sequence_mp_at(p.nu(), p.b(), x, count, wp);
    let dot = |c: &Vec<BigFloat>, v: &[BigFloat]| c.iter().zip(v).fold(BigFloat::zero(wp), |acc, (c, v)| &acc + &(c * v));
    (tables.0.iter().map(|c| dot(c, &w)).collect(), tables.1.iter().map(|c| dot(c, &r)).collect())
}

/// Q_n(x) with the default precision policy.
pub fn q_eval(p: &Params, n: usize, x: f64) -> Result<f64> {
    q_eval_with(p, n, x, &PrecisionConfig::default())
}

pub fn q_eval_with(p: &Params, n: usize, x: f64, cfg: &PrecisionConfig) -> Result<f64> {
    check_x(x)?;
    if !cfg.is_extended() {
        let w = omega_sequence(p.mu(), p.a(), x, n + 1)?;
        let (v, cond) = dot_scaled(&q_coeffs(p, n).coeffs, &w, cfg.sum_compensation);
        if !cfg.escalate(n, cond)? {
            return finite(v);
        }
    }
    finite(q_eval_mp(p, n, x, cfg.bits())?.to_f64())
}

/// P_n(x) with the default precision policy.
pub fn p_eval(p: &Params, n: usize, x: f64) -> Result<f64> {
    p_eval_with(p, n, x, &PrecisionConfig::default())
}

pub fn p_eval_with(p: &Params, n: usize, x: f64, cfg: &PrecisionConfig) -> Result<f64> {
    check_x(x)?;
    if !cfg.is_extended() {
        let w = rho_sequence(p.nu(), p.b(), x, n + 1)?;
        let (v, cond) = dot_scaled(&p_coeffs(p, n).coeffs, &w, cfg.sum_compensation);
        if !cfg.escalate(n, cond)? {
            return finite(v);
        }
    }
    finite(p_eval_mp(p, n, x, cfg.bits())?.to_f64())
}

/// (Q_n(x), sum_j |c_j omega_{mu+j}(x)|) for n = 0..=nmax.
pub fn q_eval_upto_scaled(p: &Params, nmax: usize, x: f64) -> Result<Vec<(f64, f64)>> {
    check_x(x)?;
    let w = omega_sequence(p.mu(), p.a(), x, nmax + 1)?;
    Ok((0..=nmax).map(|n| dot_with_scale(&q_coeffs(p, n).coeffs, &w[..=n])).collect())
}

/// (P_n(x), sum_j |d_j rho_{nu+j}(x)|) for n = 0..=nmax.
pub fn p_eval_upto_scaled(p: &Params, nmax: usize, x: f64) -> Result<Vec<(f64, f64)>> {
    check_x(x)?;
    let w = rho_sequence(p.nu(), p.b(), x, nmax + 1)?;
    Ok((0..=nmax).map(|n| dot_with_scale(&p_coeffs(p, n).coeffs, &w[..=n])).collect())
}

fn dot_with_scale(coeffs: &[LogValue], w: &[LogValue]) -> (f64, f64) {
    let terms: Vec<LogValue> = coeffs.iter().zip(w).map(|(c, w)| *c * *w).collect();
    let abs: Vec<LogValue> = terms.iter().map(LogValue::abs).collect();
    (sum_scaled(&terms, true).value.to_f64(), sum_scaled(&abs, false).value.to_f64())
}

/// Q_0(x) .. Q_nmax(x) as unbounded-range values, in compensated double
/// arithmetic without escalation.
pub fn q_eval_upto_log(p: &Params, nmax: usize, x: f64) -> Result<Vec<LogValue>> {
    check_x(x)?;
    let w = omega_sequence(p.mu(), p.a(), x, nmax + 1)?;
    Ok((0..=nmax).map(|n| dot_log(&q_coeffs(p, n).coeffs, &w[..=n])).collect())
}

/// P_0(x) .. P_nmax(x); see [`q_eval_upto_log`].
pub fn p_eval_upto_log(p: &Params, nmax: usize, x: f64) -> Result<Vec<LogValue>> {
    check_x(x)?;
    let w = rho_sequence(p.nu(), p.b(), x, nmax + 1)?;
    Ok((0..=nmax).map(|n| dot_log(&p_coeffs(p, n).coeffs, &w[..=n])).collect())
}

fn dot_log(coeffs: &[LogValue], w: &[LogValue]) -> LogValue {
    let terms: Vec<LogValue> = coeffs.iter().zip(w).map(|(c, w)| *c * *w).collect();
    sum_scaled(&terms, true).value
}

/// Q_0(x) .. Q_nmax(x) from one weight sequence, in compensated double
/// arithmetic without escalation. The error is absolute, of order
/// eps * sum_j |c_j omega_{mu+j}|, which is what quadrature needs.
pub fn q_eval_upto(p: &Params, nmax: usize, x: f64) -> Result<Vec<f64>> {
    check_x(x)?;
    let w = omega_sequence(p.mu(), p.a(), x, nmax + 1)?;
    Ok((0..=nmax).map(|n| dot_scaled(&q_coeffs(p, n).coeffs, &w[..=n], true).0).collect())
}

/// P_0(x) .. P_nmax(x); see [`q_eval_upto`].
pub fn p_eval_upto(p: &Params, nmax: usize, x: f64) -> Result<Vec<f64>> {
    check_x(x)?;
    let w = rho_sequence(p.nu(), p.b(), x, nmax + 1)?;
    Ok((0..=nmax).map(|n| dot_scaled(&p_coeffs(p, n).coeffs, &w[..=n], true).0).collect())
}

fn det_full_pivot(mut m: Vec<Vec<BigFloat>>) -> BigFloat {
    let k = m.len();
    let prec = m[0][0].prec();
    let mut det = BigFloat::one(prec);
    let mut cols: Vec<usize> = (0..k).collect();
    for step in 0..k {
        let (mut pr, mut pc) = (step, step);
        let mut best = BigFloat::zero(prec);
        for (r, row) in m.iter().enumerate().skip(step) {
            for c in step..k {
                let v = row[cols[c]].abs();
                if v > best {
                    best = v;
                    pr = r;
                    pc = c;
                }
            }
        }
        if best.is_zero() {
            return BigFloat::zero(prec);
        }
        if pr != step {
            m.swap(pr, step);
            det = -det;
        }
        if pc != step {
            cols.swap(pc, step);
            det = -det;
        }
        let piv = m[step][cols[step]].clone();
        det = &det * &piv;
        for r in step + 1..k {
            let f = &m[r][cols[step]] / &piv;
            if f.is_zero() {
                continue;
            }
            for c in step + 1..k {
                let t = &f * &m[step][cols[c]];
                m[r][cols[c]] = &m[r][cols[c]] - &t;
            }
        }
    }
    det
}

fn det_cap(cfg: &PrecisionConfig) -> usize {
    if cfg.is_extended() {
        30
    } else {
        10
    }
}

// evaluate at two working precisions until they agree to `bits`
fn stable_mp(bits: u32, f: impl Fn(u32) -> BigFloat) -> Result<BigFloat> {
    let mut wp = bits + 64;
    let mut prev = f(wp);
    for _ in 0..8 {
        wp += 96;
        let cur = f(wp);
        let diff = (&cur - &prev).abs();
        if diff.is_zero() || (!cur.is_zero() && cur.top_exp() - diff.top_exp() >= bits as i64 + 2) {
            return Ok(cur.with_prec(bits));
        }
        prev = cur;
    }
    Err(Error::PrecisionLoss { condition: f64::INFINITY, limit: PrecisionConfig::LOSS_LIMIT })
}

fn factorial_product(n: usize, wp: u32) -> BigFloat {
    (0..n).fold(BigFloat::one(wp), |acc, k| &acc * &BigFloat::from_u64(k as u64 + 1, 64).gamma())
}

/// Q_n(x) from the Hankel determinant of Gamma values with a last row of weights.
pub fn q_eval_determinant(p: &Params, n: usize, x: f64) -> Result<f64> {
    q_eval_determinant_with(p, n, x, &PrecisionConfig::default())
}

pub fn q_eval_determinant_with(p: &Params, n: usize, x: f64, cfg: &PrecisionConfig) -> Result<f64> {
    check_x(x)?;
    let cap = det_cap(cfg);
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    let bits = if cfg.is_extended() { cfg.bits() } else { 64 };
    let v = stable_mp(bits, |wp| {
        let s1 = &(&BigFloat::from_f64(p.mu(), wp) + &BigFloat::from_f64(p.nu(), wp)) + &BigFloat::one(wp);
        let r = &gap_mp(p, wp) / &BigFloat::from_f64(p.a(), wp);
        let w = omega_sequence_mp(p.mu(), p.a(), x, n + 1, wp);
        // row r scaled by 1/Gamma(s+1+r) holds (s+1+r)_k
        let mut m: Vec<Vec<BigFloat>> = (0..n)
            .map(|row| {
                let base = &s1 + &BigFloat::from_u64(row as u64, 64);
                (0..=n).map(|k| base.rising(k)).collect()
            })
            .collect();
        let mut rk = BigFloat::one(wp);
        let mut last = Vec::with_capacity(n + 1);
        for wk in &w {
            last.push(&rk * wk);
            rk = &rk * &r;
        }
        m.push(last);
        &det_full_pivot(m) / &factorial_product(n, wp)
    })?;
    Ok(v.to_f64())
}

/// P_n(x) from the determinant with a last column of weights.
pub fn p_eval_determinant(p: &Params, n: usize, x: f64) -> Result<f64> {
    p_eval_determinant_with(p, n, x, &PrecisionConfig::default())
}

pub fn p_eval_determinant_with(p: &Params, n: usize, x: f64, cfg: &PrecisionConfig) -> Result<f64> {
    check_x(x)?;
    let cap = det_cap(cfg);
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    let bits = if cfg.is_extended() { cfg.bits() } else { 64 };
    let v = stable_mp(bits, |wp| {
        let s1 = &(&BigFloat::from_f64(p.mu(), wp) + &BigFloat::from_f64(p.nu(), wp)) + &BigFloat::one(wp);
        let r = &gap_mp(p, wp) / &BigFloat::from_f64(p.b(), wp);
        let w = rho_sequence_mp(p.nu(), p.b(), x, n + 1, wp);
        let mut rk = BigFloat::one(wp);
        let m: Vec<Vec<BigFloat>> = (0..=n)
            .map(|row| {
                let base = &s1 + &BigFloat::from_u64(row as u64, 64);
                let mut line: Vec<BigFloat> = (0..n).map(|k| base.rising(k)).collect();
                line.push(&(&rk * &w[row]) / &s1.rising(row));
                rk = &rk * &r;
                line
            })
            .collect();
        // c_n Gamma(s+1+n) / Gamma(s+1) collects the row scalings
        let pre = &(&normalization_mp(p, n, wp) * &(&s1 + &BigFloat::from_u64(n as u64, 64)).gamma()) / &s1.gamma();
        &(&det_full_pivot(m) * &pre) / &factorial_product(n, wp)
    })?;
    Ok(v.to_f64())
}

const SERIES_MAX_TERMS: usize = 10_000;

/// Q_n(x) from the double power series in a^2 x and (b^2-a^2) x.
pub fn q_eval_series(p: &Params, n: usize, x: f64) -> Result<f64> {
    q_eval_series_with(p, n, x, &PrecisionConfig::default())
}

pub fn q_eval_series_with(p: &Params, n: usize, x: f64, cfg: &PrecisionConfig) -> Result<f64> {
    check_x(x)?;
    if !cfg.is_extended() {
        let (v, cond) = series_double(p, n, x)?;
        if !cfg.escalate(n, cond)? {
            return Ok(v);
        }
    }
    Ok(series_mp(p, n, x, cfg.bits())?.to_f64())
}

fn series_double(p: &Params, n: usize, x: f64) -> Result<(f64, f64)> {
    let (mu, a) = (p.mu(), p.a());
    let y = a * a * x;
    let z = p.gap() * x;
    // t_{0,j} = (-n)_j z^j / (j! (mu+1)_j (s+1)_j)
    let s1 = p.sigma() + 1.0;
    let mut row: Vec<f64> = (0..=n)
        .map(|j| sign_of(j) * binomial(n as u64, j as u64) * z.powi(j as i32) / (pochhammer(mu + 1.0, j as u32) * pochhammer(s1, j as u32)))
        .collect();
    let mut acc = NeumaierSum::new();
    for t in &row {
        acc.add(*t);
    }
    let mut k = 1usize;
    loop {
        let kf = k as f64;
        let mut row_abs = 0.0;
        for (j, t) in row.iter_mut().enumerate() {
            *t *= y / (kf * (mu + j as f64 + kf));
            acc.add(*t);
            row_abs += t.abs();
        }
        if y < 0.5 * kf * (mu + kf + 1.0) && row_abs <= 1e-20 * acc.abs_sum() {
            break;
        }
        k += 1;
        if k > SERIES_MAX_TERMS {
            return Err(Error::NonConvergence(format!("double series for Q_{n} at x = {x}")));
        }
    }
    let pre = sign_of(n) * (a * x).powf(mu) * pochhammer(s1, n as u32) / crate::specfun::gamma::gamma(mu + 1.0);
    Ok((pre * acc.value(), acc.condition()))
}

fn series_mp(p: &Params, n: usize, x: f64, bits: u32) -> Result<BigFloat> {
    let v = adaptive_mp(bits, |wp| {
        let bf = |v: f64| BigFloat::from_f64(v, wp);
        let (mu, a, xb) = (bf(p.mu()), bf(p.a()), bf(x));
        let mu1 = &mu + &BigFloat::one(wp);
        let s1 = &(&mu + &bf(p.nu())) + &BigFloat::one(wp);
        let y = &(&a * &a) * &xb;
        let z = &gap_mp(p, wp) * &xb;
        let mut row: Vec<BigFloat> = Vec::with_capacity(n + 1);
        let mut zj = BigFloat::one(wp);
        for j in 0..=n {
            let t = &(&zj * &BigFloat::binomial(n as u64, j as u64, wp)) / &(&mu1.rising(j) * &s1.rising(j));
            row.push(if j % 2 == 0 { t } else { -t });
            zj = &zj * &z;
        }
        let mut terms = row.clone();
        let yf = y.to_f64();
        let mut k = 1usize;
        loop {
            let mut row_top = i64::MIN;
            for (j, t) in row.iter_mut().enumerate() {
                let den = &(&mu + &BigFloat::from_u64((j + k) as u64, 64)) * &BigFloat::from_u64(k as u64, 64);
                *t = &(&*t * &y) / &den;
                if !t.is_zero() {
                    row_top = row_top.max(t.top_exp());
                }
                terms.push(t.clone());
            }
            let kf = k as f64;
            let peak = terms.iter().filter(|t| !t.is_zero()).map(|t| t.top_exp()).max().unwrap_or(0);
            if yf < 0.5 * kf * (p.mu() + kf + 1.0) && (row_top == i64::MIN || peak - row_top > wp as i64 + 8) {
                break;
            }
            k += 1;
            if k > SERIES_MAX_TERMS {
                return Err(Error::NonConvergence(format!("double series for Q_{n} at x = {x}")));
            }
        }
        Ok(sum_mp(&terms, wp))
    })?;
    let wp = bits + 16;
    let bf = |v: f64| BigFloat::from_f64(v, wp);
    let s1 = &(&bf(p.mu()) + &bf(p.nu())) + &BigFloat::one(wp);
    let pre = &(&(&bf(p.a()) * &bf(x)).powf(&bf(p.mu())) * &s1.rising(n)) / &gamma_mp(p.mu(), 1, 1, wp);
    let v = &v * &pre;
    Ok(if n % 2 == 0 { v } else { -v })
}

fn check_pair_degree(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParams("polynomial pairs are defined for n >= 1".into()));
    }
    Ok(())
}

// inner sums of the pair formulas with order base `order` and ratio r;
// scale(j) supplies the j-dependent Gamma factor
fn pair_sums(n: usize, order: f64, r: f64, scale: impl Fn(usize) -> f64) -> (Vec<f64>, Vec<f64>) {
    let bin = |m: i64, k: i64| if m < 0 || k < 0 || k > m { 0.0 } else { binomial(m as u64, k as u64) };
    let first = (0..=n / 2)
        .map(|i| {
            if i == 0 {
                return scale(0);
            }
            let mut acc = NeumaierSum::new();
            for j in 2 * i..=n {
                acc.add(bin(n as i64, j as i64) * bin(j as i64 - i as i64 - 1, i as i64 - 1) * pochhammer(order + i as f64 + 1.0, (j - 2 * i) as u32) * scale(j) * r.powi(j as i32));
            }
            acc.value()
        })
        .collect();
    let second = (0..=(n - 1) / 2)
        .map(|i| {
            let mut acc = NeumaierSum::new();
            for j in 2 * i + 1..=n {
                acc.add(bin(n as i64, j as i64) * bin(j as i64 - i as i64 - 1, i as i64) * pochhammer(order + i as f64 + 1.0, (j - 2 * i - 1) as u32) * scale(j) * r.powi(j as i32));
            }
            acc.value()
        })
        .collect();
    (first, second)
}

/// A_{n,1} and A_{n,2} with Q_n = A_{n,1} omega_mu + A_{n,2} omega_{mu+1}.
pub fn a_polys(p: &Params, n: usize) -> Result<PolyPair> {
    check_pair_degree(n)?;
    let (a, s1) = (p.a(), p.sigma() + 1.0);
    let r = p.gap() / (a * a);
    // Gamma(s+1+n)/Gamma(s+1+j)
    let (f, g) = pair_sums(n, p.mu(), r, |j| pochhammer(s1 + j as f64, (n - j) as u32));
    let sg = sign_of(n);
    let first = f.iter().enumerate().map(|(i, v)| sg * a.powi(2 * i as i32) * v).collect();
    let second = g.iter().enumerate().map(|(i, v)| -sg * a * a.powi(2 * i as i32) * v).collect();
    Ok(PolyPair { first, second, kind: PolyKind::A })
}

/// B_{n,1} and B_{n,2} with P_n = B_{n,1} rho_nu + B_{n,2} rho_{nu+1}.
pub fn b_polys(p: &Params, n: usize) -> Result<PolyPair> {
    check_pair_degree(n)?;
    let (b, s1) = (p.b(), p.sigma() + 1.0);
    let r = -p.gap() / (b * b);
    let c = normalization_c(p, n).value.to_f64();
    // 2 gap^{s+1} / (a^mu b^nu n! Gamma(s+1+j)) = c_n Gamma(s+1+n)/Gamma(s+1+j)
    let (f, g) = pair_sums(n, p.nu(), r, |j| c * pochhammer(s1 + j as f64, (n - j) as u32));
    let sg = sign_of(n);
    let first = f.iter().enumerate().map(|(i, v)| sg * b.powi(2 * i as i32) * v).collect();
    let second = g.iter().enumerate().map(|(i, v)| sg * b * b.powi(2 * i as i32) * v).collect();
    Ok(PolyPair { first, second, kind: PolyKind::B })
}

/// Sign changes of Q_n located on a log grid and refined by bisection.
#[derive(Clone, Debug, Serialize)]
pub struct SignChanges {
    pub count: usize,
    pub roots: Vec<f64>,
    pub window: (f64, f64),
}

const SCAN_POINTS: usize = 2048;

/// Counts the sign changes of Q_n on (0, inf).
///
/// Below the window Q_n keeps the sign (-1)^n of its small-x asymptote; the
/// window is extended geometrically until a stretch without changes follows
/// the last root.
pub fn q_sign_changes(p: &Params, n: usize) -> Result<SignChanges> {
    let cfg = PrecisionConfig { mantissa_bits: 80, ..PrecisionConfig::default() };
    let sign = |x: f64| -> Result<i8> {
        let v = match q_eval_with(p, n, x, &cfg) {
            // far out only the sign matters
            Err(Error::Overflow(v)) => v,
            r => r?,
        };
        if v == 0.0 {
            return Err(Error::NonConvergence(format!("Q_{n} vanishes on scan node x = {x}")));
        }
        Ok(if v > 0.0 { 1 } else { -1 })
    };
    let x_lo = 1e-4 / ((n as f64 + 1.0) * p.gap());
    let spread = 3.0 * (n as f64 + p.mu() + p.nu()) / p.decay_rate();
    let x_hi = (spread * spread).max(100.0 * x_lo);
    if sign(x_lo)? != sign_of(n) as i8 {
        return Err(Error::NonConvergence(format!("Q_{n} has left its small-x asymptote at x = {x_lo}")));
    }
    let mut roots = Vec::new();
    let mut lo = x_lo;
    let mut hi = x_hi;
    let mut points = SCAN_POINTS;
    for _ in 0..12 {
        let grid: Vec<f64> = (0..=points).map(|i| lo * (hi / lo).powf(i as f64 / points as f64)).collect();
        let signs: Vec<i8> = grid.par_iter().map(|&x| sign(x)).collect::<Result<_>>()?;
        let found: Vec<(f64, f64, i8)> = (0..points).filter(|&i| signs[i] != signs[i + 1]).map(|i| (grid[i], grid[i + 1], signs[i])).collect();
        let refined: Vec<f64> = found.par_iter().map(|&(l, h, sl)| bisect(&sign, l, h, sl)).collect::<Result<_>>()?;
        let quiet = refined.is_empty();
        roots.extend(refined);
        if quiet && lo > x_lo {
            break;
        }
        lo = hi;
        hi *= 16.0;
        points = 256;
    }
    Ok(SignChanges { count: roots.len(), roots, window: (x_lo, hi) })
}

fn bisect(sign: &(impl Fn(f64) -> Result<i8> + Sync), mut l: f64, mut h: f64, sl: i8) -> Result<f64> {
    while h - l > 1e-13 * h {
        let m = (l * h).sqrt();
        if sign(m)? == sl {
            l = m;
        } else {
            h = m;
        }
    }
    Ok((l * h).sqrt())
}
