//! The five-term recurrences x Q_n = sum_i a_{i,n} Q_{n+i} and
//! x P_n = sum_i b_{i,n} P_{n+i}, i in -2..=2, with forward evaluation and
//! residual checks against the direct formulas.

use serde::Serialize;

use crate::mopoly::{p_eval_upto_scaled, p_eval_with, q_eval_upto_scaled, q_eval_with};
use crate::quad::{integrate_half_line_noisy, x_seed, QuadConfig};
use crate::specfun::{Params, PrecisionConfig};
use crate::{Error, Result};

/// Coefficients of the forms n+2, n+1, n, n-1, n-2 in x F_n.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RecurrenceCoeffs {
    pub n: usize,
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
    pub am1: f64,
    pub am2: f64,
}

impl RecurrenceCoeffs {
    /// Coefficient of F_{n+i}, i in -2..=2.
    pub fn get(&self, i: i32) -> f64 {
        match i {
            2 => self.a2,
            1 => self.a1,
            0 => self.a0,
            -1 => self.am1,
            -2 => self.am2,
            _ => 0.0,
        }
    }
}

/// a_{i,n} for Q_n.
pub fn q_recurrence_coeffs(p: &Params, n: usize) -> RecurrenceCoeffs {
    let (mu, nu) = (p.mu(), p.nu());
    let s = mu + nu;
    let gap = p.gap();
    let ra = (p.a() / gap).powi(2);
    let rb = (p.b() / gap).powi(2);
    let nf = n as f64;
    RecurrenceCoeffs {
        n,
        a2: ra,
        a1: 2.0 * (s + 2.0 * nf + 2.0) * ra + (mu + nf + 1.0) / gap,
        a0: (6.0 * nf * nf + 6.0 * (s + 1.0) * nf + (s + 1.0) * (s + 2.0)) * ra
            + (3.0 * nf * nf + (4.0 * mu + 2.0 * nu + 3.0) * nf + (mu + 1.0) * (s + 1.0)) / gap,
        am1: nf * (s + nf) * (2.0 * (s + 2.0 * nf) * rb - (nu + nf) / gap),
        am2: (nf - 1.0) * nf * (s + nf - 1.0) * (s + nf) * rb,
    }
}

/// b_{i,n} = a_{-i,n+i} for P_n; coefficients reaching below index 0 vanish.
pub fn p_recurrence_coeffs(p: &Params, n: usize) -> RecurrenceCoeffs {
    let a = |m: isize, i: i32| if m < 0 { 0.0 } else { q_recurrence_coeffs(p, m as usize).get(i) };
    let n = n as isize;
    RecurrenceCoeffs { n: n as usize, a2: a(n + 2, -2), a1: a(n + 1, -1), a0: a(n, 0), am1: a(n - 1, 1), am2: a(n - 2, 2) }
}

/// |x F_n - sum_i c_i F_{n+i}| next to the largest term it is made of.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Residual {
    pub n: usize,
    pub x: f64,
    pub residual: f64,
    pub max_term: f64,
}

impl Residual {
    pub fn relative(&self) -> f64 {
        if self.max_term == 0.0 {
            self.residual
        } else {
            self.residual / self.max_term
        }
    }
}

fn residual(n: usize, x: f64, c: &RecurrenceCoeffs, eval: impl Fn(usize) -> Result<f64>) -> Result<Residual> {
    let mut terms = vec![x * eval(n)?];
    for i in -2..=2i32 {
        let m = n as isize + i as isize;
        if m >= 0 && c.get(i) != 0.0 {
            terms.push(-c.get(i) * eval(m as usize)?);
        }
    }
    let max_term = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let mut acc = crate::sum::NeumaierSum::new();
    terms.iter().for_each(|t| acc.add(*t));
    Ok(Residual { n, x, residual: acc.value().abs(), max_term })
}

/// Residual of the Q recurrence at x with every Q_m evaluated directly.
pub fn q_residual(p: &Params, n: usize, x: f64, cfg: &PrecisionConfig) -> Result<Residual> {
    residual(n, x, &q_recurrence_coeffs(p, n), |m| q_eval_with(p, m, x, cfg))
}

/// Residual of the P recurrence at x with every P_m evaluated directly.
pub fn p_residual(p: &Params, n: usize, x: f64, cfg: &PrecisionConfig) -> Result<Residual> {
    residual(n, x, &p_recurrence_coeffs(p, n), |m| p_eval_with(p, m, x, cfg))
}

/// Forward recursion output with a propagated absolute error bound per entry.
#[derive(Clone, Debug, Serialize)]
pub struct ForwardRun {
    pub values: Vec<f64>,
    pub error_bound: Vec<f64>,
}

impl ForwardRun {
    /// error_bound / (eps |value|) per entry: how far the recursion amplified rounding.
    pub fn growth(&self) -> Vec<f64> {
        self.values.iter().zip(&self.error_bound).map(|(v, e)| e / (f64::EPSILON * v.abs())).collect()
    }
}

/// Largest amplification of rounding tolerated by the forward recursion.
pub const FORWARD_GROWTH_LIMIT: f64 = 1e10;

fn forward(n_max: usize, x: f64, start: [(f64, f64); 2], coeffs: impl Fn(usize) -> RecurrenceCoeffs) -> Result<ForwardRun> {
    let eps = f64::EPSILON;
    let mut v = vec![start[0].0];
    let mut e = vec![eps * start[0].1];
    if n_max >= 1 {
        v.push(start[1].0);
        e.push(eps * start[1].1);
    }
    for n in 0..n_max.saturating_sub(1) {
        let c = coeffs(n);
        let at = |k: isize, src: &Vec<f64>| if k < 0 { 0.0 } else { src[k as usize] };
        let k = n as isize;
        let terms = [(x - c.a0) * v[n], -c.a1 * v[n + 1], -c.am1 * at(k - 1, &v), -c.am2 * at(k - 2, &v)];
        let val = terms.iter().sum::<f64>() / c.a2;
        let abs: f64 = terms.iter().map(|t| t.abs()).sum();
        let prop = (x - c.a0).abs() * e[n] + c.a1.abs() * e[n + 1] + c.am1.abs() * at(k - 1, &e) + c.am2.abs() * at(k - 2, &e);
        let err = (prop + 4.0 * eps * abs) / c.a2.abs() + eps * val.abs();
        if !(err <= FORWARD_GROWTH_LIMIT * eps * val.abs()) {
            return Err(Error::PrecisionLoss { condition: err / (eps * val.abs()), limit: FORWARD_GROWTH_LIMIT });
        }
        v.push(val);
        e.push(err);
    }
    Ok(ForwardRun { values: v, error_bound: e })
}

/// Q_0(x)..Q_{n_max}(x) by forward recursion from the direct Q_0 and Q_1.
pub fn q_forward(p: &Params, n_max: usize, x: f64) -> Result<Vec<f64>> {
    Ok(q_forward_run(p, n_max, x)?.values)
}

pub fn q_forward_run(p: &Params, n_max: usize, x: f64) -> Result<ForwardRun> {
    let s = q_eval_upto_scaled(p, n_max.min(1), x)?;
    let start = [s[0], *s.last().unwrap()];
    forward(n_max, x, start, |n| q_recurrence_coeffs(p, n))
}

/// P_0(x)..P_{n_max}(x) by forward recursion from the direct P_0 and P_1.
pub fn p_forward(p: &Params, n_max: usize, x: f64) -> Result<Vec<f64>> {
    Ok(p_forward_run(p, n_max, x)?.values)
}

pub fn p_forward_run(p: &Params, n_max: usize, x: f64) -> Result<ForwardRun> {
    let s = p_eval_upto_scaled(p, n_max.min(1), x)?;
    let start = [s[0], *s.last().unwrap()];
    forward(n_max, x, start, |n| p_recurrence_coeffs(p, n))
}

/// int_0^inf x Q_n P_m by quadrature; equals a_{m-n,n} and b_{n-m,m}.
pub fn moment_xqp(p: &Params, n: usize, m: usize, cfg: &QuadConfig) -> Result<f64> {
    let top = n.max(m);
    let f = |x: f64| -> Result<(Vec<f64>, Vec<f64>)> {
        let q = q_eval_upto_scaled(p, n, x)?[n];
        let pm = p_eval_upto_scaled(p, m, x)?[m];
        Ok((vec![x * q.0 * pm.0], vec![x * f64::EPSILON * (q.1 * pm.0.abs() + q.0.abs() * pm.1)]))
    };
    Ok(integrate_half_line_noisy(&f, 1, p.decay_rate(), x_seed(p, top + 2), cfg)?[0])
}
