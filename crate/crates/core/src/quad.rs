//! Quadrature on (0, inf) for integrands decaying like e^{-c sqrt x}, the
//! closed-form weight moments and the biorthogonality matrices.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::bigfloat::BigFloat;
use crate::mopoly::{form_tables_mp, forms_upto_mp_at, p_eval_upto_scaled, q_eval_upto_scaled};
use crate::specfun::{log_gamma_ratio, LogValue, Params};
use crate::sum::{sum_mp, NeumaierSum};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Gauss nodes per panel.
    pub panel_order: usize,
    pub max_doublings: u32,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { rel_tol: 1e-10, abs_tol: 1e-14, panel_order: 40, max_doublings: 30 }
    }
}

impl QuadConfig {
    fn check(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || self.panel_order < 4 || !(self.abs_tol >= 0.0) {
            return Err(Error::InvalidParams(format!("bad quadrature config {self:?}")));
        }
        Ok(())
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], cached per order.
pub fn gauss_legendre(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&n) {
        return r.clone();
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    let r = Arc::new((x, w));
    cache.lock().unwrap().insert(n, r.clone());
    r
}

/// Integrand values with an absolute rounding-noise level per component.
pub type NoisyIntegrand<'a> = dyn Fn(f64) -> Result<(Vec<f64>, Vec<f64>)> + Sync + 'a;

struct Panel {
    value: Vec<f64>,
    abs: Vec<f64>,
    noise: Vec<f64>,
}

// Gauss sums over [lo, hi] of g, |g| and the reported noise
fn panel(g: &NoisyIntegrand, dim: usize, lo: f64, hi: f64, order: usize) -> Result<Panel> {
    let gl = gauss_legendre(order);
    let (half, mid) = (0.5 * (hi - lo), 0.5 * (hi + lo));
    let mut acc = vec![NeumaierSum::new(); dim];
    let mut noise = vec![0.0; dim];
    for (t, w) in gl.0.iter().zip(&gl.1) {
        let (v, e) = g(mid + half * t)?;
        if v.len() != dim || e.len() != dim {
            return Err(Error::Dimension(format!("integrand returned {} values, expected {dim}", v.len())));
        }
        for i in 0..dim {
            acc[i].add(w * half * v[i]);
            noise[i] += w * half * e[i];
        }
    }
    Ok(Panel { value: acc.iter().map(NeumaierSum::value).collect(), abs: acc.iter().map(NeumaierSum::abs_sum).collect(), noise })
}

// accumulated value, |value| mass and noise over panels
struct Totals {
    value: Vec<NeumaierSum>,
    abs: Vec<f64>,
    noise: Vec<f64>,
}

impl Totals {
    fn new(dim: usize) -> Self {
        Totals { value: vec![NeumaierSum::new(); dim], abs: vec![0.0; dim], noise: vec![0.0; dim] }
    }

    fn add(&mut self, p: &Panel) {
        for i in 0..self.abs.len() {
            self.value[i].add(p.value[i]);
            self.abs[i] += p.abs[i];
            self.noise[i] += p.noise[i];
        }
    }

    // a contribution below this is negligible for component i
    fn negligible(&self, i: usize, cfg: &QuadConfig) -> f64 {
        cfg.abs_tol + cfg.rel_tol * self.value[i].value().abs() + self.floor(i)
    }

    fn floor(&self, i: usize) -> f64 {
        64.0 * f64::EPSILON * self.abs[i] + 16.0 * self.noise[i]
    }
}

const GRADED_LEVELS: i32 = 40;
const MAX_GRADED_LEVELS: i32 = 1000;
const BATCH: usize = 8;

// integral over u in [0, inf) of g with uniform panels of width h beyond a
// geometrically graded first panel
fn march(g: &NoisyIntegrand, dim: usize, c: f64, h: f64, u_seed: f64, cfg: &QuadConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut tot = Totals::new(dim);
    // graded panels [h 2^{-k-1}, h 2^{-k}] until they stop contributing
    let mut level = 0i32;
    loop {
        let spans: Vec<(f64, f64)> = (level..level + BATCH as i32).map(|k| (h * 0.5f64.powi(k + 1), h * 0.5f64.powi(k))).collect();
        let parts: Vec<Panel> = spans.par_iter().map(|&(l, r)| panel(g, dim, l, r, cfg.panel_order)).collect::<Result<_>>()?;
        parts.iter().for_each(|p| tot.add(p));
        level += BATCH as i32;
        let last = &parts[BATCH - 1].abs;
        let small = (0..dim).all(|i| last[i] <= 1e-3 * tot.negligible(i, cfg));
        if (small && level >= GRADED_LEVELS) || level >= MAX_GRADED_LEVELS {
            break;
        }
    }
    tot.add(&panel(g, dim, 0.0, h * 0.5f64.powi(level), cfg.panel_order)?);
    let u_max = u_seed * 2f64.powi(cfg.max_doublings as i32);
    let geometric = 1.0 / (1.0 - (-c * h).exp()).max(1e-3);
    let mut k = 1usize;
    let mut quiet = 0;
    loop {
        let batch: Vec<Panel> = (k..k + BATCH).into_par_iter().map(|j| panel(g, dim, j as f64 * h, (j + 1) as f64 * h, cfg.panel_order)).collect::<Result<_>>()?;
        for p in &batch {
            tot.add(p);
            k += 1;
            // remaining tail bounded by a geometric series of this panel's mass
            let small = (0..dim).all(|i| p.abs[i] * geometric <= 0.01 * tot.negligible(i, cfg));
            quiet = if small { quiet + 1 } else { 0 };
        }
        if quiet >= 3 && k as f64 * h >= u_seed {
            break;
        }
        if k as f64 * h > u_max {
            return Err(Error::NonConvergence(format!("integrand not negligible at u = {}", k as f64 * h)));
        }
    }
    Ok((tot.value.iter().map(NeumaierSum::value).collect(), (0..dim).map(|i| tot.floor(i)).collect()))
}

/// Vector integral over (0, inf) of f, whose components decay like
/// e^{-decay_rate sqrt x}.
///
/// Runs on u = sqrt x with panel width halved until two widths agree per
/// component to rel_tol, abs_tol, or the rounding floor 64 eps * int |f_i|.
pub fn integrate_half_line_vec(
    f: &(dyn Fn(f64) -> Result<Vec<f64>> + Sync),
    dim: usize,
    decay_rate: f64,
    x_seed: f64,
    cfg: &QuadConfig,
) -> Result<Vec<f64>> {
    integrate_half_line_noisy(&|x| Ok((f(x)?, vec![0.0; dim])), dim, decay_rate, x_seed, cfg)
}

/// As [`integrate_half_line_vec`] for an integrand that also reports the
/// absolute rounding noise of each component; the integrated noise widens
/// the stability test.
pub fn integrate_half_line_noisy(f: &NoisyIntegrand, dim: usize, decay_rate: f64, x_seed: f64, cfg: &QuadConfig) -> Result<Vec<f64>> {
    Ok(half_line_with_floor(f, dim, decay_rate, x_seed, cfg)?.0)
}

fn first_width(decay_rate: f64, x_seed: f64) -> (f64, f64) {
    let u_seed = x_seed.max(1e-300).sqrt().max(8.0 / decay_rate);
    (u_seed, (u_seed / 8.0).min(2.0 / decay_rate))
}

// values and their rounding floors
fn half_line_with_floor(f: &NoisyIntegrand, dim: usize, decay_rate: f64, x_seed: f64, cfg: &QuadConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.check()?;
    if !(decay_rate > 0.0) {
        return Err(Error::InvalidParams(format!("decay rate {decay_rate} must be positive")));
    }
    let g = |u: f64| -> Result<(Vec<f64>, Vec<f64>)> {
        let (mut v, mut e) = f(u * u)?;
        for (vi, ei) in v.iter_mut().zip(&mut e) {
            *vi *= 2.0 * u;
            *ei *= 2.0 * u;
        }
        Ok((v, e))
    };
    let (u_seed, mut h) = first_width(decay_rate, x_seed);
    let (mut prev, _) = march(&g, dim, decay_rate, h, u_seed, cfg)?;
    for _ in 0..8 {
        h *= 0.5;
        let (cur, mass) = march(&g, dim, decay_rate, h, u_seed, cfg)?;
        let ok = (0..dim).all(|i| (cur[i] - prev[i]).abs() <= cfg.abs_tol + cfg.rel_tol * cur[i].abs() + mass[i]);
        if ok {
            return Ok((cur, mass));
        }
        prev = cur;
    }
    Err(Error::NonConvergence("panel halving did not settle".into()))
}

/// Integral over (0, inf) of a scalar f decaying like e^{-decay_rate sqrt x}.
pub fn integrate_half_line(f: impl Fn(f64) -> f64 + Sync, decay_rate: f64, cfg: &QuadConfig) -> Result<f64> {
    let seed = (8.0 / decay_rate).powi(2);
    Ok(integrate_half_line_vec(&|x| Ok(vec![f(x)]), 1, decay_rate, seed, cfg)?[0])
}

/// Integral over [lo, hi] of a smooth f, halving the panel width until stable.
pub fn integrate_interval(f: impl Fn(f64) -> f64 + Sync, lo: f64, hi: f64, cfg: &QuadConfig) -> Result<f64> {
    cfg.check()?;
    let g = |x: f64| Ok((vec![f(x)], vec![0.0]));
    let run = |panels: usize| -> Result<(f64, f64)> {
        let w = (hi - lo) / panels as f64;
        let parts: Vec<Panel> = (0..panels).into_par_iter().map(|k| panel(&g, 1, lo + k as f64 * w, lo + (k + 1) as f64 * w, cfg.panel_order)).collect::<Result<_>>()?;
        let mut tot = Totals::new(1);
        parts.iter().for_each(|p| tot.add(p));
        Ok((tot.value[0].value(), tot.floor(0)))
    };
    let mut panels = 1usize;
    let (mut prev, _) = run(panels)?;
    for _ in 0..cfg.max_doublings.min(20) {
        panels *= 2;
        let (cur, mass) = run(panels)?;
        if (cur - prev).abs() <= cfg.abs_tol + cfg.rel_tol * cur.abs() + mass {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NonConvergence(format!("interval [{lo}, {hi}] did not settle")))
}

/// Gauss-Legendre rule on [-1, 1] refined to `wp` bits by Newton steps.
pub fn gauss_legendre_mp(n: usize, wp: u32) -> Arc<(Vec<BigFloat>, Vec<BigFloat>)> {
    type Rule = Arc<(Vec<BigFloat>, Vec<BigFloat>)>;
    static CACHE: OnceLock<Mutex<HashMap<(usize, u32), Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&(n, wp)) {
        return r.clone();
    }
    let seed = gauss_legendre(n);
    let one = BigFloat::one(wp);
    // (P_n(z), P_n'(z))
    let legendre = |z: &BigFloat| {
        let (mut p0, mut p1) = (one.clone(), z.clone());
        for k in 2..=n as i64 {
            let p2 = &(&(z * &p1).mul_i64(2 * k - 1) - &p0.mul_i64(k - 1)) / &BigFloat::from_i64(k, 64);
            p0 = p1;
            p1 = p2;
        }
        if n == 1 {
            p0 = one.clone();
        }
        let dp = &(&(z * &p1) - &p0).mul_i64(n as i64) / &(&(z * z) - &one);
        (p1, dp)
    };
    let steps = 2 + (wp as f64 / 50.0).log2().ceil().max(0.0) as usize;
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for t in &seed.0 {
        let mut z = BigFloat::from_f64(*t, wp);
        for _ in 0..steps {
            let (p, dp) = legendre(&z);
            z = &z - &(&p / &dp);
        }
        let (_, dp) = legendre(&z);
        w.push(&BigFloat::from_i64(2, 64).with_prec(wp) / &(&(&one - &(&z * &z)) * &(&dp * &dp)));
        x.push(z);
    }
    let r = Arc::new((x, w));
    cache.lock().unwrap().insert((n, wp), r.clone());
    r
}

/// Extended-precision integrand on the x axis.
pub type MpIntegrand<'a> = dyn Fn(&BigFloat) -> Result<Vec<BigFloat>> + Sync + 'a;

struct PanelMp {
    value: Vec<BigFloat>,
    abs: Vec<f64>,
}

// Gauss sums over u in [lo, hi] of 2u f(u^2) and its modulus
fn panel_mp(f: &MpIntegrand, dim: usize, lo: &BigFloat, hi: &BigFloat, order: usize, wp: u32) -> Result<PanelMp> {
    let gl = gauss_legendre_mp(order, wp);
    let half = (hi - lo).mul_pow2(-1);
    let mid = (hi + lo).mul_pow2(-1);
    let mut value = vec![BigFloat::zero(wp); dim];
    let mut abs = vec![0.0; dim];
    for (t, w) in gl.0.iter().zip(&gl.1) {
        let u = &mid + &(&half * t);
        let v = f(&(&u * &u))?;
        if v.len() != dim {
            return Err(Error::Dimension(format!("integrand returned {} values, expected {dim}", v.len())));
        }
        let scale = &(&(w * &half) * &u).mul_pow2(1);
        for i in 0..dim {
            let c = scale * &v[i];
            abs[i] += c.to_f64().abs();
            value[i] = &value[i] + &c;
        }
    }
    Ok(PanelMp { value, abs })
}

struct TotalsMp {
    value: Vec<BigFloat>,
    abs: Vec<f64>,
}

impl TotalsMp {
    fn add(&mut self, p: &PanelMp) {
        for i in 0..self.abs.len() {
            self.value[i] = &self.value[i] + &p.value[i];
            self.abs[i] += p.abs[i];
        }
    }

    fn negligible(&self, i: usize, cfg: &QuadConfig) -> f64 {
        cfg.abs_tol + cfg.rel_tol * self.value[i].to_f64().abs()
    }
}

// extended-precision counterpart of `march`
fn march_mp(f: &MpIntegrand, dim: usize, c: f64, h: f64, u_seed: f64, cfg: &QuadConfig, wp: u32) -> Result<Vec<BigFloat>> {
    let mut tot = TotalsMp { value: vec![BigFloat::zero(wp); dim], abs: vec![0.0; dim] };
    let at = |v: f64| BigFloat::from_f64(v, wp);
    let mut level = 0i32;
    loop {
        let parts: Vec<PanelMp> = (level..level + BATCH as i32)
            .into_par_iter()
            .map(|k| panel_mp(f, dim, &at(h).mul_pow2(-(k as i64) - 1), &at(h).mul_pow2(-(k as i64)), cfg.panel_order, wp))
            .collect::<Result<_>>()?;
        parts.iter().for_each(|p| tot.add(p));
        level += BATCH as i32;
        let last = &parts[BATCH - 1].abs;
        let small = (0..dim).all(|i| last[i] <= 1e-3 * tot.negligible(i, cfg));
        if (small && level >= GRADED_LEVELS) || level >= MAX_GRADED_LEVELS {
            break;
        }
    }
    tot.add(&panel_mp(f, dim, &BigFloat::zero(wp), &at(h).mul_pow2(-(level as i64)), cfg.panel_order, wp)?);
    let u_max = u_seed * 2f64.powi(cfg.max_doublings as i32);
    let geometric = 1.0 / (1.0 - (-c * h).exp()).max(1e-3);
    let mut k = 1usize;
    let mut quiet = 0;
    loop {
        let batch: Vec<PanelMp> = (k..k + BATCH)
            .into_par_iter()
            .map(|j| panel_mp(f, dim, &at(h).mul_i64(j as i64), &at(h).mul_i64(j as i64 + 1), cfg.panel_order, wp))
            .collect::<Result<_>>()?;
        for p in &batch {
            tot.add(p);
            k += 1;
            let small = (0..dim).all(|i| p.abs[i] * geometric <= 0.01 * tot.negligible(i, cfg));
            quiet = if small { quiet + 1 } else { 0 };
        }
        if quiet >= 3 && k as f64 * h >= u_seed {
            break;
        }
        if k as f64 * h > u_max {
            return Err(Error::NonConvergence(format!("integrand not negligible at u = {}", k as f64 * h)));
        }
    }
    Ok(tot.value)
}

/// [`integrate_half_line_vec`] with nodes, weights, integrand values and
/// sums carried at `wp` bits, for integrands whose cancellation defeats
/// double arithmetic.
pub fn integrate_half_line_mp(f: &MpIntegrand, dim: usize, decay_rate: f64, x_seed: f64, cfg: &QuadConfig, wp: u32) -> Result<Vec<BigFloat>> {
    cfg.check()?;
    if !(decay_rate > 0.0) {
        return Err(Error::InvalidParams(format!("decay rate {decay_rate} must be positive")));
    }
    let (u_seed, mut h) = first_width(decay_rate, x_seed);
    let mut prev = march_mp(f, dim, decay_rate, h, u_seed, cfg, wp)?;
    for _ in 0..8 {
        h *= 0.5;
        let cur = march_mp(f, dim, decay_rate, h, u_seed, cfg, wp)?;
        let ok = (0..dim).all(|i| (&cur[i] - &prev[i]).to_f64().abs() <= cfg.abs_tol + cfg.rel_tol * cur[i].to_f64().abs());
        if ok {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NonConvergence("panel halving did not settle".into()))
}

/// Integral of omega_{mu+i,a} rho_{nu+j,b}:
/// a^{mu+i} b^{nu+j} Gamma(s+1+i+j) / (2 (b^2-a^2)^{s+1+i+j}).
pub fn moment_closed(p: &Params, i: usize, j: usize) -> LogValue {
    let e = p.sigma() + 1.0 + (i + j) as f64;
    LogValue::from_f64(p.a()).powf(p.mu() + i as f64) * LogValue::from_f64(p.b()).powf(p.nu() + j as f64) * log_gamma_ratio(e, 1.0).expect("positive argument")
        / LogValue::from_f64(p.gap()).powf(e).scale_f64(2.0)
}

/// x seed for the quadrature of forms of degree up to n.
pub fn x_seed(p: &Params, n: usize) -> f64 {
    (8.0 / p.decay_rate()).powi(2) * (1.0 + (p.mu() + p.nu() + n as f64) / 4.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct BiorthReport {
    pub size: usize,
    /// matrix[n][m] = integral of Q_n P_m.
    pub matrix: Vec<Vec<f64>>,
    pub max_offdiag_abs: f64,
    pub max_diag_dev: f64,
}

impl BiorthReport {
    fn from_matrix(matrix: Vec<Vec<f64>>) -> Self {
        let size = matrix.len();
        let mut off: f64 = 0.0;
        let mut diag: f64 = 0.0;
        for (n, row) in matrix.iter().enumerate() {
            for (m, v) in row.iter().enumerate() {
                if n == m {
                    diag = diag.max((v - 1.0).abs());
                } else {
                    off = off.max(v.abs());
                }
            }
        }
        BiorthReport { size, matrix, max_offdiag_abs: off, max_diag_dev: diag }
    }

    /// Largest |entry - delta|.
    pub fn max_deviation(&self) -> f64 {
        self.max_offdiag_abs.max(self.max_diag_dev)
    }
}

/// Largest N accepted by the biorthogonality routines (indices 0..N-1).
pub const BIORTH_MAX_DOUBLE: usize = 13;
pub const BIORTH_MAX_EXTENDED: usize = 31;

/// Working precision of the extended quadrature pass.
const BIORTH_MP_BITS: u32 = 128;

/// The N x N matrix of integrals of Q_n P_m by quadrature.
///
/// A double pass comes first. When the rounding floor of an entry, about
/// eps * int |Q_n P_m|, exceeds rel_tol (the entries are O(1)), the matrix is
/// recomputed with [`integrate_half_line_mp`].
pub fn biorth_matrix(p: &Params, size: usize, cfg: &QuadConfig) -> Result<BiorthReport> {
    if size == 0 || size > BIORTH_MAX_DOUBLE {
        return Err(Error::CapExceeded { n: size, cap: BIORTH_MAX_DOUBLE });
    }
    let top = size - 1;
    let f = |x: f64| -> Result<(Vec<f64>, Vec<f64>)> {
        let q = q_eval_upto_scaled(p, top, x)?;
        let pv = p_eval_upto_scaled(p, top, x)?;
        let vals = q.iter().flat_map(|qn| pv.iter().map(move |pm| qn.0 * pm.0)).collect();
        let noise = q.iter().flat_map(|qn| pv.iter().map(move |pm| f64::EPSILON * (qn.1 * pm.0.abs() + qn.0.abs() * pm.1))).collect();
        Ok((vals, noise))
    };
    let flat = match half_line_with_floor(&f, size * size, p.decay_rate(), x_seed(p, top), cfg) {
        Ok((v, floor)) if floor.iter().all(|e| *e <= cfg.rel_tol) => v,
        Ok(_) | Err(Error::NonConvergence(_)) => biorth_flat_mp(p, size, cfg)?,
        Err(e) => return Err(e),
    };
    Ok(BiorthReport::from_matrix(flat.chunks(size).map(<[f64]>::to_vec).collect()))
}

fn biorth_flat_mp(p: &Params, size: usize, cfg: &QuadConfig) -> Result<Vec<f64>> {
    let wp = BIORTH_MP_BITS;
    let tables = form_tables_mp(p, size - 1, wp + 32);
    let f = |x: &BigFloat| -> Result<Vec<BigFloat>> {
        let (q, pv) = forms_upto_mp_at(p, &tables, x, wp + 32);
        Ok(q.iter().flat_map(|qn| pv.iter().map(move |pm| qn * pm)).collect())
    };
    let v = integrate_half_line_mp(&f, size * size, p.decay_rate(), x_seed(p, size - 1), cfg, wp)?;
    Ok(v.iter().map(BigFloat::to_f64).collect())
}

/// Moment matrix entries a^{mu+i} b^{nu+j} Gamma(s+1+i+j) / (2 gap^{s+1+i+j}) in extended arithmetic.
pub fn moment_table_mp(p: &Params, size: usize, wp: u32) -> Vec<Vec<BigFloat>> {
    let bf = |v: f64| BigFloat::from_f64(v, wp);
    let (a, b) = (bf(p.a()), bf(p.b()));
    let gap = &(&b * &b) - &(&a * &a);
    let s1 = &(&bf(p.mu()) + &bf(p.nu())) + &BigFloat::one(wp);
    let base = &(&(&a.powf(&bf(p.mu())) * &b.powf(&bf(p.nu()))) * &s1.gamma()) / &gap.powf(&s1).mul_i64(2);
    let (ra, rb) = (&a / &gap, &b / &gap);
    (0..size)
        .map(|i| {
            (0..size)
                .map(|j| {
                    let g = s1.rising(i + j);
                    &(&(&base * &g) * &ra.powi(i as i64)) * &rb.powi(j as i64)
                })
                .collect()
        })
        .collect()
}

/// The biorthogonality matrix from the expansions and closed-form moments,
/// without quadrature: sum_{i,j} c_i^{(n)} d_j^{(m)} moment(i, j).
pub fn biorth_moments(p: &Params, size: usize, bits: u32) -> Result<BiorthReport> {
    if size == 0 || size > BIORTH_MAX_EXTENDED {
        return Err(Error::CapExceeded { n: size, cap: BIORTH_MAX_EXTENDED });
    }
    let rows: Vec<Vec<f64>> = (0..size)
        .into_par_iter()
        .map(|n| {
            (0..size)
                .map(|m| {
                    // entries are O(1) and the off-diagonal ones vanish, so the target is absolute
                    let mut wp = bits + 64;
                    let v = loop {
                        let mom = moment_table_mp(p, n.max(m) + 1, wp);
                        let c = crate::mopoly::q_coeffs_mp(p, n, wp);
                        let d = crate::mopoly::p_coeffs_mp(p, m, wp);
                        let mut terms = Vec::with_capacity((n + 1) * (m + 1));
                        for (i, ci) in c.iter().enumerate() {
                            for (j, dj) in d.iter().enumerate() {
                                terms.push(&(ci * dj) * &mom[i][j]);
                            }
                        }
                        let top = terms.iter().filter(|t| !t.is_zero()).map(BigFloat::top_exp).max().unwrap_or(0);
                        if top - (wp as i64) + 8 <= -(bits as i64) {
                            break sum_mp(&terms, wp).0;
                        }
                        wp = (top + bits as i64 + 32) as u32;
                    };
                    Ok(v.to_f64())
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(BiorthReport::from_matrix(rows))
}

/// Quadrature of omega_{mu+i,a} rho_{nu+j,b} for 0 <= i, j < size; entry [i][j].
pub fn moment_quadrature(p: &Params, size: usize, cfg: &QuadConfig) -> Result<Vec<Vec<f64>>> {
    let f = |x: f64| -> Result<Vec<f64>> {
        let w = crate::specfun::omega_sequence(p.mu(), p.a(), x, size)?;
        let r = crate::specfun::rho_sequence(p.nu(), p.b(), x, size)?;
        Ok(w.iter().flat_map(|wi| r.iter().map(move |rj| (*wi * *rj).to_f64())).collect())
    };
    let v = integrate_half_line_vec(&f, size * size, p.decay_rate(), x_seed(p, size.saturating_sub(1)), cfg)?;
    Ok(v.chunks(size).map(<[f64]>::to_vec).collect())
}

/// Integral of Q_n rho_{nu+j,b} as sum_i c_i moment(i, j), with the sum of
/// |terms| as its scale.
pub fn q_rho_moment(p: &Params, n: usize, j: usize) -> (f64, f64) {
    let c = crate::mopoly::q_coeffs(p, n).coeffs;
    let mut acc = NeumaierSum::new();
    for (i, ci) in c.iter().enumerate() {
        acc.add((*ci * moment_closed(p, i, j)).to_f64());
    }
    (acc.value(), acc.abs_sum())
}

/// Integral of P_n omega_{mu+j,a} as sum_i d_i moment(j, i), with its scale.
pub fn p_omega_moment(p: &Params, n: usize, j: usize) -> (f64, f64) {
    let d = crate::mopoly::p_coeffs(p, n).coeffs;
    let mut acc = NeumaierSum::new();
    for (i, di) in d.iter().enumerate() {
        acc.add((*di * moment_closed(p, j, i)).to_f64());
    }
    (acc.value(), acc.abs_sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{omega, rho};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn gauss_nodes_integrate_polynomials() {
        for n in [1, 4, 17, 40] {
            let gl = gauss_legendre(n);
            for k in 0..2 * n {
                let s: f64 = gl.0.iter().zip(&gl.1).map(|(x, w)| w * x.powi(k as i32)).sum();
                let want = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((s - want).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn elementary_half_line() {
        let cfg = QuadConfig::default();
        assert!(rel(integrate_half_line(|x| (-x).exp(), 1.0, &cfg).unwrap(), 1.0) < 1e-12);
        assert!(rel(integrate_half_line(|x| (-2.0 * x.sqrt()).exp(), 2.0, &cfg).unwrap(), 0.5) < 1e-12);
        // integrable singularity x^{-0.9}: Gamma(0.1)
        let v = integrate_half_line(|x| x.powf(-0.9) * (-x).exp(), 1.0, &cfg).unwrap();
        assert!(rel(v, crate::specfun::gamma::gamma(0.1)) < 1e-9, "{v}");
    }

    #[test]
    fn interval_rule() {
        let v = integrate_interval(|x| x.sin(), 0.0, std::f64::consts::PI, &QuadConfig::default()).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn moment_examples() {
        let p = Params::new(0.0, 1.0, 1.0, 2.0).unwrap();
        assert!(rel(moment_closed(&p, 0, 0).to_f64(), 1.0 / 9.0) < 1e-15);
        assert!(rel(moment_closed(&p, 1, 0).to_f64(), 2.0 / 27.0) < 1e-15);
        assert!(rel(moment_closed(&p, 0, 1).to_f64(), 4.0 / 27.0) < 1e-15);
        let v = integrate_half_line(|x| omega(0.0, 1.0, x).unwrap().to_f64() * rho(1.0, 2.0, x).unwrap().to_f64(), 2.0, &QuadConfig::default()).unwrap();
        assert!(rel(v, 1.0 / 9.0) < 1e-12);
    }

    #[test]
    fn moment_oracle_grid() {
        for p in [Params::preset("S0").unwrap(), Params::preset("S1").unwrap()] {
            let v = moment_quadrature(&p, 9, &QuadConfig::default()).unwrap();
            for i in 0..9 {
                for j in 0..9 {
                    let m = moment_closed(&p, i, j).to_f64();
                    assert!(rel(v[i][j], m) < 1e-10, "i={i} j={j}: {} {m}", v[i][j]);
                }
            }
        }
    }

    #[test]
    fn moment_table_matches_double() {
        let p = Params::preset("S1").unwrap();
        let t = moment_table_mp(&p, 5, 128);
        for i in 0..5 {
            for j in 0..5 {
                assert!(rel(t[i][j].to_f64(), moment_closed(&p, i, j).to_f64()) < 1e-14);
            }
        }
    }

    #[test]
    fn biorth_examples() {
        let s0 = Params::preset("S0").unwrap();
        let cfg = QuadConfig::default();
        let r = biorth_matrix(&s0, 1, &cfg).unwrap();
        assert!((r.matrix[0][0] - 1.0).abs() < 1e-10);
        let r = biorth_matrix(&s0, 6, &cfg).unwrap();
        assert!(r.max_deviation() < 1e-8, "{r:?}");
        let r = biorth_matrix(&s0, 3, &cfg).unwrap();
        assert!(r.matrix[2][0].abs() < 1e-10 && r.matrix[1][0].abs() < 1e-10 && r.matrix[2][1].abs() < 1e-10);
        assert!(matches!(biorth_matrix(&s0, 14, &cfg), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn moment_path_identity() {
        for p in [Params::preset("S0").unwrap(), Params::preset("S1").unwrap()] {
            let r = biorth_moments(&p, 13, 80).unwrap();
            assert!(r.max_deviation() < 1e-14, "{}", r.max_deviation());
        }
    }

    #[test]
    fn vanishing_moments() {
        for p in [Params::preset("S0").unwrap(), Params::preset("S1").unwrap()] {
            for n in 1..=10 {
                for j in 0..n {
                    let (v, scale) = q_rho_moment(&p, n, j);
                    assert!(v.abs() <= 1e-12 * scale, "Q n={n} j={j}: {v} {scale}");
                    let (v, scale) = p_omega_moment(&p, n, j);
                    assert!(v.abs() <= 1e-12 * scale, "P n={n} j={j}: {v} {scale}");
                }
                let (v, _) = q_rho_moment(&p, n, n);
                assert!(v.abs() > 0.0);
            }
        }
    }

    #[test]
    fn vanishing_moments_by_quadrature() {
        let p = Params::preset("S1").unwrap();
        for n in [2, 5] {
            let f = |x: f64| -> Result<Vec<f64>> {
                let q = crate::mopoly::q_eval_upto(&p, n, x)?[n];
                let r = crate::specfun::rho_sequence(p.nu(), p.b(), x, n)?;
                Ok(r.iter().map(|ri| q * ri.to_f64()).collect())
            };
            let v = integrate_half_line_vec(&f, n, p.decay_rate(), x_seed(&p, n), &QuadConfig::default()).unwrap();
            for (j, vj) in v.iter().enumerate() {
                let (_, scale) = q_rho_moment(&p, n, j);
                assert!(vj.abs() < 1e-10 * scale, "n={n} j={j}: {vj}");
            }
        }
    }
}
