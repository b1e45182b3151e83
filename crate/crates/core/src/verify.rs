//! Verification suites: each runs a family of identity checks and reports
//! the worst error of each against its tolerance.

use std::str::FromStr;

use serde::Serialize;

use crate::asymptotics::{
    mehler_heine_limit, mehler_heine_scaled, p_at_zero, p_limit_large_b, p_scaled_large_b, q_limit_large_a, q_limit_small_a, q_scaled_large_a,
    MEHLER_HEINE_MIN_BITS,
};
use crate::lommel::{omega_shift_eval, rho_shift_eval};
use crate::mellin::{cahen_mellin, meijer_g203, meijer_g203_residues, p_mellin_eval, rho_mellin, ContourConfig};
use crate::mopoly::{p_eval, p_eval_mp, q_eval};
use crate::quad::{biorth_matrix, biorth_moments, moment_closed, moment_quadrature, QuadConfig};
use crate::recurrence::{moment_xqp, p_recurrence_coeffs, p_residual, q_recurrence_coeffs, q_residual};
use crate::rmt::{kernel_first_moment, kernel_projection, kernel_trace, predicted_mean, CoupledModel, KernelSpec};
use crate::specfun::{bessel_i, bessel_k, omega, omega_mp, rho, rho_mp, Params, PrecisionConfig};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Bessel,
    Lommel,
    Biorth,
    Recurrence,
    Limits,
    Mellin,
    Kernel,
    All,
}

impl Suite {
    pub const EACH: [Suite; 7] = [Suite::Bessel, Suite::Lommel, Suite::Biorth, Suite::Recurrence, Suite::Limits, Suite::Mellin, Suite::Kernel];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Bessel => "bessel",
            Suite::Lommel => "lommel",
            Suite::Biorth => "biorth",
            Suite::Recurrence => "recurrence",
            Suite::Limits => "limits",
            Suite::Mellin => "mellin",
            Suite::Kernel => "kernel",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .iter()
            .chain(&[Suite::All])
            .find(|v| v.name() == s)
            .copied()
            .ok_or_else(|| Error::InvalidParams(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, max_error: f64, tolerance: f64) -> Self {
        Check { name: name.into(), max_error, tolerance, pass: max_error <= tolerance }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    /// Labelled parameter sets; the reference presets by default.
    pub params: Vec<(String, Params)>,
    /// Size N of the biorthogonality matrices (indices 0..N-1).
    pub biorth_size: usize,
    /// Largest degree in the recurrence checks.
    pub n_max: usize,
    pub quad: QuadConfig,
    pub precision: PrecisionConfig,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            params: vec![("S0".into(), Params::preset("S0").unwrap()), ("S1".into(), Params::preset("S1").unwrap())],
            biorth_size: 13,
            n_max: 12,
            quad: QuadConfig::default(),
            precision: PrecisionConfig::default(),
        }
    }
}

pub fn run(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::All => {
            let mut all = Vec::new();
            for s in Suite::EACH {
                all.extend(checks_for(s, opts)?);
            }
            all
        }
        s => checks_for(s, opts)?,
    };
    let pass = checks.iter().all(|c| c.pass);
    Ok(SuiteReport { suite: suite.name().into(), checks, pass })
}

fn checks_for(suite: Suite, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    match suite {
        Suite::Limits => out.extend(limit_checks(opts)?),
        Suite::Kernel => out.extend(kernel_checks(opts)?),
        _ => {
            for (label, p) in &opts.params {
                let part = match suite {
                    Suite::Bessel => bessel_checks(p)?,
                    Suite::Lommel => lommel_checks(p)?,
                    Suite::Biorth => biorth_checks(p, opts)?,
                    Suite::Recurrence => recurrence_checks(p, opts)?,
                    Suite::Mellin => mellin_checks(p)?,
                    _ => unreachable!(),
                };
                out.extend(part.into_iter().map(|c| Check { name: format!("{label}: {}", c.name), ..c }));
            }
        }
    }
    Ok(out)
}

/// `k` points spaced evenly in log between `lo` and `hi`.
pub fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| lo * (hi / lo).powf(i as f64 / (k - 1).max(1) as f64)).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn max_of(it: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    it.into_iter().try_fold(0.0f64, |m, v| Ok(m.max(v?)))
}

/// Five-point central difference with step 1e-3 x.
pub fn central_difference(f: impl Fn(f64) -> Result<f64>, x: f64) -> Result<f64> {
    let h = 1e-3 * x;
    Ok((f(x - 2.0 * h)? - 8.0 * f(x - h)? + 8.0 * f(x + h)? - f(x + 2.0 * h)?) / (12.0 * h))
}

fn bessel_checks(p: &Params) -> Result<Vec<Check>> {
    let grid = log_grid(1e-2, 50.0, 12);
    let omega_ext = max_of(grid.iter().flat_map(|&x| (0..4).map(move |j| (x, j as f64))).map(|(x, j)| {
        Ok(rel(omega(p.mu() + j, p.a(), x)?.to_f64(), omega_mp(p.mu() + j, p.a(), x, 128).to_f64()))
    }))?;
    let rho_ext = max_of(grid.iter().flat_map(|&x| (0..4).map(move |j| (x, j as f64))).map(|(x, j)| {
        Ok(rel(rho(p.nu() + j, p.b(), x)?.to_f64(), rho_mp(p.nu() + j, p.b(), x, 128).to_f64()))
    }))?;
    // I_m K_{m+1} + I_{m+1} K_m = 1/z
    let wronskian = max_of(log_grid(1e-2, 60.0, 15).into_iter().flat_map(|z| [p.mu(), p.nu()].map(|m| (z, m))).map(|(z, m)| {
        let w = (bessel_i(m, z)? * bessel_k(m + 1.0, z)?).to_f64() + (bessel_i(m + 1.0, z)? * bessel_k(m, z)?).to_f64();
        Ok((w * z - 1.0).abs())
    }))?;
    let grid = log_grid(0.05, 20.0, 10);
    let d_omega = max_of(grid.iter().map(|&x| {
        let d = central_difference(|t| Ok(omega(p.mu() + 1.0, p.a(), t)?.to_f64()), x)?;
        Ok(rel(d, p.a() * omega(p.mu(), p.a(), x)?.to_f64()))
    }))?;
    let d_rho = max_of(grid.iter().map(|&x| {
        let d = central_difference(|t| Ok(rho(p.nu() + 1.0, p.b(), t)?.to_f64()), x)?;
        Ok(rel(d, -p.b() * rho(p.nu(), p.b(), x)?.to_f64()))
    }))?;
    Ok(vec![
        Check::new("omega against 128-bit evaluation", omega_ext, 1e-12),
        Check::new("rho against 128-bit evaluation", rho_ext, 1e-12),
        Check::new("Wronskian I K", wronskian, 1e-13),
        Check::new("omega derivative shift", d_omega, 1e-6),
        Check::new("rho derivative shift", d_rho, 1e-6),
    ])
}

fn lommel_checks(p: &Params) -> Result<Vec<Check>> {
    let grid = log_grid(0.01, 30.0, 12);
    let pts = || grid.iter().flat_map(|&x| (0..=8usize).map(move |m| (x, m)));
    let w = max_of(pts().map(|(x, m)| Ok(rel(omega_shift_eval(p, m, x)?, omega(p.mu() + m as f64, p.a(), x)?.to_f64()))))?;
    let r = max_of(pts().map(|(x, m)| Ok(rel(rho_shift_eval(p, m, x)?, rho(p.nu() + m as f64, p.b(), x)?.to_f64()))))?;
    Ok(vec![Check::new("omega shift expansion, m <= 8", w, 1e-9), Check::new("rho shift expansion, m <= 8", r, 1e-9)])
}

fn biorth_checks(p: &Params, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let n = opts.biorth_size;
    let quad = biorth_matrix(p, n, &opts.quad)?;
    let moments = biorth_moments(p, n, 64)?;
    let mq = moment_quadrature(p, 9, &opts.quad)?;
    let mut moment_err: f64 = 0.0;
    for (i, row) in mq.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            moment_err = moment_err.max(rel(*v, moment_closed(p, i, j).to_f64()));
        }
    }
    Ok(vec![
        Check::new(format!("{n}x{n} biorthogonality by quadrature, max |entry - delta|"), quad.max_deviation(), 1e-8),
        Check::new(format!("{n}x{n} biorthogonality from closed-form moments"), moments.max_deviation(), 1e-10),
        Check::new("weight moments, quadrature against closed form, i, j <= 8", moment_err, 1e-10),
    ])
}

fn recurrence_checks(p: &Params, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let grid = log_grid(1e-3, 60.0, 20);
    let pts = || grid.iter().flat_map(|&x| (0..=opts.n_max).map(move |n| (x, n)));
    let q = max_of(pts().map(|(x, n)| Ok(q_residual(p, n, x, &opts.precision)?.relative())))?;
    let pr = max_of(pts().map(|(x, n)| Ok(p_residual(p, n, x, &opts.precision)?.relative())))?;
    let mut duality: f64 = 0.0;
    for n in 0..=opts.n_max {
        let b = p_recurrence_coeffs(p, n);
        for i in -2..=2i32 {
            if n as i32 + i >= 0 {
                duality = duality.max((b.get(i) - q_recurrence_coeffs(p, (n as i32 + i) as usize).get(-i)).abs());
            }
        }
    }
    let mut integral: f64 = 0.0;
    for n in 0..=opts.n_max.min(6) {
        let c = q_recurrence_coeffs(p, n);
        for i in -2..=2i32 {
            let m = n as i32 + i;
            if m < 0 {
                continue;
            }
            let v = moment_xqp(p, n, m as usize, &opts.quad)?;
            let want = c.get(i);
            // vanishing coefficients are compared absolutely
            integral = integral.max((v - want).abs() / want.abs().max(1.0));
        }
    }
    Ok(vec![
        Check::new(format!("Q five-term residual, n <= {}", opts.n_max), q, 1e-9),
        Check::new(format!("P five-term residual, n <= {}", opts.n_max), pr, 1e-9),
        Check::new("coefficient duality b_{i,n} = a_{-i,n+i}", duality, 0.0),
        Check::new("a_{i,n} = int x Q_n P_{n+i}, n <= 6", integral, 1e-6),
    ])
}

/// Errors of one limiting form at successive parameter points.
#[derive(Clone, Debug, Serialize)]
pub struct LimitSequence {
    pub name: String,
    pub errors: Vec<f64>,
    pub tolerance: f64,
}

impl LimitSequence {
    pub fn decreasing(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] < w[0])
    }

    pub fn pass(&self) -> bool {
        self.decreasing() && self.errors.last().is_some_and(|e| *e <= self.tolerance)
    }
}

// max |approx - limit| over the grid relative to max |limit|
fn sup_rel(pairs: impl IntoIterator<Item = Result<(f64, f64)>>) -> Result<f64> {
    let (mut d, mut m) = (0.0f64, 0.0f64);
    for pair in pairs {
        let (v, l) = pair?;
        d = d.max((v - l).abs());
        m = m.max(l.abs());
    }
    Ok(d / m)
}

/// The four limiting forms as convergence sequences, compared in the
/// sup-norm over each grid.
pub fn limit_sequences() -> Result<Vec<LimitSequence>> {
    let (mu, nu) = (0.5, 1.5);
    let k = 1.5;
    let xs = [0.5, 1.0, 2.0, 4.0];
    let small_a = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&a| {
            let p = Params::new(mu, nu, a, k * a.sqrt())?;
            sup_rel(xs.iter().map(|&x| Ok((q_eval(&p, 3, x / a)?, q_limit_small_a(k, mu, nu, 3, x)?))))
        })
        .collect::<Result<_>>()?;
    let c = 1.0;
    let xs = [0.5, 0.8, 1.2, 1.6, 2.0];
    let large_a = [50.0, 100.0, 200.0]
        .iter()
        .map(|&a| {
            let p = Params::new(mu, nu, a, a + c)?;
            sup_rel(xs.iter().map(|&x| Ok((q_scaled_large_a(&p, 1, x)?, q_limit_large_a(c, mu, nu, 1, x)?))))
        })
        .collect::<Result<_>>()?;
    let xs = [0.5, 1.0, 1.5, 2.0];
    let large_b = [25.0, 50.0, 100.0]
        .iter()
        .map(|&b| {
            let p = Params::new(mu, nu, b - c, b)?;
            sup_rel(xs.iter().map(|&x| Ok((p_scaled_large_b(&p, 1, x)?, p_limit_large_b(&p, 1, x)?))))
        })
        .collect::<Result<_>>()?;
    let s0 = Params::preset("S0").unwrap();
    let grid: Vec<f64> = (0..20).map(|i| 0.1 + 4.9 * i as f64 / 19.0).collect();
    let mehler = [20, 40, 80]
        .iter()
        .map(|&n| sup_rel(grid.iter().map(|&x| Ok((mehler_heine_scaled(&s0, n, x, MEHLER_HEINE_MIN_BITS)?, mehler_heine_limit(&s0, x)?)))))
        .collect::<Result<_>>()?;
    Ok(vec![
        LimitSequence { name: "Q_3(x/a) against the 1F2 limit, a = 1e-2, 1e-3, 1e-4".into(), errors: small_a, tolerance: 0.01 },
        LimitSequence { name: "scaled Q_1(x^2) against the Laguerre limit, a = 50, 100, 200".into(), errors: large_a, tolerance: 0.01 },
        LimitSequence { name: "scaled P_1(x^2) against the Laguerre limit, b = 25, 50, 100".into(), errors: large_b, tolerance: 0.01 },
        LimitSequence { name: "Mehler-Heine scaling of P_n on [0.1, 5], n = 20, 40, 80".into(), errors: mehler, tolerance: 0.02 },
    ])
}

/// Worst relative gap between p_at_zero and P_n(1e-10) for n <= n_max.
pub fn p_at_zero_error(p: &Params, n_max: usize) -> Result<f64> {
    max_of((0..=n_max).map(|n| Ok(rel(p_eval_mp(p, n, 1e-10, 80)?.to_f64(), p_at_zero(p, n)?))))
}

fn limit_checks(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out: Vec<Check> = limit_sequences()?
        .into_iter()
        .map(|s| {
            let last = *s.errors.last().unwrap();
            // a sequence that fails to decrease fails regardless of its last value
            let err = if s.decreasing() { last } else { f64::INFINITY };
            Check::new(format!("{} (decreasing)", s.name), err, s.tolerance)
        })
        .collect();
    for (label, p) in &opts.params {
        out.push(Check::new(format!("{label}: P_n(0) against P_n(1e-10), n <= 8"), p_at_zero_error(p, 8)?, 1e-6));
    }
    Ok(out)
}

fn mellin_checks(p: &Params) -> Result<Vec<Check>> {
    let cfg = ContourConfig::default();
    let grid = log_grid(0.01, 10.0, 25);
    let rho_err = max_of(grid.iter().map(|&x| Ok(rel(rho_mellin(p.nu(), p.b(), x)?, rho(p.nu(), p.b(), x)?.to_f64()))))?;
    let cahen = max_of([0.3, 1.0, 2.0, 5.0].iter().map(|&x| Ok(rel(cahen_mellin(x, &cfg)?, (-x).exp()))))?;
    // the residue series needs a non-integer nu
    let nu = if p.nu().fract() == 0.0 { p.nu() + 0.5 } else { p.nu() };
    let meijer = max_of(grid.iter().filter(|x| **x <= 5.0).map(|&x| {
        let r = meijer_g203_residues(p.mu(), nu, x)?;
        Ok((meijer_g203(p.mu(), nu, x)? - r).abs() / r.abs().max(1e-3))
    }))?;
    let xs = [0.05, 0.3, 1.0, 2.0, 4.0, 8.0];
    let pm = max_of(xs.iter().flat_map(|&x| (0..=10).map(move |n| (x, n))).map(|(x, n)| {
        let v = p_eval(p, n, x)?;
        let scale = v.abs().max(1e-3 * p_eval_mp(p, n, x, 128)?.abs().to_f64().max(f64::MIN_POSITIVE));
        Ok((p_mellin_eval(p, n, x)? - v).abs() / scale)
    }))?;
    Ok(vec![
        Check::new("rho by contour integral, 25 points", rho_err, 1e-9),
        Check::new("Cahen-Mellin integral against e^{-x}", cahen, 1e-10),
        Check::new(format!("Meijer G against residue series (nu = {nu})"), meijer, 1e-8),
        Check::new("P_n by contour integral, n <= 10", pm, 1e-8),
    ])
}

fn kernel_checks(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut specs: Vec<(String, KernelSpec)> = vec![("coupled n=2 M=4 tau=0.5".into(), CoupledModel::new(2, 4, 0.5, 0)?.kernel_spec())];
    for (label, p) in &opts.params {
        if p.mu() >= 0.0 && p.mu().fract() == 0.0 {
            specs.push((label.clone(), KernelSpec::new(p.mu() as u32, p.mu() + p.nu(), p.a(), p.b(), 1)?));
        }
    }
    let mut out = Vec::new();
    for (label, base) in specs {
        let with_n = |n| KernelSpec { n, ..base };
        let trace = max_of((1..=6).map(|n| Ok((kernel_trace(&with_n(n), &opts.quad)? - n as f64).abs())))?;
        let proj = max_of((1..=4).map(|n| Ok(kernel_projection(&with_n(n), &[0.5, 1.5, 4.0], &opts.quad)?.iter().map(|e| e.relative()).fold(0.0, f64::max))))?;
        let moment = max_of((1..=6).map(|n| Ok(rel(kernel_first_moment(&with_n(n), &opts.quad)?, predicted_mean(&with_n(n))?))))?;
        out.push(Check::new(format!("{label}: trace of K_n equals n, n <= 6"), trace, 1e-8));
        out.push(Check::new(format!("{label}: K_n reproduces itself, n <= 4"), proj, 1e-6));
        out.push(Check::new(format!("{label}: first moment against recurrence, n <= 6"), moment, 1e-6));
    }
    Ok(out)
}
