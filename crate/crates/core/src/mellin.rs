//! Vertical-line Mellin-Barnes integrals (1/2 pi i) int_{c-i inf}^{c+i inf} f(t) dt
//! with Gamma-type decay, and the representations of rho, P_n and the
//! Meijer function G^{2,0}_{0,3} built on them.

use num_complex::Complex64;
use serde::Serialize;

use crate::quad::gauss_legendre;
use crate::specfun::gamma::{gamma, rgamma};
use crate::specfun::{ln_gamma_complex, log_gamma_ratio, LogValue, Params};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ContourConfig {
    /// Abscissa of the line.
    pub c: f64,
    /// Truncation height; chosen from the decay bound when `None`.
    pub height: Option<f64>,
    pub nodes_per_unit: usize,
    pub tolerance: f64,
}

impl Default for ContourConfig {
    fn default() -> Self {
        ContourConfig { c: 1.0, height: None, nodes_per_unit: 24, tolerance: 1e-10 }
    }
}

/// Modulus bound e^{-rate |s|} |s|^power of the integrand along the line.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Decay {
    pub rate: f64,
    pub power: f64,
}

/// Largest truncation height tried before giving up.
pub const MAX_HEIGHT: f64 = 4096.0;

// smallest T >= 1 with rate T - power ln T >= ln(1/tol)
fn height_for(decay: Decay, tol: f64) -> f64 {
    let target = (1.0 / tol).ln();
    let f = |t: f64| decay.rate * t - decay.power.max(0.0) * t.ln() - target;
    let mut t = (target / decay.rate).max(1.0);
    for _ in 0..50 {
        let d = decay.rate - decay.power.max(0.0) / t;
        if d <= 0.0 {
            t *= 2.0;
            continue;
        }
        let next = (t - f(t) / d).max(1.0);
        if (next - t).abs() < 1e-9 * t {
            t = next;
            break;
        }
        t = next;
    }
    t.max(1.0)
}

/// Real part of (1/2 pi) int f(c + i s) ds over |s| <= T.
///
/// T comes from the decay bound and is doubled until the integrand at the
/// cut-off, times the tail length 1/rate, is below tolerance * |result|.
/// The imaginary part must vanish to within 1e-10 |result| plus the
/// rounding level 16 eps int |f|.
pub fn mb_integrate(f: &(dyn Fn(Complex64) -> Complex64 + Sync), decay: Decay, cfg: &ContourConfig) -> Result<f64> {
    if !(cfg.c > 0.0) || cfg.nodes_per_unit < 8 || !(cfg.tolerance > 0.0) || !(decay.rate > 0.0) {
        return Err(Error::InvalidParams(format!("bad contour configuration {cfg:?} / {decay:?}")));
    }
    let gl = gauss_legendre(cfg.nodes_per_unit);
    let mut height = cfg.height.unwrap_or_else(|| height_for(decay, cfg.tolerance)).ceil();
    loop {
        if height > MAX_HEIGHT {
            return Err(Error::NonConvergence(format!("contour height exceeds {MAX_HEIGHT}")));
        }
        let panels = 2 * height as i64;
        let (mut re, mut im, mut mass) = (crate::sum::NeumaierSum::new(), crate::sum::NeumaierSum::new(), 0.0);
        for k in 0..panels {
            let lo = -height + k as f64;
            for (t, w) in gl.0.iter().zip(&gl.1) {
                let s = lo + 0.5 * (t + 1.0);
                let v = f(Complex64::new(cfg.c, s)) * (0.5 * w);
                re.add(v.re);
                im.add(v.im);
                mass += v.norm();
            }
        }
        let scale = 1.0 / (2.0 * std::f64::consts::PI);
        let (value, imag, mass) = (re.value() * scale, im.value() * scale, mass * scale);
        if !value.is_finite() {
            return Err(Error::NonConvergence("contour integrand not finite".into()));
        }
        let edge = f(Complex64::new(cfg.c, height)).norm().max(f(Complex64::new(cfg.c, -height)).norm()) * scale / decay.rate;
        if cfg.height.is_none() && edge > cfg.tolerance * value.abs() && edge > 16.0 * f64::EPSILON * mass {
            height *= 2.0;
            continue;
        }
        if imag.abs() > 1e-10 * value.abs() + 16.0 * f64::EPSILON * mass {
            return Err(Error::SymmetryViolation { residual: imag.abs() / value.abs() });
        }
        return Ok(value);
    }
}

/// (1/2 pi i) int Gamma(t) x^{-t} dt, which equals e^{-x}; a sanity probe of the integrator.
pub fn cahen_mellin(x: f64, cfg: &ContourConfig) -> Result<f64> {
    check_x(x)?;
    let lx = x.ln();
    let f = |t: Complex64| (ln_gamma_complex(t) - t * lx).exp();
    mb_integrate(&f, Decay { rate: 0.5 * std::f64::consts::PI, power: cfg.c }, cfg)
}

fn check_x(x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("x = {x} must be positive")));
    }
    Ok(())
}

/// rho_{nu,b}(x) = (b^{-nu}/2) (1/2 pi i) int Gamma(t) Gamma(t+nu) (b^2 x)^{-t} dt.
pub fn rho_mellin(nu: f64, b: f64, x: f64) -> Result<f64> {
    rho_mellin_with(nu, b, x, &ContourConfig::default())
}

pub fn rho_mellin_with(nu: f64, b: f64, x: f64, cfg: &ContourConfig) -> Result<f64> {
    check_x(x)?;
    if !(nu > 0.0) || !(b > 0.0) {
        return Err(Error::InvalidParams(format!("need nu > 0, b > 0 (nu = {nu}, b = {b})")));
    }
    let lx = (b * b * x).ln();
    let f = |t: Complex64| (ln_gamma_complex(t) + ln_gamma_complex(t + nu) - t * lx).exp();
    let decay = Decay { rate: std::f64::consts::PI, power: 2.0 * cfg.c + nu + 1.0 };
    Ok(0.5 * b.powf(-nu) * mb_integrate(&f, decay, cfg)?)
}

/// Largest n accepted by [`p_mellin_eval`].
pub const P_MELLIN_MAX_N: usize = 40;

// 2F1(-n, beta; gamma; z) for complex beta
fn f21_complex(n: usize, beta: Complex64, gamma: f64, z: f64) -> Complex64 {
    let mut t = Complex64::new(1.0, 0.0);
    let mut acc = t;
    for k in 0..n {
        let kf = k as f64;
        t = t * (beta + kf) * ((kf - n as f64) * z / ((gamma + kf) * (kf + 1.0)));
        acc += t;
    }
    acc
}

/// P_n(x) from its Mellin-Barnes representation.
pub fn p_mellin_eval(p: &Params, n: usize, x: f64) -> Result<f64> {
    p_mellin_eval_with(p, n, x, &ContourConfig::default())
}

pub fn p_mellin_eval_with(p: &Params, n: usize, x: f64, cfg: &ContourConfig) -> Result<f64> {
    check_x(x)?;
    if n > P_MELLIN_MAX_N {
        return Err(Error::CapExceeded { n, cap: P_MELLIN_MAX_N });
    }
    let (mu, nu, a, b) = (p.mu(), p.nu(), p.a(), p.b());
    let s1 = mu + nu + 1.0;
    let z = 1.0 - (a / b).powi(2);
    let lx = (b * b * x).ln();
    let f = |t: Complex64| f21_complex(n, t + nu, s1, z) * (ln_gamma_complex(t) + ln_gamma_complex(t + nu) - t * lx).exp();
    let decay = Decay { rate: std::f64::consts::PI, power: n as f64 + mu + nu + 2.0 };
    let integral = mb_integrate(&f, decay, cfg)?;
    // (-1)^n gap^{s+1} / (a^mu b^{2 nu} Gamma(s+1) n!)
    let pref = LogValue::from_f64(p.gap()).powf(s1) / (LogValue::from_f64(a).powf(mu) * LogValue::from_f64(b).powf(2.0 * nu))
        / log_gamma_ratio(s1, 1.0)?
        / log_gamma_ratio(n as f64 + 1.0, 1.0)?;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * (pref * LogValue::from_f64(integral)).to_f64())
}

/// G^{2,0}_{0,3}(-; 0, nu, -mu | x) = (1/2 pi i) int Gamma(t) Gamma(t+nu) / Gamma(1+mu-t) x^{-t} dt.
pub fn meijer_g203(mu: f64, nu: f64, x: f64) -> Result<f64> {
    meijer_g203_with(mu, nu, x, &ContourConfig::default())
}

pub fn meijer_g203_with(mu: f64, nu: f64, x: f64, cfg: &ContourConfig) -> Result<f64> {
    check_x(x)?;
    if !(nu > 0.0) {
        return Err(Error::InvalidParams(format!("need nu > 0 (nu = {nu})")));
    }
    let lx = x.ln();
    let f = |t: Complex64| (ln_gamma_complex(t) + ln_gamma_complex(t + nu) - ln_gamma_complex(1.0 + mu - t) - t * lx).exp();
    let decay = Decay { rate: 0.5 * std::f64::consts::PI, power: (3.0 * cfg.c + nu - mu - 1.5).max(0.0) + 2.0 };
    mb_integrate(&f, decay, cfg)
}

/// G^{2,0}_{0,3}(-; 0, nu, -mu | x) as the sum of residues at the poles of
/// Gamma(t) and Gamma(t+nu); nu must not be an integer.
pub fn meijer_g203_residues(mu: f64, nu: f64, x: f64) -> Result<f64> {
    check_x(x)?;
    if !(nu > 0.0) || nu.fract() == 0.0 {
        return Err(Error::Domain(format!("residue series needs non-integer nu > 0 (nu = {nu})")));
    }
    let series = |shift: f64, den: f64| {
        // sum_k (-1)^k / k! Gamma(shift - k) / Gamma(den + k) x^k
        let mut acc = crate::sum::NeumaierSum::new();
        let mut xk_over_fact = 1.0;
        for k in 0..400usize {
            let kf = k as f64;
            if k > 0 {
                xk_over_fact *= -x / kf;
            }
            let t = xk_over_fact * gamma(shift - kf) * rgamma(den + kf);
            acc.add(t);
            if kf > x && t.abs() <= 1e-18 * acc.value().abs() {
                break;
            }
        }
        acc.value()
    };
    // poles of Gamma(t) at t = -k give Gamma(nu - k) / Gamma(1 + mu + k);
    // poles of Gamma(t + nu) at t = -nu - k give x^nu Gamma(-nu - k) / Gamma(1 + mu + nu + k)
    Ok(series(nu, 1.0 + mu) + x.powf(nu) * series(-nu, 1.0 + mu + nu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mopoly::{p_eval, p_eval_mp};
    use crate::specfun::rho;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn cahen(x: f64, cfg: &ContourConfig) -> f64 {
        cahen_mellin(x, cfg).unwrap()
    }

    #[test]
    fn cahen_mellin_sanity() {
        let cfg = ContourConfig::default();
        for x in [1.0, 2.0, 0.3, 5.0] {
            assert!(rel(cahen(x, &cfg), (-x).exp()) < 1e-10, "x={x}");
        }
        let fine = ContourConfig { nodes_per_unit: 48, ..cfg };
        assert!((cahen(1.0, &fine) - cahen(1.0, &cfg)).abs() < 1e-10 * (-1.0f64).exp());
        let tight = ContourConfig { tolerance: 5e-11, ..cfg };
        assert!((cahen(3.0, &tight) - cahen(3.0, &cfg)).abs() <= 1e-10 * (-3.0f64).exp());
    }

    #[test]
    fn bad_config() {
        let f = |t: Complex64| t;
        let d = Decay { rate: 1.0, power: 0.0 };
        assert!(mb_integrate(&f, d, &ContourConfig { c: 0.0, ..Default::default() }).is_err());
        assert!(mb_integrate(&f, d, &ContourConfig { nodes_per_unit: 4, ..Default::default() }).is_err());
    }

    #[test]
    fn symmetry_violation_detected() {
        // not conjugate-symmetric: i Gamma(t)
        let f = |t: Complex64| Complex64::new(0.0, 1.0) * ln_gamma_complex(t).exp() + ln_gamma_complex(t).exp();
        let r = mb_integrate(&f, Decay { rate: 0.5 * std::f64::consts::PI, power: 1.0 }, &ContourConfig::default());
        assert!(matches!(r, Err(Error::SymmetryViolation { .. })));
    }

    #[test]
    fn rho_against_bessel() {
        assert!(rel(rho_mellin(1.0, 2.0, 1.0).unwrap(), rho(1.0, 2.0, 1.0).unwrap().to_f64()) < 1e-9);
        // K_{1/2}(z) = sqrt(pi / 2z) e^{-z}
        let (nu, b, x) = (0.5, 1.5, 0.3);
        let z = 2.0 * b * f64::sqrt(x);
        let want = x.powf(0.25) * (std::f64::consts::PI / (2.0 * z)).sqrt() * (-z).exp();
        assert!(rel(rho_mellin(nu, b, x).unwrap(), want) < 1e-9);
        for nu in [0.3, 1.0, 1.5, 2.7, 4.0] {
            for x in [0.01, 0.2, 1.0, 3.0, 8.0] {
                let v = rho_mellin(nu, 1.3, x).unwrap();
                assert!(rel(v, rho(nu, 1.3, x).unwrap().to_f64()) < 1e-9, "nu={nu} x={x}");
            }
        }
        // x -> 0: Gamma(nu) / (2 b^nu)
        let v = rho_mellin(2.5, 2.0, 1e-9).unwrap();
        assert!(rel(v, gamma(2.5) / (2.0 * 2f64.powf(2.5))) < 1e-6);
    }

    #[test]
    fn p_against_expansion() {
        let s0 = Params::preset("S0").unwrap();
        assert!(rel(p_mellin_eval(&s0, 4, 1.0).unwrap(), p_eval(&s0, 4, 1.0).unwrap()) < 1e-8);
        let hi = p_eval_mp(&s0, 10, 0.01, 128).unwrap().to_f64();
        assert!(rel(p_mellin_eval(&s0, 10, 0.01).unwrap(), hi) < 1e-8);
        assert!(rel(p_mellin_eval(&s0, 0, 0.7).unwrap(), p_eval(&s0, 0, 0.7).unwrap()) < 1e-9);
        assert!(matches!(p_mellin_eval(&s0, 41, 1.0), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn meijer_against_residues() {
        for (mu, nu) in [(0.5, 1.5), (0.0, 0.7), (1.2, 2.3)] {
            for x in [0.05, 0.5, 1.0, 3.0, 5.0] {
                let g = meijer_g203(mu, nu, x).unwrap();
                let r = meijer_g203_residues(mu, nu, x).unwrap();
                assert!((g - r).abs() <= 1e-8 * r.abs().max(1e-3), "({mu},{nu},{x}): {g} {r}");
            }
        }
        // leading small-x behaviour Gamma(nu) / Gamma(1 + mu)
        let g = meijer_g203(0.5, 1.5, 1e-8).unwrap();
        assert!(rel(g, gamma(1.5) / gamma(1.5)) < 1e-6);
        assert!(meijer_g203_residues(0.0, 1.0, 1.0).is_err());
        // integer nu is handled by the contour
        assert!(meijer_g203(0.0, 1.0, 1.0).unwrap().is_finite());
        assert!(meijer_g203(1.0, 1.0, 1.0).unwrap().is_finite());
    }
}
