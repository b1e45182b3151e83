//! Limiting forms of Q_n and P_n: the small-a hypergeometric and large-a
//! Laguerre limits of Q_n, the large-b Laguerre limit and the value at 0 of
//! P_n, and the Mehler-Heine limit of P_n in terms of G^{2,0}_{0,3}.

use serde::Serialize;

use crate::bigfloat::BigFloat;
use crate::mellin::meijer_g203;
use crate::mopoly::{normalization_c, p_coeffs, p_eval_mp, q_coeffs};
use crate::specfun::gamma::{binomial, pochhammer, rgamma};
use crate::specfun::{hyp_terminating, log_gamma_ratio, omega_sequence, rho_sequence, Hypergeometric, LogValue, Params};
use crate::sum::sum_scaled;
use crate::{Error, Result};

/// Monic generalised Laguerre polynomial in monomial form.
#[derive(Clone, Debug, Serialize)]
pub struct LaguerreMonic {
    pub n: usize,
    pub alpha: f64,
    /// coeffs[j] multiplies x^j; coeffs[n] = 1.
    pub coeffs: Vec<f64>,
}

impl LaguerreMonic {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if !(alpha > -1.0) {
            return Err(Error::InvalidParams(format!("Laguerre parameter alpha = {alpha} must exceed -1")));
        }
        let coeffs = (0..=n)
            .map(|j| {
                let sign = if (n + j) % 2 == 0 { 1.0 } else { -1.0 };
                sign * binomial(n as u64, j as u64) * pochhammer(alpha + 1.0 + j as f64, (n - j) as u32)
            })
            .collect();
        Ok(LaguerreMonic { n, alpha, coeffs })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// sum_j |coeffs[j] x^j|, the scale of the rounding error of [`Self::eval`].
    pub fn magnitude(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x.abs() + c.abs())
    }
}

pub fn laguerre_monic(n: usize, alpha: f64, x: f64) -> Result<f64> {
    Ok(LaguerreMonic::new(n, alpha)?.eval(x))
}

fn check_x(x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("x = {x} must be positive")));
    }
    Ok(())
}

/// Limit of Q_n(x/a) as a -> 0 with b / sqrt(a) -> k:
/// (-1)^n (s+1)_n / Gamma(mu+1) 1F2(-n; s+1, mu+1; k^2 x) x^mu.
pub fn q_limit_small_a(k: f64, mu: f64, nu: f64, n: usize, x: f64) -> Result<f64> {
    check_x(x)?;
    let s1 = mu + nu + 1.0;
    let f = hyp_terminating(Hypergeometric::F1F2 { n: n as u32, b1: s1, b2: mu + 1.0 }, k * k * x)?;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * pochhammer(s1, n as u32) * rgamma(mu + 1.0) * f * x.powf(mu))
}

/// Limit of 2 sqrt(pi a) e^{-2ax} Q_n(x^2) as a -> inf with b - a = c:
/// x^{mu-1/2} L_n^{(mu+nu)}(2cx).
pub fn q_limit_large_a(c: f64, mu: f64, nu: f64, n: usize, x: f64) -> Result<f64> {
    check_x(x)?;
    Ok(x.powf(mu - 0.5) * laguerre_monic(n, mu + nu, 2.0 * c * x)?)
}

/// 2 sqrt(pi a) e^{-2ax} Q_n(x^2), formed without overflow.
pub fn q_scaled_large_a(p: &Params, n: usize, x: f64) -> Result<f64> {
    check_x(x)?;
    let w = omega_sequence(p.mu(), p.a(), x * x, n + 1)?;
    let scale = LogValue::exp(-2.0 * p.a() * x).scale_f64(2.0 * (std::f64::consts::PI * p.a()).sqrt());
    let terms: Vec<LogValue> = q_coeffs(p, n).coeffs.iter().zip(&w).map(|(c, w)| *c * *w * scale).collect();
    Ok(sum_scaled(&terms, true).value.to_f64())
}

/// Right side of the large-b limit of P_n, with the normalisation taken at
/// the same finite (a, b): c_n x^{nu-1/2} L_n^{(mu+nu)}(2(b-a)x).
pub fn p_limit_large_b(p: &Params, n: usize, x: f64) -> Result<f64> {
    check_x(x)?;
    let l = laguerre_monic(n, p.mu() + p.nu(), 2.0 * (p.b() - p.a()) * x)?;
    Ok((normalization_c(p, n).value * LogValue::from_f64(x.powf(p.nu() - 0.5) * l)).to_f64())
}

/// sqrt(4b/pi) e^{2bx} P_n(x^2), formed without underflow.
pub fn p_scaled_large_b(p: &Params, n: usize, x: f64) -> Result<f64> {
    check_x(x)?;
    let r = rho_sequence(p.nu(), p.b(), x * x, n + 1)?;
    let scale = LogValue::exp(2.0 * p.b() * x).scale_f64((4.0 * p.b() / std::f64::consts::PI).sqrt());
    let terms: Vec<LogValue> = p_coeffs(p, n).coeffs.iter().zip(&r).map(|(c, r)| *c * *r * scale).collect();
    Ok(sum_scaled(&terms, true).value.to_f64())
}

/// lim_{x -> 0} P_n(x) =
/// (-1)^n gap^{s+1} Gamma(nu) / (a^mu b^{2nu} Gamma(s+1) n!) 2F1(-n, nu; s+1; 1 - a^2/b^2).
pub fn p_at_zero(p: &Params, n: usize) -> Result<f64> {
    let (mu, nu, a, b) = (p.mu(), p.nu(), p.a(), p.b());
    let s1 = mu + nu + 1.0;
    let f = hyp_terminating(Hypergeometric::F2F1 { n: n as u32, beta: nu, gamma: s1 }, 1.0 - (a / b).powi(2))?;
    let pref = LogValue::from_f64(p.gap()).powf(s1) * log_gamma_ratio(nu, s1)?
        / (LogValue::from_f64(a).powf(mu) * LogValue::from_f64(b).powf(2.0 * nu) * log_gamma_ratio(n as f64 + 1.0, 1.0)?);
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * (pref * LogValue::from_f64(f)).to_f64())
}

/// G^{2,0}_{0,3}(-; 0, nu, -mu | x), the Mehler-Heine limit without its prefactor.
pub fn mehler_heine_g(mu: f64, nu: f64, x: f64) -> Result<f64> {
    meijer_g203(mu, nu, x)
}

/// (b^2-a^2)^{mu+1} / a^mu G^{2,0}_{0,3}(-; 0, nu, -mu | x).
pub fn mehler_heine_limit(p: &Params, x: f64) -> Result<f64> {
    let pref = p.gap().powf(p.mu() + 1.0) / p.a().powf(p.mu());
    Ok(pref * mehler_heine_g(p.mu(), p.nu(), x)?)
}

/// Smallest working precision used for the scaled P_n of the Mehler-Heine limit.
pub const MEHLER_HEINE_MIN_BITS: u32 = 192;

/// (-1)^n n! (n+1)^nu P_n(x / ((n+1)(b^2-a^2))) in extended arithmetic.
pub fn mehler_heine_scaled(p: &Params, n: usize, x: f64, bits: u32) -> Result<f64> {
    check_x(x)?;
    let bits = bits.max(MEHLER_HEINE_MIN_BITS);
    let m = (n + 1) as f64;
    let v = p_eval_mp(p, n, x / (m * p.gap()), bits)?;
    let wp = bits + 32;
    let fact = BigFloat::from_u64(n as u64 + 1, 64).with_prec(wp).gamma();
    let pw = BigFloat::from_f64(m, wp).powf(&BigFloat::from_f64(p.nu(), wp));
    let r = &(&v * &fact) * &pw;
    Ok(if n % 2 == 0 { r.to_f64() } else { -r.to_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mopoly::{p_eval, p_eval_mp, q_eval};
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // max |approx - limit| over the grid relative to max |limit|
    fn sup_rel(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
        let (d, m) = pairs.fold((0.0f64, 0.0f64), |(d, m), (v, l)| (d.max((v - l).abs()), m.max(l.abs())));
        d / m
    }

    fn decreasing(e: &[f64]) -> bool {
        e.windows(2).all(|w| w[1] < w[0])
    }

    #[test]
    fn laguerre_examples() {
        assert_eq!(laguerre_monic(0, 0.3, 2.0).unwrap(), 1.0);
        assert!((laguerre_monic(1, 0.3, 2.0).unwrap() - (2.0 - 1.3)).abs() < 1e-15);
        for x in [0.0, 1.0, 2.5] {
            assert!((laguerre_monic(2, 0.0, x).unwrap() - (x * x - 4.0 * x + 2.0)).abs() < 1e-13);
        }
        assert_eq!(*LaguerreMonic::new(7, 1.5).unwrap().coeffs.last().unwrap(), 1.0);
        assert!(LaguerreMonic::new(2, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn laguerre_three_term(n in 1usize..15, alpha in -0.9f64..5.0, x in 0.0f64..30.0) {
            let l = |k| laguerre_monic(k, alpha, x).unwrap();
            let m = |k| LaguerreMonic::new(k, alpha).unwrap().magnitude(x);
            let nf = n as f64;
            let rhs = (x - (2.0 * nf + alpha + 1.0)) * l(n) - nf * (nf + alpha) * l(n - 1);
            // each value carries rounding of order eps times its monomial magnitude
            let scale = (x - (2.0 * nf + alpha + 1.0)).abs() * m(n) + nf * (nf + alpha) * m(n - 1) + m(n + 1);
            prop_assert!((l(n + 1) - rhs).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn small_a_examples() {
        let v = q_limit_small_a(1.3, 0.5, 1.5, 0, 2.0).unwrap();
        assert!(rel(v, 2f64.powf(0.5) / crate::specfun::gamma::gamma(1.5)) < 1e-15);
        // 6 * 1F2(-2; 2, 1; 1) = 6 * (1 - 1 + 1/12)
        assert!((q_limit_small_a(1.0, 0.0, 1.0, 2, 1.0).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn small_a_convergence() {
        let (k, mu, nu, n) = (1.5, 0.5, 1.5, 3);
        let xs = [0.5, 1.0, 2.0, 4.0];
        let errs: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&a| {
                let p = Params::new(mu, nu, a, k * f64::sqrt(a)).unwrap();
                xs.iter().map(|&x| (q_eval(&p, n, x / a).unwrap() - q_limit_small_a(k, mu, nu, n, x).unwrap()).abs()).fold(0.0, f64::max)
            })
            .collect();
        assert!(decreasing(&errs), "{errs:?}");
        let scale = xs.iter().map(|&x| q_limit_small_a(k, mu, nu, n, x).unwrap().abs()).fold(0.0, f64::max);
        assert!(errs[2] <= 0.01 * scale, "{errs:?}");
    }

    #[test]
    fn large_a_convergence() {
        let (c, mu, nu) = (1.0, 0.5, 1.5);
        assert!((q_limit_large_a(c, mu, nu, 0, 2.0).unwrap() - 2f64.powf(0.0)).abs() < 1e-15);
        assert!((q_limit_large_a(1.0, mu, nu, 1, 1.5).unwrap() - 1.5f64.powf(0.0) * (3.0 - 3.0)).abs() < 1e-14);
        let xs = [0.5, 0.8, 1.2, 1.6, 2.0];
        for n in [1, 3] {
            let errs: Vec<f64> = [50.0, 100.0, 200.0]
                .iter()
                .map(|&a| {
                    let p = Params::new(mu, nu, a, a + c).unwrap();
                    sup_rel(xs.iter().map(|&x| (q_scaled_large_a(&p, n, x).unwrap(), q_limit_large_a(c, mu, nu, n, x).unwrap())))
                })
                .collect();
            assert!(decreasing(&errs) && errs[2] <= 0.01, "n={n} {errs:?}");
        }
        // the scaled form agrees with the plain evaluation where both fit in a double
        let p = Params::new(mu, nu, 3.0, 4.0).unwrap();
        let direct = 2.0 * (std::f64::consts::PI * 3.0).sqrt() * (-6.0f64).exp() * q_eval(&p, 2, 1.0).unwrap();
        assert!(rel(q_scaled_large_a(&p, 2, 1.0).unwrap(), direct) < 1e-12);
    }

    #[test]
    fn large_b_convergence() {
        let (c, mu, nu) = (1.0, 0.5, 1.5);
        let xs = [0.5, 1.0, 1.5, 2.0];
        for (n, tol) in [(1, 0.01), (3, 0.02)] {
            let errs: Vec<f64> = [25.0, 50.0, 100.0]
                .iter()
                .map(|&b| {
                    let p = Params::new(mu, nu, b - c, b).unwrap();
                    sup_rel(xs.iter().map(|&x| (p_scaled_large_b(&p, n, x).unwrap(), p_limit_large_b(&p, n, x).unwrap())))
                })
                .collect();
            assert!(decreasing(&errs) && errs[2] <= tol, "n={n} {errs:?}");
        }
        let p = Params::new(mu, nu, 1.0, 2.0).unwrap();
        let direct = (8.0 / std::f64::consts::PI).sqrt() * 4f64.exp() * p_eval(&p, 2, 1.0).unwrap();
        assert!(rel(p_scaled_large_b(&p, 2, 1.0).unwrap(), direct) < 1e-12);
    }

    #[test]
    fn value_at_zero() {
        let p = Params::new(0.0, 1.0, 1.0, 2.0).unwrap();
        assert!(rel(p_at_zero(&p, 0).unwrap(), 2.25) < 1e-14);
        for p in [p, Params::preset("S0").unwrap(), Params::preset("S1").unwrap()] {
            for n in 0..=8 {
                let lim = p_at_zero(&p, n).unwrap();
                let near = p_eval_mp(&p, n, 1e-10, 80).unwrap().to_f64();
                assert!(rel(near, lim) < 1e-6, "n={n}: {near} {lim}");
            }
        }
    }

    #[test]
    fn mehler_heine_small_n() {
        let p = Params::preset("S0").unwrap();
        let errs: Vec<f64> = [10, 20]
            .iter()
            .map(|&n| {
                [0.5, 1.0, 2.0].iter().map(|&x| (mehler_heine_scaled(&p, n, x, 192).unwrap() - mehler_heine_limit(&p, x).unwrap()).abs()).fold(0.0, f64::max)
            })
            .collect();
        assert!(decreasing(&errs), "{errs:?}");
    }
}
