use num_complex::Complex64;

use super::logvalue::{LogValue, Sign};
use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// Rising factorial x(x+1)...(x+k-1).
pub fn pochhammer(x: f64, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (x + i as f64))
}

/// Binomial coefficient C(n, k) as a double.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub(crate) fn is_pole(x: f64) -> bool {
    x <= 0.0 && x.fract() == 0.0
}

fn check_pole(x: f64) -> Result<()> {
    if is_pole(x) {
        Err(Error::Pole(x))
    } else {
        Ok(())
    }
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// 1/Gamma(x), zero at the poles.
pub fn rgamma(x: f64) -> f64 {
    if is_pole(x) {
        return 0.0;
    }
    if x > 171.0 {
        return (-ln_gamma_pos(x)).exp();
    }
    if x < -170.0 {
        // reflection: 1/Gamma(x) = Gamma(1-x) sin(pi x) / pi
        return (ln_gamma_pos(1.0 - x)).exp() * sin_pi(x) / std::f64::consts::PI;
    }
    1.0 / libm::tgamma(x)
}

pub(crate) fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round();
    if r.fract() == 0.0 {
        return 0.0;
    }
    (std::f64::consts::PI * r).sin()
}

// ln Gamma(x) for x > 0, with the Stirling tail for large x
fn ln_gamma_pos(x: f64) -> f64 {
    if x < 10.0 {
        return libm::lgamma_r(x).0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut s = 0.0;
    let mut p = inv;
    for c in STIRLING {
        s += c * p;
        p *= inv2;
    }
    (x - 0.5) * x.ln() - x + LN_SQRT_2PI + s
}

/// Gamma(p)/Gamma(q) without overflow.
pub fn log_gamma_ratio(p: f64, q: f64) -> Result<LogValue> {
    check_pole(p)?;
    check_pole(q)?;
    if p == q {
        return Ok(LogValue::ONE);
    }
    let d = p - q;
    if d.fract() == 0.0 && d.abs() <= 512.0 {
        let k = d.abs() as u32;
        let base = if d > 0.0 { q } else { p };
        let mut acc = LogValue::ONE;
        let mut chunk = 1.0f64;
        for i in 0..k {
            chunk *= base + i as f64;
            if chunk.abs() > 1e150 || chunk.abs() < 1e-150 {
                acc = acc * LogValue::from_f64(chunk);
                chunk = 1.0;
            }
        }
        acc = acc * LogValue::from_f64(chunk);
        return Ok(if d > 0.0 { acc } else { acc.recip() });
    }
    if p.abs() < 170.0 && q.abs() < 170.0 {
        return Ok(LogValue::from_f64(libm::tgamma(p)) / LogValue::from_f64(libm::tgamma(q)));
    }
    let (lp, sp) = ln_gamma_signed(p);
    let (lq, sq) = ln_gamma_signed(q);
    let l = if p >= 10.0 && q >= 10.0 { stirling_difference(p, q) } else { lp - lq };
    let sign = if sp * sq > 0.0 { Sign::Positive } else { Sign::Negative };
    Ok(LogValue::from_log(l, sign))
}

/// ln|Gamma(x)| and the sign of Gamma(x).
pub fn ln_gamma_signed(x: f64) -> (f64, f64) {
    if x > 0.0 {
        return (ln_gamma_pos(x), 1.0);
    }
    let s = sin_pi(x);
    let l = std::f64::consts::PI.ln() - s.abs().ln() - ln_gamma_pos(1.0 - x);
    (l, if s > 0.0 { 1.0 } else { -1.0 })
}

// ln Gamma(p) - ln Gamma(q) for p, q >= 10 with the leading cancellation removed
fn stirling_difference(p: f64, q: f64) -> f64 {
    let tail = |x: f64| {
        let inv = 1.0 / x;
        let inv2 = inv * inv;
        let mut s = 0.0;
        let mut pw = inv;
        for c in STIRLING {
            s += c * pw;
            pw *= inv2;
        }
        s
    };
    let d = p - q;
    let ln_ratio = (d / q).ln_1p();
    d * p.ln() + (q - 0.5) * ln_ratio - d + (tail(p) - tail(q))
}

/// Principal-branch-agnostic ln Gamma(z) for complex z; only `exp` of the
/// result is meaningful when z crosses the negative real axis.
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        return ln_gamma_complex(z.conj()).conj();
    }
    if z.re < 0.5 {
        // ln Gamma(z) = ln pi - ln sin(pi z) - ln Gamma(1 - z)
        return Complex64::new(std::f64::consts::PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma_complex(Complex64::new(1.0, 0.0) - z);
    }
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.norm() < 15.0 {
        shift += w.ln();
        w += 1.0;
    }
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut s = Complex64::new(0.0, 0.0);
    let mut pw = inv;
    for c in STIRLING {
        s += pw * c;
        pw *= inv2;
    }
    (w - 0.5) * w.ln() - w + LN_SQRT_2PI + s - shift
}

// ln sin(pi z) for Im z >= 0 without overflow
fn ln_sin_pi(z: Complex64) -> Complex64 {
    use std::f64::consts::PI;
    let i = Complex64::new(0.0, 1.0);
    if z.im < 1.0 {
        return (z * PI).sin().ln();
    }
    // sin(pi z) = (e^{i pi z} - e^{-i pi z}) / (2i) = -e^{-i pi z}(1 - e^{2 i pi z}) / (2i)
    let w2 = (i * z * (2.0 * PI)).exp();
    -i * z * PI + (Complex64::new(1.0, 0.0) - w2).ln() - (i * 2.0).ln() + i * PI
}

pub fn gamma_complex(z: Complex64) -> Complex64 {
    ln_gamma_complex(z).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pochhammer_examples() {
        assert_eq!(pochhammer(3.0, 0), 1.0);
        assert_eq!(pochhammer(3.0, 2), 12.0);
        assert_eq!(pochhammer(0.5, 3), 1.875);
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(log_gamma_ratio(4.0, 2.0).unwrap().to_f64(), 6.0);
        assert_eq!(log_gamma_ratio(7.3, 7.3).unwrap().to_f64(), 1.0);
        assert!(matches!(log_gamma_ratio(-2.0, 1.0), Err(Error::Pole(_))));
        assert!(matches!(log_gamma_ratio(1.0, 0.0), Err(Error::Pole(_))));
    }

    #[test]
    fn hundred_factorial() {
        // exact 100! from integer arithmetic
        let mut f = num_bigint::BigUint::from(1u32);
        for i in 2u32..=100 {
            f *= i;
        }
        let exact = crate::bigfloat::BigFloat::from_bigint(&f.into(), 128);
        let v = log_gamma_ratio(101.0, 1.0).unwrap();
        let rel = (&v.to_bigfloat(128) - &exact).abs() / exact;
        assert!(rel.to_f64() < 1e-14, "rel {}", rel.to_f64());
    }

    #[test]
    fn large_ratio_against_extended() {
        for (p, q) in [(250.5, 3.25), (400.0, 399.5), (1000.3, 20.1), (-170.5, 2.0)] {
            let v = log_gamma_ratio(p, q).unwrap();
            let bp = crate::bigfloat::BigFloat::from_f64(p, 160).gamma();
            let bq = crate::bigfloat::BigFloat::from_f64(q, 160).gamma();
            let exact = &bp / &bq;
            let rel = ((&v.to_bigfloat(160) - &exact) / &exact).abs().to_f64();
            // a log-domain difference carries eps * |ln ratio| absolute error
            let tol = 4.0 * f64::EPSILON * exact.ln_abs_f64().abs().max(50.0);
            assert!(rel < tol, "({p},{q}) rel {rel} tol {tol}");
        }
    }

    #[test]
    fn complex_gamma_matches_real() {
        for x in [0.3, 1.0, 2.5, 7.1, -0.4, -2.5] {
            let g = gamma_complex(Complex64::new(x, 0.0));
            assert!((g.re - gamma(x)).abs() < 1e-13 * gamma(x).abs(), "x={x}");
        }
        // |Gamma(1/2 + i y)|^2 = pi / cosh(pi y)
        for y in [0.5, 3.0, 20.0, 60.0] {
            let g = gamma_complex(Complex64::new(0.5, y));
            let want = std::f64::consts::PI / (std::f64::consts::PI * y).cosh();
            assert!((g.norm_sqr() / want - 1.0).abs() < 1e-12, "y={y}");
            let gc = gamma_complex(Complex64::new(0.5, -y));
            assert!((gc - g.conj()).norm() <= 1e-13 * g.norm());
        }
        // reflection region with large imaginary part: |Gamma(i y)|^2 = pi / (y sinh(pi y))
        for y in [2.0, 30.0] {
            let g = gamma_complex(Complex64::new(0.0, y));
            let want = std::f64::consts::PI / (y * (std::f64::consts::PI * y).sinh());
            assert!((g.norm_sqr() / want - 1.0).abs() < 1e-12, "y={y}");
        }
    }
}
