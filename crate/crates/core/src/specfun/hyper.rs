use serde::Serialize;

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

/// The hypergeometric sums used by the limits and the contour integrands.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Hypergeometric {
    /// 1F2(-n; b1, b2; z)
    F1F2 { n: u32, b1: f64, b2: f64 },
    /// 2F1(-n, beta; gamma; z)
    F2F1 { n: u32, beta: f64, gamma: f64 },
    /// 0F1(; b; z), summed until the terms fall below round-off
    F0F1 { b: f64 },
}

fn check_den(d: f64, terms: u32) -> Result<()> {
    // (d)_k vanishes once d + i hits zero for some i < k
    if d <= 0.0 && d.fract() == 0.0 && (-d) < terms as f64 {
        return Err(Error::Pole(d));
    }
    Ok(())
}

pub fn hyp_terminating(kind: Hypergeometric, z: f64) -> Result<f64> {
    match kind {
        Hypergeometric::F1F2 { n, b1, b2 } => {
            check_den(b1, n)?;
            check_den(b2, n)?;
            let mut acc = NeumaierSum::new();
            let mut t = 1.0;
            acc.add(t);
            for k in 0..n {
                let kf = k as f64;
                t *= (kf - n as f64) * z / ((b1 + kf) * (b2 + kf) * (kf + 1.0));
                acc.add(t);
            }
            Ok(acc.value())
        }
        Hypergeometric::F2F1 { n, beta, gamma } => {
            check_den(gamma, n)?;
            let mut acc = NeumaierSum::new();
            let mut t = 1.0;
            acc.add(t);
            for k in 0..n {
                let kf = k as f64;
                t *= (kf - n as f64) * (beta + kf) * z / ((gamma + kf) * (kf + 1.0));
                acc.add(t);
            }
            Ok(acc.value())
        }
        Hypergeometric::F0F1 { b } => {
            let mut acc = NeumaierSum::new();
            let mut t = 1.0;
            acc.add(t);
            for k in 0..100_000u32 {
                let kf = k as f64;
                check_den(b, k + 1)?;
                t *= z / ((b + kf) * (kf + 1.0));
                acc.add(t);
                if (kf + 1.0) * (b + kf).abs() > z.abs() && t.abs() < 1e-17 * acc.value().abs() {
                    return Ok(acc.value());
                }
            }
            Err(Error::NonConvergence(format!("0F1(;{b};{z}) did not converge")))
        }
    }
}
