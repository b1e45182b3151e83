//! Correlation kernel of the coupled two-matrix product model and a
//! Monte-Carlo sampler of its squared singular values.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::mopoly::{p_eval_upto, p_eval_upto_log, p_eval_upto_scaled, q_eval_upto, q_eval_upto_log, q_eval_upto_scaled};
use crate::quad::{integrate_half_line_noisy, integrate_interval, x_seed, QuadConfig};
use crate::recurrence::q_recurrence_coeffs;
use crate::specfun::Params;
use crate::{Error, Result};

/// Parameters of the kernel K_n built from the family (kappa, nu_total - kappa, alpha, beta).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelSpec {
    pub kappa: u32,
    pub nu_total: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
}

impl KernelSpec {
    pub fn new(kappa: u32, nu_total: f64, alpha: f64, beta: f64, n: usize) -> Result<Self> {
        let spec = KernelSpec { kappa, nu_total, alpha, beta, n };
        if n == 0 {
            return Err(Error::InvalidParams("kernel size n must be at least 1".into()));
        }
        if !(nu_total > kappa as f64) {
            return Err(Error::InvalidParams(format!("nu_total = {nu_total} must exceed kappa = {kappa}")));
        }
        spec.params()?;
        Ok(spec)
    }

    /// The family parameters (mu, nu, a, b) = (kappa, nu_total - kappa, alpha, beta).
    pub fn params(&self) -> Result<Params> {
        Params::new(self.kappa as f64, self.nu_total - self.kappa as f64, self.alpha, self.beta)
    }
}

/// K_n(x, y) = sum_{k<n} Q_k(x) P_k(y).
pub fn kernel_eval(spec: &KernelSpec, x: f64, y: f64) -> Result<f64> {
    let p = spec.params()?;
    // Q_k grows and P_k decays exponentially; their product is formed before leaving the log range
    let q = q_eval_upto_log(&p, spec.n - 1, x)?;
    let pv = p_eval_upto_log(&p, spec.n - 1, y)?;
    Ok(q.iter().zip(&pv).map(|(a, b)| (*a * *b).to_f64()).sum())
}

/// K_n(x, x), the one-point intensity.
pub fn kernel_diag(spec: &KernelSpec, x: f64) -> Result<f64> {
    kernel_eval(spec, x, x)
}

/// (x, K_n(x, x)) on a strictly positive increasing grid.
pub fn kernel_density_curve(spec: &KernelSpec, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if grid.first().is_some_and(|x| !(*x > 0.0)) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("grid must be strictly positive and increasing".into()));
    }
    grid.par_iter().map(|&x| Ok((x, kernel_diag(spec, x)?))).collect()
}

// x^power K_n(x, x) with a rounding-noise estimate
fn diag_moment_integrand(p: &Params, n: usize, power: i32) -> impl Fn(f64) -> Result<(Vec<f64>, Vec<f64>)> + Sync + '_ {
    move |x| {
        let q = q_eval_upto_scaled(p, n - 1, x)?;
        let pv = p_eval_upto_scaled(p, n - 1, x)?;
        let w = x.powi(power);
        let v: f64 = q.iter().zip(&pv).map(|(a, b)| a.0 * b.0).sum();
        let e: f64 = q.iter().zip(&pv).map(|(a, b)| a.1 * b.0.abs() + a.0.abs() * b.1).sum();
        Ok((vec![w * v], vec![w * f64::EPSILON * e]))
    }
}

/// int_0^inf K_n(x, x) dx; equals n.
pub fn kernel_trace(spec: &KernelSpec, cfg: &QuadConfig) -> Result<f64> {
    let p = spec.params()?;
    let f = diag_moment_integrand(&p, spec.n, 0);
    let v = integrate_half_line_noisy(&f, 1, p.decay_rate(), x_seed(&p, spec.n), cfg)?;
    Ok(v[0])
}

/// int_0^inf x K_n(x, x) dx by quadrature.
pub fn kernel_first_moment(spec: &KernelSpec, cfg: &QuadConfig) -> Result<f64> {
    let p = spec.params()?;
    let f = diag_moment_integrand(&p, spec.n, 1);
    let v = integrate_half_line_noisy(&f, 1, p.decay_rate(), x_seed(&p, spec.n + 2), cfg)?;
    Ok(v[0])
}

/// sum_{k<n} a_{0,k}, the mean of sum_k x_k under the point process.
pub fn predicted_mean(spec: &KernelSpec) -> Result<f64> {
    let p = spec.params()?;
    Ok((0..spec.n).map(|k| q_recurrence_coeffs(&p, k).a0).sum())
}

/// One entry of a projection check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProjectionEntry {
    pub x: f64,
    pub y: f64,
    pub kernel: f64,
    pub composed: f64,
}

impl ProjectionEntry {
    pub fn relative(&self) -> f64 {
        ((self.composed - self.kernel) / self.kernel).abs()
    }
}

/// int_0^inf K_n(x, t) K_n(t, y) dt against K_n(x, y) for every pair from `points`.
pub fn kernel_projection(spec: &KernelSpec, points: &[f64], cfg: &QuadConfig) -> Result<Vec<ProjectionEntry>> {
    let p = spec.params()?;
    let top = spec.n - 1;
    let qx: Vec<Vec<f64>> = points.iter().map(|&x| q_eval_upto(&p, top, x)).collect::<Result<_>>()?;
    let py: Vec<Vec<f64>> = points.iter().map(|&y| p_eval_upto(&p, top, y)).collect::<Result<_>>()?;
    let k = points.len();
    let f = |t: f64| -> Result<(Vec<f64>, Vec<f64>)> {
        let pt = p_eval_upto_scaled(&p, top, t)?;
        let qt = q_eval_upto_scaled(&p, top, t)?;
        // K(x_i, t) and K(t, y_j) with their absolute noise
        let left: Vec<(f64, f64)> = qx.iter().map(|q| q.iter().zip(&pt).fold((0.0, 0.0), |(v, e), (a, b)| (v + a * b.0, e + (a * b.1).abs()))).collect();
        let right: Vec<(f64, f64)> = py.iter().map(|pv| qt.iter().zip(pv).fold((0.0, 0.0), |(v, e), (a, b)| (v + a.0 * b, e + (a.1 * b).abs()))).collect();
        let mut v = Vec::with_capacity(k * k);
        let mut e = Vec::with_capacity(k * k);
        for l in &left {
            for r in &right {
                v.push(l.0 * r.0);
                e.push(f64::EPSILON * (l.1 * r.0.abs() + l.0.abs() * r.1));
            }
        }
        Ok((v, e))
    };
    let composed = integrate_half_line_noisy(&f, k * k, p.decay_rate(), x_seed(&p, top), cfg)?;
    let mut out = Vec::with_capacity(k * k);
    for (i, &x) in points.iter().enumerate() {
        for (j, &y) in points.iter().enumerate() {
            out.push(ProjectionEntry { x, y, kernel: kernel_eval(spec, x, y)?, composed: composed[i * k + j] });
        }
    }
    Ok(out)
}

/// Gaussian pair X1 = (A - i sqrt(tau) B)/sqrt 2, X2 = (A* - i sqrt(tau) B*)/sqrt 2
/// with A, B of size n x m.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoupledModel {
    pub n: usize,
    pub m: usize,
    pub tau: f64,
    pub seed: u64,
}

impl CoupledModel {
    pub fn new(n: usize, m: usize, tau: f64, seed: u64) -> Result<Self> {
        if n == 0 || m <= n {
            return Err(Error::Dimension(format!("need m > n >= 1, got n = {n}, m = {m}")));
        }
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidParams(format!("tau = {tau} must lie in (0, 1)")));
        }
        Ok(CoupledModel { n, m, tau, seed })
    }

    /// kappa = 0, nu_total = m - n, alpha = (1 - tau)/(2 tau), beta = (1 + tau)/(2 tau).
    pub fn kernel_spec(&self) -> KernelSpec {
        KernelSpec {
            kappa: 0,
            nu_total: (self.m - self.n) as f64,
            alpha: (1.0 - self.tau) / (2.0 * self.tau),
            beta: (1.0 + self.tau) / (2.0 * self.tau),
            n: self.n,
        }
    }
}

/// Squared singular values of X1 X2, `model.n` per sample, samples in order.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub model: CoupledModel,
    pub num_samples: usize,
    pub values: Vec<f64>,
}

impl SampleBatch {
    pub fn sample(&self, i: usize) -> &[f64] {
        &self.values[i * self.model.n..(i + 1) * self.model.n]
    }

    /// Sample mean of sum_k x_k and its standard error.
    pub fn mean_sum(&self) -> (f64, f64) {
        let sums: Vec<f64> = (0..self.num_samples).map(|i| self.sample(i).iter().sum()).collect();
        let k = sums.len() as f64;
        let mean = sums.iter().sum::<f64>() / k;
        let var = sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1.0);
        (mean, (var / k).sqrt())
    }
}

// complex Gaussian with E|z|^2 = 1
fn complex_normal(rng: &mut ChaCha20Rng) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(s * rng.sample::<f64, _>(StandardNormal), s * rng.sample::<f64, _>(StandardNormal))
}

fn draw(model: &CoupledModel, index: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(model.seed);
    rng.set_stream(index);
    let (n, m) = (model.n, model.m);
    let a = DMatrix::from_fn(n, m, |_, _| complex_normal(&mut rng));
    let b = DMatrix::from_fn(n, m, |_, _| complex_normal(&mut rng));
    let it = Complex64::new(0.0, model.tau.sqrt());
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x1 = (&a - &b * it) * Complex64::from(s);
    let x2 = (a.adjoint() - b.adjoint() * it) * Complex64::from(s);
    (x1 * x2).singular_values().iter().map(|v| v * v).collect()
}

/// `num_samples` independent draws; sample i uses ChaCha20 stream i of the
/// seed, so the output does not depend on thread count.
pub fn sample_coupled(model: &CoupledModel, num_samples: usize) -> Result<SampleBatch> {
    CoupledModel::new(model.n, model.m, model.tau, model.seed)?;
    let values: Vec<f64> = (0..num_samples as u64).into_par_iter().flat_map_iter(|i| draw(model, i)).collect();
    Ok(SampleBatch { model: *model, num_samples, values })
}

/// Uniform bins of width upper/count on [0, upper); the last bin also takes
/// everything above `upper`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HistogramSpec {
    pub count: usize,
    pub upper: f64,
}

impl HistogramSpec {
    fn edges(&self) -> Vec<f64> {
        (0..=self.count).map(|k| self.upper * k as f64 / self.count as f64).collect()
    }

    fn index(&self, x: f64) -> usize {
        ((x / self.upper * self.count as f64) as usize).min(self.count - 1)
    }

    /// `count` bins whose upper edge leaves kernel mass `tail` above it.
    pub fn for_kernel(spec: &KernelSpec, count: usize, tail: f64, cfg: &QuadConfig) -> Result<Self> {
        let n = spec.n as f64;
        let (mut lo, mut hi) = (0.0, 1.0);
        while n - kernel_mass(spec, 0.0, hi, cfg)? > tail {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            if n - kernel_mass(spec, 0.0, mid, cfg)? > tail {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(HistogramSpec { count, upper: hi })
    }
}

/// int_lo^hi K_n(x, x) dx.
pub fn kernel_mass(spec: &KernelSpec, lo: f64, hi: f64, cfg: &QuadConfig) -> Result<f64> {
    let err = std::sync::Mutex::new(None);
    let v = integrate_interval(
        |x| {
            kernel_diag(spec, x.max(f64::MIN_POSITIVE)).unwrap_or_else(|e| {
                *err.lock().unwrap() = Some(e);
                0.0
            })
        },
        lo,
        hi,
        cfg,
    );
    match err.into_inner().unwrap() {
        Some(e) => Err(e),
        None => v,
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BinRow {
    pub lo: f64,
    /// inf for the open last bin
    pub hi: f64,
    pub observed: f64,
    pub expected: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityReport {
    pub bins: Vec<BinRow>,
    /// bins merged into a neighbour because their expected count was below 20
    pub underflow_merges: usize,
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Smallest expected count a bin may carry in the chi-square sum.
pub const MIN_EXPECTED: f64 = 20.0;

// merge bins left to right until each has expected >= MIN_EXPECTED; returns merges
fn merge_underflow(rows: Vec<BinRow>) -> (Vec<BinRow>, usize) {
    let mut out: Vec<BinRow> = Vec::with_capacity(rows.len());
    let mut merges = 0;
    let mut pending: Option<BinRow> = None;
    for r in rows {
        let cur = match pending.take() {
            Some(p) => {
                merges += 1;
                BinRow { lo: p.lo, hi: r.hi, observed: p.observed + r.observed, expected: p.expected + r.expected }
            }
            None => r,
        };
        if cur.expected < MIN_EXPECTED {
            pending = Some(cur);
        } else {
            out.push(cur);
        }
    }
    if let Some(p) = pending {
        merges += 1;
        match out.last_mut() {
            Some(last) => {
                last.hi = p.hi;
                last.observed += p.observed;
                last.expected += p.expected;
            }
            None => out.push(p),
        }
    }
    (out, merges)
}

fn chi_square_p(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64).map(|d| d.sf(stat)).unwrap_or(f64::NAN)
}

/// Binned sample counts against num_samples * int_bin K_n(x, x) dx.
pub fn density_compare(batch: &SampleBatch, spec: &KernelSpec, bins: &HistogramSpec, cfg: &QuadConfig) -> Result<DensityReport> {
    if batch.model.kernel_spec() != *spec {
        return Err(Error::InvalidParams("sample batch and kernel describe different models".into()));
    }
    if bins.count == 0 || !(bins.upper > 0.0) {
        return Err(Error::InvalidParams(format!("bad histogram {bins:?}")));
    }
    let mut observed = vec![0.0; bins.count];
    for &x in &batch.values {
        observed[bins.index(x)] += 1.0;
    }
    let edges = bins.edges();
    let masses: Vec<f64> = (0..bins.count).into_par_iter().map(|k| kernel_mass(spec, edges[k], edges[k + 1], cfg)).collect::<Result<_>>()?;
    let total = kernel_trace(spec, cfg)?;
    let below: f64 = masses.iter().sum();
    let ns = batch.num_samples as f64;
    let rows: Vec<BinRow> = (0..bins.count)
        .map(|k| {
            let last = k + 1 == bins.count;
            let mass = if last { masses[k] + (total - below) } else { masses[k] };
            BinRow { lo: edges[k], hi: if last { f64::INFINITY } else { edges[k + 1] }, observed: observed[k], expected: ns * mass }
        })
        .collect();
    let (rows, underflow_merges) = merge_underflow(rows);
    let chi_square = rows.iter().map(|r| (r.observed - r.expected).powi(2) / r.expected).sum();
    let dof = rows.len().saturating_sub(1);
    Ok(DensityReport { bins: rows, underflow_merges, chi_square, dof, p_value: chi_square_p(chi_square, dof) })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TwoSampleReport {
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Two-sample chi-square of the binned counts of two batches of equal size.
pub fn two_sample_compare(first: &SampleBatch, second: &SampleBatch, bins: &HistogramSpec) -> Result<TwoSampleReport> {
    if first.values.len() != second.values.len() {
        return Err(Error::Dimension("batches must hold the same number of values".into()));
    }
    let count = |b: &SampleBatch| {
        let mut c = vec![0.0; bins.count];
        b.values.iter().for_each(|&x| c[bins.index(x)] += 1.0);
        c
    };
    let (c1, c2) = (count(first), count(second));
    let used: Vec<(f64, f64)> = c1.into_iter().zip(c2).filter(|(a, b)| a + b > 0.0).collect();
    let chi_square = used.iter().map(|(a, b)| (a - b).powi(2) / (a + b)).sum();
    let dof = used.len().saturating_sub(1);
    Ok(TwoSampleReport { chi_square, dof, p_value: chi_square_p(chi_square, dof) })
}

/// Decimal with 17 significant digits, enough to round-trip any f64.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

const MAGIC: &[u8; 8] = b"BMOPSMP1";

/// CSV with a '#' header and one row of n values per sample.
pub fn write_csv(batch: &SampleBatch, out: &mut impl Write) -> Result<()> {
    let m = &batch.model;
    writeln!(out, "# coupled two-matrix sample: n={} m={} tau={} seed={} samples={}", m.n, m.m, m.tau, m.seed, batch.num_samples)?;
    writeln!(out, "# {}", (0..m.n).map(|k| format!("x{k}")).collect::<Vec<_>>().join(","))?;
    for i in 0..batch.num_samples {
        writeln!(out, "{}", batch.sample(i).iter().map(|v| fmt17(*v)).collect::<Vec<_>>().join(","))?;
    }
    Ok(())
}

/// Little-endian binary: magic, n and m as u32, tau as f64, seed as u64,
/// then the values as f64.
pub fn write_binary(batch: &SampleBatch, out: &mut impl Write) -> Result<()> {
    let m = &batch.model;
    out.write_all(MAGIC)?;
    out.write_all(&(m.n as u32).to_le_bytes())?;
    out.write_all(&(m.m as u32).to_le_bytes())?;
    out.write_all(&m.tau.to_le_bytes())?;
    out.write_all(&m.seed.to_le_bytes())?;
    for v in &batch.values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary(input: &mut impl Read) -> Result<SampleBatch> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    if buf.len() < 32 || &buf[..8] != MAGIC {
        return Err(Error::Io("not a sample file".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().unwrap()) as usize;
    let u64_at = |o: usize| u64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
    let model = CoupledModel::new(u32_at(8), u32_at(12), f64::from_bits(u64_at(16)), u64_at(24))?;
    let body = &buf[32..];
    if body.len() % (8 * model.n) != 0 {
        return Err(Error::Io("truncated sample file".into()));
    }
    let values: Vec<f64> = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(SampleBatch { model, num_samples: values.len() / model.n, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{omega, rho};
    use crate::mopoly::normalization_c;

    fn s0_spec(n: usize) -> KernelSpec {
        KernelSpec::new(0, 2.0, 0.5, 1.5, n).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(KernelSpec::new(1, 1.0, 0.5, 1.5, 2).is_err());
        assert!(KernelSpec::new(0, 1.0, 1.5, 0.5, 2).is_err());
        assert!(KernelSpec::new(0, 1.0, 0.5, 1.5, 0).is_err());
        assert!(matches!(CoupledModel::new(2, 2, 0.5, 0), Err(Error::Dimension(_))));
        assert!(CoupledModel::new(2, 3, 1.0, 0).is_err());
        let spec = CoupledModel::new(2, 4, 0.5, 1).unwrap().kernel_spec();
        assert_eq!(spec, s0_spec(2));
    }

    #[test]
    fn single_term_kernel() {
        let spec = KernelSpec::new(1, 2.5, 0.7, 1.3, 1).unwrap();
        let p = spec.params().unwrap();
        let c0 = normalization_c(&p, 0).value.to_f64();
        for (x, y) in [(0.3, 2.0), (1.0, 1.0), (4.0, 0.2)] {
            let want = omega(1.0, 0.7, x).unwrap().to_f64() * c0 * rho(1.5, 1.3, y).unwrap().to_f64();
            let got = kernel_eval(&spec, x, y).unwrap();
            assert!(((got - want) / want).abs() < 1e-13, "{got} {want}");
        }
    }

    #[test]
    fn trace_equals_n() {
        let cfg = QuadConfig::default();
        for n in [1, 2, 4, 6] {
            let t = kernel_trace(&s0_spec(n), &cfg).unwrap();
            assert!((t - n as f64).abs() < 1e-8, "n={n} trace={t}");
        }
    }

    #[test]
    fn first_moment_matches_recurrence() {
        let cfg = QuadConfig::default();
        for n in [1, 3, 5] {
            let spec = KernelSpec::new(1, 2.5, 0.8, 1.6, n).unwrap();
            let m = kernel_first_moment(&spec, &cfg).unwrap();
            let want = predicted_mean(&spec).unwrap();
            assert!(((m - want) / want).abs() < 1e-6, "n={n} {m} {want}");
        }
    }

    #[test]
    fn projection_reproduces_kernel() {
        let cfg = QuadConfig::default();
        for n in 1..=4 {
            for e in kernel_projection(&s0_spec(n), &[0.5, 1.5, 4.0], &cfg).unwrap() {
                assert!(e.relative() < 1e-6, "n={n} {e:?}");
            }
        }
    }

    #[test]
    fn density_curve_properties() {
        let spec = s0_spec(3);
        assert!(kernel_density_curve(&spec, &[1.0, 0.5]).is_err());
        assert!(kernel_density_curve(&spec, &[0.0, 0.5]).is_err());
        let h = 0.01;
        let grid: Vec<f64> = (0..20000).map(|k| (k as f64 + 0.5) * h).collect();
        let curve = kernel_density_curve(&spec, &grid).unwrap();
        assert!(curve.iter().all(|(_, v)| *v >= 0.0));
        let riemann: f64 = curve.iter().map(|(_, v)| v * h).sum();
        assert!((riemann - 3.0).abs() < 0.03, "{riemann}");
        // tail falls like e^{-2(beta - alpha) sqrt x}
        assert!(kernel_diag(&spec, 800.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn sampler_shapes_and_determinism() {
        let model = CoupledModel::new(1, 2, 0.3, 9).unwrap();
        let b = sample_coupled(&model, 50).unwrap();
        assert_eq!(b.values.len(), 50);
        assert!(b.values.iter().all(|v| *v >= 0.0));
        let model = CoupledModel::new(3, 5, 0.5, 42).unwrap();
        let b1 = sample_coupled(&model, 200).unwrap();
        let b2 = sample_coupled(&model, 200).unwrap();
        assert_eq!(b1, b2);
        assert_eq!(b1.values.len(), 600);
        let other = sample_coupled(&CoupledModel { seed: 43, ..model }, 200).unwrap();
        assert_ne!(b1.values, other.values);
    }

    #[test]
    fn binary_round_trip() {
        let b = sample_coupled(&CoupledModel::new(2, 4, 0.5, 7).unwrap(), 10).unwrap();
        let mut buf = Vec::new();
        write_binary(&b, &mut buf).unwrap();
        assert_eq!(&buf[..8], b"BMOPSMP1");
        assert_eq!(buf.len(), 32 + 8 * 20);
        assert_eq!(read_binary(&mut buf.as_slice()).unwrap(), b);
        assert!(read_binary(&mut &buf[..20]).is_err());
        let mut csv = Vec::new();
        write_csv(&b, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 10);
    }

    #[test]
    fn merging_keeps_mass() {
        let row = |e: f64| BinRow { lo: 0.0, hi: 1.0, observed: e, expected: e };
        let (rows, merges) = merge_underflow(vec![row(5.0), row(30.0), row(25.0), row(3.0), row(4.0)]);
        assert_eq!(merges, 3);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows.iter().map(|r| r.expected).sum::<f64>(), 67.0);
    }

    #[test]
    fn monte_carlo_matches_kernel() {
        let model = CoupledModel::new(2, 4, 0.5, 2024).unwrap();
        let spec = model.kernel_spec();
        let batch = sample_coupled(&model, 50_000).unwrap();
        let (mean, se) = batch.mean_sum();
        let want = predicted_mean(&spec).unwrap();
        assert!((mean - want).abs() < 3.0 * se, "{mean} {want} {se}");
        let cfg = QuadConfig::default();
        let bins = HistogramSpec::for_kernel(&spec, 40, 1e-3, &cfg).unwrap();
        let rep = density_compare(&batch, &spec, &bins, &cfg).unwrap();
        assert_eq!(rep.bins.iter().map(|b| b.observed).sum::<f64>(), 100_000.0);
        assert!(rep.p_value > 1e-3, "{rep:?}");
        let again = sample_coupled(&CoupledModel { seed: 7, ..model }, 50_000).unwrap();
        assert!(two_sample_compare(&batch, &again, &bins).unwrap().p_value > 1e-3);
    }
}
