//! Empirical mode decomposition by cubic-spline sifting.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{conventional_energy, shannon_bits};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmdConfig {
    pub max_imfs: usize,
    pub max_sifts: usize,
    /// Sifting stops once Σ(h_prev − h)² / Σ h_prev² drops below this.
    pub sd_threshold: f64,
}

impl Default for EmdConfig {
    fn default() -> Self {
        EmdConfig {
            max_imfs: 8,
            max_sifts: 50,
            sd_threshold: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Emd<T> {
    pub imfs: Vec<Vec<T>>,
    pub residual: Vec<T>,
}

impl<T: Scalar> Emd<T> {
    pub fn reconstruct(&self) -> Vec<T> {
        let mut out = self.residual.clone();
        for imf in &self.imfs {
            for (o, &v) in out.iter_mut().zip(imf) {
                *o += v;
            }
        }
        out
    }
}

pub const EMD_MIN_LEN: usize = 8;

pub fn emd<T: Scalar>(series: &[T]) -> Result<Emd<T>> {
    emd_with(series, EmdConfig::default())
}

pub fn emd_with<T: Scalar>(series: &[T], cfg: EmdConfig) -> Result<Emd<T>> {
    if series.len() < EMD_MIN_LEN {
        return Err(Error::TooShort {
            what: "EMD",
            required: EMD_MIN_LEN,
            got: series.len(),
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("EMD input"));
    }
    let threshold = T::lit(cfg.sd_threshold);
    let mut imfs: Vec<Vec<T>> = Vec::new();
    let mut residual = series.to_vec();

    while imfs.len() < cfg.max_imfs {
        if is_monotone(&residual) || extrema_count(&residual) < 2 {
            break;
        }
        let mut h = residual.clone();
        for _ in 0..cfg.max_sifts {
            let Some(mean) = mean_envelope(&h) else { break };
            let next: Vec<T> = h.iter().zip(&mean).map(|(&a, &m)| a - m).collect();
            let denom: T = h.iter().map(|&v| v * v).sum();
            let num: T = h.iter().zip(&next).map(|(&a, &b)| (a - b) * (a - b)).sum();
            h = next;
            if denom == T::zero() || num / denom < threshold {
                break;
            }
        }
        for (r, &v) in residual.iter_mut().zip(&h) {
            *r -= v;
        }
        imfs.push(h);
    }

    // Recompute the residual from the input so reconstruction is exact up to
    // a single rounding per sample.
    let mut residual = series.to_vec();
    for imf in &imfs {
        for (r, &v) in residual.iter_mut().zip(imf) {
            *r -= v;
        }
    }
    Ok(Emd { imfs, residual })
}

pub const EMD_SCALAR_COUNT: usize = 7;

/// Energy and energy-distribution Shannon entropy (bits) of the first three
/// IMFs, then the IMF count. Missing IMFs contribute zeros.
pub fn emd_scalars<T: Scalar>(series: &[T]) -> Result<[T; EMD_SCALAR_COUNT]> {
    let d = emd(series)?;
    let mut out = [T::zero(); EMD_SCALAR_COUNT];
    for (k, imf) in d.imfs.iter().take(3).enumerate() {
        let e = conventional_energy(imf);
        out[2 * k] = e;
        out[2 * k + 1] = if e > T::zero() {
            let p: Vec<T> = imf.iter().map(|&v| v * v / e).collect();
            shannon_bits(&p)
        } else {
            T::zero()
        };
    }
    out[6] = T::from_count(d.imfs.len());
    Ok(out)
}

fn is_monotone<T: Scalar>(x: &[T]) -> bool {
    x.windows(2).all(|w| w[1] >= w[0]) || x.windows(2).all(|w| w[1] <= w[0])
}

fn extrema<T: Scalar>(x: &[T]) -> (Vec<usize>, Vec<usize>) {
    let (mut maxima, mut minima) = (Vec::new(), Vec::new());
    for i in 1..x.len() - 1 {
        // a plateau counts once, at its first sample
        if x[i] > x[i - 1] && x[i] >= x[i + 1] {
            let mut j = i;
            while j + 1 < x.len() && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 == x.len() || x[j + 1] < x[i] {
                maxima.push(i);
            }
        } else if x[i] < x[i - 1] && x[i] <= x[i + 1] {
            let mut j = i;
            while j + 1 < x.len() && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 == x.len() || x[j + 1] > x[i] {
                minima.push(i);
            }
        }
    }
    (maxima, minima)
}

fn extrema_count<T: Scalar>(x: &[T]) -> usize {
    let (a, b) = extrema(x);
    a.len() + b.len()
}

/// Mean of upper and lower spline envelopes. Endpoints are pinned to the
/// value of the nearest extremum of each kind.
fn mean_envelope<T: Scalar>(x: &[T]) -> Option<Vec<T>> {
    let (maxima, minima) = extrema(x);
    if maxima.is_empty() || minima.is_empty() {
        return None;
    }
    let upper = envelope(x, &maxima);
    let lower = envelope(x, &minima);
    Some(
        upper
            .iter()
            .zip(&lower)
            .map(|(&u, &l)| (u + l) / T::lit(2.0))
            .collect(),
    )
}

fn envelope<T: Scalar>(x: &[T], idx: &[usize]) -> Vec<T> {
    let n = x.len();
    let mut kx = Vec::with_capacity(idx.len() + 2);
    let mut ky = Vec::with_capacity(idx.len() + 2);
    kx.push(T::zero());
    ky.push(x[idx[0]]);
    for &i in idx {
        kx.push(T::from_count(i));
        ky.push(x[i]);
    }
    kx.push(T::from_count(n - 1));
    ky.push(x[*idx.last().expect("non-empty")]);
    let spline = NaturalSpline::new(kx, ky);
    (0..n).map(|i| spline.eval(T::from_count(i))).collect()
}

/// Natural cubic spline through strictly increasing knots.
struct NaturalSpline<T> {
    x: Vec<T>,
    y: Vec<T>,
    m: Vec<T>,
}

impl<T: Scalar> NaturalSpline<T> {
    fn new(x: Vec<T>, y: Vec<T>) -> Self {
        let n = x.len();
        let mut m = vec![T::zero(); n];
        if n > 2 {
            // Thomas algorithm on the interior second-derivative system.
            let k = n - 2;
            let mut diag = vec![T::zero(); k];
            let mut rhs = vec![T::zero(); k];
            let mut upper = vec![T::zero(); k];
            let two = T::lit(2.0);
            let six = T::lit(6.0);
            for i in 0..k {
                let h0 = x[i + 1] - x[i];
                let h1 = x[i + 2] - x[i + 1];
                diag[i] = two * (h0 + h1);
                upper[i] = h1;
                rhs[i] = six * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
            }
            for i in 1..k {
                let lower = x[i + 1] - x[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] = rhs[i] - w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        NaturalSpline { x, y, m }
    }

    fn eval(&self, t: T) -> T {
        let n = self.x.len();
        let j = self.x.partition_point(|&v| v <= t).clamp(1, n - 1);
        let (x0, x1) = (self.x[j - 1], self.x[j]);
        let h = x1 - x0;
        let a = (x1 - t) / h;
        let b = (t - x0) / h;
        let six = T::lit(6.0);
        a * self.y[j - 1]
            + b * self.y[j]
            + ((a * a * a - a) * self.m[j - 1] + (b * b * b - b) * self.m[j]) * h * h / six
    }
}
