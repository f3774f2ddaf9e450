//! Convolution-quadrature weights for the fractional power `delta_k(xi)^alpha`.
//!
//! The weights are generated by the J.C.P. Miller recurrence on the power of a
//! polynomial, which is stable and O(k * n). An FFT sampling route is kept in
//! [`oracle`] purely as an independent cross-check.

use crate::bdf::{bdf_weights, MAX_ORDER};
use crate::error::{Error, Result};

/// Hard cap on the number of generated weights (`n_max`).
pub const WEIGHT_BUDGET: usize = 1 << 26;

/// Weights of `delta_k(xi)^alpha` through order `n_max`.
#[derive(Debug, Clone)]
pub struct FractionalWeights {
    pub k: usize,
    pub alpha: f64,
    /// w[j] = omega_j^{(alpha)}, j = 0..=n_max.
    pub w: Vec<f64>,
}

/// Generate omega_j^{(alpha)} for j = 0..=n_max by Miller's recurrence:
/// with p = delta_k and f = p^alpha, `f' p = alpha f p'` gives
/// `n c_0 b_n = sum_{j=1}^{min(n,k)} ((alpha+1) j - n) c_j b_{n-j}`.
pub fn cq_weights(k: usize, alpha: f64, n_max: usize) -> Result<FractionalWeights> {
    if !(k >= 1 && k <= MAX_ORDER) {
        return Err(Error::InvalidOrder(k));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    if n_max > WEIGHT_BUDGET {
        return Err(Error::WeightBudget(n_max));
    }
    let c = bdf_weights(k)?;
    let mut w = Vec::with_capacity(n_max + 1);
    w.push(c[0].powf(alpha));
    for n in 1..=n_max {
        let mut acc = 0.0;
        for j in 1..=n.min(k) {
            acc += ((alpha + 1.0) * j as f64 - n as f64) * c[j] * w[n - j];
        }
        w.push(acc / (n as f64 * c[0]));
    }
    Ok(FractionalWeights { k, alpha, w })
}

impl FractionalWeights {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Partial sum `sum_{j=0}^{n-1} omega_j^{(alpha)}`.
    pub fn partial_sum(&self, n: usize) -> f64 {
        self.w.iter().take(n).sum()
    }
}

/// Apply the discretized Caputo operator with constant pre-history `v`:
/// `tau^{-alpha} sum_{j=0}^{n} omega_j^{(alpha)} (U^{n-j} - v)`,
/// where `history[j] = U^{n-j}` for j = 0..n-1 and levels <= 0 equal `v`.
pub fn discrete_caputo_apply(
    weights: &FractionalWeights,
    tau: f64,
    history: &[Vec<f64>],
    v: &[f64],
) -> Result<Vec<f64>> {
    let n = history.len();
    if weights.len() <= n {
        return Err(Error::Dimension(format!(
            "need {} weights for {} history levels, have {}",
            n + 1,
            n,
            weights.len()
        )));
    }
    let dim = v.len();
    let mut out = vec![0.0; dim];
    for (j, level) in history.iter().enumerate() {
        if level.len() != dim {
            return Err(Error::Dimension(format!(
                "history level {j} has {} entries, expected {dim}",
                level.len()
            )));
        }
        let wj = weights.w[j];
        for (o, (&u, &vv)) in out.iter_mut().zip(level.iter().zip(v)) {
            *o += wj * (u - vv);
        }
    }
    // the j = n term involves U^0 = v and vanishes
    let scale = tau.powf(-weights.alpha);
    for o in &mut out {
        *o *= scale;
    }
    Ok(out)
}

/// FFT sampling cross-check, independent of the Miller recurrence.
pub mod oracle {
    use num_complex::Complex64;
    use rustfft::FftPlanner;

    use crate::bdf::delta_eval;

    /// Recover the first `n_max + 1` weights by sampling
    /// `delta_k(rho e^{i theta})^alpha` on a slightly shrunken circle and
    /// transforming back. The radius balances noise amplification
    /// (`rho^{-n_max}`) against aliasing (`rho^{len}`), with heavy
    /// oversampling so both stay below the 1e-10 agreement target.
    pub fn fft_reference_weights(k: usize, alpha: f64, n_max: usize) -> Vec<f64> {
        let len = (32 * n_max.max(16)).next_power_of_two();
        let rho = 1.0 - 2.0 / n_max.max(16) as f64;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(len);
        let mut buf: Vec<Complex64> = (0..len)
            .map(|m| {
                let theta = 2.0 * std::f64::consts::PI * m as f64 / len as f64;
                let xi = Complex64::from_polar(rho, theta);
                delta_eval(k, xi).unwrap().powf(alpha)
            })
            .collect();
        // forward transform of samples at e^{+i theta} yields the series
        // coefficients scaled by len * rho^n
        fft.process(&mut buf);
        (0..=n_max).map(|n| buf[n].re / (len as f64 * rho.powi(n as i32))).collect()
    }
}
