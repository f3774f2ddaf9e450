//! The all-at-once kappa-perturbed system, its scaled-circulant
//! diagonalization, and the three-step parallel solve.
//!
//! The perturbed stencil matrix B_k(kappa) (lower-triangular Toeplitz plus
//! kappa-weighted wrap-around) factors as Lambda(kappa) C Lambda(kappa)^{-1}
//! with C circulant, so the space-time system decouples into N independent
//! complex shifted solves after a DFT along time.
//!
//! DFT convention: forward transform uses e^{-i 2 pi j n / N} without
//! normalization; Step 1 applies forward-DFT/N, Step 3 the unnormalized
//! inverse. This is validated against a dense Kronecker oracle in the tests.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::bdf::{delta_eval, BdfTableau, STABILITY_ANGLES_DEG};
use crate::cq::cq_weights;
use crate::error::{Error, Result};
use crate::fem::SpatialDiscretization;
use crate::linalg::{BandLu, BandMatrix, Csr};
use crate::stepper::{ProblemData, SpaceTimeState, TimeGrid};

/// Thread pool wrapper with an explicit worker count.
pub struct Workers {
    pool: rayon::ThreadPool,
    n_workers: usize,
}

impl Workers {
    pub fn new(n_workers: usize) -> Result<Self> {
        if n_workers == 0 {
            return Err(Error::Config("worker count must be positive".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n_workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        Ok(Workers { pool, n_workers })
    }

    pub fn auto() -> Self {
        let n = std::thread::available_parallelism().map(|v| v.get()).unwrap_or(1);
        Workers::new(n).expect("default thread pool")
    }

    pub fn count(&self) -> usize {
        self.n_workers
    }

    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }
}

/// Which time-derivative kernel the plan diagonalizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeKernel {
    Heat,
    Subdiffusion { alpha: f64 },
}

impl TimeKernel {
    pub fn alpha(&self) -> f64 {
        match self {
            TimeKernel::Heat => 1.0,
            TimeKernel::Subdiffusion { alpha } => *alpha,
        }
    }
}

/// Immutable plan holding the diagonalization data and the N factored
/// shifted systems.
pub struct PintPlan {
    pub kernel: TimeKernel,
    pub kappa: f64,
    pub n_steps: usize,
    pub n_dof: usize,
    pub tau: f64,
    pub tableau: BdfTableau,
    /// Quadrature weights through j = N-1 (BDF weights zero-padded for heat).
    pub weights: Vec<f64>,
    /// lambda_scale[n-1] = kappa^{-(n-1)/N}, the diagonal of Lambda(kappa).
    pub lambda_scale: Vec<f64>,
    /// first_col[j] = omega_j kappa^{j/N}, first column of the circulant.
    pub first_col: Vec<f64>,
    /// Unnormalized forward DFT of `first_col`.
    pub eigenvalues: Vec<Complex64>,
    /// Solve the full spectrum instead of exploiting conjugate symmetry.
    pub full_spectrum: bool,
    solvers: Vec<Option<BandLu>>,
    fft_n: Arc<dyn Fft<f64>>,
    ifft_n: Arc<dyn Fft<f64>>,
    fft_2n: Arc<dyn Fft<f64>>,
    ifft_2n: Arc<dyn Fft<f64>>,
    /// FFT of the 2N embedding column (0, w_1..w_{N-1}, 0...0).
    tail_hat: Vec<Complex64>,
}

/// Build the diagonalization plan. `extra_stiffness` adds a frozen-Jacobian
/// term to the spatial operator inside every shifted solve.
pub fn build_plan(
    disc: &SpatialDiscretization,
    grid: &TimeGrid,
    tableau: BdfTableau,
    kernel: TimeKernel,
    kappa: f64,
    extra_stiffness: Option<&Csr>,
    full_spectrum: bool,
) -> Result<PintPlan> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::InvalidKappa(kappa));
    }
    let n = grid.n_steps;
    if n < tableau.k {
        return Err(Error::Config(format!(
            "window N = {n} shorter than BDF order k = {}",
            tableau.k
        )));
    }
    let alpha = kernel.alpha();
    let weights: Vec<f64> = match kernel {
        TimeKernel::Heat => {
            let mut w = vec![0.0; n];
            for j in 0..=tableau.k.min(n - 1) {
                w[j] = tableau.omega[j];
            }
            w
        }
        TimeKernel::Subdiffusion { alpha } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::InvalidAlpha(alpha));
            }
            cq_weights(tableau.k, alpha, n - 1)?.w
        }
    };

    let nf = n as f64;
    let lambda_scale: Vec<f64> = (0..n).map(|j| kappa.powf(-(j as f64) / nf)).collect();
    let first_col: Vec<f64> =
        weights.iter().enumerate().map(|(j, &w)| w * kappa.powf(j as f64 / nf)).collect();

    let mut planner = FftPlanner::new();
    let fft_n = planner.plan_fft_forward(n);
    let ifft_n = planner.plan_fft_inverse(n);
    let fft_2n = planner.plan_fft_forward(2 * n);
    let ifft_2n = planner.plan_fft_inverse(2 * n);

    let mut eig: Vec<Complex64> =
        first_col.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_n.process(&mut eig);

    let mut tail_hat = vec![Complex64::new(0.0, 0.0); 2 * n];
    for j in 1..n {
        tail_hat[j] = Complex64::new(weights[j], 0.0);
    }
    fft_2n.process(&mut tail_hat);

    let tau_pow = grid.tau.powf(alpha);
    let last = if full_spectrum { n - 1 } else { n / 2 };
    let mut solvers: Vec<Option<BandLu>> = Vec::with_capacity(n);
    for (idx, &d) in eig.iter().enumerate() {
        if idx > last {
            solvers.push(None);
            continue;
        }
        let scale_k = Complex64::new(tau_pow, 0.0);
        let mut terms: Vec<(&Csr, Complex64)> =
            vec![(&disc.mass, d), (&disc.stiffness, scale_k)];
        if let Some(s) = extra_stiffness {
            terms.push((s, scale_k));
        }
        let lu = BandMatrix::from_weighted_csr(&terms)
            .factorize()
            .map_err(|e| Error::ShiftedSolveFailure { index: idx, reason: e.to_string() })?;
        solvers.push(Some(lu));
    }

    Ok(PintPlan {
        kernel,
        kappa,
        n_steps: n,
        n_dof: disc.n_dof,
        tau: grid.tau,
        tableau,
        weights,
        lambda_scale,
        first_col,
        eigenvalues: eig,
        full_spectrum,
        solvers,
        fft_n,
        ifft_n,
        fft_2n,
        ifft_2n,
        tail_hat,
    })
}

impl PintPlan {
    /// Partial weight sum `sum_{j=0}^{n-1} w_j` multiplying the initial value.
    pub fn partial_sum(&self, n: usize) -> f64 {
        self.weights.iter().take(n).sum()
    }

    fn check_rhs(&self, len: usize) -> Result<()> {
        if len != self.n_steps * self.n_dof {
            return Err(Error::Dimension(format!(
                "rhs has {len} entries, plan expects {}",
                self.n_steps * self.n_dof
            )));
        }
        Ok(())
    }
}

/// Wrap-around tail `t_n = sum_{j=n}^{N-1} w_j u_prev^{N+n-j}` for all n at
/// once via the 2N circulant embedding; O(M N log N). Level-major output.
pub fn wraparound_tail(plan: &PintPlan, u_prev: &SpaceTimeState, workers: &Workers) -> Vec<f64> {
    let (n, m) = (plan.n_steps, plan.n_dof);
    let mut dof_major = vec![0.0; m * n];
    workers.install(|| {
        dof_major.par_chunks_mut(n).enumerate().for_each(|(d, row)| {
            let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
            for lev in 1..=n {
                buf[n + lev - 1] = Complex64::new(u_prev.level(lev)[d], 0.0);
            }
            plan.fft_2n.process(&mut buf);
            for (b, &c) in buf.iter_mut().zip(&plan.tail_hat) {
                *b *= c;
            }
            plan.ifft_2n.process(&mut buf);
            let scale = 1.0 / (2 * n) as f64;
            for lev in 1..=n {
                row[lev - 1] = buf[lev - 1].re * scale;
            }
        });
    });
    let mut out = vec![0.0; n * m];
    for lev in 0..n {
        for d in 0..m {
            out[lev * m + d] = dof_major[d * n + lev];
        }
    }
    out
}

/// Direct O(N^2) evaluation of the same tail, kept as a cross-check.
pub fn wraparound_tail_direct(weights: &[f64], u_prev: &SpaceTimeState) -> Vec<f64> {
    let (n, m) = (u_prev.n_steps, u_prev.n_dof);
    let mut out = vec![0.0; n * m];
    for lev in 1..=n {
        for j in lev..n {
            let w = weights[j];
            let src = u_prev.level(n + lev - j);
            for d in 0..m {
                out[(lev - 1) * m + d] += w * src[d];
            }
        }
    }
    out
}

/// Heat right-hand side of the waveform iteration:
/// `F_n = corrected_rhs(n) + (1/tau) M [psum(n) v + kappa sum_{j=n}^k w_j U_prev^{N+n-j}]`.
pub fn assemble_rhs_heat(
    plan: &PintPlan,
    disc: &SpatialDiscretization,
    data: &ProblemData,
    u_prev: &SpaceTimeState,
) -> Result<Vec<f64>> {
    if plan.kernel != TimeKernel::Heat {
        return Err(Error::Config("plan kernel is not heat".into()));
    }
    let (n, m) = (plan.n_steps, plan.n_dof);
    let k = plan.tableau.k;
    let mut out = vec![0.0; n * m];
    let mut comb = vec![0.0; m];
    for lev in 1..=n {
        let rhs = &mut out[(lev - 1) * m..lev * m];
        rhs.copy_from_slice(&data.corrected_rhs(&plan.tableau, plan.tau, lev));
        let psum = plan.partial_sum(lev);
        for (c, &vv) in comb.iter_mut().zip(&data.v) {
            *c = psum * vv;
        }
        for j in lev..=k {
            let w = plan.kappa * plan.tableau.omega[j];
            for (c, &u) in comb.iter_mut().zip(u_prev.level(n + lev - j)) {
                *c += w * u;
            }
        }
        let mcomb = disc.mass.matvec_alloc(&comb);
        for (r, &v) in rhs.iter_mut().zip(&mcomb) {
            *r += v / plan.tau;
        }
    }
    Ok(out)
}

/// Subdiffusion right-hand side; the history tail is evaluated with the 2N
/// circulant embedding.
pub fn assemble_rhs_subdiffusion(
    plan: &PintPlan,
    disc: &SpatialDiscretization,
    data: &ProblemData,
    u_prev: &SpaceTimeState,
    workers: &Workers,
) -> Result<Vec<f64>> {
    let alpha = match plan.kernel {
        TimeKernel::Subdiffusion { alpha } => alpha,
        TimeKernel::Heat => return Err(Error::Config("plan kernel is not subdiffusion".into())),
    };
    let (n, m) = (plan.n_steps, plan.n_dof);
    let tail = wraparound_tail(plan, u_prev, workers);
    let scale = plan.tau.powf(-alpha);
    let mut out = vec![0.0; n * m];
    let mut comb = vec![0.0; m];
    for lev in 1..=n {
        let rhs = &mut out[(lev - 1) * m..lev * m];
        rhs.copy_from_slice(&data.corrected_rhs(&plan.tableau, plan.tau, lev));
        let psum = plan.partial_sum(lev);
        let t = &tail[(lev - 1) * m..lev * m];
        for ((c, &vv), &tt) in comb.iter_mut().zip(&data.v).zip(t) {
            *c = psum * vv + plan.kappa * tt;
        }
        let mcomb = disc.mass.matvec_alloc(&comb);
        for (r, &v) in rhs.iter_mut().zip(&mcomb) {
            *r += scale * v;
        }
    }
    Ok(out)
}

/// One diagonalized all-at-once solve: Step 1 scale + forward DFT, Step 2
/// decoupled shifted solves, Step 3 inverse DFT + scale, real part.
pub fn pint_solve_once(
    plan: &PintPlan,
    rhs: &[f64],
    workers: &Workers,
) -> Result<Vec<f64>> {
    plan.check_rhs(rhs.len())?;
    let (n, m) = (plan.n_steps, plan.n_dof);
    let tau_pow = plan.tau.powf(plan.kernel.alpha());
    let inv_n = 1.0 / n as f64;

    // Step 1: per DOF, scale level n by kappa^{(n-1)/N} and forward DFT / N
    let mut spectral_dof = vec![Complex64::new(0.0, 0.0); m * n];
    workers.install(|| {
        spectral_dof.par_chunks_mut(n).enumerate().for_each(|(d, row)| {
            for lev in 0..n {
                row[lev] =
                    Complex64::new(rhs[lev * m + d] / plan.lambda_scale[lev], 0.0);
            }
            plan.fft_n.process(row);
            for v in row.iter_mut() {
                *v *= inv_n;
            }
        });
    });

    // transpose to level-major for the shifted solves
    let mut spectral = vec![Complex64::new(0.0, 0.0); n * m];
    for lev in 0..n {
        for d in 0..m {
            spectral[lev * m + d] = spectral_dof[d * n + lev];
        }
    }

    // Step 2: (d_n M + tau^alpha K) q_n = tau^alpha h_n, independent in n
    workers.install(|| {
        spectral.par_chunks_mut(m).enumerate().for_each(|(lev, row)| {
            if let Some(lu) = &plan.solvers[lev] {
                for v in row.iter_mut() {
                    *v *= tau_pow;
                }
                lu.solve_in_place(row);
            }
        });
    });
    if !plan.full_spectrum {
        // conjugate-pair symmetry: q_{N-n} = conj(q_n) for real data
        for lev in n / 2 + 1..n {
            for d in 0..m {
                spectral[lev * m + d] = spectral[(n - lev) * m + d].conj();
            }
        }
    }

    // Step 3: per DOF, unnormalized inverse DFT then scale by kappa^{-(n-1)/N}
    workers.install(|| {
        spectral_dof.par_chunks_mut(n).enumerate().for_each(|(d, row)| {
            for lev in 0..n {
                row[lev] = spectral[lev * m + d];
            }
            plan.ifft_n.process(row);
            for (lev, v) in row.iter_mut().enumerate() {
                *v *= plan.lambda_scale[lev];
            }
        });
    });

    let mut out = vec![0.0; n * m];
    let mut max_im = 0.0f64;
    let mut max_re = 0.0f64;
    for lev in 0..n {
        for d in 0..m {
            let v = spectral_dof[d * n + lev];
            out[lev * m + d] = v.re;
            max_im = max_im.max(v.im.abs());
            max_re = max_re.max(v.re.abs());
        }
    }
    let rel = max_im / max_re.max(f64::MIN_POSITIVE);
    if rel > 1e-8 {
        return Err(Error::ImaginaryResidue(rel));
    }
    Ok(out)
}

/// A-priori relative roundoff bound of the diagonalized solve.
pub fn roundoff_bound(k: usize, kappa: f64, n: usize, alpha: f64, mu0: f64, t_final: f64) -> f64 {
    let eps = f64::EPSILON;
    let delta = delta_eval(k, Complex64::new(-1.0, 0.0)).unwrap().re;
    let theta = STABILITY_ANGLES_DEG[k - 1].to_radians();
    let nf = n as f64;
    if alpha >= 1.0 {
        let ck = 3.0 * (1.0 + (delta / t_final) / mu0) / theta.sin();
        ck * eps * kappa.powi(-2) * nf * nf
    } else {
        let pi = std::f64::consts::PI;
        let angle = (alpha * (pi - theta)).max(pi / 2.0);
        let ck = 3.0 * (1.0 + (delta / t_final).powf(alpha) / mu0) / angle.sin();
        ck * eps * kappa.powi(-2) * nf.powf(1.0 + alpha)
    }
}
