//! Sequential BDFk time stepping with starting corrections, for linear
//! diffusion and time-fractional subdiffusion. These serve as the reference
//! solvers that the parallel-in-time iteration must reproduce.

use num_complex::Complex64;

use crate::bdf::BdfTableau;
use crate::cq::{cq_weights, FractionalWeights};
use crate::error::{Error, Result};
use crate::fem::SpatialDiscretization;
use crate::linalg::factor_shifted;

/// Uniform time grid on (0, T] with N = n_steps levels.
#[derive(Debug, Clone, Copy)]
pub struct TimeGrid {
    pub t_final: f64,
    pub n_steps: usize,
    pub tau: f64,
}

impl TimeGrid {
    pub fn new(t_final: f64, n_steps: usize) -> Result<Self> {
        if !(t_final > 0.0) || n_steps == 0 {
            return Err(Error::Config(format!(
                "invalid time grid: T = {t_final}, N = {n_steps}"
            )));
        }
        Ok(TimeGrid { t_final, n_steps, tau: t_final / n_steps as f64 })
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }
}

/// Data entering the starting corrections at the first k - 1 steps.
#[derive(Debug, Clone)]
pub struct CorrectionData {
    /// Discrete `f(0) - A v` term: `fbar_0 - K v` (minus `M g(v)` in the
    /// semilinear case).
    pub corr0: Vec<f64>,
    /// Load vectors of `d^l f / dt^l` at t = 0, l = 1..k-2.
    pub derivs: Vec<Vec<f64>>,
}

impl CorrectionData {
    pub fn none(n_dof: usize) -> Self {
        CorrectionData { corr0: vec![0.0; n_dof], derivs: Vec::new() }
    }
}

/// Right-hand-side data for one initial-value problem.
#[derive(Debug, Clone)]
pub struct ProblemData {
    /// Initial value coefficients.
    pub v: Vec<f64>,
    /// Load vectors `fbar_n` for n = 1..N (index n - 1).
    pub loads: Vec<Vec<f64>>,
    pub correction: CorrectionData,
}

impl ProblemData {
    /// Assemble the fully corrected load `F_n` for step n >= 1:
    /// `fbar_n + a_n corr0 + sum_l b_{l,n} tau^l derivs[l-1]`.
    pub fn corrected_rhs(&self, tableau: &BdfTableau, tau: f64, n: usize) -> Vec<f64> {
        let mut rhs = self.loads[n - 1].clone();
        let a = tableau.a(n);
        if a != 0.0 {
            for (r, &c) in rhs.iter_mut().zip(&self.correction.corr0) {
                *r += a * c;
            }
        }
        for (l, d) in self.derivs_iter() {
            let b = tableau.b(l, n);
            if b != 0.0 {
                let scale = b * tau.powi(l as i32);
                for (r, &dv) in rhs.iter_mut().zip(d) {
                    *r += scale * dv;
                }
            }
        }
        rhs
    }

    fn derivs_iter(&self) -> impl Iterator<Item = (usize, &Vec<f64>)> {
        self.correction.derivs.iter().enumerate().map(|(i, d)| (i + 1, d))
    }
}

/// Solution levels 1..N plus the initial value.
#[derive(Debug, Clone)]
pub struct SpaceTimeState {
    pub n_steps: usize,
    pub n_dof: usize,
    pub v: Vec<f64>,
    /// Levels 1..N, flattened row-major: level n at `u[(n-1)*n_dof..]`.
    pub u: Vec<f64>,
}

impl SpaceTimeState {
    pub fn zeros(n_steps: usize, v: Vec<f64>) -> Self {
        let n_dof = v.len();
        SpaceTimeState { n_steps, n_dof, v, u: vec![0.0; n_steps * n_dof] }
    }

    /// Level n, with level 0 being the initial value.
    pub fn level(&self, n: usize) -> &[f64] {
        if n == 0 {
            &self.v
        } else {
            &self.u[(n - 1) * self.n_dof..n * self.n_dof]
        }
    }

    pub fn level_mut(&mut self, n: usize) -> &mut [f64] {
        assert!(n >= 1);
        &mut self.u[(n - 1) * self.n_dof..n * self.n_dof]
    }
}

fn check_problem(disc: &SpatialDiscretization, grid: &TimeGrid, data: &ProblemData) -> Result<()> {
    if data.v.len() != disc.n_dof {
        return Err(Error::Dimension(format!(
            "initial value has {} entries, expected {}",
            data.v.len(),
            disc.n_dof
        )));
    }
    if data.loads.len() != grid.n_steps {
        return Err(Error::Dimension(format!(
            "{} load vectors for {} steps",
            data.loads.len(),
            grid.n_steps
        )));
    }
    Ok(())
}

/// Solve `(c M + K) x = b` with one iterative-refinement pass; the stiff
/// spatial modes otherwise leave roundoff well above machine precision.
fn refined_solve(
    lu: &crate::linalg::BandLu,
    disc: &SpatialDiscretization,
    c: f64,
    b: &[f64],
) -> Vec<f64> {
    let mut x = lu.solve_real(b);
    let mx = disc.mass.matvec_alloc(&x);
    let kx = disc.stiffness.matvec_alloc(&x);
    let resid: Vec<f64> =
        (0..x.len()).map(|i| b[i] - c * mx[i] - kx[i]).collect();
    let dx = lu.solve_real(&resid);
    for (xi, &d) in x.iter_mut().zip(&dx) {
        *xi += d;
    }
    x
}

/// Sequential corrected BDFk for `M u' + K u = f`, `u(0) = v`.
pub fn solve_heat(
    disc: &SpatialDiscretization,
    grid: &TimeGrid,
    tableau: &BdfTableau,
    data: &ProblemData,
) -> Result<SpaceTimeState> {
    check_problem(disc, grid, data)?;
    let tau = grid.tau;
    let lu = factor_shifted(
        &disc.mass,
        &disc.stiffness,
        Complex64::new(tableau.omega[0] / tau, 0.0),
        Complex64::new(1.0, 0.0),
    )?;
    let mut state = SpaceTimeState::zeros(grid.n_steps, data.v.clone());
    let mut hist_comb = vec![0.0; disc.n_dof];
    for n in 1..=grid.n_steps {
        let mut rhs = data.corrected_rhs(tableau, tau, n);
        // the difference operator acts on u - v, so only levels >= 1 enter
        // the history and the initial value contributes the partial sum
        let psum = tableau.partial_sum(n.min(tableau.k + 1));
        for (h, &vv) in hist_comb.iter_mut().zip(&data.v) {
            *h = psum * vv;
        }
        for j in 1..n.min(tableau.k + 1) {
            let w = tableau.omega[j];
            for (h, &u) in hist_comb.iter_mut().zip(state.level(n - j)) {
                *h -= w * u;
            }
        }
        let m_hist = disc.mass.matvec_alloc(&hist_comb);
        for (r, &m) in rhs.iter_mut().zip(&m_hist) {
            *r += m / tau;
        }
        let x = refined_solve(&lu, disc, tableau.omega[0] / tau, &rhs);
        state.level_mut(n).copy_from_slice(&x);
    }
    Ok(state)
}

/// Sequential corrected BDFk convolution quadrature for the subdiffusion
/// problem `M D_t^alpha u + K u = f`, `u(0) = v`. Cost is O(M N^2).
pub fn solve_subdiffusion(
    disc: &SpatialDiscretization,
    grid: &TimeGrid,
    tableau: &BdfTableau,
    alpha: f64,
    data: &ProblemData,
) -> Result<SpaceTimeState> {
    check_problem(disc, grid, data)?;
    let tau = grid.tau;
    let weights: FractionalWeights = cq_weights(tableau.k, alpha, grid.n_steps)?;
    let scale = tau.powf(-alpha);
    let lu = factor_shifted(
        &disc.mass,
        &disc.stiffness,
        Complex64::new(weights.w[0] * scale, 0.0),
        Complex64::new(1.0, 0.0),
    )?;
    let mut state = SpaceTimeState::zeros(grid.n_steps, data.v.clone());
    let mut hist_comb = vec![0.0; disc.n_dof];
    for n in 1..=grid.n_steps {
        let mut rhs = data.corrected_rhs(tableau, tau, n);
        // D_t^alpha acts on u - v, so the initial value enters through the
        // partial weight sum
        let psum = weights.partial_sum(n);
        for (h, &vv) in hist_comb.iter_mut().zip(&data.v) {
            *h = psum * vv;
        }
        for j in 1..n {
            let w = weights.w[j];
            for (h, &u) in hist_comb.iter_mut().zip(state.level(n - j)) {
                *h -= w * u;
            }
        }
        let m_hist = disc.mass.matvec_alloc(&hist_comb);
        for (r, &m) in rhs.iter_mut().zip(&m_hist) {
            *r += scale * m;
        }
        let x = refined_solve(&lu, disc, weights.w[0] * scale, &rhs);
        state.level_mut(n).copy_from_slice(&x);
    }
    Ok(state)
}

/// Least-squares slope of log(error) against log(tau).
pub fn observed_order(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples);
    }
    if samples.iter().any(|&(_, e)| e <= 0.0) {
        return Err(Error::ZeroError);
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(t, e)| (t.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
}
