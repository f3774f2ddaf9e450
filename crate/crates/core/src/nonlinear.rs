//! Semilinear (Allen-Cahn type) extension: modified CQ-BDFk scheme, outer
//! modified-Newton linearization with a time-averaged frozen Jacobian, and
//! inner waveform relaxation on the Newton correction.

use crate::bdf::BdfTableau;
use crate::cq::cq_weights;
use crate::error::{Error, Result};
use crate::fem::SpatialDiscretization;
use crate::linalg::{mass_norm, BandMatrix, Csr};
use crate::paradiag::{build_plan, PintPlan, TimeKernel, Workers};
use crate::stepper::{CorrectionData, ProblemData, SpaceTimeState, TimeGrid};
use crate::waveform::{run_waveform, PintConfig};

/// Pointwise nonlinearity and its derivative, applied nodally.
pub struct NonlinearProblem {
    pub g: Box<dyn Fn(f64) -> f64 + Sync>,
    pub g_prime: Box<dyn Fn(f64) -> f64 + Sync>,
    pub eps_w: f64,
    pub base: ProblemData,
}

impl NonlinearProblem {
    /// Allen-Cahn nonlinearity g(u) = (u^3 - u) / eps^2.
    pub fn allen_cahn(eps_w: f64, base: ProblemData) -> Self {
        let e2 = eps_w * eps_w;
        NonlinearProblem {
            g: Box::new(move |u| (u * u * u - u) / e2),
            g_prime: Box::new(move |u| (3.0 * u * u - 1.0) / e2),
            eps_w,
            base,
        }
    }

    /// Finite-difference consistency of g and g' at a few sample points.
    pub fn check_consistency(&self) -> Result<()> {
        let step = 1e-6;
        for &u in &[-1.3, -0.4, 0.0, 0.7, 1.9] {
            let fd = ((self.g)(u + step) - (self.g)(u - step)) / (2.0 * step);
            let gp = (self.g_prime)(u);
            if (fd - gp).abs() > 1e-6 * gp.abs().max(1.0) {
                return Err(Error::Config(format!(
                    "g and g' inconsistent at u = {u}: fd {fd}, g' {gp}"
                )));
            }
        }
        Ok(())
    }

    fn g_vec(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|&x| (self.g)(x)).collect()
    }

    fn g_prime_vec(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|&x| (self.g_prime)(x)).collect()
    }
}

/// History of the outer Newton iteration.
#[derive(Debug, Clone, Default)]
pub struct NewtonState {
    /// Inner waveform iterations per outer step.
    pub inner_counts: Vec<usize>,
    /// e_l^N against the reference, l = 0..outer_iters.
    pub outer_errors: Vec<f64>,
    /// Plan constructions (one per outer step by design).
    pub plan_builds: usize,
    pub outer_iters: usize,
    /// The correction max-norm dropped below the tolerance before the cap.
    pub converged: bool,
}

fn kernel_weights(tableau: &BdfTableau, kernel: TimeKernel, n: usize) -> Result<Vec<f64>> {
    match kernel {
        TimeKernel::Heat => {
            let mut w = vec![0.0; n];
            for j in 0..=tableau.k.min(n - 1) {
                w[j] = tableau.omega[j];
            }
            Ok(w)
        }
        TimeKernel::Subdiffusion { alpha } => Ok(cq_weights(tableau.k, alpha, n - 1)?.w),
    }
}

/// Sequential reference for the modified CQ-BDFk semilinear scheme; each time
/// level is solved by plain Newton to 1e-13 residual.
pub fn solve_semilinear_reference(
    problem: &NonlinearProblem,
    disc: &SpatialDiscretization,
    grid: &TimeGrid,
    tableau: &BdfTableau,
    kernel: TimeKernel,
) -> Result<SpaceTimeState> {
    let data = &problem.base;
    let n_steps = grid.n_steps;
    let m = disc.n_dof;
    let alpha = kernel.alpha();
    let weights = kernel_weights(tableau, kernel, n_steps + 1)?;
    let scale = grid.tau.powf(-alpha);
    let mut state = SpaceTimeState::zeros(n_steps, data.v.clone());
    let mut hist = vec![0.0; m];
    for n in 1..=n_steps {
        let rhs_data = data.corrected_rhs(tableau, grid.tau, n);
        let psum: f64 = weights.iter().take(n).sum();
        for (h, &vv) in hist.iter_mut().zip(&data.v) {
            *h = psum * vv;
        }
        for j in 1..n {
            let w = weights[j];
            for (h, &u) in hist.iter_mut().zip(state.level(n - j)) {
                *h -= w * u;
            }
        }
        let m_hist = disc.mass.matvec_alloc(&hist);

        // Newton on (w0 scale) M u + K u + M g(u) = rhs_data + scale * m_hist
        let mut u = state.level(n - 1).to_vec();
        let mut converged = false;
        for _ in 0..50 {
            let gu = problem.g_vec(&u);
            let mu = disc.mass.matvec_alloc(&u);
            let ku = disc.stiffness.matvec_alloc(&u);
            let mgu = disc.mass.matvec_alloc(&gu);
            let residual: Vec<f64> = (0..m)
                .map(|i| {
                    weights[0] * scale * mu[i] + ku[i] + mgu[i]
                        - rhs_data[i]
                        - scale * m_hist[i]
                })
                .collect();
            let rmax = residual.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            if rmax < 1e-13 {
                converged = true;
                break;
            }
            let shift = disc.mass.scaled_columns(&problem.g_prime_vec(&u));
            let jac = BandMatrix::from_weighted_csr(&[
                (&disc.mass, (weights[0] * scale).into()),
                (&disc.stiffness, 1.0.into()),
                (&shift, 1.0.into()),
            ])
            .factorize()?;
            let delta = jac.solve_real(&residual);
            for (ui, d) in u.iter_mut().zip(&delta) {
                *ui -= d;
            }
        }
        if !converged {
            return Err(Error::NewtonFailure(n));
        }
        state.level_mut(n).copy_from_slice(&u);
    }
    Ok(state)
}

/// Newton residual loads r_n = F_n - [M caputo(U)_n + K U^n + M g(U^n)]
/// in load-vector form, for all levels.
fn newton_residual(
    problem: &NonlinearProblem,
    disc: &SpatialDiscretization,
    grid: &TimeGrid,
    tableau: &BdfTableau,
    weights: &[f64],
    alpha: f64,
    state: &SpaceTimeState,
) -> Vec<Vec<f64>> {
    let data = &problem.base;
    let (n_steps, m) = (state.n_steps, state.n_dof);
    let scale = grid.tau.powf(-alpha);
    let mut out = Vec::with_capacity(n_steps);
    let mut hist = vec![0.0; m];
    for n in 1..=n_steps {
        let rhs_data = data.corrected_rhs(tableau, grid.tau, n);
        let psum: f64 = weights.iter().take(n).sum();
        for (h, &vv) in hist.iter_mut().zip(&data.v) {
            *h = -psum * vv;
        }
        for j in 0..n {
            let w = weights[j];
            for (h, &u) in hist.iter_mut().zip(state.level(n - j)) {
                *h += w * u;
            }
        }
        let m_hist = disc.mass.matvec_alloc(&hist);
        let ku = disc.stiffness.matvec_alloc(state.level(n));
        let mgu = disc.mass.matvec_alloc(&problem.g_vec(state.level(n)));
        out.push(
            (0..m)
                .map(|i| rhs_data[i] - scale * m_hist[i] - ku[i] - mgu[i])
                .collect(),
        );
    }
    out
}

/// Outer modified-Newton iteration: freeze g'(U_bar), solve the linear
/// correction system by inner waveform relaxation, update, repeat.
#[allow(clippy::too_many_arguments)]
pub fn newton_pint_solve(
    problem: &NonlinearProblem,
    disc: &SpatialDiscretization,
    grid: &TimeGrid,
    tableau: &BdfTableau,
    kernel: TimeKernel,
    config: &PintConfig,
    outer_cap: usize,
    reference: Option<&SpaceTimeState>,
    workers: &Workers,
) -> Result<(SpaceTimeState, NewtonState)> {
    let data = &problem.base;
    let (n_steps, m) = (grid.n_steps, disc.n_dof);
    let alpha = kernel.alpha();
    let weights = kernel_weights(tableau, kernel, n_steps + 1)?;
    let outer_tol = 1e-12;

    let mut state = SpaceTimeState::zeros(n_steps, data.v.clone());
    for lev in 1..=n_steps {
        state.level_mut(lev).copy_from_slice(&data.v);
    }
    let mut history = NewtonState::default();
    let final_err = |s: &SpaceTimeState| {
        reference.map(|r| {
            let diff: Vec<f64> = s
                .level(n_steps)
                .iter()
                .zip(r.level(n_steps))
                .map(|(a, b)| a - b)
                .collect();
            mass_norm(&disc.mass, &diff)
        })
    };
    if let Some(e) = final_err(&state) {
        history.outer_errors.push(e);
    }

    for _ in 1..=outer_cap {
        // time-averaged Jacobian shift, constant within this outer step
        let mut u_bar = vec![0.0; m];
        for lev in 1..=n_steps {
            for (b, &u) in u_bar.iter_mut().zip(state.level(lev)) {
                *b += u;
            }
        }
        for b in u_bar.iter_mut() {
            *b /= n_steps as f64;
        }
        let shift: Csr = disc.mass.scaled_columns(&problem.g_prime_vec(&u_bar));
        let plan: PintPlan = build_plan(
            disc,
            grid,
            tableau.clone(),
            kernel,
            config.kappa,
            Some(&shift),
            false,
        )?;
        history.plan_builds += 1;

        let loads = newton_residual(problem, disc, grid, tableau, &weights, alpha, &state);
        let w_data = ProblemData {
            v: vec![0.0; m],
            loads,
            correction: CorrectionData::none(m),
        };
        let (w, report) = run_waveform(&plan, disc, &w_data, config, None, workers)?;
        history.inner_counts.push(report.iters);
        for (u, &dw) in state.u.iter_mut().zip(&w.u) {
            *u += dw;
        }
        history.outer_iters += 1;
        if let Some(e) = final_err(&state) {
            history.outer_errors.push(e);
        }
        let w_max = w.u.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if !w_max.is_finite() || w_max > 1e8 {
            return Err(Error::Diverged { iters: history.outer_iters, increment: w_max });
        }
        if w_max < outer_tol {
            history.converged = true;
            break;
        }
    }
    Ok((state, history))
}
