//! Outer waveform-relaxation iteration around the diagonalized all-at-once
//! solve, with convergence monitoring and convergence-factor estimation.

use crate::error::{Error, Result};
use crate::fem::SpatialDiscretization;
use crate::linalg::mass_norm;
use crate::paradiag::{
    assemble_rhs_heat, assemble_rhs_subdiffusion, pint_solve_once, PintPlan, TimeKernel, Workers,
};
use crate::stepper::{ProblemData, SpaceTimeState};

/// How to pick the relaxation parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KappaRule {
    Fixed(f64),
    /// kappa = 1 / ln(N), clamped to (0, 0.5].
    LogN,
}

pub fn choose_kappa(n: usize, rule: KappaRule) -> f64 {
    match rule {
        KappaRule::Fixed(v) => v,
        KappaRule::LogN => (1.0 / (n as f64).ln()).min(0.5),
    }
}

/// Starting iterate for the waveform relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialGuess {
    /// U_0^n = v for all n, the guess the convergence theory assumes.
    #[default]
    InitialData,
    /// U_0^n = 0, the guess behind the published benchmark histories.
    Zero,
}

#[derive(Debug, Clone, Copy)]
pub struct PintConfig {
    pub kappa: f64,
    pub max_iters: usize,
    /// Max-norm increment threshold.
    pub tol: f64,
    pub guess: InitialGuess,
}

impl Default for PintConfig {
    fn default() -> Self {
        PintConfig { kappa: 0.5, max_iters: 30, tol: 1e-12, guess: InitialGuess::InitialData }
    }
}

/// Convergence history of one waveform run.
#[derive(Debug, Clone, Default)]
pub struct ConvergenceReport {
    /// e_m^N against the reference at the final level, m = 0..iters.
    pub errors: Vec<f64>,
    /// Max-norm increments, m = 1..iters.
    pub increments: Vec<f64>,
    pub gamma_est: Option<f64>,
    pub floor: Option<f64>,
    pub iters: usize,
    /// The max-norm increment dropped below the tolerance before the
    /// iteration cap.
    pub converged: bool,
}

/// Median contraction factor and stagnation floor of an error history.
/// Pre-floor iterations are those with ratio below 0.5.
pub struct GammaEstimate {
    pub gamma: f64,
    pub floor: Option<f64>,
}

pub fn estimate_gamma(errors: &[f64]) -> Result<GammaEstimate> {
    if errors.len() < 3 {
        return Err(Error::TooFewSamples);
    }
    let mut ratios = Vec::new();
    let mut floor = None;
    for (i, w) in errors.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if a <= 0.0 || b <= 0.0 {
            break;
        }
        let r = b / a;
        if r >= 0.5 {
            // stagnation: the floor is the smallest error from here on
            floor = Some(errors[i..].iter().cloned().fold(f64::INFINITY, f64::min));
            break;
        }
        ratios.push(r);
    }
    if ratios.len() < 2 {
        return Err(Error::TooFewSamples);
    }
    // median ratio; robust against the slowdown just above the floor
    ratios.sort_by(f64::total_cmp);
    let n = ratios.len();
    let gamma = if n % 2 == 1 {
        ratios[n / 2]
    } else {
        (ratios[n / 2 - 1] * ratios[n / 2]).sqrt()
    };
    Ok(GammaEstimate { gamma, floor })
}

fn final_level_error(
    disc: &SpatialDiscretization,
    state: &SpaceTimeState,
    reference: &SpaceTimeState,
) -> f64 {
    let n = state.n_steps;
    let diff: Vec<f64> =
        state.level(n).iter().zip(reference.level(n)).map(|(a, b)| a - b).collect();
    mass_norm(&disc.mass, &diff)
}

/// Run the waveform relaxation from `U_0^n = v` until the max-norm increment
/// drops below `config.tol` or `config.max_iters` is reached. When a
/// reference trajectory is supplied, `e_m^N` is tracked diagnostically.
pub fn run_waveform(
    plan: &PintPlan,
    disc: &SpatialDiscretization,
    data: &ProblemData,
    config: &PintConfig,
    reference: Option<&SpaceTimeState>,
    workers: &Workers,
) -> Result<(SpaceTimeState, ConvergenceReport)> {
    let n = plan.n_steps;
    let mut state = SpaceTimeState::zeros(n, data.v.clone());
    if config.guess == InitialGuess::InitialData {
        for lev in 1..=n {
            state.level_mut(lev).copy_from_slice(&data.v);
        }
    }
    let mut report = ConvergenceReport::default();
    if let Some(r) = reference {
        report.errors.push(final_level_error(disc, &state, r));
    }
    let mut growth_streak = 0usize;
    let mut min_increment = f64::INFINITY;
    for _ in 1..=config.max_iters {
        let rhs = match plan.kernel {
            TimeKernel::Heat => assemble_rhs_heat(plan, disc, data, &state)?,
            TimeKernel::Subdiffusion { .. } => {
                assemble_rhs_subdiffusion(plan, disc, data, &state, workers)?
            }
        };
        let next = pint_solve_once(plan, &rhs, workers)?;
        let increment =
            next.iter().zip(&state.u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        state.u.copy_from_slice(&next);
        report.iters += 1;
        if !increment.is_finite() {
            return Err(Error::Diverged { iters: report.iters, increment });
        }
        if let Some(last) = report.increments.last() {
            if increment > *last {
                growth_streak += 1;
            } else {
                growth_streak = 0;
            }
        }
        min_increment = min_increment.min(increment);
        report.increments.push(increment);
        if let Some(r) = reference {
            report.errors.push(final_level_error(disc, &state, r));
        }
        if increment < config.tol {
            report.converged = true;
            break;
        }
        // sustained growth well above the best increment so far; plain
        // jitter at the roundoff floor stays under the 10x margin
        if growth_streak >= 3 && increment > 10.0 * min_increment {
            return Err(Error::Diverged { iters: report.iters, increment });
        }
    }
    if let Ok(est) = estimate_gamma(&report.errors) {
        report.gamma_est = Some(est.gamma);
        report.floor = est.floor;
    }
    Ok((state, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bdf::BdfTableau;
    use crate::fem::{assemble, l2_project, load_vector, SpatialData};
    use crate::paradiag::build_plan;
    use crate::stepper::{solve_heat, CorrectionData, TimeGrid};

    #[test]
    fn kappa_rules() {
        assert_eq!(choose_kappa(100, KappaRule::Fixed(0.5)), 0.5);
        assert!((choose_kappa(100, KappaRule::LogN) - 1.0 / 100f64.ln()).abs() < 1e-15);
        assert_eq!(choose_kappa(3, KappaRule::LogN), 0.5);
    }

    #[test]
    fn gamma_from_clean_geometric_decay() {
        let est = estimate_gamma(&[1e-1, 4e-4, 1.6e-6]).unwrap();
        assert!((est.gamma - 4e-3).abs() / 4e-3 < 1e-10);
        assert!(est.floor.is_none());
        let est = estimate_gamma(&[1e-1, 4e-4, 1.6e-6, 1.2e-6, 1.3e-6]).unwrap();
        assert!(est.floor.is_some());
        assert!(estimate_gamma(&[1.0, 0.1]).is_err());
    }

    #[test]
    fn heat_waveform_converges_to_sequential_solution() {
        let disc = assemble(1, 0.02).unwrap();
        let grid = TimeGrid::new(0.5, 50).unwrap();
        let tab = BdfTableau::new(2).unwrap();
        let v = l2_project(&disc, &SpatialData::Chi1d { a: 0.0, b: 0.5 }).unwrap();
        let loads: Vec<Vec<f64>> = (1..=50)
            .map(|n| load_vector(&disc, &|x, _, t| t.exp() * x.cos(), grid.time(n)).unwrap())
            .collect();
        let f0 = load_vector(&disc, &|x, _, _| x.cos(), 0.0).unwrap();
        let kv = disc.stiffness.matvec_alloc(&v);
        let corr0: Vec<f64> = f0.iter().zip(&kv).map(|(a, b)| a - b).collect();
        let data = ProblemData { v, loads, correction: CorrectionData { corr0, derivs: vec![] } };
        let reference = solve_heat(&disc, &grid, &tab, &data).unwrap();
        let plan = build_plan(&disc, &grid, tab, TimeKernel::Heat, 0.5, None, false).unwrap();
        let workers = Workers::new(1).unwrap();
        let config = PintConfig { kappa: 0.5, max_iters: 25, ..PintConfig::default() };
        let (state, report) =
            run_waveform(&plan, &disc, &data, &config, Some(&reference), &workers).unwrap();
        let err = final_level_error(&disc, &state, &reference);
        assert!(err < 1e-11, "final error {err}");
        assert!(report.iters < 25);
        // monotone decay before the floor
        for w in report.errors.windows(2) {
            if w[0] > 1e-11 {
                assert!(w[1] < w[0]);
            }
        }
        assert!(report.gamma_est.unwrap() < 0.05);
    }

    #[test]
    fn starting_from_the_fixed_point_stops_immediately() {
        let disc = assemble(1, 0.1).unwrap();
        let grid = TimeGrid::new(0.5, 10).unwrap();
        let tab = BdfTableau::new(1).unwrap();
        let v = vec![0.0; disc.n_dof];
        let data = ProblemData {
            v,
            loads: vec![vec![0.0; disc.n_dof]; 10],
            correction: CorrectionData::none(disc.n_dof),
        };
        let plan = build_plan(&disc, &grid, tab, TimeKernel::Heat, 0.5, None, false).unwrap();
        let workers = Workers::new(1).unwrap();
        let (_, report) = run_waveform(
            &plan,
            &disc,
            &data,
            &PintConfig::default(),
            None,
            &workers,
        )
        .unwrap();
        assert_eq!(report.iters, 1);
        assert!(report.increments[0] < 1e-15);
    }
}
