//! End-to-end acceptance suite: one pass/fail line per criterion, printed in
//! order and asserted together at the end.

use std::time::Instant;

use pint::bdf::BdfTableau;
use pint::cq::{cq_weights, oracle};
use pint::fem::{assemble, l2_project, load_vector, SpatialData, SpatialDiscretization};
use pint::harness::{self, ExperimentSpec, VerifyReport};
use pint::linalg::mass_norm;
use pint::paradiag::{
    assemble_rhs_heat, assemble_rhs_subdiffusion, build_plan, pint_solve_once, wraparound_tail,
    wraparound_tail_direct, PintPlan, TimeKernel, Workers,
};
use pint::stepper::{
    observed_order, solve_heat, solve_subdiffusion, CorrectionData, ProblemData, SpaceTimeState,
    TimeGrid,
};
use pint::waveform::{run_waveform, KappaRule, PintConfig};

struct Outcome {
    label: &'static str,
    pass: bool,
    detail: String,
}

fn lcg(seed: &mut u64) -> f64 {
    *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    ((*seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
}

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

/// Smooth 1D problem data with starting corrections for f = e^t cos x.
fn smooth_problem(
    disc: &SpatialDiscretization,
    grid: &TimeGrid,
    k: usize,
    corrected: bool,
) -> ProblemData {
    let v = l2_project(disc, &SpatialData::Function(&|x, _| x * (1.0 - x))).unwrap();
    let loads: Vec<Vec<f64>> = (1..=grid.n_steps)
        .map(|n| load_vector(disc, &|x, _, t| t.exp() * x.cos(), grid.time(n)).unwrap())
        .collect();
    let correction = if corrected {
        let f0 = load_vector(disc, &|x, _, _| x.cos(), 0.0).unwrap();
        let kv = disc.stiffness.matvec_alloc(&v);
        let corr0: Vec<f64> = f0.iter().zip(&kv).map(|(a, b)| a - b).collect();
        let derivs: Vec<Vec<f64>> = (1..=k.saturating_sub(2))
            .map(|_| disc.data_functional(&SpatialData::Function(&|x, _| x.cos())).unwrap())
            .collect();
        CorrectionData { corr0, derivs }
    } else {
        CorrectionData::none(disc.n_dof)
    };
    ProblemData { v, loads, correction }
}

fn table_criterion(
    label: &'static str,
    budget_s: f64,
    check: impl FnOnce(&mut VerifyReport) -> pint::Result<()>,
) -> Outcome {
    let start = Instant::now();
    let mut report = VerifyReport::default();
    let res = check(&mut report);
    let secs = start.elapsed().as_secs_f64();
    let cells_ok = res.is_ok() && report.all_pass();
    let pass = cells_ok && secs < budget_s;
    let bad: Vec<String> = report
        .cells
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("k={} m={}", c.k, c.m))
        .chain(report.notes.iter().filter(|(_, ok)| !ok).map(|(n, _)| n.clone()))
        .collect();
    let detail = if bad.is_empty() {
        format!("{:.1} s (budget {budget_s} s)", secs)
    } else {
        format!("{:.1} s, failing: {}", secs, bad.join("; "))
    };
    Outcome { label, pass, detail }
}

/// Dense solve of ((1/tau^alpha) B_k(kappa) (x) M + I (x) K) x = rhs.
fn dense_kron_solve(plan: &PintPlan, disc: &SpatialDiscretization, rhs: &[f64]) -> Vec<f64> {
    let (n, m) = (plan.n_steps, plan.n_dof);
    let dim = n * m;
    let tau_pow = plan.tau.powf(plan.kernel.alpha());
    let mut a = vec![vec![0.0f64; dim]; dim];
    let mut mass = vec![vec![0.0; m]; m];
    let mut stiff = vec![vec![0.0; m]; m];
    for i in 0..m {
        let (cols, vals) = disc.mass.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            mass[i][j] = v;
        }
        let (cols, vals) = disc.stiffness.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            stiff[i][j] = v;
        }
    }
    for br in 0..n {
        for bc in 0..n {
            let b = if br >= bc {
                plan.weights[br - bc]
            } else {
                plan.kappa * plan.weights[n + br - bc]
            };
            if b == 0.0 && br != bc {
                continue;
            }
            for i in 0..m {
                for j in 0..m {
                    let mut v = b / tau_pow * mass[i][j];
                    if br == bc {
                        v += stiff[i][j];
                    }
                    a[br * m + i][bc * m + j] += v;
                }
            }
        }
    }
    let mut x = rhs.to_vec();
    for j in 0..dim {
        let p = (j..dim).max_by(|&r, &s| a[r][j].abs().total_cmp(&a[s][j].abs())).unwrap();
        a.swap(j, p);
        x.swap(j, p);
        for i in (j + 1)..dim {
            let l = a[i][j] / a[j][j];
            for jj in j..dim {
                let u = a[j][jj];
                a[i][jj] -= l * u;
            }
            let t = x[j];
            x[i] -= l * t;
        }
    }
    for j in (0..dim).rev() {
        let mut acc = x[j];
        for jj in (j + 1)..dim {
            acc -= a[j][jj] * x[jj];
        }
        x[j] = acc / a[j][j];
    }
    x
}

fn criterion4() -> Outcome {
    let start = Instant::now();
    let workers = Workers::new(1).unwrap();
    let disc = assemble(1, 1.0 / 9.0).unwrap();
    let grid = TimeGrid::new(1.0, 16).unwrap();
    let mut worst: f64 = 0.0;
    for k in 1..=3usize {
        for kernel in [TimeKernel::Heat, TimeKernel::Subdiffusion { alpha: 0.5 }] {
            let plan = build_plan(
                &disc,
                &grid,
                BdfTableau::new(k).unwrap(),
                kernel,
                0.25,
                None,
                false,
            )
            .unwrap();
            let mut seed = 11 + k as u64;
            let rhs: Vec<f64> = (0..16 * disc.n_dof).map(|_| lcg(&mut seed)).collect();
            let fast = pint_solve_once(&plan, &rhs, &workers).unwrap();
            let dense = dense_kron_solve(&plan, &disc, &rhs);
            let scale = max_abs(&dense);
            let diff = fast
                .iter()
                .zip(&dense)
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            worst = worst.max(diff / scale);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        label: "criterion 4 (dense Kronecker oracle)",
        pass: worst < 1e-10 && secs < 5.0,
        detail: format!("max rel diff {worst:.2e}, {secs:.1} s"),
    }
}

fn criterion5() -> Outcome {
    let workers = Workers::new(1).unwrap();
    let mut worst: f64 = 0.0;
    for example in [1u32, 2] {
        let mut spec = ExperimentSpec::preset(example).unwrap();
        spec.n_steps = 50;
        let prep = harness::build_problem(&spec).unwrap();
        let reference = harness::sequential_reference(&prep).unwrap();
        let plan = build_plan(
            &prep.disc,
            &prep.grid,
            prep.tableau.clone(),
            prep.kernel,
            spec.kappa(),
            None,
            false,
        )
        .unwrap();
        let rhs = match prep.kernel {
            TimeKernel::Heat => assemble_rhs_heat(&plan, &prep.disc, &prep.data, &reference),
            TimeKernel::Subdiffusion { .. } => {
                assemble_rhs_subdiffusion(&plan, &prep.disc, &prep.data, &reference, &workers)
            }
        }
        .unwrap();
        let next = pint_solve_once(&plan, &rhs, &workers).unwrap();
        let diff = next
            .iter()
            .zip(&reference.u)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        worst = worst.max(diff / max_abs(&reference.u));
    }
    Outcome {
        label: "criterion 5 (sequential fixed point)",
        pass: worst < 1e-12,
        detail: format!("max rel drift {worst:.2e}"),
    }
}

fn criterion6() -> Outcome {
    let disc = assemble(1, 0.1).unwrap();
    let t_final = 0.5;
    let run = |k: usize, alpha: f64, corrected: bool, n: usize| -> SpaceTimeState {
        let grid = TimeGrid::new(t_final, n).unwrap();
        let tab = BdfTableau::new(k).unwrap();
        let data = smooth_problem(&disc, &grid, k, corrected);
        if alpha >= 1.0 {
            solve_heat(&disc, &grid, &tab, &data).unwrap()
        } else {
            solve_subdiffusion(&disc, &grid, &tab, alpha, &data).unwrap()
        }
    };
    let order = |k: usize, alpha: f64, corrected: bool| -> f64 {
        let reference = run(k, alpha, corrected, 2048);
        let mut samples = Vec::new();
        for n in [16usize, 32, 64] {
            let s = run(k, alpha, corrected, n);
            let diff: Vec<f64> = s
                .level(n)
                .iter()
                .zip(reference.level(2048))
                .map(|(a, b)| a - b)
                .collect();
            samples.push((t_final / n as f64, mass_norm(&disc.mass, &diff)));
        }
        observed_order(&samples).unwrap()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for k in 1..=3usize {
        let p = order(k, 1.0, true);
        pass &= (p - k as f64).abs() < 0.2;
        parts.push(format!("heat k={k}: {p:.2}"));
    }
    for k in 1..=3usize {
        let p = order(k, 0.5, true);
        pass &= (p - k as f64).abs() < 0.3;
        parts.push(format!("sub k={k}: {p:.2}"));
    }
    let p = order(2, 0.5, false);
    pass &= p < 1.3;
    parts.push(format!("sub k=2 uncorrected: {p:.2}"));
    Outcome {
        label: "criterion 6 (convergence orders)",
        pass,
        detail: parts.join(", "),
    }
}

fn criterion7() -> Outcome {
    let mut agree_worst: f64 = 0.0;
    let mut fit_worst: f64 = 0.0;
    for k in 1..=6usize {
        for &alpha in &[0.25, 0.5, 0.75] {
            let w = cq_weights(k, alpha, 512).unwrap();
            let refw = oracle::fft_reference_weights(k, alpha, 512);
            let scale = w.w.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            for (a, b) in w.w.iter().zip(&refw) {
                agree_worst = agree_worst.max((a - b).abs() / scale);
            }
            let w = cq_weights(k, alpha, 10_000).unwrap();
            let samples: Vec<(f64, f64)> = (0..80)
                .map(|j| {
                    let n = (100.0 * 100f64.powf(j as f64 / 79.0)).round() as usize;
                    (n as f64, w.w[n].abs())
                })
                .collect();
            let slope = observed_order(&samples).unwrap();
            fit_worst = fit_worst.max((slope + 1.0 + alpha).abs());
        }
    }
    Outcome {
        label: "criterion 7 (CQ weights vs FFT oracle, decay)",
        pass: agree_worst < 1e-10 && fit_worst < 0.05,
        detail: format!("max rel diff {agree_worst:.2e}, max fit dev {fit_worst:.3}"),
    }
}

fn criterion8() -> Outcome {
    let workers = Workers::new(1).unwrap();
    let disc = assemble(1, 0.2).unwrap();
    let mut worst: f64 = 0.0;
    for n in [8usize, 64, 256] {
        let grid = TimeGrid::new(1.0, n).unwrap();
        let plan = build_plan(
            &disc,
            &grid,
            BdfTableau::new(2).unwrap(),
            TimeKernel::Subdiffusion { alpha: 0.5 },
            0.5,
            None,
            false,
        )
        .unwrap();
        let mut state = SpaceTimeState::zeros(n, vec![0.0; disc.n_dof]);
        let mut seed = 7 + n as u64;
        for v in state.u.iter_mut() {
            *v = lcg(&mut seed);
        }
        let fast = wraparound_tail(&plan, &state, &workers);
        let direct = wraparound_tail_direct(&plan.weights, &state);
        let diff = fast
            .iter()
            .zip(&direct)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        worst = worst.max(diff);
    }
    Outcome {
        label: "criterion 8 (circulant embedding oracle)",
        pass: worst < 1e-12,
        detail: format!("max abs diff {worst:.2e}"),
    }
}

fn criterion9() -> Outcome {
    let gamma_for = |n_steps: usize, kappa: f64| -> (f64, Option<f64>) {
        let mut spec = ExperimentSpec::preset(1).unwrap();
        spec.n_steps = n_steps;
        spec.kappa_rule = KappaRule::Fixed(kappa);
        spec.tol = 1e-16;
        spec.max_iters = 14;
        spec.threads = Some(1);
        let outcome = harness::execute(&spec).unwrap();
        (outcome.report.gamma_est.unwrap(), outcome.report.floor)
    };
    let mut pass = true;
    let mut parts = Vec::new();

    let gammas: Vec<f64> = [50usize, 100, 200].iter().map(|&n| gamma_for(n, 0.5).0).collect();
    let (lo, hi) = (
        gammas.iter().cloned().fold(f64::INFINITY, f64::min),
        gammas.iter().cloned().fold(0.0f64, f64::max),
    );
    pass &= hi <= 1.25 * lo;
    parts.push(format!(
        "gamma(N=50,100,200) = {:.2e}/{:.2e}/{:.2e}",
        gammas[0], gammas[1], gammas[2]
    ));

    let sweep: Vec<(f64, Option<f64>)> =
        [0.5, 0.1, 0.02].iter().map(|&k| gamma_for(100, k)).collect();
    pass &= sweep[0].0 > sweep[1].0 && sweep[1].0 > sweep[2].0;
    let floors: Vec<f64> = sweep.iter().map(|s| s.1.unwrap_or(f64::NAN)).collect();
    pass &= floors.iter().all(|f| f.is_finite()) && floors[0] < floors[1] && floors[1] < floors[2];
    parts.push(format!(
        "kappa sweep gamma {:.1e}/{:.1e}/{:.1e} floor {:.1e}/{:.1e}/{:.1e}",
        sweep[0].0, sweep[1].0, sweep[2].0, floors[0], floors[1], floors[2]
    ));

    // Step-2 scaling smoke test: needs at least 4 cores to be meaningful.
    let cores = Workers::auto().count();
    let disc = assemble(1, 1.0 / 1000.0).unwrap();
    let grid = TimeGrid::new(0.5, 512).unwrap();
    let plan = build_plan(
        &disc,
        &grid,
        BdfTableau::new(3).unwrap(),
        TimeKernel::Heat,
        0.5,
        None,
        false,
    )
    .unwrap();
    let mut seed = 3;
    let rhs: Vec<f64> = (0..512 * disc.n_dof).map(|_| lcg(&mut seed)).collect();
    let time_with = |threads: usize| -> f64 {
        let w = Workers::new(threads).unwrap();
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let t = Instant::now();
            pint_solve_once(&plan, &rhs, &w).unwrap();
            best = best.min(t.elapsed().as_secs_f64());
        }
        best
    };
    let ratio = time_with(1) / time_with(4.min(cores.max(1)));
    if cores >= 4 {
        pass &= ratio >= 2.0;
        parts.push(format!("scaling 1->4 workers: {ratio:.2}x"));
    } else {
        parts.push(format!("scaling SKIP ({cores} core(s), measured {ratio:.2}x)"));
    }
    Outcome { label: "criterion 9 (gamma behavior, scaling)", pass, detail: parts.join("; ") }
}

fn criterion10() -> Outcome {
    let spec = ExperimentSpec::preset(1).unwrap();
    let prep = harness::build_problem(&spec).unwrap();
    let plan = build_plan(
        &prep.disc,
        &prep.grid,
        prep.tableau.clone(),
        prep.kernel,
        spec.kappa(),
        None,
        false,
    )
    .unwrap();
    let config = PintConfig::default();
    let solve = |threads: usize| -> Vec<f64> {
        let w = Workers::new(threads).unwrap();
        let (state, _) = run_waveform(&plan, &prep.disc, &prep.data, &config, None, &w).unwrap();
        state.u
    };
    let base = solve(1);
    let mut worst: f64 = 0.0;
    for threads in [2usize, 8] {
        let other = solve(threads);
        let diff = base
            .iter()
            .zip(&other)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        worst = worst.max(diff);
    }
    Outcome {
        label: "criterion 10 (worker-count determinism)",
        pass: worst <= 1e-15,
        detail: format!("max drift {worst:.2e}"),
    }
}

#[test]
fn acceptance_criteria() {
    let outcomes = vec![
        table_criterion("criterion 1 (table 2 reproduction)", 60.0, harness::verify_table2),
        table_criterion("criterion 2 (table 3 reproduction)", 90.0, harness::verify_table3),
        table_criterion("criterion 3 (table 4 reproduction)", 120.0, harness::verify_table4),
        criterion4(),
        criterion5(),
        criterion6(),
        criterion7(),
        criterion8(),
        criterion9(),
        criterion10(),
    ];
    for o in &outcomes {
        println!("{}: {} [{}]", o.label, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    assert!(outcomes.iter().all(|o| o.pass), "one or more acceptance criteria failed");
}
