use gnse_core::control::{
    fd_gradient, minimize, objective, solution_map, Control, ControlProblem, ControlSpec, MinimizeOptions,
    StopReason,
};
use gnse_core::fracops::{FractionalOrder, TimeGrid};
use gnse_core::solver::{solve_ivp, SolverConfig, Trajectory};
use gnse_core::spectral::{GalerkinSystem, Tensor3};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

const M: usize = 3;
const CELLS: usize = 8;

fn cfg() -> SolverConfig<f64> {
    let time = TimeGrid::with_horizon(0.5, CELLS).unwrap();
    SolverConfig::new(FractionalOrder::new(0.6).unwrap(), 0.3, 0.2, time).unwrap()
}

fn system(nonlinear: bool) -> GalerkinSystem<f64> {
    let tensor = if nonlinear {
        Tensor3::from_fn(M, |k, l, lp| ((k + 2 * l + 3 * lp) % 5) as f64 * 0.1 - 0.2)
    } else {
        Tensor3::zeros(M)
    };
    let c = DMatrix::from_fn(M, M, |i, j| (i as f64 - j as f64) * 0.3);
    GalerkinSystem::new(vec![1.0, 2.0, 3.5], c, tensor).unwrap()
}

fn problem(nonlinear: bool, target: Vec<DVector<f64>>) -> ControlProblem<f64> {
    let eta = (0..=CELLS).map(|n| DVector::from_element(M, 0.1 * n as f64)).collect();
    ControlProblem::from_coefficients(
        system(nonlinear),
        cfg(),
        DMatrix::from_fn(M, 2, |k, i| if k == i { 1.0 } else { 0.25 }),
        target,
        vec![0.01; CELLS + 1],
        ControlSpec {
            xi0: DVector::from_vec(vec![1.0, -0.5, 0.2]),
            eta_base: eta,
            kappa: 1e-3,
            lo: vec![-2.0, -1.0],
            hi: vec![2.0, 1.0],
        },
    )
    .unwrap()
}

fn targets() -> Vec<DVector<f64>> {
    (0..=CELLS).map(|n| DVector::from_element(M, 0.05 * n as f64)).collect()
}

fn control(values: &[f64]) -> Control<f64> {
    Control::from_fn(CELLS, 2, |c, i| values[2 * c + i])
}

fn gap(a: &Trajectory<f64>, b: &Trajectory<f64>) -> f64 {
    a.xi().iter().zip(b.xi()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn zero_control_is_a_plain_solve() {
    let prob = problem(true, targets());
    let w = prob.zeros();
    let traj = solution_map(&w, &prob).unwrap();
    let plain = solve_ivp(prob.system(), prob.cfg(), &traj.xi()[0], &prob.forcing(&w).unwrap()).unwrap();
    assert_eq!(traj, plain);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_state_is_affine_in_the_control(
        a in prop::collection::vec(-0.5f64..0.5, 2 * CELLS),
        b in prop::collection::vec(-0.5f64..0.5, 2 * CELLS),
    ) {
        let prob = problem(false, targets());
        let s0 = solution_map(&prob.zeros(), &prob).unwrap();
        let sa = solution_map(&control(&a), &prob).unwrap();
        let sb = solution_map(&control(&b), &prob).unwrap();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let sab = solution_map(&control(&sum), &prob).unwrap();
        for n in 0..=CELLS {
            let lhs = &sab.xi()[n] - &s0.xi()[n];
            let rhs = (&sa.xi()[n] - &s0.xi()[n]) + (&sb.xi()[n] - &s0.xi()[n]);
            prop_assert!((lhs - rhs).norm() <= 1e-12);
        }
    }

    #[test]
    fn control_cost_gradient_matches_finite_differences(
        v in prop::collection::vec(-1.0f64..1.0, 2 * CELLS),
    ) {
        let prob = problem(false, targets());
        let w = control(&v);
        let g = prob.control_cost_gradient(&w);
        let eps = 1e-6;
        for c in 0..CELLS {
            for i in 0..2 {
                let (mut wp, mut wm) = (w.clone(), w.clone());
                wp.set(c, i, w.get(c, i) + eps);
                wm.set(c, i, w.get(c, i) - eps);
                let fd = (prob.control_cost(&wp) - prob.control_cost(&wm)) / (2.0 * eps);
                prop_assert!((fd - g.get(c, i)).abs() <= 1e-6 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn cost_is_linear_in_kappa_and_coercive(v in prop::collection::vec(-1.0f64..1.0, 2 * CELLS)) {
        let prob = problem(false, targets());
        let w = control(&v);
        let doubled = prob.with_kappa(2.0 * prob.kappa()).unwrap();
        prop_assert!((doubled.control_cost(&w) - 2.0 * prob.control_cost(&w)).abs() <= 1e-15);
        let dt = prob.cfg().time().dt();
        let p = prob.cost_exponent();
        let floor: f64 = (0..CELLS).map(|c| prob.kappa() * dt * w.values().row(c).norm().powf(p)).sum();
        prop_assert!(prob.control_cost(&w) >= floor * (1.0 - 1e-12));
    }
}

/// For a linear state map `J_track` is quadratic; its exact gradient follows
/// from the unit responses.
#[test]
fn fd_gradient_matches_superposition_gradient() {
    let prob = problem(false, targets());
    let w = Control::from_fn(CELLS, 2, |c, i| 0.3 * ((c + i) as f64).sin());
    let base = solution_map(&prob.zeros(), &prob).unwrap();
    let state = solution_map(&w, &prob).unwrap();
    let dt = prob.cfg().time().dt();
    let cost = prob.control_cost_gradient(&w);
    let fd = fd_gradient(&w, &prob, 1e-6, 1).unwrap();
    for c in 0..CELLS {
        for i in 0..2 {
            let mut unit = prob.zeros();
            unit.set(c, i, 1.0);
            let resp = solution_map(&unit, &prob).unwrap();
            let mut g = 0.0;
            for n in 0..=CELLS {
                let q = if n == 0 || n == CELLS { 0.5 } else { 1.0 };
                let s = &resp.xi()[n] - &base.xi()[n];
                g += q * dt * s.dot(&(&state.xi()[n] - &targets()[n]));
            }
            g += cost.get(c, i);
            assert!((fd.get(c, i) - g).abs() <= 1e-6, "cell {c} comp {i}: {} vs {g}", fd.get(c, i));
        }
    }
}

#[test]
fn fd_gradient_ignores_thread_count() {
    let prob = problem(true, targets());
    let w = Control::from_fn(CELLS, 2, |c, _| 0.1 * c as f64);
    let one = fd_gradient(&w, &prob, 1e-6, 1).unwrap();
    let many = fd_gradient(&w, &prob, 1e-6, 3).unwrap();
    assert_eq!(one.values(), many.values());
}

#[test]
fn reachable_target_is_stationary_at_its_control() {
    let probe = problem(true, targets());
    let free = solution_map(&probe.zeros(), &probe).unwrap();
    let prob = problem(true, free.xi().to_vec());
    let res = minimize(&prob, &prob.zeros(), MinimizeOptions::default()).unwrap();
    assert_eq!(res.stop, StopReason::Converged);
    assert_eq!(res.iterates.len(), 1);
    let j = objective(&free, &prob.zeros(), &prob).unwrap();
    let perp: f64 = 0.01 * prob.cfg().time().horizon() / 2.0;
    assert!((j - perp).abs() <= 1e-14);
}

#[test]
fn minimize_descends_and_stays_feasible() {
    let prob = problem(true, targets());
    let res = minimize(&prob, &prob.zeros(), MinimizeOptions { max_iters: 15, ..Default::default() }).unwrap();
    assert!(res.iterates.len() > 1);
    assert!(res.iterates.windows(2).all(|p| p[1].j <= p[0].j));
    for it in &res.iterates {
        assert_eq!(prob.project(&it.w).values(), it.w.values());
    }
}

#[test]
fn state_responds_continuously_to_forcing() {
    let prob = problem(true, targets());
    let base = solution_map(&prob.zeros(), &prob).unwrap();
    let gaps: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|k| {
            let w = Control::from_fn(CELLS, 2, |_, _| 0.5 / k);
            gap(&solution_map(&w, &prob).unwrap(), &base)
        })
        .collect();
    assert!(gaps.windows(2).all(|g| g[1] < g[0]), "{gaps:?}");
}

#[test]
fn infeasible_controls_are_rejected() {
    let prob = problem(false, targets());
    let mut w = prob.zeros();
    w.set(0, 1, 1.5);
    assert!(solution_map(&w, &prob).is_err());
    assert!(fd_gradient(&w, &prob, 1e-6, 1).is_err());
    assert!(minimize(&prob, &w, MinimizeOptions::default()).is_err());
    assert!(solution_map(&Control::zeros(CELLS + 1, 2), &prob).is_err());
    assert!(prob.with_kappa(0.0).is_err());
}

/// At the generating control the tracking term vanishes, so only the small
/// control-cost gradient remains.
#[test]
fn gradient_vanishes_at_the_recovered_control() {
    let probe = problem(true, targets());
    let w_star = Control::from_fn(CELLS, 2, |c, i| 0.5 * ((c + 2 * i) as f64 * 0.7).sin());
    let z = solution_map(&w_star, &probe).unwrap().xi().to_vec();
    let prob = problem(true, z).with_kappa(1e-6).unwrap();
    let g = fd_gradient(&w_star, &prob, 1e-6, 1).unwrap();
    assert!(g.values().norm() <= 1e-4, "{:e}", g.values().norm());
}
