//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use gnse_core::control::{minimize, objective, solution_map, Control, ControlProblem, ControlSpec, MinimizeOptions};
use gnse_core::fracops::{caputo_l1_apply, ibp_residual, mittag_leffler, FractionalOrder, SampledFunction, TimeGrid};
use gnse_core::recipes::{kolmogorov, taylor_green};
use gnse_core::reference::implicit_euler;
use gnse_core::solver::{
    energy_certificate, forcing_coeffs, project_initial, solve_ivp, stability_gap, SolverConfig, Trajectory,
};
use gnse_core::spectral::{convection_tensor, eigenbasis, ladyzhenskaya_estimate, GStokesBasis, GalerkinSystem, Tensor3};
use gnse_core::wdomain::{WeightRecipe, WeightedGrid};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn order(a: f64) -> FractionalOrder<f64> {
    FractionalOrder::new(a).unwrap()
}

fn sine_grid(n: usize) -> WeightedGrid<f64> {
    WeightedGrid::build(&WeightRecipe::Sine { epsilon: 0.1 }, n).unwrap()
}

/// n = 32, g = 1 + 0.1 sin 2πx, Taylor-Green start, Kolmogorov forcing,
/// ν = 0.05, T = 0.5, dt = 1/256.
struct Smoke {
    basis: GStokesBasis<f64>,
    system: GalerkinSystem<f64>,
    cfg: SolverConfig<f64>,
    xi0: DVector<f64>,
    eta: Vec<DVector<f64>>,
}

fn smoke(m: usize, alpha: f64) -> Smoke {
    let grid = sine_grid(32);
    let basis = eigenbasis(&grid, m).unwrap();
    let system = GalerkinSystem::from_basis(&basis).unwrap();
    let time = TimeGrid::new(1.0 / 256.0, 128).unwrap();
    let cfg = SolverConfig::new(order(alpha), alpha / 2.0, 0.05, time).unwrap();
    let xi0 = project_initial(&taylor_green(32, 1.0), &basis).unwrap();
    let f = kolmogorov(32, 1.0, 1);
    let eta = forcing_coeffs(|_, _| Ok(f.clone()), &basis, &time).unwrap();
    Smoke {
        basis,
        system,
        cfg,
        xi0,
        eta,
    }
}

fn runtime(start: Instant, limit: f64) -> (bool, String) {
    let s = start.elapsed().as_secs_f64();
    (s < limit, format!("{s:.2}s of {limit}s"))
}

fn fractional_identities() -> Outcome {
    let start = Instant::now();
    let n = 512;
    let lin = SampledFunction::from_fn(TimeGrid::with_horizon(1.0, n).unwrap(), |t| t).unwrap();
    let sq = SampledFunction::from_fn(TimeGrid::with_horizon(1.0, n).unwrap(), |t| t * t).unwrap();
    let dt = 1.0 / n as f64;
    let e_lin = (caputo_l1_apply(order(0.5), &lin, n).unwrap() - std::f64::consts::FRAC_2_SQRT_PI).abs();
    let e_sq = (caputo_l1_apply(order(0.5), &sq, n).unwrap() - 1.504_505_556_127_350_1).abs();
    let mut ok = e_lin <= dt.powf(1.5) && e_sq <= dt.powf(1.5);
    let mut detail = format!("err(t)={e_lin:.2e} err(t^2)={e_sq:.2e} bound {:.2e};", dt.powf(1.5));
    for a in [0.3, 0.5, 0.8] {
        let want = 2.0 / libm::tgamma(3.0 - a);
        let err = |n: usize| {
            let f = SampledFunction::from_fn(TimeGrid::with_horizon(1.0, n).unwrap(), |t| t * t).unwrap();
            (caputo_l1_apply(order(a), &f, n).unwrap() - want).abs()
        };
        let rate = (err(256) / err(1024)).log2() / 2.0;
        ok &= (rate - (2.0 - a)).abs() <= 0.25;
        detail += &format!(" order(alpha={a})={rate:.3};");
    }
    let (fast, t) = runtime(start, 5.0);
    check(ok && fast, format!("{detail} {t}"))
}

fn mittag_leffler_oracle() -> Outcome {
    let start = Instant::now();
    let cfg = SolverConfig::new(order(0.5), 0.25, 1.0, TimeGrid::with_horizon(1.0, 512).unwrap()).unwrap();
    let sys = GalerkinSystem::new(vec![1.0], DMatrix::zeros(1, 1), Tensor3::zeros(1)).unwrap();
    let traj = solve_ivp(&sys, &cfg, &DVector::from_element(1, 1.0), &vec![DVector::zeros(1); 513]).unwrap();
    let mut worst: f64 = 0.0;
    for (j, x) in traj.xi().iter().enumerate() {
        let t = cfg.time().t(j);
        worst = worst.max((x[0] - mittag_leffler(order(0.5), -t.sqrt()).unwrap()).abs());
    }
    let (fast, t) = runtime(start, 10.0);
    check(worst <= 5e-3 && fast, format!("sup error {worst:.3e} (limit 5e-3), {t}"))
}

fn spectral_fidelity() -> Outcome {
    let start = Instant::now();
    let four_pi2 = 4.0 * PI * PI;
    let flat = eigenbasis(&WeightedGrid::build(&WeightRecipe::Constant(1.0), 64).unwrap(), 4).unwrap();
    let worst = flat
        .lambdas()
        .iter()
        .map(|l| (l / four_pi2 - 1.0).abs())
        .fold(0.0, f64::max);
    let grid = sine_grid(64);
    let basis = eigenbasis(&grid, 4).unwrap();
    let bound = four_pi2 * grid.m0() / grid.big_m0();
    let ok = worst <= 0.02 && basis.lambda1() >= 0.95 * bound;
    let (fast, t) = runtime(start, 60.0);
    check(
        ok && fast,
        format!(
            "g=1: max rel dev {worst:.2e}; g=1+0.1sin: lambda1 {:.4} vs bound {bound:.4}; {t}",
            basis.lambda1()
        ),
    )
}

fn energy_neutrality() -> Outcome {
    let basis = eigenbasis(&sine_grid(32), 16).unwrap();
    let t = convection_tensor(&basis).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let xi = DVector::from_fn(16, |_, _| rng.gen_range(-1.0..1.0));
        worst = worst.max(t.cubic_form(&xi).abs() / xi.norm().powi(3));
    }
    check(worst <= 1e-12, format!("max |cubic|/|xi|^3 = {worst:.2e}"))
}

fn a_priori_certificate() -> Outcome {
    let start = Instant::now();
    let s = smoke(8, 0.5);
    let traj = solve_ivp(&s.system, &s.cfg, &s.xi0, &s.eta).unwrap();
    let cert = energy_certificate(&traj, s.basis.grid(), s.basis.lambda1(), &s.cfg).unwrap();
    let min_sup = cert.sup_rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let min_w = cert.weighted_rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let (fast, t) = runtime(start, 120.0);
    check(
        cert.passes() && fast,
        format!(
            "{} steps, min margins {min_sup:.3e} / {min_w:.3e}, nu' = {:.4}; {t}",
            traj.xi().len(),
            cert.nu_prime
        ),
    )
}

fn alpha_one_consistency() -> Outcome {
    let s = smoke(8, 0.999);
    let traj = solve_ivp(&s.system, &s.cfg, &s.xi0, &s.eta).unwrap();
    let reference = implicit_euler(&s.system, s.cfg.nu(), s.cfg.time().dt(), &s.xi0, &s.eta, 1e-13).unwrap();
    let worst = traj
        .xi()
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    check(worst <= 1e-2, format!("sup |u_0.999 - u_ref|_g = {worst:.3e}"))
}

fn uniqueness_stability() -> Outcome {
    let s = smoke(8, 0.5);
    let a = solve_ivp(&s.system, &s.cfg, &s.xi0, &s.eta).unwrap();
    let b = solve_ivp(&s.system, &s.cfg, &s.xi0, &s.eta).unwrap();
    let mut xi1 = s.xi0.clone();
    xi1[0] += 1e-6;
    let p = solve_ivp(&s.system, &s.cfg, &xi1, &s.eta).unwrap();
    let c2 = ladyzhenskaya_estimate(s.basis.grid(), 100, 7).unwrap().classical;
    let same = stability_gap(&a, &b, s.basis.grid(), s.basis.lambda1(), &s.cfg, c2).unwrap();
    let rep = stability_gap(&p, &a, s.basis.grid(), s.basis.lambda1(), &s.cfg, c2).unwrap();
    check(
        a == b && same.identical && same.max_gap() == 0.0 && rep.passes(),
        format!(
            "bit-identical rerun {}, perturbed gap max {:.3e}, bound holds {} (c2 = {c2:.3}, empirical)",
            a == b,
            rep.max_gap().sqrt(),
            rep.passes()
        ),
    )
}

fn galerkin_refinement() -> Outcome {
    let finals: Vec<(GStokesBasis<f64>, Trajectory<f64>)> = [4, 8, 16, 32]
        .iter()
        .map(|&m| {
            let s = smoke(m, 0.5);
            let t = solve_ivp(&s.system, &s.cfg, &s.xi0, &s.eta).unwrap();
            (s.basis, t)
        })
        .collect();
    // u^(m) lies in the span of the first m modes of u^(2m)'s basis, so the
    // difference is taken in the larger basis' coordinates.
    let diffs: Vec<f64> = finals
        .windows(2)
        .map(|w| {
            let (small, large) = (&w[0], &w[1]);
            let mut x = large.1.last().clone();
            let u_small = gnse_core::solver::combine(small.1.last(), &small.0).unwrap();
            let proj = project_initial(&u_small, &large.0).unwrap();
            x -= &proj;
            let resid = small.1.last().norm_squared() - proj.norm_squared();
            (x.norm_squared() + resid.max(0.0)).sqrt()
        })
        .collect();
    let ok = diffs.windows(2).all(|d| d[1] <= d[0]);
    check(ok, format!("|u(m)-u(2m)| for m=4,8,16: {diffs:?}"))
}

/// z is the trajectory driven by a known control through the first mode.
fn recovery_fixture(seed: u64, cells: usize) -> (ControlProblem<f64>, Control<f64>) {
    let grid = sine_grid(16);
    let basis = eigenbasis(&grid, 4).unwrap();
    let system = GalerkinSystem::from_basis(&basis).unwrap();
    let time = TimeGrid::with_horizon(0.5, cells).unwrap();
    let cfg = SolverConfig::new(order(0.5), 0.25, 0.05, time).unwrap();
    let xi0 = project_initial(&taylor_green(16, 1.0), &basis).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase = rng.gen_range(0.0..2.0 * PI);
    let w_star = Control::from_fn(cells, 1, |c, _| {
        let t = time.t(c);
        1.0 + 0.5 * (2.0 * PI * t + phase).sin()
    });
    let actuators = DMatrix::from_fn(4, 1, |k, _| if k == 0 { 1.0 } else { 0.0 });
    let base = ControlSpec {
        xi0: xi0.clone(),
        eta_base: vec![DVector::zeros(4); cells + 1],
        kappa: 1e-6,
        lo: vec![-3.0],
        hi: vec![3.0],
    };
    let probe = ControlProblem::from_coefficients(
        system.clone(),
        cfg,
        actuators.clone(),
        vec![DVector::zeros(4); cells + 1],
        vec![0.0; cells + 1],
        base.clone(),
    )
    .unwrap();
    let target = solution_map(&w_star, &probe).unwrap().xi().to_vec();
    let prob = ControlProblem::from_coefficients(system, cfg, actuators, target, vec![0.0; cells + 1], base).unwrap();
    (prob, w_star)
}

fn control_recovery() -> Outcome {
    let start = Instant::now();
    let (prob, _) = recovery_fixture(0, 32);
    let w0 = prob.zeros();
    let t0 = solution_map(&w0, &prob).unwrap();
    let j0 = objective(&t0, &w0, &prob).unwrap();
    let opts = MinimizeOptions {
        max_iters: 60,
        ..Default::default()
    };
    let res = minimize(&prob, &w0, opts).unwrap();
    let best = res.best();
    let track0 = prob.tracking(&t0).unwrap().sqrt();
    let track1 = prob.tracking(&res.final_trajectory).unwrap().sqrt();
    let mut monotone = res.iterates.windows(2).all(|p| p[1].j <= p[0].j);
    for seed in 1..=20 {
        let (p, _) = recovery_fixture(seed, 16);
        let r = minimize(
            &p,
            &p.zeros(),
            MinimizeOptions {
                max_iters: 8,
                ..Default::default()
            },
        )
        .unwrap();
        monotone &= r.iterates.windows(2).all(|q| q[1].j <= q[0].j);
    }
    let ratio = j0 / best.j;
    let (fast, t) = runtime(start, 600.0);
    check(
        ratio >= 100.0 && track0 / track1 >= 10.0 && monotone && fast,
        format!(
            "J {j0:.3e} -> {:.3e} ({ratio:.1}x), tracking {track0:.3e} -> {track1:.3e}, {} iterates, monotone on 20 seeds {monotone}; {t}",
            best.j,
            res.iterates.len()
        ),
    )
}

fn integration_by_parts() -> Outcome {
    let g = TimeGrid::with_horizon(1.0, 512).unwrap();
    let u = SampledFunction::from_fn(g, |t: f64| (3.0 * t).cos() + t * t).unwrap();
    let psi = SampledFunction::from_fn(g, |t: f64| (1.0 - t) * (1.0 - t) * t.exp()).unwrap();
    let r = ibp_residual(order(0.5), &u, &psi).unwrap();
    check(r <= 1e-3, format!("residual {r:.3e} (limit 1e-3)"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("fractional calculus identities", fractional_identities),
        ("Mittag-Leffler oracle", mittag_leffler_oracle),
        ("spectral fidelity", spectral_fidelity),
        ("energy neutrality of convection", energy_neutrality),
        ("a-priori energy certificate", a_priori_certificate),
        ("alpha -> 1 consistency", alpha_one_consistency),
        ("uniqueness and stability", uniqueness_stability),
        ("Galerkin refinement", galerkin_refinement),
        ("control recovery", control_recovery),
        ("fractional integration by parts", integration_by_parts),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(d) => println!("criterion {:>2} {name}: PASS ({d})", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({d})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
