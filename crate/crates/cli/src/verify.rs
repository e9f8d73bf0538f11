//! Desk-scale invariant suite behind `gnse verify`.

use std::f64::consts::PI;

use gnse_core::control::{fd_gradient, minimize, solution_map, Control, ControlProblem, ControlSpec, MinimizeOptions};
use gnse_core::fracops::{
    ibp_residual, l1_weights, mittag_leffler, FractionalOrder, L1Stencil, SampledFunction, TimeGrid,
};
use gnse_core::recipes::{kolmogorov, taylor_green};
use gnse_core::reference::implicit_euler;
use gnse_core::solver::{energy_certificate, forcing_coeffs, project_initial, solve_ivp, SolverConfig};
use gnse_core::spectral::{eigenbasis, GStokesBasis, GalerkinSystem, Tensor3};
use gnse_core::wdomain::{
    check_hg, div_g, leray_project_g, weighted_inner, VelocityField, WeightRecipe, WeightedGrid,
};
use gnse_core::Result;
use nalgebra::{DMatrix, DVector};

pub const MODULES: [&str; 5] = ["fracops", "wdomain", "spectral", "solver", "control"];

/// `E_{1/2}(-1) = e·erfc(1)`.
const ML_HALF_AT_MINUS_ONE: f64 = 0.427_583_576_155_807;

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    /// Mutation fixture: flips the sign of the L1 weight `b₁`. The Caputo
    /// power-rule check must catch it.
    pub flip_l1_weight: bool,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub module: &'static str,
    pub name: &'static str,
    pub pass: bool,
    pub value: String,
}

type Probe = fn(&VerifyOptions) -> Result<(bool, String)>;

/// Runs every check of the selected module (all modules when `filter` is
/// `None`). A check that errors counts as a failure.
pub fn run_suite(filter: Option<&str>, opts: VerifyOptions) -> Vec<Check> {
    let all: [(&str, &str, Probe); 20] = [
        ("fracops", "l1 weights positive and decreasing", l1_weights_monotone),
        ("fracops", "caputo power rule t", |o| power_rule(o, 1)),
        ("fracops", "caputo power rule t^2", |o| power_rule(o, 2)),
        ("fracops", "mittag-leffler E_1 = exp", ml_exp),
        ("fracops", "mittag-leffler E_1/2(-1)", ml_half),
        ("fracops", "integration by parts residual", ibp),
        ("wdomain", "div_g of projection", projection_divergence),
        ("wdomain", "projection orthogonality", projection_orthogonality),
        ("wdomain", "norm equivalence", norm_equivalence),
        ("wdomain", "hypothesis on g for g = 1", hg_constant),
        ("spectral", "g = 1 eigenvalues near 4 pi^2", constant_spectrum),
        ("spectral", "orthonormal divergence-free modes", basis_defects),
        ("spectral", "lambda1 lower bound", lambda1_bound),
        ("spectral", "convection energy neutrality", energy_neutrality),
        ("solver", "mittag-leffler relaxation", ml_relaxation),
        ("solver", "alpha = 1 matches implicit Euler", alpha_one),
        ("solver", "energy certificate and rerun", certificate),
        ("control", "control cost gradient", cost_gradient),
        ("control", "fd gradient independent of threads", fd_threads),
        ("control", "unforced target is stationary", stationary_target),
    ];
    all.iter()
        .filter(|(module, _, _)| filter.is_none_or(|f| f == *module))
        .map(|&(module, name, probe)| {
            let (pass, value) = probe(&opts).unwrap_or_else(|e| (false, format!("error: {e}")));
            Check {
                module,
                name,
                pass,
                value,
            }
        })
        .collect()
}

pub fn print_table(checks: &[Check]) {
    let width = checks.iter().map(|c| c.module.len() + c.name.len() + 1).max().unwrap_or(0);
    for c in checks {
        let label = format!("{}/{}", c.module, c.name);
        println!("{label:<width$}  {}  {}", if c.pass { "pass" } else { "FAIL" }, c.value);
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    println!("{passed} of {} checks passed", checks.len());
}

fn order(a: f64) -> FractionalOrder<f64> {
    FractionalOrder::new(a).expect("valid order")
}

fn l1_weights_monotone(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut ok = true;
    let mut min_gap = f64::INFINITY;
    for a in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let w = l1_weights(order(a), 256)?;
        ok &= w.iter().all(|&b| b > 0.0);
        for p in w.windows(2) {
            min_gap = min_gap.min(p[0] - p[1]);
        }
    }
    Ok((ok && min_gap > 0.0, format!("min gap {min_gap:.3e}")))
}

fn power_rule(opts: &VerifyOptions, power: i32) -> Result<(bool, String)> {
    let alpha = 0.5;
    let n = 512;
    let dt = 1.0 / n as f64;
    let mut weights = l1_weights(order(alpha), n)?;
    if opts.flip_l1_weight {
        weights[1] = -weights[1];
    }
    let stencil = L1Stencil::with_weights(order(alpha), dt, weights)?;
    let values: Vec<f64> = (0..=n).map(|j| (j as f64 * dt).powi(power)).collect();
    let want = libm::tgamma(power as f64 + 1.0) / libm::tgamma(power as f64 + 1.0 - alpha);
    let err = (stencil.apply(&values, n)? - want).abs();
    let bound = dt.powf(2.0 - alpha);
    Ok((err <= bound, format!("error {err:.3e} (bound {bound:.3e})")))
}

fn ml_exp(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for i in 0..=40 {
        let z = -10.0 + 0.5 * i as f64;
        let e = (mittag_leffler(order(1.0), z)? - z.exp()).abs() / z.exp().max(1.0);
        worst = worst.max(e);
    }
    Ok((worst <= 1e-10, format!("relative error {worst:.3e}")))
}

fn ml_half(_: &VerifyOptions) -> Result<(bool, String)> {
    let err = (mittag_leffler(order(0.5), -1.0)? - ML_HALF_AT_MINUS_ONE).abs();
    Ok((err <= 1e-12, format!("error {err:.3e}")))
}

fn ibp(_: &VerifyOptions) -> Result<(bool, String)> {
    let g = TimeGrid::with_horizon(1.0, 512)?;
    let u = SampledFunction::from_fn(g, |t: f64| (3.0 * t).cos() + t * t)?;
    let psi = SampledFunction::from_fn(g, |t: f64| (1.0 - t) * (1.0 - t) * t.exp())?;
    let r = ibp_residual(order(0.5), &u, &psi)?;
    Ok((r <= 1e-3, format!("residual {r:.3e}")))
}

fn sine_grid(n: usize, epsilon: f64) -> Result<WeightedGrid<f64>> {
    WeightedGrid::build(&WeightRecipe::Sine { epsilon }, n)
}

/// A field with gradient and rotational parts at several wavenumbers.
fn probe_field(n: usize) -> VelocityField<f64> {
    VelocityField::from_fn(n, |x: f64, y: f64| {
        let (a, b) = (2.0 * PI * x, 2.0 * PI * y);
        (
            a.sin() * (2.0 * b).cos() + 0.3 * (3.0 * a + b).cos(),
            a.cos() + 0.5 * (2.0 * a).sin() * b.sin() - 0.2 * (a - 2.0 * b).sin(),
        )
    })
}

fn projection_divergence(_: &VerifyOptions) -> Result<(bool, String)> {
    let grid = sine_grid(16, 0.2)?;
    let p = leray_project_g(&probe_field(16), &grid)?;
    let d = div_g(&p, &grid)?.max_abs();
    Ok((d <= 1e-10, format!("max |div_g Pu| {d:.3e}")))
}

fn projection_orthogonality(_: &VerifyOptions) -> Result<(bool, String)> {
    let grid = sine_grid(16, 0.2)?;
    let u = probe_field(16);
    let p = leray_project_g(&u, &grid)?;
    let rel = weighted_inner(&p, &u.sub(&p), &grid)?.abs() / weighted_inner(&u, &u, &grid)?;
    Ok((rel <= 1e-10, format!("relative inner product {rel:.3e}")))
}

fn norm_equivalence(_: &VerifyOptions) -> Result<(bool, String)> {
    let grid = sine_grid(16, 0.3)?;
    let plain = WeightedGrid::build(&WeightRecipe::Constant(1.0), 16)?;
    let u = probe_field(16);
    let ratio = weighted_inner(&u, &u, &grid)? / weighted_inner(&u, &u, &plain)?;
    let ok = grid.m0() * (1.0 - 1e-12) <= ratio && ratio <= grid.big_m0() * (1.0 + 1e-12);
    Ok((ok, format!("ratio {ratio:.6} in [{:.3}, {:.3}]", grid.m0(), grid.big_m0())))
}

fn hg_constant(_: &VerifyOptions) -> Result<(bool, String)> {
    let grid = WeightedGrid::build(&WeightRecipe::Constant(1.0), 16)?;
    let hg = check_hg(&grid, 4.0 * PI * PI)?;
    let ok = hg.holds && hg.nu_prime_factor == 1.0 && (hg.margin - PI).abs() <= 1e-12;
    Ok((ok, format!("margin {:.6}, factor {}", hg.margin, hg.nu_prime_factor)))
}

fn constant_spectrum(_: &VerifyOptions) -> Result<(bool, String)> {
    let grid = WeightedGrid::build(&WeightRecipe::Constant(1.0), 16)?;
    let basis = eigenbasis(&grid, 4)?;
    let target = 4.0 * PI * PI;
    let dev = basis.lambdas().iter().map(|l| (l / target - 1.0).abs()).fold(0.0, f64::max);
    Ok((dev <= 0.02, format!("max relative deviation {dev:.3e}")))
}

fn sine_basis(m: usize) -> Result<GStokesBasis<f64>> {
    eigenbasis(&sine_grid(16, 0.1)?, m)
}

fn basis_defects(_: &VerifyOptions) -> Result<(bool, String)> {
    let b = sine_basis(8)?;
    let (o, d) = (b.orthonormality_defect(), b.divergence_defect());
    Ok((o <= 1e-10 && d <= 1e-10, format!("orthonormality {o:.3e}, divergence {d:.3e}")))
}

fn lambda1_bound(_: &VerifyOptions) -> Result<(bool, String)> {
    let b = sine_basis(1)?;
    let g = b.grid();
    let bound = 4.0 * PI * PI * g.m0() / g.big_m0();
    Ok((
        b.lambda1() >= 0.95 * bound,
        format!("lambda1 {:.4} vs {bound:.4}", b.lambda1()),
    ))
}

fn energy_neutrality(_: &VerifyOptions) -> Result<(bool, String)> {
    let sys = GalerkinSystem::from_basis(&sine_basis(8)?)?;
    let mut worst: f64 = 0.0;
    for s in 0..10 {
        let xi = DVector::from_fn(8, |k, _| ((s * 8 + k) as f64 * 0.7).sin());
        let r = xi.dot(&sys.nonlinear(&xi)).abs() / xi.norm().powi(3);
        worst = worst.max(r);
    }
    Ok((worst <= 1e-12, format!("max |xi.N(xi)|/|xi|^3 {worst:.3e}")))
}

fn ml_relaxation(_: &VerifyOptions) -> Result<(bool, String)> {
    let time = TimeGrid::with_horizon(1.0, 256)?;
    let cfg = SolverConfig::new(order(0.5), 0.25, 1.0, time)?;
    let sys = GalerkinSystem::new(vec![1.0], DMatrix::zeros(1, 1), Tensor3::zeros(1))?;
    let traj = solve_ivp(&sys, &cfg, &DVector::from_element(1, 1.0), &vec![DVector::zeros(1); 257])?;
    let mut worst: f64 = 0.0;
    for (j, x) in traj.xi().iter().enumerate() {
        worst = worst.max((x[0] - mittag_leffler(order(0.5), -time.t(j).sqrt())?).abs());
    }
    Ok((worst <= 5e-3, format!("sup error {worst:.3e}")))
}

struct Small {
    basis: GStokesBasis<f64>,
    system: GalerkinSystem<f64>,
    xi0: DVector<f64>,
    eta: Vec<DVector<f64>>,
}

fn small(time: &TimeGrid<f64>) -> Result<Small> {
    let basis = sine_basis(4)?;
    let system = GalerkinSystem::from_basis(&basis)?;
    let xi0 = project_initial(&taylor_green(16, 1.0), &basis)?;
    let f = kolmogorov(16, 1.0, 1);
    let eta = forcing_coeffs(|_, _| Ok(f.clone()), &basis, time)?;
    Ok(Small {
        basis,
        system,
        xi0,
        eta,
    })
}

fn alpha_one(_: &VerifyOptions) -> Result<(bool, String)> {
    let time = TimeGrid::new(0.01, 20)?;
    let s = small(&time)?;
    let cfg = SolverConfig::new(order(1.0), 0.5, 0.05, time)?.with_picard(1e-14, 200)?;
    let traj = solve_ivp(&s.system, &cfg, &s.xi0, &s.eta)?;
    let reference = implicit_euler(&s.system, 0.05, 0.01, &s.xi0, &s.eta, 1e-14)?;
    let worst = traj.xi().iter().zip(&reference).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok((worst <= 1e-10, format!("sup difference {worst:.3e}")))
}

fn certificate(_: &VerifyOptions) -> Result<(bool, String)> {
    let time = TimeGrid::with_horizon(0.25, 64)?;
    let s = small(&time)?;
    let cfg = SolverConfig::new(order(0.5), 0.25, 0.05, time)?;
    let a = solve_ivp(&s.system, &cfg, &s.xi0, &s.eta)?;
    let b = solve_ivp(&s.system, &cfg, &s.xi0, &s.eta)?;
    let cert = energy_certificate(&a, s.basis.grid(), s.basis.lambda1(), &cfg)?;
    let margin = cert.sup_rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    Ok((
        cert.passes() && a == b,
        format!("min sup margin {margin:.3e}, rerun identical {}", a == b),
    ))
}

const CELLS: usize = 8;

fn toy_problem(target: Option<Vec<DVector<f64>>>) -> Result<ControlProblem<f64>> {
    let time = TimeGrid::with_horizon(0.5, CELLS)?;
    let cfg = SolverConfig::new(order(0.6), 0.3, 0.2, time)?;
    let tensor = Tensor3::from_fn(3, |k, l, lp| ((k + 2 * l + 3 * lp) % 5) as f64 * 0.1 - 0.2);
    let c = DMatrix::from_fn(3, 3, |i, j| (i as f64 - j as f64) * 0.3);
    let system = GalerkinSystem::new(vec![1.0, 2.0, 3.5], c, tensor)?;
    let spec = ControlSpec {
        xi0: DVector::from_vec(vec![1.0, -0.5, 0.2]),
        eta_base: (0..=CELLS).map(|n| DVector::from_element(3, 0.1 * n as f64)).collect(),
        kappa: 1e-3,
        lo: vec![-2.0, -1.0],
        hi: vec![2.0, 1.0],
    };
    let target = target.unwrap_or_else(|| vec![DVector::zeros(3); CELLS + 1]);
    let b = DMatrix::from_fn(3, 2, |k, i| if k == i { 1.0 } else { 0.25 });
    ControlProblem::from_coefficients(system, cfg, b, target, vec![0.0; CELLS + 1], spec)
}

fn cost_gradient(_: &VerifyOptions) -> Result<(bool, String)> {
    let prob = toy_problem(None)?;
    let w = Control::from_fn(CELLS, 2, |c, i| 0.4 * ((2 * c + i) as f64).cos());
    let g = prob.control_cost_gradient(&w);
    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    for c in 0..CELLS {
        for i in 0..2 {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp.set(c, i, w.get(c, i) + eps);
            wm.set(c, i, w.get(c, i) - eps);
            let fd = (prob.control_cost(&wp) - prob.control_cost(&wm)) / (2.0 * eps);
            worst = worst.max((fd - g.get(c, i)).abs());
        }
    }
    Ok((worst <= 1e-6, format!("max deviation {worst:.3e}")))
}

fn fd_threads(_: &VerifyOptions) -> Result<(bool, String)> {
    let prob = toy_problem(None)?;
    let w = Control::from_fn(CELLS, 2, |c, _| 0.1 * c as f64);
    let one = fd_gradient(&w, &prob, 1e-6, 1)?;
    let many = fd_gradient(&w, &prob, 1e-6, 4)?;
    let same = one.values() == many.values();
    Ok((same, format!("identical {same}")))
}

fn stationary_target(_: &VerifyOptions) -> Result<(bool, String)> {
    let probe = toy_problem(None)?;
    let free = solution_map(&probe.zeros(), &probe)?;
    let prob = toy_problem(Some(free.xi().to_vec()))?;
    let res = minimize(&prob, &prob.zeros(), MinimizeOptions::default())?;
    let ok = res.iterates.len() == 1;
    Ok((ok, format!("accepted iterates {}, J {:.3e}", res.iterates.len() - 1, res.best().j)))
}
