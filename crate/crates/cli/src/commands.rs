use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gnse_core::control::{minimize, solution_map, Control, ControlProblem, ControlSpec, MinimizeOptions, StopReason};
use gnse_core::fracops::{FractionalOrder, TimeGrid};
use gnse_core::recipes::{kolmogorov, taylor_green};
use gnse_core::scalar::fmt_full;
use gnse_core::solver::{energy_certificate, forcing_coeffs, project_initial, solve_ivp, SolverConfig};
use gnse_core::spectral::{eigenbasis_with, EigenOptions, GStokesBasis, GalerkinSystem};
use gnse_core::wdomain::{check_hg, HgCheck, WeightRecipe, WeightedGrid};
use gnse_core::Error as CoreError;
use nalgebra::{DMatrix, DVector};
use serde_json::Value;

use crate::config::{Forcing, Initial, RunConfig, Target, Weight};
use crate::{CliError, Exit};

/// `GNSE_OUT` wins over `[output] dir`.
pub fn resolve_output(cfg: &RunConfig) -> PathBuf {
    std::env::var_os("GNSE_OUT")
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| cfg.output.clone())
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

fn load_table(path: &Path, n: usize) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let values = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    if values.len() != n * n {
        return Err(CliError::Io(format!(
            "{}: expected {} weight samples, found {}",
            path.display(),
            n * n,
            values.len()
        )));
    }
    Ok(values)
}

pub fn build_grid(cfg: &RunConfig) -> Result<WeightedGrid<f64>, CliError> {
    let recipe = match &cfg.weight {
        Weight::Constant(c) => WeightRecipe::Constant(*c),
        Weight::Sine(e) => WeightRecipe::Sine { epsilon: *e },
        Weight::Table(path) => WeightRecipe::Table(load_table(path, cfg.n)?),
    };
    Ok(WeightedGrid::build(&recipe, cfg.n)?)
}

fn build_basis(cfg: &RunConfig, grid: &WeightedGrid<f64>) -> Result<GStokesBasis<f64>, CliError> {
    let opts = EigenOptions {
        max_trial: cfg.trial_modes,
    };
    Ok(eigenbasis_with(grid, cfg.m, opts)?)
}

/// Everything a forward solve needs.
pub struct Setup {
    pub grid: WeightedGrid<f64>,
    pub basis: GStokesBasis<f64>,
    pub system: GalerkinSystem<f64>,
    pub solver: SolverConfig<f64>,
    pub xi0: DVector<f64>,
    pub eta: Vec<DVector<f64>>,
}

fn unit(m: usize, k: usize, scale: f64) -> DVector<f64> {
    let mut v = DVector::zeros(m);
    v[k - 1] = scale;
    v
}

pub fn setup(cfg: &RunConfig) -> Result<Setup, CliError> {
    let grid = build_grid(cfg)?;
    let basis = build_basis(cfg, &grid)?;
    let system = GalerkinSystem::from_basis(&basis)?;
    let time = TimeGrid::new(cfg.dt, cfg.n_steps)?;
    let solver = SolverConfig::new(FractionalOrder::new(cfg.alpha)?, cfg.alpha1, cfg.nu, time)?
        .with_picard(cfg.picard_tol, cfg.picard_max)?
        .with_slack(cfg.slack)?;
    let m = cfg.m;
    let xi0 = match cfg.initial {
        Initial::Zero => DVector::zeros(m),
        Initial::TaylorGreen { amplitude } => project_initial(&taylor_green(cfg.n, amplitude), &basis)?,
        Initial::Mode { amplitude, mode } => unit(m, mode, amplitude),
    };
    let eta = match cfg.forcing {
        Forcing::Zero => vec![DVector::zeros(m); time.len()],
        Forcing::Kolmogorov { amplitude, wavenumber } => {
            let f = kolmogorov(cfg.n, amplitude, wavenumber);
            forcing_coeffs(|_, _| Ok(f.clone()), &basis, &time)?
        }
        Forcing::Mode { amplitude, mode } => vec![unit(m, mode, amplitude); time.len()],
    };
    Ok(Setup {
        grid,
        basis,
        system,
        solver,
        xi0,
        eta,
    })
}

fn hg_report(hg: &HgCheck<f64>) -> String {
    [
        ("holds", hg.holds.to_string()),
        ("lambda1", fmt_full(hg.lambda1)),
        ("margin", fmt_full(hg.margin)),
        ("grad_g_sup", fmt_full(hg.grad_g_sup)),
        ("m0", fmt_full(hg.m0)),
        ("nu_prime_factor", fmt_full(hg.nu_prime_factor)),
        ("nu_prime_factor_first", fmt_full(hg.nu_prime_factor_first)),
        ("nu_prime_factor_second", fmt_full(hg.nu_prime_factor_second)),
    ]
    .iter()
    .map(|(k, v)| format!("{k}={v}\n"))
    .collect()
}

pub fn cmd_eig(cfg: &RunConfig, out: &Path) -> Result<Exit, CliError> {
    prepare_dir(out)?;
    let grid = build_grid(cfg)?;
    let basis = build_basis(cfg, &grid)?;
    basis.write_csvs(out)?;
    let hg = check_hg(&grid, basis.lambda1())?;
    fs::write(out.join("hg_check.txt"), hg_report(&hg))?;
    println!(
        "{} eigenpairs, lambda1 = {:.6}, hypothesis on g {}",
        basis.m(),
        basis.lambda1(),
        if hg.holds { "holds" } else { "FAILS" }
    );
    Ok(if hg.holds { Exit::Ok } else { Exit::Hypothesis })
}

pub fn cmd_solve(cfg: &RunConfig, out: &Path) -> Result<Exit, CliError> {
    let start = Instant::now();
    prepare_dir(out)?;
    let s = setup(cfg)?;
    let traj = solve_ivp(&s.system, &s.solver, &s.xi0, &s.eta)?;
    traj.write_csv(&out.join("trajectory.csv"))?;
    traj.write_diagnostics_csv(&out.join("diagnostics.csv"))?;
    let hg = check_hg(&s.grid, s.basis.lambda1())?;
    let exit = match energy_certificate(&traj, &s.grid, s.basis.lambda1(), &s.solver) {
        Ok(cert) => {
            cert.write_csvs(out)?;
            match cert.first_failure() {
                None => {
                    println!("certificate holds at all {} nodes", traj.xi().len());
                    Exit::Ok
                }
                Some(n) => {
                    println!("certificate fails first at node {n}");
                    Exit::Certificate
                }
            }
        }
        Err(CoreError::Domain(msg)) => {
            eprintln!("{msg}");
            Exit::Hypothesis
        }
        Err(e) => return Err(e.into()),
    };
    let mut manifest = cfg.flat();
    manifest.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    manifest.insert("alpha1".into(), cfg.alpha1.into());
    manifest.insert("b".into(), s.solver.b().into());
    let nu_prime = if hg.holds {
        Value::from(cfg.nu * hg.nu_prime_factor)
    } else {
        Value::Null
    };
    manifest.insert("nu_prime".into(), nu_prime);
    manifest.insert("slack".into(), cfg.slack.into());
    manifest.insert("wall_seconds".into(), start.elapsed().as_secs_f64().into());
    let json = serde_json::to_string_pretty(&Value::Object(manifest)).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(out.join("manifest.json"), json + "\n")?;
    Ok(exit)
}

fn control_problem(cfg: &RunConfig, s: Setup) -> Result<ControlProblem<f64>, CliError> {
    let c = &cfg.control;
    let m = cfg.m;
    let d_c = c.modes.len();
    let actuators = DMatrix::from_fn(m, d_c, |k, i| if c.modes[i] == k + 1 { 1.0 } else { 0.0 });
    let len = s.solver.time().len();
    let spec = ControlSpec {
        xi0: s.xi0.clone(),
        eta_base: s.eta.clone(),
        kappa: c.kappa,
        lo: c.lo.clone(),
        hi: c.hi.clone(),
    };
    let build = |target: Vec<DVector<f64>>| {
        ControlProblem::from_coefficients(
            s.system.clone(),
            s.solver,
            actuators.clone(),
            target,
            vec![0.0; len],
            spec.clone(),
        )
    };
    let zero = vec![DVector::zeros(m); len];
    let target = match c.target {
        Target::Zero => zero,
        Target::Free => solve_ivp(&s.system, &s.solver, &s.xi0, &s.eta)?.xi().to_vec(),
        Target::Driven => {
            let probe = build(zero)?;
            let w = Control::from_fn(probe.n_cells(), d_c, |_, i| c.target_w[i]);
            solution_map(&w, &probe)?.xi().to_vec()
        }
    };
    Ok(build(target)?)
}

pub fn cmd_control(cfg: &RunConfig, out: &Path) -> Result<Exit, CliError> {
    prepare_dir(out)?;
    let s = setup(cfg)?;
    let prob = control_problem(cfg, s)?;
    let c = &cfg.control;
    let opts = MinimizeOptions {
        max_iters: c.max_iters,
        tol: c.tol,
        armijo_c: c.armijo_c,
        armijo_beta: c.armijo_beta,
        fd_eps: c.fd_eps,
        threads: cfg.threads,
        ..Default::default()
    };
    let w0 = prob.project(&prob.zeros());
    let res = minimize(&prob, &w0, opts)?;
    res.write_log(&out.join("control_log.csv"))?;
    let best = res.best();
    best.w.write_csv(&out.join("w_opt.csv"), prob.cfg().time().dt())?;
    res.final_trajectory.write_csv(&out.join("trajectory.csv"))?;
    res.final_trajectory.write_diagnostics_csv(&out.join("diagnostics.csv"))?;
    let stop = match res.stop {
        StopReason::Converged => "tolerance reached",
        StopReason::Stationary => "stationary",
        StopReason::MaxIters => "iteration cap reached",
    };
    println!(
        "J {:.6e} -> {:.6e} after {} accepted iterates ({stop})",
        res.iterates[0].j,
        best.j,
        res.iterates.len() - 1
    );
    Ok(Exit::Ok)
}
