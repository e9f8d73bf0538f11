//! Tracking-type optimal control of the Galerkin system.
//!
//! Controls are piecewise constant on the solver grid: row `c` of `w` acts
//! on `(t_c, t_{c+1}]` and enters the forcing through fixed actuator fields,
//! `f = f_base + Σ_i w_i a_i`. The objective is
//!
//! `J(w) = ½ ∫ |u(t) - z(t)|²_g dt + Σ_c dt·κ‖w_c‖^p`,  `p = 2/α₁`,
//!
//! with the time integral evaluated by the trapezoid rule on the nodes.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::csv::write_csv;
use crate::error::{input, Error, Result};
use crate::fracops::L1Stencil;
use crate::scalar::{fmt_full, lit, Scalar};
use crate::solver::{project_initial, SolverConfig, Stepper, Trajectory};
use crate::spectral::{GStokesBasis, GalerkinSystem};
use crate::wdomain::{div_g, leray_project_g, weighted_inner, VelocityField};

/// Piecewise-constant control: `n_steps × d_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Control<T: Scalar> {
    values: DMatrix<T>,
}

impl<T: Scalar> Control<T> {
    pub fn zeros(n_cells: usize, d_c: usize) -> Self {
        Self {
            values: DMatrix::zeros(n_cells, d_c),
        }
    }

    pub fn from_matrix(values: DMatrix<T>) -> Self {
        Self { values }
    }

    pub fn from_fn(n_cells: usize, d_c: usize, f: impl FnMut(usize, usize) -> T) -> Self {
        Self {
            values: DMatrix::from_fn(n_cells, d_c, f),
        }
    }

    pub fn n_cells(&self) -> usize {
        self.values.nrows()
    }

    pub fn d_c(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn get(&self, cell: usize, comp: usize) -> T {
        self.values[(cell, comp)]
    }

    pub fn set(&mut self, cell: usize, comp: usize, v: T) {
        self.values[(cell, comp)] = v;
    }

    /// `w_opt.csv`: `t,comp,value` with `t` the left end of each cell and
    /// 1-based `comp`.
    pub fn write_csv(&self, path: &Path, dt: T) -> Result<()> {
        let rows = (0..self.n_cells()).flat_map(|c| {
            let t = fmt_full(dt * lit::<T>(c as f64));
            (0..self.d_c())
                .map(|i| format!("{t},{},{}", i + 1, fmt_full(self.values[(c, i)])))
                .collect::<Vec<_>>()
        });
        write_csv(path, "t,comp,value", rows)
    }
}

/// Problem data. Tracking targets are stored as their basis coefficients
/// `ζ_n` plus the squared norm of the part orthogonal to the basis, which
/// the state can never reach.
#[derive(Debug, Clone)]
pub struct ControlProblem<T: Scalar> {
    system: GalerkinSystem<T>,
    cfg: SolverConfig<T>,
    stencil: L1Stencil<T>,
    xi0: DVector<T>,
    eta_base: Vec<DVector<T>>,
    /// `m × d_c`: basis coefficients of the actuator fields.
    actuators: DMatrix<T>,
    target: Vec<DVector<T>>,
    target_perp_sq: Vec<T>,
    kappa: T,
    lo: Vec<T>,
    hi: Vec<T>,
}

/// Everything needed to build a [`ControlProblem`] except the basis-derived
/// pieces.
#[derive(Debug, Clone)]
pub struct ControlSpec<T: Scalar> {
    pub xi0: DVector<T>,
    /// Basis coefficients of `f_base` at every node.
    pub eta_base: Vec<DVector<T>>,
    pub kappa: T,
    pub lo: Vec<T>,
    pub hi: Vec<T>,
}

impl<T: Scalar> ControlProblem<T> {
    /// Builds the problem from actuator and target fields. Actuators are
    /// g-projected before use.
    pub fn new(
        basis: &GStokesBasis<T>,
        system: GalerkinSystem<T>,
        cfg: SolverConfig<T>,
        actuators: &[VelocityField<T>],
        target: &[VelocityField<T>],
        spec: ControlSpec<T>,
    ) -> Result<Self> {
        let grid = basis.grid();
        let mut cols = Vec::with_capacity(actuators.len());
        for (i, a) in actuators.iter().enumerate() {
            let p = leray_project_g(a, grid)?;
            let div = div_g(&p, grid)?.max_abs();
            if div > lit(1e-9) {
                return input(format!("actuator {} not g-divergence-free after projection ({div:e})", i + 1));
            }
            cols.push(project_initial(&p, basis)?);
        }
        if target.len() != cfg.time().len() {
            return input(format!(
                "target has {} samples, time grid has {}",
                target.len(),
                cfg.time().len()
            ));
        }
        let mut zeta = Vec::with_capacity(target.len());
        let mut perp = Vec::with_capacity(target.len());
        for z in target {
            let c = project_initial(z, basis)?;
            let total = weighted_inner(z, z, grid)?;
            perp.push((total - c.norm_squared()).max(T::zero()));
            zeta.push(c);
        }
        let m = system.m();
        let b = if cols.is_empty() {
            DMatrix::zeros(m, 0)
        } else {
            DMatrix::from_columns(&cols)
        };
        Self::from_coefficients(system, cfg, b, zeta, perp, spec)
    }

    /// Builds the problem directly in basis coordinates.
    pub fn from_coefficients(
        system: GalerkinSystem<T>,
        cfg: SolverConfig<T>,
        actuators: DMatrix<T>,
        target: Vec<DVector<T>>,
        target_perp_sq: Vec<T>,
        spec: ControlSpec<T>,
    ) -> Result<Self> {
        let m = system.m();
        let len = cfg.time().len();
        let d_c = actuators.ncols();
        if actuators.nrows() != m {
            return input(format!("actuator matrix has {} rows, system has {m} modes", actuators.nrows()));
        }
        if target.len() != len || target_perp_sq.len() != len || spec.eta_base.len() != len {
            return input(format!("target and base forcing need {len} samples"));
        }
        if spec.xi0.len() != m || target.iter().chain(&spec.eta_base).any(|v| v.len() != m) {
            return input(format!("coefficient vectors must have {m} entries"));
        }
        if !(spec.kappa > T::zero()) {
            return input(format!("kappa must be positive, got {}", spec.kappa));
        }
        if spec.lo.len() != d_c || spec.hi.len() != d_c {
            return input(format!("box needs {d_c} lower and upper bounds"));
        }
        if let Some(i) = (0..d_c).find(|&i| !(spec.lo[i] <= spec.hi[i])) {
            return input(format!(
                "empty box in component {}: [{}, {}]",
                i + 1,
                spec.lo[i],
                spec.hi[i]
            ));
        }
        let stencil = L1Stencil::corrected(cfg.alpha(), cfg.time().dt(), cfg.time().n_steps())?;
        Ok(Self {
            system,
            cfg,
            stencil,
            xi0: spec.xi0,
            eta_base: spec.eta_base,
            actuators,
            target,
            target_perp_sq,
            kappa: spec.kappa,
            lo: spec.lo,
            hi: spec.hi,
        })
    }

    pub fn d_c(&self) -> usize {
        self.actuators.ncols()
    }

    pub fn n_cells(&self) -> usize {
        self.cfg.time().n_steps()
    }

    pub fn cfg(&self) -> &SolverConfig<T> {
        &self.cfg
    }

    pub fn system(&self) -> &GalerkinSystem<T> {
        &self.system
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    /// Same problem with a different cost weight.
    pub fn with_kappa(&self, kappa: T) -> Result<Self> {
        if !(kappa > T::zero()) {
            return input(format!("kappa must be positive, got {kappa}"));
        }
        Ok(Self {
            kappa,
            ..self.clone()
        })
    }

    /// `p = 2/α₁`.
    pub fn cost_exponent(&self) -> T {
        lit::<T>(2.0) / self.cfg.alpha1()
    }

    pub fn lower(&self) -> &[T] {
        &self.lo
    }

    pub fn upper(&self) -> &[T] {
        &self.hi
    }

    pub fn zeros(&self) -> Control<T> {
        Control::zeros(self.n_cells(), self.d_c())
    }

    /// Clips every entry into the box.
    pub fn project(&self, w: &Control<T>) -> Control<T> {
        let mut out = w.clone();
        for c in 0..w.n_cells() {
            for i in 0..w.d_c() {
                out.set(c, i, w.get(c, i).max(self.lo[i]).min(self.hi[i]));
            }
        }
        out
    }

    fn check_shape(&self, w: &Control<T>) -> Result<()> {
        if w.n_cells() != self.n_cells() || w.d_c() != self.d_c() {
            return input(format!(
                "control is {}x{}, problem needs {}x{}",
                w.n_cells(),
                w.d_c(),
                self.n_cells(),
                self.d_c()
            ));
        }
        Ok(())
    }

    fn check_feasible(&self, w: &Control<T>) -> Result<()> {
        self.check_shape(w)?;
        for c in 0..w.n_cells() {
            for i in 0..w.d_c() {
                let v = w.get(c, i);
                if !(v >= self.lo[i] && v <= self.hi[i]) {
                    return input(format!(
                        "control entry (cell {c}, comp {}) = {v} outside [{}, {}]",
                        i + 1,
                        self.lo[i],
                        self.hi[i]
                    ));
                }
            }
        }
        Ok(())
    }

    /// Forcing coefficients `η_n = η_base,n + B w_{cell(n)}`; node `n ≥ 1`
    /// uses cell `n - 1` and node 0 uses cell 0.
    pub fn forcing(&self, w: &Control<T>) -> Result<Vec<DVector<T>>> {
        self.check_shape(w)?;
        if self.d_c() == 0 {
            return Ok(self.eta_base.clone());
        }
        Ok(self
            .eta_base
            .iter()
            .enumerate()
            .map(|(n, e)| {
                let cell = n.max(1) - 1;
                let wc = w.values.row(cell).transpose();
                e + &self.actuators * wc
            })
            .collect())
    }

    /// `Σ_c dt·κ‖w_c‖^p`.
    pub fn control_cost(&self, w: &Control<T>) -> T {
        let dt = self.cfg.time().dt();
        let p = self.cost_exponent();
        (0..w.n_cells()).fold(T::zero(), |acc, c| {
            acc + dt * self.kappa * w.values.row(c).norm().powf(p)
        })
    }

    /// Closed-form gradient of [`control_cost`](Self::control_cost):
    /// `dt·p·κ‖w_c‖^{p-2} w_c`.
    pub fn control_cost_gradient(&self, w: &Control<T>) -> Control<T> {
        let dt = self.cfg.time().dt();
        let p = self.cost_exponent();
        let mut g = Control::zeros(w.n_cells(), w.d_c());
        for c in 0..w.n_cells() {
            let nrm = w.values.row(c).norm();
            let f = dt * p * self.kappa * nrm.powf(p - lit(2.0));
            for i in 0..w.d_c() {
                g.set(c, i, f * w.get(c, i));
            }
        }
        g
    }

    /// `½ ∫ |u - z|²_g dt` by the trapezoid rule.
    pub fn tracking(&self, traj: &Trajectory<T>) -> Result<T> {
        if traj.xi().len() != self.target.len() {
            return input("trajectory does not match the problem's time grid");
        }
        let dt = self.cfg.time().dt();
        let half: T = lit(0.5);
        let last = self.target.len() - 1;
        let mut acc = T::zero();
        for (n, (x, z)) in traj.xi().iter().zip(&self.target).enumerate() {
            let d = (x - z).norm_squared() + self.target_perp_sq[n];
            let w = if n == 0 || n == last { half } else { T::one() };
            acc += w * d;
        }
        Ok(half * dt * acc)
    }
}

/// Control-to-state map `w ↦ ξ`.
pub fn solution_map<T: Scalar>(w: &Control<T>, prob: &ControlProblem<T>) -> Result<Trajectory<T>> {
    prob.check_feasible(w)?;
    let eta = prob.forcing(w)?;
    Stepper::with_stencil(&prob.system, &prob.cfg, prob.stencil.clone())?.run(&prob.xi0, &eta)
}

/// `J(w)` for a trajectory produced from `w`.
pub fn objective<T: Scalar>(traj: &Trajectory<T>, w: &Control<T>, prob: &ControlProblem<T>) -> Result<T> {
    prob.check_shape(w)?;
    Ok(prob.tracking(traj)? + prob.control_cost(w))
}

fn evaluate<T: Scalar>(w: &Control<T>, prob: &ControlProblem<T>) -> Result<(T, Trajectory<T>)> {
    let traj = solution_map(w, prob)?;
    Ok((objective(&traj, w, prob)?, traj))
}

/// Central-difference gradient of `J`. Stencils are clipped to the box, so
/// a coordinate sitting on a bound gets a one-sided difference. Probes are
/// split across `threads` workers; every probe writes its own slot, so the
/// result does not depend on the thread count.
pub fn fd_gradient<T: Scalar>(
    w: &Control<T>,
    prob: &ControlProblem<T>,
    eps: T,
    threads: usize,
) -> Result<Control<T>> {
    if !(eps > T::zero()) {
        return input(format!("finite-difference step must be positive, got {eps}"));
    }
    prob.check_feasible(w)?;
    let d_c = w.d_c();
    let probes = w.n_cells() * d_c;
    let probe = |idx: usize| -> Result<T> {
        let (c, i) = (idx / d_c, idx % d_c);
        let x = w.get(c, i);
        let up = (x + eps).min(prob.hi[i]);
        let down = (x - eps).max(prob.lo[i]);
        if !(up > down) {
            return Ok(T::zero());
        }
        let mut wp = w.clone();
        wp.set(c, i, up);
        let mut wm = w.clone();
        wm.set(c, i, down);
        let wrap = |e: Error| Error::Step {
            step: idx,
            source: Box::new(e),
        };
        let jp = evaluate(&wp, prob).map_err(wrap)?.0;
        let jm = evaluate(&wm, prob).map_err(wrap)?.0;
        Ok((jp - jm) / (up - down))
    };
    let threads = threads.clamp(1, probes.max(1));
    let mut slots: Vec<Result<T>> = Vec::with_capacity(probes);
    if threads == 1 {
        slots.extend((0..probes).map(probe));
    } else {
        let chunk = probes.div_ceil(threads);
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let probe = &probe;
                    s.spawn(move || {
                        (t * chunk..((t + 1) * chunk).min(probes))
                            .map(probe)
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                slots.extend(h.join().expect("gradient worker panicked"));
            }
        });
    }
    let mut g = Control::zeros(w.n_cells(), d_c);
    for (idx, v) in slots.into_iter().enumerate() {
        g.set(idx / d_c, idx % d_c, v?);
    }
    Ok(g)
}

/// Optimiser settings.
#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions<T> {
    pub max_iters: usize,
    /// Stop once `‖w - P(w - ∇J)‖ ≤ tol`.
    pub tol: T,
    /// Sufficient-decrease constant `c` in
    /// `J(w⁺) ≤ J(w) - (c/σ)‖w - w⁺‖²`.
    pub armijo_c: T,
    /// Backtracking factor.
    pub armijo_beta: T,
    /// Smallest step tried before declaring stationarity.
    pub min_step: T,
    pub fd_eps: T,
    pub threads: usize,
}

impl<T: Scalar> Default for MinimizeOptions<T> {
    fn default() -> Self {
        Self {
            max_iters: 50,
            tol: lit(1e-8),
            armijo_c: lit(1e-4),
            armijo_beta: lit(0.5),
            min_step: lit(1e-12),
            fd_eps: lit(1e-6),
            threads: 1,
        }
    }
}

/// One accepted iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlIterate<T: Scalar> {
    pub iter: usize,
    pub w: Control<T>,
    pub j: T,
    /// Projected-gradient norm `‖w - P(w - ∇J)‖` at `w`.
    pub grad_norm: T,
    /// Step length that produced this iterate (zero for the start).
    pub step: T,
    /// Largest equation residual of the iterate's trajectory.
    pub state_residual: T,
}

/// Why [`minimize`] stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Projected gradient below tolerance.
    Converged,
    /// Backtracking found no decrease above the minimum step.
    Stationary,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult<T: Scalar> {
    /// Accepted iterates, starting with `w_init`; `J` is nonincreasing.
    pub iterates: Vec<ControlIterate<T>>,
    pub stop: StopReason,
    pub final_trajectory: Trajectory<T>,
}

impl<T: Scalar> MinimizeResult<T> {
    pub fn best(&self) -> &ControlIterate<T> {
        self.iterates.last().expect("log holds the initial iterate")
    }

    /// `control_log.csv`: `iter,J,grad_norm,step,state_residual`.
    pub fn write_log(&self, path: &Path) -> Result<()> {
        write_csv(
            path,
            "iter,J,grad_norm,step,state_residual",
            self.iterates.iter().map(|it| {
                format!(
                    "{},{},{},{},{}",
                    it.iter,
                    fmt_full(it.j),
                    fmt_full(it.grad_norm),
                    fmt_full(it.step),
                    fmt_full(it.state_residual)
                )
            }),
        )
    }
}

fn frob<T: Scalar>(a: &Control<T>, b: &Control<T>) -> T {
    (&a.values - &b.values).norm()
}

/// Projected gradient descent with Armijo backtracking and a
/// Barzilai-Borwein initial step.
pub fn minimize<T: Scalar>(
    prob: &ControlProblem<T>,
    w_init: &Control<T>,
    opts: MinimizeOptions<T>,
) -> Result<MinimizeResult<T>> {
    prob.check_feasible(w_init)?;
    let mut w = w_init.clone();
    let (mut j, mut traj) = evaluate(&w, prob)?;
    let mut grad = fd_gradient(&w, prob, opts.fd_eps, opts.threads)?;
    let pg_norm = |w: &Control<T>, g: &Control<T>| {
        let trial = Control::from_matrix(&w.values - &g.values);
        frob(w, &prob.project(&trial))
    };
    let mut iterates = vec![ControlIterate {
        iter: 0,
        w: w.clone(),
        j,
        grad_norm: pg_norm(&w, &grad),
        step: T::zero(),
        state_residual: traj.max_residual(),
    }];
    let gnorm = grad.values.norm();
    let mut sigma = if gnorm > T::zero() {
        T::one() / gnorm
    } else {
        T::one()
    };
    let mut prev: Option<(Control<T>, Control<T>)> = None;
    let mut stop = StopReason::MaxIters;
    for iter in 1..=opts.max_iters {
        if iterates.last().expect("non-empty").grad_norm <= opts.tol {
            stop = StopReason::Converged;
            break;
        }
        if let Some((w_old, g_old)) = &prev {
            let s = &w.values - &w_old.values;
            let y = &grad.values - &g_old.values;
            let sy = s.dot(&y);
            if sy > T::zero() {
                sigma = s.norm_squared() / sy;
            }
        }
        let mut accepted = None;
        while sigma >= opts.min_step {
            let trial = prob.project(&Control::from_matrix(&w.values - &grad.values * sigma));
            let (jt, tt) = evaluate(&trial, prob)?;
            let moved = frob(&w, &trial);
            if jt <= j - opts.armijo_c / sigma * moved * moved && jt.is_finite() {
                accepted = Some((trial, jt, tt));
                break;
            }
            sigma *= opts.armijo_beta;
        }
        let Some((w_new, j_new, t_new)) = accepted else {
            stop = StopReason::Stationary;
            break;
        };
        let g_new = fd_gradient(&w_new, prob, opts.fd_eps, opts.threads)?;
        prev = Some((w.clone(), grad.clone()));
        w = w_new;
        j = j_new;
        traj = t_new;
        grad = g_new;
        iterates.push(ControlIterate {
            iter,
            w: w.clone(),
            j,
            grad_norm: pg_norm(&w, &grad),
            step: sigma,
            state_residual: traj.max_residual(),
        });
    }
    if stop == StopReason::MaxIters && iterates.last().expect("non-empty").grad_norm <= opts.tol {
        stop = StopReason::Converged;
    }
    Ok(MinimizeResult {
        iterates,
        stop,
        final_trajectory: traj,
    })
}
