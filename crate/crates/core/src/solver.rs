//! L1/Picard integration of the Galerkin system
//!
//! `∂^α ξ + ν(Λ + C)ξ + N(ξ) = η`,  `N(ξ)_k = Σ T[k,l,l'] ξ_l ξ_l'`,
//!
//! and the a-priori certificates evaluated on its trajectories.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::Path;

use nalgebra::{DMatrix, DVector, LU};

use crate::csv::write_csv;
use crate::error::{input, Error, Result};
use crate::fracops::{
    integrate_samples, rl_integral_left, FractionalOrder, L1Stencil, SampledFunction, TimeGrid,
};
use crate::scalar::{fmt_full, gamma, lit, Scalar};
use crate::spectral::{GStokesBasis, GalerkinSystem};
use crate::wdomain::{check_hg, weighted_inner, HgCheck, VelocityField, WeightedGrid};

/// Time-stepping parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    alpha: FractionalOrder<T>,
    alpha1: T,
    nu: T,
    time: TimeGrid<T>,
    picard_tol: T,
    picard_max: usize,
    slack: T,
}

impl<T: Scalar> SolverConfig<T> {
    /// Defaults: Picard tolerance `1e-10`, at most 50 Picard sweeps,
    /// certificate slack `1.10`.
    pub fn new(alpha: FractionalOrder<T>, alpha1: T, nu: T, time: TimeGrid<T>) -> Result<Self> {
        if !(alpha1 > T::zero() && alpha1 < alpha.alpha()) {
            return input(format!(
                "alpha1 must satisfy 0 < alpha1 < alpha = {}, got {alpha1}",
                alpha.alpha()
            ));
        }
        if !(nu > T::zero() && nu.is_finite()) {
            return input(format!("viscosity must be positive, got {nu}"));
        }
        Ok(Self {
            alpha,
            alpha1,
            nu,
            time,
            picard_tol: lit(1e-10),
            picard_max: 50,
            slack: lit(1.10),
        })
    }

    pub fn with_picard(mut self, tol: T, max_iters: usize) -> Result<Self> {
        if !(tol > T::zero()) || max_iters == 0 {
            return input("Picard tolerance and iteration cap must be positive");
        }
        self.picard_tol = tol;
        self.picard_max = max_iters;
        Ok(self)
    }

    pub fn with_slack(mut self, slack: T) -> Result<Self> {
        if !(slack >= T::one()) {
            return input(format!("certificate slack must be >= 1, got {slack}"));
        }
        self.slack = slack;
        Ok(self)
    }

    pub fn with_time(mut self, time: TimeGrid<T>) -> Self {
        self.time = time;
        self
    }

    pub fn alpha(&self) -> FractionalOrder<T> {
        self.alpha
    }

    pub fn alpha1(&self) -> T {
        self.alpha1
    }

    /// `b = (α - α₁)/(1 - α₁)`.
    pub fn b(&self) -> T {
        (self.alpha.alpha() - self.alpha1) / (T::one() - self.alpha1)
    }

    pub fn nu(&self) -> T {
        self.nu
    }

    pub fn time(&self) -> TimeGrid<T> {
        self.time
    }

    pub fn picard_tol(&self) -> T {
        self.picard_tol
    }

    pub fn picard_max(&self) -> usize {
        self.picard_max
    }

    pub fn slack(&self) -> T {
        self.slack
    }

    fn hash_into(&self, h: &mut DefaultHasher) {
        for x in [
            self.alpha.alpha(),
            self.alpha1,
            self.nu,
            self.time.dt(),
            self.picard_tol,
            self.slack,
        ] {
            x.to_f64_lossy().to_bits().hash(h);
        }
        self.time.n_steps().hash(h);
        self.picard_max.hash(h);
    }
}

/// Per-step record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics<T> {
    pub picard_iters: usize,
    /// Norm of the discrete equation residual at the accepted iterate.
    pub residual: T,
    /// `|ξ|²`.
    pub energy: T,
    /// `Σ λ_k ξ_k²`.
    pub enstrophy: T,
}

/// Galerkin coefficients on the time grid with forcing and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    time: TimeGrid<T>,
    xi: Vec<DVector<T>>,
    eta: Vec<DVector<T>>,
    lambdas: Vec<T>,
    diagnostics: Vec<StepDiagnostics<T>>,
}

impl<T: Scalar> Trajectory<T> {
    /// Wraps hand-built coefficients, e.g. for testing the certificates.
    pub fn from_parts(
        time: TimeGrid<T>,
        xi: Vec<DVector<T>>,
        eta: Vec<DVector<T>>,
        lambdas: Vec<T>,
    ) -> Result<Self> {
        let len = time.len();
        let m = lambdas.len();
        if xi.len() != len || eta.len() != len {
            return input(format!(
                "need {len} coefficient and forcing vectors, got {} and {}",
                xi.len(),
                eta.len()
            ));
        }
        if xi.iter().chain(&eta).any(|v| v.len() != m) {
            return input(format!("every vector must have {m} entries"));
        }
        let diagnostics = xi
            .iter()
            .map(|x| StepDiagnostics {
                picard_iters: 0,
                residual: T::zero(),
                energy: x.norm_squared(),
                enstrophy: v_norm_sq(&lambdas, x),
            })
            .collect();
        Ok(Self {
            time,
            xi,
            eta,
            lambdas,
            diagnostics,
        })
    }

    pub fn time(&self) -> TimeGrid<T> {
        self.time
    }

    pub fn m(&self) -> usize {
        self.lambdas.len()
    }

    /// `ξ⁰ … ξᴺ`.
    pub fn xi(&self) -> &[DVector<T>] {
        &self.xi
    }

    pub fn eta(&self) -> &[DVector<T>] {
        &self.eta
    }

    pub fn lambdas(&self) -> &[T] {
        &self.lambdas
    }

    /// One entry per time node; node 0 records the initial state.
    pub fn diagnostics(&self) -> &[StepDiagnostics<T>] {
        &self.diagnostics
    }

    pub fn last(&self) -> &DVector<T> {
        self.xi.last().expect("trajectory holds at least xi^0")
    }

    /// Largest equation residual over all steps.
    pub fn max_residual(&self) -> T {
        self.diagnostics
            .iter()
            .fold(T::zero(), |a, d| a.max(d.residual))
    }

    /// `trajectory.csv`: `t,k,xi` with 1-based `k`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = self.xi.iter().enumerate().flat_map(|(j, x)| {
            let t = fmt_full(self.time.t(j));
            x.iter()
                .enumerate()
                .map(move |(k, &v)| format!("{t},{},{}", k + 1, fmt_full(v)))
                .collect::<Vec<_>>()
        });
        write_csv(path, "t,k,xi", rows)
    }

    /// `diagnostics.csv`: `t,picard_iters,residual,energy,enstrophy`.
    pub fn write_diagnostics_csv(&self, path: &Path) -> Result<()> {
        let rows = self.diagnostics.iter().enumerate().map(|(j, d)| {
            format!(
                "{},{},{},{},{}",
                fmt_full(self.time.t(j)),
                d.picard_iters,
                fmt_full(d.residual),
                fmt_full(d.energy),
                fmt_full(d.enstrophy)
            )
        });
        write_csv(path, "t,picard_iters,residual,energy,enstrophy", rows)
    }

    fn hash_into(&self, h: &mut DefaultHasher) {
        for v in self.xi.iter().chain(&self.eta) {
            for x in v.iter() {
                x.to_f64_lossy().to_bits().hash(h);
            }
        }
        for l in &self.lambdas {
            l.to_f64_lossy().to_bits().hash(h);
        }
    }
}

fn v_norm_sq<T: Scalar>(lambdas: &[T], xi: &DVector<T>) -> T {
    xi.iter()
        .zip(lambdas)
        .fold(T::zero(), |acc, (&x, &l)| acc + l * x * x)
}

/// `ξ⁰_k = (u₀, φ_k)_g`.
pub fn project_initial<T: Scalar>(
    u0: &VelocityField<T>,
    basis: &GStokesBasis<T>,
) -> Result<DVector<T>> {
    let coeffs = basis
        .modes()
        .iter()
        .map(|phi| weighted_inner(u0, phi, basis.grid()))
        .collect::<Result<Vec<T>>>()?;
    Ok(DVector::from_vec(coeffs))
}

/// `η_k(t_j) = (f(t_j), φ_k)_g` for every node. `f` receives the node index
/// and time.
pub fn forcing_coeffs<T: Scalar>(
    f: impl Fn(usize, T) -> Result<VelocityField<T>>,
    basis: &GStokesBasis<T>,
    time: &TimeGrid<T>,
) -> Result<Vec<DVector<T>>> {
    (0..time.len())
        .map(|j| {
            let wrap = |e: Error| Error::Step {
                step: j,
                source: Box::new(e),
            };
            let field = f(j, time.t(j)).map_err(wrap)?;
            project_initial(&field, basis).map_err(wrap)
        })
        .collect()
}

/// `u^{(m)}(t_n) = Σ ξⁿ_k φ_k`.
pub fn reconstruct<T: Scalar>(
    traj: &Trajectory<T>,
    basis: &GStokesBasis<T>,
    n: usize,
) -> Result<VelocityField<T>> {
    if n >= traj.xi.len() {
        return input(format!("step {n} outside 0..={}", traj.xi.len() - 1));
    }
    combine(&traj.xi[n], basis)
}

/// `Σ c_k φ_k`.
pub fn combine<T: Scalar>(coeffs: &DVector<T>, basis: &GStokesBasis<T>) -> Result<VelocityField<T>> {
    if coeffs.len() != basis.m() {
        return input(format!(
            "{} coefficients for a basis of {} modes",
            coeffs.len(),
            basis.m()
        ));
    }
    let mut u = VelocityField::zeros(basis.grid().n());
    for (c, phi) in coeffs.iter().zip(basis.modes()) {
        u.axpy(*c, phi);
    }
    Ok(u)
}

/// A factorised step operator, reusable across all steps of a run.
#[derive(Debug, Clone)]
pub struct Stepper<'a, T: Scalar> {
    system: &'a GalerkinSystem<T>,
    cfg: SolverConfig<T>,
    stencil: L1Stencil<T>,
    linear: DMatrix<T>,
    lu: LU<T, nalgebra::Dyn, nalgebra::Dyn>,
    /// Factorisation for step 1 when the starting correction changes the
    /// leading coefficient there.
    lu_first: Option<LU<T, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl<'a, T: Scalar> Stepper<'a, T> {
    pub fn new(system: &'a GalerkinSystem<T>, cfg: &SolverConfig<T>) -> Result<Self> {
        let time = cfg.time();
        let stencil = L1Stencil::corrected(cfg.alpha(), time.dt(), time.n_steps())?;
        Self::with_stencil(system, cfg, stencil)
    }

    /// Uses caller-supplied L1 weights (see [`L1Stencil::with_weights`]).
    pub fn with_stencil(
        system: &'a GalerkinSystem<T>,
        cfg: &SolverConfig<T>,
        stencil: L1Stencil<T>,
    ) -> Result<Self> {
        let m = system.m();
        let linear = system.linear_operator() * cfg.nu();
        let factor = |lead: T| {
            let lu = (DMatrix::identity(m, m) * (stencil.scale() * lead) + &linear).lu();
            if lu.is_invertible() {
                Ok(lu)
            } else {
                Err(Error::Numerical("step matrix is singular".into()))
            }
        };
        let lu = factor(stencil.weights()[0])?;
        let lu_first = if stencil.lead_weight(1) != stencil.weights()[0] {
            Some(factor(stencil.lead_weight(1))?)
        } else {
            None
        };
        Ok(Self {
            system,
            cfg: *cfg,
            stencil,
            linear,
            lu,
            lu_first,
        })
    }

    /// Solves for `ξⁿ` given `history = ξ⁰..ξ^{n-1}`.
    pub fn step(
        &self,
        history: &[DVector<T>],
        eta_n: &DVector<T>,
    ) -> Result<(DVector<T>, StepDiagnostics<T>)> {
        let n = history.len();
        let m = self.system.m();
        if n == 0 {
            return input("step needs at least the initial state");
        }
        if eta_n.len() != m || history.iter().any(|x| x.len() != m) {
            return input(format!("state and forcing vectors must have {m} entries"));
        }
        let wrap = |e: Error| Error::Step {
            step: n,
            source: Box::new(e),
        };
        let scale = self.stencil.scale();
        let memory = self.stencil.memory_vec(history, n).map_err(wrap)?;
        let known = eta_n + &memory * scale;
        let lu = match (&self.lu_first, n) {
            (Some(first), 1) => first,
            _ => &self.lu,
        };
        let mut xi = history[n - 1].clone();
        let tol = self.cfg.picard_tol();
        let mut iters = 0;
        loop {
            let rhs = &known - self.system.nonlinear(&xi);
            let next = lu.solve(&rhs).ok_or_else(|| {
                wrap(Error::Numerical("step matrix solve failed".into()))
            })?;
            let change = (&next - &xi).norm();
            iters += 1;
            xi = next;
            if !change.is_finite() || xi.iter().any(|x| !x.is_finite()) {
                return Err(wrap(Error::Numerical("Picard iterate is not finite".into())));
            }
            if change < tol * xi.norm().max(T::one()) {
                break;
            }
            if iters >= self.cfg.picard_max() {
                return Err(wrap(Error::NoConvergence {
                    what: "Picard iteration".into(),
                    iterations: iters,
                    residual: change.to_f64_lossy(),
                }));
            }
        }
        let b0 = self.stencil.lead_weight(n);
        let res = (&xi * b0 - &memory) * scale + &self.linear * &xi + self.system.nonlinear(&xi)
            - eta_n;
        let diag = StepDiagnostics {
            picard_iters: iters,
            residual: res.norm(),
            energy: xi.norm_squared(),
            enstrophy: self.system.v_norm_sq(&xi),
        };
        Ok((xi, diag))
    }

    /// Runs every step of the configured time grid.
    pub fn run(&self, xi0: &DVector<T>, eta: &[DVector<T>]) -> Result<Trajectory<T>> {
        let time = self.cfg.time();
        let m = self.system.m();
        if xi0.len() != m {
            return input(format!("initial state has {} entries, system has {m}", xi0.len()));
        }
        if eta.len() != time.len() {
            return input(format!(
                "forcing has {} samples, time grid has {}",
                eta.len(),
                time.len()
            ));
        }
        let mut xi = Vec::with_capacity(time.len());
        let mut diagnostics = Vec::with_capacity(time.len());
        xi.push(xi0.clone());
        diagnostics.push(StepDiagnostics {
            picard_iters: 0,
            residual: T::zero(),
            energy: xi0.norm_squared(),
            enstrophy: self.system.v_norm_sq(xi0),
        });
        for e in &eta[1..] {
            let (next, d) = self.step(&xi, e)?;
            xi.push(next);
            diagnostics.push(d);
        }
        Ok(Trajectory {
            time,
            xi,
            eta: eta.to_vec(),
            lambdas: self.system.lambdas().iter().copied().collect(),
            diagnostics,
        })
    }
}

/// One L1/Picard step; `history = ξ⁰..ξ^{n-1}`.
pub fn step<T: Scalar>(
    system: &GalerkinSystem<T>,
    cfg: &SolverConfig<T>,
    history: &[DVector<T>],
    eta_n: &DVector<T>,
) -> Result<(DVector<T>, StepDiagnostics<T>)> {
    Stepper::new(system, cfg)?.step(history, eta_n)
}

/// Integrates from `xi0` over the configured grid; `eta` holds the forcing
/// coefficients at every node.
pub fn solve_ivp<T: Scalar>(
    system: &GalerkinSystem<T>,
    cfg: &SolverConfig<T>,
    xi0: &DVector<T>,
    eta: &[DVector<T>],
) -> Result<Trajectory<T>> {
    Stepper::new(system, cfg)?.run(xi0, eta)
}

/// One row of a certificate table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRow<T> {
    pub t: T,
    pub lhs: T,
    pub rhs: T,
    /// `rhs - lhs`.
    pub margin: T,
    pub pass: bool,
}

fn write_rows<T: Scalar>(path: &Path, rows: &[BoundRow<T>]) -> Result<()> {
    write_csv(
        path,
        "t,bound_lhs,bound_rhs,margin,pass",
        rows.iter().map(|r| {
            format!(
                "{},{},{},{},{}",
                fmt_full(r.t),
                fmt_full(r.lhs),
                fmt_full(r.rhs),
                fmt_full(r.margin),
                r.pass
            )
        }),
    )
}

/// Step-by-step check of the sup-energy bound and the kernel-weighted
/// dissipation bound.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyCertificate<T> {
    /// `|ξⁿ|² ≤ slack·[|ξ⁰|² + Q/ν' + T^{1+b}/((1+b)ν')]`.
    pub sup_rows: Vec<BoundRow<T>>,
    /// `∫₀^{tₙ}(tₙ-s)^{α-1}‖ξ‖²_V ds ≤ slack·[|ξ⁰|²/ν' + Q/ν'² + T^{1+b}/((1+b)ν'²)]`.
    pub weighted_rows: Vec<BoundRow<T>>,
    /// `Q = ∫₀ᵀ ‖η‖_*^{2/α₁}` with `‖η‖_* = (Σ η_k²/λ_k)^{1/2}`.
    pub source_integral: T,
    pub nu_prime: T,
    pub lambda1: T,
    pub slack: T,
    pub alpha1: T,
    pub b: T,
    pub hg: HgCheck<T>,
    /// Hash of the trajectory and configuration the certificate was made from.
    pub input_hash: u64,
}

impl<T: Scalar> EnergyCertificate<T> {
    pub fn passes(&self) -> bool {
        self.sup_rows.iter().chain(&self.weighted_rows).all(|r| r.pass)
    }

    /// Index of the first time node where either bound fails.
    pub fn first_failure(&self) -> Option<usize> {
        self.sup_rows
            .iter()
            .zip(&self.weighted_rows)
            .position(|(a, b)| !(a.pass && b.pass))
    }

    /// `certificate.csv` carries the sup bound with `pass` true only when
    /// both bounds hold at that node; `certificate_weighted.csv` carries the
    /// weighted bound.
    pub fn write_csvs(&self, dir: &Path) -> Result<()> {
        let combined: Vec<BoundRow<T>> = self
            .sup_rows
            .iter()
            .zip(&self.weighted_rows)
            .map(|(a, b)| BoundRow {
                pass: a.pass && b.pass,
                ..*a
            })
            .collect();
        write_rows(&dir.join("certificate.csv"), &combined)?;
        write_rows(&dir.join("certificate_weighted.csv"), &self.weighted_rows)
    }
}

fn input_hash<T: Scalar>(traj: &Trajectory<T>, cfg: &SolverConfig<T>, extra: &[T]) -> u64 {
    let mut h = DefaultHasher::new();
    traj.hash_into(&mut h);
    cfg.hash_into(&mut h);
    for x in extra {
        x.to_f64_lossy().to_bits().hash(&mut h);
    }
    h.finish()
}

fn check_hg_for<T: Scalar>(grid: &WeightedGrid<T>, lambda1: T) -> Result<HgCheck<T>> {
    let hg = check_hg(grid, lambda1)?;
    if !hg.holds || !(hg.nu_prime_factor > T::zero()) {
        return Err(Error::Domain(format!(
            "hypothesis on the weight fails: |grad g| = {} not below {} (lambda1 = {lambda1})",
            hg.grad_g_sup,
            hg.m0 * lambda1.sqrt() / lit(2.0)
        )));
    }
    Ok(hg)
}

/// Evaluates both a-priori bounds at every node of `traj`. Refused with a
/// domain error when the smallness hypothesis on `g` fails.
pub fn energy_certificate<T: Scalar>(
    traj: &Trajectory<T>,
    grid: &WeightedGrid<T>,
    lambda1: T,
    cfg: &SolverConfig<T>,
) -> Result<EnergyCertificate<T>> {
    if traj.time != cfg.time() {
        return input("trajectory and configuration use different time grids");
    }
    let hg = check_hg_for(grid, lambda1)?;
    let nu_p = cfg.nu() * hg.nu_prime_factor;
    let time = cfg.time();
    let dt = time.dt();
    let horizon = time.horizon();
    let b = cfg.b();
    let slack = cfg.slack();
    let p = lit::<T>(2.0) / cfg.alpha1();

    let source: Vec<T> = traj
        .eta
        .iter()
        .map(|e| {
            let dual = e
                .iter()
                .zip(&traj.lambdas)
                .fold(T::zero(), |acc, (&x, &l)| acc + x * x / l)
                .sqrt();
            dual.powf(p)
        })
        .collect();
    let q = integrate_samples(&source, dt);
    let tail = horizon.powf(T::one() + b) / (T::one() + b);
    let e0 = traj.xi[0].norm_squared();

    let sup_rhs = slack * (e0 + q / nu_p + tail / nu_p);
    let weighted_rhs = slack * (e0 / nu_p + q / (nu_p * nu_p) + tail / (nu_p * nu_p));

    let vnorm: Vec<T> = traj.xi.iter().map(|x| v_norm_sq(&traj.lambdas, x)).collect();
    let vnorm = SampledFunction::new(time, vnorm)?;
    let ga = gamma(cfg.alpha().alpha());
    let mut sup_rows = Vec::with_capacity(time.len());
    let mut weighted_rows = Vec::with_capacity(time.len());
    for (n, x) in traj.xi.iter().enumerate() {
        let t = time.t(n);
        let lhs = x.norm_squared();
        sup_rows.push(BoundRow {
            t,
            lhs,
            rhs: sup_rhs,
            margin: sup_rhs - lhs,
            pass: lhs <= sup_rhs,
        });
        let lhs = ga * rl_integral_left(cfg.alpha(), &vnorm, n)?;
        weighted_rows.push(BoundRow {
            t,
            lhs,
            rhs: weighted_rhs,
            margin: weighted_rhs - lhs,
            pass: lhs <= weighted_rhs,
        });
    }
    Ok(EnergyCertificate {
        sup_rows,
        weighted_rows,
        source_integral: q,
        nu_prime: nu_p,
        lambda1,
        slack,
        alpha1: cfg.alpha1(),
        b,
        hg,
        input_hash: input_hash(traj, cfg, &[lambda1]),
    })
}

/// Discrete uniqueness estimate for two runs of the same system.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport<T> {
    /// `|wⁿ|² ≤ slack·|w⁰|²·exp(c₂·I^α‖ξ₂‖²_V(tₙ))`.
    pub rows: Vec<BoundRow<T>>,
    /// The constant `c₂`; it is measured, not proven (see
    /// [`ladyzhenskaya_estimate`](crate::spectral::ladyzhenskaya_estimate)).
    pub c2: T,
    pub c2_is_empirical: bool,
    /// True when the two trajectories agree bit for bit.
    pub identical: bool,
}

impl<T: Scalar> StabilityReport<T> {
    pub fn passes(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn max_gap(&self) -> T {
        self.rows.iter().fold(T::zero(), |a, r| a.max(r.lhs))
    }
}

/// Gap `wⁿ = ξ₁ⁿ - ξ₂ⁿ` against the fractional Gronwall bound.
pub fn stability_gap<T: Scalar>(
    traj1: &Trajectory<T>,
    traj2: &Trajectory<T>,
    grid: &WeightedGrid<T>,
    lambda1: T,
    cfg: &SolverConfig<T>,
    c2: T,
) -> Result<StabilityReport<T>> {
    if traj1.time != traj2.time || traj1.lambdas != traj2.lambdas || traj1.eta != traj2.eta {
        return input("trajectories come from different systems or forcings");
    }
    if traj1.time != cfg.time() {
        return input("trajectories and configuration use different time grids");
    }
    if !(c2 >= T::zero()) {
        return input(format!("c2 must be nonnegative, got {c2}"));
    }
    check_hg_for(grid, lambda1)?;
    let time = cfg.time();
    let v2: Vec<T> = traj2.xi.iter().map(|x| v_norm_sq(&traj2.lambdas, x)).collect();
    let v2 = SampledFunction::new(time, v2)?;
    let w0 = (&traj1.xi[0] - &traj2.xi[0]).norm_squared();
    let mut rows = Vec::with_capacity(time.len());
    for n in 0..time.len() {
        let lhs = (&traj1.xi[n] - &traj2.xi[n]).norm_squared();
        let rhs = cfg.slack() * w0 * (c2 * rl_integral_left(cfg.alpha(), &v2, n)?).exp();
        rows.push(BoundRow {
            t: time.t(n),
            lhs,
            rhs,
            margin: rhs - lhs,
            pass: lhs <= rhs,
        });
    }
    Ok(StabilityReport {
        rows,
        c2,
        c2_is_empirical: true,
        identical: traj1.xi == traj2.xi,
    })
}
