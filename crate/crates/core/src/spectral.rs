//! Discrete g-Stokes operator, its eigenbasis, and the Galerkin matrices.
//!
//! A field `u` is g-divergence-free exactly when `g u` lies in the kernel of
//! the centred divergence. That kernel is spanned by centred curls of
//! Fourier stream functions plus, for even `n`, the checkerboard fields the
//! centred stencil cannot see, so the trial fields are `g⁻¹·curl ψ` and
//! `g⁻¹·χ e_i`. Constants are left out, which keeps `λ₁ > 0`.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::csv::write_csv;
use crate::error::{input, Error, Result};
use crate::scalar::{fmt_full, lit, Scalar};
use crate::wdomain::{
    curl, d1, d2, div_g_unchecked, stiffness_component, weighted_h1_inner, weighted_inner,
    weighted_inner_unchecked, ScalarField, VelocityField, WeightedGrid,
};

/// Largest mode count for which the convection tensor is assembled.
pub const MAX_TENSOR_MODES: usize = 64;

/// Largest grid for which the operators are materialised as dense matrices.
const MAX_DENSE_N: usize = 32;

/// The weighted mass, stiffness and divergence operators of a grid.
///
/// Vectors are flattened velocity fields, `[u₁; u₂]`.
#[derive(Debug, Clone, Copy)]
pub struct GStokesOperators<'a, T> {
    grid: &'a WeightedGrid<T>,
}

pub fn assemble_gstokes<T: Scalar>(grid: &WeightedGrid<T>) -> GStokesOperators<'_, T> {
    GStokesOperators { grid }
}

impl<T: Scalar> GStokesOperators<'_, T> {
    /// Diagonal of the mass matrix: `g h²` repeated for both components.
    pub fn mass_diagonal(&self) -> Vec<T> {
        let h2 = self.grid.h() * self.grid.h();
        let half: Vec<T> = self.grid.g().iter().map(|&g| g * h2).collect();
        [half.clone(), half].concat()
    }

    pub fn apply_mass(&self, u: &VelocityField<T>) -> Result<VelocityField<T>> {
        self.check(u)?;
        let d = self.mass_diagonal();
        let flat: Vec<T> = u.to_flat().iter().zip(&d).map(|(&x, &m)| x * m).collect();
        VelocityField::from_flat(self.grid.n(), &flat)
    }

    pub fn apply_stiffness(&self, u: &VelocityField<T>) -> Result<VelocityField<T>> {
        self.check(u)?;
        let np = self.grid.points();
        let mut a = vec![T::zero(); np];
        let mut b = vec![T::zero(); np];
        stiffness_component(self.grid, u.u1(), &mut a);
        stiffness_component(self.grid, u.u2(), &mut b);
        VelocityField::new(self.grid.n(), a, b)
    }

    pub fn apply_divergence(&self, u: &VelocityField<T>) -> Result<ScalarField<T>> {
        self.check(u)?;
        Ok(div_g_unchecked(u, self.grid))
    }

    pub fn mass_matrix(&self) -> Result<DMatrix<T>> {
        self.check_dense()?;
        Ok(DMatrix::from_diagonal(&DVector::from_vec(self.mass_diagonal())))
    }

    pub fn stiffness_matrix(&self) -> Result<DMatrix<T>> {
        self.check_dense()?;
        self.columns(2 * self.grid.points(), |u| Ok(self.apply_stiffness(u)?.to_flat()))
    }

    /// `n² × 2n²` matrix of `div_g`.
    pub fn divergence_matrix(&self) -> Result<DMatrix<T>> {
        self.check_dense()?;
        self.columns(self.grid.points(), |u| Ok(self.apply_divergence(u)?.values().to_vec()))
    }

    fn columns(
        &self,
        rows: usize,
        op: impl Fn(&VelocityField<T>) -> Result<Vec<T>>,
    ) -> Result<DMatrix<T>> {
        let dim = 2 * self.grid.points();
        let mut out = DMatrix::zeros(rows, dim);
        let mut e = vec![T::zero(); dim];
        for c in 0..dim {
            e[c] = T::one();
            let col = op(&VelocityField::from_flat(self.grid.n(), &e)?)?;
            out.set_column(c, &DVector::from_vec(col));
            e[c] = T::zero();
        }
        Ok(out)
    }

    fn check(&self, u: &VelocityField<T>) -> Result<()> {
        if u.n() != self.grid.n() {
            return input(format!("field has n = {}, grid has n = {}", u.n(), self.grid.n()));
        }
        Ok(())
    }

    fn check_dense(&self) -> Result<()> {
        if self.grid.n() > MAX_DENSE_N {
            return Err(Error::Resource(format!(
                "dense operators limited to n <= {MAX_DENSE_N}, got {}",
                self.grid.n()
            )));
        }
        Ok(())
    }
}

/// Settings for [`eigenbasis_with`].
#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// When the divergence-free space is larger than this, the eigenproblem
    /// is solved on the lowest complete Fourier shells holding at most this
    /// many trial fields (but at least `4m`).
    pub max_trial: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { max_trial: 512 }
    }
}

/// The first `m` eigenpairs of the discrete g-Stokes operator.
#[derive(Debug, Clone)]
pub struct GStokesBasis<T> {
    lambdas: Vec<T>,
    modes: Vec<VelocityField<T>>,
    grid: WeightedGrid<T>,
    trial_dim: usize,
    full_dim: usize,
}

impl<T: Scalar> GStokesBasis<T> {
    pub fn m(&self) -> usize {
        self.modes.len()
    }

    /// Eigenvalues in ascending order.
    pub fn lambdas(&self) -> &[T] {
        &self.lambdas
    }

    pub fn lambda1(&self) -> T {
        self.lambdas[0]
    }

    pub fn modes(&self) -> &[VelocityField<T>] {
        &self.modes
    }

    pub fn mode(&self, k: usize) -> &VelocityField<T> {
        &self.modes[k]
    }

    pub fn grid(&self) -> &WeightedGrid<T> {
        &self.grid
    }

    /// Number of trial fields the eigenproblem was solved on.
    pub fn trial_dim(&self) -> usize {
        self.trial_dim
    }

    /// Dimension of the discrete g-divergence-free, zero-mean space.
    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    /// Largest `|(φ_k, φ_l)_g - δ_kl|`.
    pub fn orthonormality_defect(&self) -> T {
        let mut worst = T::zero();
        for k in 0..self.m() {
            for l in 0..=k {
                let ip = weighted_inner_unchecked(&self.modes[k], &self.modes[l], &self.grid);
                let want = if k == l { T::one() } else { T::zero() };
                worst = worst.max((ip - want).abs());
            }
        }
        worst
    }

    /// Largest `‖div_g φ_k‖_∞`.
    pub fn divergence_defect(&self) -> T {
        self.modes
            .iter()
            .map(|u| div_g_unchecked(u, &self.grid).max_abs())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Largest `|((φ_k, φ_k))_g / λ_k - 1|`.
    pub fn rayleigh_defect(&self) -> Result<T> {
        let mut worst = T::zero();
        for (u, &lam) in self.modes.iter().zip(&self.lambdas) {
            let r = weighted_h1_inner(u, u, &self.grid)?;
            worst = worst.max((r / lam - T::one()).abs());
        }
        Ok(worst)
    }

    /// Writes `spectrum.csv` (`k,lambda`, 1-based) and `mode_<k>.csv` for
    /// every mode.
    pub fn write_csvs(&self, dir: &Path) -> Result<()> {
        write_csv(
            &dir.join("spectrum.csv"),
            "k,lambda",
            self.lambdas
                .iter()
                .enumerate()
                .map(|(k, &l)| format!("{},{}", k + 1, fmt_full(l))),
        )?;
        for (k, u) in self.modes.iter().enumerate() {
            u.write_csv(&dir.join(format!("mode_{}.csv", k + 1)))?;
        }
        Ok(())
    }
}

/// A trial stream function or checkerboard field, ordered by `|k|²`.
#[derive(Debug, Clone, Copy)]
enum Trial {
    /// `cos` (`sine = false`) or `sin` of `2π(k₁x + k₂y)`, fed through the
    /// centred curl.
    Wave { k1: i64, k2: i64, sine: bool },
    /// Sign pattern `(-1)^{p₁ i + p₂ j}` in velocity component `comp`.
    Checker { p1: usize, p2: usize, comp: usize },
}

impl Trial {
    fn shell(&self, n: usize) -> i64 {
        let half = (n / 2) as i64;
        match *self {
            Trial::Wave { k1, k2, .. } => k1 * k1 + k2 * k2,
            Trial::Checker { p1, p2, .. } => (p1 + p2) as i64 * half * half,
        }
    }
}

fn signed(a: usize, n: usize) -> i64 {
    if 2 * a > n {
        a as i64 - n as i64
    } else {
        a as i64
    }
}

fn trial_list(n: usize) -> Vec<Trial> {
    let mut out = Vec::new();
    let invisible = |a: usize| a == 0 || 2 * a == n;
    for b in 0..n {
        for a in 0..n {
            let (na, nb) = ((n - a) % n, (n - b) % n);
            // one representative per ±k pair; pairs the centred curl
            // annihilates are dropped
            if (b, a) >= (nb, na) || (invisible(a) && invisible(b)) {
                continue;
            }
            let (k1, k2) = (signed(a, n), signed(b, n));
            out.push(Trial::Wave { k1, k2, sine: false });
            out.push(Trial::Wave { k1, k2, sine: true });
        }
    }
    if n.is_multiple_of(2) {
        for (p1, p2) in [(1, 0), (0, 1), (1, 1)] {
            for comp in 0..2 {
                out.push(Trial::Checker { p1, p2, comp });
            }
        }
    }
    out.sort_by_key(|t| t.shell(n));
    out
}

/// The centred-divergence-free field `g·u` of a trial, before division by `g`.
fn trial_field<T: Scalar>(t: Trial, n: usize) -> VelocityField<T> {
    match t {
        Trial::Wave { k1, k2, sine } => {
            let psi: Vec<T> = (0..n * n)
                .map(|idx| {
                    let (i, j) = ((idx % n) as i64, (idx / n) as i64);
                    let phase = (k1 * i + k2 * j).rem_euclid(n as i64) as f64;
                    let arg = 2.0 * PI * phase / n as f64;
                    lit(if sine { arg.sin() } else { arg.cos() })
                })
                .collect();
            curl(&ScalarField::new(n, psi).expect("sized stream function"))
        }
        Trial::Checker { p1, p2, comp } => {
            let chi: Vec<T> = (0..n * n)
                .map(|idx| {
                    if (p1 * (idx % n) + p2 * (idx / n)).is_multiple_of(2) {
                        T::one()
                    } else {
                        -T::one()
                    }
                })
                .collect();
            let zero = vec![T::zero(); n * n];
            let (u1, u2) = if comp == 0 { (chi, zero) } else { (zero, chi) };
            VelocityField::new(n, u1, u2).expect("sized checkerboard")
        }
    }
}

/// Picks the trial fields: everything if it fits, else whole low shells.
fn select_trials(all: &[Trial], n: usize, m: usize, max_trial: usize) -> usize {
    let cap = max_trial.max(4 * m);
    if all.len() <= cap {
        return all.len();
    }
    let mut count = 0;
    while count < all.len() {
        let shell = all[count].shell(n);
        let end = count + all[count..].iter().take_while(|t| t.shell(n) == shell).count();
        if end > cap && count >= m {
            break;
        }
        count = end;
    }
    count
}

pub fn eigenbasis<T: Scalar>(grid: &WeightedGrid<T>, m: usize) -> Result<GStokesBasis<T>> {
    eigenbasis_with(grid, m, EigenOptions::default())
}

/// Smallest `m` eigenpairs of `ZᵀK_gZ y = λ ZᵀM_gZ y` over g-divergence-free,
/// zero-mean trial fields `Z`, mapped back to fields and g-orthonormalised.
pub fn eigenbasis_with<T: Scalar>(
    grid: &WeightedGrid<T>,
    m: usize,
    opts: EigenOptions,
) -> Result<GStokesBasis<T>> {
    let n = grid.n();
    let all = trial_list(n);
    if m == 0 || m > all.len() {
        return input(format!(
            "mode count {m} outside 1..={} (dimension of the divergence-free space)",
            all.len()
        ));
    }
    let p = select_trials(&all, n, m, opts.max_trial);
    let np = grid.points();
    let dim = 2 * np;
    let mass = assemble_gstokes(grid).mass_diagonal();

    let mut z = DMatrix::<T>::zeros(dim, p);
    for (c, &t) in all[..p].iter().enumerate() {
        let w = trial_field::<T>(t, n);
        let mut col: Vec<T> = w.u1().iter().chain(w.u2()).copied().collect();
        for (k, x) in col.iter_mut().enumerate() {
            *x /= grid.g()[k % np];
        }
        let norm = col
            .iter()
            .zip(&mass)
            .fold(T::zero(), |acc, (&x, &d)| acc + d * x * x)
            .sqrt();
        for (r, x) in col.into_iter().enumerate() {
            z[(r, c)] = x / norm;
        }
    }

    let mut kz = DMatrix::<T>::zeros(dim, p);
    let mut buf = vec![T::zero(); np];
    for c in 0..p {
        let col = z.column(c);
        for comp in 0..2 {
            let f: Vec<T> = col.rows(comp * np, np).iter().copied().collect();
            stiffness_component(grid, &f, &mut buf);
            kz.view_mut((comp * np, c), (np, 1)).copy_from_slice(&buf);
        }
    }
    let mz = DMatrix::from_fn(dim, p, |r, c| mass[r] * z[(r, c)]);
    let a = symmetrised(z.tr_mul(&kz));
    let b = symmetrised(z.tr_mul(&mz));

    let chol = b
        .cholesky()
        .ok_or_else(|| Error::Numerical("trial Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(&a)
        .ok_or_else(|| Error::Numerical("singular trial Gram factor".into()))?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::Numerical("singular trial Gram factor".into()))?;
    let eig = SymmetricEigen::try_new(symmetrised(c), T::default_epsilon(), 1000 * p)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let picked = DMatrix::from_fn(p, m, |r, c| eig.eigenvectors[(r, order[c])]);
    let y = l
        .tr_solve_lower_triangular(&picked)
        .ok_or_else(|| Error::Numerical("singular trial Gram factor".into()))?;
    let phi = &z * y;

    let mut modes: Vec<VelocityField<T>> = (0..m)
        .map(|c| VelocityField::from_flat(n, phi.column(c).as_slice()))
        .collect::<Result<_>>()?;
    // Ritz vectors are already M-orthonormal up to rounding; two passes of
    // Gram-Schmidt clean that up without mixing distinct eigenspaces.
    for _ in 0..2 {
        for k in 0..m {
            for l in 0..k {
                let c = weighted_inner_unchecked(&modes[k], &modes[l], grid);
                let prev = modes[l].clone();
                modes[k].axpy(-c, &prev);
            }
            let nrm = weighted_inner_unchecked(&modes[k], &modes[k], grid).sqrt();
            modes[k] = modes[k].scaled(T::one() / nrm);
        }
    }
    let lambdas: Vec<T> = order[..m].iter().map(|&i| eig.eigenvalues[i]).collect();
    if !(lambdas[0] > T::zero()) || lambdas.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numerical(format!(
            "eigenvalues not positive and finite (lambda_1 = {})",
            lambdas[0]
        )));
    }
    Ok(GStokesBasis {
        lambdas,
        modes,
        grid: grid.clone(),
        trial_dim: p,
        full_dim: all.len(),
    })
}

fn symmetrised<T: Scalar>(a: DMatrix<T>) -> DMatrix<T> {
    let half: T = lit(0.5);
    (&a + a.transpose()) * half
}

/// `(u·∇)v` with centred differences, per component.
fn advect<T: Scalar>(u: &VelocityField<T>, v: &VelocityField<T>) -> [Vec<T>; 2] {
    let n = u.n();
    let mut out = [Vec::new(), Vec::new()];
    for (c, vc) in [v.u1(), v.u2()].into_iter().enumerate() {
        let dx = d1(n, vc);
        let dy = d2(n, vc);
        out[c] = (0..n * n)
            .map(|k| u.u1()[k] * dx[k] + u.u2()[k] * dy[k])
            .collect();
    }
    out
}

/// `q(u, v, w) = h² Σ g w·(u·∇)v`.
fn convect_plain<T: Scalar>(
    u: &VelocityField<T>,
    v: &VelocityField<T>,
    w: &VelocityField<T>,
    grid: &WeightedGrid<T>,
) -> T {
    let [a1, a2] = advect(u, v);
    let mut acc = T::zero();
    for k in 0..grid.points() {
        acc += grid.g()[k] * (w.u1()[k] * a1[k] + w.u2()[k] * a2[k]);
    }
    acc * grid.h() * grid.h()
}

/// Skew-symmetrised convection form `½[q(u,v,w) - q(u,w,v)]`.
///
/// Antisymmetric in `v, w` for every `u`, so `b̃(u, v, v) = 0` exactly.
pub fn trilinear_bg<T: Scalar>(
    u: &VelocityField<T>,
    v: &VelocityField<T>,
    w: &VelocityField<T>,
    grid: &WeightedGrid<T>,
) -> Result<T> {
    for f in [u, v, w] {
        if f.n() != grid.n() {
            return input(format!("field has n = {}, grid has n = {}", f.n(), grid.n()));
        }
    }
    let half: T = lit(0.5);
    Ok(half * (convect_plain(u, v, w, grid) - convect_plain(u, w, v, grid)))
}

/// `g h²`-weighted modes as columns.
fn weighted_modes<T: Scalar>(basis: &GStokesBasis<T>) -> DMatrix<T> {
    let grid = &basis.grid;
    let np = grid.points();
    let h2 = grid.h() * grid.h();
    DMatrix::from_fn(2 * np, basis.m(), |r, c| {
        let u = &basis.modes[c];
        let x = if r < np { u.u1()[r] } else { u.u2()[r - np] };
        grid.g()[r % np] * h2 * x
    })
}

/// Columns `(a·∇)φ_j` for every mode `j`.
fn advected_modes<T: Scalar>(a: &VelocityField<T>, basis: &GStokesBasis<T>) -> DMatrix<T> {
    let np = basis.grid.points();
    let mut out = DMatrix::zeros(2 * np, basis.m());
    for (c, phi) in basis.modes.iter().enumerate() {
        let [x, y] = advect(a, phi);
        out.view_mut((0, c), (np, 1)).copy_from_slice(&x);
        out.view_mut((np, c), (np, 1)).copy_from_slice(&y);
    }
    out
}

/// `C[k, l] = b̃(∇g/g, φ_l, φ_k)`; antisymmetric, zero for constant `g`.
pub fn cg_matrix<T: Scalar>(basis: &GStokesBasis<T>) -> DMatrix<T> {
    let m = basis.m();
    let drift = basis.grid.grad_g_over_g();
    if drift.max_abs() == T::zero() {
        return DMatrix::zeros(m, m);
    }
    // q[a, b] = q(drift, φ_a, φ_b)
    let q = advected_modes(drift, basis).tr_mul(&weighted_modes(basis));
    let half: T = lit(0.5);
    DMatrix::from_fn(m, m, |k, l| half * (q[(l, k)] - q[(k, l)]))
}

/// Dense `m × m × m` array indexed `[k][l][l']`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3<T> {
    m: usize,
    data: Vec<T>,
}

impl<T: Scalar> Tensor3<T> {
    pub fn zeros(m: usize) -> Self {
        Self {
            m,
            data: vec![T::zero(); m * m * m],
        }
    }

    pub fn from_fn(m: usize, f: impl Fn(usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(m * m * m);
        for k in 0..m {
            for l in 0..m {
                for lp in 0..m {
                    data.push(f(k, l, lp));
                }
            }
        }
        Self { m, data }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize, lp: usize) -> T {
        self.data[(k * self.m + l) * self.m + lp]
    }

    /// The `m × m` slab for fixed `k`, row `l`, column `l'`.
    pub fn slab(&self, k: usize) -> &[T] {
        let s = self.m * self.m;
        &self.data[k * s..(k + 1) * s]
    }

    /// `N(ξ)_k = Σ_{l,l'} T[k,l,l'] ξ_l ξ_l'`.
    pub fn contract(&self, xi: &DVector<T>) -> DVector<T> {
        let m = self.m;
        DVector::from_fn(m, |k, _| {
            let slab = self.slab(k);
            let mut acc = T::zero();
            for l in 0..m {
                let mut row = T::zero();
                for lp in 0..m {
                    row += slab[l * m + lp] * xi[lp];
                }
                acc += row * xi[l];
            }
            acc
        })
    }

    /// `Σ_{k,l,l'} T[k,l,l'] ξ_l ξ_l' ξ_k`.
    pub fn cubic_form(&self, xi: &DVector<T>) -> T {
        self.contract(xi).dot(xi)
    }
}

/// `T[k, l, l'] = b̃(φ_l, φ_l', φ_k)`.
pub fn convection_tensor<T: Scalar>(basis: &GStokesBasis<T>) -> Result<Tensor3<T>> {
    let m = basis.m();
    if m > MAX_TENSOR_MODES {
        return Err(Error::Resource(format!(
            "convection tensor limited to m <= {MAX_TENSOR_MODES}, got {m}"
        )));
    }
    let wm = weighted_modes(basis);
    // q[l][a, b] = q(φ_l, φ_a, φ_b)
    let q: Vec<DMatrix<T>> = basis
        .modes
        .iter()
        .map(|phi| advected_modes(phi, basis).tr_mul(&wm))
        .collect();
    let half: T = lit(0.5);
    Ok(Tensor3::from_fn(m, |k, l, lp| half * (q[l][(lp, k)] - q[l][(k, lp)])))
}

/// Coefficients of the Galerkin system: eigenvalues, drift matrix and
/// convection tensor. The viscosity lives in the solver configuration.
#[derive(Debug, Clone)]
pub struct GalerkinSystem<T> {
    lambdas: DVector<T>,
    cmat: DMatrix<T>,
    tensor: Tensor3<T>,
}

impl<T: Scalar> GalerkinSystem<T> {
    pub fn new(lambdas: Vec<T>, cmat: DMatrix<T>, tensor: Tensor3<T>) -> Result<Self> {
        let m = lambdas.len();
        if m == 0 {
            return input("Galerkin system needs at least one mode");
        }
        if cmat.shape() != (m, m) || tensor.m() != m {
            return input(format!(
                "shape mismatch: {m} eigenvalues, C is {:?}, tensor is {}^3",
                cmat.shape(),
                tensor.m()
            ));
        }
        if lambdas.iter().any(|l| !(*l > T::zero() && l.is_finite())) {
            return input("eigenvalues must be positive and finite");
        }
        Ok(Self {
            lambdas: DVector::from_vec(lambdas),
            cmat,
            tensor,
        })
    }

    pub fn from_basis(basis: &GStokesBasis<T>) -> Result<Self> {
        let tensor = convection_tensor(basis)?;
        Self::new(basis.lambdas.clone(), cg_matrix(basis), tensor)
    }

    pub fn m(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &DVector<T> {
        &self.lambdas
    }

    pub fn lambda1(&self) -> T {
        self.lambdas[0]
    }

    pub fn cmat(&self) -> &DMatrix<T> {
        &self.cmat
    }

    pub fn tensor(&self) -> &Tensor3<T> {
        &self.tensor
    }

    /// `N(ξ)`.
    pub fn nonlinear(&self, xi: &DVector<T>) -> DVector<T> {
        self.tensor.contract(xi)
    }

    /// `Λ + C`.
    pub fn linear_operator(&self) -> DMatrix<T> {
        DMatrix::from_diagonal(&self.lambdas) + &self.cmat
    }

    /// `Σ λ_k ξ_k²`.
    pub fn v_norm_sq(&self, xi: &DVector<T>) -> T {
        xi.iter()
            .zip(self.lambdas.iter())
            .fold(T::zero(), |acc, (&x, &l)| acc + l * x * x)
    }
}

/// Largest observed ratios of `|b̃(u,v,w)|` to the two candidate bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadyzhenskayaEstimate<T> {
    /// Against `|u|^½‖u‖^½ ‖v‖ |w|^½‖w‖^½`.
    pub classical: T,
    /// Against `|u|^½‖u‖^½ |v|^½ |w|^½‖w‖^½`, the variant with only
    /// `|v|^½` on the middle argument.
    pub printed: T,
    pub samples: usize,
}

/// Random smooth zero-mean fields built from Fourier modes with
/// `|k₁|, |k₂| ≤ 3`; the coefficient stream depends only on `seed`, so the
/// same fields are sampled on every grid.
fn random_smooth_field<T: Scalar>(n: usize, rng: &mut ChaCha8Rng, table: &[(f64, f64)]) -> VelocityField<T> {
    const K: i64 = 3;
    let mut comps = [vec![0.0f64; n * n], vec![0.0f64; n * n]];
    for comp in comps.iter_mut() {
        for k2 in -K..=K {
            for k1 in -K..=K {
                if (k2, k1) <= (0, 0) {
                    continue;
                }
                let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                for j in 0..n as i64 {
                    for i in 0..n as i64 {
                        let ph = (k1 * i + k2 * j).rem_euclid(n as i64) as usize;
                        let (c, s) = table[ph];
                        comp[(j as usize) * n + i as usize] += a * c + b * s;
                    }
                }
            }
        }
    }
    let [u1, u2] = comps;
    VelocityField::new(n, u1.into_iter().map(lit).collect(), u2.into_iter().map(lit).collect())
        .expect("sized field")
}

/// Empirical constant in the 2D Ladyzhenskaya-type bound for `b̃` over
/// `samples` random triples.
pub fn ladyzhenskaya_estimate<T: Scalar>(
    grid: &WeightedGrid<T>,
    samples: usize,
    seed: u64,
) -> Result<LadyzhenskayaEstimate<T>> {
    let n = grid.n();
    let table: Vec<(f64, f64)> = (0..n)
        .map(|p| {
            let a = 2.0 * PI * p as f64 / n as f64;
            (a.cos(), a.sin())
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classical = T::zero();
    let mut printed = T::zero();
    let half: T = lit(0.5);
    for _ in 0..samples {
        let u = random_smooth_field::<T>(n, &mut rng, &table);
        let v = random_smooth_field::<T>(n, &mut rng, &table);
        let w = random_smooth_field::<T>(n, &mut rng, &table);
        let l2 = |f: &VelocityField<T>| weighted_inner(f, f, grid).map(|x| x.sqrt());
        let h1 = |f: &VelocityField<T>| weighted_h1_inner(f, f, grid).map(|x| x.sqrt());
        let b = trilinear_bg(&u, &v, &w, grid)?.abs();
        let uw = (l2(&u)? * h1(&u)? * l2(&w)? * h1(&w)?).powf(half);
        classical = classical.max(b / (uw * h1(&v)?));
        printed = printed.max(b / (uw * l2(&v)?.sqrt()));
    }
    Ok(LadyzhenskayaEstimate {
        classical,
        printed,
        samples,
    })
}
