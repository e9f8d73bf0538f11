//! Weighted function spaces on the periodic unit square.
//!
//! Fields live on an `n × n` collocated grid with spacing `h = 1/n`; sample
//! `(i, j)` sits at `(i·h, j·h)` and is stored at `j·n + i` (row-major, `x`
//! fastest). Velocity fields store the two components separately.
//!
//! Discrete operators:
//! * `(u, v)_g = h² Σ g u·v`
//! * `((u, v))_g = Σ_links g_link (δu)(δv)` with forward differences on
//!   grid links and `g` averaged to link midpoints
//! * `div_g u = D₁(g u₁) + D₂(g u₂)` with centred differences `D_j`
//!
//! The centred gradient is minus the adjoint of the centred divergence, so
//! the weighted Leray projection built from them is an exact g-orthogonal
//! projection.

use std::path::Path;

use crate::csv::write_csv;
use crate::error::{input, Error, Result};
use crate::scalar::{dot, fmt_full, from_usize, lit, Scalar};

/// How to build the weight `g`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightRecipe<T> {
    /// `g ≡ c`.
    Constant(T),
    /// `g(x) = 1 + ε sin(2π x₁)`, `|ε| < 1`.
    Sine { epsilon: T },
    /// Row-major samples, `n²` values.
    Table(Vec<T>),
}

/// Periodic grid carrying the weight `g` and its derived bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGrid<T> {
    n: usize,
    h: T,
    g: Vec<T>,
    m0: T,
    big_m0: T,
    grad_g_sup: T,
    grad_g_over_g: VelocityField<T>,
    g_link_x: Vec<T>,
    g_link_y: Vec<T>,
}

#[inline]
fn east(n: usize, k: usize) -> usize {
    let (i, j) = (k % n, k / n);
    j * n + (i + 1) % n
}

#[inline]
fn west(n: usize, k: usize) -> usize {
    let (i, j) = (k % n, k / n);
    j * n + (i + n - 1) % n
}

#[inline]
fn north(n: usize, k: usize) -> usize {
    let (i, j) = (k % n, k / n);
    ((j + 1) % n) * n + i
}

#[inline]
fn south(n: usize, k: usize) -> usize {
    let (i, j) = (k % n, k / n);
    ((j + n - 1) % n) * n + i
}

/// Centred difference in `x₁`.
pub(crate) fn d1<T: Scalar>(n: usize, f: &[T]) -> Vec<T> {
    let inv = from_usize::<T>(n) / lit(2.0);
    (0..n * n).map(|k| (f[east(n, k)] - f[west(n, k)]) * inv).collect()
}

/// Centred difference in `x₂`.
pub(crate) fn d2<T: Scalar>(n: usize, f: &[T]) -> Vec<T> {
    let inv = from_usize::<T>(n) / lit(2.0);
    (0..n * n).map(|k| (f[north(n, k)] - f[south(n, k)]) * inv).collect()
}

impl<T: Scalar> WeightedGrid<T> {
    pub fn build(recipe: &WeightRecipe<T>, n: usize) -> Result<Self> {
        if n < 4 {
            return input(format!("grid needs at least 4 points per side, got {n}"));
        }
        let h = T::one() / from_usize(n);
        let two_pi = T::two_pi();
        let (g, analytic_grad) = match recipe {
            WeightRecipe::Constant(c) => (vec![*c; n * n], Some(T::zero())),
            WeightRecipe::Sine { epsilon } => {
                if !(epsilon.abs() < T::one()) {
                    return input(format!("sine weight needs |epsilon| < 1, got {epsilon}"));
                }
                let g = (0..n * n)
                    .map(|k| {
                        let x = from_usize::<T>(k % n) * h;
                        T::one() + *epsilon * (two_pi * x).sin()
                    })
                    .collect();
                (g, Some(two_pi * epsilon.abs()))
            }
            WeightRecipe::Table(v) => {
                if v.len() != n * n {
                    return input(format!("weight table has {} samples, need {}", v.len(), n * n));
                }
                (v.clone(), None)
            }
        };
        Self::from_samples(n, g, analytic_grad)
    }

    fn from_samples(n: usize, g: Vec<T>, analytic_grad: Option<T>) -> Result<Self> {
        if let Some((k, v)) = g
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > T::zero()))
        {
            return Err(Error::Input(format!(
                "weight must be positive and finite; sample ({}, {}) = {v}",
                k % n,
                k / n
            )));
        }
        let h = T::one() / from_usize(n);
        let m0 = g.iter().copied().fold(g[0], |a, b| a.min(b));
        let big_m0 = g.iter().copied().fold(g[0], |a, b| a.max(b));
        let gx = d1(n, &g);
        let gy = d2(n, &g);
        let mut sup = T::zero();
        for k in 0..n * n {
            sup = sup.max((gx[k] * gx[k] + gy[k] * gy[k]).sqrt());
        }
        if let Some(a) = analytic_grad {
            sup = sup.max(a);
        }
        let grad_g_over_g = VelocityField {
            n,
            u1: (0..n * n).map(|k| gx[k] / g[k]).collect(),
            u2: (0..n * n).map(|k| gy[k] / g[k]).collect(),
        };
        let half: T = lit(0.5);
        let g_link_x = (0..n * n).map(|k| half * (g[k] + g[east(n, k)])).collect();
        let g_link_y = (0..n * n).map(|k| half * (g[k] + g[north(n, k)])).collect();
        Ok(Self {
            n,
            h,
            g,
            m0,
            big_m0,
            grad_g_sup: sup,
            grad_g_over_g,
            g_link_x,
            g_link_y,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn h(&self) -> T {
        self.h
    }

    /// Number of grid points, `n²`.
    #[inline]
    pub fn points(&self) -> usize {
        self.n * self.n
    }

    pub fn g(&self) -> &[T] {
        &self.g
    }

    /// `min g`.
    pub fn m0(&self) -> T {
        self.m0
    }

    /// `max g`.
    pub fn big_m0(&self) -> T {
        self.big_m0
    }

    /// Sup-norm of `∇g`: the larger of the centred-difference value and the
    /// analytic value when the recipe provides one.
    pub fn grad_g_sup(&self) -> T {
        self.grad_g_sup
    }

    /// The drift field `∇g / g` (centred differences).
    pub fn grad_g_over_g(&self) -> &VelocityField<T> {
        &self.grad_g_over_g
    }

    /// Coordinates of sample `k`.
    pub fn coords(&self, k: usize) -> (T, T) {
        (
            from_usize::<T>(k % self.n) * self.h,
            from_usize::<T>(k / self.n) * self.h,
        )
    }

    fn check_field(&self, u: &VelocityField<T>) -> Result<()> {
        if u.n != self.n {
            return input(format!("field has n = {}, grid has n = {}", u.n, self.n));
        }
        Ok(())
    }
}

/// Two-component velocity samples on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField<T> {
    n: usize,
    u1: Vec<T>,
    u2: Vec<T>,
}

impl<T: Scalar> VelocityField<T> {
    pub fn new(n: usize, u1: Vec<T>, u2: Vec<T>) -> Result<Self> {
        if u1.len() != n * n || u2.len() != n * n {
            return input(format!(
                "velocity components have {} and {} samples, expected {}",
                u1.len(),
                u2.len(),
                n * n
            ));
        }
        if !(u1.iter().chain(&u2).all(|x| x.is_finite())) {
            return input("velocity field contains non-finite values");
        }
        Ok(Self { n, u1, u2 })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            u1: vec![T::zero(); n * n],
            u2: vec![T::zero(); n * n],
        }
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn from_fn(n: usize, f: impl Fn(T, T) -> (T, T)) -> Self {
        let h = T::one() / from_usize(n);
        let (u1, u2) = (0..n * n)
            .map(|k| f(from_usize::<T>(k % n) * h, from_usize::<T>(k / n) * h))
            .unzip();
        Self { n, u1, u2 }
    }

    /// Builds from the component-major flat layout `[u₁..., u₂...]`.
    pub fn from_flat(n: usize, flat: &[T]) -> Result<Self> {
        if flat.len() != 2 * n * n {
            return input(format!("flat field has {} entries, expected {}", flat.len(), 2 * n * n));
        }
        Self::new(n, flat[..n * n].to_vec(), flat[n * n..].to_vec())
    }

    pub fn to_flat(&self) -> Vec<T> {
        let mut v = self.u1.clone();
        v.extend_from_slice(&self.u2);
        v
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn u1(&self) -> &[T] {
        &self.u1
    }

    pub fn u2(&self) -> &[T] {
        &self.u2
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: T, other: &Self) {
        debug_assert_eq!(self.n, other.n);
        for (x, y) in self.u1.iter_mut().zip(&other.u1) {
            *x += a * *y;
        }
        for (x, y) in self.u2.iter_mut().zip(&other.u2) {
            *x += a * *y;
        }
    }

    pub fn scaled(&self, a: T) -> Self {
        Self {
            n: self.n,
            u1: self.u1.iter().map(|&x| a * x).collect(),
            u2: self.u2.iter().map(|&x| a * x).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-T::one(), other);
        out
    }

    pub fn max_abs(&self) -> T {
        self.u1
            .iter()
            .chain(&self.u2)
            .fold(T::zero(), |m, x| m.max(x.abs()))
    }

    /// Writes `x,y,u1,u2`, one row per grid point in storage order.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let n = self.n;
        let h = T::one() / from_usize(n);
        write_csv(
            path,
            "x,y,u1,u2",
            (0..n * n).map(|k| {
                format!(
                    "{},{},{},{}",
                    fmt_full(from_usize::<T>(k % n) * h),
                    fmt_full(from_usize::<T>(k / n) * h),
                    fmt_full(self.u1[k]),
                    fmt_full(self.u2[k])
                )
            }),
        )
    }
}

/// Scalar samples on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    n: usize,
    values: Vec<T>,
}

impl<T: Scalar> ScalarField<T> {
    pub fn new(n: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != n * n {
            return input(format!("scalar field has {} samples, expected {}", values.len(), n * n));
        }
        if !values.iter().all(|x| x.is_finite()) {
            return input("scalar field contains non-finite values");
        }
        Ok(Self { n, values })
    }

    pub fn from_fn(n: usize, f: impl Fn(T, T) -> T) -> Self {
        let h = T::one() / from_usize(n);
        let values = (0..n * n)
            .map(|k| f(from_usize::<T>(k % n) * h, from_usize::<T>(k / n) * h))
            .collect();
        Self { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn mean(&self) -> T {
        self.values.iter().fold(T::zero(), |a, &b| a + b) / from_usize(self.values.len())
    }

    /// Writes `x,y,value`, one row per grid point in storage order.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let n = self.n;
        let h = T::one() / from_usize(n);
        write_csv(
            path,
            "x,y,value",
            (0..n * n).map(|k| {
                format!(
                    "{},{},{}",
                    fmt_full(from_usize::<T>(k % n) * h),
                    fmt_full(from_usize::<T>(k / n) * h),
                    fmt_full(self.values[k])
                )
            }),
        )
    }
}

/// Weighted `L²` inner product `h² Σ g (u·v)`.
pub fn weighted_inner<T: Scalar>(
    u: &VelocityField<T>,
    v: &VelocityField<T>,
    grid: &WeightedGrid<T>,
) -> Result<T> {
    grid.check_field(u)?;
    grid.check_field(v)?;
    Ok(weighted_inner_unchecked(u, v, grid))
}

pub(crate) fn weighted_inner_unchecked<T: Scalar>(
    u: &VelocityField<T>,
    v: &VelocityField<T>,
    grid: &WeightedGrid<T>,
) -> T {
    let mut acc = T::zero();
    for k in 0..grid.points() {
        acc += grid.g[k] * (u.u1[k] * v.u1[k] + u.u2[k] * v.u2[k]);
    }
    acc * grid.h * grid.h
}

/// Weighted Dirichlet form `Σ_links g_link (δu)·(δv)`.
pub fn weighted_h1_inner<T: Scalar>(
    u: &VelocityField<T>,
    v: &VelocityField<T>,
    grid: &WeightedGrid<T>,
) -> Result<T> {
    grid.check_field(u)?;
    grid.check_field(v)?;
    let n = grid.n;
    let mut acc = T::zero();
    for (uc, vc) in [(&u.u1, &v.u1), (&u.u2, &v.u2)] {
        for k in 0..n * n {
            let (e, no) = (east(n, k), north(n, k));
            acc += grid.g_link_x[k] * (uc[e] - uc[k]) * (vc[e] - vc[k]);
            acc += grid.g_link_y[k] * (uc[no] - uc[k]) * (vc[no] - vc[k]);
        }
    }
    Ok(acc)
}

/// Applies the weighted stiffness operator `K_g` to one component.
pub(crate) fn stiffness_component<T: Scalar>(grid: &WeightedGrid<T>, f: &[T], out: &mut [T]) {
    let n = grid.n;
    for k in 0..n * n {
        let (e, w, no, s) = (east(n, k), west(n, k), north(n, k), south(n, k));
        out[k] = grid.g_link_x[k] * (f[k] - f[e])
            + grid.g_link_x[w] * (f[k] - f[w])
            + grid.g_link_y[k] * (f[k] - f[no])
            + grid.g_link_y[s] * (f[k] - f[s]);
    }
}

/// Weighted divergence `∇·(g u)` with centred differences.
pub fn div_g<T: Scalar>(u: &VelocityField<T>, grid: &WeightedGrid<T>) -> Result<ScalarField<T>> {
    grid.check_field(u)?;
    Ok(div_g_unchecked(u, grid))
}

pub(crate) fn div_g_unchecked<T: Scalar>(u: &VelocityField<T>, grid: &WeightedGrid<T>) -> ScalarField<T> {
    let n = grid.n;
    let gu1: Vec<T> = (0..n * n).map(|k| grid.g[k] * u.u1[k]).collect();
    let gu2: Vec<T> = (0..n * n).map(|k| grid.g[k] * u.u2[k]).collect();
    let a = d1(n, &gu1);
    let b = d2(n, &gu2);
    ScalarField {
        n,
        values: a.iter().zip(&b).map(|(&x, &y)| x + y).collect(),
    }
}

/// Centred gradient of a scalar field.
pub fn grad<T: Scalar>(p: &ScalarField<T>) -> VelocityField<T> {
    VelocityField {
        n: p.n,
        u1: d1(p.n, &p.values),
        u2: d2(p.n, &p.values),
    }
}

/// Discrete curl of a stream function, `(-D₂ψ, D₁ψ)`.
pub fn curl<T: Scalar>(psi: &ScalarField<T>) -> VelocityField<T> {
    VelocityField {
        n: psi.n,
        u1: d2(psi.n, &psi.values).into_iter().map(|x| -x).collect(),
        u2: d1(psi.n, &psi.values),
    }
}

/// Conjugate-gradient settings for the weighted Poisson solve.
#[derive(Debug, Clone, Copy)]
pub struct ProjectionOptions {
    pub rel_tol: f64,
    pub max_iter: Option<usize>,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_iter: None,
        }
    }
}

/// Orthonormal basis of the kernel of the centred gradient: constants and,
/// for even `n`, the three checkerboard modes.
fn gradient_kernel<T: Scalar>(n: usize) -> Vec<Vec<T>> {
    let inv = T::one() / from_usize::<T>(n);
    let sign = |p: usize| if p.is_multiple_of(2) { inv } else { -inv };
    let mut out = vec![vec![inv; n * n]];
    if n.is_multiple_of(2) {
        out.push((0..n * n).map(|k| sign(k % n)).collect());
        out.push((0..n * n).map(|k| sign(k / n)).collect());
        out.push((0..n * n).map(|k| sign(k % n + k / n)).collect());
    }
    out
}

fn deflate<T: Scalar>(v: &mut [T], kernel: &[Vec<T>]) {
    for z in kernel {
        let c = dot(v, z);
        for (x, &y) in v.iter_mut().zip(z) {
            *x -= c * y;
        }
    }
}

/// `p ↦ -∇·(g ∇p)` with the centred stencils.
fn weighted_poisson_apply<T: Scalar>(grid: &WeightedGrid<T>, p: &[T]) -> Vec<T> {
    let n = grid.n;
    let px = d1(n, p);
    let py = d2(n, p);
    let gx: Vec<T> = (0..n * n).map(|k| grid.g[k] * px[k]).collect();
    let gy: Vec<T> = (0..n * n).map(|k| grid.g[k] * py[k]).collect();
    let a = d1(n, &gx);
    let b = d2(n, &gy);
    a.iter().zip(&b).map(|(&x, &y)| -(x + y)).collect()
}

/// Weighted Leray projection `u - ∇p` with `∇·(g∇p) = ∇·(g u)`.
pub fn leray_project_g<T: Scalar>(
    u: &VelocityField<T>,
    grid: &WeightedGrid<T>,
) -> Result<VelocityField<T>> {
    leray_project_g_with(u, grid, ProjectionOptions::default())
}

pub fn leray_project_g_with<T: Scalar>(
    u: &VelocityField<T>,
    grid: &WeightedGrid<T>,
    opts: ProjectionOptions,
) -> Result<VelocityField<T>> {
    grid.check_field(u)?;
    let n = grid.n;
    let kernel = gradient_kernel::<T>(n);
    let mut b: Vec<T> = div_g_unchecked(u, grid).values.into_iter().map(|x| -x).collect();
    deflate(&mut b, &kernel);
    let b_norm = dot(&b, &b).sqrt();
    // Cancellation floor: the divergence of a field is assembled from terms
    // of size |g u|/h, so residuals below that times ε are not meaningful.
    let scale = u.max_abs() * grid.big_m0 * from_usize::<T>(n * n);
    let floor = T::eps() * lit(16.0) * scale;
    let tol = (lit::<T>(opts.rel_tol) * b_norm).max(floor);
    if b_norm <= floor {
        return Ok(u.clone());
    }
    let max_iter = opts.max_iter.unwrap_or(4 * n * n + 100);
    let mut p = vec![T::zero(); n * n];
    let mut r = b;
    let mut d = r.clone();
    let mut rr = dot(&r, &r);
    let mut iters = 0;
    while rr.sqrt() > tol {
        if iters >= max_iter {
            return Err(Error::NoConvergence {
                what: "weighted Poisson CG".into(),
                iterations: iters,
                residual: (rr.sqrt() / b_norm).to_f64_lossy(),
            });
        }
        let ad = weighted_poisson_apply(grid, &d);
        let dad = dot(&d, &ad);
        if !(dad > T::zero()) {
            return Err(Error::Numerical("weighted Poisson operator lost definiteness".into()));
        }
        let step = rr / dad;
        for k in 0..n * n {
            p[k] += step * d[k];
            r[k] -= step * ad[k];
        }
        deflate(&mut r, &kernel);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for k in 0..n * n {
            d[k] = r[k] + beta * d[k];
        }
        rr = rr_new;
        iters += 1;
    }
    deflate(&mut p, &kernel);
    let gp = grad(&ScalarField { n, values: p });
    Ok(u.sub(&gp))
}

/// Outcome of the smallness test on `∇g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HgCheck<T> {
    pub holds: bool,
    /// `½ m₀ √λ₁ - |∇g|_∞`.
    pub margin: T,
    /// Smaller of the two viscosity reduction factors.
    pub nu_prime_factor: T,
    /// `1 - 2|∇g|_∞ / (m₀ √λ₁)`.
    pub nu_prime_factor_first: T,
    /// `1 - 2|∇g|²_∞ / (λ₁ m₀²)`.
    pub nu_prime_factor_second: T,
    pub lambda1: T,
    pub grad_g_sup: T,
    pub m0: T,
}

/// Checks `|∇g|_∞ < ½ m₀ λ₁^{1/2}` and the reduced-viscosity factors.
pub fn check_hg<T: Scalar>(grid: &WeightedGrid<T>, lambda1: T) -> Result<HgCheck<T>> {
    if !(lambda1 > T::zero()) {
        return input(format!("lambda1 must be positive, got {lambda1}"));
    }
    let root = lambda1.sqrt();
    let two: T = lit(2.0);
    let gs = grid.grad_g_sup;
    let m0 = grid.m0;
    let margin = m0 * root / two - gs;
    let first = T::one() - two * gs / (m0 * root);
    let second = T::one() - two * gs * gs / (lambda1 * m0 * m0);
    Ok(HgCheck {
        holds: gs < m0 * root / two,
        margin,
        nu_prime_factor: first.min(second),
        nu_prime_factor_first: first,
        nu_prime_factor_second: second,
        lambda1,
        grad_g_sup: gs,
        m0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn sine(n: usize, eps: f64) -> WeightedGrid<f64> {
        WeightedGrid::build(&WeightRecipe::Sine { epsilon: eps }, n).unwrap()
    }

    fn random_field(n: usize, rng: &mut ChaCha8Rng) -> VelocityField<f64> {
        VelocityField::new(
            n,
            (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn build_constant_and_sine() {
        let g = WeightedGrid::build(&WeightRecipe::Constant(1.0), 16).unwrap();
        assert_eq!((g.m0(), g.big_m0(), g.grad_g_sup()), (1.0, 1.0, 0.0));
        let g = sine(64, 0.1);
        assert!((g.m0() - 0.9).abs() < 1e-12);
        assert!((g.big_m0() - 1.1).abs() < 1e-12);
        assert!((g.grad_g_sup() - 0.2 * PI).abs() < 1e-12);
        // discrete centred value approaches the analytic one from below
        let fine = WeightedGrid::build(&WeightRecipe::Table(sine(256, 0.1).g().to_vec()), 256).unwrap();
        assert!((fine.grad_g_sup() - 0.2 * PI).abs() < 1e-3);
        assert!(WeightedGrid::build(&WeightRecipe::Constant(-1.0), 8).is_err());
        assert!(WeightedGrid::build(&WeightRecipe::Sine { epsilon: 1.0 }, 8).is_err());
        assert!(WeightedGrid::build(&WeightRecipe::Table(vec![1.0; 10]), 8).is_err());
    }

    #[test]
    fn inner_products() {
        let n = 16;
        let e1 = VelocityField::from_fn(n, |_: f64, _: f64| (1.0, 0.0));
        let g1 = WeightedGrid::build(&WeightRecipe::Constant(1.0), n).unwrap();
        let g2 = WeightedGrid::build(&WeightRecipe::Constant(2.0), n).unwrap();
        assert!((weighted_inner(&e1, &e1, &g1).unwrap() - 1.0).abs() < 1e-14);
        assert!((weighted_inner(&e1, &e1, &g2).unwrap() - 2.0).abs() < 1e-14);
        assert!(weighted_inner(&e1, &VelocityField::zeros(8), &g1).is_err());

        let grid = sine(n, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_field(n, &mut rng);
        let v = random_field(n, &mut rng);
        let sq = |f: &VelocityField<f64>| {
            VelocityField::new(
                n,
                f.u1().iter().zip(grid.g()).map(|(a, g)| a * g.sqrt()).collect(),
                f.u2().iter().zip(grid.g()).map(|(a, g)| a * g.sqrt()).collect(),
            )
            .unwrap()
        };
        let direct = weighted_inner(&u, &v, &grid).unwrap();
        let via_sqrt = weighted_inner(&sq(&u), &sq(&v), &g1).unwrap();
        assert!((direct - via_sqrt).abs() < 1e-12);
    }

    #[test]
    fn h1_inner() {
        let n = 32;
        let g1 = WeightedGrid::build(&WeightRecipe::Constant(1.0), n).unwrap();
        let c = VelocityField::from_fn(n, |_: f64, _: f64| (0.3, -2.0));
        assert_eq!(weighted_h1_inner(&c, &c, &g1).unwrap(), 0.0);
        let s = VelocityField::from_fn(n, |x: f64, _: f64| ((2.0 * PI * x).sin(), 0.0));
        let e = weighted_h1_inner(&s, &s, &g1).unwrap();
        let h = 1.0 / n as f64;
        assert!((e - 2.0 * PI * PI).abs() < 2.0 * PI * PI * 4.0 * PI * PI * h * h);
    }

    #[test]
    fn divergence_cases() {
        let n = 32;
        let g1 = WeightedGrid::build(&WeightRecipe::Constant(1.0), n).unwrap();
        let c = VelocityField::from_fn(n, |_: f64, _: f64| (1.0, 2.0));
        assert!(div_g(&c, &g1).unwrap().max_abs() < 1e-13);
        let psi = ScalarField::from_fn(n, |x: f64, y: f64| (2.0 * PI * x).sin() * (2.0 * PI * y).sin());
        let u = curl(&psi);
        assert!(div_g(&u, &g1).unwrap().max_abs() < 1e-12);

        let grid = sine(n, 0.1);
        let e1 = VelocityField::from_fn(n, |_: f64, _: f64| (1.0, 0.0));
        let d = div_g(&e1, &grid).unwrap();
        let h = 1.0 / n as f64;
        for k in 0..n * n {
            let (x, _) = grid.coords(k);
            let want = 0.2 * PI * (2.0 * PI * x).cos();
            assert!((d.values()[k] - want).abs() < 0.2 * PI * 4.0 * PI * PI * h * h);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r = random_field(n, &mut rng);
        assert!(div_g(&r, &grid).unwrap().mean().abs() < 1e-13);
    }

    #[test]
    fn projection_cases() {
        let n = 32;
        let grid = sine(n, 0.1);
        let g1 = WeightedGrid::build(&WeightRecipe::Constant(1.0), n).unwrap();

        // already divergence-free
        let psi = ScalarField::from_fn(n, |x: f64, y: f64| (2.0 * PI * x).cos() * (4.0 * PI * y).sin());
        let v = curl(&psi);
        let free = VelocityField::new(
            n,
            v.u1().iter().zip(grid.g()).map(|(a, g)| a / g).collect(),
            v.u2().iter().zip(grid.g()).map(|(a, g)| a / g).collect(),
        )
        .unwrap();
        let p = leray_project_g(&free, &grid).unwrap();
        assert!(p.sub(&free).max_abs() < 1e-10);

        // pure gradient
        let phi = ScalarField::from_fn(n, |x: f64, _: f64| (2.0 * PI * x).sin());
        let gphi = grad(&phi);
        assert!(leray_project_g(&gphi, &g1).unwrap().max_abs() < 1e-10);

        // random input: divergence-free, orthogonal, idempotent
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_field(n, &mut rng);
        let pu = leray_project_g(&u, &grid).unwrap();
        assert!(div_g(&pu, &grid).unwrap().max_abs() < 1e-10);
        let orth = weighted_inner(&pu, &u.sub(&pu), &grid).unwrap();
        assert!(orth.abs() < 1e-10);
        let ppu = leray_project_g(&pu, &grid).unwrap();
        assert!(ppu.sub(&pu).max_abs() < 1e-10);
    }

    #[test]
    fn hg_check_constant_weight() {
        let g1 = WeightedGrid::build(&WeightRecipe::Constant(1.0), 16).unwrap();
        let c = check_hg(&g1, 39.0).unwrap();
        assert!(c.holds);
        assert!((c.margin - 0.5 * 39f64.sqrt()).abs() < 1e-14);
        assert_eq!(c.nu_prime_factor, 1.0);
        assert!(check_hg(&g1, 0.0).is_err());
        let strong = sine(64, 0.45);
        assert!(!check_hg(&strong, 40.0).unwrap().holds);
    }

    #[test]
    fn csv_layout() {
        let dir = std::env::temp_dir().join(format!("gnse-wdomain-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let u = VelocityField::from_fn(4, |x: f64, y: f64| (x, y));
        let path = dir.join("u.csv");
        u.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y,u1,u2");
        assert_eq!(lines.len(), 17);
        assert!(lines[2].starts_with("2.5000000000000000e-1,0.0000000000000000e0,"));
        assert!(!text.contains('\r'));
        let s = ScalarField::from_fn(4, |x: f64, _: f64| x);
        s.write_csv(&dir.join("s.csv")).unwrap();
        let text = std::fs::read_to_string(dir.join("s.csv")).unwrap();
        assert!(text.starts_with("x,y,value\n"));
    }
}
