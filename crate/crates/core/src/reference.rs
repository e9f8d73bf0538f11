//! Classical (`α = 1`) implicit-Euler integrator for the Galerkin system,
//! written independently of the L1/Picard solver and used as its oracle.
//!
//! Each step solves `(ξ - ξ_prev)/dt + ν(Λ + C)ξ + N(ξ) = η` by Newton's
//! method with the exact Jacobian of the quadratic term.

use nalgebra::{DMatrix, DVector};

use crate::error::{input, Error, Result};
use crate::scalar::Scalar;
use crate::spectral::GalerkinSystem;

fn residual<T: Scalar>(
    sys: &GalerkinSystem<T>,
    nu: T,
    dt: T,
    prev: &DVector<T>,
    eta: &DVector<T>,
    xi: &DVector<T>,
) -> DVector<T> {
    let m = sys.m();
    let t = sys.tensor();
    let mut r = DVector::zeros(m);
    for k in 0..m {
        let mut conv = T::zero();
        for l in 0..m {
            for lp in 0..m {
                conv += t.get(k, l, lp) * xi[l] * xi[lp];
            }
        }
        let mut lin = sys.lambdas()[k] * xi[k];
        for l in 0..m {
            lin += sys.cmat()[(k, l)] * xi[l];
        }
        r[k] = (xi[k] - prev[k]) / dt + nu * lin + conv - eta[k];
    }
    r
}

fn jacobian<T: Scalar>(sys: &GalerkinSystem<T>, nu: T, dt: T, xi: &DVector<T>) -> DMatrix<T> {
    let m = sys.m();
    let t = sys.tensor();
    DMatrix::from_fn(m, m, |k, j| {
        let mut d = nu * sys.cmat()[(k, j)];
        if k == j {
            d += T::one() / dt + nu * sys.lambdas()[k];
        }
        for l in 0..m {
            d += (t.get(k, j, l) + t.get(k, l, j)) * xi[l];
        }
        d
    })
}

/// Implicit-Euler trajectory `ξ⁰..ξᴺ` with step `dt`; `eta[n]` is the
/// forcing at step `n`.
pub fn implicit_euler<T: Scalar>(
    sys: &GalerkinSystem<T>,
    nu: T,
    dt: T,
    xi0: &DVector<T>,
    eta: &[DVector<T>],
    tol: T,
) -> Result<Vec<DVector<T>>> {
    let m = sys.m();
    if xi0.len() != m || eta.iter().any(|e| e.len() != m) {
        return input(format!("vectors must have {m} entries"));
    }
    let mut out = vec![xi0.clone()];
    for (n, e) in eta.iter().enumerate().skip(1) {
        let prev = out[n - 1].clone();
        let mut xi = prev.clone();
        let mut converged = false;
        for _ in 0..50 {
            let r = residual(sys, nu, dt, &prev, e, &xi);
            let delta = jacobian(sys, nu, dt, &xi)
                .lu()
                .solve(&r)
                .ok_or_else(|| Error::Numerical(format!("singular Newton matrix at step {n}")))?;
            xi -= &delta;
            if delta.norm() <= tol * xi.norm().max(T::one()) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Step {
                step: n,
                source: Box::new(Error::NoConvergence {
                    what: "Newton iteration".into(),
                    iterations: 50,
                    residual: residual(sys, nu, dt, &prev, e, &xi).norm().to_f64_lossy(),
                }),
            });
        }
        out.push(xi);
    }
    Ok(out)
}
