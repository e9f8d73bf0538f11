use std::f64::consts::PI;

use gnse_core::recipes::taylor_green;
use gnse_core::solver::{combine, project_initial};
use gnse_core::spectral::{eigenbasis, ladyzhenskaya_estimate, GalerkinSystem};
use gnse_core::wdomain::{leray_project_g, weighted_inner, WeightRecipe, WeightedGrid};
use nalgebra::DVector;
use proptest::prelude::*;

fn sine(n: usize, epsilon: f64) -> WeightedGrid<f64> {
    WeightedGrid::build(&WeightRecipe::Sine { epsilon }, n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn basis_is_orthonormal_and_divergence_free(epsilon in -0.3f64..0.3) {
        let basis = eigenbasis(&sine(8, epsilon), 10).unwrap();
        prop_assert!(basis.orthonormality_defect() <= 1e-10);
        prop_assert!(basis.divergence_defect() <= 1e-10);
        prop_assert!(basis.rayleigh_defect().unwrap() <= 1e-8);
        prop_assert!(basis.lambdas().windows(2).all(|l| l[0] <= l[1]));
        prop_assert!(basis.lambda1() > 0.0);
    }

    #[test]
    fn drift_and_convection_carry_no_energy(
        epsilon in -0.3f64..0.3,
        xi in prop::collection::vec(-2.0f64..2.0, 6),
    ) {
        let basis = eigenbasis(&sine(8, epsilon), 6).unwrap();
        let sys = GalerkinSystem::from_basis(&basis).unwrap();
        let xi = DVector::from_vec(xi);
        let n = xi.norm();
        prop_assert!(xi.dot(&(sys.cmat() * &xi)).abs() <= 1e-12 * n * n * (1.0 + sys.cmat().norm()));
        prop_assert!(xi.dot(&sys.nonlinear(&xi)).abs() <= 1e-12 * n * n * n * (1.0 + sys.lambda1()));
    }
}

#[test]
fn full_basis_reconstructs_divergence_free_fields() {
    let grid = sine(8, 0.2);
    let basis = eigenbasis(&grid, 66).unwrap();
    assert_eq!(basis.m(), basis.full_dim());
    let u = leray_project_g(&taylor_green(8, 1.0), &grid).unwrap();
    let back = combine(&project_initial(&u, &basis).unwrap(), &basis).unwrap();
    let d = back.sub(&u);
    let err = weighted_inner(&d, &d, &grid).unwrap().sqrt();
    assert!(err <= 1e-10 * weighted_inner(&u, &u, &grid).unwrap().sqrt(), "{err:e}");
}

#[test]
fn first_eigenvalue_converges_at_second_order() {
    let exact = 4.0 * PI * PI;
    let errs: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&n| {
            let grid = WeightedGrid::build(&WeightRecipe::Constant(1.0), n).unwrap();
            (eigenbasis(&grid, 1).unwrap().lambda1() - exact).abs()
        })
        .collect();
    for e in errs.windows(2) {
        let rate = (e[0] / e[1]).log2();
        assert!((rate - 2.0).abs() <= 0.2, "rate {rate}");
    }
}

#[test]
fn ladyzhenskaya_constant_stays_bounded_under_refinement() {
    let c: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| ladyzhenskaya_estimate(&sine(n, 0.1), 60, 3).unwrap().classical)
        .collect();
    for p in c.windows(2) {
        assert!(p[1] <= 1.25 * p[0], "{c:?}");
    }
}

#[test]
fn oversized_requests_are_refused() {
    let grid = sine(8, 0.1);
    assert!(eigenbasis(&grid, 0).is_err());
    assert!(eigenbasis(&grid, 67).is_err());
}
