use std::f64::consts::PI;

use epsb::field::{AnalyticField, FieldClass, SpaceFn, SpaceTimeField, TimePoly};
use epsb::hydro::{solve, weak_residual, BoundarySpec, Grid, WeakRegime};
use epsb::variational::{j_functional, rate_form, rate_function, TiltBasis, PDE_MASS_TOL};
use epsb::{Profile, SpaceTimeProfile};
use proptest::prelude::*;

fn robin_path(amp: f64) -> (SpaceTimeField, SpaceTimeProfile) {
    let h = SpaceTimeField::from_analytic(
        AnalyticField::stationary(SpaceFn::Cosine { k: 1, amp }),
        FieldClass::Free,
        0.25,
        2,
        128,
    )
    .unwrap();
    let gamma = Profile::from_fn(128, |u| 0.5 + 0.2 * (PI * u).cos()).unwrap();
    let rho = solve(&gamma, &BoundarySpec::Robin { h: h.clone() }, &Grid::new(128, 0.25, 33)).unwrap();
    (h, rho)
}

#[test]
fn rate_grows_with_the_basis() {
    let (_, rho) = robin_path(0.4);
    let mut last = 0.0;
    for (kt, ku) in [(2, 2), (3, 4), (5, 8)] {
        let basis = TiltBasis::new(kt, ku, FieldClass::Free).unwrap();
        let v = rate_function(&rho, WeakRegime::Neumann, &basis, PDE_MASS_TOL).unwrap().value;
        assert!(v >= last - 1e-12, "({kt},{ku}): {v} < {last}");
        last = v;
    }
}

#[test]
fn zero_cost_and_weak_solutions_coincide() {
    let gamma = Profile::from_fn(128, |u| 0.5 + 0.2 * (PI * u).cos()).unwrap();
    let hydro = solve(&gamma, &BoundarySpec::Neumann, &Grid::new(128, 0.25, 33)).unwrap();
    let (_, tilted) = robin_path(0.4);
    let basis = TiltBasis::new(3, 6, FieldClass::Free).unwrap();
    let test = SpaceTimeField::from_analytic(
        AnalyticField::separable(TimePoly::linear(1.0, 1.0), SpaceFn::Cosine { k: 1, amp: 1.0 }),
        FieldClass::Free,
        0.25,
        33,
        128,
    )
    .unwrap();
    for (rho, weak) in [(&hydro, true), (&tilted, false)] {
        let rate = rate_function(rho, WeakRegime::Neumann, &basis, PDE_MASS_TOL).unwrap().value;
        let res = weak_residual(rho, &test, WeakRegime::Neumann, None, 0.25).unwrap().abs();
        assert_eq!(rate <= 1e-6, weak, "rate = {rate}");
        assert_eq!(res <= 1e-4, weak, "residual = {res}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn every_two_dimensional_slice_is_concave(i in 0usize..30, j in 0usize..30, amp in -0.6f64..0.6) {
        let (_, rho) = robin_path(amp);
        let basis = TiltBasis::new(3, 9, FieldClass::Free).unwrap();
        let form = rate_form(&rho, WeakRegime::Neumann, &basis).unwrap();
        let q = |a: usize, b: usize| form.q[(a, b)];
        // Hessian of the slice is -2 [[q_ii, q_ij], [q_ji, q_jj]].
        prop_assert!(q(i, i) >= -1e-14 && q(j, j) >= -1e-14);
        let sym = 0.5 * (q(i, j) + q(j, i));
        prop_assert!(q(i, i) * q(j, j) - sym * sym >= -1e-12 * (1.0 + q(i, i) * q(j, j)));
    }

    #[test]
    fn adding_a_constant_to_the_tilt_is_harmless(amp in -0.6f64..0.6, shift in -3.0f64..3.0) {
        let (h, rho) = robin_path(amp);
        let shifted = SpaceTimeField::from_analytic(
            AnalyticField::stationary(SpaceFn::Cosine { k: 1, amp }).plus(TimePoly::constant(1.0), SpaceFn::Constant { value: shift }),
            FieldClass::Free,
            0.25,
            2,
            128,
        )
        .unwrap();
        let a = j_functional(&rho, &h, WeakRegime::Neumann, PDE_MASS_TOL).unwrap();
        let b = j_functional(&rho, &shifted, WeakRegime::Neumann, PDE_MASS_TOL).unwrap();
        prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
    }
}
