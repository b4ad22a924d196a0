use std::f64::consts::PI;

use epsb::field::{AnalyticField, FieldClass, SpaceFn, SpaceTimeField, TimePoly};
use epsb::hydro::{solve, BoundarySpec, Grid, Scheme};
use epsb::Profile;
use proptest::prelude::*;

fn robin_field(amp: f64, k: u32) -> SpaceTimeField {
    let f = AnalyticField::separable(TimePoly::linear(1.0, -1.0), SpaceFn::Cosine { k, amp });
    SpaceTimeField::from_analytic(f, FieldClass::Free, 0.1, 11, 64).unwrap()
}

#[test]
fn explicit_and_crank_nicolson_schemes_agree() {
    let gamma = Profile::from_fn(64, |u| 0.5 + 0.3 * (PI * u).cos()).unwrap();
    let bc = BoundarySpec::Robin { h: robin_field(0.5, 1) };
    let dt = 0.2 / (64.0 * 64.0);
    let cn = solve(&gamma, &bc, &Grid::new(64, 0.05, 6).with_dt(dt / 50.0)).unwrap();
    let ex = solve(&gamma, &bc, &Grid::new(64, 0.05, 6).with_dt(dt / 50.0).with_scheme(Scheme::Explicit)).unwrap();
    let diff = cn
        .rows()
        .zip(ex.rows())
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    assert!(diff <= 1e-6, "diff = {diff}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn neumann_and_robin_conserve_mass(c in 0.2f64..0.8, amp in -0.15f64..0.15, k in 1u32..4, h in -0.8f64..0.8, robin in any::<bool>()) {
        let gamma = Profile::from_fn(64, |u| c + amp * (k as f64 * PI * u).cos()).unwrap();
        let bc = if robin { BoundarySpec::Robin { h: robin_field(h, k) } } else { BoundarySpec::Neumann };
        let rho = solve(&gamma, &bc, &Grid::new(64, 0.1, 11)).unwrap();
        let m = rho.masses();
        for x in &m {
            prop_assert!((x - m[0]).abs() <= 1e-8);
        }
    }

    #[test]
    fn solutions_obey_the_maximum_principle(a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0, h in -1.0f64..1.0) {
        let gamma = Profile::constant(64, c).unwrap();
        let f = AnalyticField::stationary(SpaceFn::Sine { k: 1, amp: h });
        let hf = SpaceTimeField::from_analytic(f, FieldClass::DirichletZero, 0.1, 2, 64).unwrap();
        for bc in [
            BoundarySpec::Dirichlet { alpha: a, beta: b },
            BoundarySpec::PerturbedDirichlet { alpha: a, beta: b, h: hf.clone() },
        ] {
            let (lo, hi) = solve(&gamma, &bc, &Grid::new(64, 0.1, 6)).unwrap().min_max();
            prop_assert!(lo >= -1e-12 && hi <= 1.0 + 1e-12);
        }
    }
}
