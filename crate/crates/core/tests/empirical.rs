use std::f64::consts::PI;

use epsb::empirical::{box_average, mollify, pairing, Kernel};
use epsb::{Configuration, Profile};
use proptest::prelude::*;

fn config() -> impl Strategy<Value = Configuration> {
    prop::collection::vec(0u8..=1, 2..200).prop_map(|v| Configuration::new(v).unwrap())
}

#[test]
fn mollify_preserves_mass_of_interior_profiles() {
    let eps = 0.1;
    let p = Profile::from_fn(1024, |u| {
        let s = (u - 0.5) / 0.3;
        if s.abs() < 1.0 { 0.5 * (PI * s / 2.0).cos().powi(2) } else { 0.0 }
    })
    .unwrap();
    for kind in [Kernel::Box, Kernel::Smooth] {
        let m = mollify(&p, eps, kind).unwrap();
        assert!((m.integral() - p.integral()).abs() < 1e-5, "{kind:?}");
    }
}

#[test]
fn double_mollification_error_scales_with_the_width_ratio() {
    let zeta = 0.1;
    let p = Profile::from_fn(4096, |u| 0.5 + 0.3 * (2.0 * PI * u).sin()).unwrap();
    let outer = mollify(&p, zeta, Kernel::Box).unwrap();
    let err = |tau: f64| {
        let twice = mollify(&mollify(&p, tau, Kernel::Smooth).unwrap(), zeta, Kernel::Box).unwrap();
        let f = |u: f64| (PI * u).sin();
        let g = |q: &Profile| (0..=q.intervals()).map(|i| q.values()[i] * f(q.node(i))).sum::<f64>() * q.du();
        (g(&twice) - g(&outer)).abs()
    };
    let (coarse, fine) = (err(0.1 * zeta), err(0.01 * zeta));
    assert!(coarse <= 0.1, "coarse = {coarse}");
    assert!(fine <= 0.2 * coarse + 1e-6, "coarse = {coarse}, fine = {fine}");
}

proptest! {
    #[test]
    fn pairing_is_linear_in_the_test_function(c in config(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let f = |u: f64| u * u;
        let g = |u: f64| (PI * u).cos();
        let lhs = pairing(&c, |u| a * f(u) + b * g(u));
        let rhs = a * pairing(&c, f) + b * pairing(&c, g);
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn adding_a_particle_never_lowers_a_positive_pairing(c in config(), pick in any::<prop::sample::Index>()) {
        let f = |u: f64| 1.0 + (3.0 * u).sin().abs();
        let x = 1 + pick.index(c.sites());
        let mut d = c.clone();
        if d.get(x) == 0 {
            d.flip(x);
        }
        prop_assert!(pairing(&d, f) >= pairing(&c, f));
    }

    #[test]
    fn box_averages_lie_in_the_unit_interval(c in config(), eps in 0.01f64..0.5, pick in any::<prop::sample::Index>()) {
        let x = 1 + pick.index(c.sites());
        if let Ok(v) = box_average(&c, x, eps) {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
