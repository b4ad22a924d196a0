use crate::error::{Error, Result};
use crate::field::{SpaceTimeField, TimePoly};
use crate::lattice::Configuration;
use crate::params::ModelParams;

/// Tilt of the weakly asymmetric dynamics: a bulk field H and boundary
/// values G at the sites 1 and n-1.
///
/// Without explicit boundary functions, G is read from H at 1/n and (n-1)/n.
#[derive(Debug, Clone, PartialEq)]
pub struct Tilt {
    h: SpaceTimeField,
    boundary: Option<(TimePoly, TimePoly)>,
}

impl Tilt {
    /// G = H at the boundary sites.
    pub fn new(h: SpaceTimeField) -> Self {
        Tilt { h, boundary: None }
    }

    /// Independent boundary tilts G_t(1/n) = left(t), G_t((n-1)/n) = right(t).
    pub fn with_boundary(h: SpaceTimeField, left: TimePoly, right: TimePoly) -> Self {
        Tilt {
            h,
            boundary: Some((left, right)),
        }
    }

    pub fn h(&self) -> &SpaceTimeField {
        &self.h
    }

    /// Whether G is read from H.
    pub fn g_equals_h(&self) -> bool {
        self.boundary.is_none()
    }

    pub fn is_time_independent(&self) -> bool {
        self.h.is_time_independent()
            && self
                .boundary
                .as_ref()
                .is_none_or(|(l, r)| l.is_constant() && r.is_constant())
    }

    /// H_t((x+1)/n) - H_t(x/n).
    #[inline]
    pub fn bond_increment(&self, t: f64, x: usize, n: usize) -> f64 {
        let nf = n as f64;
        self.h.value(t, (x + 1) as f64 / nf) - self.h.value(t, x as f64 / nf)
    }

    /// G_t(site/n) at a boundary site.
    pub fn g(&self, t: f64, site: usize, n: usize) -> f64 {
        match &self.boundary {
            None => self.h.value(t, site as f64 / n as f64),
            Some((l, r)) => {
                if site == 1 {
                    l.value(t)
                } else {
                    r.value(t)
                }
            }
        }
    }

    /// ∂_t G_t(site/n).
    pub fn g_dt(&self, t: f64, site: usize, n: usize) -> f64 {
        match &self.boundary {
            None => self.h.dt(t, site as f64 / n as f64),
            Some((l, r)) => {
                if site == 1 {
                    l.deriv(t)
                } else {
                    r.deriv(t)
                }
            }
        }
    }

    /// Upper bound on sup |G_t(site/n)| for t in [t0, t1].
    pub fn g_bound(&self, site: usize, n: usize, t0: f64, t1: f64) -> f64 {
        match &self.boundary {
            None => self.h.value_bound_at(site as f64 / n as f64, t0, t1),
            Some((l, r)) => {
                if site == 1 {
                    l.sup_abs(t0, t1)
                } else {
                    r.sup_abs(t0, t1)
                }
            }
        }
    }

    pub fn slope_bound(&self, t0: f64, t1: f64) -> f64 {
        self.h.slope_bound(t0, t1)
    }
}

/// Jump rates of the accelerated generator, tilted or not.
#[derive(Debug, Clone, Copy)]
pub struct Rates<'a> {
    params: &'a ModelParams,
    tilt: Option<&'a Tilt>,
    bulk: f64,
    boundary: f64,
}

impl<'a> Rates<'a> {
    pub fn new(params: &'a ModelParams, tilt: Option<&'a Tilt>) -> Self {
        Rates {
            params,
            tilt,
            bulk: params.bulk_rate(),
            boundary: params.boundary_rate(),
        }
    }

    pub fn params(&self) -> &ModelParams {
        self.params
    }

    pub fn tilt(&self) -> Option<&'a Tilt> {
        self.tilt
    }

    pub fn is_time_independent(&self) -> bool {
        self.tilt.is_none_or(Tilt::is_time_independent)
    }

    /// Rate of the exchange across bond x when η(x) - η(x+1) = s ∈ {±1}.
    #[inline]
    pub fn bond(&self, t: f64, x: usize, s: f64) -> f64 {
        match self.tilt {
            None => self.bulk,
            Some(tl) => self.bulk * (s * tl.bond_increment(t, x, self.params.n())).exp(),
        }
    }

    /// Rate of flipping boundary site `site` whose occupation is `occ`.
    #[inline]
    pub fn flip(&self, t: f64, site: usize, occ: u8) -> f64 {
        let r = self.params.reservoir(site);
        let g = self.tilt.map_or(0.0, |tl| tl.g(t, site, self.params.n()));
        flip_rate(self.boundary, r, g, occ)
    }

    /// Total exit rate λ(η) at time t.
    pub fn total(&self, t: f64, config: &Configuration) -> f64 {
        let n = self.params.n();
        let mut sum = 0.0;
        for x in 1..=n - 2 {
            if config.discordant(x) {
                let s = config.get(x) as f64 - config.get(x + 1) as f64;
                sum += self.bond(t, x, s);
            }
        }
        sum + self.flip(t, 1, config.get(1)) + self.flip(t, n - 1, config.get(n - 1))
    }

    /// Rates with the tilt frozen at time t, for repeated evaluation.
    pub fn frozen(&self, t: f64) -> FrozenRates {
        let n = self.params.n();
        let delta = match self.tilt {
            None => vec![0.0; n - 1],
            Some(tl) => (0..n - 1)
                .map(|x| if x == 0 { 0.0 } else { tl.bond_increment(t, x, n) })
                .collect(),
        };
        let (gl, gr) = match self.tilt {
            None => (0.0, 0.0),
            Some(tl) => (tl.g(t, 1, n), tl.g(t, n - 1, n)),
        };
        FrozenRates {
            bulk: self.bulk,
            boundary: self.boundary,
            alpha: self.params.alpha(),
            beta: self.params.beta(),
            last: n - 1,
            delta,
            g: [gl, gr],
        }
    }
}

#[inline]
fn flip_rate(prefactor: f64, r: f64, g: f64, occ: u8) -> f64 {
    if occ == 0 {
        prefactor * g.exp() * r
    } else {
        prefactor * (-g).exp() * (1.0 - r)
    }
}

/// Rates with precomputed bond increments δ_x = H((x+1)/n) - H(x/n) and
/// boundary tilts; `delta[x]` for x in 1..=n-2.
#[derive(Debug, Clone)]
pub struct FrozenRates {
    bulk: f64,
    boundary: f64,
    alpha: f64,
    beta: f64,
    last: usize,
    delta: Vec<f64>,
    g: [f64; 2],
}

impl FrozenRates {
    #[inline]
    pub fn delta(&self, x: usize) -> f64 {
        self.delta[x]
    }

    #[inline]
    pub fn g(&self, site: usize) -> f64 {
        if site == 1 {
            self.g[0]
        } else {
            self.g[1]
        }
    }

    #[inline]
    pub fn bond(&self, x: usize, s: f64) -> f64 {
        self.bulk * (s * self.delta[x]).exp()
    }

    #[inline]
    pub fn flip(&self, site: usize, occ: u8) -> f64 {
        let r = if site == 1 { self.alpha } else { self.beta };
        debug_assert!(site == 1 || site == self.last);
        flip_rate(self.boundary, r, self.g(site), occ)
    }

    pub fn max_abs_delta(&self) -> f64 {
        self.delta.iter().fold(0.0, |m, d| m.max(d.abs()))
    }
}

/// Checks that a tilt's grids are usable on [0, T].
pub(crate) fn check_tilt(params: &ModelParams, tilt: Option<&Tilt>) -> Result<()> {
    if let Some(t) = tilt {
        if t.h().horizon() + 1e-12 < params.horizon() && t.h().n_times() > 1 {
            return Err(Error::Invalid(format!(
                "tilt field covers [0, {}] but the horizon is {}",
                t.h().horizon(),
                params.horizon()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{AnalyticField, FieldClass, SpaceFn};
    use crate::params::validate_params;

    #[test]
    fn untilted_rates() {
        let p = validate_params(10, 0.5, 0.3, 0.6, 1.0).unwrap();
        let r = Rates::new(&p, None);
        assert_eq!(r.bond(0.0, 3, 1.0), 100.0);
        let b = 10f64.powf(1.5);
        assert!((r.flip(0.0, 1, 0) - b * 0.3).abs() < 1e-12);
        assert!((r.flip(0.0, 9, 1) - b * 0.4).abs() < 1e-12);
    }

    #[test]
    fn tilted_rates_follow_the_field() {
        let p = validate_params(10, 2.0, 0.3, 0.6, 1.0).unwrap();
        let h = SpaceTimeField::from_analytic(
            AnalyticField::stationary(SpaceFn::Linear { intercept: 0.1, slope: 2.0 }),
            FieldClass::Free,
            1.0,
            2,
            16,
        )
        .unwrap();
        let tilt = Tilt::new(h);
        let r = Rates::new(&p, Some(&tilt));
        // δ = 2/10 on every bond.
        assert!((r.bond(0.0, 4, 1.0) - 100.0 * 0.2f64.exp()).abs() < 1e-10);
        assert!((r.bond(0.0, 4, -1.0) - 100.0 * (-0.2f64).exp()).abs() < 1e-10);
        let g1: f64 = 0.1 + 0.2;
        assert!((r.flip(0.0, 1, 0) - 0.3 * g1.exp()).abs() < 1e-12);
        let f = r.frozen(0.0);
        assert!((f.bond(4, 1.0) - r.bond(0.0, 4, 1.0)).abs() < 1e-10);
        assert!((f.flip(9, 1) - r.flip(0.0, 9, 1)).abs() < 1e-12);
    }
}
