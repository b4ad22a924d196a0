//! Space-time fields H(t,u): tilts for the weakly asymmetric dynamics and
//! test functions for the weak formulations.
//!
//! A field is always sampled on a grid. It may additionally carry an
//! analytic description (a sum of polynomial-in-time × elementary-in-space
//! terms); when present, point evaluations and derivatives use it, and the
//! simulator's thinning envelopes are derived from certified bounds on it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::interp;

/// Boundary class of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldClass {
    /// H(t,0) = H(t,1) = 0 for all t.
    DirichletZero,
    /// No boundary constraint.
    Free,
}

/// Polynomial in time, `coeffs[k] · t^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimePoly {
    pub coeffs: Vec<f64>,
}

impl TimePoly {
    pub fn constant(c: f64) -> Self {
        TimePoly { coeffs: vec![c] }
    }

    pub fn linear(c0: f64, c1: f64) -> Self {
        TimePoly { coeffs: vec![c0, c1] }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn deriv(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * t + k as f64 * c)
    }

    /// Upper bound on |p(t)| over [t0, t1].
    pub fn sup_abs(&self, t0: f64, t1: f64) -> f64 {
        let r = t0.abs().max(t1.abs());
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c.abs() * r.powi(k as i32))
            .sum()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().skip(1).all(|&c| c == 0.0)
    }
}

/// Elementary spatial shapes on [0,1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceFn {
    Constant { value: f64 },
    /// intercept + slope · u
    Linear { intercept: f64, slope: f64 },
    /// amp · sin(kπu)
    Sine { k: u32, amp: f64 },
    /// amp · cos(kπu)
    Cosine { k: u32, amp: f64 },
    /// amp · exp(-1/(1-s²)), s = (u - center)/width, zero for |s| ≥ 1.
    Bump { center: f64, width: f64, amp: f64 },
    /// Σ coeffs[k] u^k
    Polynomial { coeffs: Vec<f64> },
}

fn bump_derivs(s: f64) -> (f64, f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let q = 1.0 - s * s;
    let b = (-1.0 / q).exp();
    let g1 = -2.0 * s / (q * q);
    let g2 = -(2.0 + 6.0 * s * s) / (q * q * q);
    (b, b * g1, b * (g1 * g1 + g2))
}

/// Sup of |b'(s)| for the unit bump, from a dense scan with 2% margin.
fn bump_slope_bound() -> f64 {
    static BOUND: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    *BOUND.get_or_init(|| {
        let m = 20_000;
        let max = (0..=m)
            .map(|i| bump_derivs(-1.0 + 2.0 * i as f64 / m as f64).1.abs())
            .fold(0.0, f64::max);
        1.02 * max
    })
}

impl SpaceFn {
    pub fn value(&self, u: f64) -> f64 {
        match self {
            SpaceFn::Constant { value } => *value,
            SpaceFn::Linear { intercept, slope } => intercept + slope * u,
            SpaceFn::Sine { k, amp } => amp * (*k as f64 * PI * u).sin(),
            SpaceFn::Cosine { k, amp } => amp * (*k as f64 * PI * u).cos(),
            SpaceFn::Bump { center, width, amp } => amp * bump_derivs((u - center) / width).0,
            SpaceFn::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |a, c| a * u + c),
        }
    }

    pub fn d1(&self, u: f64) -> f64 {
        match self {
            SpaceFn::Constant { .. } => 0.0,
            SpaceFn::Linear { slope, .. } => *slope,
            SpaceFn::Sine { k, amp } => {
                let w = *k as f64 * PI;
                amp * w * (w * u).cos()
            }
            SpaceFn::Cosine { k, amp } => {
                let w = *k as f64 * PI;
                -amp * w * (w * u).sin()
            }
            SpaceFn::Bump { center, width, amp } => amp * bump_derivs((u - center) / width).1 / width,
            SpaceFn::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |a, (k, c)| a * u + k as f64 * c),
        }
    }

    pub fn d2(&self, u: f64) -> f64 {
        match self {
            SpaceFn::Constant { .. } | SpaceFn::Linear { .. } => 0.0,
            SpaceFn::Sine { k, amp } => {
                let w = *k as f64 * PI;
                -amp * w * w * (w * u).sin()
            }
            SpaceFn::Cosine { k, amp } => {
                let w = *k as f64 * PI;
                -amp * w * w * (w * u).cos()
            }
            SpaceFn::Bump { center, width, amp } => {
                amp * bump_derivs((u - center) / width).2 / (width * width)
            }
            SpaceFn::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |a, (k, c)| a * u + (k * (k - 1)) as f64 * c),
        }
    }

    /// Upper bound on sup_{u∈[0,1]} |∂_u f|.
    pub fn slope_bound(&self) -> f64 {
        match self {
            SpaceFn::Constant { .. } => 0.0,
            SpaceFn::Linear { slope, .. } => slope.abs(),
            SpaceFn::Sine { k, amp } | SpaceFn::Cosine { k, amp } => amp.abs() * *k as f64 * PI,
            SpaceFn::Bump { width, amp, .. } => amp.abs() * bump_slope_bound() / width,
            SpaceFn::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c.abs())
                .sum(),
        }
    }

    fn validate(&self) -> Result<()> {
        if let SpaceFn::Bump { width, .. } = self {
            if !(*width > 0.0) {
                return Err(Error::Invalid("bump width must be positive".into()));
            }
        }
        Ok(())
    }
}

/// One separable term time(t) · space(u).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub time: TimePoly,
    pub space: SpaceFn,
}

/// H(t,u) = Σ_j time_j(t) · space_j(u).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct AnalyticField {
    pub terms: Vec<Term>,
}

impl AnalyticField {
    pub fn zero() -> Self {
        AnalyticField { terms: Vec::new() }
    }

    /// Time-constant field with a single spatial shape.
    pub fn stationary(space: SpaceFn) -> Self {
        AnalyticField {
            terms: vec![Term {
                time: TimePoly::constant(1.0),
                space,
            }],
        }
    }

    pub fn separable(time: TimePoly, space: SpaceFn) -> Self {
        AnalyticField {
            terms: vec![Term { time, space }],
        }
    }

    pub fn plus(mut self, time: TimePoly, space: SpaceFn) -> Self {
        self.terms.push(Term { time, space });
        self
    }

    pub fn value(&self, t: f64, u: f64) -> f64 {
        self.terms.iter().map(|s| s.time.value(t) * s.space.value(u)).sum()
    }

    pub fn du(&self, t: f64, u: f64) -> f64 {
        self.terms.iter().map(|s| s.time.value(t) * s.space.d1(u)).sum()
    }

    pub fn duu(&self, t: f64, u: f64) -> f64 {
        self.terms.iter().map(|s| s.time.value(t) * s.space.d2(u)).sum()
    }

    pub fn dt(&self, t: f64, u: f64) -> f64 {
        self.terms.iter().map(|s| s.time.deriv(t) * s.space.value(u)).sum()
    }

    pub fn is_time_independent(&self) -> bool {
        self.terms.iter().all(|s| s.time.is_constant())
    }

    fn slope_bound(&self, t0: f64, t1: f64) -> f64 {
        self.terms
            .iter()
            .map(|s| s.time.sup_abs(t0, t1) * s.space.slope_bound())
            .sum()
    }

    fn value_bound_at(&self, u: f64, t0: f64, t1: f64) -> f64 {
        self.terms
            .iter()
            .map(|s| s.time.sup_abs(t0, t1) * s.space.value(u).abs())
            .sum()
    }
}

/// A grid-sampled field on [0,T] × [0,1], optionally backed by an analytic
/// description.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    horizon: f64,
    n_times: usize,
    n_space: usize,
    values: Vec<f64>,
    class: FieldClass,
    analytic: Option<AnalyticField>,
}

/// Tolerance for the DirichletZero boundary check.
const CLASS_TOL: f64 = 1e-12;

impl SpaceTimeField {
    /// Samples `analytic` on `n_times` time nodes and `intervals` cells.
    pub fn from_analytic(
        analytic: AnalyticField,
        class: FieldClass,
        horizon: f64,
        n_times: usize,
        intervals: usize,
    ) -> Result<Self> {
        for t in &analytic.terms {
            t.space.validate()?;
        }
        let (n_times, dt) = time_grid(horizon, n_times)?;
        let du = 1.0 / intervals as f64;
        let mut values = Vec::with_capacity(n_times * (intervals + 1));
        for k in 0..n_times {
            for i in 0..=intervals {
                values.push(analytic.value(k as f64 * dt, i as f64 * du));
            }
        }
        let f = SpaceTimeField {
            horizon,
            n_times,
            n_space: intervals + 1,
            values,
            class,
            analytic: Some(analytic),
        };
        f.check_class()?;
        Ok(f)
    }

    /// Field from grid rows (one per uniform time node).
    pub fn from_rows(horizon: f64, rows: Vec<Vec<f64>>, class: FieldClass) -> Result<Self> {
        let (n_times, _) = time_grid(horizon, rows.len())?;
        let n_space = rows[0].len();
        if n_space < 3 {
            return Err(Error::Invalid("field grid needs G >= 2".into()));
        }
        let mut values = Vec::with_capacity(n_times * n_space);
        for r in rows {
            if r.len() != n_space {
                return Err(Error::Invalid("field rows have inconsistent grids".into()));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid("field values must be finite".into()));
            }
            values.extend(r);
        }
        let f = SpaceTimeField {
            horizon,
            n_times,
            n_space,
            values,
            class,
            analytic: None,
        };
        f.check_class()?;
        Ok(f)
    }

    /// The identically zero field.
    pub fn zero(horizon: f64, class: FieldClass) -> Self {
        SpaceTimeField::from_analytic(AnalyticField::zero(), class, horizon, 2, 2)
            .expect("zero field is valid")
    }

    fn check_class(&self) -> Result<()> {
        if self.class == FieldClass::DirichletZero {
            for k in 0..self.n_times {
                let r = self.row(k);
                let (a, b) = (r[0], r[self.n_space - 1]);
                if a.abs() > CLASS_TOL || b.abs() > CLASS_TOL {
                    return Err(Error::ClassMismatch(format!(
                        "DirichletZero field has boundary values ({a}, {b}) at time node {k}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Whether the field vanishes at u = 0 and u = 1 for every time node.
    pub fn vanishes_on_boundary(&self) -> bool {
        (0..self.n_times).all(|k| {
            let r = self.row(k);
            r[0].abs() <= CLASS_TOL && r[self.n_space - 1].abs() <= CLASS_TOL
        })
    }

    pub fn class(&self) -> FieldClass {
        self.class
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn analytic(&self) -> Option<&AnalyticField> {
        self.analytic.as_ref()
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn n_space(&self) -> usize {
        self.n_space
    }

    fn du_grid(&self) -> f64 {
        1.0 / (self.n_space - 1) as f64
    }

    fn dt_grid(&self) -> f64 {
        if self.n_times > 1 {
            self.horizon / (self.n_times - 1) as f64
        } else {
            0.0
        }
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.n_space..(k + 1) * self.n_space]
    }

    fn time_cell(&self, t: f64) -> (usize, f64) {
        if self.n_times == 1 || self.horizon == 0.0 {
            return (0, 0.0);
        }
        let x = (t / self.horizon).clamp(0.0, 1.0) * (self.n_times - 1) as f64;
        let k = (x.floor() as usize).min(self.n_times - 2);
        (k, x - k as f64)
    }

    fn blend(&self, t: f64, f: impl Fn(&[f64]) -> f64) -> f64 {
        let (k, s) = self.time_cell(t);
        if self.n_times == 1 || s == 0.0 {
            f(self.row(k))
        } else {
            f(self.row(k)) * (1.0 - s) + f(self.row(k + 1)) * s
        }
    }

    pub fn value(&self, t: f64, u: f64) -> f64 {
        match &self.analytic {
            Some(a) => a.value(t, u),
            None => self.blend(t, |r| interp(r, u)),
        }
    }

    pub fn du(&self, t: f64, u: f64) -> f64 {
        match &self.analytic {
            Some(a) => a.du(t, u),
            None => {
                let h = self.du_grid();
                self.blend(t, |r| grid_d1(r, h, u))
            }
        }
    }

    pub fn duu(&self, t: f64, u: f64) -> f64 {
        match &self.analytic {
            Some(a) => a.duu(t, u),
            None => {
                let h = self.du_grid();
                self.blend(t, |r| grid_d2(r, h, u))
            }
        }
    }

    pub fn dt(&self, t: f64, u: f64) -> f64 {
        match &self.analytic {
            Some(a) => a.dt(t, u),
            None => {
                if self.n_times == 1 {
                    return 0.0;
                }
                let (k, _) = self.time_cell(t);
                (interp(self.row(k + 1), u) - interp(self.row(k), u)) / self.dt_grid()
            }
        }
    }

    pub fn is_time_independent(&self) -> bool {
        match &self.analytic {
            Some(a) => a.is_time_independent(),
            None => (1..self.n_times).all(|k| self.row(k) == self.row(0)),
        }
    }

    /// Upper bound on sup |∂_u H| over [t0, t1] × [0,1]. For grid fields this
    /// is the exact Lipschitz constant of the bilinear interpolant.
    pub fn slope_bound(&self, t0: f64, t1: f64) -> f64 {
        match &self.analytic {
            Some(a) => a.slope_bound(t0, t1),
            None => {
                let h = self.du_grid();
                let (k0, k1) = self.rows_covering(t0, t1);
                (k0..=k1)
                    .map(|k| {
                        self.row(k)
                            .windows(2)
                            .map(|w| (w[1] - w[0]).abs() / h)
                            .fold(0.0, f64::max)
                    })
                    .fold(0.0, f64::max)
            }
        }
    }

    /// Upper bound on sup_{t∈[t0,t1]} |H(t,u)| at a fixed point u.
    pub fn value_bound_at(&self, u: f64, t0: f64, t1: f64) -> f64 {
        match &self.analytic {
            Some(a) => a.value_bound_at(u, t0, t1),
            None => {
                let (k0, k1) = self.rows_covering(t0, t1);
                (k0..=k1).map(|k| interp(self.row(k), u).abs()).fold(0.0, f64::max)
            }
        }
    }

    fn rows_covering(&self, t0: f64, t1: f64) -> (usize, usize) {
        if self.n_times == 1 {
            return (0, 0);
        }
        let (k0, _) = self.time_cell(t0);
        let (k1, s1) = self.time_cell(t1);
        (k0, if s1 > 0.0 { k1 + 1 } else { k1 })
    }
}

fn time_grid(horizon: f64, n_times: usize) -> Result<(usize, f64)> {
    if n_times == 0 {
        return Err(Error::Invalid("field needs at least one time node".into()));
    }
    if !(horizon >= 0.0) {
        return Err(Error::Invalid("field horizon must be >= 0".into()));
    }
    let dt = if n_times > 1 { horizon / (n_times - 1) as f64 } else { 0.0 };
    Ok((n_times, dt))
}

/// Interpolated second-order nodal first derivative.
fn grid_d1(r: &[f64], h: f64, u: f64) -> f64 {
    let g = r.len() - 1;
    let node = |i: usize| -> f64 {
        if i == 0 {
            (-3.0 * r[0] + 4.0 * r[1] - r[2]) / (2.0 * h)
        } else if i == g {
            (3.0 * r[g] - 4.0 * r[g - 1] + r[g - 2]) / (2.0 * h)
        } else {
            (r[i + 1] - r[i - 1]) / (2.0 * h)
        }
    };
    let x = u.clamp(0.0, 1.0) * g as f64;
    let k = (x.floor() as usize).min(g - 1);
    let s = x - k as f64;
    node(k) * (1.0 - s) + node(k + 1) * s
}

fn grid_d2(r: &[f64], h: f64, u: f64) -> f64 {
    let g = r.len() - 1;
    let node = |i: usize| -> f64 {
        let i = i.clamp(1, g - 1);
        (r[i + 1] - 2.0 * r[i] + r[i - 1]) / (h * h)
    };
    let x = u.clamp(0.0, 1.0) * g as f64;
    let k = (x.floor() as usize).min(g - 1);
    let s = x - k as f64;
    node(k) * (1.0 - s) + node(k + 1) * s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_class_enforced() {
        let sine = AnalyticField::stationary(SpaceFn::Sine { k: 1, amp: 0.3 });
        assert!(SpaceTimeField::from_analytic(sine, FieldClass::DirichletZero, 1.0, 5, 32).is_ok());
        let cosine = AnalyticField::stationary(SpaceFn::Cosine { k: 1, amp: 0.3 });
        assert!(matches!(
            SpaceTimeField::from_analytic(cosine.clone(), FieldClass::DirichletZero, 1.0, 5, 32),
            Err(Error::ClassMismatch(_))
        ));
        assert!(SpaceTimeField::from_analytic(cosine, FieldClass::Free, 1.0, 5, 32).is_ok());
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let f = AnalyticField::separable(TimePoly::linear(0.5, 2.0), SpaceFn::Bump {
            center: 0.5,
            width: 0.3,
            amp: 1.5,
        })
        .plus(TimePoly::constant(1.0), SpaceFn::Cosine { k: 2, amp: 0.7 })
        .plus(TimePoly::constant(1.0), SpaceFn::Polynomial { coeffs: vec![0.1, -0.3, 0.2] });
        let (t, u, h) = (0.3, 0.41, 1e-5);
        let fd_u = (f.value(t, u + h) - f.value(t, u - h)) / (2.0 * h);
        let fd_uu = (f.value(t, u + h) - 2.0 * f.value(t, u) + f.value(t, u - h)) / (h * h);
        let fd_t = (f.value(t + h, u) - f.value(t - h, u)) / (2.0 * h);
        assert!((fd_u - f.du(t, u)).abs() < 1e-8);
        assert!((fd_uu - f.duu(t, u)).abs() < 1e-4);
        assert!((fd_t - f.dt(t, u)).abs() < 1e-8);
    }

    #[test]
    fn slope_bounds_dominate() {
        let f = AnalyticField::separable(TimePoly::linear(0.0, 1.0), SpaceFn::Bump {
            center: 0.4,
            width: 0.2,
            amp: 2.0,
        });
        let field = SpaceTimeField::from_analytic(f, FieldClass::Free, 1.0, 3, 256).unwrap();
        let bound = field.slope_bound(0.0, 1.0);
        let observed = (0..=1000)
            .map(|i| field.du(1.0, i as f64 / 1000.0).abs())
            .fold(0.0, f64::max);
        assert!(observed <= bound && bound < 1.05 * observed);
    }

    #[test]
    fn grid_field_interpolates_and_bounds() {
        let rows = vec![vec![0.0, 0.5, 0.0], vec![0.0, 1.0, 0.0]];
        let f = SpaceTimeField::from_rows(2.0, rows, FieldClass::DirichletZero).unwrap();
        assert!((f.value(1.0, 0.5) - 0.75).abs() < 1e-15);
        assert_eq!(f.slope_bound(0.0, 0.5), 2.0);
        assert_eq!(f.slope_bound(0.0, 2.0), 2.0);
        assert!(!f.is_time_independent());
        assert!((f.dt(0.4, 0.5) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn time_poly_bound() {
        let p = TimePoly { coeffs: vec![1.0, -2.0, 0.5] };
        let bound = p.sup_abs(0.0, 2.0);
        for i in 0..=100 {
            assert!(p.value(i as f64 * 0.02).abs() <= bound);
        }
        assert!((p.deriv(1.0) - (-1.0)).abs() < 1e-15);
    }
}
