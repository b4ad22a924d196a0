use crate::error::{Error, Result};
use crate::field::{FieldClass, SpaceTimeField};
use crate::profile::{Profile, SpaceTimeProfile};

/// Boundary conditions of the hydrodynamic equation.
#[derive(Debug, Clone)]
pub enum BoundarySpec {
    /// ∂_tρ = Δρ, ρ(t,0) = α, ρ(t,1) = β.
    Dirichlet { alpha: f64, beta: f64 },
    /// ∂_tρ = Δρ, ∂_uρ = 0 at both ends.
    Neumann,
    /// ∂_tρ = Δρ - 2∂_u(χ(ρ)∂_uH), ρ(t,0) = α, ρ(t,1) = β.
    PerturbedDirichlet { alpha: f64, beta: f64, h: SpaceTimeField },
    /// ∂_tρ = Δρ - 2∂_u(χ(ρ)∂_uH), ∂_uρ = 2χ(ρ)∂_uH at both ends.
    Robin { h: SpaceTimeField },
}

impl BoundarySpec {
    fn field(&self) -> Option<&SpaceTimeField> {
        match self {
            BoundarySpec::PerturbedDirichlet { h, .. } | BoundarySpec::Robin { h } => Some(h),
            _ => None,
        }
    }

    fn dirichlet_values(&self) -> Option<(f64, f64)> {
        match self {
            BoundarySpec::Dirichlet { alpha, beta } | BoundarySpec::PerturbedDirichlet { alpha, beta, .. } => {
                Some((*alpha, *beta))
            }
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some((a, b)) = self.dirichlet_values() {
            for (name, v) in [("alpha", a), ("beta", b)] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::OutOfRange {
                        name,
                        value: v,
                        reason: "boundary density must lie in [0,1]",
                    });
                }
            }
        }
        if let BoundarySpec::PerturbedDirichlet { h, .. } = self {
            if h.class() != FieldClass::DirichletZero {
                return Err(Error::ClassMismatch(
                    "perturbed Dirichlet problem needs a DirichletZero field".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Diffusion by the trapezoidal rule, drift explicit.
    CrankNicolson,
    /// Forward Euler for both terms.
    Explicit,
}

/// Discretisation of [0,T] × [0,1].
#[derive(Debug, Clone, Copy)]
pub struct Grid {
    pub intervals: usize,
    /// Time step; defaults to Δu²/4. The step actually used divides the
    /// output spacing and never exceeds this value.
    pub dt: Option<f64>,
    pub horizon: f64,
    /// Number of output time rows, including t = 0 and t = T.
    pub out_times: usize,
    pub scheme: Scheme,
}

impl Grid {
    pub fn new(intervals: usize, horizon: f64, out_times: usize) -> Self {
        Grid {
            intervals,
            dt: None,
            horizon,
            out_times,
            scheme: Scheme::CrankNicolson,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn du(&self) -> f64 {
        1.0 / self.intervals as f64
    }
}

/// Excursion outside [0,1] tolerated (and clipped) in reported solutions.
pub const MAX_PRINCIPLE_TOL: f64 = 1e-6;

/// Solves the hydrodynamic equation from `gamma` (sampled at the grid nodes).
///
/// Fluxes J = -∂_uρ + 2χ(ρ)∂_uH live on cell midpoints. Diffusion is
/// Crank–Nicolson (or explicit), the drift explicit. Neumann and Robin
/// conditions are imposed as zero flux through the half cells at the ends,
/// which conserves the trapezoidal mass exactly.
pub fn solve(gamma: &Profile, bc: &BoundarySpec, grid: &Grid) -> Result<SpaceTimeProfile> {
    bc.validate()?;
    let g = grid.intervals;
    if g < 2 {
        return Err(Error::Invalid("grid needs at least 2 intervals".into()));
    }
    if grid.out_times == 0 || (grid.horizon > 0.0 && grid.out_times < 2) {
        return Err(Error::Invalid("need at least two output times for a positive horizon".into()));
    }
    let h = grid.du();
    let horizon = grid.horizon;
    let mut rho: Vec<f64> = (0..=g).map(|i| gamma.eval(i as f64 * h)).collect();
    let mut rows = vec![rho.clone()];
    if horizon == 0.0 {
        return SpaceTimeProfile::from_rows(0.0, rows);
    }

    let field = bc.field();
    let lip = field.map_or(0.0, |f| f.slope_bound(0.0, horizon));
    let dt_req = grid.dt.unwrap_or(h * h / 4.0);
    let diffusion_bound = match grid.scheme {
        Scheme::Explicit => h * h / 2.0,
        // Keeps the θ = 1/2 scheme monotone, so the maximum principle holds.
        Scheme::CrankNicolson => h * h,
    };
    let drift_bound = if lip > 0.0 { h / (2.0 * lip) } else { f64::INFINITY };
    let bound = diffusion_bound.min(drift_bound);
    if !(dt_req > 0.0) || dt_req > bound {
        return Err(Error::StabilityError { dt: dt_req, bound });
    }
    let segments = grid.out_times - 1;
    let per_out = ((horizon / segments as f64) / dt_req).ceil().max(1.0) as usize;
    let dt = horizon / (segments * per_out) as f64;
    let r = dt / (h * h);

    if let Some((a, b)) = bc.dirichlet_values() {
        rho[0] = a;
        rho[g] = b;
    }
    let static_h = field.filter(|f| f.is_time_independent()).map(|f| sample(f, 0.0, g));
    let mut hvals = vec![0.0; g + 1];
    let mut flux = vec![0.0; g];
    let mut next = vec![0.0; g + 1];
    let mut tri = Tridiagonal::new(g + 1);

    for k in 0..segments * per_out {
        let t = k as f64 * dt;
        match (&static_h, field) {
            (Some(v), _) => hvals.copy_from_slice(v),
            (None, Some(f)) => {
                for (i, hv) in hvals.iter_mut().enumerate() {
                    *hv = f.value(t, i as f64 * h);
                }
            }
            (None, None) => {}
        }
        if field.is_some() {
            for i in 0..g {
                let m = 0.5 * (rho[i] + rho[i + 1]);
                flux[i] = 2.0 * m * (1.0 - m) * (hvals[i + 1] - hvals[i]) / h;
            }
        }
        step(&rho, &flux, field.is_some(), bc, grid.scheme, r, dt / h, &mut next, &mut tri);
        std::mem::swap(&mut rho, &mut next);
        if (k + 1) % per_out == 0 {
            let time = (k + 1) as f64 * dt;
            rows.push(checked_row(&rho, time)?);
        }
    }
    SpaceTimeProfile::from_rows(horizon, rows)
}

fn sample(f: &SpaceTimeField, t: f64, g: usize) -> Vec<f64> {
    (0..=g).map(|i| f.value(t, i as f64 / g as f64)).collect()
}

fn checked_row(rho: &[f64], time: f64) -> Result<Vec<f64>> {
    let excess = rho.iter().map(|&v| (-v).max(v - 1.0)).fold(0.0, f64::max);
    if excess > MAX_PRINCIPLE_TOL || rho.iter().any(|v| !v.is_finite()) {
        return Err(Error::MaximumPrincipleViolation { excess, time });
    }
    Ok(rho.iter().map(|v| v.clamp(0.0, 1.0)).collect())
}

#[allow(clippy::too_many_arguments)]
fn step(
    rho: &[f64],
    flux: &[f64],
    drift: bool,
    bc: &BoundarySpec,
    scheme: Scheme,
    r: f64,
    dt_h: f64,
    out: &mut [f64],
    tri: &mut Tridiagonal,
) {
    let g = rho.len() - 1;
    let fl = |i: usize| if drift { flux[i] } else { 0.0 };
    // Weight of the implicit half of the diffusion.
    let (wi, we) = match scheme {
        Scheme::CrankNicolson => (0.5, 0.5),
        Scheme::Explicit => (0.0, 1.0),
    };
    match bc.dirichlet_values() {
        Some((a, b)) => {
            for i in 1..g {
                let lap = rho[i + 1] - 2.0 * rho[i] + rho[i - 1];
                let mut rhs = rho[i] + we * r * lap - dt_h * (fl(i) - fl(i - 1));
                let (mut lo, mut up) = (-wi * r, -wi * r);
                if i == 1 {
                    rhs += wi * r * a;
                    lo = 0.0;
                }
                if i == g - 1 {
                    rhs += wi * r * b;
                    up = 0.0;
                }
                tri.set(i, lo, 1.0 + 2.0 * wi * r, up, rhs);
            }
            tri.set(0, 0.0, 1.0, 0.0, a);
            tri.set(g, 0.0, 1.0, 0.0, b);
        }
        None => {
            let rhs0 = rho[0] + 2.0 * we * r * (rho[1] - rho[0]) - 2.0 * dt_h * fl(0);
            tri.set(0, 0.0, 1.0 + 2.0 * wi * r, -2.0 * wi * r, rhs0);
            for i in 1..g {
                let lap = rho[i + 1] - 2.0 * rho[i] + rho[i - 1];
                let rhs = rho[i] + we * r * lap - dt_h * (fl(i) - fl(i - 1));
                tri.set(i, -wi * r, 1.0 + 2.0 * wi * r, -wi * r, rhs);
            }
            let rhsg = rho[g] - 2.0 * we * r * (rho[g] - rho[g - 1]) + 2.0 * dt_h * fl(g - 1);
            tri.set(g, -2.0 * wi * r, 1.0 + 2.0 * wi * r, 0.0, rhsg);
        }
    }
    tri.solve(out);
}

/// Tridiagonal system a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i.
struct Tridiagonal {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
    scratch: Vec<f64>,
}

impl Tridiagonal {
    fn new(len: usize) -> Self {
        Tridiagonal {
            a: vec![0.0; len],
            b: vec![0.0; len],
            c: vec![0.0; len],
            d: vec![0.0; len],
            scratch: vec![0.0; len],
        }
    }

    #[inline]
    fn set(&mut self, i: usize, a: f64, b: f64, c: f64, d: f64) {
        self.a[i] = a;
        self.b[i] = b;
        self.c[i] = c;
        self.d[i] = d;
    }

    /// Thomas algorithm; the systems assembled here are diagonally dominant.
    fn solve(&mut self, x: &mut [f64]) {
        let len = self.b.len();
        let cp = &mut self.scratch;
        cp[0] = self.c[0] / self.b[0];
        x[0] = self.d[0] / self.b[0];
        for i in 1..len {
            let m = self.b[i] - self.a[i] * cp[i - 1];
            cp[i] = self.c[i] / m;
            x[i] = (self.d[i] - self.a[i] * x[i - 1]) / m;
        }
        for i in (0..len - 1).rev() {
            x[i] -= cp[i] * x[i + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{AnalyticField, SpaceFn};
    use std::f64::consts::PI;

    #[test]
    fn linear_profile_is_stationary_for_dirichlet() {
        let gamma = Profile::from_fn(64, |u| 0.2 + 0.6 * u).unwrap();
        let sol = solve(
            &gamma,
            &BoundarySpec::Dirichlet { alpha: 0.2, beta: 0.8 },
            &Grid::new(64, 0.1, 5),
        )
        .unwrap();
        for row in sol.rows() {
            for (i, v) in row.iter().enumerate() {
                assert!((v - (0.2 + 0.6 * i as f64 / 64.0)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn constants_solve_neumann() {
        let gamma = Profile::constant(32, 0.3).unwrap();
        let sol = solve(&gamma, &BoundarySpec::Neumann, &Grid::new(32, 0.2, 3)).unwrap();
        assert!(sol.last().iter().all(|v| (v - 0.3).abs() < 1e-12));
    }

    #[test]
    fn dirichlet_sine_decays() {
        let g = 512;
        let gamma = Profile::from_fn(g, |u| (PI * u).sin()).unwrap();
        let sol = solve(
            &gamma,
            &BoundarySpec::Dirichlet { alpha: 0.0, beta: 0.0 },
            &Grid::new(g, 0.1, 2),
        )
        .unwrap();
        let decay = (-PI * PI * 0.1).exp();
        let err = sol
            .last()
            .iter()
            .enumerate()
            .map(|(i, v)| (v - decay * (PI * i as f64 / g as f64).sin()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "err = {err}");
    }

    #[test]
    fn robin_conserves_mass() {
        let h = SpaceTimeField::from_analytic(
            AnalyticField::stationary(SpaceFn::Cosine { k: 1, amp: 0.3 }),
            FieldClass::Free,
            0.2,
            2,
            64,
        )
        .unwrap();
        let gamma = Profile::from_fn(64, |u| 0.5 + 0.2 * (PI * u).cos()).unwrap();
        let sol = solve(&gamma, &BoundarySpec::Robin { h }, &Grid::new(64, 0.2, 11)).unwrap();
        let m = sol.masses();
        assert!(m.iter().all(|x| (x - m[0]).abs() < 1e-12));
    }

    #[test]
    fn unstable_step_is_rejected() {
        let gamma = Profile::constant(64, 0.5).unwrap();
        let grid = Grid::new(64, 0.1, 2).with_dt(1e-3).with_scheme(Scheme::Explicit);
        assert!(matches!(
            solve(&gamma, &BoundarySpec::Neumann, &grid),
            Err(Error::StabilityError { .. })
        ));
    }

    #[test]
    fn explicit_and_crank_nicolson_agree() {
        let g = 64;
        let gamma = Profile::from_fn(g, |u| 0.3 + 0.4 * u * u * (3.0 - 2.0 * u)).unwrap();
        let grid = Grid::new(g, 0.05, 2).with_dt(1e-7);
        let a = solve(&gamma, &BoundarySpec::Neumann, &grid).unwrap();
        let b = solve(&gamma, &BoundarySpec::Neumann, &grid.with_scheme(Scheme::Explicit)).unwrap();
        let diff = a
            .last()
            .iter()
            .zip(b.last())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-6, "diff = {diff}");
    }
}
