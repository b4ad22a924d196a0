use std::path::Path;

use serde_json::{json, Map, Value};

use epsb::field::{FieldClass, SpaceTimeField};
use epsb::hydro::{solve, spectral_oracle, weak_residual, BoundarySpec, Grid, SpectralBc, WeakRegime};
use epsb::kmc::{check_conservation, simulate, Tilt, MAX_ORACLE_SITES};
use epsb::ldp::{
    boundary_current_tail, mass_tail_experiment, relative_entropy_rate, replacement_table, InitialLaw,
};
use epsb::params::Regime;
use epsb::variational::{quadratic_cost, rate_function, TiltBasis, PDE_MASS_TOL};
use epsb::{ModelParams, Profile, SpaceTimeProfile};

use crate::config::{weak_test_fields, RunConfig};
use crate::experiments::{hydro_limit, oracle_comparison};
use crate::{Check, CliError, Command, Summary};

struct Output<'a> {
    dir: &'a Path,
    files: Vec<String>,
    checks: Vec<Check>,
    values: Map<String, Value>,
}

impl Output<'_> {
    fn write(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        std::fs::write(self.dir.join(name), text)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn value(&mut self, key: &str, v: Value) {
        self.values.insert(key.to_string(), v);
    }
}

pub fn run(command: Command, cfg: &RunConfig, dir: &Path) -> Result<Summary, CliError> {
    let mut out = Output {
        dir,
        files: Vec::new(),
        checks: Vec::new(),
        values: Map::new(),
    };
    match command {
        Command::Simulate => simulate_cmd(cfg, &mut out)?,
        Command::Hydro => hydro_cmd(cfg, &mut out)?,
        Command::Rate => rate_cmd(cfg, &mut out)?,
        Command::Entropy => entropy_cmd(cfg, &mut out)?,
        Command::Tails => tails_cmd(cfg, &mut out)?,
        Command::Oracle => oracle_cmd(cfg, &mut out)?,
    }
    Ok(Summary {
        command,
        checks: out.checks,
        files: out.files,
        values: out.values,
    })
}

/// Boundary conditions of the (possibly perturbed) hydrodynamic equation.
fn boundary_spec(params: &ModelParams, h: Option<&SpaceTimeField>) -> Result<BoundarySpec, CliError> {
    let (alpha, beta) = (params.alpha(), params.beta());
    Ok(match (params.regime(), h) {
        (Regime::Dirichlet, None) => BoundarySpec::Dirichlet { alpha, beta },
        (Regime::Dirichlet, Some(h)) => BoundarySpec::PerturbedDirichlet {
            alpha,
            beta,
            h: h.clone(),
        },
        (Regime::Neumann, None) => BoundarySpec::Neumann,
        (Regime::Neumann, Some(h)) => BoundarySpec::Robin { h: h.clone() },
        (Regime::Critical, _) => {
            return Err(CliError::config("params.theta", "no hydrodynamic equation is available at theta = 1"))
        }
    })
}

fn weak_regime(params: &ModelParams) -> WeakRegime {
    match params.regime() {
        Regime::Dirichlet => WeakRegime::Dirichlet {
            alpha: params.alpha(),
            beta: params.beta(),
        },
        _ => WeakRegime::Neumann,
    }
}

fn field_class(params: &ModelParams) -> FieldClass {
    match params.regime() {
        Regime::Dirichlet => FieldClass::DirichletZero,
        _ => FieldClass::Free,
    }
}

fn hydro_solution(
    cfg: &RunConfig,
    params: &ModelParams,
    h: Option<&SpaceTimeField>,
) -> Result<(Profile, SpaceTimeProfile), CliError> {
    let gamma = cfg.initial_profile(params)?;
    let bc = boundary_spec(params, h)?;
    let rho = solve(&gamma, &bc, &Grid::new(cfg.grid.intervals, params.horizon(), cfg.grid.rows))?;
    Ok((gamma, rho))
}

fn simulate_cmd(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let params = cfg.model()?;
    let law = cfg.initial_law(&params)?;
    let g = &cfg.grid;
    let times: Vec<f64> = (1..=g.snapshots)
        .map(|k| params.horizon() * k as f64 / g.snapshots as f64)
        .collect();

    let first = law.draw(params.n(), &mut epsb::rng::replica_rng(cfg.seed, 0))?;
    let traj = simulate(&params, &first, None, &times, epsb::rng::derive_seed(cfg.seed, 0))?;
    let conserved = check_conservation(&traj).is_ok();
    out.checks.push(Check::at_least("current_conservation", f64::from(u8::from(conserved)), 1.0));
    out.write("snapshots.csv", &traj.snapshots_csv())?;

    if params.regime() == Regime::Critical {
        return Ok(());
    }
    let gamma = cfg.initial_profile(&params)?;
    let bc = boundary_spec(&params, None)?;
    let hl = hydro_limit(&params, &law, &gamma, &bc, cfg.replicas, cfg.seed, g.eps, g.intervals, g.snapshots)?;
    out.write("density.csv", &hl.to_csv())?;
    out.value("l1", json!(hl.l1));
    out.value("max_mass_drift", json!(hl.max_mass_drift));
    out.value("max_l1", json!(hl.max_l1()));
    Ok(())
}

fn hydro_cmd(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let params = cfg.model()?;
    let h = cfg.tilt_field(&params)?;
    let (gamma, rho) = hydro_solution(cfg, &params, h.as_ref())?;
    out.write("solution.csv", &rho.to_csv())?;

    let regime = weak_regime(&params);
    let mut rows = String::from("test_function,residual\n");
    let mut worst: f64 = 0.0;
    for (k, f) in weak_test_fields(field_class(&params), params.horizon(), cfg.grid.rows, cfg.grid.intervals).iter().enumerate() {
        let r = weak_residual(&rho, f, regime, h.as_ref(), params.horizon())?;
        rows.push_str(&format!("{k},{r}\n"));
        worst = worst.max(r.abs());
    }
    out.write("residuals.csv", &rows)?;
    out.checks.push(Check::at_most("weak_residual", worst, cfg.hydro.residual_tol));

    if h.is_none() {
        let bc = match regime {
            WeakRegime::Dirichlet { alpha, beta } => SpectralBc::Dirichlet { alpha, beta },
            WeakRegime::Neumann => SpectralBc::Neumann,
        };
        let oracle = spectral_oracle(gamma.as_fn(), bc, cfg.hydro.modes, params.horizon(), cfg.grid.intervals)?;
        let last = rho.last();
        let err = oracle
            .values()
            .iter()
            .zip(last)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        out.checks.push(Check::at_most("spectral_sup_error", err, 1e-3));
    }
    Ok(())
}

fn rate_cmd(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let params = cfg.model()?;
    let h = cfg.tilt_field(&params)?;
    let (_, rho) = hydro_solution(cfg, &params, h.as_ref())?;
    let basis = TiltBasis::new(cfg.rate.time_nodes, cfg.rate.space_modes, field_class(&params))?;
    let report = rate_function(&rho, weak_regime(&params), &basis, PDE_MASS_TOL)?;
    let mut terms = String::from("index,linear_term,coefficient\n");
    for (j, (b, c)) in report.linear_terms.iter().zip(&report.coefficients).enumerate() {
        terms.push_str(&format!("{j},{b},{c}\n"));
    }
    out.write("rate_terms.csv", &terms)?;
    out.write(
        "rate.json",
        &(serde_json::to_string_pretty(&report).expect("report serialises") + "\n"),
    )?;
    out.value("rate", json!(report.value));
    out.checks.push(Check::at_least("rate_nonnegative", report.value, -1e-12));
    match &h {
        None => out.checks.push(Check::at_most("zero_cost_on_hydro_path", report.value, 1e-6)),
        Some(h) => {
            let cost = quadratic_cost(&rho, h);
            out.value("quadratic_cost", json!(cost));
            let rel = (report.value - cost).abs() / cost.abs().max(f64::MIN_POSITIVE);
            out.checks.push(Check::at_most("rate_vs_quadratic_cost", rel, 0.02));
        }
    }
    Ok(())
}

fn require_tilt(cfg: &RunConfig, params: &ModelParams) -> Result<(SpaceTimeField, Tilt), CliError> {
    let h = cfg
        .tilt_field(params)?
        .ok_or_else(|| CliError::config("tilt", "this command needs a tilt"))?;
    let tilt = Tilt::new(h.clone());
    Ok((h, tilt))
}

fn entropy_cmd(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let params = cfg.model()?;
    let (h, tilt) = require_tilt(cfg, &params)?;
    let (_, rho) = hydro_solution(cfg, &params, Some(&h))?;
    let target = quadratic_cost(&rho, &h);
    out.value("target", json!(target));
    let law = cfg.initial_law(&params)?;
    let mut table = String::from("n,replicas,value,stderr,weight_mean,weight_stderr,target\n");
    for &n in &cfg.entropy.ns {
        let p = params.with_n(n)?;
        let e = relative_entropy_rate(&p, &law, &tilt, cfg.replicas, cfg.seed)?;
        table.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            e.n, e.replicas, e.value, e.stderr, e.weight_mean, e.weight_stderr, target
        ));
        out.checks.push(Check::at_least(
            format!("entropy_nonnegative_n{n}"),
            e.value + 4.0 * e.stderr,
            0.0,
        ));
        out.checks.push(Check::at_most(
            format!("weight_mean_n{n}"),
            (e.weight_mean - 1.0).abs(),
            4.0 * e.weight_stderr,
        ));
    }
    out.write("entropy.csv", &table)
}

fn tails_cmd(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let params = cfg.model()?;
    if params.theta() <= 1.0 {
        return Err(CliError::config("params.theta", "tail experiments need theta > 1"));
    }
    let law = cfg.initial_law(&params)?;
    let t = &cfg.tails;
    let mut mass = String::from("n,lambda,replicas,hits,frequency,stderr,bound\n");
    let mut current = String::from("n,lambda,side,replicas,hits,frequency,stderr,bound\n");
    for &n in &t.ns {
        let p = params.with_n(n)?;
        for &lambda in &t.lambdas {
            let r = mass_tail_experiment(&p, &law, lambda, cfg.replicas, cfg.seed)?;
            mass.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.n, r.lambda, r.replicas, r.hits, r.frequency, r.stderr, r.bound
            ));
            out.checks.push(Check::at_most(
                format!("mass_tail_n{n}_l{lambda}"),
                r.frequency,
                r.bound + 4.0 * r.stderr,
            ));
            let c = boundary_current_tail(&p, &law, lambda, cfg.replicas, cfg.seed)?;
            for (side, r) in [("left", &c.left), ("right", &c.right)] {
                current.push_str(&format!(
                    "{},{},{side},{},{},{},{},{}\n",
                    r.n, r.lambda, r.replicas, r.hits, r.frequency, r.stderr, r.bound
                ));
                out.checks.push(Check::at_most(
                    format!("current_tail_{side}_n{n}_l{lambda}"),
                    r.frequency,
                    r.bound + 4.0 * r.stderr,
                ));
            }
        }
    }
    out.write("mass_tail.csv", &mass)?;
    out.write("current_tail.csv", &current)?;

    let rp = match t.replacement_theta {
        Some(theta) => epsb::validate_params(params.n(), theta, params.alpha(), params.beta(), params.horizon())?,
        None => params,
    };
    let phi = cfg.phi()?;
    let rows = replacement_table(&rp, &t.ns, &law, t.eps, t.site, &phi, cfg.replicas, cfg.seed)?;
    let mut rep = String::from("n,eps,theta,mean,stderr,mean_abs,stderr_abs\n");
    for r in &rows {
        rep.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n,
            r.eps,
            rp.theta(),
            r.mean,
            r.stderr,
            r.mean_abs,
            r.stderr_abs
        ));
    }
    out.write("replacement.csv", &rep)?;
    if let (Some(a), Some(b)) = (rows.first(), rows.last()) {
        if rows.len() > 1 {
            let slack = 4.0 * (a.stderr_abs.powi(2) + b.stderr_abs.powi(2)).sqrt();
            out.checks.push(Check::at_most("replacement_trend", b.mean_abs, a.mean_abs + slack));
        }
    }
    Ok(())
}

fn oracle_cmd(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let params = cfg.model()?;
    if params.n() - 1 > MAX_ORACLE_SITES {
        return Err(CliError::config(
            "params.n",
            format!("the exact generator handles at most {MAX_ORACLE_SITES} sites"),
        ));
    }
    let law = match cfg.initial_law(&params)? {
        InitialLaw::Deterministic(p) => InitialLaw::Fixed(epsb::deterministic_config(&p, params.n())?),
        other => other,
    };
    let tilt = cfg.tilt(&params)?;
    let cmp = oracle_comparison(&params, &law, tilt.as_ref(), cfg.replicas, cfg.seed)?;
    out.write("oracle.csv", &cmp.to_csv(params.n()))?;
    out.value("tv", json!(cmp.tv));
    out.checks.push(Check::at_most("total_variation", cmp.tv, cfg.oracle.tv_tol));
    Ok(())
}
