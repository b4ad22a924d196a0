//! Acceptance suite: one PASS/FAIL line per criterion, at the agreed
//! tolerances. Runs without the libtest harness so the lines reach the log.
//! Exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use epsb::field::{AnalyticField, FieldClass, SpaceFn, SpaceTimeField, TimePoly};
use epsb::hydro::{solve, spectral_oracle, stationary_dirichlet, BoundarySpec, Grid, SpectralBc, WeakRegime};
use epsb::kmc::Tilt;
use epsb::ldp::{
    boundary_current_tail, mass_tail_experiment, relative_entropy_rate, replacement_table, EntropyEstimate,
    InitialLaw, ReplacementSite, WeightedEnsemble,
};
use epsb::variational::{
    elliptic_dirichlet, elliptic_neumann, j_functional, quadratic_cost, rate_form, rate_function, TiltBasis,
    PDE_MASS_TOL,
};
use epsb::{validate_params, ModelParams, Profile, SpaceTimeProfile};
use epsb_cli::experiments::{hydro_limit, oracle_comparison};
use epsb_cli::{execute, Command, RunConfig};

const SEED: u64 = 20_240_611;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Verdict { pass, detail }
    }
}

fn params(n: usize, theta: f64, alpha: f64, beta: f64, horizon: f64) -> ModelParams {
    validate_params(n, theta, alpha, beta, horizon).expect("valid parameters")
}

fn field(space: SpaceFn, class: FieldClass, horizon: f64, rows: usize) -> SpaceTimeField {
    SpaceTimeField::from_analytic(AnalyticField::stationary(space), class, horizon, rows, 128).expect("field")
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn criterion_1() -> Verdict {
    let law = InitialLaw::Bernoulli(Profile::constant(16, 0.5).unwrap());
    let h = SpaceTimeField::from_analytic(
        AnalyticField::separable(TimePoly::linear(1.0, 2.0), SpaceFn::Cosine { k: 1, amp: 0.8 }),
        FieldClass::Free,
        0.5,
        9,
        64,
    )
    .unwrap();
    let tilt = Tilt::new(h);
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for theta in [0.5, 2.0] {
        let p = params(4, theta, 0.3, 0.7, 0.5);
        for (name, t) in [("untilted", None), ("tilted", Some(&tilt))] {
            let cmp = oracle_comparison(&p, &law, t, 100_000, SEED).unwrap();
            worst = worst.max(cmp.tv);
            parts.push(format!("theta={theta} {name} TV={:.4}", cmp.tv));
        }
    }
    Verdict::new(worst <= 0.01, format!("{}; max {worst:.4} <= 0.01", parts.join(", ")))
}

fn hydro_case(theta: f64, gamma: Profile, bc: BoundarySpec, law_profile: Profile) -> (f64, f64, usize) {
    let p = params(256, theta, 0.2, 0.8, 0.25);
    let law = InitialLaw::Deterministic(law_profile);
    let r = hydro_limit(&p, &law, &gamma, &bc, 100, SEED, 0.05, 128, 4).unwrap();
    (r.max_l1(), r.max_mass_drift, p.n())
}

fn criterion_2() -> Verdict {
    let gamma = Profile::constant(128, 0.5).unwrap();
    let bc = BoundarySpec::Dirichlet { alpha: 0.2, beta: 0.8 };
    let (l1, _, _) = hydro_case(0.5, gamma.clone(), bc, gamma);
    Verdict::new(l1 <= 0.03, format!("max_t L1 = {l1:.4} <= 0.03"))
}

fn criterion_3() -> Verdict {
    let gamma = Profile::from_fn(128, |u| 0.5 + 0.3 * (PI * u).cos()).unwrap();
    let (l1, drift, n) = hydro_case(2.0, gamma.clone(), BoundarySpec::Neumann, gamma);
    let cap = 3.0 / n as f64;
    Verdict::new(
        l1 <= 0.03 && drift <= cap,
        format!("max_t L1 = {l1:.4} <= 0.03, mass drift = {drift:.5} <= {cap:.5}"),
    )
}

/// Sup error at time `t` of the FD solution on `g` intervals.
fn fd_error(gamma: &dyn Fn(f64) -> f64, bc: &BoundarySpec, sbc: SpectralBc, t: f64, g: usize) -> f64 {
    let rho = solve(&Profile::from_fn(g, gamma).unwrap(), bc, &Grid::new(g, t, 2)).unwrap();
    let exact = spectral_oracle(gamma, sbc, 400, t, g).unwrap();
    sup_diff(rho.last(), exact.values())
}

fn criterion_4() -> Verdict {
    let t = 0.1;
    let dir = |u: f64| 0.2 + 0.6 * u + 0.3 * (PI * u).sin();
    let neu = |u: f64| 0.5 + 0.3 * (PI * u).cos() + 0.1 * (3.0 * PI * u).cos();
    type Case<'a> = (&'a str, &'a dyn Fn(f64) -> f64, BoundarySpec, SpectralBc);
    let cases: [Case; 2] = [
        (
            "dirichlet",
            &dir,
            BoundarySpec::Dirichlet { alpha: 0.2, beta: 0.8 },
            SpectralBc::Dirichlet { alpha: 0.2, beta: 0.8 },
        ),
        ("neumann", &neu, BoundarySpec::Neumann, SpectralBc::Neumann),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, gamma, bc, sbc) in cases {
        let fine = fd_error(gamma, &bc, sbc, t, 512);
        let grids = [32usize, 64, 128];
        let errs: Vec<f64> = grids.iter().map(|&g| fd_error(gamma, &bc, sbc, t, g)).collect();
        // Least-squares slope of log(err) against log(du).
        let xs: Vec<f64> = grids.iter().map(|&g| -(g as f64).ln()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
        let order = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        pass &= fine <= 1e-3 && (order - 2.0).abs() <= 0.4;
        parts.push(format!("{name}: sup err {fine:.2e} at du=1/512, order {order:.3}"));
    }
    Verdict::new(pass, format!("{} (need <= 1e-3, order 2 +/- 0.4)", parts.join("; ")))
}

/// sup |∂_uH - ∂_uH0| over the nodes of the recovered field.
fn gradient_error(h: &SpaceTimeField, h0: &SpaceTimeField, rho: &SpaceTimeProfile) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..rho.n_times() {
        let t = rho.time(k);
        for i in 0..=rho.intervals() {
            let u = i as f64 * rho.du();
            worst = worst.max((h.du(t, u) - h0.du(t, u)).abs());
        }
    }
    worst
}

/// Tilted hydrodynamic path for H0 = 0.3 sin(πu) (Dirichlet) or 0.3 cos(πu)
/// (Neumann), on 256 intervals. The sin³ part of the Dirichlet datum decays
/// at rate 9π², so 257 time rows keep ∂_tρ accurate on the first row.
fn tilted_path(dirichlet: bool, horizon: f64) -> (SpaceTimeField, SpaceTimeProfile) {
    if dirichlet {
        let h0 = field(SpaceFn::Sine { k: 1, amp: 0.3 }, FieldClass::DirichletZero, horizon, 2);
        let stat = stationary_dirichlet(0.2, 0.8, |u| 0.3 * PI * (PI * u).cos(), 256).unwrap();
        let gamma = Profile::from_fn(256, |u| stat.eval(u) + 0.2 * (PI * u).sin().powi(3)).unwrap();
        let bc = BoundarySpec::PerturbedDirichlet {
            alpha: 0.2,
            beta: 0.8,
            h: h0.clone(),
        };
        let rho = solve(&gamma, &bc, &Grid::new(256, horizon, 257)).unwrap();
        (h0, rho)
    } else {
        let h0 = field(SpaceFn::Cosine { k: 1, amp: 0.3 }, FieldClass::Free, horizon, 2);
        let gamma = Profile::from_fn(256, |u| 0.5 + 0.2 * (PI * u).cos()).unwrap();
        let rho = solve(&gamma, &BoundarySpec::Robin { h: h0.clone() }, &Grid::new(256, horizon, 257)).unwrap();
        (h0, rho)
    }
}

fn criterion_5() -> Verdict {
    let (h0, rho) = tilted_path(true, 0.25);
    let ed = gradient_error(&elliptic_dirichlet(&rho).unwrap(), &h0, &rho);
    let (h0, rho) = tilted_path(false, 0.25);
    let en = gradient_error(&elliptic_neumann(&rho).unwrap(), &h0, &rho);
    Verdict::new(
        ed <= 1e-2 && en <= 1e-2,
        format!("sup |dH - dH0|: dirichlet {ed:.2e}, neumann {en:.2e} (<= 1e-2)"),
    )
}

fn criterion_6() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for dirichlet in [true, false] {
        let (regime, class) = if dirichlet {
            (WeakRegime::Dirichlet { alpha: 0.2, beta: 0.8 }, FieldClass::DirichletZero)
        } else {
            (WeakRegime::Neumann, FieldClass::Free)
        };
        let name = if dirichlet { "dirichlet" } else { "neumann" };
        let basis = TiltBasis::new(5, 8, class).unwrap();

        let (h0, rho) = tilted_path(dirichlet, 0.5);
        let rate = rate_function(&rho, regime, &basis, PDE_MASS_TOL).unwrap().value;
        let cost = quadratic_cost(&rho, &h0);
        let rel = (rate - cost).abs() / cost;
        pass &= rel <= 0.02;
        parts.push(format!("{name}: rate {rate:.5} vs cost {cost:.5} (rel {rel:.1e})"));

        let bc = if dirichlet {
            BoundarySpec::Dirichlet { alpha: 0.2, beta: 0.8 }
        } else {
            BoundarySpec::Neumann
        };
        let gamma = Profile::from_fn(256, |u| rho.eval(0.0, u)).unwrap();
        let hydro = solve(&gamma, &bc, &Grid::new(256, 0.5, 257)).unwrap();
        let zero = rate_function(&hydro, regime, &basis, PDE_MASS_TOL).unwrap().value;
        pass &= zero <= 1e-6;
        parts.push(format!("hydro rate {zero:.1e}"));

        // J is linear minus even-quadratic in H, so the central difference
        // of J at H = 0 along basis element j is exactly its linear term.
        // With two time nodes the hats are linear in t, hence analytic.
        let grad_basis = TiltBasis::new(2, 8, class).unwrap();
        let form = rate_form(&rho, regime, &grad_basis).unwrap();
        let step = 1e-3;
        let mut grel: f64 = 0.0;
        for j in 0..grad_basis.len() {
            let (a, p) = grad_basis.split(j);
            let time = if a == 0 {
                TimePoly::linear(1.0, -1.0 / 0.5)
            } else {
                TimePoly::linear(0.0, 1.0 / 0.5)
            };
            let space = |amp: f64| match (dirichlet, p) {
                (true, p) => SpaceFn::Sine { k: p as u32 + 1, amp },
                (false, 0) => SpaceFn::Constant { value: amp },
                (false, p) => SpaceFn::Cosine { k: p as u32, amp },
            };
            let j_at = |amp: f64| {
                let f = AnalyticField::separable(time.clone(), space(amp));
                let f = SpaceTimeField::from_analytic(f, class, 0.5, 2, 128).unwrap();
                j_functional(&rho, &f, regime, PDE_MASS_TOL).unwrap()
            };
            let fd = (j_at(step) - j_at(-step)) / (2.0 * step);
            let b = form.b[j];
            grel = grel.max((fd - b).abs() / b.abs().max(1e-8));
        }
        pass &= grel <= 1e-6;
        parts.push(format!("gradient rel {grel:.1e}"));
    }
    Verdict::new(
        pass,
        format!("{} (need rel <= 2e-2, hydro <= 1e-6, gradient <= 1e-6)", parts.join(", ")),
    )
}

fn criterion_7(estimates: &mut Vec<EntropyEstimate>) -> Verdict {
    let horizon = 0.5;
    let h0 = SpaceTimeField::from_analytic(
        AnalyticField::stationary(SpaceFn::Cosine { k: 1, amp: 0.3 }),
        FieldClass::Free,
        horizon,
        129,
        128,
    )
    .unwrap();
    let gamma = Profile::constant(128, 0.5).unwrap();
    let rho = solve(&gamma, &BoundarySpec::Robin { h: h0.clone() }, &Grid::new(128, horizon, 129)).unwrap();
    let basis = TiltBasis::new(5, 8, FieldClass::Free).unwrap();
    let target = rate_function(&rho, WeakRegime::Neumann, &basis, PDE_MASS_TOL).unwrap().value;
    let tilt = Tilt::new(h0);
    let law = InitialLaw::Deterministic(gamma);
    for n in [64, 128, 256] {
        let p = params(n, 2.0, 0.3, 0.6, horizon);
        estimates.push(relative_entropy_rate(&p, &law, &tilt, 200, SEED).unwrap());
    }
    let first = &estimates[0];
    let last = &estimates[estimates.len() - 1];
    let slack = 4.0 * (first.stderr.powi(2) + last.stderr.powi(2)).sqrt();
    let trend = (last.value - target).abs() <= (first.value - target).abs() + slack;
    let rel = (last.value - target).abs() / target;
    let rows: Vec<String> = estimates
        .iter()
        .map(|e| format!("n={} {:.4}+/-{:.4}", e.n, e.value, e.stderr))
        .collect();
    Verdict::new(
        trend && rel <= 0.15,
        format!("{}; target {target:.4}; final rel {rel:.3} <= 0.15; trend {trend}", rows.join(", ")),
    )
}

fn criterion_8(estimates: &[EntropyEstimate]) -> Verdict {
    let mut pass = true;
    let mut notes = Vec::new();

    // Weights. log W is close to Gaussian with variance about twice the
    // relative entropy, so the sample mean of W is only informative where
    // n·rate is O(1); the larger entropy runs are reported, not tested.
    let h = |tp: TimePoly, space: SpaceFn, class: FieldClass, horizon: f64| {
        Tilt::new(
            SpaceTimeField::from_analytic(AnalyticField::separable(tp, space), class, horizon, 17, 128).unwrap(),
        )
    };
    let half = InitialLaw::Bernoulli(Profile::constant(16, 0.5).unwrap());
    let cases = [
        (
            params(32, 2.0, 0.3, 0.6, 0.5),
            h(TimePoly::constant(1.0), SpaceFn::Cosine { k: 1, amp: 0.3 }, FieldClass::Free, 0.5),
        ),
        (
            params(64, 0.5, 0.2, 0.8, 0.1),
            h(TimePoly::linear(0.5, 2.0), SpaceFn::Sine { k: 1, amp: 0.5 }, FieldClass::DirichletZero, 0.1),
        ),
        (
            params(64, 3.0, 0.2, 0.8, 0.1),
            h(TimePoly::linear(1.0, -3.0), SpaceFn::Cosine { k: 2, amp: 0.4 }, FieldClass::Free, 0.1),
        ),
    ];
    let mut worst_z: f64 = 0.0;
    for (p, tilt) in &cases {
        let ens = WeightedEnsemble::sample(p, &half, tilt, &[p.horizon()], 1000, SEED).unwrap();
        let (mean, se) = ens.weight_mean();
        worst_z = worst_z.max((mean - 1.0).abs() / se);
    }
    pass &= worst_z <= 4.0;
    let large: Vec<String> = estimates
        .iter()
        .map(|e| format!("n={} {:.2}+/-{:.2}", e.n, e.weight_mean, e.weight_stderr))
        .collect();
    notes.push(format!(
        "weights max |mean-1|/stderr {worst_z:.2} (entropy runs, untested: {})",
        large.join(", ")
    ));

    let law = InitialLaw::Bernoulli(Profile::from_fn(16, |u| 0.2 + 0.6 * u).unwrap());
    let mut tail_checks = 0;
    let mut tail_fail = 0;
    let mut max_freq: f64 = 0.0;
    for theta in [1.5, 2.0, 3.0] {
        for n in [64, 128] {
            let p = params(n, theta, 0.2, 0.8, 0.1);
            for lambda in [0.02, 0.05] {
                let mut reports = vec![mass_tail_experiment(&p, &law, lambda, 400, SEED).unwrap()];
                let c = boundary_current_tail(&p, &law, lambda, 400, SEED).unwrap();
                reports.push(c.left);
                reports.push(c.right);
                for r in reports {
                    tail_checks += 1;
                    max_freq = max_freq.max(r.frequency);
                    if r.frequency > r.bound + 4.0 * r.stderr {
                        tail_fail += 1;
                    }
                }
            }
        }
    }
    pass &= tail_fail == 0;
    notes.push(format!(
        "tails {}/{tail_checks} within bound+4se (max freq {max_freq:.3})",
        tail_checks - tail_fail
    ));

    let rows = replacement_table(
        &params(64, 0.5, 0.2, 0.8, 0.1),
        &[64, 128, 256],
        &law,
        0.1,
        ReplacementSite::Left,
        &|_| 1.0,
        200,
        SEED,
    )
    .unwrap();
    let (a, b) = (&rows[0], &rows[rows.len() - 1]);
    let slack = 4.0 * (a.stderr_abs.powi(2) + b.stderr_abs.powi(2)).sqrt();
    let trend = b.mean_abs <= a.mean_abs + slack;
    pass &= trend;
    let means: Vec<String> = rows.iter().map(|r| format!("n={} {:.5}", r.n, r.mean_abs)).collect();
    notes.push(format!("replacement E|R| {} (trend {trend})", means.join(", ")));
    Verdict::new(pass, notes.join("; "))
}

fn files_in(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            let name = p.file_name()?.to_str()?.to_string();
            (name.ends_with(".csv") || name == "summary.json").then(|| (name, std::fs::read(&p).unwrap()))
        })
        .collect();
    out.sort();
    out
}

fn criterion_9() -> Verdict {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let root: PathBuf = std::env::temp_dir().join(format!("epsb-acceptance-{}", std::process::id()));
    let runs = [
        (Command::Simulate, "simulate_neumann"),
        (Command::Hydro, "hydro_dirichlet"),
        (Command::Rate, "rate_neumann_tilted"),
        (Command::Entropy, "entropy"),
        (Command::Tails, "tails"),
        (Command::Oracle, "oracle"),
    ];
    let mut identical = 0;
    let mut notes = Vec::new();
    for (cmd, name) in runs {
        let first = root.join(name).join("first");
        let again = root.join(name).join("replay");
        let cfg = configs.join(format!("{name}.json"));
        let a = execute(cmd, RunConfig::load(&cfg).unwrap(), None, Some(1), &first).unwrap().passed();
        let manifest = RunConfig::load(&first.join("manifest.json")).unwrap();
        let b = execute(cmd, manifest, None, Some(3), &again).unwrap().passed();
        let (x, y) = (files_in(&first), files_in(&again));
        if a == b && !x.is_empty() && x == y {
            identical += 1;
        } else {
            notes.push(format!("{name} differs (checks passed {a}/{b})"));
        }
    }
    let _ = std::fs::remove_dir_all(&root);
    let pass = identical == runs.len();
    let detail = if notes.is_empty() {
        format!("{identical}/{} experiments replayed byte-identically from their manifests", runs.len())
    } else {
        notes.join(", ")
    };
    Verdict::new(pass, detail)
}

fn main() {
    // `cargo test -- --list` and filters ask the harness for names; there is one.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut estimates = Vec::new();
    let mut failed = 0;
    let mut report = |id: usize, name: &str, run: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = run();
        if !v.pass {
            failed += 1;
        }
        println!(
            "{} {id} {name}: {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    };
    report(1, "small-n exactness", &mut criterion_1);
    report(2, "hydrodynamic limit, dirichlet", &mut criterion_2);
    report(3, "hydrodynamic limit, neumann", &mut criterion_3);
    report(4, "pde cross-validation", &mut criterion_4);
    report(5, "elliptic round trips", &mut criterion_5);
    report(6, "variational identity", &mut criterion_6);
    report(7, "relative-entropy convergence", &mut || criterion_7(&mut estimates));
    report(8, "superexponential ingredients", &mut || criterion_8(&estimates));
    report(9, "determinism and replay", &mut criterion_9);
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
