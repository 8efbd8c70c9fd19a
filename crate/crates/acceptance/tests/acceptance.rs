//! Acceptance battery: one line per criterion, nonzero exit if any fails.

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use stifflab::compactness::{criterion_sweep, run_with_weights, KernelSpec};
use stifflab::diagnostics::{gronwall_energy_check, mass_bound_check};
use stifflab::io::commands::{EPS_SLOPE_MIN, PRESSURE_RATIO_LIMIT, TREND_SLACK};
use stifflab::io::{build_initial, emit_verify, parse_config, verify_battery, RunConfig};
use stifflab::limit::{assemble_report, hele_shaw_profile, run_members, SweepAxis, SweepPlan};
use stifflab::model::{homeostatic_density, FluidState, Grid1D, ModelParams};
use stifflab::solver::{run, SolverConfig, Trajectory};

const BUMP: &str = include_str!("../../core/configs/bump.json");
const GAMMAS: [f64; 5] = [5.0, 10.0, 20.0, 40.0, 80.0];
const EPSILONS: [f64; 3] = [1e-2, 1e-3, 1e-4];

struct Outcome {
    pass: bool,
    detail: String,
}

/// Largest per-substep transport mass change seen so far, with its allowance.
#[derive(Default)]
struct DriftLedger {
    worst_ratio: f64,
    worst_detail: String,
    runs: usize,
}

impl DriftLedger {
    fn record(&mut self, label: &str, traj: &Trajectory) {
        let n = traj.snapshots[0].grid.n_cells();
        let max_mass = traj.records.iter().map(|r| r.mass).fold(0.0, f64::max);
        let change = traj.step_stats.max_transport_mass_drift * max_mass;
        let tol = 10.0 * f64::EPSILON * n as f64;
        let ratio = change / tol;
        self.runs += 1;
        if ratio >= self.worst_ratio {
            self.worst_ratio = ratio;
            self.worst_detail = format!("{label}: {change:.2e} vs {tol:.2e}");
        }
    }
}

fn bump_config() -> RunConfig {
    parse_config(BUMP).expect("bundled config parses")
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn uniform_params(gamma: f64) -> ModelParams {
    ModelParams {
        gamma,
        g0: 1.0,
        pm: 1.0,
        ..Default::default()
    }
}

fn logistic(rho0: f64, gamma: f64, t: f64) -> f64 {
    let y0 = rho0.powf(gamma);
    let a = (-gamma * t).exp();
    (y0 / (a + y0 * (1.0 - a))).powf(1.0 / gamma)
}

fn logistic_oracle(drift: &mut DriftLedger) -> Outcome {
    let grid = Grid1D::new(1.0, 16).unwrap();
    let mut worst = 0.0_f64;
    let mut slowest = Duration::ZERO;
    for gamma in [1.0, 5.0, 40.0] {
        let cfg = SolverConfig {
            t_end: 5.0,
            output_every: 0.1,
            ..Default::default()
        };
        let (traj, dt) = timed(|| {
            run(
                FluidState::uniform(grid, 0.5).unwrap(),
                &uniform_params(gamma),
                &cfg,
            )
            .unwrap()
        });
        slowest = slowest.max(dt);
        for s in &traj.snapshots {
            let exact = logistic(0.5, gamma, s.t);
            for r in &s.rho {
                worst = worst.max((r - exact).abs() / exact);
            }
        }
        drift.record(&format!("logistic gamma={gamma}"), &traj);
    }
    Outcome {
        pass: worst <= 1e-9 && slowest < Duration::from_secs(1),
        detail: format!("max rel err {worst:.2e}, slowest {slowest:.2?}"),
    }
}

fn homeostatic_point(drift: &mut DriftLedger) -> Outcome {
    let grid = Grid1D::new(1.0, 16).unwrap();
    let (mut rho_err, mut p_err) = (0.0_f64, 0.0_f64);
    let mut slowest = Duration::ZERO;
    for gamma in [1.0, 5.0, 40.0] {
        let params = uniform_params(gamma);
        let t_end = 50.0 / (gamma * params.max_growth());
        let cfg = SolverConfig {
            t_end,
            output_every: t_end,
            ..Default::default()
        };
        let (traj, dt) =
            timed(|| run(FluidState::uniform(grid, 0.5).unwrap(), &params, &cfg).unwrap());
        slowest = slowest.max(dt);
        let target = homeostatic_density(&params);
        for r in &traj.final_state().unwrap().rho {
            rho_err = rho_err.max((r - target).abs());
            p_err = p_err.max((r.powf(gamma) - params.pm).abs());
        }
        drift.record(&format!("homeostasis gamma={gamma}"), &traj);
    }
    Outcome {
        pass: rho_err <= 1e-6 && p_err <= 1e-4 && slowest < Duration::from_secs(1),
        detail: format!("|rho - rho*| {rho_err:.2e}, |p - P_M| {p_err:.2e}, slowest {slowest:.2?}"),
    }
}

fn bump_bounds(drift: &mut DriftLedger) -> (Outcome, Outcome) {
    let cfg = bump_config();
    let (traj, elapsed) = timed(|| {
        run(
            build_initial(&cfg).unwrap(),
            &cfg.params,
            &cfg.solver_config(),
        )
        .unwrap()
    });
    drift.record("bump gamma=40", &traj);
    let mass = mass_bound_check(&traj, &cfg.params);
    let energy = gronwall_energy_check(&traj, &cfg.params).unwrap();
    (
        Outcome {
            pass: mass.pass && elapsed < Duration::from_secs(10),
            detail: format!(
                "worst margin {:.3e} at t={}, {elapsed:.2?}",
                mass.worst_margin, mass.t_worst
            ),
        },
        Outcome {
            pass: energy.pass,
            detail: format!(
                "worst margin {:.3e} at t={}",
                energy.worst_margin, energy.t_worst
            ),
        },
    )
}

struct GammaSweep {
    limit: Outcome,
    consistency: Outcome,
    compactness: Outcome,
}

fn checkerboard_control(grid: Grid1D) -> (bool, f64) {
    let family: Vec<Vec<FluidState>> = [0.2, 0.4, 0.6]
        .iter()
        .map(|amp| {
            let rho: Vec<f64> = (0..grid.n_cells())
                .map(|i| 0.5 + if i % 2 == 0 { amp / 2.0 } else { -amp / 2.0 })
                .collect();
            [0.0, 0.5]
                .iter()
                .map(|&t| FluidState::new(grid, rho.clone(), vec![0.0; grid.n_faces()], t).unwrap())
                .collect()
        })
        .collect();
    let report = criterion_sweep(&family, &KernelSpec::default(), 3.0).unwrap();
    let not_decreasing = report.sup_value.last() >= report.sup_value.first();
    (not_decreasing, report.decay_ratio)
}

fn gamma_sweep(drift: &mut DriftLedger) -> GammaSweep {
    let cfg = bump_config();
    let plan = SweepPlan::new(
        cfg.params,
        cfg.solver_config(),
        build_initial(&cfg).unwrap(),
        SweepAxis::Gamma,
        GAMMAS.to_vec(),
    )
    .unwrap();
    let (members, t_runs) = timed(|| run_members(&plan));
    let (report, t_table) = timed(|| assemble_report(&plan, &members));
    for (g, m) in GAMMAS.iter().zip(&members) {
        if let Ok(traj) = m {
            drift.record(&format!("gamma sweep {g}"), traj);
        }
    }
    if !report.all_succeeded() {
        let fail = || Outcome {
            pass: false,
            detail: "a sweep member failed".into(),
        };
        return GammaSweep {
            limit: fail(),
            consistency: fail(),
            compactness: fail(),
        };
    }
    let tr = report.trends(TREND_SLACK);
    let limit = Outcome {
        pass: tr.excess_decreasing
            && tr.complementarity_decreasing
            && tr.cauchy_decreasing
            && tr.pressure_ratio <= PRESSURE_RATIO_LIMIT
            && t_runs < Duration::from_secs(180),
        detail: format!(
            "excess {} |compl| {} cauchy {} pressure ratio {:.3}, {t_runs:.2?}",
            tr.excess_decreasing,
            tr.complementarity_decreasing,
            tr.cauchy_decreasing,
            tr.pressure_ratio
        ),
    };
    let last = report.rows.last().unwrap().metrics.as_ref().unwrap();
    let gate = 0.1 * cfg.params.max_growth();
    let consistency = Outcome {
        pass: last.consistency_rms <= gate,
        detail: format!(
            "gamma=80 rms {:.4} vs {gate:.4} on {} cells",
            last.consistency_rms, last.saturated_cells
        ),
    };
    let (control_ok, control_ratio) = checkerboard_control(cfg.grid());
    let compactness = match &report.compactness {
        Some(c) => Outcome {
            pass: c.pass && control_ok && t_table < Duration::from_secs(120),
            detail: format!(
                "decay {:.3} (need {}), checkerboard ratio {control_ratio:.3} ({}), {t_table:.2?}",
                c.decay_ratio,
                c.required_ratio,
                if control_ok { "no decay" } else { "decays" }
            ),
        },
        None => Outcome {
            pass: false,
            detail: report.compactness_error.clone().unwrap_or_default(),
        },
    };
    GammaSweep {
        limit,
        consistency,
        compactness,
    }
}

fn eps_sweep(drift: &mut DriftLedger) -> Outcome {
    let cfg = bump_config();
    let mut params = cfg.params;
    params.gamma = 10.0;
    let mut plan = SweepPlan::new(
        params,
        cfg.solver_config(),
        build_initial(&cfg).unwrap(),
        SweepAxis::Eps,
        EPSILONS.to_vec(),
    )
    .unwrap();
    plan.kernel = None;
    let (members, elapsed) = timed(|| run_members(&plan));
    for (e, m) in EPSILONS.iter().zip(&members) {
        if let Ok(traj) = m {
            drift.record(&format!("eps sweep {e}"), traj);
        }
    }
    let report = assemble_report(&plan, &members);
    let tr = report.trends(TREND_SLACK);
    let slope = tr.eps_grad_slope.unwrap_or(f64::NAN);
    Outcome {
        pass: report.all_succeeded()
            && tr.eps_grad_decreasing
            && slope >= EPS_SLOPE_MIN
            && elapsed < Duration::from_secs(60),
        detail: format!(
            "decreasing {} slope {slope:.3}, {elapsed:.2?}",
            tr.eps_grad_decreasing
        ),
    }
}

fn weight_bounds(drift: &mut DriftLedger) -> Outcome {
    let cfg = bump_config();
    let lambdas = [0.5, 1.0, 2.0];
    let run = run_with_weights(
        build_initial(&cfg).unwrap(),
        &cfg.params,
        &cfg.solver_config(),
        &lambdas,
    )
    .unwrap();
    drift.record("weights gamma=40", &run.trajectory);
    let in_range = run.min_w.iter().all(|w| *w >= 0.0) && run.max_w.iter().all(|w| *w <= 1.0);
    let c: Vec<f64> = run
        .mass
        .iter()
        .zip(&lambdas)
        .map(|(m, l)| m.value / l)
        .collect();
    let (lo, hi) = c
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(a, b), v| (a.min(*v), b.max(*v)));
    let stable = lo > 0.0 && hi / lo <= 1.3;
    Outcome {
        pass: in_range && stable && run.mass.iter().all(|m| !m.saturated),
        detail: format!(
            "w in [{:.4}, {:.4}], C spread {:.4}",
            run.min_w.iter().cloned().fold(1.0, f64::min),
            run.max_w.iter().cloned().fold(0.0, f64::max),
            hi / lo
        ),
    }
}

fn hele_shaw() -> Outcome {
    let params = ModelParams {
        nu0: 1.0,
        g0: 1.0,
        pm: 1.0,
        ..Default::default()
    };
    let (prof, elapsed) = timed(|| hele_shaw_profile(0.0, 2.0, &params, 10_000).unwrap());
    let residual = prof.ode_residual();
    let center_err = (prof.center_value - (1.0 - 1.0 / 1.0_f64.cosh())).abs();
    Outcome {
        pass: residual <= 1e-8 * params.pm
            && center_err <= 1e-10
            && elapsed < Duration::from_millis(100),
        detail: format!("residual {residual:.2e}, center err {center_err:.1e}, {elapsed:.2?}"),
    }
}

fn determinism(drift: &mut DriftLedger) -> Outcome {
    let cfg = bump_config();
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for name in ["first", "second"] {
        let dir = tmp.path().join(name);
        let (report, runs) = verify_battery(&cfg, 7).unwrap();
        emit_verify(&report, &runs, &cfg, &dir).unwrap();
        for (i, r) in runs.iter().enumerate() {
            if let Ok(traj) = r {
                drift.record(&format!("verify member {i}"), traj);
            }
        }
        outputs.push((
            fs::read(dir.join("diagnostics.csv")).unwrap(),
            fs::read(dir.join("verdict.json")).unwrap(),
        ));
    }
    let same = outputs[0] == outputs[1];
    Outcome {
        pass: same,
        detail: format!(
            "diagnostics.csv and verdict.json {}",
            if same { "identical" } else { "differ" }
        ),
    }
}

fn main() -> ExitCode {
    let mut drift = DriftLedger::default();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "logistic oracle", logistic_oracle(&mut drift)));
    results.push((2, "homeostatic fixed point", homeostatic_point(&mut drift)));
    let (mass, energy) = bump_bounds(&mut drift);
    results.push((3, "mass envelope", mass));
    results.push((4, "energy envelope", energy));
    let sweep = gamma_sweep(&mut drift);
    results.push((5, "stiff-limit trends", sweep.limit));
    results.push((6, "consistency on the saturated set", sweep.consistency));
    results.push((7, "vanishing artificial viscosity", eps_sweep(&mut drift)));
    results.push((8, "oscillation decay", sweep.compactness));
    results.push((9, "weight bounds", weight_bounds(&mut drift)));
    results.push((10, "Hele-Shaw self-check", hele_shaw()));
    let determinism = determinism(&mut drift);
    results.push((
        11,
        "transport mass conservation",
        Outcome {
            pass: drift.worst_ratio <= 1.0,
            detail: format!("{} runs, worst {}", drift.runs, drift.worst_detail),
        },
    ));
    results.push((12, "verify determinism", determinism));

    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (id, name, o) in &results {
        println!(
            "[{}] {id:>2} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
