//! `nematic`: forward, tangent and adjoint runs, gradient checks, boundary
//! control optimization and verification for the nematic flow solver.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use nematic_core::adjoint::{gradient_pairing, solve_adjoint};
use nematic_core::control::{build_tangent_from_chart, optimize, random_chart_direction};
use nematic_core::forward::{simulate_with, Trajectory};
use nematic_core::io::binary::{write_control, write_field, FieldSnapshot};
use nematic_core::io::csv::{energy_csv, gradcheck_csv, history_csv, q_boundary_csv, GradCheckRow};
use nematic_core::io::RunSetup;
use nematic_core::linearized::{solve_linearized, tangency_residual, LinearizationMode, TangentBoundarySection};
use nematic_core::verify::{
    duality_check, fd_directional_derivative, invariant_suite, ladyzhenskaya_report, linearization_convergence, manufactured_suite,
    pressure_estimate_report,
};

#[derive(Parser)]
#[command(name = "nematic", version, about = "Nematic liquid crystal flow with director boundary control")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration file.
    config: PathBuf,
    /// Output directory (overrides `[output] dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Forward run: snapshots and energy.csv.
    Simulate(Common),
    /// Tangent run along a seeded random direction: tangent snapshots.
    Linearize(Common),
    /// Adjoint run: adjoint snapshots and q_boundary.csv.
    Adjoint(Common),
    /// Finite differences against the adjoint derivative: gradcheck.csv.
    GradCheck(Common),
    /// Projected-gradient control optimization: history.csv and h_final.lcb.
    Optimize(Common),
    /// Invariant, duality, linearization and convergence checks: report.txt.
    Verify(Common),
}

struct Run {
    setup: RunSetup,
    out: PathBuf,
}

impl Run {
    fn new(c: &Common) -> Result<Self> {
        let setup = RunSetup::load(&c.config).with_context(|| format!("loading {}", c.config.display()))?;
        let out = c.out.clone().unwrap_or_else(|| setup.config.output.dir.clone());
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Self { setup, out })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
    }

    fn snapshot(&self, name: &str, n: usize, s: &FieldSnapshot) -> Result<()> {
        let p = self.path(&format!("{name}_{n:05}.lcf"));
        write_field(&p, s).with_context(|| format!("writing {}", p.display()))
    }

    /// Levels to store: first, last and every `snapshot_every`-th.
    fn snapshot_levels(&self, levels: usize) -> Vec<usize> {
        let k = self.setup.config.output.snapshot_every;
        (0..levels).filter(|&n| n == 0 || n + 1 == levels || (k > 0 && n % k == 0)).collect()
    }

    fn simulate(&self) -> Result<Trajectory> {
        Ok(self.setup.problem.simulate()?)
    }

    fn direction(&self, traj: &Trajectory) -> Result<TangentBoundarySection> {
        let dz = random_chart_direction(&traj.grid, self.setup.config.output.seed);
        Ok(build_tangent_from_chart(&traj.bc, &dz)?)
    }
}

fn window_radius(traj: &Trajectory) -> f64 {
    0.25 * traj.grid.spec.lx.min(traj.grid.spec.ly)
}

fn simulate(run: &Run) -> Result<()> {
    let traj = run.simulate()?;
    let g = &traj.grid;
    for n in run.snapshot_levels(traj.states.len()) {
        let s = &traj.states[n];
        run.snapshot("u", n, &FieldSnapshot::velocity(g, &s.u, s.t))?;
        run.snapshot("d", n, &FieldSnapshot::director(g, &s.d, s.t))?;
        run.snapshot("p", n, &FieldSnapshot::scalar(g, &s.p, s.t))?;
    }
    run.write("energy.csv", &energy_csv(&traj, window_radius(&traj)))?;
    for c in &invariant_suite(&traj).checks {
        println!("{c}");
    }
    Ok(())
}

fn linearize(run: &Run) -> Result<()> {
    let traj = run.simulate()?;
    let xi = run.direction(&traj)?;
    let lin = solve_linearized(&traj, &xi, run.setup.config.output.mode)?;
    let g = &traj.grid;
    for n in run.snapshot_levels(lin.states.len()) {
        let (s, t) = (&lin.states[n], traj.states[n].t);
        run.snapshot("omega", n, &FieldSnapshot::velocity(g, &s.omega, t))?;
        run.snapshot("phi", n, &FieldSnapshot::director(g, &s.phi, t))?;
        run.snapshot("lin_p", n, &FieldSnapshot::scalar(g, &s.lin_p, t))?;
    }
    println!("tangency residual {:e}", tangency_residual(&lin, &traj));
    Ok(())
}

fn adjoint(run: &Run) -> Result<()> {
    let traj = run.simulate()?;
    let s = &run.setup;
    let adj = solve_adjoint(&traj, &s.targets, &s.weights, s.config.output.mode)?;
    let g = &traj.grid;
    for n in run.snapshot_levels(adj.p1.len()) {
        let t = traj.states[n].t;
        run.snapshot("p1", n, &FieldSnapshot::velocity(g, &adj.p1[n], t))?;
        run.snapshot("p2", n, &FieldSnapshot::director(g, &adj.p2[n], t))?;
        run.snapshot("pi", n, &FieldSnapshot::scalar(g, &adj.pi[n], t))?;
    }
    run.write("q_boundary.csv", &q_boundary_csv(&traj, &adj))
}

fn grad_check(run: &Run) -> Result<()> {
    let s = &run.setup;
    let stepper = s.stepper()?;
    let traj = simulate_with(&stepper, &s.problem.init, &s.problem.bc)?;
    let xi = run.direction(&traj)?;
    let adj = solve_adjoint(&traj, &s.targets, &s.weights, s.config.output.mode)?;
    let a = gradient_pairing(&traj, &traj.bc, &adj, &xi, &s.weights);
    let mut rows = vec![];
    for &eps in &s.config.output.eps {
        let fd = fd_directional_derivative(&stepper, &s.problem.init, &traj.bc, &xi, eps, &s.targets, &s.weights)?;
        let r = GradCheckRow::new(eps, fd, a);
        println!("eps {:e}: fd {:e} adjoint {:e} gap {:e}", r.eps, r.fd_value, r.adjoint_value, r.rel_gap);
        rows.push(r);
    }
    run.write("gradcheck.csv", &gradcheck_csv(&rows))
}

fn optimize_cmd(run: &Run) -> Result<()> {
    let s = &run.setup;
    let stepper = s.stepper()?;
    let out = optimize(&stepper, &s.problem.init, &s.problem.bc, &s.targets, &s.weights, &s.optimize)?;
    run.write("history.csv", &history_csv(&out.history))?;
    let p = run.path("h_final.lcb");
    write_control(&p, &out.h).with_context(|| format!("writing {}", p.display()))?;
    let costs = out.history.costs();
    println!("{} iterations, cost {:e} -> {:e}, stop {:?}", costs.len(), costs[0], costs[costs.len() - 1], out.stop);
    Ok(())
}

/// Writes the report and returns whether every check passed.
fn verify(run: &Run) -> Result<bool> {
    let s = &run.setup;
    let o = &s.config.output;
    let stepper = s.stepper()?;
    let traj = simulate_with(&stepper, &s.problem.init, &s.problem.bc)?;
    let mut rep = String::new();
    let mut ok = true;
    let mut line = |name: &str, value: f64, tol: f64, pass: bool| {
        ok &= pass;
        writeln!(rep, "{} {name:<14} value={value:.3e} tol={tol:.1e}", if pass { "PASS" } else { "FAIL" }).unwrap();
    };

    let inv = invariant_suite(&traj);
    let xi = run.direction(&traj)?;
    let dual = duality_check(&traj, &s.targets, &s.weights, o.directions, o.seed, LinearizationMode::Discrete)?;
    line("duality", dual, 1e-10, dual <= 1e-10);
    let lin = solve_linearized(&traj, &xi, LinearizationMode::Discrete)?;
    let tang = tangency_residual(&lin, &traj);
    line("tangency", tang, 1e-10, tang <= 1e-10);
    let mut eps = o.eps.clone();
    eps.sort_by(|a, b| b.total_cmp(a));
    let fr = linearization_convergence(&stepper, &s.problem.init, &traj, &xi, &eps, LinearizationMode::Discrete)?;
    line("frechet_slope", fr.slope, 0.9, fr.slope >= 0.9);
    let (mu, md) = manufactured_suite(&o.verify_levels, 0.2, 0.05)?;
    line("mms_slope_u", mu.slope, 0.9, mu.slope >= 0.9);
    line("mms_slope_d", md.slope, 0.9, md.slope >= 0.9);

    let mut text = String::new();
    for c in &inv.checks {
        writeln!(text, "{c}").unwrap();
    }
    ok &= inv.passed();
    text.push_str(&rep);
    let fin = traj.final_state();
    let lz = ladyzhenskaya_report(&traj.grid, &fin.d, traj.bc.row(traj.nsteps()), window_radius(&traj));
    let pr = pressure_estimate_report(&traj).iter().map(|r| r.ratio).fold(0.0, f64::max);
    writeln!(text, "INFO ladyzhenskaya_ratio value={:.3e}", lz.ratio).unwrap();
    writeln!(text, "INFO pressure_ratio_max value={pr:.3e}").unwrap();
    writeln!(text, "INFO frechet_errors {}", fmt_list(&fr.errors)).unwrap();
    writeln!(text, "INFO mms_errors_u {}", fmt_list(&mu.errors)).unwrap();
    writeln!(text, "INFO mms_errors_d {}", fmt_list(&md.errors)).unwrap();
    run.write("report.txt", &text)?;
    print!("{text}");
    Ok(ok)
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")
}

fn dispatch(cmd: &Cmd) -> Result<bool> {
    let (c, f): (&Common, fn(&Run) -> Result<bool>) = match cmd {
        Cmd::Simulate(c) => (c, |r| simulate(r).map(|_| true)),
        Cmd::Linearize(c) => (c, |r| linearize(r).map(|_| true)),
        Cmd::Adjoint(c) => (c, |r| adjoint(r).map(|_| true)),
        Cmd::GradCheck(c) => (c, |r| grad_check(r).map(|_| true)),
        Cmd::Optimize(c) => (c, |r| optimize_cmd(r).map(|_| true)),
        Cmd::Verify(c) => (c, verify),
    };
    f(&Run::new(c)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: verification failed (see report.txt)");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
