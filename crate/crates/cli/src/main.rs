//! `nashtrack`: run, synthesize and check Nash-seeking regulation scenarios.

mod svg;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use clap::{Args, Parser, Subcommand};

use nashtrack::checks::run_checks;
use nashtrack::config::ScenarioFile;
use nashtrack::controller::escalate_gains;
use nashtrack::simulation::{exosystem_bounded, metrics, simulate, write_csv, ClosedLoopTrajectory};
use nashtrack::{Error, Scenario};

const EXIT_CONFIG: u8 = 1;
const EXIT_DIVERGED: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser)]
#[command(name = "nashtrack", version, about = "Distributed Nash equilibrium seeking with output regulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the closed loop, write the trajectory CSV and print metrics.
    Simulate(SimulateArgs),
    /// Print the internal-model matrices of every agent and level.
    Synthesize(CommonArgs),
    /// Print the Nash equilibrium, gradient constants and the γ₂ bound.
    SolveNe(CommonArgs),
    /// Run the invariant checks; exit 3 if any fails.
    Check(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    decimate: Option<usize>,
    /// Print the scenario with all defaults filled in and exit.
    #[arg(long)]
    dump_normalized: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Drop every Ψη term from the control law.
    #[arg(long)]
    ablate_internal_model: bool,
    /// `seeds=K`: run K consecutive seeds starting at the configured one.
    #[arg(long, value_parser = parse_sweep)]
    sweep: Option<u64>,
}

fn parse_sweep(s: &str) -> Result<u64, String> {
    let k = s.strip_prefix("seeds=").ok_or("expected seeds=K")?;
    match k.parse::<u64>() {
        Ok(k) if k > 0 => Ok(k),
        _ => Err(format!("invalid seed count `{k}`")),
    }
}

enum Failure {
    Config(Error),
    Diverged(String),
    Check,
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e.root() {
            Error::Diverged { .. } | Error::EscalationExhausted { .. } => Failure::Diverged(e.to_string()),
            _ => Failure::Config(e),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

fn load(args: &CommonArgs) -> Result<ScenarioFile, Failure> {
    let mut file = ScenarioFile::load(&args.config)?;
    if let Some(t) = args.t_final {
        file.sim.t_final = t;
    }
    if let Some(dt) = args.dt {
        file.sim.dt = dt;
    }
    if let Some(seed) = args.seed {
        file.sim.seed = seed;
    }
    if let Some(d) = args.decimate {
        file.sim.decimate = d;
    }
    Ok(file)
}

/// Loads and builds, or prints the normalized file when asked to.
fn prepare(args: &CommonArgs) -> Result<Option<Scenario>, Failure> {
    let file = load(args)?;
    if args.dump_normalized {
        println!("{}", file.normalized().to_json());
        return Ok(None);
    }
    let sc = file.build()?;
    if let Some(w) = sc.gamma2_warning() {
        eprintln!("warning: {w}");
    }
    Ok(Some(sc))
}

fn fmt_vec(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
    format!("[{}]", items.join(", "))
}

fn fmt_matrix(m: &nashtrack::Matrix) -> String {
    let rows: Vec<String> = (0..m.rows()).map(|i| fmt_vec(m.row(i))).collect();
    format!("[{}]", rows.join(", "))
}

fn with_suffix(path: &Path, seed: u64) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}-seed{seed}.{ext}"),
        None => format!("{stem}-seed{seed}"),
    };
    path.with_file_name(name)
}

fn print_summary(sc: &Scenario, traj: &ClosedLoopTrajectory, rounds: Option<usize>) {
    println!("seed = {}", sc.sim.seed);
    println!("state_dim = {}", sc.state_dim());
    println!("gamma1 = {:?}", sc.generator.gamma1);
    println!("gamma2 = {:?}", sc.generator.gamma2);
    println!("gamma2_bound = {:?}", sc.gamma2_bound);
    let k: Vec<String> = sc.controller.k.iter().map(|row| fmt_vec(row)).collect();
    println!("k = [{}]", k.join(", "));
    if let Some(r) = rounds {
        println!("escalation_rounds = {r}");
    }
    println!("ablate_internal_model = {}", sc.ablate_internal_model);
    println!("p_star = {}", fmt_vec(&traj.p_star));
    println!("v0 = {}", fmt_vec(&traj.realization.v0));
    println!("t_end = {:?}", traj.times.last().copied().unwrap_or(0.0));
    let m = metrics(traj);
    println!("final_errors = {}", fmt_vec(&m.final_errors));
    println!("max_final_error = {:?}", m.max_final_error);
    println!("max_output_gap = {:?}", m.max_output_gap);
    println!("final_ne_dist = {:?}", m.final_ne_dist);
    match m.ne_slope {
        Some(s) => println!("ne_log_slope = {s:?}"),
        None => println!("ne_log_slope = none"),
    }
    println!("peak_control = {:?}", m.peak_control);
    println!("max_state_norm = {:?}", m.max_state_norm);
    println!("exosystem_bounded = {}", exosystem_bounded(traj));
    match traj.diverged_at {
        Some(t) => println!("status = diverged at t = {t:?}"),
        None => println!("status = ok"),
    }
}

fn write_outputs(traj: &ClosedLoopTrajectory, out: Option<&Path>, svg_path: Option<&Path>) -> io::Result<()> {
    if let Some(p) = out {
        let mut w = BufWriter::new(File::create(p)?);
        write_csv(traj, &mut w)?;
        w.flush()?;
    }
    if let Some(p) = svg_path {
        std::fs::write(p, svg::render(traj))?;
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let Some(mut sc) = prepare(&args.common)? else {
        return Ok(());
    };
    let seeds: Vec<u64> = (0..args.sweep.unwrap_or(1)).map(|k| sc.sim.seed + k).collect();
    let mut rounds = None;
    if let Some(policy) = sc.escalation {
        // gains are searched with the internal models active, also for ablated runs
        let found = escalate_gains(&sc, &sc.controller.clone(), policy, &seeds)?;
        sc.controller = found.controller;
        sc.generator.gamma1 = found.gamma1;
        rounds = Some(found.rounds);
    }
    sc.ablate_internal_model = args.ablate_internal_model;

    let runs: Vec<(Scenario, nashtrack::Result<ClosedLoopTrajectory>)> = thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let sc = sc.with_seed(seed);
                scope.spawn(move || {
                    let traj = sc.realize().and_then(|real| simulate(&sc, &real));
                    (sc, traj)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    });

    let sweep = seeds.len() > 1;
    let mut diverged = None;
    for (k, (sc, traj)) in runs.into_iter().enumerate() {
        let traj = traj?;
        if k > 0 {
            println!();
        }
        print_summary(&sc, &traj, rounds);
        let out = args.out.as_deref().map(|p| if sweep { with_suffix(p, sc.sim.seed) } else { p.to_path_buf() });
        let svg_path = args.svg.as_deref().map(|p| if sweep { with_suffix(p, sc.sim.seed) } else { p.to_path_buf() });
        write_outputs(&traj, out.as_deref(), svg_path.as_deref())?;
        if let Some(t) = traj.diverged_at {
            diverged.get_or_insert(format!("seed {}: closed loop diverged at t = {t}", sc.sim.seed));
        }
    }
    match diverged {
        Some(msg) => Err(Failure::Diverged(msg)),
        None => Ok(()),
    }
}

fn cmd_synthesize(args: &CommonArgs) -> Result<(), Failure> {
    let Some(sc) = prepare(args)? else {
        return Ok(());
    };
    for (i, levels) in sc.bank.levels.iter().enumerate() {
        for (s, l) in levels.iter().enumerate() {
            println!("agent = {}, level = {}", i + 1, s + 1);
            println!("  coeffs = {}", fmt_vec(&l.companion.coeffs));
            println!("  M = {}", fmt_matrix(&l.stabilizer.m));
            println!("  N = {}", fmt_vec(&l.stabilizer.n));
            println!("  T = {}", fmt_matrix(&l.t));
            println!("  Psi = {}", fmt_vec(&l.psi));
            println!("  residual = {:e}", l.residual);
        }
    }
    Ok(())
}

fn cmd_solve_ne(args: &CommonArgs) -> Result<(), Failure> {
    let Some(sc) = prepare(args)? else {
        return Ok(());
    };
    let c = sc.game.estimate_constants()?;
    let residual = nashtrack::numerics::norm2(&sc.game.pseudo_gradient(&sc.p_star));
    println!("p_star = {}", fmt_vec(&sc.p_star));
    println!("residual = {residual:e}");
    println!("strong_monotonicity = {:?}", c.strong_mono);
    println!("lipschitz = {:?}", c.lipschitz);
    println!("lambda2 = {:?}", sc.graph.lambda2()?);
    println!("min_gamma2 = {:?}", sc.gamma2_bound);
    Ok(())
}

fn cmd_check(args: &CommonArgs) -> Result<(), Failure> {
    let Some(sc) = prepare(args)? else {
        return Ok(());
    };
    let (results, warnings) = run_checks(&sc);
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in &results {
        let mark = if r.passed { "PASS" } else { "FAIL" };
        println!("{mark}  {:width$}  {}", r.name, r.detail);
    }
    for w in warnings {
        println!("WARN  {w}");
    }
    if results.iter().all(|r| r.passed) {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Synthesize(a) => cmd_synthesize(a),
        Command::SolveNe(a) => cmd_solve_ne(a),
        Command::Check(a) => cmd_check(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Diverged(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_DIVERGED)
        }
        Err(Failure::Check) => {
            eprintln!("error: one or more checks failed");
            ExitCode::from(EXIT_CHECK)
        }
    }
}
