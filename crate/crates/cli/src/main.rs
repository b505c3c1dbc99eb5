//! `houdini` — find approximate second-order stationary points of smooth
//! non-convex objectives over linear inequality constraints, escape
//! quadratic corner saddles, and reproduce the graph-partition experiment.

mod problem;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::DVector;

use houdini_core::corner::{escape_corner, QcspInstance};
use houdini_core::driver::{find_sosp, write_trajectory_csv, RunConfig};
use houdini_core::escape::Tolerances;
use houdini_core::experiment::{erdos_renyi, partition_problem, run_experiment, ErConfig};
use houdini_core::oracle::OracleBundle;

use problem::parse_problem;

#[derive(Parser)]
#[command(name = "houdini", version, about = "Saddle-point escape over polyhedra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full search for a delta-SOSP of a problem file.
    Solve {
        /// Problem file (JSON).
        #[arg(long)]
        problem: PathBuf,
        /// Override the file's run.delta.
        #[arg(long)]
        delta: Option<f64>,
        /// Override the file's run.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the trajectory CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the outer-iteration cap.
        #[arg(long)]
        max_iters: Option<usize>,
        /// Per-escape subset budget (default: unlimited).
        #[arg(long)]
        subset_budget: Option<u64>,
    },
    /// Escape from a corner saddle of a homogeneous quadratic over a cone.
    CornerEscape {
        /// Problem file (JSON, quadratic objective with v = 0 and b = 0).
        #[arg(long)]
        problem: PathBuf,
        /// Approximation parameter of the escape guarantee.
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        /// Failure probability of the power iterations.
        #[arg(long, default_value_t = 0.01)]
        fail_prob: f64,
        /// Override the file's run.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Benchmark runs.
    Bench {
        #[command(subcommand)]
        what: BenchCommand,
    },
    /// Problem-file generators.
    Gen {
        #[command(subcommand)]
        what: GenCommand,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Graph-partition relaxation on an Erdos-Renyi graph under box
    /// constraints.
    Er {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        r: f64,
        /// Seed for both the graph and the run (mandatory: runs must be
        /// reproducible).
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum GenCommand {
    /// Write a graph-partition problem file for an Erdos-Renyi graph.
    Er {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Solve {
            problem,
            delta,
            seed,
            out,
            max_iters,
            subset_budget,
        } => solve(problem, delta, seed, out, max_iters, subset_budget),
        Command::CornerEscape {
            problem,
            eps,
            fail_prob,
            seed,
        } => corner_escape(problem, eps, fail_prob, seed),
        Command::Bench {
            what: BenchCommand::Er { n, p, delta, r, seed, out },
        } => bench_er(n, p, delta, r, seed, out),
        Command::Gen {
            what: GenCommand::Er { n, p, seed, out },
        } => gen_er(n, p, seed, out),
    }
}

fn solve(
    path: PathBuf,
    delta_flag: Option<f64>,
    seed_flag: Option<u64>,
    out: Option<PathBuf>,
    max_iters: Option<usize>,
    subset_budget: Option<u64>,
) -> Result<ExitCode, String> {
    let (_, loaded) = parse_problem(&path)?;
    // CLI flags take precedence over file values.
    let delta = delta_flag.unwrap_or(loaded.delta);
    if delta <= 0.0 || !delta.is_finite() {
        return Err("--delta: expected a finite positive number".into());
    }
    let seed = seed_flag.unwrap_or(loaded.seed);
    let rho = match loaded.r {
        Some(r) => delta / (r * r * r),
        None => loaded.rho,
    };
    let bundle = OracleBundle::new(loaded.objective.clone(), loaded.l, rho, loaded.sigma);
    let config = RunConfig {
        delta,
        xi: loaded.xi,
        seed,
        max_outer_iters: max_iters.or(loaded.max_outer_iters).unwrap_or(100_000),
        max_subsets_per_escape: subset_budget,
        tolerances: Tolerances::default(),
    };
    let run = find_sosp(&bundle, &loaded.polyhedron, &loaded.x0, &config)
        .map_err(|e| e.to_string())?;

    let first = run.trajectory.first().expect("trajectory never empty");
    let last = run.trajectory.last().expect("trajectory never empty");
    let escapes = run.trajectory.iter().filter(|r| r.escaped).count();
    let r_model = (delta / rho).cbrt();
    println!("delta: {delta}");
    println!("r: {r_model}");
    println!("seed: {seed}");
    println!("sigma: {}", loaded.sigma);
    println!("iterations: {}", last.iter);
    println!("escapes: {escapes}");
    println!("gradient calls: {}", last.gradient_calls);
    println!("initial objective: {}", first.f_value);
    println!("final objective: {}", last.f_value);
    if loaded.adjacency.is_some() {
        let band = houdini_core::experiment::integrality_band(&config.tolerances);
        println!(
            "final integral fraction: {}",
            houdini_core::experiment::integral_fraction(&run.point, band)
        );
    }
    println!("certificate: {}", run.certificate);
    let stop = if run.certificate {
        "sosp certificate"
    } else if last.escaped {
        "iteration cap"
    } else {
        "subset budget exhausted"
    };
    println!("stop: {stop}");
    if run.point.len() <= 10 {
        let coords: Vec<String> = run.point.iter().map(|x| x.to_string()).collect();
        println!("point: [{}]", coords.join(", "));
    }
    if let Some(out) = out {
        write_trajectory_csv(&out, &run.trajectory).map_err(|e| e.to_string())?;
        println!("trajectory: {}", out.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn corner_escape(
    path: PathBuf,
    eps: f64,
    fail_prob: f64,
    seed_flag: Option<u64>,
) -> Result<ExitCode, String> {
    let (_, loaded) = parse_problem(&path)?;
    let Some((m, v, c)) = loaded.quadratic else {
        return Err("objective: corner-escape requires a quadratic objective".into());
    };
    if v.amax() != 0.0 {
        return Err("objective.v: corner-escape requires a homogeneous quadratic (v = 0)".into());
    }
    if c != 0.0 {
        return Err("objective.c: corner-escape requires c = 0".into());
    }
    if loaded.polyhedron.offsets().amax() != 0.0 {
        return Err("constraints.b: corner-escape requires b = 0 (a cone through the saddle)".into());
    }
    let Some(r) = loaded.r else {
        return Err("run.r: corner-escape requires an explicit radius".into());
    };
    if !(0.0..1.0).contains(&eps) || eps <= 0.0 {
        return Err("--eps: expected a value in (0, 1)".into());
    }
    let seed = seed_flag.unwrap_or(loaded.seed);
    let inst = QcspInstance::new(
        m,
        loaded.polyhedron.matrix().clone(),
        loaded.delta,
        r,
        loaded.l,
    )
    .map_err(|e| e.to_string())?;

    match escape_corner(&inst, eps, fail_prob, seed) {
        Some(y) => {
            let coords: Vec<String> = y.iter().map(|x| x.to_string()).collect();
            println!("escape: [{}]", coords.join(", "));
            println!("objective: {}", inst.value(&y));
            println!("threshold: {}", -(1.0 - eps) * loaded.delta);
            Ok(ExitCode::SUCCESS)
        }
        None => {
            println!("no escape found: the corner satisfies the decrease threshold");
            Ok(ExitCode::from(1))
        }
    }
}

fn bench_er(
    n: usize,
    p: f64,
    delta: f64,
    r: f64,
    seed: u64,
    out: PathBuf,
) -> Result<ExitCode, String> {
    let cfg = ErConfig { n, p, seed };
    let summary = run_experiment(&cfg, delta, r, seed, &out).map_err(|e| e.to_string())?;
    println!("n: {n}");
    println!("p: {p}");
    println!("delta: {delta}");
    println!("r: {r}");
    println!("seed: {seed}");
    println!("iterations: {}", summary.iterations);
    println!("gradient calls: {}", summary.gradient_calls);
    println!("final objective: {}", summary.final_objective);
    println!("final integral fraction: {}", summary.final_integral_fraction);
    println!("certificate: {}", summary.certificate);
    println!("wall ms: {:.1}", summary.wall_ms);
    println!("csv: {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn gen_er(n: usize, p: f64, seed: u64, out: PathBuf) -> Result<ExitCode, String> {
    let cfg = ErConfig { n, p, seed };
    let adj = erdos_renyi(&cfg).map_err(|e| e.to_string())?;
    let (_, _, l) = partition_problem(&adj).map_err(|e| e.to_string())?;

    let adjacency: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| adj[(i, j)]).collect())
        .collect();
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(2 * n);
    for i in 0..n {
        let mut row = vec![0.0; n];
        row[i] = 1.0;
        a.push(row);
    }
    for i in 0..n {
        let mut row = vec![0.0; n];
        row[i] = -1.0;
        a.push(row);
    }
    let b = vec![1.0; 2 * n];
    let x0 = DVector::<f64>::zeros(n);

    let doc = serde_json::json!({
        "objective": {"type": "graph_partition", "adjacency": adjacency},
        "constraints": {"a": a, "b": b},
        "smoothness": {"l": l, "rho": null},
        "noise": {"sigma": 0.0},
        "run": {
            "delta": 0.01,
            "r": 0.1,
            "xi": 1e-8,
            "seed": seed,
            "x0": x0.as_slice(),
        },
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?;
    std::fs::write(&out, text).map_err(|e| format!("cannot write {}: {e}", out.display()))?;
    println!("problem: {}", out.display());
    Ok(ExitCode::SUCCESS)
}
