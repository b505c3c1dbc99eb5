//! Graph-partition relaxation under box constraints: minimize
//! `f(x) = x^T A x / 2` over `[-1, 1]^n` for the adjacency matrix of a
//! random graph, with per-iteration objective and integrality metrics
//! written as CSV.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::driver::{find_sosp, RunConfig, SospRun, TrajectoryRecord};
use crate::escape::Tolerances;
use crate::oracle::{GraphPartition, OracleBundle};
use crate::polyhedron::Polyhedron;
use crate::rng::{stream, stream_rng};
use crate::Error;

/// Safety factor on the power-iteration estimate of the gradient Lipschitz
/// constant.
const SPECTRAL_SAFETY: f64 = 1.05;

/// Per-escape subset budget of experiment runs. Near all-integral points
/// every pinned wall is reachable and a full certificate enumeration is
/// exponential in their count; the budget turns that terminal call into an
/// uncertified stop.
const SUBSET_BUDGET: u64 = 10_000;

/// Erdos-Renyi sampling parameters.
#[derive(Debug, Clone, Copy)]
pub struct ErConfig {
    pub n: usize,
    pub p: f64,
    pub seed: u64,
}

/// Samples a symmetric 0/1 adjacency matrix with zero diagonal; each
/// unordered pair is an edge independently with probability `p`.
pub fn erdos_renyi(cfg: &ErConfig) -> Result<DMatrix<f64>, Error> {
    if cfg.n < 1 {
        return Err(Error::InvalidParameter("graph needs n >= 1"));
    }
    if !(0.0..=1.0).contains(&cfg.p) {
        return Err(Error::InvalidParameter("edge probability must be in [0, 1]"));
    }
    let mut rng = stream_rng(cfg.seed, stream::ER_GRAPH);
    let mut adj = DMatrix::<f64>::zeros(cfg.n, cfg.n);
    for i in 0..cfg.n {
        for j in (i + 1)..cfg.n {
            if rng.random::<f64>() < cfg.p {
                adj[(i, j)] = 1.0;
                adj[(j, i)] = 1.0;
            }
        }
    }
    Ok(adj)
}

/// Deterministic power-iteration estimate of the largest absolute
/// eigenvalue of a symmetric matrix.
fn spectral_radius_estimate(m: &DMatrix<f64>, iters: usize) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut rng = stream_rng(0x5eed, 71);
    let mut z = DVector::<f64>::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let norm = z.norm();
    if norm == 0.0 {
        return 0.0;
    }
    z /= norm;
    let mut estimate = 0.0;
    for _ in 0..iters {
        let next = m * &z;
        let next_norm = next.norm();
        if next_norm == 0.0 {
            return 0.0;
        }
        estimate = next_norm;
        z = next / next_norm;
    }
    estimate
}

/// Builds the box-constrained partition problem for an adjacency matrix:
/// the objective `x^T A x / 2`, the `2n`-row box `|x_i| <= 1` (rows
/// `0..n` are `x_i <= 1`, rows `n..2n` are `-x_i <= 1`), and a gradient
/// Lipschitz bound from power iteration with a 5% safety factor.
pub fn partition_problem(adj: &DMatrix<f64>) -> Result<(GraphPartition, Polyhedron, f64), Error> {
    if adj.nrows() != adj.ncols() {
        return Err(Error::DimensionMismatch {
            expected: adj.nrows(),
            got: adj.ncols(),
        });
    }
    if (adj - adj.transpose()).amax() > 0.0 {
        return Err(Error::InvalidParameter("adjacency matrix must be symmetric"));
    }
    let n = adj.nrows();
    let objective = GraphPartition::new(adj.clone())?;
    let mut a = DMatrix::<f64>::zeros(2 * n, n);
    for i in 0..n {
        a[(i, i)] = 1.0;
        a[(n + i, i)] = -1.0;
    }
    let polyhedron = Polyhedron::new(a, DVector::from_element(2 * n, 1.0))?;
    let l = SPECTRAL_SAFETY * spectral_radius_estimate(adj, 200);
    Ok((objective, polyhedron, l))
}

/// Fraction of coordinates within `band` of -1 or 1.
pub fn integral_fraction(x: &DVector<f64>, band: f64) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let integral = x.iter().filter(|&&v| v.abs() >= 1.0 - band).count();
    integral as f64 / x.len() as f64
}

/// Summary of one experiment run.
#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub final_objective: f64,
    pub final_integral_fraction: f64,
    pub iterations: usize,
    pub gradient_calls: u64,
    pub wall_ms: f64,
    pub certificate: bool,
}

/// Runs the experiment: sample the graph from `cfg`, start at the all-zero
/// saddle, iterate escape steps with the radius fixed by the caller
/// (`rho` is back-solved as `delta / r^3` since the quadratic objective
/// leaves it free), and write the per-iteration CSV to `out_path`.
pub fn run_experiment(
    cfg: &ErConfig,
    delta: f64,
    r: f64,
    seed: u64,
    out_path: &Path,
) -> Result<ExperimentSummary, Error> {
    if delta <= 0.0 || r <= 0.0 {
        return Err(Error::InvalidParameter("delta and r must be positive"));
    }
    let adj = erdos_renyi(cfg)?;
    let (objective, polyhedron, l) = partition_problem(&adj)?;
    let rho = delta / (r * r * r);
    let bundle = OracleBundle::new(Arc::new(objective), l, rho, 0.0);

    let config = RunConfig {
        delta,
        xi: 1e-8,
        seed,
        max_outer_iters: 100_000,
        max_subsets_per_escape: Some(SUBSET_BUDGET),
        tolerances: Tolerances::default(),
    };
    let started = std::time::Instant::now();
    let run = find_sosp(&bundle, &polyhedron, &DVector::zeros(cfg.n), &config)?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;

    let band = integrality_band(&config.tolerances);
    write_experiment_csv(out_path, &run.trajectory, band)?;

    let last = run.trajectory.last().expect("trajectory is never empty");
    Ok(ExperimentSummary {
        final_objective: last.f_value,
        final_integral_fraction: integral_fraction(&run.point, band),
        iterations: last.iter,
        gradient_calls: last.gradient_calls,
        wall_ms,
        certificate: run.certificate,
    })
}

/// The integrality band `10 * active_tol` used for the reported fraction.
pub fn integrality_band(tol: &Tolerances) -> f64 {
    10.0 * tol.active
}

/// Writes the experiment CSV:
/// `iter,f_value,integral_fraction,escaped,case_label,subset_size,grad_calls,wall_ms`.
pub fn write_experiment_csv(
    path: &Path,
    trajectory: &[TrajectoryRecord],
    band: f64,
) -> Result<(), Error> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(
        out,
        "iter,f_value,integral_fraction,escaped,case_label,subset_size,grad_calls,wall_ms"
    )?;
    for rec in trajectory {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{:.3}",
            rec.iter,
            rec.f_value,
            integral_fraction(&rec.x, band),
            rec.escaped,
            rec.case.map(|c| c.to_string()).unwrap_or_default(),
            rec.subset_size.map(|s| s.to_string()).unwrap_or_default(),
            rec.gradient_calls,
            rec.wall_ms,
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Convenience wrapper returning the run itself, for callers that
/// inspect the trajectory directly.
pub fn run_experiment_trajectory(
    cfg: &ErConfig,
    delta: f64,
    r: f64,
    seed: u64,
) -> Result<SospRun, Error> {
    let adj = erdos_renyi(cfg)?;
    let (objective, polyhedron, l) = partition_problem(&adj)?;
    let rho = delta / (r * r * r);
    let bundle = OracleBundle::new(Arc::new(objective), l, rho, 0.0);
    let config = RunConfig {
        delta,
        xi: 1e-8,
        seed,
        max_outer_iters: 100_000,
        max_subsets_per_escape: Some(SUBSET_BUDGET),
        tolerances: Tolerances::default(),
    };
    find_sosp(&bundle, &polyhedron, &DVector::zeros(cfg.n), &config)
}
