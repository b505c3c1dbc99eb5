//! The problem file format: a JSON document with `objective`,
//! `constraints`, `smoothness`, `noise` and `run` blocks. Matrices are
//! row-major arrays of arrays. Validation reports the offending field by
//! path.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use houdini_core::experiment::{erdos_renyi, ErConfig};
use houdini_core::oracle::{CubicMix, GraphPartition, Objective, Quadratic, RotatedSaddle};
use houdini_core::Polyhedron;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub objective: ObjectiveSpec,
    pub constraints: ConstraintsSpec,
    pub smoothness: SmoothnessSpec,
    pub noise: NoiseSpec,
    pub run: RunSpec,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum ObjectiveSpec {
    #[serde(rename = "quadratic")]
    Quadratic {
        m: Vec<Vec<f64>>,
        v: Vec<f64>,
        #[serde(default)]
        c: f64,
    },
    #[serde(rename = "graph_partition")]
    GraphPartition {
        #[serde(default)]
        adjacency: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        er: Option<ErSpec>,
    },
    #[serde(rename = "rotated_saddle")]
    RotatedSaddle { dim: usize },
    #[serde(rename = "cubic_mix")]
    CubicMix { dim: usize },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErSpec {
    pub n: usize,
    pub p: f64,
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsSpec {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothnessSpec {
    pub l: f64,
    #[serde(default)]
    pub rho: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub sigma: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub delta: f64,
    #[serde(default)]
    pub r: Option<f64>,
    pub xi: f64,
    pub seed: u64,
    pub x0: Vec<f64>,
    #[serde(default)]
    pub max_outer_iters: Option<usize>,
}

/// A fully validated problem, with core objects ready to run.
pub struct LoadedProblem {
    pub objective: Arc<dyn Objective>,
    pub polyhedron: Polyhedron,
    /// Set for graph objectives (used for integrality reports).
    pub adjacency: Option<DMatrix<f64>>,
    /// Quadratic data, for the corner-escape route.
    pub quadratic: Option<(DMatrix<f64>, DVector<f64>, f64)>,
    pub l: f64,
    /// Resolved Hessian-Lipschitz constant: from `smoothness.rho`, or
    /// back-solved as `delta / r^3` when `run.r` is given (which wins).
    pub rho: f64,
    pub sigma: f64,
    pub delta: f64,
    pub r: Option<f64>,
    pub xi: f64,
    pub seed: u64,
    pub x0: DVector<f64>,
    pub max_outer_iters: Option<usize>,
}

fn check_finite_matrix(name: &str, rows: &[Vec<f64>]) -> Result<(), String> {
    for (i, row) in rows.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            if !x.is_finite() {
                return Err(format!("{name}[{i}][{j}]: expected a finite number, got {x}"));
            }
        }
    }
    Ok(())
}

fn check_finite_vector(name: &str, v: &[f64]) -> Result<(), String> {
    for (i, x) in v.iter().enumerate() {
        if !x.is_finite() {
            return Err(format!("{name}[{i}]: expected a finite number, got {x}"));
        }
    }
    Ok(())
}

fn to_matrix(name: &str, rows: &[Vec<f64>], expect_cols: usize) -> Result<DMatrix<f64>, String> {
    for (i, row) in rows.iter().enumerate() {
        if row.len() != expect_cols {
            return Err(format!(
                "{name}[{i}]: expected {expect_cols} entries, got {}",
                row.len()
            ));
        }
    }
    let k = rows.len();
    Ok(DMatrix::from_fn(k, expect_cols, |i, j| rows[i][j]))
}

/// Quadratic objective data `(M, v, c)` as read from the file.
type QuadraticParts = (DMatrix<f64>, DVector<f64>, f64);

/// Objective plus its ambient dimension and optional graph/quadratic data.
type BuiltObjective = (
    Arc<dyn Objective>,
    usize,
    Option<DMatrix<f64>>,
    Option<QuadraticParts>,
);

/// Reads and validates a problem file; every failure names the offending
/// field.
pub fn parse_problem(path: &Path) -> Result<(ProblemFile, LoadedProblem), String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let spec: ProblemFile =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let loaded = load(&spec)?;
    Ok((spec, loaded))
}

pub fn load(spec: &ProblemFile) -> Result<LoadedProblem, String> {
    // Objective and ambient dimension.
    let (objective, d, adjacency, quadratic): BuiltObjective = match &spec.objective {
        ObjectiveSpec::Quadratic { m, v, c } => {
            let d = m.len();
            if d == 0 {
                return Err("objective.m: matrix must be non-empty".into());
            }
            check_finite_matrix("objective.m", m)?;
            check_finite_vector("objective.v", v)?;
            if !c.is_finite() {
                return Err("objective.c: expected a finite number".into());
            }
            let mat = to_matrix("objective.m", m, d)?;
            if v.len() != d {
                return Err(format!("objective.v: expected {d} entries, got {}", v.len()));
            }
            let vec = DVector::from_row_slice(v);
            let quad = Quadratic::new(mat.clone(), vec.clone(), *c)
                .map_err(|e| format!("objective: {e}"))?;
            (Arc::new(quad), d, None, Some((mat, vec, *c)))
        }
        ObjectiveSpec::GraphPartition { adjacency, er } => {
            let adj = match (adjacency, er) {
                (Some(rows), None) => {
                    let n = rows.len();
                    if n == 0 {
                        return Err("objective.adjacency: matrix must be non-empty".into());
                    }
                    check_finite_matrix("objective.adjacency", rows)?;
                    to_matrix("objective.adjacency", rows, n)?
                }
                (None, Some(er)) => erdos_renyi(&ErConfig {
                    n: er.n,
                    p: er.p,
                    seed: er.seed,
                })
                .map_err(|e| format!("objective.er: {e}"))?,
                _ => {
                    return Err(
                        "objective: graph_partition needs exactly one of adjacency | er".into(),
                    )
                }
            };
            if (&adj - adj.transpose()).amax() > 0.0 {
                return Err("objective.adjacency: matrix must be symmetric".into());
            }
            let n = adj.nrows();
            let obj = GraphPartition::new(adj.clone()).map_err(|e| format!("objective: {e}"))?;
            (Arc::new(obj), n, Some(adj), None)
        }
        ObjectiveSpec::RotatedSaddle { dim } => {
            if *dim == 0 {
                return Err("objective.dim: must be >= 1".into());
            }
            (Arc::new(RotatedSaddle::new(*dim)), *dim, None, None)
        }
        ObjectiveSpec::CubicMix { dim } => {
            if *dim == 0 {
                return Err("objective.dim: must be >= 1".into());
            }
            (Arc::new(CubicMix::new(*dim)), *dim, None, None)
        }
    };

    // Constraints.
    check_finite_matrix("constraints.a", &spec.constraints.a)?;
    check_finite_vector("constraints.b", &spec.constraints.b)?;
    let k = spec.constraints.a.len();
    if spec.constraints.b.len() != k {
        return Err(format!(
            "constraints.b: expected k={k} entries, got {}",
            spec.constraints.b.len()
        ));
    }
    let a = to_matrix("constraints.a", &spec.constraints.a, d)?;
    let b = DVector::from_row_slice(&spec.constraints.b);
    let polyhedron = Polyhedron::new(a, b).map_err(|e| format!("constraints: {e}"))?;

    // Smoothness, noise, run.
    if !spec.smoothness.l.is_finite() || spec.smoothness.l < 0.0 {
        return Err("smoothness.l: expected a finite non-negative number".into());
    }
    if let Some(rho) = spec.smoothness.rho {
        if !rho.is_finite() || rho < 0.0 {
            return Err("smoothness.rho: expected a finite non-negative number".into());
        }
    }
    if !spec.noise.sigma.is_finite() || spec.noise.sigma < 0.0 {
        return Err("noise.sigma: expected a finite non-negative number".into());
    }
    if !spec.run.delta.is_finite() || spec.run.delta <= 0.0 {
        return Err("run.delta: expected a finite positive number".into());
    }
    if let Some(r) = spec.run.r {
        if !r.is_finite() || r <= 0.0 {
            return Err("run.r: expected a finite positive number".into());
        }
    }
    if !spec.run.xi.is_finite() || spec.run.xi <= 0.0 {
        return Err("run.xi: expected a finite positive number".into());
    }
    check_finite_vector("run.x0", &spec.run.x0)?;
    if spec.run.x0.len() != d {
        return Err(format!("run.x0: expected {d} entries, got {}", spec.run.x0.len()));
    }

    // r (when given) pins the model radius and wins over smoothness.rho.
    let rho = match (spec.run.r, spec.smoothness.rho) {
        (Some(r), _) => spec.run.delta / (r * r * r),
        (None, Some(rho)) if rho > 0.0 => rho,
        (None, _) => {
            return Err("smoothness.rho: a positive rho (or run.r) is required".into());
        }
    };

    Ok(LoadedProblem {
        objective,
        polyhedron,
        adjacency,
        quadratic,
        l: spec.smoothness.l,
        rho,
        sigma: spec.noise.sigma,
        delta: spec.run.delta,
        r: spec.run.r,
        xi: spec.run.xi,
        seed: spec.run.seed,
        x0: DVector::from_row_slice(&spec.run.x0),
        max_outer_iters: spec.run.max_outer_iters,
    })
}
