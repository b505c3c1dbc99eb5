//! The outer loop: iterate escape steps from a feasible start until a
//! stationarity certificate (or an iteration/budget stop), recording the
//! trajectory.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;

use crate::escape::{houdini_escape_detailed, CaseLabel, EscapeOptions, EscapeOutcome, Tolerances};
use crate::oracle::OracleBundle;
use crate::polyhedron::Polyhedron;
use crate::rng::mix_seed;
use crate::Error;

/// Configuration of a full run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Decrease target per escape; the stationarity certificate is relative
    /// to this.
    pub delta: f64,
    /// Perturbation scale of the model builder.
    pub xi: f64,
    /// Run seed; all randomness derives from it.
    pub seed: u64,
    /// Outer-iteration cap.
    pub max_outer_iters: usize,
    /// Per-escape subset budget (see
    /// [`EscapeOutcome::SubsetBudgetExhausted`]). `None` is unlimited.
    pub max_subsets_per_escape: Option<u64>,
    pub tolerances: Tolerances,
}

impl RunConfig {
    pub fn new(delta: f64, seed: u64) -> Self {
        Self {
            delta,
            xi: 1e-8,
            seed,
            max_outer_iters: 100_000,
            max_subsets_per_escape: None,
            tolerances: Tolerances::default(),
        }
    }

    /// Outer-iteration cap from a lower bound hint on the objective:
    /// `ceil(10 (f(x0) - hint) / delta)`.
    pub fn outer_iters_from_hint(f0: f64, lower_hint: f64, delta: f64) -> usize {
        ((10.0 * (f0 - lower_hint) / delta).ceil().max(1.0)) as usize
    }
}

/// One row of a run's trajectory. Row 0 is the starting point; row `t > 0`
/// describes the state after the `t`-th escape attempt.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub iter: usize,
    pub x: DVector<f64>,
    pub f_value: f64,
    pub escaped: bool,
    pub case: Option<CaseLabel>,
    pub subset_size: Option<usize>,
    /// Cumulative stochastic-gradient calls after this iteration.
    pub gradient_calls: u64,
    /// Wall-clock of this iteration, milliseconds.
    pub wall_ms: f64,
}

/// Result of a full run.
#[derive(Debug, Clone)]
pub struct SospRun {
    pub point: DVector<f64>,
    pub trajectory: Vec<TrajectoryRecord>,
    /// True when the final escape call exhausted its enumeration and
    /// certified the point; false on iteration-cap or subset-budget stops.
    pub certificate: bool,
}

/// Iterates escape steps from `x0` until a certificate, the iteration cap,
/// or a subset-budget stop. `x0` may violate constraints by at most the
/// active tolerance (it is then projected); anything worse is rejected.
pub fn find_sosp(
    bundle: &OracleBundle,
    p: &Polyhedron,
    x0: &DVector<f64>,
    config: &RunConfig,
) -> Result<SospRun, Error> {
    if x0.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: x0.len(),
        });
    }
    let violation = p.max_violation(x0);
    let mut x = if violation == 0.0 {
        x0.clone()
    } else if violation <= config.tolerances.active {
        p.project(
            None,
            x0,
            config.tolerances.projection,
            p.default_projection_iters(),
        )?
    } else {
        return Err(Error::Infeasible { violation });
    };

    let opts = EscapeOptions {
        tolerances: config.tolerances,
        max_subsets: config.max_subsets_per_escape,
    };

    let mut f_x = bundle.value(&x);
    let mut trajectory = vec![TrajectoryRecord {
        iter: 0,
        x: x.clone(),
        f_value: f_x,
        escaped: false,
        case: None,
        subset_size: None,
        gradient_calls: bundle.gradient_calls(),
        wall_ms: 0.0,
    }];
    let mut certificate = false;

    for t in 1..=config.max_outer_iters {
        let started = Instant::now();
        let (outcome, _) = houdini_escape_detailed(
            bundle,
            p,
            &x,
            config.delta,
            config.xi,
            mix_seed(config.seed, t as u64),
            &opts,
        )?;
        let wall_ms = started.elapsed().as_secs_f64() * 1e3;
        match outcome {
            EscapeOutcome::Escaped(esc) => {
                f_x -= esc.decrease;
                x = esc.point;
                trajectory.push(TrajectoryRecord {
                    iter: t,
                    x: x.clone(),
                    f_value: f_x,
                    escaped: true,
                    case: Some(esc.case),
                    subset_size: Some(esc.subset.len()),
                    gradient_calls: bundle.gradient_calls(),
                    wall_ms,
                });
            }
            EscapeOutcome::Sosp => {
                certificate = true;
                trajectory.push(TrajectoryRecord {
                    iter: t,
                    x: x.clone(),
                    f_value: f_x,
                    escaped: false,
                    case: None,
                    subset_size: None,
                    gradient_calls: bundle.gradient_calls(),
                    wall_ms,
                });
                break;
            }
            EscapeOutcome::SubsetBudgetExhausted { .. } => {
                trajectory.push(TrajectoryRecord {
                    iter: t,
                    x: x.clone(),
                    f_value: f_x,
                    escaped: false,
                    case: None,
                    subset_size: None,
                    gradient_calls: bundle.gradient_calls(),
                    wall_ms,
                });
                break;
            }
        }
    }

    Ok(SospRun {
        point: x,
        trajectory,
        certificate,
    })
}

/// Writes a trajectory as CSV with the schema
/// `iter,f_value,escaped,case_label,subset_size,grad_calls,wall_ms`.
pub fn write_trajectory_csv(path: &Path, trajectory: &[TrajectoryRecord]) -> Result<(), Error> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "iter,f_value,escaped,case_label,subset_size,grad_calls,wall_ms")?;
    for rec in trajectory {
        writeln!(
            out,
            "{},{},{},{},{},{},{:.3}",
            rec.iter,
            rec.f_value,
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Quadratic;
    use nalgebra::DMatrix;
    use std::sync::Arc;

    fn box_polyhedron(d: usize, half: f64) -> Polyhedron {
        let mut a = DMatrix::<f64>::zeros(2 * d, d);
        for i in 0..d {
            a[(i, i)] = 1.0;
            a[(d + i, i)] = -1.0;
        }
        Polyhedron::new(a, DVector::from_element(2 * d, half)).unwrap()
    }

    #[test]
    fn convex_quadratic_certifies_in_one_iteration() {
        // f = ||x - c||^2 / 2 started at its minimizer.
        let c = DVector::from_vec(vec![0.2, -0.1]);
        let obj = Quadratic::new(
            DMatrix::identity(2, 2),
            -c.clone(),
            0.5 * c.norm_squared(),
        )
        .unwrap();
        let bundle = OracleBundle::new(Arc::new(obj), 1.0, 10.0, 0.0);
        let p = box_polyhedron(2, 1.0);
        let config = RunConfig::new(0.01, 4);
        let run = find_sosp(&bundle, &p, &c, &config).unwrap();
        assert!(run.certificate);
        assert_eq!(run.trajectory.len(), 2); // start row + certificate row
        assert_eq!(run.point, c);
    }

    #[test]
    fn concave_quadratic_walks_outward_with_strict_decreases() {
        let obj = Quadratic::homogeneous(DMatrix::<f64>::identity(2, 2) * -1.0).unwrap();
        let bundle = OracleBundle::new(Arc::new(obj), 1.0, 3.0, 0.0);
        let p = box_polyhedron(2, 1.0);
        let config = RunConfig::new(0.003, 9);
        let run = find_sosp(&bundle, &p, &DVector::zeros(2), &config).unwrap();
        assert!(run.trajectory.len() > 2);
        let delta = config.delta;
        let mut escapes = 0;
        for pair in run.trajectory.windows(2) {
            if pair[1].escaped {
                assert!(
                    pair[0].f_value - pair[1].f_value > delta / 3.0,
                    "decrease too small between iters {} and {}",
                    pair[0].iter,
                    pair[1].iter
                );
                escapes += 1;
            }
            assert!(p.contains(&pair[1].x, 1e-8).unwrap());
        }
        let f0 = run.trajectory[0].f_value;
        let f_final = run.trajectory.last().unwrap().f_value;
        assert!(escapes as f64 <= 3.0 * (f0 - f_final) / delta + 1.0);
        // The walk ends certified at a box corner, where no feasible move
        // inside the model ball can decrease the objective by delta.
        assert!(run.certificate);
        assert!(run.point.iter().all(|&x| x.abs() >= 1.0 - 1e-9));
        assert!((f_final + 1.0).abs() <= 1e-9);
    }

    #[test]
    fn trajectories_are_deterministic() {
        let obj = Quadratic::homogeneous(DMatrix::<f64>::identity(3, 3) * -1.0).unwrap();
        let bundle_a = OracleBundle::new(Arc::new(obj.clone()), 1.0, 3.0, 0.0);
        let bundle_b = OracleBundle::new(Arc::new(obj), 1.0, 3.0, 0.0);
        let p = box_polyhedron(3, 1.0);
        let config = RunConfig::new(0.003, 123);
        let run_a = find_sosp(&bundle_a, &p, &DVector::zeros(3), &config).unwrap();
        let run_b = find_sosp(&bundle_b, &p, &DVector::zeros(3), &config).unwrap();
        assert_eq!(run_a.trajectory.len(), run_b.trajectory.len());
        for (ra, rb) in run_a.trajectory.iter().zip(&run_b.trajectory) {
            assert_eq!(ra.x, rb.x);
            assert_eq!(ra.f_value.to_bits(), rb.f_value.to_bits());
            assert_eq!(ra.gradient_calls, rb.gradient_calls);
        }
    }

    #[test]
    fn budget_accounting_matches_the_bundle_counter() {
        let obj = Quadratic::homogeneous(DMatrix::<f64>::identity(2, 2) * -1.0).unwrap();
        let bundle = OracleBundle::new(Arc::new(obj), 1.0, 3.0, 0.0);
        let p = box_polyhedron(2, 1.0);
        let config = RunConfig::new(0.003, 77);
        let run = find_sosp(&bundle, &p, &DVector::zeros(2), &config).unwrap();
        assert_eq!(
            run.trajectory.last().unwrap().gradient_calls,
            bundle.gradient_calls()
        );
        for pair in run.trajectory.windows(2) {
            assert!(pair[1].gradient_calls >= pair[0].gradient_calls);
        }
    }

    #[test]
    fn far_infeasible_starts_are_rejected() {
        let obj = Quadratic::homogeneous(DMatrix::identity(2, 2)).unwrap();
        let bundle = OracleBundle::new(Arc::new(obj), 1.0, 1.0, 0.0);
        let p = box_polyhedron(2, 1.0);
        let config = RunConfig::new(0.01, 1);
        let bad = DVector::from_vec(vec![5.0, 0.0]);
        assert!(matches!(
            find_sosp(&bundle, &p, &bad, &config),
            Err(Error::Infeasible { .. })
        ));
    }
}
