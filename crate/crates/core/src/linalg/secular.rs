//! Root finding for the secular equation `sum_i v_i^2 / (mu - l_i)^2 = r^2`.
//!
//! The roots are the Lagrange multipliers of boundary critical points of a
//! quadratic over a sphere of radius `r`, written in the eigenbasis of the
//! quadratic term. Instead of expanding into a degree-2m polynomial (whose
//! coefficients are hopelessly ill-conditioned past a couple dozen poles),
//! the solver brackets roots per pole interval:
//!
//! * `w(mu)` is strictly convex between consecutive poles and diverges to
//!   `+inf` at both ends, so each open interval holds 0, 1 or 2 roots split
//!   by the interval's unique minimizer of `w`;
//! * the two unbounded outer intervals are monotone with limits `+inf` at
//!   the pole and `0` at infinity, so each holds exactly one root.
//!
//! Minimizers and roots are located by bisection (on `w'` and `w - r^2`
//! respectively) followed by a few guarded Newton steps.

use nalgebra::DVector;

/// One merged pole of `w`: position and total weight `sum v_i^2`.
#[derive(Debug, Clone, Copy)]
struct Pole {
    at: f64,
    weight2: f64,
}

fn w(poles: &[Pole], mu: f64) -> f64 {
    poles
        .iter()
        .map(|p| {
            let g = mu - p.at;
            p.weight2 / (g * g)
        })
        .sum()
}

fn w_prime(poles: &[Pole], mu: f64) -> f64 {
    poles
        .iter()
        .map(|p| {
            let g = mu - p.at;
            -2.0 * p.weight2 / (g * g * g)
        })
        .sum()
}

fn w_second(poles: &[Pole], mu: f64) -> f64 {
    poles
        .iter()
        .map(|p| {
            let g = mu - p.at;
            6.0 * p.weight2 / (g * g * g * g)
        })
        .sum()
}

/// Bisects `f` on a bracket with `f(lo) * f(hi) < 0` (by sign flags) down to
/// `width`, then returns the midpoint.
fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, lo_negative: bool, width: f64) -> f64 {
    for _ in 0..256 {
        if hi - lo <= width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // resolution limit of f64
        }
        let negative = f(mid) < 0.0;
        if negative == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A few Newton steps on `g = w - r^2`, confined to `[lo, hi]`; keeps the
/// iterate with the smallest residual.
fn polish_root(poles: &[Pole], mut mu: f64, lo: f64, hi: f64, r2: f64) -> f64 {
    let mut best = mu;
    let mut best_res = (w(poles, mu) - r2).abs();
    for _ in 0..6 {
        let dw = w_prime(poles, mu);
        if dw == 0.0 || !dw.is_finite() {
            break;
        }
        let res = w(poles, mu) - r2;
        let next = mu - res / dw;
        if !(next > lo && next < hi) {
            break;
        }
        mu = next;
        let res = (w(poles, mu) - r2).abs();
        if res < best_res {
            best_res = res;
            best = mu;
        }
    }
    best
}

/// All real solutions of `sum_i v_i^2 / (mu - lambda_i)^2 = r^2`, each
/// located to absolute precision `root_tol` (down to f64 resolution),
/// sorted ascending.
///
/// Components with `v_i == 0` are dropped: they contribute nothing and
/// their `lambda_i` is not a pole. Poles closer than `1e-12 * spread` are
/// merged, `spread = lambda_max - lambda_min + 1`. An all-zero `v` yields an
/// empty list.
pub fn secular_solve(lambdas: &[f64], v_tilde: &[f64], r: f64, root_tol: f64) -> Vec<f64> {
    assert_eq!(lambdas.len(), v_tilde.len(), "lambdas/v length mismatch");
    if r <= 0.0 {
        return Vec::new();
    }
    let mut participants: Vec<(f64, f64)> = lambdas
        .iter()
        .zip(v_tilde)
        .filter(|(_, &v)| v != 0.0)
        .map(|(&l, &v)| (l, v * v))
        .collect();
    if participants.is_empty() {
        return Vec::new();
    }
    participants.sort_by(|a, b| f64::total_cmp(&a.0, &b.0));

    let lo_pole = participants.first().unwrap().0;
    let hi_pole = participants.last().unwrap().0;
    let spread = hi_pole - lo_pole + 1.0;
    let merge_tol = 1e-12 * spread;

    let mut poles: Vec<Pole> = Vec::with_capacity(participants.len());
    for (l, w2) in participants {
        match poles.last_mut() {
            Some(last) if l - last.at <= merge_tol => last.weight2 += w2,
            _ => poles.push(Pole { at: l, weight2: w2 }),
        }
    }

    let r2 = r * r;
    let width = root_tol.max(0.0);
    let g = |mu: f64| w(&poles, mu) - r2;
    let mut roots = Vec::new();

    // Outer left: w increases from 0 to +inf on (-inf, poles[0]).
    {
        let pole = poles[0].at;
        let mut h = spread;
        let mut lo = pole - h;
        for _ in 0..2000 {
            if g(lo) < 0.0 {
                break;
            }
            h *= 2.0;
            lo = pole - h;
        }
        let mut h = spread;
        let mut hi = pole - h;
        for _ in 0..2000 {
            if g(hi) > 0.0 {
                break;
            }
            h *= 0.5;
            hi = pole - h;
        }
        if g(lo) < 0.0 && g(hi) > 0.0 {
            let root = bisect(&g, lo, hi, true, width);
            roots.push(polish_root(&poles, root, lo, hi, r2));
        }
    }

    // Interior intervals: strictly convex with +inf at both ends.
    for j in 0..poles.len().saturating_sub(1) {
        let left = poles[j].at;
        let right = poles[j + 1].at;
        let gap = right - left;

        // Bracket the minimizer via the sign of w'.
        let mut h = 0.25 * gap;
        let mut a = left + h;
        let mut found_a = false;
        for _ in 0..2000 {
            if w_prime(&poles, a) < 0.0 {
                found_a = true;
                break;
            }
            h *= 0.5;
            a = left + h;
        }
        let mut h = 0.25 * gap;
        let mut b = right - h;
        let mut found_b = false;
        for _ in 0..2000 {
            if w_prime(&poles, b) > 0.0 {
                found_b = true;
                break;
            }
            h *= 0.5;
            b = right - h;
        }
        if !(found_a && found_b && a < b) {
            continue; // gap at f64 resolution; no representable interior
        }
        let wp = |mu: f64| w_prime(&poles, mu);
        let mut mu_min = bisect(&wp, a, b, true, (width * 1e-2).max(f64::EPSILON * gap));
        for _ in 0..4 {
            let d2 = w_second(&poles, mu_min);
            if d2 <= 0.0 || !d2.is_finite() {
                break;
            }
            let next = mu_min - w_prime(&poles, mu_min) / d2;
            if next > a && next < b {
                mu_min = next;
            } else {
                break;
            }
        }
        let w_min = w(&poles, mu_min);
        if w_min > r2 {
            continue;
        }

        // Left root in (left, mu_min]: g decreases from +inf to w_min - r2.
        {
            let mut h = mu_min - left;
            let mut lo = left + 0.5 * h;
            for _ in 0..2000 {
                if g(lo) > 0.0 {
                    break;
                }
                h *= 0.5;
                lo = left + 0.5 * h;
            }
            if g(lo) > 0.0 {
                let root = bisect(&g, lo, mu_min, false, width);
                roots.push(polish_root(&poles, root, lo, mu_min, r2));
            }
        }
        // Right root in [mu_min, right).
        {
            let mut h = right - mu_min;
            let mut hi = right - 0.5 * h;
            for _ in 0..2000 {
                if g(hi) > 0.0 {
                    break;
                }
                h *= 0.5;
                hi = right - 0.5 * h;
            }
            if g(hi) > 0.0 {
                let root = bisect(&g, mu_min, hi, true, width);
                roots.push(polish_root(&poles, root, mu_min, hi, r2));
            }
        }
    }

    // Outer right: w decreases from +inf to 0 on (poles[last], +inf).
    {
        let pole = poles[poles.len() - 1].at;
        let mut h = spread;
        let mut lo = pole + h;
        for _ in 0..2000 {
            if g(lo) > 0.0 {
                break;
            }
            h *= 0.5;
            lo = pole + h;
        }
        let mut h = spread;
        let mut hi = pole + h;
        for _ in 0..2000 {
            if g(hi) < 0.0 {
                break;
            }
            h *= 2.0;
            hi = pole + h;
        }
        if g(lo) > 0.0 && g(hi) < 0.0 {
            let root = bisect(&g, lo, hi, false, width);
            roots.push(polish_root(&poles, root, lo, hi, r2));
        }
    }

    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= merge_tol.max(width));
    roots
}

/// The point `y_i = v_i / (mu - lambda_i)` for a secular root `mu`.
///
/// Components with `v_i == 0` are zero. Returns `None` when `mu` sits inside
/// the guard band of a participating pole — closer than
/// `max(|v_i| / r - root_tol, min_gap)` — since the coordinate would then be
/// dominated by root error.
pub fn candidate_point(
    lambdas: &DVector<f64>,
    v_tilde: &DVector<f64>,
    mu: f64,
    r: f64,
    root_tol: f64,
    min_gap: f64,
) -> Option<DVector<f64>> {
    let m = lambdas.len();
    let mut y = DVector::<f64>::zeros(m);
    for i in 0..m {
        if v_tilde[i] == 0.0 {
            continue;
        }
        let gap = mu - lambdas[i];
        let guard = (v_tilde[i].abs() / r - root_tol).max(min_gap);
        if gap.abs() < guard || gap == 0.0 {
            return None;
        }
        y[i] = v_tilde[i] / gap;
    }
    Some(y)
}

/// Default root tolerance for the boundary solve: the accuracy the candidate
/// perturbation bound demands, capped at `root_scale * spread` (the cap
/// handles benign instances where the demanded accuracy would be loose).
#[allow(clippy::too_many_arguments)] // it is a formula, not a configuration surface
pub fn default_root_tol(
    root_scale: f64,
    spread: f64,
    delta: f64,
    theta_guard: f64,
    l: f64,
    c_abs: f64,
    d: usize,
    r: f64,
) -> f64 {
    let dd = d as f64;
    let denom = 40.0 * dd.sqrt() * (l * (dd + 2.0) * r.powi(3) + (c_abs + delta) * dd * r);
    let demanded = if denom > 0.0 {
        delta * theta_guard / denom
    } else {
        f64::INFINITY
    };
    (root_scale * spread).min(demanded).max(1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w_of(lambdas: &[f64], v: &[f64], mu: f64) -> f64 {
        lambdas
            .iter()
            .zip(v)
            .filter(|(_, &vi)| vi != 0.0)
            .map(|(&l, &vi)| vi * vi / ((mu - l) * (mu - l)))
            .sum()
    }

    /// Independent oracle: dense scan of w - r^2 with sign-change bisection
    /// refinement.
    fn dense_scan_roots(lambdas: &[f64], v: &[f64], r: f64, lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let g = |mu: f64| w_of(lambdas, v, mu) - r * r;
        let mut roots = Vec::new();
        let n = ((hi - lo) / step) as usize;
        let mut prev = g(lo);
        for i in 1..=n {
            let mu = lo + step * i as f64;
            let cur = g(mu);
            if prev.is_finite() && cur.is_finite() && prev * cur < 0.0 {
                let mut a = mu - step;
                let mut b = mu;
                for _ in 0..80 {
                    let mid = 0.5 * (a + b);
                    if g(a) * g(mid) <= 0.0 {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            prev = cur;
        }
        roots
    }

    #[test]
    fn single_pole_closed_form() {
        let roots = secular_solve(&[0.0], &[1.0], 2.0, 1e-12);
        assert_eq!(roots.len(), 2);
        assert!((roots[0] + 0.5).abs() < 1e-10);
        assert!((roots[1] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn outer_intervals_always_contribute() {
        let roots = secular_solve(&[1.5, -0.3, 0.2], &[0.4, 0.0, -0.7], 0.8, 1e-12);
        assert!(roots.len() >= 2);
        // one root beyond each extreme participating pole
        assert!(roots.first().unwrap() < &-0.3);
        assert!(roots.last().unwrap() > &1.5);
    }

    #[test]
    fn two_pole_instance_matches_dense_scan() {
        let lambdas = [1.0, -1.0];
        let v = [1.0, 1.0];
        let roots = secular_solve(&lambdas, &v, 1.0, 1e-12);
        let oracle = dense_scan_roots(&lambdas, &v, 1.0, -10.0, 10.0, 1e-5);
        assert_eq!(roots.len(), oracle.len());
        for (a, b) in roots.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-6, "root {a} vs oracle {b}");
        }
        // analytic check: mu^2 = 2 + sqrt(5)
        let expected = (2.0 + 5.0_f64.sqrt()).sqrt();
        assert!((roots[0] + expected).abs() < 1e-9);
        assert!((roots[1] - expected).abs() < 1e-9);
    }

    #[test]
    fn duplicate_poles_are_merged() {
        let a = secular_solve(&[1.0, 1.0 + 1e-15], &[1.0, 1.0], 2.0, 1e-12);
        let b = secular_solve(&[1.0], &[2.0_f64.sqrt()], 2.0, 1e-12);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn empty_v_yields_empty_list() {
        assert!(secular_solve(&[1.0, 2.0], &[0.0, 0.0], 1.0, 1e-12).is_empty());
        assert!(secular_solve(&[], &[], 1.0, 1e-12).is_empty());
    }

    #[test]
    fn roots_satisfy_residual_bound() {
        let lambdas = [2.0, 0.5, -1.0, -2.5];
        let v = [0.3, -0.9, 1.1, 0.2];
        let r = 1.3;
        let tol = 1e-11;
        let roots = secular_solve(&lambdas, &v, r, tol);
        assert!(roots.len() >= 2);
        for &mu in &roots {
            let res = (w_of(&lambdas, &v, mu) - r * r).abs();
            let wp: f64 = lambdas
                .iter()
                .zip(&v)
                .map(|(&l, &vi)| -2.0 * vi * vi / ((mu - l) * (mu - l) * (mu - l)))
                .sum();
            let wpp: f64 = lambdas
                .iter()
                .zip(&v)
                .map(|(&l, &vi)| 6.0 * vi * vi / (mu - l).powi(4))
                .sum();
            assert!(
                res <= wp.abs() * tol + 2.0 * wpp.abs() * tol * tol + 1e-9,
                "residual {res} too large at mu = {mu}"
            );
        }
    }

    #[test]
    fn candidate_point_matches_closed_form() {
        let y = candidate_point(
            &DVector::from_vec(vec![0.0]),
            &DVector::from_vec(vec![1.0]),
            0.5,
            2.0,
            1e-12,
            0.0,
        )
        .unwrap();
        assert!((y[0] - 2.0).abs() < 1e-12);
        assert!((y.norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_v_gives_zero_candidate() {
        let y = candidate_point(
            &DVector::from_vec(vec![1.0, -1.0]),
            &DVector::from_vec(vec![0.0, 0.0]),
            0.3,
            1.0,
            1e-12,
            0.0,
        )
        .unwrap();
        assert_eq!(y, DVector::zeros(2));
    }

    #[test]
    fn candidate_inside_guard_band_is_rejected() {
        // |mu - lambda| = 1e-3 but |v|/r = 1, so the guard fires.
        let y = candidate_point(
            &DVector::from_vec(vec![0.0]),
            &DVector::from_vec(vec![1.0]),
            1e-3,
            1.0,
            1e-12,
            0.0,
        );
        assert!(y.is_none());
    }

    #[test]
    fn candidate_norm_tracks_radius_within_propagation_bound() {
        let lambdas = vec![1.0, -1.0];
        let v = vec![1.0, 1.0];
        let r = 1.0;
        let tol = 1e-10;
        let roots = secular_solve(&lambdas, &v, r, tol);
        let min_v = 1.0;
        let bound = 10.0 * tol * r * r / min_v;
        for &mu in &roots {
            let y = candidate_point(
                &DVector::from_vec(lambdas.clone()),
                &DVector::from_vec(v.clone()),
                mu,
                r,
                tol,
                0.0,
            )
            .unwrap();
            assert!(
                (y.norm() - r).abs() <= bound,
                "norm {} vs r {} beyond bound {}",
                y.norm(),
                r,
                bound
            );
        }
    }
}
