//! Dense convex quadratic programming with inequality constraints.
//!
//! Solves `min 1/2 z'Hz + f'z  s.t.  A z <= b` for small dense problems by a
//! dual active-set method in the Goldfarb-Idnani family: start at the
//! unconstrained minimum, repeatedly add the most violated constraint, and
//! drop blocking constraints as their multipliers hit zero. `H` is factored
//! once per solve by Cholesky; every linear solve reuses the factor. An
//! optional warm start biases the order in which violated constraints enter,
//! which lets a receding-horizon caller reuse the previous active set.
//!
//! [`solve_by_enumeration`] is an exhaustive reference solver over candidate
//! active sets, exponential in the constraint count and intended for
//! cross-checking on small problems.

use nalgebra::{Cholesky, DMatrix, DVector};
use thiserror::Error;

/// Violation / pivot tolerance of the active-set loop.
const ACTIVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QpError {
    #[error("Hessian is not symmetric within tolerance")]
    AsymmetricHessian,
    #[error("Hessian is not positive definite")]
    NotPositiveDefinite,
    #[error("problem dimensions are inconsistent")]
    DimensionMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    /// KKT point found within tolerance.
    Solved,
    /// Active-set change budget `3 (n + m)` exhausted; the iterate is the
    /// best one reached and should be treated as unreliable.
    MaxIterations,
    /// No feasible point exists within tolerance.
    Infeasible,
}

/// `min 1/2 z'Hz + f'z  s.t.  A_in z <= b_in` with symmetric positive
/// definite `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub h: DMatrix<f64>,
    pub f: DVector<f64>,
    pub a_in: DMatrix<f64>,
    pub b_in: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub z: DVector<f64>,
    /// Inequality multipliers; zero off the active set.
    pub lambda: DVector<f64>,
    /// Indices of binding constraints, in the order they entered.
    pub active_set: Vec<usize>,
    /// Number of active-set changes performed.
    pub iterations: usize,
    pub status: QpStatus,
}

impl QpProblem {
    pub fn new(
        h: DMatrix<f64>,
        f: DVector<f64>,
        a_in: DMatrix<f64>,
        b_in: DVector<f64>,
    ) -> Result<Self, QpError> {
        let n = f.len();
        let m = b_in.len();
        if n == 0
            || h.nrows() != n
            || h.ncols() != n
            || a_in.nrows() != m
            || (m > 0 && a_in.ncols() != n)
        {
            return Err(QpError::DimensionMismatch);
        }
        let scale = h.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (h[(i, j)] - h[(j, i)]).abs() > 1e-12 * scale {
                    return Err(QpError::AsymmetricHessian);
                }
            }
        }
        Ok(Self { h, f, a_in, b_in })
    }

    pub fn num_variables(&self) -> usize {
        self.f.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.b_in.len()
    }

    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        0.5 * (&self.h * z).dot(z) + self.f.dot(z)
    }

    /// Solves the problem. `warm_start` is a priority list of constraint
    /// indices to try entering first, normally the active set returned by a
    /// previous solve of a nearby problem.
    pub fn solve(&self, warm_start: Option<&[usize]>) -> Result<QpSolution, QpError> {
        let n = self.num_variables();
        let m = self.num_constraints();
        let max_changes = 3 * (n + m);
        let chol = Cholesky::new(self.h.clone()).ok_or(QpError::NotPositiveDefinite)?;

        let mut z = -chol.solve(&self.f);
        let mut active: Vec<usize> = Vec::new();
        let mut lam_active: Vec<f64> = Vec::new();
        let mut changes = 0usize;

        if m == 0 {
            return Ok(QpSolution {
                z,
                lambda: DVector::zeros(0),
                active_set: active,
                iterations: 0,
                status: QpStatus::Solved,
            });
        }

        let row_norm: Vec<f64> = (0..m).map(|i| self.a_in.row(i).norm().max(1e-300)).collect();
        let mut warm: Vec<usize> = warm_start
            .map(|w| {
                let mut seen = vec![false; m];
                w.iter()
                    .copied()
                    .filter(|&i| i < m && !std::mem::replace(&mut seen[i], true))
                    .collect()
            })
            .unwrap_or_default();
        let mut warm_cursor = 0usize;

        loop {
            let slack = &self.a_in * &z - &self.b_in;
            let violated = |i: usize| !active.contains(&i) && slack[i] / row_norm[i] > ACTIVE_TOL;

            let mut p = None;
            while warm_cursor < warm.len() {
                let cand = warm[warm_cursor];
                warm_cursor += 1;
                if violated(cand) {
                    p = Some(cand);
                    break;
                }
            }
            if p.is_none() {
                warm.clear();
                let mut worst = ACTIVE_TOL;
                for i in 0..m {
                    if active.contains(&i) {
                        continue;
                    }
                    let sn = slack[i] / row_norm[i];
                    if sn > worst {
                        worst = sn;
                        p = Some(i);
                    }
                }
            }
            let Some(p) = p else {
                let mut lambda = DVector::zeros(m);
                for (&i, &li) in active.iter().zip(lam_active.iter()) {
                    lambda[i] = li;
                }
                return Ok(QpSolution {
                    z,
                    lambda,
                    active_set: active,
                    iterations: changes,
                    status: QpStatus::Solved,
                });
            };

            let ap = self.a_in.row(p).transpose();
            let mut u = 0.0;
            loop {
                if changes >= max_changes {
                    let mut lambda = DVector::zeros(m);
                    for (&i, &li) in active.iter().zip(lam_active.iter()) {
                        lambda[i] = li;
                    }
                    return Ok(QpSolution {
                        z,
                        lambda,
                        active_set: active,
                        iterations: changes,
                        status: QpStatus::MaxIterations,
                    });
                }

                // Step direction in primal space and multiplier space for
                // adding constraint p against the current working set.
                let hinv_ap = chol.solve(&ap);
                let (r, dz) = if active.is_empty() {
                    (DVector::zeros(0), -&hinv_ap)
                } else {
                    let k = active.len();
                    let mut aw = DMatrix::zeros(k, n);
                    for (row, &ci) in active.iter().enumerate() {
                        aw.row_mut(row).copy_from(&self.a_in.row(ci));
                    }
                    let hinv_awt = chol.solve(&aw.transpose());
                    let schur = &aw * &hinv_awt;
                    let rhs = &aw * &hinv_ap;
                    let Some(r) = schur.lu().solve(&rhs) else {
                        return Ok(QpSolution {
                            z,
                            lambda: DVector::zeros(m),
                            active_set: active,
                            iterations: changes,
                            status: QpStatus::Infeasible,
                        });
                    };
                    let dz = -(&hinv_ap - &hinv_awt * &r);
                    (r, dz)
                };

                let denom = -ap.dot(&dz);
                let viol = ap.dot(&z) - self.b_in[p];
                let t2 = if denom > ACTIVE_TOL { viol / denom } else { f64::INFINITY };
                let mut t1 = f64::INFINITY;
                let mut drop_idx = None;
                for (k_i, (&li, &rk)) in lam_active.iter().zip(r.iter()).enumerate() {
                    if rk > ACTIVE_TOL {
                        let tk = li / rk;
                        if tk < t1 {
                            t1 = tk;
                            drop_idx = Some(k_i);
                        }
                    }
                }

                if !t1.is_finite() && !t2.is_finite() {
                    return Ok(QpSolution {
                        z,
                        lambda: DVector::zeros(m),
                        active_set: active,
                        iterations: changes,
                        status: QpStatus::Infeasible,
                    });
                }

                let t = t1.min(t2);
                z += &dz * t;
                for (li, &rk) in lam_active.iter_mut().zip(r.iter()) {
                    *li -= t * rk;
                }
                u += t;
                changes += 1;
                if t2 <= t1 {
                    active.push(p);
                    lam_active.push(u);
                    break;
                } else {
                    let k_i = drop_idx.expect("finite t1 implies a blocking constraint");
                    active.remove(k_i);
                    lam_active.remove(k_i);
                }
            }
        }
    }
}

/// Exhaustive reference solver: solves the equality-constrained subproblem
/// for every candidate active set, keeps KKT points with nonnegative
/// multipliers that are primal feasible, and returns the best objective
/// with its minimizer. `None` means no candidate was feasible. Exponential
/// in the constraint count; callers must keep `m <= 20`.
pub fn solve_by_enumeration(problem: &QpProblem) -> Option<(f64, DVector<f64>)> {
    let n = problem.num_variables();
    let m = problem.num_constraints();
    assert!(m <= 20, "enumeration reference is limited to 20 constraints");

    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1u32 << m) {
        let k = mask.count_ones() as usize;
        if k > n {
            continue;
        }
        let working: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();

        let mut kkt = DMatrix::zeros(n + k, n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&problem.h);
        let mut rhs = DVector::zeros(n + k);
        rhs.rows_mut(0, n).copy_from(&(-&problem.f));
        for (row, &ci) in working.iter().enumerate() {
            for col in 0..n {
                kkt[(n + row, col)] = problem.a_in[(ci, col)];
                kkt[(col, n + row)] = problem.a_in[(ci, col)];
            }
            rhs[n + row] = problem.b_in[ci];
        }

        let Some(sol) = kkt.lu().solve(&rhs) else {
            continue;
        };
        let z = sol.rows(0, n).into_owned();
        if sol.rows(n, k).iter().any(|&l| l < -1e-9) {
            continue;
        }
        if m > 0 {
            let slack = &problem.a_in * &z - &problem.b_in;
            if slack.iter().any(|&s| s > 1e-8) {
                continue;
            }
        }
        let obj = problem.objective(&z);
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, z));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(rng: &mut ChaCha8Rng, n: usize, m: usize) -> QpProblem {
        let q = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let h = &q * q.transpose() + DMatrix::identity(n, n) * n as f64;
        let f = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let a = DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
        let zf = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let b = &a * &zf + DVector::from_fn(m, |_, _| rng.gen_range(0.01..1.0));
        QpProblem::new(h, f, a, b).unwrap()
    }

    #[test]
    fn unconstrained_minimizer() {
        let p = QpProblem::new(
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![-1.0, -1.0]),
            DMatrix::zeros(0, 2),
            DVector::zeros(0),
        )
        .unwrap();
        let sol = p.solve(None).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert_eq!(sol.iterations, 0);
        assert!(sol.active_set.is_empty());
        assert_relative_eq!(sol.z, DVector::from_vec(vec![1.0, 1.0]), epsilon = 1e-12);
    }

    #[test]
    fn scalar_bound_becomes_active() {
        let p = QpProblem::new(
            DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, -2.0),
            DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, 1.0),
        )
        .unwrap();
        let sol = p.solve(None).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert_eq!(sol.active_set, vec![0]);
        assert_relative_eq!(sol.z[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(sol.lambda[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn contradictory_bounds_are_reported_infeasible() {
        // z <= 0 together with z >= 1.
        let p = QpProblem::new(
            DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, 0.0),
            DMatrix::from_vec(2, 1, vec![1.0, -1.0]),
            DVector::from_vec(vec![0.0, -1.0]),
        )
        .unwrap();
        let sol = p.solve(None).unwrap();
        assert_eq!(sol.status, QpStatus::Infeasible);
    }

    #[test]
    fn rejects_malformed_problems() {
        let err = QpProblem::new(
            DMatrix::from_vec(2, 2, vec![1.0, 0.5, 0.0, 1.0]),
            DVector::zeros(2),
            DMatrix::zeros(0, 2),
            DVector::zeros(0),
        )
        .unwrap_err();
        assert_eq!(err, QpError::AsymmetricHessian);

        let err = QpProblem::new(
            DMatrix::identity(2, 2),
            DVector::zeros(3),
            DMatrix::zeros(0, 2),
            DVector::zeros(0),
        )
        .unwrap_err();
        assert_eq!(err, QpError::DimensionMismatch);

        let indefinite = QpProblem::new(
            DMatrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, -1.0]),
            DVector::zeros(2),
            DMatrix::zeros(0, 2),
            DVector::zeros(0),
        )
        .unwrap();
        assert_eq!(indefinite.solve(None).unwrap_err(), QpError::NotPositiveDefinite);
    }

    #[test]
    fn random_problems_match_enumeration_and_satisfy_kkt() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..500 {
            let n = rng.gen_range(2..=8);
            let m = rng.gen_range(1..=12);
            let p = random_problem(&mut rng, n, m);
            let sol = p.solve(None).unwrap();
            assert_eq!(sol.status, QpStatus::Solved);

            let (oracle_obj, _) = solve_by_enumeration(&p).expect("constructed feasible");
            let obj = p.objective(&sol.z);
            assert!(
                (obj - oracle_obj).abs() <= 1e-7 * (1.0 + oracle_obj.abs()),
                "objective {obj} vs enumeration {oracle_obj}"
            );

            let stationarity = (&p.h * &sol.z + &p.f + p.a_in.transpose() * &sol.lambda).norm();
            assert!(stationarity <= 1e-8 * (1.0 + p.f.norm()));
            let slack = &p.a_in * &sol.z - &p.b_in;
            for i in 0..m {
                assert!(slack[i] <= 1e-9, "constraint {i} violated by {}", slack[i]);
                assert!(sol.lambda[i] >= 0.0);
                assert!((sol.lambda[i] * slack[i]).abs() <= 1e-8);
                if !sol.active_set.contains(&i) {
                    assert_eq!(sol.lambda[i], 0.0);
                }
            }
        }
    }

    #[test]
    fn warm_start_is_never_slower_on_perturbed_problems() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..200 {
            let n = rng.gen_range(2..=8);
            let m = rng.gen_range(1..=12);
            let p = random_problem(&mut rng, n, m);
            let base = p.solve(None).unwrap();
            assert_eq!(base.status, QpStatus::Solved);

            let noise: DVector<f64> = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let scale = 0.01 * p.f.norm() / noise.norm().max(1e-300);
            let perturbed = QpProblem { f: &p.f + noise * scale, ..p.clone() };
            let cold = perturbed.solve(None).unwrap();
            let warm = perturbed.solve(Some(&base.active_set)).unwrap();
            assert_eq!(cold.status, QpStatus::Solved);
            assert_eq!(warm.status, QpStatus::Solved);
            assert!(
                warm.iterations <= cold.iterations,
                "warm {} > cold {}",
                warm.iterations,
                cold.iterations
            );
            let co = perturbed.objective(&cold.z);
            let wo = perturbed.objective(&warm.z);
            assert!((co - wo).abs() <= 1e-9 * (1.0 + co.abs()));
        }
    }

    #[test]
    fn repeated_solves_are_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let p = random_problem(&mut rng, 6, 10);
        let a = p.solve(None).unwrap();
        let b = p.solve(None).unwrap();
        assert_eq!(a, b);
    }
}
