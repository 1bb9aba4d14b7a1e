//! Turnpike-static problem: minimize f0(x, u) subject to f(x, u) = 0 and
//! g(x, u) = d, solved by damped Newton on the Lagrange/KKT system. The
//! y-rate d = (y1 - y0)/T is supplied by the caller; the solver never sees T.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::calculus::{dyn_jacobians, hamiltonian_hessians, FdScheme};
use crate::error::{Error, Result};
use crate::linalg::{inf_norm, sym_eig_bounds, vec_inf_norm};
use crate::problem::ProblemDef;

pub const TOL_STATIC: f64 = 1e-10;
pub const INTERIOR_MARGIN: f64 = 1e-6;
const MAX_NEWTON_ITER: usize = 100;
const MAX_HALVINGS: usize = 25;
const DEDUP_TOL: f64 = 1e-6;

/// A solution of the turnpike-static problem. The implied turnpike path is
/// ybar(t) = y0 + t * d.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub x: DVector<f64>,
    pub u: DVector<f64>,
    pub px: DVector<f64>,
    pub py: DVector<f64>,
    /// Prescribed y-rate, equal to g(x, u) at convergence.
    pub d: DVector<f64>,
    pub static_cost: f64,
    pub kkt_residual: f64,
}

pub type Guess = (DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>);

fn kkt_residual(
    problem: &ProblemDef,
    x: &DVector<f64>,
    u: &DVector<f64>,
    px: &DVector<f64>,
    py: &DVector<f64>,
    d: &DVector<f64>,
    scheme: &FdScheme,
) -> Result<DVector<f64>> {
    let (n, m, p) = (problem.n, problem.m, problem.p);
    let jac = dyn_jacobians(problem, x, u, scheme)?;
    let mut r = DVector::zeros(2 * n + m + p);
    r.rows_mut(0, n)
        .copy_from(&(jac.fx.transpose() * px + jac.gx.transpose() * py - &jac.f0x));
    r.rows_mut(n, m)
        .copy_from(&(jac.fu.transpose() * px + jac.gu.transpose() * py - &jac.f0u));
    r.rows_mut(n + m, n).copy_from(&problem.f(x, u));
    if p > 0 {
        r.rows_mut(2 * n + m, p).copy_from(&(problem.g(x, u) - d));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteDynamics);
    }
    Ok(r)
}

/// Sensitivity matrix [[E1, E2^T], [E2, 0]] of the KKT system, assembled from
/// second derivatives of H and first derivatives of (f, g).
fn kkt_jacobian(
    problem: &ProblemDef,
    x: &DVector<f64>,
    u: &DVector<f64>,
    px: &DVector<f64>,
    py: &DVector<f64>,
    scheme: &FdScheme,
) -> Result<DMatrix<f64>> {
    let (n, m, p) = (problem.n, problem.m, problem.p);
    let hes = hamiltonian_hessians(problem, x, px, py, u)?;
    let jac = dyn_jacobians(problem, x, u, scheme)?;
    let dim = 2 * n + m + p;
    let mut j = DMatrix::zeros(dim, dim);
    j.view_mut((0, 0), (n, n)).copy_from(&hes.hxx);
    j.view_mut((0, n), (n, m)).copy_from(&hes.hxu);
    j.view_mut((n, 0), (m, n)).copy_from(&hes.hux);
    j.view_mut((n, n), (m, m)).copy_from(&hes.huu);
    // E2^T block.
    j.view_mut((0, n + m), (n, n)).copy_from(&jac.fx.transpose());
    j.view_mut((n, n + m), (m, n)).copy_from(&jac.fu.transpose());
    if p > 0 {
        j.view_mut((0, 2 * n + m), (n, p)).copy_from(&jac.gx.transpose());
        j.view_mut((n, 2 * n + m), (m, p)).copy_from(&jac.gu.transpose());
    }
    // E2 block.
    j.view_mut((n + m, 0), (n, n)).copy_from(&jac.fx);
    j.view_mut((n + m, n), (n, m)).copy_from(&jac.fu);
    if p > 0 {
        j.view_mut((2 * n + m, 0), (p, n)).copy_from(&jac.gx);
        j.view_mut((2 * n + m, n), (p, m)).copy_from(&jac.gu);
    }
    Ok(j)
}

/// Damped Newton on the KKT system from `guess`, with residual-norm halving
/// line search.
pub fn solve_static(problem: &ProblemDef, d: &DVector<f64>, guess: &Guess) -> Result<SteadyState> {
    let (n, m, p) = (problem.n, problem.m, problem.p);
    if d.len() != p {
        return Err(Error::InvalidParams(alloc::format!(
            "y-rate must have length {p}, got {}",
            d.len()
        )));
    }
    let scheme = FdScheme::first();
    let (mut x, mut u, mut px, mut py) = guess.clone();
    if x.len() != n || u.len() != m || px.len() != n || py.len() != p {
        return Err(Error::InvalidParams("guess dimensions do not match the problem".into()));
    }

    let mut res = kkt_residual(problem, &x, &u, &px, &py, d, &scheme)?;
    let mut res_norm = vec_inf_norm(&res);
    let mut iterations = 0;
    while res_norm > TOL_STATIC && iterations < MAX_NEWTON_ITER {
        let jac = kkt_jacobian(problem, &x, &u, &px, &py, &scheme)?;
        let step = jac.lu().solve(&(-&res)).ok_or(Error::SingularKkt)?;
        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..MAX_HALVINGS {
            let xt = &x + step.rows(0, n) * alpha;
            let ut = &u + step.rows(n, m) * alpha;
            let pxt = &px + step.rows(n + m, n) * alpha;
            let pyt = if p > 0 {
                &py + step.rows(2 * n + m, p) * alpha
            } else {
                py.clone()
            };
            match kkt_residual(problem, &xt, &ut, &pxt, &pyt, d, &scheme) {
                Ok(r) if vec_inf_norm(&r) < res_norm => {
                    res_norm = vec_inf_norm(&r);
                    res = r;
                    x = xt;
                    u = ut;
                    px = pxt;
                    py = pyt;
                    improved = true;
                    break;
                }
                _ => alpha *= 0.5,
            }
        }
        iterations += 1;
        if !improved {
            return Err(Error::NoConvergence { residual: res_norm, iterations });
        }
    }
    if res_norm > TOL_STATIC {
        return Err(Error::NoConvergence { residual: res_norm, iterations });
    }

    // The steady control must sit strictly inside the box.
    for i in 0..m {
        let margin = (u[i] - problem.control_lo[i]).min(problem.control_hi[i] - u[i]);
        if margin < INTERIOR_MARGIN {
            return Err(Error::AssumptionViolated { matrix: "steady control interiority", min_eig: margin });
        }
    }

    Ok(SteadyState {
        static_cost: problem.f0(&x, &u),
        kkt_residual: res_norm,
        d: d.clone(),
        x,
        u,
        px,
        py,
    })
}

/// Runs `solve_static` from every guess, deduplicates converged points and
/// sorts them by cost (ties broken by ascending x).
pub fn multistart_static(
    problem: &ProblemDef,
    d: &DVector<f64>,
    guesses: &[Guess],
) -> Result<Vec<SteadyState>> {
    if guesses.is_empty() {
        return Err(Error::InvalidParams("multistart grid is empty".into()));
    }
    let mut found: Vec<SteadyState> = Vec::new();
    let mut best_failure = f64::INFINITY;
    for guess in guesses {
        match solve_static(problem, d, guess) {
            Ok(s) => {
                if !found.iter().any(|t| vec_inf_norm(&(&t.x - &s.x)) <= DEDUP_TOL) {
                    found.push(s);
                }
            }
            Err(Error::NoConvergence { residual, .. }) => best_failure = best_failure.min(residual),
            Err(_) => {}
        }
    }
    if found.is_empty() {
        return Err(Error::NoConvergence { residual: best_failure, iterations: MAX_NEWTON_ITER });
    }
    found.sort_by(|a, b| {
        let tol = 1e-9 * (1.0 + a.static_cost.abs().max(b.static_cost.abs()));
        if (a.static_cost - b.static_cost).abs() <= tol {
            a.x.iter().partial_cmp(b.x.iter()).unwrap_or(core::cmp::Ordering::Equal)
        } else {
            a.static_cost.partial_cmp(&b.static_cost).unwrap_or(core::cmp::Ordering::Equal)
        }
    });
    Ok(found)
}

/// Equispaced multistart guesses: `points` values per x-coordinate over
/// [lo, hi], with (u, px, py) taken from the problem's default guess.
pub fn grid_guesses(problem: &ProblemDef, lo: f64, hi: f64, points: usize) -> Vec<Guess> {
    let (_, u0, px0, py0) = problem.static_guess.clone();
    let mut out = Vec::new();
    let mut idx = alloc::vec![0usize; problem.n];
    loop {
        let x = DVector::from_fn(problem.n, |i, _| {
            if points > 1 {
                lo + (hi - lo) * idx[i] as f64 / (points - 1) as f64
            } else {
                0.5 * (lo + hi)
            }
        });
        out.push((x, u0.clone(), px0.clone(), py0.clone()));
        // Odometer over the n-dimensional grid.
        let mut carry = true;
        for slot in idx.iter_mut() {
            if carry {
                *slot += 1;
                if *slot == points {
                    *slot = 0;
                } else {
                    carry = false;
                }
            }
        }
        if carry {
            break;
        }
    }
    out
}

/// Second-order screen: E1 (the Hessian of H in (x, u)) must be negative
/// semidefinite at a steady state that is a local minimum of the static
/// problem under the standing assumptions.
pub fn is_second_order(problem: &ProblemDef, steady: &SteadyState) -> Result<bool> {
    let hes = hamiltonian_hessians(problem, &steady.x, &steady.px, &steady.py, &steady.u)?;
    let (n, m) = (problem.n, problem.m);
    let mut e1 = DMatrix::zeros(n + m, n + m);
    e1.view_mut((0, 0), (n, n)).copy_from(&hes.hxx);
    e1.view_mut((0, n), (n, m)).copy_from(&hes.hxu);
    e1.view_mut((n, 0), (m, n)).copy_from(&hes.hux);
    e1.view_mut((n, n), (m, m)).copy_from(&hes.huu);
    let (_, max_eig) = sym_eig_bounds(&e1);
    Ok(max_eig <= 1e-8 * (1.0 + inf_norm(&e1)))
}
